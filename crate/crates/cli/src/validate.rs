use std::str::FromStr;

use anyhow::{bail, Context};
use cvtomo::crb::{closed_form_value, crossover_find, ClosedFormFamily};
use cvtomo::estimator::{ratio_moment_predict, RatioMoment};
use cvtomo::fock::{build_fock, random_mixed_state, weyl_moments};
use cvtomo::phase_space::{captured_mass, husimi_field, wigner_field, KernelKind, MomentKernelSet, PhaseGrid, PhasePoint};
use cvtomo::sampler::{derive_seed, het_cell_probabilities, sample_het_from, sample_uhom_from, substream, uhom_probabilities};
use cvtomo::{Method, StateFamily};

use crate::commands::numeric_bound;
use crate::config::ExperimentConfig;
use crate::table::{float, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Conventions,
    AppendixA,
    AppendixB,
    Crossovers,
    Dominance,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Conventions,
        Suite::AppendixA,
        Suite::AppendixB,
        Suite::Crossovers,
        Suite::Dominance,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Suite::Conventions => "conventions",
            Suite::AppendixA => "appendixA",
            Suite::AppendixB => "appendixB",
            Suite::Crossovers => "crossovers",
            Suite::Dominance => "dominance",
        }
    }
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s))
            .with_context(|| format!("unknown suite {s:?}"))
    }
}

pub const VALIDATE_HEADER: &str = "suite,check,value,reference,tolerance,pass";

/// One measured quantity against its reference.
struct Check {
    name: String,
    value: f64,
    reference: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn near(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            reference,
            tolerance,
            pass: (value - reference).abs() <= tolerance,
        }
    }

    fn relative(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        Check::near(name, value, reference, tolerance * reference.abs())
    }

    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            reference: limit,
            tolerance: 0.0,
            pass: value < limit,
        }
    }
}

/// Runs a suite; the flag is true when every check passed.
pub fn run(cfg: &ExperimentConfig, suite: Suite) -> anyhow::Result<(Table, bool)> {
    let checks = match suite {
        Suite::Conventions => conventions(cfg)?,
        Suite::AppendixA => appendix_a(cfg)?,
        Suite::AppendixB => appendix_b(cfg)?,
        Suite::Crossovers => crossovers()?,
        Suite::Dominance => dominance(cfg)?,
    };
    if checks.is_empty() {
        bail!("suite {} produced no checks", suite.label());
    }
    let mut table = Table::new(VALIDATE_HEADER);
    let mut all = true;
    for c in checks {
        all &= c.pass;
        table.push(
            vec![c.name.clone().into()],
            &[
                suite.label().to_string(),
                c.name,
                float(c.value),
                float(c.reference),
                float(c.tolerance),
                c.pass.to_string(),
            ],
        );
    }
    Ok((table, all))
}

fn conventions(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let vac = build_fock(0, 12)?;
    let k1 = MomentKernelSet::new(1)?;
    out.push(Check::near(
        "vacuum_het_m1_closed_form",
        closed_form_value(ClosedFormFamily::Fock(0), Method::Het, 1)?,
        2.0,
        1e-12,
    ));
    let grid = PhaseGrid::covering(&vac, 1, cfg.grid.points)?;
    out.push(Check::relative(
        "vacuum_het_m1_numeric",
        cvtomo::scrb_het_numeric(&vac, &k1, &grid)?.scalar_bound,
        2.0,
        cfg.validate.numeric_tolerance,
    ));
    let k2 = MomentKernelSet::new(2)?;
    let pt = PhasePoint::new(1.3, -0.4);
    out.push(Check::near("kernel_p_m2_x2", k2.eval(pt, KernelKind::P)[0], 1.3 * 1.3 - 0.5, 1e-12));
    out.push(Check::near(
        "weyl_fock1_x4",
        weyl_moments(&build_fock(1, 12)?, 4)?[0],
        15.0 / 4.0,
        1e-10,
    ));
    for m in 1..=4 {
        for method in [Method::Het, Method::Uhom, Method::BhomOpt] {
            let g = closed_form_value(ClosedFormFamily::Gaussian(1.0), method, m)?;
            let f = closed_form_value(ClosedFormFamily::Fock(0), method, m)?;
            out.push(Check::relative(format!("gaussian1_equals_fock0_{method}_m{m}"), g, f, 1e-12));
        }
    }
    let ratio = |m| -> anyhow::Result<f64> {
        Ok(closed_form_value(ClosedFormFamily::Fock(0), Method::Uhom, m)?
            / closed_form_value(ClosedFormFamily::Fock(0), Method::BhomOpt, m)?)
    };
    out.push(Check::near("vacuum_uhom_over_bhomopt_m2", ratio(2)?, 33.0 / 32.0, 1e-9));
    out.push(Check::near("vacuum_uhom_over_bhomopt_m4", ratio(4)?, 9879.0 / 9856.0, 1e-9));
    let unit = ExperimentConfig { eta: 1.0, ..cfg.clone() };
    for (i, family) in cfg.state_families().into_iter().enumerate() {
        let rho = family.build()?;
        let grid = PhaseGrid::covering(&rho, 0, cfg.grid.points)?;
        let tag = format!("s{i:02}_{}_{}", family.label(), family.params());
        out.push(Check::near(format!("{tag}_husimi_mass"), captured_mass(&grid, &husimi_field(&rho, &grid)), 1.0, 1e-4));
        out.push(Check::near(format!("{tag}_wigner_mass"), captured_mass(&grid, &wigner_field(&rho, &grid)), 1.0, 1e-4));
        let Some(cf_family) = family.closed_form_family() else { continue };
        for m in 1..=4 {
            for method in [Method::Het, Method::Uhom] {
                let num = numeric_bound(&unit, &rho, method, m)?.expect("quadrature route exists");
                let cf = closed_form_value(cf_family, method, m)?;
                out.push(Check::relative(
                    format!("{tag}_{method}_m{m}_numeric_vs_closed_form"),
                    num,
                    cf,
                    cfg.validate.numeric_tolerance,
                ));
            }
        }
    }
    Ok(out)
}

const DESIGNS: [[f64; 5]; 2] = [[0.1, 0.25, 0.4, 0.6, 0.85], [0.02, 0.5, 0.3, 0.9, 0.05]];

/// Ratio moments of binomial no-click data against Monte Carlo, within five
/// standard errors.
fn appendix_a(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Check>> {
    let reps = cfg.validate.ratio_replications;
    let pairs = [(0usize, 0usize), (1, 3), (2, 4)];
    let mut out = Vec::new();
    for (d, p) in DESIGNS.iter().enumerate() {
        for n0 in [100u64, 10_000] {
            let n0f = n0 as f64;
            let mut names = Vec::new();
            let mut preds = Vec::new();
            for l in 0..5 {
                names.push(format!("A1_l{l}"));
                preds.push(ratio_moment_predict(p, n0f, RatioMoment::A1 { l })?);
            }
            for &(l, lp) in &pairs {
                names.push(format!("A2_l{l}_l{lp}"));
                preds.push(ratio_moment_predict(p, n0f, RatioMoment::A2 { l, lp })?);
                names.push(format!("A9_l{l}_l{lp}"));
                preds.push(ratio_moment_predict(p, n0f, RatioMoment::A9 { l, lp })?);
            }
            let mut acc = vec![(0.0f64, 0.0f64); preds.len()];
            let base = derive_seed(cfg.seed, (d as u64) << 32 | n0);
            for r in 0..reps {
                let n = sample_uhom_from(p, n0, derive_seed(base, r as u64))?.counts;
                let total: f64 = n.iter().sum();
                if total == 0.0 {
                    bail!("appendixA: empty draw at N0 = {n0}");
                }
                let mut stats: Vec<f64> = n.iter().map(|v| v / total).collect();
                for &(l, lp) in &pairs {
                    stats.push(n[l] * n[lp] / (total * total));
                    stats.push((n[l] / n0f) * (n[lp] / n0f) / (total / n0f));
                }
                for (a, s) in acc.iter_mut().zip(stats) {
                    a.0 += s;
                    a.1 += s * s;
                }
            }
            let rf = reps as f64;
            for ((name, pred), (s, s2)) in names.into_iter().zip(preds).zip(acc) {
                let mean = s / rf;
                let var = ((s2 / rf - mean * mean) * rf / (rf - 1.0)).max(0.0);
                out.push(Check::near(
                    format!("design{d}_N0_{n0:05}_{name}"),
                    mean,
                    pred,
                    5.0 * (var / rf).sqrt(),
                ));
            }
        }
    }
    Ok(out)
}

/// Noise-model properties: independent UHOM nodes and the multinomial
/// covariance of HET cells.
fn appendix_b(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Check>> {
    let family = cfg
        .state_families()
        .into_iter()
        .next()
        .unwrap_or(StateFamily::Fock { n: 0 });
    let rho = family.build()?;
    let grid = PhaseGrid::covering(&rho, 1, 41)?;
    let reps = cfg.validate.correlation_replications;
    let rf = reps as f64;
    let center = grid.len() / 2;
    let nodes = [center, center + 1, center + 41, center - 5, center + 200];
    let mut out = Vec::new();

    let probs = uhom_probabilities(&rho, &grid, 1.0)?;
    let draws: Vec<Vec<f64>> = (0..reps)
        .map(|r| {
            sample_uhom_from(&probs, cfg.validate.correlation_events, derive_seed(cfg.seed, r as u64))
                .map(|rec| nodes.iter().map(|&l| rec.counts[l]).collect())
        })
        .collect::<cvtomo::Result<_>>()?;
    let limit = 5.0 / rf.sqrt();
    for a in 0..nodes.len() {
        for b in (a + 1)..nodes.len() {
            let xs: Vec<f64> = draws.iter().map(|d| d[a]).collect();
            let ys: Vec<f64> = draws.iter().map(|d| d[b]).collect();
            out.push(Check::below(
                format!("uhom_corr_node{}_node{}", nodes[a], nodes[b]),
                correlation(&xs, &ys).abs(),
                limit,
            ));
        }
    }

    let (cells, captured) = het_cell_probabilities(&rho, &grid)?;
    let n = cfg.sampler.het_events;
    let het: Vec<Vec<f64>> = (0..reps)
        .map(|r| {
            sample_het_from(&cells, captured, n, derive_seed(cfg.seed ^ 0x5bd1_e995, r as u64))
                .map(|rec| nodes.iter().map(|&l| rec.counts[l]).collect())
        })
        .collect::<cvtomo::Result<_>>()?;
    let nf = n as f64;
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 3)] {
        let (pa, pb) = (cells[nodes[a]], cells[nodes[b]]);
        let prods: Vec<f64> = het.iter().map(|d| (d[a] - nf * pa) * (d[b] - nf * pb)).collect();
        let mean = prods.iter().sum::<f64>() / rf;
        let var = prods.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rf - 1.0);
        out.push(Check::near(
            format!("het_cov_node{}_node{}", nodes[a], nodes[b]),
            mean,
            -nf * pa * pb,
            5.0 * (var / rf).sqrt(),
        ));
    }
    Ok(out)
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn crossovers() -> anyhow::Result<Vec<Check>> {
    let cases = [
        ("m2_BHOMOPT_HET", 2, (Method::BhomOpt, Method::Het), 1.262, 1e-3),
        ("m4_BHOMOPT_HET", 4, (Method::BhomOpt, Method::Het), 1.017, 1e-3),
        ("m2_UHOM_BHOMOPT", 2, (Method::Uhom, Method::BhomOpt), 1.04, 5e-3),
        ("m4_UHOM_BHOMOPT", 4, (Method::Uhom, Method::BhomOpt), 1.004, 5e-3),
    ];
    let mut out = Vec::new();
    for (name, m, pair, target, tol) in cases {
        let root = crossover_find(m, pair, (1.0, 2.0))?.root().unwrap_or(f64::NAN);
        out.push(Check::near(name, root, target, tol));
    }
    Ok(out)
}

/// `sCRB_UHOM / sCRB_HET < 1` on random mixed states and on the configured
/// states at each efficiency.
fn dominance(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Check>> {
    let v = &cfg.validate;
    let mut rng = substream(cfg.seed, 0x00d0);
    let mut out = Vec::new();
    let mut orders = cfg.orders.clone();
    orders.sort();
    orders.dedup();
    let unit = ExperimentConfig { eta: 1.0, ..cfg.clone() };
    for i in 0..v.random_states {
        let rho = random_mixed_state(v.random_dim, v.random_support, &mut rng)?;
        for &m in &orders {
            let het = numeric_bound(&unit, &rho, Method::Het, m)?.expect("quadrature route");
            let uhom = numeric_bound(&unit, &rho, Method::Uhom, m)?.expect("quadrature route");
            out.push(Check::below(format!("random{i:03}_m{m}_eta1"), uhom / het, 1.0));
        }
    }
    for (i, family) in cfg.state_families().into_iter().enumerate() {
        let rho = family.build()?;
        for &eta in &v.etas {
            let at = ExperimentConfig { eta, ..cfg.clone() };
            for &m in &orders {
                let het = numeric_bound(&at, &rho, Method::Het, m)?.expect("quadrature route");
                let uhom = numeric_bound(&at, &rho, Method::Uhom, m)?.expect("quadrature route");
                out.push(Check::below(
                    format!("state{i:02}_{}_{}_m{m}_eta{eta}", family.label(), family.params()),
                    uhom / het,
                    1.0,
                ));
            }
        }
    }
    Ok(out)
}
