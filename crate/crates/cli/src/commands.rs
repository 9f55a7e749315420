use anyhow::Context;
use cvtomo::crb::{closed_form_value, scrb_bhom_numeric, scrb_het_numeric, scrb_realistic, scrb_uhom_numeric};
use cvtomo::phase_space::{MomentKernelSet, PhaseGrid};
use cvtomo::sampler::derive_seed;
use cvtomo::{run_mse_harness, DensityMatrix, Method, MseReport, Provenance, StateFamily};

use crate::config::ExperimentConfig;
use crate::table::{float, Key, Table};

/// Methods that will actually run, with BHOM dropped unless requested.
pub fn active_methods(cfg: &ExperimentConfig, include_bhom: bool) -> Vec<Method> {
    let mut out: Vec<Method> = cfg
        .methods
        .iter()
        .copied()
        .filter(|m| include_bhom || *m != Method::Bhom)
        .collect();
    out.sort();
    out.dedup();
    out
}

fn orders(cfg: &ExperimentConfig) -> Vec<usize> {
    let mut o = cfg.orders.clone();
    o.sort();
    o.dedup();
    o
}

pub fn state_key(family: &StateFamily) -> Vec<Key> {
    match *family {
        StateFamily::Gaussian { mu, lambda } => vec!["gaussian".into(), mu.into(), lambda.into()],
        StateFamily::Fock { n } => vec!["fock".into(), n.into()],
    }
}

fn numeric_grid(cfg: &ExperimentConfig, rho: &DensityMatrix, m: usize) -> cvtomo::Result<PhaseGrid> {
    match (cfg.grid.extent, cfg.eta < 1.0) {
        (Some(l), _) => PhaseGrid::new(l, cfg.grid.points),
        (None, true) => PhaseGrid::covering_realistic(rho, m, cfg.eta, cfg.grid.points),
        (None, false) => PhaseGrid::covering(rho, m, cfg.grid.points),
    }
}

/// Quadrature bound, or `None` for BHOMOPT which has no numeric route.
pub fn numeric_bound(
    cfg: &ExperimentConfig,
    rho: &DensityMatrix,
    method: Method,
    m: usize,
) -> cvtomo::Result<Option<f64>> {
    let kernels = MomentKernelSet::new(m)?;
    let value = match method {
        Method::Het | Method::Uhom if cfg.eta < 1.0 => {
            let (het, uhom) = scrb_realistic(rho, &kernels, &numeric_grid(cfg, rho, m)?, cfg.eta)?;
            Some(if method == Method::Het { het } else { uhom }.scalar_bound)
        }
        Method::Het => Some(scrb_het_numeric(rho, &kernels, &numeric_grid(cfg, rho, m)?)?.scalar_bound),
        Method::Uhom => Some(scrb_uhom_numeric(rho, &kernels, &numeric_grid(cfg, rho, m)?)?.scalar_bound),
        Method::Bhom => Some(scrb_bhom_numeric(rho, &kernels, &cfg.bhom)?.scalar_bound),
        Method::BhomOpt => None,
    };
    Ok(value)
}

fn closed_form(family: &StateFamily, method: Method, m: usize, eta: f64) -> Option<f64> {
    if eta < 1.0 {
        return None;
    }
    family
        .closed_form_family()
        .and_then(|f| closed_form_value(f, method, m).ok())
}

fn rel_dev(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() / b.abs(),
        _ => f64::NAN,
    }
}

pub const SCRB_HEADER: &str = "family,params,method,m,provenance,eta,scrb,rel_deviation,ratio_to_het,ratio_to_bhomopt";

/// Catalog values and quadrature cross-checks for every configured state.
pub fn scrb_table(cfg: &ExperimentConfig, include_bhom: bool) -> anyhow::Result<Table> {
    let mut table = Table::new(SCRB_HEADER);
    let methods = active_methods(cfg, include_bhom);
    for family in cfg.state_families() {
        let rho = family.build().with_context(|| format!("building {family}"))?;
        for m in orders(cfg) {
            let mut numeric: Vec<(Method, Option<f64>)> = Vec::new();
            for &method in &methods {
                numeric.push((method, numeric_bound(cfg, &rho, method, m).with_context(|| format!("{family} {method} m={m}"))?));
            }
            let het_ref = closed_form(&family, Method::Het, m, cfg.eta).or_else(|| {
                numeric
                    .iter()
                    .find(|(k, _)| *k == Method::Het)
                    .and_then(|(_, v)| *v)
            });
            let het_ref = match het_ref {
                Some(v) => Some(v),
                None => numeric_bound(cfg, &rho, Method::Het, m)?,
            };
            let opt_ref = closed_form(&family, Method::BhomOpt, m, cfg.eta);
            for (method, num) in numeric {
                let cf = closed_form(&family, method, m, cfg.eta);
                let dev = rel_dev(num, cf);
                for (prov, value) in [(Provenance::ClosedForm, cf), (Provenance::Numeric, num)] {
                    let Some(v) = value else { continue };
                    let mut key = state_key(&family);
                    key.extend([method.label().into(), m.into(), prov.label().into()]);
                    table.push(
                        key,
                        &[
                            family.label().to_string(),
                            family.params(),
                            method.to_string(),
                            m.to_string(),
                            prov.to_string(),
                            float(cfg.eta),
                            float(v),
                            float(dev),
                            float(het_ref.map_or(f64::NAN, |h| v / h)),
                            float(opt_ref.map_or(f64::NAN, |o| v / o)),
                        ],
                    );
                }
            }
        }
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig3,
    Fig4,
}

impl Figure {
    pub fn label(&self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }
}

pub const FIGURE_HEADER: &str = "figure,family,x,method,m,theory,mc,mc_stderr,mc_over_theory,failure_rate,R";

/// Theory curves and optional Monte Carlo markers against `μ` (fig3) or
/// `n` (fig4).
pub fn figure(cfg: &ExperimentConfig, which: Figure, include_bhom: bool) -> anyhow::Result<Table> {
    let mut table = Table::new(FIGURE_HEADER);
    let points: Vec<(f64, StateFamily)> = match which {
        Figure::Fig3 => cfg
            .figure
            .gaussian_mu
            .iter()
            .map(|&mu| (mu, StateFamily::Gaussian { mu, lambda: mu }))
            .collect(),
        Figure::Fig4 => cfg
            .figure
            .fock_n
            .iter()
            .map(|&n| (n as f64, StateFamily::Fock { n }))
            .collect(),
    };
    let reps = cfg.figure.replications;
    let methods = active_methods(cfg, include_bhom);
    let mut index = 0u64;
    for (x, family) in points {
        let rho = family.build().with_context(|| format!("building {family}"))?;
        for m in orders(cfg) {
            for &method in &methods {
                let theory = match closed_form(&family, method, m, cfg.eta) {
                    Some(v) => v,
                    None => numeric_bound(cfg, &rho, method, m)?.unwrap_or(f64::NAN),
                };
                let (mc, se, fail) = if reps >= 2 {
                    let exp = cfg.experiment(family, method, m, reps, derive_seed(cfg.seed, index));
                    let r = run_mse_harness(&exp).with_context(|| format!("{family} {method} m={m}"))?;
                    (r.scaled_mse, r.standard_error, r.failure_rate)
                } else {
                    (f64::NAN, f64::NAN, f64::NAN)
                };
                index += 1;
                table.push(
                    vec![x.into(), method.label().into(), m.into()],
                    &[
                        which.label().to_string(),
                        family.label().to_string(),
                        float(x),
                        method.to_string(),
                        m.to_string(),
                        float(theory),
                        float(mc),
                        float(se),
                        float(mc / theory),
                        float(fail),
                        reps.to_string(),
                    ],
                );
            }
        }
    }
    Ok(table)
}

/// Direct harness access: one report per (state, method, order).
pub fn mse(cfg: &ExperimentConfig, include_bhom: bool) -> anyhow::Result<Table> {
    let mut table = Table::new(MseReport::CSV_HEADER);
    for family in cfg.state_families() {
        for m in orders(cfg) {
            for method in active_methods(cfg, include_bhom) {
                let exp = cfg.experiment(family, method, m, cfg.replications, cfg.seed);
                let r = run_mse_harness(&exp).with_context(|| format!("{family} {method} m={m}"))?;
                let mut key: Vec<Key> = vec![method.label().into()];
                key.extend(state_key(&family));
                key.push(m.into());
                table.push_line(key, r.csv_row());
            }
        }
    }
    Ok(table)
}
