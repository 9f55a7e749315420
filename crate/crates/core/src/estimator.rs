//! Moment estimators for the three record types, ratio-moment predictions
//! for binomial data, and the replication harness that measures scaled
//! mean squared errors against the Weyl-moment oracle.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crb::{
    closed_form_value, scrb_bhom_numeric, scrb_het_numeric, scrb_realistic, scrb_uhom_numeric,
    BhomConfig, ClosedFormFamily, Method,
};
use crate::error::{Error, Result};
use crate::fock::{build_fock, build_gaussian_auto, weyl_moments, DensityMatrix, GaussianSpec};
use crate::phase_space::{
    check_eta, integrate, invr_kernel, noclick_field, KernelKind, MomentKernelSet, PhaseGrid,
    QuadratureBins, DEFAULT_POINTS,
};
use crate::sampler::{
    bhom_probabilities, derive_seed, het_cell_probabilities, sample_bhom_from, sample_het_from,
    sample_uhom_from, uhom_probabilities, BhomRecord, HetRecord, UhomRecord,
};
use crate::special::binomial;

/// Records whose counts live on phase-space grid nodes.
pub trait NodeCounts {
    fn node_counts(&self) -> &[f64];
}

impl NodeCounts for HetRecord {
    fn node_counts(&self) -> &[f64] {
        &self.counts
    }
}

impl NodeCounts for UhomRecord {
    fn node_counts(&self) -> &[f64] {
        &self.counts
    }
}

/// `Σ_l n_l v(α_l) / Σ_l n_l` with a node-major kernel table.
pub fn sample_average(counts: &[f64], table: &[f64], n_components: usize) -> Result<Vec<f64>> {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyData);
    }
    let mut acc = vec![0.0; n_components];
    for (l, &c) in counts.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let row = &table[l * n_components..(l + 1) * n_components];
        for (a, v) in acc.iter_mut().zip(row) {
            *a += c * v;
        }
    }
    Ok(acc.into_iter().map(|a| a / total).collect())
}

/// Count-weighted average of the P-kernel column.
pub fn estimate_sample_average<R: NodeCounts>(
    record: &R,
    grid: &PhaseGrid,
    kernels: &MomentKernelSet,
) -> Result<Vec<f64>> {
    let counts = record.node_counts();
    if counts.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: counts.len(),
        });
    }
    sample_average(counts, &kernels.table(grid, KernelKind::P), kernels.n_components())
}

fn check_record_shape(record: &BhomRecord) -> Result<()> {
    if record.counts.len() != record.phases.len() {
        return Err(Error::DimensionMismatch {
            expected: record.phases.len(),
            found: record.counts.len(),
        });
    }
    for row in &record.counts {
        if row.len() != record.bins.n_bins {
            return Err(Error::DimensionMismatch {
                expected: record.bins.n_bins,
                found: row.len(),
            });
        }
    }
    Ok(())
}

/// Per-phase frequencies `n_jk / Σ_k n_jk`.
fn frequencies(record: &BhomRecord) -> Result<Vec<Vec<f64>>> {
    record
        .counts
        .iter()
        .map(|row| {
            let t: f64 = row.iter().sum();
            if t <= 0.0 {
                Err(Error::EmptyData)
            } else {
                Ok(row.iter().map(|c| c / t).collect())
            }
        })
        .collect()
}

/// Filtered backprojection `Ŵ(α_l) = Σ_j Σ_k R⁻¹(x_l cos θ_j + p_l sin θ_j − x_k) f_jk / (2 n_θ)`.
pub fn reconstruct_wigner(record: &BhomRecord, grid: &PhaseGrid, k_c: f64) -> Result<Vec<f64>> {
    check_record_shape(record)?;
    let freqs = frequencies(record)?;
    let centers = record.bins.centers();
    let norm = 1.0 / (2.0 * record.phases.len() as f64);
    let trig: Vec<(f64, f64)> = record.phases.iter().map(|t| (t.cos(), t.sin())).collect();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|l| {
            let pt = grid.node(l);
            let mut w = 0.0;
            for ((c, s), f) in trig.iter().zip(&freqs) {
                let proj = pt.x * c + pt.p * s;
                for (xk, fk) in centers.iter().zip(f) {
                    if *fk != 0.0 {
                        w += invr_kernel(proj - xk, k_c) * fk;
                    }
                }
            }
            w * norm
        })
        .collect())
}

/// The inverse-Radon moment estimator is a ratio of two linear functionals
/// of the per-phase frequencies; this holds their coefficients.
#[derive(Clone, Debug)]
pub struct InvrProjector {
    n_components: usize,
    n_phases: usize,
    n_bins: usize,
    /// `[component][phase][bin]`, with the normalization row last.
    coeffs: Vec<f64>,
}

impl InvrProjector {
    pub fn new(
        grid: &PhaseGrid,
        kernels: &MomentKernelSet,
        phases: &[f64],
        bins: &QuadratureBins,
        k_c: f64,
    ) -> Result<Self> {
        if !(k_c > 0.0 && k_c.is_finite()) {
            return Err(Error::Config(format!("k_c = {k_c} must be positive")));
        }
        let n_c = kernels.n_components();
        let rows = n_c + 1;
        let centers = bins.centers();
        let w = grid.cell_weight() / (2.0 * phases.len() as f64);
        let table: Vec<Vec<f64>> = grid
            .nodes()
            .map(|pt| {
                let mut v = kernels.eval(pt, KernelKind::W);
                v.push(1.0);
                v
            })
            .collect();
        let per_phase: Vec<Vec<f64>> = phases
            .par_iter()
            .map(|&theta| {
                let (c, s) = (theta.cos(), theta.sin());
                let mut block = vec![0.0; rows * centers.len()];
                for (l, v) in table.iter().enumerate() {
                    let pt = grid.node(l);
                    let proj = pt.x * c + pt.p * s;
                    for (k, xk) in centers.iter().enumerate() {
                        let r = invr_kernel(proj - xk, k_c) * w;
                        for (row, vr) in v.iter().enumerate() {
                            block[row * centers.len() + k] += vr * r;
                        }
                    }
                }
                block
            })
            .collect();
        let mut coeffs = vec![0.0; rows * phases.len() * centers.len()];
        for (j, block) in per_phase.iter().enumerate() {
            for row in 0..rows {
                for k in 0..centers.len() {
                    coeffs[(row * phases.len() + j) * centers.len() + k] = block[row * centers.len() + k];
                }
            }
        }
        Ok(Self {
            n_components: n_c,
            n_phases: phases.len(),
            n_bins: centers.len(),
            coeffs,
        })
    }

    fn coeff(&self, row: usize, j: usize, k: usize) -> f64 {
        self.coeffs[(row * self.n_phases + j) * self.n_bins + k]
    }

    /// Ratio estimate with the denominator stability check
    /// `|den| > 1e-9 Σ |terms|`.
    pub fn estimate(&self, record: &BhomRecord) -> Result<Vec<f64>> {
        check_record_shape(record)?;
        if record.phases.len() != self.n_phases || record.bins.n_bins != self.n_bins {
            return Err(Error::DimensionMismatch {
                expected: self.n_phases * self.n_bins,
                found: record.phases.len() * record.bins.n_bins,
            });
        }
        let freqs = frequencies(record)?;
        let den_row = self.n_components;
        let mut den = 0.0;
        let mut scale = 0.0;
        let mut num = vec![0.0; self.n_components];
        for (j, f) in freqs.iter().enumerate() {
            for (k, &fk) in f.iter().enumerate() {
                if fk == 0.0 {
                    continue;
                }
                let t = self.coeff(den_row, j, k) * fk;
                den += t;
                scale += t.abs();
                for (c, nc) in num.iter_mut().enumerate() {
                    *nc += self.coeff(c, j, k) * fk;
                }
            }
        }
        if den.abs() <= 1e-9 * scale || den == 0.0 {
            return Err(Error::UnstableReconstruction {
                denominator: den,
                scale,
            });
        }
        Ok(num.into_iter().map(|n| n / den).collect())
    }
}

/// `Σ R⁻¹ n v_w / Σ R⁻¹ n` over nodes, phases and bins.
pub fn estimate_bhom_invr(
    record: &BhomRecord,
    grid: &PhaseGrid,
    kernels: &MomentKernelSet,
    k_c: f64,
) -> Result<Vec<f64>> {
    InvrProjector::new(grid, kernels, &record.phases, &record.bins, k_c)?.estimate(record)
}

/// Weighting of the per-phase quadrature moments in the BHOMOPT fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BhomOptWeighting {
    Unweighted,
    /// Generalized least squares with the empirical variance of each
    /// phase's sample moment.
    #[default]
    InverseVariance,
}

/// Design row: `⟨X_θ^m⟩ = Σ_c C(m, c) cos^{m−c} θ sin^c θ q_c` with `q_c`
/// the Weyl moment of `X^{m−c} P^c`.
fn design_row(m: usize, theta: f64) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    (0..=m)
        .map(|j| binomial(m as u64, j as u64) * c.powi((m - j) as i32) * s.powi(j as i32))
        .collect()
}

/// Least-squares inversion of per-phase sample moments of the bin
/// midpoints.
pub fn estimate_bhomopt(record: &BhomRecord, m: usize, weighting: BhomOptWeighting) -> Result<Vec<f64>> {
    if !(1..=4).contains(&m) {
        return Err(Error::UnsupportedOrder(m));
    }
    check_record_shape(record)?;
    let n_phases = record.phases.len();
    if n_phases < m + 1 {
        return Err(Error::IllPosed(format!("{n_phases} phases for {} unknowns", m + 1)));
    }
    let centers = record.bins.centers();
    let mut a = DMatrix::<f64>::zeros(n_phases, m + 1);
    let mut b = DVector::<f64>::zeros(n_phases);
    for (j, (theta, row)) in record.phases.iter().zip(&record.counts).enumerate() {
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyData);
        }
        let mut mom = 0.0;
        let mut mom2 = 0.0;
        for (x, n) in centers.iter().zip(row) {
            let xm = x.powi(m as i32);
            mom += n * xm;
            mom2 += n * xm * xm;
        }
        mom /= total;
        mom2 /= total;
        let weight = match weighting {
            BhomOptWeighting::Unweighted => 1.0,
            BhomOptWeighting::InverseVariance => {
                let var = (mom2 - mom * mom).max(f64::MIN_POSITIVE);
                (total / var).sqrt()
            }
        };
        for (c, v) in design_row(m, *theta).into_iter().enumerate() {
            a[(j, c)] = v * weight;
        }
        b[j] = mom * weight;
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (max, min) = (sv.max(), sv.min());
    if !(min > 1e-10 * max) {
        return Err(Error::IllPosed(format!(
            "phase design is rank deficient (singular values {min:e} / {max:e})"
        )));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::IllPosed(e.to_string()))?;
    Ok(x.iter().copied().collect())
}

/// Asymptotic ratio averages of binomial no-click data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioMoment {
    /// `E[n_l / N]`.
    A1 { l: usize },
    /// `E[n_l n_l' / N²]`.
    A2 { l: usize, lp: usize },
    /// `E[f_l f_l' / Σ f]` with `f = n / N0`.
    A9 { l: usize, lp: usize },
}

/// Literal evaluation with `σ_l² = p_l (1 − p_l) / N0`.
pub fn ratio_moment_predict(p: &[f64], n0: f64, which: RatioMoment) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(n0 >= 1.0) {
        return Err(Error::InvalidParameter(format!("N0 = {n0} must be at least 1")));
    }
    if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!("probability {bad} outside [0, 1]")));
    }
    let index_ok = |i: usize| {
        if i < p.len() {
            Ok(())
        } else {
            Err(Error::OutOfRange { level: i, dim: p.len() })
        }
    };
    let s2: Vec<f64> = p.iter().map(|v| v * (1.0 - v) / n0).collect();
    let b: f64 = p.iter().sum();
    if b <= 0.0 {
        return Err(Error::EmptyData);
    }
    let s: f64 = s2.iter().sum();
    Ok(match which {
        RatioMoment::A1 { l } => {
            index_ok(l)?;
            p[l] / b - s2[l] / (b * b) + p[l] * s / b.powi(3)
        }
        RatioMoment::A2 { l, lp } => {
            index_ok(l)?;
            index_ok(lp)?;
            let d = if l == lp { s2[l] } else { 0.0 };
            (d + p[l] * p[lp]) / (b * b) - 2.0 * (p[l] * s2[lp] + p[lp] * s2[l]) / b.powi(3)
                + 3.0 * p[l] * p[lp] * s / b.powi(4)
        }
        RatioMoment::A9 { l, lp } => {
            index_ok(l)?;
            index_ok(lp)?;
            let d = if l == lp { s2[l] } else { 0.0 };
            (d + p[l] * p[lp]) / b - (p[l] * s2[lp] + p[lp] * s2[l]) / (b * b)
                + p[l] * p[lp] * s / b.powi(3)
        }
    })
}

/// Mean and variance by Welford's update, mergeable across partitions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        RunningStats {
            count: n,
            mean: self.mean + d * other.count as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.count as f64 * other.count as f64) / n as f64,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Leave-one-out standard error of `mean(a) · mean(b)`.
pub fn jackknife_product(pairs: &[(f64, f64)]) -> f64 {
    let r = pairs.len();
    if r < 2 {
        return 0.0;
    }
    let (sa, sb) = pairs.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let rf = r as f64;
    let loo: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| ((sa - a) / (rf - 1.0)) * ((sb - b) / (rf - 1.0)))
        .collect();
    let mean = loo.iter().sum::<f64>() / rf;
    let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
    ((rf - 1.0) / rf * ss).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateFamily {
    Gaussian { mu: f64, lambda: f64 },
    Fock { n: usize },
}

impl StateFamily {
    pub fn build(&self) -> Result<DensityMatrix> {
        match *self {
            StateFamily::Gaussian { mu, lambda } => build_gaussian_auto(GaussianSpec::new(mu, lambda)?),
            StateFamily::Fock { n } => build_fock(n, n + 16),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StateFamily::Gaussian { .. } => "gaussian",
            StateFamily::Fock { .. } => "fock",
        }
    }

    /// `mu=…;lambda=…` or `n=…`.
    pub fn params(&self) -> String {
        match self {
            StateFamily::Gaussian { mu, lambda } => format!("mu={mu};lambda={lambda}"),
            StateFamily::Fock { n } => format!("n={n}"),
        }
    }

    /// Catalog entry, available for `μ = λ` Gaussians and Fock states.
    pub fn closed_form_family(&self) -> Option<ClosedFormFamily> {
        match *self {
            StateFamily::Gaussian { mu, lambda } if mu == lambda => Some(ClosedFormFamily::Gaussian(mu)),
            StateFamily::Gaussian { .. } => None,
            StateFamily::Fock { n } => Some(ClosedFormFamily::Fock(n)),
        }
    }
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.label(), self.params())
    }
}

/// One Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseExperiment {
    pub family: StateFamily,
    pub method: Method,
    pub order: usize,
    /// HET events `N`.
    pub het_events: u64,
    /// UHOM events per phase-space point `N0`.
    pub uhom_events_per_point: u64,
    /// BHOM events per phase `Ñ`.
    pub bhom_events_per_phase: u64,
    pub bhom: BhomConfig,
    pub bhomopt_weighting: BhomOptWeighting,
    /// Nodes per axis of the HET/UHOM sampling grid.
    pub grid_points: usize,
    pub eta: f64,
    pub replications: usize,
    pub seed: u64,
}

impl MseExperiment {
    pub fn new(family: StateFamily, method: Method, order: usize) -> Self {
        Self {
            family,
            method,
            order,
            het_events: 100_000,
            uhom_events_per_point: 1_000,
            bhom_events_per_phase: 10_000,
            bhom: BhomConfig::default(),
            bhomopt_weighting: BhomOptWeighting::default(),
            grid_points: 121,
            eta: 1.0,
            replications: 200,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.order) {
            return Err(Error::UnsupportedOrder(self.order));
        }
        if self.replications < 2 {
            return Err(Error::Config(format!("{} replications, need at least 2", self.replications)));
        }
        check_eta(self.eta)?;
        if self.eta < 1.0 && matches!(self.method, Method::Bhom | Method::BhomOpt) {
            return Err(Error::Config("detector efficiency is only modelled for HET and UHOM".into()));
        }
        let positive = |name: &str, v: u64| {
            if v == 0 {
                Err(Error::Config(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        positive("het_events", self.het_events)?;
        positive("uhom_events_per_point", self.uhom_events_per_point)?;
        positive("bhom_events_per_phase", self.bhom_events_per_phase)?;
        if matches!(self.method, Method::Bhom | Method::BhomOpt) {
            self.bhom.validate(self.order)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MseReport {
    pub method: Method,
    pub family: StateFamily,
    pub order: usize,
    pub replications: usize,
    /// `E[N (q̂ − q)²]`, or `E[N] E[(q̂ − q)²]` for UHOM.
    pub scaled_mse: f64,
    pub standard_error: f64,
    /// `E[N (q̂ − q)²]` averaged per experiment; equals `scaled_mse` for
    /// fixed-size schemes.
    pub scaled_mse_per_experiment: f64,
    pub per_experiment_standard_error: f64,
    pub scrb_reference: f64,
    pub ratio: f64,
    pub failure_rate: f64,
    pub seed: u64,
}

impl MseReport {
    pub const CSV_HEADER: &'static str =
        "method,family,params,m,R,scaled_mse,stderr,scrb_reference,ratio,failure_rate,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.method,
            self.family.label(),
            self.family.params(),
            self.order,
            self.replications,
            self.scaled_mse,
            self.standard_error,
            self.scrb_reference,
            self.ratio,
            self.failure_rate,
            self.seed
        )
    }
}

fn squared_error(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `R` independent simulate-then-estimate cycles.
pub fn run_mse_harness(exp: &MseExperiment) -> Result<MseReport> {
    exp.validate()?;
    let rho = exp.family.build()?;
    let m = exp.order;
    let kernels = MomentKernelSet::new(m)?;
    let oracle = weyl_moments(&rho, m)?;

    // Per replication: the used sample size and the squared error, or a
    // failed reconstruction.
    type Outcome = Result<Option<(f64, f64)>>;
    let (outcomes, reference): (Vec<Outcome>, f64) = match exp.method {
        Method::Het | Method::Uhom => {
            let grid = if exp.eta < 1.0 {
                PhaseGrid::covering_realistic(&rho, m, exp.eta, exp.grid_points)?
            } else {
                PhaseGrid::covering(&rho, m, exp.grid_points)?
            };
            let table = kernels.table(&grid, KernelKind::P);
            let n_c = kernels.n_components();
            let (truth, reference) = if exp.eta < 1.0 {
                let fine = PhaseGrid::covering_realistic(&rho, m, exp.eta, DEFAULT_POINTS)?;
                let density: Vec<f64> = noclick_field(&rho, &fine, exp.eta)?
                    .into_iter()
                    .map(|v| v * exp.eta)
                    .collect();
                let center = integrate(&fine, &density, |_, pt| kernels.eval(pt, KernelKind::P))?;
                let (het, uhom) = scrb_realistic(&rho, &kernels, &fine, exp.eta)?;
                let r = if exp.method == Method::Het { het } else { uhom };
                (center, r.scalar_bound)
            } else {
                let fine = PhaseGrid::covering(&rho, m, DEFAULT_POINTS)?;
                let r = if exp.method == Method::Het {
                    scrb_het_numeric(&rho, &kernels, &fine)?
                } else {
                    scrb_uhom_numeric(&rho, &kernels, &fine)?
                };
                (oracle.clone(), r.scalar_bound)
            };
            let outcomes = if exp.method == Method::Het {
                let (probs, captured) = if exp.eta < 1.0 {
                    let p = uhom_probabilities(&rho, &grid, exp.eta)?;
                    let total: f64 = p.iter().sum();
                    let captured = total * grid.cell_weight() * exp.eta;
                    (p.iter().map(|v| v / total).collect::<Vec<_>>(), captured)
                } else {
                    het_cell_probabilities(&rho, &grid)?
                };
                (0..exp.replications)
                    .into_par_iter()
                    .map(|r| {
                        let rec = sample_het_from(&probs, captured, exp.het_events, derive_seed(exp.seed, r as u64))?;
                        let est = sample_average(&rec.counts, &table, n_c)?;
                        Ok(Some((rec.total as f64, squared_error(&est, &truth))))
                    })
                    .collect()
            } else {
                let probs = uhom_probabilities(&rho, &grid, exp.eta)?;
                (0..exp.replications)
                    .into_par_iter()
                    .map(|r| {
                        let rec = sample_uhom_from(&probs, exp.uhom_events_per_point, derive_seed(exp.seed, r as u64))?;
                        let est = sample_average(&rec.counts, &table, n_c)?;
                        Ok(Some((rec.used_total(), squared_error(&est, &truth))))
                    })
                    .collect()
            };
            (outcomes, reference)
        }
        Method::Bhom | Method::BhomOpt => {
            let bins = exp.bhom.bins()?;
            let phases = exp.bhom.phases();
            let probs = bhom_probabilities(&rho, &phases, &bins);
            let n_total = (exp.bhom_events_per_phase * phases.len() as u64) as f64;
            let sample = |r: usize| {
                sample_bhom_from(&phases, &bins, &probs, exp.bhom_events_per_phase, derive_seed(exp.seed, r as u64))
            };
            if exp.method == Method::Bhom {
                let grid = exp.bhom.grid(&rho)?;
                let projector = InvrProjector::new(&grid, &kernels, &phases, &bins, exp.bhom.k_c)?;
                let reference = scrb_bhom_numeric(&rho, &kernels, &exp.bhom)?.scalar_bound;
                let outcomes = (0..exp.replications)
                    .into_par_iter()
                    .map(|r| match projector.estimate(&sample(r)?) {
                        Ok(est) => Ok(Some((n_total, squared_error(&est, &oracle)))),
                        Err(Error::UnstableReconstruction { .. }) => Ok(None),
                        Err(e) => Err(e),
                    })
                    .collect();
                (outcomes, reference)
            } else {
                let reference = match exp.family.closed_form_family() {
                    Some(f) => closed_form_value(f, Method::BhomOpt, m)?,
                    None => f64::NAN,
                };
                let outcomes = (0..exp.replications)
                    .into_par_iter()
                    .map(|r| {
                        let est = estimate_bhomopt(&sample(r)?, m, exp.bhomopt_weighting)?;
                        Ok(Some((n_total, squared_error(&est, &oracle))))
                    })
                    .collect();
                (outcomes, reference)
            }
        }
    };

    let mut pairs = Vec::with_capacity(outcomes.len());
    let mut failures = 0usize;
    for o in outcomes {
        match o? {
            Some(p) => pairs.push(p),
            None => failures += 1,
        }
    }
    let failure_rate = failures as f64 / exp.replications as f64;
    let (scaled_mse, standard_error, per_exp, per_exp_se) = if pairs.len() < 2 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mut n_stats = RunningStats::default();
        let mut e_stats = RunningStats::default();
        let mut scaled = RunningStats::default();
        for &(n, e) in &pairs {
            n_stats.push(n);
            e_stats.push(e);
            scaled.push(n * e);
        }
        (
            n_stats.mean * e_stats.mean,
            jackknife_product(&pairs),
            scaled.mean,
            scaled.standard_error(),
        )
    };
    Ok(MseReport {
        method: exp.method,
        family: exp.family,
        order: m,
        replications: exp.replications,
        scaled_mse,
        standard_error,
        scaled_mse_per_experiment: per_exp,
        per_experiment_standard_error: per_exp_se,
        scrb_reference: reference,
        ratio: scaled_mse / reference,
        failure_rate,
        seed: exp.seed,
    })
}
