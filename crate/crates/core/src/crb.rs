//! Scaled Cramér-Rao bounds by quadrature, closed-form catalog and
//! characteristic functions, plus crossover search on the catalog.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{weyl_moments, DensityMatrix};
use crate::phase_space::{
    check_eta, husimi_field, integrate, invr_kernel, noclick_field, KernelKind, MomentKernelSet,
    PhaseGrid, QuadratureBins, Term,
};
use crate::series::Series2;
use crate::special::binomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "HET")]
    Het,
    #[serde(rename = "UHOM")]
    Uhom,
    #[serde(rename = "BHOM")]
    Bhom,
    #[serde(rename = "BHOMOPT")]
    BhomOpt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Het, Method::Uhom, Method::Bhom, Method::BhomOpt];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Het => "HET",
            Method::Uhom => "UHOM",
            Method::Bhom => "BHOM",
            Method::BhomOpt => "BHOMOPT",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HET" => Ok(Method::Het),
            "UHOM" => Ok(Method::Uhom),
            "BHOM" => Ok(Method::Bhom),
            "BHOMOPT" => Ok(Method::BhomOpt),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Numeric,
    ClosedForm,
    Characteristic,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Numeric => "numeric",
            Provenance::ClosedForm => "closed_form",
            Provenance::Characteristic => "characteristic",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScrbReport {
    pub method: Method,
    pub order: usize,
    pub scalar_bound: f64,
    /// Empty for catalog values, which only give totals.
    pub per_component: Vec<f64>,
    pub eta: f64,
    pub provenance: Provenance,
    /// Discretization used for the inverse-Radon bound.
    pub bhom: Option<BhomConfig>,
}

impl ScrbReport {
    fn from_components(
        method: Method,
        order: usize,
        per_component: Vec<f64>,
        eta: f64,
        provenance: Provenance,
    ) -> Self {
        Self {
            method,
            order,
            scalar_bound: per_component.iter().sum(),
            per_component,
            eta,
            provenance,
            bhom: None,
        }
    }
}

/// Weight `w (v_p − c)²` summed per component on the grid.
fn weighted_spread(
    grid: &PhaseGrid,
    kernels: &MomentKernelSet,
    density: &[f64],
    center: &[f64],
    extra: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    integrate(grid, density, |l, pt| {
        let f = extra(l);
        kernels
            .eval(pt, KernelKind::P)
            .iter()
            .zip(center)
            .map(|(v, c)| f * (v - c) * (v - c))
            .collect()
    })
}

/// `∫ Q (v_p − q)²` with `q` from the Weyl oracle.
pub fn scrb_het_numeric(
    rho: &DensityMatrix,
    kernels: &MomentKernelSet,
    grid: &PhaseGrid,
) -> Result<ScrbReport> {
    let q = weyl_moments(rho, kernels.order())?;
    let density = husimi_field(rho, grid);
    let comps = weighted_spread(grid, kernels, &density, &q, |_| 1.0)?;
    Ok(ScrbReport::from_components(Method::Het, kernels.order(), comps, 1.0, Provenance::Numeric))
}

/// `∫ Q (1 − Q) (v_p − q)²` with `q` from the Weyl oracle.
pub fn scrb_uhom_numeric(
    rho: &DensityMatrix,
    kernels: &MomentKernelSet,
    grid: &PhaseGrid,
) -> Result<ScrbReport> {
    let q = weyl_moments(rho, kernels.order())?;
    let density = husimi_field(rho, grid);
    let comps = weighted_spread(grid, kernels, &density, &q, |l| 1.0 - density[l])?;
    Ok(ScrbReport::from_components(Method::Uhom, kernels.order(), comps, 1.0, Provenance::Numeric))
}

/// Realistic HET and UHOM bounds with the detector-deformed weight
/// `η p(α, η)`.
///
/// The spread is taken about the moments `q_η = ∫ η p v_p` actually
/// estimated by the sample average at efficiency `η`; at `η = 1` these are
/// the Weyl moments.
pub fn scrb_realistic(
    rho: &DensityMatrix,
    kernels: &MomentKernelSet,
    grid: &PhaseGrid,
    eta: f64,
) -> Result<(ScrbReport, ScrbReport)> {
    check_eta(eta)?;
    let p = noclick_field(rho, grid, eta)?;
    let density: Vec<f64> = p.iter().map(|v| eta * v).collect();
    let center = integrate(grid, &density, |_, pt| kernels.eval(pt, KernelKind::P))?;
    let het = weighted_spread(grid, kernels, &density, &center, |_| 1.0)?;
    let uhom = weighted_spread(grid, kernels, &density, &center, |l| 1.0 - p[l])?;
    let m = kernels.order();
    Ok((
        ScrbReport::from_components(Method::Het, m, het, eta, Provenance::Numeric),
        ScrbReport::from_components(Method::Uhom, m, uhom, eta, Provenance::Numeric),
    ))
}

/// Discretization of the balanced-homodyne data and inverse-Radon filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BhomConfig {
    /// Local-oscillator phases, uniform on `[0, π)`.
    pub n_theta: usize,
    /// Voltage bins over `[−x_extent, x_extent]`.
    pub n_x: usize,
    pub x_extent: f64,
    /// Frequency cutoff of the filter.
    pub k_c: f64,
    /// Reconstruction nodes per axis.
    pub points_per_axis: usize,
    /// Reconstruction half-width; the Husimi support rule when absent.
    pub grid_extent: Option<f64>,
}

impl Default for BhomConfig {
    fn default() -> Self {
        Self {
            n_theta: 12,
            n_x: 161,
            x_extent: 8.0,
            k_c: 6.0,
            points_per_axis: 121,
            grid_extent: None,
        }
    }
}

impl BhomConfig {
    pub fn validate(&self, order: usize) -> Result<()> {
        if !(self.k_c > 0.0 && self.k_c.is_finite()) {
            return Err(Error::Config(format!("k_c = {} must be positive", self.k_c)));
        }
        if self.n_theta < order + 1 {
            return Err(Error::Config(format!(
                "n_theta = {} phases cannot resolve order {order}",
                self.n_theta
            )));
        }
        QuadratureBins::new(self.n_x, self.x_extent)?;
        Ok(())
    }

    pub fn phases(&self) -> Vec<f64> {
        (0..self.n_theta)
            .map(|j| j as f64 * PI / self.n_theta as f64)
            .collect()
    }

    pub fn bins(&self) -> Result<QuadratureBins> {
        QuadratureBins::new(self.n_x, self.x_extent)
    }

    pub fn grid(&self, rho: &DensityMatrix) -> Result<PhaseGrid> {
        match self.grid_extent {
            Some(l) => PhaseGrid::new(l, self.points_per_axis),
            None => PhaseGrid::support(rho, self.points_per_axis),
        }
    }
}

/// Inverse-Radon bound from the multinomial covariance of the binned
/// marginals, with equal events per phase.
///
/// Per phase `θ_j` the reconstruction is linear in the bin frequencies with
/// coefficients `Y_ck = Σ_l w (v_w,c(α_l) − q_c) R⁻¹(x_l cos θ_j + p_l sin θ_j − x_k)`,
/// so the scaled variance is `Σ_j Σ_c [Σ_k Y_ck² p_jk − (Σ_k Y_ck p_jk)²] / (4 n_θ)`.
pub fn scrb_bhom_numeric(
    rho: &DensityMatrix,
    kernels: &MomentKernelSet,
    config: &BhomConfig,
) -> Result<ScrbReport> {
    let m = kernels.order();
    config.validate(m)?;
    let q = weyl_moments(rho, m)?;
    let grid = config.grid(rho)?;
    let bins = config.bins()?;
    let centers = bins.centers();
    let w = grid.cell_weight();
    let n_c = kernels.n_components();
    let nodes: Vec<_> = grid.nodes().collect();
    let weights: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&pt| {
            kernels
                .eval(pt, KernelKind::W)
                .iter()
                .zip(&q)
                .map(|(v, qc)| w * (v - qc))
                .collect()
        })
        .collect();
    let phases = config.phases();
    let per_phase: Vec<Vec<f64>> = phases
        .par_iter()
        .map(|&theta| {
            let (probs, _) = bins.probabilities(rho, theta);
            let (c, s) = (theta.cos(), theta.sin());
            let mut y = vec![0.0; n_c * centers.len()];
            for (pt, u) in nodes.iter().zip(&weights) {
                let proj = pt.x * c + pt.p * s;
                for (k, &xk) in centers.iter().enumerate() {
                    let r = invr_kernel(proj - xk, config.k_c);
                    for comp in 0..n_c {
                        y[comp * centers.len() + k] += u[comp] * r;
                    }
                }
            }
            (0..n_c)
                .map(|comp| {
                    let row = &y[comp * centers.len()..(comp + 1) * centers.len()];
                    let mean: f64 = row.iter().zip(&probs).map(|(a, p)| a * p).sum();
                    let second: f64 = row.iter().zip(&probs).map(|(a, p)| a * a * p).sum();
                    second - mean * mean
                })
                .collect()
        })
        .collect();
    let scale = 1.0 / (4.0 * phases.len() as f64);
    let comps: Vec<f64> = (0..n_c)
        .map(|comp| per_phase.iter().map(|v| v[comp]).sum::<f64>() * scale)
        .collect();
    let mut report = ScrbReport::from_components(Method::Bhom, m, comps, 1.0, Provenance::Numeric);
    report.bhom = Some(BhomConfig {
        grid_extent: Some(grid.extent()),
        ..config.clone()
    });
    Ok(report)
}

/// State families with catalogued bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosedFormFamily {
    /// Squeezed thermal state with `μ = λ`.
    Gaussian(f64),
    Fock(usize),
}

/// `Γ(n + 1/2) / (√π Γ(n + 1))` as an exact product.
fn half_gamma_ratio(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64 - 0.5) / i as f64).product()
}

fn check_order(m: usize) -> Result<()> {
    if (1..=4).contains(&m) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(m))
    }
}

fn gaussian_het(m: usize, u: f64) -> f64 {
    let u2 = u * u;
    match m {
        1 => 0.5 * (3.0 + u2),
        2 => 0.5 * (6.0 + 3.0 * u2 + u2 * u2),
        3 => (85.0 + 35.0 * u2 + 33.0 * u2 * u2 + 15.0 * u2 * u2 * u2) / 8.0,
        _ => (396.0 + 117.0 * u2 + 148.0 * u2.powi(2) + 135.0 * u2.powi(3) + 48.0 * u2.powi(4)) / 8.0,
    }
}

fn gaussian_uhom_gap(m: usize, u: f64) -> f64 {
    let u2 = u * u;
    let s = (2.0 + 2.0 * u2).sqrt();
    match m {
        1 => (3.0 + u2) / (4.0 * s),
        2 => (17.0 + 8.0 * u2 + 3.0 * u2 * u2) / (16.0 * s),
        3 => (77.0 + 21.0 * u2 + 15.0 * u2.powi(2) + 15.0 * u2.powi(3)) / (64.0 * s),
        _ => {
            (735.0 + 142.0 * u2 + 40.0 * u2.powi(2) + 234.0 * u2.powi(3) + 177.0 * u2.powi(4))
                / (256.0 * s)
        }
    }
}

fn gaussian_bhomopt(m: usize, u: f64) -> f64 {
    match m {
        1 => 0.5 * (1.0 + u).powi(2),
        2 => 0.25 * (2.0 + 5.0 * u + 2.0 * u.powi(2) + 5.0 * u.powi(3) + 2.0 * u.powi(4)),
        3 => {
            5.0 / 24.0
                * (9.0 + 30.0 * u + 9.0 * u.powi(2) + 16.0 * u.powi(3) + 9.0 * u.powi(4)
                    + 30.0 * u.powi(5)
                    + 9.0 * u.powi(6))
        }
        _ => {
            6.0 + u * (u * u + 1.0)
                * (153.0 + 36.0 * u - 88.0 * u.powi(2) + 153.0 * u.powi(4) + 36.0 * u.powi(5))
                / 6.0
        }
    }
}

fn fock_het(m: usize, n: f64) -> f64 {
    match m {
        1 => 2.0 * (n + 1.0),
        2 => 0.5 * (n + 1.0) * (3.0 * n + 10.0),
        3 => (n + 1.0) * (6.0 * n * n + 20.0 * n + 21.0),
        _ => (n + 1.0) * (45.0 * n.powi(3) + 437.0 * n * n + 1040.0 * n + 844.0) / 8.0,
    }
}

fn fock_uhom_gap(m: usize, n: usize) -> f64 {
    let nf = n as f64;
    // Γ(n + 3/2)/(√π Γ(n + 1)) = (n + 1/2) Γ(n + 1/2)/(√π Γ(n + 1))
    let g_half = half_gamma_ratio(n);
    let g_three_half = (nf + 0.5) * g_half;
    match m {
        1 => g_three_half,
        2 => binomial(2 * n as u64, n as u64) * (nf + 1.0) * (6.0 * nf + 7.0) / 2f64.powi(2 * n as i32 + 3),
        3 => (6.0 * nf * nf + 5.0 * nf + 4.0) * g_three_half / 2.0,
        _ => (nf + 1.0) * (180.0 * nf.powi(3) + 544.0 * nf * nf + 521.0 * nf + 166.0) * g_half / 64.0,
    }
}

fn fock_bhomopt(m: usize, n: f64) -> f64 {
    match m {
        1 => 2.0 * (2.0 * n + 1.0),
        2 => 4.0 * (n * n + n + 1.0),
        3 => 14.0 / 9.0 * (20.0 * n.powi(3) + 30.0 * n * n + 40.0 * n + 15.0),
        _ => 77.0 / 36.0 * (17.0 * n.powi(4) + 34.0 * n.powi(3) + 139.0 * n * n + 122.0 * n + 48.0),
    }
}

/// Catalogued bound value.
pub fn closed_form_value(family: ClosedFormFamily, method: Method, m: usize) -> Result<f64> {
    check_order(m)?;
    match family {
        ClosedFormFamily::Gaussian(mu) => {
            if !(mu >= 1.0 && mu.is_finite()) {
                return Err(Error::InvalidParameter(format!("mu = {mu} must be at least 1")));
            }
            match method {
                Method::Het => Ok(gaussian_het(m, mu)),
                Method::Uhom => Ok(gaussian_het(m, mu) - gaussian_uhom_gap(m, mu)),
                Method::BhomOpt => Ok(gaussian_bhomopt(m, mu)),
                Method::Bhom => Err(Error::InvalidParameter("no catalogued BHOM bound".into())),
            }
        }
        ClosedFormFamily::Fock(n) => {
            let nf = n as f64;
            match method {
                Method::Het => Ok(fock_het(m, nf)),
                Method::Uhom => Ok(fock_het(m, nf) - fock_uhom_gap(m, n)),
                Method::BhomOpt => Ok(fock_bhomopt(m, nf)),
                Method::Bhom => Err(Error::InvalidParameter("no catalogued BHOM bound".into())),
            }
        }
    }
}

pub fn closed_form(family: ClosedFormFamily, method: Method, m: usize) -> Result<ScrbReport> {
    let value = closed_form_value(family, method, m)?;
    Ok(ScrbReport {
        method,
        order: m,
        scalar_bound: value,
        per_component: Vec::new(),
        eta: 1.0,
        provenance: Provenance::ClosedForm,
        bhom: None,
    })
}

/// Outcome of a crossover search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Crossover {
    Root(f64),
    /// The two curves do not change order over the range; carries the
    /// differences at both endpoints.
    None { at_low: f64, at_high: f64 },
}

impl Crossover {
    pub fn root(&self) -> Option<f64> {
        match self {
            Crossover::Root(r) => Some(*r),
            Crossover::None { .. } => None,
        }
    }
}

/// Bisection root in `μ` of `closed_form(a) − closed_form(b)` on the
/// Gaussian `μ = λ` catalog.
pub fn crossover_find(m: usize, pair: (Method, Method), mu_range: (f64, f64)) -> Result<Crossover> {
    let diff = |mu: f64| -> Result<f64> {
        Ok(closed_form_value(ClosedFormFamily::Gaussian(mu), pair.0, m)?
            - closed_form_value(ClosedFormFamily::Gaussian(mu), pair.1, m)?)
    };
    let (mut lo, mut hi) = mu_range;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi}]")));
    }
    let (f_lo, f_hi) = (diff(lo)?, diff(hi)?);
    if f_lo == 0.0 {
        return Ok(Crossover::Root(lo));
    }
    if f_lo.signum() == f_hi.signum() {
        return Ok(Crossover::None {
            at_low: f_lo,
            at_high: f_hi,
        });
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let f = diff(mid)?;
        if f == 0.0 {
            return Ok(Crossover::Root(mid));
        }
        if f.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Crossover::Root(0.5 * (lo + hi)))
}

/// Which phase-space weight a characteristic function integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChiVariant {
    /// `∫ Q e^{ux + vp}`.
    Chi1,
    /// `∫ Q² e^{ux + vp}`.
    Chi2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CharacteristicFamily {
    GaussianMuLambda { mu: f64, lambda: f64 },
    Fock { n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicSpec {
    pub family: CharacteristicFamily,
    pub variant: ChiVariant,
}

/// Highest total derivative order supported.
pub const MAX_CHI_ORDER: usize = 8;

impl CharacteristicSpec {
    pub fn new(family: CharacteristicFamily, variant: ChiVariant) -> Result<Self> {
        if let CharacteristicFamily::GaussianMuLambda { mu, lambda } = family {
            if !(mu >= 1.0 && lambda > 0.0 && mu.is_finite() && lambda.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "Gaussian parameters mu = {mu}, lambda = {lambda} outside mu ≥ 1, lambda > 0"
                )));
            }
        }
        Ok(Self { family, variant })
    }

    /// Taylor series of the characteristic function in `(u, v)`.
    pub fn series(&self, degree: usize) -> Series2 {
        match self.family {
            CharacteristicFamily::GaussianMuLambda { mu, lambda } => {
                let gx = 0.5 * (mu * lambda + 1.0);
                let gp = 0.5 * (mu / lambda + 1.0);
                match self.variant {
                    ChiVariant::Chi1 => Series2::quadratic(degree, 0.5 * gx, 0.0, 0.5 * gp).exp(),
                    ChiVariant::Chi2 => Series2::quadratic(degree, 0.25 * gx, 0.0, 0.25 * gp)
                        .exp()
                        .scale(0.5 / (gx * gp).sqrt()),
                }
            }
            CharacteristicFamily::Fock { n } => {
                // |g|² = (u² + v²)/2
                let (scale, level, prefactor) = match self.variant {
                    ChiVariant::Chi1 => (0.5, n, 1.0),
                    ChiVariant::Chi2 => (
                        0.25,
                        2 * n,
                        binomial(2 * n as u64, n as u64) / 2f64.powi(2 * n as i32 + 1),
                    ),
                };
                let s = Series2::quadratic(degree, scale, 0.0, scale);
                // L_k(−s) = Σ_j C(k, j) s^j / j!
                let mut fact = 1.0;
                let poly: Vec<f64> = (0..=level.min(degree))
                    .map(|j| {
                        if j > 0 {
                            fact *= j as f64;
                        }
                        binomial(level as u64, j as u64) / fact
                    })
                    .collect();
                let lag = s.compose_poly(&poly);
                (&s.exp() * &lag).scale(prefactor)
            }
        }
    }
}

/// `∂_u^k ∂_v^l χ` at the origin.
pub fn characteristic_moment(spec: &CharacteristicSpec, k: usize, l: usize) -> Result<f64> {
    if k + l > MAX_CHI_ORDER {
        return Err(Error::UnsupportedOrder(k + l));
    }
    Ok(spec.series(k + l).derivative_at_origin(k, l))
}

/// Expand `Π` of term lists into a single monomial list.
fn poly_mul(a: &[Term], b: &[Term]) -> Vec<Term> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &(ca, ia, ja) in a {
        for &(cb, ib, jb) in b {
            out.push((ca * cb, ia + ib, ja + jb));
        }
    }
    out
}

fn apply(series: &Series2, poly: &[Term]) -> f64 {
    poly.iter()
        .map(|&(c, i, j)| c * series.derivative_at_origin(i as usize, j as usize))
        .sum()
}

/// HET or UHOM bound evaluated entirely from the characteristic functions.
pub fn scrb_characteristic(
    family: CharacteristicFamily,
    method: Method,
    kernels: &MomentKernelSet,
) -> Result<ScrbReport> {
    let chi1 = CharacteristicSpec::new(family, ChiVariant::Chi1)?.series(MAX_CHI_ORDER);
    let chi2 = CharacteristicSpec::new(family, ChiVariant::Chi2)?.series(MAX_CHI_ORDER);
    let comps: Result<Vec<f64>> = (0..kernels.n_components())
        .map(|c| {
            let v = kernels.p_terms(c);
            let q = apply(&chi1, v);
            let v2 = poly_mul(v, v);
            let het = apply(&chi1, &v2) - q * q;
            match method {
                Method::Het => Ok(het),
                Method::Uhom => {
                    let sq = apply(&chi2, &v2) - 2.0 * q * apply(&chi2, v) + q * q * apply(&chi2, &[(1.0, 0, 0)]);
                    Ok(het - sq)
                }
                other => Err(Error::InvalidParameter(format!(
                    "no characteristic-function route for {other}"
                ))),
            }
        })
        .collect();
    Ok(ScrbReport::from_components(
        method,
        kernels.order(),
        comps?,
        1.0,
        Provenance::Characteristic,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_fock, build_gaussian, GaussianSpec};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn catalog_spot_values() {
        let v = |f, m, k| closed_form_value(f, m, k).unwrap();
        assert_eq!(v(ClosedFormFamily::Fock(0), Method::BhomOpt, 2), 4.0);
        assert!((v(ClosedFormFamily::Fock(0), Method::Uhom, 4) - 102.90625).abs() < 1e-12);
        assert!((v(ClosedFormFamily::Gaussian(1.0), Method::BhomOpt, 4) - 308.0 / 3.0).abs() < 1e-12);
        assert!((v(ClosedFormFamily::Gaussian(1.0), Method::Uhom, 2) - 4.125).abs() < 1e-12);
        assert_eq!(v(ClosedFormFamily::Fock(3), Method::Het, 3), 540.0);
        assert!(closed_form_value(ClosedFormFamily::Fock(0), Method::Bhom, 1).is_err());
        assert_eq!(
            closed_form_value(ClosedFormFamily::Fock(0), Method::Het, 5),
            Err(Error::UnsupportedOrder(5))
        );
    }

    #[test]
    fn characteristic_spot_values() {
        let fock = |n, v| CharacteristicSpec::new(CharacteristicFamily::Fock { n }, v).unwrap();
        for n in 0..6 {
            let expected = binomial(2 * n as u64, n as u64) / 2f64.powi(2 * n as i32 + 1);
            assert!((characteristic_moment(&fock(n, ChiVariant::Chi2), 0, 0).unwrap() - expected).abs() < 1e-15);
        }
        let g = |mu: f64, v| {
            CharacteristicSpec::new(CharacteristicFamily::GaussianMuLambda { mu, lambda: mu }, v).unwrap()
        };
        assert!((characteristic_moment(&g(1.0, ChiVariant::Chi1), 2, 0).unwrap() - 1.0).abs() < 1e-15);
        let det = 0.5 * (4.0 + 1.0) * 1.0;
        assert!((characteristic_moment(&g(2.0, ChiVariant::Chi2), 0, 0).unwrap() - 0.5 / f64::sqrt(det)).abs() < 1e-15);
        assert!(characteristic_moment(&g(2.0, ChiVariant::Chi1), 5, 4).is_err());
    }

    #[test]
    fn characteristic_route_matches_catalog() {
        for m in 1..=4 {
            let k = MomentKernelSet::new(m).unwrap();
            for n in 0..6 {
                for method in [Method::Het, Method::Uhom] {
                    let c = scrb_characteristic(CharacteristicFamily::Fock { n }, method, &k).unwrap();
                    let cf = closed_form_value(ClosedFormFamily::Fock(n), method, m).unwrap();
                    assert!(rel(c.scalar_bound, cf) < 1e-12, "fock {n} {method} m={m}: {} vs {cf}", c.scalar_bound);
                }
            }
            for mu in [1.0, 1.5, 2.0, 3.0] {
                for method in [Method::Het, Method::Uhom] {
                    let fam = CharacteristicFamily::GaussianMuLambda { mu, lambda: mu };
                    let c = scrb_characteristic(fam, method, &k).unwrap();
                    let cf = closed_form_value(ClosedFormFamily::Gaussian(mu), method, m).unwrap();
                    assert!(rel(c.scalar_bound, cf) < 1e-12, "gauss {mu} {method} m={m}: {} vs {cf}", c.scalar_bound);
                }
            }
        }
    }

    #[test]
    fn numeric_bounds_small_cases() {
        let vac = build_fock(0, 12).unwrap();
        let k1 = MomentKernelSet::new(1).unwrap();
        let grid = PhaseGrid::covering(&vac, 1, 201).unwrap();
        let het = scrb_het_numeric(&vac, &k1, &grid).unwrap();
        assert!((het.scalar_bound - 2.0).abs() < 1e-4);
        let uhom = scrb_uhom_numeric(&vac, &k1, &grid).unwrap();
        assert!((uhom.scalar_bound - 1.5).abs() < 1e-4);
        let sum: f64 = het.per_component.iter().sum();
        assert!((sum - het.scalar_bound).abs() < 1e-12);

        let g = build_gaussian(GaussianSpec::symmetric(2.0).unwrap(), 80).unwrap();
        let k2 = MomentKernelSet::new(2).unwrap();
        let grid = PhaseGrid::covering(&g, 2, 201).unwrap();
        assert!((scrb_het_numeric(&g, &k2, &grid).unwrap().scalar_bound - 17.0).abs() < 1e-3);
    }

    #[test]
    fn realistic_reduces_at_unit_efficiency() {
        let f1 = build_fock(1, 14).unwrap();
        let k1 = MomentKernelSet::new(1).unwrap();
        let grid = PhaseGrid::covering(&f1, 1, 161).unwrap();
        let (het, uhom) = scrb_realistic(&f1, &k1, &grid, 1.0).unwrap();
        assert!((het.scalar_bound - scrb_het_numeric(&f1, &k1, &grid).unwrap().scalar_bound).abs() < 1e-8);
        assert!((uhom.scalar_bound - scrb_uhom_numeric(&f1, &k1, &grid).unwrap().scalar_bound).abs() < 1e-8);
        assert!(scrb_realistic(&f1, &k1, &grid, 0.0).is_err());
    }

    #[test]
    fn crossover_without_sign_change() {
        let c = crossover_find(1, (Method::Uhom, Method::Het), (1.0, 2.0)).unwrap();
        assert!(c.root().is_none());
    }

    #[test]
    fn bhom_config_validation() {
        let vac = build_fock(0, 10).unwrap();
        let k = MomentKernelSet::new(2).unwrap();
        let bad = BhomConfig { k_c: 0.0, ..BhomConfig::default() };
        assert!(matches!(scrb_bhom_numeric(&vac, &k, &bad), Err(Error::Config(_))));
        let few = BhomConfig { n_theta: 2, ..BhomConfig::default() };
        assert!(matches!(scrb_bhom_numeric(&vac, &k, &few), Err(Error::Config(_))));
    }
}
