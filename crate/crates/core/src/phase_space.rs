//! Quasi-distributions, quadrature marginals and moment kernels on
//! uniform phase-space grids.
//!
//! Grid nodes are cell midpoints. Each node carries the weight
//! `Δx Δp / (2π)`, the discretized `(dα)/π`, so `Σ_l w Q(α_l) ≈ 1`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::special::{coherent_amplitudes, displacement_block, hermite_functions, upper_gamma_regularized};

/// Default tolerance on the captured probability mass of a grid.
pub const DEFAULT_GRID_EPS: f64 = 1e-4;
/// Default number of nodes per axis for bound quadrature.
pub const DEFAULT_POINTS: usize = 201;
/// Minimum number of nodes per axis.
pub const MIN_POINTS: usize = 16;
/// Relative tail of the order-weighted Husimi mass left outside a covering grid.
pub const COVERING_TAIL: f64 = 1e-12;
/// Husimi mass left outside the inverse-Radon reconstruction support.
pub const SUPPORT_TAIL: f64 = 1e-3;
/// Probabilities in `(−CLAMP, 0)` are reported as zero.
pub const CLAMP: f64 = 1e-12;
/// Minimum number of mesh points for the quadrature inverse CDF.
pub const MIN_CDF_MESH: usize = 2001;

/// A point `(x, p)` of phase space, `α = (x + i p)/√2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.x, self.p) / SQRT_2
    }

    /// `|α|² = (x² + p²)/2`.
    pub fn alpha_norm_sqr(&self) -> f64 {
        0.5 * (self.x * self.x + self.p * self.p)
    }
}

/// Square midpoint grid spanning `[−L, L]²`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    extent: f64,
    points_per_axis: usize,
}

impl PhaseGrid {
    pub fn new(extent: f64, points_per_axis: usize) -> Result<Self> {
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidGrid(format!("extent {extent} must be positive")));
        }
        if points_per_axis < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "{points_per_axis} points per axis, need at least {MIN_POINTS}"
            )));
        }
        Ok(Self {
            extent,
            points_per_axis,
        })
    }

    /// Grid large enough that the Husimi function weighted by `|α|^{2j}`,
    /// `j ≤ order`, leaves a relative tail below [`COVERING_TAIL`].
    pub fn covering(rho: &DensityMatrix, order: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(husimi_radius(rho, order, COVERING_TAIL), points_per_axis)
    }

    /// Covering grid for the efficiency-deformed weight `η p(α, η)`, which is
    /// the Husimi function blurred by a Gaussian of variance `(1 − η)/η` per
    /// quadrature.
    pub fn covering_realistic(
        rho: &DensityMatrix,
        order: usize,
        eta: f64,
        points_per_axis: usize,
    ) -> Result<Self> {
        check_eta(eta)?;
        let base = husimi_radius(rho, order, COVERING_TAIL);
        let blur = ((1.0 - eta) / eta).sqrt();
        Self::new(base + (7.0 + order as f64) * blur, points_per_axis)
    }

    /// Reconstruction support for inverse-Radon estimates: the square
    /// holding all but [`SUPPORT_TAIL`] of the Husimi mass.
    pub fn support(rho: &DensityMatrix, points_per_axis: usize) -> Result<Self> {
        Self::new(husimi_radius(rho, 0, SUPPORT_TAIL), points_per_axis)
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.points_per_axis * self.points_per_axis
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points_per_axis as f64
    }

    /// `Δx Δp / (2π)`.
    pub fn cell_weight(&self) -> f64 {
        let h = self.spacing();
        h * h / (2.0 * PI)
    }

    /// Midpoint coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points_per_axis)
            .map(|i| -self.extent + (i as f64 + 0.5) * h)
            .collect()
    }

    /// Node `l = i·M + j` sits at `(axis[i], axis[j])`.
    pub fn node(&self, l: usize) -> PhasePoint {
        let h = self.spacing();
        let i = l / self.points_per_axis;
        let j = l % self.points_per_axis;
        PhasePoint::new(
            -self.extent + (i as f64 + 0.5) * h,
            -self.extent + (j as f64 + 0.5) * h,
        )
    }

    pub fn nodes(&self) -> impl Iterator<Item = PhasePoint> + '_ {
        (0..self.len()).map(move |l| self.node(l))
    }

    /// The same extent at a different resolution.
    pub fn with_points(&self, points_per_axis: usize) -> Result<Self> {
        Self::new(self.extent, points_per_axis)
    }
}

/// Smallest radius `√(2R)` such that the angular-averaged Husimi density
/// weighted by `r^j` has relative mass below `tail` beyond `r = R`, maximized
/// over `j ≤ order`.
///
/// The angular average of `Q` is `Σ_n ρ_nn e^{−r} r^n / n!`, so the tails
/// are regularized upper incomplete gamma functions.
fn husimi_radius(rho: &DensityMatrix, order: usize, tail: f64) -> f64 {
    let pops = rho.populations();
    let mut radius: f64 = 0.0;
    for j in 0..=order {
        let tail_at = |big_r: f64| -> f64 {
            let mut total = 0.0;
            let mut outside = 0.0;
            for (n, &w) in pops.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                // (n+j)!/n!
                let rising: f64 = (1..=j).map(|i| (n + i) as f64).product();
                total += w * rising;
                outside += w * rising * upper_gamma_regularized((n + j + 1) as f64, big_r);
            }
            outside / total
        };
        let (mut lo, mut hi) = (0.0, 16.0);
        while tail_at(hi) > tail {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if tail_at(mid) > tail {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        radius = radius.max((2.0 * hi).sqrt());
    }
    radius
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidEfficiency(eta))
    }
}

fn clamp_probability(v: f64) -> f64 {
    if v < 0.0 && v > -CLAMP {
        0.0
    } else if v > 1.0 && v < 1.0 + CLAMP {
        1.0
    } else {
        v
    }
}

/// Maps a computed probability into `[0, 1]`, failing on negatives beyond
/// the clamping threshold.
pub fn checked_probability(v: f64) -> Result<f64> {
    let v = clamp_probability(v);
    if v < 0.0 {
        Err(Error::NegativeProbability(v))
    } else {
        Ok(v.min(1.0))
    }
}

fn quadratic_form(rho: &DensityMatrix, v: &[Complex64]) -> f64 {
    // v† ρ v
    let m = rho.elements();
    let dim = rho.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            row += m[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc.re
}

/// Husimi function `Q(α) = ⟨α|ρ|α⟩`.
pub fn husimi_q(rho: &DensityMatrix, point: PhasePoint) -> f64 {
    let amps = coherent_amplitudes(point.alpha(), rho.dim());
    clamp_probability(quadratic_form(rho, &amps))
}

/// Wigner function `2 Tr[ρ D(α) Π D†(α)]` with parity `Π = (−1)^{a†a}`.
///
/// Uses `D(α) Π D†(α) = D(2α) Π` and the Laguerre form of the displacement
/// matrix elements.
pub fn wigner_w(rho: &DensityMatrix, point: PhasePoint) -> f64 {
    let dim = rho.dim();
    let block = displacement_block(2.0 * point.alpha(), dim, dim);
    let m = rho.elements();
    let mut acc = Complex64::new(0.0, 0.0);
    for mm in 0..dim {
        let sign = if mm % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..dim {
            // ρ_{mn} ⟨n|D(2α)Π|m⟩
            acc += m[(mm, n)] * block[n * dim + mm] * sign;
        }
    }
    2.0 * acc.re
}

/// Number of displaced Fock levels kept in the no-click sum.
fn noclick_levels(eta: f64) -> usize {
    if eta >= 1.0 {
        1
    } else {
        let k = (1e-17f64).ln() / (1.0 - eta).ln();
        (k.ceil() as usize).clamp(1, 4000)
    }
}

/// No-click probability `Tr[ρ D(α) (1 − η)^{a†a} D†(α)]`, equal to `Q(α)`
/// at `η = 1`.
pub fn noclick_prob(rho: &DensityMatrix, point: PhasePoint, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let comps = rho.spectral_components(1e-15);
    Ok(noclick_from_components(&comps, rho.dim(), point, eta))
}

fn noclick_from_components(
    comps: &[(f64, Vec<Complex64>)],
    dim: usize,
    point: PhasePoint,
    eta: f64,
) -> f64 {
    if eta >= 1.0 {
        let amps = coherent_amplitudes(point.alpha(), dim);
        let q: f64 = comps
            .iter()
            .map(|(w, v)| {
                let ov: Complex64 = amps.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                w * ov.norm_sqr()
            })
            .sum();
        return clamp_probability(q);
    }
    let levels = noclick_levels(eta);
    let block = displacement_block(point.alpha(), dim, levels);
    let mut total = 0.0;
    let mut weight = 1.0;
    for k in 0..levels {
        let mut s = 0.0;
        for (w, v) in comps {
            let mut ov = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                ov += block[n * levels + k].conj() * v[n];
            }
            s += w * ov.norm_sqr();
        }
        total += weight * s;
        weight *= 1.0 - eta;
    }
    clamp_probability(total)
}

/// Husimi function at every node of `grid`.
pub fn husimi_field(rho: &DensityMatrix, grid: &PhaseGrid) -> Vec<f64> {
    let comps = rho.spectral_components(1e-15);
    let dim = rho.dim();
    (0..grid.len())
        .into_par_iter()
        .map(|l| noclick_from_components(&comps, dim, grid.node(l), 1.0))
        .collect()
}

/// No-click probability at every node of `grid`.
pub fn noclick_field(rho: &DensityMatrix, grid: &PhaseGrid, eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    let comps = rho.spectral_components(1e-15);
    let dim = rho.dim();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|l| noclick_from_components(&comps, dim, grid.node(l), eta))
        .collect())
}

/// Wigner function at every node of `grid`.
pub fn wigner_field(rho: &DensityMatrix, grid: &PhaseGrid) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|l| wigner_w(rho, grid.node(l)))
        .collect()
}

/// Quadrature density `p(x, θ)` of `X_θ = X cos θ + P sin θ`.
pub fn quad_pdf(rho: &DensityMatrix, x: f64, theta: f64) -> f64 {
    let psi = hermite_functions(rho.dim(), x);
    let v: Vec<Complex64> = psi
        .iter()
        .enumerate()
        .map(|(n, &h)| Complex64::from_polar(h, theta * n as f64))
        .collect();
    quadratic_form(rho, &v).max(0.0)
}

/// Uniform voltage bins over `[−x_extent, x_extent]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureBins {
    pub n_bins: usize,
    pub x_extent: f64,
}

impl QuadratureBins {
    pub fn new(n_bins: usize, x_extent: f64) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::Config(format!("{n_bins} voltage bins, need at least 2")));
        }
        if !(x_extent > 0.0 && x_extent.is_finite()) {
            return Err(Error::Config(format!("voltage extent {x_extent} must be positive")));
        }
        Ok(Self { n_bins, x_extent })
    }

    pub fn width(&self) -> f64 {
        2.0 * self.x_extent / self.n_bins as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.n_bins)
            .map(|k| -self.x_extent + (k as f64 + 0.5) * w)
            .collect()
    }

    /// Bin probabilities at phase `theta` from a piecewise-linear CDF on a
    /// fine mesh, renormalized over the covered range. Also returns the
    /// captured mass before renormalization.
    pub fn probabilities(&self, rho: &DensityMatrix, theta: f64) -> (Vec<f64>, f64) {
        let mesh = MIN_CDF_MESH.max(10 * self.n_bins + 1);
        let h = 2.0 * self.x_extent / (mesh - 1) as f64;
        let pdf: Vec<f64> = (0..mesh)
            .map(|i| quad_pdf(rho, -self.x_extent + i as f64 * h, theta))
            .collect();
        let mut cdf = Vec::with_capacity(mesh);
        cdf.push(0.0);
        for i in 1..mesh {
            cdf.push(cdf[i - 1] + 0.5 * h * (pdf[i - 1] + pdf[i]));
        }
        let captured = cdf[mesh - 1];
        let at = |x: f64| -> f64 {
            let t = ((x + self.x_extent) / h).clamp(0.0, (mesh - 1) as f64);
            let i = (t.floor() as usize).min(mesh - 2);
            let f = t - i as f64;
            cdf[i] * (1.0 - f) + cdf[i + 1] * f
        };
        let w = self.width();
        let mut probs: Vec<f64> = (0..self.n_bins)
            .map(|k| {
                let lo = -self.x_extent + k as f64 * w;
                (at(lo + w) - at(lo)).max(0.0)
            })
            .collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        (probs, captured)
    }
}

/// Regularized inverse-Radon filter
/// `∫_{|k|≤k_c} dk |k| e^{ikΔ} = 2[cos(k_cΔ) − 1 + k_cΔ sin(k_cΔ)]/Δ²`.
pub fn invr_kernel(delta: f64, k_c: f64) -> f64 {
    let y = k_c * delta;
    if y.abs() < 1e-3 {
        let y2 = y * y;
        k_c * k_c * (1.0 - y2 / 4.0 + y2 * y2 / 72.0)
    } else {
        2.0 * (y.cos() - 1.0 + y * y.sin()) / (delta * delta)
    }
}

/// Which kernel column to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// Weyl-moment kernel averaged against the Wigner function.
    W,
    /// Kernel averaged against the Husimi function.
    P,
}

/// Monomial `coef · x^i p^j`.
pub type Term = (f64, u32, u32);

/// Order-`m` moment kernels: `v_w` holds `x^k p^{m−k}` for `k = m..0` and
/// `v_p` the matching Gauss-deconvolved polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentKernelSet {
    order: usize,
    p_terms: Vec<Vec<Term>>,
}

impl MomentKernelSet {
    pub fn new(order: usize) -> Result<Self> {
        let p_terms: Vec<Vec<Term>> = match order {
            1 => vec![vec![(1.0, 1, 0)], vec![(1.0, 0, 1)]],
            2 => vec![
                vec![(1.0, 2, 0), (-0.5, 0, 0)],
                vec![(1.0, 1, 1)],
                vec![(1.0, 0, 2), (-0.5, 0, 0)],
            ],
            3 => vec![
                vec![(1.0, 3, 0), (-1.5, 1, 0)],
                vec![(1.0, 2, 1), (-0.5, 0, 1)],
                vec![(1.0, 1, 2), (-0.5, 1, 0)],
                vec![(1.0, 0, 3), (-1.5, 0, 1)],
            ],
            4 => vec![
                vec![(1.0, 4, 0), (-3.0, 2, 0), (0.75, 0, 0)],
                vec![(1.0, 3, 1), (-1.5, 1, 1)],
                vec![(1.0, 2, 2), (-0.5, 2, 0), (-0.5, 0, 2), (0.25, 0, 0)],
                vec![(1.0, 1, 3), (-1.5, 1, 1)],
                vec![(1.0, 0, 4), (-3.0, 0, 2), (0.75, 0, 0)],
            ],
            other => return Err(Error::UnsupportedOrder(other)),
        };
        Ok(Self { order, p_terms })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_components(&self) -> usize {
        self.order + 1
    }

    /// Exponents `(k, m − k)` of the Wigner monomial for `component`.
    pub fn w_exponents(&self, component: usize) -> (u32, u32) {
        let k = (self.order - component) as u32;
        (k, self.order as u32 - k)
    }

    pub fn p_terms(&self, component: usize) -> &[Term] {
        &self.p_terms[component]
    }

    pub fn eval(&self, point: PhasePoint, which: KernelKind) -> Vec<f64> {
        (0..self.n_components())
            .map(|c| match which {
                KernelKind::W => {
                    let (k, l) = self.w_exponents(c);
                    point.x.powi(k as i32) * point.p.powi(l as i32)
                }
                KernelKind::P => self.p_terms[c]
                    .iter()
                    .map(|&(coef, i, j)| coef * point.x.powi(i as i32) * point.p.powi(j as i32))
                    .sum(),
            })
            .collect()
    }

    /// Kernel values at every grid node, node-major.
    pub fn table(&self, grid: &PhaseGrid, which: KernelKind) -> Vec<f64> {
        grid.nodes().flat_map(|pt| self.eval(pt, which)).collect()
    }
}

pub fn kernel_eval(kernels: &MomentKernelSet, point: PhasePoint, which: KernelKind) -> Vec<f64> {
    kernels.eval(point, which)
}

/// `Σ_l w density_l` over the grid.
pub fn captured_mass(grid: &PhaseGrid, density: &[f64]) -> f64 {
    grid.cell_weight() * density.iter().sum::<f64>()
}

/// Midpoint quadrature `Σ_l w density_l integrand(l, α_l)` of a normalized
/// phase-space density, after checking that the grid captures its mass to
/// within [`DEFAULT_GRID_EPS`].
pub fn integrate<F>(grid: &PhaseGrid, density: &[f64], integrand: F) -> Result<Vec<f64>>
where
    F: Fn(usize, PhasePoint) -> Vec<f64>,
{
    if density.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: density.len(),
        });
    }
    let captured = captured_mass(grid, density);
    if (captured - 1.0).abs() > DEFAULT_GRID_EPS {
        return Err(Error::InsufficientExtent {
            captured,
            tolerance: DEFAULT_GRID_EPS,
        });
    }
    let w = grid.cell_weight();
    let mut acc: Vec<f64> = Vec::new();
    for (l, &d) in density.iter().enumerate() {
        let vals = integrand(l, grid.node(l));
        if acc.is_empty() {
            acc = vec![0.0; vals.len()];
        }
        for (a, v) in acc.iter_mut().zip(vals) {
            *a += w * d * v;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_fock, build_gaussian, GaussianSpec};

    #[test]
    fn husimi_point_values() {
        let vac = build_fock(0, 8).unwrap();
        assert!((husimi_q(&vac, PhasePoint::new(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((husimi_q(&vac, PhasePoint::new(2.0, 0.0)) - (-2f64).exp()).abs() < 1e-15);
        let f3 = build_fock(3, 10).unwrap();
        assert_eq!(husimi_q(&f3, PhasePoint::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn wigner_point_values() {
        let origin = PhasePoint::new(0.0, 0.0);
        assert!((wigner_w(&build_fock(0, 8).unwrap(), origin) - 2.0).abs() < 1e-14);
        assert!((wigner_w(&build_fock(1, 8).unwrap(), origin) + 2.0).abs() < 1e-14);
        assert!((wigner_w(&build_fock(3, 8).unwrap(), origin) + 2.0).abs() < 1e-14);
        // vacuum Gaussian away from the origin
        let pt = PhasePoint::new(0.7, -0.4);
        let expected = 2.0 * (-(0.49 + 0.16f64)).exp();
        assert!((wigner_w(&build_fock(0, 8).unwrap(), pt) - expected).abs() < 1e-14);
    }

    #[test]
    fn noclick_values() {
        let origin = PhasePoint::new(0.0, 0.0);
        let vac = build_fock(0, 10).unwrap();
        assert!((noclick_prob(&vac, origin, 0.5).unwrap() - 1.0).abs() < 1e-12);
        let f1 = build_fock(1, 10).unwrap();
        assert!((noclick_prob(&f1, origin, 0.5).unwrap() - 0.5).abs() < 1e-12);
        let pt = PhasePoint::new(0.9, 1.3);
        let g = build_gaussian(GaussianSpec::new(2.0, 1.3).unwrap(), 50).unwrap();
        assert!((noclick_prob(&g, pt, 1.0).unwrap() - husimi_q(&g, pt)).abs() < 1e-10);
        assert_eq!(noclick_prob(&vac, origin, 0.0), Err(Error::InvalidEfficiency(0.0)));
        assert_eq!(noclick_prob(&vac, origin, 1.2), Err(Error::InvalidEfficiency(1.2)));
    }

    #[test]
    fn quadrature_pdf_values() {
        let vac = build_fock(0, 6).unwrap();
        for theta in [0.0, 0.4, 2.0] {
            assert!((quad_pdf(&vac, 0.0, theta) - 1.0 / PI.sqrt()).abs() < 1e-14);
        }
        let f1 = build_fock(1, 6).unwrap();
        assert!(quad_pdf(&f1, 0.0, 1.1).abs() < 1e-15);
        let g = build_gaussian(GaussianSpec::new(2.0, 2.0).unwrap(), 60).unwrap();
        let expected = (-0.25f64).exp() / (4.0 * PI).sqrt();
        assert!((quad_pdf(&g, 1.0, 0.0) - expected).abs() < 1e-7);
    }

    #[test]
    fn kernel_rows() {
        let k2 = MomentKernelSet::new(2).unwrap();
        assert_eq!(k2.eval(PhasePoint::new(1.0, 0.0), KernelKind::P), vec![0.5, 0.0, -0.5]);
        let k4 = MomentKernelSet::new(4).unwrap();
        assert_eq!(
            k4.eval(PhasePoint::new(0.0, 0.0), KernelKind::P),
            vec![0.75, 0.0, 0.25, 0.0, 0.75]
        );
        let k1 = MomentKernelSet::new(1).unwrap();
        let pt = PhasePoint::new(0.3, -1.7);
        assert_eq!(k1.eval(pt, KernelKind::W), k1.eval(pt, KernelKind::P));
        assert_eq!(MomentKernelSet::new(5).unwrap_err(), Error::UnsupportedOrder(5));
        assert_eq!(MomentKernelSet::new(0).unwrap_err(), Error::UnsupportedOrder(0));
    }

    #[test]
    fn invr_kernel_is_continuous_at_zero() {
        let kc: f64 = 6.0;
        let d: f64 = 0.999e-3 / kc;
        let y = kc * d;
        let direct = 2.0 * (y.cos() - 1.0 + y * y.sin()) / (d * d);
        assert!((invr_kernel(d, kc) - direct).abs() < 1e-6);
        assert!((invr_kernel(0.0, kc) - 36.0).abs() < 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(PhaseGrid::new(6.0, 15).is_err());
        assert!(PhaseGrid::new(0.0, 32).is_err());
        let g = PhaseGrid::new(6.0, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.node(0).x + 6.0 - 0.375).abs() < 1e-15);
    }

    #[test]
    fn integrate_rejects_small_grid() {
        let f3 = build_fock(3, 20).unwrap();
        let grid = PhaseGrid::new(2.0, 40).unwrap();
        let q = husimi_field(&f3, &grid);
        assert!(matches!(
            integrate(&grid, &q, |_, _| vec![1.0]),
            Err(Error::InsufficientExtent { .. })
        ));
    }
}
