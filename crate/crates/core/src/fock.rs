//! Truncated Fock-space states and operators.
//!
//! Every state is a [`DensityMatrix`] on the levels `0..dim`. Operators that
//! must be exact on such a state (the quadratures used by the Weyl-moment
//! oracle) are built on a padded space so that truncation never touches the
//! populated levels.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default bound on the population of the highest retained level.
pub const DEFAULT_TAIL_EPS: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = -1e-10;
const EXPM_TOL: f64 = 1e-12;

/// Truncation dimensions tried by [`build_gaussian_auto`].
const AUTO_DIMS: [usize; 8] = [30, 40, 60, 80, 100, 140, 200, 280];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A square complex matrix on a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    elements: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn from_matrix(elements: DMatrix<Complex64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                found: elements.ncols(),
            });
        }
        Ok(Self { elements })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            elements: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.elements[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            elements: self.elements.adjoint(),
        }
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            elements: &self.elements * &other.elements,
        })
    }

    /// Largest elementwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        (&self.elements - &other.elements)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Annihilation and creation operators on `dim` levels.
pub fn ladder(dim: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    let a = OperatorMatrix { elements: a };
    let ad = a.adjoint();
    Ok((a, ad))
}

/// Position and momentum quadratures `X = (a + a†)/√2`, `P = (a − a†)/(i√2)`.
pub fn quadratures(dim: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let (a, ad) = ladder(dim)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a.elements + &ad.elements) * c(s);
    let p = (&a.elements - &ad.elements) * Complex64::new(0.0, -s);
    Ok((OperatorMatrix { elements: x }, OperatorMatrix { elements: p }))
}

/// Matrix exponential by Taylor series with scaling and squaring.
pub fn expm<T>(m: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = m.nrows();
    let norm = m.norm();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scale = T::from_real(0.5f64.powi(squarings as i32));
    let a = m * scale;
    let mut sum = DMatrix::<T>::identity(n, n);
    let mut term = DMatrix::<T>::identity(n, n);
    for k in 1..64 {
        term = &term * &a * T::from_real(1.0 / k as f64);
        sum += &term;
        if term.norm() <= EXPM_TOL * sum.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Displacement operator `exp(α a† − α* a)` computed on the truncated space.
///
/// Unitarity degrades once `|α|²` approaches `dim/4`; use
/// [`OperatorMatrix::max_abs_diff`] against the identity to check.
pub fn displacement(alpha: Complex64, dim: usize) -> Result<OperatorMatrix> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite displacement {alpha}")));
    }
    let (a, ad) = ladder(dim)?;
    let gen = &ad.elements * alpha - &a.elements * alpha.conj();
    Ok(OperatorMatrix { elements: expm(&gen) })
}

/// Real squeeze operator `exp(r (a†² − a²)/2)`, which stretches `X` by `e^r`.
pub fn squeeze(r: f64, dim: usize) -> Result<DMatrix<f64>> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut gen = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..dim.saturating_sub(2) {
        let amp = ((n + 1) as f64 * (n + 2) as f64).sqrt() * 0.5 * r;
        gen[(n + 2, n)] = amp;
        gen[(n, n + 2)] = -amp;
    }
    Ok(expm(&gen))
}

/// Single-mode state on a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates and normalizes a candidate density matrix.
    ///
    /// The matrix must be Hermitian to 1e-12, positive to −1e-10 and have a
    /// highest-level population below `tail_eps`. The returned state is
    /// exactly Hermitian with unit trace.
    pub fn new(elements: DMatrix<Complex64>, tail_eps: f64) -> Result<Self> {
        let dim = elements.nrows();
        if elements.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: elements.ncols(),
            });
        }
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let herm_err = (&elements - elements.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_err > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: max |ρ − ρ†| = {herm_err:e}"
            )));
        }
        let mut sym = (&elements + elements.adjoint()) * c(0.5);
        let trace = sym.trace().re;
        if !(trace > 0.0) {
            return Err(Error::InvalidState(format!("non-positive trace {trace}")));
        }
        sym /= c(trace);
        let eig = SymmetricEigen::new(sym.clone());
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < EIGEN_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        let tail = sym[(dim - 1, dim - 1)].re;
        if !(tail < tail_eps) {
            return Err(Error::TruncationInsufficient {
                dim,
                mass: tail,
                limit: tail_eps,
            });
        }
        Ok(Self { elements: sym })
    }

    /// Pure state `|ψ⟩⟨ψ|` from (unnormalized) Fock amplitudes.
    pub fn pure(amplitudes: &[Complex64], tail_eps: f64) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(&v * v.adjoint(), tail_eps)
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elements[(m, n)]
    }

    /// Fock populations `ρ_nn`.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.elements[(n, n)].re).collect()
    }

    pub fn tail_mass(&self) -> f64 {
        self.elements[(self.dim() - 1, self.dim() - 1)].re
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `Tr[ρ A]`.
    pub fn expectation(&self, op: &OperatorMatrix) -> Result<Complex64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok((&self.elements * op.elements()).trace())
    }

    /// The same state zero-padded to `dim` levels.
    pub fn embedded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        let mut m = DMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.elements);
        Ok(Self { elements: m })
    }

    /// Spectral decomposition keeping eigenvalues above `floor`, as pairs of
    /// weight and normalized eigenvector.
    pub fn spectral_components(&self, floor: f64) -> Vec<(f64, Vec<Complex64>)> {
        let eig = SymmetricEigen::new(self.elements.clone());
        let mut comps: Vec<(f64, Vec<Complex64>)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > floor)
            .map(|(i, &w)| (w, eig.eigenvectors.column(i).iter().copied().collect()))
            .collect();
        comps.sort_by(|a, b| b.0.total_cmp(&a.0));
        comps
    }
}

/// Thermal-then-squeezed Gaussian state parameters.
///
/// The Wigner covariance has eigenvalues `μλ/2` (along `X`) and `μ/(2λ)`
/// (along `P`).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianSpec {
    pub mu: f64,
    pub lambda: f64,
}

impl GaussianSpec {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        let spec = Self { mu, lambda };
        spec.validate()?;
        Ok(spec)
    }

    /// The `μ = λ` family used throughout the closed-form catalogs.
    pub fn symmetric(mu: f64) -> Result<Self> {
        Self::new(mu, mu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 1.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu = {} must be ≥ 1", self.mu)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {} must be > 0",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Wigner covariance eigenvalues `(var X, var P)`.
    pub fn wigner_variances(&self) -> (f64, f64) {
        (
            0.5 * self.mu * self.lambda,
            0.5 * self.mu / self.lambda,
        )
    }

    /// Husimi covariance `(var x, var p)`, the Wigner one plus 1/2.
    pub fn husimi_variances(&self) -> (f64, f64) {
        let (vx, vp) = self.wigner_variances();
        (vx + 0.5, vp + 0.5)
    }
}

/// Projector onto Fock level `n`.
pub fn build_fock(n: usize, dim: usize) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if n >= dim {
        return Err(Error::OutOfRange { level: n, dim });
    }
    let mut m = DMatrix::zeros(dim, dim);
    m[(n, n)] = c(1.0);
    // the top level is allowed to be occupied only when explicitly requested
    let eps = if n == dim - 1 { f64::INFINITY } else { DEFAULT_TAIL_EPS };
    DensityMatrix::new(m, eps)
}

/// `S(r) ρ_th(μ) S†(r)` with `λ = e^{2r}`, truncated to `dim` levels.
///
/// The state is assembled on a padded space and then cut, so the retained
/// block is free of truncation artefacts of the squeeze exponential.
pub fn build_gaussian(spec: GaussianSpec, dim: usize) -> Result<DensityMatrix> {
    build_gaussian_with_tail(spec, dim, DEFAULT_TAIL_EPS)
}

pub fn build_gaussian_with_tail(
    spec: GaussianSpec,
    dim: usize,
    tail_eps: f64,
) -> Result<DensityMatrix> {
    spec.validate()?;
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let work = 2 * dim + 20;
    let nbar = 0.5 * (spec.mu - 1.0);
    let ratio = nbar / (nbar + 1.0);
    let mut thermal = DMatrix::<f64>::zeros(work, work);
    let mut pop = 1.0 - ratio;
    for n in 0..work {
        thermal[(n, n)] = pop;
        pop *= ratio;
    }
    let r = 0.5 * spec.lambda.ln();
    let s = squeeze(r, work)?;
    let full = &s * thermal * s.transpose();
    let cut = full.view((0, 0), (dim, dim)).map(c);
    DensityMatrix::new(cut, tail_eps)
}

/// [`build_gaussian`] at the smallest dimension from a fixed ladder whose
/// tail mass is below the default bound.
pub fn build_gaussian_auto(spec: GaussianSpec) -> Result<DensityMatrix> {
    let mut last = None;
    for dim in AUTO_DIMS {
        match build_gaussian(spec, dim) {
            Ok(rho) => return Ok(rho),
            Err(e @ Error::TruncationInsufficient { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("ladder is non-empty"))
}

/// Random full-rank mixed state supported on the lowest `support` levels of
/// a `dim`-level space (Ginibre construction).
pub fn random_mixed_state<R: Rng + ?Sized>(
    dim: usize,
    support: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if support == 0 || support >= dim {
        return Err(Error::InvalidParameter(format!(
            "support {support} must lie in 1..{dim}"
        )));
    }
    let g = DMatrix::<Complex64>::from_fn(support, support, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let small = &g * g.adjoint();
    let mut m = DMatrix::zeros(dim, dim);
    m.view_mut((0, 0), (support, support)).copy_from(&small);
    DensityMatrix::new(m, DEFAULT_TAIL_EPS)
}

fn weyl_moment_complex(rho: &DensityMatrix, k: usize, l: usize) -> Result<Complex64> {
    let order = k + l;
    if order > 4 {
        return Err(Error::UnsupportedOrder(order));
    }
    if order == 0 {
        return Ok(c(1.0));
    }
    // each quadrature moves the level by at most one, so `order` extra levels
    // make every product exact on the support of ρ
    let padded = rho.embedded(rho.dim() + order + 1)?;
    let (x, p) = quadratures(padded.dim())?;
    let mut total = Complex64::new(0.0, 0.0);
    let mut words = 0usize;
    for mask in 0u32..(1 << order) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut prod = padded.elements().clone();
        for pos in 0..order {
            let op = if mask & (1 << pos) != 0 { &x } else { &p };
            prod = &prod * op.elements();
        }
        total += prod.trace();
        words += 1;
    }
    Ok(total / words as f64)
}

/// `Tr[ρ W(X^k P^l)]` where `W` averages every distinct ordering of `k`
/// copies of `X` and `l` copies of `P`. Supports `k + l ≤ 4`.
pub fn weyl_moment_oracle(rho: &DensityMatrix, k: usize, l: usize) -> Result<f64> {
    Ok(weyl_moment_complex(rho, k, l)?.re)
}

/// Imaginary residue of the Weyl-ordered expectation (zero for a valid state).
pub fn weyl_moment_imaginary_residue(rho: &DensityMatrix, k: usize, l: usize) -> Result<f64> {
    Ok(weyl_moment_complex(rho, k, l)?.im)
}

/// All order-`m` Weyl moments ordered as `x^m, x^{m-1}p, …, p^m`.
pub fn weyl_moments(rho: &DensityMatrix, m: usize) -> Result<Vec<f64>> {
    if !(1..=4).contains(&m) {
        return Err(Error::UnsupportedOrder(m));
    }
    (0..=m).rev().map(|k| weyl_moment_oracle(rho, k, m - k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_entries() {
        let (a, ad) = ladder(2).unwrap();
        assert_eq!(a.get(0, 1), c(1.0));
        assert_eq!(a.get(1, 0), c(0.0));
        assert_eq!(a.get(0, 0), c(0.0));
        assert_eq!(ad.get(1, 0), c(1.0));

        let (a, _) = ladder(4).unwrap();
        assert!((a.get(2, 3).re - 3f64.sqrt()).abs() < 1e-15);

        let (a, ad) = ladder(16).unwrap();
        let num = ad.matmul(&a).unwrap();
        for n in 0..16 {
            assert!((num.get(n, n).re - n as f64).abs() < 1e-12);
        }
        assert_eq!(ladder(1).unwrap_err(), Error::InvalidDimension(1));
    }

    #[test]
    fn fock_projectors() {
        let vac = build_fock(0, 8).unwrap();
        assert_eq!(vac.get(0, 0), c(1.0));
        let f3 = build_fock(3, 50).unwrap();
        assert_eq!(f3.get(3, 3), c(1.0));
        assert_eq!(f3.tail_mass(), 0.0);
        assert!((weyl_moment_oracle(&f3, 2, 0).unwrap() - 3.5).abs() < 1e-12);
        assert_eq!(
            build_fock(5, 5).unwrap_err(),
            Error::OutOfRange { level: 5, dim: 5 }
        );
    }

    #[test]
    fn weyl_oracle_basics() {
        let vac = build_fock(0, 10).unwrap();
        assert!((weyl_moment_oracle(&vac, 2, 0).unwrap() - 0.5).abs() < 1e-14);
        assert!(weyl_moment_oracle(&vac, 1, 1).unwrap().abs() < 1e-14);
        for n in 0..6 {
            let f = build_fock(n, 20).unwrap();
            let x2 = weyl_moment_oracle(&f, 2, 0).unwrap();
            assert!((x2 - (n as f64 + 0.5)).abs() < 1e-12);
        }
        assert_eq!(
            weyl_moment_oracle(&vac, 3, 2).unwrap_err(),
            Error::UnsupportedOrder(5)
        );
    }

    #[test]
    fn commutator_convention() {
        // Tr[ρ (XP − PX)] = i
        let rho = build_gaussian(GaussianSpec::new(2.0, 1.5).unwrap(), 60).unwrap();
        let padded = rho.embedded(rho.dim() + 3).unwrap();
        let (x, p) = quadratures(padded.dim()).unwrap();
        let xp = padded.expectation(&x.matmul(&p).unwrap()).unwrap();
        let px = padded.expectation(&p.matmul(&x).unwrap()).unwrap();
        let comm = xp - px;
        assert!((comm - Complex64::new(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn gaussian_vacuum_limit() {
        let g = build_gaussian(GaussianSpec::new(1.0, 1.0).unwrap(), 30).unwrap();
        let v = build_fock(0, 30).unwrap();
        let diff = (g.elements() - v.elements())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn gaussian_second_moments() {
        let g = build_gaussian(GaussianSpec::new(2.0, 2.0).unwrap(), 60).unwrap();
        assert!((weyl_moment_oracle(&g, 2, 0).unwrap() - 2.0).abs() < 2e-6);
        let g = build_gaussian(GaussianSpec::new(3.0, 3.0).unwrap(), 80).unwrap();
        assert!((weyl_moment_oracle(&g, 0, 2).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn gaussian_truncation_error_names_mass() {
        let err = build_gaussian(GaussianSpec::new(3.0, 3.0).unwrap(), 10).unwrap_err();
        match err {
            Error::TruncationInsufficient { dim, mass, .. } => {
                assert_eq!(dim, 10);
                assert!(mass > DEFAULT_TAIL_EPS);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn displacement_properties() {
        let id = displacement(Complex64::new(0.0, 0.0), 12).unwrap();
        assert!(id.max_abs_diff(&OperatorMatrix::identity(12)) < 1e-15);

        let d = displacement(c(1.0), 40).unwrap();
        let mut fact = 1.0;
        for n in 0..12 {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-0.5f64).exp() / fact.sqrt();
            assert!((d.get(n, 0).re - expected).abs() < 1e-10, "n = {n}");
        }

        let d = displacement(Complex64::new(0.0, 2.0), 60).unwrap();
        let dd = d.matmul(&d.adjoint()).unwrap();
        assert!(dd.max_abs_diff(&OperatorMatrix::identity(60)) < 1e-8);
    }

    #[test]
    fn invalid_state_rejected() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = c(1.0);
        assert!(matches!(
            DensityMatrix::new(m, DEFAULT_TAIL_EPS),
            Err(Error::InvalidState(_))
        ));
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = c(1.5);
        m[(1, 1)] = c(-0.5);
        assert!(matches!(
            DensityMatrix::new(m, DEFAULT_TAIL_EPS),
            Err(Error::InvalidState(_))
        ));
    }
}
