//! Special functions used by the phase-space evaluators.

use num_complex::Complex64;
use statrs::function::gamma::{gamma_ur, ln_gamma};

pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Regularized upper incomplete gamma `Γ(a, x)/Γ(a)`.
pub fn upper_gamma_regularized(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(a, x)
    }
}

/// Generalized Laguerre polynomials `L_k^{(alpha)}(x)` for `k = 0..=degree`.
pub fn laguerre_sequence(degree: usize, alpha: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree == 0 {
        return out;
    }
    out.push(1.0 + alpha - x);
    for k in 1..degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Harmonic-oscillator eigenfunctions `ψ_0(x) … ψ_{count-1}(x)` with vacuum
/// variance 1/2, by the normalized three-term recurrence.
pub fn hermite_functions(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if count == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * out[0]);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Coherent-state amplitudes `⟨n|α⟩` for `n < dim`.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Matrix elements `⟨n|D(β)|m⟩` of the infinite-dimensional displacement
/// operator for `n < rows`, `m < cols`, stored row-major.
///
/// Uses the Laguerre closed form with log-scaled prefactors so that large
/// index gaps neither overflow nor underflow prematurely.
pub fn displacement_block(beta: Complex64, rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    let x = beta.norm_sqr();
    if x == 0.0 {
        for i in 0..rows.min(cols) {
            out[i * cols + i] = Complex64::new(1.0, 0.0);
        }
        return out;
    }
    let ln_abs = 0.5 * x.ln();
    let lnf: Vec<f64> = (0..rows.max(cols)).map(ln_factorial).collect();
    let phase = beta / beta.norm();
    let minus_conj_phase = -phase.conj();

    // n >= m: offset d = n - m
    for d in 0..rows {
        let count = cols.min(rows - d);
        if count == 0 {
            continue;
        }
        let lag = laguerre_sequence(count - 1, d as f64, x);
        let ph = phase.powu(d as u32);
        for m in 0..count {
            let n = m + d;
            let l = lag[m];
            if l == 0.0 {
                continue;
            }
            let ln_mag = 0.5 * (lnf[m] - lnf[n]) + d as f64 * ln_abs - 0.5 * x
                + l.abs().ln();
            out[n * cols + m] = ph * (l.signum() * ln_mag.exp());
        }
    }
    // n < m: offset d = m - n
    for d in 1..cols {
        let count = rows.min(cols - d);
        if count == 0 {
            continue;
        }
        let lag = laguerre_sequence(count - 1, d as f64, x);
        let ph = minus_conj_phase.powu(d as u32);
        for n in 0..count {
            let m = n + d;
            let l = lag[n];
            if l == 0.0 {
                continue;
            }
            let ln_mag = 0.5 * (lnf[n] - lnf[m]) + d as f64 * ln_abs - 0.5 * x
                + l.abs().ln();
            out[n * cols + m] = ph * (l.signum() * ln_mag.exp());
        }
    }
    out
}
