//! Phase-space tomography workbench for single-mode continuous-variable states.
//!
//! The crate computes scaled Cramér-Rao bounds (sCRB) for four ways of
//! sampling a photonic state:
//!
//! * heterodyning (HET), which samples the Husimi function with a fixed
//!   total number of events;
//! * unbalanced homodyning (UHOM), which counts binomial "no-click" events
//!   at every phase-space point of a grid;
//! * balanced homodyning with inverse-Radon reconstruction (BHOM);
//! * balanced homodyning with direct quadrature-moment inversion (BHOMOPT).
//!
//! Bounds are available by numeric phase-space quadrature, by closed-form
//! catalogs for Gaussian and Fock states, and through the Husimi
//! characteristic functions. The [`sampler`] and [`estimator`] modules
//! simulate the three detection schemes and measure the scaled mean squared
//! error of the corresponding estimators against the exact Weyl moments.
//!
//! Phase-space convention: `X = (a + a†)/√2`, `P = (a − a†)/(i√2)`,
//! `α = (x + i p)/√2`, `Q(α) = ⟨α|ρ|α⟩` and the measure `(dα)/π = dx dp/(2π)`.
//! With these choices the vacuum has quadrature variance 1/2, `0 ≤ Q ≤ 1`
//! and `−2 ≤ W ≤ 2`.

pub mod crb;
pub mod error;
pub mod estimator;
pub mod fock;
pub mod phase_space;
pub mod sampler;
pub mod series;
pub mod special;

pub use crate::crb::{
    closed_form, crossover_find, scrb_bhom_numeric, scrb_het_numeric, scrb_realistic,
    scrb_uhom_numeric, BhomConfig, CharacteristicSpec, ClosedFormFamily, Crossover, Method,
    Provenance, ScrbReport,
};
pub use crate::error::{Error, Result};
pub use crate::estimator::{run_mse_harness, MseExperiment, MseReport, StateFamily};
pub use crate::fock::{build_fock, build_gaussian, DensityMatrix, GaussianSpec, OperatorMatrix};
pub use crate::phase_space::{MomentKernelSet, PhaseGrid, PhasePoint};
