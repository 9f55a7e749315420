//! Monte Carlo data for the three detection schemes.
//!
//! Every parallel unit draws from its own ChaCha stream selected by
//! `(seed, unit)`, so records are bit-identical for a given seed regardless
//! of the thread count.

use std::io::{self, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::phase_space::{
    captured_mass, checked_probability, check_eta, husimi_field, noclick_field, PhaseGrid,
    QuadratureBins, DEFAULT_GRID_EPS,
};

/// Grid nodes per RNG stream for independent per-node draws.
pub const NODE_BLOCK: usize = 4096;

/// Stream `unit` of the generator keyed by `seed`.
pub fn substream(seed: u64, unit: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit);
    rng
}

/// SplitMix64 finalizer, used to give each replication its own seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D4_9BB1_3311_33EB);
    z ^ (z >> 31)
}

fn binomial_draw<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("binomial parameters checked").sample(rng)
    }
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<f64> {
    let mut remaining = n;
    let mut rest: f64 = probs.iter().sum();
    let mut out = vec![0.0; probs.len()];
    for (slot, &p) in out.iter_mut().zip(probs) {
        if remaining == 0 {
            break;
        }
        let c = if rest <= p { remaining } else { binomial_draw(rng, remaining, p / rest) };
        *slot = c as f64;
        remaining -= c;
        rest -= p;
    }
    out
}

/// Heterodyne counts over grid nodes. Counts are stored as floats so that
/// expected (noise-free) records share the type.
#[derive(Clone, Debug, PartialEq)]
pub struct HetRecord {
    pub counts: Vec<f64>,
    pub total: u64,
    /// Husimi mass inside the grid before renormalization.
    pub captured_mass: f64,
}

/// No-click counts per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct UhomRecord {
    pub counts: Vec<f64>,
    pub events_per_point: u64,
}

impl UhomRecord {
    /// The random used sample size `N = Σ n_l`.
    pub fn used_total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Binned quadrature counts, one row per phase.
#[derive(Clone, Debug, PartialEq)]
pub struct BhomRecord {
    pub phases: Vec<f64>,
    pub bins: QuadratureBins,
    pub counts: Vec<Vec<f64>>,
    pub per_phase_total: u64,
}

/// Normalized cell probabilities `w Q(α_l)` and the captured mass.
pub fn het_cell_probabilities(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<(Vec<f64>, f64)> {
    let q = husimi_field(rho, grid);
    let captured = captured_mass(grid, &q);
    if (captured - 1.0).abs() > DEFAULT_GRID_EPS {
        return Err(Error::InsufficientExtent {
            captured,
            tolerance: DEFAULT_GRID_EPS,
        });
    }
    let w = grid.cell_weight() / captured;
    Ok((q.iter().map(|v| v * w).collect(), captured))
}

pub fn sample_het(rho: &DensityMatrix, grid: &PhaseGrid, n: u64, seed: u64) -> Result<HetRecord> {
    let (probs, captured) = het_cell_probabilities(rho, grid)?;
    sample_het_from(&probs, captured, n, seed)
}

/// HET draw from precomputed cell probabilities.
pub fn sample_het_from(probs: &[f64], captured_mass: f64, n: u64, seed: u64) -> Result<HetRecord> {
    if n == 0 {
        return Err(Error::Config("HET sample size must be at least 1".into()));
    }
    let mut rng = substream(seed, 0);
    Ok(HetRecord {
        counts: multinomial(&mut rng, n, probs),
        total: n,
        captured_mass,
    })
}

/// No-click probabilities at every node, checked against the clamping rule.
pub fn uhom_probabilities(rho: &DensityMatrix, grid: &PhaseGrid, eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    noclick_field(rho, grid, eta)?
        .into_iter()
        .map(checked_probability)
        .collect()
}

pub fn sample_uhom(
    rho: &DensityMatrix,
    grid: &PhaseGrid,
    n0: u64,
    eta: f64,
    seed: u64,
) -> Result<UhomRecord> {
    let probs = uhom_probabilities(rho, grid, eta)?;
    sample_uhom_from(&probs, n0, seed)
}

/// Independent `Binomial(N0, p_l)` per node.
pub fn sample_uhom_from(probs: &[f64], n0: u64, seed: u64) -> Result<UhomRecord> {
    if n0 == 0 {
        return Err(Error::Config("UHOM events per point must be at least 1".into()));
    }
    let counts: Vec<f64> = probs
        .par_chunks(NODE_BLOCK)
        .enumerate()
        .flat_map_iter(|(b, chunk)| {
            let mut rng = substream(seed, b as u64);
            chunk
                .iter()
                .map(|&p| binomial_draw(&mut rng, n0, p) as f64)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(UhomRecord {
        counts,
        events_per_point: n0,
    })
}

/// Bin probabilities for each phase.
pub fn bhom_probabilities(rho: &DensityMatrix, phases: &[f64], bins: &QuadratureBins) -> Vec<Vec<f64>> {
    phases
        .par_iter()
        .map(|&theta| bins.probabilities(rho, theta).0)
        .collect()
}

pub fn sample_bhom(
    rho: &DensityMatrix,
    phases: &[f64],
    n_x: usize,
    x_extent: f64,
    n_tilde: u64,
    seed: u64,
) -> Result<BhomRecord> {
    let bins = QuadratureBins::new(n_x, x_extent)?;
    let probs = bhom_probabilities(rho, phases, &bins);
    sample_bhom_from(phases, &bins, &probs, n_tilde, seed)
}

/// Per phase, `Ñ` draws from the binned marginal. Drawing bins
/// multinomially from the piecewise-linear CDF is equivalent to binning
/// inverse-CDF samples.
pub fn sample_bhom_from(
    phases: &[f64],
    bins: &QuadratureBins,
    probs: &[Vec<f64>],
    n_tilde: u64,
    seed: u64,
) -> Result<BhomRecord> {
    if phases.is_empty() {
        return Err(Error::Config("at least one phase is required".into()));
    }
    if n_tilde == 0 {
        return Err(Error::Config("events per phase must be at least 1".into()));
    }
    let counts: Vec<Vec<f64>> = probs
        .par_iter()
        .enumerate()
        .map(|(j, p)| multinomial(&mut substream(seed, j as u64), n_tilde, p))
        .collect();
    Ok(BhomRecord {
        phases: phases.to_vec(),
        bins: bins.clone(),
        counts,
        per_phase_total: n_tilde,
    })
}

/// Noise-free HET record with counts `N p_l`.
pub fn expected_het(rho: &DensityMatrix, grid: &PhaseGrid, n: u64) -> Result<HetRecord> {
    let (probs, captured) = het_cell_probabilities(rho, grid)?;
    Ok(HetRecord {
        counts: probs.iter().map(|p| p * n as f64).collect(),
        total: n,
        captured_mass: captured,
    })
}

/// Noise-free UHOM record with counts `N0 p(α_l, η)`.
pub fn expected_uhom(rho: &DensityMatrix, grid: &PhaseGrid, n0: u64, eta: f64) -> Result<UhomRecord> {
    let probs = uhom_probabilities(rho, grid, eta)?;
    Ok(UhomRecord {
        counts: probs.iter().map(|p| p * n0 as f64).collect(),
        events_per_point: n0,
    })
}

/// Noise-free BHOM record with counts `Ñ p_jk`.
pub fn expected_bhom(
    rho: &DensityMatrix,
    phases: &[f64],
    bins: &QuadratureBins,
    n_tilde: u64,
) -> BhomRecord {
    let probs = bhom_probabilities(rho, phases, bins);
    BhomRecord {
        phases: phases.to_vec(),
        bins: bins.clone(),
        counts: probs
            .into_iter()
            .map(|row| row.into_iter().map(|p| p * n_tilde as f64).collect())
            .collect(),
        per_phase_total: n_tilde,
    }
}

fn write_nodes<W: Write>(out: &mut W, grid: &PhaseGrid, counts: &[f64]) -> io::Result<()> {
    writeln!(out, "index,x,p,count")?;
    for (l, c) in counts.iter().enumerate() {
        let pt = grid.node(l);
        writeln!(out, "{l},{:.16e},{:.16e},{c}", pt.x, pt.p)?;
    }
    Ok(())
}

impl HetRecord {
    pub fn write_csv<W: Write>(&self, out: &mut W, grid: &PhaseGrid) -> io::Result<()> {
        write_nodes(out, grid, &self.counts)
    }
}

impl UhomRecord {
    pub fn write_csv<W: Write>(&self, out: &mut W, grid: &PhaseGrid) -> io::Result<()> {
        write_nodes(out, grid, &self.counts)
    }
}

impl BhomRecord {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "phase_index,theta,bin_index,x,count")?;
        let centers = self.bins.centers();
        for (j, (theta, row)) in self.phases.iter().zip(&self.counts).enumerate() {
            for (k, c) in row.iter().enumerate() {
                writeln!(out, "{j},{theta:.16e},{k},{:.16e},{c}", centers[k])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_fock;

    #[test]
    fn seeds_reproduce() {
        let vac = build_fock(0, 10).unwrap();
        let grid = PhaseGrid::covering(&vac, 1, 41).unwrap();
        let a = sample_het(&vac, &grid, 500, 7).unwrap();
        let b = sample_het(&vac, &grid, 500, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_het(&vac, &grid, 500, 8).unwrap());
        assert_eq!(a.counts.iter().sum::<f64>(), 500.0);
    }

    #[test]
    fn single_event() {
        let vac = build_fock(0, 10).unwrap();
        let grid = PhaseGrid::covering(&vac, 1, 41).unwrap();
        let r = sample_het(&vac, &grid, 1, 3).unwrap();
        assert_eq!(r.counts.iter().filter(|&&c| c > 0.0).count(), 1);
    }

    #[test]
    fn degenerate_uhom_nodes() {
        // an odd grid has a node at the origin
        let grid = PhaseGrid::new(4.0, 41).unwrap();
        let origin = (0..grid.len())
            .find(|&l| grid.node(l).alpha_norm_sqr() < 1e-20)
            .unwrap();
        let vac = build_fock(0, 10).unwrap();
        let f3 = build_fock(3, 10).unwrap();
        for seed in 0..5 {
            assert_eq!(sample_uhom(&vac, &grid, 1000, 1.0, seed).unwrap().counts[origin], 1000.0);
            assert_eq!(sample_uhom(&f3, &grid, 1000, 1.0, seed).unwrap().counts[origin], 0.0);
        }
        assert!(sample_uhom(&vac, &grid, 10, 1.5, 0).is_err());
    }

    #[test]
    fn bhom_rows_sum_to_total() {
        let vac = build_fock(0, 10).unwrap();
        let r = sample_bhom(&vac, &[0.0, 1.0, 2.0], 41, 6.0, 1234, 9).unwrap();
        for row in &r.counts {
            assert_eq!(row.iter().sum::<f64>(), 1234.0);
        }
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 3 * 41);
    }
}
