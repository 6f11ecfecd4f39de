//! Initial state, all-block evolution and the dense two-atom/two-mode state.
//!
//! Dense layout: amplitude of `|f1, f2, a1, a2>` sits at
//! `(f1 * D + f2) * 4 + atom_index(a1, a2)` with `D = n_max + kappa + 1` and
//! the atomic order `|1,1>, |1,2>, |2,1>, |2,2>`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{block_coefficients, validate_config, BlockCoefficients, SystemConfig};
use crate::propagator::{BlockEvolver, BlockTrajectory};
use crate::{Matrix4c, Vector4c};

/// Largest coherent-state probability allowed beyond the Fock cutoff.
pub const TAIL_LIMIT: f64 = 1e-10;

/// Fock amplitudes of a coherent state with real, non-negative displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentExpansion {
    pub nbar: f64,
    /// `q_n` for `n = 0..=n_cut`.
    pub coefficients: Vec<f64>,
    /// Probability of `n > n_cut`.
    pub tail_mass: f64,
}

impl CoherentExpansion {
    /// Poissonian amplitudes up to `n_cut` without checking the tail.
    pub fn truncated(nbar: f64, n_cut: usize) -> Self {
        let coefficients = (0..=n_cut).map(|n| poisson_amplitude(nbar, n)).collect();
        // Sum the tail directly instead of 1 - sum(kept), which cancels.
        let mut tail = 0.0;
        let mut n = n_cut + 1;
        loop {
            let p = poisson_amplitude(nbar, n).powi(2);
            tail += p;
            if (n as f64 > nbar && p <= 1e-30 * tail.max(1e-300)) || p == 0.0 || n > n_cut + 100_000 {
                break;
            }
            n += 1;
        }
        CoherentExpansion { nbar, coefficients, tail_mass: tail }
    }

    pub fn get(&self, n: usize) -> f64 {
        self.coefficients.get(n).copied().unwrap_or(0.0)
    }

    /// `sum_{n >= from} q_n^2` over the kept coefficients.
    pub fn mass_from(&self, from: usize) -> f64 {
        self.coefficients.iter().skip(from).map(|q| q * q).sum()
    }
}

/// `e^{-nbar/2} nbar^{n/2} / sqrt(n!)`, evaluated in the log domain.
fn poisson_amplitude(nbar: f64, n: usize) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let log_fact: f64 = (1..=n).map(|m| (m as f64).ln()).sum();
    (0.5 * (-nbar + n as f64 * nbar.ln() - log_fact)).exp()
}

pub fn coherent_coefficients(nbar: f64, n_cut: usize) -> Result<CoherentExpansion> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidParameter { name: "nbar", reason: format!("must be >= 0, got {nbar}") });
    }
    let exp = CoherentExpansion::truncated(nbar, n_cut);
    if exp.tail_mass > TAIL_LIMIT {
        return Err(Error::TruncationTooSmall { tail: exp.tail_mass, limit: TAIL_LIMIT, n_cut });
    }
    Ok(exp)
}

/// The four amplitudes `A_1..A_4` of one block.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockAmplitudes(pub [Complex64; 4]);

impl BlockAmplitudes {
    pub fn to_vector(&self) -> Vector4c {
        Vector4c::from_column_slice(&self.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockIndex {
    pub n1: usize,
    pub n2: usize,
}

/// All block labels in row-major order.
pub fn block_indices(n_max: usize) -> impl Iterator<Item = BlockIndex> {
    (0..=n_max).flat_map(move |n1| (0..=n_max).map(move |n2| BlockIndex { n1, n2 }))
}

/// Projection of `(cos theta |1,1> + e^{-i phi} sin theta |2,2>) |q1> |q2>`
/// onto the block kets.
pub fn initial_block_amplitudes(cfg: &SystemConfig) -> Result<Vec<(BlockIndex, BlockAmplitudes)>> {
    let n_cut = cfg.n_max + cfg.kappa;
    let field = [coherent_coefficients(cfg.nbar[0], n_cut)?, coherent_coefficients(cfg.nbar[1], n_cut)?];
    Ok(initial_amplitudes_from(cfg, &field))
}

fn initial_amplitudes_from(cfg: &SystemConfig, field: &[CoherentExpansion; 2]) -> Vec<(BlockIndex, BlockAmplitudes)> {
    let upper = Complex64::from(cfg.theta.cos());
    let lower = Complex64::from_polar(cfg.theta.sin(), -cfg.phi);
    let k = cfg.kappa;
    block_indices(cfg.n_max)
        .map(|idx| {
            let a1 = upper * field[0].get(idx.n1) * field[1].get(idx.n2);
            let a4 = lower * field[0].get(idx.n1 + k) * field[1].get(idx.n2 + k);
            let zero = Complex64::new(0.0, 0.0);
            (idx, BlockAmplitudes([a1, zero, zero, a4]))
        })
        .collect()
}

/// Position of `|a1, a2>` (levels 1 or 2) in the atomic basis.
pub fn atom_index(a1: usize, a2: usize) -> usize {
    2 * (a1 - 1) + (a2 - 1)
}

/// Dense slots written by block `(n1, n2)`, in ket order.
pub fn block_slots(n1: usize, n2: usize, kappa: usize, field_dim: usize) -> [usize; 4] {
    let at = |f1: usize, f2: usize, atoms: usize| (f1 * field_dim + f2) * 4 + atoms;
    [at(n1, n2, 0), at(n1, n2 + kappa, 1), at(n1 + kappa, n2, 2), at(n1 + kappa, n2 + kappa, 3)]
}

/// Full state vector on `|f1, f2> (x) |a1, a2>`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub field_dim: usize,
    pub time: f64,
    pub amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn zeros(field_dim: usize, time: f64) -> Self {
        DenseState { field_dim, time, amplitudes: vec![Complex64::new(0.0, 0.0); 4 * field_dim * field_dim] }
    }

    pub fn get(&self, f1: usize, f2: usize, a1: usize, a2: usize) -> Complex64 {
        self.amplitudes[(f1 * self.field_dim + f2) * 4 + atom_index(a1, a2)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Places block amplitudes into the dense basis with the free phases
/// `e^{-i alpha_m t}`.
pub fn assemble_dense<'a>(
    field_dim: usize,
    kappa: usize,
    blocks: impl IntoIterator<Item = (&'a BlockCoefficients, &'a BlockAmplitudes)>,
    t: f64,
) -> DenseState {
    let mut state = DenseState::zeros(field_dim, t);
    for (coeffs, amps) in blocks {
        let slots = block_slots(coeffs.n1, coeffs.n2, kappa, field_dim);
        for m in 0..4 {
            state.amplitudes[slots[m]] = amps.0[m] * Complex64::from_polar(1.0, -coeffs.alpha[m] * t);
        }
    }
    state
}

/// Two-atom density matrix with both field modes traced out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDensity {
    pub matrix: Matrix4c,
    /// Trace before any normalization; shrinks as the state decays.
    pub raw_trace: f64,
}

impl ReducedDensity {
    pub fn new(matrix: Matrix4c) -> Self {
        ReducedDensity { raw_trace: matrix.trace().re, matrix }
    }

    /// Diagonal divided by the raw trace.
    pub fn populations(&self) -> Result<[f64; 4]> {
        if !(self.raw_trace > 0.0) {
            return Err(Error::ZeroTrace { trace: self.raw_trace });
        }
        Ok(std::array::from_fn(|i| self.matrix[(i, i)].re / self.raw_trace))
    }
}

pub fn partial_trace_atoms(state: &DenseState) -> ReducedDensity {
    let mut rho = Matrix4c::zeros();
    for field in state.amplitudes.chunks_exact(4) {
        for a in 0..4 {
            if field[a] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..4 {
                rho[(a, b)] += field[a] * field[b].conj();
            }
        }
    }
    ReducedDensity::new(rho)
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn overlap(a: &DenseState, b: &DenseState) -> Result<Complex64> {
    if a.amplitudes.len() != b.amplitudes.len() {
        return Err(Error::DimensionMismatch { left: a.amplitudes.len(), right: b.amplitudes.len() });
    }
    Ok(a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum())
}

struct BlockRun {
    coeffs: BlockCoefficients,
    initial: BlockAmplitudes,
    trajectory: BlockTrajectory,
}

/// Every block of a configuration, ready to be evaluated at any time.
pub struct Simulation {
    cfg: SystemConfig,
    field: [CoherentExpansion; 2],
    blocks: Vec<BlockRun>,
}

impl Simulation {
    /// Validates the configuration and requires the coherent tail to be below
    /// [`TAIL_LIMIT`].
    pub fn new(cfg: SystemConfig) -> Result<Self> {
        let cfg = validate_config(cfg)?;
        let n_cut = cfg.n_max + cfg.kappa;
        let field = [coherent_coefficients(cfg.nbar[0], n_cut)?, coherent_coefficients(cfg.nbar[1], n_cut)?];
        Self::build(cfg, field)
    }

    /// Like [`Simulation::new`] but accepts any coherent tail; for toy
    /// truncations.
    pub fn with_any_truncation(cfg: SystemConfig) -> Result<Self> {
        let cfg = validate_config(cfg)?;
        let n_cut = cfg.n_max + cfg.kappa;
        let field =
            [CoherentExpansion::truncated(cfg.nbar[0], n_cut), CoherentExpansion::truncated(cfg.nbar[1], n_cut)];
        Self::build(cfg, field)
    }

    fn build(cfg: SystemConfig, field: [CoherentExpansion; 2]) -> Result<Self> {
        let initial = initial_amplitudes_from(&cfg, &field);
        let blocks = initial
            .into_par_iter()
            .map(|(idx, amps)| {
                let coeffs = block_coefficients(&cfg, idx.n1, idx.n2)?;
                let evolver = BlockEvolver::new(coeffs);
                if !evolver.exponential.nodes.iter().all(|z| z.is_finite()) {
                    return Err(Error::Block {
                        n1: idx.n1,
                        n2: idx.n2,
                        source: Box::new(Error::InvalidParameter {
                            name: "generator",
                            reason: "non-finite eigenvalues".into(),
                        }),
                    });
                }
                let trajectory = evolver.trajectory(&amps);
                Ok(BlockRun { coeffs, initial: amps, trajectory })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulation { cfg, field, blocks })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn field(&self) -> &[CoherentExpansion; 2] {
        &self.field
    }

    /// Probability not captured by the block kets at `t = 0`: the coherent
    /// tails plus the `|2,2>` components with fewer than `kappa` photons in a
    /// mode, which no block contains.
    pub fn initial_deficit(&self) -> f64 {
        1.0 - self.blocks.iter().map(|b| b.initial.norm_sqr()).sum::<f64>()
    }

    pub fn block_coefficients(&self) -> impl Iterator<Item = &BlockCoefficients> {
        self.blocks.iter().map(|b| &b.coeffs)
    }

    pub fn initial_blocks(&self) -> impl Iterator<Item = (&BlockCoefficients, &BlockAmplitudes)> {
        self.blocks.iter().map(|b| (&b.coeffs, &b.initial))
    }

    /// Block amplitudes at `t`, in block order.
    pub fn blocks_at(&self, t: f64) -> Result<Vec<BlockAmplitudes>> {
        self.blocks
            .iter()
            .map(|b| {
                let a = b.trajectory.at(t);
                if a.is_finite() {
                    Ok(a)
                } else {
                    Err(Error::Block {
                        n1: b.coeffs.n1,
                        n2: b.coeffs.n2,
                        source: Box::new(Error::InvalidParameter {
                            name: "amplitudes",
                            reason: format!("non-finite at t = {t}"),
                        }),
                    })
                }
            })
            .collect()
    }

    pub fn state_at(&self, t: f64) -> Result<DenseState> {
        let amps = self.blocks_at(t)?;
        Ok(self.assemble(&amps, t))
    }

    /// Dense state from externally evolved block amplitudes (block order).
    pub fn assemble(&self, amps: &[BlockAmplitudes], t: f64) -> DenseState {
        assemble_dense(self.cfg.field_dim(), self.cfg.kappa, self.blocks.iter().map(|b| &b.coeffs).zip(amps), t)
    }

    pub fn initial_state(&self) -> DenseState {
        assemble_dense(self.cfg.field_dim(), self.cfg.kappa, self.initial_blocks(), 0.0)
    }
}
