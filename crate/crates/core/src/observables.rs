//! Entanglement, geometric phase and population observables.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::state::{overlap, partial_trace_atoms, DenseState, ReducedDensity, Simulation};

/// Overlaps smaller than this have no meaningful phase.
pub const PHASE_NODE: f64 = 1e-14;

/// Smallest neighbour-to-neighbour phase change counted as a jump (radians).
pub const JUMP_THRESHOLD: f64 = 1.0;

/// Trace-normalized `sqrt(2 sum_{i != j} (rho_ii rho_jj - rho_ij rho_ji))`.
///
/// For a unit-trace matrix this is `sqrt(2 (1 - Tr rho^2))`: a measure of how
/// mixed the two-atom state is, i.e. of the entanglement between the atom pair
/// and the field. A small negative radicand from rounding is clamped to zero.
pub fn concurrence(rho: &ReducedDensity) -> Result<f64> {
    if !(rho.raw_trace > 0.0) {
        return Err(Error::ZeroTrace { trace: rho.raw_trace });
    }
    let m = rho.matrix / Complex64::from(rho.raw_trace);
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                sum += m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
            }
        }
    }
    Ok((2.0 * sum.re.max(0.0)).sqrt())
}

/// `arg <psi0|psit>` in `(-pi, pi]`.
pub fn pancharatnam(psi0: &DenseState, psit: &DenseState) -> Result<f64> {
    phase_of(overlap(psi0, psit)?)
}

fn phase_of(z: Complex64) -> Result<f64> {
    let magnitude = z.norm();
    if !(magnitude >= PHASE_NODE) {
        return Err(Error::UndefinedPhase { magnitude });
    }
    Ok(principal(z.arg()))
}

fn principal(x: f64) -> f64 {
    use std::f64::consts::PI;
    let r = x - (2.0 * PI) * ((x + PI) / (2.0 * PI)).floor();
    // r in [-pi, pi); move -pi to +pi
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseJump {
    /// Midpoint of the grid cell containing the jump.
    pub location: f64,
    /// Index `i` of the cell `[x_i, x_{i+1}]`.
    pub cell: usize,
    /// Signed phase change across the cell after removing multiples of `2 pi`.
    pub magnitude: f64,
}

/// Jumps between neighbouring samples. Phase wraps by `2 pi` are not jumps.
/// Undefined samples (`None`) split the scan.
pub fn phase_jump_scan(samples: &[(f64, Option<f64>)]) -> Vec<PhaseJump> {
    samples
        .windows(2)
        .enumerate()
        .filter_map(|(cell, w)| {
            let (x0, p0) = w[0];
            let (x1, p1) = w[1];
            let change = principal(p1? - p0?);
            (change.abs() > JUMP_THRESHOLD).then_some(PhaseJump { location: 0.5 * (x0 + x1), cell, magnitude: change })
        })
        .collect()
}

/// Observables at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRecord {
    pub time: f64,
    pub concurrence: f64,
    /// `None` where the overlap with the initial state vanishes.
    pub pancharatnam: Option<f64>,
    /// Squared norm of the (decaying) state.
    pub norm2: f64,
    /// `p11, p12, p21, p22` after trace normalization.
    pub populations: [f64; 4],
}

impl ObservableRecord {
    pub fn from_states(psi0: &DenseState, psit: &DenseState) -> Result<Self> {
        let rho = partial_trace_atoms(psit);
        let pancharatnam = match pancharatnam(psi0, psit) {
            Ok(phase) => Some(phase),
            Err(Error::UndefinedPhase { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(ObservableRecord {
            time: psit.time,
            concurrence: concurrence(&rho)?,
            pancharatnam,
            norm2: psit.norm_sqr(),
            populations: rho.populations()?,
        })
    }
}

/// One record per grid time, in grid order.
pub fn time_series(cfg: &SystemConfig, grid: &[f64]) -> Result<Vec<ObservableRecord>> {
    let sim = Simulation::new(cfg.clone())?;
    simulation_time_series(&sim, grid)
}

pub fn simulation_time_series(sim: &Simulation, grid: &[f64]) -> Result<Vec<ObservableRecord>> {
    let psi0 = sim.initial_state();
    grid.par_iter().map(|&t| ObservableRecord::from_states(&psi0, &sim.state_at(t)?)).collect()
}

/// Pancharatnam phase as a function of the initial relative phase at a fixed
/// time.
///
/// The initial state is linear in `e^{-i phi}`, so the two atomic components
/// are evolved once and recombined for every `phi`.
pub struct PhiSweep {
    cos2: f64,
    sin2: f64,
    cross: f64,
    /// `<a0|at>`, `<b0|bt>`, `<a0|bt>`, `<b0|at>`.
    overlaps: [Complex64; 4],
}

impl PhiSweep {
    pub fn new(cfg: &SystemConfig, t: f64) -> Result<Self> {
        let component = |theta: f64| -> Result<(DenseState, DenseState)> {
            let mut c = cfg.clone();
            c.theta = theta;
            c.phi = 0.0;
            let sim = Simulation::new(c)?;
            Ok((sim.initial_state(), sim.state_at(t)?))
        };
        let (a0, at) = component(0.0)?;
        let (b0, bt) = component(std::f64::consts::FRAC_PI_2)?;
        let (c, s) = (cfg.theta.cos(), cfg.theta.sin());
        Ok(PhiSweep {
            cos2: c * c,
            sin2: s * s,
            cross: c * s,
            overlaps: [overlap(&a0, &at)?, overlap(&b0, &bt)?, overlap(&a0, &bt)?, overlap(&b0, &at)?],
        })
    }

    pub fn overlap(&self, phi: f64) -> Complex64 {
        let [aa, bb, ab, ba] = self.overlaps;
        self.cos2 * aa
            + self.sin2 * bb
            + self.cross * (Complex64::from_polar(1.0, -phi) * ab + Complex64::from_polar(1.0, phi) * ba)
    }

    pub fn phase(&self, phi: f64) -> Option<f64> {
        phase_of(self.overlap(phi)).ok()
    }

    pub fn samples(&self, phis: &[f64]) -> Vec<(f64, Option<f64>)> {
        phis.iter().map(|&phi| (phi, self.phase(phi))).collect()
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let step = (stop - start) / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { stop } else { start + step * i as f64 }).collect()
}
