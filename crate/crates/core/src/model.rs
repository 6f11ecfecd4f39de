//! Physical parameters of the two-atom, two-mode cavity and the per-block
//! quantities derived from them.
//!
//! The Hilbert space splits into independent four-dimensional blocks labelled
//! by `(n1, n2)`. Block `(n1, n2)` spans
//!
//! ```text
//! |n1,      n2,      1, 1>
//! |n1,      n2 + k,  1, 2>
//! |n1 + k,  n2,      2, 1>
//! |n1 + k,  n2 + k,  2, 2>
//! ```
//!
//! with `k` the photon multiplicity. Level 1 is the upper atomic level. No
//! operator on the full space is ever built; everything goes through the
//! block coefficients below.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{Matrix4c, I};

/// Tolerance on the agreement of the two atom-mode detunings.
pub const DETUNING_TOLERANCE: f64 = 1e-12;

/// Ratio below which `frequency / rate` counts as leaving the weak-damping regime.
const REGIME_RATIO: f64 = 10.0;

/// Full parameter set. All frequencies and rates are in units of the coupling
/// amplitude, so times are reported as `lambda * t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// `omega_atom[level][atom]`, level 0 is the upper level.
    pub omega_atom: [[f64; 2]; 2],
    /// `gamma_atom[level][atom]`.
    pub gamma_atom: [[f64; 2]; 2],
    pub omega_field: [f64; 2],
    pub gamma_field: [f64; 2],
    pub lambda: [f64; 2],
    /// Coupling modulation frequency, shared by both modes.
    pub varpi: f64,
    pub kappa: usize,
    pub theta: f64,
    pub phi: f64,
    pub nbar: [f64; 2],
    /// Largest block label per mode (inclusive).
    pub n_max: usize,
}

impl SystemConfig {
    /// Resonant, lossless configuration with the given mean photon number; the
    /// truncation follows [`default_n_max`].
    pub fn resonant(frequency: f64, nbar: f64, kappa: usize) -> Self {
        SystemConfig {
            omega_atom: [[frequency; 2]; 2],
            gamma_atom: [[0.0; 2]; 2],
            omega_field: [frequency; 2],
            gamma_field: [0.0; 2],
            lambda: [1.0; 2],
            varpi: 0.0,
            kappa,
            theta: std::f64::consts::FRAC_PI_4,
            phi: std::f64::consts::FRAC_PI_2,
            nbar: [nbar; 2],
            n_max: default_n_max(nbar, kappa),
        }
    }

    /// Transition frequency of atom `atom` (0-based): the splitting between
    /// `+Omega_1/2` and `-Omega_2/2`.
    pub fn transition_frequency(&self, atom: usize) -> f64 {
        0.5 * (self.omega_atom[0][atom] + self.omega_atom[1][atom])
    }

    /// Detuning of atom `atom` from `kappa` photons of its own mode.
    pub fn mode_detuning(&self, atom: usize) -> f64 {
        self.transition_frequency(atom) - self.kappa as f64 * self.omega_field[atom]
    }

    /// The common detuning. Meaningful only once [`validate_config`] has passed.
    pub fn detuning(&self) -> f64 {
        0.5 * (self.mode_detuning(0) + self.mode_detuning(1))
    }

    /// Number of Fock states kept per mode in dense representations.
    pub fn field_dim(&self) -> usize {
        self.n_max + self.kappa + 1
    }
}

/// `ceil(nbar + 10 sqrt(nbar)) + kappa`.
pub fn default_n_max(nbar: f64, kappa: usize) -> usize {
    (nbar + 10.0 * nbar.sqrt()).ceil() as usize + kappa
}

/// Checks the hard invariants and logs soft regime violations.
pub fn validate_config(raw: SystemConfig) -> Result<SystemConfig> {
    let finite: [(&'static str, f64); 4] = [
        ("varpi", raw.varpi),
        ("theta", raw.theta),
        ("phi", raw.phi),
        ("detuning", raw.mode_detuning(0) + raw.mode_detuning(1)),
    ];
    for (name, value) in finite {
        if !value.is_finite() {
            return Err(Error::InvalidParameter { name, reason: format!("not finite ({value})") });
        }
    }
    if raw.kappa == 0 {
        return Err(Error::InvalidParameter { name: "kappa", reason: "must be at least 1".into() });
    }
    if raw.n_max < raw.kappa {
        return Err(Error::BadTruncation { n_max: raw.n_max, kappa: raw.kappa });
    }
    let rates = [
        ("gamma_atom_1_1", raw.gamma_atom[0][0]),
        ("gamma_atom_1_2", raw.gamma_atom[0][1]),
        ("gamma_atom_2_1", raw.gamma_atom[1][0]),
        ("gamma_atom_2_2", raw.gamma_atom[1][1]),
        ("gamma_field_1", raw.gamma_field[0]),
        ("gamma_field_2", raw.gamma_field[1]),
    ];
    for (name, value) in rates {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeRate { name, value });
        }
    }
    for (name, value) in [("nbar_1", raw.nbar[0]), ("nbar_2", raw.nbar[1])] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter { name, reason: format!("must be >= 0, got {value}") });
        }
    }
    for (name, value) in [("lambda_1", raw.lambda[0]), ("lambda_2", raw.lambda[1])] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter { name, reason: format!("must be >= 0, got {value}") });
        }
    }
    let (d1, d2) = (raw.mode_detuning(0), raw.mode_detuning(1));
    if (d1 - d2).abs() > DETUNING_TOLERANCE {
        return Err(Error::DetuningMismatch { mode1: d1, mode2: d2 });
    }
    for warning in regime_warnings(&raw) {
        log::warn!("{warning}");
    }
    Ok(raw)
}

/// Soft violations of the weak-damping regime (frequency much larger than the
/// matching decay rate).
pub fn regime_warnings(cfg: &SystemConfig) -> Vec<String> {
    let mut out = Vec::new();
    for level in 0..2 {
        for atom in 0..2 {
            let (w, g) = (cfg.omega_atom[level][atom], cfg.gamma_atom[level][atom]);
            if g > 0.0 && w.abs() < REGIME_RATIO * g {
                out.push(format!(
                    "atomic rate Gamma_{}^{} = {g} is not small against Omega = {w}",
                    level + 1,
                    atom + 1
                ));
            }
        }
    }
    for mode in 0..2 {
        let (w, g) = (cfg.omega_field[mode], cfg.gamma_field[mode]);
        if g > 0.0 && w.abs() < REGIME_RATIO * g {
            out.push(format!("field rate gamma_{} = {g} is not small against omega = {w}", mode + 1));
        }
    }
    out
}

/// Scalars of one `(n1, n2)` block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCoefficients {
    pub n1: usize,
    pub n2: usize,
    /// `detuning - varpi`.
    pub delta: f64,
    pub detuning: f64,
    /// Purely imaginary damping terms `k_1..k_4`.
    pub k: [Complex64; 4],
    pub g1: f64,
    pub g2: f64,
    /// Free-evolution frequencies of the four block kets.
    pub alpha: [f64; 4],
}

/// `sqrt((n + kappa)! / n!)` accumulated in the log domain.
pub fn fock_ladder_factor(n: usize, kappa: usize) -> f64 {
    let log_ratio: f64 = (n + 1..=n + kappa).map(|m| (m as f64).ln()).sum();
    (0.5 * log_ratio).exp()
}

pub fn block_coefficients(cfg: &SystemConfig, n1: usize, n2: usize) -> Result<BlockCoefficients> {
    if n1 > cfg.n_max || n2 > cfg.n_max {
        return Err(Error::IndexOutOfRange { n1, n2, n_max: cfg.n_max });
    }
    let kappa = cfg.kappa as f64;
    let (m1, m2) = (n1 as f64, n2 as f64);
    let [[w11, w12], [w21, w22]] = cfg.omega_atom;
    let [[r11, r12], [r21, r22]] = cfg.gamma_atom;
    let [wf1, wf2] = cfg.omega_field;
    let [gf1, gf2] = cfg.gamma_field;

    // Imaginary parts of the four ket energies: +Gamma for level 1, -Gamma for
    // level 2, plus the photon-number weighted field rates.
    let numerators = [
        r11 + r12 + m1 * gf1 + m2 * gf2,
        r11 - r22 + m1 * gf1 + (m2 + kappa) * gf2,
        r12 - r21 + (m1 + kappa) * gf1 + m2 * gf2,
        -r21 - r22 + (m1 + kappa) * gf1 + (m2 + kappa) * gf2,
    ];
    let k = numerators.map(|x| -0.5 * I * x);

    let alpha = [
        0.5 * (w11 + w12) + m1 * wf1 + m2 * wf2,
        0.5 * (w11 - w22) + m1 * wf1 + (m2 + kappa) * wf2,
        0.5 * (w12 - w21) + (m1 + kappa) * wf1 + m2 * wf2,
        -0.5 * (w21 + w22) + (m1 + kappa) * wf1 + (m2 + kappa) * wf2,
    ];

    let detuning = cfg.detuning();
    Ok(BlockCoefficients {
        n1,
        n2,
        delta: detuning - cfg.varpi,
        detuning,
        k,
        g1: 0.5 * cfg.lambda[0] * fock_ladder_factor(n1, cfg.kappa),
        g2: 0.5 * cfg.lambda[1] * fock_ladder_factor(n2, cfg.kappa),
        alpha,
    })
}

/// Time-independent block generator in the rotating frame
/// `B1 = A1 e^{-i delta t}`, `B4 = A4 e^{+i delta t}`.
pub fn build_generator(c: &BlockCoefficients) -> Matrix4c {
    let z = Complex64::new(0.0, 0.0);
    let g1 = Complex64::from(c.g1);
    let g2 = Complex64::from(c.g2);
    let d = Complex64::from(c.delta);
    #[rustfmt::skip]
    let m = Matrix4c::new(
        c.k[0] + d, g2,   g1,   z,
        g2,         c.k[1], z,  g1,
        g1,         z,   c.k[2], g2,
        z,          g1,  g2,   c.k[3] - d,
    );
    m
}
