//! Block evolution.
//!
//! In the rotating frame `B1 = A1 e^{-i delta t}`, `B4 = A4 e^{i delta t}` the
//! block generator `M` is constant and `B(t) = e^{-iMt} B(0)`. The exponential
//! is expanded in Newton form over the eigenvalues `x_m = -i E_m` of `-iM`:
//!
//! ```text
//! e^{-iMt} = sum_{j=0}^{3} [x_1, ..., x_{j+1}] prod_{k=1}^{j} (-iM - x_k I)
//! ```
//!
//! where `[..]` are divided differences of `z -> e^{zt}`. The products do not
//! depend on `t`, so a [`NewtonExponential`] is built once per block and then
//! evaluated at any number of times.
//!
//! [`reference_integrate`] integrates the original time-dependent amplitude
//! equations directly and serves as the independent check on all of this.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{build_generator, BlockCoefficients};
use crate::quartic::{char_coeffs, solve_quartic, RootSet};
use crate::state::BlockAmplitudes;
use crate::{Matrix4c, Vector4c, I};

/// Sets whose spread times `|t|` is below this are expanded in a Taylor series
/// about their centroid instead of using the difference quotient.
const TAYLOR_SPREAD: f64 = 0.5;

/// Divided differences `[x_1]`, `[x_1, x_2]`, `[x_1, x_2, x_3]`,
/// `[x_1, .., x_4]` of `z -> e^{zt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DividedDifferenceTable {
    pub t: f64,
    pub nodes: [Complex64; 4],
    pub entries: [Complex64; 4],
}

/// Builds the leading divided differences over `nodes` (in the given order).
///
/// Node subsets whose spread is tiny, either absolutely (confluent roots) or
/// relative to `1/|t|`, are evaluated from the Taylor expansion of the
/// exponential, which is exact in the confluent limit (`[x, x] = t e^{xt}`).
pub fn divided_differences(nodes: &[Complex64; 4], t: f64, confluence_tol: f64) -> DividedDifferenceTable {
    let mut memo = [None; 16];
    let entries = [0b0001, 0b0011, 0b0111, 0b1111].map(|mask| subset_dd(nodes, t, confluence_tol, mask, &mut memo));
    DividedDifferenceTable { t, nodes: *nodes, entries }
}

fn subset_dd(nodes: &[Complex64; 4], t: f64, tol: f64, mask: usize, memo: &mut [Option<Complex64>; 16]) -> Complex64 {
    if let Some(v) = memo[mask] {
        return v;
    }
    let members: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
    let value = if members.len() == 1 {
        (nodes[members[0]] * t).exp()
    } else {
        let mut far = (0.0, members[0], members[1]);
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let d = (nodes[i] - nodes[j]).norm();
                if d > far.0 {
                    far = (d, i, j);
                }
            }
        }
        let (spread, p, q) = far;
        if spread < tol || spread * t.abs() < TAYLOR_SPREAD {
            let pts: Vec<Complex64> = members.iter().map(|&i| nodes[i]).collect();
            taylor_dd(&pts, t)
        } else {
            let without_p = subset_dd(nodes, t, tol, mask & !(1 << p), memo);
            let without_q = subset_dd(nodes, t, tol, mask & !(1 << q), memo);
            (without_p - without_q) / (nodes[q] - nodes[p])
        }
    };
    memo[mask] = Some(value);
    value
}

/// `[x_0..x_k] e^{zt} = e^{ct} sum_{m>=k} t^m h_{m-k}(x - c) / m!` with `c` the
/// centroid and `h_j` the complete homogeneous symmetric polynomials.
fn taylor_dd(points: &[Complex64], t: f64) -> Complex64 {
    let k = points.len() - 1;
    let center: Complex64 = points.iter().sum::<Complex64>() / points.len() as f64;
    let shifted: Vec<Complex64> = points.iter().map(|x| x - center).collect();

    const TERMS: usize = 60;
    // h[j] = h_j(shifted[0..=i]) built up one variable at a time.
    let mut h = [Complex64::new(0.0, 0.0); TERMS];
    h[0] = Complex64::new(1.0, 0.0);
    for (i, y) in shifted.iter().enumerate() {
        if i == 0 {
            for j in 1..TERMS {
                h[j] = h[j - 1] * y;
            }
        } else {
            for j in 1..TERMS {
                h[j] += y * h[j - 1];
            }
        }
    }

    // |h_j| <= C(j + k, k) rho^j bounds every remaining term; individual
    // terms can vanish by symmetry, so they cannot serve as the stopping test.
    let rho = shifted.iter().map(|y| y.norm()).fold(0.0, f64::max);
    // t^m / m! for m = k, k+1, ...
    let mut weight: f64 = (1..=k).fold(1.0, |w, m| w * t / m as f64);
    let mut bound = 1.0;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..TERMS - 1 {
        sum += weight * h[j];
        weight *= t / (k + j + 1) as f64;
        bound *= rho * (j + k + 1) as f64 / (j + 1) as f64;
        if (weight * bound).abs() <= 1e-18 * sum.norm() {
            break;
        }
    }
    (center * t).exp() * sum
}

/// Time-independent part of the Newton expansion of `e^{-iMt}`.
#[derive(Debug, Clone)]
pub struct NewtonExponential {
    /// Eigenvalues of `-iM`, sorted by real part descending.
    pub nodes: [Complex64; 4],
    pub roots: RootSet,
    /// `I, (A - x_1), (A - x_1)(A - x_2), (A - x_1)(A - x_2)(A - x_3)` with `A = -iM`.
    pub products: [Matrix4c; 4],
}

impl NewtonExponential {
    /// `roots` must be the characteristic roots `E_m` of `m`; the exponents
    /// are `x_m = -i E_m`.
    pub fn new(m: &Matrix4c, roots: &RootSet) -> Self {
        let mut nodes = roots.roots.map(|e| -I * e);
        nodes.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal));
        let a = m * Complex64::new(0.0, -1.0);
        let eye = Matrix4c::identity();
        let p1 = a - eye * nodes[0];
        let p2 = p1 * (a - eye * nodes[1]);
        let p3 = p2 * (a - eye * nodes[2]);
        NewtonExponential { nodes, roots: *roots, products: [eye, p1, p2, p3] }
    }

    pub fn from_generator(m: &Matrix4c) -> Self {
        Self::new(m, &solve_quartic(&char_coeffs(m)))
    }

    pub fn table(&self, t: f64) -> DividedDifferenceTable {
        divided_differences(&self.nodes, t, self.roots.confluence_tolerance())
    }

    /// `e^{-iMt}`.
    pub fn at(&self, t: f64) -> Matrix4c {
        let dd = self.table(t);
        let mut u = Matrix4c::zeros();
        for (coef, p) in dd.entries.iter().zip(&self.products) {
            u += p * *coef;
        }
        u
    }
}

/// `e^{-iMt}` in Newton form.
pub fn expm_newton(m: &Matrix4c, roots: &RootSet, t: f64) -> Matrix4c {
    NewtonExponential::new(m, roots).at(t)
}

/// Propagator of one block at one time, together with the factors that take
/// rows 1 and 4 from the rotating frame back to the amplitude frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockPropagator {
    pub t: f64,
    pub u: Matrix4c,
    /// `e^{i delta t}` for row 1 and `e^{-i delta t}` for row 4.
    pub frame: [Complex64; 2],
}

impl BlockPropagator {
    pub fn apply(&self, initial: &BlockAmplitudes) -> BlockAmplitudes {
        let b = self.u * initial.to_vector();
        BlockAmplitudes([b[0] * self.frame[0], b[1], b[2], b[3] * self.frame[1]])
    }
}

/// Analytic evolution of one block, reusable across time points.
#[derive(Debug, Clone)]
pub struct BlockEvolver {
    pub coeffs: BlockCoefficients,
    pub generator: Matrix4c,
    pub exponential: NewtonExponential,
}

impl BlockEvolver {
    pub fn new(coeffs: BlockCoefficients) -> Self {
        let generator = build_generator(&coeffs);
        let exponential = NewtonExponential::from_generator(&generator);
        BlockEvolver { coeffs, generator, exponential }
    }

    pub fn propagator(&self, t: f64) -> BlockPropagator {
        let phase = self.coeffs.delta * t;
        BlockPropagator {
            t,
            u: self.exponential.at(t),
            frame: [Complex64::from_polar(1.0, phase), Complex64::from_polar(1.0, -phase)],
        }
    }

    /// Precomputes the Newton products applied to a fixed initial vector.
    pub fn trajectory(&self, initial: &BlockAmplitudes) -> BlockTrajectory {
        let v = initial.to_vector();
        BlockTrajectory {
            nodes: self.exponential.nodes,
            tol: self.exponential.roots.confluence_tolerance(),
            delta: self.coeffs.delta,
            columns: self.exponential.products.map(|p| p * v),
        }
    }
}

/// `A(t)` for one block and one initial condition; evaluating it costs four
/// divided differences and a few vector operations.
#[derive(Debug, Clone)]
pub struct BlockTrajectory {
    nodes: [Complex64; 4],
    tol: f64,
    delta: f64,
    columns: [Vector4c; 4],
}

impl BlockTrajectory {
    pub fn at(&self, t: f64) -> BlockAmplitudes {
        let dd = divided_differences(&self.nodes, t, self.tol);
        let mut b = Vector4c::zeros();
        for (coef, col) in dd.entries.iter().zip(&self.columns) {
            b += col * *coef;
        }
        let phase = self.delta * t;
        BlockAmplitudes([
            b[0] * Complex64::from_polar(1.0, phase),
            b[1],
            b[2],
            b[3] * Complex64::from_polar(1.0, -phase),
        ])
    }
}

/// Amplitudes of one block at time `t`, in the frame of the original amplitude
/// equations.
pub fn evolve_block(coeffs: &BlockCoefficients, initial: &BlockAmplitudes, t: f64) -> BlockAmplitudes {
    BlockEvolver::new(*coeffs).propagator(t).apply(initial)
}

/// Local error allowed per unit time in [`reference_integrate`].
pub const REFERENCE_TOLERANCE: f64 = 1e-10;

const MIN_STEP: f64 = 1e-12;

/// Right-hand side of the time-dependent amplitude equations,
/// `dA/dt = -i H(t) A`.
#[derive(Debug, Clone, Copy)]
struct AmplitudeEquations {
    k: [Complex64; 4],
    g1: f64,
    g2: f64,
    delta: f64,
    /// `detuning + varpi` when the counter-rotating terms are kept.
    counter: Option<f64>,
}

impl AmplitudeEquations {
    fn rhs(&self, t: f64, a: &[Complex64; 4]) -> [Complex64; 4] {
        let mut up = Complex64::from_polar(1.0, self.delta * t);
        if let Some(sigma) = self.counter {
            up += Complex64::from_polar(1.0, sigma * t);
        }
        let down = up.conj();
        let (g1, g2) = (self.g1, self.g2);
        let h = [
            self.k[0] * a[0] + up * (g2 * a[1] + g1 * a[2]),
            down * g2 * a[0] + self.k[1] * a[1] + up * g1 * a[3],
            down * g1 * a[0] + self.k[2] * a[2] + up * g2 * a[3],
            down * (g1 * a[1] + g2 * a[2]) + self.k[3] * a[3],
        ];
        h.map(|x| Complex64::new(x.im, -x.re))
    }

    fn rk4(&self, t: f64, y: &[Complex64; 4], h: f64) -> [Complex64; 4] {
        let add = |a: &[Complex64; 4], b: &[Complex64; 4], s: f64| -> [Complex64; 4] {
            std::array::from_fn(|i| a[i] + b[i] * s)
        };
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t + 0.5 * h, &add(y, &k1, 0.5 * h));
        let k3 = self.rhs(t + 0.5 * h, &add(y, &k2, 0.5 * h));
        let k4 = self.rhs(t + h, &add(y, &k3, h));
        std::array::from_fn(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0))
    }
}

/// Direct integrator of the time-dependent amplitude equations for one block.
///
/// Classic Runge–Kutta with step doubling: each step is taken once with `h`
/// and twice with `h/2`; the difference bounds the local error, which is held
/// below `REFERENCE_TOLERANCE * h`, and the Richardson-extrapolated value is
/// kept.
#[derive(Debug, Clone)]
pub struct ReferenceIntegrator {
    eq: AmplitudeEquations,
    y: [Complex64; 4],
    t: f64,
    h: f64,
}

impl ReferenceIntegrator {
    pub fn new(coeffs: &BlockCoefficients, initial: &BlockAmplitudes, include_counter_rotating: bool) -> Self {
        let varpi = coeffs.detuning - coeffs.delta;
        let eq = AmplitudeEquations {
            k: coeffs.k,
            g1: coeffs.g1,
            g2: coeffs.g2,
            delta: coeffs.delta,
            counter: include_counter_rotating.then_some(coeffs.detuning + varpi),
        };
        ReferenceIntegrator { eq, y: initial.0, t: 0.0, h: 1e-2 }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Integrates forward to `target` (not before the current time).
    pub fn advance_to(&mut self, target: f64) -> Result<BlockAmplitudes> {
        if !(target >= self.t) {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: format!("cannot integrate back from {} to {target}", self.t),
            });
        }
        while self.t < target {
            let remaining = target - self.t;
            let step = if remaining <= self.h * (1.0 + 1e-9) { remaining } else { self.h };
            let (t, y, eq) = (self.t, &self.y, &self.eq);
            let full = eq.rk4(t, y, step);
            let half = eq.rk4(t, y, 0.5 * step);
            let double = eq.rk4(t + 0.5 * step, &half, 0.5 * step);
            let err = (0..4).map(|i| (double[i] - full[i]).norm()).fold(0.0, f64::max) / 15.0;
            // floor at round-off so short landing steps are not rejected forever
            let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let allowed = (REFERENCE_TOLERANCE * step).max(16.0 * f64::EPSILON * scale);
            if err <= allowed {
                self.y = std::array::from_fn(|i| double[i] + (double[i] - full[i]) / 15.0);
                self.t = if step == remaining { target } else { self.t + step };
                if step < self.h {
                    // shortened to land on the target; keep the step size
                    continue;
                }
            }
            let factor = if err == 0.0 { 4.0 } else { (0.9 * (allowed / err).powf(0.25)).clamp(0.1, 4.0) };
            self.h = step * factor;
            if self.h < MIN_STEP {
                return Err(Error::StepUnderflow { t: self.t, step: self.h });
            }
        }
        Ok(BlockAmplitudes(self.y))
    }
}

/// Integrates from `0` through each of `times` (non-decreasing) and returns
/// the amplitudes at every requested time.
pub fn reference_trajectory(
    coeffs: &BlockCoefficients,
    initial: &BlockAmplitudes,
    times: &[f64],
    include_counter_rotating: bool,
) -> Result<Vec<BlockAmplitudes>> {
    let mut integrator = ReferenceIntegrator::new(coeffs, initial, include_counter_rotating);
    times.iter().map(|&t| integrator.advance_to(t)).collect()
}

/// Amplitudes at a single time by direct integration.
pub fn reference_integrate(
    coeffs: &BlockCoefficients,
    initial: &BlockAmplitudes,
    t: f64,
    include_counter_rotating: bool,
) -> Result<BlockAmplitudes> {
    Ok(reference_trajectory(coeffs, initial, &[t], include_counter_rotating)?[0])
}
