//! Eigenvalues of a block generator through its characteristic quartic.
//!
//! The production path is the closed-form resolvent solution. Every candidate
//! root set it produces is scored against the characteristic polynomial; when
//! nothing scores below [`RESIDUAL_LIMIT`] the companion-matrix eigenvalues are
//! used instead.

use num_complex::Complex64;

use crate::Matrix4c;

/// Largest accepted backward residual of a closed-form root.
pub const RESIDUAL_LIMIT: f64 = 1e-9;

/// Relative separation below which two roots are treated as coincident.
pub const CONFLUENCE_THRESHOLD: f64 = 1e-8;

/// Monic quartic `E^4 + b E^3 + c E^2 + d E + e` with the resolvent
/// intermediates (principal cube-root branch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub e: Complex64,
    pub p: Complex64,
    pub q: Complex64,
    pub s: Complex64,
    pub big_q: Complex64,
    pub delta0: Complex64,
    pub delta1: Complex64,
}

impl QuarticCoeffs {
    pub fn new(b: Complex64, c: Complex64, d: Complex64, e: Complex64) -> Self {
        let r = Resolvent::new(b, c, d, e);
        let big_q = r.cube_root_base;
        let s = r.s_for(big_q);
        QuarticCoeffs { b, c, d, e, p: r.p, q: r.q, s, big_q, delta0: r.delta0, delta1: r.delta1 }
    }

    pub fn from_real(b: f64, c: f64, d: f64, e: f64) -> Self {
        Self::new(b.into(), c.into(), d.into(), e.into())
    }

    /// Coefficients from the highest power down, leading 1 included.
    pub fn monic(&self) -> [Complex64; 5] {
        [Complex64::from(1.0), self.b, self.c, self.d, self.e]
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        (((x + self.b) * x + self.c) * x + self.d) * x + self.e
    }

    /// `|P(x)| / sum_k |a_k| max(1, |x|)^k`: relative to the coefficient
    /// magnitudes, and to the size of the terms once `|x| > 1`.
    pub fn residual(&self, x: Complex64) -> f64 {
        let r = x.norm().max(1.0);
        let scale = self.monic().iter().fold(0.0, |acc, a| acc * r + a.norm());
        let value = self.eval(x).norm();
        if scale == 0.0 {
            value
        } else {
            value / scale
        }
    }
}

/// How a [`RootSet`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    ClosedForm { branch: u8 },
    Companion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSet {
    pub roots: [Complex64; 4],
    pub residuals: [f64; 4],
    pub method: RootMethod,
}

impl RootSet {
    fn scored(coeffs: &QuarticCoeffs, roots: [Complex64; 4], method: RootMethod) -> Self {
        RootSet { roots, residuals: roots.map(|x| coeffs.residual(x)), method }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Distance below which roots `i` and `j` count as confluent.
    pub fn confluence_tolerance(&self) -> f64 {
        let largest = self.roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
        CONFLUENCE_THRESHOLD * (1.0 + largest)
    }

    pub fn is_confluent(&self, i: usize, j: usize) -> bool {
        (self.roots[i] - self.roots[j]).norm() < self.confluence_tolerance()
    }
}

/// Characteristic polynomial `det(E I - M)` from the trace, principal minors
/// and determinant.
pub fn char_coeffs(m: &Matrix4c) -> QuarticCoeffs {
    let trace = m.trace();
    let mut minors2 = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in i + 1..4 {
            minors2 += m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
        }
    }
    let mut minors3 = Complex64::new(0.0, 0.0);
    for skip in 0..4 {
        let idx: Vec<usize> = (0..4).filter(|&k| k != skip).collect();
        minors3 += det3(m, [idx[0], idx[1], idx[2]]);
    }
    QuarticCoeffs::new(-trace, minors2, -minors3, det4(m))
}

fn det3(m: &Matrix4c, [a, b, c]: [usize; 3]) -> Complex64 {
    m[(a, a)] * (m[(b, b)] * m[(c, c)] - m[(b, c)] * m[(c, b)])
        - m[(a, b)] * (m[(b, a)] * m[(c, c)] - m[(b, c)] * m[(c, a)])
        + m[(a, c)] * (m[(b, a)] * m[(c, b)] - m[(b, b)] * m[(c, a)])
}

fn det4(m: &Matrix4c) -> Complex64 {
    // Laplace expansion along the first row.
    let mut acc = Complex64::new(0.0, 0.0);
    for col in 0..4 {
        let cols: Vec<usize> = (0..4).filter(|&k| k != col).collect();
        let minor = {
            let (r0, r1, r2) = (1, 2, 3);
            let (c0, c1, c2) = (cols[0], cols[1], cols[2]);
            m[(r0, c0)] * (m[(r1, c1)] * m[(r2, c2)] - m[(r1, c2)] * m[(r2, c1)])
                - m[(r0, c1)] * (m[(r1, c0)] * m[(r2, c2)] - m[(r1, c2)] * m[(r2, c0)])
                + m[(r0, c2)] * (m[(r1, c0)] * m[(r2, c1)] - m[(r1, c1)] * m[(r2, c0)])
        };
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * m[(0, col)] * minor;
    }
    acc
}

struct Resolvent {
    b: Complex64,
    p: Complex64,
    q: Complex64,
    delta0: Complex64,
    delta1: Complex64,
    cube_root_base: Complex64,
}

impl Resolvent {
    fn new(b: Complex64, c: Complex64, d: Complex64, e: Complex64) -> Self {
        let p = (8.0 * c - 3.0 * b * b) / 8.0;
        let q = (b * b * b - 4.0 * b * c + 8.0 * d) / 8.0;
        let delta0 = c * c - 3.0 * b * d + 12.0 * e;
        let delta1 = 2.0 * c * c * c - 9.0 * b * c * d + 27.0 * (b * b * e + d * d) - 72.0 * c * e;
        let disc = (delta1 * delta1 - 4.0 * delta0 * delta0 * delta0).sqrt();
        // Pick the sign that avoids cancellation inside the cube root.
        let plus = (delta1 + disc) / 2.0;
        let minus = (delta1 - disc) / 2.0;
        let base = if plus.norm() >= minus.norm() { plus } else { minus };
        let cube_root_base = if base.norm() == 0.0 { base } else { base.powf(1.0 / 3.0) };
        Resolvent { b, p, q, delta0, delta1, cube_root_base }
    }

    /// `S = 1/2 sqrt(-2p/3 + (Q + delta0/Q)/3)`.
    fn s_for(&self, big_q: Complex64) -> Complex64 {
        let ratio = if big_q.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { self.delta0 / big_q };
        0.5 * (-2.0 * self.p / 3.0 + (big_q + ratio) / 3.0).sqrt()
    }

    /// Root candidates for one cube-root branch; `None` when `S` vanishes.
    fn candidates(&self, big_q: Complex64) -> Option<[[Complex64; 4]; 2]> {
        let s = self.s_for(big_q);
        if s.norm() <= f64::EPSILON * (1.0 + self.p.norm().sqrt()) {
            return None;
        }
        let shift = -self.b / 4.0;
        let base = -4.0 * s * s - 2.0 * self.p;
        let qs = self.q / s;
        let build = |sign: f64| {
            let r1 = 0.5 * (base + sign * qs).sqrt();
            let r2 = 0.5 * (base - sign * qs).sqrt();
            [shift - s + r1, shift - s - r1, shift + s + r2, shift + s - r2]
        };
        Some([build(1.0), build(-1.0)])
    }
}

/// Vieta mismatch of a candidate set, scaled by the natural magnitude of each
/// elementary symmetric function.
fn vieta_error(coeffs: &QuarticCoeffs, r: &[Complex64; 4]) -> f64 {
    let rho = r.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let e1 = r[0] + r[1] + r[2] + r[3];
    let e2 = r[0] * r[1] + r[0] * r[2] + r[0] * r[3] + r[1] * r[2] + r[1] * r[3] + r[2] * r[3];
    let e3 = r[0] * r[1] * r[2] + r[0] * r[1] * r[3] + r[0] * r[2] * r[3] + r[1] * r[2] * r[3];
    let e4 = r[0] * r[1] * r[2] * r[3];
    let errs = [
        (e1 + coeffs.b).norm() / (4.0 * rho),
        (e2 - coeffs.c).norm() / (6.0 * rho * rho),
        (e3 + coeffs.d).norm() / (4.0 * rho.powi(3)),
        (e4 - coeffs.e).norm() / rho.powi(4),
    ];
    errs.into_iter().fold(0.0, f64::max)
}

/// Closed-form roots, with companion-matrix fallback.
pub fn solve_quartic(coeffs: &QuarticCoeffs) -> RootSet {
    let resolvent = Resolvent::new(coeffs.b, coeffs.c, coeffs.d, coeffs.e);
    let unit = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut best: Option<(f64, RootSet)> = None;
    let mut branch_q = resolvent.cube_root_base;
    for branch in 0..3u8 {
        if let Some(sets) = resolvent.candidates(branch_q) {
            for roots in sets {
                if roots.iter().any(|r| !r.is_finite()) {
                    continue;
                }
                let set = RootSet::scored(coeffs, roots, RootMethod::ClosedForm { branch });
                let score = set.max_residual().max(vieta_error(coeffs, &roots));
                if best.as_ref().is_none_or(|(s, _)| score < *s) {
                    best = Some((score, set));
                }
            }
        }
        branch_q *= unit;
    }
    match best {
        Some((score, set)) if score <= RESIDUAL_LIMIT => {
            RootSet::scored(coeffs, merge_split_pairs(coeffs, set.roots), set.method)
        }
        _ => companion_roots(coeffs),
    }
}

/// Largest relative separation of a pair that may be a rounding-split double
/// root.
const SPLIT_PAIR_LIMIT: f64 = 1e-6;

/// Replaces pairs of roots that are a double root split by rounding with their
/// mean.
///
/// A double root computed from rounded coefficients splits by about
/// `sqrt(eps)` while the mean of the pair stays accurate to `eps`. A pair is
/// merged only if the polynomial is no larger at the mean than at either
/// member (within rounding), so genuinely distinct roots are kept.
pub fn merge_split_pairs(coeffs: &QuarticCoeffs, mut roots: [Complex64; 4]) -> [Complex64; 4] {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            pairs.push(((roots[i] - roots[j]).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used = [false; 4];
    for (gap, i, j) in pairs {
        if used[i] || used[j] {
            continue;
        }
        let scale = roots[i].norm().max(roots[j].norm()).max(1.0);
        if gap == 0.0 || gap > SPLIT_PAIR_LIMIT * scale {
            continue;
        }
        let mean = 0.5 * (roots[i] + roots[j]);
        let members = coeffs.residual(roots[i]).max(coeffs.residual(roots[j]));
        if coeffs.residual(mean) <= 2.0 * members + 4.0 * f64::EPSILON {
            roots[i] = mean;
            roots[j] = mean;
            used[i] = true;
            used[j] = true;
        }
    }
    roots
}

/// Eigenvalues of the companion matrix.
pub fn companion_roots(coeffs: &QuarticCoeffs) -> RootSet {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    #[rustfmt::skip]
    let companion = Matrix4c::new(
        -coeffs.b, -coeffs.c, -coeffs.d, -coeffs.e,
        o, z, z, z,
        z, o, z, z,
        z, z, o, z,
    );
    let roots = match companion.try_schur(f64::EPSILON, 10_000).and_then(|s| s.eigenvalues()) {
        Some(v) => [v[0], v[1], v[2], v[3]],
        None => aberth(coeffs),
    };
    RootSet::scored(coeffs, merge_split_pairs(coeffs, roots), RootMethod::Companion)
}

/// Simultaneous Newton (Aberth–Ehrlich) iteration; last resort when the Schur
/// iteration does not converge.
fn aberth(coeffs: &QuarticCoeffs) -> [Complex64; 4] {
    let radius = 1.0 + coeffs.monic()[1..].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut z: [Complex64; 4] =
        std::array::from_fn(|k| Complex64::from_polar(radius, 0.4 + k as f64 * std::f64::consts::FRAC_PI_2));
    let deriv = |x: Complex64| ((4.0 * x + 3.0 * coeffs.b) * x + 2.0 * coeffs.c) * x + coeffs.d;
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..4 {
            let ratio = coeffs.eval(z[i]) / deriv(z[i]);
            let repulsion: Complex64 = (0..4).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm());
            }
        }
        if moved < 1e-16 * radius {
            break;
        }
    }
    z
}

/// Minimal total distance between two root sets over all 24 pairings.
pub fn pairing_distance(a: &[Complex64; 4], b: &[Complex64; 4]) -> (f64, [usize; 4]) {
    let mut best = (f64::INFINITY, 0.0, [0, 1, 2, 3]);
    let mut perm = [0usize, 1, 2, 3];
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = (0..4).map(|i| (a[i] - b[p[i]]).norm()).sum();
        if total < best.0 {
            let worst = (0..4).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max);
            best = (total, worst, *p);
        }
    });
    (best.1, best.2)
}

fn permute(p: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
    if k == 4 {
        f(p);
        return;
    }
    for i in k..4 {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}
