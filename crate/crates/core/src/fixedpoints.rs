//! Fixed points of g∘f_ε and their bifurcations.
//!
//! g is the rotation by θ about the axis (cos β, 0, sin β). Candidate fixed
//! points are parametrized by b ∈ [0, 2π) as
//!
//! ```text
//! A(b) = (cos b cos δ, −cos b sin δ, sin b),   δ(b) = (π/2) ε (1 + sin b),
//! ```
//!
//! so that f_ε(A) is the mirror image of A in the xz-plane, and A is fixed
//! exactly when
//!
//! ```text
//! F(b) = sin(θ/2) sin β cos b cos δ − sin(θ/2) cos β sin b + cos(θ/2) cos b sin δ = 0.
//! ```
//!
//! Every root is mapped back to the sphere and re-checked by applying the map.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::geometry::{Rotation, SpherePoint};
use crate::twistmap::TwistFamily;
use crate::vec3::Vec3;

/// Number of scan points for roots of F on [0, 2π).
pub const ROOT_SCAN: usize = 4096;
/// Dynamic residual above which a root is flagged as unvalidated.
pub const RESIDUAL_FLAG: f64 = 1e-8;
/// Half-width of the trace window around ±2 treated as degenerate.
pub const PARABOLIC_WINDOW: f64 = 1e-6;
/// Roots closer than this are merged.
pub const MERGE_DISTANCE: f64 = 1e-6;

/// Stability class from the trace t of the tangent map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    /// |t| < 2
    Elliptic,
    /// t > 2
    Hyperbolic,
    /// t < −2
    Reflection,
}

impl Stability {
    pub fn from_trace(t: f64) -> Stability {
        if t > 2.0 {
            Stability::Hyperbolic
        } else if t < -2.0 {
            Stability::Reflection
        } else {
            Stability::Elliptic
        }
    }

    pub fn letter(&self) -> char {
        match self {
            Stability::Elliptic => 'E',
            Stability::Hyperbolic => 'H',
            Stability::Reflection => 'R',
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Problems detected on a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecordFlags {
    /// |trace ∓ 2| within the parabolic window.
    pub degenerate: bool,
    /// Merged with a nearby root: candidate double zero.
    pub double_zero: bool,
    /// Dynamic residual above [`RESIDUAL_FLAG`].
    pub unvalidated: bool,
}

impl RecordFlags {
    pub fn any(&self) -> bool {
        self.degenerate || self.double_zero || self.unvalidated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRecord {
    pub b: f64,
    pub location: SpherePoint,
    pub trace: f64,
    pub eigenvalues: [Complex64; 2],
    pub stability: Stability,
    /// ‖(g∘f_ε)(A) − A‖.
    pub residual: f64,
    pub flags: RecordFlags,
}

impl FixedPointRecord {
    /// Largest eigenvalue modulus.
    pub fn max_modulus(&self) -> f64 {
        self.eigenvalues[0].norm().max(self.eigenvalues[1].norm())
    }
}

/// δ(b) = (π/2) ε (1 + sin b).
pub fn delta_of_b(b: f64, eps: f64) -> f64 {
    FRAC_PI_2 * eps * (1.0 + b.sin())
}

pub fn fixed_point_function(b: f64, beta: f64, theta: f64, eps: f64) -> f64 {
    let (sh, ch) = (0.5 * theta).sin_cos();
    let (sb, cb) = b.sin_cos();
    let (sd, cd) = delta_of_b(b, eps).sin_cos();
    sh * beta.sin() * cb * cd - sh * beta.cos() * sb + ch * cb * sd
}

/// The point A(b).
pub fn fixed_point_location(b: f64, eps: f64) -> SpherePoint {
    let (sb, cb) = b.sin_cos();
    let (sd, cd) = delta_of_b(b, eps).sin_cos();
    SpherePoint::new(Vec3::new(cb * cd, -cb * sd, sb))
}

/// The rotation by θ about (cos β, 0, sin β).
pub fn axis_rotation(beta: f64, theta: f64) -> Rotation {
    Rotation::from_axis_angle(Vec3::new(beta.cos(), 0.0, beta.sin()), theta)
}

/// The composed map g∘f_ε on points.
#[derive(Debug, Clone, Copy)]
pub struct ComposedMap {
    pub g: Rotation,
    pub f: TwistFamily,
}

impl ComposedMap {
    pub fn new(beta: f64, theta: f64, eps: f64) -> Result<ComposedMap> {
        Ok(ComposedMap {
            g: axis_rotation(beta, theta),
            f: TwistFamily::new(eps)?,
        })
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.g.apply(self.f.apply(SpherePoint::new(p)).vec())
    }

    /// 2×2 tangent map at a fixed point A, in the frame (east, north) of A,
    /// by central differences along great circles with one Richardson step.
    pub fn numerical_jacobian(&self, a: SpherePoint, h: f64) -> [[f64; 2]; 2] {
        let frame = tangent_frame(a);
        let p = a.vec();
        let image = SpherePoint::new(self.apply(p));
        let out_frame = tangent_frame(image);
        let diff = |e: Vec3, t: f64| -> Vec3 {
            let fwd = self.apply(p * t.cos() + e * t.sin());
            let bwd = self.apply(p * t.cos() - e * t.sin());
            (fwd - bwd) * (0.5 / t)
        };
        let mut j = [[0.0; 2]; 2];
        for (col, e) in frame.iter().enumerate() {
            let d1 = diff(*e, h);
            let d2 = diff(*e, 0.5 * h);
            let d = (d2 * 4.0 - d1) * (1.0 / 3.0);
            j[0][col] = d.dot(out_frame[0]);
            j[1][col] = d.dot(out_frame[1]);
        }
        j
    }

    /// Exact tangent map at `a` in the same frames, from the twist derivative.
    pub fn analytic_jacobian(&self, a: SpherePoint) -> [[f64; 2]; 2] {
        let frame = tangent_frame(a);
        let image = SpherePoint::new(self.apply(a.vec()));
        let out_frame = tangent_frame(image);
        let mut j = [[0.0; 2]; 2];
        for (col, e) in frame.iter().enumerate() {
            let s = crate::geometry::TangentState::new(a, *e);
            let (t, l) = self.f.tangent_apply(&s);
            let d = self.g.apply(t.dir()) * l.exp();
            j[0][col] = d.dot(out_frame[0]);
            j[1][col] = d.dot(out_frame[1]);
        }
        j
    }
}

/// Orthonormal tangent frame; at the poles a fixed frame is used.
fn tangent_frame(p: SpherePoint) -> [Vec3; 2] {
    let v = p.vec();
    if (v.x * v.x + v.y * v.y).sqrt() < 1e-9 {
        let e1 = Vec3::X;
        return [e1, v.cross(e1).normalized()];
    }
    [p.east(), p.north()]
}

fn eigen_2x2(j: &[[f64; 2]; 2]) -> (f64, [Complex64; 2]) {
    let t = j[0][0] + j[1][1];
    let d = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = Complex64::new(t * t - 4.0 * d, 0.0).sqrt();
    let half = Complex64::new(0.5 * t, 0.0);
    let e1 = half + 0.5 * disc;
    let e2 = half - 0.5 * disc;
    if e1.norm() >= e2.norm() {
        (t, [e1, e2])
    } else {
        (t, [e2, e1])
    }
}

fn bisect_root(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Simple roots of `f` on [0, 2π): sign changes on an `n`-point scan,
/// refined by bisection to 1e−12. Exact zeros on the scan are kept.
fn periodic_roots(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
    let h = TAU / n as f64;
    let vals: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        let (x0, f0) = (i as f64 * h, vals[i]);
        let f1 = vals[(i + 1) % n];
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            roots.push(bisect_root(&f, x0, x0 + h, 1e-12).rem_euclid(TAU));
        }
    }
    roots
}

/// All fixed points of g∘f_ε for the rotation with axis latitude β and
/// angle θ, validated and classified.
pub fn find_fixed_points(beta: f64, theta: f64, eps: f64) -> Result<Vec<FixedPointRecord>> {
    if !(-1e-12..=FRAC_PI_2 + 1e-12).contains(&beta) {
        return Err(domain("beta", beta, "[0, π/2]"));
    }
    let map = ComposedMap::new(beta, theta, eps)?;
    let mut roots = periodic_roots(|b| fixed_point_function(b, beta, theta, eps), ROOT_SCAN);
    roots.sort_by(f64::total_cmp);
    // Merge near-coincident roots, including across 0 ≡ 2π.
    let mut merged: Vec<(f64, bool)> = Vec::new();
    for b in roots {
        match merged.last_mut() {
            Some((prev, dbl)) if b - *prev < MERGE_DISTANCE => *dbl = true,
            _ => merged.push((b, false)),
        }
    }
    if merged.len() > 1 {
        let first = merged[0].0;
        let last = merged[merged.len() - 1].0;
        if first + TAU - last < MERGE_DISTANCE {
            merged.pop();
            merged[0].1 = true;
        }
    }
    Ok(merged
        .into_iter()
        .map(|(b, double_zero)| {
            let a = fixed_point_location(b, eps);
            let residual = (map.apply(a.vec()) - a.vec()).norm();
            let j = map.numerical_jacobian(a, 1e-6);
            let (trace, eigenvalues) = eigen_2x2(&j);
            FixedPointRecord {
                b,
                location: a,
                trace,
                eigenvalues,
                stability: Stability::from_trace(trace),
                residual,
                flags: RecordFlags {
                    degenerate: (trace.abs() - 2.0).abs() < PARABOLIC_WINDOW,
                    double_zero,
                    unvalidated: residual > RESIDUAL_FLAG,
                },
            }
        })
        .collect())
}

/// μ_max(ε) = πε/2 + √(1 + (πε/2)²).
pub fn max_eigenvalue(eps: f64) -> Result<f64> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(domain("eps", eps, "[0, ∞)"));
    }
    let h = FRAC_PI_2 * eps;
    Ok(h + (1.0 + h * h).sqrt())
}

/// A rotation realizing the largest fixed-point eigenvalue at b = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxEigenvalueWitness {
    pub beta: f64,
    pub theta: f64,
    pub b: f64,
    pub modulus: f64,
}

/// Largest eigenvalue modulus at the b = 0 fixed point over the rotations
/// for which A(0) is fixed.
///
/// Those rotations form a curve in (β, θ): tan(θ/2) sin β = −tan δ₀ with
/// δ₀ = πε/2. The curve is scanned in both parametrizations (θ from β and
/// β from θ, the latter covering integer ε where β = 0 and θ is free) and
/// the best point is refined by golden-section search.
pub fn max_eigenvalue_witness(eps: f64) -> Result<MaxEigenvalueWitness> {
    let f = TwistFamily::new(eps)?;
    let d0 = FRAC_PI_2 * eps;
    let (sd, cd) = d0.sin_cos();
    let a0 = fixed_point_location(0.0, eps);
    let modulus_at = |beta: f64, theta: f64| -> f64 {
        let map = ComposedMap {
            g: axis_rotation(beta, theta),
            f,
        };
        let j = map.numerical_jacobian(a0, 1e-6);
        eigen_2x2(&j).1[0].norm()
    };
    let theta_of_beta = |beta: f64| (2.0 * (-sd).atan2(beta.sin() * cd)).rem_euclid(TAU);
    let beta_of_theta = |theta: f64| -> Option<f64> {
        let t = (0.5 * theta).tan();
        if t == 0.0 || !t.is_finite() {
            return None;
        }
        let s = -sd / cd / t;
        (cd != 0.0 && (0.0..=1.0).contains(&s)).then(|| s.asin())
    };
    let n = 2000;
    let mut best = MaxEigenvalueWitness {
        beta: 0.0,
        theta: theta_of_beta(0.0),
        b: 0.0,
        modulus: 0.0,
    };
    let consider = |beta: f64, theta: f64, best: &mut MaxEigenvalueWitness| {
        let m = modulus_at(beta, theta);
        if m > best.modulus {
            *best = MaxEigenvalueWitness {
                beta,
                theta,
                b: 0.0,
                modulus: m,
            };
        }
    };
    for i in 0..=n {
        let beta = FRAC_PI_2 * i as f64 / n as f64;
        consider(beta, theta_of_beta(beta), &mut best);
    }
    // When sin δ₀ = 0 the constraint is sin β · sin(θ/2) = 0: β = 0, θ free.
    let integer_case = sd.abs() < 1e-12;
    for i in 1..n {
        let theta = TAU * i as f64 / n as f64;
        if integer_case {
            consider(0.0, theta, &mut best);
        } else if let Some(beta) = beta_of_theta(theta) {
            consider(beta, theta, &mut best);
        }
    }
    // Golden-section refinement along the active parametrization.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    if integer_case && best.beta == 0.0 {
        let h = TAU / n as f64;
        let (mut lo, mut hi) = ((best.theta - h).max(0.0), (best.theta + h).min(TAU));
        for _ in 0..80 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if modulus_at(0.0, x1) < modulus_at(0.0, x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        consider(0.0, 0.5 * (lo + hi), &mut best);
    } else {
        let h = FRAC_PI_2 / n as f64;
        let (mut lo, mut hi) = ((best.beta - h).max(0.0), (best.beta + h).min(FRAC_PI_2));
        for _ in 0..80 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if modulus_at(x1, theta_of_beta(x1)) < modulus_at(x2, theta_of_beta(x2)) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        let beta = 0.5 * (lo + hi);
        consider(beta, theta_of_beta(beta), &mut best);
    }
    Ok(best)
}

/// One point of a double-zero curve of the small-ε limit equation
/// m sin(b − β) − cos b (1 + sin b) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleZeroPoint {
    pub b: f64,
    pub m: f64,
    pub beta: f64,
}

/// Value and b-derivative of the limit equation.
pub fn limit_equation(b: f64, m: f64, beta: f64) -> (f64, f64) {
    let (sb, cb) = b.sin_cos();
    let v = m * (b - beta).sin() - cb * (1.0 + sb);
    let d = m * (b - beta).cos() + sb * (1.0 + sb) - cb * cb;
    (v, d)
}

/// Double-zero curves for b ∈ [π/2, 3π/2], `samples` ≥ 2 points.
///
/// From the value and derivative equations,
/// m e^{i(b−β)} = (cos 2b − sin b) + i cos b (1 + sin b), so with m ≤ 0
/// m² = 2 − 3 sin²b + 2 sin³b + 3 sin⁴b and
/// β = b − arg[sin b − cos 2b − i cos b (1 + sin b)].
pub fn double_zero_curves(samples: usize) -> Result<Vec<DoubleZeroPoint>> {
    if samples < 2 {
        return Err(domain("samples", samples as f64, "[2, ∞)"));
    }
    (0..samples)
        .map(|i| {
            let b = FRAC_PI_2 + PI * i as f64 / (samples - 1) as f64;
            double_zero_at(b)
        })
        .collect()
}

pub fn double_zero_at(b: f64) -> Result<DoubleZeroPoint> {
    let (s, c) = b.sin_cos();
    let p = c * (1.0 + s);
    let q = (2.0 * b).cos() - s;
    let m2 = 2.0 - 3.0 * s * s + 2.0 * s * s * s + 3.0 * s * s * s * s;
    if m2 < -1e-12 {
        return Err(crate::error::Error::Numeric(format!("m² = {m2} < 0 at b = {b}")));
    }
    let m = -m2.max(0.0).sqrt();
    let beta = if p * p + q * q < 1e-24 {
        // m → 0 at b = 3π/2; the curve closes at β = π/2.
        FRAC_PI_2
    } else {
        (b - (-p).atan2(-q)).rem_euclid(TAU)
    };
    Ok(DoubleZeroPoint { b, m, beta })
}

/// Rotation angle of the double-zero curve at scaled angle m: θ = 2π + mπε.
pub fn wedge_theta(m: f64, eps: f64) -> f64 {
    TAU + m * PI * eps
}

/// Roots of (2/(πε)) tan((πε/2)(1 + sin b)) = sin b cos² b, the condition
/// for a double fixed point on β = 0.
///
/// The tangent is scanned branch by branch: a sign change only counts when
/// cos δ keeps its sign across the scan step. Roots within 1e−6 of
/// |b| = π/2 are dropped.
pub fn beta0_double_roots(eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain("eps", eps, "(0, ∞)"));
    }
    let k = 2.0 / (PI * eps);
    let h_fn = |b: f64| {
        let (sb, cb) = b.sin_cos();
        k * delta_of_b(b, eps).tan() - sb * cb * cb
    };
    let n = 1 << 16;
    let step = TAU / n as f64;
    let mut roots = Vec::new();
    for i in 0..n {
        let (b0, b1) = (i as f64 * step, (i + 1) as f64 * step);
        let (c0, c1) = (delta_of_b(b0, eps).cos(), delta_of_b(b1, eps).cos());
        if c0 * c1 <= 0.0 {
            continue;
        }
        let (h0, h1) = (h_fn(b0), h_fn(b1));
        if h0 * h1 < 0.0 {
            let r = bisect_root(&h_fn, b0, b1, 1e-13);
            let near_pole = (r - FRAC_PI_2).abs() < 1e-6 || (r - 3.0 * FRAC_PI_2).abs() < 1e-6;
            if !near_pole {
                roots.push(r);
            }
        }
    }
    Ok(roots)
}

/// Fixed-point census of one (θ, β) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationCell {
    pub theta: f64,
    pub beta: f64,
    pub n_e: usize,
    pub n_h: usize,
    pub n_r: usize,
    /// Some record in the cell carries a flag.
    pub flagged: bool,
    /// A neighbouring cell has different counts.
    pub boundary: bool,
    pub max_modulus: f64,
}

impl BifurcationCell {
    pub fn total(&self) -> usize {
        self.n_e + self.n_h + self.n_r
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_e as i64 - self.n_h as i64 + self.n_r as i64
    }

    /// Label R^kH^jE^i, omitting absent types.
    pub fn code(&self) -> String {
        let mut s = String::new();
        for (c, n) in [('R', self.n_r), ('H', self.n_h), ('E', self.n_e)] {
            if n > 0 {
                s.push_str(&format!("{c}^{n}"));
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

/// Rectangle of (θ, β) scanned by [`bifurcation_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterWindow {
    pub theta: (f64, f64),
    pub beta: (f64, f64),
}

impl Default for ParameterWindow {
    fn default() -> Self {
        ParameterWindow {
            theta: (0.0, TAU),
            beta: (0.0, FRAC_PI_2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationMap {
    pub eps: f64,
    pub n_theta: usize,
    pub n_beta: usize,
    pub window: ParameterWindow,
    /// Row-major: index `j * n_theta + i` for β index j, θ index i.
    pub cells: Vec<BifurcationCell>,
}

impl BifurcationMap {
    pub fn cell(&self, i_theta: usize, j_beta: usize) -> &BifurcationCell {
        &self.cells[j_beta * self.n_theta + i_theta]
    }

    pub fn theta_width(&self) -> f64 {
        (self.window.theta.1 - self.window.theta.0) / self.n_theta as f64
    }

    pub fn beta_width(&self) -> f64 {
        (self.window.beta.1 - self.window.beta.0) / self.n_beta as f64
    }
}

/// Fixed-point counts on an n_θ × n_β grid of cell centres.
pub fn bifurcation_map(
    eps: f64,
    n_theta: usize,
    n_beta: usize,
    window: ParameterWindow,
) -> Result<BifurcationMap> {
    if n_theta == 0 || n_beta == 0 {
        return Err(crate::error::Error::Config("bifurcation grid must be non-empty".into()));
    }
    TwistFamily::new(eps)?;
    let dt = (window.theta.1 - window.theta.0) / n_theta as f64;
    let db = (window.beta.1 - window.beta.0) / n_beta as f64;
    let mut cells: Vec<BifurcationCell> = (0..n_theta * n_beta)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % n_theta, k / n_theta);
            let theta = window.theta.0 + (i as f64 + 0.5) * dt;
            let beta = window.beta.0 + (j as f64 + 0.5) * db;
            let recs = find_fixed_points(beta, theta, eps)?;
            let count = |s: Stability| recs.iter().filter(|r| r.stability == s).count();
            Ok(BifurcationCell {
                theta,
                beta,
                n_e: count(Stability::Elliptic),
                n_h: count(Stability::Hyperbolic),
                n_r: count(Stability::Reflection),
                flagged: recs.iter().any(|r| r.flags.any()),
                boundary: false,
                max_modulus: recs.iter().map(|r| r.max_modulus()).fold(0.0, f64::max),
            })
        })
        .collect::<Result<_>>()?;
    let key = |c: &BifurcationCell| (c.n_e, c.n_h, c.n_r);
    let keys: Vec<_> = cells.iter().map(key).collect();
    for j in 0..n_beta {
        for i in 0..n_theta {
            let me = keys[j * n_theta + i];
            let mut differs = false;
            if i > 0 && keys[j * n_theta + i - 1] != me {
                differs = true;
            }
            if i + 1 < n_theta && keys[j * n_theta + i + 1] != me {
                differs = true;
            }
            if j > 0 && keys[(j - 1) * n_theta + i] != me {
                differs = true;
            }
            if j + 1 < n_beta && keys[(j + 1) * n_theta + i] != me {
                differs = true;
            }
            cells[j * n_theta + i].boundary = differs;
        }
    }
    Ok(BifurcationMap {
        eps,
        n_theta,
        n_beta,
        window,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_eps_roots() {
        let beta = PI / 4.0;
        let recs = find_fixed_points(beta, PI, 0.0).unwrap();
        assert_eq!(recs.len(), 2);
        assert!((recs[0].b - beta).abs() < 1e-11);
        assert!((recs[1].b - beta - PI).abs() < 1e-11);
        for b in [0.1, 1.0, 2.5] {
            let f = fixed_point_function(b, beta, PI, 0.0);
            assert!((f + (b - beta).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn small_eps_root_asymptotics() {
        let (eps, beta, theta): (f64, f64, f64) = (0.01, 0.3, 2.0);
        let gamma = FRAC_PI_2 * beta.cos() * (1.0 + beta.sin()) / (0.5 * theta).tan();
        let recs = find_fixed_points(beta, theta, eps).unwrap();
        let near = recs
            .iter()
            .map(|r| r.b)
            .min_by(|a, b| (a - beta).abs().total_cmp(&(b - beta).abs()))
            .unwrap();
        assert!((near - (beta + gamma * eps)).abs() < 5.0 * eps * eps, "{near}");
    }

    #[test]
    fn roots_are_dynamically_fixed_and_area_preserving() {
        for &(beta, theta, eps) in &[(0.3, 2.0, 0.01), (1.0, 5.9, 0.1), (0.0, 1.0, 1.5), (0.7, 3.0, 2.7)] {
            let recs = find_fixed_points(beta, theta, eps).unwrap();
            assert!(!recs.is_empty());
            for r in &recs {
                assert!(r.residual < 1e-8, "{r:?}");
                let prod = r.eigenvalues[0] * r.eigenvalues[1];
                assert!((prod.re - 1.0).abs() < 1e-8 && prod.im.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn numerical_and_analytic_jacobians_agree() {
        let map = ComposedMap::new(0.6, 2.2, 1.3).unwrap();
        for r in find_fixed_points(0.6, 2.2, 1.3).unwrap() {
            let a = map.numerical_jacobian(r.location, 1e-6);
            let b = map.analytic_jacobian(r.location);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn generic_small_eps_has_two_points() {
        let recs = find_fixed_points(0.1, PI, 0.1).unwrap();
        assert_eq!(recs.len(), 2);
    }

    #[test]
    fn mu_max_values() {
        assert_eq!(max_eigenvalue(0.0).unwrap(), 1.0);
        assert!((max_eigenvalue(2.0).unwrap() - (PI + (1.0 + PI * PI).sqrt())).abs() < 1e-15);
        assert!((max_eigenvalue(2.0).unwrap() - 6.4385).abs() < 1e-4);
    }

    #[test]
    fn mu_max_is_attained_at_the_equator() {
        for eps in [0.7, 2.0, 2.3] {
            let w = max_eigenvalue_witness(eps).unwrap();
            let mu = max_eigenvalue(eps).unwrap();
            assert!((w.modulus - mu).abs() < 1e-6, "eps {eps}: {w:?} vs {mu}");
            let recs = find_fixed_points(w.beta, w.theta, eps).unwrap();
            let at0 = recs
                .iter()
                .find(|r| r.b.min(TAU - r.b) < 1e-6)
                .expect("b = 0 is a fixed point");
            assert!((at0.max_modulus() - mu).abs() < 1e-6);
        }
    }

    #[test]
    fn triple_point_of_double_zero_curves() {
        let p = double_zero_at(PI).unwrap();
        assert!((p.m + 2f64.sqrt()).abs() < 1e-14);
        assert!((p.beta - PI / 4.0).abs() < 1e-14);
        let e = double_zero_at(FRAC_PI_2).unwrap();
        assert!((e.m + 2.0).abs() < 1e-14 && (e.beta - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn double_zero_curves_are_consistent() {
        let pts = double_zero_curves(2001).unwrap();
        for p in &pts {
            assert!((-2.0 - 1e-12..=1e-12).contains(&p.m));
            assert!(p.beta >= PI / 4.0 - 1e-12 && p.beta <= FRAC_PI_2 + 1e-9, "{p:?}");
            let (v, d) = limit_equation(p.b, p.m, p.beta);
            assert!(v.abs() < 1e-6 && d.abs() < 1e-6, "{p:?}: {v} {d}");
        }
        // Near b = 3π/2 the curve approaches β = π/2.
        let near = double_zero_at(1.5 * PI - 1e-4).unwrap();
        assert!((near.beta - FRAC_PI_2).abs() < 1e-3);
    }

    #[test]
    fn beta0_double_roots_appear_at_integers() {
        assert!(beta0_double_roots(0.5).unwrap().is_empty());
        assert!(beta0_double_roots(0.99).unwrap().is_empty());
        assert!(!beta0_double_roots(1.5).unwrap().is_empty());
        let c1 = beta0_double_roots(1.2).unwrap().len();
        let c2 = beta0_double_roots(1.8).unwrap().len();
        let c3 = beta0_double_roots(2.5).unwrap().len();
        assert_eq!(c1, c2);
        assert!(c3 > c2);
    }

    #[test]
    fn codes_and_counts() {
        let c = BifurcationCell {
            theta: 0.0,
            beta: 0.0,
            n_e: 1,
            n_h: 0,
            n_r: 1,
            flagged: false,
            boundary: false,
            max_modulus: 1.0,
        };
        assert_eq!(c.code(), "R^1E^1");
        assert_eq!(c.euler_characteristic(), 2);
    }
}
