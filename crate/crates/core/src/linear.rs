//! The linear analogue: families `{R_φ A : φ ∈ S¹}` of 2×2 matrices.
//!
//! For |det A| = 1 the random exponent with Haar-random rotations is
//! `log((s + 1/s)/2)`, s = ‖A‖, and it equals the average over φ of
//! `log |e₁(R_φ A)|`, the log of the spectral radius.
//!
//! The second half realizes the stationary densities of the randomly
//! rotated projective action on the circle by a discretized transfer
//! operator, and checks that their average over the rotation α is Lebesgue.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::exponents::{Estimator, ExponentEstimate};
use crate::quadrature::tanh_sinh;
use crate::rng::{Seed, StreamRng};
use crate::stats::{mean, sample_std, KahanSum};

/// Real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Matrix2 {
        Matrix2 { a, b, c, d }
    }

    pub fn diag(x: f64, y: f64) -> Matrix2 {
        Matrix2::new(x, 0.0, 0.0, y)
    }

    /// Counter-clockwise rotation by `phi`.
    pub fn rotation(phi: f64) -> Matrix2 {
        let (s, c) = phi.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let f = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (f * f - 4.0 * det * det).max(0.0).sqrt();
        (0.5 * (f + disc)).sqrt()
    }

    /// Largest modulus of an eigenvalue, |e₁|.
    pub fn spectral_radius(&self) -> f64 {
        let t = self.trace();
        let det = self.det();
        let disc = t * t - 4.0 * det;
        if disc >= 0.0 {
            0.5 * (t.abs() + disc.sqrt())
        } else {
            det.sqrt()
        }
    }

    /// `A/√|det A|`.
    pub fn normalized(&self) -> Result<Matrix2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NotUnimodular(det));
        }
        let k = 1.0 / det.abs().sqrt();
        Ok(Matrix2::new(self.a * k, self.b * k, self.c * k, self.d * k))
    }

    fn require_unimodular(&self) -> Result<()> {
        let det = self.det();
        if (det.abs() - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnimodular(det));
        }
        Ok(())
    }

    /// `AᵀA − I`, so that ‖Av‖² − ‖v‖² = vᵀ(AᵀA − I)v exactly vanishes for isometries.
    fn gram_excess(&self) -> [f64; 3] {
        [
            self.a * self.a + self.c * self.c - 1.0,
            self.a * self.b + self.c * self.d,
            self.b * self.b + self.d * self.d - 1.0,
        ]
    }
}

/// `log((s + 1/s)/2)` with s = ‖A‖, for |det A| = 1.
pub fn avila_bochi(m: &Matrix2) -> Result<f64> {
    m.require_unimodular()?;
    let s = m.operator_norm();
    Ok(((s + 1.0 / s) / 2.0).ln())
}

/// (1/2π) ∫ log ‖A u_φ‖ dφ by the periodic trapezoid rule, for checking
/// [`avila_bochi`].
pub fn circle_average_log_norm(m: &Matrix2, n: usize) -> f64 {
    crate::quadrature::periodic_mean(
        |phi| {
            let (s, c) = phi.sin_cos();
            let w = m.apply([c, s]);
            0.5 * (w[0] * w[0] + w[1] * w[1]).ln()
        },
        n,
    )
}

/// Λ(A) = (1/2π) ∫ log |e₁(R_φ A)| dφ.
///
/// On elliptic arcs |e₁| = 1 contributes nothing. The hyperbolic arcs are
/// located by scanning `n_phi` points for sign changes of trace² − 4 and
/// bisecting, and each arc is integrated with tanh-sinh to absorb the
/// square-root branch points at its ends. Matrices with det < 0 have no
/// elliptic arcs and are integrated by the trapezoid rule.
pub fn lambda_of_coset(m: &Matrix2, n_phi: usize) -> Result<f64> {
    let det = m.det();
    if det == 0.0 {
        return Err(Error::NotUnimodular(det));
    }
    let a = m.normalized()?;
    if n_phi < 8 {
        return Err(domain("n_phi", n_phi as f64, "[8, ∞)"));
    }
    let integrand = |phi: f64| Matrix2::rotation(phi).mul(&a).spectral_radius().ln();
    if det < 0.0 {
        return Ok(crate::quadrature::periodic_mean(integrand, n_phi));
    }
    // trace(R_φ A) = cos φ (a + d) + sin φ (b − c).
    let tr = |phi: f64| phi.cos() * (a.a + a.d) + phi.sin() * (a.b - a.c);
    let g = |phi: f64| {
        let t = tr(phi);
        t * t - 4.0
    };
    let h = TAU / n_phi as f64;
    let mut crossings = Vec::new();
    for i in 0..n_phi {
        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
        let (g0, g1) = (g(x0), g(x1));
        if g0 == 0.0 {
            crossings.push(x0);
        } else if g0 * g1 < 0.0 {
            crossings.push(bisect(&g, x0, x1));
        }
    }
    if crossings.is_empty() {
        // Either entirely elliptic (contributes 0) or entirely hyperbolic.
        return Ok(if g(0.0) > 0.0 {
            crate::quadrature::periodic_mean(integrand, n_phi)
        } else {
            0.0
        });
    }
    let mut total = KahanSum::new();
    let k = crossings.len();
    for i in 0..k {
        let x0 = crossings[i];
        let x1 = if i + 1 < k {
            crossings[i + 1]
        } else {
            crossings[0] + TAU
        };
        let mid = 0.5 * (x0 + x1);
        if g(mid) > 0.0 {
            total.add(tanh_sinh(integrand, x0, x1, 1e-13).value);
        }
    }
    Ok(total.value() / TAU)
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One log-stretch step of a unit vector; returns the log of the stretch.
#[inline]
fn stretch_step(m: &Matrix2, gram: &[f64; 3], v: &mut [f64; 2]) -> f64 {
    let excess = gram[0] * v[0] * v[0] + 2.0 * gram[1] * v[0] * v[1] + gram[2] * v[1] * v[1];
    let l = 0.5 * (excess / (v[0] * v[0] + v[1] * v[1])).ln_1p();
    let w = m.apply(*v);
    let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
    *v = [w[0] / n, w[1] / n];
    l
}

fn rotate(v: [f64; 2], phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    let t = TAU * rng.random::<f64>();
    [t.cos(), t.sin()]
}

fn estimate_from_runs(runs: Vec<f64>, n: u64) -> ExponentEstimate {
    let m = runs.len() as u64;
    ExponentEstimate {
        value: mean(&runs),
        std_error: if m > 1 {
            sample_std(&runs) / (m as f64).sqrt()
        } else {
            0.0
        },
        n_iterates: n,
        n_samples: m,
        estimator: Estimator::MonteCarlo,
    }
}

/// Top exponent of products `u_k R_g A` with u_k a rotation by an angle
/// uniform in (−δ, δ); `m` runs of `n` steps, run i on stream i.
pub fn matrix_diffused_exponent(
    a: &Matrix2,
    g_angle: f64,
    delta: f64,
    n: u64,
    m: u64,
    seed: Seed,
) -> Result<ExponentEstimate> {
    if !(delta > 0.0) {
        return Err(domain("delta", delta, "(0, ∞)"));
    }
    if n == 0 || m == 0 {
        return Err(Error::Numeric("need N, M ≥ 1".into()));
    }
    let gram = a.gram_excess();
    let runs: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng: StreamRng = seed.rng(i);
            let mut v = random_unit(&mut rng);
            let mut sum = KahanSum::new();
            for _ in 0..n {
                sum.add(stretch_step(a, &gram, &mut v));
                let u = delta * (2.0 * rng.random::<f64>() - 1.0);
                v = rotate(v, g_angle + u);
            }
            sum.value() / n as f64
        })
        .collect();
    Ok(estimate_from_runs(runs, n))
}

/// Top exponent of i.i.d. products of matrices drawn uniformly from `mats`.
pub fn random_product_exponent(
    mats: &[Matrix2],
    n: u64,
    m: u64,
    seed: Seed,
) -> Result<ExponentEstimate> {
    if mats.is_empty() || n == 0 || m == 0 {
        return Err(Error::Numeric("need matrices and N, M ≥ 1".into()));
    }
    let grams: Vec<[f64; 3]> = mats.iter().map(Matrix2::gram_excess).collect();
    let runs: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng: StreamRng = seed.rng(i);
            let mut v = random_unit(&mut rng);
            let mut sum = KahanSum::new();
            for _ in 0..n {
                let j = rng.random_range(0..mats.len());
                sum.add(stretch_step(&mats[j], &grams[j], &mut v));
            }
            sum.value() / n as f64
        })
        .collect();
    Ok(estimate_from_runs(runs, n))
}

/// Mean of log |e₁| over a finite family with equal weights.
pub fn eigenvalue_average(mats: &[Matrix2]) -> f64 {
    mean(&mats.iter().map(|m| m.spectral_radius().ln()).collect::<Vec<_>>())
}

/// The circle map induced by A: the projective action conjugated by angle
/// doubling. Takes and returns an angle.
pub fn circle_map(a: &Matrix2, z: f64) -> f64 {
    let (s, c) = (0.5 * z).sin_cos();
    let w = a.apply([c, s]);
    (2.0 * w[1].atan2(w[0])).rem_euclid(TAU)
}

/// Probability density on N_z equal cells of the circle, w.r.t. the
/// normalized Lebesgue measure (mean value 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CircleDensity {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// L¹ distance between the last two iterates.
    pub residual: f64,
}

impl CircleDensity {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cell centres as angles.
    pub fn points(&self) -> Vec<f64> {
        let n = self.values.len() as f64;
        (0..self.values.len())
            .map(|j| TAU * (j as f64 + 0.5) / n)
            .collect()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

/// Sparse row-stochastic matrix: row y lists (target cell, probability).
struct Transition {
    rows: Vec<Vec<(usize, f64)>>,
}

/// ∫₋∞^u max(t − s, 0) dt style antiderivative of a ramp.
#[inline]
fn r2(t: f64) -> f64 {
    if t > 0.0 {
        0.5 * t * t
    } else {
        0.0
    }
}

/// ∫_a^b |[z0, z1] ∩ [u − δ, u + δ]| du.
fn overlap_integral(z0: f64, z1: f64, delta: f64, a: f64, b: f64) -> f64 {
    // Overlap of two intervals as a function of the shift u is a sum of ramps.
    let prim = |u: f64| r2(u - z0 + delta) - r2(u - z0 - delta) - r2(u - z1 + delta) + r2(u - z1 - delta);
    prim(b) - prim(a)
}

fn overlap_at(z0: f64, z1: f64, delta: f64, u: f64) -> f64 {
    ((u + delta).min(z1) - (u - delta).max(z0)).max(0.0)
}

impl Transition {
    /// Mass in source cell y is spread uniformly over the image arc of the
    /// cell under α·f, then convolved with the top-hat of half-width δ.
    fn new(a: &Matrix2, alpha: f64, delta: f64, n: usize) -> Transition {
        let h = TAU / n as f64;
        let rows = (0..n)
            .map(|y| {
                let e0 = circle_map(a, y as f64 * h) + alpha;
                let e1 = circle_map(a, (y + 1) as f64 * h) + alpha;
                // The map preserves orientation when det > 0; unwrap the arc.
                let len = (e1 - e0).rem_euclid(TAU);
                let (lo, hi) = (e0, e0 + len);
                let first = ((lo - delta) / h).floor() as i64;
                let last = ((hi + delta) / h).floor() as i64;
                let mut row: Vec<(usize, f64)> = Vec::with_capacity((last - first + 1) as usize);
                for j in first..=last {
                    let (z0, z1) = (j as f64 * h, (j + 1) as f64 * h);
                    let w = if len > 1e-9 {
                        overlap_integral(z0, z1, delta, lo, hi) / len
                    } else {
                        overlap_at(z0, z1, delta, 0.5 * (lo + hi))
                    };
                    if w > 0.0 {
                        let t = j.rem_euclid(n as i64) as usize;
                        match row.iter_mut().find(|(c, _)| *c == t) {
                            Some(e) => e.1 += w,
                            None => row.push((t, w)),
                        }
                    }
                }
                let total: f64 = row.iter().map(|e| e.1).sum();
                for e in &mut row {
                    e.1 /= total;
                }
                row
            })
            .collect();
        Transition { rows }
    }

    fn push_forward(&self, phi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (y, row) in self.rows.iter().enumerate() {
            let m = phi[y];
            for &(z, w) in row {
                out[z] += m * w;
            }
        }
    }
}

/// Maximal number of power iterations.
pub const MAX_POWER_ITERATIONS: usize = 100_000;

/// Fixed point φ_α of the randomly rotated transfer operator, from the
/// uniform density.
pub fn circle_operator_fixed_point(
    a: &Matrix2,
    alpha: f64,
    delta: f64,
    n_z: usize,
) -> Result<CircleDensity> {
    circle_operator_fixed_point_from(a, alpha, delta, &vec![1.0; n_z])
}

/// As [`circle_operator_fixed_point`] from a given initial density.
///
/// Power iteration until successive iterates differ by less than 1e−10 in
/// L¹ (normalized measure).
pub fn circle_operator_fixed_point_from(
    a: &Matrix2,
    alpha: f64,
    delta: f64,
    init: &[f64],
) -> Result<CircleDensity> {
    let n_z = init.len();
    if n_z < 2 {
        return Err(domain("n_z", n_z as f64, "[2, ∞)"));
    }
    if !(delta > 0.0 && delta < PI) {
        return Err(domain("delta", delta, "(0, π)"));
    }
    if !(a.det() > 0.0) {
        return Err(Error::NotUnimodular(a.det()));
    }
    let t = Transition::new(a, alpha, delta, n_z);
    let mass: f64 = init.iter().sum::<f64>() / n_z as f64;
    if !(mass > 0.0) || init.iter().any(|&x| x < 0.0) {
        return Err(Error::Numeric("initial density must be non-negative and non-zero".into()));
    }
    let mut phi: Vec<f64> = init.iter().map(|x| x / mass).collect();
    let mut next = vec![0.0; n_z];
    for it in 1..=MAX_POWER_ITERATIONS {
        t.push_forward(&phi, &mut next);
        let diff: f64 = phi.iter().zip(&next).map(|(p, q)| (p - q).abs()).sum::<f64>() / n_z as f64;
        std::mem::swap(&mut phi, &mut next);
        if diff < 1e-10 {
            return Ok(CircleDensity {
                values: phi,
                iterations: it,
                residual: diff,
            });
        }
    }
    Err(Error::Numeric(format!(
        "circle operator did not converge in {MAX_POWER_ITERATIONS} iterations \
         (δ = {delta}, α = {alpha}); the spectral gap is too small"
    )))
}

/// Average of φ_α over `n_alpha` equispaced α and its largest deviation
/// from the constant 1.
pub fn verify_m_delta_lebesgue(
    a: &Matrix2,
    delta: f64,
    n_alpha: usize,
    n_z: usize,
) -> Result<(f64, Vec<f64>)> {
    if n_alpha == 0 {
        return Err(domain("n_alpha", 0.0, "[1, ∞)"));
    }
    let dens: Vec<CircleDensity> = (0..n_alpha)
        .into_par_iter()
        .map(|i| circle_operator_fixed_point(a, TAU * i as f64 / n_alpha as f64, delta, n_z))
        .collect::<Result<_>>()?;
    let avg: Vec<f64> = (0..n_z)
        .map(|j| dens.iter().map(|d| d.values[j]).sum::<f64>() / n_alpha as f64)
        .collect();
    let dev = avg.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    Ok((dev, avg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sl2(rng: &mut StreamRng) -> Matrix2 {
        loop {
            let m = Matrix2::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            if m.det() > 0.05 {
                return m.normalized().unwrap();
            }
        }
    }

    #[test]
    fn avila_bochi_values() {
        assert_eq!(avila_bochi(&Matrix2::IDENTITY).unwrap(), 0.0);
        let d = Matrix2::diag(2.0, 0.5);
        assert!((avila_bochi(&d).unwrap() - 0.223_143_551_314_209_76).abs() < 1e-14);
        assert!((circle_average_log_norm(&d, 2048) - 0.223_144).abs() < 1e-6);
        assert!(avila_bochi(&Matrix2::rotation(0.7)).unwrap().abs() < 1e-15);
        let s = Matrix2::new(1.0, 1.0, 0.0, 1.0);
        assert!((avila_bochi(&s).unwrap() - 0.111_571_775_657_104_92).abs() < 1e-14);
        assert!(matches!(
            avila_bochi(&Matrix2::diag(2.0, 1.0)),
            Err(Error::NotUnimodular(_))
        ));
    }

    #[test]
    fn avila_bochi_is_nonnegative_and_matches_quadrature() {
        let mut rng = Seed::new(1).rng(0);
        for _ in 0..1000 {
            let m = random_sl2(&mut rng);
            let ab = avila_bochi(&m).unwrap();
            assert!(ab >= 0.0);
        }
        for _ in 0..20 {
            let m = random_sl2(&mut rng);
            let ab = avila_bochi(&m).unwrap();
            assert!((ab - circle_average_log_norm(&m, 4096)).abs() < 1e-8);
        }
    }

    #[test]
    fn coset_average_equals_random_exponent() {
        assert_eq!(lambda_of_coset(&Matrix2::IDENTITY, 1024).unwrap(), 0.0);
        let d = Matrix2::diag(2.0, 0.5);
        let l = lambda_of_coset(&d, 1 << 14).unwrap();
        assert!((l - avila_bochi(&d).unwrap()).abs() < 1e-4, "{l}");
        let s = Matrix2::new(1.0, 1.0, 0.0, 1.0);
        let l = lambda_of_coset(&s, 1 << 14).unwrap();
        assert!((l - avila_bochi(&s).unwrap()).abs() < 1e-3, "{l}");
        let mut rng = Seed::new(2).rng(0);
        for _ in 0..20 {
            let m = random_sl2(&mut rng);
            let l = lambda_of_coset(&m, 4096).unwrap();
            assert!((l - avila_bochi(&m).unwrap()).abs() < 1e-3);
        }
    }

    #[test]
    fn diffused_matrix_limits() {
        let a = Matrix2::diag(2.0, 0.5);
        let e = matrix_diffused_exponent(&Matrix2::IDENTITY, 0.3, 0.1, 1000, 4, Seed::new(3)).unwrap();
        assert_eq!(e.value, 0.0);
        let e = matrix_diffused_exponent(&a, 0.0, TAU, 20_000, 16, Seed::new(4)).unwrap();
        let ab = avila_bochi(&a).unwrap();
        assert!((e.value - ab).abs() < 3.0 * e.std_error + 1e-3, "{:?}", e);
        // R_g A with g = 0 is diag(2, 1/2): |e₁| = 2.
        let e = matrix_diffused_exponent(&a, 0.0, 1e-3, 20_000, 4, Seed::new(5)).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 0.02);
        assert!(matrix_diffused_exponent(&a, 0.0, 0.0, 10, 1, Seed::new(5)).is_err());
    }

    #[test]
    fn identity_operator_has_uniform_fixed_point() {
        for &alpha in &[0.0, 0.3, 2.0] {
            let d = circle_operator_fixed_point(&Matrix2::IDENTITY, alpha, 0.3, 128).unwrap();
            assert!(d.values.iter().all(|x| (x - 1.0).abs() < 1e-12));
        }
        let (dev, _) = verify_m_delta_lebesgue(&Matrix2::IDENTITY, 0.3, 16, 64).unwrap();
        assert!(dev < 1e-12);
    }

    #[test]
    fn fixed_point_is_unique_and_positive() {
        let a = Matrix2::diag(2.0, 0.5);
        let d1 = circle_operator_fixed_point(&a, 0.7, 0.3, 256).unwrap();
        let init: Vec<f64> = (0..256).map(|j| if j < 30 { 5.0 } else { 0.1 }).collect();
        let d2 = circle_operator_fixed_point_from(&a, 0.7, 0.3, &init).unwrap();
        let l1: f64 = d1.values.iter().zip(&d2.values).map(|(x, y)| (x - y).abs()).sum::<f64>() / 256.0;
        assert!(l1 < 1e-8);
        assert!((d1.mean() - 1.0).abs() < 1e-8);
        assert!(d1.values.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn circle_map_is_projective_action() {
        let a = Matrix2::diag(2.0, 0.5);
        assert!(circle_map(&a, 0.0).abs() < 1e-15);
        assert!((circle_map(&a, PI) - PI).abs() < 1e-12);
        let r = Matrix2::rotation(0.4);
        assert!((circle_map(&r, 1.0) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn counterexample_pair() {
        let pair = [Matrix2::new(1.0, 0.0, 1.0, 1.0), Matrix2::new(1.0, 1.0, 0.0, 1.0)];
        assert_eq!(eigenvalue_average(&pair), 0.0);
        let e = random_product_exponent(&pair, 10_000, 16, Seed::new(6)).unwrap();
        assert!(e.value > 3.0 * e.std_error);
    }
}
