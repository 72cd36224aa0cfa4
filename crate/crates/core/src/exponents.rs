//! Lyapunov exponent estimators.
//!
//! * finite-time quotients and MEGNO for a single orbit of a cocycle;
//! * the random exponent R(ε) of i.i.d. Haar-rotated twists, both as the
//!   one-dimensional integral
//!   `R(ε) = ∫₀^½ log(1 + (2πεx(1 − x))²) dx`
//!   and by direct Monte Carlo over random products.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{sample_haar, sample_tangent_state, Rotation, TangentState};
use crate::quadrature::adaptive_simpson;
use crate::rng::{Seed, StreamRng};
use crate::stats::{mean, pairwise_sum, sample_std, KahanSum};
use crate::twistmap::{twist_tangent, TwistFamily};
use crate::vec3::Vec3;

/// How an [`ExponentEstimate`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Classical,
    Megno,
    MegnoImproved,
    Quadrature,
    Series,
    MonteCarlo,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Classical => "classical",
            Estimator::Megno => "megno",
            Estimator::MegnoImproved => "megno_improved",
            Estimator::Quadrature => "quadrature",
            Estimator::Series => "series",
            Estimator::MonteCarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "classical" => Estimator::Classical,
            "megno" => Estimator::Megno,
            "megno_improved" | "megno-improved" => Estimator::MegnoImproved,
            "quadrature" => Estimator::Quadrature,
            "series" => Estimator::Series,
            "montecarlo" => Estimator::MonteCarlo,
            other => return Err(Error::UnsupportedEstimator(other.to_string())),
        })
    }
}

/// Exponent value in nats per iterate, with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentEstimate {
    pub value: f64,
    /// Statistical standard error, or the error bound for quadrature.
    pub std_error: f64,
    pub n_iterates: u64,
    pub n_samples: u64,
    pub estimator: Estimator,
}

/// One step of a cocycle: image state and log of the stretch of its vector.
pub trait CocycleStep: FnMut(&TangentState) -> (TangentState, f64) {}
impl<F: FnMut(&TangentState) -> (TangentState, f64)> CocycleStep for F {}

/// (1/N) Σ log-stretch along an orbit.
pub fn classical_exponent(
    mut step: impl CocycleStep,
    s0: TangentState,
    n: u64,
) -> Result<ExponentEstimate> {
    if n == 0 {
        return Err(Error::Numeric("classical_exponent needs N ≥ 1".into()));
    }
    let mut s = s0;
    let mut sum = KahanSum::new();
    for _ in 0..n {
        let (t, l) = step(&s);
        if !l.is_finite() {
            return Err(Error::Numeric(format!("non-finite log-stretch {l}")));
        }
        sum.add(l);
        s = t;
    }
    Ok(ExponentEstimate {
        value: sum.value() / n as f64,
        std_error: 0.0,
        n_iterates: n,
        n_samples: 1,
        estimator: Estimator::Classical,
    })
}

/// Running sums for MEGNO.
///
/// With l_k the log-stretch of step k,
/// `Y_{m,n}(j) = jⁿ Σ_{k≤j} k^m l_k` and `Ȳ(N) = Σ_{j≤N} Y_{m,n}(j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MegnoAccumulator {
    k: u64,
    m: u32,
    n: u32,
    sum_y: f64,
    sum_ybar: f64,
}

impl Default for MegnoAccumulator {
    fn default() -> Self {
        MegnoAccumulator::new(2, 0)
    }
}

impl MegnoAccumulator {
    pub fn new(m: u32, n: u32) -> MegnoAccumulator {
        MegnoAccumulator {
            k: 0,
            m,
            n,
            sum_y: 0.0,
            sum_ybar: 0.0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.k
    }

    #[inline]
    pub fn push(&mut self, log_stretch: f64) {
        self.k += 1;
        let k = self.k as f64;
        self.sum_y += k.powi(self.m as i32) * log_stretch;
        self.sum_ybar += k.powi(self.n as i32) * self.sum_y;
    }

    /// Y_{m,n} at the current step.
    pub fn y(&self) -> f64 {
        (self.k as f64).powi(self.n as i32) * self.sum_y
    }

    pub fn ybar(&self) -> f64 {
        self.sum_ybar
    }

    /// Ŷ = (m+1)(m+n+2) Ȳ / N^{m+n+2}.
    pub fn y_hat(&self) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        let (m, n) = (self.m as f64, self.n as f64);
        let big_n = self.k as f64;
        (m + 1.0) * (m + n + 2.0) * self.sum_ybar / big_n.powi((self.m + self.n + 2) as i32)
    }

    /// 12 Ȳ / (N⁴ + 4N³ + 5N²), exact for a constant cocycle up to O(N⁻³).
    pub fn improved(&self) -> Result<f64> {
        if (self.m, self.n) != (2, 0) {
            return Err(Error::UnsupportedEstimator(format!(
                "improved MEGNO is defined only for (m, n) = (2, 0), not ({}, {})",
                self.m, self.n
            )));
        }
        if self.k == 0 {
            return Ok(0.0);
        }
        let n = self.k as f64;
        Ok(12.0 * self.sum_ybar / (n * n * (n * n + 4.0 * n + 5.0)))
    }
}

/// Output of [`megno_exponent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MegnoEstimate {
    pub y_hat: f64,
    pub improved: Option<f64>,
    /// N²·|Ŷ − 2/N|; stays O(1) on regular orbits.
    pub regular_score: f64,
    pub n_iterates: u64,
}

pub fn megno_exponent(
    mut step: impl CocycleStep,
    s0: TangentState,
    n_iter: u64,
    m: u32,
    n: u32,
    want_improved: bool,
) -> Result<MegnoEstimate> {
    if n_iter < 4 {
        return Err(Error::Numeric("megno_exponent needs N ≥ 4".into()));
    }
    if want_improved && (m, n) != (2, 0) {
        return Err(Error::UnsupportedEstimator(format!(
            "improved MEGNO requested with (m, n) = ({m}, {n})"
        )));
    }
    let mut acc = MegnoAccumulator::new(m, n);
    let mut s = s0;
    for _ in 0..n_iter {
        let (t, l) = step(&s);
        if !l.is_finite() {
            return Err(Error::Numeric(format!("non-finite log-stretch {l}")));
        }
        acc.push(l);
        s = t;
    }
    let big_n = n_iter as f64;
    let y_hat = acc.y_hat();
    Ok(MegnoEstimate {
        y_hat,
        improved: if want_improved {
            Some(acc.improved()?)
        } else {
            None
        },
        regular_score: (y_hat - 2.0 / big_n).abs() * big_n * big_n,
        n_iterates: n_iter,
    })
}

/// Improved-MEGNO exponent of a single orbit of g∘f_ε.
///
/// The first `transient` iterates only align the tangent vector; the
/// accumulator then runs for `checkpoints.last()` iterates and its value is
/// read at every checkpoint (which must be increasing).
pub fn orbit_megno(
    g: &Rotation,
    f: &TwistFamily,
    s0: &TangentState,
    transient: u64,
    checkpoints: &[u64],
) -> Vec<f64> {
    orbit_exponent(g, f, s0, transient, checkpoints, Estimator::MegnoImproved)
        .expect("improved MEGNO is an orbit estimator")
}

/// Exponent of a single orbit of g∘f_ε read at each checkpoint, for the
/// orbit estimators Classical, Megno (m, n) = (2, 0) and MegnoImproved.
pub fn orbit_exponent(
    g: &Rotation,
    f: &TwistFamily,
    s0: &TangentState,
    transient: u64,
    checkpoints: &[u64],
    estimator: Estimator,
) -> Result<Vec<f64>> {
    if !matches!(
        estimator,
        Estimator::Classical | Estimator::Megno | Estimator::MegnoImproved
    ) {
        return Err(Error::UnsupportedEstimator(format!(
            "{estimator} is not an orbit estimator"
        )));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be increasing".into()));
    }
    let pi_eps = PI * f.eps();
    let axis = f.axis();
    let m = axis.compose(g).compose(&axis.inverse());
    let mut p = axis.apply(s0.base().vec());
    let mut v = axis.apply(s0.dir());
    let step = |p: &mut Vec3, v: &mut Vec3| -> f64 {
        let (q, w, l) = twist_tangent(pi_eps, *p, *v);
        let q = m.apply(q);
        let w = m.apply(w);
        // Renormalize and re-orthogonalize every step.
        let q = q * (1.0 / q.norm());
        let w = w - q * q.dot(w);
        *v = w * (1.0 / w.norm());
        *p = q;
        l
    };
    for _ in 0..transient {
        step(&mut p, &mut v);
    }
    let mut acc = MegnoAccumulator::new(2, 0);
    let mut sum = KahanSum::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    while let Some(&&c) = next.peek() {
        if acc.steps() >= c {
            out.push(match estimator {
                Estimator::Classical if c > 0 => sum.value() / c as f64,
                Estimator::Classical => 0.0,
                Estimator::Megno => acc.y_hat(),
                _ => acc.improved()?,
            });
            next.next();
            continue;
        }
        let l = step(&mut p, &mut v);
        acc.push(l);
        if estimator == Estimator::Classical {
            sum.add(l);
        }
    }
    Ok(out)
}

/// R(ε) by adaptive Simpson on [0, ½], absolute tolerance 1e−11.
pub fn random_exponent_quadrature(eps: f64) -> Result<ExponentEstimate> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(crate::error::domain("eps", eps, "[0, ∞)"));
    }
    let done = |value, err| ExponentEstimate {
        value,
        std_error: err,
        n_iterates: 0,
        n_samples: 0,
        estimator: Estimator::Quadrature,
    };
    if eps == 0.0 {
        return Ok(done(0.0, 0.0));
    }
    let c = 2.0 * PI * eps;
    let q = adaptive_simpson(
        |x| {
            let a = c * x * (1.0 - x);
            (a * a).ln_1p()
        },
        0.0,
        0.5,
        1e-11,
    )?;
    Ok(done(q.value, q.error))
}

/// Which truncated expansion of R(ε) to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesRegime {
    Small,
    Large,
}

/// π²ε²/15 − 2π⁴ε⁴/315 (small ε) or log(2πε) − 2 + 1/(2ε) (large ε).
pub fn random_exponent_series(eps: f64, regime: SeriesRegime) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(crate::error::domain("eps", eps, "(0, ∞)"));
    }
    Ok(match regime {
        SeriesRegime::Small => {
            let e2 = eps * eps;
            PI * PI / 15.0 * e2 - 2.0 * PI.powi(4) / 315.0 * e2 * e2
        }
        SeriesRegime::Large => (2.0 * PI * eps).ln() - 2.0 + 0.5 / eps,
    })
}

/// Monte-Carlo random exponent and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloExponent {
    pub estimate: ExponentEstimate,
    /// κ(ε) such that the standard error is κ/√(NM), from batch means.
    pub kappa: f64,
    pub run_means: Vec<f64>,
}

/// Number of batches each run is cut into for the κ estimate.
const KAPPA_BATCHES: u64 = 32;

/// One run of `n` random steps s ↦ g·f_ε(s) with fresh Haar g each step.
/// Returns the per-batch sums of log-stretch.
fn random_run(pi_eps: f64, n: u64, rng: &mut StreamRng) -> Vec<f64> {
    let s = sample_tangent_state(rng);
    let (mut p, mut v) = (s.base().vec(), s.dir());
    let batches = KAPPA_BATCHES.min(n);
    let mut out = Vec::with_capacity(batches as usize);
    for b in 0..batches {
        let len = n * (b + 1) / batches - n * b / batches;
        let mut sum = KahanSum::new();
        for _ in 0..len {
            let (q, w, l) = twist_tangent(pi_eps, p, v);
            sum.add(l);
            let g = sample_haar(rng).rotation;
            let q = g.apply(q);
            let q = q * (1.0 / q.norm());
            let w = g.apply(w);
            let w = w - q * q.dot(w);
            v = w * (1.0 / w.norm());
            p = q;
        }
        out.push(sum.value());
    }
    out
}

/// Averages `m` independent runs of `n` random steps.
///
/// Run `i` uses stream `i` of `seed`, so the result does not depend on the
/// number of worker threads.
pub fn random_exponent_montecarlo(
    eps: f64,
    n: u64,
    m: u64,
    seed: Seed,
) -> Result<MonteCarloExponent> {
    if n == 0 || m == 0 {
        return Err(Error::Numeric("random_exponent_montecarlo needs N, M ≥ 1".into()));
    }
    TwistFamily::new(eps)?;
    let pi_eps = PI * eps;
    let runs: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| random_run(pi_eps, n, &mut seed.rng(i)))
        .collect();
    let run_means: Vec<f64> = runs.iter().map(|b| pairwise_sum(b) / n as f64).collect();
    let value = mean(&run_means);
    // Each batch mean has variance ≈ κ²/len; rescale to a per-step κ.
    let mut scaled = Vec::new();
    for batches in &runs {
        let k = batches.len() as u64;
        for (b, s) in batches.iter().enumerate() {
            let b = b as u64;
            let len = (n * (b + 1) / k - n * b / k) as f64;
            scaled.push((s / len - value) * len.sqrt());
        }
    }
    let kappa = if scaled.len() > 1 {
        (scaled.iter().map(|x| x * x).sum::<f64>() / (scaled.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let std_error = if m > 1 {
        sample_std(&run_means) / (m as f64).sqrt()
    } else {
        kappa / ((n * m) as f64).sqrt()
    };
    Ok(MonteCarloExponent {
        estimate: ExponentEstimate {
            value,
            std_error,
            n_iterates: n,
            n_samples: m,
            estimator: Estimator::MonteCarlo,
        },
        kappa,
        run_means,
    })
}

/// Sample mean and standard error of `samples` draws of `h(s)` for
/// Liouville-uniform tangent states s, in chunks of independent streams.
fn liouville_mean(
    samples: u64,
    seed: Seed,
    h: impl Fn(&TangentState) -> f64 + Sync,
) -> (f64, f64) {
    const CHUNK: u64 = 1 << 16;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.rng(c);
            let len = CHUNK.min(samples - c * CHUNK);
            let (mut s1, mut s2) = (KahanSum::new(), KahanSum::new());
            for _ in 0..len {
                let x = h(&sample_tangent_state(&mut rng));
                s1.add(x);
                s2.add(x * x);
            }
            (s1.value(), s2.value())
        })
        .collect();
    let n = samples as f64;
    let s1 = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    let s2 = pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
    let mu = s1 / n;
    let var = ((s2 - n * mu * mu) / (n - 1.0)).max(0.0);
    (mu, (var / n).sqrt())
}

/// Monte-Carlo mean of ‖Df_ε v‖⁻² over the unit tangent bundle; equals 1.
pub fn jacobian_normalization(eps: f64, samples: u64, seed: Seed) -> Result<(f64, f64)> {
    let f = TwistFamily::new(eps)?;
    if samples < 2 {
        return Err(Error::Numeric("need at least two samples".into()));
    }
    Ok(liouville_mean(samples, seed, |s| {
        (-2.0 * f.tangent_apply(s).1).exp()
    }))
}

/// Monte-Carlo mean of log‖Df_ε v‖ over the unit tangent bundle.
///
/// Haar rotations leave the normalized Liouville measure invariant, so this
/// is another route to R(ε).
pub fn liouville_log_stretch(eps: f64, samples: u64, seed: Seed) -> Result<ExponentEstimate> {
    let f = TwistFamily::new(eps)?;
    if samples < 2 {
        return Err(Error::Numeric("need at least two samples".into()));
    }
    let (value, std_error) = liouville_mean(samples, seed, |s| f.tangent_apply(s).1);
    Ok(ExponentEstimate {
        value,
        std_error,
        n_iterates: 1,
        n_samples: samples,
        estimator: Estimator::MonteCarlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpherePoint;
    use std::f64::consts::LN_2;

    #[test]
    fn quadrature_values() {
        assert_eq!(random_exponent_quadrature(0.0).unwrap().value, 0.0);
        let r = random_exponent_quadrature(0.3).unwrap();
        assert!((r.value - 0.0547518).abs() < 1e-6);
        assert!((r.value - 0.054_751_807_434_579_795).abs() < 1e-10);
        assert!(r.std_error < 1e-10);
        assert!((random_exponent_quadrature(0.1).unwrap().value - 0.0065179).abs() < 1e-5);
        let oracles = [
            (0.2, 0.025_380_712_769_843_96),
            (1.0, 0.379_281_113_331_700_4),
            (3.0, 1.115_799_344_790_514_1),
            (10.0, 2.192_279_132_006_780_7),
            (100.0, 4.448_077_334_546_391),
            (1000.0, 6.746_132_763_094_716),
        ];
        for (eps, v) in oracles {
            let r = random_exponent_quadrature(eps).unwrap().value;
            assert!((r - v).abs() < 1e-10, "eps={eps}: {r} vs {v}");
        }
        assert!(random_exponent_quadrature(-1.0).is_err());
    }

    #[test]
    fn series_regimes() {
        let q = random_exponent_quadrature(0.3).unwrap().value;
        let s = random_exponent_series(0.3, SeriesRegime::Small).unwrap();
        assert!(((s - q) / q).abs() < 0.01);
        let q = random_exponent_quadrature(3.19).unwrap().value;
        let s = random_exponent_series(3.19, SeriesRegime::Large).unwrap();
        assert!(((s - q) / q).abs() < 0.01);
        let s = random_exponent_series(100.0, SeriesRegime::Large).unwrap();
        assert!((s - 4.4481).abs() < 2e-3);
        let s = random_exponent_series(0.1, SeriesRegime::Small).unwrap();
        assert!((s - 0.0065179).abs() < 1e-5);
        assert!(random_exponent_series(0.0, SeriesRegime::Small).is_err());
    }

    #[test]
    fn classical_trivial_cases() {
        let f = TwistFamily::new(0.0).unwrap();
        let s0 = TangentState::from_angle(SpherePoint::from_lon_lat(0.3, 0.2), 1.0);
        let e = classical_exponent(|s: &TangentState| f.tangent_apply(s), s0, 100).unwrap();
        assert_eq!(e.value, 0.0);
        let e = classical_exponent(|s: &TangentState| (*s, LN_2), s0, 37).unwrap();
        assert!((e.value - LN_2).abs() < 1e-15);
        let g = Rotation::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.7);
        let e = classical_exponent(|s: &TangentState| (s.rotated(&g), 0.0), s0, 10_000).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(classical_exponent(|s: &TangentState| (*s, 0.0), s0, 0).is_err());
        assert!(classical_exponent(|s: &TangentState| (*s, f64::NAN), s0, 3).is_err());
    }

    #[test]
    fn megno_constant_cocycle() {
        let s0 = TangentState::from_angle(SpherePoint::NORTH, 0.0);
        let n = 1000u64;
        let e = megno_exponent(|s: &TangentState| (*s, LN_2), s0, n, 2, 0, true).unwrap();
        // Closed form: Ȳ = c Σ_j Σ_{k≤j} k² = c N(N+1)²(N+2)/12.
        let nf = n as f64;
        let ybar = LN_2 * nf * (nf + 1.0).powi(2) * (nf + 2.0) / 12.0;
        assert!((e.y_hat - 12.0 * ybar / nf.powi(4)).abs() < 1e-9);
        assert!((e.y_hat - LN_2).abs() < 0.01);
        let imp = e.improved.unwrap();
        assert!((imp - LN_2).abs() < 1e-8);
    }

    #[test]
    fn megno_zero_cocycle_and_errors() {
        let s0 = TangentState::from_angle(SpherePoint::NORTH, 0.0);
        let e = megno_exponent(|s: &TangentState| (*s, 0.0), s0, 100, 2, 0, true).unwrap();
        assert_eq!(e.y_hat, 0.0);
        assert_eq!(e.improved, Some(0.0));
        assert!(matches!(
            megno_exponent(|s: &TangentState| (*s, 0.0), s0, 100, 1, 1, true),
            Err(Error::UnsupportedEstimator(_))
        ));
        assert!(megno_exponent(|s: &TangentState| (*s, 0.0), s0, 100, 1, 1, false).is_ok());
        assert!(megno_exponent(|s: &TangentState| (*s, 0.0), s0, 3, 2, 0, false).is_err());
    }

    #[test]
    fn megno_general_exponents_normalize() {
        let acc = (0..5000).fold(MegnoAccumulator::new(1, 1), |mut a, _| {
            a.push(0.5);
            a
        });
        assert!((acc.y_hat() - 0.5).abs() < 2e-3);
    }

    #[test]
    fn megno_on_twist_orbit_decays_like_two_over_n() {
        let f = TwistFamily::new(1.0).unwrap();
        let s0 = TangentState::from_angle(SpherePoint::from_lon_lat(0.0, 0.1), PI / 2.0);
        let n = 2048u64;
        let e = megno_exponent(|s: &TangentState| f.tangent_apply(s), s0, n, 2, 0, true).unwrap();
        assert!(e.regular_score < 10.0, "score {}", e.regular_score);
    }

    #[test]
    fn estimators_agree_on_hyperbolic_cocycle() {
        let s0 = TangentState::from_angle(SpherePoint::NORTH, 0.0);
        let c = 1.3;
        let mut k = 0u64;
        let step = |s: &TangentState| {
            k += 1;
            (*s, c + 0.2 * ((k % 3) as f64 - 1.0))
        };
        let cl = classical_exponent(step, s0, 10_000).unwrap().value;
        let mut k = 0u64;
        let step = |s: &TangentState| {
            k += 1;
            (*s, c + 0.2 * ((k % 3) as f64 - 1.0))
        };
        let mg = megno_exponent(step, s0, 10_000, 2, 0, true).unwrap().improved.unwrap();
        assert!(((cl - mg) / cl).abs() < 0.02);
    }

    #[test]
    fn orbit_megno_identity_rotation_is_regular() {
        let f = TwistFamily::new(2.0).unwrap();
        let s0 = TangentState::from_angle(SpherePoint::from_lon_lat(0.4, 0.3), 0.9);
        let v = orbit_megno(&Rotation::IDENTITY, &f, &s0, 512, &[1024, 2048, 4096]);
        assert_eq!(v.len(), 3);
        for (x, n) in v.iter().zip([1024.0, 2048.0, 4096.0]) {
            assert!(x.abs() < 4.0 / n + 50.0 / (n * n), "{x}");
        }
    }

    #[test]
    fn montecarlo_zero_eps() {
        let r = random_exponent_montecarlo(0.0, 100, 8, Seed::new(1)).unwrap();
        assert_eq!(r.estimate.value, 0.0);
        assert!(r.run_means.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn montecarlo_small_run_is_close() {
        let r = random_exponent_montecarlo(3.0, 20_000, 8, Seed::new(2)).unwrap();
        let q = random_exponent_quadrature(3.0).unwrap().value;
        let se = r.kappa / (160_000f64).sqrt();
        assert!((r.estimate.value - q).abs() < 4.0 * se, "{} vs {q}", r.estimate.value);
        assert!(r.kappa > 0.0);
    }

    #[test]
    fn jacobian_mean_is_one() {
        let (m, se) = jacobian_normalization(2.0, 200_000, Seed::new(3)).unwrap();
        assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    }
}
