//! One-dimensional quadrature rules.

use crate::error::{Error, Result};

/// Result of an adaptive rule: value and accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive Simpson with Richardson stopping |S₂ − S₁|/15 < tol.
///
/// The tolerance is split in half at every bisection so the total error
/// estimate stays below `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if !(b > a) || !(tol > 0.0) {
        return Err(Error::Numeric(format!(
            "adaptive_simpson needs a < b and tol > 0 (got [{a}, {b}], tol {tol})"
        )));
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    let mut err = 0.0;
    let value = simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 60, &mut evals, &mut err)?;
    Ok(Quadrature {
        value,
        error: err,
        evaluations: evals,
    })
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
    err: &mut f64,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Numeric("non-finite integrand in adaptive_simpson".into()));
    }
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals, err)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals, err)?;
    Ok(l + r)
}

/// Tanh-sinh (double exponential) rule on [a, b].
///
/// Handles integrable endpoint singularities such as square-root branch
/// points. Nodes are placed with distances to the endpoints computed
/// directly so they never collapse onto `a` or `b`. The step is halved until
/// successive estimates agree to `tol`.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Quadrature {
    let half = 0.5 * (b - a);
    if half <= 0.0 {
        return Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    let t_max = 4.0;
    let mut h = 0.5;
    let mut evals = 0;
    // Node contribution at t; uses the endpoint offset (1 − tanh) directly.
    let node = |t: f64, evals: &mut usize| -> f64 {
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let c = std::f64::consts::FRAC_PI_2 * t.cosh();
        let e = (-2.0 * s.abs()).exp();
        let off = 2.0 * e / (1.0 + e); // 1 − |tanh s|
        let w = c * 4.0 * e / ((1.0 + e) * (1.0 + e)); // c·sech² s
        if off * half == 0.0 || w == 0.0 {
            return 0.0;
        }
        let x = if s >= 0.0 { b - half * off } else { a + half * off };
        if x <= a || x >= b {
            return 0.0;
        }
        *evals += 1;
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut sum = node(0.0, &mut evals);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += node(t, &mut evals) + node(-t, &mut evals);
        k += 1;
    }
    let mut estimate = sum * h * half;
    let mut error = f64::INFINITY;
    for _ in 0..10 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += node(t, &mut evals) + node(-t, &mut evals);
            k += 2;
        }
        let next = sum * h * half;
        error = (next - estimate).abs();
        estimate = next;
        if error <= tol {
            break;
        }
    }
    Quadrature {
        value: estimate,
        error,
        evaluations: evals,
    }
}

/// Mean of a 2π-periodic function by the n-point trapezoid rule.
pub fn periodic_mean(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = std::f64::consts::TAU / n as f64;
    (0..n).map(|i| f(i as f64 * h)).sum::<f64>() / n as f64
}

/// Composite Simpson weights for `intervals` equal intervals on [a, b].
pub fn simpson_weights(a: f64, b: f64, intervals: usize) -> Result<Vec<f64>> {
    if intervals == 0 || intervals % 2 != 0 {
        return Err(Error::Config(format!(
            "Simpson rule needs an even, positive number of intervals (got {intervals})"
        )));
    }
    let h = (b - a) / intervals as f64;
    Ok((0..=intervals)
        .map(|i| {
            let c = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect())
}
