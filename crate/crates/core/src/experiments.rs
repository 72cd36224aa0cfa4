//! Estimation pipelines: the average exponent Λ(ε) over a product-Simpson
//! grid in SO(3), its dispersion statistics and 1/M extrapolation, and the
//! δ-diffused random exponent R(ε, δ).
//!
//! A rotation g in the grid has axis (cos β, 0, sin β) and angle θ. The
//! longitude of the axis does not matter because f_ε commutes with
//! rotations about e_z, and reflecting β ↦ −β is conjugation by a
//! reflection, so (θ, β) ∈ [0, 2π] × [0, π/2] with density
//! w(θ, β) = cos β (1 − cos θ)/(2π) covers Haar measure.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::exponents::{orbit_exponent, Estimator, ExponentEstimate};
use crate::geometry::{sample_ball, sample_haar, sample_tangent_state, Rotation, TangentState};
use crate::quadrature::simpson_weights;
use crate::rng::Seed;
use crate::stats::{fit_line, mean, pairwise_sum, sample_std, KahanSum, LineFit};
use crate::twistmap::TwistFamily;
use crate::vec3::Vec3;

/// Iterates discarded before an orbit's exponent is accumulated.
pub const DEFAULT_TRANSIENT: u64 = 512;

/// Haar density of the (θ, β) parametrization.
pub fn haar_density(theta: f64, beta: f64) -> f64 {
    beta.cos() * (1.0 - theta.cos()) / TAU
}

/// The rotation by θ about (cos β, 0, sin β).
pub fn grid_rotation(theta: f64, beta: f64) -> Rotation {
    Rotation::from_axis_angle(Vec3::new(beta.cos(), 0.0, beta.sin()), theta)
}

/// Product-Simpson grid with `n_g` intervals per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    n_g: usize,
}

/// One node of a [`GridSpec`] with non-zero weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    pub i_theta: usize,
    pub j_beta: usize,
    pub theta: f64,
    pub beta: f64,
    /// Simpson weight times the Haar density.
    pub weight: f64,
}

impl GridSpec {
    pub fn new(n_g: usize) -> Result<GridSpec> {
        if n_g < 2 || n_g % 2 != 0 {
            return Err(Error::Config(format!(
                "grid needs a positive even number of intervals, got {n_g}"
            )));
        }
        Ok(GridSpec { n_g })
    }

    pub fn intervals(&self) -> usize {
        self.n_g
    }

    /// Every node with non-zero weight; θ = 0, 2π and β = π/2 drop out.
    pub fn nodes(&self) -> Vec<GridNode> {
        let n = self.n_g;
        let wt = simpson_weights(0.0, TAU, n).expect("validated grid");
        let wb = simpson_weights(0.0, FRAC_PI_2, n).expect("validated grid");
        let mut out = Vec::new();
        for j in 0..=n {
            let beta = if j == n { FRAC_PI_2 } else { FRAC_PI_2 * j as f64 / n as f64 };
            for i in 0..=n {
                let theta = if i == n { TAU } else { TAU * i as f64 / n as f64 };
                let weight = wt[i] * wb[j] * haar_density(theta, beta);
                if i == 0 || i == n || j == n || weight == 0.0 {
                    continue;
                }
                out.push(GridNode {
                    i_theta: i,
                    j_beta: j,
                    theta,
                    beta,
                    weight,
                });
            }
        }
        out
    }

    /// Grid with half the intervals, whose nodes are every other node here.
    pub fn coarsened(&self) -> Result<GridSpec> {
        GridSpec::new(self.n_g / 2)
    }

    /// Σ weights; approximates ∫∫ w = 1.
    pub fn weight_sum(&self) -> f64 {
        pairwise_sum(&self.nodes().iter().map(|n| n.weight).collect::<Vec<_>>())
    }
}

/// Per-orbit sampling for one rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSpec {
    /// Random starts N_p.
    pub n_p: usize,
    /// Iterates M after the transient.
    pub m: u64,
    pub transient: u64,
    pub estimator: Estimator,
}

impl OrbitSpec {
    pub fn new(n_p: usize, m: u64) -> OrbitSpec {
        OrbitSpec {
            n_p,
            m,
            transient: DEFAULT_TRANSIENT,
            estimator: Estimator::MegnoImproved,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_p == 0 || self.m < 4 {
            return Err(Error::Config(format!(
                "need N_p ≥ 1 and M ≥ 4, got N_p = {}, M = {}",
                self.n_p, self.m
            )));
        }
        Ok(())
    }

    /// Iterate counts M/4, M/2, M.
    pub fn checkpoints(&self) -> [u64; 3] {
        [self.m / 4, self.m / 2, self.m]
    }
}

/// Start states shared by every rotation: start k comes from stream k.
pub fn orbit_starts(n_p: usize, seed: Seed) -> Vec<TangentState> {
    (0..n_p as u64)
        .map(|k| sample_tangent_state(&mut seed.rng(k)))
        .collect()
}

/// Exponents of g∘f_ε over a set of orbits.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationExponent {
    /// Mean over starts at M.
    pub lambda: f64,
    /// Sample standard deviation over starts at M (0 for one start).
    pub sigma: f64,
    /// Means over starts at M/4, M/2, M.
    pub snapshots: [f64; 3],
    /// Per-orbit exponents at M.
    pub per_orbit: Vec<f64>,
}

fn rotation_exponent(
    g: &Rotation,
    f: &TwistFamily,
    starts: &[TangentState],
    spec: &OrbitSpec,
) -> Result<RotationExponent> {
    let cps = spec.checkpoints();
    let mut sums = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
    let mut per_orbit = Vec::with_capacity(starts.len());
    for s in starts {
        let v = orbit_exponent(g, f, s, spec.transient, &cps, spec.estimator)?;
        for (acc, x) in sums.iter_mut().zip(&v) {
            acc.add(*x);
        }
        per_orbit.push(v[2]);
    }
    let n = starts.len() as f64;
    let snapshots = [sums[0].value() / n, sums[1].value() / n, sums[2].value() / n];
    Ok(RotationExponent {
        lambda: snapshots[2],
        sigma: if per_orbit.len() > 1 { sample_std(&per_orbit) } else { 0.0 },
        snapshots,
        per_orbit,
    })
}

/// λ(g∘f_ε) averaged over `spec.n_p` random starts drawn from `seed`.
pub fn lambda_for_rotation(
    g: &Rotation,
    eps: f64,
    spec: &OrbitSpec,
    seed: Seed,
) -> Result<RotationExponent> {
    spec.validate()?;
    let f = TwistFamily::new(eps)?;
    rotation_exponent(g, &f, &orbit_starts(spec.n_p, seed), spec)
}

/// Least-squares fit of estimate = a + b/M.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub a: f64,
    pub b: f64,
    /// ‖residual‖₂ / |a|.
    pub relative_residual: f64,
}

pub fn extrapolate_in_m(ms: &[u64], values: &[f64]) -> Result<Extrapolation> {
    if ms.len() != values.len() || ms.len() < 2 {
        return Err(Error::Numeric("extrapolation needs at least two points".into()));
    }
    let xs: Vec<f64> = ms.iter().map(|&m| 1.0 / m as f64).collect();
    let LineFit {
        intercept,
        slope,
        residual_norm,
    } = fit_line(&xs, values);
    let relative_residual = if intercept != 0.0 {
        residual_norm / intercept.abs()
    } else if residual_norm == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(Extrapolation {
        a: intercept,
        b: slope,
        relative_residual,
    })
}

/// One grid cell of a Λ scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanCell {
    pub node: GridNode,
    pub lambda: f64,
    pub sigma: f64,
    pub snapshots: [f64; 3],
    /// Per-orbit exponents at M, in start order.
    pub per_orbit: Vec<f64>,
}

impl ScanCell {
    /// h(θ, β, ε) = λ cos β (1 − cos θ) π/2.
    pub fn h(&self) -> f64 {
        self.lambda * self.node.beta.cos() * (1.0 - self.node.theta.cos()) * FRAC_PI_2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaScanResult {
    pub eps: f64,
    pub grid: GridSpec,
    pub orbits: OrbitSpec,
    pub cells: Vec<ScanCell>,
    /// Weighted Simpson sum of the per-cell λ at M.
    pub lambda_num: f64,
    /// Λ at M/4, M/2, M.
    pub snapshots: [f64; 3],
    pub extrapolation: Extrapolation,
    pub sigma_s2: f64,
    pub sigma_total: f64,
}

impl LambdaScanResult {
    /// Standard error of Λ_num.
    ///
    /// Every cell reuses the same starts, so cell errors are correlated.
    /// The grid sum is formed per start and its spread over starts gives
    /// the error.
    pub fn std_error(&self) -> f64 {
        let weights: Vec<(f64, &ScanCell)> = self.cells.iter().map(|c| (c.node.weight, c)).collect();
        startwise_std_error(&weights)
    }

    /// Λ_num and its standard error recomputed on the half-resolution grid,
    /// reusing the cells that grid shares with this one.
    pub fn coarse_lambda(&self) -> Result<(f64, f64)> {
        let coarse = self.grid.coarsened()?;
        let mut sum = KahanSum::new();
        let mut weights = Vec::new();
        for node in coarse.nodes() {
            let cell = self
                .cells
                .iter()
                .find(|c| c.node.i_theta == 2 * node.i_theta && c.node.j_beta == 2 * node.j_beta)
                .ok_or_else(|| Error::Numeric("coarse node missing from scan".into()))?;
            sum.add(node.weight * cell.lambda);
            weights.push((node.weight, cell));
        }
        Ok((sum.value(), startwise_std_error(&weights)))
    }

    /// Mean |h(θ, β) − h(2π − θ, β)| over mirrored cell pairs, and the mean
    /// standard error of those differences.
    pub fn theta_asymmetry(&self) -> (f64, f64) {
        let n = self.orbits.n_p as f64;
        let ng = self.grid.intervals();
        let scale = |c: &ScanCell| c.node.beta.cos() * (1.0 - c.node.theta.cos()) * FRAC_PI_2;
        let (mut diff, mut se, mut count) = (0.0, 0.0, 0usize);
        for c in &self.cells {
            if 2 * c.node.i_theta >= ng {
                continue;
            }
            let mirror = self
                .cells
                .iter()
                .find(|d| d.node.i_theta == ng - c.node.i_theta && d.node.j_beta == c.node.j_beta);
            if let Some(d) = mirror {
                diff += (c.h() - d.h()).abs();
                se += ((scale(c) * c.sigma).powi(2) / n + (scale(d) * d.sigma).powi(2) / n).sqrt();
                count += 1;
            }
        }
        if count == 0 {
            return (0.0, 0.0);
        }
        (diff / count as f64, se / count as f64)
    }

    /// Largest per-cell λ.
    pub fn max_lambda(&self) -> f64 {
        self.cells.iter().map(|c| c.lambda).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Spread over starts of Σ w·λ(start), divided by √N_p.
fn startwise_std_error(weights: &[(f64, &ScanCell)]) -> f64 {
    let n_p = weights.first().map_or(0, |(_, c)| c.per_orbit.len());
    if n_p < 2 {
        return 0.0;
    }
    let per_start: Vec<f64> = (0..n_p)
        .map(|k| pairwise_sum(&weights.iter().map(|(w, c)| w * c.per_orbit[k]).collect::<Vec<_>>()))
        .collect();
    sample_std(&per_start) / (n_p as f64).sqrt()
}

/// Λ(ε) by product Simpson over the grid, one orbit set per node.
///
/// The same starts are reused in every cell, which makes cell-to-cell
/// differences less noisy. Cells run in parallel and each is
/// deterministic, so the result does not depend on the thread count.
pub fn lambda_scan(
    eps: f64,
    grid: GridSpec,
    orbits: OrbitSpec,
    seed: Seed,
) -> Result<LambdaScanResult> {
    orbits.validate()?;
    let f = TwistFamily::new(eps)?;
    let starts = orbit_starts(orbits.n_p, seed);
    let cells: Vec<ScanCell> = grid
        .nodes()
        .into_par_iter()
        .map(|node| {
            let g = grid_rotation(node.theta, node.beta);
            let r = rotation_exponent(&g, &f, &starts, &orbits)?;
            Ok(ScanCell {
                node,
                lambda: r.lambda,
                sigma: r.sigma,
                snapshots: r.snapshots,
                per_orbit: r.per_orbit,
            })
        })
        .collect::<Result<_>>()?;
    let weighted = |k: usize| {
        pairwise_sum(
            &cells
                .iter()
                .map(|c| c.node.weight * c.snapshots[k])
                .collect::<Vec<_>>(),
        )
    };
    let snapshots = [weighted(0), weighted(1), weighted(2)];
    let extrapolation = extrapolate_in_m(&orbits.checkpoints(), &snapshots)?;
    let stats: Vec<CellStatistics> = cells
        .iter()
        .map(|c| CellStatistics {
            weight: c.node.weight,
            lambda: c.lambda,
            sigma: c.sigma,
        })
        .collect();
    let (sigma_s2, sigma_total) = pooled_sigma(&stats, orbits.n_p);
    Ok(LambdaScanResult {
        eps,
        grid,
        orbits,
        lambda_num: snapshots[2],
        snapshots,
        extrapolation,
        sigma_s2,
        sigma_total,
        cells,
    })
}

/// Weight, mean and spread of one rotation's per-orbit exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStatistics {
    pub weight: f64,
    pub lambda: f64,
    pub sigma: f64,
}

/// (σ_S², σ_total) from per-rotation statistics with `n_p` orbits each.
///
/// σ_S² is the weighted mean of σ_g. σ_total is the standard deviation of
/// all per-orbit exponents pooled with the grid weights:
/// σ_total² = Σ w_g [(n − 1)σ_g² + n(λ_g − Λ)²]/(n − 1) over Σ w_g.
pub fn pooled_sigma(cells: &[CellStatistics], n_p: usize) -> (f64, f64) {
    let wsum: f64 = cells.iter().map(|c| c.weight).sum();
    if cells.is_empty() || wsum == 0.0 {
        return (0.0, 0.0);
    }
    let big_lambda = cells.iter().map(|c| c.weight * c.lambda).sum::<f64>() / wsum;
    let sigma_s2 = cells.iter().map(|c| c.weight * c.sigma).sum::<f64>() / wsum;
    let n = n_p as f64;
    let var = if n_p > 1 {
        cells
            .iter()
            .map(|c| {
                c.weight * ((n - 1.0) * c.sigma * c.sigma + n * (c.lambda - big_lambda).powi(2))
                    / (n - 1.0)
            })
            .sum::<f64>()
            / wsum
    } else {
        cells
            .iter()
            .map(|c| c.weight * (c.lambda - big_lambda).powi(2))
            .sum::<f64>()
            / wsum
    };
    (sigma_s2, var.sqrt())
}

pub fn sigma_statistics(scan: &LambdaScanResult) -> (f64, f64) {
    (scan.sigma_s2, scan.sigma_total)
}

/// Sample sizes for the δ-diffused exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusedSpec {
    pub eps: f64,
    pub delta: f64,
    /// Steps per run.
    pub n: u64,
    /// Outer Haar rotations.
    pub m_r: usize,
    /// Starts per rotation.
    pub m_p: usize,
}

impl DiffusedSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= TAU) {
            return Err(domain("delta", self.delta, "(0, 2π]"));
        }
        TwistFamily::new(self.eps)?;
        if self.n == 0 || self.m_r == 0 || self.m_p == 0 {
            return Err(Error::Config("diffused sample sizes must be positive".into()));
        }
        Ok(())
    }
}

/// One run of `n` steps s ↦ u·g·f_ε(s) with fresh u in the δ-ball.
fn diffused_run(
    pi_eps: f64,
    g: &Rotation,
    delta: f64,
    n: u64,
    rng: &mut crate::rng::StreamRng,
) -> Result<f64> {
    let s = sample_tangent_state(rng);
    let (mut p, mut v) = (s.base().vec(), s.dir());
    let mut sum = KahanSum::new();
    for _ in 0..n {
        let (q, w, l) = crate::twistmap::twist_tangent(pi_eps, p, v);
        sum.add(l);
        let h = sample_ball(rng, delta)?.compose(g);
        let q = h.apply(q);
        let q = q * (1.0 / q.norm());
        let w = h.apply(w);
        let w = w - q * q.dot(w);
        v = w * (1.0 / w.norm());
        p = q;
    }
    Ok(sum.value() / n as f64)
}

/// R(ε, δ) by Monte Carlo over `m_r` Haar rotations g and `m_p` runs of
/// the process h = u·g·f_ε each.
///
/// Rotation i is drawn from stream 0 of `seed.child(i)` and its run j uses
/// stream j + 1. The standard error is taken from the spread of the
/// per-rotation means (or of the runs when there is a single rotation).
pub fn diffused_exponent(spec: &DiffusedSpec, seed: Seed) -> Result<ExponentEstimate> {
    spec.validate()?;
    let pi_eps = PI * spec.eps;
    let per_rotation: Vec<Vec<f64>> = (0..spec.m_r)
        .into_par_iter()
        .map(|i| {
            let child = seed.child(i as u64);
            let g = sample_haar(&mut child.rng(0)).rotation;
            (0..spec.m_p)
                .map(|j| diffused_run(pi_eps, &g, spec.delta, spec.n, &mut child.rng(j as u64 + 1)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let means: Vec<f64> = per_rotation.iter().map(|r| mean(r)).collect();
    let value = mean(&means);
    let std_error = if spec.m_r > 1 {
        sample_std(&means) / (spec.m_r as f64).sqrt()
    } else if spec.m_p > 1 {
        sample_std(&per_rotation[0]) / (spec.m_p as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(ExponentEstimate {
        value,
        std_error,
        n_iterates: spec.n,
        n_samples: (spec.m_r * spec.m_p) as u64,
        estimator: Estimator::MonteCarlo,
    })
}

/// Fit of log Λ = a − c/ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessFit {
    pub a: f64,
    pub c: f64,
    /// ‖residual‖₂ of the fit in log Λ.
    pub residual_norm: f64,
}

/// Fits log Λ(ε) against 1/ε over the points with Λ > 0.
pub fn fit_exponential_smallness(eps: &[f64], lambda: &[f64]) -> Result<SmallnessFit> {
    if eps.len() != lambda.len() {
        return Err(Error::Config("eps and lambda lengths differ".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps
        .iter()
        .zip(lambda)
        .filter(|(e, l)| **e > 0.0 && **l > 0.0)
        .map(|(e, l)| (1.0 / e, l.ln()))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Numeric("need two points with Λ > 0 to fit".into()));
    }
    let fit = fit_line(&xs, &ys);
    Ok(SmallnessFit {
        a: fit.intercept,
        c: -fit.slope,
        residual_norm: fit.residual_norm,
    })
}
