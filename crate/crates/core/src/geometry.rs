//! Sphere and rotation primitives, and exact Haar sampling on SO(3).
//!
//! A Haar-random rotation is drawn in polar coordinates: a uniform axis on
//! S² and an angle θ ∈ [0, 2π] with density (1 − cos θ)/(2π). The angle is
//! obtained from a uniform z ∈ [0, 2π] by inverting z = θ − sin θ (Kepler's
//! equation at eccentricity 1). The same inversion restricted to
//! [0, δ − sin δ] samples the Haar measure on the ball of rotations with
//! angle at most δ.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{domain, Result};
use crate::vec3::Vec3;

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quaternion {
        let n = self.norm();
        Quaternion {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self · o`.
    pub fn mul(&self, o: &Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

/// An element of SO(3).
///
/// Stored as a unit quaternion together with its row-major matrix, so that
/// composition is done on the quaternion and application on the matrix.
/// `q` and `−q` are the same rotation; the representative chosen at
/// construction is kept, which makes [`Rotation::angle`] return the angle the
/// rotation was built with (in `[0, 2π]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    q: Quaternion,
    m: [[f64; 3]; 3],
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        q: Quaternion::IDENTITY,
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Right-handed rotation by `angle` about `axis` (normalized here).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Rotation {
        let a = axis.normalized();
        let (s, c) = (0.5 * angle).sin_cos();
        Rotation::from_unit_quaternion(Quaternion {
            w: c,
            x: s * a.x,
            y: s * a.y,
            z: s * a.z,
        })
    }

    /// Rotation from any non-zero quaternion (renormalized).
    pub fn from_quaternion(q: Quaternion) -> Rotation {
        Rotation::from_unit_quaternion(q.normalized())
    }

    fn from_unit_quaternion(q: Quaternion) -> Rotation {
        let Quaternion { w, x, y, z } = q;
        let m = [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ];
        Rotation { q, m }
    }

    /// Rotation about the z-axis; used in hot loops, built directly.
    #[inline]
    pub fn about_z(angle: f64) -> Rotation {
        Rotation::from_axis_angle(Vec3::Z, angle)
    }

    pub fn quaternion(&self) -> Quaternion {
        self.q
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    /// Rotation angle in `[0, 2π]` for the stored quaternion representative.
    pub fn angle(&self) -> f64 {
        let v = (self.q.x * self.q.x + self.q.y * self.q.y + self.q.z * self.q.z).sqrt();
        2.0 * v.atan2(self.q.w)
    }

    /// Unit axis; `+z` for the identity.
    pub fn axis(&self) -> Vec3 {
        let v = Vec3::new(self.q.x, self.q.y, self.q.z);
        let n = v.norm();
        if n == 0.0 {
            Vec3::Z
        } else {
            v * (1.0 / n)
        }
    }

    /// Geodesic distance to the identity, i.e. the angle in `[0, π]`.
    pub fn distance_from_identity(&self) -> f64 {
        let a = self.angle();
        a.min(TAU - a)
    }

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    /// Transpose action (the inverse rotation) without building it.
    #[inline]
    pub fn apply_inverse(&self, p: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * p.x + m[1][0] * p.y + m[2][0] * p.z,
            m[0][1] * p.x + m[1][1] * p.y + m[2][1] * p.z,
            m[0][2] * p.x + m[1][2] * p.y + m[2][2] * p.z,
        )
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation::from_quaternion(self.q.mul(&other.q))
    }

    pub fn inverse(&self) -> Rotation {
        Rotation::from_unit_quaternion(self.q.conjugate())
    }

    /// Operator-norm distance between the matrices of two rotations.
    pub fn matrix_distance(&self, other: &Rotation) -> f64 {
        // Largest singular value of the 3×3 difference, via power iteration on DᵀD.
        let mut d = [[0.0; 3]; 3];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][j] - other.m[i][j];
            }
        }
        frobenius_bounded_spectral_norm(&d)
    }
}

fn frobenius_bounded_spectral_norm(d: &[[f64; 3]; 3]) -> f64 {
    let mut dtd = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            dtd[i][j] = (0..3).map(|k| d[k][i] * d[k][j]).sum();
        }
    }
    let mut v = [1.0, 0.7, 0.3];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..3).map(|i| (0..3).map(|j| dtd[i][j] * v[j]).sum()).collect();
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return 0.0;
        }
        lambda = n;
        for i in 0..3 {
            v[i] = w[i] / n;
        }
    }
    lambda.sqrt()
}

/// A point of the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vec3);

impl SpherePoint {
    pub const NORTH: SpherePoint = SpherePoint(Vec3::Z);
    pub const SOUTH: SpherePoint = SpherePoint(Vec3::new(0.0, 0.0, -1.0));

    /// Projects any non-zero vector to the sphere.
    pub fn new(v: Vec3) -> SpherePoint {
        SpherePoint(v.normalized())
    }

    pub fn from_lon_lat(longitude: f64, latitude: f64) -> SpherePoint {
        let (sb, cb) = latitude.sin_cos();
        let (sl, cl) = longitude.sin_cos();
        SpherePoint(Vec3::new(cb * cl, cb * sl, sb))
    }

    /// From the raw uniforms used by the sampler: longitude and height z.
    pub fn from_lon_height(longitude: f64, z: f64) -> SpherePoint {
        let r = (1.0 - z * z).max(0.0).sqrt();
        let (sl, cl) = longitude.sin_cos();
        SpherePoint(Vec3::new(r * cl, r * sl, z))
    }

    #[inline]
    pub fn vec(&self) -> Vec3 {
        self.0
    }

    /// Longitude in `[0, 2π)`; 0 at the poles.
    pub fn longitude(&self) -> f64 {
        let l = self.0.y.atan2(self.0.x);
        if l < 0.0 {
            l + TAU
        } else {
            l
        }
    }

    /// Latitude in `[−π/2, π/2]`.
    pub fn latitude(&self) -> f64 {
        self.0.z.clamp(-1.0, 1.0).asin()
    }

    /// Unit eastward vector (tangent to the latitude circle, positive sense).
    pub fn east(&self) -> Vec3 {
        let r = (self.0.x * self.0.x + self.0.y * self.0.y).sqrt();
        if r < 1e-300 {
            Vec3::Y
        } else {
            Vec3::new(-self.0.y / r, self.0.x / r, 0.0)
        }
    }

    /// Unit northward vector along the meridian.
    pub fn north(&self) -> Vec3 {
        self.0.cross(self.east())
    }

    pub fn rotated(&self, g: &Rotation) -> SpherePoint {
        SpherePoint(g.apply(self.0))
    }
}

/// A point of the unit tangent bundle: base point plus unit tangent vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentState {
    base: SpherePoint,
    dir: Vec3,
}

impl TangentState {
    /// Projects `dir` onto the tangent plane at `base` and normalizes it.
    pub fn new(base: SpherePoint, dir: Vec3) -> TangentState {
        let p = base.vec();
        let t = dir - p * p.dot(dir);
        TangentState {
            base,
            dir: t.normalized(),
        }
    }

    /// Direction making angle `psi` with the eastward (horizontal) vector.
    pub fn from_angle(base: SpherePoint, psi: f64) -> TangentState {
        let (s, c) = psi.sin_cos();
        TangentState::new(base, base.east() * c + base.north() * s)
    }

    pub fn base(&self) -> SpherePoint {
        self.base
    }

    pub fn dir(&self) -> Vec3 {
        self.dir
    }

    /// Angle against the horizontal direction, in `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        let a = self.dir.dot(self.base.north()).atan2(self.dir.dot(self.base.east()));
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }

    /// Rotations are isometries: both base and direction are carried along.
    #[inline]
    pub fn rotated(&self, g: &Rotation) -> TangentState {
        TangentState::from_parts(SpherePoint(g.apply(self.base.0)), g.apply(self.dir))
    }

    /// Re-orthogonalizing constructor used after every transport step.
    #[inline]
    pub(crate) fn from_parts(base: SpherePoint, dir: Vec3) -> TangentState {
        let p = base.0 * (1.0 / base.0.norm());
        let t = dir - p * p.dot(dir);
        TangentState {
            base: SpherePoint(p),
            dir: t * (1.0 / t.norm()),
        }
    }
}

/// Uniform point on S²: longitude uniform on [0, 2π), height uniform on [−1, 1].
pub fn sample_sphere<R: Rng + ?Sized>(rng: &mut R) -> SpherePoint {
    let lon = TAU * rng.random::<f64>();
    let z = 2.0 * rng.random::<f64>() - 1.0;
    SpherePoint::from_lon_height(lon, z)
}

/// Uniform point of the unit tangent bundle (Liouville measure).
pub fn sample_tangent_state<R: Rng + ?Sized>(rng: &mut R) -> TangentState {
    let base = sample_sphere(rng);
    let psi = TAU * rng.random::<f64>();
    TangentState::from_angle(base, psi)
}

/// θ − sin θ without cancellation for small θ.
pub fn theta_minus_sin(theta: f64) -> f64 {
    if theta.abs() < 0.5 {
        let t2 = theta * theta;
        // θ³/3! − θ⁵/5! + … up to θ¹³; truncation below 1e−16 relative.
        let mut term = theta * t2 / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        for _ in 0..5 {
            term *= -t2 / ((k + 1.0) * (k + 2.0));
            sum += term;
            k += 2.0;
        }
        sum
    } else {
        theta - theta.sin()
    }
}

/// Inverts z = θ − sin θ on [0, 2π].
///
/// Halley iteration inside a shrinking bisection bracket, started from the
/// series inverse θ ≈ w + w³/60 + w⁵/1400 + w⁷/25200 with w = (6z)^{1/3}.
/// The upper half of the range is mapped to the lower half by
/// θ(2π − z) = 2π − θ(z), so the bracket is always [0, π].
pub fn solve_kepler(z: f64) -> Result<f64> {
    if !(0.0..=TAU).contains(&z) {
        return Err(domain("z", z, "[0, 2π]"));
    }
    if z > PI {
        // TAU - z is exact here (Sterbenz).
        return Ok(TAU - kepler_lower(TAU - z));
    }
    Ok(kepler_lower(z))
}

fn kepler_lower(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, PI);
    let w = (6.0 * z).cbrt();
    let w2 = w * w;
    let mut theta = (w * (1.0 + w2 * (1.0 / 60.0 + w2 * (1.0 / 1400.0 + w2 / 25200.0)))).min(PI);
    for _ in 0..60 {
        let (s, c) = theta.sin_cos();
        let r = if theta < 0.5 {
            theta_minus_sin(theta)
        } else {
            theta - s
        } - z;
        if r == 0.0 {
            return theta;
        }
        if r > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        // 1 − cos θ without cancellation for small θ.
        let d1 = if theta < 0.1 {
            let t2 = theta * theta;
            0.5 * t2 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0))
        } else {
            1.0 - c
        };
        let halley = theta - 2.0 * r * d1 / (2.0 * d1 * d1 - r * s);
        if (halley - theta).abs() <= 4.0 * f64::EPSILON * theta {
            return halley.clamp(lo, hi);
        }
        theta = if halley > lo && halley < hi {
            halley
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return theta;
        }
    }
    theta
}

/// A Haar-distributed rotation together with the uniforms that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarSample {
    pub rotation: Rotation,
    /// Rotation angle θ ∈ [0, 2π], solving `z_angle = θ − sin θ`.
    pub angle: f64,
    /// Raw height of the axis, uniform on [−1, 1].
    pub z_axis: f64,
    /// Raw longitude of the axis, uniform on [0, 2π).
    pub lambda_axis: f64,
    /// Raw Kepler variate, uniform on [0, 2π].
    pub z_angle: f64,
}

impl HaarSample {
    pub fn from_raw(z_axis: f64, lambda_axis: f64, z_angle: f64) -> Result<HaarSample> {
        if !(-1.0..=1.0).contains(&z_axis) {
            return Err(domain("z_axis", z_axis, "[-1, 1]"));
        }
        let angle = solve_kepler(z_angle)?;
        let axis = SpherePoint::from_lon_height(lambda_axis, z_axis).vec();
        Ok(HaarSample {
            rotation: Rotation::from_axis_angle(axis, angle),
            angle,
            z_axis,
            lambda_axis,
            z_angle,
        })
    }
}

/// Haar-random rotation in polar coordinates (axis, angle).
pub fn sample_haar<R: Rng + ?Sized>(rng: &mut R) -> HaarSample {
    let z_axis = 2.0 * rng.random::<f64>() - 1.0;
    let lambda_axis = TAU * rng.random::<f64>();
    let z_angle = TAU * rng.random::<f64>();
    HaarSample::from_raw(z_axis, lambda_axis, z_angle).expect("raw uniforms are in range")
}

/// Haar measure restricted to rotations of angle at most `delta`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, delta: f64) -> Result<Rotation> {
    if !(delta > 0.0 && delta <= TAU) {
        return Err(domain("delta", delta, "(0, 2π]"));
    }
    let axis = sample_sphere(rng).vec();
    let z = rng.random::<f64>() * theta_minus_sin(delta);
    let angle = solve_kepler(z)?.min(delta);
    Ok(Rotation::from_axis_angle(axis, angle))
}
