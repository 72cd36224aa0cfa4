//! The twist family f_ε and the maps g∘f_ε.
//!
//! On the unit sphere f_ε rotates the latitude circle at height z about the
//! z-axis by πε(1 + z). Its derivative is
//!
//! ```text
//! Df_p(v) = R_z(φ) (v + πε v_z (e_z × p)),   φ = πε(1 + z),
//! ```
//!
//! which in the orthonormal frame (e_λ, e_β) is the shear [[1, α], [0, 1]]
//! with α = πε cos²β = 4πε x(1 − x), x = (1 + z)/2 being the height
//! coordinate of the Archimedean chart (θ, x).

use std::f64::consts::{PI, TAU};

use crate::error::{domain, Result};
use crate::geometry::{Rotation, SpherePoint, TangentState};
use crate::vec3::Vec3;

/// Lowest and highest x used by deterministic chart evaluators.
pub const POLE_CLAMP: f64 = 1e-12;

/// f_ε with an optional twist axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistFamily {
    eps: f64,
    /// Carries the twist axis to the z-axis.
    axis: Rotation,
}

impl TwistFamily {
    pub fn new(eps: f64) -> Result<TwistFamily> {
        TwistFamily::with_axis(eps, Rotation::IDENTITY)
    }

    pub fn with_axis(eps: f64, axis: Rotation) -> Result<TwistFamily> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(domain("eps", eps, "[0, ∞)"));
        }
        Ok(TwistFamily { eps, axis })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn axis(&self) -> Rotation {
        self.axis
    }

    fn has_default_axis(&self) -> bool {
        self.axis == Rotation::IDENTITY
    }

    /// Longitude advance at axis-frame height z.
    #[inline]
    pub fn advance(&self, z: f64) -> f64 {
        PI * self.eps * (1.0 + z)
    }

    pub fn apply(&self, p: SpherePoint) -> SpherePoint {
        if self.has_default_axis() {
            return SpherePoint::new(twist_point(PI * self.eps, p.vec()));
        }
        let q = self.axis.apply(p.vec());
        SpherePoint::new(self.axis.apply_inverse(twist_point(PI * self.eps, q)))
    }

    /// Image state and log‖Df(v)‖ for a unit tangent vector v.
    ///
    /// The poles need no special case: there v_z = 0 and e_z × p = 0, so the
    /// derivative reduces to the rotation R_z(2πε) or the identity.
    pub fn tangent_apply(&self, s: &TangentState) -> (TangentState, f64) {
        let (p, v, l) = if self.has_default_axis() {
            twist_tangent(PI * self.eps, s.base().vec(), s.dir())
        } else {
            let (p, v, l) = twist_tangent(
                PI * self.eps,
                self.axis.apply(s.base().vec()),
                self.axis.apply(s.dir()),
            );
            (self.axis.apply_inverse(p), self.axis.apply_inverse(v), l)
        };
        (TangentState::from_parts(SpherePoint::new(p), v), l)
    }

    /// Same as [`TwistFamily::tangent_apply`], computed through the shear
    /// matrix in the (e_λ, e_β) frame of the chart.
    pub fn tangent_apply_chart(&self, s: &TangentState) -> (TangentState, f64) {
        let p = SpherePoint::new(self.axis.apply(s.base().vec()));
        let v = self.axis.apply(s.dir());
        let (e_l, e_b) = (p.east(), p.north());
        let u = [v.dot(e_l), v.dot(e_b)];
        let x = ((1.0 + p.vec().z) / 2.0).clamp(0.0, 1.0);
        let w = ShearMatrix::new(self.eps, x).apply(u);
        let q = self.apply_axis_frame(p);
        let dir = q.east() * w[0] + q.north() * w[1];
        let stretch = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let base = SpherePoint::new(self.axis.apply_inverse(q.vec()));
        (
            TangentState::new(base, self.axis.apply_inverse(dir)),
            stretch.ln(),
        )
    }

    fn apply_axis_frame(&self, p: SpherePoint) -> SpherePoint {
        SpherePoint::new(twist_point(PI * self.eps, p.vec()))
    }

    /// Chart form: (θ, x) ↦ (θ + 2πεx, x).
    pub fn apply_cylinder(&self, c: CylinderPoint) -> CylinderPoint {
        CylinderPoint {
            theta: (c.theta + TAU * self.eps * c.x).rem_euclid(TAU),
            x: c.x,
        }
    }
}

/// Rotation of p about z by πε(1 + p_z); `pi_eps` is πε.
#[inline]
pub(crate) fn twist_point(pi_eps: f64, p: Vec3) -> Vec3 {
    let (s, c) = (pi_eps * (1.0 + p.z)).sin_cos();
    Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
}

/// Image base point, unnormalized image of v under f_ε, and log(‖Df v‖/‖v‖).
#[inline]
pub(crate) fn twist_tangent(pi_eps: f64, p: Vec3, v: Vec3) -> (Vec3, Vec3, f64) {
    let (s, c) = (pi_eps * (1.0 + p.z)).sin_cos();
    let k = pi_eps * v.z;
    // v + k t with t = e_z × p = (−p_y, p_x, 0); the stretch is taken from
    // ‖v + k t‖² − ‖v‖² = k (2 v·t + k ‖t‖²) so that it is exactly 0 when k = 0.
    let (tx, ty) = (-p.y, p.x);
    let excess = k * (2.0 * (v.x * tx + v.y * ty) + k * (tx * tx + ty * ty));
    let log_stretch = 0.5 * (excess / v.dot(v)).ln_1p();
    let wx = v.x + k * tx;
    let wy = v.y + k * ty;
    (
        Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z),
        Vec3::new(c * wx - s * wy, s * wx + c * wy, v.z),
        log_stretch,
    )
}

/// `(g ∘ f_ε)` acting on a tangent state. The log-stretch is that of f_ε
/// since g is an isometry.
pub fn compose_and_apply(g: &Rotation, f: &TwistFamily, s: &TangentState) -> (TangentState, f64) {
    let (t, l) = f.tangent_apply(s);
    (t.rotated(g), l)
}

/// Point of the Archimedean chart: angle θ and height x = (1 + z)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPoint {
    pub theta: f64,
    pub x: f64,
}

impl CylinderPoint {
    pub fn new(theta: f64, x: f64) -> Result<CylinderPoint> {
        if !(0.0..=1.0).contains(&x) {
            return Err(domain("x", x, "[0, 1]"));
        }
        Ok(CylinderPoint {
            theta: theta.rem_euclid(TAU),
            x,
        })
    }

    /// Area-preserving projection to the cylinder (Archimedes).
    pub fn from_sphere(p: SpherePoint) -> CylinderPoint {
        CylinderPoint {
            theta: p.longitude(),
            x: ((1.0 + p.vec().z) / 2.0).clamp(0.0, 1.0),
        }
    }

    /// Ψ(θ, x) = (2g cos θ, 2g sin θ, 2x − 1), g = √(x(1 − x)).
    pub fn to_sphere(&self) -> SpherePoint {
        let g = (self.x * (1.0 - self.x)).max(0.0).sqrt();
        let (s, c) = self.theta.sin_cos();
        SpherePoint::new(Vec3::new(2.0 * g * c, 2.0 * g * s, 2.0 * self.x - 1.0))
    }
}

/// The chart derivative [[1, α], [0, 1]] of f_ε at height x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearMatrix {
    pub alpha: f64,
}

impl ShearMatrix {
    fn new(eps: f64, x: f64) -> ShearMatrix {
        ShearMatrix {
            alpha: 4.0 * PI * eps * x * (1.0 - x),
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[1.0, self.alpha], [0.0, 1.0]]
    }

    pub fn determinant(&self) -> f64 {
        let m = self.matrix();
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, u: [f64; 2]) -> [f64; 2] {
        [u[0] + self.alpha * u[1], u[1]]
    }

    /// log of the Euclidean stretch of `u`.
    pub fn log_stretch(&self, u: [f64; 2]) -> f64 {
        let w = self.apply(u);
        0.5 * (w[0] * w[0] + w[1] * w[1]).ln() - 0.5 * (u[0] * u[0] + u[1] * u[1]).ln()
    }
}

pub fn shear_at(eps: f64, x: f64) -> Result<ShearMatrix> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("x", x, "[0, 1]"));
    }
    Ok(ShearMatrix::new(eps, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_haar, sample_tangent_state};
    use crate::rng::Seed;

    #[test]
    fn poles_are_fixed() {
        for &eps in &[0.0, 0.3, 2.0, 17.5] {
            let f = TwistFamily::new(eps).unwrap();
            assert!((f.apply(SpherePoint::NORTH).vec() - Vec3::Z).norm() < 1e-15);
            assert!((f.apply(SpherePoint::SOUTH).vec() + Vec3::Z).norm() < 1e-15);
        }
    }

    #[test]
    fn longitude_advance() {
        let f = TwistFamily::new(1.0).unwrap();
        let p = SpherePoint::from_lon_lat(0.2, 0.0);
        let q = f.apply(p);
        assert!((q.longitude() - (0.2 + PI)).abs() < 1e-12);
        assert!(q.latitude().abs() < 1e-15);

        let f = TwistFamily::new(0.5).unwrap();
        let p = SpherePoint::from_lon_height(0.0, 0.2);
        let q = f.apply(p);
        assert!((q.longitude() - 1.884_955_592_153_876).abs() < 1e-12);
        let c = f.apply_cylinder(CylinderPoint::from_sphere(p));
        assert!((c.theta - q.longitude()).abs() < 1e-12);
    }

    #[test]
    fn latitude_is_invariant() {
        let mut rng = Seed::new(1).rng(0);
        let axis = sample_haar(&mut rng).rotation;
        let f = TwistFamily::with_axis(3.7, axis).unwrap();
        for _ in 0..1000 {
            let s = sample_tangent_state(&mut rng);
            let z0 = axis.apply(s.base().vec()).z;
            let z1 = axis.apply(f.apply(s.base()).vec()).z;
            assert!((z0 - z1).abs() < 1e-12);
        }
    }

    #[test]
    fn horizontal_vectors_are_not_stretched() {
        let f = TwistFamily::new(2.3).unwrap();
        let s = TangentState::from_angle(SpherePoint::from_lon_lat(0.7, 0.0), 0.0);
        let (t, l) = f.tangent_apply(&s);
        assert!(l.abs() < 1e-15);
        assert!(t.angle().min(TAU - t.angle()) < 1e-12);
    }

    #[test]
    fn vertical_vector_at_equator() {
        let f = TwistFamily::new(1.0).unwrap();
        let s = TangentState::from_angle(SpherePoint::from_lon_lat(0.0, 0.0), PI / 2.0);
        let (_, l) = f.tangent_apply(&s);
        assert!((l - 1.192_985_153_413_41).abs() < 1e-12);
        let sh = shear_at(1.0, 0.5).unwrap();
        assert!((sh.log_stretch([0.0, 1.0]) - l).abs() < 1e-12);
    }

    #[test]
    fn zero_eps_is_identity() {
        let f = TwistFamily::new(0.0).unwrap();
        let mut rng = Seed::new(2).rng(0);
        for _ in 0..100 {
            let s = sample_tangent_state(&mut rng);
            let (t, l) = f.tangent_apply(&s);
            assert_eq!(l, 0.0);
            assert!((t.base().vec() - s.base().vec()).norm() < 1e-15);
        }
    }

    #[test]
    fn shear_values() {
        assert_eq!(shear_at(3.0, 0.0).unwrap().alpha, 0.0);
        assert!((shear_at(2.0, 0.5).unwrap().alpha - TAU).abs() < 1e-15);
        assert!(shear_at(1.0, 1.5).is_err());
        assert!(shear_at(1.0, -0.1).is_err());
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let a = shear_at(1.3, x).unwrap();
            let b = shear_at(1.3, 1.0 - x).unwrap();
            assert!((a.alpha - b.alpha).abs() < 1e-12);
            assert_eq!(a.determinant(), 1.0);
        }
    }

    #[test]
    fn composition_does_not_change_stretch() {
        let mut rng = Seed::new(3).rng(0);
        let f = TwistFamily::new(1.7).unwrap();
        for _ in 0..1000 {
            let s = sample_tangent_state(&mut rng);
            let g = sample_haar(&mut rng).rotation;
            let (t0, l0) = f.tangent_apply(&s);
            let (t1, l1) = compose_and_apply(&g, &f, &s);
            assert!((l0 - l1).abs() < 1e-12);
            assert!((g.apply(t0.base().vec()) - t1.base().vec()).norm() < 1e-12);
        }
        let s = sample_tangent_state(&mut rng);
        let (a, la) = compose_and_apply(&Rotation::IDENTITY, &f, &s);
        let (b, lb) = f.tangent_apply(&s);
        assert_eq!(la, lb);
        assert!((a.dir() - b.dir()).norm() < 1e-15);
    }

    #[test]
    fn chart_and_ambient_agree() {
        let mut rng = Seed::new(4).rng(0);
        let axis = sample_haar(&mut rng).rotation;
        for f in [
            TwistFamily::new(0.8).unwrap(),
            TwistFamily::with_axis(5.5, axis).unwrap(),
        ] {
            for _ in 0..1000 {
                let s = sample_tangent_state(&mut rng);
                let (a, la) = f.tangent_apply(&s);
                let (b, lb) = f.tangent_apply_chart(&s);
                assert!((la - lb).abs() < 1e-9);
                assert!((a.dir() - b.dir()).norm() < 1e-9);
                assert!(a.dir().dot(a.base().vec()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cylinder_round_trip() {
        let mut rng = Seed::new(5).rng(0);
        for _ in 0..1000 {
            let p = crate::geometry::sample_sphere(&mut rng);
            let c = CylinderPoint::from_sphere(p);
            if c.x < 1e-8 || c.x > 1.0 - 1e-8 {
                continue;
            }
            assert!((c.to_sphere().vec() - p.vec()).norm() < 1e-10);
        }
        assert!(CylinderPoint::new(0.0, 1.2).is_err());
    }

    #[test]
    fn small_triangle_areas_are_preserved() {
        fn area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
            // Spherical excess (Van Oosterom–Strackee).
            let num = a.dot(b.cross(c)).abs();
            let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
            2.0 * num.atan2(den)
        }
        let mut rng = Seed::new(6).rng(0);
        let f = TwistFamily::new(2.2).unwrap();
        for _ in 0..10_000 {
            let s = sample_tangent_state(&mut rng);
            let p = s.base();
            let h = 1e-4;
            let b = SpherePoint::new(p.vec() + p.east() * h);
            let c = SpherePoint::new(p.vec() + s.dir() * h);
            let a0 = area(p.vec(), b.vec(), c.vec());
            if a0 < 1e-12 {
                continue;
            }
            let a1 = area(f.apply(p).vec(), f.apply(b).vec(), f.apply(c).vec());
            assert!((a1 - a0).abs() / a0 < 1e-3);
        }
    }
}
