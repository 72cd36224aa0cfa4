//! Invariants checked on random inputs.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use proptest::prelude::*;
use twistlab::cli::table::{ColumnType, Header, Table};
use twistlab::fixedpoints::{find_fixed_points, Stability};
use twistlab::geometry::{sample_haar, solve_kepler, theta_minus_sin};
use twistlab::exponents::random_exponent_quadrature;
use twistlab::linear::{avila_bochi, Matrix2};
use twistlab::{Rotation, Seed, SpherePoint, TangentState, TwistFamily, Vec3};

fn unit_vector() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, 0.0..TAU).prop_map(|(z, lon)| SpherePoint::from_lon_height(lon, z).vec())
}

fn rotation() -> impl Strategy<Value = Rotation> {
    (unit_vector(), 0.0..TAU).prop_map(|(a, t)| Rotation::from_axis_angle(a, t))
}

fn close(a: Vec3, b: Vec3) -> f64 {
    Vec3::new(a.x - b.x, a.y - b.y, a.z - b.z).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotations_are_isometries(g in rotation(), h in rotation(), p in unit_vector(), q in unit_vector()) {
        prop_assert!((g.apply(p).dot(g.apply(q)) - p.dot(q)).abs() < 1e-12);
        prop_assert!(close(g.apply_inverse(g.apply(p)), p) < 1e-12);
        prop_assert!(close(g.compose(&h).apply(p), g.apply(h.apply(p))) < 1e-12);
        prop_assert!(g.compose(&g.inverse()).distance_from_identity() < 1e-7);
    }

    #[test]
    fn haar_samples_are_rotations(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng(0);
        let g = sample_haar(&mut rng).rotation;
        let m = g.matrix();
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        prop_assert!((det - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=TAU).contains(&g.angle()));
    }

    #[test]
    fn twist_preserves_height_and_advances_longitude(eps in 0.0f64..50.0, lon in 0.0..TAU, z in -0.99f64..0.99) {
        let f = TwistFamily::new(eps).unwrap();
        let p = SpherePoint::from_lon_height(lon, z);
        let q = f.apply(p);
        prop_assert!((q.vec().z - z).abs() < 1e-12);
        let turn = (q.longitude() - lon - PI * eps * (1.0 + z)).rem_euclid(TAU);
        prop_assert!(turn < 1e-8 || TAU - turn < 1e-8);
    }

    #[test]
    fn twist_derivative_preserves_area(eps in 0.0f64..20.0, lon in 0.0..TAU, z in -0.99f64..0.99) {
        // Images of the east and north frames span unit area.
        let f = TwistFamily::new(eps).unwrap();
        let p = SpherePoint::from_lon_height(lon, z);
        let (se, le) = f.tangent_apply(&TangentState::new(p, p.east()));
        let (sn, ln) = f.tangent_apply(&TangentState::new(p, p.north()));
        let normal = se.base().vec();
        let area = le.exp() * ln.exp() * se.dir().cross(sn.dir()).dot(normal);
        prop_assert!((area.abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kepler_inverts_theta_minus_sin(theta in 0.0f64..TAU) {
        let t = solve_kepler(theta_minus_sin(theta)).unwrap();
        prop_assert!((t - theta).abs() < 1e-9);
    }

    #[test]
    fn fixed_points_come_in_even_numbers_with_euler_characteristic_two(
        beta in 0.0f64..FRAC_PI_2,
        theta in 0.0f64..TAU,
        eps in 0.05f64..4.0,
    ) {
        let recs = find_fixed_points(beta, theta, eps).unwrap();
        prop_assert!(recs.len() % 2 == 0);
        if recs.iter().all(|r| !r.flags.any()) {
            let count = |s: Stability| recs.iter().filter(|r| r.stability == s).count() as i64;
            let chi = count(Stability::Elliptic) - count(Stability::Hyperbolic) + count(Stability::Reflection);
            prop_assert_eq!(chi, 2);
        }
        for r in &recs {
            prop_assert!(r.residual < 1e-8 || r.flags.unvalidated);
        }
    }

    #[test]
    fn fixed_points_move_continuously_in_eps(
        beta in 0.0f64..FRAC_PI_2,
        theta in 0.0f64..TAU,
        eps in 0.05f64..4.0,
    ) {
        let a = find_fixed_points(beta, theta, eps).unwrap();
        let b = find_fixed_points(beta, theta, eps + 1e-7).unwrap();
        if a.len() == b.len() && a.iter().chain(&b).all(|r| !r.flags.any()) {
            for r in &a {
                let d = b
                    .iter()
                    .map(|s| close(r.location.vec(), s.location.vec()))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(d < 1e-3, "root moved by {}", d);
            }
        }
    }

    #[test]
    fn random_exponent_is_positive_and_increasing(eps in 0.01f64..100.0, step in 0.01f64..1.0) {
        let r0 = random_exponent_quadrature(eps).unwrap().value;
        let r1 = random_exponent_quadrature(eps * (1.0 + step)).unwrap().value;
        prop_assert!(r0 > 0.0);
        prop_assert!(r1 > r0);
    }

    #[test]
    fn avila_bochi_is_rotation_invariant(a in 0.2f64..5.0, s in -3.0f64..3.0, p in 0.0..TAU, q in 0.0..TAU) {
        let m = Matrix2::new(a, s, 0.0, 1.0 / a);
        let r = Matrix2::rotation(p).mul(&m).mul(&Matrix2::rotation(q));
        prop_assert!((avila_bochi(&m).unwrap() - avila_bochi(&r).unwrap()).abs() < 1e-9);
        prop_assert!(avila_bochi(&m).unwrap() >= 0.0);
    }

    #[test]
    fn tables_round_trip(xs in prop::collection::vec(any::<f64>(), 0..20), ks in prop::collection::vec(any::<i64>(), 20)) {
        let mut t = Table::new(&[("x", ColumnType::Float), ("k", ColumnType::Int), ("s", ColumnType::Text)]);
        for (i, x) in xs.iter().enumerate() {
            t.push(vec![(*x).into(), ks[i].into(), format!("r{i},\"q\"").into()]).unwrap();
        }
        let mut h = Header::default();
        h.push("seed", "3");
        let (h2, t2) = Table::parse(&t.to_csv(&h).unwrap()).unwrap();
        prop_assert_eq!(h, h2);
        prop_assert_eq!(t, t2);
    }
}
