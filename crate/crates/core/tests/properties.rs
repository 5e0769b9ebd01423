use std::f64::consts::{PI, TAU};

use approx::assert_relative_eq;
use gluelab::glued::DEFAULT_SEAM_SAMPLES;
use gluelab::sphere::sigma_unchecked;
use gluelab::{CircleHomeo, GluedMetric, GluedPoint, Hemisphere, SpherePoint};
use proptest::prelude::*;

fn point(m: &GluedMetric, z: f64, t: f64) -> GluedPoint {
    let s = (1.0 - z * z).sqrt();
    let tag = if z < 0.0 { Hemisphere::South } else { Hemisphere::North };
    m.point(tag, SpherePoint::normalized(s * t.cos(), s * t.sin(), z)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn glued_distance_is_a_metric(za in -0.99f64..0.99, ta in 0.0..TAU, zb in -0.99f64..0.99, tb in 0.0..TAU,
                                  zc in -0.99f64..0.99, tc in 0.0..TAU) {
        let m = GluedMetric::new(CircleHomeo::power(1.0, 2.0).unwrap());
        let (a, b, c) = (point(&m, za, ta), point(&m, zb, tb), point(&m, zc, tc));
        let n = DEFAULT_SEAM_SAMPLES;
        let ab = m.glued_distance(&a, &b, n).unwrap();
        prop_assert!((ab - m.glued_distance(&b, &a, n).unwrap()).abs() < 1e-9);
        prop_assert!(m.glued_distance(&a, &c, n).unwrap() <= ab + m.glued_distance(&b, &c, n).unwrap() + 1e-9);
        prop_assert!(ab <= m.predistance(&a, &b) + 1e-12);
    }

    #[test]
    fn rotation_gluing_is_not_shorter_than_round_distance_across_the_seam(
        angle in -PI..PI, za in -0.99f64..-0.01, ta in 0.0..TAU, zb in 0.01f64..0.99, tb in 0.0..TAU)
    {
        let m = GluedMetric::new(CircleHomeo::rotation(angle));
        let (a, b) = (point(&m, za, ta), point(&m, zb, tb));
        let d = m.glued_distance(&a, &b, DEFAULT_SEAM_SAMPLES).unwrap();
        prop_assert!(d >= a.position.distance_to_equator() + b.position.distance_to_equator() - 1e-12);
    }

    #[test]
    fn seam_measure_is_additive(a in 0.0..TAU, b in 0.0..TAU, c in 0.0..TAU) {
        let m = GluedMetric::new(CircleHomeo::patch(0.5, 2.0, 1.0).unwrap());
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let whole = m.cumulative(v[2]) - m.cumulative(v[0]);
        let parts = (m.cumulative(v[1]) - m.cumulative(v[0])) + (m.cumulative(v[2]) - m.cumulative(v[1]));
        prop_assert!((whole - parts).abs() < 1e-12);
        prop_assert!(whole <= v[2] - v[0] + 1e-12);
    }

    #[test]
    fn pwl_lift_inverts(x in 0.0..TAU) {
        let g = CircleHomeo::pwl(&[(0.0, 0.0), (1.0, 2.0), (4.0, 4.5), (TAU, TAU)]).unwrap();
        assert_relative_eq!(g.inverse_lift(g.lift(x)), x, epsilon = 1e-10);
    }
}

#[test]
fn identity_gluing_recovers_the_round_sphere_on_a_grid() {
    let m = GluedMetric::new(CircleHomeo::identity());
    for i in 0..12 {
        for j in 0..12 {
            let a = point(&m, -0.95 + 0.16 * i as f64, 0.5 * i as f64);
            let b = point(&m, 0.9 - 0.15 * j as f64, 0.7 * j as f64);
            let d = m.glued_distance(&a, &b, DEFAULT_SEAM_SAMPLES).unwrap();
            assert_relative_eq!(d, sigma_unchecked(&a.position, &b.position), epsilon = 1e-9);
        }
    }
}
