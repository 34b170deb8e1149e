mod common;

use std::f64::consts::PI;

use berezin::error::Error;
use berezin::torus::*;
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn even_level() -> impl Strategy<Value = u32> {
    (1u32..=16).prop_map(|s| 2 * s)
}

#[test]
fn generator_loop_and_its_inverse_cancel() {
    for m in [2, 4, 8, 16] {
        let forward = torus_holonomy(1, 1, m, None).unwrap();
        let back = torus_holonomy(-1, -1, m, None).unwrap();
        assert!((forward * back - 1.0).norm() < 1e-8);
        let upper = connection_integral(&Path::upper_equator(), m).unwrap();
        let lower = connection_integral(&Path::lower_equator().reversed(), m).unwrap();
        let diff = Complex64::from_polar(1.0, -upper) - Complex64::from_polar(1.0, -lower);
        assert!(diff.norm() < 1e-8);
    }
}

#[test]
fn grid_and_csv() {
    let rows = holonomy_grid(3, 2).unwrap();
    assert_eq!(rows.len(), 49);
    assert!(multiplicativity_defect(&rows) <= 1e-10);
    let origin = rows.iter().find(|r| r.k1 == 0 && r.k2 == 0).unwrap();
    assert_eq!(origin.phase(), 0.0);
    let mut buf = Vec::new();
    write_holonomy_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HOLONOMY_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 6);
    assert_eq!(&first[..3], &["-3", "-3", "2"]);
    assert_eq!(text.lines().count(), 50);
    assert!(matches!(holonomy_grid(2, 7), Err(Error::OddLevel(7))));
}

#[test]
fn loop_spec_round_trips_through_json() {
    let spec = LoopSpec {
        k1: 2,
        k2: -1,
        tail: Some(Path::circle(c(0.1, 0.1), 0.3)),
    };
    let text = serde_json::to_string(&spec).unwrap();
    let back: LoopSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(spec, back);
    let value = loop_holonomy(&spec, 6).unwrap();
    assert_eq!(value.value, torus_holonomy(2, -1, 6, spec.tail.as_ref()).unwrap());
}

#[test]
fn hemisphere_flux() {
    assert!((curvature_integral_disk(c(0.0, 0.0), 1.0, 64) - PI).abs() < 1e-12);
    assert!((theta_integral(&Path::equator(), MIN_SAMPLES).unwrap() - PI).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn holonomy_is_multiplicative(m in even_level(), k in (-5i64..=5, -5i64..=5), j in (-5i64..=5, -5i64..=5)) {
        prop_assume!((k.0 + j.0).abs() <= 5 && (k.1 + j.1).abs() <= 5);
        let sum = torus_holonomy(k.0 + j.0, k.1 + j.1, m, None).unwrap();
        let product = torus_holonomy(k.0, k.1, m, None).unwrap() * torus_holonomy(j.0, j.1, m, None).unwrap();
        prop_assert!((sum - product).norm() <= 1e-10);
        let inverse = torus_holonomy(-k.0, -k.1, m, None).unwrap();
        prop_assert!((torus_holonomy(k.0, k.1, m, None).unwrap() * inverse - 1.0).norm() <= 1e-10);
    }

    #[test]
    fn holonomy_has_unit_modulus(m in even_level(), k1 in -50i64..=50, k2 in -50i64..=50) {
        prop_assert!((torus_holonomy(k1, k2, m, None).unwrap().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn odd_levels_are_rejected(s in 0u32..=20, k1 in -3i64..=3) {
        prop_assert!(matches!(torus_holonomy(k1, 0, 2 * s + 1, None), Err(Error::OddLevel(_))));
    }

    #[test]
    fn contractible_tail_multiplies_by_flux(
        m in even_level(),
        center in complex(0.5),
        radius in 0.05..0.45f64,
        k in (-3i64..=3, -3i64..=3),
    ) {
        let tail = Path::circle(center, radius);
        let with = torus_holonomy(k.0, k.1, m, Some(&tail)).unwrap();
        let without = torus_holonomy(k.0, k.1, m, None).unwrap();
        let flux = curvature_integral_disk(center, radius, 64);
        let expected = without * Complex64::from_polar(1.0, -(m as f64) * flux);
        prop_assert!((with - expected).norm() <= 1e-6);
    }

    #[test]
    fn refinement_is_stable(m in even_level(), k in (-5i64..=5, -5i64..=5), center in complex(0.4), radius in 0.05..0.5f64) {
        let tail = Path::circle(center, radius);
        let coarse = torus_holonomy(k.0, k.1, m, Some(&tail)).unwrap();
        let fine = holonomy_with(k.0, k.1, m, Some(&tail), 2 * MIN_SAMPLES).unwrap();
        prop_assert!((fine - coarse).norm() <= 1e-8);
    }
}
