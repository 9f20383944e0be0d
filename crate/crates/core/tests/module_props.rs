mod common;

use common::*;
use proptest::prelude::*;
use qcmc::conformal_module::{ModuleJson, MARGIN, MIN_RADIUS};
use qcmc::{fit_circle, initial_module, synth, Complex64 as C64, ConformalModule, ModuleUpdate};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn initial_module_rotates_with_the_mesh(theta in 0.0..std::f64::consts::TAU) {
        let mesh = synth::square_with_two_holes(0.25).unwrap();
        let a = initial_module(&mesh).unwrap();
        let b = initial_module(&rotate_mesh(&mesh, theta)).unwrap();
        let rot = C64::from_polar(1.0, theta);
        for k in 0..a.len() {
            prop_assert!((a.radii()[k] - b.radii()[k]).abs() < 1e-9);
            prop_assert!((rot * a.centers()[k] - b.centers()[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn damped_update_then_zero_damping_is_single_update(
        dr in -0.2f64..0.2, dx in -0.3f64..0.3, dy in -0.3f64..0.3, d in 0.0f64..1.0,
    ) {
        let m = ConformalModule::new(vec![0.2, 0.15], vec![C64::new(-0.4, 0.1), C64::new(0.4, -0.2)]).unwrap();
        let up = ModuleUpdate { delta_centers: vec![C64::new(dx, dy), C64::new(-dy, dx)], delta_radii: vec![dr, -dr] };
        let (once, _) = m.apply_update(&up, d);
        let (twice, _) = once.apply_update(&up, 0.0);
        prop_assert_eq!(once.clone(), twice);
        prop_assert!(once.validate().is_ok());
    }

    #[test]
    fn updates_always_leave_a_valid_module(
        dr in -2.0f64..2.0, dx in -2.0f64..2.0, dy in -2.0f64..2.0,
    ) {
        let m = ConformalModule::new(vec![0.3, 0.2], vec![C64::new(-0.3, 0.0), C64::new(0.45, 0.0)]).unwrap();
        let up = ModuleUpdate { delta_centers: vec![C64::new(dx, dy), C64::new(dy, -dx)], delta_radii: vec![dr, dr * 0.5] };
        let (next, _) = m.apply_update(&up, 1.0);
        prop_assert!(next.validate().is_ok(), "{:?}", next);
    }

    #[test]
    fn json_round_trip(r in 0.01f64..0.5, x in -0.3f64..0.3, y in -0.3f64..0.3) {
        let m = ConformalModule::new(vec![r], vec![C64::new(x, y)]).unwrap();
        let text = serde_json::to_string(&m.to_json()).unwrap();
        let parsed: ModuleJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(ConformalModule::from_json(&parsed).unwrap(), m);
    }
}

#[test]
fn concentric_annulus_module() {
    let mesh = synth::annulus(0.4, 1.0, 64, 8).unwrap();
    let m = initial_module(&mesh).unwrap();
    assert!((m.radii()[0] - 0.4).abs() < 1e-9);
    assert!(m.centers()[0].norm() < 1e-9);
}

#[test]
fn square_outline_is_normalized_to_the_unit_circle() {
    let mesh = synth::square_with_hole(0.2).unwrap();
    let m = initial_module(&mesh).unwrap();
    m.validate().unwrap();
    // the square's best-fit circle lies between its inscribed and circumscribed circles
    let outer: Vec<C64> = mesh.boundary_loops()[0].iter().map(|&v| mesh.positions()[v]).collect();
    let fit = fit_circle(&outer).unwrap();
    assert!(fit.radius > 1.0 && fit.radius < 2f64.sqrt());
    assert!((m.radii()[0] - 0.5 / fit.radius).abs() < 1e-9);
}

#[test]
fn center_pushed_toward_the_unit_circle_is_clamped() {
    let m = ConformalModule::new(vec![0.2], vec![C64::new(0.3, 0.0)]).unwrap();
    let up = ModuleUpdate { delta_centers: vec![C64::new(0.6, 0.0)], delta_radii: vec![0.0] };
    let (next, clamps) = m.apply_update(&up, 1.0);
    assert_eq!(clamps, 1);
    assert!(next.centers()[0].norm() + next.radii()[0] <= 1.0 - MARGIN + 1e-15);
    assert!(next.centers()[0].im.abs() < 1e-15 && next.centers()[0].re > 0.0);
    let (small, _) = m.apply_update(&ModuleUpdate { delta_centers: vec![C64::new(0.0, 0.0)], delta_radii: vec![-5.0] }, 1.0);
    assert_eq!(small.radii()[0], MIN_RADIUS);
}

#[test]
fn annulus_ratio_is_mobius_invariant() {
    let base = synth::annulus(0.4, 1.0, 64, 6).unwrap();
    for a in [C64::new(0.3, 0.2), C64::new(-0.5, 0.1), C64::new(0.0, 0.6)] {
        let image = synth::mobius_image(&base, a).unwrap();
        let m = initial_module(&image).unwrap();
        assert!(m.centers()[0].norm() > 0.05);
        assert!((m.annulus_ratio().unwrap() - 0.4).abs() < 1e-9, "{:?}", m.annulus_ratio());
    }
}
