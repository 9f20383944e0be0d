mod common;

use common::*;
use proptest::prelude::*;
use qcmc::solver::{initial_state, project_boundary};
use qcmc::{
    beltrami_coefficient, descent_step, fit_circle, flip_count, harmonic_initial_map, initial_module, solve_fixed_module,
    solve_qcmc, synth, BeltramiField, Complex64 as C64, ConformalModule, SolverConfig, TriMesh,
};

fn max_boundary_gap(mesh: &TriMesh, map: &[C64], module: &ConformalModule) -> f64 {
    let mut gap: f64 = 0.0;
    for (k, lp) in mesh.boundary_loops().iter().enumerate() {
        let c = module.circle(k);
        for &v in lp {
            gap = gap.max(((map[v] - c.center).norm() - c.radius).abs());
        }
    }
    gap
}

fn eccentric_annulus() -> TriMesh {
    let base = synth::annulus(0.4, 1.0, 60, 9).unwrap();
    synth::mobius_image(&base, C64::new(0.3, 0.2)).unwrap()
}

#[test]
fn harmonic_init_of_annulus_is_a_rotation() {
    let mesh = synth::annulus(0.4, 1.0, 48, 6).unwrap();
    let module = initial_module(&mesh).unwrap();
    let map = harmonic_initial_map(&mesh, &module).unwrap();
    for (z, w) in mesh.positions().iter().zip(&map) {
        assert!((z.norm() - w.norm()).abs() < 0.02);
    }
    assert_eq!(flip_count(&mesh, &map), 0);
}

#[test]
fn inner_circle_near_the_outer_boundary_still_gives_a_map() {
    let mesh = synth::annulus(0.4, 1.0, 48, 6).unwrap();
    let module = ConformalModule::new(vec![0.2], vec![C64::new(0.78, 0.0)]).unwrap();
    let map = harmonic_initial_map(&mesh, &module).unwrap();
    assert!(map.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    let s = initial_state(&mesh, map, module, &BeltramiField::zeros(mesh.face_count())).unwrap();
    assert!(s.energy > 0.0);
}

#[test]
fn first_conformal_step_strictly_decreases_energy() {
    for mesh in [eccentric_annulus(), synth::square_with_hole(0.1).unwrap()] {
        let mu = BeltramiField::zeros(mesh.face_count());
        let module = initial_module(&mesh).unwrap();
        let s0 = initial_state(&mesh, harmonic_initial_map(&mesh, &module).unwrap(), module, &mu).unwrap();
        let (s1, _) = descent_step(&mesh, &s0, &mu, &SolverConfig::default()).unwrap();
        assert!(s1.energy < s0.energy, "{} -> {}", s0.energy, s1.energy);
    }
}

#[test]
fn boundary_stays_on_the_circles_every_iteration() {
    for (mesh, mu) in [
        (synth::triply_connected_disk(0.1).unwrap(), C64::new(0.0, 0.0)),
        (synth::square_with_two_holes(0.1).unwrap(), C64::new(0.15, -0.1)),
    ] {
        let mu = BeltramiField::constant(mesh.face_count(), mu).unwrap();
        let module = initial_module(&mesh).unwrap();
        let mut s = initial_state(&mesh, harmonic_initial_map(&mesh, &module).unwrap(), module, &mu).unwrap();
        assert!(max_boundary_gap(&mesh, &s.map, &s.module) < 1e-9);
        for _ in 0..8 {
            s = descent_step(&mesh, &s, &mu, &SolverConfig::default()).unwrap().0;
            assert!(max_boundary_gap(&mesh, &s.map, &s.module) < 1e-9);
            s.module.validate().unwrap();
        }
    }
}

#[test]
fn zero_residual_state_is_a_fixed_point() {
    // the target is the coefficient of the current map, whose boundary is on the circles
    let mesh = synth::square_with_hole(0.15).unwrap();
    let module = initial_module(&mesh).unwrap();
    let map = harmonic_initial_map(&mesh, &module).unwrap();
    let mu = beltrami_coefficient(&mesh, &map).unwrap();
    let s0 = initial_state(&mesh, map, module, &mu).unwrap();
    assert!(s0.energy < 1e-20);
    for fixed_module in [true, false] {
        let cfg = SolverConfig { fixed_module, ..Default::default() };
        let (s1, up) = descent_step(&mesh, &s0, &mu, &cfg).unwrap();
        let moved = s1.map.iter().zip(&s0.map).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(moved < 1e-9, "moved {moved}");
        assert!(up.delta_radii.iter().all(|d| d.abs() < 1e-9));
        assert!(up.delta_centers.iter().all(|d| d.norm() < 1e-9));
    }
}

#[test]
fn projection_is_idempotent() {
    let mesh = synth::triply_connected_disk(0.15).unwrap();
    let module = initial_module(&mesh).unwrap();
    let mut map: Vec<C64> = mesh.positions().iter().map(|z| z * 1.1 + 0.01).collect();
    project_boundary(&mesh, &mut map, &module);
    let once = map.clone();
    project_boundary(&mesh, &mut map, &module);
    let drift = once.iter().zip(&map).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(drift < 1e-14, "drift {drift}");
    assert!(max_boundary_gap(&mesh, &map, &module) < 1e-12);
}

#[test]
fn frozen_module_reproduces_the_fixed_module_solve() {
    let mesh = synth::square_with_two_holes(0.12).unwrap();
    let mu = BeltramiField::constant(mesh.face_count(), C64::new(0.1, 0.05)).unwrap();
    let cfg = SolverConfig { fixed_module: true, max_iter: 30, ..Default::default() };
    let (sa, ra) = solve_qcmc(&mesh, &mu, &cfg).unwrap();
    let (sb, rb) = solve_fixed_module(&mesh, &mu, &initial_module(&mesh).unwrap(), &cfg).unwrap();
    assert_eq!(ra.energy_trace, rb.energy_trace);
    assert_eq!(ra.mu_diff_trace, rb.mu_diff_trace);
    assert_eq!(sa.map, sb.map);
    assert_eq!(sa.module, initial_module(&mesh).unwrap());
}

#[test]
fn true_module_with_fixed_solve_recovers_conformal_map() {
    let base = synth::annulus(0.4, 1.0, 60, 9).unwrap();
    let a = C64::new(0.3, 0.2);
    let mesh = synth::mobius_image(&base, a).unwrap();
    // image of the inner circle under the same automorphism
    let inner: Vec<C64> = mesh.boundary_loops()[1].iter().map(|&v| mesh.positions()[v]).collect();
    let c = fit_circle(&inner).unwrap();
    let module = ConformalModule::new(vec![c.radius], vec![c.center]).unwrap();
    let mu = BeltramiField::zeros(mesh.face_count());
    let (_, report) = solve_fixed_module(&mesh, &mu, &module, &SolverConfig::default()).unwrap();
    assert!(report.mu_error_mean < 0.02, "{}", report.mu_error_mean);
    assert_eq!(report.flips, 0);
}

#[test]
fn quasi_conformal_target_is_followed_without_flips() {
    let mesh = synth::triply_connected_disk(0.05).unwrap();
    let mu = BeltramiField::constant(mesh.face_count(), C64::new(0.0, 0.25)).unwrap();
    let (_, report) = solve_qcmc(&mesh, &mu, &SolverConfig::default()).unwrap();
    assert_eq!(report.flips, 0);
    assert!(report.mu_error_mean < 0.03, "{}", report.mu_error_mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn rotation_equivariance(theta in 0.1f64..6.2) {
        let mesh = synth::square_with_two_holes(0.1).unwrap();
        let mu = BeltramiField::zeros(mesh.face_count());
        let cfg = SolverConfig::default();
        let (sa, ra) = solve_qcmc(&mesh, &mu, &cfg).unwrap();
        let (sb, rb) = solve_qcmc(&rotate_mesh(&mesh, theta), &mu, &cfg).unwrap();
        for k in 0..sa.module.len() {
            prop_assert!((sa.module.radii()[k] - sb.module.radii()[k]).abs() < 1e-3);
        }
        prop_assert_eq!(ra.energy_trace.len(), rb.energy_trace.len());
        for (a, b) in ra.energy_trace.iter().zip(&rb.energy_trace) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }
}
