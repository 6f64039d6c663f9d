use brinkman_core::cloud::*;
use brinkman_core::domain::BoxDomain;
use brinkman_core::fields::*;
use brinkman_core::{Matrix, Vector};
use proptest::prelude::*;

fn uniform_target() -> MomentField {
    MomentField::new(
        BoxDomain::default(),
        DensityPreset::Uniform,
        VelocityPreset::Shear { amplitude: 1.0 },
    )
}

#[test]
fn single_particle_is_valid() {
    let d = BoxDomain::cube(5.0);
    let t = MomentField::new(d, DensityPreset::Uniform, VelocityPreset::Zero);
    let c = generate_cloud(1, d, &t, 0.1, 0).unwrap();
    assert_eq!(c.len(), 1);
    assert!(validate_cloud(&c).passed());
}

#[test]
fn eight_particles_are_separated() {
    let c = generate_cloud(8, BoxDomain::default(), &uniform_target(), 0.1, 11).unwrap();
    for i in 0..8 {
        for j in i + 1..8 {
            assert!((c.particles[i].x - c.particles[j].x).norm() > 1.0);
        }
    }
}

#[test]
fn same_seed_same_cloud() {
    let t = uniform_target();
    let a = generate_cloud(27, BoxDomain::default(), &t, 0.15, 42).unwrap();
    let b = generate_cloud(27, BoxDomain::default(), &t, 0.15, 42).unwrap();
    assert_eq!(a, b);
    let c = generate_cloud(27, BoxDomain::default(), &t, 0.15, 43).unwrap();
    assert_ne!(a, c);
}

#[test]
fn velocities_follow_current_over_density() {
    let t = uniform_target();
    let c = generate_cloud(27, BoxDomain::default(), &t, 0.1, 1).unwrap();
    for p in &c.particles {
        let want = t.j(p.x) / t.rho(p.x);
        assert!((p.v - want).norm() < 1e-14);
    }
}

#[test]
fn wall_violation_is_reported() {
    let d = BoxDomain::cube(10.0);
    let eps: f64 = 1.0 / 8.0;
    let r = eps.cbrt();
    let mut ps: Vec<Particle> = (0..8)
        .map(|i| Particle { x: Vector::new(1.5 + i as f64 * 1.05, 5.0, 5.0), v: Vector::zero() })
        .collect();
    ps[3].x = Vector::new(r / 2.0, 5.0, 5.0);
    let c = ParticleCloud::new(d, ps);
    let rep = validate_cloud(&c);
    assert!(!rep.wall.passed);
    assert_eq!(rep.wall.worst, vec![3]);
    assert!(rep.separation.passed);
}

#[test]
fn infeasible_packing_names_constraint() {
    let t = MomentField::new(BoxDomain::cube(1.0), DensityPreset::Uniform, VelocityPreset::Zero);
    match generate_cloud(27, BoxDomain::cube(1.0), &t, 0.0, 0) {
        Err(brinkman_core::Error::Packing(msg)) => assert!(msg.contains("wall") || msg.contains("separation")),
        other => panic!("expected packing error, got {other:?}"),
    }
    let z = MomentField::zero(BoxDomain::default());
    assert!(matches!(generate_cloud(8, BoxDomain::default(), &z, 0.0, 0), Err(brinkman_core::Error::Domain(_))));
}

#[test]
fn file_formats_round_trip() {
    let c = generate_cloud(27, BoxDomain::default(), &uniform_target(), 0.1, 5).unwrap();
    let back = ParticleCloud::from_text(&c.to_text()).unwrap();
    assert_eq!(back, c);
    let back = ParticleCloud::from_json(&c.to_json().unwrap()).unwrap();
    assert_eq!(back, c);
    let dir = tempfile::tempdir().unwrap();
    for name in ["c.json", "c.txt"] {
        let p = dir.path().join(name);
        c.save(&p).unwrap();
        assert_eq!(ParticleCloud::load(&p).unwrap(), c);
    }
    assert!(ParticleCloud::from_text("0 0 0 1 1 1\n").is_err());
}

#[test]
fn moment_pairings_trivial_cases() {
    let d = BoxDomain::cube(5.0);
    let t = MomentField::new(d, DensityPreset::Uniform, VelocityPreset::Zero);
    let c = generate_cloud(1, d, &t, 0.0, 0).unwrap();
    let m = pair_moments(&c, &|_: Vector| Vector::splat(1.0));
    assert_eq!(m.rho_pairing, Vector::splat(1.0));
    let z = pair_moments(&c, &ZeroField);
    assert_eq!(z.rho_pairing, Vector::zero());
    assert_eq!(z.j_pairing, 0.0);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn weak_convergence_of_current() {
    let t = uniform_target();
    let phi = TestField::PolyBump {
        value: Vector::new(0.2, -0.1, 1.0),
        linear: Matrix::from_rows(Vector::new(0.3, 0.0, 0.1), Vector::new(0.0, -0.2, 0.4), Vector::new(0.5, 0.1, 0.0)),
        center: Vector::new(1.1, 1.3, 1.25),
        radius: 1.6,
    };
    let reference = reference_moments(&t, &phi, 8, 6);
    let mut meds = Vec::new();
    for n in [8, 27, 64, 125] {
        let errs: Vec<f64> = (0..5)
            .map(|s| {
                let c = generate_cloud(n, BoxDomain::default(), &t, 0.1, s).unwrap();
                (pair_moments(&c, &phi).j_pairing - reference.j_pairing).abs()
            })
            .collect();
        meds.push(median(errs));
    }
    assert!(meds[3] < meds[0], "{meds:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_clouds_always_valid(seed in 0u64..10_000, k in 0usize..4, tapered in any::<bool>(), jitter in 0.0f64..0.3) {
        let n = [8, 27, 64, 125][k];
        let rho = if tapered { DensityPreset::Tapered { ramp: 0.25 } } else { DensityPreset::Uniform };
        let t = MomentField::new(BoxDomain::default(), rho, VelocityPreset::Constant { value: Vector::new(0.0, 0.0, 1.0) });
        let c = generate_cloud(n, BoxDomain::default(), &t, jitter, seed).unwrap();
        let rep = validate_cloud(&c);
        prop_assert!(rep.passed(), "{:?}", rep.failures());
        prop_assert!((c.len() as f64 * c.eps - 1.0).abs() <= 1e-12);
    }
}
