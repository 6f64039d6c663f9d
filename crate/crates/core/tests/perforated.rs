use brinkman_core::cloud::*;
use brinkman_core::domain::BoxDomain;
use brinkman_core::fields::*;
use brinkman_core::grid::*;
use brinkman_core::{Error, Vector};

fn forcing() -> Forcing {
    Forcing::new(BoxDomain::default(), ForcingPreset::Tapered { value: Vector::new(0.0, 0.0, -1.0), ramp: 0.25 })
}

fn one_sphere() -> ParticleCloud {
    let d = BoxDomain::default();
    ParticleCloud::new(d, vec![Particle { x: d.center(), v: Vector::new(0.0, 0.0, 1.0) }])
}

#[test]
fn under_resolved_spheres_are_rejected() {
    let c = one_sphere();
    let r = solve_perforated(&c, &forcing(), &SolverConfig::with_h(2.5 / 8.0));
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn empty_cloud_is_plain_stokes() {
    let c = ParticleCloud::empty(BoxDomain::default());
    let cfg = SolverConfig::with_h(2.5 / 16.0);
    let s = solve_perforated(&c, &forcing(), &cfg).unwrap();
    let l = s.raw.layout;
    let (st, _) = solve_stokes_with_boundary(l, 1.0, &forcing(), &StaggeredField::zeros(l), None, &cfg).unwrap();
    assert_eq!(s.extended.u, st.u);
    assert_eq!(s.mismatch, 0.0);
    assert_eq!(s.eta, 0.0);
}

#[test]
fn mismatch_falls_with_penalty() {
    // a held sphere in the forced flow
    let mut c = one_sphere();
    c.particles[0].v = Vector::zero();
    let mut m = Vec::new();
    for eta in [1e1, 1e2, 1e3, 1e4, 1e5] {
        let cfg = SolverConfig { eta: Some(eta), ..SolverConfig::with_h(2.5 / 10.0) };
        let s = solve_perforated(&c, &forcing(), &cfg).unwrap();
        assert!(s.stats.max_divergence <= cfg.tolerance);
        m.push(s.mismatch);
    }
    eprintln!("{m:?}");
    for w in m.windows(2) {
        assert!(w[1] < w[0], "{m:?}");
    }
}

#[test]
fn extension_holds_particle_velocity_inside() {
    let c = one_sphere();
    let s = solve_perforated(&c, &forcing(), &SolverConfig::with_h(2.5 / 10.0)).unwrap();
    assert_eq!(s.eta, 1e6);
    assert_eq!(s.extended.velocity_at(c.particles[0].x), c.particles[0].v);
    // the penalized field is already close to v deep inside
    assert!((s.raw.velocity_at(c.particles[0].x) - c.particles[0].v).norm() < 1e-4);
    assert_eq!(s.sphere_mismatch.len(), 1);
}
