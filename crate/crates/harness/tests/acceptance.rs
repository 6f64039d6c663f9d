//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
//! exits non-zero unless the failing set is exactly the known one.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bll_harness::{run_check, run_convergence_with, ExperimentConfig, Method};
use brinkman_core::annulus::{scaled_coefficients, solve_coefficients, OuterRadius};
use brinkman_core::cloud::{generate_cloud, ParticleCloud};
use brinkman_core::correctors::{brinkman_source_pairing, friction_pairing, FrictionOptions};
use brinkman_core::domain::BoxDomain;
use brinkman_core::fields::{DensityPreset, Forcing, ForcingPreset, MomentField, SineCurl, TestField, VelocityPreset};
use brinkman_core::grid::{solve_perforated, SolverConfig, StaggeredField};
use brinkman_core::measure_limits::{auxiliary_norms, distributional_laplacian_check, pair_surface_measures, AuxiliaryFields};
use brinkman_core::quadrature::SphereRule;
use brinkman_core::reflections::{solve_mor, Background, MorOptions};
use brinkman_core::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail: the literal α bound cannot hold, since
/// `α(R)R³ + 3/8 ≈ −(27/32)/R` for large `R`.
const EXPECTED_FAILURES: [u32; 1] = [3];

const C_BETA: f64 = 2.8;
const C_GAMMA: f64 = 1.9;
const C_DELTA: f64 = 0.63;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn callout(name: &str) -> Outcome {
    match run_check(name, None) {
        Some(c) => outcome(c.passed, format!("{} {:.3e} {} {:.1e}", c.name, c.value, c.relation, c.bound)),
        None => outcome(false, format!("no check named {name}")),
    }
}

fn both(a: Outcome, b: Outcome) -> Outcome {
    outcome(a.passed && b.passed, format!("{}; {}", a.detail, b.detail))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn uniform(velocity: VelocityPreset) -> MomentField {
    MomentField::new(BoxDomain::default(), DensityPreset::Uniform, velocity)
}

fn cloud(t: &MomentField, n: usize, seed: u64) -> ParticleCloud {
    generate_cloud(n, BoxDomain::default(), t, 0.1, seed).expect("cloud")
}

const SWEEP: [usize; 4] = [8, 27, 64, 125];

fn bump(value: [f64; 3], rows: [[f64; 3]; 3], center: [f64; 3], radius: f64) -> TestField {
    TestField::PolyBump {
        value: Vector::new(value[0], value[1], value[2]),
        linear: Matrix::from_rows(
            Vector::new(rows[0][0], rows[0][1], rows[0][2]),
            Vector::new(rows[1][0], rows[1][1], rows[1][2]),
            Vector::new(rows[2][0], rows[2][1], rows[2][2]),
        ),
        center: Vector::new(center[0], center[1], center[2]),
        radius,
    }
}

/// Five smooth `(G, φ)` pairs.
fn test_pairs() -> Vec<(TestField, TestField)> {
    let d = BoxDomain::default();
    vec![
        (
            bump([0.0, 1.0, 1.0], [[0.2, 0.1, 0.0], [0.0; 3], [0.0, 0.0, 0.3]], [1.2, 1.3, 1.25], 1.9),
            TestField::Affine { value: Vector::new(1.0, 1.0, 0.5), linear: Matrix::identity().scale(-0.3) },
        ),
        (
            TestField::Affine { value: Vector::new(1.0, 0.5, 0.0), linear: Matrix::identity().scale(0.2) },
            bump([0.5, 1.0, 0.2], [[0.1, 0.0, 0.3], [0.0, 0.2, 0.0], [0.4, 0.0, -0.1]], [1.25, 1.25, 1.25], 1.7),
        ),
        (
            TestField::SineCurl { domain: d, amplitude: 1.5 },
            TestField::Affine {
                value: Vector::new(0.3, -0.7, 1.0),
                linear: Matrix::from_rows(Vector::new(0.0, 1.0, 0.0), Vector::zero(), Vector::zero()),
            },
        ),
        (
            bump([1.0, 0.0, 0.5], [[0.0; 3], [0.2, 0.0, 0.0], [0.0, 0.3, 0.0]], [1.0, 1.2, 1.4], 1.8),
            bump([0.2, 1.0, 1.0], [[0.3, 0.0, 0.0], [0.0; 3], [0.0, 0.0, 0.5]], [1.3, 1.2, 1.1], 1.8),
        ),
        (
            TestField::Constant { value: Vector::new(0.6, 0.8, 0.0) },
            bump([1.0, 1.0, 0.0], [[0.5, 0.0, 0.0], [0.0, -0.5, 0.0], [0.0; 3]], [1.25, 1.25, 1.25], 1.7),
        ),
    ]
}

fn closed_form() -> Outcome {
    both(callout("annulus.boundary_conditions"), callout("annulus.stokes_residual_order"))
}

fn drag() -> Outcome {
    callout("annulus.drag_law")
}

fn coefficient_asymptotics() -> Outcome {
    let mut alpha = Vec::new();
    let mut ok = true;
    for r in [2.0f64, 5.0, 20.0, 100.0] {
        let c = solve_coefficients(OuterRadius::Finite(r)).expect("coefficients");
        let dev = (c.alpha * r.powi(3) + 0.375).abs();
        ok &= dev <= 0.5 / r;
        alpha.push(dev * r);
    }
    let mut scaled = Vec::new();
    for eps in [1e-2f64, 1e-3, 1e-4] {
        let s = scaled_coefficients(eps).expect("scaled coefficients");
        let t = eps.powf(2.0 / 3.0);
        let a = (s.alpha1 + 0.375).abs() / t;
        let b = (s.beta1 - 1.125 * t).abs() / (t * t);
        let g = (s.gamma1 + 0.75 * eps).abs() / (eps * t);
        let d = (s.delta1 - 0.25 * eps.powi(3)).abs() / (eps.powi(3) * t);
        ok &= a <= 0.5 && b <= C_BETA && g <= C_GAMMA && d <= C_DELTA;
        scaled.push(format!("eps {eps:.0e}: {a:.3} {b:.3} {g:.3} {d:.3}"));
    }
    outcome(
        ok,
        format!(
            "R|aR^3+3/8| {} vs 0.5; scaled (a <= 0.5, b <= {C_BETA}, g <= {C_GAMMA}, d <= {C_DELTA}) {}",
            sci(&alpha),
            scaled.join("; ")
        ),
    )
}

fn interaction() -> Outcome {
    callout("annulus.interaction_slope")
}

fn corrector_norms() -> Outcome {
    callout("correctors.norm_decay")
}

fn surface_measures() -> Outcome {
    let t = uniform(VelocityPreset::Zero);
    let rule = SphereRule::default_product();
    let pairs = test_pairs();
    let (mut iso, mut rad) = (Vec::new(), Vec::new());
    let mut ratio = 0.0f64;
    for n in SWEEP {
        let clouds: Vec<ParticleCloud> = (0..3).map(|s| cloud(&t, n, s)).collect();
        let (mut ei, mut er) = (Vec::new(), Vec::new());
        for (g, phi) in &pairs {
            for c in &clouds {
                let p = pair_surface_measures(c, g, phi, Some(&t), &rule);
                let (li, lr) = (p.isotropic_limit.expect("limit"), p.radial_limit.expect("limit"));
                ei.push((p.isotropic - li).abs() / li.abs());
                er.push((p.radial - lr).abs() / lr.abs());
            }
        }
        iso.push(median(ei));
        rad.push(median(er));
        let g = |_: Vector| Vector::new(0.0, 1.0, 2.0);
        let phi = |_: Vector| Vector::new(1.0, 1.0, 1.0);
        let p = pair_surface_measures(&clouds[0], &g, &phi, None, &rule);
        ratio = ratio.max((p.isotropic / p.radial / 3.0 - 1.0).abs());
    }
    outcome(
        decreasing(&iso) && decreasing(&rad) && ratio <= 0.01,
        format!("isotropic {}, radial {}, ratio deviation {ratio:.1e}", sci(&iso), sci(&rad)),
    )
}

fn appendix_apparatus() -> Outcome {
    let t = uniform(VelocityPreset::Zero);
    let g = TestField::SineCurl { domain: BoxDomain::default(), amplitude: 1.0 };
    let mut rows = Vec::new();
    for n in SWEEP {
        let c = cloud(&t, n, 1);
        let r = c.r_eps();
        let a = auxiliary_norms(&AuxiliaryFields::new(&c, &g));
        rows.push([a.xi_l2 / r.powi(4), a.xi_h1 / r.powi(2), a.chi_l2 / r.powi(4), a.chi_h1 / r.powi(2)]);
    }
    let spread: Vec<f64> = (0..4)
        .map(|i| {
            let hi = rows.iter().map(|r| r[i]).fold(0.0, f64::max);
            let lo = rows.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min);
            hi / lo
        })
        .collect();
    let bounded = spread.iter().all(|s| s.is_finite() && *s < 10.0);

    let pairs = test_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let c = cloud(&t, 27, seed);
        for (_, phi) in &pairs {
            let v = Vector::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let g = TestField::Affine { value: v, linear: Matrix::identity().scale(rng.random_range(-0.5..0.5)) };
            worst = worst.max(distributional_laplacian_check(&AuxiliaryFields::new(&c, &g), phi).max_residual());
        }
    }
    outcome(bounded && worst <= 1e-6, format!("max/min of norm ratios {}, laplacian residual {worst:.2e}", sci(&spread)))
}

fn limit_pairings() -> Outcome {
    let t = uniform(VelocityPreset::Shear { amplitude: 1.0 });
    let w = bump([0.3, 0.1, 1.0], [[0.2, 0.0, 0.3], [0.1, -0.3, 0.0], [0.6, 0.2, 0.1]], [1.25; 3], 1.7);
    let u = SineCurl::new(BoxDomain::default(), 2.0);
    let (mut src, mut fric) = (Vec::new(), Vec::new());
    for n in SWEEP {
        let (mut es, mut ef) = (Vec::new(), Vec::new());
        for seed in 0..3 {
            let c = cloud(&t, n, seed);
            let s = brinkman_source_pairing(&c, &w, Some(&t)).expect("source pairing");
            let l = s.limit.expect("limit");
            es.push((s.pairing - l).abs() / l.abs());
            let f = friction_pairing(&c, &u, &w, Some(&t), &FrictionOptions::default()).expect("friction pairing");
            let l = f.limit.expect("limit");
            ef.push((f.pairing - l).abs() / l.abs());
        }
        src.push(median(es));
        fric.push(median(ef));
    }
    outcome(decreasing(&src) && decreasing(&fric), format!("source {}, friction {}", sci(&src), sci(&fric)))
}

fn solver_verification() -> Outcome {
    both(callout("grid.manufactured_order"), callout("grid.nu0_closed_form"))
}

fn cross_solver() -> Outcome {
    let d = BoxDomain::default();
    let t = MomentField::new(d, DensityPreset::Tapered { ramp: 0.25 }, VelocityPreset::Constant { value: Vector::new(0.0, 0.0, 1.0) });
    let g = Forcing::new(d, ForcingPreset::Tapered { value: Vector::new(0.0, 0.0, -1.0), ramp: 0.25 });
    let c = generate_cloud(8, d, &t, 0.1, 0).expect("cloud");
    let mor = match solve_mor(&c, Background::WallCorrected { g: Arc::new(g) }, &MorOptions::default()) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("reflections: {e}")),
    };
    let grid = match solve_perforated(&c, &g, &SolverConfig::with_h(c.eps / 4.0)) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("penalized grid: {e}")),
    };
    let m = StaggeredField::sample(grid.extended.layout, &mor);
    let rel = m.difference(&grid.extended).l2_norm() / m.l2_norm();
    outcome(rel < 0.1, format!("relative L2 difference {rel:.4} at h = {}", grid.extended.layout.h))
}

fn trend(cfg: &ExperimentConfig, label: &str) -> Outcome {
    let rep = match run_convergence_with(cfg, 1) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("{label}: {e}")),
    };
    let failed = rep.rows.iter().filter(|r| !r.is_ok()).count();
    let unconverged = rep.rows.iter().filter(|r| r.metrics.as_ref().is_some_and(|m| !m.converged)).count();
    let med: Vec<f64> = rep.series_for(Method::Mor).iter().map(|p| p.median_rel_error.unwrap_or(f64::NAN)).collect();
    let ok = failed == 0 && unconverged == 0 && med.len() == cfg.n_list.len() && decreasing(&med);
    outcome(ok, format!("{label}: median rel error {}, {failed} failed, {unconverged} unconverged", sci(&med)))
}

fn end_to_end() -> Outcome {
    let stokes = ExperimentConfig::default();
    let ns = ExperimentConfig { advection: true, nu_factor: Some(2.0), ..ExperimentConfig::default() };
    both(trend(&stokes, "Stokes"), trend(&ns, "Navier-Stokes at 2 nu0"))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "closed-form Stokes solution", Duration::from_secs(10), closed_form),
        (2, "drag law", Duration::from_secs(1), drag),
        (3, "coefficient asymptotics", Duration::from_secs(1), coefficient_asymptotics),
        (4, "interaction integral", Duration::from_secs(1), interaction),
        (5, "corrector norms", Duration::from_secs(5), corrector_norms),
        (6, "surface-measure limits", Duration::from_secs(120), surface_measures),
        (7, "auxiliary fields", Duration::from_secs(60), appendix_apparatus),
        (8, "limit-equation pairings", Duration::from_secs(120), limit_pairings),
        (9, "solver verification", Duration::from_secs(300), solver_verification),
        (10, "reflections vs penalized grid", Duration::from_secs(600), cross_solver),
        (11, "end-to-end convergence", Duration::from_secs(1800), end_to_end),
    ];
    let mut failed = BTreeSet::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let passed = o.passed && took <= budget;
        if !passed {
            failed.insert(id);
        }
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} {name} ({:.2} s, budget {} s): {}", took.as_secs_f64(), budget.as_secs(), o.detail);
    }
    let expected: BTreeSet<u32> = EXPECTED_FAILURES.into_iter().collect();
    if failed == expected {
        println!("failing criteria {failed:?} match the expected set");
        ExitCode::SUCCESS
    } else {
        println!("failing criteria {failed:?}, expected {expected:?}");
        ExitCode::FAILURE
    }
}
