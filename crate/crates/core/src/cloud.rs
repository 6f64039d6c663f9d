//! Particle configurations: generation on a jittered quantile lattice of a
//! target density, validation of the separation hypotheses, moment pairings
//! and file formats.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::fields::{MomentField, VectorField};
use crate::quadrature::BoxRule;
use crate::spatial::BucketIndex;
use crate::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub x: Vector,
    pub v: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    pub eps: f64,
    pub domain: BoxDomain,
    pub particles: Vec<Particle>,
}

impl ParticleCloud {
    /// Cloud with the mean-field radius `ε = 1/N`.
    pub fn new(domain: BoxDomain, particles: Vec<Particle>) -> Self {
        let eps = if particles.is_empty() { 0.0 } else { 1.0 / particles.len() as f64 };
        ParticleCloud { eps, domain, particles }
    }

    pub fn empty(domain: BoxDomain) -> Self {
        ParticleCloud::new(domain, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Annulus outer radius `ε^{1/3}`.
    pub fn r_eps(&self) -> f64 {
        self.eps.cbrt()
    }

    pub fn centers(&self) -> Vec<Vector> {
        self.particles.iter().map(|p| p.x).collect()
    }

    /// Index over centers with query radius up to `ε^{1/3}`.
    pub fn index(&self) -> BucketIndex {
        BucketIndex::new(&self.centers(), self.r_eps().max(f64::MIN_POSITIVE))
    }

    /// `(1/N) Σ |v_k|² / 2`.
    pub fn kinetic_energy(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.particles.iter().map(|p| 0.5 * p.v.norm_sq()).sum::<f64>() / self.len() as f64
    }

    pub fn mean_velocity(&self) -> Vector {
        if self.is_empty() {
            return Vector::zero();
        }
        let mut s = Vector::zero();
        for p in &self.particles {
            s += p.v;
        }
        s / self.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// One particle per line, `x y z vx vy vz`, after a `# eps=<value>` header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# eps={}\n", self.eps);
        let (c, l) = (self.domain.corner, self.domain.sides);
        let _ = writeln!(s, "# domain corner={} {} {} sides={} {} {}", c.x, c.y, c.z, l.x, l.y, l.z);
        for p in &self.particles {
            let _ = writeln!(s, "{} {} {} {} {} {}", p.x.x, p.x.y, p.x.z, p.v.x, p.v.y, p.v.z);
        }
        s
    }

    /// Parses the text format; a missing domain line means the default box.
    pub fn from_text(s: &str) -> Result<Self> {
        let mut eps = None;
        let mut domain = BoxDomain::default();
        let mut particles = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("eps=") {
                    eps = Some(parse_f64(v.trim(), lineno)?);
                } else if let Some(d) = rest.strip_prefix("domain") {
                    domain = parse_domain(d, lineno)?;
                }
                continue;
            }
            let vals: Vec<f64> = line.split_whitespace().map(|t| parse_f64(t, lineno)).collect::<Result<_>>()?;
            if vals.len() != 6 {
                return Err(Error::Format(format!("line {}: expected 6 numbers, got {}", lineno + 1, vals.len())));
            }
            particles.push(Particle {
                x: Vector::new(vals[0], vals[1], vals[2]),
                v: Vector::new(vals[3], vals[4], vals[5]),
            });
        }
        let eps = eps.ok_or_else(|| Error::Format("missing '# eps=<value>' header".into()))?;
        Ok(ParticleCloud { eps, domain, particles })
    }

    /// Writes JSON for `.json` paths and the text format otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        let body = if is_json(path) { self.to_json()? } else { self.to_text() };
        std::fs::write(path, body)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        if is_json(path) {
            Self::from_json(&s)
        } else {
            Self::from_text(&s)
        }
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_f64(t: &str, lineno: usize) -> Result<f64> {
    t.parse().map_err(|_| Error::Format(format!("line {}: bad number '{t}'", lineno + 1)))
}

fn parse_domain(d: &str, lineno: usize) -> Result<BoxDomain> {
    let grab = |key: &str| -> Result<Vector> {
        let start = d.find(key).ok_or_else(|| Error::Format(format!("line {}: missing {key}", lineno + 1)))?;
        let vals: Vec<f64> = d[start + key.len()..]
            .split_whitespace()
            .take(3)
            .map(|t| parse_f64(t, lineno))
            .collect::<Result<_>>()?;
        if vals.len() != 3 {
            return Err(Error::Format(format!("line {}: {key} needs 3 numbers", lineno + 1)));
        }
        Ok(Vector::new(vals[0], vals[1], vals[2]))
    };
    Ok(BoxDomain::new(grab("corner=")?, grab("sides=")?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Per-axis displacement bound as a fraction of the local lattice spacing.
    pub jitter: f64,
    /// Uniform per-component bound on added velocity noise.
    pub velocity_noise: f64,
    pub max_retries: usize,
    /// Target pair spacing in units of `ε^{1/3}`.
    pub spacing_factor: f64,
    /// Target wall clearance in units of `ε^{1/3}`.
    pub wall_factor: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { jitter: 0.1, velocity_noise: 0.0, max_retries: 50, spacing_factor: 2.05, wall_factor: 1.025 }
    }
}

/// Per-axis lattice counts with product `≥ n`, as balanced as possible.
fn axis_counts(n: usize) -> [usize; 3] {
    let m = ((n as f64).cbrt().floor() as usize).max(1);
    let m = if (m + 1).pow(3) <= n { m + 1 } else { m };
    if m * m * m >= n {
        return [m; 3];
    }
    for k in 1..=3 {
        let mut c = [m; 3];
        for ck in c.iter_mut().take(k) {
            *ck = m + 1;
        }
        if c.iter().product::<usize>() >= n {
            return c;
        }
    }
    [m + 1; 3]
}

/// Midpoint quantiles `F⁻¹((i + 1/2)/n)` of a one-dimensional density on `[0, len]`.
fn quantiles(profile: impl Fn(f64) -> f64, len: f64, n: usize) -> Vec<f64> {
    const M: usize = 4096;
    let h = len / M as f64;
    let mut cdf = vec![0.0; M + 1];
    for i in 0..M {
        // Simpson on each sub-interval
        let a = i as f64 * h;
        cdf[i + 1] = cdf[i] + h / 6.0 * (profile(a) + 4.0 * profile(a + 0.5 * h) + profile(a + h));
    }
    let total = cdf[M];
    (0..n)
        .map(|i| {
            let target = (i as f64 + 0.5) / n as f64 * total;
            let k = cdf.partition_point(|&c| c < target).clamp(1, M);
            let (c0, c1) = (cdf[k - 1], cdf[k]);
            let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
            (k as f64 - 1.0 + t) * h
        })
        .collect()
}

fn local_spacing(q: &[f64], i: usize, len: f64) -> f64 {
    let left = if i > 0 { q[i] - q[i - 1] } else { f64::INFINITY };
    let right = if i + 1 < q.len() { q[i + 1] - q[i] } else { f64::INFINITY };
    let s = left.min(right);
    if s.is_finite() {
        s
    } else {
        len
    }
}

/// Generates `n` particles on a jittered quantile lattice of `target.rho`.
pub fn generate_cloud(n: usize, domain: BoxDomain, target: &MomentField, jitter: f64, seed: u64) -> Result<ParticleCloud> {
    let cfg = GeneratorConfig { jitter, ..GeneratorConfig::default() };
    generate_cloud_with(n, domain, target, &cfg, seed)
}

pub fn generate_cloud_with(
    n: usize,
    domain: BoxDomain,
    target: &MomentField,
    cfg: &GeneratorConfig,
    seed: u64,
) -> Result<ParticleCloud> {
    if n == 0 {
        return Err(Error::Domain("particle count must be at least 1".into()));
    }
    if !domain.is_valid() {
        return Err(Error::Domain("domain sides must be positive and finite".into()));
    }
    if !(0.0..1.0).contains(&cfg.jitter) {
        return Err(Error::Domain(format!("jitter must lie in [0, 1), got {}", cfg.jitter)));
    }
    let target = MomentField { domain, ..*target };
    let counts = axis_counts(n);
    let q: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            let prof = |s: f64| target.axis_profile(a, s);
            if prof(domain.sides[a] * 0.5).is_none() {
                return Err(Error::Domain("target density is identically zero".into()));
            }
            Ok(quantiles(|s| prof(s).unwrap_or(0.0), domain.sides[a], counts[a]))
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = counts.iter().product();
    let mut chosen: Vec<usize> = (0..total).collect();
    chosen.shuffle(&mut rng);
    chosen.truncate(n);
    chosen.sort_unstable();

    let eps = 1.0 / n as f64;
    let r_eps = eps.cbrt();
    let min_pair = cfg.spacing_factor * r_eps;
    let min_wall = cfg.wall_factor * r_eps;
    let ok_wall = |x: Vector| domain.distance_to_boundary(x) >= min_wall;
    let mut accepted: Vec<Vector> = Vec::with_capacity(n);
    let ok_pair = |x: Vector, acc: &[Vector]| acc.iter().all(|y| (x - *y).norm() >= min_pair);

    for &idx in &chosen {
        let ijk = [idx % counts[0], (idx / counts[0]) % counts[1], idx / (counts[0] * counts[1])];
        let base = Vector::new(
            domain.corner.x + q[0][ijk[0]],
            domain.corner.y + q[1][ijk[1]],
            domain.corner.z + q[2][ijk[2]],
        );
        let spacing = Vector::new(
            local_spacing(&q[0], ijk[0], domain.sides.x),
            local_spacing(&q[1], ijk[1], domain.sides.y),
            local_spacing(&q[2], ijk[2], domain.sides.z),
        );
        let mut placed = None;
        if cfg.jitter > 0.0 {
            for _ in 0..cfg.max_retries {
                let d = Vector::new(
                    rng.random_range(-1.0..=1.0),
                    rng.random_range(-1.0..=1.0),
                    rng.random_range(-1.0..=1.0),
                );
                let x = base + d.hadamard(spacing) * (0.5 * cfg.jitter);
                if ok_wall(x) && ok_pair(x, &accepted) {
                    placed = Some(x);
                    break;
                }
            }
        }
        let x = match placed {
            Some(x) => x,
            None if !ok_wall(base) => {
                return Err(Error::Packing(format!(
                    "wall clearance: lattice site {:?} is {:.4} from the wall, need {:.4}",
                    base.to_array(),
                    domain.distance_to_boundary(base),
                    min_wall
                )))
            }
            None if !ok_pair(base, &accepted) => {
                let d = accepted.iter().map(|y| (base - *y).norm()).fold(f64::INFINITY, f64::min);
                return Err(Error::Packing(format!(
                    "pair separation: lattice spacing {d:.4} is below the target {min_pair:.4}"
                )));
            }
            None => base,
        };
        accepted.push(x);
    }

    let mut particles = Vec::with_capacity(n);
    for x in accepted {
        if !(target.rho(x) > 0.0) {
            return Err(Error::Domain(format!("target density vanishes at {:?}", x.to_array())));
        }
        let mut v = target.mean_velocity(x);
        if cfg.velocity_noise > 0.0 {
            let b = cfg.velocity_noise;
            v += Vector::new(rng.random_range(-b..=b), rng.random_range(-b..=b), rng.random_range(-b..=b));
        }
        particles.push(Particle { x, v });
    }
    let cloud = ParticleCloud { eps, domain, particles };
    debug_assert!(validate_cloud(&cloud).passed());
    Ok(cloud)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub passed: bool,
    pub value: f64,
    pub required: f64,
    /// `value − required` for lower bounds, `required − value` for upper bounds.
    pub margin: f64,
    /// Worst offending particle indices (a pair for separation).
    pub worst: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub mean_field: ConditionCheck,
    pub separation: ConditionCheck,
    pub wall: ConditionCheck,
    pub energy: ConditionCheck,
    pub finite: bool,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.finite && self.mean_field.passed && self.separation.passed && self.wall.passed && self.energy.passed
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if !self.finite {
            f.push("finite");
        }
        for (name, c) in [
            ("mean_field", &self.mean_field),
            ("separation", &self.separation),
            ("wall", &self.wall),
            ("energy", &self.energy),
        ] {
            if !c.passed {
                f.push(name);
            }
        }
        f
    }
}

pub const DEFAULT_ENERGY_BOUND: f64 = 10.0;

pub fn validate_cloud(cloud: &ParticleCloud) -> ValidityReport {
    validate_cloud_with(cloud, DEFAULT_ENERGY_BOUND)
}

/// Checks `Nε = 1`, pair distances `> 2ε^{1/3}`, wall distance `> ε^{1/3}` and
/// the kinetic-energy bound, all as strict inequalities.
pub fn validate_cloud_with(cloud: &ParticleCloud, energy_bound: f64) -> ValidityReport {
    let n = cloud.len();
    let r_eps = cloud.r_eps();
    let nf = n as f64 * cloud.eps;
    let mean_field = ConditionCheck {
        passed: n == 0 || (nf - 1.0).abs() <= 1e-12,
        value: nf,
        required: 1.0,
        margin: -(nf - 1.0).abs(),
        worst: vec![],
    };
    let (mut dmin, mut pair) = (f64::INFINITY, vec![]);
    for i in 0..n {
        for j in i + 1..n {
            let d = (cloud.particles[i].x - cloud.particles[j].x).norm();
            if d < dmin {
                dmin = d;
                pair = vec![i, j];
            }
        }
    }
    let separation = ConditionCheck {
        passed: dmin > 2.0 * r_eps,
        value: dmin,
        required: 2.0 * r_eps,
        margin: dmin - 2.0 * r_eps,
        worst: pair,
    };
    let (mut wmin, mut wworst) = (f64::INFINITY, vec![]);
    for (i, p) in cloud.particles.iter().enumerate() {
        let d = cloud.domain.distance_to_boundary(p.x);
        if d < wmin {
            wmin = d;
            wworst = vec![i];
        }
    }
    let wall = ConditionCheck { passed: wmin > r_eps, value: wmin, required: r_eps, margin: wmin - r_eps, worst: wworst };
    let e = cloud.kinetic_energy();
    let (mut emax, mut eworst) = (0.0, vec![]);
    for (i, p) in cloud.particles.iter().enumerate() {
        if p.v.norm_sq() > emax {
            emax = p.v.norm_sq();
            eworst = vec![i];
        }
    }
    let energy = ConditionCheck { passed: e <= energy_bound, value: e, required: energy_bound, margin: energy_bound - e, worst: eworst };
    let finite = cloud.eps.is_finite() && cloud.particles.iter().all(|p| p.x.is_finite() && p.v.is_finite());
    ValidityReport { mean_field, separation, wall, energy, finite }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentPairing {
    /// `(1/N) Σ φ(x_k)`, componentwise.
    pub rho_pairing: Vector,
    /// `(1/N) Σ v_k · φ(x_k)`.
    pub j_pairing: f64,
}

pub fn pair_moments(cloud: &ParticleCloud, phi: &impl VectorField) -> MomentPairing {
    if cloud.is_empty() {
        return MomentPairing { rho_pairing: Vector::zero(), j_pairing: 0.0 };
    }
    let mut r = Vector::zero();
    let mut j = 0.0;
    for p in &cloud.particles {
        let f = phi.eval(p.x);
        r += f;
        j += p.v.dot(f);
    }
    let inv = 1.0 / cloud.len() as f64;
    MomentPairing { rho_pairing: r * inv, j_pairing: j * inv }
}

/// Limits `∫ρφ` and `∫j·φ` by tensor Gauss–Legendre quadrature.
pub fn reference_moments(target: &MomentField, phi: &impl VectorField, cells: usize, order: usize) -> MomentPairing {
    let rule = BoxRule::new(target.domain.corner, target.domain.sides, [cells; 3], order);
    MomentPairing {
        rho_pairing: rule.integrate_vec(|x| phi.eval(x) * target.rho(x)),
        j_pairing: rule.integrate(|x| target.j(x).dot(phi.eval(x))),
    }
}
