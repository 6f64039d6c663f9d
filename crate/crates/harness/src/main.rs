use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use bll_harness::config::ExperimentConfig;
use bll_harness::{emit_report, load_report, run_convergence_with, run_formula_suite, Fault, HarnessError, ReportFormat};
use brinkman_core::cloud::{generate_cloud_with, ParticleCloud};
use brinkman_core::fields::{DensityPreset, Forcing, ForcingPreset, MomentField, VelocityPreset};
use brinkman_core::grid::{io, solve_brinkman, solve_perforated, BrinkmanProblem, GridLayout, SolverConfig};
use brinkman_core::reflections::{solve_mor, Background, MorOptions};
use brinkman_core::Vector;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bll", version, about = "Brinkman-limit verification and convergence runs")]
struct Cli {
    /// Output root; defaults to $BLL_OUT, then ./bll-out.
    #[arg(long, global = true, env = "BLL_OUT")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the formula-verification suite.
    Verify {
        /// Multiply δ₁ by 1 + REL in the coefficients under test.
        #[arg(long, value_name = "REL")]
        fault_delta1: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Generate a particle cloud with the default moment presets.
    GenCloud {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `.json` for JSON, anything else for the text format.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = RhoArg::Tapered)]
        rho: RhoArg,
        #[arg(long, value_enum, default_value_t = JArg::Constant)]
        j: JArg,
    },
    /// Solve the perforated problem for a stored cloud.
    Solve {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Mor)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = GArg::Tapered)]
        g: GArg,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// Cells per side of the reflection background grid.
        #[arg(long, default_value_t = 32)]
        cells: usize,
    },
    /// Solve the Brinkman limit problem.
    Limit {
        #[arg(long, value_enum, default_value_t = RhoArg::Tapered)]
        rho: RhoArg,
        #[arg(long, value_enum, default_value_t = JArg::Constant)]
        j: JArg,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, value_enum, default_value_t = GArg::Tapered)]
        g: GArg,
        #[arg(long)]
        advection: bool,
        #[arg(long, default_value_t = 40)]
        cells: usize,
    },
    /// Run the convergence experiment and write the report.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Worker budget; defaults to $BLL_WORKERS, then the core count.
        #[arg(long, env = "BLL_WORKERS")]
        workers: Option<usize>,
    },
    /// Re-emit a stored JSON report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::All)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RhoArg {
    Zero,
    Uniform,
    Tapered,
}

#[derive(Clone, Copy, ValueEnum)]
enum JArg {
    Zero,
    Constant,
    Shear,
}

#[derive(Clone, Copy, ValueEnum)]
enum GArg {
    Zero,
    Constant,
    Tapered,
    Bump,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mor,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    All,
}

const E_Z: Vector = Vector { x: 0.0, y: 0.0, z: 1.0 };

fn density(r: RhoArg) -> DensityPreset {
    match r {
        RhoArg::Zero => DensityPreset::Zero,
        RhoArg::Uniform => DensityPreset::Uniform,
        RhoArg::Tapered => DensityPreset::Tapered { ramp: 0.25 },
    }
}

fn velocity(j: JArg) -> VelocityPreset {
    match j {
        JArg::Zero => VelocityPreset::Zero,
        JArg::Constant => VelocityPreset::Constant { value: E_Z },
        JArg::Shear => VelocityPreset::Shear { amplitude: 1.0 },
    }
}

fn forcing(g: GArg, c: &ExperimentConfig) -> ForcingPreset {
    let down = E_Z * -1.0;
    match g {
        GArg::Zero => ForcingPreset::Zero,
        GArg::Constant => ForcingPreset::Constant { value: down },
        GArg::Tapered => ForcingPreset::Tapered { value: down, ramp: 0.25 },
        GArg::Bump => ForcingPreset::Bump { value: down, center: c.domain.center(), radius: 0.25 * c.domain.sides.x },
    }
}

fn out_root(cli: &Option<PathBuf>) -> PathBuf {
    cli.clone().unwrap_or_else(|| PathBuf::from("bll-out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("bll: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8, HarnessError> {
    let defaults = ExperimentConfig::default();
    match cli.command {
        Command::Verify { fault_delta1, json } => {
            let rep = run_formula_suite(fault_delta1.map(|relative| Fault::Delta1 { relative }));
            if json {
                println!("{}", serde_json::to_string_pretty(&rep)?);
            } else {
                for c in &rep.checks {
                    let tag = if c.passed { "PASS" } else { "FAIL" };
                    println!("{tag} {:<32} {:.3e} {} {:.1e}  {}", c.name, c.value, c.relation, c.bound, c.detail);
                }
                println!("{} of {} checks passed", rep.checks.len() - rep.failures().len(), rep.checks.len());
            }
            Ok(if rep.passed() { 0 } else { 1 })
        }
        Command::GenCloud { n, seed, out, rho, j } => {
            if n == 0 {
                return Err(HarnessError::Config("--n must be at least 1".into()));
            }
            let m = MomentField::new(defaults.domain, density(rho), velocity(j));
            let cloud = if m.is_zero() {
                ParticleCloud { eps: 1.0 / n as f64, ..ParticleCloud::empty(defaults.domain) }
            } else {
                generate_cloud_with(n, defaults.domain, &m, &defaults.generator(), seed)?
            };
            cloud.save(&out)?;
            println!("wrote {} particles (eps = {}) to {}", cloud.len(), cloud.eps, out.display());
            Ok(0)
        }
        Command::Solve { cloud, method, g, nu, cells } => {
            let c = ParticleCloud::load(&cloud).map_err(|e| HarnessError::Config(format!("{}: {e}", cloud.display())))?;
            let g = Forcing::new(c.domain, forcing(g, &defaults));
            let dir = out_root(&cli.out_dir);
            std::fs::create_dir_all(&dir)?;
            match method {
                MethodArg::Mor => {
                    let layout = GridLayout::with_cells(c.domain, cells)?;
                    let opts = MorOptions { nu, grid: SolverConfig::with_h(layout.h), ..MorOptions::default() };
                    let sol = solve_mor(&c, Background::WallCorrected { g: Arc::new(g) }, &opts)?;
                    let path = dir.join("solution.json");
                    std::fs::write(&path, sol.to_json(cloud.to_str())?)?;
                    println!(
                        "mor: {} reflections, converged {}, mismatch {:.3e}, wall {:.3e} -> {}",
                        sol.reflections,
                        sol.converged,
                        sol.mismatch,
                        sol.wall_violation,
                        path.display()
                    );
                }
                MethodArg::Grid => {
                    if nu != 1.0 {
                        return Err(HarnessError::Config("the penalized solver uses unit viscosity".into()));
                    }
                    let side = c.domain.sides.x.min(c.domain.sides.y).min(c.domain.sides.z);
                    let h = side / (4.0 * side / c.eps - 1e-9).ceil();
                    let sol = solve_perforated(&c, &g, &SolverConfig::with_h(h))?;
                    let files = io::save_snapshot(&sol.extended, &dir.join("perforated"))?;
                    println!("grid: h = {h}, mismatch {:.3e}, {} iterations -> {}", sol.mismatch, sol.stats.iterations, files[0].display());
                }
            }
            Ok(0)
        }
        Command::Limit { rho, j, nu, g, advection, cells } => {
            let d = defaults.domain;
            let layout = GridLayout::with_cells(d, cells)?;
            let problem = BrinkmanProblem {
                moments: MomentField::new(d, density(rho), velocity(j)),
                g: Forcing::new(d, forcing(g, &defaults)),
                nu,
                advection,
            };
            let sol = solve_brinkman(&problem, &SolverConfig::with_h(layout.h)).map_err(|e| match e {
                brinkman_core::Error::Precondition(m) => HarnessError::Config(m),
                e => e.into(),
            })?;
            let dir = out_root(&cli.out_dir);
            std::fs::create_dir_all(&dir)?;
            let files = io::save_snapshot(&sol.field, &dir.join("limit"))?;
            println!(
                "limit: |U| = {:.6e}, div {:.2e}, {} Picard steps -> {}",
                sol.field.l2_norm(),
                sol.stats.max_divergence,
                sol.picard_history.len(),
                files[0].display()
            );
            Ok(0)
        }
        Command::Converge { config, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            let workers = match workers {
                Some(0) => return Err(HarnessError::Config("worker budget must be positive".into())),
                Some(w) => w,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            let dir = cli.out_dir.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| out_root(&None));
            let rep = run_convergence_with(&cfg, workers)?;
            let files = emit_report(&rep, &dir, ReportFormat::All)?;
            let failed = rep.rows.iter().filter(|r| !r.is_ok()).count();
            for p in &rep.series {
                println!("{} N={:<4} median rel error {}", p.method.as_str(), p.n, p.median_rel_error.map_or("-".into(), |e| format!("{e:.4e}")));
            }
            println!("{} rows, {failed} failed; wrote {} files to {}", rep.rows.len(), files.len(), dir.display());
            Ok(if failed == 0 { 0 } else { 3 })
        }
        Command::Report { input, format } => {
            let rep = load_report(&input).map_err(|e| HarnessError::Config(format!("{}: {e}", input.display())))?;
            let dir = cli.out_dir.clone().unwrap_or_else(|| input.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
            let format = match format {
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Json => ReportFormat::Json,
                FormatArg::All => ReportFormat::All,
            };
            for p in emit_report(&rep, &dir, format)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
    }
}
