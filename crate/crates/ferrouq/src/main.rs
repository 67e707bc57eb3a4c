//! Command line driver: thin argument handling around the library.
//!
//! Exit codes: 0 success, 1 failed invariant checks, 2 configuration
//! errors, 3 data validation errors, 4 convergence failures.

use clap::{Args, Parser, Subcommand};
use ferrouq::config::{self, RunConfig, StudyKind};
use ferrouq::fem::TriMesh;
use ferrouq::grids::{gauss_legendre, smolyak_grid, tensor_grid};
use ferrouq::kl::{DeltaRule, KlExpansion, KlOptions, Truncation};
use ferrouq::material::MeasuredBhTable;
use ferrouq::solver::{solve_nonlinear, SolveConfig};
use ferrouq::study::{
    self, lshape_law, plaplace_exact, ErrorEstimator, PointProblem, Study, KL_SQUARE_SOURCE,
};
use ferrouq::{io, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "ferrouq",
    about = "Stochastic collocation for 2D magnetostatics with uncertain material laws",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value configuration file.
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable); wins over the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize the random material law and emit its spectrum and samples.
    Kl(ConfigArgs),
    /// Run one deterministic solve at the center of the parameter box.
    Solve(ConfigArgs),
    /// Run a full collocation study and emit its error tables.
    Study(ConfigArgs),
    /// Run the built-in invariant suite.
    Check,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Kl(args) => run(args, cmd_kl),
        Command::Solve(args) => run(args, cmd_solve),
        Command::Study(args) => run(args, cmd_study),
        Command::Check => cmd_check(),
    };
    std::process::exit(code);
}

fn run(args: ConfigArgs, cmd: fn(&RunConfig) -> Result<()>) -> i32 {
    match resolve_config(&args).and_then(|config| cmd(&config)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Capability(_) => 2,
                Error::Data(_) => 3,
                Error::NoConvergence(_) => 4,
            }
        }
    }
}

fn resolve_config(args: &ConfigArgs) -> Result<RunConfig> {
    let file_text = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?),
        None => None,
    };
    let mut overrides = Vec::new();
    for pair in &args.set {
        let (k, v) = pair.split_once('=').ok_or_else(|| {
            Error::Config(format!("--set expects KEY=VALUE, found '{pair}'"))
        })?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let config = config::resolve(file_text.as_deref(), &overrides)?;
    if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(config)
}

fn write_echo(config: &RunConfig) -> Result<()> {
    io::write_text_file(config.out.join("config.echo"), &config.to_echo())
}

fn load_table(config: &RunConfig) -> Result<MeasuredBhTable> {
    match &config.bh_csv {
        Some(path) => io::ingest_bh_csv(path),
        None => Ok(MeasuredBhTable::synthetic(14, config.samples, config.seed)),
    }
}

fn build_kl(config: &RunConfig) -> Result<KlExpansion> {
    let table = load_table(config)?;
    let options = KlOptions {
        correlation_length: config.kl_length,
        dim: config.kl_dim,
        truncation: Truncation::Information(config.kl_info),
        delta: DeltaRule::FractionOfMax(config.kl_delta),
    };
    KlExpansion::from_table(&table, &options)
}

fn build_mesh(config: &RunConfig) -> TriMesh {
    match config.study {
        StudyKind::PLaplace | StudyKind::KlSquare => TriMesh::unit_square(config.mesh_n),
        StudyKind::LShape => {
            let mut mesh = TriMesh::l_shape(2);
            for _ in 1..config.mesh_level {
                mesh = mesh.refine();
            }
            mesh
        }
    }
}

fn solve_settings(config: &RunConfig) -> SolveConfig {
    SolveConfig {
        scheme: config.scheme,
        tol: config.tol,
        max_iter: config.max_iter,
        ..SolveConfig::default()
    }
}

/// Builds the configured study; `source_j` overrides each family's
/// documented default source density.
fn build_study<'m>(config: &RunConfig, mesh: &'m TriMesh) -> Result<Study<'m>> {
    let solve = solve_settings(config);
    const SQRT3: f64 = 1.732_050_807_568_877_2;
    Ok(match config.study {
        StudyKind::PLaplace => match config.source_j {
            None => Study::plaplace(mesh, solve),
            Some(j) => Study::new(mesh, vec![(3.0, 5.0)], solve, move |y| {
                let p = y[0];
                Ok(PointProblem {
                    law: ferrouq::material::MaterialLaw::power(p)?,
                    source: j,
                    boundary: Box::new(move |x, s| plaplace_exact(p, x, s)),
                })
            }),
        },
        StudyKind::LShape => match config.source_j {
            None => Study::lshape(mesh, solve),
            Some(j) => Study::new(mesh, vec![(-SQRT3, SQRT3); 2], solve, move |y| {
                Ok(PointProblem {
                    law: lshape_law(y[0], y[1])?,
                    source: j,
                    boundary: Box::new(|_, _| 0.0),
                })
            }),
        },
        StudyKind::KlSquare => {
            let kl = build_kl(config)?;
            Study::kl_square(mesh, kl, config.source_j.unwrap_or(KL_SQUARE_SOURCE), solve)
        }
    })
}

fn cmd_kl(config: &RunConfig) -> Result<()> {
    let kl = build_kl(config)?;
    write_echo(config)?;
    io::write_spectrum_csv(config.out.join("spectrum.csv"), &kl)?;
    let sqrt3 = 3.0f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ys: Vec<Vec<f64>> = (0..config.draws)
        .map(|_| (0..kl.order()).map(|_| rng.gen_range(-sqrt3..sqrt3)).collect())
        .collect();
    io::write_samples_csv(config.out.join("samples.csv"), &kl, &ys, 1.55, 200)?;
    println!(
        "kl: {} modes keep {:.4} of the spectrum, delta = {:.6} (max {:.6})",
        kl.order(),
        kl.info_content(kl.order()),
        kl.delta(),
        kl.delta_max()
    );
    println!("kl: wrote spectrum.csv and samples.csv to {}", config.out.display());
    Ok(())
}

fn cmd_solve(config: &RunConfig) -> Result<()> {
    let mesh = build_mesh(config);
    let study = build_study(config, &mesh)?;
    let y = center_point(config, &study);
    let problem = study.point_problem(&y)?;
    let source = problem.source;
    let (u, report) = solve_nonlinear(
        &mesh,
        &problem.law,
        |_, _| source,
        &problem.boundary,
        study.solve_config(),
    )?;
    if !report.converged {
        return Err(Error::NoConvergence(format!(
            "solve stopped after {} iterations with increment {:.3e} (tol {:.1e})",
            report.iterations(),
            report.increments.last().copied().unwrap_or(f64::NAN),
            config.tol
        )));
    }
    write_echo(config)?;
    io::write_field_csv(config.out.join("solution.csv"), &mesh, &u)?;
    println!(
        "solve: {} vertices, {} iterations, final residual {:.3e}",
        mesh.n_vertices(),
        report.iterations(),
        report.final_residual
    );
    println!("solve: wrote solution.csv to {}", config.out.display());
    Ok(())
}

fn center_point(config: &RunConfig, study: &Study) -> Vec<f64> {
    match config.study {
        StudyKind::PLaplace => vec![4.0],
        _ => vec![0.0; study.dim()],
    }
}

fn cmd_study(config: &RunConfig) -> Result<()> {
    let mesh = build_mesh(config);
    let study = build_study(config, &mesh)?;
    let estimator = match config.q_ref {
        Some(q_ref) => ErrorEstimator::Reference(q_ref),
        None => ErrorEstimator::Successive,
    };
    let rows = study::run_study(&study, config.grid, config.q_min, config.q_max, estimator)?;
    write_echo(config)?;
    io::emit_study(&config.out, &mesh, &rows)?;
    println!("level,N_q,error,slope_estimate,time_s");
    for r in &rows {
        println!("{},{},{:.6e},{:.3},{:.3}", r.level, r.points, r.error, r.slope, r.time_s);
    }
    println!("study: wrote summary.csv and field CSVs to {}", config.out.display());
    Ok(())
}

fn cmd_check() -> i32 {
    let mut failures = 0usize;
    let mut check = |name: &str, outcome: std::result::Result<(), String>| match outcome {
        Ok(()) => println!("check {name}: ok"),
        Err(why) => {
            failures += 1;
            println!("check {name}: FAILED ({why})");
        }
    };

    check("gauss-exactness", {
        let (x, w) = gauss_legendre(10);
        // Degree 18 and 19 monomials; analytic values 2/19 and 0.
        let even: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
        if (even - 2.0 / 19.0).abs() <= 1e-12 && odd.abs() <= 1e-12 {
            Ok(())
        } else {
            Err(format!("x^18 -> {even}, x^19 -> {odd}"))
        }
    });

    check("tensor-grid-counts", {
        let grid = tensor_grid(6, &[(-1.0, 1.0), (-1.0, 1.0)]);
        let wsum: f64 = grid.weights().iter().sum();
        if grid.len() == 49 && (wsum - 1.0).abs() <= 1e-12 {
            Ok(())
        } else {
            Err(format!("{} points, weight sum {wsum}", grid.len()))
        }
    });

    check("smolyak-weights", {
        let mut bad = None;
        for m in 1..=4 {
            for q in 0..=5 {
                let grid = smolyak_grid(q, &vec![(-1.0, 1.0); m]);
                let wsum: f64 = grid.weights().iter().sum();
                if (wsum - 1.0).abs() > 1e-12 {
                    bad = Some(format!("M={m}, q={q}: weight sum {wsum}"));
                }
            }
        }
        match bad {
            None => Ok(()),
            Some(b) => Err(b),
        }
    });

    check("dirichlet-patch", {
        let mesh = TriMesh::unit_square(8);
        let law = ferrouq::material::MaterialLaw::rational(1.78, 14.0, 6000.0, 245.0).unwrap();
        match solve_nonlinear(&mesh, &law, |_, _| 0.0, |x, _| x, &SolveConfig::default()) {
            Err(e) => Err(e.to_string()),
            Ok((u, _)) => {
                let worst = mesh
                    .vertices()
                    .iter()
                    .zip(&u)
                    .map(|(v, ui)| (ui - v[0]).abs())
                    .fold(0.0f64, f64::max);
                if worst <= 1e-10 {
                    Ok(())
                } else {
                    Err(format!("linear field error {worst:.3e}"))
                }
            }
        }
    });

    check("kl-monotone-sampling", {
        let table = MeasuredBhTable::synthetic(14, 28, 42);
        match KlExpansion::from_table(&table, &KlOptions::default()) {
            Err(e) => Err(e.to_string()),
            Ok(kl) => {
                let sqrt3 = 3.0f64.sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(1);
                let mut bad = 0;
                for _ in 0..200 {
                    let y: Vec<f64> =
                        (0..kl.order()).map(|_| rng.gen_range(-sqrt3..sqrt3)).collect();
                    match kl.sample_law(&y) {
                        Err(_) => bad += 1,
                        Ok(law) => {
                            let probes = 300;
                            for i in 1..=probes {
                                let s0 = 1.6 * (i - 1) as f64 / probes as f64;
                                let s1 = 1.6 * i as f64 / probes as f64;
                                if law.f(s1) < law.f(s0) - 1e-10 {
                                    bad += 1;
                                    break;
                                }
                            }
                        }
                    }
                }
                if bad == 0 {
                    Ok(())
                } else {
                    Err(format!("{bad} of 200 samples rejected or non-monotone"))
                }
            }
        }
    });

    check("friedrichs-constant", {
        match study::friedrichs_constant(&TriMesh::unit_square(16)) {
            Err(e) => Err(e.to_string()),
            Ok(c) => {
                let exact = 1.0 / (2.0 * std::f64::consts::PI.powi(2)).sqrt();
                if (c - exact).abs() <= 0.01 {
                    Ok(())
                } else {
                    Err(format!("{c} vs continuous {exact}"))
                }
            }
        }
    });

    if failures == 0 {
        println!("check: all invariants hold");
        0
    } else {
        println!("check: {failures} invariant(s) FAILED");
        1
    }
}
