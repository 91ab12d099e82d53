//! `affine2f` — experiment runner for the two-factor affine model.
//!
//! Every subcommand resolves its configuration from defaults, an optional
//! `key = value` config file, and flag overrides (flags win), validates the
//! model parameters once, prints a one-line summary carrying the config
//! hash, and exits 0 on success, 2 on validation errors, 3 on numerical
//! failures, 1 on a failed selftest.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use affine2f::ergodicity::{ergodic_report, mixing_decay};
use affine2f::generator::lyapunov_drift_check;
use affine2f::model::{LambdaPair, State};
use affine2f::riccati::{stationary_exponent, transform_exponent};
use affine2f::sampler::{simulate_joint, InitialCondition, PathGrid};
use affine2f::stationary::{cir_transition_density, MomentTable};
use affine2f::{selftest, Error};
use clap::{Parser, Subcommand};

use config::Settings;
use output::{emit, ensemble_binary, ensemble_csv, g17, json_envelope};

#[derive(Parser)]
#[command(name = "affine2f", version, about = "Two-factor affine model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Plain `key = value` config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Drift constant of Y (must be positive).
    #[arg(long, global = true, allow_negative_numbers = true)]
    a: Option<String>,
    /// Mean-reversion rate of Y.
    #[arg(long, global = true, allow_negative_numbers = true)]
    b: Option<String>,
    /// Drift constant of X.
    #[arg(long, global = true, allow_negative_numbers = true)]
    m: Option<String>,
    /// Mean-reversion rate of X.
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta: Option<String>,
    /// Stability index in (1, 2].
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<String>,

    /// Master seed (mandatory for stochastic tasks).
    #[arg(long, global = true, allow_negative_numbers = true)]
    seed: Option<String>,
    /// Number of simulated paths.
    #[arg(long, global = true, allow_negative_numbers = true)]
    n_paths: Option<String>,
    /// Time horizon.
    #[arg(long, global = true, allow_negative_numbers = true)]
    t_end: Option<String>,
    /// Number of uniform grid steps.
    #[arg(long, global = true, allow_negative_numbers = true)]
    n_steps: Option<String>,
    /// Y discretization: exact (alpha = 2 only) or euler.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Solver tolerance for transform-type tasks.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol: Option<String>,
    /// Worker thread cap (fallback: AFFINE2F_THREADS).
    #[arg(long, global = true, allow_negative_numbers = true)]
    threads: Option<String>,

    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    output: Option<String>,
    /// Output format: csv | json | bin (simulate), csv | json (density).
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a (Y, X) path ensemble.
    Simulate {
        /// Initial Y (default 1).
        #[arg(long, allow_negative_numbers = true)]
        y0: Option<String>,
        /// Initial X (default 0).
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<String>,
        /// Draw Y_0 from its stationary Gamma(2a, 2b) law instead.
        #[arg(long)]
        stationary_init: bool,
    },
    /// Conditional Fourier–Laplace transform exponent at a fixed time.
    Transform {
        #[arg(long, allow_negative_numbers = true)]
        lambda1: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        lambda2: Option<String>,
        /// Evaluation time (default 1).
        #[arg(long, allow_negative_numbers = true)]
        t: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        y0: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<String>,
    },
    /// Stationary Fourier–Laplace transform (requires b > 0, theta > 0).
    #[command(name = "stationary-cf")]
    StationaryCf {
        #[arg(long, allow_negative_numbers = true)]
        lambda1: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        lambda2: Option<String>,
    },
    /// Exact stationary mixed moments E(Y^n X^p) up to a total order.
    Moments {
        #[arg(long)]
        max_order: Option<String>,
    },
    /// CIR transition density of Y_t given Y_0 = y0 on a y-grid (alpha = 2).
    Density {
        #[arg(long, allow_negative_numbers = true)]
        y0: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        t: Option<String>,
        #[arg(long)]
        y_min: Option<String>,
        #[arg(long)]
        y_max: Option<String>,
        #[arg(long)]
        points: Option<String>,
        #[arg(long)]
        series_tol: Option<String>,
    },
    /// Birkhoff time averages of y^n x^p against stationary targets.
    Ergodic {
        #[arg(long)]
        f_n: Option<String>,
        #[arg(long)]
        f_p: Option<String>,
        #[arg(long)]
        dt: Option<String>,
        #[arg(long)]
        replicas: Option<String>,
    },
    /// Transient-moment decay curves and fitted mixing rate.
    Mixing {
        #[arg(long)]
        g_n: Option<String>,
        #[arg(long)]
        g_p: Option<String>,
        /// Number of output times.
        #[arg(long)]
        points: Option<String>,
        #[arg(long)]
        dt: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        y0: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<String>,
    },
    /// Foster–Lyapunov drift inequality check on a state grid.
    #[command(name = "drift-check")]
    DriftCheck {
        #[arg(long, allow_negative_numbers = true)]
        c1: Option<String>,
        /// Drift rate c in (0, 2 min(b, theta)); default min(b, theta).
        #[arg(long)]
        c: Option<String>,
        #[arg(long)]
        grid_n: Option<String>,
        #[arg(long)]
        y_max: Option<String>,
        #[arg(long)]
        x_max: Option<String>,
    },
    /// Run the built-in acceptance suite.
    Selftest {
        /// Run a single criterion (1..=12).
        #[arg(long)]
        only: Option<u32>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Transform { .. } => "transform",
            Command::StationaryCf { .. } => "stationary-cf",
            Command::Moments { .. } => "moments",
            Command::Density { .. } => "density",
            Command::Ergodic { .. } => "ergodic",
            Command::Mixing { .. } => "mixing",
            Command::DriftCheck { .. } => "drift-check",
            Command::Selftest { .. } => "selftest",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Error::Invalid(msg)) => {
            eprintln!("affine2f: validation error: {msg}");
            ExitCode::from(2)
        }
        Err(Error::Numerical(msg)) => {
            eprintln!("affine2f: numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn collect_settings(cli: &Cli) -> affine2f::Result<Settings> {
    let mut settings = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    settings.override_with("a", cli.a.clone());
    settings.override_with("b", cli.b.clone());
    settings.override_with("m", cli.m.clone());
    settings.override_with("theta", cli.theta.clone());
    settings.override_with("alpha", cli.alpha.clone());
    settings.override_with("seed", cli.seed.clone());
    settings.override_with("n_paths", cli.n_paths.clone());
    settings.override_with("t_end", cli.t_end.clone());
    settings.override_with("n_steps", cli.n_steps.clone());
    settings.override_with("scheme", cli.scheme.clone());
    settings.override_with("tol", cli.tol.clone());
    settings.override_with("threads", cli.threads.clone());
    settings.override_with("output", cli.output.clone());
    settings.override_with("format", cli.format.clone());

    match &cli.command {
        Command::Simulate {
            y0,
            x0,
            stationary_init,
        } => {
            settings.override_with("y0", y0.clone());
            settings.override_with("x0", x0.clone());
            if *stationary_init {
                settings.override_with("stationary_init", Some("true".into()));
            }
        }
        Command::Transform {
            lambda1,
            lambda2,
            t,
            y0,
            x0,
        } => {
            settings.override_with("lambda1", lambda1.clone());
            settings.override_with("lambda2", lambda2.clone());
            settings.override_with("t", t.clone());
            settings.override_with("y0", y0.clone());
            settings.override_with("x0", x0.clone());
        }
        Command::StationaryCf { lambda1, lambda2 } => {
            settings.override_with("lambda1", lambda1.clone());
            settings.override_with("lambda2", lambda2.clone());
        }
        Command::Moments { max_order } => {
            settings.override_with("max_order", max_order.clone());
        }
        Command::Density {
            y0,
            t,
            y_min,
            y_max,
            points,
            series_tol,
        } => {
            settings.override_with("y0", y0.clone());
            settings.override_with("t", t.clone());
            settings.override_with("y_min", y_min.clone());
            settings.override_with("y_max", y_max.clone());
            settings.override_with("points", points.clone());
            settings.override_with("series_tol", series_tol.clone());
        }
        Command::Ergodic {
            f_n,
            f_p,
            dt,
            replicas,
        } => {
            settings.override_with("f_n", f_n.clone());
            settings.override_with("f_p", f_p.clone());
            settings.override_with("dt", dt.clone());
            settings.override_with("replicas", replicas.clone());
        }
        Command::Mixing {
            g_n,
            g_p,
            points,
            dt,
            y0,
            x0,
        } => {
            settings.override_with("g_n", g_n.clone());
            settings.override_with("g_p", g_p.clone());
            settings.override_with("points", points.clone());
            settings.override_with("dt", dt.clone());
            settings.override_with("y0", y0.clone());
            settings.override_with("x0", x0.clone());
        }
        Command::DriftCheck {
            c1,
            c,
            grid_n,
            y_max,
            x_max,
        } => {
            settings.override_with("c1", c1.clone());
            settings.override_with("c", c.clone());
            settings.override_with("grid_n", grid_n.clone());
            settings.override_with("y_max", y_max.clone());
            settings.override_with("x_max", x_max.clone());
        }
        Command::Selftest { .. } => {}
    }
    Ok(settings)
}

fn run(cli: Cli) -> affine2f::Result<ExitCode> {
    let settings = collect_settings(&cli)?;
    if let Some(n) = settings.threads()? {
        // ignore the error if a pool already exists (e.g. repeated calls in tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let command_name = cli.command.name();
    let hash = settings.config_hash(command_name);
    let output_path = settings.get("output").map(PathBuf::from);
    let format = settings.get("format").unwrap_or(match cli.command {
        Command::Simulate { .. } | Command::Density { .. } => "csv",
        _ => "json",
    });

    let written = match &cli.command {
        Command::Simulate { .. } => {
            let params = settings.params()?;
            let seed = settings.seed()?;
            let grid = PathGrid::new(settings.f64("t_end", 1.0)?, settings.usize("n_steps", 100)?)?;
            let n_paths = settings.usize("n_paths", 100)?;
            let scheme = settings.scheme(&params)?;
            let init = if settings.get("stationary_init") == Some("true") {
                InitialCondition::StationaryY {
                    x0: settings.f64("x0", 0.0)?,
                }
            } else {
                InitialCondition::Fixed(State::new(
                    settings.f64("y0", 1.0)?,
                    settings.f64("x0", 0.0)?,
                )?)
            };
            let ensemble = simulate_joint(seed, &init, &grid, n_paths, scheme, &params)?;
            match format {
                "csv" => emit(
                    output_path.as_deref(),
                    ensemble_csv(&ensemble, &hash).as_bytes(),
                )?,
                "bin" => emit(output_path.as_deref(), &ensemble_binary(&ensemble, &hash))?,
                "json" => {
                    let payload = serde_json::json!({
                        "seed": seed,
                        "scheme": ensemble.scheme,
                        "times": grid.times(),
                        "y": ensemble.y,
                        "x": ensemble.x,
                    });
                    emit_json(
                        output_path.as_deref(),
                        command_name,
                        &hash,
                        &params,
                        payload,
                    )?
                }
                other => return Err(Error::invalid(format!("unknown format '{other}'"))),
            }
        }
        Command::Transform { .. } => {
            let params = settings.params()?;
            let lambda =
                LambdaPair::new(settings.f64("lambda1", 1.0)?, settings.f64("lambda2", 0.0)?)?;
            let initial = State::new(settings.f64("y0", 1.0)?, settings.f64("x0", 0.0)?)?;
            let t = settings.f64("t", 1.0)?;
            let exponent =
                transform_exponent(&lambda, t, &initial, settings.f64("tol", 1e-10)?, &params)?;
            let value = exponent.exp();
            let payload = serde_json::json!({
                "lambda1": lambda.lambda1(), "lambda2": lambda.lambda2(),
                "t": t, "y0": initial.y(), "x0": initial.x(),
                "exponent_re": exponent.re, "exponent_im": exponent.im,
                "value_re": value.re, "value_im": value.im,
                "modulus": value.norm(),
            });
            emit_json(
                output_path.as_deref(),
                command_name,
                &hash,
                &params,
                payload,
            )?
        }
        Command::StationaryCf { .. } => {
            let params = settings.params()?;
            let lambda =
                LambdaPair::new(settings.f64("lambda1", 1.0)?, settings.f64("lambda2", 0.0)?)?;
            let exponent = stationary_exponent(&lambda, settings.f64("tol", 1e-9)?, &params)?;
            let value = exponent.exp();
            let payload = serde_json::json!({
                "lambda1": lambda.lambda1(), "lambda2": lambda.lambda2(),
                "exponent_re": exponent.re, "exponent_im": exponent.im,
                "value_re": value.re, "value_im": value.im,
                "modulus": value.norm(),
            });
            emit_json(
                output_path.as_deref(),
                command_name,
                &hash,
                &params,
                payload,
            )?
        }
        Command::Moments { .. } => {
            let params = settings.params()?;
            let table = MomentTable::new(settings.u32("max_order", 3)?, &params)?;
            let payload = serde_json::to_value(&table)
                .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
            emit_json(
                output_path.as_deref(),
                command_name,
                &hash,
                &params,
                payload,
            )?
        }
        Command::Density { .. } => {
            let params = settings.params()?;
            let y0 = settings.f64("y0", 0.0)?;
            let t = settings.f64("t", 1.0)?;
            let y_min = settings.f64("y_min", 0.01)?;
            let y_max = settings.f64("y_max", 10.0)?;
            let points = settings.usize("points", 200)?;
            let series_tol = settings.f64("series_tol", 1e-12)?;
            if points < 2 || y_min <= 0.0 || y_max <= y_min {
                return Err(Error::invalid("need points >= 2 and 0 < y_min < y_max"));
            }
            let grid: Vec<f64> = (0..points)
                .map(|k| y_min + (y_max - y_min) * k as f64 / (points - 1) as f64)
                .collect();
            let density: Vec<f64> = grid
                .iter()
                .map(|y| cir_transition_density(*y, y0, t, &params, series_tol))
                .collect::<affine2f::Result<_>>()?;
            match format {
                "csv" => {
                    let mut text = format!("# config_hash={hash}\ny,density\n");
                    for (y, d) in grid.iter().zip(&density) {
                        text.push_str(&format!("{},{}\n", g17(*y), g17(*d)));
                    }
                    emit(output_path.as_deref(), text.as_bytes())?
                }
                "json" => {
                    let payload = serde_json::json!({
                        "y0": y0, "t": t, "y": grid, "density": density,
                    });
                    emit_json(
                        output_path.as_deref(),
                        command_name,
                        &hash,
                        &params,
                        payload,
                    )?
                }
                other => return Err(Error::invalid(format!("unknown format '{other}'"))),
            }
        }
        Command::Ergodic { .. } => {
            let params = settings.params()?;
            let report = ergodic_report(
                &params,
                settings.u32("f_n", 1)?,
                settings.u32("f_p", 0)?,
                settings.f64("t_end", 200.0)?,
                settings.f64("dt", 0.01)?,
                settings.usize("replicas", 32)?,
                settings.seed()?,
            )?;
            let mut payload = serde_json::to_value(&report)
                .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
            if !params.is_diffusion() {
                payload["note"] =
                    serde_json::json!("exploratory: no ergodic theorem is asserted for alpha < 2");
            }
            emit_json(
                output_path.as_deref(),
                command_name,
                &hash,
                &params,
                payload,
            )?
        }
        Command::Mixing { .. } => {
            let params = settings.params()?;
            let init = State::new(settings.f64("y0", 5.0)?, settings.f64("x0", 0.0)?)?;
            let curve = mixing_decay(
                &params,
                settings.u32("g_n", 1)?,
                settings.u32("g_p", 0)?,
                settings.f64("t_end", 5.0)?,
                settings.usize("points", 20)?,
                settings.f64("dt", 0.05)?,
                settings.usize("n_paths", 200)?,
                &init,
                settings.seed()?,
            )?;
            let payload = serde_json::to_value(&curve)
                .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
            emit_json(
                output_path.as_deref(),
                command_name,
                &hash,
                &params,
                payload,
            )?
        }
        Command::DriftCheck { .. } => {
            let params = settings.params()?;
            let c_default = params.b().min(params.theta());
            let c1 = settings.f64("c1", 0.0)?;
            let c = settings.f64("c", c_default)?;
            let grid_n = settings.usize("grid_n", 50)?.max(2);
            let y_max = settings.f64("y_max", 20.0)?;
            let x_max = settings.f64("x_max", 20.0)?;
            let mut grid = Vec::with_capacity(grid_n * grid_n);
            for i in 0..grid_n {
                for j in 0..grid_n {
                    grid.push(State::new(
                        y_max * i as f64 / (grid_n - 1) as f64,
                        -x_max + 2.0 * x_max * j as f64 / (grid_n - 1) as f64,
                    )?);
                }
            }
            let report = lyapunov_drift_check(c1, c, &grid, &params)?;
            let satisfied = report.satisfied();
            let mut payload = serde_json::to_value(&report)
                .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
            payload["satisfied"] = serde_json::json!(satisfied);
            emit_json(
                output_path.as_deref(),
                command_name,
                &hash,
                &params,
                payload,
            )?
        }
        Command::Selftest { only } => {
            let results = match only {
                None => selftest::run_all(),
                Some(id) => vec![selftest::run_one(*id)
                    .ok_or_else(|| Error::invalid(format!("no criterion {id} (valid: 1..=12)")))?],
            };
            for r in &results {
                println!("{}", r.line());
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            eprintln!(
                "affine2f selftest: {}/{} criteria passed, config={hash}",
                results.len() - failed,
                results.len()
            );
            return Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
    };

    match written {
        Some(path) => eprintln!("affine2f {command_name}: ok config={hash} wrote {path}"),
        None => eprintln!("affine2f {command_name}: ok config={hash}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn emit_json(
    path: Option<&std::path::Path>,
    command: &str,
    hash: &str,
    params: &affine2f::ModelParams,
    payload: serde_json::Value,
) -> affine2f::Result<Option<String>> {
    let envelope = json_envelope(command, hash, params, payload);
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
    text.push('\n');
    emit(path, text.as_bytes())
}
