//! Command-line front end: enumerate closed orbits, estimate pressure,
//! track equidistribution, and fit large-deviation rates, all driven by a
//! JSON run configuration.

// Config validation writes `!(x > 0.0)` instead of `x <= 0.0` so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use clap::{Parser, Subcommand};
use config::{build_potentials, DirectionConfig, RunConfig, SystemHandle};
use geothermo::engine::{
    constrained_deficit, deviation_rate, equidistribution_report, estimate_pressure,
    fuchsian_basis, symbolic_basis, threshold_predicate, uniform_grid, Direction,
    EquidistReport, GibbsFlowMeasure, MeasureEval,
};
use geothermo::error::Error as CoreError;
use geothermo::orbits::PotentialSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "geothermo", version)]
#[command(about = "Weighted periodic-orbit pressure, equidistribution, and deviation rates")]
struct Cli {
    /// Worker threads for orbit enumeration (0 = all cores).
    #[arg(long, global = true, env = "GEOTHERMO_THREADS", default_value_t = 0)]
    threads: usize,

    /// Output directory (overrides the config's output_dir; default ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the randomized cross-checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write every closed orbit up to the grid's top length, with integrals.
    Enumerate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate pressure from cumulative and windowed orbit log-sums.
    Pressure {
        #[arg(long)]
        config: PathBuf,
    },
    /// Distance from the weighted orbit measures to the equilibrium state.
    Equidist {
        #[arg(long)]
        config: PathBuf,
    },
    /// Decay rate of the weighted mass of a threshold event.
    Deviation {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Message plus process exit code: 2 for configuration or system errors,
/// 3 for grids the orbit data cannot support, 4 for events that never happen.
struct Failure {
    code: u8,
    message: String,
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Failure {
        let code = match &err {
            CoreError::InsufficientGrid(_) | CoreError::EmptyWindow(_) => 3,
            CoreError::EventNeverRealized => 4,
            _ => 2,
        };
        Failure { code, message: err.to_string() }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn main() -> ExitCode {
    env_logger::Builder::from_default_env().format_timestamp(None).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()
        {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config_path = match &cli.command {
        Command::Enumerate { config }
        | Command::Pressure { config }
        | Command::Equidist { config }
        | Command::Deviation { config } => config.clone(),
    };
    let config = RunConfig::load(&config_path).map_err(fail)?;
    let system = config.system.realize()?;
    let (mut set, weight_index) = build_potentials(&config, &system)?;
    let grid = uniform_grid(config.t_grid.start, config.t_grid.stop, config.t_grid.step)?;
    let out_dir =
        cli.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| ".".into());
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| fail(format!("cannot create {}: {e}", out_dir.display())))?;

    match cli.command {
        Command::Enumerate { .. } => cmd_enumerate(&config, &system, &set, &out_dir),
        Command::Pressure { .. } => {
            cmd_pressure(&config, &system, &set, weight_index, &grid, &out_dir)
        }
        Command::Equidist { .. } => {
            cmd_equidist(&config, &system, &mut set, weight_index, &grid, &out_dir)
        }
        Command::Deviation { .. } => {
            cmd_deviation(&config, &system, &set, weight_index, &grid, &out_dir, cli.seed)
        }
    }
}

/// 17 significant digits: parses back to the identical f64.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_cell(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| fail(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| fail(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

fn cmd_enumerate(
    config: &RunConfig,
    system: &SystemHandle,
    set: &PotentialSet,
    out_dir: &Path,
) -> Result<(), Failure> {
    let horizon = config.t_grid.stop;
    let orbits = system.enumerate(horizon, set)?;

    let mut csv = String::from("class,length,primitive");
    for (name, _) in set.iter() {
        csv.push_str(",integral_");
        csv.push_str(name);
    }
    csv.push('\n');
    for orbit in &orbits {
        csv.push_str(&format!(
            "{},{},{}",
            orbit.class(),
            fmt_float(orbit.length()),
            orbit.primitive()
        ));
        for v in orbit.integrals() {
            csv.push(',');
            csv.push_str(&fmt_float(*v));
        }
        csv.push('\n');
    }

    let primitive = orbits.iter().filter(|o| o.primitive()).count();
    println!(
        "{} closed orbits with length <= {} ({} primitive)",
        orbits.len(),
        horizon,
        primitive
    );
    write_text(&out_dir.join("orbits.csv"), &csv)
}

fn cmd_pressure(
    config: &RunConfig,
    system: &SystemHandle,
    set: &PotentialSet,
    weight_index: usize,
    grid: &[f64],
    out_dir: &Path,
) -> Result<(), Failure> {
    let horizon = config.t_grid.stop + config.window;
    let orbits = system.enumerate(horizon, set)?;
    let estimate = estimate_pressure(&orbits, weight_index, grid, config.window)?;

    let weight = set.get(weight_index).expect("weight index is validated");
    let oracle = match system {
        SystemHandle::Shift(shift) => Some(shift.bowen_pressure(weight)?),
        SystemHandle::Schottky(_) => None,
    };
    let gap = oracle.map(|p| (estimate.final_estimate - p).abs());
    let cauchy_spread = (estimate.final_estimate - estimate.window_final).abs();

    let mut csv = String::from("t,cumulative_logsum,window_logsum,slope\n");
    for (i, &t) in estimate.t_grid.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(t),
            fmt_cell(estimate.cumulative_logsums[i]),
            fmt_cell(estimate.window_logsums[i]),
            fmt_cell(estimate.slope_estimates[i]),
        ));
    }
    write_text(&out_dir.join("pressure.csv"), &csv)?;

    let json = serde_json::json!({
        "final": estimate.final_estimate,
        "half_width": estimate.half_width,
        "window_final": estimate.window_final,
        "cauchy_spread": cauchy_spread,
        "oracle": oracle,
        "gap": gap,
    });
    write_json(&out_dir.join("pressure.json"), &json)?;

    println!(
        "pressure {:.6} +/- {:.6}, window cross-check {:.6} (spread {:.3e})",
        estimate.final_estimate, estimate.half_width, estimate.window_final, cauchy_spread
    );
    if let (Some(p), Some(g)) = (oracle, gap) {
        println!("transfer-operator pressure {p:.6}, gap {g:.3e}");
    }
    Ok(())
}

fn cmd_equidist(
    config: &RunConfig,
    system: &SystemHandle,
    set: &mut PotentialSet,
    weight_index: usize,
    grid: &[f64],
    out_dir: &Path,
) -> Result<(), Failure> {
    let basis_config = config.basis.unwrap_or_default();
    let basis = match system {
        SystemHandle::Shift(shift) => {
            symbolic_basis(shift, basis_config.depth, basis_config.size, set)?
        }
        SystemHandle::Schottky(sys) => {
            fuchsian_basis(sys.generator_count(), basis_config.size, set)?
        }
    };
    let orbits = system.enumerate(config.t_grid.stop, set)?;

    let gibbs;
    let oracle: Option<&dyn MeasureEval> = match system {
        SystemHandle::Shift(shift) => {
            let weight = set.get(weight_index).expect("weight index is validated");
            gibbs = GibbsFlowMeasure::equilibrium(shift, weight)?;
            Some(&gibbs)
        }
        SystemHandle::Schottky(_) => None,
    };
    let report = equidistribution_report(&orbits, weight_index, &basis, grid, oracle)?;

    match report {
        EquidistReport::Oracle { t_grid, distances, truncation_error, trend_improved } => {
            let mut csv = String::from("t,distance,truncation_error\n");
            for (i, &t) in t_grid.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    fmt_float(t),
                    fmt_float(distances[i]),
                    fmt_float(truncation_error),
                ));
            }
            write_text(&out_dir.join("equidist.csv"), &csv)?;
            println!(
                "distance to equilibrium: {:.6} at t = {} -> {:.6} at t = {} ({})",
                distances[0],
                t_grid[0],
                distances[distances.len() - 1],
                t_grid[t_grid.len() - 1],
                if trend_improved { "improved" } else { "did not improve" },
            );
            println!("metric truncation error {truncation_error:.3e}");
        }
        EquidistReport::Cauchy { t_grid, matrix, truncation_error } => {
            let mut csv = String::from("t_a,t_b,distance,truncation_error\n");
            let mut tail_max = 0.0f64;
            for i in 0..t_grid.len() {
                for j in (i + 1)..t_grid.len() {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt_float(t_grid[i]),
                        fmt_float(t_grid[j]),
                        fmt_float(matrix[i][j]),
                        fmt_float(truncation_error),
                    ));
                    if i + 3 >= t_grid.len() {
                        tail_max = tail_max.max(matrix[i][j]);
                    }
                }
            }
            write_text(&out_dir.join("equidist.csv"), &csv)?;
            println!(
                "no transfer-operator oracle; max pairwise distance over the last 3 grid points: {tail_max:.6}"
            );
            println!("metric truncation error {truncation_error:.3e}");
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_deviation(
    config: &RunConfig,
    system: &SystemHandle,
    set: &PotentialSet,
    weight_index: usize,
    grid: &[f64],
    out_dir: &Path,
    seed: u64,
) -> Result<(), Failure> {
    let predicate_config = config
        .predicate
        .as_ref()
        .ok_or_else(|| fail("the deviation command requires a predicate in the config"))?;
    let observable_index = set.index_of(&predicate_config.observable).ok_or_else(|| {
        fail(format!(
            "predicate observable '{}' is not a configured potential",
            predicate_config.observable
        ))
    })?;
    let direction = match predicate_config.direction {
        DirectionConfig::AtLeast => Direction::AtLeast,
        DirectionConfig::AtMost => Direction::AtMost,
    };

    let orbits = system.enumerate(config.t_grid.stop, set)?;
    let predicate =
        threshold_predicate(observable_index, direction, predicate_config.threshold);
    let series = deviation_rate(&orbits, weight_index, predicate, grid)?;

    let deficit = match system {
        SystemHandle::Shift(shift) => {
            let f = set.get(weight_index).expect("weight index is validated");
            let g = set.get(observable_index).expect("observable index is validated");
            Some(constrained_deficit(shift, f, g, direction, predicate_config.threshold, seed)?)
        }
        SystemHandle::Schottky(_) => None,
    };

    let mut csv = String::from("t,nu_t,log_nu_t\n");
    for (i, &t) in series.t_grid.iter().enumerate() {
        let nu = series.fractions[i];
        let log_nu = nu.and_then(|v| if v > 0.0 { Some(v.ln()) } else { None });
        csv.push_str(&format!("{},{},{}\n", fmt_float(t), fmt_cell(nu), fmt_cell(log_nu)));
    }
    write_text(&out_dir.join("deviation.csv"), &csv)?;

    const SLACK: f64 = 0.1;
    let bound_satisfied =
        deficit.as_ref().map(|d| series.measured_rate <= -d.value + SLACK);
    let json = serde_json::json!({
        "measured_rate": series.measured_rate,
        "rho_k": deficit.as_ref().map(|d| d.value),
        "slack": SLACK,
        "bound_satisfied": bound_satisfied,
    });
    write_json(&out_dir.join("deviation.json"), &json)?;

    println!("measured decay rate {:.6}", series.measured_rate);
    if let Some(d) = &deficit {
        println!(
            "pressure deficit rho(K) = {:.6} (tilt multiplier {:.4}, duality gap {:.2e})",
            d.value, d.multiplier, d.duality_gap
        );
        println!(
            "rate bound {:.6} <= {:.6}: {}",
            series.measured_rate,
            -d.value + SLACK,
            if bound_satisfied == Some(true) { "satisfied" } else { "VIOLATED" },
        );
    } else {
        println!("no transfer-operator oracle for this system; rate bound not checked");
    }
    Ok(())
}
