mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cohengine_core::presets::{preset, Preset, DEFAULT_P1_RANGE};
use cohengine_core::sweepopt::{GapRange, DEFAULT_REL_TOL};
use cohengine_core::{
    evaluate_point, optimize_gap, run_validation, sweep, CAxis, Fault, OptimizationTarget,
    SweepGrid, ValidationLevel, ValidationReport,
};
use serde::Serialize;

use config::{parse_sets, read_file, Resolved, MACHINE_KEYS, TAPE_KEYS};
use error::CliError;
use output::{sidecar, write_csv, write_json, Manifest, PointDocument, MANIFEST_VERSION};

const DEFAULT_GRID: usize = 101;

#[derive(Parser)]
#[command(name = "cohengine", version, about = "Steady-state thermodynamics of a qubit-tape driven thermal machine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, env = "COHENGINE_WORKERS")]
    workers: Option<usize>,
    /// Seed recorded in the manifest and used by stochastic checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct Common {
    /// Named parameter set (fig3, fig4, fig5a-c, fig6a-c, fig7, figEP).
    #[arg(long)]
    preset: Option<String>,
    /// Flat JSON configuration file, or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. --set phi=0.03. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Signed,
    Half,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single operating point and print it as JSON.
    Point {
        #[command(flatten)]
        common: Common,
        /// Optimize the machine gap for this target first.
        #[arg(long)]
        optimize: Option<String>,
    },
    /// Evaluate a Bloch-disc grid and write a CSV table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid size as P1xC, e.g. 201x201.
        #[arg(long)]
        grid: Option<String>,
        /// Optimize the machine gap at every grid point.
        #[arg(long)]
        optimize: Option<String>,
        /// Population range as MIN,MAX.
        #[arg(long)]
        p1_range: Option<String>,
        #[arg(long, value_enum)]
        c_axis: Option<AxisArg>,
    },
    /// Optimize the machine gap at a single point.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "free_energy")]
        optimize: String,
    },
    /// Check the closed-form pipeline against the independent oracles.
    Validate {
        #[arg(long, value_enum, default_value = "quick")]
        level: LevelArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        fault: Option<String>,
    },
}

struct Run {
    started: Instant,
    workers: usize,
    seed: Option<u64>,
}

impl Run {
    fn manifest(&self, command: &'static str, preset: Option<&Preset>, resolved: Option<&Resolved>) -> Manifest {
        let split = |keys: &[&str]| {
            resolved
                .map(|r| {
                    r.values()
                        .iter()
                        .filter(|(k, _)| keys.contains(&k.as_str()))
                        .map(|(k, v)| (k.clone(), *v))
                        .collect()
                })
                .unwrap_or_default()
        };
        Manifest {
            manifest_version: MANIFEST_VERSION,
            tool: "cohengine",
            version: env!("CARGO_PKG_VERSION"),
            command,
            preset: preset.map(|p| p.name.to_string()),
            config: split(&MACHINE_KEYS),
            tape: split(&TAPE_KEYS),
            grid: None,
            target: None,
            seed: self.seed,
            level: None,
            workers: self.workers,
            flags: preset.map(|p| p.flags.iter().map(|s| s.to_string()).collect()).unwrap_or_default(),
            warnings: Vec::new(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn resolve(common: &Common) -> Result<(Option<Preset>, Resolved), CliError> {
    let p = common.preset.as_deref().map(preset).transpose()?;
    let mut r = p.as_ref().map(Resolved::from_preset).unwrap_or_default();
    if let Some(path) = &common.config {
        r.apply(&read_file(path)?)?;
    }
    r.apply(&parse_sets(&common.sets)?)?;
    Ok((p, r))
}

fn has_gap(r: &Resolved) -> bool {
    r.values().contains_key("e_c") || r.values().contains_key("e_m")
}

fn parse_target(s: &str) -> Result<OptimizationTarget, CliError> {
    s.parse().map_err(CliError::from)
}

fn cmd_point(run: &Run, common: &Common, optimize: Option<&str>, command: &'static str) -> Result<(), CliError> {
    let (p, r) = resolve(common)?;
    let target = match optimize {
        Some(s) => Some(parse_target(s)?),
        None if !has_gap(&r) => p.as_ref().and_then(|p| p.target),
        None => None,
    };
    let tape = r.tape()?;
    let (record, warnings) = match target {
        Some(t) => {
            let tpl = r.template()?;
            let (_, rec) = optimize_gap(&tpl, &tape, t, GapRange::standard(tpl.e_q), DEFAULT_REL_TOL)?;
            let warnings = tpl.with_e_m(3.0 * tpl.e_q).map(|c| c.warnings()).unwrap_or_default();
            (rec, warnings)
        }
        None => {
            let cfg = r.machine()?;
            (evaluate_point(&cfg, &tape)?, cfg.warnings())
        }
    };
    let mut m = run.manifest(command, p.as_ref(), Some(&r));
    m.target = target;
    m.warnings = warnings;
    write_json(common.out.as_deref(), &PointDocument::new(&record, m))
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::config(format!("--grid expects NxM with integers, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::config(format!("--p1-range expects MIN,MAX, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

struct SweepArgs<'a> {
    grid: Option<&'a str>,
    optimize: Option<&'a str>,
    p1_range: Option<&'a str>,
    c_axis: Option<AxisArg>,
}

fn cmd_sweep(run: &Run, common: &Common, args: SweepArgs) -> Result<(), CliError> {
    let (p, r) = resolve(common)?;
    let target = match args.optimize {
        Some(s) => Some(parse_target(s)?),
        None => p.as_ref().and_then(|p| p.target),
    };
    let base = p.as_ref().map(|p| p.grid);
    let (n_p1, n_c) = match args.grid {
        Some(g) => parse_grid(g)?,
        None => base.map_or((DEFAULT_GRID, DEFAULT_GRID), |g| (g.p1_count, g.c_count)),
    };
    let range = match args.p1_range {
        Some(s) => parse_range(s)?,
        None => base.map_or(DEFAULT_P1_RANGE, |g| (g.p1_min, g.p1_max)),
    };
    let axis = match args.c_axis {
        Some(AxisArg::Signed) => CAxis::SignedDiameter,
        Some(AxisArg::Half) => CAxis::HalfDisc,
        None => base.map_or(CAxis::SignedDiameter, |g| g.c_axis),
    };
    let grid = SweepGrid::new(range, n_p1, axis, n_c)?;
    let cfg = if target.is_some() { r.machine_or_placeholder()? } else { r.machine()? };

    // fail on an unwritable destination before spending time on the sweep
    let out = common.out.as_deref();
    let writer = out.map(output::create).transpose()?;
    let table = sweep(&cfg, &grid, target);
    match (writer, out) {
        (Some(w), Some(path)) => {
            write_csv(w, &table.rows).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            let mut m = run.manifest("sweep", p.as_ref(), Some(&r));
            m.grid = Some(grid);
            m.target = target;
            m.warnings = cfg.warnings();
            write_json(Some(&sidecar(path)), &m)?;
        }
        _ => output::emit(None, |w| write_csv(w, &table.rows))?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidationDocument<'a> {
    #[serde(flatten)]
    report: &'a ValidationReport,
    manifest: Manifest,
}

fn cmd_validate(run: &Run, level: LevelArg, out: Option<&Path>, fault: Option<&str>) -> Result<(), CliError> {
    let level = match level {
        LevelArg::Quick => ValidationLevel::Quick,
        LevelArg::Full => ValidationLevel::Full,
    };
    let fault: Option<Fault> = fault.map(str::parse).transpose()?;
    let seed = run.seed.unwrap_or(0);
    let report = run_validation(level, seed, fault);
    let mut m = run.manifest("validate", None, None);
    m.seed = Some(seed);
    m.level = Some(level.to_string());
    write_json(out, &ValidationDocument { report: &report, manifest: m })?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Validation(format!("failed checks: {}", report.failed_checks().join(", "))))
    }
}

fn configure_workers(workers: Option<usize>) -> Result<usize, CliError> {
    if let Some(k) = workers {
        if k == 0 {
            return Err(CliError::config("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot start {k} workers: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let workers = configure_workers(cli.workers)?;
    let run = Run {
        started,
        workers,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Point { common, optimize } => cmd_point(&run, common, optimize.as_deref(), "point"),
        Command::Optimize { common, optimize } => cmd_point(&run, common, Some(optimize), "optimize"),
        Command::Sweep {
            common,
            grid,
            optimize,
            p1_range,
            c_axis,
        } => cmd_sweep(
            &run,
            common,
            SweepArgs {
                grid: grid.as_deref(),
                optimize: optimize.as_deref(),
                p1_range: p1_range.as_deref(),
                c_axis: *c_axis,
            },
        ),
        Command::Validate { level, out, fault } => cmd_validate(&run, *level, out.as_deref(), fault.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cohengine: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
