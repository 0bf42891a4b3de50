//! `magbands`: sample fields, sweep bands, run packet dynamics and the oracle suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use magbands_core::bands::{assemble_bands, spectrum_sets, velocity_bands, BandStructure, FiberSweep, SpectrumClassification};
use magbands_core::dynamics::{
    asymptotic_velocity_apply, localization_bound, log_times, prepare_packet, simulate, BallisticProbe,
    LocalizationBound, PacketSpec, VelocityOperatorData,
};
use magbands_core::fiber::{effective_potential, solve_at};
use magbands_core::field::{sample_field, vector_potential, FieldRealization};
use magbands_core::grid::KGrid;
use magbands_core::io::{write_bands_csv, write_dynamics_csv, write_fiber_dump, write_field, write_json};
use magbands_core::plot::bands_svg;
use magbands_core::rng::ensemble_seed;
use magbands_core::verify::{run_suite, Tolerances, VerifyReport};
use magbands_core::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "magbands", version, about = "Bands and transport in unidirectional magnetic fields")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (overrides `out_dir` in the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw field realizations and write `x,b` CSVs with JSON sidecars.
    SampleField {
        /// Number of realizations, seeds `seed, seed + 1, ...`.
        #[arg(long, default_value_t = 1)]
        ensemble: u64,
    },
    /// Sweep the fibers over the k-grid and classify the bands.
    Bands {
        /// Also write `bands.svg`.
        #[arg(long)]
        svg: bool,
        /// Check shift covariance for this grid-aligned shift.
        #[arg(long, value_name = "Z")]
        verify_shift: Option<f64>,
        /// Write the fiber at this k as `fiber.csv` (`x,v,phi0..phiN`).
        #[arg(long, value_name = "K")]
        dump_fiber: Option<f64>,
    },
    /// Evolve a wave packet and record localization and transport observables.
    Dynamics,
    /// Run the oracle suite; tolerances come from the configuration if given.
    Verify {
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err.chain().any(|e| e.downcast_ref::<Error>().is_some_and(Error::is_numerical));
            ExitCode::from(if numerical { EXIT_NUMERICAL } else { EXIT_VALIDATION })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            bail!(Error::InvalidArgument("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("building the worker pool")?;
    }
    match cli.command {
        Command::Verify { report } => cmd_verify(&cli.common, report),
        Command::SampleField { ensemble } => {
            let (config, out) = prepare_run(&cli.common)?;
            cmd_sample_field(&config, &out, ensemble)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bands { svg, verify_shift, dump_fiber } => {
            let (config, out) = prepare_run(&cli.common)?;
            cmd_bands(&config, &out, svg, verify_shift, dump_fiber)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dynamics => {
            let (config, out) = prepare_run(&cli.common)?;
            cmd_dynamics(&config, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Load the config, apply flag overrides, create the output directory and
/// echo the effective config into it.
fn prepare_run(common: &Common) -> anyhow::Result<(RunConfig, PathBuf)> {
    let Some(path) = &common.config else {
        bail!(Error::InvalidArgument("this subcommand needs --config".into()));
    };
    let mut config =
        RunConfig::from_path_unchecked(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = common.seed {
        config.seed = Some(seed);
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).with_context(|| format!("creating {}", config.out_dir.display()))?;
    write_json(&config.out_dir.join("config.json"), &config)?;
    let out = config.out_dir.clone();
    Ok((config, out))
}

fn realization(config: &RunConfig, seed: Option<u64>) -> magbands_core::Result<FieldRealization> {
    sample_field(&config.field, &config.grid, if config.field.is_random() { seed } else { None })
}

fn cmd_sample_field(config: &RunConfig, out: &Path, ensemble: u64) -> anyhow::Result<()> {
    if ensemble == 0 {
        bail!(Error::InvalidArgument("--ensemble must be positive".into()));
    }
    if ensemble > 1 && !config.field.is_random() {
        bail!(Error::InvalidArgument("--ensemble needs a random field spec".into()));
    }
    for i in 0..ensemble {
        let seed = config.seed.map(|s| ensemble_seed(s, i));
        let field = realization(config, seed)?;
        let name = if ensemble == 1 { "field.csv".to_string() } else { format!("field_{i:04}.csv") };
        write_field(&field, &out.join(&name))?;
        info!("wrote {name} (seed {seed:?})");
    }
    Ok(())
}

#[derive(Serialize)]
struct ShiftReport {
    z: f64,
    max_deviation: f64,
}

#[derive(Serialize)]
struct BandsSummary {
    structure: BandStructure,
    spectrum: SpectrumClassification,
    velocity_bands: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift_covariance: Option<ShiftReport>,
}

fn cmd_bands(config: &RunConfig, out: &Path, svg: bool, shift: Option<f64>, dump: Option<f64>) -> anyhow::Result<()> {
    let field = realization(config, config.seed)?;
    write_field(&field, &out.join("field.csv"))?;
    let kgrid = config.kgrid_for(&field)?;
    info!("sweeping {} fibers on [{}, {}]", kgrid.n_k, kgrid.k_min, kgrid.k_max);
    let sweep = FiberSweep::solve(&field, &kgrid, config.n_max, &config.solver)?;
    let funcs = sweep.band_functions();
    let structure = assemble_bands(&funcs, config.tol_flat)?.with_metadata(&field);
    write_bands_csv(&funcs, &out.join("bands.csv"))?;

    let shift_covariance = match shift {
        Some(z) => {
            let dev = magbands_core::bands::verify_shift_covariance(&field, z, &kgrid, config.n_max)?;
            println!("shift covariance z = {z}: max deviation {dev:.3e}");
            Some(ShiftReport { z, max_deviation: dev })
        }
        None => None,
    };
    if let Some(k) = dump {
        let sol = solve_at(&sweep.potential, k, config.n_max, &config.solver)?;
        write_fiber_dump(&sol, &effective_potential(&sweep.potential, k), &out.join("fiber.csv"))?;
    }
    if svg {
        let title = format!("{} field, n <= {}", config.field.id(), config.n_max);
        std::fs::write(out.join("bands.svg"), bands_svg(&funcs, &title))?;
    }
    let summary = BandsSummary {
        spectrum: spectrum_sets(&structure),
        velocity_bands: velocity_bands(&funcs),
        structure,
        shift_covariance,
    };
    write_json(&out.join("bands_summary.json"), &summary)?;
    for b in &summary.structure.bands {
        println!(
            "band {}: [{:.6}, {:.6}] width {:.3e}{}",
            b.n,
            b.inf,
            b.sup,
            b.bandwidth,
            if b.flat { " flat" } else { "" }
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct Snapshot {
    t: f64,
    norm: f64,
    energy: f64,
    q1_moment: f64,
    q2_mean: f64,
    ballistic_residual: f64,
}

#[derive(Serialize)]
struct DynamicsSummary {
    packet: PacketSpec,
    capture: f64,
    kgrid: KGrid,
    n_max: usize,
    q2_norm: f64,
    asymptotic_velocity_norm: f64,
    energy_norm: f64,
    localization_bound: Option<LocalizationBound>,
    max_q1_moment: f64,
    max_norm_drift: f64,
    max_energy_drift: f64,
    last: Snapshot,
}

fn cmd_dynamics(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let Some(dyn_config) = &config.dynamics else {
        bail!(Error::InvalidArgument("configuration has no `dynamics` section".into()));
    };
    let field = realization(config, config.seed)?;
    let kgrid = config.kgrid_for(&field)?;
    let sweep = Arc::new(FiberSweep::solve(&field, &kgrid, config.n_max, &config.solver)?);
    let data = VelocityOperatorData::new(&sweep);
    let packet = prepare_packet(Arc::clone(&sweep), &dyn_config.packet)?;
    let times = log_times(dyn_config.horizon, dyn_config.n_times);
    let series = simulate(&packet, &data, &times)?;
    write_dynamics_csv(&series, &out.join("dynamics.csv"))?;

    let probe = BallisticProbe::new(&packet, &data)?;
    let bound = match localization_bound(&packet, &data, &vector_potential(&field)) {
        Ok(b) => Some(b),
        Err(e @ Error::InvalidArgument(_)) => {
            log::warn!("no localization bound: {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let last = series.times.len() - 1;
    let summary = DynamicsSummary {
        packet: dyn_config.packet,
        capture: packet.capture,
        kgrid,
        n_max: config.n_max,
        q2_norm: probe.q2_norm(),
        asymptotic_velocity_norm: asymptotic_velocity_apply(&packet, &data).norm(),
        energy_norm: packet.energy().sqrt(),
        localization_bound: bound,
        max_q1_moment: series.q1_second_moment.iter().cloned().fold(0.0, f64::max),
        max_norm_drift: series.max_norm_drift(),
        max_energy_drift: series.max_energy_drift(),
        last: Snapshot {
            t: series.times[last],
            norm: series.norm[last],
            energy: series.energy[last],
            q1_moment: series.q1_second_moment[last],
            q2_mean: series.q2_mean[last],
            ballistic_residual: series.ballistic_residual[last],
        },
    };
    write_json(&out.join("dynamics_summary.json"), &summary)?;
    println!(
        "capture {:.6}, max |Q1 psi| {:.4}{}, residual at t = {} is {:.3e}",
        summary.capture,
        summary.max_q1_moment,
        bound.map(|b| format!(" (bound {:.4})", b.bound)).unwrap_or_default(),
        summary.last.t,
        summary.last.ballistic_residual
    );
    Ok(())
}

fn cmd_verify(common: &Common, format: ReportFormat) -> anyhow::Result<ExitCode> {
    let tolerances = match &common.config {
        Some(path) => {
            RunConfig::from_path_unchecked(path).with_context(|| format!("loading {}", path.display()))?.tolerances
        }
        None => Tolerances::default(),
    };
    let report: VerifyReport = run_suite(&tolerances);
    match format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        ReportFormat::Text => {
            for c in &report.checks {
                println!("{}", c.line());
            }
        }
    }
    if let Some(out) = &common.out {
        std::fs::create_dir_all(out)?;
        write_json(&out.join("verify_report.json"), &report)?;
    }
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        for c in report.failures() {
            eprintln!("failed check: {}", c.name);
        }
        Ok(ExitCode::from(EXIT_NUMERICAL))
    }
}
