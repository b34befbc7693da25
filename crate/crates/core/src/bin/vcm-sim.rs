use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use vcm_sim::analysis::{detect_forming_voltage, form_device, sweep_k1_k2, uniformity, CellStatus};
use vcm_sim::config::RunConfig;
use vcm_sim::io::{self, Header};
use vcm_sim::mesh::initial_state;
use vcm_sim::protocol::{dc_sweep, read_resistance, run_cycles, run_transient, CycleNoiseConfig, TransientOptions};
use vcm_sim::verify::run_all;
use vcm_sim::SimError;

#[derive(Parser)]
#[command(name = "vcm-sim", version, about = "Filament forming and switching in Ta2O5/TaOx memristors")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Form a pristine device with the forming waveform.
    Form,
    /// Form, then run set/reset cycles.
    Cycle {
        /// Number of cycles, overriding `cycle.count`.
        #[arg(long)]
        cycles: Option<usize>,
    },
    /// Forming voltage and switching metrics over the (K1, K2) grid.
    Sweep,
    /// Quasi-static I-V staircase on a pristine device.
    Iv,
    /// Analytic and manufactured-solution checks.
    Validate,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

enum Failure {
    Config(String),
    Simulation(SimError),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) | SimError::InvalidInput(m) => Failure::Config(m),
            other => Failure::Simulation(other),
        }
    }
}

fn simulation(e: SimError) -> Failure {
    Failure::Simulation(e)
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| simulation(e.into()))
}

fn cmd_form(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let dev = cfg.device()?;
    prepare_out(out)?;
    let header = Header::new("form", cfg.seed, &cfg.hash());
    let mut state = initial_state(&dev.mesh, &dev.db);
    cfg.nucleation.apply(&dev.mesh, &mut state);
    let r_initial = read_resistance(&dev, &state, cfg.read.v_read).map_err(simulation)?;
    let opts = TransientOptions {
        snapshot_times: cfg.output.snapshot_times.clone(),
        ..TransientOptions::default()
    };
    let trace = run_transient(&dev, &mut state, &cfg.waveforms.forming, &opts).map_err(simulation)?;
    let r_final = read_resistance(&dev, &state, cfg.read.v_read).map_err(simulation)?;
    io::write_trace(&out.join("trace.csv"), &header, &trace).map_err(simulation)?;
    for (k, (t, snap)) in trace.snapshots.iter().enumerate() {
        io::write_vtk(&out.join(format!("snapshot_{k:03}.vtk")), &dev.mesh, snap, &format!("form t={t:e}"))
            .map_err(simulation)?;
    }
    io::write_vtk(&out.join("final.vtk"), &dev.mesh, &state, "form final").map_err(simulation)?;
    let formed = detect_forming_voltage(&trace, cfg.compliance.i_cc, cfg.analysis.forming_threshold);
    let v_f = formed.voltage().map_or_else(|| "no-forming".to_string(), |v| format!("{v:e}"));
    let peak = if trace.samples.is_empty() { cfg.boundary.ambient } else { trace.peak_temperature() };
    let entries = [
        ("v_f", v_f.clone()),
        ("r_initial", format!("{:e}", r_initial.ohms)),
        ("r_final", format!("{:e}", r_final.ohms)),
        ("peak_temperature", format!("{peak:e}")),
        ("max_abs_current", format!("{:e}", trace.max_abs_current())),
    ];
    io::write_summary(&out.join("summary.csv"), &header, &entries).map_err(simulation)?;
    println!("V_f = {v_f}  R: {:.4e} -> {:.4e} ohm  peak T = {peak:.1} K", r_initial.ohms, r_final.ohms);
    Ok(())
}

fn cmd_cycle(cfg: &RunConfig, n: usize, out: &Path) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::Config("cycle count must be at least 1".into()));
    }
    let dev = cfg.device()?;
    prepare_out(out)?;
    let header = Header::new("cycle", cfg.seed, &cfg.hash());
    // same forming path as a sweep cell: the ramp stops once compliance is reached
    let (formed, mut state, forming) = form_device(&dev, &cfg.cell_protocol(n)).map_err(simulation)?;
    io::write_trace(&out.join("forming.csv"), &header, &forming).map_err(simulation)?;
    let v_f = formed.voltage().map_or_else(|| "no-forming".to_string(), |v| format!("{v:e}"));
    let noise = CycleNoiseConfig {
        seed: cfg.seed,
        amplitude: cfg.noise.amplitude,
    };
    let result = run_cycles(
        &dev,
        &mut state,
        &cfg.waveforms.set,
        &cfg.waveforms.reset,
        n,
        &noise,
        cfg.read.v_read,
        true,
    )
    .map_err(simulation)?;
    io::write_cycles(&out.join("cycles.csv"), &header, &result.r_hrs, &result.r_lrs).map_err(simulation)?;
    for (k, (set, reset)) in result.set_traces.iter().zip(&result.reset_traces).enumerate() {
        io::write_trace(&out.join(format!("set_{:03}.csv", k + 1)), &header, set).map_err(simulation)?;
        io::write_trace(&out.join(format!("reset_{:03}.csv", k + 1)), &header, reset).map_err(simulation)?;
    }
    let stat = |v: &[f64]| {
        uniformity(v, cfg.analysis.std_convention).map_or_else(|_| "unavailable".to_string(), |u| format!("{u:e}"))
    };
    let entries = [
        ("v_f", v_f),
        ("cycles", n.to_string()),
        ("uniformity_hrs", stat(&result.r_hrs)),
        ("uniformity_lrs", stat(&result.r_lrs)),
    ];
    io::write_summary(&out.join("summary.csv"), &header, &entries).map_err(simulation)?;
    println!(
        "{n} cycles  sigma/mu HRS = {}  LRS = {}",
        entries[2].1, entries[3].1
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, jobs: usize, out: &Path) -> Result<bool, Failure> {
    let dev = cfg.sweep_device()?;
    prepare_out(out)?;
    let header = Header::new("sweep", cfg.seed, &cfg.hash());
    let protocol = cfg.cell_protocol(cfg.sweep.cycles);
    let map = sweep_k1_k2(&dev, &cfg.sweep.k1, &cfg.sweep.k2, &protocol, cfg.seed, jobs)?;
    io::write_sweep(&out.join("sweep.csv"), &header, &map).map_err(simulation)?;
    io::write_sweep_status(&out.join("sweep_status.csv"), &header, &map).map_err(simulation)?;
    let finished = map.cells.iter().filter(|c| !matches!(c.status, CellStatus::Failed(_))).count();
    let fraction = finished as f64 / map.cells.len() as f64;
    println!("{finished}/{} cells finished", map.cells.len());
    Ok(fraction >= 0.9)
}

fn cmd_iv(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let dev = cfg.device()?;
    prepare_out(out)?;
    let header = Header::new("iv", cfg.seed, &cfg.hash());
    let mut state = initial_state(&dev.mesh, &dev.db);
    cfg.nucleation.apply(&dev.mesh, &mut state);
    let curve = dc_sweep(&dev, &mut state, &cfg.waveforms.iv, &TransientOptions::default()).map_err(simulation)?;
    io::write_iv(&out.join("iv.csv"), &header, &curve).map_err(simulation)?;
    println!("{} I-V points", curve.len());
    Ok(())
}

fn cmd_validate() -> Result<bool, Failure> {
    let checks = run_all().map_err(simulation)?;
    for c in &checks {
        println!("{c}");
    }
    Ok(checks.iter().all(|c| c.passed()))
}

fn write_diagnostics(out: &Path, e: &SimError) {
    if std::fs::create_dir_all(out).is_ok() {
        let text = format!("{e}\n\n{e:#?}\n");
        if let Err(io) = std::fs::write(out.join("diagnostics.txt"), text) {
            error!("could not write diagnostics: {io}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    // environment variables are deliberately ignored
    env_logger::Builder::new().filter_level(level).init();

    let run = || -> Result<bool, Failure> {
        let cfg = load(&cli)?;
        info!("config sha256 {}", cfg.hash());
        match &cli.command {
            Command::PrintConfig => {
                print!("{}", cfg.to_toml());
                Ok(true)
            }
            Command::Validate => cmd_validate(),
            Command::Form => cmd_form(&cfg, &cli.out).map(|_| true),
            Command::Cycle { cycles } => cmd_cycle(&cfg, cycles.unwrap_or(cfg.cycle.count), &cli.out).map(|_| true),
            Command::Sweep => cmd_sweep(&cfg, cli.jobs, &cli.out),
            Command::Iv => cmd_iv(&cfg, &cli.out).map(|_| true),
        }
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Simulation(e)) => {
            eprintln!("simulation failed: {e}");
            write_diagnostics(&cli.out, &e);
            ExitCode::from(1)
        }
    }
}
