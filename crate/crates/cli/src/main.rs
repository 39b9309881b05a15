use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eigenwork_core::harness::archive::{
    final_per_state, read_config, read_protocol, read_summary, read_timeseries, write_run, PROTOCOL_FILE,
};
use eigenwork_core::harness::sweep::{write_threshold_table, THRESHOLD_FILE};
use eigenwork_core::harness::{run, run_scaling_sweep, run_threshold_sweep, ExperimentConfig, KRule, Mode};
use eigenwork_core::{use_sequential_kernels, ControlBasis, Error, ManifestKind, Preset, Problem, Result};

/// Work extraction from energy eigenstates of the periodic Ising chain.
#[derive(Parser)]
#[command(name = "eigenwork", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a control-operator manifest.
    Basis {
        #[arg(short = 'L', long = "sites")]
        sites: usize,
        /// Locality of B_k; omit with --discrete.
        #[arg(short, long, conflicts_with = "discrete")]
        k: Option<usize>,
        /// The seven-element discrete action set.
        #[arg(long)]
        discrete: bool,
    },
    /// Diagonalize the sector Hamiltonian and print the spectrum as CSV.
    Diag {
        #[arg(short = 'L', long = "sites")]
        sites: usize,
        #[arg(long, default_value = "nonintegrable")]
        preset: Preset,
        #[arg(long, default_value_t = -0.25, allow_hyphen_values = true)]
        shell_lo: f64,
        #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
        shell_hi: f64,
    },
    /// Greedy optimized control from a config file.
    Optimize(RunArgs),
    /// Constant-Hamiltonian quench from a config file.
    Quench(RunArgs),
    /// Discrete action sequence from a config file.
    Discrete(RunArgs),
    /// Optimize over a list of chain lengths and presets; writes fig3_scaling.csv.
    SweepSize {
        /// Optimize-mode template; model.L and control.k are overridden.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [8, 10, 12])]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [Preset::Integrable, Preset::Nonintegrable])]
        presets: Vec<Preset>,
        /// An integer, or "half" for k = L/2.
        #[arg(short, long, default_value = "4")]
        k: KRule,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Recount D_pos in archived runs for several thresholds.
    SweepThreshold {
        #[arg(long, value_delimiter = ',', default_values_t = [0.10, 0.125, 0.15, 0.175])]
        eps: Vec<f64>,
        /// Output CSV; defaults to threshold_sweep.csv in the current directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Re-evolve an archived run from its protocol and compare work densities.
    Replay {
        run: PathBuf,
        /// Maximum tolerated deviation in w.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Summarize an archived run.
    Report { run: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run directory; overrides output.dir in the config.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    use_sequential_kernels();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Basis { sites, k, discrete } => {
            let kind = match (k, discrete) {
                (_, true) => ManifestKind::Discrete,
                (Some(k), false) => ManifestKind::Local { k },
                (None, false) => return Err(Error::Config("give -k or --discrete".into())),
            };
            print!("{}", ControlBasis::build(kind, sites)?.manifest());
            Ok(())
        }
        Command::Diag { sites, preset, shell_lo, shell_hi } => {
            let p = Problem::new(preset.params(sites), shell_lo, shell_hi)?;
            log::info!("eigenvector checksum {}", p.eig.checksum());
            p.eig.write_spectrum_csv(&p.shell, std::io::stdout().lock())
        }
        Command::Optimize(a) => run_mode(Mode::Optimize, a),
        Command::Quench(a) => run_mode(Mode::Quench, a),
        Command::Discrete(a) => run_mode(Mode::Discrete, a),
        Command::SweepSize { config, sizes, presets, k, out } => {
            let template = ExperimentConfig::load(&config)?;
            let rows = run_scaling_sweep(&template, &presets, &sizes, k, Some(&out))?;
            println!("preset,L,k,shell_size,D_pos");
            for r in &rows {
                match (r.shell_size, r.d_pos) {
                    (Some(s), Some(d)) => println!("{},{},{},{s},{d}", r.preset.name(), r.n_sites, r.k),
                    _ => println!("{},{},{},failed,{}", r.preset.name(), r.n_sites, r.k, r.error.as_deref().unwrap_or("")),
                }
            }
            if rows.iter().any(|r| r.error.is_some()) {
                return Err(Error::Numerical("some sweep entries failed".into()));
            }
            Ok(())
        }
        Command::SweepThreshold { eps, out, runs } => {
            let rows = run_threshold_sweep(&runs, &eps)?;
            let path = out.unwrap_or_else(|| PathBuf::from(THRESHOLD_FILE));
            write_threshold_table(&rows, &path)?;
            println!("run,L,epsilon,shell_size,D_pos");
            for r in &rows {
                println!("{},{},{},{},{}", r.run, r.n_sites, r.epsilon, r.shell_size, r.d_pos);
            }
            Ok(())
        }
        Command::Replay { run, tol } => replay(&run, tol),
        Command::Report { run } => report(&run),
    }
}

fn run_mode(mode: Mode, args: RunArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let resolved = cfg.resolve()?;
    if resolved.mode != mode {
        return Err(Error::Config(format!(
            "{} is a {:?}-mode config",
            args.config.display(),
            resolved.mode
        )));
    }
    let dir = args
        .out
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| Error::Config("no run directory: pass --out or set output.dir".into()))?;
    let outcome = run(&resolved)?;
    let s = write_run(&outcome, &dir)?;
    println!(
        "{}: L={} {} shell={} D_pos(final)={} D_pos(max)={}{}",
        dir.display(),
        s.n_sites,
        s.manifest,
        s.shell_size,
        s.final_d_pos,
        s.max_d_pos,
        if s.degenerate { " [degenerate: gradient vanished at every step]" } else { "" }
    );
    Ok(())
}

fn replay(dir: &Path, tol: f64) -> Result<()> {
    let cfg = read_config(dir)?.resolve()?;
    let protocol = read_protocol(&dir.join(PROTOCOL_FILE))?;
    let traj = eigenwork_core::harness::replay_standalone(
        &protocol,
        cfg.raw.reward,
        cfg.dpos_eps,
        cfg.sample_every,
        false,
    )?;
    let archived = final_per_state(dir)?;
    let replayed = traj.final_w();
    if archived.len() != replayed.len() {
        return Err(Error::ManifestMismatch(format!(
            "archive has {} final records, replay produced {}",
            archived.len(),
            replayed.len()
        )));
    }
    let dev = archived
        .iter()
        .zip(replayed)
        .map(|(a, w)| (a.w - w).abs())
        .fold(0.0, f64::max);
    let ts = read_timeseries(dir)?;
    let dpos_match = ts.len() == traj.steps.len() && ts.iter().zip(&traj.steps).all(|(a, b)| a.d_pos == b.d_pos);
    println!("max |w_replay - w_archived| = {dev:.3e} (tol {tol:e}); D_pos series identical: {dpos_match}");
    if dev > tol || !dpos_match {
        return Err(Error::Numerical("replay disagrees with the archive".into()));
    }
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    let s = read_summary(dir)?;
    let ts = read_timeseries(dir)?;
    println!("run            {}", dir.display());
    println!("mode           {:?} ({})", s.mode, s.manifest);
    println!("model          L={} h={} g={}", s.n_sites, s.h, s.g);
    println!("sector dim     {}", s.sector_dim);
    println!("shell          [{}, {}] with {} states", s.shell_lo, s.shell_hi, s.shell_size);
    println!("time grid      dt={} steps={} duration={}", s.dt, s.steps, s.duration);
    if s.mode == Mode::Quench {
        println!("               (quench duration is a chosen default, not a value taken from a figure)");
    }
    println!("threshold      eps={}", s.dpos_eps);
    println!("D_pos          final={} max={}", s.final_d_pos, s.max_d_pos);
    println!("reward         final={:.6}", s.final_reward);
    if s.mode == Mode::Optimize {
        println!("vanished steps {}{}", s.vanished_steps, if s.degenerate { " (degenerate run)" } else { "" });
    }
    if let (Some(m), Some(sd)) = (s.mean_initial_entropy, s.std_initial_entropy) {
        println!("initial EE     shell mean {m:.6} nats, std {sd:.6} (mean used as the reference level in place of a thermal value)");
    }
    let stride = (ts.len() / 10).max(1);
    println!("\n{:>8} {:>12} {:>6}", "step", "t", "D_pos");
    let tail = ts.last().filter(|_| (ts.len() - 1) % stride != 0);
    for row in ts.iter().step_by(stride).chain(tail) {
        println!("{:>8} {:>12.6} {:>6}", row.step, row.t, row.d_pos);
    }
    Ok(())
}
