//! `owc-sim`: sweeps and small analytic utilities for the RLNC-NOMA
//! optical wireless simulator.

mod config;
mod output;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use owc_rlnc_noma::channel::{link_snr, los_gain};
use owc_rlnc_noma::rlnc::full_rank_probability;
use owc_rlnc_noma::sim::{run_sweep_with, Experiments, SweepOptions};

use config::{load_config, FidelityArg, Overrides, SicArg};
use output::{emit_csv, Metadata};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] owc_rlnc_noma::Error),
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Core(_) => 1,
            CliError::Io(..) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "owc-sim", version, about = "RLNC-NOMA optical wireless multicast simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep alpha and write BER, rate and SINR columns to CSV.
    SweepBer(SweepArgs),
    /// Sweep alpha for the rate columns only; BER columns are NaN.
    SweepRate(SweepArgs),
    /// Probability that N random coded packets decode a generation of K.
    DecodeProb {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 256)]
        q: u64,
    },
    /// LoS gain and full-power SNR at a horizontal offset from the LED.
    LinkBudget {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Horizontal distance from the point below the LED, m.
        #[arg(long, default_value_t = 0.0)]
        radius: f64,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    alpha_start: Option<f64>,
    #[arg(long)]
    alpha_stop: Option<f64>,
    #[arg(long)]
    alpha_step: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    sic: Option<SicArg>,
    #[arg(long, value_enum)]
    fidelity: Option<FidelityArg>,
    /// Coded packets per frame (N).
    #[arg(long)]
    redundancy: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl SweepArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            alpha_start: self.alpha_start,
            alpha_stop: self.alpha_stop,
            alpha_step: self.alpha_step,
            trials: self.trials,
            sic: self.sic,
            fidelity: self.fidelity,
            redundancy: self.redundancy,
            epsilon: self.epsilon,
        }
    }
}

fn sweep(name: &str, args: &SweepArgs, experiments: Experiments) -> Result<(), CliError> {
    let (file, cfg) = load_config(args.config.as_deref(), &args.overrides())?;
    let opts = SweepOptions {
        experiments,
        workers: args.workers,
    };
    let rows = run_sweep_with(&cfg, &opts, |r| {
        eprintln!(
            "alpha={:.4} ber_noma={:.3e}/{:.3e} ber_rlnc={:.3e}/{:.3e} rate noma={:.3} oma={:.3} feasible={}",
            r.alpha,
            r.ber_noma_perfect,
            r.ber_noma_imperfect,
            r.ber_rlnc_perfect,
            r.ber_rlnc_imperfect,
            r.rate_noma_sum,
            r.rate_oma_sum,
            r.feasible
        );
    })?;
    let meta = Metadata {
        command: name,
        seed: cfg.seed,
        config_json: file.to_json(),
    };
    emit_csv(&rows, cfg.sic, &meta, &args.out)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SweepBer(args) => sweep("sweep-ber", &args, Experiments::ALL),
        Command::SweepRate(args) => sweep("sweep-rate", &args, Experiments::RATE_ONLY),
        Command::DecodeProb { k, n, q } => {
            let p = full_rank_probability(k, n, q)?;
            println!("{p:.6}");
            Ok(())
        }
        Command::LinkBudget { config, radius } => {
            if !(radius >= 0.0 && radius.is_finite()) {
                return Err(CliError::Validation(format!("radius must be finite and >= 0, got {radius}")));
            }
            let (_, cfg) = load_config(config.as_deref(), &Overrides::default())?;
            let led = cfg.geometry.led_position;
            let h = los_gain(&cfg.geometry, &cfg.led, &cfg.pd, (led.x + radius, led.y));
            let snr = link_snr(h, cfg.led.power_w, &cfg.pd, cfg.noise_psd, cfg.bandwidth);
            println!("lambertian_order {}", cfg.led.lambertian_order()?);
            println!("radius_m {radius}");
            println!("gain {h:e}");
            println!("snr {snr}");
            println!("snr_db {:.4}", 10.0 * snr.log10());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
