use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use superres_cli::checks::{self, log_slope};
use superres_cli::config::{OutputFormat, SweepConfig};
use superres_cli::{fig2, sweep};
use superres_core::loss::gaussian_gram_bound;
use superres_core::optics::single_mode_transmission;
use superres_core::{Aperture, QuadratureSpec};

#[derive(Parser)]
#[command(name = "superres", version, about = "Fisher information for resolving two partially coherent point sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one SVG chart per quantity next to the output.
        #[arg(long)]
        svg: bool,
    },
    /// Write the four QFI panels for a Gaussian aperture, plus SPADE records.
    Fig2 {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Gram-matrix transmission ceiling for a Gaussian PSF.
    LossBound {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        modes: usize,
        #[arg(long)]
        spacing: f64,
    },
    /// Run the acceptance checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, out, svg } => run_sweep(config, out, svg),
        Command::Fig2 { sigma, out_dir, svg } => run_fig2(sigma, out_dir, svg),
        Command::LossBound { sigma, modes, spacing } => run_loss_bound(sigma, modes, spacing),
        Command::Selftest => run_selftest(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type CmdResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn run_sweep(config: PathBuf, out: Option<PathBuf>, svg: bool) -> CmdResult {
    let cfg = SweepConfig::from_file(&config)?;
    let records = sweep::run_sweep(&cfg)?;
    let sink: Box<dyn Write> = match &out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cfg.output {
        OutputFormat::Csv => sweep::write_csv(&records, sink)?,
        OutputFormat::Json => sweep::write_json(&records, sink)?,
    }
    if svg || cfg.svg {
        let stem = out.clone().unwrap_or_else(|| PathBuf::from("sweep"));
        for (name, chart) in sweep::charts(&records, false) {
            let path = stem.with_file_name(format!(
                "{}_{name}.svg",
                stem.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            ));
            std::fs::write(&path, chart.render())?;
            eprintln!("wrote {}", path.display());
        }
    }
    let failures: Vec<_> = records.iter().filter(|r| r.status.is_failure()).collect();
    for r in &failures {
        eprintln!("{} at Re g = {}, s/sigma = {}: {}", r.quantity, r.re_gamma, r.s_over_sigma, r.status.reason());
    }
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_fig2(sigma: f64, out_dir: PathBuf, svg: bool) -> CmdResult {
    let data = fig2::compute(sigma)?;
    for path in fig2::write(&data, &out_dir, svg)? {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_loss_bound(sigma: f64, modes: usize, spacing: f64) -> CmdResult {
    let b = gaussian_gram_bound(sigma, modes, spacing)?;
    let ap = Aperture::gaussian(sigma)?;
    let p = single_mode_transmission(&ap, spacing, &QuadratureSpec::default())?;
    let nearby = [0.8, 0.9, 1.0, 1.1, 1.25].map(|f| f * spacing);
    let bounds = nearby.map(|d| gaussian_gram_bound(sigma, modes, d).map(|g| g.bound));
    let mut out = io::stdout().lock();
    writeln!(out, "modes              {modes}")?;
    writeln!(out, "spacing            {spacing}")?;
    writeln!(out, "sum |G_ij|         {}", sweep::format_float(b.abs_sum))?;
    writeln!(out, "bound              {}", sweep::format_float(b.bound))?;
    writeln!(out, "bound sigma/delta  {:.6} (sqrt(8 pi) = {:.6})", b.asymptotic_constant(sigma), (8.0 * std::f64::consts::PI).sqrt())?;
    if let [Ok(a), Ok(b1), Ok(c), Ok(d), Ok(e)] = bounds {
        writeln!(out, "local exponent     {:.4}", log_slope(&nearby, &[a, b1, c, d, e]))?;
    }
    writeln!(out, "4f transmission    {}", sweep::format_float(p))?;
    let dominates = p <= b.bound;
    writeln!(out, "bound dominates    {dominates}")?;
    Ok(if dominates { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_selftest() -> CmdResult {
    let mut all = true;
    for outcome in checks::run_all() {
        println!("{}", outcome.line());
        all &= outcome.passed;
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
