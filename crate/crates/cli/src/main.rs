//! Command-line driver for the multirate IMEX integrator.
//!
//! Exit codes: 0 on success (a Diverged verdict is an expected experimental
//! outcome), 1 on usage or configuration errors, 2 on internal solver
//! failures. Artifacts land in `$MRIMEX_OUT_DIR` (default `./mrimex-out`).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mrimex::advdiff::BenchmarkConfig;
use mrimex::harness::{
    self, convergence_for_config, preset, reproduce_fig2, run_config, scan_variant, PRESET_NAMES,
};
use mrimex::tableau::{ImplicitVariant, MultirateScheme, Tableau};
use mrimex::{Error, ScanAxis};

#[derive(Parser)]
#[command(
    name = "mrimex",
    about = "Multirate explicit Runge-Kutta integration with one-implicit-stage extensions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one benchmark: a preset name (fig2a..fig2f) or a config file path.
    Run {
        /// Preset name or path to a `key = value` config file.
        target: String,
    },
    /// Run all six presets and print the verdict/mass-loss table.
    Fig2,
    /// Convergence study for a config file: halve dt repeatedly and report
    /// observed orders against a fine reference run.
    Converge {
        path: PathBuf,
        #[arg(long, default_value_t = 4)]
        halvings: usize,
    },
    /// Stability scan: |R| over a grid of z, written as CSV.
    Scan {
        /// astable2, lstable1, or explicit.
        variant: String,
        /// Real axis as start:stop:points.
        #[arg(long, allow_hyphen_values = true)]
        re: String,
        /// Imaginary axis as start:stop:points (default: the real line).
        #[arg(long, allow_hyphen_values = true)]
        im: Option<String>,
    },
    /// Print the base/slow/fast tableaux for ratio m, optionally augmented.
    Tableau {
        /// Multirate ratio.
        m: usize,
        /// astable2, lstable1, or none.
        #[arg(long, default_value = "none")]
        variant: String,
        /// Telescoping depth (1 = no nesting).
        #[arg(long, default_value_t = 1)]
        levels: usize,
    },
}

fn parse_axis(spec: &str) -> Result<ScanAxis, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "axis `{spec}` must be start:stop:points"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bad axis start `{}`: {e}", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bad axis stop `{}`: {e}", parts[1])))?;
    let points: usize = parts[2]
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bad axis points `{}`: {e}", parts[2])))?;
    if points < 1 {
        return Err(Error::InvalidArgument("axis needs >= 1 point".into()));
    }
    Ok(ScanAxis::new(start, stop, points))
}

fn load_config(target: &str) -> Result<(String, BenchmarkConfig), Error> {
    if PRESET_NAMES.contains(&target) {
        return Ok((target.to_string(), preset(target)?));
    }
    let path = PathBuf::from(target);
    if !path.exists() {
        return Err(Error::Config(format!(
            "`{target}` is neither a preset ({}) nor an existing config file",
            PRESET_NAMES.join(", ")
        )));
    }
    let text = fs::read_to_string(&path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    Ok((name, BenchmarkConfig::from_text(&text)?))
}

/// 1 for usage/config problems, 2 for internal failures.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Dimension(_) => 1,
        _ => 2,
    }
}

fn print_scheme(m: usize, variant: &str, levels: usize) -> Result<(), Error> {
    if levels < 1 {
        return Err(Error::InvalidArgument("levels must be >= 1".into()));
    }
    let mut scheme = MultirateScheme::new(Tableau::explicit_trapezoidal(), m)?;
    if levels > 1 {
        scheme = scheme.telescope(levels - 1)?;
    }
    let variant = match variant.to_ascii_lowercase().as_str() {
        "none" => None,
        other => Some(other.parse::<ImplicitVariant>()?),
    };
    if let Some(v) = variant {
        scheme = scheme.augment_implicit(v)?;
    }

    println!("# base\n{}", scheme.base.to_text());
    println!(
        "# slow (m={}, levels={})\n{}",
        scheme.m,
        scheme.levels,
        scheme.slow.to_text()
    );
    println!(
        "# fast (m={}, levels={})\n{}",
        scheme.m,
        scheme.levels,
        scheme.fast.to_text()
    );
    if let Some(aug) = &scheme.implicit {
        println!(
            "# implicit ({}, gamma={})\n{}",
            aug.variant().name(),
            aug.gamma(),
            aug.as_tableau(scheme.b())?.to_text()
        );
    }
    if let Some(base_aug) = &scheme.base_implicit {
        println!(
            "# implicit for the base method\n{}",
            base_aug.as_tableau(scheme.base.b())?.to_text()
        );
    }
    println!("{}", scheme.check_order_conditions());
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    let out_root = harness::output_dir();
    match cli.command {
        Command::Run { target } => {
            let (name, config) = load_config(&target)?;
            let outcome = run_config(&name, &config, &out_root)?;
            println!("{}", outcome.summary_line());
            println!("artifacts: {}", outcome.artifact_dir.display());
            if outcome.report.failure.is_some() {
                return Ok(2);
            }
            Ok(0)
        }
        Command::Fig2 => {
            let table = reproduce_fig2(&out_root)?;
            print!("{table}");
            println!("artifacts: {}", out_root.display());
            if table.rows.iter().any(|r| r.failure.is_some()) {
                return Ok(2);
            }
            Ok(0)
        }
        Command::Converge { path, halvings } => {
            let text = fs::read_to_string(&path)?;
            let config = BenchmarkConfig::from_text(&text)?;
            let table = convergence_for_config(&config, halvings)?;
            print!("{table}");
            fs::create_dir_all(&out_root)?;
            let csv_path = out_root.join("convergence.csv");
            fs::write(&csv_path, table.to_csv())?;
            println!("artifacts: {}", csv_path.display());
            Ok(0)
        }
        Command::Scan { variant, re, im } => {
            let re_axis = parse_axis(&re)?;
            let im_axis = match im {
                Some(spec) => parse_axis(&spec)?,
                None => ScanAxis::new(0.0, 0.0, 1),
            };
            let scan = scan_variant(&variant, re_axis, im_axis)?;
            fs::create_dir_all(&out_root)?;
            let csv_path = out_root.join(format!("scan_{}.csv", variant.to_ascii_lowercase()));
            fs::write(&csv_path, scan.to_csv())?;
            println!(
                "scan {}: {} points, max |R| = {:.6}",
                variant,
                scan.abs_r.len(),
                scan.max_abs_r()
            );
            println!("artifacts: {}", csv_path.display());
            Ok(0)
        }
        Command::Tableau { m, variant, levels } => {
            print_scheme(m, &variant, levels)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; keep usage problems on exit code 1
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
