//! Experiment driver: named benchmark presets, the six-panel reproduction
//! table, convergence studies, and stability scans, all emitting CSV.
//!
//! Every pipeline here is deterministic (fixed iteration orders, no RNG),
//! so repeated runs with the same configuration produce byte-identical
//! artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::advdiff::{build_partition, make_system, BenchmarkConfig, SchemeVariant};
use crate::error::{Error, Result};
use crate::stability::{scan_region, ScanAxis, ScanComponent, StabilityScan, ZTriple};
use crate::stepper::{integrate, IntegrateOptions, RunReport, Verdict};
use crate::system::{PartitionMap, Region, SplitSystem};
use crate::tableau::{ImplicitVariant, MultirateScheme, Tableau};

/// Environment variable naming the artifact output directory.
pub const OUT_DIR_ENV: &str = "MRIMEX_OUT_DIR";

/// Output directory: `$MRIMEX_OUT_DIR` or `./mrimex-out`.
pub fn output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("mrimex-out"))
}

/// The six benchmark presets, in presentation order.
pub const PRESET_NAMES: [&str; 6] = ["fig2a", "fig2b", "fig2c", "fig2d", "fig2e", "fig2f"];

/// Published reference mass-loss values for the six presets, kept as printed
/// strings for side-by-side comparison (the exact numbers are summation-order
/// dependent and not reproducible bit for bit).
pub fn reference_mass_loss(name: &str) -> Option<&'static str> {
    match name {
        "fig2a" => Some("2.4e+50"),
        "fig2b" => Some("0.0"),
        "fig2c" => Some("1.1e-16"),
        "fig2d" => Some("4e-13"),
        "fig2e" => Some("6e-13"),
        "fig2f" => Some("7.8e-16"),
        _ => None,
    }
}

/// Returns the named preset configuration.
///
/// All presets share M = 81, dt = 0.0125, t_final = 0.3, slow CFL 1.01 and
/// the centered Gaussian initial condition; they differ in splitting,
/// stiffness, and speed ratio.
pub fn preset(name: &str) -> Result<BenchmarkConfig> {
    let base = BenchmarkConfig::default();
    let cfg = match name {
        "fig2a" => BenchmarkConfig {
            scheme: SchemeVariant::ExplicitMprk,
            delta: 0.05,
            ratio: 2,
            ..base
        },
        "fig2b" => BenchmarkConfig {
            scheme: SchemeVariant::SingleRateImex,
            delta: 0.05,
            ratio: 1,
            ..base
        },
        "fig2c" => BenchmarkConfig {
            scheme: SchemeVariant::MultirateAStable,
            delta: 0.05,
            ratio: 2,
            ..base
        },
        "fig2d" => BenchmarkConfig {
            scheme: SchemeVariant::MultirateAStable,
            delta: 100.0,
            ratio: 2,
            ..base
        },
        "fig2e" => BenchmarkConfig {
            scheme: SchemeVariant::MultirateLStable,
            delta: 100.0,
            ratio: 2,
            ..base
        },
        "fig2f" => BenchmarkConfig {
            scheme: SchemeVariant::MultirateAStable,
            delta: 0.05,
            ratio: 4,
            omega_ratio: 4.0,
            ..base
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Builds the time integrator a config selects.
pub fn build_scheme(config: &BenchmarkConfig) -> Result<MultirateScheme> {
    let base = Tableau::explicit_trapezoidal();
    match config.scheme {
        SchemeVariant::ExplicitMprk => MultirateScheme::new(base, config.ratio),
        SchemeVariant::SingleRateImex => {
            MultirateScheme::new(base, 1)?.augment_implicit(ImplicitVariant::AStable2)
        }
        SchemeVariant::MultirateAStable => {
            MultirateScheme::new(base, config.ratio)?.augment_implicit(ImplicitVariant::AStable2)
        }
        SchemeVariant::MultirateLStable => {
            MultirateScheme::new(base, config.ratio)?.augment_implicit(ImplicitVariant::LStable1)
        }
    }
}

/// Builds the region map a config selects: the CFL-threshold partition for
/// multirate variants, a uniform single-rate map otherwise.
pub fn build_map(config: &BenchmarkConfig) -> Result<PartitionMap> {
    let grid = config.grid()?;
    if config.scheme == SchemeVariant::SingleRateImex || config.ratio == 1 {
        return Ok(PartitionMap::uniform(grid.cells(), Region::Slow));
    }
    let profile = config.profile()?;
    Ok(build_partition(
        &grid,
        &profile,
        config.dt,
        config.cfl_threshold,
    ))
}

/// Result of one benchmark run plus where its artifacts went.
#[derive(Debug)]
pub struct RunOutcome {
    pub name: String,
    pub config: BenchmarkConfig,
    pub report: RunReport,
    pub wall: Duration,
    pub artifact_dir: PathBuf,
}

impl RunOutcome {
    /// Mass loss over the run, weighted by dx.
    pub fn mass_loss(&self) -> f64 {
        self.report.mass_loss()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{}: {} mass_loss={:.3e} max_norm={:.3e} newton_iters={} wall={:.1?}",
            self.name,
            self.report.verdict,
            self.mass_loss(),
            self.report.final_max_norm(),
            self.report.newton.iterations,
            self.wall
        )
    }
}

/// Runs one configuration and writes `report.csv` plus `u_<step>.csv`
/// snapshots under `<out_root>/<name>/`.
pub fn run_config(name: &str, config: &BenchmarkConfig, out_root: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let grid = config.grid()?;
    let scheme = build_scheme(config)?;
    let map = build_map(config)?;
    let system = make_system(config)?;
    let y0 = config.ic.evaluate(&grid);

    let opts = IntegrateOptions {
        snapshot_every: config.snapshot_every,
        mass_weight: grid.dx(),
        ..IntegrateOptions::default()
    };

    let start = Instant::now();
    let report = integrate(
        &scheme,
        &system,
        &map,
        y0,
        0.0,
        config.t_final,
        config.dt,
        &opts,
    )?;
    let wall = start.elapsed();

    let artifact_dir = out_root.join(name);
    fs::create_dir_all(&artifact_dir)?;
    fs::write(artifact_dir.join("report.csv"), report.to_csv())?;
    for snap in &report.snapshots {
        let mut csv = String::from("x,u\n");
        for (k, u) in snap.y.iter().enumerate() {
            let _ = writeln!(csv, "{},{}", grid.x(k), u);
        }
        fs::write(artifact_dir.join(format!("u_{}.csv", snap.step)), csv)?;
    }

    Ok(RunOutcome {
        name: name.to_string(),
        config: config.clone(),
        report,
        wall,
        artifact_dir,
    })
}

/// One row of the six-panel summary.
#[derive(Debug)]
pub struct SummaryRow {
    pub name: String,
    pub scheme: &'static str,
    pub delta: f64,
    pub ratio: usize,
    pub verdict: Option<Verdict>,
    pub mass_loss: Option<f64>,
    pub final_max_norm: Option<f64>,
    pub newton_iterations: usize,
    pub wall_ms: f64,
    pub ref_mass_loss: &'static str,
    pub failure: Option<String>,
}

/// Verdict/mass-loss table over all presets, with the reference values
/// alongside for manual comparison.
#[derive(Debug, Default)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

impl std::fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<7} {:<18} {:>7} {:>3} {:<12} {:>12} {:>12} {:>9} {:>8} {:>10}",
            "preset",
            "scheme",
            "delta",
            "m",
            "verdict",
            "mass_loss",
            "ref_loss",
            "max_norm",
            "newton",
            "wall_ms"
        )?;
        for r in &self.rows {
            let verdict = match (&r.failure, r.verdict) {
                (Some(_), _) => "FAILED".to_string(),
                (None, Some(v)) => v.to_string(),
                (None, None) => "-".to_string(),
            };
            let loss = r.mass_loss.map_or("-".to_string(), |v| format!("{v:.3e}"));
            let norm = r
                .final_max_norm
                .map_or("-".to_string(), |v| format!("{v:.3e}"));
            writeln!(
                f,
                "{:<7} {:<18} {:>7} {:>3} {:<12} {:>12} {:>12} {:>9} {:>8} {:>10.1}",
                r.name,
                r.scheme,
                r.delta,
                r.ratio,
                verdict,
                loss,
                r.ref_mass_loss,
                norm,
                r.newton_iterations,
                r.wall_ms
            )?;
            if let Some(msg) = &r.failure {
                writeln!(f, "        failure: {msg}")?;
            }
        }
        Ok(())
    }
}

/// Runs all six presets and assembles the comparison table; per-run errors
/// become failed rows rather than aborting the sweep.
pub fn reproduce_fig2(out_root: &Path) -> Result<SummaryTable> {
    let mut table = SummaryTable::default();
    for name in PRESET_NAMES {
        let config = preset(name)?;
        let scheme_name = config.scheme.name();
        let (delta, ratio) = (config.delta, config.ratio);
        let started = Instant::now();
        match run_config(name, &config, out_root) {
            Ok(outcome) => table.rows.push(SummaryRow {
                name: name.to_string(),
                scheme: scheme_name,
                delta,
                ratio,
                verdict: Some(outcome.report.verdict),
                mass_loss: Some(outcome.mass_loss()),
                final_max_norm: Some(outcome.report.final_max_norm()),
                newton_iterations: outcome.report.newton.iterations,
                wall_ms: outcome.wall.as_secs_f64() * 1e3,
                ref_mass_loss: reference_mass_loss(name).unwrap_or("-"),
                failure: outcome.report.failure.clone(),
            }),
            Err(e) => table.rows.push(SummaryRow {
                name: name.to_string(),
                scheme: scheme_name,
                delta,
                ratio,
                verdict: None,
                mass_loss: None,
                final_max_norm: None,
                newton_iterations: 0,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
                ref_mass_loss: reference_mass_loss(name).unwrap_or("-"),
                failure: Some(e.to_string()),
            }),
        }
    }
    Ok(table)
}

/// One refinement level of a convergence study.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub error: f64,
    /// log2(error ratio) against the previous coarser level.
    pub rate: Option<f64>,
}

/// Observed orders from successive step halvings against a fine reference.
#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Errors decrease at every refinement; non-monotone tables usually mean
    /// a non-smooth configuration.
    pub monotone: bool,
}

impl ConvergenceTable {
    /// Rate measured at the finest pair.
    pub fn final_rate(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dt,error,rate\n");
        for r in &self.rows {
            match r.rate {
                Some(rate) => {
                    let _ = writeln!(out, "{},{},{}", r.dt, r.error, rate);
                }
                None => {
                    let _ = writeln!(out, "{},{},", r.dt, r.error);
                }
            }
        }
        out
    }
}

impl std::fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>12} {:>14} {:>8}", "dt", "error", "rate")?;
        for r in &self.rows {
            match r.rate {
                Some(rate) => writeln!(f, "{:>12.6e} {:>14.6e} {:>8.3}", r.dt, r.error, rate)?,
                None => writeln!(f, "{:>12.6e} {:>14.6e} {:>8}", r.dt, r.error, "-")?,
            }
        }
        if !self.monotone {
            writeln!(f, "warning: error ratios are non-monotone")?;
        }
        Ok(())
    }
}

/// Measures observed orders for `scheme` on `sys` by halving `dt0`
/// `halvings` times; the reference is the same scheme at dt0 / 2^(halvings+2).
#[allow(clippy::too_many_arguments)]
pub fn convergence_rates(
    scheme: &MultirateScheme,
    sys: &dyn SplitSystem,
    map: &PartitionMap,
    y0: &[f64],
    t0: f64,
    t_final: f64,
    dt0: f64,
    halvings: usize,
) -> Result<ConvergenceTable> {
    if halvings < 1 {
        return Err(Error::InvalidArgument("need at least one halving".into()));
    }
    let opts = IntegrateOptions::default();
    let solve_at = |dt: f64| -> Result<Vec<f64>> {
        let report = integrate(scheme, sys, map, y0.to_vec(), t0, t_final, dt, &opts)?;
        if let Some(msg) = report.failure {
            return Err(Error::InvalidArgument(format!(
                "convergence run failed at dt={dt}: {msg}"
            )));
        }
        Ok(report.final_snapshot().y.clone())
    };

    let dt_ref = dt0 / 2f64.powi(halvings as i32 + 2);
    let reference = solve_at(dt_ref)?;

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(halvings + 1);
    let mut monotone = true;
    for k in 0..=halvings {
        let dt = dt0 / 2f64.powi(k as i32);
        let y = solve_at(dt)?;
        let error = y
            .iter()
            .zip(&reference)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let rate = rows.last().map(|prev: &ConvergenceRow| {
            if error > 0.0 && prev.error > 0.0 {
                (prev.error / error).log2()
            } else {
                f64::NAN
            }
        });
        if let Some(prev) = rows.last() {
            if error >= prev.error {
                monotone = false;
            }
        }
        rows.push(ConvergenceRow { dt, error, rate });
    }
    Ok(ConvergenceTable { rows, monotone })
}

/// Convergence study for a benchmark config (the reference is the same
/// scheme at dt / 2^(halvings+2); halvings >= 3 keeps the rates readable).
pub fn convergence_for_config(
    config: &BenchmarkConfig,
    halvings: usize,
) -> Result<ConvergenceTable> {
    if halvings < 3 {
        return Err(Error::InvalidArgument(
            "convergence study needs halvings >= 3".into(),
        ));
    }
    config.validate()?;
    let grid = config.grid()?;
    let scheme = build_scheme(config)?;
    let map = build_map(config)?;
    let system = make_system(config)?;
    let y0 = config.ic.evaluate(&grid);
    convergence_rates(
        &scheme,
        &system,
        &map,
        &y0,
        0.0,
        config.t_final,
        config.dt,
        halvings,
    )
}

/// Named stability scans offered by the CLI: the two implicit variants
/// (implicit-only |R|) and the explicit base method.
pub fn scan_variant(variant: &str, re: ScanAxis, im: ScanAxis) -> Result<StabilityScan> {
    let base = Tableau::explicit_trapezoidal();
    match variant.to_ascii_lowercase().as_str() {
        "astable2" => {
            let scheme =
                MultirateScheme::new(base, 2)?.augment_implicit(ImplicitVariant::AStable2)?;
            scan_region(&scheme, ScanComponent::Stiff, ZTriple::ZERO, re, im)
        }
        "lstable1" => {
            let scheme =
                MultirateScheme::new(base, 2)?.augment_implicit(ImplicitVariant::LStable1)?;
            scan_region(&scheme, ScanComponent::Stiff, ZTriple::ZERO, re, im)
        }
        "explicit" => {
            let scheme = MultirateScheme::new(base, 1)?;
            scan_region(&scheme, ScanComponent::Fast, ZTriple::ZERO, re, im)
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown scan variant `{other}` (expected astable2, lstable1, explicit)"
        ))),
    }
}
