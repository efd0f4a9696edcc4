//! Conservative multirate explicit Runge-Kutta time integration with
//! one-implicit-stage A-stable and L-stable extensions.
//!
//! The integrator advances `y' = f(y) + g(y)` where the nonstiff term f is
//! partitioned per component into fast and slow regions (fast cells are
//! subcycled with step dt/m, slow and buffer cells replicate the base method
//! at the full step) and the stiff term g is handled by a single implicit
//! stage shared across all partitions. Fast and slow methods share one
//! weight vector, so componentwise sums (discrete mass, for conservative
//! spatial discretizations) are preserved to roundoff regardless of
//! stability.
//!
//! Modules:
//! - [`tableau`]: base/slow/fast tableau construction, telescoping nesting,
//!   implicit augmentation, order-condition checks.
//! - [`stability`]: closed-form and numeric stability functions on the
//!   scalar three-rate model, plus region scans.
//! - [`system`]: the split right-hand-side abstraction and partition maps.
//! - [`stage_solver`]: Newton solve of the single implicit stage.
//! - [`stepper`]: one-step advancement and the fixed-step run driver.
//! - [`advdiff`]: the 1D periodic advection-diffusion benchmark.
//! - [`harness`]: named presets, summary tables, convergence studies, scans.
//!
//! Running the stiff benchmark configuration end to end:
//!
//! ```
//! use mrimex::advdiff::make_system;
//! use mrimex::harness::{build_map, build_scheme, preset};
//! use mrimex::{integrate, IntegrateOptions, Verdict};
//!
//! let config = preset("fig2e").unwrap();
//! let grid = config.grid().unwrap();
//! let scheme = build_scheme(&config).unwrap();
//! let map = build_map(&config).unwrap();
//! let system = make_system(&config).unwrap();
//! let y0 = config.ic.evaluate(&grid);
//!
//! let opts = IntegrateOptions {
//!     mass_weight: grid.dx(),
//!     ..IntegrateOptions::default()
//! };
//! let report = integrate(
//!     &scheme, &system, &map, y0, 0.0, config.t_final, config.dt, &opts,
//! )
//! .unwrap();
//!
//! assert_eq!(report.verdict, Verdict::Stable);
//! assert!(report.mass_loss() <= 1e-10);
//! assert_eq!(report.newton.solves, 24); // one implicit solve per step
//! ```

pub mod advdiff;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod stability;
pub mod stage_solver;
pub mod stepper;
pub mod system;
pub mod tableau;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use stability::{r_implicit_closed_form, r_numeric, ScanAxis, ScanComponent, ZTriple};
pub use stage_solver::{JacobianMode, SolverConfig};
pub use stepper::{integrate, step, IntegrateOptions, RunReport, StepperState, Verdict};
pub use system::{Mask, PartitionMap, Region, SplitSystem};
pub use tableau::{
    build_fast, build_slow, validate_tableau, ImplicitAugmentation, ImplicitVariant,
    MultirateScheme, OrderReport, Tableau,
};
