//! Newton solver for the single implicit stage equation
//! `Y - coeff * g(Y) = r` with `coeff = dt * gamma`.
//!
//! Each iteration factors `I - coeff * J_g` with dense LU. Convergence is
//! declared only from the measured residual `||Y - coeff*g(Y) - r||_inf`,
//! never from the step size, so the returned solution always satisfies the
//! stated bound.

use crate::error::{Error, Result};
use crate::linalg::{lu_factor, Matrix};
use crate::system::SplitSystem;

/// How the Jacobian of g is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianMode {
    /// Use `SplitSystem::jacobian_g`; error if the system returns `None`.
    UserProvided,
    /// One-sided finite differences with per-component perturbation
    /// `sqrt(machine eps) * (1 + |y_k|)`.
    FiniteDifference,
}

/// Stage solver settings.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Residual tolerance in the infinity norm, scaled by `1 + ||r||_inf` so
    /// solves stay meaningful on large-amplitude (e.g. diverging) states.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub jacobian: JacobianMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
            jacobian: JacobianMode::UserProvided,
        }
    }
}

/// Iteration count and final residual of one stage solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn jacobian(
    sys: &dyn SplitSystem,
    y: &[f64],
    g_at_y: &[f64],
    mode: JacobianMode,
) -> Result<Matrix> {
    match mode {
        JacobianMode::UserProvided => sys.jacobian_g(y).ok_or_else(|| {
            Error::InvalidArgument(
                "system provides no Jacobian; use JacobianMode::FiniteDifference".into(),
            )
        }),
        JacobianMode::FiniteDifference => {
            let n = y.len();
            let sqrt_eps = f64::EPSILON.sqrt();
            let mut jac = Matrix::zeros(n, n);
            let mut yp = y.to_vec();
            let mut gp = vec![0.0; n];
            for j in 0..n {
                let h = sqrt_eps * (1.0 + y[j].abs());
                yp[j] = y[j] + h;
                sys.eval_g(&yp, &mut gp);
                yp[j] = y[j];
                for i in 0..n {
                    jac[(i, j)] = (gp[i] - g_at_y[i]) / h;
                }
            }
            Ok(jac)
        }
    }
}

/// Solves `Y - coeff * g(Y) = r` by Newton iteration starting from `guess`.
///
/// Returns the solution and its iteration stats. `coeff == 0` short-circuits
/// to `r`. Affine g converges in one update.
pub fn solve_stage(
    sys: &dyn SplitSystem,
    r: &[f64],
    coeff: f64,
    guess: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    if !coeff.is_finite() {
        return Err(Error::InvalidArgument(
            "non-finite stage coefficient".into(),
        ));
    }
    if cfg.tolerance <= 0.0 || cfg.max_iterations < 1 {
        return Err(Error::InvalidArgument(
            "solver needs tolerance > 0 and max_iterations >= 1".into(),
        ));
    }
    let n = r.len();
    if guess.len() != n || sys.dim() != n {
        return Err(Error::Dimension(format!(
            "stage solve size mismatch: r {}, guess {}, system {}",
            n,
            guess.len(),
            sys.dim()
        )));
    }
    if coeff == 0.0 {
        return Ok((r.to_vec(), SolveStats::default()));
    }

    let tolerance = cfg.tolerance * (1.0 + inf_norm(r));
    let mut y = guess.to_vec();
    let mut g = vec![0.0; n];
    let mut residual = vec![0.0; n];
    let mut stats = SolveStats::default();

    for _ in 0..=cfg.max_iterations {
        sys.eval_g(&y, &mut g);
        for k in 0..n {
            residual[k] = y[k] - coeff * g[k] - r[k];
        }
        stats.residual = inf_norm(&residual);
        if !stats.residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations: stats.iterations,
                residual: stats.residual,
            });
        }
        if stats.residual <= tolerance {
            return Ok((y, stats));
        }
        if stats.iterations >= cfg.max_iterations {
            break;
        }

        // Newton step: (I - coeff*Jg) dy = -residual
        let jg = jacobian(sys, &y, &g, cfg.jacobian)?;
        let newton_matrix = Matrix::identity(n).add_scaled(-coeff, &jg);
        let factors = lu_factor(&newton_matrix, "implicit stage Jacobian")?;
        let neg_res: Vec<f64> = residual.iter().map(|v| -v).collect();
        let dy = factors.solve(&neg_res);
        for k in 0..n {
            y[k] += dy[k];
        }
        stats.iterations += 1;
    }

    Err(Error::NonConvergence {
        iterations: stats.iterations,
        residual: stats.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::LinearSplitSystem;

    fn linear_sys(l: Matrix) -> LinearSplitSystem {
        let n = l.rows();
        LinearSplitSystem::new(Matrix::zeros(n, n), Some(l)).unwrap()
    }

    #[test]
    fn linear_g_converges_in_one_iteration() {
        let l = Matrix::from_rows(&[vec![-2.0, 0.5], vec![0.1, -3.0]]).unwrap();
        let sys = linear_sys(l);
        let r = [1.0, -0.5];
        let (y, stats) = solve_stage(&sys, &r, 0.1, &r, &SolverConfig::default()).unwrap();
        assert_eq!(stats.iterations, 1);
        assert!(stats.residual <= 1e-12);
        // verify against direct solve of (I - coeff L) y = r
        let mut g = vec![0.0; 2];
        sys.eval_g(&y, &mut g);
        for k in 0..2 {
            assert!((y[k] - 0.1 * g[k] - r[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_coefficient_returns_rhs() {
        let sys = linear_sys(Matrix::from_rows(&[vec![-5.0]]).unwrap());
        let r = [3.5];
        let (y, stats) = solve_stage(&sys, &r, 0.0, &[0.0], &SolverConfig::default()).unwrap();
        assert_eq!(y, vec![3.5]);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn scalar_stiff_decay_matches_hand_solution() {
        // g(y) = -100 y, coeff = 0.0125, r = 1 -> (1 + 1.25) Y = 1
        let sys = linear_sys(Matrix::from_rows(&[vec![-100.0]]).unwrap());
        let (y, _) = solve_stage(&sys, &[1.0], 0.0125, &[1.0], &SolverConfig::default()).unwrap();
        assert!((y[0] - 1.0 / 2.25).abs() < 1e-12, "{}", y[0]);
    }

    #[test]
    fn finite_difference_agrees_with_user_jacobian() {
        struct CubicDecay;
        impl SplitSystem for CubicDecay {
            fn dim(&self) -> usize {
                2
            }
            fn eval_f(&self, _y: &[f64], _m: &crate::system::Mask, out: &mut [f64]) {
                out.fill(0.0);
            }
            fn eval_g(&self, y: &[f64], out: &mut [f64]) {
                out[0] = -y[0].powi(3) - 0.5 * y[1];
                out[1] = -2.0 * y[1] + 0.25 * y[0] * y[0];
            }
            fn jacobian_g(&self, y: &[f64]) -> Option<Matrix> {
                Some(
                    Matrix::from_rows(&[vec![-3.0 * y[0] * y[0], -0.5], vec![0.5 * y[0], -2.0]])
                        .unwrap(),
                )
            }
        }
        let sys = CubicDecay;
        let r = [0.8, -0.3];
        let cfg_user = SolverConfig::default();
        let cfg_fd = SolverConfig {
            jacobian: JacobianMode::FiniteDifference,
            ..SolverConfig::default()
        };
        let (y_user, _) = solve_stage(&sys, &r, 0.2, &r, &cfg_user).unwrap();
        let (y_fd, _) = solve_stage(&sys, &r, 0.2, &r, &cfg_fd).unwrap();
        for k in 0..2 {
            assert!(
                (y_user[k] - y_fd[k]).abs() <= 10.0 * cfg_user.tolerance,
                "component {k}: {} vs {}",
                y_user[k],
                y_fd[k]
            );
        }
    }

    #[test]
    fn exhausted_iterations_report_last_residual() {
        // nonlinear g cannot converge in a single Newton update from this guess
        struct Cubic;
        impl SplitSystem for Cubic {
            fn dim(&self) -> usize {
                1
            }
            fn eval_f(&self, _y: &[f64], _m: &crate::system::Mask, out: &mut [f64]) {
                out.fill(0.0);
            }
            fn eval_g(&self, y: &[f64], out: &mut [f64]) {
                out[0] = -y[0].powi(3);
            }
            fn jacobian_g(&self, y: &[f64]) -> Option<Matrix> {
                Some(Matrix::from_rows(&[vec![-3.0 * y[0] * y[0]]]).unwrap())
            }
        }
        let cfg = SolverConfig {
            tolerance: 1e-12,
            max_iterations: 1,
            ..SolverConfig::default()
        };
        match solve_stage(&Cubic, &[1.0], 1.0, &[1.0], &cfg) {
            Err(Error::NonConvergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 1);
                assert!(residual.is_finite() && residual > 1e-12);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn singular_newton_matrix_is_reported() {
        // g(y) = y / coeff makes I - coeff*Jg = 0
        let sys = linear_sys(Matrix::from_rows(&[vec![10.0]]).unwrap());
        match solve_stage(&sys, &[1.0], 0.1, &[0.0], &SolverConfig::default()) {
            Err(Error::Singular(_)) => {}
            other => panic!("expected singular factorization, got {other:?}"),
        }
    }
}
