//! Stability functions on the scalar three-rate model problem.
//!
//! The model is `y' = lambda_fast*y + lambda_slow*y + lambda_stiff*y` with
//! the three terms time-stepped by the fast, slow, and implicit coefficients
//! of one scheme (the operators are assumed simultaneously diagonalizable).
//! [`r_numeric`] runs one full step of the scheme on this model; the closed
//! forms in [`r_implicit_closed_form`] serve as its implicit-only oracle.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tableau::{ImplicitVariant, MultirateScheme};

/// The scalar model's three complex rates (units 1/time).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarModel {
    pub lambda_fast: Complex64,
    pub lambda_slow: Complex64,
    pub lambda_stiff: Complex64,
}

impl ScalarModel {
    /// Nondimensionalizes to z = lambda * dt.
    pub fn z(&self, dt: f64) -> ZTriple {
        ZTriple {
            fast: self.lambda_fast * dt,
            slow: self.lambda_slow * dt,
            stiff: self.lambda_stiff * dt,
        }
    }
}

/// Dimensionless arguments z = lambda * dt for the three parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZTriple {
    pub fast: Complex64,
    pub slow: Complex64,
    pub stiff: Complex64,
}

impl ZTriple {
    pub const ZERO: ZTriple = ZTriple {
        fast: Complex64::ZERO,
        slow: Complex64::ZERO,
        stiff: Complex64::ZERO,
    };
}

/// Closed-form stability function of the implicit part:
/// (2+z)/(2-z) for the A-stable variant, 1/(1-z) for the L-stable one.
pub fn r_implicit_closed_form(variant: ImplicitVariant, z: Complex64) -> Result<Complex64> {
    match variant {
        ImplicitVariant::AStable2 => {
            let denom = 2.0 - z;
            if denom.norm() == 0.0 {
                return Err(Error::Domain("pole of (2+z)/(2-z) at z = 2".into()));
            }
            Ok((2.0 + z) / denom)
        }
        ImplicitVariant::LStable1 => {
            let denom = 1.0 - z;
            if denom.norm() == 0.0 {
                return Err(Error::Domain("pole of 1/(1-z) at z = 1".into()));
            }
            Ok(denom.inv())
        }
    }
}

/// One step of `scheme` on the scalar model with y0 = 1; returns y1.
///
/// Stage i < s: Y_i = 1 + z_f * sum_j aF_ij Y_j + z_s * sum_j aS_ij Y_j.
/// The last stage adds z_i * gamma * sum_{j<=s} Y_j and is solved for Y_s.
/// Completion: y1 = 1 + sum_i b_i (z_f + z_s + z_i) Y_i.
pub fn r_numeric(scheme: &MultirateScheme, z: ZTriple) -> Result<Complex64> {
    let s = scheme.stages();
    let gamma = match &scheme.implicit {
        Some(aug) => aug.gamma(),
        None => {
            if z.stiff.norm() != 0.0 {
                return Err(Error::Structure(
                    "nonzero stiff rate needs an augmented scheme".into(),
                ));
            }
            0.0
        }
    };

    let one = Complex64::new(1.0, 0.0);
    let mut stages: Vec<Complex64> = Vec::with_capacity(s);
    for i in 0..s {
        let mut acc = one;
        for (j, yj) in stages.iter().enumerate() {
            acc += (z.fast * scheme.fast.a(i, j) + z.slow * scheme.slow.a(i, j)) * yj;
        }
        if i == s - 1 && scheme.is_augmented() {
            // Y_s = acc + z_i*gamma*(sum_{j<s} Y_j) + z_i*gamma*Y_s
            let prior: Complex64 = stages.iter().sum();
            let denom = one - z.stiff * gamma;
            if denom.norm() == 0.0 {
                return Err(Error::Domain(format!(
                    "singular implicit stage: 1 - gamma*z = 0 at z = {}",
                    z.stiff
                )));
            }
            acc = (acc + z.stiff * gamma * prior) / denom;
        }
        stages.push(acc);
    }

    let rate_sum = z.fast + z.slow + z.stiff;
    let mut y1 = one;
    for (bi, yi) in scheme.b().iter().zip(&stages) {
        y1 += *bi * rate_sum * yi;
    }
    Ok(y1)
}

/// Uniformly spaced samples over [start, stop]; `points >= 2` puts the
/// endpoints on the grid, `points == 1` samples only `start`.
#[derive(Clone, Copy, Debug)]
pub struct ScanAxis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl ScanAxis {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.points <= 1 {
            self.start
        } else {
            self.start + (self.stop - self.start) * k as f64 / (self.points - 1) as f64
        }
    }
}

/// Which of the three z components the scan grid feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanComponent {
    Fast,
    Slow,
    Stiff,
}

/// |R| sampled over a rectangle of one z component, other components fixed.
#[derive(Clone, Debug)]
pub struct StabilityScan {
    pub component: ScanComponent,
    pub fixed: ZTriple,
    pub re: ScanAxis,
    pub im: ScanAxis,
    /// |R| per grid point, row-major: rows sweep the imaginary axis, columns
    /// the real axis. Poles are recorded as NaN.
    pub abs_r: Vec<f64>,
}

impl StabilityScan {
    pub fn at(&self, im_idx: usize, re_idx: usize) -> f64 {
        self.abs_r[im_idx * self.re.points + re_idx]
    }

    /// Largest finite |R| on the grid.
    pub fn max_abs_r(&self) -> f64 {
        self.abs_r
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0_f64, |m, v| m.max(*v))
    }

    /// True when every finite grid value satisfies |R| <= 1 + tol.
    pub fn contained_in_unit_disk(&self, tol: f64) -> bool {
        self.abs_r
            .iter()
            .filter(|v| v.is_finite())
            .all(|v| *v <= 1.0 + tol)
    }

    /// Per-point classification against the |R| = 1 contour (poles count as
    /// unstable).
    pub fn unit_disk_mask(&self) -> Vec<bool> {
        self.abs_r.iter().map(|v| *v <= 1.0).collect()
    }

    /// CSV rows `re_z,im_z,abs_R`, row-major over the grid.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_z,im_z,abs_R\n");
        for ki in 0..self.im.points {
            let im = self.im.value(ki);
            for kr in 0..self.re.points {
                let re = self.re.value(kr);
                let v = self.at(ki, kr);
                if v.is_nan() {
                    out.push_str(&format!("{re},{im},NaN\n"));
                } else {
                    out.push_str(&format!("{re},{im},{v}\n"));
                }
            }
        }
        out
    }
}

/// Evaluates |R| of `scheme` over a grid of one z component; pole points are
/// flagged NaN and the scan continues.
pub fn scan_region(
    scheme: &MultirateScheme,
    component: ScanComponent,
    fixed: ZTriple,
    re: ScanAxis,
    im: ScanAxis,
) -> Result<StabilityScan> {
    if re.points < 1 || im.points < 1 {
        return Err(Error::InvalidArgument(
            "scan needs >= 1 point per axis".into(),
        ));
    }
    let mut abs_r = Vec::with_capacity(re.points * im.points);
    for ki in 0..im.points {
        for kr in 0..re.points {
            let z = Complex64::new(re.value(kr), im.value(ki));
            let mut triple = fixed;
            match component {
                ScanComponent::Fast => triple.fast = z,
                ScanComponent::Slow => triple.slow = z,
                ScanComponent::Stiff => triple.stiff = z,
            }
            match r_numeric(scheme, triple) {
                Ok(r) => abs_r.push(r.norm()),
                Err(Error::Domain(_)) => abs_r.push(f64::NAN),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(StabilityScan {
        component,
        fixed,
        re,
        im,
        abs_r,
    })
}
