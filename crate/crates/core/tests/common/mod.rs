//! Shared fixtures for the integration test suites: a deterministic RNG,
//! random linear split systems, and tableau-algebra oracles kept independent
//! of the stepper implementation they check.

#![allow(dead_code)]

use mrimex::linalg::Matrix;
use mrimex::system::{PartitionMap, Region, SplitSystem};
use mrimex::tableau::Tableau;
use mrimex::Mask;

/// xorshift64* with a fixed seed: deterministic across runs and platforms.
pub struct XorShift64 {
    state: u64,
}

impl XorShift64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed.max(1) }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn vector(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.range(lo, hi)).collect()
    }

    pub fn matrix(&mut self, n: usize, scale: f64) -> Matrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| scale * self.range(-1.0, 1.0)).collect())
            .collect();
        Matrix::from_rows(&rows).unwrap()
    }

    /// Random matrix whose columns sum to zero (a conservative operator).
    pub fn zero_column_sum_matrix(&mut self, n: usize, scale: f64) -> Matrix {
        let mut m = self.matrix(n, scale);
        for j in 0..n {
            let mean: f64 = (0..n).map(|i| m[(i, j)]).sum::<f64>() / n as f64;
            for i in 0..n {
                m[(i, j)] -= mean;
            }
        }
        m
    }

    /// Random partition with at least one fast and one slow component.
    pub fn partition(&mut self, n: usize) -> PartitionMap {
        loop {
            let labels: Vec<Region> = (0..n)
                .map(|_| match self.next_u64() % 3 {
                    0 => Region::Fast,
                    1 => Region::Buffer,
                    _ => Region::Slow,
                })
                .collect();
            let fast = labels.iter().filter(|r| **r == Region::Fast).count();
            if fast > 0 && fast < n {
                return PartitionMap::new(labels);
            }
        }
    }
}

/// One explicit RK step of `tableau` on the linear system y' = L y,
/// assembled directly from the coefficients. This is the tableau-algebra
/// route used as an oracle against the stepper.
pub fn rk_step_linear(tableau: &Tableau, l: &Matrix, y0: &[f64], dt: f64) -> Vec<f64> {
    let s = tableau.stages();
    let n = y0.len();
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut rhs: Vec<Vec<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut y = y0.to_vec();
        for j in 0..i {
            let a = tableau.a(i, j);
            if a != 0.0 {
                for k in 0..n {
                    y[k] += dt * a * rhs[j][k];
                }
            }
        }
        rhs.push(l.matvec(&y));
        stages.push(y);
    }
    let mut y1 = y0.to_vec();
    for i in 0..s {
        let b = tableau.b()[i];
        for k in 0..n {
            y1[k] += dt * b * rhs[i][k];
        }
    }
    y1
}

/// Diagonal projector onto a mask.
pub fn projector(mask: &Mask) -> Matrix {
    let n = mask.len();
    let mut p = Matrix::zeros(n, n);
    for k in 0..n {
        if mask.contains(k) {
            p[(k, k)] = 1.0;
        }
    }
    p
}

/// Smooth nonlinear split two-component system: a nonstiff coupled f and a
/// cubic-decay g with analytic Jacobian. `g_scale = 0` turns the stiff term
/// off entirely.
pub struct NonlinearSplitOde {
    pub g_scale: f64,
}

impl SplitSystem for NonlinearSplitOde {
    fn dim(&self) -> usize {
        2
    }

    fn eval_f(&self, y: &[f64], mask: &Mask, out: &mut [f64]) {
        let (u, v) = (y[0], y[1]);
        out[0] = -u + 0.5 * v + 0.2 * v.sin();
        out[1] = 0.3 * u - 0.8 * v + 0.1 * (u * v).cos();
        mask.apply(out);
    }

    fn eval_g(&self, y: &[f64], out: &mut [f64]) {
        let (u, v) = (y[0], y[1]);
        out[0] = self.g_scale * (-1.2 * u * u * u + 0.3 * v);
        out[1] = self.g_scale * (-0.9 * v * v * v - 0.2 * u);
    }

    fn jacobian_g(&self, y: &[f64]) -> Option<Matrix> {
        let (u, v) = (y[0], y[1]);
        Some(
            Matrix::from_rows(&[
                vec![self.g_scale * (-3.6 * u * u), self.g_scale * 0.3],
                vec![self.g_scale * (-0.2), self.g_scale * (-2.7 * v * v)],
            ])
            .unwrap(),
        )
    }

    fn description(&self) -> &str {
        "smooth nonlinear split test system"
    }
}
