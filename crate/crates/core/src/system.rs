//! Split right-hand-side abstraction and per-component partition maps.
//!
//! A [`SplitSystem`] is `y' = f(y) + g(y)` where f is the nonstiff term,
//! evaluated per region through component masks, and g is the stiff term,
//! always evaluated globally (single rate). Masked f evaluations must be
//! additive over disjoint masks: summing the contributions of a mask
//! partition equals the full-mask evaluation componentwise.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Per-component region label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Fast,
    Buffer,
    Slow,
}

/// Component index set, stored as a membership vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    on: Vec<bool>,
}

impl Mask {
    pub fn new(on: Vec<bool>) -> Self {
        Self { on }
    }

    pub fn full(n: usize) -> Self {
        Self { on: vec![true; n] }
    }

    pub fn empty(n: usize) -> Self {
        Self { on: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.on.len()
    }

    pub fn is_empty(&self) -> bool {
        self.on.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.on[k]
    }

    pub fn count(&self) -> usize {
        self.on.iter().filter(|v| **v).count()
    }

    /// Zeroes the components outside the mask.
    pub fn apply(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.on.len());
        for (vi, keep) in v.iter_mut().zip(&self.on) {
            if !keep {
                *vi = 0.0;
            }
        }
    }
}

/// Classification of every component into Fast / Buffer / Slow.
///
/// The stepper only distinguishes two rates: the fast mask covers Fast cells,
/// the slow mask covers Buffer and Slow cells (buffer cells run the slow
/// method; the label exists so partition validation can measure the gap
/// between Fast and Slow cells).
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionMap {
    labels: Vec<Region>,
}

/// Fast/Slow adjacency violations found by [`validate_partition`].
#[derive(Clone, Debug)]
pub struct PartitionReport {
    /// (fast index, slow index) pairs closer than the stencil reach.
    pub violations: Vec<(usize, usize)>,
}

impl PartitionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl PartitionMap {
    pub fn new(labels: Vec<Region>) -> Self {
        Self { labels }
    }

    pub fn uniform(n: usize, region: Region) -> Self {
        Self {
            labels: vec![region; n],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, k: usize) -> Region {
        self.labels[k]
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    /// Mask of Fast components.
    pub fn fast_mask(&self) -> Mask {
        Mask::new(self.labels.iter().map(|r| *r == Region::Fast).collect())
    }

    /// Mask of Buffer and Slow components.
    pub fn slow_mask(&self) -> Mask {
        Mask::new(self.labels.iter().map(|r| *r != Region::Fast).collect())
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|r| **r == region).count()
    }
}

/// Checks that every Fast cell is at least `stencil_reach` cells away from
/// every Slow cell (Buffer cells fill the gap). Report-only; `periodic`
/// wraps the index line into a ring.
pub fn validate_partition(
    map: &PartitionMap,
    stencil_reach: usize,
    periodic: bool,
) -> PartitionReport {
    let n = map.len();
    let mut violations = Vec::new();
    for k in 0..n {
        if map.label(k) != Region::Fast {
            continue;
        }
        for d in 1..=stencil_reach {
            let mut neighbors: Vec<usize> = Vec::with_capacity(2);
            if periodic {
                neighbors.push((k + d) % n);
                neighbors.push((k + n - (d % n)) % n);
            } else {
                if k + d < n {
                    neighbors.push(k + d);
                }
                if k >= d {
                    neighbors.push(k - d);
                }
            }
            for j in neighbors {
                if map.label(j) == Region::Slow {
                    violations.push((k, j));
                }
            }
        }
    }
    violations.sort_unstable();
    violations.dedup();
    PartitionReport { violations }
}

/// Split right-hand side `y' = f(y) + g(y)`.
///
/// `eval_f` writes the contribution of f restricted to the masked components
/// (zero elsewhere); it may read the whole of `y`, which is how coupling
/// across regions enters. Implementations must be deterministic and
/// reentrant for distinct state vectors.
pub trait SplitSystem {
    fn dim(&self) -> usize;

    /// `out[k] = f_k(y)` for k in mask, 0 otherwise.
    fn eval_f(&self, y: &[f64], mask: &Mask, out: &mut [f64]);

    /// out = g(y) over all components.
    fn eval_g(&self, y: &[f64], out: &mut [f64]);

    /// Jacobian of g, if available analytically; `None` selects
    /// finite-difference Jacobians in the stage solver.
    fn jacobian_g(&self, _y: &[f64]) -> Option<Matrix> {
        None
    }

    fn description(&self) -> &str {
        ""
    }
}

/// Linear split system f(y) = mask o (F y), g(y) = G y; the workhorse for
/// oracle tests and scalar model checks.
#[derive(Clone, Debug)]
pub struct LinearSplitSystem {
    f_matrix: Matrix,
    g_matrix: Option<Matrix>,
}

impl LinearSplitSystem {
    pub fn new(f_matrix: Matrix, g_matrix: Option<Matrix>) -> Result<Self> {
        if f_matrix.rows() != f_matrix.cols() {
            return Err(Error::Dimension("f matrix must be square".into()));
        }
        if let Some(g) = &g_matrix {
            if g.rows() != f_matrix.rows() || g.cols() != f_matrix.cols() {
                return Err(Error::Dimension("g matrix must match f".into()));
            }
        }
        Ok(Self { f_matrix, g_matrix })
    }

    pub fn f_matrix(&self) -> &Matrix {
        &self.f_matrix
    }

    pub fn g_matrix(&self) -> Option<&Matrix> {
        self.g_matrix.as_ref()
    }
}

impl SplitSystem for LinearSplitSystem {
    fn dim(&self) -> usize {
        self.f_matrix.rows()
    }

    fn eval_f(&self, y: &[f64], mask: &Mask, out: &mut [f64]) {
        let full = self.f_matrix.matvec(y);
        out.copy_from_slice(&full);
        mask.apply(out);
    }

    fn eval_g(&self, y: &[f64], out: &mut [f64]) {
        match &self.g_matrix {
            Some(g) => out.copy_from_slice(&g.matvec(y)),
            None => out.fill(0.0),
        }
    }

    fn jacobian_g(&self, _y: &[f64]) -> Option<Matrix> {
        Some(match &self.g_matrix {
            Some(g) => g.clone(),
            None => Matrix::zeros(self.dim(), self.dim()),
        })
    }

    fn description(&self) -> &str {
        "linear split system"
    }
}
