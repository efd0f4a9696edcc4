//! Butcher tableaux and the multirate scheme construction.
//!
//! A multirate scheme pairs two tableaux generated from one explicit base
//! method: the *slow* method repeats the base `m` times at the full step
//! (block-diagonal replication, weights scaled by `1/m`), and the *fast*
//! method chains `m` applications of the base at step `dt/m` (block
//! lower-triangular composition). Both share one weight vector `b`, which
//! is what preserves linear invariants. An optional implicit augmentation
//! adds a constant last row `a~[s][j] = gamma` that turns the final stage
//! into the scheme's single implicit stage.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Tolerance for the consistency checks in [`Tableau::validate`].
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// A Runge-Kutta method given by its coefficients (a, b, c).
#[derive(Clone, Debug, PartialEq)]
pub struct Tableau {
    a: Matrix,
    b: Vec<f64>,
    c: Vec<f64>,
}

/// Consistency report for a single tableau; produced by [`Tableau::validate`].
#[derive(Clone, Debug)]
pub struct ValidationReport {
    /// |c_i - sum_j a_ij| per stage.
    pub row_sum_residuals: Vec<f64>,
    /// |sum_i b_i - 1|.
    pub weight_sum_residual: f64,
    /// True when a_ij = 0 for j >= i.
    pub explicit: bool,
}

impl ValidationReport {
    /// All residuals below [`CONSISTENCY_TOL`] and strictly lower triangular.
    pub fn is_valid_explicit(&self) -> bool {
        self.explicit
            && self.weight_sum_residual <= CONSISTENCY_TOL
            && self.row_sum_residuals.iter().all(|r| *r <= CONSISTENCY_TOL)
    }

    pub fn max_row_sum_residual(&self) -> f64 {
        self.row_sum_residuals.iter().fold(0.0, |m, r| m.max(*r))
    }
}

impl Tableau {
    /// Builds a tableau from stage rows; only dimensions are enforced here,
    /// consistency is reported by [`Tableau::validate`].
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if a.len() != s || c.len() != s {
            return Err(Error::Dimension(format!(
                "tableau with {} stage rows, {} weights, {} abscissae",
                a.len(),
                s,
                c.len()
            )));
        }
        let a = Matrix::from_rows(&a)?;
        if a.cols() != s && s != 0 {
            return Err(Error::Dimension(format!(
                "stage matrix is {}x{}, expected {s}x{s}",
                a.rows(),
                a.cols()
            )));
        }
        Ok(Self { a, b, c })
    }

    fn from_matrix(a: Matrix, b: Vec<f64>, c: Vec<f64>) -> Self {
        debug_assert_eq!(a.rows(), b.len());
        debug_assert_eq!(a.rows(), c.len());
        Self { a, b, c }
    }

    /// Two-stage explicit trapezoidal method: c = [0, 1], a21 = 1, b = [1/2, 1/2].
    pub fn explicit_trapezoidal() -> Self {
        Self::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
            vec![0.0, 1.0],
        )
        .expect("static coefficients")
    }

    /// One-stage explicit Euler.
    pub fn explicit_euler() -> Self {
        Self::new(vec![vec![0.0]], vec![1.0], vec![0.0]).expect("static coefficients")
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)]
    }

    pub fn a_row(&self, i: usize) -> &[f64] {
        self.a.row(i)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Row-sum consistency, weight sum, and explicitness.
    pub fn validate(&self) -> ValidationReport {
        let s = self.stages();
        let mut row_sum_residuals = Vec::with_capacity(s);
        let mut explicit = true;
        for i in 0..s {
            let sum: f64 = self.a.row(i).iter().sum();
            row_sum_residuals.push((sum - self.c[i]).abs());
            for j in i..s {
                if self.a[(i, j)] != 0.0 {
                    explicit = false;
                }
            }
        }
        let weight_sum_residual = (self.b.iter().sum::<f64>() - 1.0).abs();
        ValidationReport {
            row_sum_residuals,
            weight_sum_residual,
            explicit,
        }
    }

    fn require_valid_explicit(&self, role: &str) -> Result<()> {
        let report = self.validate();
        if !report.explicit {
            return Err(Error::Structure(format!("{role} method must be explicit")));
        }
        if !report.is_valid_explicit() {
            return Err(Error::Structure(format!(
                "{role} method fails consistency: max row-sum residual {:.3e}, weight residual {:.3e}",
                report.max_row_sum_residual(),
                report.weight_sum_residual
            )));
        }
        Ok(())
    }

    /// Plain-text form: header `s=<n>`, then the s rows of `a`, then `b`, then `c`.
    /// Floats use the shortest round-trip representation, so output is byte-stable.
    pub fn to_text(&self) -> String {
        let s = self.stages();
        let mut out = format!("s={s}\n");
        for i in 0..s {
            let row: Vec<String> = self.a.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        let b: Vec<String> = self.b.iter().map(|v| format!("{v}")).collect();
        out.push_str(&b.join(" "));
        out.push('\n');
        let c: Vec<String> = self.c.iter().map(|v| format!("{v}")).collect();
        out.push_str(&c.join(" "));
        out.push('\n');
        out
    }

    /// Parses the format written by [`Tableau::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty tableau text".into()))?;
        let s: usize = header
            .strip_prefix("s=")
            .ok_or_else(|| Error::Config(format!("expected `s=<n>` header, got `{header}`")))?
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("bad stage count in `{header}`: {e}")))?;
        let parse_row = |line: &str| -> Result<Vec<f64>> {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|e| Error::Config(format!("bad number `{tok}`: {e}")))
                })
                .collect()
        };
        let mut rows = Vec::with_capacity(s);
        for _ in 0..s {
            let line = lines
                .next()
                .ok_or_else(|| Error::Config("truncated tableau text".into()))?;
            rows.push(parse_row(line)?);
        }
        let b = parse_row(
            lines
                .next()
                .ok_or_else(|| Error::Config("missing weight row".into()))?,
        )?;
        let c = parse_row(
            lines
                .next()
                .ok_or_else(|| Error::Config("missing abscissa row".into()))?,
        )?;
        Tableau::new(rows, b, c)
    }
}

/// Validates a tableau (dimension-consistent by construction) and reports
/// row-sum residuals, the weight-sum residual, and explicitness.
pub fn validate_tableau(t: &Tableau) -> ValidationReport {
    t.validate()
}

/// Slow-method construction: `m` block-diagonal copies of the base, each
/// restarting from the step's initial state, with weights scaled by `1/m`.
pub fn build_slow(base: &Tableau, m: usize) -> Result<Tableau> {
    if m < 1 {
        return Err(Error::InvalidArgument(
            "multirate ratio m must be >= 1".into(),
        ));
    }
    base.require_valid_explicit("base")?;
    if m == 1 {
        return Ok(base.clone());
    }
    let s = base.stages();
    let n = m * s;
    let mut a = Matrix::zeros(n, n);
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let inv_m = 1.0 / m as f64;
    for k in 0..m {
        for i in 0..s {
            for j in 0..s {
                a[(k * s + i, k * s + j)] = base.a(i, j);
            }
            b.push(inv_m * base.b[i]);
            c.push(base.c[i]);
        }
    }
    Ok(Tableau::from_matrix(a, b, c))
}

/// Fast-method construction: `m` chained applications of the base at step
/// `dt/m`. Diagonal blocks are `base.a / m`; block (k, l) for l < k is the
/// completed sub-step `(1/m) * ones * b^T`; abscissae shift by `k/m`.
pub fn build_fast(base: &Tableau, m: usize) -> Result<Tableau> {
    if m < 1 {
        return Err(Error::InvalidArgument(
            "multirate ratio m must be >= 1".into(),
        ));
    }
    base.require_valid_explicit("base")?;
    if m == 1 {
        return Ok(base.clone());
    }
    let s = base.stages();
    let n = m * s;
    let mut a = Matrix::zeros(n, n);
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let inv_m = 1.0 / m as f64;
    for k in 0..m {
        for i in 0..s {
            for l in 0..k {
                for j in 0..s {
                    a[(k * s + i, l * s + j)] = inv_m * base.b[j];
                }
            }
            for j in 0..s {
                a[(k * s + i, k * s + j)] = inv_m * base.a(i, j);
            }
            b.push(inv_m * base.b[i]);
            c.push((base.c[i] + k as f64) * inv_m);
        }
    }
    Ok(Tableau::from_matrix(a, b, c))
}

/// Which implicit last-row augmentation a scheme carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImplicitVariant {
    /// gamma = 1/2: second-order implicit part, A-stable with R(inf) = -1.
    AStable2,
    /// gamma = 1: first-order implicit part, L-stable.
    LStable1,
}

impl ImplicitVariant {
    pub fn gamma(self) -> f64 {
        match self {
            ImplicitVariant::AStable2 => 0.5,
            ImplicitVariant::LStable1 => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ImplicitVariant::AStable2 => "astable2",
            ImplicitVariant::LStable1 => "lstable1",
        }
    }
}

impl std::str::FromStr for ImplicitVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "astable2" | "a-stable" | "astable" => Ok(ImplicitVariant::AStable2),
            "lstable1" | "l-stable" | "lstable" => Ok(ImplicitVariant::LStable1),
            other => Err(Error::InvalidArgument(format!(
                "unknown implicit variant `{other}` (expected astable2 or lstable1)"
            ))),
        }
    }
}

/// Implicit coefficients attached to a scheme: zero everywhere except a
/// constant last row, so exactly one stage is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct ImplicitAugmentation {
    gamma: f64,
    a_tilde: Matrix,
    c_tilde: Vec<f64>,
    variant: ImplicitVariant,
}

impl ImplicitAugmentation {
    /// Constant-last-row augmentation for an s-stage method.
    pub fn new(variant: ImplicitVariant, stages: usize) -> Result<Self> {
        if stages == 0 {
            return Err(Error::InvalidArgument(
                "augmentation needs >= 1 stage".into(),
            ));
        }
        let gamma = variant.gamma();
        let mut a_tilde = Matrix::zeros(stages, stages);
        for j in 0..stages {
            a_tilde[(stages - 1, j)] = gamma;
        }
        // c~ is always the row sums of a~: zeros except c~_s = s*gamma.
        let mut c_tilde = vec![0.0; stages];
        c_tilde[stages - 1] = a_tilde.row(stages - 1).iter().sum();
        Ok(Self {
            gamma,
            a_tilde,
            c_tilde,
            variant,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn variant(&self) -> ImplicitVariant {
        self.variant
    }

    pub fn stages(&self) -> usize {
        self.c_tilde.len()
    }

    pub fn a_tilde(&self) -> &Matrix {
        &self.a_tilde
    }

    pub fn c_tilde(&self) -> &[f64] {
        &self.c_tilde
    }

    /// Renders the augmentation as a tableau (a~, shared b, c~) for printing
    /// and golden files.
    pub fn as_tableau(&self, b: &[f64]) -> Result<Tableau> {
        if b.len() != self.stages() {
            return Err(Error::Dimension(
                "weight vector length does not match augmentation".into(),
            ));
        }
        Ok(Tableau::from_matrix(
            self.a_tilde.clone(),
            b.to_vec(),
            self.c_tilde.clone(),
        ))
    }
}

/// A matched fast/slow tableau pair generated from one base method, plus the
/// optional implicit augmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct MultirateScheme {
    pub base: Tableau,
    pub slow: Tableau,
    pub fast: Tableau,
    /// Augmentation sized to the fast/slow stage count.
    pub implicit: Option<ImplicitAugmentation>,
    /// The same augmentation sized to the base method, for single-rate use.
    pub base_implicit: Option<ImplicitAugmentation>,
    /// Multirate ratio per nesting level.
    pub m: usize,
    /// Nesting depth; 1 for a directly constructed scheme.
    pub levels: usize,
}

impl MultirateScheme {
    /// Builds the level-1 fast/slow pair for ratio `m`.
    pub fn new(base: Tableau, m: usize) -> Result<Self> {
        let slow = build_slow(&base, m)?;
        let fast = build_fast(&base, m)?;
        Ok(Self {
            base,
            slow,
            fast,
            implicit: None,
            base_implicit: None,
            m,
            levels: 1,
        })
    }

    /// Stage count of the fast/slow pair.
    pub fn stages(&self) -> usize {
        self.fast.stages()
    }

    pub fn is_augmented(&self) -> bool {
        self.implicit.is_some()
    }

    /// Shared weight vector.
    pub fn b(&self) -> &[f64] {
        self.fast.b()
    }

    fn check_shared_b(&self) -> Result<()> {
        if self.fast.b() != self.slow.b() {
            return Err(Error::Structure(
                "fast and slow methods must share the weight vector b".into(),
            ));
        }
        Ok(())
    }

    /// Deepens the nesting: the current fast method becomes the base of a new
    /// fast/slow pair, repeated `extra_levels` times. Stage order follows the
    /// recursive block order of the construction: within each level, sub-step
    /// blocks appear left to right, so stage k of the result corresponds to
    /// stage k % s of sub-step k / s one level down.
    pub fn telescope(&self, extra_levels: usize) -> Result<Self> {
        if extra_levels < 1 {
            return Err(Error::InvalidArgument(
                "telescope needs extra_levels >= 1".into(),
            ));
        }
        if self.is_augmented() {
            return Err(Error::Structure(
                "telescope before augmenting: the augmentation is sized to the final stage count"
                    .into(),
            ));
        }
        let mut scheme = self.clone();
        for _ in 0..extra_levels {
            let new_base = scheme.fast.clone();
            scheme = Self {
                base: self.base.clone(),
                slow: build_slow(&new_base, self.m)?,
                fast: build_fast(&new_base, self.m)?,
                implicit: None,
                base_implicit: None,
                m: self.m,
                levels: scheme.levels + 1,
            };
        }
        Ok(scheme)
    }

    /// Attaches the implicit augmentation (sized to the fast/slow pair) and
    /// records the matching base-method augmentation for single-rate use.
    /// Existing explicit coefficients are untouched.
    pub fn augment_implicit(&self, variant: ImplicitVariant) -> Result<Self> {
        self.check_shared_b()?;
        let mut scheme = self.clone();
        scheme.implicit = Some(ImplicitAugmentation::new(variant, self.stages())?);
        scheme.base_implicit = Some(ImplicitAugmentation::new(variant, self.base.stages())?);
        Ok(scheme)
    }

    /// Evaluates the first- and second-order conditions this construction can
    /// satisfy and reports achieved order per part. Order is reported from the
    /// computed residuals, never assumed from the construction.
    pub fn check_order_conditions(&self) -> OrderReport {
        let b = self.fast.b();
        let dot = |c: &[f64]| -> f64 { b.iter().zip(c).map(|(bi, ci)| bi * ci).sum() };

        let sum_b: f64 = b.iter().sum();
        let b_dot_c_fast = dot(self.fast.c());
        let b_dot_c_slow = dot(self.slow.c());

        let mut residuals = vec![
            ("sum_b".to_string(), (sum_b - 1.0).abs()),
            ("b_dot_c_fast".to_string(), (b_dot_c_fast - 0.5).abs()),
            ("b_dot_c_slow".to_string(), (b_dot_c_slow - 0.5).abs()),
        ];

        let b_dot_c_tilde = self.implicit.as_ref().map(|aug| dot(aug.c_tilde()));
        if let Some(v) = b_dot_c_tilde {
            residuals.push(("b_dot_c_tilde".to_string(), (v - 0.5).abs()));
        }

        let tol = CONSISTENCY_TOL;
        let first_order = (sum_b - 1.0).abs() <= tol;
        let second_order_explicit =
            first_order && (b_dot_c_fast - 0.5).abs() <= tol && (b_dot_c_slow - 0.5).abs() <= tol;

        let achieved_order_explicit = if second_order_explicit {
            2
        } else if first_order {
            1
        } else {
            0
        };
        let achieved_order_implicit = b_dot_c_tilde.map(|v| {
            if first_order && (v - 0.5).abs() <= tol {
                2
            } else if first_order {
                1
            } else {
                0
            }
        });

        OrderReport {
            residuals,
            b_dot_c_tilde,
            achieved_order_explicit,
            achieved_order_implicit,
        }
    }
}

/// Residuals of the named order conditions and the order each part attains.
#[derive(Clone, Debug)]
pub struct OrderReport {
    /// (condition name, |residual|), in evaluation order.
    pub residuals: Vec<(String, f64)>,
    /// Computed value of b . c~, kept verbatim so reports show the number
    /// itself rather than only a pass/fail flag.
    pub b_dot_c_tilde: Option<f64>,
    pub achieved_order_explicit: u8,
    /// None when the scheme carries no implicit augmentation.
    pub achieved_order_implicit: Option<u8>,
}

impl OrderReport {
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| *r)
    }
}

impl std::fmt::Display for OrderReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (name, r) in &self.residuals {
            writeln!(f, "{name}: residual {r:.3e}")?;
        }
        if let Some(v) = self.b_dot_c_tilde {
            writeln!(f, "b_dot_c_tilde value: {v}")?;
        }
        write!(f, "explicit order {}", self.achieved_order_explicit)?;
        if let Some(o) = self.achieved_order_implicit {
            write!(f, ", implicit order {o}")?;
        }
        Ok(())
    }
}
