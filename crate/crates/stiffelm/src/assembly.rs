//! Builds the linear system `H beta = T` for linear constant-coefficient ODE
//! collocation (residual rows followed by boundary rows) and for plain data
//! fitting, with per-row provenance and optional row weights.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::EncodedBasis;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collocation {
    Uniform { n: usize },
    Random { n: usize, seed: u64 },
}

impl Collocation {
    pub fn count(&self) -> usize {
        match *self {
            Collocation::Uniform { n } | Collocation::Random { n, .. } => n,
        }
    }

    /// Collocation points in row order. The uniform grid includes both
    /// endpoints (midpoint when n = 1); random points keep their draw order.
    pub fn points(&self) -> Vec<f64> {
        match *self {
            Collocation::Uniform { n } => {
                if n == 1 {
                    vec![0.5]
                } else {
                    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
                }
            }
            Collocation::Random { n, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| rng.gen::<f64>()).collect()
            }
        }
    }
}

/// Linear constant-coefficient ODE `a0 u + a1 u' + a2 u'' = rhs` on [0, 1]
/// with boundary conditions `u(x_i) = v_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeProblem {
    pub coeffs: (f64, f64, f64),
    pub rhs: f64,
    pub boundary_conditions: Vec<(f64, f64)>,
    pub collocation: Collocation,
}

impl OdeProblem {
    /// The central benchmark problem: steady advection-diffusion
    /// `u' = epsilon u''` with `u(0) = 0`, `u(1) = 1`.
    pub fn ade(epsilon: f64, collocation: Collocation) -> Self {
        Self {
            coeffs: (0.0, 1.0, -epsilon),
            rhs: 0.0,
            boundary_conditions: vec![(0.0, 0.0), (1.0, 1.0)],
            collocation,
        }
    }

    /// Order of the highest non-zero derivative coefficient.
    pub fn order(&self) -> usize {
        let (a0, a1, a2) = self.coeffs;
        if a2 != 0.0 {
            2
        } else if a1 != 0.0 {
            1
        } else {
            debug_assert!(a0 != 0.0);
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a0, a1, a2) = self.coeffs;
        if ![a0, a1, a2].iter().all(|c| c.is_finite()) || !self.rhs.is_finite() {
            return Err(Error::InvalidProblem(
                "coefficients and rhs must be finite".into(),
            ));
        }
        if a0 == 0.0 && a1 == 0.0 && a2 == 0.0 {
            return Err(Error::InvalidProblem(
                "at least one coefficient must be non-zero".into(),
            ));
        }
        if self.boundary_conditions.len() != self.order() {
            return Err(Error::InvalidProblem(format!(
                "order-{} operator needs {} boundary conditions, got {}",
                self.order(),
                self.order(),
                self.boundary_conditions.len()
            )));
        }
        for &(x, v) in &self.boundary_conditions {
            if !(0.0..=1.0).contains(&x) || !v.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "boundary condition at x = {x} with value {v} is outside the domain or non-finite"
                )));
            }
        }
        if self.collocation.count() == 0 {
            return Err(Error::InvalidProblem(
                "need at least one collocation point".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Residual,
    Boundary,
    Data,
}

/// The assembled `H beta = T` system with per-row provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub h: Matrix,
    pub t: Vec<f64>,
    pub row_kinds: Vec<RowKind>,
    pub row_weights: Vec<f64>,
}

/// One residual row per collocation point (`a0 phi + a1 phi' + a2 phi''`,
/// target rhs), then one boundary row per condition (`phi(x_bc)`, target
/// value), in declaration order.
pub fn assemble_ode(basis: &EncodedBasis, problem: &OdeProblem) -> Result<LinearSystem> {
    problem.validate()?;
    let (a0, a1, a2) = problem.coeffs;
    let points = problem.collocation.points();
    let nodes = basis.nodes();
    let rows = points.len() + problem.boundary_conditions.len();

    let mut data = Vec::with_capacity(rows * nodes);
    let mut t = Vec::with_capacity(rows);
    let mut row_kinds = Vec::with_capacity(rows);
    for &x in &points {
        let row = basis.basis_row(x);
        for i in 0..nodes {
            data.push(a0 * row.phi[i] + a1 * row.dphi[i] + a2 * row.d2phi[i]);
        }
        t.push(problem.rhs);
        row_kinds.push(RowKind::Residual);
    }
    for &(x, value) in &problem.boundary_conditions {
        data.extend_from_slice(&basis.basis_row(x).phi);
        t.push(value);
        row_kinds.push(RowKind::Boundary);
    }

    Ok(LinearSystem {
        h: Matrix::from_vec(rows, nodes, data)?,
        t,
        row_weights: vec![1.0; rows],
        row_kinds,
    })
}

/// Plain data-fitting rows: `phi(x_i)` against target `y_i`.
pub fn assemble_fit(basis: &EncodedBasis, xs: &[f64], ys: &[f64]) -> Result<LinearSystem> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sample locations against {} targets",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::InvalidProblem("need at least one sample".into()));
    }
    if let Some(x) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidProblem(format!(
            "sample location {x} is outside [0, 1]; normalize inputs first"
        )));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidProblem("targets must be finite".into()));
    }

    let nodes = basis.nodes();
    let mut data = Vec::with_capacity(xs.len() * nodes);
    for &x in xs {
        data.extend_from_slice(&basis.basis_row(x).phi);
    }
    Ok(LinearSystem {
        h: Matrix::from_vec(xs.len(), nodes, data)?,
        t: ys.to_vec(),
        row_kinds: vec![RowKind::Data; xs.len()],
        row_weights: vec![1.0; xs.len()],
    })
}

/// Scales residual and boundary rows (H and T alike) by their kind's weight.
/// Data rows are untouched; their weight stays as assembled.
pub fn apply_row_weights(
    sys: &LinearSystem,
    residual_w: f64,
    boundary_w: f64,
) -> Result<LinearSystem> {
    if residual_w <= 0.0 || residual_w.is_nan() || boundary_w <= 0.0 || boundary_w.is_nan() {
        return Err(Error::InvalidProblem(format!(
            "row weights must be positive, got residual {residual_w}, boundary {boundary_w}"
        )));
    }
    let cols = sys.h.cols();
    let mut data = Vec::with_capacity(sys.h.rows() * cols);
    let mut t = Vec::with_capacity(sys.t.len());
    let mut row_weights = Vec::with_capacity(sys.row_weights.len());
    for (i, &kind) in sys.row_kinds.iter().enumerate() {
        let w = match kind {
            RowKind::Residual => residual_w,
            RowKind::Boundary => boundary_w,
            RowKind::Data => 1.0,
        };
        data.extend(sys.h.row(i).iter().map(|v| v * w));
        t.push(sys.t[i] * w);
        row_weights.push(sys.row_weights[i] * w);
    }
    Ok(LinearSystem {
        h: Matrix::from_vec(sys.h.rows(), cols, data)?,
        t,
        row_kinds: sys.row_kinds.clone(),
        row_weights,
    })
}
