use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::kernels::KernelFunction;
use crate::linalg::{sym_eigenvalues, singular_values};
use crate::quadrature::QuadratureGrid;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Eigenvalues below this are treated as numerically zero.
pub const EIGEN_DROP_TOL: f64 = 1e-12;
/// Eigenvalues of a projection restriction outside `[-tol, 1 + tol]` signal a failed discretization.
pub const EIGEN_FAIL_TOL: f64 = 1e-6;

/// Nyström matrix `A_ij = sqrt(w_i) K(x_i, y_j) sqrt(v_j)` of `1_R K 1_C`.
///
/// For square operators the row and column grids coincide and `A` is symmetric,
/// so its eigenvalues approximate those of the integral operator.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    interval: Interval,
    rows: QuadratureGrid,
    cols: Option<QuadratureGrid>,
    matrix: DMatrix<f64>,
}

fn sqrt_weights(g: &QuadratureGrid) -> Vec<f64> {
    g.weights.iter().map(|w| w.sqrt()).collect()
}

impl DiscretizedOperator {
    /// Wraps an already symmetrized matrix on `grid` (e.g. a composed operator).
    pub fn from_matrix(interval: Interval, grid: QuadratureGrid, matrix: DMatrix<f64>) -> Self {
        assert_eq!(grid.len(), matrix.nrows());
        assert_eq!(grid.len(), matrix.ncols());
        Self { interval, rows: grid, cols: None, matrix }
    }

    pub fn zero(interval: Interval, grid: QuadratureGrid) -> Self {
        let m = grid.len();
        Self::from_matrix(interval, grid, DMatrix::zeros(m, m))
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rows.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rows.weights
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.rows
    }

    pub fn col_grid(&self) -> &QuadratureGrid {
        self.cols.as_ref().unwrap_or(&self.rows)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn is_square(&self) -> bool {
        self.cols.is_none()
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Composition `self * other`; the column grid of `self` must be the row grid of `other`.
    pub fn compose(&self, other: &DiscretizedOperator) -> Result<DiscretizedOperator> {
        if self.col_grid().nodes != other.rows.nodes {
            return Err(Error::InvalidArgument("composition needs matching grids".into()));
        }
        let matrix = &self.matrix * &other.matrix;
        let square = self.rows.nodes == other.col_grid().nodes;
        Ok(Self {
            interval: self.interval,
            rows: self.rows.clone(),
            cols: (!square).then(|| other.col_grid().clone()),
            matrix,
        })
    }

    /// Writes the operator as CSV: header `x,w,a_0,..,a_{m-1}` then one row per node
    /// holding the node, its weight and the matrix row. Rectangular operators list
    /// the column grid in two leading comment lines `# col_x,...` and `# col_w,...`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        if let Some(c) = &self.cols {
            let xs: Vec<String> = c.nodes.iter().map(|v| format!("{v:e}")).collect();
            let ws: Vec<String> = c.weights.iter().map(|v| format!("{v:e}")).collect();
            writeln!(f, "# col_x,{}", xs.join(","))?;
            writeln!(f, "# col_w,{}", ws.join(","))?;
        }
        let cols: Vec<String> = (0..self.matrix.ncols()).map(|j| format!("a_{j}")).collect();
        writeln!(f, "x,w,{}", cols.join(","))?;
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> = self.matrix.row(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(f, "{:e},{:e},{}", self.rows.nodes[i], self.rows.weights[i], row.join(","))?;
        }
        Ok(())
    }
}

fn check_interval(interval: Interval) -> Result<()> {
    if !interval.is_compact() || !(interval.lo < interval.hi) {
        return Err(Error::InvalidArgument(format!(
            "interval [{}, {}] must be compact and non-empty",
            interval.lo, interval.hi
        )));
    }
    Ok(())
}

/// Gauss–Legendre Nyström discretization of `1_I K 1_I` with `order` nodes.
pub fn discretize(kernel: &KernelFunction, interval: Interval, order: usize) -> Result<DiscretizedOperator> {
    check_interval(interval)?;
    if order < 2 {
        return Err(Error::InvalidArgument("discretization order must be >= 2".into()));
    }
    let grid = QuadratureGrid::gauss_legendre(interval.lo, interval.hi, order)?;
    discretize_on(kernel, interval, grid)
}

/// Discretization on a caller-supplied grid (e.g. composite panels).
pub fn discretize_on(
    kernel: &KernelFunction,
    interval: Interval,
    grid: QuadratureGrid,
) -> Result<DiscretizedOperator> {
    let sw = sqrt_weights(&grid);
    let mut m = kernel.matrix(&grid.nodes, &grid.nodes);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= sw[i] * sw[j];
        }
    }
    Ok(DiscretizedOperator { interval, rows: grid, cols: None, matrix: m })
}

/// Rectangular discretization of `1_R K 1_C` on separate row and column grids.
pub fn discretize_between(
    kernel: &KernelFunction,
    rows: QuadratureGrid,
    cols: QuadratureGrid,
) -> DiscretizedOperator {
    let sr = sqrt_weights(&rows);
    let sc = sqrt_weights(&cols);
    let mut m = kernel.matrix(&rows.nodes, &cols.nodes);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= sr[i] * sc[j];
        }
    }
    let interval = Interval::new(
        rows.nodes.first().copied().unwrap_or(0.0),
        rows.nodes.last().copied().unwrap_or(0.0),
    );
    DiscretizedOperator { interval, rows, cols: Some(cols), matrix: m }
}

/// `det(1 - A)` through an LU factorization.
pub fn fredholm_det(op: &DiscretizedOperator) -> f64 {
    assert!(op.is_square(), "Fredholm determinant needs a square operator");
    let m = op.matrix.nrows();
    if m == 0 {
        return 1.0;
    }
    (DMatrix::identity(m, m) - &op.matrix).determinant()
}

/// Fredholm determinant with order doubling from `start_order` until two
/// successive values agree within `tol`. Returns `(det, order used)`.
pub fn fredholm_det_adaptive(
    kernel: &KernelFunction,
    interval: Interval,
    start_order: usize,
    tol: f64,
) -> Result<(f64, usize)> {
    if interval.length() == 0.0 {
        return Ok((1.0, 0));
    }
    let mut order = start_order.max(2);
    let mut prev = fredholm_det(&discretize(kernel, interval, order)?);
    for _ in 0..8 {
        let next_order = 2 * order;
        let next = fredholm_det(&discretize(kernel, interval, next_order)?);
        if (next - prev).abs() <= tol {
            return Ok((next, next_order));
        }
        prev = next;
        order = next_order;
    }
    Err(Error::Quadrature(format!(
        "Fredholm determinant on [{}, {}] did not settle to {tol:e} by order {order}",
        interval.lo, interval.hi
    )))
}

/// Spectrum of a discretized projection restriction, clamped to `[0, 1]`, with
/// numerically-zero eigenvalues dropped; sorted in decreasing order.
pub fn operator_spectrum(op: &DiscretizedOperator) -> Result<Vec<f64>> {
    assert!(op.is_square(), "spectrum needs a square operator");
    let ev = sym_eigenvalues(&op.matrix);
    if let Some(&bad) = ev.iter().find(|&&l| l < -EIGEN_FAIL_TOL || l > 1.0 + EIGEN_FAIL_TOL) {
        return Err(Error::Discretization { value: bad, tol: EIGEN_FAIL_TOL });
    }
    let mut out: Vec<f64> = ev.into_iter().map(|l| l.clamp(0.0, 1.0)).filter(|&l| l >= EIGEN_DROP_TOL).collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(out)
}

/// Operator, Hilbert–Schmidt and nuclear norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub op_norm: f64,
    pub hs_norm: f64,
    pub nuclear_norm: f64,
}

pub fn schatten_norms(m: &DMatrix<f64>) -> NormReport {
    let sv = singular_values(m);
    NormReport {
        op_norm: sv.first().copied().unwrap_or(0.0),
        hs_norm: sv.iter().map(|s| s * s).sum::<f64>().sqrt(),
        nuclear_norm: sv.iter().sum(),
    }
}

pub fn norms(op: &DiscretizedOperator) -> NormReport {
    schatten_norms(&op.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::HermiteBasis;
    use crate::basis::FunctionBasis;
    use std::sync::Arc;

    #[test]
    fn zero_kernel_gives_zero_matrix() {
        let k = KernelFunction::custom(|_, _| 0.0, Some(0), true);
        let op = discretize(&k, Interval::new(0.0, 1.0), 10).unwrap();
        assert_eq!(op.matrix().amax(), 0.0);
        assert_eq!(fredholm_det(&op), 1.0);
        assert!(operator_spectrum(&op).unwrap().is_empty());
        let n = norms(&op);
        assert_eq!((n.op_norm, n.hs_norm, n.nuclear_norm), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        let k = KernelFunction::sine();
        assert!(discretize(&k, Interval::new(1.0, 1.0), 10).is_err());
        assert!(discretize(&k, Interval::new(1.0, 0.0), 10).is_err());
        assert!(discretize(&k, Interval::new(0.0, f64::INFINITY), 10).is_err());
        assert!(discretize(&k, Interval::new(0.0, 1.0), 1).is_err());
    }

    #[test]
    fn sine_kernel_order_doubling_and_trace() {
        let k = KernelFunction::sine();
        let i = Interval::new(0.0, 1.0);
        let d1 = fredholm_det(&discretize(&k, i, 20).unwrap());
        let d2 = fredholm_det(&discretize(&k, i, 40).unwrap());
        assert!((d1 - d2).abs() < 1e-10);
        for s in [0.3, 1.0, 2.5] {
            let op = discretize(&k, Interval::new(0.0, s), 30).unwrap();
            assert!((op.trace() - s).abs() < 1e-10);
        }
        let spec = operator_spectrum(&discretize(&k, i, 30).unwrap()).unwrap();
        assert!((spec.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rank_one_projection_inside_interval() {
        // phi(x) = sqrt(2) sin(pi x) on [0, 1], unit norm and supported there
        let k = KernelFunction::custom(
            |x, y| {
                let f = |t: f64| if (0.0..=1.0).contains(&t) { 2f64.sqrt() * (std::f64::consts::PI * t).sin() } else { 0.0 };
                f(x) * f(y)
            },
            Some(1),
            true,
        );
        let op = discretize(&k, Interval::new(0.0, 1.0), 30).unwrap();
        assert!(fredholm_det(&op).abs() < 1e-12);
        let n = norms(&op);
        assert!((n.op_norm - 1.0).abs() < 1e-12);
        assert!((n.hs_norm - 1.0).abs() < 1e-12);
        assert!((n.nuclear_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gue_kernel_full_capture() {
        let k = KernelFunction::gue(10).unwrap();
        let op = discretize(&k, Interval::new(-20.0, 20.0), 200).unwrap();
        let spec = operator_spectrum(&op).unwrap();
        assert_eq!(spec.iter().filter(|&&l| l > 1e-6).count(), 10);
        for l in &spec[..10] {
            assert!((l - 1.0).abs() < 1e-6);
        }
        assert!((op.trace() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn det_equals_eigen_product() {
        let k = KernelFunction::rescaled(60, 0.4).unwrap();
        let op = discretize(&k, Interval::new(-0.5, 1.2), 40).unwrap();
        let d = fredholm_det(&op);
        let prod: f64 = operator_spectrum(&op).unwrap().iter().map(|l| 1.0 - l).product();
        assert!((d - prod).abs() < 1e-10);
        // symmetric and spectrum inside [-1e-8, 1 + 1e-8] before clamping
        let m = op.matrix();
        assert_eq!((m - m.transpose()).amax(), 0.0);
        let ev = sym_eigenvalues(m);
        assert!(ev.iter().all(|&l| l > -1e-8 && l < 1.0 + 1e-8));
    }

    #[test]
    fn non_projection_flagged() {
        let k = KernelFunction::custom(|_, _| 3.0, Some(1), false);
        let op = discretize(&k, Interval::new(0.0, 1.0), 8).unwrap();
        assert!(matches!(operator_spectrum(&op), Err(Error::Discretization { .. })));
    }

    #[test]
    fn restricted_sine_hs_converges_in_truncation() {
        // || 1_J P ||_HS^2 = int_J int_R K^2 = |J| for a projection
        let k = KernelFunction::sine();
        let rows = QuadratureGrid::gauss_legendre(0.0, 1.0, 24).unwrap();
        let mut prev_err = f64::INFINITY;
        for l in [20.0, 40.0, 80.0] {
            let cols = QuadratureGrid::composite(-l, l, 1.0, 16, &[0.0, 1.0]).unwrap();
            let op = discretize_between(&k, rows.clone(), cols);
            let hs2 = norms(&op).hs_norm.powi(2);
            let err = (hs2 - 1.0).abs();
            assert!(err < prev_err);
            assert!(err < 2.0 / (std::f64::consts::PI.powi(2) * l));
            prev_err = err;
        }
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let b = Arc::new(HermiteBasis::new(3)) as Arc<dyn FunctionBasis>;
        let k = KernelFunction::from_basis(b, true);
        let op = discretize(&k, Interval::new(-1.0, 1.0), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("op.csv");
        op.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("x,w,a_0"));
        assert_eq!(lines[1].split(',').count(), 7);
    }
}
