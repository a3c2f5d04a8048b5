//! Finite families of real functions on the line, evaluable in bulk.

use crate::interval::Interval;
use nalgebra::DMatrix;
use std::fmt::Debug;
use std::sync::Arc;

/// A finite family of real functions `b_0, .., b_{len-1}`.
pub trait FunctionBasis: Send + Sync + Debug {
    fn len(&self) -> usize;

    /// Writes `b_k(x)` into `out[k]`.
    fn eval_into(&self, x: f64, out: &mut [f64]);

    /// Outside this interval every function is below `1e-17` in absolute value.
    fn support(&self) -> Interval;

    /// A panel width that resolves the oscillation of every function with a
    /// 16-point Gauss–Legendre panel.
    fn panel_width(&self) -> f64;

    fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// `len x nodes.len()` matrix with column `j` holding the family at `nodes[j]`.
    fn eval_matrix(&self, nodes: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.len(), nodes.len());
        let mut buf = vec![0.0; self.len()];
        for (j, &x) in nodes.iter().enumerate() {
            self.eval_into(x, &mut buf);
            m.column_mut(j).copy_from_slice(&buf);
        }
        m
    }
}

/// Basis given by a vector-valued closure; mostly for tests and custom subspaces.
pub struct ClosureBasis {
    len: usize,
    support: Interval,
    panel_width: f64,
    f: Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>,
}

impl ClosureBasis {
    pub fn new(
        len: usize,
        support: Interval,
        panel_width: f64,
        f: impl Fn(f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { len, support, panel_width, f: Arc::new(f) }
    }
}

impl Debug for ClosureBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosureBasis")
            .field("len", &self.len)
            .field("support", &self.support)
            .finish()
    }
}

impl FunctionBasis for ClosureBasis {
    fn len(&self) -> usize {
        self.len
    }

    fn eval_into(&self, x: f64, out: &mut [f64]) {
        if self.support.contains(x) {
            (self.f)(x, out)
        } else {
            out.iter_mut().for_each(|v| *v = 0.0)
        }
    }

    fn support(&self) -> Interval {
        self.support
    }

    fn panel_width(&self) -> f64 {
        self.panel_width
    }
}
