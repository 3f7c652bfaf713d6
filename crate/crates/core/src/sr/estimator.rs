//! Fusion of per-observation back-projected residual signs into one data term.

use crate::plane::RealPlane;

pub trait DataEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Combine the terms `adjoint_k(sign(forward_k(x) - y_k))`, all sized like `x`.
    fn combine(&self, terms: &[RealPlane]) -> RealPlane;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SignSum;

impl DataEstimator for SignSum {
    fn name(&self) -> &'static str {
        "sign_sum"
    }

    fn combine(&self, terms: &[RealPlane]) -> RealPlane {
        let mut out = RealPlane::zeros(terms[0].width(), terms[0].height());
        for t in terms {
            out.axpy(1.0, t);
        }
        out
    }
}

/// `n` times the pixel-wise lower median over the `n` terms.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScaledMedian;

impl DataEstimator for ScaledMedian {
    fn name(&self) -> &'static str {
        "scaled_median"
    }

    fn combine(&self, terms: &[RealPlane]) -> RealPlane {
        let n = terms.len();
        let (w, h) = (terms[0].width(), terms[0].height());
        let mut buf = vec![0.0; n];
        let mut out = RealPlane::zeros(w, h);
        for (p, slot) in out.as_mut_slice().iter_mut().enumerate() {
            for (b, t) in buf.iter_mut().zip(terms) {
                *b = t.as_slice()[p];
            }
            let (_, median, _) = buf.select_nth_unstable_by((n - 1) / 2, f64::total_cmp);
            *slot = n as f64 * *median;
        }
        out
    }
}
