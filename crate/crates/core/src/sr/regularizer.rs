//! High-pass priors `Γ(x) = ‖Υx‖₁` and their subgradients `Υᵀ sign(Υx)`.

use crate::plane::RealPlane;

use super::sign;

pub trait Regularizer: Send + Sync {
    fn name(&self) -> &'static str;

    /// Stacked high-pass responses `Υx`.
    fn apply(&self, x: &RealPlane) -> Vec<f64>;

    /// `Υᵀ r` for a response vector shaped like the output of [`apply`].
    ///
    /// [`apply`]: Regularizer::apply
    fn apply_transpose(&self, r: &[f64], width: usize, height: usize) -> RealPlane;

    fn cost(&self, x: &RealPlane) -> f64 {
        self.apply(x).iter().map(|v| v.abs()).sum()
    }

    fn gradient(&self, x: &RealPlane) -> RealPlane {
        let s: Vec<f64> = self.apply(x).into_iter().map(sign).collect();
        self.apply_transpose(&s, x.width(), x.height())
    }
}

#[inline]
fn clamped(i: usize, d: isize, len: usize) -> usize {
    (i as isize + d).clamp(0, len as isize - 1) as usize
}

/// Four-neighbour Laplacian with replicated borders.
#[derive(Clone, Copy, Debug, Default)]
pub struct LaplacianL1;

const NEIGHBOURS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

impl Regularizer for LaplacianL1 {
    fn name(&self) -> &'static str {
        "laplacian_l1"
    }

    fn apply(&self, x: &RealPlane) -> Vec<f64> {
        let (w, h) = (x.width(), x.height());
        let mut out = Vec::with_capacity(w * h);
        for i in 0..h {
            for j in 0..w {
                let centre = x.get(i, j);
                out.push(
                    NEIGHBOURS
                        .iter()
                        .map(|&(di, dj)| x.get(clamped(i, di, h), clamped(j, dj, w)) - centre)
                        .sum(),
                );
            }
        }
        out
    }

    fn apply_transpose(&self, r: &[f64], width: usize, height: usize) -> RealPlane {
        let mut out = RealPlane::zeros(width, height);
        for i in 0..height {
            for j in 0..width {
                let v = r[i * width + j];
                if v == 0.0 {
                    continue;
                }
                for &(di, dj) in &NEIGHBOURS {
                    out.add_at(clamped(i, di, height), clamped(j, dj, width), v);
                    out.add_at(i, j, -v);
                }
            }
        }
        out
    }
}

/// Bilateral total variation: weighted differences against shifted copies
/// over a half window, weight `decay^(|l| + |m|)`.
#[derive(Clone, Debug)]
pub struct BilateralTv {
    shifts: Vec<(isize, isize, f64)>,
}

impl BilateralTv {
    pub fn new(window: usize, decay: f64) -> Self {
        let p = window as isize;
        let mut shifts = Vec::new();
        for m in 0..=p {
            for l in -p..=p {
                // each unordered pair of pixels counted once
                if m > 0 || l > 0 {
                    shifts.push((m, l, decay.powi((l.abs() + m) as i32)));
                }
            }
        }
        BilateralTv { shifts }
    }
}

impl Default for BilateralTv {
    fn default() -> Self {
        BilateralTv::new(1, 0.7)
    }
}

impl Regularizer for BilateralTv {
    fn name(&self) -> &'static str {
        "bilateral_tv"
    }

    fn apply(&self, x: &RealPlane) -> Vec<f64> {
        let (w, h) = (x.width(), x.height());
        let mut out = Vec::with_capacity(self.shifts.len() * w * h);
        for &(di, dj, weight) in &self.shifts {
            for i in 0..h {
                for j in 0..w {
                    out.push(weight * (x.get(i, j) - x.get(clamped(i, di, h), clamped(j, dj, w))));
                }
            }
        }
        out
    }

    fn apply_transpose(&self, r: &[f64], width: usize, height: usize) -> RealPlane {
        let mut out = RealPlane::zeros(width, height);
        for (block, &(di, dj, weight)) in self.shifts.iter().enumerate() {
            let base = block * width * height;
            for i in 0..height {
                for j in 0..width {
                    let v = weight * r[base + i * width + j];
                    out.add_at(i, j, v);
                    out.add_at(clamped(i, di, height), clamped(j, dj, width), -v);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_zero_gradient() {
        let x = RealPlane::filled(6, 5, 42.0);
        assert!(LaplacianL1.gradient(&x).as_slice().iter().all(|&v| v == 0.0));
        assert!(BilateralTv::default().gradient(&x).as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(LaplacianL1.cost(&x), 0.0);
    }

    #[test]
    fn bright_pixel_laplacian_fixture() {
        let mut x = RealPlane::zeros(5, 5);
        x.set(2, 2, 1.0);
        let resp = LaplacianL1.apply(&x);
        assert_eq!(resp[12], -4.0);
        for idx in [7, 11, 13, 17] {
            assert_eq!(resp[idx], 1.0);
        }
        #[rustfmt::skip]
        let expected = [
            0.0, 0.0,  1.0, 0.0, 0.0,
            0.0, 2.0, -5.0, 2.0, 0.0,
            1.0, -5.0, 8.0, -5.0, 1.0,
            0.0, 2.0, -5.0, 2.0, 0.0,
            0.0, 0.0,  1.0, 0.0, 0.0,
        ];
        assert_eq!(LaplacianL1.gradient(&x).as_slice(), &expected);
    }

    #[test]
    fn bilateral_window_shape() {
        let tv = BilateralTv::new(1, 0.7);
        assert_eq!(tv.shifts.len(), 4);
        let total: f64 = tv.shifts.iter().map(|s| s.2).sum();
        assert!((total - (0.7 + 0.7 + 0.49 + 0.49)).abs() < 1e-12);
    }

    fn check_transpose(reg: &dyn Regularizer) {
        let (w, h) = (7, 6);
        let x = RealPlane::from_fn(w, h, |i, j| ((i * 5 + j * 3) % 7) as f64 - 2.5);
        let resp = reg.apply(&x);
        let r: Vec<f64> = (0..resp.len()).map(|k| ((k * 11) % 5) as f64 - 2.0).collect();
        let lhs: f64 = resp.iter().zip(&r).map(|(a, b)| a * b).sum();
        let rhs = x.dot(&reg.apply_transpose(&r, w, h));
        assert!((lhs - rhs).abs() < 1e-9, "{} {lhs} {rhs}", reg.name());
    }

    #[test]
    fn transposes_are_exact() {
        check_transpose(&LaplacianL1);
        check_transpose(&BilateralTv::default());
        check_transpose(&BilateralTv::new(2, 0.5));
    }
}
