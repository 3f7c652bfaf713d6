//! Linear observation model `y = D H W x`: warp, blur, decimate.
//!
//! Every stage is written as a gather (`forward`) and the matching scatter
//! (`adjoint`) over the same index/weight pairs, so the adjoint is exact up
//! to floating-point summation order, border handling included.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::RealPlane;

/// Normalized, non-negative blur kernel; the anchor is `(rows / 2, cols / 2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PsfRepr", into = "PsfRepr")]
pub struct Psf {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PsfRepr {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl TryFrom<PsfRepr> for Psf {
    type Error = Error;

    fn try_from(r: PsfRepr) -> Result<Self> {
        Psf::new(r.rows, r.cols, r.weights)
    }
}

impl From<Psf> for PsfRepr {
    fn from(p: Psf) -> Self {
        PsfRepr {
            rows: p.rows,
            cols: p.cols,
            weights: p.weights,
        }
    }
}

impl Psf {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || weights.len() != rows * cols {
            return Err(Error::config(format!(
                "psf of {} weights does not match {rows}x{cols}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::config("psf weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("psf weights sum to {sum}, not 1")));
        }
        Ok(Psf {
            rows,
            cols,
            weights,
        })
    }

    pub fn identity() -> Self {
        Psf {
            rows: 1,
            cols: 1,
            weights: vec![1.0],
        }
    }

    pub fn box_filter(size: usize) -> Self {
        let n = size * size;
        Psf {
            rows: size,
            cols: size,
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Separable `[1 2 1] / 4` kernel.
    pub fn binomial3() -> Self {
        let k = [1.0, 2.0, 1.0];
        Psf {
            rows: 3,
            cols: 3,
            weights: (0..9).map(|i| k[i / 3] * k[i % 3] / 16.0).collect(),
        }
    }

    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if size.is_multiple_of(2) || sigma <= 0.0 {
            return Err(Error::config("gaussian psf needs odd size and positive sigma"));
        }
        let c = (size / 2) as f64;
        let mut w: Vec<f64> = (0..size * size)
            .map(|i| {
                let (dy, dx) = ((i / size) as f64 - c, (i % size) as f64 - c);
                (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        Psf::new(size, size, w)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    pub fn is_identity(&self) -> bool {
        self.weights.len() == 1
    }
}

/// Parallax displacement in high-resolution pixels: observation pixel
/// `(i, j)` sees scene point `(i + dy, j + dx)` before blurring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub dx: f64,
    pub dy: f64,
}

impl Shift {
    pub fn new(dx: f64, dy: f64) -> Self {
        Shift { dx, dy }
    }

    pub fn is_integral(&self) -> bool {
        self.dx.fract() == 0.0 && self.dy.fract() == 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationOp {
    pub gamma: usize,
    pub psf: Psf,
    pub shift: Shift,
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

// Bilinear taps for one coordinate with replicated borders.
#[inline]
fn taps(pos: f64, len: usize) -> [(usize, f64); 2] {
    let base = pos.floor();
    let frac = pos - base;
    let i = base as isize;
    [(clamp_index(i, len), 1.0 - frac), (clamp_index(i + 1, len), frac)]
}

impl ObservationOp {
    pub fn new(gamma: usize, psf: Psf, shift: Shift) -> Result<Self> {
        if gamma == 0 {
            return Err(Error::config("decimation factor must be at least 1"));
        }
        if !shift.dx.is_finite() || !shift.dy.is_finite() {
            return Err(Error::config("shift must be finite"));
        }
        Ok(ObservationOp { gamma, psf, shift })
    }

    pub fn identity() -> Self {
        ObservationOp {
            gamma: 1,
            psf: Psf::identity(),
            shift: Shift::default(),
        }
    }

    /// Low-resolution size produced from a `width x height` scene.
    pub fn output_dims(&self, width: usize, height: usize) -> Result<(usize, usize)> {
        if width == 0 || height == 0 {
            return Err(Error::dim("empty image"));
        }
        if !width.is_multiple_of(self.gamma) || !height.is_multiple_of(self.gamma) {
            return Err(Error::dim(format!(
                "decimation factor {} does not divide {width}x{height}",
                self.gamma
            )));
        }
        if self.psf.rows > height || self.psf.cols > width {
            return Err(Error::config(format!(
                "{}x{} kernel is larger than the {width}x{height} image",
                self.psf.rows, self.psf.cols
            )));
        }
        Ok((width / self.gamma, height / self.gamma))
    }

    fn warp(&self, x: &RealPlane) -> RealPlane {
        let (w, h) = (x.width(), x.height());
        if self.shift == Shift::default() {
            return x.clone();
        }
        RealPlane::from_fn(w, h, |i, j| {
            let mut acc = 0.0;
            for (r, wy) in taps(i as f64 + self.shift.dy, h) {
                for (c, wx) in taps(j as f64 + self.shift.dx, w) {
                    acc += wy * wx * x.get(r, c);
                }
            }
            acc
        })
    }

    fn warp_adjoint(&self, z: &RealPlane) -> RealPlane {
        let (w, h) = (z.width(), z.height());
        if self.shift == Shift::default() {
            return z.clone();
        }
        let mut out = RealPlane::zeros(w, h);
        for i in 0..h {
            for j in 0..w {
                let v = z.get(i, j);
                for (r, wy) in taps(i as f64 + self.shift.dy, h) {
                    for (c, wx) in taps(j as f64 + self.shift.dx, w) {
                        out.add_at(r, c, wy * wx * v);
                    }
                }
            }
        }
        out
    }

    #[inline]
    fn blur_source(&self, i: usize, j: usize, u: usize, v: usize, w: usize, h: usize) -> (usize, usize) {
        let cy = (self.psf.rows / 2) as isize;
        let cx = (self.psf.cols / 2) as isize;
        (
            clamp_index(i as isize + cy - u as isize, h),
            clamp_index(j as isize + cx - v as isize, w),
        )
    }

    fn blur(&self, x: &RealPlane) -> RealPlane {
        if self.psf.is_identity() {
            return x.clone();
        }
        let (w, h) = (x.width(), x.height());
        RealPlane::from_fn(w, h, |i, j| {
            let mut acc = 0.0;
            for u in 0..self.psf.rows {
                for v in 0..self.psf.cols {
                    let (r, c) = self.blur_source(i, j, u, v, w, h);
                    acc += self.psf.weight(u, v) * x.get(r, c);
                }
            }
            acc
        })
    }

    fn blur_adjoint(&self, z: &RealPlane) -> RealPlane {
        if self.psf.is_identity() {
            return z.clone();
        }
        let (w, h) = (z.width(), z.height());
        let mut out = RealPlane::zeros(w, h);
        for i in 0..h {
            for j in 0..w {
                let val = z.get(i, j);
                for u in 0..self.psf.rows {
                    for v in 0..self.psf.cols {
                        let (r, c) = self.blur_source(i, j, u, v, w, h);
                        out.add_at(r, c, self.psf.weight(u, v) * val);
                    }
                }
            }
        }
        out
    }

    /// `D H W x` on a real-valued scene.
    pub fn forward(&self, x: &RealPlane) -> Result<RealPlane> {
        let (ow, oh) = self.output_dims(x.width(), x.height())?;
        let blurred = self.blur(&self.warp(x));
        let g = self.gamma;
        Ok(RealPlane::from_fn(ow, oh, |i, j| blurred.get(g * i, g * j)))
    }

    /// `W^T H^T D^T r`; `width x height` is the scene size.
    pub fn adjoint(&self, r: &RealPlane, width: usize, height: usize) -> Result<RealPlane> {
        let (ow, oh) = self.output_dims(width, height)?;
        if r.width() != ow || r.height() != oh {
            return Err(Error::dim(format!(
                "residual is {}x{}, expected {ow}x{oh}",
                r.width(),
                r.height()
            )));
        }
        let g = self.gamma;
        let mut up = RealPlane::zeros(width, height);
        for i in 0..oh {
            for j in 0..ow {
                up.set(g * i, g * j, r.get(i, j));
            }
        }
        Ok(self.warp_adjoint(&self.blur_adjoint(&up)))
    }
}
