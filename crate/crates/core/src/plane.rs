//! Raster containers shared by every stage of the pipeline.
//!
//! All rasters are stored row-major: pixel `(row, col)` lives at
//! `row * width + col`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-bit single-channel raster.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayPlane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for GrayPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayPlane({}x{})", self.width, self.height)
    }
}

impl GrayPlane {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayPlane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dim(format!(
                "{} bytes cannot fill a {width}x{height} plane",
                data.len()
            )));
        }
        Ok(GrayPlane {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        GrayPlane {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    pub fn same_dims(&self, other: &GrayPlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn to_real(&self) -> RealPlane {
        RealPlane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

/// Real-valued raster used inside the degradation operators and the solver.
#[derive(Clone, PartialEq)]
pub struct RealPlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl fmt::Debug for RealPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealPlane({}x{})", self.width, self.height)
    }
}

impl RealPlane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        RealPlane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dim(format!(
                "{} samples cannot fill a {width}x{height} plane",
                data.len()
            )));
        }
        Ok(RealPlane {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        RealPlane {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    #[inline]
    pub fn add_at(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] += value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_dims(&self, other: &RealPlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn dot(&self, other: &RealPlane) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += scale * other`
    pub fn axpy(&mut self, scale: f64, other: &RealPlane) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealPlane {
        RealPlane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Round to nearest and clamp into `[0, 255]`.
    pub fn quantize(&self) -> GrayPlane {
        GrayPlane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| quantize_sample(v)).collect(),
        }
    }
}

#[inline]
pub(crate) fn quantize_sample(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "R")]
    Red,
    #[serde(rename = "G")]
    Green,
    #[serde(rename = "B")]
    Blue,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Red, Channel::Green, Channel::Blue];

    pub fn index(self) -> usize {
        match self {
            Channel::Red => 0,
            Channel::Green => 1,
            Channel::Blue => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Channel::Red => 'R',
            Channel::Green => 'G',
            Channel::Blue => 'B',
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" => Ok(Channel::Red),
            "G" | "g" => Ok(Channel::Green),
            "B" | "b" => Ok(Channel::Blue),
            other => Err(Error::parse(format!("unknown channel `{other}`"))),
        }
    }
}

/// Three 8-bit planes of identical size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorImage {
    planes: [GrayPlane; 3],
}

impl ColorImage {
    pub fn from_planes(red: GrayPlane, green: GrayPlane, blue: GrayPlane) -> Result<Self> {
        if !red.same_dims(&green) || !red.same_dims(&blue) {
            return Err(Error::dim("color planes differ in size"));
        }
        Ok(ColorImage {
            planes: [red, green, blue],
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Self {
        let mut planes = [
            GrayPlane::new(width, height),
            GrayPlane::new(width, height),
            GrayPlane::new(width, height),
        ];
        for row in 0..height {
            for col in 0..width {
                let px = f(row, col);
                for (plane, v) in planes.iter_mut().zip(px) {
                    plane.set(row, col, v);
                }
            }
        }
        ColorImage { planes }
    }

    pub fn solid(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn plane(&self, channel: Channel) -> &GrayPlane {
        &self.planes[channel.index()]
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        [
            self.planes[0].get(row, col),
            self.planes[1].get(row, col),
            self.planes[2].get(row, col),
        ]
    }

    /// Interleaved RGB bytes, row-major.
    pub fn to_interleaved(&self) -> Vec<u8> {
        let n = self.width() * self.height();
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            for plane in &self.planes {
                out.push(plane.as_bytes()[i]);
            }
        }
        out
    }

    pub fn from_interleaved(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 3 * width * height {
            return Err(Error::dim(format!(
                "{} bytes cannot fill a {width}x{height} RGB image",
                bytes.len()
            )));
        }
        let split = |c: usize| {
            GrayPlane::from_vec(width, height, bytes.iter().skip(c).step_by(3).copied().collect())
        };
        Ok(ColorImage {
            planes: [split(0)?, split(1)?, split(2)?],
        })
    }
}
