//! Simulated monospectral camera grid.
//!
//! Each grid cell is a camera sensitive to exactly one of R, G or B. It sees
//! the matching plane of the scene through its own [`ObservationOp`] plus
//! seeded Gaussian noise. The resulting sub-image array (SIA) is tiled into
//! a single grayscale mosaic for encryption.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{ObservationOp, Psf, Shift};
use crate::plane::{Channel, ColorImage, GrayPlane};

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, one entry per camera.
    pub channel_map: Vec<Channel>,
    pub gamma: usize,
    pub psf: Psf,
    /// Row-major, one entry per camera.
    pub shifts: Vec<Shift>,
    pub noise_sigma: f64,
}

/// Channel of cell `(r, c)` in the block pattern `G R / B G` repeated over
/// the grid.
fn block_pattern(r: usize, c: usize) -> Channel {
    match (r % 2, c % 2) {
        (0, 0) | (1, 1) => Channel::Green,
        (0, 1) => Channel::Red,
        _ => Channel::Blue,
    }
}

impl ArrayConfig {
    /// Grid in the `G R / B G` block pattern; the k-th camera of each
    /// channel is displaced to sub-pixel phase `k mod gamma^2`.
    pub fn patterned(rows: usize, cols: usize, gamma: usize, psf: Psf) -> Self {
        let channel_map: Vec<Channel> = (0..rows * cols)
            .map(|k| block_pattern(k / cols, k % cols))
            .collect();
        let shifts = phase_shifts(&channel_map, gamma);
        ArrayConfig {
            rows,
            cols,
            channel_map,
            gamma,
            psf,
            shifts,
            noise_sigma: 0.0,
        }
    }

    /// 4x4 grid with 8 green, 4 red and 4 blue cameras.
    pub fn default_4x4() -> Self {
        Self::patterned(4, 4, 2, Psf::binomial3())
    }

    /// 6x6 grid (18 green, 9 red, 9 blue).
    pub fn grid_6x6() -> Self {
        Self::patterned(6, 6, 2, Psf::binomial3())
    }

    /// 2x2 grid, one camera of each colour plus a second green.
    pub fn tiny() -> Self {
        Self::patterned(2, 2, 1, Psf::identity())
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn channel_count(&self, channel: Channel) -> usize {
        self.channel_map.iter().filter(|&&c| c == channel).count()
    }

    pub fn op(&self, cell: usize) -> ObservationOp {
        ObservationOp {
            gamma: self.gamma,
            psf: self.psf.clone(),
            shift: self.shifts[cell],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cells();
        if n == 0 {
            return Err(Error::config("camera grid is empty"));
        }
        if self.channel_map.len() != n || self.shifts.len() != n {
            return Err(Error::config(format!(
                "{}x{} grid needs {n} channel and shift entries",
                self.rows, self.cols
            )));
        }
        let [r, g, b] = Channel::ALL.map(|c| self.channel_count(c));
        if r == 0 || g == 0 || b == 0 {
            return Err(Error::config("channel map must cover R, G and B"));
        }
        if g < r || g < b {
            return Err(Error::config("green cameras must be at least as many as red and blue"));
        }
        if self.gamma == 0 {
            return Err(Error::config("decimation factor must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::config("noise sigma must be non-negative"));
        }
        for s in &self.shifts {
            ObservationOp::new(self.gamma, self.psf.clone(), *s)?;
        }
        Ok(())
    }

    /// Parse a channel map written as rows of `R`/`G`/`B` letters separated
    /// by `/`, e.g. `"GRGR/BGBG/GRGR/BGBG"`.
    pub fn parse_channel_map(text: &str) -> Result<(usize, usize, Vec<Channel>)> {
        let rows: Vec<&str> = text.split('/').map(str::trim).collect();
        let cols = rows[0].chars().count();
        if cols == 0 || rows.iter().any(|r| r.chars().count() != cols) {
            return Err(Error::parse("channel map rows must be non-empty and equally long"));
        }
        let map = rows
            .iter()
            .flat_map(|r| r.chars())
            .map(|c| c.to_string().parse())
            .collect::<Result<Vec<Channel>>>()?;
        Ok((rows.len(), cols, map))
    }

    pub fn channel_map_text(&self) -> String {
        self.channel_map
            .chunks(self.cols)
            .map(|row| row.iter().map(|c| c.letter()).collect::<String>())
            .collect::<Vec<_>>()
            .join("/")
    }
}

/// Per-channel sub-pixel phases: the k-th camera of a channel gets
/// `(k mod gamma, (k / gamma) mod gamma)`.
pub fn phase_shifts(channel_map: &[Channel], gamma: usize) -> Vec<Shift> {
    let mut seen = [0usize; 3];
    channel_map
        .iter()
        .map(|ch| {
            let k = seen[ch.index()];
            seen[ch.index()] += 1;
            let g = gamma.max(1);
            Shift::new((k % g) as f64, ((k / g) % g) as f64)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubImage {
    pub plane: GrayPlane,
    pub channel: Channel,
    pub shift: Shift,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubImageArray {
    pub rows: usize,
    pub cols: usize,
    pub gamma: usize,
    pub psf: Psf,
    /// Row-major.
    pub tiles: Vec<SubImage>,
}

impl SubImageArray {
    pub fn tile(&self, row: usize, col: usize) -> &SubImage {
        &self.tiles[row * self.cols + col]
    }

    pub fn tile_dims(&self) -> (usize, usize) {
        let p = &self.tiles[0].plane;
        (p.width(), p.height())
    }

    pub fn op(&self, cell: usize) -> ObservationOp {
        ObservationOp {
            gamma: self.gamma,
            psf: self.psf.clone(),
            shift: self.tiles[cell].shift,
        }
    }

    pub fn by_channel(&self, channel: Channel) -> impl Iterator<Item = (usize, &SubImage)> {
        self.tiles
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.channel == channel)
    }
}

/// Apply one camera to a single-channel scene: warp, blur, decimate, then
/// add seeded Gaussian noise and quantize.
pub fn degrade(x: &GrayPlane, op: &ObservationOp, noise_sigma: f64, rng: &mut ChaCha8Rng) -> Result<GrayPlane> {
    let clean = op.forward(&x.to_real())?;
    if noise_sigma == 0.0 {
        return Ok(clean.quantize());
    }
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut noisy = clean;
    for v in noisy.as_mut_slice() {
        *v += normal.sample(rng);
    }
    Ok(noisy.quantize())
}

/// Deterministic per-camera noise stream.
pub fn camera_rng(seed: u64, cell: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell as u64);
    rng
}

pub fn generate_sia(src: &ColorImage, cfg: &ArrayConfig, seed: u64) -> Result<SubImageArray> {
    cfg.validate()?;
    let tiles = (0..cfg.cells())
        .map(|k| {
            let channel = cfg.channel_map[k];
            let mut rng = camera_rng(seed, k);
            let plane = degrade(src.plane(channel), &cfg.op(k), cfg.noise_sigma, &mut rng)?;
            Ok(SubImage {
                plane,
                channel,
                shift: cfg.shifts[k],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubImageArray {
        rows: cfg.rows,
        cols: cfg.cols,
        gamma: cfg.gamma,
        psf: cfg.psf.clone(),
        tiles,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellLayout {
    pub channel: Channel,
    pub dx: f64,
    pub dy: f64,
}

/// Everything needed to cut a mosaic back into its sub-images and to
/// rebuild the observation operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub version: u32,
    pub rows: usize,
    pub cols: usize,
    pub tile_width: usize,
    pub tile_height: usize,
    pub gamma: usize,
    pub psf: Psf,
    pub cells: Vec<CellLayout>,
}

pub const LAYOUT_VERSION: u32 = 1;

impl Layout {
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("layout serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let layout: Layout = toml::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
        if layout.version != LAYOUT_VERSION {
            return Err(Error::parse(format!("unsupported layout version {}", layout.version)));
        }
        if layout.cells.len() != layout.rows * layout.cols {
            return Err(Error::parse("layout cell count does not match the grid"));
        }
        Ok(layout)
    }

    pub fn mosaic_dims(&self) -> (usize, usize) {
        (self.cols * self.tile_width, self.rows * self.tile_height)
    }
}

/// Row-major tiling of the sub-images into one plane.
pub fn mosaic(sia: &SubImageArray) -> Result<(GrayPlane, Layout)> {
    let (tw, th) = sia.tile_dims();
    if sia.tiles.len() != sia.rows * sia.cols {
        return Err(Error::dim("sub-image count does not match the grid"));
    }
    if sia.tiles.iter().any(|t| t.plane.width() != tw || t.plane.height() != th) {
        return Err(Error::dim("sub-images differ in size"));
    }
    let mut out = GrayPlane::new(sia.cols * tw, sia.rows * th);
    for (k, tile) in sia.tiles.iter().enumerate() {
        let (r0, c0) = ((k / sia.cols) * th, (k % sia.cols) * tw);
        for i in 0..th {
            let dst = (r0 + i) * out.width() + c0;
            out.as_bytes_mut()[dst..dst + tw]
                .copy_from_slice(&tile.plane.as_bytes()[i * tw..(i + 1) * tw]);
        }
    }
    let layout = Layout {
        version: LAYOUT_VERSION,
        rows: sia.rows,
        cols: sia.cols,
        tile_width: tw,
        tile_height: th,
        gamma: sia.gamma,
        psf: sia.psf.clone(),
        cells: sia
            .tiles
            .iter()
            .map(|t| CellLayout {
                channel: t.channel,
                dx: t.shift.dx,
                dy: t.shift.dy,
            })
            .collect(),
    };
    Ok((out, layout))
}

pub fn demosaic(plane: &GrayPlane, layout: &Layout) -> Result<SubImageArray> {
    let (w, h) = layout.mosaic_dims();
    if plane.width() != w || plane.height() != h {
        return Err(Error::dim(format!(
            "mosaic is {}x{}, layout expects {w}x{h}",
            plane.width(),
            plane.height()
        )));
    }
    let (tw, th) = (layout.tile_width, layout.tile_height);
    let tiles = layout
        .cells
        .iter()
        .enumerate()
        .map(|(k, cell)| {
            let (r0, c0) = ((k / layout.cols) * th, (k % layout.cols) * tw);
            let mut data = Vec::with_capacity(tw * th);
            for i in 0..th {
                let src = (r0 + i) * w + c0;
                data.extend_from_slice(&plane.as_bytes()[src..src + tw]);
            }
            Ok(SubImage {
                plane: GrayPlane::from_vec(tw, th, data)?,
                channel: cell.channel,
                shift: Shift::new(cell.dx, cell.dy),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubImageArray {
        rows: layout.rows,
        cols: layout.cols,
        gamma: layout.gamma,
        psf: layout.psf.clone(),
        tiles,
    })
}
