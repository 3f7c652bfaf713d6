//! Security and quality metrics.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::ca::CaState;
use crate::cipher::{encrypt_counted, CipherKey, CipherText, KeySchedule, OpCounts};
use crate::error::{Error, Result};
use crate::plane::{ColorImage, GrayPlane};

/// Upper 1% point of chi-square with 255 degrees of freedom.
pub const CHI_SQUARE_CRITICAL_1PCT: f64 = 310.46;

fn check_dims(a: &GrayPlane, b: &GrayPlane) -> Result<()> {
    if !a.same_dims(b) {
        return Err(Error::dim(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn mse_bytes(a: &[u8], b: &[u8]) -> f64 {
    let sum: u64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    sum as f64 / a.len() as f64
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

/// Peak signal-to-noise ratio in dB; identical inputs give `+inf`.
pub fn psnr(a: &GrayPlane, b: &GrayPlane) -> Result<f64> {
    check_dims(a, b)?;
    Ok(psnr_from_mse(mse_bytes(a.as_bytes(), b.as_bytes())))
}

/// PSNR over all three channels pooled.
pub fn psnr_color(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    let (x, y) = (a.to_interleaved(), b.to_interleaved());
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::dim("colour images differ in size"));
    }
    Ok(psnr_from_mse(mse_bytes(&x, &y)))
}

/// Percentage of positions whose values differ.
pub fn npcr(a: &GrayPlane, b: &GrayPlane) -> Result<f64> {
    check_dims(a, b)?;
    let diff = a.as_bytes().iter().zip(b.as_bytes()).filter(|(x, y)| x != y).count();
    Ok(100.0 * diff as f64 / a.len() as f64)
}

/// Mean absolute difference as a percentage of 255.
pub fn uaci(a: &GrayPlane, b: &GrayPlane) -> Result<f64> {
    check_dims(a, b)?;
    let sum: u64 = a
        .as_bytes()
        .iter()
        .zip(b.as_bytes())
        .map(|(&x, &y)| x.abs_diff(y) as u64)
        .sum();
    Ok(100.0 * sum as f64 / (255.0 * a.len() as f64))
}

/// Pearson correlation; zero variance on either side is an error.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::dim("correlation needs two equal, non-empty samples"));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateInput("constant sample has no correlation".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

pub fn plane_correlation(a: &GrayPlane, b: &GrayPlane) -> Result<f64> {
    check_dims(a, b)?;
    let x: Vec<f64> = a.as_bytes().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.as_bytes().iter().map(|&v| v as f64).collect();
    pearson(&x, &y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Horizontal,
    Vertical,
    Diagonal,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Horizontal, Direction::Vertical, Direction::Diagonal];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Horizontal => "horizontal",
            Direction::Vertical => "vertical",
            Direction::Diagonal => "diagonal",
        }
    }

    fn offset(self) -> (usize, usize) {
        match self {
            Direction::Horizontal => (0, 1),
            Direction::Vertical => (1, 0),
            Direction::Diagonal => (1, 1),
        }
    }
}

/// Correlation of every pixel with its neighbour in `dir`.
pub fn adjacent_correlation(img: &GrayPlane, dir: Direction) -> Result<f64> {
    let (di, dj) = dir.offset();
    let (w, h) = (img.width(), img.height());
    if w <= dj || h <= di {
        return Err(Error::DegenerateInput("image too small for neighbour pairs".into()));
    }
    let mut a = Vec::with_capacity((w - dj) * (h - di));
    let mut b = Vec::with_capacity(a.capacity());
    for i in 0..h - di {
        for j in 0..w - dj {
            a.push(img.get(i, j) as f64);
            b.push(img.get(i + di, j + dj) as f64);
        }
    }
    pearson(&a, &b)
}

pub type Histogram = [u64; 256];

pub fn histogram(img: &GrayPlane) -> Histogram {
    let mut h = [0u64; 256];
    for &v in img.as_bytes() {
        h[v as usize] += 1;
    }
    h
}

/// Chi-square statistic against the uniform distribution (255 df).
pub fn chi_square(hist: &Histogram) -> f64 {
    let total: u64 = hist.iter().sum();
    let expected = total as f64 / 256.0;
    hist.iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}

/// Columns `level,<name>...`.
pub fn histograms_csv(named: &[(&str, &Histogram)]) -> String {
    let mut out = String::from("level");
    for (name, _) in named {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for level in 0..256 {
        let _ = write!(out, "{level}");
        for (_, h) in named {
            let _ = write!(out, ",{}", h[level]);
        }
        out.push('\n');
    }
    out
}

/// Normalized autocorrelation over all lags. Lag `(0, 0)` sits at
/// `(height - 1, width - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocorrSurface {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl AutocorrSurface {
    /// Surface width, `2W - 1`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at row lag `dy`, column lag `dx`.
    pub fn at(&self, dy: isize, dx: isize) -> f64 {
        let r = (dy + (self.height as isize - 1) / 2) as usize;
        let c = (dx + (self.width as isize - 1) / 2) as usize;
        self.values[r * self.width + c]
    }

    fn max_lags(&self) -> (isize, isize) {
        ((self.height as isize - 1) / 2, (self.width as isize - 1) / 2)
    }

    /// Largest `|r|` over lags with Chebyshev distance greater than `min_lag`.
    pub fn max_off_peak(&self, min_lag: usize) -> f64 {
        self.off_peak(min_lag, usize::MAX).fold(0.0, f64::max)
    }

    /// Mean `|r|` over lags with Chebyshev distance in `1..=window`.
    pub fn mean_off_peak(&self, window: usize) -> f64 {
        let (sum, n) = self.off_peak(0, window).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    fn off_peak(&self, min_lag: usize, max_lag: usize) -> impl Iterator<Item = f64> + '_ {
        let (ly, lx) = self.max_lags();
        (-ly..=ly).flat_map(move |dy| {
            (-lx..=lx).filter_map(move |dx| {
                let d = dy.unsigned_abs().max(dx.unsigned_abs());
                (d > min_lag && d <= max_lag).then(|| self.at(dy, dx).abs())
            })
        })
    }

    /// Linear map of `[min, max]` onto `0..=255`.
    pub fn to_heat_map(&self) -> GrayPlane {
        let (lo, hi) = self.range();
        let span = if hi > lo { hi - lo } else { 1.0 };
        let data = self
            .values
            .iter()
            .map(|v| ((v - lo) / span * 255.0).round() as u8)
            .collect();
        GrayPlane::from_vec(self.width, self.height, data).expect("consistent size")
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Sidecar text describing the heat map's scale.
    pub fn scale_annotation(&self) -> String {
        let (lo, hi) = self.range();
        format!(
            "scale = \"linear\"\nblack = {lo}\nwhite = {hi}\nzero_lag_row = {}\nzero_lag_col = {}\n",
            (self.height - 1) / 2,
            (self.width - 1) / 2
        )
    }
}

fn centred(img: &GrayPlane) -> Result<(Vec<f64>, f64)> {
    let n = img.len() as f64;
    let mean = img.as_bytes().iter().map(|&v| v as f64).sum::<f64>() / n;
    let x: Vec<f64> = img.as_bytes().iter().map(|&v| v as f64 - mean).collect();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::DegenerateInput("constant image has no autocorrelation".into()));
    }
    Ok((x, energy))
}

/// Direct summation, `O((WH)^2)`.
pub fn autocorrelation_direct(img: &GrayPlane) -> Result<AutocorrSurface> {
    let (x, energy) = centred(img)?;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (sw, sh) = (2 * w - 1, 2 * h - 1);
    let mut values = Vec::with_capacity((sw * sh) as usize);
    for dy in -(h - 1)..h {
        for dx in -(w - 1)..w {
            let mut acc = 0.0;
            for i in 0.max(-dy)..h.min(h - dy) {
                let row = (i * w) as usize;
                let lagged = ((i + dy) * w) as usize;
                for j in 0.max(-dx)..w.min(w - dx) {
                    acc += x[row + j as usize] * x[(lagged as isize + j + dx) as usize];
                }
            }
            values.push(acc / energy);
        }
    }
    Ok(AutocorrSurface {
        width: sw as usize,
        height: sh as usize,
        values,
    })
}

fn fft_2d(data: &mut [Complex<f64>], w: usize, h: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let mut col = vec![Complex::default(); h];
    for j in 0..w {
        for i in 0..h {
            col[i] = data[i * w + j];
        }
        col_fft.process(&mut col);
        for i in 0..h {
            data[i * w + j] = col[i];
        }
    }
}

/// Wiener-Khinchin on a zero-padded grid.
pub fn autocorrelation_fft(img: &GrayPlane) -> Result<AutocorrSurface> {
    let (x, energy) = centred(img)?;
    let (w, h) = (img.width(), img.height());
    let (pw, ph) = (2 * w - 1, 2 * h - 1);
    let mut buf = vec![Complex::default(); pw * ph];
    for i in 0..h {
        for j in 0..w {
            buf[i * pw + j] = Complex::new(x[i * w + j], 0.0);
        }
    }
    fft_2d(&mut buf, pw, ph, false);
    for v in &mut buf {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    fft_2d(&mut buf, pw, ph, true);
    let scale = energy * (pw * ph) as f64;
    let mut values = Vec::with_capacity(pw * ph);
    for dy in -(h as isize - 1)..h as isize {
        let r = dy.rem_euclid(ph as isize) as usize;
        for dx in -(w as isize - 1)..w as isize {
            let c = dx.rem_euclid(pw as isize) as usize;
            values.push(buf[r * pw + c].re / scale);
        }
    }
    Ok(AutocorrSurface {
        width: pw,
        height: ph,
        values,
    })
}

pub fn autocorrelation(img: &GrayPlane) -> Result<AutocorrSurface> {
    autocorrelation_fft(img)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OcclusionRegion {
    /// Near-square block anchored at the top-left corner.
    #[default]
    BlockTopLeft,
    /// Uniformly chosen positions.
    RandomPixels,
}

impl OcclusionRegion {
    pub fn name(self) -> &'static str {
        match self {
            OcclusionRegion::BlockTopLeft => "block_topleft",
            OcclusionRegion::RandomPixels => "random_pixels",
        }
    }
}

impl FromStr for OcclusionRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block_topleft" => Ok(OcclusionRegion::BlockTopLeft),
            "random_pixels" => Ok(OcclusionRegion::RandomPixels),
            other => Err(Error::config(format!("unknown occlusion region {other:?}"))),
        }
    }
}

/// Zero `round(fraction * L)` ciphertext bytes.
pub fn occlude(cipher: &CipherText, fraction: f64, region: OcclusionRegion, seed: u64) -> Result<CipherText> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!("occlusion fraction {fraction} outside [0, 1]")));
    }
    let len = cipher.len();
    let count = (fraction * len as f64).round() as usize;
    let mut out = cipher.clone();
    match region {
        OcclusionRegion::BlockTopLeft => {
            let (w, h) = (cipher.width, cipher.height);
            let mut bw = ((w as f64 * fraction.sqrt()).ceil() as usize).clamp(1, w.max(1));
            if count.div_ceil(bw) > h {
                bw = w;
            }
            for k in 0..count {
                out.bytes[(k / bw) * w + k % bw] = 0;
            }
        }
        OcclusionRegion::RandomPixels => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for idx in rand::seq::index::sample(&mut rng, len, count) {
                out.bytes[idx] = 0;
            }
        }
    }
    Ok(out)
}

/// Named scalar metrics in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricReport {
    entries: Vec<(String, f64)>,
}

impl MetricReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    /// Columns `metric,value`; infinities print as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (n, v) in &self.entries {
            let _ = writeln!(out, "{n},{v}");
        }
        out
    }
}

/// Standard cipher-image statistics.
pub fn cipher_report(plain: &GrayPlane, cipher: &GrayPlane) -> Result<MetricReport> {
    let mut r = MetricReport::new();
    let (hp, hc) = (histogram(plain), histogram(cipher));
    r.push("chi_square_plain", chi_square(&hp));
    r.push("chi_square_cipher", chi_square(&hc));
    for dir in Direction::ALL {
        for (label, img) in [("plain", plain), ("cipher", cipher)] {
            let v = adjacent_correlation(img, dir).unwrap_or(f64::NAN);
            r.push(format!("correlation_{}_{label}", dir.name()), v);
        }
    }
    r.push("npcr_plain_cipher", npcr(plain, cipher)?);
    r.push("uaci_plain_cipher", uaci(plain, cipher)?);
    Ok(r)
}

/// A single change to key material.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    None,
    /// Swap rule 90/150 at one cell of the first register.
    FxRuleCell(usize),
    FyRuleCell(usize),
    /// Flip one seed bit, 0 = least significant.
    FxSeedBit(u8),
    FySeedBit(u8),
    /// Add `delta` to one initial-state component (0..4 = x, y, z, w).
    ChaosInitial { component: usize, delta: f64 },
}

impl Perturbation {
    pub fn apply(self, key: &CipherKey) -> Result<CipherKey> {
        let mut k = key.clone();
        let flip = |s: &CaState, bit: u8| -> Result<CaState> {
            if bit as usize >= s.len() {
                return Err(Error::dim(format!("seed bit {bit} out of range")));
            }
            Ok(CaState::from_u64(s.to_u64() ^ (1 << bit), s.len()))
        };
        match self {
            Perturbation::None => {}
            Perturbation::FxRuleCell(c) => k.fx_rules = k.fx_rules.with_toggled(c)?,
            Perturbation::FyRuleCell(c) => k.fy_rules = k.fy_rules.with_toggled(c)?,
            Perturbation::FxSeedBit(b) => k.fx_seed = flip(&k.fx_seed, b)?,
            Perturbation::FySeedBit(b) => k.fy_seed = flip(&k.fy_seed, b)?,
            Perturbation::ChaosInitial { component, delta } => {
                let mut s = k.chaos.initial_state();
                *s.get_mut(component)
                    .ok_or_else(|| Error::dim(format!("chaos component {component} out of range")))? += delta;
                k.chaos = k.chaos.with_initial_state(s);
            }
        }
        Ok(k)
    }
}

/// Decrypt the true ciphertext of `plain` with a perturbed key and compare
/// against the correct decryption.
pub fn key_sensitivity(plain: &GrayPlane, key: &CipherKey, perturbation: Perturbation) -> Result<MetricReport> {
    let len = plain.len();
    let cipher = KeySchedule::new(key, len)?.encrypt(plain)?;
    let correct = KeySchedule::new(key, len)?.decrypt(&cipher)?;
    let wrong = KeySchedule::new_unvalidated(&perturbation.apply(key)?, len)?.decrypt(&cipher)?;
    let mut r = MetricReport::new();
    r.push("npcr", npcr(&correct, &wrong)?);
    r.push("uaci", uaci(&correct, &wrong)?);
    r.push("correlation", plane_correlation(&correct, &wrong).unwrap_or(f64::NAN));
    r.push("psnr", psnr(&correct, &wrong)?);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub width: usize,
    pub height: usize,
    /// Fastest of the timed repetitions.
    pub seconds: f64,
    pub counts: OpCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log time against log pixel count.
    pub growth_exponent: f64,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("width,height,pixels,seconds,byte_touches,comparisons,chaos_steps,ca_steps\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.width,
                r.height,
                r.width * r.height,
                r.seconds,
                r.counts.byte_touches,
                r.counts.comparisons,
                r.counts.chaos_steps,
                r.counts.ca_steps
            );
        }
        let _ = writeln!(out, "# growth_exponent = {}", self.growth_exponent);
        out
    }
}

/// Time full encryption (key schedule included) of seeded random images.
pub fn bench_scaling(sizes: &[(usize, usize)], key: &CipherKey, repeats: usize, seed: u64) -> Result<ScalingReport> {
    use rand::RngCore;
    key.validate()?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &(w, h) in sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0u8; w * h];
        rng.fill_bytes(&mut data);
        let img = GrayPlane::from_vec(w, h, data)?;
        let mut best = f64::INFINITY;
        let mut counts = OpCounts::default();
        for _ in 0..repeats.max(1) {
            let t = Instant::now();
            let (_, c) = encrypt_counted(&img, key)?;
            best = best.min(t.elapsed().as_secs_f64());
            counts = c;
        }
        rows.push(ScalingRow {
            width: w,
            height: h,
            seconds: best,
            counts,
        });
    }
    let growth_exponent = fit_slope(
        &rows
            .iter()
            .map(|r| (((r.width * r.height) as f64).ln(), r.seconds.max(1e-12).ln()))
            .collect::<Vec<_>>(),
    );
    Ok(ScalingReport { rows, growth_exponent })
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}
