//! Deterministic synthetic colour scenes used as pipeline inputs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::plane::ColorImage;

/// Colour bars, a diagonal edge, a ramp and a disc.
pub fn test_chart(width: usize, height: usize) -> ColorImage {
    const BARS: [[u8; 3]; 8] = [
        [235, 235, 235],
        [235, 235, 16],
        [16, 235, 235],
        [16, 235, 16],
        [235, 16, 235],
        [235, 16, 16],
        [16, 16, 235],
        [16, 16, 16],
    ];
    let (w, h) = (width as f64, height as f64);
    ColorImage::from_fn(width, height, |i, j| {
        let (y, x) = (i as f64 / h, j as f64 / w);
        if y < 0.4 {
            return BARS[(x * 8.0) as usize % 8];
        }
        let (dy, dx) = (y - 0.7, x - 0.7);
        if dy * dy + dx * dx < 0.04 {
            return [200, 60, 30];
        }
        if x + (y - 0.4) < 0.45 {
            return [40, 90, 160];
        }
        let ramp = (x * 255.0) as u8;
        [ramp, 255 - ramp, 128]
    })
}

/// Textured scene with a broad histogram in every channel: a random sum of
/// plane waves, a few flat-shaded shapes and fine grain.
pub fn natural_scene(width: usize, height: usize, seed: u64) -> ColorImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[(f64, f64, f64, f64); 3]> = (0..6)
        .map(|_| {
            std::array::from_fn(|_| {
                let freq = rng.random_range(1.0..6.0) * 2.0 * PI;
                let angle = rng.random_range(0.0..PI);
                (freq * angle.cos(), freq * angle.sin(), rng.random_range(0.0..2.0 * PI), rng.random_range(0.5..1.0))
            })
        })
        .collect();
    let shapes: Vec<(f64, f64, f64, [f64; 3])> = (0..5)
        .map(|_| {
            (
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.05..0.2),
                std::array::from_fn(|_| rng.random_range(-60.0..60.0)),
            )
        })
        .collect();
    let mut grain = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let norm = waves.iter().map(|w| w[0].3).sum::<f64>();
    ColorImage::from_fn(width, height, |i, j| {
        let (y, x) = (i as f64 / height as f64, j as f64 / width as f64);
        std::array::from_fn(|c| {
            let mut v: f64 = waves.iter().map(|w| w[c].3 * (w[c].0 * x + w[c].1 * y + w[c].2).sin()).sum();
            v = 128.0 + 230.0 * v / norm;
            for &(cy, cx, r, tint) in &shapes {
                if (y - cy).powi(2) + (x - cx).powi(2) < r * r {
                    v += tint[c];
                }
            }
            (v + grain.random_range(-6.0..6.0)).round().clamp(0.0, 255.0) as u8
        })
    })
}
