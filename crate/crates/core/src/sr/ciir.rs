//! Magnify-and-superimpose baseline.

use crate::error::{Error, Result};
use crate::operator::Shift;
use crate::plane::RealPlane;

#[derive(Clone, Debug)]
pub struct CiirOutput {
    pub plane: RealPlane,
    /// Set when some output pixel received no contribution (left at 0).
    pub coverage_warning: bool,
}

/// Replicate each low-resolution pixel into a `magnification`-sized block at
/// its registered position, accumulate, and divide by per-pixel coverage.
/// Shifts are rounded to whole high-resolution pixels.
pub fn ciir(observations: &[(&RealPlane, Shift)], magnification: usize) -> Result<CiirOutput> {
    let (first, _) = observations
        .first()
        .ok_or_else(|| Error::DegenerateInput("ciir needs at least one observation".into()))?;
    if magnification == 0 {
        return Err(Error::config("magnification must be positive"));
    }
    let (lw, lh) = (first.width(), first.height());
    if observations.iter().any(|(p, _)| p.width() != lw || p.height() != lh) {
        return Err(Error::dim("ciir observations differ in size"));
    }
    let (w, h) = (lw * magnification, lh * magnification);
    let mut sum = RealPlane::zeros(w, h);
    let mut count = vec![0u32; w * h];
    for (plane, shift) in observations {
        let (dx, dy) = (shift.dx.round() as isize, shift.dy.round() as isize);
        for i in 0..lh {
            for j in 0..lw {
                let v = plane.get(i, j);
                for a in 0..magnification {
                    let r = (i * magnification + a) as isize + dy;
                    if r < 0 || r >= h as isize {
                        continue;
                    }
                    for b in 0..magnification {
                        let c = (j * magnification + b) as isize + dx;
                        if c < 0 || c >= w as isize {
                            continue;
                        }
                        sum.add_at(r as usize, c as usize, v);
                        count[r as usize * w + c as usize] += 1;
                    }
                }
            }
        }
    }
    let mut coverage_warning = false;
    for (s, &n) in sum.as_mut_slice().iter_mut().zip(&count) {
        if n == 0 {
            coverage_warning = true;
        } else {
            *s /= n as f64;
        }
    }
    Ok(CiirOutput {
        plane: sum,
        coverage_warning,
    })
}
