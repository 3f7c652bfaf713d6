//! Four-dimensional hyperchaotic Lorenz flow.
//!
//! ```text
//! x' = a(y - x) + w
//! y' = cx - y - xz
//! z' = xy - bz
//! w' = -yz + rw
//! ```
//!
//! Trajectories come from a fixed-step classical Runge-Kutta scheme with a
//! fixed evaluation order, so a key reproduces the same bits everywhere.

use serde::Deserialize;

use crate::error::{Error, Result};

pub type State = [f64; 4];

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct HyperchaosKey {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub w0: f64,
    /// Leading samples discarded before any sequence is emitted.
    #[serde(rename = "n0")]
    pub burn_in: usize,
    /// Integration step in time units.
    pub h: f64,
}

impl Default for HyperchaosKey {
    fn default() -> Self {
        HyperchaosKey {
            a: 10.0,
            b: 8.0 / 3.0,
            c: 28.0,
            r: -1.0,
            x0: 1.0,
            y0: 1.0,
            z0: 1.0,
            w0: 1.0,
            burn_in: 150,
            h: 0.001,
        }
    }
}

/// Reals are written with 17 significant digits so that parsing the text
/// back yields the identical `f64`.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl HyperchaosKey {
    pub fn initial_state(&self) -> State {
        [self.x0, self.y0, self.z0, self.w0]
    }

    pub fn with_initial_state(mut self, s: State) -> Self {
        [self.x0, self.y0, self.z0, self.w0] = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            self.a, self.b, self.c, self.r, self.x0, self.y0, self.z0, self.w0, self.h,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("hyperchaos key fields must be finite"));
        }
        if self.h <= 0.0 {
            return Err(Error::config("integration step must be positive"));
        }
        Ok(())
    }

    /// Key fields as `name = value` lines (a TOML table body).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("r", self.r),
            ("x0", self.x0),
            ("y0", self.y0),
            ("z0", self.z0),
            ("w0", self.w0),
        ] {
            out.push_str(&format!("{name} = {}\n", fmt_real(v)));
        }
        out.push_str(&format!("n0 = {}\n", self.burn_in));
        out.push_str(&format!("h = {}\n", fmt_real(self.h)));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let key: HyperchaosKey = toml::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
        key.validate()?;
        Ok(key)
    }
}

#[inline]
pub fn derivative(s: &State, key: &HyperchaosKey) -> State {
    let [x, y, z, w] = *s;
    [
        key.a * (y - x) + w,
        key.c * x - y - x * z,
        x * y - key.b * z,
        -y * z + key.r * w,
    ]
}

#[inline]
fn offset(s: &State, k: &State, scale: f64) -> State {
    [
        s[0] + scale * k[0],
        s[1] + scale * k[1],
        s[2] + scale * k[2],
        s[3] + scale * k[3],
    ]
}

/// One classical RK4 step of size `h`.
#[inline]
pub fn rk4_step(s: &State, key: &HyperchaosKey, h: f64) -> State {
    let k1 = derivative(s, key);
    let k2 = derivative(&offset(s, &k1, h / 2.0), key);
    let k3 = derivative(&offset(s, &k2, h / 2.0), key);
    let k4 = derivative(&offset(s, &k3, h), key);
    let mut out = *s;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Samples at uniform time steps; sample `i` is the state after `i + 1`
/// integration steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    samples: Vec<State>,
}

impl Trajectory {
    pub fn samples(&self) -> &[State] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[axis]).collect()
    }
}

pub fn integrate(key: &HyperchaosKey, steps: usize) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::config("at least one integration step is required"));
    }
    key.validate()?;
    let mut s = key.initial_state();
    let mut samples = Vec::with_capacity(steps);
    for step in 1..=steps {
        s = rk4_step(&s, key, key.h);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
        samples.push(s);
    }
    Ok(Trajectory { samples })
}

/// The x, y, z and w sequences, `total / 4` samples each, after the
/// burn-in samples have been dropped.
pub fn key_sequences(key: &HyperchaosKey, total: usize) -> Result<[Vec<f64>; 4]> {
    if total == 0 || !total.is_multiple_of(4) {
        return Err(Error::dim(format!(
            "sequence budget {total} is not a positive multiple of 4"
        )));
    }
    let per = total / 4;
    let traj = integrate(key, key.burn_in + per)?;
    let kept = &traj.samples[key.burn_in..];
    Ok(std::array::from_fn(|axis| kept.iter().map(|s| s[axis]).collect()))
}

#[derive(Clone, Copy, Debug)]
pub struct LyapunovOptions {
    /// Averaging window in time units.
    pub span: f64,
    /// Time integrated before averaging starts.
    pub transient: f64,
    /// Integration steps between re-orthonormalizations.
    pub reorth_interval: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions {
            span: 2000.0,
            transient: 100.0,
            reorth_interval: 10,
        }
    }
}

#[inline]
fn jacobian_apply(s: &State, v: &State, key: &HyperchaosKey) -> State {
    let [x, y, z, _] = *s;
    [
        -key.a * v[0] + key.a * v[1] + v[3],
        (key.c - z) * v[0] - v[1] - x * v[2],
        y * v[0] + x * v[1] - key.b * v[2],
        -z * v[1] - y * v[2] + key.r * v[3],
    ]
}

// State plus four tangent vectors, integrated together.
type Extended = [State; 5];

fn extended_derivative(e: &Extended, key: &HyperchaosKey) -> Extended {
    let mut out = [[0.0; 4]; 5];
    out[0] = derivative(&e[0], key);
    for j in 1..5 {
        out[j] = jacobian_apply(&e[0], &e[j], key);
    }
    out
}

fn extended_offset(e: &Extended, k: &Extended, scale: f64) -> Extended {
    std::array::from_fn(|j| offset(&e[j], &k[j], scale))
}

fn extended_rk4(e: &Extended, key: &HyperchaosKey, h: f64) -> Extended {
    let k1 = extended_derivative(e, key);
    let k2 = extended_derivative(&extended_offset(e, &k1, h / 2.0), key);
    let k3 = extended_derivative(&extended_offset(e, &k2, h / 2.0), key);
    let k4 = extended_derivative(&extended_offset(e, &k3, h), key);
    std::array::from_fn(|j| {
        std::array::from_fn(|i| {
            e[j][i] + h / 6.0 * (k1[j][i] + 2.0 * k2[j][i] + 2.0 * k3[j][i] + k4[j][i])
        })
    })
}

/// Modified Gram-Schmidt in place; returns the stretch of each vector.
fn orthonormalize(vs: &mut [State]) -> [f64; 4] {
    let mut norms = [0.0; 4];
    for j in 0..vs.len() {
        for k in 0..j {
            let proj: f64 = (0..4).map(|i| vs[j][i] * vs[k][i]).sum();
            for i in 0..4 {
                vs[j][i] -= proj * vs[k][i];
            }
        }
        let n = vs[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..4 {
            vs[j][i] /= n;
        }
        norms[j] = n;
    }
    norms
}

/// Benettin estimate of the four Lyapunov exponents, descending.
pub fn lyapunov_spectrum(key: &HyperchaosKey, opts: &LyapunovOptions) -> Result<[f64; 4]> {
    key.validate()?;
    if opts.span <= 0.0 || opts.reorth_interval == 0 {
        return Err(Error::config("Lyapunov span and interval must be positive"));
    }
    let h = key.h;
    let mut s = key.initial_state();
    let transient_steps = (opts.transient / h).round() as usize;
    for step in 1..=transient_steps {
        s = rk4_step(&s, key, h);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
    }

    let mut e: Extended = [s, [1., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 1., 0.], [0., 0., 0., 1.]];
    let blocks = ((opts.span / h).round() as usize / opts.reorth_interval).max(1);
    let mut sums = [0.0; 4];
    for block in 0..blocks {
        for _ in 0..opts.reorth_interval {
            e = extended_rk4(&e, key, h);
        }
        let stretch = orthonormalize(&mut e[1..]);
        if e.iter().flatten().any(|v| !v.is_finite()) || stretch.iter().any(|&n| n <= 0.0) {
            return Err(Error::Divergence {
                step: transient_steps + (block + 1) * opts.reorth_interval,
            });
        }
        for (acc, n) in sums.iter_mut().zip(stretch) {
            *acc += n.ln();
        }
    }
    let elapsed = (blocks * opts.reorth_interval) as f64 * h;
    let mut spectrum = sums.map(|s| s / elapsed);
    spectrum.sort_by(|a, b| b.total_cmp(a));
    Ok(spectrum)
}
