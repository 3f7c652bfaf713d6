//! Per-channel robust super-resolution and colour fusion.
//!
//! The solver runs L1 steepest descent on
//! `Σ_k ‖D H W_k x − y_k‖₁ + λ ‖Υx‖₁`, with the per-observation sign terms
//! fused by a [`DataEstimator`] and the prior supplied by a [`Regularizer`].
//! Both are selected by name from a [`Registry`], as is the whole-channel
//! [`Reconstructor`] (`ciir` or `sr`).

mod ciir;
mod estimator;
mod regularizer;

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capture::SubImageArray;
use crate::error::{Error, Result};
use crate::operator::ObservationOp;
use crate::plane::{Channel, ColorImage, GrayPlane, RealPlane};
use crate::registry::Registry;

pub use ciir::{ciir, CiirOutput};
pub use estimator::{DataEstimator, ScaledMedian, SignSum};
pub use regularizer::{BilateralTv, LaplacianL1, Regularizer};

#[inline]
pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub plane: RealPlane,
    pub op: ObservationOp,
}

/// Observations of one channel and the target resolution.
#[derive(Clone, Debug)]
pub struct SrProblem {
    observations: Vec<Observation>,
    width: usize,
    height: usize,
}

impl SrProblem {
    pub fn new(observations: Vec<Observation>, width: usize, height: usize) -> Result<Self> {
        let first = observations
            .first()
            .ok_or_else(|| Error::DegenerateInput("no observations".into()))?;
        let gamma = first.op.gamma;
        for obs in &observations {
            if obs.op.gamma != gamma {
                return Err(Error::config("observations disagree on the decimation factor"));
            }
            let (w, h) = obs.op.output_dims(width, height)?;
            if (w, h) != (obs.plane.width(), obs.plane.height()) {
                return Err(Error::dim(format!(
                    "observation is {}x{}, operator produces {w}x{h}",
                    obs.plane.width(),
                    obs.plane.height()
                )));
            }
        }
        Ok(SrProblem {
            observations,
            width,
            height,
        })
    }

    /// The observation group of one channel of a sub-image array.
    pub fn from_sia(sia: &SubImageArray, channel: Channel) -> Result<Self> {
        let observations: Vec<Observation> = sia
            .by_channel(channel)
            .map(|(cell, tile)| Observation {
                plane: tile.plane.to_real(),
                op: sia.op(cell),
            })
            .collect();
        if observations.is_empty() {
            return Err(Error::MissingChannel(channel.letter()));
        }
        let (tw, th) = sia.tile_dims();
        SrProblem::new(observations, tw * sia.gamma, th * sia.gamma)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gamma(&self) -> usize {
        self.observations[0].op.gamma
    }

    /// `Σ_k ‖forward_k(x) − y_k‖₁`.
    pub fn data_objective(&self, x: &RealPlane) -> Result<f64> {
        let mut total = 0.0;
        for obs in &self.observations {
            let fx = obs.op.forward(x)?;
            total += fx
                .as_slice()
                .iter()
                .zip(obs.plane.as_slice())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        }
        Ok(total)
    }

    pub fn ciir(&self) -> Result<CiirOutput> {
        let obs: Vec<_> = self
            .observations
            .iter()
            .map(|o| (&o.plane, o.op.shift))
            .collect();
        ciir(&obs, self.gamma())
    }
}

fn default_beta() -> f64 {
    1.0
}
fn default_lambda() -> f64 {
    0.1
}
fn default_eta() -> f64 {
    1e-4
}
fn default_max_iters() -> usize {
    300
}
fn default_regularizer() -> String {
    "laplacian_l1".into()
}
fn default_estimator() -> String {
    "sign_sum".into()
}
fn default_method() -> String {
    "sr".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrConfig {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_regularizer")]
    pub regularizer: String,
    #[serde(default = "default_estimator")]
    pub estimator: String,
    /// Whole-channel reconstructor.
    #[serde(default = "default_method")]
    pub method: String,
}

impl Default for SrConfig {
    fn default() -> Self {
        SrConfig {
            beta: default_beta(),
            lambda: default_lambda(),
            eta: default_eta(),
            max_iters: default_max_iters(),
            regularizer: default_regularizer(),
            estimator: default_estimator(),
            method: default_method(),
        }
    }
}

impl SrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config("beta must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda must be non-negative"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta must be positive"));
        }
        for (reg_ok, kind, name) in [
            (regularizers().contains(&self.regularizer), "regularizer", &self.regularizer),
            (estimators().contains(&self.estimator), "estimator", &self.estimator),
            (reconstructors().contains(&self.method), "reconstructor", &self.method),
        ] {
            if !reg_ok {
                return Err(Error::UnknownStrategy {
                    kind,
                    name: name.clone(),
                });
            }
        }
        Ok(())
    }
}

pub fn regularizers() -> Registry<dyn Regularizer> {
    let mut r: Registry<dyn Regularizer> = Registry::new("regularizer");
    r.register("laplacian_l1", || Box::new(LaplacianL1));
    r.register("bilateral_tv", || Box::new(BilateralTv::default()));
    r
}

pub fn estimators() -> Registry<dyn DataEstimator> {
    let mut r: Registry<dyn DataEstimator> = Registry::new("estimator");
    r.register("sign_sum", || Box::new(SignSum));
    r.register("scaled_median", || Box::new(ScaledMedian));
    r
}

pub fn reconstructors() -> Registry<dyn Reconstructor> {
    let mut r: Registry<dyn Reconstructor> = Registry::new("reconstructor");
    r.register("ciir", || Box::new(CiirReconstructor));
    r.register("sr", || Box::new(SrReconstructor));
    r
}

pub fn regularizer_gradient(x: &RealPlane, kind: &str) -> Result<RealPlane> {
    Ok(regularizers().create(kind)?.gradient(x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `e^(n)` for each iteration taken.
    pub errors: Vec<f64>,
    /// Data objective at the iterate each step started from.
    pub objectives: Vec<f64>,
    pub final_objective: f64,
    /// PSNR of each new iterate against the reference, when one was given.
    pub psnr: Vec<f64>,
    pub converged: bool,
    pub estimate: RealPlane,
}

impl SolveReport {
    pub fn initial_objective(&self) -> f64 {
        self.objectives.first().copied().unwrap_or(self.final_objective)
    }

    /// Columns `iteration,error,data_objective,psnr`; psnr is empty without a reference.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,error,data_objective,psnr\n");
        for n in 0..self.iterations {
            let psnr = self.psnr.get(n).map(|p| format!("{p}")).unwrap_or_default();
            let _ = writeln!(out, "{n},{},{},{psnr}", self.errors[n], self.objectives[n]);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

pub(crate) fn psnr_real(x: &RealPlane, reference: &RealPlane) -> f64 {
    let mse = x
        .as_slice()
        .iter()
        .zip(reference.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

/// Solve with the regularizer and estimator named in `cfg`.
pub fn sr_solve(problem: &SrProblem, cfg: &SrConfig, init: &RealPlane) -> Result<SolveReport> {
    sr_solve_traced(problem, cfg, init, None)
}

pub fn sr_solve_traced(
    problem: &SrProblem,
    cfg: &SrConfig,
    init: &RealPlane,
    reference: Option<&RealPlane>,
) -> Result<SolveReport> {
    let reg = regularizers().create(&cfg.regularizer)?;
    let est = estimators().create(&cfg.estimator)?;
    sr_solve_with(problem, cfg, init, reg.as_ref(), est.as_ref(), reference)
}

pub fn sr_solve_with(
    problem: &SrProblem,
    cfg: &SrConfig,
    init: &RealPlane,
    regularizer: &dyn Regularizer,
    estimator: &dyn DataEstimator,
    reference: Option<&RealPlane>,
) -> Result<SolveReport> {
    if !(cfg.beta > 0.0) || !(cfg.lambda >= 0.0) || !(cfg.eta > 0.0) {
        return Err(Error::config("solver needs beta > 0, lambda >= 0, eta > 0"));
    }
    let (w, h) = (problem.width, problem.height);
    if init.width() != w || init.height() != h {
        return Err(Error::dim(format!(
            "initial estimate is {}x{}, target is {w}x{h}",
            init.width(),
            init.height()
        )));
    }
    if let Some(r) = reference {
        if !r.same_dims(init) {
            return Err(Error::dim("reference differs from the target size"));
        }
    }
    let mut x = init.clone();
    let mut errors = Vec::new();
    let mut objectives = Vec::new();
    let mut psnr = Vec::new();
    let mut converged = false;
    let mut terms = Vec::with_capacity(problem.observations.len());
    for iteration in 0..cfg.max_iters {
        terms.clear();
        let mut objective = 0.0;
        for obs in &problem.observations {
            let mut resid = obs.op.forward(&x)?;
            for (r, y) in resid.as_mut_slice().iter_mut().zip(obs.plane.as_slice()) {
                objective += (*r - y).abs();
                *r = sign(*r - y);
            }
            terms.push(obs.op.adjoint(&resid, w, h)?);
        }
        objectives.push(objective);
        let mut step = estimator.combine(&terms);
        if cfg.lambda > 0.0 {
            step.axpy(cfg.lambda, &regularizer.gradient(&x));
        }
        let norm = x.norm();
        x.axpy(-cfg.beta, &step);
        let e = if norm == 0.0 { 0.0 } else { cfg.beta * step.norm() / norm };
        if !x.is_finite() || !e.is_finite() {
            return Err(Error::SolverDivergence { iteration });
        }
        errors.push(e);
        if let Some(r) = reference {
            psnr.push(psnr_real(&x, r));
        }
        if norm == 0.0 || e < cfg.eta {
            converged = true;
            break;
        }
    }
    let final_objective = problem.data_objective(&x)?;
    Ok(SolveReport {
        iterations: errors.len(),
        errors,
        objectives,
        final_objective,
        psnr,
        converged,
        estimate: x,
    })
}

/// Result of restoring one channel.
#[derive(Clone, Debug)]
pub struct ChannelResult {
    pub estimate: RealPlane,
    pub report: Option<SolveReport>,
    pub coverage_warning: bool,
}

pub trait Reconstructor: Send + Sync {
    fn name(&self) -> &'static str;

    fn reconstruct(
        &self,
        problem: &SrProblem,
        cfg: &SrConfig,
        reference: Option<&RealPlane>,
    ) -> Result<ChannelResult>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CiirReconstructor;

impl Reconstructor for CiirReconstructor {
    fn name(&self) -> &'static str {
        "ciir"
    }

    fn reconstruct(&self, problem: &SrProblem, _: &SrConfig, _: Option<&RealPlane>) -> Result<ChannelResult> {
        let out = problem.ciir()?;
        Ok(ChannelResult {
            estimate: out.plane,
            report: None,
            coverage_warning: out.coverage_warning,
        })
    }
}

/// Robust solver started from the CIIR estimate.
#[derive(Clone, Copy, Debug, Default)]
pub struct SrReconstructor;

impl Reconstructor for SrReconstructor {
    fn name(&self) -> &'static str {
        "sr"
    }

    fn reconstruct(
        &self,
        problem: &SrProblem,
        cfg: &SrConfig,
        reference: Option<&RealPlane>,
    ) -> Result<ChannelResult> {
        let init = problem.ciir()?;
        let report = sr_solve_traced(problem, cfg, &init.plane, reference)?;
        Ok(ChannelResult {
            estimate: report.estimate.clone(),
            report: Some(report),
            coverage_warning: init.coverage_warning,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ColorReconstruction {
    pub image: ColorImage,
    /// Indexed by [`Channel::index`].
    pub channels: Vec<ChannelResult>,
}

pub fn reconstruct_color(sia: &SubImageArray, cfg: &SrConfig) -> Result<ColorImage> {
    Ok(reconstruct_color_with(sia, cfg, None)?.image)
}

/// Restore all three channels concurrently with the reconstructor named in
/// `cfg.method`; `reference` only feeds the per-iteration PSNR trace.
pub fn reconstruct_color_with(
    sia: &SubImageArray,
    cfg: &SrConfig,
    reference: Option<&ColorImage>,
) -> Result<ColorReconstruction> {
    reconstruct_color_threads(sia, cfg, reference, Channel::ALL.len())
}

/// As [`reconstruct_color_with`], running at most `threads` channels at once.
pub fn reconstruct_color_threads(
    sia: &SubImageArray,
    cfg: &SrConfig,
    reference: Option<&ColorImage>,
    threads: usize,
) -> Result<ColorReconstruction> {
    cfg.validate()?;
    let problems = Channel::ALL
        .iter()
        .map(|&c| SrProblem::from_sia(sia, c))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<Option<RealPlane>> = Channel::ALL
        .iter()
        .map(|&c| reference.map(|r| r.plane(c).to_real()))
        .collect();
    let jobs: Vec<_> = problems.iter().zip(&refs).collect();
    let mut results: Vec<Result<ChannelResult>> = Vec::with_capacity(jobs.len());
    for batch in jobs.chunks(threads.max(1)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&(p, r)| {
                    s.spawn(move || {
                        let method = reconstructors().create(&cfg.method)?;
                        method.reconstruct(p, cfg, r.as_ref())
                    })
                })
                .collect();
            results.extend(handles.into_iter().map(|h| h.join().expect("channel solver panicked")));
        });
    }
    let channels = results.into_iter().collect::<Result<Vec<_>>>()?;
    let [r, g, b]: [GrayPlane; 3] = std::array::from_fn(|c| channels[c].estimate.quantize());
    Ok(ColorReconstruction {
        image: ColorImage::from_planes(r, g, b)?,
        channels,
    })
}
