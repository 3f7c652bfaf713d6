#![allow(dead_code)]

use monoseal::ca::{is_maximal, CaRuleVector, CaState};
use monoseal::cipher::{CipherKey, CombineScheme};
use monoseal::hyperchaos::HyperchaosKey;
use monoseal::operator::{ObservationOp, Psf, Shift};
use monoseal::sr::{Observation, SrProblem};
use monoseal::{GrayPlane, RealPlane};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn random_maximal_rules(rng: &mut impl Rng) -> CaRuleVector {
    loop {
        let d: Vec<bool> = (0..8).map(|_| rng.random()).collect();
        let rules = CaRuleVector::from_diagonal(&d).unwrap();
        if is_maximal(&rules).unwrap() {
            return rules;
        }
    }
}

pub fn random_seed(rng: &mut impl Rng) -> CaState {
    CaState::from_byte(rng.random_range(1..=255u8))
}

pub fn random_chaos(rng: &mut impl Rng) -> HyperchaosKey {
    HyperchaosKey::default().with_initial_state(std::array::from_fn(|_| rng.random_range(-2.0..2.0)))
}

pub fn random_key(rng: &mut impl Rng) -> CipherKey {
    CipherKey {
        chaos: random_chaos(rng),
        fx_rules: random_maximal_rules(rng),
        fy_rules: random_maximal_rules(rng),
        fx_seed: random_seed(rng),
        fy_seed: random_seed(rng),
        combine: if rng.random() {
            CombineScheme::Interleave
        } else {
            CombineScheme::Concatenate
        },
        selection_offset: rng.random_range(0..255),
    }
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> GrayPlane {
    GrayPlane::from_fn(w, h, |_, _| rng.random())
}

/// 16x16 ground truth: a diagonal step edge, a bright bar and a dark dot.
pub fn sr_truth() -> RealPlane {
    RealPlane::from_fn(16, 16, |i, j| {
        let edge = if i + j < 16 { 50.0 } else { 200.0 };
        let bar = if (4..7).contains(&j) { 60.0 } else { 0.0 };
        let dot = if (10..12).contains(&i) && (3..5).contains(&j) { -40.0 } else { 0.0 };
        edge + bar + dot
    })
}

/// Four observations at decimation 2 with the four integer phase shifts and
/// a binomial blur, quantized to 8 bits. With `salt > 0`, that fraction of
/// the second observation's pixels is replaced by 0 or 255.
pub fn sr_problem(x: &RealPlane, sigma: f64, salt: f64, rng: &mut impl Rng) -> SrProblem {
    let obs = (0..4)
        .map(|k| {
            let op = ObservationOp::new(2, Psf::binomial3(), Shift::new((k % 2) as f64, (k / 2) as f64)).unwrap();
            let mut y = op.forward(x).unwrap();
            if sigma > 0.0 {
                let n = Normal::new(0.0, sigma).unwrap();
                for v in y.as_mut_slice() {
                    *v = (*v + n.sample(rng)).round().clamp(0.0, 255.0);
                }
            } else {
                for v in y.as_mut_slice() {
                    *v = v.round();
                }
            }
            if salt > 0.0 && k == 1 {
                for v in y.as_mut_slice() {
                    if rng.random::<f64>() < salt {
                        *v = if rng.random() { 255.0 } else { 0.0 };
                    }
                }
            }
            Observation { plane: y, op }
        })
        .collect();
    SrProblem::new(obs, x.width(), x.height()).unwrap()
}

/// PSNR of a real estimate after output quantization.
pub fn psnr_real(estimate: &RealPlane, truth: &RealPlane) -> f64 {
    let mse = estimate
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a.round().clamp(0.0, 255.0) - b).powi(2))
        .sum::<f64>()
        / estimate.len() as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}
