#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the criteria execute one at a time
//! (timings in criterion 11 are not disturbed) and the report is always
//! printed. Pass criterion numbers as arguments to run a subset.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use monoseal::analysis::{
    adjacent_correlation, bench_scaling, chi_square, histogram, key_sensitivity, occlude, psnr_color, Direction,
    OcclusionRegion, Perturbation, CHI_SQUARE_CRITICAL_1PCT,
};
use monoseal::ca::{characteristic_polynomial, is_maximal, step, CaRuleVector, CaState, Gf2Polynomial};
use monoseal::capture::{demosaic, generate_sia, mosaic, ArrayConfig};
use monoseal::cipher::{decrypt, encrypt, permutation_key, permute, CipherKey, CipherText, CombineScheme};
use monoseal::hyperchaos::{lyapunov_spectrum, HyperchaosKey, LyapunovOptions};
use monoseal::operator::{ObservationOp, Psf, Shift};
use monoseal::scene::{natural_scene, test_chart};
use monoseal::sr::{reconstruct_color, sr_solve, SrConfig};
use monoseal::{GrayPlane, RealPlane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// Frozen thresholds for the derived criteria.
const SR_GAIN_DB: f64 = 2.0;
const MEDIAN_MAX_LOSS_DB: f64 = 1.0;
const SALT_DENSITY: f64 = 0.5;
const T30_DB: f64 = 19.0;
const T70_DB: f64 = 11.0;
const SCALING_MAX_RATIO: f64 = 12.0;
const COMPARISONS_PER_L_LOG_L: f64 = 2.0;

fn c1_ca_exactness() -> Outcome {
    let rules: CaRuleVector = "150,90,150,90,90,90,150,90".parse().unwrap();
    let expected = Gf2Polynomial::from_exponents(&[8, 7, 5, 3, 0]);
    let t = Instant::now();
    let p = characteristic_polynomial(&rules).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure!(p == expected, "got {p}, expected {expected}");
    ensure!(elapsed.as_secs_f64() < 1e-3, "took {elapsed:?}");
    Ok(format!("{p} in {elapsed:?}"))
}

fn cycle_period(rules: &CaRuleVector) -> usize {
    let seed = CaState::from_u64(1, rules.len());
    let mut s = step(&seed, rules).unwrap();
    let mut k = 1;
    while s != seed && k <= 256 {
        s = step(&s, rules).unwrap();
        k += 1;
    }
    k
}

fn c2_maximality_oracle() -> Outcome {
    let t = Instant::now();
    let mut maximal = 0;
    for d in 0..256u64 {
        let rules = CaRuleVector::from_diagonal(CaState::from_u64(d, 8).bits()).unwrap();
        let by_poly = is_maximal(&rules).map_err(|e| e.to_string())?;
        let by_walk = cycle_period(&rules) == 255;
        ensure!(by_poly == by_walk, "disagreement on {rules}");
        maximal += by_poly as usize;
    }
    let elapsed = t.elapsed();
    ensure!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    Ok(format!("256 vectors agree ({maximal} maximal) in {elapsed:?}"))
}

fn c3_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let keys: Vec<CipherKey> = (0..20).map(|_| common::random_key(&mut rng)).collect();
    let sizes = [(1, 1), (7, 13), (255, 255), (800, 600)];
    for n in 0..100 {
        let (w, h) = sizes[n % sizes.len()];
        let img = common::random_image(&mut rng, w, h);
        let key = &keys[n % keys.len()];
        let c = encrypt(&img, key).map_err(|e| e.to_string())?;
        let back = decrypt(&c, key).map_err(|e| e.to_string())?;
        ensure!(back == img, "image {n} ({w}x{h}) did not round-trip");
    }
    Ok("100 images x 20 keys bit-exact".into())
}

fn c4_permutation_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 0..10_000 {
        let chaos = common::random_chaos(&mut rng);
        let len = rng.random_range(1..=10_000usize);
        let scheme = if rng.random() {
            CombineScheme::Interleave
        } else {
            CombineScheme::Concatenate
        };
        let key = permutation_key(&chaos, len, scheme).map_err(|e| format!("case {n}: {e}"))?;
        let mut seen = vec![false; len];
        for &i in key.order() {
            let i = i as usize;
            ensure!(i < len && !seen[i], "case {n}: not a permutation");
            seen[i] = true;
        }
        let plain: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let shuffled = permute(&plain, &key).map_err(|e| e.to_string())?;
        let hist = |v: &[u8]| histogram(&GrayPlane::from_vec(v.len(), 1, v.to_vec()).unwrap());
        ensure!(hist(&plain) == hist(&shuffled), "case {n}: histogram changed");
    }
    Ok("10000 keys/lengths bijective, histograms preserved".into())
}

fn c5_lyapunov() -> Outcome {
    let key = HyperchaosKey::default();
    let t = Instant::now();
    let l = lyapunov_spectrum(&key, &LyapunovOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let reference = [0.3381, 0.1586, 0.0, -15.1752];
    let tol = [0.05, 0.05, 0.02, 0.05];
    for i in 0..4 {
        ensure!(
            (l[i] - reference[i]).abs() <= tol[i],
            "exponent {} = {:.4}, expected {} +/- {}",
            i + 1,
            l[i],
            reference[i],
            tol[i]
        );
    }
    let sum: f64 = l.iter().sum();
    let divergence = key.r - key.a - key.b - 1.0;
    ensure!((sum - divergence).abs() <= 0.1, "sum {sum:.4} vs {divergence:.4}");
    ensure!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    Ok(format!(
        "({:.4}, {:.4}, {:.4}, {:.4}), sum {sum:.4}, {elapsed:.1?}",
        l[0], l[1], l[2], l[3]
    ))
}

fn natural_mosaic() -> GrayPlane {
    let scene = natural_scene(400, 300, 1);
    let sia = generate_sia(&scene, &ArrayConfig::default_4x4(), 1).unwrap();
    mosaic(&sia).unwrap().0
}

fn c6_diffusion() -> Outcome {
    let plain = natural_mosaic();
    ensure!((plain.width(), plain.height()) == (800, 600), "mosaic is not 800x600");
    let cipher = encrypt(&plain, &CipherKey::default()).map_err(|e| e.to_string())?.as_plane();
    let chi = chi_square(&histogram(&cipher));
    ensure!(chi < CHI_SQUARE_CRITICAL_1PCT, "chi-square {chi:.2}");
    let mut detail = format!("chi-square {chi:.2}");
    for dir in [Direction::Horizontal, Direction::Vertical] {
        let r = adjacent_correlation(&cipher, dir).map_err(|e| e.to_string())?;
        ensure!(r.abs() < 0.05, "{} correlation {r:.4}", dir.name());
        detail += &format!(", {} r {r:.4}", dir.name());
    }
    Ok(detail)
}

fn c7_key_sensitivity() -> Outcome {
    let plain = natural_mosaic();
    let key = CipherKey::default();
    let npcr = |p| key_sensitivity(&plain, &key, p).map(|r| r.get("npcr").unwrap());
    let mut groups = Vec::new();
    let mut failures = Vec::new();
    for (label, perturbations) in [
        ("f_x rule flips", (0..8).map(Perturbation::FxRuleCell).collect::<Vec<_>>()),
        ("f_y rule flips", (0..8).map(Perturbation::FyRuleCell).collect()),
        (
            "chaos initial +1e-10",
            (0..4)
                .map(|component| Perturbation::ChaosInitial { component, delta: 1e-10 })
                .collect(),
        ),
    ] {
        let mut worst = f64::INFINITY;
        for p in perturbations {
            let v = npcr(p).map_err(|e| e.to_string())?;
            if v <= 99.0 {
                failures.push(format!("{p:?} {v:.3}%"));
            }
            worst = worst.min(v);
        }
        groups.push(format!("{label} min NPCR {worst:.3}%"));
    }
    ensure!(
        failures.is_empty(),
        "{}; at or below 99%: {}",
        groups.join(", "),
        failures.join(", ")
    );
    Ok(groups.join(", "))
}

fn c8_sr_superiority() -> Outcome {
    let truth = common::sr_truth();
    let mut detail = Vec::new();
    for sigma in [0.0, 2.0] {
        let mut loss = [0.0; 2];
        for (e, estimator) in ["sign_sum", "scaled_median"].iter().enumerate() {
            let cfg = SrConfig {
                estimator: estimator.to_string(),
                ..SrConfig::default()
            };
            let clean = common::sr_problem(&truth, sigma, 0.0, &mut ChaCha8Rng::seed_from_u64(7));
            let dirty = common::sr_problem(&truth, sigma, SALT_DENSITY, &mut ChaCha8Rng::seed_from_u64(7));
            let ciir = clean.ciir().unwrap().plane;
            let ciir_psnr = common::psnr_real(&ciir, &truth);
            let sr_clean = sr_solve(&clean, &cfg, &ciir).map_err(|e| e.to_string())?;
            let sr_dirty = sr_solve(&dirty, &cfg, &dirty.ciir().unwrap().plane).map_err(|e| e.to_string())?;
            let (p_clean, p_dirty) = (
                common::psnr_real(&sr_clean.estimate, &truth),
                common::psnr_real(&sr_dirty.estimate, &truth),
            );
            ensure!(
                p_clean >= ciir_psnr + SR_GAIN_DB,
                "sigma {sigma} {estimator}: SR {p_clean:.2} dB vs CIIR {ciir_psnr:.2} dB"
            );
            loss[e] = p_clean - p_dirty;
            detail.push(format!(
                "s{sigma} {estimator}: +{:.2} dB, loss {:.2} dB",
                p_clean - ciir_psnr,
                loss[e]
            ));
        }
        ensure!(
            loss[1] < MEDIAN_MAX_LOSS_DB,
            "sigma {sigma}: median loses {:.2} dB",
            loss[1]
        );
        ensure!(
            loss[0] > loss[1],
            "sigma {sigma}: sign_sum loses {:.2} dB, median {:.2} dB",
            loss[0],
            loss[1]
        );
    }
    Ok(detail.join("; "))
}

fn random_op(rng: &mut impl Rng) -> ObservationOp {
    let gamma = rng.random_range(1..=3);
    let (rows, cols) = (rng.random_range(1..=5), rng.random_range(1..=5));
    let weights: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let psf = Psf::new(rows, cols, weights.iter().map(|w| w / total).collect()).unwrap();
    let shift = Shift::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    ObservationOp::new(gamma, psf, shift).unwrap()
}

fn c9_adjoint() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for n in 0..100 {
        let op = random_op(&mut rng);
        let (w, h) = (op.gamma * rng.random_range(2..=8), op.gamma * rng.random_range(2..=8));
        let (w, h) = (w.max(5), h.max(5));
        let (w, h) = (w.next_multiple_of(op.gamma), h.next_multiple_of(op.gamma));
        let (ow, oh) = op.output_dims(w, h).map_err(|e| e.to_string())?;
        let x = RealPlane::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0));
        let y = RealPlane::from_fn(ow, oh, |_, _| rng.random_range(-1.0..1.0));
        let lhs = op.forward(&x).unwrap().dot(&y);
        let rhs = x.dot(&op.adjoint(&y, w, h).unwrap());
        let rel = (lhs - rhs).abs() / (x.norm() * y.norm());
        ensure!(rel < 1e-9, "config {n}: relative gap {rel:e}");
        worst = worst.max(rel);
    }
    Ok(format!("100 configurations, worst relative gap {worst:.2e}"))
}

fn c10_occlusion() -> Outcome {
    let scene = test_chart(64, 64);
    let key = CipherKey::default();
    let cfg = SrConfig::default();
    let sia = generate_sia(&scene, &ArrayConfig::default_4x4(), 1).map_err(|e| e.to_string())?;
    let (plain, layout) = mosaic(&sia).map_err(|e| e.to_string())?;
    let cipher = encrypt(&plain, &key).map_err(|e| e.to_string())?;
    let restore = |c: &CipherText| -> monoseal::Result<_> { reconstruct_color(&demosaic(&decrypt(c, &key)?, &layout)?, &cfg) };
    let clean = restore(&cipher).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for (fraction, threshold) in [(0.3, T30_DB), (0.7, T70_DB)] {
        let occluded = occlude(&cipher, fraction, OcclusionRegion::BlockTopLeft, 0).map_err(|e| e.to_string())?;
        let rec = restore(&occluded).map_err(|e| e.to_string())?;
        let p = psnr_color(&rec, &clean).map_err(|e| e.to_string())?;
        ensure!(p >= threshold, "{fraction}: {p:.2} dB below {threshold} dB");
        detail.push(format!("{:.0}%: {p:.2} dB (>= {threshold})", fraction * 100.0));
    }
    Ok(detail.join(", "))
}

fn c11_scaling() -> Outcome {
    let report = bench_scaling(&[(800, 600), (2400, 1800)], &CipherKey::default(), 3, 11).map_err(|e| e.to_string())?;
    let ratio = report.rows[1].seconds / report.rows[0].seconds;
    ensure!(ratio <= SCALING_MAX_RATIO, "time ratio {ratio:.2}");
    for row in &report.rows {
        let l = (row.width * row.height) as u64;
        ensure!(row.counts.byte_touches == 4 * l, "{} byte touches for L = {l}", row.counts.byte_touches);
        let bound = COMPARISONS_PER_L_LOG_L * l as f64 * (l as f64).log2();
        ensure!(
            (row.counts.comparisons as f64) <= bound,
            "{} comparisons exceed {bound:.0}",
            row.counts.comparisons
        );
    }
    Ok(format!(
        "time ratio {ratio:.2}, byte touches = 4L, comparisons {:.3} L log2 L",
        report.rows[1].counts.comparisons as f64 / (4_320_000.0 * 4_320_000f64.log2())
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("CA exactness", c1_ca_exactness),
        ("maximality oracle equivalence", c2_maximality_oracle),
        ("cipher round trip", c3_round_trip),
        ("permutation bijectivity fuzz", c4_permutation_fuzz),
        ("hyperchaos Lyapunov spectrum", c5_lyapunov),
        ("diffusion quality", c6_diffusion),
        ("key sensitivity", c7_key_sensitivity),
        ("SR superiority", c8_sr_superiority),
        ("adjoint identity", c9_adjoint),
        ("occlusion robustness", c10_occlusion),
        ("scaling", c11_scaling),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let n = n + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2} {name}: PASS ({detail})"),
            Err(reason) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({reason})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
