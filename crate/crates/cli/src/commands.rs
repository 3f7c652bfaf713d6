//! One function per subcommand. Every artifact lands in the output
//! directory under a fixed name unless an explicit path is given.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use monoseal::analysis::{
    autocorrelation, cipher_report, histogram, histograms_csv, key_sensitivity, npcr, occlude, psnr_color,
    bench_scaling, MetricReport, Perturbation,
};
use monoseal::ca::{is_maximal, CaRuleVector, CaState};
use monoseal::capture::{demosaic, generate_sia, mosaic, Layout, SubImageArray};
use monoseal::cipher::{decrypt as decrypt_plane, encrypt as encrypt_plane, CipherKey, CipherText};
use monoseal::hyperchaos::integrate;
use monoseal::sr::{reconstruct_color_threads, ColorReconstruction};
use monoseal::{pnm, scene, Channel, ColorImage, Error, GrayPlane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SceneKind;
use crate::exit::Rejection;
use crate::{Context, KeygenArgs, Metric};

/// Trajectory steps checked by keygen, and the amplitude they must stay under.
const BOUND_CHECK_STEPS: usize = 100_000;
const TRAJECTORY_BOUND: f64 = 1e4;

fn target(ctx: &Context, explicit: Option<&Path>, name: &str) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join(name))
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    announce(path);
    Ok(())
}

fn write_pgm(path: &Path, plane: &GrayPlane) -> anyhow::Result<()> {
    pnm::write_pgm(path, plane).with_context(|| format!("writing {}", path.display()))?;
    announce(path);
    Ok(())
}

fn write_ppm(path: &Path, img: &ColorImage) -> anyhow::Result<()> {
    pnm::write_ppm(path, img).with_context(|| format!("writing {}", path.display()))?;
    announce(path);
    Ok(())
}

fn read_pgm(path: &Path) -> anyhow::Result<GrayPlane> {
    pnm::read_pgm(path).with_context(|| format!("reading {}", path.display()))
}

fn read_ppm(path: &Path) -> anyhow::Result<ColorImage> {
    pnm::read_ppm(path).with_context(|| format!("reading {}", path.display()))
}

fn read_cipher(path: &Path) -> anyhow::Result<CipherText> {
    CipherText::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_layout(path: &Path) -> anyhow::Result<Layout> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Layout::from_text(&text)?)
}

/// Reject keys whose registers are not maximal or whose chaotic
/// trajectory diverges or leaves [`TRAJECTORY_BOUND`].
pub fn check_key(key: &CipherKey) -> Result<(), Rejection> {
    key.validate().map_err(Rejection::key)?;
    let traj = integrate(&key.chaos, key.chaos.burn_in + BOUND_CHECK_STEPS).map_err(Rejection::key)?;
    let peak = traj
        .samples()
        .iter()
        .flat_map(|s| s.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > TRAJECTORY_BOUND {
        return Err(Rejection::Key(format!(
            "chaotic trajectory reaches {peak:.3e}, above the bound {TRAJECTORY_BOUND:.0e}"
        )));
    }
    Ok(())
}

fn load_key(path: &Path) -> anyhow::Result<CipherKey> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let key = CipherKey::from_text(&text).map_err(Rejection::key)?;
    check_key(&key)?;
    Ok(key)
}

fn source_image(ctx: &Context, input: Option<&Path>, kind: Option<SceneKind>) -> anyhow::Result<ColorImage> {
    if let Some(path) = input.or(ctx.cfg.paths.source.as_deref()) {
        return read_ppm(path);
    }
    let (w, h) = ctx.cfg.scene_dims();
    Ok(match kind.unwrap_or(ctx.cfg.scene.kind) {
        SceneKind::Chart => scene::test_chart(w, h),
        SceneKind::Natural => scene::natural_scene(w, h, ctx.cfg.seed),
    })
}

fn capture_stage(ctx: &Context, src: &ColorImage) -> anyhow::Result<(SubImageArray, GrayPlane)> {
    let sia = generate_sia(src, &ctx.cfg.array()?, ctx.cfg.seed)?;
    let (plane, layout) = mosaic(&sia)?;
    write_pgm(&ctx.out.join("sia.pgm"), &plane)?;
    write_text(&ctx.out.join("layout.toml"), &layout.to_text())?;
    Ok((sia, plane))
}

pub fn capture(ctx: &Context, input: Option<&Path>, kind: Option<SceneKind>) -> anyhow::Result<()> {
    let src = source_image(ctx, input, kind)?;
    if input.is_none() && ctx.cfg.paths.source.is_none() {
        write_ppm(&ctx.out.join("source.ppm"), &src)?;
    }
    capture_stage(ctx, &src)?;
    Ok(())
}

fn random_maximal_rules(rng: &mut ChaCha8Rng) -> anyhow::Result<CaRuleVector> {
    loop {
        let d: Vec<bool> = (0..8).map(|_| rng.random()).collect();
        let rules = CaRuleVector::from_diagonal(&d)?;
        if is_maximal(&rules)? {
            return Ok(rules);
        }
    }
}

pub fn build_key(ctx: &Context, a: &KeygenArgs) -> anyhow::Result<CipherKey> {
    let mut key = CipherKey::default();
    if a.random {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
        key.fx_rules = random_maximal_rules(&mut rng)?;
        key.fy_rules = random_maximal_rules(&mut rng)?;
        key.fx_seed = CaState::from_byte(rng.random_range(1..=255));
        key.fy_seed = CaState::from_byte(rng.random_range(1..=255));
        key.chaos = key.chaos.with_initial_state(std::array::from_fn(|_| rng.random_range(-2.0..2.0)));
        key.selection_offset = rng.random_range(0..255);
    }
    let rules = |s: &str| s.parse::<CaRuleVector>().map_err(Rejection::key);
    let state = |s: &str| s.parse::<CaState>().map_err(Rejection::key);
    if let Some(s) = &a.fx_rules {
        key.fx_rules = rules(s)?;
    }
    if let Some(s) = &a.fy_rules {
        key.fy_rules = rules(s)?;
    }
    if let Some(s) = &a.fx_seed {
        key.fx_seed = state(s)?;
    }
    if let Some(s) = &a.fy_seed {
        key.fy_seed = state(s)?;
    }
    if let Some(c) = a.combine {
        key.combine = c;
    }
    if let Some(o) = a.offset {
        key.selection_offset = o;
    }
    if let Some(v) = &a.chaos_init {
        let s: [f64; 4] = v
            .as_slice()
            .try_into()
            .map_err(|_| Rejection::Key(format!("chaos state needs 4 values, got {}", v.len())))?;
        key.chaos = key.chaos.with_initial_state(s);
    }
    check_key(&key)?;
    Ok(key)
}

pub fn keygen(ctx: &Context, a: &KeygenArgs) -> anyhow::Result<()> {
    let key = build_key(ctx, a)?;
    write_text(&target(ctx, a.output.as_deref(), "key.toml"), &key.to_text())
}

pub fn encrypt(ctx: &Context, input: &Path, key: &Path, output: Option<&Path>) -> anyhow::Result<()> {
    let key = load_key(key)?;
    let plain = read_pgm(input)?;
    let path = target(ctx, output, "cipher.bin");
    encrypt_plane(&plain, &key)?
        .write(&path)
        .with_context(|| format!("writing {}", path.display()))?;
    announce(&path);
    Ok(())
}

pub fn decrypt(ctx: &Context, input: &Path, key: &Path, output: Option<&Path>) -> anyhow::Result<()> {
    let key = load_key(key)?;
    let cipher = read_cipher(input)?;
    write_pgm(&target(ctx, output, "decrypted.pgm"), &decrypt_plane(&cipher, &key)?)
}

fn restore(ctx: &Context, sia: &SubImageArray, method: &str, reference: Option<&ColorImage>) -> anyhow::Result<ColorReconstruction> {
    let mut cfg = ctx.cfg.sr.clone();
    cfg.method = method.into();
    let rec = reconstruct_color_threads(sia, &cfg, reference, ctx.threads)?;
    if rec.channels.iter().any(|c| c.coverage_warning) {
        eprintln!("warning: some output pixels received no observation in the baseline estimate");
    }
    Ok(rec)
}

fn write_traces(ctx: &Context, rec: &ColorReconstruction, prefix: &str) -> anyhow::Result<()> {
    for c in Channel::ALL {
        if let Some(report) = &rec.channels[c.index()].report {
            let letter = c.letter().to_ascii_lowercase();
            write_text(&ctx.out.join(format!("{prefix}_{letter}.csv")), &report.to_csv())?;
        }
    }
    Ok(())
}

pub fn reconstruct(
    ctx: &Context,
    input: &Path,
    layout: &Path,
    reference: Option<&Path>,
    ciir_only: bool,
    output: Option<&Path>,
) -> anyhow::Result<()> {
    let sia = demosaic(&read_pgm(input)?, &read_layout(layout)?)?;
    let reference = reference.map(read_ppm).transpose()?;
    let method = if ciir_only { "ciir" } else { ctx.cfg.sr.method.as_str() };
    let rec = restore(ctx, &sia, method, reference.as_ref())?;
    write_ppm(&target(ctx, output, "reconstruction.ppm"), &rec.image)?;
    write_traces(ctx, &rec, "iterations")?;
    if let Some(r) = &reference {
        let mut m = MetricReport::new();
        m.push(format!("psnr_{method}"), psnr_color(&rec.image, r)?);
        write_text(&ctx.out.join("reconstruct.csv"), &m.to_csv())?;
    }
    Ok(())
}

fn perturbations(delta: f64) -> Vec<(String, Perturbation)> {
    let mut out = Vec::new();
    for c in 0..8 {
        out.push((format!("fx_rule_cell_{}", c + 1), Perturbation::FxRuleCell(c)));
        out.push((format!("fy_rule_cell_{}", c + 1), Perturbation::FyRuleCell(c)));
    }
    for b in 0..8 {
        out.push((format!("fx_seed_bit_{b}"), Perturbation::FxSeedBit(b)));
        out.push((format!("fy_seed_bit_{b}"), Perturbation::FySeedBit(b)));
    }
    for (component, name) in ["x0", "y0", "z0", "w0"].into_iter().enumerate() {
        out.push((format!("chaos_{name}"), Perturbation::ChaosInitial { component, delta }));
    }
    out
}

fn sensitivity_csv(plain: &GrayPlane, key: &CipherKey, delta: f64) -> anyhow::Result<String> {
    let mut csv = String::from("perturbation,npcr,uaci,correlation,psnr\n");
    for (name, p) in perturbations(delta) {
        let r = key_sensitivity(plain, key, p)?;
        let v = |m: &str| r.get(m).unwrap_or(f64::NAN);
        csv.push_str(&format!(
            "{name},{},{},{},{}\n",
            v("npcr"),
            v("uaci"),
            v("correlation"),
            v("psnr")
        ));
    }
    Ok(csv)
}

fn analyze_planes(
    ctx: &Context,
    plain: &GrayPlane,
    cipher: &GrayPlane,
    key: Option<&CipherKey>,
    restored: Option<&ColorImage>,
    metrics: &[Metric],
) -> anyhow::Result<()> {
    if metrics.contains(&Metric::Stats) {
        write_text(&ctx.out.join("report.csv"), &cipher_report(plain, cipher)?.to_csv())?;
    }
    if metrics.contains(&Metric::Histogram) {
        let mut named = vec![("plain".to_string(), histogram(plain)), ("cipher".to_string(), histogram(cipher))];
        if let Some(img) = restored {
            for c in Channel::ALL {
                named.push((format!("restored_{}", c.letter().to_ascii_lowercase()), histogram(img.plane(c))));
            }
        }
        let refs: Vec<(&str, &_)> = named.iter().map(|(n, h)| (n.as_str(), h)).collect();
        write_text(&ctx.out.join("histograms.csv"), &histograms_csv(&refs))?;
    }
    if metrics.contains(&Metric::Autocorr) {
        for (name, img) in [("plain", plain), ("cipher", cipher)] {
            match autocorrelation(img) {
                Ok(surface) => {
                    write_pgm(&ctx.out.join(format!("autocorr_{name}.pgm")), &surface.to_heat_map())?;
                    write_text(&ctx.out.join(format!("autocorr_{name}.txt")), &surface.scale_annotation())?;
                }
                Err(Error::DegenerateInput(m)) => eprintln!("warning: skipping {name} autocorrelation: {m}"),
                Err(e) => return Err(e.into()),
            }
        }
    }
    if metrics.contains(&Metric::Sensitivity) {
        match key {
            Some(k) => write_text(
                &ctx.out.join("sensitivity.csv"),
                &sensitivity_csv(plain, k, ctx.cfg.analysis.chaos_delta)?,
            )?,
            None => eprintln!("warning: sensitivity rows need --key; skipped"),
        }
    }
    Ok(())
}

pub fn analyze(
    ctx: &Context,
    plain: &Path,
    cipher: &Path,
    key: Option<&Path>,
    restored: Option<&Path>,
    metrics: &[Metric],
) -> anyhow::Result<()> {
    let plain = read_pgm(plain)?;
    let cipher = read_cipher(cipher)?.as_plane();
    if !plain.same_dims(&cipher) {
        bail!(Rejection::Config("plain and cipher images differ in size".into()));
    }
    let key = key.map(load_key).transpose()?;
    let restored = restored.map(read_ppm).transpose()?;
    analyze_planes(ctx, &plain, &cipher, key.as_ref(), restored.as_ref(), metrics)
}

pub fn bench(ctx: &Context, sizes: &[(usize, usize)], repeats: usize, key: Option<&Path>) -> anyhow::Result<()> {
    let key = match key.or(ctx.cfg.paths.key.as_deref()) {
        Some(p) => load_key(p)?,
        None => CipherKey::default(),
    };
    let report = bench_scaling(sizes, &key, repeats, ctx.cfg.seed)?;
    for r in &report.rows {
        println!("{}x{}: {:.4} s", r.width, r.height, r.seconds);
    }
    write_text(&ctx.out.join("scaling.csv"), &report.to_csv())
}

pub fn run_all(ctx: &Context) -> anyhow::Result<()> {
    let cfg = &ctx.cfg;
    let src = source_image(ctx, None, None)?;
    write_ppm(&ctx.out.join("source.ppm"), &src)?;
    let (sia, plain) = capture_stage(ctx, &src)?;
    let layout = mosaic(&sia)?.1;

    let key = match &cfg.paths.key {
        Some(p) => load_key(p)?,
        None => {
            let k = CipherKey::default();
            check_key(&k)?;
            k
        }
    };
    write_text(&ctx.out.join("key.toml"), &key.to_text())?;

    let cipher = encrypt_plane(&plain, &key)?;
    let cipher_path = ctx.out.join("cipher.bin");
    cipher.write(&cipher_path)?;
    announce(&cipher_path);
    let decrypted = decrypt_plane(&cipher, &key)?;
    if decrypted != plain {
        bail!("decrypted mosaic differs from the captured mosaic");
    }
    write_pgm(&ctx.out.join("decrypted.pgm"), &decrypted)?;
    let restored_sia = demosaic(&decrypted, &layout)?;

    let ciir = restore(ctx, &restored_sia, "ciir", Some(&src))?;
    write_ppm(&ctx.out.join("ciir.ppm"), &ciir.image)?;
    let sr = restore(ctx, &restored_sia, &cfg.sr.method, Some(&src))?;
    write_ppm(&ctx.out.join("reconstruction.ppm"), &sr.image)?;
    write_traces(ctx, &sr, "iterations")?;

    analyze_planes(
        ctx,
        &plain,
        &cipher.as_plane(),
        Some(&key),
        Some(&sr.image),
        &[Metric::Stats, Metric::Histogram, Metric::Autocorr, Metric::Sensitivity],
    )?;

    let region = cfg.occlusion_region()?;
    let mut occ = String::from("fraction,region,sia_npcr,psnr_vs_clean,psnr_vs_source\n");
    for &f in &cfg.analysis.occlusion {
        let damaged = occlude(&cipher, f, region, cfg.seed)?;
        let mosaic_out = decrypt_plane(&damaged, &key)?;
        let rec = restore(ctx, &demosaic(&mosaic_out, &layout)?, &cfg.sr.method, None)?;
        let pct = (f * 100.0).round() as u32;
        write_ppm(&ctx.out.join(format!("occluded_{pct}.ppm")), &rec.image)?;
        occ.push_str(&format!(
            "{f},{},{},{},{}\n",
            region.name(),
            npcr(&plain, &mosaic_out)?,
            psnr_color(&rec.image, &sr.image)?,
            psnr_color(&rec.image, &src)?
        ));
    }
    write_text(&ctx.out.join("occlusion.csv"), &occ)?;

    let mut summary = MetricReport::new();
    summary.push("psnr_ciir", psnr_color(&ciir.image, &src)?);
    summary.push("psnr_sr", psnr_color(&sr.image, &src)?);
    for c in Channel::ALL {
        if let Some(r) = &sr.channels[c.index()].report {
            summary.push(format!("iterations_{}", c.letter().to_ascii_lowercase()), r.iterations as f64);
        }
    }
    write_text(&ctx.out.join("summary.csv"), &summary.to_csv())?;
    println!(
        "psnr: ciir {:.2} dB, sr {:.2} dB",
        summary.get("psnr_ciir").unwrap_or(f64::NAN),
        summary.get("psnr_sr").unwrap_or(f64::NAN)
    );
    Ok(())
}
