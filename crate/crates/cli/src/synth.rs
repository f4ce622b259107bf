//! Synthetic exposure stacks with known ground-truth displacements.

use std::fs;
use std::path::{Path, PathBuf};

use mtb_align::{cumulative_offsets, shift_rgb, RgbImage, ShiftOffset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io::{decode_image, encode_image, ImageFormat};

pub const MIN_BASE_SIDE: usize = 64;
pub const MIN_OVERLAP: f64 = 0.75;
pub const GAIN_RANGE: (f64, f64) = (0.5, 2.0);
pub const GAMMA_RANGE: (f64, f64) = (0.7, 1.4);

/// Simulated exposure change: `255 * (gain * v / 255)^(1 / gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exposure {
    pub gain: f64,
    pub gamma: f64,
}

impl Exposure {
    pub const IDENTITY: Exposure = Exposure {
        gain: 1.0,
        gamma: 1.0,
    };

    pub fn lut(&self) -> [u8; 256] {
        let mut lut = [0u8; 256];
        for (v, out) in lut.iter_mut().enumerate() {
            let x = self.gain * v as f64 / 255.0;
            *out = (255.0 * x.powf(1.0 / self.gamma)).round().clamp(0.0, 255.0) as u8;
        }
        lut
    }

    pub fn apply(&self, img: &RgbImage) -> RgbImage {
        let lut = self.lut();
        let data = img.data().iter().map(|&v| lut[v as usize]).collect();
        RgbImage::new(img.width(), img.height(), data).expect("same size")
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Exposure {
            gain: rng.gen_range(GAIN_RANGE.0..=GAIN_RANGE.1),
            gamma: rng.gen_range(GAMMA_RANGE.0..=GAMMA_RANGE.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftPlan {
    /// `count - 1` displacements between consecutive frames.
    Explicit(Vec<ShiftOffset>),
    /// Uniform in `[-max_shift, max_shift]` per axis, redrawn until the
    /// stack keeps enough overlap.
    Random { seed: u64, max_shift: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExposurePlan {
    Explicit(Vec<Exposure>),
    Random { seed: u64 },
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub base: PathBuf,
    pub count: usize,
    pub shifts: ShiftPlan,
    pub exposures: ExposurePlan,
}

/// Ground truth written next to a generated stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub base: String,
    pub count: usize,
    pub pairwise: Vec<[i32; 2]>,
    pub cumulative: Vec<[i32; 2]>,
    pub exposures: Vec<Exposure>,
    pub images: Vec<String>,
}

impl Manifest {
    pub fn cumulative_offsets(&self) -> Vec<ShiftOffset> {
        self.cumulative
            .iter()
            .map(|&[dx, dy]| ShiftOffset::new(dx, dy))
            .collect()
    }
}

/// Fraction of frame area shared by an image and a copy displaced by `o`.
pub fn overlap(width: usize, height: usize, o: ShiftOffset) -> f64 {
    let ow = (width as i64 - o.dx.unsigned_abs() as i64).max(0) as f64;
    let oh = (height as i64 - o.dy.unsigned_abs() as i64).max(0) as f64;
    ow * oh / (width * height) as f64
}

fn check_overlap(width: usize, height: usize, pairwise: &[ShiftOffset]) -> Result<(), CliError> {
    for (i, c) in cumulative_offsets(pairwise).iter().enumerate() {
        let f = overlap(width, height, *c);
        if f < MIN_OVERLAP {
            return Err(CliError::Usage(format!(
                "image {i} would be displaced by {c} and overlap image 0 by only {:.1}% (need {:.0}%)",
                f * 100.0,
                MIN_OVERLAP * 100.0
            )));
        }
    }
    Ok(())
}

/// Resolves a shift plan for a `width x height` stack of `count` frames.
pub fn plan_shifts(
    plan: &ShiftPlan,
    count: usize,
    width: usize,
    height: usize,
) -> Result<Vec<ShiftOffset>, CliError> {
    let shifts = match plan {
        ShiftPlan::Explicit(s) => {
            if s.len() + 1 != count {
                return Err(CliError::Usage(format!(
                    "{count} images need {} shifts, got {}",
                    count - 1,
                    s.len()
                )));
            }
            s.clone()
        }
        ShiftPlan::Random { seed, max_shift } => {
            let r = *max_shift as i32;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut attempt = 0;
            loop {
                let s: Vec<_> = (1..count)
                    .map(|_| ShiftOffset::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r)))
                    .collect();
                if check_overlap(width, height, &s).is_ok() {
                    break s;
                }
                attempt += 1;
                if attempt == 1000 {
                    return Err(CliError::Usage(format!(
                        "no random shifts within {max_shift} keep {:.0}% overlap for {count} images of {width}x{height}",
                        MIN_OVERLAP * 100.0
                    )));
                }
            }
        }
    };
    check_overlap(width, height, &shifts)?;
    Ok(shifts)
}

pub fn plan_exposures(plan: &ExposurePlan, count: usize) -> Result<Vec<Exposure>, CliError> {
    match plan {
        ExposurePlan::Identity => Ok(vec![Exposure::IDENTITY; count]),
        ExposurePlan::Random { seed } => {
            // Separate stream from the shifts so either can be pinned alone.
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
            Ok((0..count).map(|_| Exposure::random(&mut rng)).collect())
        }
        ExposurePlan::Explicit(e) => {
            if e.len() != count {
                return Err(CliError::Usage(format!(
                    "{count} images need {count} exposures, got {}",
                    e.len()
                )));
            }
            if let Some(bad) = e.iter().find(|e| {
                !(e.gain > 0.0 && e.gamma > 0.0) || !e.gain.is_finite() || !e.gamma.is_finite()
            }) {
                return Err(CliError::Usage(format!(
                    "gain and gamma must be positive, got {}:{}",
                    bad.gain, bad.gamma
                )));
            }
            Ok(e.clone())
        }
    }
}

/// Frame `i` is the exposed base moved by the `i`-th cumulative offset,
/// with vacated pixels black.
pub fn generate_stack(
    base: &RgbImage,
    pairwise: &[ShiftOffset],
    exposures: &[Exposure],
) -> Result<Vec<RgbImage>, CliError> {
    let (w, h) = base.dimensions();
    if w < MIN_BASE_SIDE || h < MIN_BASE_SIDE {
        return Err(CliError::Usage(format!(
            "base image is {w}x{h}; at least {MIN_BASE_SIDE}x{MIN_BASE_SIDE} is required"
        )));
    }
    if exposures.len() != pairwise.len() + 1 {
        return Err(CliError::Usage("one exposure per image is required".into()));
    }
    check_overlap(w, h, pairwise)?;
    Ok(cumulative_offsets(pairwise)
        .iter()
        .zip(exposures)
        .map(|(&c, e)| shift_rgb(&e.apply(base), c, [0, 0, 0]))
        .collect())
}

/// Writes the stack as `frame_XX.<ext>` plus `manifest.json` into `out_dir`.
pub fn run_generate(spec: &SyntheticSpec, out_dir: &Path) -> Result<Manifest, CliError> {
    if spec.count < 2 {
        return Err(CliError::Usage(format!(
            "--count must be at least 2, got {}",
            spec.count
        )));
    }
    let base = decode_image(&spec.base)?;
    let (w, h) = base.dimensions();
    let pairwise = plan_shifts(&spec.shifts, spec.count, w, h)?;
    let exposures = plan_exposures(&spec.exposures, spec.count)?;
    let frames = generate_stack(&base, &pairwise, &exposures)?;

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let ext = ImageFormat::from_path(&spec.base)
        .unwrap_or(ImageFormat::Ppm)
        .extension();
    let mut names = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let name = format!("frame_{i:02}.{ext}");
        encode_image(frame, &out_dir.join(&name))?;
        names.push(name);
    }
    let pair = |o: &ShiftOffset| [o.dx, o.dy];
    let manifest = Manifest {
        base: spec.base.display().to_string(),
        count: spec.count,
        pairwise: pairwise.iter().map(pair).collect(),
        cumulative: cumulative_offsets(&pairwise).iter().map(pair).collect(),
        exposures,
        images: names,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

/// Procedural stand-in for a photograph: smooth shading with detail at many
/// scales, hard-edged objects and mild colour variation. Luminance sits
/// mostly in the lower half of the range so that brightening by 2x still
/// leaves the median unsaturated.
pub fn natural_scene(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let mut lum = vec![0f64; n];
    let mut amp = 1.0;
    let mut total = 0.0;
    for cell in [96usize, 48, 24, 12, 6, 3] {
        add_value_noise(&mut lum, width, height, cell, amp, &mut rng);
        total += amp;
        amp *= 0.62;
    }
    for v in &mut lum {
        *v /= total;
    }

    let mut objects = vec![0f64; n];
    for _ in 0..12 + rng.gen_range(0..8) {
        let delta = rng.gen_range(-0.3..0.3);
        let cx = rng.gen_range(0.0..width as f64);
        let cy = rng.gen_range(0.0..height as f64);
        let rx = rng.gen_range(0.03..0.18) * width as f64;
        let ry = rng.gen_range(0.03..0.18) * height as f64;
        let disc = rng.gen_bool(0.5);
        for y in 0..height {
            for x in 0..width {
                let ux = (x as f64 - cx) / rx;
                let uy = (y as f64 - cy) / ry;
                let inside = if disc {
                    ux * ux + uy * uy <= 1.0
                } else {
                    ux.abs() <= 1.0 && uy.abs() <= 1.0
                };
                if inside {
                    objects[y * width + x] += delta;
                }
            }
        }
    }

    let mut tint_r = vec![0f64; n];
    let mut tint_b = vec![0f64; n];
    add_value_noise(&mut tint_r, width, height, 80, 1.0, &mut rng);
    add_value_noise(&mut tint_b, width, height, 80, 1.0, &mut rng);

    let mut data = Vec::with_capacity(n * 3);
    for i in 0..n {
        let l = (lum[i] - 0.5) * 1.6 + 0.4 + objects[i];
        let base = 20.0 + 130.0 * l.clamp(0.0, 1.2);
        let r = base * (0.8 + 0.4 * tint_r[i]);
        let b = base * (0.8 + 0.4 * tint_b[i]);
        for c in [r, base, b] {
            data.push(c.round().clamp(0.0, 255.0) as u8);
        }
    }
    RgbImage::new(width, height, data).expect("size matches")
}

fn add_value_noise(
    acc: &mut [f64],
    width: usize,
    height: usize,
    cell: usize,
    amp: f64,
    rng: &mut impl Rng,
) {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.gen::<f64>()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    for y in 0..height {
        let fy = y as f64 / cell as f64;
        let (iy, ty) = (fy as usize, smooth(fy.fract()));
        for x in 0..width {
            let fx = x as f64 / cell as f64;
            let (ix, tx) = (fx as usize, smooth(fx.fract()));
            let g = |i: usize, j: usize| grid[j * gw + i];
            let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
            let bot = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
            acc[y * width + x] += amp * (top * (1.0 - ty) + bot * ty);
        }
    }
}

/// Parses `"dx,dy;dx,dy;..."`.
pub fn parse_shifts(s: &str) -> Result<Vec<ShiftOffset>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(',')
                .ok_or_else(|| format!("expected dx,dy but found {p:?}"))?;
            let dx = a.trim().parse().map_err(|_| format!("bad dx in {p:?}"))?;
            let dy = b.trim().parse().map_err(|_| format!("bad dy in {p:?}"))?;
            Ok(ShiftOffset::new(dx, dy))
        })
        .collect()
}

/// Parses `"gain:gamma;gain:gamma;..."`.
pub fn parse_exposures(s: &str) -> Result<Vec<Exposure>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| format!("expected gain:gamma but found {p:?}"))?;
            let gain = a.trim().parse().map_err(|_| format!("bad gain in {p:?}"))?;
            let gamma = b
                .trim()
                .parse()
                .map_err(|_| format!("bad gamma in {p:?}"))?;
            Ok(Exposure { gain, gamma })
        })
        .collect()
}
