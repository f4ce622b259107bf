//! Scalar reference implementations and scene generators shared by the
//! integration tests. Nothing here calls into the optimized kernels.

#![allow(dead_code)]

use mtb_align::{GrayImage, RgbImage, ShiftOffset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major truth raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub w: usize,
    pub h: usize,
    pub bits: Vec<bool>,
}

impl Raster {
    pub fn at(&self, x: i64, y: i64) -> Option<bool> {
        if x < 0 || y < 0 || x >= self.w as i64 || y >= self.h as i64 {
            None
        } else {
            Some(self.bits[y as usize * self.w + x as usize])
        }
    }
}

/// Direct transcription of the misalignment count: pixel `(x, y)` of `a`
/// against pixel `(x + dx, y + dy)` of `b`, only where both are reliable.
pub fn scalar_error(a: &Raster, ea: &Raster, b: &Raster, eb: &Raster, o: ShiftOffset) -> u64 {
    let mut n = 0;
    for y in 0..a.h as i64 {
        for x in 0..a.w as i64 {
            let (bx, by) = (x + o.dx as i64, y + o.dy as i64);
            let (Some(bv), Some(ebv)) = (b.at(bx, by), eb.at(bx, by)) else {
                continue;
            };
            let av = a.at(x, y).unwrap();
            let eav = ea.at(x, y).unwrap();
            if (av != bv) && eav && ebv {
                n += 1;
            }
        }
    }
    n
}

pub fn scalar_median(img: &GrayImage) -> u8 {
    let mut v = img.data().to_vec();
    v.sort_unstable();
    // Lower median: element ceil(n/2) in 1-based order.
    v[v.len().div_ceil(2) - 1]
}

pub fn scalar_threshold(img: &GrayImage, tol: u8) -> (Raster, Raster, u8) {
    let m = scalar_median(img) as i32;
    let mtb = img.data().iter().map(|&p| p as i32 > m).collect();
    let eb = img
        .data()
        .iter()
        .map(|&p| (p as i32 - m).abs() > tol as i32)
        .collect();
    let (w, h) = img.dimensions();
    (
        Raster { w, h, bits: mtb },
        Raster { w, h, bits: eb },
        m as u8,
    )
}

pub fn scalar_shift(img: &GrayImage, o: ShiftOffset, fill: u8) -> GrayImage {
    let (w, h) = img.dimensions();
    GrayImage::from_fn(w, h, |x, y| {
        let sx = x as i64 - o.dx as i64;
        let sy = y as i64 - o.dy as i64;
        if sx < 0 || sy < 0 || sx >= w as i64 || sy >= h as i64 {
            fill
        } else {
            img.pixel(sx as usize, sy as usize)
        }
    })
    .unwrap()
}

/// Smooth random field with detail at several scales: bilinear value noise
/// summed over octaves, plus a handful of hard-edged rectangles.
pub fn scene(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut r = rng(seed);
    let mut acc = vec![0f64; w * h];
    let mut amp = 1.0;
    let mut total = 0.0;
    for cell in [48usize, 24, 12, 6, 3] {
        let gw = w / cell + 2;
        let gh = h / cell + 2;
        let grid: Vec<f64> = (0..gw * gh).map(|_| r.gen::<f64>()).collect();
        for y in 0..h {
            let fy = y as f64 / cell as f64;
            let (iy, ty) = (fy as usize, fy.fract());
            for x in 0..w {
                let fx = x as f64 / cell as f64;
                let (ix, tx) = (fx as usize, fx.fract());
                let g = |i: usize, j: usize| grid[j * gw + i];
                let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
                let bot = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
                acc[y * w + x] += amp * (top * (1.0 - ty) + bot * ty);
            }
        }
        total += amp;
        amp *= 0.6;
    }
    for v in &mut acc {
        *v /= total;
    }
    for _ in 0..6 {
        let rw = r.gen_range(w / 8..=w / 3);
        let rh = r.gen_range(h / 8..=h / 3);
        let x0 = r.gen_range(0..w - rw);
        let y0 = r.gen_range(0..h - rh);
        let delta = r.gen_range(-0.35..0.35);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                acc[y * w + x] += delta;
            }
        }
    }
    let data = acc
        .iter()
        .map(|v| (30.0 + 200.0 * v).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(w, h, data).unwrap()
}

pub fn gray_to_rgb(g: &GrayImage) -> RgbImage {
    RgbImage::from_fn(g.width(), g.height(), |x, y| {
        let v = g.pixel(x, y);
        [v, v, v]
    })
    .unwrap()
}

/// Window of `src` whose top-left corner is at `(x0, y0)`.
pub fn crop(src: &GrayImage, x0: usize, y0: usize, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| src.pixel(x0 + x, y0 + y)).unwrap()
}

/// Circular translation: content moves by `o` and wraps around, so the
/// histogram (and hence every threshold) is unchanged.
pub fn wrap_shift(img: &GrayImage, o: ShiftOffset) -> GrayImage {
    let (w, h) = img.dimensions();
    GrayImage::from_fn(w, h, |x, y| {
        let sx = (x as i64 - o.dx as i64).rem_euclid(w as i64) as usize;
        let sy = (y as i64 - o.dy as i64).rem_euclid(h as i64) as usize;
        img.pixel(sx, sy)
    })
    .unwrap()
}
