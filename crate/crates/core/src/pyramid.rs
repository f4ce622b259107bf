//! Half-resolution grayscale pyramids.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, ROWS_PER_TASK};

/// Smallest width or height any pyramid level may have.
pub const MIN_LEVEL_SIDE: usize = 16;

/// Default number of pyramid levels.
pub const DEFAULT_LEVELS: usize = 6;

/// Halves both dimensions by averaging each aligned 2x2 block.
///
/// Output `(x, y)` is `(p00 + p01 + p10 + p11 + 2) / 4` over the block at
/// `(2x, 2y)`. A trailing odd row or column is dropped.
pub fn downsample_half(img: &GrayImage) -> Result<GrayImage> {
    let (w, h) = img.dimensions();
    if w < 2 || h < 2 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 2,
        });
    }
    let (ow, oh) = (w / 2, h / 2);
    let mut out = vec![0u8; ow * oh];
    out.par_chunks_mut(ow)
        .enumerate()
        .with_min_len(ROWS_PER_TASK)
        .for_each(|(y, dst)| {
            let top = img.row(2 * y);
            let bottom = img.row(2 * y + 1);
            for (x, d) in dst.iter_mut().enumerate() {
                let s = top[2 * x] as u32
                    + top[2 * x + 1] as u32
                    + bottom[2 * x] as u32
                    + bottom[2 * x + 1] as u32;
                *d = ((s + 2) >> 2) as u8;
            }
        });
    GrayImage::new(ow, oh, out)
}

/// Number of levels actually built for `requested` levels on a
/// `width` x `height` base: every level must stay at least 16x16.
pub fn clamp_levels(width: usize, height: usize, requested: usize) -> usize {
    let mut levels = 1;
    let (mut w, mut h) = (width, height);
    while levels < requested && w / 2 >= MIN_LEVEL_SIDE && h / 2 >= MIN_LEVEL_SIDE {
        w /= 2;
        h /= 2;
        levels += 1;
    }
    levels
}

/// Grayscale pyramid, level 0 at full resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayPyramid {
    levels: Vec<GrayImage>,
}

impl GrayPyramid {
    pub fn levels(&self) -> &[GrayImage] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &GrayImage {
        &self.levels[i]
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn into_levels(self) -> Vec<GrayImage> {
        self.levels
    }
}

/// Builds up to `requested_levels` levels from `img`, stopping early
/// rather than producing a level smaller than 16x16.
pub fn build_pyramid(img: &GrayImage, requested_levels: usize) -> Result<GrayPyramid> {
    if requested_levels == 0 {
        return Err(Error::ZeroLevels);
    }
    let (w, h) = img.dimensions();
    if w < MIN_LEVEL_SIDE || h < MIN_LEVEL_SIDE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: MIN_LEVEL_SIDE,
        });
    }
    let count = clamp_levels(w, h, requested_levels);
    let mut levels = Vec::with_capacity(count);
    levels.push(img.clone());
    for _ in 1..count {
        let next = downsample_half(levels.last().expect("non-empty"))?;
        levels.push(next);
    }
    Ok(GrayPyramid { levels })
}
