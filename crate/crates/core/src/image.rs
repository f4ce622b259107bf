//! 8-bit raster types, luminance conversion and whole-pixel translation.
//!
//! Pixel coordinates are `(x, y)` with `x` growing to the right and `y`
//! growing downwards. All buffers are row-major without padding.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows handed to one rayon task when an operation is split by rows.
pub(crate) const ROWS_PER_TASK: usize = 16;

/// Signed whole-pixel translation.
///
/// Positive `dx` moves content to the right, positive `dy` moves it down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ShiftOffset {
    pub dx: i32,
    pub dy: i32,
}

impl ShiftOffset {
    pub const ZERO: ShiftOffset = ShiftOffset { dx: 0, dy: 0 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    /// `|dx| + |dy|`.
    pub fn manhattan(self) -> u32 {
        self.dx.unsigned_abs() + self.dy.unsigned_abs()
    }

    /// `max(|dx|, |dy|)`.
    pub fn chebyshev(self) -> u32 {
        self.dx.unsigned_abs().max(self.dy.unsigned_abs())
    }
}

impl Add for ShiftOffset {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl AddAssign for ShiftOffset {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for ShiftOffset {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.dx - rhs.dx, self.dy - rhs.dy)
    }
}

impl Neg for ShiftOffset {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.dx, -self.dy)
    }
}

impl Mul<i32> for ShiftOffset {
    type Output = Self;
    fn mul(self, k: i32) -> Self {
        Self::new(self.dx * k, self.dy * k)
    }
}

impl std::fmt::Display for ShiftOffset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.dx, self.dy)
    }
}

fn check_buffer(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    let expected = width * height * channels;
    if len != expected {
        return Err(Error::BufferSize {
            width,
            height,
            expected,
            len,
        });
    }
    Ok(())
}

/// Interleaved 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_buffer(width, height, 3, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image with every pixel set to `rgb`.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        check_buffer(width, height, 3, width * height * 3)?;
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        check_buffer(width, height, 3, width * height * 3)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Panics when `(x, y)` lies outside the image.
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        assert!(
            x < self.width && y < self.height,
            "pixel ({x}, {y}) out of bounds"
        );
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Single-channel 8-bit image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_buffer(width, height, 1, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        check_buffer(width, height, 1, width * height)?;
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Panics when `(x, y)` lies outside the image.
    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        assert!(
            x < self.width && y < self.height,
            "pixel ({x}, {y}) out of bounds"
        );
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }
}

/// Integer luminance weights; they sum to 256 so white stays 255.
const LUMA_R: u32 = 54;
const LUMA_G: u32 = 183;
const LUMA_B: u32 = 19;

#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((LUMA_R * r as u32 + LUMA_G * g as u32 + LUMA_B * b as u32) >> 8) as u8
}

/// Converts to luminance with `(54 R + 183 G + 19 B) / 256`, truncated.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let (w, h) = img.dimensions();
    let mut out = vec![0u8; w * h];
    out.par_chunks_mut(w)
        .zip(img.data.par_chunks(w * 3))
        .with_min_len(ROWS_PER_TASK)
        .for_each(|(dst, src)| {
            for (d, px) in dst.iter_mut().zip(src.chunks_exact(3)) {
                *d = luma(px[0], px[1], px[2]);
            }
        });
    GrayImage {
        width: w,
        height: h,
        data: out,
    }
}

/// Overlap of a translated row: `(dst_start, src_start, len)`, or `None`
/// when the translation pushes the row entirely out of frame.
fn row_overlap(width: usize, dx: i32) -> Option<(usize, usize, usize)> {
    let shift = dx.unsigned_abs() as usize;
    if shift >= width {
        return None;
    }
    let len = width - shift;
    Some(if dx >= 0 {
        (shift, 0, len)
    } else {
        (0, shift, len)
    })
}

fn shift_channels(
    src: &[u8],
    width: usize,
    height: usize,
    channels: usize,
    offset: ShiftOffset,
    fill: &[u8],
) -> Vec<u8> {
    debug_assert_eq!(fill.len(), channels);
    let row_len = width * channels;
    let mut out = vec![0u8; src.len()];
    let overlap = row_overlap(width, offset.dx);
    out.par_chunks_mut(row_len)
        .enumerate()
        .with_min_len(ROWS_PER_TASK)
        .for_each(|(y, dst)| {
            for px in dst.chunks_exact_mut(channels) {
                px.copy_from_slice(fill);
            }
            let sy = y as i64 - offset.dy as i64;
            if sy < 0 || sy >= height as i64 {
                return;
            }
            if let Some((d0, s0, len)) = overlap {
                let srow = &src[sy as usize * row_len..(sy as usize + 1) * row_len];
                dst[d0 * channels..(d0 + len) * channels]
                    .copy_from_slice(&srow[s0 * channels..(s0 + len) * channels]);
            }
        });
    out
}

/// Translates `img` by `offset`: output `(x, y)` = input `(x - dx, y - dy)`,
/// or `fill` where that source pixel does not exist.
pub fn shift_rgb(img: &RgbImage, offset: ShiftOffset, fill: [u8; 3]) -> RgbImage {
    let data = shift_channels(&img.data, img.width, img.height, 3, offset, &fill);
    RgbImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Single-channel counterpart of [`shift_rgb`].
pub fn shift_gray(img: &GrayImage, offset: ShiftOffset, fill: u8) -> GrayImage {
    let data = shift_channels(&img.data, img.width, img.height, 1, offset, &[fill]);
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}
