//! Binary rasters with two interchangeable memory layouts.
//!
//! * [`Layout::ByteMap`] keeps one byte per pixel, `0` or `255`. Element
//!   access needs no bit manipulation, which is what GPU-style kernels want.
//! * [`Layout::WordPacked`] keeps one bit per pixel in `u64` words, least
//!   significant bit first. Every row starts on a word boundary and the
//!   padding bits past the row width are always zero, so whole words can be
//!   XORed, ANDed and popcounted without masking.
//!
//! Both layouts are observably identical through this module's API.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, ShiftOffset, ROWS_PER_TASK};

const WORD_BITS: usize = u64::BITS as usize;

/// Value stored in a set `ByteMap` cell.
pub const BYTE_SET: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Layout {
    ByteMap,
    #[default]
    WordPacked,
}

impl Layout {
    pub const ALL: [Layout; 2] = [Layout::ByteMap, Layout::WordPacked];

    pub fn name(self) -> &'static str {
        match self {
            Layout::ByteMap => "bytemap",
            Layout::WordPacked => "packed",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bytemap" | "byte" | "bytes" => Ok(Layout::ByteMap),
            "packed" | "wordpacked" | "bits" => Ok(Layout::WordPacked),
            other => Err(format!(
                "unknown bitmap layout `{other}` (expected bytemap or packed)"
            )),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
enum Storage {
    Bytes(Vec<u8>),
    Words {
        words_per_row: usize,
        words: Vec<u64>,
    },
}

/// A `width` x `height` binary raster.
#[derive(Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: usize,
    height: usize,
    storage: Storage,
}

impl fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bitmap")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("layout", &self.layout())
            .field("ones", &self.count_ones())
            .finish()
    }
}

fn words_per_row(width: usize) -> usize {
    width.div_ceil(WORD_BITS)
}

fn pack_row(dst: &mut [u64], bits: &[bool]) {
    for (word, chunk) in dst.iter_mut().zip(bits.chunks(WORD_BITS)) {
        *word = chunk
            .iter()
            .enumerate()
            .fold(0, |w, (i, &b)| w | (b as u64) << i);
    }
}

impl Bitmap {
    /// Builds a bitmap row by row; `fill_row(y, dst)` writes the truth value
    /// of every pixel of row `y` into `dst` (length `width`).
    fn build(
        width: usize,
        height: usize,
        layout: Layout,
        fill_row: impl Fn(usize, &mut [bool]) + Sync,
    ) -> Self {
        assert!(
            width > 0 && height > 0,
            "bitmap dimensions must be positive"
        );
        let storage = match layout {
            Layout::ByteMap => {
                let mut cells = vec![0u8; width * height];
                cells
                    .par_chunks_mut(width)
                    .enumerate()
                    .with_min_len(ROWS_PER_TASK)
                    .for_each_init(
                        || vec![false; width],
                        |row, (y, dst)| {
                            fill_row(y, row);
                            for (d, &b) in dst.iter_mut().zip(row.iter()) {
                                *d = if b { BYTE_SET } else { 0 };
                            }
                        },
                    );
                Storage::Bytes(cells)
            }
            Layout::WordPacked => {
                let wpr = words_per_row(width);
                let mut words = vec![0u64; wpr * height];
                words
                    .par_chunks_mut(wpr)
                    .enumerate()
                    .with_min_len(ROWS_PER_TASK)
                    .for_each_init(
                        || vec![false; width],
                        |row, (y, dst)| {
                            fill_row(y, row);
                            pack_row(dst, row);
                        },
                    );
                Storage::Words {
                    words_per_row: wpr,
                    words,
                }
            }
        };
        Self {
            width,
            height,
            storage,
        }
    }

    /// Bitmap whose pixel `(x, y)` is `f(x, y)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        layout: Layout,
        f: impl Fn(usize, usize) -> bool + Sync,
    ) -> Self {
        Self::build(width, height, layout, |y, row| {
            for (x, dst) in row.iter_mut().enumerate() {
                *dst = f(x, y);
            }
        })
    }

    /// Bitmap from a row-major raster of truth values.
    pub fn from_bools(
        width: usize,
        height: usize,
        values: &[bool],
        layout: Layout,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if values.len() != width * height {
            return Err(Error::BufferSize {
                width,
                height,
                expected: width * height,
                len: values.len(),
            });
        }
        Ok(Self::build(width, height, layout, |y, row| {
            row.copy_from_slice(&values[y * width..(y + 1) * width]);
        }))
    }

    /// Bitmap set exactly where `pred` holds for the grayscale pixel.
    pub fn from_gray(img: &GrayImage, layout: Layout, pred: impl Fn(u8) -> bool + Sync) -> Self {
        let lut: [bool; 256] = std::array::from_fn(|v| pred(v as u8));
        let (width, height) = img.dimensions();
        let storage = match layout {
            Layout::ByteMap => {
                let mut cells = vec![0u8; width * height];
                cells
                    .par_chunks_mut(width)
                    .zip(img.data().par_chunks(width))
                    .with_min_len(ROWS_PER_TASK)
                    .for_each(|(dst, src)| {
                        for (d, &p) in dst.iter_mut().zip(src) {
                            *d = if lut[p as usize] { BYTE_SET } else { 0 };
                        }
                    });
                Storage::Bytes(cells)
            }
            Layout::WordPacked => {
                let wpr = words_per_row(width);
                let mut words = vec![0u64; wpr * height];
                words
                    .par_chunks_mut(wpr)
                    .zip(img.data().par_chunks(width))
                    .with_min_len(ROWS_PER_TASK)
                    .for_each(|(dst, src)| {
                        for (word, px) in dst.iter_mut().zip(src.chunks(WORD_BITS)) {
                            *word = px
                                .iter()
                                .enumerate()
                                .fold(0, |w, (i, &p)| w | (lut[p as usize] as u64) << i);
                        }
                    });
                Storage::Words {
                    words_per_row: wpr,
                    words,
                }
            }
        };
        Self {
            width,
            height,
            storage,
        }
    }

    pub fn filled(width: usize, height: usize, layout: Layout, value: bool) -> Self {
        Self::build(width, height, layout, |_, row| row.fill(value))
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

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layout(&self) -> Layout {
        match self.storage {
            Storage::Bytes(_) => Layout::ByteMap,
            Storage::Words { .. } => Layout::WordPacked,
        }
    }

    /// Raw `ByteMap` cells, `None` for other layouts.
    pub fn byte_cells(&self) -> Option<&[u8]> {
        match &self.storage {
            Storage::Bytes(cells) => Some(cells),
            Storage::Words { .. } => None,
        }
    }

    /// Raw `WordPacked` words and the row stride in words.
    pub fn packed_words(&self) -> Option<(&[u64], usize)> {
        match &self.storage {
            Storage::Words {
                words_per_row,
                words,
            } => Some((words, *words_per_row)),
            Storage::Bytes(_) => None,
        }
    }

    /// Truth value at `(x, y)`. Panics when out of bounds.
    pub fn get(&self, x: usize, y: usize) -> bool {
        assert!(
            x < self.width && y < self.height,
            "bitmap access ({x}, {y}) outside {}x{}",
            self.width,
            self.height
        );
        match &self.storage {
            Storage::Bytes(cells) => cells[y * self.width + x] != 0,
            Storage::Words {
                words_per_row,
                words,
            } => (words[y * words_per_row + x / WORD_BITS] >> (x % WORD_BITS)) & 1 == 1,
        }
    }

    /// Number of set pixels. Row padding never contributes.
    pub fn count_ones(&self) -> u64 {
        match &self.storage {
            Storage::Bytes(cells) => cells
                .par_chunks(self.width * ROWS_PER_TASK)
                .map(|c| c.iter().map(|&v| (v & 1) as u64).sum::<u64>())
                .sum(),
            Storage::Words { words, .. } => words
                .par_chunks(1024)
                .map(|c| c.iter().map(|w| w.count_ones() as u64).sum::<u64>())
                .sum(),
        }
    }

    /// Same logical content in another layout.
    pub fn to_layout(&self, layout: Layout) -> Bitmap {
        if layout == self.layout() {
            return self.clone();
        }
        Self::build(self.width, self.height, layout, |y, row| {
            for (x, dst) in row.iter_mut().enumerate() {
                *dst = self.get(x, y);
            }
        })
    }

    /// Logical equality, ignoring the layout.
    pub fn same_pixels(&self, other: &Bitmap) -> bool {
        if self.dimensions() != other.dimensions() {
            return false;
        }
        if self.layout() == other.layout() {
            return self == other;
        }
        (0..self.height).all(|y| (0..self.width).all(|x| self.get(x, y) == other.get(x, y)))
    }

    /// Truth values as a row-major vector.
    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .map(|(x, y)| self.get(x, y))
            .collect()
    }
}

fn check_same(a: &Bitmap, b: &Bitmap) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: a.dimensions(),
            found: b.dimensions(),
        });
    }
    if a.layout() != b.layout() {
        return Err(Error::LayoutMismatch(a.layout(), b.layout()));
    }
    Ok(())
}

/// 64 bits of `row` starting at signed bit position `start`; bits outside
/// the row read as zero.
#[inline]
fn word_at(row: &[u64], start: i64) -> u64 {
    let q = start.div_euclid(WORD_BITS as i64);
    let r = start.rem_euclid(WORD_BITS as i64) as u32;
    let get = |i: i64| {
        if i >= 0 && (i as usize) < row.len() {
            row[i as usize]
        } else {
            0
        }
    };
    let lo = get(q);
    if r == 0 {
        lo
    } else {
        (lo >> r) | (get(q + 1) << (WORD_BITS as u32 - r))
    }
}

/// Misalignment count between two thresholded images.
///
/// `offset` is the displacement of `b`'s content relative to `a`: pixel
/// `(x, y)` of `a` is compared with pixel `(x + dx, y + dy)` of `b`. The
/// result is the number of pixels where the two threshold bits differ and
/// both exclusion maps mark the pixel reliable. Pixels whose partner lies
/// outside `b` are not scored.
///
/// All four bitmaps must share dimensions and layout.
pub fn shifted_error(
    mtb_a: &Bitmap,
    eb_a: &Bitmap,
    mtb_b: &Bitmap,
    eb_b: &Bitmap,
    offset: ShiftOffset,
) -> Result<u64> {
    check_same(mtb_a, eb_a)?;
    check_same(mtb_a, mtb_b)?;
    check_same(mtb_a, eb_b)?;
    let (w, h) = mtb_a.dimensions();
    let (dx, dy) = (offset.dx as i64, offset.dy as i64);

    let y0 = (-dy).max(0);
    let y1 = (h as i64 - dy).min(h as i64);
    if y0 >= y1 || dx.unsigned_abs() as usize >= w {
        return Ok(0);
    }
    let rows = (y0 as usize)..(y1 as usize);
    let by = |y: usize| (y as i64 + dy) as usize;

    let total = match (&mtb_a.storage, &eb_a.storage, &mtb_b.storage, &eb_b.storage) {
        (Storage::Bytes(a), Storage::Bytes(ea), Storage::Bytes(b), Storage::Bytes(eb)) => {
            let xa0 = (-dx).max(0) as usize;
            let xa1 = (w as i64 - dx).min(w as i64) as usize;
            let xb0 = (xa0 as i64 + dx) as usize;
            let len = xa1 - xa0;
            rows.into_par_iter()
                .with_min_len(ROWS_PER_TASK)
                .map(|y| {
                    let ra = y * w + xa0;
                    let rb = by(y) * w + xb0;
                    let (a, ea) = (&a[ra..ra + len], &ea[ra..ra + len]);
                    let (b, eb) = (&b[rb..rb + len], &eb[rb..rb + len]);
                    a.iter()
                        .zip(ea)
                        .zip(b.iter().zip(eb))
                        .map(|((&a, &ea), (&b, &eb))| ((a ^ b) & ea & eb & 1) as u64)
                        .sum::<u64>()
                })
                .sum()
        }
        (
            Storage::Words {
                words_per_row: wpr,
                words: a,
            },
            Storage::Words { words: ea, .. },
            Storage::Words { words: b, .. },
            Storage::Words { words: eb, .. },
        ) => {
            let wpr = *wpr;
            rows.into_par_iter()
                .with_min_len(ROWS_PER_TASK)
                .map(|y| {
                    let (a, ea) = (&a[y * wpr..(y + 1) * wpr], &ea[y * wpr..(y + 1) * wpr]);
                    let yb = by(y);
                    let (b, eb) = (&b[yb * wpr..(yb + 1) * wpr], &eb[yb * wpr..(yb + 1) * wpr]);
                    let mut n = 0u64;
                    for k in 0..wpr {
                        let start = (k * WORD_BITS) as i64 + dx;
                        let bw = word_at(b, start);
                        let ebw = word_at(eb, start);
                        n += ((a[k] ^ bw) & ea[k] & ebw).count_ones() as u64;
                    }
                    n
                })
                .sum()
        }
        _ => unreachable!("layouts checked above"),
    };
    Ok(total)
}
