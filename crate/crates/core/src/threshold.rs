//! Histograms, medians and the per-level threshold / exclusion bitmaps.

use rayon::prelude::*;

use crate::bitmap::{Bitmap, Layout};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::pyramid::GrayPyramid;

/// Default half-width of the band around the median treated as noise.
pub const DEFAULT_NOISE_TOLERANCE: u8 = 4;

const CHUNK_PIXELS: usize = 1 << 16;

/// Pixel counts per 8-bit value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    bins: [u64; 256],
    total: u64,
}

impl Default for Histogram256 {
    fn default() -> Self {
        Self {
            bins: [0; 256],
            total: 0,
        }
    }
}

impl Histogram256 {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        let total = bins.iter().sum();
        Self { bins, total }
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn add_pixels(&mut self, pixels: &[u8]) {
        for &p in pixels {
            self.bins[p as usize] += 1;
        }
        self.total += pixels.len() as u64;
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.bins.iter_mut().zip(other.bins.iter()) {
            *a += b;
        }
        self.total += other.total;
        self
    }

    /// Lower median: the smallest value whose cumulative count reaches
    /// `ceil(total / 2)`.
    pub fn median(&self) -> Result<u8> {
        if self.total == 0 {
            return Err(Error::EmptyHistogram);
        }
        let half = self.total.div_ceil(2);
        let mut acc = 0;
        for (v, &n) in self.bins.iter().enumerate() {
            acc += n;
            if acc >= half {
                return Ok(v as u8);
            }
        }
        unreachable!("cumulative count reaches the total")
    }
}

/// 256-bin histogram. Workers count disjoint chunks into private
/// histograms which are then summed.
pub fn histogram(img: &GrayImage) -> Histogram256 {
    img.data()
        .par_chunks(CHUNK_PIXELS)
        .fold(Histogram256::default, |mut h, chunk| {
            h.add_pixels(chunk);
            h
        })
        .reduce(Histogram256::default, Histogram256::merge)
}

pub fn median_from_histogram(h: &Histogram256) -> Result<u8> {
    h.median()
}

/// Set where the pixel is strictly brighter than `median`.
pub fn make_mtb(img: &GrayImage, median: u8, layout: Layout) -> Bitmap {
    Bitmap::from_gray(img, layout, |p| p > median)
}

/// Set where the pixel lies more than `tol` away from `median`, i.e. where
/// its threshold bit is trustworthy.
pub fn make_exclusion(img: &GrayImage, median: u8, tol: u8, layout: Layout) -> Bitmap {
    let (m, t) = (median as i16, tol as i16);
    Bitmap::from_gray(img, layout, |p| (p as i16 - m).abs() > t)
}

/// Threshold bitmap and exclusion bitmap of one image (or pyramid level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MtbPair {
    pub mtb: Bitmap,
    pub exclusion: Bitmap,
    pub median: u8,
    pub noise_tolerance: u8,
}

impl MtbPair {
    pub fn from_gray(img: &GrayImage, tol: u8, layout: Layout) -> Self {
        let median = histogram(img).median().expect("images are never empty");
        Self {
            mtb: make_mtb(img, median, layout),
            exclusion: make_exclusion(img, median, tol, layout),
            median,
            noise_tolerance: tol,
        }
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.mtb.dimensions()
    }

    pub fn layout(&self) -> Layout {
        self.mtb.layout()
    }

    /// Fraction of pixels the exclusion map keeps.
    pub fn reliable_fraction(&self) -> f64 {
        self.exclusion.count_ones() as f64 / self.exclusion.len() as f64
    }
}

/// One [`MtbPair`] per pyramid level, level 0 at full resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MtbPyramid {
    levels: Vec<MtbPair>,
}

impl MtbPyramid {
    pub fn from_levels(levels: Vec<MtbPair>) -> Self {
        Self { levels }
    }

    pub fn levels(&self) -> &[MtbPair] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &MtbPair {
        &self.levels[i]
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
}

/// Thresholds every level with its own median.
pub fn build_mtb_pyramid(p: &GrayPyramid, tol: u8, layout: Layout) -> MtbPyramid {
    let levels = p
        .levels()
        .par_iter()
        .map(|img| MtbPair::from_gray(img, tol, layout))
        .collect();
    MtbPyramid { levels }
}
