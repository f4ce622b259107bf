//! Translational alignment of exposure-bracketed image stacks using median
//! threshold bitmaps.
//!
//! A stack is aligned by converting every exposure to luminance, building a
//! half-resolution pyramid, thresholding each level at its median and then
//! searching, level by level from coarse to fine, for the integer offset
//! that minimises the disagreement between the threshold bitmaps of
//! consecutive images. Pixels close to the median are masked out by an
//! exclusion bitmap because their threshold bit is dominated by noise.
//!
//! ```
//! use mtb_align::{align_stack, AlignConfig, RgbImage};
//!
//! let img = RgbImage::from_fn(64, 64, |x, y| {
//!     let v = ((x * 7) ^ (y * 5)) as u8;
//!     [v, v, v]
//! })
//! .unwrap();
//! let (aligned, report) = align_stack(&[img.clone(), img], AlignConfig::default()).unwrap();
//! assert_eq!(report.cumulative[1].dx, 0);
//! assert_eq!(aligned.len(), 2);
//! ```

pub mod bitmap;
pub mod error;
pub mod image;
pub mod pipeline;
pub mod pyramid;
pub mod search;
pub mod threshold;

pub use bitmap::{shifted_error, Bitmap, Layout};
pub use error::{Error, Result};
pub use image::{shift_gray, shift_rgb, to_grayscale, GrayImage, RgbImage, ShiftOffset};
pub use pipeline::{
    align_stack, cumulative_offsets, default_workers, measure_alignment, AlignConfig, Aligner,
    StackAlignment, StageTimings, Summary, TimingReport, WorkCounters, FILL_RGB,
};
pub use pyramid::{build_pyramid, downsample_half, GrayPyramid, DEFAULT_LEVELS};
pub use search::{
    brute_force_offset, find_offset, search_level, AlignmentResult, BruteForceResult, Candidate,
    LevelTrace, CANDIDATES_PER_LEVEL,
};
pub use threshold::{
    build_mtb_pyramid, histogram, make_exclusion, make_mtb, median_from_histogram, Histogram256,
    MtbPair, MtbPyramid, DEFAULT_NOISE_TOLERANCE,
};
