//! Whole-stack alignment.
//!
//! Each image is converted, pyramided and thresholded once. Consecutive
//! pairs `(i, i + 1)` are then searched in order and the pairwise
//! displacements are summed into offsets relative to image 0. Finally every
//! image is translated back onto image 0.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::bitmap::Layout;
use crate::error::{Error, Result};
use crate::image::{shift_rgb, to_grayscale, RgbImage, ShiftOffset};
use crate::pyramid::{build_pyramid, GrayPyramid, DEFAULT_LEVELS, MIN_LEVEL_SIDE};
use crate::search::{find_offset, AlignmentResult};
use crate::threshold::{build_mtb_pyramid, MtbPyramid, DEFAULT_NOISE_TOLERANCE};

/// Colour written into pixels vacated by the final translation.
pub const FILL_RGB: [u8; 3] = [0, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignConfig {
    pub levels: usize,
    pub noise_tolerance: u8,
    pub layout: Layout,
    pub workers: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS,
            noise_tolerance: DEFAULT_NOISE_TOLERANCE,
            layout: Layout::default(),
            workers: default_workers(),
        }
    }
}

/// Logical CPU count, or 1 when it cannot be queried.
pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Wall-clock milliseconds spent per stage of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub grayscale: f64,
    pub pyramid: f64,
    pub threshold: f64,
    pub search: f64,
    pub shift: f64,
    pub total: f64,
}

impl StageTimings {
    pub const STAGES: [&'static str; 5] = ["grayscale", "pyramid", "threshold", "search", "shift"];

    pub fn stages(&self) -> [f64; 5] {
        [
            self.grayscale,
            self.pyramid,
            self.threshold,
            self.search,
            self.shift,
        ]
    }

    pub fn stage_sum(&self) -> f64 {
        self.stages().iter().sum()
    }
}

/// How often each piece of work actually ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WorkCounters {
    pub grayscale_conversions: usize,
    pub pyramids_built: usize,
    pub mtb_pyramids_built: usize,
    pub find_offset_calls: usize,
    pub shift_tests: usize,
    pub images_shifted: usize,
}

#[derive(Default)]
struct AtomicCounters {
    grayscale_conversions: AtomicUsize,
    pyramids_built: AtomicUsize,
    mtb_pyramids_built: AtomicUsize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackAlignment {
    pub image_count: usize,
    /// Entry `i` is image `i + 1` measured against image `i`.
    pub pairwise: Vec<AlignmentResult>,
    /// Displacement of each image relative to image 0.
    pub cumulative: Vec<ShiftOffset>,
    pub timings: StageTimings,
    pub counters: WorkCounters,
}

/// Prefix sums of pairwise displacements, starting at `(0, 0)`.
pub fn cumulative_offsets(pairwise: &[ShiftOffset]) -> Vec<ShiftOffset> {
    let mut out = Vec::with_capacity(pairwise.len() + 1);
    let mut acc = ShiftOffset::ZERO;
    out.push(acc);
    for &o in pairwise {
        acc += o;
        out.push(acc);
    }
    out
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn validate_stack(images: &[RgbImage]) -> Result<()> {
    if images.len() < 2 {
        return Err(Error::TooFewImages(images.len()));
    }
    let dims = images[0].dimensions();
    if dims.0 < MIN_LEVEL_SIDE || dims.1 < MIN_LEVEL_SIDE {
        return Err(Error::ImageTooSmall {
            width: dims.0,
            height: dims.1,
            min: MIN_LEVEL_SIDE,
        });
    }
    if let Some(bad) = images.iter().find(|img| img.dimensions() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: bad.dimensions(),
        });
    }
    Ok(())
}

/// Stack aligner bound to a worker pool of the configured size.
pub struct Aligner {
    config: AlignConfig,
    pool: rayon::ThreadPool,
}

impl std::fmt::Debug for Aligner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Aligner")
            .field("config", &self.config)
            .finish()
    }
}

impl Aligner {
    pub fn new(config: AlignConfig) -> Result<Self> {
        if config.workers == 0 {
            return Err(Error::ZeroWorkers);
        }
        if config.levels == 0 {
            return Err(Error::ZeroLevels);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .thread_name(|i| format!("mtb-worker-{i}"))
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?;
        Ok(Self { config, pool })
    }

    pub fn config(&self) -> &AlignConfig {
        &self.config
    }

    /// Aligns every image onto image 0. Returns the translated images
    /// (image 0 untouched) and the per-pair search record.
    pub fn align_stack(&self, images: &[RgbImage]) -> Result<(Vec<RgbImage>, StackAlignment)> {
        validate_stack(images)?;
        self.pool.install(|| self.run(images))
    }

    fn run(&self, images: &[RgbImage]) -> Result<(Vec<RgbImage>, StackAlignment)> {
        let cfg = &self.config;
        let counters = AtomicCounters::default();
        let mut timings = StageTimings::default();
        let start = Instant::now();

        let t = Instant::now();
        let grays: Vec<_> = images
            .par_iter()
            .map(|img| {
                counters
                    .grayscale_conversions
                    .fetch_add(1, Ordering::Relaxed);
                to_grayscale(img)
            })
            .collect();
        timings.grayscale = ms_since(t);

        let t = Instant::now();
        let pyramids: Vec<GrayPyramid> = grays
            .par_iter()
            .map(|g| {
                counters.pyramids_built.fetch_add(1, Ordering::Relaxed);
                build_pyramid(g, cfg.levels)
            })
            .collect::<Result<_>>()?;
        drop(grays);
        timings.pyramid = ms_since(t);

        let t = Instant::now();
        let mtbs: Vec<MtbPyramid> = pyramids
            .par_iter()
            .map(|p| {
                counters.mtb_pyramids_built.fetch_add(1, Ordering::Relaxed);
                build_mtb_pyramid(p, cfg.noise_tolerance, cfg.layout)
            })
            .collect();
        drop(pyramids);
        timings.threshold = ms_since(t);

        let t = Instant::now();
        let pairwise = mtbs
            .windows(2)
            .map(|w| find_offset(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        let cumulative = cumulative_offsets(&pairwise.iter().map(|r| r.offset).collect::<Vec<_>>());
        timings.search = ms_since(t);

        let t = Instant::now();
        let aligned: Vec<RgbImage> = images
            .par_iter()
            .zip(cumulative.par_iter())
            .enumerate()
            .map(|(i, (img, &c))| {
                if i == 0 {
                    img.clone()
                } else {
                    shift_rgb(img, -c, FILL_RGB)
                }
            })
            .collect();
        timings.shift = ms_since(t);
        timings.total = ms_since(start);

        let counters = WorkCounters {
            grayscale_conversions: counters.grayscale_conversions.into_inner(),
            pyramids_built: counters.pyramids_built.into_inner(),
            mtb_pyramids_built: counters.mtb_pyramids_built.into_inner(),
            find_offset_calls: pairwise.len(),
            shift_tests: pairwise.iter().map(|r| r.total_tests).sum(),
            images_shifted: images.len() - 1,
        };
        let alignment = StackAlignment {
            image_count: images.len(),
            pairwise,
            cumulative,
            timings,
            counters,
        };
        check_alignment(&alignment)?;
        Ok((aligned, alignment))
    }

    /// Runs [`Aligner::align_stack`] `repetitions` times on in-memory images
    /// and summarises the timings.
    pub fn measure(&self, images: &[RgbImage], repetitions: usize) -> Result<TimingReport> {
        if repetitions == 0 {
            return Err(Error::ZeroRepetitions);
        }
        let mut runs = Vec::with_capacity(repetitions);
        let mut offsets = None;
        for _ in 0..repetitions {
            let (_, alignment) = self.align_stack(images)?;
            match &offsets {
                None => offsets = Some(alignment.cumulative.clone()),
                Some(o) if *o != alignment.cumulative => {
                    return Err(Error::Invariant(
                        "offsets changed between repetitions".into(),
                    ));
                }
                Some(_) => {}
            }
            runs.push(alignment.timings);
        }
        Ok(TimingReport::from_runs(images.len(), runs))
    }
}

fn check_alignment(a: &StackAlignment) -> Result<()> {
    let n = a.image_count;
    if a.pairwise.len() + 1 != n || a.cumulative.len() != n {
        return Err(Error::Invariant(format!(
            "{n} images but {} pairs and {} cumulative offsets",
            a.pairwise.len(),
            a.cumulative.len()
        )));
    }
    let mut acc = ShiftOffset::ZERO;
    for (i, c) in a.cumulative.iter().enumerate() {
        if i > 0 {
            acc += a.pairwise[i - 1].offset;
        }
        if *c != acc {
            return Err(Error::Invariant(format!(
                "cumulative offset {i} is {c}, expected {acc}"
            )));
        }
    }
    Ok(())
}

/// Convenience wrapper building a one-shot [`Aligner`].
pub fn align_stack(
    images: &[RgbImage],
    config: AlignConfig,
) -> Result<(Vec<RgbImage>, StackAlignment)> {
    Aligner::new(config)?.align_stack(images)
}

/// Convenience wrapper building a one-shot [`Aligner`].
pub fn measure_alignment(
    images: &[RgbImage],
    config: AlignConfig,
    repetitions: usize,
) -> Result<TimingReport> {
    Aligner::new(config)?.measure(images, repetitions)
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub mean: f64,
    pub stddev: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stddev }
    }
}

/// Timing summary over repeated runs, all values in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub image_count: usize,
    pub repetitions: usize,
    pub grayscale: Summary,
    pub pyramid: Summary,
    pub threshold: Summary,
    pub search: Summary,
    pub shift: Summary,
    pub total: Summary,
    pub runs: Vec<StageTimings>,
}

impl TimingReport {
    pub fn from_runs(image_count: usize, runs: Vec<StageTimings>) -> Self {
        let col =
            |f: fn(&StageTimings) -> f64| Summary::of(&runs.iter().map(f).collect::<Vec<_>>());
        Self {
            image_count,
            repetitions: runs.len(),
            grayscale: col(|t| t.grayscale),
            pyramid: col(|t| t.pyramid),
            threshold: col(|t| t.threshold),
            search: col(|t| t.search),
            shift: col(|t| t.shift),
            total: col(|t| t.total),
            runs,
        }
    }

    pub fn stage_means(&self) -> [f64; 5] {
        [
            self.grayscale.mean,
            self.pyramid.mean,
            self.threshold.mean,
            self.search.mean,
            self.shift.mean,
        ]
    }
}
