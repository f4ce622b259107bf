//! Coarse-to-fine offset search over threshold-bitmap pyramids, plus an
//! exhaustive search used as a reference.
//!
//! Offsets reported here are displacements of the target's content relative
//! to the reference: the target pixel at `(x + dx, y + dy)` shows what the
//! reference shows at `(x, y)`. Shifting the target by the negated offset
//! aligns it with the reference.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::bitmap::shifted_error;
use crate::error::{Error, Result};
use crate::image::ShiftOffset;
use crate::threshold::{MtbPair, MtbPyramid};

/// Number of candidate offsets tested per pyramid level.
pub const CANDIDATES_PER_LEVEL: usize = 9;

/// Per-level steps in row-major order over `(ddy, ddx)`.
const STEPS: [ShiftOffset; CANDIDATES_PER_LEVEL] = [
    ShiftOffset::new(-1, -1),
    ShiftOffset::new(0, -1),
    ShiftOffset::new(1, -1),
    ShiftOffset::new(-1, 0),
    ShiftOffset::new(0, 0),
    ShiftOffset::new(1, 0),
    ShiftOffset::new(-1, 1),
    ShiftOffset::new(0, 1),
    ShiftOffset::new(1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub offset: ShiftOffset,
    pub error: u64,
}

/// Result of refining one pyramid level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSearch {
    pub chosen: ShiftOffset,
    /// All nine candidates, row-major over the step `(ddy, ddx)`.
    pub candidates: [Candidate; CANDIDATES_PER_LEVEL],
}

impl LevelSearch {
    pub fn chosen_error(&self) -> u64 {
        self.candidates
            .iter()
            .find(|c| c.offset == self.chosen)
            .map(|c| c.error)
            .expect("chosen offset is one of the candidates")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTrace {
    pub level: usize,
    /// Propagated offset the level was searched around (level scale).
    pub base: ShiftOffset,
    pub candidates: [Candidate; CANDIDATES_PER_LEVEL],
    /// Winning candidate (level scale).
    pub chosen: ShiftOffset,
    /// Estimate after this level, expressed at full resolution.
    pub accumulated: ShiftOffset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentResult {
    /// Full-resolution displacement of the target relative to the reference.
    pub offset: ShiftOffset,
    /// Deepest level first.
    pub traces: Vec<LevelTrace>,
    /// Number of shifted-error evaluations performed.
    pub total_tests: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceResult {
    pub offset: ShiftOffset,
    pub error: u64,
    pub evaluations: usize,
}

/// Counts every error evaluation that goes through it.
#[derive(Debug, Default)]
struct Probe {
    evaluations: AtomicUsize,
}

impl Probe {
    fn error(&self, reference: &MtbPair, target: &MtbPair, offset: ShiftOffset) -> Result<u64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        shifted_error(
            &reference.mtb,
            &reference.exclusion,
            &target.mtb,
            &target.exclusion,
            offset,
        )
    }

    fn count(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }
}

/// Ordering key: lower error, then smaller deviation from the search
/// centre, then scan order.
fn rank(error: u64, step: ShiftOffset, scan_index: usize) -> (u64, u32, usize) {
    (error, step.manhattan(), scan_index)
}

fn check_pair(reference: &MtbPair, target: &MtbPair) -> Result<()> {
    if reference.dimensions() != target.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: reference.dimensions(),
            found: target.dimensions(),
        });
    }
    Ok(())
}

fn search_level_with(
    probe: &Probe,
    reference: &MtbPair,
    target: &MtbPair,
    base: ShiftOffset,
) -> Result<LevelSearch> {
    check_pair(reference, target)?;
    let errors: Vec<u64> = STEPS
        .par_iter()
        .map(|&step| probe.error(reference, target, base + step))
        .collect::<Result<_>>()?;

    let mut candidates = [Candidate {
        offset: base,
        error: 0,
    }; CANDIDATES_PER_LEVEL];
    for (i, (c, (&step, &error))) in candidates
        .iter_mut()
        .zip(STEPS.iter().zip(&errors))
        .enumerate()
    {
        debug_assert_eq!(i, (step.dy + 1) as usize * 3 + (step.dx + 1) as usize);
        *c = Candidate {
            offset: base + step,
            error,
        };
    }
    let best = (0..CANDIDATES_PER_LEVEL)
        .min_by_key(|&i| rank(errors[i], STEPS[i], i))
        .expect("nine candidates");
    Ok(LevelSearch {
        chosen: candidates[best].offset,
        candidates,
    })
}

/// Tests `base` and its eight neighbours on one level and keeps the best.
pub fn search_level(
    reference: &MtbPair,
    target: &MtbPair,
    base: ShiftOffset,
) -> Result<LevelSearch> {
    search_level_with(&Probe::default(), reference, target, base)
}

/// Coarse-to-fine search: start at the deepest level around `(0, 0)`,
/// refine by one pixel per axis, double, and descend.
pub fn find_offset(reference: &MtbPyramid, target: &MtbPyramid) -> Result<AlignmentResult> {
    let levels = reference.level_count();
    if levels == 0 {
        return Err(Error::ZeroLevels);
    }
    if target.level_count() != levels {
        return Err(Error::PyramidMismatch(format!(
            "{} levels vs {}",
            levels,
            target.level_count()
        )));
    }
    for (i, (r, t)) in reference.levels().iter().zip(target.levels()).enumerate() {
        if r.dimensions() != t.dimensions() {
            return Err(Error::PyramidMismatch(format!(
                "level {i} is {:?} vs {:?}",
                r.dimensions(),
                t.dimensions()
            )));
        }
    }

    let probe = Probe::default();
    let mut estimate = ShiftOffset::ZERO;
    let mut traces = Vec::with_capacity(levels);
    for level in (0..levels).rev() {
        let base = estimate * 2;
        let found = search_level_with(&probe, reference.level(level), target.level(level), base)?;
        estimate = found.chosen;
        traces.push(LevelTrace {
            level,
            base,
            candidates: found.candidates,
            chosen: found.chosen,
            accumulated: found.chosen * (1 << level),
        });
    }
    Ok(AlignmentResult {
        offset: estimate,
        traces,
        total_tests: probe.count(),
    })
}

/// Evaluates every offset with `|dx|, |dy| <= radius` and returns the
/// global minimum under the same tie-break as [`search_level`].
pub fn brute_force_offset(
    reference: &MtbPair,
    target: &MtbPair,
    radius: u32,
) -> Result<BruteForceResult> {
    check_pair(reference, target)?;
    let r = radius as i32;
    let side = 2 * r + 1;
    let probe = Probe::default();
    let scored: Vec<(ShiftOffset, u64)> = (0..side * side)
        .into_par_iter()
        .map(|i| {
            let o = ShiftOffset::new(i % side - r, i / side - r);
            probe.error(reference, target, o).map(|e| (o, e))
        })
        .collect::<Result<_>>()?;
    let (i, &(offset, error)) = scored
        .iter()
        .enumerate()
        .min_by_key(|&(i, &(o, e))| rank(e, o, i))
        .expect("at least one offset");
    debug_assert_eq!(i, ((offset.dy + r) * side + offset.dx + r) as usize);
    Ok(BruteForceResult {
        offset,
        error,
        evaluations: probe.count(),
    })
}
