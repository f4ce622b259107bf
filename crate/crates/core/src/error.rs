use thiserror::Error;

/// Errors raised by the alignment library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("pixel buffer holds {len} bytes, expected {expected} for a {width}x{height} image")]
    BufferSize {
        width: usize,
        height: usize,
        expected: usize,
        len: usize,
    },

    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },

    #[error("image is {width}x{height}, at least {min}x{min} is required")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("bitmaps use different layouts ({0:?} and {1:?})")]
    LayoutMismatch(crate::Layout, crate::Layout),

    #[error("pyramid level count must be at least 1")]
    ZeroLevels,

    #[error("pyramids differ: {0}")]
    PyramidMismatch(String),

    #[error("histogram is empty, the median is undefined")]
    EmptyHistogram,

    #[error("at least 2 images are required, got {0}")]
    TooFewImages(usize),

    #[error("worker count must be at least 1")]
    ZeroWorkers,

    #[error("repetition count must be at least 1")]
    ZeroRepetitions,

    #[error("failed to start worker pool: {0}")]
    ThreadPool(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
