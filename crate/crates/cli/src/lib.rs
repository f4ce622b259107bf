//! Command-line front end for `mtb-align`: image files, synthetic stacks,
//! JSON reports and timing sweeps.

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod report;
pub mod synth;

pub use bench::{linear_fit, run_bench, BenchRow, BenchTable, LinearFit};
pub use cli::{run, run_align, CliConfig};
pub use error::CliError;
pub use io::{decode_image, encode_image, ImageFormat, ImageIoError};
pub use report::{validate_report, Report};
pub use synth::{
    generate_stack, natural_scene, run_generate, Exposure, ExposurePlan, Manifest, ShiftPlan,
    SyntheticSpec,
};
