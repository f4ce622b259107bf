//! Argument parsing and the `align`, `generate`, `bench` and `scene` commands.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use mtb_align::{
    default_workers, AlignConfig, Aligner, Layout, ShiftOffset, DEFAULT_LEVELS,
    DEFAULT_NOISE_TOLERANCE,
};

use crate::bench::run_bench;
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};
use crate::io::{decode_image, encode_image, ImageFormat};
use crate::report::{validate_report, Report};
use crate::synth::{self, ExposurePlan, ShiftPlan, SyntheticSpec};

pub const MAX_INPUTS: usize = 64;
pub const MAX_LEVELS: usize = 10;
pub const MAX_TOLERANCE: u8 = 127;

#[derive(Debug, Parser)]
#[command(
    name = "mtb-align",
    version,
    about = "Align exposure-bracketed image stacks with median threshold bitmaps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct AlignOpts {
    /// Pyramid levels (clamped so the smallest level stays at least 16x16)
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    pub levels: usize,
    /// Pixels within this distance of the median are ignored
    #[arg(long = "tol", default_value_t = DEFAULT_NOISE_TOLERANCE)]
    pub noise_tolerance: u8,
    /// Bitmap storage: one byte per pixel or one bit per pixel
    #[arg(long, default_value = "packed", value_parser = parse_layout)]
    pub layout: Layout,
    /// Worker threads [default: logical CPU count]
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_layout(s: &str) -> Result<Layout, String> {
    s.parse::<Layout>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align images onto the first one and print each image's offset.
    ///
    /// Offsets are printed as "dx dy", one line per input in input order:
    /// the displacement of that image's content relative to the first image,
    /// with positive dy pointing down. Aligned copies are written as
    /// <stem>_aligned.<ext>; uncovered pixels are black. Pixels are excluded
    /// from matching when within the tolerance of the median, so the
    /// exclusion bitmap marks reliable pixels with 1.
    Align {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short = 'o', long = "output")]
        output_dir: PathBuf,
        #[command(flatten)]
        opts: AlignOpts,
        /// Write a JSON report with every tested offset
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a synthetic stack with known offsets and exposures.
    Generate {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        count: usize,
        /// Seed for random shifts (and exposures unless given)
        #[arg(long, conflicts_with = "shifts")]
        seed: Option<u64>,
        /// Explicit shifts between consecutive frames: "dx,dy;dx,dy;..."
        #[arg(long, allow_hyphen_values = true)]
        shifts: Option<String>,
        /// Largest random shift per axis between consecutive frames
        #[arg(long, default_value_t = 30)]
        max_shift: u32,
        /// Explicit exposures, one per frame: "gain:gamma;..."
        #[arg(long, conflicts_with = "flat")]
        exposures: Option<String>,
        /// Keep every frame at the base exposure
        #[arg(long)]
        flat: bool,
        #[arg(short = 'o', long = "output")]
        output_dir: PathBuf,
    },
    /// Time alignment of the first 2, 3, ..., N inputs (disk I/O excluded).
    Bench {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = BenchFormat::Csv)]
        format: BenchFormat,
        #[command(flatten)]
        opts: AlignOpts,
    },
    /// Write a procedural test scene usable as a generator base.
    Scene {
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 480)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Validated settings for an alignment or benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub levels: usize,
    pub noise_tolerance: u8,
    pub layout: Layout,
    pub workers: usize,
    pub repetitions: usize,
    pub report_path: Option<PathBuf>,
}

impl CliConfig {
    pub fn new(inputs: Vec<PathBuf>, output_dir: PathBuf) -> Self {
        CliConfig {
            inputs,
            output_dir,
            levels: DEFAULT_LEVELS,
            noise_tolerance: DEFAULT_NOISE_TOLERANCE,
            layout: Layout::default(),
            workers: default_workers(),
            repetitions: 1,
            report_path: None,
        }
    }

    fn with_opts(mut self, opts: &AlignOpts) -> Self {
        self.levels = opts.levels;
        self.noise_tolerance = opts.noise_tolerance;
        self.layout = opts.layout;
        self.workers = opts.workers.unwrap_or_else(default_workers);
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.inputs.len();
        if !(2..=MAX_INPUTS).contains(&n) {
            return Err(CliError::Usage(format!(
                "between 2 and {MAX_INPUTS} input images are required, got {n}"
            )));
        }
        if !(1..=MAX_LEVELS).contains(&self.levels) {
            return Err(CliError::Usage(format!(
                "--levels must be in 1..={MAX_LEVELS}, got {}",
                self.levels
            )));
        }
        if self.noise_tolerance > MAX_TOLERANCE {
            return Err(CliError::Usage(format!(
                "--tol must be in 0..={MAX_TOLERANCE}, got {}",
                self.noise_tolerance
            )));
        }
        if self.workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(CliError::Usage("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    pub fn align_config(&self) -> AlignConfig {
        AlignConfig {
            levels: self.levels,
            noise_tolerance: self.noise_tolerance,
            layout: self.layout,
            workers: self.workers,
        }
    }
}

/// `<output_dir>/<stem>_aligned.<ext>`; inputs that are not PNG become PPM.
pub fn aligned_path(input: &Path, output_dir: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    let ext = ImageFormat::from_path(input)
        .unwrap_or(ImageFormat::Ppm)
        .extension();
    output_dir.join(format!("{stem}_aligned.{ext}"))
}

/// Deletes files written so far unless disarmed.
struct Cleanup {
    written: Vec<PathBuf>,
    armed: bool,
}

impl Drop for Cleanup {
    fn drop(&mut self) {
        if self.armed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Aligns the inputs, writes the outputs and prints one "dx dy" line per
/// input to `out`. Returns the cumulative offsets.
pub fn run_align(config: &CliConfig, out: &mut dyn Write) -> Result<Vec<ShiftOffset>, CliError> {
    config.validate()?;
    let outputs: Vec<PathBuf> = config
        .inputs
        .iter()
        .map(|p| aligned_path(p, &config.output_dir))
        .collect();
    let mut seen = HashSet::new();
    if let Some(dup) = outputs.iter().find(|p| !seen.insert(*p)) {
        return Err(CliError::Usage(format!(
            "two inputs would both be written to {}",
            dup.display()
        )));
    }

    let images = config
        .inputs
        .iter()
        .map(|p| decode_image(p))
        .collect::<Result<Vec<_>, _>>()?;
    let align_config = config.align_config();
    let (aligned, alignment) = Aligner::new(align_config)?.align_stack(&images)?;

    let report = Report::new(
        config
            .inputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        &align_config,
        &alignment,
    );
    let value = report.to_value();
    validate_report(&value).map_err(|problems| {
        CliError::Internal(format!("report failed validation: {}", problems.join("; ")))
    })?;

    fs::create_dir_all(&config.output_dir).map_err(|e| CliError::io(&config.output_dir, e))?;
    let mut cleanup = Cleanup {
        written: Vec::new(),
        armed: true,
    };
    for (img, path) in aligned.iter().zip(&outputs) {
        cleanup.written.push(path.clone());
        encode_image(img, path)?;
    }
    if let Some(path) = &config.report_path {
        cleanup.written.push(path.clone());
        let text = serde_json::to_string_pretty(&value).expect("report serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
    }

    let mut text = String::new();
    for c in &alignment.cumulative {
        text.push_str(&format!("{} {}\n", c.dx, c.dy));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    cleanup.armed = false;
    Ok(alignment.cumulative)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout_err = |e| CliError::io(Path::new("<stdout>"), e);
    match cli.command {
        Command::Align {
            inputs,
            output_dir,
            opts,
            report,
        } => {
            let mut config = CliConfig::new(inputs, output_dir).with_opts(&opts);
            config.report_path = report;
            run_align(&config, out)?;
        }
        Command::Generate {
            base,
            count,
            seed,
            shifts,
            max_shift,
            exposures,
            flat,
            output_dir,
        } => {
            let shift_plan = match &shifts {
                Some(s) => ShiftPlan::Explicit(synth::parse_shifts(s).map_err(CliError::Usage)?),
                None => ShiftPlan::Random {
                    seed: seed.unwrap_or(0),
                    max_shift,
                },
            };
            let exposure_plan = match (&exposures, flat, seed) {
                (Some(e), _, _) => {
                    ExposurePlan::Explicit(synth::parse_exposures(e).map_err(CliError::Usage)?)
                }
                (None, true, _) | (None, false, None) => ExposurePlan::Identity,
                (None, false, Some(seed)) => ExposurePlan::Random { seed },
            };
            let spec = SyntheticSpec {
                base,
                count,
                shifts: shift_plan,
                exposures: exposure_plan,
            };
            let manifest = synth::run_generate(&spec, &output_dir)?;
            for [dx, dy] in &manifest.cumulative {
                writeln!(out, "{dx} {dy}").map_err(stdout_err)?;
            }
        }
        Command::Bench {
            inputs,
            reps,
            format,
            opts,
        } => {
            let mut config = CliConfig::new(inputs, PathBuf::new()).with_opts(&opts);
            config.repetitions = reps;
            config.validate()?;
            let images = config
                .inputs
                .iter()
                .map(|p| decode_image(p))
                .collect::<Result<Vec<_>, _>>()?;
            let table = run_bench(&images, config.align_config(), config.repetitions)?;
            let text = match format {
                BenchFormat::Csv => table.to_csv(),
                BenchFormat::Json => table.to_json() + "\n",
            };
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
        }
        Command::Scene {
            output,
            width,
            height,
            seed,
        } => {
            if width < synth::MIN_BASE_SIDE || height < synth::MIN_BASE_SIDE {
                return Err(CliError::Usage(format!(
                    "scene must be at least {0}x{0}",
                    synth::MIN_BASE_SIDE
                )));
            }
            encode_image(&synth::natural_scene(width, height, seed), &output)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
