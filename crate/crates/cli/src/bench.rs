//! Timing sweep over stack sizes `2..=N`, in memory only.

use mtb_align::{AlignConfig, Aligner, RgbImage, StageTimings, TimingReport};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub count: usize,
    pub repetitions: usize,
    pub mean_total_ms: f64,
    pub stddev_total_ms: f64,
    pub grayscale_ms: f64,
    pub pyramid_ms: f64,
    pub threshold_ms: f64,
    pub search_ms: f64,
    pub shift_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTable {
    pub width: usize,
    pub height: usize,
    pub repetitions: usize,
    pub workers: usize,
    pub layout: String,
    pub rows: Vec<BenchRow>,
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

impl BenchTable {
    /// Fit of mean total time against the number of pairs, `count - 1`.
    pub fn fit(&self) -> LinearFit {
        let xs: Vec<f64> = self.rows.iter().map(|r| (r.count - 1) as f64).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.mean_total_ms).collect();
        linear_fit(&xs, &ys)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "count,repetitions,mean_total_ms,stddev_total_ms,grayscale_ms,pyramid_ms,threshold_ms,search_ms,shift_ms\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}\n",
                r.count,
                r.repetitions,
                r.mean_total_ms,
                r.stddev_total_ms,
                r.grayscale_ms,
                r.pyramid_ms,
                r.threshold_ms,
                r.search_ms,
                r.shift_ms
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            #[serde(flatten)]
            table: &'a BenchTable,
            fit: Option<LinearFit>,
        }
        let fit = (self.rows.len() >= 2).then(|| self.fit());
        serde_json::to_string_pretty(&Out { table: self, fit }).expect("table serializes")
    }
}

/// Times alignment of the first `n` images for every `n` in `2..=images.len()`.
///
/// Repetitions are interleaved: each round runs every stack size once, so
/// slow drift in machine speed is spread over all rows instead of biasing
/// whichever size happened to run during it.
pub fn run_bench(
    images: &[RgbImage],
    config: AlignConfig,
    repetitions: usize,
) -> Result<BenchTable, CliError> {
    if images.len() < 2 {
        return Err(CliError::Usage("bench needs at least two images".into()));
    }
    if repetitions == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let aligner = Aligner::new(config)?;
    // Untimed pass so first-touch page faults do not land in the first round.
    let (_, warm) = aligner.align_stack(images)?;
    let counts: Vec<usize> = (2..=images.len()).collect();
    let mut runs: Vec<Vec<StageTimings>> = vec![Vec::with_capacity(repetitions); counts.len()];
    for _ in 0..repetitions {
        for (slot, &n) in runs.iter_mut().zip(&counts) {
            let (_, a) = aligner.align_stack(&images[..n])?;
            if a.cumulative[..] != warm.cumulative[..n] {
                return Err(CliError::Internal(
                    "offsets changed between repetitions".into(),
                ));
            }
            slot.push(a.timings);
        }
    }
    let rows = counts
        .iter()
        .zip(runs)
        .map(|(&n, r)| {
            let t = TimingReport::from_runs(n, r);
            BenchRow {
                count: n,
                repetitions: t.repetitions,
                mean_total_ms: t.total.mean,
                stddev_total_ms: t.total.stddev,
                grayscale_ms: t.grayscale.mean,
                pyramid_ms: t.pyramid.mean,
                threshold_ms: t.threshold.mean,
                search_ms: t.search.mean,
                shift_ms: t.shift.mean,
            }
        })
        .collect();
    Ok(BenchTable {
        width: images[0].width(),
        height: images[0].height(),
        repetitions,
        workers: config.workers,
        layout: config.layout.name().to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_fits_perfectly() {
        let f = linear_fit(&[1.0, 2.0, 3.0, 4.0], &[5.0, 7.0, 9.0, 11.0]);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r_squared_by_hand() {
        // Mean 2, residuals of the fit y = 1.5x + 0 are (0.5, -1, 0.5).
        let f = linear_fit(&[1.0, 2.0, 3.0], &[2.0, 2.0, 5.0]);
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.r_squared - (1.0 - 1.5 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn sweep_has_one_row_per_count() {
        let img = crate::synth::natural_scene(96, 80, 3);
        let images = vec![img; 4];
        let cfg = AlignConfig {
            workers: 1,
            ..AlignConfig::default()
        };
        let t = run_bench(&images, cfg, 3).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(
            t.rows.iter().map(|r| r.count).collect::<Vec<_>>(),
            vec![2, 3, 4]
        );
        assert!(t.rows.iter().all(|r| r.repetitions == 3));
        assert_eq!(t.to_csv().lines().count(), 4);
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["repetitions"], 3);
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    }
}
