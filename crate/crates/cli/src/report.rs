//! JSON run report and its validator.
//!
//! ```text
//! {
//!   "images":     [path, ...],
//!   "config":     {"levels", "noise_tolerance", "layout", "workers", "fill", "exclusion"},
//!   "pairwise":   [{"dx", "dy", "traces": [{"level", "candidates": [[dx, dy, err] x 9], "chosen": [dx, dy]}]}],
//!   "cumulative": [[dx, dy], ...],
//!   "timings_ms": {"grayscale", "pyramid", "threshold", "search", "shift", "total"}
//! }
//! ```
//!
//! Trace offsets are at the scale of their level; `dx`, `dy` and
//! `cumulative` are full resolution. Positive `dy` points down.

use mtb_align::{
    AlignConfig, AlignmentResult, StackAlignment, StageTimings, CANDIDATES_PER_LEVEL, FILL_RGB,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const EXCLUSION_POLARITY: &str = "reliable: |p - median| > noise_tolerance";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub images: Vec<String>,
    pub config: ReportConfig,
    pub pairwise: Vec<PairReport>,
    pub cumulative: Vec<[i32; 2]>,
    pub timings_ms: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub levels: usize,
    pub noise_tolerance: u8,
    pub layout: String,
    pub workers: usize,
    pub fill: [u8; 3],
    pub exclusion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub dx: i32,
    pub dy: i32,
    pub traces: Vec<TraceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub level: usize,
    pub candidates: Vec<[i64; 3]>,
    pub chosen: [i32; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub grayscale: f64,
    pub pyramid: f64,
    pub threshold: f64,
    pub search: f64,
    pub shift: f64,
    pub total: f64,
}

impl From<StageTimings> for Timings {
    fn from(t: StageTimings) -> Self {
        Timings {
            grayscale: t.grayscale,
            pyramid: t.pyramid,
            threshold: t.threshold,
            search: t.search,
            shift: t.shift,
            total: t.total,
        }
    }
}

fn pair_report(r: &AlignmentResult) -> PairReport {
    PairReport {
        dx: r.offset.dx,
        dy: r.offset.dy,
        traces: r
            .traces
            .iter()
            .map(|t| TraceReport {
                level: t.level,
                candidates: t
                    .candidates
                    .iter()
                    .map(|c| [c.offset.dx as i64, c.offset.dy as i64, c.error as i64])
                    .collect(),
                chosen: [t.chosen.dx, t.chosen.dy],
            })
            .collect(),
    }
}

impl Report {
    pub fn new(images: Vec<String>, config: &AlignConfig, alignment: &StackAlignment) -> Self {
        Report {
            images,
            config: ReportConfig {
                levels: config.levels,
                noise_tolerance: config.noise_tolerance,
                layout: config.layout.name().to_string(),
                workers: config.workers,
                fill: FILL_RGB,
                exclusion: EXCLUSION_POLARITY.to_string(),
            },
            pairwise: alignment.pairwise.iter().map(pair_report).collect(),
            cumulative: alignment.cumulative.iter().map(|c| [c.dx, c.dy]).collect(),
            timings_ms: alignment.timings.into(),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Everything except the timings, for comparing runs.
    pub fn traces_json(&self) -> String {
        serde_json::to_string(&(&self.images, &self.pairwise, &self.cumulative))
            .expect("serializes")
    }
}

struct Checker {
    problems: Vec<String>,
}

impl Checker {
    fn fail(&mut self, at: &str, what: impl std::fmt::Display) {
        self.problems.push(format!("{at}: {what}"));
    }

    fn object<'a>(
        &mut self,
        v: &'a Value,
        at: &str,
        keys: &[&str],
    ) -> Option<&'a serde_json::Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.fail(at, "expected an object");
            return None;
        };
        for k in keys {
            if !obj.contains_key(*k) {
                self.fail(at, format_args!("missing key {k:?}"));
            }
        }
        for k in obj.keys() {
            if !keys.contains(&k.as_str()) {
                self.fail(at, format_args!("unexpected key {k:?}"));
            }
        }
        Some(obj)
    }

    fn array<'a>(&mut self, v: Option<&'a Value>, at: &str) -> &'a [Value] {
        match v.and_then(Value::as_array) {
            Some(a) => a,
            None => {
                if v.is_some() {
                    self.fail(at, "expected an array");
                }
                &[]
            }
        }
    }

    fn int(&mut self, v: Option<&Value>, at: &str, min: i64) -> Option<i64> {
        match v.and_then(Value::as_i64) {
            Some(i) if i >= min => Some(i),
            Some(i) => {
                self.fail(at, format_args!("{i} is below {min}"));
                None
            }
            None => {
                if v.is_some() {
                    self.fail(at, "expected an integer");
                }
                None
            }
        }
    }

    fn int_tuple(&mut self, v: &Value, at: &str, len: usize) -> Option<Vec<i64>> {
        let items = v.as_array().filter(|a| a.len() == len);
        let ints: Option<Vec<i64>> = items.and_then(|a| a.iter().map(Value::as_i64).collect());
        if ints.is_none() {
            self.fail(at, format_args!("expected {len} integers"));
        }
        ints
    }
}

/// Checks a report value against the documented schema. Beyond shape, it
/// checks the cross-field rules a consumer relies on: one pair fewer than
/// images, nine candidates per level, the chosen step among the candidates,
/// and `cumulative` being the prefix sum of the pairwise offsets.
pub fn validate_report(v: &Value) -> Result<(), Vec<String>> {
    let mut c = Checker {
        problems: Vec::new(),
    };
    let Some(root) = c.object(
        v,
        "report",
        &["images", "config", "pairwise", "cumulative", "timings_ms"],
    ) else {
        return Err(c.problems);
    };

    let images = c.array(root.get("images"), "images");
    if images.iter().any(|i| !i.is_string()) {
        c.fail("images", "entries must be strings");
    }
    if images.len() < 2 {
        c.fail("images", "at least two images are required");
    }

    if let Some(cfg) = root.get("config") {
        if let Some(obj) = c.object(
            cfg,
            "config",
            &[
                "levels",
                "noise_tolerance",
                "layout",
                "workers",
                "fill",
                "exclusion",
            ],
        ) {
            c.int(obj.get("levels"), "config.levels", 1);
            c.int(obj.get("noise_tolerance"), "config.noise_tolerance", 0);
            c.int(obj.get("workers"), "config.workers", 1);
            match obj.get("layout").and_then(Value::as_str) {
                Some("bytemap" | "packed") => {}
                _ => c.fail("config.layout", "expected \"bytemap\" or \"packed\""),
            }
            if let Some(fill) = obj.get("fill") {
                if let Some(f) = c.int_tuple(fill, "config.fill", 3) {
                    if f.iter().any(|&x| !(0..=255).contains(&x)) {
                        c.fail("config.fill", "values must be 0..=255");
                    }
                }
            }
            if obj.get("exclusion").is_some_and(|e| !e.is_string()) {
                c.fail("config.exclusion", "expected a string");
            }
        }
    }

    let pairwise = c.array(root.get("pairwise"), "pairwise");
    if !images.is_empty() && pairwise.len() + 1 != images.len() {
        c.fail(
            "pairwise",
            format_args!("{} entries for {} images", pairwise.len(), images.len()),
        );
    }
    let mut offsets = Vec::new();
    for (i, p) in pairwise.iter().enumerate() {
        let at = format!("pairwise[{i}]");
        let Some(obj) = c.object(p, &at, &["dx", "dy", "traces"]) else {
            continue;
        };
        let dx = c.int(obj.get("dx"), &format!("{at}.dx"), i64::MIN);
        let dy = c.int(obj.get("dy"), &format!("{at}.dy"), i64::MIN);
        offsets.push(dx.zip(dy));
        let traces = c.array(obj.get("traces"), &format!("{at}.traces"));
        if traces.is_empty() {
            c.fail(&at, "no traces");
        }
        for (j, t) in traces.iter().enumerate() {
            let at = format!("{at}.traces[{j}]");
            let Some(tobj) = c.object(t, &at, &["level", "candidates", "chosen"]) else {
                continue;
            };
            let level = c.int(tobj.get("level"), &format!("{at}.level"), 0);
            if level.is_some_and(|l| l as usize != traces.len() - 1 - j) {
                c.fail(&at, "levels must run from deepest to 0");
            }
            let cands = c.array(tobj.get("candidates"), &format!("{at}.candidates"));
            if cands.len() != CANDIDATES_PER_LEVEL {
                c.fail(
                    &at,
                    format_args!(
                        "{} candidates, expected {CANDIDATES_PER_LEVEL}",
                        cands.len()
                    ),
                );
            }
            let cands: Vec<_> = cands
                .iter()
                .enumerate()
                .filter_map(|(k, x)| c.int_tuple(x, &format!("{at}.candidates[{k}]"), 3))
                .collect();
            if cands.iter().any(|x| x[2] < 0) {
                c.fail(&at, "negative error");
            }
            if let Some(ch) = tobj
                .get("chosen")
                .and_then(|x| c.int_tuple(x, &format!("{at}.chosen"), 2))
            {
                match cands.iter().find(|x| x[0] == ch[0] && x[1] == ch[1]) {
                    None => c.fail(&at, "chosen offset is not a candidate"),
                    Some(hit) if cands.iter().any(|x| x[2] < hit[2]) => {
                        c.fail(&at, "chosen candidate does not have the lowest error")
                    }
                    Some(_) => {}
                }
                if j + 1 == traces.len()
                    && offsets.last().copied().flatten() != Some((ch[0], ch[1]))
                {
                    c.fail(&at, "level 0 choice differs from the pair offset");
                }
            }
        }
    }

    let cumulative = c.array(root.get("cumulative"), "cumulative");
    if !images.is_empty() && cumulative.len() != images.len() {
        c.fail(
            "cumulative",
            format_args!("{} entries for {} images", cumulative.len(), images.len()),
        );
    }
    let mut acc = Some((0i64, 0i64));
    for (i, x) in cumulative.iter().enumerate() {
        let Some(v) = c.int_tuple(x, &format!("cumulative[{i}]"), 2) else {
            continue;
        };
        if i > 0 {
            acc = acc
                .zip(offsets.get(i - 1).copied().flatten())
                .map(|(a, o)| (a.0 + o.0, a.1 + o.1));
        }
        if acc.is_some_and(|a| a != (v[0], v[1])) {
            c.fail(
                &format!("cumulative[{i}]"),
                "not the prefix sum of the pairwise offsets",
            );
        }
    }

    if let Some(t) = root.get("timings_ms") {
        let keys = [
            "grayscale",
            "pyramid",
            "threshold",
            "search",
            "shift",
            "total",
        ];
        if let Some(obj) = c.object(t, "timings_ms", &keys) {
            for k in keys {
                if obj
                    .get(k)
                    .is_some_and(|x| !x.as_f64().is_some_and(|f| f >= 0.0))
                {
                    c.fail(&format!("timings_ms.{k}"), "expected a non-negative number");
                }
            }
        }
    }

    if c.problems.is_empty() {
        Ok(())
    } else {
        Err(c.problems)
    }
}
