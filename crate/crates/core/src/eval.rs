//! Batch evaluation: per-expression success rates, confusion matrix and
//! classification timing.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::classify;
use crate::decode::load_gray;
use crate::error::{Error, Result};
use crate::model::{CropSet, Expression, ExpressionModel, LabeledImage, TrainingManifest};

/// Whether the test images were also used for training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Disjoint,
    Overlapping,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionStats {
    pub expression: Expression,
    pub tested: u32,
    pub correct: u32,
    /// `correct / tested`, absent when nothing was tested.
    pub success_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub image: String,
    pub expected: Expression,
    pub decided: Expression,
    pub tie_broken: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryError {
    pub index: usize,
    pub image: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: SplitMode,
    pub per_expression: Vec<ExpressionStats>,
    /// `confusion[true][decided]`, both in canonical expression order.
    pub confusion: [[u32; Expression::COUNT]; Expression::COUNT],
    pub tested: u32,
    pub correct: u32,
    pub overall_rate: Option<f64>,
    pub tie_count: u32,
    pub mean_classify_seconds: Option<f64>,
    pub max_classify_seconds: Option<f64>,
    pub outcomes: Vec<SampleOutcome>,
    pub errors: Vec<EntryError>,
}

impl EvalReport {
    fn from_outcomes(split: SplitMode, outcomes: Vec<SampleOutcome>, errors: Vec<EntryError>) -> Self {
        let mut confusion = [[0u32; Expression::COUNT]; Expression::COUNT];
        for o in &outcomes {
            confusion[o.expected.index()][o.decided.index()] += 1;
        }
        let per_expression: Vec<ExpressionStats> = Expression::ALL
            .into_iter()
            .map(|e| {
                let tested: u32 = confusion[e.index()].iter().sum();
                let correct = confusion[e.index()][e.index()];
                ExpressionStats {
                    expression: e,
                    tested,
                    correct,
                    success_rate: ratio(correct, tested),
                }
            })
            .collect();
        let tested: u32 = per_expression.iter().map(|s| s.tested).sum();
        let correct: u32 = per_expression.iter().map(|s| s.correct).sum();
        let times: Vec<f64> = outcomes.iter().map(|o| o.seconds).collect();
        EvalReport {
            split,
            per_expression,
            confusion,
            tested,
            correct,
            overall_rate: ratio(correct, tested),
            tie_count: outcomes.iter().filter(|o| o.tie_broken).count() as u32,
            mean_classify_seconds: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
            max_classify_seconds: times.iter().copied().reduce(f64::max),
            outcomes,
            errors,
        }
    }

    /// Builds a report from bare counts, e.g. to render published figures.
    pub fn from_counts(counts: &[(Expression, u32, u32)]) -> Self {
        let mut outcomes = Vec::new();
        for &(e, tested, correct) in counts {
            for i in 0..tested {
                let decided = if i < correct {
                    e
                } else {
                    // any other expression
                    Expression::ALL[(e.index() + 1) % Expression::COUNT]
                };
                outcomes.push(SampleOutcome {
                    index: outcomes.len(),
                    image: String::new(),
                    expected: e,
                    decided,
                    tie_broken: false,
                    seconds: 0.0,
                });
            }
        }
        let mut report = EvalReport::from_outcomes(SplitMode::Unknown, outcomes, Vec::new());
        report.outcomes.clear();
        report.mean_classify_seconds = None;
        report.max_classify_seconds = None;
        report
    }

    pub fn stats(&self, expression: Expression) -> &ExpressionStats {
        &self.per_expression[expression.index()]
    }

    /// Copy with the timing fields cleared, for equality checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.mean_classify_seconds = None;
        r.max_classify_seconds = None;
        r.outcomes.iter_mut().for_each(|o| o.seconds = 0.0);
        r
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("report", e.to_string()))
    }

    /// Success-rate table followed by the confusion matrix.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>22} {:>24} {:>13}",
            "Expression", "Images experimented", "Correct recognitions", "Success rate"
        );
        for s in &self.per_expression {
            let _ = writeln!(
                out,
                "{:<10} {:>22} {:>24} {:>13}",
                s.expression.name(),
                s.tested,
                s.correct,
                format_rate(s.success_rate)
            );
        }
        let _ = writeln!(
            out,
            "{:<10} {:>22} {:>24} {:>13}",
            "Overall",
            self.tested,
            self.correct,
            format_rate(self.overall_rate)
        );

        out.push_str("\nConfusion matrix (rows: true expression, columns: decided)\n");
        let _ = write!(out, "{:<10}", "");
        for e in Expression::ALL {
            let _ = write!(out, " {:>9}", e.name());
        }
        out.push('\n');
        for (e, row) in Expression::ALL.iter().zip(&self.confusion) {
            let _ = write!(out, "{:<10}", e.name());
            for c in row {
                let _ = write!(out, " {c:>9}");
            }
            out.push('\n');
        }

        out.push('\n');
        let _ = writeln!(
            out,
            "Split: {}",
            match self.split {
                SplitMode::Disjoint => "disjoint from training",
                SplitMode::Overlapping => "overlaps training",
                SplitMode::Unknown => "unknown",
            }
        );
        let _ = writeln!(out, "Vote ties broken: {}", self.tie_count);
        if let (Some(mean), Some(max)) = (self.mean_classify_seconds, self.max_classify_seconds) {
            let _ = writeln!(out, "Classification time: mean {mean:.4} s, max {max:.4} s");
        }
        if !self.errors.is_empty() {
            let _ = writeln!(out, "Failed entries: {}", self.errors.len());
            for e in &self.errors {
                let _ = writeln!(out, "  #{} {}: {}", e.index, e.image, e.message);
            }
        }
        out
    }
}

fn ratio(num: u32, den: u32) -> Option<f64> {
    (den > 0).then(|| f64::from(num) / f64::from(den))
}

/// Percentage with no decimals when whole, one otherwise; `-` when absent.
pub fn format_rate(rate: Option<f64>) -> String {
    match rate {
        None => "-".to_string(),
        Some(r) => {
            let pct = r * 100.0;
            if (pct - pct.round()).abs() < 1e-9 {
                format!("{}%", pct.round())
            } else {
                format!("{pct:.1}%")
            }
        }
    }
}

/// Classifies every decoded sample.
pub fn evaluate_samples(model: &ExpressionModel, samples: &[LabeledImage], split: SplitMode) -> EvalReport {
    let results: Vec<std::result::Result<SampleOutcome, EntryError>> = samples
        .par_iter()
        .enumerate()
        .map(|(index, s)| run_one(model, index, String::new(), &s.image, &s.crops, s.expression))
        .collect();
    collect(split, results)
}

/// Loads and classifies every manifest entry. Entries that fail to load or
/// classify are listed in the report rather than aborting the run.
/// `training`, when given, decides the reported split mode.
pub fn evaluate(
    model: &ExpressionModel,
    manifest: &TrainingManifest,
    training: Option<&TrainingManifest>,
) -> EvalReport {
    let split = training.map_or(SplitMode::Unknown, |t| split_mode(manifest, t));
    let results: Vec<_> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(index, entry)| {
            let name = entry.image.display().to_string();
            match load_gray(&entry.image) {
                Ok(img) => run_one(model, index, name, &img, &entry.crops, entry.expression),
                Err(e) => Err(EntryError {
                    index,
                    image: name,
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    collect(split, results)
}

fn run_one(
    model: &ExpressionModel,
    index: usize,
    image: String,
    img: &crate::imaging::GrayImage,
    crops: &CropSet,
    expected: Expression,
) -> std::result::Result<SampleOutcome, EntryError> {
    let start = Instant::now();
    match classify(img, crops, model) {
        Ok(r) => Ok(SampleOutcome {
            index,
            image,
            expected,
            decided: r.decided,
            tie_broken: r.tie_broken,
            seconds: start.elapsed().as_secs_f64(),
        }),
        Err(e) => Err(EntryError {
            index,
            image,
            message: e.to_string(),
        }),
    }
}

fn collect(split: SplitMode, results: Vec<std::result::Result<SampleOutcome, EntryError>>) -> EvalReport {
    let mut outcomes = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => errors.push(e),
        }
    }
    EvalReport::from_outcomes(split, outcomes, errors)
}

/// Overlapping when any test image path also appears in training.
pub fn split_mode(test: &TrainingManifest, training: &TrainingManifest) -> SplitMode {
    let key = |p: &Path| -> PathBuf { p.canonicalize().unwrap_or_else(|_| p.to_path_buf()) };
    let train: BTreeSet<PathBuf> = training.entries.iter().map(|e| key(&e.image)).collect();
    if test.entries.iter().any(|e| train.contains(&key(&e.image))) {
        SplitMode::Overlapping
    } else {
        SplitMode::Disjoint
    }
}
