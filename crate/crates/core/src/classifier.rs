//! Distance tables, per-eigenvector voting and the final decision.
//!
//! For each region the test image's k-th eigenvector is compared with every
//! expression's k-th reference eigenvector. The nearest expression wins that
//! column, giving five votes per region and 25 over a full face.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{extract_basis, EigenBasis, BASIS_SIZE};
use crate::imaging::{GrayImage, RegionKind};
use crate::model::{region_images, CropSet, Expression, ExpressionModel};

/// `sqrt(sum((a_i - b_i)^2))`.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "distance between vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt())
}

/// Distances for one region: rows are expressions, columns eigenvector indices.
#[derive(Clone, Debug, PartialEq)]
pub struct EdMatrix {
    region: RegionKind,
    ed: [[f64; BASIS_SIZE]; Expression::COUNT],
}

impl EdMatrix {
    pub fn new(region: RegionKind, ed: [[f64; BASIS_SIZE]; Expression::COUNT]) -> Result<Self> {
        for (e, row) in ed.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::shape(format!(
                        "{region} ED[{}][{}] = {v} must be finite and non-negative",
                        Expression::ALL[e],
                        k + 1
                    )));
                }
            }
        }
        Ok(EdMatrix { region, ed })
    }

    pub fn region(&self) -> RegionKind {
        self.region
    }

    pub fn get(&self, expression: Expression, k: usize) -> f64 {
        self.ed[expression.index()][k]
    }

    pub fn rows(&self) -> &[[f64; BASIS_SIZE]; Expression::COUNT] {
        &self.ed
    }

    /// Same table with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        EdMatrix::new(self.region, self.ed.map(|row| row.map(|v| v * factor)))
    }

    pub fn with_entry(&self, expression: Expression, k: usize, value: f64) -> Result<Self> {
        let mut ed = self.ed;
        ed[expression.index()][k] = value;
        EdMatrix::new(self.region, ed)
    }

    /// Parses a replay fixture: six rows of five distances in canonical
    /// expression order. A row may start with its expression name; `#`
    /// starts a comment.
    pub fn parse_fixture(text: &str, region: RegionKind, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::format(origin, format!("line {line}: {msg}"));
        let mut ed = [[0.0; BASIS_SIZE]; Expression::COUNT];
        let mut row = 0;
        for (n, raw) in text.lines().enumerate() {
            let n = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if row == Expression::COUNT {
                return Err(err(n, "more than six rows".into()));
            }
            let mut tokens: Vec<&str> = line.split_whitespace().collect();
            if let Some(first) = tokens.first() {
                if first.parse::<f64>().is_err() {
                    let label: Expression = first.parse().map_err(|_| err(n, format!("bad token {first:?}")))?;
                    if label != Expression::ALL[row] {
                        return Err(err(
                            n,
                            format!("row {} must be {}, found {label}", row + 1, Expression::ALL[row]),
                        ));
                    }
                    tokens.remove(0);
                }
            }
            if tokens.len() != BASIS_SIZE {
                return Err(err(n, format!("expected {BASIS_SIZE} distances, got {}", tokens.len())));
            }
            for (k, tok) in tokens.iter().enumerate() {
                ed[row][k] = tok.parse().map_err(|_| err(n, format!("bad distance {tok:?}")))?;
            }
            row += 1;
        }
        if row != Expression::COUNT {
            return Err(Error::format(origin, format!("expected 6 rows, got {row}")));
        }
        EdMatrix::new(region, ed).map_err(|e| Error::format(origin, e.to_string()))
    }

    /// Writes the table in replay-fixture form; values round-trip exactly.
    pub fn to_fixture(&self) -> String {
        let mut out = format!("# {}\n", self.region);
        for (e, row) in Expression::ALL.iter().zip(&self.ed) {
            let _ = write!(out, "{:<9}", e.name());
            for v in row {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Distance table between a test basis and every expression's reference
/// basis for the same region, pairing eigenvectors by index.
pub fn region_ed_matrix(test: &EigenBasis, model: &ExpressionModel, region: RegionKind) -> Result<EdMatrix> {
    if test.region() != region {
        return Err(Error::shape(format!(
            "test basis is for {}, asked for {region}",
            test.region()
        )));
    }
    let mut ed = [[0.0; BASIS_SIZE]; Expression::COUNT];
    for e in Expression::ALL {
        let reference = model.basis(e, region);
        for (k, cell) in ed[e.index()].iter_mut().enumerate() {
            *cell = euclidean_distance(test.vector(k), reference.vector(k))?;
        }
    }
    EdMatrix::new(region, ed)
}

/// The winning expression of each column; exact ties go to the earlier expression.
pub fn region_votes(ed: &EdMatrix) -> [Expression; BASIS_SIZE] {
    std::array::from_fn(|k| {
        let mut best = Expression::Surprise;
        for e in Expression::ALL {
            if ed.get(e, k) < ed.get(best, k) {
                best = e;
            }
        }
        best
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoteTable {
    winners: Vec<(RegionKind, [Expression; BASIS_SIZE])>,
    totals: [u32; Expression::COUNT],
}

impl VoteTable {
    pub fn winners(&self) -> &[(RegionKind, [Expression; BASIS_SIZE])] {
        &self.winners
    }

    pub fn region_winners(&self, region: RegionKind) -> Option<&[Expression; BASIS_SIZE]> {
        self.winners.iter().find(|(r, _)| *r == region).map(|(_, w)| w)
    }

    /// Votes per expression within one region.
    pub fn region_counts(&self, region: RegionKind) -> [u32; Expression::COUNT] {
        let mut counts = [0; Expression::COUNT];
        if let Some(w) = self.region_winners(region) {
            for e in w {
                counts[e.index()] += 1;
            }
        }
        counts
    }

    pub fn totals(&self) -> &[u32; Expression::COUNT] {
        &self.totals
    }

    pub fn total(&self, expression: Expression) -> u32 {
        self.totals[expression.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationResult {
    pub decided: Expression,
    pub votes: VoteTable,
    pub ed_matrices: Vec<EdMatrix>,
    /// Set when several expressions shared the top vote count.
    pub tie_broken: bool,
}

impl ClassificationResult {
    pub fn ed_matrix(&self, region: RegionKind) -> Option<&EdMatrix> {
        self.ed_matrices.iter().find(|m| m.region() == region)
    }
}

/// Votes over all five regions and decides the expression.
pub fn aggregate(ed_matrices: Vec<EdMatrix>) -> Result<ClassificationResult> {
    let missing: Vec<RegionKind> = RegionKind::ALL
        .into_iter()
        .filter(|r| !ed_matrices.iter().any(|m| m.region() == *r))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingRegions { missing });
    }
    aggregate_regions(ed_matrices)
}

/// Like [`aggregate`] but accepts any non-empty set of distinct regions.
///
/// The expression with the most votes wins. Among tied expressions the one
/// whose winning distances sum lowest wins, then the earlier expression.
pub fn aggregate_regions(mut ed_matrices: Vec<EdMatrix>) -> Result<ClassificationResult> {
    if ed_matrices.is_empty() {
        return Err(Error::MissingRegions {
            missing: RegionKind::ALL.to_vec(),
        });
    }
    ed_matrices.sort_by_key(EdMatrix::region);
    if let Some(w) = ed_matrices.windows(2).find(|w| w[0].region() == w[1].region()) {
        return Err(Error::shape(format!("region {} supplied twice", w[0].region())));
    }

    let mut totals = [0u32; Expression::COUNT];
    let mut winning_ed = [0.0f64; Expression::COUNT];
    let mut winners = Vec::with_capacity(ed_matrices.len());
    for m in &ed_matrices {
        let w = region_votes(m);
        for (k, e) in w.iter().enumerate() {
            totals[e.index()] += 1;
            winning_ed[e.index()] += m.get(*e, k);
        }
        winners.push((m.region(), w));
    }

    let top = *totals.iter().max().expect("six totals");
    let contenders: Vec<Expression> = Expression::ALL
        .into_iter()
        .filter(|e| totals[e.index()] == top)
        .collect();
    let decided = contenders
        .iter()
        .copied()
        .min_by(|a, b| {
            winning_ed[a.index()]
                .total_cmp(&winning_ed[b.index()])
                .then(a.index().cmp(&b.index()))
        })
        .expect("at least one contender");

    Ok(ClassificationResult {
        decided,
        votes: VoteTable { winners, totals },
        ed_matrices,
        tie_broken: contenders.len() > 1,
    })
}

/// Basis of each canonical region image, computed in parallel.
pub fn region_bases(regions: &[GrayImage; 5]) -> Result<Vec<EigenBasis>> {
    RegionKind::ALL
        .par_iter()
        .map(|&r| extract_basis(&regions[r.index()], r).map_err(|e| e.in_region(r)))
        .collect()
}

/// Classifies five canonical region images.
pub fn classify_regions(regions: &[GrayImage; 5], model: &ExpressionModel) -> Result<ClassificationResult> {
    let eds = region_bases(regions)?
        .iter()
        .map(|b| region_ed_matrix(b, model, b.region()))
        .collect::<Result<Vec<_>>>()?;
    aggregate(eds)
}

/// Full pipeline: crop, resize, extract, compare, vote.
pub fn classify(image: &GrayImage, crops: &CropSet, model: &ExpressionModel) -> Result<ClassificationResult> {
    classify_regions(&region_images(image, crops)?, model)
}

/// Loads `<region>.txt` replay fixtures for all five regions from `dir`.
pub fn load_replay_dir(dir: &Path) -> Result<Vec<EdMatrix>> {
    let mut out = Vec::new();
    let mut missing = Vec::new();
    for region in RegionKind::ALL {
        let path = dir.join(format!("{}.txt", region.name()));
        match std::fs::read_to_string(&path) {
            Ok(text) => out.push(EdMatrix::parse_fixture(&text, region, &path.display().to_string())?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => missing.push(region),
            Err(e) => return Err(Error::io(path, e)),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingRegions { missing });
    }
    Ok(out)
}

/// Runs voting directly on distance tables, bypassing the imaging stages.
pub fn replay(ed_matrices: Vec<EdMatrix>) -> Result<ClassificationResult> {
    aggregate(ed_matrices)
}
