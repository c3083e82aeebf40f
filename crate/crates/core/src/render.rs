//! Plain-text tables: one distance table per region and the vote summary.

use std::fmt::Write as _;

use crate::classifier::{region_votes, ClassificationResult, EdMatrix, VoteTable};
use crate::features::BASIS_SIZE;
use crate::imaging::RegionKind;
use crate::model::Expression;

pub fn ed_table(ed: &EdMatrix) -> String {
    let mut out = format!(
        "Euclidean distance (ED) for the {}\n",
        ed.region().label().to_lowercase()
    );
    let _ = write!(out, "{:<16}", "Training image");
    for k in 1..=BASIS_SIZE {
        let _ = write!(out, " {:>8}", format!("ED{k}"));
    }
    out.push('\n');
    for e in Expression::ALL {
        let _ = write!(out, "{:<16}", e.name());
        for k in 0..BASIS_SIZE {
            let _ = write!(out, " {:>8.4}", ed.get(e, k));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<16}", "Minimum ED");
    for w in region_votes(ed) {
        let _ = write!(out, " {:>8}", w.name());
    }
    out.push('\n');
    out
}

/// Votes per region and in total, followed by the decision.
pub fn vote_table(votes: &VoteTable, decided: Expression, tie_broken: bool) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<22}", "Features");
    for e in Expression::ALL {
        let _ = write!(out, " {:>8}", e.name());
    }
    out.push('\n');
    for region in RegionKind::ALL {
        if votes.region_winners(region).is_none() {
            continue;
        }
        let _ = write!(out, "{:<22}", region.label());
        for c in votes.region_counts(region) {
            let _ = write!(out, " {c:>8}");
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<22}", "Total votes");
    for c in votes.totals() {
        let _ = write!(out, " {c:>8}");
    }
    out.push('\n');
    let _ = write!(out, "Recognized expression: {decided}");
    if tie_broken {
        out.push_str(" (tie broken by distance)");
    }
    out.push('\n');
    out
}

pub fn classification(result: &ClassificationResult) -> String {
    let mut out = String::new();
    for m in &result.ed_matrices {
        out.push_str(&ed_table(m));
        out.push('\n');
    }
    out.push_str(&vote_table(&result.votes, result.decided, result.tie_broken));
    out
}

/// Winners per region and vote totals, without the distance tables.
pub fn replay_summary(result: &ClassificationResult) -> String {
    let mut out = String::new();
    for (region, winners) in result.votes.winners() {
        let names: Vec<&str> = winners.iter().map(|w| w.name()).collect();
        let _ = writeln!(out, "{:<22} {}", region.label(), names.join(" "));
    }
    out.push('\n');
    out.push_str(&vote_table(&result.votes, result.decided, result.tie_broken));
    out
}
