//! Block-level accuracy and average precision, threshold sweeps and
//! calibration, and the white/black position experiment.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{block_distances, Mode};
use crate::error::{Error, Result};
use crate::extended_frame::{tile_resized, validate_grid, GridOrdering, TileSize};
use crate::hash_store::HashRecord;
use crate::imaging::Frame;
use crate::robust_hash::{compute_hash, hamming_distance, HASH_BITS};

/// Largest threshold visited by [`sweep`]; nothing reaches it.
pub const MAX_SWEEP_THRESHOLD: u32 = HASH_BITS as u32 + 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    /// Counts for `score >= d` predictions.
    pub fn classify(scores: &[u32], labels: &[bool], d: u32) -> Result<Self> {
        check_lengths(scores, labels)?;
        let mut c = ConfusionCounts::default();
        for (&s, &positive) in scores.iter().zip(labels) {
            match (s >= d, positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> Option<f64> {
        let predicted = self.tp + self.fp;
        (predicted > 0).then(|| self.tp as f64 / predicted as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let actual = self.tp + self.fn_;
        (actual > 0).then(|| self.tp as f64 / actual as f64)
    }
}

fn check_lengths(scores: &[u32], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    Ok(())
}

/// `(tp + tn) / total`.
pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    match c.total() {
        0 => Err(Error::EmptyEvaluation),
        total => Ok((c.tp + c.tn) as f64 / total as f64),
    }
}

/// Sum of `(R_j - R_{j-1}) * P_j` over thresholds at each distinct score,
/// highest first, with `R_0 = 0`.
pub fn average_precision(scores: &[u32], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / positives as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub d: u32,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub acc: f64,
    pub counts: ConfusionCounts,
}

/// Classification at every threshold `0..=121`.
pub fn sweep_scores(scores: &[u32], labels: &[bool]) -> Result<Vec<SweepPoint>> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    (0..=MAX_SWEEP_THRESHOLD)
        .map(|d| {
            let counts = ConfusionCounts::classify(scores, labels, d)?;
            Ok(SweepPoint {
                d,
                precision: counts.precision(),
                recall: counts.recall(),
                acc: accuracy(&counts)?,
                counts,
            })
        })
        .collect()
}

/// Hashes of a query video with its per-block ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRecord {
    pub record: HashRecord,
    pub labels: Vec<bool>,
}

/// Decision scores and labels of every compared block.
///
/// Reference blocks missing from the query count as positives.
pub fn score_query(reference: &HashRecord, query: &LabeledRecord, mode: Mode) -> Result<(Vec<u32>, Vec<bool>)> {
    let distances = block_distances(reference, &query.record)?;
    let scores = distances
        .iter()
        .map(|&(p, c)| match mode {
            Mode::Single => p,
            Mode::Dual => p.max(c),
        })
        .collect();
    let labels = (0..distances.len())
        .map(|i| query.labels.get(i).copied().unwrap_or(true))
        .collect();
    Ok((scores, labels))
}

/// Pools the blocks of all queries.
pub fn pooled_scores(
    reference: &HashRecord,
    queries: &[LabeledRecord],
    mode: Mode,
) -> Result<(Vec<u32>, Vec<bool>)> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for query in queries {
        let (s, l) = score_query(reference, query, mode)?;
        scores.extend(s);
        labels.extend(l);
    }
    Ok((scores, labels))
}

pub fn sweep(reference: &HashRecord, queries: &[LabeledRecord], mode: Mode) -> Result<Vec<SweepPoint>> {
    let (scores, labels) = pooled_scores(reference, queries, mode)?;
    sweep_scores(&scores, &labels)
}

/// Largest threshold with no false positives and full recall; otherwise the
/// most accurate threshold, preferring larger ones on ties.
pub fn calibrate_threshold(sweep: &[SweepPoint]) -> Result<u32> {
    if sweep.is_empty() {
        return Err(Error::EmptySweep);
    }
    let separating = sweep
        .iter()
        .filter(|p| p.counts.fp == 0 && p.counts.fn_ == 0 && p.counts.tp > 0)
        .map(|p| p.d)
        .max();
    if let Some(d) = separating {
        return Ok(d);
    }
    let best = sweep
        .iter()
        .max_by(|a, b| a.acc.total_cmp(&b.acc).then(a.d.cmp(&b.d)))
        .expect("sweep is nonempty");
    Ok(best.d)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("d,precision,recall,acc\n");
    for p in points {
        writeln!(out, "{},{},{},{}", p.d, opt(p.precision), opt(p.recall), p.acc).unwrap();
    }
    out
}

/// Distances of the white/black position experiment for both orderings,
/// row-major over the position of the black frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heatmap {
    pub n: usize,
    pub primary: Vec<u32>,
    pub corner: Vec<u32>,
}

impl Heatmap {
    /// `n x n` matrix; cell `(a, b)` holds the distance with the black frame
    /// at position `a * n + b` (0-based).
    pub fn matrix(&self, mode: Mode) -> Vec<Vec<u32>> {
        let cells: Vec<u32> = match mode {
            Mode::Single => self.primary.clone(),
            Mode::Dual => self.primary.iter().zip(&self.corner).map(|(p, c)| *p.max(c)).collect(),
        };
        cells.chunks(self.n).map(<[u32]>::to_vec).collect()
    }
}

/// Compares an all-white block against the same block with one black frame,
/// for every position of the black frame.
pub fn heatmap_distances(n: usize, tile: TileSize) -> Result<Heatmap> {
    validate_grid(n)?;
    tile.validate()?;
    let white = Frame::filled(tile.width, tile.height, [255; 3])?;
    let black = Frame::filled(tile.width, tile.height, [0; 3])?;
    let hash = |tiles: &[Frame], ordering| -> Result<_> {
        compute_hash(&tile_resized(tiles, n, 0, ordering, tile)?.image)
    };
    let reference = vec![white.clone(); n * n];
    let ref_primary = hash(&reference, GridOrdering::Primary)?;
    let ref_corner = hash(&reference, GridOrdering::CornerToCenter)?;

    let distances = (0..n * n)
        .into_par_iter()
        .map(|x| {
            let mut query = reference.clone();
            query[x] = black.clone();
            Ok((
                hamming_distance(&ref_primary, &hash(&query, GridOrdering::Primary)?),
                hamming_distance(&ref_corner, &hash(&query, GridOrdering::CornerToCenter)?),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (primary, corner) = distances.into_iter().unzip();
    Ok(Heatmap { n, primary, corner })
}

pub fn heatmap_experiment(n: usize, mode: Mode, tile: TileSize) -> Result<Vec<Vec<u32>>> {
    Ok(heatmap_distances(n, tile)?.matrix(mode))
}

/// `row,col,distance` with 1-based grid coordinates.
pub fn heatmap_csv(matrix: &[Vec<u32>]) -> String {
    let mut out = String::from("row,col,distance\n");
    for (a, row) in matrix.iter().enumerate() {
        for (b, d) in row.iter().enumerate() {
            writeln!(out, "{},{},{}", a + 1, b + 1, d).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        let perfect = ConfusionCounts { tp: 5, fp: 0, tn: 5, fn_: 0 };
        assert_eq!(accuracy(&perfect).unwrap(), 1.0);
        let one_fp = ConfusionCounts { tp: 0, fp: 1, tn: 56, fn_: 0 };
        assert!((accuracy(&one_fp).unwrap() - 0.9825).abs() < 5e-5);
        assert!(matches!(
            accuracy(&ConfusionCounts::default()),
            Err(Error::EmptyEvaluation)
        ));
    }

    #[test]
    fn ap_worked_example() {
        let ap = average_precision(&[3, 2, 1], &[true, false, true]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ap_separable_and_undefined() {
        assert_eq!(
            average_precision(&[90, 80, 10, 3], &[true, true, false, false]).unwrap(),
            1.0
        );
        assert!(matches!(
            average_precision(&[1, 2], &[false, false]),
            Err(Error::NoPositives)
        ));
        assert!(matches!(
            average_precision(&[1, 2], &[true]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn ap_ties_form_one_threshold() {
        // one threshold at 5 holding a positive and a negative
        let ap = average_precision(&[5, 5], &[true, false]).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn sweep_endpoints() {
        let points = sweep_scores(&[0, 10, 120], &[false, true, true]).unwrap();
        assert_eq!(points.len(), 122);
        assert_eq!(points[0].recall, Some(1.0));
        assert_eq!(points[0].counts.fp, 1);
        let last = points.last().unwrap();
        assert_eq!(last.d, 121);
        assert_eq!(last.counts.tp + last.counts.fp, 0);
        assert_eq!(last.precision, None);
    }

    #[test]
    fn calibration_separable_picks_largest() {
        let points = sweep_scores(&[1, 3, 4, 20, 30], &[false, false, false, true, true]).unwrap();
        assert_eq!(calibrate_threshold(&points).unwrap(), 20);
    }

    #[test]
    fn calibration_with_overlap_maximizes_accuracy() {
        // negative at 12 sits above the positive at 10
        let scores = [2, 5, 12, 10, 30, 40];
        let labels = [false, false, false, true, true, true];
        let points = sweep_scores(&scores, &labels).unwrap();
        // enumerate all thresholds by hand
        let best_acc = (0..=121u32)
            .map(|d| {
                scores
                    .iter()
                    .zip(&labels)
                    .filter(|(&s, &l)| (s >= d) == l)
                    .count()
            })
            .max()
            .unwrap();
        assert_eq!(best_acc, 5);
        // accuracy 5/6 is reached for d in 6..=10 and 13..=30; the largest wins
        assert_eq!(calibrate_threshold(&points).unwrap(), 30);
        assert!(matches!(calibrate_threshold(&[]), Err(Error::EmptySweep)));
    }

    #[test]
    fn heatmap_csv_layout() {
        let csv = heatmap_csv(&[vec![0, 1], vec![2, 3]]);
        assert_eq!(csv, "row,col,distance\n1,1,0\n1,2,1\n2,1,2\n2,2,3\n");
    }
}
