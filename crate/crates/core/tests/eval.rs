use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vidseal_core::eval::*;

// Ranks blocks by descending score, one cutoff per distinct score.
fn brute_force_ap(scores: &[u32], labels: &[bool]) -> f64 {
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let mut cutoffs: Vec<u32> = scores.to_vec();
    cutoffs.sort_unstable_by(|a, b| b.cmp(a));
    cutoffs.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in cutoffs {
        let selected: Vec<bool> = scores
            .iter()
            .zip(labels)
            .filter(|(&s, _)| s >= t)
            .map(|(_, &l)| l)
            .collect();
        let tp = selected.iter().filter(|&&l| l).count() as f64;
        let recall = tp / positives;
        let precision = tp / selected.len() as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

#[test]
fn average_precision_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 1000 {
        let len = rng.random_range(1..40);
        let spread = rng.random_range(1..121);
        let scores: Vec<u32> = (0..len).map(|_| rng.random_range(0..=spread)).collect();
        let labels: Vec<bool> = (0..len).map(|_| rng.random_bool(0.4)).collect();
        if !labels.contains(&true) {
            assert!(average_precision(&scores, &labels).is_err());
            continue;
        }
        assert_eq!(average_precision(&scores, &labels).unwrap(), brute_force_ap(&scores, &labels));
        checked += 1;
    }
}

#[test]
fn sweep_matches_reclassification() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scores: Vec<u32> = (0..20).map(|_| rng.random_range(0..=120)).collect();
    let labels: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
    let points = sweep_scores(&scores, &labels).unwrap();
    assert_eq!(points.len(), 122);
    for (d, point) in points.iter().enumerate() {
        let d = d as u32;
        assert_eq!(point.d, d);
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&s, &l) in scores.iter().zip(&labels) {
            match (s >= d, l) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        assert_eq!((point.counts.tp, point.counts.fp, point.counts.tn, point.counts.fn_), (tp, fp, tn, fn_));
        assert_eq!(point.acc, (tp + tn) as f64 / 20.0);
    }
    for pair in points.windows(2) {
        assert!(pair[1].recall.unwrap() <= pair[0].recall.unwrap());
    }
    assert_eq!(points[0].recall, Some(1.0));
    assert_eq!(points[121].recall, Some(0.0));
    assert_eq!(points[121].precision, None);
}

#[test]
fn sweep_csv_leaves_undefined_precision_empty() {
    let points = sweep_scores(&[5, 40], &[false, true]).unwrap();
    let csv = sweep_csv(&points);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "d,precision,recall,acc");
    assert_eq!(lines.len(), 123);
    assert!(lines[122].starts_with("121,,0"));
}

#[test]
fn small_heatmap_fixture() {
    let tile = vidseal_core::TileSize { width: 16, height: 16 };
    let heatmap = heatmap_distances(4, tile).unwrap();
    assert_eq!(heatmap.primary.len(), 16);
    let single = heatmap.matrix(vidseal_core::Mode::Single);
    let dual = heatmap.matrix(vidseal_core::Mode::Dual);
    for r in 0..4 {
        for c in 0..4 {
            assert!(dual[r][c] >= single[r][c]);
        }
    }
    let csv = heatmap_csv(&dual);
    assert_eq!(csv.lines().count(), 17);
    assert!(csv.starts_with("row,col,distance\n1,1,"));
}
