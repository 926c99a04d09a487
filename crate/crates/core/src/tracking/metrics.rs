use std::collections::{BTreeMap, HashMap, HashSet};

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use super::Detection;

/// Ground truth label of detections that belong to no object.
pub const CLUTTER: &str = "-";

/// Assignment quality of a set of tracks against per-detection labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    pub idtp: usize,
    pub mota: f64,
    pub false_positives: usize,
    pub misses: usize,
    pub id_switches: usize,
    /// Labeled non-clutter detections.
    pub gt_detections: usize,
    /// Share of consecutive track pairs that join detections of one object.
    pub link_precision: f64,
    /// Share of consecutive ground truth pairs found as consecutive track pairs.
    pub link_recall: f64,
    /// Tracked detections without a label, left out of every count.
    pub unlabeled: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

pub fn score_assignment(tracks: &[Vec<Detection>], truth: &BTreeMap<Detection, String>) -> Metrics {
    let mut unlabeled = 0;
    let mut track_of: HashMap<Detection, usize> = HashMap::new();
    let mut labeled_tracks: Vec<Vec<(Detection, &str)>> = Vec::new();
    for (t, track) in tracks.iter().enumerate() {
        let mut kept = Vec::new();
        for &d in track {
            match truth.get(&d) {
                Some(l) => {
                    track_of.insert(d, t);
                    kept.push((d, l.as_str()));
                }
                None => unlabeled += 1,
            }
        }
        labeled_tracks.push(kept);
    }
    if unlabeled > 0 {
        log::warn!("{unlabeled} tracked detections have no ground truth label and are not scored");
    }

    let mut objects: BTreeMap<&str, Vec<Detection>> = BTreeMap::new();
    for (d, l) in truth {
        if l != CLUTTER {
            objects.entry(l.as_str()).or_default().push(*d);
        }
    }
    let gt_detections: usize = objects.values().map(Vec::len).sum();
    let predicted: usize = labeled_tracks.iter().map(Vec::len).sum();

    // identity matching
    let ids: Vec<&str> = objects.keys().copied().collect();
    let size = labeled_tracks.len().max(ids.len());
    let idtp = if size == 0 {
        0
    } else {
        let mut weights = Matrix::new(size, size, 0i64);
        for (t, track) in labeled_tracks.iter().enumerate() {
            for (_, l) in track {
                if let Ok(k) = ids.binary_search(l) {
                    weights[(t, k)] += 1;
                }
            }
        }
        kuhn_munkres(&weights).0 as usize
    };

    let false_positives = labeled_tracks.iter().flatten().filter(|(_, l)| *l == CLUTTER).count();
    let misses = objects.values().flatten().filter(|d| !track_of.contains_key(d)).count();
    let mut id_switches = 0;
    for dets in objects.values() {
        let assigned: Vec<usize> = dets.iter().filter_map(|d| track_of.get(d).copied()).collect();
        id_switches += assigned.windows(2).filter(|w| w[0] != w[1]).count();
    }

    let mut links = 0;
    let mut good_links = 0;
    let mut predicted_links = HashSet::new();
    for track in &labeled_tracks {
        for w in track.windows(2) {
            links += 1;
            if w[0].1 == w[1].1 && w[0].1 != CLUTTER {
                good_links += 1;
            }
            predicted_links.insert((w[0].0, w[1].0));
        }
    }
    let true_links: Vec<(Detection, Detection)> =
        objects.values().flat_map(|d| d.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>()).collect();
    let found_links = true_links.iter().filter(|p| predicted_links.contains(p)).count();

    Metrics {
        idf1: ratio(2 * idtp, predicted + gt_detections),
        idp: ratio(idtp, predicted),
        idr: ratio(idtp, gt_detections),
        idtp,
        mota: if gt_detections == 0 {
            1.0
        } else {
            1.0 - (misses + false_positives + id_switches) as f64 / gt_detections as f64
        },
        false_positives,
        misses,
        id_switches,
        gt_detections,
        link_precision: ratio(good_links, links),
        link_recall: ratio(found_links, true_links.len()),
        unlabeled,
    }
}
