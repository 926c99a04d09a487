use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use super::{CostTable, Detection, Tracklet, TrackingError};
use crate::instance::{Instance, InstanceBuilder, NodeId};

/// Thinning of lifted candidates by frame gap: all gaps up to `full`, every
/// second gap up to `half`, every third beyond.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GapStrides {
    pub full: u32,
    pub half: u32,
}

impl GapStrides {
    /// Half a second and one second at `fps` frames per second.
    pub fn for_fps(fps: f64) -> Self {
        GapStrides { full: (0.5 * fps).floor() as u32, half: fps.floor() as u32 }
    }

    pub fn keep(&self, gap: u32) -> bool {
        gap <= self.full || (gap <= self.half && gap % 2 == 0) || (gap > self.half && gap % 3 == 0)
    }

    /// Keeps every gap.
    pub fn dense() -> Self {
        GapStrides { full: u32::MAX, half: u32::MAX }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphConfig {
    /// Base successors kept per node and subsequent frame.
    pub k: usize,
    pub max_gap: u32,
    /// Lifted candidates with smaller absolute cost are left out.
    pub lift_epsilon: f64,
    pub strides: GapStrides,
}

#[derive(Clone, Debug)]
pub struct IntervalGraph {
    pub instance: Instance<f64>,
    /// Detection of inner node `i + 1`.
    pub detections: Vec<Detection>,
}

fn with_terminals(n: usize) -> InstanceBuilder<f64> {
    let mut b = InstanceBuilder::new(n);
    for i in 1..=n {
        b.base(NodeId::SOURCE, NodeId::inner(i), 0.0).base(NodeId::inner(i), NodeId::SINK, 0.0);
    }
    b
}

/// Sparsified detection graph over `frames`: per node, the `k` cheapest base
/// successors in each later frame within the gap; lifted edges thinned by
/// cost magnitude and gap, and kept only between connected nodes.
pub fn build_interval_graph(
    table: &CostTable,
    frames: RangeInclusive<u32>,
    config: &GraphConfig,
) -> Result<IntervalGraph, TrackingError> {
    let ids: Vec<usize> =
        (0..table.detections().len()).filter(|&i| frames.contains(&table.detection(i).frame)).collect();
    if ids.is_empty() {
        return Err(TrackingError::EmptyRange(*frames.start(), *frames.end()));
    }
    let mut local = vec![None; table.detections().len()];
    for (k, &i) in ids.iter().enumerate() {
        local[i] = Some(NodeId::inner(k + 1));
    }
    let gap = |i: usize, j: usize| table.detection(j).frame - table.detection(i).frame;
    let mut base_edges = Vec::new();
    for &i in &ids {
        let mut by_frame: BTreeMap<u32, Vec<(f64, usize)>> = BTreeMap::new();
        for &(j, c) in table.base_out(i) {
            if local[j].is_some() && gap(i, j) <= config.max_gap {
                by_frame.entry(table.detection(j).frame).or_default().push((c, j));
            }
        }
        for mut group in by_frame.into_values() {
            group.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            for &(c, j) in group.iter().take(config.k) {
                base_edges.push((local[i].unwrap(), local[j].unwrap(), c));
            }
        }
    }
    let mut b = with_terminals(ids.len());
    for &(v, w, c) in &base_edges {
        b.base(v, w, c);
    }
    let skeleton = b.clone().build().expect("base graph over detections validates");
    for &i in &ids {
        for &(j, c) in table.lifted_out(i) {
            let Some(w) = local[j] else { continue };
            let v = local[i].unwrap();
            let g = gap(i, j);
            if g <= config.max_gap && c.abs() >= config.lift_epsilon && config.strides.keep(g) && skeleton.reaches(v, w) {
                b.lifted(v, w, c);
            }
        }
    }
    for (k, &i) in ids.iter().enumerate() {
        b.frame(NodeId::inner(k + 1), table.detection(i).frame);
    }
    let instance = b.build().expect("interval graph validates");
    Ok(IntervalGraph { instance, detections: ids.iter().map(|&i| table.detection(i)).collect() })
}

/// Dense graph over tracklets: node cost is the tracklet cost, a base edge
/// carries the original cost from the last detection of one tracklet to the
/// first of the next, a lifted edge sums all original lifted costs between
/// the two within the gap.
pub fn build_tracklet_graph(table: &CostTable, tracklets: &[Tracklet], max_gap: u32) -> Result<Instance<f64>, TrackingError> {
    let mut seen = std::collections::HashSet::new();
    for t in tracklets {
        for &d in &t.detections {
            if !seen.insert(d) {
                return Err(TrackingError::Overlap(d));
            }
        }
    }
    let n = tracklets.len();
    let mut b = with_terminals(n);
    for (i, t) in tracklets.iter().enumerate() {
        b.node_cost(NodeId::inner(i + 1), t.cost);
    }
    for (i, a) in tracklets.iter().enumerate() {
        for (j, c) in tracklets.iter().enumerate() {
            let (l, f) = (a.last(), c.first());
            if l.frame < f.frame && f.frame - l.frame <= max_gap {
                if let Some(cost) = table.base(l, f) {
                    b.base(NodeId::inner(i + 1), NodeId::inner(j + 1), cost);
                }
            }
        }
    }
    let skeleton = b.clone().build().expect("tracklet base graph validates");
    for (i, a) in tracklets.iter().enumerate() {
        for (j, c) in tracklets.iter().enumerate() {
            let (v, w) = (NodeId::inner(i + 1), NodeId::inner(j + 1));
            if i == j || !skeleton.reaches(v, w) {
                continue;
            }
            let mut sum = 0.0;
            let mut any = false;
            for &x in &a.detections {
                for &y in &c.detections {
                    if x.frame < y.frame && y.frame - x.frame <= max_gap {
                        if let Some(cost) = table.lifted(x, y) {
                            sum += cost;
                            any = true;
                        }
                    }
                }
            }
            if any && sum != 0.0 {
                b.lifted(v, w, sum);
            }
        }
    }
    Ok(b.build().expect("tracklet graph validates"))
}
