//! Multiple object tracking on top of the solver: interval graphs over
//! detections, tracklet graphs over their paths, iterated track splitting.

mod graph;
mod metrics;
mod pipeline;
mod synthetic;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::driver::{SolveError, SolveStatus};
use crate::reductions::FormatError;

pub use graph::{build_interval_graph, build_tracklet_graph, GapStrides, GraphConfig, IntervalGraph};
pub use metrics::{score_assignment, Metrics, CLUTTER};
pub use pipeline::{solve_first_step, solve_second_step, track, SecondStep, TrackingConfig, TrackingResult};
pub use synthetic::{planted_sequence, PlantedParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Detection {
    pub frame: u32,
    pub index: u32,
}

impl Detection {
    pub fn new(frame: u32, index: u32) -> Self {
        Detection { frame, index }
    }
}

impl fmt::Display for Detection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.frame, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackingError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("cost {from} -> {to} does not go forward in time")]
    Backward { from: Detection, to: Detection },
    #[error("duplicate {kind} cost {from} -> {to}")]
    Duplicate { kind: &'static str, from: Detection, to: Detection },
    #[error("no detections in frames {0}..={1}")]
    EmptyRange(u32, u32),
    #[error("detection {0} belongs to two tracklets")]
    Overlap(Detection),
    #[error("tracklet {0} has no base cost between consecutive detections")]
    Disconnected(usize),
    #[error("interval {interval}: {source}")]
    Solve { interval: usize, source: SolveError },
    #[error("interval {interval}: solver stopped with status {status}")]
    Limit { interval: usize, status: SolveStatus },
    #[error("second step: {0}")]
    SecondStep(SolveError),
    #[error("second step: solver stopped with status {0}")]
    SecondStepLimit(SolveStatus),
    #[error("thread pool: {0}")]
    Threads(String),
}

/// Pairwise costs between detections, with optional ground truth labels.
#[derive(Clone, Debug, Default)]
pub struct CostTable {
    detections: Vec<Detection>,
    index: HashMap<Detection, usize>,
    base: HashMap<(usize, usize), f64>,
    lifted: HashMap<(usize, usize), f64>,
    base_out: Vec<Vec<(usize, f64)>>,
    lifted_out: Vec<Vec<(usize, f64)>>,
    truth: BTreeMap<Detection, String>,
}

type Pair = (Detection, Detection, f64);

impl CostTable {
    /// Detections are the endpoints of all costs. Labels of detections that
    /// appear in no cost are dropped with a warning.
    pub fn new(base: &[Pair], lifted: &[Pair], truth: &[(Detection, String)]) -> Result<Self, TrackingError> {
        let mut detections: Vec<Detection> = base.iter().chain(lifted).flat_map(|&(a, b, _)| [a, b]).collect();
        detections.sort_unstable();
        detections.dedup();
        let index: HashMap<Detection, usize> = detections.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let n = detections.len();
        let mut table = CostTable {
            detections,
            index,
            base_out: vec![Vec::new(); n],
            lifted_out: vec![Vec::new(); n],
            ..CostTable::default()
        };
        for (kind, pairs) in [("base", base), ("lifted", lifted)] {
            for &(a, b, c) in pairs {
                if a.frame >= b.frame {
                    return Err(TrackingError::Backward { from: a, to: b });
                }
                let (i, j) = (table.index[&a], table.index[&b]);
                let (map, out) = if kind == "base" {
                    (&mut table.base, &mut table.base_out)
                } else {
                    (&mut table.lifted, &mut table.lifted_out)
                };
                if map.insert((i, j), c).is_some() {
                    return Err(TrackingError::Duplicate { kind, from: a, to: b });
                }
                out[i].push((j, c));
            }
        }
        for (d, label) in truth {
            if table.index.contains_key(d) {
                table.truth.insert(*d, label.clone());
            } else {
                log::warn!("ground truth for unknown detection {d} ignored");
            }
        }
        Ok(table)
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn truth(&self) -> &BTreeMap<Detection, String> {
        &self.truth
    }

    pub fn frame_range(&self) -> Option<(u32, u32)> {
        Some((self.detections.first()?.frame, self.detections.last()?.frame))
    }

    pub(crate) fn id(&self, d: Detection) -> Option<usize> {
        self.index.get(&d).copied()
    }

    pub(crate) fn detection(&self, id: usize) -> Detection {
        self.detections[id]
    }

    pub(crate) fn base_out(&self, id: usize) -> &[(usize, f64)] {
        &self.base_out[id]
    }

    pub(crate) fn lifted_out(&self, id: usize) -> &[(usize, f64)] {
        &self.lifted_out[id]
    }

    pub fn base(&self, a: Detection, b: Detection) -> Option<f64> {
        self.base.get(&(self.id(a)?, self.id(b)?)).copied()
    }

    pub fn lifted(&self, a: Detection, b: Detection) -> Option<f64> {
        self.lifted.get(&(self.id(a)?, self.id(b)?)).copied()
    }

    /// Cost of outputting `track` as one trajectory: consecutive base costs
    /// plus lifted costs of all its pairs within `max_gap` frames. `None` if
    /// two consecutive detections have no base cost within the gap.
    pub fn track_cost(&self, track: &[Detection], max_gap: u32) -> Option<f64> {
        let mut cost = 0.0;
        for w in track.windows(2) {
            if w[1].frame - w[0].frame > max_gap {
                return None;
            }
            cost += self.base(w[0], w[1])?;
        }
        for (i, &a) in track.iter().enumerate() {
            for &b in &track[i + 1..] {
                if b.frame - a.frame > max_gap {
                    break;
                }
                cost += self.lifted(a, b).unwrap_or(0.0);
            }
        }
        Some(cost)
    }

    pub fn parse(text: &str) -> Result<Self, TrackingError> {
        let mut base = Vec::new();
        let mut lifted = Vec::new();
        let mut truth = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let fields: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
            let num = |s: &str| s.parse::<u32>().map_err(|_| FormatError::new(line, format!("invalid integer `{s}`")));
            match fields.as_slice() {
                [] => {}
                [kw @ ("base" | "lift"), f1, i1, f2, i2, c] => {
                    let c: f64 = c.parse().map_err(|_| FormatError::new(line, format!("invalid cost `{c}`")))?;
                    if !c.is_finite() {
                        return Err(FormatError::new(line, "non-finite cost").into());
                    }
                    let (a, b) = (Detection::new(num(f1)?, num(i1)?), Detection::new(num(f2)?, num(i2)?));
                    if a.frame >= b.frame {
                        return Err(FormatError::new(line, format!("{a} -> {b} does not go forward in time")).into());
                    }
                    if *kw == "base" { &mut base } else { &mut lifted }.push((a, b, c));
                }
                ["gt", f, i, label] => truth.push((Detection::new(num(f)?, num(i)?), label.to_string())),
                [kw @ ("base" | "lift"), ..] => return Err(FormatError::new(line, format!("`{kw}` expects 5 fields")).into()),
                ["gt", ..] => return Err(FormatError::new(line, "`gt` expects 3 fields").into()),
                [kw, ..] => return Err(FormatError::new(line, format!("unknown keyword `{kw}`")).into()),
            }
        }
        CostTable::new(&base, &lifted, &truth)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut emit = |kw: &str, map: &HashMap<(usize, usize), f64>| {
            let mut rows: Vec<_> = map.iter().map(|(&(i, j), &c)| (self.detections[i], self.detections[j], c)).collect();
            rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
            for (a, b, c) in rows {
                out.push_str(&format!("{kw} {} {} {} {} {}\n", a.frame, a.index, b.frame, b.index, c));
            }
        };
        emit("base", &self.base);
        emit("lift", &self.lifted);
        for (d, l) in &self.truth {
            out.push_str(&format!("gt {} {} {}\n", d.frame, d.index, l));
        }
        out
    }
}

/// A detection sequence strictly increasing in frame, with its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Tracklet {
    pub detections: Vec<Detection>,
    pub cost: f64,
}

impl Tracklet {
    pub fn new(table: &CostTable, detections: Vec<Detection>, max_gap: u32) -> Option<Tracklet> {
        let cost = table.track_cost(&detections, max_gap)?;
        Some(Tracklet { detections, cost })
    }

    pub fn first(&self) -> Detection {
        self.detections[0]
    }

    pub fn last(&self) -> Detection {
        *self.detections.last().unwrap()
    }
}

/// Final trajectories, pairwise detection-disjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackSet {
    pub tracks: Vec<Vec<Detection>>,
    /// Detection-level objective.
    pub objective: f64,
}

impl TrackSet {
    /// Tracks sorted by first detection; lines `track <id>: f:i ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tracks.iter().enumerate() {
            out.push_str(&format!("track {}:", i + 1));
            for d in t {
                out.push_str(&format!(" {d}"));
            }
            out.push('\n');
        }
        out
    }
}
