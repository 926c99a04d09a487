use std::collections::HashSet;

use rayon::prelude::*;

use super::graph::{build_interval_graph, build_tracklet_graph, GapStrides, GraphConfig};
use super::{CostTable, Detection, TrackSet, Tracklet, TrackingError};
use crate::driver::{solve, SolveConfig, SolveStatus};
use crate::instance::{active_st_paths, Instance, NodeId};

#[derive(Clone, Debug)]
pub struct TrackingConfig {
    /// Frames per first-step interval; intervals do not overlap.
    pub interval_len: u32,
    pub k: usize,
    pub max_gap_frames: u32,
    pub lift_epsilon: f64,
    /// Frame rate, used to place the lifted gap strides.
    pub fps: f64,
    /// Threads for first-step intervals.
    pub jobs: usize,
    pub max_iterations: usize,
    pub solve: SolveConfig,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            interval_len: 50,
            k: 3,
            max_gap_frames: 20,
            lift_epsilon: 0.05,
            fps: 10.0,
            jobs: 1,
            max_iterations: 20,
            solve: SolveConfig::default(),
        }
    }
}

impl TrackingConfig {
    pub fn graph(&self) -> GraphConfig {
        GraphConfig {
            k: self.k,
            max_gap: self.max_gap_frames,
            lift_epsilon: self.lift_epsilon,
            strides: GapStrides::for_fps(self.fps),
        }
    }
}

fn paths_of(instance: &Instance<f64>, sol: &crate::instance::FlowSolution<f64>) -> Vec<Vec<NodeId>> {
    active_st_paths(instance, sol).expect("solver output is a flow")
}

/// Solves every interval of `interval_len` frames and returns the paths as
/// tracklets, plus a singleton tracklet for every detection left unused.
pub fn solve_first_step(table: &CostTable, config: &TrackingConfig) -> Result<Vec<Tracklet>, TrackingError> {
    let Some((lo, hi)) = table.frame_range() else {
        return Ok(Vec::new());
    };
    let len = config.interval_len.max(1);
    let starts: Vec<u32> = (lo..=hi).step_by(len as usize).collect();
    let graph = config.graph();
    let run = |(interval, &start): (usize, &u32)| -> Result<Vec<Vec<Detection>>, TrackingError> {
        let end = start.saturating_add(len - 1).min(hi);
        let g = match build_interval_graph(table, start..=end, &graph) {
            Ok(g) => g,
            Err(TrackingError::EmptyRange(..)) => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        log::info!(
            "interval {}: frames {start}..={end}, {} nodes, {} base, {} lifted edges",
            interval + 1,
            g.instance.inner_count(),
            g.instance.base_edges().len(),
            g.instance.lifted_edges().len()
        );
        let out = solve(&g.instance, &config.solve).map_err(|source| TrackingError::Solve { interval: interval + 1, source })?;
        if out.status != SolveStatus::Optimal {
            return Err(TrackingError::Limit { interval: interval + 1, status: out.status });
        }
        Ok(paths_of(&g.instance, &out.solution)
            .into_iter()
            .map(|p| p.iter().map(|v| g.detections[v.inner_index().unwrap()]).collect())
            .collect())
    };
    let per_interval: Vec<Result<Vec<Vec<Detection>>, TrackingError>> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| TrackingError::Threads(e.to_string()))?;
        pool.install(|| starts.par_iter().enumerate().map(run).collect())
    } else {
        starts.iter().enumerate().map(run).collect()
    };
    let mut tracklets = Vec::new();
    let mut used = HashSet::new();
    for r in per_interval {
        for dets in r? {
            used.extend(dets.iter().copied());
            tracklets.push(Tracklet::new(table, dets, config.max_gap_frames).expect("paths follow base costs"));
        }
    }
    for &d in table.detections() {
        if !used.contains(&d) {
            tracklets.push(Tracklet { detections: vec![d], cost: 0.0 });
        }
    }
    tracklets.sort_by_key(|t| t.first());
    Ok(tracklets)
}

/// Splits `track` greedily: repeatedly applies the cut with the most
/// negative objective change to any of its pieces while one improves by more
/// than 1e-9.
fn split_track(table: &CostTable, track: &[Detection], max_gap: u32) -> Vec<Vec<Detection>> {
    let mut pieces = vec![track.to_vec()];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (pi, piece) in pieces.iter().enumerate() {
            // removed cost of cutting before position p
            let mut cross = vec![0.0; piece.len()];
            for p in 1..piece.len() {
                cross[p] += table.base(piece[p - 1], piece[p]).expect("tracks follow base costs");
            }
            for i in 0..piece.len() {
                for j in i + 1..piece.len() {
                    if piece[j].frame - piece[i].frame > max_gap {
                        break;
                    }
                    if let Some(c) = table.lifted(piece[i], piece[j]) {
                        for x in &mut cross[i + 1..=j] {
                            *x += c;
                        }
                    }
                }
            }
            for (p, &removed) in cross.iter().enumerate().skip(1) {
                let delta = -removed;
                if delta < -1e-9 && best.map_or(true, |b| delta < b.0) {
                    best = Some((delta, pi, p));
                }
            }
        }
        let Some((_, pi, p)) = best else { break };
        let right = pieces[pi].split_off(p);
        pieces.insert(pi + 1, right);
    }
    pieces
}

#[derive(Clone, Debug)]
pub struct SecondStep {
    pub tracks: TrackSet,
    /// Tracklets of the last iteration.
    pub tracklets: Vec<Tracklet>,
    /// Detection-level objective of the solver output of every iteration.
    pub objectives: Vec<f64>,
    pub iterations: usize,
}

/// Solves the tracklet graph, splits tracks where that lowers the
/// detection-level objective, and repeats until no split helps.
pub fn solve_second_step(
    table: &CostTable,
    tracklets: Vec<Tracklet>,
    config: &TrackingConfig,
) -> Result<SecondStep, TrackingError> {
    let max_gap = config.max_gap_frames;
    let mut tracklets = tracklets;
    let mut objectives = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let inst = build_tracklet_graph(table, &tracklets, max_gap)?;
        let out = solve(&inst, &config.solve).map_err(TrackingError::SecondStep)?;
        if out.status != SolveStatus::Optimal {
            return Err(TrackingError::SecondStepLimit(out.status));
        }
        let mut covered = vec![false; tracklets.len()];
        let mut tracks: Vec<Vec<Detection>> = Vec::new();
        for p in paths_of(&inst, &out.solution) {
            let mut track = Vec::new();
            for v in p {
                let i = v.inner_index().unwrap();
                covered[i] = true;
                track.extend_from_slice(&tracklets[i].detections);
            }
            tracks.push(track);
        }
        // zero-cost tracklets left out change nothing; keep them as tracks
        for (i, t) in tracklets.iter().enumerate() {
            if !covered[i] && t.cost.abs() <= 1e-9 {
                tracks.push(t.detections.clone());
            }
        }
        tracks.sort_by_key(|t| t[0]);
        let objective: f64 = tracks.iter().map(|t| table.track_cost(t, max_gap).expect("tracks follow base costs")).sum();
        log::info!("second step iteration {iterations}: objective {objective}, {} tracks", tracks.len());
        objectives.push(objective);

        let mut split = Vec::new();
        let mut any = false;
        for t in &tracks {
            let pieces = split_track(table, t, max_gap);
            any |= pieces.len() > 1;
            split.extend(pieces);
        }
        if !any || iterations >= config.max_iterations {
            if any {
                log::warn!("second step stopped after {iterations} iterations with improving splits left");
            }
            return Ok(SecondStep { tracks: TrackSet { tracks, objective }, tracklets, objectives, iterations });
        }
        tracklets = split
            .into_iter()
            .map(|d| Tracklet::new(table, d, max_gap).expect("pieces of tracks follow base costs"))
            .collect();
        tracklets.sort_by_key(|t| t.first());
    }
}

#[derive(Clone, Debug)]
pub struct TrackingResult {
    pub first_step: Vec<Tracklet>,
    pub second_step: SecondStep,
}

impl TrackingResult {
    pub fn tracks(&self) -> &TrackSet {
        &self.second_step.tracks
    }
}

/// Both steps.
pub fn track(table: &CostTable, config: &TrackingConfig) -> Result<TrackingResult, TrackingError> {
    let first_step = solve_first_step(table, config)?;
    let second_step = solve_second_step(table, first_step.clone(), config)?;
    Ok(TrackingResult { first_step, second_step })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(frame: u32) -> Detection {
        Detection::new(frame, 1)
    }

    #[test]
    fn splits_one_cut_at_a_time() {
        // each cut alone gains 2, both together lose 1
        let table = CostTable::new(&[(d(1), d(2), -3.0), (d(2), d(3), -3.0)], &[(d(1), d(3), 5.0)], &[]).unwrap();
        let track = [d(1), d(2), d(3)];
        assert_eq!(table.track_cost(&track, 5), Some(-1.0));
        let pieces = split_track(&table, &track, 5);
        assert_eq!(pieces, vec![vec![d(1)], vec![d(2), d(3)]]);
        let after: f64 = pieces.iter().map(|p| table.track_cost(p, 5).unwrap()).sum();
        assert_eq!(after, -3.0);
    }

    #[test]
    fn keeps_tracks_without_improving_cuts() {
        let table = CostTable::new(&[(d(1), d(2), -1.0), (d(2), d(3), -1.0)], &[(d(1), d(3), 0.5)], &[]).unwrap();
        assert_eq!(split_track(&table, &[d(1), d(2), d(3)], 5).len(), 1);
    }
}
