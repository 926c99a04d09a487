use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CostTable, Detection};

/// A sequence of objects seen once per frame, with planted identities.
#[derive(Clone, Debug)]
pub struct PlantedParams {
    pub objects: usize,
    pub frames: u32,
    /// Largest frame gap that receives costs.
    pub max_gap: u32,
    /// `(object, first missing frame, length)`: the object is not detected
    /// in those frames.
    pub occlusions: Vec<(usize, u32, u32)>,
    /// Half-width of the uniform noise added to every cost.
    pub noise: f64,
    /// Base and lifted cost between detections of the same object; the
    /// negated values apply to different objects.
    pub same_base: f64,
    pub same_lifted: f64,
    pub seed: u64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            objects: 3,
            frames: 150,
            max_gap: 20,
            occlusions: Vec::new(),
            noise: 0.0,
            same_base: -1.0,
            same_lifted: -0.5,
            seed: 0,
        }
    }
}

/// Cost table with ground truth labels `o1`, `o2`, ... Detection indices are
/// shuffled within each frame.
pub fn planted_sequence(p: &PlantedParams) -> CostTable {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let visible = |o: usize, f: u32| !p.occlusions.iter().any(|&(q, s, l)| q == o && f >= s && f < s + l);
    let mut dets: Vec<(Detection, usize)> = Vec::new();
    for f in 1..=p.frames {
        let mut present: Vec<usize> = (0..p.objects).filter(|&o| visible(o, f)).collect();
        present.shuffle(&mut rng);
        for (i, o) in present.into_iter().enumerate() {
            dets.push((Detection::new(f, i as u32 + 1), o));
        }
    }
    let mut base = Vec::new();
    let mut lifted = Vec::new();
    for (i, &(a, oa)) in dets.iter().enumerate() {
        for &(b, ob) in &dets[i + 1..] {
            if b.frame == a.frame {
                continue;
            }
            if b.frame - a.frame > p.max_gap {
                break;
            }
            let sign = if oa == ob { 1.0 } else { -1.0 };
            let mut noise = || if p.noise > 0.0 { rng.gen_range(-p.noise..=p.noise) } else { 0.0 };
            base.push((a, b, sign * p.same_base + noise()));
            lifted.push((a, b, sign * p.same_lifted + noise()));
        }
    }
    let truth: Vec<(Detection, String)> = dets.iter().map(|&(d, o)| (d, format!("o{}", o + 1))).collect();
    CostTable::new(&base, &lifted, &truth).expect("planted costs go forward in time")
}
