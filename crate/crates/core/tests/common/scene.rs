//! Brute-force scene inference over presence patterns and value assignments.

use prae::domain::Axis;
use prae::perception::{ObjectBelief, SlotBelief};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_dist(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k)
        .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return vec![1.0 / k as f64; k];
    }
    w.iter().map(|x| x / total).collect()
}

pub fn random_belief(rng: &mut ChaCha8Rng, n: usize, levels: [usize; 3]) -> ObjectBelief {
    ObjectBelief {
        slots: (0..n)
            .map(|_| SlotBelief {
                p_object: match rng.gen_range(0..10) {
                    0 => 1.0,
                    1 => 0.0,
                    _ => rng.gen(),
                },
                type_dist: random_dist(rng, levels[0]),
                size_dist: random_dist(rng, levels[1]),
                color_dist: random_dist(rng, levels[2]),
            })
            .collect(),
    }
}

/// Linear-space joint over presence patterns; returns per-mask probabilities
/// (index 0 is the empty panel).
pub fn presence_joint(obj: &ObjectBelief) -> Vec<f64> {
    let n = obj.slots.len();
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|j| {
                    let p = obj.slots[j].p_object;
                    if mask >> j & 1 == 1 {
                        p
                    } else {
                        1.0 - p
                    }
                })
                .product()
        })
        .collect()
}

pub fn normalize(v: Vec<f64>) -> Option<Vec<f64>> {
    let z: f64 = v.iter().sum();
    (z > 0.0).then(|| v.iter().map(|x| x / z).collect())
}

pub fn brute_position(obj: &ObjectBelief) -> Option<Vec<f64>> {
    normalize(presence_joint(obj)[1..].to_vec())
}

pub fn brute_number(obj: &ObjectBelief) -> Option<Vec<f64>> {
    let joint = presence_joint(obj);
    let mut out = vec![0.0; obj.slots.len()];
    for (mask, p) in joint.iter().enumerate().skip(1) {
        out[mask.count_ones() as usize - 1] += p;
    }
    normalize(out)
}

/// Enumerates every presence pattern and every assignment of values to the
/// present objects, keeping only panels whose objects agree.
pub fn brute_scalar(obj: &ObjectBelief, axis: Axis) -> Option<Vec<f64>> {
    let n = obj.slots.len();
    let levels = obj.slots[0].dist(axis).len();
    let joint = presence_joint(obj);
    let mut out = vec![0.0; levels];
    for (mask, &pm) in joint.iter().enumerate().skip(1) {
        let present: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let mut assignment = vec![0usize; present.len()];
        loop {
            let p: f64 = present
                .iter()
                .zip(&assignment)
                .map(|(&j, &v)| obj.slots[j].dist(axis)[v])
                .product();
            if assignment.iter().all(|&v| v == assignment[0]) {
                out[assignment[0]] += pm * p;
            }
            let mut i = 0;
            while i < assignment.len() {
                assignment[i] += 1;
                if assignment[i] < levels {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
            if i == assignment.len() {
                break;
            }
        }
    }
    normalize(out)
}

pub fn assert_close(got: Option<Vec<f64>>, want: Option<Vec<f64>>, what: &str) {
    match (got, want) {
        (Some(g), Some(w)) => {
            assert_eq!(g.len(), w.len(), "{what}");
            for (a, b) in g.iter().zip(&w) {
                assert!((a - b).abs() < 1e-9, "{what}: {g:?} vs {w:?}");
            }
        }
        (None, None) => {}
        (g, w) => panic!("{what}: {g:?} vs {w:?}"),
    }
}


/// Largest elementwise gap; disagreement on degeneracy or support counts as
/// an infinite gap.
pub fn max_gap(got: Option<Vec<f64>>, want: Option<Vec<f64>>) -> f64 {
    match (got, want) {
        (Some(g), Some(w)) if g.len() == w.len() => g
            .iter()
            .zip(&w)
            .map(|(a, b)| if (*a == 0.0) != (*b == 0.0) { f64::INFINITY } else { (a - b).abs() })
            .fold(0.0, f64::max),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}
