//! Joint-enumeration oracles for abduction and execution.

use prae::domain::{AttributeDomain, AxisValue, RuleKind, RuleSpec, Triple, ValueSpace};
use prae::logspace::LogDist;
use prae::scene::ComponentBelief;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn toy_domain() -> AttributeDomain {
    AttributeDomain {
        types: vec!["triangle".into(), "square".into(), "circle".into()],
        sizes: 4,
        colors: 5,
    }
}

pub fn random_dist(rng: &mut ChaCha8Rng, m: usize, sparsity: f64) -> LogDist {
    let mut w: Vec<f64> = (0..m)
        .map(|_| if rng.gen_bool(sparsity) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..m)] = 1.0;
    }
    LogDist::from_weights(&w).unwrap()
}

pub fn random_beliefs(rng: &mut ChaCha8Rng, slots: usize, domain: &AttributeDomain, sparsity: f64) -> Vec<ComponentBelief> {
    (0..8)
        .map(|_| ComponentBelief {
            slots,
            position: random_dist(rng, (1 << slots) - 1, sparsity),
            number: random_dist(rng, slots, sparsity),
            shape: random_dist(rng, domain.types.len(), sparsity),
            size: random_dist(rng, domain.sizes as usize, sparsity),
            color: random_dist(rng, domain.colors as usize, sparsity),
        })
        .collect()
}

/// Visits every assignment of `len` indices below `m`.
pub fn for_each_assignment(m: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; len];
    loop {
        f(&idx);
        let mut i = 0;
        while i < len {
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == len {
            return;
        }
    }
}

/// Whether the full context assignment is valid under `rule` along rows.
pub fn context_valid(rule: RuleSpec, space: ValueSpace, s: &[AxisValue]) -> bool {
    if rule.kind == RuleKind::DistributeThree {
        let Ok(t) = Triple::new(s[0], s[1], s[2]) else {
            return false;
        };
        return rule.holds_row(space, s[3], s[4], s[5], Some(&t)).unwrap()
            && s[6] != s[7]
            && t.contains(s[6])
            && t.contains(s[7]);
    }
    rule.holds_row(space, s[0], s[1], s[2], None).unwrap()
        && rule.holds_row(space, s[3], s[4], s[5], None).unwrap()
        && rule.precondition(space, s[6], s[7]).unwrap()
}

pub fn brute_log_score(rule: RuleSpec, space: ValueSpace, beliefs: &[ComponentBelief]) -> f64 {
    let probs: Vec<Vec<f64>> = beliefs.iter().map(|b| b.dist(space).probs()).collect();
    let m = space.len();
    let mut total = 0.0;
    for_each_assignment(m, 8, |idx| {
        let p: f64 = idx.iter().enumerate().map(|(i, &v)| probs[i][v]).product();
        if p == 0.0 {
            return;
        }
        let values: Vec<AxisValue> = idx.iter().map(|&i| space.value(i)).collect();
        if context_valid(rule, space, &values) {
            total += p;
        }
    });
    total.ln()
}

/// Pair enumeration of the forward model through the public rule semantics.
pub fn pair_oracle(rule: RuleSpec, space: ValueSpace, p7: &[f64], p8: &[f64]) -> Option<Vec<f64>> {
    let m = space.len();
    let mut out = vec![0.0; m];
    for a in 0..m {
        for b in 0..m {
            let (va, vb) = (space.value(a), space.value(b));
            if rule.precondition(space, va, vb).unwrap() {
                let c = rule.forward(space, va, vb, None).unwrap();
                out[space.index_of(c).unwrap()] += p7[a] * p8[b];
            }
        }
    }
    let z: f64 = out.iter().sum();
    (z > 0.0).then(|| out.iter().map(|x| x / z).collect())
}

/// Posterior predictive of the ninth value under DistributeThree by joint
/// enumeration of all nine values.
pub fn distribute_three_oracle(space: ValueSpace, beliefs: &[ComponentBelief]) -> Option<Vec<f64>> {
    let probs: Vec<Vec<f64>> = beliefs.iter().map(|b| b.dist(space).probs()).collect();
    let m = space.len();
    let mut out = vec![0.0; m];
    for_each_assignment(m, 8, |idx| {
        let p: f64 = idx.iter().enumerate().map(|(i, &v)| probs[i][v]).product();
        if p == 0.0 {
            return;
        }
        let v: Vec<AxisValue> = idx.iter().map(|&i| space.value(i)).collect();
        let (Ok(t1), Ok(t2)) = (Triple::new(v[0], v[1], v[2]), Triple::new(v[3], v[4], v[5])) else {
            return;
        };
        if t1 != t2 {
            return;
        }
        for w in 0..m {
            if Triple::new(v[6], v[7], space.value(w)).is_ok_and(|t| t == t1) {
                out[w] += p;
            }
        }
    });
    let z: f64 = out.iter().sum();
    (z > 0.0).then(|| out.iter().map(|x| x / z).collect())
}


fn deviation(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs()
    }
}

/// Largest log-score or log-probability gap between decomposed abduction and
/// joint enumeration over `trials` random belief sets.
pub fn abduction_max_error(
    axis: prae::domain::Axis,
    slots: usize,
    domain: &AttributeDomain,
    keep: impl Fn(&RuleSpec) -> bool,
    trials: usize,
    seed: u64,
) -> f64 {
    use prae::abduction::{abduce_axis, Arrangement};
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog: Vec<RuleSpec> = prae::domain::catalog_for_axis(axis, slots, domain)
        .into_iter()
        .filter(keep)
        .collect();
    assert!(!catalog.is_empty());
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let sparsity = [0.0, 0.3, 0.6][trial % 3];
        let beliefs = random_beliefs(&mut rng, slots, domain, sparsity);
        let refs: Vec<&ComponentBelief> = beliefs.iter().collect();
        let post = abduce_axis(&catalog, &refs, axis, domain, Arrangement::Rows).unwrap();
        let brute: Vec<f64> = catalog
            .iter()
            .map(|&r| brute_log_score(r, r.space(slots, domain), &beliefs))
            .collect();
        for (i, &b) in brute.iter().enumerate() {
            worst = worst.max(deviation(post.log_scores[i], b));
        }
        let z = brute.iter().map(|s| s.exp()).sum::<f64>();
        if z > 0.0 {
            for (i, &b) in brute.iter().enumerate() {
                worst = worst.max(deviation(post.log_probs[i], b - z.ln()));
            }
        }
    }
    worst
}

/// Largest probability gap between execution and the pair-enumeration oracle
/// for every non-triple rule of `axis`. Disagreement on feasibility counts as
/// an infinite gap.
pub fn execution_max_error(axis: prae::domain::Axis, slots: usize, domain: &AttributeDomain, seed: u64) -> f64 {
    use prae::execution::execute_axis;
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for rule in prae::domain::catalog_for_axis(axis, slots, domain) {
        if rule.kind == RuleKind::DistributeThree {
            continue;
        }
        let space = rule.space(slots, domain);
        let trials = if space.len() <= 16 { 20 } else { 3 };
        for trial in 0..trials {
            let sparsity = [0.0, 0.4, 0.8][trial % 3];
            let (a, b) = (
                random_dist(&mut rng, space.len(), sparsity),
                random_dist(&mut rng, space.len(), sparsity),
            );
            match (execute_axis(rule, space, &a, &b, None), pair_oracle(rule, space, &a.probs(), &b.probs())) {
                (Ok(pred), Some(w)) => {
                    for (x, y) in pred.dist.probs().iter().zip(&w) {
                        worst = worst.max((x - y).abs());
                    }
                }
                (Err(_), None) => {}
                _ => return f64::INFINITY,
            }
        }
    }
    worst
}
