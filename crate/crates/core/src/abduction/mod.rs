//! Probabilistic abduction: a posterior over the rule catalog of each axis,
//! computed from the eight context beliefs.
//!
//! For a rule `r` the unnormalized score sums, over every assignment of values
//! to the context panels that `r` admits, the product of the panels' belief
//! masses. Valid assignments factor over lines, so the score is the product of
//! per-line partial sums: two complete lines plus the precondition mass of the
//! partial third line. DistributeThree couples lines through its latent triple
//! and is summed triple-wise (see [`triples`]). Everything stays in log space.

pub mod triples;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{catalog_for_axis, AttributeDomain, Axis, RuleKind, RuleSpec, ValueSpace};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, round_sig12, LogAccumulator};
use crate::scene::{ComponentBelief, PanelBelief};

pub use triples::TriplePosterior;

/// Whether rules run along rows (default) or columns of the matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arrangement {
    #[default]
    Rows,
    Columns,
}

impl Arrangement {
    /// Context indices of the two complete lines and the partial third line.
    pub fn lines(self) -> ([[usize; 3]; 2], [usize; 2]) {
        match self {
            Arrangement::Rows => ([[0, 1, 2], [3, 4, 5]], [6, 7]),
            Arrangement::Columns => ([[0, 3, 6], [1, 4, 7]], [2, 5]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RulePosterior {
    pub axis: Axis,
    pub rules: Vec<RuleSpec>,
    /// Unnormalized log scores.
    pub log_scores: Vec<f64>,
    pub log_probs: Vec<f64>,
    /// Per rule: log partial sums of line 1, line 2 and the partial line's
    /// precondition mass. `None` for DistributeThree, whose lines share a triple.
    pub line_sums: Vec<Option<[f64; 3]>>,
    /// Set when no rule had positive score; the posterior is then uniform.
    pub inconsistent: bool,
}

impl RulePosterior {
    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn prob_of(&self, rule: &RuleSpec) -> f64 {
        self.rules
            .iter()
            .position(|r| r == rule)
            .map_or(0.0, |i| self.log_probs[i].exp())
    }

    /// Most probable rule index; ties go to the lowest catalog index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.log_probs.iter().enumerate() {
            if v > self.log_probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn dump(&self, component: usize) -> PosteriorDump {
        PosteriorDump {
            component,
            axis: self.axis,
            inconsistent: self.inconsistent,
            rules: self
                .rules
                .iter()
                .zip(&self.log_probs)
                .map(|(r, l)| (r.to_string(), round_sig12(l.exp())))
                .collect(),
        }
    }
}

/// JSON view: rule name to probability, in catalog order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PosteriorDump {
    pub component: usize,
    pub axis: Axis,
    pub inconsistent: bool,
    pub rules: IndexMap<String, f64>,
}

type PairTable = Arc<Vec<[u32; 3]>>;

/// Index triples `(i, j, k)` with `f(v_i, v_j) = v_k`, cached per rule and space.
pub(crate) fn pair_table(rule: RuleSpec, space: ValueSpace) -> PairTable {
    static CACHE: OnceLock<Mutex<HashMap<(RuleSpec, ValueSpace), PairTable>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().unwrap().get(&(rule, space)) {
        return t.clone();
    }
    let m = space.len();
    let mut table = Vec::new();
    for i in 0..m {
        let a = space.code(i);
        for j in 0..m {
            if let Some(c) = rule.apply_code(space, a, space.code(j)) {
                table.push([i as u32, j as u32, space.index(c) as u32]);
            }
        }
    }
    let table = Arc::new(table);
    cache.lock().unwrap().insert((rule, space), table.clone());
    table
}

fn line_log_sum(table: &[[u32; 3]], p: [&[f64]; 3]) -> f64 {
    let mut acc = LogAccumulator::new();
    for &[i, j, k] in table {
        let a = p[0][i as usize];
        if a == f64::NEG_INFINITY {
            continue;
        }
        acc.add(a + p[1][j as usize] + p[2][k as usize]);
    }
    acc.value()
}

fn partial_log_sum(table: &[[u32; 3]], p: [&[f64]; 2]) -> f64 {
    let mut acc = LogAccumulator::new();
    for &[i, j, _] in table {
        acc.add(p[0][i as usize] + p[1][j as usize]);
    }
    acc.value()
}

/// The eight context distributions a rule reads, checked against its space.
fn context_dists<'a>(
    rule: RuleSpec,
    beliefs: &[&'a ComponentBelief],
    domain: &AttributeDomain,
) -> Result<(ValueSpace, Vec<&'a [f64]>)> {
    let slots = beliefs[0].slots;
    let space = rule.space(slots, domain);
    let dists: Vec<&[f64]> = beliefs.iter().map(|b| b.dist(space).log_probs()).collect();
    if beliefs.iter().any(|b| b.slots != slots) || dists.iter().any(|d| d.len() != space.len()) {
        return Err(Error::contract(format!(
            "context beliefs do not match the space of {rule}"
        )));
    }
    Ok((space, dists))
}

/// Factored triple posterior of a DistributeThree rule from the complete lines.
pub fn triple_posterior(
    rule: RuleSpec,
    beliefs: &[&ComponentBelief],
    domain: &AttributeDomain,
    arrangement: Arrangement,
) -> Result<TriplePosterior> {
    if beliefs.len() != 8 || rule.kind != RuleKind::DistributeThree {
        return Err(Error::contract("triple posterior needs 8 beliefs and a DistributeThree rule"));
    }
    let (_, d) = context_dists(rule, beliefs, domain)?;
    let (full, _) = arrangement.lines();
    Ok(TriplePosterior::new(
        full.map(|line| line.map(|i| d[i].to_vec())),
    ))
}

fn score_rule(
    rule: RuleSpec,
    beliefs: &[&ComponentBelief],
    domain: &AttributeDomain,
    arrangement: Arrangement,
    strategy: triples::Strategy,
) -> Result<(f64, Option<[f64; 3]>)> {
    let (space, d) = context_dists(rule, beliefs, domain)?;
    let ([l1, l2], partial) = arrangement.lines();
    let line = |l: [usize; 3]| [d[l[0]], d[l[1]], d[l[2]]];
    if rule.kind == RuleKind::DistributeThree {
        let score = triples::log_score(
            [line(l1), line(l2)],
            [d[partial[0]], d[partial[1]]],
            strategy,
        );
        return Ok((score, None));
    }
    let table = pair_table(rule, space);
    let sums = [
        line_log_sum(&table, line(l1)),
        line_log_sum(&table, line(l2)),
        partial_log_sum(&table, [d[partial[0]], d[partial[1]]]),
    ];
    Ok((sums.iter().sum(), Some(sums)))
}

/// Posterior over `rules` on one axis of one component.
pub fn abduce_axis(
    rules: &[RuleSpec],
    beliefs: &[&ComponentBelief],
    axis: Axis,
    domain: &AttributeDomain,
    arrangement: Arrangement,
) -> Result<RulePosterior> {
    abduce_axis_with(rules, beliefs, axis, domain, arrangement, triples::Strategy::Auto)
}

pub fn abduce_axis_with(
    rules: &[RuleSpec],
    beliefs: &[&ComponentBelief],
    axis: Axis,
    domain: &AttributeDomain,
    arrangement: Arrangement,
    strategy: triples::Strategy,
) -> Result<RulePosterior> {
    if rules.is_empty() {
        return Err(Error::contract("empty rule set"));
    }
    if beliefs.len() != 8 {
        return Err(Error::contract(format!(
            "abduction needs 8 context beliefs, got {}",
            beliefs.len()
        )));
    }
    if let Some(r) = rules.iter().find(|r| r.axis != axis) {
        return Err(Error::contract(format!("rule {r} is not on axis {axis}")));
    }
    let mut log_scores = Vec::with_capacity(rules.len());
    let mut line_sums = Vec::with_capacity(rules.len());
    for &rule in rules {
        let (s, l) = score_rule(rule, beliefs, domain, arrangement, strategy)?;
        log_scores.push(s);
        line_sums.push(l);
    }
    let z = log_sum_exp(&log_scores);
    let (log_probs, inconsistent) = if z == f64::NEG_INFINITY {
        (vec![-(rules.len() as f64).ln(); rules.len()], true)
    } else {
        (log_scores.iter().map(|s| s - z).collect(), false)
    };
    Ok(RulePosterior {
        axis,
        rules: rules.to_vec(),
        log_scores,
        log_probs,
        line_sums,
        inconsistent,
    })
}

/// Posteriors for every component (outer) and axis (inner, `Axis::ALL` order).
pub fn abduce_scene(
    context: &[PanelBelief],
    domain: &AttributeDomain,
    arrangement: Arrangement,
) -> Result<Vec<Vec<RulePosterior>>> {
    if context.len() != 8 {
        return Err(Error::contract("abduction needs 8 context panels"));
    }
    let components = context[0].components.len();
    (0..components)
        .map(|c| {
            let beliefs: Vec<&ComponentBelief> =
                context.iter().map(|p| &p.components[c]).collect();
            Axis::ALL
                .iter()
                .map(|&axis| {
                    let catalog = catalog_for_axis(axis, beliefs[0].slots, domain);
                    abduce_axis(&catalog, &beliefs, axis, domain, arrangement)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectMode {
    /// Most probable rule, lowest catalog index on ties.
    #[default]
    Argmax,
    /// Draw from the posterior.
    Sample,
}

/// Chooses a rule from the posterior.
pub fn select_rule(posterior: &RulePosterior, mode: SelectMode, seed: u64) -> RuleSpec {
    match mode {
        SelectMode::Argmax => posterior.rules[posterior.argmax()],
        SelectMode::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_rule(posterior, &mut rng)
        }
    }
}

pub fn sample_rule<R: Rng>(posterior: &RulePosterior, rng: &mut R) -> RuleSpec {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last = 0;
    for (i, p) in posterior.probs().into_iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = i;
            if u < cum {
                return posterior.rules[i];
            }
        }
    }
    posterior.rules[last]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SlotSet;
    use crate::generator::ComponentSymbol;

    fn grid_belief(n: usize, slots: &[usize]) -> ComponentBelief {
        let sym = ComponentSymbol {
            occupied: SlotSet::from_slots(slots.iter().copied()),
            shape: 0,
            size: 0,
            color: 0,
        };
        ComponentBelief::from_symbol(&sym, 4.max(n), &AttributeDomain::default())
    }

    #[test]
    fn arithmetic_plus_on_number_example() {
        // numbers 1,2,3 / 1,3,4 / 1,2 with positions chosen so no position rule fits
        let sets: [&[usize]; 8] = [
            &[0],
            &[1, 2],
            &[1, 2, 3],
            &[3],
            &[0, 1, 2],
            &[0, 1, 2, 3],
            &[2],
            &[0, 3],
        ];
        let beliefs: Vec<ComponentBelief> = sets.iter().map(|s| grid_belief(4, s)).collect();
        let refs: Vec<&ComponentBelief> = beliefs.iter().collect();
        let d = AttributeDomain::default();
        let catalog = catalog_for_axis(Axis::NumberPosition, 4, &d);
        let post = abduce_axis(&catalog, &refs, Axis::NumberPosition, &d, Arrangement::Rows).unwrap();
        let plus = RuleSpec::new(Axis::NumberPosition, RuleKind::Arithmetic, 1);
        let i = catalog.iter().position(|r| *r == plus).unwrap();
        assert!(post.log_scores[i].abs() < 1e-12, "unnormalized score is 1");
        assert_eq!(post.argmax(), i);
        assert!((post.prob_of(&plus) - 1.0).abs() < 1e-12);
        assert!(post
            .log_scores
            .iter()
            .enumerate()
            .all(|(j, &s)| j == i || s == f64::NEG_INFINITY));
    }

    #[test]
    fn empty_rule_set_and_wrong_axis() {
        let b = grid_belief(4, &[0]);
        let refs = vec![&b; 8];
        let d = AttributeDomain::default();
        assert!(abduce_axis(&[], &refs, Axis::Type, &d, Arrangement::Rows).is_err());
        let r = [RuleSpec::new(Axis::Size, RuleKind::Constant, 0)];
        assert!(abduce_axis(&r, &refs, Axis::Type, &d, Arrangement::Rows).is_err());
        assert!(abduce_axis(&r, &refs[..7], Axis::Size, &d, Arrangement::Rows).is_err());
    }

    #[test]
    fn all_zero_scores_fall_back_to_uniform() {
        // sizes 0,0,1 on the first row: nothing in {Constant, Progression(+1)} fits
        let d = AttributeDomain::default();
        let mk = |size: u32| {
            ComponentBelief::from_symbol(
                &ComponentSymbol {
                    occupied: SlotSet::from_mask(1),
                    shape: 0,
                    size,
                    color: 0,
                },
                1,
                &d,
            )
        };
        let beliefs: Vec<ComponentBelief> = [0, 0, 1, 2, 2, 2, 3, 3].iter().map(|&s| mk(s)).collect();
        let refs: Vec<&ComponentBelief> = beliefs.iter().collect();
        let rules = [
            RuleSpec::new(Axis::Size, RuleKind::Constant, 0),
            RuleSpec::new(Axis::Size, RuleKind::Progression, 1),
        ];
        let post = abduce_axis(&rules, &refs, Axis::Size, &d, Arrangement::Rows).unwrap();
        assert!(post.inconsistent);
        assert!((post.probs()[0] - 0.5).abs() < 1e-15);
    }

    fn posterior(probs: &[f64]) -> RulePosterior {
        let rules: Vec<RuleSpec> = (0..probs.len())
            .map(|i| RuleSpec::new(Axis::Color, RuleKind::Progression, i as i8 + 1))
            .collect();
        RulePosterior {
            axis: Axis::Color,
            rules,
            log_scores: probs.iter().map(|p| p.ln()).collect(),
            log_probs: probs.iter().map(|p| p.ln()).collect(),
            line_sums: vec![None; probs.len()],
            inconsistent: false,
        }
    }

    #[test]
    fn select_argmax_and_ties() {
        let p = posterior(&[0.7, 0.2, 0.1]);
        assert_eq!(select_rule(&p, SelectMode::Argmax, 0), p.rules[0]);
        let tie = posterior(&[0.25, 0.375, 0.375]);
        assert_eq!(select_rule(&tie, SelectMode::Argmax, 0), tie.rules[1]);
    }

    #[test]
    fn sample_one_hot() {
        let p = posterior(&[0.0, 1.0, 0.0]);
        for seed in 0..200 {
            assert_eq!(select_rule(&p, SelectMode::Sample, seed), p.rules[1]);
        }
    }

    #[test]
    fn sample_uniform_frequencies() {
        let p = posterior(&[0.25; 4]);
        let mut counts = [0usize; 4];
        for seed in 0..10_000 {
            let r = select_rule(&p, SelectMode::Sample, seed);
            counts[p.rules.iter().position(|x| *x == r).unwrap()] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 0.25).abs() < 0.02, "{counts:?}");
        }
    }
}
