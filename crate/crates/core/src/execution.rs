//! Probabilistic execution: run the selected rules forward on the partial
//! line to predict the missing panel's attribute distributions.
//!
//! For a rule with forward model `f`, mass on outcome `v` is the total
//! probability of the pairs `(a, b)` in the rule's precondition with
//! `f(a, b) = v`, renormalized over all reachable outcomes. DistributeThree
//! completes the partial line from the triple posterior of abduction.

use serde::Serialize;

use crate::abduction::{pair_table, triple_posterior, Arrangement, TriplePosterior};
use crate::abduction::triples::Strategy;
use crate::domain::{AttributeDomain, Axis, Configuration, RuleKind, RuleSpec, ValueSpace};
use crate::error::{Error, Result};
use crate::logspace::{round_sig12, LogAccumulator, LogDist};
use crate::scene::{number_from_position, ComponentBelief, ComponentDump, PanelBelief};

/// Execution result on one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisPrediction {
    pub dist: LogDist,
    /// Log of the mass that satisfied the rule's precondition before renormalizing.
    pub log_precondition_mass: f64,
}

/// Runs `rule` on the two known values of the partial line.
///
/// `triple` must be given exactly when the rule is DistributeThree.
pub fn execute_axis(
    rule: RuleSpec,
    space: ValueSpace,
    b7: &LogDist,
    b8: &LogDist,
    triple: Option<&TriplePosterior>,
) -> Result<AxisPrediction> {
    let m = space.len();
    if b7.len() != m || b8.len() != m {
        return Err(Error::contract(format!(
            "execution of {rule} expects distributions of length {m}"
        )));
    }
    let weights = match (rule.kind, triple) {
        (RuleKind::DistributeThree, Some(t)) => {
            if t.space_len() != m {
                return Err(Error::contract("triple posterior does not match the value space"));
            }
            t.complete(b7.log_probs(), b8.log_probs(), Strategy::Auto)
        }
        (RuleKind::DistributeThree, None) => {
            return Err(Error::contract("DistributeThree execution needs the triple posterior"))
        }
        (_, Some(_)) => return Err(Error::contract("triple posterior given for a non-DistributeThree rule")),
        (_, None) => {
            let (p, q) = (b7.log_probs(), b8.log_probs());
            let mut acc = vec![LogAccumulator::new(); m];
            for &[i, j, k] in pair_table(rule, space).iter() {
                acc[k as usize].add(p[i as usize] + q[j as usize]);
            }
            acc.iter().map(|a| a.value()).collect()
        }
    };
    let mass = crate::logspace::log_sum_exp(&weights);
    let dist = LogDist::from_log_weights(weights)
        .map_err(|_| Error::ExecutionInfeasible { rule: rule.to_string() })?;
    Ok(AxisPrediction {
        dist,
        log_precondition_mass: mass.min(0.0),
    })
}

/// Position distribution uniform over the subsets of each predicted count.
pub fn position_from_number(number: &LogDist, slots: usize) -> LogDist {
    let ln_binom: Vec<f64> = (0..=slots).map(|k| ln_choose(slots, k)).collect();
    let weights = (1usize..1 << slots)
        .map(|mask| {
            let k = mask.count_ones() as usize;
            number.log_probs()[k - 1] - ln_binom[k]
        })
        .collect();
    LogDist::from_log_weights(weights).expect("number distribution is normalized")
}

fn ln_choose(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// Per-axis provenance of a predicted component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisAnnotation {
    pub axis: Axis,
    pub rule: RuleSpec,
    pub precondition_mass: f64,
}

/// The predicted ninth panel together with the rules that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedScene {
    pub belief: PanelBelief,
    /// Outer index component, inner index in `Axis::ALL` order.
    pub annotations: Vec<Vec<AxisAnnotation>>,
}

impl PredictedScene {
    /// Whether the number/position axis of `component` ran in position mode.
    pub fn position_mode(&self, component: usize) -> bool {
        self.annotations[component][Axis::NumberPosition.index()].rule.position_mode
    }

    pub fn dump(&self) -> PredictedSceneDump {
        PredictedSceneDump {
            components: self
                .belief
                .components
                .iter()
                .zip(&self.annotations)
                .map(|(c, a)| PredictedComponentDump {
                    belief: ComponentDump::from(c),
                    rules: a
                        .iter()
                        .map(|x| AnnotationDump {
                            axis: x.axis,
                            rule: x.rule.to_string(),
                            precondition_mass: round_sig12(x.precondition_mass),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictedSceneDump {
    pub components: Vec<PredictedComponentDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictedComponentDump {
    #[serde(flatten)]
    pub belief: ComponentDump,
    pub rules: Vec<AnnotationDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnotationDump {
    pub axis: Axis,
    pub rule: String,
    pub precondition_mass: f64,
}

/// Executes one rule per component and axis (`rules[c][axis.index()]`) on the
/// partial line of the eight context beliefs.
pub fn execute_scene(
    rules: &[Vec<RuleSpec>],
    context: &[PanelBelief],
    config: Configuration,
    domain: &AttributeDomain,
    arrangement: Arrangement,
) -> Result<PredictedScene> {
    if context.len() != 8 {
        return Err(Error::contract("execution needs 8 context panels"));
    }
    let slot_counts = config.slot_counts();
    if rules.len() != slot_counts.len()
        || context.iter().any(|p| p.components.len() != slot_counts.len())
    {
        return Err(Error::contract("rules or beliefs do not match the configuration"));
    }
    let (_, partial) = arrangement.lines();
    let mut components = Vec::with_capacity(rules.len());
    let mut annotations = Vec::with_capacity(rules.len());
    for (c, comp_rules) in rules.iter().enumerate() {
        if comp_rules.len() != Axis::ALL.len() {
            return Err(Error::contract("one rule per axis is required"));
        }
        let beliefs: Vec<&ComponentBelief> = context.iter().map(|p| &p.components[c]).collect();
        let slots = slot_counts[c];
        let mut notes = Vec::with_capacity(4);
        let mut dists = Vec::with_capacity(4);
        for (&axis, &rule) in Axis::ALL.iter().zip(comp_rules) {
            if rule.axis != axis {
                return Err(Error::contract(format!("rule {rule} is not on axis {axis}")));
            }
            let space = rule.space(slots, domain);
            let triple = if rule.kind == RuleKind::DistributeThree {
                Some(triple_posterior(rule, &beliefs, domain, arrangement)?)
            } else {
                None
            };
            let b7 = beliefs[partial[0]].dist(space);
            let b8 = beliefs[partial[1]].dist(space);
            let pred = execute_axis(rule, space, b7, b8, triple.as_ref())?;
            notes.push(AxisAnnotation {
                axis,
                rule,
                precondition_mass: pred.log_precondition_mass.exp(),
            });
            dists.push(pred.dist);
        }
        let mut it = dists.into_iter();
        let np = it.next().unwrap();
        let (position, number) = if comp_rules[0].position_mode {
            let number = number_from_position(&np, slots);
            (np, number)
        } else {
            (position_from_number(&np, slots), np)
        };
        components.push(ComponentBelief {
            slots,
            position,
            number,
            shape: it.next().unwrap(),
            size: it.next().unwrap(),
            color: it.next().unwrap(),
        });
        annotations.push(notes);
    }
    Ok(PredictedScene {
        belief: PanelBelief { components },
        annotations,
    })
}
