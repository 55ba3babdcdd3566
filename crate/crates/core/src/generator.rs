//! Procedural puzzle synthesis.
//!
//! Each component draws one rule per axis from its catalog, realizes the nine
//! panels row by row with the forward model, and keeps the draw only when no
//! other catalog rule is also consistent with the eight context panels.
//! Candidates come from a three-level attribute bisection around the answer.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    catalog_for_axis, AttributeDomain, Axis, Configuration, RuleKind, RuleSpec, SlotSet,
    ValueSpace,
};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Resampling budget per component axis.
pub const REJECTION_BUDGET: usize = 100;

/// Ground-truth content of one component: occupied slots plus attributes shared by its objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentSymbol {
    pub occupied: SlotSet,
    #[serde(rename = "type")]
    pub shape: u32,
    pub size: u32,
    pub color: u32,
}

impl ComponentSymbol {
    pub fn scalar(&self, axis: Axis) -> u32 {
        match axis {
            Axis::Type => self.shape,
            Axis::Size => self.size,
            Axis::Color => self.color,
            Axis::NumberPosition => self.occupied.len() as u32,
        }
    }

    fn set_scalar(&mut self, axis: Axis, v: u32) {
        match axis {
            Axis::Type => self.shape = v,
            Axis::Size => self.size = v,
            Axis::Color => self.color = v,
            Axis::NumberPosition => unreachable!("number is set through occupied"),
        }
    }

    /// This component's value code in `space`.
    pub fn code(&self, space: ValueSpace) -> u32 {
        match space {
            ValueSpace::Position { .. } => self.occupied.mask() as u32,
            ValueSpace::Number { .. } => self.occupied.len() as u32,
            ValueSpace::Scalar { axis, .. } => self.scalar(axis),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PanelSymbol {
    pub components: Vec<ComponentSymbol>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuzzleInstance {
    pub schema_version: u32,
    pub config: Configuration,
    pub seed: u64,
    pub domain: AttributeDomain,
    /// Per component, one rule per axis in `Axis::ALL` order.
    pub rules: Vec<Vec<RuleSpec>>,
    pub context: Vec<PanelSymbol>,
    pub candidates: Vec<PanelSymbol>,
    pub answer_index: usize,
}

impl PuzzleInstance {
    pub fn answer(&self) -> &PanelSymbol {
        &self.candidates[self.answer_index]
    }

    pub fn rule(&self, component: usize, axis: Axis) -> RuleSpec {
        self.rules[component][axis.index()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: PuzzleInstance = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: "instance".into(),
            source: e,
        })?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let inst: PuzzleInstance = serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            source: e,
        })?;
        inst.validate()?;
        Ok(inst)
    }

    /// Structural checks: panel counts, component shapes, value bounds and rule placement.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Generation(format!("invalid instance: {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        self.domain.validate()?;
        if self.context.len() != 8 || self.candidates.len() != 8 {
            return bad("expected 8 context panels and 8 candidates".into());
        }
        if self.answer_index >= 8 {
            return bad(format!("answer_index {} out of range", self.answer_index));
        }
        let slots = self.config.slot_counts();
        if self.rules.len() != slots.len() {
            return bad("rule list does not match component count".into());
        }
        for (c, rules) in self.rules.iter().enumerate() {
            let catalog: Vec<RuleSpec> = Axis::ALL
                .iter()
                .flat_map(|&a| catalog_for_axis(a, slots[c], &self.domain))
                .collect();
            if rules.len() != 4 || rules.iter().zip(Axis::ALL).any(|(r, a)| r.axis != a) {
                return bad(format!("component {c}: need one rule per axis in order"));
            }
            if let Some(r) = rules.iter().find(|r| !catalog.contains(r)) {
                return bad(format!("component {c}: rule {r} not in catalog"));
            }
        }
        for (i, panel) in self.context.iter().chain(&self.candidates).enumerate() {
            if panel.components.len() != slots.len() {
                return bad(format!("panel {i}: wrong component count"));
            }
            for (c, comp) in panel.components.iter().enumerate() {
                let full = (1u32 << slots[c]) - 1;
                let mask = comp.occupied.mask() as u32;
                if mask == 0 || mask & !full != 0 {
                    return bad(format!("panel {i} component {c}: bad occupied set"));
                }
                for axis in [Axis::Type, Axis::Size, Axis::Color] {
                    if comp.scalar(axis) >= self.domain.levels(axis) {
                        return bad(format!("panel {i} component {c}: {axis} out of range"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn instance_rng(config: Configuration, seed: u64) -> ChaCha8Rng {
    let tag = Configuration::ALL.iter().position(|&c| c == config).unwrap() as u64 + 1;
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Generates a puzzle with the default attribute domain.
pub fn generate(config: Configuration, seed: u64) -> Result<PuzzleInstance> {
    generate_with_domain(config, &AttributeDomain::default(), seed)
}

pub fn generate_with_domain(
    config: Configuration,
    domain: &AttributeDomain,
    seed: u64,
) -> Result<PuzzleInstance> {
    domain.validate()?;
    let mut rng = instance_rng(config, seed);
    let slots = config.slot_counts();
    let mut panels = vec![
        PanelSymbol {
            components: vec![
                ComponentSymbol {
                    occupied: SlotSet::from_mask(1),
                    shape: 0,
                    size: 0,
                    color: 0,
                };
                slots.len()
            ],
        };
        9
    ];
    let mut rules = Vec::with_capacity(slots.len());
    for (c, &n) in slots.iter().enumerate() {
        let mut comp_rules = Vec::with_capacity(4);
        for axis in Axis::ALL {
            let catalog = catalog_for_axis(axis, n, domain);
            let (rule, codes) = sample_axis(&catalog, n, domain, &mut rng).ok_or_else(|| {
                Error::Generation(format!(
                    "{config} component {c} {axis}: rejection budget of {REJECTION_BUDGET} exhausted"
                ))
            })?;
            for (panel, &code) in panels.iter_mut().zip(&codes) {
                let comp = &mut panel.components[c];
                match axis {
                    Axis::NumberPosition => comp.occupied = SlotSet::from_mask(code as u16),
                    _ => comp.set_scalar(axis, code),
                }
            }
            comp_rules.push(rule);
        }
        rules.push(comp_rules);
    }
    let answer = panels.pop().expect("nine panels");
    let candidates = make_distractors(&answer, &rules, config, domain, rng.gen())?;
    Ok(PuzzleInstance {
        schema_version: SCHEMA_VERSION,
        config,
        seed,
        domain: domain.clone(),
        rules,
        context: panels,
        answer_index: candidates.answer_index,
        candidates: candidates.panels,
    })
}

/// Draws a rule and nine realized values (position masks on the number/position
/// axis) such that the drawn rule is the only catalog rule consistent with the
/// first eight.
fn sample_axis(
    catalog: &[RuleSpec],
    slots: usize,
    domain: &AttributeDomain,
    rng: &mut ChaCha8Rng,
) -> Option<(RuleSpec, [u32; 9])> {
    for _ in 0..REJECTION_BUDGET {
        let rule = *catalog.choose(rng)?;
        let space = rule.space(slots, domain);
        let Some(mut codes) = realize(rule, space, rng) else {
            continue;
        };
        if let ValueSpace::Number { .. } = space {
            for code in &mut codes {
                *code = random_subset(slots, *code as usize, rng) as u32;
            }
        }
        let unique = catalog.iter().all(|&other| {
            let other_space = other.space(slots, domain);
            let native: Vec<u32> = codes
                .iter()
                .map(|&m| match other_space {
                    ValueSpace::Number { .. } => m.count_ones(),
                    _ => m,
                })
                .collect();
            let ok = context_consistent(other, other_space, &native[..8]);
            ok == (other == rule)
        });
        if unique {
            return Some((rule, codes));
        }
    }
    None
}

/// Nine value codes in `space` that satisfy `rule` on every row.
fn realize(rule: RuleSpec, space: ValueSpace, rng: &mut ChaCha8Rng) -> Option<[u32; 9]> {
    let m = space.len();
    let mut codes = [0u32; 9];
    if rule.kind == RuleKind::DistributeThree {
        if m < 3 {
            return None;
        }
        let picked = rand::seq::index::sample(rng, m, 3);
        let mut order: Vec<u32> = picked.iter().map(|i| space.code(i)).collect();
        order.shuffle(rng);
        let step = rng.gen_range(1..3);
        for row in 0..3 {
            for col in 0..3 {
                codes[row * 3 + col] = order[(col + row * step) % 3];
            }
        }
        return Some(codes);
    }
    for row in 0..3 {
        let mut found = None;
        for _ in 0..1000 {
            let a = space.code(rng.gen_range(0..m));
            let next: Vec<(u32, u32)> = (0..m)
                .filter_map(|j| {
                    let b = space.code(j);
                    rule.apply_code(space, a, b).map(|c| (b, c))
                })
                .collect();
            if let Some(&(b, c)) = next.choose(rng) {
                found = Some((a, b, c));
                break;
            }
        }
        let (a, b, c) = found?;
        codes[row * 3..row * 3 + 3].copy_from_slice(&[a, b, c]);
    }
    Some(codes)
}

fn random_subset(slots: usize, k: usize, rng: &mut ChaCha8Rng) -> u16 {
    rand::seq::index::sample(rng, slots, k)
        .iter()
        .fold(0u16, |m, s| m | 1 << s)
}

/// Whether `rule` explains the eight context codes: rows one and two hold, and
/// the third row's first two values satisfy the precondition (for
/// DistributeThree: all rows draw from one shared triple).
pub(crate) fn context_consistent(rule: RuleSpec, space: ValueSpace, codes: &[u32]) -> bool {
    if rule.kind == RuleKind::DistributeThree {
        let sorted = |row: &[u32]| {
            let mut r = [row[0], row[1], row[2]];
            r.sort_unstable();
            (r[0] != r[1] && r[1] != r[2]).then_some(r)
        };
        let (Some(t1), Some(t2)) = (sorted(&codes[0..3]), sorted(&codes[3..6])) else {
            return false;
        };
        return t1 == t2 && codes[6] != codes[7] && t1.contains(&codes[6]) && t1.contains(&codes[7]);
    }
    rule.apply_code(space, codes[0], codes[1]) == Some(codes[2])
        && rule.apply_code(space, codes[3], codes[4]) == Some(codes[5])
        && rule.apply_code(space, codes[6], codes[7]).is_some()
}

/// Eight candidates with the answer at `answer_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub panels: Vec<PanelSymbol>,
    pub answer_index: usize,
}

#[derive(Debug, Clone, Copy)]
struct Perturbation {
    component: usize,
    axis: Axis,
    value: ComponentSymbol,
}

/// Builds candidates by attribute bisection: three levels, each perturbing a
/// different (component, axis) to a fresh value, giving eight distinct leaves.
/// The unperturbed leaf is the answer; leaf order is shuffled.
pub fn make_distractors(
    answer: &PanelSymbol,
    rules: &[Vec<RuleSpec>],
    config: Configuration,
    domain: &AttributeDomain,
    seed: u64,
) -> Result<CandidateSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = config.slot_counts();
    let mut axes: Vec<(usize, Axis)> = Vec::new();
    for (c, &n) in slots.iter().enumerate() {
        for axis in Axis::ALL {
            let perturbable = match axis {
                Axis::NumberPosition => n >= 2,
                _ => domain.levels(axis) >= 2,
            };
            if perturbable {
                axes.push((c, axis));
            }
        }
    }
    if axes.len() < 3 {
        return Err(Error::Generation(
            "need at least three perturbable attributes for distractors".into(),
        ));
    }
    axes.shuffle(&mut rng);
    let levels: Vec<Perturbation> = axes[..3]
        .iter()
        .map(|&(component, axis)| {
            let mut value = answer.components[component];
            let n = slots[component];
            match axis {
                Axis::NumberPosition => {
                    let current = value.occupied;
                    if rules[component][0].position_mode {
                        let full = (1u32 << n) - 1;
                        let mut mask = current.mask() as u32;
                        while mask == current.mask() as u32 {
                            mask = rng.gen_range(1..=full);
                        }
                        value.occupied = SlotSet::from_mask(mask as u16);
                    } else {
                        let mut k = current.len();
                        while k == current.len() {
                            k = rng.gen_range(1..=n);
                        }
                        value.occupied = SlotSet::from_mask(random_subset(n, k, &mut rng));
                    }
                }
                _ => {
                    let cur = value.scalar(axis);
                    let levels = domain.levels(axis);
                    let mut v = cur;
                    while v == cur {
                        v = rng.gen_range(0..levels);
                    }
                    value.set_scalar(axis, v);
                }
            }
            Perturbation {
                component,
                axis,
                value,
            }
        })
        .collect();

    let mut leaves: Vec<(usize, PanelSymbol)> = (0..8)
        .map(|bits| {
            let mut panel = answer.clone();
            for (level, p) in levels.iter().enumerate() {
                if bits >> level & 1 == 1 {
                    let comp = &mut panel.components[p.component];
                    match p.axis {
                        Axis::NumberPosition => comp.occupied = p.value.occupied,
                        axis => comp.set_scalar(axis, p.value.scalar(axis)),
                    }
                }
            }
            (bits, panel)
        })
        .collect();
    leaves.shuffle(&mut rng);
    let answer_index = leaves.iter().position(|(bits, _)| *bits == 0).unwrap();
    Ok(CandidateSet {
        panels: leaves.into_iter().map(|(_, p)| p).collect(),
        answer_index,
    })
}

/// Context-blind baseline: score each candidate by how common its attribute
/// values are among the candidates, pick the best (lowest index on ties).
pub fn majority_vote_baseline(candidates: &[PanelSymbol]) -> usize {
    let score = |p: &PanelSymbol| -> usize {
        p.components
            .iter()
            .enumerate()
            .map(|(c, comp)| {
                candidates
                    .iter()
                    .map(|other| {
                        let o = &other.components[c];
                        (o.occupied == comp.occupied) as usize
                            + (o.shape == comp.shape) as usize
                            + (o.size == comp.size) as usize
                            + (o.color == comp.color) as usize
                    })
                    .sum::<usize>()
            })
            .sum()
    };
    let scores: Vec<usize> = candidates.iter().map(score).collect();
    let best = *scores.iter().max().unwrap_or(&0);
    scores.iter().position(|&s| s == best).unwrap_or(0)
}
