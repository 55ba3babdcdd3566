//! Scene inference: exact marginalization of per-slot object beliefs into
//! panel attribute distributions (position, number, type, size, color).
//!
//! A panel is assumed to hold at least one object, so the empty configuration
//! is dropped and the rest renormalized. Type, size and color are the
//! probability that at least one object is present and every present object
//! carries the value; panels with mixed values get no mass.

use serde::Serialize;

use crate::domain::{AttributeDomain, Axis, ValueSpace};
use crate::error::{Error, Result};
use crate::generator::{ComponentSymbol, PanelSymbol};
use crate::logspace::{log_sub, round_sig12, LogDist};
use crate::perception::ObjectBelief;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentBelief {
    pub slots: usize,
    /// Indexed by slot mask minus one.
    pub position: LogDist,
    /// Indexed by count minus one.
    pub number: LogDist,
    pub shape: LogDist,
    pub size: LogDist,
    pub color: LogDist,
}

/// Probabilistic scene representation of one panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelBelief {
    pub components: Vec<ComponentBelief>,
}

impl ComponentBelief {
    pub fn scalar(&self, axis: Axis) -> &LogDist {
        match axis {
            Axis::Type => &self.shape,
            Axis::Size => &self.size,
            Axis::Color => &self.color,
            Axis::NumberPosition => &self.number,
        }
    }

    /// The distribution a rule over `space` reads.
    pub fn dist(&self, space: ValueSpace) -> &LogDist {
        match space {
            ValueSpace::Position { .. } => &self.position,
            ValueSpace::Number { .. } => &self.number,
            ValueSpace::Scalar { axis, .. } => self.scalar(axis),
        }
    }

    /// Point-mass belief equal to a ground-truth symbol.
    pub fn from_symbol(symbol: &ComponentSymbol, slots: usize, domain: &AttributeDomain) -> Self {
        let lv = |axis| domain.levels(axis) as usize;
        ComponentBelief {
            slots,
            position: LogDist::point_mass((1 << slots) - 1, symbol.occupied.mask() as usize - 1),
            number: LogDist::point_mass(slots, symbol.occupied.len() - 1),
            shape: LogDist::point_mass(lv(Axis::Type), symbol.shape as usize),
            size: LogDist::point_mass(lv(Axis::Size), symbol.size as usize),
            color: LogDist::point_mass(lv(Axis::Color), symbol.color as usize),
        }
    }

    pub fn all_dists(&self) -> [&LogDist; 5] {
        [&self.position, &self.number, &self.shape, &self.size, &self.color]
    }
}

impl PanelBelief {
    pub fn from_symbol(panel: &PanelSymbol, slot_counts: &[usize], domain: &AttributeDomain) -> Self {
        PanelBelief {
            components: panel
                .components
                .iter()
                .zip(slot_counts)
                .map(|(c, &n)| ComponentBelief::from_symbol(c, n, domain))
                .collect(),
        }
    }

    pub fn dump(&self) -> PanelBeliefDump {
        PanelBeliefDump {
            components: self.components.iter().map(ComponentDump::from).collect(),
        }
    }
}

/// Linear-probability view for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct PanelBeliefDump {
    pub components: Vec<ComponentDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentDump {
    pub position: Vec<f64>,
    pub number: Vec<f64>,
    #[serde(rename = "type")]
    pub shape: Vec<f64>,
    pub size: Vec<f64>,
    pub color: Vec<f64>,
}

fn linear(d: &LogDist) -> Vec<f64> {
    d.probs().into_iter().map(round_sig12).collect()
}

impl From<&ComponentBelief> for ComponentDump {
    fn from(c: &ComponentBelief) -> Self {
        ComponentDump {
            position: linear(&c.position),
            number: linear(&c.number),
            shape: linear(&c.shape),
            size: linear(&c.size),
            color: linear(&c.color),
        }
    }
}

fn check_slots(obj: &ObjectBelief) -> Result<()> {
    let n = obj.slots.len();
    if n == 0 || n > 12 {
        return Err(Error::contract(format!("unsupported slot count {n}")));
    }
    if obj.slots.iter().any(|s| !(0.0..=1.0).contains(&s.p_object)) {
        return Err(Error::contract("objectiveness outside [0, 1]"));
    }
    Ok(())
}

fn no_objects() -> Error {
    Error::DegenerateBelief("every slot is certainly empty".into())
}

/// Distribution over non-empty occupied-slot subsets.
pub fn infer_position(obj: &ObjectBelief) -> Result<LogDist> {
    check_slots(obj)?;
    let n = obj.slots.len();
    let on: Vec<f64> = obj.slots.iter().map(|s| s.p_object.ln()).collect();
    let off: Vec<f64> = obj.slots.iter().map(|s| (1.0 - s.p_object).ln()).collect();
    let weights = (1usize..1 << n)
        .map(|mask| {
            (0..n)
                .map(|j| if mask >> j & 1 == 1 { on[j] } else { off[j] })
                .sum()
        })
        .collect();
    LogDist::from_log_weights(weights).map_err(|_| no_objects())
}

/// Distribution over object counts `1..=N`, by a log-space recurrence over slots.
pub fn infer_number(obj: &ObjectBelief) -> Result<LogDist> {
    check_slots(obj)?;
    let n = obj.slots.len();
    // dp[k] = log P(k objects among the slots seen so far)
    let mut dp = vec![f64::NEG_INFINITY; n + 1];
    dp[0] = 0.0;
    for (j, s) in obj.slots.iter().enumerate() {
        let (on, off) = (s.p_object.ln(), (1.0 - s.p_object).ln());
        for k in (0..=j + 1).rev() {
            let stay = dp[k] + off;
            let grow = if k > 0 { dp[k - 1] + on } else { f64::NEG_INFINITY };
            dp[k] = crate::logspace::log_add(stay, grow);
        }
    }
    LogDist::from_log_weights(dp[1..].to_vec()).map_err(|_| no_objects())
}

/// Distribution over the shared value of a scalar attribute.
pub fn infer_scalar_axis(obj: &ObjectBelief, axis: Axis) -> Result<LogDist> {
    check_slots(obj)?;
    if axis == Axis::NumberPosition {
        return Err(Error::contract("infer_scalar_axis takes type, size or color"));
    }
    let levels = obj.slots[0].dist(axis).len();
    if obj.slots.iter().any(|s| s.dist(axis).len() != levels) {
        return Err(Error::contract(format!("{axis} distributions differ in length")));
    }
    let all_empty: f64 = obj.slots.iter().map(|s| (1.0 - s.p_object).ln()).sum();
    let weights = (0..levels)
        .map(|t| {
            let present_or_t: f64 = obj
                .slots
                .iter()
                .map(|s| ((1.0 - s.p_object) + s.p_object * s.dist(axis)[t]).ln())
                .sum();
            log_sub(present_or_t, all_empty)
        })
        .collect();
    LogDist::from_log_weights(weights).map_err(|_| {
        Error::DegenerateBelief(format!("no consistent {axis} value for the present objects"))
    })
}

pub fn infer_component(obj: &ObjectBelief) -> Result<ComponentBelief> {
    Ok(ComponentBelief {
        slots: obj.slots.len(),
        position: infer_position(obj)?,
        number: infer_number(obj)?,
        shape: infer_scalar_axis(obj, Axis::Type)?,
        size: infer_scalar_axis(obj, Axis::Size)?,
        color: infer_scalar_axis(obj, Axis::Color)?,
    })
}

pub fn infer_panel(objects: &[ObjectBelief]) -> Result<PanelBelief> {
    Ok(PanelBelief {
        components: objects.iter().map(infer_component).collect::<Result<_>>()?,
    })
}

/// Cardinality image of a position distribution.
pub fn number_from_position(position: &LogDist, slots: usize) -> LogDist {
    let mut acc = vec![crate::logspace::LogAccumulator::new(); slots];
    for (i, &lp) in position.log_probs().iter().enumerate() {
        acc[(i + 1).count_ones() as usize - 1].add(lp);
    }
    LogDist::from_log_weights(acc.iter().map(|a| a.value()).collect())
        .expect("position distribution is normalized")
}
