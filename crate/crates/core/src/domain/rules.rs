//! The rule catalog: validity, preconditions and forward models.
//!
//! | kind            | number / scalar axes          | position mode (slot subsets)      |
//! |-----------------|-------------------------------|-----------------------------------|
//! | Constant        | `v1 = v2 = v3`                | same subset in all three panels   |
//! | Progression(d)  | `v2 = v1 + d`, `v3 = v2 + d`  | cyclic row-major shift by `d`     |
//! | Arithmetic(+)   | `v3 = v1 + v2`                | `v3 = v1 ∪ v2`                    |
//! | Arithmetic(-)   | `v3 = v1 - v2`                | `v3 = v1 \ v2`, `v2 ⊊ v1`         |
//! | DistributeThree | row is a permutation of a latent triple shared by all rows      ||
//!
//! Scalar axes operate on level indices; number values range over `1..=slots`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AttributeDomain, Axis, AxisValue, ValueSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleKind {
    Constant,
    Progression,
    Arithmetic,
    DistributeThree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleSpec {
    pub axis: Axis,
    pub kind: RuleKind,
    /// Progression delta or Arithmetic sign; zero otherwise.
    pub param: i8,
    /// On the number/position axis, read slot subsets instead of cardinalities.
    #[serde(default)]
    pub position_mode: bool,
}

/// The latent value set of a DistributeThree rule: three distinct values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple([AxisValue; 3]);

impl Triple {
    pub fn new(a: AxisValue, b: AxisValue, c: AxisValue) -> Result<Self> {
        let mut values = [a, b, c];
        values.sort();
        if values[0] == values[1] || values[1] == values[2] {
            return Err(Error::contract("triple values must be distinct"));
        }
        Ok(Triple(values))
    }

    pub fn values(&self) -> [AxisValue; 3] {
        self.0
    }

    pub fn contains(&self, v: AxisValue) -> bool {
        self.0.contains(&v)
    }
}

impl RuleSpec {
    pub fn new(axis: Axis, kind: RuleKind, param: i8) -> Self {
        RuleSpec {
            axis,
            kind,
            param,
            position_mode: false,
        }
    }

    pub fn position(kind: RuleKind, param: i8) -> Self {
        RuleSpec {
            axis: Axis::NumberPosition,
            kind,
            param,
            position_mode: true,
        }
    }

    /// The outcome space this rule reads for a component with `slots` slots.
    pub fn space(&self, slots: usize, domain: &AttributeDomain) -> ValueSpace {
        match self.axis {
            Axis::NumberPosition if self.position_mode => ValueSpace::Position { slots: slots as u8 },
            Axis::NumberPosition => ValueSpace::Number { slots: slots as u8 },
            axis => ValueSpace::Scalar {
                axis,
                levels: domain.levels(axis),
            },
        }
    }

    fn check_space(&self, space: ValueSpace) -> Result<()> {
        let ok = match space {
            ValueSpace::Number { .. } => self.axis == Axis::NumberPosition && !self.position_mode,
            ValueSpace::Position { .. } => self.axis == Axis::NumberPosition && self.position_mode,
            ValueSpace::Scalar { axis, .. } => self.axis == axis && !self.position_mode,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!("rule {self} cannot read {space:?}")))
        }
    }

    /// Forward model on value codes for every kind except DistributeThree:
    /// `Some(v3)` iff `(a, b)` lies in the precondition set.
    #[inline]
    pub(crate) fn apply_code(&self, space: ValueSpace, a: u32, b: u32) -> Option<u32> {
        match space {
            ValueSpace::Position { slots } => {
                let n = slots as u32;
                match self.kind {
                    RuleKind::Constant => (a == b).then_some(a),
                    RuleKind::Progression => {
                        (b == rotate(a, self.param, n)).then(|| rotate(b, self.param, n))
                    }
                    RuleKind::Arithmetic if self.param > 0 => Some(a | b),
                    RuleKind::Arithmetic => (b & !a == 0 && b != a).then_some(a & !b),
                    RuleKind::DistributeThree => None,
                }
            }
            _ => {
                let lo = space.offset() as i64;
                let hi = lo + space.len() as i64 - 1;
                let (a, b) = (a as i64, b as i64);
                let c = match self.kind {
                    RuleKind::Constant => {
                        if a != b {
                            return None;
                        }
                        a
                    }
                    RuleKind::Progression => {
                        if b != a + self.param as i64 {
                            return None;
                        }
                        b + self.param as i64
                    }
                    RuleKind::Arithmetic if self.param > 0 => a + b,
                    RuleKind::Arithmetic => a - b,
                    RuleKind::DistributeThree => return None,
                };
                (lo..=hi).contains(&c).then_some(c as u32)
            }
        }
    }

    fn check_triple(&self, triple: Option<&Triple>) -> Result<()> {
        match (self.kind == RuleKind::DistributeThree, triple.is_some()) {
            (true, false) => Err(Error::contract("DistributeThree needs its latent triple")),
            (false, true) => Err(Error::contract(format!("{self} takes no triple"))),
            _ => Ok(()),
        }
    }

    /// Whether the row `(v1, v2, v3)` satisfies this rule's logical constraint.
    pub fn holds_row(
        &self,
        space: ValueSpace,
        v1: AxisValue,
        v2: AxisValue,
        v3: AxisValue,
        triple: Option<&Triple>,
    ) -> Result<bool> {
        self.check_space(space)?;
        self.check_triple(triple)?;
        let (a, b, c) = (
            space.code(space.index_of(v1)?),
            space.code(space.index_of(v2)?),
            space.code(space.index_of(v3)?),
        );
        if let Some(t) = triple {
            for v in t.values() {
                space.index_of(v)?;
            }
            return Ok(Triple::new(v1, v2, v3).is_ok_and(|row| row == *t));
        }
        Ok(self.apply_code(space, a, b) == Some(c))
    }

    /// Whether the forward model is defined on `(v1, v2)`.
    pub fn precondition(&self, space: ValueSpace, v1: AxisValue, v2: AxisValue) -> Result<bool> {
        self.check_space(space)?;
        let a = space.code(space.index_of(v1)?);
        let b = space.code(space.index_of(v2)?);
        if self.kind == RuleKind::DistributeThree {
            return Ok(a != b);
        }
        Ok(self.apply_code(space, a, b).is_some())
    }

    /// The unique third value completing the row.
    pub fn forward(
        &self,
        space: ValueSpace,
        v1: AxisValue,
        v2: AxisValue,
        triple: Option<&Triple>,
    ) -> Result<AxisValue> {
        self.check_space(space)?;
        self.check_triple(triple)?;
        let a = space.code(space.index_of(v1)?);
        let b = space.code(space.index_of(v2)?);
        let violated = || Error::Precondition {
            rule: self.to_string(),
            first: v1.to_string(),
            second: v2.to_string(),
        };
        if let Some(t) = triple {
            if a == b || !t.contains(v1) || !t.contains(v2) {
                return Err(violated());
            }
            let rest = t.values().into_iter().find(|&v| v != v1 && v != v2);
            return rest.ok_or_else(violated);
        }
        self.apply_code(space, a, b)
            .map(|c| space.value(space.index(c)))
            .ok_or_else(violated)
    }

    pub fn kind_name(&self) -> String {
        match self.kind {
            RuleKind::Constant => "Constant".into(),
            RuleKind::Progression => format!("Progression({:+})", self.param),
            RuleKind::Arithmetic if self.param > 0 => "Arithmetic(+)".into(),
            RuleKind::Arithmetic => "Arithmetic(-)".into(),
            RuleKind::DistributeThree => "DistributeThree".into(),
        }
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.axis, self.position_mode) {
            (Axis::NumberPosition, true) => write!(f, "Position:{}", self.kind_name()),
            (Axis::NumberPosition, false) => write!(f, "Number:{}", self.kind_name()),
            _ => f.write_str(&self.kind_name()),
        }
    }
}

/// Cyclic shift of the low `n` bits of `mask` by `d` slots.
#[inline]
fn rotate(mask: u32, d: i8, n: u32) -> u32 {
    let s = (d as i64).rem_euclid(n as i64) as u32;
    if s == 0 {
        return mask;
    }
    let full = (1u32 << n) - 1;
    ((mask << s) | (mask >> (n - s))) & full
}

const PROGRESSION_DELTAS: [i8; 4] = [1, -1, 2, -2];

/// The rule hypotheses for one axis of a component, in a fixed order.
///
/// Rules that no row of the component can satisfy are left out, as are
/// position shifts that coincide with an earlier shift (or the identity) modulo
/// the slot count. A single-slot component has no separate position rules.
pub fn catalog_for_axis(axis: Axis, slots: usize, domain: &AttributeDomain) -> Vec<RuleSpec> {
    let mut rules = Vec::new();
    let scalar_rules = |rules: &mut Vec<RuleSpec>, levels: usize, with_arith: bool, lo: i64| {
        rules.push(RuleSpec::new(axis, RuleKind::Constant, 0));
        for d in PROGRESSION_DELTAS {
            if levels > 2 * d.unsigned_abs() as usize {
                rules.push(RuleSpec::new(axis, RuleKind::Progression, d));
            }
        }
        // smallest operands are `lo`, so the sum needs `2*lo` to fit and the
        // difference needs `lo - lo >= lo`
        let hi = lo + levels as i64 - 1;
        if with_arith {
            if 2 * lo <= hi {
                rules.push(RuleSpec::new(axis, RuleKind::Arithmetic, 1));
            }
            if hi - lo >= lo {
                rules.push(RuleSpec::new(axis, RuleKind::Arithmetic, -1));
            }
        }
        if levels >= 3 {
            rules.push(RuleSpec::new(axis, RuleKind::DistributeThree, 0));
        }
    };
    match axis {
        Axis::NumberPosition => {
            scalar_rules(&mut rules, slots, true, 1);
            if slots >= 2 {
                rules.push(RuleSpec::position(RuleKind::Constant, 0));
                let mut shifts = Vec::new();
                for d in PROGRESSION_DELTAS {
                    let s = (d as i64).rem_euclid(slots as i64);
                    if s != 0 && !shifts.contains(&s) {
                        shifts.push(s);
                        rules.push(RuleSpec::position(RuleKind::Progression, d));
                    }
                }
                rules.push(RuleSpec::position(RuleKind::Arithmetic, 1));
                rules.push(RuleSpec::position(RuleKind::Arithmetic, -1));
                rules.push(RuleSpec::position(RuleKind::DistributeThree, 0));
            }
        }
        Axis::Type => scalar_rules(&mut rules, domain.levels(axis) as usize, false, 0),
        Axis::Size | Axis::Color => scalar_rules(&mut rules, domain.levels(axis) as usize, true, 0),
    }
    rules
}
