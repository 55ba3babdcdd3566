//! Attribute domains, panel configurations and the values rules operate on.

mod rules;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use rules::{catalog_for_axis, RuleKind, RuleSpec, Triple};

/// Shape names understood by the renderer, in default index order.
pub const SHAPES: [&str; 5] = ["triangle", "square", "pentagon", "hexagon", "circle"];

/// Value sets for the scalar object attributes. Rules operate on indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeDomain {
    pub types: Vec<String>,
    pub sizes: u32,
    pub colors: u32,
}

impl Default for AttributeDomain {
    fn default() -> Self {
        AttributeDomain {
            types: SHAPES.iter().map(|s| s.to_string()).collect(),
            sizes: 6,
            colors: 10,
        }
    }
}

impl AttributeDomain {
    pub fn validate(&self) -> Result<()> {
        if self.types.is_empty() || self.sizes == 0 || self.colors == 0 {
            return Err(Error::contract("attribute domains must be non-empty"));
        }
        for (i, t) in self.types.iter().enumerate() {
            if !SHAPES.contains(&t.as_str()) {
                return Err(Error::contract(format!("unknown shape type {t:?}")));
            }
            if self.types[..i].contains(t) {
                return Err(Error::contract(format!("duplicate shape type {t:?}")));
            }
        }
        Ok(())
    }

    /// Parses the JSON domain file `{types: [...], sizes: int, colors: int}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let domain: AttributeDomain = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: "domain file".into(),
            source: e,
        })?;
        domain.validate()?;
        Ok(domain)
    }

    pub fn levels(&self, axis: Axis) -> u32 {
        match axis {
            Axis::Type => self.types.len() as u32,
            Axis::Size => self.sizes,
            Axis::Color => self.colors,
            Axis::NumberPosition => 0,
        }
    }
}

/// One rule-bearing panel attribute. Number and position share an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    NumberPosition,
    Type,
    Size,
    Color,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::NumberPosition, Axis::Type, Axis::Size, Axis::Color];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::NumberPosition => "NumberPosition",
            Axis::Type => "Type",
            Axis::Size => "Size",
            Axis::Color => "Color",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotGeometry {
    pub center_x: f64,
    pub center_y: f64,
    pub max_extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentLayout {
    pub slots: Vec<SlotGeometry>,
    pub row_major_order: Vec<usize>,
}

impl ComponentLayout {
    fn new(slots: Vec<SlotGeometry>) -> Self {
        let row_major_order = (0..slots.len()).collect();
        ComponentLayout {
            slots,
            row_major_order,
        }
    }

    fn single(cx: f64, cy: f64, extent: f64) -> Self {
        Self::new(vec![SlotGeometry {
            center_x: cx,
            center_y: cy,
            max_extent: extent,
        }])
    }

    fn grid(n: usize, cx: f64, cy: f64, pitch: f64, extent: f64) -> Self {
        let half = (n as f64 - 1.0) / 2.0;
        let mut slots = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                slots.push(SlotGeometry {
                    center_x: cx + (col as f64 - half) * pitch,
                    center_y: cy + (row as f64 - half) * pitch,
                    max_extent: extent,
                });
            }
        }
        Self::new(slots)
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }
}

/// The seven panel layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Configuration {
    Center,
    Grid2x2,
    Grid3x3,
    LeftRight,
    UpDown,
    OutInCenter,
    OutInGrid,
}

impl Configuration {
    pub const ALL: [Configuration; 7] = [
        Configuration::Center,
        Configuration::Grid2x2,
        Configuration::Grid3x3,
        Configuration::LeftRight,
        Configuration::UpDown,
        Configuration::OutInCenter,
        Configuration::OutInGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Configuration::Center => "Center",
            Configuration::Grid2x2 => "2x2Grid",
            Configuration::Grid3x3 => "3x3Grid",
            Configuration::LeftRight => "L-R",
            Configuration::UpDown => "U-D",
            Configuration::OutInCenter => "O-IC",
            Configuration::OutInGrid => "O-IG",
        }
    }

    /// Component layouts in normalized panel coordinates.
    pub fn components(self) -> Vec<ComponentLayout> {
        match self {
            Configuration::Center => vec![ComponentLayout::single(0.5, 0.5, 0.8)],
            Configuration::Grid2x2 => vec![ComponentLayout::grid(2, 0.5, 0.5, 0.5, 0.45)],
            Configuration::Grid3x3 => vec![ComponentLayout::grid(3, 0.5, 0.5, 1.0 / 3.0, 0.3)],
            Configuration::LeftRight => vec![
                ComponentLayout::single(0.25, 0.5, 0.45),
                ComponentLayout::single(0.75, 0.5, 0.45),
            ],
            Configuration::UpDown => vec![
                ComponentLayout::single(0.5, 0.25, 0.45),
                ComponentLayout::single(0.5, 0.75, 0.45),
            ],
            Configuration::OutInCenter => vec![
                ComponentLayout::single(0.5, 0.5, 0.9),
                ComponentLayout::single(0.5, 0.5, 0.35),
            ],
            Configuration::OutInGrid => vec![
                ComponentLayout::single(0.5, 0.5, 0.9),
                ComponentLayout::grid(2, 0.5, 0.5, 0.2, 0.18),
            ],
        }
    }

    pub fn slot_counts(self) -> Vec<usize> {
        self.components().iter().map(|c| c.slot_count()).collect()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Configuration::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::contract(format!("unknown configuration {s:?}")))
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A non-empty set of occupied slots, bit `i` for slot `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotSet(u16);

impl SlotSet {
    pub fn from_mask(mask: u16) -> Self {
        SlotSet(mask)
    }

    pub fn from_slots(slots: impl IntoIterator<Item = usize>) -> Self {
        SlotSet(slots.into_iter().fold(0u16, |m, s| m | (1 << s)))
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, slot: usize) -> bool {
        self.0 >> slot & 1 == 1
    }

    pub fn slots(self) -> impl Iterator<Item = usize> {
        (0..16).filter(move |&i| self.0 >> i & 1 == 1)
    }
}

impl fmt::Display for SlotSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let slots: Vec<String> = self.slots().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", slots.join(","))
    }
}

impl Serialize for SlotSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.slots())
    }
}

impl<'de> Deserialize<'de> for SlotSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let slots = Vec::<usize>::deserialize(d)?;
        if slots.iter().any(|&s| s >= 16) {
            return Err(serde::de::Error::custom("slot index out of range"));
        }
        Ok(SlotSet::from_slots(slots))
    }
}

/// A value on one rule axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisValue {
    Subset(SlotSet),
    Scalar(u32),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Subset(s) => s.fmt(f),
            AxisValue::Scalar(v) => v.fmt(f),
        }
    }
}

/// The outcome space a rule reads: cardinality, slot subset, or a scalar attribute.
///
/// Values are addressed either as codes (`k` for numbers, the bitmask for
/// subsets, the level for scalars) or as dense indices into a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueSpace {
    Number { slots: u8 },
    Position { slots: u8 },
    Scalar { axis: Axis, levels: u32 },
}

impl ValueSpace {
    pub fn len(self) -> usize {
        match self {
            ValueSpace::Number { slots } => slots as usize,
            ValueSpace::Position { slots } => (1usize << slots) - 1,
            ValueSpace::Scalar { levels, .. } => levels as usize,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub(crate) fn offset(self) -> u32 {
        match self {
            ValueSpace::Scalar { .. } => 0,
            _ => 1,
        }
    }

    #[inline]
    pub fn code(self, index: usize) -> u32 {
        index as u32 + self.offset()
    }

    #[inline]
    pub fn index(self, code: u32) -> usize {
        (code - self.offset()) as usize
    }

    pub fn value(self, index: usize) -> AxisValue {
        match self {
            ValueSpace::Position { .. } => AxisValue::Subset(SlotSet(self.code(index) as u16)),
            _ => AxisValue::Scalar(self.code(index)),
        }
    }

    /// Dense index of `value`, checking variant and bounds.
    pub fn index_of(self, value: AxisValue) -> Result<usize> {
        let code = match (self, value) {
            (ValueSpace::Position { .. }, AxisValue::Subset(s)) => s.mask() as u32,
            (ValueSpace::Position { .. }, AxisValue::Scalar(_)) => {
                return Err(Error::contract("position space expects a slot subset"))
            }
            (_, AxisValue::Scalar(v)) => v,
            (_, AxisValue::Subset(_)) => {
                return Err(Error::contract(format!("{self:?} expects a scalar value")))
            }
        };
        if code < self.offset() || self.index(code) >= self.len() {
            return Err(Error::contract(format!(
                "value {value} outside {self:?}"
            )));
        }
        Ok(self.index(code))
    }
}
