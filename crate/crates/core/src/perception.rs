//! Perception simulator: ground-truth panels to noisy per-slot object beliefs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AttributeDomain, Axis, Configuration};
use crate::error::{Error, Result};
use crate::generator::PanelSymbol;

/// Object attribute distributions for one slot. The type/size/color vectors
/// are conditioned on an object being present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotBelief {
    pub p_object: f64,
    pub type_dist: Vec<f64>,
    pub size_dist: Vec<f64>,
    pub color_dist: Vec<f64>,
}

impl SlotBelief {
    pub fn dist(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::Type => &self.type_dist,
            Axis::Size => &self.size_dist,
            Axis::Color => &self.color_dist,
            Axis::NumberPosition => panic!("no per-slot distribution for the number/position axis"),
        }
    }
}

/// Per-slot beliefs for one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectBelief {
    pub slots: Vec<SlotBelief>,
}

/// Noise for one categorical attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeNoise {
    /// Truth keeps `1 - ε`; `ε` is spread evenly over the other values.
    Symmetric(f64),
    /// Row `t` is the belief emitted when the true value is `t`.
    Matrix(Vec<Vec<f64>>),
}

impl AttributeNoise {
    fn validate(&self, levels: usize, name: &str) -> Result<()> {
        match self {
            AttributeNoise::Symmetric(e) => check_epsilon(*e),
            AttributeNoise::Matrix(rows) => {
                if rows.len() != levels || rows.iter().any(|r| r.len() != levels) {
                    return Err(Error::contract(format!(
                        "{name} confusion matrix must be {levels}x{levels}"
                    )));
                }
                for r in rows {
                    let total: f64 = r.iter().sum();
                    if r.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
                        return Err(Error::contract(format!(
                            "{name} confusion matrix rows must be distributions"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    fn belief(&self, truth: u32, levels: usize, epsilon_scale: f64) -> Vec<f64> {
        match self {
            AttributeNoise::Symmetric(e) => symmetric(truth as usize, levels, (e * epsilon_scale).min(1.0)),
            AttributeNoise::Matrix(rows) => rows[truth as usize].clone(),
        }
    }
}

/// Noise model file: `{objectiveness: ε, type: ε | matrix, size: ..., color: ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub objectiveness: f64,
    #[serde(rename = "type")]
    pub shape: AttributeNoise,
    pub size: AttributeNoise,
    pub color: AttributeNoise,
}

impl NoiseModel {
    pub fn symmetric(epsilon: f64) -> Self {
        NoiseModel {
            objectiveness: epsilon,
            shape: AttributeNoise::Symmetric(epsilon),
            size: AttributeNoise::Symmetric(epsilon),
            color: AttributeNoise::Symmetric(epsilon),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: "noise model".into(),
            source: e,
        })
    }

    pub fn validate(&self, domain: &AttributeDomain) -> Result<()> {
        check_epsilon(self.objectiveness)?;
        self.shape.validate(domain.levels(Axis::Type) as usize, "type")?;
        self.size.validate(domain.levels(Axis::Size) as usize, "size")?;
        self.color.validate(domain.levels(Axis::Color) as usize, "color")
    }
}

/// Extra knobs for [`corrupt_with`]. `jitter > 0` scales each slot's ε by a
/// seeded factor in `[1 - jitter, 1 + jitter]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CorruptOptions {
    pub seed: u64,
    pub jitter: f64,
}

fn check_epsilon(e: f64) -> Result<()> {
    if (0.0..=1.0).contains(&e) {
        Ok(())
    } else {
        Err(Error::contract(format!("epsilon {e} outside [0, 1]")))
    }
}

fn symmetric(truth: usize, levels: usize, epsilon: f64) -> Vec<f64> {
    if levels == 1 {
        return vec![1.0];
    }
    let off = epsilon / (levels - 1) as f64;
    let mut v = vec![off; levels];
    v[truth] = 1.0 - epsilon;
    v
}

/// Symmetric-noise beliefs for every component of `panel`.
pub fn corrupt(
    panel: &PanelSymbol,
    config: Configuration,
    domain: &AttributeDomain,
    epsilon: f64,
) -> Result<Vec<ObjectBelief>> {
    corrupt_with(
        panel,
        config,
        domain,
        &NoiseModel::symmetric(epsilon),
        CorruptOptions::default(),
    )
}

pub fn corrupt_with(
    panel: &PanelSymbol,
    config: Configuration,
    domain: &AttributeDomain,
    noise: &NoiseModel,
    options: CorruptOptions,
) -> Result<Vec<ObjectBelief>> {
    noise.validate(domain)?;
    if !(0.0..=1.0).contains(&options.jitter) {
        return Err(Error::contract("jitter outside [0, 1]"));
    }
    let slots = config.slot_counts();
    if panel.components.len() != slots.len() {
        return Err(Error::contract("panel does not match configuration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let levels = |axis| domain.levels(axis) as usize;
    let uniform = |axis| vec![1.0 / levels(axis) as f64; levels(axis)];
    Ok(panel
        .components
        .iter()
        .zip(slots)
        .map(|(comp, n)| ObjectBelief {
            slots: (0..n)
                .map(|slot| {
                    let scale = if options.jitter > 0.0 {
                        1.0 + options.jitter * rng.gen_range(-1.0..=1.0)
                    } else {
                        1.0
                    };
                    let eps_obj = (noise.objectiveness * scale).min(1.0);
                    if comp.occupied.contains(slot) {
                        SlotBelief {
                            p_object: 1.0 - eps_obj / 2.0,
                            type_dist: noise.shape.belief(comp.shape, levels(Axis::Type), scale),
                            size_dist: noise.size.belief(comp.size, levels(Axis::Size), scale),
                            color_dist: noise.color.belief(comp.color, levels(Axis::Color), scale),
                        }
                    } else {
                        SlotBelief {
                            p_object: eps_obj / 2.0,
                            type_dist: uniform(Axis::Type),
                            size_dist: uniform(Axis::Size),
                            color_dist: uniform(Axis::Color),
                        }
                    }
                })
                .collect(),
        })
        .collect())
}
