//! Answer selection by Jensen–Shannon divergence between the predicted scene
//! and each candidate's scene belief.

use serde::{Deserialize, Serialize};

use crate::domain::Axis;
use crate::error::{Error, Result};
use crate::execution::PredictedScene;
use crate::logspace::{round_sig12, LogDist};
use crate::scene::PanelBelief;

const LN_2: f64 = std::f64::consts::LN_2;

/// Jensen–Shannon divergence in nats, with `0 ln 0 = 0`.
pub fn jsd(p: &LogDist, q: &LogDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::contract(format!(
            "jsd over spaces of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(jsd_linear(&p.probs(), &q.probs()))
}

/// Same as [`jsd`] on plain probability vectors of equal length.
pub fn jsd_linear(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        // summing both halves per outcome keeps the result symmetric bit for bit
        let term = |x: f64| if x > 0.0 { x * (x / m).ln() } else { 0.0 };
        total += 0.5 * (term(a) + term(b));
    }
    total.clamp(0.0, LN_2)
}

/// Which attribute distributions enter the divergence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeSet {
    /// Position, number, type, size and color of every component.
    #[default]
    All,
    /// Only the number or position term the executed rule produced, plus the
    /// scalar attributes.
    Executed,
}

/// Divergence per attribute, summed over components.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub position: f64,
    pub number: f64,
    #[serde(rename = "type")]
    pub shape: f64,
    pub size: f64,
    pub color: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.position + self.number + self.shape + self.size + self.color
    }

    fn rounded(&self) -> Self {
        Breakdown {
            position: round_sig12(self.position),
            number: round_sig12(self.number),
            shape: round_sig12(self.shape),
            size: round_sig12(self.size),
            color: round_sig12(self.color),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerReport {
    pub divergences: Vec<f64>,
    pub answer_probs: Vec<f64>,
    pub chosen: usize,
    pub breakdown: Vec<Breakdown>,
}

impl AnswerReport {
    /// Copy with every real rounded to 12 significant digits, for output.
    pub fn rounded(&self) -> Self {
        AnswerReport {
            divergences: self.divergences.iter().map(|&d| round_sig12(d)).collect(),
            answer_probs: self.answer_probs.iter().map(|&p| round_sig12(p)).collect(),
            chosen: self.chosen,
            breakdown: self.breakdown.iter().map(Breakdown::rounded).collect(),
        }
    }
}

fn divergence(pred: &PredictedScene, cand: &PanelBelief, attrs: AttributeSet) -> Result<Breakdown> {
    if cand.components.len() != pred.belief.components.len() {
        return Err(Error::contract("candidate and prediction differ in components"));
    }
    let mut b = Breakdown::default();
    for (c, (p, q)) in pred.belief.components.iter().zip(&cand.components).enumerate() {
        let (use_pos, use_num) = match attrs {
            AttributeSet::All => (true, true),
            AttributeSet::Executed => {
                let pm = pred.position_mode(c);
                (pm, !pm)
            }
        };
        if use_pos {
            b.position += jsd(&p.position, &q.position)?;
        }
        if use_num {
            b.number += jsd(&p.number, &q.number)?;
        }
        b.shape += jsd(p.scalar(Axis::Type), q.scalar(Axis::Type))?;
        b.size += jsd(p.scalar(Axis::Size), q.scalar(Axis::Size))?;
        b.color += jsd(p.scalar(Axis::Color), q.scalar(Axis::Color))?;
    }
    Ok(b)
}

/// Softmax of negated divergences.
pub fn answer_probs(divergences: &[f64]) -> Vec<f64> {
    let min = divergences.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = divergences.iter().map(|d| (min - d).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Scores every candidate against the prediction; lowest index wins ties.
pub fn score_candidates(
    pred: &PredictedScene,
    candidates: &[PanelBelief],
    attrs: AttributeSet,
) -> Result<AnswerReport> {
    if candidates.is_empty() {
        return Err(Error::contract("no candidates"));
    }
    let breakdown = candidates
        .iter()
        .map(|c| divergence(pred, c, attrs))
        .collect::<Result<Vec<_>>>()?;
    let divergences: Vec<f64> = breakdown.iter().map(Breakdown::total).collect();
    let mut chosen = 0;
    for (i, &d) in divergences.iter().enumerate() {
        if d < divergences[chosen] {
            chosen = i;
        }
    }
    Ok(AnswerReport {
        answer_probs: answer_probs(&divergences),
        divergences,
        chosen,
        breakdown,
    })
}

pub fn answer_cross_entropy(report: &AnswerReport, answer_index: usize) -> f64 {
    -report.answer_probs[answer_index].ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: &[f64]) -> LogDist {
        LogDist::from_weights(p).unwrap()
    }

    #[test]
    fn jsd_examples() {
        assert_eq!(jsd(&d(&[0.3, 0.7]), &d(&[0.3, 0.7])).unwrap(), 0.0);
        assert!((jsd(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap() - LN_2).abs() < 1e-15);
        let v = jsd(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap();
        assert!((v - 0.215_761_554_338_835_7).abs() < 1e-12, "{v}");
        assert!(jsd(&d(&[1.0]), &d(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn softmax_examples() {
        assert!(answer_probs(&[2.0; 8]).iter().all(|p| (p - 0.125).abs() < 1e-15));
        let report = AnswerReport {
            divergences: vec![0.0; 8],
            answer_probs: answer_probs(&[0.0; 8]),
            chosen: 0,
            breakdown: vec![],
        };
        assert!((answer_cross_entropy(&report, 3) - 8f64.ln()).abs() < 1e-12);
        let p = answer_probs(&[0.0, 1000.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }
}
