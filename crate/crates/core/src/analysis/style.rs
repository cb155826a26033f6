use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, Spouse};
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Style {
    /// Ignores a negative partner, responds fully to a positive one.
    ConflictAvoiding,
    /// Responds at the ideal level whatever the partner's sign.
    Validating,
    Mixed,
}

impl std::fmt::Display for Style {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Style::ConflictAvoiding => "ConflictAvoiding",
            Style::Validating => "Validating",
            Style::Mixed => "Mixed",
        })
    }
}

/// Classification thresholds, as fractions of the spouse's `u_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StyleThresholds {
    pub low: f64,
    pub high: f64,
    pub flat: f64,
    /// Only nodes with `t <= flat_horizon * T` enter the flatness test.
    pub flat_horizon: f64,
}

impl Default for StyleThresholds {
    fn default() -> Self {
        Self {
            low: 0.15,
            high: 0.7,
            flat: 0.1,
            flat_horizon: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpouseStyle {
    pub label: Style,
    pub mean_u_partner_negative: Option<f64>,
    pub mean_u_partner_positive: Option<f64>,
    pub max_dev_from_u0: f64,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleVerdict {
    pub spouse1: SpouseStyle,
    pub spouse2: SpouseStyle,
}

impl StyleVerdict {
    pub fn labels(&self) -> (Style, Style) {
        (self.spouse1.label, self.spouse2.label)
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn classify_spouse(traj: &Trajectory, p: &ModelParams, th: &StyleThresholds, spouse: Spouse) -> SpouseStyle {
    let (u, partner) = match spouse {
        Spouse::One => (&traj.u1, &traj.x2),
        Spouse::Two => (&traj.u2, &traj.x1),
    };
    let umax = p.umax(spouse);
    let neg: Vec<f64> = u.iter().zip(partner).filter(|(_, x)| **x < 0.0).map(|(u, _)| *u).collect();
    let pos: Vec<f64> = u.iter().zip(partner).filter(|(_, x)| **x > 0.0).map(|(u, _)| *u).collect();
    let cutoff = th.flat_horizon * traj.grid.horizon;
    let max_dev = u
        .iter()
        .enumerate()
        .filter(|(k, _)| traj.time(*k) <= cutoff)
        .map(|(_, u)| (u - p.u0).abs())
        .fold(0.0, f64::max);
    let (mean_neg, mean_pos) = (mean(&neg), mean(&pos));

    let (label, reason) = match (mean_neg, mean_pos) {
        (Some(n), Some(q)) => {
            if n <= th.low * umax && q >= th.high * umax {
                (Style::ConflictAvoiding, None)
            } else if max_dev <= th.flat * umax {
                (Style::Validating, None)
            } else {
                (Style::Mixed, None)
            }
        }
        _ => (Style::Mixed, Some("partner state never takes both signs".to_string())),
    };
    SpouseStyle {
        label,
        mean_u_partner_negative: mean_neg,
        mean_u_partner_positive: mean_pos,
        max_dev_from_u0: max_dev,
        reason,
    }
}

/// Labels each spouse's interaction style from a solved trajectory.
pub fn style_classify(traj: &Trajectory, p: &ModelParams, th: &StyleThresholds) -> StyleVerdict {
    StyleVerdict {
        spouse1: classify_spouse(traj, p, th, Spouse::One),
        spouse2: classify_spouse(traj, p, th, Spouse::Two),
    }
}
