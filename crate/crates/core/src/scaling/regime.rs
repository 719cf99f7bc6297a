//! Parameter bands that select the branch of each piecewise law.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs are snapped to this grid before boundary comparisons, so that
/// `alpha = 3.0000000001` lands on the `alpha = 3` branch.
pub const SNAP: f64 = 1e-9;

pub fn snap(x: f64) -> f64 {
    let s = (x / SNAP).round() * SNAP;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaBand {
    Lt3,
    Eq3,
    Gt3,
}

/// Position relative to the cut points 3 and 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutBand {
    Lt3,
    Eq3,
    Mid,
    Eq4,
    Gt4,
}

impl CutBand {
    pub fn of(x: f64) -> Self {
        let x = snap(x);
        if x < 3.0 {
            CutBand::Lt3
        } else if x == 3.0 {
            CutBand::Eq3
        } else if x < 4.0 {
            CutBand::Mid
        } else if x == 4.0 {
            CutBand::Eq4
        } else {
            CutBand::Gt4
        }
    }

    pub fn lt3(self) -> bool {
        self == CutBand::Lt3
    }

    pub fn gt3(self) -> bool {
        self > CutBand::Eq3
    }

    pub fn lt4(self) -> bool {
        self < CutBand::Eq4
    }

    pub fn gt4(self) -> bool {
        self == CutBand::Gt4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaBand {
    Gt1,
    Le1,
}

/// Snapped parameters together with their bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha_band: AlphaBand,
    pub beta_band: CutBand,
    pub ab_band: CutBand,
    pub gamma_band: GammaBand,
}

impl Regime {
    pub fn classify(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !v.is_finite() || snap(v) < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0 (got {v})")));
            }
        }
        let (alpha, beta, gamma) = (snap(alpha), snap(beta), snap(gamma));
        let alpha_band = if alpha < 3.0 {
            AlphaBand::Lt3
        } else if alpha == 3.0 {
            AlphaBand::Eq3
        } else {
            AlphaBand::Gt3
        };
        Ok(Regime {
            alpha,
            beta,
            gamma,
            alpha_band,
            beta_band: CutBand::of(beta),
            ab_band: CutBand::of(alpha + beta),
            gamma_band: if gamma > 1.0 { GammaBand::Gt1 } else { GammaBand::Le1 },
        })
    }

    pub fn alpha_lt3(&self) -> bool {
        self.alpha_band == AlphaBand::Lt3
    }

    pub fn alpha_eq3(&self) -> bool {
        self.alpha_band == AlphaBand::Eq3
    }

    pub fn alpha_gt3(&self) -> bool {
        self.alpha_band == AlphaBand::Gt3
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha={} beta={} gamma={}", self.alpha, self.beta, self.gamma)
    }
}
