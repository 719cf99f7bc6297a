//! Closed-form asymptotic laws as evaluable order terms.
//!
//! Every piecewise law is a table of [`Branch`]es; a parameter point selects
//! the single branch whose condition holds. Order terms keep `n` and `L`
//! symbolic and use unit constants, so only ratios and slopes are meaningful.

mod order;
mod regime;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use order::{unit_range, Monomial, OrderTerm, LN_INV_LR_FLOOR};
pub use regime::{snap, AlphaBand, CutBand, GammaBand, Regime, SNAP};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// One row of a piecewise law.
pub struct Branch {
    pub label: &'static str,
    when: fn(&Regime) -> bool,
    term: fn(&Regime) -> OrderTerm,
}

impl Branch {
    pub fn applies(&self, reg: &Regime) -> bool {
        (self.when)(reg)
    }

    pub fn term(&self, reg: &Regime) -> OrderTerm {
        (self.term)(reg)
    }
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label)
    }
}

fn select<'a>(table: &'a [Branch], reg: &Regime, what: &str) -> Result<&'a Branch> {
    table
        .iter()
        .find(|b| b.applies(reg))
        .ok_or_else(|| Error::UnsupportedRegime(format!("{what} has no branch for {reg}")))
}

/// Labels of all branches whose condition holds; at most one for a sound table.
pub fn matching_branches(table: &[Branch], reg: &Regime) -> Vec<&'static str> {
    table.iter().filter(|b| b.applies(reg)).map(|b| b.label).collect()
}

// shorthands for table entries
fn r(k: f64) -> OrderTerm {
    OrderTerm::r_pow(k)
}
fn l(e: f64) -> OrderTerm {
    OrderTerm::l_pow(e)
}
fn ln_l() -> OrderTerm {
    OrderTerm::ln_l_pow(1.0)
}
fn log_l() -> OrderTerm {
    OrderTerm::log_inv_r_of_l()
}
fn inv_ln_inv_r() -> OrderTerm {
    OrderTerm::ln_inv_r_pow(-1.0)
}
fn ln_inv_lr() -> OrderTerm {
    OrderTerm::ln_inv_lr_pow(1.0)
}
fn one() -> OrderTerm {
    OrderTerm::one()
}
fn n() -> OrderTerm {
    OrderTerm::n_pow(1.0)
}

fn beta_zero(g: &Regime) -> bool {
    g.beta == 0.0
}

/// Ad hoc probability of leader flows, by β.
pub static PR1A: &[Branch] = &[
    Branch { label: "beta<3", when: |g| g.beta_band.lt3(), term: |g| r(3.0) * l(3.0 - g.beta) },
    Branch { label: "beta=3", when: |g| g.beta_band == CutBand::Eq3, term: |_| r(3.0) * ln_l() },
    Branch { label: "beta>3", when: |g| g.beta_band.gt3(), term: |_| r(3.0) },
];

pub static PR1C: &[Branch] = &[
    Branch { label: "beta<3", when: |g| g.beta_band.lt3(), term: |g| r(g.beta) - r(3.0) * l(3.0 - g.beta) },
    Branch { label: "beta=3", when: |g| g.beta_band == CutBand::Eq3, term: |_| r(3.0) * ln_inv_lr() },
    Branch { label: "beta>3", when: |g| g.beta_band.gt3(), term: |_| r(3.0) },
];

/// Ad hoc probability of normal flows for γ > 1; γ ≤ 1 scales by n^{γ−1}.
pub static PR2A: &[Branch] = &[
    Branch {
        label: "alpha<3, alpha+beta<3",
        when: |g| g.alpha_lt3() && g.ab_band.lt3(),
        term: |g| r(3.0 - g.alpha) * l(3.0 - g.alpha - g.beta),
    },
    Branch {
        label: "alpha<3, alpha+beta=3",
        when: |g| g.alpha_lt3() && g.ab_band == CutBand::Eq3,
        term: |g| r(3.0 - g.alpha) * ln_l(),
    },
    Branch { label: "alpha<3, alpha+beta>3", when: |g| g.alpha_lt3() && g.ab_band.gt3(), term: |g| r(3.0 - g.alpha) },
    Branch { label: "alpha=3, alpha+beta=3", when: |g| g.alpha_eq3() && g.ab_band == CutBand::Eq3, term: |_| log_l() },
    Branch { label: "alpha=3, alpha+beta>3", when: |g| g.alpha_eq3() && g.ab_band.gt3(), term: |_| inv_ln_inv_r() },
    Branch { label: "alpha>3, alpha+beta>3", when: |g| g.alpha_gt3() && g.ab_band.gt3(), term: |_| one() },
];

pub static PR2C: &[Branch] = &[
    Branch {
        label: "alpha<3, alpha+beta<3",
        when: |g| g.alpha_lt3() && g.ab_band.lt3(),
        term: |g| r(g.beta) - r(3.0 - g.alpha) * l(3.0 - g.alpha - g.beta),
    },
    Branch {
        label: "alpha<3, alpha+beta=3",
        when: |g| g.alpha_lt3() && g.ab_band == CutBand::Eq3,
        term: |g| r(3.0 - g.alpha) * ln_inv_lr(),
    },
    Branch {
        label: "alpha<3, alpha+beta>3",
        when: |g| g.alpha_lt3() && g.ab_band.gt3(),
        term: |g| r(g.beta) - r(3.0 - g.alpha) * l(3.0 - g.alpha - g.beta),
    },
    Branch {
        label: "alpha=3, alpha+beta=3",
        when: |g| g.alpha_eq3() && g.ab_band == CutBand::Eq3,
        term: |_| one() - log_l(),
    },
    Branch {
        label: "alpha=3, alpha+beta>3",
        when: |g| g.alpha_eq3() && g.ab_band.gt3(),
        term: |g| inv_ln_inv_r() * (r(g.beta) - l(-g.beta)),
    },
    Branch {
        label: "alpha>3, alpha+beta>3",
        when: |g| g.alpha_gt3() && g.ab_band.gt3(),
        term: |g| r(g.alpha + g.beta - 3.0) - l(3.0 - g.alpha - g.beta),
    },
];

/// Ad hoc flow count, γ > 1.
pub static NA: &[Branch] = &[
    Branch {
        label: "alpha<3, alpha+beta<3",
        when: |g| g.alpha_lt3() && g.ab_band.lt3(),
        term: |g| n() * (r(3.0) * l(3.0 - g.beta) + r(3.0 - g.alpha) * l(3.0 - g.alpha - g.beta)),
    },
    Branch {
        label: "alpha<3, alpha+beta=3",
        when: |g| g.alpha_lt3() && g.ab_band == CutBand::Eq3,
        term: |g| n() * (r(3.0) * l(3.0 - g.beta) + r(3.0 - g.alpha) * ln_l()),
    },
    Branch {
        label: "alpha<3, beta<3, alpha+beta>3",
        when: |g| g.alpha_lt3() && g.beta_band.lt3() && g.ab_band.gt3(),
        term: |g| n() * (r(3.0) * l(3.0 - g.beta) + r(3.0 - g.alpha)),
    },
    Branch {
        label: "0<alpha<3, beta=3",
        when: |g| g.alpha_lt3() && g.alpha > 0.0 && g.beta_band == CutBand::Eq3,
        term: |g| n() * (r(3.0) * ln_l() + r(3.0 - g.alpha)),
    },
    Branch { label: "alpha<3, beta>3", when: |g| g.alpha_lt3() && g.beta_band.gt3(), term: |g| n() * r(3.0 - g.alpha) },
    Branch {
        label: "alpha=3, beta=0",
        when: |g| g.alpha_eq3() && beta_zero(g),
        term: |_| n() * (r(3.0) * l(3.0) + log_l()),
    },
    Branch {
        label: "alpha=3, 0<beta<3",
        when: |g| g.alpha_eq3() && !beta_zero(g) && g.beta_band.lt3(),
        term: |g| n() * (r(3.0) * l(3.0 - g.beta) + inv_ln_inv_r()),
    },
    Branch {
        label: "alpha=3, beta=3",
        when: |g| g.alpha_eq3() && g.beta_band == CutBand::Eq3,
        term: |_| n() * (r(3.0) * ln_l() + inv_ln_inv_r()),
    },
    Branch { label: "alpha=3, beta>3", when: |g| g.alpha_eq3() && g.beta_band.gt3(), term: |_| n() * inv_ln_inv_r() },
    Branch { label: "alpha>3", when: |g| g.alpha_gt3(), term: |_| n() },
];

/// Cellular flow count, γ > 1. The α = 3 and α > 3 rows are transcribed
/// as printed; several of them go negative inside the valid L range.
pub static NC: &[Branch] = &[
    Branch {
        label: "alpha<3, beta<3, alpha+beta!=3",
        when: |g| g.alpha_lt3() && g.beta_band.lt3() && g.ab_band != CutBand::Eq3,
        term: |g| {
            n() * (r(g.beta).scale(2.0) - r(3.0) * l(3.0 - g.beta) - r(3.0 - g.alpha) * l(3.0 - g.alpha - g.beta))
        },
    },
    Branch {
        label: "alpha<3, beta<=3, alpha+beta=3",
        when: |g| g.alpha_lt3() && g.beta_band <= CutBand::Eq3 && g.ab_band == CutBand::Eq3,
        term: |g| n() * (r(g.beta) - r(3.0) * l(3.0 - g.beta) + r(3.0 - g.alpha) * ln_inv_lr()),
    },
    Branch {
        label: "0<alpha<3, beta=3",
        when: |g| g.alpha_lt3() && g.alpha > 0.0 && g.beta_band == CutBand::Eq3,
        term: |g| n() * (r(3.0) * ln_inv_lr() + r(g.beta) - r(3.0 - g.alpha) * l(3.0 - g.alpha - g.beta)),
    },
    Branch {
        label: "alpha<3, beta>3",
        when: |g| g.alpha_lt3() && g.beta_band.gt3(),
        term: |g| n() * (r(3.0) + r(g.beta) - r(3.0 - g.alpha) * l(3.0 - g.alpha - g.beta)),
    },
    Branch {
        label: "alpha=3, beta=0",
        when: |g| g.alpha_eq3() && beta_zero(g),
        term: |_| n() * (one().scale(2.0) - r(3.0) * l(3.0) - log_l()),
    },
    Branch {
        label: "alpha=3, 0<beta<3",
        when: |g| g.alpha_eq3() && !beta_zero(g) && g.beta_band.lt3(),
        term: |g| n() * (r(g.beta) - r(3.0) * l(3.0 - g.beta) + ln_inv_lr() * (r(g.beta) - l(-g.beta))),
    },
    Branch {
        label: "alpha=3, beta=3",
        when: |g| g.alpha_eq3() && g.beta_band == CutBand::Eq3,
        term: |g| n() * ln_inv_lr() * (r(3.0) + r(g.beta) - l(-g.beta)),
    },
    Branch {
        label: "alpha=3, beta>3",
        when: |g| g.alpha_eq3() && g.beta_band.gt3(),
        term: |g| n() * (r(3.0) + ln_inv_lr() * (r(g.beta) - l(-g.beta))),
    },
    Branch {
        label: "alpha>3, beta<3",
        when: |g| g.alpha_gt3() && g.beta_band.lt3(),
        term: |g| n() * (r(g.beta) + r(g.alpha + g.beta - 3.0) - r(3.0) * l(3.0 - g.beta) - l(3.0 - g.alpha - g.beta)),
    },
    Branch {
        label: "alpha>3, beta=3",
        when: |g| g.alpha_gt3() && g.beta_band == CutBand::Eq3,
        term: |g| n() * (r(3.0) * ln_inv_lr() + r(g.alpha) - r(-g.alpha)),
    },
    Branch {
        label: "alpha>3, beta>3",
        when: |g| g.alpha_gt3() && g.beta_band.gt3(),
        term: |g| n() * (r(3.0) + r(g.alpha + g.beta - 3.0) - l(3.0 - g.alpha - g.beta)),
    },
];

/// Truncated hop moment of leader flows, by β.
pub static E1: &[Branch] = &[
    Branch { label: "beta<4", when: |g| g.beta_band.lt4(), term: |g| r(3.0) * l(4.0 - g.beta) },
    Branch { label: "beta=4", when: |g| g.beta_band == CutBand::Eq4, term: |_| r(3.0) * ln_l() },
    Branch { label: "beta>4", when: |g| g.beta_band.gt4(), term: |_| r(3.0) },
];

/// Truncated hop moment of normal flows for γ > 1.
pub static E2: &[Branch] = &[
    Branch {
        label: "alpha<3, alpha+beta<4",
        when: |g| g.alpha_lt3() && g.ab_band.lt4(),
        term: |g| r(3.0 - g.alpha) * l(4.0 - g.alpha - g.beta),
    },
    Branch {
        label: "alpha<3, alpha+beta=4",
        when: |g| g.alpha_lt3() && g.ab_band == CutBand::Eq4,
        term: |g| r(3.0 - g.alpha) * ln_l(),
    },
    Branch { label: "alpha<3, alpha+beta>4", when: |g| g.alpha_lt3() && g.ab_band.gt4(), term: |g| r(3.0 - g.alpha) },
    Branch {
        label: "alpha=3, alpha+beta<4",
        when: |g| g.alpha_eq3() && g.ab_band.lt4(),
        term: |g| inv_ln_inv_r() * l(1.0 - g.beta),
    },
    Branch { label: "alpha=3, alpha+beta=4", when: |g| g.alpha_eq3() && g.ab_band == CutBand::Eq4, term: |_| log_l() },
    Branch { label: "alpha=3, alpha+beta>4", when: |g| g.alpha_eq3() && g.ab_band.gt4(), term: |_| inv_ln_inv_r() },
    Branch {
        label: "alpha>3, alpha+beta<4",
        when: |g| g.alpha_gt3() && g.ab_band.lt4(),
        term: |g| l(4.0 - g.alpha - g.beta),
    },
    Branch { label: "alpha>3, alpha+beta=4", when: |g| g.alpha_gt3() && g.ab_band == CutBand::Eq4, term: |_| ln_l() },
    Branch { label: "alpha>3, alpha+beta>4", when: |g| g.alpha_gt3() && g.ab_band.gt4(), term: |_| one() },
];

/// Combined truncated hop moment, γ > 1. The printed `alpha<3, beta=4` row
/// also matches `alpha=0, beta=4`, where it coincides with the `alpha+beta=4`
/// row; it is restricted to `alpha+beta>4` to keep the table disjoint.
pub static E: &[Branch] = &[
    Branch {
        label: "alpha<3, beta<4, alpha+beta<4",
        when: |g| g.alpha_lt3() && g.beta_band.lt4() && g.ab_band.lt4(),
        term: |g| r(3.0) * l(4.0 - g.beta) + r(3.0 - g.alpha) * l(4.0 - g.alpha - g.beta),
    },
    Branch {
        label: "alpha<3, beta<=4, alpha+beta=4",
        when: |g| g.alpha_lt3() && g.beta_band <= CutBand::Eq4 && g.ab_band == CutBand::Eq4,
        term: |g| r(3.0) * l(4.0 - g.beta) + r(3.0 - g.alpha) * ln_l(),
    },
    Branch {
        label: "alpha<3, beta<4, alpha+beta>4",
        when: |g| g.alpha_lt3() && g.beta_band.lt4() && g.ab_band.gt4(),
        term: |g| r(3.0) * l(4.0 - g.beta) + r(3.0 - g.alpha),
    },
    Branch {
        label: "alpha<3, beta=4, alpha+beta>4",
        when: |g| g.alpha_lt3() && g.beta_band == CutBand::Eq4 && g.ab_band.gt4(),
        term: |g| r(3.0) * ln_l() + r(3.0 - g.alpha),
    },
    Branch { label: "alpha<3, beta>4", when: |g| g.alpha_lt3() && g.beta_band.gt4(), term: |g| r(3.0 - g.alpha) },
    Branch {
        label: "alpha=3, beta<1",
        when: |g| g.alpha_eq3() && g.beta < 1.0,
        term: |g| r(3.0) * l(4.0 - g.beta) + inv_ln_inv_r() * l(1.0 - g.beta),
    },
    Branch { label: "alpha=3, beta=1", when: |g| g.alpha_eq3() && g.beta == 1.0, term: |_| r(3.0) * l(3.0) + log_l() },
    Branch {
        label: "alpha=3, 1<beta<4",
        when: |g| g.alpha_eq3() && g.beta > 1.0 && g.beta_band.lt4(),
        term: |g| r(3.0) * l(4.0 - g.beta) + inv_ln_inv_r(),
    },
    Branch {
        label: "alpha=3, beta=4",
        when: |g| g.alpha_eq3() && g.beta_band == CutBand::Eq4,
        term: |_| r(3.0) * ln_l() + log_l(),
    },
    Branch { label: "alpha=3, beta>4", when: |g| g.alpha_eq3() && g.beta_band.gt4(), term: |_| inv_ln_inv_r() },
    Branch {
        label: "alpha>3, beta<4, alpha+beta<4",
        when: |g| g.alpha_gt3() && g.beta_band.lt4() && g.ab_band.lt4(),
        term: |g| r(3.0) * l(4.0 - g.beta) + l(4.0 - g.alpha - g.beta),
    },
    Branch {
        label: "alpha>3, beta<4, alpha+beta=4",
        when: |g| g.alpha_gt3() && g.beta_band.lt4() && g.ab_band == CutBand::Eq4,
        term: |g| r(3.0) * l(4.0 - g.beta) + ln_l(),
    },
    Branch {
        label: "alpha>3, beta<4, alpha+beta>4",
        when: |g| g.alpha_gt3() && g.beta_band.lt4() && g.ab_band.gt4(),
        term: |g| r(3.0) * l(4.0 - g.beta),
    },
    Branch {
        label: "alpha>3, beta=4",
        when: |g| g.alpha_gt3() && g.beta_band == CutBand::Eq4,
        term: |_| r(3.0) * ln_l(),
    },
    Branch { label: "alpha>3, beta>4", when: |g| g.alpha_gt3() && g.beta_band.gt4(), term: |_| r(3.0) },
];

/// All piecewise tables by name, for diagnostics and totality checks.
pub fn branch_tables() -> [(&'static str, &'static [Branch]); 9] {
    [
        ("pr1a", PR1A),
        ("pr1c", PR1C),
        ("pr2a", PR2A),
        ("pr2c", PR2C),
        ("na", NA),
        ("nc", NC),
        ("e1", E1),
        ("e2", E2),
        ("e", E),
    ]
}

fn gamma_factor(reg: &Regime) -> OrderTerm {
    match reg.gamma_band {
        GammaBand::Gt1 => OrderTerm::one(),
        GammaBand::Le1 => OrderTerm::n_pow(reg.gamma - 1.0),
    }
}

fn require_gamma_gt1(reg: &Regime, what: &str) -> Result<()> {
    match reg.gamma_band {
        GammaBand::Gt1 => Ok(()),
        GammaBand::Le1 => {
            Err(Error::UnsupportedRegime(format!("{what} is only known for gamma > 1 (got {})", reg.gamma)))
        }
    }
}

/// Ad hoc and cellular probabilities of leader flows.
pub fn pr1_orders(beta: f64) -> Result<(OrderTerm, OrderTerm)> {
    let reg = Regime::classify(0.0, beta, 2.0)?;
    Ok((select(PR1A, &reg, "pr1a")?.term(&reg), select(PR1C, &reg, "pr1c")?.term(&reg)))
}

/// Ad hoc and cellular probabilities of normal flows.
pub fn pr2_orders(alpha: f64, beta: f64, gamma: f64) -> Result<(OrderTerm, OrderTerm)> {
    let reg = Regime::classify(alpha, beta, gamma)?;
    let g = gamma_factor(&reg);
    let a = select(PR2A, &reg, "pr2a")?.term(&reg);
    let c = select(PR2C, &reg, "pr2c")?.term(&reg);
    Ok((g.clone() * a, g * c))
}

/// Expected ad hoc and cellular flow counts per round.
pub fn flow_count_orders(alpha: f64, beta: f64, gamma: f64) -> Result<(OrderTerm, OrderTerm)> {
    let reg = Regime::classify(alpha, beta, gamma)?;
    require_gamma_gt1(&reg, "flow count")?;
    Ok((select(NA, &reg, "na")?.term(&reg), select(NC, &reg, "nc")?.term(&reg)))
}

/// Truncated hop moments `(leader, normal, combined)`.
pub fn truncated_hop_orders(alpha: f64, beta: f64, gamma: f64) -> Result<(OrderTerm, OrderTerm, OrderTerm)> {
    let reg = Regime::classify(alpha, beta, gamma)?;
    require_gamma_gt1(&reg, "combined hop moment")?;
    let e1 = select(E1, &reg, "e1")?.term(&reg);
    let e2 = select(E2, &reg, "e2")?.term(&reg);
    let e = select(E, &reg, "e")?.term(&reg);
    Ok((e1, e2, e))
}

/// Normal-flow hop moment on its own; defined for every γ ≥ 0.
pub fn normal_hop_order(alpha: f64, beta: f64, gamma: f64) -> Result<OrderTerm> {
    let reg = Regime::classify(alpha, beta, gamma)?;
    Ok(gamma_factor(&reg) * select(E2, &reg, "e2")?.term(&reg))
}

/// Mean number of ad hoc flows crossing one cube: `ln n` times the
/// combined hop moment.
pub fn ef_order(alpha: f64, beta: f64, gamma: f64) -> Result<OrderTerm> {
    let (_, _, e) = truncated_hop_orders(alpha, beta, gamma)?;
    Ok(OrderTerm::ln_n_pow(1.0) * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DominantClass {
    Leader,
    Normal,
    Mixed,
    Independent,
}

impl fmt::Display for DominantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DominantClass::Leader => "leader",
            DominantClass::Normal => "normal",
            DominantClass::Mixed => "mixed",
            DominantClass::Independent => "independent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimalL {
    Order(OrderTerm),
    Unconstrained,
}

impl fmt::Display for OptimalL {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimalL::Order(t) => t.fmt(f),
            OptimalL::Unconstrained => f.write_str("unconstrained"),
        }
    }
}

/// Ad hoc throughput per unit of ad hoc bandwidth at the best threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputLaw {
    pub region: u8,
    pub lambda_a: OrderTerm,
    pub optimal_l: OptimalL,
    pub dominant_class: DominantClass,
    /// Caveats on the printed form, empty for clean regions.
    pub notes: Vec<String>,
}

impl ThroughputLaw {
    /// Threshold value clamped to `[1, 1/r(n)]`; `None` when unconstrained.
    pub fn optimal_l_value(&self, n: f64) -> Option<f64> {
        match &self.optimal_l {
            OptimalL::Order(t) => {
                let hi = 1.0 / unit_range(n);
                // thresholds are single monomials, so the log form always exists
                let ln_l = t.ln_eval(n, 1.0).expect("threshold is a positive monomial");
                Some(if ln_l.is_nan() { 1.0 } else { ln_l.exp().clamp(1.0, hi) })
            }
            OptimalL::Unconstrained => None,
        }
    }

    /// `lambda_a` evaluated at the clamped threshold (any L when unconstrained).
    pub fn lambda_at_optimum(&self, n: f64) -> f64 {
        self.lambda_a.eval(n, self.optimal_l_value(n).unwrap_or(1.0))
    }
}

// (ln⁻¹ n · r^{α−3})^{1/(4−α−β)}
fn normal_threshold(reg: &Regime) -> OrderTerm {
    (OrderTerm::ln_n_pow(-1.0) * r(reg.alpha - 3.0)).powf(1.0 / (4.0 - reg.alpha - reg.beta)).expect("monomial")
}

// (ln⁻¹ n · r⁻³)^{1/(4−β)}
fn leader_threshold(reg: &Regime) -> OrderTerm {
    (OrderTerm::ln_n_pow(-1.0) * r(-3.0)).powf(1.0 / (4.0 - reg.beta)).expect("monomial")
}

// n^{α/3} · ln^{1−α/3} n
fn normal_mass(reg: &Regime) -> OrderTerm {
    OrderTerm::n_pow(reg.alpha / 3.0) * OrderTerm::ln_n_pow(1.0 - reg.alpha / 3.0)
}

/// Region of the (α, β) plane and its throughput law; γ must exceed 1.
pub fn adhoc_throughput_law(alpha: f64, beta: f64, gamma: f64) -> Result<ThroughputLaw> {
    let reg = Regime::classify(alpha, beta, gamma)?;
    require_gamma_gt1(&reg, "throughput law")?;
    let (a, b, ab) = (reg.alpha_band, reg.beta_band, reg.ab_band);
    let lnn_l = || OrderTerm::ln_n_pow(1.0) * l(3.0 - reg.beta);
    let law = |region, lambda_a, optimal_l, dominant_class| ThroughputLaw {
        region,
        lambda_a,
        optimal_l,
        dominant_class,
        notes: Vec::new(),
    };
    let out = match a {
        AlphaBand::Lt3 if b.lt3() && ab.lt3() => law(
            1,
            lnn_l() + normal_mass(&reg) * l(3.0 - reg.alpha - reg.beta),
            OptimalL::Order(normal_threshold(&reg)),
            DominantClass::Normal,
        ),
        AlphaBand::Lt3 if b.lt3() && ab == CutBand::Mid => {
            law(2, lnn_l() + normal_mass(&reg), OptimalL::Order(normal_threshold(&reg)), DominantClass::Normal)
        }
        AlphaBand::Lt3 if b.lt3() && ab.gt4() => {
            let mut out =
                law(3, lnn_l() + normal_mass(&reg), OptimalL::Order(normal_threshold(&reg)), DominantClass::Leader);
            out.notes
                .push("threshold exponent 1/(4-alpha-beta) is negative here, so the threshold clamps to L = 1".into());
            out
        }
        AlphaBand::Lt3 if b.gt3() && ab == CutBand::Mid => {
            law(4, normal_mass(&reg), OptimalL::Order(normal_threshold(&reg)), DominantClass::Normal)
        }
        AlphaBand::Gt3 if b.lt4() && ab == CutBand::Mid => {
            law(5, n(), OptimalL::Order(OrderTerm::ln_n_pow(-1.0 / (4.0 - reg.alpha - reg.beta))), DominantClass::Mixed)
        }
        AlphaBand::Gt3 if b.lt4() && ab.gt4() => {
            law(6, n(), OptimalL::Order(leader_threshold(&reg)), DominantClass::Leader)
        }
        AlphaBand::Gt3 if b.gt4() => law(7, n(), OptimalL::Unconstrained, DominantClass::Independent),
        _ => return Err(Error::UnsupportedRegime(format!("no throughput region covers {reg}"))),
    };
    Ok(out)
}

/// Order of the total throughput: ad hoc law scaled by `W_a` plus
/// `r^{-2}(n)·W_c` for the cellular tier. `L` stays symbolic.
pub fn total_throughput_order(config: &NetworkConfig) -> Result<OrderTerm> {
    let law = adhoc_throughput_law(config.alpha, config.beta, config.gamma)?;
    Ok(law.lambda_a.scale(config.wa) + r(-2.0).scale(config.wc))
}
