//! Symbolic growth-rate expressions in n and L.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Lower clamp for ln(1/(L·r)); keeps the factor positive once L·r > 1/2.
pub const LN_INV_LR_FLOOR: f64 = std::f64::consts::LN_2;

/// `coeff · n^a · (ln n)^b · L^c · (ln L)^d · ln(1/(L·r))^e · ln(1/r)^f`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub exp_n: f64,
    pub exp_lnn: f64,
    pub exp_l: f64,
    pub exp_lnl: f64,
    pub exp_ln_inv_lr: f64,
    pub exp_ln_inv_r: f64,
}

impl Monomial {
    pub const ONE: Monomial = Monomial {
        coeff: 1.0,
        exp_n: 0.0,
        exp_lnn: 0.0,
        exp_l: 0.0,
        exp_lnl: 0.0,
        exp_ln_inv_lr: 0.0,
        exp_ln_inv_r: 0.0,
    };

    fn exps(&self) -> [f64; 6] {
        [self.exp_n, self.exp_lnn, self.exp_l, self.exp_lnl, self.exp_ln_inv_lr, self.exp_ln_inv_r]
    }

    fn with_exps(coeff: f64, e: [f64; 6]) -> Self {
        Monomial {
            coeff,
            exp_n: e[0],
            exp_lnn: e[1],
            exp_l: e[2],
            exp_lnl: e[3],
            exp_ln_inv_lr: e[4],
            exp_ln_inv_r: e[5],
        }
    }

    fn times(&self, o: &Monomial) -> Monomial {
        let (a, b) = (self.exps(), o.exps());
        Monomial::with_exps(self.coeff * o.coeff, std::array::from_fn(|i| a[i] + b[i]))
    }

    /// Value and whether the ln(1/(L·r)) floor kicked in.
    fn eval(&self, n: f64, l: f64) -> (f64, bool) {
        let r = unit_range(n);
        let mut clamped = false;
        let mut v = self.coeff;
        for (i, e) in self.exps().into_iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            let base = match i {
                0 => n,
                1 => n.ln(),
                2 => l,
                3 => l.ln(),
                4 => {
                    let raw = (1.0 / (l * r)).ln();
                    clamped |= raw < LN_INV_LR_FLOOR;
                    raw.max(LN_INV_LR_FLOOR)
                }
                _ => (1.0 / r).ln(),
            };
            v *= base.powf(e);
        }
        (v, clamped)
    }
}

/// r(n) with unit constant, `(ln n / n)^{1/3}`.
pub fn unit_range(n: f64) -> f64 {
    (n.ln() / n).cbrt()
}

/// Sum of monomials. Like terms are merged and zero terms dropped, so two
/// terms compare equal iff they render identically.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OrderTerm {
    pub terms: Vec<Monomial>,
}

impl OrderTerm {
    pub fn zero() -> Self {
        OrderTerm { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        OrderTerm::from_monomials(vec![Monomial { coeff: c, ..Monomial::ONE }])
    }

    pub fn one() -> Self {
        OrderTerm::constant(1.0)
    }

    fn single(i: usize, e: f64) -> Self {
        let mut exps = [0.0; 6];
        exps[i] = e;
        OrderTerm::from_monomials(vec![Monomial::with_exps(1.0, exps)])
    }

    pub fn n_pow(e: f64) -> Self {
        OrderTerm::single(0, e)
    }

    pub fn ln_n_pow(e: f64) -> Self {
        OrderTerm::single(1, e)
    }

    pub fn l_pow(e: f64) -> Self {
        OrderTerm::single(2, e)
    }

    pub fn ln_l_pow(e: f64) -> Self {
        OrderTerm::single(3, e)
    }

    pub fn ln_inv_lr_pow(e: f64) -> Self {
        OrderTerm::single(4, e)
    }

    pub fn ln_inv_r_pow(e: f64) -> Self {
        OrderTerm::single(5, e)
    }

    /// `r(n)^k = n^{-k/3} (ln n)^{k/3}`.
    pub fn r_pow(k: f64) -> Self {
        OrderTerm::from_monomials(vec![Monomial { exp_n: -k / 3.0, exp_lnn: k / 3.0, ..Monomial::ONE }])
    }

    /// `log_{1/r} L = ln L / ln(1/r)`.
    pub fn log_inv_r_of_l() -> Self {
        OrderTerm::ln_l_pow(1.0) * OrderTerm::ln_inv_r_pow(-1.0)
    }

    pub fn from_monomials(terms: Vec<Monomial>) -> Self {
        let mut merged: Vec<Monomial> = Vec::with_capacity(terms.len());
        for t in terms {
            let e = t.exps().map(tidy);
            match merged.iter_mut().find(|m| same_exps(&m.exps(), &e)) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(Monomial::with_exps(t.coeff, e)),
            }
        }
        merged.retain(|m| m.coeff != 0.0);
        merged.sort_by(|a, b| {
            let (ea, eb) = (a.exps(), b.exps());
            eb.iter()
                .zip(ea.iter())
                .filter(|(y, x)| (*y - *x).abs() >= EXP_EPS)
                .map(|(y, x)| y.total_cmp(x))
                .next()
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        OrderTerm { terms: merged }
    }

    pub fn scale(&self, c: f64) -> Self {
        OrderTerm::from_monomials(self.terms.iter().map(|m| Monomial { coeff: m.coeff * c, ..*m }).collect())
    }

    /// Power of a single monomial; `None` for sums, which have no closed power.
    pub fn powf(&self, p: f64) -> Option<Self> {
        match self.terms.as_slice() {
            [m] if m.coeff > 0.0 => {
                Some(OrderTerm::from_monomials(vec![Monomial::with_exps(m.coeff.powf(p), m.exps().map(|e| e * p))]))
            }
            [] => Some(OrderTerm::zero()),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn depends_on_l(&self) -> bool {
        self.terms.iter().any(|m| m.exp_l != 0.0 || m.exp_lnl != 0.0 || m.exp_ln_inv_lr != 0.0)
    }

    pub fn has_negative_terms(&self) -> bool {
        self.terms.iter().any(|m| m.coeff < 0.0)
    }

    pub fn eval(&self, n: f64, l: f64) -> f64 {
        self.eval_flagged(n, l).0
    }

    /// Natural log of a single positive monomial, computed without forming
    /// the (possibly overflowing) power itself.
    pub fn ln_eval(&self, n: f64, l: f64) -> Option<f64> {
        match self.terms.as_slice() {
            [m] if m.coeff > 0.0 => {
                let r = unit_range(n);
                let bases = [n, n.ln(), l, l.ln(), (1.0 / (l * r)).ln().max(LN_INV_LR_FLOOR), (1.0 / r).ln()];
                let mut acc = m.coeff.ln();
                for (b, e) in bases.into_iter().zip(m.exps()) {
                    if e != 0.0 {
                        acc += e * b.ln();
                    }
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// Value plus a flag set when any ln(1/(L·r)) factor was clamped.
    pub fn eval_flagged(&self, n: f64, l: f64) -> (f64, bool) {
        self.terms.iter().fold((0.0, false), |(acc, fl), m| {
            let (v, c) = m.eval(n, l);
            (acc + v, fl || c)
        })
    }
}

const EXP_EPS: f64 = 1e-12;

impl PartialEq for OrderTerm {
    fn eq(&self, other: &Self) -> bool {
        self.terms.len() == other.terms.len()
            && self.terms.iter().zip(&other.terms).all(|(a, b)| {
                same_exps(&a.exps(), &b.exps()) && (a.coeff - b.coeff).abs() <= 1e-12 * a.coeff.abs().max(b.coeff.abs())
            })
    }
}

// exponents built from thirds pick up rounding noise
fn same_exps(a: &[f64; 6], b: &[f64; 6]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < EXP_EPS)
}

fn tidy(e: f64) -> f64 {
    if e.abs() < EXP_EPS {
        0.0
    } else {
        e
    }
}

impl Add for OrderTerm {
    type Output = OrderTerm;
    fn add(mut self, rhs: OrderTerm) -> OrderTerm {
        self.terms.extend(rhs.terms);
        OrderTerm::from_monomials(self.terms)
    }
}

impl Neg for OrderTerm {
    type Output = OrderTerm;
    fn neg(self) -> OrderTerm {
        self.scale(-1.0)
    }
}

impl Sub for OrderTerm {
    type Output = OrderTerm;
    fn sub(self, rhs: OrderTerm) -> OrderTerm {
        self + (-rhs)
    }
}

impl Mul for OrderTerm {
    type Output = OrderTerm;
    fn mul(self, rhs: OrderTerm) -> OrderTerm {
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                out.push(a.times(b));
            }
        }
        OrderTerm::from_monomials(out)
    }
}

const FACTOR_NAMES: [&str; 6] = ["n", "lnn", "L", "lnL", "ln(1/(L*r))", "ln(1/r)"];

fn fmt_num(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn fmt_monomial(m: &Monomial, coeff: f64) -> String {
    let mut parts = Vec::new();
    if coeff != 1.0 {
        parts.push(fmt_num(coeff));
    }
    for (name, e) in FACTOR_NAMES.iter().zip(m.exps()) {
        if e == 0.0 {
            continue;
        }
        if e == 1.0 {
            parts.push(name.to_string());
        } else {
            parts.push(format!("{name}^{}", fmt_num(e)));
        }
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join(" * ")
    }
}

/// Canonical rendering: terms in descending exponent order, unit
/// coefficients and exponents dropped, `0` for the empty sum.
impl fmt::Display for OrderTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, m) in self.terms.iter().enumerate() {
            let neg = m.coeff < 0.0;
            let body = fmt_monomial(m, m.coeff.abs());
            match (i, neg) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printer_drops_unit_factors() {
        let t = OrderTerm::n_pow(1.0) * OrderTerm::ln_n_pow(0.0);
        assert_eq!(t.to_string(), "n");
        assert_eq!(OrderTerm::one().to_string(), "1");
        assert_eq!(OrderTerm::zero().to_string(), "0");
        assert_eq!(OrderTerm::r_pow(3.0).to_string(), "n^-1 * lnn");
        let d = OrderTerm::r_pow(1.0) - OrderTerm::r_pow(3.0) * OrderTerm::l_pow(2.0);
        assert_eq!(d.to_string(), "n^-0.333333 * lnn^0.333333 - n^-1 * lnn * L^2");
        assert_eq!(OrderTerm::log_inv_r_of_l().to_string(), "lnL * ln(1/r)^-1");
        assert_eq!(OrderTerm::constant(2.5).to_string(), "2.5");
    }

    #[test]
    fn like_terms_merge_and_cancel() {
        let a = OrderTerm::r_pow(2.0) * OrderTerm::r_pow(1.0);
        assert_eq!(a, OrderTerm::r_pow(3.0));
        assert!((a.clone() - OrderTerm::r_pow(3.0)).is_zero());
        assert_eq!((a.clone() + a).to_string(), "2 * n^-1 * lnn");
    }

    #[test]
    fn evaluation_substitutes_unit_range() {
        let n = 1000.0;
        let r3 = OrderTerm::r_pow(3.0).eval(n, 3.0);
        assert!((r3 - 1000f64.ln() / 1000.0).abs() < 1e-15);
        assert!((r3 - 0.006908).abs() < 1e-6);
        assert_eq!(OrderTerm::ln_l_pow(1.0).eval(n, 1.0), 0.0);
        let li = OrderTerm::log_inv_r_of_l().eval(n, 4.0);
        assert!((li - 4f64.ln() / (1.0 / unit_range(n)).ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_inv_lr_is_floored() {
        let t = OrderTerm::ln_inv_lr_pow(1.0);
        let n = 1000.0;
        let r = unit_range(n);
        let (v, flagged) = t.eval_flagged(n, 1.0);
        assert!(!flagged);
        assert!((v - (1.0 / r).ln()).abs() < 1e-12);
        let (v, flagged) = t.eval_flagged(n, 0.9 / r);
        assert!(flagged);
        assert_eq!(v, LN_INV_LR_FLOOR);
    }

    #[test]
    fn power_of_monomial() {
        let base = OrderTerm::ln_n_pow(-1.0) * OrderTerm::r_pow(-2.0);
        let p = base.powf(0.4).unwrap();
        assert!((p.eval(100.0, 1.0) - base.eval(100.0, 1.0).powf(0.4)).abs() < 1e-12);
        assert!((OrderTerm::one() + OrderTerm::n_pow(1.0)).powf(2.0).is_none());
    }
}
