//! Elementary symmetric polynomials over positive weights, the
//! inclusion probabilities of the conditional-Bernoulli law they normalize,
//! and an exact sampler for that law.
//!
//! All tables are kept in the log domain unless the magnitudes provably fit
//! in an `f64`.

use rand::Rng;

use crate::error::{Error, Result};

/// `ln(e^a + e^b)` without overflow; `-inf` is the additive identity.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln sigma_0 .. ln sigma_qmax` of a weight vector.
///
/// `sigma_q = 0` (stored as `-inf`) for `q` above the number of weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SymPolyTable {
    logsigma: Vec<f64>,
    len: usize,
}

impl SymPolyTable {
    /// Builds the table with the one-weight-at-a-time recurrence
    /// `sigma_q(w_1..w_k) = sigma_q(w_1..w_k-1) + w_k sigma_q-1(w_1..w_k-1)`.
    pub fn new(weights: &[f64], q_max: usize) -> Result<Self> {
        let lw: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        Self::from_log_weights(&lw, q_max)
    }

    /// Same recurrence from `ln w`, for weights that would underflow.
    pub fn from_log_weights(log_weights: &[f64], q_max: usize) -> Result<Self> {
        if q_max > log_weights.len() {
            return Err(Error::InvalidArgument(format!(
                "q_max = {q_max} exceeds the {} available weights",
                log_weights.len()
            )));
        }
        let mut ls = vec![f64::NEG_INFINITY; q_max + 1];
        ls[0] = 0.0;
        for (k, &lw) in log_weights.iter().enumerate() {
            let top = (k + 1).min(q_max);
            for j in (1..=top).rev() {
                ls[j] = log_add(ls[j], lw + ls[j - 1]);
            }
        }
        Ok(Self { logsigma: ls, len: log_weights.len() })
    }

    /// Table of every order `0..=len`.
    pub fn full(weights: &[f64]) -> Self {
        // q_max == len is always in range
        Self::new(weights, weights.len()).unwrap()
    }

    pub fn q_max(&self) -> usize {
        self.logsigma.len() - 1
    }

    /// Number of weights the table was built from.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn log_sigma(&self, q: usize) -> f64 {
        self.logsigma.get(q).copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn sigma(&self, q: usize) -> f64 {
        self.log_sigma(q).exp()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.logsigma
    }
}

/// Probability that candidate `k` belongs to a size-`q` group drawn with
/// probability proportional to the product of member weights:
/// `w_k sigma_q-1(w without k) / sigma_q(w)`.
///
/// Builds the leave-one-out table directly, `O(|w| q)`.
pub fn inclusion_probability(weights: &[f64], q: usize, k: usize) -> Result<f64> {
    let len = weights.len();
    if q == 0 || q > len {
        return Err(Error::InvalidArgument(format!("group size {q} outside 1..={len}")));
    }
    if k >= len {
        return Err(Error::InvalidArgument(format!("candidate {k} out of range")));
    }
    let all = SymPolyTable::new(weights, q)?;
    let rest: Vec<f64> = weights.iter().enumerate().filter_map(|(i, &w)| (i != k).then_some(w)).collect();
    let without = SymPolyTable::new(&rest, q - 1)?;
    let p = (weights[k].ln() + without.log_sigma(q - 1) - all.log_sigma(q)).exp();
    Ok(p.clamp(0.0, 1.0))
}

/// Inclusion probabilities of one candidate for every group size
/// `0..=len`, given the full table of all weights.
///
/// With `a_q = w_k sigma_q-1 / sigma_q` the probabilities satisfy
/// `pi(q) = a_q (1 - pi(q-1))`, `pi(0) = 0`, `pi(len) = 1`. `a_q` is
/// non-decreasing in `q` (Newton's inequalities), so the recursion runs
/// upward while `a_q < 1` and downward from `pi(len) = 1` afterwards; in both
/// directions the error is multiplied by a factor at most 1 per step.
pub fn inclusion_profile(log_weight: f64, table: &SymPolyTable, out: &mut Vec<f64>) {
    let len = table.len();
    debug_assert_eq!(table.q_max(), len, "profile needs the full table");
    let ls = table.as_slice();
    out.clear();
    out.resize(len + 1, 0.0);
    if len == 0 {
        return;
    }
    let ratio = |q: usize| (log_weight + ls[q - 1] - ls[q]).exp();
    let mut split = len;
    for q in 1..=len {
        if ratio(q) >= 1.0 {
            split = q;
            break;
        }
    }
    for q in 1..split {
        out[q] = ratio(q) * (1.0 - out[q - 1]);
    }
    out[len] = 1.0;
    for q in (split + 1..=len).rev() {
        out[q - 1] = 1.0 - out[q] / ratio(q);
    }
    for p in out.iter_mut() {
        *p = p.clamp(0.0, 1.0);
    }
}

/// Inclusion probabilities of every candidate for one group size.
pub fn inclusion_probabilities(weights: &[f64], q: usize) -> Result<Vec<f64>> {
    let len = weights.len();
    if q == 0 || q > len {
        return Err(Error::InvalidArgument(format!("group size {q} outside 1..={len}")));
    }
    let table = SymPolyTable::full(weights);
    let mut profile = Vec::new();
    Ok(weights
        .iter()
        .map(|w| {
            inclusion_profile(w.ln(), &table, &mut profile);
            profile[q]
        })
        .collect())
}

/// Largest complement-reduced group size served by the sequential sampler;
/// larger groups use rejective Poisson sampling.
const SEQUENTIAL_MAX: usize = 64;

/// Exact draw of a size-`q` subset of `0..weights.len()` with probability
/// proportional to the product of the chosen weights. Returned indices are
/// increasing.
pub fn sample_conditional<R: Rng + ?Sized>(weights: &[f64], q: usize, rng: &mut R) -> Result<Vec<usize>> {
    let len = weights.len();
    if q == 0 || q > len {
        return Err(Error::InvalidArgument(format!("group size {q} outside 1..={len}")));
    }
    if q == len {
        return Ok((0..len).collect());
    }
    if q == 1 {
        return Ok(vec![sample_categorical(weights, rng)]);
    }
    // P(G) ∝ prod_G w  <=>  P(complement) ∝ prod_complement 1/w
    if 2 * q > len {
        let inv: Vec<f64> = weights.iter().map(|w| 1.0 / w).collect();
        let dropped = sample_conditional(&inv, len - q, rng)?;
        let mut keep = vec![true; len];
        for i in dropped {
            keep[i] = false;
        }
        return Ok((0..len).filter(|&i| keep[i]).collect());
    }
    if q <= SEQUENTIAL_MAX {
        Ok(sample_sequential(weights, q, rng))
    } else {
        Ok(sample_rejective(weights, q, rng))
    }
}

/// Index drawn with probability proportional to its weight.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding left u marginally above the last weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Suffix table `S[k][j] = sigma_j(w_k..w_end)` for `j <= q`, row-major.
enum Suffix {
    Linear(Vec<f64>),
    Log(Vec<f64>),
}

fn suffix_table(weights: &[f64], q: usize) -> Suffix {
    let len = weights.len();
    let cols = q + 1;
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    let wmin = weights.iter().cloned().fold(f64::INFINITY, f64::min);
    // sigma_j <= C(len, j) <= len^j and >= (wmin/wmax)^j after scaling
    let fits = (q as f64) * (len as f64).ln() < 690.0 && (q as f64) * (wmin / wmax).ln() > -690.0;
    if fits {
        let mut s = vec![0.0; (len + 1) * cols];
        s[len * cols] = 1.0;
        for k in (0..len).rev() {
            let w = weights[k] / wmax;
            let (head, tail) = s.split_at_mut((k + 1) * cols);
            let row = &mut head[k * cols..];
            let next = &tail[..cols];
            row[0] = 1.0;
            for j in 1..cols {
                row[j] = next[j] + w * next[j - 1];
            }
        }
        Suffix::Linear(s)
    } else {
        let mut s = vec![f64::NEG_INFINITY; (len + 1) * cols];
        s[len * cols] = 0.0;
        for k in (0..len).rev() {
            let lw = weights[k].ln();
            let (head, tail) = s.split_at_mut((k + 1) * cols);
            let row = &mut head[k * cols..];
            let next = &tail[..cols];
            row[0] = 0.0;
            for j in 1..cols {
                row[j] = log_add(next[j], lw + next[j - 1]);
            }
        }
        Suffix::Log(s)
    }
}

/// Sequential scan: candidate `k` joins with probability
/// `w_k sigma_r-1(w_k+1..) / sigma_r(w_k..)` where `r` members are still
/// needed.
fn sample_sequential<R: Rng + ?Sized>(weights: &[f64], q: usize, rng: &mut R) -> Vec<usize> {
    let len = weights.len();
    let cols = q + 1;
    let table = suffix_table(weights, q);
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    let mut chosen = Vec::with_capacity(q);
    let mut need = q;
    for k in 0..len {
        if need == 0 {
            break;
        }
        if len - k == need {
            chosen.extend(k..len);
            break;
        }
        let p = match &table {
            Suffix::Linear(s) => weights[k] / wmax * s[(k + 1) * cols + need - 1] / s[k * cols + need],
            Suffix::Log(s) => (weights[k].ln() + s[(k + 1) * cols + need - 1] - s[k * cols + need]).exp(),
        };
        if rng.gen::<f64>() < p {
            chosen.push(k);
            need -= 1;
        }
    }
    chosen
}

/// Poisson sampling with odds proportional to the weights, repeated until
/// exactly `q` units are drawn. The accepted sample follows the same
/// product-of-weights law.
fn sample_rejective<R: Rng + ?Sized>(weights: &[f64], q: usize, rng: &mut R) -> Vec<usize> {
    let scale = poisson_scale(weights, q);
    let probs: Vec<f64> = weights.iter().map(|&w| scale * w / (1.0 + scale * w)).collect();
    let len = weights.len();
    let mut chosen = Vec::with_capacity(q);
    loop {
        chosen.clear();
        for (k, &p) in probs.iter().enumerate() {
            if rng.gen::<f64>() < p {
                chosen.push(k);
                if chosen.len() > q {
                    break;
                }
            }
            if chosen.len() + (len - k - 1) < q {
                break;
            }
        }
        if chosen.len() == q {
            return chosen;
        }
    }
}

/// `lambda` with `sum lambda w / (1 + lambda w) ≈ q`. Only the acceptance
/// rate depends on the precision, so Newton on `ln lambda` stops within half
/// a unit of the target.
fn poisson_scale(weights: &[f64], q: usize) -> f64 {
    let lw: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let target = q as f64;
    let eval = |ll: f64| -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for &l in &lw {
            let t = ll + l;
            let p = if t > 0.0 {
                1.0 / (1.0 + (-t).exp())
            } else {
                let e = t.exp();
                e / (1.0 + e)
            };
            f += p;
            df += p * (1.0 - p);
        }
        (f - target, df)
    };
    let (mut lo, mut hi) = (-800.0f64, 800.0f64);
    let mean_lw = lw.iter().sum::<f64>() / lw.len() as f64;
    let mut ll = (target / (lw.len() as f64 - target)).ln() - mean_lw;
    for _ in 0..100 {
        let (f, df) = eval(ll);
        if f.abs() < 0.5 {
            break;
        }
        if f < 0.0 {
            lo = ll;
        } else {
            hi = ll;
        }
        let step = ll - f / df;
        ll = if df > 0.0 && step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }
    ll.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive sigma_q by subset enumeration.
    fn brute_sigma(w: &[f64], q: usize) -> f64 {
        let n = w.len();
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == q)
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| w[i]).product::<f64>())
            .sum()
    }

    fn brute_inclusion(w: &[f64], q: usize, k: usize) -> f64 {
        let n = w.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for m in 0u32..1 << n {
            if m.count_ones() as usize != q {
                continue;
            }
            let p: f64 = (0..n).filter(|i| m >> i & 1 == 1).map(|i| w[i]).product();
            den += p;
            if m >> k & 1 == 1 {
                num += p;
            }
        }
        num / den
    }

    fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(0.05..5.0)).collect()
    }

    #[test]
    fn log_add_handles_extremes() {
        assert_eq!(log_add(f64::NEG_INFINITY, 2.0), 2.0);
        assert!((log_add(1234.0, 1232.0) - 1234.126928011042972).abs() < 1e-12);
        assert!((log_add(0.5, 2.0) - 2.201413277982752409).abs() < 1e-15);
    }

    #[test]
    fn small_tables() {
        let t = SymPolyTable::new(&[1.0, 2.0, 3.0], 3).unwrap();
        assert!((t.sigma(0) - 1.0).abs() < 1e-15);
        assert!((t.sigma(1) - 6.0).abs() < 1e-12);
        assert!((t.sigma(2) - 11.0).abs() < 1e-12);
        assert!((t.sigma(3) - 6.0).abs() < 1e-12);
        assert_eq!(t.log_sigma(4), f64::NEG_INFINITY);
        assert!(SymPolyTable::new(&[1.0], 2).is_err());
    }

    #[test]
    fn table_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_weights(&mut rng, 10);
        let t = SymPolyTable::new(&w, 5).unwrap();
        for q in 0..=5 {
            let b = brute_sigma(&w, q);
            assert!((t.sigma(q) - b).abs() <= 1e-9 * b, "q = {q}");
        }
    }

    #[test]
    fn inclusion_special_cases() {
        for k in 0..4 {
            assert!((inclusion_probability(&[1.0; 4], 2, k).unwrap() - 0.5).abs() < 1e-12);
        }
        let p0 = inclusion_probability(&[2.0, 1.0], 1, 0).unwrap();
        let p1 = inclusion_probability(&[2.0, 1.0], 1, 1).unwrap();
        assert!((p0 - 2.0 / 3.0).abs() < 1e-12 && (p1 - 1.0 / 3.0).abs() < 1e-12);
        assert!(inclusion_probability(&[1.0, 1.0], 3, 0).is_err());
        assert!(inclusion_probability(&[1.0, 1.0], 0, 0).is_err());
    }

    #[test]
    fn profile_matches_direct_and_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            // wide dynamic range stresses the recursion
            let w: Vec<f64> = (0..9).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect();
            let table = SymPolyTable::full(&w);
            let mut prof = Vec::new();
            for k in 0..w.len() {
                inclusion_profile(w[k].ln(), &table, &mut prof);
                for q in 1..=w.len() {
                    let b = brute_inclusion(&w, q, k);
                    let d = inclusion_probability(&w, q, k).unwrap();
                    assert!((d - b).abs() <= 1e-9 * b.max(1e-300), "direct k={k} q={q}");
                    assert!((prof[q] - b).abs() <= 1e-10 + 1e-8 * b, "profile k={k} q={q}");
                }
            }
        }
    }

    #[test]
    fn inclusion_upper_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_weights(&mut rng, 11);
        let t = SymPolyTable::full(&w);
        for q in 1..=w.len() {
            for k in 0..w.len() {
                let bound = (w[k].ln() + t.log_sigma(q - 1) - t.log_sigma(q)).exp();
                assert!(inclusion_probability(&w, q, k).unwrap() <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn large_tables_stay_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w: Vec<f64> = (0..3000).map(|_| 10f64.powf(rng.gen_range(-4.0..6.0))).collect();
        let t = SymPolyTable::full(&w);
        assert!(t.as_slice().iter().all(|v| v.is_finite()));
        let probs = inclusion_probabilities(&w, 1500).unwrap();
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1500.0).abs() < 1e-8, "sum = {sum}");
    }

    fn check_sampler_marginals(w: &[f64], q: usize, draws: usize, seed: u64) {
        let exact = inclusion_probabilities(w, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = vec![0usize; w.len()];
        for _ in 0..draws {
            let g = sample_conditional(w, q, &mut rng).unwrap();
            assert_eq!(g.len(), q);
            assert!(g.windows(2).all(|p| p[0] < p[1]));
            for i in g {
                hits[i] += 1;
            }
        }
        for (k, &p) in exact.iter().enumerate() {
            let f = hits[k] as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt().max(1e-12);
            assert!((f - p).abs() <= 4.0 * se, "k={k}: {f} vs {p} (q={q})");
        }
    }

    #[test]
    fn sequential_sampler_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = random_weights(&mut rng, 12);
        check_sampler_marginals(&w, 3, 40_000, 1);
        check_sampler_marginals(&w, 9, 40_000, 2);
    }

    #[test]
    fn rejective_sampler_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let w: Vec<f64> = (0..200).map(|_| rng.gen_range(0.1..3.0)).collect();
        // 70 > SEQUENTIAL_MAX and below len / 2
        check_sampler_marginals(&w, 70, 4_000, 3);
        // log-domain sequential path: huge dynamic range
        let w: Vec<f64> = (0..40).map(|_| 10f64.powf(rng.gen_range(-12.0..12.0))).collect();
        check_sampler_marginals(&w, 12, 20_000, 4);
    }

    #[test]
    fn full_group_and_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_conditional(&[1.0, 2.0, 3.0], 3, &mut rng).unwrap(), vec![0, 1, 2]);
        let mut counts = [0usize; 3];
        let n = 60_000;
        for _ in 0..n {
            counts[sample_conditional(&[1.0, 2.0, 3.0], 1, &mut rng).unwrap()[0]] += 1;
        }
        for (k, c) in counts.iter().enumerate() {
            let p = (k + 1) as f64 / 6.0;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() < 4.0 * se);
        }
    }
}
