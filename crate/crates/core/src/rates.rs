//! Rates of the Beta(a,b)-coalescent and jump laws of its block-counting chain.
//!
//! For Λ(dr) = r^{a−1}(1−r)^{b−1} dr, any `k` of `p` blocks merge at rate
//! `λ_{p,k} = Γ(a+k−2)Γ(b+p−k)/Γ(a+b+p−2)` and the chain leaves state `n` at
//! rate `λ_n = Σ_k binom(n,k) λ_{n,k}`.
//!
//! Jump weights are never formed from raw `ln Γ` values. With `m = j − 1`
//! blocks surviving untouched and `i = n − m` blocks merging,
//!
//! ```text
//! ln(binom(n, m) λ_{n,i}) = [ln Γ(b+m) − ln Γ(m+1)]
//!                         + [ln Γ(a+i−2) − ln Γ(i+1)]
//!                         + [ln Γ(n+1) − ln Γ(a+b+n−2)]
//! ```
//!
//! and each bracket is tabulated through
//! [`ln_gamma_ratio_at`](crate::specfun::ln_gamma_ratio_at) with the integer
//! part kept apart from the parameter offsets, so every table entry is O(ln n)
//! in size and keeps full relative accuracy.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::quad;
use crate::specfun::{gamma_signed, lgamma, ln_gamma_ratio_at, psi, psi1};
use crate::{Error, Result};

/// Below this distance from 1 or 2 the closed form of λ_n loses digits to the
/// `1/(1−a)` and `1/(2−a)` factors and the defining series is summed instead.
/// The loss grows like n/|a−2|; at this width it stays under 1e-12 for
/// n ≤ 2·10⁴.
pub const NEAR_INTEGER_A: f64 = 0.05;

/// Parameters of the Beta(a,b) measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

/// Qualitative behaviour of the chain, a function of `a` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// a ∈ (0,1): the coalescent comes down from infinity.
    ComingDown,
    /// a = 1.
    Critical,
    /// a ∈ (1,2]: τ_n grows like ln n and D = ∞.
    Divergent,
    /// a > 2: τ_n grows like ln n and λ_n increases to a finite D.
    BoundedRates,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain {
                    op: if name == "a" { "BetaParams::new(a)" } else { "BetaParams::new(b)" },
                    value: v,
                    reason: "Beta parameters must be positive and finite",
                });
            }
        }
        Ok(Self { a, b })
    }

    pub fn regime(&self) -> Regime {
        match self.a {
            a if a < 1.0 => Regime::ComingDown,
            a if a == 1.0 => Regime::Critical,
            a if a <= 2.0 => Regime::Divergent,
            _ => Regime::BoundedRates,
        }
    }

    /// Parameters of Λ'(dr) = (1−r)Λ(dr), i.e. (a, b+1).
    pub fn prime(&self) -> Self {
        Self { a: self.a, b: self.b + 1.0 }
    }

    /// Same `a`, `b` shifted by `ell`.
    pub fn shift_b(&self, ell: f64) -> Result<Self> {
        Self::new(self.a, self.b + ell)
    }

    pub(crate) fn regime_error(&self, op: &'static str, condition: &'static str) -> Error {
        Error::Regime { op, params: self.to_string(), condition }
    }
}

impl fmt::Display for BetaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a={}, b={})", self.a, self.b)
    }
}

/// Jump law out of one state: weights over the target states `1..n−1`.
#[derive(Debug, Clone)]
pub struct JumpLaw {
    /// ln w_{n,j} at index `j − 1`.
    pub log_weights: Vec<f64>,
    /// w_{n,j} at index `j − 1`.
    pub probs: Vec<f64>,
    /// Running sums of `probs`.
    pub cdf: Vec<f64>,
}

impl JumpLaw {
    /// Target state for a uniform variate `u ∈ (0,1)`.
    pub fn sample(&self, u: f64) -> usize {
        let total = *self.cdf.last().expect("non-empty jump law");
        let x = u * total;
        let idx = self.cdf.partition_point(|&c| c <= x);
        idx.min(self.cdf.len() - 1) + 1
    }

    pub fn total(&self) -> f64 {
        *self.cdf.last().expect("non-empty jump law")
    }
}

/// Rate tables for one parameter pair, sized for states up to `n_max`.
///
/// Everything is immutable after construction except the per-state jump law
/// cache, which fills lazily and may be shared across threads.
pub struct RateContext {
    params: BetaParams,
    n_max: usize,
    // ln Γ(b+m) − ln Γ(m+1), m = 0..=n_max
    surv: Vec<f64>,
    // ln Γ(a+i−2) − ln Γ(i+1), i = 2..=n_max (0, 1 unused)
    merge: Vec<f64>,
    // ln Γ(n+1) − ln Γ(a+b+n−2), n = 2..=n_max (0, 1 unused)
    norm: Vec<f64>,
    lambda: Vec<f64>,
    log_lambda: Vec<f64>,
    jumps: Vec<OnceLock<Arc<JumpLaw>>>,
}

impl fmt::Debug for RateContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateContext").field("params", &self.params).field("n_max", &self.n_max).finish()
    }
}

impl RateContext {
    /// Builds the tables for states `2..=n_max` (at least 2).
    pub fn new(params: BetaParams, n_max: usize) -> Self {
        let n_max = n_max.max(2);
        let BetaParams { a, b } = params;
        let surv: Vec<f64> = (0..=n_max).map(|m| ln_gamma_ratio_at(m as f64, b, 1.0)).collect();
        let mut merge = vec![f64::NAN; n_max + 1];
        let mut norm = vec![f64::NAN; n_max + 1];
        for i in 2..=n_max {
            let x = i as f64;
            merge[i] = ln_gamma_ratio_at(x, a - 2.0, 1.0);
            norm[i] = ln_gamma_ratio_at(x, 1.0, a + b - 2.0);
        }
        let mut lambda = vec![0.0; n_max + 1];
        if needs_series(a) {
            // Cumulative form of the defining series.
            let ga = lgamma(a).exp();
            let mut acc = Neumaier::default();
            for n in 2..=n_max {
                acc.add(series_term(a, b, n - 1));
                lambda[n] = ga * acc.sum();
            }
        } else {
            for (n, l) in lambda.iter_mut().enumerate().skip(2) {
                *l = total_rate_formula(params, n);
            }
        }
        let log_lambda = lambda.iter().map(|l| l.ln()).collect();
        let jumps = (0..=n_max).map(|_| OnceLock::new()).collect();
        Self { params, n_max, surv, merge, norm, lambda, log_lambda, jumps }
    }

    pub fn params(&self) -> BetaParams {
        self.params
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Context for Λ' = β_{a,b+1}, with the same table size.
    pub fn prime(&self) -> RateContext {
        RateContext::new(self.params.prime(), self.n_max)
    }

    /// ln λ_{p,k}.
    pub fn merge_rate_log(&self, p: usize, k: usize) -> Result<f64> {
        if !(2 <= k && k <= p) {
            return Err(Error::Index(format!("merge_rate_log needs 2 <= k <= p, got p={p}, k={k}")));
        }
        let BetaParams { a, b } = self.params;
        let (kf, mf) = ((k - 2) as f64, (p - k) as f64);
        // Pair the larger numerator argument with the denominator.
        Ok(if kf <= mf {
            lgamma(a + kf) + ln_gamma_ratio_at(mf, b, a + b + kf)
        } else {
            lgamma(b + mf) + ln_gamma_ratio_at(kf, a, a + b + mf)
        })
    }

    /// λ_n, from the table when `n <= n_max`.
    pub fn total_rate(&self, n: usize) -> f64 {
        assert!(n >= 2, "total_rate needs n >= 2, got {n}");
        if n <= self.n_max {
            self.lambda[n]
        } else {
            total_rate_uncached(self.params, n)
        }
    }

    pub fn log_total_rate(&self, n: usize) -> f64 {
        if (2..=self.n_max).contains(&n) {
            self.log_lambda[n]
        } else {
            self.total_rate(n).ln()
        }
    }

    /// The tabulated λ_n, indexed by `n` (entries 0 and 1 are zero).
    pub fn total_rates(&self) -> &[f64] {
        &self.lambda
    }

    /// λ_n = Γ(a) Σ_{j=1}^{n−1} j Γ(b−1+j)/Γ(a+b−1+j), summed term by term.
    pub fn total_rate_series_oracle(&self, n: usize) -> f64 {
        total_rate_series(self.params, n)
    }

    /// Large-n approximation of λ_n with the available correction terms.
    pub fn total_rate_asymptotic(&self, n: usize) -> f64 {
        let BetaParams { a, b } = self.params;
        let nf = n as f64;
        if a == 1.0 {
            nf - (b - 1.0) * nf.ln()
        } else if a == 2.0 {
            nf.ln() - 1.0 - psi(b)
        } else if a > 2.0 {
            self.d_limit()
        } else {
            let j = gamma_signed(a + b - 2.0).recip().to_f64() * lgamma(b).exp() / (1.0 - a);
            let corr = (2.0 - a) / (2.0 * nf) * (a + 2.0 * b - 3.0 - 2.0 * (b - 1.0) / (1.0 - a));
            lgamma(a).exp() / (2.0 - a) * nf.powf(2.0 - a) * (1.0 + corr + j / nf.powf(2.0 - a))
        }
    }

    /// Γ(a)Γ(b)/(Γ(a+b−2)(a−1)(a−2)): the limit of λ_n when a > 2. Returns +∞
    /// for a ∈ (1, 2].
    pub fn d_limit(&self) -> f64 {
        let BetaParams { a, b } = self.params;
        if a <= 2.0 {
            return f64::INFINITY;
        }
        let g = gamma_signed(a + b - 2.0).recip().to_f64();
        (lgamma(a) + lgamma(b)).exp() * g / ((a - 1.0) * (a - 2.0))
    }

    /// ln(binom(n, j−1) λ_{n,n−j+1}) for `1 <= j <= n−1`.
    #[inline]
    pub fn log_weighted_rate(&self, n: usize, j: usize) -> f64 {
        debug_assert!(j >= 1 && j < n, "log_weighted_rate({n}, {j})");
        let m = j - 1;
        let i = n - m;
        if n <= self.n_max {
            self.surv[m] + self.merge[i] + self.norm[n]
        } else {
            let BetaParams { a, b } = self.params;
            let (mf, xi, xn) = (m as f64, i as f64, n as f64);
            ln_gamma_ratio_at(mf, b, 1.0) + ln_gamma_ratio_at(xi, a - 2.0, 1.0) + ln_gamma_ratio_at(xn, 1.0, a + b - 2.0)
        }
    }

    /// ln w_{n,j}, the log-probability of jumping from `n` to `j`.
    #[inline]
    pub fn log_jump_weight(&self, n: usize, j: usize) -> f64 {
        self.log_weighted_rate(n, j) - self.log_total_rate(n)
    }

    /// Builds the jump law out of `n` without caching it.
    pub fn build_jump_law(&self, n: usize) -> JumpLaw {
        assert!(n >= 2, "jump law needs n >= 2, got {n}");
        let log_weights: Vec<f64> = (1..n).map(|j| self.log_jump_weight(n, j)).collect();
        let probs: Vec<f64> = log_weights.iter().map(|l| l.exp()).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = Neumaier::default();
        for &p in &probs {
            acc.add(p);
            cdf.push(acc.sum());
        }
        JumpLaw { log_weights, probs, cdf }
    }

    /// Cached jump law out of state `n` (`2 <= n <= n_max`).
    pub fn jump_distribution(&self, n: usize) -> Result<Arc<JumpLaw>> {
        if !(2..=self.n_max).contains(&n) {
            return Err(Error::Index(format!("jump_distribution: state {n} outside 2..={}", self.n_max)));
        }
        Ok(self.jumps[n].get_or_init(|| Arc::new(self.build_jump_law(n))).clone())
    }

    /// φ(k) = ∫ (1 − (1−r)^k) r^{−1} Λ(dr), closed form for a ∈ (0,1).
    pub fn phi(&self, k: usize) -> Result<f64> {
        let BetaParams { a, b } = self.params;
        if a >= 1.0 {
            return Err(self.params.regime_error("phi", "closed form requires a in (0,1)"));
        }
        if k == 0 {
            return Err(Error::Index("phi needs k >= 1".into()));
        }
        let kf = k as f64;
        let first = ln_gamma_ratio_at(kf, b, a + b - 1.0).exp();
        let second = if a + b == 1.0 {
            0.0
        } else {
            lgamma(b).exp() * gamma_signed(a + b - 1.0).recip().to_f64()
        };
        Ok(lgamma(a).exp() / (1.0 - a) * (first - second))
    }

    /// φ(k) = Γ(a) Σ_{j=1}^{k} Γ(b−1+j)/Γ(a+b−1+j), valid for every a > 0.
    pub fn phi_series(&self, k: usize) -> f64 {
        let BetaParams { a, b } = self.params;
        let mut acc = Neumaier::default();
        for j in 1..=k {
            acc.add(ln_gamma_ratio_at(j as f64, b - 1.0, a + b - 1.0).exp());
        }
        lgamma(a).exp() * acc.sum()
    }

    /// μ = −∫ ln(1−r) r^{−2} Λ(dr), closed form for a > 1.
    pub fn mu(&self) -> Result<f64> {
        let BetaParams { a, b } = self.params;
        if a <= 1.0 {
            return Err(self.params.regime_error("mu", "requires a > 1"));
        }
        if a == 2.0 {
            return Ok(psi1(b));
        }
        let c = a + b - 2.0;
        // Γ(b)(ψ(b) − ψ(c))/Γ(c), continuous through c = 0.
        let ratio_times_diff = if c > 0.0 {
            ln_gamma_ratio_at(0.0, b, c).exp() * (psi(b) - psi(c))
        } else {
            lgamma(b).exp() * (psi(b) * gamma_signed(c).recip().to_f64() - digamma_over_gamma(c))
        };
        Ok(lgamma(a).exp() * ratio_times_diff / ((2.0 - a) * (a - 1.0)))
    }

    /// μ by quadrature of its defining integral.
    pub fn mu_quadrature(&self) -> Result<f64> {
        let BetaParams { a, b } = self.params;
        if a <= 1.0 {
            return Err(self.params.regime_error("mu_quadrature", "requires a > 1"));
        }
        // −ln(1−r)/r, taking ln of the exact complement near r = 1.
        let g = |r: f64, s: f64| if r < 0.5 { -(-r).ln_1p() / r } else { -s.ln() / r };
        Ok(quad::beta_weighted(g, a - 1.0, b, 1e-13))
    }
}

/// ψ(c)/Γ(c) for real c, continuous through the poles of Γ.
pub(crate) fn digamma_over_gamma(c: f64) -> f64 {
    if c > 0.0 {
        return psi(c) * (-lgamma(c)).exp();
    }
    if c.fract() == 0.0 {
        // Near −n: 1/Γ(c) ≈ (−1)^n n! (c+n), ψ(c) ≈ −1/(c+n).
        let n = -c;
        let sign = if (n as u64) % 2 == 0 { 1.0 } else { -1.0 };
        return -sign * lgamma(n + 1.0).exp();
    }
    // Reflection: ψ(c) = ψ(1−c) − π cot(πc).
    let pi = std::f64::consts::PI;
    let psi_c = psi(1.0 - c) - pi / (pi * c).tan();
    psi_c * gamma_signed(c).recip().to_f64()
}

fn needs_series(a: f64) -> bool {
    a != 1.0 && a != 2.0 && ((a - 1.0).abs() < NEAR_INTEGER_A || (a - 2.0).abs() < NEAR_INTEGER_A)
}

/// j Γ(b−1+j)/Γ(a+b−1+j)
fn series_term(a: f64, b: f64, j: usize) -> f64 {
    let jf = j as f64;
    jf * ln_gamma_ratio_at(jf, b - 1.0, a + b - 1.0).exp()
}

fn total_rate_series(p: BetaParams, n: usize) -> f64 {
    let mut acc = Neumaier::default();
    for j in 1..n {
        acc.add(series_term(p.a, p.b, j));
    }
    lgamma(p.a).exp() * acc.sum()
}

fn total_rate_uncached(p: BetaParams, n: usize) -> f64 {
    if needs_series(p.a) {
        total_rate_series(p, n)
    } else {
        total_rate_formula(p, n)
    }
}

/// Σ_{j=lo}^{hi−1} 1/(b+j), directly for short ranges and through ψ otherwise.
fn shifted_harmonic(b: f64, lo: usize, hi: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if hi - lo <= 64 {
        let mut acc = Neumaier::default();
        for j in (lo..hi).rev() {
            acc.add((b + j as f64).recip());
        }
        acc.sum()
    } else {
        psi(b + hi as f64) - psi(b + lo as f64)
    }
}

/// Closed forms of λ_n in the three parameter branches.
fn total_rate_formula(p: BetaParams, n: usize) -> f64 {
    let BetaParams { a, b } = p;
    let nf = n as f64;
    if a == 1.0 {
        return nf - 1.0 - (b - 1.0) * shifted_harmonic(b, 0, n - 1);
    }
    if a == 2.0 {
        return shifted_harmonic(b, 1, n) + 1.0 / b - nf / (b + nf - 1.0);
    }
    let ga = lgamma(a).exp();
    let den = a + b - 2.0;
    let t1 = ga / (2.0 - a) * ln_gamma_ratio_at(nf, b, den).exp();
    let t2 = -(b - 1.0) * ga / (1.0 - a) * ln_gamma_ratio_at(nf, b - 1.0, den).exp();
    let c = ga * lgamma(b).exp() * gamma_signed(a + b - 2.0).recip().to_f64() / ((1.0 - a) * (2.0 - a));
    let mut acc = Neumaier::default();
    acc.add(t1);
    acc.add(t2);
    acc.add(c);
    acc.sum()
}

/// Kahan–Babuška (Neumaier) compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::beta_weighted;
    use std::f64::consts::PI;

    fn ctx(a: f64, b: f64, n: usize) -> RateContext {
        RateContext::new(BetaParams::new(a, b).unwrap(), n)
    }

    fn rel(x: f64, y: f64) -> f64 {
        ((x - y) / y).abs()
    }

    fn ln_beta(a: f64, b: f64) -> f64 {
        lgamma(a) + lgamma(b) - lgamma(a + b)
    }

    #[test]
    fn params_validation_and_regimes() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, f64::NAN).is_err());
        let r = |a| BetaParams::new(a, 1.0).unwrap().regime();
        assert_eq!(r(0.5), Regime::ComingDown);
        assert_eq!(r(1.0), Regime::Critical);
        assert_eq!(r(2.0), Regime::Divergent);
        assert_eq!(r(2.5), Regime::BoundedRates);
    }

    #[test]
    fn merge_rate_examples() {
        let c = ctx(0.7, 1.3, 10);
        assert!((c.merge_rate_log(2, 2).unwrap() - ln_beta(0.7, 1.3)).abs() < 1e-14);
        assert!((ctx(1.0, 1.0, 10).merge_rate_log(3, 2).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert!(c.merge_rate_log(3, 4).is_err());
        assert!(c.merge_rate_log(3, 1).is_err());
        // ∫ r^{k−2}(1−r)^{p−k} β_{a,b}(dr)
        let q = beta_weighted(|_, _| 1.0, 0.7 + 1.0, 1.3 + 2.0, 1e-14);
        assert!(rel(c.merge_rate_log(5, 3).unwrap().exp(), q) < 1e-8);
    }

    #[test]
    fn merge_rate_decreasing_in_p() {
        let c = ctx(1.5, 0.5, 10);
        for k in [2, 5, 40] {
            let v: Vec<f64> = (k..400).map(|p| c.merge_rate_log(p, k).unwrap()).collect();
            assert!(v.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn total_rate_examples() {
        for &(a, b) in &[(0.5, 1.5), (1.0, 0.5), (2.0, 2.5), (3.5, 1.0), (1.5, 0.5)] {
            let c = ctx(a, b, 10);
            assert!(rel(c.total_rate(2), ln_beta(a, b).exp()) < 1e-13, "({a},{b})");
            assert!(rel(c.total_rate_series_oracle(2), ln_beta(a, b).exp()) < 1e-13);
        }
        let bs = ctx(1.0, 1.0, 100);
        for n in 2..=100 {
            assert!((bs.total_rate(n) - (n as f64 - 1.0)).abs() < 1e-12);
        }
        assert_eq!(bs.total_rate_series_oracle(10), 9.0);
        let c = ctx(2.0, 1.0, 3000);
        for n in [2usize, 7, 100, 3000] {
            let h: f64 = (1..=n).map(|j| 1.0 / j as f64).sum();
            assert!(rel(c.total_rate(n), h - 1.0) < 1e-13, "n={n}");
        }
    }

    #[test]
    fn closed_form_beyond_table_matches_table() {
        let small = ctx(1.5, 1.5, 10);
        let big = ctx(1.5, 1.5, 500);
        assert!(rel(small.total_rate(500), big.total_rate(500)) < 1e-15);
        assert!((small.log_weighted_rate(300, 17) - big.log_weighted_rate(300, 17)).abs() < 1e-12);
    }

    #[test]
    fn near_integer_a_uses_series() {
        for a in [1.0 + 5e-7, 2.0 - 3e-7, 0.97, 2.04] {
            let c = ctx(a, 1.5, 300);
            for n in [2, 50, 300, 1000] {
                assert!(rel(c.total_rate(n), c.total_rate_series_oracle(n)) < 1e-13);
            }
        }
    }

    #[test]
    fn asymptotic_examples() {
        let c = ctx(3.0, 1.0, 10);
        assert!((c.total_rate_asymptotic(1 << 20) - 1.0).abs() < 1e-14);
        assert!((c.d_limit() - 1.0).abs() < 1e-14);
        let c = ctx(2.0, 1.0, 10);
        let want = 1e4f64.ln() - 1.0 + 0.577_215_664_901_532_9;
        assert!((c.total_rate_asymptotic(10_000) - want).abs() < 1e-12);
        let c = ctx(1.5, 1.0, 10);
        let lead = lgamma(1.5).exp() * 2.0 * 1e3;
        assert!(rel(c.total_rate_asymptotic(1_000_000), lead) < 1e-2);
        assert!(rel(c.total_rate(1_000_000), c.total_rate_asymptotic(1_000_000)) < 1e-8);
    }

    #[test]
    fn bounded_rates_stay_below_limit() {
        let c = ctx(3.5, 1.5, 5000);
        let d = c.d_limit();
        assert!(c.total_rates()[2..].iter().all(|&l| l < d));
    }

    #[test]
    fn jump_law_examples() {
        let c = ctx(1.0, 1.0, 10);
        let j2 = c.jump_distribution(2).unwrap();
        assert_eq!(j2.probs.len(), 1);
        assert!((j2.probs[0] - 1.0).abs() < 1e-14);
        let j3 = c.jump_distribution(3).unwrap();
        assert!((j3.probs[0] - 0.25).abs() < 1e-14 && (j3.probs[1] - 0.75).abs() < 1e-14);
        assert!(c.jump_distribution(11).is_err());
        assert_eq!(j3.sample(0.1), 1);
        assert_eq!(j3.sample(0.3), 2);
        assert_eq!(j3.sample(1.0 - 1e-16), 2);
    }

    #[test]
    fn jump_laws_are_normalised() {
        for &(a, b) in &[(0.3, 0.5), (0.5, 1.5), (1.0, 2.5), (1.5, 1.0), (2.0, 0.5), (3.5, 2.5), (1.5, 0.5)] {
            let c = ctx(a, b, 3000);
            for n in [2, 3, 10, 257, 3000] {
                let s = c.jump_distribution(n).unwrap().total();
                assert!((s - 1.0).abs() < 1e-12, "({a},{b}) n={n}: {s}");
            }
        }
    }

    #[test]
    fn phi_examples() {
        let c = ctx(0.5, 1.5, 10);
        assert!(rel(c.phi(1).unwrap(), ln_beta(0.5, 1.5).exp()) < 1e-13);
        let q = beta_weighted(|r, s| (1.0 - s * s) / r, 0.5, 1.5, 1e-13);
        assert!(rel(c.phi(2).unwrap(), q) < 1e-8);
        let k = 1_000_000;
        let lead = lgamma(0.5).exp() / 0.5 * (k as f64).sqrt();
        assert!(rel(c.phi(k).unwrap(), lead) < 1e-3);
        assert!(ctx(1.0, 1.0, 10).phi(3).is_err());
        for &(a, b) in &[(0.5, 1.5), (0.3, 0.7), (0.2, 0.5), (0.9, 2.5)] {
            let c = ctx(a, b, 10);
            for k in [1, 2, 9, 200] {
                assert!(rel(c.phi(k).unwrap(), c.phi_series(k)) < 1e-11, "({a},{b}) k={k}");
            }
        }
    }

    #[test]
    fn mu_examples() {
        assert!(rel(ctx(2.0, 1.0, 10).mu().unwrap(), PI * PI / 6.0) < 1e-14);
        assert!(rel(ctx(2.0, 2.0, 10).mu().unwrap(), PI * PI / 6.0 - 1.0) < 1e-14);
        assert!(ctx(1.0, 1.0, 10).mu().is_err());
        for &(a, b) in &[(1.5, 0.5), (1.3, 0.5), (1.7, 1.0), (2.4, 2.0), (3.0, 0.5), (1.5, 1.5), (1.2, 0.3)] {
            let c = ctx(a, b, 10);
            let (m, q) = (c.mu().unwrap(), c.mu_quadrature().unwrap());
            assert!(rel(m, q) < 1e-6, "({a},{b}): {m} vs {q}");
        }
    }

    #[test]
    fn prime_shifts_b() {
        let c = ctx(0.5, 1.5, 10);
        assert_eq!(c.prime().params(), BetaParams { a: 0.5, b: 2.5 });
        assert_eq!(c.prime().prime().params(), BetaParams { a: 0.5, b: 3.5 });
        let p = ctx(1.0, 1.0, 50).prime();
        for n in [2usize, 10, 50] {
            let s: f64 = (1..n).map(|j| 1.0 / (1.0 + j as f64)).sum();
            assert!((p.total_rate(n) - (n as f64 - 1.0 - s)).abs() < 1e-12);
        }
    }
}
