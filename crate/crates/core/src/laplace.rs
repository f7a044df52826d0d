//! Exact Laplace transforms of integral functionals of the block-counting chain.
//!
//! For a sequence `θψ` on states `n ≥ 2`,
//! `E_n = E[exp(∫_0^{τ_n} θψ(|Π_s|) ds)]` satisfies the first-jump recursion
//!
//! ```text
//! E_1 = 1,   E_n = (1 − θψ(n)/λ_n)^{−1} Σ_{j=1}^{n−1} w_{n,j} E_j,
//! ```
//!
//! which is finite as long as `θψ(j) < λ_j` for every visited `j`. The hitting
//! variant restricts to paths through a state `k`: `E_{k,k} = (1 − θψ(k)/λ_k)^{−1}`,
//! `E_{n,k} = 0` for `n < k`, and the sum runs over `j ≥ k`.
//!
//! Everything is carried in the log domain: `E_n` behaves like `n^ℓ` with ℓ
//! anywhere in `(−b, ∞)`.

use std::sync::Arc;

use crate::rates::{BetaParams, Neumaier, RateContext};
use crate::specfun::ln_gamma_ratio_at;
use crate::{Error, Result};

/// A sequence `n ↦ θψ(n)` on states `n ≥ 2`.
pub trait Functional: Send + Sync {
    /// θψ(n).
    fn theta_psi(&self, n: usize) -> f64;

    /// ln(1 − θψ(n)/λ_n). Override when a cancellation-free form is known.
    fn log_retention(&self, n: usize, lambda_n: f64) -> f64 {
        (-self.theta_psi(n) / lambda_n).ln_1p()
    }

    /// Short description used in manifests.
    fn tag(&self) -> String;
}

/// θψ ≡ c.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Functional for Constant {
    fn theta_psi(&self, _n: usize) -> f64 {
        self.0
    }
    fn tag(&self) -> String {
        format!("constant({})", self.0)
    }
}

/// θψ(n) = θ 1_{n ≥ k}.
#[derive(Debug, Clone, Copy)]
pub struct Indicator {
    pub theta: f64,
    pub k: usize,
}

impl Functional for Indicator {
    fn theta_psi(&self, n: usize) -> f64 {
        if n >= self.k {
            self.theta
        } else {
            0.0
        }
    }
    fn tag(&self) -> String {
        format!("indicator(theta={}, k={})", self.theta, self.k)
    }
}

/// θψ given by a closure.
pub struct FromFn<F> {
    f: F,
    tag: String,
}

impl<F: Fn(usize) -> f64 + Send + Sync> FromFn<F> {
    pub fn new(tag: impl Into<String>, f: F) -> Self {
        Self { f, tag: tag.into() }
    }
}

impl<F: Fn(usize) -> f64 + Send + Sync> Functional for FromFn<F> {
    fn theta_psi(&self, n: usize) -> f64 {
        (self.f)(n)
    }
    fn tag(&self) -> String {
        self.tag.clone()
    }
}

/// ln of `[Γ(b+n−1)/Γ(b+ℓ+n−1)] · [Γ(a+b+ℓ+n−2)/Γ(a+b+n−2)]`.
fn log_gamma_factor(p: BetaParams, ell: f64, n: usize) -> f64 {
    let (BetaParams { a, b }, nf) = (p, n as f64);
    ln_gamma_ratio_at(nf, b - 1.0, b + ell - 1.0) + ln_gamma_ratio_at(nf, a + b + ell - 2.0, a + b - 2.0)
}

fn check_ell(p: BetaParams, ell: f64) -> Result<()> {
    if ell > -p.b && ell.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { op: "special_psi", value: ell, reason: "requires ell > -b" })
    }
}

/// The sequence sgn(ℓ)ψ_{a,b,ℓ} whose transform is
/// `Γ(b+ℓ+n−1)Γ(b)/(Γ(b+n−1)Γ(b+ℓ))`.
///
/// Evaluated through `1 − sgn(ℓ)ψ(n)/λ_n = Q_n` with
/// `Q_n = [Γ(b+n−1)/Γ(b+ℓ+n−1)] [Γ(a+b+ℓ+n−2)/Γ(a+b+n−2)] λ_n(a,b+ℓ)/λ_n(a,b)`,
/// which has no cancellation.
pub struct SpecialPsi {
    base: Arc<RateContext>,
    shifted: RateContext,
    ell: f64,
}

impl SpecialPsi {
    pub fn new(base: Arc<RateContext>, ell: f64) -> Result<Self> {
        let p = base.params();
        check_ell(p, ell)?;
        let shifted = RateContext::new(p.shift_b(ell)?, base.n_max());
        Ok(Self { base, shifted, ell })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// ln Q_n.
    pub fn log_quotient(&self, n: usize) -> f64 {
        if self.ell == 0.0 {
            return 0.0;
        }
        log_gamma_factor(self.base.params(), self.ell, n) + self.shifted.log_total_rate(n) - self.base.log_total_rate(n)
    }
}

impl Functional for SpecialPsi {
    fn theta_psi(&self, n: usize) -> f64 {
        -self.base.total_rate(n) * self.log_quotient(n).exp_m1()
    }
    fn log_retention(&self, n: usize, _lambda_n: f64) -> f64 {
        self.log_quotient(n)
    }
    fn tag(&self) -> String {
        format!("special_psi(ell={})", self.ell)
    }
}

/// The sequence sgn(ℓ)ψ_{a,b,ℓ,k}, zero on `2..=k`, whose hitting transform is
/// `Γ(b+ℓ+n−1)Γ(b+k−1)/(Γ(b+n−1)Γ(b+ℓ+k−1))`.
///
/// Same quotient as [`SpecialPsi`] with `λ_n(a,b+ℓ)` replaced by its part
/// over targets `j ≥ k`.
pub struct SpecialPsiHitting {
    base: Arc<RateContext>,
    shifted: RateContext,
    ell: f64,
    k: usize,
}

impl SpecialPsiHitting {
    pub fn new(base: Arc<RateContext>, ell: f64, k: usize) -> Result<Self> {
        let p = base.params();
        check_ell(p, ell)?;
        if k < 2 {
            return Err(Error::Index(format!("special_psi_hitting needs k >= 2, got {k}")));
        }
        let shifted = RateContext::new(p.shift_b(ell)?, base.n_max());
        Ok(Self { base, shifted, ell, k })
    }

    /// ln Σ_{j=k}^{n−1} binom(n, j−1) λ_{n,n−j+1}(a, b+ℓ) for n > k.
    fn log_tail_rate(&self, n: usize) -> f64 {
        let k = self.k;
        let total = self.shifted.total_rate(n);
        let mut head = Neumaier::default();
        for j in 1..k {
            head.add(self.shifted.log_weighted_rate(n, j).exp());
        }
        let head = head.sum();
        if head < 0.5 * total {
            (total - head).ln()
        } else {
            let terms: Vec<f64> = (k..n).map(|j| self.shifted.log_weighted_rate(n, j)).collect();
            log_sum_exp(&terms)
        }
    }

    /// ln Q_{n,k}; zero for n ≤ k.
    pub fn log_quotient(&self, n: usize) -> f64 {
        if n <= self.k {
            return 0.0;
        }
        log_gamma_factor(self.base.params(), self.ell, n) + self.log_tail_rate(n) - self.base.log_total_rate(n)
    }
}

impl Functional for SpecialPsiHitting {
    fn theta_psi(&self, n: usize) -> f64 {
        if n <= self.k {
            return 0.0;
        }
        -self.base.total_rate(n) * self.log_quotient(n).exp_m1()
    }
    fn log_retention(&self, n: usize, _lambda_n: f64) -> f64 {
        self.log_quotient(n)
    }
    fn tag(&self) -> String {
        format!("special_psi_hitting(ell={}, k={})", self.ell, self.k)
    }
}

/// θψ = −φ^{β_{a,b}}, to be run on the (a, b+1) chain.
pub struct NegPhi {
    base: RateContext,
}

impl NegPhi {
    pub fn new(params: BetaParams) -> Result<Self> {
        let base = RateContext::new(params, 2);
        base.phi(1)?;
        Ok(Self { base })
    }
}

impl Functional for NegPhi {
    fn theta_psi(&self, n: usize) -> f64 {
        -self.base.phi(n).expect("regime checked at construction")
    }
    fn log_retention(&self, n: usize, lambda_n: f64) -> f64 {
        (-self.theta_psi(n) / lambda_n).ln_1p()
    }
    fn tag(&self) -> String {
        let p = self.base.params();
        format!("neg_phi(a={}, b={})", p.a, p.b)
    }
}

/// Which recursion produced a [`LaplaceSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plain,
    /// Paths through state `k`.
    Hitting(usize),
}

/// ln E_n for n = 1..=N.
#[derive(Debug, Clone)]
pub struct LaplaceSeries {
    /// `log_values[n − 1] = ln E_n`; −∞ encodes E_n = 0.
    pub log_values: Vec<f64>,
    pub variant: Variant,
    pub params: BetaParams,
    pub tag: String,
}

impl LaplaceSeries {
    /// Largest n covered.
    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn log_e(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.len() {
            return Err(Error::Index(format!("state {n} outside 1..={}", self.len())));
        }
        Ok(self.log_values[n - 1])
    }

    pub fn e(&self, n: usize) -> Result<f64> {
        self.log_e(n).map(f64::exp)
    }
}

/// ln Σ exp(t_i); −∞ for an empty slice.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    m + s.ln()
}

fn admissibility_error(f: &dyn Functional, n: usize, lambda: f64) -> Error {
    Error::Admissibility { state: n, value: f.theta_psi(n), rate: lambda }
}

fn run_recursion(ctx: &RateContext, f: &dyn Functional, k: usize, n_max: usize) -> Result<Vec<f64>> {
    let mut log_e = vec![f64::NEG_INFINITY; n_max];
    let mut buf = Vec::with_capacity(n_max);
    for n in k.max(1)..=n_max {
        if n == 1 {
            log_e[0] = 0.0;
            continue;
        }
        let lambda = ctx.total_rate(n);
        let retention = f.log_retention(n, lambda);
        if !retention.is_finite() {
            return Err(admissibility_error(f, n, lambda));
        }
        let conv = if n == k {
            0.0
        } else {
            buf.clear();
            let lo = k.max(1);
            buf.extend((lo..n).map(|j| ctx.log_weighted_rate(n, j) + log_e[j - 1]));
            log_sum_exp(&buf) - ctx.log_total_rate(n)
        };
        log_e[n - 1] = conv - retention;
    }
    Ok(log_e)
}

/// E_n for n = 1..=N by the first-jump recursion.
pub fn laplace_series(ctx: &RateContext, f: &dyn Functional, n_max: usize) -> Result<LaplaceSeries> {
    if n_max == 0 {
        return Err(Error::Index("laplace_series needs N >= 1".into()));
    }
    Ok(LaplaceSeries {
        log_values: run_recursion(ctx, f, 1, n_max)?,
        variant: Variant::Plain,
        params: ctx.params(),
        tag: f.tag(),
    })
}

/// E_{n,k} for n = 1..=N.
pub fn laplace_series_hitting(ctx: &RateContext, f: &dyn Functional, k: usize, n_max: usize) -> Result<LaplaceSeries> {
    if k < 2 {
        return Err(Error::Index(format!("hitting level must be >= 2, got {k}")));
    }
    if n_max < k {
        return Err(Error::Index(format!("N = {n_max} below the hitting level {k}")));
    }
    Ok(LaplaceSeries {
        log_values: run_recursion(ctx, f, k, n_max)?,
        variant: Variant::Hitting(k),
        params: ctx.params(),
        tag: f.tag(),
    })
}

/// ln[Γ(b+ℓ+n−1)Γ(b)/(Γ(b+n−1)Γ(b+ℓ))].
pub fn closed_form_log_e(params: BetaParams, ell: f64, n: usize) -> f64 {
    let b = params.b;
    ln_gamma_ratio_at(n as f64, b + ell - 1.0, b - 1.0) - ln_gamma_ratio_at(b, ell, 0.0)
}

pub fn closed_form_e(params: BetaParams, ell: f64, n: usize) -> f64 {
    closed_form_log_e(params, ell, n).exp()
}

/// ln[Γ(b+ℓ+n−1)Γ(b+k−1)/(Γ(b+n−1)Γ(b+ℓ+k−1))] for n ≥ k.
pub fn closed_form_hitting_log_e(params: BetaParams, ell: f64, k: usize, n: usize) -> f64 {
    let b = params.b;
    ln_gamma_ratio_at(n as f64, b + ell - 1.0, b - 1.0) - ln_gamma_ratio_at(k as f64, b + ell - 1.0, b - 1.0)
}

fn require_coming_down(params: BetaParams, op: &'static str) -> Result<()> {
    if params.a > 0.0 && params.a < 1.0 {
        Ok(())
    } else {
        Err(params.regime_error(op, "requires a in (0,1)"))
    }
}

/// P(τ_n ≠ τ_{n+1}) for n = 1..=N, as E^{(a,b+1)}_n(−φ^{(a,b)}).
pub fn record_probabilities(params: BetaParams, n_max: usize) -> Result<LaplaceSeries> {
    require_coming_down(params, "record_probability")?;
    let prime = RateContext::new(params.prime(), n_max);
    let f = NegPhi::new(params)?;
    laplace_series(&prime, &f, n_max)
}

pub fn record_probability(params: BetaParams, n: usize) -> Result<f64> {
    record_probabilities(params, n)?.e(n)
}

/// Upper bound on the Kolmogorov distance between τ_n and its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovBound {
    pub n: usize,
    pub trunc: usize,
    /// Σ_{k=n}^{trunc} record probabilities.
    pub partial: f64,
    /// Fitted remainder C trunc^{−(1−a)}/(1−a).
    pub tail: f64,
    /// Fitted constant in record_k ≈ C k^{−(2−a)}.
    pub c_fit: f64,
}

impl KolmogorovBound {
    pub fn total(&self) -> f64 {
        self.partial + self.tail
    }
}

fn check_kolmogorov(params: BetaParams) -> Result<()> {
    require_coming_down(params, "kolmogorov_bound")?;
    if params.b <= 1.0 - params.a {
        return Err(params.regime_error("kolmogorov_bound", "the bound requires b > 1 - a"));
    }
    Ok(())
}

/// Bounds for each `n` in `ns`, sharing one record series up to `trunc`.
pub fn kolmogorov_bounds(params: BetaParams, ns: &[usize], trunc: usize) -> Result<Vec<KolmogorovBound>> {
    check_kolmogorov(params)?;
    if let Some(&bad) = ns.iter().find(|&&n| n == 0 || n >= trunc) {
        return Err(Error::Index(format!("kolmogorov_bound needs 1 <= n < trunc, got n={bad}, trunc={trunc}")));
    }
    let series = record_probabilities(params, trunc)?;
    let a = params.a;
    // One-parameter least squares with the slope pinned at −(2−a).
    let lo = (trunc / 10).max(1);
    let fit: Vec<f64> = (lo..=trunc).map(|k| series.log_values[k - 1] + (2.0 - a) * (k as f64).ln()).collect();
    let c_fit = (fit.iter().sum::<f64>() / fit.len() as f64).exp();
    let tail = c_fit * (trunc as f64).powf(-(1.0 - a)) / (1.0 - a);
    // Suffix sums, smallest terms first.
    let mut suffix = vec![0.0; trunc + 2];
    for k in (1..=trunc).rev() {
        suffix[k] = suffix[k + 1] + series.log_values[k - 1].exp();
    }
    Ok(ns.iter().map(|&n| KolmogorovBound { n, trunc, partial: suffix[n], tail, c_fit }).collect())
}

pub fn kolmogorov_bound(params: BetaParams, n: usize, trunc: usize) -> Result<KolmogorovBound> {
    Ok(kolmogorov_bounds(params, &[n], trunc)?[0])
}

/// Dyadic growth exponent (ln E_{2n} − ln E_n)/ln 2.
pub fn scaling_exponent(series: &LaplaceSeries, n: usize) -> Result<f64> {
    if n == 0 || 2 * n > series.len() {
        return Err(Error::Index(format!("scaling_exponent needs 2n <= {}, got n={n}", series.len())));
    }
    Ok((series.log_e(2 * n)? - series.log_e(n)?) / std::f64::consts::LN_2)
}

/// E[τ_n] for n = 1..=N from `T_n = 1/λ_n + Σ_j w_{n,j} T_j`.
pub fn mean_absorption_times(ctx: &RateContext, n_max: usize) -> Vec<f64> {
    let mut t = vec![0.0; n_max.max(1)];
    for n in 2..=n_max {
        let mut s = Neumaier::default();
        s.add(1.0 / ctx.total_rate(n));
        for j in 2..n {
            s.add(ctx.log_jump_weight(n, j).exp() * t[j - 1]);
        }
        t[n - 1] = s.sum();
    }
    t
}

/// Result of [`threshold_m`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdM {
    /// inf over j ≤ horizon of λ_j/ψ(j), over ψ(j) > 0.
    pub value: f64,
    pub argmin: usize,
    /// λ_j/ψ(j) is non-decreasing on the second half of the horizon, so the
    /// infimum is unlikely to move with a longer horizon.
    pub stable: bool,
}

/// inf_j λ_j/ψ(j): θ below this keeps E_n(θψ) finite for every n.
pub fn threshold_m(ctx: &RateContext, psi: &dyn Fn(usize) -> f64, horizon: usize) -> Result<ThresholdM> {
    let mut best = ThresholdM { value: f64::INFINITY, argmin: 0, stable: true };
    let mut prev = f64::NEG_INFINITY;
    for j in 2..=horizon {
        let p = psi(j);
        if p < 0.0 {
            return Err(Error::Domain { op: "threshold_M", value: p, reason: "psi must be non-negative" });
        }
        if p == 0.0 {
            continue;
        }
        let r = ctx.total_rate(j) / p;
        if r < best.value {
            best.value = r;
            best.argmin = j;
        }
        if 2 * j > horizon && r < prev {
            best.stable = false;
        }
        prev = r;
    }
    Ok(best)
}
