//! Monte Carlo simulation of the block-counting chain.
//!
//! From state `m ≥ 2` the chain waits an `Exp(λ_m)` time and jumps to `j < m`
//! with probability `w_{m,j}`. Replicate `i` draws from a ChaCha8 stream keyed
//! by `(seed, i)`, and aggregates are folded in replicate order, so results do
//! not depend on the number of worker threads.

use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::laplace::Functional;
use crate::parallel::ExecPolicy;
use crate::rates::{BetaParams, RateContext};
use crate::{Error, Result};

/// Default memory budget for cached jump distributions.
pub const DEFAULT_CACHE_BUDGET: usize = 1 << 30;

/// Number of top entries scanned linearly before falling back to bisection.
const TOP_SCAN: usize = 4;

/// Simulation setup.
#[derive(Clone)]
pub struct SimConfig {
    pub params: BetaParams,
    /// Initial number of blocks.
    pub n0: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Integrand θψ for functional estimators.
    pub functional: Option<Arc<dyn Functional>>,
    /// Levels k whose crossing times T^k are recorded.
    pub hitting_levels: Vec<usize>,
    pub policy: ExecPolicy,
    /// Bytes allowed for cached cumulative jump weights.
    pub cache_budget: usize,
}

impl SimConfig {
    pub fn new(params: BetaParams, n0: usize, replicates: usize, seed: u64) -> Self {
        Self {
            params,
            n0,
            replicates,
            seed,
            functional: None,
            hitting_levels: Vec::new(),
            policy: ExecPolicy::default(),
            cache_budget: DEFAULT_CACHE_BUDGET,
        }
    }

    pub fn with_functional(mut self, f: Arc<dyn Functional>) -> Self {
        self.functional = Some(f);
        self
    }

    pub fn with_hitting_levels(mut self, levels: Vec<usize>) -> Self {
        self.hitting_levels = levels;
        self
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n0 < 2 {
            return Err(Error::Index(format!("n0 must be >= 2, got {}", self.n0)));
        }
        if self.replicates == 0 {
            return Err(Error::Index("replicates must be >= 1".into()));
        }
        if let Some(&k) = self.hitting_levels.iter().find(|&&k| k < 2 || k >= self.n0) {
            return Err(Error::Index(format!("hitting level {k} outside 2..{}", self.n0)));
        }
        Ok(())
    }
}

impl std::fmt::Debug for SimConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimConfig")
            .field("params", &self.params)
            .field("n0", &self.n0)
            .field("replicates", &self.replicates)
            .field("seed", &self.seed)
            .field("functional", &self.functional.as_ref().map(|f| f.tag()))
            .field("hitting_levels", &self.hitting_levels)
            .field("policy", &self.policy)
            .finish()
    }
}

/// One simulated path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    /// τ_n.
    pub absorption_time: f64,
    /// (k, T^k) for each configured level: first time the chain is below k.
    pub hitting_times: Vec<(usize, f64)>,
    /// ∫_0^τ θψ(|Π_s|) ds; zero without a functional.
    pub functional_integral: f64,
    /// States in visiting order, from n0 down to 1.
    pub visited: Vec<usize>,
    pub jumps: usize,
}

/// Sample mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    /// Sample variance with denominator R − 1 (0 for R = 1).
    pub variance: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EstimateWithCI {
    /// Two-pass mean and variance, summed in order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let r = xs.len();
        let mean = xs.iter().sum::<f64>() / r as f64;
        let variance = if r > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1) as f64 } else { 0.0 };
        let std_error = (variance / r as f64).sqrt();
        Self { mean, variance, std_error, replicates: r, ci_low: mean - 1.96 * std_error, ci_high: mean + 1.96 * std_error }
    }

    /// |mean − target| in units of the standard error (∞ if the error is 0 and they differ).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Rao–Blackwellised and naive estimates from the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaoBlackwell {
    pub rao_blackwell: EstimateWithCI,
    pub naive: EstimateWithCI,
}

/// Empirical upper-tail exponent at one point of the x-grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpPoint {
    pub x: f64,
    /// −ln(hits/R)/ln n.
    pub exponent: f64,
    pub hits: usize,
    /// No replicate reached the level: `exponent` is ln R/ln n, a lower bound.
    pub lower_bound_only: bool,
}

/// Cumulative jump weights, built on the second visit to a state.
struct JumpCache {
    cdf: Vec<OnceLock<Arc<[f64]>>>,
    visits: Vec<AtomicU32>,
    bytes: AtomicUsize,
    budget: usize,
}

impl JumpCache {
    fn new(n_max: usize, budget: usize) -> Self {
        Self {
            cdf: (0..=n_max).map(|_| OnceLock::new()).collect(),
            visits: (0..=n_max).map(|_| AtomicU32::new(0)).collect(),
            bytes: AtomicUsize::new(0),
            budget,
        }
    }

    /// Cumulative weights from the top: entry `t` is Σ_{j ≥ m−1−t} w_{m,j}.
    fn build(ctx: &RateContext, m: usize) -> Arc<[f64]> {
        let mut acc = 0.0;
        (1..m)
            .rev()
            .map(|j| {
                acc += ctx.log_jump_weight(m, j).exp();
                acc
            })
            .collect()
    }

    fn cached(&self, ctx: &RateContext, m: usize) -> Option<&Arc<[f64]>> {
        if let Some(c) = self.cdf[m].get() {
            return Some(c);
        }
        let seen = self.visits[m].fetch_add(1, Ordering::Relaxed);
        if seen == 0 {
            return None;
        }
        let size = (m - 1) * std::mem::size_of::<f64>();
        if self.bytes.load(Ordering::Relaxed) + size > self.budget {
            return None;
        }
        Some(self.cdf[m].get_or_init(|| {
            self.bytes.fetch_add(size, Ordering::Relaxed);
            Self::build(ctx, m)
        }))
    }

    /// Next state from `m` for a uniform `u`.
    fn sample(&self, ctx: &RateContext, m: usize, u: f64) -> usize {
        if m == 2 {
            return 1;
        }
        match self.cached(ctx, m) {
            Some(cum) => {
                // Small mergers dominate for a > 1, so scan the top first.
                let len = cum.len();
                let t = match cum.iter().take(TOP_SCAN).position(|&c| u < c) {
                    Some(t) => t,
                    None => cum.partition_point(|&c| c <= u).min(len - 1),
                };
                m - 1 - t
            }
            None => {
                // Chop-down from the top without storing the distribution.
                let mut acc = 0.0;
                for j in (2..m).rev() {
                    acc += ctx.log_jump_weight(m, j).exp();
                    if u < acc {
                        return j;
                    }
                }
                1
            }
        }
    }
}

/// Uniform on the open interval (0,1).
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Simulator bound to one configuration; rate tables and jump caches are
/// shared by all replicates.
pub struct Simulator {
    cfg: SimConfig,
    ctx: Arc<RateContext>,
    cache: JumpCache,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let ctx = Arc::new(RateContext::new(cfg.params, cfg.n0));
        Ok(Self::with_rates(cfg, ctx))
    }

    /// Reuses existing rate tables; they must cover `cfg.n0`.
    pub fn with_context(cfg: SimConfig, ctx: Arc<RateContext>) -> Result<Self> {
        cfg.validate()?;
        if ctx.n_max() < cfg.n0 || ctx.params() != cfg.params {
            return Err(Error::Index(format!("rate tables {:?} do not cover n0 = {}", ctx, cfg.n0)));
        }
        Ok(Self::with_rates(cfg, ctx))
    }

    fn with_rates(cfg: SimConfig, ctx: Arc<RateContext>) -> Self {
        let cache = JumpCache::new(cfg.n0, cfg.cache_budget);
        Self { cfg, ctx, cache }
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn rates(&self) -> &Arc<RateContext> {
        &self.ctx
    }

    fn rng(&self, replicate: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(replicate as u64);
        rng
    }

    /// Runs one path from `n0`, calling `visit(state, holding)` for each state
    /// above 1. Returns τ.
    fn walk(&self, replicate: usize, mut visit: impl FnMut(usize, f64)) -> f64 {
        let mut rng = self.rng(replicate);
        let mut m = self.cfg.n0;
        let mut tau = 0.0;
        while m > 1 {
            let hold = -open_uniform(&mut rng).ln() / self.ctx.total_rate(m);
            visit(m, hold);
            tau += hold;
            m = self.cache.sample(&self.ctx, m, open_uniform(&mut rng));
        }
        tau
    }

    fn per_replicate<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        self.cfg.policy.map_indexed(self.cfg.replicates, f)
    }

    fn functional(&self, op: &'static str) -> Result<&Arc<dyn Functional>> {
        self.cfg.functional.as_ref().ok_or(Error::Domain { op, value: f64::NAN, reason: "configuration has no functional" })
    }

    pub fn simulate_path(&self, replicate: usize) -> PathSummary {
        let f = self.cfg.functional.as_deref();
        let mut visited = vec![];
        let mut integral = 0.0;
        let mut hitting: Vec<(usize, f64)> = self.cfg.hitting_levels.iter().map(|&k| (k, f64::NAN)).collect();
        let mut clock = 0.0;
        let tau = self.walk(replicate, |m, hold| {
            for h in hitting.iter_mut().filter(|h| h.1.is_nan() && m < h.0) {
                h.1 = clock;
            }
            visited.push(m);
            if let Some(f) = f {
                integral += f.theta_psi(m) * hold;
            }
            clock += hold;
        });
        for h in hitting.iter_mut().filter(|h| h.1.is_nan()) {
            h.1 = tau;
        }
        let jumps = visited.len();
        visited.push(1);
        PathSummary { absorption_time: tau, hitting_times: hitting, functional_integral: integral, visited, jumps }
    }

    /// Absorption times τ_n in replicate order.
    pub fn absorption_times(&self) -> Vec<f64> {
        self.per_replicate(|i| self.walk(i, |_, _| {}))
    }

    /// Mean of τ_n, or of τ_n/ln n0 when `per_log_n`.
    pub fn estimate_absorption(&self, per_log_n: bool) -> EstimateWithCI {
        let scale = if per_log_n { 1.0 / (self.cfg.n0 as f64).ln() } else { 1.0 };
        let xs: Vec<f64> = self.absorption_times().into_iter().map(|t| t * scale).collect();
        EstimateWithCI::from_samples(&xs)
    }

    /// Naive estimate of E[exp(∫θψ)].
    pub fn estimate_laplace_mc(&self) -> Result<EstimateWithCI> {
        let f = self.functional("estimate_laplace_mc")?;
        let xs = self.per_replicate(|i| {
            let mut s = 0.0;
            self.walk(i, |m, hold| s += f.theta_psi(m) * hold);
            s.exp()
        });
        Ok(EstimateWithCI::from_samples(&xs))
    }

    /// Estimates of E[exp(∫θψ)] for θψ ≤ 0: the product of λ_m/(λ_m − θψ(m))
    /// over visited states, alongside the naive estimator on the same paths.
    pub fn rao_blackwell_negative_exponential(&self) -> Result<RaoBlackwell> {
        let f = self.functional("rao_blackwell_negative_exponential")?;
        let pairs = self.per_replicate(|i| {
            let (mut log_rb, mut s, mut bad) = (0.0, 0.0, None);
            self.walk(i, |m, hold| {
                let v = f.theta_psi(m);
                if v > 0.0 {
                    bad = Some(v);
                }
                log_rb -= (-v / self.ctx.total_rate(m)).ln_1p();
                s += v * hold;
            });
            bad.map_or(Ok((log_rb.exp(), s.exp())), Err)
        });
        let mut rb = Vec::with_capacity(pairs.len());
        let mut naive = Vec::with_capacity(pairs.len());
        for p in pairs {
            let (r, n) = p.map_err(|v| Error::Domain {
                op: "rao_blackwell_negative_exponential",
                value: v,
                reason: "integrand must be non-positive",
            })?;
            rb.push(r);
            naive.push(n);
        }
        Ok(RaoBlackwell { rao_blackwell: EstimateWithCI::from_samples(&rb), naive: EstimateWithCI::from_samples(&naive) })
    }

    /// Fraction of paths that visit state `k`.
    pub fn hitting_probability_mc(&self, k: usize) -> Result<EstimateWithCI> {
        if k < 2 || k >= self.cfg.n0 {
            return Err(Error::Index(format!("hitting level {k} outside 2..{}", self.cfg.n0)));
        }
        let xs = self.per_replicate(|i| {
            let mut hit = false;
            self.walk(i, |m, _| hit |= m == k);
            if hit {
                1.0
            } else {
                0.0
            }
        });
        Ok(EstimateWithCI::from_samples(&xs))
    }

    /// Empirical exponents −ln P(τ ≥ x ln n)/ln n on a grid of x.
    pub fn ldp_tail_mc(&self, xs: &[f64]) -> Result<Vec<LdpPoint>> {
        if self.cfg.params.a <= 1.0 {
            return Err(self.cfg.params.regime_error("ldp_tail_mc", "requires a > 1"));
        }
        let ln_n = (self.cfg.n0 as f64).ln();
        let taus = self.absorption_times();
        let r = taus.len() as f64;
        Ok(xs
            .iter()
            .map(|&x| {
                let hits = taus.iter().filter(|&&t| t >= x * ln_n).count();
                let lower_bound_only = hits == 0;
                let p = if lower_bound_only { 1.0 / r } else { hits as f64 / r };
                LdpPoint { x, exponent: -p.ln() / ln_n, hits, lower_bound_only }
            })
            .collect())
    }
}

/// Two-sample sup-distance between empirical CDFs.
pub fn ks_distance(xs: &[f64], ys: &[f64]) -> f64 {
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    d
}

/// Kolmogorov distance between empirical laws of τ_{n1} and τ_{n2}, with the
/// second sample drawn from replicate streams disjoint from the first.
pub fn empirical_kolmogorov(params: BetaParams, n1: usize, n2: usize, replicates: usize, seed: u64, policy: ExecPolicy) -> Result<f64> {
    if n1 >= n2 {
        return Err(Error::Index(format!("empirical_kolmogorov needs n1 < n2, got {n1} and {n2}")));
    }
    let ctx = Arc::new(RateContext::new(params, n2));
    let run = |n0: usize, offset: usize| -> Result<Vec<f64>> {
        let cfg = SimConfig::new(params, n0, replicates, seed).with_policy(policy);
        let sim = Simulator::with_context(cfg, ctx.clone())?;
        Ok(policy.map_indexed(replicates, |i| sim.walk(offset + i, |_, _| {})))
    };
    Ok(ks_distance(&run(n1, 0)?, &run(n2, replicates)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::Constant;

    fn params(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn config_validation() {
        let p = params(1.5, 1.0);
        assert!(Simulator::new(SimConfig::new(p, 1, 10, 0)).is_err());
        assert!(Simulator::new(SimConfig::new(p, 10, 0, 0)).is_err());
        assert!(Simulator::new(SimConfig::new(p, 10, 5, 0).with_hitting_levels(vec![10])).is_err());
        assert!(Simulator::new(SimConfig::new(p, 10, 5, 0).with_hitting_levels(vec![9])).is_ok());
    }

    #[test]
    fn path_structure() {
        let cfg = SimConfig::new(params(0.7, 1.2), 300, 1, 3).with_hitting_levels(vec![2, 50, 299]);
        let sim = Simulator::new(cfg).unwrap();
        for i in 0..50 {
            let p = sim.simulate_path(i);
            assert_eq!(p.visited[0], 300);
            assert_eq!(*p.visited.last().unwrap(), 1);
            assert!(p.visited.windows(2).all(|w| w[0] > w[1]));
            assert_eq!(p.jumps, p.visited.len() - 1);
            assert!(p.jumps <= 299);
            assert_eq!(p.hitting_times[0], (2, p.absorption_time));
            assert!(p.hitting_times.iter().all(|&(_, t)| t <= p.absorption_time && t > 0.0));
            assert_eq!(p, sim.simulate_path(i));
        }
    }

    #[test]
    fn two_blocks_wait_for_one_exponential() {
        let p = params(1.5, 1.0);
        let target = 1.0 / RateContext::new(p, 2).total_rate(2);
        // Over 20 seeds the z-scores should look standard normal.
        let zs: Vec<f64> = (0..20)
            .map(|seed| {
                let est = Simulator::new(SimConfig::new(p, 2, 10_000, seed)).unwrap().estimate_absorption(false);
                (est.mean - target) / est.std_error
            })
            .collect();
        assert!(zs.iter().filter(|z| z.abs() > 3.0).count() <= 1, "{zs:?}");
        assert!((zs.iter().sum::<f64>() / 20.0).abs() < 3.0 / 20f64.sqrt(), "{zs:?}");
        let f: Arc<dyn Functional> = Arc::new(Constant(-0.5));
        let sim = Simulator::new(SimConfig::new(p, 2, 10, 7).with_functional(f)).unwrap();
        let rb = sim.rao_blackwell_negative_exponential().unwrap().rao_blackwell;
        let l2 = sim.rates().total_rate(2);
        assert!((rb.mean - l2 / (l2 + 0.5)).abs() < 1e-15);
        assert_eq!(rb.variance, 0.0);
    }

    #[test]
    fn bolthausen_sznitman_holding_means() {
        let sim = Simulator::new(SimConfig::new(params(1.0, 1.0), 20, 20_000, 11)).unwrap();
        let mut sums = vec![(0.0, 0.0, 0usize); 21];
        for i in 0..20_000 {
            sim.walk(i, |m, h| {
                let e = &mut sums[m];
                e.0 += h;
                e.1 += h * h;
                e.2 += 1;
            });
        }
        for (m, &(s, s2, c)) in sums.iter().enumerate().skip(2) {
            if c < 100 {
                continue;
            }
            let mean = s / c as f64;
            let se = ((s2 / c as f64 - mean * mean) / c as f64).sqrt();
            assert!((mean - 1.0 / (m as f64 - 1.0)).abs() < 3.5 * se, "state {m}");
        }
    }

    #[test]
    fn zero_functional_is_exact() {
        let f: Arc<dyn Functional> = Arc::new(Constant(0.0));
        let sim = Simulator::new(SimConfig::new(params(1.5, 1.0), 50, 200, 1).with_functional(f)).unwrap();
        let est = sim.estimate_laplace_mc().unwrap();
        assert_eq!((est.mean, est.variance), (1.0, 0.0));
        let rb = sim.rao_blackwell_negative_exponential().unwrap();
        assert_eq!((rb.rao_blackwell.mean, rb.rao_blackwell.variance), (1.0, 0.0));
    }

    #[test]
    fn positive_integrand_rejected_by_rao_blackwell() {
        let f: Arc<dyn Functional> = Arc::new(Constant(0.1));
        let sim = Simulator::new(SimConfig::new(params(1.5, 1.0), 5, 10, 1).with_functional(f)).unwrap();
        assert!(sim.rao_blackwell_negative_exponential().is_err());
        assert!(Simulator::new(SimConfig::new(params(1.5, 1.0), 5, 10, 1)).unwrap().estimate_laplace_mc().is_err());
    }

    #[test]
    fn three_blocks_hit_two_with_three_quarters() {
        let sim = Simulator::new(SimConfig::new(params(1.0, 1.0), 3, 100_000, 5)).unwrap();
        let est = sim.hitting_probability_mc(2).unwrap();
        assert!(est.z_score(0.75) < 3.0);
        assert!(sim.hitting_probability_mc(3).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = params(0.6, 1.4);
        let seq = Simulator::new(SimConfig::new(p, 500, 300, 9).with_policy(ExecPolicy::Sequential)).unwrap();
        let par = Simulator::new(SimConfig::new(p, 500, 300, 9).with_policy(ExecPolicy::Parallel)).unwrap();
        assert_eq!(seq.absorption_times(), par.absorption_times());
    }

    #[test]
    fn cache_budget_does_not_change_paths() {
        let p = params(1.5, 1.0);
        let mut cfg = SimConfig::new(p, 400, 200, 2);
        let cached = Simulator::new(cfg.clone()).unwrap().absorption_times();
        cfg.cache_budget = 0;
        let uncached = Simulator::new(cfg).unwrap().absorption_times();
        let worst = cached.iter().zip(&uncached).map(|(x, y)| ((x - y) / x).abs()).fold(0.0, f64::max);
        let differ = cached.iter().zip(&uncached).filter(|(x, y)| x != y).count();
        // The two samplers agree except where u falls within rounding of a CDF step.
        assert!(differ <= 2, "{differ} paths differ, worst {worst}");
    }

    #[test]
    fn ks_distance_examples() {
        let xs = [1.0, 2.0, 3.0];
        assert_eq!(ks_distance(&xs, &xs), 0.0);
        assert_eq!(ks_distance(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_distance(&[1.0, 3.0], &[2.0, 4.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ldp_exponents_are_monotone() {
        let p = params(1.5, 1.0);
        assert!(Simulator::new(SimConfig::new(params(0.5, 1.0), 10, 10, 0)).unwrap().ldp_tail_mc(&[1.0]).is_err());
        let sim = Simulator::new(SimConfig::new(p, 200, 5000, 4)).unwrap();
        let pts = sim.ldp_tail_mc(&[0.5, 1.0, 2.0, 100.0]).unwrap();
        assert!(pts.windows(2).all(|w| w[0].exponent <= w[1].exponent));
        assert!(pts[3].lower_bound_only);
    }
}
