//! Large-deviation rate function of τ_n / ln n for a > 1.
//!
//! `L(y)` is the log-growth rate of `E[e^{y ...}]`-type transforms, `ζ = L^{−1}`
//! on `(−∞, D)`, and `I(x) = sup_θ (θx − ζ(θ))` is its Legendre transform.
//! Capping the slope of `I` at `λ_k` beyond `x_k = ζ'(λ_k)` gives `I^k`.
//!
//! For a ≠ 2, `L(y) = P (f(y) − f(0))` with `P = Γ(a)/((2−a)(a−1))` and
//! `f(y) = Γ(b+y)/Γ(a+b+y−2)`. Writing `z = a+b+y−2`, the identity
//! `1/Γ(z) = z/Γ(z+1)` gives `f = z g` with `g = Γ(b+y)/Γ(z+1)` and
//! `f' = g (1 + z (ψ(b+y) − ψ(z+1)))`, both finite for every `z > −1`, so the
//! pole of `1/Γ` at `z = 0` never has to be special-cased.

use std::sync::Arc;

use crate::rates::{BetaParams, RateContext};
use crate::root::solve_increasing;
use crate::specfun::{digamma_difference_at, gamma_signed, lgamma, ln_gamma_ratio_at, psi1};
use crate::{Error, Result};

/// `x` below this is treated as `I(0) = b`.
const SMALL_X: f64 = 1e-12;

/// L, ζ, I and I^k for one parameter pair with a > 1.
#[derive(Debug, Clone)]
pub struct RateFunctionContext {
    params: BetaParams,
    rates: Arc<RateContext>,
    // Γ(a)/((2−a)(a−1)); unused when a = 2.
    pref: f64,
    // Γ(b)/Γ(a+b−2), zero at the pole.
    f0: f64,
    d: f64,
}

impl RateFunctionContext {
    pub fn new(params: BetaParams) -> Result<Self> {
        Self::with_rates(Arc::new(RateContext::new(params, 64)))
    }

    /// Shares an existing rate table (used for λ_k).
    pub fn with_rates(rates: Arc<RateContext>) -> Result<Self> {
        let params = rates.params();
        let BetaParams { a, b } = params;
        if a <= 1.0 {
            return Err(params.regime_error("RateFunctionContext", "the rate function is defined for a > 1"));
        }
        let pref = lgamma(a).exp() / ((2.0 - a) * (a - 1.0));
        let f0 = lgamma(b).exp() * gamma_signed(a + b - 2.0).recip().to_f64();
        let d = rates.d_limit();
        Ok(Self { params, rates, pref, f0, d })
    }

    pub fn params(&self) -> BetaParams {
        self.params
    }

    pub fn rates(&self) -> &RateContext {
        &self.rates
    }

    /// D = sup L; +∞ for a ∈ (1, 2].
    pub fn d(&self) -> f64 {
        self.d
    }

    fn check_y(&self, op: &'static str, y: f64) -> Result<()> {
        if y > -self.params.b && y.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain { op, value: y, reason: "requires y > -b" })
        }
    }

    /// (g, z) with f = g z.
    fn g_and_z(&self, y: f64) -> (f64, f64) {
        let BetaParams { a, b } = self.params;
        let g = ln_gamma_ratio_at(y, b, a + b - 1.0).exp();
        (g, y + (a + b - 2.0))
    }

    pub fn l(&self, y: f64) -> Result<f64> {
        self.check_y("L", y)?;
        Ok(self.l_unchecked(y))
    }

    fn l_unchecked(&self, y: f64) -> f64 {
        let BetaParams { a, b } = self.params;
        if y == 0.0 {
            return 0.0;
        }
        if a == 2.0 {
            return digamma_difference_at(b, y, 0.0);
        }
        let (g, z) = self.g_and_z(y);
        self.pref * (g * z - self.f0)
    }

    pub fn l_prime(&self, y: f64) -> Result<f64> {
        self.check_y("L_prime", y)?;
        Ok(self.l_prime_unchecked(y))
    }

    fn l_prime_unchecked(&self, y: f64) -> f64 {
        let BetaParams { a, b } = self.params;
        if a == 2.0 {
            return psi1(b + y);
        }
        let (g, z) = self.g_and_z(y);
        // ψ(b+y) − ψ(z+1), with z+1 = y + (a+b−1)
        let dpsi = digamma_difference_at(y, b, a + b - 1.0);
        self.pref * g * (1.0 + z * dpsi)
    }

    /// ζ(x) = L^{−1}(x); +∞ when x ≥ D.
    pub fn zeta(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain { op: "zeta", value: x, reason: "NaN argument" });
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x >= self.d {
            return Ok(f64::INFINITY);
        }
        let b = self.params.b;
        let (lo, hi) = if x > 0.0 {
            let mut hi = 1.0;
            while self.l_unchecked(hi) < x {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::Root(format!("zeta({x}): no upper bracket below D = {}", self.d)));
                }
            }
            (0.0, hi)
        } else {
            let mut eps = b / 2.0;
            while self.l_unchecked(-b + eps) > x {
                eps *= 1e-2;
                if -b + eps <= -b {
                    return Ok(-b);
                }
            }
            (-b + eps, 0.0)
        };
        let tol = 1e-12 * x.abs().max(1.0);
        solve_increasing(|y| (self.l_unchecked(y), Some(self.l_prime_unchecked(y))), x, lo, hi, tol)
    }

    /// ζ'(θ) = 1/L'(ζ(θ)) for θ < D.
    pub fn zeta_prime(&self, theta: f64) -> Result<f64> {
        if !(theta < self.d) {
            return Err(Error::Domain { op: "zeta_prime", value: theta, reason: "requires theta < D" });
        }
        if theta == 0.0 {
            return Ok(self.lln_limit());
        }
        let y = self.zeta(theta)?;
        Ok(self.l_prime_unchecked(y).recip())
    }

    /// ζ'(0) = 1/L'(0), the almost-sure limit of τ_n / ln n.
    pub fn lln_limit(&self) -> f64 {
        self.l_prime_unchecked(0.0).recip()
    }

    /// Legendre transform I(x) = sup_θ (θx − ζ(θ)).
    pub fn big_i(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain { op: "big_I", value: x, reason: "NaN argument" });
        }
        if x < 0.0 {
            return Ok(f64::INFINITY);
        }
        let b = self.params.b;
        if x <= SMALL_X {
            return Ok(b);
        }
        let y = self.legendre_point(x)?;
        Ok(x * self.l_unchecked(y) - y)
    }

    /// The y* with L'(y*) = 1/x, where `x L(y) − y` is maximal.
    fn legendre_point(&self, x: f64) -> Result<f64> {
        let b = self.params.b;
        let target = x.recip();
        let mut hi = 1.0;
        while self.l_prime_unchecked(hi) > target {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Root(format!("big_I({x}): no upper bracket")));
            }
        }
        let mut eps = b / 2.0;
        while self.l_prime_unchecked(-b + eps) < target {
            eps *= 1e-2;
            if -b + eps <= -b {
                return Ok(-b);
            }
        }
        let lo = -b + eps;
        if lo >= hi {
            return Ok(lo);
        }
        // −L' is increasing.
        solve_increasing(|y| (-self.l_prime_unchecked(y), None), -target, lo, hi, 1e-14 * target)
    }

    /// x_k = ζ'(λ_k).
    pub fn x_threshold(&self, k: usize) -> Result<f64> {
        if k < 2 {
            return Err(Error::Index(format!("x_threshold needs k >= 2, got {k}")));
        }
        self.zeta_prime(self.rates.total_rate(k))
    }

    /// I^k(x): I up to x_k, then affine with slope λ_k.
    pub fn big_i_capped(&self, k: usize, x: f64) -> Result<f64> {
        let xk = self.x_threshold(k)?;
        if x <= xk {
            return self.big_i(x);
        }
        Ok(self.big_i(xk)? + self.rates.total_rate(k) * (x - xk))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::psi;
    use std::f64::consts::PI;

    fn rf(a: f64, b: f64) -> RateFunctionContext {
        RateFunctionContext::new(BetaParams::new(a, b).unwrap()).unwrap()
    }

    const GRID: [(f64, f64); 9] =
        [(1.5, 1.0), (1.3, 0.5), (1.7, 2.0), (2.0, 1.0), (2.0, 0.5), (2.4, 1.0), (3.0, 1.0), (1.5, 0.5), (3.5, 2.5)];

    #[test]
    fn rejects_small_a() {
        assert!(RateFunctionContext::new(BetaParams::new(1.0, 1.0).unwrap()).is_err());
        assert!(RateFunctionContext::new(BetaParams::new(0.5, 1.0).unwrap()).is_err());
    }

    #[test]
    fn l_examples() {
        for &(a, b) in &GRID {
            assert_eq!(rf(a, b).l(0.0).unwrap(), 0.0);
            assert!(rf(a, b).l(-b).is_err());
        }
        assert!((rf(2.0, 1.0).l(1.0).unwrap() - 1.0).abs() < 1e-15);
        // a+b−2+y = 0: the quotient term vanishes.
        let (a, b) = (1.5, 1.0);
        let c = rf(a, b);
        let want = -lgamma(a).exp() / ((2.0 - a) * (a - 1.0)) * lgamma(b).exp() / lgamma(a + b - 2.0).exp();
        assert!(((c.l(2.0 - a - b).unwrap() - want) / want).abs() < 1e-14);
        // Along a + b = 2 the constant term is exactly zero: L(y) = P f(y).
        let c = rf(1.25, 0.75);
        assert_eq!(c.f0, 0.0);
    }

    #[test]
    fn l_against_direct_formula() {
        for &(a, b) in &GRID {
            if a == 2.0 {
                continue;
            }
            let c = rf(a, b);
            for y in [-0.9 * b, -0.3, 0.4, 3.0, 25.0] {
                if y <= -b {
                    continue;
                }
                let f = |t: f64| {
                    (lgamma(b + t)).exp() * gamma_signed(a + b + t - 2.0).recip().to_f64()
                };
                let direct = lgamma(a).exp() / ((2.0 - a) * (a - 1.0)) * (f(y) - f(0.0));
                let got = c.l(y).unwrap();
                assert!((got - direct).abs() < 1e-12 * direct.abs().max(1.0), "({a},{b}) y={y}: {got} vs {direct}");
            }
        }
        let c = rf(2.0, 1.5);
        assert!((c.l(3.25).unwrap() - (psi(4.75) - psi(1.5))).abs() < 1e-14);
    }

    #[test]
    fn l_prime_matches_finite_difference() {
        for &(a, b) in &GRID {
            let c = rf(a, b);
            for y in [-0.5 * b, 0.0, 0.7, 4.0, 40.0, 2.0 - a - b] {
                if y <= -b + 1e-3 {
                    continue;
                }
                let h = 1e-5 * (1.0 + y.abs());
                let fd = (c.l(y + h).unwrap() - c.l(y - h).unwrap()) / (2.0 * h);
                let lp = c.l_prime(y).unwrap();
                assert!(lp > 0.0);
                assert!((fd - lp).abs() < 1e-6 * lp.max(1.0), "({a},{b}) y={y}: {fd} vs {lp}");
            }
        }
        assert!((rf(2.0, 1.0).l_prime(0.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn l_prime_blows_up_at_left_end() {
        let (a, b) = (1.5, 1.0);
        let c = rf(a, b);
        let v: Vec<f64> = (1..12).map(|j| c.l_prime(-b + 10f64.powi(-j)).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(*v.last().unwrap() > 1e5);
    }

    #[test]
    fn zeta_examples() {
        let c = rf(3.0, 1.0);
        assert!((c.d() - 1.0).abs() < 1e-14);
        assert_eq!(c.zeta(1.5).unwrap(), f64::INFINITY);
        assert_eq!(c.zeta(0.0).unwrap(), 0.0);
        assert!(c.zeta_prime(1.0).is_err());
        let c = rf(2.0, 1.0);
        assert!((c.zeta_prime(0.0).unwrap() - 6.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn zeta_roundtrip() {
        for &(a, b) in &GRID {
            let c = rf(a, b);
            for i in 0..=40 {
                let y = -b + 0.01 + (50.0 + b - 0.01) * (i as f64 / 40.0).powi(2);
                let x = c.l(y).unwrap();
                let back = c.zeta(x).unwrap();
                assert!((back - y).abs() <= 1e-9 * y.abs().max(1.0), "({a},{b}) y={y}: {back}");
            }
        }
    }

    #[test]
    fn zeta_prime_matches_finite_difference() {
        for &(a, b) in &GRID {
            let c = rf(a, b);
            for theta in [-5.0, -0.5, 0.0, 0.3] {
                if theta >= c.d() {
                    continue;
                }
                let h = 1e-5;
                let fd = (c.zeta(theta + h).unwrap() - c.zeta(theta - h).unwrap()) / (2.0 * h);
                let zp = c.zeta_prime(theta).unwrap();
                assert!((fd - zp).abs() < 1e-6 * zp.max(1.0), "({a},{b}) theta={theta}: {fd} vs {zp}");
            }
        }
    }

    #[test]
    fn big_i_boundary_values() {
        for &(a, b) in &GRID {
            let c = rf(a, b);
            assert_eq!(c.big_i(-0.1).unwrap(), f64::INFINITY);
            assert_eq!(c.big_i(0.0).unwrap(), b);
            // I(x) − b ≈ −2√x near the origin.
            for x in [1e-4, 1e-8] {
                let gap = c.big_i(x).unwrap() - b;
                assert!(gap < 0.0 && gap > -2.5 * x.sqrt(), "({a},{b}) x={x}: {gap}");
            }
            let x0 = c.lln_limit();
            assert!(c.big_i(x0).unwrap().abs() < 1e-9, "({a},{b}): I(x0) = {}", c.big_i(x0).unwrap());
            assert!(c.big_i(0.5 * x0).unwrap() > 0.0 && c.big_i(2.0 * x0).unwrap() > 0.0);
        }
    }

    #[test]
    fn capped_rate_function() {
        let c = rf(1.5, 1.0);
        let xs: Vec<f64> = (2..=10).map(|k| c.x_threshold(k).unwrap()).collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        assert!(xs[0] > c.lln_limit());
        assert_eq!(c.big_i_capped(2, 0.0).unwrap(), 1.0);
        let x2 = xs[0];
        let ik = c.big_i(x2).unwrap();
        assert!((c.big_i_capped(2, x2).unwrap() - ik).abs() < 1e-15);
        let l2 = c.rates().total_rate(2);
        assert!((c.big_i_capped(2, x2 + 1.0).unwrap() - (ik + l2)).abs() < 1e-12);
    }
}
