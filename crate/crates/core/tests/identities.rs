//! The special sequences against their defining sums, evaluated term by term
//! from merger rates and binomials.

use std::sync::Arc;

use betacoal::laplace::{Functional, SpecialPsi, SpecialPsiHitting};
use betacoal::specfun::ln_gamma;
use betacoal::{BetaParams, RateContext};

fn ln_binom(n: usize, k: usize) -> f64 {
    let lg = |x: usize| ln_gamma(x as f64 + 1.0).unwrap();
    lg(n) - lg(k) - lg(n - k)
}

/// λ_n − Σ_{j=lo}^{n−1} binom(n, j−1) λ_{n,n−j+1} Γ(b+n−1)Γ(b+ℓ+j−1)/(Γ(b+ℓ+n−1)Γ(b+j−1)).
///
/// The sum cancels against λ_n, so comparisons carry an absolute floor of
/// order ε λ_n.
fn defining_sum(ctx: &RateContext, ell: f64, lo: usize, n: usize) -> f64 {
    let b = ctx.params().b;
    let lg = |x: f64| ln_gamma(x).unwrap();
    let nf = n as f64;
    let mut sum = 0.0;
    for j in lo..n {
        let jf = j as f64;
        let rate = ln_binom(n, j - 1) + ctx.merge_rate_log(n, n - j + 1).unwrap();
        let g = lg(b + nf - 1.0) + lg(b + ell + jf - 1.0) - lg(b + ell + nf - 1.0) - lg(b + jf - 1.0);
        sum += (rate + g).exp();
    }
    ctx.total_rate(n) - sum
}

const GRID: [(f64, f64); 6] = [(0.5, 0.5), (0.5, 1.5), (1.0, 1.0), (1.5, 1.0), (2.0, 0.5), (2.5, 1.5)];

#[test]
fn special_psi_matches_defining_sum() {
    for (a, b) in GRID {
        let ctx = Arc::new(RateContext::new(BetaParams::new(a, b).unwrap(), 200));
        for ell in [-b / 2.0, 0.7, 2.3] {
            let f = SpecialPsi::new(ctx.clone(), ell).unwrap();
            for n in 2..=200 {
                let direct = defining_sum(&ctx, ell, 1, n);
                let got = f.theta_psi(n);
                assert!((got - direct).abs() <= 1e-8 * direct.abs() + 1e-13 * ctx.total_rate(n), "a={a} b={b} ell={ell} n={n}: {got} vs {direct}");
            }
        }
    }
}

#[test]
fn special_psi_hitting_matches_defining_sum() {
    for (a, b) in GRID {
        let ctx = Arc::new(RateContext::new(BetaParams::new(a, b).unwrap(), 120));
        for ell in [-b / 2.0, 2.3] {
            for k in [2, 3, 5] {
                let f = SpecialPsiHitting::new(ctx.clone(), ell, k).unwrap();
                for n in k + 1..=120 {
                    let direct = defining_sum(&ctx, ell, k, n);
                    let got = f.theta_psi(n);
                    assert!((got - direct).abs() <= 1e-8 * direct.abs() + 1e-13 * ctx.total_rate(n), "a={a} b={b} ell={ell} k={k} n={n}: {got} vs {direct}");
                }
            }
        }
    }
}

#[test]
fn sign_follows_ell() {
    let ctx = Arc::new(RateContext::new(BetaParams::new(1.5, 1.0).unwrap(), 50));
    let pos = SpecialPsi::new(ctx.clone(), 0.5).unwrap();
    let neg = SpecialPsi::new(ctx, -0.5).unwrap();
    assert!((2..=50).all(|n| pos.theta_psi(n) > 0.0 && neg.theta_psi(n) < 0.0));
}
