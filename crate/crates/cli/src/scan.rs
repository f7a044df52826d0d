//! `scan` subcommand: one tidy CSV per run plus its manifest.

use std::sync::Arc;

use betacoal::export::{Cell, Table};
use betacoal::laplace::{
    kolmogorov_bounds, laplace_series, mean_absorption_times, record_probabilities, scaling_exponent, Constant, Functional,
    SpecialPsi,
};
use betacoal::simulator::{SimConfig, Simulator};
use betacoal::verify::DEFAULT_SEED;
use betacoal::{BetaParams, RateContext, RateFunctionContext};
use clap::ValueEnum;
use serde_json::json;

use crate::grid::{self, IntGrid, RealGrid};
use crate::{CliError, Context, Quantity, RunManifest, ScanArgs};

fn real(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("not a number: {s}"))
}

fn parsed<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

/// Flag, then config file, then default.
struct Resolver<'a> {
    ctx: &'a Context,
    args: &'a ScanArgs,
}

impl Resolver<'_> {
    fn pick<T>(&self, flag: Option<T>, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.ctx.config.get(key, parse),
        }
    }

    fn required<T>(&self, flag: Option<T>, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, CliError> {
        self.pick(flag, key, parse)?.ok_or_else(|| CliError::Usage(format!("--{key} is required for this scan")))
    }

    fn params(&self) -> Result<BetaParams, CliError> {
        let a = self.required(self.args.a, "a", real)?;
        let b = self.required(self.args.b, "b", real)?;
        Ok(BetaParams::new(a, b)?)
    }

    fn n_grid(&self, default: &str) -> Result<Vec<usize>, CliError> {
        let g = match self.pick(self.args.n_grid.clone(), "n-grid", parsed::<IntGrid>)? {
            Some(g) => g,
            None => self.pick(None, "n", parsed::<IntGrid>)?.unwrap_or(default.parse().expect("valid default grid")),
        };
        if g.0.contains(&0) {
            return Err(CliError::Usage("block counts must be >= 1".into()));
        }
        Ok(g.0)
    }

    fn x_grid(&self) -> Result<Option<Vec<f64>>, CliError> {
        Ok(self.pick(self.args.x.clone(), "x", parsed::<RealGrid>)?.map(|g| g.0))
    }

    fn seed(&self) -> Result<u64, CliError> {
        Ok(self.pick(self.args.seed, "seed", |s| s.parse::<u64>().map_err(|e| e.to_string()))?.unwrap_or(DEFAULT_SEED))
    }

    fn replicates(&self) -> Result<Option<usize>, CliError> {
        let r = self.pick(self.args.replicates, "replicates", grid::count)?;
        if r == Some(0) {
            return Err(CliError::Usage("--replicates must be positive".into()));
        }
        Ok(r)
    }
}

fn name(q: Quantity) -> String {
    q.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

pub fn run(ctx: &Context, args: &ScanArgs) -> Result<(), CliError> {
    let r = Resolver { ctx, args };
    let p = r.params()?;
    let (table, mut parameters, seed, suffix) = match args.quantity {
        Quantity::Ratefn => ratefn(&r, p)?,
        Quantity::LaplaceExponent => laplace_exponent(&r, p)?,
        Quantity::Record => record(&r, p)?,
        Quantity::Kolmogorov => kolmogorov(&r, p)?,
        Quantity::Lln => lln(&r, p)?,
        Quantity::Ldp => ldp(&r, p)?,
    };
    let q = name(args.quantity);
    parameters["a"] = json!(p.a);
    parameters["b"] = json!(p.b);
    let stem = format!("scan-{q}-a{}-b{}{suffix}", p.a, p.b);
    let mut manifest = RunManifest::new(format!("scan {q}"), parameters, seed);
    manifest.outputs.push(table.write(&ctx.out_dir.join(format!("{stem}.csv")))?);
    manifest.write(&ctx.out_dir.join(format!("{stem}.manifest.json")))?;
    println!("wrote {} rows to {}", table.rows().len(), ctx.out_dir.join(format!("{stem}.csv")).display());
    Ok(())
}

type ScanOutput = (Table, serde_json::Value, Option<u64>, String);

fn ratefn(r: &Resolver, p: BetaParams) -> Result<ScanOutput, CliError> {
    let rf = RateFunctionContext::new(p)?;
    let k = r.pick(r.args.k, "k", |s| s.parse::<usize>().map_err(|e| e.to_string()))?.unwrap_or(2);
    let xk = rf.x_threshold(k)?;
    let xs = r.x_grid()?.unwrap_or_else(|| "0..3/0.05".parse::<RealGrid>().expect("valid default grid").0);
    let rows = r.ctx.policy.map_slice(&xs, |&x| Ok::<_, betacoal::Error>((x, rf.big_i(x)?, rf.big_i_capped(k, x)?)));
    let mut t = Table::new(["x", "I", "I_k"]);
    for row in rows {
        let (x, i, ik) = row?;
        t.push(vec![x.into(), i.into(), ik.into()])?;
    }
    let params = json!({ "x": xs, "k": k, "x_k": xk, "lambda_k": rf.rates().total_rate(k), "lln_limit": rf.lln_limit() });
    Ok((t, params, None, format!("-k{k}")))
}

fn laplace_exponent(r: &Resolver, p: BetaParams) -> Result<ScanOutput, CliError> {
    let theta = r.pick(r.args.theta, "theta", real)?;
    let ell = r.pick(r.args.ell, "ell", real)?;
    let ns = r.n_grid("geom:16..4096:9")?;
    let n_max = 2 * ns.iter().copied().max().unwrap_or(1);
    let ctx = Arc::new(RateContext::new(p, n_max));
    let (f, target, suffix): (Box<dyn Functional>, Option<f64>, String) = match (theta, ell) {
        (Some(t), None) => {
            let target = if p.a > 1.0 { Some(RateFunctionContext::new(p)?.zeta(t)?) } else { None };
            (Box::new(Constant(t)), target, format!("-theta{t}"))
        }
        (None, Some(l)) => (Box::new(SpecialPsi::new(ctx.clone(), l)?), Some(l), format!("-ell{l}")),
        _ => return Err(CliError::Usage("laplace-exponent needs exactly one of --theta or --ell".into())),
    };
    let s = laplace_series(&ctx, f.as_ref(), n_max)?;
    let mut t = Table::new(["n", "log_E", "E", "dyadic_exponent"]);
    for &n in &ns {
        let log_e = s.log_e(n)?;
        t.push(vec![n.into(), log_e.into(), log_e.exp().into(), scaling_exponent(&s, n)?.into()])?;
    }
    let params = json!({ "n_grid": ns, "theta": theta, "ell": ell, "functional": f.tag(), "limit_exponent": target });
    Ok((t, params, None, suffix))
}

fn record(r: &Resolver, p: BetaParams) -> Result<ScanOutput, CliError> {
    let ns = r.n_grid("1..500")?;
    let s = record_probabilities(p, ns.iter().copied().max().unwrap_or(1))?;
    let mut t = Table::new(["n", "record_probability"]);
    for &n in &ns {
        t.push(vec![n.into(), s.e(n)?.into()])?;
    }
    Ok((t, json!({ "n_grid": ns }), None, String::new()))
}

fn kolmogorov(r: &Resolver, p: BetaParams) -> Result<ScanOutput, CliError> {
    let ns = r.n_grid("geom:10..1000:7")?;
    let largest = ns.iter().copied().max().unwrap_or(1);
    let trunc = r.pick(r.args.trunc, "trunc", grid::count)?.unwrap_or(20 * largest);
    let bounds = kolmogorov_bounds(p, &ns, trunc)?;
    let mut t = Table::new(["n", "partial", "tail", "bound"]);
    for kb in &bounds {
        t.push(vec![kb.n.into(), kb.partial.into(), kb.tail.into(), kb.total().into()])?;
    }
    let c_fit = bounds.first().map(|kb| kb.c_fit);
    Ok((t, json!({ "n_grid": ns, "trunc": trunc, "tail_constant": c_fit }), None, format!("-trunc{trunc}")))
}

fn lln(r: &Resolver, p: BetaParams) -> Result<ScanOutput, CliError> {
    let rf = RateFunctionContext::new(p)?;
    let ns = r.n_grid("geom:10..2000:7")?;
    if ns.contains(&1) {
        return Err(CliError::Usage("lln needs n >= 2".into()));
    }
    let largest = ns.iter().copied().max().unwrap_or(2);
    let rates = Arc::new(RateContext::new(p, largest));
    let means = mean_absorption_times(&rates, largest);
    let replicates = r.replicates()?;
    let seed = r.seed()?;
    let limit = rf.lln_limit();
    let mut columns = vec!["n", "lln_limit", "mean_tau", "mean_tau_over_ln_n"];
    if replicates.is_some() {
        columns.extend(["mc_mean", "mc_std_error"]);
    }
    let mut t = Table::new(columns);
    for &n in &ns {
        let ln_n = (n as f64).ln();
        let mut row: Vec<Cell> = vec![n.into(), limit.into(), means[n - 1].into(), (means[n - 1] / ln_n).into()];
        if let Some(reps) = replicates {
            let cfg = SimConfig::new(p, n, reps, seed).with_policy(r.ctx.policy);
            let est = Simulator::with_context(cfg, rates.clone())?.estimate_absorption(true);
            row.extend([est.mean.into(), est.std_error.into()]);
        }
        t.push(row)?;
    }
    let params = json!({ "n_grid": ns, "replicates": replicates });
    Ok((t, params, replicates.map(|_| seed), String::new()))
}

fn ldp(r: &Resolver, p: BetaParams) -> Result<ScanOutput, CliError> {
    let rf = RateFunctionContext::new(p)?;
    let ns = r.n_grid("1000")?;
    let [n] = ns[..] else {
        return Err(CliError::Usage("ldp takes a single --n".into()));
    };
    if n < 2 {
        return Err(CliError::Usage("ldp needs n >= 2".into()));
    }
    let x0 = rf.lln_limit();
    let xs = r.x_grid()?.unwrap_or_else(|| [1.1, 1.25, 1.5].iter().map(|s| s * x0).collect());
    let reps = r.replicates()?.unwrap_or(10_000);
    let seed = r.seed()?;
    let cfg = SimConfig::new(p, n, reps, seed).with_policy(r.ctx.policy);
    let points = Simulator::new(cfg)?.ldp_tail_mc(&xs)?;
    let mut t = Table::new(["x", "exponent", "hits", "lower_bound_only", "I", "I_2"]);
    for q in &points {
        t.push(vec![
            q.x.into(),
            q.exponent.into(),
            q.hits.into(),
            q.lower_bound_only.into(),
            rf.big_i(q.x)?.into(),
            rf.big_i_capped(2, q.x)?.into(),
        ])?;
    }
    let params = json!({ "n": n, "x": xs, "replicates": reps, "lln_limit": x0 });
    Ok((t, params, Some(seed), format!("-n{n}")))
}
