use std::path::Path;

use capdist::channel::PolicyParams;
use capdist::config::{evaluate_region, RegionConfig, RegionReport};
use capdist::montecarlo::{simulate_policy, SimConfig, SimResult};
use capdist::optimize::{maximize_sum_rate, outer_tradeoff_curve, tradeoff_curve, GridSpec, SumRateResult, TradeoffCurve};
use capdist::regions::{outer_sum_rate_example, resource_sharing_rate, resource_sharing_tradeoff};
use serde::Serialize;

use crate::{format_num, CliError, CliResult};

fn check_ps(ps: f64) -> CliResult<f64> {
    if (0.0..=1.0).contains(&ps) {
        Ok(ps)
    } else {
        Err(CliError::BadArg(format!("ps must lie in [0, 1], got {ps}")))
    }
}

pub fn policy_grid(points: usize) -> CliResult<GridSpec> {
    Ok(GridSpec::unit_cube(3, points)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct OuterPoint {
    pub value: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SumRateReport {
    pub ps: f64,
    pub grid: usize,
    pub proposed: SumRateResult,
    pub resource_sharing: f64,
    pub outer: OuterPoint,
}

impl SumRateReport {
    pub fn render(&self) -> String {
        let a = &self.proposed.argmax;
        format!(
            "ps                {}\n\
             proposed          {} bits  p={:.6} q={:.6} r={:.6}\n\
             resource_sharing  {} bits\n\
             outer             {} bits  beta={:.6} gamma={:.6}\n",
            format_num(self.ps),
            format_num(self.proposed.value),
            a.p,
            a.q,
            a.r,
            format_num(self.resource_sharing),
            format_num(self.outer.value),
            self.outer.beta,
            self.outer.gamma,
        )
    }
}

pub fn sumrate(ps: f64, grid: usize) -> CliResult<SumRateReport> {
    let ps = check_ps(ps)?;
    let spec = policy_grid(grid)?;
    let proposed = maximize_sum_rate(ps, &spec)?;
    let (value, (beta, gamma)) = outer_sum_rate_example(ps, grid)?;
    Ok(SumRateReport {
        ps,
        grid,
        proposed,
        resource_sharing: resource_sharing_rate(ps),
        outer: OuterPoint { value, beta, gamma },
    })
}

/// `start, start + step, …` up to `end` inclusive (within 1e-9 steps).
pub fn ps_values(start: f64, end: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(0.0 <= start && start <= end && end <= 1.0) {
        return Err(CliError::BadArg(format!(
            "need 0 <= start <= end <= 1, got start={start} end={end}"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::BadArg(format!("step must be positive, got {step}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| (start + i as f64 * step).min(end)).collect())
}

pub fn sweep_csv(start: f64, end: f64, step: f64, grid: usize) -> CliResult<String> {
    let spec = policy_grid(grid)?;
    let mut out = String::from("ps,proposed,resource_sharing,outer\n");
    for ps in ps_values(start, end, step)? {
        let proposed = maximize_sum_rate(ps, &spec)?.value;
        let (outer, _) = outer_sum_rate_example(ps, grid)?;
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_num(ps),
            format_num(proposed),
            format_num(resource_sharing_rate(ps)),
            format_num(outer)
        ));
    }
    Ok(out)
}

/// The three frontiers at one `ps`.
#[derive(Debug, Clone)]
pub struct TradeoffSet {
    pub proposed: TradeoffCurve,
    pub resource_sharing: TradeoffCurve,
    pub outer: TradeoffCurve,
}

impl TradeoffSet {
    /// Frontier points whose D prints identically are collapsed to the one
    /// with the largest R.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("curve,D,R\n");
        for c in [&self.proposed, &self.resource_sharing, &self.outer] {
            let rows: Vec<(String, String)> = c.points().iter().map(|p| (format_num(p.d), format_num(p.r))).collect();
            for (i, (d, r)) in rows.iter().enumerate() {
                if rows.get(i + 1).is_some_and(|next| &next.0 == d) {
                    continue;
                }
                out.push_str(&format!("{},{d},{r}\n", c.meta().family.name()));
            }
        }
        out
    }
}

/// Resource-sharing segment starts at the proposed frontier's smallest D,
/// which is the minimum distortion over the same lattice.
pub fn tradeoff(ps: f64, grid: usize, samples: usize) -> CliResult<TradeoffSet> {
    let ps = check_ps(ps)?;
    if samples < 2 {
        return Err(CliError::BadArg(format!("samples must be at least 2, got {samples}")));
    }
    let spec = policy_grid(grid)?;
    let proposed = tradeoff_curve(ps, &spec)?;
    let d_min = proposed.points().first().map_or(0.0, |p| p.d);
    let resource_sharing = resource_sharing_tradeoff(ps, d_min, samples)?;
    let outer = outer_tradeoff_curve(ps, &spec)?;
    Ok(TradeoffSet {
        proposed,
        resource_sharing,
        outer,
    })
}

pub fn simulate(ps: f64, p: f64, q: f64, r: f64, samples: u64, seed: u64) -> CliResult<SimResult> {
    let ps = check_ps(ps)?;
    if samples == 0 {
        return Err(CliError::BadArg("samples must be positive".into()));
    }
    let policy = PolicyParams::new(p, q, r)?;
    Ok(simulate_policy(&SimConfig {
        ps,
        policy,
        samples,
        seed,
    })?)
}

pub fn region(config: &Path) -> CliResult<RegionReport> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::io(config, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("$ (line {}, column {}): {e}", e.line(), e.column())))?;
    let cfg = RegionConfig::from_json(&value)?;
    Ok(evaluate_region(&cfg)?)
}
