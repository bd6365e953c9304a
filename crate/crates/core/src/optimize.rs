//! Exhaustive grid search, minimum distortion, and Pareto tradeoff curves
//! over the `(p, q, r)` policy family.
//!
//! Every sweep is split into fixed-size blocks of consecutive lattice cells.
//! Blocks are reduced independently (possibly on different rayon workers)
//! and merged in block order, so results do not depend on the thread count.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{policy_table, PolicyParams};
use crate::error::{Error, Result};
use crate::estimation::{idealized_cost_oracle, User};
use crate::regions::{outer_rate_two_point, FValues};

/// Upper bound on lattice cells for one sweep.
pub const DEFAULT_CELL_CAP: u128 = 1 << 27;

/// Values within this distance count as equal; the smaller index wins.
pub const TIE_EPS: f64 = 1e-12;

/// Default points per axis for policy sweeps.
pub const DEFAULT_POINTS: usize = 201;

/// Cells handed to a worker as one unit.
const BLOCK: usize = 4096;

/// Points per axis of the coarse pass in [`refine_maximize`].
pub const COARSE_POINTS: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::Grid(format!("bad axis range [{lo}, {hi}]")));
        }
        if points < 2 {
            return Err(Error::Grid(format!("axis needs at least 2 points, got {points}")));
        }
        Ok(GridAxis { lo, hi, points })
    }

    pub fn unit(points: usize) -> Result<Self> {
        Self::new(0.0, 1.0, points)
    }

    /// Lattice value `i`; the last index maps to `hi` exactly.
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }
}

/// Cartesian product of axes, last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    pub cap: u128,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        Self::with_cap(axes, DEFAULT_CELL_CAP)
    }

    pub fn with_cap(axes: Vec<GridAxis>, cap: u128) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Grid("no axes".into()));
        }
        let spec = GridSpec { axes, cap };
        spec.check_cap()?;
        Ok(spec)
    }

    /// `dims` copies of `[0, 1]` with `points` each.
    pub fn unit_cube(dims: usize, points: usize) -> Result<Self> {
        Self::new(vec![GridAxis::unit(points)?; dims])
    }

    pub fn cells(&self) -> u128 {
        self.axes.iter().map(|a| a.points as u128).product()
    }

    pub fn check_cap(&self) -> Result<()> {
        let cells = self.cells();
        if cells > self.cap {
            return Err(Error::GridCap { cells, cap: self.cap });
        }
        Ok(())
    }
}

/// Best lattice cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMax {
    pub argmax: Vec<f64>,
    pub index: Vec<usize>,
    pub value: f64,
}

/// `a` beats `b`: larger by more than [`TIE_EPS`], or tied with a
/// lexicographically smaller index.
fn beats(a_val: f64, a_idx: &[usize], b_val: f64, b_idx: &[usize]) -> bool {
    if a_val > b_val + TIE_EPS {
        true
    } else if a_val >= b_val - TIE_EPS {
        a_idx < b_idx
    } else {
        false
    }
}

/// Sub-box of a lattice: per-axis inclusive index ranges.
struct Window<'a> {
    axes: &'a [GridAxis],
    ranges: Vec<(usize, usize)>,
}

impl Window<'_> {
    fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|(a, b)| b - a + 1).collect()
    }

    fn len(&self) -> usize {
        self.sizes().iter().product()
    }

    fn index_of(&self, mut flat: usize, sizes: &[usize], out: &mut [usize]) {
        for k in (0..sizes.len()).rev() {
            out[k] = self.ranges[k].0 + flat % sizes[k];
            flat /= sizes[k];
        }
    }

    fn point(&self, idx: &[usize], out: &mut [f64]) {
        for k in 0..idx.len() {
            out[k] = self.axes[k].value(idx[k]);
        }
    }

    fn full(axes: &[GridAxis]) -> Window<'_> {
        Window {
            axes,
            ranges: axes.iter().map(|a| (0, a.points - 1)).collect(),
        }
    }
}

fn maximize_window<F>(f: &F, w: &Window) -> Option<GridMax>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let sizes = w.sizes();
    let n = w.len();
    let dims = sizes.len();
    let blocks: Vec<Option<GridMax>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut idx = vec![0usize; dims];
            let mut x = vec![0.0; dims];
            let mut best: Option<(f64, Vec<usize>)> = None;
            for flat in b * BLOCK..((b + 1) * BLOCK).min(n) {
                w.index_of(flat, &sizes, &mut idx);
                w.point(&idx, &mut x);
                let v = f(&x);
                if v.is_nan() {
                    continue;
                }
                // row-major order is lexicographic, so only strict wins replace
                if best.as_ref().is_none_or(|(bv, _)| v > bv + TIE_EPS) {
                    best = Some((v, idx.clone()));
                }
            }
            best.map(|(value, index)| {
                let mut argmax = vec![0.0; dims];
                w.point(&index, &mut argmax);
                GridMax { argmax, index, value }
            })
        })
        .collect();
    merge(blocks.into_iter().flatten())
}

fn merge(cands: impl Iterator<Item = GridMax>) -> Option<GridMax> {
    let mut best: Option<GridMax> = None;
    for c in cands {
        let replace = match &best {
            None => true,
            Some(b) => beats(c.value, &c.index, b.value, &b.index),
        };
        if replace {
            best = Some(c);
        }
    }
    best
}

/// Exhaustive maximization over every lattice cell. NaN values are skipped;
/// an objective that is NaN everywhere is an error.
pub fn grid_maximize<F>(f: F, spec: &GridSpec) -> Result<GridMax>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.check_cap()?;
    maximize_window(&f, &Window::full(&spec.axes)).ok_or_else(|| Error::Grid("objective is NaN on every cell".into()))
}

/// Coarse-to-fine search on the lattice of `spec`.
///
/// A [`COARSE_POINTS`] lattice over the same box is swept exhaustively; the
/// `seeds` best well-separated coarse cells each get an exhaustive window of
/// `±radius` coarse steps on the fine lattice. Fine windows cover the same
/// physical extent at every resolution, so refining the fine lattice never
/// lowers the reported maximum. Specs with no more than [`COARSE_POINTS`]
/// points per axis are swept exhaustively.
pub fn refine_maximize<F>(f: F, spec: &GridSpec, seeds: usize, radius: usize) -> Result<GridMax>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if spec.axes.iter().all(|a| a.points <= COARSE_POINTS) {
        return grid_maximize(f, spec);
    }
    let coarse_axes: Vec<GridAxis> = spec
        .axes
        .iter()
        .map(|a| GridAxis::new(a.lo, a.hi, a.points.min(COARSE_POINTS)))
        .collect::<Result<_>>()?;
    let coarse_spec = GridSpec::with_cap(coarse_axes.clone(), spec.cap)?;

    // all coarse values, so that several separated peaks can seed windows
    let sizes: Vec<usize> = coarse_axes.iter().map(|a| a.points).collect();
    let n: usize = sizes.iter().product();
    let full = Window::full(&coarse_spec.axes);
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; sizes.len()];
            let mut x = vec![0.0; sizes.len()];
            full.index_of(flat, &sizes, &mut idx);
            full.point(&idx, &mut x);
            f(&x)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).filter(|&i| !values[i].is_nan()).collect();
    if order.is_empty() {
        return Err(Error::Grid("objective is NaN on every cell".into()));
    }
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));

    // first seed follows the exhaustive tie rule: earliest cell within TIE_EPS
    let top = values[order[0]];
    let first = (0..n).find(|&i| values[i] >= top - TIE_EPS).unwrap_or(order[0]);
    order.retain(|&i| i != first);
    order.insert(0, first);

    let mut chosen: Vec<Vec<usize>> = Vec::new();
    let mut idx = vec![0usize; sizes.len()];
    for &flat in &order {
        if chosen.len() == seeds.max(1) {
            break;
        }
        full.index_of(flat, &sizes, &mut idx);
        let far = chosen
            .iter()
            .all(|c| c.iter().zip(&idx).any(|(a, b)| a.abs_diff(*b) > 2 * radius));
        if far {
            chosen.push(idx.clone());
        }
    }

    let mut results = Vec::new();
    for c in &chosen {
        let ranges = spec
            .axes
            .iter()
            .zip(&coarse_axes)
            .zip(c)
            .map(|((fa, ca), &ci)| {
                let ratio = (fa.points - 1) as f64 / (ca.points - 1) as f64;
                let centre = (ci as f64 * ratio).round() as usize;
                let half = (radius as f64 * ratio).ceil() as usize;
                (centre.saturating_sub(half), (centre + half).min(fa.points - 1))
            })
            .collect();
        let w = Window {
            axes: &spec.axes,
            ranges,
        };
        results.extend(maximize_window(&f, &w));
    }
    merge(results.into_iter()).ok_or_else(|| Error::Grid("objective is NaN on every cell".into()))
}

/// Sum rate and achievable symmetric distortion of one policy, both from
/// brute-force marginals of the policy joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyPoint {
    pub f: FValues,
    /// `E[c̲1(X1, V2)]` with the Bayes estimator of `S1` from `(X1, V2, Y)`.
    pub distortion: f64,
}

pub fn evaluate_policy(ps: f64, pol: &PolicyParams) -> PolicyPoint {
    let t = policy_table(ps, pol);
    let f = crate::regions::f_values_from_table(&t);
    // P(x1, v2, y, s1); the estimator keeps the larger posterior per (x1,v2,y)
    let mut m = [0.0f64; 24];
    for (i, &p) in t.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let y = i % 3;
        let rest = i / 3;
        let s1 = (rest >> 1) & 1;
        let x1 = (rest >> 3) & 1;
        let v2 = (rest >> 4) & 1;
        m[((x1 * 2 + v2) * 3 + y) * 2 + s1] += p;
    }
    let distortion = m.chunks(2).map(|c| c[0].min(c[1])).sum::<f64>().max(0.0);
    PolicyPoint { f, distortion }
}

fn policy_of(x: &[f64]) -> PolicyParams {
    PolicyParams {
        p: x[0],
        q: x[1],
        r: x[2],
    }
}

fn check_policy_spec(spec: &GridSpec) -> Result<()> {
    if spec.axes.len() != 3 {
        return Err(Error::Grid(format!("policy grids have 3 axes, got {}", spec.axes.len())));
    }
    for a in &spec.axes {
        if a.lo < 0.0 || a.hi > 1.0 {
            return Err(Error::Grid(format!("policy axis [{}, {}] leaves [0, 1]", a.lo, a.hi)));
        }
    }
    spec.check_cap()
}

fn check_ps(ps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ps) {
        return Err(Error::Domain { what: "ps", value: ps });
    }
    Ok(())
}

/// Best proposed sum rate over a `(p, q, r)` lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumRateResult {
    pub ps: f64,
    pub value: f64,
    pub argmax: PolicyParams,
    pub f: FValues,
    pub distortion: f64,
}

/// Maximizes `min{f1, f2}` over the policy lattice with [`refine_maximize`].
pub fn maximize_sum_rate(ps: f64, spec: &GridSpec) -> Result<SumRateResult> {
    check_ps(ps)?;
    check_policy_spec(spec)?;
    let best = refine_maximize(|x| evaluate_policy(ps, &policy_of(x)).f.objective(), spec, 4, 2)?;
    let argmax = policy_of(&best.argmax);
    let pt = evaluate_policy(ps, &argmax);
    Ok(SumRateResult {
        ps,
        value: best.value,
        argmax,
        f: pt.f,
        distortion: pt.distortion,
    })
}

/// Smallest achievable symmetric distortion over the policy lattice
/// (exhaustive).
pub fn min_distortion(ps: f64, spec: &GridSpec) -> Result<(f64, PolicyParams)> {
    check_ps(ps)?;
    check_policy_spec(spec)?;
    let best = grid_maximize(|x| -evaluate_policy(ps, &policy_of(x)).distortion, spec)?;
    Ok((-best.value, policy_of(&best.argmax)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFamily {
    Proposed,
    ResourceSharing,
    Outer,
}

impl CurveFamily {
    pub fn name(self) -> &'static str {
        match self {
            CurveFamily::Proposed => "proposed",
            CurveFamily::ResourceSharing => "resource_sharing",
            CurveFamily::Outer => "outer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub d: f64,
    pub r: f64,
    /// Parameters that produced the point, in the family's own coordinates.
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveMeta {
    pub ps: f64,
    pub family: CurveFamily,
    pub grid: Option<GridSpec>,
}

/// Pareto frontier in the (distortion, sum rate) plane: D strictly
/// increasing, R strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    points: Vec<CurvePoint>,
    meta: CurveMeta,
}

fn point_order(a: &CurvePoint, b: &CurvePoint) -> Ordering {
    a.d.total_cmp(&b.d)
        .then(b.r.total_cmp(&a.r))
        .then_with(|| {
            a.params
                .iter()
                .zip(&b.params)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Sorts by (D asc, R desc, params asc) and keeps points whose R exceeds
/// every R at smaller or equal D.
fn pareto_filter(mut pts: Vec<CurvePoint>) -> Vec<CurvePoint> {
    pts.retain(|p| p.d.is_finite() && p.r.is_finite());
    pts.sort_by(point_order);
    let mut out: Vec<CurvePoint> = Vec::new();
    for p in pts {
        if out.last().is_none_or(|l| p.r > l.r) {
            out.push(p);
        }
    }
    out
}

impl TradeoffCurve {
    /// Builds the Pareto frontier of an arbitrary point cloud.
    pub fn pareto(points: Vec<CurvePoint>, meta: CurveMeta) -> Self {
        TradeoffCurve {
            points: pareto_filter(points),
            meta,
        }
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn meta(&self) -> &CurveMeta {
        &self.meta
    }

    /// Largest R among points with distortion at most `d`.
    pub fn rate_at(&self, d: f64) -> Option<f64> {
        let k = self.points.partition_point(|p| p.d <= d);
        (k > 0).then(|| self.points[k - 1].r)
    }

    /// Upper concave envelope evaluated at `d` (time sharing between
    /// frontier points). `None` left of the first point; the last R to the
    /// right of the last point.
    pub fn rate_at_time_shared(&self, d: f64) -> Option<f64> {
        let first = self.points.first()?;
        if d < first.d {
            return None;
        }
        let hull = self.concave_hull();
        let k = hull.partition_point(|p| p.0 <= d);
        if k == hull.len() {
            return Some(hull[k - 1].1);
        }
        let (d0, r0) = hull[k - 1];
        let (d1, r1) = hull[k];
        Some(r0 + (r1 - r0) * (d - d0) / (d1 - d0))
    }

    fn concave_hull(&self) -> Vec<(f64, f64)> {
        let mut h: Vec<(f64, f64)> = Vec::new();
        for p in &self.points {
            while h.len() >= 2 {
                let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
                // drop b when it lies on or below the chord a -> p
                let cross = (b.0 - a.0) * (p.r - a.1) - (b.1 - a.1) * (p.d - a.0);
                if cross >= 0.0 {
                    h.pop();
                } else {
                    break;
                }
            }
            h.push((p.d, p.r));
        }
        h
    }

    /// Checks the frontier invariants against a distortion ceiling.
    pub fn validate(&self, d_max: f64) -> Result<()> {
        for w in self.points.windows(2) {
            if !(w[1].d > w[0].d && w[1].r > w[0].r) {
                return Err(Error::Invalid(format!(
                    "frontier not increasing at D = {} -> {}",
                    w[0].d, w[1].d
                )));
            }
        }
        for p in &self.points {
            if p.d < -1e-12 || p.d > d_max + 1e-12 || p.r < -1e-12 {
                return Err(Error::Invalid(format!("point ({}, {}) out of range", p.d, p.r)));
            }
        }
        Ok(())
    }
}

/// Pareto frontier of a point-producing sweep, reduced block by block.
fn sweep_frontier<F>(spec: &GridSpec, eval: F) -> Vec<CurvePoint>
where
    F: Fn(&[f64]) -> (f64, f64) + Sync,
{
    let w = Window::full(&spec.axes);
    let sizes = w.sizes();
    let n = w.len();
    let dims = sizes.len();
    let blocks: Vec<Vec<CurvePoint>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut idx = vec![0usize; dims];
            let mut x = vec![0.0; dims];
            let pts = (b * BLOCK..((b + 1) * BLOCK).min(n))
                .map(|flat| {
                    w.index_of(flat, &sizes, &mut idx);
                    w.point(&idx, &mut x);
                    let (d, r) = eval(&x);
                    CurvePoint { d, r, params: x.clone() }
                })
                .collect();
            pareto_filter(pts)
        })
        .collect();
    pareto_filter(blocks.into_iter().flatten().collect())
}

/// Achievable (distortion, sum rate) frontier over the policy lattice.
pub fn tradeoff_curve(ps: f64, spec: &GridSpec) -> Result<TradeoffCurve> {
    check_ps(ps)?;
    check_policy_spec(spec)?;
    let pts = sweep_frontier(spec, |x| {
        let pt = evaluate_policy(ps, &policy_of(x));
        (pt.distortion, pt.f.objective())
    });
    Ok(TradeoffCurve {
        points: pts,
        meta: CurveMeta {
            ps,
            family: CurveFamily::Proposed,
            grid: Some(spec.clone()),
        },
    })
}

/// Outer (distortion, sum rate) frontier over symmetric two-point
/// time-sharing inputs `(Pr(T=0), Pr(X=1|T=0), Pr(X=1|T=1))`, with inputs
/// independent given `T`. The rate is the `(β, γ)` objective at the induced
/// parameters; the distortion is `E[c1(X1, X2)]` with the Bayes estimator
/// from `(X1, X2, Y)`.
pub fn outer_tradeoff_curve(ps: f64, spec: &GridSpec) -> Result<TradeoffCurve> {
    check_ps(ps)?;
    check_policy_spec(spec)?;
    // c1(x1, x2) does not depend on the input law
    let c = idealized_cost_oracle(ps, User::One)?;
    let c = [c.costs()[0], c.costs()[1], c.costs()[2], c.costs()[3]];
    let pts = sweep_frontier(spec, |x| {
        let (t0, a0, a1) = (x[0], x[1], x[2]);
        let cost = |a: f64| {
            let b = 1.0 - a;
            b * b * c[0] + b * a * (c[1] + c[2]) + a * a * c[3]
        };
        let d = t0 * cost(a0) + (1.0 - t0) * cost(a1);
        (d, outer_rate_two_point(ps, t0, a0, a1))
    });
    Ok(TradeoffCurve {
        points: pts,
        meta: CurveMeta {
            ps,
            family: CurveFamily::Outer,
            grid: Some(spec.clone()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::policy_joint;
    use crate::estimation::{achievable_cost_oracle, expected_distortion};
    use crate::regions::f_values_oracle;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_examples() {
        let spec = GridSpec::unit_cube(1, 5).unwrap();
        let m = grid_maximize(|x| -(x[0] - 0.25).powi(2), &spec).unwrap();
        assert_eq!(m.argmax, vec![0.25]);
        assert_eq!(m.index, vec![1]);

        // symmetric objective: both 0.25 and 0.75 tie, the smaller wins
        let m = grid_maximize(|x| -((x[0] - 0.25) * (x[0] - 0.75)).abs(), &spec).unwrap();
        assert_eq!(m.argmax, vec![0.25]);
    }

    #[test]
    fn grid_errors() {
        assert!(GridAxis::unit(1).is_err());
        assert!(GridAxis::new(1.0, 0.0, 3).is_err());
        let big = GridSpec::unit_cube(3, 1000);
        assert!(matches!(big, Err(Error::GridCap { .. })));
        let spec = GridSpec::unit_cube(2, 3).unwrap();
        assert!(grid_maximize(|_| f64::NAN, &spec).is_err());
        assert!(maximize_sum_rate(1.5, &GridSpec::unit_cube(3, 3).unwrap()).is_err());
        assert!(maximize_sum_rate(0.5, &spec).is_err());
    }

    #[test]
    fn endpoints_are_exact() {
        let a = GridAxis::new(0.0, 0.5, 7).unwrap();
        assert_eq!(a.value(0), 0.0);
        assert_eq!(a.value(6), 0.5);
    }

    #[test]
    fn parallel_reduction_is_worker_independent() {
        let spec = GridSpec::unit_cube(2, 151).unwrap();
        // many exact ties across block boundaries
        let f = |x: &[f64]| -((x[0] * 10.0).round() - 3.0).abs() - ((x[1] * 4.0).round() - 2.0).abs();
        let run = |w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .unwrap()
                .install(|| grid_maximize(f, &spec).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert_eq!(a, run(8));
        assert_eq!(a.index, vec![38, 57]);
    }

    #[test]
    fn refine_matches_exhaustive_on_smooth_objective() {
        let spec = GridSpec::unit_cube(2, 201).unwrap();
        let f = |x: &[f64]| -(x[0] - 0.3137).powi(2) - 2.0 * (x[1] - 0.771).powi(2);
        let a = grid_maximize(f, &spec).unwrap();
        let b = refine_maximize(f, &spec, 4, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refine_is_monotone_in_resolution() {
        let f = |x: &[f64]| evaluate_policy(0.8, &policy_of(x)).f.objective();
        let mut last = f64::NEG_INFINITY;
        for n in [21, 41, 81, 161] {
            let v = refine_maximize(f, &GridSpec::unit_cube(3, n).unwrap(), 4, 2).unwrap().value;
            assert!(v >= last - TIE_EPS, "{n}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn fast_distortion_matches_estimator_oracle() {
        for (ps, p, q, r) in [(0.7, 0.5, 0.2, 0.1), (0.3, 0.9, 0.6, 0.45), (1.0, 0.1, 0.0, 0.0), (0.0, 0.4, 0.4, 0.4)] {
            let pol = PolicyParams::new(p, q, r).unwrap();
            let j = policy_joint(ps, &pol).unwrap();
            let want = expected_distortion(&j, &achievable_cost_oracle(&j, User::One).unwrap()).unwrap();
            let got = evaluate_policy(ps, &pol);
            assert!((got.distortion - want).abs() < 1e-12);
            assert_eq!(got.f, crate::regions::f_values_fast(ps, &pol));
            let o = f_values_oracle(ps, &pol).unwrap();
            assert!((got.f.objective() - o.objective()).abs() < 1e-12);
        }
    }

    #[test]
    fn min_distortion_at_ps_07() {
        let (d, pol) = min_distortion(0.7, &GridSpec::unit_cube(3, 21).unwrap()).unwrap();
        // E[c̲1] >= E[c1], and given U the inputs are independent, so the
        // product-input family with the brute-force c1 table bounds D from
        // below; the lattice policy p = 1, r = 0 realizes that family on the
        // same lattice, which bounds D from above
        let c = idealized_cost_oracle(0.7, User::One).unwrap();
        let c = c.costs();
        let family = |a: f64| (1.0 - a).powi(2) * c[0] + a * (1.0 - a) * (c[1] + c[2]) + a * a * c[3];
        let scan = |n: usize| (0..=n).map(|i| family(i as f64 / n as f64)).fold(f64::INFINITY, f64::min);
        assert!(d >= scan(100_000) - 1e-12, "{d}");
        assert!(d <= scan(20) + 1e-12, "{d} {pol:?}");
        // the costly product cell is ps·p̄s, not η·2·ps·p̄s
        assert!((scan(100_000) - (0.3 - 0.09 / 0.84)).abs() < 1e-9);
    }

    #[test]
    fn zero_state_probability_gives_zero_distortion() {
        let (d, _) = min_distortion(0.0, &GridSpec::unit_cube(3, 5).unwrap()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn tradeoff_curves_are_frontiers() {
        let spec = GridSpec::unit_cube(3, 15).unwrap();
        let c = tradeoff_curve(0.7, &spec).unwrap();
        c.validate(1.0).unwrap();
        let (d_min, _) = min_distortion(0.7, &spec).unwrap();
        assert_eq!(c.points()[0].d, d_min);
        let best = maximize_sum_rate(0.7, &spec).unwrap();
        assert!((c.points().last().unwrap().r - best.value).abs() <= TIE_EPS);

        let o = outer_tradeoff_curve(0.7, &spec).unwrap();
        o.validate(1.0).unwrap();
        for p in c.points() {
            assert!(o.rate_at(p.d + 1e-12).unwrap() >= p.r - 5e-3);
        }
    }

    #[test]
    fn hull_and_staircase() {
        let meta = CurveMeta {
            ps: 0.5,
            family: CurveFamily::Proposed,
            grid: None,
        };
        let pt = |d, r| CurvePoint { d, r, params: vec![] };
        let c = TradeoffCurve::pareto(vec![pt(0.0, 0.0), pt(0.5, 0.2), pt(1.0, 1.0), pt(0.7, 0.1)], meta);
        assert_eq!(c.points().len(), 3);
        assert_eq!(c.rate_at(0.6), Some(0.2));
        assert_eq!(c.rate_at(-0.1), None);
        assert!((c.rate_at_time_shared(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(c.rate_at_time_shared(2.0), Some(1.0));
    }

    proptest! {
        #[test]
        fn pareto_filter_invariants(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 1..60)) {
            let pts: Vec<CurvePoint> = raw.iter().map(|&(d, r)| CurvePoint { d, r, params: vec![d, r] }).collect();
            let meta = CurveMeta { ps: 0.5, family: CurveFamily::Outer, grid: None };
            let c = TradeoffCurve::pareto(pts.clone(), meta);
            c.validate(1.0).unwrap();
            // nothing in the cloud dominates a frontier point, and every cloud
            // point is weakly dominated by the frontier
            for p in &pts {
                prop_assert!(c.rate_at(p.d).unwrap() >= p.r);
            }
            for f in c.points() {
                prop_assert!(!pts.iter().any(|p| p.d <= f.d && p.r > f.r));
            }
        }
    }
}
