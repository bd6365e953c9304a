//! Optimal symbol-wise state estimators and their expected-cost tables.
//!
//! [`derive_estimator`] is the brute-force reference: it enumerates the
//! posterior of the state given every observation cell of a joint and picks
//! the Bayes-optimal reconstruction. The closed-form tables for the erasure
//! MAC ([`idealized_cost_table`], [`achievable_cost_table`]) are checked
//! against it cell by cell.

use serde::{Deserialize, Serialize};

use crate::channel::{axis, build_erasure_mac, ErasureMacParams, PolicyParams};
use crate::error::{Error, Result};
use crate::prob::{advance, Alphabet, JointPmf};

/// Cells whose closed form and oracle differ by more than this are flagged.
pub const RECONCILE_TOL: f64 = 1e-6;

/// Distortion measure `d(s, ŝ)` over state and reconstruction alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionFn {
    states: usize,
    recon: usize,
    table: Vec<f64>,
}

impl DistortionFn {
    pub fn new(states: usize, recon: usize, table: Vec<f64>) -> Result<Self> {
        if states == 0 || recon == 0 {
            return Err(Error::Invalid("distortion alphabets must be nonempty".into()));
        }
        if table.len() != states * recon {
            return Err(Error::Shape {
                expected: states * recon,
                found: table.len(),
            });
        }
        if let Some((i, &v)) = table.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidEntry {
                path: format!("distortion[{}][{}]", i / recon, i % recon),
                value: v,
            });
        }
        Ok(Self { states, recon, table })
    }

    /// `d(s, ŝ) = 1{s ≠ ŝ}`.
    pub fn hamming(n: usize) -> Self {
        let table = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { 1.0 }).collect();
        Self {
            states: n,
            recon: n,
            table,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn recon(&self) -> usize {
        self.recon
    }

    #[inline]
    pub fn d(&self, s: usize, s_hat: usize) -> f64 {
        self.table[s * self.recon + s_hat]
    }

    pub fn d_max(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }
}

/// Deterministic map from observation cells to reconstruction symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    obs_axes: Vec<Alphabet>,
    estimate: Vec<usize>,
    support: Vec<bool>,
}

impl Estimator {
    pub fn obs_axes(&self) -> &[Alphabet] {
        &self.obs_axes
    }

    fn flat(&self, obs: &[usize]) -> Option<usize> {
        if obs.len() != self.obs_axes.len() {
            return None;
        }
        let mut flat = 0;
        for (a, &i) in self.obs_axes.iter().zip(obs) {
            if i >= a.size() {
                return None;
            }
            flat = flat * a.size() + i;
        }
        Some(flat)
    }

    /// Estimate for a positive-probability observation cell.
    pub fn estimate(&self, obs: &[usize]) -> Result<usize> {
        match self.flat(obs) {
            Some(f) if self.support[f] => Ok(self.estimate[f]),
            _ => Err(Error::MissingEstimate(obs.to_vec())),
        }
    }

    /// Estimate for any cell, including the symbol-0 fallback used on
    /// zero-probability cells.
    pub fn estimate_or_default(&self, obs: &[usize]) -> Option<usize> {
        self.flat(obs).map(|f| self.estimate[f])
    }
}

/// Expected distortion per conditioning cell, optionally with the estimator
/// that realizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    cond_axes: Vec<Alphabet>,
    costs: Vec<f64>,
    estimator: Option<Estimator>,
}

impl CostTable {
    pub fn from_costs(cond_axes: Vec<Alphabet>, costs: Vec<f64>) -> Result<Self> {
        let n: usize = cond_axes.iter().map(Alphabet::size).product();
        if costs.len() != n {
            return Err(Error::Shape {
                expected: n,
                found: costs.len(),
            });
        }
        Ok(Self {
            cond_axes,
            costs,
            estimator: None,
        })
    }

    pub fn cond_axes(&self) -> &[Alphabet] {
        &self.cond_axes
    }

    pub fn cond_axis_names(&self) -> Vec<&str> {
        self.cond_axes.iter().map(Alphabet::name).collect()
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn cost(&self, cell: &[usize]) -> f64 {
        let mut flat = 0;
        for (a, &i) in self.cond_axes.iter().zip(cell) {
            flat = flat * a.size() + i;
        }
        self.costs[flat]
    }

    pub fn estimator(&self) -> Option<&Estimator> {
        self.estimator.as_ref()
    }

    pub fn max_cost(&self) -> f64 {
        self.costs.iter().copied().fold(0.0, f64::max)
    }
}

/// Bayes-optimal estimator of `state_axis` from `obs_axes`, with the
/// resulting expected distortion conditioned on `cond_axes`.
///
/// Zero-probability observation cells get estimate 0; zero-probability
/// conditioning cells get cost 0. Ties go to the smallest reconstruction
/// index.
pub fn derive_estimator(
    j: &JointPmf,
    state_axis: &str,
    obs_axes: &[&str],
    cond_axes: &[&str],
    d: &DistortionFn,
) -> Result<CostTable> {
    if obs_axes.is_empty() {
        return Err(Error::EmptyAxisSet);
    }
    if obs_axes.contains(&state_axis) || cond_axes.contains(&state_axis) {
        return Err(Error::OverlappingAxes(state_axis.to_string()));
    }
    let n_states = j.axis_size(state_axis)?;
    if n_states != d.states() {
        return Err(Error::AxisSize {
            name: state_axis.to_string(),
            expected: d.states(),
            found: n_states,
        });
    }
    let extra: Vec<&str> = cond_axes.iter().copied().filter(|a| !obs_axes.contains(a)).collect();
    let mut order: Vec<&str> = obs_axes.to_vec();
    order.extend(&extra);
    order.push(state_axis);
    // rejects unknown or repeated names
    let full = j.marginal_table(&order)?;

    let obs_alph: Vec<Alphabet> = obs_axes
        .iter()
        .map(|n| Ok(j.axes()[j.axis_index(n)?].clone()))
        .collect::<Result<_>>()?;
    let cond_alph: Vec<Alphabet> = cond_axes
        .iter()
        .map(|n| Ok(j.axes()[j.axis_index(n)?].clone()))
        .collect::<Result<_>>()?;
    let n_obs: usize = obs_alph.iter().map(Alphabet::size).product();
    let n_extra: usize = extra.iter().map(|n| j.axis_size(n).unwrap()).product();

    // P(obs, s) with the extra conditioning axes summed out
    let mut post = vec![0.0; n_obs * n_states];
    for o in 0..n_obs {
        for e in 0..n_extra {
            for s in 0..n_states {
                post[o * n_states + s] += full[(o * n_extra + e) * n_states + s];
            }
        }
    }
    let mut estimate = vec![0usize; n_obs];
    let mut support = vec![false; n_obs];
    for o in 0..n_obs {
        let row = &post[o * n_states..(o + 1) * n_states];
        let mass: f64 = row.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        support[o] = true;
        let risk = |sh: usize| -> f64 { row.iter().enumerate().map(|(s, &p)| p * d.d(s, sh)).sum() };
        let mut best = (0usize, risk(0));
        for sh in 1..d.recon() {
            let r = risk(sh);
            if r < best.1 - 1e-14 * mass {
                best = (sh, r);
            }
        }
        estimate[o] = best.0;
    }

    // position of each conditioning axis inside the (obs ++ extra) index
    let cond_pos: Vec<usize> = cond_axes
        .iter()
        .map(|c| order.iter().position(|o| o == c).unwrap())
        .collect();
    let oe_sizes: Vec<usize> = order[..order.len() - 1]
        .iter()
        .map(|n| j.axis_size(n).unwrap())
        .collect();
    let n_cond: usize = cond_alph.iter().map(Alphabet::size).product();
    let mut num = vec![0.0; n_cond];
    let mut den = vec![0.0; n_cond];
    let mut idx = vec![0usize; oe_sizes.len()];
    for oe in 0..n_obs * n_extra {
        let o = oe / n_extra;
        let mut c = 0;
        for (k, &pos) in cond_pos.iter().enumerate() {
            c = c * cond_alph[k].size() + idx[pos];
        }
        for s in 0..n_states {
            let p = full[oe * n_states + s];
            num[c] += p * d.d(s, estimate[o]);
            den[c] += p;
        }
        advance(&mut idx, &oe_sizes);
    }
    let costs = num
        .iter()
        .zip(&den)
        .map(|(&n, &m)| if m > 0.0 { (n / m).max(0.0) } else { 0.0 })
        .collect();
    Ok(CostTable {
        cond_axes: cond_alph,
        costs,
        estimator: Some(Estimator {
            obs_axes: obs_alph,
            estimate,
            support,
        }),
    })
}

/// `Σ_cells P(cell) · cost(cell)` over the table's conditioning axes.
pub fn expected_distortion(j: &JointPmf, ct: &CostTable) -> Result<f64> {
    for a in ct.cond_axes() {
        let found = j.axis_size(a.name())?;
        if found != a.size() {
            return Err(Error::AxisSize {
                name: a.name().to_string(),
                expected: a.size(),
                found,
            });
        }
    }
    let m = j.marginal_table(&ct.cond_axis_names())?;
    Ok(m.iter().zip(ct.costs()).map(|(p, c)| p * c).sum())
}

/// `min{ps, 1 - ps}`: the distortion of the best blind estimate.
pub fn eta(ps: f64) -> f64 {
    ps.min(1.0 - ps)
}

/// `min{ps·x, 1 - ps·x}`.
pub fn eta_x(ps: f64, x: f64) -> f64 {
    (ps * x).min(1.0 - ps * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum User {
    One,
    Two,
}

fn binary_axes(a: &str, b: &str) -> Vec<Alphabet> {
    vec![Alphabet::new(a, 2).unwrap(), Alphabet::new(b, 2).unwrap()]
}

/// Closed-form idealized cost table `c_k(x1, x2)` for the erasure MAC, with
/// `P_Y` read as `P(y | x1, x2)`:
///
/// ```text
/// c1(0,0) = η P(0|0,0)              c1(1,1) = η P(1|1,1)
/// c1(0,1) = η (P(0|0,1) + P(1|0,1))  c1(1,0) = 0
/// ```
///
/// The `(1,1)` cell is known to undercount the true cost whenever
/// `ps ∉ {0, 1/2, 1}`; see [`idealized_cost_oracle`].
pub fn idealized_cost_table(ps: f64, user: User) -> Result<CostTable> {
    ErasureMacParams::new(ps)?;
    let e = eta(ps);
    let p_y1_given_11 = 2.0 * ps * (1.0 - ps);
    let p_y01_given_01 = 1.0; // Y = S2 ∈ {0, 1}
    // [c(0,0), c(0,1), c(1,0), c(1,1)] for user 1
    let c1 = [e, e * p_y01_given_01, 0.0, e * p_y1_given_11];
    let costs = match user {
        User::One => c1.to_vec(),
        User::Two => vec![c1[0], c1[2], c1[1], c1[3]],
    };
    CostTable::from_costs(binary_axes(axis::X1, axis::X2), costs)
}

/// Brute-force idealized cost table: the optimal estimator of `S_k` from
/// `(X1, X2, Z1, Z2)` on the erasure MAC, conditioned on `(X1, X2)`.
///
/// The table does not depend on the input law as long as every input pair
/// has positive probability, so uniform inputs are used.
pub fn idealized_cost_oracle(ps: f64, user: User) -> Result<CostTable> {
    let mac = build_erasure_mac(ErasureMacParams::new(ps)?);
    let inputs = JointPmf::normalized(binary_axes(axis::X1, axis::X2), |_| 1.0)?;
    let j = mac.induced_joint(&inputs)?;
    let state = match user {
        User::One => axis::S1,
        User::Two => axis::S2,
    };
    derive_estimator(
        &j,
        state,
        &[axis::X1, axis::X2, axis::Z1, axis::Z2],
        &[axis::X1, axis::X2],
        &DistortionFn::hamming(2),
    )
}

/// One closed-form-versus-oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationRecord {
    pub cell: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    pub flag: bool,
}

impl ReconciliationRecord {
    pub fn new(cell: impl Into<String>, closed_form: f64, oracle: f64) -> Self {
        let abs_diff = (closed_form - oracle).abs();
        Self {
            cell: cell.into(),
            closed_form,
            oracle,
            abs_diff,
            flag: abs_diff > RECONCILE_TOL,
        }
    }
}

/// Compares two cost tables over the same binary conditioning cells.
pub fn reconcile(label: &str, closed: &CostTable, oracle: &CostTable) -> Vec<ReconciliationRecord> {
    let sizes: Vec<usize> = closed.cond_axes().iter().map(Alphabet::size).collect();
    let mut idx = vec![0usize; sizes.len()];
    let mut out = Vec::with_capacity(closed.costs().len());
    for (c, o) in closed.costs().iter().zip(oracle.costs()) {
        let cell = idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        out.push(ReconciliationRecord::new(format!("{label}({cell})"), *c, *o));
        advance(&mut idx, &sizes);
    }
    out
}

/// Closed-form and brute-force achievable cost tables `c̲1(x1, v2)` with
/// their per-cell reconciliation.
#[derive(Debug, Clone)]
pub struct AchievableCosts {
    pub closed: CostTable,
    pub oracle: CostTable,
    pub records: Vec<ReconciliationRecord>,
}

/// `P(y | x1, v2)` on the erasure MAC under the layered policy: given
/// `V2 = v2`, `X2 = v2 ⊕ Θ2` is independent of `X1`, so `Y` is the sum of
/// independent Bernoulli(ps·x1) and Bernoulli(ps·P(X2=1|v2)) terms.
pub fn output_given_x1_v2(ps: f64, r: f64, x1: usize, v2: usize) -> [f64; 3] {
    let t = if v2 == 0 { r } else { 1.0 - r };
    let a = ps * x1 as f64;
    let b = ps * t;
    [(1.0 - a) * (1.0 - b), a * (1.0 - b) + (1.0 - a) * b, a * b]
}

/// Closed-form achievable cost table, with `P_Y` read as `P(y | x1, v2)`:
///
/// ```text
/// c̲1(0,0) = η P(0|0,0) + η_r P(1|0,0)    c̲1(1,1) = P(1|1,1) η_r̄
/// c̲1(0,1) = η (P(0|0,1) + P(1|0,1))      c̲1(1,0) = P(1|1,0) η_r
/// ```
///
/// The brute-force table from [`derive_estimator`] on the policy joint is
/// returned alongside; downstream code consumes the brute-force one.
pub fn achievable_cost_table(ps: f64, pol: &PolicyParams) -> Result<AchievableCosts> {
    let j = crate::channel::policy_joint(ps, pol)?;
    let e = eta(ps);
    let (er, er_bar) = (eta_x(ps, pol.r), eta_x(ps, 1.0 - pol.r));
    let py = |x1, v2| output_given_x1_v2(ps, pol.r, x1, v2);
    let costs = vec![
        e * py(0, 0)[0] + er * py(0, 0)[1],
        e * (py(0, 1)[0] + py(0, 1)[1]),
        py(1, 0)[1] * er,
        py(1, 1)[1] * er_bar,
    ];
    let closed = CostTable::from_costs(binary_axes(axis::X1, axis::V2), costs)?;
    let oracle = achievable_cost_oracle(&j, User::One)?;
    let records = reconcile("c_ach1", &closed, &oracle);
    Ok(AchievableCosts {
        closed,
        oracle,
        records,
    })
}

/// Brute-force achievable cost table on any joint carrying the layered
/// axes: `c̲1(x1, v2)` estimates `S1` from `(X1, V2, Z1)`, `c̲2(v1, x2)`
/// estimates `S2` from `(V1, X2, Z2)`. Missing `Z` axes fall back to `Y`
/// (output feedback).
pub fn achievable_cost_oracle(j: &JointPmf, user: User) -> Result<CostTable> {
    let z = |name: &'static str| if j.has_axis(name) { name } else { axis::Y };
    let (state, own, other, fb) = match user {
        User::One => (axis::S1, axis::X1, axis::V2, z(axis::Z1)),
        User::Two => (axis::S2, axis::V1, axis::X2, z(axis::Z2)),
    };
    let d = DistortionFn::hamming(j.axis_size(state)?);
    derive_estimator(j, state, &[own, other, fb], &[own, other], &d)
}

/// Brute-force idealized cost table on any joint: `c_k(x1, x2)` estimates
/// `S_k` from `(X1, X2, Z1, Z2)`, or `(X1, X2, Y)` without `Z` axes.
pub fn idealized_cost_oracle_on(j: &JointPmf, user: User, d: &DistortionFn) -> Result<CostTable> {
    let state = match user {
        User::One => axis::S1,
        User::Two => axis::S2,
    };
    let obs: Vec<&str> = if j.has_axis(axis::Z1) && j.has_axis(axis::Z2) {
        vec![axis::X1, axis::X2, axis::Z1, axis::Z2]
    } else {
        vec![axis::X1, axis::X2, axis::Y]
    };
    derive_estimator(j, state, &obs, &[axis::X1, axis::X2], d)
}
