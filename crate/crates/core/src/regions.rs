//! Rate expressions: the layered achievable region, the dependence-balance
//! outer bound, the erasure-MAC specializations of both, and the
//! resource-sharing baseline.

use serde::Serialize;

use crate::channel::{axis, kappa, policy_joint, policy_table, PolicyParams};
use crate::error::{Error, Result};
use crate::estimation::{
    achievable_cost_oracle, expected_distortion, idealized_cost_oracle_on, DistortionFn, User,
};
use crate::optimize::{grid_maximize, CurveFamily, CurveMeta, CurvePoint, GridAxis, GridSpec, TradeoffCurve};
use crate::prob::{entropy2, entropy3, entropy_of, JointPmf};

/// Largest auxiliary alphabet the outer bound needs.
pub const MAX_T: usize = 7;

const S: [&str; 2] = [axis::S1, axis::S2];

fn z_axis(j: &JointPmf, name: &'static str) -> &'static str {
    if j.has_axis(name) {
        name
    } else {
        axis::Y
    }
}

/// The four entropy terms of the erasure-MAC sum-rate objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FValues {
    /// `H(Y | S, V1, V2, U)`
    pub f1a: f64,
    /// `H(Y | X2, U)`
    pub f1b: f64,
    /// `H(Y | U, V1, X2)`
    pub f1c: f64,
    /// `H(Y | S)`
    pub f2: f64,
}

impl FValues {
    /// `f1a + 2 (f1b - f1c)`: the cooperative sum-rate term.
    pub fn f1(&self) -> f64 {
        self.f1a + 2.0 * (self.f1b - self.f1c)
    }

    pub fn objective(&self) -> f64 {
        self.f1().min(self.f2)
    }
}

#[inline]
fn xlog(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Evaluates the printed closed forms of the four terms, typos included:
/// the middle log argument of the third `f1c` line lacks the `ps²` factor on
/// `r̄`. Use [`f_values_oracle`] for anything that matters.
pub fn f_values_closed(ps: f64, pol: &PolicyParams) -> Result<FValues> {
    let (p, q, r) = (pol.p, pol.q, pol.r);
    let (pb, qb, rb) = (1.0 - p, 1.0 - q, 1.0 - r);
    let psb = 1.0 - ps;
    let k = kappa(q, r);
    let kb = 1.0 - k;

    let f1a = 2.0 * psb * ps * entropy2(r)? + ps * ps * entropy3(r * r, 2.0 * r * rb, rb * rb)?;

    let f1b = -pb * k * (xlog(psb + ps * k) + xlog(ps * kb))
        - p * kb * (xlog(psb + ps * kb) + xlog(ps * k))
        - pb * kb
            * (xlog(psb * psb + ps * psb * k) + xlog(psb * ps + ps * psb * kb + ps * ps * k) + xlog(ps * ps * kb))
        - p * k
            * (xlog(psb * psb + ps * psb * kb) + xlog(psb * ps + ps * psb * k + ps * ps * kb) + xlog(ps * ps * k));

    let typo_arg = ps * psb + ps * psb * r + rb;
    let typo_term = {
        let t = ps * psb + ps * psb * r + ps * ps * rb;
        if t > 0.0 && typo_arg > 0.0 {
            t * typo_arg.log2()
        } else {
            0.0
        }
    };
    let f1c = -(pb * qb * k + p * q * kb) * (xlog(psb + ps * rb) + xlog(ps * r))
        - (pb * q * k + p * qb * kb) * (xlog(psb + ps * r) + xlog(ps * rb))
        - (pb * qb * kb + p * q * k) * (xlog(psb * psb + ps * psb * rb) + typo_term + xlog(ps * ps * r))
        - (pb * q * kb + p * qb * k)
            * (xlog(psb * psb + ps * psb * r) + xlog(ps * psb + ps * psb * rb + ps * ps * r) + xlog(ps * ps * rb));

    let f2 = 2.0 * ps * psb * entropy2(p * k + pb * kb)?
        + ps * ps * entropy3(pb * k * k + p * kb * kb, 2.0 * k * kb, p * k * k + pb * kb * kb)?;

    Ok(FValues { f1a, f1b, f1c, f2 })
}

/// The four terms as conditional entropies of [`policy_joint`].
pub fn f_values_oracle(ps: f64, pol: &PolicyParams) -> Result<FValues> {
    let j = policy_joint(ps, pol)?;
    Ok(FValues {
        f1a: j.conditional_entropy(&[axis::Y], &[axis::S1, axis::S2, axis::V1, axis::V2, axis::U])?,
        f1b: j.conditional_entropy(&[axis::Y], &[axis::X2, axis::U])?,
        f1c: j.conditional_entropy(&[axis::Y], &[axis::U, axis::V1, axis::X2])?,
        f2: j.conditional_entropy(&[axis::Y], &[axis::S1, axis::S2])?,
    })
}

/// Same quantities as [`f_values_oracle`], marginalizing the raw policy
/// table with fixed strides instead of going through axis names. This is
/// what the grid sweeps call; tests pin it to the named path.
pub(crate) fn f_values_fast(ps: f64, pol: &PolicyParams) -> FValues {
    f_values_from_table(&policy_table(ps, pol))
}

pub(crate) fn f_values_from_table(t: &[f64]) -> FValues {
    // index = ((((((u*2+v1)*2+v2)*2+x1)*2+x2)*2+s1)*2+s2)*3+y
    let mut y_s = [0.0; 12]; // (s1,s2,y)
    let mut y_svvu = [0.0; 96]; // (u,v1,v2,s1,s2,y)
    let mut y_x2u = [0.0; 12]; // (u,x2,y)
    let mut y_uv1x2 = [0.0; 24]; // (u,v1,x2,y)
    for (i, &p) in t.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let y = i % 3;
        let rest = i / 3;
        let s2 = rest & 1;
        let s1 = (rest >> 1) & 1;
        let x2 = (rest >> 2) & 1;
        let v2 = (rest >> 4) & 1;
        let v1 = (rest >> 5) & 1;
        let u = (rest >> 6) & 1;
        let s = s1 * 2 + s2;
        y_s[s * 3 + y] += p;
        y_svvu[(((u * 2 + v1) * 2 + v2) * 4 + s) * 3 + y] += p;
        y_x2u[(u * 2 + x2) * 3 + y] += p;
        y_uv1x2[((u * 2 + v1) * 2 + x2) * 3 + y] += p;
    }
    fn cond(joint: &[f64]) -> f64 {
        // H(Y | rest) where Y is the last (ternary) coordinate
        let given: Vec<f64> = joint.chunks(3).map(|c| c.iter().sum()).collect();
        (entropy_of(joint) - entropy_of(&given)).max(0.0)
    }
    FValues {
        f1a: cond(&y_svvu),
        f1b: cond(&y_x2u),
        f1c: cond(&y_uv1x2),
        f2: cond(&y_s),
    }
}

/// `min{f1, f2}` from the brute-force terms.
pub fn proposed_objective(ps: f64, pol: &PolicyParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&ps) {
        return Err(Error::Domain { what: "ps", value: ps });
    }
    Ok(f_values_fast(ps, pol).objective())
}

/// Rate bounds of the layered scheme evaluated on one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AchievableBounds {
    /// `I(V1; Z2 | X2 U)`
    pub coop12: f64,
    /// `I(V2; Z1 | X1 U)`
    pub coop21: f64,
    /// `I(X1; Y | S X2 V1 U)`
    pub fresh1: f64,
    /// `I(X2; Y | S X1 V2 U)`
    pub fresh2: f64,
    /// `I(X1 X2; Y | S V1 V2 U)`
    pub fresh_sum: f64,
    /// `I(X1 X2; Y | S)`
    pub total: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_sum: f64,
    /// `E[c̲1(X1, V2)]`
    pub d1: f64,
    /// `E[c̲2(V1, X2)]`
    pub d2: f64,
}

/// Evaluates the layered-scheme bounds on a joint over
/// `(U, V1, V2, X1, X2, S1, S2, Y)` and optionally `Z1, Z2` (taken equal to
/// `Y` when absent). Distortions are Hamming.
pub fn achievable_bounds(j: &JointPmf) -> Result<AchievableBounds> {
    let n = j.axis_size(axis::S1)?;
    achievable_bounds_with(j, &DistortionFn::hamming(n))
}

pub fn achievable_bounds_with(j: &JointPmf, d: &DistortionFn) -> Result<AchievableBounds> {
    use axis::*;
    for a in [U, V1, V2, X1, X2, S1, S2, Y] {
        j.axis_index(a)?;
    }
    let (z1, z2) = (z_axis(j, Z1), z_axis(j, Z2));
    let coop12 = j.mutual_information(&[V1], &[z2], &[X2, U])?;
    let coop21 = j.mutual_information(&[V2], &[z1], &[X1, U])?;
    let fresh1 = j.mutual_information(&[X1], &[Y], &[S1, S2, X2, V1, U])?;
    let fresh2 = j.mutual_information(&[X2], &[Y], &[S1, S2, X1, V2, U])?;
    let fresh_sum = j.mutual_information(&[X1, X2], &[Y], &[S1, S2, V1, V2, U])?;
    let total = j.mutual_information(&[X1, X2], &[Y], &S)?;

    let d1 = {
        let ct = crate::estimation::derive_estimator(j, S1, &[X1, V2, z1], &[X1, V2], d)?;
        expected_distortion(j, &ct)?
    };
    let d2 = {
        let ct = crate::estimation::derive_estimator(j, S2, &[V1, X2, z2], &[V1, X2], d)?;
        expected_distortion(j, &ct)?
    };
    Ok(AchievableBounds {
        coop12,
        coop21,
        fresh1,
        fresh2,
        fresh_sum,
        total,
        r1: fresh1 + coop12,
        r2: fresh2 + coop21,
        r_sum: total.min(fresh_sum + coop12 + coop21),
        d1,
        d2,
    })
}

/// Outer-bound quantities evaluated on one joint with a time-sharing axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterBounds {
    /// `I(X1; Y Z1 Z2 | S X2 T)`
    pub r1: f64,
    /// `I(X2; Y Z1 Z2 | S X1 T)`
    pub r2: f64,
    /// `I(X1 X2; Y Z1 Z2 | S T)`
    pub r_sum: f64,
    /// `I(X1 X2; Y | S)`
    pub cut_set: f64,
    /// `I(X1; X2 | Z1 Z2 T) - I(X1; X2 | T)`; negative means inadmissible.
    pub db_slack: f64,
    /// `E[c1(X1, X2)]`
    pub d1: f64,
    /// `E[c2(X1, X2)]`
    pub d2: f64,
}

impl OuterBounds {
    pub fn admissible(&self) -> bool {
        self.db_slack >= -1e-12
    }
}

fn feedback_axes(j: &JointPmf) -> Vec<&'static str> {
    let mut z = vec![axis::Y];
    for name in [axis::Z1, axis::Z2] {
        if j.has_axis(name) {
            z.push(name);
        }
    }
    z
}

fn check_t(j: &JointPmf) -> Result<()> {
    let t = j.axis_size(axis::T)?;
    if t > MAX_T {
        return Err(Error::Cardinality {
            name: "T",
            size: t,
            max: MAX_T,
        });
    }
    Ok(())
}

/// Evaluates the outer bound on a joint over `(T, X1, X2, S1, S2, Y)` and
/// optionally `Z1, Z2`. `|T|` above [`MAX_T`] is rejected.
pub fn outer_bounds(j: &JointPmf) -> Result<OuterBounds> {
    let n = j.axis_size(axis::S1)?;
    outer_bounds_with(j, &DistortionFn::hamming(n))
}

pub fn outer_bounds_with(j: &JointPmf, d: &DistortionFn) -> Result<OuterBounds> {
    use axis::*;
    check_t(j)?;
    let out = feedback_axes(j);
    let fb = feedback_only(j);
    let r1 = j.mutual_information(&[X1], &out, &[S1, S2, X2, T])?;
    let r2 = j.mutual_information(&[X2], &out, &[S1, S2, X1, T])?;
    let r_sum = j.mutual_information(&[X1, X2], &out, &[S1, S2, T])?;
    let cut_set = j.mutual_information(&[X1, X2], &[Y], &S)?;
    let mut given = fb.clone();
    given.push(T);
    let db_slack = j.mutual_information(&[X1], &[X2], &given)? - j.mutual_information(&[X1], &[X2], &[T])?;
    let d1 = expected_distortion(j, &idealized_cost_oracle_on(j, User::One, d)?)?;
    let d2 = expected_distortion(j, &idealized_cost_oracle_on(j, User::Two, d)?)?;
    Ok(OuterBounds {
        r1,
        r2,
        r_sum,
        cut_set,
        db_slack,
        d1,
        d2,
    })
}

/// The feedback observations `(Z1, Z2)`, or `Y` under output feedback.
fn feedback_only(j: &JointPmf) -> Vec<&'static str> {
    if j.has_axis(axis::Z1) && j.has_axis(axis::Z2) {
        vec![axis::Z1, axis::Z2]
    } else {
        vec![axis::Y]
    }
}

/// The dependence-balance slack in its rewritten form
/// `I(X1; Z | X2 T) + I(X2; Z | X1 T) - I(X1 X2; Z | T)`, `Z = (Z1, Z2)`.
pub fn db_slack_rewritten(j: &JointPmf) -> Result<f64> {
    use axis::*;
    check_t(j)?;
    let z = feedback_only(j);
    Ok(j.mutual_information(&[X1], &z, &[X2, T])? + j.mutual_information(&[X2], &z, &[X1, T])?
        - j.mutual_information(&[X1, X2], &z, &[T])?)
}

/// `φ(t) = (1 - √(1 - 2t)) / 2` on `[0, 1/2]`.
pub fn phi(t: f64) -> f64 {
    0.5 * (1.0 - (1.0 - 2.0 * t).max(0.0).sqrt())
}

/// The example outer-bound objective at `(β, γ)`:
/// `min{2 ps H2(β), H2(x) + 1 - x}` with `x = 2 ps p̄s γ + 2 ps² β β̄`.
pub fn outer_rate(ps: f64, beta: f64, gamma: f64) -> f64 {
    let x = (2.0 * ps * (1.0 - ps) * gamma + 2.0 * ps * ps * beta * (1.0 - beta)).clamp(0.0, 1.0);
    let h = |v: f64| entropy2(v.clamp(0.0, 1.0)).unwrap_or(0.0);
    (2.0 * ps * h(beta)).min(h(x) + 1.0 - x)
}

/// Maximizes [`outer_rate`] over a `grid_n × grid_n` grid on
/// `[0, 1/2] × [0, 1]`. Returns the value and `(β, γ)`.
pub fn outer_sum_rate_example(ps: f64, grid_n: usize) -> Result<(f64, (f64, f64))> {
    if !(0.0..=1.0).contains(&ps) {
        return Err(Error::Domain { what: "ps", value: ps });
    }
    let spec = GridSpec::new(vec![GridAxis::new(0.0, 0.5, grid_n)?, GridAxis::new(0.0, 1.0, grid_n)?])?;
    let best = grid_maximize(|x| outer_rate(ps, x[0], x[1]), &spec)?;
    Ok((best.value, (best.argmax[0], best.argmax[1])))
}

/// Sum rate without feedback cooperation, `2 ps p̄s + 3 ps² / 2`.
pub fn resource_sharing_rate(ps: f64) -> f64 {
    2.0 * ps * (1.0 - ps) + 1.5 * ps * ps
}

/// Time-sharing segment between `(d_min, 0)` and `(η, resource_sharing_rate)`,
/// sampled at `samples` evenly spaced weights and Pareto-filtered.
pub fn resource_sharing_tradeoff(ps: f64, d_min: f64, samples: usize) -> Result<TradeoffCurve> {
    if !(0.0..=1.0).contains(&ps) {
        return Err(Error::Domain { what: "ps", value: ps });
    }
    let samples = samples.max(2);
    let eta = crate::estimation::eta(ps);
    let r_max = resource_sharing_rate(ps);
    let points = (0..samples)
        .map(|i| {
            let w = i as f64 / (samples - 1) as f64;
            CurvePoint {
                d: d_min + w * (eta - d_min),
                r: w * r_max,
                params: vec![w],
            }
        })
        .collect();
    Ok(TradeoffCurve::pareto(
        points,
        CurveMeta {
            ps,
            family: CurveFamily::ResourceSharing,
            grid: None,
        },
    ))
}

/// Upper-bounding outer rate for a symmetric two-point time-sharing input:
/// `Pr(T=0) = t0`, `Pr(X_k=1 | T=t) = a_t`, inputs independent given `T`.
pub fn outer_rate_two_point(ps: f64, t0: f64, a0: f64, a1: f64) -> f64 {
    let alpha = 2.0 * (t0 * a0 * (1.0 - a0) + (1.0 - t0) * a1 * (1.0 - a1));
    let gamma = t0 * a0 + (1.0 - t0) * a1;
    outer_rate(ps, phi(alpha), gamma)
}

/// Sum-rate-relevant joint of `(U, V1, V2, X1, X2, S1, S2, Y)` as used by
/// [`achievable_bounds`]; a thin alias kept next to the bound evaluators.
pub fn policy_bounds(ps: f64, pol: &PolicyParams) -> Result<AchievableBounds> {
    achievable_bounds(&policy_joint(ps, pol)?)
}

/// Achievable symmetric distortion `E[c̲1(X1, V2)]` of a policy, via the
/// brute-force estimator.
pub fn policy_distortion(ps: f64, pol: &PolicyParams) -> Result<f64> {
    let j = policy_joint(ps, pol)?;
    expected_distortion(&j, &achievable_cost_oracle(&j, User::One)?)
}
