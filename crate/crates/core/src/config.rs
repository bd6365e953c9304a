//! JSON region configurations: a channel plus input distributions on which
//! the achievable and outer bounds are evaluated.
//!
//! ```json
//! {
//!   "channel": { "alphabets": {..}, "state_pmf": [..], "kernel": [..] },
//!   "achievable": { "aux_sizes": {"u": 2, "v1": 2, "v2": 2},
//!                   "input_pmf": [..] },          // [u][v1][v2][x1][x2]
//!   "outer": { "t": 2, "input_pmf": [..] },       // [t][x1][x2]
//!   "distortion": [[0, 1], [1, 0]]                // [s][ŝ], optional
//! }
//! ```
//!
//! At least one of `achievable` and `outer` is required. The distortion
//! defaults to Hamming and applies to both users.

use serde::Serialize;
use serde_json::{json, Value};

use crate::channel::{axis, read_tensor, StateMac};
use crate::error::{Error, Result};
use crate::estimation::DistortionFn;
use crate::prob::{Alphabet, JointPmf, NORM_TOL};
use crate::regions::{
    achievable_bounds_with, db_slack_rewritten, outer_bounds_with, AchievableBounds, OuterBounds, MAX_T,
};

/// Markov defects above this are reported.
pub const MARKOV_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct RegionConfig {
    pub channel: StateMac,
    /// Joint over `(U, V1, V2, X1, X2)`.
    pub achievable: Option<JointPmf>,
    /// Joint over `(T, X1, X2)`.
    pub outer: Option<JointPmf>,
    pub distortion: DistortionFn,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn positive(obj: &Value, key: &str, path: &str) -> Result<usize> {
    let p = format!("{path}.{key}");
    let v = obj.get(key).ok_or_else(|| schema(&p, "missing"))?;
    match v.as_u64() {
        Some(n) if n >= 1 => Ok(n as usize),
        _ => Err(schema(p, format!("expected a positive integer, found {v}"))),
    }
}

fn normalized_joint(axes: Vec<Alphabet>, table: Vec<f64>, path: &str) -> Result<JointPmf> {
    let sum: f64 = table.iter().sum();
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(schema(path, format!("sums to {sum}, expected 1")));
    }
    JointPmf::new(axes, table)
}

impl RegionConfig {
    pub fn from_json(v: &Value) -> Result<Self> {
        let root = "$";
        let obj = v.as_object().ok_or_else(|| schema(root, "expected an object"))?;
        let ch = obj.get("channel").ok_or_else(|| schema("$.channel", "missing"))?;
        let channel = StateMac::from_json(ch, "$.channel")?;
        let sz = channel.sizes();

        let achievable = match obj.get("achievable") {
            None => None,
            Some(a) => {
                let path = "$.achievable";
                let aux = a.get("aux_sizes").ok_or_else(|| schema(format!("{path}.aux_sizes"), "missing"))?;
                let aux_path = format!("{path}.aux_sizes");
                let (u, v1, v2) = (
                    positive(aux, "u", &aux_path)?,
                    positive(aux, "v1", &aux_path)?,
                    positive(aux, "v2", &aux_path)?,
                );
                let p = format!("{path}.input_pmf");
                let table = read_tensor(a.get("input_pmf"), &[u, v1, v2, sz.x1, sz.x2], &p)?;
                let axes = vec![
                    Alphabet::new(axis::U, u)?,
                    Alphabet::new(axis::V1, v1)?,
                    Alphabet::new(axis::V2, v2)?,
                    Alphabet::new(axis::X1, sz.x1)?,
                    Alphabet::new(axis::X2, sz.x2)?,
                ];
                Some(normalized_joint(axes, table, &p)?)
            }
        };

        let outer = match obj.get("outer") {
            None => None,
            Some(o) => {
                let path = "$.outer";
                let t = positive(o, "t", path)?;
                if t > MAX_T {
                    return Err(Error::Cardinality {
                        name: "T",
                        size: t,
                        max: MAX_T,
                    });
                }
                let p = format!("{path}.input_pmf");
                let table = read_tensor(o.get("input_pmf"), &[t, sz.x1, sz.x2], &p)?;
                let axes = vec![
                    Alphabet::new(axis::T, t)?,
                    Alphabet::new(axis::X1, sz.x1)?,
                    Alphabet::new(axis::X2, sz.x2)?,
                ];
                Some(normalized_joint(axes, table, &p)?)
            }
        };
        if achievable.is_none() && outer.is_none() {
            return Err(schema(root, "needs `achievable`, `outer`, or both"));
        }

        if sz.s1 != sz.s2 {
            return Err(schema(
                "$.channel.alphabets",
                "s1 and s2 must have equal sizes to share one distortion",
            ));
        }
        let distortion = match obj.get("distortion") {
            None => DistortionFn::hamming(sz.s1),
            Some(d) => {
                let rows = d.as_array().ok_or_else(|| schema("$.distortion", "expected an array"))?;
                let recon = rows
                    .first()
                    .and_then(Value::as_array)
                    .map(Vec::len)
                    .ok_or_else(|| schema("$.distortion[0]", "expected a non-empty array"))?;
                let table = read_tensor(Some(d), &[sz.s1, recon], "$.distortion")?;
                DistortionFn::new(sz.s1, recon, table)?
            }
        };
        Ok(RegionConfig {
            channel,
            achievable,
            outer,
            distortion,
        })
    }
}

/// One measured Markov chain `A − B − C`, as `I(A; C | B)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovCheck {
    pub chain: String,
    pub defect: f64,
    pub warning: bool,
}

fn markov(j: &JointPmf, a: &[&str], b: &[&str], c: &[&str]) -> Result<MarkovCheck> {
    let name = |s: &[&str]| s.concat();
    let defect = j.mutual_information(a, c, b)?;
    Ok(MarkovCheck {
        chain: format!("{} - {} - {}", name(a), name(b), name(c)),
        defect,
        warning: defect > MARKOV_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterReport {
    #[serde(flatten)]
    pub bounds: OuterBounds,
    pub db_slack_rewritten: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub achievable: Option<AchievableBounds>,
    pub outer: Option<OuterReport>,
    pub markov: Vec<MarkovCheck>,
    pub warnings: Vec<String>,
}

pub fn evaluate_region(cfg: &RegionConfig) -> Result<RegionReport> {
    use axis::*;
    let mut markov_checks = Vec::new();
    let fb = cfg.channel.has_output_feedback();
    let achievable = match &cfg.achievable {
        None => None,
        Some(input) => {
            let j = if fb {
                cfg.channel.induced_joint_output_feedback(input)?
            } else {
                cfg.channel.induced_joint(input)?
            };
            markov_checks.push(markov(&j, &[V1, X1], &[U], &[V2, X2])?);
            let out: &[&str] = if fb { &[Y] } else { &[Y, Z1, Z2] };
            markov_checks.push(markov(&j, &[U, V1, V2], &[X1, X2], out)?);
            Some(achievable_bounds_with(&j, &cfg.distortion)?)
        }
    };
    let outer = match &cfg.outer {
        None => None,
        Some(input) => {
            let j = if fb {
                cfg.channel.induced_joint_output_feedback(input)?
            } else {
                cfg.channel.induced_joint(input)?
            };
            let out: &[&str] = if fb { &[Y] } else { &[Y, Z1, Z2] };
            markov_checks.push(markov(&j, &[T], &[S1, S2, X1, X2], out)?);
            let bounds = outer_bounds_with(&j, &cfg.distortion)?;
            Some(OuterReport {
                db_slack_rewritten: db_slack_rewritten(&j)?,
                admissible: bounds.admissible(),
                bounds,
            })
        }
    };
    let mut warnings: Vec<String> = markov_checks
        .iter()
        .filter(|m| m.warning)
        .map(|m| format!("Markov chain {} violated: defect {:.3e} bits", m.chain, m.defect))
        .collect();
    if let Some(o) = &outer {
        if !o.admissible {
            warnings.push(format!(
                "outer input violates dependence balance: slack {:.3e} bits",
                o.bounds.db_slack
            ));
        }
    }
    Ok(RegionReport {
        achievable,
        outer,
        markov: markov_checks,
        warnings,
    })
}

/// The channel as the JSON description [`StateMac::from_json`] reads.
pub fn channel_to_json(ch: &StateMac) -> Value {
    let s = ch.sizes();
    let state: Vec<Vec<f64>> = (0..s.s1)
        .map(|a| (0..s.s2).map(|b| ch.state_prob(a, b)).collect())
        .collect();
    let kernel: Vec<Value> = (0..s.s1)
        .map(|s1| {
            json!((0..s.s2)
                .map(|s2| {
                    (0..s.x1)
                        .map(|x1| {
                            (0..s.x2)
                                .map(|x2| {
                                    (0..s.y)
                                        .map(|y| {
                                            (0..s.z1)
                                                .map(|z1| {
                                                    (0..s.z2)
                                                        .map(|z2| ch.kernel(y, z1, z2, x1, x2, s1, s2))
                                                        .collect::<Vec<f64>>()
                                                })
                                                .collect::<Vec<_>>()
                                        })
                                        .collect::<Vec<_>>()
                                })
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>())
        })
        .collect();
    json!({
        "alphabets": {"x1": s.x1, "x2": s.x2, "s1": s.s1, "s2": s.s2, "y": s.y, "z1": s.z1, "z2": s.z2},
        "state_pmf": state,
        "kernel": kernel,
    })
}

/// Nested-array form of a row-major table.
pub fn nest(table: &[f64], shape: &[usize]) -> Value {
    match shape.split_first() {
        None => json!(table[0]),
        Some((&n, rest)) => {
            let stride: usize = rest.iter().product();
            Value::Array((0..n).map(|i| nest(&table[i * stride..(i + 1) * stride], rest)).collect())
        }
    }
}

/// A region config for the `(p, q, r)` policy on the erasure MAC.
pub fn policy_config(ps: f64, pol: &crate::channel::PolicyParams) -> Result<Value> {
    let ch = crate::channel::build_erasure_mac(crate::channel::ErasureMacParams::new(ps)?);
    let j = crate::channel::policy_joint(ps, pol)?;
    let input = j.marginal_table(&[axis::U, axis::V1, axis::V2, axis::X1, axis::X2])?;
    Ok(json!({
        "channel": channel_to_json(&ch),
        "achievable": {
            "aux_sizes": {"u": 2, "v1": 2, "v2": 2},
            "input_pmf": nest(&input, &[2, 2, 2, 2, 2]),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{policy_joint, PolicyParams};
    use crate::regions::achievable_bounds;

    #[test]
    fn policy_config_reproduces_direct_bounds() {
        let pol = PolicyParams::new(0.3, 0.2, 0.1).unwrap();
        let cfg = RegionConfig::from_json(&policy_config(0.7, &pol).unwrap()).unwrap();
        let rep = evaluate_region(&cfg).unwrap();
        let a = rep.achievable.unwrap();
        let b = achievable_bounds(&policy_joint(0.7, &pol).unwrap()).unwrap();
        for (x, y) in [(a.r1, b.r1), (a.r2, b.r2), (a.r_sum, b.r_sum), (a.d1, b.d1), (a.coop12, b.coop12)] {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(rep.warnings.is_empty());
        assert!(rep.markov.iter().all(|m| m.defect < 1e-12));
    }

    #[test]
    fn correlated_auxiliaries_warn() {
        let pol = PolicyParams::new(0.3, 0.2, 0.1).unwrap();
        let mut v = policy_config(0.7, &pol).unwrap();
        // all mass on V1 = V2 with U fixed: V1X1 and V2X2 depend given U
        let mut t = vec![0.0; 32];
        t[0] = 0.5; // u=0 v1=0 v2=0 x1=0 x2=0
        t[(0b011) << 2 | 0b11] = 0.5; // u=0 v1=1 v2=1 x1=1 x2=1
        v["achievable"]["input_pmf"] = nest(&t, &[2, 2, 2, 2, 2]);
        let rep = evaluate_region(&RegionConfig::from_json(&v).unwrap()).unwrap();
        assert_eq!(rep.warnings.len(), 1);
        assert!((rep.markov[0].defect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schema_errors_name_paths() {
        let pol = PolicyParams::new(0.3, 0.2, 0.1).unwrap();
        let mut v = policy_config(0.7, &pol).unwrap();
        v["achievable"]["input_pmf"][1][0][1][1][0] = json!(-0.1);
        match RegionConfig::from_json(&v) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.achievable.input_pmf[1][0][1][1][0]"),
            other => panic!("{other:?}"),
        }
        let mut v = policy_config(0.7, &pol).unwrap();
        v["achievable"]["aux_sizes"]["u"] = json!(0);
        assert!(matches!(RegionConfig::from_json(&v), Err(Error::Schema { .. })));
        let mut v = policy_config(0.7, &pol).unwrap();
        v.as_object_mut().unwrap().remove("achievable");
        assert!(matches!(RegionConfig::from_json(&v), Err(Error::Schema { .. })));
    }

    #[test]
    fn oversized_time_sharing_is_rejected() {
        let pol = PolicyParams::new(0.3, 0.2, 0.1).unwrap();
        let mut v = policy_config(0.7, &pol).unwrap();
        v["outer"] = json!({"t": 8, "input_pmf": nest(&[1.0 / 32.0; 32], &[8, 2, 2])});
        assert!(matches!(
            RegionConfig::from_json(&v),
            Err(Error::Cardinality { size: 8, max: 7, .. })
        ));
        v["outer"] = json!({"t": 2, "input_pmf": nest(&[0.125; 8], &[2, 2, 2])});
        let rep = evaluate_region(&RegionConfig::from_json(&v).unwrap()).unwrap();
        let o = rep.outer.unwrap();
        assert!((o.bounds.db_slack - o.db_slack_rewritten).abs() < 1e-12);
        assert!(o.admissible);
    }
}
