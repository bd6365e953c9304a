//! The verification suite: hard invariants that gate the exit code and a
//! reconciliation ledger of every closed form that disagrees with its
//! brute-force counterpart.

use capdist::channel::{axis, build_erasure_mac, policy_joint, ErasureMacParams, PolicyParams};
use capdist::estimation::{
    achievable_cost_table, idealized_cost_oracle, idealized_cost_table, reconcile, ReconciliationRecord, User,
};
use capdist::prob::{Alphabet, JointPmf};
use capdist::regions::{
    achievable_bounds, db_slack_rewritten, f_values_closed, f_values_oracle, outer_bounds, MAX_T,
};
use capdist::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const RANDOM_POINTS: usize = 100;
pub const RANDOM_JOINTS: usize = 1000;
pub const PS_GRID: usize = 101;

#[derive(Debug, Clone, Serialize)]
pub struct HardCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl HardCheck {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        HardCheck {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

/// Summary of one closed-form family.
#[derive(Debug, Clone, Serialize)]
pub struct SoftFamily {
    pub family: String,
    pub compared: usize,
    pub flagged: usize,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub pass: bool,
    pub hard: Vec<HardCheck>,
    pub soft_summary: Vec<SoftFamily>,
    /// Every comparison whose difference exceeds the reconciliation tolerance.
    pub discrepancies: Vec<ReconciliationRecord>,
}

fn ps_grid() -> impl Iterator<Item = f64> {
    (0..PS_GRID).map(|i| i as f64 / (PS_GRID - 1) as f64)
}

fn random_policy(rng: &mut ChaCha8Rng) -> (f64, PolicyParams) {
    let ps = rng.gen();
    let pol = PolicyParams::new(rng.gen(), rng.gen(), rng.gen()).expect("unit interval");
    (ps, pol)
}

fn random_outer_joint(rng: &mut ChaCha8Rng) -> Result<JointPmf> {
    let t = rng.gen_range(1..=MAX_T);
    let w: Vec<f64> = (0..t * 4).map(|_| rng.gen::<f64>()).collect();
    let axes = vec![
        Alphabet::new(axis::T, t)?,
        Alphabet::new(axis::X1, 2)?,
        Alphabet::new(axis::X2, 2)?,
    ];
    let inputs = JointPmf::normalized(axes, |i| w[i[0] * 4 + i[1] * 2 + i[2]])?;
    build_erasure_mac(ErasureMacParams::new(rng.gen())?).induced_joint(&inputs)
}

fn sign(x: f64) -> i8 {
    if x > 1e-12 {
        1
    } else if x < -1e-12 {
        -1
    } else {
        0
    }
}

struct Ledger {
    families: Vec<SoftFamily>,
    flagged: Vec<ReconciliationRecord>,
}

impl Ledger {
    fn add(&mut self, family: &str, records: Vec<ReconciliationRecord>) {
        let f = match self.families.iter_mut().find(|f| f.family == family) {
            Some(f) => f,
            None => {
                self.families.push(SoftFamily {
                    family: family.into(),
                    compared: 0,
                    flagged: 0,
                    max_abs_diff: 0.0,
                });
                self.families.last_mut().unwrap()
            }
        };
        for r in records {
            f.compared += 1;
            f.max_abs_diff = f.max_abs_diff.max(r.abs_diff);
            if r.flag {
                f.flagged += 1;
                self.flagged.push(r);
            }
        }
    }
}

pub fn run_verify(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hard = Vec::new();
    let mut ledger = Ledger {
        families: Vec::new(),
        flagged: Vec::new(),
    };

    // f-block on random points
    let mut f2_max: f64 = 0.0;
    let mut f1_form_max: f64 = 0.0;
    for i in 0..RANDOM_POINTS {
        let (ps, pol) = random_policy(&mut rng);
        let c = f_values_closed(ps, &pol)?;
        let o = f_values_oracle(ps, &pol)?;
        f2_max = f2_max.max((c.f2 - o.f2).abs());
        let b = achievable_bounds(&policy_joint(ps, &pol)?)?;
        f1_form_max = f1_form_max.max((b.fresh_sum + b.coop12 + b.coop21 - o.f1()).abs());
        let at = format!("ps={ps:.6},p={:.6},q={:.6},r={:.6}#{i}", pol.p, pol.q, pol.r);
        ledger.add("f1a", vec![ReconciliationRecord::new(format!("f1a[{at}]"), c.f1a, o.f1a)]);
        ledger.add("f1b", vec![ReconciliationRecord::new(format!("f1b[{at}]"), c.f1b, o.f1b)]);
        ledger.add("f1c", vec![ReconciliationRecord::new(format!("f1c[{at}]"), c.f1c, o.f1c)]);
        let ach = achievable_cost_table(ps, &pol)?;
        let recs = ach
            .records
            .into_iter()
            .map(|mut r| {
                r.cell = format!("{}[{at}]", r.cell);
                r
            })
            .collect();
        ledger.add("achievable_cost", recs);
    }
    hard.push(HardCheck::at_most("f2 closed vs oracle, max abs diff", f2_max, 1e-9));
    hard.push(HardCheck::at_most(
        "f1 vs I(X1X2;Y|SV1V2U) + I(V1;Y|X2U) + I(V2;Y|X1U), max abs diff",
        f1_form_max,
        1e-9,
    ));

    // idealized cost tables on the ps grid
    let mut cell_max: f64 = 0.0;
    let mut c10_max: f64 = 0.0;
    for ps in ps_grid() {
        for user in [User::One, User::Two] {
            let closed = idealized_cost_table(ps, user)?;
            let oracle = idealized_cost_oracle(ps, user)?;
            // the zero cell: user 1 sees x1 = 1, x2 = 0; user 2 the mirror
            let zero = match user {
                User::One => 2,
                User::Two => 1,
            };
            c10_max = c10_max.max(closed.costs()[zero].abs()).max(oracle.costs()[zero].abs());
            for k in 0..3 {
                cell_max = cell_max.max((closed.costs()[k] - oracle.costs()[k]).abs());
            }
            let label = match user {
                User::One => format!("c1@ps={ps:.2}"),
                User::Two => format!("c2@ps={ps:.2}"),
            };
            ledger.add("idealized_cost", reconcile(&label, &closed, &oracle));
        }
    }
    hard.push(HardCheck::at_most("c1(1,0) closed and oracle, max abs", c10_max, 0.0));
    hard.push(HardCheck::at_most(
        "idealized cells (0,0), (0,1), (1,0) closed vs oracle, max abs diff",
        cell_max,
        1e-9,
    ));

    // dependence balance, both forms
    let mut slack_max: f64 = 0.0;
    let mut sign_mismatch = 0usize;
    for _ in 0..RANDOM_JOINTS {
        let j = random_outer_joint(&mut rng)?;
        let a = outer_bounds(&j)?.db_slack;
        let b = db_slack_rewritten(&j)?;
        slack_max = slack_max.max((a - b).abs());
        if sign(a) != sign(b) {
            sign_mismatch += 1;
        }
    }
    hard.push(HardCheck::at_most("db_slack vs rewritten form, max abs diff", slack_max, 1e-9));
    hard.push(HardCheck::at_most(
        "db_slack vs rewritten form, sign mismatches",
        sign_mismatch as f64,
        0.0,
    ));

    // constant auxiliaries collapse to the plain MAC
    let mut plain_max: f64 = 0.0;
    for _ in 0..20 {
        let ps: f64 = rng.gen();
        let w: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
        let mut axes: Vec<Alphabet> = [axis::U, axis::V1, axis::V2]
            .iter()
            .map(|n| Alphabet::new(*n, 1))
            .collect::<Result<_>>()?;
        axes.push(Alphabet::new(axis::X1, 2)?);
        axes.push(Alphabet::new(axis::X2, 2)?);
        let inputs = JointPmf::normalized(axes, |i| w[i[3] * 2 + i[4]])?;
        let j = build_erasure_mac(ErasureMacParams::new(ps)?).induced_joint_output_feedback(&inputs)?;
        let b = achievable_bounds(&j)?;
        let s = [axis::S1, axis::S2];
        let i1 = j.mutual_information(&[axis::X1], &[axis::Y], &[&s[..], &[axis::X2]].concat())?;
        let i2 = j.mutual_information(&[axis::X2], &[axis::Y], &[&s[..], &[axis::X1]].concat())?;
        let isum = j.mutual_information(&[axis::X1, axis::X2], &[axis::Y], &s)?;
        for d in [b.r1 - i1, b.r2 - i2, b.r_sum - isum] {
            plain_max = plain_max.max(d.abs());
        }
    }
    hard.push(HardCheck::at_most(
        "constant auxiliaries vs no-feedback MAC bounds, max abs diff",
        plain_max,
        1e-12,
    ));

    let pass = hard.iter().all(|h| h.pass);
    Ok(VerifyReport {
        seed,
        pass,
        hard,
        soft_summary: ledger.families,
        discrepancies: ledger.flagged,
    })
}
