//! Achievable storage-retrieval schemes for the two-message, two-database
//! system.
//!
//! The pipeline is:
//!
//! 1. [`build_canonical_aux`] — the canonical auxiliary family: deterministic
//!    AND-structured descriptions `X1, X2, Y1, Y2` plus a common description
//!    `X0` whose test channel is parametrized by `p ∈ [0, 1]`;
//! 2. [`corollary1_rates`] — the explicit codebook / retrieval / storage rate
//!    assignment for a factorized scheme;
//! 3. [`theorem1_point`] — normalization to a storage-retrieval pair;
//! 4. [`corollary2_point`] — the closed-form curve, which must agree with the
//!    constructive pipeline;
//! 5. [`verify_scheme_against_theorem1`] — an independent re-check of every
//!    achievability condition (decodability, binned-region membership,
//!    storage branch rules).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::md_region::{mdstar_membership, BinnedRateVector, RateVector, ReconstructionSets};
use crate::probability::{
    entropy_bits, product_from_factorization, Conditional, JointPmf, VarSet, Variable,
};
use crate::tol::Tolerances;

pub const V1: &str = "V1";
pub const V2: &str = "V2";
pub const X0: &str = "X0";
pub const X1: &str = "X1";
pub const X2: &str = "X2";
pub const Y1: &str = "Y1";
pub const Y2: &str = "Y2";

/// The five description names in canonical order.
pub const DESCRIPTIONS: [&str; 5] = [X0, X1, X2, Y1, Y2];

/// A normalized storage-retrieval rate pair in bits per message bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    pub alpha_bar: f64,
    pub beta_bar: f64,
}

impl RatePoint {
    pub fn new(alpha_bar: f64, beta_bar: f64) -> Result<Self> {
        if alpha_bar < 0.0 || beta_bar < 0.0 || !alpha_bar.is_finite() || !beta_bar.is_finite() {
            return Err(Error::Param(format!(
                "rate point must be nonnegative, got ({alpha_bar}, {beta_bar})"
            )));
        }
        Ok(Self {
            alpha_bar,
            beta_bar,
        })
    }
}

/// Rates for the five descriptions: the common one (`X0`), the two held by
/// database 1 (`X1`, `X2`) and the two held by database 2 (`Y1`, `Y2`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DescRateSet {
    pub common: f64,
    pub db1: [f64; 2],
    pub db2: [f64; 2],
}

impl DescRateSet {
    pub fn sum(&self) -> f64 {
        self.common + self.db1[0] + self.db1[1] + self.db2[0] + self.db2[1]
    }

    pub fn by_name(&self, name: &str) -> Option<f64> {
        match name {
            X0 => Some(self.common),
            X1 => Some(self.db1[0]),
            X2 => Some(self.db1[1]),
            Y1 => Some(self.db2[0]),
            Y2 => Some(self.db2[1]),
            _ => None,
        }
    }

    fn to_rate_vector(self) -> RateVector {
        RateVector::of(
            DESCRIPTIONS
                .iter()
                .map(|&d| (d, self.by_name(d).unwrap().max(0.0))),
        )
        .expect("nonnegative rates")
    }
}

/// The full rate assignment of a scheme: codebook rates, retrieval bin rates
/// and storage bin rates, componentwise `storage <= retrieval <= codebook`
/// where paired.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DescriptionRates {
    pub codebook: DescRateSet,
    pub retrieval: DescRateSet,
    pub storage: DescRateSet,
}

impl DescriptionRates {
    /// Checks the componentwise ordering invariant.
    pub fn ordered_within(&self, tol: f64) -> bool {
        DESCRIPTIONS.iter().all(|&d| {
            let a = self.storage.by_name(d).unwrap();
            let b = self.retrieval.by_name(d).unwrap();
            let g = self.codebook.by_name(d).unwrap();
            a <= b + tol && b <= g + tol && a >= -tol
        })
    }
}

/// An auxiliary-variable scheme: block parameter `t` and the five conditional
/// distributions of the descriptions given the message symbols `(V1, V2)`.
///
/// Construction validates shape and row sums only; decodability is checked by
/// [`AuxScheme::check_decodability`] and enforced by the operations that need
/// it, so that deliberately broken schemes can still be built and verified.
#[derive(Clone, Debug)]
pub struct AuxScheme {
    t: u32,
    joint: JointPmf,
}

impl AuxScheme {
    /// Builds a scheme from the five conditionals, in the order
    /// `X0, X1, X2, Y1, Y2`. The base is uniform over `(V1, V2)` with
    /// per-coordinate alphabet `2^t`.
    pub fn new(t: u32, conditionals: [Conditional; 5]) -> Result<Self> {
        if t == 0 {
            return Err(Error::Param("block parameter t must be positive".into()));
        }
        let side = 1usize << t;
        let base = JointPmf::uniform(vec![Variable::new(V1, side), Variable::new(V2, side)])?;
        for (c, want) in conditionals.iter().zip(DESCRIPTIONS) {
            if c.variable().name != want {
                return Err(Error::Factorization(format!(
                    "conditional order must be {DESCRIPTIONS:?}, found `{}`",
                    c.variable().name
                )));
            }
        }
        let joint = product_from_factorization(&base, &conditionals)?;
        Ok(Self { t, joint })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// The induced joint over `(V1, V2, X0, X1, X2, Y1, Y2)`.
    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    /// The four decodability requirements, as (target, given) pairs.
    pub fn decoding_requirements() -> [(&'static str, [&'static str; 3]); 4] {
        [
            (V1, [X0, X1, Y1]),
            (V1, [X0, X2, Y2]),
            (V2, [X0, X1, Y2]),
            (V2, [X0, X2, Y1]),
        ]
    }

    /// Exact check that each message symbol is a deterministic function of
    /// its retrieval patterns. Returns the first violated pattern.
    pub fn check_decodability(&self) -> std::result::Result<(), String> {
        for (target, given) in Self::decoding_requirements() {
            let ok = self
                .joint
                .deterministic_function(&VarSet::of([target]), &VarSet::of(given))
                .map_err(|e| e.to_string())?
                .is_some();
            if !ok {
                return Err(format!("{target} is not a function of {given:?}"));
            }
        }
        Ok(())
    }
}

fn rational_in_unit(p: &BigRational) -> Result<()> {
    if p < &BigRational::zero() || p > &BigRational::one() {
        return Err(Error::Param(format!("p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Builds the canonical scheme at `t = 1`: the AND-structured deterministic
/// descriptions plus the `X0` test channel with parameter `p`.
///
/// `X0` takes values in `{0..4}` encoding the pairs `(00), (01), (10), (11)`;
/// its rows are `[1/2, 0, 0, 1/2]` for equal message bits and
/// `[(1-p)/2, p or 0, 0 or p, (1-p)/2]` for the mixed ones.
pub fn build_canonical_aux(p: &BigRational) -> Result<AuxScheme> {
    rational_in_unit(p)?;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let rest = (BigRational::one() - p) * &half;

    let tuples: Vec<Vec<u8>> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
    let x0_row = |v1: u8, v2: u8| -> Vec<BigRational> {
        let zero = BigRational::zero;
        match (v1, v2) {
            (0, 0) | (1, 1) => vec![half.clone(), zero(), zero(), half.clone()],
            (1, 0) => vec![rest.clone(), p.clone(), zero(), rest.clone()],
            (0, 1) => vec![rest.clone(), zero(), p.clone(), rest.clone()],
            _ => unreachable!(),
        }
    };
    let x0 = Conditional::new(
        Variable::new(X0, 4),
        tuples.iter().map(|t| (t.clone(), x0_row(t[0], t[1]))),
    )?;
    let det = |name: &str, f: fn(&[u8]) -> u8| {
        Conditional::deterministic(Variable::new(name, 2), tuples.clone(), f)
    };
    let x1 = det(X1, |t| t[0] & t[1])?;
    let x2 = det(X2, |t| (1 - t[0]) & (1 - t[1]))?;
    let y1 = det(Y1, |t| t[0] & (1 - t[1]))?;
    let y2 = det(Y2, |t| (1 - t[0]) & t[1])?;

    AuxScheme::new(1, [x0, x1, x2, y1, y2])
}

/// [`build_canonical_aux`] for a float `p`, converted exactly.
pub fn build_canonical_aux_f64(p: f64) -> Result<AuxScheme> {
    let r =
        BigRational::from_f64(p).ok_or_else(|| Error::Param(format!("p = {p} is not finite")))?;
    build_canonical_aux(&r)
}

/// The joint over `(V1, V2, X1, X2, Y1, Y2)` of the deterministic structure
/// alone, without the common description.
pub fn canonical_base_joint() -> JointPmf {
    let base =
        JointPmf::uniform(vec![Variable::new(V1, 2), Variable::new(V2, 2)]).expect("tiny alphabet");
    let tuples: Vec<Vec<u8>> = base.support().map(|(t, _)| t.to_vec()).collect();
    let det = |name: &str, f: fn(&[u8]) -> u8| {
        Conditional::deterministic(Variable::new(name, 2), tuples.clone(), f)
            .expect("deterministic rows")
    };
    let conds = [
        det(X1, |t| t[0] & t[1]),
        det(X2, |t| (1 - t[0]) & (1 - t[1])),
        det(Y1, |t| t[0] & (1 - t[1])),
        det(Y2, |t| (1 - t[0]) & t[1]),
    ];
    product_from_factorization(&base, &conds).expect("valid factorization")
}

/// Helper bundle of the entropic quantities the rate assignment needs.
struct SchemeInfo<'a> {
    joint: &'a JointPmf,
    v: VarSet,
}

impl<'a> SchemeInfo<'a> {
    fn new(joint: &'a JointPmf) -> Self {
        Self {
            joint,
            v: VarSet::of([V1, V2]),
        }
    }

    fn h(&self, vars: &[&str]) -> Result<f64> {
        self.joint.entropy(&VarSet::of(vars.iter().copied()))
    }

    fn h_cond(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        self.joint.conditional_entropy(
            &VarSet::of(target.iter().copied()),
            &VarSet::of(given.iter().copied()),
        )
    }

    fn i_v(&self, target: &str, given: &[&str]) -> Result<f64> {
        let g = if given.is_empty() {
            None
        } else {
            Some(VarSet::of(given.iter().copied()))
        };
        self.joint
            .mutual_information(&self.v, &VarSet::of([target]), g.as_ref())
    }

    fn i(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        self.joint.mutual_information(
            &VarSet::of(a.iter().copied()),
            &VarSet::of(b.iter().copied()),
            None,
        )
    }
}

/// Maximizes the total binning surplus `s_1 + s_2` of two descriptions
/// subject to per-description caps and a pair cap, with lower bounds from the
/// retrieval rates. Returns the chosen `(s_1, s_2)`, splitting the spare
/// surplus evenly.
fn split_surplus(l: [f64; 2], u: [f64; 2], pair_cap: f64) -> [f64; 2] {
    let total = pair_cap.min(u[0] + u[1]).max(l[0] + l[1]);
    let mut s = [0.0; 2];
    let spare = (total - l[0] - l[1]).max(0.0) / 2.0;
    s[0] = (l[0] + spare).min(u[0]);
    s[1] = (total - s[0]).min(u[1]).max(l[1]);
    // re-balance if the second hit its cap
    s[0] = (total - s[1]).clamp(l[0], u[0]);
    s
}

/// The explicit rate assignment for a factorized scheme.
///
/// Codebook rates are `I(V1,V2; U)` per description; retrieval rates bin the
/// database-1 descriptions against `X0` and the database-2 descriptions
/// against the worst of the two side-information patterns. Storage rates
/// recompress each database's descriptions when the binning surplus leaves
/// room below the joint redundancy of that database's descriptions, otherwise
/// they equal the retrieval rates.
pub fn corollary1_rates(scheme: &AuxScheme) -> Result<DescriptionRates> {
    scheme.check_decodability().map_err(Error::Decodability)?;
    let info = SchemeInfo::new(scheme.joint());

    let codebook = DescRateSet {
        common: info.i_v(X0, &[])?,
        db1: [info.i_v(X1, &[])?, info.i_v(X2, &[])?],
        db2: [info.i_v(Y1, &[])?, info.i_v(Y2, &[])?],
    };

    let retrieval = DescRateSet {
        common: codebook.common,
        db1: [info.i_v(X1, &[X0])?, info.i_v(X2, &[X0])?],
        db2: [
            info.i_v(Y1, &[X0, X1])?.max(info.i_v(Y1, &[X0, X2])?),
            info.i_v(Y2, &[X0, X1])?.max(info.i_v(Y2, &[X0, X2])?),
        ],
    };

    // database-1 storage: recompress when the retrieval surplus is below the
    // joint redundancy of (X0, X1, X2)
    let lhs_x = (codebook.common - retrieval.common)
        + (codebook.db1[0] - retrieval.db1[0])
        + (codebook.db1[1] - retrieval.db1[1]);
    let rhs_x = info.h(&[X0])? + info.h(&[X1])? + info.h(&[X2])? - info.h(&[X0, X1, X2])?;
    let db1_storage = if lhs_x < rhs_x {
        // X0 stays unbinned; maximize the joint surplus of X1, X2 inside the
        // single-reconstruction-set binned region of ((V1,V2), X0, X1, X2)
        let u = [
            (info.h(&[X1])? - info.h_cond(&[X1], &[X0, X2])?)
                .min(info.h(&[X0])? + info.h(&[X1])? - info.h_cond(&[X0, X1], &[X2])?),
            (info.h(&[X2])? - info.h_cond(&[X2], &[X0, X1])?)
                .min(info.h(&[X0])? + info.h(&[X2])? - info.h_cond(&[X0, X2], &[X1])?),
        ];
        let pair_cap = info.h(&[X1])? + info.h(&[X2])? - info.h_cond(&[X1, X2], &[X0])?;
        let l = [
            codebook.db1[0] - retrieval.db1[0],
            codebook.db1[1] - retrieval.db1[1],
        ];
        let s = split_surplus(l, u, pair_cap);
        [codebook.db1[0] - s[0], codebook.db1[1] - s[1]]
    } else {
        retrieval.db1
    };

    // database-2 storage: recompress when the surplus is below I(Y1; Y2)
    let lhs_y = (codebook.db2[0] - retrieval.db2[0]) + (codebook.db2[1] - retrieval.db2[1]);
    let rhs_y = info.i(&[Y1], &[Y2])?;
    let db2_storage = if lhs_y < rhs_y {
        let u = [
            info.h(&[Y1])? - info.h_cond(&[Y1], &[Y2])?,
            info.h(&[Y2])? - info.h_cond(&[Y2], &[Y1])?,
        ];
        let pair_cap = info.h(&[Y1])? + info.h(&[Y2])? - info.h(&[Y1, Y2])?;
        let l = [
            codebook.db2[0] - retrieval.db2[0],
            codebook.db2[1] - retrieval.db2[1],
        ];
        let s = split_surplus(l, u, pair_cap);
        [codebook.db2[0] - s[0], codebook.db2[1] - s[1]]
    } else {
        retrieval.db2
    };

    let storage = DescRateSet {
        common: codebook.common,
        db1: db1_storage,
        db2: db2_storage,
    };

    Ok(DescriptionRates {
        codebook,
        retrieval,
        storage,
    })
}

/// Normalizes a rate assignment to a storage-retrieval point, evaluating the
/// achievability inequalities at equality:
/// `alpha_bar = Σ storage / 2t`, `beta_bar = (2·common + Σ rest) / 4t`.
pub fn theorem1_point(scheme: &AuxScheme, rates: &DescriptionRates) -> RatePoint {
    let t = scheme.t() as f64;
    let alpha = rates.storage.sum() / (2.0 * t);
    let r = &rates.retrieval;
    let beta = (2.0 * r.common + r.db1[0] + r.db1[1] + r.db2[0] + r.db2[1]) / (4.0 * t);
    RatePoint {
        alpha_bar: alpha,
        beta_bar: beta,
    }
}

/// The closed-form tradeoff point at parameter `p`.
pub fn corollary2_point(p: f64) -> Result<RatePoint> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("p = {p} outside [0, 1]")));
    }
    let h = entropy_bits;
    let alpha = 9.0 / 4.0 - h(&[0.25, 0.75])
        + 0.25 * h(&[(1.0 - p) / 2.0, (1.0 - p) / 2.0, p / 2.0, p / 2.0])
        + 0.5 * h(&[(2.0 - p) / 4.0, (2.0 - p) / 4.0, p / 2.0])
        - 0.75
            * h(&[
                (3.0 - 2.0 * p) / 6.0,
                (3.0 - 2.0 * p) / 6.0,
                p / 3.0,
                p / 3.0,
            ]);
    let beta = 5.0 / 8.0 + 0.25 * h(&[(2.0 - p) / 4.0, (2.0 - p) / 4.0, p / 2.0])
        - 0.125 * h(&[(1.0 - p) / 2.0, (1.0 - p) / 2.0, p]);
    RatePoint::new(alpha, beta)
}

/// Per-database components of the minimum-retrieval-rate point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Section3Point {
    pub point: RatePoint,
    /// Database-1 storage component `H(X1, X2)`.
    pub alpha1: f64,
    /// Database-2 storage component `2 H(Y1 | X1)`.
    pub alpha2: f64,
    /// Database-1 per-query retrieval `H(X1)`.
    pub beta1: f64,
    /// Database-2 per-query retrieval `H(Y1 | X1)`.
    pub beta2: f64,
}

/// The minimum-retrieval-rate extreme point, computed from the deterministic
/// joint (never from hardcoded constants).
pub fn section3_point() -> Section3Point {
    let joint = canonical_base_joint();
    let h_pair = joint
        .entropy(&VarSet::of([X1, X2]))
        .expect("known variables");
    let h_y_given_x = joint
        .conditional_entropy(&VarSet::of([Y1]), &VarSet::of([X1]))
        .expect("known variables");
    let h_x1 = joint.entropy(&VarSet::of([X1])).expect("known variables");
    let alpha1 = h_pair;
    let alpha2 = 2.0 * h_y_given_x;
    Section3Point {
        point: RatePoint {
            alpha_bar: 0.5 * (alpha1 + alpha2),
            beta_bar: 0.5 * (h_x1 + h_y_given_x),
        },
        alpha1,
        alpha2,
        beta1: h_x1,
        beta2: h_y_given_x,
    }
}

/// One checked achievability condition.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub pass: bool,
    /// Worst slack observed for the condition, when meaningful.
    pub slack: Option<f64>,
    pub detail: String,
}

/// Verification report for a scheme and rate assignment.
#[derive(Clone, Debug, Serialize)]
pub struct SchemeReport {
    pub pass: bool,
    pub conditions: Vec<ConditionCheck>,
    pub notes: Vec<String>,
}

/// The four reconstruction sets used by the retrieval phase.
pub fn retrieval_reconstruction_sets() -> ReconstructionSets {
    ReconstructionSets::new(vec![
        VarSet::of([X0, X1, Y1]),
        VarSet::of([X0, X1, Y2]),
        VarSet::of([X0, X2, Y1]),
        VarSet::of([X0, X2, Y2]),
    ])
    .expect("nonempty sets")
}

/// Re-checks a scheme and rate assignment against every achievability
/// condition: decodability, binned-region membership of the retrieval rates
/// with the four reconstruction sets, the componentwise rate ordering, and
/// the storage branch rules.
pub fn verify_scheme_against_theorem1(
    scheme: &AuxScheme,
    rates: &DescriptionRates,
    tol: Tolerances,
) -> Result<SchemeReport> {
    let joint = scheme.joint();
    let info = SchemeInfo::new(joint);
    let mut conditions = Vec::new();

    // (i) decodability
    let decod = scheme.check_decodability();
    conditions.push(ConditionCheck {
        name: "decodability".into(),
        pass: decod.is_ok(),
        slack: None,
        detail: match &decod {
            Ok(()) => "all four retrieval patterns determine their message".into(),
            Err(e) => e.clone(),
        },
    });

    // (ii) (retrieval, codebook) in the binned region with the four sets
    let beta_gamma = BinnedRateVector::new(
        rates.retrieval.to_rate_vector(),
        rates.codebook.to_rate_vector(),
    )?;
    let membership = mdstar_membership(
        joint,
        &DESCRIPTIONS,
        &retrieval_reconstruction_sets(),
        &beta_gamma,
        tol,
    )?;
    let worst = membership
        .slacks
        .iter()
        .map(|v| v.slack)
        .fold(f64::INFINITY, f64::min);
    conditions.push(ConditionCheck {
        name: "retrieval-binning membership".into(),
        pass: membership.member,
        slack: Some(worst),
        detail: match membership.violations.first() {
            None => "all binning-surplus constraints hold".into(),
            Some(v) => format!(
                "violated: set {:?}, subset {:?}, bound {:.6}, value {:.6}",
                v.set, v.subset, v.bound, v.value
            ),
        },
    });

    // (iii) componentwise ordering storage <= retrieval <= codebook
    let ordered = rates.ordered_within(tol.slack);
    conditions.push(ConditionCheck {
        name: "rate ordering".into(),
        pass: ordered,
        slack: None,
        detail: "storage <= retrieval <= codebook componentwise".into(),
    });

    // (iv) storage branch, database 1
    let lhs_x = (rates.codebook.common - rates.retrieval.common)
        + (rates.codebook.db1[0] - rates.retrieval.db1[0])
        + (rates.codebook.db1[1] - rates.retrieval.db1[1]);
    let rhs_x = info.h(&[X0])? + info.h(&[X1])? + info.h(&[X2])? - info.h(&[X0, X1, X2])?;
    let (x_pass, x_detail, x_slack) = if lhs_x < rhs_x {
        let storage_rates = RateVector::of([
            (X0, rates.storage.common.max(0.0)),
            (X1, rates.storage.db1[0].max(0.0)),
            (X2, rates.storage.db1[1].max(0.0)),
        ])?;
        let codebook_rates = RateVector::of([
            (X0, rates.codebook.common.max(0.0)),
            (X1, rates.codebook.db1[0].max(0.0)),
            (X2, rates.codebook.db1[1].max(0.0)),
        ])?;
        let sub_joint = joint.marginal(&VarSet::of([V1, V2, X0, X1, X2]))?;
        let m = mdstar_membership(
            &sub_joint,
            &[X0, X1, X2],
            &ReconstructionSets::new(vec![VarSet::of([X0, X1, X2])])?,
            &BinnedRateVector::new(storage_rates, codebook_rates)?,
            tol,
        )?;
        let worst = m
            .slacks
            .iter()
            .map(|v| v.slack)
            .fold(f64::INFINITY, f64::min);
        (
            m.member,
            format!(
                "surplus {lhs_x:.6} < redundancy {rhs_x:.6}: storage recompressed, \
                 membership {}",
                if m.member { "holds" } else { "fails" }
            ),
            Some(worst),
        )
    } else {
        let same = (rates.storage.db1[0] - rates.retrieval.db1[0]).abs() <= tol.slack
            && (rates.storage.db1[1] - rates.retrieval.db1[1]).abs() <= tol.slack;
        (
            same,
            format!("surplus {lhs_x:.6} >= redundancy {rhs_x:.6}: storage equals retrieval"),
            None,
        )
    };
    conditions.push(ConditionCheck {
        name: "storage branch, database 1".into(),
        pass: x_pass,
        slack: x_slack,
        detail: x_detail,
    });

    // (v) storage branch, database 2
    let lhs_y = (rates.codebook.db2[0] - rates.retrieval.db2[0])
        + (rates.codebook.db2[1] - rates.retrieval.db2[1]);
    let rhs_y = info.i(&[Y1], &[Y2])?;
    let (y_pass, y_detail, y_slack) = if lhs_y < rhs_y {
        let storage_rates = RateVector::of([
            (Y1, rates.storage.db2[0].max(0.0)),
            (Y2, rates.storage.db2[1].max(0.0)),
        ])?;
        let codebook_rates = RateVector::of([
            (Y1, rates.codebook.db2[0].max(0.0)),
            (Y2, rates.codebook.db2[1].max(0.0)),
        ])?;
        let sub_joint = joint.marginal(&VarSet::of([V1, V2, Y1, Y2]))?;
        let m = mdstar_membership(
            &sub_joint,
            &[Y1, Y2],
            &ReconstructionSets::new(vec![VarSet::of([Y1, Y2])])?,
            &BinnedRateVector::new(storage_rates, codebook_rates)?,
            tol,
        )?;
        let worst = m
            .slacks
            .iter()
            .map(|v| v.slack)
            .fold(f64::INFINITY, f64::min);
        (
            m.member,
            format!(
                "surplus {lhs_y:.6} < I(Y1;Y2) = {rhs_y:.6}: storage recompressed, \
                 membership {}",
                if m.member { "holds" } else { "fails" }
            ),
            Some(worst),
        )
    } else {
        let same = (rates.storage.db2[0] - rates.retrieval.db2[0]).abs() <= tol.slack
            && (rates.storage.db2[1] - rates.retrieval.db2[1]).abs() <= tol.slack;
        (
            same,
            format!("surplus {lhs_y:.6} >= I(Y1;Y2) = {rhs_y:.6}: storage equals retrieval"),
            None,
        )
    };
    conditions.push(ConditionCheck {
        name: "storage branch, database 2".into(),
        pass: y_pass,
        slack: y_slack,
        detail: y_detail,
    });

    Ok(SchemeReport {
        pass: conditions.iter().all(|c| c.pass),
        conditions,
        notes: vec![
            "database-1 recompression threshold reads the three stored variables \
             as X0, X1, X2"
                .into(),
            "the no-recompression branch for database 2 sets its storage rates \
             equal to its own retrieval rates"
                .into(),
        ],
    })
}

/// One traced point of the closed-form curve.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TracePoint {
    pub p: f64,
    pub alpha_bar: f64,
    pub beta_bar: f64,
    /// Storage rate of the space-sharing chord at this point's `beta_bar`.
    pub chord_alpha: f64,
    /// Whether the traced point lies strictly below the chord.
    pub below_spaceshare: bool,
}

/// Evaluates the closed form on a grid and annotates each point with the
/// space-sharing comparison against the chord between the two endpoints.
pub fn trace_curve(grid: &[f64]) -> Result<Vec<TracePoint>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let lo = corollary2_point(0.0)?;
    let hi = corollary2_point(1.0)?;
    let chord = |beta: f64| -> f64 {
        lo.alpha_bar
            + (beta - lo.beta_bar) / (hi.beta_bar - lo.beta_bar) * (hi.alpha_bar - lo.alpha_bar)
    };
    let mut out = Vec::with_capacity(grid.len());
    for &p in grid {
        let pt = corollary2_point(p)?;
        let chord_alpha = chord(pt.beta_bar);
        out.push(TracePoint {
            p,
            alpha_bar: pt.alpha_bar,
            beta_bar: pt.beta_bar,
            chord_alpha,
            below_spaceshare: pt.alpha_bar < chord_alpha,
        });
    }
    Ok(out)
}

/// Golden-section refinement of the largest space-sharing gap
/// `chord_alpha(beta(p)) - alpha(p)` on `[lo, hi]`. The gap is smooth and
/// single-peaked on the traced family.
pub fn refine_max_gap(lo: f64, hi: f64, iterations: u32) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(Error::Param(format!("bad refinement range [{lo}, {hi}]")));
    }
    let end_lo = corollary2_point(0.0)?;
    let end_hi = corollary2_point(1.0)?;
    let gap = |p: f64| -> Result<f64> {
        let pt = corollary2_point(p)?;
        let chord = end_lo.alpha_bar
            + (pt.beta_bar - end_lo.beta_bar) / (end_hi.beta_bar - end_lo.beta_bar)
                * (end_hi.alpha_bar - end_lo.alpha_bar);
        Ok(chord - pt.alpha_bar)
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (gap(c)?, gap(d)?);
    for _ in 0..iterations {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = gap(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = gap(d)?;
        }
    }
    let p = 0.5 * (a + b);
    Ok((p, gap(p)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outer_bound;

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn canonical_scheme_structure() {
        // p = 0: X0 independent of the messages, uniform on {(00), (11)}
        let scheme = build_canonical_aux(&rat(0, 1)).unwrap();
        let x0 = scheme.joint().marginal(&VarSet::of([X0])).unwrap();
        assert_eq!(x0.mass_of(&[0]), rat(1, 2));
        assert_eq!(x0.mass_of(&[3]), rat(1, 2));
        let i = scheme
            .joint()
            .mutual_information(&VarSet::of([V1, V2]), &VarSet::of([X0]), None)
            .unwrap();
        assert!(i.abs() < 1e-12);

        // p = 1, (V1,V2) = (1,0): X0 = (01) with probability one
        let scheme = build_canonical_aux(&rat(1, 1)).unwrap();
        let m = scheme.joint().marginal(&VarSet::of([V1, V2, X0])).unwrap();
        assert_eq!(m.mass_of(&[1, 0, 1]), rat(1, 4));
        assert_eq!(m.mass_of(&[1, 0, 0]), rat(0, 1));

        // V1 recoverable from (X1, Y1) alone, any p
        for p in [rat(0, 1), rat(1, 3), rat(1, 1)] {
            let scheme = build_canonical_aux(&p).unwrap();
            let t = scheme
                .joint()
                .deterministic_function(&VarSet::of([V1]), &VarSet::of([X1, Y1]))
                .unwrap();
            assert!(t.is_some(), "V1 not recoverable at p = {p}");
        }

        // p outside [0, 1] rejected
        assert!(build_canonical_aux(&rat(3, 2)).is_err());
        assert!(build_canonical_aux_f64(-0.1).is_err());
    }

    #[test]
    fn decodability_exact_for_rational_p() {
        for p in [rat(0, 1), rat(1, 2), rat(1, 1)] {
            let scheme = build_canonical_aux(&p).unwrap();
            for (target, given) in AuxScheme::decoding_requirements() {
                let h = scheme
                    .joint()
                    .conditional_entropy(&VarSet::of([target]), &VarSet::of(given))
                    .unwrap();
                assert_eq!(h, 0.0, "H({target}|{given:?}) != 0 at p = {p}");
            }
        }
    }

    #[test]
    fn decode_table_ignores_common_description() {
        // the induced lookup for V1 given (X0, X1, Y1) realizes V1 = X1 | Y1
        // with the X0 coordinate immaterial, at any p
        let scheme = build_canonical_aux(&rat(1, 3)).unwrap();
        let table = scheme
            .joint()
            .deterministic_function(&VarSet::of([V1]), &VarSet::of([X0, X1, Y1]))
            .unwrap()
            .expect("decodable");
        for (given, target) in &table {
            // sorted name order: X0, X1, Y1
            assert_eq!(target[0], given[1] | given[2]);
        }
    }

    #[test]
    fn rates_at_p_zero() {
        let scheme = build_canonical_aux(&rat(0, 1)).unwrap();
        let rates = corollary1_rates(&scheme).unwrap();
        assert!(rates.codebook.common.abs() < 1e-12);
        assert!(rates.retrieval.common.abs() < 1e-12);
        assert!((rates.retrieval.db1[0] - 0.811278).abs() < 1e-6);
        assert!((rates.retrieval.db2[0] - 0.688722).abs() < 1e-6);
        // storage equals retrieval on database 2 for the canonical family
        assert!((rates.storage.db2[0] - rates.retrieval.db2[0]).abs() < 1e-12);
        assert!((rates.storage.db2[1] - rates.retrieval.db2[1]).abs() < 1e-12);
    }

    #[test]
    fn alpha2_equals_beta2_for_all_p() {
        for i in 0..=4 {
            let scheme = build_canonical_aux(&rat(i, 4)).unwrap();
            let rates = corollary1_rates(&scheme).unwrap();
            assert!((rates.storage.db2[0] - rates.retrieval.db2[0]).abs() < 1e-12);
            assert!((rates.storage.db2[1] - rates.retrieval.db2[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn theorem1_point_values() {
        // all-zero rates normalize to the origin
        let scheme = build_canonical_aux(&rat(0, 1)).unwrap();
        let zero = DescriptionRates {
            codebook: DescRateSet::default(),
            retrieval: DescRateSet::default(),
            storage: DescRateSet::default(),
        };
        let pt = theorem1_point(&scheme, &zero);
        assert_eq!(pt.alpha_bar, 0.0);
        assert_eq!(pt.beta_bar, 0.0);

        // canonical p = 0 reproduces the minimum-retrieval point
        let rates = corollary1_rates(&scheme).unwrap();
        let pt = theorem1_point(&scheme, &rates);
        assert!((pt.alpha_bar - (0.25 + 0.75 * 3f64.log2())).abs() < 1e-9);
        assert!((pt.beta_bar - 0.75).abs() < 1e-9);

        // canonical p = 1 lands on (1, 1)
        let scheme = build_canonical_aux(&rat(1, 1)).unwrap();
        let rates = corollary1_rates(&scheme).unwrap();
        let pt = theorem1_point(&scheme, &rates);
        assert!((pt.alpha_bar - 1.0).abs() < 1e-9);
        assert!((pt.beta_bar - 1.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_endpoints_and_midpoint() {
        let p0 = corollary2_point(0.0).unwrap();
        assert!((p0.alpha_bar - 1.438722).abs() < 1e-6);
        assert!((p0.beta_bar - 0.75).abs() < 1e-12);
        let p1 = corollary2_point(1.0).unwrap();
        assert!((p1.alpha_bar - 1.0).abs() < 1e-12);
        assert!((p1.beta_bar - 1.0).abs() < 1e-12);
        // midpoint against the entropy-oracle evaluation
        let h = |m: &[f64]| -> f64 { m.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum() };
        let alpha = 2.25 - h(&[0.25, 0.75])
            + 0.25 * h(&[0.25, 0.25, 0.25, 0.25])
            + 0.5 * h(&[0.375, 0.375, 0.25])
            - 0.75 * h(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]);
        let beta = 0.625 + 0.25 * h(&[0.375, 0.375, 0.25]) - 0.125 * h(&[0.25, 0.25, 0.5]);
        let mid = corollary2_point(0.5).unwrap();
        assert!((mid.alpha_bar - alpha).abs() < 1e-12);
        assert!((mid.beta_bar - beta).abs() < 1e-12);
        assert!((mid.alpha_bar - 1.280639).abs() < 1e-6);
        assert!((mid.beta_bar - 0.827820).abs() < 1e-6);
        assert!(corollary2_point(1.25).is_err());
    }

    #[test]
    fn closed_form_matches_constructive_pipeline() {
        for i in 0..=20 {
            let scheme = build_canonical_aux(&rat(i, 20)).unwrap();
            let rates = corollary1_rates(&scheme).unwrap();
            let constructive = theorem1_point(&scheme, &rates);
            let closed = corollary2_point(i as f64 / 20.0).unwrap();
            assert!(
                (constructive.alpha_bar - closed.alpha_bar).abs() < 1e-9,
                "alpha mismatch at p = {i}/20: {} vs {}",
                constructive.alpha_bar,
                closed.alpha_bar
            );
            assert!(
                (constructive.beta_bar - closed.beta_bar).abs() < 1e-9,
                "beta mismatch at p = {i}/20"
            );
            assert!(rates.ordered_within(1e-12));
        }
    }

    #[test]
    fn section3_matches_closed_form_at_zero() {
        let s3 = section3_point();
        assert!((s3.point.beta_bar - 0.75).abs() < 1e-12);
        assert!((s3.point.alpha_bar - (0.25 + 0.75 * 3f64.log2())).abs() < 1e-9);
        assert!((s3.alpha1 - 1.5).abs() < 1e-12);
        let p0 = corollary2_point(0.0).unwrap();
        assert!((s3.point.alpha_bar - p0.alpha_bar).abs() < 1e-9);
        assert!((s3.point.beta_bar - p0.beta_bar).abs() < 1e-9);
    }

    #[test]
    fn verification_passes_for_canonical_family() {
        let tol = Tolerances::default();
        for i in 0..=4 {
            let scheme = build_canonical_aux(&rat(i, 4)).unwrap();
            let rates = corollary1_rates(&scheme).unwrap();
            let report = verify_scheme_against_theorem1(&scheme, &rates, tol).unwrap();
            assert!(
                report.pass,
                "verification failed at p = {i}/4: {:?}",
                report
                    .conditions
                    .iter()
                    .filter(|c| !c.pass)
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn verification_rejects_broken_scheme() {
        // constant X0, X1, X2 with deterministic Ys: V1 cannot be a function
        // of (X0, X1, Y1) because Y1 alone does not carry V1
        let tuples: Vec<Vec<u8>> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let constant = |name: &str, size: usize| {
            Conditional::deterministic(Variable::new(name, size), tuples.clone(), |_| 0).unwrap()
        };
        let det = |name: &str, f: fn(&[u8]) -> u8| {
            Conditional::deterministic(Variable::new(name, 2), tuples.clone(), f).unwrap()
        };
        let scheme = AuxScheme::new(
            1,
            [
                constant(X0, 4),
                constant(X1, 2),
                constant(X2, 2),
                det(Y1, |t| t[0] & (1 - t[1])),
                det(Y2, |t| (1 - t[0]) & t[1]),
            ],
        )
        .unwrap();
        assert!(scheme.check_decodability().is_err());
        assert!(corollary1_rates(&scheme).is_err());
        let zero = DescriptionRates {
            codebook: DescRateSet::default(),
            retrieval: DescRateSet::default(),
            storage: DescRateSet::default(),
        };
        let report = verify_scheme_against_theorem1(&scheme, &zero, Tolerances::default()).unwrap();
        assert!(!report.pass);
        assert!(!report.conditions[0].pass, "decodability should fail");
    }

    #[test]
    fn verification_names_violated_constraint_on_perturbation() {
        let tol = Tolerances::default();
        let scheme = build_canonical_aux(&rat(1, 2)).unwrap();
        let mut rates = corollary1_rates(&scheme).unwrap();
        rates.retrieval.db2[0] -= 0.1;
        let report = verify_scheme_against_theorem1(&scheme, &rates, tol).unwrap();
        let cond = report
            .conditions
            .iter()
            .find(|c| c.name == "retrieval-binning membership")
            .unwrap();
        assert!(!cond.pass);
        assert!(cond.detail.contains("violated"));
    }

    #[test]
    fn trace_curve_shape() {
        // two-point grid gives the endpoints, neither below their own chord
        let two = trace_curve(&[0.0, 1.0]).unwrap();
        assert!((two[0].alpha_bar - 1.438722).abs() < 1e-6);
        assert!((two[1].alpha_bar - 1.0).abs() < 1e-12);
        assert!(!two[0].below_spaceshare);
        assert!(!two[1].below_spaceshare);

        // midpoint strictly below the chord by about 0.0215
        let mid = trace_curve(&[0.5]).unwrap()[0];
        assert!(mid.below_spaceshare);
        assert!((mid.chord_alpha - 1.302157).abs() < 1e-5);
        assert!((mid.chord_alpha - mid.alpha_bar - 0.021518).abs() < 1e-5);
        assert!(mid.chord_alpha - mid.alpha_bar > 0.02);

        // beta_bar nondecreasing in p along a 101-point grid, and every point
        // passes the outer bounds
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let pts = trace_curve(&grid).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].beta_bar >= w[0].beta_bar - 1e-12);
        }
        for pt in &pts {
            let report = outer_bound::check_outer(
                RatePoint {
                    alpha_bar: pt.alpha_bar,
                    beta_bar: pt.beta_bar,
                },
                Tolerances::default(),
            );
            assert!(report.pass, "outer bound violated at p = {}", pt.p);
        }
        assert!(trace_curve(&[]).is_err());
    }

    #[test]
    fn golden_section_finds_interior_gap() {
        let (p_star, gap) = refine_max_gap(0.05, 0.95, 40).unwrap();
        assert!(p_star > 0.1 && p_star < 0.9);
        assert!(gap > 0.02);
    }
}
