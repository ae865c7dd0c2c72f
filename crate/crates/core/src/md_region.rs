//! Multiple-description rate region and its binned refinement, by explicit
//! constraint enumeration.
//!
//! For a source `S` (all variables of the joint that are not descriptions)
//! and descriptions `U_1..U_M`:
//!
//! - plain region: for every nonempty subset `A` of descriptions,
//!   `Σ_{i∈A} R_i >= Σ_{i∈A} H(U_i) - H({U_i : i∈A} | S)`;
//! - binned region: codewords at rates `R'` are hashed into `2^{nR}` bins and
//!   only designated reconstruction sets must decode. For each reconstruction
//!   set `A` and nonempty `J ⊆ A`,
//!   `Σ_{j∈J} (R'_j - R_j) <= Σ_{j∈J} H(U_j) - H({U_j : j∈J} | {U_{j'} : j'∈A∖J})`.
//!
//! Membership is a finite conjunction of these inequalities, so no solver is
//! involved and every violated constraint can be named. Descriptions are
//! identified by variable name throughout.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::{JointPmf, VarSet};
use crate::tol::Tolerances;

/// Largest supported description count (constraints grow as `2^M`).
pub const MAX_DESCRIPTIONS: usize = 12;

/// Per-description rates in bits per symbol, keyed by description name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateVector(pub BTreeMap<String, f64>);

impl RateVector {
    pub fn of<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let map: BTreeMap<String, f64> = entries.into_iter().map(|(k, v)| (k.into(), v)).collect();
        for (name, &rate) in &map {
            if rate < 0.0 || !rate.is_finite() {
                return Err(Error::Param(format!(
                    "rate for `{name}` must be a nonnegative real, got {rate}"
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.0
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingRate(name.to_string()))
    }

    fn sum_over<'a>(&self, names: impl Iterator<Item = &'a str>) -> Result<f64> {
        let mut s = 0.0;
        for n in names {
            s += self.get(n)?;
        }
        Ok(s)
    }
}

/// Bin rates `R` and codebook rates `R'`, with `0 <= R_i <= R'_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedRateVector {
    #[serde(rename = "R")]
    pub bin: RateVector,
    #[serde(rename = "Rp")]
    pub codebook: RateVector,
}

impl BinnedRateVector {
    pub fn new(bin: RateVector, codebook: RateVector) -> Result<Self> {
        for (name, &r) in &bin.0 {
            let rp = codebook.get(name)?;
            if r > rp + 1e-12 {
                return Err(Error::Param(format!(
                    "bin rate for `{name}` ({r}) exceeds its codebook rate ({rp})"
                )));
            }
        }
        for name in codebook.0.keys() {
            bin.get(name)?;
        }
        Ok(Self { bin, codebook })
    }
}

/// Named subsets of descriptions that must decode.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionSets(Vec<VarSet>);

impl ReconstructionSets {
    pub fn new(sets: Vec<VarSet>) -> Result<Self> {
        for s in &sets {
            if s.is_empty() {
                return Err(Error::EmptyVarSet);
            }
            if s.len() > MAX_DESCRIPTIONS {
                return Err(Error::TooManyDescriptions {
                    got: s.len(),
                    max: MAX_DESCRIPTIONS,
                });
            }
        }
        Ok(Self(sets))
    }

    pub fn sets(&self) -> &[VarSet] {
        &self.0
    }
}

/// One lower-bound constraint of the plain region.
#[derive(Clone, Debug, Serialize)]
pub struct MdConstraint {
    /// Description subset the bound applies to.
    pub subset: Vec<String>,
    /// Lower bound on the subset's rate sum.
    pub bound: f64,
}

/// One upper-bound constraint of the binned region.
#[derive(Clone, Debug, Serialize)]
pub struct MdStarConstraint {
    /// Reconstruction set the constraint belongs to.
    pub set: Vec<String>,
    /// Subset `J` whose binning surplus is bounded.
    pub subset: Vec<String>,
    /// Upper bound on `Σ_{j∈J} (R'_j - R_j)`.
    pub bound: f64,
}

/// A violated (or tight) constraint in a membership report.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    /// Reconstruction set, absent for plain-region constraints.
    pub set: Option<Vec<String>>,
    pub subset: Vec<String>,
    pub bound: f64,
    pub value: f64,
    /// Satisfaction margin; negative means violated.
    pub slack: f64,
}

/// Why a membership test failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FailureClass {
    /// A rate-sum lower bound of the plain region is violated.
    LowerBound,
    /// The codebook rates `R'` are already outside the plain region.
    CodebookOutsideRegion,
    /// A binning-surplus constraint is violated.
    BinningSurplus,
}

/// Membership verdict with signed slacks for every constraint.
#[derive(Clone, Debug, Serialize)]
pub struct Membership {
    pub member: bool,
    pub failure: Option<FailureClass>,
    /// All violated constraints, most negative slack first.
    pub violations: Vec<Violation>,
    /// Signed slack of every constraint checked (diagnostics).
    pub slacks: Vec<Violation>,
}

fn check_descriptions(joint: &JointPmf, descriptions: &[&str]) -> Result<Vec<String>> {
    if descriptions.is_empty() {
        return Err(Error::EmptyVarSet);
    }
    if descriptions.len() > MAX_DESCRIPTIONS {
        return Err(Error::TooManyDescriptions {
            got: descriptions.len(),
            max: MAX_DESCRIPTIONS,
        });
    }
    let all = joint.var_set();
    let mut out = Vec::with_capacity(descriptions.len());
    for &d in descriptions {
        if !all.contains(d) {
            return Err(Error::UnknownVariable(d.to_string()));
        }
        if out.iter().any(|x: &String| x == d) {
            return Err(Error::DuplicateVariable(d.to_string()));
        }
        out.push(d.to_string());
    }
    Ok(out)
}

fn source_vars(joint: &JointPmf, descriptions: &[String]) -> Result<VarSet> {
    let src: Vec<String> = joint
        .variables()
        .iter()
        .map(|v| v.name.clone())
        .filter(|n| !descriptions.iter().any(|d| d == n))
        .collect();
    if src.is_empty() {
        return Err(Error::NoSourceVars);
    }
    Ok(VarSet::of(src))
}

fn subset_names(descriptions: &[String], mask: usize) -> Vec<String> {
    descriptions
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, n)| n.clone())
        .collect()
}

/// Enumerates the `2^M - 1` lower-bound constraints of the plain region.
pub fn md_constraints(joint: &JointPmf, descriptions: &[&str]) -> Result<Vec<MdConstraint>> {
    let desc = check_descriptions(joint, descriptions)?;
    let source = source_vars(joint, &desc)?;
    let m = desc.len();

    // per-description entropies
    let mut h_single = Vec::with_capacity(m);
    for d in &desc {
        h_single.push(joint.entropy(&VarSet::of([d.clone()]))?);
    }

    let mut out = Vec::with_capacity((1 << m) - 1);
    for mask in 1usize..1 << m {
        let names = subset_names(&desc, mask);
        let sum_h: f64 = (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| h_single[i])
            .sum();
        let subset = VarSet::of(names.clone());
        let h_cond = joint.conditional_entropy(&subset, &source)?;
        out.push(MdConstraint {
            subset: names,
            bound: sum_h - h_cond,
        });
    }
    Ok(out)
}

/// Tests a rate vector against every plain-region constraint.
pub fn md_membership(
    joint: &JointPmf,
    descriptions: &[&str],
    rates: &RateVector,
    tol: Tolerances,
) -> Result<Membership> {
    let constraints = md_constraints(joint, descriptions)?;
    let mut slacks = Vec::with_capacity(constraints.len());
    for c in &constraints {
        let value = rates.sum_over(c.subset.iter().map(String::as_str))?;
        slacks.push(Violation {
            set: None,
            subset: c.subset.clone(),
            bound: c.bound,
            value,
            slack: value - c.bound,
        });
    }
    Ok(finish(slacks, FailureClass::LowerBound, tol))
}

/// Enumerates the binning-surplus constraints, one per (reconstruction set,
/// nonempty subset) pair.
pub fn mdstar_constraints(
    joint: &JointPmf,
    descriptions: &[&str],
    recon: &ReconstructionSets,
) -> Result<Vec<MdStarConstraint>> {
    let desc = check_descriptions(joint, descriptions)?;
    let mut out = Vec::new();
    for set in recon.sets() {
        let members: Vec<String> = set.names().map(str::to_string).collect();
        for name in &members {
            if !desc.iter().any(|d| d == name) {
                return Err(Error::UnknownVariable(name.clone()));
            }
        }
        let k = members.len();
        for mask in 1usize..1 << k {
            let sub = subset_names(&members, mask);
            let rest: Vec<String> = members
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 0)
                .map(|(_, n)| n.clone())
                .collect();
            let mut sum_h = 0.0;
            for n in &sub {
                sum_h += joint.entropy(&VarSet::of([n.clone()]))?;
            }
            let sub_set = VarSet::of(sub.clone());
            let h_cond = if rest.is_empty() {
                joint.entropy(&sub_set)?
            } else {
                joint.conditional_entropy(&sub_set, &VarSet::of(rest))?
            };
            out.push(MdStarConstraint {
                set: members.clone(),
                subset: sub,
                bound: sum_h - h_cond,
            });
        }
    }
    Ok(out)
}

/// Tests `(R, R')` against the binned region: `R'` must lie in the plain
/// region, and every binning-surplus constraint must hold.
pub fn mdstar_membership(
    joint: &JointPmf,
    descriptions: &[&str],
    recon: &ReconstructionSets,
    rates: &BinnedRateVector,
    tol: Tolerances,
) -> Result<Membership> {
    let codebook = md_membership(joint, descriptions, &rates.codebook, tol)?;
    if !codebook.member {
        return Ok(Membership {
            member: false,
            failure: Some(FailureClass::CodebookOutsideRegion),
            violations: codebook.violations,
            slacks: codebook.slacks,
        });
    }

    let constraints = mdstar_constraints(joint, descriptions, recon)?;
    let mut slacks = Vec::with_capacity(constraints.len());
    for c in &constraints {
        let mut value = 0.0;
        for n in &c.subset {
            value += rates.codebook.get(n)? - rates.bin.get(n)?;
        }
        slacks.push(Violation {
            set: Some(c.set.clone()),
            subset: c.subset.clone(),
            bound: c.bound,
            value,
            slack: c.bound - value,
        });
    }
    Ok(finish(slacks, FailureClass::BinningSurplus, tol))
}

fn finish(slacks: Vec<Violation>, failure_class: FailureClass, tol: Tolerances) -> Membership {
    let mut violations: Vec<Violation> = slacks
        .iter()
        .filter(|v| v.slack < -tol.slack)
        .cloned()
        .collect();
    violations.sort_by(|a, b| a.slack.partial_cmp(&b.slack).unwrap());
    let member = violations.is_empty();
    Membership {
        member,
        failure: if member { None } else { Some(failure_class) },
        violations,
        slacks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{product_from_factorization, Conditional, Variable};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Joint over (S, U1) where U1 is an exact copy of S.
    fn copy_joint() -> JointPmf {
        JointPmf::new(
            vec![Variable::new("S", 2), Variable::new("U1", 2)],
            [(vec![0, 0], r(1, 2)), (vec![1, 1], r(1, 2))],
        )
        .unwrap()
    }

    fn canonical_joint(p_num: i64, p_den: i64) -> JointPmf {
        crate::inner_bound::build_canonical_aux(&r(p_num, p_den))
            .unwrap()
            .joint()
            .clone()
    }

    const DESC5: [&str; 5] = ["X0", "X1", "X2", "Y1", "Y2"];

    fn canonical_recon() -> ReconstructionSets {
        ReconstructionSets::new(vec![
            VarSet::of(["X0", "X1", "Y1"]),
            VarSet::of(["X0", "X1", "Y2"]),
            VarSet::of(["X0", "X2", "Y1"]),
            VarSet::of(["X0", "X2", "Y2"]),
        ])
        .unwrap()
    }

    #[test]
    fn degenerate_single_description() {
        let joint = copy_joint();
        let cs = md_constraints(&joint, &["U1"]).unwrap();
        assert_eq!(cs.len(), 1);
        // bound = H(U1) - H(U1|S) = H(S) = 1 bit
        assert!((cs[0].bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditionally_independent_pair_bound() {
        // U1, U2 conditionally independent given S: the pairwise bound equals
        // I(S;U1) + I(S;U2) + I(U1;U2), checked numerically.
        let base = JointPmf::uniform(vec![Variable::new("S", 3)]).unwrap();
        let tuples: Vec<Vec<u8>> = base.support().map(|(t, _)| t.to_vec()).collect();
        let noisy = |name: &str, salt: u64| {
            let rows = tuples.iter().map(|t| {
                let w = 2 + ((t[0] as u64 * 5 + salt * 3) % 7);
                let total = BigInt::from(w + 4);
                (
                    t.clone(),
                    vec![
                        BigRational::new(BigInt::from(w), total.clone()),
                        BigRational::new(BigInt::from(4u64), total),
                    ],
                )
            });
            Conditional::new(Variable::new(name, 2), rows).unwrap()
        };
        let joint = product_from_factorization(&base, &[noisy("U1", 0), noisy("U2", 1)]).unwrap();
        let cs = md_constraints(&joint, &["U1", "U2"]).unwrap();
        assert_eq!(cs.len(), 3);
        let pair = cs
            .iter()
            .find(|c| c.subset.len() == 2)
            .expect("pair constraint");
        let s = VarSet::of(["S"]);
        let u1 = VarSet::of(["U1"]);
        let u2 = VarSet::of(["U2"]);
        let u12 = VarSet::of(["U1", "U2"]);
        // two equivalent algebraic routes to the same bound: under conditional
        // independence the pair bound is I(S;U1) + I(S;U2), and in general it
        // equals I(S;U1,U2) + I(U1;U2)
        let route_a = joint.mutual_information(&s, &u1, None).unwrap()
            + joint.mutual_information(&s, &u2, None).unwrap();
        let route_b = joint.mutual_information(&s, &u12, None).unwrap()
            + joint.mutual_information(&u1, &u2, None).unwrap();
        assert!((pair.bound - route_a).abs() < 1e-12);
        assert!((pair.bound - route_b).abs() < 1e-12);
    }

    #[test]
    fn canonical_singleton_bound() {
        // descriptions are deterministic given the source, so the singleton
        // bound for X1 is I(V1,V2;X1) = H(X1)
        let joint = canonical_joint(1, 2);
        let cs = md_constraints(&joint, &DESC5).unwrap();
        assert_eq!(cs.len(), (1 << 5) - 1);
        let c = cs
            .iter()
            .find(|c| c.subset == ["X1"])
            .expect("X1 singleton");
        let h_x1 = joint.entropy(&VarSet::of(["X1"])).unwrap();
        assert!((c.bound - h_x1).abs() < 1e-12);
        assert!((c.bound - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn md_membership_examples() {
        let joint = canonical_joint(1, 2);
        let tol = Tolerances::default();
        // rates all = H(V1,V2) = 2 bits: member
        let big = RateVector::of(DESC5.iter().map(|&d| (d, 2.0))).unwrap();
        assert!(md_membership(&joint, &DESC5, &big, tol).unwrap().member);
        // all-zero rates: violated singleton listed
        let zero = RateVector::of(DESC5.iter().map(|&d| (d, 0.0))).unwrap();
        let res = md_membership(&joint, &DESC5, &zero, tol).unwrap();
        assert!(!res.member);
        assert!(res.violations.iter().any(|v| v.subset.len() == 1));
    }

    #[test]
    fn corollary_rate_assignment_is_member() {
        // codebook rates γ_i = I(V1,V2;U_i) lie in the plain region for the
        // canonical joint at p in {0, 1/2, 1}; oracle = full enumeration
        let tol = Tolerances::default();
        for (n, d) in [(0, 1), (1, 2), (1, 1)] {
            let joint = canonical_joint(n, d);
            let v = VarSet::of(["V1", "V2"]);
            let mut rates = BTreeMap::new();
            for name in DESC5 {
                let g = joint
                    .mutual_information(&v, &VarSet::of([name]), None)
                    .unwrap();
                rates.insert(name.to_string(), g.max(0.0));
            }
            let rv = RateVector(rates);
            let res = md_membership(&joint, &DESC5, &rv, tol).unwrap();
            assert!(res.member, "gamma assignment rejected at p={n}/{d}");
        }
    }

    #[test]
    fn mdstar_constraint_shapes() {
        let joint = canonical_joint(1, 2);
        let recon = ReconstructionSets::new(vec![VarSet::of(["X0", "X1", "Y1"])]).unwrap();
        let cs = mdstar_constraints(&joint, &DESC5, &recon).unwrap();
        // seven conditions for a three-element reconstruction set
        assert_eq!(cs.len(), 7);
        // full subset: bound = Σ H(U_j) - H(joint), empty conditioning
        let full = cs.iter().find(|c| c.subset.len() == 3).unwrap();
        let sum_h: f64 = ["X0", "X1", "Y1"]
            .iter()
            .map(|&n| joint.entropy(&VarSet::of([n])).unwrap())
            .sum();
        let h_all = joint.entropy(&VarSet::of(["X0", "X1", "Y1"])).unwrap();
        assert!((full.bound - (sum_h - h_all)).abs() < 1e-12);
        // singleton J = {X1}: bound = H(X1) - H(X1 | X0, Y1)
        let single = cs.iter().find(|c| c.subset == ["X1"]).unwrap();
        let expect = joint.entropy(&VarSet::of(["X1"])).unwrap()
            - joint
                .conditional_entropy(&VarSet::of(["X1"]), &VarSet::of(["X0", "Y1"]))
                .unwrap();
        assert!((single.bound - expect).abs() < 1e-12);
        // count over the four canonical sets: 4 * 7
        let all = mdstar_constraints(&joint, &DESC5, &canonical_recon()).unwrap();
        assert_eq!(all.len(), 28);
    }

    #[test]
    fn mdstar_membership_examples() {
        let tol = Tolerances::default();
        let joint = canonical_joint(1, 2);
        let v = VarSet::of(["V1", "V2"]);
        let mut gamma = BTreeMap::new();
        for name in DESC5 {
            let g = joint
                .mutual_information(&v, &VarSet::of([name]), None)
                .unwrap();
            gamma.insert(name.to_string(), g.max(0.0));
        }
        let gamma = RateVector(gamma);

        // R = R' (no binning): member
        let no_bins = BinnedRateVector::new(gamma.clone(), gamma.clone()).unwrap();
        let res = mdstar_membership(&joint, &DESC5, &canonical_recon(), &no_bins, tol).unwrap();
        assert!(res.member);

        // R = 0 with codebook rates kept: at p = 1/2 the singleton constraint
        // for Y1 is violated because I(Y1; X0, X1) < gamma(Y1)
        let zero = RateVector::of(DESC5.iter().map(|&d| (d, 0.0))).unwrap();
        let all_zero = BinnedRateVector::new(zero, gamma.clone()).unwrap();
        let res = mdstar_membership(&joint, &DESC5, &canonical_recon(), &all_zero, tol).unwrap();
        assert!(!res.member);
        assert_eq!(res.failure, Some(FailureClass::BinningSurplus));

        // R' outside the plain region is a distinct failure class
        let tiny = RateVector::of(DESC5.iter().map(|&d| (d, 0.0))).unwrap();
        let bad = BinnedRateVector::new(tiny.clone(), tiny).unwrap();
        let res = mdstar_membership(&joint, &DESC5, &canonical_recon(), &bad, tol).unwrap();
        assert!(!res.member);
        assert_eq!(res.failure, Some(FailureClass::CodebookOutsideRegion));
    }

    #[test]
    fn monotonicity_and_set_removal() {
        let tol = Tolerances::default();
        let joint = canonical_joint(1, 4);
        let v = VarSet::of(["V1", "V2"]);
        let mut gamma = BTreeMap::new();
        for name in DESC5 {
            let g = joint
                .mutual_information(&v, &VarSet::of([name]), None)
                .unwrap();
            gamma.insert(name.to_string(), g.max(0.0));
        }
        let gamma = RateVector(gamma);
        // raising any bin rate keeps membership
        let mut raised = gamma.clone();
        raised.0.insert("X1".into(), gamma.get("X1").unwrap() + 0.3);
        let mut codebook = gamma.clone();
        codebook
            .0
            .insert("X1".into(), gamma.get("X1").unwrap() + 0.3);
        let rv = BinnedRateVector::new(raised, codebook).unwrap();
        assert!(
            mdstar_membership(&joint, &DESC5, &canonical_recon(), &rv, tol)
                .unwrap()
                .member
        );
        // removing a reconstruction set never removes members
        let fewer = ReconstructionSets::new(vec![VarSet::of(["X0", "X1", "Y1"])]).unwrap();
        let no_bins = BinnedRateVector::new(gamma.clone(), gamma).unwrap();
        assert!(
            mdstar_membership(&joint, &DESC5, &fewer, &no_bins, tol)
                .unwrap()
                .member
        );
    }

    #[test]
    fn description_validation() {
        let joint = copy_joint();
        assert!(matches!(
            md_constraints(&joint, &["S", "U1"]),
            Err(Error::NoSourceVars)
        ));
        assert!(matches!(
            md_constraints(&joint, &["U9"]),
            Err(Error::UnknownVariable(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            /// Raising any rate keeps plain-region membership.
            #[test]
            fn membership_is_monotone(bumps in proptest::collection::vec(0.0f64..0.7, 5)) {
                let tol = Tolerances::default();
                let joint = canonical_joint(1, 2);
                let v = VarSet::of(["V1", "V2"]);
                let mut rates = BTreeMap::new();
                for (name, bump) in DESC5.iter().zip(&bumps) {
                    let g = joint
                        .mutual_information(&v, &VarSet::of([*name]), None)
                        .unwrap()
                        .max(0.0);
                    rates.insert(name.to_string(), g + bump);
                }
                let res = md_membership(&joint, &DESC5, &RateVector(rates), tol).unwrap();
                prop_assert!(res.member);
            }

            /// Membership slacks never improve when a single rate drops.
            #[test]
            fn dropping_a_rate_never_helps(which in 0usize..5, drop in 0.0f64..0.5) {
                let tol = Tolerances::default();
                let joint = canonical_joint(1, 4);
                let v = VarSet::of(["V1", "V2"]);
                let mut rates = BTreeMap::new();
                for name in DESC5 {
                    let g = joint
                        .mutual_information(&v, &VarSet::of([name]), None)
                        .unwrap()
                        .max(0.0);
                    rates.insert(name.to_string(), g);
                }
                let base = md_membership(&joint, &DESC5, &RateVector(rates.clone()), tol)
                    .unwrap();
                let name = DESC5[which];
                let lowered = (rates[name] - drop).max(0.0);
                rates.insert(name.to_string(), lowered);
                let after = md_membership(&joint, &DESC5, &RateVector(rates), tol).unwrap();
                for (b, a) in base.slacks.iter().zip(&after.slacks) {
                    prop_assert!(a.slack <= b.slack + 1e-12);
                }
            }
        }
    }
}
