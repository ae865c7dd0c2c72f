//! Exact finite-alphabet probability: joint pmfs with rational masses,
//! marginals, entropies, conditional entropies and mutual information.
//!
//! Masses are stored as exact rationals ([`BigRational`]) so that support
//! questions — "is this conditional a point mass?", "are these two
//! distributions identical?" — have exact answers. Entropy is the only
//! real-valued surface.
//!
//! Alphabet values are integers `0..size`. Composite symbols (a pair of bits
//! stored in one variable, say) are encoded as `0..4` with the low bit the
//! second component, so `(b1, b0)` becomes `2*b1 + b0`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the product alphabet size of a joint pmf.
pub const MAX_TUPLES: u128 = 1 << 24;

/// A named variable with a finite alphabet `0..size`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// A set of variable names selecting coordinates of a [`JointPmf`].
///
/// Duplicates collapse; an empty set is permitted where the operation's
/// semantics allow it (conditioning on nothing).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarSet(BTreeSet<String>);

impl VarSet {
    pub fn of<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(names.into_iter().map(Into::into).collect())
    }

    pub fn empty() -> Self {
        Self(BTreeSet::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        Self(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        self.0.is_disjoint(&other.0)
    }
}

impl<S: Into<String>> FromIterator<S> for VarSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::of(iter)
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

/// An exact joint distribution over an ordered list of named variables.
///
/// Only tuples with strictly positive mass are stored. Construction verifies
/// that masses are nonnegative and sum to exactly 1 in rational arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    variables: Vec<Variable>,
    mass: BTreeMap<Vec<u8>, BigRational>,
}

impl JointPmf {
    /// Builds a joint pmf from explicit `(tuple, mass)` entries. Zero-mass
    /// entries are dropped; repeated tuples accumulate.
    pub fn new(
        variables: Vec<Variable>,
        entries: impl IntoIterator<Item = (Vec<u8>, BigRational)>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &variables {
            if !seen.insert(v.name.clone()) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
            if v.size == 0 {
                return Err(Error::Param(format!(
                    "variable `{}` has empty alphabet",
                    v.name
                )));
            }
        }
        let tuples: u128 = variables.iter().map(|v| v.size as u128).product();
        if tuples > MAX_TUPLES {
            return Err(Error::AlphabetTooLarge {
                tuples,
                max: MAX_TUPLES,
            });
        }

        let mut mass: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
        let mut total = BigRational::zero();
        for (tuple, p) in entries {
            if tuple.len() != variables.len() {
                return Err(Error::TupleLength {
                    got: tuple.len(),
                    expected: variables.len(),
                });
            }
            for (value, var) in tuple.iter().zip(&variables) {
                if *value as usize >= var.size {
                    return Err(Error::SymbolRange {
                        name: var.name.clone(),
                        value: *value,
                        size: var.size,
                    });
                }
            }
            if p.is_negative() {
                return Err(Error::NegativeMass { tuple });
            }
            if p.is_zero() {
                continue;
            }
            total += &p;
            *mass.entry(tuple).or_insert_with(BigRational::zero) += p;
        }
        if !total.is_one() {
            return Err(Error::MassSum {
                got: total.to_string(),
            });
        }
        Ok(Self { variables, mass })
    }

    /// Uniform distribution over the full product alphabet.
    pub fn uniform(variables: Vec<Variable>) -> Result<Self> {
        let tuples: u128 = variables.iter().map(|v| v.size as u128).product();
        if tuples == 0 || tuples > MAX_TUPLES {
            return Err(Error::AlphabetTooLarge {
                tuples,
                max: MAX_TUPLES,
            });
        }
        let p = BigRational::new(BigInt::one(), BigInt::from(tuples));
        let sizes: Vec<usize> = variables.iter().map(|v| v.size).collect();
        let entries = product_tuples(&sizes).map(|t| (t, p.clone()));
        Self::new(variables, entries.collect::<Vec<_>>())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn var_set(&self) -> VarSet {
        VarSet::of(self.variables.iter().map(|v| v.name.clone()))
    }

    /// Iterator over `(tuple, mass)` of the support.
    pub fn support(&self) -> impl Iterator<Item = (&[u8], &BigRational)> {
        self.mass.iter().map(|(t, p)| (t.as_slice(), p))
    }

    /// Exact mass of one tuple (zero off support).
    pub fn mass_of(&self, tuple: &[u8]) -> BigRational {
        self.mass
            .get(tuple)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    fn indices_of(&self, vars: &VarSet) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(vars.len());
        for name in vars.names() {
            match self.variables.iter().position(|v| v.name == name) {
                Some(i) => idx.push(i),
                None => return Err(Error::UnknownVariable(name.to_string())),
            }
        }
        idx.sort_unstable();
        Ok(idx)
    }

    /// Marginal over `vars`, preserving this pmf's variable order.
    pub fn marginal(&self, vars: &VarSet) -> Result<JointPmf> {
        if vars.is_empty() {
            return Err(Error::EmptyVarSet);
        }
        let idx = self.indices_of(vars)?;
        let variables: Vec<Variable> = idx.iter().map(|&i| self.variables[i].clone()).collect();
        let mut mass: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
        for (tuple, p) in &self.mass {
            let sub: Vec<u8> = idx.iter().map(|&i| tuple[i]).collect();
            *mass.entry(sub).or_insert_with(BigRational::zero) += p;
        }
        Ok(JointPmf { variables, mass })
    }

    /// Shannon entropy in bits of the marginal on `vars`, with `0 log 0 = 0`.
    pub fn entropy(&self, vars: &VarSet) -> Result<f64> {
        if vars.is_empty() {
            return Err(Error::EmptyVarSet);
        }
        let idx = self.indices_of(vars)?;
        let mut groups: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
        for (tuple, p) in &self.mass {
            let sub: Vec<u8> = idx.iter().map(|&i| tuple[i]).collect();
            *groups.entry(sub).or_insert_with(BigRational::zero) += p;
        }
        Ok(entropy_of_masses(groups.values()))
    }

    /// Conditional entropy `H(target | given)` in bits, computed group by
    /// group so that deterministic relations yield exactly 0.0.
    ///
    /// `given` may be empty (plain entropy) and may overlap `target`; the
    /// value equals `H(target ∪ given) - H(given)`.
    pub fn conditional_entropy(&self, target: &VarSet, given: &VarSet) -> Result<f64> {
        if target.is_empty() {
            return Err(Error::EmptyVarSet);
        }
        if given.is_empty() {
            return self.entropy(target);
        }
        let t_idx = self.indices_of(target)?;
        let g_idx = self.indices_of(given)?;

        // group mass and within-group target distribution
        let mut groups: BTreeMap<Vec<u8>, BTreeMap<Vec<u8>, BigRational>> = BTreeMap::new();
        for (tuple, p) in &self.mass {
            let g: Vec<u8> = g_idx.iter().map(|&i| tuple[i]).collect();
            let t: Vec<u8> = t_idx.iter().map(|&i| tuple[i]).collect();
            *groups
                .entry(g)
                .or_default()
                .entry(t)
                .or_insert_with(BigRational::zero) += p;
        }

        let mut h = 0.0;
        for inner in groups.values() {
            if inner.len() <= 1 {
                continue; // point mass: contributes exactly zero
            }
            let group_mass: BigRational = inner.values().cloned().sum();
            let gm = ratio_to_f64(&group_mass);
            let mut hg = 0.0;
            for p in inner.values() {
                let q = ratio_to_f64(&(p / &group_mass));
                hg -= q * q.log2();
            }
            h += gm * hg;
        }
        Ok(h)
    }

    /// Mutual information `I(a ; b | given)` in bits, as
    /// `H(a | given) - H(a | b ∪ given)`.
    pub fn mutual_information(
        &self,
        a: &VarSet,
        b: &VarSet,
        given: Option<&VarSet>,
    ) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyVarSet);
        }
        let g = given.cloned().unwrap_or_default();
        let bg = b.union(&g);
        Ok(self.conditional_entropy(a, &g)? - self.conditional_entropy(a, &bg)?)
    }

    /// Exact functional-dependence test: is `target` a deterministic function
    /// of `given` on the support?
    ///
    /// Returns the induced lookup table (given-tuple to target-tuple, in the
    /// sorted coordinate order of each set) when the answer is yes.
    pub fn deterministic_function(
        &self,
        target: &VarSet,
        given: &VarSet,
    ) -> Result<Option<BTreeMap<Vec<u8>, Vec<u8>>>> {
        if target.is_empty() || given.is_empty() {
            return Err(Error::EmptyVarSet);
        }
        let t_idx = self.indices_of(target)?;
        let g_idx = self.indices_of(given)?;
        let mut table: BTreeMap<Vec<u8>, Vec<u8>> = BTreeMap::new();
        for tuple in self.mass.keys() {
            let g: Vec<u8> = g_idx.iter().map(|&i| tuple[i]).collect();
            let t: Vec<u8> = t_idx.iter().map(|&i| tuple[i]).collect();
            match table.get(&g) {
                None => {
                    table.insert(g, t);
                }
                Some(prev) if *prev != t => return Ok(None),
                Some(_) => {}
            }
        }
        Ok(Some(table))
    }

    /// Serializes to the interchange JSON schema.
    pub fn to_json(&self) -> Result<String> {
        let doc = PmfDoc {
            variables: self.variables.clone(),
            mass: self
                .mass
                .iter()
                .map(|(t, p)| MassEntry {
                    value: t.clone(),
                    p: p.to_string(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses the interchange JSON schema. Probabilities may be written as
    /// `"num/den"` rationals or as decimal strings; both parse exactly.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PmfDoc = serde_json::from_str(text)?;
        let entries = doc
            .mass
            .into_iter()
            .map(|e| Ok((e.value, parse_ratio(&e.p)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.variables, entries)
    }
}

#[derive(Serialize, Deserialize)]
struct PmfDoc {
    variables: Vec<Variable>,
    mass: Vec<MassEntry>,
}

#[derive(Serialize, Deserialize)]
struct MassEntry {
    value: Vec<u8>,
    p: String,
}

/// A conditional distribution of one new variable given a base tuple.
#[derive(Clone, Debug)]
pub struct Conditional {
    variable: Variable,
    rows: BTreeMap<Vec<u8>, Vec<BigRational>>,
}

impl Conditional {
    /// Builds a conditional from explicit rows; every row must sum to
    /// exactly 1.
    pub fn new(
        variable: Variable,
        rows: impl IntoIterator<Item = (Vec<u8>, Vec<BigRational>)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (given, row) in rows {
            if row.len() != variable.size {
                return Err(Error::TupleLength {
                    got: row.len(),
                    expected: variable.size,
                });
            }
            if row.iter().any(|p| p.is_negative()) {
                return Err(Error::NegativeMass {
                    tuple: given.clone(),
                });
            }
            let total: BigRational = row.iter().cloned().sum();
            if !total.is_one() {
                return Err(Error::RowSum {
                    given,
                    got: total.to_string(),
                });
            }
            map.insert(given, row);
        }
        Ok(Self {
            variable,
            rows: map,
        })
    }

    /// Deterministic conditional: the new variable is `f(base tuple)`.
    pub fn deterministic(
        variable: Variable,
        base_tuples: impl IntoIterator<Item = Vec<u8>>,
        f: impl Fn(&[u8]) -> u8,
    ) -> Result<Self> {
        let size = variable.size;
        let mut rows = Vec::new();
        for t in base_tuples {
            let v = f(&t) as usize;
            if v >= size {
                return Err(Error::SymbolRange {
                    name: variable.name.clone(),
                    value: v as u8,
                    size,
                });
            }
            let mut row = vec![BigRational::zero(); size];
            row[v] = BigRational::one();
            rows.push((t, row));
        }
        Self::new(variable, rows)
    }

    pub fn variable(&self) -> &Variable {
        &self.variable
    }
}

/// Extends `base` with new variables that are conditionally independent given
/// the base: `P = P_base · Π P(u_i | base)`.
pub fn product_from_factorization(
    base: &JointPmf,
    conditionals: &[Conditional],
) -> Result<JointPmf> {
    let mut variables = base.variables.to_vec();
    for c in conditionals {
        variables.push(c.variable.clone());
    }

    let mut entries: Vec<(Vec<u8>, BigRational)> = base
        .mass
        .iter()
        .map(|(t, p)| (t.clone(), p.clone()))
        .collect();

    for c in conditionals {
        let mut next = Vec::with_capacity(entries.len() * c.variable.size);
        for (tuple, p) in &entries {
            let base_tuple = &tuple[..base.variables.len()];
            let row = c.rows.get(base_tuple).ok_or_else(|| Error::MissingRow {
                var: c.variable.name.clone(),
                given: base_tuple.to_vec(),
            })?;
            for (v, q) in row.iter().enumerate() {
                if q.is_zero() {
                    continue;
                }
                let mut t = tuple.clone();
                t.push(v as u8);
                next.push((t, p * q));
            }
        }
        entries = next;
    }

    JointPmf::new(variables, entries)
}

/// `-Σ p log2 p` over an iterator of rational masses.
fn entropy_of_masses<'a>(masses: impl Iterator<Item = &'a BigRational>) -> f64 {
    let mut h = 0.0;
    let mut n = 0usize;
    for p in masses {
        n += 1;
        let q = ratio_to_f64(p);
        if q > 0.0 {
            h -= q * q.log2();
        }
    }
    if n <= 1 {
        0.0 // point mass: exactly zero
    } else {
        h
    }
}

/// Entropy in bits of an explicit real mass list, `0 log 0 = 0`. The masses
/// need not be normalized exactly; this is the evaluation helper for closed
/// forms.
pub fn entropy_bits(masses: &[f64]) -> f64 {
    masses
        .iter()
        .map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 })
        .sum()
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(0.0)
}

/// Parses `"num/den"`, integer, or decimal strings into an exact rational.
pub fn parse_ratio(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Param(format!("cannot parse probability `{s}`"));
    if s.contains('/') {
        return s.parse::<BigRational>().map_err(|_| bad());
    }
    if let Some(dot) = s.find('.') {
        let (int_part, frac_part) = (&s[..dot], &s[dot + 1..]);
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: String = format!("{int_part}{frac_part}");
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        return Ok(BigRational::new(num, den));
    }
    let num: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(num))
}

/// All tuples of the product alphabet, lexicographically.
pub(crate) fn product_tuples(sizes: &[usize]) -> impl Iterator<Item = Vec<u8>> + '_ {
    let total: u128 = sizes.iter().map(|&s| s as u128).product();
    (0..total).map(move |mut i| {
        let mut t = vec![0u8; sizes.len()];
        for (k, &s) in sizes.iter().enumerate().rev() {
            t[k] = (i % s as u128) as u8;
            i /= s as u128;
        }
        t
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Independent oracle: entropy of explicit masses by direct summation.
    fn oracle_entropy(masses: &[f64]) -> f64 {
        masses
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }

    fn bit_vars(names: &[&str]) -> Vec<Variable> {
        names.iter().map(|n| Variable::new(*n, 2)).collect()
    }

    /// The deterministic maps of the canonical structure, enumerated over the
    /// four message pairs. This is the test-side oracle used to freeze the
    /// derived values below; the production path builds the same joint via
    /// `product_from_factorization`.
    fn eq12_joint() -> JointPmf {
        let vars = bit_vars(&["V1", "V2", "X1", "X2", "Y1", "Y2"]);
        let mut entries = Vec::new();
        for v1 in 0u8..2 {
            for v2 in 0u8..2 {
                let x1 = v1 & v2;
                let x2 = (1 - v1) & (1 - v2);
                let y1 = v1 & (1 - v2);
                let y2 = (1 - v1) & v2;
                entries.push((vec![v1, v2, x1, x2, y1, y2], r(1, 4)));
            }
        }
        JointPmf::new(vars, entries).unwrap()
    }

    #[test]
    fn factorized_joint_matches_enumeration() {
        let base = JointPmf::uniform(bit_vars(&["V1", "V2"])).unwrap();
        let tuples: Vec<Vec<u8>> = base.support().map(|(t, _)| t.to_vec()).collect();
        let conds = [
            Conditional::deterministic(Variable::new("X1", 2), tuples.clone(), |t| t[0] & t[1])
                .unwrap(),
            Conditional::deterministic(Variable::new("X2", 2), tuples.clone(), |t| {
                (1 - t[0]) & (1 - t[1])
            })
            .unwrap(),
        ];
        let joint = product_from_factorization(&base, &conds).unwrap();
        // P(V1=1, V2=1, X1=1) = 1/4, exhaustively derived
        assert_eq!(joint.mass_of(&[1, 1, 1, 0]), r(1, 4));
        // X1 marginal is Bernoulli(1/4)
        let x1 = joint.marginal(&VarSet::of(["X1"])).unwrap();
        assert_eq!(x1.mass_of(&[1]), r(1, 4));
        assert_eq!(x1.mass_of(&[0]), r(3, 4));
    }

    #[test]
    fn empty_conditional_list_is_identity() {
        let base = JointPmf::uniform(bit_vars(&["V1", "V2"])).unwrap();
        let same = product_from_factorization(&base, &[]).unwrap();
        assert_eq!(base, same);
    }

    #[test]
    fn row_sum_violation_rejected() {
        let res = Conditional::new(Variable::new("U", 2), [(vec![0u8], vec![r(1, 2), r(1, 3)])]);
        assert!(matches!(res, Err(Error::RowSum { .. })));
    }

    #[test]
    fn duplicate_variable_rejected() {
        let res = JointPmf::uniform(bit_vars(&["A", "A"]));
        assert!(matches!(res, Err(Error::DuplicateVariable(_))));
    }

    #[test]
    fn marginal_masses_exact() {
        let joint = eq12_joint();
        let m = joint.marginal(&VarSet::of(["X1", "X2"])).unwrap();
        assert_eq!(m.mass_of(&[0, 0]), r(1, 2));
        assert_eq!(m.mass_of(&[0, 1]), r(1, 4));
        assert_eq!(m.mass_of(&[1, 0]), r(1, 4));
        assert_eq!(m.mass_of(&[1, 1]), r(0, 1));
        // marginal over all variables is the pmf itself
        let all = joint.marginal(&joint.var_set()).unwrap();
        assert_eq!(all, joint);
    }

    #[test]
    fn unknown_variable_rejected() {
        let joint = eq12_joint();
        assert!(matches!(
            joint.marginal(&VarSet::of(["Z9"])),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn entropy_values() {
        let joint = eq12_joint();
        // uniform 2-bit variable
        let h_v = joint.entropy(&VarSet::of(["V1", "V2"])).unwrap();
        assert!((h_v - 2.0).abs() < 1e-12);
        // H(X1,X2) against the direct-sum oracle on masses (1/2,1/4,1/4)
        let h_pair = joint.entropy(&VarSet::of(["X1", "X2"])).unwrap();
        assert!((h_pair - oracle_entropy(&[0.5, 0.25, 0.25])).abs() < 1e-12);
        assert!((h_pair - 1.5).abs() < 1e-12);
        // H(X1) = H(1/4, 3/4)
        let h_x1 = joint.entropy(&VarSet::of(["X1"])).unwrap();
        assert!((h_x1 - oracle_entropy(&[0.25, 0.75])).abs() < 1e-12);
        assert!((h_x1 - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn conditional_entropy_values() {
        let joint = eq12_joint();
        // H(Y1|X1) = (3/4) H(1/3, 2/3), by direct evaluation
        let h = joint
            .conditional_entropy(&VarSet::of(["Y1"]), &VarSet::of(["X1"]))
            .unwrap();
        let oracle = 0.75 * oracle_entropy(&[1.0 / 3.0, 2.0 / 3.0]);
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 0.688722).abs() < 1e-6);
        // self-conditioning is exactly zero
        let h_self = joint
            .conditional_entropy(&VarSet::of(["X1"]), &VarSet::of(["X1"]))
            .unwrap();
        assert_eq!(h_self, 0.0);
    }

    #[test]
    fn decodability_is_exact_zero() {
        // V1 is a function of (X1, Y1); grouped evaluation returns exactly 0.0
        let joint = eq12_joint();
        let h = joint
            .conditional_entropy(&VarSet::of(["V1"]), &VarSet::of(["X1", "Y1"]))
            .unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn mutual_information_values() {
        let joint = eq12_joint();
        // independent messages
        let i_vv = joint
            .mutual_information(&VarSet::of(["V1"]), &VarSet::of(["V2"]), None)
            .unwrap();
        assert!(i_vv.abs() < 1e-12);
        // self-information equals entropy
        let i_self = joint
            .mutual_information(&VarSet::of(["X1"]), &VarSet::of(["X1"]), None)
            .unwrap();
        let h_x1 = joint.entropy(&VarSet::of(["X1"])).unwrap();
        assert!((i_self - h_x1).abs() < 1e-12);
        // symmetry
        let a = VarSet::of(["X1"]);
        let b = VarSet::of(["Y1", "X2"]);
        let iab = joint.mutual_information(&a, &b, None).unwrap();
        let iba = joint.mutual_information(&b, &a, None).unwrap();
        assert!((iab - iba).abs() < 1e-12);
    }

    #[test]
    fn deterministic_function_table() {
        let joint = eq12_joint();
        // V1 is determined by (X1, Y1): the table realizes V1 = X1 | Y1
        let table = joint
            .deterministic_function(&VarSet::of(["V1"]), &VarSet::of(["X1", "Y1"]))
            .unwrap()
            .expect("deterministic");
        for (given, target) in &table {
            assert_eq!(target[0], given[0] | given[1]);
        }
        // X1 alone does not determine V1
        let none = joint
            .deterministic_function(&VarSet::of(["V1"]), &VarSet::of(["X1"]))
            .unwrap();
        assert!(none.is_none());
        // X1 is a function of (V1, V2)
        let t2 = joint
            .deterministic_function(&VarSet::of(["X1"]), &VarSet::of(["V1", "V2"]))
            .unwrap();
        assert!(t2.is_some());
    }

    #[test]
    fn json_round_trip_exact() {
        let joint = eq12_joint();
        let text = joint.to_json().unwrap();
        let back = JointPmf::from_json(&text).unwrap();
        assert_eq!(joint, back);
        // decimal probabilities parse exactly
        let doc = r#"{"variables":[{"name":"B","size":2}],
                      "mass":[{"value":[0],"p":"0.75"},{"value":[1],"p":"1/4"}]}"#;
        let pmf = JointPmf::from_json(doc).unwrap();
        assert_eq!(pmf.mass_of(&[0]), r(3, 4));
        assert_eq!(pmf.mass_of(&[1]), r(1, 4));
    }

    #[test]
    fn mass_sum_must_be_one() {
        let res = JointPmf::new(
            bit_vars(&["A"]),
            [(vec![0u8], r(1, 2)), (vec![1u8], r(1, 3))],
        );
        assert!(matches!(res, Err(Error::MassSum { .. })));
    }

    // -- randomized property tests ------------------------------------------

    use proptest::prelude::*;

    /// Random pmf over three small variables with exact rational masses.
    fn arb_pmf() -> impl Strategy<Value = JointPmf> {
        let sizes = (2usize..=3, 2usize..=3, 2usize..=2);
        sizes.prop_flat_map(|(a, b, c)| {
            let n = a * b * c;
            proptest::collection::vec(1u32..1000, n).prop_map(move |weights| {
                let total: u64 = weights.iter().map(|&w| w as u64).sum();
                let vars = vec![
                    Variable::new("A", a),
                    Variable::new("B", b),
                    Variable::new("C", c),
                ];
                let sizes = [a, b, c];
                let entries = product_tuples(&sizes)
                    .zip(&weights)
                    .map(|(t, &w)| (t, BigRational::new(BigInt::from(w), BigInt::from(total))))
                    .collect::<Vec<_>>();
                JointPmf::new(vars, entries).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn chain_rule(pmf in arb_pmf()) {
            let a = VarSet::of(["A"]);
            let b = VarSet::of(["B", "C"]);
            let h_ab = pmf.entropy(&a.union(&b)).unwrap();
            let h_a = pmf.entropy(&a).unwrap();
            let h_b_given_a = pmf.conditional_entropy(&b, &a).unwrap();
            prop_assert!((h_ab - h_a - h_b_given_a).abs() < 1e-12);
        }

        #[test]
        fn nonnegativity(pmf in arb_pmf()) {
            let a = VarSet::of(["A"]);
            let b = VarSet::of(["B"]);
            let c = VarSet::of(["C"]);
            prop_assert!(pmf.entropy(&a).unwrap() >= -1e-12);
            prop_assert!(pmf.conditional_entropy(&a, &b).unwrap() >= -1e-12);
            prop_assert!(pmf.mutual_information(&a, &b, Some(&c)).unwrap() >= -1e-12);
            prop_assert!(pmf.mutual_information(&a, &b, None).unwrap() >= -1e-12);
        }

        #[test]
        fn submodularity(pmf in arb_pmf()) {
            // H(A,B) + H(B,C) >= H(A,B,C) + H(B), overlapping pair
            let ab = VarSet::of(["A", "B"]);
            let bc = VarSet::of(["B", "C"]);
            let abc = VarSet::of(["A", "B", "C"]);
            let b = VarSet::of(["B"]);
            let lhs = pmf.entropy(&ab).unwrap() + pmf.entropy(&bc).unwrap();
            let rhs = pmf.entropy(&abc).unwrap() + pmf.entropy(&b).unwrap();
            prop_assert!(lhs - rhs >= -1e-12);
        }

        #[test]
        fn rational_marginals_exact(pmf in arb_pmf()) {
            // total mass of any marginal is exactly one
            let m = pmf.marginal(&VarSet::of(["A", "C"])).unwrap();
            let total: BigRational = m.support().map(|(_, p)| p.clone()).sum();
            prop_assert!(total.is_one());
        }

        #[test]
        fn factorization_gives_conditional_independence(seed in 0u64..1000) {
            // random conditionals for two new variables given a uniform base
            let base = JointPmf::uniform(bit_vars(&["V1", "V2"])).unwrap();
            let tuples: Vec<Vec<u8>> = base.support().map(|(t, _)| t.to_vec()).collect();
            let mk = |salt: u64| {
                let rows = tuples.iter().map(|t| {
                    let w = 1 + (seed.wrapping_mul(2654435761).wrapping_add(salt + t[0] as u64 * 7 + t[1] as u64 * 13) % 9);
                    let total = BigInt::from(w + 3);
                    (
                        t.clone(),
                        vec![
                            BigRational::new(BigInt::from(w), total.clone()),
                            BigRational::new(BigInt::from(3u64), total),
                        ],
                    )
                });
                Conditional::new(Variable::new(if salt == 0 { "U1" } else { "U2" }, 2), rows).unwrap()
            };
            let joint = product_from_factorization(&base, &[mk(0), mk(1)]).unwrap();
            let i = joint
                .mutual_information(
                    &VarSet::of(["U1"]),
                    &VarSet::of(["U2"]),
                    Some(&VarSet::of(["V1", "V2"])),
                )
                .unwrap();
            prop_assert!(i.abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_parse_helpers() {
        assert_eq!(parse_ratio("1/4").unwrap(), r(1, 4));
        assert_eq!(parse_ratio("0.25").unwrap(), r(1, 4));
        assert_eq!(parse_ratio("1").unwrap(), r(1, 1));
        assert!(parse_ratio("x").is_err());
        // from_f64 on dyadic values is exact
        assert_eq!(BigRational::from_f64(0.5).unwrap(), r(1, 2));
    }
}
