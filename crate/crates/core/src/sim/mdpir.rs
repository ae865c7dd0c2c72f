//! Smoke-scale simulator of the general five-description construction:
//! explicit random codebooks per description, sequential greedy encoding,
//! binned storage and retrieval, and bin-constrained joint-typicality
//! decoding per reconstruction set.
//!
//! Block lengths are capped at 12: the point of this module is to exercise
//! the construction end to end and observe success rates improve with rate
//! margin, not to approach the asymptotic rates. Greedy sequential encoding
//! stands in for the infeasible five-way joint search and is reported as
//! such by the per-trial outcome.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner_bound::{AuxScheme, DescriptionRates, DESCRIPTIONS, V1, V2};
use crate::probability::{ratio_to_f64, JointPmf, VarSet};

use super::{bin_of, mix64, rate_width};

/// Largest supported block length for the five-description simulator.
pub const MAX_MD_BLOCK: usize = 12;

/// Seeds for codebook sampling and bin hashing.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MdPirSeeds {
    pub codebooks: u64,
    pub bins: u64,
}

impl MdPirSeeds {
    pub fn from_root(root: u64) -> Self {
        Self {
            codebooks: mix64(root ^ 0xC0DE),
            bins: mix64(root ^ 0xB1A5),
        }
    }
}

#[derive(Clone, Debug)]
struct Description {
    name: &'static str,
    codebook: Vec<Vec<u8>>,
    storage_width: u32,
    retrieval_width: u32,
    store_key: u64,
    retrieve_key: u64,
}

/// The four reconstruction patterns and the message each one decodes.
const RECONSTRUCTIONS: [([&str; 3], &str); 4] = [
    (["X0", "X1", "Y1"], V1),
    (["X0", "X2", "Y2"], V1),
    (["X0", "X1", "Y2"], V2),
    (["X0", "X2", "Y1"], V2),
];

/// A concrete five-description code instance.
#[derive(Clone, Debug)]
pub struct MdPirCode {
    n: usize,
    slack: f64,
    joint: JointPmf,
    descriptions: Vec<Description>,
    /// Model marginals for the incremental encoding steps.
    encode_models: Vec<BTreeMap<Vec<u8>, f64>>,
    /// Decodability tables per reconstruction pattern.
    recon_tables: Vec<BTreeMap<Vec<u8>, Vec<u8>>>,
}

/// Outcome of one end-to-end trial.
#[derive(Clone, Debug, Serialize)]
pub struct MdTrialOutcome {
    /// Which description failed greedy encoding, if any.
    pub outage: Option<String>,
    /// Whether both servers recovered their codewords from storage bins.
    pub servers_recovered: bool,
    /// Per reconstruction pattern: did bin-constrained decoding return the
    /// correct message block?
    pub retrievals: Vec<(String, bool)>,
}

impl MdTrialOutcome {
    pub fn all_retrievals_ok(&self) -> bool {
        self.outage.is_none() && self.servers_recovered && self.retrievals.iter().all(|(_, ok)| *ok)
    }
}

/// Builds a five-description code: per description, `2^{ceil(n (γ+margin))}`
/// codewords drawn i.i.d. from its marginal; storage bins at `α + margin`
/// and retrieval bins at `β + margin` bits per symbol.
pub fn build_md_pir_code(
    scheme: &AuxScheme,
    n: usize,
    rates: &DescriptionRates,
    margin: f64,
    slack: f64,
    seeds: MdPirSeeds,
) -> Result<MdPirCode> {
    if n == 0 || n > MAX_MD_BLOCK {
        return Err(Error::Param(format!(
            "block length {n} outside 1..={MAX_MD_BLOCK}"
        )));
    }
    if scheme.t() != 1 {
        return Err(Error::Param("only t = 1 schemes are simulated".into()));
    }
    if !(0.0..=1.0).contains(&slack) || slack <= 0.0 {
        return Err(Error::Param(format!("slack {slack} outside (0, 1]")));
    }
    scheme.check_decodability().map_err(Error::Decodability)?;
    let joint = scheme.joint().clone();

    let mut descriptions = Vec::with_capacity(5);
    for (di, &name) in DESCRIPTIONS.iter().enumerate() {
        let gamma = rates.codebook.by_name(name).unwrap().max(0.0);
        let alpha = rates.storage.by_name(name).unwrap().max(0.0);
        let beta = rates.retrieval.by_name(name).unwrap().max(0.0);
        let code_width = rate_width(n, gamma + margin);
        if code_width > 16 {
            return Err(Error::Param(format!(
                "codebook for {name} would need 2^{code_width} entries"
            )));
        }
        let marginal = joint.marginal(&VarSet::of([name]))?;
        let alphabet = marginal.variables()[0].size;
        let mut cdf = Vec::with_capacity(alphabet);
        let mut acc = 0.0;
        for v in 0..alphabet {
            acc += ratio_to_f64(&marginal.mass_of(&[v as u8]));
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seeds.codebooks ^ (di as u64 + 1)));
        let count = 1usize << code_width;
        let mut codebook = Vec::with_capacity(count);
        for _ in 0..count {
            let word: Vec<u8> = (0..n)
                .map(|_| {
                    let u = rng.next_u64() as f64 / u64::MAX as f64;
                    cdf.iter().position(|&c| u <= c).unwrap_or(alphabet - 1) as u8
                })
                .collect();
            codebook.push(word);
        }
        descriptions.push(Description {
            name,
            codebook,
            storage_width: rate_width(n, alpha + margin),
            retrieval_width: rate_width(n, beta + margin),
            store_key: mix64(seeds.bins ^ (0x50 + di as u64)),
            retrieve_key: mix64(seeds.bins ^ (0xE0 + di as u64)),
        });
    }

    // model marginals for incremental greedy encoding
    let mut encode_models = Vec::with_capacity(5);
    let mut vars: Vec<&str> = vec![V1, V2];
    for &name in &DESCRIPTIONS {
        vars.push(name);
        let m = joint.marginal(&VarSet::of(vars.iter().copied()))?;
        encode_models.push(model_map(&m));
    }

    // decodability tables per reconstruction pattern
    let mut recon_tables = Vec::with_capacity(4);
    for (names, target) in RECONSTRUCTIONS {
        let table = joint
            .deterministic_function(&VarSet::of([target]), &VarSet::of(names))?
            .ok_or_else(|| Error::Decodability(format!("{target} not a function of {names:?}")))?;
        recon_tables.push(table);
    }

    Ok(MdPirCode {
        n,
        slack,
        joint,
        descriptions,
        encode_models,
        recon_tables,
    })
}

fn model_map(m: &JointPmf) -> BTreeMap<Vec<u8>, f64> {
    m.support()
        .map(|(t, p)| (t.to_vec(), ratio_to_f64(p)))
        .collect()
}

impl MdPirCode {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Codebook size of one description (index by canonical order).
    pub fn codebook_size(&self, idx: usize) -> usize {
        self.descriptions[idx].codebook.len()
    }

    /// Empirical joint type of `columns` within `slack` of `model`: no
    /// zero-probability tuple may occur at all (this is what keeps selected
    /// codewords consistent with the deterministic structure position by
    /// position), and every positive-probability tuple frequency must sit
    /// within `slack` of its model probability.
    fn typical(&self, model: &BTreeMap<Vec<u8>, f64>, columns: &[&[u8]], slack: f64) -> bool {
        let n = self.n as f64;
        let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        for i in 0..self.n {
            let tuple: Vec<u8> = columns.iter().map(|c| c[i]).collect();
            *counts.entry(tuple).or_insert(0) += 1;
        }
        for (tuple, &c) in &counts {
            match model.get(tuple) {
                None => return false,
                Some(&p) => {
                    if (c as f64 / n - p).abs() > slack + 1e-12 {
                        return false;
                    }
                }
            }
        }
        for (tuple, &p) in model {
            if !counts.contains_key(tuple) && p > slack + 1e-12 {
                return false;
            }
        }
        true
    }

    /// Slack for checks on description groups without the source: a group
    /// cell aggregates up to four source-joint cells, so the band widens.
    fn group_slack(&self) -> f64 {
        (4.0 * self.slack).min(1.0)
    }

    /// Sequential greedy encoding: for each description in canonical order,
    /// the first codeword jointly typical with the source and all previously
    /// selected codewords.
    pub fn encode(&self, v1: &[u8], v2: &[u8]) -> std::result::Result<[usize; 5], String> {
        let mut selected: Vec<&[u8]> = vec![v1, v2];
        let mut indices = [0usize; 5];
        for (di, desc) in self.descriptions.iter().enumerate() {
            let model = &self.encode_models[di];
            let mut found = None;
            for (ci, word) in desc.codebook.iter().enumerate() {
                let mut cols = selected.clone();
                cols.push(word);
                if self.typical(model, &cols, self.slack) {
                    found = Some(ci);
                    break;
                }
            }
            match found {
                Some(ci) => {
                    indices[di] = ci;
                    selected.push(&desc.codebook[ci]);
                }
                None => return Err(desc.name.to_string()),
            }
        }
        Ok(indices)
    }

    /// Storage bin indices of the encoded codewords.
    pub fn storage_bins(&self, indices: &[usize; 5]) -> [u64; 5] {
        let mut out = [0u64; 5];
        for (di, desc) in self.descriptions.iter().enumerate() {
            out[di] = bin_of(indices[di] as u64, desc.store_key, desc.storage_width);
        }
        out
    }

    /// Server-side recovery: each server searches its stored bins for the
    /// unique-first jointly typical codeword group (descriptions 0..3 on
    /// server 1, the two binned ones on server 2).
    pub fn recover_from_storage(&self, bins: &[u64; 5]) -> Option<[usize; 5]> {
        let x_group = [0usize, 1, 2];
        let y_group = [3usize, 4];
        let x_model = self.group_model(&["X0", "X1", "X2"]);
        let y_model = self.group_model(&["Y1", "Y2"]);
        let x = self.search_group(&x_group, bins, &x_model)?;
        let y = self.search_group(&y_group, bins, &y_model)?;
        Some([x[0], x[1], x[2], y[0], y[1]])
    }

    fn group_model(&self, names: &[&str]) -> BTreeMap<Vec<u8>, f64> {
        let m = self
            .joint
            .marginal(&VarSet::of(names.iter().copied()))
            .expect("known variables");
        model_map(&m)
    }

    fn search_group(
        &self,
        group: &[usize],
        bins: &[u64; 5],
        model: &BTreeMap<Vec<u8>, f64>,
    ) -> Option<Vec<usize>> {
        let candidates: Vec<Vec<usize>> = group
            .iter()
            .map(|&di| {
                let d = &self.descriptions[di];
                (0..d.codebook.len())
                    .filter(|&i| bin_of(i as u64, d.store_key, d.storage_width) == bins[di])
                    .collect()
            })
            .collect();
        let mut pick = vec![0usize; group.len()];
        self.search_tuples(group, &candidates, model, 0, &mut pick)
    }

    fn search_tuples(
        &self,
        group: &[usize],
        candidates: &[Vec<usize>],
        model: &BTreeMap<Vec<u8>, f64>,
        depth: usize,
        pick: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        if depth == group.len() {
            let cols: Vec<&[u8]> = group
                .iter()
                .zip(pick.iter())
                .map(|(&di, &ci)| self.descriptions[di].codebook[ci].as_slice())
                .collect();
            return if self.typical(model, &cols, self.group_slack()) {
                Some(pick.clone())
            } else {
                None
            };
        }
        for &ci in &candidates[depth] {
            pick[depth] = ci;
            if let Some(found) = self.search_tuples(group, candidates, model, depth + 1, pick) {
                return Some(found);
            }
        }
        None
    }

    /// Retrieval bin indices for one reconstruction pattern, computed from
    /// codeword indices recovered at the servers.
    pub fn retrieval_bins(&self, recovered: &[usize; 5], pattern: usize) -> [u64; 3] {
        let (names, _) = RECONSTRUCTIONS[pattern];
        let mut out = [0u64; 3];
        for (j, name) in names.iter().enumerate() {
            let di = DESCRIPTIONS.iter().position(|d| d == name).unwrap();
            let d = &self.descriptions[di];
            out[j] = bin_of(recovered[di] as u64, d.retrieve_key, d.retrieval_width);
        }
        out
    }

    /// User-side decoding of one reconstruction pattern: search the three
    /// retrieval bins for the first jointly typical codeword triple, then
    /// apply the decodability table symbol by symbol.
    pub fn decode_pattern(&self, pattern: usize, bins: &[u64; 3]) -> Option<Vec<u8>> {
        let (names, _) = RECONSTRUCTIONS[pattern];
        let dis: Vec<usize> = names
            .iter()
            .map(|name| DESCRIPTIONS.iter().position(|d| d == name).unwrap())
            .collect();
        let candidates: Vec<Vec<usize>> = dis
            .iter()
            .enumerate()
            .map(|(j, &di)| {
                let d = &self.descriptions[di];
                (0..d.codebook.len())
                    .filter(|&i| bin_of(i as u64, d.retrieve_key, d.retrieval_width) == bins[j])
                    .collect()
            })
            .collect();
        let model = self.group_model(&names);
        let mut pick = vec![0usize; 3];
        let found = self.search_tuples(&dis, &candidates, &model, 0, &mut pick)?;

        // sorted-name order of the table key matches the canonical order here
        let table = &self.recon_tables[pattern];
        let cols: Vec<&[u8]> = dis
            .iter()
            .zip(found.iter())
            .map(|(&di, &ci)| self.descriptions[di].codebook[ci].as_slice())
            .collect();
        let mut message = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let key: Vec<u8> = cols.iter().map(|c| c[i]).collect();
            message.push(*table.get(&key)?.first()?);
        }
        Some(message)
    }

    /// One end-to-end trial with a seeded uniform source block.
    pub fn trial(&self, seed: u64) -> MdTrialOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v1: Vec<u8> = (0..self.n).map(|_| (rng.next_u32() & 1) as u8).collect();
        let v2: Vec<u8> = (0..self.n).map(|_| (rng.next_u32() & 1) as u8).collect();

        let indices = match self.encode(&v1, &v2) {
            Ok(idx) => idx,
            Err(name) => {
                return MdTrialOutcome {
                    outage: Some(name),
                    servers_recovered: false,
                    retrievals: Vec::new(),
                }
            }
        };
        let storage = self.storage_bins(&indices);
        let recovered = match self.recover_from_storage(&storage) {
            Some(r) => r,
            None => {
                return MdTrialOutcome {
                    outage: None,
                    servers_recovered: false,
                    retrievals: Vec::new(),
                }
            }
        };

        let mut retrievals = Vec::with_capacity(4);
        for (pattern, (names, target)) in RECONSTRUCTIONS.iter().enumerate() {
            let bins = self.retrieval_bins(&recovered, pattern);
            let want = if *target == V1 { &v1 } else { &v2 };
            let ok = self
                .decode_pattern(pattern, &bins)
                .map(|m| &m == want)
                .unwrap_or(false);
            retrievals.push((names.join(","), ok));
        }
        MdTrialOutcome {
            outage: None,
            servers_recovered: true,
            retrievals,
        }
    }

    /// Fraction of trials that succeed end to end.
    pub fn success_rate(&self, trials: u64, seed: u64) -> f64 {
        let mut ok = 0u64;
        for i in 0..trials {
            if self.trial(super::trial_seed(seed, i)).all_retrievals_ok() {
                ok += 1;
            }
        }
        ok as f64 / trials as f64
    }
}
