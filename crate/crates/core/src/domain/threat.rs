use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::prior::DiscretePrior;
use super::universe::DiscreteUniverse;
use crate::error::{config, contract, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    /// 0 when the guess equals the target, 1 otherwise.
    ExactMatch,
    /// |e(z) − e(z')| on the universe's numeric embedding.
    AbsoluteDifference,
}

/// Reconstruction error function together with its success threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub kind: ErrorKind,
    pub eta: f64,
}

impl ErrorModel {
    pub fn exact() -> Self {
        Self { kind: ErrorKind::ExactMatch, eta: 0.0 }
    }

    pub fn absolute(eta: f64) -> Self {
        Self { kind: ErrorKind::AbsoluteDifference, eta }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxMode {
    None,
    Full,
    Attribute(Vec<String>),
    Custom,
}

/// The adversary's side information `a(z)` as a partition of the universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxMap {
    mode: AuxMode,
    fiber_of: Vec<usize>,
    fibers: Vec<Vec<usize>>,
}

impl AuxMap {
    /// No side information: a single fiber holding every record.
    pub fn none(m: usize) -> Self {
        Self { mode: AuxMode::None, fiber_of: vec![0; m], fibers: vec![(0..m).collect()] }
    }

    /// The record itself is known: singleton fibers.
    pub fn full(m: usize) -> Self {
        Self { mode: AuxMode::Full, fiber_of: (0..m).collect(), fibers: (0..m).map(|z| vec![z]).collect() }
    }

    /// Projection onto the named public fields of the universe's schema.
    pub fn attribute(universe: &DiscreteUniverse, public_fields: &[&str]) -> Result<Self> {
        let Some(schema) = universe.schema() else {
            return config("attribute side information needs a record schema");
        };
        let mut cols = Vec::with_capacity(public_fields.len());
        for f in public_fields {
            match schema.field_index(f) {
                Some(i) => cols.push(i),
                None => return config(format!("unknown field '{f}'")),
            }
        }
        let keys: Vec<String> = (0..universe.len())
            .map(|z| cols.iter().map(|&c| schema.value(z, c)).collect::<Vec<_>>().join("|"))
            .collect();
        let mut map = Self::from_keys(&keys);
        map.mode = AuxMode::Attribute(public_fields.iter().map(|s| s.to_string()).collect());
        Ok(map)
    }

    /// Groups records sharing a key; fibers are numbered by first appearance.
    pub fn from_keys<K: std::hash::Hash + Eq>(keys: &[K]) -> Self {
        let mut ids: HashMap<&K, usize> = HashMap::new();
        let mut fiber_of = Vec::with_capacity(keys.len());
        let mut fibers: Vec<Vec<usize>> = Vec::new();
        for (z, k) in keys.iter().enumerate() {
            let next = fibers.len();
            let id = *ids.entry(k).or_insert(next);
            if id == fibers.len() {
                fibers.push(Vec::new());
            }
            fibers[id].push(z);
            fiber_of.push(id);
        }
        Self { mode: AuxMode::Custom, fiber_of, fibers }
    }

    pub fn mode(&self) -> &AuxMode {
        &self.mode
    }

    pub fn len(&self) -> usize {
        self.fiber_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fiber_of.is_empty()
    }

    /// Fiber id of record `z`, i.e. the aux value `a(z)`.
    pub fn fiber_of(&self, z: usize) -> usize {
        self.fiber_of[z]
    }

    pub fn fibers(&self) -> &[Vec<usize>] {
        &self.fibers
    }

    pub fn fiber(&self, x: usize) -> &[usize] {
        &self.fibers[x]
    }

    pub fn fiber_count(&self) -> usize {
        self.fibers.len()
    }

    /// Checks that the fibers are disjoint and cover the universe.
    pub fn is_partition(&self) -> bool {
        let mut seen = vec![false; self.fiber_of.len()];
        for (x, f) in self.fibers.iter().enumerate() {
            if f.is_empty() {
                return false;
            }
            for &z in f {
                if z >= seen.len() || seen[z] || self.fiber_of[z] != x {
                    return false;
                }
                seen[z] = true;
            }
        }
        seen.iter().all(|&s| s)
    }
}

/// For each record `z'`, the records `z` with `ℓ(z, z') ≤ η`.
#[derive(Debug, Clone, PartialEq)]
enum SuccessSets {
    Identity,
    Everything,
    /// Records sorted by embedding; each record's ball is a contiguous range.
    Window { values: Vec<f64>, order: Vec<usize>, range: Vec<(usize, usize)> },
}

/// Error model, side information and the derived success sets for one universe.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreatModel {
    error: ErrorModel,
    aux: AuxMap,
    sets: SuccessSets,
}

impl ThreatModel {
    pub fn new(universe: &DiscreteUniverse, error: ErrorModel, aux: AuxMap) -> Result<Self> {
        if !(error.eta >= 0.0) {
            return config(format!("threshold {} must be nonnegative", error.eta));
        }
        if aux.len() != universe.len() {
            return config("side-information map does not match the universe size");
        }
        let m = universe.len();
        let sets = match error.kind {
            ErrorKind::ExactMatch if error.eta >= 1.0 => SuccessSets::Everything,
            ErrorKind::ExactMatch => SuccessSets::Identity,
            ErrorKind::AbsoluteDifference => {
                let Some(emb) = universe.embedding() else {
                    return config("absolute-difference error needs a numeric embedding");
                };
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|&a, &b| emb[a].total_cmp(&emb[b]));
                let sorted: Vec<f64> = order.iter().map(|&z| emb[z]).collect();
                let mut range = vec![(0, 0); m];
                let (mut lo, mut hi) = (0usize, 0usize);
                for r in 0..m {
                    while sorted[r] - sorted[lo] > error.eta {
                        lo += 1;
                    }
                    while hi < m && sorted[hi] - sorted[r] <= error.eta {
                        hi += 1;
                    }
                    range[order[r]] = (lo, hi);
                }
                SuccessSets::Window { values: emb.to_vec(), order, range }
            }
        };
        Ok(Self { error, aux, sets })
    }

    /// Exact-match error, η = 0, no side information.
    pub fn exact_no_aux(m: usize) -> Result<Self> {
        Self::new(&DiscreteUniverse::indexed(m)?, ErrorModel::exact(), AuxMap::none(m))
    }

    pub fn error(&self) -> ErrorModel {
        self.error
    }

    pub fn eta(&self) -> f64 {
        self.error.eta
    }

    pub fn aux(&self) -> &AuxMap {
        &self.aux
    }

    pub fn universe_size(&self) -> usize {
        self.aux.len()
    }

    /// Whether guessing `guess` reconstructs `target`.
    pub fn success(&self, target: usize, guess: usize) -> bool {
        match &self.sets {
            SuccessSets::Identity => target == guess,
            SuccessSets::Everything => true,
            SuccessSets::Window { values, .. } => (values[target] - values[guess]).abs() <= self.error.eta,
        }
    }

    /// Calls `f` for every `z` in the success set of `center`.
    pub fn for_each_success(&self, center: usize, mut f: impl FnMut(usize)) {
        match &self.sets {
            SuccessSets::Identity => f(center),
            SuccessSets::Everything => (0..self.aux.len()).for_each(f),
            SuccessSets::Window { order, range, .. } => {
                let (lo, hi) = range[center];
                order[lo..hi].iter().for_each(|&z| f(z));
            }
        }
    }

    /// Σ over the success set of `center` of `values[z]`.
    pub fn ball_sum(&self, values: &[f64], center: usize) -> f64 {
        match &self.sets {
            SuccessSets::Identity => values[center],
            SuccessSets::Everything => values.iter().sum(),
            SuccessSets::Window { order, range, .. } => {
                let (lo, hi) = range[center];
                order[lo..hi].iter().map(|&z| values[z]).sum()
            }
        }
    }

    /// `out[z'] = Σ_{z ∈ S(z')} values[z]` for every record.
    pub fn ball_sums(&self, values: &[f64], out: &mut [f64]) {
        match &self.sets {
            SuccessSets::Identity => out.copy_from_slice(values),
            SuccessSets::Everything => {
                let total: f64 = values.iter().sum();
                out.iter_mut().for_each(|o| *o = total);
            }
            SuccessSets::Window { .. } => {
                for (c, o) in out.iter_mut().enumerate() {
                    *o = self.ball_sum(values, c);
                }
            }
        }
    }

    /// True for exact-match success (`S(z) = {z}`).
    pub fn is_exact_match(&self) -> bool {
        matches!(self.sets, SuccessSets::Identity)
    }

    /// True when the success set of some record is the whole universe.
    pub fn some_ball_covers_all(&self) -> bool {
        match &self.sets {
            SuccessSets::Identity => self.aux.len() <= 1,
            SuccessSets::Everything => true,
            SuccessSets::Window { range, .. } => range.iter().any(|&(lo, hi)| hi - lo == self.aux.len()),
        }
    }

    pub(crate) fn check_prior(&self, prior: &DiscretePrior) -> Result<()> {
        if prior.len() != self.universe_size() {
            return contract(format!(
                "prior has {} records, universe has {}",
                prior.len(),
                self.universe_size()
            ));
        }
        Ok(())
    }
}

/// Best oblivious reconstruction probability `max_{z0} Pr_π[ℓ(z0, Z) ≤ η]`.
pub fn kappa_plus(prior: &DiscretePrior, threat: &ThreatModel) -> Result<f64> {
    threat.check_prior(prior)?;
    Ok((0..prior.len()).map(|c| threat.ball_sum(prior.weights(), c)).fold(0.0, f64::max))
}

/// Worst-target counterpart of [`kappa_plus`].
pub fn kappa_minus(prior: &DiscretePrior, threat: &ThreatModel) -> Result<f64> {
    threat.check_prior(prior)?;
    Ok((0..prior.len())
        .map(|c| threat.ball_sum(prior.weights(), c))
        .fold(f64::INFINITY, f64::min))
}
