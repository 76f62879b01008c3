//! Randomness test sets read off the edges of a length-gain construction.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bitseq::{index_of, BitString};
use crate::error::{Error, Result};
use crate::presets::ConstructionBundle;
use crate::rational::{self, Q};

/// `U_i` for one task index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestLevel {
    pub index: u64,
    pub edges: usize,
    /// Minimal generating strings of the union of intervals.
    pub intervals: Vec<BitString>,
    #[serde(with = "rational::serde_q")]
    pub mass: Q,
    /// `Σ 2^-(index(σ₁)+i)` over the edges of the task.
    #[serde(with = "rational::serde_q")]
    pub edge_bound: Q,
    /// Mass of `U'_i`, the union of `U_j` over `j > i`.
    #[serde(with = "rational::serde_q")]
    pub tail_mass: Q,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlTest {
    pub preset: String,
    pub depth: usize,
    pub levels: Vec<TestLevel>,
}

impl MlTest {
    pub fn holds(&self) -> bool {
        self.levels.iter().all(|l| l.within_bound)
    }

    pub fn level(&self, i: u64) -> Option<&TestLevel> {
        self.levels.iter().find(|l| l.index == i)
    }
}

/// Drop strings that extend another string of the set.
pub fn minimal_strings(strings: impl IntoIterator<Item = BitString>) -> Vec<BitString> {
    let mut all: Vec<BitString> = strings.into_iter().collect();
    all.sort_by_key(index_of);
    all.dedup();
    let mut kept: HashSet<BitString> = HashSet::new();
    let mut out = Vec::new();
    for v in all {
        if v.prefixes().any(|p| kept.contains(&p)) {
            continue;
        }
        kept.insert(v);
        out.push(v);
    }
    out
}

/// Uniform measure of the union of the intervals of `strings`.
pub fn interval_mass(strings: &[BitString]) -> Q {
    minimal_strings(strings.iter().copied())
        .iter()
        .map(|v| rational::pow2_neg(v.len() as u128))
        .sum()
}

/// Build `U_i` and `U'_i` for every task index the run reached.
pub fn ml_test(bundle: &ConstructionBundle) -> Result<MlTest> {
    let preset = bundle.preset()?;
    if !preset.length_gain() {
        return Err(Error::Config(format!(
            "preset '{}' does not draw edges by the length predicate",
            preset.name()
        )));
    }
    let (ops, _) = bundle.rosters()?;
    let mut images: BTreeMap<u64, Vec<BitString>> = BTreeMap::new();
    let mut bounds: BTreeMap<u64, Q> = BTreeMap::new();
    for i in bundle.schedule.tasks_up_to(bundle.depth()) {
        images.entry(i).or_default();
        bounds.entry(i).or_insert_with(rational::zero);
    }
    for net in &bundle.networks {
        for e in &net.edges {
            let v = ops.operator(e.task).apply_modified(&e.to)?;
            images.entry(e.task).or_default().push(v);
            *bounds.entry(e.task).or_insert_with(rational::zero) += rational::pow2_neg(index_of(&e.from) + e.task as u128);
        }
    }
    let tasks: Vec<u64> = images.keys().copied().collect();
    let mut levels = Vec::new();
    for &i in &tasks {
        let own = &images[&i];
        let intervals = minimal_strings(own.iter().copied());
        let mass = interval_mass(&intervals);
        let tail: Vec<BitString> = images.range(i + 1..).flat_map(|(_, v)| v.iter().copied()).collect();
        let tail_mass = interval_mass(&tail);
        let cap = rational::pow2_neg(i as u128);
        let edge_bound = bounds[&i].clone();
        let within_bound = mass <= edge_bound && edge_bound <= cap && tail_mass <= cap;
        levels.push(TestLevel {
            index: i,
            edges: own.len(),
            intervals,
            mass,
            edge_bound,
            tail_mass,
            within_bound,
        });
    }
    Ok(MlTest {
        preset: bundle.config.preset.clone(),
        depth: bundle.depth(),
        levels,
    })
}
