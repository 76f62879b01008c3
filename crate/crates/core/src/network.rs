//! Elementary networks: per-level delay tables, extra edges, frames and flows.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bitseq::{BitString, SuffixClassKey};
use crate::error::{Error, Result};
use crate::profile::{Agg, Profile};
use crate::rational::{self, Q};

/// Strings of one level whose bits at positions `free+1 ..= free+fixed.len()` equal `fixed`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern {
    pub free: usize,
    pub fixed: BitString,
}

impl Pattern {
    pub fn vertex(x: &BitString) -> Pattern {
        Pattern { free: 0, fixed: *x }
    }

    pub fn subtree(x: &BitString) -> Pattern {
        Pattern { free: 0, fixed: *x }
    }

    pub fn whole() -> Pattern {
        Pattern { free: 0, fixed: BitString::EMPTY }
    }

    /// Last fixed position (0 when nothing is fixed).
    pub fn end(&self) -> usize {
        if self.fixed.is_empty() {
            0
        } else {
            self.free + self.fixed.len()
        }
    }

    pub fn matches(&self, z: &BitString) -> bool {
        if self.fixed.is_empty() {
            return true;
        }
        z.len() >= self.end() && z.segment(self.free + 1, self.end()) == self.fixed
    }

    /// Bit required at 1-based position `t`, if any.
    pub fn required(&self, t: usize) -> Option<u8> {
        if self.fixed.is_empty() || t <= self.free || t > self.end() {
            None
        } else {
            Some(self.fixed.bit(t - self.free))
        }
    }

    /// Whether some string matches both patterns.
    pub fn overlaps(&self, other: &Pattern) -> bool {
        let lo = (self.free + 1).max(other.free + 1);
        let hi = self.end().min(other.end());
        (lo..=hi).all(|t| self.required(t) == other.required(t))
    }

    /// Whether every string matching `other` matches `self`.
    pub fn contains(&self, other: &Pattern) -> bool {
        (self.free + 1..=self.end()).all(|t| other.required(t) == self.required(t))
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}*", "*".repeat(self.free), if self.fixed.is_empty() { String::new() } else { self.fixed.to_string() })
    }
}

/// Exception precedence, strongest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Vertex,
    SuffixClass,
    Subtree,
}

/// A key of a delay-table exception at a fixed level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayKey {
    Vertex { vertex: BitString },
    SuffixClass(SuffixClassKey),
    Subtree { free: usize, prefix: BitString },
}

impl DelayKey {
    pub fn from_pattern(level: usize, p: Pattern) -> DelayKey {
        if p.end() == level && !p.fixed.is_empty() {
            if p.free == 0 {
                DelayKey::Vertex { vertex: p.fixed }
            } else {
                DelayKey::SuffixClass(SuffixClassKey {
                    w: p.free + 1,
                    anchor_length: level,
                    suffix: p.fixed,
                })
            }
        } else {
            DelayKey::Subtree { free: p.free, prefix: p.fixed }
        }
    }

    pub fn pattern(&self) -> Pattern {
        match *self {
            DelayKey::Vertex { vertex } => Pattern::vertex(&vertex),
            DelayKey::SuffixClass(k) => Pattern {
                free: k.w.max(1) - 1,
                fixed: k.suffix,
            },
            DelayKey::Subtree { free, prefix } => Pattern { free, fixed: prefix },
        }
    }

    pub fn tier(&self) -> Tier {
        match self {
            DelayKey::Vertex { .. } => Tier::Vertex,
            DelayKey::SuffixClass(_) => Tier::SuffixClass,
            DelayKey::Subtree { .. } => Tier::Subtree,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exception {
    pub key: DelayKey,
    #[serde(with = "rational::serde_q")]
    pub value: Q,
}

/// Delays of one level: a default plus tiered exceptions.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelTable {
    #[serde(with = "rational::serde_q")]
    pub default: Q,
    pub exceptions: Vec<Exception>,
}

impl LevelTable {
    pub fn uniform(default: Q) -> LevelTable {
        LevelTable {
            default,
            exceptions: Vec::new(),
        }
    }

    /// Add an exception; same-tier overlaps must agree on the value.
    pub fn insert(&mut self, level: usize, pattern: Pattern, value: Q) -> std::result::Result<(), String> {
        let key = DelayKey::from_pattern(level, pattern);
        for e in &self.exceptions {
            if e.key.tier() == key.tier() && e.key.pattern().overlaps(&pattern) {
                if e.value != value {
                    return Err(format!(
                        "{:?} = {} overlaps {:?} = {}",
                        pattern,
                        rational::fmt_q(&value),
                        e.key.pattern(),
                        rational::fmt_q(&e.value)
                    ));
                }
                if e.key == key {
                    return Ok(());
                }
            }
        }
        self.exceptions.push(Exception { key, value });
        Ok(())
    }

    pub fn resolve(&self, z: &BitString) -> Q {
        let mut best: Option<&Exception> = None;
        for e in &self.exceptions {
            if e.key.pattern().matches(z) && best.is_none_or(|b| e.key.tier() < b.key.tier()) {
                best = Some(e);
            }
        }
        best.map(|e| e.value.clone()).unwrap_or_else(|| self.default.clone())
    }

    /// All stored values, default first.
    pub fn values(&self) -> impl Iterator<Item = &Q> {
        std::iter::once(&self.default).chain(self.exceptions.iter().map(|e| &e.value))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraEdge {
    pub network: usize,
    pub from: BitString,
    pub to: BitString,
    #[serde(with = "rational::serde_q")]
    pub q: Q,
    pub task: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtask: Option<u64>,
    pub step: usize,
    /// Session start in force when the edge was drawn.
    pub w: usize,
    /// Number of leading free positions the edge was mirrored over (0 when not mirrored).
    #[serde(default)]
    pub mirror_free: usize,
}

/// A depth-truncated network. Levels `0..levels.len()` have delay tables.
#[derive(Debug)]
pub struct Network {
    pub id: usize,
    pub levels: Vec<LevelTable>,
    pub edges: Vec<ExtraEdge>,
    by_source: HashMap<BitString, usize>,
    by_target: HashMap<BitString, Vec<usize>>,
    frame_memo: RefCell<HashMap<BitString, Q>>,
    profile: RefCell<Option<Profile>>,
}

impl Clone for Network {
    fn clone(&self) -> Self {
        let mut n = Network::new(self.id);
        n.levels = self.levels.clone();
        for e in &self.edges {
            n.push_edge_unchecked(e.clone());
        }
        n
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.levels == other.levels && self.edges == other.edges
    }
}

impl Network {
    /// A fresh network with only level 0 (delay 0 at the root).
    pub fn new(id: usize) -> Network {
        Network {
            id,
            levels: vec![LevelTable::uniform(Q::zero())],
            edges: Vec::new(),
            by_source: HashMap::new(),
            by_target: HashMap::new(),
            frame_memo: RefCell::new(HashMap::new()),
            profile: RefCell::new(None),
        }
    }

    /// Deepest level with a delay table.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    fn invalidate(&self) {
        self.frame_memo.borrow_mut().clear();
        *self.profile.borrow_mut() = None;
    }

    pub fn push_level(&mut self, table: LevelTable) {
        self.levels.push(table);
        self.invalidate();
    }

    /// Replace a level table wholesale (used to inject corruptions in tests).
    pub fn set_level(&mut self, n: usize, table: LevelTable) {
        self.levels[n] = table;
        self.invalidate();
    }

    pub fn add_edge(&mut self, e: ExtraEdge) -> Result<()> {
        if self.by_source.contains_key(&e.from) {
            return Err(Error::DuplicationConflict {
                network: self.id,
                source_vertex: e.from,
            });
        }
        if !(e.from.is_proper_prefix_of(&e.to) && e.to.len() - e.from.len() > 1) {
            return Err(Error::Invariant(format!("edge ({}, {}) is not an extra edge", e.from, e.to)));
        }
        self.push_edge_unchecked(e);
        Ok(())
    }

    pub fn push_edge_unchecked(&mut self, e: ExtraEdge) {
        let k = self.edges.len();
        self.by_source.insert(e.from, k);
        self.by_target.entry(e.to).or_default().push(k);
        self.edges.push(e);
        self.invalidate();
    }

    /// Overwrite the share of edge `k` (used to inject corruptions in tests).
    pub fn set_edge_q(&mut self, k: usize, q: Q) {
        self.edges[k].q = q;
        self.invalidate();
    }

    pub fn edge_from(&self, x: &BitString) -> Option<&ExtraEdge> {
        self.by_source.get(x).map(|&k| &self.edges[k])
    }

    pub fn edges_into(&self, y: &BitString) -> impl Iterator<Item = &ExtraEdge> {
        self.by_target.get(y).into_iter().flatten().map(|&k| &self.edges[k])
    }

    pub fn delay(&self, x: &BitString) -> Result<Q> {
        let table = self.levels.get(x.len()).ok_or_else(|| {
            Error::Domain(format!("level {} of network {} is not constructed", x.len(), self.id))
        })?;
        Ok(table.resolve(x))
    }

    /// Frame value `R(y)`, evaluated along the path and memoized.
    pub fn frame(&self, y: &BitString) -> Q {
        assert!(y.len() <= self.levels.len(), "frame below the constructed levels");
        if let Some(v) = self.frame_memo.borrow().get(y) {
            return v.clone();
        }
        // find the deepest memoized prefix
        let mut start = 0;
        let mut r = Q::one();
        for t in (0..=y.len()).rev() {
            if let Some(v) = self.frame_memo.borrow().get(&y.prefix(t)) {
                start = t;
                r = v.clone();
                break;
            }
        }
        for t in start..y.len() {
            let u = y.prefix(t);
            let s = self.levels[t].resolve(&u);
            let child = y.prefix(t + 1);
            r = r * (Q::one() - s) / Q::from_integer(2.into()) + self.inflow(&child);
            self.frame_memo.borrow_mut().insert(child, r.clone());
        }
        r
    }

    /// Extra-edge mass arriving at `y`.
    pub fn inflow(&self, y: &BitString) -> Q {
        let mut total = Q::zero();
        let ids: Vec<usize> = self.by_target.get(y).cloned().unwrap_or_default();
        for k in ids {
            let (from, q) = (self.edges[k].from, self.edges[k].q.clone());
            total += q * self.frame(&from);
        }
        total
    }

    /// Flow value `P(y)`: the frame plus mass in transit over `y`.
    pub fn flow(&self, y: &BitString) -> Q {
        let mut p = self.frame(y);
        for t in 0..y.len() {
            if let Some(e) = self.edge_from(&y.prefix(t)) {
                if y.is_proper_prefix_of(&e.to) {
                    p += &e.q * self.frame(&e.from);
                }
            }
        }
        p
    }

    /// Sum over outgoing shares at `x`: two unit edges plus any extra edge.
    pub fn outflow(&self, x: &BitString) -> Result<Q> {
        let s = self.delay(x)?;
        let mut out = Q::one() - s;
        if let Some(e) = self.edge_from(x) {
            out += &e.q;
        }
        Ok(out)
    }

    /// Level profile, rebuilt after any mutation.
    pub fn with_profile<T>(&self, f: impl FnOnce(&Profile) -> T) -> T {
        if self.profile.borrow().is_none() {
            let p = Profile::build(self);
            *self.profile.borrow_mut() = Some(p);
        }
        f(self.profile.borrow().as_ref().unwrap())
    }

    /// Aggregate of `R` over level-`n` strings matching every pattern.
    pub fn aggregate(&self, n: usize, patterns: &[Pattern]) -> Agg {
        self.with_profile(|p| p.aggregate(self, n, patterns))
    }

    pub fn pattern_mass(&self, n: usize, pattern: &Pattern) -> Q {
        self.aggregate(n, std::slice::from_ref(pattern)).mass
    }

    pub fn total(&self, n: usize) -> Q {
        self.aggregate(n, &[]).mass
    }

    /// `Σ_{l(u)=n} s(u) R(u)`.
    pub fn delayed(&self, n: usize) -> Q {
        self.with_profile(|p| p.delayed(self, n))
    }

    /// Extra-edge mass arriving at level `n`.
    pub fn level_inflow(&self, n: usize) -> Q {
        let targets: Vec<BitString> = self.by_target.keys().filter(|t| t.len() == n).copied().collect();
        targets.iter().map(|t| self.inflow(t)).fold(Q::zero(), |a, b| a + b)
    }

    pub fn is_unit_or_zero(v: &Q) -> bool {
        v.is_zero() || (rational::is_unit_fraction(v) && v <= &Q::one())
    }

    pub fn check_value(v: &Q) -> bool {
        !v.is_negative() && v <= &Q::one()
    }
}

/// Uniform measure of the cylinder of `x`.
pub fn uniform_interval_mass(x: &BitString) -> Q {
    rational::pow2_neg(x.len() as u128)
}

/// Per-level bookkeeping of one network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelAggregates {
    pub network: usize,
    pub level: usize,
    #[serde(with = "rational::serde_q")]
    pub total_r: Q,
    #[serde(with = "rational::serde_q")]
    pub extra_inflow: Q,
    #[serde(with = "rational::serde_q")]
    pub delayed: Q,
    #[serde(with = "rational::serde_q")]
    pub s_n: Q,
}

/// Level aggregates for levels `0..=depth`, with totals carried by conservation.
pub fn level_stats(net: &Network) -> Vec<LevelAggregates> {
    let mut out = Vec::new();
    let mut total = Q::one();
    for n in 0..=net.depth() {
        let inflow = net.level_inflow(n);
        if n > 0 {
            let prev: &LevelAggregates = &out[n - 1];
            total = &prev.total_r - &prev.delayed + &inflow;
        }
        let delayed = net.delayed(n);
        out.push(LevelAggregates {
            network: net.id,
            level: n,
            s_n: &total - &inflow,
            total_r: total.clone(),
            extra_inflow: inflow,
            delayed,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    pub fn fixture_e1() -> Network {
        let mut net = Network::new(1);
        let mut l1 = LevelTable::uniform(Q::zero());
        l1.insert(1, Pattern::vertex(&bs("0")), q(1, 3)).unwrap();
        net.push_level(l1);
        net.push_level(LevelTable::uniform(Q::zero()));
        net.push_level(LevelTable::uniform(Q::zero()));
        net.add_edge(ExtraEdge {
            network: 1,
            from: bs("0"),
            to: bs("000"),
            q: q(1, 3),
            task: 1,
            subtask: None,
            step: 3,
            w: 1,
            mirror_free: 0,
        })
        .unwrap();
        net
    }

    #[test]
    fn e1_values() {
        let net = fixture_e1();
        assert_eq!(net.delay(&bs("0")).unwrap(), q(1, 3));
        assert_eq!(net.frame(&BitString::EMPTY), q(1, 1));
        assert_eq!(net.frame(&bs("00")), q(1, 6));
        assert_eq!(net.frame(&bs("000")), q(1, 4));
        assert_eq!(net.frame(&bs("001")), q(1, 12));
        assert_eq!(net.flow(&bs("00")), q(1, 3));
        assert_eq!(net.flow(&bs("000")) + net.flow(&bs("001")), net.flow(&bs("00")));
        assert_eq!(net.pattern_mass(3, &Pattern::vertex(&bs("000"))), q(1, 4));
        let stats = level_stats(&net);
        assert_eq!(stats[3].total_r, q(1, 1));
        assert_eq!(stats[3].s_n, q(5, 6));
        assert_eq!(net.total(3), q(1, 1));
        assert_eq!(net.outflow(&bs("0")).unwrap(), q(1, 1));
    }

    #[test]
    fn uniform_network() {
        let mut net = Network::new(1);
        for _ in 0..4 {
            net.push_level(LevelTable::uniform(Q::zero()));
        }
        assert_eq!(net.frame(&bs("0110")), q(1, 16));
        assert_eq!(net.flow(&bs("011")), q(1, 8));
        assert_eq!(net.pattern_mass(4, &Pattern::subtree(&bs("0"))), q(1, 2));
        assert_eq!(net.delay(&bs("01")).unwrap(), Q::zero());
        assert!(net.delay(&bs("01101")).is_err());
        assert_eq!(uniform_interval_mass(&bs("01")), q(1, 4));
    }

    #[test]
    fn tier_precedence_and_conflicts() {
        let mut t = LevelTable::uniform(q(1, 9));
        t.insert(3, Pattern::subtree(&bs("0")), q(1, 2)).unwrap();
        t.insert(3, Pattern::vertex(&bs("010")), Q::zero()).unwrap();
        t.insert(3, Pattern { free: 1, fixed: bs("11") }, q(1, 5)).unwrap();
        assert_eq!(t.resolve(&bs("010")), Q::zero());
        assert_eq!(t.resolve(&bs("000")), q(1, 2));
        assert_eq!(t.resolve(&bs("011")), q(1, 5));
        assert_eq!(t.resolve(&bs("100")), q(1, 9));
        assert!(t.insert(3, Pattern::subtree(&bs("01")), q(1, 3)).is_err());
        assert!(t.insert(3, Pattern::subtree(&bs("01")), q(1, 2)).is_ok());
    }

    #[test]
    fn key_round_trip() {
        for (level, p) in [
            (3, Pattern::vertex(&bs("010"))),
            (3, Pattern { free: 1, fixed: bs("10") }),
            (5, Pattern { free: 2, fixed: bs("1") }),
            (4, Pattern::whole()),
        ] {
            assert_eq!(DelayKey::from_pattern(level, p).pattern(), p);
        }
    }
}
