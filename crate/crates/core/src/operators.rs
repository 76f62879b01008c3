//! Monotone operators with step budgets, their length-clamped evaluation, and rosters.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::bitseq::{unpair_1, BitString, MAX_LEN};
use crate::error::{Error, Result};

/// A pair `(x, y)` of the enumerated graph, with the step cost at which it appears.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphPair {
    pub input: BitString,
    pub output: BitString,
    pub cost: usize,
}

/// A monotone operator given by an enumeration of its graph.
pub trait OperatorProvider: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Pairs `(x', y)` with `x' ⊆ x` present in the graph within `steps` steps.
    fn pairs_below(&self, x: &BitString, steps: usize) -> Vec<GraphPair>;

    /// Length-clamped, budgeted evaluation. Providers may override with a faster route.
    fn apply_modified(&self, x: &BitString) -> Result<BitString> {
        apply_modified_literal(self, x)
    }

    /// Present when the provider is a transducer, which enables search pruning.
    fn transducer(&self) -> Option<&Transducer> {
        None
    }

    fn descriptor(&self) -> OperatorDescriptor;
}

/// Sup of all outputs `y` with `l(y) <= l(x)` from pairs `(x' ⊆ x, y)` enumerated in `l(x)` steps.
pub fn apply_modified_literal<P: OperatorProvider + ?Sized>(op: &P, x: &BitString) -> Result<BitString> {
    let mut best = BitString::EMPTY;
    for pair in op.pairs_below(x, x.len()) {
        let y = pair.output.prefix(x.len());
        if best.is_prefix_of(&y) {
            best = y;
        } else if !y.is_prefix_of(&best) {
            return Err(Error::Config(format!(
                "operator {} has an inconsistent graph below {x}: {best} vs {y}",
                op.name()
            )));
        }
    }
    Ok(best)
}

/// The finite part of the graph available within `steps` steps, restricted to inputs of length `input_len`.
pub fn enumerate_graph(op: &dyn OperatorProvider, steps: usize, input_len: usize) -> Vec<GraphPair> {
    let mut out: Vec<GraphPair> = Vec::new();
    assert!(input_len < 24, "graph enumeration is for small input lengths");
    for v in 0..(1u128 << input_len) {
        let x = BitString::from_value(input_len, v);
        out.push(GraphPair {
            input: x,
            output: BitString::EMPTY,
            cost: 0,
        });
        out.extend(op.pairs_below(&x, steps));
    }
    out.sort();
    out.dedup();
    out
}

/// Explicit `(x, y, cost)` triples.
#[derive(Clone, Debug)]
pub struct TableOperator {
    pub label: String,
    pub entries: Vec<GraphPair>,
}

impl TableOperator {
    pub fn new(label: impl Into<String>, entries: Vec<GraphPair>) -> Result<TableOperator> {
        let op = TableOperator {
            label: label.into(),
            entries,
        };
        // closed graphs must be consistent on comparable inputs
        for a in &op.entries {
            for b in &op.entries {
                if a.input.comparable(&b.input) && !a.output.comparable(&b.output) {
                    return Err(Error::Config(format!(
                        "table operator {} is inconsistent: ({}, {}) vs ({}, {})",
                        op.label, a.input, a.output, b.input, b.output
                    )));
                }
            }
        }
        Ok(op)
    }
}

impl OperatorProvider for TableOperator {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn pairs_below(&self, x: &BitString, steps: usize) -> Vec<GraphPair> {
        self.entries
            .iter()
            .filter(|p| p.cost <= steps && p.input.is_prefix_of(x))
            .cloned()
            .collect()
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::Table {
            label: Some(self.label.clone()),
            entries: self
                .entries
                .iter()
                .map(|p| (p.input, p.output, p.cost))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub emit: BitString,
    pub next: usize,
}

/// Mealy-style transducer: in each state, reading a bit emits a string and moves on.
/// Reading one bit costs one step; state 0 is the start state.
#[derive(Clone, Debug)]
pub struct Transducer {
    pub label: String,
    pub states: Vec<[Rule; 2]>,
    /// `emit_bounds[r][q]`: fewest and most bits emitted reading `r` more bits from state `q`.
    emit_bounds: Vec<Vec<(usize, usize)>>,
    mismatch_memo: Arc<Mutex<HashMap<(usize, BitString, usize, usize), bool>>>,
}

const MISMATCH_BUFFER: usize = 24;

impl Transducer {
    pub fn new(label: impl Into<String>, states: Vec<[Rule; 2]>) -> Result<Transducer> {
        let label = label.into();
        if states.is_empty() {
            return Err(Error::Config(format!("transducer {label} has no states")));
        }
        for (q, rules) in states.iter().enumerate() {
            for r in rules {
                if r.next >= states.len() {
                    return Err(Error::Config(format!(
                        "transducer {label}: state {q} moves to missing state {}",
                        r.next
                    )));
                }
            }
        }
        let mut emit_bounds = vec![vec![(0usize, 0usize); states.len()]];
        for r in 1..=MAX_LEN {
            let prev = &emit_bounds[r - 1];
            let row = states
                .iter()
                .map(|rules| {
                    let a = rules.iter().map(|x| x.emit.len() + prev[x.next].0).min().unwrap();
                    let b = rules.iter().map(|x| x.emit.len() + prev[x.next].1).max().unwrap();
                    (a.min(MAX_LEN + 1), b.min(MAX_LEN + 1))
                })
                .collect();
            emit_bounds.push(row);
        }
        Ok(Transducer {
            label,
            states,
            emit_bounds,
            mismatch_memo: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    /// Run on `x`, keeping at most `cap` output bits. Returns the final state too.
    pub fn run(&self, x: &BitString, cap: usize) -> (BitString, usize) {
        self.resume(0, BitString::EMPTY, x, 1, cap)
    }

    /// Continue from `state` with output `out`, reading `x` from position `from`.
    pub fn resume(&self, mut state: usize, mut out: BitString, x: &BitString, from: usize, cap: usize) -> (BitString, usize) {
        for t in from..=x.len() {
            let rule = self.states[state][x.bit(t) as usize];
            out = append_capped(&out, &rule.emit, cap);
            state = rule.next;
        }
        (out, state)
    }

    pub fn step(&self, state: usize, bit: u8) -> Rule {
        self.states[state][bit as usize]
    }

    /// Fewest and most bits emitted while reading `r` more bits from `state`.
    pub fn emission_bounds(&self, state: usize, r: usize) -> (usize, usize) {
        self.emit_bounds[r.min(MAX_LEN)][state]
    }

    /// Can some completion make the output stop being a prefix of the input?
    ///
    /// `lag` holds input bits already read but not yet matched by output. `remaining` more bits are
    /// read; output positions beyond `limit` are ignored. Over-long buffers answer `true`.
    pub fn mismatch_reachable(&self, state: usize, lag: BitString, out_len: usize, remaining: usize, limit: usize) -> bool {
        if remaining == 0 || out_len >= limit {
            return false;
        }
        if lag.len() > MISMATCH_BUFFER {
            return true;
        }
        let key = (state, lag, remaining, limit - out_len);
        if let Some(&v) = self.mismatch_memo.lock().unwrap().get(&key) {
            return v;
        }
        let mut found = false;
        for b in 0..2u8 {
            let rule = self.step(state, b);
            let buf = lag.push(b);
            let usable = rule.emit.len().min(limit - out_len);
            if usable > buf.len() {
                // output overtakes the input at a position whose bit is still free
                found = true;
                break;
            }
            let emitted = rule.emit.prefix(usable);
            if emitted != buf.prefix(usable) {
                found = true;
                break;
            }
            let rest = buf.segment(usable + 1, buf.len());
            if self.mismatch_reachable(rule.next, rest, out_len + usable, remaining - 1, limit) {
                found = true;
                break;
            }
        }
        self.mismatch_memo.lock().unwrap().insert(key, found);
        found
    }
}

pub fn append_capped(out: &BitString, emit: &BitString, cap: usize) -> BitString {
    if out.len() >= cap {
        return *out;
    }
    let room = cap - out.len();
    out.concat(&emit.prefix(room))
}

impl OperatorProvider for Transducer {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn pairs_below(&self, x: &BitString, steps: usize) -> Vec<GraphPair> {
        let mut out = Vec::new();
        let mut state = 0;
        let mut y = BitString::EMPTY;
        let cap = x.len().max(steps).min(MAX_LEN);
        out.push(GraphPair {
            input: BitString::EMPTY,
            output: BitString::EMPTY,
            cost: 0,
        });
        for t in 1..=x.len().min(steps) {
            let rule = self.states[state][x.bit(t) as usize];
            y = append_capped(&y, &rule.emit, cap);
            state = rule.next;
            out.push(GraphPair {
                input: x.prefix(t),
                output: y,
                cost: t,
            });
        }
        out
    }

    fn apply_modified(&self, x: &BitString) -> Result<BitString> {
        Ok(self.run(x, x.len()).0)
    }

    fn transducer(&self) -> Option<&Transducer> {
        Some(self)
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::Transducer {
            label: Some(self.label.clone()),
            states: self.states.iter().map(|r| r.to_vec()).collect(),
        }
    }
}

/// A transducer known by name, described on disk by that name only.
#[derive(Debug)]
pub struct Builtin {
    name: String,
    inner: Transducer,
}

impl OperatorProvider for Builtin {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn pairs_below(&self, x: &BitString, steps: usize) -> Vec<GraphPair> {
        self.inner.pairs_below(x, steps)
    }
    fn apply_modified(&self, x: &BitString) -> Result<BitString> {
        self.inner.apply_modified(x)
    }
    fn transducer(&self) -> Option<&Transducer> {
        Some(&self.inner)
    }
    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::Builtin { name: self.name.clone() }
    }
}

fn rule(emit: &str, next: usize) -> Rule {
    Rule {
        emit: emit.parse().expect("builtin rule"),
        next,
    }
}

type BuiltinCtor = fn() -> Vec<[Rule; 2]>;

/// Named builtin operators.
pub const BUILTINS: &[(&str, BuiltinCtor)] = &[
    ("identity", || vec![[rule("0", 0), rule("1", 0)]]),
    ("complement", || vec![[rule("1", 0), rule("0", 0)]]),
    ("half", || vec![[rule("0", 1), rule("1", 1)], [rule("", 0), rule("", 0)]]),
    ("double", || vec![[rule("00", 0), rule("11", 0)]]),
    ("drop-first", || vec![[rule("", 1), rule("", 1)], [rule("0", 1), rule("1", 1)]]),
    ("constant-empty", || vec![[rule("", 0), rule("", 0)]]),
    ("constant-one", || vec![[rule("1", 1), rule("1", 1)], [rule("", 1), rule("", 1)]]),
    ("zeros", || vec![[rule("0", 0), rule("0", 0)]]),
];

pub fn builtin(name: &str) -> Result<Arc<dyn OperatorProvider>> {
    let (_, ctor) = BUILTINS.iter().find(|(n, _)| *n == name).ok_or_else(|| Error::UnknownName {
        kind: "builtin operator",
        name: name.to_string(),
        known: BUILTINS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
    })?;
    Ok(Arc::new(Builtin {
        name: name.to_string(),
        inner: Transducer::new(name, ctor())?,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorDescriptor {
    Builtin {
        name: String,
    },
    Table {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        entries: Vec<(BitString, BitString, usize)>,
    },
    Transducer {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        states: Vec<Vec<Rule>>,
    },
}

impl OperatorDescriptor {
    /// Transducer copying the input bits at positions `period, 2·period, …`.
    pub fn stride(period: usize) -> OperatorDescriptor {
        assert!(period >= 1);
        let states = (0..period)
            .map(|q| {
                let next = (q + 1) % period;
                let emit = |b: &str| if q + 1 == period { b.parse().unwrap() } else { BitString::EMPTY };
                vec![Rule { emit: emit("0"), next }, Rule { emit: emit("1"), next }]
            })
            .collect();
        OperatorDescriptor::Transducer {
            label: Some(format!("stride-{period}")),
            states,
        }
    }

    pub fn build(&self, position: usize) -> Result<Arc<dyn OperatorProvider>> {
        match self {
            OperatorDescriptor::Builtin { name } => builtin(name),
            OperatorDescriptor::Table { label, entries } => {
                let label = label.clone().unwrap_or_else(|| format!("table-{position}"));
                let entries = entries
                    .iter()
                    .map(|&(input, output, cost)| GraphPair { input, output, cost })
                    .collect();
                Ok(Arc::new(TableOperator::new(label, entries)?))
            }
            OperatorDescriptor::Transducer { label, states } => {
                let label = label.clone().unwrap_or_else(|| format!("transducer-{position}"));
                let mut rules = Vec::new();
                for (q, s) in states.iter().enumerate() {
                    let pair: [Rule; 2] = s.clone().try_into().map_err(|_| {
                        Error::Config(format!("transducer {label}: state {q} needs exactly two rules"))
                    })?;
                    rules.push(pair);
                }
                Ok(Arc::new(Transducer::new(label, rules)?))
            }
        }
    }
}

/// A finite base list of operators; every index `i >= 1` maps to a base.
#[derive(Clone, Debug)]
pub struct OperatorRoster {
    bases: Vec<Arc<dyn OperatorProvider>>,
}

impl OperatorRoster {
    pub fn new(bases: Vec<Arc<dyn OperatorProvider>>) -> Result<OperatorRoster> {
        if bases.is_empty() {
            return Err(Error::Config("operator roster is empty".into()));
        }
        Ok(OperatorRoster { bases })
    }

    pub fn from_descriptors(ds: &[OperatorDescriptor]) -> Result<OperatorRoster> {
        OperatorRoster::new(ds.iter().enumerate().map(|(k, d)| d.build(k + 1)).collect::<Result<_>>()?)
    }

    pub fn base_count(&self) -> usize {
        self.bases.len()
    }

    /// 1-based base position serving index `i`.
    pub fn base_of(&self, i: u64) -> usize {
        ((unpair_1(i) - 1) % self.bases.len() as u64) as usize + 1
    }

    pub fn operator(&self, i: u64) -> &Arc<dyn OperatorProvider> {
        &self.bases[self.base_of(i) - 1]
    }

    pub fn base(&self, b: usize) -> &Arc<dyn OperatorProvider> {
        &self.bases[b - 1]
    }

    pub fn descriptors(&self) -> Vec<OperatorDescriptor> {
        self.bases.iter().map(|b| b.descriptor()).collect()
    }
}

/// The result of a budgeted partial-function evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bounded {
    Value(u64),
    Diverges,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionDescriptor {
    /// `f(k) = slope*k + intercept`, computed in `cost_slope*k + cost_intercept` steps.
    Linear {
        slope: u64,
        #[serde(default)]
        intercept: u64,
        #[serde(default = "one")]
        cost_slope: u64,
        #[serde(default)]
        cost_intercept: u64,
    },
    Table {
        entries: Vec<(u64, u64, u64)>,
    },
    Undefined,
}

fn one() -> u64 {
    1
}

impl FunctionDescriptor {
    pub fn eval(&self, arg: u64, steps: u64) -> Bounded {
        match self {
            FunctionDescriptor::Linear {
                slope,
                intercept,
                cost_slope,
                cost_intercept,
            } => {
                let cost = cost_slope.saturating_mul(arg).saturating_add(*cost_intercept);
                if cost <= steps {
                    Bounded::Value(slope.saturating_mul(arg).saturating_add(*intercept))
                } else {
                    Bounded::Diverges
                }
            }
            FunctionDescriptor::Table { entries } => entries
                .iter()
                .find(|(a, _, c)| *a == arg && *c <= steps)
                .map(|&(_, v, _)| Bounded::Value(v))
                .unwrap_or(Bounded::Diverges),
            FunctionDescriptor::Undefined => Bounded::Diverges,
        }
    }
}

/// Indexed step-costed partial functions; indices wrap around the list.
#[derive(Clone, Debug, Default)]
pub struct FunctionRoster {
    pub functions: Vec<FunctionDescriptor>,
}

impl FunctionRoster {
    pub fn phi_bounded(&self, j: u64, arg: u64, steps: u64) -> Bounded {
        if self.functions.is_empty() || j == 0 {
            return Bounded::Diverges;
        }
        let k = ((j - 1) % self.functions.len() as u64) as usize;
        self.functions[k].eval(arg, steps)
    }
}

/// Operator and function rosters as they appear in a config file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterDescriptor {
    pub operators: Vec<OperatorDescriptor>,
    #[serde(default)]
    pub functions: Vec<FunctionDescriptor>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn table() -> TableOperator {
        TableOperator::new(
            "t",
            vec![GraphPair {
                input: bs("0"),
                output: bs("11"),
                cost: 2,
            }],
        )
        .unwrap()
    }

    #[test]
    fn table_cost_semantics() {
        let op = table();
        assert_eq!(op.apply_modified(&bs("0")).unwrap(), BitString::EMPTY);
        assert_eq!(op.apply_modified(&bs("00")).unwrap(), bs("11"));
        assert_eq!(op.apply_modified(&BitString::EMPTY).unwrap(), BitString::EMPTY);
        let g1 = enumerate_graph(&op, 1, 2);
        let g2 = enumerate_graph(&op, 2, 2);
        assert!(!g1.iter().any(|p| p.output == bs("11")));
        assert!(g2.iter().any(|p| p.output == bs("11")));
        assert!(g1.iter().all(|p| g2.contains(p)));
        assert!(enumerate_graph(&op, 0, 2).iter().all(|p| p.output.is_empty()));
    }

    #[test]
    fn inconsistent_table_rejected() {
        let e = TableOperator::new(
            "bad",
            vec![
                GraphPair { input: bs("0"), output: bs("1"), cost: 1 },
                GraphPair { input: bs("00"), output: bs("0"), cost: 1 },
            ],
        );
        assert!(e.is_err());
    }

    #[test]
    fn builtins_behave() {
        let id = builtin("identity").unwrap();
        let comp = builtin("complement").unwrap();
        let half = builtin("half").unwrap();
        let dbl = builtin("double").unwrap();
        let x = bs("0110");
        assert_eq!(id.apply_modified(&x).unwrap(), x);
        assert_eq!(comp.apply_modified(&x).unwrap(), bs("1001"));
        assert_eq!(half.apply_modified(&x).unwrap(), bs("01"));
        assert_eq!(dbl.apply_modified(&x).unwrap(), bs("0011"));
        for op in [&id, &comp, &half, &dbl] {
            assert_eq!(op.apply_modified(&x).unwrap(), apply_modified_literal(op.as_ref(), &x).unwrap());
        }
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn roster_indices_wrap() {
        let roster = OperatorRoster::new(vec![
            builtin("identity").unwrap(),
            builtin("complement").unwrap(),
            builtin("half").unwrap(),
        ])
        .unwrap();
        for j in 1..=3 {
            assert_eq!(roster.base_of(crate::bitseq::pair(2, j).unwrap()), 2);
        }
        let mut hits = [0; 3];
        for i in 1..=10_000 {
            hits[roster.base_of(i) - 1] += 1;
        }
        assert!(hits.iter().all(|&h| h > 0));
        assert!(OperatorRoster::new(vec![]).is_err());
    }

    #[test]
    fn phi_semantics() {
        let roster = FunctionRoster {
            functions: vec![
                FunctionDescriptor::Table { entries: vec![(2, 5, 3)] },
                FunctionDescriptor::Undefined,
            ],
        };
        assert_eq!(roster.phi_bounded(1, 2, 3), Bounded::Value(5));
        assert_eq!(roster.phi_bounded(1, 2, 2), Bounded::Diverges);
        for n in 0..50 {
            assert_eq!(roster.phi_bounded(2, 1, n), Bounded::Diverges);
        }
    }

    #[test]
    fn emission_bounds_and_mismatch() {
        let half = builtin("half").unwrap();
        let t = half.transducer().unwrap();
        assert_eq!(t.emission_bounds(0, 5), (3, 3));
        let id = builtin("identity").unwrap();
        let t = id.transducer().unwrap();
        assert!(!t.mismatch_reachable(0, BitString::EMPTY, 0, 10, 10));
        let comp = builtin("complement").unwrap();
        assert!(comp.transducer().unwrap().mismatch_reachable(0, BitString::EMPTY, 0, 3, 3));
        let drop = builtin("drop-first").unwrap();
        assert!(drop.transducer().unwrap().mismatch_reachable(0, BitString::EMPTY, 0, 4, 4));
    }
}
