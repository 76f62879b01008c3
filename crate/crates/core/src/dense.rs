//! Brute-force engine: every vertex up to depth 14 is materialized and every definition is
//! evaluated literally. Used as the reference for the sparse engine and for dense-mode builds.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::bitseq::{index_of, restricted_triple_enumerate, string_of, unpair_1, BitString};
use crate::error::{Error, Result};
use crate::network::{level_stats, ExtraEdge, LevelTable, Network, Pattern};
use crate::operators::{Bounded, FunctionRoster, OperatorProvider, OperatorRoster};
use crate::presets::{preset, ConstructionBundle, RunConfig, DENSE_MAX_DEPTH};
use crate::rational::{self, Q};
use crate::scheduler::{Schedule, TaskStream};
use crate::templates::{DiscardRecord, StepRecord};

fn all(len: usize) -> impl Iterator<Item = BitString> {
    (0..1u128 << len).map(move |v| BitString::from_value(len, v))
}

/// One network with a delay per vertex.
#[derive(Clone, Debug)]
pub struct DenseNetwork {
    pub id: usize,
    /// `delays[l][v]` is `s` of the length-`l` string with value `v`.
    pub delays: Vec<Vec<Q>>,
    pub edges: Vec<ExtraEdge>,
}

impl DenseNetwork {
    fn new(id: usize) -> DenseNetwork {
        DenseNetwork {
            id,
            delays: vec![vec![Q::zero()]],
            edges: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.delays.len() - 1
    }

    pub fn delay(&self, x: &BitString) -> &Q {
        &self.delays[x.len()][x.value() as usize]
    }

    /// `R` on levels `0..=upto` by the full recurrence.
    pub fn frames(&self, upto: usize) -> Vec<Vec<Q>> {
        let half = Q::new(BigInt::one(), BigInt::from(2));
        let mut r: Vec<Vec<Q>> = vec![vec![Q::one()]];
        for l in 0..upto {
            let mut next = Vec::with_capacity(2 << l);
            for v in 0..(1usize << l) {
                let share = &r[l][v] * (Q::one() - &self.delays[l][v]) * &half;
                next.push(share.clone());
                next.push(share);
            }
            for e in self.edges.iter().filter(|e| e.to.len() == l + 1) {
                let add = &e.q * &r[e.from.len()][e.from.value() as usize];
                next[e.to.value() as usize] += add;
            }
            r.push(next);
        }
        r
    }

    /// `P` on levels `0..=upto`.
    pub fn flows(&self, frames: &[Vec<Q>]) -> Vec<Vec<Q>> {
        let mut p = frames.to_vec();
        for e in &self.edges {
            let amount = &e.q * &frames[e.from.len()][e.from.value() as usize];
            for l in e.from.len() + 1..e.to.len().min(p.len()) {
                p[l][e.to.prefix(l).value() as usize] += &amount;
            }
        }
        p
    }

    /// `S_n = Σ R(u) − Σ q(σ) R(σ₁)` over level `n` and the edges into it.
    pub fn s_n(&self, frames: &[Vec<Q>], n: usize) -> Q {
        let mut s: Q = frames[n].iter().sum();
        for e in self.edges.iter().filter(|e| e.to.len() == n) {
            s -= &e.q * &frames[e.from.len()][e.from.value() as usize];
        }
        s
    }
}

/// Result of a dense run.
#[derive(Clone, Debug)]
pub struct DenseBundle {
    pub networks: Vec<DenseNetwork>,
    pub records: Vec<StepRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rule {
    LengthGain,
    SelfDiscard,
    TargetDiscard,
    SparseShape,
}

struct Step<'a> {
    n: usize,
    task: u64,
    subtask: Option<u64>,
    w: usize,
    mirror: usize,
    rule: Rule,
    op: Option<&'a Arc<dyn OperatorProvider>>,
    funcs: &'a FunctionRoster,
    func_index: u64,
    base: usize,
    target: Option<usize>,
    /// Pre-step frames of every network, levels `0..=n`.
    frames: &'a [Vec<Vec<Q>>],
    reject_overlap: bool,
}

impl Step<'_> {
    fn apply(&self, y: &BitString) -> Result<BitString> {
        self.op
            .ok_or_else(|| Error::Config("rule needs an operator".into()))?
            .apply_modified(y)
    }

    fn mass(&self, net: usize, members: &[u128]) -> Q {
        members.iter().map(|&v| &self.frames[net][self.n][v as usize]).sum()
    }

    /// Level-`n` vertices discarded by `(x, y)`, with their network.
    fn discarded(&self, x: &BitString, y: &BitString) -> Result<Option<(usize, Vec<u128>)>> {
        let n = self.n;
        match self.rule {
            Rule::SelfDiscard => {
                let v = self.apply(y)?;
                if v.is_prefix_of(y) || (self.reject_overlap && v.comparable(x)) {
                    return Ok(None);
                }
                let members = all(n).filter(|z| v.is_prefix_of(z) && !x.is_prefix_of(z)).map(|z| z.value()).collect();
                Ok(Some((self.base, members)))
            }
            Rule::TargetDiscard => {
                let mut outputs = Vec::new();
                for u in all(self.mirror) {
                    let y2 = y.with_prefix(&u);
                    outputs.push(self.apply(&y2)?);
                }
                let w = self.w;
                let members = all(n)
                    .filter(|z| outputs.iter().any(|v| (w..=v.len()).all(|t| z.bit(t) == v.bit(t))))
                    .map(|z| z.value())
                    .collect();
                Ok(Some((self.target.expect("target network"), members)))
            }
            _ => Ok(None),
        }
    }

    fn holds(&self, x: &BitString, y: &BitString) -> Result<bool> {
        match self.rule {
            Rule::LengthGain => Ok(self.apply(y)?.len() as u128 > index_of(x) + self.task as u128),
            Rule::SparseShape => {
                let shape = x.push(1).concat(&BitString::zeros(self.n - x.len() - 1));
                let bound = match self.funcs.phi_bounded(self.func_index, x.len() as u64 + 2, self.n as u64) {
                    Bounded::Value(v) => v <= self.n as u64,
                    Bounded::Diverges => false,
                };
                Ok(*y == shape && bound)
            }
            Rule::SelfDiscard | Rule::TargetDiscard => match self.discarded(x, y)? {
                None => Ok(false),
                Some((net, members)) => Ok(rational::le_pow2_neg(&self.mass(net, &members), index_of(x) + 3)),
            },
        }
    }

    /// Least length-`n` extension of `x` satisfying the rule.
    fn beta(&self, x: &BitString) -> Result<Option<BitString>> {
        let k = self.n - x.len();
        for t in 0..1u128 << k {
            let y = x.concat(&BitString::from_value(k, t));
            if self.holds(x, &y)? {
                return Ok(Some(y));
            }
        }
        Ok(None)
    }
}

struct DenseRun {
    config: RunConfig,
    stream: TaskStream,
    ops: OperatorRoster,
    funcs: FunctionRoster,
    nets: Vec<DenseNetwork>,
}

/// What one step writes.
struct Writes {
    case: u8,
    /// Per network: level-`n` delays.
    levels: Vec<Vec<Q>>,
    edges: Vec<ExtraEdge>,
    leading: Vec<(BitString, BitString)>,
    discards: Vec<DiscardRecord>,
    w: Option<usize>,
    w_sub: Option<usize>,
    note: Option<String>,
}

impl DenseRun {
    fn task(&self, m: usize) -> u64 {
        self.stream.task(m)
    }

    fn second(&self, m: usize) -> Option<u64> {
        self.stream.second(m)
    }

    fn edges(&self) -> impl Iterator<Item = &ExtraEdge> {
        self.nets.iter().flat_map(|net| net.edges.iter())
    }

    fn w_session(&self, i: u64, n: usize) -> Option<usize> {
        (1..=n).find(|&m| self.task(m) == i && self.edges().filter(|e| e.task < i).all(|e| m > e.to.len()))
    }

    fn w_subsession(&self, i: u64, k: u64, n: usize) -> Option<usize> {
        (1..=n).find(|&m| {
            self.task(m) == i
                && self.second(m) == Some(k)
                && self
                    .edges()
                    .filter(|e| e.task < i || (e.task == i && e.subtask.is_some_and(|t| t < k)))
                    .all(|e| m > e.to.len())
        })
    }

    fn empty(&self, n: usize, case: u8) -> Writes {
        Writes {
            case,
            levels: vec![vec![Q::zero(); 1 << n]; self.nets.len()],
            edges: Vec::new(),
            leading: Vec::new(),
            discards: Vec::new(),
            w: None,
            w_sub: None,
            note: None,
        }
    }

    fn case_one(&self, n: usize, base: usize) -> Writes {
        let mut out = self.empty(n, 1);
        let m = BigInt::from(n as u64 + self.config.params.rho_offset);
        out.levels[base] = vec![Q::new(BigInt::one(), &m * &m); 1 << n];
        out
    }

    fn candidates(&self, st: &Step, lo: usize, root: &BitString, k: Option<u64>) -> Result<Vec<(BitString, BitString)>> {
        let net = &self.nets[st.base];
        let mut out = Vec::new();
        for l in lo..st.n {
            if self.task(l) != st.task || (k.is_some() && self.second(l) != k) {
                continue;
            }
            for x in all(l) {
                if !root.is_prefix_of(&x) || !net.delay(&x).is_positive() || net.edges.iter().any(|e| e.from == x) {
                    continue;
                }
                if let Some(y) = st.beta(&x)? {
                    out.push((x, y));
                }
            }
        }
        out.sort_by_key(|(x, _)| index_of(x));
        Ok(out)
    }

    /// Draw edges for `found` (mirrored over the first `st.mirror` positions) and write delays.
    fn case_two(&self, st: &Step, found: Vec<(BitString, BitString)>, mut out: Writes) -> Result<Writes> {
        let n = st.n;
        let net = &self.nets[st.base];
        let m = st.mirror;
        let mut region: BTreeMap<(usize, u128), Q> = BTreeMap::new();
        let mut point: BTreeMap<u128, Q> = BTreeMap::new();
        let conflict = |network: usize, z: u128| Error::DelayConflict {
            network,
            level: n,
            detail: format!("two writes disagree at {}", BitString::from_value(n, z)),
        };
        let put = |map: &mut BTreeMap<(usize, u128), Q>, key: (usize, u128), v: Q| -> Result<()> {
            match map.get(&key) {
                Some(old) if *old != v => Err(conflict(key.0 + 1, key.1)),
                _ => {
                    map.insert(key, v);
                    Ok(())
                }
            }
        };
        for (x, y) in &found {
            let s = net.delay(x).clone();
            for u in all(m) {
                let (x2, y2) = (x.with_prefix(&u), y.with_prefix(&u));
                let s2 = net.delay(&x2);
                if s > *s2 {
                    return Err(Error::OutflowViolation {
                        network: net.id,
                        source_vertex: x2,
                        flow: rational::fmt_q(&s),
                        delay: rational::fmt_q(s2),
                    });
                }
                if net.edges.iter().chain(out.edges.iter()).any(|e| e.from == x2) {
                    return Err(Error::DuplicationConflict {
                        network: net.id,
                        source_vertex: x2,
                    });
                }
                out.edges.push(ExtraEdge {
                    network: net.id,
                    from: x2,
                    to: y2,
                    q: s.clone(),
                    task: st.task,
                    subtask: st.subtask,
                    step: n,
                    w: st.w,
                    mirror_free: m,
                });
            }
            let rest = if s.is_one() { Q::zero() } else { &s / (Q::one() - &s) };
            for z in all(n) {
                let tail_agrees = |a: &BitString, upto: usize| (m + 1..=upto).all(|t| z.bit(t) == a.bit(t));
                if tail_agrees(y, n) {
                    let v = Q::zero();
                    if point.get(&z.value()).is_some_and(|old| *old != v) {
                        return Err(conflict(net.id, z.value()));
                    }
                    point.insert(z.value(), v);
                } else if tail_agrees(x, x.len()) {
                    put(&mut region, (st.base, z.value()), rest.clone())?;
                }
            }
            out.leading.push((*x, *y));
        }
        for (x, y) in &found {
            if let Some((k, members)) = st.discarded(x, y)? {
                for &z in &members {
                    put(&mut region, (k, z), Q::one())?;
                }
                out.discards.push(DiscardRecord {
                    network: k + 1,
                    source: *x,
                    mass: st.mass(k, &members),
                    patterns: cover(n, &members),
                    bound_exponent: index_of(x) + 3,
                });
            }
        }
        for ((k, z), v) in region {
            out.levels[k][z as usize] = v;
        }
        for (z, v) in point {
            out.levels[st.base][z as usize] = v;
        }
        out.case = 2;
        Ok(out)
    }

    fn frames(&self, n: usize) -> Vec<Vec<Vec<Q>>> {
        self.nets.iter().map(|net| net.frames(n)).collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn step_context<'a>(
        &'a self,
        n: usize,
        frames: &'a [Vec<Vec<Q>>],
        rule: Rule,
        base: usize,
        target: Option<usize>,
        op_index: Option<u64>,
        func_index: u64,
    ) -> Step<'a> {
        Step {
            n,
            task: self.task(n),
            subtask: None,
            w: 0,
            mirror: 0,
            rule,
            op: op_index.map(|i| self.ops.operator(i)),
            funcs: &self.funcs,
            func_index,
            base,
            target,
            frames,
            reject_overlap: self.config.params.reject_overlap,
        }
    }

    fn template_one(&self, mut st: Step, designated: Option<BitString>) -> Result<Writes> {
        let (n, i) = (st.n, st.task);
        let Some(w) = self.w_session(i, n) else {
            let mut out = self.empty(n, 3);
            out.note = Some("no session start".into());
            return Ok(out);
        };
        if w == n {
            let mut out = self.case_one(n, st.base);
            out.w = Some(w);
            return Ok(out);
        }
        st.w = w;
        let mut found = self.candidates(&st, w, &BitString::EMPTY, None)?;
        if let Some(d) = designated {
            found.retain(|(x, _)| *x == d);
        }
        let mut out = self.empty(n, 3);
        out.w = Some(w);
        if found.is_empty() {
            if designated.is_some() {
                out.note = Some("designated vertex is not a candidate".into());
            }
            return Ok(out);
        }
        self.case_two(&st, found, out)
    }

    fn template_two(&self, mut st: Step) -> Result<Writes> {
        let (n, i) = (st.n, st.task);
        let k = self.second(n).expect("nested stream");
        st.subtask = Some(k);
        let mut out = self.empty(n, 3);
        let Some(w) = self.w_session(i, n) else {
            out.note = Some("no session start".into());
            return Ok(out);
        };
        out.w = Some(w);
        if w < 64 && k > 1u64 << w {
            out.note = Some("subtask beyond subtree count".into());
            return Ok(out);
        }
        let Some(wk) = self.w_subsession(i, k, n) else {
            out.note = Some("no sub-session start".into());
            return Ok(out);
        };
        out.w_sub = Some(wk);
        if wk == n {
            let mut one = self.case_one(n, st.base);
            one.w = Some(w);
            one.w_sub = Some(wk);
            return Ok(one);
        }
        st.w = w;
        st.mirror = w;
        let root = BitString::from_value(w, (k - 1) as u128);
        let found = self.candidates(&st, wk, &root, Some(k))?;
        if found.is_empty() {
            return Ok(out);
        }
        self.case_two(&st, found, out)
    }

    fn wrap(&self, m: u64) -> usize {
        ((m - 1) % self.nets.len() as u64) as usize
    }

    fn family(&self, n: usize, frames: &[Vec<Vec<Q>>], code: u64, record: &mut StepRecord) -> Result<Writes> {
        let (b, t, op) = restricted_triple_enumerate(code)?;
        let (base, target) = (self.wrap(b), self.wrap(t));
        record.base = Some(base + 1);
        record.target = Some(target + 1);
        record.operator = Some(self.ops.base_of(op));
        if base == target {
            let mut out = self.empty(n, 0);
            out.note = Some("base and target coincide after wrapping".into());
            return Ok(out);
        }
        let st = self.step_context(n, frames, Rule::TargetDiscard, base, Some(target), Some(op), 0);
        self.template_two(st)
    }

    fn step(&self, n: usize) -> Result<(Writes, StepRecord)> {
        let frames = self.frames(n);
        let i = self.task(n);
        let mut record = StepRecord {
            step: n,
            task: i,
            subtask: self.second(n),
            case: 3,
            w: None,
            w_sub: None,
            base: Some(1),
            target: None,
            operator: None,
            edges: Vec::new(),
            edges_total: 0,
            discards: Vec::new(),
            note: None,
        };
        let writes = match self.config.preset.as_str() {
            "nonstochastic" => {
                record.operator = Some(self.ops.base_of(i));
                let st = self.step_context(n, &frames, Rule::LengthGain, 0, None, Some(i), 0);
                self.template_one(st, None)?
            }
            "divisible" => {
                record.operator = Some(self.ops.base_of(i));
                let designated = string_of(self.second(n).unwrap() as u128);
                let st = self.step_context(n, &frames, Rule::SelfDiscard, 0, None, Some(i), 0);
                self.template_one(st, Some(designated))?
            }
            "atom" => {
                record.operator = Some(self.ops.base_of(i));
                let st = self.step_context(n, &frames, Rule::LengthGain, 0, None, Some(i), 0);
                self.template_two(st)?
            }
            "atom_family" => self.family(n, &frames, i, &mut record)?,
            "hyperimmune" if i.is_multiple_of(2) => self.family(n, &frames, i / 2, &mut record)?,
            "hyperimmune" => {
                let j = unpair_1(i.div_ceil(2));
                let base = self.wrap(j);
                record.base = Some(base + 1);
                let st = self.step_context(n, &frames, Rule::SparseShape, base, None, None, j);
                self.template_two(st)?
            }
            other => return Err(Error::Config(format!("dense engine has no rules for preset {other}"))),
        };
        record.case = writes.case;
        record.w = writes.w;
        record.w_sub = writes.w_sub;
        record.edges = writes.leading.clone();
        record.edges_total = writes.edges.len();
        record.discards = writes.discards.clone();
        record.note = writes.note.clone();
        Ok((writes, record))
    }
}

/// Minimal set of subtree patterns whose level-`n` members are exactly `members`.
pub fn cover(n: usize, members: &[u128]) -> Vec<Pattern> {
    let mut set: Vec<u128> = members.to_vec();
    set.sort_unstable();
    set.dedup();
    let mut out = Vec::new();
    fn go(u: BitString, n: usize, set: &[u128], out: &mut Vec<Pattern>) {
        if set.is_empty() {
            return;
        }
        let size = 1u128 << (n - u.len());
        if set.len() as u128 == size {
            out.push(Pattern::subtree(&u));
            return;
        }
        let mid = (u.value() * 2 + 1) << (n - u.len() - 1);
        let split = set.partition_point(|&v| v < mid);
        go(u.push(0), n, &set[..split], out);
        go(u.push(1), n, &set[split..], out);
    }
    go(BitString::EMPTY, n, &set, &mut out);
    out
}

/// Run the construction named by `config` literally.
pub fn run(config: &RunConfig) -> Result<DenseBundle> {
    if config.depth > DENSE_MAX_DEPTH {
        return Err(Error::Config(format!("dense engine is capped at depth {DENSE_MAX_DEPTH}")));
    }
    let p = preset(&config.preset)?;
    let roster = config.roster_descriptor(p.as_ref());
    let mut run = DenseRun {
        config: config.clone(),
        stream: p.stream(),
        ops: OperatorRoster::from_descriptors(&roster.operators)?,
        funcs: FunctionRoster {
            functions: roster.functions,
        },
        nets: (1..=config.networks).map(DenseNetwork::new).collect(),
    };
    let mut records = Vec::new();
    for n in 1..=config.depth {
        let (writes, record) = run.step(n)?;
        for (net, level) in run.nets.iter_mut().zip(writes.levels) {
            net.delays.push(level);
        }
        for e in writes.edges {
            let k = e.network - 1;
            run.nets[k].edges.push(e);
        }
        records.push(record);
    }
    Ok(DenseBundle {
        networks: run.nets,
        records,
    })
}

/// Level table equal to `delays`: the most frequent value as default, the rest as subtree keys.
pub fn compress(n: usize, delays: &[Q]) -> Result<LevelTable> {
    let mut groups: BTreeMap<&Q, Vec<u128>> = BTreeMap::new();
    for (v, s) in delays.iter().enumerate() {
        groups.entry(s).or_default().push(v as u128);
    }
    let default = groups
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .map(|(q, _)| (*q).clone())
        .unwrap_or_else(Q::zero);
    let mut table = LevelTable::uniform(default.clone());
    for (value, members) in groups {
        if *value == default {
            continue;
        }
        for p in cover(n, &members) {
            table.insert(n, p, value.clone()).map_err(Error::Invariant)?;
        }
    }
    Ok(table)
}

/// A dense run packaged as a bundle.
pub fn build_bundle(config: &RunConfig) -> Result<ConstructionBundle> {
    let dense = run(config)?;
    let p = preset(&config.preset)?;
    let mut schedule = Schedule::new(p.stream());
    let mut networks = Vec::new();
    for d in &dense.networks {
        let mut net = Network::new(d.id);
        for n in 1..=d.depth() {
            net.push_level(compress(n, &d.delays[n])?);
        }
        for e in &d.edges {
            schedule.record(e);
            net.add_edge(e.clone())?;
        }
        networks.push(net);
    }
    let aggregates = networks.iter().map(level_stats).collect();
    Ok(ConstructionBundle {
        config: config.clone(),
        networks,
        schedule,
        provenance: dense.records,
        aggregates,
    })
}

/// First disagreement between a bundle and a dense run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub network: usize,
    pub quantity: &'static str,
    pub level: usize,
    pub vertex: Option<BitString>,
    pub sparse: String,
    pub dense: String,
}

/// Compare `s`, `R`, `P`, `G` and `S_n`; returns how many values agreed.
pub fn compare(bundle: &ConstructionBundle, dense: &DenseBundle) -> std::result::Result<u64, Mismatch> {
    let mut compared = 0u64;
    let miss = |network, quantity, level, vertex, sparse: String, dense: String| Mismatch {
        network,
        quantity,
        level,
        vertex,
        sparse,
        dense,
    };
    if bundle.networks.len() != dense.networks.len() {
        return Err(miss(
            0,
            "network count",
            0,
            None,
            bundle.networks.len().to_string(),
            dense.networks.len().to_string(),
        ));
    }
    for (net, d) in bundle.networks.iter().zip(&dense.networks) {
        let id = net.id;
        if net.depth() != d.depth() {
            return Err(miss(id, "depth", 0, None, net.depth().to_string(), d.depth().to_string()));
        }
        let frames = d.frames(d.depth());
        let flows = d.flows(&frames);
        let stats = &bundle.aggregates[id - 1];
        for n in 0..=d.depth() {
            let landing = |edges: &[ExtraEdge]| {
                let mut v: Vec<_> = edges.iter().filter(|e| e.to.len() == n).map(edge_key).collect();
                v.sort();
                v
            };
            let (sparse_edges, dense_edges) = (landing(&net.edges), landing(&d.edges));
            if sparse_edges != dense_edges {
                let first = sparse_edges
                    .iter()
                    .zip(&dense_edges)
                    .position(|(a, b)| a != b)
                    .unwrap_or(sparse_edges.len().min(dense_edges.len()));
                let show = |v: &[(BitString, BitString, String, u64, usize)]| {
                    v.get(first).map(|e| format!("{} -> {} q={}", e.0, e.1, e.2)).unwrap_or_else(|| "none".into())
                };
                return Err(miss(id, "G", n, None, show(&sparse_edges), show(&dense_edges)));
            }
            compared += dense_edges.len() as u64;
            let sn = d.s_n(&frames, n);
            if stats[n].s_n != sn {
                return Err(miss(id, "S_n", n, None, rational::fmt_q(&stats[n].s_n), rational::fmt_q(&sn)));
            }
            for z in all(n) {
                let v = z.value() as usize;
                let s = net.delay(&z).map_err(|e| miss(id, "s", n, Some(z), e.to_string(), String::new()))?;
                let checks = [("s", s, d.delays[n][v].clone()), ("R", net.frame(&z), frames[n][v].clone()), ("P", net.flow(&z), flows[n][v].clone())];
                for (name, sparse, dense) in checks {
                    if sparse != dense {
                        return Err(miss(id, name, n, Some(z), rational::fmt_q(&sparse), rational::fmt_q(&dense)));
                    }
                    compared += 1;
                }
            }
        }
    }
    Ok(compared)
}

fn edge_key(e: &ExtraEdge) -> (BitString, BitString, String, u64, usize) {
    (e.from, e.to, rational::fmt_q(&e.q), e.task, e.step)
}
