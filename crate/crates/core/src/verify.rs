//! Invariant checks over a finished bundle, each reporting an exact witness on failure.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bitseq::{index_of, unpair_1, BitString};
use crate::dense;
use crate::error::{Error, Result};
use crate::network::{level_stats, Network, Pattern};
use crate::operators::Bounded;
use crate::predicates::SparseShape;
use crate::presets::{self, ConstructionBundle, Mode, DENSE_MAX_DEPTH};
use crate::rational::{self, fmt_q, Q};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_ORACLE_DEPTH: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub levels: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub runtime_ms: u64,
}

impl CheckReport {
    fn pass(levels: usize) -> CheckReport {
        CheckReport {
            check: String::new(),
            status: Status::Pass,
            witness: None,
            levels,
            notes: Vec::new(),
            runtime_ms: 0,
        }
    }

    fn fail(levels: usize, witness: Value) -> CheckReport {
        CheckReport {
            status: Status::Fail,
            witness: Some(witness),
            ..CheckReport::pass(levels)
        }
    }

    fn skip(reason: impl Into<String>) -> CheckReport {
        CheckReport {
            status: Status::Skip,
            notes: vec![reason.into()],
            ..CheckReport::pass(0)
        }
    }

    fn note(mut self, s: impl Into<String>) -> CheckReport {
        self.notes.push(s.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub preset: String,
    pub depth: usize,
    pub seed: u64,
    pub samples: usize,
    pub oracle_depth: usize,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.check.as_str()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Sampled pairs for the ratio identity; paths per level for separators.
    pub samples: usize,
    pub oracle_depth: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            oracle_depth: DEFAULT_ORACLE_DEPTH,
        }
    }
}

pub struct VerifyContext<'a> {
    pub bundle: &'a ConstructionBundle,
    pub options: VerifyOptions,
}

impl VerifyContext<'_> {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.options.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn depth(&self) -> usize {
        self.bundle.depth()
    }
}

pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport>;
}

pub fn checks() -> Vec<Arc<dyn Check>> {
    vec![
        Arc::new(DelayForm),
        Arc::new(NoOverlap),
        Arc::new(Conservation),
        Arc::new(SnBound),
        Arc::new(Outflow),
        Arc::new(Duplication),
        Arc::new(RatioIdentity),
        Arc::new(Separators),
        Arc::new(Oracle),
        Arc::new(DiscardSemantics),
        Arc::new(EdgeTyping),
        Arc::new(HyperimmuneShape),
    ]
}

pub fn check_names() -> Vec<&'static str> {
    checks().iter().map(|c| c.name()).collect()
}

/// Resolve a comma list of check names, or `all`.
pub fn select(selector: &str) -> Result<Vec<Arc<dyn Check>>> {
    let all = checks();
    if selector.trim() == "all" {
        return Ok(all);
    }
    let mut out = Vec::new();
    for name in selector.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c = all.iter().find(|c| c.name() == name).ok_or_else(|| Error::UnknownName {
            kind: "check",
            name: name.into(),
            known: check_names().join(", "),
        })?;
        out.push(c.clone());
    }
    Ok(out)
}

pub fn run_checks(bundle: &ConstructionBundle, selected: &[Arc<dyn Check>], options: VerifyOptions) -> Result<SuiteReport> {
    let cx = VerifyContext { bundle, options };
    let mut reports = Vec::new();
    for c in selected {
        let t = Instant::now();
        let mut r = c.run(&cx)?;
        r.check = c.name().to_string();
        r.runtime_ms = t.elapsed().as_millis() as u64;
        reports.push(r);
    }
    Ok(SuiteReport {
        preset: bundle.config.preset.clone(),
        depth: bundle.depth(),
        seed: options.seed,
        samples: options.samples,
        oracle_depth: options.oracle_depth,
        checks: reports,
    })
}

pub fn verify_all(bundle: &ConstructionBundle, options: VerifyOptions) -> Result<SuiteReport> {
    run_checks(bundle, &checks(), options)
}

fn edge_json(net: &Network, k: usize) -> Value {
    let e = &net.edges[k];
    json!({ "network": net.id, "from": e.from, "to": e.to, "q": fmt_q(&e.q), "step": e.step, "task": e.task })
}

fn random_string(rng: &mut ChaCha8Rng, len: usize) -> BitString {
    let v: u128 = rng.gen();
    let mask = if len >= 128 { u128::MAX } else { (1u128 << len) - 1 };
    BitString::from_value(len, v & mask)
}

/// Every stored delay is 0 or a unit fraction.
pub struct DelayForm;

impl Check for DelayForm {
    fn name(&self) -> &'static str {
        "delay-form"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        for net in &cx.bundle.networks {
            for (n, table) in net.levels.iter().enumerate() {
                if !Network::is_unit_or_zero(&table.default) {
                    return Ok(CheckReport::fail(n, json!({ "network": net.id, "level": n, "key": "default", "value": fmt_q(&table.default) })));
                }
                for e in &table.exceptions {
                    if !Network::is_unit_or_zero(&e.value) {
                        return Ok(CheckReport::fail(
                            n,
                            json!({ "network": net.id, "level": n, "key": format!("{:?}", e.key.pattern()), "value": fmt_q(&e.value) }),
                        ));
                    }
                }
            }
        }
        Ok(CheckReport::pass(cx.depth()))
    }
}

/// No extra edge starts strictly inside another and ends beyond it.
pub struct NoOverlap;

impl Check for NoOverlap {
    fn name(&self) -> &'static str {
        "no-overlap"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        for net in &cx.bundle.networks {
            for (k, e) in net.edges.iter().enumerate() {
                for t in 0..e.from.len() {
                    let Some(outer) = net.edge_from(&e.from.prefix(t)) else { continue };
                    if e.from.is_proper_prefix_of(&outer.to) && outer.to.len() < e.to.len() {
                        let j = net.edges.iter().position(|o| o.from == outer.from).unwrap();
                        return Ok(CheckReport::fail(
                            e.from.len(),
                            json!({ "outer": edge_json(net, j), "inner": edge_json(net, k) }),
                        ));
                    }
                }
            }
        }
        Ok(CheckReport::pass(cx.depth()))
    }
}

/// Level mass identity, checked against the stored aggregates and the discard split.
pub struct Conservation;

impl Check for Conservation {
    fn name(&self) -> &'static str {
        "conservation"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        let b = cx.bundle;
        let discarded = discarded_mass(b);
        for (m, net) in b.networks.iter().enumerate() {
            let stored = &b.aggregates[m];
            if stored.len() != net.depth() + 1 {
                return Ok(CheckReport::fail(0, json!({ "network": net.id, "stored_levels": stored.len(), "depth": net.depth() })));
            }
            for n in 0..=net.depth() {
                let a = &stored[n];
                let fail = |what: &str, expected: &Q, found: &Q| {
                    CheckReport::fail(
                        n,
                        json!({ "network": net.id, "level": n, "quantity": what, "expected": fmt_q(expected), "found": fmt_q(found) }),
                    )
                };
                let inflow = net.level_inflow(n);
                if a.extra_inflow != inflow {
                    return Ok(fail("extra inflow", &inflow, &a.extra_inflow));
                }
                let carried = if n == 0 {
                    Q::one()
                } else {
                    &stored[n - 1].total_r - &stored[n - 1].delayed + &a.extra_inflow
                };
                if a.total_r != carried {
                    return Ok(fail("carried total", &carried, &a.total_r));
                }
                let direct = net.total(n);
                if a.total_r != direct {
                    return Ok(fail("direct total", &direct, &a.total_r));
                }
                let delayed = net.delayed(n);
                if a.delayed != delayed {
                    return Ok(fail("delayed", &delayed, &a.delayed));
                }
                let s_n = &a.total_r - &a.extra_inflow;
                if a.s_n != s_n {
                    return Ok(fail("S_n", &s_n, &a.s_n));
                }
                if let Some(d) = discarded.get(&(net.id, n)) {
                    if d > &a.delayed {
                        return Ok(fail("discarded part of delayed mass", &a.delayed, d));
                    }
                }
            }
        }
        Ok(CheckReport::pass(cx.depth()))
    }
}

/// Recorded discard mass per (network, level).
fn discarded_mass(b: &ConstructionBundle) -> BTreeMap<(usize, usize), Q> {
    let mut out: BTreeMap<(usize, usize), Q> = BTreeMap::new();
    for r in &b.provenance {
        for d in &r.discards {
            *out.entry((d.network, r.step)).or_insert_with(Q::zero) += &d.mass;
        }
    }
    out
}

/// `S_n >= 1 - Σ_{t<=n} (t+ρ)^-2 - allowance` and `S_n >= 1/2`.
pub struct SnBound;

impl SnBound {
    fn allowances(b: &ConstructionBundle) -> BTreeMap<usize, Vec<(usize, Q)>> {
        let mut out: BTreeMap<usize, Vec<(usize, Q)>> = BTreeMap::new();
        for r in &b.provenance {
            for d in &r.discards {
                out.entry(d.network).or_default().push((r.step, rational::pow2_neg(d.bound_exponent)));
            }
        }
        out
    }
}

impl Check for SnBound {
    fn name(&self) -> &'static str {
        "sn-bound"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        let b = cx.bundle;
        let params = b.config.params;
        let half = rational::q(1, 2);
        let allowances = Self::allowances(b);
        let mut lowest: Option<Q> = None;
        for net in &b.networks {
            let stats = level_stats(net);
            let mut case_one = Q::zero();
            for a in &stats {
                let n = a.level;
                if n > 0 {
                    case_one += params.case_one_delay(n);
                }
                let allowance: Q = allowances
                    .get(&net.id)
                    .map(|v| v.iter().filter(|(step, _)| *step <= n).map(|(_, q)| q.clone()).sum())
                    .unwrap_or_else(Q::zero);
                let bound = Q::one() - &case_one - &allowance;
                if a.s_n < bound || a.s_n < half {
                    return Ok(CheckReport::fail(
                        n,
                        json!({ "network": net.id, "level": n, "s_n": fmt_q(&a.s_n), "bound": fmt_q(&bound), "allowance": fmt_q(&allowance) }),
                    ));
                }
                if lowest.as_ref().is_none_or(|l| &a.s_n < l) {
                    lowest = Some(a.s_n.clone());
                }
            }
        }
        let r = CheckReport::pass(cx.depth());
        Ok(match lowest {
            Some(l) => r.note(format!("lowest S_n {}", fmt_q(&l))),
            None => r,
        })
    }
}

/// Every delay lies in [0, 1] and no vertex sends more than its delay along an extra edge.
pub struct Outflow;

impl Check for Outflow {
    fn name(&self) -> &'static str {
        "outflow"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        for net in &cx.bundle.networks {
            for (n, table) in net.levels.iter().enumerate() {
                if let Some(v) = table.values().find(|v| !Network::check_value(v)) {
                    return Ok(CheckReport::fail(n, json!({ "network": net.id, "level": n, "value": fmt_q(v) })));
                }
            }
            for (k, e) in net.edges.iter().enumerate() {
                let s = net.delay(&e.from)?;
                if e.q > s || e.q < Q::zero() {
                    return Ok(CheckReport::fail(e.from.len(), json!({ "edge": edge_json(net, k), "delay": fmt_q(&s) })));
                }
            }
        }
        Ok(CheckReport::pass(cx.depth()))
    }
}

/// Template-2 edges come in full mirror classes with one share per class.
pub struct Duplication;

impl Check for Duplication {
    fn name(&self) -> &'static str {
        "duplication"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        if !cx.bundle.preset()?.template2() {
            return Ok(CheckReport::skip("not applicable: edges are not mirrored"));
        }
        let mut classes = 0usize;
        for net in &cx.bundle.networks {
            let mut by_class: BTreeMap<(usize, usize, BitString, BitString), Vec<usize>> = BTreeMap::new();
            for (k, e) in net.edges.iter().enumerate() {
                let w = e.mirror_free;
                let key = (e.step, w, e.from.segment(w + 1, e.from.len()), e.to.segment(w + 1, e.to.len()));
                by_class.entry(key).or_default().push(k);
            }
            for ((step, w, from, to), members) in &by_class {
                classes += 1;
                let q0 = &net.edges[members[0]].q;
                let unequal = members.iter().find(|&&k| &net.edges[k].q != q0);
                let expected = 1usize.checked_shl(*w as u32).unwrap_or(usize::MAX);
                if unequal.is_some() || members.len() != expected {
                    let edges: Vec<Value> = members.iter().map(|&k| edge_json(net, k)).collect();
                    return Ok(CheckReport::fail(
                        *step,
                        json!({
                            "network": net.id, "step": step, "w": w,
                            "class": format!("{}{} -> {}{}", "*".repeat(*w), from, "*".repeat(*w), to),
                            "size": members.len(), "expected_size": expected, "edges": edges,
                        }),
                    ));
                }
            }
        }
        Ok(CheckReport::pass(cx.depth()).note(format!("{classes} classes")))
    }
}

/// `P(y)/P(y^w) = P(z)/P(z^w)` for sampled `y ∼_w z`, `w` a stabilized session start.
/// A task whose session start held still over the final quarter, with the network it mirrors in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StableTask {
    pub task: u64,
    pub w: usize,
    /// Zero-based network index.
    pub network: usize,
}

/// Stabilized tasks with `w` below `depth`, and the number of tasks the run reached.
pub fn stable_tasks(b: &ConstructionBundle, depth: usize) -> (Vec<StableTask>, usize) {
    let tasks = b.schedule.tasks_up_to(depth);
    let mut base_of: BTreeMap<u64, usize> = BTreeMap::new();
    for r in &b.provenance {
        if let Some(m) = r.base {
            base_of.insert(r.task, m - 1);
        }
    }
    let stable = tasks
        .iter()
        .filter_map(|&task| {
            let w = b.schedule.stabilized(task, depth)?;
            let network = *base_of.get(&task)?;
            (w < depth).then_some(StableTask { task, w, network })
        })
        .collect();
    (stable, tasks.len())
}

pub struct RatioIdentity;

impl Check for RatioIdentity {
    fn name(&self) -> &'static str {
        "ratio-identity"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        let b = cx.bundle;
        if !b.preset()?.template2() {
            return Ok(CheckReport::skip("not applicable: edges are not mirrored"));
        }
        let depth = cx.depth();
        let (stable, total) = stable_tasks(b, depth);
        let coverage = format!("{} of {} tasks stabilized", stable.len(), total);
        if stable.is_empty() {
            return Ok(CheckReport::skip(format!("no stabilized task below depth ({coverage})")));
        }
        let mut rng = cx.rng(1);
        let (mut checked, mut skipped) = (0usize, 0usize);
        for _ in 0..cx.options.samples {
            let StableTask { task: i, w, network: m } = stable[rng.gen_range(0..stable.len())];
            let net = &b.networks[m];
            let len = rng.gen_range(w + 1..=depth);
            let y = random_string(&mut rng, len);
            let z = y.with_prefix(&random_string(&mut rng, w));
            let (py_w, pz_w) = (net.flow(&y.prefix(w)), net.flow(&z.prefix(w)));
            if py_w.is_zero() || pz_w.is_zero() {
                skipped += 1;
                continue;
            }
            checked += 1;
            let (py, pz) = (net.flow(&y), net.flow(&z));
            if &py * &pz_w != &pz * &py_w {
                return Ok(CheckReport::fail(
                    len,
                    json!({
                        "network": net.id, "task": i, "w": w, "y": y, "z": z,
                        "P(y)": fmt_q(&py), "P(y^w)": fmt_q(&py_w), "P(z)": fmt_q(&pz), "P(z^w)": fmt_q(&pz_w),
                    }),
                ));
            }
        }
        Ok(CheckReport::pass(depth)
            .note(coverage)
            .note(format!("{checked} pairs equal, {skipped} skipped for zero flow, seed {}", cx.options.seed)))
    }
}

/// Levels no edge crosses, where flow must at least halve; stabilized session starts must be among them.
pub struct Separators;

impl Separators {
    /// An edge `(x, y)` with `l(x) < n <= l(y)`, if any.
    fn crossing(net: &Network, n: usize) -> Option<usize> {
        net.edges.iter().position(|e| e.from.len() < n && e.to.len() >= n)
    }
}

impl Check for Separators {
    fn name(&self) -> &'static str {
        "separators"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        let b = cx.bundle;
        let depth = cx.depth();
        let mut rng = cx.rng(2);
        let per_level = (cx.options.samples / depth.max(1)).max(8);
        let mut separators = 0usize;
        for net in &b.networks {
            for n in 1..=depth {
                if Self::crossing(net, n).is_some() {
                    continue;
                }
                separators += 1;
                let paths: Vec<BitString> = if n < 64 && (1usize << n) <= per_level {
                    (0..1u128 << n).map(|v| BitString::from_value(n, v)).collect()
                } else {
                    (0..per_level).map(|_| random_string(&mut rng, n)).collect()
                };
                for x in paths {
                    let (p, parent) = (net.flow(&x), net.flow(&x.prefix(n - 1)));
                    if &p + &p > parent {
                        return Ok(CheckReport::fail(
                            n,
                            json!({ "network": net.id, "level": n, "vertex": x, "P(x)": fmt_q(&p), "P(parent)": fmt_q(&parent) }),
                        ));
                    }
                }
            }
        }
        let mut proxies = 0usize;
        for i in b.schedule.tasks_up_to(depth) {
            let Some(w) = b.schedule.stabilized(i, depth) else { continue };
            proxies += 1;
            for net in &b.networks {
                if let Some(k) = Self::crossing(net, w) {
                    return Ok(CheckReport::fail(w, json!({ "task": i, "w": w, "crossing": edge_json(net, k) })));
                }
            }
        }
        Ok(CheckReport::pass(depth).note(format!("{separators} separating levels, {proxies} session starts")))
    }
}

/// Literal dense rerun agrees exactly with the bundle (or with a sparse rerun truncated to the
/// oracle depth).
pub struct Oracle;

impl Check for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        let b = cx.bundle;
        let d = cx.options.oracle_depth.min(DENSE_MAX_DEPTH);
        let (compared, note) = if b.depth() <= d {
            let dense = dense::run(&b.config)?;
            (dense::compare(b, &dense), format!("bundle compared at depth {}", b.depth()))
        } else {
            let mut cfg = b.config.clone();
            cfg.depth = d;
            cfg.mode = Mode::Sparse;
            let sparse = presets::build(&cfg)?;
            let dense = dense::run(&cfg)?;
            (dense::compare(&sparse, &dense), format!("rerun compared at depth {d}"))
        };
        Ok(match compared {
            Ok(count) => CheckReport::pass(b.depth().min(d)).note(note).note(format!("{count} values equal")),
            Err(m) => CheckReport::fail(
                m.level,
                json!({
                    "network": m.network, "quantity": m.quantity, "level": m.level, "vertex": m.vertex,
                    "sparse": m.sparse, "dense": m.dense,
                }),
            )
            .note(note),
        })
    }
}

/// Discarded sets respect their mass bound, carry delay 1, and pass nothing to their children.
pub struct DiscardSemantics;

impl DiscardSemantics {
    const EXHAUSTIVE_LEVEL: usize = 16;

    fn members(n: usize, pattern: &Pattern, rng: &mut ChaCha8Rng, samples: usize) -> Vec<BitString> {
        if n <= Self::EXHAUSTIVE_LEVEL {
            return (0..1u128 << n).map(|v| BitString::from_value(n, v)).filter(|z| pattern.matches(z)).collect();
        }
        (0..samples)
            .map(|_| {
                let r = random_string(rng, n);
                let end = pattern.end();
                r.prefix(pattern.free).concat(&pattern.fixed).concat(&r.segment(end + 1, n))
            })
            .collect()
    }
}

impl Check for DiscardSemantics {
    fn name(&self) -> &'static str {
        "discard"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        let b = cx.bundle;
        let mut rng = cx.rng(3);
        let mut sets = 0usize;
        let mut vertices = 0usize;
        for r in &b.provenance {
            let n = r.step;
            for d in &r.discards {
                sets += 1;
                let net = &b.networks[d.network - 1];
                let mass: Q = d.patterns.iter().map(|p| net.pattern_mass(n, p)).sum();
                let bound = rational::pow2_neg(d.bound_exponent);
                if mass != d.mass || mass > bound {
                    return Ok(CheckReport::fail(
                        n,
                        json!({
                            "network": d.network, "step": n, "source": d.source,
                            "recorded_mass": fmt_q(&d.mass), "mass": fmt_q(&mass), "bound": fmt_q(&bound),
                        }),
                    ));
                }
                for p in &d.patterns {
                    for z in Self::members(n, p, &mut rng, 16) {
                        vertices += 1;
                        let s = net.delay(&z)?;
                        if !s.is_one() {
                            return Ok(CheckReport::fail(n, json!({ "network": d.network, "step": n, "vertex": z, "delay": fmt_q(&s) })));
                        }
                        if n < net.depth() {
                            for c in [z.push(0), z.push(1)] {
                                let (frame, inflow) = (net.frame(&c), net.inflow(&c));
                                if frame != inflow {
                                    return Ok(CheckReport::fail(
                                        n + 1,
                                        json!({
                                            "network": d.network, "step": n, "vertex": z, "child": c,
                                            "R(child)": fmt_q(&frame), "extra_inflow": fmt_q(&inflow),
                                        }),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(CheckReport::pass(cx.depth()).note(format!("{sets} discard sets, {vertices} vertices")))
    }
}

/// Every edge satisfies the predicate of the step that drew it.
pub struct EdgeTyping;

impl Check for EdgeTyping {
    fn name(&self) -> &'static str {
        "edge-typing"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        let b = cx.bundle;
        let preset = b.preset()?;
        let (ops, _) = b.rosters()?;
        for net in &b.networks {
            for (k, e) in net.edges.iter().enumerate() {
                let fail = |why: &str| Ok(CheckReport::fail(e.step, json!({ "edge": edge_json(net, k), "reason": why })));
                let Some(r) = b.provenance.get(e.step.wrapping_sub(1)).filter(|r| r.step == e.step) else {
                    return fail("no step record");
                };
                if r.base != Some(net.id) {
                    return fail("edge drawn outside the step's base network");
                }
                if r.task != e.task {
                    return fail("edge task differs from the step's task");
                }
                // mirrored edges are judged through the leading edge of their class
                let w = e.mirror_free;
                let same_class = |x: &BitString, y: &BitString| {
                    x.len() == e.from.len()
                        && y.len() == e.to.len()
                        && x.segment(w + 1, x.len()) == e.from.segment(w + 1, e.from.len())
                        && y.segment(w + 1, y.len()) == e.to.segment(w + 1, e.to.len())
                };
                let Some(&(from, to)) = r.edges.iter().find(|(x, y)| same_class(x, y)) else {
                    return fail("not in the class of a recorded leading edge");
                };
                let op = r.operator.map(|p| ops.base(p));
                if preset.length_gain() {
                    let v = op.unwrap_or_else(|| ops.operator(e.task)).apply_modified(&to)?;
                    if (v.len() as u128) <= index_of(&from) + e.task as u128 {
                        return fail("image too short for the length predicate");
                    }
                } else if r.target.is_none() && op.is_some() {
                    let v = op.unwrap().apply_modified(&to)?;
                    if v.is_prefix_of(&to) {
                        return fail("image is a prefix of the edge target");
                    }
                }
                if r.target.is_some() || (!preset.length_gain() && op.is_some()) {
                    let suffix = e.from.segment(w + 1, e.from.len());
                    let covered = r.discards.iter().any(|d| {
                        d.source.len() == e.from.len()
                            && d.source.segment(w + 1, d.source.len()) == suffix
                            && d.bound_exponent == index_of(&d.source) + 3
                            && d.mass <= rational::pow2_neg(d.bound_exponent)
                    });
                    if !covered {
                        return fail("no discard record within its bound");
                    }
                }
                if r.target.is_none() && op.is_none() && e.to != SparseShape::shape(&e.from, e.to.len()) {
                    return fail("sparse edge without the one-then-zeros shape");
                }
            }
        }
        Ok(CheckReport::pass(cx.depth()))
    }
}

/// Odd-task edges have the shape `σ₁·1·0^k` and meet the function bound.
pub struct HyperimmuneShape;

impl Check for HyperimmuneShape {
    fn name(&self) -> &'static str {
        "hyperimmune-shape"
    }
    fn run(&self, cx: &VerifyContext) -> Result<CheckReport> {
        let b = cx.bundle;
        if b.config.preset != "hyperimmune" {
            return Ok(CheckReport::skip("not applicable: no sparsity tasks"));
        }
        let (_, funcs) = b.rosters()?;
        let mut count = 0usize;
        for net in &b.networks {
            for (k, e) in net.edges.iter().enumerate().filter(|(_, e)| e.task % 2 == 1) {
                count += 1;
                let fail = |why: &str| Ok(CheckReport::fail(e.step, json!({ "edge": edge_json(net, k), "reason": why })));
                if e.to != SparseShape::shape(&e.from, e.to.len()) {
                    return fail("target is not source, one, zeros");
                }
                let j = unpair_1(e.task.div_ceil(2));
                let arg = e.from.len() as u64 + 2;
                let f = match funcs.phi_bounded(j, arg, e.to.len() as u64) {
                    Bounded::Value(v) if v <= e.to.len() as u64 => v as usize,
                    _ => return fail("function bound not met within the target length"),
                };
                // every path through the edge has fewer than arg ones among its first f bits
                if e.to.prefix(f).count_ones() as u64 >= arg {
                    return fail("sparsity prefix has too many ones");
                }
            }
        }
        Ok(CheckReport::pass(cx.depth()).note(format!("{count} sparsity edges")))
    }
}
