//! Step engines: plan one level of one network, then apply the plans of all networks.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bitseq::{index_of, BitString};
use crate::error::{Error, Result};
use crate::network::{ExtraEdge, LevelTable, Network, Pattern};
use crate::operators::{FunctionRoster, OperatorRoster};
use crate::predicates::{mirror_pairs, Discard, EdgePredicate, StepContext, WorkMeter};
use crate::rational::{self, Q};
use crate::scheduler::Schedule;

/// Run-wide step parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepParams {
    /// Case-1 delays are `1/(n + rho_offset)^2`.
    pub rho_offset: u64,
    /// Reject edges whose discard set would meet the source subtree instead of trimming it.
    pub reject_overlap: bool,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            rho_offset: 3,
            reject_overlap: false,
        }
    }
}

impl StepParams {
    pub fn case_one_delay(&self, n: usize) -> Q {
        let m = BigInt::from(n as u64 + self.rho_offset);
        Q::new(BigInt::one(), &m * &m)
    }
}

/// Which networks a step touches and which roster entries it uses.
#[derive(Clone, Copy, Debug)]
pub struct Role {
    /// 0-based position of the network edges are drawn in.
    pub base: usize,
    pub target: Option<usize>,
    pub task: u64,
    pub op_index: Option<u64>,
    pub func_index: u64,
}

/// The plan for the base network of one step.
#[derive(Clone, Debug)]
pub struct BasePlan {
    pub case: u8,
    pub table: LevelTable,
    pub edges: Vec<ExtraEdge>,
    pub leading: Vec<(BitString, BitString)>,
    pub discards: Vec<Discard>,
    pub w: Option<usize>,
    pub w_sub: Option<usize>,
    pub note: Option<String>,
}

impl BasePlan {
    fn zero(case: u8, w: Option<usize>, w_sub: Option<usize>, note: Option<&str>) -> BasePlan {
        BasePlan {
            case,
            table: LevelTable::uniform(Q::zero()),
            edges: Vec::new(),
            leading: Vec::new(),
            discards: Vec::new(),
            w,
            w_sub,
            note: note.map(str::to_string),
        }
    }
}

/// Read-only view used while a step is planned.
pub struct Engine<'a> {
    pub nets: &'a [Network],
    pub sched: &'a Schedule,
    pub ops: &'a OperatorRoster,
    pub funcs: &'a FunctionRoster,
    pub params: StepParams,
    pub work: &'a WorkMeter,
}

impl<'a> Engine<'a> {
    fn context(&self, n: usize, role: &Role, w: usize, mirror: usize) -> StepContext<'a> {
        StepContext {
            n,
            task: role.task,
            w,
            mirror,
            op: role.op_index.map(|i| self.ops.operator(i)),
            funcs: self.funcs,
            func_index: role.func_index,
            base: &self.nets[role.base],
            target: role.target.map(|t| &self.nets[t]),
            reject_overlap: self.params.reject_overlap,
            work: self.work,
        }
    }

    fn case_one(&self, n: usize, w: Option<usize>, w_sub: Option<usize>) -> BasePlan {
        let mut p = BasePlan::zero(1, w, w_sub, None);
        p.table = LevelTable::uniform(self.params.case_one_delay(n));
        p
    }

    /// Template 1: every candidate gets an edge.
    pub fn t1(&self, n: usize, role: &Role, pred: &dyn EdgePredicate) -> Result<BasePlan> {
        let i = role.task;
        let Some(w) = self.sched.w_session(i, n) else {
            return Ok(BasePlan::zero(3, None, None, Some("no session start")));
        };
        if w == n {
            return Ok(self.case_one(n, Some(w), None));
        }
        let ctx = self.context(n, role, w, 0);
        let found = candidates(&ctx, pred, self.sched, i, None, w, &BitString::EMPTY)?;
        if found.is_empty() {
            return Ok(BasePlan::zero(3, Some(w), None, None));
        }
        self.case_two(&ctx, role, pred, found, Some(w), None, 0, None)
    }

    /// Template 1 with a single designated candidate whose edge discards vertices.
    pub fn t1_discard(&self, n: usize, role: &Role, pred: &dyn EdgePredicate, designated: &BitString) -> Result<BasePlan> {
        let i = role.task;
        let Some(w) = self.sched.w_session(i, n) else {
            return Ok(BasePlan::zero(3, None, None, Some("no session start")));
        };
        if w == n {
            return Ok(self.case_one(n, Some(w), None));
        }
        let ctx = self.context(n, role, w, 0);
        let x = *designated;
        let net = ctx.base;
        let eligible = x.len() < n
            && x.len() >= w
            && self.sched.task(x.len()) == i
            && net.delay(&x)?.is_positive()
            && net.edge_from(&x).is_none();
        let beta = if eligible { beta(&ctx, pred, &x)? } else { None };
        match beta {
            None => Ok(BasePlan::zero(3, Some(w), None, Some("designated vertex is not a candidate"))),
            Some(y) => self.case_two(&ctx, role, pred, vec![(x, y)], Some(w), None, 0, None),
        }
    }

    /// Template 2: one subtask works in its leading subtree and every subtree mirrors it.
    pub fn t2(&self, n: usize, role: &Role, pred: &dyn EdgePredicate) -> Result<BasePlan> {
        let i = role.task;
        let k = self.sched.second(n).ok_or_else(|| Error::Config("template 2 needs a nested task stream".into()))?;
        let Some(w) = self.sched.w_session(i, n) else {
            return Ok(BasePlan::zero(3, None, None, Some("no session start")));
        };
        if w < 64 && k > (1u64 << w) {
            return Ok(BasePlan::zero(3, Some(w), None, Some("subtask beyond subtree count")));
        }
        let Some(wk) = self.sched.w_subsession(i, k, n) else {
            return Ok(BasePlan::zero(3, Some(w), None, Some("no sub-session start")));
        };
        if wk == n {
            return Ok(self.case_one(n, Some(w), Some(wk)));
        }
        let ctx = self.context(n, role, w, w);
        let root = BitString::from_value(w, (k - 1) as u128);
        let found = candidates(&ctx, pred, self.sched, i, Some(k), wk, &root)?;
        if found.is_empty() {
            return Ok(BasePlan::zero(3, Some(w), Some(wk), None));
        }
        self.case_two(&ctx, role, pred, found, Some(w), Some(wk), w, Some(k))
    }

    #[allow(clippy::too_many_arguments)]
    fn case_two(
        &self,
        ctx: &StepContext,
        role: &Role,
        pred: &dyn EdgePredicate,
        mut found: Vec<(BitString, BitString)>,
        w: Option<usize>,
        w_sub: Option<usize>,
        mirror: usize,
        subtask: Option<u64>,
    ) -> Result<BasePlan> {
        let n = ctx.n;
        let net = ctx.base;
        found.sort_by_key(|(x, _)| index_of(x));
        let mut plan = BasePlan::zero(2, w, w_sub, None);
        let conflict = |detail: String| Error::DelayConflict {
            network: net.id,
            level: n,
            detail,
        };
        for (x, y) in &found {
            let s = net.delay(x)?;
            for (x2, y2) in mirror_pairs(x, y, mirror) {
                let s2 = net.delay(&x2)?;
                if s > s2 {
                    return Err(Error::OutflowViolation {
                        network: net.id,
                        source_vertex: x2,
                        flow: rational::fmt_q(&s),
                        delay: rational::fmt_q(&s2),
                    });
                }
                if net.edge_from(&x2).is_some() || plan.edges.iter().any(|e| e.from == x2) {
                    return Err(Error::DuplicationConflict {
                        network: net.id,
                        source_vertex: x2,
                    });
                }
                plan.edges.push(ExtraEdge {
                    network: net.id,
                    from: x2,
                    to: y2,
                    q: s.clone(),
                    task: role.task,
                    subtask,
                    step: n,
                    w: w.unwrap_or(0),
                    mirror_free: mirror,
                });
            }
            let target_key = Pattern {
                free: mirror,
                fixed: y.segment(mirror + 1, n),
            };
            plan.table.insert(n, target_key, Q::zero()).map_err(conflict)?;
            let rest = if s == Q::one() { Q::zero() } else { rational::odds_ratio(&s) };
            let below = Pattern {
                free: mirror,
                fixed: x.segment(mirror + 1, x.len()),
            };
            plan.table.insert(n, below, rest).map_err(conflict)?;
            plan.leading.push((*x, *y));
        }
        for (x, y) in &found {
            if let Some(d) = pred.discards(ctx, x, y)? {
                plan.discards.push(d);
            }
        }
        // discards in the base network itself land in the same level table
        for d in plan.discards.iter().filter(|d| d.network == net.id) {
            for p in &d.patterns {
                plan.table.insert(n, *p, Q::one()).map_err(conflict)?;
            }
        }
        Ok(plan)
    }
}

/// The least length-`n` extension `y` of `x` with `B(x, y)`, searched in numeric order.
pub fn beta(ctx: &StepContext, pred: &dyn EdgePredicate, x: &BitString) -> Result<Option<BitString>> {
    fn go(ctx: &StepContext, pred: &dyn EdgePredicate, x: &BitString, p: BitString) -> Result<Option<BitString>> {
        ctx.work.tick(ctx.n)?;
        if !pred.may_hold(ctx, Some(x), index_of(x), &p)? {
            return Ok(None);
        }
        if p.len() == ctx.n {
            return Ok(pred.holds(ctx, x, &p)?.then_some(p));
        }
        for b in 0..2 {
            if let Some(y) = go(ctx, pred, x, p.push(b))? {
                return Ok(Some(y));
            }
        }
        Ok(None)
    }
    if x.len() >= ctx.n {
        return Ok(None);
    }
    go(ctx, pred, x, *x)
}

/// Can some level-`l` vertex under `u` have a positive delay?
fn positive_possible(table: &LevelTable, u: &BitString) -> bool {
    let sub = Pattern::subtree(u);
    table.default.is_positive() || table.exceptions.iter().any(|e| e.value.is_positive() && e.key.pattern().overlaps(&sub))
}

/// Sources that need processing at step `n`, paired with their `β`, in index order.
pub fn candidates(
    ctx: &StepContext,
    pred: &dyn EdgePredicate,
    sched: &Schedule,
    i: u64,
    k: Option<u64>,
    lo: usize,
    root: &BitString,
) -> Result<Vec<(BitString, BitString)>> {
    let mut out = Vec::new();
    for l in lo.max(root.len())..ctx.n {
        if sched.task(l) != i || (k.is_some() && sched.second(l) != k) {
            continue;
        }
        if !pred.level_admissible(ctx, l) {
            continue;
        }
        let table = &ctx.base.levels[l];
        let mut stack = vec![*root];
        while let Some(u) = stack.pop() {
            ctx.work.tick(ctx.n)?;
            if !positive_possible(table, &u) {
                continue;
            }
            if u.len() == l {
                if table.resolve(&u).is_positive() && ctx.base.edge_from(&u).is_none() {
                    if let Some(y) = beta(ctx, pred, &u)? {
                        out.push((u, y));
                    }
                }
                continue;
            }
            let least = index_of(&u.concat(&BitString::zeros(l - u.len())));
            if !pred.may_hold(ctx, None, least, &u)? {
                continue;
            }
            stack.push(u.push(1));
            stack.push(u.push(0));
        }
    }
    out.sort_by_key(|(x, _)| index_of(x));
    Ok(out)
}

/// Provenance of one step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub task: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtask: Option<u64>,
    /// 1, 2 or 3; 0 marks a step skipped because its networks coincide after wrapping.
    pub case: u8,
    pub w: Option<usize>,
    pub w_sub: Option<usize>,
    pub base: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<usize>,
    pub edges: Vec<(BitString, BitString)>,
    pub edges_total: usize,
    pub discards: Vec<DiscardRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub network: usize,
    pub source: BitString,
    pub patterns: Vec<Pattern>,
    #[serde(with = "rational::serde_q")]
    pub mass: Q,
    pub bound_exponent: u128,
}

impl From<&Discard> for DiscardRecord {
    fn from(d: &Discard) -> Self {
        DiscardRecord {
            network: d.network,
            source: d.source,
            patterns: d.patterns.clone(),
            mass: d.mass.clone(),
            bound_exponent: d.bound_exponent,
        }
    }
}

/// Level-`n` tables for every network plus the edges to add.
#[derive(Clone, Debug)]
pub struct StepPlan {
    pub tables: Vec<LevelTable>,
    pub edges: Vec<ExtraEdge>,
    pub record: StepRecord,
}

impl StepPlan {
    /// A plan that zeroes the level everywhere.
    pub fn zeroed(count: usize, record: StepRecord) -> StepPlan {
        StepPlan {
            tables: vec![LevelTable::uniform(Q::zero()); count],
            edges: Vec::new(),
            record,
        }
    }

    /// Fold a base plan into a full step plan; discards on other networks become their tables.
    pub fn from_base(count: usize, role: &Role, base: BasePlan, mut record: StepRecord) -> Result<StepPlan> {
        let mut tables = vec![LevelTable::uniform(Q::zero()); count];
        let n = record.step;
        for d in base.discards.iter().filter(|d| d.network != role.base + 1) {
            let t = &mut tables[d.network - 1];
            for p in &d.patterns {
                t.insert(n, *p, Q::one()).map_err(|detail| Error::DelayConflict {
                    network: d.network,
                    level: n,
                    detail,
                })?;
            }
        }
        tables[role.base] = base.table;
        record.case = base.case;
        record.w = base.w;
        record.w_sub = base.w_sub;
        record.edges = base.leading;
        record.edges_total = base.edges.len();
        record.discards = base.discards.iter().map(DiscardRecord::from).collect();
        record.note = base.note;
        Ok(StepPlan {
            tables,
            edges: base.edges,
            record,
        })
    }
}

/// Apply a plan: append each network's level table and add the drawn edges.
pub fn apply(nets: &mut [Network], sched: &mut Schedule, plan: StepPlan) -> Result<StepRecord> {
    for (net, table) in nets.iter_mut().zip(plan.tables) {
        net.push_level(table);
    }
    for e in plan.edges {
        sched.record(&e);
        let k = e.network - 1;
        nets[k].add_edge(e)?;
    }
    Ok(plan.record)
}
