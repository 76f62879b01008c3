//! The five constructions, selected by name, and the build loop.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bitseq::{restricted_triple_enumerate, string_of, unpair_1, BitString};
use crate::error::{Error, Result};
use crate::network::{level_stats, LevelAggregates, Network};
use crate::operators::{builtin, FunctionDescriptor, FunctionRoster, OperatorDescriptor, OperatorRoster, RosterDescriptor};
use crate::predicates::{EdgePredicate, LengthGain, SelfDiscard, SparseShape, TargetDiscard, WorkMeter};
use crate::scheduler::{Schedule, TaskStream};
use crate::templates::{apply, Engine, Role, StepParams, StepPlan, StepRecord};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Sparse,
    Dense,
}

pub const DENSE_MAX_DEPTH: usize = 14;
pub const DEFAULT_WORK_BUDGET: u64 = 20_000_000;

fn default_networks() -> usize {
    1
}

fn default_budget() -> u64 {
    DEFAULT_WORK_BUDGET
}

/// Everything that determines a build.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: String,
    pub depth: usize,
    #[serde(default = "default_networks")]
    pub networks: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roster: Option<RosterDescriptor>,
    #[serde(default)]
    pub params: StepParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub work_budget: u64,
}

impl RunConfig {
    pub fn new(preset: &str, depth: usize) -> RunConfig {
        let networks = if matches!(preset, "atom_family" | "hyperimmune") { 2 } else { 1 };
        RunConfig {
            preset: preset.to_string(),
            depth,
            networks,
            mode: Mode::Sparse,
            roster: None,
            params: StepParams::default(),
            seed: 0,
            work_budget: DEFAULT_WORK_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<Arc<dyn Preset>> {
        let p = preset(&self.preset)?;
        if self.depth > 120 {
            return Err(Error::Config(format!("depth {} exceeds the supported 120", self.depth)));
        }
        if self.networks < p.min_networks() {
            return Err(Error::Config(format!(
                "preset {} needs at least {} networks, got {}",
                p.name(),
                p.min_networks(),
                self.networks
            )));
        }
        if self.mode == Mode::Dense && self.depth > DENSE_MAX_DEPTH {
            return Err(Error::Config(format!("dense mode is capped at depth {DENSE_MAX_DEPTH}")));
        }
        if self.params.rho_offset == 0 {
            return Err(Error::Config("rho offset must be positive".into()));
        }
        let r = self.roster_descriptor(p.as_ref());
        OperatorRoster::from_descriptors(&r.operators)?;
        Ok(p)
    }

    pub fn roster_descriptor(&self, p: &dyn Preset) -> RosterDescriptor {
        self.roster.clone().unwrap_or_else(|| p.default_roster())
    }
}

/// Mutable state of a build in progress.
pub struct Run {
    pub config: RunConfig,
    pub ops: OperatorRoster,
    pub funcs: FunctionRoster,
    pub nets: Vec<Network>,
    pub sched: Schedule,
    pub work: WorkMeter,
}

impl Run {
    pub fn engine(&self) -> Engine<'_> {
        Engine {
            nets: &self.nets,
            sched: &self.sched,
            ops: &self.ops,
            funcs: &self.funcs,
            params: self.config.params,
            work: &self.work,
        }
    }

    fn record(&self, n: usize) -> StepRecord {
        StepRecord {
            step: n,
            task: self.sched.task(n),
            subtask: None,
            case: 3,
            w: None,
            w_sub: None,
            base: None,
            target: None,
            operator: None,
            edges: Vec::new(),
            edges_total: 0,
            discards: Vec::new(),
            note: None,
        }
    }

    /// 0-based network position for a 1-based index that may exceed the network count.
    pub fn wrap(&self, m: u64) -> usize {
        ((m - 1) % self.nets.len() as u64) as usize
    }
}

/// A named construction: a task stream, a template and a predicate.
pub trait Preset: Send + Sync {
    fn name(&self) -> &'static str;
    fn stream(&self) -> TaskStream;
    fn template2(&self) -> bool;
    fn min_networks(&self) -> usize {
        1
    }
    /// Edges satisfy `l(F̃_i(σ₂)) > σ₁ + i`, so test sets can be built from them.
    fn length_gain(&self) -> bool {
        false
    }
    fn default_roster(&self) -> RosterDescriptor;
    /// Roster for long sparse runs; differs from the default only where the default makes the
    /// edge set grow too fast to reach depth 48.
    fn deep_roster(&self) -> RosterDescriptor {
        self.default_roster()
    }
    fn plan(&self, run: &Run, n: usize) -> Result<StepPlan>;
}

fn builtins(names: &[&str]) -> Vec<OperatorDescriptor> {
    names
        .iter()
        .map(|n| OperatorDescriptor::Builtin { name: n.to_string() })
        .collect()
}

fn base_role(task: u64) -> Role {
    Role {
        base: 0,
        target: None,
        task,
        op_index: Some(task),
        func_index: 0,
    }
}

fn single_network(run: &Run, n: usize, role: Role, base: crate::templates::BasePlan) -> Result<StepPlan> {
    let mut record = run.record(n);
    record.base = Some(1);
    record.operator = Some(run.ops.base_of(role.task));
    record.subtask = if base.w_sub.is_some() || run.sched.stream == TaskStream::Nested {
        run.sched.second(n)
    } else {
        None
    };
    StepPlan::from_base(run.nets.len(), &role, base, record)
}

pub struct Nonstochastic;

impl Preset for Nonstochastic {
    fn name(&self) -> &'static str {
        "nonstochastic"
    }
    fn stream(&self) -> TaskStream {
        TaskStream::Flat
    }
    fn template2(&self) -> bool {
        false
    }
    fn length_gain(&self) -> bool {
        true
    }
    fn default_roster(&self) -> RosterDescriptor {
        RosterDescriptor {
            operators: builtins(&["identity", "half", "double", "constant-empty"]),
            functions: Vec::new(),
        }
    }
    fn plan(&self, run: &Run, n: usize) -> Result<StepPlan> {
        let role = base_role(run.sched.task(n));
        let base = run.engine().t1(n, &role, &LengthGain)?;
        single_network(run, n, role, base)
    }
}

pub struct Divisible;

impl Preset for Divisible {
    fn name(&self) -> &'static str {
        "divisible"
    }
    fn stream(&self) -> TaskStream {
        TaskStream::Nested
    }
    fn template2(&self) -> bool {
        false
    }
    fn default_roster(&self) -> RosterDescriptor {
        RosterDescriptor {
            operators: builtins(&["complement", "identity", "drop-first", "constant-one"]),
            functions: Vec::new(),
        }
    }
    fn plan(&self, run: &Run, n: usize) -> Result<StepPlan> {
        let role = base_role(run.sched.task(n));
        let code = run.sched.second(n).expect("nested stream");
        let designated: BitString = string_of(code as u128);
        let base = run.engine().t1_discard(n, &role, &SelfDiscard, &designated)?;
        single_network(run, n, role, base)
    }
}

pub struct Atom;

impl Preset for Atom {
    fn name(&self) -> &'static str {
        "atom"
    }
    fn stream(&self) -> TaskStream {
        TaskStream::Nested
    }
    fn template2(&self) -> bool {
        true
    }
    fn length_gain(&self) -> bool {
        true
    }
    fn default_roster(&self) -> RosterDescriptor {
        RosterDescriptor {
            operators: builtins(&["identity", "half", "double", "constant-empty"]),
            functions: Vec::new(),
        }
    }
    fn plan(&self, run: &Run, n: usize) -> Result<StepPlan> {
        let role = base_role(run.sched.task(n));
        let base = run.engine().t2(n, &role, &LengthGain)?;
        single_network(run, n, role, base)
    }
}

/// Run one family-style step: Template 2 on the base, discards on the target, zeros elsewhere.
fn family_step(run: &Run, n: usize, code: u64, pred: &dyn EdgePredicate) -> Result<StepPlan> {
    let (b, t, op) = restricted_triple_enumerate(code)?;
    let (base, target) = (run.wrap(b), run.wrap(t));
    let mut record = run.record(n);
    record.subtask = run.sched.second(n);
    record.base = Some(base + 1);
    record.target = Some(target + 1);
    record.operator = Some(run.ops.base_of(op));
    if base == target {
        record.case = 0;
        record.note = Some("base and target coincide after wrapping".into());
        return Ok(StepPlan::zeroed(run.nets.len(), record));
    }
    let role = Role {
        base,
        target: Some(target),
        task: run.sched.task(n),
        op_index: Some(op),
        func_index: 0,
    };
    let plan = run.engine().t2(n, &role, pred)?;
    StepPlan::from_base(run.nets.len(), &role, plan, record)
}

pub struct AtomFamily;

impl Preset for AtomFamily {
    fn name(&self) -> &'static str {
        "atom_family"
    }
    fn stream(&self) -> TaskStream {
        TaskStream::Nested
    }
    fn template2(&self) -> bool {
        true
    }
    fn min_networks(&self) -> usize {
        2
    }
    fn default_roster(&self) -> RosterDescriptor {
        RosterDescriptor {
            operators: builtins(&["complement", "half", "identity"]),
            functions: Vec::new(),
        }
    }
    fn deep_roster(&self) -> RosterDescriptor {
        RosterDescriptor {
            operators: vec![OperatorDescriptor::stride(10), OperatorDescriptor::Builtin { name: "half".into() }],
            functions: Vec::new(),
        }
    }
    fn plan(&self, run: &Run, n: usize) -> Result<StepPlan> {
        family_step(run, n, run.sched.task(n), &TargetDiscard)
    }
}

pub struct Hyperimmune;

impl Preset for Hyperimmune {
    fn name(&self) -> &'static str {
        "hyperimmune"
    }
    fn stream(&self) -> TaskStream {
        TaskStream::Nested
    }
    fn template2(&self) -> bool {
        true
    }
    fn min_networks(&self) -> usize {
        2
    }
    fn default_roster(&self) -> RosterDescriptor {
        RosterDescriptor {
            operators: builtins(&["complement", "half", "identity"]),
            functions: vec![
                FunctionDescriptor::Linear {
                    slope: 4,
                    intercept: 0,
                    cost_slope: 1,
                    cost_intercept: 0,
                },
                FunctionDescriptor::Undefined,
            ],
        }
    }
    fn plan(&self, run: &Run, n: usize) -> Result<StepPlan> {
        let i = run.sched.task(n);
        if i.is_multiple_of(2) {
            return family_step(run, n, i / 2, &TargetDiscard);
        }
        let j = unpair_1(i.div_ceil(2));
        let role = Role {
            base: run.wrap(j),
            target: None,
            task: i,
            op_index: None,
            func_index: j,
        };
        let plan = run.engine().t2(n, &role, &SparseShape)?;
        let mut record = run.record(n);
        record.subtask = run.sched.second(n);
        record.base = Some(role.base + 1);
        StepPlan::from_base(run.nets.len(), &role, plan, record)
    }
}

pub fn presets() -> Vec<Arc<dyn Preset>> {
    vec![
        Arc::new(Nonstochastic),
        Arc::new(Divisible),
        Arc::new(Atom),
        Arc::new(AtomFamily),
        Arc::new(Hyperimmune),
    ]
}

pub fn preset(name: &str) -> Result<Arc<dyn Preset>> {
    presets().into_iter().find(|p| p.name() == name).ok_or_else(|| Error::UnknownName {
        kind: "preset",
        name: name.to_string(),
        known: presets().iter().map(|p| p.name()).collect::<Vec<_>>().join(", "),
    })
}

/// A completed run.
#[derive(Clone, Debug)]
pub struct ConstructionBundle {
    pub config: RunConfig,
    pub networks: Vec<Network>,
    pub schedule: Schedule,
    pub provenance: Vec<StepRecord>,
    pub aggregates: Vec<Vec<LevelAggregates>>,
}

impl ConstructionBundle {
    pub fn depth(&self) -> usize {
        self.config.depth
    }

    pub fn preset(&self) -> Result<Arc<dyn Preset>> {
        preset(&self.config.preset)
    }

    pub fn rosters(&self) -> Result<(OperatorRoster, FunctionRoster)> {
        let p = self.preset()?;
        let r = self.config.roster_descriptor(p.as_ref());
        Ok((
            OperatorRoster::from_descriptors(&r.operators)?,
            FunctionRoster { functions: r.functions },
        ))
    }

    /// Recompute aggregates after the networks were edited.
    pub fn refresh(&mut self) {
        self.aggregates = self.networks.iter().map(level_stats).collect();
    }
}

/// Run the sparse construction to the configured depth.
pub fn build(config: &RunConfig) -> Result<ConstructionBundle> {
    let p = config.validate()?;
    if config.mode == Mode::Dense {
        return crate::dense::build_bundle(config);
    }
    let r = config.roster_descriptor(p.as_ref());
    let mut run = Run {
        config: config.clone(),
        ops: OperatorRoster::from_descriptors(&r.operators)?,
        funcs: FunctionRoster { functions: r.functions },
        nets: (1..=config.networks).map(Network::new).collect(),
        sched: Schedule::new(p.stream()),
        work: WorkMeter::new(config.work_budget),
    };
    let mut provenance = Vec::new();
    for n in 1..=config.depth {
        let plan = p.plan(&run, n)?;
        let record = apply(&mut run.nets, &mut run.sched, plan)?;
        provenance.push(record);
    }
    let aggregates = run.nets.iter().map(level_stats).collect();
    Ok(ConstructionBundle {
        config: config.clone(),
        networks: run.nets,
        schedule: run.sched,
        provenance,
        aggregates,
    })
}

/// Operator roster with every builtin, handy for ad-hoc runs.
pub fn all_builtins() -> Result<OperatorRoster> {
    OperatorRoster::new(
        crate::operators::BUILTINS
            .iter()
            .map(|(n, _)| builtin(n))
            .collect::<Result<_>>()?,
    )
}
