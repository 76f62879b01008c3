#![allow(dead_code)]

use lvflow::bitseq::BitString;
use lvflow::network::{ExtraEdge, LevelTable, Pattern};
use lvflow::presets::{build, ConstructionBundle, RunConfig};
use lvflow::rational::{q, Q};
use lvflow::verify::{run_checks, select, SuiteReport, VerifyOptions};

pub fn bs(s: &str) -> BitString {
    s.parse().unwrap()
}

pub fn bundle(preset: &str, depth: usize) -> ConstructionBundle {
    build(&RunConfig::new(preset, depth)).unwrap()
}

/// Every check except the dense rerun, which flags any divergence from a literal rebuild.
pub const STRUCTURAL: &str =
    "delay-form,no-overlap,conservation,sn-bound,outflow,duplication,ratio-identity,separators,discard,edge-typing,hyperimmune-shape";

pub fn structural(b: &ConstructionBundle) -> SuiteReport {
    let opts = VerifyOptions {
        samples: 300,
        ..VerifyOptions::default()
    };
    run_checks(b, &select(STRUCTURAL).unwrap(), opts).unwrap()
}

fn with_exception(table: &LevelTable, level: usize, at: &BitString, value: Q) -> LevelTable {
    let mut t = table.clone();
    t.exceptions.retain(|e| !(e.key.pattern() == Pattern::vertex(at)));
    t.insert(level, Pattern::vertex(at), value).unwrap();
    t
}

fn inject(b: &mut ConstructionBundle, network: usize, from: &str, to: &str) {
    let (from, to) = (bs(from), bs(to));
    let step = to.len();
    let r = &mut b.provenance[step - 1];
    b.networks[network - 1].push_edge_unchecked(ExtraEdge {
        network,
        from,
        to,
        q: Q::from_integer(0.into()),
        task: r.task,
        subtask: r.subtask,
        step,
        w: 0,
        mirror_free: 0,
    });
    r.edges.push((from, to));
}

/// A named corruption and the only check it should trip.
pub struct Control {
    pub name: &'static str,
    pub preset: &'static str,
    pub depth: usize,
    pub target: &'static str,
    pub apply: fn(&mut ConstructionBundle),
}

pub fn controls() -> Vec<Control> {
    vec![
        Control {
            name: "non-unit delay on the last level",
            preset: "nonstochastic",
            depth: 12,
            target: "delay-form",
            apply: |b| {
                let n = b.depth();
                let at = BitString::zeros(n);
                let t = with_exception(&b.networks[0].levels[n], n, &at, q(2, 5));
                b.networks[0].set_level(n, t);
                b.refresh();
            },
        },
        Control {
            name: "edge nested inside a drawn edge",
            preset: "atom",
            depth: 12,
            target: "no-overlap",
            apply: |b| {
                inject(b, 1, "00", "00000");
                b.refresh();
            },
        },
        Control {
            name: "edge share changed after aggregation",
            preset: "nonstochastic",
            depth: 12,
            target: "conservation",
            apply: |b| {
                let half = &b.networks[0].edges[0].q / Q::from_integer(2.into());
                b.networks[0].set_edge_q(0, half);
            },
        },
        Control {
            name: "one share changed inside a mirror class",
            preset: "atom_family",
            depth: 12,
            target: "duplication",
            apply: |b| {
                let n = b.depth();
                let k = b.networks[0].edges.iter().position(|e| e.step == n).unwrap();
                let half = &b.networks[0].edges[k].q / Q::from_integer(2.into());
                b.networks[0].set_edge_q(k, half);
                b.refresh();
            },
        },
        Control {
            name: "edge spanning a session start",
            preset: "nonstochastic",
            depth: 12,
            target: "separators",
            apply: |b| {
                inject(b, 1, "01", "0100000");
                b.refresh();
            },
        },
        Control {
            name: "heavy uniform delay on level two",
            preset: "nonstochastic",
            depth: 12,
            target: "sn-bound",
            apply: |b| {
                let mut t = b.networks[0].levels[2].clone();
                t.default = q(1, 2);
                b.networks[0].set_level(2, t);
                b.refresh();
            },
        },
        Control {
            name: "edge share above the source delay",
            preset: "nonstochastic",
            depth: 12,
            target: "outflow",
            apply: |b| {
                let s = b.networks[0].delay(&b.networks[0].edges[0].from.clone()).unwrap();
                b.networks[0].set_edge_q(0, s * Q::from_integer(2.into()));
                b.refresh();
            },
        },
        Control {
            name: "discard pattern moved to a live vertex",
            preset: "divisible",
            depth: 12,
            target: "discard",
            apply: |b| {
                let k = b.provenance.iter().position(|r| !r.discards.is_empty()).unwrap();
                let d = &mut b.provenance[k].discards[0];
                let p = d.patterns[0];
                let last = p.fixed.len();
                let flipped = p.fixed.prefix(last - 1).concat(&bs(if p.fixed.bit(last) == 0 { "1" } else { "0" }));
                let moved = Pattern { free: p.free, fixed: flipped };
                assert!(!d.patterns.contains(&moved));
                d.patterns[0] = moved;
            },
        },
    ]
}

/// Bundle whose recorded case-1 offset no longer matches the one it was built with.
pub fn rho_mismatch(preset: &str, depth: usize) -> ConstructionBundle {
    let mut b = bundle(preset, depth);
    b.config.params.rho_offset += 1;
    b
}
