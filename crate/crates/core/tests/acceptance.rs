mod common;

use std::fs;
use std::time::Instant;

use lvflow::io;
use lvflow::mltest::ml_test;
use lvflow::presets::{build, preset, presets, ConstructionBundle, Mode, RunConfig};
use lvflow::rational::{fmt_q, q, Q};
use lvflow::verify::{run_checks, select, stable_tasks, SuiteReport, VerifyOptions};

const NAMES: [&str; 5] = ["nonstochastic", "divisible", "atom", "atom_family", "hyperimmune"];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn reference(name: &str, depth: usize) -> ConstructionBundle {
    build(&RunConfig::new(name, depth)).unwrap()
}

fn deep(name: &str, depth: usize) -> ConstructionBundle {
    let mut cfg = RunConfig::new(name, depth);
    cfg.roster = Some(preset(name).unwrap().deep_roster());
    build(&cfg).unwrap()
}

fn dense(name: &str, depth: usize) -> ConstructionBundle {
    let mut cfg = RunConfig::new(name, depth);
    cfg.mode = Mode::Dense;
    build(&cfg).unwrap()
}

fn checks(b: &ConstructionBundle, names: &str) -> SuiteReport {
    run_checks(b, &select(names).unwrap(), VerifyOptions::default()).unwrap()
}

fn failures(reports: &[(String, SuiteReport)]) -> Vec<String> {
    reports
        .iter()
        .flat_map(|(label, r)| r.failing().into_iter().map(move |c| format!("{label}/{c}")))
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let mut bad = Vec::new();
    for name in NAMES {
        let r = checks(&reference(name, 12), "oracle");
        if !r.passed() {
            bad.push(format!("{name}: {}", r.get("oracle").unwrap().witness.clone().unwrap_or_default()));
        }
    }
    outcome(bad.is_empty(), format!("{} of 5 presets exact at depth 12 {bad:?}", 5 - bad.len()))
}

fn level_mass_bound() -> Outcome {
    let mut reports = Vec::new();
    let mut lowest: Option<Q> = None;
    for name in NAMES {
        let b = deep(name, 48);
        for agg in b.aggregates.iter().flatten() {
            if lowest.as_ref().is_none_or(|l| agg.s_n < *l) {
                lowest = Some(agg.s_n.clone());
            }
        }
        reports.push((name.to_string(), checks(&b, "sn-bound")));
    }
    let lowest = lowest.unwrap();
    let bad = failures(&reports);
    outcome(
        bad.is_empty() && lowest >= q(1, 2),
        format!("depth 48, lowest S_n {} {bad:?}", fmt_q(&lowest)),
    )
}

fn structural_invariants() -> Outcome {
    let mut reports = Vec::new();
    for name in NAMES {
        reports.push((format!("{name}@12-dense"), checks(&dense(name, 12), "delay-form,no-overlap")));
        reports.push((format!("{name}@48"), checks(&deep(name, 48), "delay-form,no-overlap")));
    }
    let mut bad = failures(&reports);
    let controls = common::controls();
    for c in &controls {
        let mut b = common::bundle(c.preset, c.depth);
        (c.apply)(&mut b);
        let report = common::structural(&b);
        let failing = report.failing();
        if failing != vec![c.target] {
            bad.push(format!("control {:?} tripped {failing:?}", c.name));
        }
    }
    let oracle = checks(&common::rho_mismatch("nonstochastic", 8), "oracle");
    if oracle.passed() {
        bad.push("control offset mismatch passed the oracle".into());
    }
    outcome(
        bad.is_empty(),
        format!("10 bundles clean, {} corruptions isolated {bad:?}", controls.len() + 1),
    )
}

fn duplication_and_ratio() -> Outcome {
    let mut bad = Vec::new();
    let mut details = Vec::new();
    for name in ["atom", "atom_family"] {
        let b = reference(name, 20);
        let r = checks(&b, "duplication,ratio-identity");
        bad.extend(r.failing().into_iter().map(|c| format!("{name}/{c}")));
        let (stable, total) = stable_tasks(&b, 20);
        let notes = r.get("ratio-identity").map(|c| c.notes.join("; ")).unwrap_or_default();
        if stable.len() * 5 < total * 4 {
            bad.push(format!("{name}/coverage {} of {total}", stable.len()));
        }
        details.push(format!("{name}: {notes}"));
    }
    outcome(bad.is_empty(), format!("{} {bad:?}", details.join(" | ")))
}

fn test_set_bound() -> Outcome {
    let mut bad = Vec::new();
    let mut drawn = Vec::new();
    for name in ["nonstochastic", "atom"] {
        let t = ml_test(&deep(name, 48)).unwrap();
        let nonempty: Vec<u64> = t.levels.iter().filter(|l| l.edges > 0).map(|l| l.index).collect();
        if nonempty.is_empty() {
            bad.push(format!("{name}: no nonempty U_i"));
        }
        for l in t.levels.iter().filter(|l| !l.within_bound) {
            bad.push(format!("{name}: U_{} mass {} tail {}", l.index, fmt_q(&l.mass), fmt_q(&l.tail_mass)));
        }
        drawn.push(format!("{name} nonempty {nonempty:?}"));
    }
    outcome(bad.is_empty(), format!("depth 48, {} {bad:?}", drawn.join(", ")))
}

fn discard_semantics() -> Outcome {
    let mut reports = Vec::new();
    let mut discards = 0usize;
    for name in NAMES {
        let b = dense(name, 12);
        discards += b.provenance.iter().map(|r| r.discards.len()).sum::<usize>();
        reports.push((name.to_string(), checks(&b, "discard")));
    }
    let bad = failures(&reports);
    outcome(
        bad.is_empty() && discards > 0,
        format!("dense depth 12, {discards} discard records {bad:?}"),
    )
}

fn hyperimmune_shape() -> Outcome {
    let b = reference("hyperimmune", 32);
    let sparse_edges = b
        .networks
        .iter()
        .flat_map(|n| n.edges.iter())
        .filter(|e| e.task % 2 == 1)
        .count();
    let r = checks(&b, "hyperimmune-shape");
    outcome(
        r.passed() && sparse_edges > 0,
        format!("depth 32, {sparse_edges} odd-task edges {:?}", r.failing()),
    )
}

fn determinism() -> Outcome {
    let t = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    for name in NAMES {
        let cfg = RunConfig::new(name, 16);
        let (a, b, c) = (t.path().join(format!("{name}-a")), t.path().join(format!("{name}-b")), t.path().join(format!("{name}-c")));
        let (x, y) = (build(&cfg).unwrap(), build(&cfg).unwrap());
        io::write_bundle(&a, &x, &io::build_summary(&x)).unwrap();
        io::write_bundle(&b, &y, &io::build_summary(&y)).unwrap();
        let (back, report) = io::read_bundle(&a).unwrap();
        io::write_bundle(&c, &back, &report).unwrap();
        for f in io::FILES {
            let bytes = fs::read(a.join(f)).unwrap();
            if bytes != fs::read(b.join(f)).unwrap() {
                bad.push(format!("{name}/{f} rebuild"));
            }
            if bytes != fs::read(c.join(f)).unwrap() {
                bad.push(format!("{name}/{f} round trip"));
            }
        }
    }
    outcome(bad.is_empty(), format!("5 presets at depth 16, 6 files each {bad:?}"))
}

fn main() {
    assert_eq!(presets().len(), NAMES.len());
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("level mass lower bound", level_mass_bound),
        ("structural invariants and negative controls", structural_invariants),
        ("mirror duplication and ratio identity", duplication_and_ratio),
        ("test set bound", test_set_bound),
        ("discard semantics", discard_semantics),
        ("hyperimmune shape", hyperimmune_shape),
        ("determinism and round trip", determinism),
    ];
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict} {title} ({:.1}s): {}", k + 1, start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
