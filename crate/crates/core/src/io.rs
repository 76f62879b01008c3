//! Bundle directories: one JSON config, five line-delimited logs and a report.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::network::{ExtraEdge, LevelAggregates, LevelTable, Network};
use crate::presets::{ConstructionBundle, RunConfig};
use crate::rational::fmt_q;
use crate::scheduler::Schedule;
use crate::templates::StepRecord;

pub const CONFIG: &str = "config.json";
pub const LEVELS: &str = "levels.jsonl";
pub const EDGES: &str = "edges.jsonl";
pub const AGGREGATES: &str = "aggregates.jsonl";
pub const PROVENANCE: &str = "provenance.jsonl";
pub const REPORT: &str = "report.json";

pub const FILES: [&str; 6] = [CONFIG, LEVELS, EDGES, AGGREGATES, PROVENANCE, REPORT];

#[derive(Serialize, Deserialize)]
struct LevelLine {
    network: usize,
    level: usize,
    #[serde(flatten)]
    table: LevelTable,
}

/// Summary written next to a freshly built bundle.
pub fn build_summary(b: &ConstructionBundle) -> Value {
    let networks: Vec<Value> = b
        .networks
        .iter()
        .zip(&b.aggregates)
        .map(|(net, agg)| {
            let lowest = agg.iter().map(|a| &a.s_n).min().map(fmt_q);
            json!({ "network": net.id, "edges": net.edges.len(), "lowest_s_n": lowest })
        })
        .collect();
    json!({
        "kind": "build",
        "preset": b.config.preset,
        "depth": b.depth(),
        "steps": b.provenance.len(),
        "networks": networks,
    })
}

fn pretty(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<String> {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(&item)?);
        s.push('\n');
    }
    Ok(s)
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<()> {
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

/// Write every file of the layout into `dir`, creating it if needed.
pub fn write_bundle(dir: &Path, b: &ConstructionBundle, report: &Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_file(dir, CONFIG, &pretty(&b.config)?)?;
    let levels = b.networks.iter().flat_map(|net| {
        net.levels.iter().enumerate().map(|(level, table)| LevelLine {
            network: net.id,
            level,
            table: table.clone(),
        })
    });
    write_file(dir, LEVELS, &lines(levels)?)?;
    write_file(dir, EDGES, &lines(b.networks.iter().flat_map(|net| net.edges.iter()))?)?;
    write_file(dir, AGGREGATES, &lines(b.aggregates.iter().flatten())?)?;
    write_file(dir, PROVENANCE, &lines(&b.provenance)?)?;
    write_file(dir, REPORT, &pretty(report)?)?;
    Ok(())
}

fn read_lines<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<Vec<T>> {
    let f = fs::File::open(dir.join(name))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("{name} line {}: {e}", k + 1)))?,
        );
    }
    Ok(out)
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T> {
    let s = fs::read_to_string(dir.join(name))?;
    serde_json::from_str(&s).map_err(|e| Error::Parse(format!("{name}: {e}")))
}

fn network_of(id: usize, count: usize, what: &str) -> Result<usize> {
    if id == 0 || id > count {
        return Err(Error::Parse(format!("{what} names network {id} of {count}")));
    }
    Ok(id - 1)
}

/// Load a bundle directory. Stored aggregates are kept as written, not recomputed.
pub fn read_bundle(dir: &Path) -> Result<(ConstructionBundle, Value)> {
    let config: RunConfig = read_json(dir, CONFIG)?;
    let preset = config.validate()?;
    let count = config.networks;
    let mut networks: Vec<Network> = (1..=count).map(Network::new).collect();
    for line in read_lines::<LevelLine>(dir, LEVELS)? {
        let net = &mut networks[network_of(line.network, count, LEVELS)?];
        match line.level {
            0 => net.set_level(0, line.table),
            l if l == net.levels.len() => net.push_level(line.table),
            l => return Err(Error::Parse(format!("{LEVELS}: level {l} of network {} out of order", net.id))),
        }
    }
    if let Some(net) = networks.iter().find(|n| n.depth() != config.depth) {
        return Err(Error::Parse(format!(
            "network {} has {} levels, config depth is {}",
            net.id,
            net.depth(),
            config.depth
        )));
    }
    let mut schedule = Schedule::new(preset.stream());
    for e in read_lines::<ExtraEdge>(dir, EDGES)? {
        schedule.record(&e);
        let k = network_of(e.network, count, EDGES)?;
        networks[k].push_edge_unchecked(e);
    }
    let mut aggregates: Vec<Vec<LevelAggregates>> = vec![Vec::new(); count];
    for a in read_lines::<LevelAggregates>(dir, AGGREGATES)? {
        aggregates[network_of(a.network, count, AGGREGATES)?].push(a);
    }
    let provenance: Vec<StepRecord> = read_lines(dir, PROVENANCE)?;
    let report: Value = read_json(dir, REPORT)?;
    let bundle = ConstructionBundle {
        config,
        networks,
        schedule,
        provenance,
        aggregates,
    };
    Ok((bundle, report))
}

/// Which step records `trace` keeps; `None` matches anything.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraceFilter {
    pub task: Option<u64>,
    pub subtask: Option<u64>,
    pub level: Option<usize>,
}

impl TraceFilter {
    pub fn matches(&self, r: &StepRecord) -> bool {
        self.task.is_none_or(|t| r.task == t)
            && self.subtask.is_none_or(|k| r.subtask == Some(k))
            && self.level.is_none_or(|l| r.step == l)
    }
}

pub fn trace<'a>(records: &'a [StepRecord], filter: &TraceFilter) -> Vec<&'a StepRecord> {
    records.iter().filter(|r| filter.matches(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::build;

    #[test]
    fn round_trip_is_byte_identical() {
        let b = build(&RunConfig::new("atom_family", 10)).unwrap();
        let report = build_summary(&b);
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_bundle(d1.path(), &b, &report).unwrap();
        let (back, rep) = read_bundle(d1.path()).unwrap();
        assert_eq!(back.networks, b.networks);
        assert_eq!(back.provenance, b.provenance);
        assert_eq!(back.aggregates, b.aggregates);
        write_bundle(d2.path(), &back, &rep).unwrap();
        for f in FILES {
            assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn rationals_are_written_as_fractions() {
        let b = build(&RunConfig::new("nonstochastic", 3)).unwrap();
        let d = tempfile::tempdir().unwrap();
        write_bundle(d.path(), &b, &build_summary(&b)).unwrap();
        let first = fs::read_to_string(d.path().join(LEVELS)).unwrap();
        let line: Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
        assert_eq!(line["default"], "0/1");
    }

    #[test]
    fn trace_filters_compose() {
        let b = build(&RunConfig::new("atom", 12)).unwrap();
        let only = TraceFilter {
            task: Some(1),
            ..TraceFilter::default()
        };
        let got = trace(&b.provenance, &only);
        assert!(!got.is_empty() && got.iter().all(|r| r.task == 1));
        let none = TraceFilter {
            task: Some(99),
            ..TraceFilter::default()
        };
        assert!(trace(&b.provenance, &none).is_empty());
        let both = TraceFilter {
            task: Some(1),
            subtask: Some(2),
            level: Some(5),
        };
        assert_eq!(trace(&b.provenance, &both).len(), 1);
    }
}
