mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;

use lvflow::bitseq::BitString;
use lvflow::dense::DenseNetwork;
use lvflow::io::read_bundle;
use lvflow::network::{Network, Pattern};
use lvflow::presets::ConstructionBundle;
use lvflow::rational::{parse_q, Q};
use lvflow::verify::{run_checks, select, VerifyOptions};

fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn e1() -> ConstructionBundle {
    read_bundle(&data().join("e1")).unwrap().0
}

fn golden() -> BTreeMap<String, BTreeMap<String, Q>> {
    let text = std::fs::read_to_string(data().join("e1.golden.json")).unwrap();
    let raw: BTreeMap<String, BTreeMap<String, String>> = serde_json::from_str(&text).unwrap();
    raw.into_iter()
        .map(|(k, m)| (k, m.into_iter().map(|(x, v)| (x, parse_q(&v).unwrap())).collect()))
        .collect()
}

fn all(len: usize) -> Vec<BitString> {
    (0..1u128 << len).map(|v| BitString::from_value(len, v)).collect()
}

fn dense_copy(net: &Network) -> DenseNetwork {
    DenseNetwork {
        id: net.id,
        delays: (0..=net.depth()).map(|l| all(l).iter().map(|z| net.delay(z).unwrap()).collect()).collect(),
        edges: net.edges.clone(),
    }
}

#[test]
fn sparse_engine_matches_golden_values() {
    let b = e1();
    let net = &b.networks[0];
    let g = golden();
    for (x, v) in &g["delay"] {
        assert_eq!(&net.delay(&common::bs(x)).unwrap(), v, "s({x})");
    }
    for (x, v) in &g["frame"] {
        assert_eq!(&net.frame(&common::bs(x)), v, "R({x})");
    }
    for (x, v) in &g["flow"] {
        assert_eq!(&net.flow(&common::bs(x)), v, "P({x})");
    }
    for (x, v) in &g["pattern_mass_3"] {
        assert_eq!(&net.pattern_mass(3, &Pattern::vertex(&common::bs(x))), v);
    }
    assert_eq!(&b.aggregates[0][3].s_n, &g["s_n"]["3"]);
    assert_eq!(&b.aggregates[0][3].total_r, &g["total_r"]["3"]);
    assert_eq!(net.flow(&common::bs("000")) + net.flow(&common::bs("001")), net.flow(&common::bs("00")));
}

#[test]
fn dense_oracle_reproduces_golden_values() {
    let b = e1();
    let d = dense_copy(&b.networks[0]);
    let frames = d.frames(3);
    let flows = d.flows(&frames);
    let g = golden();
    for (x, v) in &g["frame"] {
        let z = common::bs(x);
        assert_eq!(&frames[z.len()][z.value() as usize], v, "R({x})");
    }
    for (x, v) in &g["flow"] {
        let z = common::bs(x);
        assert_eq!(&flows[z.len()][z.value() as usize], v, "P({x})");
    }
    assert_eq!(&d.s_n(&frames, 3), &g["s_n"]["3"]);
    for l in 0..=3 {
        for z in all(l) {
            let v = z.value() as usize;
            assert_eq!(b.networks[0].frame(&z), frames[l][v], "R({z})");
            assert_eq!(b.networks[0].flow(&z), flows[l][v], "P({z})");
        }
    }
}

#[test]
fn flow_dominates_frame() {
    let b = e1();
    let net = &b.networks[0];
    for l in 0..=3 {
        for z in all(l) {
            assert!(net.flow(&z) >= net.frame(&z), "{z}");
        }
    }
}

#[test]
fn conservation_holds_on_fixture() {
    let b = e1();
    let r = run_checks(&b, &select("conservation,no-overlap,outflow,delay-form").unwrap(), VerifyOptions::default()).unwrap();
    assert!(r.passed(), "{:?}", r.failing());
}
