use num_traits::{One, Zero};
use proptest::prelude::*;

use lvflow::bitseq::{equiv_w, index_of, pair, string_of, unpair, BitString};
use lvflow::dense::DenseNetwork;
use lvflow::network::{level_stats, ExtraEdge, LevelTable, Network, Pattern};
use lvflow::operators::{OperatorDescriptor, OperatorRoster, BUILTINS};
use lvflow::presets::{build, presets, RunConfig};
use lvflow::rational::{q, Q};
use lvflow::scheduler::{Schedule, TaskStream};
use lvflow::verify::{run_checks, select, VerifyOptions};

fn bits(max_len: usize) -> impl Strategy<Value = BitString> {
    (0..=max_len).prop_flat_map(|l| (0..1u128 << l).prop_map(move |v| BitString::from_value(l, v)))
}

fn same_length(max_len: usize, k: usize) -> impl Strategy<Value = Vec<BitString>> {
    (0..=max_len).prop_flat_map(move |l| prop::collection::vec((0..1u128 << l).prop_map(move |v| BitString::from_value(l, v)), k))
}

fn all(len: usize) -> Vec<BitString> {
    (0..1u128 << len).map(|v| BitString::from_value(len, v)).collect()
}

#[test]
fn codecs_are_bijections_on_the_first_codes() {
    for code in 0..100_000u128 {
        assert_eq!(index_of(&string_of(code)), code);
    }
    for n in 1..100_000u64 {
        let (i, j) = unpair(n);
        assert_eq!(pair(i, j).unwrap(), n);
    }
}

proptest! {
    #[test]
    fn equiv_is_an_equivalence(v in same_length(10, 3), w in 0usize..12) {
        let (x, y, z) = (&v[0], &v[1], &v[2]);
        prop_assert!(equiv_w(x, x, w));
        prop_assert_eq!(equiv_w(x, y, w), equiv_w(y, x, w));
        if equiv_w(x, y, w) && equiv_w(y, z, w) {
            prop_assert!(equiv_w(x, z, w));
        }
    }

    #[test]
    fn equiv_is_monotone_in_w(v in same_length(10, 2), w in 0usize..12, extra in 0usize..6) {
        if equiv_w(&v[0], &v[1], w) {
            prop_assert!(equiv_w(&v[0], &v[1], w + extra));
        }
    }

    #[test]
    fn flat_stream_recovers_the_first_component(i in 1u64..40, j in 1u64..40) {
        let n = pair(i, j).unwrap() as usize;
        prop_assert_eq!(TaskStream::Flat.task(n), i);
    }

    #[test]
    fn nested_stream_recovers_task_and_subtask(i in 1u64..12, k in 1u64..12, j in 1u64..8) {
        let n = pair(pair(i, k).unwrap(), j).unwrap() as usize;
        prop_assert_eq!(TaskStream::Nested.task(n), i);
        prop_assert_eq!(TaskStream::Nested.second(n), Some(k));
    }
}

fn operator_descriptor() -> impl Strategy<Value = OperatorDescriptor> {
    prop_oneof![
        (0..BUILTINS.len()).prop_map(|k| OperatorDescriptor::Builtin { name: BUILTINS[k].0.to_string() }),
        (1usize..6).prop_map(OperatorDescriptor::stride),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn operators_are_monotone_clamped_and_pure(d in operator_descriptor(), x in bits(10), ext in bits(6)) {
        let roster = OperatorRoster::from_descriptors(std::slice::from_ref(&d)).unwrap();
        let op = roster.base(1);
        let longer = x.concat(&ext);
        let (a, b) = (op.apply_modified(&x).unwrap(), op.apply_modified(&longer).unwrap());
        prop_assert!(a.len() <= x.len());
        prop_assert!(b.len() <= longer.len());
        prop_assert!(a.is_prefix_of(&b), "{} -> {}, {} -> {}", x, a, longer, b);
        prop_assert_eq!(op.apply_modified(&x).unwrap(), a);
    }
}

/// A random network of the given depth with unit-fraction delays and edges drawn from delayed vertices.
fn random_network() -> impl Strategy<Value = Network> {
    (2usize..=6)
        .prop_flat_map(|depth| {
            let delays = prop::collection::vec((bits(depth - 1), 1u64..6), 0..8);
            let edges = prop::collection::vec((any::<u64>(), any::<u64>(), 1u64..4), 0..6);
            (Just(depth), delays, edges)
        })
        .prop_map(|(depth, delays, edges)| {
            let mut net = Network::new(1);
            let mut tables = vec![LevelTable::uniform(Q::zero()); depth + 1];
            for (x, m) in delays {
                let _ = tables[x.len()].insert(x.len(), Pattern::vertex(&x), q(1, m as i64));
            }
            net.set_level(0, tables[0].clone());
            for t in tables.into_iter().skip(1) {
                net.push_level(t);
            }
            for (pick, tail, share) in edges {
                let sources: Vec<BitString> = (0..depth - 1)
                    .flat_map(all)
                    .filter(|x| !net.delay(x).unwrap().is_zero() && net.edge_from(x).is_none())
                    .collect();
                if sources.is_empty() {
                    break;
                }
                let from = sources[(pick % sources.len() as u64) as usize];
                let gap = 2 + (tail as usize % (depth - from.len() - 1));
                let to = from.concat(&BitString::from_value(gap, (tail >> 8) as u128 % (1u128 << gap)));
                let s = net.delay(&from).unwrap();
                net.add_edge(ExtraEdge {
                    network: 1,
                    from,
                    to,
                    q: s * q(1, share as i64),
                    task: 1,
                    subtask: None,
                    step: to.len(),
                    w: 0,
                    mirror_free: 0,
                })
                .unwrap();
            }
            net
        })
}

fn passes_over(net: &Network, x: &BitString) -> bool {
    net.edges.iter().any(|e| e.from.is_proper_prefix_of(x) && x.is_proper_prefix_of(&e.to))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn flow_is_a_semimeasure_losing_exactly_the_held_mass(net in random_network()) {
        for l in 0..net.depth() {
            for x in all(l) {
                let held = net.delay(&x).unwrap() - net.edge_from(&x).map(|e| e.q.clone()).unwrap_or_else(Q::zero);
                let below = net.flow(&x.push(0)) + net.flow(&x.push(1));
                prop_assert!(below <= net.flow(&x));
                prop_assert_eq!(below, net.flow(&x) - held * net.frame(&x), "at {}", x);
            }
        }
    }

    #[test]
    fn flow_dominates_frame_and_matches_it_off_edges(net in random_network()) {
        for l in 0..=net.depth() {
            for x in all(l) {
                prop_assert!(net.flow(&x) >= net.frame(&x));
                if !passes_over(&net, &x) {
                    prop_assert_eq!(net.flow(&x), net.frame(&x), "at {}", x);
                }
            }
        }
    }

    #[test]
    fn outflow_never_exceeds_one(net in random_network()) {
        for l in 0..net.depth() {
            for x in all(l) {
                prop_assert!(net.outflow(&x).unwrap() <= Q::one());
            }
        }
    }

    #[test]
    fn carried_totals_match_level_sums(net in random_network()) {
        let stats = level_stats(&net);
        for (n, s) in stats.iter().enumerate() {
            let direct: Q = all(n).iter().map(|z| net.frame(z)).sum();
            prop_assert_eq!(&s.total_r, &direct, "level {}", n);
            prop_assert_eq!(&s.s_n, &(direct - &s.extra_inflow));
        }
    }

    #[test]
    fn sparse_and_dense_agree(net in random_network()) {
        let d = DenseNetwork {
            id: 1,
            delays: (0..=net.depth()).map(|l| all(l).iter().map(|z| net.delay(z).unwrap()).collect()).collect(),
            edges: net.edges.clone(),
        };
        let frames = d.frames(net.depth());
        let flows = d.flows(&frames);
        let stats = level_stats(&net);
        for l in 0..=net.depth() {
            prop_assert_eq!(&d.s_n(&frames, l), &stats[l].s_n);
            for z in all(l) {
                let v = z.value() as usize;
                prop_assert_eq!(&net.frame(&z), &frames[l][v]);
                prop_assert_eq!(&net.flow(&z), &flows[l][v]);
            }
        }
    }
}

fn history() -> impl Strategy<Value = (TaskStream, Vec<bool>)> {
    (prop_oneof![Just(TaskStream::Flat), Just(TaskStream::Nested)], prop::collection::vec(prop::bool::weighted(0.2), 30))
}

proptest! {
    #[test]
    fn session_starts_only_move_forward((stream, draws) in history()) {
        let mut sched = Schedule::new(stream);
        for (k, &draw) in draws.iter().enumerate() {
            let m = k + 1;
            if draw {
                sched.record(&ExtraEdge {
                    network: 1,
                    from: BitString::EMPTY,
                    to: BitString::zeros(m),
                    q: Q::zero(),
                    task: stream.task(m),
                    subtask: stream.second(m),
                    step: m,
                    w: 0,
                    mirror_free: 0,
                });
            }
        }
        let n_max = draws.len();
        for i in 1..=4u64 {
            let mut last: Option<usize> = None;
            for n in 1..=n_max {
                if let Some(w) = sched.w_session(i, n) {
                    prop_assert!(w <= n);
                    prop_assert_eq!(stream.task(w), i);
                    if let Some(prev) = last {
                        prop_assert!(prev <= w, "task {} at {}: {} then {}", i, n, prev, w);
                    }
                    last = Some(w);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_builds_are_deterministic_and_sound(k in 0usize..5, depth in 0usize..=10) {
        let cfg = RunConfig::new(presets()[k].name(), depth);
        let (a, b) = (build(&cfg).unwrap(), build(&cfg).unwrap());
        prop_assert_eq!(&a.networks, &b.networks);
        prop_assert_eq!(&a.provenance, &b.provenance);
        prop_assert_eq!(&a.aggregates, &b.aggregates);
        for agg in &a.aggregates {
            prop_assert!(agg.iter().all(|s| s.s_n >= q(1, 2)));
        }
        let r = run_checks(&a, &select("delay-form,no-overlap,conservation,outflow").unwrap(), VerifyOptions::default()).unwrap();
        prop_assert!(r.passed(), "{:?}", r.failing());
    }
}
