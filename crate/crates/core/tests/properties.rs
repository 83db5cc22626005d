use std::collections::{BTreeMap, BTreeSet, HashSet};

use bipartite_bft::adversary::{enumerate_scripts, AdversaryScript, CorruptionSet, Strategy};
use bipartite_bft::analysis::{verdict_dirac, verdict_heaviside};
use bipartite_bft::broadcast::{GeneralId, Message, Phase, RoundClock};
use bipartite_bft::simulator::{run_execution, InitValue, ProtocolSpec, RunSpec, TopologySpec};
use bipartite_bft::topology::{build_complete, build_complete_bipartite, Partition};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bipartite_run(n_a: usize, n_b: usize, lever: bool, inputs: u32, seed: u64) -> RunSpec {
    let (f_a, f_b) = ((n_a - 1) / 3, (n_b - 1) / 3);
    let protocol = if lever {
        ProtocolSpec::BaLever {
            f_a,
            f_b,
            g0: GeneralId(0),
            side_a_rule: Default::default(),
        }
    } else {
        ProtocolSpec::BiBroadcast { f_a, f_b, generals: 2 }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corruption = CorruptionSet::random(Partition { n_a, n_b }, f_a, f_b, &mut rng);
    let generals = if lever { 1 } else { 2 };
    let inits = (0..generals)
        .flat_map(|g| (0..n_a).map(move |node| (g, node)))
        .filter(|&(_, node)| !corruption.contains(node))
        .map(|(g, node)| InitValue {
            node,
            general: GeneralId(g as u32),
            value: inputs >> (node + g * n_a) & 1 == 1,
        })
        .collect();
    RunSpec::new(
        TopologySpec::CompleteBipartite { n_a, n_b },
        protocol,
        inits,
        AdversaryScript::new(corruption, Strategy::SeededRandom { seed }),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_is_monotone(n_a in 4usize..8, n_b in 4usize..8, lever: bool, inputs: u32, seed: u64) {
        let trace = run_execution(&bipartite_run(n_a, n_b, lever, inputs, seed)).unwrap();
        for pair in trace.snapshots.windows(2) {
            for (before, after) in pair[0].nodes.iter().zip(&pair[1].nodes) {
                prop_assert_eq!(before.node, after.node);
                for (x0, x1) in before.x.iter().zip(&after.x) {
                    prop_assert!(!x0 | x1, "x dropped at node {}", before.node);
                }
                prop_assert!(before.s <= after.s, "s dropped at node {}", before.node);
            }
        }
        let mut seen = BTreeSet::new();
        for a in &trace.accepts {
            prop_assert!(seen.insert((a.node, a.general)), "second accept {:?}", a);
        }
    }

    #[test]
    fn broadcast_properties_hold_under_random_adversary(n_a in 4usize..9, n_b in 4usize..9, inputs: u32, seed: u64) {
        let trace = run_execution(&bipartite_run(n_a, n_b, false, inputs, seed)).unwrap();
        let h = verdict_heaviside(&trace, 1, None).unwrap();
        let d = verdict_dirac(&trace, 1, None).unwrap();
        prop_assert!(h.holds, "{:?}", h.witness);
        prop_assert!(d.holds, "{:?}", d.witness);
    }

    #[test]
    fn delivery_order_does_not_matter(
        lever: bool,
        ones in proptest::collection::vec(any::<bool>(), 32),
        perm_seed: u64,
    ) {
        use rand::seq::SliceRandom;
        let spec = bipartite_run(4, 4, lever, 0b1011, 1);
        let generals = spec.generals();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        for receiver in [0usize, 5] {
            let phase = if receiver < 4 { Phase::BToA } else { Phase::AToB };
            let senders: Vec<usize> = if receiver < 4 { (4..8).collect() } else { (0..4).collect() };
            let mut inbox: Vec<Message> = senders
                .iter()
                .flat_map(|&sender| (0..generals).map(move |g| (sender, g)))
                .enumerate()
                .map(|(i, (sender, g))| Message {
                    round: 0,
                    phase,
                    sender,
                    receiver,
                    general: GeneralId(g as u32),
                    value: ones[i % ones.len()],
                })
                .collect();
            let mut a = spec.machine(receiver);
            let mut b = a.clone();
            let clock = RoundClock::new(0, phase);
            let ea = a.deliver(clock, &inbox).unwrap();
            inbox.shuffle(&mut rng);
            let eb = b.deliver(clock, &inbox).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(ea.len(), eb.len());
            prop_assert_eq!(a.planned(RoundClock::new(1, Phase::AToB)), b.planned(RoundClock::new(1, Phase::AToB)));
        }
    }
}

#[test]
fn script_enumeration_is_exact_and_duplicate_free() {
    let cases = [
        (build_complete(4), CorruptionSet::new([2]), 1, 2),
        (build_complete(4), CorruptionSet::new([0]), 2, 1),
        (build_complete_bipartite(4, 4), CorruptionSet::new([1, 6]), 1, 1),
        (build_complete_bipartite(3, 2), CorruptionSet::new([4]), 1, 3),
    ];
    for (topo, corruption, generals, horizon) in cases {
        let space = enumerate_scripts(&corruption, &topo, generals, horizon, 1 << 20).unwrap();
        let sends_per_round: usize = corruption.iter().map(|s| topo.degree(s) * generals).sum();
        assert_eq!(space.bits(), sends_per_round * horizon as usize);
        let mut seen = HashSet::new();
        for script in space.iter() {
            assert!(script.validate(&corruption).is_ok());
            assert!(seen.insert(script.to_text()));
        }
        assert_eq!(seen.len() as u128, space.count().unwrap());
    }
}

#[test]
fn enumeration_respects_the_cap() {
    let topo = build_complete_bipartite(4, 4);
    assert!(enumerate_scripts(&CorruptionSet::new([0, 4]), &topo, 1, 3, 1 << 20).is_err());
}

#[test]
fn per_sender_slots_cover_every_neighbor() {
    let topo = build_complete_bipartite(4, 4);
    let corruption = CorruptionSet::new([0, 4]);
    let space = enumerate_scripts(&corruption, &topo, 1, 1, 1 << 10).unwrap();
    let all = space.script(space.count().unwrap() - 1);
    let mut per_sender: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for m in all.messages() {
        per_sender.entry(m.sender).or_default().insert(m.receiver);
    }
    assert_eq!(per_sender[&0], (4..8).collect());
    assert_eq!(per_sender[&4], (0..4).collect());
}
