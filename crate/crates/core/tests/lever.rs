use bipartite_bft::adversary::{AdversaryScript, CorruptionSet, Strategy};
use bipartite_bft::analysis::all_verdicts;
use bipartite_bft::broadcast::GeneralId;
use bipartite_bft::simulator::{run_execution, InitValue, ProtocolSpec, RunSpec, TopologySpec};

fn lever(n_a: usize, n_b: usize, inputs: &[bool], corruption: CorruptionSet, strategy: Strategy) -> RunSpec {
    let inits = inputs
        .iter()
        .enumerate()
        .filter(|(node, _)| !corruption.contains(*node))
        .map(|(node, &value)| InitValue {
            node,
            general: GeneralId(0),
            value,
        })
        .collect();
    RunSpec::new(
        TopologySpec::CompleteBipartite { n_a, n_b },
        ProtocolSpec::BaLever {
            f_a: (n_a - 1) / 3,
            f_b: (n_b - 1) / 3,
            g0: GeneralId(0),
            side_a_rule: Default::default(),
        },
        inits,
        AdversaryScript::new(corruption, strategy),
    )
}

#[test]
fn fault_free_unanimous_ones_decide_one_at_termination_round() {
    for (n_a, n_b) in [(4, 4), (7, 7), (4, 7)] {
        let spec = lever(n_a, n_b, &vec![true; n_a], CorruptionSet::default(), Strategy::Silent);
        let trace = run_execution(&spec).unwrap();
        let k_f = (n_b as u32 - 1) / 3 + 1;
        assert_eq!(trace.agrees.len(), n_a + n_b, "K_{{{n_a},{n_b}}}");
        assert!(
            trace.agrees.iter().all(|a| a.value && a.round == k_f),
            "{:?}",
            trace.agrees
        );
        for v in all_verdicts(&trace) {
            assert!(v.holds, "{} {:?}", v.property.name(), v.witness);
        }
    }
}

#[test]
fn fault_free_unanimous_zeros_decide_zero() {
    let spec = lever(4, 4, &[false; 4], CorruptionSet::default(), Strategy::Silent);
    let trace = run_execution(&spec).unwrap();
    assert_eq!(trace.agrees.len(), 8);
    assert!(trace.agrees.iter().all(|a| !a.value));
}

#[test]
fn silent_faults_do_not_break_unanimity() {
    let spec = lever(4, 4, &[true; 4], CorruptionSet::new([3, 7]), Strategy::Silent);
    let trace = run_execution(&spec).unwrap();
    assert_eq!(trace.agrees.len(), 6);
    assert!(trace.agrees.iter().all(|a| a.value));
}
