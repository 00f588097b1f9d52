//! Cross-cutting randomized properties. Proptest supplies seeds; the
//! crate's own deterministic generators turn each seed into an instance, so
//! failures shrink to a reproducible seed.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rqcp::bounded::{reverse_md_sequence, PhaseKind};
use rqcp::bruteforce::{explore_bounded, kphase_reach_bruteforce, Bounds};
use rqcp::eager::eager_state_reach;
use rqcp::format::{parse_system_str, serialize_system};
use rqcp::gen::{
    random_driver_system, random_finite_qcp, random_md_sequence, random_nonconverging_rqcp,
    random_pushdown, random_system, random_target, GenLimits, RestrictionStyle,
};
use rqcp::model::{Action, StateId};
use rqcp::mutex::check_mutex;
use rqcp::pushdown::empty_pairs;
use rqcp::runs::matching_pairs;
use rqcp::topology::{
    co_cycle_relation, co_cycle_relation_by_enumeration, enumerate_simple_cycles, is_converging,
    is_polyforest,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Unrestricting an endpoint can only help convergence: dropping a pair
    /// from the restriction set never turns a converging topology
    /// non-converging.
    #[test]
    fn convergence_is_monotone_in_the_unrestricted_set(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, &GenLimits::default(), RestrictionStyle::Free);
        let topo = &sys.topology;
        if is_converging(topo).is_some() {
            for &pair in topo.restricted.iter() {
                let mut fewer = topo.clone();
                fewer.restricted.remove(&pair);
                prop_assert!(
                    is_converging(&fewer).is_some(),
                    "removing {pair:?} flipped a converging topology"
                );
            }
        }
    }

    /// The biconnected-component co-cycle relation equals brute-force
    /// simple-cycle enumeration, and polyforests are exactly the
    /// cycle-free topologies.
    #[test]
    fn co_cycle_relation_matches_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, &GenLimits::default(), RestrictionStyle::Free);
        let topo = &sys.topology;
        let fast = co_cycle_relation(topo);
        let slow = co_cycle_relation_by_enumeration(topo);
        prop_assert_eq!(fast.pairs(), slow.pairs());
        let cycles = enumerate_simple_cycles(topo, topo.channel_count().max(2));
        prop_assert_eq!(is_polyforest(topo), cycles.is_empty());
    }

    /// Send/receive matching in explored runs is FIFO per channel: matched
    /// pairs never cross, sends precede their receives, and the actions
    /// agree on channel and message.
    #[test]
    fn matching_pairs_respect_fifo(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_finite_qcp(&mut rng);
        let exploration = explore_bounded(&sys, &Bounds::new(2, 0, 7));
        for config in exploration.configs.iter().skip(1) {
            let run = exploration.witness(config).expect("explored");
            let pairs = matching_pairs(&run);
            let mut per_channel: std::collections::BTreeMap<usize, Vec<(usize, usize)>> =
                Default::default();
            for &(s, r) in &pairs {
                prop_assert!(s < r, "receive before its send");
                let (send, recv) = (&run.steps[s], &run.steps[r]);
                match (&send.action, &recv.action) {
                    (
                        Action::Send { channel: cs, message: ms },
                        Action::Recv { channel: cr, message: mr },
                    ) => {
                        prop_assert_eq!(cs, cr, "matched across channels");
                        prop_assert_eq!(ms, mr, "matched across messages");
                        per_channel.entry(cs.0).or_default().push((s, r));
                    }
                    _ => prop_assert!(false, "matched pair is not send/recv"),
                }
            }
            for pairs in per_channel.values() {
                let mut sorted = pairs.clone();
                sorted.sort();
                let recvs: Vec<usize> = sorted.iter().map(|&(_, r)| r).collect();
                prop_assert!(
                    recvs.windows(2).all(|w| w[0] < w[1]),
                    "FIFO matching crossed on a channel"
                );
            }
        }
    }

    /// Reversal of a phase sequence is an involution that preserves
    /// well-formedness and swaps multiplex and demultiplex kinds.
    #[test]
    fn md_sequence_reversal_is_involutive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_md_sequence(&mut rng);
        let rev = reverse_md_sequence(&seq);
        prop_assert_eq!(rev.validate(), Ok(()));
        for (phase, mirrored) in seq.phases.iter().zip(rev.phases.iter().rev()) {
            match (phase.kind, mirrored.kind) {
                (PhaseKind::LocalOnly, PhaseKind::LocalOnly) => {}
                (PhaseKind::Mux(c), PhaseKind::Demux(d)) => prop_assert_eq!(c, d),
                (PhaseKind::Demux(c), PhaseKind::Mux(d)) => prop_assert_eq!(c, d),
                other => prop_assert!(false, "kinds do not mirror: {other:?}"),
            }
        }
        prop_assert_eq!(reverse_md_sequence(&rev), seq);
    }

    /// Random systems survive a JSON round-trip structurally unchanged.
    #[test]
    fn json_round_trip_on_random_systems(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, &GenLimits::default(), RestrictionStyle::Free);
        let target = random_target(&mut rng, &sys);
        let text = serialize_system(&sys, Some(&target));
        let (back, parsed) = parse_system_str(&text).expect("own output parses");
        prop_assert_eq!(back, sys);
        prop_assert_eq!(parsed, Some(target));
    }

    /// The analyses are pure: repeated invocations yield identical results.
    #[test]
    fn analyses_are_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_nonconverging_rqcp(&mut rng);
        let target: Vec<StateId> = sys.pushdowns.iter().map(|pd| pd.init).collect();
        prop_assert_eq!(eager_state_reach(&sys, &target), eager_state_reach(&sys, &target));
        let finite = random_finite_qcp(&mut rng);
        prop_assert_eq!(check_mutex(&finite, false), check_mutex(&finite, false));
        prop_assert_eq!(check_mutex(&finite, true), check_mutex(&finite, true));
    }

    /// The empty-stack-to-empty-stack relation is reflexive and
    /// transitively closed.
    #[test]
    fn empty_pairs_is_a_preorder(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pd = random_pushdown(&mut rng);
        let pairs = empty_pairs(&pd).expect("no communications");
        for z in 0..pd.state_count() {
            prop_assert!(pairs.contains(&(StateId(z), StateId(z))));
        }
        for &(a, b) in &pairs {
            for &(c, d) in &pairs {
                if b == c {
                    prop_assert!(pairs.contains(&(a, d)), "missing composition {a:?}->{d:?}");
                }
            }
        }
    }

    /// The k-phase brute-force oracle is monotone in k under fixed bounds.
    #[test]
    fn kphase_oracle_is_monotone_in_k(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_driver_system(&mut rng);
        let target = random_target(&mut rng, &sys);
        let bounds = Bounds::new(2, 2, 7);
        let mut previous = false;
        for k in 1..=3 {
            let outcome = kphase_reach_bruteforce(&sys, &target, k, &bounds);
            prop_assert!(!previous || outcome.reachable, "lost reachability at k={k}");
            previous = outcome.reachable;
        }
    }
}
