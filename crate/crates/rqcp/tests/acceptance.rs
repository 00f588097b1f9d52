//! Acceptance suite: ten criteria, one printed pass/fail line each.
//!
//! Runs without the libtest harness so every line is visible in plain
//! `cargo test` output. Each criterion is property- or fixture-based at
//! desk scale: randomized instances come from seeded generators, and every
//! analysis is compared against an independent bounded brute-force oracle
//! on the instances where that oracle is conclusive.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rqcp::bounded::{
    bounded_state_reach, md_satisfiable_oracle, reduce_md_sequence, BoundedVerdict, MdSequence,
    ReduceError,
};
use rqcp::bruteforce::{
    eager_reach_bruteforce, explore_bounded, explore_from, is_eager_run,
    kphase_reach_bruteforce, reorder_mutex_to_eager, Bounds,
};
use rqcp::eager::{build_product, eager_state_reach, finite_eager_vectors, product_size_bound};
use rqcp::fixtures;
use rqcp::gen::{
    random_driver_system, random_finite_qcp, random_md_sequence, random_nonconverging_rqcp,
    random_pushdown, random_target,
};
use rqcp::model::{Action, Rqcp, StateId, SymbolId, SystemBuilder, TypedTopology};
use rqcp::mutex::{check_mutex, MutexVerdict};
use rqcp::pushdown::{empty_pairs, saturate, PAutomaton};
use rqcp::runs::{matching_pairs, Configuration};
use rqcp::topology::{is_converging, is_polyforest};

fn main() {
    let criteria: Vec<(&str, fn() -> String)> = vec![
        ("C1", c1_topology_fixtures),
        ("C2", c2_eager_oracle_equivalence),
        ("C3", c3_finite_eager_exact),
        ("C4", c4_mutex_oracle_agreement),
        ("C5", c5_mutex_implies_eager),
        ("C6", c6_run_reordering),
        ("C7", c7_reduction_soundness),
        ("C8", c8_bounded_reachability),
        ("C9", c9_saturation_vs_bfs),
        ("C10", c10_product_size),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(payload) => {
                let message = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".to_string());
                println!("FAIL {name}: {message}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

/// All control vectors of a system, in lexicographic order.
fn all_control_vectors(sys: &Rqcp) -> Vec<Vec<StateId>> {
    let mut out = vec![Vec::new()];
    for pd in &sys.pushdowns {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..pd.state_count()).map(move |z| {
                    let mut v = prefix.clone();
                    v.push(StateId(z));
                    v
                })
            })
            .collect();
    }
    out
}

/// Criterion 1: the bundled non-converging topologies (the fan-out star
/// at two sizes, the four-process double ring, the hierarchical
/// master-worker network) classify as non-converging; one channel
/// unrestricted at both ends classifies as converging. Deterministic and
/// under a second.
fn c1_topology_fixtures() -> String {
    let t0 = Instant::now();
    let named = [
        ("star(2)", fixtures::star(2)),
        ("star(4)", fixtures::star(4)),
        ("double_ring", fixtures::double_ring()),
        ("master_worker", fixtures::master_worker()),
    ];
    for (name, sys) in &named {
        assert!(
            is_converging(&sys.topology).is_none(),
            "{name} must be non-converging"
        );
        // determinism: repeated analysis yields the identical verdict
        assert_eq!(is_converging(&sys.topology), is_converging(&sys.topology));
    }
    let mut b = SystemBuilder::new();
    let p = b.process("p");
    let q = b.process("q");
    b.channel("c", p, q);
    b.state(p, "z0");
    b.state(q, "y0");
    let free = b.build();
    let witness = is_converging(&free.topology);
    assert!(witness.is_some(), "an unrestricted channel must converge");
    assert_eq!(witness, is_converging(&free.topology));
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}, budget 1s");
    format!("4 non-converging fixtures + 1 converging classified deterministically in {}", secs(elapsed))
}

/// Criterion 2: on ≥ 200 random non-converging recursive systems, the
/// product-pushdown analysis agrees with the bounded eager-run oracle on
/// every conclusive instance; on truncated instances every oracle-reached
/// vector must still be reported reachable. Budget 120 s.
fn c2_eager_oracle_equivalence() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let bounds = Bounds::default();
    let mut conclusive = 0usize;
    let mut vectors = 0usize;
    for i in 0..200 {
        let sys = random_nonconverging_rqcp(&mut rng);
        let oracle = eager_reach_bruteforce(&sys, &bounds);
        let seen = oracle.control_vectors();
        if oracle.truncated {
            for v in &seen {
                assert_eq!(
                    eager_state_reach(&sys, v),
                    Ok(true),
                    "instance {i}: oracle reached {v:?} but the analysis denies it"
                );
                vectors += 1;
            }
            continue;
        }
        conclusive += 1;
        for v in all_control_vectors(&sys) {
            let expected = seen.contains(&v);
            assert_eq!(
                eager_state_reach(&sys, &v),
                Ok(expected),
                "instance {i}: disagreement on {v:?}"
            );
            vectors += 1;
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed <= Duration::from_secs(120), "took {elapsed:?}, budget 120s");
    format!(
        "200 systems ({conclusive} conclusive), {vectors} vectors cross-checked, 0 disagreements in {}",
        secs(elapsed)
    )
}

/// Criterion 3: the finite-system eager explorer matches the oracle
/// exactly on ≥ 200 random finite systems (conclusive instances).
fn c3_finite_eager_exact() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let bounds = Bounds::default();
    let mut conclusive = 0usize;
    for i in 0..200 {
        let sys = random_finite_qcp(&mut rng);
        let exact = finite_eager_vectors(&sys).expect("generator yields finite systems");
        let oracle = eager_reach_bruteforce(&sys, &bounds);
        let seen = oracle.control_vectors();
        if oracle.truncated {
            assert!(
                seen.is_subset(&exact),
                "instance {i}: truncated oracle escaped the exact set"
            );
            continue;
        }
        conclusive += 1;
        assert_eq!(exact, seen, "instance {i}: exact explorer differs from oracle");
    }
    format!("200 finite systems ({conclusive} conclusive), exact agreement in {}", secs(t0.elapsed()))
}

/// The criterion-4 oracle: the full closure of reachable configurations
/// with every channel capped at three messages; not-mutex iff it contains a
/// configuration violating the cycle relation.
fn mutex_oracle_says_not_mutex(sys: &Rqcp) -> bool {
    let exploration = explore_bounded(sys, &Bounds::new(3, 0, 1_000_000));
    exploration
        .configs
        .iter()
        .any(|config| !rqcp::mutex::is_mutex_config(&sys.topology, config, false))
}

/// Criterion 4: the mutex checker agrees with the channel-bound-3 oracle on
/// ≥ 200 random finite systems over cyclic topologies; the probe fixture is
/// not mutex; polyforest instances short-circuit with zero exploration.
fn c4_mutex_oracle_agreement() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut cyclic = 0usize;
    let mut not_mutex = 0usize;
    let mut polyforests = 0usize;
    while cyclic < 200 {
        let sys = random_finite_qcp(&mut rng);
        let report = check_mutex(&sys, false).expect("finite");
        if is_polyforest(&sys.topology) {
            assert_eq!(report.states_explored, 0, "polyforest must short-circuit");
            assert!(matches!(report.verdict, MutexVerdict::Mutex));
            polyforests += 1;
            continue;
        }
        cyclic += 1;
        let oracle_not_mutex = mutex_oracle_says_not_mutex(&sys);
        let checker_not_mutex = matches!(report.verdict, MutexVerdict::NotMutex(_));
        assert_eq!(
            checker_not_mutex, oracle_not_mutex,
            "cyclic instance {cyclic}: checker and oracle disagree"
        );
        if checker_not_mutex {
            not_mutex += 1;
        }
    }
    let probe = check_mutex(&fixtures::mutex_probe(), false).expect("finite");
    assert!(
        matches!(probe.verdict, MutexVerdict::NotMutex(_)),
        "the probe fixture must be not-mutex"
    );
    format!(
        "200 cyclic systems agree with the oracle ({not_mutex} not-mutex), {polyforests} polyforests short-circuited, probe not-mutex, in {}",
        secs(t0.elapsed())
    )
}

/// Criterion 5: on every randomly generated finite system the checker deems
/// mutex, each oracle-reachable control vector is eager-reachable.
fn c5_mutex_implies_eager() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut mutex_instances = 0usize;
    let mut vectors = 0usize;
    for _ in 0..200 {
        let sys = random_finite_qcp(&mut rng);
        let report = check_mutex(&sys, false).expect("finite");
        if !matches!(report.verdict, MutexVerdict::Mutex) {
            continue;
        }
        mutex_instances += 1;
        let exact = finite_eager_vectors(&sys).expect("finite");
        let exploration = explore_bounded(&sys, &Bounds::new(3, 0, 12));
        for config in &exploration.configs {
            assert!(
                exact.contains(&config.control),
                "mutex system has a reachable vector {:?} missed by the eager explorer",
                config.control
            );
            vectors += 1;
        }
    }
    format!(
        "{mutex_instances} mutex systems, {vectors} reachable vectors all eager-reachable, 0 counterexamples in {}",
        secs(t0.elapsed())
    )
}

/// Criterion 6: ≥ 100 oracle-generated runs of mutex systems reorder into
/// eager runs with the final configuration, the per-process projections and
/// the matching-pair count preserved.
fn c6_run_reordering() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut checked = 0usize;
    'outer: while checked < 100 {
        let sys = random_finite_qcp(&mut rng);
        let report = check_mutex(&sys, false).expect("finite");
        if !matches!(report.verdict, MutexVerdict::Mutex) {
            continue;
        }
        let exploration = explore_bounded(&sys, &Bounds::new(3, 0, 8));
        for config in exploration.configs.clone() {
            let run = exploration.witness(&config).expect("explored config has a witness");
            if run.is_empty() {
                continue;
            }
            let eager = reorder_mutex_to_eager(&sys, &run, false)
                .expect("runs of a mutex system must reorder");
            assert!(is_eager_run(&eager), "reordered run is not eager");
            assert_eq!(eager.final_config(), run.final_config(), "final configuration changed");
            assert_eq!(
                matching_pairs(&eager).len(),
                matching_pairs(&run).len(),
                "matching-pair count changed"
            );
            for p in sys.process_ids() {
                let before: Vec<&Action> =
                    run.projection(p).iter().map(|s| &s.action).collect();
                let after: Vec<&Action> =
                    eager.projection(p).iter().map(|s| &s.action).collect();
                assert_eq!(before, after, "projection of {p} changed");
            }
            checked += 1;
            if checked >= 100 {
                break 'outer;
            }
        }
    }
    format!("{checked} mutex runs reordered to eager with all invariants preserved in {}", secs(t0.elapsed()))
}

/// Criterion 7: on ≥ 100 small phase sequences, the sequence is
/// oracle-satisfiable iff some member of its one-step reduction family is;
/// the structural bounds |F| ≤ |Φ|^k and |Ψ| ≤ 2|Φ|² hold on every
/// produced sequence.
fn c7_reduction_soundness() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let bounds = Bounds::new(4, 3, 14);
    let mut compared = 0usize;
    let mut reduced = 0usize;
    let mut attempts = 0usize;
    while compared < 100 {
        attempts += 1;
        assert!(attempts < 20_000, "generator starved: only {compared} conclusive comparisons");
        let seq = random_md_sequence(&mut rng);
        let family = match reduce_md_sequence(&seq) {
            Ok(family) => family,
            Err(ReduceError::AllLocal) => continue,
            Err(e) => panic!("reduction rejected a generated sequence: {e:?}"),
        };
        reduced += 1;
        let size = seq.size();
        let k = seq.phases.len() as u32;
        assert!(
            family.len() as u128 <= (size as u128).pow(k),
            "family bound violated: {} > {}^{}",
            family.len(),
            size,
            k
        );
        for psi in &family {
            assert!(
                psi.size() <= 2 * size * size,
                "member bound violated: {} > 2·{}²",
                psi.size(),
                size
            );
            assert_eq!(psi.validate(), Ok(()), "produced sequence is ill-formed");
        }
        let lhs = md_satisfiable_oracle(&seq, &bounds);
        let rhs = family_satisfiable(&family, &bounds);
        if let (Some(a), Some(b)) = (lhs, rhs) {
            assert_eq!(a, b, "one-step reduction changed satisfiability");
            compared += 1;
        }
    }
    format!(
        "{reduced} sequences reduced within bounds, {compared} conclusive iff-checks, 0 violations in {}",
        secs(t0.elapsed())
    )
}

/// Oracle satisfiability of a reduction family: satisfiable when some
/// member conclusively is, unsatisfiable when all members conclusively are
/// not, unknown otherwise.
fn family_satisfiable(family: &[MdSequence], bounds: &Bounds) -> Option<bool> {
    let mut all_false = true;
    for psi in family {
        match md_satisfiable_oracle(psi, bounds) {
            Some(true) => return Some(true),
            Some(false) => {}
            None => all_false = false,
        }
    }
    if all_false {
        Some(false)
    } else {
        None
    }
}

/// Criterion 8: the phase-bounded driver agrees with the brute-force
/// k-phase oracle for k ≤ 3 on ≥ 100 tiny systems, and its verdict is
/// monotone in k. Budget 300 s.
fn c8_bounded_reachability() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let bounds = Bounds::new(3, 3, 9);
    let mut definitive = 0usize;
    for i in 0..100 {
        let sys = random_driver_system(&mut rng);
        let target = random_target(&mut rng, &sys);
        let mut previous_reachable = false;
        let mut instance_definitive = false;
        for k in 1..=3usize {
            let driver = bounded_state_reach(&sys, &target, k, 500_000)
                .expect("generated systems satisfy the driver preconditions");
            let oracle = kphase_reach_bruteforce(&sys, &target, k, &bounds);
            match driver.verdict {
                BoundedVerdict::Reachable => {
                    assert!(
                        oracle.reachable || oracle.truncated,
                        "instance {i} k={k}: driver says reachable, conclusive oracle disagrees"
                    );
                    if oracle.reachable {
                        instance_definitive = true;
                    }
                }
                BoundedVerdict::Unreachable => {
                    assert!(
                        !oracle.reachable,
                        "instance {i} k={k}: oracle found a {k}-phase run the driver missed"
                    );
                    if !oracle.truncated {
                        instance_definitive = true;
                    }
                }
                BoundedVerdict::BudgetExhausted => {}
            }
            let reachable = driver.verdict == BoundedVerdict::Reachable;
            assert!(
                !previous_reachable || reachable,
                "instance {i}: verdict not monotone at k={k}"
            );
            previous_reachable = reachable;
        }
        if instance_definitive {
            definitive += 1;
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed <= Duration::from_secs(300), "took {elapsed:?}, budget 300s");
    format!(
        "100 tiny systems × k ≤ 3 agree with the oracle ({definitive} with a definitive round), monotone in k, in {}",
        secs(elapsed)
    )
}

/// Wraps a single pushdown as a one-process system so the generic bounded
/// explorer can serve as its BFS oracle.
fn solo(pd: &rqcp::model::PushdownProcess) -> Rqcp {
    Rqcp {
        topology: TypedTopology {
            processes: vec!["p".to_string()],
            channels: Vec::new(),
            restricted: BTreeSet::new(),
        },
        messages: Vec::new(),
        pushdowns: vec![pd.clone()],
    }
}

/// Criterion 9: saturation and the empty-pair relation agree with a
/// depth-6 BFS on ≥ 200 random pushdowns — BFS-reached configurations are
/// always accepted, and on instances the BFS covers exhaustively the two
/// answers coincide over the whole bounded configuration space.
fn c9_saturation_vs_bfs() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);
    let bounds = Bounds::new(0, 6, 6);
    let mut exhaustive = 0usize;
    for i in 0..200 {
        let pd = random_pushdown(&mut rng);
        let wrapper = solo(&pd);
        let n = pd.state_count();
        let saturated = saturate(&pd, &PAutomaton::empty_stack_at(n, pd.init))
            .expect("generator emits no communications");
        let bfs = explore_from(&wrapper, Configuration::initial(&wrapper), &bounds);
        for config in &bfs.configs {
            assert!(
                saturated.accepts(config.control[0], &config.stacks[0]),
                "instance {i}: BFS reached a configuration saturation rejects"
            );
        }
        if !bfs.truncated {
            exhaustive += 1;
            for z in 0..n {
                for stack in stacks_up_to(pd.stack_alphabet.len(), 6) {
                    let config = Configuration {
                        control: vec![StateId(z)],
                        stacks: vec![stack.clone()],
                        channels: Vec::new(),
                    };
                    assert_eq!(
                        saturated.accepts(StateId(z), &stack),
                        bfs.contains(&config),
                        "instance {i}: exact mismatch at state {z} stack {stack:?}"
                    );
                }
            }
        }

        // the empty-pair relation, from every start state
        let pairs = empty_pairs(&pd).expect("no communications");
        for z in 0..n {
            let start = Configuration {
                control: vec![StateId(z)],
                stacks: vec![Vec::new()],
                channels: Vec::new(),
            };
            let bfs = explore_from(&wrapper, start, &bounds);
            for config in &bfs.configs {
                if config.stacks[0].is_empty() {
                    assert!(
                        pairs.contains(&(StateId(z), config.control[0])),
                        "instance {i}: BFS found an empty-empty pair missing from the relation"
                    );
                }
            }
            if !bfs.truncated {
                for z2 in 0..n {
                    let config = Configuration {
                        control: vec![StateId(z2)],
                        stacks: vec![Vec::new()],
                        channels: Vec::new(),
                    };
                    assert_eq!(
                        pairs.contains(&(StateId(z), StateId(z2))),
                        bfs.contains(&config),
                        "instance {i}: empty-pair mismatch {z} -> {z2}"
                    );
                }
            }
        }
    }
    format!(
        "200 pushdowns: BFS ⊆ saturation everywhere, exact agreement on {exhaustive} exhaustive instances, in {}",
        secs(t0.elapsed())
    )
}

/// All stack words up to the given height.
fn stacks_up_to(symbols: usize, height: usize) -> Vec<Vec<SymbolId>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<SymbolId>> = vec![Vec::new()];
    for _ in 0..height {
        let mut next = Vec::new();
        for word in &layer {
            for s in 0..symbols {
                let mut w = word.clone();
                w.push(SymbolId(s));
                next.push(w);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Criterion 10: the product pushdown's control-state count stays within
/// the closed-form bound |P| · ∏|Z^p| · 2^|P| · 2^|C| · (1 + |⋃Γ^p|) ·
/// 3^(|P|+1) on every generated instance.
fn c10_product_size() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA);
    let mut worst_ratio = 0.0f64;
    for _ in 0..200 {
        let sys = random_nonconverging_rqcp(&mut rng);
        let target: Vec<StateId> = sys.pushdowns.iter().map(|pd| pd.init).collect();
        let product = build_product(&sys, &target).expect("valid non-converging input");

        // the pinned bound, recomputed here independently of the library
        let p = sys.process_count() as u32;
        let c = sys.topology.channel_count() as u32;
        let gamma: usize = sys.pushdowns.iter().map(|pd| pd.stack_alphabet.len()).sum();
        let mut bound: u128 = sys.process_count() as u128;
        for pd in &sys.pushdowns {
            bound *= pd.state_count() as u128;
        }
        bound *= 1u128 << p;
        bound *= 1u128 << c;
        bound *= 1 + gamma as u128;
        bound *= 3u128.pow(p + 1);

        let controls = product.controls.len() as u128;
        assert!(controls <= bound, "product has {controls} controls, bound {bound}");
        assert!(
            bound <= product_size_bound(&sys),
            "size-bound helper is tighter than the closed-form formula"
        );
        worst_ratio = worst_ratio.max(controls as f64 / bound as f64);
    }
    format!(
        "200 products within the size bound (worst fill ratio {:.3}), in {}",
        worst_ratio,
        secs(t0.elapsed())
    )
}
