//! Eager reachability for finite systems (no stacks), cross-checked against
//! the bounded brute-force oracle.
//!
//! When every stack alphabet is empty the eager successor relation is a
//! plain finite graph: rendezvous steps, local steps, and sends into
//! growing channels. `finite_eager_vectors` computes the exact set of
//! eager-reachable control vectors; the brute-force explorer reproduces it
//! within bounds, and truncated explorations stay inside the exact answer.
//!
//! Run with: `cargo run --example finite_exploration`

use rqcp::bruteforce::{eager_reach_bruteforce, Bounds};
use rqcp::eager::finite_eager_vectors;
use rqcp::fixtures;

fn main() {
    // The handshake is tiny and the oracle covers it exhaustively: the two
    // answers must match exactly.
    let sys = fixtures::handshake();
    let exact = finite_eager_vectors(&sys).expect("handshake is finite");
    let oracle = eager_reach_bruteforce(&sys, &Bounds::default());
    assert!(!oracle.truncated, "handshake fits in the default bounds");
    assert_eq!(oracle.control_vectors(), exact);
    println!("handshake: {} eager-reachable control vectors, oracle agrees exactly", exact.len());

    // The mutex probe keeps pouring messages into its output channels, so
    // any bounded exploration is truncated; what it does see must still be
    // a subset of the exact reachable set.
    let sys = fixtures::mutex_probe();
    let exact = finite_eager_vectors(&sys).expect("probe is finite");
    let oracle = eager_reach_bruteforce(&sys, &Bounds::new(2, 0, 8));
    let seen = oracle.control_vectors();
    assert!(seen.is_subset(&exact));
    println!(
        "mutex_probe: {} vectors exactly, truncated oracle saw {} (truncated: {})",
        exact.len(),
        seen.len(),
        oracle.truncated
    );

    for vector in &exact {
        let names: Vec<&str> = vector
            .iter()
            .enumerate()
            .map(|(i, z)| sys.pushdowns[i].states[z.0].as_str())
            .collect();
        println!("  reachable: ({})", names.join(", "));
    }
}
