//! Under-approximate reachability through phase-bounded runs.
//!
//! A *phase* is a run segment of a single process whose communication fits
//! one pattern: multiplexing (sending into one designated channel that the
//! process sources restrictedly, receiving only from source-restricted
//! channels) or demultiplexing (the dual), or no communication at all. Any
//! control vector reachable within `k` phases is really reachable; raising
//! `k` widens the under-approximation monotonically.
//!
//! The ping-pong below needs three phases: the client sends `ping`, the
//! server answers `pong` (receiving and sending in one multiplexing phase
//! of its own), and the client comes back to receive the answer.
//!
//! Run with: `cargo run --example bounded_phases`

use rqcp::bounded::{bounded_state_reach, BoundedVerdict};
use rqcp::model::{Action, SystemBuilder};

fn main() {
    let mut b = SystemBuilder::new();
    let p = b.process("client");
    let q = b.process("server");
    let c = b.channel("ping", p, q);
    let d = b.channel("pong", q, p);
    b.restrict(p, c);
    b.restrict(q, d);
    let m = b.message("m");
    let z0 = b.state(p, "z0");
    let z1 = b.state(p, "z1");
    let z2 = b.state(p, "z2");
    b.init(p, z0);
    let y0 = b.state(q, "y0");
    let y1 = b.state(q, "y1");
    let y2 = b.state(q, "y2");
    b.init(q, y0);
    b.transition(p, z0, Action::Send { channel: c, message: m }, z1);
    b.transition(p, z1, Action::Recv { channel: d, message: m }, z2);
    b.transition(q, y0, Action::Recv { channel: c, message: m }, y1);
    b.transition(q, y1, Action::Send { channel: d, message: m }, y2);
    b.guard_restricted();
    let sys = b.build();

    let target = vec![z2, y2];
    let mut previous_reachable = false;
    for k in 1..=4 {
        let report = bounded_state_reach(&sys, &target, k, 1_000_000).unwrap();
        let verdict = match report.verdict {
            BoundedVerdict::Reachable => "reachable",
            BoundedVerdict::Unreachable => "unreachable",
            BoundedVerdict::BudgetExhausted => "budget exhausted",
        };
        println!(
            "k = {k}: target (z2, y2) {verdict:>11}   ({} phase sequences, {} leaf checks)",
            report.sequences_checked, report.leaf_checks
        );
        // Monotonicity: once reachable, always reachable for larger k.
        let reachable = report.verdict == BoundedVerdict::Reachable;
        assert!(!previous_reachable || reachable);
        previous_reachable = reachable;
    }

    // A lost message needs fewer phases: a single send-only phase puts the
    // client in z1 while the server never moves.
    let report = bounded_state_reach(&sys, &[z1, y0], 1, 1_000_000).unwrap();
    println!(
        "k = 1: target (z1, y0) {:>11}   (unreceived ping)",
        match report.verdict {
            BoundedVerdict::Reachable => "reachable",
            _ => "unreachable",
        }
    );
}
