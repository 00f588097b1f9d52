//! Constructively reordering a run of a mutex system into an eager run with
//! the same final configuration and the same per-process behaviour.
//!
//! Mutex systems admit buffering — a sender may race ahead of its receiver
//! — but every such run can be commuted, pair by pair, into an eager run
//! where each receive immediately follows its matching send. This is the
//! reason eager analysis is complete for mutex systems.
//!
//! Run with: `cargo run --example reorder_run`

use rqcp::bruteforce::{is_eager_run, reorder_mutex_to_eager};
use rqcp::model::{Action, SystemBuilder};
use rqcp::runs::{matching_pairs, Configuration, Run};

fn main() {
    // One channel, restricted at the receiver. The sender fires twice
    // before the receiver drains the channel: the run buffers two messages.
    let mut b = SystemBuilder::new();
    let p = b.process("p");
    let q = b.process("q");
    let c = b.channel("c", p, q);
    b.restrict(q, c);
    let m = b.message("m");
    let z0 = b.state(p, "z0");
    let z1 = b.state(p, "z1");
    let z2 = b.state(p, "z2");
    b.init(p, z0);
    let y0 = b.state(q, "y0");
    let y1 = b.state(q, "y1");
    let y2 = b.state(q, "y2");
    b.init(q, y0);
    let send = Action::Send { channel: c, message: m };
    let recv = Action::Recv { channel: c, message: m };
    b.transition(p, z0, send.clone(), z1);
    b.transition(p, z1, send.clone(), z2);
    b.transition(q, y0, recv.clone(), y1);
    b.transition(q, y1, recv.clone(), y2);
    b.guard_restricted();
    let sys = b.build();

    let labels = [(p, send.clone()), (p, send), (q, recv.clone()), (q, recv)];
    let run = Run::from_labels(&sys, Configuration::initial(&sys), &labels).unwrap();
    print_schedule("buffered run", &sys, &run);
    assert!(!is_eager_run(&run));

    let eager = reorder_mutex_to_eager(&sys, &run, false).expect("single channel: mutex run");
    print_schedule("reordered  ", &sys, &eager);
    assert!(is_eager_run(&eager));

    // The reordering changes only the interleaving.
    assert_eq!(eager.final_config(), run.final_config());
    assert_eq!(matching_pairs(&eager).len(), matching_pairs(&run).len());
    for proc in sys.process_ids() {
        let before: Vec<_> = run.projection(proc).iter().map(|s| s.action.clone()).collect();
        let after: Vec<_> = eager.projection(proc).iter().map(|s| s.action.clone()).collect();
        assert_eq!(before, after);
    }
    println!("final configuration, projections and matching pairs all preserved");
}

fn print_schedule(label: &str, sys: &rqcp::model::Rqcp, run: &Run) {
    let parts: Vec<String> = run
        .steps
        .iter()
        .map(|s| {
            let who = &sys.topology.processes[s.process.0];
            match &s.action {
                Action::Send { channel, .. } => {
                    format!("{who}:{}!", sys.topology.channels[channel.0].name)
                }
                Action::Recv { channel, .. } => {
                    format!("{who}:{}?", sys.topology.channels[channel.0].name)
                }
                other => format!("{who}:{other:?}"),
            }
        })
        .collect();
    println!("{label}: {}", parts.join("  "));
}
