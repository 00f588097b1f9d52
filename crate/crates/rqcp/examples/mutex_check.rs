//! The mutex property: in every reachable configuration, each simple
//! undirected cycle of the topology carries at most one nonempty channel.
//!
//! Mutex systems matter because their reachable control states are exactly
//! the eager-reachable ones, so eager analysis is complete for them. The
//! checker explores an abstraction (control vector, set of nonempty
//! channels) of eager runs and looks for a send that would put two
//! cycle-sharing channels simultaneously nonempty. Polyforest topologies
//! have no cycles at all and short-circuit without any exploration.
//!
//! Run with: `cargo run --example mutex_check`

use rqcp::fixtures;
use rqcp::model::{Action, SystemBuilder};
use rqcp::mutex::{check_mutex, MutexVerdict};

fn main() {
    // Polyforest: vacuously mutex, zero states explored.
    let star = fixtures::star(4);
    let report = check_mutex(&star, false).expect("finite system");
    println!(
        "star(4): {:?}, {} states explored (polyforest short-circuit)",
        matches!(report.verdict, MutexVerdict::Mutex),
        report.states_explored
    );

    // Two antiparallel channels form a 2-cycle. If both processes send
    // before either receives, both channels are nonempty at once: not
    // mutex.
    let mut b = SystemBuilder::new();
    let p = b.process("p");
    let q = b.process("q");
    let c = b.channel("c", p, q);
    let d = b.channel("d", q, p);
    let a = b.message("a");
    let g = b.message("g");
    let z0 = b.state(p, "z0");
    let z1 = b.state(p, "z1");
    let z2 = b.state(p, "z2");
    b.init(p, z0);
    let y0 = b.state(q, "y0");
    let y1 = b.state(q, "y1");
    let y2 = b.state(q, "y2");
    b.init(q, y0);
    b.transition(p, z0, Action::Send { channel: c, message: a }, z1);
    b.transition(p, z1, Action::Recv { channel: d, message: g }, z2);
    b.transition(q, y0, Action::Send { channel: d, message: g }, y1);
    b.transition(q, y1, Action::Recv { channel: c, message: a }, y2);
    let crossing = b.build();
    describe(&crossing, "crossing exchange");

    // The probe fixture: a process that can flood two outputs while a
    // request/acknowledge cycle is in flight.
    describe(&fixtures::mutex_probe(), "mutex_probe");
}

fn describe(sys: &rqcp::model::Rqcp, name: &str) {
    let report = check_mutex(sys, false).expect("finite system");
    match &report.verdict {
        MutexVerdict::Mutex => {
            println!("{name}: mutex ({} states explored)", report.states_explored);
        }
        MutexVerdict::NotMutex(w) => {
            let control: Vec<&str> = w
                .control
                .iter()
                .enumerate()
                .map(|(i, z)| sys.pushdowns[i].states[z.0].as_str())
                .collect();
            let nonempty: Vec<&str> =
                w.nonempty.iter().map(|c| sys.topology.channels[c.0].name.as_str()).collect();
            println!(
                "{name}: NOT mutex ({} states explored)",
                report.states_explored
            );
            println!("  witness control ({}), nonempty channels {{{}}}", control.join(", "), nonempty.join(", "));
            if let Some(send) = &w.send {
                println!(
                    "  offending send: {} puts {} alongside nonempty {}",
                    sys.topology.processes[send.process.0],
                    sys.topology.channels[send.channel.0].name,
                    sys.topology.channels[send.clashes_with.0].name
                );
            }
        }
    }
}
