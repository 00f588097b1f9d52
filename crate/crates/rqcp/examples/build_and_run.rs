//! Build a two-process handshake with `SystemBuilder`, validate it, and walk
//! its semantics step by step with `enabled_moves`.
//!
//! The handshake: process `p` sends one message into channel `c`, process
//! `q` receives it. Both endpoints of `c` are restricted, so both sides may
//! only touch the channel with an empty stack; `guard_restricted` installs
//! those empty-stack guards automatically.
//!
//! Run with: `cargo run --example build_and_run`

use rqcp::model::{validate_system, Action, SystemBuilder};
use rqcp::runs::{enabled_moves, Configuration};

fn main() {
    let mut b = SystemBuilder::new();
    let p = b.process("p");
    let q = b.process("q");
    let c = b.channel("c", p, q);
    b.restrict(p, c);
    b.restrict(q, c);
    let m = b.message("m");
    let z0 = b.state(p, "z0");
    let z1 = b.state(p, "z1");
    b.init(p, z0);
    let y0 = b.state(q, "y0");
    let y1 = b.state(q, "y1");
    b.init(q, y0);
    b.transition(p, z0, Action::Send { channel: c, message: m }, z1);
    b.transition(q, y0, Action::Recv { channel: c, message: m }, y1);
    b.guard_restricted();
    let sys = b.build();

    let violations = validate_system(&sys);
    assert!(violations.is_empty(), "fixture should validate: {violations:?}");
    println!("system validates: {} processes, {} channels", sys.process_count(), sys.topology.channel_count());

    // Drive the system forward, always taking the first enabled move. The
    // handshake is deterministic: send, then receive, then quiescence.
    let mut config = Configuration::initial(&sys);
    loop {
        let pretty: Vec<String> = config
            .control
            .iter()
            .enumerate()
            .map(|(i, z)| sys.pushdowns[i].states[z.0].clone())
            .collect();
        let buffered: usize = config.channels.iter().map(Vec::len).sum();
        println!("at control ({}) with {buffered} buffered message(s)", pretty.join(", "));

        let moves = enabled_moves(&sys, &config);
        let Some((who, action, next)) = moves.into_iter().next() else {
            println!("no moves enabled: the run is complete");
            break;
        };
        println!("  -> {} fires {:?}", sys.topology.processes[who.0], action);
        config = next;
    }

    assert_eq!(config.control, vec![z1, y1]);
    assert!(config.channels.iter().all(Vec::is_empty));
}
