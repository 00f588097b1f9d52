//! Exact control-state reachability along eager runs of a recursive system,
//! through the product pushdown construction.
//!
//! Eager runs receive every message immediately after it is sent (a
//! rendezvous), except for *growing* channels that absorb unmatched sends
//! and are never read again. On non-converging topologies, control-state
//! reachability along eager runs reduces to reachability in a single
//! product pushdown whose control states track the active process, the
//! global control vector, and the set of growing channels.
//!
//! Run with: `cargo run --example eager_product`

use rqcp::eager::{build_product, eager_state_reach, product_size_bound};
use rqcp::model::{Action, SystemBuilder};

fn main() {
    // A sender with a real stack: it pushes a frame, sends a request while
    // the frame is still on the stack, and pops afterwards. The receiver is
    // restricted on the channel (it must be at stack bottom to receive),
    // the sender is unrestricted, so the topology is non-converging.
    let mut b = SystemBuilder::new();
    let p = b.process("client");
    let q = b.process("server");
    let c = b.channel("c", p, q);
    b.restrict(q, c);
    let req = b.message("req");
    let a = b.stack_symbol(p, "frame");
    let z0 = b.state(p, "z0");
    let z1 = b.state(p, "z1");
    let z2 = b.state(p, "z2");
    let z3 = b.state(p, "z3");
    b.init(p, z0);
    let y0 = b.state(q, "y0");
    let y1 = b.state(q, "y1");
    b.init(q, y0);
    b.transition(p, z0, Action::Push(a), z1);
    b.transition(p, z1, Action::Send { channel: c, message: req }, z2);
    b.transition(p, z2, Action::Pop(a), z3);
    b.transition(q, y0, Action::Recv { channel: c, message: req }, y1);
    b.guard_restricted();
    let sys = b.build();

    let queries = [
        ("request delivered, stack unwound", vec![z3, y1]),
        ("request lost in a growing channel", vec![z3, y0]),
        ("response without a request", vec![z0, y1]),
    ];
    for (label, target) in &queries {
        let names: Vec<&str> = target
            .iter()
            .enumerate()
            .map(|(i, z)| sys.pushdowns[i].states[z.0].as_str())
            .collect();
        let reachable = eager_state_reach(&sys, target).expect("valid non-converging input");
        println!("{label}: target ({}) eager-reachable: {reachable}", names.join(", "));
    }

    // The product stays comfortably inside its closed-form size bound.
    let product = build_product(&sys, &[z3, y1]).unwrap();
    println!(
        "product pushdown: {} control states (bound {})",
        product.controls.len(),
        product_size_bound(&sys)
    );
}
