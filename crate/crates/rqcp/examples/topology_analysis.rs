//! Structural analysis of typed topologies: convergence, polyforests, and
//! the co-cycle relation between channels.
//!
//! A typed topology marks each channel endpoint as restricted (the process
//! communicates on it only with an empty stack) or unrestricted. The key
//! structural property is *convergence*: a simple undirected path whose two
//! end processes are unrestricted on their end channels. Reachability is
//! undecidable on converging topologies, so the analyses refuse them; every
//! fixture in this crate is non-converging by construction.
//!
//! Run with: `cargo run --example topology_analysis`

use rqcp::fixtures;
use rqcp::model::SystemBuilder;
use rqcp::topology::{co_cycle_relation, is_converging, is_polyforest, to_dot};

fn main() {
    let named = [
        ("star(4)", fixtures::star(4)),
        ("double_ring", fixtures::double_ring()),
        ("master_worker", fixtures::master_worker()),
        ("mutex_probe", fixtures::mutex_probe()),
    ];
    for (name, sys) in &named {
        let topo = &sys.topology;
        let witness = is_converging(topo);
        let pairs = co_cycle_relation(topo).unordered_pairs();
        println!(
            "{name}: non-converging: {}, polyforest: {}, co-cycle pairs: {}",
            witness.is_none(),
            is_polyforest(topo),
            pairs.len()
        );
        for (c, d) in &pairs {
            println!("  {} and {} share a simple cycle", topo.channels[c.0].name, topo.channels[d.0].name);
        }
    }

    // A single channel with both endpoints unrestricted is the smallest
    // converging topology: the one-edge path has unrestricted ends.
    let mut b = SystemBuilder::new();
    let p = b.process("p");
    let q = b.process("q");
    b.channel("c", p, q);
    b.state(p, "z0");
    b.state(q, "y0");
    let free = b.build();
    let witness = is_converging(&free.topology).expect("an unrestricted channel converges");
    println!("unrestricted channel: converging, witness {}", witness.display(&free.topology));

    // DOT export for rendering with graphviz; restricted endpoints are
    // annotated on the edges.
    println!("\nDOT rendition of the star topology:\n{}", to_dot(&fixtures::star(3).topology));
}
