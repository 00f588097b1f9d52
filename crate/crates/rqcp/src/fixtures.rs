//! Ready-made example systems: small networks with interesting typed
//! topologies, and a finite protocol probe whose channel usage violates the
//! mutex discipline.

use crate::model::{Action, Rqcp, SystemBuilder};

/// A hub process fanning out to `n` leaves: channel `c_i` goes from the hub
/// to leaf `i`, the hub end is unrestricted and every leaf end restricted.
/// Non-converging for every `n`, and a polyforest.
pub fn star(n: usize) -> Rqcp {
    let mut b = SystemBuilder::new();
    let hub = b.process("hub");
    let hz = b.state(hub, "idle");
    b.init(hub, hz);
    for i in 0..n {
        let leaf = b.process(&format!("leaf{i}"));
        let lz = b.state(leaf, "idle");
        b.init(leaf, lz);
        let c = b.channel(&format!("c{i}"), hub, leaf);
        b.restrict(leaf, c);
    }
    b.message("m");
    b.build()
}

/// Four processes on a ring with channels in both rotational directions.
/// Forward channels `f_i: p_i -> p_{i+1}` are restricted at their target;
/// backward channels close the ring the other way with a mixed restriction
/// pattern. Non-converging despite the many cycles.
pub fn double_ring() -> Rqcp {
    let mut b = SystemBuilder::new();
    let p: Vec<_> = (0..4).map(|i| b.process(&format!("p{i}"))).collect();
    for &pi in &p {
        let z = b.state(pi, "idle");
        b.init(pi, z);
    }
    for i in 0..4 {
        let c = b.channel(&format!("f{i}"), p[i], p[(i + 1) % 4]);
        b.restrict(p[(i + 1) % 4], c);
    }
    let b10 = b.channel("b10", p[1], p[0]);
    b.restrict(p[1], b10);
    b.restrict(p[0], b10);
    let b21 = b.channel("b21", p[2], p[1]);
    b.restrict(p[2], b21);
    let b32 = b.channel("b32", p[3], p[2]);
    b.restrict(p[3], b32);
    let b03 = b.channel("b03", p[0], p[3]);
    b.restrict(p[0], b03);
    b.restrict(p[3], b03);
    b.message("m");
    b.build()
}

/// A two-level master-worker network: a master pair at the top, middle
/// managers, and leaf workers, with request channels downward and reply
/// channels upward. Restriction marks keep every simple undirected path
/// guarded at one end, so the topology is non-converging.
pub fn master_worker() -> Rqcp {
    let mut b = SystemBuilder::new();
    let p: Vec<_> = (0..8).map(|i| b.process(&format!("n{i}"))).collect();
    for &pi in &p {
        let z = b.state(pi, "idle");
        b.init(pi, z);
    }
    // downward requests; (src restricted?, dst restricted?) per channel
    let down: [(usize, usize, bool, bool); 8] = [
        (1, 3, false, true),
        (3, 6, false, true),
        (3, 7, true, true),
        (0, 2, false, true),
        (1, 0, false, true),
        (2, 4, false, true),
        (2, 5, true, true),
        (4, 5, true, true),
    ];
    // upward replies
    let up: [(usize, usize, bool, bool); 8] = [
        (3, 1, true, false),
        (6, 3, true, false),
        (7, 3, true, true),
        (2, 0, true, true),
        (0, 1, false, true),
        (4, 2, true, false),
        (5, 2, true, false),
        (5, 4, true, true),
    ];
    for (k, &(s, d, rs, rd)) in down.iter().chain(up.iter()).enumerate() {
        let c = b.channel(&format!("c{k}"), p[s], p[d]);
        if rs {
            b.restrict(p[s], c);
        }
        if rd {
            b.restrict(p[d], c);
        }
    }
    b.message("m");
    b.build()
}

/// A finite four-process probe of the mutex discipline. Process `a` opens a
/// round by announcing on `req` and waits for the acknowledgement on `ack`
/// while streaming work to the two sinks; process `b` may answer on `ack`
/// before consuming the announcement. The antiparallel `req`/`ack` pair
/// forms an undirected two-cycle, and the run where both announcements are
/// in flight puts both cycle channels in the nonempty set at once — the
/// system is not mutex.
pub fn mutex_probe() -> Rqcp {
    let mut b = SystemBuilder::new();
    let pa = b.process("a");
    let pb = b.process("b");
    let s0 = b.process("sink0");
    let s1 = b.process("sink1");
    let req = b.channel("req", pa, pb);
    let ack = b.channel("ack", pb, pa);
    let out0 = b.channel("out0", pa, s0);
    let out1 = b.channel("out1", pa, s1);
    let _ = (out0, out1);
    let tok = b.message("tok");
    let w0 = b.message("w0");
    let w1 = b.message("w1");

    let z0 = b.state(pa, "z0");
    let z1 = b.state(pa, "z1");
    let z2 = b.state(pa, "z2");
    let k0 = b.state(pa, "k0");
    let k1 = b.state(pa, "k1");
    let k2 = b.state(pa, "k2");
    b.init(pa, z0);
    b.transition(pa, z0, Action::Send { channel: req, message: tok }, z1);
    b.transition(pa, z0, Action::Local(0), k0);
    b.transition(pa, z1, Action::Send { channel: out0, message: w0 }, z1);
    b.transition(pa, z1, Action::Send { channel: out1, message: w1 }, z1);
    b.transition(pa, z1, Action::Recv { channel: ack, message: tok }, z2);
    b.transition(pa, k0, Action::Send { channel: out0, message: w0 }, k1);
    b.transition(pa, k1, Action::Send { channel: out1, message: w1 }, k2);
    b.transition(pa, k2, Action::Local(1), z2);

    let y0 = b.state(pb, "y0");
    let y1 = b.state(pb, "y1");
    let y2 = b.state(pb, "y2");
    b.init(pb, y0);
    b.transition(pb, y0, Action::Send { channel: ack, message: tok }, y1);
    b.transition(pb, y0, Action::Local(0), y2);
    b.transition(pb, y1, Action::Recv { channel: req, message: tok }, y2);

    for sink in [s0, s1] {
        let z = b.state(sink, "idle");
        b.init(sink, z);
    }
    b.build()
}

/// One sender, one receiver, one channel restricted at both ends; the
/// smallest system with a complete communication.
pub fn handshake() -> Rqcp {
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
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_system;
    use crate::topology::{is_converging, is_polyforest};

    #[test]
    fn fixtures_validate() {
        for sys in [star(2), star(3), double_ring(), master_worker(), mutex_probe(), handshake()]
        {
            assert!(validate_system(&sys).is_empty());
        }
    }

    #[test]
    fn stars_and_rings_are_nonconverging() {
        assert!(is_converging(&star(2).topology).is_none());
        assert!(is_converging(&star(3).topology).is_none());
        assert!(is_converging(&double_ring().topology).is_none());
        assert!(is_converging(&master_worker().topology).is_none());
    }

    #[test]
    fn star_is_a_polyforest_and_rings_are_not() {
        assert!(is_polyforest(&star(3).topology));
        assert!(!is_polyforest(&double_ring().topology));
        assert!(!is_polyforest(&mutex_probe().topology));
    }

    #[test]
    fn probe_is_not_mutex() {
        let report = crate::mutex::check_mutex(&mutex_probe(), false).unwrap();
        assert!(matches!(report.verdict, crate::mutex::MutexVerdict::NotMutex(_)));
    }
}
