//! Phase sequences and the one-step reduction that powers phase-bounded
//! reachability.
//!
//! An md-sequence fixes, for each of `k` phases, which process runs and
//! which communication pattern (multiplex into one channel / demultiplex
//! from one channel / local-only) it follows. The sequence is *satisfiable*
//! when the phases can execute in order from empty stacks and channels back
//! to empty stacks and channels. Deciding satisfiability works by
//! repeatedly reducing the last communicating demultiplex phase into the
//! earlier phases — fusing matched send/receive pairs into fresh local
//! steps and summarizing stack excursions — until only local phases remain,
//! which a plain pushdown emptiness check decides.
//!
//! Run with: `cargo run --example md_sequence_reduction`

use std::collections::BTreeSet;

use rqcp::bounded::{
    check_md_satisfiability, md_satisfiable_oracle, reduce_md_sequence, MdSequence, Phase,
    PhaseKind, SatVerdict,
};
use rqcp::bruteforce::Bounds;
use rqcp::fixtures;
use rqcp::model::{Action, ChannelId, MessageId, ProcessId, PushdownProcess, StateId};

fn main() {
    // Reuse the handshake's topology: one channel c from p to q, restricted
    // at both ends, one message m.
    let base = fixtures::handshake();
    let (p, q) = (ProcessId(0), ProcessId(1));
    let c = ChannelId(0);
    let m = MessageId(0);
    let send = Action::Send { channel: c, message: m };
    let recv = Action::Recv { channel: c, message: m };

    let send_phase = Phase {
        process: p,
        pushdown: PushdownProcess {
            states: vec!["z0".into(), "z1".into()],
            init: StateId(0),
            stack_alphabet: Vec::new(),
            transitions: vec![(StateId(0), send.clone(), StateId(1))],
            eps_actions: BTreeSet::from([send.clone()]),
        },
        final_state: StateId(1),
        kind: PhaseKind::Mux(c),
    };
    let recv_phase = Phase {
        process: q,
        pushdown: PushdownProcess {
            states: vec!["y0".into(), "y1".into()],
            init: StateId(0),
            stack_alphabet: Vec::new(),
            transitions: vec![(StateId(0), recv.clone(), StateId(1))],
            eps_actions: BTreeSet::from([recv.clone()]),
        },
        final_state: StateId(1),
        kind: PhaseKind::Demux(c),
    };

    // Send before receive: satisfiable.
    let good = MdSequence {
        topology: base.topology.clone(),
        messages: base.messages.clone(),
        phases: vec![send_phase.clone(), recv_phase.clone()],
    };
    good.validate().expect("well-formed sequence");
    report("send then receive", &good);

    // Receive before send: the message would arrive from the future.
    let bad = MdSequence {
        topology: base.topology.clone(),
        messages: base.messages.clone(),
        phases: vec![recv_phase, send_phase],
    };
    bad.validate().expect("well-formed sequence");
    report("receive then send", &bad);
}

fn report(label: &str, seq: &MdSequence) {
    let oracle = md_satisfiable_oracle(seq, &Bounds::default());
    let family = reduce_md_sequence(seq).expect("sequence has a communicating phase");
    let size = seq.size();
    let k = seq.phases.len();
    println!("{label}:");
    println!("  bounded-exploration oracle: {oracle:?}");
    println!(
        "  reduction family: {} shorter sequence(s) (bound |Phi|^k = {}), sizes {:?} (each bound 2|Phi|^2 = {})",
        family.len(),
        size.pow(k as u32),
        family.iter().map(MdSequence::size).collect::<Vec<_>>(),
        2 * size * size
    );
    let verdict = check_md_satisfiability(seq, 10_000);
    println!("  solver verdict: {verdict:?}");
    match verdict {
        SatVerdict::Satisfiable => assert_eq!(oracle, Some(true)),
        SatVerdict::Unsatisfiable => assert_eq!(oracle, Some(false)),
        SatVerdict::BudgetExhausted => {}
    }
}
