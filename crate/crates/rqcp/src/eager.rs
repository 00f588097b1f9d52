//! Eager reachability: exact control-state reachability along eager runs.
//!
//! An eager run performs every receive immediately after its matching send,
//! so communication degenerates to rendezvous on empty channels plus sends
//! whose channel grows forever. Over *non-converging* typed topologies this
//! is decidable by simulating all eager, well-bracketed runs with a single
//! product pushdown:
//!
//! * the shared stack interleaves all processes' stacks; each process's
//!   bottommost symbol is tagged, so membership of the empty-stack set `E`
//!   is tracked exactly in finite control;
//! * the control records which process is active, every local control
//!   state, `E`, and the set `G` of channels that have absorbed an
//!   unmatched send (no receive on them can ever follow);
//! * rendezvous steps execute both endpoints at once, checking both
//!   empty-stack guards against `E`; unmatched sends only add to `G`;
//! * control may switch to a process `q` when `q ∈ E` or after a peek
//!   gadget confirms the global top symbol belongs to `q`;
//! * from its target state each process may enter a drain that pops its own
//!   symbols and ends done; acceptance is every process done.
//!
//! Restricting to well-bracketed runs loses nothing: every eager run that
//! (after draining) is well-formed is order-equivalent to an eager
//! well-bracketed one, and order-equivalent runs reach the same
//! configurations.
//!
//! For finite systems the module also offers a direct exact exploration
//! over (control vector, nonempty-channel set) abstractions.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::model::{
    Action, ChannelId, ProcessId, PushdownProcess, Rqcp, StateId, SymbolId, Violation,
};
use crate::pushdown::control_reachable;
use crate::topology::is_converging;

/// Where a single process stands inside the product control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalControl {
    /// Still simulating its transition system.
    At(StateId),
    /// Has committed to the target and is popping its remaining symbols.
    Draining,
    /// Passed through its target component with an empty stack.
    Done,
}

/// The per-process data shared by every product control state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Core {
    pub control: Vec<LocalControl>,
    /// Bitmask of processes whose stack is empty.
    pub empty: u32,
    /// Bitmask of channels that have absorbed an unmatched send.
    pub growing: u32,
}

/// Control states of the product pushdown.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProductControl {
    Start,
    /// `active` moves; the rest are frozen.
    Active { active: ProcessId, core: Core },
    /// Peek gadget: popped `symbol` (owned by `target`), about to push it
    /// back and hand control to `target`.
    Peeking { target: ProcessId, symbol: usize, core: Core },
    Accept,
}

/// The constructed product pushdown plus bookkeeping for inspection.
#[derive(Debug, Clone)]
pub struct Product {
    /// Single pushdown with only local and stack actions.
    pub pushdown: PushdownProcess,
    pub start: StateId,
    pub accept: StateId,
    /// Materialized control states, indexed by `StateId`.
    pub controls: Vec<ProductControl>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EagerError {
    #[error("system does not validate: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("typed topology is converging: {0}")]
    Converging(String),
    #[error("target vector has {got} entries for {expected} processes")]
    TargetLength { expected: usize, got: usize },
    #[error("target state {state} out of range for process {process}")]
    TargetState { process: usize, state: usize },
    #[error("at most 32 processes and 32 channels are supported")]
    TooLarge,
}

fn check_target(sys: &Rqcp, target: &[StateId]) -> Result<(), EagerError> {
    if target.len() != sys.process_count() {
        return Err(EagerError::TargetLength { expected: sys.process_count(), got: target.len() });
    }
    for (p, &z) in target.iter().enumerate() {
        if z.0 >= sys.pushdowns[p].state_count() {
            return Err(EagerError::TargetState { process: p, state: z.0 });
        }
    }
    Ok(())
}

/// Rejects invalid or converging inputs; returns the convergence witness
/// path rendered with process and channel names.
fn check_system(sys: &Rqcp) -> Result<(), EagerError> {
    let violations = crate::model::validate_system(sys);
    if !violations.is_empty() {
        return Err(EagerError::Invalid(violations));
    }
    if sys.process_count() > 32 || sys.topology.channel_count() > 32 {
        return Err(EagerError::TooLarge);
    }
    if let Some(path) = is_converging(&sys.topology) {
        return Err(EagerError::Converging(path.display(&sys.topology).to_string()));
    }
    Ok(())
}

/// Stack symbol numbering of the product: each original symbol owns a plain
/// and a bottom-tagged variant.
struct SymbolTable {
    base: Vec<usize>,
    names: Vec<String>,
    /// (process, original symbol, bottom?) per product symbol index.
    decode: Vec<(ProcessId, SymbolId, bool)>,
}

impl SymbolTable {
    fn build(sys: &Rqcp) -> SymbolTable {
        let mut base = Vec::with_capacity(sys.process_count());
        let mut names = Vec::new();
        let mut decode = Vec::new();
        for (p, pd) in sys.pushdowns.iter().enumerate() {
            base.push(names.len());
            for (s, sym) in pd.stack_alphabet.iter().enumerate() {
                names.push(format!("{}.{}", sys.process_name(ProcessId(p)), sym));
                decode.push((ProcessId(p), SymbolId(s), false));
                names.push(format!("{}.{}@bottom", sys.process_name(ProcessId(p)), sym));
                decode.push((ProcessId(p), SymbolId(s), true));
            }
        }
        SymbolTable { base, names, decode }
    }

    fn encode(&self, p: ProcessId, s: SymbolId, bottom: bool) -> usize {
        self.base[p.0] + 2 * s.0 + usize::from(bottom)
    }

    fn owned_by(&self, p: ProcessId) -> std::ops::Range<usize> {
        let lo = self.base[p.0];
        let hi = self.base.get(p.0 + 1).copied().unwrap_or(self.decode.len());
        lo..hi
    }
}

/// Upper bound on the number of product control states, used as a sanity
/// assertion: |P| · ∏|Z^p| · 2^|P| · 2^|C| · (1 + |⋃Γ^p|) · 3^(|P|+1).
/// The `3^(|P|+1)` constant absorbs the drain/done variants of each local
/// control (|Z^p| + 2 ≤ 3|Z^p|) and the start/accept states.
pub fn product_size_bound(sys: &Rqcp) -> u128 {
    let p = sys.process_count() as u32;
    let c = sys.topology.channel_count() as u32;
    let gamma: usize = sys.pushdowns.iter().map(|pd| pd.stack_alphabet.len()).sum();
    let mut bound: u128 = sys.process_count().max(1) as u128;
    for pd in &sys.pushdowns {
        bound = bound.saturating_mul(pd.state_count().max(1) as u128);
    }
    bound = bound.saturating_mul(1u128 << p.min(126));
    bound = bound.saturating_mul(1u128 << c.min(126));
    bound = bound.saturating_mul(1 + gamma as u128);
    bound.saturating_mul(3u128.saturating_pow(p + 1))
}

/// Builds the product pushdown simulating the eager, well-bracketed runs of
/// the system, with a distinguished accept state reachable iff the target
/// control vector is eager-reachable.
pub fn build_product(sys: &Rqcp, target: &[StateId]) -> Result<Product, EagerError> {
    check_system(sys)?;
    check_target(sys, target)?;
    let n = sys.process_count();
    let symbols = SymbolTable::build(sys);
    let all_empty: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };

    let mut controls: Vec<ProductControl> = Vec::new();
    let mut ids: HashMap<ProductControl, StateId> = HashMap::new();
    let mut transitions: Vec<(StateId, Action, StateId)> = Vec::new();
    let mut queue: VecDeque<StateId> = VecDeque::new();

    let mut intern = |ctrl: ProductControl,
                      controls: &mut Vec<ProductControl>,
                      queue: &mut VecDeque<StateId>|
     -> StateId {
        if let Some(&id) = ids.get(&ctrl) {
            return id;
        }
        let id = StateId(controls.len());
        controls.push(ctrl.clone());
        ids.insert(ctrl, id);
        queue.push_back(id);
        id
    };

    let start = intern(ProductControl::Start, &mut controls, &mut queue);
    let accept = intern(ProductControl::Accept, &mut controls, &mut queue);

    while let Some(id) = queue.pop_front() {
        let ctrl = controls[id.0].clone();
        match ctrl {
            ProductControl::Start => {
                let core = Core {
                    control: sys.pushdowns.iter().map(|pd| LocalControl::At(pd.init)).collect(),
                    empty: all_empty,
                    growing: 0,
                };
                for r in 0..n {
                    let to = intern(
                        ProductControl::Active { active: ProcessId(r), core: core.clone() },
                        &mut controls,
                        &mut queue,
                    );
                    transitions.push((id, Action::Local(0), to));
                }
            }
            ProductControl::Accept => {}
            ProductControl::Peeking { target: q, symbol, core } => {
                let to = intern(
                    ProductControl::Active { active: q, core },
                    &mut controls,
                    &mut queue,
                );
                transitions.push((id, Action::Push(SymbolId(symbol)), to));
            }
            ProductControl::Active { active: p, core } => {
                let pbit = 1u32 << p.0;
                // moves of the active process
                match core.control[p.0] {
                    LocalControl::At(z) => {
                        let pd = sys.pushdown(p);
                        for &(from, ref action, to_state) in pd.from(z) {
                            debug_assert_eq!(from, z);
                            let guarded = pd.is_eps(action);
                            if guarded && core.empty & pbit == 0 {
                                continue;
                            }
                            match *action {
                                Action::Local(_) => {
                                    let mut core2 = core.clone();
                                    core2.control[p.0] = LocalControl::At(to_state);
                                    let to = intern(
                                        ProductControl::Active { active: p, core: core2 },
                                        &mut controls,
                                        &mut queue,
                                    );
                                    transitions.push((id, Action::Local(0), to));
                                }
                                Action::Push(s) => {
                                    let bottom = core.empty & pbit != 0;
                                    let mut core2 = core.clone();
                                    core2.control[p.0] = LocalControl::At(to_state);
                                    core2.empty &= !pbit;
                                    let to = intern(
                                        ProductControl::Active { active: p, core: core2 },
                                        &mut controls,
                                        &mut queue,
                                    );
                                    transitions.push((
                                        id,
                                        Action::Push(SymbolId(symbols.encode(p, s, bottom))),
                                        to,
                                    ));
                                }
                                Action::Pop(s) => {
                                    // plain pop keeps the stack owned below
                                    let mut core2 = core.clone();
                                    core2.control[p.0] = LocalControl::At(to_state);
                                    let to = intern(
                                        ProductControl::Active { active: p, core: core2.clone() },
                                        &mut controls,
                                        &mut queue,
                                    );
                                    transitions.push((
                                        id,
                                        Action::Pop(SymbolId(symbols.encode(p, s, false))),
                                        to,
                                    ));
                                    // bottom-tagged pop re-enters E
                                    core2.empty |= pbit;
                                    let to = intern(
                                        ProductControl::Active { active: p, core: core2 },
                                        &mut controls,
                                        &mut queue,
                                    );
                                    transitions.push((
                                        id,
                                        Action::Pop(SymbolId(symbols.encode(p, s, true))),
                                        to,
                                    ));
                                }
                                Action::Send { channel: c, message: m } => {
                                    let cbit = 1u32 << c.0;
                                    // unmatched send: the channel grows forever
                                    let mut core2 = core.clone();
                                    core2.control[p.0] = LocalControl::At(to_state);
                                    core2.growing |= cbit;
                                    let to = intern(
                                        ProductControl::Active { active: p, core: core2 },
                                        &mut controls,
                                        &mut queue,
                                    );
                                    transitions.push((id, Action::Local(0), to));
                                    // rendezvous with the receiver
                                    if core.growing & cbit == 0 {
                                        let q = sys.topology.channel(c).dst;
                                        if let LocalControl::At(y) = core.control[q.0] {
                                            let qd = sys.pushdown(q);
                                            for &(_, ref ra, y2) in qd.from(y) {
                                                if *ra
                                                    != (Action::Recv { channel: c, message: m })
                                                {
                                                    continue;
                                                }
                                                if qd.is_eps(ra) && core.empty & (1 << q.0) == 0 {
                                                    continue;
                                                }
                                                let mut core2 = core.clone();
                                                core2.control[p.0] = LocalControl::At(to_state);
                                                core2.control[q.0] = LocalControl::At(y2);
                                                let to = intern(
                                                    ProductControl::Active {
                                                        active: p,
                                                        core: core2,
                                                    },
                                                    &mut controls,
                                                    &mut queue,
                                                );
                                                transitions.push((id, Action::Local(0), to));
                                            }
                                        }
                                    }
                                }
                                Action::Recv { channel: c, message: m } => {
                                    // rendezvous with the active process as
                                    // receiver: the frozen sender fires too
                                    let cbit = 1u32 << c.0;
                                    if core.growing & cbit != 0 {
                                        continue;
                                    }
                                    let q = sys.topology.channel(c).src;
                                    let LocalControl::At(x) = core.control[q.0] else { continue };
                                    let qd = sys.pushdown(q);
                                    for &(_, ref sa, x2) in qd.from(x) {
                                        if *sa != (Action::Send { channel: c, message: m }) {
                                            continue;
                                        }
                                        if qd.is_eps(sa) && core.empty & (1 << q.0) == 0 {
                                            continue;
                                        }
                                        let mut core2 = core.clone();
                                        core2.control[p.0] = LocalControl::At(to_state);
                                        core2.control[q.0] = LocalControl::At(x2);
                                        let to = intern(
                                            ProductControl::Active { active: p, core: core2 },
                                            &mut controls,
                                            &mut queue,
                                        );
                                        transitions.push((id, Action::Local(0), to));
                                    }
                                }
                            }
                        }
                        // entering the drain at the target component
                        if z == target[p.0] {
                            let mut core2 = core.clone();
                            core2.control[p.0] = LocalControl::Draining;
                            let to = intern(
                                ProductControl::Active { active: p, core: core2 },
                                &mut controls,
                                &mut queue,
                            );
                            transitions.push((id, Action::Local(0), to));
                        }
                    }
                    LocalControl::Draining => {
                        if core.empty & pbit != 0 {
                            let mut core2 = core.clone();
                            core2.control[p.0] = LocalControl::Done;
                            let to = intern(
                                ProductControl::Active { active: p, core: core2 },
                                &mut controls,
                                &mut queue,
                            );
                            transitions.push((id, Action::Local(0), to));
                        } else {
                            for s in 0..sys.pushdown(p).stack_alphabet.len() {
                                let mut core2 = core.clone();
                                let to = intern(
                                    ProductControl::Active { active: p, core: core2.clone() },
                                    &mut controls,
                                    &mut queue,
                                );
                                transitions.push((
                                    id,
                                    Action::Pop(SymbolId(symbols.encode(p, SymbolId(s), false))),
                                    to,
                                ));
                                core2.control[p.0] = LocalControl::Done;
                                core2.empty |= pbit;
                                let to = intern(
                                    ProductControl::Active { active: p, core: core2 },
                                    &mut controls,
                                    &mut queue,
                                );
                                transitions.push((
                                    id,
                                    Action::Pop(SymbolId(symbols.encode(p, SymbolId(s), true))),
                                    to,
                                ));
                            }
                        }
                    }
                    LocalControl::Done => {}
                }
                // switching the active process
                for q in 0..n {
                    if q == p.0 {
                        continue;
                    }
                    if core.empty & (1 << q) != 0 {
                        let to = intern(
                            ProductControl::Active { active: ProcessId(q), core: core.clone() },
                            &mut controls,
                            &mut queue,
                        );
                        transitions.push((id, Action::Local(0), to));
                    } else {
                        // peek: the switch succeeds iff the global top
                        // symbol belongs to q
                        for sym in symbols.owned_by(ProcessId(q)) {
                            let to = intern(
                                ProductControl::Peeking {
                                    target: ProcessId(q),
                                    symbol: sym,
                                    core: core.clone(),
                                },
                                &mut controls,
                                &mut queue,
                            );
                            transitions.push((id, Action::Pop(SymbolId(sym)), to));
                        }
                    }
                }
                // acceptance
                if core.control.iter().all(|lc| *lc == LocalControl::Done) {
                    transitions.push((id, Action::Local(0), accept));
                }
            }
        }
    }

    let bound = product_size_bound(sys);
    assert!(
        (controls.len() as u128) <= bound,
        "product control count {} exceeds the size bound {}",
        controls.len(),
        bound,
    );

    let pushdown = PushdownProcess {
        states: controls.iter().map(|c| format!("{c:?}")).collect(),
        init: start,
        stack_alphabet: symbols.names.clone(),
        transitions,
        eps_actions: BTreeSet::new(),
    };
    Ok(Product { pushdown, start, accept, controls })
}

/// True iff some configuration with the target control vector (any stacks,
/// any channels) is reachable by an eager run.
pub fn eager_state_reach(sys: &Rqcp, target: &[StateId]) -> Result<bool, EagerError> {
    if sys.process_count() == 0 {
        return Ok(target.is_empty());
    }
    let product = build_product(sys, target)?;
    let reachable = control_reachable(&product.pushdown, product.start)
        .expect("product has no communication actions");
    Ok(reachable.contains(&product.accept))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FiniteInputError {
    #[error("process {0} has a stack alphabet; use the product construction")]
    NotFinite(usize),
}

/// Successors of an abstract configuration (control vector, nonempty
/// channels) of a finite system along eager runs: local moves, rendezvous
/// on channels outside the set, and unmatched sends adding their channel.
pub fn finite_eager_successors(
    sys: &Rqcp,
    control: &[StateId],
    nonempty: &BTreeSet<ChannelId>,
) -> Vec<(Vec<StateId>, BTreeSet<ChannelId>)> {
    let mut out = Vec::new();
    for (p, pd) in sys.pushdowns.iter().enumerate() {
        for &(_, ref action, to) in pd.from(control[p]) {
            match *action {
                Action::Local(_) => {
                    let mut control2 = control.to_vec();
                    control2[p] = to;
                    out.push((control2, nonempty.clone()));
                }
                Action::Send { channel: c, message: m } => {
                    let mut control2 = control.to_vec();
                    control2[p] = to;
                    let mut grown = nonempty.clone();
                    grown.insert(c);
                    out.push((control2.clone(), grown));
                    if !nonempty.contains(&c) {
                        let q = sys.topology.channel(c).dst;
                        for &(_, ref ra, y2) in sys.pushdowns[q.0].from(control[q.0]) {
                            if *ra == (Action::Recv { channel: c, message: m }) {
                                let mut both = control2.clone();
                                both[q.0] = y2;
                                out.push((both, nonempty.clone()));
                            }
                        }
                    }
                }
                // receives fire only inside rendezvous; stack actions are
                // absent from finite systems
                _ => {}
            }
        }
    }
    out
}

/// All control vectors of a finite system reachable by eager runs, by exact
/// exploration of the (vector, nonempty set) abstraction.
pub fn finite_eager_vectors(sys: &Rqcp) -> Result<BTreeSet<Vec<StateId>>, FiniteInputError> {
    if let Some(p) = sys.pushdowns.iter().position(|pd| !pd.stack_alphabet.is_empty()) {
        return Err(FiniteInputError::NotFinite(p));
    }
    let init: (Vec<StateId>, BTreeSet<ChannelId>) =
        (sys.pushdowns.iter().map(|pd| pd.init).collect(), BTreeSet::new());
    let mut seen: BTreeSet<(Vec<StateId>, BTreeSet<ChannelId>)> = [init.clone()].into();
    let mut queue = VecDeque::from([init]);
    let mut vectors = BTreeSet::new();
    while let Some((control, nonempty)) = queue.pop_front() {
        vectors.insert(control.clone());
        for succ in finite_eager_successors(sys, &control, &nonempty) {
            if seen.insert(succ.clone()) {
                queue.push_back(succ);
            }
        }
    }
    Ok(vectors)
}

/// True iff the target control vector is eager-reachable in a finite system.
pub fn finite_eager_reach(sys: &Rqcp, target: &[StateId]) -> Result<bool, FiniteInputError> {
    Ok(finite_eager_vectors(sys)?.contains(&target.to_vec()))
}
