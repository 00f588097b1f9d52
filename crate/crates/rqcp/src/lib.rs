//! Reachability analysis for systems of recursive processes communicating
//! asynchronously over point-to-point FIFO channels.
//!
//! A system ([`model::Rqcp`]) is a set of pushdown processes wired together
//! by a typed topology: directed channels between distinct processes, where
//! each endpoint may be *restricted*, meaning the process uses it only while
//! its stack is empty. This crate provides:
//!
//! * system construction, validation, and a JSON interchange format
//!   ([`model`], [`format`]);
//! * structural topology analysis — convergence (the decidability frontier),
//!   polyforests, cycle enumeration, co-cyclicity ([`topology`]);
//! * exact control-state reachability along *eager* runs, where every
//!   receive immediately follows its matching send ([`eager`]), built on a
//!   saturation-based engine for single pushdown processes ([`pushdown`]);
//! * the *mutex* property — at most one nonempty channel per cycle — which
//!   guarantees eager runs suffice, plus a constructive reordering of mutex
//!   runs into eager ones ([`mutex`], [`bruteforce`]);
//! * under-approximate reachability through bounded context switching:
//!   runs split into phases that each multiplex sends onto one channel or
//!   demultiplex receives from one channel ([`bounded`]);
//! * bounded-exploration oracles used to cross-check every analysis
//!   ([`bruteforce`]), seeded random instance generators ([`gen`]), and
//!   ready-made example systems ([`fixtures`]).
//!
//! The `rqcp` binary exposes the analyses as subcommands over JSON system
//! files; [`cli`] hosts its implementation so integration tests can call it
//! in-process.

pub mod bounded;
pub mod bruteforce;
pub mod cli;
pub mod eager;
pub mod fixtures;
pub mod format;
pub mod gen;
pub mod model;
pub mod mutex;
pub mod pushdown;
pub mod runs;
pub mod topology;

pub use model::{Action, Channel, ChannelId, MessageId, ProcessId, PushdownProcess, Rqcp, StateId, SymbolId, SystemBuilder, TypedTopology};
pub use runs::{Configuration, Run, Step};
