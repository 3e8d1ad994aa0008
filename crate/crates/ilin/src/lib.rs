//! Interval-sequential specifications of concurrent one-shot problems,
//! tasks as chromatic simplicial complexes, the constructive translations
//! between the two, and checkers deciding whether execution histories
//! satisfy them.
//!
//! The pieces fit together like this:
//!
//! - [`histories`] represents executions (totally ordered invocation and
//!   response events) with their projections and real-time precedence.
//! - [`interval`] is the automaton formalism: concurrency classes, the
//!   transition relation, and acceptance of interval-sequential executions.
//! - [`objects`] holds the concrete built-in objects (validity,
//!   write-snapshot, safe-consensus, ...).
//! - [`task`] has chromatic complexes, carrier maps, and task satisfaction
//!   by prefixes; [`taskfile`] is the on-disk format.
//! - [`bridges`] converts between tasks and objects in both directions.
//! - [`checker`] decides linearizability, set-linearizability, and
//!   interval-linearizability with witnesses, plus the locality
//!   composition and the non-blocking extension search.
//! - [`sim`] deterministically interleaves the double-collect
//!   write-snapshot algorithm to produce histories for the checker.
//! - [`batch`] fans independent checks out across threads (rayon, behind
//!   the default `parallel` feature).

pub mod batch;
pub mod bridges;
pub mod checker;
pub mod corpus;
pub mod histories;
pub mod interval;
pub mod objects;
pub mod sim;
pub mod table;
pub mod task;
pub mod taskfile;
pub mod value;
