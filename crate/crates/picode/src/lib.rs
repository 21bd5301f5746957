//! Coding laboratory for effectively closed classes.
//!
//! A deterministic labelling state machine over the full binary tree encodes
//! any finite binary prefix into a member of a given closed class
//! P = 2^ω − ⟦Q⟧ and decodes it back reading exactly ℓₙ oracle bits, where
//! (ℓᵢ) is any increasing level schedule whose series Σ 2^{i−ℓᵢ} is certified
//! strictly below μ(P). The crate also ships a complete invariant checker for
//! the construction and a bit-by-bit baseline coder for redundancy
//! comparison.

pub mod bits;
pub mod class;
pub mod dyadic;
pub mod labelling;
pub mod schedule;

pub use bits::{lex_compare, BitString};
pub use class::{generate_class, EnumeratedClass};
pub use dyadic::{measure_of, weight_of, Dyadic};
pub use labelling::{EventKind, LabelledTreeState, RunOutcome, Snapshot, StageEvent};
pub use schedule::{validate_schedule, Schedule};
pub mod cli;
pub mod checks;
pub mod codec;
pub mod trace;
pub mod kucera;
