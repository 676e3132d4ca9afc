//! A verification and construction kernel for finite fibered multicategories.
//!
//! The kernel represents fibered multicategories — a projection-to-base
//! functor pair `(d, p)` with a distinguished class of "special" squares —
//! extensionally, checks every axiom by exhaustive search, performs
//! contravariant and covariant reindexing, constructs the standard example
//! instances (terminal, ring, sequential, self-indexed finite sets,
//! Grothendieck), and decides algebraic/universal products and stable
//! representability to verify their equivalence on finite instances.

pub mod base;
pub mod cartesian;
pub mod cli;
pub mod core;
pub mod fibration_bridge;
pub mod fincat;
pub mod finset;
pub mod standard;
