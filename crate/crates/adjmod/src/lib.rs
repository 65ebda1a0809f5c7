//! Proof engine and finite-semantics checker for a positive modal logic
//! whose modalities come in adjoint pairs `<A> -| [A]`.
//!
//! The crate provides:
//!
//! - [`syntax`]: formulas, nested contexts, sequents, parsing and printing;
//! - [`calculus`]: the tree-style sequent rules, a derivation checker and
//!   backward rule enumeration;
//! - [`transform`]: admissible structural rules as total procedures on
//!   derivations (weakening, contraction, inversion, cut elimination);
//! - [`search`]: backward proof search with loop checking, and a
//!   proof-or-countermodel decision driver;
//! - [`semantics`]: finite Kripke structures and finite distributive
//!   lattices with adjoint modality pairs, used as brute-force oracles;
//! - [`hilbert`]: the equivalent Hilbert-style system on `m |- m'` sequents;
//! - [`scenarios`]: assumption-rule encodings of the muddy children puzzle
//!   and its lying-father variant.

pub mod calculus;
pub mod hilbert;
pub mod scenarios;
pub mod search;
pub mod semantics;
pub mod syntax;
pub mod transform;
