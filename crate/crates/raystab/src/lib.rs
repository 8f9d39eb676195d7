//! Membership languages of ray stabilisers in bounded automata groups.
//!
//! The crate computes, for a group generated by finitary and directed tree
//! automorphisms (given as wreath recursions) and an eventually periodic
//! boundary ray `η = a·b^ω`, the language of words that stabilise `η` and its
//! complement, as explicitly constructed unambiguous limiting ET0L grammars.
//! Around that sit the supporting pieces: exact automorphism algebra,
//! finitary/directed classification, decision procedures for stabiliser
//! membership, finite-level Schreier graphs with exact walk counts, truncated
//! power series for the grammar generating functions and Green-function
//! coefficients, and string-transducer closure constructions.
//!
//! All arithmetic is exact (big integers and rationals); every nontrivial
//! pipeline has an independent brute-force oracle next to it, and the
//! `acceptance` integration test cross-validates the routes against each
//! other.
//!
//! The hot inner loops (walk counts, word enumeration, the step-relation
//! sweep) run on rayon when the default `parallel` feature is enabled and
//! fall back to sequential iteration otherwise.

pub mod automaton;
pub mod classify;
pub mod et0l;
mod par;
pub mod schreier;
pub mod series;
pub mod stab;
pub mod transducer;
pub mod tree;
pub mod wp_grammar;

pub use tree::{Alphabet, Automorphism, GeneratingSet, Ray, TreeError, Vertex, Word};
