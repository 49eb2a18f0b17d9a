//! Permutation arrays under the Kendall tau metric.
//!
//! Tools for constructing, searching for, and certifying sets of permutations
//! with a guaranteed minimum pairwise Kendall tau distance: exact distance
//! computation with a BFS oracle, pairwise certification, affine automorphism
//! orbit expansion over `Z_n` and small Galois fields, randomized greedy and
//! exact clique searches, constructive lower-bound theorems, and a bounds
//! database with a derivation-rule composer.

pub mod algebra;
pub mod bounds;
pub mod constructions;
pub mod error;
pub mod io;
pub mod perm;
pub mod search;
pub mod verifier;

pub use error::Error;
pub use perm::{kendall_distance, Parity, Permutation};
pub use verifier::{certify, min_pairwise_distance, CertReport, PermArray};
