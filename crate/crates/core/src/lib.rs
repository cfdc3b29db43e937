//! Discrete Morse matchings on graded posets, finite or one-ended periodic:
//! acyclicity and raylessness verdicts, ray enumeration and reversal, the
//! Morse chain complex over the integers, self-indexing Morse function
//! synthesis, and exact homology via Smith normal form.

pub mod admissibility;
pub mod builtins;
pub mod chain;
pub mod error;
pub mod homology;
pub mod incidence;
pub mod io;
pub mod matching;
pub mod morse_function;
pub mod pipeline;
pub mod poset;
pub mod rays;
pub mod report;
pub mod simplicial;
pub mod snf;

pub use error::{Error, Result};
