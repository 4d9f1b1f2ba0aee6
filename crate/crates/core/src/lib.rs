//! Classical and quantum Fisher information of parametrized quantum circuits,
//! with the optimizers and estimation bounds built on them.
//!
//! The accompanying book in `book/` explains the concepts; its snippets run as
//! doctests of this crate.

pub mod circuit;
pub mod divergence;
pub mod error;
pub mod fisher;
pub mod linalg;
pub mod metrology;
pub mod optimize;
pub mod rng;
pub mod schema;
pub mod simulator;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/classical-fisher.md")]
    mod classical_fisher {}
    #[doc = include_str!("../../../book/src/quantum-fisher.md")]
    mod quantum_fisher {}
    #[doc = include_str!("../../../book/src/mixed-states.md")]
    mod mixed_states {}
    #[doc = include_str!("../../../book/src/natural-gradient.md")]
    mod natural_gradient {}
    #[doc = include_str!("../../../book/src/metrology.md")]
    mod metrology {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
