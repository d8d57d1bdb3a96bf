//! Staircase constructions of group topologies with exact certificates.
//!
//! For a finitely generated residually finite group `G`, a tower of finite
//! quotients `G / H_n` with nested kernels carries staircase functions
//! `φ_n`. Their running minimum converges to a point `ξ ∈ [0,1]^G` whose orbit
//! closure induces a Hausdorff, non-discrete, non-precompact group topology.
//! Every step is checked in exact rational arithmetic and recorded in a
//! replayable certificate.
//!
//! The guide in `book/` walks through the pieces; its code blocks run as
//! doc tests of this crate.

pub mod certificate;
pub mod construction;
pub mod dynamics;
pub mod error;
pub mod group;
pub mod quotient;
pub mod rational;
pub mod staircase;
pub mod topology;

pub use construction::{Construction, Policy, Profile, StepRule};
pub use error::{Error, Result};
pub use group::{GroupElement, GroupKind, GroupSpec};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/groups.md")]
    mod groups {}
    #[doc = include_str!("../../../book/src/staircases.md")]
    mod staircases {}
    #[doc = include_str!("../../../book/src/construction.md")]
    mod construction {}
    #[doc = include_str!("../../../book/src/topology.md")]
    mod topology {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
