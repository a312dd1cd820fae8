//! Fusion-based error correction on the XZZX cluster state.

pub mod constructions;
pub mod decoder;
pub mod experiments;
pub mod fit;
pub mod graph;
pub mod lattice;
pub mod noise;
pub mod oracle;
pub mod pauli;
pub mod syndrome;
pub mod tableau;
pub mod validation;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/fusions.md")]
    mod fusions {}
    #[doc = include_str!("../../../book/src/layouts.md")]
    mod layouts {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/decoder.md")]
    mod decoder {}
    #[doc = include_str!("../../../book/src/thresholds.md")]
    mod thresholds {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
