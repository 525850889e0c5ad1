//! Shared coordinate network `M_θ`.

mod backbone;
mod coords;

pub use backbone::{BackboneConfig, BackboneGrads, SharedBackbone, IN_DIM, OUT_DIM};
pub use coords::CoordGrid;

#[cfg(test)]
mod tests;
