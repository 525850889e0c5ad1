//! Rank-k modulation subspace: `m_t = v + Bᵀ φ_t` with `B ∈ R^{k×q}`.

mod codes;
mod subspace;

pub use codes::{compose_modulation, read_latents, write_latents, LatentCodes};
pub use subspace::{init_subspace, ortho_penalty, InitMode, OrthoPenalty, Subspace};
