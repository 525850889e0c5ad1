//! Meta-learning of the shared backbone and subspace.
//!
//! Each outer iteration adapts fresh (zero) codes to every video of a batch
//! with a few plain gradient steps, evaluates the reconstruction objective at
//! the adapted codes, and applies one Adam step to the backbone and basis.
//! The basis additionally receives `λ_ortho · ∇‖B Bᵀ − I‖_F`.

mod config;
mod objective;
mod train;
mod unrolled;

pub use config::{MetaOrder, TrainConfig};
pub use objective::{frame_losses, reconstruction_loss, CoordPlan};
pub use train::{
    inner_adapt, meta_objective, outer_gradients, outer_step, train, LossReport, OuterGradients, OuterState,
    TrainOutput, Trainer,
};

pub(crate) use objective::evaluate;

use objective::ObjectiveOut;

use crate::lowrank::LatentCodes;
use crate::numerics::matrix::axpy;

/// One plain gradient step on `v` and `Φ`.
pub(crate) fn apply_code_step(codes: &mut LatentCodes, out: &ObjectiveOut, lr: f64) {
    axpy(-lr, &out.grad_v, &mut codes.v);
    axpy(-lr, out.grad_phi.as_slice(), codes.phi.as_mut_slice());
}
