//! Dense linear algebra, parameter storage, optimizers and gradient checking.

pub mod dual;
pub mod gradcheck;
pub mod matrix;
pub mod optim;
pub mod params;
pub mod pca;
pub mod rng;

pub use dual::{Dual, Real};
pub use gradcheck::{finite_diff_grad, finite_diff_grad_store, relative_error};
pub use matrix::Matrix;
pub use optim::{adam_step, sgd_step, AdamState};
pub use params::{ParamSlice, ParamStore};
pub use pca::{pca_first_component, principal_axis};
pub use rng::SeededRng;
