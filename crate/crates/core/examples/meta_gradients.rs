//! Compares first- and second-order meta-gradients with central finite
//! differences of the meta objective on a tiny model.
//!
//! cargo run --release --example meta_gradients

use lrm_functa::meta::{meta_objective, outer_gradients, MetaOrder, TrainConfig};
use lrm_functa::numerics::{finite_diff_grad, relative_error, SeededRng};
use lrm_functa::video::Video;
use lrm_functa::Checkpoint;

fn main() -> lrm_functa::Result<()> {
    let data = SeededRng::new(1).uniform_vec(2 * 4 * 4, 0.0, 1.0);
    let video = Video::new(2, 4, 4, data)?;
    let batch = [&video];
    for order in [MetaOrder::First, MetaOrder::Second] {
        let cfg = TrainConfig {
            hidden_width: 6,
            hidden_layers: 2,
            omega0: 3.0,
            modulation_dim: 4,
            inner_steps: 2,
            inner_lr: 0.3,
            coord_subsample: 8,
            lambda_ortho: 0.5,
            meta_order: order,
            ..TrainConfig::default()
        };
        let model = Checkpoint::initialize(&cfg)?;
        let grads = outer_gradients(&model.backbone, &model.subspace, &batch, &cfg, 0)?;
        let mut probe = model.backbone.clone();
        let fd = finite_diff_grad(
            |x| {
                probe.params_mut().set_values(x).unwrap();
                meta_objective(&probe, &model.subspace, &batch, &cfg, 0).unwrap()
            },
            model.backbone.params().values(),
            1e-5,
        )?;
        println!(
            "{order:?}-order backbone gradient vs finite differences: relative error {:.2e}",
            relative_error(&grads.theta, &fd)
        );
    }
    println!("first order drops the curvature of the inner loop, so only second order matches");
    Ok(())
}
