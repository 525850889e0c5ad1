//! Second-order meta-gradients.
//!
//! The inner loop is `c_{j+1} = c_j − α ∇_c L_j(c_j; θ, B)`. Reverse-mode
//! through it needs, per step, the Hessian of `L_j` applied to the adjoint
//! of the codes. The objective gradient below is written once over a generic
//! scalar; evaluating it with dual numbers whose tangent is the adjoint gives
//! exactly those Hessian-vector products.

use super::objective::{evaluate, CoordPlan};
use crate::inr::{CoordGrid, SharedBackbone};
use crate::lowrank::{LatentCodes, Subspace};
use crate::numerics::{Dual, Real};
use crate::video::Video;

struct Layout {
    width: usize,
    layers: usize,
    omega: f64,
    q: usize,
    weight: Vec<usize>,
    bias: Vec<usize>,
    out_weight: usize,
    out_bias: usize,
    modulation: usize,
}

impl Layout {
    fn of(net: &SharedBackbone) -> Self {
        let cfg = net.config();
        let p = net.params();
        let off = |i: usize| p.slice(i).offset;
        let layers = cfg.hidden_layers;
        Layout {
            width: cfg.hidden_width,
            layers,
            omega: cfg.omega0,
            q: cfg.modulation_dim,
            weight: (0..layers).map(|l| off(2 * l)).collect(),
            bias: (0..layers).map(|l| off(2 * l + 1)).collect(),
            out_weight: off(2 * layers),
            out_bias: off(2 * layers + 1),
            modulation: off(2 * layers + 2),
        }
    }

    fn fan_in(&self, l: usize) -> usize {
        if l == 0 {
            2
        } else {
            self.width
        }
    }
}

pub(crate) struct GenericGrads<S> {
    pub loss: S,
    pub theta: Vec<S>,
    pub basis: Vec<S>,
    pub v: Vec<S>,
    pub phi: Vec<S>,
}

/// Straight-line objective and full gradient over any [`Real`] scalar.
/// `frames[t]` holds that frame's coordinates and targets.
fn objective_generic<S: Real>(
    lay: &Layout,
    theta: &[S],
    basis: &[S],
    v: &[S],
    phi: &[S],
    frames: &[(Vec<[f64; 2]>, Vec<f64>)],
) -> GenericGrads<S> {
    let (w, q) = (lay.width, lay.q);
    let k = basis.len() / q;
    let t_n = frames.len();
    let zero = S::cst(0.0);
    let omega = S::cst(lay.omega);
    let inv_t = S::cst(1.0 / t_n as f64);

    let mut g_theta = vec![zero; theta.len()];
    let mut g_basis = vec![zero; basis.len()];
    let mut g_v = vec![zero; q];
    let mut g_phi = vec![zero; phi.len()];
    let mut loss = zero;

    for (t, (coords, targets)) in frames.iter().enumerate() {
        let mut m = v.to_vec();
        for i in 0..k {
            for j in 0..q {
                m[j] += phi[t * k + i] * basis[i * q + j];
            }
        }
        let mut shift = vec![zero; lay.layers * w];
        for (r, s) in shift.iter_mut().enumerate() {
            for j in 0..q {
                *s += theta[lay.modulation + r * q + j] * m[j];
            }
        }
        let inv_n = S::cst(1.0 / coords.len() as f64);
        let mut g_shift = vec![zero; lay.layers * w];
        let mut frame_loss = zero;
        for (x, &target) in coords.iter().zip(targets) {
            let mut acts: Vec<Vec<S>> = vec![vec![S::cst(x[0]), S::cst(x[1])]];
            let mut slopes: Vec<Vec<S>> = Vec::with_capacity(lay.layers);
            for l in 0..lay.layers {
                let fan_in = lay.fan_in(l);
                let a = &acts[l];
                let mut next = Vec::with_capacity(w);
                let mut slope = Vec::with_capacity(w);
                for u in 0..w {
                    let mut z = theta[lay.bias[l] + u] + shift[l * w + u];
                    for i in 0..fan_in {
                        z += theta[lay.weight[l] + u * fan_in + i] * a[i];
                    }
                    let arg = omega * z;
                    next.push(arg.sin());
                    slope.push(omega * arg.cos());
                }
                acts.push(next);
                slopes.push(slope);
            }
            let top = &acts[lay.layers];
            let mut pred = theta[lay.out_bias];
            for u in 0..w {
                pred += theta[lay.out_weight + u] * top[u];
            }
            let r = pred - S::cst(target);
            frame_loss += r * r;
            let dpred = S::cst(2.0) * r * inv_n;

            for u in 0..w {
                g_theta[lay.out_weight + u] += dpred * top[u];
            }
            g_theta[lay.out_bias] += dpred;
            let mut delta: Vec<S> = (0..w).map(|u| dpred * theta[lay.out_weight + u]).collect();
            for l in (0..lay.layers).rev() {
                let fan_in = lay.fan_in(l);
                for u in 0..w {
                    delta[u] = delta[u] * slopes[l][u];
                    g_theta[lay.bias[l] + u] += delta[u];
                    g_shift[l * w + u] += delta[u];
                    for i in 0..fan_in {
                        g_theta[lay.weight[l] + u * fan_in + i] += delta[u] * acts[l][i];
                    }
                }
                if l > 0 {
                    let mut prev = vec![zero; fan_in];
                    for u in 0..w {
                        for i in 0..fan_in {
                            prev[i] += theta[lay.weight[l] + u * fan_in + i] * delta[u];
                        }
                    }
                    delta = prev;
                }
            }
        }
        loss += frame_loss * inv_n;

        let mut gm = vec![zero; q];
        for (r, &gs) in g_shift.iter().enumerate() {
            for j in 0..q {
                g_theta[lay.modulation + r * q + j] += gs * m[j];
                gm[j] += theta[lay.modulation + r * q + j] * gs;
            }
        }
        for j in 0..q {
            g_v[j] += gm[j];
        }
        for i in 0..k {
            let mut acc = zero;
            for j in 0..q {
                acc += basis[i * q + j] * gm[j];
                g_basis[i * q + j] += phi[t * k + i] * gm[j];
            }
            g_phi[t * k + i] = acc;
        }
    }
    for g in g_theta.iter_mut().chain(&mut g_basis).chain(&mut g_v).chain(&mut g_phi) {
        *g = *g * inv_t;
    }
    GenericGrads {
        loss: loss * inv_t,
        theta: g_theta,
        basis: g_basis,
        v: g_v,
        phi: g_phi,
    }
}

fn frame_table(plan: &CoordPlan, grid: &CoordGrid, video: &Video) -> Vec<(Vec<[f64; 2]>, Vec<f64>)> {
    (0..video.frames()).map(|t| plan.frame_data(grid, video, t)).collect()
}

/// Reconstruction objective and gradient through the generic path with
/// plain `f64`; used to cross-check the batched implementation.
#[cfg(test)]
pub(crate) fn generic_objective_f64(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    codes: &LatentCodes,
    video: &Video,
    plan: &CoordPlan,
) -> GenericGrads<f64> {
    let grid = CoordGrid::full(video.height(), video.width());
    objective_generic(
        &Layout::of(backbone),
        backbone.params().values(),
        subspace.basis(),
        &codes.v,
        codes.phi.as_slice(),
        &frame_table(plan, &grid, video),
    )
}

/// Result of differentiating through the unrolled inner loop.
pub(crate) struct SecondOrder {
    pub loss: f64,
    pub grad_theta: Vec<f64>,
    pub grad_basis: Vec<f64>,
}

/// Outer loss at the adapted codes and its exact gradient with respect to
/// the backbone and basis, including the dependence of the codes on them.
pub(crate) fn second_order_grads(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    video: &Video,
    inner_plans: &[CoordPlan],
    outer_plan: &CoordPlan,
    inner_lr: f64,
) -> SecondOrder {
    let grid = CoordGrid::full(video.height(), video.width());
    let (q, k, t_n) = (subspace.dim(), subspace.rank(), video.frames());

    let mut history = Vec::with_capacity(inner_plans.len());
    let mut codes = LatentCodes::zeros(q, k, t_n);
    for plan in inner_plans {
        let out = evaluate(backbone, subspace, &codes, video, &grid, plan, false);
        history.push(codes.clone());
        super::apply_code_step(&mut codes, &out, inner_lr);
    }

    let outer = evaluate(backbone, subspace, &codes, video, &grid, outer_plan, true);
    let mut grad_theta = outer.grad_theta.expect("shared gradients requested");
    let mut grad_basis = outer.grad_basis.expect("shared gradients requested");
    let mut adj_v = outer.grad_v;
    let mut adj_phi = outer.grad_phi.into_vec();

    let lay = Layout::of(backbone);
    let theta: Vec<Dual> = backbone.params().values().iter().map(|&x| Dual::cst(x)).collect();
    let basis: Vec<Dual> = subspace.basis().iter().map(|&x| Dual::cst(x)).collect();
    for (plan, c) in inner_plans.iter().zip(&history).rev() {
        let v: Vec<Dual> = c.v.iter().zip(&adj_v).map(|(&x, &d)| Dual::new(x, d)).collect();
        let phi: Vec<Dual> = c
            .phi
            .as_slice()
            .iter()
            .zip(&adj_phi)
            .map(|(&x, &d)| Dual::new(x, d))
            .collect();
        let hvp = objective_generic(&lay, &theta, &basis, &v, &phi, &frame_table(plan, &grid, video));
        debug_assert!(hvp.loss.value().is_finite());
        for (g, h) in grad_theta.iter_mut().zip(&hvp.theta) {
            *g -= inner_lr * h.eps;
        }
        for (g, h) in grad_basis.iter_mut().zip(&hvp.basis) {
            *g -= inner_lr * h.eps;
        }
        for (a, h) in adj_v.iter_mut().zip(&hvp.v) {
            *a -= inner_lr * h.eps;
        }
        for (a, h) in adj_phi.iter_mut().zip(&hvp.phi) {
            *a -= inner_lr * h.eps;
        }
    }
    SecondOrder {
        loss: outer.loss,
        grad_theta,
        grad_basis,
    }
}
