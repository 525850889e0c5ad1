use std::f64::consts::PI;

use super::*;
use crate::numerics::{finite_diff_grad, relative_error, SeededRng};

fn tiny(width: usize, layers: usize, q: usize, seed: u64) -> SharedBackbone {
    let cfg = BackboneConfig {
        hidden_width: width,
        hidden_layers: layers,
        omega0: 3.0,
        modulation_dim: q,
    };
    SharedBackbone::init(cfg, 1.0, &mut SeededRng::new(seed)).unwrap()
}

/// Independent scalar re-implementation: loops over units, no gemm, no tape.
fn reference_forward(net: &SharedBackbone, m: &[f64], x: [f64; 2]) -> f64 {
    let cfg = *net.config();
    let p = net.params();
    let wmod = p.get("modulation.weight").unwrap();
    let mut h = x.to_vec();
    for l in 0..cfg.hidden_layers {
        let w = p.get(&format!("hidden.{l}.weight")).unwrap();
        let b = p.get(&format!("hidden.{l}.bias")).unwrap();
        let fan_in = h.len();
        let mut next = Vec::new();
        for u in 0..cfg.hidden_width {
            let mut z = b[u];
            for i in 0..fan_in {
                z += w[u * fan_in + i] * h[i];
            }
            let row = l * cfg.hidden_width + u;
            for j in 0..cfg.modulation_dim {
                z += wmod[row * cfg.modulation_dim + j] * m[j];
            }
            next.push((cfg.omega0 * z).sin());
        }
        h = next;
    }
    let wo = p.get("output.weight").unwrap();
    let bo = p.get("output.bias").unwrap()[0];
    h.iter().zip(wo).map(|(a, b)| a * b).sum::<f64>() + bo
}

#[test]
fn hand_computed_unit_network() {
    let cfg = BackboneConfig {
        hidden_width: 1,
        hidden_layers: 1,
        omega0: 30.0,
        modulation_dim: 1,
    };
    let mut net = SharedBackbone::zeros(cfg).unwrap();
    let p = net.params_mut();
    let wo = p.index_of("output.weight").unwrap();
    let wm = p.index_of("modulation.weight").unwrap();
    p.value_mut(wo)[0] = 1.0;
    p.value_mut(wm)[0] = 1.0;
    let m = [PI / (2.0 * 30.0)];
    let z = net.forward(&m, &CoordGrid::full(1, 1)).unwrap();
    assert!((z[0] - 1.0).abs() < 1e-15);
}

#[test]
fn zero_modulation_is_unmodulated() {
    let net = tiny(4, 2, 3, 1);
    let mut plain = net.clone();
    let slot = plain.modulation_slot();
    plain.params_mut().value_mut(slot).iter_mut().for_each(|x| *x = 0.0);
    let g = CoordGrid::full(3, 5);
    let m = [0.0; 3];
    assert_eq!(net.forward(&m, &g).unwrap(), plain.forward(&[0.7, -1.0, 2.0], &g).unwrap());
}

#[test]
fn matches_reference_implementation() {
    let net = tiny(3, 2, 4, 11);
    let m = SeededRng::new(5).uniform_vec(4, -1.0, 1.0);
    let g = CoordGrid::full(4, 3);
    let fast = net.forward(&m, &g).unwrap();
    for (p, z) in g.points().iter().zip(&fast) {
        assert!((reference_forward(&net, &m, *p) - z).abs() < 1e-12);
    }
}

#[test]
fn backward_matches_finite_differences() {
    let net = tiny(3, 2, 2, 21);
    let mut rng = SeededRng::new(2);
    let m = rng.uniform_vec(2, -0.5, 0.5);
    let coords = CoordGrid::full(3, 3);
    let targets = rng.uniform_vec(coords.len(), 0.0, 1.0);

    let loss = |net: &SharedBackbone, m: &[f64]| {
        let pred = net.forward(m, &coords).unwrap();
        pred.iter().zip(&targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / targets.len() as f64
    };
    let pred = net.forward(&m, &coords).unwrap();
    let residuals: Vec<f64> = pred.iter().zip(&targets).map(|(p, t)| p - t).collect();
    let grads = net.backward(&m, &coords, &residuals).unwrap();

    let fd_m = finite_diff_grad(|x| loss(&net, x), &m, 1e-6).unwrap();
    assert!(relative_error(&grads.modulation, &fd_m) < 1e-6);

    let mut probe = net.clone();
    let fd_theta = finite_diff_grad(
        |x| {
            probe.params_mut().set_values(x).unwrap();
            loss(&probe, &m)
        },
        net.params().values(),
        1e-6,
    )
    .unwrap();
    let err = relative_error(&grads.theta, &fd_theta);
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn zero_residuals_and_linearity() {
    let net = tiny(3, 2, 2, 8);
    let m = [0.1, -0.3];
    let coords = CoordGrid::full(2, 3);
    let zero = net.backward(&m, &coords, &[0.0; 6]).unwrap();
    assert!(zero.theta.iter().chain(&zero.modulation).all(|&g| g == 0.0));

    let r = [0.3, -0.2, 0.5, 0.0, 1.0, -0.7];
    let r2: Vec<f64> = r.iter().map(|x| 2.0 * x).collect();
    let a = net.backward(&m, &coords, &r).unwrap();
    let b = net.backward(&m, &coords, &r2).unwrap();
    for (x, y) in a.theta.iter().zip(&b.theta).chain(a.modulation.iter().zip(&b.modulation)) {
        assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
    }
    assert!(net.backward(&m, &coords, &r[..5]).is_err());
}

#[test]
fn output_layer_scaling() {
    let mut net = tiny(5, 2, 3, 4);
    let m = [0.2, 0.0, -0.4];
    let g = CoordGrid::full(3, 3);
    let base = net.forward(&m, &g).unwrap();
    let p = net.params_mut();
    for name in ["output.weight", "output.bias"] {
        let i = p.index_of(name).unwrap();
        p.value_mut(i).iter_mut().for_each(|x| *x *= -2.5);
    }
    let scaled = net.forward(&m, &g).unwrap();
    for (a, b) in base.iter().zip(&scaled) {
        assert!((-2.5 * a - b).abs() < 1e-12);
    }
}

#[test]
fn shifts_are_additive() {
    let net = tiny(4, 3, 5, 9);
    let mut rng = SeededRng::new(1);
    let a = rng.normal_vec(5);
    let b = rng.normal_vec(5);
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let (sa, sb, sab) = (net.shifts(&a).unwrap(), net.shifts(&b).unwrap(), net.shifts(&ab).unwrap());
    for i in 0..sa.len() {
        assert!((sa[i] + sb[i] - sab[i]).abs() < 1e-12);
    }
}

#[test]
fn render_center_pixel_and_determinism() {
    let net = tiny(4, 2, 2, 3);
    let m = [0.3, 0.1];
    let one = net.render_frame(&m, 1, 1).unwrap();
    let direct = net.forward(&m, &CoordGrid::from_points(vec![[0.0, 0.0]]).unwrap()).unwrap();
    assert_eq!(one, direct);
    assert_eq!(net.render_frame(&m, 4, 6).unwrap(), net.render_frame(&m, 4, 6).unwrap());
    assert!(net.render_frame(&m, 0, 3).is_err());
}

#[test]
fn dimension_errors() {
    let net = tiny(2, 1, 3, 0);
    assert!(net.forward(&[0.0; 2], &CoordGrid::full(2, 2)).is_err());
    assert!(net.forward(&[0.0; 3], &CoordGrid::from_points(vec![]).unwrap()).is_err());
    assert!(BackboneConfig { omega0: 0.0, ..Default::default() }.validate().is_err());
    assert!(BackboneConfig { hidden_layers: 0, ..Default::default() }.validate().is_err());
}
