//! The shared sine-activated coordinate network with shift modulations.
//!
//! For a modulation vector `m ∈ R^q` the hidden shifts are `s = W_mod m`,
//! split into one block of `hidden_width` values per hidden layer. Each hidden
//! layer computes `h' = sin(ω0 (W h + b + s_l))`; the output layer is affine.

use super::CoordGrid;
use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, gemm, MatRef};
use crate::numerics::{ParamStore, SeededRng};

pub const IN_DIM: usize = 2;
pub const OUT_DIM: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackboneConfig {
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub omega0: f64,
    pub modulation_dim: usize,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig {
            hidden_width: 128,
            hidden_layers: 4,
            omega0: 30.0,
            modulation_dim: 256,
        }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.hidden_width == 0 || self.modulation_dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "backbone needs hidden_layers, hidden_width and modulation_dim >= 1, got {self:?}"
            )));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::InvalidConfig(format!("omega0 must be positive, got {}", self.omega0)));
        }
        Ok(())
    }

    /// Total number of shift values, one per hidden unit.
    pub fn shift_len(&self) -> usize {
        self.hidden_layers * self.hidden_width
    }

    fn fan_in(&self, layer: usize) -> usize {
        if layer == 0 {
            IN_DIM
        } else {
            self.hidden_width
        }
    }
}

/// Gradients returned by [`SharedBackbone::backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct BackboneGrads {
    /// Same layout as [`SharedBackbone::params`].
    pub theta: Vec<f64>,
    pub modulation: Vec<f64>,
}

/// Activations kept from a batched forward pass.
pub(crate) struct Tape {
    n: usize,
    /// `acts[0]` holds the coordinates, `acts[l + 1]` the output of hidden layer `l`.
    acts: Vec<Vec<f64>>,
    /// `ω0 cos(ω0 z_l)`, the derivative of each hidden activation.
    slopes: Vec<Vec<f64>>,
    pub(crate) pred: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharedBackbone {
    config: BackboneConfig,
    params: ParamStore,
}

impl SharedBackbone {
    /// Parameter layout for `config`, all zeros.
    pub fn zeros(config: BackboneConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        for l in 0..config.hidden_layers {
            params.push(format!("hidden.{l}.weight"), config.hidden_width, config.fan_in(l));
            params.push(format!("hidden.{l}.bias"), 1, config.hidden_width);
        }
        params.push("output.weight", OUT_DIM, config.hidden_width);
        params.push("output.bias", 1, OUT_DIM);
        params.push("modulation.weight", config.shift_len(), config.modulation_dim);
        Ok(SharedBackbone { config, params })
    }

    /// SIREN initialisation: first-layer weights in `±1/in_dim`, later
    /// weights in `±sqrt(6/fan_in)/ω0`, biases in `±1/sqrt(fan_in)`. The
    /// latent-to-shift map is drawn in `±mod_scale/sqrt(q)`.
    pub fn init(config: BackboneConfig, mod_scale: f64, rng: &mut SeededRng) -> Result<Self> {
        let mut net = SharedBackbone::zeros(config)?;
        let w = config.omega0;
        for l in 0..config.hidden_layers {
            let fan_in = config.fan_in(l) as f64;
            let limit = if l == 0 { 1.0 / fan_in } else { (6.0 / fan_in).sqrt() / w };
            fill_uniform(net.params.value_mut(2 * l), limit, rng);
            fill_uniform(net.params.value_mut(2 * l + 1), 1.0 / fan_in.sqrt(), rng);
        }
        let fan_in = config.hidden_width as f64;
        let l = config.hidden_layers;
        fill_uniform(net.params.value_mut(2 * l), (6.0 / fan_in).sqrt() / w, rng);
        fill_uniform(net.params.value_mut(2 * l + 1), 1.0 / fan_in.sqrt(), rng);
        let q = config.modulation_dim as f64;
        fill_uniform(net.params.value_mut(2 * l + 2), mod_scale / q.sqrt(), rng);
        Ok(net)
    }

    /// Wraps an existing parameter store, checking its layout.
    pub fn from_params(config: BackboneConfig, params: ParamStore) -> Result<Self> {
        let expected = SharedBackbone::zeros(config)?;
        if !expected.params.same_layout(&params) {
            return Err(Error::InvalidConfig(
                "parameter layout does not match backbone configuration".into(),
            ));
        }
        if let Some(name) = params.non_finite_value() {
            return Err(Error::NonFinite(format!("backbone parameter `{name}`")));
        }
        Ok(SharedBackbone { config, params })
    }

    pub fn config(&self) -> &BackboneConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    #[inline]
    fn weight(&self, l: usize) -> &[f64] {
        self.params.value(2 * l)
    }

    #[inline]
    fn bias(&self, l: usize) -> &[f64] {
        self.params.value(2 * l + 1)
    }

    #[inline]
    fn output_weight(&self) -> &[f64] {
        self.params.value(2 * self.config.hidden_layers)
    }

    #[inline]
    fn output_bias(&self) -> f64 {
        self.params.value(2 * self.config.hidden_layers + 1)[0]
    }

    /// The `(shift_len x q)` latent-to-shift matrix, row-major.
    #[inline]
    pub fn modulation_weight(&self) -> &[f64] {
        self.params.value(2 * self.config.hidden_layers + 2)
    }

    /// Index of the latent-to-shift slice inside [`Self::params`].
    pub fn modulation_slot(&self) -> usize {
        2 * self.config.hidden_layers + 2
    }

    fn check_modulation(&self, m: &[f64]) -> Result<()> {
        if m.len() != self.config.modulation_dim {
            return Err(Error::dims("modulation vector", self.config.modulation_dim, m.len()));
        }
        Ok(())
    }

    /// `W_mod m`, concatenated per hidden layer.
    pub fn shifts(&self, m: &[f64]) -> Result<Vec<f64>> {
        self.check_modulation(m)?;
        let q = self.config.modulation_dim;
        Ok(self
            .modulation_weight()
            .chunks_exact(q)
            .map(|row| dot(row, m))
            .collect())
    }

    /// `W_modᵀ g`: pulls a shift-space gradient back to modulation space.
    pub fn shift_grad_to_modulation(&self, grad_shift: &[f64]) -> Vec<f64> {
        let q = self.config.modulation_dim;
        let mut out = vec![0.0; q];
        for (row, &g) in self.modulation_weight().chunks_exact(q).zip(grad_shift) {
            if g != 0.0 {
                crate::numerics::matrix::axpy(g, row, &mut out);
            }
        }
        out
    }

    /// Predicted intensities at `coords` under modulation `m`.
    pub fn forward(&self, m: &[f64], coords: &CoordGrid) -> Result<Vec<f64>> {
        if coords.is_empty() {
            return Err(Error::InvalidConfig("forward on an empty coordinate set".into()));
        }
        let shifts = self.shifts(m)?;
        Ok(self.run(&shifts, coords.points(), false).pred)
    }

    /// Gradients of `(1/N) Σ r_i²` where `r` are the residuals
    /// `prediction - target` at `coords`.
    pub fn backward(&self, m: &[f64], coords: &CoordGrid, residuals: &[f64]) -> Result<BackboneGrads> {
        if residuals.len() != coords.len() {
            return Err(Error::dims("backward residuals", coords.len(), residuals.len()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidConfig("backward on an empty coordinate set".into()));
        }
        let shifts = self.shifts(m)?;
        let tape = self.run(&shifts, coords.points(), true);
        let scale = 2.0 / residuals.len() as f64;
        let dpred: Vec<f64> = residuals.iter().map(|r| scale * r).collect();
        let mut theta = vec![0.0; self.params.len()];
        let mut grad_shift = vec![0.0; self.config.shift_len()];
        self.backprop(&tape, &dpred, &mut grad_shift, Some((&mut theta, m)));
        let modulation = self.shift_grad_to_modulation(&grad_shift);
        Ok(BackboneGrads { theta, modulation })
    }

    /// Renders an `height x width` frame over the pixel-centre grid.
    /// Values are not clamped.
    pub fn render_frame(&self, m: &[f64], height: usize, width: usize) -> Result<Vec<f64>> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidConfig(format!("cannot render a {height}x{width} frame")));
        }
        self.forward(m, &CoordGrid::full(height, width))
    }

    /// Mean squared error against `targets` and its gradient with respect to
    /// the shift vector. When `theta_grad` is given, the parameter gradient
    /// (including the latent-to-shift map, using `m`) is accumulated into it.
    pub(crate) fn frame_objective(
        &self,
        shifts: &[f64],
        coords: &[[f64; 2]],
        targets: &[f64],
        theta_grad: Option<(&mut [f64], &[f64])>,
    ) -> (f64, Vec<f64>) {
        debug_assert_eq!(coords.len(), targets.len());
        let tape = self.run(shifts, coords, true);
        let n = coords.len() as f64;
        let mut loss = 0.0;
        let dpred: Vec<f64> = tape
            .pred
            .iter()
            .zip(targets)
            .map(|(p, t)| {
                let r = p - t;
                loss += r * r;
                2.0 * r / n
            })
            .collect();
        let mut grad_shift = vec![0.0; self.config.shift_len()];
        self.backprop(&tape, &dpred, &mut grad_shift, theta_grad);
        (loss / n, grad_shift)
    }

    /// Mean squared error only.
    pub(crate) fn frame_loss(&self, shifts: &[f64], coords: &[[f64; 2]], targets: &[f64]) -> f64 {
        let pred = self.run(shifts, coords, false).pred;
        pred.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / targets.len() as f64
    }

    pub(crate) fn run(&self, shifts: &[f64], coords: &[[f64; 2]], keep: bool) -> Tape {
        let cfg = &self.config;
        let n = coords.len();
        let width = cfg.hidden_width;
        let omega = cfg.omega0;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(cfg.hidden_layers + 1);
        let mut slopes = Vec::with_capacity(if keep { cfg.hidden_layers } else { 0 });
        acts.push(coords.iter().flat_map(|p| p.iter().copied()).collect());
        for l in 0..cfg.hidden_layers {
            let fan_in = cfg.fan_in(l);
            let mut z = vec![0.0; n * width];
            gemm(
                1.0,
                MatRef::row_major(&acts[l], n, fan_in),
                MatRef::transposed(self.weight(l), width, fan_in),
                0.0,
                &mut z,
                width,
            );
            let offset: Vec<f64> = self
                .bias(l)
                .iter()
                .zip(&shifts[l * width..(l + 1) * width])
                .map(|(b, s)| b + s)
                .collect();
            let mut slope = if keep { vec![0.0; n * width] } else { Vec::new() };
            for (i, row) in z.chunks_exact_mut(width).enumerate() {
                for (j, zj) in row.iter_mut().enumerate() {
                    let (s, c) = (omega * (*zj + offset[j])).sin_cos();
                    *zj = s;
                    if keep {
                        slope[i * width + j] = omega * c;
                    }
                }
            }
            if keep {
                slopes.push(slope);
            }
            if !keep && l > 0 {
                acts[l] = Vec::new();
            }
            acts.push(z);
        }
        let wo = self.output_weight();
        let bo = self.output_bias();
        let pred = acts[cfg.hidden_layers]
            .chunks_exact(width)
            .map(|h| dot(h, wo) + bo)
            .collect();
        Tape {
            n,
            acts,
            slopes,
            pred,
        }
    }

    /// Reverse pass from `dL/dpred`. Overwrites `grad_shift` (which equals
    /// the bias gradient of each hidden layer); parameter gradients are
    /// accumulated.
    pub(crate) fn backprop(
        &self,
        tape: &Tape,
        dpred: &[f64],
        grad_shift: &mut [f64],
        theta_grad: Option<(&mut [f64], &[f64])>,
    ) {
        let cfg = &self.config;
        let n = tape.n;
        let width = cfg.hidden_width;
        let layers = cfg.hidden_layers;
        let mut theta_grad = theta_grad;
        grad_shift.iter_mut().for_each(|g| *g = 0.0);

        if let Some((g, _)) = theta_grad.as_mut() {
            let range_w = self.params.slice(2 * layers).range();
            let gw = &mut g[range_w];
            for (h, &d) in tape.acts[layers].chunks_exact(width).zip(dpred) {
                crate::numerics::matrix::axpy(d, h, gw);
            }
            g[self.params.slice(2 * layers + 1).offset] += dpred.iter().sum::<f64>();
        }

        let wo = self.output_weight();
        let mut delta = vec![0.0; n * width];
        for (row, &d) in delta.chunks_exact_mut(width).zip(dpred) {
            for (x, w) in row.iter_mut().zip(wo) {
                *x = d * w;
            }
        }

        for l in (0..layers).rev() {
            let fan_in = cfg.fan_in(l);
            for (d, s) in delta.iter_mut().zip(&tape.slopes[l]) {
                *d *= s;
            }
            let gs = &mut grad_shift[l * width..(l + 1) * width];
            for row in delta.chunks_exact(width) {
                for (g, d) in gs.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if let Some((g, _)) = theta_grad.as_mut() {
                let rw = self.params.slice(2 * l).range();
                gemm(
                    1.0,
                    MatRef::transposed(&delta, n, width),
                    MatRef::row_major(&tape.acts[l], n, fan_in),
                    1.0,
                    &mut g[rw],
                    fan_in,
                );
                let rb = self.params.slice(2 * l + 1).range();
                for row in delta.chunks_exact(width) {
                    for (gb, d) in g[rb.clone()].iter_mut().zip(row) {
                        *gb += d;
                    }
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; n * fan_in];
                gemm(
                    1.0,
                    MatRef::row_major(&delta, n, width),
                    MatRef::row_major(self.weight(l), width, fan_in),
                    0.0,
                    &mut prev,
                    fan_in,
                );
                delta = prev;
            }
        }

        if let Some((g, m)) = theta_grad {
            // d/dW_mod of the shift s = W_mod m is (dL/ds) mᵀ.
            let q = cfg.modulation_dim;
            let r = self.params.slice(self.modulation_slot()).range();
            let gm = &mut g[r];
            accumulate_outer(gm, grad_shift, m, q);
        }
    }
}

/// `out += a bᵀ` for a row-major `a.len() x q` buffer.
fn accumulate_outer(out: &mut [f64], a: &[f64], b: &[f64], q: usize) {
    for (row, &ai) in out.chunks_exact_mut(q).zip(a) {
        if ai != 0.0 {
            crate::numerics::matrix::axpy(ai, b, row);
        }
    }
}

fn fill_uniform(buf: &mut [f64], limit: f64, rng: &mut SeededRng) {
    for x in buf {
        *x = rng.uniform(-limit, limit);
    }
}
