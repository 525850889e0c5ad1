//! Training configuration and its flat `key = value` file format.
//!
//! One setting per line, `#` starts a comment, keys are the field names of
//! [`TrainConfig`]. Unknown keys are rejected.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inr::BackboneConfig;
use crate::lowrank::InitMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MetaOrder {
    /// Outer gradient at the adapted codes, codes treated as constants.
    #[default]
    First,
    /// Outer gradient backpropagated through the unrolled inner steps.
    Second,
}

impl fmt::Display for MetaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetaOrder::First => "first",
            MetaOrder::Second => "second",
        })
    }
}

impl FromStr for MetaOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(MetaOrder::First),
            "second" => Ok(MetaOrder::Second),
            _ => Err(Error::InvalidConfig(format!("unknown meta_order `{s}` (first|second)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub inner_steps: usize,
    pub inner_lr: f64,
    pub outer_lr: f64,
    pub outer_iters: usize,
    pub batch_videos: usize,
    /// Pixels per frame per step (`N`).
    pub coord_subsample: usize,
    /// Draw a separate pixel subset for every frame instead of one shared set.
    pub per_frame_sampling: bool,
    pub lambda_ortho: f64,
    pub meta_order: MetaOrder,
    pub seed: u64,

    pub rank: usize,
    pub init_mode: InitMode,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub omega0: f64,
    pub modulation_dim: usize,
    /// Scale of the latent-to-shift initialisation (`±scale/sqrt(q)`).
    pub modulation_init: f64,

    /// Encoding steps for frozen-model fitting. The defaults repeat the
    /// meta-learned inner loop on the full grid.
    pub fit_steps: usize,
    pub fit_lr: f64,
    /// Pixels per frame per fitting step; `0` means the full grid.
    pub fit_subsample: usize,

    /// Write a checkpoint every this many outer iterations (`0`: only at the end).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let b = BackboneConfig::default();
        TrainConfig {
            inner_steps: 3,
            inner_lr: 1e-2,
            outer_lr: 1e-4,
            outer_iters: 1000,
            batch_videos: 4,
            coord_subsample: 1024,
            per_frame_sampling: false,
            lambda_ortho: 0.0,
            meta_order: MetaOrder::First,
            seed: 0,
            rank: 2,
            init_mode: InitMode::Basic,
            hidden_width: b.hidden_width,
            hidden_layers: b.hidden_layers,
            omega0: b.omega0,
            modulation_dim: b.modulation_dim,
            modulation_init: 1.0,
            fit_steps: 3,
            fit_lr: 1e-2,
            fit_subsample: 0,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    /// The ortho variant: orthonormal initialisation and `λ_ortho = 1`.
    pub fn ortho(mut self) -> Self {
        self.init_mode = InitMode::Ortho;
        self.lambda_ortho = 1.0;
        self
    }

    pub fn backbone(&self) -> BackboneConfig {
        BackboneConfig {
            hidden_width: self.hidden_width,
            hidden_layers: self.hidden_layers,
            omega0: self.omega0,
            modulation_dim: self.modulation_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.backbone().validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, v) in [("inner_lr", self.inner_lr), ("outer_lr", self.outer_lr), ("fit_lr", self.fit_lr)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.coord_subsample == 0 {
            return bad("coord_subsample must be >= 1".into());
        }
        if self.batch_videos == 0 {
            return bad("batch_videos must be >= 1".into());
        }
        if !(self.lambda_ortho >= 0.0 && self.lambda_ortho.is_finite()) {
            return bad(format!("lambda_ortho must be >= 0, got {}", self.lambda_ortho));
        }
        if self.rank == 0 || self.rank > self.modulation_dim {
            return bad(format!("rank {} must satisfy 1 <= k <= q = {}", self.rank, self.modulation_dim));
        }
        if !(self.modulation_init >= 0.0 && self.modulation_init.is_finite()) {
            return bad("modulation_init must be >= 0".into());
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("inner_steps", &self.inner_steps);
        kv("inner_lr", &self.inner_lr);
        kv("outer_lr", &self.outer_lr);
        kv("outer_iters", &self.outer_iters);
        kv("batch_videos", &self.batch_videos);
        kv("coord_subsample", &self.coord_subsample);
        kv("per_frame_sampling", &self.per_frame_sampling);
        kv("lambda_ortho", &self.lambda_ortho);
        kv("meta_order", &self.meta_order);
        kv("seed", &self.seed);
        kv("rank", &self.rank);
        kv("init_mode", &self.init_mode);
        kv("hidden_width", &self.hidden_width);
        kv("hidden_layers", &self.hidden_layers);
        kv("omega0", &self.omega0);
        kv("modulation_dim", &self.modulation_dim);
        kv("modulation_init", &self.modulation_init);
        kv("fit_steps", &self.fit_steps);
        kv("fit_lr", &self.fit_lr);
        kv("fit_subsample", &self.fit_subsample);
        kv("checkpoint_every", &self.checkpoint_every);
        s
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn p<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidConfig(format!("cannot parse `{v}` for `{key}`")))
        }
        match key {
            "inner_steps" => self.inner_steps = p(key, value)?,
            "inner_lr" => self.inner_lr = p(key, value)?,
            "outer_lr" => self.outer_lr = p(key, value)?,
            "outer_iters" => self.outer_iters = p(key, value)?,
            "batch_videos" => self.batch_videos = p(key, value)?,
            "coord_subsample" => self.coord_subsample = p(key, value)?,
            "per_frame_sampling" => self.per_frame_sampling = p(key, value)?,
            "lambda_ortho" => self.lambda_ortho = p(key, value)?,
            "meta_order" => self.meta_order = value.parse()?,
            "seed" => self.seed = p(key, value)?,
            "rank" => self.rank = p(key, value)?,
            "init_mode" => self.init_mode = value.parse()?,
            "hidden_width" => self.hidden_width = p(key, value)?,
            "hidden_layers" => self.hidden_layers = p(key, value)?,
            "omega0" => self.omega0 = p(key, value)?,
            "modulation_dim" => self.modulation_dim = p(key, value)?,
            "modulation_init" => self.modulation_init = p(key, value)?,
            "fit_steps" => self.fit_steps = p(key, value)?,
            "fit_lr" => self.fit_lr = p(key, value)?,
            "fit_subsample" => self.fit_subsample = p(key, value)?,
            "checkpoint_every" => self.checkpoint_every = p(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainConfig::from_text(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
