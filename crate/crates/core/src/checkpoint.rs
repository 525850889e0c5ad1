//! Trained model container and the `LRMC` checkpoint format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"LRMC"
//! u32 version (1)
//! u32 hidden_width, u32 hidden_layers, u32 modulation_dim (q), u32 in_dim, u32 out_dim
//! f64 omega0
//! u32 k, u32 init_mode (0 basic, 1 ortho)
//! u32 slice count, then per slice: u32 name length, UTF-8 name, u32 rows, u32 cols
//! f64 values of every slice in manifest order (backbone θ, then subspace.basis β)
//! u32 length + UTF-8 training configuration (`key = value` text)
//! u32 loss record count, then per record: u64 iteration, f64 recon, f64 ortho, f64 total
//! u32 CRC-32 (IEEE) of all preceding bytes
//! ```

use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::inr::{BackboneConfig, SharedBackbone, IN_DIM, OUT_DIM};
use crate::io::{format_err, put_f64s, put_u32, put_u64, read_file, to_u32, write_atomic, Cursor};
use crate::lowrank::{init_subspace, InitMode, Subspace};
use crate::meta::{LossReport, TrainConfig};
use crate::numerics::{Matrix, ParamStore, SeededRng};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub backbone: SharedBackbone,
    pub subspace: Subspace,
    pub config: TrainConfig,
    pub loss_curve: Vec<LossReport>,
}

impl Checkpoint {
    /// Freshly initialised model for `cfg` (seeded by `cfg.seed`).
    pub fn initialize(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = SeededRng::fork(cfg.seed, &[0x1417]);
        let backbone = SharedBackbone::init(cfg.backbone(), cfg.modulation_init, &mut rng)?;
        let subspace = init_subspace(cfg.rank, cfg.modulation_dim, cfg.init_mode, cfg.seed)?;
        Ok(Checkpoint {
            backbone,
            subspace,
            config: cfg.clone(),
            loss_curve: Vec::new(),
        })
    }

    pub fn rank(&self) -> usize {
        self.subspace.rank()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let bc = self.backbone.config();
        let mut out = Vec::new();
        out.extend_from_slice(b"LRMC");
        put_u32(&mut out, CHECKPOINT_FORMAT_VERSION);
        put_u32(&mut out, to_u32(bc.hidden_width, "hidden_width")?);
        put_u32(&mut out, to_u32(bc.hidden_layers, "hidden_layers")?);
        put_u32(&mut out, to_u32(bc.modulation_dim, "modulation_dim")?);
        put_u32(&mut out, IN_DIM as u32);
        put_u32(&mut out, OUT_DIM as u32);
        put_f64s(&mut out, &[bc.omega0]);
        put_u32(&mut out, to_u32(self.subspace.rank(), "k")?);
        put_u32(&mut out, self.subspace.init_mode().code());

        let stores = [self.backbone.params(), self.subspace.params()];
        let n_slices: usize = stores.iter().map(|s| s.slices().len()).sum();
        put_u32(&mut out, to_u32(n_slices, "slice count")?);
        for store in stores {
            for s in store.slices() {
                put_u32(&mut out, to_u32(s.name.len(), "slice name length")?);
                out.extend_from_slice(s.name.as_bytes());
                put_u32(&mut out, to_u32(s.rows, "rows")?);
                put_u32(&mut out, to_u32(s.cols, "cols")?);
            }
        }
        for store in stores {
            put_f64s(&mut out, store.values());
        }
        let text = self.config.to_text();
        put_u32(&mut out, to_u32(text.len(), "config length")?);
        out.extend_from_slice(text.as_bytes());
        put_u32(&mut out, to_u32(self.loss_curve.len(), "loss records")?);
        for r in &self.loss_curve {
            put_u64(&mut out, r.iteration as u64);
            put_f64s(&mut out, &[r.reconstruction, r.orthogonality, r.total]);
        }
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, FormatError> {
        let malformed = |m: String| FormatError::Malformed(m);
        let mut c = Cursor::new(buf);
        c.magic(b"LRMC")?;
        let version = c.u32()?;
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let hidden_width = c.u32()? as usize;
        let hidden_layers = c.u32()? as usize;
        let modulation_dim = c.u32()? as usize;
        let (in_dim, out_dim) = (c.u32()? as usize, c.u32()? as usize);
        if in_dim != IN_DIM || out_dim != OUT_DIM {
            return Err(malformed(format!("unsupported in/out dims {in_dim}/{out_dim}")));
        }
        let omega0 = c.f64()?;
        let k = c.u32()? as usize;
        let init_mode = InitMode::from_code(c.u32()?).ok_or_else(|| malformed("unknown init mode".into()))?;

        let n_slices = c.u32()? as usize;
        let mut manifest = Vec::with_capacity(n_slices.min(1024));
        for _ in 0..n_slices {
            let len = c.u32()? as usize;
            let name = std::str::from_utf8(c.take(len)?)
                .map_err(|_| malformed("slice name is not UTF-8".into()))?
                .to_owned();
            let rows = c.u32()? as usize;
            let cols = c.u32()? as usize;
            manifest.push((name, rows, cols));
        }
        let (basis_entry, theta_entries) = manifest
            .split_last()
            .ok_or_else(|| malformed("empty slice manifest".into()))?;
        if basis_entry.0 != Subspace::SLICE {
            return Err(malformed(format!("last slice must be `{}`", Subspace::SLICE)));
        }
        let mut theta = ParamStore::new();
        for (name, rows, cols) in theta_entries {
            theta.push(name.clone(), *rows, *cols);
        }
        let values = c.f64s(theta.len())?;
        theta.set_values(&values).expect("length matches layout");
        let basis = c.f64s(basis_entry.1 * basis_entry.2)?;

        let text_len = c.u32()? as usize;
        let text = std::str::from_utf8(c.take(text_len)?).map_err(|_| malformed("config is not UTF-8".into()))?;
        let mut config = TrainConfig::default();
        config.apply_text(text).map_err(|e| malformed(e.to_string()))?;

        let n_loss = c.u32()? as usize;
        let mut loss_curve = Vec::with_capacity(n_loss.min(1 << 20));
        for _ in 0..n_loss {
            let iteration = c.u64()? as usize;
            let reconstruction = c.f64()?;
            let orthogonality = c.f64()?;
            let total = c.f64()?;
            loss_curve.push(LossReport {
                iteration,
                reconstruction,
                orthogonality,
                total,
            });
        }
        let body_end = c.position();
        let stored = c.u32()?;
        c.finish()?;
        let computed = crc32fast::hash(&buf[..body_end]);
        if stored != computed {
            return Err(FormatError::CrcMismatch { stored, computed });
        }

        let bc = BackboneConfig {
            hidden_width,
            hidden_layers,
            omega0,
            modulation_dim,
        };
        let backbone = SharedBackbone::from_params(bc, theta).map_err(|e| malformed(e.to_string()))?;
        if (basis_entry.1, basis_entry.2) != (k, modulation_dim) {
            return Err(malformed(format!(
                "basis is {}x{}, expected {k}x{modulation_dim}",
                basis_entry.1, basis_entry.2
            )));
        }
        let basis = Matrix::from_vec(k, modulation_dim, basis).map_err(|e| malformed(e.to_string()))?;
        let subspace = Subspace::from_matrix(basis, init_mode).map_err(|e| malformed(e.to_string()))?;
        Ok(Checkpoint {
            backbone,
            subspace,
            config,
            loss_curve,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = read_file(path)?;
        Checkpoint::from_bytes(&buf).map_err(|k| format_err(path, k))
    }
}

impl From<FormatError> for Error {
    fn from(kind: FormatError) -> Self {
        Error::Format {
            path: Default::default(),
            kind,
        }
    }
}
