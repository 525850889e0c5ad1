use std::path::Path;

use super::Subspace;
use crate::error::{Error, FormatError, Result};
use crate::io::{format_err, put_f64s, put_u32, read_file, to_u32, write_atomic, Cursor};
use crate::numerics::matrix::axpy;
use crate::numerics::Matrix;

/// Per-video latent: the video code `v ∈ R^q` and one coefficient row
/// `φ_t ∈ R^k` per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCodes {
    pub v: Vec<f64>,
    pub phi: Matrix,
}

impl LatentCodes {
    pub fn zeros(q: usize, k: usize, frames: usize) -> Self {
        LatentCodes {
            v: vec![0.0; q],
            phi: Matrix::zeros(frames, k),
        }
    }

    pub fn frames(&self) -> usize {
        self.phi.rows()
    }

    pub fn rank(&self) -> usize {
        self.phi.cols()
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Number of stored values, `q + T·k`.
    pub fn num_values(&self) -> usize {
        self.v.len() + self.phi.as_slice().len()
    }

    pub fn modulation(&self, subspace: &Subspace, frame: usize) -> Result<Vec<f64>> {
        compose_modulation(&self.v, subspace, self.phi.row(frame))
    }

    pub fn modulations(&self, subspace: &Subspace) -> Result<Vec<Vec<f64>>> {
        (0..self.frames()).map(|t| self.modulation(subspace, t)).collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(16 + 8 * self.num_values());
        out.extend_from_slice(b"LRML");
        put_u32(&mut out, to_u32(self.dim(), "q")?);
        put_u32(&mut out, to_u32(self.rank(), "k")?);
        put_u32(&mut out, to_u32(self.frames(), "T")?);
        put_f64s(&mut out, &self.v);
        put_f64s(&mut out, self.phi.as_slice());
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, FormatError> {
        let mut c = Cursor::new(buf);
        c.magic(b"LRML")?;
        let q = c.u32()? as usize;
        let k = c.u32()? as usize;
        let t = c.u32()? as usize;
        let v = c.f64s(q)?;
        let phi = c.f64s(t.checked_mul(k).ok_or_else(|| FormatError::Malformed("T·k overflows".into()))?)?;
        c.finish()?;
        let phi = Matrix::from_vec(t, k, phi).map_err(|e| FormatError::Malformed(e.to_string()))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(FormatError::Malformed("non-finite video code".into()));
        }
        Ok(LatentCodes { v, phi })
    }
}

/// `m_t[j] = v[j] + Σ_i φ_t[i] B[i][j]`.
pub fn compose_modulation(v: &[f64], subspace: &Subspace, phi_t: &[f64]) -> Result<Vec<f64>> {
    if v.len() != subspace.dim() {
        return Err(Error::dims("compose_modulation v", subspace.dim(), v.len()));
    }
    if phi_t.len() != subspace.rank() {
        return Err(Error::dims("compose_modulation φ_t", subspace.rank(), phi_t.len()));
    }
    let mut m = v.to_vec();
    for (i, &c) in phi_t.iter().enumerate() {
        axpy(c, subspace.basis_row(i), &mut m);
    }
    Ok(m)
}

pub fn write_latents(path: &Path, codes: &LatentCodes) -> Result<()> {
    write_atomic(path, &codes.to_bytes()?)
}

pub fn read_latents(path: &Path) -> Result<LatentCodes> {
    let buf = read_file(path)?;
    LatentCodes::from_bytes(&buf).map_err(|k| format_err(path, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowrank::{init_subspace, InitMode};
    use crate::numerics::SeededRng;

    #[test]
    fn zero_update_returns_video_code() {
        let s = init_subspace(2, 5, InitMode::Basic, 1).unwrap();
        let v = vec![0.5, -1.0, 2.0, 0.0, 3.0];
        assert_eq!(compose_modulation(&v, &s, &[0.0, 0.0]).unwrap(), v);
    }

    #[test]
    fn hand_composition() {
        let s = Subspace::from_matrix(Matrix::from_rows(&[[0.0, 1.0]]).unwrap(), InitMode::Basic).unwrap();
        assert_eq!(compose_modulation(&[1.0, 1.0], &s, &[2.0]).unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn matches_matmul() {
        let s = init_subspace(3, 7, InitMode::Basic, 2).unwrap();
        let mut rng = SeededRng::new(4);
        let v = rng.normal_vec(7);
        let phi = rng.normal_matrix(1, 3);
        let via_matmul = phi.matmul(&s.basis_matrix()).unwrap();
        let m = compose_modulation(&v, &s, phi.row(0)).unwrap();
        for j in 0..7 {
            assert!((m[j] - v[j] - via_matmul[(0, j)]).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let s = init_subspace(2, 4, InitMode::Basic, 1).unwrap();
        assert!(compose_modulation(&[0.0; 3], &s, &[0.0; 2]).is_err());
        assert!(compose_modulation(&[0.0; 4], &s, &[0.0; 3]).is_err());
    }

    #[test]
    fn latent_file_layout() {
        let codes = LatentCodes {
            v: vec![1.0, 2.0],
            phi: Matrix::from_rows(&[[3.0], [4.0], [5.0]]).unwrap(),
        };
        let bytes = codes.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"LRML");
        assert_eq!(&bytes[4..16], &[2, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 5 * 8);
        assert_eq!(LatentCodes::from_bytes(&bytes).unwrap(), codes);
        assert!(matches!(
            LatentCodes::from_bytes(&bytes[..30]),
            Err(FormatError::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(LatentCodes::from_bytes(&bad), Err(FormatError::BadMagic { .. })));
    }

    proptest::proptest! {
        #[test]
        fn composition_is_linear(seed in 0u64..200, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let s = init_subspace(2, 6, InitMode::Basic, seed).unwrap();
            let mut rng = SeededRng::new(seed);
            let (v1, v2) = (rng.normal_vec(6), rng.normal_vec(6));
            let (p1, p2) = (rng.normal_vec(2), rng.normal_vec(2));
            let mix = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(x, y)| a * x + b * y).collect() };
            let lhs = compose_modulation(&mix(&v1, &v2), &s, &mix(&p1, &p2)).unwrap();
            let rhs = mix(&compose_modulation(&v1, &s, &p1).unwrap(), &compose_modulation(&v2, &s, &p2).unwrap());
            for (x, y) in lhs.iter().zip(&rhs) {
                proptest::prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
