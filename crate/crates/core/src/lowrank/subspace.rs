use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::matrix::{axpy, dot, norm};
use crate::numerics::{Matrix, ParamStore, SeededRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InitMode {
    /// i.i.d. Gaussian entries scaled by `1/sqrt(q)`.
    #[default]
    Basic,
    /// Orthonormal rows from Gram-Schmidt on Gaussian rows.
    Ortho,
}

impl InitMode {
    pub(crate) fn code(self) -> u32 {
        match self {
            InitMode::Basic => 0,
            InitMode::Ortho => 1,
        }
    }

    pub(crate) fn from_code(c: u32) -> Option<Self> {
        match c {
            0 => Some(InitMode::Basic),
            1 => Some(InitMode::Ortho),
            _ => None,
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Basic => "basic",
            InitMode::Ortho => "ortho",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(InitMode::Basic),
            "ortho" => Ok(InitMode::Ortho),
            _ => Err(Error::InvalidConfig(format!("unknown init mode `{s}` (basic|ortho)"))),
        }
    }
}

/// The learnable basis `B` (k rows in `R^q`), stored in a one-slice
/// [`ParamStore`] so it can be optimised like any other parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    params: ParamStore,
    rank: usize,
    dim: usize,
    init_mode: InitMode,
}

impl Subspace {
    pub const SLICE: &'static str = "subspace.basis";

    pub fn from_matrix(basis: Matrix, init_mode: InitMode) -> Result<Self> {
        let (k, q) = basis.shape();
        if k == 0 || k > q {
            return Err(Error::InvalidConfig(format!("subspace rank {k} must be in 1..={q}")));
        }
        if !basis.is_finite() {
            return Err(Error::NonFinite("subspace basis".into()));
        }
        let mut params = ParamStore::new();
        params.push(Self::SLICE, k, q);
        params.set_values(basis.as_slice())?;
        Ok(Subspace {
            params,
            rank: k,
            dim: q,
            init_mode,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn init_mode(&self) -> InitMode {
        self.init_mode
    }

    /// Row-major `k x q` basis.
    pub fn basis(&self) -> &[f64] {
        self.params.values()
    }

    pub fn basis_row(&self, i: usize) -> &[f64] {
        &self.basis()[i * self.dim..(i + 1) * self.dim]
    }

    pub fn basis_matrix(&self) -> Matrix {
        Matrix::from_vec(self.rank, self.dim, self.basis().to_vec()).expect("finite basis")
    }

    pub fn gram(&self) -> Matrix {
        self.basis_matrix().row_gram()
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }
}

pub fn init_subspace(k: usize, q: usize, mode: InitMode, seed: u64) -> Result<Subspace> {
    if k == 0 || k > q {
        return Err(Error::InvalidConfig(format!("subspace rank k = {k} must satisfy 1 <= k <= q = {q}")));
    }
    let mut rng = SeededRng::fork(seed, &[0x5B5B]);
    let mut basis = rng.normal_matrix(k, q);
    match mode {
        InitMode::Basic => basis.scale(1.0 / (q as f64).sqrt()),
        InitMode::Ortho => {
            // modified Gram-Schmidt, re-drawing any row that collapses
            for i in 0..k {
                loop {
                    let mut row = basis.row(i).to_vec();
                    for j in 0..i {
                        let c = dot(&row, basis.row(j));
                        axpy(-c, basis.row(j), &mut row);
                    }
                    let n = norm(&row);
                    if n > 1e-8 {
                        row.iter_mut().for_each(|x| *x /= n);
                        basis.row_mut(i).copy_from_slice(&row);
                        break;
                    }
                    let fresh = rng.normal_vec(q);
                    basis.row_mut(i).copy_from_slice(&fresh);
                }
            }
        }
    }
    Subspace::from_matrix(basis, mode)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrthoPenalty {
    pub value: f64,
    /// `k x q`, row-major, same layout as the basis.
    pub grad: Vec<f64>,
}

/// `‖B Bᵀ − I_k‖_F` and its gradient `2 (G − I) B / ‖G − I‖_F`.
///
/// The norm is not differentiable at zero; the gradient is defined as zero
/// when the penalty is below `1e-12`.
pub fn ortho_penalty(subspace: &Subspace) -> OrthoPenalty {
    let (k, q) = (subspace.rank(), subspace.dim());
    let mut d = subspace.gram();
    for i in 0..k {
        d[(i, i)] -= 1.0;
    }
    let value = d.frobenius_norm();
    let mut grad = vec![0.0; k * q];
    if value >= 1e-12 {
        for i in 0..k {
            let out = &mut grad[i * q..(i + 1) * q];
            for j in 0..k {
                axpy(2.0 * d[(i, j)] / value, subspace.basis_row(j), out);
            }
        }
    }
    OrthoPenalty { value, grad }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, relative_error};

    fn det(m: &Matrix) -> f64 {
        // Gaussian elimination with partial pivoting
        let n = m.rows();
        let mut a = m.clone();
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs())).unwrap();
            if p != c {
                for j in 0..n {
                    let t = a[(p, j)];
                    a[(p, j)] = a[(c, j)];
                    a[(c, j)] = t;
                }
                det = -det;
            }
            det *= a[(c, c)];
            for r in c + 1..n {
                let f = a[(r, c)] / a[(c, c)];
                for j in c..n {
                    a[(r, j)] -= f * a[(c, j)];
                }
            }
        }
        det
    }

    #[test]
    fn ortho_init_is_orthonormal() {
        let s = init_subspace(5, 12, InitMode::Ortho, 3).unwrap();
        let g = s.gram();
        for i in 0..5 {
            for j in 0..5 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() < 1e-10);
            }
        }
        assert!(ortho_penalty(&s).value < 1e-10);
    }

    #[test]
    fn square_ortho_has_unit_determinant() {
        let s = init_subspace(6, 6, InitMode::Ortho, 17).unwrap();
        assert!((det(&s.basis_matrix()).abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic_and_validated() {
        let a = init_subspace(3, 8, InitMode::Basic, 5).unwrap();
        let b = init_subspace(3, 8, InitMode::Basic, 5).unwrap();
        assert_eq!(a, b);
        assert!(init_subspace(9, 8, InitMode::Basic, 5).is_err());
        assert!(init_subspace(0, 8, InitMode::Ortho, 5).is_err());
    }

    #[test]
    fn hand_penalty() {
        let b = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let p = ortho_penalty(&Subspace::from_matrix(b, InitMode::Basic).unwrap());
        assert!((p.value - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_at_orthonormal() {
        let s = init_subspace(2, 4, InitMode::Ortho, 1).unwrap();
        let p = ortho_penalty(&s);
        assert!(p.value < 1e-12 && p.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = init_subspace(3, 5, InitMode::Basic, 9).unwrap();
        let analytic = ortho_penalty(&s).grad;
        let fd = finite_diff_grad(
            |x| {
                let m = Matrix::from_vec(3, 5, x.to_vec()).unwrap();
                ortho_penalty(&Subspace::from_matrix(m, InitMode::Basic).unwrap()).value
            },
            s.basis(),
            1e-6,
        )
        .unwrap();
        assert!(relative_error(&analytic, &fd) < 1e-4);
    }

    proptest::proptest! {
        #[test]
        fn penalty_invariant_under_rotation(seed in 0u64..300, k in 1usize..4, extra in 0usize..4) {
            let q = k + extra;
            let s = init_subspace(k, q, InitMode::Basic, seed).unwrap();
            let rot = init_subspace(q, q, InitMode::Ortho, seed + 1).unwrap().basis_matrix();
            let rotated = s.basis_matrix().matmul(&rot).unwrap();
            let r = Subspace::from_matrix(rotated, InitMode::Basic).unwrap();
            proptest::prop_assert!((ortho_penalty(&s).value - ortho_penalty(&r).value).abs() < 1e-9);
        }
    }
}
