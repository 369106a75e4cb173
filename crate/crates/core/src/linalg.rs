//! Small dense complex linear algebra shared by the state, entanglement and
//! tomography code. Everything here works on fixed-size 2x2 / 4x4 matrices.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Ket2 = Vector2<C64>;
pub type Ket4 = Vector4<C64>;

/// Eigenvalues below this (relative to the largest) are treated as zero when
/// taking matrix square roots.
pub const SQRT_CLIP: f64 = 1e-14;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(r(0.0), r(1.0), r(1.0), r(0.0))
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0))
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(r(1.0), r(0.0), r(0.0), r(-1.0))
}

/// `[I, X, Y, Z]`.
pub fn paulis() -> [Mat2; 4] {
    [Mat2::identity(), pauli_x(), pauli_y(), pauli_z()]
}

/// Kronecker product `a ⊗ b`, first factor is qubit 1 (the slow index).
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

pub fn kron_ket(a: &Ket2, b: &Ket2) -> Ket4 {
    Ket4::from_fn(|i, _| a[i / 2] * b[i % 2])
}

pub fn projector(v: &Ket4) -> Mat4 {
    v * v.adjoint()
}

/// Partial transpose over the second qubit.
pub fn partial_transpose_b(m: &Mat4) -> Mat4 {
    Mat4::from_fn(|row, col| {
        let (i, j) = (row / 2, row % 2);
        let (k, l) = (col / 2, col % 2);
        m[(2 * i + l, 2 * k + j)]
    })
}

/// Eigen-decomposition of a Hermitian 4x4 matrix, eigenvalues sorted in
/// descending order with the eigenvector columns permuted to match.
pub fn eigh(m: &Mat4) -> ([f64; 4], Mat4) {
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.map(|k| eig.eigenvalues[k]);
    let vecs = Mat4::from_fn(|i, j| eig.eigenvectors[(i, idx[j])]);
    (vals, vecs)
}

pub fn eigvalsh(m: &Mat4) -> [f64; 4] {
    eigh(m).0
}

pub fn hermitian_part(m: &Mat4) -> Mat4 {
    (m + m.adjoint()) * r(0.5)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Negative and numerically-zero eigenvalues are clipped to zero.
pub fn sqrt_psd(m: &Mat4) -> Mat4 {
    let (vals, vecs) = eigh(m);
    let top = vals[0].abs().max(f64::MIN_POSITIVE);
    let d = Mat4::from_diagonal(&Ket4::from_fn(|i, _| {
        let v = vals[i];
        if v <= SQRT_CLIP * top {
            r(0.0)
        } else {
            r(v.sqrt())
        }
    }));
    vecs * d * vecs.adjoint()
}

/// A factor `X` with `X X† = m` for PSD `m` (columns are `√λ_i v_i`).
pub fn psd_factor(m: &Mat4) -> Mat4 {
    let (vals, vecs) = eigh(m);
    let top = vals[0].abs().max(f64::MIN_POSITIVE);
    Mat4::from_fn(|i, j| {
        let v = vals[j];
        if v <= SQRT_CLIP * top {
            r(0.0)
        } else {
            vecs[(i, j)] * v.sqrt()
        }
    })
}

/// Largest absolute element of `a - b`.
pub fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace_re(m: &Mat4) -> f64 {
    m.trace().re
}

/// Real part of `Tr(a b)` without forming the product.
pub fn trace_product_re(a: &Mat4, b: &Mat4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Mat4) -> f64 {
    m.singular_values().iter().sum()
}
