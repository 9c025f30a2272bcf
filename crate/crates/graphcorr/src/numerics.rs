//! Dense complex-matrix primitives shared by every other module: the working
//! matrix type, the single tolerance knob, numerically ranked basis
//! extraction, and the deterministic phase convention that makes extracted
//! bases reproducible bit-for-bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense complex matrix; every operator in this crate is one of these.
pub type CMatrix = DMatrix<Complex64>;

/// The one tolerance policy. All identities implemented here hold exactly in
/// exact arithmetic, so a single absolute/relative hybrid threshold suffices:
/// `eps` is used as an absolute bound on max-entry residuals and relative to
/// the largest singular value when ranking spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    eps: f64,
}

impl Tolerance {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be a positive finite number, got {eps}"
            )));
        }
        Ok(Tolerance { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: 1e-9 }
    }
}

/// Max-entry norm, the residual norm used throughout.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Max-entry norm of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    let mut acc: f64 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc = acc.max((x - y).norm());
    }
    acc
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput(
            "matrix contains non-finite entries".to_string(),
        ));
    }
    Ok(())
}

/// Rotates a column so its first entry of largest modulus is positive real.
/// This is the phase convention every extracted basis vector obeys; it is what
/// makes repeated extractions bitwise identical.
fn fix_phase(mut col: CMatrix) -> CMatrix {
    let mut best = 0.0;
    let mut arg: Option<Complex64> = None;
    for z in col.iter() {
        let n = z.norm();
        if n > best {
            best = n;
            arg = Some(*z);
        }
    }
    if let Some(z) = arg {
        let phase = z.conj() / z.norm();
        col *= phase;
    }
    col
}

/// `true` iff `m` is a projection: `‖m² − m‖ ≤ eps` and `‖m* − m‖ ≤ eps`
/// in max-entry norm. Errors on non-square input.
pub fn is_projection(m: &CMatrix, tol: &Tolerance) -> Result<bool> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "is_projection requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    let idem = max_abs_diff(&(m * m), m);
    let herm = max_abs_diff(&m.adjoint(), m);
    Ok(idem <= tol.eps() && herm <= tol.eps())
}

/// `true` iff `‖m m* m − m‖ ≤ eps` (max-entry norm). Any shape.
pub fn is_partial_isometry(m: &CMatrix, tol: &Tolerance) -> bool {
    let mmm = m * m.adjoint() * m;
    max_abs_diff(&mmm, m) <= tol.eps()
}

/// Orthonormal basis of range(m), as column vectors.
///
/// Columns are the left singular vectors whose singular values exceed
/// `eps · σ_max`, ordered by descending singular value and phase-fixed, so
/// the output is deterministic. The zero matrix yields an empty list.
pub fn orthonormal_range_basis(m: &CMatrix, tol: &Tolerance) -> Result<Vec<CMatrix>> {
    ensure_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd computed with u");
    let sigma_max = svd.singular_values.max();
    let threshold = tol.eps() * sigma_max;
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > threshold && s > 0.0 {
            let col = CMatrix::from_iterator(u.nrows(), 1, u.column(k).iter().cloned());
            basis.push(fix_phase(col));
        }
    }
    Ok(basis)
}

/// Numerical rank: number of singular values exceeding `eps · σ_max`.
pub fn rank(m: &CMatrix, tol: &Tolerance) -> Result<usize> {
    ensure_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    let sv = m.clone().singular_values();
    let sigma_max = sv.max();
    let threshold = tol.eps() * sigma_max;
    Ok(sv.iter().filter(|&&s| s > threshold && s > 0.0).count())
}

/// Orthonormal basis of the numerical nullspace `{x : ‖Lx‖ ≤ eps·‖L‖·‖x‖}`,
/// by singular-value thresholding; deterministic ordering and phase as in
/// [`orthonormal_range_basis`]. The zero map yields the standard basis.
pub fn nullspace_basis(l: &CMatrix, tol: &Tolerance) -> Result<Vec<CMatrix>> {
    ensure_finite(l)?;
    let n = l.ncols();
    if n == 0 {
        return Ok(Vec::new());
    }
    if l.nrows() == 0 {
        return Ok((0..n)
            .map(|k| {
                let mut e = CMatrix::zeros(n, 1);
                e[(k, 0)] = Complex64::new(1.0, 0.0);
                e
            })
            .collect());
    }
    // nalgebra's SVD is thin; pad with zero rows so all n right singular
    // vectors are available when the matrix is wide.
    let padded = if l.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (l.nrows(), n)).copy_from(l);
        p
    } else {
        l.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let sigma_max = svd.singular_values.max();
    let threshold = tol.eps() * sigma_max;
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= threshold {
            let row = v_t.row(k);
            let col = CMatrix::from_iterator(n, 1, row.iter().map(|z| z.conj()));
            basis.push(fix_phase(col));
        }
    }
    Ok(basis)
}

/// Kronecker product, row-major convention: `vec_r(A X B) = (A ⊗ Bᵀ) vec_r(X)`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Row-major vectorization of a matrix into an `nm×1` column.
pub fn vec_row_major(m: &CMatrix) -> CMatrix {
    let (r, c) = m.shape();
    let mut v = CMatrix::zeros(r * c, 1);
    for i in 0..r {
        for j in 0..c {
            v[(i * c + j, 0)] = m[(i, j)];
        }
    }
    v
}

/// Inverse of [`vec_row_major`].
pub fn unvec_row_major(v: &CMatrix, rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.nrows(), rows * cols, "vector length mismatch in unvec");
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = v[(i * cols + j, 0)];
        }
    }
    m
}

/// Standard complex Gaussian entry (real and imaginary parts N(0, 1/2)).
fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re / 2f64.sqrt(), im / 2f64.sqrt())
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the R
/// diagonal phases absorbed into Q. Deterministic in the RNG state.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `n×n` identity.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn range_basis_identity() {
        let m = identity(2);
        let basis = orthonormal_range_basis(&m, &tol()).unwrap();
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!((b.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn range_basis_zero() {
        let m = CMatrix::zeros(3, 3);
        assert!(orthonormal_range_basis(&m, &tol()).unwrap().is_empty());
    }

    #[test]
    fn range_basis_thresholds_tiny_singular_value() {
        // diag(1, 1e-15): singular values are 1 and 1e-15; at eps = 1e-9 the
        // second falls below eps·σ_max so only one direction survives.
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(1e-15, 0.0),
        ]));
        let basis = orthonormal_range_basis(&m, &tol()).unwrap();
        assert_eq!(basis.len(), 1);
        assert!((basis[0][(0, 0)] - c(1.0, 0.0)).norm() < 1e-9);
        assert!(basis[0][(1, 0)].norm() < 1e-9);
    }

    #[test]
    fn projection_and_partial_isometry_fixtures() {
        let id = identity(2);
        assert!(is_projection(&id, &tol()).unwrap());
        assert!(is_partial_isometry(&id, &tol()));

        let nilpotent = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(!is_projection(&nilpotent, &tol()).unwrap());
        assert!(is_partial_isometry(&nilpotent, &tol()));

        let half = identity(2) * c(0.5, 0.0);
        assert!(!is_projection(&half, &tol()).unwrap());
    }

    #[test]
    fn is_projection_rejects_non_square() {
        let m = CMatrix::zeros(2, 3);
        assert!(is_projection(&m, &tol()).is_err());
    }

    #[test]
    fn nullspace_fixtures() {
        assert!(nullspace_basis(&identity(3), &tol()).unwrap().is_empty());

        let zero = CMatrix::zeros(2, 2);
        let basis = nullspace_basis(&zero, &tol()).unwrap();
        assert_eq!(basis.len(), 2);

        // [[1,1],[0,0]] has nullspace spanned by (1,-1)/sqrt(2); the phase
        // convention makes the first entry positive real.
        let l = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        let basis = nullspace_basis(&l, &tol()).unwrap();
        assert_eq!(basis.len(), 1);
        let s = 1.0 / 2f64.sqrt();
        assert!((basis[0][(0, 0)] - c(s, 0.)).norm() < 1e-12);
        assert!((basis[0][(1, 0)] - c(-s, 0.)).norm() < 1e-12);
    }

    #[test]
    fn nullspace_of_wide_matrix_is_complete() {
        // 1x3 row [1,0,0]: nullspace has dimension 2 even though the thin SVD
        // of the unpadded matrix would only expose one right vector.
        let l = CMatrix::from_row_slice(1, 3, &[c(1., 0.), c(0., 0.), c(0., 0.)]);
        let basis = nullspace_basis(&l, &tol()).unwrap();
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(max_abs(&(&l * b)) < 1e-12);
        }
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = haar_unitary(5, &mut rng);
        let resid = max_abs_diff(&(u.adjoint() * &u), &identity(5));
        assert!(resid < 1e-12, "residual {resid}");

        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let u2 = haar_unitary(5, &mut rng2);
        assert_eq!(u, u2);
    }

    proptest! {
        #[test]
        fn range_basis_invariants(seed in 0u64..200, rows in 1usize..6, cols in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = CMatrix::from_fn(rows, cols, |_, _| super::complex_gaussian(&mut rng));
            let t = tol();
            let basis = orthonormal_range_basis(&m, &t).unwrap();
            if !basis.is_empty() {
                let mut b = CMatrix::zeros(rows, basis.len());
                for (k, col) in basis.iter().enumerate() {
                    b.set_column(k, &col.column(0));
                }
                let gram = b.adjoint() * &b;
                prop_assert!(max_abs_diff(&gram, &identity(basis.len())) <= 10.0 * t.eps());
                let resid = &m - &b * (b.adjoint() * &m);
                prop_assert!(max_abs(&resid) <= 10.0 * t.eps() * max_abs(&m).max(1.0));
            }
        }

        #[test]
        fn extraction_is_bitwise_deterministic(seed in 0u64..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = CMatrix::from_fn(4, 3, |_, _| super::complex_gaussian(&mut rng));
            let t = tol();
            let b1 = orthonormal_range_basis(&m, &t).unwrap();
            let b2 = orthonormal_range_basis(&m, &t).unwrap();
            prop_assert_eq!(b1, b2);
            let n1 = nullspace_basis(&m, &t).unwrap();
            let n2 = nullspace_basis(&m, &t).unwrap();
            prop_assert_eq!(n1, n2);
        }

        #[test]
        fn nullspace_vectors_are_null(seed in 0u64..100, rows in 1usize..5, cols in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Random rank-deficient map: product of thin factors.
            let k = 1 + (seed as usize) % rows.min(cols);
            let a = CMatrix::from_fn(rows, k, |_, _| super::complex_gaussian(&mut rng));
            let b = CMatrix::from_fn(k, cols, |_, _| super::complex_gaussian(&mut rng));
            let l = a * b;
            let t = tol();
            let basis = nullspace_basis(&l, &t).unwrap();
            let norm = max_abs(&l).max(1.0);
            for v in &basis {
                prop_assert!(max_abs(&(&l * v)) <= 100.0 * t.eps() * norm);
            }
            prop_assert!(basis.len() >= cols.saturating_sub(k));
        }
    }
}
