//! Small dense helpers shared by the solver and the unitarization code.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric (Hermitian) matrix with eigenvalues
/// sorted in descending order.
pub struct SortedEigen<T: ComplexField> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

pub fn sorted_eigen<T>(m: &DMatrix<T>) -> SortedEigen<T>
where
    T: ComplexField<RealField = f64>,
{
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let n = m.nrows();
    let mut vectors = DMatrix::<T>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SortedEigen {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors,
    }
}

/// `(m + mᴴ) / 2`.
pub fn symmetrize<T>(m: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let half = T::from_real(0.5);
    (m + m.adjoint()) * half
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sorted_eigen(m).values[0]
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().min()
}

/// Principal square root and inverse square root of a Hermitian positive
/// definite matrix. Eigenvalues are floored at `1e-14` before taking roots.
pub fn psd_sqrt_pair<T>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64>,
{
    let eig = sorted_eigen(m);
    let n = m.nrows();
    let min = eig.values.last().copied().unwrap_or(0.0);
    if n > 0 && min <= 0.0 {
        let kernel = (0..n).map(|i| eig.vectors[(i, n - 1)].clone().real()).collect();
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
            kernel,
        });
    }
    let mut root = DMatrix::<T>::zeros(n, n);
    let mut inv_root = DMatrix::<T>::zeros(n, n);
    for k in 0..n {
        let lam = eig.values[k].max(1e-14);
        let v = eig.vectors.column(k).into_owned();
        let outer = &v * v.adjoint();
        root += &outer * T::from_real(lam.sqrt());
        inv_root += outer * T::from_real(1.0 / lam.sqrt());
    }
    Ok((root, inv_root))
}

/// Largest absolute entry.
pub fn max_abs<T>(m: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64>,
{
    m.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

pub fn frobenius<T>(m: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64>,
{
    m.iter()
        .map(|x| x.clone().modulus_squared())
        .sum::<f64>()
        .sqrt()
}

pub fn check_finite(what: &'static str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    for r in rows {
        if r.len() != ncols {
            return Err(Error::DimensionMismatch {
                what: "matrix row",
                got: r.len(),
                expected: ncols,
            });
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}
