//! From an invariant weight to a unitarizer: the real form
//! `⟨ξ,η⟩′ = ∫ φ (Tξ)(Tη) dm`, its complexification, the principal square
//! root `V`, and the check that every `Vπ(s)V⁻¹` is unitary.

use nalgebra::{Complex, ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{ClaimKind, FactorizationResult};
use crate::group_model::{averaged_gram, check_complex_structure, EquivariantMap, GroupSystem};
use crate::linalg::{frobenius, matrix_to_rows, psd_sqrt_pair, sorted_eigen, symmetrize};
use crate::measure_space::FiniteProbSpace;

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantForm {
    pub gram: DMatrix<f64>,
    /// `max_s ‖π(s)ᵀGπ(s) − G‖_F`.
    pub residual: f64,
}

/// `Gᵣ = Tᵀ diag(m⊙φ) T` for the assembled weight.
pub fn invariant_form(
    fr: &FactorizationResult,
    space: &FiniteProbSpace,
    group: &GroupSystem,
    map: &EquivariantMap,
) -> Result<InvariantForm> {
    space.check("weight", fr.weight.len())?;
    space.check("T rows", map.rows())?;
    let t = map.matrix();
    let w = space.weights();
    let phi = &fr.weight.values;
    let scaled = DMatrix::from_fn(t.nrows(), t.ncols(), |i, j| w[i] * phi[i] * t[(i, j)]);
    let gram = symmetrize(&(t.transpose() * scaled));
    let eig = sorted_eigen(&gram);
    let top = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if !(min > 1e-12 * top.max(f64::MIN_POSITIVE)) {
        let n = gram.nrows();
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
            kernel: (0..n).map(|i| eig.vectors[(i, n - 1)]).collect(),
        });
    }
    let residual = invariance_residual(&gram, group.reps());
    Ok(InvariantForm { gram, residual })
}

fn invariance_residual<T>(gram: &DMatrix<T>, reps: &[DMatrix<T>]) -> f64
where
    T: ComplexField<RealField = f64>,
{
    reps.iter()
        .map(|r| frobenius(&(r.adjoint() * gram * r - gram)))
        .fold(0.0, f64::max)
}

/// Basis `[e_1 … e_k | Je_1 … Je_k]` identifying `ℝ^{2k}` with `ℂ^k`.
fn complex_basis(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_complex_structure(j)?;
    let n = j.nrows();
    let k = n / 2;
    let mut b = DMatrix::zeros(n, n);
    for c in 0..k {
        b[(c, c)] = 1.0;
        b.set_column(k + c, &j.column(c));
    }
    if b.clone().try_inverse().is_none() {
        return Err(Error::NotComplexStructure(
            "the first half of the standard basis is not a complex basis".into(),
        ));
    }
    Ok(b)
}

/// Hermitian form `⟨ξ,η⟩ = ¼{G′(ξ,η) + G′(Jξ,Jη) + iG′(ξ,Jη) − iG′(Jξ,η)}`
/// as the matrix `H` with `⟨ξ,η⟩ = ηᴴHξ`.
pub fn complexify(gram_real: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    if gram_real.shape() != j.shape() {
        return Err(Error::DimensionMismatch {
            what: "real Gram",
            got: gram_real.nrows(),
            expected: j.nrows(),
        });
    }
    let b = complex_basis(j)?;
    let k = j.nrows() / 2;
    let form = |x: usize, jx: bool, y: usize, jy: bool| {
        let u = if jx { j * b.column(x) } else { b.column(x).into_owned() };
        let v = if jy { j * b.column(y) } else { b.column(y).into_owned() };
        u.dot(&(gram_real * v))
    };
    let h = DMatrix::from_fn(k, k, |l, c| {
        // H_{lc} = ⟨e_c, e_l⟩.
        let re = form(c, false, l, false) + form(c, true, l, true);
        let im = form(c, false, l, true) - form(c, true, l, false);
        C64::new(re / 4.0, im / 4.0)
    });
    Ok(h)
}

/// Complex matrix of a `J`-linear real operator in the basis of
/// [`complexify`].
pub fn complex_rep(real: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    let b = complex_basis(j)?;
    let k = j.nrows() / 2;
    let b_inv = b.try_inverse().ok_or(Error::Singular(0.0))?;
    let coords = &b_inv * real * DMatrix::from_fn(j.nrows(), k, |i, c| if i == c { 1.0 } else { 0.0 });
    Ok(DMatrix::from_fn(k, k, |l, c| C64::new(coords[(l, c)], coords[(k + l, c)])))
}

/// Principal square root `V` of a positive definite Hermitian form and its
/// inverse.
pub fn unitarizer<T>(gram: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64>,
{
    psd_sqrt_pair(gram)
}

/// `‖U(s)ᴴU(s) − I‖_F` for `U(s) = Vπ(s)V⁻¹`.
pub fn unitary_residuals<T>(v: &DMatrix<T>, v_inv: &DMatrix<T>, reps: &[DMatrix<T>]) -> Vec<f64>
where
    T: ComplexField<RealField = f64>,
{
    let n = v.nrows();
    reps.iter()
        .map(|r| {
            let u = v * r * v_inv;
            frobenius(&(u.adjoint() * &u - DMatrix::<T>::identity(n, n)))
        })
        .collect()
}

/// The classical average `(1/|Γ|) Σ π(s)ᵀπ(s)`; refused for word balls,
/// where it is not a group average.
pub fn dixmier_average_oracle(g: &GroupSystem) -> Result<DMatrix<f64>> {
    if !g.is_finite() {
        return Err(Error::Unsupported(
            "direct averaging needs a fully enumerated finite group".into(),
        ));
    }
    Ok(averaged_gram(g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DixmierReport {
    pub invariance_residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition_number: f64,
    pub positive_definite: bool,
}

pub fn check_dixmier<T>(gram: &DMatrix<T>, reps: &[DMatrix<T>]) -> DixmierReport
where
    T: ComplexField<RealField = f64>,
{
    let eig = sorted_eigen(gram);
    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    let lambda_min = eig.values.last().copied().unwrap_or(0.0);
    let positive_definite = lambda_min > 0.0;
    DixmierReport {
        invariance_residual: invariance_residual(gram, reps),
        lambda_min,
        lambda_max,
        condition_number: if positive_definite {
            lambda_max / lambda_min
        } else {
            f64::INFINITY
        },
        positive_definite,
    }
}

/// A real or complex matrix as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRows {
    pub re: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl From<&DMatrix<f64>> for MatrixRows {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixRows {
            re: matrix_to_rows(m),
            im: None,
        }
    }
}

impl From<&DMatrix<C64>> for MatrixRows {
    fn from(m: &DMatrix<C64>) -> Self {
        MatrixRows {
            re: matrix_to_rows(&m.map(|z| z.re)),
            im: Some(matrix_to_rows(&m.map(|z| z.im))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementResidual {
    pub element: String,
    pub residual: f64,
}

/// The invariant inner product along one route, with its unitarizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerProductForm {
    pub route: String,
    pub kind: ClaimKind,
    pub gram_real: MatrixRows,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_complex: Option<MatrixRows>,
    pub unitarizer: MatrixRows,
    pub residuals: Vec<ElementResidual>,
    pub worst_residual: f64,
    pub condition_number: f64,
    pub dixmier: DixmierReport,
    pub pass: bool,
}

/// Unitarize `π` with respect to the real form `gram_real`, complexifying
/// first when `j` is given.
pub fn unitarize_form(
    route: &str,
    gram_real: &DMatrix<f64>,
    group: &GroupSystem,
    j: Option<&DMatrix<f64>>,
    tol: f64,
) -> Result<InnerProductForm> {
    let kind = if group.is_finite() {
        ClaimKind::Certified
    } else {
        ClaimKind::Empirical
    };
    let (gram_complex, unitarizer_rows, residuals, dixmier) = match j {
        None => {
            let (v, v_inv) = unitarizer(gram_real)?;
            let res = unitary_residuals(&v, &v_inv, group.reps());
            let dix = check_dixmier(gram_real, group.reps());
            (None, MatrixRows::from(&v), res, dix)
        }
        Some(j) => {
            let h = complexify(gram_real, j)?;
            let reps = group
                .reps()
                .iter()
                .map(|r| complex_rep(r, j))
                .collect::<Result<Vec<_>>>()?;
            let (v, v_inv) = unitarizer(&h)?;
            let res = unitary_residuals(&v, &v_inv, &reps);
            let dix = check_dixmier(&h, &reps);
            (Some(MatrixRows::from(&h)), MatrixRows::from(&v), res, dix)
        }
    };
    let worst_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(InnerProductForm {
        route: route.to_string(),
        kind,
        gram_real: MatrixRows::from(gram_real),
        gram_complex,
        unitarizer: unitarizer_rows,
        residuals: residuals
            .iter()
            .enumerate()
            .map(|(s, &residual)| ElementResidual {
                element: group.name(s).to_string(),
                residual,
            })
            .collect(),
        worst_residual,
        condition_number: dixmier.condition_number,
        pass: worst_residual <= tol && dixmier.invariance_residual <= tol,
        dixmier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::standard_complex_structure;
    use crate::linalg::max_abs;

    fn z2() -> GroupSystem {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, -1.0]);
        GroupSystem::cyclic(2, p, vec![1, 0]).unwrap()
    }

    #[test]
    fn complexify_identity_gives_half() {
        let j = standard_complex_structure(2).unwrap();
        let h = complexify(&DMatrix::identity(2, 2), &j).unwrap();
        assert!((h[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn complexify_is_sesquilinear() {
        let j = standard_complex_structure(4).unwrap();
        let a = DMatrix::from_fn(4, 4, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0);
        let g = a.transpose() * &a + DMatrix::identity(4, 4);
        let h = complexify(&g, &j).unwrap();
        assert!(max_abs(&(&h - h.adjoint())) < 1e-12);
        // Norm relation ‖ξ‖² = ¼G′(ξ,ξ) + ¼G′(Jξ,Jξ) for ξ = e_0.
        let e = DMatrix::from_fn(4, 1, |r, _| if r == 0 { 1.0 } else { 0.0 });
        let je = &j * &e;
        let expect = 0.25 * (e.transpose() * &g * &e)[(0, 0)] + 0.25 * (je.transpose() * &g * &je)[(0, 0)];
        assert!((h[(0, 0)].re - expect).abs() < 1e-12);
    }

    #[test]
    fn complexify_rejects_bad_structure() {
        assert!(complexify(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn unitarizer_examples() {
        let g = z2();
        let gram = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.5]);
        let (v, vi) = unitarizer(&gram).unwrap();
        assert!(unitary_residuals(&v, &vi, g.reps()).iter().all(|&r| r <= 1e-12));

        let (v, _) = unitarizer(&DMatrix::<f64>::identity(2, 2)).unwrap();
        assert!(max_abs(&(v - DMatrix::identity(2, 2))) < 1e-15);

        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        let (v, vi) = unitarizer(&d).unwrap();
        assert!((v[(0, 0)] - 2.0).abs() < 1e-14 && (v[(1, 1)] - 1.0).abs() < 1e-14);
        let flip = GroupSystem::cyclic(
            2,
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0])),
            vec![0],
        )
        .unwrap();
        assert!(unitary_residuals(&v, &vi, flip.reps()).iter().all(|&r| r < 1e-14));
    }

    #[test]
    fn dixmier_examples() {
        let g = z2();
        let oracle = dixmier_average_oracle(&g).unwrap();
        assert!(max_abs(&(&oracle - DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.5]))) < 1e-15);
        let rep = check_dixmier(&oracle, g.reps());
        assert!(rep.invariance_residual <= 1e-12);
        let five = 5f64.sqrt();
        assert!((rep.condition_number - (5.0 + five) / (5.0 - five)).abs() < 1e-12);

        let bad = check_dixmier(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]), g.reps());
        assert!(bad.invariance_residual > 0.1);

        let id = check_dixmier(&DMatrix::<f64>::identity(3, 3), GroupSystem::trivial(3, 1).reps());
        assert_eq!((id.invariance_residual, id.condition_number), (0.0, 1.0));
    }

    #[test]
    fn complex_rep_of_rotation_is_phase() {
        // Rotation by θ on ℝ² is multiplication by e^{iθ} on ℂ.
        let (s, c) = (0.3f64.sin(), 0.3f64.cos());
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let j = standard_complex_structure(2).unwrap();
        let z = complex_rep(&r, &j).unwrap();
        assert!((z[(0, 0)] - C64::new(c, s)).norm() < 1e-15);
    }
}
