//! Singular values, condition numbers, distances to spans and the unit
//! normal of a hyperplane.
//!
//! The full spectrum comes from nalgebra's bidiagonalisation SVD; the tests
//! check it against an independent Jacobi eigensolver on `MᵀM`.

use nalgebra::DMatrix;

use crate::error::ensure;
use crate::{ComplexMatrix, Error, RealMatrix, RealVector, Result};

/// Relative threshold below which a basis is treated as rank-deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Singular values in nonincreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
}

impl SingularSpectrum {
    fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        Self { values }
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `s₁ / s_n`, infinite for a rank-deficient matrix.
    pub fn condition_number(&self) -> f64 {
        let s_min = self.smallest();
        if s_min == 0.0 {
            f64::INFINITY
        } else {
            self.largest() / s_min
        }
    }
}

fn check_finite<'a>(entries: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    ensure!(
        entries.into_iter().all(|x| x.is_finite()),
        Validation,
        "matrix has non-finite entries"
    );
    Ok(())
}

pub fn singular_values(m: &RealMatrix) -> Result<SingularSpectrum> {
    check_finite(m.iter())?;
    if m.is_empty() {
        return Ok(SingularSpectrum { values: vec![] });
    }
    Ok(SingularSpectrum::from_unsorted(
        m.clone().singular_values().iter().copied().collect(),
    ))
}

pub fn singular_values_complex(m: &ComplexMatrix) -> Result<SingularSpectrum> {
    check_finite(m.iter().flat_map(|z| [&z.re, &z.im]))?;
    if m.is_empty() {
        return Ok(SingularSpectrum { values: vec![] });
    }
    Ok(SingularSpectrum::from_unsorted(
        m.clone().singular_values().iter().copied().collect(),
    ))
}

/// `s_n(M) = min_{x ∈ S^{n-1}} ‖Mx‖₂` for a tall or square `M`.
pub fn smallest_singular_value(m: &RealMatrix) -> Result<f64> {
    ensure!(
        m.nrows() >= m.ncols(),
        Dimension,
        "smallest singular value needs N >= n, got {}x{}",
        m.nrows(),
        m.ncols()
    );
    Ok(singular_values(m)?.smallest())
}

pub fn smallest_singular_value_complex(m: &ComplexMatrix) -> Result<f64> {
    ensure!(
        m.nrows() >= m.ncols(),
        Dimension,
        "smallest singular value needs N >= n, got {}x{}",
        m.nrows(),
        m.ncols()
    );
    Ok(singular_values_complex(m)?.smallest())
}

pub fn condition_number(m: &RealMatrix) -> Result<f64> {
    Ok(singular_values(m)?.condition_number())
}

/// Verification mode: `‖MᵀM − VΣ²Vᵀ‖_max / s₁²` from a full SVD.
pub fn reconstruction_residual(m: &RealMatrix) -> Result<f64> {
    check_finite(m.iter())?;
    let svd = m.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Validation("SVD did not return V".into()))?;
    let s2 = DMatrix::from_diagonal(&svd.singular_values.map(|s| s * s));
    let gram = m.transpose() * m;
    let rebuilt = v_t.transpose() * s2 * &v_t;
    let s1 = svd.singular_values.max();
    if s1 == 0.0 {
        return Ok(gram.amax());
    }
    Ok((gram - rebuilt).amax() / (s1 * s1))
}

/// Operator norm by power iteration on `MᵀM`.
pub fn operator_norm_power(m: &RealMatrix, max_iter: usize, tol: f64) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let gram = m.transpose() * m;
    // Deterministic start with no special alignment to coordinate axes.
    let mut x = RealVector::from_iterator(n, (0..n).map(|i| 1.0 + 0.1 * (i as f64 + 1.0).sin()));
    x /= x.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = &gram * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = x.dot(&y);
        x = y / norm;
        if (next - lambda).abs() <= tol * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// Orthonormal basis of the span of `vectors` (modified Gram-Schmidt, two
/// passes). Vectors whose residual falls below `RANK_TOL` times the largest
/// input norm are dropped.
pub fn orthonormal_basis(vectors: &[RealVector]) -> Vec<RealVector> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<RealVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm > RANK_TOL * scale && norm > 0.0 {
            basis.push(r / norm);
        }
    }
    basis
}

/// Euclidean distance from `x` to the linear span of `basis`.
pub fn distance_to_span(x: &RealVector, basis: &[RealVector]) -> Result<f64> {
    ensure!(
        basis.iter().all(|b| b.len() == x.len()),
        Dimension,
        "basis vectors must have the dimension of x ({})",
        x.len()
    );
    let q = orthonormal_basis(basis);
    let mut r = x.clone();
    for _ in 0..2 {
        for qi in &q {
            let c = qi.dot(&r);
            r.axpy(-c, qi, 1.0);
        }
    }
    Ok(r.norm())
}

/// Unit vector orthogonal to `n - 1` linearly independent vectors of `Rⁿ`,
/// with its first nonzero coordinate positive.
pub fn random_normal_vector(columns: &[RealVector]) -> Result<RealVector> {
    let n = columns.len() + 1;
    ensure!(
        columns.iter().all(|c| c.len() == n),
        Dimension,
        "expected {} vectors of dimension {}, got dimension {:?}",
        n - 1,
        n,
        columns.first().map(|c| c.len())
    );
    if n == 1 {
        return Ok(RealVector::from_element(1, 1.0));
    }
    let stacked = RealMatrix::from_columns(columns);
    let spectrum = singular_values(&stacked)?;
    ensure!(
        spectrum.largest() > 0.0 && spectrum.smallest() >= RANK_TOL * spectrum.largest(),
        Degenerate,
        "columns are rank-deficient (s_min/s_max = {:e})",
        spectrum.smallest() / spectrum.largest().max(f64::MIN_POSITIVE)
    );
    let q = orthonormal_basis(columns);
    ensure!(q.len() == n - 1, Degenerate, "columns are rank-deficient");
    normal_from_orthonormal(&q, n)
}

/// Complement direction of an orthonormal family of `n - 1` vectors.
pub(crate) fn normal_from_orthonormal(q: &[RealVector], n: usize) -> Result<RealVector> {
    let project_out = |mut r: RealVector| {
        for _ in 0..2 {
            for qi in q {
                let c = qi.dot(&r);
                r.axpy(-c, qi, 1.0);
            }
        }
        r
    };
    // The standard basis vector with the largest residual is the best seed.
    let mut best: Option<RealVector> = None;
    let mut best_norm = -1.0;
    for i in 0..n {
        let mut e = RealVector::zeros(n);
        e[i] = 1.0;
        let r = project_out(e);
        let norm = r.norm();
        if norm > best_norm {
            best_norm = norm;
            best = Some(r);
        }
    }
    let mut z = best.ok_or_else(|| Error::Degenerate("empty dimension".into()))?;
    ensure!(best_norm > 1e-8, Degenerate, "no orthogonal complement found");
    z /= best_norm;
    z = project_out(z);
    let norm = z.norm();
    z /= norm;
    if let Some(first) = z.iter().find(|v| v.abs() > 1e-14) {
        if *first < 0.0 {
            z.neg_mut();
        }
    }
    Ok(z)
}

/// Columns of a matrix as owned vectors.
pub fn columns_of(m: &RealMatrix) -> Vec<RealVector> {
    m.column_iter().map(|c| c.into_owned()).collect()
}

/// Rows of a matrix as owned column vectors.
pub fn rows_of(m: &RealMatrix) -> Vec<RealVector> {
    m.row_iter().map(|r| r.transpose().into_owned()).collect()
}
