//! Orthonormal bases of the horizontal space at a pre-shape.
//!
//! The ambient tangent space at a pre-shape `Z` splits orthogonally into the
//! radial line `span{Z}`, the vertical space spanned by `Z L_x, Z L_y, Z L_z`,
//! and the horizontal space `H_Z`, which models the tangent space of the
//! shape space. `H_Z` is computed as the kernel of the self-adjoint
//! endomorphism
//!
//! ```text
//! f(A) = <A, Z> Z + sum_a <A, Z L_a> Z L_a
//! ```
//!
//! via a symmetric eigendecomposition of its matrix representation.
//!
//! Flattening convention: a `(k-1) x 3` matrix maps to a vector of length
//! `3(k-1)` row by row (contrast row first, then coordinate column). The
//! entries of [`ProjectorMatrix`] are indexed in this flattened basis.
//!
//! Eigenvector order and sign are not canonical across platforms: a
//! [`HorizontalBasis`] is deterministic for a given build but only
//! span-canonical across implementations. Code that must be reproducible
//! against other implementations should compare spans or coordinates, not
//! raw basis vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ShapeError};
use crate::shape::{frobenius_dot, vertical_frame, AmbientVector, PreShape};

/// Default relative eigenvalue cut-off separating the kernel of `f` from its
/// rank-4 range.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

/// Tolerance on the horizontality preconditions of the coordinate maps.
pub const HORIZONTALITY_TOL: f64 = 1e-8;

/// Matrix representation of the endomorphism `f` in the flattened canonical
/// basis: symmetric, positive semi-definite, rank 4 away from singular
/// shapes.
#[derive(Debug, Clone)]
pub struct ProjectorMatrix {
    m: DMatrix<f64>,
}

impl ProjectorMatrix {
    /// The `3(k-1) x 3(k-1)` symmetric matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Applies `f` to an ambient vector.
    pub fn apply(&self, v: &AmbientVector) -> AmbientVector {
        let rows = v.nrows();
        unflatten(&(&self.m * flatten(v)), rows)
    }
}

/// An ordered orthonormal basis `t_1, ..., t_d` of the horizontal space at a
/// pre-shape, `d = 3k - 7`.
#[derive(Debug, Clone)]
pub struct HorizontalBasis {
    base_point: PreShape,
    vectors: Vec<AmbientVector>,
}

impl HorizontalBasis {
    /// The pre-shape the basis is attached to.
    pub fn base_point(&self) -> &PreShape {
        &self.base_point
    }

    /// The basis vectors in ascending-eigenvalue order.
    pub fn vectors(&self) -> &[AmbientVector] {
        &self.vectors
    }

    /// Intrinsic dimension `3k - 7`.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

/// Flattens a `(k-1) x 3` matrix row-major into a vector of length `3(k-1)`.
pub fn flatten(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(a.nrows() * a.ncols(), |i, _| {
        a[(i / a.ncols(), i % a.ncols())]
    })
}

/// Inverse of [`flatten`] for matrices with 3 columns.
pub fn unflatten(v: &DVector<f64>, rows: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), rows * 3, "flattened length must be 3 * rows");
    DMatrix::from_fn(rows, 3, |r, c| v[r * 3 + c])
}

/// Builds the matrix of `f` as the sum of outer products of the four
/// flattened vectors `Z, Z L_x, Z L_y, Z L_z`.
///
/// Those four vectors are linearly independent whenever `rank(Z) >= 2`,
/// which the [`PreShape`] invariant guarantees, so the kernel of the result
/// is exactly the horizontal space.
pub fn endomorphism_matrix(z: &PreShape) -> Result<ProjectorMatrix> {
    let n = z.matrix().nrows() * 3;
    let frame = vertical_frame(z);
    let mut m = DMatrix::zeros(n, n);
    let flat_z = flatten(z.matrix());
    m += &flat_z * flat_z.transpose();
    for w in frame.vectors() {
        let fw = flatten(w);
        m += &fw * fw.transpose();
    }
    Ok(ProjectorMatrix { m })
}

/// Orthonormal basis of the horizontal space as the kernel of `f`.
///
/// Eigenvectors of the projector matrix whose eigenvalue is below
/// `zero_tol * lambda_max` are un-flattened and returned in
/// ascending-eigenvalue order. A kernel dimension other than `3k - 7` means
/// the shape is too close to the singular set for the cut-off to separate
/// kernel from range, and is reported as an error.
pub fn horizontal_basis(z: &PreShape, zero_tol: f64) -> Result<HorizontalBasis> {
    if !(zero_tol > 0.0 && zero_tol < 1.0) {
        return Err(ShapeError::InvalidArgument(format!(
            "zero_tol must lie in (0, 1), got {zero_tol}"
        )));
    }
    let projector = endomorphism_matrix(z)?;
    let rows = z.matrix().nrows();
    let eig = projector.m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda_max = eig.eigenvalues[*order.last().expect("non-empty spectrum")];
    let expected = z.shape_dim();

    let vectors: Vec<AmbientVector> = order
        .iter()
        .copied()
        .take_while(|&i| eig.eigenvalues[i] < zero_tol * lambda_max)
        .map(|i| unflatten(&eig.eigenvectors.column(i).into_owned(), rows))
        .collect();
    if vectors.len() != expected {
        return Err(ShapeError::SingularShape(format!(
            "kernel dimension {} differs from 3k - 7 = {} (shape too close to the singular set)",
            vectors.len(),
            expected
        )));
    }
    Ok(HorizontalBasis {
        base_point: z.clone(),
        vectors,
    })
}

/// Coordinates of a horizontal vector in an orthonormal basis:
/// `c_i = <V, t_i>`.
///
/// `v` must be horizontal at the basis point within 1e-8; the measured
/// violation is reported otherwise.
pub fn coordinates(v: &AmbientVector, basis: &HorizontalBasis) -> Result<DVector<f64>> {
    check_horizontal(v, basis.base_point(), HORIZONTALITY_TOL)?;
    Ok(DVector::from_fn(basis.dim(), |i, _| {
        frobenius_dot(v, &basis.vectors[i])
    }))
}

/// Reassembles an ambient vector from coordinates: `V = sum_i c_i t_i`.
pub fn from_coordinates(c: &DVector<f64>, basis: &HorizontalBasis) -> Result<AmbientVector> {
    if c.len() != basis.dim() {
        return Err(ShapeError::DimensionMismatch {
            expected: basis.dim(),
            found: c.len(),
        });
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(ShapeError::InvalidArgument(
            "coordinates contain non-finite entries".into(),
        ));
    }
    let rows = basis.base_point().matrix().nrows();
    let mut out = DMatrix::zeros(rows, 3);
    for (ci, ti) in c.iter().zip(&basis.vectors) {
        out += ti * *ci;
    }
    Ok(out)
}

/// Removes the radial and vertical components of an ambient vector, leaving
/// its horizontal part.
///
/// The span `{Z, Z L_x, Z L_y, Z L_z}` is orthonormalized by modified
/// Gram-Schmidt before projecting, so the operation is a true orthogonal
/// projection and therefore idempotent.
pub fn horizontal_project(v: &AmbientVector, z: &PreShape) -> Result<AmbientVector> {
    let frame = orthonormal_span_frame(z)?;
    let mut out = v.clone();
    for q in &frame {
        let c = frobenius_dot(&out, q);
        out -= q * c;
    }
    Ok(out)
}

/// Norm of the non-horizontal component of `v` at `z`.
pub(crate) fn horizontality_violation(v: &AmbientVector, z: &PreShape) -> Result<f64> {
    let frame = orthonormal_span_frame(z)?;
    Ok(frame
        .iter()
        .map(|q| frobenius_dot(v, q).powi(2))
        .sum::<f64>()
        .sqrt())
}

pub(crate) fn check_horizontal(v: &AmbientVector, z: &PreShape, tol: f64) -> Result<()> {
    let violation = horizontality_violation(v, z)?;
    if violation > tol * v.norm().max(1.0) {
        return Err(ShapeError::NotHorizontal { violation, tol });
    }
    Ok(())
}

/// Orthonormalizes `{Z, Z L_x, Z L_y, Z L_z}` by modified Gram-Schmidt.
fn orthonormal_span_frame(z: &PreShape) -> Result<[AmbientVector; 4]> {
    let frame = vertical_frame(z);
    let raw = [z.matrix().clone(), frame.w1, frame.w2, frame.w3];
    let mut ortho: Vec<AmbientVector> = Vec::with_capacity(4);
    for mut candidate in raw {
        for q in &ortho {
            let c = frobenius_dot(&candidate, q);
            candidate -= q * c;
        }
        let n = candidate.norm();
        if n <= 1e-12 {
            return Err(ShapeError::SingularShape(
                "radial/vertical span has rank below 4".into(),
            ));
        }
        ortho.push(candidate / n);
    }
    Ok(ortho.try_into().expect("exactly four frame vectors"))
}
