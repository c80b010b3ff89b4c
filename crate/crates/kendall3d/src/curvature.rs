//! The SVD-adapted Kendall basis and closed-form sectional curvature.
//!
//! Sectional curvature of the 3D shape space along a plane spanned by
//! orthonormal horizontal vectors `u, v` is
//!
//! ```text
//! K(u, v) = 1 + (3/4) |[u, v]^V|^2
//! ```
//!
//! where `[u, v]^V` is the vertical part of the Lie bracket of horizontal
//! extensions. That bracket has no convenient expression for arbitrary
//! vectors, but it does for the adapted basis built from the pseudo-singular
//! value decomposition of the pre-shape: in the basis
//! `{d/d lambda_2, d/d lambda_3}` plus `{xi_ij}`, every pairwise bracket is
//! a known multiple of one of three vertical directions `eta_12, eta_13,
//! eta_23` with `|eta_ij|^2 = lambda_i^2 + lambda_j^2`. Curvature evaluation
//! is therefore: express `u, v` in the Kendall basis, accumulate the
//! commutator table bilinearly, and take the weighted coefficient norm.
//!
//! The decomposition uses pseudo-singular values: `det V = +1` is enforced
//! and `lambda_3` carries a sign instead, because the shape space quotients
//! by rotations only, never reflections.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Result, ShapeError};
use crate::shape::{frobenius_dot, mul_right3, AmbientVector, Configuration, PreShape};
use crate::tangent::check_horizontal;

/// Pseudo-singular values closer than this (in the squares) make the
/// `xi_ij` construction degenerate and are rejected.
pub const SPECTRUM_TOL: f64 = 1e-8;

/// Gram condition numbers above this abort coordinate computation.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Tolerance on the horizontality preconditions.
pub const HORIZONTALITY_TOL: f64 = 1e-8;

/// Pseudo-singular value decomposition of a pre-shape `Z = U S V^T` with
/// `U` orthogonal `(k-1) x (k-1)`, `S` the `(k-1) x 3` matrix carrying
/// `lambda_1 >= lambda_2 >= |lambda_3|` on its diagonal, and `V` a rotation.
#[derive(Debug, Clone)]
pub struct SvdData {
    u_mat: DMatrix<f64>,
    lambdas: [f64; 3],
    v_mat: Matrix3<f64>,
}

impl SvdData {
    /// Full orthogonal left factor.
    pub fn u_mat(&self) -> &DMatrix<f64> {
        &self.u_mat
    }

    /// Pseudo-singular values; the third may be negative.
    pub fn lambdas(&self) -> [f64; 3] {
        self.lambdas
    }

    /// Right rotation factor, `det = +1`.
    pub fn v_mat(&self) -> &Matrix3<f64> {
        &self.v_mat
    }

    /// Rebuilds `U S V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.u_mat.nrows();
        let mut sigma = DMatrix::zeros(n, 3);
        for i in 0..3 {
            sigma[(i, i)] = self.lambdas[i];
        }
        mul_right3(&(&self.u_mat * sigma), &self.v_mat.transpose())
    }
}

/// Label of a Kendall basis vector: a pseudo-singular-value direction
/// `d/d lambda_i` (`i` in 2..=3) or an off-diagonal direction `xi_{i j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    DLambda(usize),
    Xi(usize, usize),
}

impl std::fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisLabel::DLambda(i) => write!(f, "dl{i}"),
            BasisLabel::Xi(i, j) => write!(f, "xi{i}_{j}"),
        }
    }
}

impl std::str::FromStr for BasisLabel {
    type Err = ShapeError;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || {
            ShapeError::InvalidArgument(format!(
                "unknown basis label `{s}` (expected dl2, dl3, or xi<i>_<j>)"
            ))
        };
        if let Some(rest) = s.strip_prefix("dl") {
            let i: usize = rest.parse().map_err(|_| invalid())?;
            if i == 2 || i == 3 {
                return Ok(BasisLabel::DLambda(i));
            }
            return Err(invalid());
        }
        if let Some(rest) = s.strip_prefix("xi") {
            let (a, b) = rest.split_once('_').ok_or_else(invalid)?;
            let i: usize = a.parse().map_err(|_| invalid())?;
            let j: usize = b.parse().map_err(|_| invalid())?;
            if i >= 1 && i < j && i <= 3 {
                return Ok(BasisLabel::Xi(i, j));
            }
            return Err(invalid());
        }
        Err(invalid())
    }
}

/// The adapted Kendall basis at a pre-shape, together with the Gram data
/// needed to take coordinates in it.
///
/// The basis vectors are kept exactly as constructed (unnormalized): the
/// `d/d lambda` directions are not mutually orthogonal in general
/// (`<W_22, W_33> = lambda_2 lambda_3 / lambda_1^2`), so coordinates go
/// through the Gram system instead of assuming orthonormality.
#[derive(Debug, Clone)]
pub struct KendallBasis {
    base_point: PreShape,
    svd: SvdData,
    labels: Vec<BasisLabel>,
    vectors: Vec<AmbientVector>,
    gram: DMatrix<f64>,
    gram_cholesky: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    gram_condition: f64,
}

impl KendallBasis {
    /// The pre-shape reconstructed from the decomposition.
    pub fn base_point(&self) -> &PreShape {
        &self.base_point
    }

    pub fn svd(&self) -> &SvdData {
        &self.svd
    }

    /// Labels in list order: `dl2, dl3, xi1_2, xi1_3, xi2_3`, then the
    /// `xi_{i j}` with `j > 3` grouped by `i`.
    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    /// Basis vectors in label order.
    pub fn vectors(&self) -> &[AmbientVector] {
        &self.vectors
    }

    /// Total count `3k - 7`.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Condition number of the Gram matrix of the basis.
    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Position of a label in the list.
    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Vector for a label, if the label exists at this `k`.
    pub fn vector_for(&self, label: &BasisLabel) -> Option<&AmbientVector> {
        self.index_of(label).map(|i| &self.vectors[i])
    }
}

/// Coefficients of the vertical bracket on the canonical vertical frame
/// `eta_12, eta_13, eta_23`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketCoefficients {
    pub c12: f64,
    pub c13: f64,
    pub c23: f64,
}

impl BracketCoefficients {
    pub fn zero() -> Self {
        BracketCoefficients {
            c12: 0.0,
            c13: 0.0,
            c23: 0.0,
        }
    }
}

/// Pseudo-singular value decomposition of a pre-shape.
///
/// The left factor comes from a symmetric eigendecomposition of `Z Z^T`
/// (which directly yields the full `(k-1) x (k-1)` orthogonal matrix), the
/// right factor from orthonormalizing the rows of `U^T Z`; its third column
/// is completed as `v1 x v2`, so `det V = +1` holds by construction and
/// `lambda_3 = <row_3, v3>` picks up the reflection sign.
pub fn kendall_svd(z: &PreShape) -> Result<SvdData> {
    let zm = z.matrix();
    let n = zm.nrows();
    let zzt = zm * zm.transpose();
    let eig = zzt.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut u = DMatrix::zeros(n, n);
    for (pos, &i) in order.iter().enumerate() {
        u.set_column(pos, &eig.eigenvectors.column(i));
    }

    // descending eigenvalues give descending row norms of U^T Z up to
    // round-off; re-sort the leading three to pin the ordering invariant
    let b0 = u.transpose() * zm;
    let norm_of = |m: &DMatrix<f64>, i: usize| {
        (m[(i, 0)].powi(2) + m[(i, 1)].powi(2) + m[(i, 2)].powi(2)).sqrt()
    };
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &c| norm_of(&b0, c).total_cmp(&norm_of(&b0, a)));
    if idx != [0, 1, 2] {
        let copy = u.clone();
        for (pos, &i) in idx.iter().enumerate() {
            u.set_column(pos, &copy.column(i));
        }
    }

    let b = u.transpose() * zm;
    let row = |i: usize| Vector3::new(b[(i, 0)], b[(i, 1)], b[(i, 2)]);

    let r0 = row(0);
    let lambda1 = r0.norm();
    if lambda1 <= SPECTRUM_TOL {
        return Err(ShapeError::SingularShape(
            "leading pseudo-singular value vanishes".into(),
        ));
    }
    let v1 = r0 / lambda1;
    let mut r1 = row(1);
    r1 -= v1 * v1.dot(&r1);
    let lambda2 = r1.norm();
    if lambda2 <= SPECTRUM_TOL {
        return Err(ShapeError::SingularShape(format!(
            "second pseudo-singular value {lambda2:.3e} is at or below {SPECTRUM_TOL:.1e}"
        )));
    }
    let v2 = r1 / lambda2;
    let v3 = v1.cross(&v2);
    let lambda3 = row(2).dot(&v3);

    Ok(SvdData {
        u_mat: u,
        lambdas: [lambda1, lambda2, lambda3],
        v_mat: Matrix3::from_columns(&[v1, v2, v3]),
    })
}

/// Builds the Kendall basis `{d/d lambda_i}` plus `{xi_ij}` from a
/// decomposition.
///
/// The `W` matrices live on the `3 x (k-1)` side of the decomposition; each
/// basis vector is `U W^T V^T`, sized `(k-1) x 3` like the pre-shape itself:
///
/// - `W_ii = E_ii - (lambda_i / lambda_1) E_11` gives `d/d lambda_i`,
/// - `W_ij = lambda_i E_ij + lambda_j E_ji` scaled by
///   `(lambda_i^2 - lambda_j^2) / (lambda_i^2 + lambda_j^2)` gives `xi_ij`
///   for `i < j <= 3`,
/// - `W_ij = lambda_i E_ij` scaled by `lambda_i` gives `xi_ij` for `j > 3`.
///
/// Repeated pseudo-singular values (`|lambda_i^2 - lambda_j^2| <= 1e-8`)
/// are rejected rather than regularized: the basis is genuinely singular
/// there and silent regularization would corrupt curvature values.
pub fn get_xi_basis(svd: &SvdData, k: usize) -> Result<KendallBasis> {
    if k < 4 || k != svd.u_mat.nrows() + 1 {
        return Err(ShapeError::InvalidArgument(format!(
            "landmark count {k} does not match the decomposition ({} rows)",
            svd.u_mat.nrows()
        )));
    }
    let lam = svd.lambdas;
    if lam[1].abs() <= SPECTRUM_TOL {
        return Err(ShapeError::SingularShape(format!(
            "second pseudo-singular value {:.3e} is at or below {SPECTRUM_TOL:.1e}",
            lam[1]
        )));
    }
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let gap = (lam[i] * lam[i] - lam[j] * lam[j]).abs();
        if gap <= SPECTRUM_TOL {
            return Err(ShapeError::DegenerateSpectrum(format!(
                "lambda_{}^2 and lambda_{}^2 differ by {gap:.3e} (<= {SPECTRUM_TOL:.1e})",
                i + 1,
                j + 1
            )));
        }
        if lam[i] * lam[i] + lam[j] * lam[j] <= 1e-16 {
            return Err(ShapeError::SingularShape(format!(
                "lambda_{}^2 + lambda_{}^2 vanishes",
                i + 1,
                j + 1
            )));
        }
    }

    let base_point = PreShape::new(svd.reconstruct())?;
    let n = k - 1;
    // entries are positions in W^T, the (k-1) x 3 transpose of W
    let z_ij = |entries: &[(usize, usize, f64)]| -> AmbientVector {
        let mut w_t = DMatrix::zeros(n, 3);
        for &(r, c, val) in entries {
            w_t[(r, c)] = val;
        }
        mul_right3(&(&svd.u_mat * w_t), &svd.v_mat.transpose())
    };

    let mut labels = Vec::with_capacity(3 * k - 7);
    let mut vectors: Vec<AmbientVector> = Vec::with_capacity(3 * k - 7);

    for i in [2usize, 3] {
        labels.push(BasisLabel::DLambda(i));
        vectors.push(z_ij(&[(i - 1, i - 1, 1.0), (0, 0, -lam[i - 1] / lam[0])]));
    }
    for (i, j) in [(1usize, 2usize), (1, 3), (2, 3)] {
        let (li, lj) = (lam[i - 1], lam[j - 1]);
        let scale = (li * li - lj * lj) / (li * li + lj * lj);
        labels.push(BasisLabel::Xi(i, j));
        vectors.push(z_ij(&[
            (j - 1, i - 1, li * scale),
            (i - 1, j - 1, lj * scale),
        ]));
    }
    for i in 1usize..=3 {
        let li = lam[i - 1];
        for j in 4..=n {
            labels.push(BasisLabel::Xi(i, j));
            vectors.push(z_ij(&[(j - 1, i - 1, li * li)]));
        }
    }
    debug_assert_eq!(vectors.len(), 3 * k - 7);

    let d = vectors.len();
    let gram = DMatrix::from_fn(d, d, |r, c| frobenius_dot(&vectors[r], &vectors[c]));
    let geig = gram.clone().symmetric_eigen();
    let max_eig = geig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let min_eig = geig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let gram_condition = if min_eig > 0.0 {
        max_eig / min_eig
    } else {
        f64::INFINITY
    };
    let gram_cholesky =
        nalgebra::Cholesky::new(gram.clone()).ok_or(ShapeError::IllConditionedBasis {
            cond: gram_condition,
        })?;

    Ok(KendallBasis {
        base_point,
        svd: svd.clone(),
        labels,
        vectors,
        gram,
        gram_cholesky,
        gram_condition,
    })
}

/// Kendall basis at a pre-shape (decomposition plus basis construction).
pub fn kendall_basis_at(z: &PreShape) -> Result<KendallBasis> {
    let svd = kendall_svd(z)?;
    get_xi_basis(&svd, z.landmark_count())
}

/// Coefficients of a horizontal vector in the Kendall basis, solving the
/// Gram system `G c = (<b_i, V>)_i`.
pub fn kendall_coordinates(v: &AmbientVector, kb: &KendallBasis) -> Result<DVector<f64>> {
    check_horizontal(v, kb.base_point(), HORIZONTALITY_TOL)?;
    if kb.gram_condition > GRAM_CONDITION_LIMIT {
        return Err(ShapeError::IllConditionedBasis {
            cond: kb.gram_condition,
        });
    }
    let rhs = DVector::from_fn(kb.dim(), |i, _| frobenius_dot(&kb.vectors[i], v));
    Ok(kb.gram_cholesky.solve(&rhs))
}

/// Linear combination of Kendall basis vectors with the given coefficients.
pub fn from_kendall_coordinates(c: &DVector<f64>, kb: &KendallBasis) -> Result<AmbientVector> {
    if c.len() != kb.dim() {
        return Err(ShapeError::DimensionMismatch {
            expected: kb.dim(),
            found: c.len(),
        });
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(ShapeError::InvalidArgument(
            "coordinates contain non-finite entries".into(),
        ));
    }
    let mut out = DMatrix::zeros(kb.base_point.matrix().nrows(), 3);
    for (ci, bi) in c.iter().zip(&kb.vectors) {
        out += bi * *ci;
    }
    Ok(out)
}

/// Vertical part of the Lie bracket of two vectors given by their Kendall
/// coefficients, accumulated bilinearly over the commutator table.
///
/// Contributions on reversed index pairs are folded onto the canonical
/// slots (1,2), (1,3), (2,3) with a sign, using `eta_ji = -eta_ij` and
/// `xi_ji = -xi_ij`. Summation runs over ordered label pairs with the
/// antisymmetrized weight `cu_a cv_b - cu_b cv_a`, which makes
/// `[u, v] = -[v, u]` hold exactly at coefficient level.
pub fn vertical_bracket(
    kb: &KendallBasis,
    cu: &DVector<f64>,
    cv: &DVector<f64>,
) -> Result<BracketCoefficients> {
    if cu.len() != kb.dim() || cv.len() != kb.dim() {
        return Err(ShapeError::DimensionMismatch {
            expected: kb.dim(),
            found: if cu.len() != kb.dim() {
                cu.len()
            } else {
                cv.len()
            },
        });
    }
    if cu.iter().chain(cv.iter()).any(|x| !x.is_finite()) {
        return Err(ShapeError::InvalidArgument(
            "bracket coefficients contain non-finite entries".into(),
        ));
    }
    let lam = kb.svd.lambdas;
    let mut out = [0.0; 3];
    for a in 0..kb.dim() {
        for b in (a + 1)..kb.dim() {
            let weight = cu[a] * cv[b] - cu[b] * cv[a];
            if weight == 0.0 {
                continue;
            }
            let pair = pair_bracket(&kb.labels[a], &kb.labels[b], &lam);
            out[0] += weight * pair[0];
            out[1] += weight * pair[1];
            out[2] += weight * pair[2];
        }
    }
    Ok(BracketCoefficients {
        c12: out[0],
        c13: out[1],
        c23: out[2],
    })
}

/// Squared norm of a vertical bracket from its `eta` coefficients, using
/// `|eta_ij|^2 = lambda_i^2 + lambda_j^2` with distinct `eta` orthogonal.
pub fn bracket_norm_sq(kb: &KendallBasis, bc: &BracketCoefficients) -> f64 {
    let [l1, l2, l3] = kb.svd.lambdas;
    bc.c12 * bc.c12 * (l1 * l1 + l2 * l2)
        + bc.c13 * bc.c13 * (l1 * l1 + l3 * l3)
        + bc.c23 * bc.c23 * (l2 * l2 + l3 * l3)
}

/// Adds `value * eta_{i j}` onto the canonical coefficient slots.
fn add_eta(out: &mut [f64; 3], i: usize, j: usize, value: f64) {
    let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    let slot = match (a, b) {
        (1, 2) => 0,
        (1, 3) => 1,
        (2, 3) => 2,
        _ => unreachable!("eta indices must be distinct and at most 3"),
    };
    out[slot] += sign * value;
}

/// Coefficient of a bracket of two `xi` sharing the index `s`:
/// `-4 (l_s l_p / (l_s^2 + l_p^2)) (l_s l_q / (l_s^2 + l_q^2))
///  + 2 l_p l_q / (l_p^2 + l_q^2)`, landing on `eta_{p q}`.
fn shared_index_coeff(s: usize, p: usize, q: usize, lam: &[f64; 3]) -> f64 {
    let (ls, lp, lq) = (lam[s - 1], lam[p - 1], lam[q - 1]);
    -4.0 * (ls * lp / (ls * ls + lp * lp)) * (ls * lq / (ls * ls + lq * lq))
        + 2.0 * lp * lq / (lp * lp + lq * lq)
}

/// Vertical bracket of two basis elements as `eta` coefficients.
fn pair_bracket(a: &BasisLabel, b: &BasisLabel, lam: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    match (a, b) {
        (BasisLabel::DLambda(_), BasisLabel::DLambda(_)) => {}
        (BasisLabel::DLambda(l), BasisLabel::Xi(i, j)) => {
            dlambda_xi_bracket(*l, *i, *j, lam, 1.0, &mut out)
        }
        (BasisLabel::Xi(i, j), BasisLabel::DLambda(l)) => {
            dlambda_xi_bracket(*l, *i, *j, lam, -1.0, &mut out)
        }
        (BasisLabel::Xi(i1, j1), BasisLabel::Xi(i2, j2)) => {
            xi_xi_bracket(*i1, *j1, *i2, *j2, lam, &mut out)
        }
    }
    out
}

/// `[d/d lambda_l, xi_ij]` for a canonical `xi` label; zero when `j > 3`.
fn dlambda_xi_bracket(l: usize, i: usize, j: usize, lam: &[f64; 3], sign: f64, out: &mut [f64; 3]) {
    if j > 3 {
        return;
    }
    let (l1, li, lj) = (lam[0], lam[i - 1], lam[j - 1]);
    let coeff = if i == 1 && l == j {
        2.0 / l1 * (l1 * l1 - lj * lj) / (l1 * l1 + lj * lj)
    } else if i == 1 && l != j {
        let ll = lam[l - 1];
        2.0 * lj * ll / l1 * (l1 * l1 - lj * lj) / (l1 * l1 + lj * lj).powi(2)
    } else if i > 1 && l == i {
        2.0 * lj * (lj * lj - li * li) / (li * li + lj * lj).powi(2)
    } else if i > 1 && l == j {
        2.0 * li * (li * li - lj * lj) / (li * li + lj * lj).powi(2)
    } else {
        0.0
    };
    add_eta(out, i, j, sign * coeff);
}

/// `[xi_{i1 j1}, xi_{i2 j2}]` over the shared-index cases; index crossings
/// are reduced with `xi_ji = -xi_ij`, and pairs with no shared index, or
/// mixing `j <= 3` with `j > 3`, commute vertically.
fn xi_xi_bracket(i1: usize, j1: usize, i2: usize, j2: usize, lam: &[f64; 3], out: &mut [f64; 3]) {
    let small1 = j1 <= 3;
    let small2 = j2 <= 3;
    if small1 && small2 {
        if i1 == i2 && j1 == j2 {
            return;
        }
        if i1 == i2 {
            add_eta(out, j1, j2, shared_index_coeff(i1, j1, j2, lam));
        } else if j1 == j2 {
            add_eta(out, i1, i2, shared_index_coeff(j1, i1, i2, lam));
        } else if j1 == i2 {
            add_eta(out, i1, j2, -shared_index_coeff(j1, i1, j2, lam));
        } else if i1 == j2 {
            add_eta(out, j1, i2, -shared_index_coeff(i1, j1, i2, lam));
        }
    } else if !small1 && !small2 && j1 == j2 && i1 != i2 {
        let (la, lb) = (lam[i1 - 1], lam[i2 - 1]);
        add_eta(out, i1, i2, 2.0 * la * lb / (la * la + lb * lb));
    }
}

/// Sectional curvature of the plane spanned by two horizontal vectors.
///
/// The pair is Gram-Schmidt orthonormalized first, so the result depends on
/// the plane only; it is always at least 1.
pub fn sectional_curvature(z: &PreShape, u: &AmbientVector, v: &AmbientVector) -> Result<f64> {
    let kb = kendall_basis_at(z)?;
    let (u_hat, v_hat) = orthonormalize_pair(z, u, v)?;
    let (curvature, _, _) = curvature_of_orthonormal_pair(&kb, &u_hat, &v_hat)?;
    Ok(curvature)
}

/// Closed-form `|[u, v]^V|^2` for the plane spanned by two horizontal
/// vectors, after Gram-Schmidt orthonormalization of the pair.
///
/// This is the quantity the finite-difference oracle in [`crate::oracle`]
/// estimates independently.
pub fn vertical_bracket_norm_sq(z: &PreShape, u: &AmbientVector, v: &AmbientVector) -> Result<f64> {
    let kb = kendall_basis_at(z)?;
    let (u_hat, v_hat) = orthonormalize_pair(z, u, v)?;
    let (_, _, norm_sq) = curvature_of_orthonormal_pair(&kb, &u_hat, &v_hat)?;
    Ok(norm_sq)
}

/// Specification of the plane for [`compute_curvature`]: either two Kendall
/// basis labels or two coefficient vectors in the Kendall basis.
#[derive(Debug, Clone)]
pub enum PlaneSpec {
    Labels(BasisLabel, BasisLabel),
    Coordinates(DVector<f64>, DVector<f64>),
}

/// Full curvature evaluation record.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    /// Landmark count.
    pub k: usize,
    /// Shape-space dimension `3k - 7`.
    pub d: usize,
    /// Sectional curvature of the requested plane.
    pub curvature: f64,
    /// Pseudo-singular values of the pre-shape.
    pub lambdas: [f64; 3],
    /// Condition number of the Kendall basis Gram matrix.
    pub gram_condition_number: f64,
    /// Vertical bracket of the orthonormalized plane, on `eta_12/13/23`.
    pub bracket_coefficients: BracketCoefficients,
    /// Squared norm of that bracket.
    pub bracket_norm_sq: f64,
    /// Human-readable description of the two plane directions.
    pub plane: [String; 2],
}

/// End-to-end curvature evaluation: configuration, pre-shape,
/// decomposition, Kendall basis, sectional curvature with diagnostics.
pub fn compute_curvature(config: &Configuration, plane: &PlaneSpec) -> Result<CurvatureReport> {
    let z = crate::shape::to_preshape(config)?;
    let kb = kendall_basis_at(&z)?;
    let (u, v, names) = match plane {
        PlaneSpec::Labels(a, b) => {
            if a == b {
                return Err(ShapeError::DegeneratePlane(format!(
                    "labels {a} and {b} select the same direction"
                )));
            }
            let ua = kb.vector_for(a).ok_or_else(|| {
                ShapeError::InvalidArgument(format!(
                    "label {a} does not exist at k = {}",
                    config.landmark_count()
                ))
            })?;
            let vb = kb.vector_for(b).ok_or_else(|| {
                ShapeError::InvalidArgument(format!(
                    "label {b} does not exist at k = {}",
                    config.landmark_count()
                ))
            })?;
            (ua.clone(), vb.clone(), [a.to_string(), b.to_string()])
        }
        PlaneSpec::Coordinates(cu, cv) => {
            let u = from_kendall_coordinates(cu, &kb)?;
            let v = from_kendall_coordinates(cv, &kb)?;
            (u, v, ["coords(u)".to_string(), "coords(v)".to_string()])
        }
    };
    let (u_hat, v_hat) = orthonormalize_pair(kb.base_point(), &u, &v)?;
    let (curvature, bracket, norm_sq) = curvature_of_orthonormal_pair(&kb, &u_hat, &v_hat)?;
    Ok(CurvatureReport {
        k: config.landmark_count(),
        d: kb.dim(),
        curvature,
        lambdas: kb.svd.lambdas,
        gram_condition_number: kb.gram_condition,
        bracket_coefficients: bracket,
        bracket_norm_sq: norm_sq,
        plane: names,
    })
}

/// Gram-Schmidt orthonormalization of a horizontal pair, with the
/// degenerate-plane guard on the Gram determinant.
pub(crate) fn orthonormalize_pair(
    z: &PreShape,
    u: &AmbientVector,
    v: &AmbientVector,
) -> Result<(AmbientVector, AmbientVector)> {
    check_horizontal(u, z, HORIZONTALITY_TOL)?;
    check_horizontal(v, z, HORIZONTALITY_TOL)?;
    let guu = frobenius_dot(u, u);
    let gvv = frobenius_dot(v, v);
    let guv = frobenius_dot(u, v);
    if guu * gvv - guv * guv <= 1e-12 {
        return Err(ShapeError::DegeneratePlane(format!(
            "Gram determinant {:.3e} is at or below 1e-12",
            guu * gvv - guv * guv
        )));
    }
    let u_hat = u / guu.sqrt();
    let mut w = v.clone();
    let c = frobenius_dot(v, &u_hat);
    w -= &u_hat * c;
    let wn = w.norm();
    Ok((u_hat, w / wn))
}

pub(crate) fn curvature_of_orthonormal_pair(
    kb: &KendallBasis,
    u_hat: &AmbientVector,
    v_hat: &AmbientVector,
) -> Result<(f64, BracketCoefficients, f64)> {
    let cu = kendall_coordinates(u_hat, kb)?;
    let cv = kendall_coordinates(v_hat, kb)?;
    let bracket = vertical_bracket(kb, &cu, &cv)?;
    let norm_sq = bracket_norm_sq(kb, &bracket);
    Ok((1.0 + 0.75 * norm_sq, bracket, norm_sq))
}
