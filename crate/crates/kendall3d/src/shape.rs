//! Configurations, pre-shapes, and the geometry of the pre-shape sphere.
//!
//! A configuration is an ordered set of `k` labelled landmarks in 3D. Removing
//! translation (Helmert contrasts) and scale (unit Frobenius norm) yields its
//! pre-shape, a point on the unit hypersphere in `R^{3(k-1)}`. Shapes are
//! rotation orbits of pre-shapes; this module supplies the sphere-level
//! primitives (exponential, logarithm, optimal rotation alignment) and the
//! vertical frame spanned by infinitesimal rotations.
//!
//! Pre-shapes are stored as `(k-1) x 3` matrices, Helmert contrasts as rows,
//! so that an infinitesimal rotation acts by right-multiplication `Z * L_a`.

use nalgebra::{DMatrix, Matrix3};

use crate::error::{Result, ShapeError};

/// Helmertized norms at or below this are treated as degenerate (all
/// landmarks coincide).
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Relative tolerance for the rank >= 2 requirement on pre-shapes: the second
/// singular value must exceed this times the first.
pub const RANK_TOL: f64 = 1e-10;

/// Inner product below `-1 + ANTIPODAL_TOL` means the logarithm is not unique.
pub const ANTIPODAL_TOL: f64 = 1e-10;

/// Tolerance for the tangency precondition of [`exp_sphere`].
pub const TANGENCY_TOL: f64 = 1e-10;

/// An element of the ambient tangent space `R^{3(k-1)}` at a pre-shape,
/// stored like the pre-shape itself as a `(k-1) x 3` matrix.
pub type AmbientVector = DMatrix<f64>;

/// Frobenius inner product of two equally-sized matrices.
#[inline]
pub fn frobenius_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// The basis `(L_x, L_y, L_z)` of the Lie algebra so(3) used throughout.
pub fn so3_generators() -> [Matrix3<f64>; 3] {
    [
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
        Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0),
        Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    ]
}

/// Right-multiplies a `(k-1) x 3` matrix by a fixed 3x3 matrix, keeping the
/// dynamically-sized representation used everywhere else.
pub(crate) fn mul_right3(m: &DMatrix<f64>, r: &Matrix3<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), 3);
    out.copy_from(&(m * r));
    out
}

/// A raw landmark configuration: `k` labelled points in 3D.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    points: DMatrix<f64>,
}

impl Configuration {
    /// Wraps a `k x 3` matrix of landmark coordinates.
    ///
    /// Requires `k >= 4` (below that the shape-space dimension `3k - 7` is
    /// non-positive) and finite entries.
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.ncols() != 3 {
            return Err(ShapeError::InvalidArgument(format!(
                "configuration must have 3 columns, got {}",
                points.ncols()
            )));
        }
        if points.nrows() < 4 {
            return Err(ShapeError::InvalidArgument(format!(
                "need at least 4 landmarks, got {}",
                points.nrows()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(ShapeError::InvalidArgument(
                "configuration contains non-finite entries".into(),
            ));
        }
        Ok(Configuration { points })
    }

    /// Builds a configuration from landmark triples.
    pub fn from_landmarks(landmarks: &[[f64; 3]]) -> Result<Self> {
        let points = DMatrix::from_fn(landmarks.len(), 3, |r, c| landmarks[r][c]);
        Configuration::new(points)
    }

    /// Number of landmarks `k`.
    pub fn landmark_count(&self) -> usize {
        self.points.nrows()
    }

    /// The `k x 3` coordinate matrix.
    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }
}

/// A point on the pre-shape sphere: a `(k-1) x 3` matrix with unit Frobenius
/// norm and rank at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct PreShape {
    z: DMatrix<f64>,
}

impl PreShape {
    /// Validates and wraps a `(k-1) x 3` matrix.
    ///
    /// The Frobenius norm must equal 1 within 1e-12 and the matrix must have
    /// numerical rank at least 2, so that the vertical space has its full
    /// dimension 3.
    pub fn new(z: DMatrix<f64>) -> Result<Self> {
        if z.ncols() != 3 {
            return Err(ShapeError::InvalidArgument(format!(
                "pre-shape must have 3 columns, got {}",
                z.ncols()
            )));
        }
        if z.nrows() < 3 {
            return Err(ShapeError::InvalidArgument(format!(
                "pre-shape must have at least 3 rows (k >= 4), got {}",
                z.nrows()
            )));
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(ShapeError::InvalidArgument(
                "pre-shape contains non-finite entries".into(),
            ));
        }
        let norm = z.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(ShapeError::InvalidArgument(format!(
                "pre-shape must have unit Frobenius norm, got {norm:.15}"
            )));
        }
        let sv = z.clone().svd(false, false).singular_values;
        if sv[1] <= RANK_TOL * sv[0] {
            return Err(ShapeError::SingularShape(format!(
                "rank below 2: singular values {:.3e} >= {:.3e}",
                sv[0], sv[1]
            )));
        }
        Ok(PreShape { z })
    }

    /// The underlying `(k-1) x 3` matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Landmark count `k` of the configurations this pre-shape represents.
    pub fn landmark_count(&self) -> usize {
        self.z.nrows() + 1
    }

    /// Intrinsic dimension `3k - 7` of the shape space at this point.
    pub fn shape_dim(&self) -> usize {
        3 * self.landmark_count() - 7
    }
}

/// The three vertical tangent vectors `(Z L_x, Z L_y, Z L_z)` at a pre-shape.
#[derive(Debug, Clone)]
pub struct VerticalFrame {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub w3: DMatrix<f64>,
}

impl VerticalFrame {
    /// The frame vectors in order.
    pub fn vectors(&self) -> [&DMatrix<f64>; 3] {
        [&self.w1, &self.w2, &self.w3]
    }
}

/// The `(k-1) x k` Helmert submatrix.
///
/// Row `j` (1-based) has `j` entries equal to `-(j(j+1))^{-1/2}` followed by
/// one entry `j (j(j+1))^{-1/2}` and zeros. Rows are orthonormal and sum to
/// zero, so left-multiplication removes translation.
pub fn helmert_submatrix(k: usize) -> Result<DMatrix<f64>> {
    if k < 2 {
        return Err(ShapeError::InvalidArgument(format!(
            "Helmert submatrix needs k >= 2, got {k}"
        )));
    }
    let mut h = DMatrix::zeros(k - 1, k);
    for j in 1..k {
        let scale = 1.0 / ((j * (j + 1)) as f64).sqrt();
        for c in 0..j {
            h[(j - 1, c)] = -scale;
        }
        h[(j - 1, j)] = j as f64 * scale;
    }
    Ok(h)
}

/// Projects a configuration to its pre-shape: Helmertize, then divide by the
/// centroid size (Frobenius norm).
///
/// The result is invariant under translation and positive scaling of the
/// input. Fails with a degeneracy error when all landmarks coincide and with
/// a singular-shape error when the landmarks are collinear (rank < 2).
pub fn to_preshape(config: &Configuration) -> Result<PreShape> {
    let h = helmert_submatrix(config.landmark_count())?;
    let helmertized = &h * config.points();
    let size = helmertized.norm();
    if size <= DEGENERACY_TOL {
        return Err(ShapeError::DegenerateConfiguration { norm: size });
    }
    PreShape::new(helmertized / size)
}

/// The vertical frame `(Z L_x, Z L_y, Z L_z)` spanning the rotation
/// directions at `z`.
pub fn vertical_frame(z: &PreShape) -> VerticalFrame {
    let [lx, ly, lz] = so3_generators();
    VerticalFrame {
        w1: mul_right3(z.matrix(), &lx),
        w2: mul_right3(z.matrix(), &ly),
        w3: mul_right3(z.matrix(), &lz),
    }
}

/// Great-circle exponential on the pre-shape sphere:
/// `cos(|v|) Z + sin(|v|) v / |v|`.
///
/// `v` must be tangent at `z` (Frobenius-orthogonal within a tolerance scaled
/// by `|v|`); `|v| <= 1e-14` returns `z` unchanged.
pub fn exp_sphere(z: &PreShape, v: &AmbientVector) -> Result<PreShape> {
    check_same_shape(z, v)?;
    let radial = frobenius_dot(v, z.matrix());
    let norm = v.norm();
    if radial.abs() > TANGENCY_TOL * norm.max(1.0) {
        return Err(ShapeError::InvalidArgument(format!(
            "vector is not tangent: <v, Z> = {radial:.3e}"
        )));
    }
    if norm <= 1e-14 {
        return Ok(z.clone());
    }
    let y = z.matrix() * norm.cos() + v * (norm.sin() / norm);
    // renormalize to keep the unit-norm invariant tight
    let n = y.norm();
    PreShape::new(y / n)
}

/// Logarithm at `z` of another pre-shape `y` on the sphere.
///
/// Returns the tangent vector `v` with `exp_sphere(z, v) = y` and
/// `|v| = arccos <z, y>`. Antipodal pairs have no unique logarithm and are
/// rejected.
pub fn log_sphere(z: &PreShape, y: &PreShape) -> Result<AmbientVector> {
    check_same_shape(z, y.matrix())?;
    let inner = frobenius_dot(z.matrix(), y.matrix()).clamp(-1.0, 1.0);
    if inner <= -1.0 + ANTIPODAL_TOL {
        return Err(ShapeError::NoUniqueLogarithm { inner });
    }
    let theta = inner.acos();
    let residual = y.matrix() - z.matrix() * inner;
    let rnorm = residual.norm();
    if rnorm <= 1e-14 || theta <= 1e-14 {
        return Ok(DMatrix::zeros(z.matrix().nrows(), 3));
    }
    Ok(residual * (theta / rnorm))
}

/// Optimally rotates `y` onto `z` within its SO(3) orbit.
///
/// Returns `(y R, R)` where `R` maximizes `<z, y R>` over rotations. `R` is
/// computed from the SVD of `y^T z` with the determinant sign correction
/// applied to the smallest singular direction, so `det R = +1` always, even
/// for reflection-tempting inputs.
pub fn align_rotation(z: &PreShape, y: &PreShape) -> Result<(PreShape, Matrix3<f64>)> {
    check_same_shape(z, y.matrix())?;
    let m: Matrix3<f64> = (y.matrix().transpose() * z.matrix()).fixed_view::<3, 3>(0, 0).into();
    let svd = m.svd(true, true);
    let u = svd.u.expect("3x3 SVD always yields U");
    let v_t = svd.v_t.expect("3x3 SVD always yields V^T");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let rotation = u * d * v_t;
    let aligned = PreShape::new(mul_right3(y.matrix(), &rotation))?;
    Ok((aligned, rotation))
}

fn check_same_shape(z: &PreShape, other: &DMatrix<f64>) -> Result<()> {
    if other.nrows() != z.matrix().nrows() || other.ncols() != 3 {
        return Err(ShapeError::DimensionMismatch {
            expected: z.matrix().nrows() * 3,
            found: other.nrows() * other.ncols(),
        });
    }
    if other.iter().any(|x| !x.is_finite()) {
        return Err(ShapeError::InvalidArgument(
            "matrix contains non-finite entries".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub(crate) fn random_configuration(rng: &mut ChaCha8Rng, k: usize) -> Configuration {
        loop {
            let m = DMatrix::from_fn(k, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Ok(c) = Configuration::new(m) {
                if to_preshape(&c).is_ok() {
                    return c;
                }
            }
        }
    }

    pub(crate) fn random_preshape(rng: &mut ChaCha8Rng, k: usize) -> PreShape {
        let c = random_configuration(rng, k);
        to_preshape(&c).unwrap()
    }

    pub(crate) fn random_tangent(rng: &mut ChaCha8Rng, z: &PreShape) -> AmbientVector {
        let raw = DMatrix::from_fn(z.matrix().nrows(), 3, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let radial = frobenius_dot(&raw, z.matrix());
        raw - z.matrix() * radial
    }

    /// Uniform-ish random rotation from a normalized Gaussian quaternion.
    pub(crate) fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    #[test]
    fn helmert_small_cases() {
        let h2 = helmert_submatrix(2).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert_relative_eq!(h2[(0, 0)], -s, max_relative = 1e-15);
        assert_relative_eq!(h2[(0, 1)], s, max_relative = 1e-15);

        let h3 = helmert_submatrix(3).unwrap();
        let s6 = 1.0 / 6.0_f64.sqrt();
        let expected = [[-s, s, 0.0], [-s6, -s6, 2.0 * s6]];
        for r in 0..2 {
            for c in 0..3 {
                assert_relative_eq!(h3[(r, c)], expected[r][c], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn helmert_rows_orthonormal_and_centered() {
        for k in 2..=50 {
            let h = helmert_submatrix(k).unwrap();
            let gram = &h * h.transpose();
            let identity = DMatrix::<f64>::identity(k - 1, k - 1);
            assert!((gram - identity).norm() < 1e-14, "k = {k}");
            for j in 0..k - 1 {
                assert!(h.row(j).sum().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn helmert_rejects_k_below_2() {
        assert!(matches!(
            helmert_submatrix(1),
            Err(ShapeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn preshape_is_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in [4, 7, 12] {
            let z = random_preshape(&mut rng, k);
            assert_relative_eq!(z.matrix().norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn preshape_rejects_coincident_landmarks() {
        let c = Configuration::from_landmarks(&[[1.0, 2.0, 3.0]; 5]).unwrap();
        assert!(matches!(
            to_preshape(&c),
            Err(ShapeError::DegenerateConfiguration { .. })
        ));
    }

    #[test]
    fn preshape_rejects_collinear_landmarks() {
        let c = Configuration::from_landmarks(&[
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [3.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!(matches!(to_preshape(&c), Err(ShapeError::SingularShape(_))));
    }

    proptest! {
        #[test]
        fn preshape_similarity_invariant(seed in 0u64..500, k in 4usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_configuration(&mut rng, k);
            let scale: f64 = rng.random_range(0.1..10.0);
            let shift = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let moved = DMatrix::from_fn(k, 3, |r, col| scale * c.points()[(r, col)] + shift[col]);
            let z0 = to_preshape(&c).unwrap();
            let z1 = to_preshape(&Configuration::new(moved).unwrap()).unwrap();
            prop_assert!((z0.matrix() - z1.matrix()).norm() <= 1e-12);
        }

        #[test]
        fn exp_log_round_trip(seed in 0u64..300, norm in 1e-3f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = random_preshape(&mut rng, 6);
            let t = random_tangent(&mut rng, &z);
            let v = &t * (norm / t.norm());
            let y = exp_sphere(&z, &v).unwrap();
            let back = log_sphere(&z, &y).unwrap();
            prop_assert!((back - v).norm() <= 1e-9);
        }
    }

    #[test]
    fn vertical_frame_row_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = random_preshape(&mut rng, 5);
        let frame = vertical_frame(&z);
        for r in 0..z.matrix().nrows() {
            let (a, b, c) = (z.matrix()[(r, 0)], z.matrix()[(r, 1)], z.matrix()[(r, 2)]);
            // row (a,b,c) maps to (0, c, -b) under L_x and (b, -a, 0) under L_z
            assert_relative_eq!(frame.w1[(r, 0)], 0.0, epsilon = 1e-15);
            assert_relative_eq!(frame.w1[(r, 1)], c, epsilon = 1e-15);
            assert_relative_eq!(frame.w1[(r, 2)], -b, epsilon = 1e-15);
            assert_relative_eq!(frame.w3[(r, 0)], b, epsilon = 1e-15);
            assert_relative_eq!(frame.w3[(r, 1)], -a, epsilon = 1e-15);
            assert_relative_eq!(frame.w3[(r, 2)], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn vertical_frame_orthogonal_to_base() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [4, 6, 10] {
            let z = random_preshape(&mut rng, k);
            let frame = vertical_frame(&z);
            for w in frame.vectors() {
                assert!(frobenius_dot(z.matrix(), w).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn exp_zero_vector_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = random_preshape(&mut rng, 5);
        let zero = DMatrix::zeros(4, 3);
        let y = exp_sphere(&z, &zero).unwrap();
        assert_eq!(y.matrix(), z.matrix());
    }

    #[test]
    fn exp_stays_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = random_preshape(&mut rng, 8);
        for _ in 0..20 {
            let v = random_tangent(&mut rng, &z);
            let y = exp_sphere(&z, &v).unwrap();
            assert_relative_eq!(y.matrix().norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn exp_at_pi_reaches_antipode() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let z = random_preshape(&mut rng, 5);
        let t = random_tangent(&mut rng, &z);
        let v = &t * (std::f64::consts::PI / t.norm());
        let y = exp_sphere(&z, &v).unwrap();
        assert!((y.matrix() + z.matrix()).norm() <= 1e-9);
    }

    #[test]
    fn exp_rejects_non_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z = random_preshape(&mut rng, 5);
        let v = z.matrix() * 0.5;
        assert!(matches!(
            exp_sphere(&z, &v),
            Err(ShapeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn log_of_same_point_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let z = random_preshape(&mut rng, 6);
        let v = log_sphere(&z, &z).unwrap();
        assert!(v.norm() <= 1e-14);
    }

    #[test]
    fn log_norm_is_arc_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = random_preshape(&mut rng, 6);
        let y = random_preshape(&mut rng, 6);
        let v = log_sphere(&z, &y).unwrap();
        let dist = frobenius_dot(z.matrix(), y.matrix()).clamp(-1.0, 1.0).acos();
        assert_relative_eq!(v.norm(), dist, epsilon = 1e-12);
    }

    #[test]
    fn log_rejects_antipodal_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let z = random_preshape(&mut rng, 5);
        let anti = PreShape::new(-z.matrix().clone()).unwrap();
        assert!(matches!(
            log_sphere(&z, &anti),
            Err(ShapeError::NoUniqueLogarithm { .. })
        ));
    }

    #[test]
    fn align_identity_when_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = random_preshape(&mut rng, 7);
        let (aligned, r) = align_rotation(&z, &z).unwrap();
        assert!((r - Matrix3::identity()).norm() <= 1e-10);
        assert!((aligned.matrix() - z.matrix()).norm() <= 1e-10);
    }

    #[test]
    fn align_recovers_orbit_representative() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for k in [4, 6, 10] {
            let z = random_preshape(&mut rng, k);
            let q = random_rotation(&mut rng);
            let y = PreShape::new(mul_right3(z.matrix(), &q)).unwrap();
            let (aligned, _) = align_rotation(&z, &y).unwrap();
            assert!((aligned.matrix() - z.matrix()).norm() <= 1e-10);
        }
    }

    #[test]
    fn align_is_optimal_over_sampled_rotations() {
        // brute-force oracle: no sampled rotation may beat the SVD solution
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let z = random_preshape(&mut rng, 6);
        let y = random_preshape(&mut rng, 6);
        let (aligned, _) = align_rotation(&z, &y).unwrap();
        let best = frobenius_dot(z.matrix(), aligned.matrix());
        for _ in 0..100 {
            let q = random_rotation(&mut rng);
            let candidate = frobenius_dot(z.matrix(), &mul_right3(y.matrix(), &q));
            assert!(candidate <= best + 1e-12);
        }
    }

    #[test]
    fn align_returns_proper_rotation_always() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let z = random_preshape(&mut rng, 5);
            // reflection-tempting: y close to a reflected copy of z
            let mut reflected = z.matrix().clone();
            for r in 0..reflected.nrows() {
                reflected[(r, 2)] = -reflected[(r, 2)];
            }
            let y = PreShape::new(reflected).unwrap();
            let (_, r) = align_rotation(&z, &y).unwrap();
            assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        }
    }
}
