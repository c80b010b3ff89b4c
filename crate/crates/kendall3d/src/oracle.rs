//! Finite-difference cross-check of the vertical bracket norm.
//!
//! For a Riemannian submersion, the vertical part of the bracket of the
//! horizontal extensions of `u` and `v` can be read off the integrability
//! tensor: differentiating the horizontally-projected field of `v` along a
//! geodesic in direction `u` and keeping the vertical part yields `A_u v`,
//! and `[u, v]^V = A_u v - A_v u`. This module estimates that quantity with
//! central differences and never touches the Kendall basis or the commutator
//! table, so it validates the closed-form curvature along a genuinely
//! separate code path.
//!
//! The vertical projection here orthonormalizes `{Z L_x, Z L_y, Z L_z}` by a
//! QR factorization of its own rather than reusing the Gram-Schmidt frame of
//! the `tangent` module.

use nalgebra::DMatrix;

use crate::error::{Result, ShapeError};
use crate::shape::{exp_sphere, frobenius_dot, vertical_frame, AmbientVector, PreShape};
use crate::tangent::{check_horizontal, flatten, horizontal_project, unflatten};

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Orthonormality tolerance on the `(u, v)` precondition.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Finite-difference settings. The scheme is second-order central, so the
/// estimate carries an `O(step^2)` truncation error.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Step size of the central difference, constrained to `(1e-8, 1e-2)`.
    pub step: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { step: DEFAULT_STEP }
    }
}

impl OracleConfig {
    pub fn with_step(step: f64) -> Self {
        OracleConfig { step }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 1e-8 && self.step < 1e-2) {
            return Err(ShapeError::InvalidArgument(format!(
                "oracle step must lie in (1e-8, 1e-2), got {:.3e}",
                self.step
            )));
        }
        Ok(())
    }
}

/// Estimates `|[u, v]^V|^2` at `z` for an orthonormal horizontal pair.
///
/// Both one-sided derivatives are evaluated and antisymmetrized, which makes
/// the result exactly invariant under swapping `u` and `v`. A step-halving
/// pair of runs shrinks the discrepancy against the closed form by about 4x,
/// consistent with the second-order scheme.
pub fn oneill_bracket_norm_sq(
    z: &PreShape,
    u: &AmbientVector,
    v: &AmbientVector,
    cfg: &OracleConfig,
) -> Result<f64> {
    cfg.validate()?;
    check_horizontal(u, z, ORTHONORMALITY_TOL)?;
    check_horizontal(v, z, ORTHONORMALITY_TOL)?;
    let uu = frobenius_dot(u, u);
    let vv = frobenius_dot(v, v);
    let uv = frobenius_dot(u, v);
    if (uu - 1.0).abs() > ORTHONORMALITY_TOL
        || (vv - 1.0).abs() > ORTHONORMALITY_TOL
        || uv.abs() > ORTHONORMALITY_TOL
    {
        return Err(ShapeError::InvalidArgument(format!(
            "(u, v) must be orthonormal: |u|^2 = {uu:.12}, |v|^2 = {vv:.12}, <u, v> = {uv:.3e}"
        )));
    }

    let a_uv = field_derivative(z, u, v, cfg.step)?;
    let a_vu = field_derivative(z, v, u, cfg.step)?;
    let bracket = vertical_projection(z, &(a_uv - a_vu))?;
    Ok(bracket.norm_squared())
}

/// Central difference of the horizontally-projected field of `v` along the
/// geodesic through `z` in direction `u`.
fn field_derivative(
    z: &PreShape,
    u: &AmbientVector,
    v: &AmbientVector,
    step: f64,
) -> Result<AmbientVector> {
    let forward = exp_sphere(z, &(u * step))?;
    let backward = exp_sphere(z, &(u * -step))?;
    let v_plus = horizontal_project(v, &forward)?;
    let v_minus = horizontal_project(v, &backward)?;
    Ok((v_plus - v_minus) / (2.0 * step))
}

/// Orthogonal projection onto the vertical space at `z`, built from a QR
/// factorization of the flattened frame `{Z L_x, Z L_y, Z L_z}`.
fn vertical_projection(z: &PreShape, d: &AmbientVector) -> Result<AmbientVector> {
    let frame = vertical_frame(z);
    let n = z.matrix().nrows() * 3;
    let mut columns = DMatrix::zeros(n, 3);
    for (i, w) in frame.vectors().into_iter().enumerate() {
        columns.set_column(i, &flatten(w));
    }
    let qr = columns.qr();
    let r = qr.r();
    for i in 0..3 {
        if r[(i, i)].abs() <= 1e-10 {
            return Err(ShapeError::SingularShape(
                "vertical frame is rank-deficient".into(),
            ));
        }
    }
    let q = qr.q();
    let coeffs = q.transpose() * flatten(d);
    Ok(unflatten(&(&q * coeffs), z.matrix().nrows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{kendall_basis_at, orthonormalize_pair, vertical_bracket_norm_sq, BasisLabel};
    use crate::shape::mul_right3;
    use crate::shape::tests::{random_preshape, random_rotation, random_tangent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_orthonormal_horizontal_pair(
        rng: &mut ChaCha8Rng,
        z: &PreShape,
    ) -> (AmbientVector, AmbientVector) {
        loop {
            let u = horizontal_project(&random_tangent(rng, z), z).unwrap();
            let v = horizontal_project(&random_tangent(rng, z), z).unwrap();
            if let Ok(pair) = orthonormalize_pair(z, &u, &v) {
                return pair;
            }
        }
    }

    #[test]
    fn rejects_bad_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let z = random_preshape(&mut rng, 5);
        let (u, v) = random_orthonormal_horizontal_pair(&mut rng, &z);
        for step in [1e-9, 1e-8, 1e-2, 0.5, 0.0, -1e-4] {
            assert!(oneill_bracket_norm_sq(&z, &u, &v, &OracleConfig::with_step(step)).is_err());
        }
    }

    #[test]
    fn rejects_non_orthonormal_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let z = random_preshape(&mut rng, 5);
        let (u, v) = random_orthonormal_horizontal_pair(&mut rng, &z);
        let cfg = OracleConfig::default();
        assert!(oneill_bracket_norm_sq(&z, &(&u * 2.0), &v, &cfg).is_err());
        assert!(oneill_bracket_norm_sq(&z, &u, &u, &cfg).is_err());
    }

    #[test]
    fn vanishes_on_dlambda_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for _ in 0..5 {
            let z = random_preshape(&mut rng, 8);
            let kb = kendall_basis_at(&z).unwrap();
            let dl2 = kb.vector_for(&BasisLabel::DLambda(2)).unwrap();
            let dl3 = kb.vector_for(&BasisLabel::DLambda(3)).unwrap();
            let (u, v) = orthonormalize_pair(&z, dl2, dl3).unwrap();
            let est = oneill_bracket_norm_sq(&z, &u, &v, &OracleConfig::default()).unwrap();
            assert!(est <= 1e-6, "estimate {est:.3e}");
        }
    }

    #[test]
    fn swap_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let z = random_preshape(&mut rng, 6);
        let (u, v) = random_orthonormal_horizontal_pair(&mut rng, &z);
        let cfg = OracleConfig::default();
        let uv = oneill_bracket_norm_sq(&z, &u, &v, &cfg).unwrap();
        let vu = oneill_bracket_norm_sq(&z, &v, &u, &cfg).unwrap();
        assert!((uv - vu).abs() <= 1e-10);
    }

    #[test]
    fn matches_closed_form_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let cfg = OracleConfig::default();
        for _ in 0..10 {
            let z = random_preshape(&mut rng, 5);
            let (u, v) = random_orthonormal_horizontal_pair(&mut rng, &z);
            let closed = vertical_bracket_norm_sq(&z, &u, &v).unwrap();
            let est = oneill_bracket_norm_sq(&z, &u, &v, &cfg).unwrap();
            let rel = (closed - est).abs() / closed.abs().max(est.abs()).max(1e-8);
            assert!(
                rel <= 1e-4,
                "closed {closed:.12e} vs oracle {est:.12e} (rel {rel:.3e})"
            );
        }
    }

    #[test]
    fn second_order_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let mut ratios = Vec::new();
        for _ in 0..8 {
            let z = random_preshape(&mut rng, 6);
            let (u, v) = random_orthonormal_horizontal_pair(&mut rng, &z);
            let exact = vertical_bracket_norm_sq(&z, &u, &v).unwrap();
            let coarse = oneill_bracket_norm_sq(&z, &u, &v, &OracleConfig::with_step(5e-3)).unwrap();
            let fine = oneill_bracket_norm_sq(&z, &u, &v, &OracleConfig::with_step(2.5e-3)).unwrap();
            let (d_coarse, d_fine) = ((coarse - exact).abs(), (fine - exact).abs());
            if d_coarse > 1e-10 && d_fine > 1e-12 {
                ratios.push(d_coarse / d_fine);
            }
        }
        assert!(!ratios.is_empty());
        ratios.sort_by(f64::total_cmp);
        let median = ratios[ratios.len() / 2];
        assert!(
            (2.5..=6.0).contains(&median),
            "median error ratio {median:.3} not consistent with second order"
        );
    }

    #[test]
    fn rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(76);
        let z = random_preshape(&mut rng, 6);
        let (u, v) = random_orthonormal_horizontal_pair(&mut rng, &z);
        let cfg = OracleConfig::default();
        let base = oneill_bracket_norm_sq(&z, &u, &v, &cfg).unwrap();
        for _ in 0..3 {
            let r = random_rotation(&mut rng);
            let zr = PreShape::new(mul_right3(z.matrix(), &r)).unwrap();
            let rotated =
                oneill_bracket_norm_sq(&zr, &mul_right3(&u, &r), &mul_right3(&v, &r), &cfg)
                    .unwrap();
            assert!((base - rotated).abs() <= 1e-6 * base.max(1.0));
        }
    }
}
