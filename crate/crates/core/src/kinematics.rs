//! Backbone pose integration and modal Jacobians.
//!
//! The frame ODE `T' = T η̂(s)`, with `η = [u(s); e₃]`, is integrated as a
//! right-multiplied product of exponentials. Each step uses the fourth-order
//! Magnus expansion with two Gauss–Legendre curvature samples and one
//! commutator:
//!
//! ```text
//! Ψ = h/2 (η₁ + η₂) + (√3/12) h² [η₁, η₂]
//! ```
//!
//! where `η₁` is sampled at the earlier node. The body Jacobian is assembled
//! analytically by pushing `∂Ψ/∂c` through the left-trivialized `dexp` of each
//! factor and transporting the accumulated twist with the inverse adjoint.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::modal::{ModalConfig, ShapeBasis};
use crate::se3::{ad, bracket, dexp_se3_left, exp_se3, hybrid_map, Pose, Twist};

/// Order of the Magnus integrator.
pub const MAGNUS_ORDER: usize = 4;

/// Integration steps used by the compliance studies.
pub const DEFAULT_STEPS: usize = 10;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Poses sampled at the step boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneTrajectory {
    pub samples: Vec<(f64, Pose)>,
    pub steps: usize,
}

impl BackboneTrajectory {
    pub fn tip(&self) -> &Pose {
        &self.samples.last().expect("trajectory has at least one sample").1
    }

    pub fn base(&self) -> &Pose {
        &self.samples[0].1
    }
}

/// Body Jacobian `J_ξc(s)`: rows ordered angular-first, one column per
/// modal coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyJacobian {
    pub matrix: DMatrix<f64>,
    pub s: f64,
    /// Frame at `s` obtained along the same product of exponentials.
    pub pose: Pose,
}

fn eta(u: Vector3<f64>) -> Twist {
    Twist::new(u, Vector3::z())
}

/// Magnus twist over `[a, a + h]`.
fn magnus_twist(basis: &ShapeBasis, c: &ModalConfig, a: f64, h: f64) -> Result<Twist> {
    let (s1, s2) = gauss_nodes(a, h);
    let e1 = eta(basis.curvature(c, s1)?);
    let e2 = eta(basis.curvature(c, s2)?);
    let mean = Twist::from_vector(&((e1.to_vector() + e2.to_vector()) * (0.5 * h)));
    let corr = bracket(&e1, &e2).scaled(SQRT3 / 12.0 * h * h);
    Ok(Twist::from_vector(&(mean.to_vector() + corr.to_vector())))
}

fn gauss_nodes(a: f64, h: f64) -> (f64, f64) {
    let off = SQRT3 / 6.0;
    (a + h * (0.5 - off), a + h * (0.5 + off))
}

/// Magnus twist and its derivative with respect to `c` (a `6 × m` matrix).
fn magnus_twist_with_derivative(
    basis: &ShapeBasis,
    c: &ModalConfig,
    a: f64,
    h: f64,
) -> Result<(Twist, DMatrix<f64>)> {
    let (s1, s2) = gauss_nodes(a, h);
    let phi1 = basis.eval_phi(s1)?;
    let phi2 = basis.eval_phi(s2)?;
    let u1 = &phi1 * &c.0;
    let u2 = &phi2 * &c.0;
    let e1 = eta(Vector3::from_column_slice(u1.as_slice()));
    let e2 = eta(Vector3::from_column_slice(u2.as_slice()));
    let k = SQRT3 / 12.0 * h * h;
    let psi = Twist::from_vector(
        &((e1.to_vector() + e2.to_vector()) * (0.5 * h) + bracket(&e1, &e2).to_vector() * k),
    );

    let m = basis.len();
    // B_j = [Φ(s_j); 0]; only the upper three rows of each are non-zero.
    let mut b1 = DMatrix::zeros(6, m);
    let mut b2 = DMatrix::zeros(6, m);
    b1.rows_mut(0, 3).copy_from(&phi1);
    b2.rows_mut(0, 3).copy_from(&phi2);
    let ad1 = to_dmatrix6(&ad(&e1));
    let ad2 = to_dmatrix6(&ad(&e2));
    let d = (&b1 + &b2) * (0.5 * h) + (ad1 * &b2 - ad2 * &b1) * k;
    Ok((psi, d))
}

fn to_dmatrix6(m: &nalgebra::Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidParameter("at least one integration step is required".into()));
    }
    Ok(())
}

/// Integrates the backbone frame from `base` over `[0, L]` in `steps` equal
/// Magnus steps.
pub fn integrate_pose(
    basis: &ShapeBasis,
    c: &ModalConfig,
    steps: usize,
    base: &Pose,
) -> Result<BackboneTrajectory> {
    check_steps(steps)?;
    basis.check_config(c)?;
    let l = basis.length();
    let h = l / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut t = *base;
    samples.push((0.0, t));
    for i in 0..steps {
        let a = i as f64 * h;
        let psi = magnus_twist(basis, c, a, h)?;
        t = t.compose(&exp_se3(&psi, 1.0));
        let s = if i + 1 == steps { l } else { (i + 1) as f64 * h };
        samples.push((s, t));
    }
    Ok(BackboneTrajectory { samples, steps })
}

/// Tip pose relative to an identity base.
pub fn tip_pose(basis: &ShapeBasis, c: &ModalConfig, steps: usize) -> Result<Pose> {
    Ok(*integrate_pose(basis, c, steps, &Pose::identity())?.tip())
}

/// Body Jacobian at `s_eval`, relative to the base frame.
///
/// Full steps of the trajectory grid are reused up to the step containing
/// `s_eval`, which is completed with a fractional step.
pub fn body_jacobian(
    basis: &ShapeBasis,
    c: &ModalConfig,
    steps: usize,
    s_eval: f64,
) -> Result<BodyJacobian> {
    check_steps(steps)?;
    basis.check_config(c)?;
    let l = basis.length();
    if !(s_eval >= 0.0 && s_eval <= l * (1.0 + 1e-12)) {
        return Err(Error::ArcLength { s: s_eval, length: l });
    }
    let s_eval = s_eval.min(l);
    let h = l / steps as f64;
    let m = basis.len();
    let mut jac = DMatrix::zeros(6, m);
    let mut pose = Pose::identity();
    let mut a = 0.0;
    for i in 0..steps {
        if a >= s_eval {
            break;
        }
        let end = if i + 1 == steps { l } else { (i + 1) as f64 * h };
        let step = end.min(s_eval) - a;
        let (psi, dpsi) = magnus_twist_with_derivative(basis, c, a, step)?;
        let factor = exp_se3(&psi, 1.0);
        let transport = to_dmatrix6(&factor.inverse().adjoint());
        jac = transport * jac + to_dmatrix6(&dexp_se3_left(&psi)) * dpsi;
        pose = pose.compose(&factor);
        a = end;
    }
    Ok(BodyJacobian {
        matrix: jac,
        s: s_eval,
        pose,
    })
}

/// `J̃ = blockdiag(R_tip, R_tip) · J`, with `R_tip` taken from the trajectory.
pub fn hybrid_jacobian(traj: &BackboneTrajectory, jac: &BodyJacobian) -> DMatrix<f64> {
    to_dmatrix6(&hybrid_map(&traj.tip().rotation)) * &jac.matrix
}

/// Tip pose (world frame, from `base`) and hybrid Jacobian in one pass.
pub fn tip_hybrid_jacobian(
    basis: &ShapeBasis,
    c: &ModalConfig,
    steps: usize,
    base: &Pose,
) -> Result<(Pose, DMatrix<f64>)> {
    let body = body_jacobian(basis, c, steps, basis.length())?;
    let tip = base.compose(&body.pose);
    Ok((tip, to_dmatrix6(&hybrid_map(&tip.rotation)) * body.matrix))
}

/// Relative central-difference step used for Jacobian coefficient
/// derivatives.
pub fn coefficient_step(ci: f64) -> f64 {
    1e-6_f64.max(1e-6 * ci.abs())
}

/// `∂J̃ᵀ/∂c_i` for every coefficient (each an `m × 6` matrix), by central
/// differences of [`tip_hybrid_jacobian`].
pub fn jacobian_coeff_derivatives(
    basis: &ShapeBasis,
    c: &ModalConfig,
    steps: usize,
) -> Result<Vec<DMatrix<f64>>> {
    jacobian_coeff_derivatives_with(basis, c, steps, coefficient_step)
}

/// As [`jacobian_coeff_derivatives`] with a caller-supplied step rule.
pub fn jacobian_coeff_derivatives_with(
    basis: &ShapeBasis,
    c: &ModalConfig,
    steps: usize,
    step_rule: impl Fn(f64) -> f64,
) -> Result<Vec<DMatrix<f64>>> {
    basis.check_config(c)?;
    let base = Pose::identity();
    (0..basis.len())
        .map(|i| {
            let h = step_rule(c[i]);
            let (_, plus) = tip_hybrid_jacobian(basis, &c.with_shift(i, h), steps, &base)?;
            let (_, minus) = tip_hybrid_jacobian(basis, &c.with_shift(i, -h), steps, &base)?;
            Ok(((plus - minus) / (2.0 * h)).transpose())
        })
        .collect()
}
