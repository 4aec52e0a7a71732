//! Bending energy and the analytic task-space compliance of a single rod.
//!
//! With `J̃` the hybrid-frame tip Jacobian and `H` the (constant) energy
//! Hessian, the compliance about an equilibrium loaded by `w_h` is
//!
//! ```text
//! C = J̃ (H − C_wh)⁻¹ J̃ᵀ,    C_wh[:, i] = (∂J̃ᵀ/∂c_i) w_h
//! ```

use nalgebra::{DMatrix, DVector, Matrix6};

use crate::error::Result;
use crate::kinematics::{coefficient_step, tip_hybrid_jacobian};
use crate::linalg::checked_inverse;
use crate::modal::{check_lengths, ModalConfig, RodProperties, ShapeBasis};
use crate::se3::{Pose, Twist, Wrench};

/// 6×6 hybrid-frame compliance: moment-first wrench in, angular-first twist
/// out.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceMatrix {
    pub matrix: Matrix6<f64>,
    /// Condition number of the inverted inner matrix.
    pub condition: f64,
}

impl ComplianceMatrix {
    pub fn apply(&self, dw: &Wrench) -> Twist {
        Twist::from_vector(&(self.matrix * dw.to_vector()))
    }

    /// Frobenius norm of the antisymmetric part.
    pub fn asymmetry(&self) -> f64 {
        (self.matrix - self.matrix.transpose()).norm() * 0.5
    }
}

pub(crate) fn to_matrix6(m: &DMatrix<f64>) -> Matrix6<f64> {
    Matrix6::from_column_slice(m.as_slice())
}

/// A rod discretized on a modal basis, with its energy Hessian precomputed.
#[derive(Debug, Clone)]
pub struct Rod {
    basis: ShapeBasis,
    props: RodProperties,
    steps: usize,
    hessian: DMatrix<f64>,
}

impl Rod {
    pub fn new(basis: ShapeBasis, props: RodProperties, steps: usize) -> Result<Self> {
        check_lengths(&basis, &props)?;
        let kernel = basis.energy_kernel(&props)?;
        let hessian = (&kernel + kernel.transpose()) * 0.5;
        Ok(Self {
            basis,
            props,
            steps,
            hessian,
        })
    }

    pub fn basis(&self) -> &ShapeBasis {
        &self.basis
    }

    pub fn props(&self) -> &RodProperties {
        &self.props
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `∂²E/∂c²`.
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn energy(&self, c: &ModalConfig) -> Result<f64> {
        self.basis.check_config(c)?;
        Ok(0.5 * c.0.dot(&(&self.hessian * &c.0)))
    }

    pub fn gradient(&self, c: &ModalConfig) -> Result<DVector<f64>> {
        self.basis.check_config(c)?;
        Ok(&self.hessian * &c.0)
    }

    /// Tip pose and hybrid Jacobian `J̃`.
    pub fn tip(&self, c: &ModalConfig) -> Result<(Pose, DMatrix<f64>)> {
        tip_hybrid_jacobian(&self.basis, c, self.steps, &Pose::identity())
    }

    /// `C_wh`, the wrench-weighted Jacobian derivative term.
    pub fn wrench_term(&self, c: &ModalConfig, w: &Wrench) -> Result<DMatrix<f64>> {
        c_wh(&self.basis, c, self.steps, w)
    }

    pub fn compliance(&self, c: &ModalConfig, w: &Wrench) -> Result<ComplianceMatrix> {
        let (_, jt) = self.tip(c)?;
        let inner = &self.hessian - self.wrench_term(c, w)?;
        congruence(&jt, &inner)
    }

    /// Compliance with the Jacobian-derivative term dropped.
    pub fn compliance_without_jacobian_derivative(
        &self,
        c: &ModalConfig,
    ) -> Result<ComplianceMatrix> {
        let (_, jt) = self.tip(c)?;
        congruence(&jt, &self.hessian)
    }
}

/// `J̃ A⁻¹ J̃ᵀ` with a conditioning check on `A`.
pub(crate) fn congruence(jt: &DMatrix<f64>, inner: &DMatrix<f64>) -> Result<ComplianceMatrix> {
    let (inv, condition) = checked_inverse(inner)?;
    Ok(ComplianceMatrix {
        matrix: to_matrix6(&(jt * inv * jt.transpose())),
        condition,
    })
}

/// `C_wh[:, i] = (∂J̃ᵀ/∂c_i) w`, by relative-scaled central differences.
pub fn c_wh(
    basis: &ShapeBasis,
    c: &ModalConfig,
    steps: usize,
    w: &Wrench,
) -> Result<DMatrix<f64>> {
    basis.check_config(c)?;
    let m = basis.len();
    let mut out = DMatrix::zeros(m, m);
    if w.is_zero() {
        return Ok(out);
    }
    let wv = DVector::from_column_slice(w.to_vector().as_slice());
    let base = Pose::identity();
    for i in 0..m {
        let h = coefficient_step(c[i]);
        let (_, plus) = tip_hybrid_jacobian(basis, &c.with_shift(i, h), steps, &base)?;
        let (_, minus) = tip_hybrid_jacobian(basis, &c.with_shift(i, -h), steps, &base)?;
        let col = (plus - minus).transpose() * &wv / (2.0 * h);
        out.set_column(i, &col);
    }
    Ok(out)
}

/// `E = ½ cᵀ Φ_k c`.
pub fn bending_energy(basis: &ShapeBasis, c: &ModalConfig, props: &RodProperties) -> Result<f64> {
    basis.check_config(c)?;
    let k = basis.energy_kernel(props)?;
    Ok(0.5 * c.0.dot(&(k * &c.0)))
}

/// `∂E/∂c = ½ (Φ_k + Φ_kᵀ) c`.
pub fn energy_gradient(
    basis: &ShapeBasis,
    c: &ModalConfig,
    props: &RodProperties,
) -> Result<DVector<f64>> {
    basis.check_config(c)?;
    Ok(energy_hessian(basis, props)? * &c.0)
}

/// `∂²E/∂c² = ½ (Φ_k + Φ_kᵀ)`.
pub fn energy_hessian(basis: &ShapeBasis, props: &RodProperties) -> Result<DMatrix<f64>> {
    let k = basis.energy_kernel(props)?;
    Ok((&k + k.transpose()) * 0.5)
}

pub fn single_rod_compliance(
    basis: &ShapeBasis,
    c: &ModalConfig,
    props: &RodProperties,
    steps: usize,
    w: &Wrench,
) -> Result<ComplianceMatrix> {
    Rod::new(basis.clone(), *props, steps)?.compliance(c, w)
}

pub fn single_rod_compliance_no_jacobian_derivative(
    basis: &ShapeBasis,
    c: &ModalConfig,
    props: &RodProperties,
    steps: usize,
) -> Result<ComplianceMatrix> {
    Rod::new(basis.clone(), *props, steps)?.compliance_without_jacobian_derivative(c)
}
