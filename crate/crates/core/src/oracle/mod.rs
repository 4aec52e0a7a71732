//! Ground-truth solvers used to check the analytic compliance: a shooting
//! solver for the Kirchhoff rod equations, Newton on the modal statics,
//! finite-difference compliance and modal fitting of sampled curvature.

pub mod bvp;
pub mod equilibrium;
pub mod newton;

use nalgebra::{DMatrix, DVector, Matrix6, Vector3};

pub use bvp::{solve_rod_bvp, solve_rod_bvp_with, BvpOptions, RodEquilibrium, RodState};
pub use equilibrium::{
    solve_modal_equilibrium, solve_segment_equilibrium, ModalEquilibrium, TendonLoad,
};
pub use newton::NewtonOptions;

use crate::error::{Error, Result};
use crate::modal::{ModalConfig, RodProperties, ShapeBasis};
use crate::se3::{log_so3, Wrench};

/// Wrench increments of the rod study, moment-first: 0.05 N·m then 0.1 N.
pub const PAPER_INCREMENTS: [f64; 6] = [0.05, 0.05, 0.05, 0.1, 0.1, 0.1];

/// Tip motion between two equilibria, in the hybrid frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TipIncrement {
    /// `δθ` with `R₁ = exp(δθ^) R₀`.
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
    pub equilibrium: RodEquilibrium,
}

/// Re-solves the rod under `w0 + dw`, warm-started from `eq0`.
pub fn tip_increment(
    props: &RodProperties,
    w0: &Wrench,
    eq0: &RodEquilibrium,
    dw: &Wrench,
    options: &BvpOptions,
) -> Result<TipIncrement> {
    let base = eq0.samples[0].pose();
    let eq1 = solve_rod_bvp_with(props, &(*w0 + *dw), &base, Some(&eq0.base_reaction), options)?;
    let (t0, t1) = (eq0.tip(), eq1.tip());
    Ok(TipIncrement {
        rotation: log_so3(&(t1.rotation * t0.rotation.transpose())),
        translation: t1.position - t0.position,
        equilibrium: eq1,
    })
}

/// Forward-difference compliance: column `j` is the tip motion under an
/// increment `increments[j]` along wrench axis `j`, divided by that step.
pub fn finite_difference_compliance(
    props: &RodProperties,
    w0: &Wrench,
    eq0: &RodEquilibrium,
    increments: &[f64; 6],
) -> Result<Matrix6<f64>> {
    let mut out = Matrix6::zeros();
    for (j, &step) in increments.iter().enumerate() {
        if step.is_nan() || step <= 0.0 {
            return Err(Error::InvalidParameter(format!("increment {j} must be positive")));
        }
        let mut v = nalgebra::Vector6::zeros();
        v[j] = step;
        let inc = tip_increment(props, w0, eq0, &Wrench::from_vector(&v), &BvpOptions::default())?;
        for k in 0..3 {
            out[(k, j)] = inc.rotation[k] / step;
            out[(k + 3, j)] = inc.translation[k] / step;
        }
    }
    Ok(out)
}

/// Least-squares modal coefficients for curvature samples `(s, u)`.
pub fn fit_modal_coefficients(
    samples: &[(f64, Vector3<f64>)],
    basis: &ShapeBasis,
) -> Result<ModalConfig> {
    let m = basis.len();
    let mut a = DMatrix::zeros(3 * samples.len(), m);
    let mut b = DVector::zeros(3 * samples.len());
    for (k, (s, u)) in samples.iter().enumerate() {
        let phi = basis.eval_phi(*s)?;
        a.view_mut((3 * k, 0), (3, m)).copy_from(&phi);
        b.fixed_rows_mut::<3>(3 * k).copy_from(u);
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let rank = sv.iter().filter(|v| **v > 1e-12 * max).count();
    if rank < m || max == 0.0 {
        return Err(Error::RankDeficient { rank, needed: m });
    }
    let c = svd
        .solve(&b, 1e-12 * max)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ModalConfig(c))
}
