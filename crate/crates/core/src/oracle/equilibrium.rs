//! Newton solution of the modal statics.

use nalgebra::{DMatrix, DVector};

use super::newton::{damped_newton, NewtonOptions};
use crate::compliance::Rod;
use crate::error::Result;
use crate::modal::ModalConfig;
use crate::se3::Wrench;
use crate::tendon::{SegmentModel, TendonActuation};

/// Residual tolerance of the modal solvers.
pub const MODAL_TOLERANCE: f64 = 1e-9;

const CONTINUATION: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ModalEquilibrium {
    pub config: ModalConfig,
    pub residual_norm: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Source of tendon tensions during a segment solve.
#[derive(Debug, Clone, Copy)]
pub enum TendonLoad<'a> {
    /// Tensions held fixed.
    Fixed(&'a DVector<f64>),
    /// Tensions from spring tendons, `τ = K_ℓ (ℓ(c) − ℓ_rest)`.
    Springs(&'a TendonActuation),
}

fn wrench_vector(w: &Wrench) -> DVector<f64> {
    DVector::from_column_slice(w.to_vector().as_slice())
}

/// Direct solve from `c_init`, falling back to load continuation.
fn with_continuation(
    c_init: &ModalConfig,
    w: &Wrench,
    solve: impl Fn(&ModalConfig, &Wrench) -> Result<ModalEquilibrium>,
) -> Result<ModalEquilibrium> {
    let direct = solve(c_init, w);
    if direct.is_ok() || w.is_zero() {
        return direct;
    }
    let mut c = c_init.clone();
    let mut last = direct;
    for frac in CONTINUATION {
        let eq = solve(&c, &w.scaled(frac))?;
        c = eq.config.clone();
        last = Ok(eq);
    }
    last
}

fn finish(out: super::newton::NewtonOutcome) -> ModalEquilibrium {
    ModalEquilibrium {
        config: ModalConfig(out.x),
        residual_norm: out.residual_norm,
        iterations: out.iterations,
        residual_history: out.residual_history,
    }
}

/// Equilibrium of a rod loaded at the tip: `∂E/∂c − J̃ᵀ w = 0`.
pub fn solve_modal_equilibrium(
    rod: &Rod,
    w: &Wrench,
    c_init: &ModalConfig,
) -> Result<ModalEquilibrium> {
    rod.basis().check_config(c_init)?;
    let options = NewtonOptions::with_tolerance(MODAL_TOLERANCE);
    with_continuation(c_init, w, |c0, w| {
        let wv = wrench_vector(w);
        let residual = |x: &DVector<f64>| {
            let c = ModalConfig(x.clone());
            let (_, jt) = rod.tip(&c)?;
            Ok(rod.gradient(&c)? - jt.transpose() * &wv)
        };
        let jacobian = |x: &DVector<f64>| {
            let c = ModalConfig(x.clone());
            Ok(rod.hessian() - rod.wrench_term(&c, w)?)
        };
        damped_newton(c0.0.clone(), residual, jacobian, &options).map(finish)
    })
}

/// Equilibrium of a tendon-actuated segment under the model's statics.
pub fn solve_segment_equilibrium(
    model: &SegmentModel,
    load: TendonLoad<'_>,
    w: &Wrench,
    c_init: &ModalConfig,
) -> Result<ModalEquilibrium> {
    model.basis().check_config(c_init)?;
    let options = NewtonOptions::with_tolerance(MODAL_TOLERANCE);
    let tensions = |c: &ModalConfig| match load {
        TendonLoad::Fixed(tau) => Ok(tau.clone()),
        TendonLoad::Springs(act) => act.tensions(model, c),
    };
    with_continuation(c_init, w, |c0, w| {
        let residual = |x: &DVector<f64>| {
            let c = ModalConfig(x.clone());
            model.statics_residual(&c, &tensions(&c)?, w)
        };
        let jacobian = |x: &DVector<f64>| -> Result<DMatrix<f64>> {
            let c = ModalConfig(x.clone());
            let tau = tensions(&c)?;
            let tendon = match load {
                TendonLoad::Fixed(_) => model.c_tau(&c, &tau)? * model.sign().factor(),
                TendonLoad::Springs(_) => model.tendon_stiffness_term(&c, &tau)?,
            };
            Ok(model.rod().hessian() - model.c_wh(&c, w)? + tendon)
        };
        damped_newton(c0.0.clone(), residual, jacobian, &options).map(finish)
    })
}
