use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged once the residual 2-norm drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step halvings tried before an iteration is declared stalled.
    pub max_halvings: usize,
}

impl NewtonOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            max_iterations: 100,
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Newton iteration with a halving line search on the residual norm.
pub fn damped_newton(
    x0: DVector<f64>,
    residual: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    jacobian: impl Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
    options: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let mut x = x0;
    let mut r = residual(&x)?;
    let mut norm = r.norm();
    let mut history = vec![norm];
    let fail = |x: &DVector<f64>, norm: f64, iterations: usize, history: &[f64]| {
        Error::NoConvergence {
            iterations,
            residual: norm,
            last_iterate: x.iter().copied().collect(),
            residual_history: history.to_vec(),
        }
    };
    for iteration in 0..=options.max_iterations {
        if norm < options.tolerance {
            return Ok(NewtonOutcome {
                x,
                residual_norm: norm,
                iterations: iteration,
                residual_history: history,
            });
        }
        if iteration == options.max_iterations || !norm.is_finite() {
            break;
        }
        let j = jacobian(&x)?;
        let step = match j.clone().lu().solve(&(-&r)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => j
                .svd(true, true)
                .solve(&(-&r), 1e-14)
                .map_err(|_| fail(&x, norm, iteration, &history))?,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=options.max_halvings {
            let trial = &x + &step * t;
            if let Ok(rt) = residual(&trial) {
                let nt = rt.norm();
                if nt < norm {
                    x = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        history.push(norm);
        if !accepted {
            return Err(fail(&x, norm, iteration + 1, &history));
        }
    }
    Err(fail(&x, norm, options.max_iterations, &history))
}
