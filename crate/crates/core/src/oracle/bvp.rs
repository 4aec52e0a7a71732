//! Kirchhoff rod equilibrium under a tip wrench, by shooting on the base
//! reactions.
//!
//! ```text
//! p' = R e₃,  R' = R û,  u = K⁻¹ Rᵀ m,  n' = 0,  m' = −(R e₃) × n
//! ```
//!
//! with `n(L) = f` and `m(L) = m_tip`; `n` and `m` are the internal force and
//! moment in the world frame.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};

use super::newton::{damped_newton, NewtonOptions};
use crate::error::{Error, Result};
use crate::modal::RodProperties;
use crate::se3::{hat3, Pose, Wrench};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// Runge–Kutta steps over the rod length.
    pub steps: usize,
    pub newton: NewtonOptions,
    /// Load fractions used when a direct solve fails.
    pub continuation: [f64; 4],
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            newton: NewtonOptions::with_tolerance(1e-10),
            continuation: [0.25, 0.5, 0.75, 1.0],
        }
    }
}

/// Rod state at one arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodState {
    pub s: f64,
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl RodState {
    pub fn pose(&self) -> Pose {
        Pose::new(self.rotation, self.position)
    }

    /// Body-frame curvature `K⁻¹ Rᵀ m`.
    pub fn curvature(&self, props: &RodProperties) -> Vector3<f64> {
        (self.rotation.transpose() * self.moment).component_div(&props.stiffness())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RodEquilibrium {
    pub samples: Vec<RodState>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// `[n(0); m(0)]`, usable as a warm start.
    pub base_reaction: Vector6<f64>,
}

impl RodEquilibrium {
    pub fn tip(&self) -> &RodState {
        self.samples.last().expect("equilibrium has samples")
    }

    pub fn tip_pose(&self) -> Pose {
        self.tip().pose()
    }

    /// `(s, u(s))` at every integration node.
    pub fn curvature_samples(&self, props: &RodProperties) -> Vec<(f64, Vector3<f64>)> {
        self.samples.iter().map(|st| (st.s, st.curvature(props))).collect()
    }
}

#[derive(Clone, Copy)]
struct Derivative {
    rotation: Matrix3<f64>,
    position: Vector3<f64>,
    force: Vector3<f64>,
    moment: Vector3<f64>,
}

fn derivative(st: &RodState, props: &RodProperties) -> Derivative {
    let u = st.curvature(props);
    let tangent = st.rotation.column(2).into_owned();
    Derivative {
        rotation: st.rotation * hat3(&u),
        position: tangent,
        force: Vector3::zeros(),
        moment: -tangent.cross(&st.force),
    }
}

fn advance(st: &RodState, d: &Derivative, h: f64) -> RodState {
    RodState {
        s: st.s + h,
        rotation: st.rotation + d.rotation * h,
        position: st.position + d.position * h,
        force: st.force + d.force * h,
        moment: st.moment + d.moment * h,
    }
}

/// Classical RK4 from the base with the given reactions.
pub fn integrate(
    props: &RodProperties,
    base: &Pose,
    reaction: &Vector6<f64>,
    steps: usize,
) -> Vec<RodState> {
    let l = props.length();
    let h = l / steps as f64;
    let mut st = RodState {
        s: 0.0,
        rotation: base.rotation,
        position: base.position,
        force: reaction.fixed_rows::<3>(0).into_owned(),
        moment: reaction.fixed_rows::<3>(3).into_owned(),
    };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(st);
    for i in 0..steps {
        let k1 = derivative(&st, props);
        let k2 = derivative(&advance(&st, &k1, h / 2.0), props);
        let k3 = derivative(&advance(&st, &k2, h / 2.0), props);
        let k4 = derivative(&advance(&st, &k3, h), props);
        let sum = Derivative {
            rotation: k1.rotation + (k2.rotation + k3.rotation) * 2.0 + k4.rotation,
            position: k1.position + (k2.position + k3.position) * 2.0 + k4.position,
            force: k1.force + (k2.force + k3.force) * 2.0 + k4.force,
            moment: k1.moment + (k2.moment + k3.moment) * 2.0 + k4.moment,
        };
        st = advance(&st, &sum, h / 6.0);
        st.s = if i + 1 == steps { l } else { (i + 1) as f64 * h };
        out.push(st);
    }
    out
}

fn boundary_residual(tip: &RodState, w: &Wrench) -> DVector<f64> {
    DVector::from_iterator(
        6,
        (tip.force - w.force).iter().chain((tip.moment - w.moment).iter()).copied(),
    )
}

fn to6(x: &DVector<f64>) -> Vector6<f64> {
    Vector6::from_column_slice(x.as_slice())
}

/// Base reactions of a rigid straight rod, a good first guess.
pub fn straight_guess(props: &RodProperties, w: &Wrench, base: &Pose) -> Vector6<f64> {
    let span = base.rotation * Vector3::new(0.0, 0.0, props.length());
    let m0 = w.moment + span.cross(&w.force);
    Vector6::new(w.force.x, w.force.y, w.force.z, m0.x, m0.y, m0.z)
}

/// Equilibrium under a world-frame tip wrench (moment about the tip point),
/// with continuation from the straight guess.
pub fn solve_rod_bvp(props: &RodProperties, w: &Wrench, base: &Pose) -> Result<RodEquilibrium> {
    solve_rod_bvp_with(props, w, base, None, &BvpOptions::default())
}

/// As [`solve_rod_bvp`], optionally warm-started from a nearby reaction.
pub fn solve_rod_bvp_with(
    props: &RodProperties,
    w: &Wrench,
    base: &Pose,
    guess: Option<&Vector6<f64>>,
    options: &BvpOptions,
) -> Result<RodEquilibrium> {
    if options.steps == 0 {
        return Err(Error::InvalidParameter("BVP needs at least one step".into()));
    }
    if let Some(g) = guess {
        if let Ok(eq) = shoot(props, w, base, g, options) {
            return Ok(eq);
        }
    }
    let mut reaction = straight_guess(props, &Wrench::zero(), base);
    let mut last = None;
    for frac in options.continuation {
        let wf = w.scaled(frac);
        let seed = if last.is_none() {
            straight_guess(props, &wf, base)
        } else {
            reaction
        };
        let eq = shoot(props, &wf, base, &seed, options)?;
        reaction = eq.base_reaction;
        last = Some(eq);
    }
    last.ok_or_else(|| Error::InvalidParameter("empty continuation schedule".into()))
}

fn shoot(
    props: &RodProperties,
    w: &Wrench,
    base: &Pose,
    guess: &Vector6<f64>,
    options: &BvpOptions,
) -> Result<RodEquilibrium> {
    let steps = options.steps;
    let residual = |x: &DVector<f64>| {
        let tip = *integrate(props, base, &to6(x), steps).last().expect("non-empty");
        Ok(boundary_residual(&tip, w))
    };
    let jacobian = |x: &DVector<f64>| {
        let mut j = DMatrix::zeros(6, 6);
        for k in 0..6 {
            let h = 1e-6 * x[k].abs().max(1e-2);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let col = (residual(&xp)? - residual(&xm)?) / (2.0 * h);
            j.set_column(k, &col);
        }
        Ok(j)
    };
    let x0 = DVector::from_column_slice(guess.as_slice());
    let out = damped_newton(x0, residual, jacobian, &options.newton)?;
    let reaction = to6(&out.x);
    Ok(RodEquilibrium {
        samples: integrate(props, base, &reaction, steps),
        residual_norm: out.residual_norm,
        iterations: out.iterations,
        base_reaction: reaction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn nitinol() -> RodProperties {
        RodProperties::circular(0.2, 0.002, 60e9, 0.3).unwrap()
    }

    #[test]
    fn unloaded_rod_is_straight() {
        let eq = solve_rod_bvp(&nitinol(), &Wrench::zero(), &Pose::identity()).unwrap();
        assert!((eq.tip().position - Vector3::new(0.0, 0.0, 0.2)).norm() < 1e-14);
        assert!(eq.residual_norm < 1e-10);
    }

    #[test]
    fn pure_moment_quarter_circle() {
        let p = nitinol();
        let l = p.length();
        let ei = p.stiffness().x;
        let w = Wrench::new(Vector3::new(ei * PI / (2.0 * l), 0.0, 0.0), Vector3::zeros());
        let eq = solve_rod_bvp(&p, &w, &Pose::identity()).unwrap();
        let r = 2.0 * l / PI;
        assert!((eq.tip().position - Vector3::new(0.0, -r, r)).norm() < 1e-9);
        for (_, u) in eq.curvature_samples(&p) {
            assert!((u - Vector3::new(PI / (2.0 * l), 0.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn small_force_matches_linear_cantilever() {
        let p = nitinol();
        let f = 1e-4;
        let eq = solve_rod_bvp(&p, &Wrench::new(Vector3::zeros(), Vector3::new(f, 0.0, 0.0)), &Pose::identity()).unwrap();
        let expected = f * 0.2f64.powi(3) / (3.0 * p.stiffness().y);
        assert!((eq.tip().position.x - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn internal_force_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let p = nitinol();
        let f = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let m = Vector3::from_fn(|_, _| rng.gen_range(-0.5..0.5));
        let eq = solve_rod_bvp(&p, &Wrench::new(m, f), &Pose::identity()).unwrap();
        for st in &eq.samples {
            assert!((st.force - f).norm() < 1e-12);
            assert!((st.rotation.transpose() * st.rotation - Matrix3::identity()).norm() < 1e-9);
        }
        assert!(eq.residual_norm < 1e-10);
    }

    #[test]
    fn deterministic_and_warm_startable() {
        let p = nitinol();
        let w = Wrench::new(Vector3::new(0.2, -0.1, 0.05), Vector3::new(0.5, 0.3, -0.2));
        let a = solve_rod_bvp(&p, &w, &Pose::identity()).unwrap();
        let b = solve_rod_bvp(&p, &w, &Pose::identity()).unwrap();
        assert_eq!(a, b);
        let w2 = w + Wrench::new(Vector3::zeros(), Vector3::new(0.1, 0.0, 0.0));
        let warm = solve_rod_bvp_with(&p, &w2, &Pose::identity(), Some(&a.base_reaction), &BvpOptions::default()).unwrap();
        let cold = solve_rod_bvp(&p, &w2, &Pose::identity()).unwrap();
        assert!((warm.tip().position - cold.tip().position).norm() < 1e-10);
    }

    #[test]
    fn base_pose_transforms_solution() {
        let p = nitinol();
        let base = Pose::new(crate::se3::exp_so3(&Vector3::new(0.3, -0.2, 0.5)), Vector3::new(1.0, 2.0, 3.0));
        let w_local = Wrench::new(Vector3::new(0.1, 0.0, 0.0), Vector3::new(0.0, 0.4, 0.0));
        let local = solve_rod_bvp(&p, &w_local, &Pose::identity()).unwrap();
        let w_world = Wrench::new(base.rotation * w_local.moment, base.rotation * w_local.force);
        let world = solve_rod_bvp(&p, &w_world, &base).unwrap();
        let expected = base.compose(&local.tip_pose());
        assert!((world.tip().position - expected.position).norm() < 1e-10);
    }
}
