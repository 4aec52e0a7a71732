//! Randomized checks of the library's structural invariants.

use compliance_core::compliance::single_rod_compliance;
use compliance_core::kinematics::{integrate_pose, tip_pose};
use compliance_core::modal::chebyshev_eval;
use compliance_core::{
    ModalConfig, Pose, Rod, RodProperties, SegmentModel, ShapeBasis, TendonRouting, Wrench,
};
use nalgebra::DVector;
use proptest::prelude::*;

const L: f64 = 0.2;

fn config(values: &[f64], m: usize) -> ModalConfig {
    ModalConfig(DVector::from_fn(m, |i, _| values[i % values.len()]))
}

/// Scales `c` so that `Σ|c_i| L ≤ limit`, which bounds `‖u‖ L` by `limit`.
fn bounded(c: ModalConfig, limit: f64) -> ModalConfig {
    let sum: f64 = c.0.iter().map(|v| v.abs()).sum();
    if sum * L > limit {
        ModalConfig(c.0 * (limit / (sum * L)))
    } else {
        c
    }
}

fn coefficients() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 33)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chebyshev_matches_cosine(n in 0usize..=12, theta in 0.0f64..std::f64::consts::PI) {
        let t = chebyshev_eval(n, theta.cos()).unwrap();
        prop_assert!((t - (n as f64 * theta).cos()).abs() < 1e-12);
    }

    #[test]
    fn energy_kernel_is_positive_definite(
        n in 0usize..=8,
        torsion_free in any::<bool>(),
        ei_x in 0.01f64..10.0,
        ei_y in 0.01f64..10.0,
        gj in 0.01f64..10.0,
    ) {
        let b = if torsion_free { ShapeBasis::torsion_free(n, L) } else { ShapeBasis::uniform(n, L) }.unwrap();
        let props = RodProperties::new(L, ei_x, ei_y, gj).unwrap();
        let k = b.energy_kernel(&props).unwrap();
        let eig = k.symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() > 0.0);
    }

    #[test]
    fn trajectory_poses_are_rotations(n in 0usize..=6, values in coefficients(), steps in 1usize..=20) {
        let b = ShapeBasis::uniform(n, L).unwrap();
        let c = config(&values, b.len());
        let traj = integrate_pose(&b, &c, steps, &Pose::identity()).unwrap();
        for (_, p) in &traj.samples {
            prop_assert!(p.orthonormality_error() < 1e-10);
            prop_assert!((p.rotation.determinant() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ten_steps_resolve_cubic_shapes(n in 0usize..=3, values in coefficients()) {
        let b = ShapeBasis::uniform(n, L).unwrap();
        let c = bounded(config(&values, b.len()), std::f64::consts::PI);
        let coarse = tip_pose(&b, &c, 10).unwrap();
        let fine = tip_pose(&b, &c, 10_000).unwrap();
        let e = (coarse.position - fine.position).norm();
        prop_assert!(e < 1e-8 * L, "err {e:e} rel {:e}", e / L);
    }

    #[test]
    fn doubling_stiffness_halves_compliance(n in 0usize..=4, values in coefficients()) {
        let b = ShapeBasis::uniform(n, L).unwrap();
        let c = bounded(config(&values, b.len()), 2.0);
        let p = RodProperties::circular(L, 0.002, 60e9, 0.3).unwrap();
        let stiff = p.scaled_stiffness(2.0).unwrap();
        let c1 = single_rod_compliance(&b, &c, &p, 10, &Wrench::zero()).unwrap().matrix;
        let c2 = single_rod_compliance(&b, &c, &stiff, 10, &Wrench::zero()).unwrap().matrix;
        prop_assert!((c1 * 0.5 - c2).amax() < 1e-12 * c1.amax());
    }

    #[test]
    fn slack_free_segment_reduces_to_single_rod(n in 0usize..=3, values in coefficients()) {
        let b = ShapeBasis::torsion_free(n, L).unwrap();
        let c = bounded(config(&values, b.len()), 2.0);
        let props = RodProperties::new(L, 0.05, 0.05, 0.04).unwrap();
        let rod = Rod::new(b, props, 10).unwrap();
        let single = rod.compliance(&c, &Wrench::zero()).unwrap().matrix;
        let routing = TendonRouting::constant_pitch(3, 0.01, L).unwrap();
        let model = SegmentModel::new(rod, routing, DVector::zeros(3)).unwrap();
        let seg = model.task_space_compliance(&c, &DVector::zeros(3), &Wrench::zero()).unwrap().matrix;
        prop_assert!((single - seg).amax() <= 1e-12 * single.amax());
    }

    #[test]
    fn tendon_stiffness_never_adds_compliance(
        n in 0usize..=3,
        values in coefficients(),
        k in prop::collection::vec(0.0f64..1e4, 4),
        extra in prop::collection::vec(0.0f64..1e4, 4),
    ) {
        let b = ShapeBasis::torsion_free(n, L).unwrap();
        let c = bounded(config(&values, b.len()), 2.0);
        let props = RodProperties::new(L, 0.05, 0.05, 0.04).unwrap();
        let rod = Rod::new(b, props, 10).unwrap();
        let routing = TendonRouting::constant_pitch(4, 0.01, L).unwrap();
        let soft = DVector::from_vec(k.clone());
        let hard = DVector::from_fn(4, |i, _| k[i] + extra[i]);
        let tau = DVector::zeros(4);
        let cs = SegmentModel::new(rod.clone(), routing.clone(), soft).unwrap()
            .task_space_compliance(&c, &tau, &Wrench::zero()).unwrap().matrix;
        let ch = SegmentModel::new(rod, routing, hard).unwrap()
            .task_space_compliance(&c, &tau, &Wrench::zero()).unwrap().matrix;
        for i in 3..6 {
            prop_assert!(ch[(i, i)] <= cs[(i, i)] * (1.0 + 1e-10) + 1e-15);
        }
    }
}
