//! Tendon-actuated segment scenario: task-space compliance predictions of a
//! low-order model against re-solved equilibria of a higher-order model.

use std::time::Instant;

use compliance_core::kinematics::tip_pose;
use compliance_core::oracle::{fit_modal_coefficients, solve_segment_equilibrium, TendonLoad};
use compliance_core::se3::log_so3;
use compliance_core::{
    ModalConfig, Rod, RodProperties, SegmentModel, ShapeBasis, TendonActuation, TendonRouting, Wrench,
};
use nalgebra::{DVector, Vector3};

use crate::config::{ExperimentConfig, SegmentSpec};
use crate::report::{spearman, Exclusion, Row, Status, StudyReport};
use crate::study::{metadata, motion_errors, Motion, StudyError};

/// Curvature samples used to read the oracle shape into the model basis.
const SENSING_SAMPLES: usize = 41;

pub fn segment_properties(spec: &SegmentSpec) -> RodProperties {
    let ei = spec.bending_stiffness;
    RodProperties::new(spec.length, ei, ei, ei * spec.torsion_ratio).expect("segment spec validated on load")
}

/// Torsion-free segment model of order `n` with `steps` Magnus steps.
pub fn segment_model(spec: &SegmentSpec, n: usize, steps: usize) -> compliance_core::Result<SegmentModel> {
    let rod = Rod::new(ShapeBasis::torsion_free(n, spec.length)?, segment_properties(spec), steps)?;
    let routing = TendonRouting::constant_pitch(spec.tendon_count, spec.pitch_radius, spec.length)?;
    Ok(
        SegmentModel::new(rod, routing, DVector::from_element(spec.tendon_count, spec.tendon_stiffness))?
            .with_sign(spec.sign)
            .with_quadrature_nodes(spec.quadrature_nodes),
    )
}

/// Tendon pulls for actuator angles: tendons 0 and 2 share actuator 1,
/// tendons 1 and 3 share actuator 2, wound in opposite senses.
pub fn actuator_pulls(spec: &SegmentSpec, theta: (f64, f64)) -> DVector<f64> {
    let (a, b) = (theta.0 * spec.pulley_radius, theta.1 * spec.pulley_radius);
    DVector::from_vec(vec![a, b, -a, -b])
}

/// Least-squares coefficients of the oracle curvature in `model`'s basis.
pub fn sense_shape(
    oracle: &SegmentModel,
    c_oracle: &ModalConfig,
    model: &SegmentModel,
) -> compliance_core::Result<ModalConfig> {
    let l = oracle.basis().length();
    let samples = (0..SENSING_SAMPLES)
        .map(|k| {
            let s = l * k as f64 / (SENSING_SAMPLES - 1) as f64;
            Ok((s, oracle.basis().curvature(c_oracle, s)?))
        })
        .collect::<compliance_core::Result<Vec<_>>>()?;
    fit_modal_coefficients(&samples, model.basis())
}

fn motion(oracle: &SegmentModel, steps: usize, c0: &ModalConfig, c1: &ModalConfig) -> compliance_core::Result<Motion> {
    let t0 = tip_pose(oracle.basis(), c0, steps)?;
    let t1 = tip_pose(oracle.basis(), c1, steps)?;
    Ok(Motion {
        rotation: log_so3(&(t1.rotation * t0.rotation.transpose())),
        translation: t1.position - t0.position,
    })
}

struct ConfigurationOutcome {
    rows: Vec<Row>,
    exclusions: Vec<Exclusion>,
    c_tau_norm: f64,
    c_tau_relative: f64,
    min_tension: f64,
}

fn run_configuration(
    spec: &SegmentSpec,
    index: usize,
    model: &SegmentModel,
    oracle: &SegmentModel,
) -> compliance_core::Result<ConfigurationOutcome> {
    let n = spec.order;
    let pulls = actuator_pulls(spec, spec.configurations[index]);
    let act = TendonActuation::from_pulls(oracle, &pulls, spec.pretension)?;
    let zero = ModalConfig::zeros(oracle.basis().len());
    let eq0 = solve_segment_equilibrium(oracle, TendonLoad::Springs(&act), &Wrench::zero(), &zero)?;
    let mut min_tension = act.tensions(oracle, &eq0.config)?.min();

    // Unloaded shape read into the model basis, as shape sensing would.
    let c0 = sense_shape(oracle, &eq0.config, model)?;
    let tau0 = act.tensions(model, &c0)?;
    let c_tau_norm = model.c_tau(&c0, &tau0)?.norm();
    let c_tau_relative = c_tau_norm / (1.0 + tau0.norm());
    let start = Instant::now();
    let cx = model.task_space_compliance(&c0, &tau0, &Wrench::zero())?;
    let time_us = start.elapsed().as_secs_f64() * 1e6;

    let mut rows = Vec::new();
    let mut exclusions = Vec::new();
    for pull in &spec.pulls {
        let w = Wrench::new(Vector3::zeros(), pull.direction * pull.force);
        let mut row = Row {
            shape_id: index,
            order: n,
            wrench_axis: pull.label.clone(),
            increment: pull.force,
            e_p_mm: None,
            rot_err_deg: None,
            time_us: None,
            status: Status::OracleFailed,
        };
        let truth = solve_segment_equilibrium(oracle, TendonLoad::Springs(&act), &w, &eq0.config).and_then(|eq1| {
            let tau = act.tensions(oracle, &eq1.config)?;
            Ok((motion(oracle, spec.oracle_steps, &eq0.config, &eq1.config)?, tau.min()))
        });
        match truth {
            Ok((m, tension)) if tension >= 0.0 => {
                min_tension = min_tension.min(tension);
                let predicted = cx.matrix * w.to_vector();
                let (e_p, rot) = motion_errors(&predicted, &m);
                row.e_p_mm = Some(e_p);
                row.rot_err_deg = Some(rot);
                row.time_us = Some(time_us);
                row.status = Status::Ok;
            }
            Ok((_, tension)) => exclusions.push(Exclusion {
                shape_id: index,
                reason: format!("pull {} {} N leaves a slack tendon ({tension} N)", pull.label, pull.force),
            }),
            Err(e) => exclusions.push(Exclusion {
                shape_id: index,
                reason: format!("pull {} {} N: {e}", pull.label, pull.force),
            }),
        }
        rows.push(row);
    }
    Ok(ConfigurationOutcome {
        rows,
        exclusions,
        c_tau_norm,
        c_tau_relative,
        min_tension,
    })
}

/// Tip-load predictions for every configuration and pull of the scenario.
/// Rows use the configuration index as `shape_id`, the pull direction as
/// `wrench_axis` and the pull force (N) as `increment`.
pub fn run_segment_scenario(cfg: &ExperimentConfig) -> Result<StudyReport, StudyError> {
    let spec = &cfg.segment;
    let model = segment_model(spec, spec.order, spec.steps)?;
    let oracle = segment_model(spec, spec.oracle_order, spec.oracle_steps)?;

    let mut rows = Vec::new();
    let mut exclusions = Vec::new();
    let mut c_tau_max: f64 = 0.0;
    let mut c_tau_relative: f64 = 0.0;
    let mut min_tension = f64::INFINITY;
    for index in 0..spec.configurations.len() {
        match run_configuration(spec, index, &model, &oracle) {
            Ok(out) => {
                rows.extend(out.rows);
                exclusions.extend(out.exclusions);
                c_tau_max = c_tau_max.max(out.c_tau_norm);
                c_tau_relative = c_tau_relative.max(out.c_tau_relative);
                min_tension = min_tension.min(out.min_tension);
            }
            Err(e) => exclusions.push(Exclusion {
                shape_id: index,
                reason: format!("unloaded equilibrium: {e}"),
            }),
        }
    }
    if rows.is_empty() && !spec.configurations.is_empty() && !spec.pulls.is_empty() {
        return Err(StudyError::NoShapes);
    }

    let assumptions = vec![
        format!(
            "ground truth from the tendon statics at order {} with {} Magnus steps; the model runs at order {} with {} steps",
            spec.oracle_order, spec.oracle_steps, spec.order, spec.steps
        ),
        format!(
            "{} tendons at 90 degree spacing; actuator angle times a {} m pulley radius gives the pull, opposite tendons released by the same amount",
            spec.tendon_count, spec.pulley_radius
        ),
        format!("uniform pretension {} N", spec.pretension),
        "the unloaded model shape is a least-squares fit of the oracle curvature".to_string(),
        "pull directions are synthetic: horizontal forces at the tip along +-x, +-y and two diagonals".to_string(),
        format!("tendon sign convention: {:?}", spec.sign),
    ];
    let mut meta = metadata(cfg, &[spec.order], spec.steps, assumptions);
    meta.quadrature = vec![crate::report::QuadratureNodes {
        order: spec.order,
        energy_kernel_nodes: model.basis().energy_kernel_nodes(),
    }];
    meta.coefficient_source = "fit".to_string();
    meta.oracle_rk4_steps = 0;

    let mut report = StudyReport::new("segment", meta, exclusions, rows);
    let ok: Vec<&Row> = report.rows.iter().filter(|r| r.status == Status::Ok).collect();
    let errors: Vec<f64> = ok.iter().filter_map(|r| r.e_p_mm).collect();
    let forces: Vec<f64> = ok.iter().map(|r| r.increment).collect();
    let pct = |mm: f64| mm * 1e-3 / spec.length * 100.0;
    if let Some(a) = report.aggregate_for(spec.order).cloned() {
        if let (Some(mean), Some(max)) = (a.mean_e_p_mm, a.max_e_p_mm) {
            report.extras.insert("mean_e_p_percent_length".into(), pct(mean));
            report.extras.insert("max_e_p_percent_length".into(), pct(max));
        }
    }
    if let Some(rho) = spearman(&forces, &errors) {
        report.extras.insert("spearman_force_error".into(), rho);
    }
    // Zero up to the finite-difference noise of the tendon Jacobian.
    report.extras.insert("c_tau_norm_max".into(), c_tau_max);
    report.extras.insert("c_tau_relative_max".into(), c_tau_relative);
    if min_tension.is_finite() {
        report.extras.insert("min_tension_n".into(), min_tension);
    }
    Ok(report)
}

/// Outcome of predicting coefficient increments with the configuration-space
/// compliance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigComplianceCheck {
    /// `‖δc_pred − δc‖ / ‖δc‖` per configuration and increment axis.
    pub relative_errors: Vec<f64>,
}

/// For every configuration and each force axis, solves the model statics
/// under `w0` and `w0 + step·e`, then predicts the coefficient change from
/// the projected-wrench change through `C_c`.
pub fn check_config_compliance(
    spec: &SegmentSpec,
    w0: &Wrench,
    step: f64,
) -> compliance_core::Result<ConfigComplianceCheck> {
    let model = segment_model(spec, spec.order, spec.steps)?;
    let zero = ModalConfig::zeros(model.basis().len());
    let mut relative_errors = Vec::new();
    for &theta in &spec.configurations {
        let act = TendonActuation::from_pulls(&model, &actuator_pulls(spec, theta), spec.pretension)?;
        let eq0 = solve_segment_equilibrium(&model, TendonLoad::Springs(&act), w0, &zero)?;
        let tau0 = act.tensions(&model, &eq0.config)?;
        let cc = model.config_space_compliance(&eq0.config, &tau0)?;
        let wc0 = model.projected_wrench(&eq0.config, w0)?;
        for axis in 0..3 {
            let mut f = w0.force;
            f[axis] += step;
            let w1 = Wrench::new(w0.moment, f);
            let eq1 = solve_segment_equilibrium(&model, TendonLoad::Springs(&act), &w1, &eq0.config)?;
            let dwc = model.projected_wrench(&eq1.config, &w1)? - &wc0;
            let dc = &eq1.config.0 - &eq0.config.0;
            relative_errors.push((cc.apply(&dwc) - &dc).norm() / dc.norm());
        }
    }
    Ok(ConfigComplianceCheck { relative_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Pull;

    #[test]
    fn zero_load_predicts_no_motion() {
        let mut cfg = ExperimentConfig::default_preset();
        cfg.segment.configurations.truncate(1);
        cfg.segment.pulls = vec![Pull {
            label: "+x".into(),
            force: 0.0,
            direction: Vector3::x(),
        }];
        let report = run_segment_scenario(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].status, Status::Ok);
        assert_eq!(report.rows[0].e_p_mm, Some(0.0));
    }

    #[test]
    fn pulls_follow_actuator_angles() {
        let spec = ExperimentConfig::default_preset().segment;
        let p = actuator_pulls(&spec, (1.0, -2.0));
        assert_eq!(p.as_slice(), &[0.005, -0.01, -0.005, 0.01]);
    }
}
