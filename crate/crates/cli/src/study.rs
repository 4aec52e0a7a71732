//! Rod convergence and ablation studies: analytic compliance predictions
//! against re-solved Kirchhoff rod equilibria.

use std::time::Instant;

use compliance_core::oracle::{
    fit_modal_coefficients, solve_modal_equilibrium, solve_rod_bvp, tip_increment, BvpOptions, RodEquilibrium,
};
use compliance_core::se3::{exp_so3, rotation_distance};
use compliance_core::kinematics::MAGNUS_ORDER;
use compliance_core::{ComplianceMatrix, Error, ModalConfig, Pose, Rod, RodProperties, ShapeBasis, Wrench};
use nalgebra::{Vector3, Vector6};
use rayon::prelude::*;

use crate::config::{CoefficientSource, ExperimentConfig};
use crate::report::{Exclusion, Metadata, QuadratureNodes, Row, Status, StudyReport};
use crate::shapes::{generate_shape_set, Shape};

pub const AXIS_NAMES: [&str; 6] = ["mx", "my", "mz", "fx", "fy", "fz"];

pub const ROTATION_METRIC: &str =
    "geodesic angle between the predicted rotation increment exp(dtheta_m) and the ground-truth increment R1*R0^T, degrees";

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("cannot build the model: {0}")]
    Model(#[from] Error),
    #[error("no shape reached equilibrium; nothing to report")]
    NoShapes,
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplianceMode {
    Full,
    /// Drops the Jacobian-derivative term.
    Ablated,
}

impl ComplianceMode {
    pub fn study_name(self) -> &'static str {
        match self {
            ComplianceMode::Full => "converge",
            ComplianceMode::Ablated => "ablate",
        }
    }
}

/// Tip motion of one wrench increment in the hybrid frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub shape: Shape,
    pub equilibrium: RodEquilibrium,
    /// Per wrench axis; `Err` holds the solver message.
    pub increments: Vec<Result<Motion, String>>,
}

/// Oracle solutions for every shape, shared by all orders and modes.
#[derive(Debug, Clone)]
pub struct GroundTruthSet {
    pub props: RodProperties,
    pub steps: [f64; 6],
    pub shapes: Vec<GroundTruth>,
    pub exclusions: Vec<Exclusion>,
}

pub(crate) fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, StudyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| StudyError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

fn solve_shape(props: &RodProperties, shape: &Shape, steps: &[f64; 6]) -> Result<GroundTruth, String> {
    let options = BvpOptions::default();
    let eq0 = solve_rod_bvp(props, &shape.wrench, &Pose::identity()).map_err(|e| e.to_string())?;
    let increments = steps
        .iter()
        .enumerate()
        .map(|(j, &h)| {
            let mut v = Vector6::zeros();
            v[j] = h;
            tip_increment(props, &shape.wrench, &eq0, &Wrench::from_vector(&v), &options)
                .map(|inc| Motion {
                    rotation: inc.rotation,
                    translation: inc.translation,
                })
                .map_err(|e| e.to_string())
        })
        .collect();
    Ok(GroundTruth {
        shape: shape.clone(),
        equilibrium: eq0,
        increments,
    })
}

/// Solves every grid wrench and its six increments with the shooting oracle.
/// Shapes whose base equilibrium fails are excluded and listed.
pub fn prepare_ground_truth(cfg: &ExperimentConfig) -> Result<GroundTruthSet, StudyError> {
    let props = cfg.rod.properties();
    let steps = cfg.increments.per_axis();
    let shapes = generate_shape_set(&cfg.grid, cfg.seed);
    let solved: Vec<Result<GroundTruth, String>> = with_pool(cfg.jobs, || {
        shapes.par_iter().map(|s| solve_shape(&props, s, &steps)).collect()
    })?;
    let mut out = Vec::new();
    let mut exclusions = Vec::new();
    for (shape, r) in shapes.iter().zip(solved) {
        match r {
            Ok(gt) => out.push(gt),
            Err(reason) => exclusions.push(Exclusion {
                shape_id: shape.id,
                reason,
            }),
        }
    }
    if out.is_empty() && !shapes.is_empty() {
        return Err(StudyError::NoShapes);
    }
    Ok(GroundTruthSet {
        props,
        steps,
        shapes: out,
        exclusions,
    })
}

/// Modal coefficients representing the oracle shape at the study's order.
pub fn shape_coefficients(
    rod: &Rod,
    gt: &GroundTruth,
    source: CoefficientSource,
) -> compliance_core::Result<ModalConfig> {
    let fit = fit_modal_coefficients(&gt.equilibrium.curvature_samples(rod.props()), rod.basis())?;
    match source {
        CoefficientSource::Fit => Ok(fit),
        CoefficientSource::Equilibrium => Ok(solve_modal_equilibrium(rod, &gt.shape.wrench, &fit)?.config),
    }
}

fn failed_rows(gt: &GroundTruth, order: usize, steps: &[f64; 6], status: Status) -> Vec<Row> {
    (0..6)
        .map(|j| Row {
            shape_id: gt.shape.id,
            order,
            wrench_axis: AXIS_NAMES[j].into(),
            increment: steps[j],
            e_p_mm: None,
            rot_err_deg: None,
            time_us: None,
            status,
        })
        .collect()
}

/// Position error (mm) and rotation error (deg) of a predicted motion.
pub fn motion_errors(predicted: &Vector6<f64>, truth: &Motion) -> (f64, f64) {
    let dp = predicted.fixed_rows::<3>(3).into_owned();
    let dtheta = predicted.fixed_rows::<3>(0).into_owned();
    let e_p = (truth.translation - dp).norm() * 1e3;
    let rot = rotation_distance(&exp_so3(&dtheta), &exp_so3(&truth.rotation)).to_degrees();
    (e_p, rot)
}

fn evaluate_shape(
    rod: &Rod,
    gt: &GroundTruth,
    steps: &[f64; 6],
    mode: ComplianceMode,
    source: CoefficientSource,
) -> Vec<Row> {
    let order = rod.basis().orders().max_order();
    let c = match shape_coefficients(rod, gt, source) {
        Ok(c) => c,
        Err(_) => return failed_rows(gt, order, steps, Status::ModalFailed),
    };
    let start = Instant::now();
    let result: compliance_core::Result<ComplianceMatrix> = match mode {
        ComplianceMode::Full => rod.compliance(&c, &gt.shape.wrench),
        ComplianceMode::Ablated => rod.compliance_without_jacobian_derivative(&c),
    };
    let time_us = start.elapsed().as_secs_f64() * 1e6;
    let cm = match result {
        Ok(cm) => cm,
        Err(Error::IllConditioned { .. }) => return failed_rows(gt, order, steps, Status::IllConditioned),
        Err(_) => return failed_rows(gt, order, steps, Status::ModalFailed),
    };
    (0..6)
        .map(|j| {
            let mut row = Row {
                shape_id: gt.shape.id,
                order,
                wrench_axis: AXIS_NAMES[j].into(),
                increment: steps[j],
                e_p_mm: None,
                rot_err_deg: None,
                time_us: None,
                status: Status::OracleFailed,
            };
            if let Ok(truth) = &gt.increments[j] {
                let predicted = cm.matrix.column(j) * steps[j];
                let (e_p, rot) = motion_errors(&predicted.into_owned(), truth);
                row.e_p_mm = Some(e_p);
                row.rot_err_deg = Some(rot);
                row.time_us = Some(time_us);
                row.status = Status::Ok;
            }
            row
        })
        .collect()
}

pub fn metadata(cfg: &ExperimentConfig, orders: &[usize], steps: usize, assumptions: Vec<String>) -> Metadata {
    let quadrature = orders
        .iter()
        .map(|&n| QuadratureNodes {
            order: n,
            energy_kernel_nodes: ShapeBasis::uniform(n, cfg.rod.length)
                .map(|b| b.energy_kernel_nodes())
                .unwrap_or(0),
        })
        .collect();
    Metadata {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        magnus_order: MAGNUS_ORDER,
        integration_steps: steps,
        quadrature,
        tendon_quadrature_nodes: cfg.segment.quadrature_nodes,
        oracle_rk4_steps: BvpOptions::default().steps,
        rotation_metric: ROTATION_METRIC.to_string(),
        coefficient_source: cfg.basis.coefficients.name().to_string(),
        seed: cfg.seed,
        assumptions,
        config: cfg.source.clone(),
    }
}

fn rod_assumptions(cfg: &ExperimentConfig) -> Vec<String> {
    let mut a = vec![
        "ground truth from a shooting solver of the Kirchhoff rod equations (RK4, Newton on the base reaction)".to_string(),
        "each increment is applied along one wrench axis from the grid wrench; wrenches are world-aligned and taken about the tip".to_string(),
        format!(
            "rod material: E = {} Pa, poisson ratio {}",
            cfg.rod.youngs_modulus, cfg.rod.poisson_ratio
        ),
    ];
    a.push(match cfg.basis.coefficients {
        CoefficientSource::Fit => {
            "modal coefficients are a least-squares fit of the oracle curvature at each order".to_string()
        }
        CoefficientSource::Equilibrium => {
            "modal coefficients solve the modal statics under the grid wrench, started from the oracle fit".to_string()
        }
    });
    if !cfg.grid.axial_offsets.is_empty() {
        a.push(format!(
            "extra grid dimension: offsets {:?} N added to the axial force f_z",
            cfg.grid.axial_offsets
        ));
    }
    a
}

/// Evaluates the analytic compliance of every order against the oracle.
pub fn evaluate_study(
    cfg: &ExperimentConfig,
    truth: &GroundTruthSet,
    mode: ComplianceMode,
) -> Result<StudyReport, StudyError> {
    let orders = cfg.basis.orders.clone();
    let rods = orders
        .iter()
        .map(|&n| Rod::new(ShapeBasis::uniform(n, cfg.rod.length)?, truth.props, cfg.basis.steps))
        .collect::<compliance_core::Result<Vec<_>>>()?;
    let rows: Vec<Row> = with_pool(cfg.jobs, || {
        rods.iter()
            .flat_map(|rod| {
                truth
                    .shapes
                    .par_iter()
                    .map(|gt| evaluate_shape(rod, gt, &truth.steps, mode, cfg.basis.coefficients))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .flatten()
            })
            .collect()
    })?;
    let meta = metadata(cfg, &orders, cfg.basis.steps, rod_assumptions(cfg));
    Ok(StudyReport::new(mode.study_name(), meta, truth.exclusions.clone(), rows))
}

/// Full compliance over the order sweep.
pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<StudyReport, StudyError> {
    let truth = prepare_ground_truth(cfg)?;
    evaluate_study(cfg, &truth, ComplianceMode::Full)
}

/// Compliance without the Jacobian-derivative term over the order sweep.
pub fn run_ablation_study(cfg: &ExperimentConfig) -> Result<StudyReport, StudyError> {
    let truth = prepare_ground_truth(cfg)?;
    evaluate_study(cfg, &truth, ComplianceMode::Ablated)
}
