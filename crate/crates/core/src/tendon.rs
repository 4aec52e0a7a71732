//! Tendon routing, tendon lengths, and the compliance of a tendon-actuated
//! segment.
//!
//! A tendon runs at the offset `r(s) = [r_x, r_y, 0]` in the moving frame, so
//! its path derivative is `w' = e₃ − r̂ Φ c + r'` and its length is the
//! integral of `‖w'‖` up to the anchor. The inner matrix of both compliance
//! expressions combines the energy Hessian with the tendon terms according to
//! a [`TendonSign`] convention.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};

use crate::compliance::{congruence, ComplianceMatrix, Rod};
use crate::error::{Error, Result};
use crate::kinematics::coefficient_step;
use crate::linalg::checked_inverse;
use crate::modal::{ModalConfig, ShapeBasis};
use crate::quadrature::GaussLegendre;
use crate::se3::{hat3, Wrench};

/// Gauss–Legendre nodes per tendon length integral.
pub const DEFAULT_TENDON_NODES: usize = 32;

/// Path derivatives shorter than this make the length non-differentiable.
pub const DEGENERATE_PATH: f64 = 1e-12;

/// Radial offset of a tendon from the backbone, in the moving frame.
#[derive(Debug, Clone, PartialEq)]
pub enum TendonPath {
    /// Fixed radius and polar angle along the whole length.
    ConstantPitch { radius: f64, angle: f64 },
    /// Polar angle advancing linearly, `angle + twist_rate · s`.
    Helical {
        radius: f64,
        angle: f64,
        twist_rate: f64,
    },
    /// Piecewise cubic Hermite through `(s_k, r_k)` knots.
    Tabulated { s: Vec<f64>, offsets: Vec<Vector2<f64>> },
}

impl TendonPath {
    fn validate(&self) -> Result<()> {
        match self {
            TendonPath::ConstantPitch { radius, angle } => finite(&[*radius, *angle]),
            TendonPath::Helical {
                radius,
                angle,
                twist_rate,
            } => finite(&[*radius, *angle, *twist_rate]),
            TendonPath::Tabulated { s, offsets } => {
                if s.len() < 2 || s.len() != offsets.len() {
                    return Err(Error::InvalidParameter(
                        "tabulated path needs at least two knots, one offset per knot".into(),
                    ));
                }
                if s.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
                    return Err(Error::InvalidParameter(
                        "tabulated path knots must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `(r(s), r'(s))` as planar vectors.
    pub fn eval(&self, s: f64) -> (Vector2<f64>, Vector2<f64>) {
        match self {
            TendonPath::ConstantPitch { radius, angle } => (
                Vector2::new(angle.cos(), angle.sin()) * *radius,
                Vector2::zeros(),
            ),
            TendonPath::Helical {
                radius,
                angle,
                twist_rate,
            } => {
                let a = angle + twist_rate * s;
                let (sin, cos) = a.sin_cos();
                (
                    Vector2::new(cos, sin) * *radius,
                    Vector2::new(-sin, cos) * (*radius * twist_rate),
                )
            }
            TendonPath::Tabulated { s: knots, offsets } => hermite(knots, offsets, s),
        }
    }
}

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("tendon path parameters must be finite".into()))
    }
}

/// Knot tangent by a non-uniform three-point difference (one-sided at ends).
fn knot_tangent(s: &[f64], r: &[Vector2<f64>], k: usize) -> Vector2<f64> {
    let n = s.len();
    if k == 0 {
        (r[1] - r[0]) / (s[1] - s[0])
    } else if k == n - 1 {
        (r[n - 1] - r[n - 2]) / (s[n - 1] - s[n - 2])
    } else {
        let (h0, h1) = (s[k] - s[k - 1], s[k + 1] - s[k]);
        let d0 = (r[k] - r[k - 1]) / h0;
        let d1 = (r[k + 1] - r[k]) / h1;
        (d0 * h1 + d1 * h0) / (h0 + h1)
    }
}

fn hermite(s: &[f64], r: &[Vector2<f64>], x: f64) -> (Vector2<f64>, Vector2<f64>) {
    let n = s.len();
    let k = match s.iter().rposition(|&v| v <= x) {
        Some(k) => k.min(n - 2),
        None => 0,
    };
    let h = s[k + 1] - s[k];
    let t = ((x - s[k]) / h).clamp(0.0, 1.0);
    let (m0, m1) = (knot_tangent(s, r, k) * h, knot_tangent(s, r, k + 1) * h);
    let (t2, t3) = (t * t, t * t * t);
    let p = r[k] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * (t3 - 2.0 * t2 + t)
        + r[k + 1] * (-2.0 * t3 + 3.0 * t2)
        + m1 * (t3 - t2);
    let dp = r[k] * (6.0 * t2 - 6.0 * t)
        + m0 * (3.0 * t2 - 4.0 * t + 1.0)
        + r[k + 1] * (-6.0 * t2 + 6.0 * t)
        + m1 * (3.0 * t2 - 2.0 * t);
    (p, dp / h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tendon {
    pub path: TendonPath,
    /// Arc length of the anchoring disk.
    pub anchor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TendonRouting {
    tendons: Vec<Tendon>,
}

impl TendonRouting {
    pub fn new(tendons: Vec<Tendon>) -> Result<Self> {
        if tendons.is_empty() {
            return Err(Error::InvalidParameter("routing needs at least one tendon".into()));
        }
        for t in &tendons {
            t.path.validate()?;
        }
        Ok(Self { tendons })
    }

    /// `count` tendons equally spaced in angle (first at angle 0), all at
    /// `radius` and anchored at `anchor`.
    pub fn constant_pitch(count: usize, radius: f64, anchor: f64) -> Result<Self> {
        let tendons = (0..count)
            .map(|i| Tendon {
                path: TendonPath::ConstantPitch {
                    radius,
                    angle: 2.0 * std::f64::consts::PI * i as f64 / count as f64,
                },
                anchor,
            })
            .collect();
        Self::new(tendons)
    }

    pub fn tendons(&self) -> &[Tendon] {
        &self.tendons
    }

    pub fn len(&self) -> usize {
        self.tendons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tendons.is_empty()
    }
}

/// How the tendon terms enter the statics and the inverted matrices.
///
/// `Physical` treats `τ` as tension resisting tendon elongation, giving the
/// residual `∂E/∂c − J̃ᵀw + J_ℓᵀτ` and the inner matrix
/// `∂²E/∂c² − C_wh + C_τ + J_ℓᵀK_ℓJ_ℓ`. `Reversed` flips the sign of
/// every tendon term, so added tendon stiffness increases compliance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TendonSign {
    #[default]
    Physical,
    Reversed,
}

impl TendonSign {
    pub fn factor(self) -> f64 {
        match self {
            TendonSign::Physical => 1.0,
            TendonSign::Reversed => -1.0,
        }
    }
}

/// A rod actuated by tendons with joint-level stiffness `K_ℓ`.
#[derive(Debug, Clone)]
pub struct SegmentModel {
    rod: Rod,
    routing: TendonRouting,
    stiffness: DVector<f64>,
    sign: TendonSign,
    rule: GaussLegendre,
}

impl SegmentModel {
    pub fn new(rod: Rod, routing: TendonRouting, stiffness: DVector<f64>) -> Result<Self> {
        if stiffness.len() != routing.len() {
            return Err(Error::Dimension {
                expected: routing.len(),
                actual: stiffness.len(),
            });
        }
        if stiffness.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return Err(Error::InvalidParameter(
                "tendon stiffness must be non-negative".into(),
            ));
        }
        let length = rod.basis().length();
        for (i, t) in routing.tendons().iter().enumerate() {
            if !(t.anchor > 0.0 && t.anchor <= length * (1.0 + 1e-12)) {
                return Err(Error::InvalidParameter(format!(
                    "tendon {i} anchor {} outside (0, {length}]",
                    t.anchor
                )));
            }
        }
        Ok(Self {
            rod,
            routing,
            stiffness,
            sign: TendonSign::default(),
            rule: GaussLegendre::new(DEFAULT_TENDON_NODES),
        })
    }

    pub fn with_sign(mut self, sign: TendonSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_quadrature_nodes(mut self, nodes: usize) -> Self {
        self.rule = GaussLegendre::new(nodes.max(1));
        self
    }

    pub fn rod(&self) -> &Rod {
        &self.rod
    }

    pub fn basis(&self) -> &ShapeBasis {
        self.rod.basis()
    }

    pub fn routing(&self) -> &TendonRouting {
        &self.routing
    }

    /// Diagonal of `K_ℓ`.
    pub fn stiffness(&self) -> &DVector<f64> {
        &self.stiffness
    }

    pub fn sign(&self) -> TendonSign {
        self.sign
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.rule.len()
    }

    pub fn tendon_count(&self) -> usize {
        self.routing.len()
    }

    fn tendon(&self, i: usize) -> Result<&Tendon> {
        self.routing.tendons().get(i).ok_or(Error::Dimension {
            expected: self.routing.len(),
            actual: i + 1,
        })
    }

    fn check_tensions(&self, tau: &DVector<f64>) -> Result<()> {
        if tau.len() != self.tendon_count() {
            return Err(Error::Dimension {
                expected: self.tendon_count(),
                actual: tau.len(),
            });
        }
        Ok(())
    }

    /// `ʳw'_i(s)` in the moving frame (tendons indexed from zero).
    pub fn tendon_path_derivative(&self, c: &ModalConfig, i: usize, s: f64) -> Result<Vector3<f64>> {
        let t = self.tendon(i)?;
        if !(s >= 0.0 && s <= t.anchor * (1.0 + 1e-12)) {
            return Err(Error::ArcLength { s, length: t.anchor });
        }
        let u = self.basis().curvature(c, s)?;
        let (r, dr) = t.path.eval(s);
        let r3 = Vector3::new(r.x, r.y, 0.0);
        Ok(Vector3::z() - r3.cross(&u) + Vector3::new(dr.x, dr.y, 0.0))
    }

    pub fn tendon_length(&self, c: &ModalConfig, i: usize) -> Result<f64> {
        let t = self.tendon(i)?;
        self.basis().check_config(c)?;
        let mut total = 0.0;
        for (s, w) in self.rule.on_interval(0.0, t.anchor) {
            total += w * self.tendon_path_derivative(c, i, s)?.norm();
        }
        Ok(total)
    }

    pub fn tendon_lengths(&self, c: &ModalConfig) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.tendon_count());
        for i in 0..self.tendon_count() {
            out[i] = self.tendon_length(c, i)?;
        }
        Ok(out)
    }

    /// `J_ℓc`, row `i` being `∫ (w'ᵀ/‖w'‖)(−r̂ Φ) ds` over tendon `i`.
    pub fn config_jacobian(&self, c: &ModalConfig) -> Result<DMatrix<f64>> {
        let basis = self.basis();
        basis.check_config(c)?;
        let mut jac = DMatrix::zeros(self.tendon_count(), basis.len());
        for (i, t) in self.routing.tendons().iter().enumerate() {
            for (s, w) in self.rule.on_interval(0.0, t.anchor) {
                let d = self.tendon_path_derivative(c, i, s)?;
                let norm = d.norm();
                if norm < DEGENERATE_PATH {
                    return Err(Error::DegenerateRouting { tendon: i, s });
                }
                let (r, _) = t.path.eval(s);
                let rhat = hat3(&Vector3::new(r.x, r.y, 0.0));
                let phi = basis.eval_phi(s)?;
                // (dᵀ/‖d‖)(−r̂Φ) = −(r̂ᵀ d)ᵀ Φ / ‖d‖
                let g = rhat.transpose() * d * (-w / norm);
                for col in 0..basis.len() {
                    jac[(i, col)] += g.x * phi[(0, col)] + g.y * phi[(1, col)] + g.z * phi[(2, col)];
                }
            }
        }
        Ok(jac)
    }

    /// `C_τ[:, i] = (∂J_ℓcᵀ/∂c_i) τ`, by relative-scaled central differences.
    pub fn c_tau(&self, c: &ModalConfig, tau: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_tensions(tau)?;
        let m = self.basis().len();
        let mut out = DMatrix::zeros(m, m);
        if tau.iter().all(|t| *t == 0.0) {
            self.basis().check_config(c)?;
            return Ok(out);
        }
        for i in 0..m {
            let h = coefficient_step(c[i]);
            let plus = self.config_jacobian(&c.with_shift(i, h))?;
            let minus = self.config_jacobian(&c.with_shift(i, -h))?;
            out.set_column(i, &((plus - minus).transpose() * tau / (2.0 * h)));
        }
        Ok(out)
    }

    /// `C_wh` of the underlying rod.
    pub fn c_wh(&self, c: &ModalConfig, w: &Wrench) -> Result<DMatrix<f64>> {
        self.rod.wrench_term(c, w)
    }

    /// Tendon term `σ (C_τ + J_ℓᵀ K_ℓ J_ℓ)` of the inner matrix.
    pub fn tendon_stiffness_term(&self, c: &ModalConfig, tau: &DVector<f64>) -> Result<DMatrix<f64>> {
        let j = self.config_jacobian(c)?;
        let k = DMatrix::from_diagonal(&self.stiffness);
        let passive = j.transpose() * k * &j;
        Ok((self.c_tau(c, tau)? + passive) * self.sign.factor())
    }

    /// Statics residual; zero at equilibrium.
    pub fn statics_residual(
        &self,
        c: &ModalConfig,
        tau: &DVector<f64>,
        w: &Wrench,
    ) -> Result<DVector<f64>> {
        self.check_tensions(tau)?;
        let grad = self.rod.gradient(c)?;
        let (_, jt) = self.rod.tip(c)?;
        let jl = self.config_jacobian(c)?;
        let wv = DVector::from_column_slice(w.to_vector().as_slice());
        Ok(grad - jt.transpose() * wv + jl.transpose() * tau * self.sign.factor())
    }

    /// `w_c = J̃ᵀ w`.
    pub fn projected_wrench(&self, c: &ModalConfig, w: &Wrench) -> Result<DVector<f64>> {
        let (_, jt) = self.rod.tip(c)?;
        Ok(jt.transpose() * DVector::from_column_slice(w.to_vector().as_slice()))
    }

    /// The equilibrium form of `w_c`, from the energy gradient and tensions.
    pub fn projected_wrench_from_tensions(
        &self,
        c: &ModalConfig,
        tau: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        self.check_tensions(tau)?;
        let jl = self.config_jacobian(c)?;
        Ok(self.rod.gradient(c)? + jl.transpose() * tau * self.sign.factor())
    }

    /// Task-space compliance `C_x` of the segment.
    pub fn task_space_compliance(
        &self,
        c: &ModalConfig,
        tau: &DVector<f64>,
        w: &Wrench,
    ) -> Result<ComplianceMatrix> {
        let (_, jt) = self.rod.tip(c)?;
        let inner = self.rod.hessian() - self.c_wh(c, w)? + self.tendon_stiffness_term(c, tau)?;
        congruence(&jt, &inner)
    }

    /// Configuration-space compliance `C_c`; needs no wrench.
    pub fn config_space_compliance(
        &self,
        c: &ModalConfig,
        tau: &DVector<f64>,
    ) -> Result<ConfigCompliance> {
        let inner = self.rod.hessian() + self.tendon_stiffness_term(c, tau)?;
        let (matrix, condition) = checked_inverse(&inner)?;
        Ok(ConfigCompliance { matrix, condition })
    }
}

/// `m × m` map from projected-wrench increments to coefficient increments.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigCompliance {
    pub matrix: DMatrix<f64>,
    pub condition: f64,
}

impl ConfigCompliance {
    pub fn apply(&self, dwc: &DVector<f64>) -> DVector<f64> {
        &self.matrix * dwc
    }
}

/// Tendons modeled as linear springs between the anchor and an actuator:
/// `τ = K_ℓ (ℓ(c) − ℓ_rest)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TendonActuation {
    pub rest_lengths: DVector<f64>,
}

impl TendonActuation {
    /// Rest lengths for actuator pulls `pulls` (positive shortens) and a
    /// uniform pretension, relative to the straight-rod tendon lengths.
    pub fn from_pulls(model: &SegmentModel, pulls: &DVector<f64>, pretension: f64) -> Result<Self> {
        let p = model.tendon_count();
        if pulls.len() != p {
            return Err(Error::Dimension {
                expected: p,
                actual: pulls.len(),
            });
        }
        let straight = model.tendon_lengths(&ModalConfig::zeros(model.basis().len()))?;
        let mut rest = DVector::zeros(p);
        for i in 0..p {
            let k = model.stiffness()[i];
            let slack = if k > 0.0 { pretension / k } else { 0.0 };
            rest[i] = straight[i] - pulls[i] - slack;
        }
        Ok(Self { rest_lengths: rest })
    }

    /// Tendon tensions at `c`; negative values mean a slack tendon.
    pub fn tensions(&self, model: &SegmentModel, c: &ModalConfig) -> Result<DVector<f64>> {
        let l = model.tendon_lengths(c)?;
        Ok((l - &self.rest_lengths).component_mul(model.stiffness()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::RodProperties;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const L: f64 = 0.3006;
    const R: f64 = 0.0652;

    fn segment(basis: ShapeBasis, k: f64) -> SegmentModel {
        let props = RodProperties::new(L, 3.2, 3.2, 3.2 * 1950.0).unwrap();
        let rod = Rod::new(basis, props, 10).unwrap();
        let routing = TendonRouting::constant_pitch(4, R, L).unwrap();
        SegmentModel::new(rod, routing, DVector::from_element(4, k)).unwrap()
    }

    fn helical_segment() -> SegmentModel {
        let props = RodProperties::new(L, 3.2, 3.2, 2.5).unwrap();
        let rod = Rod::new(ShapeBasis::uniform(2, L).unwrap(), props, 10).unwrap();
        let routing = TendonRouting::new(vec![
            Tendon {
                path: TendonPath::Helical {
                    radius: R,
                    angle: 0.3,
                    twist_rate: 4.0,
                },
                anchor: L,
            },
            Tendon {
                path: TendonPath::Tabulated {
                    s: vec![0.0, 0.1, 0.2, L],
                    offsets: vec![
                        Vector2::new(0.0, R),
                        Vector2::new(0.01, 0.06),
                        Vector2::new(0.02, 0.05),
                        Vector2::new(0.02, 0.04),
                    ],
                },
                anchor: 0.25,
            },
        ])
        .unwrap();
        SegmentModel::new(rod, routing, DVector::from_element(2, 1e4)).unwrap()
    }

    fn random_config(rng: &mut impl Rng, m: usize, scale: f64) -> ModalConfig {
        ModalConfig(DVector::from_fn(m, |_, _| rng.gen_range(-scale..scale)))
    }

    #[test]
    fn straight_path_derivative_is_tangent() {
        let model = segment(ShapeBasis::torsion_free(2, L).unwrap(), 1e5);
        let c = ModalConfig::zeros(6);
        for i in 0..4 {
            let d = model.tendon_path_derivative(&c, i, 0.1).unwrap();
            assert_eq!(d, Vector3::z());
            assert!((model.tendon_length(&c, i).unwrap() - L).abs() < 1e-15);
        }
    }

    #[test]
    fn concentric_arc_length() {
        let model = segment(ShapeBasis::uniform(0, L).unwrap(), 1e5);
        let kappa = 1.7;
        let c = ModalConfig::from_slice(&[kappa, 0.0, 0.0]);
        // Tendon 1 sits at (0, r), the outer side of a bend about x.
        let d = model.tendon_path_derivative(&c, 1, 0.2).unwrap();
        assert!((d.norm() - (1.0 + kappa * R)).abs() < 1e-14);
        let l = model.tendon_length(&c, 1).unwrap();
        assert!((l - L * (1.0 + kappa * R)).abs() < 1e-14);
        let l_inner = model.tendon_length(&c, 3).unwrap();
        assert!((l_inner - L * (1.0 - kappa * R)).abs() < 1e-14);
    }

    #[test]
    fn path_derivative_affine_in_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let model = helical_segment();
        let m = model.basis().len();
        let (a, b) = (random_config(&mut rng, m, 2.0), random_config(&mut rng, m, 2.0));
        let zero = ModalConfig::zeros(m);
        let sum = ModalConfig(&a.0 + &b.0);
        for s in [0.0, 0.13, 0.25] {
            let d0 = model.tendon_path_derivative(&zero, 1, s).unwrap();
            let da = model.tendon_path_derivative(&a, 1, s).unwrap();
            let db = model.tendon_path_derivative(&b, 1, s).unwrap();
            let dab = model.tendon_path_derivative(&sum, 1, s).unwrap();
            assert!((dab - (da + db - d0)).norm() < 1e-14);
        }
    }

    #[test]
    fn quadrature_doubling() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let model = helical_segment();
        let fine = model.clone().with_quadrature_nodes(64);
        let c = random_config(&mut rng, model.basis().len(), 1.0);
        let a = model.tendon_length(&c, 0).unwrap();
        let b = fine.tendon_length(&c, 0).unwrap();
        assert!((a - b).abs() < 1e-10 * b);
    }

    #[test]
    fn jacobian_entry_for_constant_curvature() {
        let model = segment(ShapeBasis::uniform(0, L).unwrap(), 1e5);
        let j = model.config_jacobian(&ModalConfig::zeros(3)).unwrap();
        assert!((j[(1, 0)] - R * L).abs() < 1e-15);
        assert!((j[(3, 0)] + R * L).abs() < 1e-15);
        // Tendon 0 at (r, 0) lengthens under negative y-curvature.
        assert!((j[(0, 1)] + R * L).abs() < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for model in [helical_segment(), segment(ShapeBasis::uniform(3, L).unwrap(), 1e5)] {
            let m = model.basis().len();
            for _ in 0..50 {
                let c = random_config(&mut rng, m, 2.0);
                let an = model.config_jacobian(&c).unwrap();
                let mut fd = DMatrix::zeros(an.nrows(), m);
                let h = 1e-6;
                for col in 0..m {
                    let lp = model.tendon_lengths(&c.with_shift(col, h)).unwrap();
                    let lm = model.tendon_lengths(&c.with_shift(col, -h)).unwrap();
                    fd.set_column(col, &((lp - lm) / (2.0 * h)));
                }
                assert!((&an - &fd).norm() < 1e-8 * an.norm());
            }
        }
    }

    #[test]
    fn constant_pitch_torsion_free_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let model = segment(ShapeBasis::torsion_free(2, L).unwrap(), 1.23e5);
        let j0 = model.config_jacobian(&ModalConfig::zeros(6)).unwrap();
        for _ in 0..10 {
            let c = random_config(&mut rng, 6, 3.0);
            assert!((model.config_jacobian(&c).unwrap() - &j0).amax() < 1e-9);
            let tau = DVector::from_fn(4, |_, _| rng.gen_range(0.0..200.0));
            let ct = model.c_tau(&c, &tau).unwrap();
            assert!(ct.norm() < 1e-9 * (1.0 + tau.norm()));
        }
    }

    /// `C_τ` from the closed-form second derivative of `‖w'‖`.
    fn analytic_c_tau(model: &SegmentModel, c: &ModalConfig, tau: &DVector<f64>) -> DMatrix<f64> {
        let m = model.basis().len();
        let mut out = DMatrix::zeros(m, m);
        let rule = GaussLegendre::new(DEFAULT_TENDON_NODES);
        for (i, t) in model.routing().tendons().iter().enumerate() {
            for (s, w) in rule.on_interval(0.0, t.anchor) {
                let d = model.tendon_path_derivative(c, i, s).unwrap();
                let n = d.norm();
                let (r, _) = t.path.eval(s);
                let phi = model.basis().eval_phi(s).unwrap();
                let rphi = DMatrix::from_column_slice(3, 3, hat3(&Vector3::new(r.x, r.y, 0.0)).as_slice())
                    * phi;
                let proj = (nalgebra::Matrix3::identity() - d * d.transpose() / (n * n)) / n;
                let proj = DMatrix::from_column_slice(3, 3, proj.as_slice());
                out += rphi.transpose() * proj * &rphi * (w * tau[i]);
            }
        }
        out
    }

    #[test]
    fn c_tau_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let model = helical_segment();
        let c = random_config(&mut rng, model.basis().len(), 1.5);
        let tau = DVector::from_vec(vec![40.0, 15.0]);
        let fd = model.c_tau(&c, &tau).unwrap();
        let exact = analytic_c_tau(&model, &c, &tau);
        assert!((&fd - &exact).norm() < 1e-6 * exact.norm());
        assert_eq!(
            model.c_tau(&c, &DVector::zeros(2)).unwrap(),
            DMatrix::zeros(9, 9)
        );
    }

    #[test]
    fn statics_residual_examples() {
        let model = segment(ShapeBasis::torsion_free(2, L).unwrap(), 1e5);
        let zero = ModalConfig::zeros(6);
        let r = model
            .statics_residual(&zero, &DVector::zeros(4), &Wrench::zero())
            .unwrap();
        assert_eq!(r, DVector::zeros(6));

        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let c = random_config(&mut rng, 6, 2.0);
        let tau = DVector::from_vec(vec![10.0, 20.0, 5.0, 1.0]);
        let w = Wrench::new(Vector3::new(0.1, 0.0, -0.2), Vector3::new(1.0, -2.0, 0.5));
        let grad = model.rod().gradient(&c).unwrap();
        let single = model.statics_residual(&c, &tau, &w).unwrap() - &grad;
        let double = model.statics_residual(&c, &(&tau * 2.0), &w.scaled(2.0)).unwrap() - &grad;
        assert!((double - single * 2.0).norm() < 1e-12);
    }

    #[test]
    fn projected_wrench_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let model = segment(ShapeBasis::torsion_free(2, L).unwrap(), 1e5);
        let c = random_config(&mut rng, 6, 2.0);
        assert_eq!(
            model.projected_wrench(&c, &Wrench::zero()).unwrap(),
            DVector::zeros(6)
        );
        let w = Wrench::new(Vector3::new(0.3, 0.1, 0.0), Vector3::new(0.0, 4.0, -1.0));
        let a = model.projected_wrench(&c, &w).unwrap();
        let b = model.projected_wrench(&c, &w.scaled(2.0)).unwrap();
        assert!((b - a * 2.0).norm() < 1e-12);
    }

    #[test]
    fn reduces_to_single_rod_without_tendon_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let model = segment(ShapeBasis::uniform(2, L).unwrap(), 0.0);
        let c = random_config(&mut rng, 9, 2.0);
        let a = model
            .task_space_compliance(&c, &DVector::zeros(4), &Wrench::zero())
            .unwrap();
        let b = model.rod().compliance(&c, &Wrench::zero()).unwrap();
        assert!((a.matrix - b.matrix).amax() <= 1e-12 * b.matrix.amax());
    }

    #[test]
    fn tendon_stiffness_monotonicity() {
        let tau = DVector::zeros(4);
        let c = ModalConfig::from_slice(&[1.0, 0.2, -0.1, -0.5, 0.3, 0.0]);
        let diag = |k: f64, sign| {
            let m = segment(ShapeBasis::torsion_free(2, L).unwrap(), k).with_sign(sign);
            let cx = m.task_space_compliance(&c, &tau, &Wrench::zero()).unwrap().matrix;
            [cx[(3, 3)], cx[(4, 4)], cx[(5, 5)]]
        };
        let mut prev = diag(0.0, TendonSign::Physical);
        for k in [1e3, 1e5, 1e7] {
            let cur = diag(k, TendonSign::Physical);
            for a in 0..3 {
                assert!(cur[a] <= prev[a] * (1.0 + 1e-9) + 1e-15, "k={k} axis {a}");
            }
            prev = cur;
        }
        // Reversed signs let added tendon stiffness soften the segment.
        let soft = diag(0.0, TendonSign::Reversed);
        let lit = diag(1.0, TendonSign::Reversed);
        assert!(lit[0] > soft[0]);
    }

    #[test]
    fn config_compliance_symmetric_and_wrench_free() {
        let model = segment(ShapeBasis::torsion_free(2, L).unwrap(), 1.23e5);
        let c = ModalConfig::from_slice(&[2.0, 0.1, 0.0, -1.0, 0.0, 0.2]);
        let cc = model.config_space_compliance(&c, &DVector::zeros(4)).unwrap();
        assert!((&cc.matrix - cc.matrix.transpose()).amax() < 1e-10 * cc.matrix.amax());
        assert!(cc.matrix.clone().symmetric_eigenvalues().min() > 0.0);
        // Differencing noise in C_τ is the only asymmetry under tension.
        let tau = DVector::from_vec(vec![100.0, 80.0, 60.0, 90.0]);
        let loaded = model.config_space_compliance(&c, &tau).unwrap();
        let asym = (&loaded.matrix - loaded.matrix.transpose()).amax() / loaded.matrix.amax();
        assert!(asym < 1e-8, "{asym}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let props = RodProperties::new(L, 3.2, 3.2, 10.0).unwrap();
        let rod = Rod::new(ShapeBasis::torsion_free(2, L).unwrap(), props, 10).unwrap();
        let routing = TendonRouting::constant_pitch(2, R, L + 0.1).unwrap();
        assert!(SegmentModel::new(rod.clone(), routing, DVector::from_element(2, 1.0)).is_err());
        let routing = TendonRouting::constant_pitch(2, R, L).unwrap();
        assert!(SegmentModel::new(rod.clone(), routing.clone(), DVector::from_element(3, 1.0)).is_err());
        let model = SegmentModel::new(rod, routing, DVector::from_element(2, 1.0)).unwrap();
        assert!(model.tendon_path_derivative(&ModalConfig::zeros(6), 5, 0.1).is_err());
        assert!(model.tendon_path_derivative(&ModalConfig::zeros(6), 0, L + 0.1).is_err());
        assert!(TendonRouting::new(vec![]).is_err());
    }

    #[test]
    fn degenerate_routing_detected() {
        let model = segment(ShapeBasis::uniform(0, L).unwrap(), 1e5);
        // 1 − κ r = 0 for the inner tendon collapses its path derivative.
        let c = ModalConfig::from_slice(&[1.0 / R, 0.0, 0.0]);
        assert!(matches!(
            model.config_jacobian(&c),
            Err(Error::DegenerateRouting { tendon: 3, .. })
        ));
    }

    #[test]
    fn hermite_path_interpolates_knots() {
        let path = TendonPath::Tabulated {
            s: vec![0.0, 0.1, 0.3],
            offsets: vec![Vector2::new(0.0, 1.0), Vector2::new(0.5, 0.5), Vector2::new(1.0, 0.0)],
        };
        for (s, r) in [(0.0, Vector2::new(0.0, 1.0)), (0.1, Vector2::new(0.5, 0.5)), (0.3, Vector2::new(1.0, 0.0))] {
            assert!((path.eval(s).0 - r).norm() < 1e-15);
        }
        // Derivative consistent with the position.
        let h = 1e-7;
        let fd = (path.eval(0.17 + h).0 - path.eval(0.17 - h).0) / (2.0 * h);
        assert!((fd - path.eval(0.17).1).norm() < 1e-6);
        let helix = TendonPath::Helical { radius: 2.0, angle: 0.0, twist_rate: PI };
        assert!((helix.eval(0.5).0 - Vector2::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn actuation_tensions() {
        let model = segment(ShapeBasis::torsion_free(2, L).unwrap(), 1e5);
        let pulls = DVector::from_vec(vec![0.01, 0.0, -0.01, 0.0]);
        let act = TendonActuation::from_pulls(&model, &pulls, 50.0).unwrap();
        let tau = act.tensions(&model, &ModalConfig::zeros(6)).unwrap();
        assert!((tau[0] - (50.0 + 1e3)).abs() < 1e-8);
        assert!((tau[1] - 50.0).abs() < 1e-8);
        assert!((tau[2] - (50.0 - 1e3)).abs() < 1e-8);
    }
}
