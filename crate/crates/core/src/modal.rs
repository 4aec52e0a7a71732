//! Chebyshev modal curvature basis.
//!
//! The curvature along the backbone is `u(s) = Φ(s) c`, where `Φ(s)` is a
//! block-diagonal `3 × m` matrix whose rows hold Chebyshev polynomials of the
//! first kind for the x, y and (optionally) z curvature components.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Slack allowed at the ends of the Chebyshev domain.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

/// `T_n(x)` by the three-term recurrence.
pub fn chebyshev_eval(n: usize, x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() > 1.0 + DOMAIN_TOLERANCE {
        return Err(Error::ChebyshevDomain { x });
    }
    let x = x.clamp(-1.0, 1.0);
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return Ok(1.0);
    }
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Fills `out[k] = T_k(x)` for `k = 0..out.len()`. `x` must already be in
/// `[-1, 1]`.
fn chebyshev_fill(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = 2.0 * x * out[k - 1] - out[k - 2];
    }
}

/// Maps arc length `s ∈ [0, L]` onto the Chebyshev domain `[-1, 1]`.
pub fn domain_map(s: f64, length: f64) -> Result<f64> {
    let slack = DOMAIN_TOLERANCE * length.max(1.0);
    if !(s >= -slack && s <= length + slack) {
        return Err(Error::ArcLength { s, length });
    }
    Ok(((2.0 * s - length) / length).clamp(-1.0, 1.0))
}

/// Polynomial order per curvature axis. A missing `z` order gives the
/// torsion-free basis, whose third row of `Φ` is identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisOrders {
    pub x: usize,
    pub y: usize,
    pub z: Option<usize>,
}

impl AxisOrders {
    /// Same order on all three axes.
    pub fn uniform(n: usize) -> Self {
        Self { x: n, y: n, z: Some(n) }
    }

    /// Bending-only basis of order `n` on x and y.
    pub fn torsion_free(n: usize) -> Self {
        Self { x: n, y: n, z: None }
    }

    pub fn max_order(&self) -> usize {
        self.x.max(self.y).max(self.z.unwrap_or(0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeBasis {
    orders: AxisOrders,
    length: f64,
}

impl ShapeBasis {
    pub fn new(orders: AxisOrders, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "basis length must be positive, got {length}"
            )));
        }
        Ok(Self { orders, length })
    }

    pub fn uniform(n: usize, length: f64) -> Result<Self> {
        Self::new(AxisOrders::uniform(n), length)
    }

    pub fn torsion_free(n: usize, length: f64) -> Result<Self> {
        Self::new(AxisOrders::torsion_free(n), length)
    }

    pub fn orders(&self) -> AxisOrders {
        self.orders
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_torsion_free(&self) -> bool {
        self.orders.z.is_none()
    }

    /// Total number of modal coefficients `m`.
    pub fn len(&self) -> usize {
        self.orders.x + 1 + self.orders.y + 1 + self.orders.z.map_or(0, |n| n + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Column ranges `(start, count)` of each axis block; `None` for an absent
    /// torsion block.
    pub fn blocks(&self) -> [Option<(usize, usize)>; 3] {
        let nx = self.orders.x + 1;
        let ny = self.orders.y + 1;
        [
            Some((0, nx)),
            Some((nx, ny)),
            self.orders.z.map(|n| (nx + ny, n + 1)),
        ]
    }

    /// `Φ(s)` as a dense `3 × m` matrix.
    pub fn eval_phi(&self, s: f64) -> Result<DMatrix<f64>> {
        let x = domain_map(s, self.length)?;
        let mut phi = DMatrix::zeros(3, self.len());
        let mut values = vec![0.0; self.orders.max_order() + 1];
        chebyshev_fill(x, &mut values);
        for (axis, block) in self.blocks().iter().enumerate() {
            if let Some((start, count)) = block {
                for k in 0..*count {
                    phi[(axis, start + k)] = values[k];
                }
            }
        }
        Ok(phi)
    }

    pub fn check_config(&self, c: &ModalConfig) -> Result<()> {
        if c.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: c.len(),
            });
        }
        Ok(())
    }

    /// `u(s) = Φ(s) c`.
    pub fn curvature(&self, c: &ModalConfig, s: f64) -> Result<Vector3<f64>> {
        self.check_config(c)?;
        let x = domain_map(s, self.length)?;
        let mut values = vec![0.0; self.orders.max_order() + 1];
        chebyshev_fill(x, &mut values);
        let mut u = Vector3::zeros();
        for (axis, block) in self.blocks().iter().enumerate() {
            if let Some((start, count)) = block {
                u[axis] = (0..*count).map(|k| values[k] * c[start + k]).sum();
            }
        }
        Ok(u)
    }

    /// Number of Gauss–Legendre nodes that integrate `Φᵀ K Φ` exactly.
    pub fn energy_kernel_nodes(&self) -> usize {
        (2 * self.orders.max_order() + 1).div_ceil(2) + 1
    }

    /// `Φ_k = ∫₀ᴸ Φᵀ K_bt Φ ds`.
    pub fn energy_kernel(&self, props: &RodProperties) -> Result<DMatrix<f64>> {
        self.energy_kernel_with_nodes(props, self.energy_kernel_nodes())
    }

    pub fn energy_kernel_with_nodes(
        &self,
        props: &RodProperties,
        nodes: usize,
    ) -> Result<DMatrix<f64>> {
        check_lengths(self, props)?;
        let rule = GaussLegendre::new(nodes);
        let k = props.k_bt();
        let m = self.len();
        let mut out = DMatrix::zeros(m, m);
        for (s, w) in rule.on_interval(0.0, self.length) {
            let phi = self.eval_phi(s)?;
            let kphi = DMatrix::from_fn(3, m, |r, c| k[(r, r)] * phi[(r, c)]);
            out += phi.transpose() * kphi * w;
        }
        // Exact symmetry; quadrature sums can differ in the last bit.
        Ok((&out + out.transpose()) * 0.5)
    }
}

pub(crate) fn check_lengths(basis: &ShapeBasis, props: &RodProperties) -> Result<()> {
    let (a, b) = (basis.length(), props.length());
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::InvalidParameter(format!(
            "basis length {a} does not match rod length {b}"
        )));
    }
    Ok(())
}

/// Vector of modal coefficients `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalConfig(pub DVector<f64>);

impl ModalConfig {
    pub fn zeros(m: usize) -> Self {
        Self(DVector::zeros(m))
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self(DVector::from_column_slice(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    /// `self + t · direction`.
    pub fn offset(&self, direction: &DVector<f64>, t: f64) -> Self {
        Self(&self.0 + direction * t)
    }

    /// Copy with coefficient `i` shifted by `delta`.
    pub fn with_shift(&self, i: usize, delta: f64) -> Self {
        let mut v = self.0.clone();
        v[i] += delta;
        Self(v)
    }
}

impl std::ops::Index<usize> for ModalConfig {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<DVector<f64>> for ModalConfig {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

/// Length and diagonal section stiffness `diag(EI_x, EI_y, GJ)` of a rod.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodProperties {
    length: f64,
    stiffness: Vector3<f64>,
}

impl RodProperties {
    pub fn new(length: f64, ei_x: f64, ei_y: f64, gj: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rod length must be positive, got {length}"
            )));
        }
        for (name, v) in [("EI_x", ei_x), ("EI_y", ei_y), ("GJ", gj)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            length,
            stiffness: Vector3::new(ei_x, ei_y, gj),
        })
    }

    /// Solid circular section of an isotropic material.
    pub fn circular(length: f64, diameter: f64, youngs: f64, poisson: f64) -> Result<Self> {
        let i = std::f64::consts::PI * diameter.powi(4) / 64.0;
        let shear = youngs / (2.0 * (1.0 + poisson));
        Self::new(length, youngs * i, youngs * i, shear * 2.0 * i)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `(EI_x, EI_y, GJ)`.
    pub fn stiffness(&self) -> Vector3<f64> {
        self.stiffness
    }

    pub fn k_bt(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.stiffness)
    }

    /// Same rod with every stiffness entry multiplied by `factor`.
    pub fn scaled_stiffness(&self, factor: f64) -> Result<Self> {
        let k = self.stiffness * factor;
        Self::new(self.length, k.x, k.y, k.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_eval(0, 0.3).unwrap(), 1.0);
        assert_eq!(chebyshev_eval(1, 0.5).unwrap(), 0.5);
        assert!((chebyshev_eval(2, 0.5).unwrap() + 0.5).abs() < 1e-15);
        assert!(matches!(
            chebyshev_eval(3, 1.1),
            Err(Error::ChebyshevDomain { .. })
        ));
        assert!(chebyshev_eval(3, 1.0 + 1e-13).is_ok());
        assert!(chebyshev_eval(3, f64::NAN).is_err());
    }

    #[test]
    fn chebyshev_matches_trig_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            for n in 0..=12 {
                let got = chebyshev_eval(n, theta.cos()).unwrap();
                assert!((got - (n as f64 * theta).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn domain_map_examples() {
        let l = 0.37;
        assert_eq!(domain_map(0.0, l).unwrap(), -1.0);
        assert!(domain_map(l / 2.0, l).unwrap().abs() < 1e-15);
        assert_eq!(domain_map(l, l).unwrap(), 1.0);
        assert!(domain_map(-0.01, l).is_err());
        assert!(domain_map(l + 0.01, l).is_err());
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(ShapeBasis::uniform(0, 1.0).unwrap().len(), 3);
        assert_eq!(ShapeBasis::uniform(10, 1.0).unwrap().len(), 33);
        assert_eq!(ShapeBasis::torsion_free(2, 1.0).unwrap().len(), 6);
        assert!(ShapeBasis::uniform(2, 0.0).is_err());
    }

    #[test]
    fn constant_basis_phi() {
        let b = ShapeBasis::uniform(0, 0.2).unwrap();
        for s in [0.0, 0.07, 0.2] {
            assert_eq!(b.eval_phi(s).unwrap(), DMatrix::identity(3, 3));
        }
    }

    #[test]
    fn torsion_free_phi_at_base() {
        let b = ShapeBasis::torsion_free(2, 0.3006).unwrap();
        let phi = b.eval_phi(0.0).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            6,
            &[
                1.0, -1.0, 1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, -1.0, 1.0, //
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            ],
        );
        assert_eq!(phi, expected);
    }

    #[test]
    fn curvature_matches_phi_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b = ShapeBasis::new(AxisOrders { x: 3, y: 1, z: Some(2) }, 0.5).unwrap();
        let c = ModalConfig(DVector::from_fn(b.len(), |_, _| rng.gen_range(-2.0..2.0)));
        for s in [0.0, 0.11, 0.25, 0.5] {
            let direct = b.curvature(&c, s).unwrap();
            let via_phi = b.eval_phi(s).unwrap() * &c.0;
            assert!((direct - Vector3::from_column_slice(via_phi.as_slice())).norm() < 1e-14);
        }
        assert_eq!(
            b.curvature(&ModalConfig::zeros(b.len()), 0.3).unwrap(),
            Vector3::zeros()
        );
        assert!(matches!(
            b.curvature(&ModalConfig::zeros(3), 0.3),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn constant_curvature_everywhere() {
        let b = ShapeBasis::uniform(0, 0.2).unwrap();
        let c = ModalConfig::from_slice(&[2.5, 0.0, 0.0]);
        for s in [0.0, 0.05, 0.2] {
            assert_eq!(b.curvature(&c, s).unwrap(), Vector3::new(2.5, 0.0, 0.0));
        }
    }

    #[test]
    fn midpoint_curvature_sums_even_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b = ShapeBasis::uniform(2, 0.2).unwrap();
        let c = ModalConfig(DVector::from_fn(9, |_, _| rng.gen_range(-3.0..3.0)));
        let u = b.curvature(&c, 0.1).unwrap();
        // T0(0)=1, T1(0)=0, T2(0)=-1.
        for axis in 0..3 {
            let expected = c[3 * axis] - c[3 * axis + 2];
            assert!((u[axis] - expected).abs() < 1e-14);
        }
    }

    fn props() -> RodProperties {
        RodProperties::new(0.2, 0.05, 0.07, 0.03).unwrap()
    }

    #[test]
    fn constant_basis_energy_kernel() {
        let p = props();
        let b = ShapeBasis::uniform(0, 0.2).unwrap();
        let k = b.energy_kernel(&p).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_column_slice(
            (p.k_bt().diagonal() * 0.2).as_slice(),
        ));
        assert!((k - expected).amax() < 1e-16);
    }

    #[test]
    fn energy_kernel_exact_and_positive_definite() {
        let p = props();
        for n in [0, 1, 2, 4, 7, 10] {
            let b = ShapeBasis::uniform(n, 0.2).unwrap();
            let k = b.energy_kernel(&p).unwrap();
            assert!((&k - k.transpose()).norm() < 1e-12);
            let doubled = b
                .energy_kernel_with_nodes(&p, 2 * b.energy_kernel_nodes())
                .unwrap();
            assert!((&k - doubled).amax() < 1e-13, "n={n}");
            let min_eig = k.symmetric_eigenvalues().min();
            assert!(min_eig > 0.0, "n={n}");
        }
        let tf = ShapeBasis::torsion_free(2, 0.2).unwrap();
        assert!(tf.energy_kernel(&p).unwrap().symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn energy_matches_trapezoid_integration() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let p = props();
        let b = ShapeBasis::uniform(4, 0.2).unwrap();
        let k = b.energy_kernel(&p).unwrap();
        for _ in 0..5 {
            let c = ModalConfig(DVector::from_fn(b.len(), |_, _| rng.gen_range(-5.0..5.0)));
            let quad = 0.5 * (c.0.transpose() * &k * &c.0)[(0, 0)];
            let dens = |s: f64| {
                let u = b.curvature(&c, s).unwrap();
                0.5 * (u.transpose() * p.k_bt() * u)[(0, 0)]
            };
            let trapezoid = |n: usize| {
                let h = 0.2 / n as f64;
                let inner: f64 = (1..n).map(|i| dens(i as f64 * h)).sum();
                h * (inner + 0.5 * (dens(0.0) + dens(0.2)))
            };
            // One Richardson level removes the O(h²) error of the 10⁴-sample
            // trapezoid, which alone sits near 1e-8 relative.
            let dense = (4.0 * trapezoid(10_000) - trapezoid(5_000)) / 3.0;
            assert!((quad - dense).abs() < 1e-8 * quad.abs());
        }
    }

    #[test]
    fn rejects_bad_properties() {
        assert!(RodProperties::new(0.2, 0.0, 1.0, 1.0).is_err());
        assert!(RodProperties::new(-1.0, 1.0, 1.0, 1.0).is_err());
        let b = ShapeBasis::uniform(0, 0.3).unwrap();
        assert!(b.energy_kernel(&props()).is_err());
    }
}
