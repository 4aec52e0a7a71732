//! Rotation-group and rigid-transform algebra.
//!
//! Six-vectors are ordered angular-first throughout: a [`Twist`] is
//! `[angular; linear]` and a [`Wrench`] is `[moment; force]`. All 6x6
//! operators (adjoints, `ad`, `dexp`) follow that ordering.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// Largest symmetric residual accepted by [`vee3`] and [`vee6`].
pub const VEE_TOLERANCE: f64 = 1e-10;

/// Below this rotation angle the trigonometric coefficients are evaluated
/// from their Taylor series instead of the closed forms, which cancel
/// catastrophically for small angles.
const SERIES_THRESHOLD: f64 = 0.1;

/// Element of se(3) in vector form.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub angular: Vector3<f64>,
    pub linear: Vector3<f64>,
}

impl Twist {
    pub fn new(angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        Self { angular, linear }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            angular: v.fixed_rows::<3>(0).into_owned(),
            linear: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.angular, &self.linear)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.angular * k, self.linear * k)
    }
}

/// Moment-first wrench `[m; f]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub moment: Vector3<f64>,
    pub force: Vector3<f64>,
}

impl Wrench {
    pub fn new(moment: Vector3<f64>, force: Vector3<f64>) -> Self {
        Self { moment, force }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            moment: v.fixed_rows::<3>(0).into_owned(),
            force: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.moment, &self.force)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.moment * k, self.force * k)
    }

    pub fn is_zero(&self) -> bool {
        self.moment.iter().chain(self.force.iter()).all(|v| *v == 0.0)
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.moment + rhs.moment, self.force + rhs.force)
    }
}

/// Rigid transform of a backbone frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, position: Vector3<f64>) -> Self {
        Self { rotation, position }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(position: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), position)
    }

    /// `self * other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.position + self.position,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.position))
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.position);
        m
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> Pose {
        Pose::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    /// Adjoint `Ad_T` mapping body twists of the child frame into the parent
    /// frame: `[[R, 0], [p^ R, R]]`.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = self.rotation;
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(hat3(&self.position) * r));
        ad
    }

    /// Frobenius norm of `RᵀR - I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).norm()
    }
}

fn stack(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

#[rustfmt::skip]
pub fn hat3(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
         0.0, -v.z,  v.y,
         v.z,  0.0, -v.x,
        -v.y,  v.x,  0.0,
    )
}

pub fn hat6(xi: &Twist) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat3(&xi.angular));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&xi.linear);
    m
}

/// Inverse of [`hat3`]; rejects matrices that are not skew-symmetric.
pub fn vee3(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let residual = (m + m.transpose()).norm() * 0.5;
    if residual > VEE_TOLERANCE {
        return Err(Error::NotSkew { residual });
    }
    Ok(skew_vee3(m))
}

/// Inverse of [`hat6`]; rejects matrices whose rotation block is not
/// skew-symmetric or whose bottom row is non-zero.
pub fn vee6(m: &Matrix4<f64>) -> Result<Twist> {
    let block = m.fixed_view::<3, 3>(0, 0).into_owned();
    let bottom = m.fixed_view::<1, 4>(3, 0).norm();
    let residual = ((block + block.transpose()).norm() * 0.5).max(bottom);
    if residual > VEE_TOLERANCE {
        return Err(Error::NotSkew { residual });
    }
    Ok(skew_vee6(m))
}

/// Vector of the skew-symmetric part of `m`, without validation.
pub fn skew_vee3(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Twist of the skew-projected rotation block and the translation column.
pub fn skew_vee6(m: &Matrix4<f64>) -> Twist {
    Twist::new(
        skew_vee3(&m.fixed_view::<3, 3>(0, 0).into_owned()),
        m.fixed_view::<3, 1>(0, 3).into_owned(),
    )
}

/// `ad_ξ = [[ω^, 0], [v^, ω^]]`, the matrix of the Lie bracket `[ξ, ·]`.
pub fn ad(xi: &Twist) -> Matrix6<f64> {
    let w = hat3(&xi.angular);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&hat3(&xi.linear));
    m
}

/// Lie bracket `[a, b]` in vector form.
pub fn bracket(a: &Twist, b: &Twist) -> Twist {
    Twist::new(
        a.angular.cross(&b.angular),
        a.angular.cross(&b.linear) + a.linear.cross(&b.angular),
    )
}

/// Evaluates `Σ_k (-1)^k θ^{2k} / (2k + offset)!` (times an optional
/// per-term weight) to full double precision for `θ < SERIES_THRESHOLD`.
fn series(theta2: f64, offset: u32, weight: impl Fn(u32) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut fact: f64 = (1..=offset).map(f64::from).product();
    let mut pow = 1.0;
    for k in 0..8u32 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * weight(k) * pow / fact;
        pow *= theta2;
        let n = 2 * k + offset;
        fact *= f64::from(n + 1) * f64::from(n + 2);
    }
    sum
}

/// Rodrigues-type coefficients shared by the exponential and its derivative.
struct Coefficients {
    /// sin θ / θ
    a: f64,
    /// (1 - cos θ) / θ²
    b: f64,
    /// (θ - sin θ) / θ³
    c: f64,
    /// (θ²/2 + cos θ - 1) / θ⁴
    d: f64,
    /// (2θ - 3 sin θ + θ cos θ) / (2 θ⁵)
    e: f64,
}

impl Coefficients {
    fn new(theta: f64) -> Self {
        let t2 = theta * theta;
        if theta < SERIES_THRESHOLD {
            let one = |_| 1.0;
            Self {
                a: series(t2, 1, one),
                b: series(t2, 2, one),
                c: series(t2, 3, one),
                d: series(t2, 4, one),
                e: series(t2, 5, |k| f64::from(k + 1)),
            }
        } else {
            let (s, co) = theta.sin_cos();
            let half = (0.5 * theta).sin();
            let b = 2.0 * half * half / t2;
            let c = (theta - s) / (t2 * theta);
            Self {
                a: s / theta,
                b,
                c,
                d: (0.5 - b) / t2,
                e: (2.0 * theta - 3.0 * s + theta * co) / (2.0 * t2 * t2 * theta),
            }
        }
    }
}

/// `exp(hat3(ω))`.
pub fn exp_so3(omega: &Vector3<f64>) -> Matrix3<f64> {
    let k = Coefficients::new(omega.norm());
    let w = hat3(omega);
    Matrix3::identity() + w * k.a + w * w * k.b
}

/// Rotation vector of `r`, with angle in `[0, π]`.
pub fn log_so3(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos.acos();
    let v = skew_vee3(r);
    if theta < 1e-6 {
        return v * (1.0 + theta * theta / 6.0);
    }
    if std::f64::consts::PI - theta < 1e-6 {
        // Axis from the symmetric part: R + I ≈ 2 n nᵀ near θ = π.
        let s = (r + Matrix3::identity()) * 0.5;
        let col = (0..3)
            .max_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)]))
            .unwrap_or(0);
        let mut axis = s.column(col).into_owned();
        axis /= axis.norm();
        if axis.dot(&v) < 0.0 {
            axis = -axis;
        }
        return axis * theta;
    }
    v * (theta / theta.sin())
}

/// Closed-form `exp(hat6(ξ) · step)`.
pub fn exp_se3(xi: &Twist, step: f64) -> Pose {
    let omega = xi.angular * step;
    let v = xi.linear * step;
    let k = Coefficients::new(omega.norm());
    let w = hat3(&omega);
    let w2 = w * w;
    let rotation = Matrix3::identity() + w * k.a + w2 * k.b;
    let left = Matrix3::identity() + w * k.b + w2 * k.c;
    Pose::new(rotation, left * v)
}

/// SO(3) left Jacobian `I + b ω^ + c ω^²`.
fn so3_jacobian(w: &Matrix3<f64>, k: &Coefficients) -> Matrix3<f64> {
    Matrix3::identity() + w * k.b + w * w * k.c
}

/// Right-trivialized derivative of the exponential map,
/// `dexp_ξ = Σ ad_ξ^k / (k+1)!`, so that
/// `exp(ξ + δ) · exp(ξ)⁻¹ ≈ exp(dexp_ξ δ)` to first order in `δ`.
pub fn dexp_se3(xi: &Twist) -> Matrix6<f64> {
    let k = Coefficients::new(xi.angular.norm());
    let w = hat3(&xi.angular);
    let rho = hat3(&xi.linear);
    let j = so3_jacobian(&w, &k);

    let wr = w * rho;
    let rw = rho * w;
    let wrw = wr * w;
    let q = rho * 0.5
        + (wr + rw + wrw) * k.c
        + (w * wr + rw * w - wrw * 3.0) * k.d
        + (wrw * w + w * wrw) * k.e;

    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&j);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&j);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&q);
    out
}

/// Left-trivialized derivative, `exp(ξ)⁻¹ · exp(ξ + δ) ≈ exp(dexp_left_ξ δ)`.
/// Equals `dexp_se3(-ξ)`; this is the map used when chaining body twists
/// through a right-multiplied product of exponentials.
pub fn dexp_se3_left(xi: &Twist) -> Matrix6<f64> {
    dexp_se3(&xi.scaled(-1.0))
}

/// Block-diagonal `(R, R)` map from body twists to the hybrid frame.
pub fn hybrid_map(r: &Matrix3<f64>) -> Matrix6<f64> {
    let mut s = Matrix6::zeros();
    s.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    s.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
    s
}

/// Geodesic distance between two rotations, in radians.
pub fn rotation_distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    log_so3(&(a.transpose() * b)).norm()
}
