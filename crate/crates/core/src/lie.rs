//! The su(2)/SU(2) layer: generators, the exponential chart, right-invariant
//! flows, the KAK factorisation and the closed-form cost of the
//! drift-plus-single-control example.
//!
//! Algebra elements are coefficient triples over the skew-Hermitian basis
//!
//! ```text
//! I_x = (-j/2) [[0, 1], [1, 0]]
//! I_y = (-j/2) [[0, -j], [j, 0]]
//! I_z = (-j/2) [[1, 0], [0, -1]]
//! ```
//!
//! which satisfies `[I_x, I_y] = I_z` cyclically, so the bracket of two
//! coefficient triples is their cross product. The norm on the algebra is the
//! Euclidean norm of the coefficients; with it the principal logarithm has
//! norm equal to the bi-invariant distance from the identity.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, Matrix2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type Mat2 = Matrix2<C64>;

/// Tolerance on `U†U = I` and `det U = 1` for checked construction.
pub const GROUP_TOL: f64 = 1e-12;
/// Default Frobenius distance from `-I` inside which the logarithm refuses.
pub const LOG_ANTIPODE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("group element is within {eps:e} of -I; the principal logarithm is undefined")]
    NearAntipode { eps: f64 },
    #[error("matrix is not special unitary (unitarity defect {unitarity:e}, |det - 1| = {det:e})")]
    NotSpecialUnitary { unitarity: f64, det: f64 },
    #[error("matrix is not in su(2) (skew-Hermitian defect {skew:e}, |trace| = {trace:e})")]
    NotInAlgebra { skew: f64, trace: f64 },
    #[error("system has zero speed bound: no control produces motion")]
    DegenerateSystem,
    #[error("invalid system: {0}")]
    InvalidSystem(String),
}

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// The basis `(I_x, I_y, I_z)` of su(2).
pub fn generators_su2() -> [Mat2; 3] {
    let z = c(0.0, 0.0);
    let ix = Mat2::new(z, c(0.0, -0.5), c(0.0, -0.5), z);
    let iy = Mat2::new(z, c(-0.5, 0.0), c(0.5, 0.0), z);
    let iz = Mat2::new(c(0.0, -0.5), z, z, c(0.0, 0.5));
    [ix, iy, iz]
}

pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

/// A point of su(2) in coordinates over `(I_x, I_y, I_z)`.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct AlgebraVector(pub Vector3<f64>);

impl AlgebraVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    /// Lie bracket; equals the cross product in this basis.
    pub fn bracket(&self, other: &Self) -> Self {
        Self(self.0.cross(&other.0))
    }

    pub fn to_matrix(&self) -> Mat2 {
        let [ix, iy, iz] = generators_su2();
        ix * c(self.0.x, 0.0) + iy * c(self.0.y, 0.0) + iz * c(self.0.z, 0.0)
    }

    /// Reads coefficients back from a 2×2 matrix, rejecting anything that is
    /// not skew-Hermitian and traceless to within `tol`.
    pub fn from_matrix(m: &Mat2, tol: f64) -> Result<Self, LieError> {
        let skew = (m + m.adjoint()).norm();
        let trace = m.trace().norm();
        if skew > tol || trace > tol {
            return Err(LieError::NotInAlgebra { skew, trace });
        }
        // m = (-j/2) [[z, x - j y], [x + j y, -z]]
        let x = -(m[(0, 1)].im + m[(1, 0)].im);
        let y = m[(1, 0)].re - m[(0, 1)].re;
        let z = m[(1, 1)].im - m[(0, 0)].im;
        Ok(Self::new(x, y, z))
    }
}

impl From<[f64; 3]> for AlgebraVector {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<AlgebraVector> for [f64; 3] {
    fn from(a: AlgebraVector) -> Self {
        a.as_array()
    }
}

impl fmt::Debug for AlgebraVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0.x, self.0.y, self.0.z)
    }
}

impl Add for AlgebraVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for AlgebraVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for AlgebraVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Mul<f64> for AlgebraVector {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self(self.0 * rhs)
    }
}

/// An element of SU(2), stored as its 2×2 complex matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct GroupElement(Mat2);

impl GroupElement {
    pub fn identity() -> Self {
        Self(Mat2::identity())
    }

    pub fn from_matrix(m: Mat2) -> Result<Self, LieError> {
        let unitarity = (m.adjoint() * m - Mat2::identity()).norm();
        let det = (m.determinant() - c(1.0, 0.0)).norm();
        if unitarity > GROUP_TOL || det > GROUP_TOL {
            return Err(LieError::NotSpecialUnitary { unitarity, det });
        }
        Ok(Self(m))
    }

    /// Closest element of SU(2) to `m` in Frobenius norm.
    ///
    /// SU(2) is the unit sphere of the real 4-space of matrices
    /// `[[a, b], [-b̄, ā]]`, so the nearest point is the normalised orthogonal
    /// projection onto that space.
    pub fn project(m: &Mat2) -> Self {
        let a = (m[(0, 0)] + m[(1, 1)].conj()) * 0.5;
        let b = (m[(0, 1)] - m[(1, 0)].conj()) * 0.5;
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n == 0.0 {
            return Self::identity();
        }
        let (a, b) = (a / n, b / n);
        Self(Mat2::new(a, b, -b.conj(), a.conj()))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0 - Mat2::identity()).norm()
    }

    pub fn det_defect(&self) -> f64 {
        (self.0.determinant() - c(1.0, 0.0)).norm()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self(self.0 * rhs.0)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.0 - other.0).norm()
    }

    /// `Re tr U = 2 cos(θ/2)` where θ is the rotation angle.
    pub fn re_trace(&self) -> f64 {
        self.0.trace().re
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            m[(0, 0)],
            m[(0, 1)],
            m[(1, 0)],
            m[(1, 1)]
        )
    }
}

impl Mul for GroupElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

/// `sin(θ/2)/θ`, continuous through θ = 0.
fn half_sinc(theta: f64) -> f64 {
    if theta < 1e-4 {
        let t2 = theta * theta;
        0.5 - t2 / 48.0 + t2 * t2 / 3840.0
    } else {
        (0.5 * theta).sin() / theta
    }
}

/// `exp(a_x I_x + a_y I_y + a_z I_z) = cos(θ/2) I + (sin(θ/2)/θ) · 2M`.
pub fn exp_map(a: &AlgebraVector) -> GroupElement {
    let theta = a.norm();
    let cos = (0.5 * theta).cos();
    let s = half_sinc(theta);
    // 2M = -j (a · σ)
    let (x, y, z) = (a.x() * s, a.y() * s, a.z() * s);
    let u00 = c(cos, -z);
    let u01 = c(-y, -x);
    GroupElement(Mat2::new(u00, u01, -u01.conj(), u00.conj()))
}

pub fn log_map(u: &GroupElement) -> Result<AlgebraVector, LieError> {
    log_map_with(u, LOG_ANTIPODE_EPS)
}

/// Principal logarithm with rotation angle in `[0, 2π)`.
pub fn log_map_with(u: &GroupElement, eps: f64) -> Result<AlgebraVector, LieError> {
    let m = u.matrix();
    if (m + Mat2::identity()).norm() < eps {
        return Err(LieError::NearAntipode { eps });
    }
    let a = (m[(0, 0)] + m[(1, 1)].conj()) * 0.5;
    let b = (m[(0, 1)] - m[(1, 0)].conj()) * 0.5;
    let sin_half = (a.im * a.im + b.norm_sqr()).sqrt();
    let half = sin_half.atan2(a.re);
    let theta = 2.0 * half;
    let scale = if sin_half < 1e-12 {
        // θ/sin(θ/2) → 2 at the identity
        2.0 + theta * theta / 12.0
    } else {
        theta / sin_half
    };
    Ok(AlgebraVector::new(
        -b.im * scale,
        -b.re * scale,
        -a.im * scale,
    ))
}

/// A control amplitude vector.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlValue(pub Vec<f64>);

impl ControlValue {
    pub fn new(v: impl Into<Vec<f64>>) -> Self {
        Self(v.into())
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for ControlValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// The compact set controls are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlSet {
    /// `[-bound, bound]^m`.
    Hypercube { bound: f64 },
    /// `‖v‖ = radius`; only `m ≤ 2` is supported.
    Sphere { radius: f64 },
}

impl ControlSet {
    pub fn contains(&self, v: &ControlValue, tol: f64) -> bool {
        match *self {
            ControlSet::Hypercube { bound } => v.0.iter().all(|x| x.abs() <= bound + tol),
            ControlSet::Sphere { radius } => (v.norm() - radius).abs() <= tol,
        }
    }
}

/// Running cost `ℓ(x, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunningCost {
    Constant {
        value: f64,
    },
    /// `base + weight · ‖v‖²`
    ControlQuadratic {
        base: f64,
        weight: f64,
    },
}

impl Default for RunningCost {
    fn default() -> Self {
        RunningCost::Constant { value: 1.0 }
    }
}

impl RunningCost {
    pub fn eval(&self, _chart: &AlgebraVector, v: &ControlValue) -> f64 {
        match *self {
            RunningCost::Constant { value } => value,
            RunningCost::ControlQuadratic { base, weight } => {
                base + weight * v.0.iter().map(|x| x * x).sum::<f64>()
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, RunningCost::Constant { value } if *value == 1.0)
    }
}

/// A right-invariant control system `U̇ = (X_0 + Σ v_k X_k) U`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub generators: Vec<AlgebraVector>,
    #[serde(default)]
    pub drift: Option<AlgebraVector>,
    pub control_set: ControlSet,
    #[serde(default)]
    pub running_cost: RunningCost,
    #[serde(default)]
    pub lambda: f64,
}

impl SystemSpec {
    pub fn new(
        generators: Vec<AlgebraVector>,
        drift: Option<AlgebraVector>,
        control_set: ControlSet,
        running_cost: RunningCost,
        lambda: f64,
    ) -> Result<Self, LieError> {
        let spec = Self {
            generators,
            drift,
            control_set,
            running_cost,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `U̇ = (v_1 I_x + v_2 I_z) U` with `‖v‖ = 2`.
    pub fn eq27(lambda: f64) -> Self {
        Self {
            generators: vec![
                AlgebraVector::new(1.0, 0.0, 0.0),
                AlgebraVector::new(0.0, 0.0, 1.0),
            ],
            drift: None,
            control_set: ControlSet::Sphere { radius: 2.0 },
            running_cost: RunningCost::default(),
            lambda,
        }
    }

    /// `U̇ = (I_z + v I_x) U` with `|v| ≤ vbound`.
    pub fn example31(vbound: f64, lambda: f64) -> Self {
        Self {
            generators: vec![AlgebraVector::new(1.0, 0.0, 0.0)],
            drift: Some(AlgebraVector::new(0.0, 0.0, 1.0)),
            control_set: ControlSet::Hypercube { bound: vbound },
            running_cost: RunningCost::default(),
            lambda,
        }
    }

    pub fn control_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn validate(&self) -> Result<(), LieError> {
        let bad = |msg: &str| Err(LieError::InvalidSystem(msg.to_string()));
        if self.generators.is_empty() {
            return bad("at least one control generator is required");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("discount factor must be finite and nonnegative");
        }
        match self.control_set {
            ControlSet::Hypercube { bound } if !(bound > 0.0 && bound.is_finite()) => {
                return bad("hypercube bound must be positive");
            }
            ControlSet::Sphere { radius } if !(radius > 0.0 && radius.is_finite()) => {
                return bad("sphere radius must be positive");
            }
            ControlSet::Sphere { .. } if self.generators.len() > 2 => {
                return bad("sphere control sets support at most two controls");
            }
            _ => {}
        }
        let ell_ok = match self.running_cost {
            RunningCost::Constant { value } => value > 0.0 && value.is_finite(),
            RunningCost::ControlQuadratic { base, weight } => {
                base > 0.0 && weight >= 0.0 && base.is_finite() && weight.is_finite()
            }
        };
        if !ell_ok {
            return bad("running cost must be positive");
        }
        if self.drift.is_none() && self.bracket_rank() < 3 {
            return bad("generators and their brackets do not span su(2)");
        }
        Ok(())
    }

    /// Rank of the span of the generators and their pairwise brackets.
    pub fn bracket_rank(&self) -> usize {
        let mut cols: Vec<Vector3<f64>> = self.generators.iter().map(|g| g.0).collect();
        for (i, a) in self.generators.iter().enumerate() {
            for b in &self.generators[i + 1..] {
                cols.push(a.bracket(b).0);
            }
        }
        let m = DMatrix::from_fn(3, cols.len(), |r, k| cols[k][r]);
        m.rank(1e-9)
    }
}

/// `X_0 + Σ v_k X_k`; by right-invariance this determines `f(U, v)` at every `U`.
pub fn dynamics_direction(v: &ControlValue, spec: &SystemSpec) -> AlgebraVector {
    let mut d = spec.drift.unwrap_or_else(AlgebraVector::zero);
    for (vk, xk) in v.0.iter().zip(&spec.generators) {
        d = d + *xk * *vk;
    }
    d
}

/// Exact solution of the system from `u` under constant control `v` for time `dt`.
pub fn flow(u: &GroupElement, v: &ControlValue, dt: f64, spec: &SystemSpec) -> GroupElement {
    flow_along(u, &dynamics_direction(v, spec), dt)
}

/// `exp(dt · direction) · u`, re-projected onto SU(2).
pub fn flow_along(u: &GroupElement, direction: &AlgebraVector, dt: f64) -> GroupElement {
    let step = exp_map(&(*direction * dt));
    GroupElement::project(&(step.0 * u.0))
}

/// `sup_{v ∈ V} ‖X_0 + Σ v_k X_k‖`.
pub fn speed_bound(spec: &SystemSpec) -> Result<f64, LieError> {
    let m = spec.control_dim();
    let drift = spec.drift.unwrap_or_else(AlgebraVector::zero);
    let best = match spec.control_set {
        ControlSet::Hypercube { bound } => {
            // convex in v, so the max sits on a vertex of the cube
            let mut best: f64 = 0.0;
            for mask in 0u64..(1u64 << m) {
                let v: Vec<f64> = (0..m)
                    .map(|k| if mask >> k & 1 == 1 { bound } else { -bound })
                    .collect();
                best = best.max(dynamics_direction(&ControlValue(v), spec).norm());
            }
            best
        }
        ControlSet::Sphere { radius } => {
            if spec.drift.is_none() {
                let g = nalgebra::DMatrix::from_fn(3, m, |r, k| spec.generators[k].0[r]);
                let gram = g.transpose() * &g;
                let lmax = gram
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(0.0_f64, f64::max);
                radius * lmax.max(0.0).sqrt()
            } else if m == 1 {
                let g = spec.generators[0];
                (drift + g * radius).norm().max((drift - g * radius).norm())
            } else {
                sphere_drift_sup(spec, radius)
            }
        }
    };
    if !(best > 1e-14) {
        return Err(LieError::DegenerateSystem);
    }
    Ok(best)
}

/// Maximises `‖X_0 + r(cos φ X_1 + sin φ X_2)‖` over φ: coarse scan, then a
/// golden-section polish of the best bracket.
fn sphere_drift_sup(spec: &SystemSpec, radius: f64) -> f64 {
    let speed = |phi: f64| {
        dynamics_direction(
            &ControlValue(vec![radius * phi.cos(), radius * phi.sin()]),
            spec,
        )
        .norm()
    };
    const SCAN: usize = 4096;
    let step = 2.0 * PI / SCAN as f64;
    let (mut best_phi, mut best) = (0.0, speed(0.0));
    for k in 1..SCAN {
        let phi = k as f64 * step;
        let s = speed(phi);
        if s > best {
            best = s;
            best_phi = phi;
        }
    }
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best_phi - step, best_phi + step);
    for _ in 0..80 {
        let a = hi - gr * (hi - lo);
        let b = lo + gr * (hi - lo);
        if speed(a) > speed(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    best.max(speed(0.5 * (lo + hi)))
}

/// Angles of the factorisation `U = exp(β I_x) exp(α I_z) exp(γ I_x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KakFactors {
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl KakFactors {
    pub fn reconstruct(&self) -> GroupElement {
        let k1 = exp_map(&AlgebraVector::new(self.beta, 0.0, 0.0));
        let a = exp_map(&AlgebraVector::new(0.0, 0.0, self.alpha));
        let k2 = exp_map(&AlgebraVector::new(self.gamma, 0.0, 0.0));
        k1 * a * k2
    }
}

/// Factorises `U = k_1 exp(α I_z) k_2` with `k_i` in the one-parameter
/// subgroup of `I_x` and `α ∈ [0, π]`.
///
/// Conjugating by the Hadamard matrix swaps `σ_x` and `σ_z`, so the `k_i`
/// become diagonal phases and `exp(α I_z)` becomes
/// `[[cos α/2, -j sin α/2], [-j sin α/2, cos α/2]]`. The entry magnitudes of
/// `W = H U H` then give α directly and their phases give β ± γ.
pub fn kak_decompose(u: &GroupElement) -> KakFactors {
    let m = u.matrix();
    // W = H U H with H = [[1, 1], [1, -1]] / √2
    let w00 = (m[(0, 0)] + m[(0, 1)] + m[(1, 0)] + m[(1, 1)]) * 0.5;
    let w01 = (m[(0, 0)] - m[(0, 1)] + m[(1, 0)] - m[(1, 1)]) * 0.5;
    let (cos_half, sin_half) = (w00.norm(), w01.norm());
    let alpha = (2.0 * sin_half.atan2(cos_half)).clamp(0.0, PI);
    // w00 = cos(α/2) e^{-j(β+γ)/2},  w01 = -j sin(α/2) e^{-j(β-γ)/2}
    let sum = if cos_half > 1e-300 {
        -2.0 * w00.arg()
    } else {
        0.0
    };
    let diff = if sin_half > 1e-300 {
        -2.0 * (w01 * c(0.0, 1.0)).arg()
    } else {
        0.0
    };
    KakFactors {
        beta: 0.5 * (sum + diff),
        alpha,
        gamma: 0.5 * (sum - diff),
    }
}

pub fn kak_alpha(u: &GroupElement) -> f64 {
    kak_decompose(u).alpha
}

/// `(1 − e^{−λα})/λ`, the optimal discounted cost of the unbounded-control
/// drift system `U̇ = (I_z + v I_x) U` with unit running cost.
pub fn analytic_value_example31(u: &GroupElement, lambda: f64) -> f64 {
    let alpha = kak_alpha(u);
    -(-lambda * alpha).exp_m1() / lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn generator_matrices() {
        let [ix, iy, iz] = generators_su2();
        assert_eq!(iz[(0, 0)], c(0.0, -0.5));
        assert_eq!(iz[(1, 1)], c(0.0, 0.5));
        for g in [ix, iy, iz] {
            assert!(g.trace().norm() == 0.0);
            assert!((g + g.adjoint()).norm() == 0.0);
        }
        assert!(close(&commutator(&ix, &iy), &iz, 1e-15));
        assert!(close(&commutator(&iy, &iz), &ix, 1e-15));
        assert!(close(&commutator(&iz, &ix), &iy, 1e-15));
    }

    #[test]
    fn bracket_is_cross_product() {
        let a = AlgebraVector::new(0.3, -1.2, 0.7);
        let b = AlgebraVector::new(-0.4, 0.5, 2.0);
        let lhs = commutator(&a.to_matrix(), &b.to_matrix());
        assert!(close(&lhs, &a.bracket(&b).to_matrix(), 1e-14));
    }

    #[test]
    fn algebra_matrix_round_trip() {
        let a = AlgebraVector::new(0.3, -1.2, 0.7);
        let back = AlgebraVector::from_matrix(&a.to_matrix(), 1e-14).unwrap();
        assert!((back - a).norm() < 1e-15);
        let not_skew = Mat2::identity();
        assert!(AlgebraVector::from_matrix(&not_skew, 1e-12).is_err());
    }

    #[test]
    fn exp_special_values() {
        assert_eq!(exp_map(&AlgebraVector::zero()), GroupElement::identity());
        let e = exp_map(&AlgebraVector::new(0.0, 0.0, PI));
        let want = Mat2::new(c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
        assert!(close(e.matrix(), &want, 1e-15));
        let e = exp_map(&AlgebraVector::new(0.0, 0.0, 2.0 * PI));
        assert!(close(e.matrix(), &(-Mat2::identity()), 1e-15));
    }

    #[test]
    fn exp_matches_power_series() {
        let a = AlgebraVector::new(0.9, -0.4, 1.3);
        let m = a.to_matrix();
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for k in 1..40 {
            term = term * m / c(k as f64, 0.0);
            sum += term;
        }
        assert!(close(exp_map(&a).matrix(), &sum, 1e-14));
    }

    #[test]
    fn log_special_values() {
        assert_eq!(
            log_map(&GroupElement::identity()).unwrap(),
            AlgebraVector::zero()
        );
        let a = AlgebraVector::new(0.3, -0.7, 1.1);
        assert!((log_map(&exp_map(&a)).unwrap() - a).norm() < 1e-10);
        let minus = GroupElement::from_matrix(-Mat2::identity()).unwrap();
        assert!(matches!(
            log_map(&minus),
            Err(LieError::NearAntipode { .. })
        ));
    }

    #[test]
    fn log_near_identity_is_accurate() {
        let a = AlgebraVector::new(1e-9, -3e-10, 2e-9);
        assert!((log_map(&exp_map(&a)).unwrap() - a).norm() < 1e-20);
    }

    #[test]
    fn checked_construction_rejects_non_unitary() {
        let m = Mat2::identity() * c(1.001, 0.0);
        assert!(matches!(
            GroupElement::from_matrix(m),
            Err(LieError::NotSpecialUnitary { .. })
        ));
        // unitary but det = -1
        let m = Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
        assert!(GroupElement::from_matrix(m).is_err());
    }

    #[test]
    fn projection_fixes_group_elements_and_repairs_drift() {
        let u = exp_map(&AlgebraVector::new(0.5, 1.0, -2.0));
        assert!(GroupElement::project(u.matrix()).distance(&u) < 1e-15);
        let noisy = u.matrix() * c(1.0 + 1e-6, 1e-7);
        let p = GroupElement::project(&noisy);
        assert!(p.unitarity_defect() < 1e-15);
        assert!(p.det_defect() < 1e-15);
        assert!(p.distance(&u) < 1e-5);
    }

    #[test]
    fn dynamics_direction_examples() {
        let eq27 = SystemSpec::eq27(0.5);
        let d = dynamics_direction(&ControlValue::new([2.0, 0.0]), &eq27);
        assert_eq!(d, AlgebraVector::new(2.0, 0.0, 0.0));
        let ex = SystemSpec::example31(10.0, 1.0);
        assert_eq!(
            dynamics_direction(&ControlValue::zeros(1), &ex),
            AlgebraVector::new(0.0, 0.0, 1.0)
        );
        assert_eq!(
            dynamics_direction(&ControlValue::zeros(2), &eq27),
            AlgebraVector::zero()
        );
    }

    #[test]
    fn flow_examples() {
        let spec = SystemSpec::eq27(0.5);
        let v = ControlValue::new([2.0, 0.0]);
        let u = flow(&GroupElement::identity(), &v, PI / 2.0, &spec);
        assert!(u.distance(&exp_map(&AlgebraVector::new(PI, 0.0, 0.0))) < 1e-14);

        let u0 = exp_map(&AlgebraVector::new(0.2, 0.4, -0.1));
        assert!(flow(&u0, &v, 0.0, &spec).distance(&u0) < 1e-15);

        let w = ControlValue::new([1.2, -1.6]);
        let (s, t) = (0.37, 0.81);
        let two = flow(&flow(&GroupElement::identity(), &w, s, &spec), &w, t, &spec);
        let one = flow(&GroupElement::identity(), &w, s + t, &spec);
        assert!(two.distance(&one) < 1e-10);
    }

    #[test]
    fn flow_is_right_invariant() {
        let spec = SystemSpec::eq27(0.5);
        let v = ControlValue::new([-1.2, 1.6]);
        let u = exp_map(&AlgebraVector::new(1.0, -0.5, 0.25));
        let lhs = flow(&u, &v, 0.3, &spec) * u.inverse();
        let rhs = flow(&GroupElement::identity(), &v, 0.3, &spec);
        assert!(lhs.distance(&rhs) < 1e-10);
    }

    #[test]
    fn long_flows_stay_on_the_group() {
        let spec = SystemSpec::eq27(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut u = GroupElement::identity();
        for _ in 0..10_000 {
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            let v = ControlValue::new([2.0 * phi.cos(), 2.0 * phi.sin()]);
            u = flow(&u, &v, 0.01, &spec);
        }
        assert!(u.unitarity_defect() < 1e-8);
    }

    /// Brute-force scan of `‖X_0 + Σ v_k X_k‖` over samples of the control set.
    fn scanned_speed(spec: &SystemSpec, samples: usize) -> f64 {
        let mut best: f64 = 0.0;
        match (spec.control_set, spec.control_dim()) {
            (ControlSet::Sphere { radius }, 2) => {
                for k in 0..samples {
                    let phi = 2.0 * PI * k as f64 / samples as f64;
                    let v = ControlValue::new([radius * phi.cos(), radius * phi.sin()]);
                    best = best.max(dynamics_direction(&v, spec).norm());
                }
            }
            (ControlSet::Hypercube { bound }, 1) => {
                for k in 0..=samples {
                    let v = -bound + 2.0 * bound * k as f64 / samples as f64;
                    best = best.max(dynamics_direction(&ControlValue::new([v]), spec).norm());
                }
            }
            _ => unreachable!(),
        }
        best
    }

    #[test]
    fn speed_bound_examples() {
        let eq27 = SystemSpec::eq27(0.5);
        let b = speed_bound(&eq27).unwrap();
        assert!((b - scanned_speed(&eq27, 10_000)).abs() < 1e-6);
        assert!((b - 2.0).abs() < 1e-12);

        let ex = SystemSpec::example31(10.0, 1.0);
        let b = speed_bound(&ex).unwrap();
        assert!((b - scanned_speed(&ex, 10_000)).abs() < 1e-6);
        assert!((b - 101f64.sqrt()).abs() < 1e-12);

        let single = SystemSpec {
            generators: vec![AlgebraVector::new(1.0, 0.0, 0.0)],
            drift: None,
            control_set: ControlSet::Hypercube { bound: 1.0 },
            running_cost: RunningCost::default(),
            lambda: 1.0,
        };
        assert_eq!(speed_bound(&single).unwrap(), 1.0);
    }

    #[test]
    fn speed_bound_sphere_with_drift() {
        let spec = SystemSpec {
            generators: vec![
                AlgebraVector::new(1.0, 0.5, 0.0),
                AlgebraVector::new(0.0, 0.3, 1.0),
            ],
            drift: Some(AlgebraVector::new(0.2, -0.7, 0.4)),
            control_set: ControlSet::Sphere { radius: 1.5 },
            running_cost: RunningCost::default(),
            lambda: 1.0,
        };
        let b = speed_bound(&spec).unwrap();
        let scan = scanned_speed(&spec, 200_000);
        assert!(b >= scan - 1e-12);
        assert!(b - scan < 1e-6);
    }

    #[test]
    fn degenerate_system() {
        let spec = SystemSpec {
            generators: vec![AlgebraVector::zero()],
            drift: None,
            control_set: ControlSet::Hypercube { bound: 1.0 },
            running_cost: RunningCost::default(),
            lambda: 1.0,
        };
        assert_eq!(speed_bound(&spec), Err(LieError::DegenerateSystem));
    }

    #[test]
    fn system_validation() {
        assert!(SystemSpec::eq27(0.5).validate().is_ok());
        assert!(SystemSpec::example31(10.0, 1.0).validate().is_ok());
        assert_eq!(SystemSpec::eq27(0.5).bracket_rank(), 3);
        let single = SystemSpec {
            generators: vec![AlgebraVector::new(1.0, 0.0, 0.0)],
            drift: None,
            control_set: ControlSet::Hypercube { bound: 1.0 },
            running_cost: RunningCost::default(),
            lambda: 1.0,
        };
        assert!(matches!(single.validate(), Err(LieError::InvalidSystem(_))));
        let mut neg = SystemSpec::eq27(-1.0);
        assert!(neg.validate().is_err());
        neg.lambda = 0.0;
        neg.generators.clear();
        assert!(neg.validate().is_err());
    }

    #[test]
    fn kak_examples() {
        assert_eq!(kak_alpha(&GroupElement::identity()), 0.0);
        assert!((kak_alpha(&exp_map(&AlgebraVector::new(0.0, 0.0, 0.8))) - 0.8).abs() < 1e-14);
        assert!(kak_alpha(&exp_map(&AlgebraVector::new(1.3, 0.0, 0.0))).abs() < 1e-14);
        // exp(-δ I_z) = exp(π I_x) exp(δ I_z) exp(-π I_x)
        assert!((kak_alpha(&exp_map(&AlgebraVector::new(0.0, 0.0, -0.3))) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn kak_reconstructs_random_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = AlgebraVector::new(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            );
            let u = exp_map(&a);
            let k = kak_decompose(&u);
            assert!((0.0..=PI).contains(&k.alpha));
            assert!(k.reconstruct().distance(&u) < 1e-8, "{a:?}");
        }
    }

    #[test]
    fn analytic_value_examples() {
        assert_eq!(
            analytic_value_example31(&GroupElement::identity(), 0.5),
            0.0
        );
        let u = exp_map(&AlgebraVector::new(0.0, 0.0, 1.0));
        assert!((analytic_value_example31(&u, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((analytic_value_example31(&u, 1.0) - 0.6321).abs() < 1e-4);
        let plus = exp_map(&AlgebraVector::new(0.0, 0.0, 0.3));
        let minus = exp_map(&AlgebraVector::new(0.0, 0.0, -0.3));
        assert_eq!(
            analytic_value_example31(&plus, 0.7),
            analytic_value_example31(&minus, 0.7)
        );
    }

    #[test]
    fn one_sided_quotients_both_tend_to_one() {
        let lambda = 0.5;
        let mut prev = f64::INFINITY;
        for delta in [0.1, 0.01, 0.001] {
            let up =
                analytic_value_example31(&exp_map(&AlgebraVector::new(0.0, 0.0, delta)), lambda);
            let down =
                analytic_value_example31(&exp_map(&AlgebraVector::new(0.0, 0.0, -delta)), lambda);
            let (qp, qm) = (up / delta, down / delta);
            let err = (qp - 1.0).abs().max((qm - 1.0).abs());
            assert!(err < prev);
            assert!(err <= lambda * delta);
            prev = err;
        }
    }
}
