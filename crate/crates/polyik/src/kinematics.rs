//! Manipulator modeling: Denavit-Hartenberg parameters, forward kinematics,
//! and generation of the polynomial constraint system for one inverse
//! kinematics instance.
//!
//! The D-H convention is fixed to the classic form
//! `Rz(theta + offset) * Tz(d) * Tx(a) * Rx(alpha)`; constraint correctness
//! depends on it, so changing it silently would corrupt every downstream
//! result.
//!
//! Joint angle `theta_i` enters the algebra through its cosine and sine,
//! variables `c_i` (index `i-1`) and `s_i` (index `7 + i - 1`) of a
//! 14-variable polynomial ring. A pose instance yields 12 polynomials `p_j`
//! of degree up to four (the rearranged matrix equation), 7 circle identities
//! `q_i`, 14 linear joint-limit inequalities from the half-angle-tangent
//! substitution, and a linear objective.

use crate::poly::{rational_from_f64, Coeff, Monomial, Polynomial};
use nalgebra::{Matrix3, Matrix4, Vector3};
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thiserror::Error;

pub const NJOINTS: usize = 7;
/// Ambient ring size: c1..c7 then s1..s7.
pub const NVARS: usize = 14;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("expected exactly 7 D-H rows, got {0}")]
    WrongRowCount(usize),
    #[error("non-finite D-H entry in row {0}")]
    NonFinite(usize),
    #[error("joint {0} limits must satisfy -pi < low < high < pi strictly")]
    BadLimits(usize),
    #[error("rotation matrix fails orthonormality: max deviation {0:.2e}")]
    NotARotation(f64),
    #[error("weights must be nonnegative and sum to 1 (sum deviation {0:.2e})")]
    BadWeights(f64),
}

/// One D-H row: link length `a` (mm), twist `alpha` (rad), offset `d` (mm),
/// and the constant added to the joint variable, `theta_offset` (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
}

/// Geometry of a 7-revolute-joint serial manipulator.
#[derive(Debug, Clone, PartialEq)]
pub struct DhParams {
    rows: [DhRow; NJOINTS],
}

impl DhParams {
    pub fn new(rows: Vec<DhRow>) -> Result<Self, KinematicsError> {
        if rows.len() != NJOINTS {
            return Err(KinematicsError::WrongRowCount(rows.len()));
        }
        for (i, r) in rows.iter().enumerate() {
            if !(r.a.is_finite() && r.alpha.is_finite() && r.d.is_finite() && r.theta_offset.is_finite()) {
                return Err(KinematicsError::NonFinite(i));
            }
        }
        let rows: [DhRow; NJOINTS] = rows.try_into().unwrap();
        Ok(DhParams { rows })
    }

    pub fn rows(&self) -> &[DhRow; NJOINTS] {
        &self.rows
    }

    /// Upper bound on the distance from base origin to end effector:
    /// each link contributes a translation of norm `sqrt(a^2 + d^2)`.
    pub fn max_reach(&self) -> f64 {
        self.rows.iter().map(|r| (r.a * r.a + r.d * r.d).sqrt()).sum()
    }
}

/// A rigid end-effector pose: rotation `R` and translation `t` (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    const ORTHO_TOL: f64 = 1e-9;

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, KinematicsError> {
        let gram = rotation.transpose() * rotation;
        let dev = (gram - Matrix3::identity()).abs().max();
        let det_dev = (rotation.determinant() - 1.0).abs();
        if dev > Self::ORTHO_TOL || det_dev > Self::ORTHO_TOL {
            return Err(KinematicsError::NotARotation(dev.max(det_dev)));
        }
        Ok(Pose { rotation, translation })
    }

    pub fn identity() -> Self {
        Pose { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self, KinematicsError> {
        Pose::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }
}

/// Per-joint angle bounds, strictly inside (-pi, pi); the half-angle-tangent
/// encoding of the limits is singular at exactly +-pi.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLimits {
    pub low: [f64; NJOINTS],
    pub high: [f64; NJOINTS],
}

impl JointLimits {
    pub fn new(low: [f64; NJOINTS], high: [f64; NJOINTS]) -> Result<Self, KinematicsError> {
        for i in 0..NJOINTS {
            if !(low[i] > -PI && low[i] < high[i] && high[i] < PI) {
                return Err(KinematicsError::BadLimits(i));
            }
        }
        Ok(JointLimits { low, high })
    }

    pub fn symmetric(bound: [f64; NJOINTS]) -> Result<Self, KinematicsError> {
        let low = bound.map(|b| -b);
        JointLimits::new(low, bound)
    }

    pub fn contains(&self, theta: &JointAngles, tol: f64) -> bool {
        (0..NJOINTS).all(|i| theta.0[i] >= self.low[i] - tol && theta.0[i] <= self.high[i] + tol)
    }
}

/// Seven joint angles in radians, kept in [-pi, pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles(pub [f64; NJOINTS]);

impl JointAngles {
    pub fn zero() -> Self {
        JointAngles([0.0; NJOINTS])
    }

    /// Wraps each entry into [-pi, pi).
    pub fn normalized(&self) -> Self {
        JointAngles(self.0.map(|t| {
            let mut x = (t + PI).rem_euclid(2.0 * PI) - PI;
            if x >= PI {
                x = -PI;
            }
            x
        }))
    }
}

/// Normalized weights for the joint-displacement objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(pub [Coeff; NJOINTS]);

impl Weights {
    /// Exact equal weights 1/7.
    pub fn equal() -> Self {
        Weights(std::array::from_fn(|_| Coeff::new(1.into(), 7.into())))
    }

    /// Rationalizes float weights exactly; they must be nonnegative and sum
    /// to 1 within 1e-9 (degenerate all-zero weights are rejected).
    pub fn from_f64(w: &[f64; NJOINTS]) -> Result<Self, KinematicsError> {
        let sum: f64 = w.iter().sum();
        if w.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(KinematicsError::BadWeights((sum - 1.0).abs()));
        }
        Ok(Weights(std::array::from_fn(|i| {
            rational_from_f64(w[i]).expect("finite weight")
        })))
    }
}

/// The polynomial system of one IK instance over the 14-variable ring.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    /// 12 matrix-equation polynomials, degree <= 4.
    pub p: Vec<Polynomial>,
    /// 7 circle identities `c_i^2 + s_i^2 - 1`.
    pub q: Vec<Polynomial>,
    /// 14 linear joint-limit polynomials, nonnegative on feasible points:
    /// low-limit rows for joints 1..7, then high-limit rows.
    pub ineqs: Vec<Polynomial>,
    /// Linear objective `sum_i 2 w_i (1 - c_i cos(th_i) - s_i sin(th_i))`.
    pub objective: Polynomial,
}

impl ConstraintSystem {
    /// Largest absolute equality residual at a float point (c1..c7, s1..s7).
    pub fn max_equality_residual(&self, point: &[f64]) -> f64 {
        self.p
            .iter()
            .chain(self.q.iter())
            .map(|f| f.eval_f64(point).expect("point length").abs())
            .fold(0.0, f64::max)
    }

    /// Most negative inequality value at a float point (0 when all hold).
    pub fn worst_inequality(&self, point: &[f64]) -> f64 {
        self.ineqs
            .iter()
            .map(|g| g.eval_f64(point).expect("point length"))
            .fold(0.0, f64::min)
    }
}

// ---------------------------------------------------------------------------
// Float kinematics
// ---------------------------------------------------------------------------

/// Classic D-H transform `Rz(theta + offset) * Tz(d) * Tx(a) * Rx(alpha)`.
pub fn dh_matrix(row: &DhRow, theta: f64) -> Matrix4<f64> {
    let th = theta + row.theta_offset;
    let (st, ct) = th.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Matrix4::new(
        ct, -st * ca, st * sa, row.a * ct,
        st, ct * ca, -ct * sa, row.a * st,
        0.0, sa, ca, row.d,
        0.0, 0.0, 0.0, 1.0,
    )
}

/// End-effector pose as the product of the seven joint transforms.
pub fn forward_kinematics(dh: &DhParams, theta: &JointAngles) -> Pose {
    let mut m = Matrix4::identity();
    for (row, &t) in dh.rows.iter().zip(theta.0.iter()) {
        m *= dh_matrix(row, t);
    }
    Pose::from_matrix(&m).expect("product of rotations stays orthonormal")
}

/// Partial products `M_1`, `M_1 M_2`, ..., `M_1..M_7`: the base-frame pose of
/// every link, useful for Jacobians and visualization.
pub fn joint_frames(dh: &DhParams, theta: &JointAngles) -> Vec<Matrix4<f64>> {
    let mut frames = Vec::with_capacity(NJOINTS);
    let mut m = Matrix4::identity();
    for (row, &t) in dh.rows.iter().zip(theta.0.iter()) {
        m *= dh_matrix(row, t);
        frames.push(m);
    }
    frames
}

/// Translation distance (mm) and geodesic rotation angle (degrees) between
/// two poses.
pub fn pose_error(achieved: &Pose, desired: &Pose) -> (f64, f64) {
    let trans = (achieved.translation - desired.translation).norm();
    let rel = achieved.rotation.transpose() * desired.rotation;
    let cos_angle = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    (trans, cos_angle.acos().to_degrees())
}

/// Pose sampling modes for dataset generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseMode {
    /// Forward kinematics of uniform in-limits joint angles: always feasible.
    Reachable,
    /// Uniform position in the workspace box (x, y in +-800 mm, z in
    /// 0..1000 mm) with uniform random orientation; may be unreachable.
    WorkspaceBox,
}

impl PoseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PoseMode::Reachable => "reachable",
            PoseMode::WorkspaceBox => "workspace_box",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reachable" => Some(PoseMode::Reachable),
            "workspace_box" => Some(PoseMode::WorkspaceBox),
            _ => None,
        }
    }
}

/// Deterministic per-seed pose sampling.
pub fn random_pose(dh: &DhParams, limits: &JointLimits, mode: PoseMode, seed: u64) -> Pose {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_pose(dh, limits, mode, &mut rng)
}

/// Samples in-limits joint angles uniformly.
pub fn random_angles(limits: &JointLimits, rng: &mut impl Rng) -> JointAngles {
    JointAngles(std::array::from_fn(|i| rng.gen_range(limits.low[i]..limits.high[i])))
}

pub fn sample_pose(dh: &DhParams, limits: &JointLimits, mode: PoseMode, rng: &mut impl Rng) -> Pose {
    match mode {
        PoseMode::Reachable => forward_kinematics(dh, &random_angles(limits, rng)),
        PoseMode::WorkspaceBox => {
            let t = Vector3::new(
                rng.gen_range(-800.0..800.0),
                rng.gen_range(-800.0..800.0),
                rng.gen_range(0.0..1000.0),
            );
            Pose { rotation: random_rotation(rng), translation: t }
        }
    }
}

/// Uniform random rotation from a normalized 4-dimensional Gaussian
/// quaternion.
pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    // Box-Muller pairs; avoids a rand_distr dependency for one distribution.
    let mut gauss = || {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    };
    let (w, x, y, z) = (gauss(), gauss(), gauss(), gauss());
    let n = (w * w + x * x + y * y + z * z).sqrt();
    let (w, x, y, z) = (w / n, x / n, y / n, z / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y),
    )
}

// ---------------------------------------------------------------------------
// Exact rational kinematics
// ---------------------------------------------------------------------------

/// Fractional bits kept when rationalizing angle parameters (half-angle
/// tangents, quaternion components). 28 bits puts the induced geometric
/// perturbation near 4e-9, far below every residual threshold in the
/// pipeline, while keeping Gröbner-basis coefficients small.
///
/// 20 bits puts rotation perturbations near 2e-6 rad (1e-4 deg) and leaves
/// dyadic translations untouched; both sit orders of magnitude below the
/// 1e-3 mm / 1e-2 deg residual gates.
pub const ANGLE_FRAC_BITS: u32 = 20;
/// Fractional bits kept for lengths (mm): resolution 2^-16 mm ~ 1.5e-5 mm.
pub const LENGTH_FRAC_BITS: u32 = 16;

/// Rounds to the dyadic grid `k / 2^frac_bits` and converts exactly.
pub fn dyadic_round(x: f64, frac_bits: u32) -> Coeff {
    let scale = (1u64 << frac_bits) as f64;
    let scaled = (x * scale).round();
    rational_from_f64(scaled).expect("finite value")
        / Coeff::from(num_bigint::BigInt::from(1u64 << frac_bits))
}

/// `(cos, sin)` of an angle as exact rationals lying exactly on the unit
/// circle.
///
/// Angles within 1e-9 of a multiple of pi/2 snap to the exact lattice point
/// (so right-angle twists contribute 0/+-1 coefficients); everything else is
/// rationalized through the half-angle tangent, which keeps `c^2 + s^2 = 1`
/// an exact identity. `frac_bits` bounds the half-tangent's dyadic precision
/// (`None` keeps the full binary representation).
pub fn rational_unit_prec(angle: f64, frac_bits: Option<u32>) -> (Coeff, Coeff) {
    let quarter = angle / (PI / 2.0);
    let k = quarter.round();
    if (quarter - k).abs() * (PI / 2.0) < 1e-9 {
        let one = Coeff::one;
        let zero = Coeff::zero;
        return match (k as i64).rem_euclid(4) {
            0 => (one(), zero()),
            1 => (zero(), one()),
            2 => (-one(), zero()),
            _ => (zero(), -one()),
        };
    }
    let t = (angle / 2.0).tan();
    let u = match frac_bits {
        // Scale-aware rounding so large half-tangents (angles near +-pi)
        // keep full relative precision.
        Some(bits) => {
            let extra = t.abs().log2().max(0.0) as u32;
            dyadic_round(t, bits.saturating_sub(extra.min(bits / 2)))
        }
        None => rational_from_f64(t).expect("finite angle"),
    };
    let u2 = &u * &u;
    let denom = &u2 + Coeff::one();
    let c = (Coeff::one() - &u2) / &denom;
    let s = (Coeff::from(num_bigint::BigInt::from(2)) * u) / denom;
    (c, s)
}

/// Full-precision variant of [`rational_unit_prec`].
pub fn rational_unit(angle: f64) -> (Coeff, Coeff) {
    rational_unit_prec(angle, None)
}

/// A D-H row with all numeric entries rationalized: lengths exactly from
/// their binary representation, angles as exact unit-circle pairs.
#[derive(Debug, Clone)]
pub struct RationalDhRow {
    pub a: Coeff,
    pub d: Coeff,
    pub cos_alpha: Coeff,
    pub sin_alpha: Coeff,
    pub cos_offset: Coeff,
    pub sin_offset: Coeff,
}

#[derive(Debug, Clone)]
pub struct RationalDh {
    pub rows: Vec<RationalDhRow>,
}

impl RationalDh {
    /// Rationalizes geometry at pipeline precision (dyadic lengths, bounded
    /// half-tangents); what every solve and reduction path uses.
    pub fn from_dh(dh: &DhParams) -> Self {
        Self::with_precision(dh, Some(ANGLE_FRAC_BITS), Some(LENGTH_FRAC_BITS))
    }

    /// Rationalizes geometry from the full binary representation of each
    /// float.
    pub fn from_dh_full_precision(dh: &DhParams) -> Self {
        Self::with_precision(dh, None, None)
    }

    fn with_precision(dh: &DhParams, angle_bits: Option<u32>, len_bits: Option<u32>) -> Self {
        let rationalize_len = |x: f64| match len_bits {
            Some(b) => dyadic_round(x, b),
            None => rational_from_f64(x).expect("finite"),
        };
        let rows = dh
            .rows
            .iter()
            .map(|r| {
                let (cos_alpha, sin_alpha) = rational_unit_prec(r.alpha, angle_bits);
                let (cos_offset, sin_offset) = rational_unit_prec(r.theta_offset, angle_bits);
                RationalDhRow {
                    a: rationalize_len(r.a),
                    d: rationalize_len(r.d),
                    cos_alpha,
                    sin_alpha,
                    cos_offset,
                    sin_offset,
                }
            })
            .collect();
        RationalDh { rows }
    }
}

/// Dense 4x4 matrix over the rationals.
pub type RatMat4 = [[Coeff; 4]; 4];

pub fn rat_identity() -> RatMat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { Coeff::one() } else { Coeff::zero() }))
}

pub fn rat_mul(a: &RatMat4, b: &RatMat4) -> RatMat4 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = Coeff::zero();
            for (k, row) in b.iter().enumerate() {
                if !a[i][k].is_zero() && !row[j].is_zero() {
                    acc += &a[i][k] * &row[j];
                }
            }
            acc
        })
    })
}

/// Exact D-H transform given an exact unit-circle pair for the joint angle.
pub fn rational_dh_matrix(row: &RationalDhRow, c: &Coeff, s: &Coeff) -> RatMat4 {
    // Rotation by theta + offset via the angle-sum identities.
    let ct = c * &row.cos_offset - s * &row.sin_offset;
    let st = s * &row.cos_offset + c * &row.sin_offset;
    let (ca, sa) = (&row.cos_alpha, &row.sin_alpha);
    [
        [ct.clone(), -(&st * ca), &st * sa, &row.a * &ct],
        [st.clone(), &ct * ca, -(&ct * sa), &row.a * &st],
        [Coeff::zero(), sa.clone(), ca.clone(), row.d.clone()],
        [Coeff::zero(), Coeff::zero(), Coeff::zero(), Coeff::one()],
    ]
}

/// Exact forward kinematics over the rationals; `cs` holds exact unit-circle
/// pairs for the seven joints.
pub fn rational_forward_kinematics(dh: &RationalDh, cs: &[(Coeff, Coeff)]) -> RatMat4 {
    assert_eq!(cs.len(), NJOINTS);
    let mut m = rat_identity();
    for (row, (c, s)) in dh.rows.iter().zip(cs.iter()) {
        m = rat_mul(&m, &rational_dh_matrix(row, c, s));
    }
    m
}

/// Rationalizes a float pose entrywise (exact binary conversion).
///
/// The result is generally *not* an exact rotation: the rounded entries fail
/// `R^T R = I` by ~1e-16, which already makes the overdetermined kinematic
/// system algebraically inconsistent (its ideal is the whole ring). Use
/// [`sanitize_pose`] for anything feeding a basis computation.
pub fn rationalize_pose(pose: &Pose) -> RatMat4 {
    let m = pose.to_matrix();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| rational_from_f64(m[(i, j)]).expect("finite pose entry"))
    })
}

/// Projects a float pose onto an exactly consistent rational pose.
///
/// The rotation is rebuilt from a dyadically rounded quaternion through the
/// exact rational parametrization of SO(3), so `R^T R = I` and `det R = 1`
/// hold as identities; the translation is rounded to the dyadic length grid.
/// The projected pose sits within ~1e-8 of the input, far below the
/// pipeline's residual thresholds.
pub fn sanitize_pose(pose: &Pose) -> RatMat4 {
    let rot = nalgebra::Rotation3::from_matrix_unchecked(pose.rotation);
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
    let w = dyadic_round(q.w, ANGLE_FRAC_BITS);
    let x = dyadic_round(q.i, ANGLE_FRAC_BITS);
    let y = dyadic_round(q.j, ANGLE_FRAC_BITS);
    let z = dyadic_round(q.k, ANGLE_FRAC_BITS);
    let n2 = &w * &w + &x * &x + &y * &y + &z * &z;
    assert!(!n2.is_zero(), "degenerate quaternion");
    let two = Coeff::from(num_bigint::BigInt::from(2));
    let r = [
        [
            &w * &w + &x * &x - &y * &y - &z * &z,
            &two * (&x * &y - &w * &z),
            &two * (&x * &z + &w * &y),
        ],
        [
            &two * (&x * &y + &w * &z),
            &w * &w - &x * &x + &y * &y - &z * &z,
            &two * (&y * &z - &w * &x),
        ],
        [
            &two * (&x * &z - &w * &y),
            &two * (&y * &z + &w * &x),
            &w * &w - &x * &x - &y * &y + &z * &z,
        ],
    ];
    let mut out = rat_identity();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = &r[i][j] / &n2;
        }
        out[i][3] = dyadic_round(pose.translation[i], LENGTH_FRAC_BITS);
    }
    out
}

// ---------------------------------------------------------------------------
// Symbolic constraint generation
// ---------------------------------------------------------------------------

fn poly_const(c: &Coeff) -> Polynomial {
    Polynomial::constant(NVARS, c.clone())
}

fn cos_var(joint: usize) -> Polynomial {
    Polynomial::var(NVARS, joint)
}

fn sin_var(joint: usize) -> Polynomial {
    Polynomial::var(NVARS, NJOINTS + joint)
}

type PolyMat4 = [[Polynomial; 4]; 4];

fn poly_zero_mat() -> PolyMat4 {
    std::array::from_fn(|_| std::array::from_fn(|_| Polynomial::zero(NVARS)))
}

fn poly_mul_mat(a: &PolyMat4, b: &PolyMat4) -> PolyMat4 {
    let mut out = poly_zero_mat();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Polynomial::zero(NVARS);
            for k in 0..4 {
                if a[i][k].is_zero() || b[k][j].is_zero() {
                    continue;
                }
                acc = acc.add(&a[i][k].mul(&b[k][j]).unwrap()).unwrap();
            }
            out[i][j] = acc;
        }
    }
    out
}

fn rat_to_poly_mat(m: &RatMat4) -> PolyMat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| poly_const(&m[i][j])))
}

/// Symbolic D-H transform of joint `joint` (0-based): entries are degree-1
/// polynomials in `c_joint`, `s_joint`.
fn symbolic_dh_matrix(row: &RationalDhRow, joint: usize) -> PolyMat4 {
    let c = cos_var(joint);
    let s = sin_var(joint);
    let ct = c
        .scale(&row.cos_offset)
        .sub(&s.scale(&row.sin_offset))
        .unwrap();
    let st = s
        .scale(&row.cos_offset)
        .add(&c.scale(&row.sin_offset))
        .unwrap();
    let zero = || Polynomial::zero(NVARS);
    [
        [
            ct.clone(),
            st.scale(&row.cos_alpha).neg(),
            st.scale(&row.sin_alpha),
            ct.scale(&row.a),
        ],
        [
            st.clone(),
            ct.scale(&row.cos_alpha),
            ct.scale(&row.sin_alpha).neg(),
            st.scale(&row.a),
        ],
        [
            zero(),
            poly_const(&row.sin_alpha),
            poly_const(&row.cos_alpha),
            poly_const(&row.d),
        ],
        [zero(), zero(), zero(), Polynomial::one(NVARS)],
    ]
}

/// Symbolic inverse of the D-H transform, `[R^T, -R^T t; 0, 1]`, with the
/// translation simplified through `c^2 + s^2 = 1` so entries stay degree 1.
fn symbolic_dh_inverse(row: &RationalDhRow, joint: usize) -> PolyMat4 {
    let c = cos_var(joint);
    let s = sin_var(joint);
    let ct = c
        .scale(&row.cos_offset)
        .sub(&s.scale(&row.sin_offset))
        .unwrap();
    let st = s
        .scale(&row.cos_offset)
        .add(&c.scale(&row.sin_offset))
        .unwrap();
    let zero = || Polynomial::zero(NVARS);
    let neg_a = -row.a.clone();
    let neg_dsa = -(&row.d * &row.sin_alpha);
    let neg_dca = -(&row.d * &row.cos_alpha);
    [
        [ct.clone(), st.clone(), zero(), poly_const(&neg_a)],
        [
            st.scale(&row.cos_alpha).neg(),
            ct.scale(&row.cos_alpha),
            poly_const(&row.sin_alpha),
            poly_const(&neg_dsa),
        ],
        [
            st.scale(&row.sin_alpha),
            ct.scale(&row.sin_alpha).neg(),
            poly_const(&row.cos_alpha),
            poly_const(&neg_dca),
        ],
        [zero(), zero(), zero(), Polynomial::one(NVARS)],
    ]
}

/// Circle identity `c_i^2 + s_i^2 - 1` for joint `i` (0-based).
pub fn circle_identity(joint: usize) -> Polynomial {
    let c = Monomial::from_exps({
        let mut e = vec![0u32; NVARS];
        e[joint] = 2;
        e
    });
    let s = Monomial::from_exps({
        let mut e = vec![0u32; NVARS];
        e[NJOINTS + joint] = 2;
        e
    });
    Polynomial::from_terms(
        NVARS,
        [
            (c, Coeff::one()),
            (s, Coeff::one()),
            (Monomial::one(NVARS), -Coeff::one()),
        ],
    )
}

fn half_tangent(angle: f64) -> Coeff {
    let t = (angle / 2.0).tan();
    // Snap half-tangents of right-angle limits so they enter the algebra as
    // exact +-1 or 0.
    for exact in [-1.0f64, 0.0, 1.0] {
        if (t - exact).abs() < 1e-12 {
            return rational_from_f64(exact).unwrap();
        }
    }
    dyadic_round(t, ANGLE_FRAC_BITS)
}

/// Builds the full constraint system for one pose instance. The pose is
/// projected onto an exactly consistent rational pose (see
/// [`sanitize_pose`]); geometry and limits are rationalized at pipeline
/// precision.
pub fn build_constraints(
    dh: &DhParams,
    pose: &Pose,
    theta_hat: &JointAngles,
    weights: &Weights,
    limits: &JointLimits,
) -> ConstraintSystem {
    let rdh = RationalDh::from_dh(dh);
    let target = sanitize_pose(pose);
    build_constraints_exact(&rdh, &target, theta_hat, weights, limits)
}

/// Exact-arithmetic core of [`build_constraints`]: the pose is already a
/// rational matrix. When `target` is an exact forward-kinematics image, the
/// resulting `p`, `q` vanish identically (as rationals) at that witness.
pub fn build_constraints_exact(
    rdh: &RationalDh,
    target: &RatMat4,
    theta_hat: &JointAngles,
    weights: &Weights,
    limits: &JointLimits,
) -> ConstraintSystem {
    // Left side: M3 * M4 * M5 (degree <= 3).
    let m3 = symbolic_dh_matrix(&rdh.rows[2], 2);
    let m4 = symbolic_dh_matrix(&rdh.rows[3], 3);
    let m5 = symbolic_dh_matrix(&rdh.rows[4], 4);
    let lhs = poly_mul_mat(&poly_mul_mat(&m3, &m4), &m5);

    // Right side: M2^-1 M1^-1 M M7^-1 M6^-1 (degree <= 4).
    let m1i = symbolic_dh_inverse(&rdh.rows[0], 0);
    let m2i = symbolic_dh_inverse(&rdh.rows[1], 1);
    let m6i = symbolic_dh_inverse(&rdh.rows[5], 5);
    let m7i = symbolic_dh_inverse(&rdh.rows[6], 6);
    let target_poly = rat_to_poly_mat(target);
    let rhs = poly_mul_mat(
        &poly_mul_mat(&m2i, &m1i),
        &poly_mul_mat(&target_poly, &poly_mul_mat(&m7i, &m6i)),
    );

    // Top 3x4 block of LHS - RHS, row major; the bottom row is identically 0.
    let mut p = Vec::with_capacity(12);
    for i in 0..3 {
        for j in 0..4 {
            p.push(lhs[i][j].sub(&rhs[i][j]).unwrap());
        }
    }

    let q: Vec<Polynomial> = (0..NJOINTS).map(circle_identity).collect();

    // Joint limits as half-angle-tangent linear inequalities:
    // low rows: -(c_i + 1) tan(low/2) + s_i >= 0
    // high rows: (c_i + 1) tan(high/2) - s_i >= 0
    let mut ineqs = Vec::with_capacity(2 * NJOINTS);
    for i in 0..NJOINTS {
        let t = half_tangent(limits.low[i]);
        let g = cos_var(i)
            .add(&Polynomial::one(NVARS))
            .unwrap()
            .scale(&-t)
            .add(&sin_var(i))
            .unwrap();
        ineqs.push(g);
    }
    for i in 0..NJOINTS {
        let t = half_tangent(limits.high[i]);
        let g = cos_var(i)
            .add(&Polynomial::one(NVARS))
            .unwrap()
            .scale(&t)
            .sub(&sin_var(i))
            .unwrap();
        ineqs.push(g);
    }

    // Objective: sum_i 2 w_i (1 - c_i cos(that_i) - s_i sin(that_i)), with
    // the preferred-angle trig as exact circle points.
    let mut objective = Polynomial::zero(NVARS);
    for i in 0..NJOINTS {
        let (ch, sh) = rational_unit_prec(theta_hat.0[i], Some(ANGLE_FRAC_BITS));
        let w2 = &weights.0[i] * Coeff::from(num_bigint::BigInt::from(2));
        let term = poly_const(&w2)
            .sub(&cos_var(i).scale(&(&w2 * &ch)))
            .unwrap()
            .sub(&sin_var(i).scale(&(&w2 * &sh)))
            .unwrap();
        objective = objective.add(&term).unwrap();
    }

    ConstraintSystem { p, q, ineqs, objective }
}

/// The float image `(cos theta_i, sin theta_i)` of joint angles, in variable
/// order (c1..c7, s1..s7).
pub fn cs_point(theta: &JointAngles) -> Vec<f64> {
    let mut pt = vec![0.0; NVARS];
    for i in 0..NJOINTS {
        pt[i] = theta.0[i].cos();
        pt[NJOINTS + i] = theta.0[i].sin();
    }
    pt
}

/// Exact unit-circle pairs for each joint angle (see [`rational_unit`]).
pub fn exact_cs_point(theta: &JointAngles) -> Vec<(Coeff, Coeff)> {
    theta.0.iter().map(|&t| rational_unit(t)).collect()
}

/// Recovers joint angles from a float (c, s) point via `atan2`, mapped into
/// [-pi, pi).
pub fn angles_from_cs(point: &[f64]) -> JointAngles {
    JointAngles(std::array::from_fn(|i| {
        let th = point[NJOINTS + i].atan2(point[i]);
        if th >= PI {
            -PI
        } else {
            th
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::poly::MonomialOrder;

    fn test_chain() -> DhParams {
        // Pure z-chain: a = alpha = 0, positive offsets.
        DhParams::new(
            (0..7)
                .map(|i| DhRow { a: 0.0, alpha: 0.0, d: 100.0 + i as f64, theta_offset: 0.0 })
                .collect(),
        )
        .unwrap()
    }

    fn generic_arm(seed: u64) -> DhParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DhParams::new(
            (0..7)
                .map(|_| DhRow {
                    a: rng.gen_range(50.0..300.0),
                    alpha: rng.gen_range(-PI..PI),
                    d: rng.gen_range(50.0..300.0),
                    theta_offset: rng.gen_range(-PI..PI),
                })
                .collect(),
        )
        .unwrap()
    }

    fn wide_limits() -> JointLimits {
        JointLimits::symmetric([3.0; 7]).unwrap()
    }

    #[test]
    fn dh_identity_row() {
        let row = DhRow { a: 0.0, alpha: 0.0, d: 0.0, theta_offset: 0.0 };
        assert_eq!(dh_matrix(&row, 0.0), Matrix4::identity());
    }

    #[test]
    fn dh_pure_z_translation() {
        let row = DhRow { a: 0.0, alpha: 0.0, d: 5.0, theta_offset: 0.0 };
        let m = dh_matrix(&row, 0.0);
        let mut expected = Matrix4::identity();
        expected[(2, 3)] = 5.0;
        assert_eq!(m, expected);
    }

    #[test]
    fn dh_matches_elementary_composition() {
        // Rz(theta) * Tz(d) * Tx(a) * Rx(alpha) built from nalgebra parts.
        let row = DhRow { a: 1.0, alpha: 0.7, d: 0.3, theta_offset: 0.2 };
        let theta = PI / 2.0;
        let rz = Matrix4::from(nalgebra::Rotation3::from_axis_angle(
            &Vector3::z_axis(),
            theta + row.theta_offset,
        ).to_homogeneous());
        let mut tz = Matrix4::identity();
        tz[(2, 3)] = row.d;
        let mut tx = Matrix4::identity();
        tx[(0, 3)] = row.a;
        let rx = Matrix4::from(nalgebra::Rotation3::from_axis_angle(
            &Vector3::x_axis(),
            row.alpha,
        ).to_homogeneous());
        let expected = rz * tz * tx * rx;
        let got = dh_matrix(&row, theta);
        assert_relative_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn fk_zero_chain() {
        let dh = test_chain();
        let pose = forward_kinematics(&dh, &JointAngles::zero());
        let total: f64 = dh.rows().iter().map(|r| r.d).sum();
        assert_relative_eq!(pose.translation, Vector3::new(0.0, 0.0, total), epsilon = 1e-12);
        assert_relative_eq!(pose.rotation, Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn fk_periodicity() {
        let dh = generic_arm(3);
        let theta = JointAngles([0.3, -0.8, 1.2, 0.5, -1.4, 0.9, 2.2]);
        let mut shifted = theta;
        shifted.0[2] += 2.0 * PI;
        let (dt, dr) = pose_error(
            &forward_kinematics(&dh, &theta),
            &forward_kinematics(&dh, &shifted),
        );
        assert!(dt < 1e-9 && dr < 1e-9, "dt={dt} dr={dr}");
    }

    #[test]
    fn constraints_vanish_at_float_witness() {
        let dh = generic_arm(7);
        let theta = JointAngles([0.4, -0.2, 0.9, -1.1, 0.3, 1.4, -0.6]);
        let pose = forward_kinematics(&dh, &theta);
        // Entrywise full-precision rationalization: float residuals track
        // only the f64 rounding of the forward kinematics.
        let rdh = RationalDh::from_dh_full_precision(&dh);
        let target = rationalize_pose(&pose);
        let cs = build_constraints_exact(&rdh, &target, &JointAngles::zero(), &Weights::equal(), &wide_limits());
        assert_eq!(cs.p.len(), 12);
        assert_eq!(cs.q.len(), 7);
        assert_eq!(cs.ineqs.len(), 14);
        let res = cs.max_equality_residual(&cs_point(&theta));
        assert!(res < 1e-9, "residual {res}");
        // Pipeline path (sanitized pose, dyadic geometry): residual bounded
        // by the sanitization distance times the mm-scale coefficients; the
        // generic arm's twists and offsets round too, so the bound is loose.
        let cs2 = build_constraints(&dh, &pose, &JointAngles::zero(), &Weights::equal(), &wide_limits());
        let res2 = cs2.max_equality_residual(&cs_point(&theta));
        assert!(res2 < 5e-3, "sanitized residual {res2}");
        // Right-angle geometry snaps exactly, leaving only pose rounding
        // scaled by the mm-sized translation entries.
        let snapped = DhParams::new(
            (0..7)
                .map(|i| DhRow {
                    a: 0.0,
                    alpha: if i % 2 == 0 { PI / 2.0 } else { -PI / 2.0 },
                    d: 150.0 + 25.0 * i as f64,
                    theta_offset: 0.0,
                })
                .collect(),
        )
        .unwrap();
        let pose_s = forward_kinematics(&snapped, &theta);
        let cs3 = build_constraints(&snapped, &pose_s, &JointAngles::zero(), &Weights::equal(), &wide_limits());
        let res3 = cs3.max_equality_residual(&cs_point(&theta));
        assert!(res3 < 1e-3, "snapped-geometry sanitized residual {res3}");
    }

    #[test]
    fn sanitized_pose_is_exact_rotation_near_input() {
        let dh = generic_arm(7);
        let theta = JointAngles([0.4, -0.2, 0.9, -1.1, 0.3, 1.4, -0.6]);
        let pose = forward_kinematics(&dh, &theta);
        let m = sanitize_pose(&pose);
        // exact orthonormality: R^T R = I over the rationals
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = Coeff::zero();
                for k in 0..3 {
                    dot += &m[k][i] * &m[k][j];
                }
                let expected = if i == j { Coeff::one() } else { Coeff::zero() };
                assert_eq!(dot, expected, "gram({i},{j})");
            }
        }
        // near the float pose
        for i in 0..3 {
            for j in 0..4 {
                let got = crate::poly::coeff_to_f64(&m[i][j]);
                let want = pose.to_matrix()[(i, j)];
                assert!((got - want).abs() < 1e-4, "entry ({i},{j}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn constraints_vanish_exactly_at_exact_witness() {
        let dh = generic_arm(11);
        let rdh = RationalDh::from_dh(&dh);
        let theta = JointAngles([0.5, 1.1, -0.7, 0.2, -1.9, 0.8, 1.5]);
        let cs_exact = exact_cs_point(&theta);
        let target = rational_forward_kinematics(&rdh, &cs_exact);
        let sys = build_constraints_exact(&rdh, &target, &JointAngles::zero(), &Weights::equal(), &wide_limits());
        let mut point = Vec::with_capacity(NVARS);
        for (c, _) in &cs_exact {
            point.push(c.clone());
        }
        for (_, s) in &cs_exact {
            point.push(s.clone());
        }
        for f in sys.p.iter().chain(sys.q.iter()) {
            let v = f.eval_rational(&point).unwrap();
            assert!(v.is_zero(), "nonzero exact residual {v}");
        }
    }

    #[test]
    fn degree_bounds_are_exact() {
        let dh = generic_arm(19);
        let theta = JointAngles([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        let pose = forward_kinematics(&dh, &theta);
        let cs = build_constraints(&dh, &pose, &JointAngles::zero(), &Weights::equal(), &wide_limits());
        let pmax = cs.p.iter().map(|f| f.total_degree()).max().unwrap();
        assert_eq!(pmax, 4);
        assert!(cs.q.iter().all(|f| f.total_degree() == 2));
        assert!(cs.ineqs.iter().all(|f| f.total_degree() == 1));
        assert_eq!(cs.objective.total_degree(), 1);
    }

    #[test]
    fn objective_matches_squared_distance_modulo_circles() {
        // sum w((c-ch)^2 + (s-sh)^2) - objective = sum w q_i exactly.
        let theta_hat = JointAngles([0.3, -0.9, 0.0, 1.2, -0.4, 0.7, -1.6]);
        let w = Weights::equal();
        let dh = generic_arm(23);
        let rdh = RationalDh::from_dh(&dh);
        let target = rat_identity();
        let sys = build_constraints_exact(&rdh, &target, &theta_hat, &w, &wide_limits());
        let mut squared = Polynomial::zero(NVARS);
        for i in 0..NJOINTS {
            let (ch, sh) = rational_unit_prec(theta_hat.0[i], Some(ANGLE_FRAC_BITS));
            let dc = cos_var(i).sub(&poly_const(&ch)).unwrap();
            let ds = sin_var(i).sub(&poly_const(&sh)).unwrap();
            let term = dc.mul(&dc).unwrap().add(&ds.mul(&ds).unwrap()).unwrap();
            squared = squared.add(&term.scale(&w.0[i])).unwrap();
        }
        let mut qsum = Polynomial::zero(NVARS);
        for i in 0..NJOINTS {
            qsum = qsum.add(&circle_identity(i).scale(&w.0[i])).unwrap();
        }
        let diff = squared.sub(&sys.objective).unwrap();
        assert_eq!(diff, qsum);
    }

    #[test]
    fn objective_zero_at_preferred_point() {
        // theta_hat = 0, equal weights: objective = sum 2/7 (1 - c_i).
        let dh = test_chain();
        let pose = forward_kinematics(&dh, &JointAngles::zero());
        let sys = build_constraints(&dh, &pose, &JointAngles::zero(), &Weights::equal(), &wide_limits());
        let expected_coeff = Coeff::new(2.into(), 7.into());
        for i in 0..NJOINTS {
            let mono = Monomial::var(NVARS, i);
            assert_eq!(sys.objective.coeff(&mono), Some(&-expected_coeff.clone()));
        }
        let at_zero = sys.objective.eval_f64(&cs_point(&JointAngles::zero())).unwrap();
        assert_relative_eq!(at_zero, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn right_angle_low_limit_is_exact_and_tight() {
        // low = -pi/2 gives c + 1 + s >= 0, tight at theta = -pi/2.
        let limits = JointLimits::new([-PI / 2.0; 7], [PI / 2.0; 7]).unwrap();
        let dh = test_chain();
        let pose = forward_kinematics(&dh, &JointAngles::zero());
        let sys = build_constraints(&dh, &pose, &JointAngles::zero(), &Weights::equal(), &limits);
        let g = &sys.ineqs[0];
        let names = crate::poly::default_var_names(NVARS);
        let expected = crate::poly::parse_polynomial("c1 + s1 + 1", &names).unwrap();
        assert_eq!(g, &expected);
        let mut pt = vec![0.0; NVARS];
        pt[7] = -1.0; // (c1, s1) = (0, -1)
        assert_eq!(g.eval_f64(&pt).unwrap(), 0.0);
    }

    #[test]
    fn pose_error_cases() {
        let p1 = Pose::identity();
        assert_eq!(pose_error(&p1, &p1), (0.0, 0.0));
        let p2 = Pose { rotation: Matrix3::identity(), translation: Vector3::new(3.0, 4.0, 0.0) };
        assert_eq!(pose_error(&p1, &p2).0, 5.0);
        let rz = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 1f64.to_radians());
        let p3 = Pose { rotation: rz.into_inner(), translation: Vector3::zeros() };
        let (_, rot) = pose_error(&p3, &p1);
        assert_relative_eq!(rot, 1.0, epsilon = 1e-9);
        // symmetry
        let (t12, r12) = pose_error(&p1, &p3);
        let (t21, r21) = pose_error(&p3, &p1);
        assert_eq!((t12, r12), (t21, r21));
    }

    #[test]
    fn random_pose_is_deterministic() {
        let dh = generic_arm(5);
        let limits = wide_limits();
        let a = random_pose(&dh, &limits, PoseMode::WorkspaceBox, 42);
        let b = random_pose(&dh, &limits, PoseMode::WorkspaceBox, 42);
        assert_eq!(a, b);
        let c = random_pose(&dh, &limits, PoseMode::Reachable, 42);
        let d = random_pose(&dh, &limits, PoseMode::Reachable, 43);
        assert_eq!(c, random_pose(&dh, &limits, PoseMode::Reachable, 42));
        assert_ne!(c, d);
    }

    #[test]
    fn workspace_box_bounds_hold() {
        let dh = generic_arm(5);
        let limits = wide_limits();
        for seed in 0..50 {
            let p = random_pose(&dh, &limits, PoseMode::WorkspaceBox, seed);
            let t = p.translation;
            assert!(t.x.abs() <= 800.0 && t.y.abs() <= 800.0 && (0.0..=1000.0).contains(&t.z));
            assert!(Pose::new(p.rotation, t).is_ok(), "sampled rotation not orthonormal");
        }
    }

    #[test]
    fn reachable_pose_within_reach_bound() {
        let dh = generic_arm(9);
        let limits = wide_limits();
        for seed in 0..20 {
            let p = random_pose(&dh, &limits, PoseMode::Reachable, seed);
            assert!(p.translation.norm() <= dh.max_reach() + 1e-6);
        }
    }

    #[test]
    fn rational_unit_lies_on_circle() {
        for angle in [0.0, PI / 2.0, -PI / 2.0, PI, 0.3, -2.7, 1.234567] {
            let (c, s) = rational_unit(angle);
            let r = &c * &c + &s * &s;
            assert!(r.is_one(), "c^2+s^2 = {r} for angle {angle}");
            let cf = crate::poly::coeff_to_f64(&c);
            let sf = crate::poly::coeff_to_f64(&s);
            assert_relative_eq!(cf, angle.cos(), epsilon = 1e-9);
            assert_relative_eq!(sf, angle.sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn angles_from_cs_round_trip() {
        let theta = JointAngles([0.0, PI / 2.0, -3.0, 1.0, -1.0, 2.9, -0.001]);
        let rec = angles_from_cs(&cs_point(&theta));
        for i in 0..NJOINTS {
            assert_relative_eq!(rec.0[i], theta.0[i], epsilon = 1e-12);
        }
        // Branch edge: (c, s) = (-1, 0) maps to -pi.
        let mut pt = vec![0.0; NVARS];
        for i in 0..NJOINTS {
            pt[i] = -1.0;
        }
        let rec = angles_from_cs(&pt);
        assert!(rec.0.iter().all(|&t| t == -PI));
    }

    #[test]
    fn limits_validation() {
        assert!(JointLimits::new([-PI; 7], [1.0; 7]).is_err());
        assert!(JointLimits::new([0.5; 7], [0.4; 7]).is_err());
        assert!(JointLimits::symmetric([PI; 7]).is_err());
        assert!(JointLimits::symmetric([3.0; 7]).is_ok());
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::from_f64(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(Weights::from_f64(&[0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(Weights::from_f64(&[-0.5, 1.5, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(Weights::from_f64(&[0.0; 7]).is_err());
    }

    #[test]
    fn leading_terms_of_circles_are_cosine_squares() {
        // Sanity on variable layout: LT(q_i) = c_i^2 under grevlex.
        for i in 0..NJOINTS {
            let q = circle_identity(i);
            let lm = q.leading_monomial(MonomialOrder::GradedReverseLex).unwrap();
            let mut expected = vec![0u32; NVARS];
            expected[i] = 2;
            assert_eq!(lm.exps(), &expected[..]);
        }
    }
}
