//! Flat Minkowski tensors with signature (+,-,-,-), natural units.
//!
//! Index placement is explicit: [`FourVector`] stores whatever components the
//! caller says it stores, and [`lower`]/[`raise`] are the only way to move
//! between them. Lorentz matrices are stored as `a[row][col] = a^row_col`.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const ZERO: FourVector = FourVector([0.0; 4]);

    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        FourVector([t, x, y, z])
    }

    pub fn unit(mu: usize) -> Self {
        let mut v = [0.0; 4];
        v[mu] = 1.0;
        FourVector(v)
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for FourVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, o: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, o: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector(self.0.map(|x| -x))
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, s: f64) -> FourVector {
        FourVector(self.0.map(|x| x * s))
    }
}

/// u^0 v^0 - u^1 v^1 - u^2 v^2 - u^3 v^3
pub fn minkowski_dot(u: &FourVector, v: &FourVector) -> f64 {
    (0..4).map(|i| METRIC[i] * u.0[i] * v.0[i]).sum()
}

pub fn lower(u: &FourVector) -> FourVector {
    FourVector(std::array::from_fn(|i| METRIC[i] * u.0[i]))
}

pub fn raise(u: &FourVector) -> FourVector {
    lower(u)
}

/// Entries `a^row_col` of a (proper or improper) Lorentz transformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzMatrix(pub [[f64; 4]; 4]);

impl Default for LorentzMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl LorentzMatrix {
    pub fn identity() -> Self {
        LorentzMatrix(std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 })))
    }

    pub fn apply(&self, v: &FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| (0..4).map(|j| self.0[i][j] * v.0[j]).sum()))
    }

    /// Contracts the row index with a covector: returns w_mu = c_nu a^nu_mu.
    pub fn apply_covector(&self, c: &FourVector) -> FourVector {
        FourVector(std::array::from_fn(|mu| (0..4).map(|nu| c.0[nu] * self.0[nu][mu]).sum()))
    }

    pub fn transpose(&self) -> Self {
        LorentzMatrix(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    /// a^{-1} = g a^T g, valid for pseudo-orthogonal matrices.
    pub fn inverse(&self) -> Self {
        LorentzMatrix(std::array::from_fn(|i| {
            std::array::from_fn(|j| METRIC[i] * self.0[j][i] * METRIC[j])
        }))
    }

    /// max |a g a^T - g|
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| self.0[i][k] * METRIC[k] * self.0[j][k]).sum();
                let target = if i == j { METRIC[i] } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, o: &LorentzMatrix) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((self.0[i][j] - o.0[i][j]).abs());
            }
        }
        m
    }
}

impl Mul for LorentzMatrix {
    type Output = LorentzMatrix;
    fn mul(self, o: LorentzMatrix) -> LorentzMatrix {
        LorentzMatrix(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..4).map(|k| self.0[i][k] * o.0[k][j]).sum())
        }))
    }
}

fn check_axis(axis: usize) {
    assert!((1..=3).contains(&axis), "spatial axis must be 1, 2 or 3, got {axis}");
}

/// Pure boost along a spatial axis: t' = cosh(r) t - sinh(r) x, x' = -sinh(r) t + cosh(r) x.
pub fn make_boost(rapidity: f64, axis: usize) -> LorentzMatrix {
    check_axis(axis);
    let mut a = LorentzMatrix::identity();
    let (c, s) = (rapidity.cosh(), rapidity.sinh());
    a.0[0][0] = c;
    a.0[axis][axis] = c;
    a.0[0][axis] = -s;
    a.0[axis][0] = -s;
    a
}

/// Active rotation by `angle` in the plane of the two axes other than `axis`
/// (right-handed cyclic order).
pub fn make_rotation(angle: f64, axis: usize) -> LorentzMatrix {
    check_axis(axis);
    let (i, j) = rotation_plane(axis);
    let mut a = LorentzMatrix::identity();
    let (c, s) = (angle.cos(), angle.sin());
    a.0[i][i] = c;
    a.0[j][j] = c;
    a.0[i][j] = -s;
    a.0[j][i] = s;
    a
}

fn rotation_plane(axis: usize) -> (usize, usize) {
    match axis {
        1 => (2, 3),
        2 => (3, 1),
        _ => (1, 2),
    }
}

/// Real 4x4 array with antisymmetric lower-index entries omega_{ab}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AntisymTensor(pub [[f64; 4]; 4]);

impl AntisymTensor {
    pub fn zero() -> Self {
        AntisymTensor([[0.0; 4]; 4])
    }

    /// max |w_ab + w_ba|
    pub fn symmetric_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((self.0[i][j] + self.0[j][i]).abs());
            }
        }
        m
    }

    /// Mixed components omega^a_b = g^{aa} omega_{ab}.
    pub fn mixed(&self, a: usize, b: usize) -> f64 {
        METRIC[a] * self.0[a][b]
    }

    /// Contravariant components omega^{ab}.
    pub fn upper(&self, a: usize, b: usize) -> f64 {
        METRIC[a] * METRIC[b] * self.0[a][b]
    }

    /// (omega z)^a = omega^a_b z^b
    pub fn act(&self, z: &FourVector) -> FourVector {
        FourVector(std::array::from_fn(|a| (0..4).map(|b| self.mixed(a, b) * z.0[b]).sum()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Kind of one-parameter Lorentz subgroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LorentzKind {
    Boost,
    Rotation,
}

/// a(t) = exp-family matrix with parameter `rate * t + phase`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzFactor {
    pub kind: LorentzKind,
    pub axis: usize,
    pub rate: f64,
    #[serde(default)]
    pub phase: f64,
}

impl LorentzFactor {
    fn matrix_at(&self, param: f64) -> LorentzMatrix {
        match self.kind {
            LorentzKind::Boost => make_boost(param, self.axis),
            LorentzKind::Rotation => make_rotation(param, self.axis),
        }
    }

    pub fn eval(&self, tau: f64) -> LorentzMatrix {
        self.matrix_at(self.rate * tau + self.phase)
    }

    /// d/dtau of [`eval`](Self::eval), in closed form.
    pub fn derivative(&self, tau: f64) -> LorentzMatrix {
        let p = self.rate * tau + self.phase;
        let mut d = LorentzMatrix([[0.0; 4]; 4]);
        match self.kind {
            LorentzKind::Boost => {
                let k = self.axis;
                let (c, s) = (p.cosh(), p.sinh());
                d.0[0][0] = s;
                d.0[k][k] = s;
                d.0[0][k] = -c;
                d.0[k][0] = -c;
            }
            LorentzKind::Rotation => {
                let (i, j) = rotation_plane(self.axis);
                let (c, s) = (p.cos(), p.sin());
                d.0[i][i] = -s;
                d.0[j][j] = -s;
                d.0[i][j] = -c;
                d.0[j][i] = c;
            }
        }
        for row in d.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= self.rate;
            }
        }
        d
    }
}

/// A tau-dependent inhomogeneous Lorentz transformation with closed-form
/// derivatives:
///
/// a(t) = base * F_1(t) * ... * F_n(t),
/// z(t) = z0 + zdot t + zamp sin(zfreq t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePath {
    #[serde(default)]
    pub base: LorentzMatrix,
    #[serde(default)]
    pub factors: Vec<LorentzFactor>,
    #[serde(default)]
    pub z0: FourVector,
    #[serde(default)]
    pub zdot: FourVector,
    #[serde(default)]
    pub zamp: FourVector,
    #[serde(default)]
    pub zfreq: f64,
}

impl Default for FramePath {
    fn default() -> Self {
        FramePath::static_frame()
    }
}

impl FramePath {
    pub fn static_frame() -> Self {
        FramePath {
            base: LorentzMatrix::identity(),
            factors: Vec::new(),
            z0: FourVector::ZERO,
            zdot: FourVector::ZERO,
            zamp: FourVector::ZERO,
            zfreq: 0.0,
        }
    }

    /// Constant axes, z^0 = -tau, z^i = 0: parametrization by coordinate time.
    pub fn instant_clock() -> Self {
        FramePath {
            zdot: FourVector::new(-1.0, 0.0, 0.0, 0.0),
            ..FramePath::static_frame()
        }
    }

    pub fn rotating(axis: usize, rate: f64) -> Self {
        FramePath {
            factors: vec![LorentzFactor { kind: LorentzKind::Rotation, axis, rate, phase: 0.0 }],
            ..FramePath::static_frame()
        }
    }

    pub fn boosting(axis: usize, rate: f64) -> Self {
        FramePath {
            factors: vec![LorentzFactor { kind: LorentzKind::Boost, axis, rate, phase: 0.0 }],
            ..FramePath::static_frame()
        }
    }

    pub fn a(&self, tau: f64) -> LorentzMatrix {
        self.factors.iter().fold(self.base, |acc, f| acc * f.eval(tau))
    }

    pub fn a_dot(&self, tau: f64) -> LorentzMatrix {
        let n = self.factors.len();
        let mut total = LorentzMatrix([[0.0; 4]; 4]);
        for k in 0..n {
            let mut m = self.base;
            for (i, f) in self.factors.iter().enumerate() {
                m = m * if i == k { f.derivative(tau) } else { f.eval(tau) };
            }
            for r in 0..4 {
                for c in 0..4 {
                    total.0[r][c] += m.0[r][c];
                }
            }
        }
        total
    }

    pub fn z(&self, tau: f64) -> FourVector {
        self.z0 + self.zdot * tau + self.zamp * (self.zfreq * tau).sin()
    }

    pub fn z_dot(&self, tau: f64) -> FourVector {
        self.zdot + self.zamp * (self.zfreq * (self.zfreq * tau).cos())
    }
}

/// omega_{bc} with omega^b_c = adot^b_m (a^{-1})^m_c, indices lowered by g.
pub fn angular_velocity(frame: &FramePath, tau: f64) -> AntisymTensor {
    let mixed = frame.a_dot(tau) * frame.a(tau).inverse();
    AntisymTensor(std::array::from_fn(|b| std::array::from_fn(|c| METRIC[b] * mixed.0[b][c])))
}

/// zdot_R = zdot - omega z.
pub fn rotating_translation_velocity(frame: &FramePath, tau: f64) -> FourVector {
    let w = angular_velocity(frame, tau);
    frame.z_dot(tau) - w.act(&frame.z(tau))
}

/// The same quantity evaluated as a d/dtau (a^{-1} z), the second expression
/// of the rotating translation velocity. Used as a cross-check.
pub fn rotating_translation_velocity_alt(frame: &FramePath, tau: f64) -> FourVector {
    let a = frame.a(tau);
    let ainv = a.inverse();
    // d/dtau a^{-1} = -a^{-1} adot a^{-1}
    let dinv = ainv * frame.a_dot(tau) * ainv;
    let inner = ainv.apply(&frame.z_dot(tau)) - dinv.apply(&frame.z(tau));
    a.apply(&inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn metric_diagonal() {
        let e0 = FourVector::unit(0);
        let e1 = FourVector::unit(1);
        assert_eq!(minkowski_dot(&e0, &e0), 1.0);
        assert_eq!(minkowski_dot(&e1, &e1), -1.0);
    }

    #[test]
    fn zero_rapidity_is_identity() {
        for axis in 1..=3 {
            assert_eq!(make_boost(0.0, axis), LorentzMatrix::identity());
            assert_eq!(make_rotation(0.0, axis), LorentzMatrix::identity());
        }
    }

    #[test]
    fn boost_inverse_pair() {
        let m = make_boost(0.7, 2) * make_boost(-0.7, 2);
        assert!(m.max_abs_diff(&LorentzMatrix::identity()) < 1e-14);
    }

    #[test]
    fn boost_entrywise_pseudo_orthogonality() {
        // a g a^T for a boost of rapidity 0.3 along x, written out by hand.
        let a = make_boost(0.3, 1);
        let (c, s) = (0.3f64.cosh(), 0.3f64.sinh());
        let g00 = c * c - s * s;
        let g01 = c * (-s) - (-s) * c;
        let g11 = s * s - c * c;
        assert!((g00 - 1.0).abs() < 1e-15 && g01.abs() < 1e-15 && (g11 + 1.0).abs() < 1e-15);
        assert!(a.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn constant_frame_has_zero_angular_velocity() {
        let mut f = FramePath::static_frame();
        f.base = make_boost(0.4, 3) * make_rotation(1.1, 1);
        assert_eq!(angular_velocity(&f, 0.3).max_abs(), 0.0);
    }

    #[test]
    fn rotation_about_axis_three_gives_omega_12() {
        // a = R_3(Omega t): a^1_2 = -sin, a^2_1 = sin, so omega^1_2 = -Omega
        // and omega_12 = g_11 omega^1_2 = +Omega.
        let omega = 0.8;
        let w = angular_velocity(&FramePath::rotating(3, omega), 0.37);
        assert!((w.0[1][2] - omega).abs() < 1e-14);
        assert!((w.0[2][1] + omega).abs() < 1e-14);
        assert!(w.symmetric_defect() < 1e-12);
    }

    #[test]
    fn boost_path_angular_velocity_is_antisymmetric() {
        let w = angular_velocity(&FramePath::boosting(1, 0.9), 1.3);
        assert!(w.symmetric_defect() < 1e-12);
        // omega_01 = g_00 omega^0_1 = -rate for the passive boost convention.
        assert!((w.0[0][1] + 0.9).abs() < 1e-12);
    }

    #[test]
    fn instant_clock_translation_velocity() {
        let v = rotating_translation_velocity(&FramePath::instant_clock(), 2.0);
        assert_eq!(v, FourVector::new(-1.0, 0.0, 0.0, 0.0));
        let v = rotating_translation_velocity(&FramePath::static_frame(), 2.0);
        assert_eq!(v, FourVector::ZERO);
    }

    #[test]
    fn rotating_frame_constant_z() {
        // zdot = 0, z = (0, 1, 0, 0), rotation about 3 at rate W:
        // -omega^a_b z^b = -(omega^2_1) e_2 = -W e_2.
        let mut f = FramePath::rotating(3, 0.5);
        f.z0 = FourVector::new(0.0, 1.0, 0.0, 0.0);
        let v = rotating_translation_velocity(&f, 0.2);
        assert!((v - FourVector::new(0.0, 0.0, -0.5, 0.0)).norm_inf() < 1e-14);
    }

    fn arb_frame() -> impl Strategy<Value = (FramePath, f64)> {
        (
            prop::collection::vec((0usize..2, 1usize..=3, -1.0f64..1.0, -1.0f64..1.0), 0..4),
            prop::array::uniform4(-1.0f64..1.0),
            prop::array::uniform4(-1.0f64..1.0),
            prop::array::uniform4(-0.5f64..0.5),
            0.0f64..3.0,
            -2.0f64..2.0,
        )
            .prop_map(|(fs, z0, zd, za, zf, tau)| {
                let factors = fs
                    .into_iter()
                    .map(|(k, axis, rate, phase)| LorentzFactor {
                        kind: if k == 0 { LorentzKind::Boost } else { LorentzKind::Rotation },
                        axis,
                        rate,
                        phase,
                    })
                    .collect();
                (
                    FramePath {
                        base: LorentzMatrix::identity(),
                        factors,
                        z0: FourVector(z0),
                        zdot: FourVector(zd),
                        zamp: FourVector(za),
                        zfreq: zf,
                    },
                    tau,
                )
            })
    }

    proptest! {
        #[test]
        fn dot_is_symmetric(u in prop::array::uniform4(-10.0f64..10.0), v in prop::array::uniform4(-10.0f64..10.0)) {
            let (u, v) = (FourVector(u), FourVector(v));
            prop_assert_eq!(minkowski_dot(&u, &v), minkowski_dot(&v, &u));
        }

        #[test]
        fn constructed_matrices_are_pseudo_orthogonal(r in -3.0f64..3.0, axis in 1usize..=3) {
            prop_assert!(make_boost(r, axis).orthogonality_defect() <= 1e-12 * r.cosh().powi(2).max(1.0));
            prop_assert!(make_rotation(r, axis).orthogonality_defect() <= 1e-12);
        }

        #[test]
        fn frame_paths_have_antisymmetric_omega((frame, tau) in arb_frame()) {
            prop_assert!(frame.a(tau).orthogonality_defect() < 1e-10);
            prop_assert!(angular_velocity(&frame, tau).symmetric_defect() < 1e-12);
        }

        #[test]
        fn translation_velocity_routes_agree((frame, tau) in arb_frame()) {
            let a = rotating_translation_velocity(&frame, tau);
            let b = rotating_translation_velocity_alt(&frame, tau);
            prop_assert!((a - b).norm_inf() < 1e-10);
        }

        #[test]
        fn analytic_a_dot_matches_differences((frame, tau) in arb_frame()) {
            let h = 1e-6;
            let fd = {
                let (p, m) = (frame.a(tau + h), frame.a(tau - h));
                LorentzMatrix(std::array::from_fn(|i| std::array::from_fn(|j| (p.0[i][j] - m.0[i][j]) / (2.0 * h))))
            };
            prop_assert!(fd.max_abs_diff(&frame.a_dot(tau)) < 1e-6);
        }
    }
}
