//! Canonical transformation to a moving frame (a(tau), z(tau)), the
//! multiplier that keeps particles on the g-surface family, the Routhian,
//! and surface-intersection resampling of world lines.

use crate::form::FormOfDynamics;
use crate::generators::{generators_general, GeneratorSet};
use crate::lattice::{CVec4, GaussianProfile, ModeLattice};
use crate::phase::{kinetic_momentum, PhaseSpacePoint, TransformedPoint};
use crate::scalar::{C64, I, ZERO};
use crate::tensors::{angular_velocity, lower, minkowski_dot, AntisymTensor, FourVector, FramePath, LorentzMatrix, METRIC};
use crate::{Error, Result};

fn mat_vec_c(a: &LorentzMatrix, v: &CVec4) -> CVec4 {
    std::array::from_fn(|r| (0..4).fold(ZERO, |acc, c| acc + v[c] * a.0[r][c]))
}

/// Covector transform w_b = v_m (M)^m_b.
fn covec_c(v: &CVec4, m: &LorentzMatrix) -> CVec4 {
    std::array::from_fn(|b| (0..4).fold(ZERO, |acc, r| acc + v[r] * m.0[r][b]))
}

fn covec(v: &FourVector, m: &LorentzMatrix) -> FourVector {
    FourVector(std::array::from_fn(|b| (0..4).map(|r| v[r] * m.0[r][b]).sum()))
}

/// Old variables to moving-frame variables:
/// q = a x - z, frak-p_n = p_m (a^-1)^m_n, k = a kappa,
/// Q = a y e^{ik.z}, P_b = p_m (a^-1)^m_b e^{-ik.z}.
pub fn canonical_map_forward(old: &PhaseSpacePoint, a: &LorentzMatrix, z: &FourVector) -> TransformedPoint {
    let ainv = a.inverse();
    let mut out = old.clone();
    for pa in out.particles.iter_mut() {
        pa.x = a.apply(&pa.x) - *z;
        pa.p = covec(&pa.p, &ainv);
    }
    for m in out.field.modes.iter_mut() {
        let k = a.apply(&m.k);
        let ph = C64::from_polar(1.0, minkowski_dot(&k, z));
        m.k = k;
        m.q = mat_vec_c(a, &m.q).map(|c| c * ph);
        m.p = covec_c(&m.p, &ainv).map(|c| c / ph);
    }
    if let Some(g) = out.field.grid.as_mut() {
        g.basis = *a * g.basis;
    }
    out
}

pub fn canonical_map_inverse(tp: &TransformedPoint, a: &LorentzMatrix, z: &FourVector) -> PhaseSpacePoint {
    let ainv = a.inverse();
    let mut out = tp.clone();
    for pa in out.particles.iter_mut() {
        pa.x = ainv.apply(&(pa.x + *z));
        pa.p = covec(&pa.p, a);
    }
    for m in out.field.modes.iter_mut() {
        let ph = C64::from_polar(1.0, minkowski_dot(&m.k, z));
        m.q = mat_vec_c(&ainv, &m.q).map(|c| c / ph);
        m.p = covec_c(&m.p, a).map(|c| c * ph);
        m.k = ainv.apply(&m.k);
    }
    if let Some(g) = out.field.grid.as_mut() {
        g.basis = ainv * g.basis;
    }
    out
}

/// Frame data at one parameter value.
#[derive(Clone, Copy, Debug)]
pub struct FrameState {
    pub a: LorentzMatrix,
    pub z: FourVector,
    pub zdot: FourVector,
    pub omega: AntisymTensor,
}

impl FrameState {
    pub fn at(frame: &FramePath, tau: f64) -> Self {
        FrameState { a: frame.a(tau), z: frame.z(tau), zdot: frame.z_dot(tau), omega: angular_velocity(frame, tau) }
    }
}

/// Mode-wise k-derivatives dQ^gamma/dk_rho, indexed [rho][gamma].
pub type ModeGradient = [[C64; 4]; 4];

/// Lattice stencil derivatives for every mode.
pub fn lattice_mode_gradients(field: &ModeLattice) -> Vec<ModeGradient> {
    let dop = field.derivative_operator();
    (0..field.len())
        .map(|n| std::array::from_fn(|r| std::array::from_fn(|g| dop.apply(n, r, |j| field.modes[j].q[g]))))
        .collect()
}

/// dF2/dtau expressed in moving-frame variables: translation, rotation and
/// mixed rotation-translation terms, for particles and field.
pub fn generating_function_rate_new(tp: &TransformedPoint, fs: &FrameState, dq: &[ModeGradient]) -> C64 {
    let w = |a: usize, b: usize| fs.omega.0[a][b];
    let mut total = ZERO;
    for pa in &tp.particles {
        let pu = pa.p_upper();
        let qz = pa.x + fs.z;
        let mut s = -(0..4).map(|n| fs.zdot[n] * pa.p[n]).sum::<f64>();
        for a in 0..4 {
            for b in 0..4 {
                s -= 0.5 * w(a, b) * (qz[a] * pu[b] - qz[b] * pu[a]);
            }
        }
        total += s;
    }
    for (n, m) in tp.field.modes.iter().enumerate() {
        let kl = lower(&m.k);
        let pq: C64 = (0..4).fold(ZERO, |acc, b| acc + m.p[b] * m.q[b]);
        let zk: f64 = (0..4).map(|nu| fs.zdot[nu] * kl[nu]).sum();
        let mut s = I * zk * pq;
        let pu: CVec4 = std::array::from_fn(|a| m.p[a] * METRIC[a]);
        let kz = fs.z;
        for a in 0..4 {
            for b in 0..4 {
                let wab = w(a, b);
                if wab == 0.0 {
                    continue;
                }
                let mut t = pu[a] * m.q[b] - pu[b] * m.q[a];
                for g in 0..4 {
                    // d/dk_b carries an upper index
                    t += m.p[g] * (dq[n][b][g] * m.k[a] - dq[n][a][g] * m.k[b]);
                }
                t += I * pq * (kz[a] * m.k[b] - kz[b] * m.k[a]);
                s += t * (0.5 * wab);
            }
        }
        total += s * m.weight;
    }
    total
}

/// Field data of the generating function held as continuous functions of
/// the old wavevector, so F2 can be evaluated for any frame.
pub struct ContinuumField {
    pub profile: GaussianProfile,
}

impl ContinuumField {
    pub fn y(&self, kappa: &FourVector) -> CVec4 {
        self.profile.q_at(kappa)
    }

    /// New-frame coordinate Q(k) = a y(a^-1 k) e^{ik.z}.
    pub fn q_new(&self, k: &FourVector, a: &LorentzMatrix, z: &FourVector) -> CVec4 {
        let kappa = a.inverse().apply(k);
        let ph = C64::from_polar(1.0, minkowski_dot(k, z));
        mat_vec_c(a, &self.y(&kappa)).map(|c| c * ph)
    }

    /// dQ^g/dk_r by central differences of the continuous profile.
    pub fn q_new_gradient(&self, k: &FourVector, a: &LorentzMatrix, z: &FourVector) -> ModeGradient {
        let h = 1e-5;
        std::array::from_fn(|r| {
            // k_r lower: perturb k^r by g^{rr} h
            let (mut kp, mut km) = (*k, *k);
            kp[r] += METRIC[r] * h;
            km[r] -= METRIC[r] * h;
            let (qp, qm) = (self.q_new(&kp, a, z), self.q_new(&km, a, z));
            std::array::from_fn(|g| (qp[g] - qm[g]) / (2.0 * h))
        })
    }
}

/// F2 at parameter tau for fixed old positions, fixed new particle momenta,
/// fixed new field momenta on the lattice and the continuous old field.
pub fn generating_function(
    x_old: &[FourVector],
    p_new: &[FourVector],
    field_new: &ModeLattice,
    cont: &ContinuumField,
    frame: &FramePath,
    tau: f64,
) -> C64 {
    let (a, z) = (frame.a(tau), frame.z(tau));
    let mut s = ZERO;
    for (x, p) in x_old.iter().zip(p_new) {
        let q = a.apply(x) - z;
        s += (0..4).map(|n| p[n] * q[n]).sum::<f64>();
    }
    for m in &field_new.modes {
        let q = cont.q_new(&m.k, &a, &z);
        s += (0..4).fold(ZERO, |acc, b| acc + m.p[b] * q[b]) * m.weight;
    }
    s
}

/// Analytic rate and central finite difference of F2 (step 1e-5) at tau for
/// a point whose old field coordinates follow `cont`.
pub fn generating_function_rate_check(old: &PhaseSpacePoint, cont: &ContinuumField, frame: &FramePath, tau: f64) -> (C64, C64) {
    let fs = FrameState::at(frame, tau);
    let mut tp = canonical_map_forward(old, &fs.a, &fs.z);
    for m in tp.field.modes.iter_mut() {
        m.q = cont.q_new(&m.k, &fs.a, &fs.z);
    }
    let dq: Vec<ModeGradient> = tp.field.modes.iter().map(|m| cont.q_new_gradient(&m.k, &fs.a, &fs.z)).collect();
    let analytic = generating_function_rate_new(&tp, &fs, &dq);
    let x_old: Vec<FourVector> = old.particles.iter().map(|p| p.x).collect();
    let p_new: Vec<FourVector> = tp.particles.iter().map(|p| p.p).collect();
    let h = 1e-5;
    let fp = generating_function(&x_old, &p_new, &tp.field, cont, frame, tau + h);
    let fm = generating_function(&x_old, &p_new, &tp.field, cont, frame, tau - h);
    (analytic, (fp - fm) / (2.0 * h))
}

/// Multipliers keeping dg/dtau = 0 in moving-frame variables.
pub fn multiplier_form(tp: &TransformedPoint, form: &FormOfDynamics, fs: &FrameState) -> Result<Vec<f64>> {
    tp.particles
        .iter()
        .enumerate()
        .map(|(j, pa)| {
            let dg = form.grad_g(&pa.x);
            let dg_up = crate::tensors::raise(&dg);
            let qz = pa.x + fs.z;
            let mut num: f64 = (0..4).map(|b| fs.zdot[b] * dg[b]).sum();
            for b in 0..4 {
                for c in 0..4 {
                    num += 0.5 * fs.omega.0[b][c] * (qz[b] * dg_up[c] - qz[c] * dg_up[b]);
                }
            }
            let pi = kinetic_momentum(pa, &tp.field);
            let den = 2.0 * (0..4).map(|a| pi[a] * dg[a]).sum::<f64>();
            if den.abs() <= 1e-12 * (1.0 + num.abs()) {
                return Err(Error::Integration(format!("world line of particle {j} grazes the {} surface", form.name())));
            }
            Ok(num / den)
        })
        .collect()
}

/// z_R = z' - omega z.
pub fn rotating_velocity(fs: &FrameState) -> FourVector {
    fs.zdot - fs.omega.act(&fs.z)
}

/// Routhian -z_R^n P_n - (1/2) omega_ab M^ab assembled from generators.
pub fn routhian_from(gens: &GeneratorSet, fs: &FrameState) -> C64 {
    let zr = rotating_velocity(fs);
    let mut h = ZERO;
    for n in 0..4 {
        h -= gens.p[n] * zr[n];
    }
    for a in 0..4 {
        for b in 0..4 {
            h -= gens.m[a][b] * (0.5 * fs.omega.0[a][b]);
        }
    }
    h
}

pub fn routhian(tp: &TransformedPoint, form: &FormOfDynamics, fs: &FrameState) -> Result<C64> {
    Ok(routhian_from(&generators_general(tp, form)?, fs))
}

/// H + dF2/dtau in moving-frame variables with multipliers from the form.
pub fn routhian_via_generating_function(tp: &TransformedPoint, form: &FormOfDynamics, fs: &FrameState) -> Result<C64> {
    let v = multiplier_form(tp, form, fs)?;
    let h = crate::dynamics::hamiltonian_dirac(tp, &v);
    let dq = lattice_mode_gradients(&tp.field);
    Ok(generating_function_rate_new(tp, fs, &dq) + h)
}

/// Parameter s of the first crossing (s > s_prev) of a sampled world line
/// with the leaf g(a(tau) x - z(tau)) = 0 at fixed leaf label tau.
pub fn surface_intersection_tau(
    line: &[(f64, FourVector)],
    form: &FormOfDynamics,
    frame: &FramePath,
    leaf_tau: f64,
    s_prev: f64,
) -> Result<f64> {
    let (a, z) = (frame.a(leaf_tau), frame.z(leaf_tau));
    let gval = |x: &FourVector| form.g(&(a.apply(x) - z));
    let interp = |s: f64| crate::dynamics::interpolate(line, s);
    let idx0 = line.iter().position(|(s, _)| *s > s_prev).unwrap_or(line.len());
    let mut prev = (s_prev, gval(&interp(s_prev).unwrap_or(line[0].1)));
    if s_prev < line[0].0 {
        prev = (line[0].0, gval(&line[0].1));
        if prev.1 == 0.0 {
            return Ok(prev.0);
        }
    }
    for (s, x) in line.iter().skip(idx0) {
        let cur = (*s, gval(x));
        if cur.1 == 0.0 && cur.0 > s_prev {
            return Ok(cur.0);
        }
        if prev.1.signum() != cur.1.signum() {
            let f = |s: f64| -> Result<f64> { Ok(gval(&interp(s)?)) };
            return bracketed_root(&f, prev.0, cur.0, prev.1, cur.1);
        }
        prev = cur;
    }
    Err(Error::Verification(format!("world line does not cross leaf tau = {leaf_tau} after s = {s_prev}")))
}

/// Leaf label of a point: the smallest tau > tau_prev with g(a(tau) x - z(tau)) = 0,
/// searched on [tau_prev, tau_max].
pub fn leaf_label(x: &FourVector, form: &FormOfDynamics, frame: &FramePath, tau_prev: f64, tau_max: f64) -> Result<f64> {
    let f = |t: f64| -> Result<f64> { Ok(form.g(&(frame.a(t).apply(x) - frame.z(t)))) };
    let n = 2000;
    let mut prev = (tau_prev, f(tau_prev)?);
    for i in 1..=n {
        let t = tau_prev + (tau_max - tau_prev) * i as f64 / n as f64;
        let cur = (t, f(t)?);
        if cur.1 == 0.0 {
            return Ok(t);
        }
        if prev.1.signum() != cur.1.signum() && prev.1 != 0.0 {
            return bracketed_root(&f, prev.0, cur.0, prev.1, cur.1);
        }
        prev = cur;
    }
    Err(Error::Verification("no leaf through point in the searched range".into()))
}

/// Bisection with secant acceleration on a sign-changing bracket, to 1e-13.
pub fn bracketed_root(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64> {
    let mut bisect_next = false;
    for _ in 0..300 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let secant = b - fb * (b - a) / (fb - fa);
        // alternate secant and bisection so the bracket always shrinks
        let t = if !bisect_next && secant.is_finite() && secant > lo && secant < hi { secant } else { 0.5 * (a + b) };
        bisect_next = !bisect_next;
        let ft = f(t)?;
        if ft == 0.0 {
            return Ok(t);
        }
        if ft.signum() == fa.signum() {
            a = t;
            fa = ft;
        } else {
            b = t;
            fb = ft;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{AmplitudeKind, AmplitudeSpec, AmplitudeTarget, GridSpec};
    use crate::phase::{project_to_constraints, vector_potential, ParticleState};
    use crate::tensors::{make_boost, make_rotation, LorentzFactor, LorentzKind};

    fn spec() -> AmplitudeSpec {
        AmplitudeSpec { kind: AmplitudeKind::Gaussian, scale: 0.2, target: AmplitudeTarget::Both, seed: 5, width: 1.0, shift: [0.1, -0.2, 0.3, 0.05] }
    }

    fn point(form: &FormOfDynamics) -> PhaseSpacePoint {
        let pt = PhaseSpacePoint {
            particles: vec![
                ParticleState::with_upper_momentum(1.0, 0.6, FourVector::new(0.4, 0.3, -0.2, 0.1), FourVector::new(0.0, 0.2, 0.1, -0.3)),
                ParticleState::with_upper_momentum(1.5, -0.4, FourVector::new(1.3, -0.4, 0.6, 0.2), FourVector::new(0.0, -0.1, 0.0, 0.4)),
            ],
            field: ModeLattice::sampled(GridSpec::new([2, 2, 2, 2], 0.6), &spec(), true),
        };
        project_to_constraints(&pt, form).unwrap()
    }

    fn random_frame() -> FramePath {
        FramePath {
            base: make_boost(0.2, 1) * make_rotation(0.4, 2),
            factors: vec![
                LorentzFactor { kind: LorentzKind::Rotation, axis: 3, rate: 0.7, phase: 0.1 },
                LorentzFactor { kind: LorentzKind::Boost, axis: 2, rate: -0.3, phase: 0.2 },
            ],
            z0: FourVector::new(0.1, 0.2, -0.1, 0.3),
            zdot: FourVector::new(-1.0, 0.2, 0.1, 0.0),
            zamp: FourVector::new(0.05, 0.1, 0.0, -0.02),
            zfreq: 1.3,
        }
    }

    #[test]
    fn identity_map_and_round_trip() {
        let pt = point(&FormOfDynamics::instant());
        let same = canonical_map_forward(&pt, &LorentzMatrix::identity(), &FourVector::default());
        assert_eq!(same, pt);
        let fs = FrameState::at(&random_frame(), 0.37);
        let back = canonical_map_inverse(&canonical_map_forward(&pt, &fs.a, &fs.z), &fs.a, &fs.z);
        for (a, b) in back.particles.iter().zip(&pt.particles) {
            assert!((a.x - b.x).norm_inf() < 1e-12 && (a.p - b.p).norm_inf() < 1e-12);
        }
        for (a, b) in back.field.modes.iter().zip(&pt.field.modes) {
            assert!((a.k - b.k).norm_inf() < 1e-12);
            for mu in 0..4 {
                assert!((a.q[mu] - b.q[mu]).norm() < 1e-12 && (a.p[mu] - b.p[mu]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn potential_is_covariant() {
        let pt = point(&FormOfDynamics::instant());
        let fs = FrameState::at(&random_frame(), 0.8);
        let tp = canonical_map_forward(&pt, &fs.a, &fs.z);
        for (po, pn) in pt.particles.iter().zip(&tp.particles) {
            let old = vector_potential(&po.x, &pt.field);
            let new = vector_potential(&pn.x, &tp.field);
            let rotated = mat_vec_c(&fs.a, &old);
            for mu in 0..4 {
                assert!((new[mu] - rotated[mu]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn static_frame_rate_vanishes() {
        let pt = point(&FormOfDynamics::instant());
        let fs = FrameState::at(&FramePath::static_frame(), 0.0);
        let dq = lattice_mode_gradients(&pt.field);
        assert_eq!(generating_function_rate_new(&pt, &fs, &dq), ZERO);
    }

    #[test]
    fn instant_clock_rate_is_total_energy() {
        let mut pt = point(&FormOfDynamics::instant());
        pt.field = ModeLattice::empty();
        let fs = FrameState::at(&FramePath::instant_clock(), 0.3);
        let r = generating_function_rate_new(&pt, &fs, &[]);
        let e: f64 = pt.particles.iter().map(|p| p.p[0]).sum();
        assert!((r.re - e).abs() < 1e-14);
    }

    #[test]
    fn rate_matches_finite_difference_of_generating_function() {
        let pt = point(&FormOfDynamics::instant());
        let cont = ContinuumField { profile: GaussianProfile::from_spec(&spec()) };
        for tau in [0.0, 0.45, 1.1] {
            let (an, fd) = generating_function_rate_check(&pt, &cont, &random_frame(), tau);
            assert!((an - fd).norm() < 1e-6 * (1.0 + an.norm()), "tau {tau}: {an} vs {fd}");
        }
    }

    #[test]
    fn routhian_equals_hamiltonian_plus_rate() {
        for form in [FormOfDynamics::instant(), FormOfDynamics::lightcone(), FormOfDynamics::hyperboloid(1.0)] {
            let pt = point(&form);
            let fs = FrameState::at(&random_frame(), 0.6);
            let r1 = routhian(&pt, &form, &fs).unwrap();
            let r2 = routhian_via_generating_function(&pt, &form, &fs).unwrap();
            assert!((r1 - r2).norm() < 1e-10, "{}: {r1} vs {r2}", form.name());
        }
    }

    #[test]
    fn instant_clock_routhian_is_energy() {
        let f = FormOfDynamics::instant();
        let pt = point(&f);
        let fs = FrameState::at(&FramePath::instant_clock(), 0.2);
        let h = routhian(&pt, &f, &fs).unwrap();
        let p0 = generators_general(&pt, &f).unwrap().p[0];
        assert!((h - p0).norm() < 1e-12);
    }

    #[test]
    fn instant_multiplier_example() {
        let mut pt = point(&FormOfDynamics::instant());
        pt.field = ModeLattice::empty();
        let fs = FrameState::at(&FramePath::instant_clock(), 0.0);
        let v = multiplier_form(&pt, &FormOfDynamics::instant(), &fs).unwrap();
        for (vj, pa) in v.iter().zip(&pt.particles) {
            assert!((vj + 0.5 / pa.p[0]).abs() < 1e-15);
        }
        let frozen = FrameState::at(&FramePath::static_frame(), 0.0);
        assert!(multiplier_form(&pt, &FormOfDynamics::instant(), &frozen).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lightcone_multiplier_hand_evaluation() {
        let f = FormOfDynamics::lightcone();
        let pt = point(&f);
        let fs = FrameState::at(&random_frame(), 0.4);
        let v = multiplier_form(&pt, &f, &fs).unwrap();
        for (j, pa) in pt.particles.iter().enumerate() {
            // g = q.q: dg/dq^a = 2 q_a, d^a g = 2 q^a
            let q = pa.x;
            let ql = lower(&q);
            let pi = kinetic_momentum(pa, &pt.field);
            let zq: f64 = (0..4).map(|b| fs.zdot[b] * 2.0 * ql[b]).sum();
            let mut rot = 0.0;
            for b in 0..4 {
                for c in 0..4 {
                    rot += 0.5 * fs.omega.0[b][c] * ((q[b] + fs.z[b]) * 2.0 * q[c] - (q[c] + fs.z[c]) * 2.0 * q[b]);
                }
            }
            let den = 2.0 * 2.0 * minkowski_dot(&pi, &q);
            assert!((v[j] - (zq + rot) / den).abs() < 1e-12);
        }
    }

    #[test]
    fn instant_leaf_crossing() {
        // particle at rest: x = (s, 0, 0, 0); instant clock leaf tau has x^0 = -tau
        let line: Vec<(f64, FourVector)> = (0..21).map(|i| (i as f64 * 0.1 - 1.0, FourVector::new(i as f64 * 0.1 - 1.0, 0.0, 0.0, 0.0))).collect();
        let s = surface_intersection_tau(&line, &FormOfDynamics::instant(), &FramePath::instant_clock(), 0.35, -2.0).unwrap();
        assert!((s + 0.35).abs() < 1e-10);
    }

    #[test]
    fn lightcone_leaf_crossing_closed_form() {
        // x(s) = (s, 0.3 + 0.5 s, 0, 0); cone apex at (-tau, 0): (s + tau)^2 = (0.3 + 0.5 s)^2
        let line: Vec<(f64, FourVector)> = (0..41).map(|i| {
            let s = i as f64 * 0.05;
            (s, FourVector::new(s, 0.3 + 0.5 * s, 0.0, 0.0))
        }).collect();
        let tau = -0.1;
        let s = surface_intersection_tau(&line, &FormOfDynamics::lightcone(), &FramePath::instant_clock(), tau, 0.0).unwrap();
        // s + tau = 0.3 + 0.5 s  ->  s = 2 (0.3 - tau)
        assert!((s - 2.0 * (0.3 - tau)).abs() < 1e-10, "{s}");
    }

    #[test]
    fn instant_leaves_are_monotone_along_timelike_lines() {
        let line: Vec<(f64, FourVector)> = (0..41).map(|i| {
            let s = i as f64 * 0.05;
            (s, FourVector::new(-s, 0.2 * s, 0.0, 0.1 * s))
        }).collect();
        let mut prev = -1.0;
        for k in 1..10 {
            let s = surface_intersection_tau(&line, &FormOfDynamics::instant(), &FramePath::instant_clock(), k as f64 * 0.15, prev).unwrap();
            assert!(s > prev);
            prev = s;
        }
        let lbl = leaf_label(&FourVector::new(-0.4, 0.0, 0.0, 0.0), &FormOfDynamics::instant(), &FramePath::instant_clock(), 0.0, 2.0).unwrap();
        assert!((lbl - 0.4).abs() < 1e-12);
    }
}
