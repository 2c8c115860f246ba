//! Instant-form system with three-dimensional field variables A_k, A+_k on a
//! spatial wavevector lattice. The potential is
//!
//! A^b(q) = sum_k w3 (A^b_k e^{-i k.q} + A+^b_k e^{i k.q}),  w3 = h^3/|k|,
//!
//! and the brackets are [A^m_k, A+^n_k'] = -i/(4 pi^2) g^{mn} delta_kk' / w3.
//! Slots reuse the covariant layout: the q slots of a mode hold A^m and the
//! momentum slots hold A+_m with the index lowered.

use crate::brackets::{fill_lie_algebra, generator_scale, BracketReport, GeneratorJets};
use crate::generators::{GeneratorSet, Generators, Provenance, M_PAIRS};
use crate::lattice::{fornberg_first_derivative, CVec4, GaussianProfile, STENCIL_POINTS};
use crate::phase::{plane_wave, CanonState, Layout, ParticleState, PoissonStructure};
use crate::scalar::{flip, Jet, Scalar, Vec4, C64, ZERO};
use crate::tensors::{FourVector, METRIC};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub n: usize,
    pub spacing: f64,
    #[serde(default = "half")]
    pub offset: f64,
}

fn half() -> f64 {
    0.5
}

impl Grid3 {
    pub fn new(n: usize, spacing: f64) -> Self {
        Grid3 { n, spacing, offset: 0.5 }
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64 + self.offset) * self.spacing
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn multi_index(&self, lin: usize) -> [usize; 3] {
        [lin / (self.n * self.n), (lin / self.n) % self.n, lin % self.n]
    }

    pub fn wavevector(&self, lin: usize) -> [f64; 3] {
        self.multi_index(lin).map(|i| self.coord(i))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedMode {
    pub k: [f64; 3],
    pub weight: f64,
    pub a: CVec4,
    /// A+ with upper index.
    pub adag: CVec4,
}

impl ReducedMode {
    pub fn magnitude(&self) -> f64 {
        self.k.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// On-shell four-wavevector (|k|, k).
    pub fn k4(&self) -> FourVector {
        FourVector::new(self.magnitude(), self.k[0], self.k[1], self.k[2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedFieldVars {
    pub modes: Vec<ReducedMode>,
    pub grid: Option<Grid3>,
}

impl ReducedFieldVars {
    pub fn empty() -> Self {
        ReducedFieldVars { modes: Vec::new(), grid: None }
    }

    /// Samples A from a profile of the on-shell wavevector and sets A+ = conj(A).
    pub fn sampled(grid: Grid3, profile: &GaussianProfile) -> Result<Self> {
        let mut modes = Vec::with_capacity(grid.len());
        for lin in 0..grid.len() {
            let k = grid.wavevector(lin);
            let mag = k.iter().map(|x| x * x).sum::<f64>().sqrt();
            if mag == 0.0 {
                return Err(Error::Validation("reduced lattice contains k = 0".into()));
            }
            let a = profile.q_at(&FourVector::new(mag, k[0], k[1], k[2]));
            modes.push(ReducedMode { k, weight: grid.spacing.powi(3) / mag, a, adag: a.map(|c| c.conj()) });
        }
        Ok(ReducedFieldVars { modes, grid: Some(grid) })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// d/dk^i stencils, [node][i] -> (node, weight).
    pub fn derivative_rows(&self) -> Vec<[Vec<(usize, f64)>; 3]> {
        let Some(g) = &self.grid else {
            return vec![Default::default(); self.len()];
        };
        let npts = STENCIL_POINTS.min(g.n);
        (0..g.len())
            .map(|lin| {
                let idx = g.multi_index(lin);
                std::array::from_fn(|ax| {
                    if g.n < 2 {
                        return Vec::new();
                    }
                    let start = idx[ax].saturating_sub(npts / 2).min(g.n - npts);
                    let xs: Vec<f64> = (start..start + npts).map(|i| g.coord(i)).collect();
                    let w = fornberg_first_derivative(g.coord(idx[ax]), &xs);
                    w.into_iter()
                        .enumerate()
                        .map(|(off, wt)| {
                            let mut j = idx;
                            j[ax] = start + off;
                            ((j[0] * g.n + j[1]) * g.n + j[2], wt)
                        })
                        .collect()
                })
            })
            .collect()
    }
}

/// Reduced instant-form point: particle times are fixed at q^0 = 0 and
/// frak-p_0 is not a variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub particles: Vec<ParticleState>,
    pub field: ReducedFieldVars,
}

impl ReducedPoint {
    pub fn layout(&self) -> Layout {
        Layout { n_particles: self.particles.len(), n_modes: self.field.len() }
    }

    pub fn coordinates(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.layout().dim());
        for pa in &self.particles {
            v.extend(pa.x.0.iter().chain(pa.p.0.iter()).map(|&r| C64::new(r, 0.0)));
        }
        for m in &self.field.modes {
            v.extend_from_slice(&m.a);
            v.extend((0..4).map(|mu| m.adag[mu] * METRIC[mu]));
        }
        v
    }

    fn state_from<S: Scalar>(&self, mk: impl Fn(C64, usize) -> S) -> CanonState<S> {
        let l = self.layout();
        let z = self.coordinates();
        let v4 = |f: &dyn Fn(usize) -> usize| -> Vec4<S> { std::array::from_fn(|mu| mk(z[f(mu)], f(mu))) };
        CanonState {
            x: (0..l.n_particles).map(|j| v4(&|mu| l.x(j, mu))).collect(),
            p: (0..l.n_particles).map(|j| v4(&|mu| l.p(j, mu))).collect(),
            q: (0..l.n_modes).map(|m| v4(&|mu| l.q(m, mu))).collect(),
            pm: (0..l.n_modes).map(|m| v4(&|mu| l.pm(m, mu))).collect(),
        }
    }

    pub fn state_values(&self) -> CanonState<C64> {
        self.state_from(|v, _| v)
    }

    pub fn state_jets(&self) -> CanonState<Jet> {
        let n = self.layout().dim();
        self.state_from(|v, i| Jet::var(v, i, n))
    }

    /// Particles: {x^m, p_m} = 1. Field: {A^m, A+_m} = i/(4 pi^2 w3).
    pub fn poisson_structure(&self) -> PoissonStructure {
        let l = self.layout();
        let mut pairs = Vec::new();
        for j in 0..l.n_particles {
            for mu in 0..4 {
                pairs.push((l.x(j, mu), l.p(j, mu), C64::new(1.0, 0.0)));
            }
        }
        for (m, mode) in self.field.modes.iter().enumerate() {
            for mu in 0..4 {
                pairs.push((l.q(m, mu), l.pm(m, mu), C64::new(0.0, 1.0 / (4.0 * PI * PI * mode.weight))));
            }
        }
        PoissonStructure { dim: l.dim(), pairs }
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("reduced point serializes")))
    }
}

pub fn reduced_potential_generic<S: Scalar>(field: &ReducedFieldVars, st: &CanonState<S>, x: &Vec4<S>) -> Vec4<S> {
    let mut acc: Vec4<S> = std::array::from_fn(|_| S::zero());
    for (m, mode) in field.modes.iter().enumerate() {
        // plane_wave of (0, k) gives e^{-i k.x}
        let em = plane_wave(&FourVector::new(0.0, mode.k[0], mode.k[1], mode.k[2]), x);
        let ep = S::one() / em.clone();
        for mu in 0..4 {
            let term = st.q[m][mu].clone() * em.clone() + st.pm[m][mu].scale_re(METRIC[mu]) * ep.clone();
            acc[mu] = acc[mu].clone() + term.scale_re(mode.weight);
        }
    }
    acc
}

fn reduced_energy3<S: Scalar>(point: &ReducedPoint, st: &CanonState<S>, j: usize) -> S {
    let pa = &point.particles[j];
    let a = reduced_potential_generic(&point.field, st, &st.x[j]);
    let pu = flip(&st.p[j]);
    let mut s2 = S::real(pa.mass * pa.mass);
    for i in 1..4 {
        let d = pu[i].clone() - a[i].scale_re(pa.charge);
        s2 = s2 + d.clone() * d;
    }
    a[0].scale_re(pa.charge) + s2.sqrt()
}

/// Field parts: P_m = -4 pi^2 sum w3 k_m A+_g A^g and
/// M_ab = -4 pi^2 sum w3 A+_g (i (S_ab - L_ab) A)^g with the on-shell orbital
/// operators L_ij = k_i d_j - k_j d_i, L_0j = k_0 d_j (d_j = d/dk^j) and the
/// vector matrices (S_ab A)^g = d^g_b g_aa A^a - d^g_a g_bb A^b.
pub fn reduced_field_generators<S: Scalar>(field: &ReducedFieldVars, rows: &[[Vec<(usize, f64)>; 3]], st: &CanonState<S>) -> Generators<S> {
    let z = || S::zero();
    let mut p: Vec4<S> = std::array::from_fn(|_| z());
    let mut m_lo: [Vec4<S>; 4] = std::array::from_fn(|_| std::array::from_fn(|_| z()));
    let c = -4.0 * PI * PI;
    for (n, mode) in field.modes.iter().enumerate() {
        let k4 = mode.k4();
        let kl: [f64; 4] = std::array::from_fn(|a| METRIC[a] * k4[a]);
        let (a, b) = (&st.q[n], &st.pm[n]);
        let ba = (0..4).fold(z(), |acc, g| acc + b[g].clone() * a[g].clone());
        for mu in 0..4 {
            p[mu] = p[mu].clone() + ba.scale_re(c * mode.weight * kl[mu]);
        }
        // d_i A^g
        let da: [Vec4<S>; 3] = std::array::from_fn(|i| std::array::from_fn(|g| rows[n][i].iter().fold(z(), |acc, &(node, w)| acc + st.q[node][g].scale_re(w))));
        // B_g d_i A^g
        let bda: [S; 3] = std::array::from_fn(|i| (0..4).fold(z(), |acc, g| acc + b[g].clone() * da[i][g].clone()));
        for (al, be) in M_PAIRS {
            let spin = b[be].clone() * a[al].scale_re(METRIC[al]) - b[al].clone() * a[be].scale_re(METRIC[be]);
            let orbital = if al == 0 { bda[be - 1].scale_re(k4[0]) } else { bda[be - 1].scale_re(kl[al]) - bda[al - 1].scale_re(kl[be]) };
            let t = (spin - orbital) * S::cst(C64::new(0.0, c * mode.weight));
            m_lo[al][be] = m_lo[al][be].clone() + t;
        }
    }
    let m: [Vec4<S>; 4] = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let s = METRIC[a] * METRIC[b];
            if a < b {
                m_lo[a][b].scale_re(s)
            } else if a > b {
                m_lo[b][a].scale_re(-s)
            } else {
                z()
            }
        })
    });
    Generators { p, m }
}

/// Ten generators with particle parts e A^0 + sqrt((p - eA)^2 + m^2),
/// sum p and the orbital terms, plus the field parts above.
pub fn generators_reduced3d_generic<S: Scalar>(point: &ReducedPoint, rows: &[[Vec<(usize, f64)>; 3]], st: &CanonState<S>) -> Generators<S> {
    let Generators { mut p, mut m } = reduced_field_generators(&point.field, rows, st);
    for j in 0..point.particles.len() {
        let q = &st.x[j];
        let pu = flip(&st.p[j]);
        let energy = reduced_energy3(point, st, j);
        for a in 1..4 {
            p[a] = p[a].clone() - pu[a].clone();
        }
        p[0] = p[0].clone() + energy.clone();
        for a in 0..4 {
            for b in 0..4 {
                if a == b {
                    continue;
                }
                let add = if a == 0 {
                    -(q[b].clone() * energy.clone())
                } else if b == 0 {
                    q[a].clone() * energy.clone()
                } else {
                    q[a].clone() * pu[b].clone() - q[b].clone() * pu[a].clone()
                };
                m[a][b] = m[a][b].clone() + add;
            }
        }
    }
    Generators { p, m }
}

pub fn generators_reduced3d(point: &ReducedPoint) -> GeneratorSet {
    let rows = point.field.derivative_rows();
    generators_reduced3d_generic(point, &rows, &point.state_values()).values(Provenance::InstantReduced3d)
}

pub fn reduced_jets(point: &ReducedPoint) -> GeneratorJets {
    let rows = point.field.derivative_rows();
    let n = point.layout().dim();
    let comps = generators_reduced3d_generic(point, &rows, &point.state_jets()).components();
    GeneratorJets { values: comps.iter().map(|c| c.v).collect(), grads: comps.iter().map(|c| c.grad(n)).collect() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReducedVar {
    A,
    ADag,
}

/// Bracket [X^mu_k, Y^nu_k'] (ordering [F, G] = {G, F}) of two field
/// variables of modes `k` and `kp`, evaluated through the Poisson structure.
pub fn reduced_bracket(point: &ReducedPoint, x: ReducedVar, mu: usize, k: usize, y: ReducedVar, nu: usize, kp: usize) -> C64 {
    let l = point.layout();
    let ps = point.poisson_structure();
    let grad = |v: ReducedVar, idx: usize, m: usize| -> Vec<C64> {
        let mut g = vec![ZERO; l.dim()];
        match v {
            ReducedVar::A => g[l.q(m, idx)] = C64::new(1.0, 0.0),
            // A+^n = g^{nn} A+_n
            ReducedVar::ADag => g[l.pm(m, idx)] = C64::new(METRIC[idx], 0.0),
        }
        g
    };
    ps.bracket(&grad(y, nu, kp), &grad(x, mu, k))
}

fn m_upper_grad(jets: &GeneratorJets, a: usize, b: usize) -> Vec<C64> {
    let n = jets.grads[0].len();
    if a == b {
        return vec![ZERO; n];
    }
    match M_PAIRS.iter().position(|&pr| pr == (a, b)) {
        Some(c) => jets.grads[4 + c].clone(),
        None => jets.grads[4 + M_PAIRS.iter().position(|&pr| pr == (b, a)).unwrap()].iter().map(|x| -x).collect(),
    }
}

pub fn verify_lie_algebra_reduced(point: &ReducedPoint, tol: f64) -> BracketReport {
    let jets = reduced_jets(point);
    let mut rep = BracketReport::from_parts("lie-algebra", "instant-reduced-3d", point.digest(), point.field.grid.as_ref().map(|g| g.spacing), generator_scale(&jets), true);
    fill_lie_algebra(&mut rep, &point.poisson_structure(), &jets, tol);
    rep
}

/// Instant-form world-line conditions: [q^c, P^b] = d^{cb} and the spatial
/// and boost [q, M] relations, plus the general [q, P] formula with the
/// kinetic momentum built from the reduced energy.
pub fn verify_currie_reduced(point: &ReducedPoint, tol: f64, tol_instant: f64) -> BracketReport {
    let jets = reduced_jets(point);
    let ps = point.poisson_structure();
    let l = point.layout();
    let n = l.dim();
    let st = point.state_values();
    let mut rep = BracketReport::from_parts("currie", "instant-reduced-3d", point.digest(), point.field.grid.as_ref().map(|g| g.spacing), 1.0, true);
    let p_up: Vec<Vec<C64>> = (0..4).map(|g| jets.grads[g].iter().map(|x| x * METRIC[g]).collect()).collect();
    for (j, pa) in point.particles.iter().enumerate() {
        let q = pa.x;
        let a = reduced_potential_generic(&point.field, &st, &st.x[j]);
        let energy = reduced_energy3(point, &st, j).re;
        let pi0 = energy - pa.charge * a[0].re;
        let pu = pa.p_upper();
        let pi: [f64; 4] = [pi0, pu[1] - pa.charge * a[1].re, pu[2] - pa.charge * a[2].re, pu[3] - pa.charge * a[3].re];
        let mut qp = [[ZERO; 4]; 4];
        for c in 1..4 {
            let mut e = vec![ZERO; n];
            e[l.x(j, c)] = C64::new(1.0, 0.0);
            for g in 0..4 {
                qp[c][g] = ps.bracket(&p_up[g], &e);
                let formula = -(if c == g { METRIC[c] } else { 0.0 }) + if g == 0 { pi[c] / pi0 } else { 0.0 };
                rep.push("[q,P]", vec![j, c, g], (qp[c][g] - formula).norm(), tol);
            }
            for (a, b) in M_PAIRS {
                let lhs = ps.bracket(&m_upper_grad(&jets, a, b), &e);
                let rhs = qp[c][b] * q[a] - qp[c][a] * q[b];
                rep.push("[q,M]", vec![j, c, a, b], (lhs - rhs).norm(), tol);
            }
            for b in 1..4 {
                let d = if b == c { 1.0 } else { 0.0 };
                rep.push("instant [q,P]", vec![j, c, b], (qp[c][b] - d).norm(), tol_instant);
            }
            for a in 1..4 {
                for b in 1..4 {
                    if a == b {
                        continue;
                    }
                    let lhs = ps.bracket(&m_upper_grad(&jets, a, b), &e);
                    let rhs = q[a] * if b == c { 1.0 } else { 0.0 } - q[b] * if a == c { 1.0 } else { 0.0 };
                    rep.push("instant [q,M]", vec![j, c, a, b], (lhs - rhs).norm(), tol_instant);
                }
                let lhs = ps.bracket(&m_upper_grad(&jets, a, 0), &e);
                rep.push("instant [q,M0]", vec![j, c, a], (lhs - qp[c][0] * q[a]).norm(), tol_instant);
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{AmplitudeKind, AmplitudeSpec, AmplitudeTarget};

    fn profile(scale: f64) -> GaussianProfile {
        GaussianProfile::from_spec(&AmplitudeSpec { kind: AmplitudeKind::Gaussian, scale, width: 1.0, shift: [0.0, 0.3, -0.2, 0.4], target: AmplitudeTarget::Both, seed: 3 })
    }

    fn particles(charge: f64) -> Vec<ParticleState> {
        vec![
            ParticleState::with_upper_momentum(1.0, charge, FourVector::new(0.0, 0.3, -0.2, 0.1), FourVector::new(0.0, 0.2, 0.1, -0.3)),
            ParticleState::with_upper_momentum(1.5, -charge, FourVector::new(0.0, -0.4, 0.6, 0.2), FourVector::new(0.0, -0.1, 0.0, 0.4)),
        ]
    }

    #[test]
    fn bracket_normalization() {
        let pt = ReducedPoint { particles: vec![], field: ReducedFieldVars::sampled(Grid3::new(2, 0.8), &profile(0.1)).unwrap() };
        let w = pt.field.modes[3].weight;
        let expect = C64::new(0.0, -1.0 / (4.0 * PI * PI * w));
        assert!((reduced_bracket(&pt, ReducedVar::A, 0, 3, ReducedVar::ADag, 0, 3) - expect).norm() < 1e-14);
        assert!((reduced_bracket(&pt, ReducedVar::A, 2, 3, ReducedVar::ADag, 2, 3) + expect).norm() < 1e-14);
        assert_eq!(reduced_bracket(&pt, ReducedVar::A, 1, 3, ReducedVar::ADag, 2, 3), ZERO);
        assert_eq!(reduced_bracket(&pt, ReducedVar::A, 1, 3, ReducedVar::ADag, 1, 4), ZERO);
        assert_eq!(reduced_bracket(&pt, ReducedVar::A, 1, 3, ReducedVar::A, 1, 3), ZERO);
        assert_eq!(reduced_bracket(&pt, ReducedVar::ADag, 0, 2, ReducedVar::ADag, 0, 2), ZERO);
    }

    #[test]
    fn particle_at_rest() {
        let pt = ReducedPoint {
            particles: vec![ParticleState::with_upper_momentum(2.0, 0.0, FourVector::default(), FourVector::default())],
            field: ReducedFieldVars::empty(),
        };
        let g = generators_reduced3d(&pt);
        assert!((g.p[0].re - 2.0).abs() < 1e-15);
        for a in 1..4 {
            assert_eq!(g.m[a][0], ZERO);
        }
    }

    #[test]
    fn paired_generators_are_real() {
        let pt = ReducedPoint { particles: particles(0.4), field: ReducedFieldVars::sampled(Grid3::new(4, 0.5), &profile(0.1)).unwrap() };
        let g = generators_reduced3d(&pt);
        assert!(g.p.iter().all(|c| c.im.abs() < 1e-12), "{:?}", g.p);
    }

    #[test]
    fn free_closure_and_currie() {
        let pt = ReducedPoint { particles: particles(0.0), field: ReducedFieldVars::empty() };
        let r = verify_lie_algebra_reduced(&pt, 1e-12);
        assert!(r.pass, "{}", r.max_residual);
        let c = verify_currie_reduced(&pt, 1e-12, 1e-12);
        assert!(c.pass, "{}", c.max_residual);
    }

    #[test]
    fn translations_close_with_coupling() {
        let pt = ReducedPoint { particles: particles(0.5), field: ReducedFieldVars::sampled(Grid3::new(2, 0.8), &profile(0.1)).unwrap() };
        let r = verify_lie_algebra_reduced(&pt, 1e-6);
        let pp = r.entries.iter().filter(|e| e.identity == "[P,P]").map(|e| e.residual).fold(0.0, f64::max);
        assert!(pp < 1e-12, "{pp}");
    }
}
