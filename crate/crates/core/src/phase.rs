//! Mixed particle/field phase space.
//!
//! Canonical coordinates are flattened into one vector so that functionals can
//! be differentiated in a single forward pass. Particle `j` occupies slots
//! `8j..8j+8` (x^0..x^3 then p_0..p_3), field mode `m` the slots after all
//! particles (Q^0..Q^3 then P_0..P_3). Particle pairs have unit bracket;
//! a mode pair has bracket 1/w, the discrete stand-in for delta^4(k - k').

use crate::form::FormOfDynamics;
use crate::lattice::{inv_normalization, CVec4, ModeLattice, CZERO4};
use crate::scalar::{Jet, Scalar, Vec4, C64, I, ZERO};
use crate::tensors::{lower, minkowski_dot, FourVector, METRIC};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub mass: f64,
    pub charge: f64,
    /// Position x^mu.
    pub x: FourVector,
    /// Covariant momentum p_mu.
    pub p: FourVector,
}

impl ParticleState {
    /// Builds a particle from contravariant momentum components.
    pub fn with_upper_momentum(mass: f64, charge: f64, x: FourVector, p_up: FourVector) -> Self {
        ParticleState { mass, charge, x, p: lower(&p_up) }
    }

    pub fn p_upper(&self) -> FourVector {
        lower(&self.p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub particles: Vec<ParticleState>,
    pub field: ModeLattice,
}

/// A point expressed in moving-frame variables (q, frak-p, Q, P) over the
/// new-frame lattice. The layout is identical to an old-frame point.
pub type TransformedPoint = PhaseSpacePoint;

/// Index arithmetic for the flattened coordinate vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n_particles: usize,
    pub n_modes: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        8 * (self.n_particles + self.n_modes)
    }
    pub fn x(&self, j: usize, mu: usize) -> usize {
        8 * j + mu
    }
    pub fn p(&self, j: usize, mu: usize) -> usize {
        8 * j + 4 + mu
    }
    pub fn q(&self, m: usize, mu: usize) -> usize {
        8 * (self.n_particles + m) + mu
    }
    pub fn pm(&self, m: usize, mu: usize) -> usize {
        8 * (self.n_particles + m) + 4 + mu
    }
}

/// Canonical coordinates with generic scalar entries.
#[derive(Clone, Debug)]
pub struct CanonState<S> {
    pub x: Vec<Vec4<S>>,
    pub p: Vec<Vec4<S>>,
    pub q: Vec<Vec4<S>>,
    pub pm: Vec<Vec4<S>>,
}

/// Sparse constant Poisson tensor: {z_i, z_j} = c for each listed (i, j, c),
/// with the antisymmetric partner implied.
#[derive(Clone, Debug)]
pub struct PoissonStructure {
    pub dim: usize,
    pub pairs: Vec<(usize, usize, C64)>,
}

impl PoissonStructure {
    /// Standard bracket {F, G} = sum c (dF_i dG_j - dF_j dG_i).
    pub fn bracket(&self, df: &[C64], dg: &[C64]) -> C64 {
        let (zf, zg) = (df.is_empty(), dg.is_empty());
        if zf || zg {
            return ZERO;
        }
        self.pairs
            .iter()
            .fold(ZERO, |acc, &(i, j, c)| acc + c * (df[i] * dg[j] - df[j] * dg[i]))
    }
}

impl PhaseSpacePoint {
    pub fn layout(&self) -> Layout {
        Layout { n_particles: self.particles.len(), n_modes: self.field.len() }
    }

    pub fn poisson_structure(&self) -> PoissonStructure {
        let l = self.layout();
        let mut pairs = Vec::with_capacity(4 * (l.n_particles + l.n_modes));
        for j in 0..l.n_particles {
            for mu in 0..4 {
                pairs.push((l.x(j, mu), l.p(j, mu), C64::new(1.0, 0.0)));
            }
        }
        for (m, mode) in self.field.modes.iter().enumerate() {
            for mu in 0..4 {
                pairs.push((l.q(m, mu), l.pm(m, mu), C64::new(1.0 / mode.weight, 0.0)));
            }
        }
        PoissonStructure { dim: l.dim(), pairs }
    }

    pub fn coordinates(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.layout().dim());
        for pa in &self.particles {
            v.extend(pa.x.0.iter().map(|&r| C64::new(r, 0.0)));
            v.extend(pa.p.0.iter().map(|&r| C64::new(r, 0.0)));
        }
        for m in &self.field.modes {
            v.extend_from_slice(&m.q);
            v.extend_from_slice(&m.p);
        }
        v
    }

    /// Rebuilds a point from a flat coordinate vector; particle entries keep
    /// only their real parts.
    pub fn with_coordinates(&self, z: &[C64]) -> PhaseSpacePoint {
        let l = self.layout();
        let mut out = self.clone();
        for (j, pa) in out.particles.iter_mut().enumerate() {
            for mu in 0..4 {
                pa.x[mu] = z[l.x(j, mu)].re;
                pa.p[mu] = z[l.p(j, mu)].re;
            }
        }
        for (m, mode) in out.field.modes.iter_mut().enumerate() {
            for mu in 0..4 {
                mode.q[mu] = z[l.q(m, mu)];
                mode.p[mu] = z[l.pm(m, mu)];
            }
        }
        out
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

    pub fn is_finite(&self) -> bool {
        self.particles.iter().all(|p| p.x.is_finite() && p.p.is_finite() && p.mass.is_finite() && p.charge.is_finite())
            && self.field.modes.iter().all(|m| m.q.iter().chain(m.p.iter()).all(|c| c.re.is_finite() && c.im.is_finite()))
    }
}

/// exp(i k.x) for a real wavevector and generic position.
pub fn plane_wave<S: Scalar>(k: &FourVector, x: &Vec4<S>) -> S {
    let kx = x[0].scale_re(k[0]) - x[1].scale_re(k[1]) - x[2].scale_re(k[2]) - x[3].scale_re(k[3]);
    kx.scale(I).exp()
}

/// A^mu(x) = sum w N^{-1} (Q^mu e^{ik.x} + P^mu e^{-ik.x}) with generic
/// field variables (P stored with a lower index, raised here).
pub fn potential_generic<S: Scalar>(field: &ModeLattice, st: &CanonState<S>, x: &Vec4<S>) -> Vec4<S> {
    let mut acc: Vec4<S> = std::array::from_fn(|_| S::zero());
    for (m, mode) in field.modes.iter().enumerate() {
        let c = mode.weight * inv_normalization(&mode.k);
        let ep = plane_wave(&mode.k, x);
        let em = S::one() / ep.clone();
        for mu in 0..4 {
            let term = st.q[m][mu].clone() * ep.clone() + st.pm[m][mu].scale_re(METRIC[mu]) * em.clone();
            acc[mu] = acc[mu].clone() + term.scale_re(c);
        }
    }
    acc
}

/// Complex potential at a real point.
pub fn vector_potential(x: &FourVector, field: &ModeLattice) -> CVec4 {
    let mut acc = CZERO4;
    for mode in &field.modes {
        let c = mode.weight * inv_normalization(&mode.k);
        let ph = minkowski_dot(&mode.k, x);
        let (ep, em) = (C64::from_polar(1.0, ph), C64::from_polar(1.0, -ph));
        for mu in 0..4 {
            acc[mu] += (mode.q[mu] * ep + mode.p[mu] * METRIC[mu] * em) * c;
        }
    }
    acc
}

/// d_mu A^alpha at a real point, indexed [mu][alpha] (mu lower).
pub fn potential_gradient(x: &FourVector, field: &ModeLattice) -> [[C64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    for mode in &field.modes {
        let c = mode.weight * inv_normalization(&mode.k);
        let ph = minkowski_dot(&mode.k, x);
        let (ep, em) = (C64::from_polar(1.0, ph), C64::from_polar(1.0, -ph));
        let kl = lower(&mode.k);
        for mu in 0..4 {
            for al in 0..4 {
                out[mu][al] += I * kl[mu] * c * (mode.q[al] * ep - mode.p[al] * METRIC[al] * em);
            }
        }
    }
    out
}

pub fn real_part(v: &CVec4) -> FourVector {
    FourVector(v.map(|c| c.re))
}

/// Kinetic momentum Pi^alpha = p^alpha - e Re A^alpha(x).
pub fn kinetic_momentum(particle: &ParticleState, field: &ModeLattice) -> FourVector {
    let a = real_part(&vector_potential(&particle.x, field));
    particle.p_upper() - a * particle.charge
}

/// (p - eA).(p - eA) - m^2 using the real part of the potential.
pub fn constraint_residual(point: &PhaseSpacePoint, j: usize) -> f64 {
    let pa = &point.particles[j];
    let pi = kinetic_momentum(pa, &point.field);
    minkowski_dot(&pi, &pi) - pa.mass * pa.mass
}

/// Places every particle on the g-surface by moving along the time axis to
/// the nearest root, then solves the mass shell for the positive-energy p^0.
pub fn project_to_constraints(point: &PhaseSpacePoint, form: &FormOfDynamics) -> Result<PhaseSpacePoint> {
    let mut out = point.clone();
    for pa in out.particles.iter_mut() {
        pa.x = form.project_time(&pa.x)?;
        let a = real_part(&vector_potential(&pa.x, &point.field));
        let pu = pa.p_upper();
        let spatial: f64 = (1..4).map(|i| (pu[i] - pa.charge * a[i]).powi(2)).sum();
        let e2 = spatial + pa.mass * pa.mass;
        if !(e2 > 0.0) || !e2.is_finite() {
            return Err(Error::Validation("mass shell has no real positive-energy root".into()));
        }
        pa.p[0] = pa.charge * a[0] + e2.sqrt();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FieldMode, GridSpec};

    fn one_mode(q: CVec4, p: CVec4) -> ModeLattice {
        ModeLattice {
            modes: vec![FieldMode { k: FourVector::new(0.3, 0.5, -0.2, 0.1), weight: 0.7, q, p }],
            grid: None,
            paired: false,
        }
    }

    fn c(r: f64) -> C64 {
        C64::new(r, 0.0)
    }

    #[test]
    fn empty_lattice_potential_is_zero() {
        let a = vector_potential(&FourVector::new(1.0, 2.0, 3.0, 4.0), &ModeLattice::empty());
        assert_eq!(a, CZERO4);
    }

    #[test]
    fn single_mode_potential_at_origin() {
        let f = one_mode([c(1.0), ZERO, ZERO, ZERO], CZERO4);
        let a = vector_potential(&FourVector::default(), &f);
        let k = f.modes[0].k;
        let expect = 0.7 / (4.0 * std::f64::consts::PI.powi(3) * minkowski_dot(&k, &k).abs()).sqrt();
        assert!((a[0].re - expect).abs() < 1e-15 && a[0].im == 0.0);
        assert_eq!(&a[1..], &[ZERO; 3]);
    }

    #[test]
    fn potential_is_linear_in_coordinates() {
        let x = FourVector::new(0.2, -0.4, 1.1, 0.3);
        let q1 = [c(1.0), C64::new(0.0, 2.0), c(-0.5), c(0.25)];
        let q2 = [C64::new(0.3, -1.0), c(0.0), c(2.0), C64::new(0.0, 0.1)];
        let p = [c(0.1), c(0.2), c(0.3), c(0.4)];
        let sum: CVec4 = std::array::from_fn(|i| q1[i] + q2[i]);
        let a = vector_potential(&x, &one_mode(sum, p));
        let b1 = vector_potential(&x, &one_mode(q1, p));
        let b2 = vector_potential(&x, &one_mode(q2, CZERO4));
        for mu in 0..4 {
            assert!((a[mu] - b1[mu] - b2[mu]).norm() < 1e-15);
        }
    }

    #[test]
    fn generic_potential_matches_direct_evaluation() {
        let grid = GridSpec::new([2, 2, 2, 2], 0.6);
        let spec = crate::lattice::AmplitudeSpec {
            kind: crate::lattice::AmplitudeKind::Gaussian,
            scale: 0.5,
            target: crate::lattice::AmplitudeTarget::Both,
            seed: 9,
            ..Default::default()
        };
        let field = ModeLattice::sampled(grid, &spec, false);
        let pt = PhaseSpacePoint {
            particles: vec![ParticleState::with_upper_momentum(1.0, 0.5, FourVector::new(0.1, 0.2, -0.3, 0.4), FourVector::new(1.2, 0.1, 0.0, 0.0))],
            field,
        };
        let st = pt.state_values();
        let a1 = potential_generic(&pt.field, &st, &st.x[0]);
        let a2 = vector_potential(&pt.particles[0].x, &pt.field);
        for mu in 0..4 {
            assert!((a1[mu] - a2[mu]).norm() < 1e-14);
        }
    }

    #[test]
    fn free_residuals() {
        let mut pt = PhaseSpacePoint {
            particles: vec![ParticleState::with_upper_momentum(1.0, 0.0, FourVector::default(), FourVector::new(1.0, 0.0, 0.0, 0.0))],
            field: ModeLattice::empty(),
        };
        assert_eq!(constraint_residual(&pt, 0), 0.0);
        pt.particles[0] = ParticleState::with_upper_momentum(1.0, 0.0, FourVector::default(), FourVector::new(2.0, 0.5, 0.0, 0.0));
        assert!((constraint_residual(&pt, 0) - (4.0 - 0.25 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let f = FormOfDynamics::instant();
        let pt = PhaseSpacePoint {
            particles: vec![
                ParticleState::with_upper_momentum(1.0, 0.0, FourVector::new(0.3, 0.0, 0.0, 0.0), FourVector::default()),
                ParticleState::with_upper_momentum(4.0, 0.0, FourVector::default(), FourVector::new(0.0, 3.0, 0.0, 0.0)),
            ],
            field: ModeLattice::empty(),
        };
        let pr = project_to_constraints(&pt, &f).unwrap();
        assert_eq!(pr.particles[0].p[0], 1.0);
        assert_eq!(pr.particles[0].x[0], 0.0);
        assert_eq!(pr.particles[1].p[0], 5.0);
    }

    #[test]
    fn bracket_of_canonical_pair() {
        let pt = PhaseSpacePoint {
            particles: vec![ParticleState::with_upper_momentum(1.0, 0.0, FourVector::default(), FourVector::default())],
            field: one_mode(CZERO4, CZERO4),
        };
        let ps = pt.poisson_structure();
        let l = pt.layout();
        let unit = |i: usize| {
            let mut v = vec![ZERO; l.dim()];
            v[i] = c(1.0);
            v
        };
        assert_eq!(ps.bracket(&unit(l.x(0, 1)), &unit(l.p(0, 1))), c(1.0));
        assert_eq!(ps.bracket(&unit(l.p(0, 1)), &unit(l.x(0, 1))), c(-1.0));
        assert!((ps.bracket(&unit(l.q(0, 2)), &unit(l.pm(0, 2))) - c(1.0 / 0.7)).norm() < 1e-15);
        assert_eq!(ps.bracket(&unit(l.q(0, 2)), &unit(l.pm(0, 1))), ZERO);
    }
}
