//! The ten Poincare generators in moving-frame variables, for an arbitrary
//! form of dynamics, plus the instant-form specializations.
//!
//! Everything is written against [`Scalar`] so the same code yields values
//! (with `C64`) and gradients for the bracket engine (with `Jet`).

use crate::form::FormOfDynamics;
use crate::lattice::DerivativeOperator;
use crate::phase::{potential_generic, CanonState, PhaseSpacePoint};
use crate::scalar::{flip, Scalar, Vec4, C64, I};
use crate::tensors::{lower, METRIC};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    GeneralForm,
    Instant,
    InstantReduced,
    InstantReduced3d,
}

/// P with a lower index, M with upper indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub p: [C64; 4],
    pub m: [[C64; 4]; 4],
    pub provenance: Provenance,
}

/// Generic counterpart of [`GeneratorSet`].
#[derive(Clone, Debug)]
pub struct Generators<S> {
    pub p: Vec4<S>,
    pub m: [Vec4<S>; 4],
}

impl<S: Scalar> Generators<S> {
    pub fn values(&self, provenance: Provenance) -> GeneratorSet {
        GeneratorSet {
            p: std::array::from_fn(|i| self.p[i].value()),
            m: std::array::from_fn(|a| std::array::from_fn(|b| self.m[a][b].value())),
            provenance,
        }
    }

    /// The ten independent components in a fixed order:
    /// P_0..P_3, then M^{01}, M^{02}, M^{03}, M^{12}, M^{13}, M^{23}.
    pub fn components(&self) -> Vec<S> {
        let mut v: Vec<S> = self.p.to_vec();
        for (a, b) in M_PAIRS {
            v.push(self.m[a][b].clone());
        }
        v
    }
}

pub const M_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl GeneratorSet {
    pub fn m_lower(&self, a: usize, b: usize) -> C64 {
        self.m[a][b] * METRIC[a] * METRIC[b]
    }

    pub fn p_upper(&self, a: usize) -> C64 {
        self.p[a] * METRIC[a]
    }

    pub fn max_abs(&self) -> f64 {
        self.p.iter().chain(self.m.iter().flatten()).map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                d = d.max((self.m[a][b] + self.m[b][a]).norm());
            }
        }
        d
    }

    pub fn max_diff(&self, o: &GeneratorSet) -> f64 {
        let dp = self.p.iter().zip(&o.p).map(|(a, b)| (a - b).norm());
        let dm = self.m.iter().flatten().zip(o.m.iter().flatten()).map(|(a, b)| (a - b).norm());
        dp.chain(dm).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.p.iter().chain(self.m.iter().flatten()).map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

fn antisym<S: Scalar>(f: impl Fn(usize, usize) -> S) -> [Vec4<S>; 4] {
    std::array::from_fn(|a| std::array::from_fn(|b| if a < b { f(a, b) } else if a > b { -f(b, a) } else { S::zero() }))
}

/// Field contributions: translation part (lower index) and Lorentz part
/// (upper indices), with the k-derivative acting on Q only.
pub fn field_generators<S: Scalar>(point: &PhaseSpacePoint, dop: &DerivativeOperator, st: &CanonState<S>) -> Generators<S> {
    let mut p: Vec4<S> = std::array::from_fn(|_| S::zero());
    let mut m: [Vec4<S>; 4] = std::array::from_fn(|_| std::array::from_fn(|_| S::zero()));
    for (n, mode) in point.field.modes.iter().enumerate() {
        let w = mode.weight;
        let kl = lower(&mode.k);
        let pq = crate::scalar::edot(&st.pm[n], &st.q[n]);
        for nu in 0..4 {
            p[nu] = p[nu].clone() + pq.scale(-I * w * kl[nu]);
        }
        let pu = flip(&st.pm[n]);
        // dq[alpha][gamma] = d Q^gamma / d k_alpha
        let dq: [Vec4<S>; 4] = std::array::from_fn(|al| std::array::from_fn(|ga| dop.apply(n, al, |j| st.q[j][ga].clone())));
        for (a, b) in M_PAIRS {
            let mut t = pu[b].clone() * st.q[n][a].clone() - pu[a].clone() * st.q[n][b].clone();
            for ga in 0..4 {
                let op = dq[a][ga].scale_re(mode.k[b]) - dq[b][ga].scale_re(mode.k[a]);
                t = t + st.pm[n][ga].clone() * op;
            }
            m[a][b] = m[a][b].clone() + t.scale_re(w);
        }
    }
    let m = antisym(|a, b| m[a][b].clone());
    Generators { p, m }
}

/// Kinetic momentum Pi^a = frak-p^a - e A^a(q) and the residual phi.
fn kinetic<S: Scalar>(point: &PhaseSpacePoint, st: &CanonState<S>, j: usize) -> (Vec4<S>, S) {
    let pa = &point.particles[j];
    let a = potential_generic(&point.field, st, &st.x[j]);
    let pup = flip(&st.p[j]);
    let pi: Vec4<S> = std::array::from_fn(|mu| pup[mu].clone() - a[mu].scale_re(pa.charge));
    let phi = crate::scalar::mdot(&pi, &pi) - S::real(pa.mass * pa.mass);
    (pi, phi)
}

/// General-form generators. Fails when a world line is tangent to the
/// g-surface (vanishing shared denominator).
pub fn generators_general_generic<S: Scalar>(
    point: &PhaseSpacePoint,
    form: &FormOfDynamics,
    dop: &DerivativeOperator,
    st: &CanonState<S>,
) -> Result<Generators<S>> {
    let Generators { mut p, mut m } = field_generators(point, dop, st);
    for j in 0..point.particles.len() {
        let q = &st.x[j];
        let pl = &st.p[j];
        let pu = flip(pl);
        let (pi, phi) = kinetic(point, st, j);
        let dg = form.grad_g_generic(q);
        let den = crate::scalar::edot(&pi, &dg).scale_re(2.0);
        if den.value().norm() < 1e-14 {
            return Err(Error::Verification(format!("world line of particle {j} grazes the {} surface", form.name())));
        }
        let cphi = phi / den;
        let dg_up = flip(&dg);
        for nu in 0..4 {
            p[nu] = p[nu].clone() + pl[nu].clone() - dg[nu].clone() * cphi.clone();
        }
        for (a, b) in M_PAIRS {
            let orb = q[a].clone() * pu[b].clone() - q[b].clone() * pu[a].clone();
            let cons = (q[a].clone() * dg_up[b].clone() - q[b].clone() * dg_up[a].clone()) * cphi.clone();
            m[a][b] = m[a][b].clone() + orb - cons;
        }
    }
    Ok(Generators { m: antisym(|a, b| m[a][b].clone()), p })
}

/// Instant-form generators as written for g = q^0, with frak-p^0 still a
/// canonical variable.
pub fn generators_instant_generic<S: Scalar>(point: &PhaseSpacePoint, dop: &DerivativeOperator, st: &CanonState<S>) -> Generators<S> {
    let Generators { mut p, mut m } = field_generators(point, dop, st);
    for j in 0..point.particles.len() {
        let q = &st.x[j];
        let pu = flip(&st.p[j]);
        let (pi, phi) = kinetic(point, st, j);
        let corr = phi / pi[0].scale_re(2.0);
        // spatial P^a raised back to lower index
        for a in 1..4 {
            p[a] = p[a].clone() - pu[a].clone();
        }
        p[0] = p[0].clone() + pu[0].clone() - corr.clone();
        for (a, b) in M_PAIRS {
            if a == 0 {
                // M^{0b} = -M^{b0}, M^{b0} = q^b frak-p^0 - q^b corr
                let mb0 = q[b].clone() * pu[0].clone() - q[b].clone() * corr.clone();
                m[0][b] = m[0][b].clone() - mb0;
            } else {
                m[a][b] = m[a][b].clone() + q[a].clone() * pu[b].clone() - q[b].clone() * pu[a].clone();
            }
        }
    }
    Generators { m: antisym(|a, b| m[a][b].clone()), p }
}

/// Instant-form generators after eliminating frak-p^0 with the positive-energy
/// root of the mass shell. They do not depend on the frak-p_0 slot.
pub fn generators_instant_reduced_generic<S: Scalar>(point: &PhaseSpacePoint, dop: &DerivativeOperator, st: &CanonState<S>) -> Generators<S> {
    let Generators { mut p, mut m } = field_generators(point, dop, st);
    for j in 0..point.particles.len() {
        let q = &st.x[j];
        let pu = flip(&st.p[j]);
        let energy = reduced_energy(point, st, j);
        for a in 1..4 {
            p[a] = p[a].clone() - pu[a].clone();
        }
        p[0] = p[0].clone() + energy.clone();
        for (a, b) in M_PAIRS {
            if a == 0 {
                m[0][b] = m[0][b].clone() - q[b].clone() * energy.clone();
            } else {
                m[a][b] = m[a][b].clone() + q[a].clone() * pu[b].clone() - q[b].clone() * pu[a].clone();
            }
        }
    }
    Generators { m: antisym(|a, b| m[a][b].clone()), p }
}

/// e A^0(q) + sqrt((p - e A)^2 + m^2) for particle j.
pub fn reduced_energy<S: Scalar>(point: &PhaseSpacePoint, st: &CanonState<S>, j: usize) -> S {
    let pa = &point.particles[j];
    let a = potential_generic(&point.field, st, &st.x[j]);
    let pu = flip(&st.p[j]);
    let mut s2 = S::real(pa.mass * pa.mass);
    for i in 1..4 {
        let d = pu[i].clone() - a[i].scale_re(pa.charge);
        s2 = s2 + d.clone() * d;
    }
    a[0].scale_re(pa.charge) + s2.sqrt()
}

pub fn generators_general(point: &PhaseSpacePoint, form: &FormOfDynamics) -> Result<GeneratorSet> {
    let dop = point.field.derivative_operator();
    Ok(generators_general_generic(point, form, &dop, &point.state_values())?.values(Provenance::GeneralForm))
}

pub fn generators_instant(point: &PhaseSpacePoint) -> GeneratorSet {
    let dop = point.field.derivative_operator();
    generators_instant_generic(point, &dop, &point.state_values()).values(Provenance::Instant)
}

pub fn generators_instant_reduced(point: &PhaseSpacePoint) -> GeneratorSet {
    let dop = point.field.derivative_operator();
    generators_instant_reduced_generic(point, &dop, &point.state_values()).values(Provenance::InstantReduced)
}

/// Largest entry of the constraint terms alone: the full generators minus
/// their orbital and field parts.
pub fn constraint_term_magnitude(point: &PhaseSpacePoint, form: &FormOfDynamics) -> Result<f64> {
    let full = generators_general(point, form)?;
    let dop = point.field.derivative_operator();
    let f = field_generators(point, &dop, &point.state_values());
    let (mut p, mut m) = (f.p, f.m);
    for pa in &point.particles {
        let pu = pa.p_upper();
        for nu in 0..4 {
            p[nu] += pa.p[nu];
        }
        for a in 0..4 {
            for b in 0..4 {
                m[a][b] += pa.x[a] * pu[b] - pa.x[b] * pu[a];
            }
        }
    }
    let orbital = GeneratorSet { p, m, provenance: Provenance::GeneralForm };
    Ok(full.max_diff(&orbital))
}

/// Strong-equation quantity {A^2 / (2 p.q) (p.p - m^2)}^2 for one free particle.
pub fn strong_equation_value(q: &crate::tensors::FourVector, p_lower: &crate::tensors::FourVector, mass: f64, a: f64) -> Result<f64> {
    let pq: f64 = (0..4).map(|i| p_lower[i] * q[i]).sum();
    if pq.abs() < 1e-14 {
        return Err(Error::Validation("degenerate p.q = 0".into()));
    }
    let pu = lower(p_lower);
    let pp = crate::tensors::minkowski_dot(&pu, &pu);
    Ok((a * a / (2.0 * pq) * (pp - mass * mass)).powi(2))
}
