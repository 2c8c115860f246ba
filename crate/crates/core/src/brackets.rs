//! Poisson-bracket engine over the flattened phase space, and the closure and
//! world-line verification suites built on it.
//!
//! The engine computes the standard bracket {F, G} = dF/dq dG/dp - dF/dp dG/dq.
//! The generator identities are stated in the opposite ordering,
//! [F, G] = {G, F}, and are checked in that convention.

use crate::form::{FormKind, FormOfDynamics};
use crate::generators::{
    generators_general_generic, generators_instant_reduced_generic, Generators, M_PAIRS,
};
use crate::phase::{kinetic_momentum, PhaseSpacePoint, PoissonStructure};
use crate::scalar::{Jet, Scalar, C64, ZERO};
use crate::tensors::{raise, METRIC};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorKind {
    General(FormOfDynamics),
    InstantReduced,
}

impl GeneratorKind {
    pub fn label(&self) -> String {
        match self {
            GeneratorKind::General(f) => f.name().to_string(),
            GeneratorKind::InstantReduced => "instant-reduced".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    AutoDiff,
    FiniteDifference,
}

/// Values and gradients of the ten generators, in the order of
/// [`Generators::components`].
#[derive(Clone, Debug)]
pub struct GeneratorJets {
    pub values: Vec<C64>,
    pub grads: Vec<Vec<C64>>,
}

fn eval_generic<S: Scalar>(point: &PhaseSpacePoint, kind: &GeneratorKind, st: &crate::phase::CanonState<S>) -> Result<Generators<S>> {
    let dop = point.field.derivative_operator();
    match kind {
        GeneratorKind::General(f) => generators_general_generic(point, f, &dop, st),
        GeneratorKind::InstantReduced => Ok(generators_instant_reduced_generic(point, &dop, st)),
    }
}

pub fn generator_jets(point: &PhaseSpacePoint, kind: &GeneratorKind, engine: Engine) -> Result<GeneratorJets> {
    let n = point.layout().dim();
    match engine {
        Engine::AutoDiff => {
            let g = eval_generic(point, kind, &point.state_jets())?;
            let comps = g.components();
            Ok(GeneratorJets { values: comps.iter().map(|c| c.v).collect(), grads: comps.iter().map(|c| c.grad(n)).collect() })
        }
        Engine::FiniteDifference => {
            let z0 = point.coordinates();
            let f = |z: &[C64]| -> Result<Vec<C64>> {
                let p = point.with_coordinates(z);
                // particle slots are real; perturbations along them stay real
                Ok(eval_generic(&p, kind, &p.state_values())?.components())
            };
            let values = f(&z0)?;
            let mut grads = vec![vec![ZERO; n]; values.len()];
            for i in 0..n {
                let h = 1e-5 * z0[i].norm().max(1.0);
                let central = |h: f64| -> Result<Vec<C64>> {
                    let (mut zp, mut zm) = (z0.clone(), z0.clone());
                    zp[i] += h;
                    zm[i] -= h;
                    let (fp, fm) = (f(&zp)?, f(&zm)?);
                    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
                };
                let (d1, d2) = (central(h)?, central(0.5 * h)?);
                for c in 0..values.len() {
                    let d = (d2[c] * 4.0 - d1[c]) / 3.0;
                    if !d.re.is_finite() || !d.im.is_finite() {
                        return Err(Error::Verification(format!("non-finite derivative in slot {i}")));
                    }
                    grads[c][i] = d;
                }
            }
            Ok(GeneratorJets { values, grads })
        }
    }
}

/// Standard bracket of two scalar functionals given as Jet-valued closures.
pub fn poisson_bracket(point: &PhaseSpacePoint, f: impl Fn(&crate::phase::CanonState<Jet>) -> Jet, g: impl Fn(&crate::phase::CanonState<Jet>) -> Jet) -> C64 {
    let st = point.state_jets();
    let n = point.layout().dim();
    point.poisson_structure().bracket(&f(&st).grad(n), &g(&st).grad(n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity: String,
    pub indices: Vec<usize>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub name: String,
    pub generator_kind: String,
    pub point_digest: String,
    pub lattice_spacing: Option<f64>,
    pub on_shell: bool,
    /// Normalization applied to residuals (1 for absolute checks).
    pub scale: f64,
    pub entries: Vec<IdentityResidual>,
    pub max_residual: f64,
    pub pass: bool,
}

impl BracketReport {
    fn new(name: &str, kind: &str, point: &PhaseSpacePoint, scale: f64, on_shell: bool) -> Self {
        Self::from_parts(name, kind, point_digest(point), point.field.grid.as_ref().map(|g| g.spacing), scale, on_shell)
    }

    pub fn from_parts(name: &str, kind: &str, digest: String, lattice_spacing: Option<f64>, scale: f64, on_shell: bool) -> Self {
        BracketReport {
            name: name.into(),
            generator_kind: kind.into(),
            point_digest: digest,
            lattice_spacing,
            on_shell,
            scale,
            entries: Vec::new(),
            max_residual: 0.0,
            pass: true,
        }
    }

    pub fn push(&mut self, identity: &str, indices: Vec<usize>, residual: f64, tolerance: f64) {
        let pass = residual <= tolerance && residual.is_finite();
        self.max_residual = self.max_residual.max(residual);
        // off-shell residuals are recorded but never fail a report
        self.pass &= pass || !self.on_shell;
        self.entries.push(IdentityResidual { identity: identity.into(), indices, residual, tolerance, pass });
    }
}

pub fn point_digest(point: &PhaseSpacePoint) -> String {
    let bytes = serde_json::to_vec(point).expect("phase point serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Largest constraint violation (mass shell and g-surface) at the point.
pub fn shell_violation(point: &PhaseSpacePoint, form: &FormOfDynamics) -> f64 {
    (0..point.particles.len())
        .map(|j| crate::phase::constraint_residual(point, j).abs().max(form.g(&point.particles[j].x).abs()))
        .fold(0.0, f64::max)
}

struct Algebra {
    p: [C64; 4],
    m_lo: [[C64; 4]; 4],
    dp: Vec<Vec<C64>>,
    dm_lo: Vec<Vec<Vec<C64>>>,
}

fn algebra(j: &GeneratorJets) -> Algebra {
    let n = j.grads[0].len();
    let mut m_lo = [[ZERO; 4]; 4];
    let mut dm_lo = vec![vec![vec![ZERO; n]; 4]; 4];
    for (c, (a, b)) in M_PAIRS.iter().enumerate() {
        let s = METRIC[*a] * METRIC[*b];
        m_lo[*a][*b] = j.values[4 + c] * s;
        m_lo[*b][*a] = -j.values[4 + c] * s;
        dm_lo[*a][*b] = j.grads[4 + c].iter().map(|x| x * s).collect();
        dm_lo[*b][*a] = j.grads[4 + c].iter().map(|x| -x * s).collect();
    }
    Algebra { p: std::array::from_fn(|i| j.values[i]), m_lo, dp: j.grads[..4].to_vec(), dm_lo }
}

/// The 45 independent closure identities at one point. Residuals are divided
/// by the largest generator magnitude.
pub fn verify_lie_algebra(point: &PhaseSpacePoint, kind: &GeneratorKind, engine: Engine, tol: f64, on_shell: bool) -> Result<BracketReport> {
    let jets = generator_jets(point, kind, engine)?;
    let ps = point.poisson_structure();
    lie_algebra_report(point, &ps, &jets, &kind.label(), tol, on_shell)
}

/// Closure suite for any generator gradients and Poisson structure.
pub fn lie_algebra_report(
    point: &PhaseSpacePoint,
    ps: &PoissonStructure,
    jets: &GeneratorJets,
    label: &str,
    tol: f64,
    on_shell: bool,
) -> Result<BracketReport> {
    let scale = generator_scale(jets);
    let mut rep = BracketReport::new("lie-algebra", label, point, scale, on_shell);
    fill_lie_algebra(&mut rep, ps, jets, tol);
    Ok(rep)
}

/// Largest generator magnitude, used to normalize closure residuals.
pub fn generator_scale(jets: &GeneratorJets) -> f64 {
    jets.values.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

/// Appends the 45 closure identities, normalized by `rep.scale`.
pub fn fill_lie_algebra(rep: &mut BracketReport, ps: &PoissonStructure, jets: &GeneratorJets, tol: f64) {
    let al = algebra(jets);
    let scale = rep.scale;
    let g = |a: usize, b: usize| if a == b { METRIC[a] } else { 0.0 };
    // ordering: [F, G] = {G, F}
    let br = |f: &[C64], h: &[C64]| ps.bracket(h, f);
    for mu in 0..4 {
        for nu in (mu + 1)..4 {
            let r = br(&al.dp[mu], &al.dp[nu]).norm() / scale;
            rep.push("[P,P]", vec![mu, nu], r, tol);
        }
    }
    for (a, b) in M_PAIRS {
        for mu in 0..4 {
            let lhs = br(&al.dm_lo[a][b], &al.dp[mu]);
            let rhs = al.p[a] * g(b, mu) - al.p[b] * g(a, mu);
            rep.push("[M,P]", vec![a, b, mu], (lhs - rhs).norm() / scale, tol);
        }
    }
    for (i, (a, b)) in M_PAIRS.iter().copied().enumerate() {
        for (mu, nu) in M_PAIRS.iter().copied().skip(i + 1) {
            let lhs = br(&al.dm_lo[a][b], &al.dm_lo[mu][nu]);
            let m = &al.m_lo;
            let rhs = m[b][mu] * g(a, nu) + m[mu][a] * g(b, nu) + m[nu][b] * g(a, mu) + m[a][nu] * g(b, mu);
            rep.push("[M,M]", vec![a, b, mu, nu], (lhs - rhs).norm() / scale, tol);
        }
    }
}

/// Right side of the general world-line condition [q^mu, P^gamma].
pub fn currie_formula(point: &PhaseSpacePoint, form: &FormOfDynamics, j: usize) -> [[f64; 4]; 4] {
    let pa = &point.particles[j];
    let pi = kinetic_momentum(pa, &point.field);
    let dg = form.grad_g(&pa.x);
    let dg_up = raise(&dg);
    let den: f64 = (0..4).map(|a| pi[a] * dg[a]).sum();
    std::array::from_fn(|mu| {
        std::array::from_fn(|ga| {
            let gmg = if mu == ga { METRIC[mu] } else { 0.0 };
            -gmg + dg_up[ga] * pi[mu] / den
        })
    })
}

/// World-line conditions per particle: the [q, P] formula, the [q, M]
/// contraction with numeric [q, P], the same contraction with the formula,
/// and for the instant form the spatial specializations.
pub fn verify_currie(point: &PhaseSpacePoint, kind: &GeneratorKind, form: &FormOfDynamics, engine: Engine, tol: f64, tol_instant: f64, on_shell: bool) -> Result<BracketReport> {
    let jets = generator_jets(point, kind, engine)?;
    let ps = point.poisson_structure();
    let l = point.layout();
    let n = l.dim();
    let mut rep = BracketReport::new("currie", &kind.label(), point, 1.0, on_shell);
    let p_up: Vec<Vec<C64>> = (0..4).map(|g| jets.grads[g].iter().map(|x| x * METRIC[g]).collect()).collect();
    let m_up = |a: usize, b: usize| -> Vec<C64> {
        if a == b {
            return vec![ZERO; n];
        }
        let (c, s) = match M_PAIRS.iter().position(|&pr| pr == (a, b)) {
            Some(c) => (c, 1.0),
            None => (M_PAIRS.iter().position(|&pr| pr == (b, a)).unwrap(), -1.0),
        };
        jets.grads[4 + c].iter().map(|x| x * s).collect()
    };
    let instant = matches!(form.kind, FormKind::Instant);
    for j in 0..point.particles.len() {
        let q = point.particles[j].x;
        let formula = currie_formula(point, form, j);
        let mut qp = [[ZERO; 4]; 4];
        for mu in 0..4 {
            let mut e = vec![ZERO; n];
            e[l.x(j, mu)] = C64::new(1.0, 0.0);
            for ga in 0..4 {
                qp[mu][ga] = ps.bracket(&p_up[ga], &e);
                rep.push("[q,P]", vec![j, mu, ga], (qp[mu][ga] - formula[mu][ga]).norm(), tol);
            }
            for (a, b) in M_PAIRS {
                let lhs = ps.bracket(&m_up(a, b), &e);
                let rhs_num = qp[mu][b] * q[a] - qp[mu][a] * q[b];
                let rhs_formula = formula[mu][b] * q[a] - formula[mu][a] * q[b];
                rep.push("[q,M]", vec![j, mu, a, b], (lhs - rhs_num).norm(), tol);
                rep.push("[q,M]-formula", vec![j, mu, a, b], (lhs - rhs_formula).norm(), tol);
            }
        }
        if instant {
            for c in 1..4 {
                for b in 1..4 {
                    let d = if b == c { 1.0 } else { 0.0 };
                    rep.push("instant [q,P]", vec![j, c, b], (qp[c][b] - d).norm(), tol_instant);
                }
                let mut e = vec![ZERO; n];
                e[l.x(j, c)] = C64::new(1.0, 0.0);
                for a in 1..4 {
                    for b in 1..4 {
                        if a == b {
                            continue;
                        }
                        let lhs = ps.bracket(&m_up(a, b), &e);
                        let dac = if a == c { 1.0 } else { 0.0 };
                        let dbc = if b == c { 1.0 } else { 0.0 };
                        let rhs = q[a] * dbc - q[b] * dac;
                        rep.push("instant [q,M]", vec![j, c, a, b], (lhs - rhs).norm(), tol_instant);
                    }
                    let lhs = ps.bracket(&m_up(a, 0), &e);
                    rep.push("instant [q,M0]", vec![j, c, a], (lhs - qp[c][0] * q[a]).norm(), tol_instant);
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{AmplitudeKind, AmplitudeSpec, AmplitudeTarget, GridSpec, ModeLattice};
    use crate::phase::{project_to_constraints, ParticleState};
    use crate::tensors::FourVector;

    fn free_point(form: &FormOfDynamics) -> PhaseSpacePoint {
        let pt = PhaseSpacePoint {
            particles: vec![
                ParticleState::with_upper_momentum(1.0, 0.0, FourVector::new(0.5, 0.3, -0.2, 0.1), FourVector::new(0.0, 0.2, 0.1, -0.3)),
                ParticleState::with_upper_momentum(2.0, 0.0, FourVector::new(1.5, -0.4, 0.6, 0.2), FourVector::new(0.0, -0.1, 0.0, 0.4)),
            ],
            field: ModeLattice::empty(),
        };
        project_to_constraints(&pt, form).unwrap()
    }

    fn forms() -> Vec<FormOfDynamics> {
        vec![FormOfDynamics::instant(), FormOfDynamics::lightcone(), FormOfDynamics::hyperboloid(1.0)]
    }

    #[test]
    fn canonical_pairs() {
        let pt = free_point(&FormOfDynamics::instant());
        let b = poisson_bracket(&pt, |s| s.x[0][1].clone(), |s| s.p[0][1].clone());
        assert_eq!(b, C64::new(1.0, 0.0));
    }

    #[test]
    fn bracket_of_quadratics() {
        // {x^1 x^2, p_1 p_2} = x^2 p_2 + x^1 p_1 (standard ordering)
        let pt = free_point(&FormOfDynamics::instant());
        let b = poisson_bracket(&pt, |s| s.x[0][1].clone() * s.x[0][2].clone(), |s| s.p[0][1].clone() * s.p[0][2].clone());
        let (x, p) = (pt.particles[0].x, pt.particles[0].p);
        assert!((b.re - (x[2] * p[2] + x[1] * p[1])).abs() < 1e-12);
    }

    #[test]
    fn free_closure_all_forms() {
        for f in forms() {
            let pt = free_point(&f);
            let rep = verify_lie_algebra(&pt, &GeneratorKind::General(f.clone()), Engine::AutoDiff, 1e-10, true).unwrap();
            assert_eq!(rep.entries.len(), 45);
            assert!(rep.pass, "{}: {:e}", f.name(), rep.max_residual);
        }
    }

    #[test]
    fn free_currie_all_forms() {
        for f in forms() {
            let pt = free_point(&f);
            let rep = verify_currie(&pt, &GeneratorKind::General(f.clone()), &f, Engine::AutoDiff, 1e-10, 1e-10, true).unwrap();
            assert!(rep.pass, "{}: {:?}", f.name(), rep.entries.iter().filter(|e| !e.pass).take(3).collect::<Vec<_>>());
        }
    }

    #[test]
    fn finite_difference_engine_agrees() {
        let f = FormOfDynamics::lightcone();
        let spec = AmplitudeSpec { kind: AmplitudeKind::Gaussian, scale: 0.05, target: AmplitudeTarget::Both, seed: 2, width: 1.0, shift: [0.0; 4] };
        let mut pt = free_point(&f);
        pt.field = ModeLattice::sampled(GridSpec::new([2, 2, 2, 2], 0.7), &spec, true);
        pt.particles[0].charge = 0.4;
        let pt = project_to_constraints(&pt, &f).unwrap();
        let kind = GeneratorKind::General(f);
        let a = generator_jets(&pt, &kind, Engine::AutoDiff).unwrap();
        let b = generator_jets(&pt, &kind, Engine::FiniteDifference).unwrap();
        for (ga, gb) in a.grads.iter().zip(&b.grads) {
            for (x, y) in ga.iter().zip(gb) {
                assert!((x - y).norm() < 1e-7 * (1.0 + x.norm()), "{x} vs {y}");
            }
        }
    }
}
