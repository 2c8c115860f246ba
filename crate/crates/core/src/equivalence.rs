//! Run-level checks: conserved combinations in a moving frame, agreement of
//! world lines integrated under different forms of dynamics, and the
//! strong-equation reconciliation of the light-cone and hyperboloid forms.

use crate::brackets::{point_digest, BracketReport};
use crate::dynamics::{integrate_covariant, invariant_mode_amplitude, interpolate, Gauge, IntegratorSettings, Trajectory};
use crate::field_sector::fit_order;
use crate::form::FormOfDynamics;
use crate::frame::{canonical_map_forward, surface_intersection_tau};
use crate::generators::generators_general;
use crate::oracle::oracle_lorentz_force;
use crate::phase::{ParticleState, PhaseSpacePoint};
use crate::tensors::{lower, FourVector, FramePath};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// a^b_a P_b and a^m_a a^n_b (M_mn + z_m P_n - z_n P_m) from moving-frame
/// generators at one parameter value.
pub fn conserved_combinations(point: &PhaseSpacePoint, form: &FormOfDynamics, frame: &FramePath, tau: f64) -> Result<([f64; 4], [[f64; 4]; 4])> {
    let (a, z) = (frame.a(tau), frame.z(tau));
    let tp = canonical_map_forward(point, &a, &z);
    let g = generators_general(&tp, form)?;
    let zl = lower(&z);
    let p = |n: usize| g.p[n].re;
    let inner = |m: usize, n: usize| g.m_lower(m, n).re + zl[m] * p(n) - zl[n] * p(m);
    let c1 = std::array::from_fn(|al| (0..4).map(|b| a.0[b][al] * p(b)).sum());
    let c2 = std::array::from_fn(|al| {
        std::array::from_fn(|be| {
            let mut s = 0.0;
            for m in 0..4 {
                for n in 0..4 {
                    s += a.0[m][al] * a.0[n][be] * inner(m, n);
                }
            }
            s
        })
    });
    Ok((c1, c2))
}

/// Integrates under the form gauge in the given frame and records the drift
/// of both conserved combinations per unit tau.
pub fn conservation_check(initial: &PhaseSpacePoint, form: &FormOfDynamics, frame: &FramePath, settings: &IntegratorSettings, tol: f64) -> Result<(BracketReport, Trajectory)> {
    let traj = integrate_covariant(initial, &Gauge::Form { form: form.clone(), frame: frame.clone() }, settings)?;
    let span = settings.tau_span[1] - settings.tau_span[0];
    let (t0, p0) = &traj.samples[0];
    let (c1_0, c2_0) = conserved_combinations(p0, form, frame, *t0)?;
    let (mut d1, mut d2) = ([0.0f64; 4], [[0.0f64; 4]; 4]);
    for (t, pt) in &traj.samples {
        let (c1, c2) = conserved_combinations(pt, form, frame, *t)?;
        for al in 0..4 {
            d1[al] = d1[al].max((c1[al] - c1_0[al]).abs() / span);
            for be in 0..4 {
                d2[al][be] = d2[al][be].max((c2[al][be] - c2_0[al][be]).abs() / span);
            }
        }
    }
    let mut rep = BracketReport::from_parts("conservation", form.name(), point_digest(initial), initial.field.grid.as_ref().map(|g| g.spacing), 1.0, true);
    for (al, d) in d1.iter().enumerate() {
        rep.push("a P drift per tau", vec![al], *d, tol);
    }
    for al in 0..4 {
        for be in (al + 1)..4 {
            rep.push("a a (M + zP - zP) drift per tau", vec![al, be], d2[al][be], tol);
        }
    }
    Ok((rep, traj))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Largest position or momentum difference between the Hamiltonian flow
    /// and the direct Lorentz-force integration.
    pub max_deviation: f64,
    pub constraint_drift: f64,
    /// Largest change of the invariant amplitudes y_k + P_{-k}.
    pub invariant_drift: f64,
    pub pass: bool,
}

/// Hamiltonian flow in proper-time gauge against the Lorentz-force oracle.
pub fn oracle_comparison(initial: &PhaseSpacePoint, settings: &IntegratorSettings, tol_dev: f64, tol_drift: f64) -> Result<OracleReport> {
    let ham = integrate_covariant(initial, &Gauge::ProperTime, settings)?;
    let ora = oracle_lorentz_force(initial, settings)?;
    let mut dev: f64 = 0.0;
    for ((_, a), (_, b)) in ham.samples.iter().zip(&ora.samples) {
        for (pa, pb) in a.particles.iter().zip(&b.particles) {
            dev = dev.max((pa.x - pb.x).norm_inf()).max((pa.p - pb.p).norm_inf());
        }
    }
    let mut inv: f64 = 0.0;
    let p0 = &ham.samples[0].1;
    for m in 0..p0.field.len() {
        if p0.field.mirror_of(m).is_none() {
            continue;
        }
        let q0 = invariant_mode_amplitude(p0, m)?;
        for (_, p) in &ham.samples {
            let q = invariant_mode_amplitude(p, m)?;
            for mu in 0..4 {
                inv = inv.max((q[mu] - q0[mu]).norm());
            }
        }
    }
    let drift = ham.max_constraint_drift;
    let pass = dev <= tol_dev && drift <= tol_drift && inv <= tol_drift;
    Ok(OracleReport { max_deviation: dev, constraint_drift: drift, invariant_drift: inv, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Instant leaves x^0 = -s used for the comparison.
    pub leaves: Vec<f64>,
    /// Apex time offset of the light-cone family.
    pub apex: f64,
    pub max_deviation: f64,
    /// Largest change of the field variables along the instant run.
    pub field_drift: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn momentum_line(traj: &Trajectory, j: usize) -> Vec<(f64, FourVector)> {
    traj.samples.iter().map(|(t, p)| (*t, p.particles[j].p)).collect()
}

fn field_drift(traj: &Trajectory) -> f64 {
    let f0 = &traj.samples[0].1.field;
    let mut d: f64 = 0.0;
    for (_, p) in &traj.samples {
        for (a, b) in p.field.modes.iter().zip(&f0.modes) {
            for mu in 0..4 {
                d = d.max((a.q[mu] - b.q[mu]).norm()).max((a.p[mu] - b.p[mu]).norm());
            }
        }
    }
    d
}

/// Position where a sampled world line meets the instant leaf x^0 = -s.
fn on_instant_leaf(line: &[(f64, FourVector)], s: f64) -> Result<FourVector> {
    let clock = FramePath::instant_clock();
    let sig = surface_intersection_tau(line, &FormOfDynamics::instant(), &clock, s, f64::NEG_INFINITY)?;
    interpolate(line, sig)
}

/// Integrates one scenario under the instant form (leaves x^0 = -tau) and
/// under the light-cone form (future cones of the apex (-c - tau, 0)) and
/// compares both world lines on common instant leaves. The light-cone run
/// starts from the instant run's crossing of its first cone.
pub fn form_equivalence(initial: &PhaseSpacePoint, step: f64, n_leaves: usize, tol: f64) -> Result<EquivalenceReport> {
    let instant = FormOfDynamics::instant();
    let clock = FramePath::instant_clock();
    let radius = initial.particles.iter().map(|p| p.x.spatial().iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let apex = radius + 0.25;
    let cone = FramePath { z0: FourVector::new(-apex, 0.0, 0.0, 0.0), zdot: FourVector::new(-1.0, 0.0, 0.0, 0.0), ..FramePath::static_frame() };
    let lightcone = FormOfDynamics::lightcone();

    let run_a = IntegratorSettings { step, tau_span: [0.0, 2.0], ..IntegratorSettings::default() };
    let a = integrate_covariant(initial, &Gauge::Form { form: instant.clone(), frame: clock }, &run_a)?;

    let mut start = initial.clone();
    let mut s_first: f64 = 0.0;
    for j in 0..initial.particles.len() {
        let line = a.world_line(j);
        let s = surface_intersection_tau(&line, &lightcone, &cone, 0.0, 0.0)?;
        s_first = s_first.max(s);
        let pa = &initial.particles[j];
        start.particles[j] = ParticleState { x: interpolate(&line, s)?, p: interpolate(&momentum_line(&a, j), s)?, ..pa.clone() };
    }
    let run_b = IntegratorSettings { step, tau_span: [0.0, 1.5], ..IntegratorSettings::default() };
    let b = integrate_covariant(&start, &Gauge::Form { form: lightcone, frame: cone }, &run_b)?;

    let (lo, hi) = (s_first + 0.05, s_first + 0.8);
    if hi > run_a.tau_span[1] {
        return Err(Error::Verification("instant run too short for the comparison window".into()));
    }
    let leaves: Vec<f64> = (0..n_leaves.max(1)).map(|i| lo + (hi - lo) * i as f64 / (n_leaves.max(2) - 1) as f64).collect();
    let mut dev: f64 = 0.0;
    for &s in &leaves {
        for j in 0..initial.particles.len() {
            let xa = on_instant_leaf(&a.world_line(j), s)?;
            let xb = on_instant_leaf(&b.world_line(j), s)?;
            dev = dev.max((xa - xb).norm_inf());
        }
    }
    let drift = field_drift(&a).max(field_drift(&b));
    Ok(EquivalenceReport { leaves, apex, max_deviation: dev, field_drift: drift, tolerance: tol, pass: dev <= tol })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongEquationReport {
    pub residuals: Vec<f64>,
    pub values: Vec<f64>,
    pub exponent: f64,
    pub r_squared: f64,
    /// Largest generator difference between light-cone and hyperboloid forms
    /// at on-shell points.
    pub form_difference: f64,
    pub pass: bool,
}

/// Log-log fit of the strong-equation quantity against the mass-shell
/// residual, plus on-shell agreement of light-cone and hyperboloid generators.
pub fn strong_equation_scaling(particle: &ParticleState, a: f64, points: &[PhaseSpacePoint], tol_exponent: f64, tol_generators: f64) -> Result<StrongEquationReport> {
    let residuals: Vec<f64> = (0..13).map(|i| 10f64.powf(-4.0 + 3.0 * i as f64 / 12.0)).collect();
    let mut values = Vec::with_capacity(residuals.len());
    for &eps in &residuals {
        // raise p^0 so that p.p - m^2 = eps
        let pu = particle.p_upper();
        let sp: f64 = (1..4).map(|i| pu[i] * pu[i]).sum();
        let p0 = (particle.mass * particle.mass + sp + eps).sqrt();
        let pl = lower(&FourVector::new(p0, pu[1], pu[2], pu[3]));
        values.push(crate::generators::strong_equation_value(&particle.x, &pl, particle.mass, a)?);
    }
    let exponent = fit_order(&residuals, &values);
    let (lx, ly): (Vec<f64>, Vec<f64>) = residuals.iter().zip(&values).map(|(x, y)| (x.ln(), y.ln())).unzip();
    let r_squared = r_squared(&lx, &ly);
    let (lc, hy) = (FormOfDynamics::lightcone(), FormOfDynamics::hyperboloid(a));
    let mut diff: f64 = 0.0;
    for p in points {
        let (g1, g2) = (generators_general(p, &lc)?, generators_general(p, &hy)?);
        diff = diff.max(g1.max_diff(&g2));
    }
    let pass = (exponent - 2.0).abs() <= tol_exponent && r_squared >= 0.999 && diff <= tol_generators;
    Ok(StrongEquationReport { residuals, values, exponent, r_squared, form_difference: diff, pass })
}

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::FormKind;
    use crate::scenario::Scenario;

    #[test]
    fn static_frame_free_particles_conserve_exactly() {
        let mut s = Scenario::two_charges(FormKind::Instant);
        s.lattice = None;
        s.frame = FramePath::instant_clock();
        s.integrator.tau_span = [0.0, 0.5];
        let pt = s.initial_point().unwrap();
        let (rep, _) = conservation_check(&pt, &FormOfDynamics::instant(), &s.frame, &s.integrator, 1e-12).unwrap();
        assert!(rep.pass, "{}", rep.max_residual);
    }

    fn rotating(s: &mut Scenario) -> FramePath {
        let mut frame = FramePath::rotating(3, 0.7);
        frame.zdot = FourVector::new(-1.0, 0.1, 0.0, 0.0);
        s.frame = frame.clone();
        s.integrator.tau_span = [0.0, 0.5];
        s.integrator.step = 1.0 / 64.0;
        frame
    }

    #[test]
    fn rotating_frame_conservation_particles() {
        let mut s = Scenario::two_charges(FormKind::Hyperboloid { a: 1.0 });
        s.lattice = None;
        let frame = rotating(&mut s);
        let pt = s.initial_point().unwrap();
        let (rep, _) = conservation_check(&pt, &s.form_of_dynamics().unwrap(), &frame, &s.integrator, 1e-10).unwrap();
        assert!(rep.pass, "{}", rep.max_residual);
    }

    #[test]
    fn rotating_frame_conservation_with_lattice() {
        // momentum is exact; the angular tensor carries the lattice Lorentz error
        let mut s = Scenario::two_charges(FormKind::Hyperboloid { a: 1.0 });
        let frame = rotating(&mut s);
        let pt = s.initial_point().unwrap();
        let (rep, _) = conservation_check(&pt, &s.form_of_dynamics().unwrap(), &frame, &s.integrator, 1e-6).unwrap();
        for e in &rep.entries {
            if e.indices.len() == 1 {
                assert!(e.pass, "{e:?}");
            } else {
                assert!(e.residual < 5e-2, "{e:?}");
            }
        }
    }

    #[test]
    fn translated_field_generators_follow_particle_convention() {
        use crate::tensors::LorentzMatrix;
        let mut s = Scenario::two_charges(FormKind::Instant);
        s.particles.clear();
        let l = s.lattice.as_mut().unwrap();
        l.dims = [6; 4];
        l.spacing = 0.6;
        l.amplitude.width = 0.4;
        let pt = s.initial_point().unwrap();
        let f = FormOfDynamics::instant();
        let g0 = generators_general(&pt, &f).unwrap();
        let z = FourVector::new(0.5, 0.2, -0.1, 0.3);
        let g1 = generators_general(&canonical_map_forward(&pt, &LorentzMatrix::identity(), &z), &f).unwrap();
        let zl = lower(&z);
        let (mut same, mut flipped) = (0.0f64, 0.0f64);
        for a in 0..4 {
            for b in 0..4 {
                let zp = g1.p[b] * zl[a] - g1.p[a] * zl[b];
                same = same.max((g1.m_lower(a, b) + zp - g0.m_lower(a, b)).norm());
                flipped = flipped.max((g1.m_lower(a, b) - zp - g0.m_lower(a, b)).norm());
            }
        }
        assert!(same < 0.1 * flipped, "{same} vs {flipped}");
    }

    #[test]
    fn instant_and_lightcone_world_lines_agree() {
        let pt = Scenario::two_charges(FormKind::Instant).initial_point().unwrap();
        let r = form_equivalence(&pt, 1.0 / 128.0, 6, 1e-5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn oracle_matches_two_charges() {
        let pt = Scenario::two_charges(FormKind::Instant).initial_point().unwrap();
        let r = oracle_comparison(&pt, &IntegratorSettings { step: 1.0 / 64.0, ..Default::default() }, 1e-6, 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn strong_equation_is_quadratic() {
        let pt = Scenario::two_charges(FormKind::Lightcone).initial_point().unwrap();
        let p = ParticleState { x: FourVector::new(1.3, 0.4, -0.2, 0.1), ..pt.particles[0].clone() };
        let r = strong_equation_scaling(&p, 1.0, &[pt], 0.05, 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
        let zero = strong_equation_scaling(&p, 0.0, &[], 0.05, 1e-10).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }
}
