//! Covariant equations of motion: Dirac Hamiltonian with per-particle
//! multipliers, its flow over particles and field modes, and a fixed-step
//! integrator with constraint monitoring.

use crate::form::FormOfDynamics;
use crate::lattice::{inv_normalization, CVec4};
use crate::phase::{constraint_residual, kinetic_momentum, potential_gradient, PhaseSpacePoint};
use crate::scalar::{C64, ZERO};
use crate::tensors::{lower, minkowski_dot, FourVector, FramePath, METRIC};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// v = [x'.x']^{1/2} / (2m), the proper-time normalization.
pub fn multiplier_covariant(xdot: &FourVector, m: f64) -> Result<f64> {
    let n = minkowski_dot(xdot, xdot);
    if !(n > 0.0) {
        return Err(Error::Validation(format!("velocity {:?} is not timelike", xdot.0)));
    }
    if !(m > 0.0) {
        return Err(Error::Validation("mass must be positive".into()));
    }
    Ok(n.sqrt() / (2.0 * m))
}

pub fn hamiltonian_dirac(point: &PhaseSpacePoint, v: &[f64]) -> f64 {
    v.iter().enumerate().map(|(j, vj)| vj * constraint_residual(point, j)).sum()
}

/// Phase-space tangent in the flat layout of [`PhaseSpacePoint::coordinates`].
pub fn hamiltonian_flow(point: &PhaseSpacePoint, v: &[f64]) -> Vec<C64> {
    let l = point.layout();
    let mut out = vec![ZERO; l.dim()];
    let mut xdots = Vec::with_capacity(l.n_particles);
    for (j, pa) in point.particles.iter().enumerate() {
        let pi = kinetic_momentum(pa, &point.field);
        let xdot = pi * (2.0 * v[j]);
        let grad = potential_gradient(&pa.x, &point.field);
        let pil = lower(&pi);
        for mu in 0..4 {
            out[l.x(j, mu)] = C64::new(xdot[mu], 0.0);
            let f: f64 = (0..4).map(|al| pil[al] * grad[mu][al].re).sum();
            out[l.p(j, mu)] = C64::new(2.0 * v[j] * pa.charge * f, 0.0);
        }
        xdots.push(xdot);
    }
    for (m, mode) in point.field.modes.iter().enumerate() {
        let ninv = inv_normalization(&mode.k);
        for (j, pa) in point.particles.iter().enumerate() {
            if pa.charge == 0.0 {
                continue;
            }
            let ph = minkowski_dot(&mode.k, &pa.x);
            let (ep, em) = (C64::from_polar(1.0, ph), C64::from_polar(1.0, -ph));
            for mu in 0..4 {
                out[l.q(m, mu)] -= em * (ninv * pa.charge * xdots[j][mu]);
                out[l.pm(m, mu)] += ep * (ninv * pa.charge * xdots[j][mu] * METRIC[mu]);
            }
        }
    }
    out
}

/// q_k = y_k + P^mu_{-k}.
pub fn invariant_mode_amplitude(point: &PhaseSpacePoint, m: usize) -> Result<CVec4> {
    let mirror = point
        .field
        .mirror_of(m)
        .ok_or_else(|| Error::Validation(format!("mode {m} has no mirror mode in the lattice")))?;
    let (y, p) = (point.field.modes[m].q, point.field.modes[mirror].p);
    Ok(std::array::from_fn(|mu| y[mu] + p[mu] * METRIC[mu]))
}

/// Strictly monotone parameter maps used for reparametrization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MonotoneMap {
    Affine { scale: f64, shift: f64 },
    /// tau + eps sin(freq tau)
    Sine { eps: f64, freq: f64 },
}

impl MonotoneMap {
    pub fn identity() -> Self {
        MonotoneMap::Affine { scale: 1.0, shift: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            MonotoneMap::Affine { scale, shift } => scale * t + shift,
            MonotoneMap::Sine { eps, freq } => t + eps * (freq * t).sin(),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            MonotoneMap::Affine { scale, .. } => scale,
            MonotoneMap::Sine { eps, freq } => 1.0 + eps * freq * (freq * t).cos(),
        }
    }

    /// Checks F' has a fixed sign over [t0, t1] on a dense sample.
    pub fn check_monotone(&self, t0: f64, t1: f64) -> Result<()> {
        let n = 1000;
        let s0 = self.deriv(t0).signum();
        for i in 0..=n {
            let t = t0 + (t1 - t0) * i as f64 / n as f64;
            let d = self.deriv(t);
            if d == 0.0 || d.signum() != s0 || !d.is_finite() {
                return Err(Error::Validation(format!("map is not strictly monotone near tau = {t}")));
            }
        }
        Ok(())
    }
}

/// How the multipliers are fixed along the run.
#[derive(Clone, Debug)]
pub enum Gauge {
    /// v = 1/(2m): the parameter is proper time.
    ProperTime,
    /// v = F'(tau)/(2m): world lines traced as x(F(tau)).
    Rate(MonotoneMap),
    /// Keeps g(a(tau) x - z(tau)) = 0 for every particle.
    Form { form: FormOfDynamics, frame: FramePath },
}

/// Multiplier preserving g(a x - z) = 0 in old-frame variables.
pub fn form_multiplier_old_frame(
    point: &PhaseSpacePoint,
    j: usize,
    form: &FormOfDynamics,
    frame: &FramePath,
    tau: f64,
) -> Result<f64> {
    let pa = &point.particles[j];
    let a = frame.a(tau);
    let adot = frame.a_dot(tau);
    let q = a.apply(&pa.x) - frame.z(tau);
    let grad = form.grad_g(&q);
    let drift = frame.z_dot(tau) - adot.apply(&pa.x);
    let api = a.apply(&kinetic_momentum(pa, &point.field));
    let num: f64 = (0..4).map(|al| grad[al] * drift[al]).sum();
    let den: f64 = 2.0 * (0..4).map(|al| grad[al] * api[al]).sum::<f64>();
    if den.abs() <= 1e-12 * (num.abs() + 1.0) || !den.is_finite() {
        return Err(Error::Integration(format!("world line of particle {j} grazes the {} surface", form.name())));
    }
    Ok(num / den)
}

pub fn multipliers(point: &PhaseSpacePoint, gauge: &Gauge, tau: f64) -> Result<Vec<f64>> {
    point
        .particles
        .iter()
        .enumerate()
        .map(|(j, pa)| match gauge {
            Gauge::ProperTime => Ok(0.5 / pa.mass),
            Gauge::Rate(f) => Ok(0.5 * f.deriv(tau) / pa.mass),
            Gauge::Form { form, frame } => form_multiplier_old_frame(point, j, form, frame, tau),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Dopri5,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    #[serde(default = "default_method")]
    pub method: Method,
    pub step: f64,
    pub tau_span: [f64; 2],
    #[serde(default = "default_drift")]
    pub drift_bound: f64,
    #[serde(default)]
    pub halving_check: bool,
}

fn default_method() -> Method {
    Method::Rk4
}

fn default_drift() -> f64 {
    1e-8
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings { method: Method::Rk4, step: 1.0 / 64.0, tau_span: [0.0, 1.0], drift_bound: 1e-8, halving_check: false }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let [t0, t1] = self.tau_span;
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Validation("integrator step must be positive".into()));
        }
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::Validation("tau_span must be increasing and finite".into()));
        }
        if !(self.drift_bound > 0.0) {
            return Err(Error::Validation("drift_bound must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps and the uniform step that exactly covers the span.
    pub fn grid(&self) -> (usize, f64) {
        let len = self.tau_span[1] - self.tau_span[0];
        let n = (len / self.step).round().max(1.0) as usize;
        (n, len / n as f64)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhaseSpacePoint)>,
    pub parametrization: String,
    pub max_constraint_drift: f64,
    /// Max position difference against a half-step run, when requested.
    pub halving_error: Option<f64>,
}

impl Trajectory {
    pub fn taus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn world_line(&self, j: usize) -> Vec<(f64, FourVector)> {
        self.samples.iter().map(|(t, p)| (*t, p.particles[j].x)).collect()
    }

    /// Position of particle j at parameter tau by 5-point Lagrange interpolation.
    pub fn position_at(&self, j: usize, tau: f64) -> Result<FourVector> {
        let line = self.world_line(j);
        interpolate(&line, tau)
    }
}

/// Local Lagrange interpolation of a sampled vector path (up to 5 nodes).
pub fn interpolate(line: &[(f64, FourVector)], tau: f64) -> Result<FourVector> {
    let n = line.len();
    if n == 0 {
        return Err(Error::Validation("empty path".into()));
    }
    let (lo, hi) = (line[0].0.min(line[n - 1].0), line[0].0.max(line[n - 1].0));
    let tol = 1e-12 * (hi - lo).abs().max(1.0);
    if tau < lo - tol || tau > hi + tol {
        return Err(Error::Validation(format!("tau = {tau} outside sampled range [{lo}, {hi}]")));
    }
    if n == 1 {
        return Ok(line[0].1);
    }
    let increasing = line[n - 1].0 > line[0].0;
    let pos = line.partition_point(|s| if increasing { s.0 < tau } else { s.0 > tau });
    let npts = 5.min(n);
    let start = pos.saturating_sub(npts / 2).min(n - npts);
    let nodes = &line[start..start + npts];
    let mut out = FourVector::default();
    for (i, (ti, xi)) in nodes.iter().enumerate() {
        let mut w = 1.0;
        for (k, (tk, _)) in nodes.iter().enumerate() {
            if k != i {
                w *= (tau - tk) / (ti - tk);
            }
        }
        out = out + *xi * w;
    }
    Ok(out)
}

pub fn reparametrize(traj: &Trajectory, f: &MonotoneMap) -> Result<Trajectory> {
    let taus = traj.taus();
    let (t0, t1) = (taus[0], *taus.last().unwrap());
    f.check_monotone(t0, t1)?;
    let mut samples: Vec<(f64, PhaseSpacePoint)> = traj.samples.iter().map(|(t, p)| (f.eval(*t), p.clone())).collect();
    if f.deriv(t0) < 0.0 {
        samples.reverse();
    }
    Ok(Trajectory {
        samples,
        parametrization: format!("{}+reparam", traj.parametrization),
        max_constraint_drift: traj.max_constraint_drift,
        halving_error: traj.halving_error,
    })
}

fn axpy(y: &[C64], h: f64, k: &[C64]) -> Vec<C64> {
    y.iter().zip(k).map(|(a, b)| a + b * h).collect()
}

/// One classical fourth-order step of y' = f(t, y).
pub fn rk4_step<F>(f: &F, t: f64, y: &[C64], h: f64) -> Result<Vec<C64>>
where
    F: Fn(f64, &[C64]) -> Result<Vec<C64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    Ok((0..y.len()).map(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0)).collect())
}

/// One fixed step of the Dormand-Prince 5(4) pair, advancing with the
/// fifth-order solution.
pub fn dopri5_step<F>(f: &F, t: f64, y: &[C64], h: f64) -> Result<Vec<C64>>
where
    F: Fn(f64, &[C64]) -> Result<Vec<C64>>,
{
    const C: [f64; 6] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0];
    const A: [&[f64]; 6] = [
        &[],
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    ];
    const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
    let mut ks: Vec<Vec<C64>> = Vec::with_capacity(6);
    for s in 0..6 {
        let mut ys = y.to_vec();
        for (r, a) in A[s].iter().enumerate() {
            for i in 0..y.len() {
                ys[i] += ks[r][i] * (h * a);
            }
        }
        ks.push(f(t + C[s] * h, &ys)?);
    }
    Ok((0..y.len()).map(|i| y[i] + (0..6).fold(ZERO, |acc, s| acc + ks[s][i] * B[s]) * h).collect())
}

fn max_residual(point: &PhaseSpacePoint) -> f64 {
    (0..point.particles.len()).map(|j| constraint_residual(point, j).abs()).fold(0.0, f64::max)
}

fn run(initial: &PhaseSpacePoint, gauge: &Gauge, settings: &IntegratorSettings, step_scale: usize) -> Result<Trajectory> {
    let (n, h0) = settings.grid();
    let (n, h) = (n * step_scale, h0 / step_scale as f64);
    let t0 = settings.tau_span[0];
    let template = initial.clone();
    let flow = |t: f64, y: &[C64]| -> Result<Vec<C64>> {
        let pt = template.with_coordinates(y);
        let v = multipliers(&pt, gauge, t)?;
        Ok(hamiltonian_flow(&pt, &v))
    };
    let r0 = max_residual(initial);
    let mut y = initial.coordinates();
    let mut samples = vec![(t0, initial.clone())];
    let mut drift: f64 = 0.0;
    for i in 0..n {
        let t = t0 + i as f64 * h;
        y = match settings.method {
            Method::Rk4 => rk4_step(&flow, t, &y, h)?,
            Method::Dopri5 => dopri5_step(&flow, t, &y, h)?,
        };
        let pt = template.with_coordinates(&y);
        if !pt.is_finite() {
            return Err(Error::Integration(format!("non-finite state at tau = {}", t + h)));
        }
        drift = drift.max((max_residual(&pt) - r0).abs());
        if drift > settings.drift_bound {
            return Err(Error::Integration(format!(
                "constraint drift {drift:.3e} exceeds bound {:.1e} at tau = {}",
                settings.drift_bound,
                t + h
            )));
        }
        if (i + 1) % step_scale == 0 {
            samples.push((t0 + (i + 1) as f64 * h, pt));
        }
    }
    let tag = match gauge {
        Gauge::ProperTime => "proper-time".to_string(),
        Gauge::Rate(_) => "rate".to_string(),
        Gauge::Form { form, .. } => format!("form:{}", form.name()),
    };
    Ok(Trajectory { samples, parametrization: tag, max_constraint_drift: drift, halving_error: None })
}

/// Integrates the Hamiltonian flow. The initial point should already satisfy
/// the constraints (and the g-surface condition for a form gauge).
pub fn integrate_covariant(initial: &PhaseSpacePoint, gauge: &Gauge, settings: &IntegratorSettings) -> Result<Trajectory> {
    settings.validate()?;
    let mut traj = run(initial, gauge, settings, 1)?;
    if settings.halving_check {
        let fine = run(initial, gauge, settings, 2)?;
        let mut err: f64 = 0.0;
        for ((_, a), (_, b)) in traj.samples.iter().zip(&fine.samples) {
            for (pa, pb) in a.particles.iter().zip(&b.particles) {
                err = err.max((pa.x - pb.x).norm_inf());
            }
        }
        traj.halving_error = Some(err);
    }
    Ok(traj)
}

/// Column names of the CSV export.
pub fn csv_columns(point: &PhaseSpacePoint, with_modes: bool) -> Vec<String> {
    let mut cols = vec!["tau".to_string()];
    for j in 0..point.particles.len() {
        for mu in 0..4 {
            cols.push(format!("x{j}_{mu}"));
        }
        for mu in 0..4 {
            cols.push(format!("p{j}_{mu}"));
        }
    }
    if with_modes {
        for m in 0..point.field.len() {
            cols.push(format!("mode{m}_q_norm"));
            cols.push(format!("mode{m}_p_norm"));
        }
    }
    cols
}

/// Wide CSV rows; floats use shortest round-trip formatting so output is
/// byte-stable for identical runs.
pub fn trajectory_csv(traj: &Trajectory, with_modes: bool) -> String {
    let mut s = String::new();
    if let Some((_, p0)) = traj.samples.first() {
        s.push_str(&csv_columns(p0, with_modes).join(","));
        s.push('\n');
    }
    for (t, p) in &traj.samples {
        let _ = write!(s, "{t:?}");
        for pa in &p.particles {
            for v in pa.x.0.iter().chain(pa.p.0.iter()) {
                let _ = write!(s, ",{v:?}");
            }
        }
        if with_modes {
            for m in &p.field.modes {
                let nq = m.q.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                let np = m.p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                let _ = write!(s, ",{nq:?},{np:?}");
            }
        }
        s.push('\n');
    }
    s
}
