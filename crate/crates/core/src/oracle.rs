//! Second-order Lorentz-force integration used as ground truth for the
//! Hamiltonian flow. The state is (x, u = dx/dtau) per particle plus the mode
//! pairs, advanced with fixed Dormand-Prince steps. Field strengths are
//! computed here from scratch rather than through the phase-space helpers.

use crate::dynamics::{dopri5_step, IntegratorSettings, Trajectory};
use crate::phase::{kinetic_momentum, PhaseSpacePoint};
use crate::scalar::{C64, ZERO};
use crate::tensors::FourVector;
use crate::{Error, Result};
use std::f64::consts::PI;

const G: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

struct ModeData {
    k: [f64; 4],
    c: f64,
    ninv: f64,
}

/// F_{mu nu} = d_mu A_nu - d_nu A_mu from the current mode variables
/// (real part of the complex potential).
fn field_strength(x: &[f64; 4], modes: &[ModeData], y: &[C64], p: &[C64]) -> [[f64; 4]; 4] {
    // dA[mu][nu] = d_mu A_nu, both lower
    let mut da = [[0.0; 4]; 4];
    for (m, md) in modes.iter().enumerate() {
        let ph: f64 = (0..4).map(|i| G[i] * md.k[i] * x[i]).sum();
        let e = C64::from_polar(1.0, ph);
        for mu in 0..4 {
            let k_lo = G[mu] * md.k[mu];
            for nu in 0..4 {
                // A^nu = c (y^nu e + g^{nu nu} P_nu e^{-1}); lower with g_{nu nu}
                let a_up_pos = y[4 * m + nu] * e;
                let a_up_neg = p[4 * m + nu] * G[nu] / e;
                let d = C64::new(0.0, k_lo) * (a_up_pos - a_up_neg) * md.c;
                da[mu][nu] += G[nu] * d.re;
            }
        }
    }
    std::array::from_fn(|mu| std::array::from_fn(|nu| da[mu][nu] - da[nu][mu]))
}

/// Integrates m du_a/dtau = e u^b F_{ab} together with the mode equations,
/// starting from the kinetic momentum of each particle (u = Pi/m).
pub fn oracle_lorentz_force(initial: &PhaseSpacePoint, settings: &IntegratorSettings) -> Result<Trajectory> {
    settings.validate()?;
    let np = initial.particles.len();
    let modes: Vec<ModeData> = initial
        .field
        .modes
        .iter()
        .map(|m| {
            let kk = m.k[0] * m.k[0] - m.k[1] * m.k[1] - m.k[2] * m.k[2] - m.k[3] * m.k[3];
            let ninv = 1.0 / (4.0 * PI * PI * PI * kk.abs()).sqrt();
            ModeData { k: m.k.0, c: m.weight * ninv, ninv }
        })
        .collect();
    let nm = modes.len();
    let (mass, charge): (Vec<f64>, Vec<f64>) = initial.particles.iter().map(|p| (p.mass, p.charge)).unzip();

    // layout: [x(4) u(4)] per particle, then y(4 nm), p(4 nm)
    let mut y0 = Vec::with_capacity(8 * np + 8 * nm);
    for pa in &initial.particles {
        let u = kinetic_momentum(pa, &initial.field) * (1.0 / pa.mass);
        y0.extend(pa.x.0.iter().chain(u.0.iter()).map(|&r| C64::new(r, 0.0)));
    }
    for m in &initial.field.modes {
        y0.extend_from_slice(&m.q);
    }
    for m in &initial.field.modes {
        y0.extend_from_slice(&m.p);
    }
    let off_y = 8 * np;
    let off_p = off_y + 4 * nm;

    let rhs = |_t: f64, s: &[C64]| -> Result<Vec<C64>> {
        let mut out = vec![ZERO; s.len()];
        let (yf, pf) = (&s[off_y..off_p], &s[off_p..]);
        for j in 0..np {
            let x: [f64; 4] = std::array::from_fn(|i| s[8 * j + i].re);
            let u: [f64; 4] = std::array::from_fn(|i| s[8 * j + 4 + i].re);
            let f = field_strength(&x, &modes, yf, pf);
            for a in 0..4 {
                let force_lo: f64 = (0..4).map(|b| u[b] * f[a][b]).sum::<f64>() * charge[j] / mass[j];
                out[8 * j + a] = C64::new(u[a], 0.0);
                out[8 * j + 4 + a] = C64::new(G[a] * force_lo, 0.0);
            }
            for (m, md) in modes.iter().enumerate() {
                let ph: f64 = (0..4).map(|i| G[i] * md.k[i] * x[i]).sum();
                let e = C64::from_polar(1.0, ph);
                for a in 0..4 {
                    out[off_y + 4 * m + a] -= md.ninv * charge[j] * u[a] / e;
                    out[off_p + 4 * m + a] += e * (md.ninv * charge[j] * G[a] * u[a]);
                }
            }
        }
        Ok(out)
    };

    let unpack = |s: &[C64]| -> PhaseSpacePoint {
        let mut pt = initial.clone();
        for (j, pa) in pt.particles.iter_mut().enumerate() {
            pa.x = FourVector(std::array::from_fn(|i| s[8 * j + i].re));
            // report canonical momentum p = m u + e A for comparison
            let u = FourVector(std::array::from_fn(|i| s[8 * j + 4 + i].re));
            pa.p = crate::tensors::lower(&(u * pa.mass));
        }
        for (m, md) in pt.field.modes.iter_mut().enumerate() {
            md.q = std::array::from_fn(|a| s[off_y + 4 * m + a]);
            md.p = std::array::from_fn(|a| s[off_p + 4 * m + a]);
        }
        for j in 0..pt.particles.len() {
            let a = crate::phase::real_part(&crate::phase::vector_potential(&pt.particles[j].x, &pt.field));
            let pa = &mut pt.particles[j];
            pa.p = pa.p + crate::tensors::lower(&(a * pa.charge));
        }
        pt
    };

    let (n, h) = settings.grid();
    let t0 = settings.tau_span[0];
    let mut s = y0;
    let mut samples = vec![(t0, unpack(&s))];
    let mut drift: f64 = 0.0;
    for i in 0..n {
        s = dopri5_step(&rhs, t0 + i as f64 * h, &s, h)?;
        if s.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Integration("oracle produced a non-finite state".into()));
        }
        for j in 0..np {
            let u: [f64; 4] = std::array::from_fn(|a| s[8 * j + 4 + a].re);
            let n2: f64 = (0..4).map(|a| G[a] * u[a] * u[a]).sum();
            drift = drift.max((n2 - 1.0).abs());
        }
        samples.push((t0 + (i + 1) as f64 * h, unpack(&s)));
    }
    Ok(Trajectory { samples, parametrization: "proper-time-oracle".into(), max_constraint_drift: drift, halving_error: None })
}
