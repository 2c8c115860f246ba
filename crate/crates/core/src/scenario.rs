//! Scenario files: particles, field lattice, form of dynamics, frame path and
//! integrator settings, read from TOML.

use crate::dynamics::IntegratorSettings;
use crate::form::{FormKind, FormOfDynamics};
use crate::lattice::{AmplitudeKind, AmplitudeSpec, AmplitudeTarget, GaussianProfile, GridSpec, ModeLattice};
use crate::phase::{real_part, vector_potential, ParticleState, PhaseSpacePoint};
use crate::reduced::{Grid3, ReducedFieldVars, ReducedPoint};
use crate::tensors::{FourVector, FramePath};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub mass: f64,
    pub charge: f64,
    /// Starting event; x^0 is moved onto the initial g-surface.
    pub x0: [f64; 4],
    /// Spatial contravariant canonical momentum; p^0 solves the mass shell.
    pub p_spatial: [f64; 3],
}

fn default_offset() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub dims: [usize; 4],
    pub spacing: f64,
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(default)]
    pub amplitude: AmplitudeSpec,
    #[serde(default = "default_true")]
    pub paired: bool,
}

fn default_form() -> FormKind {
    FormKind::Instant
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub particles: Vec<ParticleSpec>,
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    #[serde(default = "default_form")]
    pub form: FormKind,
    #[serde(default)]
    pub frame: FramePath,
    #[serde(default)]
    pub integrator: IntegratorSettings,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// sha256 of the canonical JSON encoding; independent of TOML layout.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn form_of_dynamics(&self) -> Result<FormOfDynamics> {
        FormOfDynamics::new(self.form.clone())
    }

    pub fn field(&self) -> Result<ModeLattice> {
        let Some(l) = &self.lattice else { return Ok(ModeLattice::empty()) };
        if l.dims.iter().any(|&d| d == 0) {
            return Err(Error::Validation("lattice dims must be positive".into()));
        }
        if !(l.spacing > 0.0) || !l.spacing.is_finite() || !l.offset.is_finite() {
            return Err(Error::Validation("lattice spacing must be positive and offset finite".into()));
        }
        if !(l.amplitude.width > 0.0) || !l.amplitude.scale.is_finite() {
            return Err(Error::Validation("amplitude width must be positive and scale finite".into()));
        }
        let grid = GridSpec { offset: l.offset, ..GridSpec::new(l.dims, l.spacing) };
        let lat = ModeLattice::sampled(grid, &l.amplitude, l.paired);
        if let Some(i) = lat.null_cone_violation() {
            return Err(Error::Validation(format!("lattice mode {i} lies on the null cone k.k = 0")));
        }
        if let Some((i, j)) = lat.duplicate_wavevector() {
            return Err(Error::Validation(format!("lattice modes {i} and {j} share a wavevector")));
        }
        Ok(lat)
    }

    pub fn validate(&self) -> Result<()> {
        for (j, p) in self.particles.iter().enumerate() {
            let finite = p.x0.iter().chain(&p.p_spatial).all(|v| v.is_finite()) && p.charge.is_finite();
            if !(p.mass > 0.0) || !p.mass.is_finite() || !finite {
                return Err(Error::Validation(format!("particle {j}: mass must be positive and all entries finite")));
            }
        }
        self.form_of_dynamics()?;
        self.integrator.validate()?;
        self.field()?;
        Ok(())
    }

    /// Initial phase-space point: each particle is moved along its time axis
    /// onto g(a(t0) x - z(t0)) = 0 and placed on its mass shell.
    pub fn initial_point(&self) -> Result<PhaseSpacePoint> {
        self.validate()?;
        let form = self.form_of_dynamics()?;
        let field = self.field()?;
        let t0 = self.integrator.tau_span[0];
        let (a, z) = (self.frame.a(t0), self.frame.z(t0));
        let ainv = a.inverse();
        let mut particles = Vec::with_capacity(self.particles.len());
        for (j, s) in self.particles.iter().enumerate() {
            let q = form.project_time(&(a.apply(&FourVector(s.x0)) - z))?;
            let x = ainv.apply(&(q + z));
            let pot = real_part(&vector_potential(&x, &field));
            let e2: f64 = (0..3).map(|i| (s.p_spatial[i] - s.charge * pot[i + 1]).powi(2)).sum::<f64>() + s.mass * s.mass;
            if !e2.is_finite() {
                return Err(Error::Validation(format!("particle {j}: mass shell has no real root")));
            }
            let pu = FourVector::new(s.charge * pot[0] + e2.sqrt(), s.p_spatial[0], s.p_spatial[1], s.p_spatial[2]);
            particles.push(ParticleState::with_upper_momentum(s.mass, s.charge, x, pu));
        }
        Ok(PhaseSpacePoint { particles, field })
    }

    /// Random on-shell points near the scenario: particle events and momenta
    /// are jittered and the field amplitudes are redrawn per point.
    pub fn random_on_shell(&self, n: usize, seed: u64) -> Result<Vec<PhaseSpacePoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut s = self.clone();
                for p in s.particles.iter_mut() {
                    for c in p.x0.iter_mut().skip(1) {
                        *c += rng.gen_range(-0.5..0.5);
                    }
                    for c in p.p_spatial.iter_mut() {
                        *c += rng.gen_range(-0.3..0.3);
                    }
                }
                if let Some(l) = s.lattice.as_mut() {
                    l.amplitude.seed = l.amplitude.seed.wrapping_add(seed).wrapping_add(i as u64);
                }
                s.initial_point()
            })
            .collect()
    }

    /// The same particles on the instant leaf with a 3D reduced field lattice
    /// of n^3 modes, sampled from the scenario's amplitude profile.
    pub fn reduced_point(&self, n: usize) -> Result<ReducedPoint> {
        let mut s = self.clone();
        s.form = FormKind::Instant;
        s.frame = FramePath::static_frame();
        let lattice = s.lattice.take();
        let pt = s.initial_point()?;
        let field = match lattice {
            Some(l) => ReducedFieldVars::sampled(Grid3 { offset: l.offset, ..Grid3::new(n, l.spacing) }, &GaussianProfile::from_spec(&l.amplitude))?,
            None => ReducedFieldVars::empty(),
        };
        Ok(ReducedPoint { particles: pt.particles, field })
    }

    /// Two opposite charges in a 2^4 Gaussian field lattice.
    pub fn two_charges(form: FormKind) -> Self {
        Scenario {
            name: "two-charges".into(),
            particles: vec![
                ParticleSpec { mass: 1.0, charge: 0.3, x0: [0.0, 0.6, 0.2, -0.1], p_spatial: [0.1, -0.2, 0.05] },
                ParticleSpec { mass: 1.5, charge: -0.2, x0: [0.0, -0.4, 0.1, 0.5], p_spatial: [-0.15, 0.1, 0.2] },
            ],
            lattice: Some(LatticeSpec {
                dims: [2, 2, 2, 2],
                spacing: 1.0,
                offset: 0.5,
                amplitude: AmplitudeSpec {
                    kind: AmplitudeKind::Gaussian,
                    scale: 0.05,
                    width: 1.0,
                    shift: [0.0, 0.3, -0.2, 0.4],
                    target: AmplitudeTarget::Both,
                    seed: 7,
                },
                paired: true,
            }),
            form,
            frame: FramePath::static_frame(),
            integrator: IntegratorSettings::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::constraint_residual;

    const SAMPLE: &str = r#"
name = "demo"
form = { kind = "hyperboloid", a = 1.0 }

[[particles]]
mass = 1.0
charge = 0.5
x0 = [0.0, 0.3, 0.0, 0.0]
p_spatial = [0.1, 0.0, 0.0]

[lattice]
dims = [2, 2, 2, 2]
spacing = 1.0
amplitude = { kind = "gaussian", scale = 0.1, seed = 3 }

[integrator]
step = 0.01
tau_span = [0.0, 0.5]
"#;

    #[test]
    fn parses_and_round_trips() {
        let s = Scenario::from_toml(SAMPLE).unwrap();
        assert_eq!(s.lattice.as_ref().unwrap().offset, 0.5);
        let again = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.digest(), again.digest());
    }

    #[test]
    fn rejects_unknown_fields_and_null_modes() {
        assert!(matches!(Scenario::from_toml("bogus = 1"), Err(Error::Parse(_))));
        let null = SAMPLE.replace("spacing = 1.0", "spacing = 1.0\noffset = 0.0");
        assert!(matches!(Scenario::from_toml(&null), Err(Error::Validation(_))));
        let bad_mass = SAMPLE.replace("mass = 1.0", "mass = -1.0");
        assert!(matches!(Scenario::from_toml(&bad_mass), Err(Error::Validation(_))));
    }

    #[test]
    fn initial_point_is_on_shell_and_on_surface() {
        let s = Scenario::from_toml(SAMPLE).unwrap();
        let pt = s.initial_point().unwrap();
        let form = s.form_of_dynamics().unwrap();
        assert!(constraint_residual(&pt, 0).abs() < 1e-12);
        assert!(form.g(&pt.particles[0].x).abs() < 1e-12);
        let two = Scenario::two_charges(FormKind::Lightcone).initial_point().unwrap();
        assert_eq!(two.field.len(), 16);
        let pts = Scenario::two_charges(FormKind::Hyperboloid { a: 1.0 }).random_on_shell(5, 1).unwrap();
        let hy = FormOfDynamics::hyperboloid(1.0);
        for p in &pts {
            for j in 0..2 {
                assert!(constraint_residual(p, j).abs() < 1e-10 && hy.g(&p.particles[j].x).abs() < 1e-10);
            }
        }
        assert_ne!(pts[0], pts[1]);
    }
}
