//! Forms of dynamics: the point function g whose zero set fixes how world
//! lines are parametrized. Every supported family is a quadric
//! g(q) = B_{ab} q^a q^b + b_a q^a + c, which covers the instant, light-cone
//! and hyperboloid forms and leaves room for custom surfaces.

use crate::scalar::{Scalar, Vec4};
use crate::tensors::FourVector;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FormKind {
    Instant,
    Lightcone,
    Hyperboloid { a: f64 },
    Custom { quadratic: [[f64; 4]; 4], linear: [f64; 4], constant: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormOfDynamics {
    pub kind: FormKind,
    quad: [[f64; 4]; 4],
    lin: [f64; 4],
    cst: f64,
}

const DIAG_METRIC: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
];

impl FormOfDynamics {
    pub fn new(kind: FormKind) -> Result<Self> {
        let (quad, lin, cst) = match &kind {
            FormKind::Instant => ([[0.0; 4]; 4], [1.0, 0.0, 0.0, 0.0], 0.0),
            FormKind::Lightcone => (DIAG_METRIC, [0.0; 4], 0.0),
            FormKind::Hyperboloid { a } => {
                if !a.is_finite() {
                    return Err(Error::Validation("hyperboloid parameter must be finite".into()));
                }
                (DIAG_METRIC, [0.0; 4], -a * a)
            }
            FormKind::Custom { quadratic, linear, constant } => {
                let mut q = *quadratic;
                // only the symmetric part contributes
                for i in 0..4 {
                    for j in 0..i {
                        let s = 0.5 * (q[i][j] + q[j][i]);
                        q[i][j] = s;
                        q[j][i] = s;
                    }
                }
                let all = q.iter().flatten().chain(linear.iter()).chain(std::iter::once(constant));
                if all.clone().any(|x| !x.is_finite()) {
                    return Err(Error::Validation("custom form coefficients must be finite".into()));
                }
                if q.iter().flatten().chain(linear.iter()).all(|&x| x == 0.0) {
                    return Err(Error::Validation("custom form is constant".into()));
                }
                (q, *linear, *constant)
            }
        };
        Ok(FormOfDynamics { kind, quad, lin, cst })
    }

    pub fn instant() -> Self {
        FormOfDynamics::new(FormKind::Instant).unwrap()
    }

    pub fn lightcone() -> Self {
        FormOfDynamics::new(FormKind::Lightcone).unwrap()
    }

    pub fn hyperboloid(a: f64) -> Self {
        FormOfDynamics::new(FormKind::Hyperboloid { a }).unwrap()
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FormKind::Instant => "instant",
            FormKind::Lightcone => "lightcone",
            FormKind::Hyperboloid { .. } => "hyperboloid",
            FormKind::Custom { .. } => "custom",
        }
    }

    pub fn g(&self, q: &FourVector) -> f64 {
        let mut s = self.cst;
        for a in 0..4 {
            s += self.lin[a] * q[a];
            for b in 0..4 {
                s += self.quad[a][b] * q[a] * q[b];
            }
        }
        s
    }

    /// dg/dq^a (lower index).
    pub fn grad_g(&self, q: &FourVector) -> FourVector {
        FourVector(std::array::from_fn(|a| {
            self.lin[a] + 2.0 * (0..4).map(|b| self.quad[a][b] * q[b]).sum::<f64>()
        }))
    }

    pub fn g_generic<S: Scalar>(&self, q: &Vec4<S>) -> S {
        let mut s = S::real(self.cst);
        for a in 0..4 {
            if self.lin[a] != 0.0 {
                s = s + q[a].scale_re(self.lin[a]);
            }
            for b in 0..4 {
                if self.quad[a][b] != 0.0 {
                    s = s + (q[a].clone() * q[b].clone()).scale_re(self.quad[a][b]);
                }
            }
        }
        s
    }

    pub fn grad_g_generic<S: Scalar>(&self, q: &Vec4<S>) -> Vec4<S> {
        std::array::from_fn(|a| {
            let mut s = S::real(self.lin[a]);
            for b in 0..4 {
                if self.quad[a][b] != 0.0 {
                    s = s + q[b].scale_re(2.0 * self.quad[a][b]);
                }
            }
            s
        })
    }

    /// Roots t of g(q + t e_0) = 0, sorted ascending.
    pub fn time_roots(&self, q: &FourVector) -> Vec<f64> {
        let c2 = self.quad[0][0];
        let c1 = self.grad_g(q)[0];
        let c0 = self.g(q);
        solve_quadratic(c2, c1, c0)
    }

    /// Moves q along the time axis onto the surface, choosing the root of
    /// smallest displacement.
    pub fn project_time(&self, q: &FourVector) -> Result<FourVector> {
        let roots = self.time_roots(q);
        let t = roots
            .iter()
            .copied()
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .ok_or_else(|| Error::Validation(format!("{} surface has no real time-root through {:?}", self.name(), q.0)))?;
        let mut out = *q;
        out[0] += t;
        Ok(out)
    }
}

/// Real roots of c2 t^2 + c1 t + c0 = 0 in ascending order.
pub fn solve_quadratic(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c2.abs().max(c1.abs()).max(c0.abs()).max(1e-300);
    if c2.abs() <= 1e-14 * scale {
        if c1.abs() <= 1e-14 * scale {
            return Vec::new();
        }
        return vec![-c0 / c1];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < -1e-14 * scale * scale {
        return Vec::new();
    }
    let sq = disc.max(0.0).sqrt();
    // numerically stable pair
    let qv = -0.5 * (c1 + c1.signum() * sq);
    let mut r = if qv == 0.0 { vec![0.0, 0.0] } else { vec![qv / c2, c0 / qv] };
    r.sort_by(f64::total_cmp);
    r
}
