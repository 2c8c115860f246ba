//! Pure-field sector. Field parts of the generators are bilinears
//! G[K] = sum_k w P_g (K Q)^g with K a first-order operator in k:
//!
//! (K Q)^g = M^g_d Q^d + L_ab k^a d^b Q^g + (t^n k_n) Q^g,  d^b = d/dk_b.
//!
//! For such bilinears std{G[K1], G[K2]} = G[[K1, K2]], so closure of the
//! field generators reduces to operator commutators, which are computed here
//! exactly. On a lattice the same bracket is G applied to the stencil
//! commutator; its deviation from the exact kernel is measured under
//! refinement.

use crate::generators::M_PAIRS;
use crate::lattice::{fornberg_first_derivative, CVec4, GaussianProfile, GridSpec, STENCIL_POINTS};
use crate::scalar::{C64, I, ZERO};
use crate::tensors::{FourVector, METRIC};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorKernel {
    /// M^g_d acting on the polarization index.
    pub matrix: [[C64; 4]; 4],
    /// L_ab, coefficient of k^a d^b.
    pub flow: [[f64; 4]; 4],
    /// t^n, multiplication by t^n k_n.
    pub mult: CVec4,
}

impl OperatorKernel {
    pub fn zero() -> Self {
        OperatorKernel { matrix: [[ZERO; 4]; 4], flow: [[0.0; 4]; 4], mult: [ZERO; 4] }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        for a in 0..4 {
            for b in 0..4 {
                r.matrix[a][b] += o.matrix[a][b];
                r.flow[a][b] += o.flow[a][b];
            }
            r.mult[a] += o.mult[a];
        }
        r
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        for a in 0..4 {
            for b in 0..4 {
                r.matrix[a][b] *= s;
                r.flow[a][b] *= s;
            }
            r.mult[a] *= s;
        }
        r
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                m = m.max((self.matrix[a][b] - o.matrix[a][b]).norm()).max((self.flow[a][b] - o.flow[a][b]).abs());
            }
            m = m.max((self.mult[a] - o.mult[a]).norm());
        }
        m
    }

    /// Exact commutator [self, o]. The matrix part commutes with the
    /// differential parts; [k^a d^b, k^c d^d] = g^{bc} k^a d^d - g^{da} k^c d^b
    /// and [k^a d^b, t^n k_n] = k^a t^b.
    pub fn commutator(&self, o: &Self) -> Self {
        let mut r = OperatorKernel::zero();
        for a in 0..4 {
            for b in 0..4 {
                r.matrix[a][b] = (0..4).fold(ZERO, |acc, c| acc + self.matrix[a][c] * o.matrix[c][b] - o.matrix[a][c] * self.matrix[c][b]);
                r.flow[a][b] = (0..4).map(|c| METRIC[c] * (self.flow[a][c] * o.flow[c][b] - o.flow[a][c] * self.flow[c][b])).sum();
            }
        }
        // k^a L_ab t^b = (g^{aa} (L t)_a) k_a
        for a in 0..4 {
            let lt = (0..4).fold(ZERO, |acc, b| acc + t_times(self.flow[a][b], o.mult[b]) - t_times(o.flow[a][b], self.mult[b]));
            r.mult[a] = lt * METRIC[a];
        }
        r
    }

    /// (K f)(k) given f and its derivatives df[b] = d^b f at k.
    pub fn apply_at(&self, k: &FourVector, f: &CVec4, df: &[CVec4; 4]) -> CVec4 {
        let kl = crate::tensors::lower(k);
        let mult = (0..4).fold(ZERO, |acc, n| acc + self.mult[n] * kl[n]);
        std::array::from_fn(|g| {
            let mut s = mult * f[g];
            for d in 0..4 {
                s += self.matrix[g][d] * f[d];
            }
            for a in 0..4 {
                for b in 0..4 {
                    if self.flow[a][b] != 0.0 {
                        s += df[b][g] * (self.flow[a][b] * k[a]);
                    }
                }
            }
            s
        })
    }
}

fn t_times(l: f64, t: C64) -> C64 {
    t * l
}

/// Kernel of the field part of P_n: multiplication by -i k_n.
pub fn translation_kernel(nu: usize) -> OperatorKernel {
    let mut k = OperatorKernel::zero();
    k.mult[nu] = -I;
    k
}

/// Kernel of the field part of M^{ab}:
/// P^b Q^a - P^a Q^b + P_g (k^b d^a - k^a d^b) Q^g.
pub fn lorentz_kernel(a: usize, b: usize) -> OperatorKernel {
    let mut k = OperatorKernel::zero();
    // P_g M^g_d Q^d with M^g_d = g^{gb} d^a_d - g^{ga} d^b_d
    k.matrix[b][a] += C64::new(METRIC[b], 0.0);
    k.matrix[a][b] -= C64::new(METRIC[a], 0.0);
    k.flow[b][a] += 1.0;
    k.flow[a][b] -= 1.0;
    k
}

/// P_0..P_3 (lower) followed by M^{ab} in `M_PAIRS` order.
pub fn generator_kernels() -> [OperatorKernel; 10] {
    std::array::from_fn(|i| if i < 4 { translation_kernel(i) } else { let (a, b) = M_PAIRS[i - 4]; lorentz_kernel(a, b) })
}

/// One closure identity: lhs kernel indices, expected kernel.
pub struct KernelIdentity {
    pub name: &'static str,
    pub indices: Vec<usize>,
    pub left: usize,
    pub right: usize,
    pub expected: OperatorKernel,
}

/// The 45 Poincare identities written with bracket ordering
/// [F, G] = std{G, F} and lower-index generators, as linear combinations of
/// generator kernels.
pub fn kernel_identities() -> Vec<KernelIdentity> {
    let ks = generator_kernels();
    let g = |a: usize, b: usize| if a == b { METRIC[a] } else { 0.0 };
    // lower-index kernels: M_ab = g_aa g_bb M^ab
    let m_lo = |a: usize, b: usize| -> (usize, OperatorKernel) {
        if a == b {
            return (usize::MAX, OperatorKernel::zero());
        }
        let (c, sign) = M_PAIRS.iter().position(|&p| p == (a, b)).map(|c| (c, 1.0)).unwrap_or_else(|| (M_PAIRS.iter().position(|&p| p == (b, a)).unwrap(), -1.0));
        (4 + c, ks[4 + c].scale(sign * METRIC[a] * METRIC[b]))
    };
    let mut out = Vec::new();
    for mu in 0..4 {
        for nu in (mu + 1)..4 {
            out.push(KernelIdentity { name: "[P,P]", indices: vec![mu, nu], left: mu, right: nu, expected: OperatorKernel::zero() });
        }
    }
    for (a, b) in M_PAIRS {
        for mu in 0..4 {
            let e = ks[a].scale(g(b, mu)).add(&ks[b].scale(-g(a, mu)));
            out.push(KernelIdentity { name: "[M,P]", indices: vec![a, b, mu], left: m_lo(a, b).0, right: mu, expected: e });
        }
    }
    for (i, (a, b)) in M_PAIRS.iter().copied().enumerate() {
        for (mu, nu) in M_PAIRS.iter().copied().skip(i + 1) {
            let m = |x: usize, y: usize| m_lo(x, y).1;
            let e = m(b, mu).scale(g(a, nu)).add(&m(mu, a).scale(g(b, nu))).add(&m(nu, b).scale(g(a, mu))).add(&m(a, nu).scale(g(b, mu)));
            out.push(KernelIdentity { name: "[M,M]", indices: vec![a, b, mu, nu], left: m_lo(a, b).0, right: m_lo(mu, nu).0, expected: e });
        }
    }
    out
}

/// Sign of the lower-index kernel relative to the stored upper-index one.
fn lower_sign(i: usize) -> f64 {
    if i < 4 {
        1.0
    } else {
        let (a, b) = M_PAIRS[i - 4];
        METRIC[a] * METRIC[b]
    }
}

/// Largest coefficient mismatch of the exact kernel algebra (0 when closed).
pub fn kernel_closure_residual() -> f64 {
    let ks = generator_kernels();
    kernel_identities()
        .iter()
        .map(|id| {
            let l = ks[id.left].scale(lower_sign(id.left));
            let r = ks[id.right].scale(lower_sign(id.right));
            // [F, G] = std{G, F} = G[[K_G, K_F]]
            r.commutator(&l).max_abs_diff(&id.expected)
        })
        .fold(0.0, f64::max)
}

/// Lattice functions on an axis-aligned grid with stencil derivatives.
pub struct LatticeSector {
    pub grid: GridSpec,
    pub k: Vec<FourVector>,
    /// (start, weights) per axis index
    stencils: Vec<(usize, Vec<f64>)>,
    strides: [usize; 4],
}

impl LatticeSector {
    pub fn new(grid: GridSpec) -> Self {
        assert!(grid.dims.iter().all(|&d| d == grid.dims[0]), "cubic grids only");
        let n = grid.dims[0];
        let npts = STENCIL_POINTS.min(n);
        let stencils = (0..n)
            .map(|i| {
                let start = i.saturating_sub(npts / 2).min(n - npts);
                let xs: Vec<f64> = (start..start + npts).map(|j| grid.coord(j, n)).collect();
                (start, fornberg_first_derivative(grid.coord(i, n), &xs))
            })
            .collect();
        let strides = [n * n * n, n * n, n, 1];
        let k = (0..grid.len()).map(|l| grid.grid_point(l)).collect();
        LatticeSector { grid, k, stencils, strides }
    }

    pub fn sample(&self, f: impl Fn(&FourVector) -> CVec4) -> Vec<CVec4> {
        self.k.iter().map(f).collect()
    }

    /// d^b f at node `lin` (upper index b, derivative in k_b).
    fn deriv(&self, f: &[CVec4], lin: usize, b: usize) -> CVec4 {
        let n = self.grid.dims[0];
        let i = (lin / self.strides[b]) % n;
        let (start, w) = &self.stencils[i];
        let base = lin - i * self.strides[b];
        let mut s = [ZERO; 4];
        for (off, wt) in w.iter().enumerate() {
            let v = &f[base + (start + off) * self.strides[b]];
            for g in 0..4 {
                s[g] += v[g] * (wt * METRIC[b]);
            }
        }
        s
    }

    fn apply_node(&self, kern: &OperatorKernel, f: &[CVec4], lin: usize) -> CVec4 {
        let needs: [bool; 4] = std::array::from_fn(|b| (0..4).any(|a| kern.flow[a][b] != 0.0));
        let df: [CVec4; 4] = std::array::from_fn(|b| if needs[b] { self.deriv(f, lin, b) } else { [ZERO; 4] });
        kern.apply_at(&self.k[lin], &f[lin], &df)
    }

    pub fn apply(&self, kern: &OperatorKernel, f: &[CVec4]) -> Vec<CVec4> {
        (0..f.len()).map(|l| self.apply_node(kern, f, l)).collect()
    }

    /// w sum P_g f^g
    pub fn pairing(&self, p: &[CVec4], f: &[CVec4]) -> C64 {
        p.iter().zip(f).fold(ZERO, |acc, (a, b)| acc + (0..4).fold(ZERO, |s, g| s + a[g] * b[g])) * self.grid.weight()
    }

    /// w sum P (K1 u - K2 v) without storing the outer applications.
    fn pairing_difference(&self, p: &[CVec4], k1: &OperatorKernel, u: &[CVec4], k2: &OperatorKernel, v: &[CVec4]) -> C64 {
        let mut s = ZERO;
        for l in 0..p.len() {
            let a = self.apply_node(k1, u, l);
            let b = self.apply_node(k2, v, l);
            s += (0..4).fold(ZERO, |acc, g| acc + p[l][g] * (a[g] - b[g]));
        }
        s * self.grid.weight()
    }
}

/// Analytic d^b of a Gaussian profile component vector.
pub fn profile_derivatives(prof: &GaussianProfile, k: &FourVector, q: &CVec4) -> [CVec4; 4] {
    std::array::from_fn(|b| {
        // d/dk^b of exp(-|k|^2/2w^2 - i k.s) then raise: d^b = g^{bb} d/dk^b
        let fac = C64::new(-k[b] / (prof.width * prof.width), -METRIC[b] * prof.shift[b]) * METRIC[b];
        q.map(|c| c * fac)
    })
}

/// Residual of one refinement level: max over identities of
/// |lattice bracket - G[exact kernel]| / max |G|.
pub fn field_closure_residual(n: usize, half_box: f64, prof: &GaussianProfile) -> f64 {
    let grid = GridSpec::new([n; 4], 2.0 * half_box / n as f64);
    let lat = LatticeSector::new(grid);
    let q = lat.sample(|k| prof.q_at(k));
    let p = lat.sample(|k| prof.p_at(k));
    let ks: Vec<OperatorKernel> = generator_kernels().iter().enumerate().map(|(i, k)| k.scale(lower_sign(i))).collect();
    let kq: Vec<Vec<CVec4>> = ks.iter().map(|k| lat.apply(k, &q)).collect();
    let exact = |kern: &OperatorKernel| -> C64 {
        let f: Vec<CVec4> = lat.k.iter().zip(&q).map(|(k, qv)| kern.apply_at(k, qv, &profile_derivatives(prof, k, qv))).collect();
        lat.pairing(&p, &f)
    };
    let scale = ks.iter().map(|k| exact(k).norm()).fold(f64::MIN_POSITIVE, f64::max);
    kernel_identities()
        .iter()
        .map(|id| {
            // [F, G] = std{G, F} = w P (K_G K_F - K_F K_G) Q
            let (l, r) = (id.left, id.right);
            let lattice = lat.pairing_difference(&p, &ks[r], &kq[l], &ks[l], &kq[r]);
            (lattice - exact(&id.expected)).norm() / scale
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of log residual against log spacing.
    pub order: f64,
    pub min_order: f64,
    pub pass: bool,
}

/// Closure residuals at dims n, 2n, 4n on a fixed box and the fitted order.
/// Nested lattices n0, 2 n0, ... (`levels` of them, at least two) on a fixed box.
pub fn field_refinement(n0: usize, levels: usize, half_box: f64, prof: &GaussianProfile, min_order: f64) -> ConvergenceReport {
    let levels: Vec<usize> = (0..levels.max(2)).map(|i| n0 << i).collect();
    let spacings: Vec<f64> = levels.iter().map(|&n| 2.0 * half_box / n as f64).collect();
    let residuals: Vec<f64> = levels.iter().map(|&n| field_closure_residual(n, half_box, prof)).collect();
    let order = fit_order(&spacings, &residuals);
    ConvergenceReport { spacings, residuals, order, min_order, pass: order >= min_order }
}

pub fn fit_order(h: &[f64], r: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = r.iter().map(|v| v.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{AmplitudeKind, AmplitudeSpec, AmplitudeTarget, ModeLattice};
    use crate::phase::PhaseSpacePoint;

    fn prof() -> GaussianProfile {
        GaussianProfile::from_spec(&AmplitudeSpec { kind: AmplitudeKind::Gaussian, scale: 1.0, width: 1.0, shift: [0.3, -0.2, 0.4, 0.1], target: AmplitudeTarget::Both, seed: 11 })
    }

    #[test]
    fn kernel_algebra_closes_exactly() {
        assert_eq!(kernel_closure_residual(), 0.0);
    }

    #[test]
    fn commutator_is_antisymmetric_and_jacobi() {
        let ks = generator_kernels();
        for a in &ks {
            for b in &ks {
                assert_eq!(a.commutator(b).add(&b.commutator(a)).max_abs_diff(&OperatorKernel::zero()), 0.0);
                for c in &ks {
                    let j = a.commutator(&b.commutator(c)).add(&b.commutator(&c.commutator(a))).add(&c.commutator(&a.commutator(b)));
                    assert!(j.max_abs_diff(&OperatorKernel::zero()) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn kernels_reproduce_field_generators() {
        let spec = AmplitudeSpec { kind: AmplitudeKind::Gaussian, scale: 0.3, width: 1.0, shift: [0.3, -0.2, 0.4, 0.1], target: AmplitudeTarget::Both, seed: 4 };
        let field = ModeLattice::sampled(GridSpec::new([4; 4], 0.5), &spec, false);
        let pt = PhaseSpacePoint { particles: vec![], field: field.clone() };
        let dop = field.derivative_operator();
        let gens = crate::generators::field_generators(&pt, &dop, &pt.state_values());
        let lat = LatticeSector::new(field.grid.clone().unwrap());
        let q: Vec<CVec4> = field.modes.iter().map(|m| m.q).collect();
        let p: Vec<CVec4> = field.modes.iter().map(|m| m.p).collect();
        for (i, k) in generator_kernels().iter().enumerate() {
            let v = lat.pairing(&p, &lat.apply(k, &q));
            let g = if i < 4 { gens.p[i] } else { let (a, b) = M_PAIRS[i - 4]; gens.m[a][b] };
            assert!((v - g).norm() < 1e-12 * (1.0 + g.norm()), "{i}: {v} vs {g}");
        }
    }

    #[test]
    fn analytic_profile_derivative_matches_difference() {
        let pr = prof();
        let k = FourVector::new(0.3, -0.5, 0.2, 0.7);
        let q = pr.q_at(&k);
        let d = profile_derivatives(&pr, &k, &q);
        let h = 1e-6;
        for b in 0..4 {
            let (mut kp, mut km) = (k, k);
            kp[b] += METRIC[b] * h;
            km[b] -= METRIC[b] * h;
            let (qp, qm) = (pr.q_at(&kp), pr.q_at(&km));
            for g in 0..4 {
                assert!(((qp[g] - qm[g]) / (2.0 * h) - d[b][g]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn lattice_residual_converges() {
        let rep = field_refinement(4, 3, 3.0, &prof(), 1.9);
        assert!(rep.residuals.windows(2).all(|w| w[1] < w[0]), "{:?}", rep.residuals);
        assert!(rep.pass, "{rep:?}");
    }
}
