//! Truncated wave-vector lattice carrying the field canonical pairs.
//!
//! Nodes sit on a regular grid in "grid coordinates" u, offset by a fraction
//! of a spacing (half by default). With half-integer offsets the squared
//! Minkowski norm of a node is h^2 (odd^2 - odd^2 - odd^2 - odd^2)/4, and odd
//! squares are 1 mod 8, so no node can land on the null cone. The physical
//! wavevector is k = B u for a Lorentz matrix B (identity until a frame
//! change is applied), which keeps the quadrature weight h^4 unchanged.

use crate::scalar::{Scalar, C64, ZERO};
use crate::tensors::{minkowski_dot, FourVector, LorentzMatrix, METRIC};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type CVec4 = [C64; 4];

pub const CZERO4: CVec4 = [ZERO; 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 4],
    pub spacing: f64,
    /// Node offset in units of the spacing.
    pub offset: f64,
    /// k = basis * u
    pub basis: LorentzMatrix,
}

impl GridSpec {
    pub fn new(dims: [usize; 4], spacing: f64) -> Self {
        GridSpec { dims, spacing, offset: 0.5, basis: LorentzMatrix::identity() }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self) -> f64 {
        self.spacing.powi(4)
    }

    /// Grid coordinate of index `i` along an axis of length `n`.
    pub fn coord(&self, i: usize, n: usize) -> f64 {
        (i as f64 - (n / 2) as f64 + self.offset) * self.spacing
    }

    /// Row-major multi-index of a linear node index (axis 3 fastest).
    pub fn multi_index(&self, mut lin: usize) -> [usize; 4] {
        let mut idx = [0; 4];
        for ax in (0..4).rev() {
            idx[ax] = lin % self.dims[ax];
            lin /= self.dims[ax];
        }
        idx
    }

    pub fn linear_index(&self, idx: [usize; 4]) -> usize {
        idx.iter().zip(self.dims.iter()).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn grid_point(&self, lin: usize) -> FourVector {
        let idx = self.multi_index(lin);
        FourVector(std::array::from_fn(|ax| self.coord(idx[ax], self.dims[ax])))
    }

    pub fn wavevector(&self, lin: usize) -> FourVector {
        self.basis.apply(&self.grid_point(lin))
    }

    /// True when u -> -u maps the node set onto itself.
    pub fn is_symmetric(&self) -> bool {
        self.dims.iter().all(|&n| {
            // coords are (i - n/2 + offset) h; symmetric iff reflection i -> n-1-i negates them
            let c0 = (0.0 - (n / 2) as f64 + self.offset) * self.spacing;
            let cl = ((n - 1) as f64 - (n / 2) as f64 + self.offset) * self.spacing;
            (c0 + cl).abs() < 1e-12 * self.spacing.max(1.0)
        })
    }
}

/// One lattice node with its canonical pair. `q` carries an upper index,
/// `p` a lower one, so that {q^b, p_c} = delta^b_c / weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMode {
    pub k: FourVector,
    pub weight: f64,
    pub q: CVec4,
    pub p: CVec4,
}

/// 1/N(k) = 1 / sqrt(4 pi^3 |k.k|). The modulus is taken so spacelike modes get
/// a real normalization; the sign of k.k is available from the mode itself.
pub fn inv_normalization(k: &FourVector) -> f64 {
    1.0 / (4.0 * PI.powi(3) * minkowski_dot(k, k).abs()).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeLattice {
    pub modes: Vec<FieldMode>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub paired: bool,
}

impl Default for ModeLattice {
    fn default() -> Self {
        ModeLattice::empty()
    }
}

/// Field amplitude initializer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSpec {
    #[serde(default = "default_kind")]
    pub kind: AmplitudeKind,
    /// Overall scale of the amplitudes.
    #[serde(default)]
    pub scale: f64,
    /// Width of the Gaussian envelope in |k| (Euclidean).
    #[serde(default = "default_width")]
    pub width: f64,
    /// Spatial displacement s of the profile phase exp(-i k.s) on the coordinates.
    #[serde(default)]
    pub shift: [f64; 4],
    /// Which member of the canonical pair is populated.
    #[serde(default)]
    pub target: AmplitudeTarget,
    #[serde(default)]
    pub seed: u64,
}

fn default_kind() -> AmplitudeKind {
    AmplitudeKind::Zero
}

fn default_width() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeKind {
    Zero,
    Gaussian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeTarget {
    /// Outgoing amplitudes only: incoming coordinates start at zero.
    #[default]
    Momentum,
    Coordinate,
    Both,
}

impl Default for AmplitudeSpec {
    fn default() -> Self {
        AmplitudeSpec {
            kind: AmplitudeKind::Zero,
            scale: 0.0,
            width: 1.0,
            shift: [0.0; 4],
            target: AmplitudeTarget::Momentum,
            seed: 0,
        }
    }
}

/// Smooth amplitude profile: scale * c * exp(-|k|^2 / (2 width^2)) * exp(-i k.s),
/// with a fixed random complex polarization c per canonical slot.
#[derive(Clone, Debug)]
pub struct GaussianProfile {
    pub scale: f64,
    pub width: f64,
    pub shift: FourVector,
    pub pol_q: CVec4,
    pub pol_p: CVec4,
}

impl GaussianProfile {
    pub fn from_spec(spec: &AmplitudeSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut pol = || -> CVec4 {
            std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        };
        let (mut pq, mut pp) = (pol(), pol());
        match spec.target {
            AmplitudeTarget::Momentum => pq = CZERO4,
            AmplitudeTarget::Coordinate => pp = CZERO4,
            AmplitudeTarget::Both => {}
        }
        if spec.kind == AmplitudeKind::Zero {
            pq = CZERO4;
            pp = CZERO4;
        }
        GaussianProfile { scale: spec.scale, width: spec.width, shift: FourVector(spec.shift), pol_q: pq, pol_p: pp }
    }

    fn envelope(&self, k: &FourVector) -> C64 {
        let e2: f64 = k.0.iter().map(|x| x * x).sum();
        let phase = -minkowski_dot(k, &self.shift);
        C64::from_polar(self.scale * (-e2 / (2.0 * self.width * self.width)).exp(), phase)
    }

    pub fn q_at(&self, k: &FourVector) -> CVec4 {
        let e = self.envelope(k);
        self.pol_q.map(|c| c * e)
    }

    pub fn p_at(&self, k: &FourVector) -> CVec4 {
        let e = self.envelope(k);
        self.pol_p.map(|c| c * e)
    }
}

impl ModeLattice {
    pub fn empty() -> Self {
        ModeLattice { modes: Vec::new(), grid: None, paired: false }
    }

    /// Regular grid with all amplitudes zero.
    pub fn regular(grid: GridSpec) -> Self {
        let w = grid.weight();
        let modes = (0..grid.len())
            .map(|i| FieldMode { k: grid.wavevector(i), weight: w, q: CZERO4, p: CZERO4 })
            .collect();
        ModeLattice { modes, grid: Some(grid), paired: false }
    }

    /// Regular grid sampled from a smooth profile. With `paired` the
    /// amplitudes of -k are forced to the complex conjugates of those at k.
    pub fn sampled(grid: GridSpec, spec: &AmplitudeSpec, paired: bool) -> Self {
        let prof = GaussianProfile::from_spec(spec);
        let mut lat = ModeLattice::regular(grid);
        for m in lat.modes.iter_mut() {
            m.q = prof.q_at(&m.k);
            m.p = prof.p_at(&m.k);
        }
        if paired {
            lat.enforce_pairing();
        }
        lat
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Index of the mode at -k, if present.
    pub fn mirror_of(&self, i: usize) -> Option<usize> {
        let k = self.modes[i].k;
        if let Some(g) = &self.grid {
            if g.is_symmetric() {
                let idx = g.multi_index(i);
                let refl = std::array::from_fn(|ax| g.dims[ax] - 1 - idx[ax]);
                return Some(g.linear_index(refl));
            }
        }
        let scale = k.norm_inf().max(1e-300);
        self.modes.iter().position(|m| (m.k + k).norm_inf() <= 1e-10 * scale)
    }

    /// Sets amplitudes at -k to the conjugates of those at k for the first
    /// member of every mirror pair.
    pub fn enforce_pairing(&mut self) {
        for i in 0..self.modes.len() {
            if let Some(j) = self.mirror_of(i) {
                if j > i {
                    let (q, p) = (self.modes[i].q, self.modes[i].p);
                    self.modes[j].q = q.map(|c| c.conj());
                    self.modes[j].p = p.map(|c| c.conj());
                }
            }
        }
        self.paired = true;
    }

    pub fn null_cone_violation(&self) -> Option<usize> {
        self.modes.iter().position(|m| {
            let kk = minkowski_dot(&m.k, &m.k);
            kk.abs() <= 1e-12 * m.k.0.iter().map(|x| x * x).sum::<f64>().max(1e-300)
        })
    }

    pub fn duplicate_wavevector(&self) -> Option<(usize, usize)> {
        for i in 0..self.modes.len() {
            for j in (i + 1)..self.modes.len() {
                let s = self.modes[i].k.norm_inf().max(self.modes[j].k.norm_inf()).max(1e-300);
                if (self.modes[i].k - self.modes[j].k).norm_inf() <= 1e-12 * s {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Stencil operator for d/dk_alpha on this lattice (empty without a grid).
    pub fn derivative_operator(&self) -> DerivativeOperator {
        match &self.grid {
            Some(g) => DerivativeOperator::build(g),
            None => DerivativeOperator { rows: vec![[Vec::new(), Vec::new(), Vec::new(), Vec::new()]; self.modes.len()] },
        }
    }
}

/// First-derivative finite-difference weights at `x0` from nodes `xs`
/// (Fornberg's recursion, derivative order 1).
pub fn fornberg_first_derivative(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let m = 1usize;
    let mut c = vec![vec![vec![0.0; n]; n]; m + 1];
    c[0][0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            for k in 0..=m.min(i) {
                let prev_k = if k > 0 { c[k - 1][i - 1][j] } else { 0.0 };
                c[k][i][j] = ((xs[i] - x0) * c[k][i - 1][j] - k as f64 * prev_k) / c3;
            }
        }
        for k in 0..=m.min(i) {
            let prev_k = if k > 0 { c[k - 1][i - 1][i - 1] } else { 0.0 };
            c[k][i][i] = c1 / c2 * (k as f64 * prev_k - (xs[i - 1] - x0) * c[k][i - 1][i - 1]);
        }
        c1 = c2;
    }
    (0..n).map(|j| c[m][n - 1][j]).collect()
}

/// Per node and per lower index alpha, the list of (node, weight) pairs
/// realizing d/dk_alpha.
#[derive(Clone, Debug)]
pub struct DerivativeOperator {
    pub rows: Vec<[Vec<(usize, f64)>; 4]>,
}

/// Maximum number of points per axis: 5 gives fourth order in the interior.
pub const STENCIL_POINTS: usize = 5;

impl DerivativeOperator {
    pub fn build(g: &GridSpec) -> Self {
        let n = g.len();
        // d/du^nu stencils along each axis
        let mut axis_rows: Vec<[Vec<(usize, f64)>; 4]> = vec![Default::default(); n];
        for (lin, row) in axis_rows.iter_mut().enumerate() {
            let idx = g.multi_index(lin);
            for ax in 0..4 {
                let len = g.dims[ax];
                if len < 2 {
                    continue;
                }
                let npts = STENCIL_POINTS.min(len);
                let start = idx[ax].saturating_sub(npts / 2).min(len - npts);
                let xs: Vec<f64> = (start..start + npts).map(|i| g.coord(i, len)).collect();
                let w = fornberg_first_derivative(g.coord(idx[ax], len), &xs);
                for (off, wt) in w.into_iter().enumerate() {
                    let mut j = idx;
                    j[ax] = start + off;
                    row[ax].push((g.linear_index(j), wt));
                }
            }
        }
        // d/dk_alpha = sum_nu (B^{-1})^nu_alpha' g^{alpha' alpha} d/du^nu
        let binv = g.basis.inverse();
        let rows = axis_rows
            .into_iter()
            .map(|ar| {
                std::array::from_fn(|alpha| {
                    let mut acc: Vec<(usize, f64)> = Vec::new();
                    for (nu, stencil) in ar.iter().enumerate() {
                        let jac = binv.0[nu][alpha] * METRIC[alpha];
                        if jac == 0.0 {
                            continue;
                        }
                        for &(node, wt) in stencil {
                            match acc.iter_mut().find(|(m, _)| *m == node) {
                                Some(e) => e.1 += jac * wt,
                                None => acc.push((node, jac * wt)),
                            }
                        }
                    }
                    acc
                })
            })
            .collect();
        DerivativeOperator { rows }
    }

    /// d f / d k_alpha at node `m` for a lattice function given by `f(node)`.
    pub fn apply<S: Scalar>(&self, m: usize, alpha: usize, f: impl Fn(usize) -> S) -> S {
        self.rows[m][alpha]
            .iter()
            .fold(S::zero(), |acc, &(node, w)| acc + f(node).scale_re(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_five_point() {
        let w = fornberg_first_derivative(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fornberg_two_point() {
        let w = fornberg_first_derivative(0.5, &[0.0, 1.0]);
        assert!((w[0] + 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_offset_grid_avoids_null_cone() {
        for dims in [[2, 2, 2, 2], [3, 3, 3, 3], [4, 2, 3, 5]] {
            let lat = ModeLattice::regular(GridSpec::new(dims, 0.7));
            assert_eq!(lat.null_cone_violation(), None);
            assert_eq!(lat.duplicate_wavevector(), None);
        }
    }

    #[test]
    fn even_grid_is_mirror_symmetric() {
        let lat = ModeLattice::regular(GridSpec::new([2, 4, 2, 2], 0.5));
        for i in 0..lat.len() {
            let j = lat.mirror_of(i).unwrap();
            assert!((lat.modes[i].k + lat.modes[j].k).norm_inf() < 1e-14);
        }
    }

    #[test]
    fn stencil_differentiates_quadratics_exactly() {
        // Along axis 1 with 6 nodes: d/dk_1 of (k^1)^2 = g_{11} d/dk^1 = -2 k^1.
        let g = GridSpec::new([1, 6, 1, 1], 0.3);
        let lat = ModeLattice::regular(g);
        let op = lat.derivative_operator();
        for m in 0..lat.len() {
            let d: C64 = op.apply(m, 1, |n| C64::new(lat.modes[n].k[1].powi(2), 0.0));
            assert!((d.re + 2.0 * lat.modes[m].k[1]).abs() < 1e-12, "node {m}: {d}");
        }
    }

    #[test]
    fn pairing_conjugates_mirror_amplitudes() {
        let spec = AmplitudeSpec { kind: AmplitudeKind::Gaussian, scale: 1.0, target: AmplitudeTarget::Both, seed: 3, ..Default::default() };
        let lat = ModeLattice::sampled(GridSpec::new([2, 2, 2, 2], 0.4), &spec, true);
        for i in 0..lat.len() {
            let j = lat.mirror_of(i).unwrap();
            for mu in 0..4 {
                assert_eq!(lat.modes[j].q[mu], lat.modes[i].q[mu].conj());
            }
        }
    }
}
