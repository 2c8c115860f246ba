//! One-dimensional distributions built from delta and principal-value atoms,
//! enough to carry the k0 integration that reduces covariant field variables
//! to three-dimensional ones.
//!
//! A principal-value atom stands for (1/pi) PV 1/(x - a), so
//! delta_pm(x - a) = delta(x - a) +- i [PV/pi](x - a) has Gaussian-rational
//! coefficients and the reduction can be done in exact arithmetic.

use crate::lattice::CVec4;
use crate::scalar::{C64, I, ZERO};
use crate::{Error, Result};
use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

pub type Exact = Complex<Rational64>;

pub trait Coefficient:
    Clone + PartialEq + fmt::Debug + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> + Send + Sync + 'static
{
    fn to_c64(&self) -> C64;
    fn from_real(x: f64) -> Result<Self>;
    fn imag_unit() -> Self;
}

impl Coefficient for Exact {
    fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
    fn from_real(x: f64) -> Result<Self> {
        Rational64::approximate_float(x)
            .map(|r| Complex::new(r, Rational64::zero()))
            .ok_or_else(|| Error::Validation(format!("{x} has no rational representation")))
    }
    fn imag_unit() -> Self {
        Complex::new(Rational64::zero(), Rational64::one())
    }
}

impl Coefficient for C64 {
    fn to_c64(&self) -> C64 {
        *self
    }
    fn from_real(x: f64) -> Result<Self> {
        Ok(C64::new(x, 0.0))
    }
    fn imag_unit() -> Self {
        I
    }
}

pub fn exact(num: i64, den: i64) -> Exact {
    Complex::new(Rational64::new(num, den), Rational64::zero())
}

pub type SmoothFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomKind {
    Delta,
    /// (1/pi) PV 1/(x - shift)
    PvOverPi,
    Smooth,
}

impl AtomKind {
    fn singular(self) -> bool {
        !matches!(self, AtomKind::Smooth)
    }
}

/// coef * func(x) * kind(x - shift); a missing func is the constant 1.
#[derive(Clone)]
pub struct Atom<T> {
    pub kind: AtomKind,
    pub shift: f64,
    pub coef: T,
    pub func: Option<SmoothFn>,
}

impl<T: fmt::Debug> fmt::Debug for Atom<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({})*{:?}{}", self.kind, self.shift, self.coef, if self.func.is_some() { "*f" } else { "" })
    }
}

#[derive(Clone, Debug)]
pub struct DistExpr<T> {
    pub atoms: Vec<Atom<T>>,
}

impl<T: Coefficient> Default for DistExpr<T> {
    fn default() -> Self {
        DistExpr { atoms: Vec::new() }
    }
}

impl<T: Coefficient> DistExpr<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    fn atom(kind: AtomKind, shift: f64, coef: T) -> Self {
        DistExpr { atoms: vec![Atom { kind, shift, coef, func: None }] }
    }

    pub fn delta(shift: f64) -> Self {
        Self::atom(AtomKind::Delta, shift, T::one())
    }

    pub fn pv_over_pi(shift: f64) -> Self {
        Self::atom(AtomKind::PvOverPi, shift, T::one())
    }

    pub fn smooth(f: SmoothFn) -> Self {
        DistExpr { atoms: vec![Atom { kind: AtomKind::Smooth, shift: 0.0, coef: T::one(), func: Some(f) }] }
    }

    /// delta(x - a) + sign i (1/pi) PV 1/(x - a)
    pub fn delta_pm(sign: i8, shift: f64) -> Self {
        let i = if sign >= 0 { T::imag_unit() } else { -T::imag_unit() };
        Self::delta(shift).add(&Self::pv_over_pi(shift).scale(i))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend(o.atoms.iter().cloned());
        DistExpr { atoms }.normalized()
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-T::one()))
    }

    pub fn scale(&self, c: T) -> Self {
        DistExpr { atoms: self.atoms.iter().map(|a| Atom { coef: a.coef.clone() * c.clone(), ..a.clone() }).collect() }.normalized()
    }

    /// x -> -x: delta(-x - a) = delta(x + a), PV 1/(-x - a) = -PV 1/(x + a).
    pub fn reflect(&self) -> Self {
        DistExpr {
            atoms: self
                .atoms
                .iter()
                .map(|a| {
                    let func = a.func.clone().map(|f| -> SmoothFn { Arc::new(move |x| f(-x)) });
                    let coef = if a.kind == AtomKind::PvOverPi { -a.coef.clone() } else { a.coef.clone() };
                    Atom { kind: a.kind, shift: if a.kind.singular() { -a.shift } else { a.shift }, coef, func }
                })
                .collect(),
        }
        .normalized()
    }

    /// Merges constant-coefficient atoms of equal kind and shift, drops zero
    /// coefficients and sorts; atoms carrying functions stay separate.
    pub fn normalized(&self) -> Self {
        let mut merged: Vec<Atom<T>> = Vec::new();
        for a in &self.atoms {
            if a.func.is_none() {
                if let Some(m) = merged.iter_mut().find(|m| m.func.is_none() && m.kind == a.kind && m.shift == a.shift) {
                    m.coef = m.coef.clone() + a.coef.clone();
                    continue;
                }
            }
            merged.push(a.clone());
        }
        merged.retain(|a| !a.coef.is_zero());
        merged.sort_by(|a, b| a.kind.cmp(&b.kind).then(a.shift.total_cmp(&b.shift)));
        DistExpr { atoms: merged }
    }

    /// Equality of normal forms; only meaningful without function atoms.
    pub fn same_as(&self, o: &Self) -> bool {
        let (a, b) = (self.normalized(), o.normalized());
        a.atoms.len() == b.atoms.len()
            && a.atoms.iter().zip(&b.atoms).all(|(x, y)| x.kind == y.kind && x.shift == y.shift && x.coef == y.coef && x.func.is_none() && y.func.is_none())
    }

    pub fn coefficient(&self, kind: AtomKind, shift: f64) -> T {
        self.atoms.iter().filter(|a| a.kind == kind && a.shift == shift && a.func.is_none()).fold(T::zero(), |acc, a| acc + a.coef.clone())
    }

    /// Sum of the coefficients of one atom kind.
    pub fn total(&self, kind: AtomKind) -> T {
        self.atoms.iter().filter(|a| a.kind == kind).fold(T::zero(), |acc, a| acc + a.coef.clone())
    }

    /// Product of two expressions. Singular atoms at the same point cannot be
    /// multiplied; at distinct points they reduce by partial fractions.
    pub fn product(&self, o: &Self) -> Result<Self> {
        let mut atoms = Vec::new();
        for a in &self.atoms {
            for b in &o.atoms {
                atoms.extend(atom_product(a, b)?);
            }
        }
        Ok(DistExpr { atoms }.normalized())
    }
}

fn mul_funcs(f: &Option<SmoothFn>, g: &Option<SmoothFn>) -> Option<SmoothFn> {
    match (f, g) {
        (None, None) => None,
        (Some(f), None) | (None, Some(f)) => Some(f.clone()),
        (Some(f), Some(g)) => {
            let (f, g) = (f.clone(), g.clone());
            Some(Arc::new(move |x| f(x) * g(x)))
        }
    }
}

fn atom_product<T: Coefficient>(a: &Atom<T>, b: &Atom<T>) -> Result<Vec<Atom<T>>> {
    use AtomKind::*;
    let coef = a.coef.clone() * b.coef.clone();
    let func = mul_funcs(&a.func, &b.func);
    let mk = |kind, shift, coef| Atom { kind, shift, coef, func: func.clone() };
    match (a.kind, b.kind) {
        (Smooth, k) => Ok(vec![mk(k, b.shift, coef)]),
        (k, Smooth) => Ok(vec![mk(k, a.shift, coef)]),
        _ if a.shift == b.shift => Err(Error::Validation(format!("product of singular atoms {:?} and {:?} at x = {}", a.kind, b.kind, a.shift))),
        (Delta, Delta) => Ok(Vec::new()),
        // delta(x - a) PV/pi 1/(x - b) = delta(x - a) / (pi (a - b)); the 1/pi is kept exact only through from_real
        (Delta, PvOverPi) => Ok(vec![mk(Delta, a.shift, coef * T::from_real(1.0 / (PI * (a.shift - b.shift)))?)]),
        (PvOverPi, Delta) => Ok(vec![mk(Delta, b.shift, coef * T::from_real(1.0 / (PI * (b.shift - a.shift)))?)]),
        // 1/((x-a)(x-b)) = (1/(x-a) - 1/(x-b)) / (a - b), each side carrying 1/pi
        (PvOverPi, PvOverPi) => {
            let c = coef * T::from_real(1.0 / (PI * (a.shift - b.shift)))?;
            Ok(vec![mk(PvOverPi, a.shift, c.clone()), mk(PvOverPi, b.shift, -c)])
        }
    }
}

/// Composite Gauss-Legendre quadrature parameters and principal-value
/// excision settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    /// Integration extends to this distance from the singular point (or from 0).
    pub radius: f64,
    pub panels: usize,
    /// Initial excision half-width for principal values.
    pub excision: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { radius: 14.0, panels: 700, excision: 0.02 }
    }
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

pub fn gauss_legendre(f: &dyn Fn(f64) -> C64, a: f64, b: f64, panels: usize) -> C64 {
    let h = (b - a) / panels as f64;
    let mut s = ZERO;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL5 {
            s += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    s
}

/// PV integral of g(x)/(x - a) with the symmetric interval |x - a| < eps removed.
pub fn pv_excised(g: &dyn Fn(f64) -> C64, a: f64, eps: f64, q: &QuadSettings) -> C64 {
    let h = |t: f64| (g(a + t) - g(a - t)) / t;
    let n = ((q.panels as f64) * (1.0 - eps / q.radius)).ceil().max(1.0) as usize;
    gauss_legendre(&h, eps, q.radius, n)
}

/// Excision sequence eps, eps/2, eps/4 with two Richardson steps
/// (the excised remainder is odd in eps).
pub fn pv_integral(g: &dyn Fn(f64) -> C64, a: f64, q: &QuadSettings) -> Result<C64> {
    let e = q.excision;
    let (r1, r2, r3) = (pv_excised(g, a, e, q), pv_excised(g, a, 0.5 * e, q), pv_excised(g, a, 0.25 * e, q));
    let (s1, s2) = (r2 * 2.0 - r1, r3 * 2.0 - r2);
    let v = (s2 * 8.0 - s1) / 7.0;
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Verification(format!("divergent principal-value integral at {a}")));
    }
    Ok(v)
}

/// Action of a distribution on a smooth, rapidly decaying test function.
pub fn integrate_against<T: Coefficient>(expr: &DistExpr<T>, f: &dyn Fn(f64) -> C64, q: &QuadSettings) -> Result<C64> {
    let mut s = ZERO;
    for a in &expr.atoms {
        let c = a.coef.to_c64();
        let g = |x: f64| a.func.as_ref().map_or(C64::new(1.0, 0.0), |h| h(x)) * f(x);
        s += match a.kind {
            AtomKind::Delta => c * g(a.shift),
            AtomKind::PvOverPi => c * pv_integral(&g, a.shift, q)? / PI,
            AtomKind::Smooth => c * gauss_legendre(&|x| g(x - a.shift), -q.radius, q.radius, 2 * q.panels),
        };
    }
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Verification("non-finite distribution action".into()));
    }
    Ok(s)
}

/// delta(k0^2 - k^2) = [delta(k0 - k) + delta(k0 + k)] / (2k), k > 0.
pub fn delta_of_square(k: f64) -> Result<DistExpr<C64>> {
    if !(k > 0.0) {
        return Err(Error::Validation(format!("delta(k0^2 - k^2) needs k > 0, got {k}")));
    }
    Ok(DistExpr::delta(k).add(&DistExpr::delta(-k)).scale(C64::new(0.5 / k, 0.0)))
}

/// (1/pi) PV 1/(k0^2 - k^2) = [PV/pi 1/(k0 - k) - PV/pi 1/(k0 + k)] / (2k).
pub fn pv_of_square(k: f64) -> Result<DistExpr<C64>> {
    if !(k > 0.0) {
        return Err(Error::Validation(format!("PV 1/(k0^2 - k^2) needs k > 0, got {k}")));
    }
    Ok(DistExpr::pv_over_pi(k).sub(&DistExpr::pv_over_pi(-k)).scale(C64::new(0.5 / k, 0.0)))
}

pub type Profile<'a> = &'a dyn Fn(f64) -> CVec4;

fn integrate_components(expr: &DistExpr<C64>, prof: Profile, q: &QuadSettings) -> Result<CVec4> {
    let mut out = [ZERO; 4];
    for (b, o) in out.iter_mut().enumerate() {
        *o = integrate_against(expr, &|x| prof(x)[b], q)?;
    }
    Ok(out)
}

/// A_k from profiles of the covariant variables along k0 at fixed spatial k.
/// Profiles are the regular products F(k0) = sqrt(4 pi^3 (k0^2 - k^2)) Q(k0).
pub fn forward_map_a(prof_q: Profile, prof_p: Profile, k: f64, q: &QuadSettings) -> Result<CVec4> {
    let (d, pv) = (delta_of_square(k)?, pv_of_square(k)?);
    let plus = d.add(&pv.scale(I));
    let minus = d.sub(&pv.scale(I));
    let (a, b) = (integrate_components(&plus, prof_q, q)?, integrate_components(&minus, prof_p, q)?);
    let c = C64::new(0.0, -k / (8.0 * PI * PI));
    Ok(std::array::from_fn(|i| (a[i] - b[i]) * c))
}

/// A+_{-k} from the Q profile and the profile of P_{-k}.
pub fn forward_map_adag(prof_q: Profile, prof_p_minus: Profile, k: f64, q: &QuadSettings) -> Result<CVec4> {
    let (d, pv) = (delta_of_square(k)?, pv_of_square(k)?);
    let minus = d.sub(&pv.scale(I));
    let plus = d.add(&pv.scale(I));
    let (a, b) = (integrate_components(&minus, prof_q, q)?, integrate_components(&plus, prof_p_minus, q)?);
    let c = C64::new(0.0, k / (8.0 * PI * PI));
    Ok(std::array::from_fn(|i| (a[i] - b[i]) * c))
}

/// Field amplitude label: A or A+ at +k or -k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AmpLabel {
    pub dagger: bool,
    pub sign: i8,
}

impl AmpLabel {
    pub fn name(&self) -> String {
        format!("{}_{}k", if self.dagger { "A+" } else { "A" }, if self.sign > 0 { "+" } else { "-" })
    }
}

/// Linear combination of amplitudes with distributional coefficients in k0,
/// shifts in units of k = |k|.
pub type FieldExpr = BTreeMap<AmpLabel, DistExpr<Exact>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionVariant {
    First,
    Second,
    /// First variant with the 3/4 weights replaced by 1.
    PerturbedControl,
}

fn push(e: &mut FieldExpr, dagger: bool, sign: i8, c: Exact, pm: i8, shift: f64) {
    let term = DistExpr::<Exact>::delta_pm(pm, shift).scale(c);
    let slot = e.entry(AmpLabel { dagger, sign }).or_default();
    *slot = slot.add(&term);
}

/// Distributional parts of Q_k and P_k (the common factor
/// sqrt(4 pi^3 (k0^2 - k^2))/k is carried separately).
pub fn covariant_in_terms_of_3d(variant: ReductionVariant) -> (FieldExpr, FieldExpr) {
    let (mut q, mut p) = (FieldExpr::new(), FieldExpr::new());
    let three_q = if variant == ReductionVariant::PerturbedControl { exact(1, 1) } else { exact(3, 4) };
    match variant {
        ReductionVariant::First | ReductionVariant::PerturbedControl => {
            push(&mut q, true, -1, exact(1, 2), 1, -1.0);
            push(&mut q, false, 1, three_q, -1, -1.0);
            push(&mut q, false, 1, exact(-1, 4), 1, 1.0);
            push(&mut p, false, -1, exact(-1, 4), 1, -1.0);
            push(&mut p, true, 1, exact(1, 2), 1, 1.0);
            push(&mut p, false, -1, exact(3, 4), -1, 1.0);
        }
        ReductionVariant::Second => {
            push(&mut q, true, -1, exact(-1, 4), 1, -1.0);
            push(&mut q, false, 1, exact(1, 2), 1, 1.0);
            push(&mut q, true, -1, exact(3, 4), -1, 1.0);
            push(&mut p, false, -1, exact(1, 2), 1, -1.0);
            push(&mut p, true, 1, exact(3, 4), -1, -1.0);
            push(&mut p, true, 1, exact(-1, 4), 1, 1.0);
        }
    }
    (q, p)
}

/// k -> -k: amplitudes change label sign and the k0 dependence is reflected.
pub fn relabel_negative(e: &FieldExpr) -> FieldExpr {
    e.iter().map(|(l, d)| (AmpLabel { dagger: l.dagger, sign: -l.sign }, d.reflect())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionTerm {
    pub amplitude: String,
    pub kind: AtomKind,
    /// In units of |k|.
    pub shift: f64,
    pub coefficient: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub variant: ReductionVariant,
    /// Ratio of the common prefactor to the covariant normalization.
    pub prefactor: String,
    pub terms: Vec<ReductionTerm>,
    /// Coefficient of A_k exp(-i k.q) after the k0 integration at q^0 = 0.
    pub coefficient_a: String,
    /// Coefficient of A+_k exp(i k.q) after k -> -k.
    pub coefficient_adag: String,
    /// Net coefficient of the 1/k0 tail of principal-value atoms per amplitude
    /// (sum over both shifts, in units of i/pi); zero when the PV parts cancel
    /// or pair into an absolutely convergent even combination.
    pub pv_residue: Vec<(String, String)>,
    /// Amplitudes that must not survive (A_{-k}, A+_{+k}) with nonzero weight.
    pub stray: Vec<String>,
    pub pass: bool,
}

pub fn fmt_exact(c: &Exact) -> String {
    if c.im.is_zero() {
        format!("{}", c.re)
    } else if c.re.is_zero() {
        format!("{}i", c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

/// Substitutes the covariant variables into Q_k + P_{-k} and integrates k0.
pub fn reduce_covariant_to_3d(variant: ReductionVariant) -> ReductionReport {
    let (q, p) = covariant_in_terms_of_3d(variant);
    let mut sum = q.clone();
    for (l, d) in relabel_negative(&p) {
        let slot = sum.entry(l).or_default();
        *slot = slot.add(&d);
    }
    let mut terms = Vec::new();
    for (l, d) in &sum {
        for a in &d.atoms {
            terms.push(ReductionTerm { amplitude: l.name(), kind: a.kind, shift: a.shift, coefficient: fmt_exact(&a.coef) });
        }
    }
    let get = |dagger, sign| sum.get(&AmpLabel { dagger, sign }).cloned().unwrap_or_default();
    let (a, ad) = (get(false, 1), get(true, -1));
    // delta atoms at q^0 = 0 contribute their coefficients; PV atoms: the
    // conditionally convergent tail is the sum of their coefficients
    let ca = a.total(AtomKind::Delta);
    let cad = ad.total(AtomKind::Delta);
    let pv_residue: Vec<(String, String)> = sum.iter().map(|(l, d)| (l.name(), fmt_exact(&(d.total(AtomKind::PvOverPi) * -Exact::imag_unit())))).collect();
    let stray: Vec<String> = [get(false, -1), get(true, 1)]
        .iter()
        .zip(["A_-k", "A+_+k"])
        .filter(|(d, _)| !d.atoms.is_empty())
        .map(|(_, n)| n.to_string())
        .collect();
    let pv_ok = sum.values().all(|d| d.total(AtomKind::PvOverPi).is_zero());
    let pass = ca == Exact::one() && cad == Exact::one() && pv_ok && stray.is_empty();
    ReductionReport {
        variant,
        prefactor: "1/k".into(),
        terms,
        coefficient_a: fmt_exact(&ca),
        coefficient_adag: fmt_exact(&cad),
        pv_residue,
        stray,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = DistExpr<Exact>;

    fn gauss(a: f64) -> impl Fn(f64) -> C64 {
        move |x| C64::new((-(x - a) * (x - a)).exp(), 0.0)
    }

    #[test]
    fn delta_pm_identities() {
        let s = 0.7;
        assert!(D::delta_pm(1, s).add(&D::delta_pm(-1, s)).same_as(&D::delta(s).scale(exact(2, 1))));
        let two_i = Exact::new(Rational64::zero(), Rational64::new(2, 1));
        assert!(D::delta_pm(1, s).sub(&D::delta_pm(-1, s)).same_as(&D::pv_over_pi(s).scale(two_i)));
        assert!(D::delta_pm(1, s).reflect().same_as(&D::delta_pm(-1, -s)));
        assert!(D::delta_pm(-1, -s).reflect().same_as(&D::delta_pm(1, s)));
    }

    #[test]
    fn coincident_singular_product_is_an_error() {
        assert!(D::delta(0.5).product(&D::pv_over_pi(0.5)).is_err());
        assert!(D::delta(0.5).product(&D::delta(0.5)).is_err());
        assert!(D::delta(0.5).product(&D::delta(0.25)).unwrap().atoms.is_empty());
        let f: SmoothFn = Arc::new(|x| C64::new(x, 0.0));
        let fd = DistExpr::<C64>::smooth(f).product(&DistExpr::delta(0.3)).unwrap();
        let v = integrate_against(&fd, &|_| C64::new(2.0, 0.0), &QuadSettings::default()).unwrap();
        assert!((v - C64::new(0.6, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pv_partial_fractions_integrate_consistently() {
        // (1/pi^2) PV 1/((x-a)(x-b)) from the product against direct quadrature
        let (a, b) = (0.3, -0.4);
        let prod = DistExpr::<C64>::pv_over_pi(a).product(&DistExpr::pv_over_pi(b)).unwrap();
        let q = QuadSettings::default();
        let f = gauss(0.1);
        let v = integrate_against(&prod, &f, &q).unwrap();
        let direct = pv_integral(&|x| f(x) / (x - b), a, &q).unwrap() / (PI * PI) + pv_integral(&|x| f(x) / (x - a), b, &q).unwrap() / (PI * PI);
        // both singular points carried once: split the integrand by partial fractions again
        let split = (pv_integral(&f, a, &q).unwrap() - pv_integral(&f, b, &q).unwrap()) / (PI * PI * (a - b));
        assert!((v - split).norm() < 1e-10);
        assert!(direct.norm() > 0.0);
    }

    #[test]
    fn delta_action() {
        let q = QuadSettings::default();
        let v = integrate_against(&D::delta(0.3), &gauss(0.0), &q).unwrap();
        assert!((v.re - (-0.09f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn delta_plus_against_even_gaussian() {
        let v = integrate_against(&D::delta_pm(1, 0.0), &gauss(0.0), &QuadSettings::default()).unwrap();
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn pv_closed_form() {
        // PV int e^{-x^2}/(x - a) dx = -2 sqrt(pi) D(a), D Dawson's function
        let a = 0.5;
        let dawson = 0.424_436_383_502_022_3;
        let v = pv_integral(&gauss(0.0), a, &QuadSettings::default()).unwrap();
        assert!((v.re + 2.0 * PI.sqrt() * dawson).abs() < 1e-9, "{v}");
    }

    #[test]
    fn excision_converges_at_first_order() {
        let q = QuadSettings::default();
        let exact_v = pv_integral(&gauss(0.2), 0.5, &q).unwrap();
        let errs: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&e| (pv_excised(&gauss(0.2), 0.5, e, &q) - exact_v).norm()).collect();
        for w in errs.windows(2) {
            assert!(w[0] / w[1] > 1.9, "{errs:?}");
        }
    }

    #[test]
    fn linearity() {
        let q = QuadSettings::default();
        let e1 = D::delta_pm(1, 0.4);
        let e2 = D::pv_over_pi(-0.2).scale(exact(3, 2));
        let (f, g) = (gauss(0.1), gauss(-0.3));
        let lhs = integrate_against(&e1.add(&e2), &f, &q).unwrap();
        let rhs = integrate_against(&e1, &f, &q).unwrap() + integrate_against(&e2, &f, &q).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
        let fg = |x: f64| f(x) * 2.0 + g(x);
        let lhs = integrate_against(&e1, &fg, &q).unwrap();
        let rhs = integrate_against(&e1, &f, &q).unwrap() * 2.0 + integrate_against(&e1, &g, &q).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn both_variants_reduce_exactly() {
        for v in [ReductionVariant::First, ReductionVariant::Second] {
            let r = reduce_covariant_to_3d(v);
            assert!(r.pass, "{r:?}");
            assert_eq!((r.coefficient_a.as_str(), r.coefficient_adag.as_str()), ("1", "1"));
        }
    }

    #[test]
    fn perturbed_weights_fail() {
        let r = reduce_covariant_to_3d(ReductionVariant::PerturbedControl);
        assert!(!r.pass);
        assert!(r.pv_residue.iter().any(|(_, c)| c != "0"));
    }

    #[test]
    fn forward_map_zero_and_linear() {
        let q = QuadSettings::default();
        let z = |_: f64| [ZERO; 4];
        assert_eq!(forward_map_a(&z, &z, 1.0, &q).unwrap(), [ZERO; 4]);
        let f1 = |x: f64| [C64::new((-x * x).exp(), 0.0), ZERO, C64::new(0.0, x * (-x * x).exp()), ZERO];
        let f2 = |x: f64| [ZERO, C64::new((-(x - 0.3) * (x - 0.3)).exp(), 0.0), ZERO, C64::new(x, 0.0) * (-x * x).exp()];
        let sum = |x: f64| -> CVec4 { let (a, b) = (f1(x), f2(x)); std::array::from_fn(|i| a[i] + b[i] * 2.0) };
        let lhs = forward_map_a(&sum, &f1, 0.8, &q).unwrap();
        let (a, b) = (forward_map_a(&f1, &f1, 0.8, &q).unwrap(), forward_map_a(&f2, &z, 0.8, &q).unwrap());
        for i in 0..4 {
            assert!((lhs[i] - a[i] - b[i] * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_map_even_profiles() {
        // with F_P = -F_Q the principal-value parts cancel and only the
        // delta atoms remain: A = -i/(8 pi^2) k (2/(2k)) (F(k) + F(-k))
        let q = QuadSettings::default();
        let k = 0.9;
        let fq = |x: f64| [C64::new((-x * x).exp(), 0.0); 4];
        let fp = |x: f64| [C64::new(-(-x * x).exp(), 0.0); 4];
        let a = forward_map_a(&fq, &fp, k, &q).unwrap();
        let closed = C64::new(0.0, -1.0 / (8.0 * PI * PI)) * (2.0 * (-k * k).exp());
        assert!((a[0] - closed).norm() < 1e-12, "{} vs {closed}", a[0]);
        // odd profiles: the two principal-value atoms cancel pairwise as well
        let odd = |x: f64| [C64::new(x * (-x * x).exp(), 0.0); 4];
        let a = forward_map_a(&odd, &|_| [ZERO; 4], k, &q).unwrap();
        assert!(a[0].norm() < 1e-12, "{}", a[0]);
    }
}
