//! Scalar abstraction shared by plain complex evaluation and forward-mode
//! differentiation.
//!
//! Every phase-space functional in this crate is written once against
//! [`Scalar`]. Evaluating it with [`C64`] gives the value; evaluating it with
//! [`Jet`] gives the value together with the full gradient with respect to the
//! canonical coordinates, which is what the Poisson bracket engine consumes.
//! All functions involved are holomorphic in the canonical variables, so the
//! complex derivative is well defined.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub use num_complex::Complex64 as C64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub trait Scalar:
    Clone
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(c: C64) -> Self;
    fn value(&self) -> C64;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn scale(&self, c: C64) -> Self;

    fn real(x: f64) -> Self {
        Self::cst(C64::new(x, 0.0))
    }
    fn zero() -> Self {
        Self::cst(ZERO)
    }
    fn one() -> Self {
        Self::cst(ONE)
    }
    fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }
    fn powi2(&self) -> Self {
        self.clone() * self.clone()
    }
}

impl Scalar for C64 {
    fn cst(c: C64) -> Self {
        c
    }
    fn value(&self) -> C64 {
        *self
    }
    fn exp(&self) -> Self {
        C64::exp(*self)
    }
    fn sqrt(&self) -> Self {
        C64::sqrt(*self)
    }
    fn scale(&self, c: C64) -> Self {
        self * c
    }
}

/// Value plus dense gradient. An empty gradient stands for a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub v: C64,
    pub d: Vec<C64>,
}

impl Jet {
    /// Independent variable number `index` out of `n`.
    pub fn var(v: C64, index: usize, n: usize) -> Self {
        let mut d = vec![ZERO; n];
        d[index] = ONE;
        Jet { v, d }
    }

    pub fn grad(&self, n: usize) -> Vec<C64> {
        if self.d.is_empty() {
            vec![ZERO; n]
        } else {
            self.d.clone()
        }
    }

    fn zip(a: &[C64], b: &[C64], f: impl Fn(C64, C64) -> C64) -> Vec<C64> {
        match (a.is_empty(), b.is_empty()) {
            (true, true) => Vec::new(),
            (false, true) => a.iter().map(|&x| f(x, ZERO)).collect(),
            (true, false) => b.iter().map(|&y| f(ZERO, y)).collect(),
            (false, false) => a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect(),
        }
    }

    fn chain(&self, v: C64, dv: C64) -> Jet {
        Jet {
            v,
            d: self.d.iter().map(|&x| x * dv).collect(),
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d: Jet::zip(&self.d, &o.d, |a, b| a + b),
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            v: self.v - o.v,
            d: Jet::zip(&self.d, &o.d, |a, b| a - b),
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self.v, o.v);
        Jet {
            v: a * b,
            d: Jet::zip(&self.d, &o.d, |da, db| da * b + a * db),
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let (a, b) = (self.v, o.v);
        let inv = ONE / b;
        Jet {
            v: a * inv,
            d: Jet::zip(&self.d, &o.d, |da, db| (da - a * inv * db) * inv),
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            v: -self.v,
            d: self.d.iter().map(|x| -x).collect(),
        }
    }
}

impl Scalar for Jet {
    fn cst(c: C64) -> Self {
        Jet { v: c, d: Vec::new() }
    }
    fn value(&self) -> C64 {
        self.v
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn scale(&self, c: C64) -> Self {
        self.chain(self.v * c, c)
    }
}

/// Complex four-vector with generic scalar entries.
pub type Vec4<S> = [S; 4];

pub fn vec4_zero<S: Scalar>() -> Vec4<S> {
    [S::zero(), S::zero(), S::zero(), S::zero()]
}

/// Minkowski contraction u^a g_ab v^b for generic scalars.
pub fn mdot<S: Scalar>(u: &Vec4<S>, v: &Vec4<S>) -> S {
    u[0].clone() * v[0].clone()
        - u[1].clone() * v[1].clone()
        - u[2].clone() * v[2].clone()
        - u[3].clone() * v[3].clone()
}

/// Plain Euclidean contraction of component arrays (used when one index is
/// already lowered).
pub fn edot<S: Scalar>(u: &Vec4<S>, v: &Vec4<S>) -> S {
    u[0].clone() * v[0].clone()
        + u[1].clone() * v[1].clone()
        + u[2].clone() * v[2].clone()
        + u[3].clone() * v[3].clone()
}

/// Raise or lower one index with the diagonal metric.
pub fn flip<S: Scalar>(u: &Vec4<S>) -> Vec4<S> {
    [u[0].clone(), -u[1].clone(), -u[2].clone(), -u[3].clone()]
}
