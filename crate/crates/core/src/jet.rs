//! Truncated Laurent series `t^v (c_0 + c_1 t + ... + c_{n-1} t^{n-1} + O(t^n))`
//! in a local variable `t = rho - rho_0`. With `rho_0 > 0` these are Taylor
//! jets; with `rho_0 = 0` they are the expansions at the vacuum.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub v: i32,
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(x: f64, n: usize) -> Self {
        let mut c = vec![0.0; n];
        c[0] = x;
        Self { v: 0, c }
    }

    /// The independent variable `rho` expanded about `rho0`.
    pub fn var(rho0: f64, n: usize) -> Self {
        let mut c = vec![0.0; n];
        if rho0 == 0.0 {
            c[0] = 1.0;
            Self { v: 1, c }
        } else {
            c[0] = rho0;
            if n > 1 {
                c[1] = 1.0;
            }
            Self { v: 0, c }
        }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Exponent up to which the series is known.
    pub fn order(&self) -> i32 {
        self.v + self.c.len() as i32
    }

    /// Coefficient of `t^p`.
    pub fn coeff(&self, p: i32) -> f64 {
        let j = p - self.v;
        if j < 0 || j as usize >= self.c.len() {
            0.0
        } else {
            self.c[j as usize]
        }
    }

    fn trim(mut self) -> Self {
        let lead = self.c.iter().take_while(|x| **x == 0.0).count();
        if lead > 0 && lead < self.c.len() {
            self.c.drain(..lead);
            self.v += lead as i32;
        }
        self
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            v: self.v,
            c: self.c.iter().map(|x| a * x).collect(),
        }
    }

    pub fn add_const(&self, a: f64) -> Self {
        self + &Jet::constant(a, (self.order().max(1)) as usize)
    }

    pub fn recip(&self) -> Self {
        Jet::constant(1.0, self.len()).div(self)
    }

    pub fn div(&self, b: &Jet) -> Self {
        let b = b.clone().trim();
        assert!(b.c[0] != 0.0, "division by a series with zero leading term");
        let n = self.len().min(b.len());
        let mut q = vec![0.0; n];
        for j in 0..n {
            let mut acc = self.c[j];
            for i in 1..=j {
                acc -= b.c[i] * q[j - i];
            }
            q[j] = acc / b.c[0];
        }
        Self {
            v: self.v - b.v,
            c: q,
        }
    }

    /// `self^p` for a series with `v = 0` and positive leading coefficient.
    pub fn powf(&self, p: f64) -> Self {
        let a = self.clone().trim();
        assert!(a.v == 0 && a.c[0] > 0.0, "powf needs a positive unit series");
        let n = a.len();
        let mut h = vec![0.0; n];
        h[0] = a.c[0].powf(p);
        for m in 1..n {
            let mut acc = 0.0;
            for j in 1..=m {
                acc += ((p + 1.0) * j as f64 - m as f64) * a.c[j] * h[m - j];
            }
            h[m] = acc / (m as f64 * a.c[0]);
        }
        Self { v: 0, c: h }
    }

    pub fn powi(&self, k: i32) -> Self {
        let mut out = Jet::constant(1.0, self.len());
        let base = if k < 0 { self.recip() } else { self.clone() };
        for _ in 0..k.unsigned_abs() {
            out = &out * &base;
        }
        out
    }

    /// `d/dt`.
    pub fn deriv(&self) -> Self {
        Self {
            v: self.v - 1,
            c: self
                .c
                .iter()
                .enumerate()
                .map(|(j, x)| x * (self.v + j as i32) as f64)
                .collect(),
        }
        .trim()
    }

    /// Antiderivative taking the value `at_center` at `t = 0`. A `t^{-1}`
    /// coefficient is dropped; callers guarantee it vanishes.
    pub fn integ(&self, at_center: f64) -> Self {
        let top = self.order() + 1;
        let lo = (self.v + 1).min(0);
        let mut c = vec![0.0; (top - lo) as usize];
        for (j, x) in self.c.iter().enumerate() {
            let p = self.v + j as i32 + 1;
            if p != 0 {
                c[(p - lo) as usize] += x / p as f64;
            }
        }
        c[(-lo) as usize] += at_center;
        Self { v: lo, c }.trim()
    }

    /// Sum of the series at offset `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for x in self.c.iter().rev() {
            acc = acc * t + x;
        }
        acc * t.powi(self.v)
    }

    /// Value at the center; coefficients of negative powers must be zero.
    pub fn value(&self) -> f64 {
        if self.v > 0 {
            0.0
        } else {
            self.coeff(0)
        }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, b: &Jet) -> Jet {
        let v = self.v.min(b.v);
        let top = self.order().min(b.order());
        let n = (top - v).max(0) as usize;
        let c = (0..n)
            .map(|j| self.coeff(v + j as i32) + b.coeff(v + j as i32))
            .collect();
        Jet { v, c }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, b: &Jet) -> Jet {
        self + &(-b)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, b: &Jet) -> Jet {
        let n = self.len().min(b.len());
        let mut c = vec![0.0; n];
        for (i, x) in self.c.iter().take(n).enumerate() {
            for (j, y) in b.c.iter().take(n - i).enumerate() {
                c[i + j] += x * y;
            }
        }
        Jet { v: self.v + b.v, c }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $f(self, b: Jet) -> Jet {
                (&self).$f(&b)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $f(self, b: &Jet) -> Jet {
                (&self).$f(b)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $f(self, b: Jet) -> Jet {
                self.$f(&b)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
