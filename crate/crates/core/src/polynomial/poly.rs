use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::Exponent;
use crate::{Error, Result};

/// Sparse polynomial `Σ c_α x^α` in a fixed number of variables.
///
/// Terms with an exactly-zero coefficient are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(Exponent::zero(nvars), c)
    }

    /// The variable `x_var` (zero-based).
    pub fn var(nvars: usize, var: usize) -> Self {
        Self::monomial(Exponent::unit(nvars, var), 1.0)
    }

    pub fn monomial(exp: Exponent, c: f64) -> Self {
        let mut p = Self::zero(exp.nvars());
        p.add_term(exp, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, f64)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.nvars(), nvars, "exponent arity mismatch");
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Adds `c · x^exp`, collecting like terms.
    pub fn add_term(&mut self, exp: Exponent, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &Exponent) -> f64 {
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Exponent::degree).max().unwrap_or(0)
    }

    /// Sorted indices of variables that occur in some term.
    pub fn variables(&self) -> Vec<usize> {
        let mut present = vec![false; self.nvars];
        for e in self.terms.keys() {
            for v in e.support() {
                present[v] = true;
            }
        }
        (0..self.nvars).filter(|&v| present[v]).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.eval(x)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    /// `∂f/∂x_var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            if let Some((factor, de)) = e.derivative(var) {
                out.add_term(de, c * factor);
            }
        }
        out
    }

    /// Drops terms with `|c| < tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() >= tol)
                .map(|(e, &c)| (e.clone(), c))
                .collect(),
        }
    }

    fn check_same_space(&self, other: &Self) {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomials over different variable spaces"
        );
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_space(rhs);
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_space(rhs);
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_space(rhs);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                out.add_term(ea.mul(eb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::basis;
    use crate::rng::SplitMix64;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    fn random_poly(rng: &mut SplitMix64, n: usize, d: u32) -> Polynomial {
        Polynomial::from_terms(
            n,
            basis(n, d)
                .iter()
                .map(|e| (e.clone(), rng.uniform(-10.0, 10.0)))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn eval_examples() {
        let f = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 0) * &x(2, 1)).scale(2.0);
        assert_eq!(f.eval(&[1.0, 2.0]).unwrap(), 5.0);
        assert_eq!(Polynomial::zero(2).eval(&[3.0, -4.0]).unwrap(), 0.0);
        let g = &x(2, 0) - &x(2, 1);
        assert_eq!(g.eval(&[3.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        let f = x(2, 0);
        assert!(matches!(
            f.eval(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(
            &x(2, 0) * &x(2, 1),
            Polynomial::monomial(Exponent::new(vec![1, 1]), 1.0)
        );
        let one = Polynomial::constant(1, 1.0);
        let prod = &(&x(1, 0) + &one) * &(&x(1, 0) - &one);
        let expected = &(&x(1, 0) * &x(1, 0)) - &one;
        assert_eq!(prod, expected);
        // x1 term cancelled exactly and is not stored
        assert_eq!(prod.num_terms(), 2);
    }

    #[test]
    fn mul_matches_pointwise_product() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..10 {
            let f = random_poly(&mut rng, 3, 3);
            let g = random_poly(&mut rng, 3, 3);
            let fg = &f * &g;
            assert_eq!(fg.degree(), f.degree() + g.degree());
            for _ in 0..100 {
                let pt: Vec<f64> = (0..3).map(|_| rng.uniform(-2.0, 2.0)).collect();
                let lhs = fg.eval(&pt).unwrap();
                let rhs = f.eval(&pt).unwrap() * g.eval(&pt).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()),
                    "{lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn zero_polynomial_degree_is_zero() {
        assert_eq!(Polynomial::zero(3).degree(), 0);
        assert!(Polynomial::constant(2, 0.0).is_zero());
    }

    #[test]
    fn derivative_power_rule() {
        let f = Polynomial::monomial(Exponent::new(vec![3, 1]), 2.0);
        let df = f.derivative(0);
        assert_eq!(df, Polynomial::monomial(Exponent::new(vec![2, 1]), 6.0));
        assert!(f.derivative(1).derivative(1).is_zero());
    }

    #[test]
    fn variables_present() {
        let f = &x(3, 2) + &Polynomial::constant(3, 1.0);
        assert_eq!(f.variables(), vec![2]);
    }
}
