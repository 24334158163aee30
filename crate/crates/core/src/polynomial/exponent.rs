use std::cmp::Ordering;
use std::fmt;

/// Exponent vector `α` of the monomial `x^α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(powers: Vec<u32>) -> Self {
        Self(powers)
    }

    pub fn zero(nvars: usize) -> Self {
        Self(vec![0; nvars])
    }

    /// `x_var` to the first power.
    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut powers = vec![0; nvars];
        powers[var] = 1;
        Self(powers)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn powers(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&p| p == 0)
    }

    /// Product of two monomials.
    pub fn mul(&self, other: &Exponent) -> Exponent {
        debug_assert_eq!(self.nvars(), other.nvars());
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Variables with a nonzero power.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0)
            .map(|(i, _)| i)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&p, _)| p > 0)
            .map(|(&p, &xi)| xi.powi(p as i32))
            .product()
    }

    /// `∂x^α/∂x_var = α_var · x^(α − e_var)`, as (factor, exponent).
    pub fn derivative(&self, var: usize) -> Option<(f64, Exponent)> {
        let p = self.0[var];
        if p == 0 {
            return None;
        }
        let mut powers = self.0.clone();
        powers[var] -= 1;
        Some((p as f64, Exponent(powers)))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &p) in self.0.iter().enumerate() {
            if p == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if p == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, p)?;
            }
        }
        Ok(())
    }
}

/// Ordered set `M_d[x]` of all monomials of degree `<= d` in a subset of the
/// ambient variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    nvars: usize,
    variables: Vec<usize>,
    max_degree: u32,
    entries: Vec<Exponent>,
}

/// All monomials in `n` variables of degree `<= d`.
pub fn basis(n: usize, d: u32) -> MonomialBasis {
    basis_over(n, &(0..n).collect::<Vec<_>>(), d)
}

/// All monomials of degree `<= d` in `variables`, embedded in `n` ambient
/// variables. `variables` is sorted and deduplicated.
pub fn basis_over(n: usize, variables: &[usize], d: u32) -> MonomialBasis {
    let mut vars = variables.to_vec();
    vars.sort_unstable();
    vars.dedup();
    assert!(vars.iter().all(|&v| v < n), "variable index out of range");

    let mut entries = Vec::new();
    let mut powers = vec![0u32; n];
    for degree in 0..=d {
        push_compositions(&vars, degree, &mut powers, &mut entries);
    }
    entries.sort();
    MonomialBasis {
        nvars: n,
        variables: vars,
        max_degree: d,
        entries,
    }
}

fn push_compositions(vars: &[usize], remaining: u32, powers: &mut [u32], out: &mut Vec<Exponent>) {
    match vars.split_first() {
        None => {
            if remaining == 0 {
                out.push(Exponent(powers.to_vec()));
            }
        }
        Some((&v, rest)) => {
            for p in (0..=remaining).rev() {
                powers[v] = p;
                push_compositions(rest, remaining - p, powers, out);
            }
            powers[v] = 0;
        }
    }
}

impl MonomialBasis {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Exponent] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &Exponent {
        &self.entries[i]
    }

    pub fn index_of(&self, e: &Exponent) -> Option<usize> {
        self.entries.binary_search(e).ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Exponent> {
        self.entries.iter()
    }

    /// Evaluates every basis monomial at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|e| e.eval(x)).collect()
    }
}
