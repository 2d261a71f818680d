//! Sparse multivariate polynomials with `f64` coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u8>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(nvars, &vec![0; nvars], c)
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, &e, 1.0)
    }

    pub fn monomial(nvars: usize, exponents: &[u8], coef: f64) -> Self {
        assert_eq!(exponents.len(), nvars);
        let mut p = Self::zero(nvars);
        if coef != 0.0 {
            p.terms.insert(exponents.to_vec(), coef);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn coefficient(&self, exponents: &[u8]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    fn add_term(&mut self, e: Vec<u8>, c: f64) {
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c != 0.0 {
                    v.insert(c);
                }
            }
        }
    }

    pub fn scale(&self, s: f64) -> Poly {
        if s == 0.0 {
            return Self::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * e[i] as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(x).fold(
                    *c,
                    |acc, (&k, &xi)| if k == 0 { acc } else { acc * xi.powi(k as i32) },
                )
            })
            .sum()
    }

    /// Degree where variable `i` carries weight `weights[i]`; `None` for zero.
    pub fn weighted_degree(&self, weights: &[usize]) -> Option<usize> {
        self.terms.keys().map(|e| weighted(e, weights)).max()
    }

    pub fn is_weighted_homogeneous(&self, weights: &[usize], degree: usize) -> bool {
        self.terms.keys().all(|e| weighted(e, weights) == degree)
    }
}

fn weighted(e: &[u8], weights: &[usize]) -> usize {
    e.iter().zip(weights).map(|(&k, &w)| k as usize * w).sum()
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}
