//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a function of `n` variables
//! around a fixed point, up to a total order `r <= 4`. Coefficients are laid
//! out by graded multi-index (all degree-0 terms, then degree 1, ...), so a
//! jet of order `r` is a prefix of the same jet at order 4. Partial
//! derivatives are recovered by multiplying a coefficient with `alpha!`.

use smallvec::SmallVec;
use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Highest supported total derivative order.
pub const MAX_ORDER: usize = 4;
/// Highest supported number of variables.
pub const MAX_VARS: usize = 8;

type Exps = [u8; MAX_VARS];

pub(crate) struct MonomialTable {
    exps: Vec<Exps>,
    /// Number of monomials of total degree `<= r`, indexed by `r`.
    count_upto: [usize; MAX_ORDER + 1],
    index: HashMap<Exps, usize>,
    /// `(a, b, c)` with `x^a * x^b = x^c`, sorted by degree of `c`.
    mul: Vec<(u16, u16, u16)>,
    mul_upto: [usize; MAX_ORDER + 1],
    /// `raise[a][i]` = index of `a + e_i` (only for degree `< MAX_ORDER`).
    raise: Vec<[u16; MAX_VARS]>,
    /// `alpha!` for each monomial.
    factorial: Vec<f64>,
}

fn degree(e: &Exps) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

impl MonomialTable {
    fn build(n: usize) -> Self {
        let mut exps: Vec<Exps> = Vec::new();
        // enumerate all exponent vectors with total degree <= MAX_ORDER
        fn rec(n: usize, var: usize, left: usize, cur: &mut Exps, out: &mut Vec<Exps>) {
            if var == n {
                out.push(*cur);
                return;
            }
            for e in 0..=left {
                cur[var] = e as u8;
                rec(n, var + 1, left - e, cur, out);
            }
            cur[var] = 0;
        }
        let mut cur = [0u8; MAX_VARS];
        rec(n, 0, MAX_ORDER, &mut cur, &mut exps);
        // graded, then reverse-lex so x comes before y at each degree
        exps.sort_by(|a, b| degree(a).cmp(&degree(b)).then_with(|| b.cmp(a)));

        let mut count_upto = [0usize; MAX_ORDER + 1];
        for r in 0..=MAX_ORDER {
            count_upto[r] = exps.iter().filter(|e| degree(e) <= r).count();
        }
        let index: HashMap<Exps, usize> = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut mul = Vec::new();
        for (a, ea) in exps.iter().enumerate() {
            for (b, eb) in exps.iter().enumerate() {
                if degree(ea) + degree(eb) > MAX_ORDER {
                    continue;
                }
                let mut ec = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    ec[v] = ea[v] + eb[v];
                }
                mul.push((a as u16, b as u16, index[&ec] as u16));
            }
        }
        mul.sort_by_key(|&(_, _, c)| degree(&exps[c as usize]));
        let mut mul_upto = [0usize; MAX_ORDER + 1];
        for r in 0..=MAX_ORDER {
            mul_upto[r] = mul.iter().filter(|&&(_, _, c)| degree(&exps[c as usize]) <= r).count();
        }

        let mut raise = vec![[u16::MAX; MAX_VARS]; exps.len()];
        for (a, ea) in exps.iter().enumerate() {
            if degree(ea) == MAX_ORDER {
                continue;
            }
            for v in 0..n {
                let mut e = *ea;
                e[v] += 1;
                raise[a][v] = index[&e] as u16;
            }
        }

        let factorial = exps
            .iter()
            .map(|e| e.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product())
            .collect();

        Self { exps, count_upto, index, mul, mul_upto, raise, factorial }
    }

    pub(crate) fn get(n: usize) -> &'static MonomialTable {
        static TABLES: [OnceLock<MonomialTable>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];
        assert!((1..=MAX_VARS).contains(&n), "jet variable count {n} out of range 1..=8");
        TABLES[n].get_or_init(|| MonomialTable::build(n))
    }
}

/// Number of Taylor coefficients of a jet in `n` variables truncated at `order`.
pub fn coefficient_count(n: usize, order: usize) -> usize {
    MonomialTable::get(n).count_upto[order]
}

/// A truncated multivariate Taylor expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    nvars: u8,
    order: u8,
    coeffs: SmallVec<[f64; 16]>,
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Self {
        assert!(order <= MAX_ORDER);
        let len = coefficient_count(nvars, order);
        let mut coeffs = SmallVec::from_elem(0.0, len);
        coeffs[0] = value;
        Self { nvars: nvars as u8, order: order as u8, coeffs }
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Self {
        let mut j = Self::constant(nvars, order, value);
        if order >= 1 {
            // degree-1 monomials follow the constant term in variable order
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    /// Identity jets for every coordinate at `point`.
    pub fn coordinates(point: &[f64], order: usize) -> Vec<Jet> {
        let n = point.len();
        (0..n).map(|i| Jet::variable(n, order, i, point[i])).collect()
    }

    pub fn from_coefficients(nvars: usize, order: usize, coeffs: &[f64]) -> Self {
        assert_eq!(coeffs.len(), coefficient_count(nvars, order));
        Self { nvars: nvars as u8, order: order as u8, coeffs: SmallVec::from_slice(coeffs) }
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn table(&self) -> &'static MonomialTable {
        MonomialTable::get(self.nvars())
    }

    /// Partial derivative for the exponent vector `alpha` (`alpha[i]` = how
    /// many times to differentiate in `x_i`). Orders above the jet's order
    /// are not available and panic.
    pub fn derivative(&self, alpha: &[u8]) -> f64 {
        let mut e = [0u8; MAX_VARS];
        e[..alpha.len()].copy_from_slice(alpha);
        assert!(degree(&e) <= self.order(), "derivative order exceeds jet order");
        let t = self.table();
        let idx = t.index[&e];
        self.coeffs[idx] * t.factorial[idx]
    }

    /// Partial derivative along a list of variables, e.g. `&[0, 1]` is `d2/dx0 dx1`.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut e = [0u8; MAX_VARS];
        for &v in vars {
            e[v] += 1;
        }
        self.derivative(&e[..self.nvars()])
    }

    /// Exponent vectors of all stored coefficients, in storage order.
    pub fn multi_indices(&self) -> impl Iterator<Item = &'static [u8]> + '_ {
        let t = self.table();
        let n = self.nvars();
        t.exps[..self.coeffs.len()].iter().map(move |e| &e[..n])
    }

    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        let len = coefficient_count(self.nvars(), order);
        Self { nvars: self.nvars, order: order as u8, coeffs: SmallVec::from_slice(&self.coeffs[..len]) }
    }

    /// Derivative in `x_var` as a jet of one lower order.
    pub fn diff(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let t = self.table();
        let order = self.order() - 1;
        let len = t.count_upto[order];
        let mut coeffs = SmallVec::from_elem(0.0, len);
        for (a, c) in coeffs.iter_mut().enumerate() {
            let up = t.raise[a][var] as usize;
            *c = self.coeffs[up] * (t.exps[a][var] as f64 + 1.0);
        }
        Jet { nvars: self.nvars, order: order as u8, coeffs }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    fn common_order(&self, other: &Jet) -> usize {
        assert_eq!(self.nvars, other.nvars, "jets over different variable counts");
        self.order.min(other.order) as usize
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        let order = self.common_order(other);
        let t = self.table();
        let len = t.count_upto[order];
        let mut coeffs: SmallVec<[f64; 16]> = SmallVec::from_elem(0.0, len);
        for &(a, b, c) in &t.mul[..t.mul_upto[order]] {
            coeffs[c as usize] += self.coeffs[a as usize] * other.coeffs[b as usize];
        }
        Jet { nvars: self.nvars, order: order as u8, coeffs }
    }

    /// `sum_k derivs[k] / k! * (self - value)^k`, i.e. `f(self)` for a
    /// univariate `f` whose derivatives at `self.value()` are `derivs`.
    pub fn compose_univariate(&self, derivs: &[f64; MAX_ORDER + 1]) -> Jet {
        let order = self.order();
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        const INV_FACT: [f64; 5] = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];
        // Horner in the nilpotent part h
        let mut acc = Jet::constant(self.nvars(), order, derivs[order] * INV_FACT[order]);
        for k in (0..order).rev() {
            acc = acc.mul_jet(&h);
            acc.coeffs[0] += derivs[k] * INV_FACT[k];
        }
        acc
    }

    pub fn recip(&self) -> Option<Jet> {
        let u = self.value();
        if u == 0.0 {
            return None;
        }
        let r = 1.0 / u;
        Some(self.compose_univariate(&[r, -r * r, 2.0 * r * r * r, -6.0 * r.powi(4), 24.0 * r.powi(5)]))
    }

    pub fn div_jet(&self, other: &Jet) -> Option<Jet> {
        other.recip().map(|r| self.mul_jet(&r))
    }

    pub fn powi(&self, k: i32) -> Option<Jet> {
        if k < 0 {
            return self.recip().and_then(|r| r.powi(-k));
        }
        let mut result = Jet::constant(self.nvars(), self.order(), 1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Some(result)
    }

    /// `self^p` for a real exponent; requires a positive value.
    pub fn powf(&self, p: f64) -> Option<Jet> {
        let u = self.value();
        if !(u > 0.0) {
            return None;
        }
        let mut d = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, slot) in d.iter_mut().enumerate() {
            *slot = coef * u.powf(p - k as f64);
            coef *= p - k as f64;
        }
        Some(self.compose_univariate(&d))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose_univariate(&[e; 5])
    }

    pub fn ln(&self) -> Option<Jet> {
        let u = self.value();
        if !(u > 0.0) {
            return None;
        }
        let r = 1.0 / u;
        Some(self.compose_univariate(&[u.ln(), r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4)]))
    }

    pub fn sqrt(&self) -> Option<Jet> {
        let u = self.value();
        if !(u > 0.0) {
            return None;
        }
        let s = u.sqrt();
        Some(self.compose_univariate(&[
            s,
            0.5 / s,
            -0.25 / (u * s),
            0.375 / (u * u * s),
            -0.9375 / (u * u * u * s),
        ]))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose_univariate(&[s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose_univariate(&[c, -s, -c, s, c])
    }

    pub fn tan(&self) -> Option<Jet> {
        if self.value().cos() == 0.0 {
            return None;
        }
        let t = self.value().tan();
        let p = 1.0 + t * t;
        Some(self.compose_univariate(&[
            t,
            p,
            2.0 * t * p,
            2.0 * p * (1.0 + 3.0 * t * t),
            8.0 * t * (2.0 + 3.0 * t * t) * p,
        ]))
    }

    pub fn atan(&self) -> Jet {
        let u = self.value();
        let q = 1.0 / (1.0 + u * u);
        self.compose_univariate(&[
            u.atan(),
            q,
            -2.0 * u * q * q,
            (6.0 * u * u - 2.0) * q.powi(3),
            24.0 * u * (1.0 - u * u) * q.powi(4),
        ])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose_univariate(&[s, c, s, c, s])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose_univariate(&[c, s, c, s, c])
    }

    /// `|self|` with the sign frozen at the expansion point (`+1` at zero).
    pub fn abs(&self) -> Jet {
        if self.value() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Substitute jets for the variables of `self`.
    ///
    /// `self` is a Taylor expansion around some point `p`; `inner[i]` must be
    /// a jet (in any variables) whose value is `p_i`. The result is the
    /// expansion of the composite function, truncated at the smaller order.
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.nvars());
        let m = inner[0].nvars();
        let order = inner.iter().map(Jet::order).min().unwrap_or(0).min(self.order());
        let t = self.table();
        // powers h_i^k of the nilpotent parts
        let hs: Vec<Vec<Jet>> = inner
            .iter()
            .map(|j| {
                let mut h = j.truncate(order);
                h.coeffs[0] = 0.0;
                let mut pw = vec![Jet::constant(m, order, 1.0)];
                for k in 1..=order {
                    let next = pw[k - 1].mul_jet(&h);
                    pw.push(next);
                }
                pw
            })
            .collect();
        let mut out = Jet::constant(m, order, 0.0);
        for (idx, e) in t.exps[..t.count_upto[order]].iter().enumerate() {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            let mut term = Jet::constant(m, order, c);
            for (v, &k) in e[..self.nvars()].iter().enumerate() {
                if k > 0 {
                    term = term.mul_jet(&hs[v][k as usize]);
                }
            }
            out = &out + &term;
        }
        out
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let order = self.common_order(rhs);
        let len = coefficient_count(self.nvars(), order);
        let coeffs = (0..len).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect();
        Jet { nvars: self.nvars, order: order as u8, coeffs }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let order = self.common_order(rhs);
        let len = coefficient_count(self.nvars(), order);
        let coeffs = (0..len).map(|i| self.coeffs[i] - rhs.coeffs[i]).collect();
        Jet { nvars: self.nvars, order: order as u8, coeffs }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn jet_sum<'a>(items: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, j| &acc + j))
}
