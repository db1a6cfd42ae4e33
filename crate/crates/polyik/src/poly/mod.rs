//! Sparse multivariate polynomial arithmetic with exact rational coefficients.
//!
//! Polynomials are stored as a sorted association from exponent vectors to
//! `BigRational` coefficients. The term order is graded reverse lexicographic
//! (grevlex) with variable 0 largest, which matches the ordering used by the
//! Gröbner-basis layer. All arithmetic is exact; nothing here rounds.
//!
//! For inverse-kinematics systems the ambient ring has 14 variables with the
//! fixed layout `c1..c7, s1..s7` (cosines first, then sines).

mod text;

pub use text::{parse_polynomial, parse_system, write_system, ParseError};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Exact coefficient type used throughout the algebra layers.
pub type Coeff = BigRational;

/// Errors from polynomial operations.
#[derive(Debug, Error)]
pub enum PolyError {
    #[error("variable count mismatch: {0} vs {1}")]
    VarCountMismatch(usize, usize),
    #[error("evaluation point has length {0}, expected {1}")]
    PointLength(usize, usize),
    #[error("leading term of the zero polynomial")]
    ZeroPolynomial,
    #[error("value {0} is not finite and cannot be converted to a rational")]
    NonFiniteFloat(f64),
}

/// Converts a float to the exact rational it represents in binary.
pub fn rational_from_f64(x: f64) -> Result<Coeff, PolyError> {
    BigRational::from_float(x).ok_or(PolyError::NonFiniteFloat(x))
}

/// A power product of the ambient variables, stored as a dense exponent
/// vector (one entry per variable).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial { exps: vec![0; nvars] }
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable index out of range");
        let mut exps = vec![0; nvars];
        exps[index] = 1;
        Monomial { exps }
    }

    pub fn from_exps(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.exps.len(), other.exps.len());
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Componentwise quotient, or `None` when `self` is not divisible by `other`.
    pub fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        debug_assert_eq!(self.exps.len(), other.exps.len());
        let mut exps = Vec::with_capacity(self.exps.len());
        for (a, b) in self.exps.iter().zip(&other.exps) {
            if a < b {
                return None;
            }
            exps.push(a - b);
        }
        Some(Monomial { exps })
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| *a.max(b))
                .collect(),
        }
    }

    /// True when the two monomials share no variable.
    pub fn is_coprime(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| *a == 0 || *b == 0)
    }
}

/// Grevlex: higher total degree wins; ties broken by the *smaller* exponent
/// in the last position where the vectors differ.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.exps.len(), other.exps.len());
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        for (a, b) in self.exps.iter().zip(&other.exps).rev() {
            match a.cmp(b) {
                Ordering::Equal => {}
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Monomial orderings understood by the algebra layers.
///
/// Only grevlex is implemented; it is the ordering used for every basis
/// computation in this crate, and `Monomial`'s `Ord` instance is fixed to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonomialOrder {
    #[default]
    GradedReverseLex,
}

impl MonomialOrder {
    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        match self {
            MonomialOrder::GradedReverseLex => a.cmp(b),
        }
    }
}

/// A sparse multivariate polynomial with exact rational coefficients.
///
/// Invariants: no stored coefficient is zero, and terms iterate in ascending
/// grevlex order (the `BTreeMap` key order), so printing is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Coeff>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Coeff::one())
    }

    pub fn constant(nvars: usize, c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(nvars), c);
        }
        Polynomial { nvars, terms }
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(nvars, index), Coeff::one());
        Polynomial { nvars, terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Coeff)>>(nvars: usize, iter: I) -> Self {
        let mut p = Polynomial::zero(nvars);
        for (m, c) in iter {
            assert_eq!(m.nvars(), nvars, "monomial arity mismatch");
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending grevlex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&Coeff> {
        self.terms.get(m)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_varcount(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            Err(PolyError::VarCountMismatch(self.nvars, other.nvars))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_varcount(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_varcount(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_varcount(other)?;
        let mut out = Polynomial::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Coeff) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// In-place `self += scale * shift * g`; the workhorse of division steps.
    pub fn add_scaled_shifted(&mut self, g: &Polynomial, shift: &Monomial, scale: &Coeff) {
        debug_assert_eq!(self.nvars, g.nvars);
        if scale.is_zero() {
            return;
        }
        for (m, c) in &g.terms {
            self.add_term(m.mul(shift), c * scale);
        }
    }

    /// Exact evaluation at a rational point.
    pub fn eval_rational(&self, point: &[Coeff]) -> Result<Coeff, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::PointLength(point.len(), self.nvars));
        }
        let mut acc = Coeff::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.exps().iter().enumerate() {
                for _ in 0..e {
                    t *= &point[i];
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Floating-point evaluation.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::PointLength(point.len(), self.nvars));
        }
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = coeff_to_f64(c);
            for (i, &e) in m.exps().iter().enumerate() {
                t *= point[i].powi(e as i32);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Maximal term under the given ordering.
    pub fn leading_term(&self, ord: MonomialOrder) -> Result<(&Monomial, &Coeff), PolyError> {
        match ord {
            MonomialOrder::GradedReverseLex => {
                self.terms.iter().next_back().ok_or(PolyError::ZeroPolynomial)
            }
        }
    }

    pub fn leading_monomial(&self, ord: MonomialOrder) -> Result<&Monomial, PolyError> {
        self.leading_term(ord).map(|(m, _)| m)
    }

    /// Partial derivative with respect to variable `index`.
    pub fn derivative(&self, index: usize) -> Polynomial {
        assert!(index < self.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.exps()[index];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps().to_vec();
            exps[index] -= 1;
            out.add_term(Monomial::from_exps(exps), c * Coeff::from(BigInt::from(e)));
        }
        out
    }

    /// Substitutes exact values for a subset of variables.
    pub fn substitute(&self, values: &[(usize, Coeff)]) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut exps = m.exps().to_vec();
            for (idx, v) in values {
                for _ in 0..exps[*idx] {
                    coeff *= v;
                }
                exps[*idx] = 0;
            }
            out.add_term(Monomial::from_exps(exps), coeff);
        }
        out
    }

    /// Re-embeds the polynomial into the ring on `keep`, which lists the
    /// surviving variable indices in their new order. Panics if a dropped
    /// variable still occurs.
    pub fn project_vars(&self, keep: &[usize]) -> Polynomial {
        let mut out = Polynomial::zero(keep.len());
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; keep.len()];
            let mut spent = 0;
            for (new_i, &old_i) in keep.iter().enumerate() {
                exps[new_i] = m.exps()[old_i];
                spent += m.exps()[old_i];
            }
            assert_eq!(spent, m.degree(), "projected variable still occurs");
            out.add_term(Monomial::from_exps(exps), c.clone());
        }
        out
    }

    /// Divides by the leading coefficient so the leading coefficient is 1.
    pub fn monic(&self, ord: MonomialOrder) -> Result<Polynomial, PolyError> {
        let (_, lc) = self.leading_term(ord)?;
        let inv = lc.recip();
        Ok(self.scale(&inv))
    }

    /// Clears denominators and strips the integer content, normalizing the
    /// sign so the leading coefficient is positive. Keeps coefficients small
    /// during basis computations.
    pub fn primitive_part(&self, ord: MonomialOrder) -> Polynomial {
        if self.is_zero() {
            return self.clone();
        }
        let mut denom_lcm = BigInt::one();
        for c in self.terms.values() {
            denom_lcm = denom_lcm.lcm(c.denom());
        }
        let mut content = BigInt::zero();
        for c in self.terms.values() {
            let scaled = c.numer() * (&denom_lcm / c.denom());
            content = content.gcd(&scaled);
        }
        if content.is_zero() {
            return self.clone();
        }
        let lc_neg = self
            .leading_term(ord)
            .map(|(_, c)| c.is_negative())
            .unwrap_or(false);
        if lc_neg {
            content = -content;
        }
        let factor = Coeff::new(denom_lcm, content);
        self.scale(&factor)
    }

    /// Remainder of `self` on division by the ordered list `divisors`.
    ///
    /// No monomial of the result is divisible by any divisor's leading
    /// monomial. Divisors are tried in list order, which makes the result
    /// deterministic (and canonical whenever the divisors form a Gröbner
    /// basis).
    pub fn normal_form(&self, divisors: &[Polynomial], ord: MonomialOrder) -> Polynomial {
        let leads: Vec<(&Monomial, &Coeff)> = divisors
            .iter()
            .map(|g| g.leading_term(ord).expect("zero divisor in normal_form"))
            .collect();
        let mut rem = self.clone();
        // Walk monomials from the top; everything above `cursor` is reduced.
        let mut cursor: Option<Monomial> = None;
        'outer: loop {
            let candidate = match &cursor {
                None => rem.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone())),
                Some(cur) => rem
                    .terms
                    .range::<Monomial, _>(..cur.clone())
                    .next_back()
                    .map(|(m, c)| (m.clone(), c.clone())),
            };
            let (mono, coeff) = match candidate {
                Some(t) => t,
                None => break,
            };
            for (i, (lm, lc)) in leads.iter().enumerate() {
                if lm.divides(&mono) {
                    let shift = mono.checked_div(lm).unwrap();
                    let scale = -&coeff / *lc;
                    rem.add_scaled_shifted(&divisors[i], &shift, &scale);
                    debug_assert!(rem.coeff(&mono).is_none());
                    continue 'outer;
                }
            }
            cursor = Some(mono);
        }
        rem
    }
}

pub fn coeff_to_f64(c: &Coeff) -> f64 {
    // Scale down to avoid overflowing f64 when numerator/denominator are huge.
    let nbits = c.numer().bits().max(c.denom().bits());
    if nbits <= 500 {
        let n = bigint_to_f64(c.numer());
        let d = bigint_to_f64(c.denom());
        n / d
    } else {
        let shift = (nbits - 500) as u64;
        let n = bigint_to_f64(&(c.numer() >> shift));
        let d = bigint_to_f64(&(c.denom() >> shift));
        n / d
    }
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", text::format_polynomial(self, None))
    }
}

/// Default variable names: `c1..c7, s1..s7` for the 14-variable IK ring,
/// `x1..xn` otherwise.
pub fn default_var_names(nvars: usize) -> Vec<String> {
    if nvars == 14 {
        (1..=7)
            .map(|i| format!("c{i}"))
            .chain((1..=7).map(|i| format!("s{i}")))
            .collect()
    } else {
        (1..=nvars).map(|i| format!("x{i}")).collect()
    }
}
