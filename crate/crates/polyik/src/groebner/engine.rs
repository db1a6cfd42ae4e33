//! Internal Buchberger engine working over integer-primitive polynomials
//! with packed exponent vectors.
//!
//! Exponent vectors of up to 16 variables pack into one `u128` (one byte per
//! variable, highest variable in the most significant byte), which turns
//! grevlex comparison into two integer compares and divisibility into a
//! branch-free byte-wise test. Coefficients are `BigInt`; every completed
//! reduction strips the integer content, which is what keeps fraction-free
//! reduction from blowing up.

use crate::poly::{Coeff, Monomial, MonomialOrder, Polynomial};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;

pub(super) const MAX_VARS: usize = 16;
pub(super) const MAX_EXP: u32 = 120;

const HIGH: u128 = 0x8080_8080_8080_8080_8080_8080_8080_8080;
const LOW7: u128 = !HIGH;

/// Exponent vector packed one byte per variable; `deg` caches the total
/// degree. Requires every exponent <= 120 so byte arithmetic never carries.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash)]
pub(super) struct PackedMono {
    rev: u128,
    deg: u32,
}

impl PackedMono {
    pub fn from_monomial(m: &Monomial) -> Option<PackedMono> {
        if m.nvars() > MAX_VARS {
            return None;
        }
        let mut rev: u128 = 0;
        let mut deg: u32 = 0;
        for (i, &e) in m.exps().iter().enumerate() {
            if e > MAX_EXP {
                return None;
            }
            rev |= (e as u128) << (8 * i);
            deg += e;
        }
        Some(PackedMono { rev, deg })
    }

    pub fn to_monomial(self, nvars: usize) -> Monomial {
        let exps = (0..nvars)
            .map(|i| ((self.rev >> (8 * i)) & 0xff) as u32)
            .collect();
        Monomial::from_exps(exps)
    }

    pub fn one() -> PackedMono {
        PackedMono { rev: 0, deg: 0 }
    }

    pub fn deg(self) -> u32 {
        self.deg
    }

    pub fn mul(self, other: PackedMono) -> PackedMono {
        PackedMono { rev: self.rev + other.rev, deg: self.deg + other.deg }
    }

    /// True when `self` divides `other` componentwise.
    pub fn divides(self, other: PackedMono) -> bool {
        // Per byte (values <= 127): (other | 0x80) - self keeps the high bit
        // set exactly when other >= self, with no cross-byte borrows.
        if self.deg > other.deg {
            return false;
        }
        ((other.rev | HIGH) - self.rev) & HIGH == HIGH
    }

    /// Quotient; caller must ensure divisibility.
    pub fn div(self, other: PackedMono) -> PackedMono {
        PackedMono { rev: self.rev - other.rev, deg: self.deg - other.deg }
    }

    pub fn lcm(self, other: PackedMono) -> PackedMono {
        let mut rev: u128 = 0;
        let mut deg: u32 = 0;
        for i in 0..MAX_VARS {
            let a = (self.rev >> (8 * i)) & 0xff;
            let b = (other.rev >> (8 * i)) & 0xff;
            let m = a.max(b);
            rev |= m << (8 * i);
            deg += m as u32;
        }
        PackedMono { rev, deg }
    }

    pub fn is_coprime(self, other: PackedMono) -> bool {
        // High bit of t(x) marks nonzero bytes (values <= 127).
        let ta = ((self.rev & LOW7) + LOW7) | self.rev;
        let tb = ((other.rev & LOW7) + LOW7) | other.rev;
        ta & tb & HIGH == 0
    }

    pub fn rev_key(self) -> u128 {
        self.rev
    }

    pub fn from_key(rev: u128, deg: u32) -> PackedMono {
        PackedMono { rev, deg }
    }
}

/// Grevlex: degree first; ties broken so that the numerically *smaller*
/// packed value is the larger monomial (the packing puts the last variable in
/// the most significant byte, and grevlex prefers a smaller exponent there).
impl Ord for PackedMono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.deg
            .cmp(&other.deg)
            .then_with(|| other.rev.cmp(&self.rev))
    }
}

impl PartialOrd for PackedMono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Integer-primitive polynomial: terms ascending in grevlex, coefficients
/// content-free with a positive leading coefficient (after normalization).
#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) struct GbPoly {
    pub terms: Vec<(PackedMono, BigInt)>,
}

impl GbPoly {
    pub fn zero() -> GbPoly {
        GbPoly { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn lead(&self) -> &(PackedMono, BigInt) {
        self.terms.last().expect("lead of zero polynomial")
    }

    /// Clears denominators and strips content; `None` if the polynomial does
    /// not fit the packed representation.
    pub fn from_polynomial(p: &Polynomial) -> Option<GbPoly> {
        let mut denom_lcm = BigInt::one();
        for (_, c) in p.terms() {
            denom_lcm = denom_lcm.lcm(c.denom());
        }
        let mut terms = Vec::with_capacity(p.num_terms());
        for (m, c) in p.terms() {
            let packed = PackedMono::from_monomial(m)?;
            let coeff = c.numer() * (&denom_lcm / c.denom());
            terms.push((packed, coeff));
        }
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        let mut out = GbPoly { terms };
        out.make_primitive();
        Some(out)
    }

    pub fn to_polynomial(&self, nvars: usize) -> Polynomial {
        Polynomial::from_terms(
            nvars,
            self.terms
                .iter()
                .map(|(m, c)| (m.to_monomial(nvars), Coeff::from(c.clone()))),
        )
    }

    pub fn max_bits(&self) -> u64 {
        self.terms.iter().map(|(_, c)| c.bits()).max().unwrap_or(0)
    }

    /// Integer content (always positive), with early exit once it hits 1.
    fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Divides out the content and makes the leading coefficient positive.
    pub fn make_primitive(&mut self) {
        if self.terms.is_empty() {
            return;
        }
        let mut g = self.content();
        if self.terms.last().unwrap().1.is_negative() {
            g = -g;
        }
        if !g.is_one() {
            for (_, c) in &mut self.terms {
                *c = &*c / &g;
            }
        }
    }

    pub fn scale_mut(&mut self, factor: &BigInt) {
        if factor.is_one() {
            return;
        }
        for (_, c) in &mut self.terms {
            *c *= factor;
        }
    }

    /// `self + scale * shift * g`, consuming `self`. Untouched coefficients
    /// are moved, not cloned; only `g`'s terms incur multiplications.
    pub fn add_scaled_shifted(self, g: &GbPoly, shift: PackedMono, scale: &BigInt) -> GbPoly {
        let mut out = Vec::with_capacity(self.terms.len() + g.terms.len());
        let mut a = self.terms.into_iter().peekable();
        let mut b = g.terms.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (Some((ma, _)), Some((mb0, _))) => {
                    let mb = mb0.mul(shift);
                    match ma.cmp(&mb) {
                        Ordering::Less => {
                            out.push(a.next().unwrap());
                        }
                        Ordering::Greater => {
                            let (_, c) = b.next().unwrap();
                            out.push((mb, c * scale));
                        }
                        Ordering::Equal => {
                            let (m, ca) = a.next().unwrap();
                            let (_, cb) = b.next().unwrap();
                            let c = ca + cb * scale;
                            if !c.is_zero() {
                                out.push((m, c));
                            }
                        }
                    }
                }
                (Some(_), None) => {
                    out.push(a.next().unwrap());
                }
                (None, Some(_)) => {
                    let (mb0, c) = b.next().unwrap();
                    out.push((mb0.mul(shift), c * scale));
                }
                (None, None) => break,
            }
        }
        GbPoly { terms: out }
    }

    /// `scale * shift * self`, in place.
    pub fn shift_scale_mut(&mut self, shift: PackedMono, scale: &BigInt) {
        for (m, c) in &mut self.terms {
            *m = m.mul(shift);
            if !scale.is_one() {
                *c *= scale;
            }
        }
    }

    /// Largest term strictly below `bound` (as a term index), or the top term
    /// when `bound` is `None`.
    fn next_term_below(&self, bound: Option<PackedMono>) -> Option<usize> {
        match bound {
            None => self.terms.len().checked_sub(1),
            Some(b) => {
                // binary search for the first index with mono >= b
                let idx = self.terms.partition_point(|(m, _)| *m < b);
                idx.checked_sub(1)
            }
        }
    }
}

/// Fully reduces `f` modulo `basis` (every monomial, not just the leading
/// one) with fraction-free arithmetic. The result is primitive; it is the
/// true normal form up to a positive rational factor.
pub(super) fn reduce_full(f: GbPoly, basis: &[GbPoly], skip: Option<usize>) -> GbPoly {
    reduce_below(f, basis, skip, None)
}

/// Reduces only the monomials strictly below the leading one, preserving the
/// leading monomial (the whole polynomial may be rescaled; the result is
/// primitive).
pub(super) fn reduce_full_tail(f: GbPoly, basis: &[GbPoly], skip_idx: usize) -> GbPoly {
    if f.is_zero() {
        return f;
    }
    let lead = f.lead().0;
    let out = reduce_below(f, basis, Some(skip_idx), Some(lead));
    debug_assert_eq!(out.lead().0, lead);
    out
}

fn reduce_below(
    f: GbPoly,
    basis: &[GbPoly],
    skip: Option<usize>,
    start_bound: Option<PackedMono>,
) -> GbPoly {
    let mut rem = f;
    rem.make_primitive();
    if rem.is_zero() {
        return rem;
    }
    let base_bits = rem.max_bits();
    let mut strip_threshold = base_bits * 2 + 256;
    let mut cursor: Option<PackedMono> = start_bound;
    'outer: loop {
        let idx = match rem.next_term_below(cursor) {
            Some(i) => i,
            None => break,
        };
        let (mono, coeff) = rem.terms[idx].clone();
        // Fewest-terms divisor wins; ties to the earliest basis element.
        let mut best: Option<(usize, usize)> = None;
        for (i, g) in basis.iter().enumerate() {
            if Some(i) == skip || g.is_zero() {
                continue;
            }
            if g.lead().0.divides(mono) {
                let nt = g.len();
                if best.map_or(true, |(bn, bi)| nt < bn || (nt == bn && i < bi)) {
                    best = Some((nt, i));
                }
            }
        }
        if let Some((_, i)) = best {
            let g = &basis[i];
            let (lm, lc) = g.lead();
            let shift = mono.div(*lm);
            let gcd = lc.gcd(&coeff);
            let alpha = lc / &gcd;
            let beta = -(&coeff / &gcd);
            rem.scale_mut(&alpha);
            rem = rem.add_scaled_shifted(g, shift, &beta);
            if rem.is_zero() {
                return rem;
            }
            if rem.max_bits() > strip_threshold {
                rem.make_primitive();
                strip_threshold = rem.max_bits() * 2 + 256;
            }
            continue 'outer;
        }
        cursor = Some(mono);
    }
    rem.make_primitive();
    rem
}

/// S-polynomial in fraction-free form:
/// `(lc_g/d)·(lcm/lm_f)·f − (lc_f/d)·(lcm/lm_g)·g`, `d = gcd(lc_f, lc_g)`.
pub(super) fn s_poly_int(f: &GbPoly, g: &GbPoly) -> GbPoly {
    let (lm_f, lc_f) = f.lead();
    let (lm_g, lc_g) = g.lead();
    let lcm = lm_f.lcm(*lm_g);
    let d = lc_f.gcd(lc_g);
    let scale_f = lc_g / &d;
    let scale_g = -(lc_f / &d);
    let mut left = f.clone();
    left.shift_scale_mut(lcm.div(*lm_f), &scale_f);
    left.add_scaled_shifted(g, lcm.div(*lm_g), &scale_g)
}
