//! Gröbner bases via Buchberger's algorithm, and the degree-2 reduction of
//! kinematic constraint systems.
//!
//! The implementation keeps intermediate polynomials as primitive integer
//! polynomials (content-stripped, positive leading coefficient) and uses
//! pseudo-division in the inner loop, which avoids per-operation gcd work on
//! rationals. Pair pruning follows Gebauer-Möller, i.e. Buchberger's coprime
//! and chain criteria. The final basis is inter-reduced and made monic, so it
//! is the unique reduced Gröbner basis of the ideal for the fixed ordering.

mod engine;

use crate::poly::{Monomial, MonomialOrder, Polynomial};

use engine::{reduce_full, reduce_full_tail, s_poly_int, GbPoly, PackedMono};
use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroebnerError {
    #[error("input system is empty or all zero")]
    EmptyInput,
    #[error("variable counts differ across input polynomials")]
    VarCountMismatch,
    #[error(
        "resource budget exceeded after {pairs} pair reductions in {elapsed:.1?} \
         (caps: {max_pairs} pairs, {time_limit:.1?})"
    )]
    BudgetExceeded {
        pairs: usize,
        elapsed: Duration,
        max_pairs: usize,
        time_limit: Duration,
    },
    #[error("degree-2 subset generates a strictly smaller ideal (non-generic instance)")]
    NonGenericInstance {
        full_basis: GroebnerBasis,
        subset_basis: GroebnerBasis,
    },
    #[error("zero polynomial passed to s_polynomial")]
    ZeroInput,
    #[error("system exceeds the engine's packed-monomial limits (16 variables, degree 120)")]
    TooLarge,
}

/// Caps on the basis computation. Exceeding either cap is a hard error;
/// partial bases are never returned.
#[derive(Debug, Clone, Copy)]
pub struct GroebnerOptions {
    pub max_pair_reductions: usize,
    pub time_limit: Duration,
    /// Log basis growth to stderr every few hundred pairs.
    pub log_progress: bool,
}

impl Default for GroebnerOptions {
    fn default() -> Self {
        GroebnerOptions {
            max_pair_reductions: 200_000,
            time_limit: Duration::from_secs(60),
            log_progress: false,
        }
    }
}

/// A reduced Gröbner basis: monic generators, tails fully reduced, sorted
/// ascending by leading monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroebnerBasis {
    pub generators: Vec<Polynomial>,
    pub ordering: MonomialOrder,
}

impl GroebnerBasis {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// True when the basis is `{1}`, i.e. the ideal is the whole ring and the
    /// constraint variety is empty.
    pub fn is_trivial(&self) -> bool {
        self.generators.len() == 1 && self.generators[0].total_degree() == 0
    }

    /// Normal form modulo this basis; canonical because the basis is reduced.
    pub fn normal_form(&self, p: &Polynomial) -> Polynomial {
        p.normal_form(&self.generators, self.ordering)
    }

    /// Leading monomials of the generators.
    pub fn leading_monomials(&self) -> Vec<Monomial> {
        self.generators
            .iter()
            .map(|g| g.leading_monomial(self.ordering).expect("reduced basis has no zero").clone())
            .collect()
    }
}

/// S-polynomial `S(f,g) = (lcm/lt(f))·f − (lcm/lt(g))·g`.
pub fn s_polynomial(
    f: &Polynomial,
    g: &Polynomial,
    ord: MonomialOrder,
) -> Result<Polynomial, GroebnerError> {
    let (lm_f, lc_f) = f.leading_term(ord).map_err(|_| GroebnerError::ZeroInput)?;
    let (lm_g, lc_g) = g.leading_term(ord).map_err(|_| GroebnerError::ZeroInput)?;
    let lcm = lm_f.lcm(lm_g);
    let shift_f = lcm.checked_div(lm_f).unwrap();
    let shift_g = lcm.checked_div(lm_g).unwrap();
    let lc_f = lc_f.clone();
    let lc_g = lc_g.clone();
    let mut out = Polynomial::zero(f.nvars());
    out.add_scaled_shifted(f, &shift_f, &lc_f.recip());
    out.add_scaled_shifted(g, &shift_g, &(-lc_g.recip()));
    Ok(out)
}

struct Budget {
    start: Instant,
    pairs: usize,
    opts: GroebnerOptions,
}

impl Budget {
    fn new(opts: GroebnerOptions) -> Self {
        Budget { start: Instant::now(), pairs: 0, opts }
    }

    fn charge_pair(&mut self) -> Result<(), GroebnerError> {
        self.pairs += 1;
        if self.pairs > self.opts.max_pair_reductions
            || self.start.elapsed() > self.opts.time_limit
        {
            Err(GroebnerError::BudgetExceeded {
                pairs: self.pairs,
                elapsed: self.start.elapsed(),
                max_pairs: self.opts.max_pair_reductions,
                time_limit: self.opts.time_limit,
            })
        } else {
            Ok(())
        }
    }
}

/// Buchberger's algorithm with Gebauer-Möller pair pruning and normal
/// (minimal-lcm-first) selection. Returns the reduced Gröbner basis.
pub fn buchberger(
    input: &[Polynomial],
    ord: MonomialOrder,
    opts: GroebnerOptions,
) -> Result<GroebnerBasis, GroebnerError> {
    let polys: Vec<Polynomial> = input.iter().filter(|p| !p.is_zero()).cloned().collect();
    if polys.is_empty() {
        return Err(GroebnerError::EmptyInput);
    }
    let nvars = polys[0].nvars();
    if polys.iter().any(|p| p.nvars() != nvars) {
        return Err(GroebnerError::VarCountMismatch);
    }

    let mut budget = Budget::new(opts);
    let mut basis: Vec<GbPoly> = Vec::new();
    // Pair queue keyed for normal selection: smallest lcm degree first, then
    // grevlex-smallest lcm, then indices; fully deterministic.
    let mut pairs: BTreeSet<(u32, Reverse<u128>, usize, usize)> = BTreeSet::new();

    fn add_generator(
        h: GbPoly,
        basis: &mut Vec<GbPoly>,
        pairs: &mut BTreeSet<(u32, Reverse<u128>, usize, usize)>,
    ) {
        let t = basis.len();
        let lm_t = basis_lead(&h);

        // Gebauer-Möller update: prune the new pair set against itself, drop
        // old pairs absorbed by the new leading monomial (chain criterion),
        // then apply the coprime criterion to what survives.
        let lcms: Vec<PackedMono> = basis.iter().map(|g| basis_lead(g).lcm(lm_t)).collect();
        let mut keep_new: Vec<bool> = vec![true; t];
        for i in 0..t {
            if !keep_new[i] {
                continue;
            }
            for j in 0..t {
                if i == j || !keep_new[j] {
                    continue;
                }
                if lcms[j].divides(lcms[i]) && lcms[j] != lcms[i] {
                    keep_new[i] = false;
                    break;
                }
            }
        }
        for i in 0..t {
            if !keep_new[i] {
                continue;
            }
            for j in 0..i {
                if keep_new[j] && lcms[j] == lcms[i] {
                    keep_new[i] = false;
                    break;
                }
            }
        }
        pairs.retain(|(deg, Reverse(rev), i, j)| {
            let lcm_ij = PackedMono::from_key(*rev, *deg);
            let li = basis_lead(&basis[*i]);
            let lj = basis_lead(&basis[*j]);
            !(lm_t.divides(lcm_ij) && li.lcm(lm_t) != lcm_ij && lj.lcm(lm_t) != lcm_ij)
        });
        for i in 0..t {
            if keep_new[i] && !basis_lead(&basis[i]).is_coprime(lm_t) {
                pairs.insert((lcms[i].deg(), Reverse(lcms[i].rev_key()), i, t));
            }
        }
        basis.push(h);
    }

    fn basis_lead(g: &GbPoly) -> PackedMono {
        g.lead().0
    }

    for p in &polys {
        let gp = GbPoly::from_polynomial(p).ok_or(GroebnerError::TooLarge)?;
        let reduced = reduce_full(gp, &basis, None);
        if !reduced.is_zero() {
            add_generator(reduced, &mut basis, &mut pairs);
        }
    }

    let mut additions_since_sweep = 0usize;
    while let Some(entry) = pairs.iter().next().cloned() {
        pairs.remove(&entry);
        let (deg, _, i, j) = entry;
        budget.charge_pair()?;
        if additions_since_sweep >= 48 {
            additions_since_sweep = 0;
            tail_reduce_sweep(&mut basis);
        }
        if opts.log_progress && budget.pairs % 200 == 0 {
            let max_bits = basis.iter().map(|g| g.max_bits()).max().unwrap_or(0);
            let max_terms = basis.iter().map(|g| g.len()).max().unwrap_or(0);
            eprintln!(
                "[gb] pairs={} basis={} queue={} lcm_deg={} max_bits={} max_terms={} t={:.1?}",
                budget.pairs, basis.len(), pairs.len(), deg, max_bits, max_terms,
                budget.start.elapsed()
            );
        }
        let s = s_poly_int(&basis[i], &basis[j]);
        if s.is_zero() {
            continue;
        }
        let t_red = Instant::now();
        let reduced = reduce_full(s, &basis, None);
        if !reduced.is_zero() {
            if reduced.lead().0.deg() > engine::MAX_EXP {
                return Err(GroebnerError::TooLarge);
            }
            if opts.log_progress && t_red.elapsed().as_millis() > 400 {
                eprintln!(
                    "[gb] slow NF: {:.1?} -> deg {} terms {} bits {}",
                    t_red.elapsed(),
                    reduced.lead().0.deg(),
                    reduced.len(),
                    reduced.max_bits()
                );
            }
            add_generator(reduced, &mut basis, &mut pairs);
            additions_since_sweep += 1;
        } else if opts.log_progress && t_red.elapsed().as_millis() > 400 {
            eprintln!("[gb] slow zero-NF: {:.1?}", t_red.elapsed());
        }
    }

    Ok(reduce_basis(basis, nvars, ord))
}

/// Re-reduces the tails of oversized basis elements against the current
/// basis. Leading terms are untouched, so pair bookkeeping stays valid; the
/// ideal is unchanged. This keeps early high-degree generators from dragging
/// huge coefficients through every later reduction.
fn tail_reduce_sweep(basis: &mut Vec<GbPoly>) {
    for idx in 0..basis.len() {
        if basis[idx].max_bits() < 1024 || basis[idx].len() < 2 {
            continue;
        }
        let snapshot = basis[idx].clone();
        let reduced = reduce_full_tail(snapshot, basis, idx);
        basis[idx] = reduced;
    }
}

/// Inter-reduces a basis whose S-polynomials already reduce to zero, yielding
/// the unique reduced Gröbner basis: minimal leading monomials, monic
/// generators, fully reduced tails, sorted ascending.
fn reduce_basis(mut gens: Vec<GbPoly>, nvars: usize, ord: MonomialOrder) -> GroebnerBasis {
    gens.retain(|g| !g.is_zero());
    gens.sort_by(|a, b| a.lead().0.cmp(&b.lead().0));
    let mut minimal: Vec<GbPoly> = Vec::new();
    for g in gens {
        let lm = g.lead().0;
        if !minimal.iter().any(|h| h.lead().0.divides(lm)) {
            minimal.push(g);
        }
    }
    let snapshot = minimal.clone();
    let mut reduced: Vec<Polynomial> = Vec::new();
    for (i, g) in snapshot.iter().enumerate() {
        let nf = reduce_full(g.clone(), &snapshot, Some(i));
        debug_assert!(!nf.is_zero());
        reduced.push(
            nf.to_polynomial(nvars)
                .monic(ord)
                .expect("nonzero generator"),
        );
    }
    reduced.sort_by(|a, b| {
        a.leading_monomial(ord)
            .unwrap()
            .cmp(b.leading_monomial(ord).unwrap())
    });
    GroebnerBasis { generators: reduced, ordering: ord }
}

/// Generators of total degree at most `d`, order preserved.
pub fn select_degree_le(basis: &GroebnerBasis, d: u32) -> Vec<Polynomial> {
    basis
        .generators
        .iter()
        .filter(|g| g.total_degree() <= d)
        .cloned()
        .collect()
}

/// Whether two generating sets span the same ideal, decided by comparing
/// their reduced Gröbner bases (unique for a fixed ordering).
pub fn ideal_equal(
    f1: &[Polynomial],
    f2: &[Polynomial],
    ord: MonomialOrder,
    opts: GroebnerOptions,
) -> Result<bool, GroebnerError> {
    let g1 = buchberger(f1, ord, opts)?;
    let g2 = buchberger(f2, ord, opts)?;
    Ok(g1.generators == g2.generators)
}

/// Output of [`reduce_constraints`]: the degree-≤2 generating set plus the
/// full reduced basis it was drawn from.
#[derive(Debug, Clone)]
pub struct ReducedConstraints {
    pub degree2: Vec<Polynomial>,
    pub basis: GroebnerBasis,
}

/// Reduces one pose's kinematic constraint system `{p_j} ∪ {q_i}` to a
/// degree-≤2 generating set.
///
/// With `verify` set, re-derives a basis from the degree-2 subset and checks
/// it equals the full basis; a mismatch means the instance fell outside the
/// generic locus and is surfaced as [`GroebnerError::NonGenericInstance`].
pub fn reduce_constraints(
    pj: &[Polynomial],
    qi: &[Polynomial],
    verify: bool,
    opts: GroebnerOptions,
) -> Result<ReducedConstraints, GroebnerError> {
    let mut system: Vec<Polynomial> = Vec::with_capacity(pj.len() + qi.len());
    system.extend_from_slice(pj);
    system.extend_from_slice(qi);
    let ord = MonomialOrder::GradedReverseLex;
    let basis = buchberger(&system, ord, opts)?;
    let degree2 = select_degree_le(&basis, 2);
    if verify {
        let subset_basis = buchberger(&degree2, ord, opts)?;
        if subset_basis.generators != basis.generators {
            return Err(GroebnerError::NonGenericInstance {
                full_basis: basis,
                subset_basis,
            });
        }
    }
    Ok(ReducedConstraints { degree2, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{default_var_names, parse_polynomial};

    const ORD: MonomialOrder = MonomialOrder::GradedReverseLex;

    fn p(s: &str, nvars: usize) -> Polynomial {
        parse_polynomial(s, &default_var_names(nvars)).unwrap()
    }

    fn gb(fs: &[Polynomial]) -> GroebnerBasis {
        buchberger(fs, ORD, GroebnerOptions::default()).unwrap()
    }

    #[test]
    fn s_poly_hand_example() {
        // S(x^2-1, xy-1) = y(x^2-1) - x(xy-1) = x - y
        let f = p("x1^2 - 1", 2);
        let g = p("x1*x2 - 1", 2);
        let s = s_polynomial(&f, &g, ORD).unwrap();
        assert_eq!(s, p("x1 - x2", 2));
    }

    #[test]
    fn s_poly_of_identical_inputs_is_zero() {
        let f = p("x1^2*x2 + 3*x1", 2);
        assert!(s_polynomial(&f, &f, ORD).unwrap().is_zero());
    }

    #[test]
    fn s_poly_coprime_reduces_to_zero() {
        let f = p("x1", 2);
        let g = p("x2", 2);
        let s = s_polynomial(&f, &g, ORD).unwrap();
        assert!(s.normal_form(&[f, g], ORD).is_zero());
    }

    #[test]
    fn s_poly_zero_input_rejected() {
        let f = p("x1", 2);
        assert!(matches!(
            s_polynomial(&f, &Polynomial::zero(2), ORD),
            Err(GroebnerError::ZeroInput)
        ));
    }

    #[test]
    fn circle_and_line() {
        // {c^2+s^2-1, c-1} reduces to {c-1, s^2}.
        let f1 = p("x1^2 + x2^2 - 1", 2);
        let f2 = p("x1 - 1", 2);
        let basis = gb(&[f1, f2]);
        assert_eq!(basis.generators, vec![p("x1 - 1", 2), p("x2^2", 2)]);
    }

    #[test]
    fn principal_ideal_is_kept() {
        let f = p("x1", 2);
        let basis = gb(&[f.clone()]);
        assert_eq!(basis.generators, vec![f]);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            buchberger(&[Polynomial::zero(2)], ORD, GroebnerOptions::default()),
            Err(GroebnerError::EmptyInput)
        ));
    }

    #[test]
    fn basis_is_permutation_invariant() {
        let fs = [
            p("x1^2 + x2^2 + x3^2 - 1", 3),
            p("x1*x2 - x3", 3),
            p("x1 - x2^2", 3),
        ];
        let b1 = gb(&fs);
        let mut shuffled = fs.to_vec();
        shuffled.reverse();
        let b2 = gb(&shuffled);
        assert_eq!(b1.generators, b2.generators);
    }

    #[test]
    fn s_polynomials_of_basis_reduce_to_zero() {
        let fs = [
            p("x1^2 - x2", 3),
            p("x2^2 - x3", 3),
            p("x1*x3 - x2^2", 3),
        ];
        let basis = gb(&fs);
        for i in 0..basis.len() {
            for j in (i + 1)..basis.len() {
                let s = s_polynomial(&basis.generators[i], &basis.generators[j], ORD).unwrap();
                assert!(basis.normal_form(&s).is_zero(), "S({i},{j}) did not reduce");
            }
        }
        // Membership soundness: every input reduces to zero.
        for f in &fs {
            assert!(basis.normal_form(f).is_zero());
        }
    }

    #[test]
    fn select_degree_filters() {
        let f1 = p("x1^2 + x2^2 - 1", 2);
        let f2 = p("x1 - 1", 2);
        let basis = gb(&[f1, f2]);
        assert_eq!(select_degree_le(&basis, 1), vec![p("x1 - 1", 2)]);
        assert_eq!(select_degree_le(&basis, 2).len(), basis.len());
    }

    #[test]
    fn ideal_equality_examples() {
        let opts = GroebnerOptions::default();
        // <x^2, x^3> = <x^2>
        let f1 = [p("x1^2", 1), p("x1^3", 1)];
        let f2 = [p("x1^2", 1)];
        assert!(ideal_equal(&f1, &f2, ORD, opts).unwrap());
        // reflexivity
        assert!(ideal_equal(&f1, &f1, ORD, opts).unwrap());
        // <x> != <x^2>
        let g1 = [p("x1", 1)];
        let g2 = [p("x1^2", 1)];
        assert!(!ideal_equal(&g1, &g2, ORD, opts).unwrap());
    }

    #[test]
    fn budget_is_enforced() {
        let fs = [
            p("x1^2 + x2^2 + x3^2 - 1", 3),
            p("x1*x2*x3 - 1", 3),
            p("x1^3 - x2", 3),
        ];
        let tight = GroebnerOptions {
            max_pair_reductions: 1,
            time_limit: Duration::from_secs(60),
            log_progress: false,
        };
        assert!(matches!(
            buchberger(&fs, ORD, tight),
            Err(GroebnerError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn katsura3_matches_reference_basis() {
        // Reduced grevlex basis cross-checked with an independent computer
        // algebra system (sympy) and frozen here.
        let fs = [
            p("x1 + 2*x2 + 2*x3 - 1", 3),
            p("x1^2 + 2*x2^2 + 2*x3^2 - x1", 3),
            p("2*x1*x2 + 2*x2*x3 - x2", 3),
        ];
        let basis = gb(&fs);
        let mut expected = vec![
            p("x3^3 - 79/210*x3^2 + 1/30*x2 + 1/70*x3", 3),
            p("x2^2 - 1/5*x2 - 3/5*x3^2 + 1/5*x3", 3),
            p("x2*x3 - 1/10*x2 + 6/5*x3^2 - 2/5*x3", 3),
            p("x1 + 2*x2 + 2*x3 - 1", 3),
        ];
        expected.sort_by(|a, b| {
            a.leading_monomial(ORD).unwrap().cmp(b.leading_monomial(ORD).unwrap())
        });
        assert_eq!(basis.generators, expected);
    }

    #[test]
    fn mixed_system_matches_reference_basis() {
        // Same provenance as katsura3_matches_reference_basis.
        let fs = [
            p("x1^2 + x2^2 + x3^2 - 1", 3),
            p("x1*x2 - x3", 3),
            p("x1 - x2^2", 3),
        ];
        let basis = gb(&fs);
        let mut expected = vec![
            p("x1*x3^2 - 2*x1 + 1", 3),
            p("x2 + x3^3 - 2*x3", 3),
            p("x1^2 + x1 + x3^2 - 1", 3),
            p("x1*x2 - x3", 3),
            p("x2^2 - x1", 3),
            p("x2*x3 + x1 + x3^2 - 1", 3),
        ];
        expected.sort_by(|a, b| {
            a.leading_monomial(ORD).unwrap().cmp(b.leading_monomial(ORD).unwrap())
        });
        assert_eq!(basis.generators, expected);
    }

    #[test]
    fn reduce_constraints_on_low_degree_input_verifies() {
        // Already degree-<=2 system: reduction keeps an equivalent ideal.
        let pj = [p("x1*x2 - 1", 3), p("x2 - x3", 3)];
        let qi = [p("x1^2 + x2^2 - 1", 3)];
        let red = reduce_constraints(&pj, &qi, true, GroebnerOptions::default()).unwrap();
        let mut original = pj.to_vec();
        original.extend_from_slice(&qi);
        assert!(ideal_equal(&original, &red.degree2, ORD, GroebnerOptions::default()).unwrap());
    }
}
