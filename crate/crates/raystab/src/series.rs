//! Exact truncated power series and the generating-function pipeline for
//! limiting ET0L grammars: multivariate series for table languages, the
//! fixed-point recurrence, and Green-function evaluation.
//!
//! Counting series use big natural coefficients; Green coefficients are big
//! rationals. Word counting on table automata goes through determinization so
//! words are counted once, never once per accepting path.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::automaton::{AutomatonError, Nfa, Sym};
use crate::et0l::{Et0lError, LimitingGrammar};
use crate::par;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Et0l(#[from] Et0lError),
    #[error("no stabilization within {0} iterations")]
    NoStabilization(usize),
    #[error("variable count mismatch: expected {expected}, got {got}")]
    VariableMismatch { expected: usize, got: usize },
}

/// Univariate series with exact natural coefficients `c_0..c_cap`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UniSeries {
    pub coeffs: Vec<BigUint>,
}

impl UniSeries {
    pub fn zero(cap: usize) -> Self {
        UniSeries { coeffs: vec![BigUint::zero(); cap + 1] }
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn as_u64(&self) -> Option<Vec<u64>> {
        self.coeffs.iter().map(|c| u64::try_from(c).ok()).collect()
    }
}

/// Sparse multivariate series over variables `0..nvars`, truncated at a cap
/// on the weighted total degree `Σ weight_i · e_i`. Plain total degree is the
/// all-ones weighting; a zero weight lets a variable escape truncation, which
/// is how nonterminals with empty-word yields are kept sound. Exponent
/// vectors are dense `u16` rows; zero terms are never stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultiSeries {
    pub nvars: usize,
    pub cap: usize,
    weights: Vec<usize>,
    terms: BTreeMap<Vec<u16>, BigUint>,
}

impl MultiSeries {
    pub fn zero(nvars: usize, cap: usize) -> Self {
        MultiSeries { nvars, cap, weights: vec![1; nvars], terms: BTreeMap::new() }
    }

    pub fn zero_weighted(cap: usize, weights: Vec<usize>) -> Self {
        MultiSeries { nvars: weights.len(), cap, weights, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, cap: usize, value: BigUint) -> Self {
        let mut s = Self::zero(nvars, cap);
        if !value.is_zero() {
            s.terms.insert(vec![0; nvars], value);
        }
        s
    }

    pub fn one(nvars: usize, cap: usize) -> Self {
        Self::constant(nvars, cap, BigUint::one())
    }

    pub fn one_like(other: &MultiSeries) -> Self {
        let mut s = Self::zero_weighted(other.cap, other.weights.clone());
        s.terms.insert(vec![0; s.nvars], BigUint::one());
        s
    }

    pub fn var(nvars: usize, cap: usize, i: usize) -> Self {
        Self::var_weighted(cap, vec![1; nvars], i)
    }

    pub fn var_weighted(cap: usize, weights: Vec<usize>, i: usize) -> Self {
        assert!(i < weights.len());
        let mut s = Self::zero_weighted(cap, weights);
        if s.weights[i] <= cap {
            let mut exp = vec![0u16; s.nvars];
            exp[i] = 1;
            s.terms.insert(exp, BigUint::one());
        }
        s
    }

    fn degree_of(&self, exp: &[u16]) -> usize {
        exp.iter()
            .zip(&self.weights)
            .map(|(&e, &w)| (e as usize).saturating_mul(w))
            .fold(0usize, |a, b| a.saturating_add(b))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &BigUint)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, exp: Vec<u16>, coeff: BigUint) {
        assert_eq!(exp.len(), self.nvars);
        if coeff.is_zero() || self.degree_of(&exp) > self.cap {
            return;
        }
        let entry = self.terms.entry(exp).or_insert_with(BigUint::zero);
        *entry += coeff;
    }

    pub fn add(&self, other: &MultiSeries) -> MultiSeries {
        assert_eq!(self.nvars, other.nvars);
        debug_assert_eq!(self.weights, other.weights);
        let mut out = self.clone();
        out.cap = self.cap.min(other.cap);
        let weights = out.weights.clone();
        out.terms.retain(|e, _| {
            e.iter().zip(&weights).map(|(&x, &w)| x as usize * w).sum::<usize>() <= out.cap
        });
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn mul(&self, other: &MultiSeries) -> MultiSeries {
        assert_eq!(self.nvars, other.nvars);
        debug_assert_eq!(self.weights, other.weights);
        let cap = self.cap.min(other.cap);
        let mut out = MultiSeries::zero_weighted(cap, self.weights.clone());
        for (ea, ca) in &self.terms {
            let da = self.degree_of(ea);
            if da > cap {
                continue;
            }
            for (eb, cb) in &other.terms {
                if da + self.degree_of(eb) > cap {
                    continue;
                }
                let exp: Vec<u16> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(exp, ca * cb);
            }
        }
        out
    }

    /// Truncates to a smaller cap.
    pub fn truncate(&self, cap: usize) -> MultiSeries {
        let mut out = MultiSeries::zero_weighted(cap.min(self.cap), self.weights.clone());
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    /// Substitutes a replacement series for every variable (use
    /// `MultiSeries::var` for variables that stay themselves). Exact truncated
    /// composition; replacement powers are computed per monomial with a memo.
    pub fn substitute(&self, replacements: &[MultiSeries]) -> Result<MultiSeries, SeriesError> {
        if replacements.len() != self.nvars {
            return Err(SeriesError::VariableMismatch {
                expected: self.nvars,
                got: replacements.len(),
            });
        }
        let Some(template) = replacements.first() else {
            return Ok(self.clone()); // zero variables: only constant terms
        };
        let cap = self.cap.min(template.cap);
        // powers[i][k] = replacements[i]^k, filled on demand
        let mut powers: Vec<Vec<MultiSeries>> = replacements
            .iter()
            .map(|r| {
                let mut one = MultiSeries::one_like(r);
                one.cap = cap;
                vec![one, r.truncate(cap)]
            })
            .collect();

        let monomials: Vec<(Vec<u16>, BigUint)> =
            self.terms.iter().map(|(e, c)| (e.clone(), c.clone())).collect();
        for (exp, _) in &monomials {
            for (i, &e) in exp.iter().enumerate() {
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().mul(&powers[i][1]);
                    powers[i].push(next);
                }
            }
        }
        let parallel = par::parallel_available() && monomials.len() > 64;
        let weights = template.weights.clone();
        let parts = par::map_vec(parallel, monomials, |(exp, coeff)| {
            let mut acc = MultiSeries::zero_weighted(cap, weights.clone());
            acc.add_term(vec![0; acc.nvars], coeff);
            for (i, &e) in exp.iter().enumerate() {
                if e > 0 {
                    acc = acc.mul(&powers[i][e as usize]);
                }
            }
            acc
        });
        let mut out = MultiSeries::zero_weighted(cap, weights);
        for p in parts {
            out = out.add(&p);
        }
        Ok(out)
    }

    /// Collapses to a univariate series by total degree; meaningful when the
    /// remaining variables all stand for `z`.
    pub fn to_univariate(&self) -> UniSeries {
        let mut out = UniSeries::zero(self.cap);
        for (e, c) in &self.terms {
            let d = total_degree(e);
            if d <= self.cap {
                out.coeffs[d] += c;
            }
        }
        out
    }

    /// Keeps only terms whose variables outside `keep` all have exponent 0.
    pub fn section_zero_outside(&self, keep: &dyn Fn(usize) -> bool) -> MultiSeries {
        let mut out = MultiSeries::zero_weighted(self.cap, self.weights.clone());
        for (e, c) in &self.terms {
            if e.iter().enumerate().all(|(i, &x)| x == 0 || keep(i)) {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    }
}

fn total_degree(exp: &[u16]) -> usize {
    exp.iter().map(|&e| e as usize).sum()
}

/// Multivariate generating function of the words accepted by the automaton:
/// the coefficient of a monomial counts accepted words with those symbol
/// multiplicities. Computed on the determinized automaton so words (not
/// accepting paths) are counted; `variables` maps each edge symbol to a
/// variable index and `weights` grades the truncation.
pub fn regular_gf(
    nfa: &Nfa,
    variables: &dyn Fn(Sym) -> usize,
    weights: Vec<usize>,
    cap: usize,
    state_cap: usize,
) -> Result<MultiSeries, SeriesError> {
    let dfa = nfa.determinize(state_cap)?;
    let n = dfa.accept.len();
    let mut out = MultiSeries::zero_weighted(cap, weights.clone());
    // per-state series of words reaching the state, grown one length at a
    // time; zero-weight symbols allow words longer than the cap, but without
    // zero-weight cycles everything dies out within (cap+1)·n extra letters
    let round_cap = (cap + 1) * (n + 1) + n + 1;
    let mut cur: Vec<MultiSeries> =
        (0..n).map(|_| MultiSeries::zero_weighted(cap, weights.clone())).collect();
    cur[0] = MultiSeries::one_like(&out);
    for _ in 0..=round_cap {
        for (q, series) in cur.iter().enumerate() {
            if dfa.accept[q] && series.num_terms() > 0 {
                out = out.add(series);
            }
        }
        let mut live = false;
        let mut next: Vec<MultiSeries> =
            (0..n).map(|_| MultiSeries::zero_weighted(cap, weights.clone())).collect();
        for (q, series) in cur.iter().enumerate() {
            if series.num_terms() == 0 {
                continue;
            }
            for (&sym, &q2) in &dfa.edges[q] {
                let var = MultiSeries::var_weighted(cap, weights.clone(), variables(sym));
                let prod = series.mul(&var);
                if prod.num_terms() > 0 {
                    live = true;
                    next[q2 as usize] = next[q2 as usize].add(&prod);
                }
            }
        }
        if !live {
            return Ok(out);
        }
        cur = next;
    }
    Err(SeriesError::NoStabilization(round_cap))
}

/// Output of the generating-function recurrence.
#[derive(Clone, Debug)]
pub struct GfunRun {
    pub series: UniSeries,
    /// first `n` with equal consecutive evaluations
    pub stabilization: usize,
}

/// Generating function of a limiting grammar's language, truncated at degree
/// `cap`: iterate `g_{n+1} = g_n ∘ h_β`, evaluate through the γ-terminal
/// series, stop when two consecutive evaluations agree.
///
/// Variables are one `x_i` per nonterminal plus a single `z` for every
/// terminal (the recurrence only ever needs terminal weights collapsed).
pub fn gfun_recurrence(lim: &LimitingGrammar, cap: usize) -> Result<GfunRun, SeriesError> {
    gfun_recurrence_capped(lim, cap, 4 * cap + 64)
}

pub fn gfun_recurrence_capped(
    lim: &LimitingGrammar,
    cap: usize,
    round_cap: usize,
) -> Result<GfunRun, SeriesError> {
    let symbols = lim.symbols();
    let nts: Vec<Sym> = symbols.nonterminals().collect();
    let nt_index: BTreeMap<Sym, usize> =
        nts.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let k = nts.len();
    let z = k; // variables: x_0..x_{k-1}, z at index k
    let var_of = |s: Sym| -> usize {
        if symbols.is_terminal(s) {
            z
        } else {
            nt_index[&s]
        }
    };
    // grade each x_i by the least terminal yield ever reachable from X_i, so
    // weighted truncation never discards a monomial that could still
    // contribute below the cap
    let mu = lim.min_terminal_yield();
    let mut weights: Vec<usize> =
        nts.iter().map(|&v| mu[v as usize].unwrap_or(cap + 1)).collect();
    weights.push(1); // z
    let state_cap = 1 << 14;

    // h_β and H_γ per nonterminal; H_γ keeps only all-terminal words
    let mut h_beta: Vec<MultiSeries> = Vec::with_capacity(k);
    let mut h_gamma_terminal: Vec<MultiSeries> = Vec::with_capacity(k);
    for &v in &nts {
        h_beta.push(regular_gf(&lim.beta().language(v), &var_of, weights.clone(), cap, state_cap)?);
        let full = regular_gf(&lim.gamma().language(v), &var_of, weights.clone(), cap, state_cap)?;
        h_gamma_terminal.push(full.section_zero_outside(&|i| i == z));
    }

    // evaluation replacements: x_i -> H_{γ,i}(z), z -> z
    let mut eval_reps: Vec<MultiSeries> = h_gamma_terminal.clone();
    eval_reps.push(MultiSeries::var_weighted(cap, weights.clone(), z));
    // recurrence replacements: x_i -> h_{β,i}, z -> z
    let mut beta_reps = h_beta;
    beta_reps.push(MultiSeries::var_weighted(cap, weights.clone(), z));

    let mut g = regular_gf(
        &lim.alpha().language(lim.grammar().start),
        &var_of,
        weights.clone(),
        cap,
        state_cap,
    )?;
    let mut prev_eval = g.substitute(&eval_reps)?.to_univariate();
    for n in 0..round_cap {
        g = g.substitute(&beta_reps)?;
        let eval = g.substitute(&eval_reps)?.to_univariate();
        if eval == prev_eval {
            return Ok(GfunRun { series: eval, stabilization: n });
        }
        prev_eval = eval;
    }
    Err(SeriesError::NoStabilization(round_cap))
}

/// Green-function coefficients from the language series: scales coefficient
/// `m` by `|X|^{-m}`.
pub fn green_from_f(f: &UniSeries, x_count: usize) -> Vec<BigRational> {
    assert!(x_count >= 1);
    let x = BigUint::from(x_count);
    let mut denom = BigUint::one();
    let mut out = Vec::with_capacity(f.coeffs.len());
    for c in &f.coeffs {
        out.push(BigRational::new(c.clone().into(), denom.clone().into()));
        denom *= &x;
    }
    out
}
