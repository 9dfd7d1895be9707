//! Brute-force reference implementations shared by the integration suites.
//! Everything here recomputes results from first principles so the library's
//! closed forms have something independent to be checked against.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use ovfree::algebra::{AlgElement, BlockDiagonal, CPMap};
use ovfree::cumulants::{
    collapse_word, free_cumulant, BWord, DiagonalProfile, JointDistribution, MixedWord,
};
use ovfree::matmodel::{BooleanMoments, EntryKind, EntryModel, MomentRegime};
use ovfree::partitions::{
    enumerate_class, insert, kernel, PartitionClass, SetPartition,
};
use ovfree::{Error, Result};

/// All set partitions of {1..m} built by the textbook recursion: element i
/// joins an existing block or starts a new one.
pub fn brute_force_partitions(m: usize) -> Vec<SetPartition> {
    fn go(m: usize, next: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<SetPartition>) {
        if next > m {
            out.push(SetPartition::new(m, blocks.clone()).unwrap());
            return;
        }
        for i in 0..blocks.len() {
            blocks[i].push(next);
            go(m, next + 1, blocks, out);
            blocks[i].pop();
        }
        blocks.push(vec![next]);
        go(m, next + 1, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    go(m, 1, &mut Vec::new(), &mut out);
    out
}

/// Noncrossing straight from the definition: no s < t < u < v with s, u in
/// one block and t, v in another.
pub fn is_noncrossing_by_definition(pi: &SetPartition) -> bool {
    let m = pi.ground_size();
    for s in 1..=m {
        for t in s + 1..=m {
            for u in t + 1..=m {
                for v in u + 1..=m {
                    if pi.same_block(s, u)
                        && pi.same_block(t, v)
                        && !pi.same_block(s, t)
                    {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Interval straight from the definition: every block is a set of
/// consecutive integers.
pub fn is_interval_by_definition(pi: &SetPartition) -> bool {
    pi.blocks().iter().all(|b| b.last().unwrap() - b[0] + 1 == b.len())
}

pub fn matches_class_by_definition(pi: &SetPartition, class: PartitionClass) -> bool {
    let pair = pi.blocks().iter().all(|b| b.len() == 2);
    let closed = pi.ground_size() >= 1 && pi.same_block(1, pi.ground_size());
    match class {
        PartitionClass::Noncrossing => is_noncrossing_by_definition(pi),
        PartitionClass::Interval => is_interval_by_definition(pi),
        PartitionClass::Pair => pair,
        PartitionClass::NcPair => pair && is_noncrossing_by_definition(pi),
        PartitionClass::IntervalPair => pair && is_interval_by_definition(pi),
        PartitionClass::Closed => closed,
        PartitionClass::ClosedNc => closed && is_noncrossing_by_definition(pi),
    }
}

/// Joins pi (on odd sites) and sigma (on even sites) of {1..2m} by hand.
fn interleave_by_hand(pi: &SetPartition, sigma: &SetPartition) -> SetPartition {
    let m = pi.ground_size();
    let mut blocks = Vec::new();
    for b in pi.blocks() {
        blocks.push(b.iter().map(|p| 2 * p - 1).collect::<Vec<_>>());
    }
    for b in sigma.blocks() {
        blocks.push(b.iter().map(|p| 2 * p).collect::<Vec<_>>());
    }
    SetPartition::new(2 * m, blocks).unwrap()
}

/// Kreweras complement by exhaustion: the coarsest partition sigma such that
/// pi on odd sites interleaved with sigma on even sites stays noncrossing.
/// Panics if the maximum is not unique, which would disprove the lattice
/// structure the fast implementation relies on.
pub fn kreweras_by_exhaustion(pi: &SetPartition) -> SetPartition {
    let m = pi.ground_size();
    let admissible: Vec<SetPartition> = brute_force_partitions(m)
        .into_iter()
        .filter(|sigma| is_noncrossing_by_definition(&interleave_by_hand(pi, sigma)))
        .collect();
    let max = admissible
        .iter()
        .find(|cand| admissible.iter().all(|other| other.leq(cand).unwrap()))
        .expect("admissible set has a maximum");
    max.clone()
}

/// The adjacent-pair quotient recomputed through an explicit index tuple:
/// positions p and q are identified exactly when the unordered pairs
/// {i_p, i_{p+1}} and {i_q, i_{q+1}} agree for the canonical tuple of sigma.
pub fn d_map_by_tuple(sigma: &SetPartition) -> SetPartition {
    let mp1 = sigma.ground_size();
    let tuple: Vec<usize> = (1..=mp1).map(|p| sigma.block_index(p)).collect();
    let pairs: Vec<(usize, usize)> = (0..mp1 - 1)
        .map(|p| {
            let a = tuple[p];
            let b = tuple[p + 1];
            (a.min(b), a.max(b))
        })
        .collect();
    let mut ids = Vec::new();
    let labels: Vec<usize> = pairs
        .iter()
        .map(|pair| {
            if let Some(pos) = ids.iter().position(|known| known == pair) {
                pos
            } else {
                ids.push(*pair);
                ids.len() - 1
            }
        })
        .collect();
    kernel(&labels).unwrap()
}

/// Free cumulant by the defining subtraction: kappa = E minus the sum of
/// kappa^(pi) over all strictly coarser-than-discrete... over all pi in
/// NC(n) except the one-block partition, each evaluated by collapsing with
/// this same function.
pub fn free_cumulant_defining<D: JointDistribution + ?Sized>(
    dist: &D,
    word: &BWord,
) -> Result<AlgElement> {
    let n = word.len();
    if n == 0 {
        return Ok(word.coeffs()[0].clone());
    }
    let mut value = dist.expect(word)?;
    for pi in enumerate_class(n, PartitionClass::Noncrossing)? {
        if pi.num_blocks() == 1 {
            continue;
        }
        let term = collapse_word(word, &pi, &mut |sub| free_cumulant_defining(dist, sub))?;
        value = &value - &term;
    }
    Ok(value)
}

/// Boolean cumulant by the defining subtraction over interval partitions.
pub fn boolean_cumulant_defining<D: JointDistribution + ?Sized>(
    dist: &D,
    word: &BWord,
) -> Result<AlgElement> {
    let n = word.len();
    if n == 0 {
        return Ok(word.coeffs()[0].clone());
    }
    let mut value = dist.expect(word)?;
    for pi in enumerate_class(n, PartitionClass::Interval)? {
        if pi.num_blocks() == 1 {
            continue;
        }
        let term = collapse_word(word, &pi, &mut |sub| boolean_cumulant_defining(dist, sub))?;
        value = &value - &term;
    }
    Ok(value)
}

const DIAG_CODE: usize = 1000;

/// The limiting mixed moment of degree at most four written as the double
/// sum: over noncrossing pairings of the matrix letters compatible with the
/// symbol pattern, and over noncrossing partitions of the diagonal letters
/// whose insertion alongside the pairing stays noncrossing, each term the
/// partitioned cumulant with pair blocks evaluated through eta and diagonal
/// blocks through the profile's free cumulants.
pub fn double_sum_limit_moment(
    profile: &DiagonalProfile,
    etas: &[CPMap],
    word: &MixedWord,
) -> Result<AlgElement> {
    let m = word.degree();
    assert!(m <= 4, "oracle only defined up to degree four");
    let dim = word.dim();
    if m == 0 {
        let coeffs = vec![word.constants()[0].clone(), word.constants()[1].clone()];
        return profile.expect(&BWord::new(coeffs, vec![word.diag_symbols()[0]])?);
    }
    if m % 2 == 1 {
        return Ok(AlgElement::zeros(dim));
    }

    // Letters of the interleaved word: odd sites carry the diagonal symbols
    // (offset so the block dispatch can tell them apart), even sites the
    // matrix symbols.
    let mut letters = Vec::with_capacity(2 * m + 1);
    let mut coeffs = Vec::with_capacity(2 * m + 2);
    coeffs.push(word.constants()[0].clone());
    for j in 0..m {
        letters.push(DIAG_CODE + word.diag_symbols()[j]);
        coeffs.push(AlgElement::identity(dim));
        letters.push(word.matrix_symbols()[j]);
        coeffs.push(word.constants()[j + 1].clone());
    }
    letters.push(DIAG_CODE + word.diag_symbols()[m]);
    coeffs.push(word.constants()[m + 1].clone());
    let big_word = BWord::new(coeffs, letters)?;

    let mut total = AlgElement::zeros(dim);
    let pairings = enumerate_class(m, PartitionClass::NcPair)?;
    let diag_parts = enumerate_class(m + 1, PartitionClass::Noncrossing)?;
    for pairing in &pairings {
        let symbols_match = pairing.blocks().iter().all(|b| {
            word.matrix_symbols()[b[0] - 1] == word.matrix_symbols()[b[1] - 1]
        });
        if !symbols_match {
            continue;
        }
        for sigma in &diag_parts {
            let combined = insert(pairing, sigma)?;
            if !combined.is_noncrossing() {
                continue;
            }
            let term = collapse_word(&big_word, &combined, &mut |sub| {
                dispatch_block(profile, etas, sub)
            })?;
            total = &total + &term;
        }
    }
    Ok(total)
}

fn dispatch_block(
    profile: &DiagonalProfile,
    etas: &[CPMap],
    sub: &BWord,
) -> Result<AlgElement> {
    let letters = sub.letters();
    let all_diag = letters.iter().all(|l| *l >= DIAG_CODE);
    let all_matrix = letters.iter().all(|l| *l < DIAG_CODE);
    if all_diag {
        let remapped = BWord::new(
            sub.coeffs().to_vec(),
            letters.iter().map(|l| l - DIAG_CODE).collect(),
        )?;
        free_cumulant(profile, &remapped)
    } else if all_matrix {
        if letters.len() != 2 || letters[0] != letters[1] {
            return Ok(AlgElement::zeros(sub.dim()));
        }
        let inner = etas[letters[0]].apply(&sub.coeffs()[1])?;
        Ok(&(&sub.coeffs()[0] * &inner) * &sub.coeffs()[2])
    } else {
        Err(Error::InvalidInput("block mixes diagonal and matrix letters".into()))
    }
}

/// One use of a scalar entry inside a tuple product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EntryUse {
    row: usize,
    col: usize,
    symbol: usize,
    kraus: usize,
}

impl EntryUse {
    fn variable(&self) -> (usize, usize, usize, usize) {
        (self.row.min(self.col), self.row.max(self.col), self.symbol, self.kraus)
    }

    fn conjugated(&self) -> bool {
        self.row > self.col
    }

    fn diagonal(&self) -> bool {
        self.row == self.col
    }
}

/// E[u_p u_q] for two uses of Gaussian entries: independent variables are
/// uncorrelated, a diagonal variable has variance one, and an off-diagonal
/// complex Gaussian pairs only with its conjugate.
fn gaussian_cov(a: &EntryUse, b: &EntryUse) -> f64 {
    if a.variable() != b.variable() {
        return 0.0;
    }
    if a.diagonal() || a.conjugated() != b.conjugated() {
        1.0
    } else {
        0.0
    }
}

/// Wick expansion over all perfect matchings of the uses.
fn gaussian_joint_moment(uses: &[EntryUse]) -> f64 {
    if uses.is_empty() {
        return 1.0;
    }
    if uses.len() % 2 == 1 {
        return 0.0;
    }
    let mut total = 0.0;
    for partner in 1..uses.len() {
        let c = gaussian_cov(&uses[0], &uses[partner]);
        if c != 0.0 {
            let rest: Vec<EntryUse> = uses
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != 0 && *i != partner)
                .map(|(_, u)| *u)
                .collect();
            total += c * gaussian_joint_moment(&rest);
        }
    }
    total
}

/// Joint moment of circle-law entries: each off-diagonal variable needs as
/// many conjugated as unconjugated uses, each diagonal sign an even count.
fn circle_joint_moment(uses: &[EntryUse]) -> f64 {
    let mut vars: Vec<(usize, usize, usize, usize)> = uses.iter().map(|u| u.variable()).collect();
    vars.sort_unstable();
    vars.dedup();
    for v in vars {
        let mine: Vec<&EntryUse> = uses.iter().filter(|u| u.variable() == v).collect();
        if mine[0].diagonal() {
            if mine.len() % 2 == 1 {
                return 0.0;
            }
        } else {
            let conj = mine.iter().filter(|u| u.conjugated()).count();
            if 2 * conj != mine.len() {
                return 0.0;
            }
        }
    }
    1.0
}

/// Joint moment of Boolean-independent real entries: the product factors
/// over maximal runs of consecutive uses of one variable.
fn boolean_joint_moment(uses: &[EntryUse], moments: &BooleanMoments) -> Result<f64> {
    let mut sf = 1.0;
    let mut start = 0;
    for p in 1..=uses.len() {
        if p == uses.len() || uses[p].variable() != uses[start].variable() {
            sf *= moments.moment(p - start)?;
            if sf == 0.0 {
                return Ok(0.0);
            }
            start = p;
        }
    }
    Ok(sf)
}

fn scalar_joint_moment(
    uses: &[EntryUse],
    kind: impl Fn(usize) -> EntryKind,
    regime: &MomentRegime,
) -> Result<f64> {
    match regime {
        MomentRegime::Boolean(moments) => boolean_joint_moment(uses, moments),
        MomentRegime::Classical => {
            // Independent symbols factor; within a symbol the law decides.
            let mut symbols: Vec<usize> = uses.iter().map(|u| u.symbol).collect();
            symbols.sort_unstable();
            symbols.dedup();
            let mut sf = 1.0;
            for s in symbols {
                let mine: Vec<EntryUse> =
                    uses.iter().copied().filter(|u| u.symbol == s).collect();
                sf *= match kind(s) {
                    EntryKind::GaussianHermitian => gaussian_joint_moment(&mine),
                    EntryKind::Circle => circle_joint_moment(&mine),
                };
                if sf == 0.0 {
                    return Ok(0.0);
                }
            }
            Ok(sf)
        }
    }
}

/// The expectation of the operator product along one fixed index tuple
/// (i_1, ..., i_{m+1}), diagonal segments realized at their band indices:
/// sum over Kraus choices of the joint scalar moment times the interleaved
/// operator product.
pub fn exhaustive_tuple_expectation(
    profile: &DiagonalProfile,
    models: &[EntryModel],
    regime: &MomentRegime,
    word: &MixedWord,
    n: usize,
    tuple: &[usize],
) -> Result<AlgElement> {
    let m = word.degree();
    assert_eq!(tuple.len(), m + 1);
    let dim = word.dim();
    let diags: Vec<BlockDiagonal> = word_group_diagonals(profile, word, n)?;
    let syms = word.matrix_symbols();

    let r_counts: Vec<usize> = syms.iter().map(|s| models[*s].kraus().len()).collect();
    let mut rbar = vec![0usize; m];
    let mut acc = AlgElement::zeros(dim);
    loop {
        let uses: Vec<EntryUse> = (0..m)
            .map(|p| EntryUse {
                row: tuple[p],
                col: tuple[p + 1],
                symbol: syms[p],
                kraus: rbar[p],
            })
            .collect();
        let sf = scalar_joint_moment(&uses, |s| models[s].kind(), regime)?;
        if sf != 0.0 {
            let mut prod = diags[0].block(tuple[0]).clone();
            for p in 0..m {
                let lambda = &models[syms[p]].kraus()[rbar[p]];
                prod = &(&prod * lambda) * diags[p + 1].block(tuple[p + 1]);
            }
            acc = &acc + &prod.scale(sf);
        }
        if !advance(&mut rbar, &r_counts) {
            break;
        }
    }
    Ok(acc)
}

/// E_n of a word computed with no partition combinatorics at all: loop over
/// every index tuple with matching endpoints, take the literal entry-law
/// expectation of each, and average.
pub fn exhaustive_moment(
    profile: &DiagonalProfile,
    models: &[EntryModel],
    regime: &MomentRegime,
    word: &MixedWord,
    n: usize,
) -> Result<AlgElement> {
    let m = word.degree();
    let dim = word.dim();
    let mut acc = AlgElement::zeros(dim);
    let mut free = vec![0usize; m.max(1)];
    loop {
        let mut tuple = Vec::with_capacity(m + 1);
        tuple.extend_from_slice(&free[..m]);
        tuple.push(free[0]);
        acc = &acc + &exhaustive_tuple_expectation(profile, models, regime, word, n, &tuple)?;
        if !advance(&mut free, &vec![n; m.max(1)]) {
            break;
        }
    }
    let scale = 1.0 / (n as f64).sqrt().powi(m as i32 + 2);
    Ok(acc.scale(scale))
}

fn advance(index: &mut [usize], radix: &[usize]) -> bool {
    for pos in (0..index.len()).rev() {
        index[pos] += 1;
        if index[pos] < radix[pos] {
            return true;
        }
        index[pos] = 0;
    }
    false
}

/// Block-diagonal realization of each diagonal segment of the word,
/// constants absorbed, mirroring how the sampled product is assembled.
pub fn word_group_diagonals(
    profile: &DiagonalProfile,
    word: &MixedWord,
    n: usize,
) -> Result<Vec<BlockDiagonal>> {
    let m = word.degree();
    let sizes = profile.realized_step_sizes(n)?;
    let mut step_of = Vec::with_capacity(n);
    for (j, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            step_of.push(j);
        }
    }
    let constants = word.constants();
    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let blocks: Vec<AlgElement> = (0..n)
            .map(|i| {
                let f = profile.value(word.diag_symbols()[j], step_of[i])?;
                Ok(if j < m {
                    &constants[j] * f
                } else {
                    &(&constants[m] * f) * &constants[m + 1]
                })
            })
            .collect::<Result<_>>()?;
        out.push(BlockDiagonal::from_blocks(blocks)?);
    }
    Ok(out)
}

pub fn random_element(dim: usize, rng: &mut ChaCha12Rng) -> AlgElement {
    AlgElement::random(dim, rng)
}

pub fn random_cpmap(dim: usize, kraus_count: usize, rng: &mut ChaCha12Rng) -> CPMap {
    CPMap::new(
        (0..kraus_count)
            .map(|_| AlgElement::random_selfadjoint(dim, rng))
            .collect(),
    )
    .unwrap()
}

pub fn random_profile(
    dim: usize,
    steps: usize,
    symbols: usize,
    rng: &mut ChaCha12Rng,
) -> DiagonalProfile {
    let weights: Vec<f64> = match steps {
        1 => vec![1.0],
        2 => vec![0.5, 0.5],
        3 => vec![0.5, 0.25, 0.25],
        _ => {
            let mut w = vec![1.0 / steps as f64; steps];
            let sum: f64 = w.iter().take(steps - 1).sum();
            w[steps - 1] = 1.0 - sum;
            w
        }
    };
    let values = (0..symbols)
        .map(|_| {
            (0..steps)
                .map(|_| AlgElement::random_selfadjoint(dim, rng))
                .collect()
        })
        .collect();
    DiagonalProfile::new(weights, values).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}
