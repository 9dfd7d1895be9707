//! Random band matrix models over B = M_k(C): sampling, exact averaged mixed
//! moments at finite band count, Monte Carlo estimation, convergence sweeps
//! against the limit evaluators, and the compression identity of the
//! extended block model.
//!
//! A matrix symbol s is backed by an [`EntryModel`]: selfadjoint Kraus
//! operators Lambda_{s,r} and a scalar entry family. The matrix is
//! Y(s, n) = sum_{i,j} a(i,j) (x) e(i,j) with
//! a(i,j) = n^(-1/2) sum_r Lambda_{s,r} g_r(i,j) and g_r(j,i) = conj g_r(i,j),
//! so that E[a(i,j) b a(j,i)] = (1/n) eta_s(b) with eta_s(b) = sum_r
//! Lambda_{s,r} b Lambda_{s,r}. Diagonal symbols come from a
//! [`DiagonalProfile`] realized as step functions along the band.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

use crate::algebra::{
    cond_exp_entrywise, cond_exp_of_product, AlgElement, BlockDiagonal, BlockMatrix, CPMap,
};
use crate::cumulants::{
    boolean_limit_moment, semicircular_limit_moment, DiagonalProfile, MixedWord,
};
use crate::error::{Error, Result};
use crate::par;
use crate::partitions::{d_map, enumerate_class, has_property_p, PartitionClass, SetPartition};

/// Largest number of matrix letters the exact engine will expand.
pub const MAX_EXACT_DEGREE: usize = 8;

/// Scalar law of the independent matrix entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    /// Standard complex Gaussian off the diagonal, real standard Gaussian on
    /// the diagonal.
    GaussianHermitian,
    /// Uniform on the unit circle off the diagonal, symmetric signs on the
    /// diagonal. This is the default entry family.
    Circle,
}

/// Moment sequence of the centered scalar law used in the Boolean regime.
/// The first moment must vanish.
#[derive(Debug, Clone)]
pub struct BooleanMoments {
    moments: Vec<f64>,
}

impl BooleanMoments {
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::InvalidInput("need at least the first moment".into()));
        }
        if moments[0] != 0.0 {
            return Err(Error::InvalidInput("Boolean entries must be centered".into()));
        }
        Ok(BooleanMoments { moments })
    }

    /// Symmetric Bernoulli signs: even moments one, odd moments zero.
    pub fn bernoulli(max_len: usize) -> Self {
        let moments = (1..=max_len.max(2))
            .map(|l| if l % 2 == 0 { 1.0 } else { 0.0 })
            .collect();
        BooleanMoments { moments }
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    pub fn moment(&self, order: usize) -> Result<f64> {
        if order == 0 {
            return Ok(1.0);
        }
        self.moments
            .get(order - 1)
            .copied()
            .ok_or(Error::WordTooLong(order, self.moments.len()))
    }
}

/// Which joint law the scalar entries follow across distinct entries.
#[derive(Debug, Clone)]
pub enum MomentRegime {
    /// Independent entries with the per-model [`EntryKind`] law.
    Classical,
    /// Boolean-independent real symmetric entries with the given moment
    /// sequence. Exact evaluation only; there is nothing to sample.
    Boolean(BooleanMoments),
}

/// The data backing one matrix symbol.
#[derive(Debug, Clone)]
pub struct EntryModel {
    eta: CPMap,
    kind: EntryKind,
}

impl EntryModel {
    pub fn new(eta: CPMap, kind: EntryKind) -> Result<Self> {
        if !eta.selfadjoint_kraus() {
            return Err(Error::InvalidInput(
                "matrix entries require selfadjoint Kraus operators".into(),
            ));
        }
        Ok(EntryModel { eta, kind })
    }

    pub fn circle(eta: CPMap) -> Result<Self> {
        EntryModel::new(eta, EntryKind::Circle)
    }

    pub fn gaussian(eta: CPMap) -> Result<Self> {
        EntryModel::new(eta, EntryKind::GaussianHermitian)
    }

    pub fn dim(&self) -> usize {
        self.eta.dim()
    }

    pub fn kind(&self) -> EntryKind {
        self.kind
    }

    pub fn eta(&self) -> &CPMap {
        &self.eta
    }

    pub fn kraus(&self) -> &[AlgElement] {
        self.eta.kraus()
    }
}

/// Joint moment of the powers of one scalar entry: `same` uses of the entry
/// and `opposite` uses of its conjugate, or of the real diagonal variable
/// when `diagonal` is set. Centered laws make every single use vanish, and
/// one use of each orientation has moment one.
pub fn pure_entry_moment(kind: EntryKind, diagonal: bool, same: usize, opposite: usize) -> f64 {
    let total = same + opposite;
    if total == 0 {
        return 1.0;
    }
    if diagonal {
        if total % 2 == 1 {
            return 0.0;
        }
        match kind {
            EntryKind::GaussianHermitian => double_factorial(total - 1),
            EntryKind::Circle => 1.0,
        }
    } else {
        if same != opposite {
            return 0.0;
        }
        match kind {
            EntryKind::GaussianHermitian => factorial(same),
            EntryKind::Circle => 1.0,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn double_factorial(n: usize) -> f64 {
    let mut acc = 1.0;
    let mut i = n as i64;
    while i > 1 {
        acc *= i as f64;
        i -= 2;
    }
    acc
}

fn falling(n: usize, c: usize) -> u128 {
    if c > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..c {
        acc *= (n - i) as u128;
    }
    acc
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for one (symbol, trial) sample: three splitmix64 rounds
/// chaining the base seed, the matrix symbol, and the trial index. Every
/// sample gets its own generator, so trials and symbols can be drawn in any
/// order without changing the realization.
pub fn derive_seed(base: u64, symbol: usize, trial: usize) -> u64 {
    let s = splitmix64(base);
    let s = splitmix64(s.wrapping_add(symbol as u64));
    splitmix64(s.wrapping_add(trial as u64))
}

/// Draws one realization of Y(s, n). Entries are generated in a fixed order
/// (row-major over i <= j, Kraus index ascending), the lower triangle is the
/// adjoint of the upper, and the n^(-1/2) normalization is included.
pub fn sample_matrix(model: &EntryModel, n: usize, seed: u64) -> Result<BlockMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("band count must be positive".into()));
    }
    let k = model.dim();
    let scale = 1.0 / (n as f64).sqrt();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut y = BlockMatrix::zeros(k, n);
    for i in 0..n {
        for j in i..n {
            let mut block: DMatrix<Complex64> = DMatrix::zeros(k, k);
            for lambda in model.kraus() {
                let g = draw_entry(model.kind(), i == j, &mut rng);
                block += lambda.matrix() * (g * scale);
            }
            let elt = AlgElement::from_matrix(block)?;
            if i == j {
                y.set_block(i, i, &elt);
            } else {
                y.set_block(j, i, &elt.adjoint());
                y.set_block(i, j, &elt);
            }
        }
    }
    Ok(y)
}

fn draw_entry(kind: EntryKind, diagonal: bool, rng: &mut ChaCha12Rng) -> Complex64 {
    match kind {
        EntryKind::GaussianHermitian => {
            if diagonal {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0)
            } else {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) / std::f64::consts::SQRT_2
            }
        }
        EntryKind::Circle => {
            if diagonal {
                if rng.gen_bool(0.5) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(-1.0, 0.0)
                }
            } else {
                let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                Complex64::new(theta.cos(), theta.sin())
            }
        }
    }
}

/// Realizes a diagonal symbol as a block-diagonal matrix: the first
/// realized-step-size indices carry the step-1 value and so on.
pub fn realize_diagonal(
    profile: &DiagonalProfile,
    symbol: usize,
    n: usize,
) -> Result<BlockDiagonal> {
    if n < profile.num_steps() {
        return Err(Error::InvalidInput(format!(
            "band count {} below the number of steps {}",
            n,
            profile.num_steps()
        )));
    }
    let sizes = profile.realized_step_sizes(n)?;
    let mut blocks = Vec::with_capacity(n);
    for (j, &size) in sizes.iter().enumerate() {
        let v = profile.value(symbol, j)?.clone();
        for _ in 0..size {
            blocks.push(v.clone());
        }
    }
    BlockDiagonal::from_blocks(blocks)
}

fn validate_word(
    profile: &DiagonalProfile,
    models: &[EntryModel],
    word: &MixedWord,
) -> Result<()> {
    let dim = word.dim();
    if profile.dim() != dim {
        return Err(Error::DimMismatch("profile dimension differs from word".into()));
    }
    for t in word.diag_symbols() {
        if *t >= profile.num_symbols() {
            return Err(Error::UnknownSymbol(*t));
        }
    }
    for s in word.matrix_symbols() {
        let model = models.get(*s).ok_or(Error::UnknownSymbol(*s))?;
        if model.dim() != dim {
            return Err(Error::DimMismatch("entry model dimension differs from word".into()));
        }
    }
    Ok(())
}

/// Value of diagonal segment j of the word on one profile step, constants
/// absorbed: b_j f_{t_{j+1}, step} for interior segments and
/// b_m f_{t_{m+1}, step} b_{m+1} for the trailing one.
fn group_values(profile: &DiagonalProfile, word: &MixedWord) -> Result<Vec<Vec<AlgElement>>> {
    let m = word.degree();
    let constants = word.constants();
    let diag = word.diag_symbols();
    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let mut per_step = Vec::with_capacity(profile.num_steps());
        for step in 0..profile.num_steps() {
            let f = profile.value(diag[j], step)?;
            let v = if j < m {
                &constants[j] * f
            } else {
                &(&constants[m] * f) * &constants[m + 1]
            };
            per_step.push(v);
        }
        out.push(per_step);
    }
    Ok(out)
}

/// The averaged mixed moment E_n[b_0 D Y b_1 D Y ... b_m D b_{m+1}] at band
/// count n, computed exactly by summing over the closed kernel partitions
/// with all adjacent-pair classes of size at least two, the step assignments
/// of their blocks, and the Kraus choices of the matrix letters. The scalar
/// factor of each term comes from the entry law of the regime; the operator
/// factor interleaves Kraus operators with the realized diagonal segments.
pub fn exact_moment(
    profile: &DiagonalProfile,
    models: &[EntryModel],
    regime: &MomentRegime,
    word: &MixedWord,
    n: usize,
) -> Result<AlgElement> {
    validate_word(profile, models, word)?;
    if n == 0 {
        return Err(Error::InvalidInput("band count must be positive".into()));
    }
    let m = word.degree();
    if m > MAX_EXACT_DEGREE {
        return Err(Error::WordTooLong(m, MAX_EXACT_DEGREE));
    }
    if let MomentRegime::Boolean(moments) = regime {
        if moments.len() < m {
            return Err(Error::InvalidInput(format!(
                "Boolean moment sequence of length {} cannot evaluate degree {}",
                moments.len(),
                m
            )));
        }
    }
    let sizes = profile.realized_step_sizes(n)?;
    let gv = group_values(profile, word)?;
    let dim = word.dim();

    if m == 0 {
        let mut acc = AlgElement::zeros(dim);
        for (j, &size) in sizes.iter().enumerate() {
            acc = &acc + &gv[0][j].scale(size as f64 / n as f64);
        }
        return Ok(acc);
    }

    let sigmas: Vec<SetPartition> = enumerate_class(m + 1, PartitionClass::Closed)?
        .into_iter()
        .filter(|sigma| matches!(has_property_p(sigma), Ok(true)))
        .collect();

    let terms = par::map_collect(&sigmas, |sigma| {
        sigma_contribution(sigma, word, models, regime, &sizes, &gv, dim)
    });
    let mut total = AlgElement::zeros(dim);
    for term in terms {
        total = &total + &term?;
    }
    let scale = 1.0 / (n as f64).sqrt().powi(m as i32 + 2);
    Ok(total.scale(scale))
}

fn sigma_contribution(
    sigma: &SetPartition,
    word: &MixedWord,
    models: &[EntryModel],
    regime: &MomentRegime,
    sizes: &[usize],
    gv: &[Vec<AlgElement>],
    dim: usize,
) -> Result<AlgElement> {
    let m = word.degree();
    let syms = word.matrix_symbols();
    let steps = sizes.len();

    // Positions p = 1..m use the entry (i_p, i_{p+1}); the quotient d(sigma)
    // groups positions touching the same unordered index pair.
    let d = d_map(sigma)?;
    let dblock: Vec<usize> = (1..=m).map(|p| d.block_index(p)).collect();
    let num_d = d.num_blocks();
    let mut rep = vec![usize::MAX; num_d];
    let mut diagonal = vec![false; num_d];
    for p in 1..=m {
        let b = dblock[p - 1];
        if rep[b] == usize::MAX {
            rep[b] = p;
            diagonal[b] = sigma.same_block(p, p + 1);
        }
    }
    let mut same_oriented = vec![true; m];
    for p in 1..=m {
        let b = dblock[p - 1];
        let p0 = rep[b];
        same_oriented[p - 1] = sigma.same_block(p0, p) && sigma.same_block(p0 + 1, p + 1);
    }

    // Kraus tuples with a nonzero scalar factor.
    let r_counts: Vec<usize> = syms.iter().map(|s| models[*s].kraus().len()).collect();
    let mut kraus_terms: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut rbar = vec![0usize; m];
    loop {
        let sf = match regime {
            MomentRegime::Classical => {
                classical_scalar_factor(&dblock, &diagonal, &same_oriented, syms, models, &rbar)
            }
            MomentRegime::Boolean(moments) => {
                boolean_scalar_factor(&dblock, syms, &rbar, moments)?
            }
        };
        if sf != 0.0 {
            kraus_terms.push((rbar.clone(), sf));
        }
        if !advance(&mut rbar, &r_counts) {
            break;
        }
    }
    if kraus_terms.is_empty() {
        return Ok(AlgElement::zeros(dim));
    }

    let block_of_point: Vec<usize> = (1..=m + 1).map(|pt| sigma.block_index(pt)).collect();
    let num_blocks = sigma.num_blocks();
    let step_counts = vec![steps; num_blocks];

    let mut acc = AlgElement::zeros(dim);
    let mut chi = vec![0usize; num_blocks];
    loop {
        let mut per_step = vec![0usize; steps];
        for &s in &chi {
            per_step[s] += 1;
        }
        let mut cnt: u128 = 1;
        for (j, &c) in per_step.iter().enumerate() {
            cnt *= falling(sizes[j], c);
            if cnt == 0 {
                break;
            }
        }
        if cnt > 0 {
            let cntf = cnt as f64;
            for (rbar, sf) in &kraus_terms {
                let mut prod = gv[0][chi[block_of_point[0]]].clone();
                for p in 1..=m {
                    let lambda = &models[syms[p - 1]].kraus()[rbar[p - 1]];
                    prod = &(&prod * lambda) * &gv[p][chi[block_of_point[p]]];
                }
                acc = &acc + &prod.scale(cntf * sf);
            }
        }
        if !advance(&mut chi, &step_counts) {
            break;
        }
    }
    Ok(acc)
}

/// Odometer increment over a mixed-radix index; false once it wraps to zero.
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

fn classical_scalar_factor(
    dblock: &[usize],
    diagonal: &[bool],
    same_oriented: &[bool],
    syms: &[usize],
    models: &[EntryModel],
    rbar: &[usize],
) -> f64 {
    let m = dblock.len();
    // Group uses by (index pair, symbol, Kraus index); independent scalar
    // variables factor across groups.
    let mut fams: Vec<((usize, usize, usize), (usize, usize))> = Vec::with_capacity(m);
    for p in 0..m {
        let key = (dblock[p], syms[p], rbar[p]);
        match fams.iter_mut().find(|(k, _)| *k == key) {
            Some((_, counts)) => {
                if same_oriented[p] {
                    counts.0 += 1;
                } else {
                    counts.1 += 1;
                }
            }
            None => {
                let counts = if same_oriented[p] { (1, 0) } else { (0, 1) };
                fams.push((key, counts));
            }
        }
    }
    let mut sf = 1.0;
    for ((db, s, _), (a, b)) in &fams {
        sf *= pure_entry_moment(models[*s].kind(), diagonal[*db], *a, *b);
        if sf == 0.0 {
            return 0.0;
        }
    }
    sf
}

fn boolean_scalar_factor(
    dblock: &[usize],
    syms: &[usize],
    rbar: &[usize],
    moments: &BooleanMoments,
) -> Result<f64> {
    let m = dblock.len();
    // Boolean independence factors the joint moment over maximal runs of
    // consecutive uses of the same variable; orientation plays no role for
    // real symmetric entries.
    let mut sf = 1.0;
    let mut run_start = 0usize;
    for p in 1..=m {
        let boundary = p == m
            || (dblock[p], syms[p], rbar[p]) != (dblock[run_start], syms[run_start], rbar[run_start]);
        if boundary {
            sf *= moments.moment(p - run_start)?;
            if sf == 0.0 {
                return Ok(0.0);
            }
            run_start = p;
        }
    }
    Ok(sf)
}

/// Monte Carlo estimate of an averaged mixed moment: entrywise mean over
/// trials together with the entrywise standard error of that mean.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub mean: AlgElement,
    pub stderr: DMatrix<f64>,
    pub trials: usize,
}

impl McEstimate {
    /// Operator-norm distance of the mean from a target value.
    pub fn deviation_norm(&self, target: &AlgElement) -> f64 {
        (&self.mean - target).op_norm()
    }

    /// Frobenius norm of the entrywise standard errors.
    pub fn stderr_norm(&self) -> f64 {
        self.stderr.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// True when every entry of the mean lies within `factor` standard
    /// errors of the target entry (plus a tiny absolute slack for entries
    /// with no sampling variance).
    pub fn within_entrywise_sigma(&self, target: &AlgElement, factor: f64) -> bool {
        let k = self.mean.dim();
        for u in 0..k {
            for v in 0..k {
                let diff = (self.mean.entry(u, v) - target.entry(u, v)).norm();
                if diff > factor * self.stderr[(u, v)] + 1e-12 {
                    return false;
                }
            }
        }
        true
    }
}

/// Block-diagonal realizations of the diagonal segments of a word, constants
/// absorbed as in [`group_values`].
fn group_diagonals(
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
    let gv = group_values(profile, word)?;
    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let blocks: Vec<AlgElement> = (0..n).map(|i| gv[j][step_of[i]].clone()).collect();
        out.push(BlockDiagonal::from_blocks(blocks)?);
    }
    Ok(out)
}

fn trial_value(
    word: &MixedWord,
    groups: &[BlockDiagonal],
    samples: &[(usize, BlockMatrix)],
) -> Result<AlgElement> {
    let m = word.degree();
    if m == 0 {
        return Ok(groups[0].cond_exp());
    }
    let y = |s: usize| &samples.iter().find(|(sym, _)| *sym == s).expect("sampled symbol").1;
    let fs: Vec<BlockMatrix> = word
        .matrix_symbols()
        .iter()
        .enumerate()
        .map(|(p, s)| groups[p].mul_dense(y(*s)))
        .collect::<Result<_>>()?;
    if m == 1 {
        return Ok(groups[1].mul_dense_right(&fs[0])?.cond_exp());
    }
    let last = groups[m].mul_dense_right(&fs[m - 1])?;
    let mut chain = fs[0].clone();
    for f in &fs[1..m - 1] {
        chain = chain.mul(f)?;
    }
    cond_exp_of_product(&chain, &last)
}

/// Estimates E_n[word] by averaging over seeded trials. Each (symbol, trial)
/// pair draws its own matrix through [`derive_seed`], so the estimate is
/// reproducible bit for bit from the base seed.
pub fn empirical_mixed_moment(
    profile: &DiagonalProfile,
    models: &[EntryModel],
    word: &MixedWord,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    validate_word(profile, models, word)?;
    if trials < 2 {
        return Err(Error::InvalidInput("need at least two trials".into()));
    }
    if n < profile.num_steps() {
        return Err(Error::InvalidInput(format!(
            "band count {} below the number of steps {}",
            n,
            profile.num_steps()
        )));
    }
    let groups = group_diagonals(profile, word, n)?;
    let mut symbols: Vec<usize> = word.matrix_symbols().to_vec();
    symbols.sort_unstable();
    symbols.dedup();

    let per_trial = par::map_indices(trials, |t| -> Result<DMatrix<Complex64>> {
        let samples: Vec<(usize, BlockMatrix)> = symbols
            .iter()
            .map(|&s| Ok((s, sample_matrix(&models[s], n, derive_seed(seed, s, t))?)))
            .collect::<Result<_>>()?;
        Ok(trial_value(word, &groups, &samples)?.into_matrix())
    });

    let k = word.dim();
    let mut values = Vec::with_capacity(trials);
    for v in per_trial {
        values.push(v?);
    }
    let mut mean: DMatrix<Complex64> = DMatrix::zeros(k, k);
    for v in &values {
        mean += v;
    }
    mean /= Complex64::new(trials as f64, 0.0);
    let mut var: DMatrix<f64> = DMatrix::zeros(k, k);
    for v in &values {
        for u in 0..k {
            for w in 0..k {
                var[(u, w)] += (v[(u, w)] - mean[(u, w)]).norm_sqr();
            }
        }
    }
    let denom = (trials * (trials - 1)) as f64;
    let stderr = var.map(|s| (s / denom).sqrt());
    Ok(McEstimate { mean: AlgElement::from_matrix(mean)?, stderr, trials })
}

/// Which engines a convergence sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Exact,
    Mc,
    Both,
}

/// One measurement of a convergence sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub word_id: String,
    pub n: usize,
    pub mode: &'static str,
    pub deviation_norm: f64,
    pub stderr_norm: f64,
    pub wall_ms: f64,
}

/// Runs the exact and/or Monte Carlo engines over a list of words and band
/// counts and reports operator-norm deviations from the limit evaluator.
/// The Boolean regime has no sampling path, so it only accepts exact mode.
pub fn convergence_sweep(
    profile: &DiagonalProfile,
    models: &[EntryModel],
    regime: &MomentRegime,
    words: &[(String, MixedWord)],
    band_counts: &[usize],
    mode: SweepMode,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let run_exact = matches!(mode, SweepMode::Exact | SweepMode::Both);
    let run_mc = matches!(mode, SweepMode::Mc | SweepMode::Both);
    if run_mc && matches!(regime, MomentRegime::Boolean(_)) {
        return Err(Error::InvalidInput(
            "the Boolean regime is exact-only; there is no entry law to sample".into(),
        ));
    }
    let etas: Vec<CPMap> = models.iter().map(|mdl| mdl.eta().clone()).collect();
    let mut rows = Vec::new();
    for (word_id, word) in words {
        let limit = match regime {
            MomentRegime::Classical => semicircular_limit_moment(profile, &etas, word)?,
            MomentRegime::Boolean(_) => boolean_limit_moment(profile, &etas, word)?,
        };
        for &n in band_counts {
            if run_exact {
                let start = Instant::now();
                let value = exact_moment(profile, models, regime, word, n)?;
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                rows.push(SweepRow {
                    word_id: word_id.clone(),
                    n,
                    mode: "exact",
                    deviation_norm: (&value - &limit).op_norm(),
                    stderr_norm: 0.0,
                    wall_ms,
                });
            }
            if run_mc {
                let start = Instant::now();
                let est = empirical_mixed_moment(profile, models, word, n, trials, seed)?;
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                rows.push(SweepRow {
                    word_id: word_id.clone(),
                    n,
                    mode: "mc",
                    deviation_norm: est.deviation_norm(&limit),
                    stderr_norm: est.stderr_norm(),
                    wall_ms,
                });
            }
        }
    }
    Ok(rows)
}

/// Checks the decay of exact-mode deviations across doubled band counts:
/// whenever a word's deviation at n exceeds the noise floor 1e-12, the
/// deviation at 2n must be at most `factor` times it.
pub fn decay_ratios_ok(rows: &[SweepRow], factor: f64) -> bool {
    for row in rows {
        if row.mode != "exact" {
            continue;
        }
        if row.deviation_norm <= 1e-12 {
            continue;
        }
        if let Some(next) = rows.iter().find(|r| {
            r.mode == "exact" && r.word_id == row.word_id && r.n == 2 * row.n
        }) {
            if next.deviation_norm > factor * row.deviation_norm {
                return false;
            }
        }
    }
    true
}

/// E[a(x, y) c a(z, w)] for entries of Y(s, n_total): nonzero only when the
/// second entry is the conjugate transpose partner of the first (which for
/// x = y means the same diagonal entry), giving eta(c)/n_total. Same-entry
/// products without conjugation vanish for both complex entry families, and
/// distinct entries are independent and centered.
fn entry_second_moment(
    model: &EntryModel,
    n_total: usize,
    x: usize,
    y: usize,
    z: usize,
    w: usize,
    c: &AlgElement,
) -> Result<AlgElement> {
    if z == y && w == x {
        Ok(model.eta().apply(c)?.scale(1.0 / n_total as f64))
    } else {
        Ok(AlgElement::zeros(model.dim()))
    }
}

/// Verifies the compression identity of the extended model: for the grid
/// blocks A(i, j) of Y(s, outer*N) regrouped over B (x) M_N, the entrywise
/// expectation of A(i, j) b A(j, i) equals
/// delta_{uv} eta_s(sum_p b_pp) / (outer*N) on the N x N grid. Returns the
/// assembled second-moment side, the closed-form side, and their
/// operator-norm distance.
pub fn verify_matrix_cpm(
    model: &EntryModel,
    b: &BlockMatrix,
    outer: usize,
    i: usize,
    j: usize,
) -> Result<(BlockMatrix, BlockMatrix, f64)> {
    let k = model.dim();
    if b.dim() != k {
        return Err(Error::DimMismatch("argument must live over the model algebra".into()));
    }
    let n_inner = b.size();
    if outer == 0 || i >= outer || j >= outer {
        return Err(Error::InvalidInput("grid position out of range".into()));
    }
    let n_total = outer * n_inner;

    let computed = cond_exp_entrywise(k, n_inner, |u, v| {
        let mut acc = AlgElement::zeros(k);
        for p in 0..n_inner {
            for q in 0..n_inner {
                let term = entry_second_moment(
                    model,
                    n_total,
                    u + i * n_inner,
                    p + j * n_inner,
                    q + j * n_inner,
                    v + i * n_inner,
                    &b.block(p, q),
                )?;
                acc = &acc + &term;
            }
        }
        Ok(acc)
    })?;

    let mut trace_b = AlgElement::zeros(k);
    for p in 0..n_inner {
        trace_b = &trace_b + &b.block(p, p);
    }
    let expected_block = model.eta().apply(&trace_b)?.scale(1.0 / n_total as f64);
    let expected = BlockMatrix::embed_scalar(&expected_block, n_inner);

    let diff = AlgElement::from_matrix(computed.flat() - expected.flat())?;
    Ok((computed, expected, diff.op_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulants::JointDistribution;

    fn scalar_model(kind: EntryKind) -> EntryModel {
        EntryModel::new(CPMap::identity(1), kind).unwrap()
    }

    fn two_kraus_model(seed: u64, kind: EntryKind) -> EntryModel {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let eta = CPMap::new(vec![
            AlgElement::random_selfadjoint(2, &mut rng),
            AlgElement::random_selfadjoint(2, &mut rng),
        ])
        .unwrap();
        EntryModel::new(eta, kind).unwrap()
    }

    #[test]
    fn entry_moment_invariants() {
        for kind in [EntryKind::GaussianHermitian, EntryKind::Circle] {
            for diagonal in [false, true] {
                assert_eq!(pure_entry_moment(kind, diagonal, 1, 0), 0.0);
                assert_eq!(pure_entry_moment(kind, diagonal, 0, 1), 0.0);
                assert_eq!(pure_entry_moment(kind, diagonal, 1, 1), 1.0);
            }
            assert_eq!(pure_entry_moment(kind, false, 2, 1), 0.0);
        }
        assert_eq!(pure_entry_moment(EntryKind::GaussianHermitian, false, 2, 2), 2.0);
        assert_eq!(pure_entry_moment(EntryKind::Circle, false, 2, 2), 1.0);
        assert_eq!(pure_entry_moment(EntryKind::GaussianHermitian, true, 3, 1), 3.0);
        assert_eq!(pure_entry_moment(EntryKind::Circle, true, 2, 2), 1.0);
        assert_eq!(pure_entry_moment(EntryKind::Circle, true, 2, 1), 0.0);
    }

    #[test]
    fn sampled_matrices_are_selfadjoint_and_reproducible() {
        for kind in [EntryKind::GaussianHermitian, EntryKind::Circle] {
            let model = two_kraus_model(3, kind);
            let y1 = sample_matrix(&model, 7, 99).unwrap();
            let y2 = sample_matrix(&model, 7, 99).unwrap();
            assert_eq!(y1.flat(), y2.flat());
            assert!(y1.is_selfadjoint(1e-12));
            let other = sample_matrix(&model, 7, 100).unwrap();
            assert!((y1.flat() - other.flat()).norm() > 1e-6);
        }
    }

    #[test]
    fn seed_derivation_separates_symbols_and_trials() {
        let a = derive_seed(1, 0, 0);
        let b = derive_seed(1, 0, 1);
        let c = derive_seed(1, 1, 0);
        let d = derive_seed(2, 0, 0);
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, derive_seed(1, 0, 0));
    }

    #[test]
    fn second_moment_is_one_at_every_band_count() {
        for kind in [EntryKind::GaussianHermitian, EntryKind::Circle] {
            let model = scalar_model(kind);
            let profile = DiagonalProfile::trivial(1, 1);
            let word = MixedWord::plain(vec![0, 0, 0], vec![0, 0], 1).unwrap();
            for n in 1..=6 {
                let v = exact_moment(&profile, &[model.clone()], &MomentRegime::Classical, &word, n)
                    .unwrap();
                assert!((v.as_scalar().unwrap().re - 1.0).abs() < 1e-14, "n = {}", n);
            }
        }
    }

    #[test]
    fn odd_degree_moments_vanish_exactly() {
        let model = scalar_model(EntryKind::Circle);
        let profile = DiagonalProfile::trivial(1, 1);
        for m in [1usize, 3, 5] {
            let word = MixedWord::plain(vec![0; m + 1], vec![0; m], 1).unwrap();
            let v = exact_moment(&profile, &[model.clone()], &MomentRegime::Classical, &word, 5)
                .unwrap();
            assert_eq!(v.op_norm(), 0.0, "degree {}", m);
        }
    }

    #[test]
    fn degree_cap_is_enforced() {
        let model = scalar_model(EntryKind::Circle);
        let profile = DiagonalProfile::trivial(1, 1);
        let word = MixedWord::plain(vec![0; 10], vec![0; 9], 1).unwrap();
        assert!(matches!(
            exact_moment(&profile, &[model], &MomentRegime::Classical, &word, 4),
            Err(Error::WordTooLong(9, MAX_EXACT_DEGREE))
        ));
    }

    #[test]
    fn boolean_square_is_one_and_needs_long_enough_moments() {
        let model = scalar_model(EntryKind::Circle);
        let profile = DiagonalProfile::trivial(1, 1);
        let word = MixedWord::plain(vec![0, 0, 0], vec![0, 0], 1).unwrap();
        let regime = MomentRegime::Boolean(BooleanMoments::bernoulli(2));
        for n in 1..=5 {
            let v = exact_moment(&profile, &[model.clone()], &regime, &word, n).unwrap();
            assert!((v.as_scalar().unwrap().re - 1.0).abs() < 1e-14);
        }
        let long = MixedWord::plain(vec![0; 5], vec![0; 4], 1).unwrap();
        assert!(exact_moment(&profile, &[model], &regime, &long, 4).is_err());
    }

    #[test]
    fn boolean_moments_must_be_centered() {
        assert!(BooleanMoments::new(vec![0.5, 1.0]).is_err());
        assert!(BooleanMoments::new(vec![]).is_err());
        let b = BooleanMoments::bernoulli(4);
        assert_eq!(b.moment(2).unwrap(), 1.0);
        assert_eq!(b.moment(3).unwrap(), 0.0);
        assert_eq!(b.moment(0).unwrap(), 1.0);
    }

    #[test]
    fn realized_diagonal_lays_out_steps_in_order() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let v0 = AlgElement::random_selfadjoint(2, &mut rng);
        let v1 = AlgElement::random_selfadjoint(2, &mut rng);
        let profile =
            DiagonalProfile::new(vec![0.5, 0.5], vec![vec![v0.clone(), v1.clone()]]).unwrap();
        let d = realize_diagonal(&profile, 0, 6).unwrap();
        assert_eq!(d.size(), 6);
        for i in 0..3 {
            assert_eq!(d.block(i), &v0);
            assert_eq!(d.block(i + 3), &v1);
        }
        assert!(realize_diagonal(&profile, 0, 1).is_err());
    }

    #[test]
    fn exact_engine_approaches_the_limit_geometrically() {
        let model = two_kraus_model(11, EntryKind::GaussianHermitian);
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let values = vec![vec![
            AlgElement::random_selfadjoint(2, &mut rng),
            AlgElement::random_selfadjoint(2, &mut rng),
        ]];
        let profile = DiagonalProfile::new(vec![0.5, 0.5], values).unwrap();
        let word = MixedWord::plain(vec![0; 5], vec![0; 4], 2).unwrap();
        let rows = convergence_sweep(
            &profile,
            &[model],
            &MomentRegime::Classical,
            &[("w".into(), word)],
            &[8, 16, 32],
            SweepMode::Exact,
            0,
            0,
        )
        .unwrap();
        assert!(rows[0].deviation_norm > 1e-9, "deviation should be visible at n = 8");
        assert!(decay_ratios_ok(&rows, 0.75));
    }

    #[test]
    fn monte_carlo_agrees_with_exact_within_error_bars() {
        let model = two_kraus_model(21, EntryKind::Circle);
        let profile = DiagonalProfile::trivial(2, 1);
        let word = MixedWord::plain(vec![0, 0, 0], vec![0, 0], 2).unwrap();
        let exact =
            exact_moment(&profile, &[model.clone()], &MomentRegime::Classical, &word, 40).unwrap();
        let est = empirical_mixed_moment(&profile, &[model], &word, 40, 400, 7).unwrap();
        assert!(est.within_entrywise_sigma(&exact, 4.0));
        assert!(est.stderr_norm() > 0.0);
    }

    #[test]
    fn monte_carlo_is_bit_reproducible() {
        let model = two_kraus_model(31, EntryKind::GaussianHermitian);
        let profile = DiagonalProfile::trivial(2, 1);
        let word = MixedWord::plain(vec![0, 0], vec![0], 2).unwrap();
        let a = empirical_mixed_moment(&profile, &[model.clone()], &word, 12, 50, 3).unwrap();
        let b = empirical_mixed_moment(&profile, &[model], &word, 12, 50, 3).unwrap();
        assert_eq!(a.mean.matrix(), b.mean.matrix());
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn boolean_regime_has_no_sampling_path() {
        let model = scalar_model(EntryKind::Circle);
        let profile = DiagonalProfile::trivial(1, 1);
        let word = MixedWord::plain(vec![0, 0, 0], vec![0, 0], 1).unwrap();
        let err = convergence_sweep(
            &profile,
            &[model],
            &MomentRegime::Boolean(BooleanMoments::bernoulli(2)),
            &[("w".into(), word)],
            &[4],
            SweepMode::Both,
            10,
            0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn compression_identity_holds_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for kind in [EntryKind::GaussianHermitian, EntryKind::Circle] {
            let model = two_kraus_model(18, kind);
            let b = BlockMatrix::from_flat(
                2,
                2,
                DMatrix::from_fn(4, 4, |_, _| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }),
            )
            .unwrap();
            for (i, j) in [(0, 1), (0, 0), (1, 0)] {
                let (_, _, dev) = verify_matrix_cpm(&model, &b, 2, i, j).unwrap();
                assert!(dev < 1e-12, "kind {:?} grid ({}, {})", kind, i, j);
            }
        }
    }

    #[test]
    fn mixed_word_limit_reference_values() {
        let profile = DiagonalProfile::trivial(1, 1);
        let etas = vec![CPMap::identity(1)];
        let word = MixedWord::plain(vec![0, 0, 0], vec![0, 0], 1).unwrap();
        let v = semicircular_limit_moment(&profile, &etas, &word).unwrap();
        assert!((v.as_scalar().unwrap().re - 1.0).abs() < 1e-15);
        let model = scalar_model(EntryKind::Circle);
        let exact = exact_moment(&profile, &[model], &MomentRegime::Classical, &word, 16).unwrap();
        assert!((exact.as_scalar().unwrap().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decay_check_flags_stalled_deviation() {
        let mk = |id: &str, n: usize, dev: f64| SweepRow {
            word_id: id.into(),
            n,
            mode: "exact",
            deviation_norm: dev,
            stderr_norm: 0.0,
            wall_ms: 0.0,
        };
        let good = vec![mk("a", 8, 1e-2), mk("a", 16, 4e-3), mk("a", 32, 2e-3)];
        assert!(decay_ratios_ok(&good, 0.75));
        let bad = vec![mk("a", 8, 1e-2), mk("a", 16, 9e-3)];
        assert!(!decay_ratios_ok(&bad, 0.75));
        let below_floor = vec![mk("a", 8, 1e-14), mk("a", 16, 1e-13)];
        assert!(decay_ratios_ok(&below_floor, 0.75));
    }

    #[test]
    fn empty_word_reduces_to_profile_average() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let v0 = AlgElement::random_selfadjoint(2, &mut rng);
        let v1 = AlgElement::random_selfadjoint(2, &mut rng);
        let profile =
            DiagonalProfile::new(vec![0.25, 0.75], vec![vec![v0.clone(), v1.clone()]]).unwrap();
        let word = MixedWord::plain(vec![0], vec![], 2).unwrap();
        let model = two_kraus_model(24, EntryKind::Circle);
        let got =
            exact_moment(&profile, &[model], &MomentRegime::Classical, &word, 8).unwrap();
        let expect = &v0.scale(2.0 / 8.0) + &v1.scale(6.0 / 8.0);
        assert!((&got - &expect).op_norm() < 1e-14);
        let limit = profile.expect(&crate::cumulants::BWord::plain(vec![0], 2)).unwrap();
        let diff = (&got - &limit).op_norm();
        assert!(diff < 1e-14, "dyadic weights realize exactly at n = 8");
    }
}
