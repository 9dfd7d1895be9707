//! Mixed moments and cumulants over the base algebra: words with operator
//! coefficients, moment functions indexed by noncrossing partitions, free and
//! Boolean cumulants, closed-form evaluators for the limiting semicircular
//! and Bernoulli families, and a freeness test built on vanishing of mixed
//! cumulants.

use rand::Rng;

use crate::algebra::{AlgElement, CPMap};
use crate::error::{Error, Result};
use crate::partitions::{
    catalan, enumerate_class, kernel, kreweras, KrewerasVariant, PartitionClass, SetPartition,
    ENUMERATION_CAP,
};

/// A word with operator coefficients: c_0 x_{l_1} c_1 x_{l_2} ... x_{l_n} c_n.
/// Letters are abstract variable indices; what they mean is up to the
/// distribution evaluating the word.
#[derive(Debug, Clone)]
pub struct BWord {
    coeffs: Vec<AlgElement>,
    letters: Vec<usize>,
}

impl BWord {
    pub fn new(coeffs: Vec<AlgElement>, letters: Vec<usize>) -> Result<Self> {
        if coeffs.len() != letters.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} letters need {} coefficients, got {}",
                letters.len(),
                letters.len() + 1,
                coeffs.len()
            )));
        }
        let dim = coeffs[0].dim();
        if coeffs.iter().any(|c| c.dim() != dim) {
            return Err(Error::DimMismatch("coefficients of mixed dimension".into()));
        }
        Ok(BWord { coeffs, letters })
    }

    /// All coefficients equal to the identity.
    pub fn plain(letters: Vec<usize>, dim: usize) -> Self {
        let coeffs = vec![AlgElement::identity(dim); letters.len() + 1];
        BWord { coeffs, letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn coeffs(&self) -> &[AlgElement] {
        &self.coeffs
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }
}

/// A B-valued joint distribution of a family of variables: evaluates the
/// conditional expectation of coefficient words. Implementations must return
/// `coeffs[0]` on a word with no letters.
pub trait JointDistribution {
    fn dim(&self) -> usize;
    fn expect(&self, word: &BWord) -> Result<AlgElement>;
}

/// Evaluates a partitioned multilinear function by repeatedly collapsing an
/// innermost interval block: the block value, computed by `block_fn` on the
/// sub-word made of the block's letters with leading coefficient 1 and the
/// coefficients trailing each letter, is absorbed into the coefficient
/// preceding the block. Requires a noncrossing partition so an interval block
/// always exists.
pub fn collapse_word<F>(word: &BWord, pi: &SetPartition, block_fn: &mut F) -> Result<AlgElement>
where
    F: FnMut(&BWord) -> Result<AlgElement>,
{
    let n = word.len();
    if pi.ground_size() != n {
        return Err(Error::GroundMismatch(pi.ground_size(), n));
    }
    if n == 0 {
        return Ok(word.coeffs[0].clone());
    }
    if !pi.is_noncrossing() {
        return Err(Error::CrossingNotAllowed);
    }

    let mut positions: Vec<usize> = (1..=n).collect();
    let mut letters = word.letters.clone();
    let mut coeffs = word.coeffs.clone();
    let mut remaining: Vec<Vec<usize>> = pi.blocks().to_vec();

    while !letters.is_empty() {
        let found = remaining.iter().enumerate().find_map(|(bi, block)| {
            let mut idxs = Vec::with_capacity(block.len());
            for p in block {
                idxs.push(positions.binary_search(p).ok()?);
            }
            if idxs.windows(2).all(|w| w[1] == w[0] + 1) {
                Some((bi, idxs[0], idxs.len()))
            } else {
                None
            }
        });
        let (bi, start, len) = found.ok_or_else(|| Error::InvalidPartition(
            "no interval block left to collapse".into(),
        ))?;

        let mut sub_coeffs = Vec::with_capacity(len + 1);
        sub_coeffs.push(AlgElement::identity(word.dim()));
        sub_coeffs.extend(coeffs[start + 1..start + 1 + len].iter().cloned());
        let sub = BWord { coeffs: sub_coeffs, letters: letters[start..start + len].to_vec() };

        let value = block_fn(&sub)?;
        coeffs[start] = &coeffs[start] * &value;

        letters.drain(start..start + len);
        positions.drain(start..start + len);
        coeffs.drain(start + 1..start + 1 + len);
        remaining.remove(bi);
    }
    Ok(coeffs.remove(0))
}

/// The partitioned moment function E^(pi): nested conditional expectations
/// along the blocks of a noncrossing partition.
pub fn moment_pi<D: JointDistribution + ?Sized>(
    dist: &D,
    word: &BWord,
    pi: &SetPartition,
) -> Result<AlgElement> {
    collapse_word(word, pi, &mut |sub| dist.expect(sub))
}

/// Moebius function of the interval [pi, 1] in the noncrossing lattice:
/// the product over Kreweras complement blocks W of (-1)^(|W|-1) C_(|W|-1).
fn moebius_to_top(pi: &SetPartition) -> Result<f64> {
    let complement = kreweras(pi, KrewerasVariant::K)?;
    let mut mu = 1.0;
    for block in complement.blocks() {
        let s = block.len() - 1;
        let c = catalan(s) as f64;
        mu *= if s % 2 == 1 { -c } else { c };
    }
    Ok(mu)
}

/// The free cumulant of the full word: the Moebius inversion
/// sum over pi in NC(n) of mu(pi, 1) E^(pi).
pub fn free_cumulant<D: JointDistribution + ?Sized>(dist: &D, word: &BWord) -> Result<AlgElement> {
    let n = word.len();
    if n == 0 {
        return Ok(word.coeffs[0].clone());
    }
    if n > ENUMERATION_CAP {
        return Err(Error::WordTooLong(n, ENUMERATION_CAP));
    }
    let mut total = AlgElement::zeros(word.dim());
    for pi in enumerate_class(n, PartitionClass::Noncrossing)? {
        let mu = moebius_to_top(&pi)?;
        let term = moment_pi(dist, word, &pi)?;
        total = &total + &term.scale(mu);
    }
    Ok(total)
}

/// The partitioned free cumulant kappa^(pi): the collapse of the word along
/// pi with the full free cumulant as block function.
pub fn free_cumulant_pi<D: JointDistribution + ?Sized>(
    dist: &D,
    word: &BWord,
    pi: &SetPartition,
) -> Result<AlgElement> {
    collapse_word(word, pi, &mut |sub| free_cumulant(dist, sub))
}

/// The Boolean cumulant of the full word:
/// sum over pi in IN(n) of (-1)^(|pi|-1) E^(pi).
pub fn boolean_cumulant<D: JointDistribution + ?Sized>(
    dist: &D,
    word: &BWord,
) -> Result<AlgElement> {
    let n = word.len();
    if n == 0 {
        return Ok(word.coeffs[0].clone());
    }
    if n > ENUMERATION_CAP {
        return Err(Error::WordTooLong(n, ENUMERATION_CAP));
    }
    let mut total = AlgElement::zeros(word.dim());
    for pi in enumerate_class(n, PartitionClass::Interval)? {
        let sign = if (pi.num_blocks() - 1) % 2 == 1 { -1.0 } else { 1.0 };
        let term = moment_pi(dist, word, &pi)?;
        total = &total + &term.scale(sign);
    }
    Ok(total)
}

/// The partitioned Boolean cumulant b^(pi) for an interval partition pi.
pub fn boolean_cumulant_pi<D: JointDistribution + ?Sized>(
    dist: &D,
    word: &BWord,
    pi: &SetPartition,
) -> Result<AlgElement> {
    if !pi.is_interval() {
        return Err(Error::InvalidPartition(format!(
            "Boolean cumulants are indexed by interval partitions, got {}",
            pi
        )));
    }
    collapse_word(word, pi, &mut |sub| boolean_cumulant(dist, sub))
}

/// Reassembles the moment from partitioned free cumulants:
/// sum over pi in NC(n) of kappa^(pi). Equals the plain expectation.
pub fn moment_from_free_cumulants<D: JointDistribution + ?Sized>(
    dist: &D,
    word: &BWord,
) -> Result<AlgElement> {
    let n = word.len();
    if n == 0 {
        return Ok(word.coeffs[0].clone());
    }
    if n > ENUMERATION_CAP {
        return Err(Error::WordTooLong(n, ENUMERATION_CAP));
    }
    let mut total = AlgElement::zeros(word.dim());
    for pi in enumerate_class(n, PartitionClass::Noncrossing)? {
        total = &total + &free_cumulant_pi(dist, word, &pi)?;
    }
    Ok(total)
}

/// Reassembles the moment from partitioned Boolean cumulants:
/// sum over pi in IN(n) of b^(pi). Equals the plain expectation.
pub fn moment_from_boolean_cumulants<D: JointDistribution + ?Sized>(
    dist: &D,
    word: &BWord,
) -> Result<AlgElement> {
    let n = word.len();
    if n == 0 {
        return Ok(word.coeffs[0].clone());
    }
    if n > ENUMERATION_CAP {
        return Err(Error::WordTooLong(n, ENUMERATION_CAP));
    }
    let mut total = AlgElement::zeros(word.dim());
    for pi in enumerate_class(n, PartitionClass::Interval)? {
        total = &total + &boolean_cumulant_pi(dist, word, &pi)?;
    }
    Ok(total)
}

/// Piecewise-constant diagonal profiles: diagonal symbol t takes the constant
/// value values[t][j] on step j, and step j carries weight weights[j] of the
/// band indices. Weights are positive and sum to one; values are selfadjoint.
#[derive(Debug, Clone)]
pub struct DiagonalProfile {
    weights: Vec<f64>,
    values: Vec<Vec<AlgElement>>,
}

impl DiagonalProfile {
    pub fn new(weights: Vec<f64>, values: Vec<Vec<AlgElement>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("a profile needs at least one step".into()));
        }
        if weights.iter().any(|w| *w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidInput("step weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("step weights sum to {}, not 1", total)));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput("a profile needs at least one diagonal symbol".into()));
        }
        let dim = values[0]
            .first()
            .ok_or_else(|| Error::InvalidInput("empty value row".into()))?
            .dim();
        for row in &values {
            if row.len() != weights.len() {
                return Err(Error::InvalidInput(format!(
                    "symbol has {} step values, profile has {} steps",
                    row.len(),
                    weights.len()
                )));
            }
            for v in row {
                if v.dim() != dim {
                    return Err(Error::DimMismatch("profile values of mixed dimension".into()));
                }
                if !v.is_selfadjoint(1e-12) {
                    return Err(Error::InvalidInput("profile values must be selfadjoint".into()));
                }
            }
        }
        Ok(DiagonalProfile { weights, values })
    }

    /// One step of weight one; every symbol is the identity.
    pub fn trivial(dim: usize, num_symbols: usize) -> Self {
        DiagonalProfile {
            weights: vec![1.0],
            values: vec![vec![AlgElement::identity(dim)]; num_symbols.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.values[0][0].dim()
    }

    pub fn num_steps(&self) -> usize {
        self.weights.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.values.len()
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value(&self, symbol: usize, step: usize) -> Result<&AlgElement> {
        self.values
            .get(symbol)
            .ok_or(Error::UnknownSymbol(symbol))?
            .get(step)
            .ok_or_else(|| Error::InvalidInput(format!("step {} out of range", step)))
    }

    /// Splits n band indices into steps: floor(w_j n) each, the remainder
    /// going to the last step.
    pub fn realized_step_sizes(&self, n: usize) -> Result<Vec<usize>> {
        if n == 0 {
            return Err(Error::InvalidInput("band count must be positive".into()));
        }
        let mut sizes: Vec<usize> =
            self.weights.iter().map(|w| (w * n as f64).floor() as usize).collect();
        let assigned: usize = sizes.iter().sum();
        *sizes.last_mut().expect("at least one step") += n - assigned;
        Ok(sizes)
    }
}

impl JointDistribution for DiagonalProfile {
    fn dim(&self) -> usize {
        self.dim()
    }

    /// The profile functional: E[c_0 D_{t_1} c_1 ... D_{t_l} c_l] =
    /// sum_j w_j c_0 f_{t_1,j} c_1 ... f_{t_l,j} c_l.
    fn expect(&self, word: &BWord) -> Result<AlgElement> {
        if word.is_empty() {
            return Ok(word.coeffs[0].clone());
        }
        let mut total = AlgElement::zeros(self.dim());
        for j in 0..self.num_steps() {
            let mut prod = word.coeffs[0].clone();
            for (pos, t) in word.letters.iter().enumerate() {
                prod = &(&prod * self.value(*t, j)?) * &word.coeffs[pos + 1];
            }
            total = &total + &prod.scale(self.weights[j]);
        }
        Ok(total)
    }
}

/// One factor of a diagonal word: a fixed element of B or a diagonal symbol.
#[derive(Debug, Clone)]
pub enum DiagAtom {
    Const(AlgElement),
    Symbol(usize),
}

/// A word alternating diagonal and matrix letters with operator constants:
/// b_0 D_{t_1} Y_{s_1} b_1 D_{t_2} Y_{s_2} b_2 ... Y_{s_m} b_m D_{t_{m+1}} b_{m+1}.
/// There is one more diagonal symbol than matrix symbols and m + 2 constants.
#[derive(Debug, Clone)]
pub struct MixedWord {
    diag_symbols: Vec<usize>,
    matrix_symbols: Vec<usize>,
    constants: Vec<AlgElement>,
}

impl MixedWord {
    pub fn new(
        diag_symbols: Vec<usize>,
        matrix_symbols: Vec<usize>,
        constants: Vec<AlgElement>,
    ) -> Result<Self> {
        if diag_symbols.len() != matrix_symbols.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} matrix letters need {} diagonal letters, got {}",
                matrix_symbols.len(),
                matrix_symbols.len() + 1,
                diag_symbols.len()
            )));
        }
        if constants.len() != matrix_symbols.len() + 2 {
            return Err(Error::InvalidInput(format!(
                "{} matrix letters need {} constants, got {}",
                matrix_symbols.len(),
                matrix_symbols.len() + 2,
                constants.len()
            )));
        }
        let dim = constants[0].dim();
        if constants.iter().any(|b| b.dim() != dim) {
            return Err(Error::DimMismatch("constants of mixed dimension".into()));
        }
        Ok(MixedWord { diag_symbols, matrix_symbols, constants })
    }

    /// All constants equal to the identity.
    pub fn plain(diag_symbols: Vec<usize>, matrix_symbols: Vec<usize>, dim: usize) -> Result<Self> {
        let constants = vec![AlgElement::identity(dim); matrix_symbols.len() + 2];
        MixedWord::new(diag_symbols, matrix_symbols, constants)
    }

    /// Number of matrix letters.
    pub fn degree(&self) -> usize {
        self.matrix_symbols.len()
    }

    pub fn dim(&self) -> usize {
        self.constants[0].dim()
    }

    pub fn diag_symbols(&self) -> &[usize] {
        &self.diag_symbols
    }

    pub fn matrix_symbols(&self) -> &[usize] {
        &self.matrix_symbols
    }

    pub fn constants(&self) -> &[AlgElement] {
        &self.constants
    }

    /// The diagonal segments between consecutive matrix letters. Group 0 is
    /// everything before Y_{s_1}, group j sits between Y_{s_j} and
    /// Y_{s_{j+1}}, and group m trails the last matrix letter.
    pub fn groups(&self) -> Vec<Vec<DiagAtom>> {
        let m = self.degree();
        if m == 0 {
            return vec![vec![
                DiagAtom::Const(self.constants[0].clone()),
                DiagAtom::Symbol(self.diag_symbols[0]),
                DiagAtom::Const(self.constants[1].clone()),
            ]];
        }
        let mut groups = Vec::with_capacity(m + 1);
        groups.push(vec![
            DiagAtom::Const(self.constants[0].clone()),
            DiagAtom::Symbol(self.diag_symbols[0]),
        ]);
        for j in 1..m {
            groups.push(vec![
                DiagAtom::Const(self.constants[j].clone()),
                DiagAtom::Symbol(self.diag_symbols[j]),
            ]);
        }
        groups.push(vec![
            DiagAtom::Const(self.constants[m].clone()),
            DiagAtom::Symbol(self.diag_symbols[m]),
            DiagAtom::Const(self.constants[m + 1].clone()),
        ]);
        groups
    }
}

/// The profile functional on a sequence of atoms.
fn profile_eval(profile: &DiagonalProfile, atoms: &[DiagAtom]) -> Result<AlgElement> {
    let mut total = AlgElement::zeros(profile.dim());
    for j in 0..profile.num_steps() {
        let mut prod = AlgElement::identity(profile.dim());
        for atom in atoms {
            prod = match atom {
                DiagAtom::Const(b) => &prod * b,
                DiagAtom::Symbol(t) => &prod * profile.value(*t, j)?,
            };
        }
        total = &total + &prod.scale(profile.weight(j));
    }
    Ok(total)
}

fn check_symbols(profile: &DiagonalProfile, etas: &[CPMap], word: &MixedWord) -> Result<()> {
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
        let eta = etas.get(*s).ok_or(Error::UnknownSymbol(*s))?;
        if eta.dim() != dim {
            return Err(Error::DimMismatch("covariance map dimension differs from word".into()));
        }
    }
    Ok(())
}

fn semicircular_eval(
    profile: &DiagonalProfile,
    etas: &[CPMap],
    groups: &[Vec<DiagAtom>],
    ys: &[usize],
) -> Result<AlgElement> {
    if ys.is_empty() {
        let atoms: Vec<DiagAtom> = groups.iter().flatten().cloned().collect();
        return profile_eval(profile, &atoms);
    }
    if ys.len() % 2 == 1 {
        return Ok(AlgElement::zeros(profile.dim()));
    }
    let s1 = ys[0];
    let mut total = AlgElement::zeros(profile.dim());
    for q in (2..=ys.len()).step_by(2) {
        if ys[q - 1] != s1 {
            continue;
        }
        let inner = semicircular_eval(profile, etas, &groups[1..q], &ys[1..q - 1])?;
        let c = etas[s1].apply(&inner)?;
        let mut merged = groups[0].clone();
        merged.push(DiagAtom::Const(c));
        merged.extend(groups[q].iter().cloned());
        let mut rest = Vec::with_capacity(groups.len() - q);
        rest.push(merged);
        rest.extend(groups[q + 1..].iter().cloned());
        total = &total + &semicircular_eval(profile, etas, &rest, &ys[q..])?;
    }
    Ok(total)
}

/// The limiting mixed moment of a semicircular family with covariance maps
/// eta_s over the diagonal profile: the sum over noncrossing pairings of the
/// matrix letters compatible with the symbol pattern, each contributing the
/// nested integral obtained by collapsing innermost pairs through eta.
pub fn semicircular_limit_moment(
    profile: &DiagonalProfile,
    etas: &[CPMap],
    word: &MixedWord,
) -> Result<AlgElement> {
    check_symbols(profile, etas, word)?;
    semicircular_eval(profile, etas, &word.groups(), word.matrix_symbols())
}

/// The limiting mixed moment of the Boolean counterpart: nonzero only when
/// adjacent matrix letters pair up with equal symbols, in which case each
/// interior diagonal segment is integrated on its own, passed through eta,
/// and the outer word is integrated once.
pub fn boolean_limit_moment(
    profile: &DiagonalProfile,
    etas: &[CPMap],
    word: &MixedWord,
) -> Result<AlgElement> {
    check_symbols(profile, etas, word)?;
    let m = word.degree();
    let groups = word.groups();
    if m == 0 {
        return profile_eval(profile, &groups[0]);
    }
    if m % 2 == 1 {
        return Ok(AlgElement::zeros(profile.dim()));
    }
    let ys = word.matrix_symbols();
    for r in 0..m / 2 {
        if ys[2 * r] != ys[2 * r + 1] {
            return Ok(AlgElement::zeros(profile.dim()));
        }
    }
    let mut atoms: Vec<DiagAtom> = groups[0].clone();
    for r in 0..m / 2 {
        let inner = profile_eval(profile, &groups[2 * r + 1])?;
        let c = etas[ys[2 * r]].apply(&inner)?;
        atoms.push(DiagAtom::Const(c));
        atoms.extend(groups[2 * r + 2].iter().cloned());
    }
    profile_eval(profile, &atoms)
}

fn check_letters(etas: &[CPMap], word: &BWord) -> Result<()> {
    for s in &word.letters {
        let eta = etas.get(*s).ok_or(Error::UnknownSymbol(*s))?;
        if eta.dim() != word.dim() {
            return Err(Error::DimMismatch("covariance map dimension differs from word".into()));
        }
    }
    Ok(())
}

/// Mixed moment of a semicircular family with covariance maps `etas`:
/// the sum over noncrossing pairings of the letters that respect the symbol
/// pattern, innermost pairs collapsed through their covariance map. The slice
/// `coeffs` holds one more entry than `ys`.
fn semicircular_family_moment(
    etas: &[CPMap],
    coeffs: &[AlgElement],
    ys: &[usize],
) -> Result<AlgElement> {
    if ys.is_empty() {
        return Ok(coeffs[0].clone());
    }
    if ys.len() % 2 == 1 {
        return Ok(AlgElement::zeros(coeffs[0].dim()));
    }
    let s1 = ys[0];
    let mut total = AlgElement::zeros(coeffs[0].dim());
    for q in (2..=ys.len()).step_by(2) {
        if ys[q - 1] != s1 {
            continue;
        }
        let inner = semicircular_family_moment(etas, &coeffs[1..q], &ys[1..q - 1])?;
        let merged = &(&coeffs[0] * &etas[s1].apply(&inner)?) * &coeffs[q];
        let mut rest = Vec::with_capacity(coeffs.len() - q);
        rest.push(merged);
        rest.extend_from_slice(&coeffs[q + 1..]);
        total = &total + &semicircular_family_moment(etas, &rest, &ys[q..])?;
    }
    Ok(total)
}

/// Mixed moment of a Boolean family with covariance maps `etas`: nonzero only
/// when adjacent letters pair up with equal symbols, in which case the result
/// is the alternating product of coefficients and covariance values.
fn boolean_family_moment(
    etas: &[CPMap],
    coeffs: &[AlgElement],
    ys: &[usize],
) -> Result<AlgElement> {
    let m = ys.len();
    if m == 0 {
        return Ok(coeffs[0].clone());
    }
    if m % 2 == 1 {
        return Ok(AlgElement::zeros(coeffs[0].dim()));
    }
    for r in 0..m / 2 {
        if ys[2 * r] != ys[2 * r + 1] {
            return Ok(AlgElement::zeros(coeffs[0].dim()));
        }
    }
    let mut acc = coeffs[0].clone();
    for r in 0..m / 2 {
        acc = &(&acc * &etas[ys[2 * r]].apply(&coeffs[2 * r + 1])?) * &coeffs[2 * r + 2];
    }
    Ok(acc)
}

/// The joint distribution of an operator-valued semicircular family, one
/// selfadjoint variable per covariance map. Mixed free cumulants across
/// symbols vanish, so distinct symbols form a free family.
#[derive(Debug, Clone)]
pub struct SemicircularOracle {
    etas: Vec<CPMap>,
}

impl SemicircularOracle {
    pub fn new(etas: Vec<CPMap>) -> Result<Self> {
        let dim = etas
            .first()
            .ok_or_else(|| Error::InvalidInput("need at least one covariance map".into()))?
            .dim();
        if etas.iter().any(|e| e.dim() != dim) {
            return Err(Error::DimMismatch("covariance maps of mixed dimension".into()));
        }
        Ok(SemicircularOracle { etas })
    }
}

impl JointDistribution for SemicircularOracle {
    fn dim(&self) -> usize {
        self.etas[0].dim()
    }

    fn expect(&self, word: &BWord) -> Result<AlgElement> {
        if word.is_empty() {
            return Ok(word.coeffs[0].clone());
        }
        check_letters(&self.etas, word)?;
        semicircular_family_moment(&self.etas, &word.coeffs, &word.letters)
    }
}

/// The joint distribution of an operator-valued Boolean family, one centered
/// Bernoulli-type variable per covariance map.
#[derive(Debug, Clone)]
pub struct BooleanOracle {
    etas: Vec<CPMap>,
}

impl BooleanOracle {
    pub fn new(etas: Vec<CPMap>) -> Result<Self> {
        let dim = etas
            .first()
            .ok_or_else(|| Error::InvalidInput("need at least one covariance map".into()))?
            .dim();
        if etas.iter().any(|e| e.dim() != dim) {
            return Err(Error::DimMismatch("covariance maps of mixed dimension".into()));
        }
        Ok(BooleanOracle { etas })
    }
}

impl JointDistribution for BooleanOracle {
    fn dim(&self) -> usize {
        self.etas[0].dim()
    }

    fn expect(&self, word: &BWord) -> Result<AlgElement> {
        if word.is_empty() {
            return Ok(word.coeffs[0].clone());
        }
        check_letters(&self.etas, word)?;
        boolean_family_moment(&self.etas, &word.coeffs, &word.letters)
    }
}

/// A violation found by [`freeness_check`]: the letter tuple, the partition
/// whose cumulant failed to vanish, and the norm of the offending cumulant.
#[derive(Debug, Clone)]
pub struct FreenessWitness {
    pub letters: Vec<usize>,
    pub partition: String,
    pub violation: f64,
}

/// Outcome of [`freeness_check`].
#[derive(Debug, Clone)]
pub struct FreenessOutcome {
    pub is_free: bool,
    pub max_violation: f64,
    pub cumulants_checked: usize,
    pub witness: Option<FreenessWitness>,
}

/// Tests whether two families of variables are free with amalgamation: for
/// every word of length up to max_len mixing the families, and every
/// noncrossing partition not dominated by the kernel of the family pattern,
/// the partitioned free cumulant must vanish. Coefficients are drawn at
/// random from the seed. Scanning stops at the first violation above tol.
pub fn freeness_check<D: JointDistribution + ?Sized>(
    dist: &D,
    family1: &[usize],
    family2: &[usize],
    max_len: usize,
    tol: f64,
    seed: u64,
) -> Result<FreenessOutcome> {
    if max_len == 0 || max_len > 6 {
        return Err(Error::InvalidInput(format!(
            "word length {} out of range 1..=6",
            max_len
        )));
    }
    if family1.is_empty() || family2.is_empty() {
        return Err(Error::InvalidInput("both families must be nonempty".into()));
    }
    if family1.iter().any(|s| family2.contains(s)) {
        return Err(Error::InvalidInput("families must be disjoint".into()));
    }
    let mut symbols: Vec<usize> = family1.iter().chain(family2.iter()).copied().collect();
    symbols.sort_unstable();

    let family_of = |s: usize| -> usize {
        if family1.contains(&s) { 0 } else { 1 }
    };

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let dim = dist.dim();

    let mut max_violation: f64 = 0.0;
    let mut checked = 0usize;

    for n in 2..=max_len {
        let partitions = enumerate_class(n, PartitionClass::Noncrossing)?;
        let mut tuple = vec![0usize; n];
        loop {
            let letters: Vec<usize> = tuple.iter().map(|&i| symbols[i]).collect();
            let fams: Vec<usize> = letters.iter().map(|&s| family_of(s)).collect();
            let mixed = fams.iter().any(|&f| f == 0) && fams.iter().any(|&f| f == 1);
            if mixed {
                let ker = kernel(&fams)?;
                let coeffs: Vec<AlgElement> =
                    (0..=n).map(|_| AlgElement::random(dim, &mut rng)).collect();
                let word = BWord::new(coeffs, letters.clone())?;
                for pi in &partitions {
                    if pi.leq(&ker)? {
                        continue;
                    }
                    let value = free_cumulant_pi(dist, &word, pi)?;
                    let violation = value.op_norm();
                    checked += 1;
                    if violation > max_violation {
                        max_violation = violation;
                    }
                    if violation > tol {
                        return Ok(FreenessOutcome {
                            is_free: false,
                            max_violation,
                            cumulants_checked: checked,
                            witness: Some(FreenessWitness {
                                letters,
                                partition: pi.to_string(),
                                violation,
                            }),
                        });
                    }
                }
            }
            let mut pos = n;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < symbols.len() {
                    break;
                }
                tuple[pos] = 0;
            }
            if tuple.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(FreenessOutcome { is_free: true, max_violation, cumulants_checked: checked, witness: None })
}

/// Random coefficient words for round-trip tests.
pub fn random_bword<R: Rng + ?Sized>(
    letters: Vec<usize>,
    dim: usize,
    rng: &mut R,
) -> BWord {
    let coeffs = (0..=letters.len()).map(|_| AlgElement::random(dim, rng)).collect();
    BWord { coeffs, letters }
}
