//! Set partitions of `{1, .., m}` and the combinatorics behind the moment
//! expansion of operator-valued band matrices.
//!
//! Partitions are kept in canonical form (blocks sorted by least element,
//! elements ascending inside a block), which makes structural equality and
//! hashing meaningful. Elements are 1-based everywhere.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Hard cap for exhaustive enumeration (Bell(12) is about 4.2 million).
pub const ENUMERATION_CAP: usize = 12;

/// A set partition of `{1, .., ground}` in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    ground: usize,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

/// Named enumeration classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionClass {
    /// No block quadruple a < b < c < d with a,c and b,d separated.
    Noncrossing,
    /// Every block is a set of consecutive integers.
    Interval,
    /// Every block has exactly two elements.
    Pair,
    /// Noncrossing pair partitions.
    NcPair,
    /// Interval pair partitions; `{{1,2},{3,4},..}` or empty for odd ground.
    IntervalPair,
    /// 1 and the last element share a block.
    Closed,
    /// Closed and noncrossing.
    ClosedNc,
}

/// Which complement [`kreweras`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrewerasVariant {
    /// Largest sigma with `interleave(pi, sigma)` noncrossing; same ground.
    K,
    /// Largest sigma with `insert(pi, sigma)` noncrossing; ground grows by 1.
    Ok,
    /// Largest pi with `insert(pi, sigma)` noncrossing; ground shrinks by 1.
    Ik,
}

impl SetPartition {
    /// Builds a partition from its blocks, validating that they cover
    /// `{1..=ground}` exactly once, and canonicalizes.
    pub fn new(ground: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if ground == 0 {
            return Err(Error::GroundSize(0, ENUMERATION_CAP));
        }
        let mut seen = vec![false; ground];
        let mut canon: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            let mut b = block;
            b.sort_unstable();
            for &p in &b {
                if p == 0 || p > ground {
                    return Err(Error::InvalidPartition(format!(
                        "element {p} outside 1..={ground}"
                    )));
                }
                if seen[p - 1] {
                    return Err(Error::InvalidPartition(format!("element {p} repeated")));
                }
                seen[p - 1] = true;
            }
            canon.push(b);
        }
        if let Some(p) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!("element {} missing", p + 1)));
        }
        canon.sort_unstable_by_key(|b| b[0]);
        Ok(Self::from_canonical(ground, canon))
    }

    fn from_canonical(ground: usize, blocks: Vec<Vec<usize>>) -> Self {
        let mut block_of = vec![0usize; ground];
        for (idx, block) in blocks.iter().enumerate() {
            for &p in block {
                block_of[p - 1] = idx;
            }
        }
        SetPartition { ground, blocks, block_of }
    }

    /// Builds from a block assignment vector (`assign[p-1]` = arbitrary block
    /// label of element p).
    pub fn from_assignment(assign: &[usize]) -> Result<Self> {
        if assign.is_empty() {
            return Err(Error::GroundSize(0, ENUMERATION_CAP));
        }
        let mut labels: Vec<usize> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (pos, &label) in assign.iter().enumerate() {
            match labels.iter().position(|&l| l == label) {
                Some(idx) => blocks[idx].push(pos + 1),
                None => {
                    labels.push(label);
                    blocks.push(vec![pos + 1]);
                }
            }
        }
        SetPartition::new(assign.len(), blocks)
    }

    pub fn ground_size(&self) -> usize {
        self.ground
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Index of the block containing element `p` (canonical order).
    pub fn block_index(&self, p: usize) -> usize {
        self.block_of[p - 1]
    }

    /// O(1) membership test.
    pub fn same_block(&self, s: usize, t: usize) -> bool {
        self.block_of[s - 1] == self.block_of[t - 1]
    }

    /// True when no two blocks cross. Linear-time bracket check: a block may
    /// continue only while it is the innermost open one.
    pub fn is_noncrossing(&self) -> bool {
        let mut stack: Vec<usize> = Vec::new();
        for p in 1..=self.ground {
            let b = self.block_of[p - 1];
            let block = &self.blocks[b];
            if p == block[0] {
                stack.push(b);
            } else if stack.last() != Some(&b) {
                return false;
            }
            if p == *block.last().unwrap() {
                stack.pop();
            }
        }
        true
    }

    /// True when every block is an interval of consecutive integers.
    pub fn is_interval(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.last().unwrap() - b[0] + 1 == b.len())
    }

    /// True when every block has exactly two elements.
    pub fn is_pair(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 2)
    }

    /// True when 1 and the last element share a block.
    pub fn is_closed(&self) -> bool {
        self.ground >= 2 && self.same_block(1, self.ground)
    }

    /// Refinement order: true when every block of `self` is contained in a
    /// block of `coarser`.
    pub fn leq(&self, coarser: &SetPartition) -> Result<bool> {
        if self.ground != coarser.ground {
            return Err(Error::GroundMismatch(self.ground, coarser.ground));
        }
        Ok(self.blocks.iter().all(|block| {
            let target = coarser.block_of[block[0] - 1];
            block.iter().all(|&p| coarser.block_of[p - 1] == target)
        }))
    }

    /// Whether the partition belongs to the given class.
    pub fn matches_class(&self, class: PartitionClass) -> bool {
        match class {
            PartitionClass::Noncrossing => self.is_noncrossing(),
            PartitionClass::Interval => self.is_interval(),
            PartitionClass::Pair => self.is_pair(),
            PartitionClass::NcPair => self.is_pair() && self.is_noncrossing(),
            PartitionClass::IntervalPair => self.is_pair() && self.is_interval(),
            PartitionClass::Closed => self.is_closed(),
            PartitionClass::ClosedNc => self.is_closed() && self.is_noncrossing(),
        }
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in &self.blocks {
            write!(f, "{{")?;
            for (i, p) in block.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

impl FromStr for SetPartition {
    type Err = Error;

    /// Parses the `{1,4}{2,3}` form produced by `Display`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty partition string".into()));
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut max = 0usize;
        let mut rest = s;
        while !rest.is_empty() {
            let Some(stripped) = rest.strip_prefix('{') else {
                return Err(Error::Parse(format!("expected '{{' at '{rest}'")));
            };
            let Some(end) = stripped.find('}') else {
                return Err(Error::Parse("unterminated block".into()));
            };
            let body = &stripped[..end];
            let mut block = Vec::new();
            for piece in body.split(',') {
                let p: usize = piece
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad element '{piece}'")))?;
                max = max.max(p);
                block.push(p);
            }
            blocks.push(block);
            rest = &stripped[end + 1..];
        }
        SetPartition::new(max, blocks)
    }
}

fn cap_check(m: usize) -> Result<()> {
    if m == 0 || m > ENUMERATION_CAP {
        return Err(Error::GroundSize(m, ENUMERATION_CAP));
    }
    Ok(())
}

/// All partitions of `{1..m}` via restricted growth strings. `Bell(m)` many.
pub fn enumerate_all(m: usize) -> Result<Vec<SetPartition>> {
    cap_check(m)?;
    let mut out = Vec::new();
    let mut rgs = vec![0usize; m];
    loop {
        out.push(SetPartition::from_assignment(&rgs).expect("rgs is a valid assignment"));
        // advance to the next restricted growth string
        let mut i = m;
        loop {
            if i == 1 {
                return Ok(out);
            }
            i -= 1;
            let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for v in rgs.iter_mut().skip(i + 1) {
                    *v = 0;
                }
                break;
            }
        }
    }
}

fn nc_partitions(points: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if points.is_empty() {
        return vec![Vec::new()];
    }
    let first = points[0];
    let rest = &points[1..];
    let mut out = Vec::new();
    for mask in 0..(1u32 << rest.len()) {
        let mut block = vec![first];
        let mut gaps: Vec<Vec<usize>> = Vec::new();
        let mut gap: Vec<usize> = Vec::new();
        for (i, &p) in rest.iter().enumerate() {
            if mask & (1 << i) != 0 {
                block.push(p);
                gaps.push(std::mem::take(&mut gap));
            } else {
                gap.push(p);
            }
        }
        gaps.push(gap);
        // cartesian product of independent gap partitions
        let mut partials: Vec<Vec<Vec<usize>>> = vec![vec![block]];
        for g in &gaps {
            let sub = nc_partitions(g);
            let mut next = Vec::with_capacity(partials.len() * sub.len());
            for p in &partials {
                for s in &sub {
                    let mut combined = p.clone();
                    combined.extend(s.iter().cloned());
                    next.push(combined);
                }
            }
            partials = next;
        }
        out.extend(partials);
    }
    out
}

fn pairings(points: &[usize], noncrossing_only: bool) -> Vec<Vec<Vec<usize>>> {
    if points.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let first = points[0];
    for j in 1..points.len() {
        if noncrossing_only && (j - 1) % 2 != 0 {
            continue;
        }
        let partner = points[j];
        if noncrossing_only {
            let inside = &points[1..j];
            let outside = &points[j + 1..];
            for inner in pairings(inside, true) {
                for outer in pairings(outside, true) {
                    let mut combined = vec![vec![first, partner]];
                    combined.extend(inner.iter().cloned());
                    combined.extend(outer.iter().cloned());
                    out.push(combined);
                }
            }
        } else {
            let mut rest: Vec<usize> = points[1..].to_vec();
            rest.remove(j - 1);
            for sub in pairings(&rest, false) {
                let mut combined = vec![vec![first, partner]];
                combined.extend(sub.iter().cloned());
                out.push(combined);
            }
        }
    }
    out
}

fn interval_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    // compositions of m, each part one consecutive block
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<Vec<usize>>)> = vec![(0, Vec::new())];
    while let Some((start, acc)) = stack.pop() {
        if start == m {
            out.push(acc);
            continue;
        }
        for end in (start + 1)..=m {
            let mut next = acc.clone();
            next.push((start + 1..=end).collect());
            stack.push((end, next));
        }
    }
    out
}

/// Enumerates a named class of partitions of `{1..m}`. Classes built from
/// pairs or intervals are generated directly; the closed classes go through
/// the bijection with partitions of `{1..m-1}` (adjoin m to the block of 1).
pub fn enumerate_class(m: usize, class: PartitionClass) -> Result<Vec<SetPartition>> {
    cap_check(m)?;
    let from_blocks = |raw: Vec<Vec<Vec<usize>>>| -> Vec<SetPartition> {
        raw.into_iter()
            .map(|blocks| SetPartition::new(m, blocks).expect("generator produced valid blocks"))
            .collect()
    };
    match class {
        PartitionClass::Noncrossing => {
            let points: Vec<usize> = (1..=m).collect();
            Ok(from_blocks(nc_partitions(&points)))
        }
        PartitionClass::Pair | PartitionClass::NcPair => {
            if m % 2 != 0 {
                return Ok(Vec::new());
            }
            let points: Vec<usize> = (1..=m).collect();
            Ok(from_blocks(pairings(&points, class == PartitionClass::NcPair)))
        }
        PartitionClass::Interval => Ok(from_blocks(interval_partitions(m))),
        PartitionClass::IntervalPair => {
            if m % 2 != 0 {
                return Ok(Vec::new());
            }
            let blocks: Vec<Vec<usize>> = (0..m / 2).map(|i| vec![2 * i + 1, 2 * i + 2]).collect();
            Ok(vec![SetPartition::new(m, blocks)?])
        }
        PartitionClass::Closed | PartitionClass::ClosedNc => {
            if m < 2 {
                return Err(Error::InvalidInput(
                    "closed classes need ground size >= 2".into(),
                ));
            }
            let base = if class == PartitionClass::Closed {
                enumerate_all(m - 1)?
            } else {
                enumerate_class(m - 1, PartitionClass::Noncrossing)?
            };
            Ok(base
                .into_iter()
                .map(|p| {
                    let mut blocks = p.blocks.clone();
                    blocks[p.block_index(1)].push(m);
                    SetPartition::new(m, blocks).expect("adjoining the last point stays valid")
                })
                .collect())
        }
    }
}

/// Kernel of an index tuple: positions grouped by equal values.
pub fn kernel(values: &[usize]) -> Result<SetPartition> {
    if values.is_empty() {
        return Err(Error::InvalidInput("kernel of an empty tuple".into()));
    }
    SetPartition::from_assignment(values)
}

/// `insert(pi, sigma)`: interlaces sigma on odd positions 1,3,..,2m+1 and pi
/// on even positions 2,4,..,2m. Requires `sigma.ground == pi.ground + 1`.
pub fn insert(pi: &SetPartition, sigma: &SetPartition) -> Result<SetPartition> {
    if sigma.ground != pi.ground + 1 {
        return Err(Error::GroundMismatch(sigma.ground, pi.ground + 1));
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for block in sigma.blocks() {
        blocks.push(block.iter().map(|&j| 2 * j - 1).collect());
    }
    for block in pi.blocks() {
        blocks.push(block.iter().map(|&j| 2 * j).collect());
    }
    SetPartition::new(2 * pi.ground + 1, blocks)
}

/// `interleave(pi1, pi2)`: pi1 on odd positions, pi2 on even positions of
/// `{1..2m}`. Both arguments share the same ground size.
pub fn interleave(pi1: &SetPartition, pi2: &SetPartition) -> Result<SetPartition> {
    if pi1.ground != pi2.ground {
        return Err(Error::GroundMismatch(pi1.ground, pi2.ground));
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for block in pi1.blocks() {
        blocks.push(block.iter().map(|&j| 2 * j - 1).collect());
    }
    for block in pi2.blocks() {
        blocks.push(block.iter().map(|&j| 2 * j).collect());
    }
    SetPartition::new(2 * pi1.ground, blocks)
}

/// Restriction to a subset of the ground set, relabeled order-preservingly
/// to `{1..|members|}`. `members` must be strictly increasing, nonempty and
/// contained in the ground set.
pub fn restrict(pi: &SetPartition, members: &[usize]) -> Result<SetPartition> {
    if members.is_empty() {
        return Err(Error::InvalidSubset("empty subset".into()));
    }
    if !members.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidSubset("members must be strictly increasing".into()));
    }
    if *members.last().unwrap() > pi.ground {
        return Err(Error::InvalidSubset(format!(
            "member {} outside ground 1..={}",
            members.last().unwrap(),
            pi.ground
        )));
    }
    let assign: Vec<usize> = members.iter().map(|&p| pi.block_index(p)).collect();
    SetPartition::from_assignment(&assign)
}

/// Shared engine for the three complements: joins output points s < t
/// whenever no block of `pi` is split by the enclosed interval of pi-points.
fn separation_complement<F>(pi: &SetPartition, out_size: usize, enclosed: F) -> SetPartition
where
    F: Fn(usize, usize) -> (usize, usize),
{
    let mut dsu = Dsu::new(out_size);
    for s in 1..=out_size {
        for t in (s + 1)..=out_size {
            let (lo, hi) = enclosed(s, t);
            let separated = pi.blocks().iter().any(|block| {
                let inside = block.iter().filter(|&&p| p >= lo && p <= hi).count();
                inside != 0 && inside != block.len()
            });
            if !separated {
                dsu.union(s - 1, t - 1);
            }
        }
    }
    dsu.to_partition()
}

/// Kreweras-type complements of a noncrossing partition.
///
/// * `K`: the largest sigma on the same ground with `interleave(pi, sigma)`
///   noncrossing.
/// * `Ok`: the largest sigma on ground m+1 with `insert(pi, sigma)`
///   noncrossing (bijection onto closed noncrossing partitions).
/// * `Ik`: the largest pi on ground m-1 with `insert(pi, self)` noncrossing;
///   inverse of `Ok`.
pub fn kreweras(pi: &SetPartition, variant: KrewerasVariant) -> Result<SetPartition> {
    if !pi.is_noncrossing() {
        return Err(Error::CrossingNotAllowed);
    }
    let m = pi.ground;
    match variant {
        KrewerasVariant::K => Ok(separation_complement(pi, m, |s, t| (s + 1, t))),
        KrewerasVariant::Ok => Ok(separation_complement(pi, m + 1, |s, t| (s, t - 1))),
        KrewerasVariant::Ik => {
            if m < 2 {
                return Err(Error::GroundSize(m, ENUMERATION_CAP));
            }
            Ok(separation_complement(pi, m - 1, |s, t| (s + 1, t)))
        }
    }
}

/// The adjacent-pair quotient: for sigma on `{1..m+1}` produces d(sigma) on
/// `{1..m}` by joining s ~ t when (s ~ t and s+1 ~ t+1) or (s ~ t+1 and
/// s+1 ~ t) in sigma, closed transitively.
pub fn d_map(sigma: &SetPartition) -> Result<SetPartition> {
    if sigma.ground < 2 {
        return Err(Error::GroundSize(sigma.ground, ENUMERATION_CAP));
    }
    let m = sigma.ground - 1;
    let mut dsu = Dsu::new(m);
    for s in 1..=m {
        for t in (s + 1)..=m {
            if d_related(sigma, s, t) {
                dsu.union(s - 1, t - 1);
            }
        }
    }
    Ok(dsu.to_partition())
}

fn d_related(sigma: &SetPartition, s: usize, t: usize) -> bool {
    (sigma.same_block(s, t) && sigma.same_block(s + 1, t + 1))
        || (sigma.same_block(s, t + 1) && sigma.same_block(s + 1, t))
}

/// True when the generating relation of [`d_map`] is already transitive on
/// its own, i.e. the union-find closure adds no pairs. Holds for every
/// partition (the relation is set-equality of adjacent index pairs of any
/// kernel realization); exercised exhaustively by the verify suite.
pub fn d_relation_already_transitive(sigma: &SetPartition) -> Result<bool> {
    let d = d_map(sigma)?;
    let m = sigma.ground - 1;
    for s in 1..=m {
        for t in (s + 1)..=m {
            if d.same_block(s, t) && !d_related(sigma, s, t) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Property P: sigma is closed and every block of d(sigma) has at least two
/// elements. Requires ground size >= 2.
pub fn has_property_p(sigma: &SetPartition) -> Result<bool> {
    if sigma.ground < 2 {
        return Err(Error::GroundSize(sigma.ground, ENUMERATION_CAP));
    }
    if !sigma.is_closed() {
        return Ok(false);
    }
    let d = d_map(sigma)?;
    Ok(d.blocks().iter().all(|b| b.len() >= 2))
}

/// Outer blocks of a noncrossing pair partition: pairs not nested inside any
/// other pair.
pub fn outer_blocks(pi: &SetPartition) -> Result<Vec<(usize, usize)>> {
    if !pi.is_pair() || !pi.is_noncrossing() {
        return Err(Error::InvalidInput(
            "outer blocks need a noncrossing pair partition".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = pi.blocks().iter().map(|b| (b[0], b[1])).collect();
    Ok(pairs
        .iter()
        .copied()
        .filter(|&(p, q)| !pairs.iter().any(|&(a, b)| a < p && q < b))
        .collect())
}

/// True when two noncrossing pair partitions have the same set of outer
/// blocks.
pub fn out_equivalent(pi1: &SetPartition, pi2: &SetPartition) -> Result<bool> {
    if pi1.ground != pi2.ground {
        return Err(Error::GroundMismatch(pi1.ground, pi2.ground));
    }
    let a: HashSet<(usize, usize)> = outer_blocks(pi1)?.into_iter().collect();
    let b: HashSet<(usize, usize)> = outer_blocks(pi2)?.into_iter().collect();
    Ok(a == b)
}

/// Number of index tuples in `[n]^ground` whose kernel is exactly `sigma`:
/// the falling factorial n (n-1) .. (n-|sigma|+1).
pub fn kernel_class_count(sigma: &SetPartition, n: usize) -> u128 {
    let mut count: u128 = 1;
    for j in 0..sigma.num_blocks() {
        if j >= n {
            return 0;
        }
        count *= (n - j) as u128;
    }
    count
}

/// Catalan number C_n.
pub fn catalan(n: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..n {
        c = c * 2 * (2 * i as u128 + 1) / (i as u128 + 2);
    }
    c
}

/// Bell number B_n via the Bell triangle.
pub fn bell(n: usize) -> u128 {
    let mut row: Vec<u128> = vec![1];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            next.push(next.last().unwrap() + v);
        }
        row = next;
    }
    row[0]
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
        }
    }

    fn to_partition(&mut self) -> SetPartition {
        let n = self.parent.len();
        let assign: Vec<usize> = (0..n).map(|i| self.find(i)).collect();
        SetPartition::from_assignment(&assign).expect("union-find yields a valid assignment")
    }
}

pub mod verify {
    //! Exhaustive checks of the structural lemmas used by the band matrix
    //! moment expansion. Each suite returns the first failure it finds.

    use super::*;

    /// Names accepted by [`run_suite`].
    pub const SUITES: &[&str] = &[
        "counts",
        "ok-bijection",
        "remove-one",
        "restriction-p",
        "odd-length",
        "even-length",
        "single-block",
        "inside-ok",
        "anti-oriented",
        "d-closure",
    ];

    fn fail(lemma: &str, detail: String) -> Error {
        Error::Lemma { lemma: lemma.into(), detail }
    }

    /// Class cardinalities: Bell, Catalan, matchings, compositions.
    pub fn counts(max_m: usize) -> Result<()> {
        for m in 1..=max_m {
            if enumerate_all(m)?.len() as u128 != bell(m) {
                return Err(fail("counts", format!("Bell({m}) mismatch")));
            }
            if enumerate_class(m, PartitionClass::Noncrossing)?.len() as u128 != catalan(m) {
                return Err(fail("counts", format!("Catalan({m}) mismatch")));
            }
            let ncp = enumerate_class(m, PartitionClass::NcPair)?.len() as u128;
            let expect_ncp = if m % 2 == 0 { catalan(m / 2) } else { 0 };
            if ncp != expect_ncp {
                return Err(fail("counts", format!("NC2({m}) count {ncp} != {expect_ncp}")));
            }
            let pairs = enumerate_class(m, PartitionClass::Pair)?.len() as u128;
            let expect_pairs = if m % 2 == 0 {
                (1..=m as u128).step_by(2).product()
            } else {
                0
            };
            if pairs != expect_pairs {
                return Err(fail("counts", format!("matchings({m}) mismatch")));
            }
            if enumerate_class(m, PartitionClass::Interval)?.len() != 1 << (m - 1) {
                return Err(fail("counts", format!("compositions({m}) mismatch")));
            }
        }
        Ok(())
    }

    /// `Ok` is a bijection from NC(m) onto closed noncrossing partitions of
    /// m+1 points, inverted by `Ik`, and `insert(pi, Ok(pi))` is noncrossing.
    pub fn ok_bijection(max_m: usize) -> Result<()> {
        for m in 1..=max_m {
            let ncs = enumerate_class(m, PartitionClass::Noncrossing)?;
            let mut images = HashSet::new();
            for pi in &ncs {
                let ok = kreweras(pi, KrewerasVariant::Ok)?;
                if !ok.is_noncrossing() || !ok.is_closed() {
                    return Err(fail("ok-bijection", format!("Ok({pi}) = {ok} not closed NC")));
                }
                if !insert(pi, &ok)?.is_noncrossing() {
                    return Err(fail("ok-bijection", format!("insert({pi}, Ok) crosses")));
                }
                if kreweras(&ok, KrewerasVariant::Ik)? != *pi {
                    return Err(fail("ok-bijection", format!("Ik(Ok({pi})) != pi")));
                }
                images.insert(ok);
            }
            let closed_nc = enumerate_class(m + 1, PartitionClass::ClosedNc)?;
            if images.len() != ncs.len() || images.len() != closed_nc.len() {
                return Err(fail(
                    "ok-bijection",
                    format!("image size {} vs NC {} vs CNC {}", images.len(), ncs.len(), closed_nc.len()),
                ));
            }
        }
        Ok(())
    }

    /// Removing an isolated singleton {p} with p-1 ~ p+1 drops exactly one
    /// block and {p-1, p} is a block of d(sigma).
    pub fn remove_one(max_ground: usize) -> Result<()> {
        for g in 3..=max_ground {
            for sigma in enumerate_all(g)? {
                for p in 2..g {
                    let singleton = sigma.blocks()[sigma.block_index(p)].len() == 1;
                    if !(singleton && sigma.same_block(p - 1, p + 1)) {
                        continue;
                    }
                    let members: Vec<usize> = (1..=g).filter(|&x| x != p && x != p + 1).collect();
                    let restricted = restrict(&sigma, &members)?;
                    if restricted.num_blocks() + 1 != sigma.num_blocks() {
                        return Err(fail("remove-one", format!("block count for {sigma}, p={p}")));
                    }
                    let d = d_map(&sigma)?;
                    let block = &d.blocks()[d.block_index(p)];
                    if block.as_slice() != [p - 1, p] {
                        return Err(fail(
                            "remove-one",
                            format!("{{p-1,p}} not a d-block for {sigma}, p={p}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// A closed sigma with property P and a singleton {p} has p-1 ~ p+1, and
    /// removing {p, p+1} preserves property P (ground >= 4).
    pub fn restriction_property_p(max_ground: usize) -> Result<()> {
        for g in 4..=max_ground {
            for sigma in enumerate_class(g, PartitionClass::Closed)? {
                if !has_property_p(&sigma)? {
                    continue;
                }
                for p in 2..g {
                    if sigma.blocks()[sigma.block_index(p)].len() != 1 {
                        continue;
                    }
                    if !sigma.same_block(p - 1, p + 1) {
                        return Err(fail(
                            "restriction-p",
                            format!("{sigma}: singleton {p} without p-1 ~ p+1"),
                        ));
                    }
                    let members: Vec<usize> = (1..=g).filter(|&x| x != p && x != p + 1).collect();
                    let restricted = restrict(&sigma, &members)?;
                    if !has_property_p(&restricted)? {
                        return Err(fail(
                            "restriction-p",
                            format!("{sigma}: restriction at p={p} loses property P"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// For odd m, closed sigma on m+1 points with property P have at most
    /// (m+1)/2 blocks.
    pub fn odd_length(max_m: usize) -> Result<()> {
        for m in (3..=max_m).step_by(2) {
            for sigma in enumerate_class(m + 1, PartitionClass::Closed)? {
                if has_property_p(&sigma)? && sigma.num_blocks() > (m + 1) / 2 {
                    return Err(fail("odd-length", format!("{sigma} has {} blocks", sigma.num_blocks())));
                }
            }
        }
        Ok(())
    }

    /// For even m, closed sigma with property P have at most m/2 + 1 blocks,
    /// with equality exactly on the image of NC2(m) under `Ok`.
    pub fn even_length(max_m: usize) -> Result<()> {
        for m in (2..=max_m).step_by(2) {
            let image: HashSet<SetPartition> = enumerate_class(m, PartitionClass::NcPair)?
                .iter()
                .map(|pi| kreweras(pi, KrewerasVariant::Ok).expect("nc input"))
                .collect();
            for sigma in enumerate_class(m + 1, PartitionClass::Closed)? {
                if !has_property_p(&sigma)? {
                    continue;
                }
                let blocks = sigma.num_blocks();
                if blocks > m / 2 + 1 {
                    return Err(fail("even-length", format!("{sigma} has {blocks} blocks")));
                }
                if (blocks == m / 2 + 1) != image.contains(&sigma) {
                    return Err(fail(
                        "even-length",
                        format!("{sigma}: maximal-block characterization fails"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Every Ok(pi) for pi in NC2(m) contains a singleton block.
    pub fn single_block(max_m: usize) -> Result<()> {
        for m in (2..=max_m).step_by(2) {
            for pi in enumerate_class(m, PartitionClass::NcPair)? {
                let ok = kreweras(&pi, KrewerasVariant::Ok)?;
                if !ok.blocks().iter().any(|b| b.len() == 1) {
                    return Err(fail("single-block", format!("Ok({pi}) = {ok} has no singleton")));
                }
            }
        }
        Ok(())
    }

    /// For a pair {p,q} of pi in NC2(2k): Ok of the inner restriction equals
    /// the restriction of Ok(pi) to [p+1, q].
    pub fn inside_ok(max_k: usize) -> Result<()> {
        for k in 1..=max_k {
            let m = 2 * k;
            for pi in enumerate_class(m, PartitionClass::NcPair)? {
                let ok = kreweras(&pi, KrewerasVariant::Ok)?;
                for block in pi.blocks() {
                    let (p, q) = (block[0], block[1]);
                    let outer_members: Vec<usize> = (p + 1..=q).collect();
                    let ok_restricted = restrict(&ok, &outer_members)?;
                    if q == p + 1 {
                        if ok_restricted.num_blocks() != 1 || ok_restricted.ground_size() != 1 {
                            return Err(fail("inside-ok", format!("{pi}: adjacent pair ({p},{q})")));
                        }
                        continue;
                    }
                    let inner_members: Vec<usize> = (p + 1..q).collect();
                    let inner = restrict(&pi, &inner_members)?;
                    let expected = kreweras(&inner, KrewerasVariant::Ok)?;
                    if ok_restricted != expected {
                        return Err(fail(
                            "inside-ok",
                            format!("{pi}: pair ({p},{q}): {ok_restricted} != {expected}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// p ~ q in pi implies p ~ q+1 and p+1 ~ q in Ok(pi).
    pub fn anti_oriented(max_m: usize) -> Result<()> {
        for m in (2..=max_m).step_by(2) {
            for pi in enumerate_class(m, PartitionClass::NcPair)? {
                let ok = kreweras(&pi, KrewerasVariant::Ok)?;
                for block in pi.blocks() {
                    let (p, q) = (block[0], block[1]);
                    if !ok.same_block(p, q + 1) || !ok.same_block(p + 1, q) {
                        return Err(fail("anti-oriented", format!("{pi}: pair ({p},{q}) in {ok}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// The generating relation of d is already transitive for every sigma.
    pub fn d_closure(max_ground: usize) -> Result<()> {
        for g in 2..=max_ground {
            for sigma in enumerate_all(g)? {
                if !d_relation_already_transitive(&sigma)? {
                    return Err(fail("d-closure", format!("closure added pairs for {sigma}")));
                }
            }
        }
        Ok(())
    }

    /// Runs a named suite at its default exhaustive size.
    pub fn run_suite(name: &str) -> Result<()> {
        match name {
            "counts" => counts(10),
            "ok-bijection" => ok_bijection(8),
            "remove-one" => remove_one(8),
            "restriction-p" => restriction_property_p(8),
            "odd-length" => odd_length(7),
            "even-length" => even_length(8),
            "single-block" => single_block(8),
            "inside-ok" => inside_ok(4),
            "anti-oriented" => anti_oriented(8),
            "d-closure" => d_closure(8),
            other => Err(Error::InvalidInput(format!("unknown verify suite '{other}'"))),
        }
    }
}
