//! The base algebra B = M_k(C): elements, completely positive maps in Kraus
//! form, block matrices over B with their conditional expectations, and the
//! regrouping between block layouts of M_{kN}.
//!
//! Tolerances are measured in operator norm (largest singular value) unless a
//! function says otherwise.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// An element of B = M_k(C).
#[derive(Debug, Clone, PartialEq)]
pub struct AlgElement {
    mat: DMatrix<Complex64>,
}

impl AlgElement {
    pub fn identity(dim: usize) -> Self {
        AlgElement { mat: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        AlgElement { mat: DMatrix::zeros(dim, dim) }
    }

    /// Wraps a square matrix.
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimMismatch(format!(
                "algebra element must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(AlgElement { mat })
    }

    /// A 1x1 element, for the scalar theory k = 1.
    pub fn scalar(z: Complex64) -> Self {
        AlgElement { mat: DMatrix::from_element(1, 1, z) }
    }

    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: FnMut(usize, usize) -> Complex64,
    {
        AlgElement { mat: DMatrix::from_fn(dim, dim, f) }
    }

    /// Entries uniform in the unit square of C.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        AlgElement::from_fn(dim, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    /// (C + C*)/2 for random C.
    pub fn random_selfadjoint<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let c = AlgElement::random(dim, rng);
        (&c + &c.adjoint()).scale(0.5)
    }

    /// C·C*, positive semidefinite by construction.
    pub fn random_psd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let c = AlgElement::random(dim, rng);
        &c * &c.adjoint()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    /// The single entry of a 1x1 element.
    pub fn as_scalar(&self) -> Result<Complex64> {
        if self.dim() != 1 {
            return Err(Error::DimMismatch(format!("expected 1x1, got {0}x{0}", self.dim())));
        }
        Ok(self.mat[(0, 0)])
    }

    pub fn adjoint(&self) -> Self {
        AlgElement { mat: self.mat.adjoint() }
    }

    pub fn is_selfadjoint(&self, tol: f64) -> bool {
        (self - &self.adjoint()).op_norm() <= tol
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.mat.iter().all(|z| z.norm_sqr() == 0.0) {
            return 0.0;
        }
        let svd = self.mat.clone().svd(false, false);
        svd.singular_values.max()
    }

    pub fn frob_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Smallest eigenvalue of the selfadjoint part (A + A*)/2.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()).scale(0.5);
        let eigen = SymmetricEigen::new(herm);
        eigen.eigenvalues.min()
    }

    pub fn scale(&self, factor: f64) -> Self {
        AlgElement { mat: self.mat.scale(factor) }
    }

    pub fn scale_complex(&self, factor: Complex64) -> Self {
        AlgElement { mat: &self.mat * factor }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }
}

impl std::ops::Add for &AlgElement {
    type Output = AlgElement;
    fn add(self, rhs: &AlgElement) -> AlgElement {
        AlgElement { mat: &self.mat + &rhs.mat }
    }
}

impl std::ops::Sub for &AlgElement {
    type Output = AlgElement;
    fn sub(self, rhs: &AlgElement) -> AlgElement {
        AlgElement { mat: &self.mat - &rhs.mat }
    }
}

impl std::ops::Mul for &AlgElement {
    type Output = AlgElement;
    fn mul(self, rhs: &AlgElement) -> AlgElement {
        AlgElement { mat: &self.mat * &rhs.mat }
    }
}

impl std::ops::Neg for &AlgElement {
    type Output = AlgElement;
    fn neg(self) -> AlgElement {
        AlgElement { mat: -&self.mat }
    }
}

/// A completely positive map in Kraus form: eta(b) = sum_r K_r b K_r*.
#[derive(Debug, Clone)]
pub struct CPMap {
    dim: usize,
    kraus: Vec<AlgElement>,
    selfadjoint_kraus: bool,
}

impl CPMap {
    pub fn new(kraus: Vec<AlgElement>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidInput("a CP map needs at least one Kraus operator".into()));
        }
        let dim = kraus[0].dim();
        if kraus.iter().any(|k| k.dim() != dim) {
            return Err(Error::DimMismatch("Kraus operators of mixed dimension".into()));
        }
        let selfadjoint_kraus = kraus.iter().all(|k| k.is_selfadjoint(1e-12));
        Ok(CPMap { dim, kraus, selfadjoint_kraus })
    }

    /// The identity map (single Kraus operator I).
    pub fn identity(dim: usize) -> Self {
        CPMap { dim, kraus: vec![AlgElement::identity(dim)], selfadjoint_kraus: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[AlgElement] {
        &self.kraus
    }

    /// True when every Kraus operator is selfadjoint, as the matrix-model
    /// entry construction requires.
    pub fn selfadjoint_kraus(&self) -> bool {
        self.selfadjoint_kraus
    }

    pub fn apply(&self, b: &AlgElement) -> Result<AlgElement> {
        if b.dim() != self.dim {
            return Err(Error::DimMismatch(format!(
                "CP map on dim {}, argument dim {}",
                self.dim,
                b.dim()
            )));
        }
        let mut out = AlgElement::zeros(self.dim);
        for k in &self.kraus {
            out = &out + &(&(k * b) * &k.adjoint());
        }
        Ok(out)
    }

    /// Choi PSD test; true for every Kraus-form map.
    pub fn is_completely_positive(&self, tol: f64) -> bool {
        choi_psd_check(self.dim, |b| self.apply(b).expect("dims match"), tol)
    }
}

/// Complex matrix product assembled from four real products, which run on
/// the optimized f64 kernel instead of the generic complex loop.
pub fn mul_complex_fast(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let ar = a.map(|z| z.re);
    let ai = a.map(|z| z.im);
    let br = b.map(|z| z.re);
    let bi = b.map(|z| z.im);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, |r, i| Complex64::new(r, i))
}

/// Choi matrix sum_{ij} e_ij (x) action(e_ij) of a raw linear action on B.
pub fn choi_matrix<F>(dim: usize, action: F) -> DMatrix<Complex64>
where
    F: Fn(&AlgElement) -> AlgElement,
{
    let mut choi = DMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let unit = AlgElement::from_fn(dim, |p, q| {
                if (p, q) == (i, j) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
            });
            let image = action(&unit);
            for p in 0..dim {
                for q in 0..dim {
                    choi[(i * dim + p, j * dim + q)] = image.entry(p, q);
                }
            }
        }
    }
    choi
}

/// True when the Choi matrix of the action is Hermitian and PSD within tol.
pub fn choi_psd_check<F>(dim: usize, action: F, tol: f64) -> bool
where
    F: Fn(&AlgElement) -> AlgElement,
{
    let choi = choi_matrix(dim, action);
    let herm_dev = (&choi - choi.adjoint()).norm() * 0.5;
    if herm_dev > tol {
        return false;
    }
    let herm = (&choi + choi.adjoint()).scale(0.5);
    SymmetricEigen::new(herm).eigenvalues.min() >= -tol
}

/// An element of B (x) M_size: a size x size grid of k x k blocks, stored
/// flat. Row-block i of the flat matrix holds blocks (i, 0..size).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    dim: usize,
    size: usize,
    mat: DMatrix<Complex64>,
}

impl BlockMatrix {
    pub fn zeros(dim: usize, size: usize) -> Self {
        BlockMatrix { dim, size, mat: DMatrix::zeros(dim * size, dim * size) }
    }

    pub fn identity(dim: usize, size: usize) -> Self {
        BlockMatrix { dim, size, mat: DMatrix::identity(dim * size, dim * size) }
    }

    pub fn from_flat(dim: usize, size: usize, mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != dim * size || mat.ncols() != dim * size {
            return Err(Error::DimMismatch(format!(
                "flat matrix {}x{} does not hold {} blocks of dim {}",
                mat.nrows(),
                mat.ncols(),
                size * size,
                dim
            )));
        }
        Ok(BlockMatrix { dim, size, mat })
    }

    /// b (x) I_size: every diagonal block equals b.
    pub fn embed_scalar(b: &AlgElement, size: usize) -> Self {
        let mut out = BlockMatrix::zeros(b.dim(), size);
        for i in 0..size {
            out.set_block(i, i, b);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn flat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn block(&self, i: usize, j: usize) -> AlgElement {
        let k = self.dim;
        AlgElement { mat: self.mat.view((i * k, j * k), (k, k)).into_owned() }
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: &AlgElement) {
        assert_eq!(b.dim(), self.dim, "block dimension mismatch");
        let k = self.dim;
        self.mat.view_mut((i * k, j * k), (k, k)).copy_from(&b.mat);
    }

    pub fn adjoint(&self) -> Self {
        BlockMatrix { dim: self.dim, size: self.size, mat: self.mat.adjoint() }
    }

    pub fn is_selfadjoint(&self, tol: f64) -> bool {
        (&self.mat - self.mat.adjoint()).norm() <= tol
    }

    pub fn scale(&self, factor: f64) -> Self {
        BlockMatrix { dim: self.dim, size: self.size, mat: self.mat.scale(factor) }
    }

    /// The conditional expectation onto B: the average of diagonal blocks.
    pub fn cond_exp(&self) -> AlgElement {
        let mut sum = AlgElement::zeros(self.dim);
        for i in 0..self.size {
            sum = &sum + &self.block(i, i);
        }
        sum.scale(1.0 / self.size as f64)
    }

    pub fn mul(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        if self.dim != rhs.dim || self.size != rhs.size {
            return Err(Error::DimMismatch("block matrix product shape mismatch".into()));
        }
        Ok(BlockMatrix { dim: self.dim, size: self.size, mat: mul_complex_fast(&self.mat, &rhs.mat) })
    }

    pub fn add(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        if self.dim != rhs.dim || self.size != rhs.size {
            return Err(Error::DimMismatch("block matrix sum shape mismatch".into()));
        }
        Ok(BlockMatrix { dim: self.dim, size: self.size, mat: &self.mat + &rhs.mat })
    }
}

/// Diagonal blocks of the product a·b, averaged, without forming the full
/// product: (1/size)·sum_i sum_l a(i,l)·b(l,i).
pub fn cond_exp_of_product(a: &BlockMatrix, b: &BlockMatrix) -> Result<AlgElement> {
    if a.dim != b.dim || a.size != b.size {
        return Err(Error::DimMismatch("product shape mismatch".into()));
    }
    let k = a.dim;
    let mut sum: DMatrix<Complex64> = DMatrix::zeros(k, k);
    for i in 0..a.size {
        for l in 0..a.size {
            let left = a.mat.view((i * k, l * k), (k, k));
            let right = b.mat.view((l * k, i * k), (k, k));
            sum += left * right;
        }
    }
    Ok(AlgElement { mat: sum.scale(1.0 / a.size as f64) })
}

/// Block-diagonal element of B (x) M_size with per-index diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonal {
    dim: usize,
    blocks: Vec<AlgElement>,
}

impl BlockDiagonal {
    pub fn from_blocks(blocks: Vec<AlgElement>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("block diagonal needs at least one block".into()));
        }
        let dim = blocks[0].dim();
        if blocks.iter().any(|b| b.dim() != dim) {
            return Err(Error::DimMismatch("block diagonal of mixed dimension".into()));
        }
        Ok(BlockDiagonal { dim, blocks })
    }

    pub fn identity(dim: usize, size: usize) -> Self {
        BlockDiagonal { dim, blocks: vec![AlgElement::identity(dim); size] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &AlgElement {
        &self.blocks[i]
    }

    pub fn to_block_matrix(&self) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(self.dim, self.size());
        for (i, b) in self.blocks.iter().enumerate() {
            out.set_block(i, i, b);
        }
        out
    }

    pub fn cond_exp(&self) -> AlgElement {
        let mut sum = AlgElement::zeros(self.dim);
        for b in &self.blocks {
            sum = &sum + b;
        }
        sum.scale(1.0 / self.size() as f64)
    }

    /// self · rhs, scaling row-blocks of the dense factor.
    pub fn mul_dense(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        if self.dim != rhs.dim || self.size() != rhs.size {
            return Err(Error::DimMismatch("diagonal times dense shape mismatch".into()));
        }
        let k = self.dim;
        let mut mat = DMatrix::zeros(rhs.mat.nrows(), rhs.mat.ncols());
        for i in 0..self.size() {
            let row = rhs.mat.view((i * k, 0), (k, rhs.mat.ncols()));
            mat.view_mut((i * k, 0), (k, rhs.mat.ncols()))
                .copy_from(&(&self.blocks[i].mat * row));
        }
        Ok(BlockMatrix { dim: rhs.dim, size: rhs.size, mat })
    }

    /// lhs · self, scaling column-blocks of the dense factor.
    pub fn mul_dense_right(&self, lhs: &BlockMatrix) -> Result<BlockMatrix> {
        if self.dim != lhs.dim || self.size() != lhs.size {
            return Err(Error::DimMismatch("dense times diagonal shape mismatch".into()));
        }
        let k = self.dim;
        let mut mat = DMatrix::zeros(lhs.mat.nrows(), lhs.mat.ncols());
        for j in 0..self.size() {
            let col = lhs.mat.view((0, j * k), (lhs.mat.nrows(), k));
            mat.view_mut((0, j * k), (lhs.mat.nrows(), k))
                .copy_from(&(col * &self.blocks[j].mat));
        }
        Ok(BlockMatrix { dim: lhs.dim, size: lhs.size, mat })
    }
}

/// Regroups a block matrix of size divisible by n_inner into the extended
/// layout: outer index i of the result ranges over size/n_inner, and block
/// (i,j) of the result is the flat of the n_inner x n_inner grid of original
/// blocks (i·n_inner + p, j·n_inner + q). The flat matrix is untouched; only
/// the block structure is reinterpreted, so the regrouping is bit-exact.
pub fn extended_reshape(y: &BlockMatrix, n_inner: usize) -> Result<BlockMatrix> {
    if n_inner == 0 || y.size % n_inner != 0 {
        return Err(Error::DimMismatch(format!(
            "size {} not divisible by inner size {}",
            y.size, n_inner
        )));
    }
    Ok(BlockMatrix {
        dim: y.dim * n_inner,
        size: y.size / n_inner,
        mat: y.mat.clone(),
    })
}

/// Inverse of [`extended_reshape`]: regroups back onto the base dimension.
pub fn flatten_reshape(y: &BlockMatrix, base_dim: usize) -> Result<BlockMatrix> {
    if base_dim == 0 || y.dim % base_dim != 0 {
        return Err(Error::DimMismatch(format!(
            "dim {} not divisible by base dim {}",
            y.dim, base_dim
        )));
    }
    let n_inner = y.dim / base_dim;
    Ok(BlockMatrix {
        dim: base_dim,
        size: y.size * n_inner,
        mat: y.mat.clone(),
    })
}

/// Builds a size x size block matrix entrywise from an expectation rule, the
/// entrywise conditional expectation of a random block matrix.
pub fn cond_exp_entrywise<F>(dim: usize, size: usize, mut entry_expectation: F) -> Result<BlockMatrix>
where
    F: FnMut(usize, usize) -> Result<AlgElement>,
{
    let mut out = BlockMatrix::zeros(dim, size);
    for i in 0..size {
        for j in 0..size {
            let b = entry_expectation(i, j)?;
            if b.dim() != dim {
                return Err(Error::DimMismatch("entry expectation of wrong dimension".into()));
            }
            out.set_block(i, j, &b);
        }
    }
    Ok(out)
}
