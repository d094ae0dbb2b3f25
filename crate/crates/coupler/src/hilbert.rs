//! Composite Fock space of truncated bosonic modes and sparse operators on it.
//!
//! Basis states are ordered row-major over the layout's modes, last mode fastest.

use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

pub type SpMat = CsMat<C64>;

pub const Q1: &str = "q1";
pub const Q2: &str = "q2";
pub const BUS: &str = "b";
pub const NLR: &str = "r";

/// Ordered mode labels with their Fock truncations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeLayout {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl ModeLayout {
    pub fn new<S: AsRef<str>>(modes: &[(S, usize)]) -> Result<Self> {
        let mut labels: Vec<String> = Vec::with_capacity(modes.len());
        let mut dims = Vec::with_capacity(modes.len());
        for (label, dim) in modes {
            let label = label.as_ref().to_string();
            if labels.contains(&label) {
                return Err(Error::Invalid(format!("duplicate mode label `{label}`")));
            }
            if *dim < 2 {
                return Err(Error::Truncation { mode: label, dim: *dim });
            }
            labels.push(label);
            dims.push(*dim);
        }
        if labels.is_empty() {
            return Err(Error::Invalid("layout needs at least one mode".into()));
        }
        Ok(Self { labels, dims })
    }

    /// The `(q1, q2, b, r)` layout used throughout the crate.
    pub fn coupler(q1: usize, q2: usize, b: usize, r: usize) -> Result<Self> {
        Self::new(&[(Q1, q1), (Q2, q2), (BUS, b), (NLR, r)])
    }

    /// Bus and resonator only, for experiments without qubits.
    pub fn bus_nlr(b: usize, r: usize) -> Result<Self> {
        Self::new(&[(BUS, b), (NLR, r)])
    }

    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new(&[(label, dim)])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn has(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.index_of(label)?])
    }

    /// Distance in the flat index between consecutive levels of mode `m`.
    pub fn stride(&self, m: usize) -> usize {
        self.dims[m + 1..].iter().product()
    }

    pub fn flat_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::Invalid(format!(
                "expected {} levels, got {}",
                self.dims.len(),
                levels.len()
            )));
        }
        let mut idx = 0;
        for (m, (&l, &d)) in levels.iter().zip(&self.dims).enumerate() {
            if l >= d {
                return Err(Error::LevelOutOfRange { mode: self.labels[m].clone(), level: l, dim: d });
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    pub fn levels(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for m in (0..self.dims.len()).rev() {
            out[m] = idx % self.dims[m];
            idx /= self.dims[m];
        }
        out
    }

    /// Copy of the layout with one truncation replaced.
    pub fn with_dim(&self, label: &str, dim: usize) -> Result<Self> {
        let m = self.index_of(label)?;
        if dim < 2 {
            return Err(Error::Truncation { mode: label.to_string(), dim });
        }
        let mut out = self.clone();
        out.dims[m] = dim;
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Annihilate,
    Create,
    Number,
    Identity,
}

/// Sparse complex matrix tied to a layout. Immutable once built.
#[derive(Clone, Debug)]
pub struct Operator {
    layout: ModeLayout,
    data: SpMat,
    hermitian: bool,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl Operator {
    pub fn from_sparse(layout: &ModeLayout, data: SpMat) -> Result<Self> {
        let d = layout.dim();
        if data.rows() != d || data.cols() != d {
            return Err(Error::Invalid(format!(
                "matrix is {}x{}, layout needs {d}x{d}",
                data.rows(),
                data.cols()
            )));
        }
        let data = if data.is_csr() { data } else { data.to_csr() };
        Ok(Self { layout: layout.clone(), data, hermitian: false })
    }

    /// Builds an operator flagged Hermitian, checking the flag to 1e-12 relative.
    pub fn hermitian(layout: &ModeLayout, data: SpMat) -> Result<Self> {
        let op = Self::from_sparse(layout, data)?;
        op.into_hermitian()
    }

    pub fn into_hermitian(mut self) -> Result<Self> {
        let dev = self.anti_hermitian_norm();
        let scale = self.max_abs().max(1.0);
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn from_dense(layout: &ModeLayout, m: &DMatrix<C64>) -> Result<Self> {
        Self::from_sparse(layout, dense_to_sparse(m, 0.0))
    }

    pub fn identity(layout: &ModeLayout) -> Self {
        let d = layout.dim();
        Self { layout: layout.clone(), data: CsMat::eye(d), hermitian: true }
    }

    pub fn zero(layout: &ModeLayout) -> Self {
        let d = layout.dim();
        Self { layout: layout.clone(), data: CsMat::zero((d, d)), hermitian: true }
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &SpMat {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn nnz(&self) -> usize {
        self.data.nnz()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data.get(row, col).copied().unwrap_or_default()
    }

    pub fn adjoint(&self) -> Self {
        let data = self.data.transpose_view().to_csr().map(|v| v.conj());
        Self { layout: self.layout.clone(), data, hermitian: self.hermitian }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            layout: self.layout.clone(),
            data: self.data.map(|v| v * c),
            hermitian: self.hermitian && c.im == 0.0,
        }
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            data: &self.data + &other.data,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            data: &self.data - &other.data,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self { layout: self.layout.clone(), data: &self.data * &other.data, hermitian: false })
    }

    /// `self + self†`.
    pub fn plus_adjoint(&self) -> Self {
        let data = &self.data + &self.adjoint().data;
        Self { layout: self.layout.clone(), data, hermitian: true }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.data().iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    /// `max |A - A†| / 2`, entrywise.
    pub fn anti_hermitian_norm(&self) -> f64 {
        let adj = self.data.transpose_view().to_csr().map(|v| v.conj());
        let diff = &self.data - &adj;
        diff.data().iter().fold(0.0f64, |m, v| m.max(v.norm())) / 2.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_layout(other)?;
        let diff = &self.data - &other.data;
        Ok(diff.data().iter().fold(0.0f64, |m, v| m.max(v.norm())))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (v, (i, j)) in self.data.iter() {
            m[(i, j)] += *v;
        }
        m
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); self.dim()];
        for (i, row) in self.data.outer_iterator().enumerate() {
            out[i] = row.iter().map(|(j, a)| a * v[j]).sum();
        }
        out
    }

    /// `⟨ψ|A|ψ⟩` for a normalized state vector.
    pub fn expect_state(&self, psi: &[C64]) -> C64 {
        let a_psi = self.apply(psi);
        psi.iter().zip(&a_psi).map(|(p, q)| p.conj() * q).sum()
    }

    /// `Tr(A ρ)` for a dense row-major density matrix.
    pub fn expect_dm(&self, rho: &[C64]) -> C64 {
        let d = self.dim();
        let mut acc = C64::default();
        for (i, row) in self.data.outer_iterator().enumerate() {
            for (j, a) in row.iter() {
                acc += a * rho[j * d + i];
            }
        }
        acc
    }

    /// Drops the Hermitian flag; used when a builder intentionally returns a non-Hermitian piece.
    pub fn unflagged(mut self) -> Self {
        self.hermitian = false;
        self
    }
}

/// `Σ cᵢ opᵢ` over operators sharing one layout.
pub fn compose(ops: &[&Operator], coeffs: &[C64]) -> Result<Operator> {
    if ops.is_empty() || ops.len() != coeffs.len() {
        return Err(Error::Invalid("compose needs matching, non-empty operand lists".into()));
    }
    let mut acc = ops[0].scale(coeffs[0]);
    for (op, c) in ops.iter().zip(coeffs).skip(1) {
        acc = acc.add(&op.scale(*c))?;
    }
    Ok(acc)
}

fn single_mode(dim: usize, kind: OpKind) -> Vec<(usize, usize, C64)> {
    match kind {
        OpKind::Annihilate => (1..dim).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0))).collect(),
        OpKind::Create => (1..dim).map(|k| (k, k - 1, C64::new((k as f64).sqrt(), 0.0))).collect(),
        OpKind::Number => (1..dim).map(|k| (k, k, C64::new(k as f64, 0.0))).collect(),
        OpKind::Identity => (0..dim).map(|k| (k, k, C64::new(1.0, 0.0))).collect(),
    }
}

/// Fock amplitudes `e^{−|α|²/2} αⁿ/√n!` of a coherent state, truncated to `dim` levels.
pub fn coherent_amplitudes(dim: usize, alpha: C64) -> Vec<C64> {
    let mut v = Vec::with_capacity(dim);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        v.push(c);
    }
    v
}

/// Tensors a single-mode matrix, given as triplets, with identities on the other modes.
fn embed_triplets(layout: &ModeLayout, m: usize, entries: &[(usize, usize, C64)]) -> SpMat {
    let d = layout.dim();
    let dm = layout.dims()[m];
    let inner = layout.stride(m);
    let outer = d / (dm * inner);
    let mut tri = TriMat::with_capacity((d, d), entries.len() * outer * inner);
    for o in 0..outer {
        for &(a, b, v) in entries {
            let row0 = (o * dm + a) * inner;
            let col0 = (o * dm + b) * inner;
            for k in 0..inner {
                tri.add_triplet(row0 + k, col0 + k, v);
            }
        }
    }
    tri.to_csr()
}

pub fn mode_operator(layout: &ModeLayout, mode: &str, kind: OpKind) -> Result<Operator> {
    let m = layout.index_of(mode)?;
    let entries = single_mode(layout.dims()[m], kind);
    let op = Operator::from_sparse(layout, embed_triplets(layout, m, &entries))?;
    Ok(match kind {
        OpKind::Number | OpKind::Identity => Operator { hermitian: true, ..op },
        _ => op,
    })
}

pub fn annihilate(layout: &ModeLayout, mode: &str) -> Result<Operator> {
    mode_operator(layout, mode, OpKind::Annihilate)
}

pub fn create(layout: &ModeLayout, mode: &str) -> Result<Operator> {
    mode_operator(layout, mode, OpKind::Create)
}

pub fn number(layout: &ModeLayout, mode: &str) -> Result<Operator> {
    mode_operator(layout, mode, OpKind::Number)
}

/// `|to⟩⟨from|` on one mode.
pub fn transition(layout: &ModeLayout, mode: &str, to: usize, from: usize) -> Result<Operator> {
    let m = layout.index_of(mode)?;
    let dim = layout.dims()[m];
    for level in [to, from] {
        if level >= dim {
            return Err(Error::LevelOutOfRange { mode: mode.to_string(), level, dim });
        }
    }
    let op = Operator::from_sparse(layout, embed_triplets(layout, m, &[(to, from, C64::new(1.0, 0.0))]))?;
    Ok(if to == from { Operator { hermitian: true, ..op } } else { op })
}

/// Projector onto Fock level `level` of `mode`.
pub fn projector(layout: &ModeLayout, mode: &str, level: usize) -> Result<Operator> {
    transition(layout, mode, level, level)
}

/// Embeds a dense single-mode matrix.
pub fn embed(layout: &ModeLayout, mode: &str, mat: &DMatrix<C64>) -> Result<Operator> {
    let m = layout.index_of(mode)?;
    let dim = layout.dims()[m];
    if mat.nrows() != dim || mat.ncols() != dim {
        return Err(Error::Invalid(format!("{mode} block must be {dim}x{dim}")));
    }
    let mut entries = Vec::new();
    for j in 0..dim {
        for i in 0..dim {
            let v = mat[(i, j)];
            if v != C64::default() {
                entries.push((i, j, v));
            }
        }
    }
    Operator::from_sparse(layout, embed_triplets(layout, m, &entries))
}

fn generator(dim: usize, alpha: C64) -> DMatrix<C64> {
    let mut g = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        let s = (k as f64).sqrt();
        g[(k, k - 1)] = alpha * s;
        g[(k - 1, k)] = -alpha.conj() * s;
    }
    g
}

/// `exp(α r† − α* r)` of the truncated generator (Padé scaling and squaring).
pub fn displacement_matrix(dim: usize, alpha: C64) -> Result<DMatrix<C64>> {
    if dim < 2 {
        return Err(Error::Truncation { mode: NLR.into(), dim });
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::NonFinite("displacement amplitude"));
    }
    if alpha == C64::default() {
        return Ok(DMatrix::identity(dim, dim));
    }
    Ok(generator(dim, alpha).exp())
}

/// Single-mode displacement operator on a layout with one mode labelled `r`.
pub fn displacement_operator(dim: usize, alpha: C64) -> Result<Operator> {
    let layout = ModeLayout::single(NLR, dim)?;
    let m = displacement_matrix(dim, alpha)?;
    Operator::from_dense(&layout, &m)
}

/// Headroom that keeps the low-lying block of a truncated displacement exact.
pub fn displacement_padding(alpha: C64) -> usize {
    let a = alpha.norm();
    (a * a + 6.0 * a + 10.0).ceil() as usize
}

/// `⟨m|D(α)|n⟩` for `m, n < dim`, evaluated in a padded space and projected back.
/// The block is not unitary but each element matches the untruncated operator.
pub fn displacement_block(dim: usize, alpha: C64) -> Result<DMatrix<C64>> {
    let big = displacement_matrix(dim + displacement_padding(alpha), alpha)?;
    Ok(big.view((0, 0), (dim, dim)).into_owned())
}

/// Sparse copy of a dense matrix, dropping entries with magnitude `<= drop_tol`.
pub fn dense_to_sparse(m: &DMatrix<C64>, drop_tol: f64) -> SpMat {
    let mut tri = TriMat::new((m.nrows(), m.ncols()));
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.norm() > drop_tol {
                tri.add_triplet(i, j, v);
            }
        }
    }
    tri.to_csr()
}

/// Scalar time dependence of one Hamiltonian term.
#[derive(Clone)]
pub enum Coefficient {
    Const(C64),
    Func(std::sync::Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl Coefficient {
    pub fn func(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Self::Func(std::sync::Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> C64 {
        match self {
            Self::Const(c) => *c,
            Self::Func(f) => f(t),
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            Self::Const(c) => Self::Const(c.conj()),
            Self::Func(f) => {
                let f = f.clone();
                Self::func(move |t| f(t).conj())
            }
        }
    }
}

pub fn constant(c: C64) -> Coefficient {
    Coefficient::Const(c)
}

/// `Σₖ cₖ(t) Oₖ` over one layout, with the times at which some `cₖ` is not smooth.
#[derive(Clone)]
pub struct TdOperator {
    layout: ModeLayout,
    terms: Vec<(Operator, Coefficient)>,
    breakpoints: Vec<f64>,
}

impl std::fmt::Debug for TdOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TdOperator")
            .field("layout", &self.layout)
            .field("terms", &self.terms.len())
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl TdOperator {
    pub fn new(layout: &ModeLayout) -> Self {
        Self { layout: layout.clone(), terms: Vec::new(), breakpoints: Vec::new() }
    }

    pub fn from_static(op: Operator) -> Self {
        let mut td = Self::new(op.layout());
        td.terms.push((op, constant(C64::new(1.0, 0.0))));
        td
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn terms(&self) -> &[(Operator, Coefficient)] {
        &self.terms
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn add(&mut self, op: Operator, coeff: Coefficient) -> Result<()> {
        if op.layout() != &self.layout {
            return Err(Error::LayoutMismatch);
        }
        if op.nnz() > 0 {
            self.terms.push((op, coeff));
        }
        Ok(())
    }

    pub fn add_static(&mut self, op: Operator) -> Result<()> {
        self.add(op, constant(C64::new(1.0, 0.0)))
    }

    /// Adds `c(t) O + c(t)* O†`.
    pub fn add_hermitian_pair(&mut self, op: Operator, coeff: Coefficient) -> Result<()> {
        let adj = op.adjoint();
        let c2 = coeff.conj();
        self.add(op, coeff)?;
        self.add(adj, c2)
    }

    pub fn add_breakpoints(&mut self, times: &[f64]) {
        self.breakpoints.extend_from_slice(times);
        self.breakpoints.sort_by(|a, b| a.total_cmp(b));
        self.breakpoints.dedup();
    }

    /// The operator at time `t`.
    pub fn at(&self, t: f64) -> Operator {
        let mut acc = Operator::zero(&self.layout).unflagged();
        for (op, c) in &self.terms {
            let ct = c.eval(t);
            acc.data = &acc.data + &op.data.map(|v| v * ct);
        }
        acc
    }

    /// Merges all terms onto their union sparsity pattern for fast repeated evaluation.
    pub fn compile(&self) -> CompiledTd {
        CompiledTd::new(self)
    }
}

/// A [`TdOperator`] laid out as one CSR pattern with a value slice per term.
#[derive(Clone)]
pub struct CompiledTd {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Vec<C64>>,
    coeffs: Vec<Coefficient>,
    static_values: Vec<C64>,
}

impl CompiledTd {
    fn new(td: &TdOperator) -> Self {
        let d = td.layout.dim();
        let mut pattern = TriMat::<C64>::new((d, d));
        for (op, _) in &td.terms {
            for (_, (i, j)) in op.data.iter() {
                pattern.add_triplet(i, j, C64::new(1.0, 0.0));
            }
        }
        let union: SpMat = pattern.to_csr();
        let indptr = union.indptr().raw_storage().to_vec();
        let indices = union.indices().to_vec();
        let locate = |i: usize, j: usize| -> usize {
            let row = &indices[indptr[i]..indptr[i + 1]];
            indptr[i] + row.binary_search(&j).expect("entry belongs to the union pattern")
        };
        let nnz = indices.len();
        let mut static_values = vec![C64::default(); nnz];
        let mut values = Vec::new();
        let mut coeffs = Vec::new();
        for (op, c) in &td.terms {
            if let Coefficient::Const(c0) = c {
                for (v, (i, j)) in op.data.iter() {
                    static_values[locate(i, j)] += v * c0;
                }
            } else {
                let mut vals = vec![C64::default(); nnz];
                for (v, (i, j)) in op.data.iter() {
                    vals[locate(i, j)] += *v;
                }
                values.push(vals);
                coeffs.push(c.clone());
            }
        }
        Self { dim: d, indptr, indices, values, coeffs, static_values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Writes the CSR values at time `t` into `out` (length = union nnz).
    pub fn values_at(&self, t: f64, out: &mut [C64]) {
        out.copy_from_slice(&self.static_values);
        for (vals, c) in self.values.iter().zip(&self.coeffs) {
            let ct = c.eval(t);
            if ct == C64::default() {
                continue;
            }
            for (o, v) in out.iter_mut().zip(vals) {
                *o += v * ct;
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}
