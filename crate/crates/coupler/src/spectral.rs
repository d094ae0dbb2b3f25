//! Exact diagonalization of static Hamiltonians and bare/hybridized state matching.
//!
//! Bare states come from the `g = 0` Hamiltonian and carry Fock labels `[q1, q2, b, r]`.
//! Each bare state is matched to the hybridized eigenstate it overlaps most with; ties
//! near resonances are resolved by a maximum-weight assignment.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use pathfinding::prelude::{kuhn_munkres, Matrix};

use crate::hilbert::{ModeLayout, Operator, BUS, NLR, Q1, Q2};
use crate::model::{build_polaron_model, DisplacementSet, SystemParams};
use crate::{Error, Result, C64};

/// Eigenpairs sorted by ascending energy, each labelled with the Fock state it resembles most.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    layout: ModeLayout,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
    labels: Vec<Vec<usize>>,
    label_index: HashMap<Vec<usize>, usize>,
}

impl EigenSolution {
    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors as columns.
    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Fock label of eigenvector `i`.
    pub fn label(&self, i: usize) -> &[usize] {
        &self.labels[i]
    }

    /// Eigenvector index carrying a Fock label.
    pub fn index_of(&self, label: &[usize]) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    /// `max |V†V − I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let v = &self.eigenvectors;
        let gram = v.adjoint() * v;
        let mut worst = 0.0f64;
        for j in 0..gram.ncols() {
            for i in 0..gram.nrows() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        worst
    }
}

/// Groups basis states into blocks that `h` never connects.
fn components(h: &Operator) -> Vec<Vec<usize>> {
    let d = h.dim();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (v, (i, j)) in h.matrix().iter() {
        if *v != C64::default() && i != j {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..d {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// Max-weight assignment of rows to distinct columns. Rows must not outnumber columns.
fn assign(weights: &DMatrix<f64>) -> Vec<usize> {
    let (rows, cols) = weights.shape();
    // Fast path: distinct dominant argmax per row is already optimal.
    let argmax: Vec<usize> = (0..rows).map(|i| row_argmax(weights, i)).collect();
    let mut seen = vec![false; cols];
    let clean = argmax.iter().enumerate().all(|(i, &j)| {
        let ok = !seen[j] && weights[(i, j)] > 0.5;
        seen[j] = true;
        ok
    });
    if clean {
        return argmax;
    }
    let data: Vec<i64> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .map(|(i, j)| (weights[(i, j)] * 1e12).round() as i64)
        .collect();
    let m = Matrix::from_vec(rows, cols, data).expect("dimensions match");
    kuhn_munkres(&m).1
}

fn row_argmax(w: &DMatrix<f64>, i: usize) -> usize {
    let mut best = 0;
    for j in 1..w.ncols() {
        if w[(i, j)] > w[(i, best)] {
            best = j;
        }
    }
    best
}

/// Full Hermitian eigendecomposition, block by block.
pub fn eigensystem(h: &Operator) -> Result<EigenSolution> {
    let dev = h.anti_hermitian_norm();
    if dev > 1e-10 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let layout = h.layout().clone();
    let d = h.dim();
    let mut pairs: Vec<(f64, Vec<(usize, C64)>)> = Vec::with_capacity(d);
    for block in components(h) {
        let n = block.len();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (a, &i) in block.iter().enumerate() {
            for (b, &j) in block.iter().enumerate() {
                m[(a, b)] = h.get(i, j);
            }
        }
        // Symmetrize away rounding so the solver sees an exactly Hermitian block.
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(m);
        for k in 0..n {
            let col = eig.eigenvectors.column(k);
            let mut best = 0;
            for a in 1..n {
                if col[a].norm() > col[best].norm() {
                    best = a;
                }
            }
            // Fix the global phase: the dominant component is real and positive.
            let phase = col[best].conj() / col[best].norm();
            let entries = block.iter().zip(col.iter()).map(|(&i, &v)| (i, v * phase)).collect();
            pairs.push((eig.eigenvalues[k], entries));
        }
    }
    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let dominant = |e: &[(usize, C64)]| {
        e.iter().fold((usize::MAX, -1.0f64), |acc, &(i, v)| if v.norm() > acc.1 + 1e-12 { (i, v.norm()) } else { acc }).0
    };
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= 1e-12 * scale {
            dominant(&a.1).cmp(&dominant(&b.1))
        } else {
            a.0.total_cmp(&b.0)
        }
    });
    let mut vecs = DMatrix::<C64>::zeros(d, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (k, (e, entries)) in pairs.into_iter().enumerate() {
        eigenvalues.push(e);
        for (i, v) in entries {
            vecs[(i, k)] = v;
        }
    }
    // Label eigenvectors (columns) by Fock basis states (rows).
    let weights = DMatrix::from_fn(d, d, |i, k| vecs[(i, k)].norm_sqr());
    let basis_to_vec = assign(&weights);
    let mut labels = vec![Vec::new(); d];
    let mut label_index = HashMap::with_capacity(d);
    for (basis, &k) in basis_to_vec.iter().enumerate() {
        let lab = layout.levels(basis);
        label_index.insert(lab.clone(), k);
        labels[k] = lab;
    }
    Ok(EigenSolution { layout, eigenvalues, eigenvectors: vecs, labels, label_index })
}

/// Overlaps `|⟨ψ_{h,ν}|ψ_{b,μ}⟩|²` (rows μ bare, columns ν hybridized) and the matching.
#[derive(Clone, Debug)]
pub struct StateMatch {
    overlaps: DMatrix<f64>,
    argmax: Vec<usize>,
    assigned: Vec<usize>,
}

impl StateMatch {
    pub fn overlaps(&self) -> &DMatrix<f64> {
        &self.overlaps
    }

    /// Hybridized index `μ⋆` assigned to bare index `μ`.
    pub fn mu_star(&self, bare: usize) -> usize {
        self.assigned[bare]
    }

    /// Raw argmax over hybridized states.
    pub fn argmax(&self, bare: usize) -> usize {
        self.argmax[bare]
    }

    /// Bare indices whose argmax was overridden by the assignment.
    pub fn collisions(&self) -> Vec<usize> {
        (0..self.assigned.len()).filter(|&m| self.assigned[m] != self.argmax[m]).collect()
    }
}

pub fn match_states(bare: &EigenSolution, hybrid: &EigenSolution) -> Result<StateMatch> {
    if bare.layout != hybrid.layout {
        return Err(Error::LayoutMismatch);
    }
    let prod = bare.eigenvectors.adjoint() * &hybrid.eigenvectors;
    let overlaps = prod.map(|v| v.norm_sqr());
    let argmax = (0..overlaps.nrows()).map(|i| row_argmax(&overlaps, i)).collect();
    let assigned = assign(&overlaps);
    Ok(StateMatch { overlaps, argmax, assigned })
}

/// Bare and hybridized spectra of one static Hamiltonian pair.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub bare: EigenSolution,
    pub hybrid: EigenSolution,
    pub matching: StateMatch,
}

impl Spectrum {
    pub fn new(h_bare: &Operator, h: &Operator) -> Result<Self> {
        let bare = eigensystem(h_bare)?;
        let hybrid = eigensystem(h)?;
        let matching = match_states(&bare, &hybrid)?;
        Ok(Self { bare, hybrid, matching })
    }

    fn bare_index(&self, label: &[usize]) -> Result<usize> {
        self.bare.index_of(label).ok_or_else(|| Error::Unmatched(format!("{label:?}")))
    }

    /// Hybridized index matched to a bare Fock label.
    pub fn hybrid_index(&self, label: &[usize]) -> Result<usize> {
        Ok(self.matching.mu_star(self.bare_index(label)?))
    }

    /// Energy of the hybridized state matched to `label`.
    pub fn energy(&self, label: &[usize]) -> Result<f64> {
        Ok(self.hybrid.eigenvalues[self.hybrid_index(label)?])
    }
}

/// `(q1, q2, b, r)` label padded to the layout, with zeros for bus and NLR.
pub fn qubit_label(layout: &ModeLayout, q1: usize, q2: usize) -> Vec<usize> {
    let mut lab = vec![0; layout.n_modes()];
    if let Ok(i) = layout.index_of(Q1) {
        lab[i] = q1;
    }
    if let Ok(i) = layout.index_of(Q2) {
        lab[i] = q2;
    }
    lab
}

/// `Σ_ν |⟨ψ_{h,μ⋆}|ψ_{b,ν}⟩|⁴`.
pub fn ipr(spec: &Spectrum, label: &[usize]) -> Result<f64> {
    let h = spec.hybrid_index(label)?;
    let col = spec.matching.overlaps.column(h);
    let norm: f64 = col.iter().sum();
    Ok(col.iter().map(|o| o * o).sum::<f64>() / (norm * norm))
}

/// IPR of the hybridized state matched to the bare eigenstate at index `bare`.
pub fn ipr_at(spec: &Spectrum, bare: usize) -> Result<f64> {
    if bare >= spec.bare.len() {
        return Err(Error::Invalid(format!("bare index {bare} out of range")));
    }
    let col = spec.matching.overlaps.column(spec.matching.mu_star(bare));
    let norm: f64 = col.iter().sum();
    Ok(col.iter().map(|o| o * o).sum::<f64>() / (norm * norm))
}

/// `χ₁₂ = ω₁₁₀₀ − ω₁₀₀₀ − ω₀₁₀₀ + ω₀₀₀₀` from the matched hybridized energies.
pub fn zz_shift(spec: &Spectrum) -> Result<f64> {
    let l = spec.bare.layout();
    let e = |a, b| spec.energy(&qubit_label(l, a, b));
    Ok(e(1, 1)? - e(1, 0)? - e(0, 1)? + e(0, 0)?)
}

/// Overlap form `(κ|ᾱ|²/2)(Σ_k |⟨ψ_{h,q}|ψ_{b,001k}⟩|²)²` for qubit `q ∈ {1, 2}`.
pub fn qubit_dephasing_rate(spec: &Spectrum, kappa: f64, alpha_bar: C64, qubit: usize) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Invalid("dephasing rate needs kappa > 0".into()));
    }
    let layout = spec.bare.layout();
    let label = if qubit == 1 { qubit_label(layout, 1, 0) } else { qubit_label(layout, 0, 1) };
    let h = spec.hybrid_index(&label)?;
    let ib = layout.index_of(BUS)?;
    let ir = layout.index_of(NLR)?;
    let mut weight = 0.0;
    for k in 0..layout.dims()[ir] {
        let mut lab = qubit_label(layout, 0, 0);
        lab[ib] = 1;
        lab[ir] = k;
        let b = spec.bare_index(&lab)?;
        weight += spec.matching.overlaps[(b, h)];
    }
    Ok(kappa * alpha_bar.norm_sqr() / 2.0 * weight * weight)
}

/// Order-of-magnitude comparison between `|χ₁₂|` and the IPR-based amplitude bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    /// `max_{ν ∈ {1000, 0100}} √(1 − IPR_ν)`.
    pub bound: f64,
    pub chi12: f64,
    /// `|χ₁₂|` divided by the exchange scale `g₁g₂(1/|Δ̃₁| + 1/|Δ̃₂|)/2`.
    pub chi12_normalized: f64,
    /// Normalized `|χ₁₂|` exceeds ten times the bound.
    pub flagged: bool,
}

pub fn coupling_bound_check(spec: &Spectrum, g: [f64; 2], detunings: [f64; 2]) -> Result<BoundReport> {
    let l = spec.bare.layout();
    let b1 = (1.0 - ipr(spec, &qubit_label(l, 1, 0))?).max(0.0).sqrt();
    let b2 = (1.0 - ipr(spec, &qubit_label(l, 0, 1))?).max(0.0).sqrt();
    let bound = b1.max(b2);
    let chi12 = zz_shift(spec)?;
    let scale = (g[0] * g[1]).abs() * (1.0 / detunings[0].abs() + 1.0 / detunings[1].abs()) / 2.0;
    let chi12_normalized = if scale > 0.0 { chi12.abs() / scale } else { 0.0 };
    Ok(BoundReport { bound, chi12, chi12_normalized, flagged: chi12_normalized > 10.0 * bound })
}

/// Static polaron-frame spectrum with the bare (`g = 0`) reference.
pub fn polaron_spectrum(params: &SystemParams, layout: &ModeLayout, disp: &DisplacementSet) -> Result<Spectrum> {
    let h = build_polaron_model(params, layout, disp, None)?.static_hamiltonian()?;
    let bare_params = SystemParams { g_1: 0.0, g_2: 0.0, ..*params };
    let h0 = build_polaron_model(&bare_params, layout, disp, None)?.static_hamiltonian()?;
    Spectrum::new(&h0, &h)
}

/// `1 − IPR` at NLR truncation `r` and `r + 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergence {
    pub value: f64,
    pub refined: f64,
    pub relative_change: f64,
    pub converged: bool,
}

/// Re-runs the diagonalization with four more NLR levels and requires a relative change
/// of `1 − IPR` below 2%.
pub fn ipr_convergence(
    params: &SystemParams,
    layout: &ModeLayout,
    disp: &DisplacementSet,
    label: &[usize],
) -> Result<Convergence> {
    let r = layout.dim_of(NLR)?;
    let value = 1.0 - ipr(&polaron_spectrum(params, layout, disp)?, label)?;
    let refined_layout = layout.with_dim(NLR, r + 4)?;
    let refined = 1.0 - ipr(&polaron_spectrum(params, &refined_layout, disp)?, label)?;
    let relative_change = if refined.abs() > 0.0 { (value - refined).abs() / refined.abs() } else { (value - refined).abs() };
    Ok(Convergence { value, refined, relative_change, converged: relative_change < 0.02 })
}

/// Grows the NLR truncation of `layout` in steps of four, up to `r_max`, until `1 − IPR`
/// of every label changes by less than 2% over one step. Returns the spectrum at the
/// larger truncation of the final pair and the worst label's convergence record.
pub fn converged_polaron_spectrum(
    params: &SystemParams,
    layout: &ModeLayout,
    disp: &DisplacementSet,
    labels: &[Vec<usize>],
    r_max: usize,
) -> Result<(Spectrum, Convergence)> {
    if labels.is_empty() {
        return Err(Error::Invalid("no labels to converge".into()));
    }
    let one_minus = |spec: &Spectrum| labels.iter().map(|l| Ok(1.0 - ipr(spec, l)?)).collect::<Result<Vec<f64>>>();
    let mut r = layout.dim_of(NLR)?;
    let mut values = one_minus(&polaron_spectrum(params, layout, disp)?)?;
    loop {
        let finer = layout.with_dim(NLR, r + 4)?;
        let next = polaron_spectrum(params, &finer, disp)?;
        let refined = one_minus(&next)?;
        let mut worst = Convergence { value: 0.0, refined: 0.0, relative_change: -1.0, converged: true };
        for (v, f) in values.iter().zip(&refined) {
            let change = if f.abs() > 0.0 { (v - f).abs() / f.abs() } else { (v - f).abs() };
            if change > worst.relative_change {
                worst = Convergence { value: *v, refined: *f, relative_change: change, converged: change < 0.02 };
            }
        }
        if worst.converged || r + 4 >= r_max {
            return Ok((next, worst));
        }
        r += 4;
        values = refined;
    }
}
