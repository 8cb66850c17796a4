//! Assembly of the symmetry-reduced program.
//!
//! The decision variable is a permutation-invariant operator
//!
//! ```text
//!     ρ = Σ v_{ijxyE} · |i⟩⟨j|_A ⊗ |x⟩⟨y|_Ā ⊗ C_E      on A ⊗ Ā ⊗ (B B̄)^{⊗n},
//! ```
//!
//! one complex coefficient per outer index `(i, j, x, y)` and orbit key `E`.
//! Hermiticity pairs `v_{ijxyE}` with `conj(v_{jiyxEᵀ})`. Equalities are
//! imposed on these coefficients (the `C_E` form a basis of the invariant
//! algebra), and positivity through one block per partition `λ` of `n` with at
//! most `d_H` rows, with entries
//!
//! ```text
//!     block_λ[(i, x, τ), (j, y, γ)] = Σ_E ⟨u_τ, C_E u_γ⟩ · v_{ijxyE}.
//! ```
//!
//! Complex variable `c = α·m + e` where `α = ((i·d_A + j)·d_Ā + x)·d_Ā + y` and
//! `e` is the position of `E` among the `m` orbits in lexicographic order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::channels::{maximally_entangled, ChannelError, ChoiMatrix, CptpReport};
use crate::linalg::{self, ComplexMatrix, LinalgError, SystemShape};
use crate::math;
use crate::orbitbasis::{
    enumerate_orbits, first_copy_reduction, orbit_size, BasisElement, InvariantOperator,
    OrbitError, OrbitKey,
};
use crate::sdpsolve::dense::{eliminate, SparseRow};
use crate::sdpsolve::{BlockEntry, BlockMap, BlockSdp, Parametrization};
use crate::symrep::{pairing_table, partitions, PairingTable, Partition, SymrepError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("level must be ≥ 1")]
    ZeroLevel,
    #[error("message dimension must be ≥ 1")]
    ZeroMessageDimension,
    #[error("channel is not CPTP (min eigenvalue {:e}, trace-preservation deviation {:e})", .0.min_eigenvalue, .0.tp_deviation)]
    NotCptp(CptpReport),
    #[error("the real parametrization needs a real Choi matrix")]
    ComplexChoi,
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Symrep(#[from] SymrepError),
}

/// Subsystem dimensions: `A` and `B̄` carry the message (`M`), `Ā` and `B`
/// are the channel input and output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub d_a: usize,
    pub d_abar: usize,
    pub d_b: usize,
    pub d_bbar: usize,
    pub n: usize,
}

impl Dims {
    pub fn new(choi: &ChoiMatrix, m: usize, n: usize) -> Self {
        Self {
            d_a: m,
            d_abar: choi.d_a,
            d_b: choi.d_b,
            d_bbar: m,
            n,
        }
    }

    pub fn d_h(&self) -> usize {
        self.d_b * self.d_bbar
    }

    /// Number of outer indices `(i, j, x, y)`.
    pub fn num_outer(&self) -> usize {
        self.d_a * self.d_a * self.d_abar * self.d_abar
    }

    pub fn outer_index(&self, i: usize, j: usize, x: usize, y: usize) -> usize {
        ((i * self.d_a + j) * self.d_abar + x) * self.d_abar + y
    }

    pub fn outer_parts(&self, alpha: usize) -> (usize, usize, usize, usize) {
        let y = alpha % self.d_abar;
        let x = (alpha / self.d_abar) % self.d_abar;
        let j = (alpha / (self.d_abar * self.d_abar)) % self.d_a;
        let i = alpha / (self.d_abar * self.d_abar * self.d_a);
        (i, j, x, y)
    }

    /// Side of the dense operator, `d_A·d_Ā·d_Hⁿ`, if it fits in `usize`.
    pub fn full_dimension(&self) -> Option<usize> {
        let mut s = self.d_a.checked_mul(self.d_abar)?;
        for _ in 0..self.n {
            s = s.checked_mul(self.d_h())?;
        }
        Some(s)
    }
}

/// Which real parametrization of the Hermitian coefficients to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    /// One real parameter per Hermitian pair. The optimum is attained on real
    /// operators whenever the Choi matrix is real, since `ρ ↦ conj(ρ)` then
    /// preserves feasibility and value.
    Real,
    /// Real and imaginary parts; blocks are embedded as `[[Re, −Im], [Im, Re]]`.
    Complex,
}

/// Indexing of the complex variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    dims: Dims,
    orbits: Vec<OrbitKey>,
    index: BTreeMap<OrbitKey, usize>,
    transpose: Vec<usize>,
}

impl VariableLayout {
    pub fn new(dims: Dims) -> Self {
        let orbits = enumerate_orbits(dims.d_h(), dims.n);
        let index: BTreeMap<OrbitKey, usize> = orbits
            .iter()
            .cloned()
            .enumerate()
            .map(|(k, e)| (e, k))
            .collect();
        let transpose = orbits.iter().map(|e| index[&e.transpose()]).collect();
        Self {
            dims,
            orbits,
            index,
            transpose,
        }
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn orbits(&self) -> &[OrbitKey] {
        &self.orbits
    }

    pub fn num_orbits(&self) -> usize {
        self.orbits.len()
    }

    /// Number of complex variables.
    pub fn len(&self) -> usize {
        self.dims.num_outer() * self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn orbit_index(&self, key: &OrbitKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Position of `Eᵀ` for the orbit at position `e`.
    pub fn transposed_orbit(&self, e: usize) -> usize {
        self.transpose[e]
    }

    pub fn var(&self, alpha: usize, e: usize) -> usize {
        alpha * self.orbits.len() + e
    }

    pub fn index_of(&self, elem: &BasisElement) -> Option<usize> {
        let d = &self.dims;
        if elem.i >= d.d_a || elem.j >= d.d_a || elem.x >= d.d_abar || elem.y >= d.d_abar {
            return None;
        }
        Some(self.var(
            d.outer_index(elem.i, elem.j, elem.x, elem.y),
            self.orbit_index(&elem.key)?,
        ))
    }

    pub fn element(&self, c: usize) -> BasisElement {
        let m = self.orbits.len();
        let (i, j, x, y) = self.dims.outer_parts(c / m);
        BasisElement {
            i,
            j,
            x,
            y,
            key: self.orbits[c % m].clone(),
        }
    }

    /// Variable of the adjoint basis element.
    pub fn adjoint(&self, c: usize) -> usize {
        let m = self.orbits.len();
        let (i, j, x, y) = self.dims.outer_parts(c / m);
        self.var(self.dims.outer_index(j, i, y, x), self.transpose[c % m])
    }
}

/// Which constraint family a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKind {
    Normalization,
    MarginalA,
    MarginalBn,
}

/// Linear equality `Σ coef · v_c = rhs` on the complex variables. All
/// coefficients in this program are real.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRow {
    pub kind: RowKind,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl ComplexRow {
    pub fn eval(&self, v: &[Complex64]) -> Complex64 {
        self.coeffs
            .iter()
            .map(|&(c, a)| v[c] * a)
            .sum::<Complex64>()
            - self.rhs
    }
}

/// Upper-triangle entry `(row, col)` of a block: `Σ coef · v_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockForm {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<(usize, f64)>,
}

/// Hermitian block of partition `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBlock {
    pub partition: Partition,
    pub num_tableaux: usize,
    pub side: usize,
    pub entries: Vec<BlockForm>,
}

impl ReducedBlock {
    pub fn evaluate(&self, v: &[Complex64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.side, self.side);
        for f in &self.entries {
            let val: Complex64 = f.terms.iter().map(|&(c, a)| v[c] * a).sum();
            m[(f.row, f.col)] = val;
            if f.row != f.col {
                m[(f.col, f.row)] = val.conj();
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssemblyStats {
    pub num_orbits: usize,
    pub num_complex_vars: usize,
    pub normalization_rows: usize,
    pub marginal_a_rows: usize,
    pub marginal_bn_rows: usize,
    /// `(partition, block side)` in partition order.
    pub blocks: Vec<(Partition, usize)>,
}

impl AssemblyStats {
    pub fn num_rows(&self) -> usize {
        self.normalization_rows + self.marginal_a_rows + self.marginal_bn_rows
    }
}

/// The assembled program over complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSdp {
    pub layout: VariableLayout,
    /// Objective coefficient of every complex variable; the objective is
    /// `Re Σ objective[c] · v_c` (and is real on Hermitian assignments).
    pub objective: Vec<Complex64>,
    pub rows: Vec<ComplexRow>,
    pub blocks: Vec<ReducedBlock>,
    pub stats: AssemblyStats,
    real_choi: bool,
}

fn merge_terms(mut terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (k, a) in terms {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += a,
            _ => out.push((k, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

/// `J ⊗ Φ` reordered from `(Ā, B, A, B̄)` to `(A, Ā, B, B̄)`.
fn objective_operator(choi: &ChoiMatrix, dims: &Dims) -> Result<ComplexMatrix, ReductionError> {
    let phi = maximally_entangled(dims.d_a)?;
    let jp = linalg::kron(&choi.matrix, &phi);
    let shape = SystemShape::new(vec![dims.d_abar, dims.d_b, dims.d_a, dims.d_bbar])?;
    Ok(linalg::permute_systems(&jp, &shape, &[2, 0, 1, 3])?)
}

/// Objective coefficients `d_Ā·d_B · Σ_{p,q} N_E(p,q) · W[(j,y,q), (i,x,p)]`
/// where `W = J ⊗ Φ` on `A Ā B₁ B̄₁` and `N_E` is the first-copy reduction of
/// `C_E`. Only orbits with at most one off-diagonal pair contribute.
pub fn objective_vector(
    choi: &ChoiMatrix,
    layout: &VariableLayout,
) -> Result<Vec<Complex64>, ReductionError> {
    let dims = layout.dims();
    if choi.d_a != dims.d_abar || choi.d_b != dims.d_b {
        return Err(ChannelError::Domain(format!(
            "Choi matrix is {}→{} but the layout expects {}→{}",
            choi.d_a, choi.d_b, dims.d_abar, dims.d_b
        ))
        .into());
    }
    let w = objective_operator(choi, dims)?;
    let d_h = dims.d_h();
    let scale = (dims.d_abar * dims.d_b) as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); layout.len()];
    for (e, key) in layout.orbits().iter().enumerate() {
        if key.off_diagonal_mass() > 1 {
            continue;
        }
        let red = first_copy_reduction(key)?;
        for alpha in 0..dims.num_outer() {
            let (i, j, x, y) = dims.outer_parts(alpha);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&(p, q), &count) in &red {
                let row = (j * dims.d_abar + y) * d_h + q;
                let col = (i * dims.d_abar + x) * d_h + p;
                acc += w[(row, col)] * count as f64;
            }
            out[layout.var(alpha, e)] = acc * scale;
        }
    }
    Ok(out)
}

/// `tr ρ = 1`: `Σ orbit_size(E) · v_{iixxE}` over diagonal `E`.
pub fn normalization_row(layout: &VariableLayout) -> Result<ComplexRow, ReductionError> {
    let dims = layout.dims();
    let mut coeffs = Vec::new();
    for i in 0..dims.d_a {
        for x in 0..dims.d_abar {
            let alpha = dims.outer_index(i, i, x, x);
            for (e, key) in layout.orbits().iter().enumerate() {
                if key.is_diagonal() {
                    let size = orbit_size(key).ok_or(OrbitError::Overflow)?;
                    coeffs.push((layout.var(alpha, e), size as f64));
                }
            }
        }
    }
    Ok(ComplexRow {
        kind: RowKind::Normalization,
        coeffs: merge_terms(coeffs),
        rhs: 1.0,
    })
}

/// `tr_Ā ρ = I_A/d_A ⊗ tr_{AĀ} ρ`, one row per `(i, j, E)`.
pub fn marginal_a_rows(layout: &VariableLayout) -> Vec<ComplexRow> {
    let dims = layout.dims();
    let inv = 1.0 / dims.d_a as f64;
    let mut rows = Vec::with_capacity(dims.d_a * dims.d_a * layout.num_orbits());
    for i in 0..dims.d_a {
        for j in 0..dims.d_a {
            for e in 0..layout.num_orbits() {
                let mut terms = Vec::new();
                for x in 0..dims.d_abar {
                    terms.push((layout.var(dims.outer_index(i, j, x, x), e), 1.0));
                    if i == j {
                        for k in 0..dims.d_a {
                            terms.push((layout.var(dims.outer_index(k, k, x, x), e), -inv));
                        }
                    }
                }
                rows.push(ComplexRow {
                    kind: RowKind::MarginalA,
                    coeffs: merge_terms(terms),
                    rhs: 0.0,
                });
            }
        }
    }
    rows
}

/// Coefficients of `R_B` acting on orbit positions: for every degree-`(n−1)`
/// key `E′` and `(p, q) ∈ [d_B]²`,
/// `Σ_{c̄} e_{E′+e((p,c̄),(q,c̄))} − δ_{pq}/d_B · Σ_c e_{E′+e(c,c)}`.
fn bn_orbit_rows(layout: &VariableLayout) -> Result<Vec<Vec<(usize, f64)>>, ReductionError> {
    let dims = layout.dims();
    if dims.n == 0 {
        return Err(ReductionError::ZeroLevel);
    }
    let d_h = dims.d_h();
    let inv = 1.0 / dims.d_b as f64;
    let lookup = |k: &OrbitKey| layout.orbit_index(k).expect("degree-n key is enumerated");
    let mut rows = Vec::new();
    for ep in enumerate_orbits(d_h, dims.n - 1) {
        for p in 0..dims.d_b {
            for q in 0..dims.d_b {
                let mut terms = Vec::new();
                for cb in 0..dims.d_bbar {
                    let key = ep.with_added(p * dims.d_bbar + cb, q * dims.d_bbar + cb);
                    terms.push((lookup(&key), 1.0));
                }
                if p == q {
                    for c in 0..d_h {
                        terms.push((lookup(&ep.with_added(c, c)), -inv));
                    }
                }
                rows.push(merge_terms(terms));
            }
        }
    }
    Ok(rows)
}

/// `tr_{B̄_n} ρ = tr_{(BB̄)_n} ρ ⊗ I_{B_n}/d_B`, one row per
/// `(i, j, x, y, E′, p, q)`.
pub fn marginal_bn_rows(layout: &VariableLayout) -> Result<Vec<ComplexRow>, ReductionError> {
    let base = bn_orbit_rows(layout)?;
    let mut rows = Vec::with_capacity(layout.dims().num_outer() * base.len());
    for alpha in 0..layout.dims().num_outer() {
        for r in &base {
            rows.push(ComplexRow {
                kind: RowKind::MarginalBn,
                coeffs: r.iter().map(|&(e, a)| (layout.var(alpha, e), a)).collect(),
                rhs: 0.0,
            });
        }
    }
    Ok(rows)
}

/// Block of partition `table.shape`; `None` when the shape has no
/// semistandard tableaux over the alphabet.
pub fn psd_block_map(layout: &VariableLayout, table: &PairingTable) -> Option<ReducedBlock> {
    let t = table.len();
    if t == 0 {
        return None;
    }
    let dims = layout.dims();
    let side = dims.d_a * dims.d_abar * t;
    // pairing polynomials with orbit positions resolved once
    let polys: Vec<Vec<(usize, f64)>> = (0..t * t)
        .map(|k| {
            table
                .polynomial(k / t, k % t)
                .coeffs
                .iter()
                .map(|(key, &c)| {
                    (
                        layout.orbit_index(key).expect("pairing keys have degree n"),
                        c as f64,
                    )
                })
                .collect()
        })
        .collect();
    let mut entries = Vec::with_capacity(side * (side + 1) / 2);
    for row in 0..side {
        let (ix, tau) = (row / t, row % t);
        let (i, x) = (ix / dims.d_abar, ix % dims.d_abar);
        for col in row..side {
            let (jy, gamma) = (col / t, col % t);
            let (j, y) = (jy / dims.d_abar, jy % dims.d_abar);
            let alpha = dims.outer_index(i, j, x, y);
            let terms: Vec<(usize, f64)> = polys[tau * t + gamma]
                .iter()
                .map(|&(e, c)| (layout.var(alpha, e), c))
                .collect();
            if !terms.is_empty() {
                entries.push(BlockForm { row, col, terms });
            }
        }
    }
    Some(ReducedBlock {
        partition: table.shape.clone(),
        num_tableaux: t,
        side,
        entries,
    })
}

/// Coefficients of the maximally mixed state: `1/(d_A·d_Ā·d_Hⁿ)` on every
/// `(i, i, x, x, E)` with `E` diagonal.
pub fn strictly_feasible_point(layout: &VariableLayout) -> Result<Vec<Complex64>, ReductionError> {
    let dims = layout.dims();
    let mut denom = (dims.d_a * dims.d_abar) as f64;
    for _ in 0..dims.n {
        denom *= dims.d_h() as f64;
    }
    let val = Complex64::new(1.0 / denom, 0.0);
    let mut v = vec![Complex64::new(0.0, 0.0); layout.len()];
    for i in 0..dims.d_a {
        for x in 0..dims.d_abar {
            let alpha = dims.outer_index(i, i, x, x);
            for (e, key) in layout.orbits().iter().enumerate() {
                if key.is_diagonal() {
                    v[layout.var(alpha, e)] = val;
                }
            }
        }
    }
    Ok(v)
}

/// Assembles the level-`n` program for message dimension `m`.
pub fn assemble(choi: &ChoiMatrix, m: usize, n: usize) -> Result<ReducedSdp, ReductionError> {
    if n == 0 {
        return Err(ReductionError::ZeroLevel);
    }
    if m == 0 {
        return Err(ReductionError::ZeroMessageDimension);
    }
    let report = choi.report()?;
    if !report.passes {
        return Err(ReductionError::NotCptp(report));
    }
    let dims = Dims::new(choi, m, n);
    let layout = VariableLayout::new(dims);
    if layout.len() > u32::MAX as usize {
        return Err(ReductionError::TooLarge(format!(
            "{} complex variables",
            layout.len()
        )));
    }
    let objective = objective_vector(choi, &layout)?;
    let mut rows = vec![normalization_row(&layout)?];
    let a_rows = marginal_a_rows(&layout);
    let bn_rows = marginal_bn_rows(&layout)?;
    let mut stats = AssemblyStats {
        num_orbits: layout.num_orbits(),
        num_complex_vars: layout.len(),
        normalization_rows: 1,
        marginal_a_rows: a_rows.len(),
        marginal_bn_rows: bn_rows.len(),
        blocks: Vec::new(),
    };
    rows.extend(a_rows);
    rows.extend(bn_rows);
    let mut blocks = Vec::new();
    for lambda in partitions(dims.d_h(), n) {
        let table = pairing_table(&lambda, dims.d_h())?;
        if let Some(b) = psd_block_map(&layout, &table) {
            stats.blocks.push((lambda, b.side));
            blocks.push(b);
        }
    }
    Ok(ReducedSdp {
        layout,
        objective,
        rows,
        blocks,
        stats,
        real_choi: choi.is_real(1e-14),
    })
}

/// Real parameters of one [`Field`]: `v_c = w[re[c]] + i·s_c·w[im[c]]` with
/// `s_c = +1` on canonical variables (`c ≤ adj(c)`) and `−1` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub field: Field,
    /// `(canonical complex variable, is imaginary part)` per parameter.
    pub params: Vec<(usize, bool)>,
    pub re: Vec<usize>,
    pub im: Vec<Option<(usize, f64)>>,
}

impl ParamLayout {
    pub fn new(layout: &VariableLayout, field: Field) -> Self {
        let n = layout.len();
        let mut params = Vec::new();
        let mut re = vec![usize::MAX; n];
        let mut im = vec![None; n];
        for c in 0..n {
            let a = layout.adjoint(c);
            if c > a {
                continue;
            }
            re[c] = params.len();
            re[a] = params.len();
            params.push((c, false));
            if field == Field::Complex && a != c {
                im[c] = Some((params.len(), 1.0));
                im[a] = Some((params.len(), -1.0));
                params.push((c, true));
            }
        }
        Self {
            field,
            params,
            re,
            im,
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Complex coefficients of a real parameter vector.
    pub fn complex(&self, w: &[f64]) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, im)| Complex64::new(w[r], im.map_or(0.0, |(k, s)| s * w[k])))
            .collect()
    }

    /// Real parameters of a Hermitian-paired complex assignment.
    pub fn real(&self, v: &[Complex64]) -> Vec<f64> {
        self.params
            .iter()
            .map(|&(c, imag)| if imag { v[c].im } else { v[c].re })
            .collect()
    }
}

impl ReducedSdp {
    pub fn dims(&self) -> &Dims {
        self.layout.dims()
    }

    /// [`Field::Real`] when the Choi matrix is real, else [`Field::Complex`].
    pub fn default_field(&self) -> Field {
        if self.real_choi {
            Field::Real
        } else {
            Field::Complex
        }
    }

    pub fn objective_value(&self, v: &[Complex64]) -> Complex64 {
        self.objective.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Largest absolute row violation.
    pub fn row_residual(&self, v: &[Complex64]) -> f64 {
        self.rows
            .iter()
            .map(|r| r.eval(v).norm())
            .fold(0.0, f64::max)
    }

    pub fn block_matrices(&self, v: &[Complex64]) -> Vec<ComplexMatrix> {
        self.blocks.iter().map(|b| b.evaluate(v)).collect()
    }

    pub fn strictly_feasible_point(&self) -> Vec<Complex64> {
        strictly_feasible_point(&self.layout).expect("layout was assembled")
    }

    pub fn to_operator(&self, v: &[Complex64]) -> InvariantOperator {
        let d = self.dims();
        let mut op = InvariantOperator::new(d.d_a, d.d_abar, d.d_h(), d.n);
        for (c, &val) in v.iter().enumerate() {
            if val != Complex64::new(0.0, 0.0) {
                op.add(self.layout.element(c), val);
            }
        }
        op
    }

    pub fn param_layout(&self, field: Field) -> ParamLayout {
        ParamLayout::new(&self.layout, field)
    }

    /// Real block SDP in the parameters of `field`, including a structured
    /// parametrization of the equality-feasible set around the maximally
    /// mixed point.
    pub fn to_block_sdp(&self, field: Field) -> Result<(BlockSdp, ParamLayout), ReductionError> {
        let mut p = self.to_block_sdp_unparametrized(field)?;
        let pl = self.param_layout(field);
        p.0.parametrization = Some(self.parametrization(&pl)?);
        Ok(p)
    }

    /// Like [`Self::to_block_sdp`] but leaves the equalities to the solver's
    /// generic elimination.
    pub fn to_block_sdp_unparametrized(
        &self,
        field: Field,
    ) -> Result<(BlockSdp, ParamLayout), ReductionError> {
        if field == Field::Real && !self.real_choi {
            return Err(ReductionError::ComplexChoi);
        }
        let pl = self.param_layout(field);
        let num_vars = pl.len();

        let mut objective = vec![0.0; num_vars];
        for (c, a) in self.objective.iter().enumerate() {
            objective[pl.re[c]] += a.re;
            if let Some((k, s)) = pl.im[c] {
                // Re(a · i·s·w) = −s·Im(a)·w
                objective[k] -= s * a.im;
            }
        }

        let mut eq_rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let re = merge_terms(row.coeffs.iter().map(|&(c, a)| (pl.re[c], a)).collect());
            if !re.is_empty() || row.rhs != 0.0 {
                eq_rows.push(SparseRow {
                    coeffs: re,
                    rhs: row.rhs,
                });
            }
            if field == Field::Complex {
                let im = merge_terms(
                    row.coeffs
                        .iter()
                        .filter_map(|&(c, a)| pl.im[c].map(|(k, s)| (k, s * a)))
                        .collect(),
                );
                if !im.is_empty() {
                    eq_rows.push(SparseRow {
                        coeffs: im,
                        rhs: 0.0,
                    });
                }
            }
        }

        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let s = b.side;
            let mut raw: Vec<(usize, usize, usize, f64)> = Vec::new();
            for f in &b.entries {
                for &(c, a) in &f.terms {
                    raw.push((f.row, f.col, pl.re[c], a));
                    if field == Field::Complex {
                        raw.push((f.row + s, f.col + s, pl.re[c], a));
                        if f.row != f.col {
                            if let Some((k, sign)) = pl.im[c] {
                                raw.push((f.row, f.col + s, k, -sign * a));
                                raw.push((f.col, f.row + s, k, sign * a));
                            }
                        }
                    }
                }
            }
            raw.sort_by_key(|e| (e.2, e.0, e.1));
            let mut entries: Vec<BlockEntry> = Vec::with_capacity(raw.len());
            for (row, col, var, coef) in raw {
                match entries.last_mut() {
                    Some(last) if last.var == var && last.row == row && last.col == col => {
                        last.coef += coef
                    }
                    _ => entries.push(BlockEntry {
                        var,
                        row,
                        col,
                        coef,
                    }),
                }
            }
            entries.retain(|e| e.coef != 0.0);
            blocks.push(BlockMap {
                side: if field == Field::Complex { 2 * s } else { s },
                constant: Vec::new(),
                entries,
            });
        }
        Ok((
            BlockSdp {
                num_vars,
                objective,
                objective_offset: 0.0,
                eq_rows,
                blocks,
                parametrization: None,
            },
            pl,
        ))
    }

    /// Strictly feasible start in the parameters of `pl`.
    pub fn start(&self, pl: &ParamLayout) -> Vec<f64> {
        pl.real(&self.strictly_feasible_point())
    }

    /// The homogeneous equalities split as `(Q_A ⊗ I)v = 0`, `(I ⊗ R_B)v = 0`
    /// plus normalization, so their kernel is `ker Q_A ⊗ ker R_B` cut by one
    /// hyperplane. Both kernels are split into `±1` eigenspaces of the
    /// adjoint involutions `σ_A(i,j,x,y) = (j,i,y,x)` and `σ_B(E) = Eᵀ`;
    /// symmetric products give Hermitian real parts, antisymmetric products
    /// imaginary parts.
    fn parametrization(&self, pl: &ParamLayout) -> Result<Parametrization, ReductionError> {
        let dims = self.dims();
        let na = dims.num_outer();
        let m = self.layout.num_orbits();

        // Q_A on outer indices
        let inv = 1.0 / dims.d_a as f64;
        let mut qa = Vec::new();
        for i in 0..dims.d_a {
            for j in 0..dims.d_a {
                let mut terms = Vec::new();
                for x in 0..dims.d_abar {
                    terms.push((dims.outer_index(i, j, x, x), 1.0));
                    if i == j {
                        for k in 0..dims.d_a {
                            terms.push((dims.outer_index(k, k, x, x), -inv));
                        }
                    }
                }
                qa.push(merge_terms(terms));
            }
        }
        let sigma_a: Vec<usize> = (0..na)
            .map(|alpha| {
                let (i, j, x, y) = dims.outer_parts(alpha);
                dims.outer_index(j, i, y, x)
            })
            .collect();
        let t_a: Vec<f64> = (0..na)
            .map(|alpha| {
                let (i, j, x, y) = dims.outer_parts(alpha);
                if i == j && x == y {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();

        let rb = bn_orbit_rows(&self.layout)?;
        let sigma_b: Vec<usize> = (0..m).map(|e| self.layout.transposed_orbit(e)).collect();
        let mut t_b = vec![0.0; m];
        for (e, key) in self.layout.orbits().iter().enumerate() {
            if key.is_diagonal() {
                t_b[e] = orbit_size(key).ok_or(OrbitError::Overflow)? as f64;
            }
        }

        let mut a_plus = symmetric_kernel(&qa, na, &sigma_a, 1.0);
        let a_minus = symmetric_kernel(&qa, na, &sigma_a, -1.0);
        let mut b_plus = symmetric_kernel(&rb, m, &sigma_b, 1.0);
        let b_minus = symmetric_kernel(&rb, m, &sigma_b, -1.0);
        // only the leading vector of each symmetric kernel keeps a nonzero trace
        isolate_trace(&mut a_plus, &t_a);
        isolate_trace(&mut b_plus, &t_b);

        let mut directions = Vec::new();
        let mut push = |a: &[(usize, f64)], b: &[(usize, f64)], imag: bool| {
            let mut dir = Vec::with_capacity(a.len() * b.len());
            for &(alpha, x) in a {
                for &(e, y) in b {
                    let c = self.layout.var(alpha, e);
                    if self.layout.adjoint(c) < c {
                        continue;
                    }
                    let k = if imag {
                        match pl.im[c] {
                            Some((k, _)) => k,
                            None => continue,
                        }
                    } else {
                        pl.re[c]
                    };
                    dir.push((k, x * y));
                }
            }
            let dir = merge_terms(dir);
            let norm = math::sqrt(dir.iter().map(|t| t.1 * t.1).sum());
            if norm > 0.0 {
                directions.push(
                    dir.into_iter()
                        .map(|(k, v)| (k, v / norm))
                        .collect::<Vec<_>>(),
                );
            }
        };
        for (ka, a) in a_plus.iter().enumerate() {
            for (kb, b) in b_plus.iter().enumerate() {
                if ka == 0 && kb == 0 {
                    continue;
                }
                push(a, b, false);
            }
        }
        for a in &a_minus {
            for b in &b_minus {
                push(a, b, false);
            }
        }
        if pl.field == Field::Complex {
            for a in &a_plus {
                for b in &b_minus {
                    push(a, b, true);
                }
            }
            for a in &a_minus {
                for b in &b_plus {
                    push(a, b, true);
                }
            }
        }
        Ok(Parametrization {
            origin: self.start(pl),
            directions,
        })
    }
}

/// Basis of `{v : R v = 0, v_{σ(k)} = sign · v_k}` for an involution `σ`,
/// computed in coordinates adapted to the symmetry.
fn symmetric_kernel(
    rows: &[Vec<(usize, f64)>],
    n: usize,
    sigma: &[usize],
    sign: f64,
) -> Vec<Vec<(usize, f64)>> {
    // class coordinate of every index, with the sign of its embedding
    let mut class: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut reps = Vec::new();
    for k in 0..n {
        let s = sigma[k];
        if s < k {
            continue;
        }
        if s == k {
            if sign > 0.0 {
                class[k] = Some((reps.len(), 1.0));
                reps.push(k);
            }
        } else {
            class[k] = Some((reps.len(), 1.0));
            class[s] = Some((reps.len(), sign));
            reps.push(k);
        }
    }
    let reduced: Vec<SparseRow> = rows
        .iter()
        .map(|r| SparseRow {
            coeffs: merge_terms(
                r.iter()
                    .filter_map(|&(k, a)| class[k].map(|(c, s)| (c, s * a)))
                    .collect(),
            ),
            rhs: 0.0,
        })
        .filter(|r| !r.coeffs.is_empty())
        .collect();
    let elim = eliminate(&reduced, reps.len(), 1e-11);
    elim.nullspace
        .into_iter()
        .map(|u| {
            let mut v = Vec::with_capacity(2 * u.len());
            for (c, a) in u {
                let k = reps[c];
                v.push((k, a));
                if sigma[k] != k {
                    v.push((sigma[k], sign * a));
                }
            }
            merge_terms(v)
        })
        .collect()
}

/// Reorders `basis` so that only its first vector has `t(v) ≠ 0`.
fn isolate_trace(basis: &mut [Vec<(usize, f64)>], t: &[f64]) {
    let tv = |v: &[(usize, f64)]| v.iter().map(|&(k, a)| t[k] * a).sum::<f64>();
    let Some(lead) = basis
        .iter()
        .enumerate()
        .filter(|(_, v)| tv(v).abs() > 1e-12)
        .min_by_key(|(_, v)| v.len())
        .map(|(k, _)| k)
    else {
        return;
    };
    basis.swap(0, lead);
    let t0 = tv(&basis[0]);
    let (head, rest) = basis.split_at_mut(1);
    for v in rest {
        let f = tv(v) / t0;
        if f != 0.0 {
            let mut w = core::mem::take(v);
            w.extend(head[0].iter().map(|&(k, a)| (k, -f * a)));
            *v = merge_terms(w);
            v.retain(|t| t.1.abs() > 1e-15);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::builtin_channel;
    use crate::sdpsolve::{solve_ipm, IpmOptions, SolveStatus};

    fn choi(name: &str, p: f64) -> ChoiMatrix {
        builtin_channel(name, p, 2).unwrap().choi().unwrap()
    }

    #[test]
    fn sizes_match_counts() {
        let c = choi("identity", 0.0);
        let r1 = assemble(&c, 2, 1).unwrap();
        assert_eq!(r1.stats.num_orbits, 16);
        assert_eq!(r1.stats.num_complex_vars, 256);
        assert_eq!(r1.stats.blocks.len(), 1);
        let r2 = assemble(&c, 2, 2).unwrap();
        assert_eq!(r2.stats.num_orbits, 136);
        assert_eq!(r2.stats.num_complex_vars, 2176);
        // d_A²d_Ā²·d_B²·C(n−1+d_H²−1, d_H²−1)
        assert_eq!(r2.stats.marginal_bn_rows, 16 * 4 * 16);
        assert_eq!(r2.stats.marginal_a_rows, 4 * 136);
    }

    #[test]
    fn level_three_block_sides() {
        let r = assemble(&choi("identity", 0.0), 2, 3).unwrap();
        assert_eq!(r.stats.num_orbits, 816);
        let sides: Vec<usize> = r.stats.blocks.iter().map(|b| b.1).collect();
        assert_eq!(sides, vec![80, 80, 16]);
    }

    #[test]
    fn zero_level_is_rejected() {
        assert_eq!(
            assemble(&choi("identity", 0.0), 2, 0).unwrap_err(),
            ReductionError::ZeroLevel
        );
    }

    #[test]
    fn non_cptp_input_is_rejected() {
        let mut c = choi("identity", 0.0);
        c.matrix = c.matrix.scale(Complex64::new(1.5, 0.0));
        assert!(matches!(
            assemble(&c, 2, 1),
            Err(ReductionError::NotCptp(_))
        ));
    }

    #[test]
    fn maximally_mixed_point_is_strictly_feasible() {
        for n in 1..=2 {
            let r = assemble(&choi("amplitude_damping", 0.3), 2, n).unwrap();
            let v = r.strictly_feasible_point();
            assert!(r.row_residual(&v) < 1e-15);
            let norm = r.rows[0].eval(&v) + 1.0;
            assert!((norm.re - 1.0).abs() < 1e-15);
            for b in r.block_matrices(&v) {
                assert!(linalg::min_eigenvalue(&b).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn objective_at_maximally_mixed_point() {
        // d_Ā·d_B · tr[(J⊗Φ)·I/(d_A d_Ā d_B d_B̄)] = d_Ā·d_B / (d_A d_Ā d_B d_B̄) = 1/M²
        for (name, p) in [
            ("identity", 0.0),
            ("depolarizing", 0.25),
            ("erasure_like_qubit", 0.4),
        ] {
            let r = assemble(&choi(name, p), 2, 2).unwrap();
            let val = r.objective_value(&r.strictly_feasible_point());
            assert!(
                (val.re - 0.25).abs() < 1e-14 && val.im.abs() < 1e-14,
                "{name}: {val}"
            );
        }
    }

    #[test]
    fn objective_vanishes_beyond_one_off_diagonal_pair() {
        let r = assemble(&choi("depolarizing", 0.1), 2, 2).unwrap();
        for (c, a) in r.objective.iter().enumerate() {
            if r.layout.element(c).key.off_diagonal_mass() >= 2 {
                assert_eq!(*a, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn adjoint_is_an_involution() {
        let r = assemble(&choi("identity", 0.0), 2, 2).unwrap();
        for c in 0..r.layout.len() {
            let a = r.layout.adjoint(c);
            assert_eq!(r.layout.adjoint(a), c);
            assert_eq!(r.layout.element(a), r.layout.element(c).adjoint());
        }
    }

    #[test]
    fn structured_parametrization_matches_elimination() {
        for field in [Field::Real, Field::Complex] {
            for n in 1..=2 {
                let r = assemble(&choi("dephasing", 0.5), 2, n).unwrap();
                let (hinted, pl) = r.to_block_sdp(field).unwrap();
                let (plain, _) = r.to_block_sdp_unparametrized(field).unwrap();
                let dims = hinted.parametrization.as_ref().unwrap().directions.len();
                let elim = eliminate(&plain.eq_rows, plain.num_vars, 1e-10);
                assert_eq!(dims, elim.nullspace.len(), "field {field:?}, n = {n}");
                assert!(hinted.eq_residual(&r.start(&pl)) < 1e-14);
            }
        }
    }

    #[test]
    fn level_one_identity_channel_reaches_one() {
        let r = assemble(&choi("identity", 0.0), 2, 1).unwrap();
        let (p, pl) = r.to_block_sdp(Field::Real).unwrap();
        let res = solve_ipm(&p, &IpmOptions::default(), &r.start(&pl)).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.value - 1.0).abs() < 1e-6, "{}", res.value);
    }

    #[test]
    fn real_and_complex_fields_agree() {
        let r = assemble(&choi("amplitude_damping", 0.3), 2, 1).unwrap();
        let (pr, plr) = r.to_block_sdp(Field::Real).unwrap();
        let (pc, plc) = r.to_block_sdp(Field::Complex).unwrap();
        let a = solve_ipm(&pr, &IpmOptions::default(), &r.start(&plr)).unwrap();
        let b = solve_ipm(&pc, &IpmOptions::default(), &r.start(&plc)).unwrap();
        assert!(
            (a.value - b.value).abs() < 1e-6,
            "{} vs {}",
            a.value,
            b.value
        );
        let v = plc.complex(&b.assignment);
        assert!(r.row_residual(&v) < 1e-8);
    }
}
