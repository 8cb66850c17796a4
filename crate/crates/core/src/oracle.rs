//! Brute-force constructions that certify the reduced program at small sizes.
//!
//! Everything here works with explicit dense operators on the full space
//! `A ⊗ Ā ⊗ (B B̄)^{⊗n}` and is exponential in `n`; guards refuse instances
//! that would not fit.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::channels::{maximally_entangled, ChannelError, ChoiMatrix};
use crate::linalg::{self, ComplexMatrix, LinalgError, SystemShape};
use crate::math;
use crate::orbitbasis::{representative, InvariantOperator, OrbitKey};
use crate::reduction::Field;
use crate::sdpsolve::{
    solve_ipm, BlockEntry, BlockMap, BlockSdp, IpmOptions, SolveError, SparseRow,
};
use crate::symrep::Tableau;

/// Largest dense program side accepted by [`build_dense_program`].
pub const DENSE_PROGRAM_LIMIT: usize = 64;
/// Largest operator side accepted by [`dense_reconstruct`] and
/// [`brute_force_pairing`].
pub const DENSE_OPERATOR_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("refused: {0}")]
    Guard(String),
    #[error("not a permutation: {0:?}")]
    NotPermutation(Vec<usize>),
    #[error("seesaw round {round} failed: {source}")]
    Seesaw { round: usize, source: SolveError },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn checked_pow(d: usize, n: usize) -> Option<usize> {
    let mut s = 1usize;
    for _ in 0..n {
        s = s.checked_mul(d)?;
    }
    Some(s)
}

/// Index map of `U(π)`: basis index `a` goes to `map[a]`, where the factor in
/// position `k` moves to position `π(k)` (first factor most significant).
fn permutation_map(pi: &[usize], d: usize) -> Vec<usize> {
    let n = pi.len();
    let total = checked_pow(d, n).expect("guarded by caller");
    let mut digits = vec![0usize; n];
    let mut out = vec![0usize; total];
    for (a, slot) in out.iter_mut().enumerate() {
        let mut rest = a;
        for k in (0..n).rev() {
            digits[k] = rest % d;
            rest /= d;
        }
        let mut moved = vec![0usize; n];
        for k in 0..n {
            moved[pi[k]] = digits[k];
        }
        *slot = moved.iter().fold(0, |acc, &x| acc * d + x);
    }
    out
}

fn check_permutation(pi: &[usize]) -> Result<(), OracleError> {
    let mut seen = vec![false; pi.len()];
    for &p in pi {
        if p >= pi.len() || seen[p] {
            return Err(OracleError::NotPermutation(pi.to_vec()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// `U(π)` on `H^{⊗n}` (with `n = π.len()`), mapping
/// `h_1 ⊗ … ⊗ h_n ↦ h_{π⁻¹(1)} ⊗ … ⊗ h_{π⁻¹(n)}`; `π` is 0-based.
pub fn permutation_operator(pi: &[usize], d_h: usize) -> Result<ComplexMatrix, OracleError> {
    check_permutation(pi)?;
    let total = checked_pow(d_h, pi.len())
        .filter(|&t| t <= DENSE_OPERATOR_LIMIT)
        .ok_or_else(|| {
            OracleError::Guard(format!("{d_h}^{} exceeds {DENSE_OPERATOR_LIMIT}", pi.len()))
        })?;
    let mut u = ComplexMatrix::zeros(total, total);
    for (a, b) in permutation_map(pi, d_h).into_iter().enumerate() {
        u[(b, a)] = Complex64::new(1.0, 0.0);
    }
    Ok(u)
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            out.push(p.clone());
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Nonzero positions of `C_E`, found by applying every permutation of the
/// copies to the representative pair.
pub fn incidence_positions(key: &OrbitKey) -> BTreeSet<(usize, usize)> {
    let d = key.d();
    let (a, b) = representative(key);
    let mut out = BTreeSet::new();
    for pi in all_permutations(a.len()) {
        let mut r = 0;
        let mut c = 0;
        for &k in &pi {
            r = r * d + a[k];
            c = c * d + b[k];
        }
        out.insert((r, c));
    }
    out
}

/// Dense matrix of `Σ v · |i⟩⟨j| ⊗ |x⟩⟨y| ⊗ C_E`.
pub fn dense_reconstruct(op: &InvariantOperator) -> Result<ComplexMatrix, OracleError> {
    let tail = checked_pow(op.d_h, op.n);
    let side = tail
        .and_then(|t| t.checked_mul(op.d_a * op.d_abar))
        .filter(|&s| s <= DENSE_OPERATOR_LIMIT)
        .ok_or_else(|| OracleError::Guard(format!("dense side exceeds {DENSE_OPERATOR_LIMIT}")))?;
    let tail = tail.expect("checked above");
    let mut m = ComplexMatrix::zeros(side, side);
    let mut cache: Option<(OrbitKey, BTreeSet<(usize, usize)>)> = None;
    for (elem, &v) in &op.coeffs {
        if cache.as_ref().is_none_or(|(k, _)| k != &elem.key) {
            cache = Some((elem.key.clone(), incidence_positions(&elem.key)));
        }
        let positions = &cache.as_ref().expect("just filled").1;
        let r0 = (elem.i * op.d_abar + elem.x) * tail;
        let c0 = (elem.j * op.d_abar + elem.y) * tail;
        for &(r, c) in positions {
            m[(r0 + r, c0 + c)] += v;
        }
    }
    Ok(m)
}

/// `u_τ = Σ_{r ∈ R_λ} Σ_{c ∈ C_λ} sgn(c) ⊗_y e_{τ(r(c(y)))}` over the cells
/// `y` of the shape taken row by row; entries are integers.
pub fn explicit_tableau_vector(tau: &Tableau) -> Result<Vec<i128>, OracleError> {
    let shape = tau.shape();
    let n = shape.n();
    let d = tau.alphabet();
    let total = checked_pow(d, n)
        .filter(|&t| t <= DENSE_OPERATOR_LIMIT)
        .ok_or_else(|| OracleError::Guard(format!("{d}^{n} exceeds {DENSE_OPERATOR_LIMIT}")))?;
    let parts = shape.parts();
    let offsets = shape.row_offsets();
    let cell = |row: usize, col: usize| offsets[row] + col;
    let cols = shape.conjugate();

    // row stabilizer: products of permutations within each row
    let mut row_group: Vec<Vec<usize>> = vec![(0..n).collect()];
    for (row, &len) in parts.iter().enumerate() {
        let mut next = Vec::new();
        for g in &row_group {
            for p in all_permutations(len) {
                let mut h = g.clone();
                for (k, &pk) in p.iter().enumerate() {
                    h[cell(row, k)] = g[cell(row, pk)];
                }
                next.push(h);
            }
        }
        row_group = next;
    }
    // column stabilizer with signs
    let mut col_group: Vec<(Vec<usize>, i128)> = vec![((0..n).collect(), 1)];
    for (col, &height) in cols.iter().enumerate() {
        let mut next = Vec::new();
        for (g, s) in &col_group {
            for p in all_permutations(height) {
                let mut h = g.clone();
                for (k, &pk) in p.iter().enumerate() {
                    h[cell(k, col)] = g[cell(pk, col)];
                }
                next.push((h, s * permutation_sign(&p)));
            }
        }
        col_group = next;
    }
    let entries = tau.entries();
    let mut u = vec![0i128; total];
    for r in &row_group {
        for (c, sign) in &col_group {
            let idx = (0..n).fold(0usize, |acc, y| acc * d + entries[r[c[y]]]);
            u[idx] += sign;
        }
    }
    Ok(u)
}

fn permutation_sign(p: &[usize]) -> i128 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = p[k];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// `u_τᵀ C_E u_γ` from explicit vectors and the dense incidence matrix.
pub fn brute_force_pairing(
    tau: &Tableau,
    gamma: &Tableau,
    key: &OrbitKey,
) -> Result<i128, OracleError> {
    let ut = explicit_tableau_vector(tau)?;
    let ug = explicit_tableau_vector(gamma)?;
    if key.n() != tau.shape().n() || key.d() != tau.alphabet() {
        return Ok(0);
    }
    Ok(incidence_positions(key)
        .into_iter()
        .map(|(a, b)| ut[a] * ug[b])
        .sum())
}

/// Real parameters of a Hermitian matrix of side `s`: `(r, c, imaginary)`
/// with `r ≤ c` (imaginary parts only for `r < c` and only in the complex
/// field).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianParams {
    pub side: usize,
    pub field: Field,
    pub params: Vec<(usize, usize, bool)>,
}

impl HermitianParams {
    pub fn new(side: usize, field: Field) -> Self {
        let mut params = Vec::new();
        for r in 0..side {
            for c in r..side {
                params.push((r, c, false));
                if field == Field::Complex && r < c {
                    params.push((r, c, true));
                }
            }
        }
        Self {
            side,
            field,
            params,
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Hermitian matrix whose coordinate `k` is one.
    pub fn basis(&self, k: usize) -> ComplexMatrix {
        let (r, c, imag) = self.params[k];
        let mut m = ComplexMatrix::zeros(self.side, self.side);
        if imag {
            m[(r, c)] = Complex64::new(0.0, 1.0);
            m[(c, r)] = Complex64::new(0.0, -1.0);
        } else {
            m[(r, c)] = Complex64::new(1.0, 0.0);
            m[(c, r)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn to_matrix(&self, w: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.side, self.side);
        for (&(r, c, imag), &v) in self.params.iter().zip(w) {
            if imag {
                m[(r, c)].im += v;
                m[(c, r)].im -= v;
            } else {
                m[(r, c)].re += v;
                if r != c {
                    m[(c, r)].re += v;
                }
            }
        }
        m
    }

    pub fn from_matrix(&self, m: &ComplexMatrix) -> Vec<f64> {
        self.params
            .iter()
            .map(|&(r, c, imag)| if imag { m[(r, c)].im } else { m[(r, c)].re })
            .collect()
    }

    /// Rows `L(X) = target` for a real-linear map `L` into Hermitian
    /// matrices, obtained by applying `L` to every basis matrix.
    pub fn rows_for_map<F>(
        &self,
        map: F,
        target: &ComplexMatrix,
    ) -> Result<Vec<SparseRow>, OracleError>
    where
        F: Fn(&ComplexMatrix) -> Result<ComplexMatrix, OracleError>,
    {
        let s = target.rows();
        let mut re_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s * s];
        let mut im_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s * s];
        for k in 0..self.len() {
            let image = map(&self.basis(k))?;
            for r in 0..s {
                for c in r..s {
                    let v = image[(r, c)];
                    if v.re != 0.0 {
                        re_rows[r * s + c].push((k, v.re));
                    }
                    if r < c && v.im != 0.0 {
                        im_rows[r * s + c].push((k, v.im));
                    }
                }
            }
        }
        let mut rows = Vec::new();
        for r in 0..s {
            for c in r..s {
                let t = target[(r, c)];
                let re = core::mem::take(&mut re_rows[r * s + c]);
                if !re.is_empty() || t.re != 0.0 {
                    rows.push(SparseRow {
                        coeffs: re,
                        rhs: t.re,
                    });
                }
                let im = core::mem::take(&mut im_rows[r * s + c]);
                if r < c && (!im.is_empty() || t.im != 0.0) {
                    rows.push(SparseRow {
                        coeffs: im,
                        rhs: t.im,
                    });
                }
            }
        }
        Ok(rows)
    }

    /// The matrix itself as a PSD block (realified in the complex field).
    pub fn block(&self) -> BlockMap {
        let s = self.side;
        let mut entries = Vec::new();
        for (k, &(r, c, imag)) in self.params.iter().enumerate() {
            let e = |row, col, coef| BlockEntry {
                var: k,
                row,
                col,
                coef,
            };
            match (self.field, imag) {
                (Field::Real, _) => entries.push(e(r, c, 1.0)),
                (Field::Complex, false) => {
                    entries.push(e(r, c, 1.0));
                    entries.push(e(r + s, c + s, 1.0));
                }
                (Field::Complex, true) => {
                    entries.push(e(r, c + s, -1.0));
                    entries.push(e(c, r + s, 1.0));
                }
            }
        }
        BlockMap {
            side: if self.field == Field::Complex {
                2 * s
            } else {
                s
            },
            constant: Vec::new(),
            entries,
        }
    }

    /// Real-linear functional `X ↦ Re tr[G X]` in coordinates.
    pub fn functional(&self, g: &ComplexMatrix) -> Vec<f64> {
        self.params
            .iter()
            .map(|&(r, c, imag)| match (imag, r == c) {
                (false, true) => g[(r, r)].re,
                (false, false) => (g[(c, r)] + g[(r, c)]).re,
                // X = i|r⟩⟨c| − i|c⟩⟨r|: tr[G X] = i·G[c,r] − i·G[r,c]
                (true, _) => (Complex64::new(0.0, 1.0) * (g[(c, r)] - g[(r, c)])).re,
            })
            .collect()
    }
}

/// `J ⊗ Φ` on `A Ā B B̄`, from `J` on `Ā B` and `Φ` on `A B̄`.
fn fidelity_operator(choi: &ChoiMatrix, m: usize) -> Result<ComplexMatrix, OracleError> {
    let phi = maximally_entangled(m)?;
    let shape = SystemShape::new(vec![choi.d_a, choi.d_b, m, m])?;
    Ok(linalg::permute_systems(
        &linalg::kron(&choi.matrix, &phi),
        &shape,
        &[2, 0, 1, 3],
    )?)
}

/// Dense form of the level-`n` program over the full state.
#[derive(Debug, Clone)]
pub struct DenseProgram {
    pub sdp: BlockSdp,
    pub params: HermitianParams,
    /// Subsystem dimensions `(A, Ā, B₁, B̄₁, …, B_n, B̄_n)`.
    pub shape: SystemShape,
    /// Maximally mixed state in parameters.
    pub start: Vec<f64>,
}

impl DenseProgram {
    pub fn state(&self, w: &[f64]) -> ComplexMatrix {
        self.params.to_matrix(w)
    }
}

/// Builds the level-`n` program with one full-size PSD block: unit trace,
/// invariance under the generators of `S_n` (adjacent transposition and
/// full cycle), and both marginal conditions via explicit partial traces.
pub fn build_dense_program(
    choi: &ChoiMatrix,
    m: usize,
    n: usize,
    field: Field,
) -> Result<DenseProgram, OracleError> {
    if n == 0 {
        return Err(OracleError::Guard("level must be ≥ 1".into()));
    }
    let (d_a, d_abar, d_b, d_bbar) = (m, choi.d_a, choi.d_b, m);
    let d_h = d_b * d_bbar;
    let tail = checked_pow(d_h, n);
    let side = tail
        .and_then(|t| t.checked_mul(d_a * d_abar))
        .filter(|&s| s <= DENSE_PROGRAM_LIMIT)
        .ok_or_else(|| {
            OracleError::Guard(format!(
                "dense program side {}·{}·{d_h}^{n} exceeds {DENSE_PROGRAM_LIMIT}",
                d_a, d_abar
            ))
        })?;
    let tail = tail.expect("checked above");
    let mut dims = vec![d_a, d_abar];
    for _ in 0..n {
        dims.push(d_b);
        dims.push(d_bbar);
    }
    let shape = SystemShape::new(dims)?;
    let params = HermitianParams::new(side, field);
    let one = Complex64::new(1.0, 0.0);

    let mut eq_rows = Vec::new();
    // unit trace
    eq_rows.push(SparseRow {
        coeffs: params
            .functional(&ComplexMatrix::identity(side))
            .into_iter()
            .enumerate()
            .filter(|t| t.1 != 0.0)
            .collect(),
        rhs: 1.0,
    });

    // S_n invariance for the generators
    let mut generators: Vec<Vec<usize>> = Vec::new();
    if n >= 2 {
        let mut swap: Vec<usize> = (0..n).collect();
        swap.swap(0, 1);
        let cycle: Vec<usize> = (0..n).map(|k| (k + 1) % n).collect();
        generators.push(swap.clone());
        if cycle != swap {
            generators.push(cycle);
        }
    }
    for pi in &generators {
        let inner = permutation_map(pi, d_h);
        let full: Vec<usize> = (0..side)
            .map(|a| (a / tail) * tail + inner[a % tail])
            .collect();
        let rows = params.rows_for_map(
            |x| {
                let mut y = x.scale(Complex64::new(-1.0, 0.0));
                for r in 0..side {
                    for c in 0..side {
                        y[(full[r], full[c])] += x[(r, c)];
                    }
                }
                Ok(y)
            },
            &ComplexMatrix::zeros(side, side),
        )?;
        eq_rows.extend(rows);
    }

    // tr_Ā ρ = I_A/d_A ⊗ tr_{AĀ} ρ
    let rest = side / (d_a * d_abar);
    let ident_a = ComplexMatrix::identity(d_a).scale(one / d_a as f64);
    let marg_shape = SystemShape::new(vec![d_a, rest])?;
    let coarse = SystemShape::new(vec![d_a, d_abar, rest])?;
    eq_rows.extend(params.rows_for_map(
        |x| {
            let lhs = linalg::partial_trace(x, &coarse, &[1])?;
            let rhs = linalg::kron(&ident_a, &linalg::partial_trace(&lhs, &marg_shape, &[0])?);
            Ok(lhs.sub(&rhs)?)
        },
        &ComplexMatrix::zeros(d_a * rest, d_a * rest),
    )?);

    // tr_{B̄_n} ρ = tr_{B_n B̄_n} ρ ⊗ I_{B_n}/d_B
    let front = side / d_h;
    let last = SystemShape::new(vec![front, d_b, d_bbar])?;
    let ident_b = ComplexMatrix::identity(d_b).scale(one / d_b as f64);
    let split = SystemShape::new(vec![front, d_b])?;
    eq_rows.extend(params.rows_for_map(
        |x| {
            let lhs = linalg::partial_trace(x, &last, &[2])?;
            let rhs = linalg::kron(&linalg::partial_trace(&lhs, &split, &[1])?, &ident_b);
            Ok(lhs.sub(&rhs)?)
        },
        &ComplexMatrix::zeros(front * d_b, front * d_b),
    )?);

    // d_Ā d_B · tr[(J ⊗ Φ ⊗ I) ρ]
    let w = fidelity_operator(choi, m)?;
    let rest1 = side / w.rows();
    let g = linalg::kron(&w, &ComplexMatrix::identity(rest1)).scale(one * (d_abar * d_b) as f64);
    let objective = params.functional(&g);

    let start = params.from_matrix(&ComplexMatrix::identity(side).scale(one / side as f64));
    let sdp = BlockSdp {
        num_vars: params.len(),
        objective,
        objective_offset: 0.0,
        eq_rows,
        blocks: vec![params.block()],
        parametrization: None,
    };
    Ok(DenseProgram {
        sdp,
        params,
        shape,
        start,
    })
}

/// Standard normal sample (Box–Muller).
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
}

/// Normalized Choi matrix (on input ⊗ output) of a random channel: a random
/// isometry `d_in → d_out·k` split into `k` Kraus operators.
///
/// Refused when `d_in > d_out·k` (no such isometry exists) or `d_in = 0`.
pub fn random_channel_choi(
    d_in: usize,
    d_out: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ComplexMatrix, OracleError> {
    let rows = d_out * k;
    if d_in == 0 || d_in > rows {
        return Err(OracleError::Guard(format!(
            "no isometry from dimension {d_in} into {d_out}·{k}"
        )));
    }
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d_in);
    while cols.len() < d_in {
        let mut v: Vec<Complex64> = (0..rows)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        for q in &cols {
            let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in v.iter_mut().zip(q) {
                *x -= proj * a;
            }
        }
        let norm = math::sqrt(v.iter().map(|x| x.norm_sqr()).sum());
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut j = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for kk in 0..k {
        for i in 0..d_in {
            for b in 0..d_out {
                let kbi = cols[i][kk * d_out + b];
                for i2 in 0..d_in {
                    for b2 in 0..d_out {
                        j[(i * d_out + b, i2 * d_out + b2)] +=
                            kbi * cols[i2][kk * d_out + b2].conj() / d_in as f64;
                    }
                }
            }
        }
    }
    Ok(j)
}

/// Choi matrix of the decoder `B → B̄` that sends `|b⟩` to `|b mod M⟩`
/// (the identity when `d_B = M`).
fn relabel_decoder(d_b: usize, m: usize) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(d_b * m, d_b * m);
    let w = Complex64::new(1.0 / d_b as f64, 0.0);
    for b in 0..d_b {
        for b2 in 0..d_b {
            if b / m == b2 / m {
                j[(b * m + b % m, b2 * m + b2 % m)] = w;
            }
        }
    }
    j
}

/// `max Re tr[X·Y]` over `X ⪰ 0` on `S₁ ⊗ S₂` with `tr_{S₂} X = I/d₁`.
fn best_response(
    y: &ComplexMatrix,
    d1: usize,
    d2: usize,
) -> Result<(f64, ComplexMatrix), SolveError> {
    let side = d1 * d2;
    let field = if y.is_real(0.0) {
        Field::Real
    } else {
        Field::Complex
    };
    let params = HermitianParams::new(side, field);
    let shape = SystemShape::new(vec![d1, d2]).expect("positive dimensions");
    let target = ComplexMatrix::identity(d1).scale(Complex64::new(1.0 / d1 as f64, 0.0));
    let eq_rows = params
        .rows_for_map(|x| Ok(linalg::partial_trace(x, &shape, &[1])?), &target)
        .map_err(|e| SolveError::Malformed(format!("{e}")))?;
    let sdp = BlockSdp {
        num_vars: params.len(),
        objective: params.functional(y),
        objective_offset: 0.0,
        eq_rows,
        blocks: vec![params.block()],
        parametrization: None,
    };
    let start = params
        .from_matrix(&ComplexMatrix::identity(side).scale(Complex64::new(1.0 / side as f64, 0.0)));
    let opts = IpmOptions {
        gap_tol: 1e-10,
        feas_tol: 1e-10,
        max_iter: 200,
    };
    let res = solve_ipm(&sdp, &opts, &start)?;
    Ok((res.value, params.to_matrix(&res.assignment)))
}

/// Result of [`seesaw_lower_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct Seesaw {
    pub value: f64,
    /// Objective after each half-step (never decreasing).
    pub history: Vec<f64>,
    /// Encoder Choi matrix on `A ⊗ Ā`.
    pub encoder: ComplexMatrix,
    /// Decoder Choi matrix on `B ⊗ B̄`.
    pub decoder: ComplexMatrix,
}

/// Alternating maximization of `d_Ā d_B · tr[(J ⊗ Φ)(E_{AĀ} ⊗ D_{BB̄})]`
/// over encoders `E` (`E_A = I/d_A`) and decoders `D` (`D_B = I/d_B`).
/// Every iterate is a feasible encoder/decoder pair, so the value is a lower
/// bound on the channel fidelity.
///
/// The decoder starts from the relabeling decoder mixed with 5% of a random
/// channel drawn from `seed`.
pub fn seesaw_lower_bound(
    choi: &ChoiMatrix,
    m: usize,
    rounds: usize,
    seed: u64,
) -> Result<Seesaw, OracleError> {
    if rounds == 0 {
        return Err(OracleError::Guard("rounds must be ≥ 1".into()));
    }
    let (d_abar, d_b) = (choi.d_a, choi.d_b);
    let w = fidelity_operator(choi, m)?.scale(Complex64::new((d_abar * d_b) as f64, 0.0));
    let shape = SystemShape::new(vec![m * d_abar, d_b * m])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = Complex64::new(0.05, 0.0);
    let mut decoder = relabel_decoder(d_b, m)
        .scale(Complex64::new(1.0, 0.0) - mix)
        .add(&random_channel_choi(d_b, m, 2, &mut rng)?.scale(mix))?;
    let mut encoder =
        ComplexMatrix::identity(m * d_abar).scale(Complex64::new(1.0 / (m * d_abar) as f64, 0.0));
    let mut value = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(2 * rounds);
    for round in 0..rounds {
        // encoder step: X = tr_{BB̄}[(I ⊗ D) W]
        let x = linalg::partial_trace(
            &linalg::kron(&ComplexMatrix::identity(m * d_abar), &decoder).matmul(&w)?,
            &shape,
            &[1],
        )?;
        let (v, e) =
            best_response(&x, m, d_abar).map_err(|source| OracleError::Seesaw { round, source })?;
        if v > value {
            value = v;
            encoder = e;
        }
        history.push(value);
        // decoder step: Y = tr_{AĀ}[(E ⊗ I) W]
        let y = linalg::partial_trace(
            &linalg::kron(&encoder, &ComplexMatrix::identity(d_b * m)).matmul(&w)?,
            &shape,
            &[0],
        )?;
        let (v, d) =
            best_response(&y, d_b, m).map_err(|source| OracleError::Seesaw { round, source })?;
        if v > value {
            value = v;
            decoder = d;
        }
        history.push(value);
    }
    Ok(Seesaw {
        value,
        history,
        encoder,
        decoder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::builtin_channel;
    use crate::orbitbasis::{enumerate_orbits, orbit_members};
    use crate::symrep::{pairing_table, partitions, semistandard_tableaux, Partition};

    fn choi(name: &str, p: f64) -> ChoiMatrix {
        builtin_channel(name, p, 2).unwrap().choi().unwrap()
    }

    #[test]
    fn random_channel_needs_room_for_an_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            random_channel_choi(3, 1, 2, &mut rng),
            Err(OracleError::Guard(_))
        ));
        assert!(random_channel_choi(0, 2, 1, &mut rng).is_err());
        let j = random_channel_choi(2, 1, 2, &mut rng).unwrap();
        assert!((j.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn permutation_operator_examples() {
        assert_eq!(
            permutation_operator(&[0, 1, 2], 2).unwrap(),
            ComplexMatrix::identity(8)
        );
        let swap = permutation_operator(&[1, 0], 2).unwrap();
        let ones: Vec<(usize, usize)> = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|&(r, c)| swap[(r, c)].re == 1.0)
            .collect();
        assert_eq!(ones, vec![(0, 0), (1, 2), (2, 1), (3, 3)]);
        assert!(permutation_operator(&[0, 0], 2).is_err());
    }

    #[test]
    fn permutation_operator_is_a_homomorphism() {
        let perms = all_permutations(3);
        assert_eq!(perms.len(), 6);
        for p in &perms {
            for s in &perms {
                let ps: Vec<usize> = (0..3).map(|k| p[s[k]]).collect();
                let lhs = permutation_operator(&ps, 2).unwrap();
                let rhs = permutation_operator(p, 2)
                    .unwrap()
                    .matmul(&permutation_operator(s, 2).unwrap())
                    .unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn incidence_positions_match_orbit_members() {
        for key in enumerate_orbits(2, 3) {
            let a = incidence_positions(&key);
            let b: BTreeSet<(usize, usize)> = orbit_members(&key).into_iter().collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reconstruct_single_unit_and_invariance() {
        let mut op = InvariantOperator::new(1, 1, 2, 1);
        op.add(
            crate::orbitbasis::BasisElement {
                i: 0,
                j: 0,
                x: 0,
                y: 0,
                key: OrbitKey::unit(2, 0, 1),
            },
            Complex64::new(1.0, 0.0),
        );
        let m = dense_reconstruct(&op).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(m.frobenius_norm(), 1.0);

        let mut op = InvariantOperator::new(1, 1, 2, 3);
        for (k, key) in enumerate_orbits(2, 3).into_iter().enumerate() {
            op.add(
                crate::orbitbasis::BasisElement {
                    i: 0,
                    j: 0,
                    x: 0,
                    y: 0,
                    key,
                },
                Complex64::new(k as f64 + 1.0, -(k as f64)),
            );
        }
        let dense = dense_reconstruct(&op).unwrap();
        for p in all_permutations(3) {
            let u = permutation_operator(&p, 2).unwrap();
            assert_eq!(
                u.matmul(&dense).unwrap().matmul(&u.adjoint()).unwrap(),
                dense
            );
        }
    }

    #[test]
    fn antisymmetric_pairing_example() {
        let shape = Partition::new(vec![1, 1]).unwrap();
        let t = semistandard_tableaux(&shape, 2);
        assert_eq!(t.len(), 1);
        let u = explicit_tableau_vector(&t[0]).unwrap();
        assert_eq!(u, vec![0, 1, -1, 0]);
        let diag = OrbitKey::from_counts(2, vec![1, 0, 0, 1]);
        assert_eq!(brute_force_pairing(&t[0], &t[0], &diag).unwrap(), 2);
        assert_eq!(
            brute_force_pairing(&t[0], &t[0], &OrbitKey::from_counts(2, vec![1, 0, 0, 0])).unwrap(),
            0
        );
    }

    #[test]
    fn pairing_tables_match_explicit_vectors() {
        for (d, n) in [(2, 1), (2, 2), (2, 3), (3, 2), (4, 1)] {
            for shape in partitions(d, n) {
                let table = pairing_table(&shape, d).unwrap();
                for (ti, tau) in table.tableaux.iter().enumerate() {
                    for (gi, gamma) in table.tableaux.iter().enumerate() {
                        for key in enumerate_orbits(d, n) {
                            assert_eq!(
                                table.get(ti, gi, &key),
                                brute_force_pairing(tau, gamma, &key).unwrap(),
                                "{shape} {tau} {gamma} {key}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dense_program_guard_and_sizes() {
        let c = choi("identity", 0.0);
        let p = build_dense_program(&c, 2, 2, Field::Real).unwrap();
        assert_eq!(p.sdp.block_sides(), vec![64]);
        assert!(matches!(
            build_dense_program(&c, 2, 3, Field::Real),
            Err(OracleError::Guard(_))
        ));
        // n = 1: no symmetry rows, maximally mixed start is feasible
        let p1 = build_dense_program(&c, 2, 1, Field::Complex).unwrap();
        assert!(p1.sdp.eq_residual(&p1.start) < 1e-15);
        assert!(p.sdp.eq_residual(&p.start) < 1e-15);
    }

    #[test]
    fn dense_level_one_identity_channel() {
        let c = choi("identity", 0.0);
        let p = build_dense_program(&c, 2, 1, Field::Real).unwrap();
        let res = solve_ipm(&p.sdp, &IpmOptions::default(), &p.start).unwrap();
        assert!((res.value - 1.0).abs() < 1e-6, "{}", res.value);
    }

    #[test]
    fn seesaw_identity_channel_reaches_one() {
        let s = seesaw_lower_bound(&choi("identity", 0.0), 2, 3, 7).unwrap();
        assert!((s.value - 1.0).abs() < 1e-6, "{}", s.value);
        assert!(s.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn seesaw_is_monotone_for_several_seeds() {
        for seed in 0..3 {
            let s = seesaw_lower_bound(&choi("amplitude_damping", 0.3), 2, 4, seed).unwrap();
            assert!(s.history.windows(2).all(|w| w[1] >= w[0] - 1e-9));
            assert!(s.value <= 1.0 + 1e-9);
        }
    }
}
