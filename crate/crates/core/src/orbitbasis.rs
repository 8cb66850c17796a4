//! Orbit basis of the algebra of operators on `H^{⊗n}` that commute with
//! permutations of the `n` tensor factors.
//!
//! A pair of index sequences `(a, b) ∈ [d]^n × [d]^n` is mapped to its count
//! matrix `E[p][q] = #{k : a_k = p, b_k = q}`; two pairs lie in the same
//! permutation orbit exactly when their count matrices agree. The orbit's
//! 0/1 incidence matrix is denoted `C_E`.
//!
//! When `H = B ⊗ B̄`, the composite symbol of `(c_B, c_B̄)` is `c_B·d_B̄ + c_B̄`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::math;
use crate::symrep::distinct_permutations;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrbitError {
    #[error("operation needs at least one copy (n = 0)")]
    EmptyKey,
    #[error("symbol dimension {d_h} is not {d_b} x {d_bbar}")]
    FactorMismatch {
        d_h: usize,
        d_b: usize,
        d_bbar: usize,
    },
    #[error("integer overflow in exact combinatorial arithmetic")]
    Overflow,
}

/// Count matrix `E` (row-major `d × d`) identifying one orbit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitKey {
    d: usize,
    counts: Vec<u16>,
}

impl OrbitKey {
    /// # Panics
    /// If `counts.len() != d * d`.
    pub fn from_counts(d: usize, counts: Vec<u16>) -> Self {
        assert_eq!(counts.len(), d * d, "count matrix must be d x d");
        Self { d, counts }
    }

    /// The degree-0 key.
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            counts: vec![0; d * d],
        }
    }

    /// Single pair `e_{(p,q)}`.
    pub fn unit(d: usize, p: usize, q: usize) -> Self {
        let mut k = Self::empty(d);
        k.counts[p * d + q] = 1;
        k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    pub fn get(&self, p: usize, q: usize) -> u16 {
        self.counts[p * self.d + q]
    }

    /// Degree `Σ E_{p,q}`.
    pub fn n(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.d).all(|p| (0..self.d).all(|q| p == q || self.get(p, q) == 0))
    }

    /// Number of pairs with `a_k ≠ b_k`.
    pub fn off_diagonal_mass(&self) -> usize {
        self.n() - (0..self.d).map(|p| self.get(p, p) as usize).sum::<usize>()
    }

    pub fn with_added(&self, p: usize, q: usize) -> Self {
        let mut k = self.clone();
        k.counts[p * self.d + q] += 1;
        k
    }

    /// `E − e_{(p,q)}`, or `None` if that entry is zero.
    pub fn with_removed(&self, p: usize, q: usize) -> Option<Self> {
        let mut k = self.clone();
        let slot = &mut k.counts[p * self.d + q];
        *slot = slot.checked_sub(1)?;
        Some(k)
    }

    /// Transposed count matrix: the key of the adjoint orbit.
    pub fn transpose(&self) -> Self {
        let d = self.d;
        Self {
            d,
            counts: (0..d * d)
                .map(|k| self.counts[(k % d) * d + k / d])
                .collect(),
        }
    }
}

impl fmt::Display for OrbitKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for p in 0..self.d {
            if p > 0 {
                write!(f, ";")?;
            }
            for q in 0..self.d {
                if q > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(p, q))?;
            }
        }
        write!(f, "]")
    }
}

/// All count matrices of degree `n`, lexicographic in the row-major entries.
pub fn enumerate_orbits(d: usize, n: usize) -> Vec<OrbitKey> {
    fn rec(pos: usize, remaining: usize, cur: &mut Vec<u16>, d: usize, out: &mut Vec<OrbitKey>) {
        let len = cur.len();
        if pos + 1 == len {
            cur[pos] = remaining as u16;
            out.push(OrbitKey::from_counts(d, cur.clone()));
            cur[pos] = 0;
            return;
        }
        for v in 0..=remaining {
            cur[pos] = v as u16;
            rec(pos + 1, remaining - v, cur, d, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    rec(0, n, &mut vec![0; d * d], d, &mut out);
    out
}

/// `n! / Π E_{p,q}!`.
pub fn orbit_size(key: &OrbitKey) -> Option<i128> {
    math::multinomial(key.counts.iter().map(|&c| c as usize))
}

/// Count matrix of a pair of sequences.
pub fn orbit_of_pair(d: usize, a: &[usize], b: &[usize]) -> OrbitKey {
    let mut k = OrbitKey::empty(d);
    for (&p, &q) in a.iter().zip(b) {
        k.counts[p * d + q] += 1;
    }
    k
}

/// Canonical pair realizing `key`: pairs `(p, q)` listed in lexicographic
/// order, each repeated `E_{p,q}` times.
pub fn representative(key: &OrbitKey) -> (Vec<usize>, Vec<usize>) {
    let d = key.d;
    let (mut a, mut b) = (Vec::with_capacity(key.n()), Vec::with_capacity(key.n()));
    for (idx, &c) in key.counts.iter().enumerate() {
        for _ in 0..c {
            a.push(idx / d);
            b.push(idx % d);
        }
    }
    (a, b)
}

/// All `(a, b)` in the orbit, as flat basis indices with the first copy most
/// significant. These are the nonzero positions of `C_E`.
pub fn orbit_members(key: &OrbitKey) -> Vec<(usize, usize)> {
    let d = key.d;
    let (a, b) = representative(key);
    let symbols: Vec<usize> = a.iter().zip(&b).map(|(&p, &q)| p * d + q).collect();
    distinct_permutations(&symbols)
        .into_iter()
        .map(|seq| {
            seq.iter().fold((0usize, 0usize), |(r, c), &s| {
                (r * d + s / d, c * d + s % d)
            })
        })
        .collect()
}

/// Key of `C_E†`.
pub fn adjoint_key(key: &OrbitKey) -> OrbitKey {
    key.transpose()
}

/// `|i⟩⟨j| ⊗ |x⟩⟨y| ⊗ C_E` on `A ⊗ Ā ⊗ H^{⊗n}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisElement {
    pub i: usize,
    pub j: usize,
    pub x: usize,
    pub y: usize,
    pub key: OrbitKey,
}

impl BasisElement {
    pub fn adjoint(&self) -> Self {
        Self {
            i: self.j,
            j: self.i,
            x: self.y,
            y: self.x,
            key: self.key.transpose(),
        }
    }
}

/// Trace of a basis element: the orbit size when it is diagonal, else 0.
pub fn trace_coefficient(elem: &BasisElement) -> Option<i128> {
    if elem.i == elem.j && elem.x == elem.y && elem.key.is_diagonal() {
        orbit_size(&elem.key)
    } else {
        Some(0)
    }
}

/// `tr_{B̄_n} C_E = Σ C_{E − e(c,d)} ⊗ |c_B⟩⟨d_B|` over pairs `(c, d)` with
/// `E[c][d] ≥ 1` and equal `B̄` components. Returns `(E − e(c,d), c_B, d_B)`.
pub fn ptrace_last_outputbar(
    key: &OrbitKey,
    d_b: usize,
    d_bbar: usize,
) -> Result<Vec<(OrbitKey, usize, usize)>, OrbitError> {
    if key.d != d_b * d_bbar {
        return Err(OrbitError::FactorMismatch {
            d_h: key.d,
            d_b,
            d_bbar,
        });
    }
    if key.n() == 0 {
        return Err(OrbitError::EmptyKey);
    }
    let mut out = Vec::new();
    for c in 0..key.d {
        for dd in 0..key.d {
            if key.get(c, dd) >= 1 && c % d_bbar == dd % d_bbar {
                out.push((
                    key.with_removed(c, dd).expect("entry is positive"),
                    c / d_bbar,
                    dd / d_bbar,
                ));
            }
        }
    }
    Ok(out)
}

/// `tr_{(B B̄)_n} C_E = Σ_{c : E[c][c] ≥ 1} C_{E − e(c,c)}`.
pub fn ptrace_last_output_pair(key: &OrbitKey) -> Result<Vec<OrbitKey>, OrbitError> {
    if key.n() == 0 {
        return Err(OrbitError::EmptyKey);
    }
    Ok((0..key.d).filter_map(|c| key.with_removed(c, c)).collect())
}

/// `tr_{copies 2..n} C_E = Σ N(p, q) |p⟩⟨q|`, with
/// `N(p, q) = #{(a, b) ∈ O_E : a_1 = p, b_1 = q, a_k = b_k for k ≥ 2}`.
///
/// Only orbits with at most one off-diagonal pair contribute: a single
/// off-diagonal pair must sit in the first copy, while for diagonal orbits
/// every symbol `p` with `E[p][p] ≥ 1` can.
pub fn first_copy_reduction(key: &OrbitKey) -> Result<BTreeMap<(usize, usize), i128>, OrbitError> {
    let n = key.n();
    if n == 0 {
        return Err(OrbitError::EmptyKey);
    }
    let d = key.d;
    let mut out = BTreeMap::new();
    // sequences of the remaining n-1 copies, all diagonal
    let rest = |p: usize, q: usize| -> Result<i128, OrbitError> {
        let reduced = key.with_removed(p, q).expect("entry is positive");
        orbit_size(&reduced).ok_or(OrbitError::Overflow)
    };
    match key.off_diagonal_mass() {
        0 => {
            for p in 0..d {
                if key.get(p, p) >= 1 {
                    out.insert((p, p), rest(p, p)?);
                }
            }
        }
        1 => {
            let (p, q) = (0..d * d)
                .map(|k| (k / d, k % d))
                .find(|&(p, q)| p != q && key.get(p, q) == 1)
                .expect("one off-diagonal unit");
            out.insert((p, q), rest(p, q)?);
        }
        _ => {}
    }
    Ok(out)
}

/// Permutation-invariant operator `Σ v · |i⟩⟨j| ⊗ |x⟩⟨y| ⊗ C_E` on
/// `A ⊗ Ā ⊗ H^{⊗n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantOperator {
    pub d_a: usize,
    pub d_abar: usize,
    pub d_h: usize,
    pub n: usize,
    pub coeffs: BTreeMap<BasisElement, Complex64>,
}

impl InvariantOperator {
    pub fn new(d_a: usize, d_abar: usize, d_h: usize, n: usize) -> Self {
        Self {
            d_a,
            d_abar,
            d_h,
            n,
            coeffs: BTreeMap::new(),
        }
    }

    /// Adds `v` to the coefficient of `elem`.
    pub fn add(&mut self, elem: BasisElement, v: Complex64) {
        *self.coeffs.entry(elem).or_insert(Complex64::new(0.0, 0.0)) += v;
    }

    pub fn coefficient(&self, elem: &BasisElement) -> Complex64 {
        self.coeffs.get(elem).copied().unwrap_or_default()
    }

    /// Largest `|v(elem†) − conj(v(elem))|`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, v)| (self.coefficient(&e.adjoint()) - v.conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Trace of the operator.
    pub fn trace(&self) -> Option<Complex64> {
        let mut t = Complex64::new(0.0, 0.0);
        for (e, v) in &self.coeffs {
            t += v * trace_coefficient(e)? as f64;
        }
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace, ComplexMatrix, SystemShape};

    fn key(d: usize, counts: &[u16]) -> OrbitKey {
        OrbitKey::from_counts(d, counts.to_vec())
    }

    /// Dense `C_E` built by brute force over all index pairs.
    fn dense_orbit(key: &OrbitKey) -> ComplexMatrix {
        let d = key.d();
        let n = key.n();
        let side = d.pow(n as u32);
        let digits = |mut x: usize| {
            let mut v = vec![0; n];
            for k in (0..n).rev() {
                v[k] = x % d;
                x /= d;
            }
            v
        };
        ComplexMatrix::from_fn(side, side, |r, c| {
            let k = orbit_of_pair(d, &digits(r), &digits(c));
            Complex64::new(if &k == key { 1.0 } else { 0.0 }, 0.0)
        })
    }

    fn from_members(key: &OrbitKey) -> ComplexMatrix {
        let side = key.d().pow(key.n() as u32);
        let mut m = ComplexMatrix::zeros(side, side);
        for (r, c) in orbit_members(key) {
            m[(r, c)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_orbits(2, 2).len(), 10);
        assert_eq!(enumerate_orbits(1, 5), vec![key(1, &[5])]);
        let unit = enumerate_orbits(4, 1);
        assert_eq!(unit.len(), 16);
        // lexicographic order puts the unit at the last position first
        for (k, e) in unit.iter().enumerate() {
            let pos = 15 - k;
            assert_eq!(e, &OrbitKey::unit(4, pos / 4, pos % 4));
        }
    }

    #[test]
    fn enumeration_order_and_counts() {
        for d in 1..=4 {
            for n in 0..=4 {
                let keys = enumerate_orbits(d, n);
                assert!(keys.windows(2).all(|w| w[0].counts < w[1].counts));
                assert!(keys.iter().all(|k| k.n() == n));
                assert_eq!(
                    Some(keys.len() as i128),
                    math::binomial(n + d * d - 1, d * d - 1)
                );
            }
        }
        assert_eq!(enumerate_orbits(4, 2).len(), 136);
        assert_eq!(enumerate_orbits(4, 3).len(), 816);
    }

    #[test]
    fn orbit_sizes_partition_index_set() {
        assert_eq!(orbit_size(&key(2, &[2, 0, 0, 0])), Some(1));
        assert_eq!(orbit_size(&key(2, &[1, 0, 0, 1])), Some(2));
        assert_eq!(orbit_size(&key(2, &[1, 1, 1, 0])), Some(6));
        for d in 1..=4usize {
            for n in 0..=5usize {
                let total: i128 = enumerate_orbits(d, n)
                    .iter()
                    .map(|k| orbit_size(k).unwrap())
                    .sum();
                assert_eq!(total, (d * d).pow(n as u32) as i128);
            }
        }
    }

    #[test]
    fn representative_examples_and_round_trip() {
        assert_eq!(
            representative(&key(2, &[1, 0, 0, 1])),
            (vec![0, 1], vec![0, 1])
        );
        assert_eq!(representative(&OrbitKey::unit(2, 0, 1)), (vec![0], vec![1]));
        for n in 0..=4 {
            for k in enumerate_orbits(2, n) {
                let (a, b) = representative(&k);
                assert_eq!(orbit_of_pair(2, &a, &b), k);
            }
        }
    }

    #[test]
    fn adjoint_is_an_involution() {
        assert_eq!(
            adjoint_key(&OrbitKey::unit(2, 0, 1)),
            OrbitKey::unit(2, 1, 0)
        );
        for k in enumerate_orbits(3, 3) {
            if k.is_diagonal() {
                assert_eq!(adjoint_key(&k), k);
            }
            assert_eq!(adjoint_key(&adjoint_key(&k)), k);
            // dense check: C_{Eᵀ} = C_Eᵀ
            assert_eq!(from_members(&adjoint_key(&k)), from_members(&k).transpose());
        }
    }

    #[test]
    fn members_match_brute_force_incidence() {
        for n in 1..=3 {
            for k in enumerate_orbits(2, n) {
                let m = from_members(&k);
                assert_eq!(m, dense_orbit(&k));
                assert_eq!(orbit_members(&k).len() as i128, orbit_size(&k).unwrap());
            }
        }
    }

    #[test]
    fn trace_coefficients() {
        let e = |i, j, x, y, k: OrbitKey| BasisElement { i, j, x, y, key: k };
        assert_eq!(
            trace_coefficient(&e(0, 0, 1, 1, key(2, &[1, 0, 0, 1]))),
            Some(2)
        );
        assert_eq!(
            trace_coefficient(&e(0, 1, 1, 1, key(2, &[1, 0, 0, 1]))),
            Some(0)
        );
        assert_eq!(
            trace_coefficient(&e(0, 0, 0, 0, key(2, &[0, 1, 1, 0]))),
            Some(0)
        );
        for k in enumerate_orbits(2, 3) {
            let dense = dense_orbit(&k).trace().re as i128;
            assert_eq!(trace_coefficient(&e(1, 1, 0, 0, k)), Some(dense));
        }
    }

    /// Dense reconstruction of an expansion `Σ C_{E'} ⊗ |p⟩⟨q|` (last system `B`).
    fn dense_bar_expansion(
        terms: &[(OrbitKey, usize, usize)],
        d_h: usize,
        n: usize,
        d_b: usize,
    ) -> ComplexMatrix {
        let side = d_h.pow((n - 1) as u32) * d_b;
        let mut out = ComplexMatrix::zeros(side, side);
        for (k, p, q) in terms {
            let c = if n == 1 {
                ComplexMatrix::identity(1)
            } else {
                dense_orbit(k)
            };
            out = out
                .add(&crate::linalg::kron(&c, &ComplexMatrix::unit(d_b, *p, *q)))
                .unwrap();
        }
        out
    }

    fn bar_shape(d_b: usize, d_bbar: usize, n: usize) -> SystemShape {
        SystemShape::new((0..n).flat_map(|_| [d_b, d_bbar]).collect()).unwrap()
    }

    fn check_ptraces(d_b: usize, d_bbar: usize, n: usize) {
        let d_h = d_b * d_bbar;
        for k in enumerate_orbits(d_h, n) {
            let dense = dense_orbit(&k);
            let shape = bar_shape(d_b, d_bbar, n);
            // last B̄
            let got = partial_trace(&dense, &shape, &[2 * n - 1]).unwrap();
            let terms = ptrace_last_outputbar(&k, d_b, d_bbar).unwrap();
            assert_eq!(
                got,
                dense_bar_expansion(&terms, d_h, n, d_b),
                "outputbar {k}"
            );
            // last B B̄
            let got = partial_trace(&dense, &shape, &[2 * n - 2, 2 * n - 1]).unwrap();
            let side = d_h.pow((n - 1) as u32);
            let mut expect = ComplexMatrix::zeros(side, side);
            for r in ptrace_last_output_pair(&k).unwrap() {
                let c = if n == 1 {
                    ComplexMatrix::identity(1)
                } else {
                    dense_orbit(&r)
                };
                expect = expect.add(&c).unwrap();
            }
            assert_eq!(got, expect, "pair {k}");
            // copies 2..n
            let traced: Vec<usize> = (2..2 * n).collect();
            let got = partial_trace(&dense, &shape, &traced).unwrap();
            let mut expect = ComplexMatrix::zeros(d_h, d_h);
            for ((p, q), v) in first_copy_reduction(&k).unwrap() {
                expect[(p, q)] = Complex64::new(v as f64, 0.0);
            }
            assert_eq!(got, expect, "first copy {k}");
        }
    }

    #[test]
    fn partial_traces_match_dense() {
        check_ptraces(2, 2, 1);
        check_ptraces(2, 2, 2);
        check_ptraces(1, 2, 3);
        check_ptraces(2, 1, 3);
        check_ptraces(1, 2, 4);
    }

    #[test]
    fn ptrace_examples() {
        // symbols: (c_B, c_B̄) ↦ 2·c_B + c_B̄
        let k = OrbitKey::unit(4, 0, 2);
        assert_eq!(
            ptrace_last_outputbar(&k, 2, 2).unwrap(),
            vec![(OrbitKey::empty(4), 0, 1)]
        );
        let k = OrbitKey::unit(4, 0, 1);
        assert!(ptrace_last_outputbar(&k, 2, 2).unwrap().is_empty());
        let mut diag = OrbitKey::empty(4);
        diag = diag.with_added(0, 0).with_added(0, 0);
        assert_eq!(
            ptrace_last_output_pair(&diag).unwrap(),
            vec![OrbitKey::empty(4).with_added(0, 0)]
        );
        let off = OrbitKey::unit(4, 0, 1).with_added(1, 0);
        assert!(ptrace_last_output_pair(&off).unwrap().is_empty());
        assert_eq!(
            ptrace_last_output_pair(&OrbitKey::empty(4)),
            Err(OrbitError::EmptyKey)
        );
        assert!(matches!(
            ptrace_last_outputbar(&k, 3, 2),
            Err(OrbitError::FactorMismatch { .. })
        ));
    }

    #[test]
    fn first_copy_examples() {
        let n1 = first_copy_reduction(&OrbitKey::unit(2, 0, 1)).unwrap();
        assert_eq!(n1.into_iter().collect::<Vec<_>>(), vec![((0, 1), 1)]);
        let k = key(2, &[0, 1, 0, 1]);
        assert_eq!(
            first_copy_reduction(&k)
                .unwrap()
                .into_iter()
                .collect::<Vec<_>>(),
            vec![((0, 1), 1)]
        );
        let k = key(2, &[1, 0, 0, 1]);
        assert_eq!(
            first_copy_reduction(&k)
                .unwrap()
                .into_iter()
                .collect::<Vec<_>>(),
            vec![((0, 0), 1), ((1, 1), 1)]
        );
        assert_eq!(
            first_copy_reduction(&key(2, &[0, 1, 1, 0])).unwrap().len(),
            0
        );
    }

    #[test]
    fn first_copy_totals_bounded_by_orbit_size() {
        for n in 1..=4 {
            for k in enumerate_orbits(3, n) {
                let total: i128 = first_copy_reduction(&k).unwrap().values().sum();
                let size = orbit_size(&k).unwrap();
                assert!(total <= size);
                // every member of a diagonal orbit survives the trace, so
                // equality holds exactly for n = 1 and for diagonal keys
                assert_eq!(total == size, n == 1 || k.is_diagonal(), "{k}");
            }
        }
    }

    #[test]
    fn invariant_operator_hermiticity() {
        let mut op = InvariantOperator::new(2, 2, 2, 1);
        let e = BasisElement {
            i: 0,
            j: 1,
            x: 0,
            y: 1,
            key: OrbitKey::unit(2, 0, 1),
        };
        op.add(e.clone(), Complex64::new(1.0, 2.0));
        assert!(!op.is_hermitian(1e-12));
        op.add(e.adjoint(), Complex64::new(1.0, -2.0));
        assert!(op.is_hermitian(1e-12));
        assert_eq!(op.trace(), Some(Complex64::new(0.0, 0.0)));
    }
}
