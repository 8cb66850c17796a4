//! Partitions, semistandard tableaux and the integer Gram polynomials whose
//! coefficients are the pairings `u_τᵀ C_E u_γ` that block-diagonalize the
//! permutation-invariant algebra.
//!
//! Conventions:
//!
//! - tableau entries are 0-based symbols in `[0, d)`; cells are ordered by
//!   concatenating rows, top row first;
//! - `u_τ = Σ_{r ∈ R_λ} Σ_{c ∈ C_λ} sgn(c) ⊗_y e_{τ(r(c(y)))}`, i.e. the row
//!   group is summed *with multiplicity*. Summing over distinct row
//!   rearrangements instead only rescales every `u_τ` by a positive constant.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::math;
use crate::orbitbasis::OrbitKey;

/// Monomials `Π x_{a,b}^{E_{a,b}}` are keyed by their exponent matrix, which is
/// the same object as an orbit key.
pub type MonomialKey = OrbitKey;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymrepError {
    #[error("tableaux have different shapes or alphabets")]
    ShapeMismatch,
    #[error("integer overflow in exact combinatorial arithmetic")]
    Overflow,
    #[error("invalid partition: {0}")]
    InvalidPartition(&'static str),
}

/// Integer partition with non-increasing positive parts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self, SymrepError> {
        if parts.contains(&0) {
            return Err(SymrepError::InvalidPartition("parts must be positive"));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(SymrepError::InvalidPartition(
                "parts must be non-increasing",
            ));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn height(&self) -> usize {
        self.parts.len()
    }

    /// Column heights (the conjugate partition).
    pub fn conjugate(&self) -> Vec<usize> {
        let width = self.parts.first().copied().unwrap_or(0);
        (0..width)
            .map(|c| self.parts.iter().filter(|&&p| p > c).count())
            .collect()
    }

    /// Index of the first cell of every row in the row-concatenated order.
    pub fn row_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.parts.len());
        let mut acc = 0;
        for &p in &self.parts {
            offs.push(acc);
            acc += p;
        }
        offs
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Partitions of `n` with at most `d` parts, in reverse-lexicographic order.
pub fn partitions(d: usize, n: usize) -> Vec<Partition> {
    fn rec(
        remaining: usize,
        max_part: usize,
        slots: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Partition>,
    ) {
        if remaining == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        if slots == 0 {
            return;
        }
        for p in (1..=max_part.min(remaining)).rev() {
            cur.push(p);
            rec(remaining - p, p, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, d, &mut Vec::new(), &mut out);
    out
}

/// Filling of a Young diagram with symbols in `[0, d)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tableau {
    shape: Partition,
    d: usize,
    entries: Vec<usize>,
}

impl Tableau {
    /// Builds a tableau from row-concatenated entries; checks semistandardness.
    pub fn new(shape: Partition, d: usize, entries: Vec<usize>) -> Option<Self> {
        let t = Self { shape, d, entries };
        (t.entries.len() == t.shape.n() && t.entries.iter().all(|&e| e < d) && t.is_semistandard())
            .then_some(t)
    }

    pub fn shape(&self) -> &Partition {
        &self.shape
    }

    pub fn alphabet(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> usize {
        self.entries[self.shape.row_offsets()[row] + col]
    }

    fn is_semistandard(&self) -> bool {
        let offs = self.shape.row_offsets();
        for (r, &len) in self.shape.parts.iter().enumerate() {
            let row = &self.entries[offs[r]..offs[r] + len];
            if row.windows(2).any(|w| w[0] > w[1]) {
                return false;
            }
            if r > 0 {
                for (c, &v) in row.iter().enumerate() {
                    if self.entries[offs[r - 1] + c] >= v {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Size of the row-group stabilizer of the filling: `Π_rows Π_values (multiplicity)!`.
    pub fn row_stabilizer_order(&self) -> Option<i128> {
        let offs = self.shape.row_offsets();
        let mut acc = 1i128;
        for (r, &len) in self.shape.parts.iter().enumerate() {
            let row = &self.entries[offs[r]..offs[r] + len];
            let mut k = 0;
            while k < row.len() {
                let run = row[k..].iter().take_while(|&&v| v == row[k]).count();
                acc = acc.checked_mul(math::factorial(run)?)?;
                k += run;
            }
        }
        Some(acc)
    }

    /// All distinct fillings obtained by permuting entries within rows.
    pub fn row_rearrangements(&self) -> Vec<Vec<usize>> {
        let offs = self.shape.row_offsets();
        let mut out = vec![Vec::with_capacity(self.entries.len())];
        for (r, &len) in self.shape.parts.iter().enumerate() {
            let perms = distinct_permutations(&self.entries[offs[r]..offs[r] + len]);
            let mut next = Vec::with_capacity(out.len() * perms.len());
            for prefix in &out {
                for p in &perms {
                    let mut v = prefix.clone();
                    v.extend_from_slice(p);
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Display for Tableau {
    /// One-based entries, rows separated by `;`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        let offs = self.shape.row_offsets();
        for (r, &len) in self.shape.parts.iter().enumerate() {
            if r > 0 {
                write!(f, ";")?;
            }
            for c in 0..len {
                if c > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.entries[offs[r] + c] + 1)?;
            }
        }
        write!(f, "]")
    }
}

/// Distinct permutations of a sorted slice, in lexicographic order.
pub(crate) fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        // next lexicographic permutation
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..cur.len())
            .rev()
            .find(|&j| cur[j] > cur[i - 1])
            .expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Semistandard tableaux of shape `λ` over `[0, d)`, lexicographic in the
/// row-concatenated entries. Empty if `λ` has more than `d` rows.
pub fn semistandard_tableaux(shape: &Partition, d: usize) -> Vec<Tableau> {
    if shape.height() > d {
        return Vec::new();
    }
    let n = shape.n();
    let offs = shape.row_offsets();
    // (row, col) of every cell in fill order
    let cells: Vec<(usize, usize)> = shape
        .parts
        .iter()
        .enumerate()
        .flat_map(|(r, &len)| (0..len).map(move |c| (r, c)))
        .collect();
    let mut out = Vec::new();
    let mut entries = vec![0usize; n];
    fn rec(
        k: usize,
        cells: &[(usize, usize)],
        offs: &[usize],
        d: usize,
        entries: &mut Vec<usize>,
        shape: &Partition,
        out: &mut Vec<Tableau>,
    ) {
        if k == cells.len() {
            out.push(Tableau {
                shape: shape.clone(),
                d,
                entries: entries.clone(),
            });
            return;
        }
        let (r, c) = cells[k];
        let mut lo = if c > 0 { entries[k - 1] } else { 0 };
        if r > 0 {
            lo = lo.max(entries[offs[r - 1] + c] + 1);
        }
        // leave room for the strictly increasing cells below in this column
        let below = shape.parts[r + 1..].iter().filter(|&&p| p > c).count();
        for v in lo..d.saturating_sub(below) {
            entries[k] = v;
            rec(k + 1, cells, offs, d, entries, shape, out);
        }
    }
    rec(0, &cells, &offs, d, &mut entries, shape, &mut out);
    out
}

/// Sparse integer polynomial in the `d²` commuting variables `x_{a,b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GramPolynomial {
    pub d: usize,
    pub coeffs: BTreeMap<MonomialKey, i128>,
}

impl GramPolynomial {
    pub fn coefficient(&self, key: &MonomialKey) -> i128 {
        self.coeffs.get(key).copied().unwrap_or(0)
    }

    /// Evaluates the polynomial at an integer matrix `x` (row-major, `d × d`).
    pub fn evaluate(&self, x: &[i128]) -> Option<i128> {
        let mut total = 0i128;
        for (key, &c) in &self.coeffs {
            let mut term = c;
            for (idx, &e) in key.counts().iter().enumerate() {
                for _ in 0..e {
                    term = term.checked_mul(x[idx])?;
                }
            }
            total = total.checked_add(term)?;
        }
        Some(total)
    }
}

type Poly = BTreeMap<Vec<u16>, i128>;

fn poly_mul(a: &Poly, b: &Poly) -> Result<Poly, SymrepError> {
    let mut out = Poly::new();
    for (ka, &ca) in a {
        for (kb, &cb) in b {
            let key: Vec<u16> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            let prod = ca.checked_mul(cb).ok_or(SymrepError::Overflow)?;
            let slot = out.entry(key).or_insert(0);
            *slot = slot.checked_add(prod).ok_or(SymrepError::Overflow)?;
        }
    }
    out.retain(|_, c| *c != 0);
    Ok(out)
}

/// All permutations of `0..h` with their signs.
fn signed_permutations(h: usize) -> Vec<(Vec<usize>, i128)> {
    let mut out = Vec::new();
    fn rec(
        cur: &mut Vec<usize>,
        used: &mut Vec<bool>,
        inversions: usize,
        out: &mut Vec<(Vec<usize>, i128)>,
    ) {
        let h = used.len();
        if cur.len() == h {
            out.push((
                cur.clone(),
                if inversions.is_multiple_of(2) { 1 } else { -1 },
            ));
            return;
        }
        for v in 0..h {
            if !used[v] {
                // number of already placed values greater than v
                let inv = cur.iter().filter(|&&u| u > v).count();
                used[v] = true;
                cur.push(v);
                rec(cur, used, inversions + inv, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    rec(&mut Vec::new(), &mut vec![false; h], 0, &mut out);
    out
}

/// `h! · det(X[rows, cols])` expanded into monomials.
fn scaled_minor(
    rows: &[usize],
    cols: &[usize],
    d: usize,
    perms: &[(Vec<usize>, i128)],
) -> Result<Poly, SymrepError> {
    let h = rows.len();
    let hfact = math::factorial(h).ok_or(SymrepError::Overflow)?;
    let mut out = Poly::new();
    for (sigma, sign) in perms {
        let mut key = vec![0u16; d * d];
        for k in 0..h {
            key[rows[k] * d + cols[sigma[k]]] += 1;
        }
        *out.entry(key).or_insert(0) += sign * hfact;
    }
    out.retain(|_, c| *c != 0);
    Ok(out)
}

/// Column-wise product `Π_columns h!·det(X[τ' column, γ' column])` for two
/// fixed fillings of the same shape.
fn column_product(
    shape: &Partition,
    d: usize,
    tau: &[usize],
    gamma: &[usize],
    perms: &[Vec<(Vec<usize>, i128)>],
) -> Result<Poly, SymrepError> {
    let offs = shape.row_offsets();
    let mut acc: Poly = [(vec![0u16; d * d], 1i128)].into_iter().collect();
    for (c, &h) in shape.conjugate().iter().enumerate() {
        let rows: Vec<usize> = (0..h).map(|r| tau[offs[r] + c]).collect();
        let cols: Vec<usize> = (0..h).map(|r| gamma[offs[r] + c]).collect();
        let minor = scaled_minor(&rows, &cols, d, &perms[h])?;
        if minor.is_empty() {
            return Ok(Poly::new());
        }
        acc = poly_mul(&acc, &minor)?;
    }
    Ok(acc)
}

/// Gram polynomial
/// `G_{τ,γ}(X) = Σ_{r,r' ∈ R_λ} Σ_{c,c' ∈ C_λ} sgn(cc') Π_y x_{τ(r c(y)), γ(r' c'(y))}`.
///
/// The double column sum factorizes into scaled column minors; the row sums
/// run over distinct rearrangements weighted by the row-stabilizer orders.
/// The coefficient of `x^E` equals `u_τᵀ C_E u_γ`.
pub fn gram_polynomial(tau: &Tableau, gamma: &Tableau) -> Result<GramPolynomial, SymrepError> {
    if tau.shape != gamma.shape || tau.d != gamma.d {
        return Err(SymrepError::ShapeMismatch);
    }
    let d = tau.d;
    let perms: Vec<_> = (0..=tau.shape.height()).map(signed_permutations).collect();
    let weight = tau
        .row_stabilizer_order()
        .and_then(|a| gamma.row_stabilizer_order().and_then(|b| a.checked_mul(b)))
        .ok_or(SymrepError::Overflow)?;
    let mut total = Poly::new();
    let gammas = gamma.row_rearrangements();
    for t in tau.row_rearrangements() {
        for g in &gammas {
            for (k, c) in column_product(&tau.shape, d, &t, g, &perms)? {
                let slot = total.entry(k).or_insert(0);
                *slot = slot.checked_add(c).ok_or(SymrepError::Overflow)?;
            }
        }
    }
    let mut coeffs = BTreeMap::new();
    for (k, c) in total {
        if c != 0 {
            let c = c.checked_mul(weight).ok_or(SymrepError::Overflow)?;
            coeffs.insert(OrbitKey::from_counts(d, k), c);
        }
    }
    Ok(GramPolynomial { d, coeffs })
}

/// Pairings `u_τᵀ C_E u_γ` for all tableaux of one shape.
#[derive(Debug, Clone)]
pub struct PairingTable {
    pub shape: Partition,
    pub d: usize,
    pub tableaux: Vec<Tableau>,
    /// `(τ index, γ index)` ↦ Gram polynomial, row-major over `τ, γ`.
    polys: Vec<GramPolynomial>,
}

impl PairingTable {
    pub fn len(&self) -> usize {
        self.tableaux.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tableaux.is_empty()
    }

    pub fn get(&self, tau: usize, gamma: usize, key: &MonomialKey) -> i128 {
        self.polys[tau * self.tableaux.len() + gamma].coefficient(key)
    }

    pub fn polynomial(&self, tau: usize, gamma: usize) -> &GramPolynomial {
        &self.polys[tau * self.tableaux.len() + gamma]
    }

    /// Nonzero entries `(τ, γ, E, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &MonomialKey, i128)> + '_ {
        let t = self.tableaux.len();
        self.polys
            .iter()
            .enumerate()
            .flat_map(move |(idx, p)| p.coeffs.iter().map(move |(k, &c)| (idx / t, idx % t, k, c)))
    }

    /// Regroups the table by monomial: `E ↦ [(τ, γ, value)]`.
    pub fn by_key(&self) -> BTreeMap<MonomialKey, Vec<(usize, usize, i128)>> {
        let mut out: BTreeMap<MonomialKey, Vec<(usize, usize, i128)>> = BTreeMap::new();
        for (tau, gamma, key, c) in self.entries() {
            out.entry(key.clone()).or_default().push((tau, gamma, c));
        }
        out
    }
}

/// Pairing table of shape `λ` over an alphabet of size `d`.
pub fn pairing_table(shape: &Partition, d: usize) -> Result<PairingTable, SymrepError> {
    let tableaux = semistandard_tableaux(shape, d);
    let mut polys = Vec::with_capacity(tableaux.len() * tableaux.len());
    for (i, tau) in tableaux.iter().enumerate() {
        for (j, gamma) in tableaux.iter().enumerate() {
            if j < i {
                // G_{τ,γ}(X) = G_{γ,τ}(Xᵀ)
                let mirror: &GramPolynomial = &polys[j * tableaux.len() + i];
                let coeffs = mirror
                    .coeffs
                    .iter()
                    .map(|(k, &c)| (k.transpose(), c))
                    .collect();
                polys.push(GramPolynomial { d, coeffs });
            } else {
                polys.push(gram_polynomial(tau, gamma)?);
            }
        }
    }
    Ok(PairingTable {
        shape: shape.clone(),
        d,
        tableaux,
        polys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(p: &[usize]) -> Partition {
        Partition::new(p.to_vec()).unwrap()
    }

    fn key(d: usize, counts: &[u16]) -> OrbitKey {
        OrbitKey::from_counts(d, counts.to_vec())
    }

    /// Brute-force enumeration of partitions by filtering all compositions.
    fn partitions_brute(d: usize, n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![Vec::<usize>::new()];
        while let Some(cur) = stack.pop() {
            let s: usize = cur.iter().sum();
            if s == n {
                out.push(cur);
                continue;
            }
            if cur.len() == d {
                continue;
            }
            for p in 1..=n - s {
                let mut next = cur.clone();
                next.push(p);
                stack.push(next);
            }
        }
        out.retain(|p| p.windows(2).all(|w| w[0] >= w[1]));
        out.sort();
        out.dedup();
        out
    }

    /// Brute force over all fillings `[d]^n`, keeping semistandard ones.
    fn tableaux_brute(shape: &Partition, d: usize) -> usize {
        let n = shape.n();
        let mut count = 0;
        let total = d.pow(n as u32);
        for code in 0..total {
            let entries: Vec<usize> = (0..n).map(|k| (code / d.pow(k as u32)) % d).collect();
            if Tableau::new(shape.clone(), d, entries).is_some() {
                count += 1;
            }
        }
        count
    }

    /// Hook-content formula, computed with rationals as (num, den) products.
    fn hook_content(shape: &Partition, d: usize) -> i128 {
        let conj = shape.conjugate();
        let (mut num, mut den) = (1i128, 1i128);
        for (r, &len) in shape.parts().iter().enumerate() {
            for c in 0..len {
                num *= (d + c) as i128 - r as i128;
                den *= ((len - c - 1) + (conj[c] - r - 1) + 1) as i128;
            }
        }
        num / den
    }

    #[test]
    fn partition_examples() {
        let p: Vec<Vec<usize>> = partitions(2, 4).into_iter().map(|p| p.parts).collect();
        assert_eq!(p, vec![vec![4], vec![3, 1], vec![2, 2]]);
        assert!(p.len() <= 25);
        let p: Vec<Vec<usize>> = partitions(4, 3).into_iter().map(|p| p.parts).collect();
        assert_eq!(p, vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        for n in 0..6 {
            assert_eq!(partitions(1, n).len(), 1);
        }
        assert_eq!(partitions(3, 0), vec![Partition { parts: vec![] }]);
    }

    #[test]
    fn partitions_match_brute_force() {
        for d in 1..=4 {
            for n in 1..=7 {
                let ours = partitions(d, n);
                let mut listed: Vec<Vec<usize>> = ours.iter().map(|p| p.parts.clone()).collect();
                // reverse-lexicographic order
                assert!(listed.windows(2).all(|w| w[0] > w[1]));
                listed.sort();
                assert_eq!(listed, partitions_brute(d, n));
                assert!((ours.len() as u64) <= ((n + 1) as u64).pow(d as u32));
            }
        }
    }

    #[test]
    fn tableaux_examples() {
        let t = semistandard_tableaux(&part(&[2]), 2);
        let e: Vec<Vec<usize>> = t.iter().map(|t| t.entries.clone()).collect();
        assert_eq!(e, vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
        let t = semistandard_tableaux(&part(&[1, 1]), 2);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].entries, vec![0, 1]);
        assert_eq!(alloc::format!("{}", t[0]), "[1;2]");
        assert_eq!(semistandard_tableaux(&part(&[2, 1]), 3).len(), 8);
        assert!(semistandard_tableaux(&part(&[1, 1, 1]), 2).is_empty());
    }

    #[test]
    fn tableaux_counts_match_brute_force_and_hook_content() {
        for d in 1..=4 {
            for n in 1..=5 {
                for shape in partitions(d, n) {
                    let t = semistandard_tableaux(&shape, d);
                    let entries: Vec<&Vec<usize>> = t.iter().map(|x| &x.entries).collect();
                    assert!(
                        entries.windows(2).all(|w| w[0] < w[1]),
                        "not strictly lexicographic"
                    );
                    assert_eq!(t.len() as i128, hook_content(&shape, d));
                    if d.pow(n as u32) <= 1024 {
                        assert_eq!(t.len(), tableaux_brute(&shape, d));
                    }
                }
            }
        }
    }

    #[test]
    fn dimension_identity() {
        for d in 2..=4usize {
            for n in 0..=6usize {
                let sum: i128 = partitions(d, n)
                    .iter()
                    .map(|l| {
                        let t = hook_content(l, d);
                        t * t
                    })
                    .sum();
                assert_eq!(
                    Some(sum),
                    math::binomial(n + d * d - 1, d * d - 1),
                    "d={d} n={n}"
                );
            }
        }
    }

    /// Direct expansion of the defining quadruple sum over `R_λ × R_λ × C_λ × C_λ`.
    fn gram_direct(tau: &Tableau, gamma: &Tableau) -> BTreeMap<OrbitKey, i128> {
        let shape = &tau.shape;
        let n = shape.n();
        let d = tau.d;
        let offs = shape.row_offsets();
        let cell_of = |r: usize, c: usize| offs[r] + c;
        // group elements as permutations of cell indices
        let perms_of = |blocks: Vec<Vec<usize>>| -> Vec<(Vec<usize>, i128)> {
            let mut out = vec![((0..n).collect::<Vec<_>>(), 1i128)];
            for block in blocks {
                let local = signed_permutations(block.len());
                let mut next = Vec::new();
                for (p, s) in &out {
                    for (q, t) in &local {
                        let mut np = p.clone();
                        for (k, &cell) in block.iter().enumerate() {
                            np[cell] = block[q[k]];
                        }
                        next.push((np, s * t));
                    }
                }
                out = next;
            }
            out
        };
        let rows: Vec<Vec<usize>> = shape
            .parts
            .iter()
            .enumerate()
            .map(|(r, &len)| (0..len).map(|c| cell_of(r, c)).collect())
            .collect();
        let cols: Vec<Vec<usize>> = shape
            .conjugate()
            .iter()
            .enumerate()
            .map(|(c, &h)| (0..h).map(|r| cell_of(r, c)).collect())
            .collect();
        let rgroup = perms_of(rows);
        let cgroup = perms_of(cols);
        let mut out: BTreeMap<OrbitKey, i128> = BTreeMap::new();
        for (r1, _) in &rgroup {
            for (r2, _) in &rgroup {
                for (c1, s1) in &cgroup {
                    for (c2, s2) in &cgroup {
                        let mut counts = vec![0u16; d * d];
                        for y in 0..n {
                            let a = tau.entries[r1[c1[y]]];
                            let b = gamma.entries[r2[c2[y]]];
                            counts[a * d + b] += 1;
                        }
                        *out.entry(OrbitKey::from_counts(d, counts)).or_insert(0) += s1 * s2;
                    }
                }
            }
        }
        out.retain(|_, c| *c != 0);
        out
    }

    #[test]
    fn factorization_matches_direct_expansion() {
        for d in 1..=3 {
            for n in 1..=4 {
                for shape in partitions(d, n) {
                    let ts = semistandard_tableaux(&shape, d);
                    for tau in &ts {
                        for gamma in &ts {
                            let g = gram_polynomial(tau, gamma).unwrap();
                            assert_eq!(g.coeffs, gram_direct(tau, gamma), "{tau} {gamma}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gram_examples() {
        let t = semistandard_tableaux(&part(&[2]), 2);
        let g = gram_polynomial(&t[0], &t[0]).unwrap();
        assert_eq!(g.coeffs.len(), 1);
        assert_eq!(g.coefficient(&key(2, &[2, 0, 0, 0])), 4);

        let t = semistandard_tableaux(&part(&[1, 1]), 2);
        let g = gram_polynomial(&t[0], &t[0]).unwrap();
        assert_eq!(g.coeffs.len(), 2);
        assert_eq!(g.coefficient(&key(2, &[1, 0, 0, 1])), 2);
        assert_eq!(g.coefficient(&key(2, &[0, 1, 1, 0])), -2);

        let mixed = semistandard_tableaux(&part(&[2]), 3);
        assert_eq!(
            gram_polynomial(&t[0], &mixed[0]),
            Err(SymrepError::ShapeMismatch)
        );
    }

    #[test]
    fn distinct_rearrangement_convention_is_rejected() {
        // Summing τ' over distinct fillings only would give G = x₁₁² for
        // τ = γ = [1,1], i.e. coefficient 1 instead of the frozen value 4.
        let t = semistandard_tableaux(&part(&[2]), 2);
        let distinct_only =
            t[0].row_rearrangements().len() as i128 * t[0].row_rearrangements().len() as i128;
        assert_eq!(distinct_only, 1);
        let g = gram_polynomial(&t[0], &t[0]).unwrap();
        assert_ne!(g.coefficient(&key(2, &[2, 0, 0, 0])), distinct_only);
        assert_eq!(g.coefficient(&key(2, &[2, 0, 0, 0])), 4);
    }

    #[test]
    fn identity_substitution_gives_inner_product() {
        // With x_{ab} = δ_ab only diagonal monomials survive and G evaluates to
        // u_τᵀu_γ: positive on the diagonal, symmetric off it.
        for d in 2..=3 {
            for n in 1..=3 {
                for shape in partitions(d, n) {
                    let ts = semistandard_tableaux(&shape, d);
                    let eye: Vec<i128> = (0..d * d).map(|k| i128::from(k % (d + 1) == 0)).collect();
                    for tau in &ts {
                        let g = gram_polynomial(tau, tau).unwrap();
                        assert!(g.evaluate(&eye).unwrap() > 0, "u_τ must be nonzero");
                        for gamma in &ts {
                            let a = gram_polynomial(tau, gamma).unwrap().evaluate(&eye).unwrap();
                            let b = gram_polynomial(gamma, tau).unwrap().evaluate(&eye).unwrap();
                            assert_eq!(a, b);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn transpose_symmetry_of_table() {
        for (d, n) in [(2, 3), (3, 2), (3, 3)] {
            for shape in partitions(d, n) {
                let table = pairing_table(&shape, d).unwrap();
                for i in 0..table.len() {
                    for j in 0..table.len() {
                        let direct =
                            gram_polynomial(&table.tableaux[i], &table.tableaux[j]).unwrap();
                        assert_eq!(&direct, table.polynomial(i, j));
                        for (k, &c) in &direct.coeffs {
                            assert_eq!(table.get(j, i, &k.transpose()), c);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn table_degrees_and_examples() {
        let table = pairing_table(&part(&[1, 1]), 2).unwrap();
        assert_eq!(table.get(0, 0, &key(2, &[1, 0, 0, 1])), 2);
        let table = pairing_table(&part(&[2, 1]), 3).unwrap();
        for (_, _, k, _) in table.entries() {
            assert_eq!(k.n(), 3);
        }
        let by_key = table.by_key();
        let total: usize = by_key.values().map(|v| v.len()).sum();
        assert_eq!(total, table.entries().count());
    }
}
