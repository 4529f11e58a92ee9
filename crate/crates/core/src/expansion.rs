//! Exact sparse Fourier expansions.
//!
//! A Siegel expansion is indexed by half-integral positive semidefinite `T`,
//! stored through its doubling `2T`. A Jacobi expansion of index `M` is indexed
//! by pairs `(T, R)` with `R` an integral `g x h` matrix; a term is admissible
//! when the block matrix `(2T, R; R^t, 2M)` is positive semidefinite.
//!
//! Expansions are truncated by `trace(T) <= bound` and complete there: a key
//! absent from the table has coefficient zero. Zero coefficients are never
//! stored.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::EvenLattice;
use crate::matrix::{self, IntMatrix};

pub mod json;

pub use json::{deserialize, serialize, AnyExpansion};

/// Fourier coefficient type; all arithmetic on it is checked.
pub type Coeff = i128;

pub(crate) fn add_coeff(a: Coeff, b: Coeff) -> Result<Coeff> {
    a.checked_add(b).ok_or(Error::Overflow)
}

pub(crate) fn mul_coeff(a: Coeff, b: Coeff) -> Result<Coeff> {
    a.checked_mul(b).ok_or(Error::Overflow)
}

/// A symmetric half-integral matrix `T`, stored exactly as `2T`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfIntegralMatrix {
    genus: usize,
    doubled: Vec<i64>,
}

impl HalfIntegralMatrix {
    /// From `2T`: must be symmetric with even diagonal.
    pub fn from_doubled(doubled: &IntMatrix) -> Result<Self> {
        if !doubled.is_symmetric() {
            return Err(Error::InvalidArgument("2T is not symmetric".into()));
        }
        if let Some(i) = (0..doubled.rows()).find(|&i| doubled.get(i, i) % 2 != 0) {
            return Err(Error::InvalidArgument(format!("2T has odd diagonal entry at {i}")));
        }
        Ok(Self {
            genus: doubled.rows(),
            doubled: doubled.data().to_vec(),
        })
    }

    pub fn from_doubled_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_doubled(&IntMatrix::from_rows(rows)?)
    }

    /// Builds from the lower triangle of `2T` listed row by row.
    pub(crate) fn from_lower(genus: usize, lower: impl IntoIterator<Item = i64>) -> Self {
        let mut doubled = vec![0; genus * genus];
        let mut it = lower.into_iter();
        for i in 0..genus {
            for j in 0..=i {
                let v = it.next().expect("lower triangle too short");
                doubled[i * genus + j] = v;
                doubled[j * genus + i] = v;
            }
        }
        Self { genus, doubled }
    }

    pub fn zero(genus: usize) -> Self {
        Self {
            genus,
            doubled: vec![0; genus * genus],
        }
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Entry `(2T)_{ij}`.
    #[inline]
    pub fn doubled_entry(&self, i: usize, j: usize) -> i64 {
        self.doubled[i * self.genus + j]
    }

    pub fn doubled(&self) -> IntMatrix {
        IntMatrix::new(self.genus, self.genus, self.doubled.clone()).expect("square")
    }

    pub(crate) fn doubled_slice(&self) -> &[i64] {
        &self.doubled
    }

    /// `trace(T)`, an integer because the diagonal of `2T` is even.
    pub fn trace(&self) -> i64 {
        (0..self.genus).map(|i| self.doubled_entry(i, i)).sum::<i64>() / 2
    }

    pub fn is_psd(&self) -> bool {
        matrix::is_psd_i64(self.genus, &self.doubled)
    }

    pub fn is_zero(&self) -> bool {
        self.doubled.iter().all(|&v| v == 0)
    }

    pub fn lower(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.genus).flat_map(move |i| (0..=i).map(move |j| self.doubled_entry(i, j)))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.genus != other.genus {
            return Err(Error::Shape("genus mismatch in T + T'".into()));
        }
        Ok(Self {
            genus: self.genus,
            doubled: self.doubled.iter().zip(&other.doubled).map(|(a, b)| a + b).collect(),
        })
    }

    /// `T` with its last row and column removed, if they vanish.
    pub fn drop_last(&self) -> Option<Self> {
        let g = self.genus;
        if g == 0 || (0..g).any(|j| self.doubled_entry(g - 1, j) != 0) {
            return None;
        }
        let h = g - 1;
        let mut doubled = Vec::with_capacity(h * h);
        for i in 0..h {
            doubled.extend_from_slice(&self.doubled[i * g..i * g + h]);
        }
        Some(Self { genus: h, doubled })
    }

    /// `diag(T, 0)` of genus one larger.
    pub fn pad_zero(&self) -> Self {
        self.embed(self.genus + 1, &(0..self.genus).collect::<Vec<_>>())
    }

    /// Places `T` on the rows and columns `positions` of a zero matrix of size `genus`.
    pub fn embed(&self, genus: usize, positions: &[usize]) -> Self {
        debug_assert_eq!(positions.len(), self.genus);
        let mut doubled = vec![0; genus * genus];
        for (a, &pa) in positions.iter().enumerate() {
            for (b, &pb) in positions.iter().enumerate() {
                doubled[pa * genus + pb] = self.doubled_entry(a, b);
            }
        }
        Self { genus, doubled }
    }

    /// `U^t T U` (used for basis-change checks).
    pub fn transform(&self, u: &IntMatrix) -> Result<Self> {
        let d = self.doubled();
        let t = u.transpose().mul(&d)?.mul(u)?;
        Self::from_doubled(&t)
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.doubled().to_rows()
    }
}

impl fmt::Debug for HalfIntegralMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2T={:?}", self.rows())
    }
}

/// Exact psd test of `T` through the principal structure of `2T`.
pub fn is_psd_half_integral(t: &HalfIntegralMatrix) -> bool {
    t.is_psd()
}

/// The index `M` of a Jacobi expansion, stored via `2M` (even, positive definite).
#[derive(Clone)]
pub struct JacobiIndex {
    name: Option<String>,
    doubled: IntMatrix,
    adj: IntMatrix,
    det: i64,
}

impl PartialEq for JacobiIndex {
    fn eq(&self, other: &Self) -> bool {
        self.doubled == other.doubled
    }
}

impl Eq for JacobiIndex {}

impl fmt::Debug for JacobiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JacobiIndex(2M={:?})", self.doubled)
    }
}

impl JacobiIndex {
    pub fn new(doubled: IntMatrix, name: Option<String>) -> Result<Self> {
        let lattice = EvenLattice::new(doubled, name)?;
        Self::from_lattice(&lattice)
    }

    pub fn from_lattice(lattice: &EvenLattice) -> Result<Self> {
        let (adj, det) = lattice.gram().adjugate()?;
        Ok(Self {
            name: lattice.name().map(str::to_string),
            doubled: lattice.gram().clone(),
            adj,
            det,
        })
    }

    /// `h`, the size of `M`.
    pub fn width(&self) -> usize {
        self.doubled.rows()
    }

    /// `2M`.
    pub fn doubled(&self) -> &IntMatrix {
        &self.doubled
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn lattice(&self) -> EvenLattice {
        EvenLattice::new(self.doubled.clone(), self.name.clone()).expect("validated on construction")
    }

    /// `det(2M)`; the adjugate satisfies `2M * adj = det * I`.
    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn is_unimodular(&self) -> bool {
        self.det == 1
    }

    /// `det(2M) * (2T - R (2M)^{-1} R^t)`, the scaled Schur complement of the
    /// block matrix `(2T, R; R^t, 2M)`. `None` on overflow.
    fn schur(&self, genus: usize, t2: &[i64], r: &[i64]) -> Option<Vec<i128>> {
        let h = self.width();
        let mut ra = vec![0i128; genus * h];
        for p in 0..genus {
            for j in 0..h {
                let mut s: i128 = 0;
                for k in 0..h {
                    s = s.checked_add((r[p * h + k] as i128).checked_mul(self.adj.get(k, j) as i128)?)?;
                }
                ra[p * h + j] = s;
            }
        }
        let mut out = vec![0i128; genus * genus];
        for p in 0..genus {
            for q in 0..genus {
                let mut s: i128 = 0;
                for j in 0..h {
                    s = s.checked_add(ra[p * h + j].checked_mul(r[q * h + j] as i128)?)?;
                }
                out[p * genus + q] = (self.det as i128)
                    .checked_mul(t2[p * genus + q] as i128)?
                    .checked_sub(s)?;
            }
        }
        Some(out)
    }

    pub(crate) fn block_psd_raw(&self, genus: usize, t2: &[i64], r: &[i64]) -> Result<bool> {
        let s = self.schur(genus, t2, r).ok_or(Error::Overflow)?;
        let s64: Option<Vec<i64>> = s.iter().map(|v| v.to_i64()).collect();
        let s64 = s64.ok_or(Error::Overflow)?;
        Ok(matrix::is_psd_i64(genus, &s64))
    }

    pub(crate) fn block_singular_raw(&self, genus: usize, t2: &[i64], r: &[i64]) -> Result<bool> {
        let s = self.schur(genus, t2, r).ok_or(Error::Overflow)?;
        Ok(matrix::det_i128(genus, &s).ok_or(Error::Overflow)? == 0)
    }
}

/// Key `(T, R)` of a Jacobi expansion: the lower triangle of `2T` followed by
/// `R` in row-major order, packed into one allocation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JacobiKey {
    genus: u8,
    width: u8,
    packed: Box<[i32]>,
}

impl JacobiKey {
    pub fn new(t: &HalfIntegralMatrix, r: &IntMatrix) -> Result<Self> {
        if r.rows() != t.genus() && !(t.genus() == 0 && r.rows() == 0) {
            return Err(Error::Shape(format!(
                "R has {} rows but T has genus {}",
                r.rows(),
                t.genus()
            )));
        }
        let genus = t.genus();
        let width = r.cols();
        let lower: Vec<i64> = t.lower().collect();
        Self::from_parts(genus, width, &lower, r.data())
    }

    pub(crate) fn from_parts(genus: usize, width: usize, lower: &[i64], r: &[i64]) -> Result<Self> {
        let g = u8::try_from(genus).map_err(|_| Error::Unsupported("genus above 255".into()))?;
        let w = u8::try_from(width).map_err(|_| Error::Unsupported("width above 255".into()))?;
        debug_assert_eq!(lower.len(), genus * (genus + 1) / 2);
        debug_assert_eq!(r.len(), genus * width);
        let packed: Option<Box<[i32]>> = lower.iter().chain(r).map(|&v| i32::try_from(v).ok()).collect();
        Ok(Self {
            genus: g,
            width: w,
            packed: packed.ok_or(Error::Overflow)?,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus as usize
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    fn tri_len(&self) -> usize {
        let g = self.genus();
        g * (g + 1) / 2
    }

    pub(crate) fn lower(&self) -> &[i32] {
        &self.packed[..self.tri_len()]
    }

    pub(crate) fn r_slice(&self) -> &[i32] {
        &self.packed[self.tri_len()..]
    }

    pub fn t(&self) -> HalfIntegralMatrix {
        HalfIntegralMatrix::from_lower(self.genus(), self.lower().iter().map(|&v| v as i64))
    }

    pub fn r(&self) -> IntMatrix {
        IntMatrix::new(
            self.genus(),
            self.width(),
            self.r_slice().iter().map(|&v| v as i64).collect(),
        )
        .expect("packed shape")
    }

    pub fn trace(&self) -> i64 {
        let mut s = 0i64;
        let mut idx = 0;
        for i in 0..self.genus() {
            idx += i;
            s += self.packed[idx] as i64;
            idx += 1;
        }
        s / 2
    }

    /// The key with the last row/column of `T` and last row of `R` removed, if they vanish.
    pub fn drop_last(&self) -> Option<Self> {
        let g = self.genus();
        if g == 0 {
            return None;
        }
        let tri = self.tri_len();
        let last_row_start = tri - g;
        if self.packed[last_row_start..tri].iter().any(|&v| v != 0) {
            return None;
        }
        let h = self.width();
        let r = self.r_slice();
        if r[(g - 1) * h..].iter().any(|&v| v != 0) {
            return None;
        }
        let mut packed = Vec::with_capacity(last_row_start + (g - 1) * h);
        packed.extend_from_slice(&self.packed[..last_row_start]);
        packed.extend_from_slice(&r[..(g - 1) * h]);
        Some(Self {
            genus: self.genus - 1,
            width: self.width,
            packed: packed.into_boxed_slice(),
        })
    }

    /// `(T + T', R)` for a Siegel index `T'` of the same genus.
    pub(crate) fn add_t(&self, t: &HalfIntegralMatrix) -> Result<Self> {
        let mut packed = self.packed.clone();
        for (slot, v) in packed.iter_mut().zip(t.lower()) {
            *slot = slot
                .checked_add(i32::try_from(v).map_err(|_| Error::Overflow)?)
                .ok_or(Error::Overflow)?;
        }
        Ok(Self {
            genus: self.genus,
            width: self.width,
            packed,
        })
    }

    pub(crate) fn doubled_t(&self) -> Vec<i64> {
        self.t().doubled_slice().to_vec()
    }

    pub(crate) fn r_i64(&self) -> Vec<i64> {
        self.r_slice().iter().map(|&v| v as i64).collect()
    }
}

impl fmt::Debug for JacobiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(2T={:?}, R={:?})", self.t().rows(), self.r())
    }
}

fn push_fixed(out: &mut String, v: i64) {
    use fmt::Write;
    let _ = write!(out, "{v:+011}");
}

/// Deterministic, injective byte encoding of an index: the lower triangle of `2T`
/// row by row, then `R` row-major, as fixed-width signed decimals.
pub fn canonical_key(t: &HalfIntegralMatrix, r: Option<&IntMatrix>) -> String {
    let mut out = format!("g{}", t.genus());
    for (n, v) in t.lower().enumerate() {
        out.push(if n == 0 { ':' } else { ',' });
        push_fixed(&mut out, v);
    }
    if let Some(r) = r {
        out.push_str(&format!("|h{}", r.cols()));
        for (n, &v) in r.data().iter().enumerate() {
            out.push(if n == 0 { ':' } else { ',' });
            push_fixed(&mut out, v);
        }
    }
    out
}

pub fn jacobi_canonical_key(k: &JacobiKey) -> String {
    canonical_key(&k.t(), Some(&k.r()))
}

/// The block psd condition on `(T, R)` for index `M`, tested on `(2T, R; R^t, 2M)`.
pub fn block_psd(t: &HalfIntegralMatrix, r: &IntMatrix, index: &JacobiIndex) -> Result<bool> {
    let g = t.genus();
    if (r.rows() != g || r.cols() != index.width()) && !(g == 0 && r.rows() == 0) {
        return Err(Error::Shape(format!(
            "R is {}x{}, expected {}x{}",
            r.rows(),
            r.cols(),
            g,
            index.width()
        )));
    }
    index.block_psd_raw(g, t.doubled_slice(), r.data())
}

/// Operations shared by both kinds of expansions.
pub trait Expansion: Sized + Clone + PartialEq {
    type Key: Ord + Clone + fmt::Debug;

    fn genus(&self) -> usize;
    fn weight(&self) -> i64;
    fn bound(&self) -> i64;
    fn terms(&self) -> &BTreeMap<Self::Key, Coeff>;
    fn key_trace(key: &Self::Key) -> i64;
    fn canonical(key: &Self::Key) -> String;
    /// Same genus, width, index, and weight.
    fn check_compatible(&self, other: &Self) -> Result<()>;
    /// A copy with new bound and terms; terms must already be admissible.
    fn rebuild(&self, bound: i64, terms: BTreeMap<Self::Key, Coeff>) -> Self;

    fn coeff(&self, key: &Self::Key) -> Coeff {
        self.terms().get(key).copied().unwrap_or(0)
    }

    fn is_zero(&self) -> bool {
        self.terms().is_empty()
    }

    fn len(&self) -> usize {
        self.terms().len()
    }

    fn is_empty(&self) -> bool {
        self.terms().is_empty()
    }

    /// Drops terms with `trace(T) > bound`; `bound` must not exceed the current bound.
    fn truncate(&self, bound: i64) -> Self {
        let bound = bound.min(self.bound());
        let terms = self
            .terms()
            .iter()
            .filter(|(k, _)| Self::key_trace(k) <= bound)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        self.rebuild(bound, terms)
    }

    /// Terms in canonical-key order.
    fn sorted_terms(&self) -> Vec<(String, &Self::Key, Coeff)> {
        let mut v: Vec<_> = self.terms().iter().map(|(k, &c)| (Self::canonical(k), k, c)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SiegelExpansion {
    genus: usize,
    weight: i64,
    bound: i64,
    terms: BTreeMap<HalfIntegralMatrix, Coeff>,
}

impl SiegelExpansion {
    /// Validating constructor: every key must be psd of the right genus with
    /// `trace(T) <= bound`; repeated keys are summed and zeros pruned.
    pub fn new(
        genus: usize,
        weight: i64,
        bound: i64,
        terms: impl IntoIterator<Item = (HalfIntegralMatrix, Coeff)>,
    ) -> Result<Self> {
        if bound < 0 {
            return Err(Error::InvalidArgument("negative trace bound".into()));
        }
        let mut map: BTreeMap<HalfIntegralMatrix, Coeff> = BTreeMap::new();
        for (t, c) in terms {
            if t.genus() != genus {
                return Err(Error::Shape(format!(
                    "index of genus {} in a genus-{genus} expansion",
                    t.genus()
                )));
            }
            if !t.is_psd() {
                return Err(Error::InvalidArgument(format!(
                    "index {t:?} is not positive semidefinite"
                )));
            }
            if t.trace() > bound {
                return Err(Error::InvalidArgument(format!(
                    "index {t:?} exceeds trace bound {bound}"
                )));
            }
            let slot = map.entry(t).or_insert(0);
            *slot = add_coeff(*slot, c)?;
        }
        map.retain(|_, c| *c != 0);
        Ok(Self {
            genus,
            weight,
            bound,
            terms: map,
        })
    }

    pub(crate) fn from_map(
        genus: usize,
        weight: i64,
        bound: i64,
        mut terms: BTreeMap<HalfIntegralMatrix, Coeff>,
    ) -> Self {
        terms.retain(|_, c| *c != 0);
        debug_assert!(terms.keys().all(|t| t.genus() == genus && t.trace() <= bound));
        Self {
            genus,
            weight,
            bound,
            terms,
        }
    }

    pub fn zero(genus: usize, weight: i64, bound: i64) -> Self {
        Self::from_map(genus, weight, bound, BTreeMap::new())
    }

    /// The constant expansion `1` (weight 0).
    pub fn one(genus: usize, bound: i64) -> Self {
        Self::from_map(genus, 0, bound, BTreeMap::from([(HalfIntegralMatrix::zero(genus), 1)]))
    }

    pub fn with_weight(mut self, weight: i64) -> Self {
        self.weight = weight;
        self
    }
}

impl Expansion for SiegelExpansion {
    type Key = HalfIntegralMatrix;

    fn genus(&self) -> usize {
        self.genus
    }
    fn weight(&self) -> i64 {
        self.weight
    }
    fn bound(&self) -> i64 {
        self.bound
    }
    fn terms(&self) -> &BTreeMap<HalfIntegralMatrix, Coeff> {
        &self.terms
    }
    fn key_trace(key: &HalfIntegralMatrix) -> i64 {
        key.trace()
    }
    fn canonical(key: &HalfIntegralMatrix) -> String {
        canonical_key(key, None)
    }
    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.genus != other.genus {
            return Err(Error::Shape(format!("genus {} vs {}", self.genus, other.genus)));
        }
        if self.weight != other.weight {
            return Err(Error::Shape(format!("weight {} vs {}", self.weight, other.weight)));
        }
        Ok(())
    }
    fn rebuild(&self, bound: i64, terms: BTreeMap<HalfIntegralMatrix, Coeff>) -> Self {
        Self::from_map(self.genus, self.weight, bound, terms)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct JacobiExpansion {
    genus: usize,
    index: JacobiIndex,
    weight: i64,
    bound: i64,
    terms: BTreeMap<JacobiKey, Coeff>,
}

impl JacobiExpansion {
    /// Validating constructor; see [`SiegelExpansion::new`]. Keys must also satisfy
    /// the block psd condition for `index`.
    pub fn new(
        genus: usize,
        index: JacobiIndex,
        weight: i64,
        bound: i64,
        terms: impl IntoIterator<Item = (JacobiKey, Coeff)>,
    ) -> Result<Self> {
        if bound < 0 {
            return Err(Error::InvalidArgument("negative trace bound".into()));
        }
        let h = index.width();
        let mut map: BTreeMap<JacobiKey, Coeff> = BTreeMap::new();
        for (k, c) in terms {
            if k.genus() != genus || (genus > 0 && k.width() != h) {
                return Err(Error::Shape(format!(
                    "key of genus {} width {} in a genus-{genus} width-{h} expansion",
                    k.genus(),
                    k.width()
                )));
            }
            let t = k.t();
            if t.trace() > bound {
                return Err(Error::InvalidArgument(format!(
                    "index {k:?} exceeds trace bound {bound}"
                )));
            }
            if !index.block_psd_raw(genus, t.doubled_slice(), &k.r_i64())? {
                return Err(Error::InvalidArgument(format!(
                    "index {k:?} violates the block psd condition"
                )));
            }
            let slot = map.entry(k).or_insert(0);
            *slot = add_coeff(*slot, c)?;
        }
        map.retain(|_, c| *c != 0);
        Ok(Self {
            genus,
            index,
            weight,
            bound,
            terms: map,
        })
    }

    pub(crate) fn from_map(
        genus: usize,
        index: JacobiIndex,
        weight: i64,
        bound: i64,
        mut terms: BTreeMap<JacobiKey, Coeff>,
    ) -> Self {
        terms.retain(|_, c| *c != 0);
        Self {
            genus,
            index,
            weight,
            bound,
            terms,
        }
    }

    pub fn zero(genus: usize, index: JacobiIndex, weight: i64, bound: i64) -> Self {
        Self::from_map(genus, index, weight, bound, BTreeMap::new())
    }

    pub fn index(&self) -> &JacobiIndex {
        &self.index
    }

    pub fn width(&self) -> usize {
        self.index.width()
    }

    /// Sum over `R` of the coefficients at each `T` (the expansion at `z = 0`).
    pub fn restrict_to_zero(&self) -> Result<SiegelExpansion> {
        let mut map: BTreeMap<HalfIntegralMatrix, Coeff> = BTreeMap::new();
        for (k, &c) in &self.terms {
            let slot = map.entry(k.t()).or_insert(0);
            *slot = add_coeff(*slot, c)?;
        }
        Ok(SiegelExpansion::from_map(self.genus, self.weight, self.bound, map))
    }
}

impl Expansion for JacobiExpansion {
    type Key = JacobiKey;

    fn genus(&self) -> usize {
        self.genus
    }
    fn weight(&self) -> i64 {
        self.weight
    }
    fn bound(&self) -> i64 {
        self.bound
    }
    fn terms(&self) -> &BTreeMap<JacobiKey, Coeff> {
        &self.terms
    }
    fn key_trace(key: &JacobiKey) -> i64 {
        key.trace()
    }
    fn canonical(key: &JacobiKey) -> String {
        jacobi_canonical_key(key)
    }
    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.genus != other.genus {
            return Err(Error::Shape(format!("genus {} vs {}", self.genus, other.genus)));
        }
        if self.index != other.index {
            return Err(Error::Shape("different Jacobi indices".into()));
        }
        if self.weight != other.weight {
            return Err(Error::Shape(format!("weight {} vs {}", self.weight, other.weight)));
        }
        Ok(())
    }
    fn rebuild(&self, bound: i64, terms: BTreeMap<JacobiKey, Coeff>) -> Self {
        Self::from_map(self.genus, self.index.clone(), self.weight, bound, terms)
    }
}

/// `sum_i c_i E_i`, truncated to the smallest bound among the operands.
pub fn linear_combine<E: Expansion>(parts: &[(Coeff, &E)]) -> Result<E> {
    let (_, first) = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
    for (_, e) in &parts[1..] {
        first.check_compatible(e)?;
    }
    let bound = parts.iter().map(|(_, e)| e.bound()).min().unwrap_or(0);
    let mut acc: BTreeMap<E::Key, Coeff> = BTreeMap::new();
    for (c, e) in parts {
        if *c == 0 {
            continue;
        }
        for (k, &v) in e.terms() {
            if E::key_trace(k) > bound {
                continue;
            }
            let slot = acc.entry(k.clone()).or_insert(0);
            *slot = add_coeff(*slot, mul_coeff(*c, v)?)?;
        }
    }
    acc.retain(|_, v| *v != 0);
    Ok(first.rebuild(bound, acc))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SingularWitness {
    #[serde(rename = "T2")]
    pub t2: Vec<Vec<i64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<i64>>,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SingularReport {
    pub all_singular: bool,
    pub witness: Option<SingularWitness>,
}

/// Whether every stored coefficient sits on an index whose block matrix
/// `(T, R/2; R^t/2, M)` has determinant zero. The witness is the first
/// offending index in canonical-key order.
pub fn singular_support_check(f: &JacobiExpansion) -> Result<SingularReport> {
    let g = f.genus();
    for (_, key, _) in f.sorted_terms() {
        if !f.index.block_singular_raw(g, &key.doubled_t(), &key.r_i64())? {
            return Ok(SingularReport {
                all_singular: false,
                witness: Some(SingularWitness {
                    t2: key.t().rows(),
                    r: key.r().to_rows(),
                    key: jacobi_canonical_key(key),
                }),
            });
        }
    }
    Ok(SingularReport {
        all_singular: true,
        witness: None,
    })
}
