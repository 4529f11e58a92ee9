//! Complex evaluation of expansions and of theta series as lattice sums.
//!
//! A term `a(T) e^{2 pi i tr(T tau)}` is evaluated with the phase reduced entrywise:
//! `2 pi tr(T Re tau) = pi sum_{pq} (2T)_{pq} Re tau_{pq}`, and replacing each
//! `Re tau_{pq}` by its fractional part changes this by an even multiple of `pi`
//! because `2T` has even diagonal and is symmetric.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::config::Limits;
use crate::enumerate::FinckePohst;
use crate::error::{Error, Result};
use crate::expansion::{
    canonical_key, jacobi_canonical_key, Coeff, Expansion, HalfIntegralMatrix, JacobiExpansion, JacobiIndex, JacobiKey,
    SiegelExpansion,
};
use crate::lattice::{theta_counts, EvenLattice};
use crate::matrix::IntMatrix;
use crate::theta::VecTable;

/// Tolerance on the leading minors of `Im tau` when constructing points.
pub const POINT_TOL: f64 = 1e-12;
/// Default tolerance for genus-1 identities at `Im tau >= 1`.
pub const DEFAULT_TOL: f64 = 1e-8;

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// A point `(tau, z)` of the Siegel-Jacobi space: `tau` symmetric `g x g` with
/// positive definite imaginary part, `z` complex `h x g`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelJacobiPoint {
    genus: usize,
    width: usize,
    tau: Vec<Complex64>,
    z: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDoc {
    tau_re: Vec<Vec<f64>>,
    tau_im: Vec<Vec<f64>>,
    #[serde(default)]
    z_re: Vec<Vec<f64>>,
    #[serde(default)]
    z_im: Vec<Vec<f64>>,
}

fn combine(re: &[Vec<f64>], im: &[Vec<f64>], what: &str) -> Result<(usize, usize, Vec<Complex64>)> {
    if re.len() != im.len() {
        return Err(Error::format(what, "real and imaginary parts differ in shape"));
    }
    let cols = re.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for (i, (a, b)) in re.iter().zip(im).enumerate() {
        if a.len() != cols || b.len() != cols {
            return Err(Error::format(format!("{what}[{i}]"), "ragged row"));
        }
        out.extend(a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)));
    }
    Ok((re.len(), cols, out))
}

impl SiegelJacobiPoint {
    /// `tau` as rows; `z` as `h` rows of length `g` (no rows for `h = 0`).
    pub fn new(tau: Vec<Vec<Complex64>>, z: Vec<Vec<Complex64>>) -> Result<Self> {
        let g = tau.len();
        if tau.iter().any(|r| r.len() != g) {
            return Err(Error::Shape("tau is not square".into()));
        }
        if z.iter().any(|r| r.len() != g) {
            return Err(Error::Shape(format!("z must have {g} columns")));
        }
        if !in_siegel_upper_half(&tau, POINT_TOL)? {
            return Err(Error::InvalidArgument("Im tau is not positive definite".into()));
        }
        Ok(Self {
            genus: g,
            width: z.len(),
            tau: tau.into_iter().flatten().collect(),
            z: z.into_iter().flatten().collect(),
        })
    }

    pub fn siegel(tau: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(tau, Vec::new())
    }

    pub fn genus1(tau: Complex64) -> Result<Self> {
        Self::siegel(vec![vec![tau]])
    }

    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        let g = entries.len();
        let tau = (0..g)
            .map(|i| {
                (0..g)
                    .map(|j| if i == j { entries[i] } else { Complex64::new(0.0, 0.0) })
                    .collect()
            })
            .collect();
        Self::siegel(tau)
    }

    /// The same `tau` with a new `z` (`h` rows of length `g`).
    pub fn with_z(&self, z: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(self.tau_rows(), z)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn tau(&self, i: usize, j: usize) -> Complex64 {
        self.tau[i * self.genus + j]
    }

    /// Entry `z_{jp}` (row `j < h`, column `p < g`).
    pub fn z(&self, j: usize, p: usize) -> Complex64 {
        self.z[j * self.genus + p]
    }

    pub fn tau_rows(&self) -> Vec<Vec<Complex64>> {
        self.tau
            .chunks(self.genus.max(1))
            .take(self.genus)
            .map(<[_]>::to_vec)
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PointDoc = serde_json::from_str(text)
            .map_err(|e| Error::format(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let (g, gc, tau) = combine(&doc.tau_re, &doc.tau_im, "tau")?;
        if g != gc && g != 0 {
            return Err(Error::format("tau", "not square"));
        }
        let (h, zc, z) = combine(&doc.z_re, &doc.z_im, "z")?;
        if h > 0 && zc != g {
            return Err(Error::format("z", format!("expected {g} columns")));
        }
        let rows = |v: &[Complex64], r: usize, c: usize| -> Vec<Vec<Complex64>> {
            (0..r).map(|i| v[i * c..(i + 1) * c].to_vec()).collect()
        };
        Self::new(rows(&tau, g, g), rows(&z, h, g)).map_err(|e| Error::format("point", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let part = |v: &[Complex64], r: usize, f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..r)
                .map(|i| v[i * self.genus..(i + 1) * self.genus].iter().map(f).collect())
                .collect()
        };
        let doc = PointDoc {
            tau_re: part(&self.tau, self.genus, |c| c.re),
            tau_im: part(&self.tau, self.genus, |c| c.im),
            z_re: part(&self.z, self.width, |c| c.re),
            z_im: part(&self.z, self.width, |c| c.im),
        };
        let mut s = serde_json::to_string(&doc).expect("point serializes");
        s.push('\n');
        s
    }
}

/// Determinant of a small real matrix by elimination with partial pivoting.
fn det_f64(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .expect("nonempty range");
        if a[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            a.swap(piv, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    det
}

/// Whether `tau` is symmetric with every leading principal minor of `Im tau` above `tol`.
pub fn in_siegel_upper_half(tau: &[Vec<Complex64>], tol: f64) -> Result<bool> {
    let g = tau.len();
    if tau.iter().any(|r| r.len() != g) {
        return Err(Error::Shape("tau is not square".into()));
    }
    for i in 0..g {
        for j in 0..i {
            if tau[i][j] != tau[j][i] {
                return Err(Error::InvalidArgument(format!("tau is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok((1..=g).all(|k| {
        let sub = (0..k).map(|i| (0..k).map(|j| tau[i][j].im).collect()).collect();
        det_f64(sub) > tol
    }))
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// `exp(2 pi i tr(T tau))` for `T` given by `2T`.
fn siegel_exponential(t2: &[i64], p: &SiegelJacobiPoint) -> (f64, f64) {
    let g = p.genus;
    let mut arg = 0.0;
    let mut logmag = 0.0;
    for i in 0..g {
        for j in 0..g {
            let d = t2[i * g + j];
            if d != 0 {
                let tau = p.tau(i, j);
                arg += d as f64 * frac(tau.re);
                logmag -= d as f64 * tau.im;
            }
        }
    }
    (PI * arg, PI * logmag)
}

/// `exp(2 pi i tr(R z))` for `R` of shape `g x h` and `z` of shape `h x g`.
fn jacobi_exponential(r: &[i64], h: usize, p: &SiegelJacobiPoint) -> (f64, f64) {
    let mut arg = 0.0;
    let mut logmag = 0.0;
    for q in 0..p.genus {
        for j in 0..h {
            let v = r[q * h + j];
            if v != 0 {
                let z = p.z(j, q);
                arg += v as f64 * frac(z.re);
                logmag -= v as f64 * z.im;
            }
        }
    }
    (TAU * arg, TAU * logmag)
}

fn term(c: Coeff, arg: f64, logmag: f64) -> Complex64 {
    Complex64::from_polar(c as f64 * logmag.exp(), arg)
}

/// Neumaier-compensated complex sum.
#[derive(Default)]
struct Acc {
    sum: Complex64,
    comp: Complex64,
}

impl Acc {
    fn add(&mut self, v: Complex64) {
        self.sum.re = two_sum(self.sum.re, v.re, &mut self.comp.re);
        self.sum.im = two_sum(self.sum.im, v.im, &mut self.comp.im);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn two_sum(a: f64, b: f64, comp: &mut f64) -> f64 {
    let s = a + b;
    *comp += if a.abs() >= b.abs() { (a - s) + b } else { (b - s) + a };
    s
}

/// A truncated sum and the size of its last retained terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: Complex64,
    /// Largest modulus among the terms of maximal trace: a crude indicator of the tail.
    pub tail: f64,
}

/// `sum_T a(T) e^{2 pi i tr(T tau)}` over the stored terms, in canonical-key order.
pub fn eval_siegel_expansion(e: &SiegelExpansion, p: &SiegelJacobiPoint) -> Result<Evaluation> {
    if e.genus() != p.genus {
        return Err(Error::Shape(format!(
            "expansion of genus {} at a genus-{} point",
            e.genus(),
            p.genus
        )));
    }
    let max_trace = e.terms().keys().map(|t| t.trace()).max();
    let mut value = Acc::default();
    let mut tail: f64 = 0.0;
    for (_, t, c) in e.sorted_terms() {
        let (arg, logmag) = siegel_exponential(t.doubled_slice(), p);
        let v = term(c, arg, logmag);
        value.add(v);
        if Some(t.trace()) == max_trace {
            tail = tail.max(v.norm());
        }
    }
    Ok(Evaluation {
        value: value.value(),
        tail,
    })
}

/// `sum_{(T,R)} c(T,R) e^{2 pi i tr(T tau)} e^{2 pi i tr(R z)}`, in canonical-key order.
pub fn eval_jacobi_expansion(f: &JacobiExpansion, p: &SiegelJacobiPoint) -> Result<Evaluation> {
    if f.genus() != p.genus {
        return Err(Error::Shape(format!(
            "expansion of genus {} at a genus-{} point",
            f.genus(),
            p.genus
        )));
    }
    let h = f.width();
    if p.genus > 0 && p.width != h {
        return Err(Error::Shape(format!(
            "expansion of width {h} at a point with z of {} rows",
            p.width
        )));
    }
    let max_trace = f.terms().keys().map(JacobiKey::trace).max();
    let mut value = Acc::default();
    let mut tail: f64 = 0.0;
    for (_, k, c) in f.sorted_terms() {
        let (a1, l1) = siegel_exponential(&k.doubled_t(), p);
        let (a2, l2) = jacobi_exponential(&k.r_i64(), h, p);
        let v = term(c, a1 + a2, l1 + l2);
        value.add(v);
        if Some(k.trace()) == max_trace {
            tail = tail.max(v.norm());
        }
    }
    Ok(Evaluation {
        value: value.value(),
        tail,
    })
}

fn genus1_sum(counts: &[u64], tau: Complex64) -> Complex64 {
    let mut v = Acc::default();
    for (n, &c) in counts.iter().enumerate() {
        if c > 0 {
            let d = (2 * n) as f64;
            v.add(Complex64::from_polar(
                c as f64 * (-PI * d * tau.im).exp(),
                PI * d * frac(tau.re),
            ));
        }
    }
    v.value()
}

/// Packs the lower triangle of a Gram matrix of genus at most 3 into 16-bit lanes.
fn pack_gram(lower: &[i64]) -> u128 {
    lower
        .iter()
        .fold(0u128, |acc, &v| (acc << 16) | (v as i16 as u16) as u128)
}

fn unpack_gram(g: usize, mut key: u128) -> HalfIntegralMatrix {
    let n = g * (g + 1) / 2;
    let mut lower = vec![0i64; n];
    for slot in lower.iter_mut().rev() {
        *slot = (key & 0xffff) as u16 as i16 as i64;
        key >>= 16;
    }
    HalfIntegralMatrix::from_lower(g, lower)
}

/// Counts of `g`-tuples of vectors with total norm at most `norm_bound`, by Gram matrix.
fn tuple_grams(l: &EvenLattice, g: usize, norm_bound: i64, limits: &Limits) -> Result<FxHashMap<u128, u64>> {
    let table = VecTable::signed(l, norm_bound / 2, limits)?;
    let mut hist: FxHashMap<u128, u64> = FxHashMap::default();
    let mut idx = vec![0usize; g];
    let mut lower = vec![0i64; g * (g + 1) / 2];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        t: &VecTable,
        g: usize,
        p: usize,
        remaining: i64,
        idx: &mut [usize],
        lower: &mut [i64],
        hist: &mut FxHashMap<u128, u64>,
    ) {
        let base = p * (p + 1) / 2;
        for j in 0..t.end(remaining) {
            idx[p] = j;
            for q in 0..p {
                lower[base + q] = t.ip(idx[q], j);
            }
            lower[base + p] = 2 * t.half(j);
            if p + 1 == g {
                *hist.entry(pack_gram(lower)).or_insert(0) += 1;
            } else {
                rec(t, g, p + 1, remaining - t.half(j), idx, lower, hist);
            }
        }
    }
    rec(&table, g, 0, norm_bound / 2, &mut idx, &mut lower, &mut hist);
    Ok(hist)
}

/// `sum over g-tuples (x_1..x_g) with sum Q(x_p, x_p) <= norm_bound of
/// exp(pi i sum_{pq} Q(x_p, x_q) tau_{pq})`, summed by Gram matrix in canonical-key order.
pub fn eval_theta_direct(
    l: &EvenLattice,
    g: usize,
    p: &SiegelJacobiPoint,
    norm_bound: i64,
    limits: &Limits,
) -> Result<Complex64> {
    if p.genus != g {
        return Err(Error::Shape(format!(
            "genus {g} requested at a genus-{} point",
            p.genus
        )));
    }
    if norm_bound < 0 {
        return Err(Error::InvalidArgument("negative norm bound".into()));
    }
    let norm_bound = norm_bound - norm_bound % 2;
    match g {
        0 => Ok(Complex64::new(1.0, 0.0)),
        1 => Ok(genus1_sum(&theta_counts(l, norm_bound, limits)?, p.tau(0, 0))),
        2 | 3 => {
            let hist = tuple_grams(l, g, norm_bound, limits)?;
            let mut terms: Vec<(String, HalfIntegralMatrix, u64)> = hist
                .into_iter()
                .map(|(k, c)| {
                    let t = unpack_gram(g, k);
                    (canonical_key(&t, None), t, c)
                })
                .collect();
            terms.sort_by(|a, b| a.0.cmp(&b.0));
            let mut v = Acc::default();
            for (_, t, c) in terms {
                let (arg, logmag) = siegel_exponential(t.doubled_slice(), p);
                v.add(term(c as Coeff, arg, logmag));
            }
            Ok(v.value())
        }
        _ => Err(Error::Unsupported(format!("direct theta sums of genus {g}"))),
    }
}

/// `sum over lambda in Z^{h x g} with sum_p lambda_p^t 2M lambda_p <= norm_bound of
/// exp(2 pi i tr(M (lambda tau lambda^t + 2 lambda z^t)))`, summed in canonical-key order.
pub fn eval_jacobi_theta_direct(
    index: &JacobiIndex,
    g: usize,
    p: &SiegelJacobiPoint,
    norm_bound: i64,
    limits: &Limits,
) -> Result<Complex64> {
    if p.genus != g {
        return Err(Error::Shape(format!(
            "genus {g} requested at a genus-{} point",
            p.genus
        )));
    }
    let h = index.width();
    if g > 0 && p.width != h {
        return Err(Error::Shape(format!(
            "index of width {h} at a point with z of {} rows",
            p.width
        )));
    }
    let lattice = index.lattice();
    let table = VecTable::signed(&lattice, norm_bound.max(0) / 2, limits)?;
    let mut terms: BTreeMap<String, Complex64> = BTreeMap::new();
    let mut idx = vec![0usize; g];
    fn rec(
        t: &VecTable,
        g: usize,
        pos: usize,
        remaining: i64,
        idx: &mut [usize],
        point: &SiegelJacobiPoint,
        h: usize,
        out: &mut BTreeMap<String, Complex64>,
    ) -> Result<()> {
        if pos == g {
            let mut t2 = vec![0i64; g * g];
            let mut r = vec![0i64; g * h];
            for a in 0..g {
                for b in 0..g {
                    t2[a * g + b] = t.ip(idx[a], idx[b]);
                }
                for j in 0..h {
                    r[a * h + j] = t.gv(idx[a])[j] as i64;
                }
            }
            let (a1, l1) = siegel_exponential(&t2, point);
            let (a2, l2) = jacobi_exponential(&r, h, point);
            let lower: Vec<i64> = (0..g)
                .flat_map(|a| (0..=a).map(move |b| (a, b)))
                .map(|(a, b)| t2[a * g + b])
                .collect();
            let key = JacobiKey::from_parts(g, h, &lower, &r)?;
            out.insert(jacobi_canonical_key(&key), term(1, a1 + a2, l1 + l2));
            return Ok(());
        }
        for j in 0..t.end(remaining) {
            idx[pos] = j;
            rec(t, g, pos + 1, remaining - t.half(j), idx, point, h, out)?;
        }
        Ok(())
    }
    rec(&table, g, 0, norm_bound.max(0) / 2, &mut idx, p, h, &mut terms)?;
    let mut v = Acc::default();
    terms.values().for_each(|&t| v.add(t));
    Ok(v.value())
}

fn sigma(k: u32, n: u64) -> f64 {
    (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .map(|d| (d as f64).powi(k as i32))
        .sum()
}

/// Outcome of the genus-1 inversion check `theta(-1/tau) = (tau/i)^{m/2} theta(tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionCheck {
    pub residual: f64,
    /// Largest half-norm `n` of the vectors summed.
    pub half_norm_bound: i64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// Estimated size of the omitted terms on the side with the smaller imaginary part.
    pub tail_estimate: f64,
}

const MAX_INVERSION_HALF_NORM: i64 = 64;

/// Checks the inversion law for an even unimodular lattice of rank `m = 2k`, using
/// direct lattice sums on both sides.
///
/// The summation bound is chosen from a model of the tail: the norm counts are
/// fitted as `r(n) <= C sigma_{k-1}(n)` over the computed range, and terms beyond
/// `N` are bounded by `C zeta(k-1) n^{k-1} e^{-2 pi y n}` with `y` the smaller of
/// `Im tau` and `Im(-1/tau)`. `N` grows until that estimate, scaled by the
/// automorphy factor, is below `tol / 10`.
pub fn check_inversion_genus1(l: &EvenLattice, tau: Complex64, tol: f64, limits: &Limits) -> Result<InversionCheck> {
    let m = l.rank();
    if m == 0 || !m.is_multiple_of(8) || !l.is_unimodular() {
        return Err(Error::InvalidArgument(format!(
            "{} is not even unimodular of rank divisible by 8",
            l.label()
        )));
    }
    if !(tau.im > 0.0) {
        return Err(Error::InvalidArgument("Im tau must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let k = (m / 2) as u32;
    let inv = -tau.inv();
    let y = tau.im.min(inv.im);
    let factor = (tau / Complex64::i()).powu(k);
    let scale = 1.0 + factor.norm();
    let zeta: f64 = (1..10_000).map(|n| (n as f64).powi(-((k - 1) as i32))).sum();
    let tail_from = |c: f64, n: i64| -> f64 {
        let mut s = 0.0;
        let mut j = n + 1;
        loop {
            let t = c * zeta * (j as f64).powi((k - 1) as i32) * (-TAU * y * j as f64).exp();
            s += t;
            if t < 1e-30 * s.max(1e-300) || j > n + 100_000 {
                break;
            }
            j += 1;
        }
        s
    };
    let fp = FinckePohst::new(l.gram())?;
    let mut n: i64 = 4;
    loop {
        let mut counts = fp.count_by_half_norm(2 * n, limits)?;
        for c in counts.iter_mut() {
            *c *= 2;
        }
        counts[0] = 1;
        let c_fit = (1..counts.len())
            .map(|j| counts[j] as f64 / sigma(k - 1, j as u64))
            .fold(0.0, f64::max);
        let needed = (1..=MAX_INVERSION_HALF_NORM).find(|&nn| scale * tail_from(c_fit, nn) <= tol / 10.0);
        let Some(needed) = needed else {
            return Err(Error::Unsupported(format!(
                "tolerance {tol} needs vectors beyond half-norm {MAX_INVERSION_HALF_NORM}"
            )));
        };
        if needed <= n {
            let lhs = genus1_sum(&counts, inv);
            let rhs = factor * genus1_sum(&counts, tau);
            return Ok(InversionCheck {
                residual: (lhs - rhs).norm(),
                half_norm_bound: n,
                lhs,
                rhs,
                tail_estimate: scale * tail_from(c_fit, n),
            });
        }
        n = needed;
    }
}

/// `|f(tau + S) - f(tau)|` for an integral symmetric `S`, with the phase change of
/// each term computed exactly as `(-1)^{sum_{pq} (2T)_{pq} S_{pq}}`.
pub fn check_translation(e: &SiegelExpansion, p: &SiegelJacobiPoint, shift: &IntMatrix) -> Result<f64> {
    let g = e.genus();
    if shift.rows() != g || shift.cols() != g || !shift.is_symmetric() {
        return Err(Error::Shape(format!(
            "shift must be a symmetric {g}x{g} integer matrix"
        )));
    }
    if p.genus != g {
        return Err(Error::Shape("genus mismatch".into()));
    }
    let mut diff = Acc::default();
    for (_, t, c) in e.sorted_terms() {
        let parity: i64 = t.doubled_slice().iter().zip(shift.data()).map(|(a, b)| a * b).sum();
        let change = if parity.rem_euclid(2) == 0 { 0.0 } else { -2.0 };
        let (arg, logmag) = siegel_exponential(t.doubled_slice(), p);
        diff.add(term(c, arg, logmag) * change);
    }
    Ok(diff.value().norm())
}
