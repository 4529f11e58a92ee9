//! Coefficient engines for theta series.
//!
//! * `siegel_theta`: the coefficient at `T` counts `g`-tuples of lattice vectors
//!   whose Gram matrix is `2T`.
//! * `jacobi_theta`: tuples `lambda` of vectors of the index lattice `2M`; each
//!   contributes `1` at `(T, R) = (lambda^t M lambda, lambda^t 2M)`.
//! * `theta_sc`: the same with `R = lambda^t S c` for a lattice `S` and an integral
//!   `c`, of index `M = c^t S c / 2`.
//!
//! Siegel coefficients are assembled from "cores": tuples without zero entries.
//! A core of length `k` is enumerated as a multiset of sign-reduced vectors and
//! weighted by the number of signed orderings. The resulting table is not yet
//! correct per key, only per orbit of the signed permutation group acting on
//! Gram matrices; each orbit total is then spread evenly over its members.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::config::Limits;
use crate::enumerate::{with_threads, Budget, FinckePohst, Meter};
use crate::error::{Error, Result};
use crate::expansion::{
    add_coeff, Coeff, HalfIntegralMatrix, JacobiExpansion, JacobiIndex, JacobiKey, SiegelExpansion,
};
use crate::lattice::{theta_counts, EvenLattice};
use crate::matrix::IntMatrix;

/// Longest core that is enumerated; larger ones need `min(g, N) > 6`.
pub const MAX_CORE: usize = 6;
/// Largest supported trace bound for Siegel series (Gram entries are packed in `i8`).
pub const MAX_SIEGEL_BOUND: i64 = 63;

const KEY_LEN: usize = MAX_CORE * (MAX_CORE + 1) / 2;
type GramKey = [i8; KEY_LEN];

#[inline]
fn tri(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

fn weight_tag(rank: usize, what: &str) -> Result<i64> {
    if !rank.is_multiple_of(2) {
        return Err(Error::Unsupported(format!(
            "{what} of odd rank {rank} has half-integral weight"
        )));
    }
    Ok(rank as i64 / 2)
}

fn check_bound(n: i64) -> Result<()> {
    if n < 0 {
        return Err(Error::InvalidArgument(format!("negative trace bound {n}")));
    }
    Ok(())
}

/// Lattice vectors sorted by norm, with `G v` cached.
pub(crate) struct VecTable {
    m: usize,
    coords: Vec<i32>,
    gv: Vec<i32>,
    half: Vec<u8>,
    /// `end_by_half[t]`: number of vectors with `norm / 2 <= t`.
    end_by_half: Vec<usize>,
}

impl VecTable {
    /// Sign-reduced vectors with `0 < norm <= 2 * max_half`.
    pub(crate) fn reduced(l: &EvenLattice, max_half: i64, limits: &Limits) -> Result<Self> {
        let mut vecs = if l.rank() == 0 {
            Vec::new()
        } else {
            FinckePohst::new(l.gram())?.vectors(2 * max_half, limits)?
        };
        vecs.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Self::build(l, vecs, max_half)
    }

    /// The zero vector followed by all nonzero vectors of norm `<= 2 * max_half`, both signs.
    pub(crate) fn signed(l: &EvenLattice, max_half: i64, limits: &Limits) -> Result<Self> {
        let reduced = if l.rank() == 0 || max_half == 0 {
            Vec::new()
        } else {
            FinckePohst::new(l.gram())?.vectors(2 * max_half, limits)?
        };
        let mut vecs = Vec::with_capacity(2 * reduced.len() + 1);
        vecs.push((vec![0; l.rank()], 0));
        for (v, n) in reduced {
            vecs.push((v.iter().map(|x| -x).collect(), n));
            vecs.push((v, n));
        }
        vecs.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Self::build(l, vecs, max_half)
    }

    fn build(l: &EvenLattice, vecs: Vec<(Vec<i64>, i64)>, max_half: i64) -> Result<Self> {
        let m = l.rank();
        let mut coords = Vec::with_capacity(vecs.len() * m);
        let mut gv = Vec::with_capacity(vecs.len() * m);
        let mut half = Vec::with_capacity(vecs.len());
        for (v, n) in &vecs {
            for &x in v {
                coords.push(i32::try_from(x).map_err(|_| Error::Overflow)?);
            }
            for x in l.apply(v) {
                gv.push(i32::try_from(x).map_err(|_| Error::Overflow)?);
            }
            half.push(u8::try_from(n / 2).map_err(|_| Error::Overflow)?);
        }
        let mut end_by_half = vec![0usize; max_half as usize + 1];
        for (t, slot) in end_by_half.iter_mut().enumerate() {
            *slot = half.partition_point(|&h| (h as usize) <= t);
        }
        Ok(Self {
            m,
            coords,
            gv,
            half,
            end_by_half,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.half.len()
    }

    #[inline]
    pub(crate) fn half(&self, i: usize) -> i64 {
        self.half[i] as i64
    }

    #[inline]
    pub(crate) fn end(&self, max_half: i64) -> usize {
        if max_half < 0 {
            0
        } else {
            self.end_by_half[(max_half as usize).min(self.end_by_half.len() - 1)]
        }
    }

    #[inline]
    pub(crate) fn coords(&self, i: usize) -> &[i32] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    #[inline]
    pub(crate) fn gv(&self, i: usize) -> &[i32] {
        &self.gv[i * self.m..(i + 1) * self.m]
    }

    #[inline]
    pub(crate) fn ip(&self, a: usize, b: usize) -> i64 {
        dot(self.gv(a), self.coords(b))
    }
}

#[inline]
fn dot(a: &[i32], b: &[i32]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| x as i64 * y as i64).sum()
}

/// Number of `g`-tuples of vectors of `l` with Gram matrix `2T`, by direct
/// search through candidate lists filtered by the prescribed inner products.
pub fn representation_count(l: &EvenLattice, t: &HalfIntegralMatrix, limits: &Limits) -> Result<Coeff> {
    if !t.is_psd() {
        return Ok(0);
    }
    let g = t.genus();
    // a zero diagonal entry forces the vector, and (by psd) its row, to vanish
    let live: Vec<usize> = (0..g).filter(|&p| t.doubled_entry(p, p) != 0).collect();
    let k = live.len();
    if k == 0 {
        return Ok(1);
    }
    let entry = |p: usize, q: usize| t.doubled_entry(live[p], live[q]);
    let max_norm = (0..k).map(|p| entry(p, p)).max().unwrap_or(0);
    let table = VecTable::signed(l, max_norm / 2, limits)?;
    let by_norm =
        |norm: i64| -> Vec<usize> { (1..table.len()).filter(|&i| 2 * table.half[i] as i64 == norm).collect() };
    let mut cands: Vec<Vec<usize>> = (0..k).map(|p| by_norm(entry(p, p))).collect();
    // x_1 -> -x_1 with all others negated is a bijection, so x_1 may be taken
    // with a positive first nonzero coordinate and the count doubled.
    cands[0].retain(|&i| table.coords(i).iter().find(|&&c| c != 0).is_some_and(|&c| c > 0));
    let budget = Budget::new(limits.node_budget);
    let mut meter = budget.meter();
    let gram: Vec<Vec<i64>> = (0..k).map(|p| (0..k).map(|q| entry(p, q)).collect()).collect();
    let n = count_filtered(&table, &gram, 0, cands, &mut meter)?;
    meter.flush()?;
    Ok(2 * n as Coeff)
}

fn count_filtered(
    table: &VecTable,
    gram: &[Vec<i64>],
    p: usize,
    cands: Vec<Vec<usize>>,
    meter: &mut Meter,
) -> Result<u64> {
    let k = gram.len();
    if p == k - 1 {
        meter.tick(1)?;
        return Ok(cands[p].len() as u64);
    }
    let mut total = 0u64;
    for &v in &cands[p] {
        meter.tick(1)?;
        let mut next: Vec<Vec<usize>> = vec![Vec::new(); k];
        let mut dead = false;
        for q in p + 1..k {
            let want = gram[p][q];
            next[q] = cands[q].iter().copied().filter(|&w| table.ip(v, w) == want).collect();
            meter.tick(cands[q].len() as u64)?;
            if next[q].is_empty() {
                dead = true;
                break;
            }
        }
        if !dead {
            total += count_filtered(table, gram, p + 1, next, meter)?;
        }
    }
    Ok(total)
}

fn factorial(k: usize) -> i128 {
    (1..=k as i128).product()
}

/// Per-worker state of the core enumeration.
struct CoreAcc<'b> {
    map: FxHashMap<GramKey, Coeff>,
    hist: FxHashMap<u64, u64>,
    /// `rows[p][j]`: inner product of the level-`p` vector with vector `j`.
    rows: Vec<Vec<i8>>,
    idx: Vec<usize>,
    gram: GramKey,
    meter: Meter<'b>,
}

struct CoreRun<'a> {
    table: &'a VecTable,
    k: usize,
    full: i128,
}

impl<'a> CoreRun<'a> {
    fn new_acc<'b>(&self, budget: &'b Budget) -> CoreAcc<'b> {
        CoreAcc {
            map: FxHashMap::default(),
            hist: FxHashMap::default(),
            rows: vec![vec![0; self.table.len()]; self.k.saturating_sub(2)],
            idx: vec![0; self.k],
            gram: [0; KEY_LEN],
            meter: budget.meter(),
        }
    }

    /// Chooses the level-`p` vector at index `i`; `remaining` is the budget before it.
    #[allow(clippy::too_many_arguments)]
    fn place(&self, p: usize, i: usize, remaining: i64, run: u32, denom: i128, acc: &mut CoreAcc) -> Result<()> {
        let t = self.table;
        let k = self.k;
        let h = t.half[i] as i64;
        let r_after = remaining - h;
        let run = if p > 0 && acc.idx[p - 1] == i { run + 1 } else { 1 };
        let denom = denom * run as i128;
        acc.idx[p] = i;
        for q in 0..p {
            acc.gram[tri(p, q)] = acc.rows[q][i];
        }
        acc.gram[tri(p, p)] = (2 * h) as i8;
        acc.meter.tick(1)?;
        if p + 2 < k {
            // later vectors have half-norm at most r_after - (k - p - 2)
            let end = t.end(r_after - (k - p - 2) as i64);
            let gi = t.gv(i);
            let row = &mut acc.rows[p];
            for j in i..end {
                row[j] = dot(gi, t.coords(j)) as i8;
            }
            acc.meter.tick(end.saturating_sub(i) as u64)?;
        }
        if p + 1 == k - 1 {
            self.leaf(i, r_after, run, denom, acc)
        } else {
            let levels = (k - p - 1) as i64;
            let end = t.end(r_after / levels);
            for j in i..end {
                self.place(p + 1, j, r_after, run, denom, acc)?;
            }
            Ok(())
        }
    }

    /// Last level after the prefix ending at index `s`.
    fn leaf(&self, s: usize, remaining: i64, run: u32, denom: i128, acc: &mut CoreAcc) -> Result<()> {
        let t = self.table;
        let k = self.k;
        let last = k - 1;
        let end = t.end(remaining);
        if s >= end {
            return Ok(());
        }
        acc.meter.tick((end - s) as u64)?;
        // repeated vector
        {
            let mut g = acc.gram;
            for q in 0..last - 1 {
                g[tri(last, q)] = acc.rows[q][s];
            }
            g[tri(last, last - 1)] = (2 * t.half[s]) as i8;
            g[tri(last, last)] = (2 * t.half[s]) as i8;
            let w = self.full / (denom * (run as i128 + 1));
            let slot = acc.map.entry(g).or_insert(0);
            *slot = add_coeff(*slot, w)?;
        }
        let gs = t.gv(s);
        acc.hist.clear();
        for j in s + 1..end {
            let mut key = t.half[j] as u64;
            for q in 0..last - 1 {
                key = (key << 8) | (acc.rows[q][j] as u8) as u64;
            }
            key = (key << 8) | (dot(gs, t.coords(j)) as i8 as u8) as u64;
            *acc.hist.entry(key).or_insert(0) += 1;
        }
        let w = self.full / denom;
        for (&key, &cnt) in acc.hist.iter() {
            let mut g = acc.gram;
            let mut key = key;
            g[tri(last, last - 1)] = (key & 0xff) as u8 as i8;
            key >>= 8;
            for q in (0..last - 1).rev() {
                g[tri(last, q)] = (key & 0xff) as u8 as i8;
                key >>= 8;
            }
            g[tri(last, last)] = (2 * key) as i8;
            let slot = acc.map.entry(g).or_insert(0);
            *slot = add_coeff(*slot, w.checked_mul(cnt as i128).ok_or(Error::Overflow)?)?;
        }
        Ok(())
    }
}

fn merge_maps(mut a: FxHashMap<GramKey, Coeff>, b: FxHashMap<GramKey, Coeff>) -> Result<FxHashMap<GramKey, Coeff>> {
    if a.len() < b.len() {
        return merge_maps(b, a);
    }
    for (key, v) in b {
        let slot = a.entry(key).or_insert(0);
        *slot = add_coeff(*slot, v)?;
    }
    Ok(a)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// All distinct images of a Gram matrix under signed permutations.
fn orbit(k: usize, key: &GramKey, perms: &[Vec<usize>]) -> BTreeSet<GramKey> {
    let get = |a: usize, b: usize| if a >= b { key[tri(a, b)] } else { key[tri(b, a)] };
    let mut out = BTreeSet::new();
    for perm in perms {
        // a global sign flip acts trivially, so fix the first sign
        for signs in 0..(1u32 << k.saturating_sub(1)) {
            let sign = |a: usize| if a > 0 && (signs >> (a - 1)) & 1 == 1 { -1i8 } else { 1 };
            let mut img = [0i8; KEY_LEN];
            for a in 0..k {
                for b in 0..=a {
                    img[tri(a, b)] = sign(a) * sign(b) * get(perm[a], perm[b]);
                }
            }
            out.insert(img);
        }
    }
    out
}

/// Replaces orbit-level totals by the per-matrix counts.
fn spread_over_orbits(k: usize, raw: FxHashMap<GramKey, Coeff>) -> Result<Vec<(GramKey, Coeff)>> {
    let perms = permutations(k);
    let mut orbits: BTreeMap<GramKey, (Coeff, BTreeSet<GramKey>)> = BTreeMap::new();
    let mut seen: FxHashMap<GramKey, GramKey> = FxHashMap::default();
    let mut keys: Vec<_> = raw.into_iter().collect();
    keys.sort();
    for (key, c) in keys {
        let canon = match seen.get(&key) {
            Some(c) => *c,
            None => {
                let members = orbit(k, &key, &perms);
                let canon = *members.first().expect("orbit contains the key");
                for m in &members {
                    seen.insert(*m, canon);
                }
                orbits.insert(canon, (0, members));
                canon
            }
        };
        let entry = orbits.get_mut(&canon).expect("orbit registered");
        entry.0 = add_coeff(entry.0, c)?;
    }
    let mut out = Vec::new();
    for (_, (total, members)) in orbits {
        let size = members.len() as Coeff;
        if total % size != 0 {
            return Err(Error::Unsupported(format!(
                "orbit total {total} not divisible by orbit size {size}"
            )));
        }
        for m in members {
            out.push((m, total / size));
        }
    }
    Ok(out)
}

/// Counts of ordered `k`-tuples of nonzero vectors from `table` with total
/// half-norm at most `bound`, keyed by the lower triangle of their Gram matrix.
fn core_counts(
    table: &VecTable,
    k: usize,
    bound: i64,
    budget: &Budget,
    threads: usize,
) -> Result<Vec<(GramKey, Coeff)>> {
    debug_assert!((1..=MAX_CORE).contains(&k));
    if k == 1 {
        let mut meter = budget.meter();
        let mut counts: BTreeMap<u8, Coeff> = BTreeMap::new();
        let end = table.end(bound);
        meter.tick(end as u64)?;
        meter.flush()?;
        for &h in &table.half[..end] {
            *counts.entry(h).or_insert(0) += 2;
        }
        return Ok(counts
            .into_iter()
            .map(|(h, c)| {
                let mut key = [0i8; KEY_LEN];
                key[0] = (2 * h) as i8;
                (key, c)
            })
            .collect());
    }
    let run = CoreRun {
        table,
        k,
        full: factorial(k) << k,
    };
    let top_end = table.end(bound / k as i64);
    let raw = with_threads(threads, || {
        (0..top_end)
            .into_par_iter()
            .try_fold(
                || run.new_acc(budget),
                |mut acc, i| {
                    run.place(0, i, bound, 0, 1, &mut acc)?;
                    Ok::<_, Error>(acc)
                },
            )
            .map(|acc| {
                let mut acc = acc?;
                acc.meter.flush()?;
                Ok(acc.map)
            })
            .try_reduce(FxHashMap::default, merge_maps)
    })?;
    spread_over_orbits(k, raw)
}

fn k_subsets(g: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, g: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..g {
            cur.push(i);
            rec(i + 1, g, k, cur, out);
            cur.pop();
        }
    }
    rec(0, g, k, &mut cur, &mut out);
    out
}

fn key_to_matrix(k: usize, key: &GramKey) -> HalfIntegralMatrix {
    HalfIntegralMatrix::from_lower(k, (0..tri(k, 0)).map(|i| key[i] as i64))
}

/// The genus-`g` theta series of `l`, complete up to `trace(T) <= n`.
pub fn siegel_theta(l: &EvenLattice, g: usize, n: i64, limits: &Limits) -> Result<SiegelExpansion> {
    check_bound(n)?;
    let weight = weight_tag(l.rank(), "theta series")?;
    let mut terms = BTreeMap::new();
    terms.insert(HalfIntegralMatrix::zero(g), 1);
    let kmax = g.min(n as usize);
    if kmax == 0 {
        return Ok(SiegelExpansion::from_map(g, weight, n, terms));
    }
    if kmax > MAX_CORE {
        return Err(Error::Unsupported(format!(
            "tuples of {kmax} nonzero vectors (min(genus, bound) above {MAX_CORE})"
        )));
    }
    if n > MAX_SIEGEL_BOUND {
        return Err(Error::Unsupported(format!("trace bound above {MAX_SIEGEL_BOUND}")));
    }
    let counts = theta_counts(l, 2 * n, limits)?;
    for (h, &c) in counts.iter().enumerate().skip(1).filter(|(_, &c)| c > 0) {
        for p in 0..g {
            let mut d = vec![0i64; g * (g + 1) / 2];
            d[p * (p + 1) / 2 + p] = 2 * h as i64;
            terms.insert(HalfIntegralMatrix::from_lower(g, d), c as Coeff);
        }
    }
    if kmax == 1 {
        return Ok(SiegelExpansion::from_map(g, weight, n, terms));
    }
    // each of k >= 2 nonzero vectors leaves at least 1 for the others
    let table = VecTable::reduced(l, n - 1, limits)?;
    let budget = Budget::new(limits.node_budget);
    for k in 2..=kmax {
        let core = core_counts(&table, k, n, &budget, limits.threads)?;
        for subset in k_subsets(g, k) {
            for (key, c) in &core {
                terms.insert(key_to_matrix(k, key).embed(g, &subset), *c);
            }
        }
    }
    Ok(SiegelExpansion::from_map(g, weight, n, terms))
}

/// Theta coefficients at every `T` whose doubled diagonal is `(norm, ..., norm)`.
///
/// Equivalent to reading those keys from `siegel_theta(l, g, g * norm / 2)` but
/// enumerates only tuples of vectors of norm exactly `norm`.
pub fn siegel_theta_uniform_diagonal(
    l: &EvenLattice,
    g: usize,
    norm: i64,
    limits: &Limits,
) -> Result<BTreeMap<HalfIntegralMatrix, Coeff>> {
    if norm <= 0 || norm % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "diagonal entry {norm} must be positive and even"
        )));
    }
    if g == 0 || g > MAX_CORE {
        return Err(Error::Unsupported(format!("genus {g} outside 1..={MAX_CORE}")));
    }
    let half = norm / 2;
    let bound = half * g as i64;
    if bound > MAX_SIEGEL_BOUND {
        return Err(Error::Unsupported(format!("trace above {MAX_SIEGEL_BOUND}")));
    }
    let all = VecTable::reduced(l, half, limits)?;
    let first = all.end(half - 1);
    let mut vecs = Vec::new();
    for i in first..all.len() {
        vecs.push((all.coords(i).iter().map(|&c| c as i64).collect::<Vec<_>>(), norm));
    }
    // rebuild with every vector at the same level; the bound then admits exactly g of them
    let table = VecTable::build(l, vecs, bound)?;
    let budget = Budget::new(limits.node_budget);
    let core = core_counts(&table, g, bound, &budget, limits.threads)?;
    Ok(core
        .into_iter()
        .map(|(key, c)| (key_to_matrix(g, &key), c))
        .filter(|(t, _)| (0..g).all(|p| t.doubled_entry(p, p) == norm))
        .collect())
}

/// Enumerates tuples of `g` vectors from a signed table (zero first) with total
/// half-norm at most `bound`; every tuple adds 1 at `(Gram / 2, R)` where the
/// rows of `R` are `rvals[j]`.
fn tuple_terms(
    table: &VecTable,
    rvals: &[i64],
    h: usize,
    g: usize,
    bound: i64,
    limits: &Limits,
) -> Result<BTreeMap<JacobiKey, Coeff>> {
    if g == 0 {
        let key = JacobiKey::from_parts(0, h, &[], &[])?;
        return Ok(BTreeMap::from([(key, 1)]));
    }
    struct Acc<'b> {
        map: FxHashMap<JacobiKey, Coeff>,
        idx: Vec<usize>,
        lower: Vec<i64>,
        r: Vec<i64>,
        meter: Meter<'b>,
    }
    fn rec(
        table: &VecTable,
        rvals: &[i64],
        h: usize,
        g: usize,
        p: usize,
        j: usize,
        remaining: i64,
        acc: &mut Acc,
    ) -> Result<()> {
        acc.meter.tick(1)?;
        acc.idx[p] = j;
        for q in 0..p {
            acc.lower[tri(p, q)] = table.ip(acc.idx[q], j);
        }
        acc.lower[tri(p, p)] = 2 * table.half[j] as i64;
        acc.r[p * h..(p + 1) * h].copy_from_slice(&rvals[j * h..(j + 1) * h]);
        let r_after = remaining - table.half[j] as i64;
        if p + 1 == g {
            let key = JacobiKey::from_parts(g, h, &acc.lower, &acc.r)?;
            let slot = acc.map.entry(key).or_insert(0);
            *slot = add_coeff(*slot, 1)?;
            return Ok(());
        }
        for jj in 0..table.end(r_after) {
            rec(table, rvals, h, g, p + 1, jj, r_after, acc)?;
        }
        Ok(())
    }
    let budget = Budget::new(limits.node_budget);
    let top = table.end(bound);
    let map = with_threads(limits.threads, || {
        (0..top)
            .into_par_iter()
            .try_fold(
                || Acc {
                    map: FxHashMap::default(),
                    idx: vec![0; g],
                    lower: vec![0; tri(g, 0)],
                    r: vec![0; g * h],
                    meter: budget.meter(),
                },
                |mut acc, j| {
                    rec(table, rvals, h, g, 0, j, bound, &mut acc)?;
                    Ok::<_, Error>(acc)
                },
            )
            .map(|acc| {
                let mut acc = acc?;
                acc.meter.flush()?;
                Ok(acc.map)
            })
            .try_reduce(FxHashMap::default, |mut a, b| {
                for (key, v) in b {
                    let slot = a.entry(key).or_insert(0);
                    *slot = add_coeff(*slot, v)?;
                }
                Ok(a)
            })
    })?;
    Ok(map.into_iter().collect())
}

/// The genus-`g` Jacobi theta series of index `M`, complete up to `trace(T) <= n`.
pub fn jacobi_theta(index: &JacobiIndex, g: usize, n: i64, limits: &Limits) -> Result<JacobiExpansion> {
    check_bound(n)?;
    let h = index.width();
    let weight = weight_tag(h, "Jacobi theta series")?;
    let lattice = index.lattice();
    let table = VecTable::signed(&lattice, n, limits)?;
    let rvals: Vec<i64> = table.gv.iter().map(|&v| v as i64).collect();
    let terms = tuple_terms(&table, &rvals, h, g, n, limits)?;
    Ok(JacobiExpansion::from_map(g, index.clone(), weight, n, terms))
}

/// `c^t S c`, the doubled index of `theta_sc`.
pub fn sc_index(s: &EvenLattice, c: &IntMatrix) -> Result<IntMatrix> {
    if c.rows() != s.rank() {
        return Err(Error::Shape(format!(
            "c has {} rows, S has rank {}",
            c.rows(),
            s.rank()
        )));
    }
    c.transpose().mul(s.gram())?.mul(c)
}

/// The genus-`g` theta series of `S` twisted by `c`, with `R = lambda^t S c`,
/// complete up to `trace(T) <= n`. The index `c^t S c / 2` must be positive definite.
pub fn theta_sc(s: &EvenLattice, c: &IntMatrix, g: usize, n: i64, limits: &Limits) -> Result<JacobiExpansion> {
    check_bound(n)?;
    let weight = weight_tag(s.rank(), "theta series")?;
    let doubled = sc_index(s, c)?;
    if !doubled.is_positive_definite() {
        return Err(Error::Unsupported(
            "the index c^t S c / 2 is not positive definite".into(),
        ));
    }
    let index = JacobiIndex::new(doubled, None)?;
    let h = c.cols();
    let table = VecTable::signed(s, n, limits)?;
    let mut rvals = Vec::with_capacity(table.len() * h);
    for i in 0..table.len() {
        let sv = table.gv(i);
        for col in 0..h {
            let mut acc = 0i64;
            for (row, &x) in sv.iter().enumerate() {
                acc = acc
                    .checked_add((x as i64).checked_mul(c.get(row, col)).ok_or(Error::Overflow)?)
                    .ok_or(Error::Overflow)?;
            }
            rvals.push(acc);
        }
    }
    let terms = tuple_terms(&table, &rvals, h, g, n, limits)?;
    Ok(JacobiExpansion::from_map(g, index, weight, n, terms))
}
