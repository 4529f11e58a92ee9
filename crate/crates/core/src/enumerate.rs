//! Fincke-Pohst enumeration of lattice vectors of bounded norm.
//!
//! Pruning uses a floating Cholesky decomposition with a small slack; every
//! accepted vector has its norm recomputed in exact integer arithmetic, so the
//! slack can only cost time, never correctness.
//!
//! Only one vector of each `±` pair is produced: the one whose first nonzero
//! coordinate is positive.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::config::Limits;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

mod split;

const SLACK: f64 = 1e-7;
const FLUSH_EVERY: u64 = 1 << 16;

/// Shared node counter enforcing the enumeration budget across workers.
pub(crate) struct Budget {
    used: AtomicU64,
    limit: u64,
}

impl Budget {
    pub(crate) fn new(limit: u64) -> Self {
        Self {
            used: AtomicU64::new(0),
            limit,
        }
    }

    pub(crate) fn meter(&self) -> Meter<'_> {
        Meter { budget: self, local: 0 }
    }
}

/// Per-worker view of a [`Budget`]; batches updates to the shared counter.
pub(crate) struct Meter<'a> {
    budget: &'a Budget,
    local: u64,
}

impl Meter<'_> {
    #[inline]
    pub(crate) fn tick(&mut self, n: u64) -> Result<()> {
        self.local += n;
        if self.local >= FLUSH_EVERY {
            self.flush()?;
        }
        Ok(())
    }

    pub(crate) fn flush(&mut self) -> Result<()> {
        let total = self.budget.used.fetch_add(self.local, Ordering::Relaxed) + self.local;
        self.local = 0;
        if total > self.budget.limit {
            return Err(Error::Budget {
                limit: self.budget.limit,
            });
        }
        Ok(())
    }
}

impl Drop for Meter<'_> {
    fn drop(&mut self) {
        self.budget.used.fetch_add(self.local, Ordering::Relaxed);
    }
}

/// Runs `f` on a pool with the requested number of threads.
pub(crate) fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Receives the innermost coordinate range of the enumeration tree.
///
/// `x` holds the coordinates in enumeration order with `x[0]` still free; the
/// exact norm of the vector with `x[0] = t` is `base + a*t*t + 2*b*t`.
trait Leaves {
    fn leaves(&mut self, x: &mut [i64], lo: i64, hi: i64, a: i64, b: i64, base: i64, bound: i64);
}

pub(crate) struct FinckePohst {
    m: usize,
    /// Gram matrix in enumeration order (coordinate reversal of the input).
    gram: Vec<i64>,
    /// Cholesky data: `q[i*m+i]` diagonal, `q[i*m+j]` (j>i) off-diagonal coefficients.
    q: Vec<f64>,
}

impl FinckePohst {
    pub(crate) fn new(gram: &IntMatrix) -> Result<Self> {
        let m = gram.rows();
        let mut g = vec![0i64; m * m];
        for i in 0..m {
            for j in 0..m {
                g[i * m + j] = gram.get(m - 1 - i, m - 1 - j);
            }
        }
        let mut q = vec![0f64; m * m];
        for i in 0..m {
            for j in i..m {
                q[i * m + j] = g[i * m + j] as f64;
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                q[j * m + i] = q[i * m + j];
                q[i * m + j] /= q[i * m + i];
            }
            for k in i + 1..m {
                for l in k..m {
                    q[k * m + l] -= q[k * m + i] * q[i * m + l];
                }
            }
            if !(q[i * m + i] > 0.0) {
                return Err(Error::InvalidArgument("Gram matrix is not positive definite".into()));
            }
        }
        Ok(Self { m, gram: g, q })
    }

    fn top_range(&self, bound: i64) -> (i64, i64) {
        let top = self.m - 1;
        let r = ((bound as f64 + SLACK * (1.0 + bound as f64)) / self.q[top * self.m + top]).sqrt();
        // first nonzero coordinate positive: the top coordinate is never negative
        (0, r.floor() as i64)
    }

    fn run<L: Leaves>(&self, top: i64, bound: i64, leaves: &mut L, meter: &mut Meter) -> Result<()> {
        let m = self.m;
        let mut st = State {
            x: vec![0; m],
            center: vec![0.0; m],
            lin: vec![0; m],
        };
        let t = self.m - 1;
        if m == 1 {
            if top > 0 {
                meter.tick(1)?;
                leaves.leaves(&mut st.x, top, top, self.gram[0], 0, 0, bound);
            }
            return Ok(());
        }
        let qtt = self.q[t * m + t];
        st.x[t] = top;
        let partial = qtt * (top as f64) * (top as f64);
        let exact = self.gram[t * m + t] * top * top;
        for l in 0..t {
            st.center[l] += self.q[l * m + t] * top as f64;
            st.lin[l] += self.gram[l * m + t] * top;
        }
        meter.tick(1)?;
        self.descend(t - 1, partial, exact, top == 0, bound, &mut st, leaves, meter)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend<L: Leaves>(
        &self,
        i: usize,
        partial: f64,
        exact: i64,
        all_zero: bool,
        bound: i64,
        st: &mut State,
        leaves: &mut L,
        meter: &mut Meter,
    ) -> Result<()> {
        let m = self.m;
        let qii = self.q[i * m + i];
        let room = bound as f64 - partial + SLACK * (1.0 + bound as f64);
        if room < 0.0 {
            return Ok(());
        }
        let r = (room / qii).sqrt();
        let c = -st.center[i];
        let mut lo = (c - r).ceil() as i64;
        let hi = (c + r).floor() as i64;
        if all_zero {
            lo = lo.max(if i == 0 { 1 } else { 0 });
        }
        if lo > hi {
            return Ok(());
        }
        if i == 0 {
            meter.tick((hi - lo + 1) as u64)?;
            leaves.leaves(&mut st.x, lo, hi, self.gram[0], st.lin[0], exact, bound);
            return Ok(());
        }
        if i == 1 {
            return self.last_two(lo, hi, partial, exact, all_zero, bound, st, leaves, meter);
        }
        let gii = self.gram[i * m + i];
        for v in lo..=hi {
            meter.tick(1)?;
            let d = v as f64 + st.center[i];
            let p = partial + qii * d * d;
            let e = exact + gii * v * v + 2 * v * st.lin[i];
            st.x[i] = v;
            if v != 0 {
                for l in 0..i {
                    st.center[l] += self.q[l * m + i] * v as f64;
                    st.lin[l] += self.gram[l * m + i] * v;
                }
            }
            let res = self.descend(i - 1, p, e, all_zero && v == 0, bound, st, leaves, meter);
            if v != 0 {
                for l in 0..i {
                    st.center[l] -= self.q[l * m + i] * v as f64;
                    st.lin[l] -= self.gram[l * m + i] * v;
                }
            }
            res?;
        }
        st.x[i] = 0;
        Ok(())
    }

    /// The two innermost levels, unrolled.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn last_two<L: Leaves>(
        &self,
        lo1: i64,
        hi1: i64,
        partial: f64,
        exact: i64,
        all_zero: bool,
        bound: i64,
        st: &mut State,
        leaves: &mut L,
        meter: &mut Meter,
    ) -> Result<()> {
        let m = self.m;
        let (q00, q01, q11) = (self.q[0], self.q[1], self.q[m + 1]);
        let (g00, g01, g11) = (self.gram[0], self.gram[1], self.gram[m + 1]);
        let (c0, c1, l0, l1) = (st.center[0], st.center[1], st.lin[0], st.lin[1]);
        let limit = bound as f64 + SLACK * (1.0 + bound as f64);
        let mut nodes = 0u64;
        for v in lo1..=hi1 {
            let d = v as f64 + c1;
            let room = limit - partial - q11 * d * d;
            if room < 0.0 {
                continue;
            }
            let r = (room / q00).sqrt();
            let c = -(c0 + q01 * v as f64);
            let mut lo = (c - r).ceil() as i64;
            let hi = (c + r).floor() as i64;
            if all_zero && v == 0 {
                lo = lo.max(1);
            }
            if lo > hi {
                continue;
            }
            nodes += (hi - lo + 1) as u64 + 1;
            st.x[1] = v;
            let e = exact + g11 * v * v + 2 * v * l1;
            leaves.leaves(&mut st.x, lo, hi, g00, l0 + g01 * v, e, bound);
        }
        st.x[1] = 0;
        meter.tick(nodes)
    }

    /// All sign-reduced vectors with `0 < norm <= bound`, in input coordinates, unsorted.
    pub(crate) fn vectors(&self, bound: i64, limits: &Limits) -> Result<Vec<(Vec<i64>, i64)>> {
        if bound <= 0 || self.m == 0 {
            return Ok(Vec::new());
        }
        let budget = Budget::new(limits.node_budget);
        let (lo, hi) = self.top_range(bound);
        let tops: Vec<i64> = (lo..=hi).collect();
        let chunks = with_threads(limits.threads, || {
            tops.par_iter()
                .map(|&top| {
                    let mut meter = budget.meter();
                    let mut sink = Collect { out: Vec::new() };
                    self.run(top, bound, &mut sink, &mut meter)?;
                    meter.flush()?;
                    Ok(sink.out)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let m = self.m;
        Ok(chunks
            .into_iter()
            .flatten()
            .map(|(mut v, n)| {
                v.reverse();
                debug_assert_eq!(v.len(), m);
                (v, n)
            })
            .collect())
    }

    /// Number of sign-reduced vectors of each norm `2n`, indexed by `n`, for `0 < norm <= bound`.
    pub(crate) fn count_by_half_norm(&self, bound: i64, limits: &Limits) -> Result<Vec<u64>> {
        let len = (bound.max(0) / 2 + 1) as usize;
        if bound <= 0 || self.m == 0 {
            return Ok(vec![0; len]);
        }
        if self.m >= split::MIN_RANK {
            let gram = IntMatrix::new(self.m, self.m, self.gram.clone())?;
            if let Some(full) = split::full_counts(&gram, bound, limits)? {
                return Ok(full
                    .iter()
                    .enumerate()
                    .map(|(n, &c)| if n == 0 { 0 } else { c / 2 })
                    .collect());
            }
        }
        let budget = Budget::new(limits.node_budget);
        let (lo, hi) = self.top_range(bound);
        let tops: Vec<i64> = (lo..=hi).collect();
        let parts = with_threads(limits.threads, || {
            tops.par_iter()
                .map(|&top| {
                    let mut meter = budget.meter();
                    let mut sink = Count { counts: vec![0; len] };
                    self.run(top, bound, &mut sink, &mut meter)?;
                    meter.flush()?;
                    Ok(sink.counts)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut counts = vec![0u64; len];
        for part in parts {
            for (c, p) in counts.iter_mut().zip(part) {
                *c += p;
            }
        }
        Ok(counts)
    }
}

struct State {
    x: Vec<i64>,
    center: Vec<f64>,
    lin: Vec<i64>,
}

struct Collect {
    out: Vec<(Vec<i64>, i64)>,
}

impl Leaves for Collect {
    fn leaves(&mut self, x: &mut [i64], lo: i64, hi: i64, a: i64, b: i64, base: i64, bound: i64) {
        for t in lo..=hi {
            let n = base + a * t * t + 2 * b * t;
            if n > 0 && n <= bound {
                x[0] = t;
                self.out.push((x.to_vec(), n));
            }
        }
        x[0] = 0;
    }
}

struct Count {
    counts: Vec<u64>,
}

impl Leaves for Count {
    #[inline]
    fn leaves(&mut self, _x: &mut [i64], lo: i64, hi: i64, a: i64, b: i64, base: i64, bound: i64) {
        // n(t) = base + a t^2 + 2 b t, stepped by first differences.
        let mut n = base + a * lo * lo + 2 * b * lo;
        let mut step = a * (2 * lo + 1) + 2 * b;
        let a2 = 2 * a;
        for _ in lo..=hi {
            if n > 0 && n <= bound {
                self.counts[(n >> 1) as usize] += 1;
            }
            n += step;
            step += a2;
        }
    }
}
