//! Norm counts through an orthogonal splitting of the basis.
//!
//! Write the Gram matrix in blocks `[[A, C], [C^t, D]]` for a split of the basis
//! into `k` and `m - k` vectors, and let `d = det A`. For `v = (y, x)`,
//!
//! `d^2 Q(v) = w^t A w + d x^t W x`, with `W = d D - C^t adj(A) C` and `w = d y + adj(A) C x`.
//!
//! `W` is integral and positive definite, and the first term depends on `x` only
//! through the class `adj(A) C x mod d`. Both halves are enumerated once and
//! their norm histograms are convolved class by class.

use std::collections::{BTreeMap, HashMap};

use super::{Budget, FinckePohst, Meter, SLACK};
use crate::config::Limits;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

/// Smallest rank for which splitting is tried.
pub(super) const MIN_RANK: usize = 10;
/// Largest `det A` accepted for a split.
const MAX_DET: i64 = 1024;

type Histogram = BTreeMap<i64, u64>;

struct Split {
    k: usize,
    d: i64,
    a: IntMatrix,
    /// `adj(A) C`, a `k x (m - k)` matrix.
    ac: IntMatrix,
    w: IntMatrix,
}

fn sub(g: &IntMatrix, rows: &[usize], cols: &[usize]) -> IntMatrix {
    let data = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| g.get(i, j)))
        .collect();
    IntMatrix::new(rows.len(), cols.len(), data).expect("block shape")
}

fn split_at(g: &IntMatrix, first: &[usize], rest: &[usize]) -> Result<Option<Split>> {
    let a = sub(g, first, first);
    let (adj, d) = match a.adjugate() {
        Ok(x) => x,
        Err(Error::Overflow) => return Ok(None),
        Err(e) => return Err(e),
    };
    if d <= 0 || d > MAX_DET {
        return Ok(None);
    }
    let c = sub(g, first, rest);
    let dd = sub(g, rest, rest);
    let ac = adj.mul(&c)?;
    let cac = c.transpose().mul(&ac)?;
    let n = rest.len();
    let mut w = IntMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = d
                .checked_mul(dd.get(i, j))
                .and_then(|v| v.checked_sub(cac.get(i, j)))
                .ok_or(Error::Overflow)?;
            w.set(i, j, v);
        }
    }
    Ok(Some(Split {
        k: first.len(),
        d,
        a,
        ac,
        w,
    }))
}

fn choose_split(g: &IntMatrix) -> Result<Option<Split>> {
    let m = g.rows();
    let k = m / 2;
    let idx: Vec<usize> = (0..m).collect();
    let mut best: Option<Split> = None;
    for (first, rest) in [(&idx[..k], &idx[k..]), (&idx[m - k..], &idx[..m - k])] {
        if let Some(s) = split_at(g, first, rest)? {
            if best.as_ref().is_none_or(|b| s.d < b.d) {
                best = Some(s);
            }
        }
    }
    Ok(best)
}

/// Vectors `w` in the coset `t + d Z^k` with `w^t A w <= limit`, histogrammed by that value.
fn coset_histogram(s: &Split, chol: &[f64], t: &[i64], limit: i64, meter: &mut Meter) -> Result<Histogram> {
    let k = s.k;
    let d = s.d as f64;
    // in the variable z = w / d, the bound is z^t A z <= limit / d^2
    let shift: Vec<f64> = t.iter().map(|&x| x as f64 / d).collect();
    let fbound = limit as f64 / (d * d);
    let mut hist = Histogram::new();
    let mut y = vec![0i64; k];
    let mut center = vec![0f64; k];
    walk(
        s,
        chol,
        &shift,
        t,
        fbound * (1.0 + SLACK) + SLACK,
        limit,
        k,
        0.0,
        &mut y,
        &mut center,
        &mut hist,
        meter,
    )?;
    Ok(hist)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    s: &Split,
    chol: &[f64],
    shift: &[f64],
    t: &[i64],
    fbound: f64,
    limit: i64,
    level: usize,
    partial: f64,
    y: &mut [i64],
    center: &mut [f64],
    hist: &mut Histogram,
    meter: &mut Meter,
) -> Result<()> {
    let k = s.k;
    if level == 0 {
        let w: Vec<i64> = (0..k).map(|i| s.d * y[i] + t[i]).collect();
        let mut n = 0i64;
        for i in 0..k {
            for j in 0..k {
                n += w[i] * s.a.get(i, j) * w[j];
            }
        }
        if n <= limit {
            *hist.entry(n).or_insert(0) += 1;
        }
        return Ok(());
    }
    let i = level - 1;
    let qii = chol[i * k + i];
    let room = fbound - partial;
    if room < 0.0 {
        return Ok(());
    }
    let r = (room / qii).sqrt();
    // z_i = y_i + shift_i must lie within r of -center_i
    let c = -center[i] - shift[i];
    let lo = (c - r).ceil() as i64;
    let hi = (c + r).floor() as i64;
    for v in lo..=hi {
        meter.tick(1)?;
        let z = v as f64 + shift[i];
        let dz = z + center[i];
        y[i] = v;
        for l in 0..i {
            center[l] += chol[l * k + i] * z;
        }
        let res = walk(
            s,
            chol,
            shift,
            t,
            fbound,
            limit,
            i,
            partial + qii * dz * dz,
            y,
            center,
            hist,
            meter,
        );
        for l in 0..i {
            center[l] -= chol[l * k + i] * z;
        }
        res?;
    }
    Ok(())
}

/// Same layout as the tree search: `q[i*k+i]` diagonal, `q[i*k+j]` (j>i) coefficients.
fn cholesky(a: &IntMatrix) -> Vec<f64> {
    let k = a.rows();
    let mut q = vec![0f64; k * k];
    for i in 0..k {
        for j in i..k {
            q[i * k + j] = a.get(i, j) as f64;
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            q[j * k + i] = q[i * k + j];
            q[i * k + j] /= q[i * k + i];
        }
        for r in i + 1..k {
            for l in r..k {
                q[r * k + l] -= q[r * k + i] * q[i * k + l];
            }
        }
    }
    q
}

/// Number of vectors (both signs, zero included) of each norm `2n`, indexed by
/// `n <= bound / 2`, or `None` when no split with a small enough `det A` exists.
pub(super) fn full_counts(gram: &IntMatrix, bound: i64, limits: &Limits) -> Result<Option<Vec<u64>>> {
    let Some(s) = choose_split(gram)? else {
        return Ok(None);
    };
    let d = s.d;
    let d2 = d * d;
    let limit = d2.checked_mul(bound).ok_or(Error::Overflow)?;
    let budget = Budget::new(limits.node_budget);
    let mut meter = budget.meter();

    let mut by_class: HashMap<Vec<i64>, Histogram> = HashMap::new();
    let class_of = |x: &[i64], sign: i64| -> Vec<i64> {
        (0..s.k)
            .map(|i| {
                let v: i64 = s.ac.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                (sign * v).rem_euclid(d)
            })
            .collect()
    };
    *by_class.entry(vec![0; s.k]).or_default().entry(0).or_insert(0) += 1;
    let wbound = d.checked_mul(bound).ok_or(Error::Overflow)?;
    for (x, n) in FinckePohst::new(&s.w)?.vectors(wbound, limits)? {
        meter.tick(1)?;
        for sign in [1, -1] {
            *by_class.entry(class_of(&x, sign)).or_default().entry(n).or_insert(0) += 1;
        }
    }

    let chol = cholesky(&s.a);
    let mut full = vec![0u64; (bound / 2 + 1) as usize];
    let mut classes: Vec<_> = by_class.into_iter().collect();
    classes.sort();
    for (t, wh) in classes {
        let uh = coset_histogram(&s, &chol, &t, limit, &mut meter)?;
        for (&nw, &cw) in &wh {
            let base = d * nw;
            for (&nu, &cu) in uh.range(..=limit - base) {
                let tot = base + nu;
                debug_assert_eq!(tot % (2 * d2), 0);
                full[(tot / (2 * d2)) as usize] += cw * cu;
            }
        }
    }
    meter.flush()?;
    Ok(Some(full))
}
