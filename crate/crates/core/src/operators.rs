//! Degree-lowering operators and the Shimura product, acting on coefficient tables.
//!
//! `Phi f(tau) = lim_{t -> oo} f(diag(tau, i t))` keeps exactly the terms whose
//! index has a vanishing last diagonal entry; since the index is psd, the whole
//! last row and column vanish then, and the term survives with that row dropped.
//! `Psi` does the same on `(T, R)`, where the vanishing corner of `T` also kills
//! the last row of `R` by the block psd condition.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{add_coeff, mul_coeff, Coeff, Expansion, JacobiExpansion, SiegelExpansion};

pub fn siegel_phi(e: &SiegelExpansion) -> Result<SiegelExpansion> {
    if e.genus() == 0 {
        return Err(Error::InvalidArgument("Phi needs genus at least 1".into()));
    }
    let terms: BTreeMap<_, _> = e
        .terms()
        .iter()
        .filter_map(|(t, &c)| t.drop_last().map(|t| (t, c)))
        .collect();
    Ok(SiegelExpansion::from_map(e.genus() - 1, e.weight(), e.bound(), terms))
}

pub fn siegel_jacobi_psi(f: &JacobiExpansion) -> Result<JacobiExpansion> {
    if f.genus() == 0 {
        return Err(Error::InvalidArgument("Psi needs genus at least 1".into()));
    }
    let terms: BTreeMap<_, _> = f
        .terms()
        .iter()
        .filter_map(|(k, &c)| k.drop_last().map(|k| (k, c)))
        .collect();
    Ok(JacobiExpansion::from_map(
        f.genus() - 1,
        f.index().clone(),
        f.weight(),
        f.bound(),
        terms,
    ))
}

fn min_trace<E: Expansion>(e: &E) -> Option<i64> {
    e.terms().keys().map(E::key_trace).min()
}

/// `f * F` with coefficients `c(T, R) = sum_{T1 + T2 = T} a(T1) c_F(T2, R)`,
/// complete up to the smaller of the two bounds.
pub fn shimura_product(f: &SiegelExpansion, big_f: &JacobiExpansion) -> Result<JacobiExpansion> {
    shimura_product_to(f, big_f, f.bound().min(big_f.bound()))
}

/// The product complete up to `bound`.
///
/// A term of trace `t <= bound` only involves terms of `F` of trace at most
/// `bound - t_min(f)` and terms of `f` of trace at most `bound - t_min(F)`, so
/// each factor needs to be complete only that far.
pub fn shimura_product_to(f: &SiegelExpansion, big_f: &JacobiExpansion, bound: i64) -> Result<JacobiExpansion> {
    if f.genus() != big_f.genus() {
        return Err(Error::Shape(format!(
            "Siegel factor of genus {} and Jacobi factor of genus {}",
            f.genus(),
            big_f.genus()
        )));
    }
    let weight = f.weight() + big_f.weight();
    let (tf, t_big) = (min_trace(f), min_trace(big_f));
    if let Some(tf) = tf {
        if big_f.bound() < bound - tf {
            return Err(Error::InvalidArgument(format!(
                "Jacobi factor complete to {} but {} is needed",
                big_f.bound(),
                bound - tf
            )));
        }
    }
    if let Some(tb) = t_big {
        if f.bound() < bound - tb {
            return Err(Error::InvalidArgument(format!(
                "Siegel factor complete to {} but {} is needed",
                f.bound(),
                bound - tb
            )));
        }
    }
    let mut big_by_trace: BTreeMap<i64, Vec<_>> = BTreeMap::new();
    for (k, &c) in big_f.terms() {
        big_by_trace.entry(k.trace()).or_default().push((k, c));
    }
    let mut acc: FxHashMap<_, Coeff> = FxHashMap::default();
    for (t1, &a) in f.terms() {
        let room = bound - t1.trace();
        if room < 0 {
            continue;
        }
        for (_, terms) in big_by_trace.range(..=room) {
            for &(k, c) in terms {
                let key = k.add_t(t1)?;
                let slot = acc.entry(key).or_insert(0);
                *slot = add_coeff(*slot, mul_coeff(a, c)?)?;
            }
        }
    }
    Ok(JacobiExpansion::from_map(
        f.genus(),
        big_f.index().clone(),
        weight,
        bound,
        acc.into_iter().collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Siegel,
    Jacobi,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "siegel" => Ok(FamilyKind::Siegel),
            "jacobi" => Ok(FamilyKind::Jacobi),
            other => Err(Error::InvalidArgument(format!("unknown family kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StableStep {
    pub from: usize,
    pub to: usize,
    pub pass: bool,
    /// Canonical key of the first index where the two sides differ.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StableFamilyReport {
    pub kind: FamilyKind,
    pub genera: Vec<usize>,
    pub bound: i64,
    pub steps: Vec<StableStep>,
}

impl StableFamilyReport {
    pub fn pass(&self) -> bool {
        self.steps.iter().all(|s| s.pass)
    }
}

/// An expansion family with its degree-lowering operator.
pub trait Lowering: Expansion {
    const KIND: FamilyKind;
    fn lower(&self) -> Result<Self>;
}

impl Lowering for SiegelExpansion {
    const KIND: FamilyKind = FamilyKind::Siegel;
    fn lower(&self) -> Result<Self> {
        siegel_phi(self)
    }
}

impl Lowering for JacobiExpansion {
    const KIND: FamilyKind = FamilyKind::Jacobi;
    fn lower(&self) -> Result<Self> {
        siegel_jacobi_psi(self)
    }
}

/// First index, in canonical-key order, where two tables differ.
pub fn first_difference<E: Expansion>(a: &E, b: &E) -> Option<String> {
    let mut keys: Vec<(String, &E::Key)> = a
        .terms()
        .keys()
        .chain(b.terms().keys())
        .map(|k| (E::canonical(k), k))
        .collect();
    keys.sort_by(|x, y| x.0.cmp(&y.0));
    keys.into_iter().find(|(_, k)| a.coeff(k) != b.coeff(k)).map(|(s, _)| s)
}

/// Checks `op(E_g) = E_{g-1}` for consecutive members, up to the common bound.
///
/// `family` must be ordered by increasing, consecutive genus.
pub fn verify_stable<E: Lowering>(family: &[E]) -> Result<StableFamilyReport> {
    let first = family
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    for (i, e) in family.iter().enumerate() {
        if e.genus() != first.genus() + i {
            return Err(Error::Shape(format!(
                "member {i} has genus {}, expected {}",
                e.genus(),
                first.genus() + i
            )));
        }
        if e.weight() != first.weight() {
            return Err(Error::Shape(format!(
                "member {i} has weight {}, expected {}",
                e.weight(),
                first.weight()
            )));
        }
        let lowered_first = (0..i).try_fold(e.clone(), |acc, _| acc.lower())?;
        lowered_first.check_compatible(first)?;
    }
    let bound = family.iter().map(Expansion::bound).min().unwrap_or(0);
    let mut steps = Vec::new();
    for w in family.windows(2) {
        let image = w[1].lower()?.truncate(bound);
        let lower = w[0].truncate(bound);
        let witness = first_difference(&image, &lower);
        steps.push(StableStep {
            from: w[1].genus(),
            to: w[0].genus(),
            pass: witness.is_none(),
            witness,
        });
    }
    Ok(StableFamilyReport {
        kind: E::KIND,
        genera: family.iter().map(Expansion::genus).collect(),
        bound,
        steps,
    })
}
