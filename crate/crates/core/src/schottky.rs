//! Differences of theta series, the Igusa form, and their products with Jacobi
//! theta series.

use serde::Serialize;

use crate::config::Limits;
use crate::error::{Error, Result};
use crate::expansion::{linear_combine, Expansion, JacobiExpansion, JacobiIndex, SiegelExpansion};
use crate::lattice::{
    count_vectors_by_norm, d16_plus, direct_sum, e8, is_even_unimodular, min_norm, EvenLattice, NormProfile,
};
use crate::operators::shimura_product_to;
use crate::theta::{jacobi_theta, siegel_theta};

fn require_even_unimodular(l: &EvenLattice) -> Result<()> {
    if !is_even_unimodular(l.gram()) {
        return Err(Error::InvalidArgument(format!("{} is not even unimodular", l.label())));
    }
    Ok(())
}

fn require_equal_rank(p: &EvenLattice, q: &EvenLattice) -> Result<()> {
    if p.rank() != q.rank() {
        return Err(Error::Shape(format!(
            "ranks differ: {} has rank {}, {} has rank {}",
            p.label(),
            p.rank(),
            q.label(),
            q.rank()
        )));
    }
    Ok(())
}

/// `theta_{P,g} - theta_{Q,g}`.
pub fn theta_difference(
    p: &EvenLattice,
    q: &EvenLattice,
    g: usize,
    n: i64,
    limits: &Limits,
) -> Result<SiegelExpansion> {
    require_equal_rank(p, q)?;
    require_even_unimodular(p)?;
    require_even_unimodular(q)?;
    let a = siegel_theta(p, g, n, limits)?;
    let b = siegel_theta(q, g, n, limits)?;
    linear_combine(&[(1, &a), (-1, &b)])
}

/// `theta_{E8+E8,g} - theta_{D16+,g}`, of weight 8.
pub fn igusa_form(g: usize, n: i64, limits: &Limits) -> Result<SiegelExpansion> {
    theta_difference(&direct_sum(&e8(), &e8()), &d16_plus(), g, n, limits)
}

/// Ranks, minimal norms and norm profiles of a pair of lattices, with the
/// verdicts derived from them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairCondition {
    pub rank_p: usize,
    pub rank_q: usize,
    pub mu_p: i64,
    pub mu_q: i64,
    pub profile_p: NormProfile,
    pub profile_q: NormProfile,
    /// `rank / min(mu_p, mu_q) <= 8`.
    pub mu_condition: bool,
    /// Which of the norm-count cases holds (1: rank 24, equal numbers of norm-2
    /// vectors; 2: rank 32, no norm-2 vectors; 3: rank 48, no vectors of norm 2 or 4).
    pub pair_case: Option<u8>,
}

fn case_from_profiles(rank: usize, a: &NormProfile, b: &NormProfile) -> Option<u8> {
    match rank {
        24 if a.count(2) == b.count(2) => Some(1),
        32 if a.count(2) == 0 && b.count(2) == 0 => Some(2),
        48 if [a, b].iter().all(|p| p.count(2) == 0 && p.count(4) == 0) => Some(3),
        _ => None,
    }
}

pub fn pair_condition(p: &EvenLattice, q: &EvenLattice, limits: &Limits) -> Result<PairCondition> {
    require_equal_rank(p, q)?;
    let profile_p = count_vectors_by_norm(p, 4, limits)?;
    let profile_q = count_vectors_by_norm(q, 4, limits)?;
    let mu_p = min_norm(p, limits)?;
    let mu_q = min_norm(q, limits)?;
    let mu = mu_p.min(mu_q);
    Ok(PairCondition {
        rank_p: p.rank(),
        rank_q: q.rank(),
        mu_p,
        mu_q,
        mu_condition: p.rank() as i64 <= 8 * mu,
        pair_case: case_from_profiles(p.rank(), &profile_p, &profile_q),
        profile_p,
        profile_q,
    })
}

/// Whether `rank / min(mu(P), mu(Q)) <= 8`, with the full pair data.
pub fn mu_condition(p: &EvenLattice, q: &EvenLattice, limits: &Limits) -> Result<(bool, PairCondition)> {
    let c = pair_condition(p, q, limits)?;
    Ok((c.mu_condition, c))
}

/// The first of the rank-24/32/48 norm-count cases satisfied by the pair.
pub fn pair_case(p: &EvenLattice, q: &EvenLattice, limits: &Limits) -> Result<Option<u8>> {
    if p.rank() != q.rank() {
        return Ok(None);
    }
    let a = count_vectors_by_norm(p, 4, limits)?;
    let b = count_vectors_by_norm(q, 4, limits)?;
    Ok(case_from_profiles(p.rank(), &a, &b))
}

#[derive(Debug, Clone)]
pub struct SchottkyJacobi {
    pub expansion: JacobiExpansion,
    pub condition: PairCondition,
    /// Set when the pair fails the minimal-norm condition.
    pub warning: Option<String>,
}

/// `(theta_{Q,g} - theta_{P,g}) * theta_{2M}^{[g]}`, of weight `(m + h) / 2`.
///
/// The Jacobi factor is only enumerated as far as the difference requires: if
/// the difference has no terms below trace `t`, the product up to `n` needs
/// the Jacobi factor up to `n - t` only.
pub fn schottky_jacobi_candidate(
    p: &EvenLattice,
    q: &EvenLattice,
    index: &JacobiIndex,
    g: usize,
    n: i64,
    limits: &Limits,
) -> Result<SchottkyJacobi> {
    require_equal_rank(p, q)?;
    if !index.is_unimodular() {
        return Err(Error::InvalidArgument("2M must be even unimodular".into()));
    }
    let condition = pair_condition(p, q, limits)?;
    let warning = (!condition.mu_condition).then(|| {
        format!(
            "rank {} exceeds 8 * min norm {}",
            p.rank(),
            condition.mu_p.min(condition.mu_q)
        )
    });
    let diff = theta_difference(q, p, g, n, limits)?;
    let h = index.width() as i64;
    let weight = diff.weight() + h / 2;
    let expansion = match diff.terms().keys().map(|t| t.trace()).min() {
        None => JacobiExpansion::zero(g, index.clone(), weight, n),
        Some(t0) => {
            let jac = jacobi_theta(index, g, n - t0, limits)?;
            shimura_product_to(&diff, &jac, n)?
        }
    };
    Ok(SchottkyJacobi {
        expansion,
        condition,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lim() -> Limits {
        Limits::default()
    }

    #[test]
    fn igusa_low_genus_vanishes() {
        for g in 0..=2 {
            let phi = igusa_form(g, 3, &lim()).unwrap();
            assert!(phi.is_zero(), "genus {g}");
            assert_eq!(phi.weight(), 8);
        }
    }

    #[test]
    fn conditions() {
        let e16 = direct_sum(&e8(), &e8());
        let (ok, c) = mu_condition(&e16, &d16_plus(), &lim()).unwrap();
        assert!(ok);
        assert_eq!((c.mu_p, c.mu_q), (2, 2));
        assert_eq!(c.pair_case, None);
        let e24 = direct_sum(&e16, &e8());
        let d24 = direct_sum(&d16_plus(), &e8());
        let (ok, c) = mu_condition(&e24, &d24, &lim()).unwrap();
        assert!(!ok);
        assert_eq!(c.pair_case, Some(1));
        assert_eq!(c.profile_p.count(2), 720);
        assert_eq!(c.profile_q.count(2), 720);
        assert!(mu_condition(&e8(), &e16, &lim()).is_err());
    }

    #[test]
    fn candidate_weight_and_vanishing() {
        let m = JacobiIndex::from_lattice(&e8()).unwrap();
        let e16 = direct_sum(&e8(), &e8());
        let c = schottky_jacobi_candidate(&e16, &d16_plus(), &m, 2, 3, &lim()).unwrap();
        assert_eq!(c.expansion.weight(), 12);
        assert!(c.expansion.is_zero());
        assert!(c.warning.is_none());
    }
}
