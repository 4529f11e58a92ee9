//! Positive definite even lattices given by Gram matrices, the built-in catalog,
//! and norm statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::config::Limits;
use crate::enumerate::FinckePohst;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

/// An integral, even, positive definite Gram matrix `G`; the pairing is `Q(x, y) = x^T G y`.
#[derive(Clone, PartialEq, Eq)]
pub struct EvenLattice {
    name: Option<String>,
    gram: IntMatrix,
}

impl EvenLattice {
    pub fn new(gram: IntMatrix, name: Option<String>) -> Result<Self> {
        if !gram.is_symmetric() {
            return Err(Error::InvalidArgument("Gram matrix is not symmetric".into()));
        }
        if let Some(i) = (0..gram.rows()).find(|&i| gram.get(i, i) % 2 != 0) {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry {i} of the Gram matrix is odd"
            )));
        }
        if !gram.is_positive_definite() {
            return Err(Error::InvalidArgument("Gram matrix is not positive definite".into()));
        }
        Ok(Self { name, gram })
    }

    pub fn from_rows(rows: &[Vec<i64>], name: &str) -> Result<Self> {
        Self::new(IntMatrix::from_rows(rows)?, Some(name.to_string()))
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &IntMatrix {
        &self.gram
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("rank-{} lattice", self.rank()))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn det(&self) -> BigInt {
        self.gram.det()
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().is_one()
    }

    /// `Q(x, y)`.
    pub fn pair(&self, x: &[i64], y: &[i64]) -> i64 {
        let m = self.rank();
        let mut s = 0;
        for i in 0..m {
            if x[i] == 0 {
                continue;
            }
            let row = self.gram.row(i);
            let mut t = 0;
            for j in 0..m {
                t += row[j] * y[j];
            }
            s += x[i] * t;
        }
        s
    }

    /// `G x`, so that `Q(x, y) = (G x) . y`.
    pub fn apply(&self, x: &[i64]) -> Vec<i64> {
        (0..self.rank())
            .map(|i| self.gram.row(i).iter().zip(x).map(|(g, v)| g * v).sum())
            .collect()
    }
}

impl fmt::Debug for EvenLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvenLattice")
            .field("name", &self.name)
            .field("rank", &self.rank())
            .finish()
    }
}

/// True iff `gram` is symmetric with even diagonal, positive definite, and of determinant 1.
pub fn is_even_unimodular(gram: &IntMatrix) -> bool {
    gram.is_symmetric()
        && (0..gram.rows()).all(|i| gram.get(i, i) % 2 == 0)
        && gram.is_positive_definite()
        && gram.det().is_one()
}

pub fn direct_sum(a: &EvenLattice, b: &EvenLattice) -> EvenLattice {
    let name = match (a.name(), b.name()) {
        (Some(x), Some(y)) => Some(format!("{x}+{y}")),
        _ => None,
    };
    EvenLattice {
        name,
        gram: a.gram.block_diag(&b.gram),
    }
}

/// The `E8` root lattice in the basis of simple roots (its Cartan matrix).
pub fn e8() -> EvenLattice {
    let mut g = IntMatrix::zeros(8, 8);
    for i in 0..8 {
        g.set(i, i, 2);
    }
    // chain 0-2-3-4-5-6-7 with node 1 attached to node 3
    for (i, j) in [(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)] {
        g.set(i, j, -1);
        g.set(j, i, -1);
    }
    EvenLattice {
        name: Some("E8".into()),
        gram: g,
    }
}

/// `D16+`, the union of `D16` and its coset through `(1/2, ..., 1/2)`.
///
/// Basis: `e_i - e_{i+1}` for `i = 2..15`, `e_15 + e_16`, and `s = (1/2, ..., 1/2)`.
pub fn d16_plus() -> EvenLattice {
    let mut basis: Vec<[f64; 16]> = Vec::new();
    for i in 1..15 {
        let mut v = [0.0; 16];
        v[i] = 1.0;
        v[i + 1] = -1.0;
        basis.push(v);
    }
    let mut v = [0.0; 16];
    v[14] = 1.0;
    v[15] = 1.0;
    basis.push(v);
    basis.push([0.5; 16]);
    let mut g = IntMatrix::zeros(16, 16);
    for i in 0..16 {
        for j in 0..16 {
            let d: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
            g.set(i, j, d.round() as i64);
        }
    }
    EvenLattice {
        name: Some("D16plus".into()),
        gram: g,
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogEntry {
    name: String,
    gram: Vec<Vec<i64>>,
    #[serde(default)]
    allow_non_unimodular: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CatalogFile {
    One(CatalogEntry),
    Many(Vec<CatalogEntry>),
}

/// Named lattices; lookups accept direct-sum expressions such as `E8+E8+E8`.
#[derive(Debug, Clone)]
pub struct Catalog {
    entries: BTreeMap<String, EvenLattice>,
}

impl Default for Catalog {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("E8".to_string(), e8());
        entries.insert("D16plus".to_string(), d16_plus());
        Self { entries }
    }
}

impl Catalog {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn insert(&mut self, lattice: EvenLattice) -> Result<()> {
        let name = lattice
            .name()
            .ok_or_else(|| Error::Catalog("catalog entries need a name".into()))?
            .to_string();
        if name.is_empty() || name.contains('+') || name.contains(char::is_whitespace) {
            return Err(Error::Catalog(format!("invalid catalog name {name:?}")));
        }
        self.entries.insert(name, lattice);
        Ok(())
    }

    /// Adds the lattices of a JSON document: one entry object or an array of them.
    pub fn extend_from_json(&mut self, text: &str, origin: &str) -> Result<()> {
        let file: CatalogFile = serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        let entries = match file {
            CatalogFile::One(e) => vec![e],
            CatalogFile::Many(v) => v,
        };
        for (i, entry) in entries.into_iter().enumerate() {
            let loc = format!("{origin}[{i}] ({})", entry.name);
            let gram = IntMatrix::from_rows(&entry.gram).map_err(|e| Error::format(&loc, e.to_string()))?;
            if !entry.allow_non_unimodular && !is_even_unimodular(&gram) {
                return Err(Error::format(&loc, "Gram matrix is not even unimodular"));
            }
            let lattice = EvenLattice::new(gram, Some(entry.name)).map_err(|e| Error::format(&loc, e.to_string()))?;
            self.insert(lattice).map_err(|e| Error::format(&loc, e.to_string()))?;
        }
        Ok(())
    }

    pub fn extend_from_file(&mut self, path: &Path) -> Result<()> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        self.extend_from_json(&text, &path.display().to_string())
    }

    pub fn get(&self, expr: &str) -> Result<EvenLattice> {
        let mut parts = expr.split('+').map(str::trim);
        let first = parts.next().unwrap_or("");
        let mut acc = self.single(first)?;
        for p in parts {
            acc = direct_sum(&acc, &self.single(p)?);
        }
        Ok(acc)
    }

    fn single(&self, name: &str) -> Result<EvenLattice> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Catalog(format!("unknown lattice {name:?}")))
    }
}

/// Looks a lattice up in the built-in catalog.
pub fn catalog_lattice(name: &str) -> Result<EvenLattice> {
    Catalog::default().get(name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShortVector {
    pub coords: Vec<i64>,
    pub norm: i64,
}

pub const SIGN_CONVENTION: &str = "first nonzero coordinate positive";

/// One representative of each `±` pair of nonzero vectors of norm at most `bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShortVectors {
    pub bound: i64,
    pub sign_convention: &'static str,
    pub vectors: Vec<ShortVector>,
}

fn check_bound(bound: i64) -> Result<()> {
    if bound < 0 {
        return Err(Error::InvalidArgument(format!("negative norm bound {bound}")));
    }
    if bound % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "odd norm bound {bound}: an even lattice has no odd norms"
        )));
    }
    Ok(())
}

/// Sign-reduced vectors `v` with `0 < Q(v, v) <= bound`, sorted by norm then lexicographically.
pub fn short_vectors(lattice: &EvenLattice, bound: i64, limits: &Limits) -> Result<ShortVectors> {
    check_bound(bound)?;
    let fp = FinckePohst::new(lattice.gram())?;
    let mut vectors: Vec<ShortVector> = fp
        .vectors(bound, limits)?
        .into_iter()
        .map(|(coords, norm)| ShortVector { coords, norm })
        .collect();
    vectors.sort_by(|a, b| a.norm.cmp(&b.norm).then_with(|| a.coords.cmp(&b.coords)));
    Ok(ShortVectors {
        bound,
        sign_convention: SIGN_CONVENTION,
        vectors,
    })
}

/// The minimal nonzero norm.
pub fn min_norm(lattice: &EvenLattice, limits: &Limits) -> Result<i64> {
    if lattice.rank() == 0 {
        return Err(Error::InvalidArgument("the zero lattice has no nonzero vectors".into()));
    }
    let fp = FinckePohst::new(lattice.gram())?;
    // the smallest diagonal entry is a norm, so the search terminates there
    let cap = (0..lattice.rank()).map(|i| lattice.gram().get(i, i)).min().unwrap_or(2);
    let mut bound = 2;
    loop {
        let counts = fp.count_by_half_norm(bound, limits)?;
        if let Some(n) = counts.iter().position(|&c| c > 0) {
            return Ok(2 * n as i64);
        }
        if bound >= cap {
            unreachable!("diagonal entry {cap} is a norm");
        }
        bound = (bound * 2).min(cap);
    }
}

/// Number of vectors (both signs) of each nonzero norm up to `bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormProfile {
    pub bound: i64,
    pub counts: BTreeMap<i64, u64>,
}

impl NormProfile {
    pub fn count(&self, norm: i64) -> u64 {
        self.counts.get(&norm).copied().unwrap_or(0)
    }
}

pub fn count_vectors_by_norm(lattice: &EvenLattice, bound: i64, limits: &Limits) -> Result<NormProfile> {
    check_bound(bound)?;
    let fp = FinckePohst::new(lattice.gram())?;
    let half = fp.count_by_half_norm(bound, limits)?;
    let counts = half
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c > 0)
        .map(|(n, &c)| (2 * n as i64, 2 * c))
        .collect();
    Ok(NormProfile { bound, counts })
}

/// Number of vectors (both signs, including zero) of each norm `2n`, indexed by `n`.
pub(crate) fn theta_counts(lattice: &EvenLattice, bound: i64, limits: &Limits) -> Result<Vec<u64>> {
    if lattice.rank() == 0 {
        let mut v = vec![0; (bound.max(0) / 2 + 1) as usize];
        v[0] = 1;
        return Ok(v);
    }
    let fp = FinckePohst::new(lattice.gram())?;
    let mut half = fp.count_by_half_norm(bound, limits)?;
    for c in half.iter_mut() {
        *c *= 2;
    }
    half[0] = 1;
    Ok(half)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lim() -> Limits {
        Limits::default()
    }

    /// Naive enumeration over the box `|x_i| <= r_i`, with `r_i` from the Cholesky radii
    /// `r_i^2 <= B * (G^{-1})_{ii}`.
    fn box_oracle(l: &EvenLattice, bound: i64) -> Vec<(Vec<i64>, i64)> {
        let m = l.rank();
        let (adj, det) = l.gram().adjugate().unwrap();
        let radii: Vec<i64> = (0..m)
            .map(|i| ((bound as f64) * adj.get(i, i) as f64 / det as f64).sqrt().floor() as i64)
            .collect();
        let mut out = Vec::new();
        let mut x = vec![0i64; m];
        fn rec(i: usize, x: &mut Vec<i64>, radii: &[i64], l: &EvenLattice, bound: i64, out: &mut Vec<(Vec<i64>, i64)>) {
            if i == x.len() {
                let n = l.pair(x, x);
                let first_pos = x.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0);
                if n > 0 && n <= bound && first_pos {
                    out.push((x.clone(), n));
                }
                return;
            }
            for v in -radii[i]..=radii[i] {
                x[i] = v;
                rec(i + 1, x, radii, l, bound, out);
            }
            x[i] = 0;
        }
        rec(0, &mut x, &radii, l, bound, &mut out);
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    #[test]
    fn catalog_members_are_even_unimodular() {
        let e = catalog_lattice("E8").unwrap();
        assert_eq!(e.rank(), 8);
        assert!(is_even_unimodular(e.gram()));
        let d = catalog_lattice("D16plus").unwrap();
        assert_eq!(d.rank(), 16);
        assert!(is_even_unimodular(d.gram()));
        let t = catalog_lattice("E8+E8+E8").unwrap();
        assert_eq!(t.rank(), 24);
        assert_eq!(t.name(), Some("E8+E8+E8"));
        assert!(matches!(catalog_lattice("E7"), Err(Error::Catalog(_))));
    }

    #[test]
    fn small_direct_sum_and_unimodularity() {
        let a = EvenLattice::from_rows(&[vec![2]], "A1").unwrap();
        let s = direct_sum(&a, &a);
        assert_eq!(s.gram().to_rows(), vec![vec![2, 0], vec![0, 2]]);
        assert!(!is_even_unimodular(a.gram()));
        assert!(!is_even_unimodular(&IntMatrix::identity(8)));
        let ee = direct_sum(&e8(), &e8());
        assert_eq!(ee.rank(), 16);
        assert!(ee.is_unimodular());
        assert_eq!(direct_sum(&d16_plus(), &e8()).rank(), 24);
    }

    #[test]
    fn rejects_odd_or_indefinite() {
        assert!(EvenLattice::from_rows(&[vec![1]], "x").is_err());
        assert!(EvenLattice::from_rows(&[vec![2, 3], vec![3, 2]], "x").is_err());
        assert!(EvenLattice::from_rows(&[vec![2, 1], vec![0, 2]], "x").is_err());
    }

    #[test]
    fn short_vectors_rank_one() {
        let a = EvenLattice::from_rows(&[vec![2]], "A1").unwrap();
        let sv = short_vectors(&a, 8, &lim()).unwrap();
        let got: Vec<_> = sv.vectors.iter().map(|v| (v.coords.clone(), v.norm)).collect();
        assert_eq!(got, vec![(vec![1], 2), (vec![2], 8)]);
        assert!(short_vectors(&a, 0, &lim()).unwrap().vectors.is_empty());
        assert!(short_vectors(&a, 3, &lim()).is_err());
    }

    #[test]
    fn e8_roots_match_box_oracle() {
        let e = e8();
        let sv = short_vectors(&e, 2, &lim()).unwrap();
        assert_eq!(sv.vectors.len(), 120);
        let oracle = box_oracle(&e, 2);
        let got: Vec<_> = sv.vectors.iter().map(|v| (v.coords.clone(), v.norm)).collect();
        assert_eq!(got, oracle);
    }

    #[test]
    fn short_vectors_match_box_oracle_small_lattices() {
        let a2 = EvenLattice::from_rows(&[vec![2, -1], vec![-1, 2]], "A2").unwrap();
        let d4 = EvenLattice::from_rows(
            &[
                vec![2, -1, 0, 0],
                vec![-1, 2, -1, -1],
                vec![0, -1, 2, 0],
                vec![0, -1, 0, 2],
            ],
            "D4",
        )
        .unwrap();
        for l in [&a2, &d4] {
            for b in [0, 2, 4, 6] {
                let sv = short_vectors(l, b, &lim()).unwrap();
                let got: Vec<_> = sv.vectors.iter().map(|v| (v.coords.clone(), v.norm)).collect();
                assert_eq!(got, box_oracle(l, b), "{} bound {b}", l.label());
            }
        }
    }

    #[test]
    fn norm_profiles() {
        let e = e8();
        assert_eq!(
            count_vectors_by_norm(&e, 2, &lim()).unwrap().counts,
            BTreeMap::from([(2, 240)])
        );
        let p = count_vectors_by_norm(&e, 6, &lim()).unwrap();
        assert_eq!(p.counts, BTreeMap::from([(2, 240), (4, 2160), (6, 6720)]));
        let d = count_vectors_by_norm(&d16_plus(), 2, &lim()).unwrap();
        assert_eq!(d.count(2), 480);
        let ee = count_vectors_by_norm(&direct_sum(&e, &e), 2, &lim()).unwrap();
        assert_eq!(ee.count(2), 480);
        assert!(p.counts.iter().all(|(n, c)| n % 2 == 0 && c % 2 == 0));
    }

    #[test]
    fn minimal_norms() {
        assert_eq!(min_norm(&e8(), &lim()).unwrap(), 2);
        assert_eq!(min_norm(&d16_plus(), &lim()).unwrap(), 2);
        let a = EvenLattice::from_rows(&[vec![2]], "A1").unwrap();
        assert_eq!(min_norm(&a, &lim()).unwrap(), 2);
        let b = EvenLattice::from_rows(&[vec![4, 2], vec![2, 6]], "B").unwrap();
        assert_eq!(min_norm(&b, &lim()).unwrap(), 4);
        assert_eq!(min_norm(&direct_sum(&b, &a), &lim()).unwrap(), 2);
    }

    #[test]
    fn catalog_json_extension() {
        let mut cat = Catalog::default();
        cat.extend_from_json(
            r#"{"name": "A2", "gram": [[2,-1],[-1,2]], "allow_non_unimodular": true}"#,
            "x",
        )
        .unwrap();
        assert_eq!(cat.get("A2+E8").unwrap().rank(), 10);
        let err = cat
            .extend_from_json(r#"[{"name": "A1", "gram": [[2]]}]"#, "y")
            .unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        let odd = cat.extend_from_json(r#"{"name": "Z", "gram": [[1]], "allow_non_unimodular": true}"#, "z");
        assert!(odd.is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let tight = Limits {
            node_budget: 10,
            threads: 1,
        };
        assert!(matches!(short_vectors(&e8(), 4, &tight), Err(Error::Budget { .. })));
    }

    #[test]
    fn threads_do_not_change_results() {
        let par = Limits {
            node_budget: u64::MAX,
            threads: 3,
        };
        let a = short_vectors(&d16_plus(), 4, &lim()).unwrap();
        let b = short_vectors(&d16_plus(), 4, &par).unwrap();
        assert_eq!(a, b);
    }
}
