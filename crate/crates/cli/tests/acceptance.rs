//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL` line;
//! the target exits nonzero if any criterion fails.

use std::cell::Cell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use stable_theta::expansion::{
    block_psd, deserialize, linear_combine, singular_support_check, AnyExpansion, Expansion, HalfIntegralMatrix,
    JacobiIndex,
};
use stable_theta::lattice::{d16_plus, direct_sum, e8};
use stable_theta::numeric::{check_inversion_genus1, check_translation, eval_theta_direct, SiegelJacobiPoint};
use stable_theta::operators::{shimura_product, siegel_jacobi_psi, siegel_phi, verify_stable};
use stable_theta::schottky::{igusa_form, mu_condition, pair_case, pair_condition, schottky_jacobi_candidate};
use stable_theta::theta::{jacobi_theta, siegel_theta, siegel_theta_uniform_diagonal, theta_sc};
use stable_theta::{EvenLattice, IntMatrix, Limits};

fn lim() -> Limits {
    Limits::default()
}

fn sigma3(n: u64) -> u64 {
    (1..=n).filter(|d| n.is_multiple_of(*d)).map(|d| d.pow(3)).sum()
}

/// E8 vectors of each norm `2n`, `n <= max_half`, by naive enumeration of the
/// doubled-coordinate box: all `y_i` of one parity, `sum y_i = 0 mod 4`.
fn e8_box(max_half: u64) -> Vec<u64> {
    let r = (2.0 * ((2 * max_half) as f64).sqrt()).floor() as i64;
    let mut out = vec![0u64; max_half as usize + 1];
    for parity in [0i64, 1] {
        let vals: Vec<i64> = (-r..=r).filter(|y| y.rem_euclid(2) == parity).collect();
        let mut idx = [0usize; 8];
        'outer: loop {
            let (mut s, mut t) = (0i64, 0i64);
            for &i in &idx {
                s += vals[i] * vals[i];
                t += vals[i];
            }
            if t.rem_euclid(4) == 0 && s % 8 == 0 && s as u64 <= 8 * max_half {
                out[(s / 8) as usize] += 1;
            }
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < vals.len() {
                    continue 'outer;
                }
                *slot = 0;
            }
            break;
        }
    }
    out
}

fn t2(rows: &[&[i64]]) -> HalfIntegralMatrix {
    HalfIntegralMatrix::from_doubled_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn criterion_1() -> String {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_stable-theta"))
        .args(["theta", "siegel", "--lattice", "E8", "--genus", "1", "--bound", "5"])
        .env_remove("STABLE_THETA_CONFIG")
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    assert!(out.status.success());
    let AnyExpansion::Siegel(th) = deserialize(std::str::from_utf8(&out.stdout).unwrap()).unwrap() else {
        panic!("expected a siegel document");
    };
    let got: Vec<i128> = (0..=5).map(|n| th.coeff(&t2(&[&[2 * n]]))).collect();
    assert_eq!(got, [1, 240, 2160, 6720, 17520, 30240]);
    assert_eq!(th.len(), 6);
    let naive = e8_box(5);
    for n in 0..=5u64 {
        assert_eq!(got[n as usize], naive[n as usize] as i128, "box, n = {n}");
        if n > 0 {
            assert_eq!(got[n as usize], 240 * sigma3(n) as i128, "divisor sum, n = {n}");
        }
    }
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    format!("coefficients {got:?} in {elapsed:.2?}")
}

fn criterion_2() -> String {
    let start = Instant::now();
    for g in 1..=3 {
        let phi = igusa_form(g, 3, &lim()).unwrap();
        assert_eq!(phi.weight(), 8);
        assert!(phi.is_zero(), "genus {g}");
    }
    let e16 = direct_sum(&e8(), &e8());
    let a = siegel_theta_uniform_diagonal(&e16, 4, 2, &lim()).unwrap();
    let b = siegel_theta_uniform_diagonal(&d16_plus(), 4, 2, &lim()).unwrap();
    let nonzero: Vec<_> = a
        .keys()
        .chain(b.keys())
        .filter(|t| a.get(*t).copied().unwrap_or(0) != b.get(*t).copied().unwrap_or(0))
        .collect();
    assert!(!nonzero.is_empty());
    let t = nonzero[0];
    let c = a.get(t).copied().unwrap_or(0) - b.get(t).copied().unwrap_or(0);
    format!(
        "phi_1..3 = 0; phi_4 at 2T = {:?} is {c} ({:.1?})",
        t.doubled().to_rows(),
        start.elapsed()
    )
}

fn criterion_3() -> String {
    let start = Instant::now();
    for l in [e8(), d16_plus(), direct_sum(&e8(), &e8())] {
        let fam: Vec<_> = (0..=4).map(|g| siegel_theta(&l, g, 2, &lim()).unwrap()).collect();
        for g in 1..=4 {
            assert_eq!(siegel_phi(&fam[g]).unwrap(), fam[g - 1], "{} genus {g}", l.label());
        }
        assert!(verify_stable(&fam).unwrap().pass());
    }
    let m = JacobiIndex::from_lattice(&e8()).unwrap();
    let fam: Vec<_> = (0..=3).map(|g| jacobi_theta(&m, g, 2, &lim()).unwrap()).collect();
    for g in 1..=3 {
        assert_eq!(siegel_jacobi_psi(&fam[g]).unwrap(), fam[g - 1], "jacobi genus {g}");
    }
    assert!(verify_stable(&fam).unwrap().pass());
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60));
    format!("Siegel families to genus 4 and Jacobi to genus 3 in {elapsed:.1?}")
}

fn criterion_4() -> String {
    let m = JacobiIndex::from_lattice(&e8()).unwrap();
    let e16 = direct_sum(&e8(), &e8());
    let mut sizes = Vec::new();
    for g in 2..=3 {
        let f = siegel_theta(&e16, g, 2, &lim()).unwrap();
        let th = jacobi_theta(&m, g, 2, &lim()).unwrap();
        let lhs = siegel_jacobi_psi(&shimura_product(&f, &th).unwrap()).unwrap();
        let rhs = shimura_product(&siegel_phi(&f).unwrap(), &siegel_jacobi_psi(&th).unwrap()).unwrap();
        assert_eq!(lhs, rhs, "genus {g}");
        sizes.push(lhs.len());
    }
    format!("genus 2 and 3 agree on {sizes:?} keys")
}

fn check_singular_jacobi(
    th: &stable_theta::JacobiExpansion,
    lambda_from_r: impl Fn(&IntMatrix) -> IntMatrix,
    gram: &IntMatrix,
) {
    let rep = singular_support_check(th).unwrap();
    assert!(rep.all_singular, "witness {:?}", rep.witness);
    for (k, &c) in th.terms() {
        assert_eq!(c, 1);
        assert!(block_psd(&k.t(), &k.r(), th.index()).unwrap());
        let lambda = lambda_from_r(&k.r());
        let g = lambda.mul(gram).unwrap().mul(&lambda.transpose()).unwrap();
        assert_eq!(g, k.t().doubled());
    }
}

fn criterion_5() -> String {
    let m = JacobiIndex::from_lattice(&e8()).unwrap();
    let two_m = m.doubled().clone();
    let (adj, det) = two_m.adjugate().unwrap();
    assert_eq!(det, 1);
    // with c of full rank, lambda = R (S c)^{-1} up to the integrality checked below
    let mut c = IntMatrix::identity(8);
    c.set(0, 1, 1);
    let sc = e8().gram().mul(&c).unwrap();
    let (sc_adj, sc_det) = sc.adjugate().unwrap();
    let mut checked = 0;
    for g in 1..=2 {
        for n in 0..=3 {
            let th = jacobi_theta(&m, g, n, &lim()).unwrap();
            check_singular_jacobi(&th, |r| r.mul(&adj).unwrap(), &two_m);
            checked += th.len();
            {
                let tw = theta_sc(&e8(), &c, g, n, &lim()).unwrap();
                check_singular_jacobi(
                    &tw,
                    |r| {
                        let scaled = r.mul(&sc_adj).unwrap();
                        let rows: Vec<Vec<i64>> = scaled
                            .to_rows()
                            .into_iter()
                            .map(|row| {
                                row.into_iter()
                                    .map(|x| {
                                        assert_eq!(x % sc_det, 0);
                                        x / sc_det
                                    })
                                    .collect()
                            })
                            .collect();
                        IntMatrix::from_rows(&rows).unwrap()
                    },
                    e8().gram(),
                );
                checked += tw.len();
            }
        }
    }
    format!("{checked} coefficients singular, 0/1, lambda recovered")
}

fn criterion_6() -> String {
    let e16 = direct_sum(&e8(), &e8());
    let (ok, cond) = mu_condition(&e16, &d16_plus(), &lim()).unwrap();
    assert!(ok);
    assert_eq!((cond.rank_p, cond.mu_p.min(cond.mu_q)), (16, 2));
    let m = JacobiIndex::from_lattice(&e8()).unwrap();
    let fam: Vec<_> = (0..=3)
        .map(|g| {
            schottky_jacobi_candidate(&e16, &d16_plus(), &m, g, 3, &lim())
                .unwrap()
                .expansion
        })
        .collect();
    for (g, f) in fam.iter().enumerate() {
        assert_eq!(f.weight(), 12);
        assert!(f.is_zero(), "genus {g}");
    }
    assert!(verify_stable(&fam).unwrap().pass());
    "mu condition holds, F_0..F_3 = 0 of weight 12, stable".into()
}

fn criterion_7() -> String {
    let e24 = direct_sum(&direct_sum(&e8(), &e8()), &e8());
    let d24 = direct_sum(&d16_plus(), &e8());
    let c = pair_condition(&e24, &d24, &lim()).unwrap();
    assert_eq!(c.pair_case, Some(1));
    assert_eq!((c.profile_p.count(2), c.profile_q.count(2)), (720, 720));
    assert_eq!(pair_case(&direct_sum(&e8(), &e8()), &d16_plus(), &lim()).unwrap(), None);
    "(E8^3, D16+ + E8) is case 1 with 720 roots each; (E8+E8, D16+) is none".into()
}

fn criterion_8() -> String {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for l in [e8(), d16_plus()] {
        for tau in [Complex64::new(0.0, 1.2), Complex64::new(0.3, 1.1)] {
            let r = check_inversion_genus1(&l, tau, 1e-8, &lim()).unwrap();
            assert!(r.residual < 1e-8, "{} at {tau}: {}", l.label(), r.residual);
            worst = worst.max(r.residual);
        }
    }
    let th = siegel_theta(&e8(), 1, 6, &lim()).unwrap();
    let p = SiegelJacobiPoint::genus1(Complex64::new(0.3, 1.1)).unwrap();
    assert_eq!(check_translation(&th, &p, &IntMatrix::identity(1)).unwrap(), 0.0);
    let th2 = siegel_theta(&e8(), 2, 3, &lim()).unwrap();
    let q = SiegelJacobiPoint::diagonal(&[Complex64::new(0.1, 1.0), Complex64::new(0.4, 1.3)]).unwrap();
    let shift = IntMatrix::from_rows(&[vec![1, -1], vec![-1, 2]]).unwrap();
    assert_eq!(check_translation(&th2, &q, &shift).unwrap(), 0.0);

    let i = |y: f64| Complex64::new(0.0, y);
    let two = SiegelJacobiPoint::diagonal(&[i(1.5), i(2.0)]).unwrap();
    let lhs = eval_theta_direct(&e8(), 2, &two, 8, &lim()).unwrap();
    let a = eval_theta_direct(&e8(), 1, &SiegelJacobiPoint::genus1(i(1.5)).unwrap(), 8, &lim()).unwrap();
    let b = eval_theta_direct(&e8(), 1, &SiegelJacobiPoint::genus1(i(2.0)).unwrap(), 8, &lim()).unwrap();
    let block = (lhs - a * b).norm();
    assert!(block < 1e-9, "block residual {block}");
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    format!("inversion residual <= {worst:.1e}, translation 0, block residual {block:.1e}, {elapsed:.1?}")
}

#[derive(Debug, Clone)]
enum Call {
    Siegel(u8, usize, i64),
    Jacobi(usize, i64),
    Twisted(usize, i64),
    Igusa(usize, i64),
    Phi(u8, usize),
    Scaled(u8, i64, i128),
}

fn catalog(i: u8) -> EvenLattice {
    match i % 3 {
        0 => e8(),
        1 => d16_plus(),
        _ => direct_sum(&e8(), &e8()),
    }
}

fn build(call: &Call) -> AnyExpansion {
    let l = lim();
    match *call {
        Call::Siegel(i, g, n) => siegel_theta(&catalog(i), g, n, &l).unwrap().into(),
        Call::Jacobi(g, n) => jacobi_theta(&JacobiIndex::from_lattice(&e8()).unwrap(), g, n, &l)
            .unwrap()
            .into(),
        Call::Twisted(g, n) => {
            let mut c = IntMatrix::zeros(8, 2);
            c.set(0, 0, 1);
            c.set(1, 1, 1);
            c.set(2, 1, -1);
            theta_sc(&e8(), &c, g, n, &l).unwrap().into()
        }
        Call::Igusa(g, n) => igusa_form(g, n, &l).unwrap().into(),
        Call::Phi(i, g) => siegel_phi(&siegel_theta(&catalog(i), g, 2, &l).unwrap())
            .unwrap()
            .into(),
        Call::Scaled(i, n, s) => linear_combine(&[(s, &siegel_theta(&catalog(i), 1, n, &l).unwrap())])
            .unwrap()
            .into(),
    }
}

fn call() -> impl Strategy<Value = Call> {
    prop_oneof![
        (0u8..3, 0usize..=3, 0i64..=2).prop_map(|(i, g, n)| Call::Siegel(i, g, n)),
        (0usize..=2, 0i64..=2).prop_map(|(g, n)| Call::Jacobi(g, n)),
        (0usize..=2, 0i64..=2).prop_map(|(g, n)| Call::Twisted(g, n)),
        (0usize..=2, 0i64..=2).prop_map(|(g, n)| Call::Igusa(g, n)),
        (0u8..3, 1usize..=3).prop_map(|(i, g)| Call::Phi(i, g)),
        (0u8..3, 0i64..=4, prop_oneof![-9i128..=9, Just(i64::MAX as i128 * 1000)])
            .prop_map(|(i, n, s)| Call::Scaled(i, n, s)),
    ]
}

fn criterion_9() -> String {
    let config = Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let count = Cell::new(0);
    runner
        .run(&call(), |c| {
            count.set(count.get() + 1);
            let e = build(&c);
            let text = e.to_json();
            let back = deserialize(&text).map_err(|err| TestCaseError::fail(format!("{c:?}: {err}")))?;
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.to_json(), text);
            Ok(())
        })
        .unwrap();
    let count = count.get();
    assert!(count >= 100);
    format!("{count} random documents round-trip byte for byte")
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> String); 9] = [
        ("genus-1 coefficients of E8", criterion_1),
        ("Igusa form vanishing and genus 4", criterion_2),
        ("stability of theta families", criterion_3),
        ("intertwining of Psi and Phi", criterion_4),
        ("singular support", criterion_5),
        ("Schottky-Jacobi family", criterion_6),
        ("pair case detector", criterion_7),
        ("numeric modularity", criterion_8),
        ("serialization round trip", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {}: FAIL {name}: {msg}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
