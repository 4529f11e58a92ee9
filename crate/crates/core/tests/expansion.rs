use proptest::prelude::*;

use stable_theta::expansion::{
    block_psd, canonical_key, deserialize, is_psd_half_integral, linear_combine, serialize, AnyExpansion, Expansion,
    HalfIntegralMatrix, JacobiIndex,
};
use stable_theta::lattice::{d16_plus, e8};
use stable_theta::theta::{jacobi_theta, siegel_theta, theta_sc};
use stable_theta::{Error, EvenLattice, IntMatrix, JacobiExpansion, Limits, SiegelExpansion};

fn lim() -> Limits {
    Limits::default()
}

fn a2() -> EvenLattice {
    EvenLattice::from_rows(&[vec![2, -1], vec![-1, 2]], "A2").unwrap()
}

#[derive(Debug, Clone)]
enum Recipe {
    Siegel {
        lattice: u8,
        genus: usize,
        bound: i64,
        scale: i128,
    },
    Jacobi {
        index: u8,
        genus: usize,
        bound: i64,
        scale: i128,
    },
    Twisted {
        genus: usize,
        bound: i64,
    },
    Zero {
        genus: usize,
        weight: i64,
        bound: i64,
    },
}

fn lattice(i: u8) -> EvenLattice {
    match i % 3 {
        0 => e8(),
        1 => d16_plus(),
        _ => a2(),
    }
}

fn build(r: &Recipe) -> AnyExpansion {
    match *r {
        Recipe::Siegel {
            lattice: l,
            genus,
            bound,
            scale,
        } => {
            let th = siegel_theta(&lattice(l), genus, bound, &lim()).unwrap();
            linear_combine(&[(scale, &th)]).unwrap().into()
        }
        Recipe::Jacobi {
            index,
            genus,
            bound,
            scale,
        } => {
            let l = if index % 2 == 0 { e8() } else { a2() };
            let m = JacobiIndex::from_lattice(&l).unwrap();
            let th = jacobi_theta(&m, genus, bound, &lim()).unwrap();
            linear_combine(&[(scale, &th)]).unwrap().into()
        }
        Recipe::Twisted { genus, bound } => {
            let c = IntMatrix::from_rows(&[
                vec![1, 0],
                vec![1, 1],
                vec![0, 0],
                vec![0, 0],
                vec![0, 0],
                vec![0, 0],
                vec![0, 0],
                vec![0, 0],
            ])
            .unwrap();
            theta_sc(&e8(), &c, genus, bound, &lim()).unwrap().into()
        }
        Recipe::Zero { genus, weight, bound } => SiegelExpansion::zero(genus, weight, bound).into(),
    }
}

fn recipe() -> impl Strategy<Value = Recipe> {
    let scale = prop_oneof![Just(1i128), -3i128..=3, Just(i64::MAX as i128 * 1000)];
    prop_oneof![
        (0u8..3, 0usize..=2, 0i64..=2, scale.clone()).prop_map(|(lattice, genus, bound, scale)| Recipe::Siegel {
            lattice,
            genus,
            bound,
            scale
        }),
        (0u8..2, 0usize..=2, 0i64..=2, scale).prop_map(|(index, genus, bound, scale)| Recipe::Jacobi {
            index,
            genus,
            bound,
            scale
        }),
        (0usize..=2, 0i64..=2).prop_map(|(genus, bound)| Recipe::Twisted { genus, bound }),
        (0usize..=3, -4i64..=12, 0i64..=5).prop_map(|(genus, weight, bound)| Recipe::Zero { genus, weight, bound }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialization_round_trips(r in recipe()) {
        let e = build(&r);
        let text = e.to_json();
        let back = deserialize(&text).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn combination_is_linear(a in -5i128..=5, b in -5i128..=5, bound in 0i64..=3) {
        let x = siegel_theta(&e8(), 2, bound, &lim()).unwrap();
        let y = siegel_theta(&d16_plus(), 2, bound, &lim()).unwrap().with_weight(4);
        let z = linear_combine(&[(a, &x), (b, &y)]).unwrap();
        for t in x.terms().keys().chain(y.terms().keys()) {
            prop_assert_eq!(z.coeff(t), a * x.coeff(t) + b * y.coeff(t));
        }
        prop_assert!(z.terms().values().all(|&c| c != 0));
        let back = linear_combine(&[(1, &z), (-a, &x), (-b, &y)]).unwrap();
        prop_assert!(back.is_zero());
    }

    #[test]
    fn truncation_keeps_low_terms(n in 0i64..=3) {
        let x = siegel_theta(&e8(), 2, 3, &lim()).unwrap();
        let t = x.truncate(n);
        prop_assert_eq!(t.bound(), n);
        let direct = siegel_theta(&e8(), 2, n, &lim()).unwrap();
        prop_assert_eq!(t.terms(), direct.terms());
    }
}

fn t2(rows: &[&[i64]]) -> HalfIntegralMatrix {
    HalfIntegralMatrix::from_doubled_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn canonical_keys_are_fixed_width() {
    assert_eq!(canonical_key(&t2(&[&[2]]), None), "g1:+0000000002");
    assert_eq!(
        canonical_key(&t2(&[&[2, -1], &[-1, 2]]), None),
        "g2:+0000000002,-0000000001,+0000000002"
    );
    let r = IntMatrix::from_rows(&[vec![1, -2]]).unwrap();
    assert_eq!(
        canonical_key(&t2(&[&[2]]), Some(&r)),
        "g1:+0000000002|h2:+0000000001,-0000000002"
    );
    assert_ne!(canonical_key(&t2(&[&[-4]]), None), canonical_key(&t2(&[&[4]]), None));
    assert_ne!(
        canonical_key(&t2(&[&[2]]), None),
        canonical_key(&t2(&[&[2]]), Some(&IntMatrix::zeros(1, 0)))
    );
}

#[test]
fn psd_and_block_conditions() {
    assert!(is_psd_half_integral(&t2(&[&[2, 2], &[2, 2]])));
    assert!(!is_psd_half_integral(&t2(&[&[0, 1], &[1, 0]])));
    let m = JacobiIndex::from_lattice(&a2()).unwrap();
    let r = IntMatrix::from_rows(&[vec![2, -1]]).unwrap();
    assert!(block_psd(&t2(&[&[2]]), &r, &m).unwrap());
    let far = IntMatrix::from_rows(&[vec![4, 0]]).unwrap();
    assert!(!block_psd(&t2(&[&[2]]), &far, &m).unwrap());
    assert!(matches!(
        block_psd(&t2(&[&[2]]), &IntMatrix::zeros(1, 3), &m),
        Err(Error::Shape(_))
    ));
}

#[test]
fn validating_constructors() {
    assert!(SiegelExpansion::new(1, 4, 1, [(t2(&[&[4]]), 1)]).is_err());
    assert!(SiegelExpansion::new(1, 4, 1, [(t2(&[&[-2]]), 1)]).is_err());
    let e = SiegelExpansion::new(1, 4, 2, [(t2(&[&[2]]), 3), (t2(&[&[2]]), -3), (t2(&[&[0]]), 1)]).unwrap();
    assert_eq!(e.len(), 1);
    let m = JacobiIndex::from_lattice(&a2()).unwrap();
    let key = stable_theta::JacobiKey::new(&t2(&[&[0]]), &IntMatrix::from_rows(&[vec![1, 0]]).unwrap()).unwrap();
    assert!(JacobiExpansion::new(1, m, 1, 1, [(key, 1)]).is_err());
}

#[test]
fn mixing_incompatible_expansions_fails() {
    let x = siegel_theta(&e8(), 1, 2, &lim()).unwrap();
    let y = siegel_theta(&d16_plus(), 1, 2, &lim()).unwrap();
    assert!(linear_combine(&[(1, &x), (1, &y)]).is_err());
    let z = siegel_theta(&e8(), 2, 2, &lim()).unwrap();
    assert!(linear_combine(&[(1, &x), (1, &z)]).is_err());
    assert!(matches!(
        linear_combine(&[(i128::MAX, &x), (i128::MAX, &x)]),
        Err(Error::Overflow)
    ));
}

#[test]
fn format_errors_name_the_field() {
    let cases = [
        (
            r#"{"kind":"siegel","genus":2,"weight":4,"bound":2,"terms":[{"T2":[[2,1],[0,2]],"c":"1"}]}"#,
            "terms[0].T2",
        ),
        (
            r#"{"kind":"siegel","genus":1,"weight":4,"bound":2,"terms":[{"T2":[[2]],"c":"x"}]}"#,
            "terms[0].c",
        ),
        (
            r#"{"kind":"siegel","genus":1,"weight":4,"bound":2,"terms":[{"T2":[[2]],"c":"1"},{"T2":[[2]],"c":"2"}]}"#,
            "terms[1]",
        ),
        (
            r#"{"kind":"jacobi","genus":1,"weight":4,"bound":2,"terms":[]}"#,
            "index_gram_doubled",
        ),
        (
            r#"{"kind":"modular","genus":1,"weight":4,"bound":2,"terms":[]}"#,
            "kind",
        ),
    ];
    for (text, loc) in cases {
        match deserialize(text) {
            Err(Error::Format { location, .. }) => assert_eq!(location, loc, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn serialized_bytes_are_stable() {
    let th = siegel_theta(&e8(), 1, 2, &lim()).unwrap();
    assert_eq!(
        serialize(&th),
        "{\"kind\":\"siegel\",\"genus\":1,\"weight\":4,\"bound\":2,\"terms\":[{\"T2\":[[0]],\"c\":\"1\"},{\"T2\":[[2]],\"c\":\"240\"},{\"T2\":[[4]],\"c\":\"2160\"}]}\n"
    );
}
