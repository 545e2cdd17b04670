mod common;

use common::{masks, rectangle_oracle};
use dcopula::pmf::{JointPmf, MarginPair, SupportPattern};
use dcopula::scaling::{classify_existence, copula_pmf, FeasibilityTag, IpfOptions};
use dcopula::Error;
use ndarray::array;

#[test]
fn flow_agrees_with_rectangle_enumeration() {
    let mut checked = 0;
    for r in 2..=4 {
        for s in 2..=4 {
            let targets = MarginPair::uniform(r, s);
            for mask in masks(r, s, 5) {
                let (tag, forced) = rectangle_oracle(&mask);
                let support = SupportPattern::new(mask.clone()).unwrap();
                let class = classify_existence(&support, &targets).unwrap();
                assert_eq!(class.tag.to_string(), tag, "mask {mask:?}");
                let mut got = class.forced_zeros.clone();
                got.sort();
                assert_eq!(got, forced, "mask {mask:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn canonical_cases() {
    let uniform2 = MarginPair::uniform(2, 2);
    let b1 = SupportPattern::from_rows(&[[false, true], [true, false]]).unwrap();
    assert_eq!(classify_existence(&b1, &uniform2).unwrap().tag, FeasibilityTag::B1);

    let b2 = SupportPattern::from_rows(&[[false, true], [true, true]]).unwrap();
    let class = classify_existence(&b2, &uniform2).unwrap();
    assert_eq!(class.tag, FeasibilityTag::B2);
    assert_eq!(class.forced_zeros, vec![(1, 1)]);

    let c = SupportPattern::from_rows(&[
        [false, false, true],
        [false, false, true],
        [true, true, true],
    ])
    .unwrap();
    assert_eq!(classify_existence(&c, &MarginPair::uniform(3, 3)).unwrap().tag, FeasibilityTag::C);
}

#[test]
fn fits_follow_the_class() {
    let opts = IpfOptions::default();
    let b1 = JointPmf::new(array![[0.0, 0.3], [0.7, 0.0]]).unwrap();
    let (cop, d) = copula_pmf(&b1, &opts).unwrap();
    assert_eq!(d.classification.tag, FeasibilityTag::B1);
    assert_eq!(cop.values(), &array![[0.0, 0.5], [0.5, 0.0]]);

    let b2 = JointPmf::new(array![[0.0, 0.4], [0.2, 0.4]]).unwrap();
    let (cop, d) = copula_pmf(&b2, &opts).unwrap();
    assert_eq!(d.classification.tag, FeasibilityTag::B2);
    assert_eq!(cop.get(1, 1), 0.0);
    assert!(cop.uniform_margin_deviation() <= 1e-12);

    let c = JointPmf::new(array![[0.0, 0.0, 0.2], [0.0, 0.0, 0.2], [0.2, 0.2, 0.2]]).unwrap();
    match copula_pmf(&c, &opts) {
        Err(Error::Infeasible(class)) => {
            assert_eq!(class.tag, FeasibilityTag::C);
            let (rows, cols) = &class.tight_rectangles[0];
            assert!(rows.len() * 3 + cols.len() * 3 > 9);
        }
        other => panic!("expected class C, got {other:?}"),
    }
}
