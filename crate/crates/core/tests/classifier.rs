use fieldsup::params::{classify_case, CaseTag, RawFieldParams};

fn params(alpha1: f64, alpha2: f64, beta: f64, a3: f64) -> RawFieldParams {
    RawFieldParams { alpha1, alpha2, beta, b: 1.0, a1: 1.0, a2: 1.0, a3, s: 1.0, t: 1.0 }
}

fn truth_table() -> Vec<(RawFieldParams, CaseTag)> {
    let text = include_str!("data/classifier_truth.csv");
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let x = |i: usize| f[i].parse::<f64>().unwrap();
            (params(x(0), x(1), x(2), x(3)), f[4].parse::<CaseTag>().unwrap())
        })
        .collect()
}

#[test]
fn lattice_matches_truth_table() {
    let table = truth_table();
    assert_eq!(table.len(), 7 * 7 * 7 * 2);
    let mismatches: Vec<_> = table
        .iter()
        .filter_map(|(raw, want)| {
            let got = classify_case(&raw.validate().unwrap());
            (got != *want).then_some((raw.alpha1, raw.alpha2, raw.beta, raw.a3, got, *want))
        })
        .collect();
    assert!(mismatches.is_empty(), "{mismatches:?}");
}

#[test]
fn tags_respect_exponent_ordering() {
    for (raw, _) in truth_table() {
        let tag = classify_case(&raw.validate().unwrap());
        let zero = matches!(tag, CaseTag::A3ZeroI | CaseTag::A3ZeroII | CaseTag::A3ZeroIII);
        assert_eq!(zero, raw.a3 == 0.0);
        if matches!(tag, CaseTag::VI | CaseTag::VII) {
            assert!(raw.alpha1 > raw.alpha2);
        }
        if matches!(tag, CaseTag::III | CaseTag::V) {
            assert!(raw.alpha1 < raw.alpha2);
        }
    }
}

#[test]
fn every_tag_is_reachable() {
    let seen: std::collections::BTreeSet<CaseTag> =
        truth_table().iter().map(|(raw, _)| classify_case(&raw.validate().unwrap())).collect();
    assert_eq!(seen.len(), CaseTag::ALL.len());
}

#[test]
fn equality_uses_tolerance_of_1e_12() {
    let tag = |beta: f64| classify_case(&params(1.0, 1.0, beta, -1.0).validate().unwrap());
    assert_eq!(tag(1.0 + 5e-13), CaseTag::II);
    assert_eq!(tag(1.0 + 1e-9), CaseTag::I);
    assert_eq!(tag(1.0 - 1e-9), CaseTag::IV);
    // a3 is compared exactly.
    assert_eq!(classify_case(&params(1.0, 1.0, 2.0, 1e-300).validate().unwrap()), CaseTag::I);
}

#[test]
fn documented_examples() {
    let tag = |a1: f64, a2: f64, beta: f64, a3: f64| classify_case(&params(a1, a2, beta, a3).validate().unwrap());
    assert_eq!(tag(1.0, 1.0, 3.0, -1.0), CaseTag::I);
    assert_eq!(tag(1.0, 1.0, 1.0, -1.0), CaseTag::II);
    assert_eq!(tag(1.0, 2.0, 2.0, -1.0), CaseTag::III);
    assert_eq!(tag(1.0, 1.0, 0.5, 0.0), CaseTag::A3ZeroIII);
    // beta equal to the smaller exponent and below the larger one.
    assert_eq!(tag(1.0, 1.5, 1.0, -1.0), CaseTag::V);
    assert_eq!(tag(1.5, 1.0, 1.0, -1.0), CaseTag::VII);
}
