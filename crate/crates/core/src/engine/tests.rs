use super::*;
use crate::classgroup::QuadForm;
use crate::modeval::{naive_j, reduce_argument, TauPoint};

fn disc(d: i64) -> Discriminant {
    Discriminant::from_i64(d).unwrap()
}

fn ints(c: &[&str]) -> Vec<Integer> {
    c.iter().map(|s| s.parse().unwrap()).collect()
}

fn run(d: i64, strategy: Strategy) -> ClassPolynomial {
    let config = PipelineConfig {
        strategy,
        ..Default::default()
    };
    compute_class_polynomial(&disc(d), &config).unwrap().0
}

#[test]
fn small_examples() {
    assert_eq!(run(-3, Strategy::Sparse).coeffs(), ints(&["0", "1"]));
    assert_eq!(run(-4, Strategy::Sparse).coeffs(), ints(&["-1728", "1"]));
    let h23 = ints(&["12771880859375", "-5151296875", "3491750", "1"]);
    for s in Strategy::ALL {
        assert_eq!(run(-23, s).coeffs(), h23, "{s}");
    }
    assert_eq!(
        run(-15, Strategy::Multipoint).coeffs(),
        ints(&["-121287375", "191025", "1"])
    );
    assert_eq!(
        run(-163, Strategy::Agm).coeffs(),
        ints(&["262537412640768000", "1"])
    );
    assert_eq!(run(-16, Strategy::Sparse).coeffs(), ints(&["-287496", "1"]));
}

#[test]
fn strategies_agree_on_conjugates() {
    let forms = enumerate_naive(&disc(-23));
    let prec = Precision::at_least(256);
    let (sparse, _) = conjugates(forms.forms(), prec, Strategy::Sparse, None).unwrap();
    for s in [Strategy::Multipoint, Strategy::Agm] {
        let (other, _) = conjugates(forms.forms(), prec, s, None).unwrap();
        assert!(
            max_relative_difference_log2(&sparse, &other) <= -224.0,
            "{s}"
        );
    }
    // the q-expansion of j as an independent oracle
    for (f, j) in forms.forms().iter().zip(&sparse) {
        let (z, _) = reduce_argument(&TauPoint::new(f.clone(), prec).unwrap()).unwrap();
        let naive = naive_j(&z, prec).unwrap();
        assert!(max_relative_difference_log2(std::slice::from_ref(j), &[naive]) <= -224.0);
    }
}

#[test]
fn multipoint_single_point_matches_sparse() {
    let prec = Precision::at_least(200);
    let forms = [QuadForm::new(1, 1, 6)];
    let (a, _) = conjugates(&forms, prec, Strategy::Sparse, None).unwrap();
    let (b, _) = conjugates(&forms, prec, Strategy::Multipoint, None).unwrap();
    assert!(max_relative_difference_log2(&a, &b) <= -(200.0 - 24.0));
}

#[test]
fn chunked_multipoint_matches() {
    let forms = enumerate_naive(&disc(-71));
    let prec = Precision::at_least(300);
    let (a, _) = conjugates(forms.forms(), prec, Strategy::Multipoint, None).unwrap();
    let (b, _) = conjugates(forms.forms(), prec, Strategy::Multipoint, Some(4)).unwrap();
    assert!(max_relative_difference_log2(&a, &b) <= -(300.0 - 32.0));
    let config = PipelineConfig {
        strategy: Strategy::Multipoint,
        chunks: Some(4),
        ..Default::default()
    };
    let chunked = compute_class_polynomial(&disc(-71), &config).unwrap().0;
    assert_eq!(chunked.coeffs(), run(-71, Strategy::Sparse).coeffs());
}

#[test]
fn eta_polynomial_exponents() {
    let p = eta_polynomial(27, Precision::at_least(64));
    let nonzero: Vec<(usize, f64)> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (i, c.to_f64().0))
        .collect();
    assert_eq!(
        nonzero,
        vec![
            (0, 1.0),
            (1, -1.0),
            (2, -1.0),
            (5, 1.0),
            (7, 1.0),
            (12, -1.0),
            (15, -1.0),
            (22, 1.0),
            (26, 1.0)
        ]
    );
}

#[test]
fn deterministic_output() {
    let config = PipelineConfig {
        enumeration: Enumeration::Prime,
        seed: 99,
        ..Default::default()
    };
    let a = compute_class_polynomial(&disc(-199), &config).unwrap().0;
    let b = compute_class_polynomial(&disc(-199), &config).unwrap().0;
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(a.to_json(None), b.to_json(None));
    let naive = PipelineConfig {
        enumeration: Enumeration::Naive,
        ..Default::default()
    };
    assert_eq!(
        compute_class_polynomial(&disc(-199), &naive)
            .unwrap()
            .0
            .coeffs(),
        a.coeffs()
    );
}

#[test]
fn retries_raise_precision() {
    let d = disc(-71);
    let low = PipelineConfig {
        precision: Some(53),
        max_retries: 3,
        ..Default::default()
    };
    match compute_class_polynomial(&d, &low) {
        Err(EngineError::RoundingFailed {
            attempts: 4,
            precision,
            ..
        }) => assert_eq!(precision, 105),
        other => panic!("{other:?}"),
    }
    let patient = PipelineConfig {
        max_retries: 8,
        ..low
    };
    let (poly, report) = compute_class_polynomial(&d, &patient).unwrap();
    assert!(report.attempts > 1);
    assert_eq!(poly.coeffs(), run(-71, Strategy::Sparse).coeffs());
}

#[test]
fn report_fields() {
    let (poly, report) = compute_class_polynomial(&disc(-23), &PipelineConfig::default()).unwrap();
    assert_eq!(report.h, 3);
    assert_eq!(report.attempts, 1);
    assert!(report.measured_height_nats <= report.proven_bound_nats);
    assert!((report.measured_height_nats - 12771880859375f64.ln()).abs() < 1e-9);
    assert!(report.worst_rounding_distance < 1e-6);
    assert_eq!(poly.used_precision(), report.precision);
}

#[test]
fn output_formats() {
    let poly = run(-23, Strategy::Sparse);
    assert_eq!(
        poly.to_text(),
        "-23 3\n1\n3491750\n-5151296875\n12771880859375\n"
    );
    let v: serde_json::Value = serde_json::from_str(&poly.to_json(Some(true))).unwrap();
    assert_eq!(v["D"], -23);
    assert_eq!(v["h"], 3);
    assert_eq!(v["strategy"], "sparse");
    assert_eq!(v["verified"], true);
    assert_eq!(v["coefficients"][0], "12771880859375");
    assert!(v["precision_bits"].as_u64().unwrap() >= 53);
    let v: serde_json::Value = serde_json::from_str(&poly.to_json(None)).unwrap();
    assert!(v["verified"].is_null());
}

#[test]
fn measured_height_values() {
    assert_eq!(measured_height(&ints(&["0", "1"])).to_f64(), 0.0);
    assert!((measured_height(&ints(&["-1728", "1"])).to_f64() - 1728f64.ln()).abs() < 1e-12);
}

#[test]
fn bench_table_layout() {
    let ds = [disc(-23), disc(-47)];
    let reports = benchmark_suite(
        &ds,
        &[Strategy::Sparse, Strategy::Agm],
        &PipelineConfig::default(),
    )
    .unwrap();
    let table = format_bench_table(&reports);
    for label in [
        "strategy sparse",
        "strategy agm",
        "class group",
        "poly from roots",
        "(1) height",
        "(2) proven",
    ] {
        assert!(table.contains(label), "{label}\n{table}");
    }
    assert!(table.contains("agm / sparse"));
    let ladder = tree_scaling_ladder(&[4, 8], Precision::at_least(64), 1, 1);
    assert_eq!(ladder.iter().map(|s| s.h).collect::<Vec<_>>(), vec![4, 8]);
}

#[test]
fn verification_of_pipeline_output() {
    let poly = run(-47, Strategy::Sparse);
    let report = verify(
        poly.discriminant(),
        poly.coeffs(),
        3,
        DEFAULT_PRIME_BITS,
        DEFAULT_TRIALS,
        1,
    )
    .unwrap();
    assert!(report.passed(), "{report:?}");
}
