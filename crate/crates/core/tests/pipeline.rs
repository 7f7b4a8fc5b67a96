use hilbert_core::classgroup::Discriminant;
use hilbert_core::engine::{
    compute_class_polynomial, verify, Enumeration, PipelineConfig, Strategy,
};
use rug::Integer;

fn disc(d: i64) -> Discriminant {
    Discriminant::new(Integer::from(d)).unwrap()
}

fn coeffs(d: i64, config: &PipelineConfig) -> Vec<String> {
    let (poly, _) = compute_class_polynomial(&disc(d), config).unwrap();
    poly.coeffs().iter().map(|c| c.to_string()).collect()
}

/// Reduced forms counted directly: |b| <= a <= c, b >= 0 when |b| = a or a = c.
fn class_number(d: i64) -> usize {
    let n = -d;
    let mut h = 0;
    let mut a = 1;
    while 3 * a * a <= n {
        for b in -a + 1..=a {
            if (b * b + n) % (4 * a) != 0 {
                continue;
            }
            let c = (b * b + n) / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            let g = gcd(gcd(a, b.abs()), c);
            if g == 1 {
                h += 1;
            }
        }
        a += 1;
    }
    h
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn tabulated_polynomials() {
    let table: [(i64, &[&str]); 4] = [
        (-20, &["-681472000", "-1264000", "1"]),
        (-24, &["14670139392", "-4834944", "1"]),
        (-23, &["12771880859375", "-5151296875", "3491750", "1"]),
        (-31, &["1566028350940383", "-58682638134", "39491307", "1"]),
    ];
    for (d, expected) in table {
        for strategy in Strategy::ALL {
            let config = PipelineConfig {
                strategy,
                ..Default::default()
            };
            assert_eq!(coeffs(d, &config), expected, "D = {d}, {strategy}");
        }
    }
}

#[test]
fn degree_is_class_number() {
    let config = PipelineConfig::default();
    for d in (-400i64..=-3).filter(|d| d.rem_euclid(4) <= 1) {
        let (poly, report) = compute_class_polynomial(&disc(d), &config).unwrap();
        assert_eq!(poly.h(), class_number(d), "D = {d}");
        assert_eq!(report.h, poly.h());
        assert_eq!(poly.coeffs().last().unwrap(), &1);
        assert!(report.measured_height_nats <= report.proven_bound_nats);
    }
}

#[test]
fn enumerations_and_strategies_agree() {
    for d in [-71i64, -151, -260, -399] {
        let reference = coeffs(d, &PipelineConfig::default());
        for enumeration in Enumeration::ALL {
            for strategy in Strategy::ALL {
                let config = PipelineConfig {
                    strategy,
                    enumeration,
                    ..Default::default()
                };
                assert_eq!(
                    coeffs(d, &config),
                    reference,
                    "D = {d}, {enumeration}, {strategy}"
                );
            }
        }
        let chunked = PipelineConfig {
            strategy: Strategy::Multipoint,
            chunks: Some(3),
            ..Default::default()
        };
        assert_eq!(coeffs(d, &chunked), reference, "D = {d}, chunked");
    }
}

#[test]
fn non_fundamental_discriminants() {
    // j(2i) = 287496 and j(3i) = 76771008 + 44330496 sqrt(3)
    assert_eq!(coeffs(-16, &PipelineConfig::default()), ["-287496", "1"]);
    assert_eq!(
        coeffs(-36, &PipelineConfig::default()),
        ["-1790957481984", "-153542016", "1"]
    );
}

#[test]
fn verification_round_trip() {
    let d = disc(-56);
    let (poly, _) = compute_class_polynomial(&d, &PipelineConfig::default()).unwrap();
    let report = verify(&d, poly.coeffs(), 3, 40, 8, 1).unwrap();
    assert_eq!(report.results.len(), 3);
    assert!(report.passed());

    let mut wrong = poly.coeffs().to_vec();
    wrong[1] += 1;
    let report = verify(&d, &wrong, 3, 40, 8, 1).unwrap();
    assert!(report.rejected_by_all());
}

#[test]
fn output_formats() {
    let (poly, _) = compute_class_polynomial(&disc(-15), &PipelineConfig::default()).unwrap();
    assert_eq!(poly.to_text(), "-15 2\n1\n191025\n-121287375\n");
    let json: serde_json::Value = serde_json::from_str(&poly.to_json(Some(true))).unwrap();
    assert_eq!(json["D"], -15);
    assert_eq!(json["h"], 2);
    assert_eq!(json["coefficients"][0], "-121287375");
    assert_eq!(json["verified"], true);
}
