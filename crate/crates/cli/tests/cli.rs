use std::process::{Command, Output};

fn hilbert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hilbert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn text_output() {
    let out = hilbert(&["-D", "-23"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "-23 3\n1\n3491750\n-5151296875\n12771880859375\n"
    );
}

#[test]
fn structured_output_with_verification() {
    let out = hilbert(&[
        "--discriminant=-47",
        "--strategy",
        "agm",
        "--output",
        "structured",
        "--verify",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["D"], -47);
    assert_eq!(json["h"], 5);
    assert_eq!(json["strategy"], "agm");
    assert_eq!(json["verified"], true);
    assert_eq!(json["coefficients"].as_array().unwrap().len(), 6);
    let log = String::from_utf8(out.stderr).unwrap();
    assert_eq!(log.matches(": consistent").count(), 2, "{log}");
}

#[test]
fn height_bound_only() {
    let out = hilbert(&["-D", "-455", "--emit-height-bound"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "D -455 h 20");
    assert!(lines[1].starts_with("proven "));
    assert!(lines[2].starts_with("heuristic "));
    assert!(lines[3].starts_with("precision "));
}

#[test]
fn usage_errors() {
    for args in [
        &["-D", "-10"][..],
        &["-D", "5"],
        &["-D", "x"],
        &[],
        &["-D", "-23", "--strategy", "fast"],
        &["-D", "-23", "--safety-factor", "0.5"],
        &["-D", "-23", "--safety-factor", "abc"],
    ] {
        assert_eq!(hilbert(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn rounding_failure() {
    let out = hilbert(&["-D", "-71", "--precision", "53"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).is_empty());
}

#[test]
fn bench_table() {
    let dir = std::env::temp_dir().join(format!("hilbert-bench-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("ds.txt");
    std::fs::write(&file, "# small\n-23\n\n-47 # h = 5\n").unwrap();
    let out = hilbert(&["--bench", file.to_str().unwrap()]);
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for s in [
        "strategy sparse",
        "strategy multipoint",
        "strategy agm",
        "poly from roots",
    ] {
        assert!(text.contains(s), "{text}");
    }
}
