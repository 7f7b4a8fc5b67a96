use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::classgroup::{enumerate_naive, Discriminant};

fn p(bits: u32) -> Precision {
    Precision::at_least(bits)
}

/// `log2 |a - b| - log2 max(|b|, 1)`.
fn err_log2(a: &BigComplex, b: &BigComplex) -> i32 {
    let d = (a - b).abs();
    let s = b.abs();
    match d.exponent() {
        None => i32::MIN,
        Some(e) => e - s.exponent().unwrap_or(0).max(1),
    }
}

fn real(v: f64, prec: Precision) -> BigComplex {
    BigComplex::from_f64(v, 0.0, prec)
}

/// `q^{1/24} prod (1 - q^n)` in double precision.
fn eta_product_f64(re: f64, im: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    let mag = (-2.0 * PI * im / 24.0).exp();
    let arg = 2.0 * PI * re / 24.0;
    let (mut r, mut i) = (mag * arg.cos(), mag * arg.sin());
    let qmag = (-2.0 * PI * im).exp();
    let qarg = 2.0 * PI * re;
    for n in 1..200 {
        let (qr, qi) = (
            qmag.powi(n) * (qarg * n as f64).cos(),
            qmag.powi(n) * (qarg * n as f64).sin(),
        );
        let (fr, fi) = (1.0 - qr, -qi);
        (r, i) = (r * fr - i * fi, r * fi + i * fr);
    }
    (r, i)
}

/// `q^{1/24} prod_{n <= cap} (1 - q^n)` at full precision.
fn eta_product(z: &BigComplex, cap: u64) -> BigComplex {
    let (q24, q) = q_powers(z).unwrap();
    let mut acc = q24;
    let mut qn = BigComplex::one(z.prec());
    for _ in 0..cap {
        qn = &qn * &q;
        acc = &acc * &(&BigComplex::one(z.prec()) - &qn);
    }
    acc
}

fn random_in_f(rng: &mut ChaCha8Rng, prec: Precision) -> BigComplex {
    loop {
        let re: f64 = rng.gen_range(-0.5..0.5);
        let im: f64 = rng.gen_range(0.8..3.0);
        if re * re + im * im >= 1.0 {
            return BigComplex::from_f64(re, im, prec);
        }
    }
}

fn form(a: i64, b: i64, c: i64) -> QuadForm {
    QuadForm::new(a, b, c)
}

#[test]
fn pentagonal_schedule() {
    assert_eq!(
        pentagonal_exponents(4),
        vec![(1, 2), (5, 7), (12, 15), (22, 26)]
    );
}

#[test]
fn reduce_argument_examples() {
    let prec = p(128);
    let (z, w) = reduce_argument(&TauPoint::new(form(1, 0, 1), prec).unwrap()).unwrap();
    assert!(w.is_empty());
    assert!(err_log2(&z, &BigComplex::i(prec)) < -120);

    let (z, w) = reduce_argument(&TauPoint::new(form(1, -2, 2), prec).unwrap()).unwrap();
    assert_eq!(w.letters(), vec![crate::classgroup::Letter::TInv]);
    assert!(err_log2(&z, &BigComplex::i(prec)) < -120);

    let (z, _) = reduce_argument(&TauPoint::new(form(2, 3, 4), prec).unwrap()).unwrap();
    let want = TauPoint::new(form(2, -1, 3), prec).unwrap();
    assert!(err_log2(&z, want.tau()) < -120);
    assert!(in_fundamental_domain(&z));
}

#[test]
fn reduce_complex_matches_word() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let prec = p(128);
    for _ in 0..50 {
        let z = BigComplex::from_f64(rng.gen_range(-20.0..20.0), rng.gen_range(0.01..3.0), prec);
        let (r, word) = reduce_complex(&z).unwrap();
        assert!(in_fundamental_domain(&r));
        let mut x = z.clone();
        for step in word.steps() {
            x = match step {
                WordStep::S => x.recip().unwrap().neg(),
                WordStep::Shift(k) => x.add_real(&BigReal::from_integer(k, prec)),
            };
        }
        assert!(err_log2(&x, &r) < -100);
    }
}

#[test]
fn eta_at_i_and_2i() {
    let prec = p(256);
    // Gamma(1/4) / (2 pi^{3/4})
    let b = prec.bits();
    let pi = rug::Float::with_val(b, rug::float::Constant::Pi);
    let gamma = rug::Float::with_val(b, 0.25f64).gamma();
    let want_i = real(0.0, prec).add_real(&BigReal::from_float(
        gamma / (2 * (pi.ln() * 0.75f64).exp()),
    ));
    let e = eta_sparse(&BigComplex::i(prec), prec).unwrap();
    assert!(err_log2(&e, &want_i) < -240);
    assert!(e.im().as_float().clone().abs() < 1e-70);
    let (r, _) = eta_product_f64(0.0, 1.0);
    assert!((e.re().to_f64() - r).abs() < 1e-15);

    let two_i = BigComplex::from_i64(0, 2, prec);
    let e2 = eta_sparse(&two_i, prec).unwrap();
    let scale = BigReal::from_u64(2, prec)
        .ln()
        .unwrap()
        .mul_i64(3)
        .div_u64(8)
        .exp()
        .unwrap();
    let want = e.mul_real(&scale.recip().unwrap());
    assert!(err_log2(&e2, &want) < -240);
    let (r2, _) = eta_product_f64(0.0, 2.0);
    assert!((e2.re().to_f64() - r2).abs() < 1e-15);
}

#[test]
fn eta_sparse_rejects_outside() {
    let prec = p(64);
    let z = BigComplex::from_f64(0.0, 0.5, prec);
    assert!(matches!(
        eta_sparse(&z, prec),
        Err(ModEvalError::OutsideFundamentalDomain(_))
    ));
}

#[test]
fn eta_product_vs_pentagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let prec = p(256);
    for _ in 0..50 {
        let z = random_in_f(&mut rng, prec);
        let s = eta_sparse(&z, prec).unwrap();
        let w = z.with_prec(p(300));
        let cap = eta_truncation(p(300), z.im().to_f64()) + 8;
        let o = eta_product(&w, cap).with_prec(prec);
        assert!(err_log2(&s, &o) <= -240);
    }
}

#[test]
fn truncation_is_sufficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for bits in [128u32, 512, 2048] {
        let prec = p(bits);
        for _ in 0..10 {
            let z = random_in_f(&mut rng, prec);
            let cut = eta_truncation(prec, z.im().to_f64());
            let a = eta_sparse(&z, prec).unwrap();
            let b = eta_sparse_with_terms(&z, prec, Some(4 * cut)).unwrap();
            let d = (&a - &b).abs();
            assert!(d.exponent().map_or(true, |e| e <= -(bits as i32) + 4));
        }
    }
}

#[test]
fn multiplier_examples() {
    let prec = p(128);
    let i = BigComplex::i(prec);
    let mut t = TransformWord::new();
    t.push_shift(1.into());
    let m = eta_multiplier(&t, &i).unwrap();
    assert_eq!(m.root24, 1);
    assert!(err_log2(&m.halfpower, &BigComplex::one(prec)) < -120);

    let mut s = TransformWord::new();
    s.push_s();
    let m = eta_multiplier(&s, &i).unwrap();
    assert_eq!(m.root24, 0);
    assert!(err_log2(&m.halfpower, &BigComplex::one(prec)) < -120);

    let two_i = BigComplex::from_i64(0, 2, prec);
    let m = eta_multiplier(&s, &two_i).unwrap();
    let sqrt2 = real(2f64.sqrt(), prec);
    assert!(err_log2(&m.halfpower, &sqrt2) < -50);
    // eta(i/2) = sqrt2 eta(2i), the left side via the S-reduction of i/2
    let half_i = BigComplex::from_f64(0.0, 0.5, prec);
    let lhs = eta_at_point(&half_i, prec).unwrap();
    let rhs = &m.value() * &eta_sparse(&two_i, prec).unwrap();
    assert!(err_log2(&lhs, &rhs) < -120);
}

#[test]
fn eta_at_translation() {
    let prec = p(256);
    let e = eta_at(&TauPoint::new(form(1, 0, 1), prec).unwrap()).unwrap();
    let e1 = eta_at(&TauPoint::new(form(1, -2, 2), prec).unwrap()).unwrap();
    assert!(err_log2(&e1, &(&zeta24(1, prec) * &e)) < -240);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let z = BigComplex::from_f64(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..2.0), prec);
        let a = eta_at_point(&z, prec).unwrap();
        let b = eta_at_point(&z.add_i64(1), prec).unwrap();
        assert!(err_log2(&b, &(&zeta24(1, prec) * &a)) < -230);
        let c = eta_agm_at(&z, prec).unwrap();
        let d = eta_agm_at(&z.add_i64(1), prec).unwrap();
        assert!(err_log2(&d, &(&zeta24(1, prec) * &c)) < -230);
        assert!(err_log2(&c, &a) < -230);
    }
}

#[test]
fn eta_at_unreduced_matches_product() {
    // points with Im > 0.3 converge fast enough for the f64 product
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let prec = p(128);
    for _ in 0..30 {
        let (re, im) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.3..1.5));
        let e = eta_at_point(&BigComplex::from_f64(re, im, prec), prec).unwrap();
        let (r, i) = eta_product_f64(re, im);
        let (er, ei) = e.to_f64();
        let scale = (r * r + i * i).sqrt();
        assert!(
            ((er - r).powi(2) + (ei - i).powi(2)).sqrt() < 1e-10 * scale,
            "{re} {im}: got {er} {ei} want {r} {i}"
        );
    }
}

#[test]
fn j_classical_values() {
    let prec = p(256);
    let j_i = j_from_eta(&TauPoint::new(form(1, 0, 1), prec).unwrap()).unwrap();
    assert!(err_log2(&j_i, &real(1728.0, prec)) < -240);
    let j_rho = j_from_eta(&TauPoint::new(form(1, 1, 1), prec).unwrap()).unwrap();
    assert!(j_rho.abs().exponent().map_or(true, |e| e <= -256 + 20));
    let j_2i = j_from_eta(&TauPoint::new(form(1, 0, 4), prec).unwrap()).unwrap();
    assert!(err_log2(&j_2i, &real(287496.0, prec)) < -240);
    let j163 = j_from_eta(&TauPoint::new(form(1, 1, 41), prec).unwrap()).unwrap();
    let (n, frac) = j163.re().round_to_integer();
    assert_eq!(n, rug::Integer::from(-262537412640768000i64));
    assert!(frac.abs().to_f64() < 1e-40);
}

#[test]
fn naive_series_examples() {
    let prec = p(256);
    let z = BigComplex::i(prec);
    assert!(err_log2(&naive_j(&z, prec).unwrap(), &real(1728.0, prec)) < -240);
    let z = BigComplex::from_i64(0, 2, prec);
    assert!(err_log2(&naive_j(&z, prec).unwrap(), &real(287496.0, prec)) < -240);
}

#[test]
fn j_at_point_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let prec = p(192);
    for _ in 0..20 {
        let z = random_in_f(&mut rng, prec);
        let j = j_at_point(&z, prec).unwrap();
        let s = z.recip().unwrap().neg();
        let js = j_at_point(&s, prec).unwrap();
        assert!(err_log2(&js, &j) < -170);
        assert!(err_log2(&naive_j(&z, prec).unwrap(), &j) < -170);
    }
}

#[test]
fn lambda_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prec = p(192);
    for _ in 0..20 {
        let z = random_in_f(&mut rng, prec);
        let lam = kprime_newton(&z, prec).unwrap().square();
        // lambda(-1/tau) = 1 - lambda(tau)
        let s = z.recip().unwrap().neg();
        let lam_s = kprime_newton(&s, prec).unwrap().square();
        assert!(err_log2(&lam_s, &(&BigComplex::one(prec) - &lam)) < -160);
        // lambda = k'^2 satisfies lambda(tau + 1) = 1 / lambda(tau), so
        // mu = 1 - lambda obeys mu(tau + 1) = mu / (mu - 1)
        let lam_t = kprime_newton(&z.add_i64(1), prec).unwrap().square();
        assert!(err_log2(&lam_t, &lam.recip().unwrap()) < -160);
        let mu = &BigComplex::one(prec) - &lam;
        let mu_t = &BigComplex::one(prec) - &lam_t;
        let want = bigfloat::div(&mu, &mu.add_i64(-1)).unwrap();
        assert!(err_log2(&mu_t, &want) < -160);
        // j from lambda
        let j = j_from_lambda(&lam).unwrap();
        assert!(err_log2(&j, &j_at_point(&z, prec).unwrap()) < -160);
    }
}

#[test]
fn kprime_translation_against_theta_f64() {
    // theta series in double precision at tau = 1 + i
    use std::f64::consts::PI;
    let q = (-PI).exp(); // |e^{i pi (1 + i)}| with sign -1
    let (mut t00, mut t01) = (1.0f64, 1.0f64);
    for n in 1..20i32 {
        let t = 2.0 * (-q).powi(n * n);
        t00 += t;
        t01 += if n % 2 == 1 { -t } else { t };
    }
    let want = (t01 / t00).powi(2);
    let prec = p(64);
    let got = kprime_newton(&BigComplex::from_f64(1.0, 1.0, prec), prec)
        .unwrap()
        .to_f64();
    assert!(
        (got.0 - want).abs() < 1e-14 && got.1.abs() < 1e-14,
        "{got:?} vs {want}"
    );
    assert!((want - 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn eta_agm_examples() {
    let prec = p(256);
    let i = TauPoint::new(form(1, 0, 1), prec).unwrap();
    assert!(err_log2(&eta_agm(&i).unwrap(), &eta_at(&i).unwrap()) < -256 + 24);
    let d = Discriminant::from_i64(-23).unwrap();
    for f in enumerate_naive(&d).forms() {
        let t = TauPoint::new(f.clone(), prec).unwrap();
        assert!(err_log2(&eta_agm(&t).unwrap(), &eta_at(&t).unwrap()) < -256 + 24);
        let h = t.half();
        assert!(err_log2(&eta_agm(&h).unwrap(), &eta_at(&h).unwrap()) < -256 + 24);
    }
    let high = BigComplex::from_f64(0.25, 40.0, prec);
    let a = eta_agm_at(&high, prec).unwrap();
    let b = eta_sparse(&high, prec).unwrap();
    assert!(err_log2(&a, &b) < -240);
}

#[test]
fn strategies_agree_on_cm_points() {
    for bits in [256u32, 1024] {
        let prec = p(bits);
        for dv in [-3i64, -4, -7, -8, -15, -23, -71, -163, -199, -311] {
            let d = Discriminant::from_i64(dv).unwrap();
            for f in enumerate_naive(&d).forms() {
                let t = TauPoint::new(f.clone(), prec).unwrap();
                let js = j_from_eta(&t).unwrap();
                let ja = j_agm(&t).unwrap();
                let (z, _) = reduce_argument(&t).unwrap();
                let jn = naive_j(&z, prec).unwrap();
                assert!(err_log2(&ja, &js) <= -(bits as i32) + 32, "agm D={dv} {f}");
                assert!(
                    err_log2(&jn, &js) <= -(bits as i32) + 32,
                    "naive D={dv} {f}"
                );
            }
        }
    }
}
