//! The `q`-expansion `j = 1/q + 744 + 196884 q + ...`, summed by Horner's rule.

use std::sync::OnceLock;

use rug::Integer;

use super::{describe, in_fundamental_domain, q_powers, ModEvalError, Result};
use crate::bigfloat::{BigComplex, Precision};

/// Largest index `v` of a coefficient `c_v` available to [`naive_j_series`].
pub const J_TERM_CAP: usize = 512;

static COEFFS: OnceLock<Vec<Integer>> = OnceLock::new();

fn mul_truncated(f: &[Integer], g: &[Integer], len: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); len];
    for (i, fi) in f.iter().enumerate().take(len) {
        if *fi == 0 {
            continue;
        }
        for (j, gj) in g.iter().enumerate().take(len - i) {
            out[i + j] += Integer::from(fi * gj);
        }
    }
    out
}

/// `c_{-1}, c_0, ..., c_{J_TERM_CAP}`: index `k` holds `c_{k-1}`. Computed
/// once as `E4^3 / (q prod (1 - q^n)^24)`.
pub fn j_coefficients() -> &'static [Integer] {
    COEFFS.get_or_init(|| compute_coefficients(J_TERM_CAP + 2))
}

fn compute_coefficients(len: usize) -> Vec<Integer> {
    // prod (1 - q^n) by the pentagonal number theorem
    let mut p = vec![Integer::new(); len];
    p[0] = Integer::from(1);
    for v in 1.. {
        let (em, ep) = (v * (3 * v - 1) / 2, v * (3 * v + 1) / 2);
        if em >= len {
            break;
        }
        let s = if v % 2 == 1 { -1 } else { 1 };
        p[em] += s;
        if ep < len {
            p[ep] += s;
        }
    }
    let p2 = mul_truncated(&p, &p, len);
    let p4 = mul_truncated(&p2, &p2, len);
    let p8 = mul_truncated(&p4, &p4, len);
    let p16 = mul_truncated(&p8, &p8, len);
    let p24 = mul_truncated(&p16, &p8, len);

    let mut sigma3 = vec![Integer::new(); len];
    for d in 1..len {
        let cube = Integer::from((d as u64).pow(3));
        for m in (d..len).step_by(d) {
            sigma3[m] += &cube;
        }
    }
    let mut e4 = vec![Integer::new(); len];
    e4[0] = Integer::from(1);
    for n in 1..len {
        e4[n] = Integer::from(&sigma3[n] * 240u32);
    }
    let e4_2 = mul_truncated(&e4, &e4, len);
    let num = mul_truncated(&e4_2, &e4, len);

    // divide by p24, whose constant term is 1
    let mut out: Vec<Integer> = Vec::with_capacity(len);
    for k in 0..len {
        let mut c = num[k].clone();
        for i in 1..=k {
            if p24[i] != 0 {
                c -= Integer::from(&p24[i] * &out[k - i]);
            }
        }
        out.push(c);
    }
    out
}

/// `log2` of the coefficient bound `e^{4 pi sqrt v} / (sqrt 2 v^{3/4})`
/// times `|q|^v`, with `|q| = e^{-2 pi im}`.
fn log2_term_bound(v: f64, im: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let ln = 4.0 * pi * v.sqrt() - 2.0 * pi * im * v - 0.5 * std::f64::consts::LN_2 - 0.75 * v.ln();
    ln / std::f64::consts::LN_2
}

/// Smallest `T` such that the terms `v > T` contribute at most
/// `2^-(prec+8)` at a point of imaginary part `im`. May exceed the cap.
pub fn naive_j_terms(prec: Precision, im: f64) -> usize {
    let target = -(prec.bits() as f64) - 8.0;
    let pi = std::f64::consts::PI;
    let mut t = 1usize;
    loop {
        let next = (t + 1) as f64;
        let ratio_ln = 2.0 * pi * ((next + 1.0).sqrt() - next.sqrt()) - 2.0 * pi * im;
        if ratio_ln < 0.0 {
            let tail = log2_term_bound(next, im) - (1.0 - ratio_ln.exp()).log2();
            if tail <= target {
                return t;
            }
        }
        t += 1;
        if t > 1 << 20 {
            return t;
        }
    }
}

/// `sum_{v=-1}^{terms} c_v q^v` at `z` in the fundamental domain.
pub fn naive_j_series(z: &BigComplex, terms: usize, prec: Precision) -> Result<BigComplex> {
    if terms > J_TERM_CAP {
        return Err(ModEvalError::TermCapExceeded {
            needed: terms,
            cap: J_TERM_CAP,
        });
    }
    if !in_fundamental_domain(z) {
        return Err(ModEvalError::OutsideFundamentalDomain(describe(z)));
    }
    let w = prec.plus(16);
    let (_, q) = q_powers(&z.with_prec(w))?;
    let c = j_coefficients();
    let mut acc = BigComplex::from_integer(&c[terms + 1], w);
    for v in (0..terms).rev() {
        acc = &acc * &q;
        acc = &acc + &BigComplex::from_integer(&c[v + 1], w);
    }
    Ok((&acc + &q.recip()?).with_prec(prec))
}

/// [`naive_j_series`] with the number of terms chosen for `prec`.
pub fn naive_j(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let terms = naive_j_terms(prec, z.im().to_f64());
    naive_j_series(z, terms, prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_coefficients() {
        let c = j_coefficients();
        let want: [i64; 5] = [1, 744, 196884, 21493760, 864299970];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(c[k], *w);
        }
        assert_eq!(c[5], Integer::from(20245856256u64));
        assert_eq!(c.len(), J_TERM_CAP + 2);
    }

    #[test]
    fn coefficients_below_bound() {
        let c = j_coefficients();
        for v in 1..=J_TERM_CAP {
            let log2_c = c[v + 1].significant_bits() as f64 - 1.0;
            let bound = log2_term_bound(v as f64, 0.0);
            assert!(c[v + 1] > 0);
            assert!(log2_c <= bound, "c_{v}");
        }
    }

    #[test]
    fn short_prefix_consistent() {
        // a short recomputation agrees with the cached prefix
        let short = compute_coefficients(40);
        assert_eq!(&short[..], &j_coefficients()[..40]);
    }

    #[test]
    fn term_counts_grow_with_precision() {
        let im = 3f64.sqrt() / 2.0;
        let t256 = naive_j_terms(Precision::at_least(256), im);
        let t1024 = naive_j_terms(Precision::at_least(1024), im);
        assert!(t256 < t1024 && t1024 <= J_TERM_CAP, "{t256} {t1024}");
        assert!(naive_j_terms(Precision::at_least(8000), im) > J_TERM_CAP);
        assert!(naive_j_terms(Precision::at_least(256), 10.0) < 10);
    }

    #[test]
    fn cap_is_enforced() {
        let z = BigComplex::i(Precision::at_least(64));
        assert!(matches!(
            naive_j_series(&z, J_TERM_CAP + 1, z.prec()),
            Err(ModEvalError::TermCapExceeded { .. })
        ));
        assert!(matches!(
            naive_j(&z, Precision::at_least(20_000)),
            Err(ModEvalError::TermCapExceeded { .. })
        ));
    }
}
