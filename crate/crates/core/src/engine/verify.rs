//! Reduction of a class polynomial modulo CM primes: complete splitting and
//! the group order of the curves with the root as `j`-invariant.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::integer::IsPrime;
use rug::Integer;

use super::EngineError;
use crate::classgroup::{sqrt_mod_p, Discriminant};

/// Default bit size of verification primes.
pub const DEFAULT_PRIME_BITS: u32 = 40;
/// Default number of random points per curve.
pub const DEFAULT_TRIALS: usize = 8;
/// Odd candidates examined by [`find_cm_prime`] before giving up.
pub const PRIME_SEARCH_CAP: u64 = 1 << 22;

/// `4p = U^2 + |D| V^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CmPrime {
    pub p: u64,
    pub u: u64,
    pub v: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Every root gave a curve whose sampled points have order dividing
    /// `p + 1 - U` or `p + 1 + U`.
    Consistent {
        roots_checked: usize,
    },
    Inconsistent(String),
    Inconclusive(String),
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent { .. })
    }

    pub fn is_inconsistent(&self) -> bool {
        matches!(self, Verdict::Inconsistent(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Consistent { roots_checked } => {
                write!(f, "consistent ({roots_checked} roots)")
            }
            Verdict::Inconsistent(why) => write!(f, "inconsistent: {why}"),
            Verdict::Inconclusive(why) => write!(f, "inconclusive: {why}"),
        }
    }
}

fn is_prime(n: u64) -> bool {
    Integer::from(n).is_probably_prime(32) != IsPrime::No
}

/// Solves `4p = U^2 + |D| V^2` by Cornacchia's algorithm.
fn cornacchia(d: &Discriminant, p: u64, rng: &mut ChaCha8Rng) -> Option<(u64, u64)> {
    let abs = d.abs_u64()?;
    let four_p = 4 * p as u128;
    if abs as u128 > four_p {
        return None;
    }
    let dm = Integer::from(d.value() % p).to_i64()?;
    let dm = dm.rem_euclid(p as i64) as u64;
    let mut x0 = sqrt_mod_p(dm, p, rng).ok()??;
    if (x0 % 2) != (abs % 2) {
        x0 = p - x0;
    }
    let (mut a, mut b) = (2 * p as u128, x0 as u128);
    let limit = (four_p as f64).sqrt() as u128;
    let limit = (limit.saturating_sub(2)..=limit + 2)
        .filter(|l| l * l <= four_p)
        .max()
        .unwrap_or(0);
    while b > limit {
        let r = a % b;
        a = b;
        b = r;
    }
    let rest = four_p - b * b;
    if rest % abs as u128 != 0 {
        return None;
    }
    let c = (rest / abs as u128) as u64;
    let v = (c as f64).sqrt() as u64;
    let v = (v.saturating_sub(2)..=v + 2).find(|v| (*v as u128) * (*v as u128) == c as u128)?;
    (v > 0).then_some((b as u64, v))
}

/// Smallest prime `p >= 2^min_bits`, not dividing `D`, with
/// `4p = U^2 + |D| V^2` for some `V >= 1`.
pub fn find_cm_prime(d: &Discriminant, min_bits: u32) -> Result<CmPrime, EngineError> {
    find_cm_prime_from(d, 1u64 << min_bits.clamp(8, 62), min_bits)
}

fn find_cm_prime_from(d: &Discriminant, start: u64, min_bits: u32) -> Result<CmPrime, EngineError> {
    if !(8..=62).contains(&min_bits) || d.abs_u64().is_none() {
        return Err(EngineError::NoCmPrime {
            d: d.value().to_string(),
            min_bits,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(start);
    let mut p = start | 1;
    for _ in 0..PRIME_SEARCH_CAP {
        if is_prime(p)
            && Integer::from(d.value() % p) != 0
            && d.value().kronecker(&Integer::from(p)) == 1
        {
            if let Some((u, v)) = cornacchia(d, p, &mut rng) {
                return Ok(CmPrime { p, u, v });
            }
        }
        p += 2;
    }
    Err(EngineError::NoCmPrime {
        d: d.value().to_string(),
        min_bits,
    })
}

/// The first `count` CM primes of at least `min_bits` bits.
pub fn cm_primes(
    d: &Discriminant,
    min_bits: u32,
    count: usize,
) -> Result<Vec<CmPrime>, EngineError> {
    let mut out: Vec<CmPrime> = Vec::with_capacity(count);
    let mut start = 1u64 << min_bits.clamp(8, 62);
    while out.len() < count {
        let cm = find_cm_prime_from(d, start, min_bits)?;
        start = cm.p + 2;
        out.push(cm);
    }
    Ok(out)
}

/// Arithmetic modulo an odd prime below `2^63`.
#[derive(Debug, Clone, Copy)]
struct Fp {
    p: u64,
}

impl Fp {
    fn add(self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.p as u128) as u64
    }
    fn sub(self, a: u64, b: u64) -> u64 {
        ((a as u128 + self.p as u128 - b as u128) % self.p as u128) as u64
    }
    fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }
    fn pow(self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }
    fn inv(self, a: u64) -> u64 {
        self.pow(a, self.p - 2)
    }
    fn reduce(self, c: &Integer) -> u64 {
        let m = Integer::from(c % self.p);
        let m = m.to_i128().expect("residue fits");
        m.rem_euclid(self.p as i128) as u64
    }
}

/// Polynomials over `F_p`, ascending, without trailing zeros.
type Poly = Vec<u64>;

fn trim(mut a: Poly) -> Poly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn rem(f: Fp, a: &[u64], m: &[u64]) -> Poly {
    let mut r = a.to_vec();
    let n = m.len() - 1;
    let inv_lead = f.inv(*m.last().expect("nonzero modulus"));
    while r.len() > n {
        let c = f.mul(*r.last().expect("non-empty"), inv_lead);
        let shift = r.len() - 1 - n;
        for (i, mi) in m.iter().enumerate() {
            r[shift + i] = f.sub(r[shift + i], f.mul(c, *mi));
        }
        r = trim(r);
    }
    trim(r)
}

fn mul(f: Fp, a: &[u64], b: &[u64]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(*x, *y));
        }
    }
    trim(out)
}

fn mulmod(f: Fp, a: &[u64], b: &[u64], m: &[u64]) -> Poly {
    rem(f, &mul(f, a, b), m)
}

/// `base^e mod m`.
fn powmod(f: Fp, base: &[u64], mut e: u64, m: &[u64]) -> Poly {
    let mut acc = rem(f, &[1], m);
    let mut b = rem(f, base, m);
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(f, &acc, &b, m);
        }
        b = mulmod(f, &b, &b, m);
        e >>= 1;
    }
    acc
}

fn monic(f: Fp, a: Poly) -> Poly {
    match a.last() {
        None => a,
        Some(&l) => {
            let inv = f.inv(l);
            a.into_iter().map(|c| f.mul(c, inv)).collect()
        }
    }
}

fn gcd(f: Fp, a: &[u64], b: &[u64]) -> Poly {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = rem(f, &a, &b);
        a = b;
        b = r;
    }
    monic(f, a)
}

fn sub_poly(f: Fp, a: &[u64], b: &[u64]) -> Poly {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| f.sub(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0)))
            .collect(),
    )
}

fn derivative(f: Fp, a: &[u64]) -> Poly {
    trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| f.mul(*c, i as u64 % f.p))
            .collect(),
    )
}

/// Roots of a monic squarefree polynomial that splits into linear factors,
/// by gcds with `(X + a)^((p-1)/2) - 1` for random shifts `a`.
fn split_roots(f: Fp, g: &[u64], rng: &mut ChaCha8Rng, out: &mut Vec<u64>) {
    match g.len() {
        0 | 1 => {}
        2 => out.push(f.sub(0, f.mul(g[0], f.inv(g[1])))),
        _ => loop {
            let a = rng.gen_range(0..f.p);
            let t = powmod(f, &[a, 1], (f.p - 1) / 2, g);
            let d = gcd(f, &sub_poly(f, &t, &[1]), g);
            if d.len() > 1 && d.len() < g.len() {
                let (q, _) = divide(f, g, &d);
                split_roots(f, &d, rng, out);
                split_roots(f, &q, rng, out);
                return;
            }
        },
    }
}

fn divide(f: Fp, a: &[u64], m: &[u64]) -> (Poly, Poly) {
    let mut r = a.to_vec();
    let n = m.len() - 1;
    let inv_lead = f.inv(*m.last().expect("nonzero"));
    let mut q = vec![0u64; a.len().saturating_sub(n)];
    while r.len() > n {
        let c = f.mul(*r.last().expect("non-empty"), inv_lead);
        let shift = r.len() - 1 - n;
        q[shift] = c;
        for (i, mi) in m.iter().enumerate() {
            r[shift + i] = f.sub(r[shift + i], f.mul(c, *mi));
        }
        r.pop();
    }
    (trim(q), trim(r))
}

/// `[k](x : 1)` on `y^2 = x^3 + a x + b` by the x-only Montgomery ladder;
/// returns `Z`, which vanishes iff the multiple is the point at infinity.
fn ladder_z(f: Fp, a: u64, b: u64, x0: u64, k: u128) -> u64 {
    let double = |(x, z): (u64, u64)| {
        let xx = f.mul(x, x);
        let zz = f.mul(z, z);
        let t = f.sub(xx, f.mul(a, zz));
        let x2 = f.sub(f.mul(t, t), f.mul(f.mul(8, b), f.mul(x, f.mul(zz, z))));
        let inner = f.add(
            f.add(f.mul(xx, x), f.mul(a, f.mul(x, zz))),
            f.mul(b, f.mul(zz, z)),
        );
        (x2, f.mul(f.mul(4, z), inner))
    };
    // difference is the base point (x0 : 1)
    let add = |(xm, zm): (u64, u64), (xn, zn): (u64, u64)| {
        let t = f.sub(f.mul(xm, xn), f.mul(a, f.mul(zm, zn)));
        let cross = f.add(f.mul(xm, zn), f.mul(xn, zm));
        let x = f.sub(f.mul(t, t), f.mul(f.mul(4, b), f.mul(f.mul(zm, zn), cross)));
        let d = f.sub(f.mul(xm, zn), f.mul(xn, zm));
        (x, f.mul(x0, f.mul(d, d)))
    };
    let mut r0 = (1u64, 0u64);
    let mut r1 = (x0, 1u64);
    for bit in (0..128 - k.leading_zeros()).rev() {
        if (k >> bit) & 1 == 1 {
            r0 = add(r0, r1);
            r1 = double(r1);
        } else {
            r1 = add(r0, r1);
            r0 = double(r0);
        }
    }
    r0.1
}

/// Curves with `j`-invariant `r`, one per twist class not reached by the
/// quadratic twist.
fn curves_for_root(f: Fp, r: u64, rng: &mut ChaCha8Rng) -> Vec<(u64, u64)> {
    let p = f.p;
    if r == 0 {
        // y^2 = x^3 + b, b modulo sixth powers
        if p % 3 == 1 {
            let c = loop {
                let c = rng.gen_range(2..p);
                if f.pow(c, (p - 1) / 3) != 1 {
                    break c;
                }
            };
            return vec![(0, 1), (0, c), (0, f.mul(c, c))];
        }
        return vec![(0, 1)];
    }
    if r == 1728 % p {
        // y^2 = x^3 + a x, a modulo fourth powers
        let n = loop {
            let n = rng.gen_range(2..p);
            if f.pow(n, (p - 1) / 2) == p - 1 {
                break n;
            }
        };
        return vec![(1, 0), (n, 0)];
    }
    let k = f.mul(r, f.inv(f.sub(1728 % p, r)));
    vec![(f.mul(3, k), f.mul(2, k))]
}

fn curve_passes(f: Fp, (a, b): (u64, u64), u: u64, trials: usize, rng: &mut ChaCha8Rng) -> bool {
    let n_minus = f.p as u128 + 1 - u as u128;
    let n_plus = f.p as u128 + 1 + u as u128;
    (0..trials).all(|_| {
        let x = rng.gen_range(1..f.p);
        ladder_z(f, a, b, x, n_minus) == 0 || ladder_z(f, a, b, x, n_plus) == 0
    })
}

/// Checks `coeffs` (ascending, monic) against one CM prime of `D`.
pub fn verify_mod_p(coeffs: &[Integer], prime: &CmPrime, trials: usize, seed: u64) -> Verdict {
    if trials == 0 {
        return Verdict::Inconclusive("no point trials requested".into());
    }
    let f = Fp { p: prime.p };
    let h = trim(coeffs.iter().map(|c| f.reduce(c)).collect());
    if h.len() != coeffs.len() || h.len() < 2 {
        return Verdict::Inconclusive(format!("degree drops modulo {}", f.p));
    }
    let h = monic(f, h);
    if gcd(f, &h, &derivative(f, &h)).len() > 1 {
        return Verdict::Inconclusive(format!("not squarefree modulo {}", f.p));
    }
    let xp = powmod(f, &[0, 1], f.p, &h);
    let split = gcd(f, &sub_poly(f, &xp, &[0, 1]), &h);
    if split.len() != h.len() {
        return Verdict::Inconsistent(format!(
            "{} of {} roots modulo {}",
            split.len() - 1,
            h.len() - 1,
            f.p
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ prime.p);
    let mut roots = Vec::with_capacity(h.len() - 1);
    split_roots(f, &h, &mut rng, &mut roots);
    for &r in &roots {
        let curves = curves_for_root(f, r, &mut rng);
        if !curves
            .iter()
            .any(|&c| curve_passes(f, c, prime.u, trials, &mut rng))
        {
            return Verdict::Inconsistent(format!(
                "root {r} modulo {} has no curve of trace +-{}",
                f.p, prime.u
            ));
        }
    }
    Verdict::Consistent {
        roots_checked: roots.len(),
    }
}

/// Verdicts on `count` CM primes, skipping primes that are inconclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub results: Vec<(CmPrime, Verdict)>,
}

impl VerificationReport {
    /// Consistent on every prime that gave an answer, and at least one did.
    pub fn passed(&self) -> bool {
        self.results.iter().any(|(_, v)| v.is_consistent())
            && !self.results.iter().any(|(_, v)| v.is_inconsistent())
    }

    /// Inconsistent on every prime examined.
    pub fn rejected_by_all(&self) -> bool {
        !self.results.is_empty() && self.results.iter().all(|(_, v)| v.is_inconsistent())
    }
}

/// Runs [`verify_mod_p`] on the first `count` CM primes of `min_bits` bits
/// for which it is not inconclusive, in parallel.
pub fn verify(
    d: &Discriminant,
    coeffs: &[Integer],
    count: usize,
    min_bits: u32,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport, EngineError> {
    let mut results = Vec::with_capacity(count);
    let mut start = 1u64 << min_bits.clamp(8, 62);
    let mut attempts = 0;
    while results.len() < count && attempts < 4 * count + 4 {
        let need = count - results.len();
        let mut primes = Vec::with_capacity(need);
        for _ in 0..need {
            let cm = find_cm_prime_from(d, start, min_bits)?;
            start = cm.p + 2;
            primes.push(cm);
        }
        attempts += need;
        let verdicts: Vec<(CmPrime, Verdict)> = primes
            .into_par_iter()
            .map(|cm| (cm, verify_mod_p(coeffs, &cm, trials, seed)))
            .collect();
        results.extend(
            verdicts
                .into_iter()
                .filter(|(_, v)| !matches!(v, Verdict::Inconclusive(_))),
        );
    }
    Ok(VerificationReport { results })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(d: i64) -> Discriminant {
        Discriminant::from_i64(d).unwrap()
    }

    fn ints(c: &[i64]) -> Vec<Integer> {
        c.iter().map(|&x| Integer::from(x)).collect()
    }

    #[test]
    fn cm_prime_examples() {
        let cm = find_cm_prime(&disc(-7), 8).unwrap();
        assert_eq!(
            4 * cm.p as u128,
            (cm.u as u128).pow(2) + 7 * (cm.v as u128).pow(2)
        );
        assert!(cm.p >= 256 && cm.p % 7 != 0);
        for d in [-3i64, -4, -23, -71, -163, -15, -20] {
            let dd = disc(d);
            for cm in cm_primes(&dd, 30, 3).unwrap() {
                let abs = d.unsigned_abs() as u128;
                assert_eq!(
                    4 * cm.p as u128,
                    (cm.u as u128).pow(2) + abs * (cm.v as u128).pow(2),
                    "{d}"
                );
                assert!(cm.v >= 1 && cm.p % abs as u64 != 0 && is_prime(cm.p));
            }
        }
    }

    #[test]
    fn cm_prime_is_smallest() {
        // exhaustive oracle over (U, V)
        for d in [-7i64, -23, -15] {
            let abs = d.unsigned_abs();
            let cm = find_cm_prime(&disc(d), 10).unwrap();
            let mut best = u64::MAX;
            for v in 1..100u64 {
                for u in 0..200u64 {
                    let n = u * u + abs * v * v;
                    if n % 4 == 0 && n / 4 >= 1024 && is_prime(n / 4) && (n / 4) % abs != 0 {
                        best = best.min(n / 4);
                    }
                }
            }
            assert_eq!(cm.p, best, "{d}");
        }
    }

    #[test]
    fn ladder_matches_group_order() {
        // y^2 = x^3 + x + 1 over F_101 has 105 points
        let f = Fp { p: 101 };
        let mut count = 1;
        for x in 0..101u64 {
            let rhs = f.add(f.add(f.pow(x, 3), x), 1);
            count += if rhs == 0 {
                1
            } else if f.pow(rhs, 50) == 1 {
                2
            } else {
                0
            };
        }
        for x in 1..101u64 {
            let rhs = f.add(f.add(f.pow(x, 3), x), 1);
            let on_curve = rhs == 0 || f.pow(rhs, 50) == 1;
            let order = if on_curve { count } else { 2 * 102 - count };
            assert_eq!(ladder_z(f, 1, 1, x, order as u128), 0, "x = {x}");
        }
    }

    #[test]
    fn roots_split() {
        let f = Fp { p: 1_000_003 };
        let roots = [5u64, 17, 123_456, 999_999];
        let mut poly = vec![1u64];
        for r in roots {
            poly = mul(f, &poly, &[f.sub(0, r), 1]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut got = Vec::new();
        split_roots(f, &poly, &mut rng, &mut got);
        got.sort();
        assert_eq!(got, roots);
    }

    #[test]
    fn known_polynomials_consistent() {
        let cases: [(i64, &[i64]); 6] = [
            (-3, &[0, 1]),
            (-4, &[-1728, 1]),
            (-7, &[3375, 1]),
            (-8, &[-8000, 1]),
            (-15, &[-121287375, 191025, 1]),
            (-23, &[12771880859375, -5151296875, 3491750, 1]),
        ];
        for (d, c) in cases {
            let report = verify(&disc(d), &ints(c), 3, 40, DEFAULT_TRIALS, 7).unwrap();
            assert_eq!(report.results.len(), 3, "{d}");
            assert!(report.passed(), "{d}: {report:?}");
        }
    }

    #[test]
    fn mutated_polynomials_rejected() {
        let cases: [(i64, &[i64]); 3] = [
            (-7, &[3375, 1]),
            (-15, &[-121287375, 191025, 1]),
            (-23, &[12771880859375, -5151296875, 3491750, 1]),
        ];
        for (d, c) in cases {
            for i in 0..c.len() - 1 {
                let mut m = ints(c);
                m[i] += 1;
                let report = verify(&disc(d), &m, 3, 40, DEFAULT_TRIALS, 7).unwrap();
                assert!(report.rejected_by_all(), "{d} coefficient {i}: {report:?}");
            }
        }
    }

    #[test]
    fn zero_trials_inconclusive() {
        let cm = find_cm_prime(&disc(-7), 20).unwrap();
        assert!(matches!(
            verify_mod_p(&ints(&[3375, 1]), &cm, 0, 1),
            Verdict::Inconclusive(_)
        ));
    }
}
