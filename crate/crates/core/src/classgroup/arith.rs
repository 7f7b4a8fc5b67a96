//! Small-modulus arithmetic for class group enumeration: prime sieve,
//! square roots modulo primes and prime powers, and tree-organised CRT.

use rand::Rng;
use rug::integer::IsPrime;
use rug::ops::RemRoundingAssign;
use rug::Integer;

use super::ClassGroupError;

/// Prime factorisation `[(p, e)]` with strictly increasing `p`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrimeFactorization {
    factors: Vec<(u64, u32)>,
}

impl PrimeFactorization {
    pub fn new(factors: Vec<(u64, u32)>) -> Self {
        debug_assert!(factors.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(factors.iter().all(|&(_, e)| e > 0));
        PrimeFactorization { factors }
    }

    /// Trial division; fine for the sizes class group enumeration needs.
    pub fn of(mut n: u64) -> Self {
        assert!(n > 0, "cannot factor zero");
        let mut factors = Vec::new();
        let mut p = 2u64;
        while p * p <= n {
            if n % p == 0 {
                let mut e = 0;
                while n % p == 0 {
                    n /= p;
                    e += 1;
                }
                factors.push((p, e));
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if n > 1 {
            factors.push((n, 1));
        }
        PrimeFactorization { factors }
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn value(&self) -> u64 {
        self.factors.iter().map(|&(p, e)| p.pow(e)).product()
    }

    /// The factorisation of `p^e * self`.
    pub fn times_prime_power(&self, p: u64, e: u32) -> Self {
        let mut factors = self.factors.clone();
        match factors.binary_search_by_key(&p, |&(q, _)| q) {
            Ok(i) => factors[i].1 += e,
            Err(i) => factors.insert(i, (p, e)),
        }
        PrimeFactorization { factors }
    }
}

/// All primes `<= limit` (sieve of Eratosthenes).
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, m: u64) -> Option<u64> {
    Integer::from(a)
        .invert(&Integer::from(m))
        .ok()
        .and_then(|v| v.to_u64())
}

fn is_odd_prime(p: u64) -> bool {
    p > 2 && p % 2 == 1 && Integer::from(p).is_probably_prime(32) != IsPrime::No
}

/// Square root of `d` modulo the odd prime `p` by Cipolla's algorithm.
///
/// Returns the smaller of the two roots, `Ok(None)` when `d` is a
/// non-residue. `rng` only drives the search for the auxiliary non-residue,
/// so the result does not depend on it.
pub fn sqrt_mod_p<R: Rng + ?Sized>(
    d: u64,
    p: u64,
    rng: &mut R,
) -> Result<Option<u64>, ClassGroupError> {
    if !is_odd_prime(p) {
        return Err(ClassGroupError::NotOddPrime(p));
    }
    let d = d % p;
    if d == 0 {
        return Ok(Some(0));
    }
    if pow_mod(d, (p - 1) / 2, p) != 1 {
        return Ok(None);
    }
    // find a with a^2 - d a non-residue; then (a + w)^((p+1)/2) in F_p[w]/(w^2 - (a^2 - d))
    let (a, w2) = loop {
        let a = rng.gen_range(0..p);
        let w2 = (mul_mod(a, a, p) + p - d) % p;
        if w2 != 0 && pow_mod(w2, (p - 1) / 2, p) == p - 1 {
            break (a, w2);
        }
    };
    let mul = |x: (u64, u64), y: (u64, u64)| {
        (
            (mul_mod(x.0, y.0, p) + mul_mod(mul_mod(x.1, y.1, p), w2, p)) % p,
            (mul_mod(x.0, y.1, p) + mul_mod(x.1, y.0, p)) % p,
        )
    };
    let mut acc = (1u64, 0u64);
    let mut base = (a, 1u64);
    let mut e = (p + 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        e >>= 1;
    }
    debug_assert_eq!(acc.1, 0);
    let r = acc.0;
    debug_assert_eq!(mul_mod(r, r, p), d);
    Ok(Some(r.min(p - r)))
}

/// Lifts a root `r` of `x^2 = d (mod p)` to a root modulo `p^e`.
///
/// Odd `p` uses Hensel lifting and needs `p` not dividing `d` (the ramified
/// case is covered by [`sqrt_mod_prime_power`]). For `p = 2`, `d` must be odd:
/// roots exist modulo 4 iff `d = 1 (mod 4)` and modulo `2^e`, `e >= 3`, iff
/// `d = 1 (mod 8)`; `r` is ignored and the returned root is lifted from 1.
pub fn lift_root(r: u64, d: &Integer, p: u64, e: u32) -> Option<u64> {
    assert!(e >= 1);
    let m = p.checked_pow(e).expect("prime power overflows u64");
    let d_mod = reduce_mod(d, m);
    if p == 2 {
        if d_mod % 2 == 0 {
            return None;
        }
        return match e {
            1 => Some(1),
            2 => (d_mod % 4 == 1).then_some(if r % 4 == 3 { 3 } else { 1 }),
            _ => {
                if d_mod % 8 != 1 {
                    return None;
                }
                let mut x = 1u64;
                for k in 3..e {
                    let next = 1u64 << (k + 1);
                    if mul_mod(x, x, next) != d_mod % next {
                        x += 1 << (k - 1);
                    }
                }
                Some(x % m)
            }
        };
    }
    if d_mod % p == 0 || mul_mod(r, r, p) != d_mod % p {
        return None;
    }
    let mut x = r % p;
    let mut pk = p;
    for _ in 1..e {
        pk *= p;
        let fx = (mul_mod(x, x, pk) + pk - d_mod % pk) % pk;
        let inv = inv_mod(mul_mod(2, x, pk), pk)?;
        x = (x + pk - mul_mod(fx, inv, pk)) % pk;
    }
    Some(x)
}

fn reduce_mod(d: &Integer, m: u64) -> u64 {
    let r = Integer::from(d % m);
    if r < 0 {
        (r + m).to_u64().expect("reduced residue fits")
    } else {
        r.to_u64().expect("reduced residue fits")
    }
}

/// Square roots of a unit `u` modulo `p^f`.
fn unit_roots<R: Rng + ?Sized>(u: u64, p: u64, f: u32, rng: &mut R) -> Vec<u64> {
    let m = p.pow(f);
    let mut roots = if p == 2 {
        match f {
            1 => vec![1],
            2 => {
                if u % 4 == 1 {
                    vec![1, 3]
                } else {
                    vec![]
                }
            }
            _ => match lift_root(1, &Integer::from(u), 2, f) {
                Some(x) => {
                    let h = m / 2;
                    vec![x, m - x, (x + h) % m, (m - x + h) % m]
                }
                None => vec![],
            },
        }
    } else {
        match sqrt_mod_p(u % p, p, rng).expect("p is an odd prime") {
            Some(r) => {
                let x = lift_root(r, &Integer::from(u), p, f).expect("unit roots lift");
                vec![x, (m - x) % m]
            }
            None => vec![],
        }
    };
    roots.sort_unstable();
    roots.dedup();
    roots
}

/// All `x` in `[0, p^e)` with `x^2 = d (mod p^e)`, including the case where
/// `p` divides `d`.
pub fn sqrt_mod_prime_power<R: Rng + ?Sized>(d: &Integer, p: u64, e: u32, rng: &mut R) -> Vec<u64> {
    let m = p.checked_pow(e).expect("prime power overflows u64");
    let d_mod = reduce_mod(d, m);
    if d_mod == 0 {
        let step = p.pow(e.div_ceil(2));
        return (0..m).step_by(step as usize).collect();
    }
    let mut k = 0u32;
    let mut u = d_mod;
    while u % p == 0 {
        u /= p;
        k += 1;
    }
    if k % 2 == 1 {
        return Vec::new();
    }
    let half = k / 2;
    let f = e - k;
    let pf = p.pow(f);
    let ph = p.pow(half);
    let mut roots = Vec::new();
    for y in unit_roots(u % pf, p, f, rng) {
        for t in 0..ph {
            roots.push(mul_mod(ph, y + t * pf, m));
        }
    }
    roots.sort_unstable();
    roots.dedup();
    roots
}

/// Chinese remaindering organised as a balanced binary tree over the moduli.
///
/// Building the tree computes the subproducts and, for every inner node, the
/// inverse of the left product modulo the right one; each [`CrtTree::combine`]
/// then costs one merge per inner node.
#[derive(Debug, Clone)]
pub struct CrtTree {
    moduli: Vec<Integer>,
    root: CrtNode,
}

#[derive(Debug, Clone)]
enum CrtNode {
    Leaf(usize),
    Inner {
        left: Box<CrtNode>,
        right: Box<CrtNode>,
        left_modulus: Integer,
        right_modulus: Integer,
        left_inv: Integer,
    },
}

impl CrtNode {
    fn build(
        moduli: &[Integer],
        lo: usize,
        hi: usize,
    ) -> Result<(CrtNode, Integer), ClassGroupError> {
        if hi - lo == 1 {
            return Ok((CrtNode::Leaf(lo), moduli[lo].clone()));
        }
        let mid = (lo + hi) / 2;
        let (left, lm) = Self::build(moduli, lo, mid)?;
        let (right, rm) = Self::build(moduli, mid, hi)?;
        let left_inv = Integer::from(&lm % &rm)
            .invert(&rm)
            .map_err(|_| ClassGroupError::NonCoprimeModuli)?;
        let product = Integer::from(&lm * &rm);
        Ok((
            CrtNode::Inner {
                left: Box::new(left),
                right: Box::new(right),
                left_modulus: lm,
                right_modulus: rm,
                left_inv,
            },
            product,
        ))
    }

    fn combine(&self, residues: &[Integer]) -> Integer {
        match self {
            CrtNode::Leaf(i) => residues[*i].clone(),
            CrtNode::Inner {
                left,
                right,
                left_modulus,
                right_modulus,
                left_inv,
            } => {
                let xl = left.combine(residues);
                let xr = right.combine(residues);
                // x = xl + ml * ((xr - xl) * ml^-1 mod mr)
                let mut t = Integer::from(&xr - &xl);
                t *= left_inv;
                t.rem_euc_assign(right_modulus);
                t *= left_modulus;
                t += xl;
                t
            }
        }
    }
}

impl CrtTree {
    pub fn new(moduli: Vec<Integer>) -> Result<Self, ClassGroupError> {
        if moduli.is_empty() {
            return Err(ClassGroupError::EmptyCrt);
        }
        if moduli.iter().any(|m| *m <= 0) {
            return Err(ClassGroupError::NonCoprimeModuli);
        }
        let (root, _) = CrtNode::build(&moduli, 0, moduli.len())?;
        Ok(CrtTree { moduli, root })
    }

    pub fn modulus(&self) -> Integer {
        self.moduli.iter().product()
    }

    /// The unique `x` in `[0, prod m_i)` with `x = r_i (mod m_i)`.
    pub fn combine(&self, residues: &[Integer]) -> Integer {
        assert_eq!(residues.len(), self.moduli.len());
        let reduced: Vec<Integer> = residues
            .iter()
            .zip(&self.moduli)
            .map(|(r, m)| {
                let mut t = r.clone();
                t.rem_euc_assign(m);
                t
            })
            .collect();
        self.root.combine(&reduced)
    }
}

/// `x mod prod m_i` from `[(r_i, m_i)]` with pairwise coprime moduli.
pub fn crt_tree(residues: &[(Integer, Integer)]) -> Result<(Integer, Integer), ClassGroupError> {
    let tree = CrtTree::new(residues.iter().map(|(_, m)| m.clone()).collect())?;
    let rs: Vec<Integer> = residues.iter().map(|(r, _)| r.clone()).collect();
    Ok((tree.combine(&rs), tree.modulus()))
}
