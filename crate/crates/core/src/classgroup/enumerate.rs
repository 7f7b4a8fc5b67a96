use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Integer;

use super::arith::{sieve_primes, sqrt_mod_prime_power, CrtTree, PrimeFactorization};
use super::{compose, reduce_unchecked, ClassGroupError, ClassGroupList, Discriminant, QuadForm};

/// Knobs shared by the enumerators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationConfig {
    /// Seeds the non-residue search inside Cipolla's algorithm. Results do
    /// not depend on it; running time does, slightly.
    pub seed: u64,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig { seed: 0x5eed }
    }
}

/// Keeps `[a, b, c]` if it is reduced and primitive.
fn accept(a: &Integer, b: Integer, d: &Discriminant) -> Option<QuadForm> {
    let f = QuadForm::from_ab(a.clone(), b, d)?;
    (f.is_reduced() && f.is_primitive()).then_some(f)
}

/// Loop over `0 <= B <= A <= sqrt(|D|/3)` with `B = D (mod 2)`; both signs of
/// `B` are emitted where reducedness allows.
pub fn enumerate_naive(d: &Discriminant) -> ClassGroupList {
    let max_a = d
        .max_reduced_a()
        .to_u64()
        .expect("discriminant too large for naive enumeration");
    let parity = d.value().mod_u(2) as u64;
    let forms: Vec<QuadForm> = (1..=max_a)
        .into_par_iter()
        .flat_map_iter(|a| {
            let a_int = Integer::from(a);
            let four_a = Integer::from(4 * a);
            let mut out = Vec::new();
            let mut num = Integer::new();
            let mut b = parity;
            while b <= a {
                num.assign_sq_minus(b, d.value());
                if num.is_divisible(&four_a) {
                    let c = Integer::from(&num / &four_a);
                    if c >= a_int {
                        let f = QuadForm {
                            a: a_int.clone(),
                            b: Integer::from(b),
                            c,
                        };
                        if f.is_primitive() {
                            let mirror = b > 0 && b < a && f.c != f.a;
                            if mirror {
                                out.push(QuadForm {
                                    a: f.a.clone(),
                                    b: Integer::from(-&f.b),
                                    c: f.c.clone(),
                                });
                            }
                            out.push(f);
                        }
                    }
                }
                b += 2;
            }
            out
        })
        .collect();
    ClassGroupList::from_forms(d.clone(), forms)
}

trait AssignSqMinus {
    fn assign_sq_minus(&mut self, b: u64, d: &Integer);
}

impl AssignSqMinus for Integer {
    fn assign_sq_minus(&mut self, b: u64, d: &Integer) {
        use rug::Assign;
        self.assign(b);
        *self *= b;
        *self -= d;
    }
}

/// All `A <= limit` in factored form, built by extending smaller values by
/// one prime power at a time.
fn factored_range(limit: u64, primes: &[u64]) -> Vec<PrimeFactorization> {
    let mut out = vec![PrimeFactorization::default()];
    let mut stack: Vec<(u64, usize, Vec<(u64, u32)>)> = vec![(1, 0, Vec::new())];
    while let Some((value, start, factors)) = stack.pop() {
        for (i, &p) in primes.iter().enumerate().skip(start) {
            if value.saturating_mul(p) > limit {
                break;
            }
            let mut v = value;
            let mut e = 0;
            while v.saturating_mul(p) <= limit {
                v *= p;
                e += 1;
                let mut f = factors.clone();
                f.push((p, e));
                out.push(PrimeFactorization::new(f.clone()));
                stack.push((v, i + 1, f));
            }
        }
    }
    out
}

/// All `B` in `(-A, A]` with `B^2 = D (mod 4A)`, found from roots modulo the
/// prime powers of `4A` recombined with a CRT tree.
pub(crate) fn square_roots_mod_4a(
    d: &Discriminant,
    a: &PrimeFactorization,
    rng: &mut ChaCha8Rng,
) -> Vec<Integer> {
    let four_a = a.times_prime_power(2, 2);
    let mut moduli = Vec::new();
    let mut root_sets = Vec::new();
    for &(p, e) in four_a.factors() {
        let roots = sqrt_mod_prime_power(d.value(), p, e, rng);
        if roots.is_empty() {
            return Vec::new();
        }
        moduli.push(Integer::from(p.pow(e)));
        root_sets.push(roots);
    }
    let tree = CrtTree::new(moduli).expect("prime powers are coprime");
    let a_val = a.value();
    let two_a = 2 * a_val;
    let mut bs: Vec<u64> = Vec::new();
    let mut idx = vec![0usize; root_sets.len()];
    let mut residues: Vec<Integer> = root_sets.iter().map(|r| Integer::from(r[0])).collect();
    loop {
        let x = tree.combine(&residues);
        // roots mod 4A are invariant under x -> x + 2A
        bs.push((x % two_a).to_u64().expect("fits"));
        let mut k = 0;
        loop {
            if k == idx.len() {
                bs.sort_unstable();
                bs.dedup();
                let mut out: Vec<Integer> = bs
                    .into_iter()
                    .map(|b| {
                        if b > a_val {
                            Integer::from(b) - two_a
                        } else {
                            Integer::from(b)
                        }
                    })
                    .collect();
                out.sort_unstable();
                return out;
            }
            idx[k] += 1;
            if idx[k] < root_sets[k].len() {
                residues[k] = Integer::from(root_sets[k][idx[k]]);
                break;
            }
            idx[k] = 0;
            residues[k] = Integer::from(root_sets[k][0]);
            k += 1;
        }
    }
}

/// One loop over `A`: `B` comes from square roots of `D` modulo `4A`.
pub fn enumerate_factored(d: &Discriminant, config: &EnumerationConfig) -> ClassGroupList {
    let max_a = d.max_reduced_a().to_u64().expect("discriminant too large");
    let primes = sieve_primes(max_a);
    let values = factored_range(max_a, &primes);
    let forms: Vec<QuadForm> = values
        .par_iter()
        .flat_map_iter(|fact| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ fact.value());
            let a = Integer::from(fact.value());
            square_roots_mod_4a(d, fact, &mut rng)
                .into_iter()
                .filter_map(|b| accept(&a, b, d))
                .collect::<Vec<_>>()
        })
        .collect();
    ClassGroupList::from_forms(d.clone(), forms)
}

/// `6 log^2 |D|` (natural log); prime forms up to this norm generate the
/// class group under GRH.
pub fn generator_bound(d: &Discriminant) -> u64 {
    let l = d.abs().to_f64().ln();
    (6.0 * l * l).floor() as u64
}

/// The primitive reduced prime form of norm `p`, if `p` splits or ramifies.
fn prime_form(d: &Discriminant, p: u64, rng: &mut ChaCha8Rng) -> Option<QuadForm> {
    let fact = PrimeFactorization::new(vec![(p, 1)]);
    let a = Integer::from(p);
    square_roots_mod_4a(d, &fact, rng)
        .into_iter()
        .find_map(|b| {
            let f = QuadForm::from_ab(a.clone(), b, d)?;
            f.is_primitive().then(|| reduce_unchecked(f).0)
        })
}

/// Subgroup generated by the prime forms of norm at most [`generator_bound`].
///
/// For each generator `g` the powers `g^k` are taken until one lands in the
/// subgroup built so far; then every product `x * g^k` is added. Elements are
/// looked up by `(A, B)`. Complete only under GRH; see
/// [`enumerate_prime_generated_checked`].
pub fn enumerate_prime_generated(d: &Discriminant, config: &EnumerationConfig) -> ClassGroupList {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let identity = QuadForm::principal(d);
    let mut elements = vec![identity.clone()];
    let mut seen: HashSet<(Integer, Integer)> = HashSet::new();
    seen.insert((identity.a.clone(), identity.b.clone()));
    for p in sieve_primes(generator_bound(d)) {
        let Some(g) = prime_form(d, p, &mut rng) else {
            continue;
        };
        let mut powers = vec![g.clone()];
        loop {
            let last = powers.last().expect("non-empty");
            if seen.contains(&(last.a.clone(), last.b.clone())) {
                powers.pop();
                break;
            }
            let next = compose(last, &g).expect("same discriminant");
            powers.push(next);
        }
        if powers.is_empty() {
            continue;
        }
        let base = elements.clone();
        for x in &base {
            for gk in &powers {
                let y = compose(x, gk).expect("same discriminant");
                if seen.insert((y.a.clone(), y.b.clone())) {
                    elements.push(y);
                }
            }
        }
    }
    ClassGroupList::from_forms(d.clone(), elements)
}

/// [`enumerate_prime_generated`] with a known class number: reports a short
/// subgroup instead of returning it.
pub fn enumerate_prime_generated_checked(
    d: &Discriminant,
    expected_h: usize,
    config: &EnumerationConfig,
) -> Result<ClassGroupList, ClassGroupError> {
    let list = enumerate_prime_generated(d, config);
    if list.h() != expected_h {
        return Err(ClassGroupError::InsufficientGenerators {
            found: list.h(),
            expected: expected_h,
        });
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn disc(d: i64) -> Discriminant {
        Discriminant::from_i64(d).unwrap()
    }

    fn forms(list: &ClassGroupList) -> Vec<(i64, i64, i64)> {
        list.forms()
            .iter()
            .map(|f| {
                (
                    f.a.to_i64().unwrap(),
                    f.b.to_i64().unwrap(),
                    f.c.to_i64().unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn naive_examples() {
        assert_eq!(forms(&enumerate_naive(&disc(-4))), vec![(1, 0, 1)]);
        assert_eq!(forms(&enumerate_naive(&disc(-3))), vec![(1, 1, 1)]);
        assert_eq!(
            forms(&enumerate_naive(&disc(-23))),
            vec![(1, 1, 6), (2, -1, 3), (2, 1, 3)]
        );
        assert_eq!(enumerate_naive(&disc(-47)).h(), 5);
        // non-maximal order: [2,0,2] and [3,0,1]-type imprimitive forms are excluded
        assert_eq!(forms(&enumerate_naive(&disc(-16))), vec![(1, 0, 4)]);
        assert_eq!(forms(&enumerate_naive(&disc(-12))), vec![(1, 0, 3)]);
    }

    #[test]
    fn factored_examples() {
        let c = EnumerationConfig::default();
        assert_eq!(
            enumerate_factored(&disc(-23), &c),
            enumerate_naive(&disc(-23))
        );
        assert_eq!(forms(&enumerate_factored(&disc(-4), &c)), vec![(1, 0, 1)]);
        assert_eq!(enumerate_factored(&disc(-47), &c).h(), 5);
    }

    #[test]
    fn prime_generated_examples() {
        let c = EnumerationConfig::default();
        assert_eq!(
            enumerate_prime_generated(&disc(-23), &c),
            enumerate_naive(&disc(-23))
        );
        assert_eq!(
            forms(&enumerate_prime_generated(&disc(-4), &c)),
            vec![(1, 0, 1)]
        );
        assert!(matches!(
            enumerate_prime_generated_checked(&disc(-23), 4, &c),
            Err(ClassGroupError::InsufficientGenerators {
                found: 3,
                expected: 4
            })
        ));
    }

    #[test]
    fn factored_range_covers_everything() {
        let primes = sieve_primes(500);
        let mut values: Vec<u64> = factored_range(500, &primes)
            .iter()
            .map(|f| f.value())
            .collect();
        values.sort_unstable();
        assert_eq!(values, (1..=500).collect::<Vec<_>>());
        for f in factored_range(500, &primes) {
            assert_eq!(f, PrimeFactorization::of(f.value()));
        }
    }

    #[test]
    fn roots_mod_4a_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 3..400i64 {
            let Ok(d) = Discriminant::from_i64(-n) else {
                continue;
            };
            for a in 1..60u64 {
                let got: Vec<i64> = square_roots_mod_4a(&d, &PrimeFactorization::of(a), &mut rng)
                    .iter()
                    .map(|b| b.to_i64().unwrap())
                    .collect();
                let want: Vec<i64> = (-(a as i64) + 1..=a as i64)
                    .filter(|b| (b * b + n) % (4 * a as i64) == 0)
                    .collect();
                assert_eq!(got, want, "D=-{n} A={a}");
            }
        }
    }

    #[test]
    fn enumerators_agree_small_range() {
        let c = EnumerationConfig::default();
        for n in 3..3000i64 {
            let Ok(d) = Discriminant::from_i64(-n) else {
                continue;
            };
            let naive = enumerate_naive(&d);
            naive.check_invariants().unwrap();
            assert_eq!(enumerate_factored(&d, &c), naive, "D={d}");
            assert_eq!(enumerate_prime_generated(&d, &c), naive, "D={d}");
        }
    }

    #[test]
    fn enumerators_agree_random_large() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = EnumerationConfig::default();
        let mut count = 0;
        while count < 40 {
            let n = rng.gen_range(3..=1_000_000i64);
            let Ok(d) = Discriminant::from_i64(-n) else {
                continue;
            };
            count += 1;
            let naive = enumerate_naive(&d);
            assert_eq!(enumerate_factored(&d, &c), naive, "D={d}");
            assert_eq!(enumerate_prime_generated(&d, &c), naive, "D={d}");
        }
    }

    #[test]
    fn seed_does_not_change_output() {
        let d = disc(-999_995);
        let a = enumerate_factored(&d, &EnumerationConfig { seed: 1 });
        let b = enumerate_factored(&d, &EnumerationConfig { seed: 2 });
        assert_eq!(a, b);
    }
}
