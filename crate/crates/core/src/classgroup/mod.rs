//! Binary quadratic forms of negative discriminant and enumeration of the
//! class group.
//!
//! Three enumerators produce the same [`ClassGroupList`]:
//! [`enumerate_naive`] loops over `(A, B)`, [`enumerate_factored`] loops over
//! `A` only and solves `B^2 = D (mod 4A)` from the factorisation of `A`, and
//! [`enumerate_prime_generated`] closes the subgroup generated by small prime
//! forms under composition. The last one is complete only under GRH.

mod arith;
mod enumerate;

use std::fmt;
use std::str::FromStr;

use rug::ops::{DivRoundingAssign, RemRoundingAssign};
use rug::{Assign, Integer};
use thiserror::Error;

pub use arith::{
    crt_tree, lift_root, sieve_primes, sqrt_mod_p, sqrt_mod_prime_power, CrtTree,
    PrimeFactorization,
};
pub use enumerate::{
    enumerate_factored, enumerate_naive, enumerate_prime_generated,
    enumerate_prime_generated_checked, generator_bound, EnumerationConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassGroupError {
    #[error("{0} is not a negative discriminant congruent to 0 or 1 mod 4")]
    InvalidDiscriminant(Integer),
    #[error("form {0} is not primitive")]
    NotPrimitive(QuadForm),
    #[error("form {0} is not positive definite")]
    NotPositiveDefinite(QuadForm),
    #[error("discriminant mismatch: {0} vs {1}")]
    DiscriminantMismatch(Integer, Integer),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("CRT moduli are not pairwise coprime")]
    NonCoprimeModuli,
    #[error("CRT needs at least one residue")]
    EmptyCrt,
    #[error("GRH generator bound insufficient: generated {found} classes, expected {expected}")]
    InsufficientGenerators { found: usize, expected: usize },
    #[error("malformed class group dump: {0}")]
    Parse(String),
}

/// A negative integer congruent to 0 or 1 modulo 4.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Discriminant(Integer);

impl Discriminant {
    pub fn new(d: Integer) -> Result<Self, ClassGroupError> {
        let r = d.mod_u(4);
        if d < 0 && (r == 0 || r == 1) {
            Ok(Discriminant(d))
        } else {
            Err(ClassGroupError::InvalidDiscriminant(d))
        }
    }

    pub fn from_i64(d: i64) -> Result<Self, ClassGroupError> {
        Self::new(Integer::from(d))
    }

    pub fn value(&self) -> &Integer {
        &self.0
    }

    pub fn abs(&self) -> Integer {
        Integer::from(self.0.abs_ref())
    }

    /// `|D|` as `u64`, when it fits.
    pub fn abs_u64(&self) -> Option<u64> {
        self.abs().to_u64()
    }

    /// Largest `A` a reduced form can have: `floor(sqrt(|D|/3))`.
    pub fn max_reduced_a(&self) -> Integer {
        let third: Integer = self.abs() / 3u32;
        third.sqrt()
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for Discriminant {
    type Err = ClassGroupError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let d = Integer::from_str(s.trim()).map_err(|e| ClassGroupError::Parse(e.to_string()))?;
        Discriminant::new(d)
    }
}

/// The form `A x^2 + B xy + C y^2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadForm {
    pub a: Integer,
    pub b: Integer,
    pub c: Integer,
}

impl QuadForm {
    pub fn new(a: impl Into<Integer>, b: impl Into<Integer>, c: impl Into<Integer>) -> Self {
        QuadForm {
            a: a.into(),
            b: b.into(),
            c: c.into(),
        }
    }

    /// The form `[a, b, (b^2 - D)/(4a)]`, if `4a` divides `b^2 - D`.
    pub fn from_ab(a: Integer, b: Integer, d: &Discriminant) -> Option<Self> {
        let mut num = Integer::from(b.square_ref());
        num -= d.value();
        let four_a = Integer::from(&a << 2);
        if four_a == 0 || !num.is_divisible(&four_a) {
            return None;
        }
        num.div_exact_mut(&four_a);
        Some(QuadForm { a, b, c: num })
    }

    /// `[1, 0, -D/4]` or `[1, 1, (1 - D)/4]`.
    pub fn principal(d: &Discriminant) -> Self {
        let b = Integer::from(d.value().mod_u(2));
        QuadForm::from_ab(Integer::from(1), b, d).expect("principal form exists")
    }

    pub fn discriminant(&self) -> Integer {
        let mut d = Integer::from(self.b.square_ref());
        d -= Integer::from(&self.a * &self.c) << 2;
        d
    }

    pub fn content(&self) -> Integer {
        Integer::from(self.a.gcd_ref(&self.b)).gcd(&self.c)
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.discriminant() < 0
    }

    /// `|B| <= A <= C`, with `B >= 0` whenever `|B| = A` or `A = C`.
    pub fn is_reduced(&self) -> bool {
        let abs_b = Integer::from(self.b.abs_ref());
        if abs_b > self.a || self.a > self.c {
            return false;
        }
        if (abs_b == self.a || self.a == self.c) && self.b < 0 {
            return false;
        }
        true
    }

    /// The reduced representative of the inverse class.
    pub fn inverse(&self) -> Self {
        let f = QuadForm {
            a: self.a.clone(),
            b: Integer::from(-&self.b),
            c: self.c.clone(),
        };
        reduce_unchecked(f).0
    }

    pub(crate) fn validate(&self) -> Result<(), ClassGroupError> {
        if !self.is_positive_definite() {
            return Err(ClassGroupError::NotPositiveDefinite(self.clone()));
        }
        if !self.is_primitive() {
            return Err(ClassGroupError::NotPrimitive(self.clone()));
        }
        Ok(())
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.a, self.b, self.c)
    }
}

/// Generators of `SL_2(Z)` acting on the upper half plane:
/// `S: z -> -1/z`, `T: z -> z + 1`, `T^-1: z -> z - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    S,
    T,
    TInv,
}

/// One step of a [`TransformWord`]; translations are run-length encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordStep {
    S,
    /// `T^k` (negative `k` is `T^-|k|`).
    Shift(Integer),
}

/// Word in `S`, `T`, `T^-1`; steps apply left to right.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransformWord {
    steps: Vec<WordStep>,
}

impl TransformWord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_steps(steps: Vec<WordStep>) -> Self {
        TransformWord { steps }
    }

    pub fn steps(&self) -> &[WordStep] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push_s(&mut self) {
        self.steps.push(WordStep::S);
    }

    pub fn push_shift(&mut self, k: Integer) {
        if k == 0 {
            return;
        }
        if let Some(WordStep::Shift(prev)) = self.steps.last_mut() {
            *prev += k;
            if *prev == 0 {
                self.steps.pop();
            }
            return;
        }
        self.steps.push(WordStep::Shift(k));
    }

    /// Expanded spelling; only sensible for short translations.
    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::new();
        for step in &self.steps {
            match step {
                WordStep::S => out.push(Letter::S),
                WordStep::Shift(k) => {
                    let n = k.to_i64().expect("translation too long to spell out");
                    let letter = if n > 0 { Letter::T } else { Letter::TInv };
                    out.extend(std::iter::repeat(letter).take(n.unsigned_abs() as usize));
                }
            }
        }
        out
    }
}

fn reduce_unchecked(mut f: QuadForm) -> (QuadForm, TransformWord) {
    let mut word = TransformWord::new();
    let mut two_a = Integer::new();
    let mut s = Integer::new();
    let mut tmp = Integer::new();
    loop {
        // normalise B into (-A, A] with z -> z + s, i.e. B -> B - 2As
        let neg_a = Integer::from(-&f.a);
        if !(f.b > neg_a && f.b <= f.a) {
            two_a.assign(&f.a << 1);
            s.assign(&f.b - &f.a);
            s.div_ceil_assign(&two_a);
            // C -> A s^2 - B s + C
            tmp.assign(&f.a * &s);
            tmp -= &f.b;
            tmp *= &s;
            f.c += &tmp;
            tmp.assign(&two_a * &s);
            f.b -= &tmp;
            word.push_shift(s.clone());
        }
        if f.a > f.c {
            std::mem::swap(&mut f.a, &mut f.c);
            f.b = -std::mem::take(&mut f.b);
            word.push_s();
            continue;
        }
        if f.a == f.c && f.b < 0 {
            f.b = -std::mem::take(&mut f.b);
            word.push_s();
        }
        return (f, word);
    }
}

/// The reduced form equivalent to `f`, and the word taking the root
/// `(-B + sqrt(D))/(2A)` of `f` to the root of the result, which lies in the
/// standard fundamental domain.
pub fn reduce_form(f: &QuadForm) -> Result<(QuadForm, TransformWord), ClassGroupError> {
    f.validate()?;
    Ok(reduce_unchecked(f.clone()))
}

/// Gauss composition followed by reduction.
pub fn compose(f: &QuadForm, g: &QuadForm) -> Result<QuadForm, ClassGroupError> {
    let (df, dg) = (f.discriminant(), g.discriminant());
    if df != dg {
        return Err(ClassGroupError::DiscriminantMismatch(df, dg));
    }
    f.validate()?;
    g.validate()?;
    let (f1, f2) = if f.a > g.a { (g, f) } else { (f, g) };
    let (a1, b1) = (&f1.a, &f1.b);
    let (a2, b2, c2) = (&f2.a, &f2.b, &f2.c);
    let s: Integer = Integer::from(b1 + b2) >> 1;
    let n = Integer::from(b2 - &s);
    let (d, y1) = if a2.is_divisible(a1) {
        (a1.clone(), Integer::new())
    } else {
        let (d, u, _v) = a2.clone().gcd_cofactors(a1.clone(), Integer::new());
        (d, u)
    };
    let (d1, x2, y2) = if s.is_divisible(&d) {
        (d.clone(), Integer::new(), Integer::from(-1))
    } else {
        let (d1, u, v) = s.clone().gcd_cofactors(d.clone(), Integer::new());
        (d1, u, -v)
    };
    let v1 = Integer::from(a1 / &d1);
    let v2 = Integer::from(a2 / &d1);
    let mut r = Integer::from(&y1 * &y2) * &n;
    r -= Integer::from(&x2 * c2);
    r.rem_euc_assign(&v1);
    let b3 = Integer::from(&v2 * &r) * 2u32 + b2;
    let a3 = Integer::from(&v1 * &v2);
    let mut c3 = Integer::from(&v2 * &r) + b2;
    c3 *= &r;
    c3 += Integer::from(c2 * &d1);
    c3.div_exact_mut(&v1);
    let composed = QuadForm {
        a: a3,
        b: b3,
        c: c3,
    };
    debug_assert_eq!(composed.discriminant(), df);
    Ok(reduce_unchecked(composed).0)
}

/// The reduced primitive forms of one discriminant, sorted by `A` then `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassGroupList {
    discriminant: Discriminant,
    forms: Vec<QuadForm>,
}

impl ClassGroupList {
    pub(crate) fn from_forms(discriminant: Discriminant, mut forms: Vec<QuadForm>) -> Self {
        forms.sort_by(|x, y| x.a.cmp(&y.a).then_with(|| x.b.cmp(&y.b)));
        forms.dedup();
        ClassGroupList {
            discriminant,
            forms,
        }
    }

    pub fn discriminant(&self) -> &Discriminant {
        &self.discriminant
    }

    pub fn forms(&self) -> &[QuadForm] {
        &self.forms
    }

    /// Class number.
    pub fn h(&self) -> usize {
        self.forms.len()
    }

    /// Every form is reduced, primitive, of discriminant `D`, with
    /// `3 A^2 <= |D|`; forms are distinct and canonically ordered.
    pub fn check_invariants(&self) -> Result<(), String> {
        let d = self.discriminant.value();
        let abs_d = self.discriminant.abs();
        for f in &self.forms {
            if f.discriminant() != *d {
                return Err(format!("{f} has the wrong discriminant"));
            }
            if !f.is_primitive() {
                return Err(format!("{f} is not primitive"));
            }
            if !f.is_reduced() {
                return Err(format!("{f} is not reduced"));
            }
            if Integer::from(f.a.square_ref()) * 3u32 > abs_d {
                return Err(format!("{f} has A above sqrt(|D|/3)"));
            }
        }
        for w in self.forms.windows(2) {
            if (&w[0].a, &w[0].b) >= (&w[1].a, &w[1].b) {
                return Err(format!("{} and {} out of order", w[0], w[1]));
            }
        }
        Ok(())
    }

    /// `D h` followed by one `A B C` line per form.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.discriminant, self.h());
        for f in &self.forms {
            out.push_str(&format!("{} {} {}\n", f.a, f.b, f.c));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ClassGroupError> {
        let bad = |m: &str| ClassGroupError::Parse(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        let mut hp = header.split_whitespace();
        let d: Discriminant = hp.next().ok_or_else(|| bad("missing D"))?.parse()?;
        let h: usize = hp
            .next()
            .ok_or_else(|| bad("missing h"))?
            .parse()
            .map_err(|_| bad("bad h"))?;
        let mut forms = Vec::with_capacity(h);
        for line in lines {
            let nums: Vec<Integer> = line
                .split_whitespace()
                .map(|t| Integer::from_str(t).map_err(|_| bad(line)))
                .collect::<Result<_, _>>()?;
            if nums.len() != 3 {
                return Err(bad(line));
            }
            let mut it = nums.into_iter();
            forms.push(QuadForm {
                a: it.next().unwrap(),
                b: it.next().unwrap(),
                c: it.next().unwrap(),
            });
        }
        if forms.len() != h {
            return Err(bad("form count does not match h"));
        }
        let list = ClassGroupList::from_forms(d, forms);
        list.check_invariants().map_err(ClassGroupError::Parse)?;
        Ok(list)
    }
}

/// Upper bound `2 N (log N + gamma) + 1`, `N = sqrt(|D|/3)`, on the class number.
pub fn class_number_bound(d: &Discriminant) -> f64 {
    let n = (d.abs().to_f64() / 3.0).sqrt();
    if n < 1.0 {
        return 1.0;
    }
    2.0 * n * (n.ln() + 0.577_215_664_901_532_9) + 1.0
}
