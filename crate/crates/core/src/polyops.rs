//! Dense polynomials over `BigComplex`: FFT multiplication, product trees,
//! division through Newton inversion, multipoint evaluation and rounding to
//! integer coefficients.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rug::{Float, Integer};
use thiserror::Error;

use crate::bigfloat::{cexp, pi_const, BigComplex, BigReal, Precision};

/// Bits of a coefficient that must lie below the binary point for its
/// rounding to mean anything.
pub const MIN_FRACTION_BITS: i32 = 8;

/// Products with a factor of at most this many coefficients use the
/// schoolbook method.
pub const SCHOOLBOOK_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("no roots or points given")]
    Empty,
    #[error("divisor is not monic")]
    NotMonic,
    #[error("precision mismatch: {0} vs {1}")]
    PrecisionMismatch(Precision, Precision),
    #[error("insufficient precision: coefficient of degree {degree} is {distance:e} away from an integer ({part})")]
    InsufficientPrecision {
        degree: usize,
        distance: f64,
        part: RoundingPart,
    },
}

/// Which part of a coefficient failed to round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingPart {
    Real,
    Imaginary,
    /// Fewer than [`MIN_FRACTION_BITS`] bits below the binary point; the
    /// distance reported is the unit in the last place.
    Magnitude,
}

impl fmt::Display for RoundingPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundingPart::Real => "real part",
            RoundingPart::Imaginary => "imaginary part",
            RoundingPart::Magnitude => "too large for the precision",
        })
    }
}

/// Coefficients in ascending degree, all at one precision; no trailing zeros.
#[derive(Clone, PartialEq)]
pub struct FloatPoly {
    coeffs: Vec<BigComplex>,
    prec: Precision,
}

impl fmt::Debug for FloatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.coeffs.iter().map(|c| c.to_f64()))
            .finish()
    }
}

impl FloatPoly {
    /// Coefficients are converted to `prec`; trailing exact zeros are dropped.
    pub fn new(coeffs: Vec<BigComplex>, prec: Precision) -> Self {
        let coeffs = coeffs
            .into_iter()
            .map(|c| {
                if c.prec() == prec {
                    c
                } else {
                    c.with_prec(prec)
                }
            })
            .collect();
        let mut p = FloatPoly { coeffs, prec };
        p.trim();
        p
    }

    pub fn zero(prec: Precision) -> Self {
        FloatPoly {
            coeffs: Vec::new(),
            prec,
        }
    }

    pub fn one(prec: Precision) -> Self {
        FloatPoly {
            coeffs: vec![BigComplex::one(prec)],
            prec,
        }
    }

    /// `X - root`.
    pub fn linear(root: &BigComplex) -> Self {
        let prec = root.prec();
        FloatPoly {
            coeffs: vec![root.neg(), BigComplex::one(prec)],
            prec,
        }
    }

    pub fn from_integers(coeffs: &[Integer], prec: Precision) -> Self {
        FloatPoly::new(
            coeffs
                .iter()
                .map(|c| BigComplex::from_integer(c, prec))
                .collect(),
            prec,
        )
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[BigComplex] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigComplex> {
        self.coeffs
    }

    pub fn prec(&self) -> Precision {
        self.prec
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigComplex> {
        self.coeffs.last()
    }

    pub fn with_prec(&self, prec: Precision) -> Self {
        FloatPoly::new(
            self.coeffs.iter().map(|c| c.with_prec(prec)).collect(),
            prec,
        )
    }

    pub fn eval(&self, x: &BigComplex) -> BigComplex {
        let mut acc = BigComplex::zero(self.prec);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn add(&self, other: &FloatPoly) -> FloatPoly {
        let n = self.len().max(other.len());
        let z = BigComplex::zero(self.prec);
        let coeffs = (0..n)
            .map(|i| &*self.coeffs.get(i).unwrap_or(&z) + other.coeffs.get(i).unwrap_or(&z))
            .collect();
        FloatPoly::new(coeffs, self.prec)
    }

    pub fn sub(&self, other: &FloatPoly) -> FloatPoly {
        let n = self.len().max(other.len());
        let z = BigComplex::zero(self.prec);
        let coeffs = (0..n)
            .map(|i| &*self.coeffs.get(i).unwrap_or(&z) - other.coeffs.get(i).unwrap_or(&z))
            .collect();
        FloatPoly::new(coeffs, self.prec)
    }

    /// Coefficients of degree below `n`.
    pub fn truncate(&self, n: usize) -> FloatPoly {
        FloatPoly::new(self.coeffs.iter().take(n).cloned().collect(), self.prec)
    }

    /// Coefficients in reverse order, padded to `len`.
    fn reversed(&self, len: usize) -> FloatPoly {
        let mut c = self.coeffs.clone();
        c.resize(len, BigComplex::zero(self.prec));
        c.reverse();
        FloatPoly::new(c, self.prec)
    }

    /// Largest coefficient modulus, as `f64` (may be infinite for huge
    /// coefficients).
    pub fn max_abs_f64(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.abs().to_f64())
            .fold(0.0, f64::max)
    }
}

fn check_prec(f: &FloatPoly, g: &FloatPoly) {
    if f.prec != g.prec {
        panic!("{}", PolyError::PrecisionMismatch(f.prec, g.prec));
    }
}

/// Quadratic-time product.
pub fn schoolbook_mul(f: &FloatPoly, g: &FloatPoly) -> FloatPoly {
    check_prec(f, g);
    if f.is_zero() || g.is_zero() {
        return FloatPoly::zero(f.prec);
    }
    let mut out = vec![BigComplex::zero(f.prec); f.len() + g.len() - 1];
    for (i, a) in f.coeffs.iter().enumerate() {
        for (j, b) in g.coeffs.iter().enumerate() {
            out[i + j] += &(a * b);
        }
    }
    FloatPoly::new(out, f.prec)
}

type RootTable = Arc<Vec<BigComplex>>;

static ROOTS: OnceLock<Mutex<HashMap<(u32, u32), RootTable>>> = OnceLock::new();

/// `w^k`, `k < n/2`, for `w = exp(2 pi i / n)`: the primitive root from the
/// exponential, the others by successive multiplication with 32 extra bits.
fn roots_of_unity(log2n: u32, prec: Precision) -> RootTable {
    let cache = ROOTS.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache
        .lock()
        .expect("root cache poisoned")
        .get(&(log2n, prec.bits()))
    {
        return t.clone();
    }
    let n = 1usize << log2n;
    let w = prec.plus(32);
    let angle = pi_const(w).mul_pow2(1 - log2n as i32);
    let omega = cexp(&BigComplex::new(BigReal::zero(w), angle).expect("same precision"))
        .expect("unit modulus");
    let mut table = Vec::with_capacity(n / 2);
    let mut cur = BigComplex::one(w);
    for _ in 0..(n / 2).max(1) {
        table.push(cur.with_prec(prec));
        cur = &cur * &omega;
    }
    let table = Arc::new(table);
    cache
        .lock()
        .expect("root cache poisoned")
        .insert((log2n, prec.bits()), table.clone());
    table
}

fn bit_reverse(a: &mut [BigComplex]) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
}

/// In-place radix-2 transform; `inverse` uses conjugate roots and divides by
/// the length.
fn fft(a: &mut [BigComplex], roots: &[BigComplex], inverse: bool) {
    let n = a.len();
    bit_reverse(a);
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = &roots[k * stride];
                let w = if inverse { w.conj() } else { w.clone() };
                let t = &w * &a[start + k + len / 2];
                let u = a[start + k].clone();
                a[start + k] = &u + &t;
                a[start + k + len / 2] = &u - &t;
            }
        }
        len <<= 1;
    }
    if inverse {
        let shift = -(n.trailing_zeros() as i32);
        for x in a.iter_mut() {
            *x = x.mul_pow2(shift);
        }
    }
}

/// Product through a power-of-two FFT; small factors go to
/// [`schoolbook_mul`].
pub fn fft_mul(f: &FloatPoly, g: &FloatPoly) -> FloatPoly {
    check_prec(f, g);
    if f.len().min(g.len()) <= SCHOOLBOOK_LEN {
        return schoolbook_mul(f, g);
    }
    let out_len = f.len() + g.len() - 1;
    let log2n = out_len.next_power_of_two().trailing_zeros();
    let n = 1usize << log2n;
    let roots = roots_of_unity(log2n, f.prec);
    let pad = |p: &FloatPoly| {
        let mut v = p.coeffs.clone();
        v.resize(n, BigComplex::zero(p.prec));
        v
    };
    let (mut a, mut b) = rayon::join(
        || {
            let mut a = pad(f);
            fft(&mut a, &roots, false);
            a
        },
        || {
            let mut b = pad(g);
            fft(&mut b, &roots, false);
            b
        },
    );
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x *= y;
    }
    b.clear();
    fft(&mut a, &roots, true);
    a.truncate(out_len);
    FloatPoly::new(a, f.prec)
}

/// Levels `T_{k,i}` of the subproduct tree: level 0 holds `X - x_i` padded
/// with `1` to a power of two, level `t` the single root.
#[derive(Debug, Clone)]
pub struct ProductTree {
    levels: Vec<Vec<FloatPoly>>,
    leaves: usize,
}

impl ProductTree {
    pub fn levels(&self) -> &[Vec<FloatPoly>] {
        &self.levels
    }

    /// `prod (X - x_i)`.
    pub fn root(&self) -> &FloatPoly {
        &self.levels.last().expect("non-empty")[0]
    }

    pub fn into_root(mut self) -> FloatPoly {
        self.levels.pop().expect("non-empty").swap_remove(0)
    }

    /// Number of real (non-padding) leaves.
    pub fn leaves(&self) -> usize {
        self.leaves
    }

    /// `t = ceil(log2 h)`.
    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Forces the leading coefficient of a monic product to exactly one.
fn set_monic(mut p: FloatPoly) -> FloatPoly {
    let prec = p.prec;
    if let Some(l) = p.coeffs.last_mut() {
        *l = BigComplex::one(prec);
    }
    p
}

/// Builds the product tree of `X - x_i` level by level.
pub fn poly_from_roots(roots: &[BigComplex]) -> Result<ProductTree, PolyError> {
    let first = roots.first().ok_or(PolyError::Empty)?;
    let prec = first.prec();
    let size = roots.len().next_power_of_two();
    let mut level: Vec<FloatPoly> = roots
        .iter()
        .map(|r| FloatPoly::linear(&r.with_prec(prec)))
        .collect();
    level.resize(size, FloatPoly::one(prec));
    let mut levels = vec![level];
    while levels.last().expect("non-empty").len() > 1 {
        let prev = levels.last().expect("non-empty");
        let next: Vec<FloatPoly> = prev
            .par_chunks(2)
            .map(|pair| set_monic(fft_mul(&pair[0], &pair[1])))
            .collect();
        levels.push(next);
    }
    Ok(ProductTree {
        levels,
        leaves: roots.len(),
    })
}

/// Inverse of `f` modulo `X^n`, for `f(0) = 1`, by Newton iteration
/// `h <- h (2 - f h)`.
fn inverse_series(f: &FloatPoly, n: usize) -> FloatPoly {
    let prec = f.prec;
    let mut h = FloatPoly::one(prec);
    let mut k = 1;
    while k < n {
        k = (2 * k).min(n);
        let fh = fft_mul(&f.truncate(k), &h).truncate(k);
        let two_minus = FloatPoly::new(vec![BigComplex::from_i64(2, 0, prec)], prec).sub(&fh);
        h = fft_mul(&h, &two_minus).truncate(k);
    }
    h
}

fn is_monic(g: &FloatPoly) -> bool {
    match g.leading() {
        None => false,
        Some(l) => {
            let d = (l - &BigComplex::one(g.prec)).abs();
            d.exponent()
                .map_or(true, |e| e <= -(g.prec.bits() as i32) + 8)
        }
    }
}

/// `f = q g + r` with `deg r < deg g`, for monic `g`. The quotient is the
/// reversed product of the reversed dividend with the inverse of the
/// reversed divisor.
pub fn poly_divrem(f: &FloatPoly, g: &FloatPoly) -> Result<(FloatPoly, FloatPoly), PolyError> {
    check_prec(f, g);
    if !is_monic(g) {
        return Err(PolyError::NotMonic);
    }
    let n = g.len() - 1;
    if f.len() <= n {
        return Ok((FloatPoly::zero(f.prec), f.clone()));
    }
    let m = f.len() - 1;
    let k = m - n + 1;
    let rev_g = set_leading_one_constant(g.reversed(g.len()));
    let inv = inverse_series(&rev_g, k);
    let rev_f = f.reversed(f.len());
    let q_rev = fft_mul(&rev_f.truncate(k), &inv).truncate(k);
    let q = q_rev.reversed(k);
    let r = f.sub(&fft_mul(&q, g)).truncate(n);
    Ok((q, r))
}

fn set_leading_one_constant(mut p: FloatPoly) -> FloatPoly {
    let prec = p.prec;
    if let Some(c) = p.coeffs.first_mut() {
        *c = BigComplex::one(prec);
    }
    p
}

/// Long division, for reference.
pub fn schoolbook_divrem(
    f: &FloatPoly,
    g: &FloatPoly,
) -> Result<(FloatPoly, FloatPoly), PolyError> {
    check_prec(f, g);
    if !is_monic(g) {
        return Err(PolyError::NotMonic);
    }
    let n = g.len() - 1;
    if f.len() <= n {
        return Ok((FloatPoly::zero(f.prec), f.clone()));
    }
    let mut r = f.coeffs.clone();
    let mut q = vec![BigComplex::zero(f.prec); f.len() - n];
    for i in (0..q.len()).rev() {
        let c = r[i + n].clone();
        for (j, gj) in g.coeffs.iter().enumerate() {
            r[i + j] -= &(&c * gj);
        }
        q[i] = c;
    }
    r.truncate(n);
    Ok((FloatPoly::new(q, f.prec), FloatPoly::new(r, f.prec)))
}

/// `f mod T` down the product tree of the points; the leaves are `f(x_i)`.
pub fn multi_eval(f: &FloatPoly, points: &[BigComplex]) -> Result<Vec<BigComplex>, PolyError> {
    let tree = poly_from_roots(points)?;
    Ok(multi_eval_with_tree(f, &tree))
}

/// [`multi_eval`] reusing a product tree.
pub fn multi_eval_with_tree(f: &FloatPoly, tree: &ProductTree) -> Vec<BigComplex> {
    let prec = tree.root().prec;
    let reduce = |p: &FloatPoly, m: &FloatPoly| -> FloatPoly {
        if p.len() < m.len() {
            p.clone()
        } else {
            poly_divrem(p, m).expect("tree nodes are monic").1
        }
    };
    let mut current = vec![reduce(&f.with_prec(prec), tree.root())];
    for level in tree.levels.iter().rev().skip(1) {
        current = level
            .par_iter()
            .enumerate()
            .map(|(i, node)| {
                let parent = &current[i / 2];
                if node.len() <= 1 {
                    parent.clone()
                } else {
                    reduce(parent, node)
                }
            })
            .collect();
    }
    current
        .into_iter()
        .take(tree.leaves)
        .map(|r| {
            r.coeffs
                .into_iter()
                .next()
                .unwrap_or_else(|| BigComplex::zero(prec))
        })
        .collect()
}

/// [`multi_eval`] on `chunks` groups of points taken in order of increasing
/// modulus; results are returned in the original order.
pub fn multi_eval_chunked(
    f: &FloatPoly,
    points: &[BigComplex],
    chunks: usize,
) -> Result<Vec<BigComplex>, PolyError> {
    if points.is_empty() {
        return Err(PolyError::Empty);
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    let moduli: Vec<BigReal> = points.iter().map(|p| p.norm_sqr()).collect();
    order.sort_by(|&a, &b| moduli[a].partial_cmp(&moduli[b]).expect("finite"));
    let size = points.len().div_ceil(chunks.max(1));
    let mut out = vec![BigComplex::zero(points[0].prec()); points.len()];
    for group in order.chunks(size) {
        let pts: Vec<BigComplex> = group.iter().map(|&i| points[i].clone()).collect();
        for (&i, v) in group.iter().zip(multi_eval(f, &pts)?) {
            out[i] = v;
        }
    }
    Ok(out)
}

/// Exact integer polynomial obtained by rounding, with the largest observed
/// distance of a real part from its integer.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedPoly {
    pub coeffs: Vec<Integer>,
    pub worst_distance: f64,
}

/// Accepts a coefficient if its imaginary part is at most
/// `2^-16 max(1, |c|)`, its real part within 1/4 of an integer, and the
/// precision leaves at least [`MIN_FRACTION_BITS`] fractional bits.
pub fn round_to_integers(f: &FloatPoly) -> Result<RoundedPoly, PolyError> {
    let mut coeffs = Vec::with_capacity(f.len());
    let mut worst = 0.0f64;
    for (degree, c) in f.coeffs.iter().enumerate() {
        let modulus = c.abs();
        let mut limit = Float::with_val(64, modulus.as_float());
        if limit < 1 {
            limit = Float::with_val(64, 1);
        }
        limit >>= 16;
        let im = Float::with_val(64, c.im_float().abs_ref());
        if im > limit {
            let distance = Float::with_val(64, &im / &limit).to_f64() * 2f64.powi(-16);
            return Err(PolyError::InsufficientPrecision {
                degree,
                distance,
                part: RoundingPart::Imaginary,
            });
        }
        if let Some(e) = c.re().exponent() {
            let ulp_exp = e - f.prec.bits() as i32;
            if ulp_exp > -MIN_FRACTION_BITS {
                let distance = 2f64.powi(ulp_exp);
                return Err(PolyError::InsufficientPrecision {
                    degree,
                    distance,
                    part: RoundingPart::Magnitude,
                });
            }
        }
        let (n, frac) = c.re().round_to_integer();
        let distance = frac.abs().to_f64();
        if distance > 0.25 {
            return Err(PolyError::InsufficientPrecision {
                degree,
                distance,
                part: RoundingPart::Real,
            });
        }
        worst = worst.max(distance);
        coeffs.push(n);
    }
    Ok(RoundedPoly {
        coeffs,
        worst_distance: worst,
    })
}
