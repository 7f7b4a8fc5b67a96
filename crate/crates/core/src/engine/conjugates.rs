//! `j(tau_i)` at all roots of the reduced forms, by three strategies.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{EngineError, Strategy};
use crate::bigfloat::{self, BigComplex, Precision};
use crate::classgroup::QuadForm;
use crate::modeval::{
    eta_truncation, j_agm, j_from_weber_f1, pentagonal_sum, reduced_point, ReducedPoint, TauPoint,
    GUARD_BITS,
};
use crate::polyops::{multi_eval, multi_eval_chunked, FloatPoly};

/// Wall-clock time of the evaluation phases. Strategies that do not separate
/// a phase report zero for it.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConjugateTimings {
    pub q_powers: Duration,
    pub eta_table: Duration,
    pub conjugates: Duration,
}

/// `j(tau_i)` for every form, at `prec`. `chunks` applies to the multipoint
/// strategy only.
pub fn conjugates(
    forms: &[QuadForm],
    prec: Precision,
    strategy: Strategy,
    chunks: Option<usize>,
) -> Result<(Vec<BigComplex>, ConjugateTimings), EngineError> {
    match strategy {
        Strategy::Sparse | Strategy::Multipoint => via_eta_table(forms, prec, strategy, chunks),
        Strategy::Agm => {
            let start = Instant::now();
            let js = forms
                .par_iter()
                .map(|f| j_agm(&TauPoint::new(f.clone(), prec)?))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((
                js,
                ConjugateTimings {
                    conjugates: start.elapsed(),
                    ..Default::default()
                },
            ))
        }
    }
}

fn via_eta_table(
    forms: &[QuadForm],
    prec: Precision,
    strategy: Strategy,
    chunks: Option<usize>,
) -> Result<(Vec<BigComplex>, ConjugateTimings), EngineError> {
    let w = prec.plus(GUARD_BITS);
    let mut timings = ConjugateTimings::default();

    // tau_i at even positions, tau_i / 2 at odd ones
    let start = Instant::now();
    let mut all_forms = Vec::with_capacity(2 * forms.len());
    for f in forms {
        let t = TauPoint::new(f.clone(), Precision::at_least(64))?;
        all_forms.push(f.clone());
        all_forms.push(t.half().form().clone());
    }
    let points = all_forms
        .par_iter()
        .map(|f| reduced_point(f, w))
        .collect::<Result<Vec<ReducedPoint>, _>>()?;
    timings.q_powers = start.elapsed();

    let start = Instant::now();
    let series: Vec<BigComplex> = match strategy {
        Strategy::Multipoint => {
            let cutoff = points
                .iter()
                .map(|p| eta_truncation(w, p.z.im().to_f64()))
                .max()
                .unwrap_or(1);
            let poly = eta_polynomial(cutoff, w);
            let qs: Vec<BigComplex> = points.iter().map(|p| p.q.clone()).collect();
            match chunks {
                Some(k) if k > 1 => multi_eval_chunked(&poly, &qs, k)?,
                _ => multi_eval(&poly, &qs)?,
            }
        }
        _ => points
            .par_iter()
            .map(|p| pentagonal_sum(&p.q, eta_truncation(w, p.z.im().to_f64())))
            .collect(),
    };
    let etas = points
        .par_iter()
        .zip(series.par_iter())
        .map(|(p, s)| bigfloat::div(&(&p.q24 * s), &p.multiplier))
        .collect::<Result<Vec<_>, _>>()?;
    timings.eta_table = start.elapsed();

    let start = Instant::now();
    let js = etas
        .par_chunks(2)
        .map(|pair| Ok(j_from_weber_f1(&bigfloat::div(&pair[1], &pair[0])?)?.with_prec(prec)))
        .collect::<Result<Vec<_>, EngineError>>()?;
    timings.conjugates = start.elapsed();
    Ok((js, timings))
}

/// `1 + sum (-1)^v (X^{v(3v-1)/2} + X^{v(3v+1)/2})` over exponents below
/// `cutoff`, as a dense polynomial.
pub fn eta_polynomial(cutoff: u64, prec: Precision) -> FloatPoly {
    let mut coeffs = vec![BigComplex::zero(prec); cutoff.max(1) as usize];
    coeffs[0] = BigComplex::one(prec);
    for v in 1u64.. {
        let sign = if v % 2 == 1 { -1 } else { 1 };
        let (em, ep) = (v * (3 * v - 1) / 2, v * (3 * v + 1) / 2);
        if em >= cutoff {
            break;
        }
        coeffs[em as usize] = BigComplex::from_i64(sign, 0, prec);
        if ep < cutoff {
            coeffs[ep as usize] = BigComplex::from_i64(sign, 0, prec);
        }
    }
    FloatPoly::new(coeffs, prec)
}

/// `max_i |a_i - b_i| / max(|a_i|, 1)`, as a base-2 logarithm; `-inf` when
/// the lists are equal.
pub fn max_relative_difference_log2(a: &[BigComplex], b: &[BigComplex]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if d.is_zero() {
                return f64::NEG_INFINITY;
            }
            let scale = x.abs().as_float().clone().log2().to_f64().max(0.0);
            d.as_float().clone().log2().to_f64() - scale
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
