//! Phase timings per discriminant and strategy, and the product-tree
//! doubling ladder.

use std::fmt::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{compute_class_polynomial, EngineError, PipelineConfig, RunReport, Strategy};
use crate::bigfloat::{BigComplex, Precision};
use crate::classgroup::Discriminant;
use crate::polyops::poly_from_roots;

/// Runs the pipeline for every pair of discriminant and strategy.
pub fn benchmark_suite(
    ds: &[Discriminant],
    strategies: &[Strategy],
    base: &PipelineConfig,
) -> Result<Vec<RunReport>, EngineError> {
    let mut out = Vec::with_capacity(ds.len() * strategies.len());
    for &strategy in strategies {
        for d in ds {
            let config = PipelineConfig {
                strategy,
                ..base.clone()
            };
            out.push(compute_class_polynomial(d, &config)?.1);
        }
    }
    Ok(out)
}

fn secs(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64())
}

const LABELS: [&str; 7] = [
    "class group",
    "q-powers",
    "eta table",
    "conjugates",
    "poly from roots",
    "rounding",
    "total",
];

/// One block per strategy with a column per discriminant, then the ratio of
/// agm to sparse evaluation time where both were run.
pub fn format_bench_table(reports: &[RunReport]) -> String {
    let mut out = String::new();
    let mut strategies: Vec<Strategy> = Vec::new();
    for r in reports {
        if !strategies.contains(&r.strategy) {
            strategies.push(r.strategy);
        }
    }
    for s in &strategies {
        let rows: Vec<&RunReport> = reports.iter().filter(|r| r.strategy == *s).collect();
        let _ = writeln!(out, "strategy {s}");
        let mut line = |label: &str, cells: Vec<String>| {
            let _ = write!(out, "  {label:<22}");
            for c in cells {
                let _ = write!(out, "{c:>14}");
            }
            out.push('\n');
        };
        line(
            "|D|",
            rows.iter()
                .map(|r| r.discriminant.abs().to_string())
                .collect(),
        );
        line("h", rows.iter().map(|r| r.h.to_string()).collect());
        line(
            "(1) height, nats",
            rows.iter()
                .map(|r| format!("{:.1}", r.measured_height_nats))
                .collect(),
        );
        line(
            "(2) proven bound, nats",
            rows.iter()
                .map(|r| format!("{:.1}", r.proven_bound_nats))
                .collect(),
        );
        line(
            "heuristic, nats",
            rows.iter()
                .map(|r| format!("{:.1}", r.heuristic_nats))
                .collect(),
        );
        line(
            "precision, bits",
            rows.iter()
                .map(|r| r.precision.bits().to_string())
                .collect(),
        );
        line(
            "attempts",
            rows.iter().map(|r| r.attempts.to_string()).collect(),
        );
        for (i, label) in LABELS.iter().enumerate() {
            let cells = rows
                .iter()
                .map(|r| {
                    let t = &r.timings;
                    secs(
                        [
                            t.class_group,
                            t.q_powers,
                            t.eta_table,
                            t.conjugates,
                            t.tree,
                            t.rounding,
                            t.total(),
                        ][i],
                    )
                })
                .collect();
            line(&format!("{label}, s"), cells);
        }
    }
    let evaluation =
        |r: &RunReport| r.timings.q_powers + r.timings.eta_table + r.timings.conjugates;
    let ratios: Vec<(String, String)> = reports
        .iter()
        .filter(|r| r.strategy == Strategy::Agm)
        .filter_map(|agm| {
            let sparse = reports
                .iter()
                .find(|r| r.strategy == Strategy::Sparse && r.discriminant == agm.discriminant)?;
            let ratio = evaluation(agm).as_secs_f64() / evaluation(sparse).as_secs_f64().max(1e-9);
            Some((agm.discriminant.abs().to_string(), format!("{ratio:.2}")))
        })
        .collect();
    if !ratios.is_empty() {
        let _ = writeln!(out, "agm / sparse evaluation time");
        for (d, r) in ratios {
            let _ = writeln!(out, "  |D| = {d:<12} {r}");
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderStep {
    pub h: usize,
    pub time: Duration,
}

/// Times [`poly_from_roots`] on `h` random roots in the unit disc, for each
/// `h`, keeping the fastest of `repeats` runs.
pub fn tree_scaling_ladder(
    hs: &[usize],
    prec: Precision,
    repeats: usize,
    seed: u64,
) -> Vec<LadderStep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    hs.iter()
        .map(|&h| {
            let roots: Vec<BigComplex> = (0..h)
                .map(|_| {
                    BigComplex::from_f64(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7), prec)
                })
                .collect();
            let time = (0..repeats.max(1))
                .map(|_| {
                    let start = Instant::now();
                    let tree = poly_from_roots(&roots).expect("non-empty");
                    let elapsed = start.elapsed();
                    drop(tree);
                    elapsed
                })
                .min()
                .expect("at least one run");
            LadderStep { h, time }
        })
        .collect()
}
