//! Desk-scale benchmark: runs every method on a seeded Gaussian mixture and
//! tabulates coverage and per-phase wall-clock time.

use std::fmt::Write as _;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::selectors::select;
use crate::synthetic::{gaussian_mixture, MixtureSpec};
use crate::types::{CoresetResult, EmbeddingSet, Kernel, Method, SelectionConfig, DEFAULT_ROW_CAP};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub mixture: MixtureSpec,
    pub alphas: Vec<f64>,
    pub gamma: f64,
    pub similarity: Kernel,
    pub row_cap: usize,
}

impl BenchConfig {
    /// The pinned coverage benchmark at pruning ratios 70, 90 and 99 %.
    pub fn coverage_benchmark() -> Self {
        Self {
            mixture: MixtureSpec::BENCHMARK,
            alphas: vec![0.7, 0.9, 0.99],
            gamma: crate::types::DEFAULT_GAMMA,
            similarity: Kernel::ShiftedCosine,
            row_cap: DEFAULT_ROW_CAP,
        }
    }

    pub fn check_size(&self) -> Result<()> {
        let n = self.mixture.per_class;
        if n > self.row_cap {
            return Err(Error::ClassTooLarge {
                class: 0,
                rows: n,
                cap: self.row_cap,
                bytes: (n as u128) * (n as u128) * 8,
            });
        }
        if self.mixture.classes == 0 || n == 0 || self.mixture.dim == 0 {
            return Err(crate::error::invalid("classes, n and d must be positive"));
        }
        Ok(())
    }
}

/// One method at one pruning ratio.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub result: CoresetResult,
    /// Size-weighted mean empirical coverage over classes.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AlphaRow {
    pub alpha: f64,
    /// K per class (all equal when classes have equal size).
    pub ks: Vec<Option<usize>>,
    pub runs: Vec<MethodRun>,
}

impl AlphaRow {
    pub fn coverage_of(&self, method: Method) -> Option<f64> {
        self.runs
            .iter()
            .find(|r| r.method == method)
            .and_then(|r| r.coverage)
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<AlphaRow>,
}

fn mean_coverage(result: &CoresetResult, set: &EmbeddingSet) -> Option<f64> {
    let mut covered = 0.0;
    for (class, c) in result.per_class.iter().enumerate() {
        covered += c.empirical_coverage? * set.class_rows(class).len() as f64;
    }
    Some(covered / set.len() as f64)
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.check_size()?;
    let set = gaussian_mixture(&config.mixture)?;
    let mut rows = Vec::with_capacity(config.alphas.len());
    for &alpha in &config.alphas {
        let mut runs = Vec::with_capacity(Method::ALL.len());
        for method in Method::ALL {
            let sel = SelectionConfig {
                alpha,
                gamma: config.gamma,
                method,
                similarity: config.similarity,
                seed: config.mixture.seed,
                threads: Default::default(),
                row_cap: config.row_cap,
            };
            let result = select(&set, &sel)?;
            let coverage = mean_coverage(&result, &set);
            runs.push(MethodRun {
                method,
                result,
                coverage,
            });
        }
        let ks = runs[0].result.per_class.iter().map(|c| c.k).collect();
        rows.push(AlphaRow { alpha, ks, runs });
    }
    Ok(BenchReport {
        config: config.clone(),
        rows,
    })
}

fn fmt_k(ks: &[Option<usize>]) -> String {
    let mut distinct: Vec<usize> = ks.iter().flatten().copied().collect();
    distinct.sort_unstable();
    distinct.dedup();
    match distinct.as_slice() {
        [] => "-".into(),
        [k] => k.to_string(),
        many => format!("{}..{}", many[0], many[many.len() - 1]),
    }
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{:.2}", 100.0 * v))
}

impl BenchReport {
    /// Coverage (%) per method and pruning ratio. Contains no timings, so the
    /// text is reproducible for a fixed configuration.
    pub fn coverage_table(&self) -> String {
        let m = &self.config.mixture;
        let mut out = String::new();
        writeln!(
            out,
            "# coverage (%) at K from gamma={} | classes={} n/class={} d={} seed={} similarity={}",
            self.config.gamma, m.classes, m.per_class, m.dim, m.seed, self.config.similarity
        )
        .unwrap();
        write!(out, "{:<8}{:>6}", "alpha", "K").unwrap();
        for method in Method::ALL {
            write!(out, "{:>20}", method.as_str()).unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            write!(
                out,
                "{:<8}{:>6}",
                format!("{:.2}", row.alpha),
                fmt_k(&row.ks)
            )
            .unwrap();
            for method in Method::ALL {
                write!(out, "{:>20}", fmt_pct(row.coverage_of(method))).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Wall-clock seconds per phase, summed over classes.
    pub fn timing_table(&self) -> String {
        let secs = |d: Duration| format!("{:.4}", d.as_secs_f64());
        let mut out = String::new();
        writeln!(
            out,
            "{:<8}{:<20}{:>12}{:>12}{:>12}{:>12}{:>12}",
            "alpha", "method", "distances", "similarity", "density", "greedy", "total"
        )
        .unwrap();
        for row in &self.rows {
            for run in &row.runs {
                let t = &run.result.timings;
                writeln!(
                    out,
                    "{:<8}{:<20}{:>12}{:>12}{:>12}{:>12}{:>12}",
                    format!("{:.2}", row.alpha),
                    run.method.as_str(),
                    secs(t.distances),
                    secs(t.similarities),
                    secs(t.density),
                    secs(t.greedy),
                    secs(t.total)
                )
                .unwrap();
            }
        }
        out
    }
}
