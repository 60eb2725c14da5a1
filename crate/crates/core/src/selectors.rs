//! Class-wise selection pipelines.
//!
//! Every method runs independently per class and the per-class results are
//! merged in ascending label order, so the output does not depend on how
//! classes are scheduled across workers.

use std::time::{Duration, Instant};

use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coverage::{empirical_coverage, find_k_for_coverage, CoveragePlan};
use crate::density::{density_scores, knn_radii, DensityStats};
use crate::error::{Error, Result};
use crate::similarity::{pairwise_distances, pairwise_similarities, DistanceMatrix};
use crate::submodular::{greedy_lazy, GreedyState, WeightedFlInstance};
use crate::types::{
    ClassResult, ClassView, CoresetResult, EmbeddingSet, Method, PhaseTimings, SelectionConfig,
    Totals,
};

/// Selection of a single class in local row indices.
#[derive(Debug, Clone)]
pub struct ClassSelection {
    /// Local row indices in selection order.
    pub order: Vec<usize>,
    pub plan: Option<CoveragePlan>,
    pub stats: Option<DensityStats>,
    /// Objective after each pick.
    pub values: Vec<f64>,
    pub empirical_coverage: Option<f64>,
    pub timings: PhaseTimings,
}

impl ClassSelection {
    pub fn objective(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

/// Runs `config.method` over every class of `set`.
pub fn select(set: &EmbeddingSet, config: &SelectionConfig) -> Result<CoresetResult> {
    config.validate()?;
    let start = Instant::now();
    let views = set.class_views(config.alpha)?;
    for view in &views {
        let rows = view.member_rows.len();
        if rows > config.row_cap {
            return Err(Error::ClassTooLarge {
                class: view.label,
                rows,
                cap: config.row_cap,
                bytes: (rows as u128) * (rows as u128) * 8,
            });
        }
    }
    let per_class: Vec<(ClassResult, PhaseTimings)> = views
        .par_iter()
        .map(|view| select_view(set, view, config))
        .collect::<Result<_>>()?;

    let mut timings = PhaseTimings::default();
    for (_, t) in &per_class {
        timings.accumulate(t);
    }
    timings.total = start.elapsed();
    let per_class: Vec<ClassResult> = per_class.into_iter().map(|(c, _)| c).collect();
    let selected = per_class
        .iter()
        .map(|c| c.selected_ids.len())
        .sum::<usize>();
    let target = (1.0 - config.alpha) * set.len() as f64;
    Ok(CoresetResult {
        config: config.echo(),
        totals: Totals {
            classes: per_class.len(),
            selected,
            target,
            deviation: selected as f64 - target,
        },
        per_class,
        timings,
    })
}

pub fn select_subzerocore(set: &EmbeddingSet, config: &SelectionConfig) -> Result<CoresetResult> {
    select(
        set,
        &SelectionConfig {
            method: Method::Subzerocore,
            ..config.clone()
        },
    )
}

pub fn select_facility_location(
    set: &EmbeddingSet,
    config: &SelectionConfig,
) -> Result<CoresetResult> {
    select(
        set,
        &SelectionConfig {
            method: Method::FacilityLocation,
            ..config.clone()
        },
    )
}

pub fn select_kcenter_greedy(
    set: &EmbeddingSet,
    config: &SelectionConfig,
) -> Result<CoresetResult> {
    select(
        set,
        &SelectionConfig {
            method: Method::KcenterGreedy,
            ..config.clone()
        },
    )
}

pub fn select_random(set: &EmbeddingSet, config: &SelectionConfig) -> Result<CoresetResult> {
    select(
        set,
        &SelectionConfig {
            method: Method::Random,
            ..config.clone()
        },
    )
}

fn select_view(
    set: &EmbeddingSet,
    view: &ClassView,
    config: &SelectionConfig,
) -> Result<(ClassResult, PhaseTimings)> {
    let rows = set.gather(&view.member_rows);
    let sel = select_class(rows.view(), view.budget, view.class_id as u64, config).map_err(
        |e| match e {
            Error::CoresetTooLarge { n, s } => Error::Class {
                class: view.label,
                reason: format!("too small for coverage inversion ({n} members, budget {s})"),
            },
            Error::ZeroNormRow { row } => Error::Class {
                class: view.label,
                reason: format!("zero-norm row {}", view.member_rows[row]),
            },
            other => other,
        },
    )?;
    let ids = set.ids();
    let selected_rows: Vec<usize> = sel.order.iter().map(|&l| view.member_rows[l]).collect();
    let result = ClassResult {
        class: view.label,
        k: sel.plan.map(|p| p.k),
        budget: view.budget,
        selected_ids: selected_rows.iter().map(|&r| ids[r]).collect(),
        objective: sel.objective(),
        mu: sel.stats.map(|s| s.mu),
        sigma: sel.stats.map(|s| s.sigma),
        empirical_coverage: sel.empirical_coverage,
        k_capped: sel.plan.is_some_and(|p| p.capped),
        selected_rows,
        objective_trace: sel.values.clone(),
    };
    Ok((result, sel.timings))
}

/// Selects `budget` rows from one class's embedding matrix.
///
/// `stream` seeds the random baseline alongside `config.seed`; the pipelines
/// use the dense class index.
///
/// SubZeroCore reports its density-weighted objective. The baselines report
/// the plain facility-location value of their selection and, when the class
/// admits a coverage plan, the empirical coverage at that plan's K.
pub fn select_class(
    rows: ArrayView2<'_, f64>,
    budget: usize,
    stream: u64,
    config: &SelectionConfig,
) -> Result<ClassSelection> {
    let n = rows.nrows();
    let mut t = PhaseTimings::default();
    let class_start = Instant::now();

    let plan = match config.method {
        Method::Subzerocore => Some(find_k_for_coverage(n, budget, config.gamma)?),
        _ => find_k_for_coverage(n, budget, config.gamma).ok(),
    };
    let dist = timed(&mut t.distances, || pairwise_distances(rows))?;
    let sim = timed(&mut t.similarities, || {
        pairwise_similarities(rows, config.similarity)
    })?;

    let (order, values, stats) = match config.method {
        Method::Subzerocore => {
            let k = plan.expect("resolved above").k;
            let (stats, scores) = timed(&mut t.density, || {
                knn_radii(&dist, k).and_then(|r| density_scores(&r))
            })?;
            let trace = timed(&mut t.greedy, || {
                WeightedFlInstance::new(sim, scores.scores)
                    .and_then(|inst| greedy_lazy(&inst, budget))
            })?;
            (trace.order, trace.values, Some(stats))
        }
        Method::FacilityLocation => {
            let trace = timed(&mut t.greedy, || {
                greedy_lazy(&WeightedFlInstance::unweighted(sim), budget)
            })?;
            (trace.order, trace.values, None)
        }
        Method::KcenterGreedy => {
            let order = timed(&mut t.greedy, || kcenter_greedy(&dist, budget))?;
            let values = prefix_values(&WeightedFlInstance::unweighted(sim), &order);
            (order, values, None)
        }
        Method::Random => {
            let order = timed(&mut t.greedy, || {
                random_subset(n, budget, config.seed, stream)
            })?;
            let values = prefix_values(&WeightedFlInstance::unweighted(sim), &order);
            (order, values, None)
        }
    };

    let empirical_coverage = match plan {
        Some(p) => Some(empirical_coverage(&dist, &order, p.k)?),
        None => None,
    };
    t.total = class_start.elapsed();
    Ok(ClassSelection {
        order,
        plan,
        stats,
        values,
        empirical_coverage,
        timings: t,
    })
}

fn prefix_values(instance: &WeightedFlInstance, order: &[usize]) -> Vec<f64> {
    let mut state = GreedyState::new(instance);
    order
        .iter()
        .map(|&j| {
            state.insert(j);
            state.value()
        })
        .collect()
}

/// Row minimizing the sum of distances to all rows; smallest index on ties.
pub fn medoid(dist: &DistanceMatrix) -> usize {
    let sums: Vec<f64> = (0..dist.len())
        .into_par_iter()
        .map(|i| dist.row(i).iter().sum())
        .collect();
    sums.iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
        )
        .0
}

/// Farthest-first traversal seeded at the medoid. Each step picks the row
/// farthest from its nearest chosen center, smallest index on ties.
pub fn kcenter_greedy(dist: &DistanceMatrix, budget: usize) -> Result<Vec<usize>> {
    let n = dist.len();
    if budget == 0 || budget > n {
        return Err(crate::error::invalid(format!(
            "budget must be in 1..={n}, got {budget}"
        )));
    }
    let first = medoid(dist);
    let mut order = Vec::with_capacity(budget);
    let mut chosen = vec![false; n];
    let mut nearest: Vec<f64> = dist.row(first).to_vec();
    order.push(first);
    chosen[first] = true;
    while order.len() < budget {
        let (pick, _) = nearest
            .iter()
            .enumerate()
            .filter(|&(j, _)| !chosen[j])
            .fold(None::<(usize, f64)>, |acc, (j, &v)| match acc {
                Some((_, best)) if best >= v => acc,
                _ => Some((j, v)),
            })
            .expect("budget <= n leaves a candidate");
        order.push(pick);
        chosen[pick] = true;
        for (slot, &d) in nearest.iter_mut().zip(dist.row(pick).iter()) {
            if d < *slot {
                *slot = d;
            }
        }
    }
    Ok(order)
}

/// Uniform `budget`-subset of `0..n` in ascending order, drawn from stream
/// `stream` of `seed`.
pub fn random_subset(n: usize, budget: usize, seed: u64, stream: u64) -> Result<Vec<usize>> {
    if budget == 0 || budget > n {
        return Err(crate::error::invalid(format!(
            "budget must be in 1..={n}, got {budget}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut picked = rand::seq::index::sample(&mut rng, n, budget).into_vec();
    picked.sort_unstable();
    Ok(picked)
}
