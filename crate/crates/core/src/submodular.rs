//! Weighted facility location and its greedy maximizers.
//!
//! The objective is `f(S) = sum_i max_{j in S} w_j * sim(i, j)` with the
//! convention `f({}) = 0`. Plain facility location is the special case of
//! all-ones weights.
//!
//! Both greedy variants evaluate gains through [`GreedyState::gain`], which
//! sums in ascending row order. Gains are compared with exact `f64` ordering
//! and ties go to the smallest index, so the lazy variant reproduces the naive
//! trace bit for bit whenever similarities and weights are non-negative.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::similarity::SimilarityMatrix;

/// A facility-location instance with per-candidate weights in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct WeightedFlInstance {
    sim: SimilarityMatrix,
    weights: Vec<f64>,
}

impl WeightedFlInstance {
    pub fn new(sim: SimilarityMatrix, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != sim.len() {
            return Err(invalid(format!(
                "weights length {} does not match {} rows",
                weights.len(),
                sim.len()
            )));
        }
        if let Some(j) = weights.iter().position(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(invalid(format!(
                "weight {j} outside (0, 1]: {}",
                weights[j]
            )));
        }
        Ok(Self { sim, weights })
    }

    /// Plain facility location (all weights 1).
    pub fn unweighted(sim: SimilarityMatrix) -> Self {
        let weights = vec![1.0; sim.len()];
        Self { sim, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn similarity(&self) -> &SimilarityMatrix {
        &self.sim
    }

    /// `w_j * sim(i, j)` for every `i`, read from row `j` of the symmetric matrix.
    #[inline]
    fn contribution(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        let w = self.weights[j];
        self.sim.row_slice(j).iter().map(move |&s| w * s)
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        let n = self.len();
        let mut seen = vec![false; n];
        for &j in subset {
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, len: n });
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(invalid(format!("index {j} appears twice in subset")));
            }
        }
        Ok(())
    }

    /// `f(subset)`, summed in ascending row order.
    pub fn objective(&self, subset: &[usize]) -> Result<f64> {
        self.check_subset(subset)?;
        Ok(GreedyState::from_subset(self, subset).value())
    }

    /// `f(subset + candidate) - f(subset)`.
    pub fn marginal_gain(&self, subset: &[usize], candidate: usize) -> Result<f64> {
        self.check_subset(subset)?;
        if candidate >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: candidate,
                len: self.len(),
            });
        }
        if subset.contains(&candidate) {
            return Err(Error::AlreadySelected { index: candidate });
        }
        Ok(GreedyState::from_subset(self, subset).gain(candidate))
    }
}

/// Sum of `term(a[i], b[i])` with four interleaved accumulators, combined in
/// a fixed order. Written over fixed-size chunks so it vectorizes.
#[inline(always)]
fn lane_sum(a: &[f64], b: &[f64], term: impl Fn(f64, f64) -> f64) -> f64 {
    let mut acc = [0.0; 4];
    let (a4, b4) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (a4.remainder(), b4.remainder());
    for (x, y) in a4.zip(b4) {
        for l in 0..4 {
            acc[l] += term(x[l], y[l]);
        }
    }
    for l in 0..ra.len() {
        acc[l] += term(ra[l], rb[l]);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Per-row best weighted similarity to the current selection.
#[derive(Debug, Clone)]
pub struct GreedyState<'a> {
    instance: &'a WeightedFlInstance,
    best: Vec<f64>,
    selected: Vec<bool>,
    empty: bool,
}

impl<'a> GreedyState<'a> {
    pub fn new(instance: &'a WeightedFlInstance) -> Self {
        let n = instance.len();
        Self {
            instance,
            best: vec![0.0; n],
            selected: vec![false; n],
            empty: true,
        }
    }

    fn from_subset(instance: &'a WeightedFlInstance, subset: &[usize]) -> Self {
        let mut state = Self::new(instance);
        for &j in subset {
            state.insert(j);
        }
        state
    }

    pub fn is_selected(&self, j: usize) -> bool {
        self.selected[j]
    }

    /// Marginal gain of adding `j`, in O(n).
    pub fn gain(&self, j: usize) -> f64 {
        let w = self.instance.weights[j];
        let row = self.instance.sim.row_slice(j);
        if self.empty {
            return lane_sum(row, &self.best, |s, _| w * s);
        }
        lane_sum(row, &self.best, |s, b| {
            let d = w * s - b;
            if d > 0.0 {
                d
            } else {
                0.0
            }
        })
    }

    pub fn insert(&mut self, j: usize) {
        if self.empty {
            self.best
                .iter_mut()
                .zip(self.instance.contribution(j))
                .for_each(|(b, c)| *b = c);
            self.empty = false;
        } else {
            self.best
                .iter_mut()
                .zip(self.instance.contribution(j))
                .for_each(|(b, c)| {
                    if c > *b {
                        *b = c;
                    }
                });
        }
        self.selected[j] = true;
    }

    /// Current objective value.
    pub fn value(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.best.iter().sum()
        }
    }
}

/// Picks in order with the gain of each pick and the final objective.
#[derive(Debug, Clone)]
pub struct GreedyTrace {
    pub order: Vec<usize>,
    pub gains: Vec<f64>,
    pub objective: f64,
    /// Objective after each pick.
    pub values: Vec<f64>,
    /// Number of gain evaluations performed.
    pub evaluations: usize,
}

impl GreedyTrace {
    /// Order, gains and objective agree bit for bit.
    pub fn same_selection(&self, other: &GreedyTrace) -> bool {
        self.order == other.order
            && self.objective.to_bits() == other.objective.to_bits()
            && self.gains.len() == other.gains.len()
            && self
                .gains
                .iter()
                .zip(&other.gains)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn check_budget(instance: &WeightedFlInstance, budget: usize) -> Result<()> {
    if budget == 0 || budget > instance.len() {
        return Err(invalid(format!(
            "budget must be in 1..={}, got {budget}",
            instance.len()
        )));
    }
    Ok(())
}

/// Greedy maximization re-evaluating every remaining candidate at each step.
pub fn greedy_naive(instance: &WeightedFlInstance, budget: usize) -> Result<GreedyTrace> {
    check_budget(instance, budget)?;
    let n = instance.len();
    let mut state = GreedyState::new(instance);
    let mut trace = GreedyTrace {
        order: Vec::with_capacity(budget),
        gains: Vec::with_capacity(budget),
        objective: 0.0,
        values: Vec::with_capacity(budget),
        evaluations: 0,
    };
    for _ in 0..budget {
        let gains: Vec<Option<f64>> = (0..n)
            .into_par_iter()
            .map(|j| (!state.is_selected(j)).then(|| state.gain(j)))
            .collect();
        trace.evaluations += gains.iter().flatten().count();
        // first maximum in index order
        let (pick, gain) = gains
            .iter()
            .enumerate()
            .filter_map(|(j, g)| g.map(|g| (j, g)))
            .fold(None::<(usize, f64)>, |acc, (j, g)| match acc {
                Some((_, best)) if best >= g => acc,
                _ => Some((j, g)),
            })
            .expect("budget <= n leaves a candidate");
        state.insert(pick);
        trace.order.push(pick);
        trace.gains.push(gain.max(0.0));
        trace.values.push(state.value());
    }
    trace.objective = state.value();
    Ok(trace)
}

#[derive(Debug)]
struct Bound {
    gain: f64,
    index: usize,
    /// Selection size when `gain` was computed.
    round: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    // larger gain first, then smaller index
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Lazy greedy: keeps stale gains as upper bounds in a max-heap and only
/// re-evaluates the top until it is current.
///
/// Exactness relies on gains never increasing as the selection grows, which
/// holds for non-negative similarities and weights.
pub fn greedy_lazy(instance: &WeightedFlInstance, budget: usize) -> Result<GreedyTrace> {
    check_budget(instance, budget)?;
    let n = instance.len();
    let mut state = GreedyState::new(instance);
    let initial: Vec<f64> = (0..n).into_par_iter().map(|j| state.gain(j)).collect();
    let mut heap: BinaryHeap<Bound> = initial
        .into_iter()
        .enumerate()
        .map(|(index, gain)| Bound {
            gain,
            index,
            round: 0,
        })
        .collect();
    let mut trace = GreedyTrace {
        order: Vec::with_capacity(budget),
        gains: Vec::with_capacity(budget),
        objective: 0.0,
        values: Vec::with_capacity(budget),
        evaluations: n,
    };
    while trace.order.len() < budget {
        let round = trace.order.len();
        let mut top = heap.pop().expect("budget <= n leaves a candidate");
        if top.round == round {
            state.insert(top.index);
            trace.order.push(top.index);
            trace.gains.push(top.gain.max(0.0));
            trace.values.push(state.value());
        } else {
            top.gain = state.gain(top.index);
            top.round = round;
            trace.evaluations += 1;
            heap.push(top);
        }
    }
    trace.objective = state.value();
    Ok(trace)
}

/// Largest number of subsets [`brute_force_max`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive maximum over all `budget`-subsets; the lexicographically
/// smallest subset wins ties.
pub fn brute_force_max(instance: &WeightedFlInstance, budget: usize) -> Result<(Vec<usize>, f64)> {
    check_budget(instance, budget)?;
    let n = instance.len();
    let combinations = binomial(n, budget);
    if combinations > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            combinations,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut subset: Vec<usize> = (0..budget).collect();
    let mut best = (subset.clone(), instance.objective(&subset)?);
    // next combination in lexicographic order
    while let Some(pos) = (0..budget).rev().find(|&p| subset[p] < n - budget + p) {
        subset[pos] += 1;
        for p in pos + 1..budget {
            subset[p] = subset[p - 1] + 1;
        }
        let value = instance.objective(&subset)?;
        if value > best.1 {
            best = (subset.clone(), value);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> WeightedFlInstance {
        let mut m = Array2::<f64>::eye(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.random::<f64>();
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        let weights = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
        WeightedFlInstance::new(SimilarityMatrix::from_array(m).unwrap(), weights).unwrap()
    }

    fn orthogonal_pair() -> WeightedFlInstance {
        let sim = SimilarityMatrix::from_array(array![[1.0, 0.5], [0.5, 1.0]]).unwrap();
        WeightedFlInstance::unweighted(sim)
    }

    #[test]
    fn objective_examples() {
        let inst = orthogonal_pair();
        assert_eq!(inst.objective(&[]).unwrap(), 0.0);
        assert_eq!(inst.objective(&[0]).unwrap(), 1.5);
        let single =
            WeightedFlInstance::unweighted(SimilarityMatrix::from_array(array![[1.0]]).unwrap());
        assert_eq!(single.objective(&[0]).unwrap(), 1.0);
        assert!(matches!(
            inst.objective(&[2]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn gain_from_empty_is_weighted_row_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = random_instance(&mut rng, 7);
        for j in 0..7 {
            let expected: f64 = (0..7)
                .map(|i| inst.weights()[j] * inst.similarity().get(i, j))
                .sum();
            assert!((inst.marginal_gain(&[], j).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn twin_gain_is_zero() {
        let sim =
            SimilarityMatrix::from_array(array![[1.0, 1.0, 0.2], [1.0, 1.0, 0.2], [0.2, 0.2, 1.0]])
                .unwrap();
        let inst = WeightedFlInstance::new(sim, vec![0.7, 0.7, 0.4]).unwrap();
        assert_eq!(inst.marginal_gain(&[0], 1).unwrap(), 0.0);
        assert!(matches!(
            inst.marginal_gain(&[0], 0),
            Err(Error::AlreadySelected { index: 0 })
        ));
    }

    #[test]
    fn incremental_gain_matches_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let inst = random_instance(&mut rng, 6);
            let subset: Vec<usize> = (0..6).filter(|_| rng.random_bool(0.4)).collect();
            for j in (0..6).filter(|j| !subset.contains(j)) {
                let mut with = subset.clone();
                with.push(j);
                let recomputed = inst.objective(&with).unwrap() - inst.objective(&subset).unwrap();
                assert!((inst.marginal_gain(&subset, j).unwrap() - recomputed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dominant_point_first() {
        let sim =
            SimilarityMatrix::from_array(array![[1.0, 0.9, 0.9], [0.9, 1.0, 0.1], [0.9, 0.1, 1.0]])
                .unwrap();
        let inst = WeightedFlInstance::unweighted(sim);
        assert_eq!(greedy_naive(&inst, 1).unwrap().order, vec![0]);
        assert_eq!(greedy_lazy(&inst, 1).unwrap().order, vec![0]);
    }

    #[test]
    fn all_equal_similarities_pick_in_index_order() {
        let sim = SimilarityMatrix::from_array(Array2::from_elem((6, 6), 0.3)).unwrap();
        let inst = WeightedFlInstance::unweighted(sim);
        assert_eq!(greedy_lazy(&inst, 6).unwrap().order, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(
            greedy_naive(&inst, 6).unwrap().order,
            vec![0, 1, 2, 3, 4, 5]
        );
    }

    #[test]
    fn trace_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let inst = random_instance(&mut rng, 15);
        let trace = greedy_lazy(&inst, 15).unwrap();
        let mut sorted = trace.order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..15).collect::<Vec<_>>());
        assert!(trace.gains.iter().all(|&g| g >= 0.0));
        assert!((trace.gains.iter().sum::<f64>() - trace.objective).abs() < 1e-9);
        assert!(trace.values.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(inst.objective(&trace.order).unwrap(), trace.objective);
    }

    #[test]
    fn budget_range() {
        let inst = orthogonal_pair();
        assert!(greedy_naive(&inst, 0).is_err());
        assert!(greedy_lazy(&inst, 3).is_err());
        assert!(brute_force_max(&inst, 3).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let inst = orthogonal_pair();
        assert_eq!(brute_force_max(&inst, 2).unwrap().0, vec![0, 1]);

        let sim = SimilarityMatrix::from_array(array![[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let inst = WeightedFlInstance::new(sim, vec![0.4, 0.9]).unwrap();
        // 0.4 * 1.5 = 0.6 versus 0.9 * 1.5 = 1.35
        let (best, value) = brute_force_max(&inst, 1).unwrap();
        assert_eq!(best, vec![1]);
        assert!((value - 1.35).abs() < 1e-12);

        let sim = SimilarityMatrix::from_array(Array2::eye(5)).unwrap();
        let inst = WeightedFlInstance::new(sim, vec![0.2, 0.9, 0.5, 0.8, 0.1]).unwrap();
        assert_eq!(brute_force_max(&inst, 2).unwrap().0, vec![1, 3]);
    }

    #[test]
    fn brute_force_refuses_huge_instances() {
        let sim = SimilarityMatrix::from_array(Array2::eye(40)).unwrap();
        let inst = WeightedFlInstance::unweighted(sim);
        let err = brute_force_max(&inst, 20).unwrap_err();
        assert!(
            matches!(err, Error::InstanceTooLarge { combinations, .. } if combinations == 137_846_528_820)
        );
    }

    #[test]
    fn lazy_matches_naive_with_unit_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let base = random_instance(&mut rng, 20);
        let inst = WeightedFlInstance::unweighted(base.similarity().clone());
        let a = greedy_naive(&inst, 10).unwrap();
        let b = greedy_lazy(&inst, 10).unwrap();
        assert!(a.same_selection(&b));
        assert!(b.evaluations <= a.evaluations);
    }

    #[test]
    fn weights_must_be_in_unit_interval() {
        let sim = SimilarityMatrix::from_array(Array2::eye(2)).unwrap();
        assert!(WeightedFlInstance::new(sim.clone(), vec![0.0, 1.0]).is_err());
        assert!(WeightedFlInstance::new(sim.clone(), vec![1.1, 1.0]).is_err());
        assert!(WeightedFlInstance::new(sim, vec![1.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn diminishing_returns_and_monotone(seed in any::<u64>(), n in 2usize..20) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let inst = random_instance(&mut rng, n);
                let b: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
                let a: Vec<usize> = b.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                prop_assert!(inst.objective(&a).unwrap() <= inst.objective(&b).unwrap() + 1e-12);
                for j in (0..n).filter(|j| !b.contains(j)) {
                    prop_assert!(inst.marginal_gain(&a, j).unwrap() >= inst.marginal_gain(&b, j).unwrap() - 1e-9);
                }
            }

            #[test]
            fn weighted_is_dominated_by_plain(seed in any::<u64>(), n in 1usize..15) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let inst = random_instance(&mut rng, n);
                let plain = WeightedFlInstance::unweighted(inst.similarity().clone());
                let subset: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
                prop_assert!(inst.objective(&subset).unwrap() <= plain.objective(&subset).unwrap() + 1e-12);
            }
        }
    }
}
