//! Ground set, configuration and result types shared by the selection pipelines.

use std::collections::BTreeMap;
use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::time::Duration;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One violation found while validating raw embedding inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    EmptySet,
    ZeroDimension,
    NonFinite { row: usize },
    LabelLengthMismatch { expected: usize, found: usize },
    IdLengthMismatch { expected: usize, found: usize },
    DuplicateId { row: usize, id: u64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptySet => write!(f, "empty set"),
            Diagnostic::ZeroDimension => write!(f, "zero dimension"),
            Diagnostic::NonFinite { row } => write!(f, "non-finite at row {row}"),
            Diagnostic::LabelLengthMismatch { expected, found } => {
                write!(
                    f,
                    "label length mismatch (expected {expected}, found {found})"
                )
            }
            Diagnostic::IdLengthMismatch { expected, found } => {
                write!(f, "id length mismatch (expected {expected}, found {found})")
            }
            Diagnostic::DuplicateId { row, id } => write!(f, "duplicate id {id} at row {row}"),
        }
    }
}

/// Checks raw vectors/labels/ids against the [`EmbeddingSet`] invariants and
/// reports every violation found, not just the first.
pub fn validate_embeddings(
    vectors: ArrayView2<'_, f64>,
    labels: &[u32],
    ids: &[u64],
) -> std::result::Result<(), Vec<Diagnostic>> {
    let (n, d) = vectors.dim();
    let mut diags = Vec::new();
    if n == 0 {
        diags.push(Diagnostic::EmptySet);
    }
    if d == 0 {
        diags.push(Diagnostic::ZeroDimension);
    }
    for (row, values) in vectors.rows().into_iter().enumerate() {
        if values.iter().any(|v| !v.is_finite()) {
            diags.push(Diagnostic::NonFinite { row });
        }
    }
    if labels.len() != n {
        diags.push(Diagnostic::LabelLengthMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if ids.len() != n {
        diags.push(Diagnostic::IdLengthMismatch {
            expected: n,
            found: ids.len(),
        });
    }
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    for (row, &id) in ids.iter().enumerate() {
        if !seen.insert(id) {
            diags.push(Diagnostic::DuplicateId { row, id });
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

/// The ground set: an `N x d` embedding matrix with per-row class labels and
/// original dataset ids.
///
/// Labels are remapped to dense class indices `0..C` (ascending by original
/// label) at construction; the original labels stay available through
/// [`EmbeddingSet::class_label`].
#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    vectors: Array2<f64>,
    labels: Vec<u32>,
    ids: Vec<u64>,
    class_of_row: Vec<usize>,
    class_labels: Vec<u32>,
}

impl EmbeddingSet {
    pub fn new(vectors: Array2<f64>, labels: Vec<u32>, ids: Vec<u64>) -> Result<Self> {
        validate_embeddings(vectors.view(), &labels, &ids).map_err(Error::InvalidEmbeddings)?;
        let class_labels: Vec<u32> = {
            let mut l = labels.clone();
            l.sort_unstable();
            l.dedup();
            l
        };
        let class_of_row = labels
            .iter()
            .map(|l| class_labels.binary_search(l).expect("label present"))
            .collect();
        Ok(Self {
            vectors,
            labels,
            ids,
            class_of_row,
            class_labels,
        })
    }

    /// Builds a set whose ids are the row indices `0..N`.
    pub fn with_row_ids(vectors: Array2<f64>, labels: Vec<u32>) -> Result<Self> {
        let ids = (0..vectors.nrows() as u64).collect();
        Self::new(vectors, labels, ids)
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    /// Original label of dense class index `class`.
    pub fn class_label(&self, class: usize) -> u32 {
        self.class_labels[class]
    }

    /// Dense class index of every row.
    pub fn class_indices(&self) -> &[usize] {
        &self.class_of_row
    }

    /// Rows of the given class, in ascending order.
    pub fn class_rows(&self, class: usize) -> Vec<usize> {
        self.class_of_row
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == class)
            .map(|(row, _)| row)
            .collect()
    }

    /// Copies the given rows into a contiguous matrix.
    pub fn gather(&self, rows: &[usize]) -> Array2<f64> {
        self.vectors.select(ndarray::Axis(0), rows)
    }

    /// Splits the set into per-class views with budgets for pruning ratio `alpha`.
    pub fn class_views(&self, alpha: f64) -> Result<Vec<ClassView>> {
        let budgets = compute_class_budgets(&self.labels, alpha)?;
        Ok(budgets
            .into_iter()
            .enumerate()
            .map(|(class_id, (label, budget))| ClassView {
                class_id,
                label,
                member_rows: self.class_rows(class_id),
                budget,
            })
            .collect())
    }
}

/// Per-class budgets `max(1, round_half_up((1 - alpha) * N_c))`, ascending by label.
pub fn compute_class_budgets(labels: &[u32], alpha: f64) -> Result<Vec<(u32, usize)>> {
    if labels.is_empty() {
        return Err(Error::Empty("label list"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha must be in [0, 1)"));
    }
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(label, n)| {
            let exact = (1.0 - alpha) * n as f64;
            let budget = ((exact + 0.5).floor() as usize).clamp(1, n);
            (label, budget)
        })
        .collect())
}

/// A single class's slice of the ground set together with its budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassView {
    /// Dense class index.
    pub class_id: usize,
    /// Original label.
    pub label: u32,
    pub member_rows: Vec<usize>,
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Subzerocore,
    FacilityLocation,
    KcenterGreedy,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Subzerocore,
        Method::FacilityLocation,
        Method::KcenterGreedy,
        Method::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Subzerocore => "subzerocore",
            Method::FacilityLocation => "facility_location",
            Method::KcenterGreedy => "kcenter_greedy",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "subzerocore" => Ok(Method::Subzerocore),
            "facility_location" | "fl" => Ok(Method::FacilityLocation),
            "kcenter_greedy" | "kcenter" => Ok(Method::KcenterGreedy),
            "random" => Ok(Method::Random),
            _ => Err(invalid(format!("unknown method '{s}'"))),
        }
    }
}

/// Similarity kernel over embedding rows.
///
/// `Cosine` can produce negative similarities, which voids the monotonicity
/// of the facility-location objective and with it the greedy approximation
/// guarantee. `ShiftedCosine` maps cosine into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Kernel {
    #[default]
    ShiftedCosine,
    Cosine,
    Rbf {
        bandwidth: f64,
    },
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::ShiftedCosine => "shifted-cosine",
            Kernel::Cosine => "cosine",
            Kernel::Rbf { .. } => "rbf",
        }
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match *self {
            Kernel::Rbf { bandwidth } => Some(bandwidth),
            _ => None,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Rbf { bandwidth } => write!(f, "rbf:{bandwidth}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    /// Accepts `shifted-cosine`, `cosine`, `rbf:<bandwidth>` or `rbf(<bandwidth>)`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-");
        match norm.as_str() {
            "shifted-cosine" => return Ok(Kernel::ShiftedCosine),
            "cosine" => return Ok(Kernel::Cosine),
            _ => {}
        }
        let bw = norm
            .strip_prefix("rbf:")
            .or_else(|| norm.strip_prefix("rbf(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| invalid(format!("unknown similarity '{s}'")))?;
        let bandwidth: f64 = bw
            .parse()
            .map_err(|_| invalid(format!("invalid rbf bandwidth '{bw}'")))?;
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid("rbf bandwidth must be > 0"));
        }
        Ok(Kernel::Rbf { bandwidth })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Fixed(NonZeroUsize),
}

impl FromStr for Threads {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        s.parse::<NonZeroUsize>().map(Threads::Fixed).map_err(|_| {
            invalid(format!(
                "threads must be a positive integer or 'auto', got '{s}'"
            ))
        })
    }
}

/// Default target coverage used to pick the neighborhood size.
pub const DEFAULT_GAMMA: f64 = 0.6;

/// Default cap on rows per class for the dense pairwise matrices.
pub const DEFAULT_ROW_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    /// Fraction of samples removed.
    pub alpha: f64,
    /// Target expected coverage used to resolve K.
    pub gamma: f64,
    pub method: Method,
    pub similarity: Kernel,
    pub seed: u64,
    pub threads: Threads,
    pub row_cap: usize,
}

impl SelectionConfig {
    pub fn new(alpha: f64, method: Method) -> Self {
        Self {
            alpha,
            gamma: DEFAULT_GAMMA,
            method,
            similarity: Kernel::default(),
            seed: 0,
            threads: Threads::Auto,
            row_cap: DEFAULT_ROW_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(invalid("alpha must be < 1 and >= 0"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma must be in (0, 1)"));
        }
        if let Some(bw) = self.similarity.bandwidth() {
            if !(bw > 0.0 && bw.is_finite()) {
                return Err(invalid("rbf bandwidth must be > 0"));
            }
        }
        if self.row_cap == 0 {
            return Err(invalid("row cap must be positive"));
        }
        Ok(())
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            method: self.method,
            alpha: self.alpha,
            gamma: self.gamma,
            similarity: self.similarity.name().to_string(),
            bandwidth: self.similarity.bandwidth(),
            seed: self.seed,
        }
    }
}

/// The part of [`SelectionConfig`] recorded in result files. Thread count is
/// left out because it never changes the selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub method: Method,
    pub alpha: f64,
    pub gamma: f64,
    pub similarity: String,
    pub bandwidth: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResult {
    /// Original class label.
    pub class: u32,
    /// Neighborhood size used for density and coverage, when one could be resolved.
    pub k: Option<usize>,
    pub budget: usize,
    /// Selected original ids, in selection order.
    pub selected_ids: Vec<u64>,
    /// Objective value of the final set.
    pub objective: f64,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub empirical_coverage: Option<f64>,
    #[serde(skip)]
    pub k_capped: bool,
    /// Selected rows of the embedding set, in selection order.
    #[serde(skip)]
    pub selected_rows: Vec<usize>,
    /// Objective after each pick.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub classes: usize,
    pub selected: usize,
    /// `(1 - alpha) * N` before per-class rounding.
    pub target: f64,
    /// `selected - target`.
    pub deviation: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub distances: Duration,
    pub similarities: Duration,
    pub density: Duration,
    pub greedy: Duration,
    pub total: Duration,
}

impl PhaseTimings {
    pub(crate) fn accumulate(&mut self, other: &PhaseTimings) {
        self.distances += other.distances;
        self.similarities += other.similarities;
        self.density += other.density;
        self.greedy += other.greedy;
        self.total += other.total;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoresetResult {
    pub config: ConfigEcho,
    pub per_class: Vec<ClassResult>,
    pub totals: Totals,
    pub timings: PhaseTimings,
}

impl CoresetResult {
    /// All selected ids, class by class.
    pub fn selected_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.per_class
            .iter()
            .flat_map(|c| c.selected_ids.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn budgets_round_half_up() {
        assert_eq!(compute_class_budgets(&[0; 10], 0.9).unwrap(), vec![(0, 1)]);
        assert_eq!(
            compute_class_budgets(&vec![0; 5000], 0.99).unwrap(),
            vec![(0, 50)]
        );
        assert_eq!(compute_class_budgets(&[3; 7], 0.5).unwrap(), vec![(3, 4)]);
    }

    #[test]
    fn budgets_floor_at_one() {
        let labels = [0, 0, 1, 2, 2, 2];
        let b = compute_class_budgets(&labels, 0.95).unwrap();
        assert_eq!(b, vec![(0, 1), (1, 1), (2, 1)]);
    }

    #[test]
    fn budgets_reject_bad_input() {
        assert!(matches!(
            compute_class_budgets(&[], 0.5),
            Err(Error::Empty(_))
        ));
        assert!(compute_class_budgets(&[0], 1.0).is_err());
        assert!(compute_class_budgets(&[0], -0.1).is_err());
    }

    #[test]
    fn validation_reports_each_violation() {
        let ok = array![[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]];
        assert!(validate_embeddings(ok.view(), &[0, 0, 1], &[0, 1, 2]).is_ok());

        let nan = array![[0.0, 1.0], [f64::NAN, 0.0], [2.0, 2.0]];
        let diags = validate_embeddings(nan.view(), &[0, 0, 1], &[0, 1, 2]).unwrap_err();
        assert_eq!(diags, vec![Diagnostic::NonFinite { row: 1 }]);
        assert_eq!(diags[0].to_string(), "non-finite at row 1");

        let diags = validate_embeddings(ok.view(), &[0, 0], &[0, 1, 2]).unwrap_err();
        assert!(diags[0].to_string().starts_with("label length mismatch"));

        let empty = Array2::<f64>::zeros((0, 2));
        let diags = validate_embeddings(empty.view(), &[], &[]).unwrap_err();
        assert_eq!(diags, vec![Diagnostic::EmptySet]);
    }

    #[test]
    fn labels_are_remapped_densely() {
        let v = array![[1.0], [2.0], [3.0], [4.0]];
        let set = EmbeddingSet::with_row_ids(v, vec![7, 3, 7, 3]).unwrap();
        assert_eq!(set.num_classes(), 2);
        assert_eq!(set.class_indices(), &[1, 0, 1, 0]);
        assert_eq!(set.class_label(0), 3);
        assert_eq!(set.class_rows(1), vec![0, 2]);
        let views = set.class_views(0.5).unwrap();
        assert_eq!(views[1].label, 7);
        assert_eq!(views[1].budget, 1);
    }

    #[test]
    fn parse_kernel_and_method() {
        assert_eq!(
            "shifted-cosine".parse::<Kernel>().unwrap(),
            Kernel::ShiftedCosine
        );
        assert_eq!(
            "rbf:0.5".parse::<Kernel>().unwrap(),
            Kernel::Rbf { bandwidth: 0.5 }
        );
        assert_eq!(
            "rbf(2)".parse::<Kernel>().unwrap(),
            Kernel::Rbf { bandwidth: 2.0 }
        );
        assert!("rbf:0".parse::<Kernel>().is_err());
        assert_eq!(
            "kcenter-greedy".parse::<Method>().unwrap(),
            Method::KcenterGreedy
        );
        let err = "herding".parse::<Method>().unwrap_err();
        assert!(err.to_string().contains("unknown method"));
    }

    #[test]
    fn config_ranges() {
        let mut c = SelectionConfig::new(0.9, Method::Subzerocore);
        assert!(c.validate().is_ok());
        c.alpha = 1.0;
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("alpha must be < 1"));
        c.alpha = 0.5;
        c.gamma = 1.0;
        assert!(c.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn budget_sum_within_rounding_bound(
                labels in prop::collection::vec(0u32..6, 1..300),
                alpha in 0.0f64..0.999,
            ) {
                let budgets = compute_class_budgets(&labels, alpha).unwrap();
                let mut total_excess = 0.0;
                for &(label, budget) in &budgets {
                    let n_c = labels.iter().filter(|&&l| l == label).count();
                    let exact = (1.0 - alpha) * n_c as f64;
                    prop_assert!(budget >= 1);
                    if exact >= 0.5 {
                        prop_assert!((budget as f64 - exact).abs() <= 0.5 + 1e-9);
                    } else {
                        // floor of one sample per class
                        prop_assert_eq!(budget, 1);
                        total_excess += 1.0 - exact - 0.5;
                    }
                }
                let total: usize = budgets.iter().map(|b| b.1).sum();
                let target = (1.0 - alpha) * labels.len() as f64;
                let bound = budgets.len() as f64 * 0.5 + total_excess + 1e-9;
                prop_assert!((total as f64 - target).abs() <= bound);
            }

            #[test]
            fn budgets_permutation_invariant(
                labels in prop::collection::vec(0u32..5, 1..100),
                alpha in 0.0f64..0.99,
                seed in any::<u64>(),
            ) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut shuffled = labels.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                prop_assert_eq!(
                    compute_class_budgets(&labels, alpha).unwrap(),
                    compute_class_budgets(&shuffled, alpha).unwrap()
                );
            }
        }
    }
}
