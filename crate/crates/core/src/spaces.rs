//! Explanation spaces, ground metrics and validated explanation containers.
//!
//! Three explanation frameworks are supported:
//!
//! | kind        | space        | metric                       |
//! |-------------|--------------|------------------------------|
//! | Attribution | ℝ^s          | Euclidean                    |
//! | Selection   | {0,1}^s      | Hamming                      |
//! | Ranking     | permutations | Kendall tau (discordant pairs) |
//!
//! Rankings are stored position-wise: entry `i` holds the rank of feature `i`,
//! rank 0 being the most important feature.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplanationKind {
    Attribution(usize),
    Selection(usize),
    Ranking(usize),
}

impl ExplanationKind {
    pub fn dim(self) -> usize {
        match self {
            ExplanationKind::Attribution(s)
            | ExplanationKind::Selection(s)
            | ExplanationKind::Ranking(s) => s,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExplanationKind::Attribution(_) => "attribution",
            ExplanationKind::Selection(_) => "selection",
            ExplanationKind::Ranking(_) => "ranking",
        }
    }

    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        match name {
            "attribution" => Ok(ExplanationKind::Attribution(dim)),
            "selection" => Ok(ExplanationKind::Selection(dim)),
            "ranking" => Ok(ExplanationKind::Ranking(dim)),
            other => Err(Error::config(format!(
                "unknown explanation kind {other:?} (expected attribution, selection or ranking)"
            ))),
        }
    }

    pub fn with_dim(self, dim: usize) -> Self {
        match self {
            ExplanationKind::Attribution(_) => ExplanationKind::Attribution(dim),
            ExplanationKind::Selection(_) => ExplanationKind::Selection(dim),
            ExplanationKind::Ranking(_) => ExplanationKind::Ranking(dim),
        }
    }

    /// The metric this kind is paired with.
    pub fn default_metric(self) -> Metric {
        match self {
            ExplanationKind::Attribution(_) => Metric::Euclidean,
            ExplanationKind::Selection(_) => Metric::Hamming,
            ExplanationKind::Ranking(_) => Metric::KendallTau,
        }
    }

    fn same_variant(self, other: Self) -> bool {
        std::mem::discriminant(&self) == std::mem::discriminant(&other)
    }
}

impl fmt::Display for ExplanationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(s={})", self.name(), self.dim())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Hamming,
    KendallTau,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Hamming => "hamming",
            Metric::KendallTau => "kendalltau",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "euclidean" => Ok(Metric::Euclidean),
            "hamming" => Ok(Metric::Hamming),
            "kendalltau" | "kendall-tau" | "kendall" => Ok(Metric::KendallTau),
            other => Err(Error::config(format!("unknown metric {other:?}"))),
        }
    }

    pub fn supports(self, kind: ExplanationKind) -> bool {
        kind.default_metric() == self
    }

    /// Distance between two rows already known to be valid for this metric.
    pub(crate) fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Hamming => a.iter().zip(b).filter(|(x, y)| x != y).count() as f64,
            Metric::KendallTau => kendall_tau_distance(a, b) as f64,
        }
    }
}

/// A ground metric together with the Wasserstein order `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub metric: Metric,
    pub p: f64,
}

impl DistanceSpec {
    /// Default order: 2 for Euclidean, 1 for the combinatorial metrics.
    pub fn new(metric: Metric) -> Self {
        let p = match metric {
            Metric::Euclidean => 2.0,
            Metric::Hamming | Metric::KendallTau => 1.0,
        };
        DistanceSpec { metric, p }
    }

    pub fn with_p(metric: Metric, p: f64) -> Result<Self> {
        let spec = DistanceSpec { metric, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn for_kind(kind: ExplanationKind) -> Self {
        Self::new(kind.default_metric())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::config(format!(
                "Wasserstein order p must be positive, got {}",
                self.p
            )));
        }
        Ok(())
    }

    pub fn check_kind(&self, kind: ExplanationKind) -> Result<()> {
        self.validate()?;
        if !self.metric.supports(kind) {
            return Err(Error::config(format!(
                "metric {} cannot be used with {} explanations (expected {})",
                self.metric.name(),
                kind.name(),
                kind.default_metric().name()
            )));
        }
        Ok(())
    }
}

/// Distance between two explanation vectors under `spec`'s metric.
///
/// The vectors are checked against the kind the metric is paired with: binary
/// entries for Hamming, permutations of `0..s` for Kendall tau.
pub fn distance(a: &[f64], b: &[f64], spec: &DistanceSpec) -> Result<f64> {
    spec.validate()?;
    if a.len() != b.len() {
        return Err(Error::config(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::config("explanation vectors must have dimension s >= 1"));
    }
    let kind = match spec.metric {
        Metric::Euclidean => ExplanationKind::Attribution(a.len()),
        Metric::Hamming => ExplanationKind::Selection(a.len()),
        Metric::KendallTau => ExplanationKind::Ranking(a.len()),
    };
    for row in [a, b] {
        if let Some(msg) = row_violation(kind, row) {
            return Err(Error::config(format!(
                "{} metric requires {} vectors: {msg}",
                spec.metric.name(),
                kind.name()
            )));
        }
    }
    Ok(spec.metric.eval(a, b))
}

/// Number of discordant feature pairs between two rank vectors.
///
/// Features are ordered by their rank in `a`; the discordant pairs are then
/// exactly the inversions of `b` read in that order, counted by merge sort.
pub fn kendall_tau_distance(a: &[f64], b: &[f64]) -> usize {
    let s = a.len();
    let mut by_rank_in_a = vec![0usize; s];
    for (feature, &rank) in a.iter().enumerate() {
        by_rank_in_a[rank as usize] = feature;
    }
    let mut seq: Vec<usize> = by_rank_in_a.iter().map(|&f| b[f] as usize).collect();
    let mut scratch = vec![0usize; s];
    count_inversions(&mut seq, &mut scratch)
}

fn count_inversions(v: &mut [usize], scratch: &mut [usize]) -> usize {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = v.split_at_mut(mid);
    let mut inv = count_inversions(left, &mut scratch[..mid]) + count_inversions(right, &mut scratch[mid..]);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            scratch[k] = left[i];
            i += 1;
        } else {
            scratch[k] = right[j];
            inv += left.len() - i;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + left.len() - i].copy_from_slice(&left[i..]);
    k += left.len() - i;
    scratch[k..k + right.len() - j].copy_from_slice(&right[j..]);
    v.copy_from_slice(&scratch[..n]);
    inv
}

/// Rank vector of `values` under descending order (rank 0 = largest value).
/// Ties go to the lower feature index first.
pub fn rank_descending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut ranks = vec![0.0; values.len()];
    for (rank, &feature) in order.iter().enumerate() {
        ranks[feature] = rank as f64;
    }
    ranks
}

/// One broken invariant of an explanation set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub row: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row {
            Some(r) => write!(f, "row {r}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn row_violation(kind: ExplanationKind, row: &[f64]) -> Option<String> {
    if let Some(j) = row.iter().position(|x| !x.is_finite()) {
        return Some(format!("non-finite entry {} in column {j}", row[j]));
    }
    match kind {
        ExplanationKind::Attribution(_) => None,
        ExplanationKind::Selection(_) => row
            .iter()
            .position(|&x| x != 0.0 && x != 1.0)
            .map(|j| format!("non-binary entry {} in column {j}", row[j])),
        ExplanationKind::Ranking(s) => {
            let mut seen = vec![false; s];
            for &x in row {
                if x.fract() != 0.0 || x < 0.0 || x >= s as f64 || seen[x as usize] {
                    return Some(format!("{row:?} is not a permutation of 0..{}", s - 1));
                }
                seen[x as usize] = true;
            }
            None
        }
    }
}

/// Every invariant violation of a row-major `N × s` matrix declared as `kind`.
///
/// An empty list means the data forms a valid [`ExplanationSet`].
pub fn validate_set(kind: ExplanationKind, data: &[f64]) -> Vec<Violation> {
    let s = kind.dim();
    let mut out = Vec::new();
    if s == 0 {
        out.push(Violation {
            row: None,
            message: "explanation dimension s >= 1 required".into(),
        });
        return out;
    }
    if data.is_empty() {
        out.push(Violation {
            row: None,
            message: "N ≥ 1 required (empty set)".into(),
        });
        return out;
    }
    if !data.len().is_multiple_of(s) {
        out.push(Violation {
            row: None,
            message: format!(
                "{} values do not form whole rows of dimension {s}",
                data.len()
            ),
        });
        return out;
    }
    for (i, row) in data.chunks_exact(s).enumerate() {
        if let Some(message) = row_violation(kind, row) {
            out.push(Violation {
                row: Some(i),
                message,
            });
        }
    }
    out
}

/// `N` explanation vectors of one kind, stored row-major.
///
/// Construction validates every row, so a value of this type always satisfies
/// its kind's membership invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSet {
    kind: ExplanationKind,
    data: Vec<f64>,
}

impl ExplanationSet {
    pub fn new(kind: ExplanationKind, data: Vec<f64>) -> Result<Self> {
        let violations = validate_set(kind, &data);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(ExplanationSet { kind, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(kind: ExplanationKind, rows: &[R]) -> Result<Self> {
        let s = kind.dim();
        let mut data = Vec::with_capacity(rows.len() * s);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != s {
                return Err(Error::Validation(vec![Violation {
                    row: Some(i),
                    message: format!("expected {s} entries, found {}", r.len()),
                }]));
            }
            data.extend_from_slice(r);
        }
        Self::new(kind, data)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_trusted(kind: ExplanationKind, data: Vec<f64>) -> Self {
        debug_assert!(validate_set(kind, &data).is_empty());
        ExplanationSet { kind, data }
    }

    /// `n` copies of one vector.
    pub fn repeated(kind: ExplanationKind, row: &[f64], n: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(row.len() * n);
        for _ in 0..n {
            data.extend_from_slice(row);
        }
        Self::new(kind, data)
    }

    pub fn kind(&self) -> ExplanationKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    /// Always false for a constructed set; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let s = self.dim();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim())
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::config(format!("row index {i} out of range")));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(self.kind, data)
    }

    /// `n` distinct rows drawn without replacement, in ascending row order.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::config(format!(
                "cannot subsample {n} of {} explanations",
                self.len()
            )));
        }
        let mut rng = stream_rng(seed, Stream::Subsample);
        let mut idx = rand::seq::index::sample(&mut rng, self.len(), n).into_vec();
        idx.sort_unstable();
        self.select(&idx)
    }

    /// Stack two sets of the same kind.
    pub fn concat(&self, other: &ExplanationSet) -> Result<Self> {
        if self.kind != other.kind {
            return Err(Error::config(format!(
                "cannot concatenate {} with {}",
                self.kind, other.kind
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(ExplanationSet::from_trusted(self.kind, data))
    }

    /// Convert attributions to rankings by descending argsort of each row.
    pub fn to_ranking(&self) -> Result<Self> {
        if !matches!(self.kind, ExplanationKind::Attribution(_)) {
            return Err(Error::config("only attribution sets can be converted to rankings"));
        }
        let data = self.rows().flat_map(rank_descending).collect();
        Ok(ExplanationSet::from_trusted(
            ExplanationKind::Ranking(self.dim()),
            data,
        ))
    }

    /// Replace every entry by its absolute value (attribution sets only).
    pub fn abs(&self) -> Result<Self> {
        if !matches!(self.kind, ExplanationKind::Attribution(_)) {
            return Err(Error::config("abs is defined for attribution sets only"));
        }
        Ok(ExplanationSet::from_trusted(
            self.kind,
            self.data.iter().map(|x| x.abs()).collect(),
        ))
    }

    pub fn same_kind(&self, kind: ExplanationKind) -> bool {
        self.kind.same_variant(kind) && self.dim() == kind.dim()
    }
}
