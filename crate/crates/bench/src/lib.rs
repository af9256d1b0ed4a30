//! Benchmark fixtures shared by the criterion targets.

use globalness_core::{Baseline, ExplanationKind, ExplanationSet};

/// Two independent baseline draws of `n` points in `kind`.
pub fn pair(kind: ExplanationKind, n: usize) -> (ExplanationSet, ExplanationSet) {
    let b = Baseline::for_kind(kind, Some(1.0)).expect("valid baseline");
    (b.sample(n, 1).expect("sample"), b.sample(n, 2).expect("sample"))
}
