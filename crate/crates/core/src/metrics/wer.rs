//! Word error rate: text normalization, minimal-edit alignment, and pooled
//! aggregation.

use crate::error::{Error, Result};

/// Lowercase, strip punctuation except intra-word apostrophes, collapse
/// whitespace.
pub fn normalize_text(s: &str) -> Vec<String> {
    s.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .flat_map(|tok| {
            let tok = tok.trim_matches('\'');
            if tok.is_empty() {
                None
            } else {
                Some(tok.to_lowercase())
            }
        })
        .collect()
}

/// Edit counts from a minimal alignment of hypothesis against reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WerCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

impl WerCounts {
    pub fn edits(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// (S + D + I) / N; can exceed 1.
    pub fn rate(&self) -> f64 {
        self.edits() as f64 / self.ref_len as f64
    }

    /// A sentence with no hypothesis at all: every reference word deleted.
    pub fn full_deletion(ref_len: usize) -> Self {
        WerCounts {
            substitutions: 0,
            deletions: ref_len,
            insertions: 0,
            ref_len,
        }
    }
}

/// Minimal-edit alignment (unit substitution/deletion/insertion costs) via
/// dynamic programming with traceback for the S/D/I split.
pub fn wer<T: AsRef<str>>(reference: &[T], hypothesis: &[T]) -> Result<WerCounts> {
    let n = reference.len();
    let m = hypothesis.len();
    if n == 0 {
        return Err(Error::Invalid("wer reference must be nonempty".into()));
    }

    let mut cost = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in cost.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        cost[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = cost[i - 1][j - 1]
                + usize::from(reference[i - 1].as_ref() != hypothesis[j - 1].as_ref());
            let del = cost[i - 1][j] + 1;
            let ins = cost[i][j - 1] + 1;
            cost[i][j] = sub.min(del).min(ins);
        }
    }

    // traceback, preferring matches/substitutions on ties
    let (mut i, mut j) = (n, m);
    let mut counts = WerCounts {
        substitutions: 0,
        deletions: 0,
        insertions: 0,
        ref_len: n,
    };
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            let diag = cost[i - 1][j - 1] + usize::from(!same);
            if cost[i][j] == diag {
                if !same {
                    counts.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && cost[i][j] == cost[i - 1][j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    debug_assert_eq!(counts.edits(), cost[n][m]);
    Ok(counts)
}

/// Pool edit counts across a condition's sentences:
/// sum(S + D + I) / sum(N), not the mean of per-sentence rates.
pub fn wer_aggregate(per_sentence: &[WerCounts]) -> Result<f64> {
    if per_sentence.is_empty() {
        return Err(Error::Invalid(
            "wer aggregation needs at least one sentence".into(),
        ));
    }
    let edits: usize = per_sentence.iter().map(|c| c.edits()).sum();
    let refs: usize = per_sentence.iter().map(|c| c.ref_len).sum();
    if refs == 0 {
        return Err(Error::Invalid("total reference length is zero".into()));
    }
    Ok(edits as f64 / refs as f64)
}
