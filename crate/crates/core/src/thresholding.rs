//! Pointwise and group hard thresholding with deterministic tie-breaking.
//!
//! `hard_threshold` keeps the `k` entries of largest magnitude (the l2
//! projection onto k-sparse vectors); the group variant keeps the `k` aligned
//! groups of largest l2 norm. Ties are broken toward the lower index so that
//! repeated runs produce identical output.

use nalgebra::DVector;
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Aligned partition of `[0, n)` into consecutive groups of equal size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    n: usize,
    group_size: usize,
}

impl GroupPartition {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn group_count(&self) -> usize {
        self.n / self.group_size
    }

    /// Index range of group `j`.
    pub fn range(&self, j: usize) -> std::ops::Range<usize> {
        debug_assert!(j < self.group_count());
        j * self.group_size..(j + 1) * self.group_size
    }
}

/// Partition `[0, n)` into aligned blocks of size `group_size`.
/// `group_size` must divide `n`, otherwise [`Error::NotDivisible`]; callers
/// holding a series of awkward length trim it first.
pub fn group_partition(n: usize, group_size: usize) -> Result<GroupPartition> {
    assert!(group_size >= 1, "group size must be at least 1");
    if !n.is_multiple_of(group_size) {
        return Err(Error::NotDivisible { n, group_size });
    }
    Ok(GroupPartition { n, group_size })
}

// Comparator choosing by descending key, then ascending index for ties. f64
// total order keeps the selection well defined for any input.
#[inline]
fn by_key_desc(keys: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b))
}

// Indices of the k largest keys under the deterministic order above.
fn top_k_indices(keys: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    if k < keys.len() {
        idx.select_nth_unstable_by(k, by_key_desc(keys));
        idx.truncate(k);
    }
    idx
}

/// Keep the `k` entries of `v` of largest magnitude, zero everything else.
/// Magnitude ties go to the lower index. `k > n` is a contract violation.
pub fn hard_threshold(v: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
    let n = v.len();
    if k > n {
        return Err(Error::InvalidK { k, max: n });
    }
    if k == n {
        return Ok(v.clone());
    }
    let mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let mut out = DVector::zeros(n);
    for i in top_k_indices(&mags, k) {
        out[i] = v[i];
    }
    Ok(out)
}

/// Keep the entries of the `k` groups with largest group l2 norm, zero the
/// rest. Norm ties go to the lower group index.
pub fn group_hard_threshold(
    v: &DVector<f64>,
    k: usize,
    part: &GroupPartition,
) -> Result<DVector<f64>> {
    assert_eq!(v.len(), part.len(), "vector/partition length mismatch");
    let groups = part.group_count();
    if k > groups {
        return Err(Error::InvalidK { k, max: groups });
    }
    if k == groups {
        return Ok(v.clone());
    }
    let norms: Vec<f64> = (0..groups)
        .map(|j| part.range(j).map(|i| v[i] * v[i]).sum())
        .collect();
    let mut out = DVector::zeros(v.len());
    for j in top_k_indices(&norms, k) {
        for i in part.range(j) {
            out[i] = v[i];
        }
    }
    Ok(out)
}
