//! Cluster-to-class mapping and cumulative evaluation against held-out labels.
//!
//! This is the only place, besides task splitting, that reads ground-truth labels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabelAccess};
use crate::error::{R2rError, Result};
use crate::gmm::MixtureModel;
use crate::nn::AutoencoderParams;
use crate::stream::TaskStream;
use crate::tensor::LatentBatch;

/// Minimum-cost assignment of rows to columns.
///
/// Returns, per row, the assigned column, or `None` when there are more rows than
/// columns and the row is left unmatched.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return vec![None; n];
    }
    if n > m {
        let t: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        let cols = hungarian(&t);
        let mut rows = vec![None; n];
        for (j, i) in cols.into_iter().enumerate() {
            if let Some(i) = i {
                rows[i] = Some(j);
            }
        }
        return rows;
    }
    // Potentials method, 1-based with a virtual row/column 0.
    let (mut u, mut v) = (vec![0.0; n + 1], vec![0.0; m + 1]);
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            rows[p[j] - 1] = Some(j - 1);
        }
    }
    rows
}

/// `table[k][c]` = number of samples in cluster `k` with class `c`.
pub fn contingency(clusters: &[usize], classes: &[usize], k: usize, num_classes: usize) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0usize; num_classes]; k];
    for (&a, &c) in clusters.iter().zip(classes) {
        table[a][c] += 1;
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMapping {
    /// Class for each cluster; `None` for clusters left unmatched.
    pub map: Vec<Option<usize>>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// One-to-one cluster-to-class map maximizing the matched count.
pub fn map_from_contingency(table: &[Vec<usize>]) -> ClusterMapping {
    let cost: Vec<Vec<f64>> = table.iter().map(|r| r.iter().map(|&c| -(c as f64)).collect()).collect();
    let map = hungarian(&cost);
    let correct = map
        .iter()
        .zip(table)
        .filter_map(|(m, row)| m.map(|c| row[c]))
        .sum();
    let total = table.iter().flatten().sum();
    ClusterMapping {
        map,
        correct,
        total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
    }
}

/// Maps cluster ids in `0..k` onto class ids in `0..num_classes`.
pub fn map_clusters_to_classes(
    clusters: &[usize],
    classes: &[usize],
    k: usize,
    num_classes: usize,
) -> Result<ClusterMapping> {
    if clusters.len() != classes.len() {
        return Err(R2rError::shape(clusters.len(), classes.len()));
    }
    if let Some(&a) = clusters.iter().find(|&&a| a >= k) {
        return Err(R2rError::UnknownCluster(a));
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= num_classes) {
        return Err(R2rError::invalid("classes", format!("class {c} >= {num_classes}")));
    }
    Ok(map_from_contingency(&contingency(clusters, classes, k, num_classes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeEval {
    pub task: usize,
    pub accuracy: f64,
    pub samples: usize,
    /// Accuracy on each earlier task's test split under the same mapping.
    pub per_task: Vec<f64>,
    pub mapping: ClusterMapping,
}

/// Encodes the test splits of tasks `1..=t`, assigns them with `model`, and scores the
/// optimal cluster-to-class mapping.
pub fn cumulative_evaluate(
    params: &AutoencoderParams,
    model: &MixtureModel,
    ds: &Dataset,
    stream: &TaskStream,
    t: usize,
) -> Result<CumulativeEval> {
    let indices = stream.cumulative_test(t)?;
    if indices.is_empty() {
        return Err(R2rError::Empty(format!("test split of tasks 1..={t}")));
    }
    let latents = indices
        .par_iter()
        .map(|&i| params.encode(ds.image(i)).map(|z| z.0))
        .collect::<Result<Vec<_>>>()?;
    let latents = LatentBatch::from_rows(&latents)?;
    let clusters = model.assign_batch(&latents)?.clusters;

    let seen = stream.classes_seen(t)?;
    let mut compact = vec![usize::MAX; ds.num_classes()];
    seen.iter().enumerate().for_each(|(j, &c)| compact[c] = j);
    let labels = ds.labels().reveal(&LabelAccess::grant("eval"));
    let classes: Vec<usize> = indices.iter().map(|&i| compact[labels[i]]).collect();

    let mut mapping = map_clusters_to_classes(&clusters, &classes, model.k(), seen.len())?;
    let mut per_task = Vec::with_capacity(t);
    let mut start = 0;
    for task in &stream.tasks()[..t] {
        let end = start + task.test.len();
        let hits = (start..end)
            .filter(|&s| mapping.map[clusters[s]] == Some(classes[s]))
            .count();
        per_task.push(if end > start { hits as f64 / (end - start) as f64 } else { 0.0 });
        start = end;
    }
    // Report the mapping in dataset class ids.
    for m in mapping.map.iter_mut() {
        *m = m.map(|j| seen[j]);
    }
    Ok(CumulativeEval {
        task: t,
        accuracy: mapping.accuracy,
        samples: indices.len(),
        per_task,
        mapping,
    })
}
