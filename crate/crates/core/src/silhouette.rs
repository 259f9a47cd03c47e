//! Mean silhouette coefficient with Euclidean distance.

use rayon::prelude::*;

use crate::error::{R2rError, Result};
use crate::tensor::{squared_distance, LatentBatch};

/// Mean of `s(i) = (b - a) / max(a, b)` over all samples. Samples in singleton
/// clusters contribute 0, as do samples whose `a` and `b` are both zero.
pub fn silhouette(latents: &LatentBatch, labels: &[usize]) -> Result<f64> {
    if latents.len() != labels.len() {
        return Err(R2rError::shape(latents.len(), labels.len()));
    }
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(R2rError::UndefinedScore(format!(
            "need at least two clusters, found {}",
            ids.len()
        )));
    }
    let compact: Vec<usize> = labels
        .iter()
        .map(|l| ids.binary_search(l).unwrap())
        .collect();
    let k = ids.len();
    let mut sizes = vec![0usize; k];
    for &c in &compact {
        sizes[c] += 1;
    }
    let scores: Vec<f64> = (0..latents.len())
        .into_par_iter()
        .map(|i| {
            let own = compact[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let zi = latents.row(i);
            let mut sums = vec![0.0; k];
            for (j, zj) in latents.rows().enumerate() {
                if j != i {
                    sums[compact[j]] += squared_distance(zi, zj).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons_score_zero() {
        let b = LatentBatch::from_rows(&[vec![0.0], vec![1.0], vec![5.0]]).unwrap();
        assert_eq!(silhouette(&b, &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn one_cluster_is_undefined() {
        let b = LatentBatch::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(silhouette(&b, &[3, 3]), Err(R2rError::UndefinedScore(_))));
    }

    #[test]
    fn tight_far_clusters_near_one() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push(vec![i as f64 * 0.01, 0.0]);
            labels.push(0);
            rows.push(vec![100.0 + i as f64 * 0.01, 0.0]);
            labels.push(1);
        }
        let b = LatentBatch::from_rows(&rows).unwrap();
        assert!(silhouette(&b, &labels).unwrap() > 0.9);
    }

    #[test]
    fn label_values_do_not_matter() {
        let b = LatentBatch::from_rows(&[vec![0.0], vec![0.5], vec![4.0], vec![4.2], vec![9.0]]).unwrap();
        let s1 = silhouette(&b, &[0, 0, 1, 1, 2]).unwrap();
        let s2 = silhouette(&b, &[7, 7, 3, 3, 0]).unwrap();
        assert_eq!(s1, s2);
    }
}
