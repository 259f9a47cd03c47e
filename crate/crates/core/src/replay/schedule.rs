use crate::udfm::{flag_uncertain, ClusterStats};

/// Uncertain clusters, most-flagged first. Ties keep cluster order.
pub fn schedule_replay(stats: &[ClusterStats], rho: f64) -> Vec<usize> {
    let mut picked: Vec<(usize, f64)> = stats
        .iter()
        .filter(|s| flag_uncertain(s, rho).0)
        .map(|s| (s.cluster, s.flagged_fraction()))
        .collect();
    picked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    picked.into_iter().map(|(c, _)| c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn stats_with_fraction(cluster: usize, flagged: usize, n: usize) -> ClusterStats {
        ClusterStats {
            cluster,
            center: vec![0.0],
            members: (0..n).collect(),
            dispersions: vec![0.0; n],
            mean_dispersion: 0.0,
            std_dispersion: 0.0,
            threshold: 0.0,
            flagged: (0..flagged).collect(),
            uncertain: false,
            mode: None,
            representatives: vec![],
        }
    }

    #[test]
    fn orders_by_fraction_and_drops_below_rho() {
        let stats = vec![
            stats_with_fraction(0, 5, 10),
            stats_with_fraction(1, 1, 10),
            stats_with_fraction(2, 3, 10),
        ];
        assert_eq!(schedule_replay(&stats, 0.2), vec![0, 2]);
        assert_eq!(schedule_replay(&stats, 0.2), schedule_replay(&stats, 0.2));
    }

    #[test]
    fn nothing_flagged_gives_empty_schedule() {
        let stats = vec![stats_with_fraction(0, 0, 10), stats_with_fraction(1, 0, 4)];
        assert!(schedule_replay(&stats, 0.2).is_empty());
    }
}
