//! Fast non-dominated sorting and crowding distance.

use super::dominates;
use crate::surrogate::ObjectiveVector;

/// Sorts points into non-dominated fronts. Front 0 is the non-dominated
/// set; front k is the set that becomes non-dominated once fronts below k
/// are removed. Every index appears in exactly one front.
pub fn non_dominated_sort(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut current: Vec<usize> = Vec::new();

    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if dominates(&points[i], &points[j]) {
                dominated_by[i].push(j);
            } else if dominates(&points[j], &points[i]) {
                domination_count[i] += 1;
            }
        }
        if domination_count[i] == 0 {
            current.push(i);
        }
    }

    let mut fronts = Vec::new();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each point within one front, aligned with the
/// input order. Boundary points per objective get infinity; interior
/// points accumulate the normalized gap between their neighbours. An
/// objective whose values are all equal contributes nothing.
pub fn crowding_distance(points: &[ObjectiveVector]) -> Vec<f64> {
    let n = points.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut dist = vec![0.0f64; n];
    for objective in 0..2 {
        let value = |i: usize| -> f64 {
            if objective == 0 {
                points[i].top1_error
            } else {
                points[i].latency
            }
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap().then(a.cmp(&b)));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = value(order[n - 1]) - value(order[0]);
        if range > 0.0 {
            for k in 1..n - 1 {
                let i = order[k];
                if dist[i].is_finite() {
                    dist[i] += (value(order[k + 1]) - value(order[k - 1])) / range;
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ov(e: f64, l: f64) -> ObjectiveVector {
        ObjectiveVector::new(e, l)
    }

    #[test]
    fn identical_points_form_a_single_front() {
        let points = vec![ov(1.0, 2.0); 7];
        let fronts = non_dominated_sort(&points);
        assert_eq!(fronts.len(), 1);
        assert_eq!(fronts[0], (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn strict_chain_gives_singleton_fronts() {
        let points = vec![ov(3.0, 3.0), ov(1.0, 1.0), ov(2.0, 2.0)];
        let fronts = non_dominated_sort(&points);
        assert_eq!(fronts, vec![vec![1], vec![2], vec![0]]);
    }

    /// O(n^3) oracle: peel non-dominated layers by pairwise scan.
    fn oracle_fronts(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..points.len()).collect();
        let mut fronts = Vec::new();
        while !remaining.is_empty() {
            let layer: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    remaining
                        .iter()
                        .all(|&j| j == i || !dominates(&points[j], &points[i]))
                })
                .collect();
            remaining.retain(|i| !layer.contains(i));
            fronts.push(layer);
        }
        fronts
    }

    #[test]
    fn sort_matches_peeling_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for round in 0..30 {
            let n = rng.gen_range(1..=if round < 25 { 120 } else { 500 });
            // a coarse grid provokes duplicates and ties
            let points: Vec<ObjectiveVector> = (0..n)
                .map(|_| ov(rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64))
                .collect();
            assert_eq!(non_dominated_sort(&points), oracle_fronts(&points));
        }
    }

    #[test]
    fn small_fronts_are_all_infinite() {
        assert!(crowding_distance(&[ov(1.0, 2.0)])
            .iter()
            .all(|d| d.is_infinite()));
        assert!(crowding_distance(&[ov(1.0, 2.0), ov(2.0, 1.0)])
            .iter()
            .all(|d| d.is_infinite()));
    }

    #[test]
    fn evenly_spaced_middle_point_scores_two() {
        // Both objectives contribute (next - prev) / range = 1 each.
        let points = vec![ov(1.0, 3.0), ov(2.0, 2.0), ov(3.0, 1.0)];
        let dist = crowding_distance(&points);
        assert!(dist[0].is_infinite());
        assert!(dist[2].is_infinite());
        assert!((dist[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_interior_points_stay_finite() {
        let points = vec![
            ov(1.0, 5.0),
            ov(2.0, 4.0),
            ov(2.0, 4.0),
            ov(3.0, 3.0),
            ov(5.0, 1.0),
        ];
        let dist = crowding_distance(&points);
        assert!(dist.iter().all(|d| !d.is_nan()));
        assert!(dist[1].is_finite() && dist[2].is_finite());

        // with three copies the middle one is squeezed to exactly zero
        let triple = vec![
            ov(1.0, 5.0),
            ov(2.0, 4.0),
            ov(2.0, 4.0),
            ov(2.0, 4.0),
            ov(3.0, 3.0),
            ov(5.0, 1.0),
        ];
        let dist = crowding_distance(&triple);
        assert!(dist.iter().all(|d| !d.is_nan()));
        assert_eq!(dist[2], 0.0);
    }

    #[test]
    fn degenerate_equal_objective_contributes_zero() {
        // latency identical everywhere: only the error axis counts
        let points = vec![ov(1.0, 7.0), ov(2.0, 7.0), ov(4.0, 7.0)];
        let dist = crowding_distance(&points);
        assert!((dist[1] - 1.0).abs() < 1e-12);
    }
}
