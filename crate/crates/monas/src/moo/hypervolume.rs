//! Exact 2-D hypervolume and per-point contributions.

use crate::surrogate::ObjectiveVector;

fn strictly_inside(p: &ObjectiveVector, reference: &ObjectiveVector) -> bool {
    p.top1_error < reference.top1_error && p.latency < reference.latency
}

/// Exact area dominated by `points` and bounded by `reference`, for
/// minimization. Points not strictly better than the reference in both
/// coordinates contribute nothing; dominated and duplicate points are
/// absorbed by the sweep.
pub fn hypervolume_2d(points: &[ObjectiveVector], reference: ObjectiveVector) -> f64 {
    let mut inside: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| strictly_inside(p, &reference))
        .map(|p| (p.top1_error, p.latency))
        .collect();
    if inside.is_empty() {
        return 0.0;
    }
    inside.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    let mut area = 0.0;
    let mut best_latency = reference.latency;
    for (error, latency) in inside {
        if latency < best_latency {
            area += (reference.top1_error - error) * (best_latency - latency);
            best_latency = latency;
        }
    }
    area
}

/// Exclusive hypervolume contribution of each point of a mutually
/// non-dominated set, aligned with the input order.
///
/// Exact duplicates all contribute zero (removing one copy changes
/// nothing), as do points outside the reference box.
pub fn hv_contributions_2d(points: &[ObjectiveVector], reference: ObjectiveVector) -> Vec<f64> {
    let n = points.len();
    let mut contrib = vec![0.0f64; n];
    let mut inside: Vec<usize> = (0..n)
        .filter(|&i| strictly_inside(&points[i], &reference))
        .collect();
    if inside.is_empty() {
        return contrib;
    }
    inside.sort_by(|&a, &b| {
        points[a]
            .top1_error
            .partial_cmp(&points[b].top1_error)
            .unwrap()
            .then(points[a].latency.partial_cmp(&points[b].latency).unwrap())
            .then(a.cmp(&b))
    });

    // Walk the staircase over unique objective vectors; a step owned by a
    // single point earns its exclusive rectangle.
    struct Step {
        index: usize,
        error: f64,
        latency: f64,
        duplicated: bool,
    }
    let mut stairs: Vec<Step> = Vec::new();
    let mut best_latency = f64::INFINITY;
    let mut k = 0;
    while k < inside.len() {
        let i = inside[k];
        let mut j = k + 1;
        while j < inside.len() && points[inside[j]] == points[i] {
            j += 1;
        }
        if points[i].latency < best_latency {
            best_latency = points[i].latency;
            stairs.push(Step {
                index: i,
                error: points[i].top1_error,
                latency: points[i].latency,
                duplicated: j - k > 1,
            });
        }
        k = j;
    }
    for (s, step) in stairs.iter().enumerate() {
        if step.duplicated {
            continue;
        }
        let right = if s + 1 < stairs.len() {
            stairs[s + 1].error
        } else {
            reference.top1_error
        };
        let above = if s == 0 {
            reference.latency
        } else {
            stairs[s - 1].latency
        };
        contrib[step.index] = (right - step.error) * (above - step.latency);
    }
    contrib
}
