//! Campaign comparison metrics: total risk scenes, k-means with silhouette
//! model selection, and the variance of per-cluster mean risk.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bowtie::is_high_risk;

pub const DEFAULT_K_MAX: usize = 10;
pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no risks to score")]
    Empty,
    #[error("k-means needs k >= 2, got {0}")]
    KTooSmall(usize),
    #[error("k-means with k = {k} needs at least k points, got {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("silhouette needs at least two non-empty clusters")]
    TooFewClusters,
    #[error("cluster selection needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("cluster selection needs at least 2 distinct points")]
    Degenerate,
    #[error("{labels} labels for {items} items")]
    LengthMismatch { labels: usize, items: usize },
}

/// Percentage of risks strictly above `delta`.
pub fn total_risk_scenes(risks: &[f64], delta: f64) -> Result<f64, MetricsError> {
    if risks.is_empty() {
        return Err(MetricsError::Empty);
    }
    let high = risks.iter().filter(|&&r| is_high_risk(r, delta)).count();
    Ok(100.0 * high as f64 / risks.len() as f64)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub history: Vec<f64>,
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, m) in centroids.iter().enumerate() {
        let d = dist2(p, m);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|x| *x /= c as f64);
        }
    }
    (sums, counts)
}

/// Lloyd's algorithm from k-means++ seeds. An empty cluster takes over the
/// point farthest from its current centroid.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Result<KMeansFit, MetricsError> {
    if k < 2 {
        return Err(MetricsError::KTooSmall(k));
    }
    if k > points.len() {
        return Err(MetricsError::KTooLarge { k, n: points.len() });
    }
    let dim = points[0].len();
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let assigned: Vec<(usize, f64)> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let next: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        history.push(assigned.iter().map(|a| a.1).sum());
        if next == labels {
            break;
        }
        labels = next;
        let (mut m, mut counts) = means(points, &labels, k, dim);
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    dist2(&points[a], &m[labels[a]])
                        .total_cmp(&dist2(&points[b], &m[labels[b]]))
                        .then(b.cmp(&a))
                });
            if let Some(i) = far {
                counts[labels[i]] -= 1;
                labels[i] = c;
                counts[c] = 1;
                let (m2, c2) = means(points, &labels, k, dim);
                m = m2;
                counts = c2;
            }
        }
        centroids = m;
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| dist2(p, &centroids[l])).sum();
    Ok(KMeansFit {
        labels,
        centroids,
        inertia,
        history,
    })
}

/// Mean silhouette with Euclidean distances. Points in singleton clusters
/// score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<f64, MetricsError> {
    if labels.len() != points.len() {
        return Err(MetricsError::LengthMismatch {
            labels: labels.len(),
            items: points.len(),
        });
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(MetricsError::TooFewClusters);
    }
    let n = points.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        if sizes[labels[i]] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist2(&points[i], &points[j]).sqrt();
            }
        }
        let own = labels[i];
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub labels: Vec<usize>,
    pub silhouette: f64,
}

/// Best-inertia k-means over `restarts` seeds for each k in
/// `2..=min(k_max, n - 1)`, keeping the k with the highest silhouette
/// (smaller k on ties). Values of k above the number of distinct points are
/// skipped.
pub fn select_clusters<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k_max: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<ClusterAssignment, MetricsError> {
    let n = points.len();
    if n < 3 {
        return Err(MetricsError::TooFewPoints(n));
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !distinct.contains(&p) {
            distinct.push(p);
            if distinct.len() > k_max {
                break;
            }
        }
    }
    let upper = k_max.min(n - 1).min(distinct.len());
    if upper < 2 {
        return Err(MetricsError::Degenerate);
    }
    let mut best: Option<ClusterAssignment> = None;
    for k in 2..=upper {
        let mut fit: Option<KMeansFit> = None;
        for _ in 0..restarts.max(1) {
            let f = kmeans(points, k, rng)?;
            if fit.as_ref().is_none_or(|b| f.inertia < b.inertia) {
                fit = Some(f);
            }
        }
        let fit = fit.expect("at least one restart");
        let s = silhouette(points, &fit.labels)?;
        if best.as_ref().is_none_or(|b| s > b.silhouette) {
            best = Some(ClusterAssignment {
                k,
                labels: fit.labels,
                silhouette: s,
            });
        }
    }
    Ok(best.expect("k = 2 is always tried"))
}

/// Population variance of the per-cluster mean risks.
pub fn diversity(risks: &[f64], labels: &[usize]) -> Result<f64, MetricsError> {
    if risks.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            labels: labels.len(),
            items: risks.len(),
        });
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    // Offsets from one reference risk: equal risks then give exactly equal
    // means, and the variance does not care about the shift.
    let reference = risks.first().copied().unwrap_or(0.0);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&r, &l) in risks.iter().zip(labels) {
        sums[l] += r - reference;
        counts[l] += 1;
    }
    let cluster_means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| s / c as f64)
        .collect();
    if cluster_means.is_empty() {
        return Ok(0.0);
    }
    let m = cluster_means.len() as f64;
    let mean = cluster_means.iter().sum::<f64>() / m;
    Ok(cluster_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m)
}
