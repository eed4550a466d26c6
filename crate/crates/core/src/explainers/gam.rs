//! Global attribution mapping: cluster normalized local attribution
//! vectors into K groups with subpopulation proportions, or force the
//! grouping to the class labels directly.
//!
//! Distance between two normalized attribution vectors u, v:
//!
//! ```text
//! d(u, v) = Σ_j max(u_j, v_j) · (rank_u(j) − rank_v(j))²
//! ```
//!
//! where rank_·(j) is the feature's 0-based position when the vector
//! is sorted descending (ties by index). Rank differences on features
//! neither vector cares about are damped by the max weight.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::explainers::{Attribution, ImportanceRanking};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GamMode {
    Unsupervised,
    LabelForced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamCluster {
    /// Normalized attribution vector of the medoid instance.
    pub medoid: Vec<f64>,
    pub medoid_instance: u64,
    pub proportion: f64,
    pub member_instances: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamResult {
    pub clusters: Vec<GamCluster>,
    pub k: usize,
    pub mode: GamMode,
    pub feature_names: Vec<String>,
    /// Final total within-cluster distance.
    pub objective: f64,
}

fn rank_positions(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut rank = vec![0; v.len()];
    for (pos, &j) in order.iter().enumerate() {
        rank[j] = pos;
    }
    rank
}

fn rank_weighted_distance(u: &[f64], ru: &[usize], v: &[f64], rv: &[usize]) -> f64 {
    u.iter()
        .zip(v)
        .zip(ru.iter().zip(rv))
        .map(|((&a, &b), (&ra, &rb))| {
            let dr = ra as f64 - rb as f64;
            a.max(b) * dr * dr
        })
        .sum()
}

struct Normalized {
    vectors: Vec<Vec<f64>>,
    ranks: Vec<Vec<usize>>,
}

impl Normalized {
    fn from(attributions: &[Attribution]) -> Result<Normalized> {
        let first = attributions
            .first()
            .ok_or_else(|| Error::Data("no attributions given".into()))?;
        let vectors: Vec<Vec<f64>> = attributions
            .iter()
            .map(|a| {
                if a.names != first.names {
                    return Err(Error::Data(
                        "attributions cover different feature spaces".into(),
                    ));
                }
                Ok(a.normalized_magnitudes())
            })
            .collect::<Result<_>>()?;
        let ranks = vectors.iter().map(|v| rank_positions(v)).collect();
        Ok(Normalized { vectors, ranks })
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        rank_weighted_distance(
            &self.vectors[i],
            &self.ranks[i],
            &self.vectors[j],
            &self.ranks[j],
        )
    }
}

/// PAM-style K-medoids under the rank-weighted distance.
///
/// Initialization is greedy max-separation: the first medoid minimizes
/// total distance, each next medoid maximizes its distance to the
/// nearest chosen one. Assignment and medoid-update steps both only
/// ever decrease the objective, so the loop terminates.
pub fn gam_cluster(
    attributions: &[Attribution],
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<GamResult> {
    if k < 1 {
        return Err(Error::Config("K must be >= 1".into()));
    }
    if attributions.len() < k {
        return Err(Error::Data(format!(
            "{} attributions < K = {k}",
            attributions.len()
        )));
    }
    let data = Normalized::from(attributions)?;
    let n = attributions.len();

    // shuffle only to break exact ties among duplicate points
    let mut candidate_order: Vec<usize> = (0..n).collect();
    candidate_order.shuffle(&mut rng_from_seed(derive_seed(seed, "gam_init")));

    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let first = *candidate_order
        .iter()
        .min_by(|&&a, &&b| {
            let da: f64 = (0..n).map(|j| data.distance(a, j)).sum();
            let db: f64 = (0..n).map(|j| data.distance(b, j)).sum();
            da.total_cmp(&db)
        })
        .unwrap();
    medoids.push(first);
    while medoids.len() < k {
        let next = *candidate_order
            .iter()
            .filter(|c| !medoids.contains(c))
            .max_by(|&&a, &&b| {
                let da = medoids.iter().map(|&m| data.distance(a, m)).fold(f64::MAX, f64::min);
                let db = medoids.iter().map(|&m| data.distance(b, m)).fold(f64::MAX, f64::min);
                da.total_cmp(&db)
            })
            .unwrap();
        medoids.push(next);
    }

    let assign = |medoids: &[usize]| -> (Vec<usize>, f64) {
        let mut assignment = vec![0; n];
        let mut objective = 0.0;
        for i in 0..n {
            // a medoid always belongs to its own cluster, even when
            // zero-distance ties exist
            if let Some(own) = medoids.iter().position(|&m| m == i) {
                assignment[i] = own;
                continue;
            }
            let (best, dist) = medoids
                .iter()
                .enumerate()
                .map(|(c, &m)| (c, data.distance(i, m)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assignment[i] = best;
            objective += dist;
        }
        (assignment, objective)
    };

    let (mut assignment, mut objective) = assign(&medoids);
    for _ in 0..max_iters {
        // medoid update: best member per cluster
        let mut changed = false;
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let best = *members
                .iter()
                .min_by(|&&a, &&b| {
                    let da: f64 = members.iter().map(|&j| data.distance(a, j)).sum();
                    let db: f64 = members.iter().map(|&j| data.distance(b, j)).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            if best != medoids[c] {
                medoids[c] = best;
                changed = true;
            }
        }
        let (new_assignment, new_objective) = assign(&medoids);
        debug_assert!(new_objective <= objective + 1e-9);
        let stable = new_assignment == assignment;
        assignment = new_assignment;
        objective = new_objective;
        if !changed && stable {
            break;
        }
    }

    let clusters = (0..k)
        .map(|c| {
            let member_instances: Vec<u64> = (0..n)
                .filter(|&i| assignment[i] == c)
                .map(|i| attributions[i].instance_id)
                .collect();
            GamCluster {
                medoid: data.vectors[medoids[c]].clone(),
                medoid_instance: attributions[medoids[c]].instance_id,
                proportion: member_instances.len() as f64 / n as f64,
                member_instances,
            }
        })
        .collect();
    Ok(GamResult {
        clusters,
        k,
        mode: GamMode::Unsupervised,
        feature_names: attributions[0].names.clone(),
        objective,
    })
}

/// Label-forced subpopulations: per class, the mean normalized
/// attribution vector as a descending ranking. Optionally computed on
/// a deterministic subsample per class.
pub fn gam_by_label(
    attributions: &[Attribution],
    labels: &[u8],
    subsample: Option<usize>,
    seed: u64,
    model_kind: &str,
) -> Result<(ImportanceRanking, ImportanceRanking)> {
    if attributions.len() != labels.len() {
        return Err(Error::Data("labels not aligned with attributions".into()));
    }
    let data = Normalized::from(attributions)?;
    let names = &attributions[0].names;
    let mut per_class = Vec::with_capacity(2);
    for (class, tag) in [(1u8, "good"), (0u8, "bad")] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            return Err(Error::Data(format!("class {tag} has no attributions")));
        }
        if let Some(cap) = subsample {
            if members.len() > cap {
                let mut rng = rng_from_seed(derive_seed(seed, &format!("gam_label_{tag}")));
                members.shuffle(&mut rng);
                members.truncate(cap);
                members.sort_unstable();
            }
        }
        let mut mean = vec![0.0; names.len()];
        for &i in &members {
            for (s, &v) in mean.iter_mut().zip(&data.vectors[i]) {
                *s += v;
            }
        }
        for s in &mut mean {
            *s /= members.len() as f64;
        }
        per_class.push(ImportanceRanking::from_scores(
            format!("gam_label_{tag}"),
            model_kind,
            names.iter().cloned().zip(mean).collect(),
        ));
    }
    let bad = per_class.pop().unwrap();
    let good = per_class.pop().unwrap();
    Ok((good, bad))
}
