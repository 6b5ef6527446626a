//! Primal linear SVM trained with Pegasos-style stochastic subgradient steps,
//! and k-fold grid search over the regularization constant.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hog::FeatureVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub c: f64,
    /// `(C, mean fold accuracy)` for every grid point, when grid search ran.
    #[serde(default)]
    pub c_grid: Vec<(f64, f64)>,
    /// Training objective after each epoch; entry 0 is the zero model.
    #[serde(default)]
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub train_meta: TrainMeta,
}

impl LinearModel {
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        if self.score(x) > 0.0 {
            1
        } else {
            -1
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dataset(features: &[FeatureVector], labels: &[i8]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features.first().map(FeatureVector::len).ok_or(Error::DegenerateLabels)?;
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: f.len() });
    }
    if labels.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::InvalidArgument("labels must be +1 or -1".into()));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::DegenerateLabels);
    }
    Ok(dim)
}

/// Regularized hinge objective `λ/2 (‖w‖² + b²) + mean hinge`. The bias is
/// trained as the weight of a constant unit feature, so it is regularized too.
pub fn objective(weights: &[f64], bias: f64, lambda: f64, features: &[FeatureVector], labels: &[i8]) -> f64 {
    let reg = 0.5 * lambda * (dot(weights, weights) + bias * bias);
    let hinge: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &y)| (1.0 - y as f64 * (dot(weights, x.as_slice()) + bias)).max(0.0))
        .sum();
    reg + hinge / features.len() as f64
}

/// Train with `λ = 1/(C·n)`. Each epoch visits every example once in a
/// seeded shuffle order; the snapshot with the lowest end-of-epoch objective
/// (the zero model included) is returned.
pub fn train_linear_svm(
    features: &[FeatureVector],
    labels: &[i8],
    c: f64,
    seed: u64,
    epochs: usize,
) -> Result<LinearModel> {
    let dim = check_dataset(features, labels)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be > 0, got {c}")));
    }
    let n = features.len();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut history = vec![objective(&w, b, lambda, features, labels)];
    let mut best = (history[0], w.clone(), b);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = features[i].as_slice();
            let y = labels[i] as f64;
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            b *= shrink;
            if margin < 1.0 {
                w.iter_mut().zip(x).for_each(|(v, xi)| *v += eta * y * xi);
                b += eta * y;
            }
            // projection onto the ball holding the optimum
            let norm = (dot(&w, &w) + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
                b *= s;
            }
        }
        let obj = objective(&w, b, lambda, features, labels);
        history.push(obj);
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }

    let (_, weights, bias) = best;
    Ok(LinearModel {
        weights,
        bias,
        lambda,
        train_meta: TrainMeta { seed, epochs, c, c_grid: Vec::new(), objective: history },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub best_c: f64,
    /// `(C, mean fold accuracy)` in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// Stratified fold index per example: each class is shuffled with the seed
/// and dealt round-robin over the folds.
fn stratified_folds(labels: &[i8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::InvalidArgument(format!(
                "class {class:+} has {} examples, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

/// k-fold cross-validated window accuracy for each `C`; the best wins, the
/// smaller `C` on ties.
pub fn grid_search_c(
    features: &[FeatureVector],
    labels: &[i8],
    grid: &[f64],
    folds: usize,
    seed: u64,
    epochs: usize,
) -> Result<GridSearch> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty C grid".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("folds = {folds} (need >= 2)")));
    }
    check_dataset(features, labels)?;
    let assignment = stratified_folds(labels, folds, seed)?;

    let mut scores = Vec::with_capacity(grid.len());
    for &c in grid {
        let mut acc_sum = 0.0;
        for fold in 0..folds {
            let (mut tr_x, mut tr_y, mut te_x, mut te_y) = (vec![], vec![], vec![], vec![]);
            for (i, &f) in assignment.iter().enumerate() {
                if f == fold {
                    te_x.push(&features[i]);
                    te_y.push(labels[i]);
                } else {
                    tr_x.push(features[i].clone());
                    tr_y.push(labels[i]);
                }
            }
            let model = train_linear_svm(&tr_x, &tr_y, c, seed, epochs)?;
            let correct = te_x
                .iter()
                .zip(&te_y)
                .filter(|(x, &y)| model.predict(x.as_slice()) == y)
                .count();
            acc_sum += correct as f64 / te_y.len() as f64;
        }
        scores.push((c, acc_sum / folds as f64));
    }

    let mut best = scores[0];
    for &(c, acc) in &scores[1..] {
        if acc > best.1 || (acc == best.1 && c < best.0) {
            best = (c, acc);
        }
    }
    Ok(GridSearch { best_c: best.0, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector(v.to_vec())
    }

    #[test]
    fn separable_pair() {
        let x = [fv(&[2.0, 0.0]), fv(&[-2.0, 0.0])];
        let y = [1, -1];
        let m = train_linear_svm(&x, &y, 1.0, 0, 50).unwrap();
        assert_eq!(m.predict(x[0].as_slice()), 1);
        assert_eq!(m.predict(x[1].as_slice()), -1);
    }

    #[test]
    fn deterministic_under_seed() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..100 {
            x.push(fv(&[2.0, 0.0]));
            y.push(1);
            x.push(fv(&[-2.0, 0.0]));
            y.push(-1);
        }
        let a = train_linear_svm(&x, &y, 1.0, 9, 10).unwrap();
        let b = train_linear_svm(&x, &y, 1.0, 9, 10).unwrap();
        assert_eq!(a.weights.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.weights.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn xor_not_separable() {
        let x = [fv(&[1.0, 1.0]), fv(&[-1.0, -1.0]), fv(&[1.0, -1.0]), fv(&[-1.0, 1.0])];
        let y = [1, 1, -1, -1];
        let m = train_linear_svm(&x, &y, 1.0, 3, 40).unwrap();
        let correct = x.iter().zip(&y).filter(|(x, &y)| m.predict(x.as_slice()) == y).count();
        assert!(correct <= 3);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            train_linear_svm(&[fv(&[1.0]), fv(&[2.0])], &[1, 1], 1.0, 0, 1),
            Err(Error::DegenerateLabels)
        ));
        assert!(matches!(
            train_linear_svm(&[fv(&[1.0]), fv(&[2.0, 1.0])], &[1, -1], 1.0, 0, 1),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn objective_never_worse_than_zero_model() {
        let x = [fv(&[1.0, 1.0]), fv(&[-1.0, -1.0]), fv(&[1.0, -1.0]), fv(&[-1.0, 1.0])];
        let y = [1, 1, -1, -1];
        for c in [0.01, 1.0, 100.0] {
            let m = train_linear_svm(&x, &y, c, 1, 20).unwrap();
            let obj = objective(&m.weights, m.bias, m.lambda, &x, &y);
            assert!(obj <= 1.0 + 1e-12);
            let min = m.train_meta.objective.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(obj, min);
        }
    }

    #[test]
    fn singleton_grid() {
        let x = [fv(&[2.0]), fv(&[2.5]), fv(&[-2.0]), fv(&[-2.5])];
        let y = [1, 1, -1, -1];
        let g = grid_search_c(&x, &y, &[1.0], 2, 0, 10).unwrap();
        assert_eq!(g.best_c, 1.0);
    }

    #[test]
    fn grid_ties_pick_smaller() {
        let x = [fv(&[2.0]), fv(&[2.5]), fv(&[-2.0]), fv(&[-2.5])];
        let y = [1, 1, -1, -1];
        let g = grid_search_c(&x, &y, &[10.0, 1.0], 2, 0, 10).unwrap();
        assert_eq!(g.scores[0].1, g.scores[1].1);
        assert_eq!(g.best_c, 1.0);
    }

    #[test]
    fn grid_prefers_the_c_that_separates() {
        // With a tiny C the solution is dominated by the class imbalance and
        // calls every window negative; a large C finds the threshold.
        let mut x = vec![fv(&[3.0]); 4];
        let mut y = vec![1; 4];
        x.extend(vec![fv(&[0.5]); 20]);
        y.extend(vec![-1; 20]);
        let g = grid_search_c(&x, &y, &[1e-4, 100.0], 2, 5, 200).unwrap();
        assert!(g.scores[0].1 < 1.0, "{:?}", g.scores);
        assert_eq!(g.scores[1].1, 1.0, "{:?}", g.scores);
        assert_eq!(g.best_c, 100.0);
    }

    #[test]
    fn grid_rejects_bad_args() {
        let x = [fv(&[2.0]), fv(&[-2.0])];
        assert!(grid_search_c(&x, &[1, -1], &[], 2, 0, 1).is_err());
        assert!(grid_search_c(&x, &[1, -1], &[1.0], 1, 0, 1).is_err());
        assert!(grid_search_c(&x, &[1, -1], &[1.0], 2, 0, 1).is_err());
    }
}
