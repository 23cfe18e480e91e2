use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::kernel::SparseVec;
use super::{check_data, train_sparse, KernelParams, LearnerError, TrainOptions};
use crate::features::FeatureVector;

/// `C` in `2^-5, 2^-3, ..., 2^15` crossed with `gamma` in
/// `2^-15, 2^-13, ..., 2^3`, ordered by `C` then `gamma`.
pub fn default_grid() -> Vec<KernelParams> {
    let mut grid = Vec::new();
    for ce in (-5..=15).step_by(2) {
        for ge in (-15..=3).step_by(2) {
            grid.push(KernelParams { c: 2f64.powi(ce), gamma: 2f64.powi(ge) });
        }
    }
    grid
}

/// Assigns each example a fold: each class is shuffled and dealt round-robin,
/// positives first, so class proportions match across folds.
pub(crate) fn stratified_folds(ys: &[bool], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut folds = vec![0; ys.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] == class).collect();
        idx.shuffle(rng);
        for i in idx {
            folds[i] = next % k;
            next += 1;
        }
    }
    folds
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: KernelParams,
    pub best_accuracy: f64,
    /// Cross-validated accuracy of every grid point, in grid order.
    pub accuracies: Vec<(KernelParams, f64)>,
}

/// Cross-validated accuracy of one parameter pair; folds are drawn from
/// `seed`.
pub fn cv_accuracy(
    xs: &[FeatureVector],
    ys: &[bool],
    params: KernelParams,
    folds: usize,
    seed: u64,
) -> Result<f64, LearnerError> {
    let r = grid_search(xs, ys, &[params], folds, seed)?;
    Ok(r.best_accuracy)
}

/// Picks the grid point with the highest stratified k-fold accuracy. Points
/// are compared in ascending `(C, gamma)` order and the first maximum wins.
pub fn grid_search(
    xs: &[FeatureVector],
    ys: &[bool],
    grid: &[KernelParams],
    folds: usize,
    seed: u64,
) -> Result<GridResult, LearnerError> {
    let dim = check_data(xs, ys)?;
    if grid.is_empty() {
        return Err(LearnerError::InvalidParams("empty grid".into()));
    }
    for p in grid {
        p.validate()?;
    }
    if folds < 2 || xs.len() < folds {
        return Err(LearnerError::InsufficientData(format!("{} examples for {folds}-fold cross-validation", xs.len())));
    }
    let pos = ys.iter().filter(|&&y| y).count();
    if pos < 2 || ys.len() - pos < 2 {
        return Err(LearnerError::SingleClassFold);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = stratified_folds(ys, folds, &mut rng);
    let sparse: Vec<SparseVec> = xs.iter().map(|v| SparseVec::from_dense(v)).collect();
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|f| {
            let (tr, te): (Vec<usize>, Vec<usize>) = (0..xs.len()).partition(|&i| assignment[i] != f);
            (tr, te)
        })
        .collect();
    for (tr, _) in &splits {
        let p = tr.iter().filter(|&&i| ys[i]).count();
        if p == 0 || p == tr.len() {
            return Err(LearnerError::SingleClassFold);
        }
    }

    let mut sorted: Vec<KernelParams> = grid.to_vec();
    sorted.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.gamma.total_cmp(&b.gamma)));
    let opts = TrainOptions::default();

    let correct: Vec<usize> = sorted
        .par_iter()
        .map(|&params| {
            splits
                .iter()
                .map(|(tr, te)| {
                    let tr_s: Vec<SparseVec> = tr.iter().map(|&i| sparse[i].clone()).collect();
                    let tr_x: Vec<FeatureVector> = tr.iter().map(|&i| xs[i].clone()).collect();
                    let tr_y: Vec<bool> = tr.iter().map(|&i| ys[i]).collect();
                    let m = train_sparse(&tr_s, &tr_x, &tr_y, dim, params, &opts);
                    te.iter().filter(|&&i| (m.decision_sparse(&sparse[i]) > 0.0) == ys[i]).count()
                })
                .sum()
        })
        .collect();

    let mut best = 0;
    for (k, &c) in correct.iter().enumerate() {
        if c > correct[best] {
            best = k;
        }
    }
    let n = xs.len() as f64;
    Ok(GridResult {
        best: sorted[best],
        best_accuracy: correct[best] as f64 / n,
        accuracies: sorted.iter().zip(&correct).map(|(p, &c)| (*p, c as f64 / n)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn data(n: usize, seed: u64) -> (Vec<FeatureVector>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<FeatureVector> = (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let ys = xs.iter().map(|v| v[0] * v[1] > 0.0).collect();
        (xs, ys)
    }

    #[test]
    fn default_grid_extent() {
        let g = default_grid();
        assert_eq!(g.len(), 11 * 10);
        assert_eq!(g[0], KernelParams { c: 1.0 / 32.0, gamma: 1.0 / 32768.0 });
        assert_eq!(g[g.len() - 1], KernelParams { c: 32768.0, gamma: 8.0 });
    }

    #[test]
    fn folds_are_stratified() {
        let ys: Vec<bool> = (0..50).map(|i| i % 5 == 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = stratified_folds(&ys, 5, &mut rng);
        for k in 0..5 {
            assert_eq!((0..50).filter(|&i| f[i] == k && ys[i]).count(), 2);
            assert_eq!((0..50).filter(|&i| f[i] == k).count(), 10);
        }
    }

    #[test]
    fn single_point_grid_returns_it() {
        let (xs, ys) = data(30, 2);
        let p = KernelParams { c: 3.0, gamma: 0.25 };
        assert_eq!(grid_search(&xs, &ys, &[p], 5, 0).unwrap().best, p);
    }

    #[test]
    fn best_point_dominates_and_repeats() {
        let (xs, ys) = data(80, 3);
        let grid: Vec<KernelParams> =
            [0.5, 8.0, 128.0].iter().flat_map(|&c| [0.1, 2.0, 16.0].map(|g| KernelParams { c, gamma: g })).collect();
        let a = grid_search(&xs, &ys, &grid, 5, 42).unwrap();
        assert!(a.accuracies.iter().all(|(_, acc)| *acc <= a.best_accuracy));
        let first_max = a.accuracies.iter().find(|(_, acc)| *acc == a.best_accuracy).unwrap().0;
        assert_eq!(first_max, a.best);
        let b = grid_search(&xs, &ys, &grid, 5, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.best_accuracy > 0.8);
    }

    #[test]
    fn ties_go_to_smallest_c_then_gamma() {
        // Constant features: every point predicts the same class.
        let xs = vec![vec![0.5]; 20];
        let ys: Vec<bool> = (0..20).map(|i| i < 5).collect();
        let grid = vec![
            KernelParams { c: 4.0, gamma: 1.0 },
            KernelParams { c: 1.0, gamma: 2.0 },
            KernelParams { c: 1.0, gamma: 1.0 },
        ];
        let r = grid_search(&xs, &ys, &grid, 5, 0).unwrap();
        assert_eq!(r.best, KernelParams { c: 1.0, gamma: 1.0 });
    }

    #[test]
    fn rejects_unusable_data() {
        let (xs, ys) = data(4, 4);
        let p = [KernelParams { c: 1.0, gamma: 1.0 }];
        assert!(matches!(grid_search(&xs, &ys, &p, 5, 0), Err(LearnerError::InsufficientData(_))));
        let (xs, mut ys) = data(30, 5);
        ys.iter_mut().for_each(|y| *y = false);
        ys[0] = true;
        assert!(matches!(grid_search(&xs, &ys, &p, 5, 0), Err(LearnerError::SingleClassFold)));
        assert!(grid_search(&xs, &ys, &[], 5, 0).is_err());
    }
}
