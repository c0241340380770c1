//! Test-only oracles. Nothing here calls into the search or fitting code
//! paths it is used to check.
#![allow(dead_code)]

use waveshape::data::Dataset;
use waveshape::grouping::{Partition, SynapseGroup};
use waveshape::rng::SeededRng;

/// Random dataset with inputs and targets uniform on [-1, 1).
pub fn random_dataset(rng: &mut SeededRng, arity: usize, n: usize) -> Dataset {
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|_| {
            let inputs = (0..arity).map(|_| rng.uniform(-1.0, 1.0)).collect();
            (inputs, rng.uniform(-1.0, 1.0))
        })
        .collect();
    Dataset::from_rows(&rows).unwrap()
}

/// Least squares with an intercept via normal equations and Gaussian
/// elimination with partial pivoting. Returns (weights, bias, mse).
pub fn least_squares(dataset: &Dataset) -> (Vec<f64>, f64, f64) {
    let k = dataset.arity() + 1;
    let mut a = vec![vec![0.0; k + 1]; k];
    for p in dataset.patterns() {
        let mut row: Vec<f64> = p.inputs.clone();
        row.push(1.0);
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * p.target;
        }
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        assert!(d.abs() > 1e-12, "singular normal equations");
        for v in &mut a[col][col..] {
            *v /= d;
        }
        let pivot_row = a[col].clone();
        for (i, r) in a.iter_mut().enumerate() {
            if i != col {
                let f = r[col];
                for (v, p) in r[col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= f * p;
                }
            }
        }
    }
    let coef: Vec<f64> = a.iter().map(|r| r[k]).collect();
    let (weights, bias) = (coef[..k - 1].to_vec(), coef[k - 1]);
    let mse = dataset
        .patterns()
        .iter()
        .map(|p| {
            let y: f64 = weights.iter().zip(&p.inputs).map(|(w, x)| w * x).sum::<f64>() + bias;
            (y - p.target).powi(2)
        })
        .sum::<f64>()
        / dataset.len() as f64;
    (weights, bias, mse)
}

/// All set partitions of `items`, built by inserting each element into
/// every existing block or a new one.
pub fn all_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let mut acc: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for &item in items {
        let mut next = Vec::new();
        for blocks in &acc {
            for b in 0..blocks.len() {
                let mut copy = blocks.clone();
                copy[b].push(item);
                next.push(copy);
            }
            let mut copy = blocks.clone();
            copy.push(vec![item]);
            next.push(copy);
        }
        acc = next;
    }
    acc
}

/// Every partition of every non-empty subset (or only of the full set).
pub fn candidate_partitions(arity: usize, allow_drop: bool) -> Vec<Partition> {
    let mut out = Vec::new();
    let subsets: Vec<Vec<usize>> = if allow_drop {
        (1u32..1 << arity)
            .map(|m| (0..arity).filter(|i| m & (1 << i) != 0).collect())
            .collect()
    } else {
        vec![(0..arity).collect()]
    };
    for subset in subsets {
        let dropped: Vec<usize> = (0..arity).filter(|i| !subset.contains(i)).collect();
        for blocks in all_partitions(&subset) {
            let groups = blocks.into_iter().map(|b| SynapseGroup::new(b).unwrap()).collect();
            out.push(Partition::new(groups, dropped.clone(), arity).unwrap());
        }
    }
    out
}

pub fn half_mse(weights: &[f64], bias: f64, dataset: &Dataset) -> f64 {
    dataset
        .patterns()
        .iter()
        .map(|p| {
            let y: f64 = weights.iter().zip(&p.inputs).map(|(w, x)| w * x).sum::<f64>() + bias;
            0.5 * (y - p.target).powi(2)
        })
        .sum::<f64>()
        / dataset.len() as f64
}

/// Central finite differences of half the MSE.
pub fn fd_gradient(weights: &[f64], bias: f64, dataset: &Dataset) -> (Vec<f64>, f64) {
    let h = 1e-6;
    let grad_w = (0..weights.len())
        .map(|i| {
            let mut up = weights.to_vec();
            let mut down = weights.to_vec();
            up[i] += h;
            down[i] -= h;
            (half_mse(&up, bias, dataset) - half_mse(&down, bias, dataset)) / (2.0 * h)
        })
        .collect();
    let grad_b = (half_mse(weights, bias + h, dataset) - half_mse(weights, bias - h, dataset)) / (2.0 * h);
    (grad_w, grad_b)
}

/// Brute-force best affine fit `w * x + b` of a single input column, by a
/// coarse grid over `w` refined by repeated local grids; `b` is the mean
/// residual for each `w`. Returns the minimal MSE.
pub fn brute_force_affine_mse(xs: &[f64], ys: &[f64]) -> f64 {
    let mse_for = |w: f64| {
        let b = ys.iter().zip(xs).map(|(y, x)| y - w * x).sum::<f64>() / xs.len() as f64;
        ys.iter().zip(xs).map(|(y, x)| (w * x + b - y).powi(2)).sum::<f64>() / xs.len() as f64
    };
    let (mut lo, mut hi) = (-100.0f64, 100.0f64);
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..40 {
        let steps = 200;
        for s in 0..=steps {
            let w = lo + (hi - lo) * s as f64 / steps as f64;
            let m = mse_for(w);
            if m < best.0 {
                best = (m, w);
            }
        }
        let width = (hi - lo) / steps as f64;
        lo = best.1 - 2.0 * width;
        hi = best.1 + 2.0 * width;
    }
    best.0
}
