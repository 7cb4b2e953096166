//! k-means++ seeding followed by a short Lloyd refinement.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{GmmError, Result};
use crate::objective::{Dataset, GmmParams};
use crate::spd::{symmetrize, SpdPoint};

/// Lloyd iterations run after seeding.
pub const LLOYD_ITERS: usize = 10;

fn sq_dist(data: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    data.column(i).iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Indices of the D²-seeded centers: the first uniform, each subsequent one
/// drawn proportionally to the squared distance to its nearest chosen center.
pub fn kmeanspp_seed<R: Rng + ?Sized>(data: &Dataset, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = data.n();
    if k == 0 || n < k {
        return Err(GmmError::InvalidArgument(format!("k-means++ needs 1 <= K <= n (K={k}, n={n})")));
    }
    let x = data.columns();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x, i, &x.column(chosen[0]).into_owned())).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // round-off can leave target >= acc; take the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            // every point coincides with a center: pick among the unchosen
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        let c = x.column(next).into_owned();
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(sq_dist(x, i, &c));
        }
    }
    Ok(chosen)
}

fn assign(x: &DMatrix<f64>, centers: &[DVector<f64>]) -> Vec<usize> {
    (0..x.ncols())
        .map(|i| {
            let mut best = (f64::INFINITY, 0);
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(x, i, c);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

/// k-means++ seeding, up to [`LLOYD_ITERS`] Lloyd steps, then per-cluster
/// moments. Clusters too small to have a full-rank covariance fall back to
/// the global covariance. `cov_floor·I` is added to every covariance.
pub fn kmeanspp_init<R: Rng + ?Sized>(data: &Dataset, k: usize, cov_floor: f64, rng: &mut R) -> Result<GmmParams> {
    let seeds = kmeanspp_seed(data, k, rng)?;
    let x = data.columns();
    let d = data.d();
    let mut centers: Vec<DVector<f64>> = seeds.iter().map(|&i| x.column(i).into_owned()).collect();
    let mut labels = assign(x, &centers);
    for _ in 0..LLOYD_ITERS {
        let mut sums = vec![DVector::zeros(d); k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums[l] += x.column(i);
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = &sums[j] / counts[j] as f64;
            }
        }
        let next = assign(x, &centers);
        if next == labels {
            break;
        }
        labels = next;
    }

    let global = data.covariance();
    let mut covs = Vec::with_capacity(k);
    for (j, center) in centers.iter().enumerate() {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == j).collect();
        let mut cov = if members.len() > d {
            let mut m = DMatrix::zeros(d, d);
            for &i in &members {
                let dx = x.column(i) - center;
                m.ger(1.0, &dx, &dx, 1.0);
            }
            m / members.len() as f64
        } else {
            global.clone()
        };
        for t in 0..d {
            cov[(t, t)] += cov_floor;
        }
        covs.push(SpdPoint::new_symmetrized(symmetrize(&cov))?);
    }
    GmmParams::new(vec![1.0 / k as f64; k], centers, covs)
}
