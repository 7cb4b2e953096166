//! Synthetic mixtures controlled by separation `c` and eccentricity `e`,
//! ancestral sampling, and CSV I/O.
//!
//! All randomness comes from `ChaCha8Rng` seeded with the 64-bit seed;
//! mixture parameters use stream 0 and samples use stream 1, so datasets
//! reproduce across platforms.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GmmError, Result};
use crate::objective::{Dataset, GmmParams};
use crate::spd::SpdPoint;

/// Total mean-sampling attempts before giving up.
pub const MAX_ATTEMPTS: usize = 1_000_000;
/// Rejections between radius increases.
const GROW_EVERY: usize = 100;
const GROW_FACTOR: f64 = 1.1;

pub const SEPARATION_RULE: &str = "||m_i - m_j|| >= c * sqrt(max_j tr(Sigma_j))";

const PARAM_STREAM: u64 = 0;
const SAMPLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub c: f64,
    pub e: f64,
    /// Defaults to `100·d²`.
    pub n: Option<usize>,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(d: usize, k: usize, c: f64, e: f64, seed: u64) -> Self {
        Self { d, k, c, e, n: None, seed }
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(100 * self.d * self.d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.d >= 1
            && self.k >= 1
            && self.c > 0.0
            && self.c.is_finite()
            && self.e >= 1.0
            && self.e.is_finite()
            && self.n() >= 1;
        if ok {
            Ok(())
        } else {
            Err(GmmError::InvalidArgument(format!("invalid generator spec {self:?}")))
        }
    }
}

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with R's
/// diagonal signs folded into Q.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Eigenvalues log-uniformly spaced from 1 to `e`, rescaled to sum to `d`.
pub fn spectrum(d: usize, e: f64) -> DVector<f64> {
    let raw = DVector::from_fn(d, |i, _| if d == 1 { 1.0 } else { e.powf(i as f64 / (d - 1) as f64) });
    let s = raw.sum();
    raw * (d as f64 / s)
}

pub fn separated(means: &[DVector<f64>], c: f64, max_trace: f64) -> bool {
    let thr = c * max_trace.sqrt();
    means
        .iter()
        .enumerate()
        .all(|(i, a)| means[..i].iter().all(|b| (a - b).norm() >= thr))
}

pub fn gen_mixture(spec: &GenSpec) -> Result<GmmParams> {
    spec.validate()?;
    let (d, k) = (spec.d, spec.k);
    let mut rng = seeded_rng(spec.seed, PARAM_STREAM);
    let lambda = spectrum(d, spec.e);
    let covs = (0..k)
        .map(|_| {
            let q = random_orthogonal(&mut rng, d);
            SpdPoint::new_symmetrized(&q * DMatrix::from_diagonal(&lambda) * q.transpose())
        })
        .collect::<Result<Vec<_>>>()?;

    let max_trace = covs.iter().map(|s| s.matrix().trace()).fold(0.0, f64::max);
    let thr = spec.c * max_trace.sqrt();
    // pairwise distances of N(0, r²I) draws concentrate near r·sqrt(2d)
    let mut radius = spec.c / std::f64::consts::SQRT_2;
    let mut means: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut attempts = 0;
    let mut rejections = 0;
    while means.len() < k {
        if attempts >= MAX_ATTEMPTS {
            return Err(GmmError::GenerationFailure { attempts });
        }
        attempts += 1;
        let m = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)) * radius;
        if means.iter().all(|b| (&m - b).norm() >= thr) {
            means.push(m);
        } else {
            rejections += 1;
            if rejections % GROW_EVERY == 0 {
                radius *= GROW_FACTOR;
            }
        }
    }
    debug_assert!(separated(&means, spec.c, max_trace));
    GmmParams::new(vec![1.0 / k as f64; k], means, covs)
}

/// Ancestral sampling: a component from `Categorical(α)`, then `μ + L z`.
pub fn sample(g: &GmmParams, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seeded_rng(seed, SAMPLE_STREAM);
    let d = g.d();
    let mut cdf = Vec::with_capacity(g.k());
    let mut acc = 0.0;
    for &w in g.weights() {
        acc += w;
        cdf.push(acc);
    }
    let last = cdf.iter().rposition(|_| true).unwrap_or(0);
    let mut cols = DMatrix::zeros(d, n);
    for i in 0..n {
        let u = rng.random::<f64>() * acc;
        // zero-weight components never win: their cdf entry equals the previous one
        let j = cdf.iter().position(|&c| u < c).unwrap_or(last);
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &g.means()[j] + g.covs()[j].chol_l() * z;
        cols.set_column(i, &x);
    }
    Dataset::from_columns(cols)
}

/// Generates parameters and draws `spec.n()` samples from them.
pub fn generate(spec: &GenSpec) -> Result<(GmmParams, Dataset)> {
    let g = gen_mixture(spec)?;
    let data = sample(&g, spec.n(), spec.seed)?;
    Ok((g, data))
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Reads a comma-separated numeric table. A first row containing any
/// non-numeric cell is treated as a header. Row and column numbers in
/// errors are 1-based file positions.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = idx + 1;
        if idx == 0 && rec.iter().any(|c| parse_cell(c).is_none()) {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(GmmError::Parse {
                row,
                column: rec.len().min(w) + 1,
                message: format!("expected {w} fields, found {}", rec.len()),
            });
        }
        let vals = rec
            .iter()
            .enumerate()
            .map(|(c, s)| match parse_cell(s) {
                Some(v) if v.is_finite() => Ok(v),
                _ => Err(GmmError::Parse {
                    row,
                    column: c + 1,
                    message: format!("not a finite number: {s:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(GmmError::InvalidArgument("CSV contains no data rows".into()));
    }
    Dataset::from_rows(&rows)
}

/// Writes one sample per line. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let x = data.columns();
    let mut line = String::new();
    for i in 0..data.n() {
        line.clear();
        for (t, v) in x.column(i).iter().enumerate() {
            if t > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// JSON sidecar describing a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub generator: GenSpec,
    pub separation_rule: String,
    pub rng: String,
}

impl DatasetMeta {
    pub fn new(spec: &GenSpec) -> Self {
        Self {
            d: spec.d,
            n: spec.n(),
            seed: spec.seed,
            generator: spec.clone(),
            separation_rule: SEPARATION_RULE.into(),
            rng: "ChaCha8 (rand_chacha), params stream 0, samples stream 1".into(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn eig_ratio(s: &SpdPoint) -> f64 {
        let ev = s.matrix().clone().symmetric_eigenvalues();
        ev.max() / ev.min()
    }

    #[test]
    fn spherical_when_e_is_one() {
        let g = gen_mixture(&GenSpec::new(4, 3, 1.0, 1.0, 1)).unwrap();
        for s in g.covs() {
            assert!((s.matrix() - DMatrix::identity(4, 4)).amax() < 1e-12);
        }
    }

    #[test]
    fn eccentricity_and_trace() {
        for seed in 0..5 {
            let g = gen_mixture(&GenSpec::new(5, 4, 1.0, 10.0, seed)).unwrap();
            for s in g.covs() {
                assert!((eig_ratio(s) - 10.0).abs() <= 1e-8 * 10.0);
                assert!((s.matrix().trace() - 5.0).abs() < 1e-10);
            }
        }
        assert!((spectrum(3, 10.0).max() / spectrum(3, 10.0).min() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn separation_holds() {
        let spec = GenSpec::new(2, 2, 5.0, 1.0, 7);
        let g = gen_mixture(&spec).unwrap();
        assert!((&g.means()[0] - &g.means()[1]).norm() >= 5.0 * 2f64.sqrt());
        for seed in 0..20 {
            for &c in &[0.2, 1.0, 5.0] {
                let g = gen_mixture(&GenSpec::new(3, 5, c, 10.0, seed)).unwrap();
                assert!(separated(g.means(), c, 3.0 - 1e-9));
            }
        }
    }

    #[test]
    fn weights_uniform_and_valid() {
        let g = gen_mixture(&GenSpec::new(2, 5, 0.2, 10.0, 3)).unwrap();
        assert_eq!(g.weights(), &[0.2; 5]);
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(gen_mixture(&GenSpec::new(0, 1, 1.0, 1.0, 0)).is_err());
        assert!(gen_mixture(&GenSpec::new(2, 1, 0.0, 1.0, 0)).is_err());
        assert!(gen_mixture(&GenSpec::new(2, 1, 1.0, 0.5, 0)).is_err());
    }

    #[test]
    fn sample_moments() {
        let g = GmmParams::new(vec![1.0], vec![DVector::zeros(2)], vec![SpdPoint::identity(2)]).unwrap();
        let x = sample(&g, 100_000, 11).unwrap();
        assert!(x.mean().amax() < 0.02);
        assert!((x.covariance() - DMatrix::identity(2, 2)).norm() < 0.05);
    }

    #[test]
    fn zero_weight_component_never_sampled() {
        let g = GmmParams::new(
            vec![1.0, 0.0],
            vec![DVector::zeros(2), DVector::from_element(2, 1e3)],
            vec![SpdPoint::identity(2), SpdPoint::identity(2)],
        )
        .unwrap();
        let x = sample(&g, 2000, 5).unwrap();
        assert!(x.columns().amax() < 100.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = GenSpec::new(3, 2, 1.0, 10.0, 99);
        let (g1, a) = generate(&spec).unwrap();
        let (g2, b) = generate(&spec).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(a.columns(), b.columns());
        assert_eq!(a.n(), 900);
    }

    #[test]
    fn csv_basic_and_header() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "1,2\n3,4").unwrap();
        let x = load_csv(&p).unwrap();
        assert_eq!(x.to_row_matrix(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        std::fs::write(&p, "a,b\n1,2\n3,4\n").unwrap();
        assert_eq!(load_csv(&p).unwrap().n(), 2);
    }

    #[test]
    fn csv_errors_carry_location() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "1,2\n3,x\n").unwrap();
        match load_csv(&p) {
            Err(GmmError::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, "1,2\n3,4,5\n").unwrap();
        match load_csv(&p) {
            Err(GmmError::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mut r = crate::testing::rng(4);
        let m = crate::testing::gaussian_matrix(&mut r, 100, 5).map(|v| v * 1e3f64.powf(v));
        let x = Dataset::from_row_matrix(&m).unwrap();
        save_csv(&x, &p).unwrap();
        let y = load_csv(&p).unwrap();
        assert_eq!((x.columns() - y.columns()).amax(), 0.0);
    }
}
