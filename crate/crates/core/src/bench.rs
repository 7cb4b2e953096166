//! Multi-seed benchmark sweeps over a (d, K, c, e) grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::{generate, GenSpec};
use crate::error::{GmmError, Result};
use crate::exec;
use crate::fit::{average_loglik, initialize, params_hash, run_method, sha256_hex, termination_label, FitSettings, Method, VERSION};
use crate::objective::GmmParams;

pub const RESULTS_HEADER: [&str; 10] = [
    "method", "d", "K", "c", "e", "seed", "time_s", "iters", "final_all", "termination",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub c: f64,
    pub e: f64,
}

fn default_runs() -> usize {
    20
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub methods: Vec<Method>,
    pub grid: Vec<Cell>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Run `r` uses seed `seed + r` for data generation and initialization.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub shared_init: bool,
    /// Sample count override; defaults to `100·d²` per cell.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub settings: FitSettings,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.grid.is_empty() || self.methods.is_empty() {
            return Err(GmmError::InvalidArgument(
                "bench spec needs runs >= 1, a non-empty grid, and at least one method".into(),
            ));
        }
        self.settings.validate()
    }

    pub fn config_hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub c: f64,
    pub e: f64,
    pub seed: u64,
    pub time_s: f64,
    pub iters: usize,
    pub final_all: f64,
    /// `tolerance`, `max_iters`, `line_search_failure`, or `failure`.
    pub termination: String,
}

impl BenchRow {
    fn fields(&self, with_time: bool) -> [String; 10] {
        [
            self.method.to_string(),
            self.d.to_string(),
            self.k.to_string(),
            self.c.to_string(),
            self.e.to_string(),
            self.seed.to_string(),
            if with_time { self.time_s.to_string() } else { String::new() },
            self.iters.to_string(),
            self.final_all.to_string(),
            self.termination.clone(),
        ]
    }

    pub fn failed(&self) -> bool {
        self.termination == "failure"
    }
}

/// Provenance for one (cell, run): the init hash and init wall time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub cell: Cell,
    pub seed: u64,
    /// One hash when shared; otherwise one per method in spec order.
    pub init_hashes: Vec<String>,
    pub init_time_s: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub version: String,
    pub config_hash: String,
    pub spec: BenchSpec,
    pub runs: Vec<RunInfo>,
}

pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub manifest: BenchManifest,
}

fn failure_row(method: Method, cell: &Cell, seed: u64) -> BenchRow {
    BenchRow {
        method,
        d: cell.d,
        k: cell.k,
        c: cell.c,
        e: cell.e,
        seed,
        time_s: 0.0,
        iters: 0,
        final_all: f64::NAN,
        termination: "failure".into(),
    }
}

fn run_one(spec: &BenchSpec, cell: &Cell, run: usize) -> (Vec<BenchRow>, RunInfo) {
    let seed = spec.seed.wrapping_add(run as u64);
    let mut info = RunInfo {
        cell: *cell,
        seed,
        init_hashes: Vec::new(),
        init_time_s: 0.0,
        error: None,
    };
    let gen = GenSpec {
        d: cell.d,
        k: cell.k,
        c: cell.c,
        e: cell.e,
        n: spec.n,
        seed,
    };
    let t0 = Instant::now();
    let prepared = generate(&gen).and_then(|(_, data)| {
        let inits = if spec.shared_init {
            vec![initialize(&data, cell.k, &spec.settings, seed)?]
        } else {
            (0..spec.methods.len())
                .map(|i| initialize(&data, cell.k, &spec.settings, seed.wrapping_add(((i as u64) + 1) << 32)))
                .collect::<Result<Vec<GmmParams>>>()?
        };
        Ok((data, inits))
    });
    info.init_time_s = t0.elapsed().as_secs_f64();
    let (data, inits) = match prepared {
        Ok(p) => p,
        Err(e) => {
            info.error = Some(e.to_string());
            return (spec.methods.iter().map(|&m| failure_row(m, cell, seed)).collect(), info);
        }
    };
    info.init_hashes = inits.iter().map(|g| params_hash(g).unwrap_or_default()).collect();

    let rows = spec
        .methods
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let init = &inits[if spec.shared_init { 0 } else { i }];
            match run_method(&data, init, m, &spec.settings)
                .and_then(|rep| Ok((average_loglik(&data, &rep.final_point)?, rep)))
            {
                Ok((final_all, rep)) => BenchRow {
                    method: m,
                    d: cell.d,
                    k: cell.k,
                    c: cell.c,
                    e: cell.e,
                    seed,
                    time_s: rep.wall_time_s,
                    iters: rep.iterations,
                    final_all,
                    termination: termination_label(rep.termination).into(),
                },
                Err(_) => failure_row(m, cell, seed),
            }
        })
        .collect();
    (rows, info)
}

/// Runs every grid cell × run × method. Output order is canonical (cell
/// order, then run, then method order of the spec) regardless of how the
/// work was scheduled.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchOutput> {
    spec.validate()?;
    let tasks: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|c| (0..spec.runs).map(move |r| (c, r)))
        .collect();
    let results = exec::map_items(tasks, |(c, r)| run_one(spec, &spec.grid[c], r));
    let mut rows = Vec::with_capacity(results.len() * spec.methods.len());
    let mut runs = Vec::with_capacity(results.len());
    for (r, info) in results {
        rows.extend(r);
        runs.push(info);
    }
    Ok(BenchOutput {
        rows,
        manifest: BenchManifest {
            version: VERSION.into(),
            config_hash: spec.config_hash()?,
            spec: spec.clone(),
            runs,
        },
    })
}

/// Results table as CSV text. With `with_time = false` the `time_s` column
/// is left empty, giving a byte-stable encoding for reproducibility checks.
pub fn rows_to_csv(rows: &[BenchRow], with_time: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record(r.fields(with_time))?;
    }
    let bytes = w.into_inner().map_err(|e| GmmError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// SHA-256 of the timing-free results CSV.
pub fn rows_digest(rows: &[BenchRow]) -> Result<String> {
    Ok(sha256_hex(rows_to_csv(rows, false)?.as_bytes()))
}

pub fn write_results_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, rows_to_csv(rows, true)?)?;
    Ok(())
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub cell: Cell,
    pub method: Method,
    pub runs: usize,
    pub failures: usize,
    pub time_mean: f64,
    pub time_std: f64,
    pub iters_mean: f64,
    pub all_mean: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Aggregates rows per (cell, method) over successful runs. Groups keep the
/// order in which they first appear.
pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(Cell, Method)> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        let key = (Cell { d: r.d, k: r.k, c: r.c, e: r.e }, r.method);
        let idx = match order.iter().position(|o| o.0 == key.0 && o.1 == key.1) {
            Some(i) => i,
            None => {
                order.push(key);
                order.len() - 1
            }
        };
        groups.entry(idx).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(idx, rs)| {
            let ok: Vec<&&BenchRow> = rs.iter().filter(|r| !r.failed()).collect();
            let times: Vec<f64> = ok.iter().map(|r| r.time_s).collect();
            let iters: Vec<f64> = ok.iter().map(|r| r.iters as f64).collect();
            let alls: Vec<f64> = ok.iter().map(|r| r.final_all).collect();
            let (time_mean, time_std) = mean_std(&times);
            SummaryRow {
                cell: order[idx].0,
                method: order[idx].1,
                runs: rs.len(),
                failures: rs.len() - ok.len(),
                time_mean,
                time_std,
                iters_mean: mean_std(&iters).0,
                all_mean: mean_std(&alls).0,
            }
        })
        .collect()
}

/// Text table: one line per cell, one `time ± std / ALL` column per method.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut methods: Vec<Method> = Vec::new();
    let mut cells: Vec<Cell> = Vec::new();
    for s in summary {
        if !methods.contains(&s.method) {
            methods.push(s.method);
        }
        if !cells.contains(&s.cell) {
            cells.push(s.cell);
        }
    }
    let mut out = String::new();
    let _ = write!(out, "{:>4} {:>3} {:>5} {:>5}", "d", "K", "c", "e");
    for m in &methods {
        let _ = write!(out, " | {:^34}", format!("{m}: time (s) / iters / ALL"));
    }
    out.push('\n');
    for cell in &cells {
        let _ = write!(out, "{:>4} {:>3} {:>5} {:>5}", cell.d, cell.k, cell.c, cell.e);
        for m in &methods {
            match summary.iter().find(|s| s.cell == *cell && s.method == *m) {
                Some(s) => {
                    let mut txt = format!(
                        "{:.3} ± {:.3} / {:.1} / {:.4}",
                        s.time_mean, s.time_std, s.iters_mean, s.all_mean
                    );
                    if s.failures > 0 {
                        let _ = write!(txt, " ({} failed)", s.failures);
                    }
                    let _ = write!(out, " | {txt:^34}");
                }
                None => {
                    let _ = write!(out, " | {:^34}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
