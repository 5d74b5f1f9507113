//! Latency and peak-allocation harness for augmentors.
//!
//! Peak memory is counted by [`TrackingAllocator`], which the benchmarking
//! binary (or test) must install as its global allocator:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: rlap::bench::TrackingAllocator = rlap::bench::TrackingAllocator;
//! ```
//!
//! Without it the peak column reads 0. Numbers are bytes outstanding through
//! the allocator, not process RSS.

use std::alloc::{GlobalAlloc, Layout, System};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augment::{augment_stream, AugmentorSpec};
use crate::error::{Error, Result};
use crate::generators::gnm;
use crate::graph::WeightedGraph;
use crate::io::read_graph;
use crate::rng::stream_rng;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static CALLS: AtomicUsize = AtomicUsize::new(0);
static RUNNING: Mutex<()> = Mutex::new(());

/// System allocator that tracks bytes outstanding and their high-water mark.
pub struct TrackingAllocator;

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            record_alloc(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc_zeroed(layout) };
        if !p.is_null() {
            record_alloc(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
            record_alloc(new_size);
        }
        p
    }
}

fn record_alloc(size: usize) {
    CALLS.fetch_add(1, Ordering::Relaxed);
    let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

/// Whether a [`TrackingAllocator`] is serving this process.
pub fn tracking_enabled() -> bool {
    drop(Vec::<u8>::with_capacity(1));
    CALLS.load(Ordering::Relaxed) > 0
}

/// Bytes currently outstanding.
pub fn current_bytes() -> usize {
    CURRENT.load(Ordering::Relaxed)
}

/// Restarts peak tracking from the current level and returns that level.
pub fn reset_peak() -> usize {
    let now = CURRENT.load(Ordering::Relaxed);
    PEAK.store(now, Ordering::Relaxed);
    now
}

pub fn peak_bytes() -> usize {
    PEAK.load(Ordering::Relaxed)
}

pub fn build_profile() -> &'static str {
    if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub augmentor: String,
    pub dataset: String,
    pub mean_latency_s: f64,
    pub std_latency_s: f64,
    pub peak_alloc_mb: f64,
    pub trials: usize,
    pub seed: u64,
    pub profile: &'static str,
    pub latencies_s: Vec<f64>,
}

/// Times `trials` runs of `spec` on fresh clones of `g` after `warmup`
/// discarded runs. Trial `t` uses stream `t` of the spec's seed. Holds a
/// process-wide lock so two benchmarks never overlap.
pub fn bench_augmentor(g: &WeightedGraph, dataset: &str, spec: &AugmentorSpec, trials: usize, warmup: usize) -> Result<BenchRecord> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    spec.validate()?;
    let _guard = RUNNING.lock().unwrap_or_else(|e| e.into_inner());
    for w in 0..warmup {
        let input = g.clone();
        drop(augment_stream(&input, spec, u64::MAX - w as u64)?);
    }
    let mut latencies = Vec::with_capacity(trials);
    let mut peak_mb = 0.0f64;
    for t in 0..trials {
        let input = g.clone();
        let base = reset_peak();
        let start = Instant::now();
        let out = augment_stream(&input, spec, t as u64)?;
        let elapsed = start.elapsed().as_secs_f64();
        let peak = peak_bytes().saturating_sub(base);
        drop(out);
        latencies.push(elapsed);
        peak_mb = peak_mb.max(peak as f64 / (1024.0 * 1024.0));
    }
    let mean = latencies.iter().sum::<f64>() / trials as f64;
    let std = if trials > 1 {
        (latencies.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(BenchRecord {
        augmentor: spec.label().to_string(),
        dataset: dataset.to_string(),
        mean_latency_s: mean,
        std_latency_s: std,
        peak_alloc_mb: peak_mb,
        trials,
        seed: spec.seed,
        profile: build_profile(),
        latencies_s: latencies,
    })
}

/// A dataset in a suite: an edge-list / Matrix Market file or a seeded
/// `G(n, m)` graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub path: Option<PathBuf>,
    pub gnm_nodes: Option<usize>,
    pub gnm_edges: Option<usize>,
}

impl DatasetSpec {
    pub fn load(&self, base: &Path, seed: u64) -> Result<WeightedGraph> {
        match (&self.path, self.gnm_nodes, self.gnm_edges) {
            (Some(p), None, None) => read_graph(&base.join(p)),
            (None, Some(n), Some(m)) => Ok(gnm(n, m, &mut stream_rng(seed, 0))),
            _ => Err(Error::Config(format!("dataset {:?} needs either `path` or both `gnm_nodes` and `gnm_edges`", self.name))),
        }
    }
}

fn default_trials() -> usize {
    10
}
fn default_warmup() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Seed for synthetic datasets.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<DatasetSpec>,
    #[serde(default, rename = "augmentor")]
    pub augmentors: Vec<AugmentorSpec>,
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Runs every (dataset, augmentor) pair. Relative dataset paths resolve
/// against `base`. Loading is not timed.
pub fn bench_suite(config: &SuiteConfig, base: &Path) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for d in &config.datasets {
        let g = d.load(base, config.seed)?;
        for spec in &config.augmentors {
            out.push(bench_augmentor(&g, &d.name, spec, config.trials, config.warmup)?);
        }
    }
    Ok(out)
}

/// `augmentor,dataset,memory_mb,latency_cpu_s` with mean latency and peak
/// allocation.
pub fn bench_csv(records: &[BenchRecord]) -> String {
    let mut s = String::from("augmentor,dataset,memory_mb,latency_cpu_s\n");
    for r in records {
        writeln!(s, "{},{},{:.4},{:.6}", r.augmentor, r.dataset, r.peak_alloc_mb, r.mean_latency_s).unwrap();
    }
    s
}

/// Long form with spread, trial count, seed and build profile.
pub fn bench_csv_detailed(records: &[BenchRecord]) -> String {
    let mut s = String::from("augmentor,dataset,memory_mb,latency_cpu_s,latency_std_s,trials,seed,profile\n");
    for r in records {
        writeln!(
            s,
            "{},{},{:.4},{:.6},{:.6},{},{},{}",
            r.augmentor, r.dataset, r.peak_alloc_mb, r.mean_latency_s, r.std_latency_s, r.trials, r.seed, r.profile
        )
        .unwrap();
    }
    s
}
