//! Random potentials and batch experiments: 1D uniform ensembles with gap
//! and well-separation statistics, and the 2D Bernoulli demo.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agmon::{agmon_weight, AgmonGraph, Stencil};
use crate::eigensolve::{eig_smallest_with, Domain, EigenOptions, EigenSet};
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridSpec, IndexSet, Topology};
use crate::instance::Instance;
use crate::landscape::DEFAULT_LANDSCAPE_TOL;
use crate::operator::CoefficientField;
use crate::output::{fmt_f, write_json, write_landscape_csv};
use crate::rng::{rng_from_seed, uniform01, PRNG_ID};
use crate::wells::{build_partition, components, sublevel_set, WellPartition};

/// Piecewise-constant uniform potential on `R / T Z`: `T` draws from
/// `[0, v_bar)`, one per unit interval, with `a = m = 1`.
pub fn gen_uniform_1d(seed: u64, t: usize, v_bar: f64, p: usize) -> Result<(GridSpec, CoefficientField)> {
    if t < 2 {
        return Err(Error::InvalidParameter(format!("T must be at least 2, got {t}")));
    }
    if !(v_bar > 0.0 && v_bar.is_finite()) {
        return Err(Error::InvalidParameter(format!("V_bar must be positive, got {v_bar}")));
    }
    let grid = build_grid(1, &[t], p, Topology::Torus)?;
    let mut rng = rng_from_seed(seed);
    let cells: Vec<f64> = (0..t).map(|_| v_bar * uniform01(&mut rng)).collect();
    let v = (0..grid.node_count()).map(|i| cells[grid.unit_cell(i)[0]]).collect();
    let coeffs = CoefficientField::from_potential(v, Some(v_bar))?;
    Ok((grid, coeffs))
}

/// Bernoulli potential on `R^2 / T Z^2`: each unit square independently
/// takes `v_high` with probability `prob`, otherwise 0.
pub fn gen_bernoulli_2d(seed: u64, t: usize, v_high: f64, prob: f64, p: usize) -> Result<(GridSpec, CoefficientField)> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParameter(format!("probability must lie in (0, 1), got {prob}")));
    }
    if !(v_high > 0.0 && v_high.is_finite()) {
        return Err(Error::InvalidParameter(format!("v_high must be positive, got {v_high}")));
    }
    let grid = build_grid(2, &[t, t], p, Topology::Torus)?;
    let mut rng = rng_from_seed(seed);
    let cells: Vec<bool> = (0..t * t).map(|_| uniform01(&mut rng) < prob).collect();
    if !cells.iter().any(|&b| b) {
        return Err(Error::AllZeroRealization(seed));
    }
    let v = (0..grid.node_count())
        .map(|i| {
            let [cx, cy] = grid.unit_cell(i);
            if cells[cx + t * cy] {
                v_high
            } else {
                0.0
            }
        })
        .collect();
    let coeffs = CoefficientField::from_potential(v, Some(v_high))?;
    Ok((grid, coeffs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationConfig {
    pub t: usize,
    pub seed: u64,
    #[serde(default = "default_v_bar")]
    pub v_bar: f64,
    #[serde(default = "default_p")]
    pub cells_per_unit: usize,
    /// Defaults to `1/T`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_landscape_tol")]
    pub landscape_tol: f64,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub stencil: Stencil,
    /// Record wall-clock time; off by default so that outputs are
    /// reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
}

fn default_v_bar() -> f64 {
    4.0
}

fn default_p() -> usize {
    crate::grid::DEFAULT_CELLS_PER_UNIT
}

fn default_landscape_tol() -> f64 {
    DEFAULT_LANDSCAPE_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationRecord {
    pub seed: u64,
    pub t: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
    pub delta: f64,
    pub component_count: usize,
    /// Smallest separation between circularly consecutive components;
    /// infinite with a single component.
    pub s_min: f64,
    pub s_median: f64,
    pub runtime_ms: u64,
    pub error_tag: Option<String>,
}

impl RealizationRecord {
    fn failed(cfg: &RealizationConfig, err: &Error) -> Self {
        RealizationRecord {
            seed: cfg.seed,
            t: cfg.t,
            lambda1: f64::NAN,
            lambda2: f64::NAN,
            gap: f64::NAN,
            delta: cfg.delta.unwrap_or(1.0 / cfg.t as f64),
            component_count: 0,
            s_min: f64::NAN,
            s_median: f64::NAN,
            runtime_ms: 0,
            error_tag: Some(err.tag().to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error_tag.is_none()
    }
}

/// Lower median of a nonempty list.
pub fn lower_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Separations between circularly consecutive components of `set` on a 1D
/// torus, under the weight of `graph`.
pub fn consecutive_separations(graph: &AgmonGraph, grid: &GridSpec, set: &IndexSet) -> Result<Vec<f64>> {
    let comps = components(grid, set);
    let r = comps.len();
    if r < 2 {
        return Ok(Vec::new());
    }
    let pairs = if r == 2 { 1 } else { r };
    (0..pairs)
        .map(|k| {
            let field = graph.distances(&comps[k])?;
            Ok(field.min_over(&comps[(k + 1) % r]))
        })
        .collect()
}

/// Landscape, two lowest eigenvalues and well separations for one seeded
/// 1D uniform instance. Errors are returned, not recorded; see
/// [`run_realization`].
pub fn realization_pipeline(cfg: &RealizationConfig) -> Result<RealizationRecord> {
    let start = Instant::now();
    let (grid, coeffs) = gen_uniform_1d(cfg.seed, cfg.t, cfg.v_bar, cfg.cells_per_unit)?;
    let inst = Instance::new(grid, coeffs, cfg.landscape_tol)?;
    let eig = eig_smallest_with(&inst.op, 2, &cfg.eigen, Domain::Global)?;
    let (l1, l2) = (eig.values[0], eig.values[1]);
    let delta = cfg.delta.unwrap_or(1.0 / cfg.t as f64);
    let e = sublevel_set(&inst.landscape, l1 + delta);
    if e.is_empty() {
        return Err(Error::EmptyWellSet(l1 + delta));
    }
    let w = agmon_weight(&inst.landscape, &inst.coeffs, l1)?;
    let graph = AgmonGraph::new(&inst.grid, &w, cfg.stencil)?;
    let seps = consecutive_separations(&graph, &inst.grid, &e)?;
    let component_count = components(&inst.grid, &e).len();
    let (s_min, s_median) = if seps.is_empty() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (seps.iter().copied().fold(f64::INFINITY, f64::min), lower_median(&seps))
    };
    let runtime_ms = if cfg.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(RealizationRecord {
        seed: cfg.seed,
        t: cfg.t,
        lambda1: l1,
        lambda2: l2,
        gap: l2 - l1,
        delta,
        component_count,
        s_min,
        s_median,
        runtime_ms,
        error_tag: None,
    })
}

/// Like [`realization_pipeline`], but failures become records carrying the
/// error tag.
pub fn run_realization(cfg: &RealizationConfig) -> RealizationRecord {
    realization_pipeline(cfg).unwrap_or_else(|e| RealizationRecord::failed(cfg, &e))
}

pub fn write_records_csv(records: &[RealizationRecord], mut w: impl Write) -> Result<()> {
    writeln!(
        w,
        "seed,T,lambda1,lambda2,gap,delta,component_count,S_min,S_median,runtime_ms,error_tag"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.t,
            fmt_f(r.lambda1),
            fmt_f(r.lambda2),
            fmt_f(r.gap),
            fmt_f(r.delta),
            r.component_count,
            fmt_f(r.s_min),
            fmt_f(r.s_median),
            r.runtime_ms,
            r.error_tag.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least 3 distinct sizes, got {}",
            xs.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && y.is_finite())) {
        return Err(Error::InsufficientData("power-law fit needs positive finite data".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    let prefactor = (my - exponent * mx).exp();
    Ok(PowerLawFit { prefactor, exponent })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSummary {
    pub t: usize,
    pub realizations: usize,
    pub failures: usize,
    pub single_component: usize,
    pub median_s: f64,
    pub gap_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub sizes: Vec<SizeSummary>,
    pub fit: Option<PowerLawFit>,
    pub fit_note: Option<String>,
    pub medians_nondecreasing: bool,
}

/// Per-size medians of `S_min`, gap fractions and the power-law fit.
pub fn aggregate(records: &[RealizationRecord]) -> Result<EnsembleSummary> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.t.cmp(&b.t).then(a.seed.cmp(&b.seed)));
    let mut sizes = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let t = sorted[start].t;
        let end = start + sorted[start..].iter().take_while(|r| r.t == t).count();
        let group = &sorted[start..end];
        let ok: Vec<&RealizationRecord> = group.iter().filter(|r| r.is_ok()).collect();
        let s: Vec<f64> = ok.iter().map(|r| r.s_min).filter(|x| x.is_finite()).collect();
        let above = ok.iter().filter(|r| r.gap > 1.0 / t as f64).count();
        sizes.push(SizeSummary {
            t,
            realizations: group.len(),
            failures: group.len() - ok.len(),
            single_component: ok.iter().filter(|r| r.component_count < 2).count(),
            median_s: if s.is_empty() { f64::NAN } else { lower_median(&s) },
            gap_fraction: if ok.is_empty() { f64::NAN } else { above as f64 / ok.len() as f64 },
        });
        start = end;
    }
    let points: Vec<(f64, f64)> = sizes.iter().map(|s| (s.t as f64, s.median_s)).collect();
    let (fit, fit_note) = match fit_power_law(&points) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let medians_nondecreasing = sizes.windows(2).all(|w| w[0].median_s <= w[1].median_s);
    Ok(EnsembleSummary {
        sizes,
        fit,
        fit_note,
        medians_nondecreasing,
    })
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleReport<'a> {
    pub config: &'a EnsembleConfig,
    pub prng: &'static str,
    pub summary: &'a EnsembleSummary,
}

/// Writes `records.csv` and `summary.json` into `dir`.
pub fn write_ensemble_outputs(
    dir: &Path,
    cfg: &EnsembleConfig,
    records: &[RealizationRecord],
    summary: &EnsembleSummary,
) -> Result<()> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.t.cmp(&b.t).then(a.seed.cmp(&b.seed)));
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("records.csv"))?);
    write_records_csv(&sorted, &mut f)?;
    f.flush()?;
    write_json(
        &dir.join("summary.json"),
        &EnsembleReport {
            config: cfg,
            prng: PRNG_ID,
            summary,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub sizes: Vec<usize>,
    pub realizations: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_v_bar")]
    pub v_bar: f64,
    #[serde(default = "default_p")]
    pub cells_per_unit: usize,
    #[serde(default = "default_landscape_tol")]
    pub landscape_tol: f64,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub stencil: Stencil,
    #[serde(default)]
    pub timing: bool,
}

impl EnsembleConfig {
    /// Configs in output order: by size, then realization index; the seed of
    /// realization `i` is `seed_base + i`.
    pub fn jobs(&self) -> Vec<RealizationConfig> {
        self.sizes
            .iter()
            .flat_map(|&t| {
                (0..self.realizations).map(move |i| RealizationConfig {
                    t,
                    seed: self.seed_base.wrapping_add(i as u64),
                    v_bar: self.v_bar,
                    cells_per_unit: self.cells_per_unit,
                    delta: None,
                    landscape_tol: self.landscape_tol,
                    eigen: self.eigen,
                    stencil: self.stencil,
                    timing: self.timing,
                })
            })
            .collect()
    }
}

/// Runs every job; with `threads = Some(n)` on a dedicated pool of `n`
/// workers. Output order does not depend on scheduling.
pub fn run_ensemble(cfg: &EnsembleConfig, threads: Option<usize>) -> Result<Vec<RealizationRecord>> {
    let jobs = cfg.jobs();
    let run = || jobs.par_iter().map(run_realization).collect::<Vec<_>>();
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demo2dConfig {
    #[serde(default = "default_demo_t")]
    pub t: usize,
    #[serde(default = "default_p")]
    pub cells_per_unit: usize,
    #[serde(default = "default_prob")]
    pub prob: f64,
    #[serde(default = "default_v_bar")]
    pub v_high: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eig_count")]
    pub eig_count: usize,
    /// 1-based index of the eigenvalue that sets the partition threshold.
    #[serde(default = "default_target")]
    pub target: usize,
    /// Defaults to the mean level spacing of the four eigenvalues on either
    /// side of the target.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub merge_threshold: f64,
    #[serde(default = "default_mass_threshold")]
    pub mass_threshold: f64,
    #[serde(default = "default_landscape_tol")]
    pub landscape_tol: f64,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub stencil: Stencil,
    /// Seeds tried after an all-zero draw before giving up.
    #[serde(default = "default_retries")]
    pub max_seed_retries: u64,
}

fn default_demo_t() -> usize {
    80
}
fn default_prob() -> f64 {
    0.3
}
fn default_eig_count() -> usize {
    20
}
fn default_target() -> usize {
    5
}
fn default_mass_threshold() -> f64 {
    0.9
}
fn default_retries() -> u64 {
    16
}

impl Default for Demo2dConfig {
    fn default() -> Self {
        Demo2dConfig {
            t: default_demo_t(),
            cells_per_unit: default_p(),
            prob: default_prob(),
            v_high: default_v_bar(),
            seed: 0,
            eig_count: default_eig_count(),
            target: default_target(),
            delta: None,
            merge_threshold: 0.0,
            mass_threshold: default_mass_threshold(),
            landscape_tol: default_landscape_tol(),
            eigen: EigenOptions::default(),
            stencil: Stencil::Axis,
            max_seed_retries: default_retries(),
        }
    }
}

/// Where eigenvector `j` keeps its mass among the wells of `E(lambda_j + delta)`.
///
/// Each node belongs to the basin of the well nearest to it in the Agmon
/// distance at level `lambda_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassRow {
    pub index: usize,
    pub value: f64,
    pub cluster_count: usize,
    /// Well whose basin holds the largest share of the mass.
    pub best_cluster: usize,
    pub basin_fraction: f64,
    /// Mass fraction on the nodes of the best well itself.
    pub well_fraction: f64,
    pub localized: bool,
}

#[derive(Debug, Clone)]
pub struct Demo2dResult {
    pub seed_used: u64,
    pub skipped_seeds: Vec<u64>,
    pub instance: Instance,
    pub eigs: EigenSet,
    pub delta: f64,
    pub partition: WellPartition,
    pub mass_table: Vec<MassRow>,
}

#[derive(Debug, Clone, Serialize)]
struct Demo2dSummary<'a> {
    config: &'a Demo2dConfig,
    prng: &'static str,
    seed_used: u64,
    skipped_seeds: &'a [u64],
    delta: f64,
    mu_bar: f64,
    cluster_count: usize,
    s_bar: f64,
    localized_count: usize,
    eigen_restarts: usize,
}

impl Demo2dResult {
    pub fn localized_count(&self) -> usize {
        self.mass_table.iter().filter(|r| r.localized).count()
    }

    /// `landscape.csv`, `eigenvalues.csv`, `eigenvectors.csv`,
    /// `partition.csv`, `mass_table.csv` and `summary.json`.
    pub fn write_outputs(&self, dir: &Path, cfg: &Demo2dConfig) -> Result<()> {
        let inst = &self.instance;
        write_landscape_csv(&dir.join("landscape.csv"), &inst.grid, &inst.coeffs, &inst.landscape)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("eigenvalues.csv"))?);
        self.eigs.write_values_csv(&mut f, true)?;
        f.flush()?;
        self.eigs.write_vectors_csv(&dir.join("eigenvectors.csv"))?;
        self.partition.write_csv(&dir.join("partition.csv"))?;
        write_mass_table_csv(&self.mass_table, &dir.join("mass_table.csv"))?;
        write_json(
            &dir.join("summary.json"),
            &Demo2dSummary {
                config: cfg,
                prng: PRNG_ID,
                seed_used: self.seed_used,
                skipped_seeds: &self.skipped_seeds,
                delta: self.delta,
                mu_bar: self.partition.mu_bar,
                cluster_count: self.partition.cluster_count(),
                s_bar: self.partition.s_bar,
                localized_count: self.localized_count(),
                eigen_restarts: self.eigs.restarts,
            },
        )
    }
}

/// Mean level spacing over the eigenvalues within four places of `target`
/// (0-based).
pub fn mean_spacing(values: &[f64], target: usize) -> f64 {
    let lo = target.saturating_sub(4);
    let hi = (target + 4).min(values.len() - 1);
    if hi <= lo {
        return f64::NAN;
    }
    (values[hi] - values[lo]) / (hi - lo) as f64
}

fn mass_row(inst: &Instance, eigs: &EigenSet, j: usize, delta: f64, cfg: &Demo2dConfig) -> Result<MassRow> {
    let value = eigs.values[j];
    let level = value.max(0.0);
    let wells = components(&inst.grid, &sublevel_set(&inst.landscape, level + delta));
    if wells.is_empty() {
        return Err(Error::EmptyWellSet(level + delta));
    }
    let w = agmon_weight(&inst.landscape, &inst.coeffs, level)?;
    let graph = AgmonGraph::new(&inst.grid, &w, cfg.stencil)?;
    let (_, owner) = graph.nearest_set(&wells)?;
    let v = &eigs.vectors[j];
    let mass = inst.op.mass();
    let total: f64 = v.iter().zip(mass).map(|(x, m)| x * x * m).sum();
    let mut basin = vec![0.0; wells.len()];
    for (i, o) in owner.iter().enumerate() {
        if let Some(l) = o {
            basin[*l] += v[i] * v[i] * mass[i];
        }
    }
    let mut best = 0;
    for l in 1..basin.len() {
        if basin[l] > basin[best] {
            best = l;
        }
    }
    let basin_fraction = basin[best] / total;
    let well_fraction = wells[best].iter().map(|i| v[i] * v[i] * mass[i]).sum::<f64>() / total;
    Ok(MassRow {
        index: j + 1,
        value,
        cluster_count: wells.len(),
        best_cluster: best,
        basin_fraction,
        well_fraction,
        localized: basin_fraction >= cfg.mass_threshold,
    })
}

/// Bernoulli landscape, low eigenvectors, the well partition at the target
/// eigenvalue and the per-eigenvector mass table.
pub fn run_demo2d(cfg: &Demo2dConfig) -> Result<Demo2dResult> {
    if cfg.target == 0 || cfg.target > cfg.eig_count {
        return Err(Error::InvalidParameter(format!(
            "target {} outside 1..={}",
            cfg.target, cfg.eig_count
        )));
    }
    let mut skipped = Vec::new();
    let mut seed = cfg.seed;
    let (grid, coeffs) = loop {
        match gen_bernoulli_2d(seed, cfg.t, cfg.v_high, cfg.prob, cfg.cells_per_unit) {
            Ok(x) => break x,
            Err(Error::AllZeroRealization(s)) if (skipped.len() as u64) < cfg.max_seed_retries => {
                skipped.push(s);
                seed = seed.wrapping_add(1);
            }
            Err(e) => return Err(e),
        }
    };
    let inst = Instance::new(grid, coeffs, cfg.landscape_tol)?;
    let eigs = eig_smallest_with(&inst.op, cfg.eig_count, &cfg.eigen, Domain::Global)?;
    let target = cfg.target - 1;
    let delta = cfg.delta.unwrap_or_else(|| mean_spacing(&eigs.values, target));
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let partition = build_partition(
        &inst.grid,
        &inst.landscape,
        &inst.coeffs,
        eigs.values[target],
        delta,
        cfg.merge_threshold,
        cfg.stencil,
    )?;
    let mass_table = (0..eigs.len())
        .map(|j| mass_row(&inst, &eigs, j, delta, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Demo2dResult {
        seed_used: seed,
        skipped_seeds: skipped,
        instance: inst,
        eigs,
        delta,
        partition,
        mass_table,
    })
}

pub fn write_mass_table_csv(rows: &[MassRow], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "index,value,cluster_count,best_cluster,basin_fraction,well_fraction,localized")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            r.index,
            fmt_f(r.value),
            r.cluster_count,
            r.best_cluster,
            fmt_f(r.basin_fraction),
            fmt_f(r.well_fraction),
            r.localized as u8
        )?;
    }
    f.flush()?;
    Ok(())
}
