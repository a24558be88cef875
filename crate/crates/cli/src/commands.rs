//! One function per subcommand. Each writes its files into `out` and
//! returns the lines for the stdout summary.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use landscape_core::agmon::{agmon_weight, AgmonGraph};
use landscape_core::eigensolve::{eig_localized_with, eig_smallest_with, Domain, EigenOptions};
use landscape_core::ensemble::{aggregate, run_demo2d, run_ensemble, run_realization, write_ensemble_outputs, write_records_csv};
use landscape_core::grid::IndexSet;
use landscape_core::instance::Instance;
use landscape_core::landscape::SolverInfo;
use landscape_core::output::{fmt_f, write_json, write_landscape_csv};
use landscape_core::verify::{run_suite, verify_landscape_floor, CheckReport};
use landscape_core::wells::{build_partition, sublevel_set, WellPartition};
use landscape_core::{Error, Result};

use crate::config::{ConfigError, RunConfig, WellsConfig};

/// Failure of a subcommand: bad configuration or a computation error.
pub enum Failure {
    Config(ConfigError),
    Compute(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(e.into())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

pub type Outcome = std::result::Result<Vec<String>, Failure>;

fn status(r: &CheckReport) -> &'static str {
    if r.skipped {
        "SKIP"
    } else if r.pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn report_line(r: &CheckReport) -> String {
    format!("{} {}: lhs {} rhs {}", status(r), r.name, fmt_f(r.lhs), fmt_f(r.rhs))
}

fn instance(cfg: &RunConfig) -> std::result::Result<Instance, Failure> {
    let (grid, coeffs) = cfg.problem()?;
    Ok(Instance::new(grid, coeffs, cfg.landscape_tol)?)
}

fn write_values(path: &Path, set: &landscape_core::eigensolve::EigenSet) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    set.write_values_csv(&mut f, true)?;
    f.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LandscapeSummary<'a> {
    node_count: usize,
    v_bar: f64,
    min_u: f64,
    max_u: f64,
    min_w: f64,
    max_w: f64,
    residual: f64,
    solver: &'a SolverInfo,
    floor: &'a CheckReport,
}

pub fn landscape(cfg: &RunConfig, out: &Path) -> Outcome {
    let inst = instance(cfg)?;
    let l = &inst.landscape;
    let floor = verify_landscape_floor(l, inst.v_bar());
    write_landscape_csv(&out.join("landscape.csv"), &inst.grid, &inst.coeffs, l)?;
    write_json(
        &out.join("landscape.json"),
        &LandscapeSummary {
            node_count: inst.grid.node_count(),
            v_bar: inst.v_bar(),
            min_u: l.min_u(),
            max_u: l.max_u(),
            min_w: l.min_w(),
            max_w: l.max_w(),
            residual: l.residual(),
            solver: l.solver(),
            floor: &floor,
        },
    )?;
    Ok(vec![
        format!("nodes {}, min u {}, max u {}, residual {}", inst.grid.node_count(), fmt_f(l.min_u()), fmt_f(l.max_u()), fmt_f(l.residual())),
        report_line(&floor),
    ])
}

/// The threshold from `[wells]`, computing the requested global
/// eigenvalue when no explicit value is given.
fn mu_bar(inst: &Instance, w: &WellsConfig, eigen: &EigenOptions) -> Result<f64> {
    match w.mu_bar {
        Some(m) => Ok(m),
        None => {
            let k = w.mu_bar_index.max(1);
            let set = eig_smallest_with(&inst.op, k, eigen, Domain::Global)?;
            Ok(set.values[k - 1])
        }
    }
}

fn partition(inst: &Instance, w: &WellsConfig, eigen: &EigenOptions) -> Result<WellPartition> {
    let mu = mu_bar(inst, w, eigen)?;
    build_partition(&inst.grid, &inst.landscape, &inst.coeffs, mu, w.delta, w.merge_threshold, w.stencil)
}

pub fn eigs(cfg: &RunConfig, out: &Path) -> Outcome {
    let wells = if cfg.eigs.localized {
        Some(cfg.section(&cfg.wells, "wells")?)
    } else {
        None
    };
    let inst = instance(cfg)?;
    let global = eig_smallest_with(&inst.op, cfg.eigs.count, &cfg.eigen, Domain::Global)?;
    write_values(&out.join("eigenvalues.csv"), &global)?;
    global.write_vectors_csv(&out.join("eigenvectors.csv"))?;
    let mut lines = vec![format!(
        "{} global eigenvalues in [{}, {}], max residual {}",
        global.len(),
        fmt_f(global.values[0]),
        fmt_f(global.values[global.len() - 1]),
        fmt_f(global.residuals.iter().cloned().fold(0.0, f64::max))
    )];
    if let Some(w) = wells {
        let part = partition(&inst, w, &cfg.eigen)?;
        let loc = eig_localized_with(&inst.op, &part, cfg.eigs.k_per_well, part.mu_bar + part.delta, &cfg.eigen)?;
        loc.write_values_csv(&out.join("localized_eigenvalues.csv"))?;
        part.write_csv(&out.join("partition.csv"))?;
        lines.push(format!("{} localized eigenvalues over {} clusters", loc.flat.len(), part.cluster_count()));
    }
    Ok(lines)
}

pub fn wells(cfg: &RunConfig, out: &Path) -> Outcome {
    let w = cfg.section(&cfg.wells, "wells")?;
    let inst = instance(cfg)?;
    let part = partition(&inst, w, &cfg.eigen)?;
    part.write_csv(&out.join("partition.csv"))?;
    write_json(&out.join("wells.json"), &part)?;
    let mut lines = vec![format!(
        "mu_bar {}, {} components, {} clusters, S_bar {}",
        fmt_f(part.mu_bar),
        part.components.len(),
        part.cluster_count(),
        fmt_f(part.s_bar)
    )];
    lines.extend(part.warnings.iter().map(|s| format!("warning: {s}")));
    Ok(lines)
}

#[derive(Serialize)]
struct AgmonSummary {
    mu: f64,
    source_count: usize,
    max_finite_distance: f64,
    unreachable: usize,
}

pub fn agmon(cfg: &RunConfig, out: &Path) -> Outcome {
    let a = cfg.section(&cfg.agmon, "agmon")?;
    if a.source_level.is_some() && !a.sources.is_empty() {
        return Err(ConfigError::Invalid("[agmon] takes either sources or source_level, not both".into()).into());
    }
    let inst = instance(cfg)?;
    let n = inst.grid.node_count();
    let sources = match a.source_level {
        Some(level) => sublevel_set(&inst.landscape, level),
        None => IndexSet::checked(a.sources.clone(), n)?,
    };
    let weight = agmon_weight(&inst.landscape, &inst.coeffs, a.mu)?;
    let graph = AgmonGraph::new(&inst.grid, &weight, a.stencil)?;
    let field = graph.distances(&sources)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("agmon.csv"))?);
    writeln!(f, "node_index,w,h")?;
    for (i, (w, h)) in weight.values().iter().zip(field.values()).enumerate() {
        writeln!(f, "{i},{},{}", fmt_f(*w), fmt_f(*h))?;
    }
    f.flush()?;
    let finite: Vec<f64> = field.values().iter().cloned().filter(|h| h.is_finite()).collect();
    let summary = AgmonSummary {
        mu: a.mu,
        source_count: sources.len(),
        max_finite_distance: finite.iter().cloned().fold(0.0, f64::max),
        unreachable: n - finite.len(),
    };
    write_json(&out.join("agmon.json"), &summary)?;
    Ok(vec![format!(
        "{} sources, max distance {}, {} unreachable nodes",
        summary.source_count,
        fmt_f(summary.max_finite_distance),
        summary.unreachable
    )])
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Outcome {
    let inst = instance(cfg)?;
    let result = run_suite(&inst, &cfg.verify)?;
    result.write_outputs(out, &cfg.verify)?;
    let mut lines: Vec<String> = result.reports.iter().map(report_line).collect();
    let passed = result.reports.iter().filter(|r| r.pass).count();
    let skipped = result.reports.iter().filter(|r| r.skipped).count();
    lines.push(format!(
        "{} checks: {} passed, {} failed, {} skipped",
        result.reports.len(),
        passed,
        result.reports.len() - passed - skipped,
        skipped
    ));
    Ok(lines)
}

pub fn realization(cfg: &RunConfig, out: &Path) -> Outcome {
    let r = cfg.section(&cfg.realization, "realization")?;
    let record = run_realization(r);
    let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("records.csv"))?);
    write_records_csv(std::slice::from_ref(&record), &mut f)?;
    f.flush()?;
    write_json(&out.join("record.json"), &record)?;
    if let Some(tag) = &record.error_tag {
        return Ok(vec![format!("FAIL seed {} T {}: {}", record.seed, record.t, tag)]);
    }
    Ok(vec![format!(
        "seed {} T {}: lambda1 {}, gap {}, {} components, S_min {}",
        record.seed,
        record.t,
        fmt_f(record.lambda1),
        fmt_f(record.gap),
        record.component_count,
        fmt_f(record.s_min)
    )])
}

pub fn ensemble(cfg: &RunConfig, out: &Path, threads: Option<usize>) -> Outcome {
    let e = cfg.section(&cfg.ensemble, "ensemble")?;
    let records = run_ensemble(e, threads)?;
    let summary = aggregate(&records)?;
    write_ensemble_outputs(out, e, &records, &summary)?;
    let mut lines: Vec<String> = summary
        .sizes
        .iter()
        .map(|s| {
            format!(
                "T {}: {} realizations, {} failed, median S {}, gap fraction {}",
                s.t,
                s.realizations,
                s.failures,
                fmt_f(s.median_s),
                fmt_f(s.gap_fraction)
            )
        })
        .collect();
    lines.push(match (&summary.fit, &summary.fit_note) {
        (Some(fit), _) => format!("fit: S = {} T^{}", fmt_f(fit.prefactor), fmt_f(fit.exponent)),
        (None, Some(note)) => format!("fit: none ({note})"),
        (None, None) => "fit: none".into(),
    });
    Ok(lines)
}

pub fn demo2d(cfg: &RunConfig, out: &Path) -> Outcome {
    let d = cfg.section(&cfg.demo2d, "demo2d")?;
    let result = run_demo2d(d)?;
    result.write_outputs(out, d)?;
    let mut lines: Vec<String> = result
        .mass_table
        .iter()
        .map(|r| {
            format!(
                "{} eigenvector {}: lambda {}, basin fraction {}",
                if r.localized { "PASS" } else { "FAIL" },
                r.index,
                fmt_f(r.value),
                fmt_f(r.basin_fraction)
            )
        })
        .collect();
    lines.push(format!(
        "seed {}: {} of {} eigenvectors localized",
        result.seed_used,
        result.localized_count(),
        result.mass_table.len()
    ));
    Ok(lines)
}
