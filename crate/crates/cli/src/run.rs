//! Task execution and report records.

use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use wigfluct::annulus::{enumerate_nc2, filter_by_through, is_non_mixing, kreweras, through_strings};
use wigfluct::covariance::ParamsMap;
use wigfluct::graph::oracle::tau2_partitions;
use wigfluct::graph::{exact_tau2, PartitionDiagnostic};
use wigfluct::monte_carlo::{empirical_cov, run_traces};
use wigfluct::{phi2, LimitState, WignerId, C64};

use crate::config::{ExperimentConfig, Resolved, Task};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    pub s1: C64,
    pub s2: C64,
    pub s3: C64,
    pub s4: C64,
    pub total: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: C64,
    pub std_error: f64,
    pub replicates: usize,
}

/// One (pair, N) row of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub p: String,
    pub q: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<Theory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<C64>,
    /// `|MC − theory| > 4·SE + c/N`.
    pub discrepancy: bool,
    /// `|MC − oracle| > 4·SE` at the same N.
    #[serde(default)]
    pub oracle_discrepancy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub task: Task,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub records: Vec<PairRecord>,
    pub discrepancy: bool,
    /// Wall-clock seconds per phase; only present when requested, so
    /// reports are reproducible byte for byte by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Vec<(String, f64)>>,
}

impl Report {
    pub fn flagged(&self) -> usize {
        self.records.iter().filter(|r| r.discrepancy || r.oracle_discrepancy).count()
    }
}

fn params(resolved: &Resolved) -> anyhow::Result<ParamsMap> {
    resolved
        .ensembles
        .iter()
        .map(|e| Ok((e.id, e.params().with_context(|| format!("ensemble {}", e.id))?)))
        .collect()
}

fn theory_at(resolved: &Resolved, ps: &ParamsMap, n: usize) -> anyhow::Result<Vec<Theory>> {
    let state = LimitState::finite(resolved.family_at(n)?);
    resolved
        .pairs
        .iter()
        .map(|&(i, j)| {
            let (p, q) = (&resolved.monomials[i], &resolved.monomials[j]);
            let t = phi2(p, q, ps, &state).with_context(|| format!("phi2({p}, {q})"))?;
            Ok(Theory {
                s1: t.s1,
                s2: t.s2,
                s3: t.s3,
                s4: t.s4,
                total: t.total(),
            })
        })
        .collect()
}

fn mc_at(cfg: &ExperimentConfig, resolved: &Resolved, n: usize) -> anyhow::Result<Vec<McEstimate>> {
    let family = resolved.family_at(n)?;
    let samples = run_traces(&resolved.monomials, n, cfg.replicates, &resolved.ensembles, &family, cfg.seed)
        .with_context(|| format!("Monte Carlo at N = {n}"))?;
    resolved
        .pairs
        .iter()
        .map(|&(i, j)| {
            let (estimate, std_error) = empirical_cov(&samples, i, j)?;
            Ok(McEstimate {
                estimate,
                std_error,
                replicates: cfg.replicates,
            })
        })
        .collect()
}

fn oracle_allowed(cfg: &ExperimentConfig, resolved: &Resolved, n: usize, pair: (usize, usize)) -> bool {
    let degree = resolved.monomials[pair.0].degree() + resolved.monomials[pair.1].degree();
    n <= cfg.caps.oracle_max_n && degree <= cfg.caps.oracle_max_degree
}

/// Runs `theory`, `mc`, `oracle` or `compare`. Partition diagnostics are
/// collected for `oracle` when `dump` is set.
pub fn run(
    cfg: &ExperimentConfig,
    task: Task,
    dump: bool,
    timing: bool,
) -> anyhow::Result<(Report, Vec<(String, String, usize, Vec<PartitionDiagnostic>)>)> {
    let resolved = cfg.resolve(task)?;
    let ps = params(&resolved)?;
    let mut times = Vec::new();
    let mut records = Vec::new();
    let mut dumps = Vec::new();
    let sizes = match task {
        Task::Theory => cfg.theory_sizes(),
        _ => cfg.sizes.clone(),
    };
    for n in sizes {
        let blank = |i: usize, j: usize| PairRecord {
            p: resolved.monomials[i].to_string(),
            q: resolved.monomials[j].to_string(),
            n,
            theory: None,
            mc: None,
            oracle: None,
            discrepancy: false,
            oracle_discrepancy: false,
        };
        let mut rows: Vec<PairRecord> = resolved.pairs.iter().map(|&(i, j)| blank(i, j)).collect();
        if matches!(task, Task::Theory | Task::Compare) {
            let t0 = Instant::now();
            for (row, t) in rows.iter_mut().zip(theory_at(&resolved, &ps, n)?) {
                row.theory = Some(t);
            }
            times.push((format!("theory N={n}"), t0.elapsed().as_secs_f64()));
        }
        if matches!(task, Task::Mc | Task::Compare) {
            let t0 = Instant::now();
            for (row, m) in rows.iter_mut().zip(mc_at(cfg, &resolved, n)?) {
                row.mc = Some(m);
            }
            times.push((format!("mc N={n}"), t0.elapsed().as_secs_f64()));
        }
        if matches!(task, Task::Oracle | Task::Compare) {
            let t0 = Instant::now();
            let family = resolved.family_at(n)?;
            for (row, &(i, j)) in rows.iter_mut().zip(&resolved.pairs) {
                if !oracle_allowed(cfg, &resolved, n, (i, j)) {
                    if task == Task::Oracle {
                        anyhow::bail!(
                            "pair ({}, {}) at N = {n} exceeds the oracle caps",
                            resolved.monomials[i],
                            resolved.monomials[j]
                        );
                    }
                    continue;
                }
                let (p, q) = (&resolved.monomials[i], &resolved.monomials[j]);
                if task == Task::Oracle && dump {
                    let (v, diag) = tau2_partitions(p, q, &family, &resolved.ensembles)
                        .with_context(|| format!("oracle for ({p}, {q}) at N = {n}"))?;
                    row.oracle = Some(v);
                    dumps.push((p.to_string(), q.to_string(), n, diag));
                } else {
                    row.oracle = Some(
                        exact_tau2(p, q, &family, &resolved.ensembles)
                            .with_context(|| format!("oracle for ({p}, {q}) at N = {n}"))?,
                    );
                }
            }
            times.push((format!("oracle N={n}"), t0.elapsed().as_secs_f64()));
        }
        for row in &mut rows {
            if let (Some(t), Some(m)) = (&row.theory, &row.mc) {
                row.discrepancy = (m.estimate - t.total).norm() > 4.0 * m.std_error + cfg.slack / n as f64;
            }
            if let (Some(o), Some(m)) = (&row.oracle, &row.mc) {
                row.oracle_discrepancy = (m.estimate - o).norm() > 4.0 * m.std_error;
            }
        }
        records.extend(rows);
    }
    let discrepancy = records.iter().any(|r| r.discrepancy || r.oracle_discrepancy);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        task,
        config_hash: cfg.hash(),
        config: cfg.to_value(),
        records,
        discrepancy,
        timing: timing.then_some(times),
    };
    Ok((report, dumps))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingRow {
    pub pairing: String,
    pub kreweras: String,
    pub through: usize,
    pub through_strings: Vec<(usize, usize)>,
}

/// Lists NC₂(m, n), optionally restricted to `l` through strings and to
/// pairings non-mixing for the given labels.
pub fn pairings(m: usize, n: usize, through: Option<usize>, labels: Option<&[u32]>) -> anyhow::Result<Vec<PairingRow>> {
    let mut list = enumerate_nc2(m, n)?;
    if let Some(l) = through {
        list = filter_by_through(&list, l);
    }
    if let Some(labels) = labels {
        anyhow::ensure!(labels.len() == m + n, "need {} labels, got {}", m + n, labels.len());
        let ids: Vec<WignerId> = labels.iter().map(|&l| WignerId(l)).collect();
        list.retain(|s| is_non_mixing(s, &ids, false));
    }
    Ok(list
        .iter()
        .map(|s| PairingRow {
            pairing: s.to_string(),
            kreweras: kreweras(s).to_string(),
            through: s.through_count(),
            through_strings: through_strings(s),
        })
        .collect())
}

#[derive(Serialize)]
struct CsvRow<'a> {
    p: &'a str,
    q: &'a str,
    n: usize,
    s1_re: Option<f64>,
    s2_re: Option<f64>,
    s3_re: Option<f64>,
    s4_re: Option<f64>,
    theory_re: Option<f64>,
    theory_im: Option<f64>,
    mc_re: Option<f64>,
    mc_im: Option<f64>,
    mc_se: Option<f64>,
    oracle_re: Option<f64>,
    oracle_im: Option<f64>,
    discrepancy: bool,
    oracle_discrepancy: bool,
}

pub fn write_csv(report: &Report, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in &report.records {
        let t = r.theory.as_ref();
        w.serialize(CsvRow {
            p: &r.p,
            q: &r.q,
            n: r.n,
            s1_re: t.map(|t| t.s1.re),
            s2_re: t.map(|t| t.s2.re),
            s3_re: t.map(|t| t.s3.re),
            s4_re: t.map(|t| t.s4.re),
            theory_re: t.map(|t| t.total.re),
            theory_im: t.map(|t| t.total.im),
            mc_re: r.mc.as_ref().map(|m| m.estimate.re),
            mc_im: r.mc.as_ref().map(|m| m.estimate.im),
            mc_se: r.mc.as_ref().map(|m| m.std_error),
            oracle_re: r.oracle.map(|o| o.re),
            oracle_im: r.oracle.map(|o| o.im),
            discrepancy: r.discrepancy,
            oracle_discrepancy: r.oracle_discrepancy,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_partitions(
    dumps: &[(String, String, usize, Vec<PartitionDiagnostic>)],
    path: &Path,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "p", "q", "N", "id", "partition", "q_total", "q1", "q2", "q2_prime", "classification", "beta_x_re",
        "beta_x_im", "beta_a_re", "beta_a_im",
    ])?;
    for (p, q, n, rows) in dumps {
        for d in rows {
            let classes: Vec<String> = d.classification.iter().map(|c| c.to_string()).collect();
            w.write_record([
                p.clone(),
                q.clone(),
                n.to_string(),
                d.id.to_string(),
                d.partition.clone(),
                d.q.to_string(),
                d.q1.to_string(),
                d.q2.to_string(),
                d.q2_prime.to_string(),
                classes.join(";"),
                d.beta_x.re.to_string(),
                d.beta_x.im.to_string(),
                d.beta_a.re.to_string(),
                d.beta_a.im.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table of a report.
pub fn summarize(report: &Report) -> String {
    let mut out = format!(
        "task {} | config {} | {} rows | {} flagged\n",
        report.task,
        &report.config_hash[..12.min(report.config_hash.len())],
        report.records.len(),
        report.flagged()
    );
    let fmt = |z: C64| format!("{:+.5}{:+.5}i", z.re, z.im);
    for r in &report.records {
        out.push_str(&format!("({}, {}) N={}", r.p, r.q, r.n));
        if let Some(t) = &r.theory {
            out.push_str(&format!("  theory {}", fmt(t.total)));
        }
        if let Some(m) = &r.mc {
            out.push_str(&format!("  mc {} ± {:.5}", fmt(m.estimate), m.std_error));
        }
        if let Some(o) = r.oracle {
            out.push_str(&format!("  oracle {}", fmt(o)));
        }
        if r.discrepancy || r.oracle_discrepancy {
            out.push_str("  FLAGGED");
        }
        out.push('\n');
    }
    out
}
