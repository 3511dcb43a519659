//! Runs grouping and optimization experiments and writes their reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig, Mode};
use crate::bench::{suite_descriptors, InstanceDescriptor};
use crate::ccopt::{cc_optimize_counted, phase_evaluations};
use crate::decompose::{
    dg2_counted, oedg_counted, ordg_counted, rdg3_counted, DecompositionResult, OedgOptions, OrdgOptions,
};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, decomposition_accuracy, rank_sum, GroupingScore, Verdict};
use crate::problem::{EvaluationCounter, OverlappingProblem};
use crate::seed::{derive_seed, hash_str};

/// Outcome of one (problem, algorithm, run) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub algorithm: String,
    pub run: usize,
    pub seed: u64,
    pub grouping_fes: u64,
    pub da: f64,
    pub refined: bool,
    /// Formed groups, 1-based.
    #[serde(rename = "N")]
    pub subcomponents: Vec<Vec<usize>>,
    #[serde(rename = "OV")]
    pub shared_groups: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimization_fes: Option<u64>,
    /// `(evaluations including grouping, best fitness)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub problem: String,
    pub algorithm: String,
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

/// Self-describing summary written next to the reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub problems: Vec<String>,
    pub cells: usize,
    pub completed: usize,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub manifest: Manifest,
    pub records: Vec<RunRecord>,
}

impl ExperimentOutput {
    pub fn all_completed(&self) -> bool {
        self.manifest.failures.is_empty()
    }
}

/// Seed of one cell, independent of scheduling.
pub fn cell_seed(master: u64, problem: &str, algorithm: Algorithm, run: usize) -> u64 {
    derive_seed(master, &[hash_str(problem), hash_str(algorithm.name()), run as u64])
}

/// Loads the problems named by a resolved configuration.
pub fn load_problems(cfg: &ExperimentConfig) -> Result<Vec<InstanceDescriptor>> {
    let mut descriptors = if cfg.instances.is_empty() {
        let suite = cfg.suite.ok_or_else(|| Error::config("suite", "no suite given"))?;
        suite_descriptors(suite, cfg.scale, cfg.seed, &cfg.suite_options)?
    } else {
        cfg.instances.iter().map(InstanceDescriptor::load).collect::<Result<Vec<_>>>()?
    };
    if !cfg.problems.is_empty() {
        for p in &cfg.problems {
            if !descriptors.iter().any(|d| &d.name == p) {
                return Err(Error::config("problems", format!("no problem named `{p}`")));
            }
        }
        descriptors.retain(|d| cfg.problems.contains(&d.name));
    }
    Ok(descriptors)
}

fn decompose(
    cfg: &ExperimentConfig,
    problem: &OverlappingProblem<f64>,
    algorithm: Algorithm,
    seed: u64,
    counter: &EvaluationCounter,
) -> Result<DecompositionResult> {
    let n = crate::problem::BlackBox::dimension(problem);
    let mut result = match algorithm {
        Algorithm::Oedg => oedg_counted(
            problem,
            seed,
            &OedgOptions {
                detection: cfg.detection,
                ..Default::default()
            },
            counter,
        )?,
        Algorithm::Rdg3 => rdg3_counted(problem, cfg.rdg3.eps_n.unwrap_or(1), seed, &cfg.detection, counter)?,
        Algorithm::Ordg => ordg_counted(
            problem,
            seed,
            &OrdgOptions {
                detection: cfg.detection,
                ..Default::default()
            },
            counter,
        )?,
        Algorithm::Dg2 => dg2_counted(problem, cfg.dg2.threshold, counter)?.1,
        Algorithm::Single => DecompositionResult::single_group(n),
        Algorithm::Truth => {
            let truth = problem.truth();
            DecompositionResult {
                algorithm: "truth".into(),
                seed,
                fes_used: 0,
                subcomponents: truth.subcomponents.clone(),
                shared_groups: crate::decompose::dg2::shared_members(&truth.subcomponents),
                refined: true,
            }
        }
    };
    result.seed = seed;
    Ok(result)
}

fn run_cell(
    cfg: &ExperimentConfig,
    problem: &OverlappingProblem<f64>,
    algorithm: Algorithm,
    run: usize,
    seed: u64,
) -> Result<RunRecord> {
    let counter = EvaluationCounter::new();
    let grouping = decompose(cfg, problem, algorithm, seed, &counter)?;
    let report = grouping.report();
    let mut record = RunRecord {
        problem: problem.name().to_string(),
        algorithm: algorithm.name().to_string(),
        run,
        seed,
        grouping_fes: grouping.fes_used,
        da: decomposition_accuracy(problem.truth(), &grouping)?,
        refined: grouping.refined,
        subcomponents: report.subcomponents,
        shared_groups: report.shared_groups,
        best_f: None,
        optimization_fes: None,
        trajectory: Vec::new(),
    };
    if cfg.mode == Mode::Optimization {
        let budget = cfg.budget.unwrap_or(0);
        let left = budget.saturating_sub(grouping.fes_used);
        let longest = grouping
            .subcomponents
            .iter()
            .map(|g| phase_evaluations(g.len(), cfg.cc.phase_generations))
            .max()
            .unwrap_or(0);
        if left <= longest {
            return Err(Error::config(
                "budget",
                format!(
                    "budget must exceed one subsolver phase after grouping ({} left, {longest} needed)",
                    left
                ),
            ));
        }
        let opt_seed = derive_seed(seed, &[hash_str("optimize")]);
        let out = cc_optimize_counted(problem, &grouping, left, opt_seed, &cfg.cc, &counter)?;
        record.best_f = Some(out.best_f);
        record.optimization_fes = Some(out.fes_used);
        record.trajectory = out
            .trajectory
            .into_iter()
            .map(|(fes, f)| (fes + grouping.fes_used, f))
            .collect();
    }
    Ok(record)
}

/// Runs every cell of a resolved configuration on `threads` workers.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    let algorithms = cfg.parsed_algorithms()?;
    let descriptors = load_problems(cfg)?;
    let problems: Vec<OverlappingProblem<f64>> = descriptors.iter().map(InstanceDescriptor::build).collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (pi, p) in problems.iter().enumerate() {
        for &a in &algorithms {
            for run in 0..cfg.runs {
                cells.push((pi, a, run, cell_seed(cfg.seed, p.name(), a, run)));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let outcomes: Vec<Result<RunRecord>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(pi, a, run, seed)| run_cell(cfg, &problems[pi], a, run, seed))
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (&(pi, a, run, seed), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => failures.push(CellFailure {
                problem: problems[pi].name().to_string(),
                algorithm: a.name().to_string(),
                run,
                seed,
                error: e.to_string(),
            }),
        }
    }
    Ok(ExperimentOutput {
        manifest: Manifest {
            config: cfg.clone(),
            problems: problems.iter().map(|p| p.name().to_string()).collect(),
            cells: cells.len(),
            completed: records.len(),
            failures,
        },
        records,
    })
}

fn group_records<'a>(records: &'a [RunRecord], problems: &[String], algorithms: &[String]) -> BTreeMap<(usize, usize), Vec<&'a RunRecord>> {
    let mut map = BTreeMap::new();
    for r in records {
        let (Some(pi), Some(ai)) = (
            problems.iter().position(|p| p == &r.problem),
            algorithms.iter().position(|a| a == &r.algorithm),
        ) else {
            continue;
        };
        map.entry((pi, ai)).or_insert_with(Vec::new).push(r);
    }
    for v in map.values_mut() {
        v.sort_by_key(|r| r.run);
    }
    map
}

/// Problem-by-algorithm grid of mean DA and mean FEs.
pub fn grouping_csv(manifest: &Manifest, records: &[RunRecord]) -> Result<String> {
    let algs = &manifest.config.algorithms;
    let grid = group_records(records, &manifest.problems, algs);
    let mut out = String::from("problem");
    for a in algs {
        write!(out, ",{a}_da,{a}_fes").unwrap();
    }
    out.push('\n');
    for (pi, p) in manifest.problems.iter().enumerate() {
        out.push_str(p);
        for ai in 0..algs.len() {
            match grid.get(&(pi, ai)) {
                Some(rs) => {
                    let scores: Vec<GroupingScore> = rs
                        .iter()
                        .map(|r| GroupingScore {
                            da: r.da,
                            fes: r.grouping_fes,
                            run_seed: r.seed,
                        })
                        .collect();
                    let agg = aggregate(&scores)?;
                    write!(out, ",{},{}", agg.mean_da, agg.mean_fes).unwrap();
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Median best fitness per cell and the rank-sum verdict of the first
/// algorithm against each other one.
pub fn optimization_csvs(manifest: &Manifest, records: &[RunRecord]) -> Result<(String, String)> {
    let algs = &manifest.config.algorithms;
    let grid = group_records(records, &manifest.problems, algs);
    let finals = |pi: usize, ai: usize| -> Vec<f64> {
        grid.get(&(pi, ai))
            .map(|rs| rs.iter().filter_map(|r| r.best_f).collect())
            .unwrap_or_default()
    };
    let mut summary = String::from("problem");
    for a in algs {
        write!(summary, ",{a}_median,{a}_runs").unwrap();
    }
    summary.push('\n');
    let mut wtl = String::from("problem,algorithm,against,verdict,p_value,median,median_against\n");
    let mut tally = vec![[0usize; 3]; algs.len()];
    for (pi, p) in manifest.problems.iter().enumerate() {
        summary.push_str(p);
        for ai in 0..algs.len() {
            let f = finals(pi, ai);
            if f.is_empty() {
                summary.push_str(",,0");
            } else {
                write!(summary, ",{},{}", crate::metrics::median(&f), f.len()).unwrap();
            }
        }
        summary.push('\n');
        let first = finals(pi, 0);
        for ai in 1..algs.len() {
            let other = finals(pi, ai);
            match rank_sum(&first, &other, 0.05) {
                Ok(c) => {
                    tally[ai][match c.verdict {
                        Verdict::W => 0,
                        Verdict::T => 1,
                        Verdict::L => 2,
                    }] += 1;
                    writeln!(wtl, "{p},{},{},{},{},{},{}", algs[0], algs[ai], c.verdict, c.p_value, c.median_a, c.median_b).unwrap();
                }
                Err(_) => writeln!(wtl, "{p},{},{},NA,,,", algs[0], algs[ai]).unwrap(),
            }
        }
    }
    for ai in 1..algs.len() {
        let [w, t, l] = tally[ai];
        writeln!(wtl, "W/T/L,{},{},{w}/{t}/{l},,,", algs[0], algs[ai]).unwrap();
    }
    Ok((summary, wtl))
}

/// Trajectories as `problem,algorithm,run,fes,best_f` rows.
pub fn trajectories_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("problem,algorithm,run,fes,best_f\n");
    for r in records {
        for &(fes, f) in &r.trajectory {
            writeln!(out, "{},{},{},{fes},{f}", r.problem, r.algorithm, r.run).unwrap();
        }
    }
    out
}

/// Runs as JSON lines, preceded by one line holding the resolved configuration.
pub fn runs_jsonl(manifest: &Manifest, records: &[RunRecord]) -> Result<String> {
    let mut out = serde_json::to_string(&serde_json::json!({ "config": manifest.config }))?;
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_runs_jsonl(text: &str) -> Result<(ExperimentConfig, Vec<RunRecord>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head: serde_json::Value = serde_json::from_str(lines.next().ok_or_else(|| Error::structure("empty runs file"))?)?;
    let config: ExperimentConfig = serde_json::from_value(
        head.get("config")
            .cloned()
            .ok_or_else(|| Error::structure("runs file lacks its configuration line"))?,
    )?;
    let records = lines.map(serde_json::from_str).collect::<std::result::Result<_, _>>()?;
    Ok((config, records))
}

/// Writes every report for `output` into `dir`; returns the written file names.
pub fn write_reports(dir: &Path, output: &ExperimentOutput) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        fs::write(dir.join(name), body)?;
        files.push(name.to_string());
        Ok(())
    };
    put("manifest.json", serde_json::to_string_pretty(&output.manifest)? + "\n")?;
    put("config.toml", output.manifest.config.to_toml())?;
    put("runs.jsonl", runs_jsonl(&output.manifest, &output.records)?)?;
    put("grouping.csv", grouping_csv(&output.manifest, &output.records)?)?;
    if output.manifest.config.mode == Mode::Optimization {
        let (summary, wtl) = optimization_csvs(&output.manifest, &output.records)?;
        put("optimization.csv", summary)?;
        put("wtl.csv", wtl)?;
        put("trajectories.csv", trajectories_csv(&output.records))?;
    }
    Ok(files)
}
