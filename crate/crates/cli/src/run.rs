//! Mode dispatch and CSV emission.
//!
//! Every output file is `<mode>_<label>.csv`, with a suffix when a mode
//! writes several tables. Independent points are evaluated in parallel and
//! written in input order, so a configuration and seed always produce the
//! same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use dcf_mrp::bianchi::solve_bianchi_fp;
use dcf_mrp::fairness::{jain_index, success_run_delay, success_run_zero_delay, SuccessRun};
use dcf_mrp::meanfield::{integrate_ode, stage_rates};
use dcf_mrp::model::{AttemptRates, BackoffSchedule, PerformanceReport};
use dcf_mrp::mrp_delay::analyze_delay;
use dcf_mrp::mrp_zero::analyze_zero_delay;
use dcf_mrp::optimize::{optimize_minbe, throughput_vs_m};
use dcf_mrp::sim::{
    estimate_conditional_rates, run_sim, windowed_unfairness, CycleKind, SimConfig, SimStats,
};
use rayon::prelude::*;

use crate::config::{InitialMass, Mode, RunConfig};
use crate::error::CliResult;

const DELAY_NODES: usize = 2;

/// A CSV table: header and rows of preformatted fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> CliResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

fn theta(x: f64) -> String {
    format!("{x:.6}")
}

fn rel_err(a: f64, b: f64) -> String {
    num((a - b).abs() / b.abs())
}

fn rates_fields(r: &AttemptRates) -> [String; 4] {
    [num(r.beta_d), num(r.beta_s), num(r.beta_c), num(r.beta)]
}

/// Runs `cfg` and returns the files written.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let tables = compute(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let mut written = Vec::new();
    for (suffix, table) in tables {
        let path = cfg
            .out
            .join(format!("{}_{}{}.csv", cfg.mode.name(), cfg.label, suffix));
        table.write(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Computes every table of a run, keyed by file-name suffix.
pub fn compute(cfg: &RunConfig) -> CliResult<Vec<(String, Table)>> {
    match cfg.mode {
        Mode::Simulate => simulate(cfg),
        Mode::AnalyzeZero => analyze_zero(cfg, false),
        Mode::Compare if !cfg.has_delay() => analyze_zero(cfg, true),
        Mode::AnalyzeDelay => analyze_delay_mode(cfg, false),
        Mode::Compare => analyze_delay_mode(cfg, true),
        Mode::Bianchi => bianchi(cfg),
        Mode::MeanField => meanfield(cfg),
        Mode::Fairness => fairness(cfg),
        Mode::SweepSlot => sweep_slot(cfg),
        Mode::SweepMinBe => sweep_minbe(cfg),
    }
}

fn sim_config(cfg: &RunConfig, n: usize, delta_us: u64, record_trace: bool) -> SimConfig {
    SimConfig {
        schedule: cfg.schedule.clone(),
        n,
        m: cfg.m_for(delta_us) as u64,
        timing: cfg.timing_for(delta_us),
        cycles: cfg.cycles,
        seed: cfg.seed,
        record_trace,
    }
}

fn simulate(cfg: &RunConfig) -> CliResult<Vec<(String, Table)>> {
    let points: Vec<(usize, u64)> = cfg
        .n
        .iter()
        .flat_map(|&n| cfg.delta_us.iter().map(move |&d| (n, d)))
        .collect();
    let keep_trace = cfg.trace || cfg.window.is_some();
    let runs: Vec<SimStats> = points
        .par_iter()
        .map(|&(n, d)| run_sim(&sim_config(cfg, n, d, keep_trace)))
        .collect::<Result<_, _>>()?;
    let mut summary = Table::new(&[
        "n", "m", "delta_us", "cycles", "gamma", "theta", "beta_d", "beta_s", "beta_c", "beta",
    ]);
    let mut tables = Vec::new();
    let multi = points.len() > 1;
    for (&(n, d), st) in points.iter().zip(&runs) {
        let r = estimate_conditional_rates(st);
        let mut row = vec![
            n.to_string(),
            cfg.m_for(d).to_string(),
            d.to_string(),
            st.cycles.to_string(),
        ];
        row.extend([
            num(st.gamma()),
            theta(st.theta()),
            opt(r.beta_d),
            opt(r.beta_s),
            opt(r.beta_c),
            opt(r.beta),
        ]);
        summary.push(row);
        let tag = if multi {
            format!("_n{n}_delta{d}")
        } else {
            String::new()
        };
        if cfg.trace {
            let mut t = Table::new(&[
                "cycle",
                "kind",
                "winner",
                "attackers",
                "duration_us",
                "misalignment",
            ]);
            for rec in &st.trace {
                let kind = match rec.kind {
                    CycleKind::Success => "success",
                    CycleKind::Collision => "collision",
                };
                let attackers: Vec<String> = rec.attackers.iter().map(usize::to_string).collect();
                t.push(vec![
                    rec.cycle.to_string(),
                    kind.to_string(),
                    rec.winner.map_or(String::new(), |w| w.to_string()),
                    attackers.join(";"),
                    num(rec.duration_us),
                    rec.misalignment.to_string(),
                ]);
            }
            tables.push((format!("_trace{tag}"), t));
        }
        if let Some(window) = cfg.window {
            let series = windowed_unfairness(&st.trace, n, window)?;
            let mut t = Table::new(&["window_index", "node", "gamma"]);
            for (node, values) in series.per_node.iter().enumerate() {
                for (j, v) in values.iter().enumerate() {
                    t.push(vec![j.to_string(), node.to_string(), opt(*v)]);
                }
            }
            tables.push((format!("_unfairness{tag}"), t));
        }
    }
    tables.insert(0, (String::new(), summary));
    Ok(tables)
}

fn analyze_zero(cfg: &RunConfig, with_sim: bool) -> CliResult<Vec<(String, Table)>> {
    let timing = cfg.timing_for(0);
    let rows: Vec<(usize, PerformanceReport, f64, Option<SimStats>)> = cfg
        .n
        .par_iter()
        .map(|&n| -> CliResult<_> {
            let a = analyze_zero_delay(&cfg.schedule, n, &timing)?;
            let b = solve_bianchi_fp(&cfg.schedule, n, 1e-12)?.gamma;
            let s = if with_sim {
                Some(run_sim(&sim_config(cfg, n, 0, false))?)
            } else {
                None
            };
            Ok((n, a, b, s))
        })
        .collect::<CliResult<_>>()?;
    let mut t = Table::new(&[
        "n",
        "gamma_sim",
        "gamma_mrp",
        "gamma_bianchi",
        "theta_sim",
        "theta_mrp",
        "beta_d",
        "beta_s",
        "beta_c",
        "beta",
    ]);
    let mut errs = Table::new(&[
        "n",
        "gamma_rel_err",
        "theta_rel_err",
        "beta_d_rel_err",
        "beta_s_rel_err",
        "beta_c_rel_err",
        "beta_rel_err",
    ]);
    for (n, a, b, s) in &rows {
        let (gs, ts) = s.as_ref().map_or((String::new(), String::new()), |s| {
            (num(s.gamma()), theta(s.theta()))
        });
        let mut row = vec![n.to_string(), gs, num(a.gamma), num(*b), ts, theta(a.theta)];
        row.extend(rates_fields(&a.rates));
        t.push(row);
        if let Some(s) = s {
            errs.push(error_row(n.to_string(), a, s));
        }
    }
    let mut tables = vec![(String::new(), t)];
    if with_sim {
        tables.push(("_errors".to_string(), errs));
    }
    Ok(tables)
}

fn error_row(key: String, a: &PerformanceReport, s: &SimStats) -> Vec<String> {
    let r = estimate_conditional_rates(s);
    let e = |x: f64, y: Option<f64>| y.map_or(String::new(), |y| rel_err(x, y));
    vec![
        key,
        rel_err(a.gamma, s.gamma()),
        rel_err(a.theta, s.theta()),
        e(a.rates.beta_d, r.beta_d),
        e(a.rates.beta_s, r.beta_s),
        e(a.rates.beta_c, r.beta_c),
        e(a.rates.beta, r.beta),
    ]
}

fn analyze_delay_mode(cfg: &RunConfig, with_sim: bool) -> CliResult<Vec<(String, Table)>> {
    let rows: Vec<(u64, PerformanceReport, Option<SimStats>)> = cfg
        .delta_us
        .par_iter()
        .map(|&d| -> CliResult<_> {
            let a = analyze_delay(&cfg.schedule, &cfg.timing_for(d))?;
            let s = if with_sim {
                Some(run_sim(&sim_config(cfg, DELAY_NODES, d, false))?)
            } else {
                None
            };
            Ok((d, a, s))
        })
        .collect::<CliResult<_>>()?;
    let mut tables = Vec::new();
    if with_sim {
        let mut t = Table::new(&[
            "m",
            "delta_us",
            "sigma_us",
            "gamma_sim",
            "gamma_mrp",
            "theta_sim",
            "theta_mrp",
            "beta_d",
            "beta_s",
            "beta_c",
            "beta",
        ]);
        let mut errs = Table::new(&[
            "m",
            "gamma_rel_err",
            "theta_rel_err",
            "beta_d_rel_err",
            "beta_s_rel_err",
            "beta_c_rel_err",
            "beta_rel_err",
        ]);
        for (d, a, s) in &rows {
            let s = s.as_ref().expect("simulated");
            let m = cfg.m_for(*d).to_string();
            let mut row = vec![m.clone(), d.to_string(), cfg.sigma_us.to_string()];
            row.extend([
                num(s.gamma()),
                num(a.gamma),
                theta(s.theta()),
                theta(a.theta),
            ]);
            row.extend(rates_fields(&a.rates));
            t.push(row);
            errs.push(error_row(m, a, s));
        }
        tables.push((String::new(), t));
        tables.push(("_errors".to_string(), errs));
    } else {
        let mut t = Table::new(&[
            "m", "delta_us", "sigma_us", "gamma", "theta", "beta_d", "beta_s", "beta_c", "beta",
        ]);
        for (d, a, _) in &rows {
            let mut row = vec![
                cfg.m_for(*d).to_string(),
                d.to_string(),
                cfg.sigma_us.to_string(),
            ];
            row.extend([num(a.gamma), theta(a.theta)]);
            row.extend(rates_fields(&a.rates));
            t.push(row);
        }
        tables.push((String::new(), t));
    }
    Ok(tables)
}

fn bianchi(cfg: &RunConfig) -> CliResult<Vec<(String, Table)>> {
    let mut t = Table::new(&["n", "gamma_fp"]);
    for &n in &cfg.n {
        t.push(vec![
            n.to_string(),
            num(solve_bianchi_fp(&cfg.schedule, n, 1e-12)?.gamma),
        ]);
    }
    Ok(vec![(String::new(), t)])
}

fn meanfield(cfg: &RunConfig) -> CliResult<Vec<(String, Table)>> {
    let p = stage_rates(&cfg.schedule);
    let k = p.len();
    let mut mu0 = vec![0.0; k];
    match cfg.mu0 {
        InitialMass::First => mu0[0] = 1.0,
        InitialMass::Last => mu0[k - 1] = 1.0,
        InitialMass::Uniform => mu0.fill(1.0 / k as f64),
    }
    let tr = integrate_ode(&mu0, &p, cfg.t_end, 1e-9)?;
    let mut t = Table::new(&["t", "norm_diff"]);
    for (ti, d) in tr.t.iter().zip(&tr.norm_diff) {
        t.push(vec![num(*ti), num(*d)]);
    }
    Ok(vec![(String::new(), t)])
}

fn run_row(param: String, r: &SuccessRun) -> Vec<String> {
    vec![param, num(r.r11), num(r.eu1)]
}

fn solved_run(
    schedule: &BackoffSchedule,
    n: usize,
    cfg: &RunConfig,
    delta_us: u64,
) -> CliResult<SuccessRun> {
    let m = cfg.m_for(delta_us);
    if m == 0 {
        let rates = analyze_zero_delay(schedule, n, &cfg.timing_for(delta_us))?.rates;
        Ok(success_run_zero_delay(&rates, n)?)
    } else {
        let rates = analyze_delay(schedule, &cfg.timing_for(delta_us))?.rates;
        Ok(success_run_delay(&rates, m)?)
    }
}

fn fairness(cfg: &RunConfig) -> CliResult<Vec<(String, Table)>> {
    let mut tables = Vec::new();
    let mut runs = Table::new(&["param", "r11", "EU1"]);
    if let Some(range) = &cfg.minbe_range {
        let d = cfg.delta_us[0];
        let n = cfg.n[0];
        let rows: Vec<(u32, SuccessRun)> = range
            .clone()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&mb| -> CliResult<_> {
                let s = BackoffSchedule::from_exponents(mb, cfg.p, cfg.max_be, cfg.k)?;
                Ok((mb, solved_run(&s, n, cfg, d)?))
            })
            .collect::<CliResult<_>>()?;
        for (mb, r) in &rows {
            runs.push(run_row(mb.to_string(), r));
        }
    } else if cfg.has_delay() {
        let rows: Vec<(usize, SuccessRun)> = cfg
            .delta_us
            .par_iter()
            .map(|&d| Ok((cfg.m_for(d), solved_run(&cfg.schedule, 2, cfg, d)?)))
            .collect::<CliResult<_>>()?;
        for (m, r) in &rows {
            runs.push(run_row(m.to_string(), r));
        }
    } else {
        let n = cfg.n[0];
        let rates = analyze_zero_delay(&cfg.schedule, n, &cfg.timing_for(0))?.rates;
        let mut jain = Table::new(&["L", "J"]);
        let js: Vec<f64> = cfg
            .frame_lens
            .par_iter()
            .map(|&l| jain_index(&rates, n, l))
            .collect::<Result<_, _>>()?;
        for (l, j) in cfg.frame_lens.iter().zip(js) {
            jain.push(vec![l.to_string(), num(j)]);
        }
        tables.push(("_jain".to_string(), jain));
        runs.push(run_row(n.to_string(), &success_run_zero_delay(&rates, n)?));
    }
    tables.push(("_runs".to_string(), runs));
    Ok(tables)
}

fn sweep_slot(cfg: &RunConfig) -> CliResult<Vec<(String, Table)>> {
    let mut tables = Vec::new();
    for &d in &cfg.delta_us {
        let sweep = throughput_vs_m(d, cfg.m_max, &cfg.schedule, &cfg.timing)?;
        let mut t = Table::new(&["m", "sigma_us", "theta"]);
        for p in &sweep.points {
            t.push(vec![
                p.decision.to_string(),
                p.sigma_us.to_string(),
                theta(p.report.theta),
            ]);
        }
        let suffix = if cfg.delta_us.len() > 1 {
            format!("_delta{d}")
        } else {
            String::new()
        };
        tables.push((suffix, t));
    }
    Ok(tables)
}

fn sweep_minbe(cfg: &RunConfig) -> CliResult<Vec<(String, Table)>> {
    let d = cfg.delta_us[0];
    let range = cfg.minbe_range.clone().unwrap_or(0..=cfg.max_be);
    let sweep = optimize_minbe(
        cfg.eu1_max,
        range,
        cfg.p,
        cfg.max_be,
        cfg.k,
        cfg.m_for(d),
        &cfg.timing_for(d),
    )?;
    let mut t = Table::new(&["minBE", "EU1", "feasible", "theta"]);
    for p in &sweep.points {
        t.push(vec![
            p.decision.to_string(),
            opt(p.eu1),
            p.feasible.to_string(),
            theta(p.report.theta),
        ]);
    }
    Ok(vec![(String::new(), t)])
}
