//! Subcommands of the `swapeng` binary.
//!
//! Each command takes a validated [`RunConfig`], writes its artifacts under
//! `out_dir`, and returns the text meant for stdout. Output bytes depend only
//! on the configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eventlog::{format_events, read_log};
use crate::gates::optimize_gate;
use crate::reconstruct::{reconstruct_from_events, Flag};
use crate::stats::{power_scan, EnsembleStats};
use crate::thermo::{classify_regime, efficiencies, mean_energetics, omega_star};
use crate::trajectory::Simulator;

/// Minimum count on both sides for a log-ratio point to enter the slope fit.
pub const LOG_RATIO_MIN_COUNT: u64 = 10;

/// CSV float format: 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaScanRow {
    pub beta2: f64,
    pub eta_carnot: f64,
    pub eta_star: f64,
    pub eta_ca: f64,
    pub omega_star: f64,
    pub w_max: f64,
}

/// Closed-form report. `eta_mp_scan` lists `beta2` values at which the
/// efficiency at maximum power is tabulated (with `beta1` from the config).
pub fn cmd_analytic(rc: &RunConfig, eta_mp_scan: &[f64]) -> Result<String> {
    rc.validate()?;
    let cfg = rc.engine()?;
    let means = mean_energetics(&cfg);
    let regime = classify_regime(&cfg);
    let eff = efficiencies(&cfg);
    let star = omega_star(cfg.beta1, cfg.beta2);
    let mut scan = Vec::new();
    for &beta2 in eta_mp_scan {
        let s = omega_star(cfg.beta1, beta2)?;
        scan.push(EtaScanRow {
            beta2,
            eta_carnot: 1.0 - cfg.beta1 / beta2,
            eta_star: s.eta_star,
            eta_ca: 1.0 - (cfg.beta1 / beta2).sqrt(),
            omega_star: s.omega_ratio,
            w_max: s.w_max,
        });
    }
    if !scan.is_empty() {
        ensure_dir(&rc.out_dir)?;
        let mut csv = String::from("beta2,eta_carnot,eta_star,eta_ca,omega_star,w_max_per_omega1\n");
        for r in &scan {
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                fmt_f(r.beta2),
                fmt_f(r.eta_carnot),
                fmt_f(r.eta_star),
                fmt_f(r.eta_ca),
                fmt_f(r.omega_star),
                fmt_f(r.w_max)
            )
            .unwrap();
        }
        write_file(&rc.out_dir.join("eta_mp_scan.csv"), &csv)?;
    }

    if rc.json {
        return Ok(to_json(&json!({
            "config": rc,
            "regime": regime.to_string(),
            "mean_energetics": means,
            "efficiencies": eff,
            "omega_star": star.as_ref().ok(),
            "eta_mp_scan": scan,
        })));
    }
    let mut out = String::new();
    writeln!(out, "regime          {regime}").unwrap();
    writeln!(out, "<dE1> per pulse {}", means.de1).unwrap();
    writeln!(out, "<dE2> per pulse {}", means.de2).unwrap();
    writeln!(out, "<W> per pulse   {}", means.w).unwrap();
    writeln!(out, "eta             {}", eff.eta).unwrap();
    writeln!(out, "eta_carnot      {}", eff.eta_carnot).unwrap();
    match eff.cop {
        Some(c) => writeln!(out, "cop             {c}").unwrap(),
        None => writeln!(out, "cop             undefined (omega2 >= omega1)").unwrap(),
    }
    if let Some(c) = eff.cop_carnot {
        writeln!(out, "cop_carnot      {c}").unwrap();
    }
    writeln!(out, "eta_ca          {}", eff.eta_ca).unwrap();
    match star {
        Ok(s) => {
            writeln!(out, "omega_star      {}", s.omega_ratio).unwrap();
            writeln!(out, "eta_star        {}", s.eta_star).unwrap();
            writeln!(out, "w_max           {} (units of omega1)", s.w_max).unwrap();
        }
        Err(e) => writeln!(out, "omega_star      skipped: {e}").unwrap(),
    }
    if !scan.is_empty() {
        writeln!(out, "\nbeta2 eta_carnot eta_star eta_ca").unwrap();
        for r in &scan {
            writeln!(out, "{} {:.6} {:.6} {:.6}", r.beta2, r.eta_carnot, r.eta_star, r.eta_ca).unwrap();
        }
    }
    Ok(out)
}

fn simulator(rc: &RunConfig) -> Result<Simulator> {
    rc.validate()?;
    Simulator::new(rc.engine()?, rc.protocol()?, rc.gate.clone())
}

/// Runs the ensemble and writes histograms, the summary and optional event logs.
pub fn cmd_simulate(rc: &RunConfig) -> Result<String> {
    let sim = simulator(rc)?;
    let cfg = *sim.config();
    let stats = EnsembleStats::simulate(&sim, rc.samples, rc.seed)?;
    let dir = &rc.out_dir;
    ensure_dir(dir)?;
    let m = stats.sample_size() as f64;

    let mut csv = String::from("m1,m2,de1,de2,count,probability\n");
    for (&(m1, m2), &c) in stats.hist_de() {
        writeln!(
            csv,
            "{m1},{m2},{},{},{c},{}",
            fmt_f(m1 as f64 * cfg.omega1),
            fmt_f(m2 as f64 * cfg.omega2),
            fmt_f(c as f64 / m)
        )
        .unwrap();
    }
    write_file(&dir.join("de_hist.csv"), &csv)?;

    let ft = if stats.is_swap_family() {
        let mut csv = String::from("n_w,w,count,probability\n");
        for (&n, &c) in stats.hist_nw() {
            writeln!(csv, "{n},{},{c},{}", fmt_f(n as f64 * (cfg.omega1 - cfg.omega2)), fmt_f(c as f64 / m)).unwrap();
        }
        write_file(&dir.join("nw_hist.csv"), &csv)?;

        let mut csv = String::from("q1_quanta,n_w,q1,w,count,probability\n");
        for (&(k1, n), &c) in stats.hist_joint() {
            writeln!(
                csv,
                "{k1},{n},{},{},{c},{}",
                fmt_f(k1 as f64 * cfg.omega1),
                fmt_f(n as f64 * (cfg.omega1 - cfg.omega2)),
                fmt_f(c as f64 / m)
            )
            .unwrap();
        }
        write_file(&dir.join("joint_q1_w.csv"), &csv)?;

        let eta = stats.efficiency_distribution()?;
        let mut csv = String::from("eta_lo,eta_hi,count,probability\n");
        for (&k, &c) in &eta.bins {
            let lo = k as f64 * eta.bin_width;
            writeln!(csv, "{},{},{c},{}", fmt_f(lo), fmt_f(lo + eta.bin_width), fmt_f(c as f64 / m)).unwrap();
        }
        writeln!(csv, "inf,inf,{},{}", eta.infinite, fmt_f(eta.infinite as f64 / m)).unwrap();
        write_file(&dir.join("eta_hist.csv"), &csv)?;
        let mut csv = String::from("n_w_over_q1_num,n_w_over_q1_den,eta,count,probability\n");
        for (r, &c) in &eta.exact {
            writeln!(csv, "{},{},{},{c},{}", r.num, r.den, fmt_f(r.value() * eta.eta_machine), fmt_f(c as f64 / m)).unwrap();
        }
        write_file(&dir.join("eta_exact.csv"), &csv)?;

        let ft = stats.ft_log_ratio(LOG_RATIO_MIN_COUNT);
        if let Ok(ft) = &ft {
            let mut csv = String::from("n_w,log_ratio,se,count_pos,count_neg,theory\n");
            for p in &ft.points {
                writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    p.n_w,
                    fmt_f(p.log_ratio),
                    fmt_f(p.se),
                    p.count_pos,
                    p.count_neg,
                    fmt_f(ft.expected_slope * p.n_w as f64)
                )
                .unwrap();
            }
            write_file(&dir.join("log_ratio.csv"), &csv)?;
        }
        ft.ok()
    } else {
        None
    };

    if rc.emit_logs > 0 {
        let logs = dir.join("logs");
        ensure_dir(&logs)?;
        let recorder = sim.clone().recording(true);
        let mut truth = String::from("index,q1,q2,du1,du2,de1,de2,w,n_w\n");
        for k in 0..rc.emit_logs.min(rc.samples) {
            let rec = recorder.run_indexed(rc.seed, k);
            write_file(&logs.join(log_name(k)), &format_events(&rec.events))?;
            writeln!(
                truth,
                "{k},{},{},{},{},{},{},{},{}",
                fmt_f(rec.q1),
                fmt_f(rec.q2),
                fmt_f(rec.du1),
                fmt_f(rec.du2),
                fmt_f(rec.de1),
                fmt_f(rec.de2),
                fmt_f(rec.w),
                rec.n_w.map(|n| n.to_string()).unwrap_or_default()
            )
            .unwrap();
        }
        write_file(&logs.join("ground_truth.csv"), &truth)?;
    }

    let means = stats.means()?;
    let ift = stats.integral_ft().ok();
    let summary = json!({
        "config": rc,
        "ensemble_tag": format!("{:016x}", sim.tag()),
        "tau2": sim.protocol().tau2(),
        "total_time": sim.protocol().total_time(),
        "sample_size": stats.sample_size(),
        "means": means,
        "closed_form_per_pulse": mean_energetics(&cfg),
        "efficiency": stats.efficiency(),
        "integral_ft": ift,
        "ft_slope": ft.as_ref().map(|f| json!({"slope": f.slope, "se": f.slope_se, "expected": f.expected_slope})),
        "rigidity_violations": stats.rigidity_violations(),
        "unit_gap_violations": stats.unit_gap_violations(),
    });
    let summary_text = to_json(&summary);
    write_file(&dir.join("summary.json"), &summary_text)?;
    if rc.json {
        return Ok(summary_text);
    }
    let mut out = String::new();
    writeln!(out, "trajectories    {}", stats.sample_size()).unwrap();
    writeln!(out, "tau2            {}", sim.protocol().tau2()).unwrap();
    writeln!(out, "<dE1>           {} +- {}", means.de1.mean, means.de1.se).unwrap();
    writeln!(out, "<dE2>           {} +- {}", means.de2.mean, means.de2.se).unwrap();
    writeln!(out, "<W>             {} +- {}", means.w.mean, means.w.se).unwrap();
    writeln!(out, "<Q1>            {} +- {}", means.q1.mean, means.q1.se).unwrap();
    writeln!(out, "<Q2>            {} +- {}", means.q2.mean, means.q2.se).unwrap();
    if let Some(e) = stats.efficiency() {
        writeln!(out, "efficiency      {e}").unwrap();
    }
    if let Some(i) = ift {
        writeln!(out, "integral FT     {} +- {}", i.mean, i.se).unwrap();
    }
    if let Some(f) = &ft {
        writeln!(out, "log-ratio slope {} +- {} (expected {})", f.slope, f.slope_se, f.expected_slope).unwrap();
    }
    writeln!(out, "outputs in      {}", dir.display()).unwrap();
    Ok(out)
}

/// File name of the event log of trajectory `k`.
pub fn log_name(k: u64) -> String {
    format!("traj_{k:06}.log")
}

/// Fixed operation-time scan over `rc.n_list`.
pub fn cmd_power_scan(rc: &RunConfig) -> Result<String> {
    rc.validate()?;
    let cfg = rc.engine()?;
    let rows = power_scan(&cfg, &rc.gate, rc.t_op_relax, &rc.n_list, rc.samples, rc.seed)?;
    let mut csv = String::from("n_pulses,tau2,work_output,work_output_se,power,power_se,efficiency,non_decreasing\n");
    let mut prev: Option<(f64, f64)> = None;
    for r in &rows {
        let ok = prev.is_none_or(|(w, se)| r.work_output.mean >= w - 3.0 * (se * se + r.work_output.se.powi(2)).sqrt());
        prev = Some((r.work_output.mean, r.work_output.se));
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.n_pulses,
            fmt_f(r.tau2),
            fmt_f(r.work_output.mean),
            fmt_f(r.work_output.se),
            fmt_f(r.power.mean),
            fmt_f(r.power.se),
            fmt_opt(r.efficiency),
            if ok { "yes" } else { "no" }
        )
        .unwrap();
    }
    ensure_dir(&rc.out_dir)?;
    write_file(&rc.out_dir.join("power_scan.csv"), &csv)?;
    if rc.json {
        return Ok(to_json(&json!({ "config": rc, "rows": rows })));
    }
    Ok(csv)
}

/// Multi-start search for the work-maximizing gate.
pub fn cmd_opt_gate(rc: &RunConfig) -> Result<String> {
    rc.validate()?;
    let cfg = rc.engine()?;
    let opt = optimize_gate(&cfg, rc.restarts, rc.seed)?;
    let report = to_json(&json!({ "config": rc, "optimum": opt }));
    ensure_dir(&rc.out_dir)?;
    write_file(&rc.out_dir.join("opt_gate.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzedLog {
    pub file: PathBuf,
    pub q1: f64,
    pub q2: f64,
    pub de1: f64,
    pub de2: f64,
    pub w: f64,
    pub n_w: Option<i64>,
    pub injections: usize,
    pub flags: usize,
}

/// Reconstructs energetics from event logs, treating them as complex-SWAP
/// runs when the configured gate is one.
pub fn analyze_logs(paths: &[PathBuf], rc: &RunConfig) -> Result<Vec<AnalyzedLog>> {
    let cfg = rc.engine()?;
    let swap = rc.gate.is_swap_family();
    paths
        .iter()
        .map(|p| {
            let entries = read_log(p)?;
            let r = reconstruct_from_events(&entries, swap);
            for f in &r.flags {
                match f {
                    Flag::MissingPulse { bath, time } => log::warn!(
                        "{}: consecutive same-type jumps in bath {} at t = {time} without a pulse marker",
                        p.display(),
                        bath.label()
                    ),
                    Flag::NotSwapConsistent => {
                        log::warn!("{}: heat counts are inconsistent with a complex-SWAP gate", p.display())
                    }
                }
            }
            let [q1, q2] = r.q(&cfg);
            let [de1, de2] = r.de(&cfg);
            Ok(AnalyzedLog {
                file: p.clone(),
                q1,
                q2,
                de1,
                de2,
                w: r.w(&cfg),
                n_w: r.n_w,
                injections: r.injections.len(),
                flags: r.flags.len(),
            })
        })
        .collect()
}

pub fn cmd_analyze(paths: &[PathBuf], rc: &RunConfig) -> Result<String> {
    rc.engine()?;
    let rows = analyze_logs(paths, rc)?;
    let mut csv = String::from("file,q1,q2,de1,de2,w,n_w,injections,flags\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.file.display(),
            fmt_f(r.q1),
            fmt_f(r.q2),
            fmt_f(r.de1),
            fmt_f(r.de2),
            fmt_f(r.w),
            r.n_w.map(|n| n.to_string()).unwrap_or_default(),
            r.injections,
            r.flags
        )
        .unwrap();
    }
    ensure_dir(&rc.out_dir)?;
    write_file(&rc.out_dir.join("reconstruction.csv"), &csv)?;
    if rc.json {
        let total_w: f64 = rows.iter().map(|r| r.w).sum();
        return Ok(to_json(&json!({ "logs": rows, "total_w": total_w })));
    }
    Ok(csv)
}
