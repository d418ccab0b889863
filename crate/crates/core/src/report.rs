//! CSV output, the bounds report and the plotting script.
//!
//! Trajectory CSV columns, in order:
//!
//! | column              | content                                                |
//! |---------------------|--------------------------------------------------------|
//! | `k`                 | step index                                             |
//! | `x_0 .. x_{n-1}`    | primal iterate                                         |
//! | `lambda_0 ..`       | dual iterate                                           |
//! | `h`                 | `h(k)` at the iterate, model outputs                   |
//! | `h_star`            | `h(k)` at the reference point                          |
//! | `regret_avg`        | average dynamic regret over records `0..=k`            |
//! | `violation_avg_max` | largest component of the clipped average violation     |
//! | `tracking_err`      | `||z(k) - z*(k)||`                                     |
//! | `sigma_k`           | `||x*(k+1) - x*(k)||`                                  |
//! | `e_y_realized`      | running maximum of `||y_used - y_model||`              |
//!
//! `metrics.csv` and `bounds.csv` use the same row convention.
//! Cells without a value (no reference trajectory, last `sigma_k`) are empty.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bounds::ProblemConstants;
use crate::error::Result;
use crate::experiment::RunReport;
use crate::oracle::OracleTrajectory;

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// Header of the trajectory CSV for `n` primal and `m` dual coordinates.
pub fn trajectory_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend((0..n).map(|i| format!("x_{i}")));
    h.extend((0..m).map(|j| format!("lambda_{j}")));
    for c in [
        "h",
        "h_star",
        "regret_avg",
        "violation_avg_max",
        "tracking_err",
        "sigma_k",
        "e_y_realized",
    ] {
        h.push(c.to_string());
    }
    h
}

pub fn write_trajectory_csv<W: Write>(out: W, report: &RunReport) -> Result<()> {
    let traj = &report.trajectory;
    let Some(first) = traj.records.first() else {
        return Ok(());
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(first.x.len(), first.lambda.len()))?;
    let oracle = report.oracle.as_ref();
    let m = &report.metrics;
    let mut e_y: f64 = 0.0;
    for (i, r) in traj.records.iter().enumerate() {
        e_y = e_y.max(r.meas_err);
        let covered = oracle.filter(|o| o.covers(r.k));
        let j = covered.map(|o| r.k - o.start);
        let mut row = vec![r.k.to_string()];
        row.extend(r.x.iter().map(|v| num(*v)));
        row.extend(r.lambda.iter().map(|v| num(*v)));
        row.push(num(r.h));
        row.push(cell(j.and_then(|j| m.h_star.get(j).copied())));
        row.push(cell(m.regret.get(i).copied()));
        row.push(num(m.violation_max(i + 1)));
        row.push(cell(j.and_then(|j| m.tracking.get(j).copied())));
        row.push(cell(
            j.and_then(|j| covered.and_then(|o| o.sigma.get(j).copied())),
        ));
        row.push(num(e_y));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-step metrics: `k, regret_avg, violation_avg_max, violation_raw_max, tracking_err, path_sum`.
pub fn write_metrics_csv<W: Write>(out: W, report: &RunReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "k",
        "regret_avg",
        "violation_avg_max",
        "violation_raw_max",
        "tracking_err",
        "path_sum",
    ])?;
    let m = &report.metrics;
    for i in 0..report.trajectory.len() {
        let raw = m.violation_raw.get(i).map(|v| v.max());
        w.write_record([
            i.to_string(),
            cell(m.regret.get(i).copied()),
            num(m.violation_max(i + 1)),
            cell(raw),
            cell(m.tracking.get(i).copied()),
            cell(m.sigma_cum.get(i).copied()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Empirical series next to their bounds. Row `k` holds averages over
/// records `0..=k`, as in the trajectory file.
pub fn write_bounds_csv<W: Write>(out: W, report: &RunReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "k",
        "regret_avg",
        "regret_bound",
        "violation_avg_max",
        "violation_bound",
        "tracking_err",
        "tracking_bound",
        "asymptotic_bound",
    ])?;
    let m = &report.metrics;
    let b = report.bounds.as_ref();
    let asym = b.and_then(|b| b.asymptotic);
    for i in 0..report.trajectory.len() {
        w.write_record([
            i.to_string(),
            cell(m.regret.get(i).copied()),
            cell(b.and_then(|b| b.regret.get(i).copied())),
            num(m.violation_max(i + 1)),
            cell(b.and_then(|b| b.violation.get(i).copied())),
            cell(m.tracking.get(i).copied()),
            cell(report.tracking_bound.get(i).copied()),
            cell(asym),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_oracle_csv<W: Write>(out: W, oracle: &OracleTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = oracle.x_star.first().map_or(0, |x| x.len());
    let m = oracle.lambda_star.first().map_or(0, |l| l.len());
    let mut header = vec!["k".to_string()];
    header.extend((0..n).map(|i| format!("x_star_{i}")));
    header.extend((0..m).map(|j| format!("lambda_star_{j}")));
    header.push("sigma".into());
    header.push("sigma_bar".into());
    w.write_record(&header)?;
    for j in 0..oracle.len() {
        let mut row = vec![(oracle.start + j).to_string()];
        row.extend(oracle.x_star[j].iter().map(|v| num(*v)));
        row.extend(oracle.lambda_star[j].iter().map(|v| num(*v)));
        row.push(cell(oracle.sigma.get(j).copied()));
        row.push(cell(oracle.sigma_bar.get(j).copied()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `key = value` listing of the constants and bound terms.
pub fn bounds_text(report: &RunReport) -> String {
    let mut s = String::new();
    let cfg = &report.trajectory.config;
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "alpha = {}", cfg.alpha);
    let _ = writeln!(s, "kappa = {}", cfg.kappa);
    let _ = writeln!(s, "p = {}", cfg.p);
    let _ = writeln!(s, "d = {}", cfg.d);
    let _ = writeln!(s, "steps = {}", report.trajectory.len());
    let _ = writeln!(s, "realized_e_y = {:e}", report.trajectory.realized_e_y);
    if let Some(c) = &report.constants {
        let _ = writeln!(s, "\n[constants]");
        write_constants(&mut s, c);
    }
    if let Some(b) = &report.bounds {
        let _ = writeln!(s, "\n[bounds]");
        let t = b.terms;
        for (k, v) in [
            ("K1", t.k1),
            ("K2", t.k2),
            ("K3", t.k3),
            ("K4", t.k4),
            ("K5", t.k5),
            ("K6", t.k6),
            ("regret_limit", b.regret_limit),
            ("contraction", b.contraction.value),
            ("e_p", b.e_p),
            ("e_d", b.e_d),
        ] {
            let _ = writeln!(s, "{k} = {v:e}");
        }
        let _ = writeln!(s, "contracting = {}", b.contraction.contracting);
        match b.asymptotic {
            Some(a) => {
                let _ = writeln!(s, "asymptotic_tracking = {a:e}");
            }
            None => {
                let _ = writeln!(s, "asymptotic_tracking = \"n/a (not contracting)\"");
            }
        }
        if let (Some(r), Some(rb)) = (report.metrics.regret.last(), b.regret.last()) {
            let _ = writeln!(s, "final_regret = {r:e}\nfinal_regret_bound = {rb:e}");
        }
    }
    s
}

fn write_constants(s: &mut String, c: &ProblemConstants) {
    for (k, v) in [
        ("B", c.b),
        ("D", c.d_diam),
        ("F", c.f),
        ("g", c.g_bound),
        ("G", c.g_big),
        ("M_g", c.m_g),
        ("L", c.l),
        ("L0", c.l0),
        ("L_G", c.l_gg),
        ("L_g", c.l_g),
        ("M_lambda", c.m_lambda),
        ("xi_lambda", c.xi_lambda),
        ("L_x", c.l_x),
        ("F_x", c.f_x),
        ("eta_phi", c.eta_phi),
        ("L_phi", c.l_phi),
        ("norm_C", c.c_norm),
    ] {
        let _ = writeln!(s, "{k} = {v:e}");
    }
}

/// Matplotlib script that plots the tracking error, regret and violation
/// series from the CSV files in its own directory.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot tracking error, average regret and average constraint violation."""
import csv
import os
import sys

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def column(path, name):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    ks, vs = [], []
    for r in rows:
        if r.get(name):
            ks.append(int(r["k"]))
            vs.append(float(r[name]))
    return ks, vs


def main():
    traj = os.path.join(HERE, "trajectory.csv")
    bounds = os.path.join(HERE, "bounds.csv")
    fig, axes = plt.subplots(3, 1, figsize=(7, 9), sharex=True)
    panels = [
        ("tracking_err", "tracking_bound", "||z - z*||"),
        ("regret_avg", "regret_bound", "average regret"),
        ("violation_avg_max", "violation_bound", "average violation"),
    ]
    for ax, (emp, bnd, label) in zip(axes, panels):
        ax.plot(*column(traj, emp), label="measured")
        if os.path.exists(bounds):
            ks, vs = column(bounds, bnd)
            if vs:
                ax.plot(ks, vs, "--", label="bound")
        ax.set_ylabel(label)
        ax.set_yscale("log")
        ax.legend()
    axes[-1].set_xlabel("k")
    fig.tight_layout()
    out = os.path.join(HERE, "figures.png")
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    sys.exit(main())
"#;

/// Write `trajectory.csv`, `metrics.csv`, `plot.py` and, when bounds were
/// computed, `bounds.csv` and `bounds.txt` into `dir`.
pub fn write_run_outputs(dir: &Path, report: &RunReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, f: &dyn Fn(std::fs::File) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        f(std::fs::File::create(&path)?)?;
        written.push(path);
        Ok(())
    };
    put("trajectory.csv", &|f| write_trajectory_csv(f, report))?;
    put("metrics.csv", &|f| write_metrics_csv(f, report))?;
    if report.constants.is_some() {
        put("bounds.csv", &|f| write_bounds_csv(f, report))?;
        put("bounds.txt", &|mut f| {
            Ok(f.write_all(bounds_text(report).as_bytes())?)
        })?;
    }
    if let Some(o) = &report.oracle {
        put("oracle.csv", &|f| write_oracle_csv(f, o))?;
    }
    put("plot.py", &|mut f| Ok(f.write_all(PLOT_SCRIPT.as_bytes())?))?;
    Ok(written)
}
