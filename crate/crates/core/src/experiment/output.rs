//! Run directories: curve and event CSVs, per-seed artefacts and plots.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{aggregate_seeds, Event, RunMetrics, SeedAggregate};
use crate::error::{Error, Result};
use crate::model::history::write_history_csv;
use crate::util::fmt_f64;

const CURVE_HEADER: &str = "session,tutor,mean,std";
const EVENTS_HEADER: &str =
    "seed,tutor,session,step,timestamp,item,outcome,mean_recall,oracle_access";
const DIAGNOSTICS_HEADER: &str =
    "session,fit_loss_before,fit_loss_after,rollout_reward,policy_entropy";

/// `<out>/<tutor>-<config hash>`.
pub fn run_dir(out: &Path, cfg: &ExperimentConfig) -> PathBuf {
    out.join(format!("{}-{}", cfg.tutor, cfg.hash()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes everything for one tutor's seeds into `dir` and returns the
/// cross-seed curve.
pub fn emit_outputs(dir: &Path, cfg: &ExperimentConfig, runs: &[RunMetrics]) -> Result<SeedAggregate> {
    mkdir(dir)?;
    let tutor = cfg.tutor.name();
    write(&dir.join("config.toml"), &cfg.canonical())?;
    let curves: Vec<_> = runs.iter().map(RunMetrics::session_curve).collect();
    let agg = aggregate_seeds(&curves)?;
    write_curve_csv(&dir.join("curve.csv"), tutor, &agg)?;
    let all: Vec<Event> = runs.iter().flat_map(|r| r.events.iter().copied()).collect();
    write_events_csv(&dir.join("events.csv"), tutor, &all)?;
    for run in runs {
        let sd = dir.join(format!("seed-{}", run.seed));
        mkdir(&sd)?;
        write_events_csv(&sd.join("events.csv"), tutor, &run.events)?;
        write_history_csv(&sd.join("history.csv"), &run.history())?;
        write_diagnostics(&sd.join("diagnostics.csv"), run)?;
        if let Some(p) = &run.inner_params {
            p.write_csv(&sd.join("inner_params.csv"))?;
        }
        if let Some(p) = &run.policy {
            p.write_checkpoint(&sd.join("policy.csv"))?;
        }
    }
    plot_curves(&dir.join("plot.png"), &[(tutor.to_string(), agg.clone())])?;
    Ok(agg)
}

pub fn write_curve_csv(path: &Path, tutor: &str, agg: &SeedAggregate) -> Result<()> {
    let mut out = format!("{CURVE_HEADER}\n");
    for (s, (m, sd)) in agg.mean.iter().zip(&agg.std).enumerate() {
        out.push_str(&format!("{s},{tutor},{},{}\n", fmt_f64(*m), fmt_f64(*sd)));
    }
    write(path, &out)
}

/// A parsed `curve.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub tutor: String,
    pub agg: SeedAggregate,
}

pub fn read_curve_csv(path: &Path) -> Result<Curve> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    check_header(path, reader.headers().map_err(|e| Error::parse(path, e))?, CURVE_HEADER)?;
    let mut tutor = String::new();
    let mut agg = SeedAggregate {
        mean: Vec::new(),
        std: Vec::new(),
    };
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, e))?;
        let session: usize = field(path, &row, 0)?;
        if session != i {
            return Err(Error::parse(path, format!("row {i} has session {session}")));
        }
        if i == 0 {
            tutor = row[1].to_string();
        } else if row[1] != tutor {
            return Err(Error::parse(path, "curve mixes tutors"));
        }
        agg.mean.push(field(path, &row, 2)?);
        agg.std.push(field(path, &row, 3)?);
    }
    Ok(Curve { tutor, agg })
}

pub fn write_events_csv(path: &Path, tutor: &str, events: &[Event]) -> Result<()> {
    let mut out = format!("{EVENTS_HEADER}\n");
    for e in events {
        out.push_str(&format!(
            "{},{tutor},{},{},{},{},{},{},{}\n",
            e.seed,
            e.session,
            e.step,
            e.timestamp,
            e.item,
            u8::from(e.correct),
            fmt_f64(e.mean_recall),
            u8::from(e.oracle_access)
        ));
    }
    write(path, &out)
}

pub fn read_events_csv(path: &Path) -> Result<Vec<Event>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    check_header(path, reader.headers().map_err(|e| Error::parse(path, e))?, EVENTS_HEADER)?;
    reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| Error::parse(path, e))?;
            Ok(Event {
                seed: field(path, &row, 0)?,
                session: field(path, &row, 2)?,
                step: field(path, &row, 3)?,
                timestamp: field(path, &row, 4)?,
                item: field(path, &row, 5)?,
                correct: field::<u8>(path, &row, 6)? == 1,
                mean_recall: field(path, &row, 7)?,
                oracle_access: field::<u8>(path, &row, 8)? == 1,
            })
        })
        .collect()
}

fn write_diagnostics(path: &Path, run: &RunMetrics) -> Result<()> {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for d in &run.diagnostics {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            d.session,
            opt(d.fit_loss_before),
            opt(d.fit_loss_after),
            opt(d.rollout_reward),
            opt(d.policy_entropy)
        ));
    }
    write(path, &out)
}

fn check_header(path: &Path, headers: &csv::StringRecord, want: &str) -> Result<()> {
    if headers.iter().collect::<Vec<_>>().join(",") != want {
        return Err(Error::parse(path, format!("expected header `{want}`")));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(path: &Path, row: &csv::StringRecord, i: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = row
        .get(i)
        .ok_or_else(|| Error::parse(path, format!("missing column {i}")))?;
    raw.parse()
        .map_err(|e: T::Err| Error::parse(path, format!("column {i} `{raw}`: {e}")))
}

fn tutor_colour(tutor: &str) -> RGBColor {
    match tutor {
        "random" => RGBColor(31, 119, 180),
        "leitner" => RGBColor(44, 160, 44),
        "threshold" => RGBColor(255, 127, 14),
        "rl" => RGBColor(214, 39, 40),
        _ => RGBColor(100, 100, 100),
    }
}

/// Session curves with ±1 std bands on a [0, 1] recall axis. Gridlines mark
/// quarters; no text is drawn.
pub fn plot_curves(path: &Path, curves: &[(String, SeedAggregate)]) -> Result<()> {
    let err = |e: &dyn std::fmt::Display| Error::Plot {
        path: path.to_path_buf(),
        msg: e.to_string(),
    };
    let n = curves.iter().map(|(_, a)| a.len()).max().unwrap_or(0).max(2);
    let x_max = (n - 1) as f64;
    let root = BitMapBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(24)
        .build_cartesian_2d(0.0..x_max, 0.0..1.0)
        .map_err(|e| err(&e))?;
    let grey = RGBColor(210, 210, 210);
    for q in [0.25, 0.5, 0.75] {
        chart
            .draw_series(std::iter::once(PathElement::new(vec![(0.0, q), (x_max, q)], grey)))
            .map_err(|e| err(&e))?;
    }
    chart
        .draw_series([
            PathElement::new(vec![(0.0, 0.0), (x_max, 0.0)], BLACK),
            PathElement::new(vec![(0.0, 0.0), (0.0, 1.0)], BLACK),
        ])
        .map_err(|e| err(&e))?;
    for (tutor, agg) in curves {
        let colour = tutor_colour(tutor);
        let upper = agg.mean.iter().zip(&agg.std).enumerate().map(|(i, (m, s))| (i as f64, (m + s).min(1.0)));
        let lower = agg.mean.iter().zip(&agg.std).enumerate().map(|(i, (m, s))| (i as f64, (m - s).max(0.0)));
        let mut band: Vec<_> = upper.collect();
        band.extend(lower.collect::<Vec<_>>().into_iter().rev());
        chart
            .draw_series(std::iter::once(Polygon::new(band, colour.mix(0.2).filled())))
            .map_err(|e| err(&e))?;
        chart
            .draw_series(LineSeries::new(
                agg.mean.iter().enumerate().map(|(i, &m)| (i as f64, m)),
                colour.stroke_width(2),
            ))
            .map_err(|e| err(&e))?;
    }
    root.present().map_err(|e| err(&e))?;
    Ok(())
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub tutor: String,
    pub run_dir: PathBuf,
    pub first_mean: f64,
    pub final_mean: f64,
    pub final_std: f64,
}

/// Overlays the curves of several run directories into `out/compare.png` and
/// tabulates first- and final-session recall in `out/compare.csv`.
pub fn compare_runs(run_dirs: &[PathBuf], out: &Path) -> Result<Vec<ComparisonRow>> {
    if run_dirs.len() < 2 {
        return Err(Error::Config("compare needs at least two run directories".into()));
    }
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for dir in run_dirs {
        let curve = read_curve_csv(&dir.join("curve.csv"))?;
        let (Some(&first), Some(&last), Some(&last_std)) =
            (curve.agg.mean.first(), curve.agg.mean.last(), curve.agg.std.last())
        else {
            return Err(Error::parse(dir.join("curve.csv"), "curve is empty"));
        };
        rows.push(ComparisonRow {
            tutor: curve.tutor.clone(),
            run_dir: dir.clone(),
            first_mean: first,
            final_mean: last,
            final_std: last_std,
        });
        curves.push((curve.tutor, curve.agg));
    }
    mkdir(out)?;
    let mut text = String::from("tutor,run_dir,first_session_mean,final_session_mean,final_session_std\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.tutor,
            r.run_dir.display(),
            fmt_f64(r.first_mean),
            fmt_f64(r.final_mean),
            fmt_f64(r.final_std)
        ));
    }
    write(&out.join("compare.csv"), &text)?;
    plot_curves(&out.join("compare.png"), &curves)?;
    Ok(rows)
}
