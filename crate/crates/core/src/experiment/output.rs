use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{ExperimentRecord, RunError, Scenario, CODE_VERSION, SCHEMA_VERSION};

pub const COLUMNS: [&str; 25] = [
    "schema_version",
    "scenario",
    "model",
    "model_params",
    "channel",
    "channel_params",
    "probe",
    "l",
    "l_sub",
    "theta",
    "p",
    "beta",
    "observable",
    "value",
    "variance",
    "delta_theta",
    "qfi",
    "reference",
    "fit_exponent",
    "fit_prefactor",
    "fit_r2",
    "seed",
    "config_hash",
    "code_version",
    "row",
];

/// 17 significant digits; the exponent form is exact and locale-free.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn fields(r: &ExperimentRecord, row: usize) -> Vec<String> {
    vec![
        SCHEMA_VERSION.to_string(),
        r.scenario.name().to_string(),
        r.model.clone(),
        r.model_params.clone(),
        r.channel.clone(),
        r.channel_params.clone(),
        r.probe.clone(),
        r.l.to_string(),
        r.l_sub.map(|x| x.to_string()).unwrap_or_default(),
        opt(r.theta),
        opt(r.p),
        opt(r.beta),
        r.observable.clone(),
        num(r.value),
        opt(r.variance),
        opt(r.delta_theta),
        opt(r.qfi),
        opt(r.reference),
        opt(r.fit_exponent),
        opt(r.fit_prefactor),
        opt(r.fit_r2),
        r.seed.to_string(),
        r.config_hash.clone(),
        CODE_VERSION.to_string(),
        row.to_string(),
    ]
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Output(format!("{}: {e}", path.display()))
}

/// Write through a temporary file in the target directory, then rename into place.
fn atomic_write(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), RunError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        f(&mut w).map_err(|e| io_err(path, e))?;
        w.flush().map_err(|e| io_err(path, e))?;
    }
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<(), RunError> {
    atomic_write(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(COLUMNS).map_err(csv_io)?;
        for (i, r) in records.iter().enumerate() {
            out.write_record(fields(r, i)).map_err(csv_io)?;
        }
        out.flush()
    })
}

/// One point of a long-format plot table.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotPoint {
    pub figure: String,
    pub series: String,
    pub x: f64,
    pub y: f64,
}

/// Group records into figures; fit rows and scalar summaries are left out.
pub fn plot_points(records: &[ExperimentRecord]) -> Vec<PlotPoint> {
    let mut out = Vec::new();
    for r in records {
        if r.fit_exponent.is_some() {
            continue;
        }
        let point = match r.scenario {
            Scenario::QfiScaling | Scenario::Hadamard => {
                let fig = format!("{}_vs_l", r.observable);
                Some((fig, r.probe.clone(), r.l as f64, r.value))
            }
            Scenario::ChannelSweep => {
                let series = format!("{} p={}", r.probe, r.p.map(|p| p.to_string()).unwrap_or_default());
                Some((format!("{}_vs_l", r.observable), series, r.l as f64, r.value))
            }
            Scenario::ThetaCurves => {
                let fig = format!("symmetry_curves_l{}", r.l);
                r.theta.map(|t| (fig, r.observable.clone(), t, r.value))
            }
            Scenario::Deformed => r.beta.filter(|b| b.is_finite()).map(|b| {
                (format!("{}_vs_beta", r.observable), format!("rungs={}", r.l), b, r.value)
            }),
            Scenario::Subsystem => match (r.l_sub, r.theta, r.delta_theta) {
                (Some(ls), Some(t), Some(d)) if r.observable.ends_with("parity") => {
                    let series = format!("l_sub={ls}");
                    out.push(PlotPoint { figure: format!("signal_l{}", r.l), series: series.clone(), x: t, y: r.value });
                    Some((format!("delta_theta_l{}", r.l), series, t, d))
                }
                _ => None,
            },
        };
        if let Some((figure, series, x, y)) = point {
            out.push(PlotPoint { figure, series, x, y });
        }
    }
    out
}

pub fn emit_plotdata(records: &[ExperimentRecord], path: &Path) -> Result<(), RunError> {
    let points = plot_points(records);
    atomic_write(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["figure", "series", "x", "y"]).map_err(csv_io)?;
        for p in &points {
            out.write_record([p.figure.as_str(), p.series.as_str(), &num(p.x), &num(p.y)]).map_err(csv_io)?;
        }
        out.flush()
    })
}

fn gnuplot_script(points: &[PlotPoint], data_file: &str) -> String {
    let mut figures: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for p in points {
        let s = figures.entry(&p.figure).or_default();
        if !s.contains(&p.series.as_str()) {
            s.push(&p.series);
        }
    }
    let mut s = String::from("set terminal pngcairo size 900,600\nset datafile separator ','\nset key outside\n");
    for (fig, series) in figures {
        s.push_str(&format!("\nset title '{fig}'\nset output '{fig}.png'\nplot \\\n"));
        let lines: Vec<String> = series
            .iter()
            .map(|name| {
                format!(
                    "  \"< awk -F, '$1==\\\"{fig}\\\" && $2==\\\"{name}\\\"' {data_file}\" using 3:4 with linespoints title '{name}'"
                )
            })
            .collect();
        s.push_str(&lines.join(", \\\n"));
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub plotdata: PathBuf,
    pub script: PathBuf,
}

/// `<scenario>.csv`, `<scenario>_plot.csv` and `<scenario>_plot.gp` under `dir`.
pub fn write_outputs(records: &[ExperimentRecord], scenario: Scenario, dir: &Path) -> Result<OutputFiles, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let files = OutputFiles {
        csv: dir.join(format!("{scenario}.csv")),
        plotdata: dir.join(format!("{scenario}_plot.csv")),
        script: dir.join(format!("{scenario}_plot.gp")),
    };
    emit_csv(records, &files.csv)?;
    emit_plotdata(records, &files.plotdata)?;
    let script = gnuplot_script(&plot_points(records), &format!("{scenario}_plot.csv"));
    atomic_write(&files.script, |w| w.write_all(script.as_bytes()))?;
    Ok(files)
}
