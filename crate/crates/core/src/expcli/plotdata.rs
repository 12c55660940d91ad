use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use super::commands::{ExitStatus, Outcome};
use super::config::{ExperimentConfig, PlotKind};
use super::output::OutputSet;
use crate::error::{Error, Result};
use crate::functionals::DiagnosticsRecord;

impl PlotKind {
    /// Header row of the input file this kind reshapes.
    pub fn input_header(self) -> &'static str {
        match self {
            PlotKind::Diagnostics => DiagnosticsRecord::CSV_HEADER,
            PlotKind::Profile => "r,Q",
            PlotKind::Spectrum => "lambda,re,im,density",
        }
    }
}

/// Reshape a wide CSV written by this crate into `series,<abscissa>,value` rows:
/// one block per value column, in column order, each in file order. Values are
/// copied verbatim.
pub fn long_format(kind: PlotKind, text: &str) -> Result<String> {
    let bad = |m: String| Error::Config(format!("plotdata ({}): {m}", kind.name()));
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
    if header.trim() != kind.input_header() {
        return Err(bad(format!("expected header `{}`", kind.input_header())));
    }
    let names: Vec<&str> = header.trim().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.trim().split(',').collect()).collect();
    if let Some(k) = rows.iter().position(|r| r.len() != names.len()) {
        return Err(bad(format!("data row {} has the wrong number of fields", k + 1)));
    }
    let mut s = format!("series,{},value\n", names[0]);
    for (col, name) in names.iter().enumerate().skip(1) {
        let series = if kind == PlotKind::Profile { "Q" } else { name };
        for r in &rows {
            let _ = writeln!(s, "{series},{},{}", r[0], r[col]);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotDataReport {
    pub kind: String,
    pub input: PathBuf,
    pub series: Vec<String>,
    pub rows: usize,
}

pub fn cmd_plotdata(cfg: &ExperimentConfig) -> Result<Outcome<PlotDataReport>> {
    let kind = cfg.kind.ok_or_else(|| Error::Config("plotdata needs a kind (diagnostics | profile | spectrum)".into()))?;
    let input = cfg.input.clone().ok_or_else(|| Error::Config("plotdata needs an input file".into()))?;
    let text = std::fs::read_to_string(&input)
        .map_err(|e| Error::Config(format!("cannot read plotdata input {}: {e}", input.display())))?;
    let long = long_format(kind, &text)?;
    let mut series: Vec<String> = Vec::new();
    for line in long.lines().skip(1) {
        let name = line.split(',').next().unwrap_or("");
        if series.last().map(String::as_str) != Some(name) {
            series.push(name.to_string());
        }
    }
    let rows = long.lines().count() - 1;
    let mut out = OutputSet::new(cfg);
    out.csv(&format!("plotdata_{}.csv", kind.name()), &long)?;
    let report = PlotDataReport { kind: kind.name().to_string(), input, series, rows };
    Ok(Outcome { report, status: ExitStatus::Passed, files: out.into_files() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_and_spectrum_reshape() {
        let prof = "# config_digest=x seed=0\nr,Q\n5e-3,4.8\n1.5e-2,4.7\n";
        assert_eq!(long_format(PlotKind::Profile, prof).unwrap(), "series,r,value\nQ,5e-3,4.8\nQ,1.5e-2,4.7\n");
        let spec = "lambda,re,im,density\n1,2,3,4\n";
        assert_eq!(
            long_format(PlotKind::Spectrum, spec).unwrap(),
            "series,lambda,value\nre,1,2\nim,1,3\ndensity,1,4\n"
        );
        assert!(long_format(PlotKind::Diagnostics, prof).is_err());
        assert!(long_format(PlotKind::Profile, "r,Q\n1,2,3\n").is_err());
    }
}
