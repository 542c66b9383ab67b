//! Plain-text result files: UTF-8, LF endings, header row, floats in
//! round-trip exponent notation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::FidelityTrace;
use crate::error::{Error, Result};

pub const FIDELITY_HEADER: &str = "sample,mean_fid,std_fid";
pub const SUMMARY_HEADER: &str = "algorithm,window,av_fid";

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fidelity_csv(trace: &FidelityTrace) -> String {
    let mut out = String::with_capacity(48 * (trace.len() + 1));
    out.push_str(FIDELITY_HEADER);
    out.push('\n');
    for (i, (m, s)) in trace.mean.iter().zip(&trace.std).enumerate() {
        let _ = writeln!(out, "{i},{},{}", format_float(*m), format_float(*s));
    }
    out
}

/// One column per run.
pub fn runs_csv(runs: &[Vec<f64>]) -> String {
    let mut out = String::from("sample");
    for r in 0..runs.len() {
        let _ = write!(out, ",run_{r}");
    }
    out.push('\n');
    let len = runs.first().map_or(0, Vec::len);
    for i in 0..len {
        out.push_str(&i.to_string());
        for r in runs {
            out.push(',');
            out.push_str(&format_float(r[i]));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub window: usize,
    pub av_fid: f64,
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.algorithm, r.window, format_float(r.av_fid));
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a file written by [`fidelity_csv`]; per-run columns are not kept.
pub fn parse_fidelity_csv(text: &str) -> Result<FidelityTrace> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(FIDELITY_HEADER) => {}
        other => return Err(parse_err(1, format!("expected header {FIDELITY_HEADER:?}, found {other:?}"))),
    }
    let (mut mean, mut std) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let n = k + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(n, "expected three fields"));
        }
        let sample: usize = fields[0].parse().map_err(|_| parse_err(n, "bad sample index"))?;
        if sample != mean.len() {
            return Err(parse_err(n, format!("sample {sample} out of order")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(n, format!("bad number {s:?}")));
        mean.push(num(fields[1])?);
        std.push(num(fields[2])?);
    }
    Ok(FidelityTrace { mean, std, runs: None })
}

pub fn read_fidelity_csv(path: &Path) -> Result<FidelityTrace> {
    parse_fidelity_csv(&fs::read_to_string(path)?)
}

/// Reads a file written by [`runs_csv`] back into one series per run.
pub fn parse_runs_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or_default();
    let mut columns = header.split(',');
    if columns.next() != Some("sample") {
        return Err(parse_err(1, "expected a sample column"));
    }
    let n_runs = columns.count();
    let mut runs = vec![Vec::new(); n_runs];
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let n = k + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_runs + 1 {
            return Err(parse_err(n, format!("expected {} fields", n_runs + 1)));
        }
        for (run, f) in runs.iter_mut().zip(&fields[1..]) {
            run.push(f.parse().map_err(|_| parse_err(n, format!("bad number {f:?}")))?);
        }
    }
    Ok(runs)
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.split('\n');
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(parse_err(1, format!("expected header {SUMMARY_HEADER:?}")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let n = k + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(parse_err(n, "expected three fields"));
        }
        rows.push(SummaryRow {
            algorithm: f[0].to_string(),
            window: f[1].parse().map_err(|_| parse_err(n, "bad window"))?,
            av_fid: f[2].parse().map_err(|_| parse_err(n, "bad number"))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn layout() {
        let t = FidelityTrace {
            mean: vec![0.5, 1.0],
            std: vec![0.25, 0.0],
            runs: None,
        };
        assert_eq!(
            fidelity_csv(&t),
            "sample,mean_fid,std_fid\n0,5.0000000000000000e-1,2.5000000000000000e-1\n1,1.0000000000000000e0,0.0000000000000000e0\n"
        );
        assert_eq!(runs_csv(&[vec![0.0], vec![1.0]]), "sample,run_0,run_1\n0,0.0000000000000000e0,1.0000000000000000e0\n");
        let runs = vec![vec![0.25, 0.5], vec![1.0, 0.75]];
        assert_eq!(parse_runs_csv(&runs_csv(&runs)).unwrap(), runs);
        assert!(parse_runs_csv("sample,run_0\n0,1,2\n").is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_fidelity_csv("a,b\n").is_err());
        assert!(parse_fidelity_csv("sample,mean_fid,std_fid\n1,0,0\n").is_err());
        assert!(parse_fidelity_csv("sample,mean_fid,std_fid\n0,x,0\n").is_err());
        assert!(parse_summary_csv("algorithm,window,av_fid\nrbm,10\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(mean in prop::collection::vec(0.0f64..=1.0, 1..40), seed in any::<u64>()) {
            let std: Vec<f64> = mean.iter().map(|m| (m * seed as f64).fract().abs()).collect();
            let t = FidelityTrace { mean, std, runs: None };
            prop_assert_eq!(parse_fidelity_csv(&fidelity_csv(&t)).unwrap(), t);
        }

        #[test]
        fn summary_round_trip(av in 0.0f64..=1.0, window in 0usize..1000) {
            let rows = vec![SummaryRow { algorithm: "dbm-sa".into(), window, av_fid: av }];
            prop_assert_eq!(parse_summary_csv(&summary_csv(&rows)).unwrap(), rows);
        }
    }
}
