//! CSV and JSON import/export.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::certify::CertReport;
use crate::engine::Trajectory;
use crate::error::{invalid, Result};
use crate::problems::LogisticDataset;
use crate::Matrix;

/// Writes `label,f1,...,fn` with labels as `-1`/`1`.
pub fn write_dataset_csv<W: Write>(data: &LogisticDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string()];
    header.extend((1..=data.n_features()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for i in 0..data.n_samples() {
        let mut row = vec![format!("{}", data.labels()[i] as i64)];
        row.extend(data.features().row(i).iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<LogisticDataset> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("label") || headers.len() < 2 {
        return Err(invalid("dataset header must be label,f1,...,fn"));
    }
    let n = headers.len() - 1;
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| invalid(format!("bad number '{s}': {e}")));
        labels.push(parse(&rec[0])?);
        for j in 1..=n {
            values.push(parse(&rec[j])?);
        }
    }
    let features = Matrix::from_row_slice(labels.len(), n, &values);
    LogisticDataset::new(features, labels)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Writes `k,f,gap,grad_norm,alpha,gamma,active_bound,cum_alpha` and a final
/// `# status=<status>` line.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "f", "gap", "grad_norm", "alpha", "gamma", "active_bound", "cum_alpha"])?;
    for r in &traj.records {
        let step = r.step;
        w.write_record([
            r.k.to_string(),
            format!("{:?}", r.f),
            opt(r.gap),
            format!("{:?}", r.grad_norm),
            opt(step.map(|s| s.alpha)),
            opt(step.and_then(|s| s.gamma)),
            step.and_then(|s| s.active).map(|a| a.as_str().to_string()).unwrap_or_default(),
            format!("{:?}", r.cum_alpha),
        ])?;
    }
    let mut inner = w.into_inner().map_err(|e| e.into_error())?;
    writeln!(inner, "# status={}", traj.status.as_str())?;
    inner.flush()?;
    Ok(())
}

/// Trailing status of a trajectory CSV, if present.
pub fn read_trajectory_status<R: Read>(input: R) -> Result<Option<String>> {
    let mut status = None;
    for line in BufReader::new(input).lines() {
        if let Some(s) = line?.strip_prefix("# status=") {
            status = Some(s.trim().to_string());
        }
    }
    Ok(status)
}

/// Writes `inequality,iters_checked,iters_skipped,max_residual,tolerance,verdict`.
pub fn write_reports_csv<W: Write>(reports: &[CertReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["inequality", "iters_checked", "iters_skipped", "max_residual", "tolerance", "verdict"])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.iters_checked.to_string(),
            r.iters_skipped.to_string(),
            format!("{:e}", r.max_residual),
            format!("{:e}", r.tolerance),
            r.verdict.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory_json(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, traj)?;
    w.flush()?;
    Ok(())
}

pub fn load_trajectory_json(path: &Path) -> Result<Trajectory> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn save_csv<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(BufWriter<File>) -> Result<()>,
{
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    match write(BufWriter::new(File::create(&tmp)?)) {
        Ok(()) => Ok(std::fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ControllerSpec;
    use crate::engine::{run_gd, ProblemSpec, RunConfig};
    use crate::problems::make_logistic_dataset;

    #[test]
    fn dataset_round_trip() {
        let d = make_logistic_dataset(20, 3, 5, 0.2).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("label,f1,f2,f3\n"));
        for line in text.lines().skip(1) {
            let label = line.split(',').next().unwrap();
            assert!(label == "1" || label == "-1");
        }
        assert_eq!(read_dataset_csv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn bad_dataset_header() {
        assert!(read_dataset_csv("y,f1\n1,0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn trajectory_csv_layout() {
        let cfg = RunConfig::new(ProblemSpec::logistic_default(), ControllerSpec::affgd(0.7).unwrap()).with_iters(10);
        let t = run_gd(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "k,f,gap,grad_norm,alpha,gamma,active_bound,cum_alpha");
        assert_eq!(lines.len(), 1 + 11 + 1);
        assert_eq!(*lines.last().unwrap(), "# status=budget_exhausted");
        assert_eq!(read_trajectory_status(buf.as_slice()).unwrap().as_deref(), Some("budget_exhausted"));
    }

    #[test]
    fn trajectory_json_round_trip() {
        let cfg = RunConfig::new(ProblemSpec::logistic_default(), ControllerSpec::affgd(0.7).unwrap()).with_iters(20);
        let t = run_gd(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        save_trajectory_json(&t, &p).unwrap();
        assert_eq!(load_trajectory_json(&p).unwrap(), t);
    }
}
