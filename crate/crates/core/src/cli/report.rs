//! Aggregation of candidate logs across search runs.

use crate::evolution::LogRecord;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub candidates: usize,
    pub best: f64,
    pub best_id: u64,
    pub rejected: usize,
    /// Best-so-far fitness after each candidate.
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub runs: Vec<RunSummary>,
    pub mean: f64,
    /// Sample standard deviation of the per-run bests; 0 for one run.
    pub std: f64,
    pub corrupt_lines: usize,
    pub warnings: Vec<String>,
}

/// Parses one log, skipping lines that are not candidate records.
pub fn parse_log(text: &str) -> (Vec<LogRecord>, usize) {
    let mut records = Vec::new();
    let mut corrupt = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<LogRecord>(line) {
            Ok(r) => records.push(r),
            Err(_) => corrupt += 1,
        }
    }
    (records, corrupt)
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Summarizes `(name, log text)` pairs. Runs without a single valid record
/// are left out with a warning.
pub fn summarize(logs: &[(String, String)]) -> Report {
    let mut runs = Vec::new();
    let mut warnings = Vec::new();
    let mut corrupt_lines = 0;
    for (name, text) in logs {
        let (records, corrupt) = parse_log(text);
        corrupt_lines += corrupt;
        if corrupt > 0 {
            warnings.push(format!("{name}: skipped {corrupt} corrupt line(s)"));
        }
        if records.is_empty() {
            warnings.push(format!("{name}: no candidate records"));
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_id = 0;
        let curve = records
            .iter()
            .map(|r| {
                if r.fitness > best || (r.fitness == best && r.id < best_id) {
                    best = r.fitness;
                    best_id = r.id;
                }
                best
            })
            .collect();
        runs.push(RunSummary {
            name: name.clone(),
            candidates: records.len(),
            best,
            best_id,
            rejected: records.iter().filter(|r| r.rejected.is_some()).count(),
            curve,
        });
    }
    if runs.len() == 1 {
        warnings.push("single run: standard deviation reported as 0".into());
    }
    let bests: Vec<f64> = runs.iter().map(|r| r.best).collect();
    let (mean, std) = mean_std(&bests);
    Report { runs, mean, std, corrupt_lines, warnings }
}

impl Report {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<32} {:>10} {:>10} {:>8} {:>8}", "run", "candidates", "best", "best id", "rejected");
        for r in &self.runs {
            let _ = writeln!(s, "{:<32} {:>10} {:>10.4} {:>8} {:>8}", r.name, r.candidates, r.best, r.best_id, r.rejected);
        }
        let _ = writeln!(s, "mean best {:.4}, std {:.4} over {} run(s)", self.mean, self.std, self.runs.len());
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    /// Tab-separated best-so-far curves, one column per run.
    pub fn series(&self) -> String {
        let mut s = String::from("candidate");
        for r in &self.runs {
            s.push('\t');
            s.push_str(&r.name);
        }
        s.push('\n');
        let len = self.runs.iter().map(|r| r.curve.len()).max().unwrap_or(0);
        for i in 0..len {
            let _ = write!(s, "{}", i + 1);
            for r in &self.runs {
                match r.curve.get(i) {
                    Some(v) => {
                        let _ = write!(s, "\t{v}");
                    }
                    None => s.push('\t'),
                }
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(fitness: &[f64]) -> String {
        fitness
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let r = LogRecord { id: i as u64, parent_id: None, fitness: f, timestamp: 0.0, created_at: Some(i), rejected: None, wall_time: 0.0 };
                serde_json::to_string(&r).unwrap() + "\n"
            })
            .collect()
    }

    #[test]
    fn three_runs() {
        let logs: Vec<(String, String)> =
            [0.90, 0.91, 0.92].iter().enumerate().map(|(i, &b)| (format!("r{i}"), log(&[0.5, b, 0.1]))).collect();
        let r = summarize(&logs);
        assert!((r.mean - 0.91).abs() < 1e-12);
        assert!((r.std - 0.01).abs() < 1e-12);
        assert_eq!(r.runs[0].curve, vec![0.5, 0.9, 0.9]);
    }

    #[test]
    fn single_run_and_corrupt_line() {
        let mut text = log(&[0.3, 0.4]);
        text.push_str("{not json\n");
        let r = summarize(&[("only".into(), text)]);
        assert_eq!(r.std, 0.0);
        assert_eq!(r.corrupt_lines, 1);
        assert_eq!(r.runs[0].candidates, 2);
        assert!(r.warnings.iter().any(|w| w.contains("single run")));
    }
}
