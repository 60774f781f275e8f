use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::KpiSummary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub group: String,
    pub method: String,
    #[serde(flatten)]
    pub summary: KpiSummary,
}

/// Side-by-side comparison of several methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

const CSV_HEADER: &str = "group,method,task_count,admission_rate,avg_utility,median_utility,mec_served,balk,renege,preempt,mean_observations,replication_avg_min,replication_avg_max";

pub fn compare_report(rows: Vec<ReportRow>) -> Report {
    Report { rows }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Report {
    /// Comma-separated values with round-trip float formatting; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let s = &r.summary;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.group,
                r.method,
                s.task_count,
                opt(s.admission_rate),
                opt(s.avg_utility),
                opt(s.median_utility),
                s.mec_served_count,
                s.balk_count,
                s.renege_count,
                s.preempt_count,
                opt(s.mean_observations_per_task),
                opt(s.replication_avg_min),
                opt(s.replication_avg_max),
            );
        }
        out
    }

    /// One object per method, ECDF included.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("report rows serialise")
    }

    /// Aligned text table with admission, average and median utility.
    pub fn to_table(&self) -> String {
        let cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                let s = &r.summary;
                let f4 = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.4}"));
                [
                    r.group.clone(),
                    r.method.clone(),
                    s.admission_rate.map_or("-".into(), |a| format!("{:.2}%", a * 100.0)),
                    f4(s.avg_utility),
                    f4(s.median_utility),
                ]
            })
            .collect();
        let header = ["Scenario", "Method", "Adm", "Avg", "Med"];
        let mut width: [usize; 5] = header.map(str::len);
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |row: [&str; 5]| {
            format!(
                "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}  {:>w4$}\n",
                row[0],
                row[1],
                row[2],
                row[3],
                row[4],
                w0 = width[0],
                w1 = width[1],
                w2 = width[2],
                w3 = width[3],
                w4 = width[4]
            )
        };
        let mut out = line(header);
        out.push_str(&"-".repeat(width.iter().sum::<usize>() + 8));
        out.push('\n');
        let mut prev: Option<&str> = None;
        for (row, r) in cells.iter().zip(&self.rows) {
            if prev.is_some_and(|p| p != r.group) {
                out.push('\n');
            }
            prev = Some(&r.group);
            out.push_str(&line([&row[0], &row[1], &row[2], &row[3], &row[4]]));
        }
        out
    }
}

/// Numeric content of one CSV report row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub group: String,
    pub method: String,
    pub task_count: usize,
    pub admission_rate: Option<f64>,
    pub avg_utility: Option<f64>,
    pub median_utility: Option<f64>,
    pub counts: [usize; 4],
    pub mean_observations: Option<f64>,
    pub replication_avg_min: Option<f64>,
    pub replication_avg_max: Option<f64>,
}

/// Reads back a CSV report written by [`Report::to_csv`].
pub fn parse_report_csv(text: &str) -> Result<Vec<ParsedRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("report CSV header mismatch".into()));
    }
    let bad = |l: &str| Error::Config(format!("malformed report line `{l}`"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 13 {
                return Err(bad(l));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            let o = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            let n = |s: &str| s.parse::<usize>().map_err(|_| bad(l));
            Ok(ParsedRow {
                group: f[0].to_string(),
                method: f[1].to_string(),
                task_count: n(f[2])?,
                admission_rate: o(f[3])?,
                avg_utility: o(f[4])?,
                median_utility: o(f[5])?,
                counts: [n(f[6])?, n(f[7])?, n(f[8])?, n(f[9])?],
                mean_observations: o(f[10])?,
                replication_avg_min: o(f[11])?,
                replication_avg_max: o(f[12])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::kpi_from_tasks;

    fn summary(avg: f64) -> KpiSummary {
        let mut s = kpi_from_tasks(&[]);
        s.task_count = 3;
        s.admission_rate = Some(2.0 / 3.0);
        s.avg_utility = Some(avg);
        s.median_utility = Some(avg / 3.0);
        s
    }

    #[test]
    fn one_summary_one_row() {
        let r = compare_report(vec![ReportRow { group: "g".into(), method: "m".into(), summary: summary(0.1) }]);
        assert_eq!(r.to_csv().lines().count(), 2);
        assert_eq!(r.to_table().lines().count(), 3);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let vals = [0.1 + 0.2, 1.0 / 3.0, 0.42217328879123, f64::MIN_POSITIVE, 1e-300];
        let rows = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| ReportRow { group: "g".into(), method: format!("m{i}"), summary: summary(v) })
            .collect();
        let report = compare_report(rows);
        let parsed = parse_report_csv(&report.to_csv()).unwrap();
        for (p, r) in parsed.iter().zip(&report.rows) {
            assert_eq!(p.avg_utility.unwrap().to_bits(), r.summary.avg_utility.unwrap().to_bits());
            assert_eq!(p.median_utility.unwrap().to_bits(), r.summary.median_utility.unwrap().to_bits());
            assert_eq!(p.admission_rate, r.summary.admission_rate);
            assert_eq!(p.mean_observations, None);
        }
    }

    #[test]
    fn json_has_one_object_per_row() {
        let rows = (0..3)
            .map(|i| ReportRow { group: "g".into(), method: format!("m{i}"), summary: summary(0.2) })
            .collect();
        let v: serde_json::Value = serde_json::from_str(&compare_report(rows).to_json()).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 3);
        assert!(arr[0].get("ecdf").is_some());
        assert_eq!(arr[2]["method"], "m2");
    }
}
