//! Result rows and the three output encodings. All numbers are serialized as
//! decimal strings at the requested precision; binary floats never touch the
//! output path.

use fdm_core::Float;
use serde::{Deserialize, Serialize};

/// One `(n, m)` result row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Row {
    pub n: usize,
    pub m: usize,
    pub lambda: String,
    /// Absent when no reference eigenvalue was requested.
    pub delta: Option<String>,
    pub omega: String,
    pub r_n: String,
    pub convergent: bool,
}

/// Scientific-notation decimal string with `sig` significant digits.
pub fn format_sig(value: &Float, sig: usize) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    if value.is_infinite() {
        return if value.is_sign_negative() { "-inf" } else { "inf" }.to_string();
    }
    // rug's exponential formatting takes the precision as the total number of
    // significant digits
    format!("{:.*e}", sig.max(1), value)
}

pub fn render_csv(rows: &[Row]) -> String {
    let mut out = String::from("n,m,lambda,delta,omega,r_n,convergent\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.n,
            row.m,
            row.lambda,
            row.delta.as_deref().unwrap_or(""),
            row.omega,
            row.r_n,
            row.convergent,
        ));
    }
    out
}

pub fn parse_csv(text: &str) -> Option<Vec<Row>> {
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return None;
        }
        rows.push(Row {
            n: fields[0].parse().ok()?,
            m: fields[1].parse().ok()?,
            lambda: fields[2].to_string(),
            delta: if fields[3].is_empty() {
                None
            } else {
                Some(fields[3].to_string())
            },
            omega: fields[4].to_string(),
            r_n: fields[5].to_string(),
            convergent: fields[6].parse().ok()?,
        });
    }
    Some(rows)
}

pub fn render_json(rows: &[Row]) -> String {
    serde_json::to_string_pretty(&serde_json::json!({ "rows": rows })).expect("serializable rows")
}

/// Paper-style table: one row per rank, a `delta`/`omega` column pair per
/// index, preceded by a summary line per index.
pub fn render_table(rows: &[Row], indices: &[usize], rank: usize, digits: usize) -> String {
    let mut out = String::new();
    for &n in indices {
        if let Some(last) = rows.iter().find(|r| r.n == n && r.m == rank) {
            out.push_str(&format!(
                "n={}: lambda_{} = {}   r_n = {}   convergent = {}\n",
                n,
                rank,
                last.lambda,
                last.r_n,
                last.convergent
            ));
        }
    }
    let _ = digits;
    out.push('\n');
    let mut header = format!("{:>4}", "m");
    for &n in indices {
        header.push_str(&format!("{:>14}{:>14}", format!("delta_{n}"), format!("omega_{n}")));
    }
    out.push_str(&header);
    out.push('\n');
    for m in 0..=rank {
        let mut line = format!("{m:>4}");
        for &n in indices {
            if let Some(row) = rows.iter().find(|r| r.n == n && r.m == m) {
                line.push_str(&format!(
                    "{:>14}{:>14}",
                    row.delta.as_deref().unwrap_or("-"),
                    row.omega
                ));
            } else {
                line.push_str(&format!("{:>14}{:>14}", "-", "-"));
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<Row> {
        vec![
            Row {
                n: 1,
                m: 0,
                lambda: "9.8696e0".into(),
                delta: Some("1.3e1".into()),
                omega: "2.17e1".into(),
                r_n: "2.43e1".into(),
                convergent: false,
            },
            Row {
                n: 1,
                m: 1,
                lambda: "9.8696e0".into(),
                delta: None,
                omega: "2.35e1".into(),
                r_n: "2.43e1".into(),
                convergent: false,
            },
        ]
    }

    #[test]
    fn csv_round_trip() {
        let rows = sample_rows();
        let parsed = parse_csv(&render_csv(&rows)).unwrap();
        assert_eq!(rows, parsed);
    }

    #[test]
    fn json_and_csv_agree_after_parsing() {
        let rows = sample_rows();
        let json = render_json(&rows);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let from_json: Vec<Row> =
            serde_json::from_value(value.get("rows").unwrap().clone()).unwrap();
        let from_csv = parse_csv(&render_csv(&rows)).unwrap();
        assert_eq!(from_json, from_csv);
    }
}
