//! norms.csv reading and writing. The header is fixed; optional columns
//! serialize as empty cells. Floats are written with 17 significant digits,
//! enough for a bit-exact f64 round trip, so re-reading a file reproduces
//! the in-memory series exactly.

use std::path::Path;

use shearlab_core::diagnostics::{NormRow, NormSeries};

use crate::CliError;

pub const HEADER: &str = "t,log_l2,log_h1,log_hneg1,mix_scale,grad_ratio,err_budget";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn render(series: &NormSeries) -> String {
    let mut out = String::with_capacity(64 * (series.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for row in series.rows() {
        out.push_str(&format!(
            "{:.16e},{:.16e},{},{},{},{},{}\n",
            row.t,
            row.log_l2,
            cell(row.log_h1),
            cell(row.log_hneg1),
            cell(row.mix_scale),
            cell(row.grad_ratio),
            cell(row.err_budget),
        ));
    }
    out
}

pub fn write(path: &Path, series: &NormSeries) -> Result<(), CliError> {
    std::fs::write(path, render(series))
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn parse_cell(s: &str, line: usize, col: &str) -> Result<Option<f64>, CliError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| {
        CliError::Config(format!("norms line {line}: bad {col} value '{s}'"))
    })
}

pub fn parse(text: &str, meta: impl Into<String>) -> Result<NormSeries, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        Some((_, h)) => {
            return Err(CliError::Config(format!(
                "unexpected norms header '{}' (expected '{HEADER}')",
                h.trim()
            )));
        }
        None => return Err(CliError::Config("empty norms file".into())),
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(CliError::Config(format!(
                "norms line {}: expected 7 columns, found {}",
                idx + 1,
                cells.len()
            )));
        }
        let lineno = idx + 1;
        let t = parse_cell(cells[0], lineno, "t")?
            .ok_or_else(|| CliError::Config(format!("norms line {lineno}: missing t")))?;
        let log_l2 = parse_cell(cells[1], lineno, "log_l2")?
            .ok_or_else(|| CliError::Config(format!("norms line {lineno}: missing log_l2")))?;
        rows.push(NormRow {
            t,
            log_l2,
            log_h1: parse_cell(cells[2], lineno, "log_h1")?,
            log_hneg1: parse_cell(cells[3], lineno, "log_hneg1")?,
            mix_scale: parse_cell(cells[4], lineno, "mix_scale")?,
            grad_ratio: parse_cell(cells[5], lineno, "grad_ratio")?,
            err_budget: parse_cell(cells[6], lineno, "err_budget")?,
        });
    }
    NormSeries::from_rows(meta, rows).map_err(|e| CliError::Config(format!("norms file: {e}")))
}

pub fn read(path: &Path, meta: impl Into<String>) -> Result<NormSeries, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_bit_exactly() {
        let mut series = NormSeries::new("trip");
        for i in 0..5 {
            let t = i as f64 * 0.1 + 1.0 / 3.0;
            let mut row = NormRow::new(t, -(t * t) / 7.0);
            if i % 2 == 0 {
                row.mix_scale = Some(1.0 / (1.0 + t));
            }
            series.push(row);
        }
        let text = render(&series);
        let back = parse(&text, "trip").unwrap();
        assert_eq!(back.rows(), series.rows());
        assert_eq!(render(&back), text);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse("nonsense\n", "x").is_err());
        let short = format!("{HEADER}\n1.0,2.0,,\n");
        assert!(parse(&short, "x").is_err());
        let bad = format!("{HEADER}\n1.0,green,,,,,\n");
        let err = parse(&bad, "x").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
