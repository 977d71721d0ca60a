//! Minimal RFC 4180 CSV: CRLF row endings, quoting only where needed.

use crate::error::CliError;
use std::path::Path;

/// Quotes a field when it contains a comma, quote, or line break.
pub fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// One CSV row with the trailing CRLF.
pub fn csv_row(fields: &[String]) -> String {
    let mut row = fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",");
    row.push_str("\r\n");
    row
}

/// Parses CSV text into rows of fields; accepts CRLF and LF endings.
pub fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut quoted = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if quoted {
            match c {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    field.push('"');
                }
                '"' => quoted = false,
                _ => field.push(c),
            }
        } else {
            match c {
                '"' => quoted = true,
                ',' => fields.push(std::mem::take(&mut field)),
                '\r' => {}
                '\n' => {
                    fields.push(std::mem::take(&mut field));
                    rows.push(std::mem::take(&mut fields));
                }
                _ => field.push(c),
            }
        }
    }
    if !field.is_empty() || !fields.is_empty() {
        fields.push(field);
        rows.push(fields);
    }
    rows.retain(|r| !(r.len() == 1 && r[0].is_empty()));
    rows
}

/// Reads a volume-pairs table with the header
/// `sample_id,measured_cm3,reconstructed_cm3`.
pub fn read_pairs_csv(path: &Path) -> Result<Vec<(String, f64, f64)>, CliError> {
    let text = crate::io::read_to_string(path)?;
    let rows = parse_csv(&text);
    let mut iter = rows.into_iter();
    let header = iter.next().ok_or_else(|| CliError::MalformedRecord {
        path: path.display().to_string(),
        line: 1,
        reason: "empty file".to_string(),
    })?;
    let expected = ["sample_id", "measured_cm3", "reconstructed_cm3"];
    if header.iter().map(String::as_str).ne(expected) {
        return Err(CliError::MalformedRecord {
            path: path.display().to_string(),
            line: 1,
            reason: format!("header must be {}", expected.join(",")),
        });
    }
    let mut pairs = Vec::new();
    for (idx, row) in iter.enumerate() {
        let line = idx + 2;
        let bad = |reason: String| CliError::MalformedRecord {
            path: path.display().to_string(),
            line,
            reason,
        };
        if row.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", row.len())));
        }
        let measured: f64 = row[1]
            .parse()
            .map_err(|_| bad(format!("bad measured volume {:?}", row[1])))?;
        let reconstructed: f64 = row[2]
            .parse()
            .map_err(|_| bad(format!("bad reconstructed volume {:?}", row[2])))?;
        pairs.push((row[0].clone(), measured, reconstructed));
    }
    Ok(pairs)
}
