//! CSV and JSON-lines tables with a versioned header.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::error::{CliError, Result};

/// Name and version of a table's column set.
#[derive(Clone, Copy, Debug)]
pub struct Schema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

/// Writes `rows` as CSV (a `# name vN` comment, then a header row) or as JSON
/// lines (a schema object, then one object per row).
pub fn write_table<T: Serialize>(out: impl Write, format: Format, schema: Schema, rows: &[T]) -> Result<()> {
    let mut out = BufWriter::new(out);
    match format {
        Format::Csv => {
            writeln!(out, "# multiprobe {} v{}", schema.name, schema.version).map_err(io_err)?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            w.write_record(schema.columns)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush().map_err(io_err)?;
        }
        Format::Jsonl => {
            let header = serde_json::json!({
                "schema": format!("multiprobe-{}", schema.name),
                "version": schema.version,
                "columns": schema.columns,
            });
            writeln!(out, "{header}").map_err(io_err)?;
            for row in rows {
                serde_json::to_writer(&mut out, row)?;
                writeln!(out).map_err(io_err)?;
            }
        }
    }
    out.flush().map_err(io_err)
}

/// [`write_table`] to `path`, or to standard output when `path` is `None`.
pub fn emit<T: Serialize>(path: Option<&Path>, format: Format, schema: Schema, rows: &[T]) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| CliError::Io { path: p.into(), source })?;
            write_table(file, format, schema, rows)
        }
        None => write_table(io::stdout().lock(), format, schema, rows),
    }
}

fn io_err(e: io::Error) -> CliError {
    CliError::Output(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct R {
        a: f64,
        b: Option<usize>,
        s: String,
    }

    const SCHEMA: Schema = Schema { name: "test", version: 3, columns: &["a", "b", "s"] };

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let rows = [R { a: 0.1, b: None, s: "12|34".into() }, R { a: 1e-300, b: Some(2), s: "1,2|3,4".into() }];
        write_table(&mut buf, Format::Csv, SCHEMA, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# multiprobe test v3\na,b,s\n0.1,,12|34\n1e-300,2,\"1,2|3,4\"\n");
    }

    #[test]
    fn jsonl_layout() {
        let mut buf = Vec::new();
        write_table(&mut buf, Format::Jsonl, SCHEMA, &[R { a: 0.5, b: None, s: "x".into() }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"columns":["a","b","s"],"schema":"multiprobe-test","version":3}"#);
        assert_eq!(lines[1], r#"{"a":0.5,"b":null,"s":"x"}"#);
    }
}
