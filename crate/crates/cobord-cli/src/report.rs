//! Report rendering.
//!
//! Every subcommand produces one [`Report`]: a pass/fail verdict, a tabular
//! view for the `csv` and `pretty` formats, and a JSON document for the
//! default format.  All three renderings are deterministic — JSON objects
//! sort their keys, and polynomial values are printed from canonically
//! sorted term lists — so a fixed command line yields byte-identical
//! output across runs.

use clap::ValueEnum;

/// Output format selected with `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// One JSON document on stdout.
    Json,
    /// Comma-separated table with a header row.
    Csv,
    /// Aligned human-readable table with a status footer.
    Pretty,
}

/// The result of one subcommand run.
pub struct Report {
    /// Whether every check passed (compute-only commands are always `true`).
    pub ok: bool,
    /// Column names for the tabular formats.
    pub columns: Vec<&'static str>,
    /// One entry per record, aligned with `columns`.
    pub rows: Vec<Vec<String>>,
    /// The JSON document for `--format json`.
    pub json: serde_json::Value,
    /// First failure, if any — echoed as a JSON witness on stderr for the
    /// non-JSON formats.
    pub witness: Option<String>,
}

impl Report {
    /// Print the report to stdout in the requested format.  When the run
    /// failed and the format is not JSON, a one-line JSON witness goes to
    /// stderr so failures are machine-readable in every mode.
    pub fn render(&self, format: Format) {
        match format {
            Format::Json => println!("{}", self.json),
            Format::Csv => {
                println!("{}", self.columns.join(","));
                for row in &self.rows {
                    let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
                    println!("{}", fields.join(","));
                }
            }
            Format::Pretty => {
                let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
                for row in &self.rows {
                    for (i, field) in row.iter().enumerate() {
                        widths[i] = widths[i].max(field.len());
                    }
                }
                let header: Vec<String> = self
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{c:<width$}", width = widths[i]))
                    .collect();
                println!("{}", header.join("  "));
                for row in &self.rows {
                    let line: Vec<String> = row
                        .iter()
                        .enumerate()
                        .map(|(i, f)| format!("{f:<width$}", width = widths[i]))
                        .collect();
                    println!("{}", line.join("  ").trim_end());
                }
                println!("status: {}", if self.ok { "pass" } else { "fail" });
            }
        }
        if !self.ok && format != Format::Json {
            let witness = self.witness.clone().unwrap_or_default();
            eprintln!("{}", serde_json::json!({ "status": "fail", "witness": witness }));
        }
    }
}

/// Quote a CSV field when it contains a delimiter, a quote or a newline.
fn csv_field(f: &str) -> String {
    if f.contains(',') || f.contains('"') || f.contains('\n') {
        format!("\"{}\"", f.replace('"', "\"\""))
    } else {
        String::from(f)
    }
}
