use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{json, Value};

use crate::config::ECHO_PREFIX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Txt,
}

/// Everything a command produces, in all three renderings.
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    /// `(file stem, body)` pairs; one CSV file each.
    pub tables: Vec<(String, String)>,
    pub text: String,
    pub result: Value,
}

impl Report {
    /// `(file name, contents)` for the chosen format.
    pub fn render(&self, format: Format) -> Vec<(String, String)> {
        let echo = format!("{ECHO_PREFIX}{}\n", self.config);
        match format {
            Format::Csv => self
                .tables
                .iter()
                .map(|(stem, body)| (format!("{stem}.csv"), format!("{echo}{body}")))
                .collect(),
            Format::Txt => vec![(format!("{}.txt", self.command), format!("{echo}{}", self.text))],
            Format::Json => {
                let doc = json!({
                    "command": self.command,
                    "config": self.config,
                    "result": self.result,
                });
                let body = serde_json::to_string_pretty(&doc).expect("json value serializes");
                vec![(format!("{}.json", self.command), body + "\n")]
            }
        }
    }

    /// Writes into `dir`, or to stdout when no directory is given.
    pub fn emit(&self, format: Format, dir: Option<&Path>) -> Result<Vec<String>> {
        let files = self.render(format);
        match dir {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for (name, body) in &files {
                    let path = dir.join(name);
                    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                }
            }
            None => {
                let mut out = std::io::stdout().lock();
                let written = files.iter().enumerate().try_for_each(|(i, (_, body))| {
                    if i > 0 {
                        writeln!(out)?;
                    }
                    out.write_all(body.as_bytes())
                });
                match written {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                    _ => {}
                }
            }
        }
        Ok(files.into_iter().map(|(n, _)| n).collect())
    }
}
