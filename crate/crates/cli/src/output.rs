//! Artifact writing: JSON or CSV, each opening with a header block that
//! echoes the resolved config, its hash, and the seed.

use std::fs;

use serde_json::{json, Value};

use crate::config::Resolved;
use crate::error::CliError;

/// One named table of flat JSON objects.
pub struct Section {
    pub name: &'static str,
    pub rows: Vec<Value>,
}

impl Section {
    pub fn new(name: &'static str, rows: Vec<Value>) -> Section {
        Section { name, rows }
    }
}

/// A complete run output. CSV is selected by a `.csv` output suffix; JSON
/// goes anywhere else, or to stdout when no output path is given.
pub struct Artifact<'a> {
    resolved: &'a Resolved,
    sections: Vec<Section>,
}

impl<'a> Artifact<'a> {
    pub fn new(resolved: &'a Resolved, sections: Vec<Section>) -> Artifact<'a> {
        Artifact { resolved, sections }
    }

    pub fn write(&self) -> Result<(), CliError> {
        match self.resolved.output() {
            None => print_stdout(&serde_json::to_string_pretty(&self.json())?),
            Some(path) if path.extension().is_some_and(|e| e == "csv") => {
                fs::write(path, self.csv()?)?;
                Ok(())
            }
            Some(path) => {
                fs::write(path, serde_json::to_string_pretty(&self.json())?)?;
                Ok(())
            }
        }
    }

    fn json(&self) -> Value {
        let mut doc = json!({
            "command": self.resolved.subcommand,
            "config": self.resolved.echo(),
            "config_hash": self.resolved.hash(),
            "seed": self.resolved.cfg.seed,
        });
        for section in &self.sections {
            doc[section.name] = Value::Array(section.rows.clone());
        }
        doc
    }

    fn csv(&self) -> Result<String, CliError> {
        let mut out = String::new();
        out.push_str(&format!("# command: {}\n", self.resolved.subcommand));
        out.push_str(&format!("# config: {}\n", self.resolved.echo()));
        out.push_str(&format!("# config_hash: {}\n", self.resolved.hash()));
        match self.resolved.cfg.seed {
            Some(seed) => out.push_str(&format!("# seed: {seed}\n")),
            None => out.push_str("# seed: -\n"),
        }
        for section in &self.sections {
            out.push_str(&format!("# table: {}\n", section.name));
            out.push_str(&section_csv(section)?);
        }
        Ok(out)
    }
}

/// Prints to stdout, treating a closed pipe as a normal end of output.
fn print_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let done = out
        .write_all(text.as_bytes())
        .and_then(|()| out.write_all(b"\n"));
    match done {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

/// Renders one section with its own header row; columns follow the key
/// order of the section's first row.
fn section_csv(section: &Section) -> Result<String, CliError> {
    let Some(first) = section.rows.first() else {
        return Ok(String::new());
    };
    let columns: Vec<&str> = first
        .as_object()
        .expect("rows are objects")
        .keys()
        .map(String::as_str)
        .collect();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&columns)?;
    for row in &section.rows {
        let object = row.as_object().expect("rows are objects");
        let record: Vec<String> = columns
            .iter()
            .map(|c| match object.get(*c) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
            })
            .collect();
        writer.write_record(&record)?;
    }
    let bytes = writer.into_inner().expect("csv buffer");
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CommonArgs, Resolved};
    use clap::Parser;

    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        args: CommonArgs,
    }

    fn resolved() -> Resolved {
        let wrap = Wrap::parse_from(["wrap", "--seed", "7"]);
        Resolved::from_args("sample", &wrap.args).unwrap()
    }

    #[test]
    fn csv_sections_carry_the_header_block() {
        let r = resolved();
        let artifact = Artifact::new(
            &r,
            vec![Section::new(
                "rows",
                vec![
                    json!({"lambda": 0.5, "estimate": 0.25, "note": "a,b"}),
                    json!({"lambda": 5.0, "estimate": 0.75, "note": ""}),
                ],
            )],
        );
        let text = artifact.csv().unwrap();
        assert!(text.starts_with("# command: sample\n"));
        assert!(text.contains("# config_hash: 0x"));
        assert!(text.contains("# seed: 7"));
        assert!(text.contains("# table: rows"));
        assert!(text.contains("lambda,estimate,note"));
        assert!(text.contains("0.5,0.25,\"a,b\""));
    }

    #[test]
    fn json_documents_echo_the_config() {
        let r = resolved();
        let artifact = Artifact::new(&r, vec![Section::new("rows", vec![])]);
        let doc = artifact.json();
        assert_eq!(doc["command"], "sample");
        assert_eq!(doc["config"]["seed"], 7);
        assert_eq!(doc["seed"], 7);
        assert!(doc["config_hash"].as_str().unwrap().starts_with("0x"));
        assert!(doc["rows"].as_array().unwrap().is_empty());
    }
}
