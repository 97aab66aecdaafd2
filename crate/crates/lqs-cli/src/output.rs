use anyhow::{Context, Result};
use lqs::matcore::RMat;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

pub fn mat(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Echo, seed, tolerances, result, files written.
pub struct RunReport {
    pub command: &'static str,
    pub input: Option<String>,
    pub seed: u64,
    pub tolerances: Map<String, Value>,
    pub result: Value,
    pub files: Vec<String>,
    started: Instant,
}

impl RunReport {
    pub fn new(command: &'static str, input: Option<&str>, seed: u64) -> RunReport {
        RunReport {
            command,
            input: input.map(str::to_string),
            seed,
            tolerances: Map::new(),
            result: Value::Null,
            files: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn tol(mut self, name: &str, v: f64) -> RunReport {
        self.tolerances.insert(name.to_string(), json!(v));
        self
    }

    pub fn result<T: Serialize>(mut self, r: T) -> Result<RunReport> {
        self.result = serde_json::to_value(r)?;
        Ok(self)
    }

    pub fn emit(&self, out: Option<&Path>, timing: bool) -> Result<()> {
        let mut v = json!({
            "command": self.command,
            "input": self.input,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "result": self.result,
            "files": self.files,
        });
        if timing {
            v["wall_time_s"] = json!(self.started.elapsed().as_secs_f64());
        }
        let text = serde_json::to_string_pretty(&v)? + "\n";
        write_text(out, &text)
    }
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn write_csv<W: Write>(w: W, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header)?;
    for r in rows {
        wr.write_record(&r)?;
    }
    wr.flush()?;
    Ok(())
}

/// CSV to a file when given, standard output otherwise.
pub fn emit_csv(out: Option<&Path>, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    match out {
        Some(p) => {
            let f = std::fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
            write_csv(f, header, rows)
        }
        None => write_csv(std::io::stdout().lock(), header, rows),
    }
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}
