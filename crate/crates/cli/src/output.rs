//! Primary output (CSV or JSON, deterministic) plus a metadata sidecar for
//! anything run-dependent such as wall time.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Sink {
    out: Option<PathBuf>,
    format: Format,
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(
            File::create(path).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

impl Sink {
    pub fn new(out: Option<PathBuf>, format: Format) -> Self {
        Sink { out, format }
    }

    /// Rows as CSV with a header, or as a JSON array.
    pub fn table<T: Serialize>(&self, rows: &[T]) -> Result<(), CliError> {
        match self.format {
            Format::Json => self.json(&rows),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(writer(&self.out)?);
                for row in rows {
                    w.serialize(row).map_err(|e| CliError::Usage(format!("csv output: {e}")))?;
                }
                w.flush()?;
                Ok(())
            }
        }
    }

    pub fn json<T: Serialize + ?Sized>(&self, value: &T) -> Result<(), CliError> {
        let mut w = writer(&self.out)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Usage(format!("json output: {e}")))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `<out>.meta.json` next to a file output; no-op for stdout.
    pub fn metadata(&self, version: &str, elapsed: Duration) -> Result<(), CliError> {
        let Some(out) = &self.out else { return Ok(()) };
        let mut path = out.clone().into_os_string();
        path.push(".meta.json");
        let finished = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let meta = serde_json::json!({
            "version": version,
            "argv": std::env::args().collect::<Vec<_>>(),
            "finished_unix_s": finished,
            "elapsed_s": elapsed.as_secs_f64(),
        });
        let mut f = File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(f)?;
        Ok(())
    }
}
