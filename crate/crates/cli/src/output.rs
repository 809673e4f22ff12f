use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
    pub gnuplot: bool,
}

impl Output {
    /// Writes `text` to the target, via a temporary file and rename when it is a path.
    pub fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.path {
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).map_err(|e| CliError::Io("stdout".into(), e))?;
                out.flush().map_err(|e| CliError::Io("stdout".into(), e))
            }
            Some(p) => write_atomic(p, text),
        }
    }

    /// Gnuplot script next to the output file: column `y` against column 1.
    pub fn emit_gnuplot(&self, y: usize, ylabel: &str, log_y: bool) -> Result<(), CliError> {
        if !self.gnuplot {
            return Ok(());
        }
        let Some(data) = &self.path else {
            return Err(CliError::Usage("--gnuplot needs --out".into()));
        };
        let script = format!(
            "set datafile separator ','\nset key off\nset xlabel 't'\nset ylabel '{ylabel}'\n{}plot '{}' every ::1 using 1:{y} with linespoints\n",
            if log_y { "set logscale xy\n" } else { "" },
            data.display()
        );
        let mut gp = data.clone().into_os_string();
        gp.push(".gp");
        write_atomic(Path::new(&gp), &script)
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(path.display().to_string(), e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Metadata block shared by every JSON document and CSV header.
pub fn header(command: &str, cfg: &RunConfig, seed: u64) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": expfun::VERSION,
        "config_hash": cfg.hash(),
        "seed": seed,
        "config": cfg,
    })
}

/// Adds the entries of `extra` to the object `base`.
pub fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

/// Renders a float for CSV; non-finite values become `nan`, `inf` or `-inf`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV document with a `# {json}` header line.
pub fn csv(head: &Value, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("# {}\n{}\n", serde_json::to_string(head).expect("header serializes"), columns.join(","));
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn json_doc(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("document serializes");
    s.push('\n');
    s
}

/// Quotes a CSV field when needed.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
