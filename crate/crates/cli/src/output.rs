use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Where a subcommand's result goes.
///
/// Without `--output` the result is rendered as text on stdout. `--output -` puts JSON on
/// stdout instead, and `--output FILE` writes JSON to the file while the text summary still
/// goes to stdout. Diagnostics always go to stderr.
#[derive(Debug, Clone)]
pub enum Sink {
    Text,
    JsonStdout,
    JsonFile(PathBuf),
}

impl Sink {
    pub fn from_arg(arg: Option<&Path>) -> Sink {
        match arg {
            None => Sink::Text,
            Some(p) if p == Path::new("-") => Sink::JsonStdout,
            Some(p) => Sink::JsonFile(p.to_owned()),
        }
    }

    pub fn emit<T, F>(&self, value: &T, text: F) -> anyhow::Result<()>
    where
        T: Serialize,
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        match self {
            Sink::JsonStdout => {
                serde_json::to_writer_pretty(&mut out, value)?;
                writeln!(out)?;
            }
            Sink::JsonFile(path) => {
                write_json(path, value)?;
                text(&mut out)?;
            }
            Sink::Text => text(&mut out)?,
        }
        out.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Plain-text table. Columns whose cells are all numbers are right-aligned.
pub fn table(out: &mut dyn Write, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let n = header.len();
    let numeric: Vec<bool> = (0..n)
        .map(|i| !rows.is_empty() && rows.iter().all(|r| r.get(i).is_some_and(|c| c.parse::<f64>().is_ok())))
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let render = |out: &mut dyn Write, cells: &[String]| -> io::Result<()> {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate().take(n) {
            let pad = widths[i] - cell.chars().count();
            if i > 0 {
                line.push_str("  ");
            }
            if numeric[i] {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            } else {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            }
        }
        writeln!(out, "{}", line.trim_end())
    };
    render(out, header)?;
    let rule: usize = widths.iter().sum::<usize>() + 2 * (n.saturating_sub(1));
    writeln!(out, "{}", "-".repeat(rule))?;
    for row in rows {
        render(out, row)?;
    }
    Ok(())
}
