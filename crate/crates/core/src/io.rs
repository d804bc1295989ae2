//! File formats: dataset and truth CSVs, long-format results, scores,
//! PSRF traces, draw matrices, run manifests, and the plain key = value
//! configuration syntax.
//!
//! All numeric output uses Rust's shortest round-trip decimal formatting,
//! so written values reparse bit-for-bit. Gene and environment indices
//! are 1-based in every file (matching the X1..Xp / E1..Eq headers) and
//! 0-based in memory.

use crate::error::{Error, Result};
use crate::evaluate::{EffectKind, EffectScore};
use crate::model::{Dataset, GroundTruth, Matrix, MethodId, PosteriorSummary};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, row: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        row,
        col,
        message: message.into(),
    }
}

fn parse_cell(path: &Path, row: usize, col: usize, cell: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, row, col, format!("expected a number, got '{}'", cell.trim())))
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(path, row, col, "non-finite value"))
            }
        })
}

/// Write a dataset as `y, E1..Eq, C1..Cm, X1..Xp`.
pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("y");
    for k in 1..=ds.q() {
        let _ = write!(header, ",E{k}");
    }
    for t in 1..=ds.m() {
        let _ = write!(header, ",C{t}");
    }
    for j in 1..=ds.p() {
        let _ = write!(header, ",X{j}");
    }
    writeln!(w, "{header}").map_err(io_err(path))?;
    for i in 0..ds.n() {
        let mut line = String::new();
        let _ = write!(line, "{}", ds.y[i]);
        for k in 0..ds.q() {
            let _ = write!(line, ",{}", ds.e.get(i, k));
        }
        for t in 0..ds.m() {
            let _ = write!(line, ",{}", ds.c.get(i, t));
        }
        for j in 0..ds.p() {
            let _ = write!(line, ",{}", ds.x.get(i, j));
        }
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Read a dataset CSV. Column roles come from the header prefixes
/// (`y`, `E#`, `C#`, `X#`). With `genotype` set, X cells must be
/// 0, 1 or 2.
pub fn load_dataset(path: &Path, genotype: bool) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"y") {
        return Err(parse_err(path, 1, 1, "header must start with 'y'"));
    }
    let count_prefix = |prefix: char| cols.iter().filter(|c| c.starts_with(prefix)).count();
    let q = count_prefix('E');
    let m = count_prefix('C');
    let p = count_prefix('X');
    if 1 + q + m + p != cols.len() {
        return Err(parse_err(
            path,
            1,
            1,
            format!("unrecognized header columns; expected y,E*,C*,X*, got {} columns", cols.len()),
        ));
    }
    // Roles must be contiguous and ordered.
    for (idx, name) in cols.iter().enumerate() {
        let expected = if idx == 0 {
            'y'
        } else if idx <= q {
            'E'
        } else if idx <= q + m {
            'C'
        } else {
            'X'
        };
        if !name.starts_with(expected) {
            return Err(parse_err(
                path,
                1,
                idx + 1,
                format!("expected a {expected} column, got '{name}'"),
            ));
        }
    }

    let mut y = Vec::new();
    let mut e_rows: Vec<Vec<f64>> = Vec::new();
    let mut c_rows: Vec<Vec<f64>> = Vec::new();
    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = lineno + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(parse_err(
                path,
                row,
                1,
                format!("expected {} cells, got {}", cols.len(), cells.len()),
            ));
        }
        y.push(parse_cell(path, row, 1, cells[0])?);
        let mut erow = Vec::with_capacity(q);
        for k in 0..q {
            erow.push(parse_cell(path, row, 2 + k, cells[1 + k])?);
        }
        let mut crow = Vec::with_capacity(m);
        for t in 0..m {
            crow.push(parse_cell(path, row, 2 + q + t, cells[1 + q + t])?);
        }
        let mut xrow = Vec::with_capacity(p);
        for j in 0..p {
            let col = 2 + q + m + j;
            let v = parse_cell(path, row, col, cells[1 + q + m + j])?;
            if genotype && v != 0.0 && v != 1.0 && v != 2.0 {
                return Err(parse_err(
                    path,
                    row,
                    col,
                    format!("genotype cell must be 0, 1 or 2, got {v}"),
                ));
            }
            xrow.push(v);
        }
        e_rows.push(erow);
        c_rows.push(crow);
        x_rows.push(xrow);
    }
    let n = y.len();
    let to_matrix = |rows: &[Vec<f64>], cols: usize| {
        let mut mat = Matrix::zeros(n, cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                mat.set(i, j, v);
            }
        }
        mat
    };
    Dataset::new(y, to_matrix(&e_rows, q), to_matrix(&c_rows, m), to_matrix(&x_rows, p), None)
}

/// Write the truth sidecar: `kind,gene,env,value` with 1-based indices
/// and `-` for fields that do not apply.
pub fn write_truth(truth: &GroundTruth, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "kind,gene,env,value").map_err(io_err(path))?;
    for &(g, v) in &truth.mains {
        writeln!(w, "main,{},-,{}", g + 1, v).map_err(io_err(path))?;
    }
    for &(g, k, v) in &truth.interactions {
        writeln!(w, "interaction,{},{},{}", g + 1, k + 1, v).map_err(io_err(path))?;
    }
    for (k, v) in truth.env_coefs.iter().enumerate() {
        writeln!(w, "env,-,{},{}", k + 1, v).map_err(io_err(path))?;
    }
    for (t, v) in truth.clin_coefs.iter().enumerate() {
        writeln!(w, "clinical,-,{},{}", t + 1, v).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut truth = GroundTruth::default();
    let mut env: Vec<(usize, f64)> = Vec::new();
    let mut clin: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let row = lineno + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 4 {
            return Err(parse_err(path, row, 1, "expected kind,gene,env,value"));
        }
        let idx = |cell: &str, col: usize| -> Result<usize> {
            cell.parse::<usize>()
                .ok()
                .and_then(|v| v.checked_sub(1))
                .ok_or_else(|| parse_err(path, row, col, format!("expected a 1-based index, got '{cell}'")))
        };
        let value = parse_cell(path, row, 4, cells[3])?;
        match cells[0] {
            "main" => truth.mains.push((idx(cells[1], 2)?, value)),
            "interaction" => truth
                .interactions
                .push((idx(cells[1], 2)?, idx(cells[2], 3)?, value)),
            "env" => env.push((idx(cells[2], 3)?, value)),
            "clinical" => clin.push((idx(cells[2], 3)?, value)),
            other => return Err(parse_err(path, row, 1, format!("unknown kind '{other}'"))),
        }
    }
    env.sort_by_key(|&(k, _)| k);
    clin.sort_by_key(|&(k, _)| k);
    truth.env_coefs = env.into_iter().map(|(_, v)| v).collect();
    truth.clin_coefs = clin.into_iter().map(|(_, v)| v).collect();
    Ok(truth)
}

/// Write scan results in long format: one row per (gene, effect) with
/// the posterior median, the identification score (inclusion
/// probability or credible-indicator average), and the 95% interval.
pub fn write_results(summaries: &[Option<PosteriorSummary>], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "gene,kind,env,method,median,score,lower95,upper95").map_err(io_err(path))?;
    for s in summaries.iter().flatten() {
        let (lo, hi) = s.beta.interval(0.95).unwrap_or((f64::NAN, f64::NAN));
        writeln!(
            w,
            "{},main,-,{},{},{},{},{}",
            s.gene + 1,
            s.method,
            s.beta.median,
            s.beta.score(),
            lo,
            hi
        )
        .map_err(io_err(path))?;
        for (k, e) in s.eta.iter().enumerate() {
            let (lo, hi) = e.interval(0.95).unwrap_or((f64::NAN, f64::NAN));
            writeln!(
                w,
                "{},interaction,E{},{},{},{},{},{}",
                s.gene + 1,
                k + 1,
                s.method,
                e.median,
                e.score(),
                lo,
                hi
            )
            .map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Read the `gene,kind,env,...,score,...` columns of a results file
/// back as effect scores.
pub fn load_scores(path: &Path) -> Result<Vec<EffectScore>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let row = lineno + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 8 {
            return Err(parse_err(path, row, 1, "expected 8 columns"));
        }
        let gene: usize = cells[0]
            .parse::<usize>()
            .ok()
            .and_then(|v| v.checked_sub(1))
            .ok_or_else(|| parse_err(path, row, 1, "bad gene index"))?;
        let kind = match cells[1] {
            "main" => EffectKind::Main,
            "interaction" => {
                let env = cells[2]
                    .strip_prefix('E')
                    .and_then(|s| s.parse::<usize>().ok())
                    .and_then(|v| v.checked_sub(1))
                    .ok_or_else(|| parse_err(path, row, 3, "bad env name"))?;
                EffectKind::Interaction(env)
            }
            other => return Err(parse_err(path, row, 2, format!("unknown kind '{other}'"))),
        };
        let method: MethodId = cells[3]
            .parse()
            .map_err(|_| parse_err(path, row, 4, "unknown method"))?;
        let score = parse_cell(path, row, 6, cells[5])?;
        out.push(EffectScore {
            gene,
            kind,
            score,
            method,
        });
    }
    Ok(out)
}

/// Write a draw matrix (one column per parameter) for one chain.
pub fn write_draws(path: &Path, names: &[String], columns: &[Vec<f64>]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", names.join(",")).map_err(io_err(path))?;
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Read a draw matrix back as (names, columns).
pub fn load_draws(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, 1, "empty file"))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = lineno + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(parse_err(path, row, 1, "ragged row"));
        }
        for (j, cell) in cells.iter().enumerate() {
            columns[j].push(parse_cell(path, row, j + 1, cell)?);
        }
    }
    Ok((names, columns))
}

/// Parse `key = value` configuration text with dotted sections.
/// Lines starting with `#` and blank lines are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {}: expected 'key = value', got '{line}'", lineno + 1))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("config line {}: empty key", lineno + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text)
}

/// Write the run manifest: every key/value needed to reproduce the run
/// bit-for-bit, in the same key = value syntax the config reader
/// accepts.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for (k, v) in entries {
        writeln!(w, "{k} = {v}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
