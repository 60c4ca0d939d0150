//! Kernel dumps and plot-ready CSV files. Every file starts with a
//! `# config-hash <sha256>` line.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{KernelField, KernelMatrix};
use crate::kernels::{ControllerKernels, ObserverKernels, TraceMatrix};
use crate::sim::FieldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpKind {
    /// Values on the triangle, row `a` holding `F(x_a, ξ_b)` for `b ≤ a`.
    Triangle,
    /// Values on `x_a`, `a = 0..=N`.
    Trace,
}

impl DumpKind {
    fn label(self) -> &'static str {
        match self {
            DumpKind::Triangle => "triangle",
            DumpKind::Trace => "trace",
        }
    }
}

/// One dumped field; indices are 1-based in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpField {
    pub name: String,
    pub i: usize,
    pub j: usize,
    pub kind: DumpKind,
    pub n: usize,
    pub values: Vec<f64>,
}

impl DumpField {
    pub fn triangle(name: &str, i: usize, j: usize, f: &KernelField) -> Self {
        Self { name: name.into(), i, j, kind: DumpKind::Triangle, n: f.grid.n(), values: f.values.clone() }
    }

    pub fn trace(name: &str, i: usize, j: usize, v: &[f64]) -> Self {
        Self { name: name.into(), i, j, kind: DumpKind::Trace, n: v.len() - 1, values: v.to_vec() }
    }

    /// Value at node `(a, b)` of a triangle dump, or `a` of a trace.
    pub fn at(&self, a: usize, b: usize) -> f64 {
        match self.kind {
            DumpKind::Triangle => self.values[a * (a + 1) / 2 + b],
            DumpKind::Trace => self.values[a],
        }
    }
}

fn push_matrix(out: &mut Vec<DumpField>, name: &str, m: &KernelMatrix) {
    for i in 0..m.rows {
        for j in 0..m.cols {
            out.push(DumpField::triangle(name, i + 1, j + 1, m.get(i, j)));
        }
    }
}

fn push_trace(out: &mut Vec<DumpField>, name: &str, t: &TraceMatrix) {
    for i in 0..t.rows {
        for j in 0..t.cols {
            out.push(DumpField::trace(name, i + 1, j + 1, t.entry(i, j)));
        }
    }
}

pub fn controller_fields(k: &ControllerKernels) -> Vec<DumpField> {
    let mut out = Vec::new();
    push_matrix(&mut out, "K", &k.k);
    push_matrix(&mut out, "L", &k.l);
    push_trace(&mut out, "G", &k.g);
    push_matrix(&mut out, "Cplus", &k.c_plus);
    push_matrix(&mut out, "Cminus", &k.c_minus);
    out
}

pub fn observer_fields(k: &ObserverKernels) -> Vec<DumpField> {
    let mut out = Vec::new();
    push_matrix(&mut out, "M", &k.m);
    push_matrix(&mut out, "N", &k.n);
    push_trace(&mut out, "H", &k.h);
    push_matrix(&mut out, "Dplus", &k.d_plus);
    push_matrix(&mut out, "Dminus", &k.d_minus);
    push_trace(&mut out, "Pplus", &k.p_plus);
    push_trace(&mut out, "Pminus", &k.p_minus);
    out
}

/// Writes `field <name> <i> <j> <kind> <N>` blocks with `{:.16e}` values.
pub fn write_kernel_dump(path: &Path, hash: &str, fields: &[DumpField]) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "# config-hash {hash}").unwrap();
    for f in fields {
        writeln!(s, "field {} {} {} {} {}", f.name, f.i, f.j, f.kind.label(), f.n).unwrap();
        match f.kind {
            DumpKind::Triangle => {
                for a in 0..=f.n {
                    let row: Vec<String> = (0..=a).map(|b| format!("{:.16e}", f.at(a, b))).collect();
                    writeln!(s, "{}", row.join(" ")).unwrap();
                }
            }
            DumpKind::Trace => {
                let row: Vec<String> = f.values.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(s, "{}", row.join(" ")).unwrap();
            }
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Parses a dump written by [`write_kernel_dump`]; returns the hash and fields.
pub fn read_kernel_dump(path: &Path) -> Result<(String, Vec<DumpField>)> {
    let text = std::fs::read_to_string(path)?;
    parse_kernel_dump(&text)
}

pub fn parse_kernel_dump(text: &str) -> Result<(String, Vec<DumpField>)> {
    let bad = |msg: String| Error::Config(format!("kernel dump: {msg}"));
    let mut hash = String::new();
    let mut fields: Vec<DumpField> = Vec::new();
    let mut expect = 0usize;
    for (ln, line) in text.lines().enumerate() {
        if let Some(h) = line.strip_prefix("# config-hash ") {
            hash = h.trim().to_string();
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if let Some(head) = line.strip_prefix("field ") {
            if expect != 0 {
                return Err(bad(format!("line {}: previous field is short by {expect} values", ln + 1)));
            }
            let parts: Vec<&str> = head.split_whitespace().collect();
            if parts.len() != 5 {
                return Err(bad(format!("line {}: malformed header `{line}`", ln + 1)));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("line {}: {e}", ln + 1)));
            let kind = match parts[3] {
                "triangle" => DumpKind::Triangle,
                "trace" => DumpKind::Trace,
                k => return Err(bad(format!("line {}: unknown kind `{k}`", ln + 1))),
            };
            let n = num(parts[4])?;
            expect = match kind {
                DumpKind::Triangle => (n + 1) * (n + 2) / 2,
                DumpKind::Trace => n + 1,
            };
            fields.push(DumpField {
                name: parts[0].to_string(),
                i: num(parts[1])?,
                j: num(parts[2])?,
                kind,
                n,
                values: Vec::with_capacity(expect),
            });
            continue;
        }
        let f = fields.last_mut().ok_or_else(|| bad(format!("line {}: values before any field", ln + 1)))?;
        for tok in line.split_whitespace() {
            if expect == 0 {
                return Err(bad(format!("line {}: too many values for {} {} {}", ln + 1, f.name, f.i, f.j)));
            }
            f.values.push(tok.parse().map_err(|e| bad(format!("line {}: {e}", ln + 1)))?);
            expect -= 1;
        }
    }
    if expect != 0 {
        return Err(bad(format!("last field is short by {expect} values")));
    }
    Ok((hash, fields))
}

/// CSV with `x` and one column per named trace.
pub fn write_traces_csv(path: &Path, hash: &str, columns: &[(String, Vec<f64>)]) -> Result<()> {
    let len = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != len) || len < 2 {
        return Err(Error::Dimension("trace columns must share a length of at least 2".into()));
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "# config-hash {hash}")?;
    let mut w = csv::Writer::from_writer(file);
    let mut head = vec!["x".to_string()];
    head.extend(columns.iter().map(|c| c.0.clone()));
    w.write_record(&head)?;
    for k in 0..len {
        let mut rec = vec![format!("{:.10e}", k as f64 / (len - 1) as f64)];
        rec.extend(columns.iter().map(|c| format!("{:.10e}", c.1[k])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Traces `L_ij(1, ·)` and `L_ij(·, 0)` of every `L` entry.
pub fn l_traces(k: &ControllerKernels) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    for i in 0..k.l.rows {
        for j in 0..k.l.cols {
            out.push((format!("L{}{}_x1", i + 1, j + 1), k.l.get(i, j).trace_x1()));
            out.push((format!("L{}{}_xi0", i + 1, j + 1), k.l.get(i, j).trace_xi0()));
        }
    }
    out
}

/// Profiles of one state as CSV: `x, u1.., v1..`.
pub fn write_snapshot_csv(path: &Path, hash: &str, state: &FieldState) -> Result<()> {
    let nx = state.nx();
    let mut cols = Vec::new();
    for (i, p) in state.u.iter().enumerate() {
        cols.push((format!("u{}", i + 1), p.clone()));
    }
    for (j, p) in state.v.iter().enumerate() {
        cols.push((format!("v{}", j + 1), p.clone()));
    }
    if cols.is_empty() || nx < 1 {
        return Err(Error::Dimension("empty state".into()));
    }
    write_traces_csv(path, &format!("{hash} t={}", state.t), &cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TriangularGrid;

    #[test]
    fn dump_round_trip() {
        let g = TriangularGrid::new(6).unwrap();
        let f = KernelField::from_fn(g, |x, xi| (x * 3.0).sin() - xi / 7.0);
        let fields = vec![DumpField::triangle("L", 2, 1, &f), DumpField::trace("G", 2, 1, &[0.1, 1.0 / 3.0, -2.5e-17])];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.dump");
        write_kernel_dump(&p, "abc", &fields).unwrap();
        let (hash, back) = read_kernel_dump(&p).unwrap();
        assert_eq!(hash, "abc");
        assert_eq!(back, fields);
        assert_eq!(back[0].at(6, 3), f.at(6, 3));
    }

    #[test]
    fn malformed_dumps_rejected() {
        assert!(parse_kernel_dump("field L 1 1 triangle 2\n1 2\n").is_err());
        assert!(parse_kernel_dump("1 2 3\n").is_err());
        assert!(parse_kernel_dump("field L 1 1 blob 2\n").is_err());
        assert!(parse_kernel_dump("field G 1 1 trace 1\n1 2 3\n").is_err());
    }

    #[test]
    fn traces_csv_has_hash_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_traces_csv(&p, "h", &[("a".into(), vec![0.0, 1.0, 2.0])]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# config-hash h\nx,a\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
