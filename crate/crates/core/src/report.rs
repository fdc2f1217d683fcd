//! Tab-separated, field-tagged text shared by selection reports and the
//! baseline sweeps, so their traces line up side by side.
//!
//! A trace is a block
//!
//! ```text
//! trace<TAB><method><TAB><rows>
//! candidate<TAB><parameter><TAB><subset size><TAB><accuracy>
//! ...
//! ```
//!
//! where `parameter` is whatever the method tunes (an error-rate threshold,
//! a correlation cutoff, a component count, an elimination round).

use std::fmt::Write as _;

use crate::data::fmt_f64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub parameter: String,
    pub subset_size: usize,
    pub accuracy: f64,
}

pub fn write_trace(out: &mut String, method: &str, rows: &[TraceRow]) {
    let _ = writeln!(out, "trace\t{method}\t{}", rows.len());
    for r in rows {
        let _ = writeln!(
            out,
            "candidate\t{}\t{}\t{}",
            r.parameter,
            r.subset_size,
            fmt_f64(r.accuracy)
        );
    }
}

pub fn parse_trace<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<(String, Vec<TraceRow>)> {
    let (no, head) = lines.next().ok_or_else(|| Error::parse(0, "missing trace header"))?;
    let f: Vec<&str> = head.split('\t').collect();
    if f.len() != 3 || f[0] != "trace" {
        return Err(Error::parse(no, format!("expected trace header, found {head:?}")));
    }
    let count: usize = f[2].parse().map_err(|_| Error::parse(no, "bad trace length"))?;
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let (no, line) = lines.next().ok_or_else(|| Error::parse(no, "truncated trace"))?;
        let g: Vec<&str> = line.split('\t').collect();
        if g.len() != 4 || g[0] != "candidate" {
            return Err(Error::parse(no, format!("expected candidate row, found {line:?}")));
        }
        rows.push(TraceRow {
            parameter: g[1].to_string(),
            subset_size: g[2].parse().map_err(|_| Error::parse(no, "bad subset size"))?,
            accuracy: g[3].parse().map_err(|_| Error::parse(no, "bad accuracy"))?,
        });
    }
    Ok((f[1].to_string(), rows))
}
