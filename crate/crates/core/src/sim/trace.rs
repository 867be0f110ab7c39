//! Per-step storage records and their CSV form.
//!
//! Columns, in order: `step,total_bits,obj1..objN,C,Cplus,Cminus,F_size,
//! F_members,attributed_bits,writes_returned`. Bit columns hold exact
//! idealized sizes (`N` or `N/d`), `F_members` is a `;`-separated list of
//! object indices. The file starts with `#`-prefixed `key=value` metadata
//! lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Protocol;
use crate::storage::{chunks_bits, format_bits, parse_bits, Bits};
use crate::types::RunEnd;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub protocol: Protocol,
    pub n: usize,
    pub f: usize,
    pub k: usize,
    pub d_bits: u64,
    pub end: RunEnd,
    /// 1-based indices of objects that crashed during the run.
    pub crashed_objects: Vec<usize>,
    /// Writes still outstanding when the run ended, of crashed clients included.
    pub outstanding_writes: usize,
    pub notes: Vec<String>,
}

impl TraceMeta {
    pub fn live_objects(&self) -> usize {
        self.n - self.crashed_objects.len()
    }
}

/// Storage and set sizes after one step (step 0 is the initial configuration).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageRow {
    pub step: u64,
    /// Chunks stored by each object, index 0 for object 1.
    pub chunks: Vec<u32>,
    pub c: u32,
    pub c_plus: u32,
    pub c_minus: u32,
    pub f_members: Vec<usize>,
    pub attributed_chunks: u64,
    pub writes_returned: u64,
}

impl StorageRow {
    pub fn total_chunks(&self) -> u64 {
        self.chunks.iter().map(|&c| u64::from(c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageTrace {
    pub meta: TraceMeta,
    pub rows: Vec<StorageRow>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad metadata line {0:?}")]
    Meta(String),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

impl StorageTrace {
    pub fn total_bits(&self, row: &StorageRow) -> Bits {
        chunks_bits(row.total_chunks(), self.meta.d_bits, self.meta.k)
    }

    pub fn object_bits(&self, row: &StorageRow, object: usize) -> Bits {
        chunks_bits(
            u64::from(row.chunks[object - 1]),
            self.meta.d_bits,
            self.meta.k,
        )
    }

    /// Storage of the objects that did not crash.
    pub fn live_bits(&self, row: &StorageRow) -> Bits {
        let live: u64 = row
            .chunks
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.meta.crashed_objects.contains(&(i + 1)))
            .map(|(_, &c)| u64::from(c))
            .sum();
        chunks_bits(live, self.meta.d_bits, self.meta.k)
    }

    pub fn attributed_bits(&self, row: &StorageRow) -> Bits {
        chunks_bits(row.attributed_chunks, self.meta.d_bits, self.meta.k)
    }

    pub fn max_total_bits(&self) -> Bits {
        self.rows
            .iter()
            .map(|r| self.total_bits(r))
            .max()
            .unwrap_or_default()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["step".to_string(), "total_bits".to_string()];
        h.extend((1..=self.meta.n).map(|i| format!("obj{i}")));
        h.extend(
            [
                "C",
                "Cplus",
                "Cminus",
                "F_size",
                "F_members",
                "attributed_bits",
                "writes_returned",
            ]
            .map(String::from),
        );
        h
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        let m = &self.meta;
        writeln!(out, "# protocol={}", m.protocol)?;
        writeln!(out, "# n={} f={} k={} d_bits={}", m.n, m.f, m.k, m.d_bits)?;
        writeln!(out, "# end={}", m.end)?;
        writeln!(out, "# crashed_objects={}", join(&m.crashed_objects))?;
        writeln!(out, "# outstanding_writes={}", m.outstanding_writes)?;
        for note in &m.notes {
            writeln!(out, "# note={note}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = vec![row.step.to_string(), format_bits(self.total_bits(row))];
            rec.extend((1..=m.n).map(|i| format_bits(self.object_bits(row, i))));
            rec.extend([
                row.c.to_string(),
                row.c_plus.to_string(),
                row.c_minus.to_string(),
                row.f_members.len().to_string(),
                join(&row.f_members),
                format_bits(self.attributed_bits(row)),
                row.writes_returned.to_string(),
            ]);
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut meta_lines = Vec::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            match line.strip_prefix('#') {
                Some(m) => meta_lines.push(m.trim().to_string()),
                None => {
                    body.push_str(&line);
                    body.push('\n');
                }
            }
        }
        let meta = parse_meta(&meta_lines)?;
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let n = meta.n;
        let chunk = chunks_bits(1, meta.d_bits, meta.k);
        let to_chunks = |b: Bits, row: usize| -> Result<u64, TraceError> {
            let q = b / chunk;
            if q.is_integer() {
                Ok(q.to_integer())
            } else {
                Err(TraceError::Row {
                    row,
                    msg: format!("{} is not a whole number of chunks", format_bits(b)),
                })
            }
        };
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| {
                rec.get(j).ok_or(TraceError::Row {
                    row: i,
                    msg: format!("missing column {j}"),
                })
            };
            let int = |j: usize| -> Result<u64, TraceError> {
                field(j)?.parse().map_err(|_| TraceError::Row {
                    row: i,
                    msg: format!("column {j} is not an integer"),
                })
            };
            let bits = |j: usize| -> Result<Bits, TraceError> {
                parse_bits(field(j)?).ok_or(TraceError::Row {
                    row: i,
                    msg: format!("column {j} is not a bit count"),
                })
            };
            let mut chunks = Vec::with_capacity(n);
            for o in 0..n {
                chunks.push(to_chunks(bits(2 + o)?, i)? as u32);
            }
            let base = 2 + n;
            let f_members =
                parse_list(field(base + 4)?).map_err(|msg| TraceError::Row { row: i, msg })?;
            let row = StorageRow {
                step: int(0)?,
                chunks,
                c: int(base)? as u32,
                c_plus: int(base + 1)? as u32,
                c_minus: int(base + 2)? as u32,
                f_members,
                attributed_chunks: to_chunks(bits(base + 5)?, i)?,
                writes_returned: int(base + 6)?,
            };
            if to_chunks(bits(1)?, i)? != row.total_chunks() {
                return Err(TraceError::Row {
                    row: i,
                    msg: "total_bits disagrees with object columns".into(),
                });
            }
            if int(base + 3)? as usize != row.f_members.len() {
                return Err(TraceError::Row {
                    row: i,
                    msg: "F_size disagrees with F_members".into(),
                });
            }
            rows.push(row);
        }
        Ok(StorageTrace { meta, rows })
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| format!("bad list entry {x:?}"))
        })
        .collect()
}

fn parse_meta(lines: &[String]) -> Result<TraceMeta, TraceError> {
    let mut protocol = None;
    let (mut n, mut f, mut k, mut d) = (None, None, None, None);
    let mut end = None;
    let mut crashed = Vec::new();
    let mut outstanding = 0;
    let mut notes = Vec::new();
    let bad = |l: &str| TraceError::Meta(l.to_string());
    for line in lines {
        if let Some(note) = line.strip_prefix("note=") {
            notes.push(note.to_string());
            continue;
        }
        for kv in line.split_whitespace() {
            let (key, val) = kv.split_once('=').ok_or_else(|| bad(line))?;
            match key {
                "protocol" => protocol = Some(val.parse::<Protocol>().map_err(|_| bad(line))?),
                "n" => n = val.parse().ok(),
                "f" => f = val.parse().ok(),
                "k" => k = val.parse().ok(),
                "d_bits" => d = val.parse().ok(),
                "end" => {
                    end = Some(match val {
                        "quiescent" => RunEnd::Quiescent,
                        "stalled" => RunEnd::Stalled,
                        "truncated" => RunEnd::Truncated,
                        _ => return Err(bad(line)),
                    })
                }
                "crashed_objects" => crashed = parse_list(val).map_err(|_| bad(line))?,
                "outstanding_writes" => outstanding = val.parse().map_err(|_| bad(line))?,
                _ => return Err(bad(line)),
            }
        }
    }
    let missing = |what: &str| TraceError::Meta(format!("missing {what}"));
    Ok(TraceMeta {
        protocol: protocol.ok_or_else(|| missing("protocol"))?,
        n: n.ok_or_else(|| missing("n"))?,
        f: f.ok_or_else(|| missing("f"))?,
        k: k.ok_or_else(|| missing("k"))?,
        d_bits: d.ok_or_else(|| missing("d_bits"))?,
        end: end.ok_or_else(|| missing("end"))?,
        crashed_objects: crashed,
        outstanding_writes: outstanding,
        notes,
    })
}
