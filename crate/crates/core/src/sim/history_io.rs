//! JSON-lines history files: a header line, then one operation per line.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AfterScript, Config, CrashSpec, Links, Policy, Protocol, RunOutput};
use crate::codec::Value;
use crate::types::{ClientId, History, OperationRecord, RunEnd};

pub const FORMAT: &str = "ecreg-history/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryHeader {
    pub format: String,
    pub protocol: Protocol,
    pub n: usize,
    pub f: usize,
    pub k: usize,
    pub d_bits: u64,
    pub policy: String,
    #[serde(default = "fifo")]
    pub links: Links,
    pub seed: u64,
    pub steps: u64,
    pub end: RunEnd,
    pub initial: Value,
    pub crashes: Vec<CrashSpec>,
    pub crashed_clients: Vec<ClientId>,
    pub crashed_objects: Vec<usize>,
}

impl HistoryHeader {
    pub fn for_run(config: &Config, out: &RunOutput) -> Self {
        Self {
            format: FORMAT.to_string(),
            protocol: config.protocol,
            n: config.n,
            f: config.f,
            k: config.k,
            d_bits: config.d_bits,
            policy: config.policy.name().to_string(),
            links: config.links,
            seed: config.seed,
            steps: out.history.steps,
            end: out.history.end,
            initial: out.history.initial.clone(),
            crashes: config.crashes.clone(),
            crashed_clients: out.history.crashed_clients.iter().copied().collect(),
            crashed_objects: out.trace.meta.crashed_objects.clone(),
        }
    }
}

impl HistoryHeader {
    /// The run parameters recorded in the header; client scripts are not kept.
    pub fn to_config(&self) -> Config {
        let mut c = Config::new(self.protocol, self.n, self.f, self.k);
        c.d_bits = self.d_bits;
        c.seed = self.seed;
        c.links = self.links;
        c.crashes = self.crashes.clone();
        c.policy = match self.policy.as_str() {
            "scripted" => Policy::Scripted {
                steps: Vec::new(),
                after: AfterScript::Stop,
            },
            name => name.parse().unwrap_or(Policy::FairRandom),
        };
        c
    }
}

fn fifo() -> Links {
    Links::Fifo
}

#[derive(Debug, Error)]
pub enum HistoryIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("empty history file")]
    Empty,
    #[error("unsupported history format {0:?}")]
    Format(String),
    #[error("line {line}: operation id {id} out of order")]
    OpOrder { line: usize, id: usize },
}

pub fn write_history<W: Write>(
    mut w: W,
    header: &HistoryHeader,
    history: &History,
) -> Result<(), HistoryIoError> {
    let line = |e| HistoryIoError::Json { line: 0, source: e };
    serde_json::to_writer(&mut w, header).map_err(line)?;
    writeln!(w)?;
    for op in &history.ops {
        serde_json::to_writer(&mut w, op).map_err(line)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history<R: BufRead>(r: R) -> Result<(HistoryHeader, History), HistoryIoError> {
    let mut lines = r
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let (_, first) = lines.next().ok_or(HistoryIoError::Empty)?;
    let header: HistoryHeader =
        serde_json::from_str(&first?).map_err(|e| HistoryIoError::Json { line: 1, source: e })?;
    if header.format != FORMAT {
        return Err(HistoryIoError::Format(header.format));
    }
    let mut ops = Vec::new();
    for (i, l) in lines {
        let op: OperationRecord = serde_json::from_str(&l?).map_err(|e| HistoryIoError::Json {
            line: i + 1,
            source: e,
        })?;
        if op.id != ops.len() {
            return Err(HistoryIoError::OpOrder {
                line: i + 1,
                id: op.id,
            });
        }
        ops.push(op);
    }
    let history = History {
        initial: header.initial.clone(),
        ops,
        steps: header.steps,
        end: header.end,
        crashed_clients: header
            .crashed_clients
            .iter()
            .copied()
            .collect::<BTreeSet<_>>(),
    };
    Ok((header, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::ClientProgram;
    use crate::sim::run;

    #[test]
    fn round_trip() {
        let mut c = Config::new(Protocol::Regular, 4, 1, 2);
        c.d_bits = 64;
        c.clients = vec![
            ClientProgram::writer(1, 2),
            ClientProgram::reader(2, 2),
            ClientProgram::writer(3, 1),
        ];
        c.crashes = vec!["c3:4".parse().unwrap()];
        c.seed = 3;
        let out = run(&c).unwrap();
        let header = HistoryHeader::for_run(&c, &out);
        let mut buf = Vec::new();
        write_history(&mut buf, &header, &out.history).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), out.history.ops.len() + 1);
        assert!(text.contains("\"OUTSTANDING\""));
        let (h2, hist2) = read_history(&buf[..]).unwrap();
        assert_eq!(h2, header);
        assert_eq!(hist2, out.history);
        let back = h2.to_config();
        assert_eq!(
            (back.protocol, back.n, back.seed, back.policy),
            (c.protocol, c.n, c.seed, c.policy)
        );
    }

    #[test]
    fn rejects_foreign_format() {
        let bad = br#"{"format":"other"}"#;
        assert!(read_history(&bad[..]).is_err());
        assert!(matches!(read_history(&b""[..]), Err(HistoryIoError::Empty)));
    }
}
