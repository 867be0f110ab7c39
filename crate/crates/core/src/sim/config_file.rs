//! Plain-text run descriptions.
//!
//! ```text
//! # comments start with '#'
//! protocol = regular
//! n = 6
//! f = 1
//! k = 4
//! d_bits = 1024
//! seed = 7
//! policy = fair            # fair | ad | fifo
//! steps = 100000
//! links = fifo             # fifo | unordered
//! max_read_rounds = 50
//! fairness_window = 64
//! crash = o2:40            # repeatable; o<object>:<step> or c<client>:<step>
//! client 1 w w w           # w = fresh value, w:<hex> = given bytes, r = read
//! client 2 repeat r        # 'repeat' loops the script forever
//! ```

use thiserror::Error;

use super::{Config, Protocol};
use crate::client::{ClientProgram, ScriptOp};
use crate::codec::Value;
use crate::types::ClientId;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError {
        line,
        msg: format!("{key}: cannot parse {v:?}"),
    })
}

fn parse_client(line: usize, rest: &str) -> Result<ClientProgram, ConfigError> {
    let err = |msg: String| ConfigError { line, msg };
    let mut words = rest.split_whitespace();
    let id: u32 = parse_num(
        line,
        "client",
        words
            .next()
            .ok_or_else(|| err("client needs an id".into()))?,
    )?;
    let mut repeat = false;
    let mut script = Vec::new();
    for w in words {
        match w {
            "repeat" if script.is_empty() => repeat = true,
            "w" => script.push(ScriptOp::Write),
            "r" => script.push(ScriptOp::Read),
            _ => {
                let hex = w
                    .strip_prefix("w:")
                    .ok_or_else(|| err(format!("unknown operation {w:?}")))?;
                let bytes = hex::decode(hex).map_err(|e| err(format!("bad hex in {w:?}: {e}")))?;
                let v = Value::new(bytes).map_err(|e| err(format!("bad value {w:?}: {e}")))?;
                script.push(ScriptOp::WriteValue(v));
            }
        }
    }
    Ok(ClientProgram {
        id: ClientId(id),
        script,
        repeat,
    })
}

/// Parses a run description. Keys not given keep the defaults of [`Config::new`].
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut config = Config::new(Protocol::Regular, 0, 0, 0);
    let mut seen_nfk = [false; 3];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("client ") {
            config.clients.push(parse_client(line, rest)?);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| ConfigError {
                line,
                msg: format!("expected key = value, got {content:?}"),
            })?;
        let err = |msg: String| ConfigError { line, msg };
        match key {
            "protocol" => config.protocol = value.parse().map_err(err)?,
            "n" => {
                config.n = parse_num(line, key, value)?;
                seen_nfk[0] = true;
            }
            "f" => {
                config.f = parse_num(line, key, value)?;
                seen_nfk[1] = true;
            }
            "k" => {
                config.k = parse_num(line, key, value)?;
                seen_nfk[2] = true;
            }
            "d_bits" => config.d_bits = parse_num(line, key, value)?,
            "seed" => config.seed = parse_num(line, key, value)?,
            "policy" => config.policy = value.parse().map_err(err)?,
            "steps" => config.step_limit = parse_num(line, key, value)?,
            "links" => config.links = value.parse().map_err(err)?,
            "max_read_rounds" => config.max_read_rounds = Some(parse_num(line, key, value)?),
            "fairness_window" => config.fairness_window = parse_num(line, key, value)?,
            "crash" => config.crashes.push(value.parse().map_err(err)?),
            _ => return Err(err(format!("unknown key {key:?}"))),
        }
    }
    if seen_nfk != [true; 3] {
        return Err(ConfigError {
            line: 0,
            msg: "n, f and k are required".into(),
        });
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Component, Links, Policy};

    #[test]
    fn parses_a_full_description() {
        let text = "\
# demo
protocol = safe
n = 6
f = 1
k = 4
d_bits = 16
seed = 9
policy = ad
steps = 500
links = unordered
max_read_rounds = 7
crash = o2:40
crash = c3:10   # trailing comment
client 1 w w:0a0b r
client 3 repeat w
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.protocol, Protocol::Safe);
        assert_eq!(
            (c.n, c.f, c.k, c.d_bits, c.seed, c.step_limit),
            (6, 1, 4, 16, 9, 500)
        );
        assert_eq!(c.policy, Policy::AdversaryAd);
        assert_eq!(c.links, Links::Unordered);
        assert_eq!(c.max_read_rounds, Some(7));
        assert_eq!(c.crashes.len(), 2);
        assert_eq!(c.crashes[0].component, Component::Object(2));
        assert_eq!(c.clients.len(), 2);
        assert_eq!(
            c.clients[0].script[1],
            ScriptOp::WriteValue(Value::new(vec![10, 11]).unwrap())
        );
        assert!(c.clients[1].repeat);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_config("n = 4\nf = one\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_config("n = 4\nf = 1\nk = 2\nclient 1 x\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(parse_config("n = 4\n").is_err());
        assert!(parse_config("bogus = 1\n").is_err());
    }
}
