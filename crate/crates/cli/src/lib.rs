//! Command-line front end: named scenarios, run/check/sweep commands and the
//! checks they apply.

pub mod audit;
pub mod commands;
pub mod scenario;

/// Parses `0,1,2`, `1..4` (exclusive) or `1..=4`, or a mix separated by commas.
pub fn parse_values(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad value {t:?} in {s:?}"))
        };
        if let Some((a, b)) = part.split_once("..=") {
            out.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = part.split_once("..") {
            out.extend(num(a)?..num(b)?);
        } else {
            out.push(num(part)?);
        }
    }
    if out.is_empty() {
        return Err(format!("no values in {s:?}"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::parse_values;

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("0,1,2").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_values("1..4").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_values("8,16..=17").unwrap(), vec![8, 16, 17]);
        assert!(parse_values("").is_err());
        assert!(parse_values("x").is_err());
    }
}
