use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use num_rational::Ratio;
use serde::Serialize;

pub const SCHEMA: &str = "lcc-lab/v1";
pub const CSV_SCHEMA: &str = "v1";

/// Writes pretty JSON to `path`, or to stdout.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

/// Writes a header plus one line per row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().with_context(|| format!("writing {}", path.display()))
}

/// Parses "p/q" or a decimal such as "0.25" into an exact fraction.
pub fn parse_fraction(text: &str) -> Result<Ratio<u64>> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: u64 = p.trim().parse().with_context(|| format!("bad numerator in {text:?}"))?;
        let q: u64 = q.trim().parse().with_context(|| format!("bad denominator in {text:?}"))?;
        if q == 0 {
            bail!("zero denominator in {text:?}");
        }
        return Ok(Ratio::new(p, q));
    }
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
        bail!("cannot read {text:?} as a fraction");
    }
    let whole: u64 = if whole.is_empty() {
        0
    } else {
        whole.parse().with_context(|| format!("cannot read {text:?} as a fraction"))?
    };
    let scale = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse()? };
    let numer = whole
        .checked_mul(scale)
        .and_then(|w| w.checked_add(frac))
        .with_context(|| format!("{text:?} is too large"))?;
    Ok(Ratio::new(numer, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions() {
        assert_eq!(parse_fraction("1/6").unwrap(), Ratio::new(1, 6));
        assert_eq!(parse_fraction("0.25").unwrap(), Ratio::new(1, 4));
        assert_eq!(parse_fraction("1").unwrap(), Ratio::new(1, 1));
        assert_eq!(parse_fraction(".5").unwrap(), Ratio::new(1, 2));
        assert!(parse_fraction("1/0").is_err());
        assert!(parse_fraction("abc").is_err());
        assert!(parse_fraction("-0.5").is_err());
    }
}
