//! Chain files: one chain per line, mention ids separated by tabs. Lines
//! starting with `#` carry metadata and are skipped on read.

use std::path::Path;

use crate::corpus::Clustering;
use crate::error::{Error, Result};

/// Canonical text: members sorted, chains ordered by smallest member.
pub fn format_chains(c: &Clustering, header: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    for chain in c.canonical().chains {
        out.push_str(&chain.join("\t"));
        out.push('\n');
    }
    out
}

pub fn write_chains(path: impl AsRef<Path>, c: &Clustering, header: &[(&str, String)]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_chains(c, header)).map_err(|e| Error::io(path, e))
}

pub fn parse_chains(text: &str) -> Result<Clustering> {
    let mut chains = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let chain: Vec<String> = line.split('\t').map(str::to_string).collect();
        if chain.iter().any(|id| id.is_empty()) {
            return Err(Error::parse(i + 1, "empty mention id"));
        }
        chains.push(chain);
    }
    let c = Clustering::new(chains);
    c.validate()?;
    Ok(c)
}

pub fn read_chains(path: impl AsRef<Path>) -> Result<Clustering> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_chains(&text)
}
