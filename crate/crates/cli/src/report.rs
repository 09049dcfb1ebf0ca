// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON outputs. Every CSV ends with one `# {json}` line holding
//! the run metadata.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

pub const GIT_HASH: &str = env!("PLACERL_GIT_HASH");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub command: String,
    pub git: String,
    pub config_digest: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &str, config_digest: String, seed: u64) -> Self {
        Meta {
            command: command.into(),
            git: GIT_HASH.into(),
            config_digest,
            seed,
        }
    }
}

pub fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: &[R], meta: &Meta) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let mut bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
    writeln!(bytes, "# {}", serde_json::to_string(meta)?)?;
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Pretty JSON with the metadata under `"meta"`.
pub fn write_json<S: Serialize>(path: &Path, body: &S, meta: &Meta) -> anyhow::Result<()> {
    let mut v = serde_json::to_value(body)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("meta".into(), serde_json::to_value(meta)?);
    }
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Splits a CSV written by [`write_csv`] into its body and metadata.
pub fn split_metadata(text: &str) -> Option<(&str, serde_json::Value)> {
    let body = text.trim_end_matches('\n');
    let cut = body.rfind('\n')?;
    let meta = body[cut + 1..].strip_prefix("# ")?;
    Some((&text[..cut + 1], serde_json::from_str(meta).ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_rows_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        let meta = Meta::new("place", "abc".into(), 7);
        write_csv(&p, &["a", "b"], &[(1, 2.5), (2, -1.0)], &meta).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let (body, m) = split_metadata(&text).unwrap();
        assert_eq!(body, "a,b\n1,2.5\n2,-1.0\n");
        assert_eq!(m["seed"], 7);
        assert_eq!(m["config_digest"], "abc");
        assert_eq!(m["git"], GIT_HASH);
    }

    #[test]
    fn empty_csv_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv::<(u8,)>(&p, &["a"], &[], &Meta::new("t", "d".into(), 0)).unwrap();
        assert!(fs::read_to_string(&p).unwrap().starts_with("a\n# {"));
    }
}
