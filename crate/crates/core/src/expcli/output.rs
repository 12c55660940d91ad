use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use crate::error::Result;

/// Write through a temporary sibling and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// First line of every CSV this crate writes.
pub fn digest_line(cfg: &ExperimentConfig) -> String {
    format!("# config_digest={} seed={}\n", cfg.digest(), cfg.seed)
}

/// Read the digest back from a CSV or JSON output file.
pub fn read_digest(text: &str) -> Option<String> {
    if let Some(rest) = text.strip_prefix("# config_digest=") {
        return rest.split_whitespace().next().map(str::to_string);
    }
    let v: Value = serde_json::from_str(text).ok()?;
    v.get("config_digest")?.as_str().map(str::to_string)
}

fn config_object(cfg: &ExperimentConfig) -> Value {
    let map = cfg
        .canonical()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
        .collect::<serde_json::Map<_, _>>();
    Value::Object(map)
}

/// Accumulates the files of one command invocation.
pub struct OutputSet<'a> {
    cfg: &'a ExperimentConfig,
    files: Vec<PathBuf>,
}

impl<'a> OutputSet<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        Self { cfg, files: Vec::new() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    /// `body` must start with its header row.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, &(digest_line(self.cfg) + body))?;
        self.files.push(path.clone());
        Ok(path)
    }

    /// JSON document `{config_digest, seed, command, config, <key>: payload}`.
    pub fn json<T: Serialize>(&mut self, name: &str, key: &str, payload: &T) -> Result<PathBuf> {
        let path = self.path(name);
        let mut doc = json!({
            "config_digest": self.cfg.digest(),
            "seed": self.cfg.seed,
            "command": self.cfg.command.name(),
            "config": config_object(self.cfg),
        });
        doc[key] = serde_json::to_value(payload)?;
        write_atomic(&path, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.files
    }
}
