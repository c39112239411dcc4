//! Flat `key=value` config files, flag/config/default resolution and run manifests.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::CliError;

/// Keys accepted in a config file. Flags use the same names.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "batch",
    "data",
    "det-floor",
    "embedding",
    "epochs",
    "hidden",
    "k-max",
    "k-step",
    "kind",
    "latent",
    "latent-dim",
    "log",
    "lr",
    "model",
    "n",
    "out",
    "samples",
    "seed",
    "standardize",
    "steps",
    "subsample",
    "suite",
    "target-fraction",
    "weight-decay",
    "what",
];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Blank lines and lines starting with `#` are skipped. Underscores in
    /// keys are read as dashes.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::new("config", format!("line {}: expected key=value, got {line:?}", i + 1)))?;
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::new("config", format!("line {}: unknown key {key:?}", i + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::new(
                    "config",
                    format!("line {}: duplicate key {key:?}", i + 1),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new("io", format!("reading config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Resolves each setting as flag, then config entry, then default, and
/// remembers the resolved values for the manifest.
pub struct Resolver<'a> {
    config: &'a ConfigFile,
    resolved: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(config: &'a ConfigFile) -> Self {
        Self {
            config,
            resolved: BTreeMap::new(),
        }
    }

    fn parse_value<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        raw.parse()
            .map_err(|e| CliError::new("config", format!("bad value {raw:?} for {key}: {e}")))
    }

    pub fn optional<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => self.config.get(key).map(|raw| self.parse_value(key, raw)).transpose()?,
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn value<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.optional(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| CliError::new("usage", format!("missing required setting --{key}")))
    }

    /// Repeatable flag; the config form is a comma-separated list.
    pub fn list(&mut self, key: &str, flags: Vec<String>) -> Result<Vec<String>, CliError> {
        let items: Vec<String> = if flags.is_empty() {
            self.config
                .get(key)
                .map(|s| {
                    s.split(',')
                        .map(|p| p.trim().to_string())
                        .filter(|p| !p.is_empty())
                        .collect()
                })
                .unwrap_or_default()
        } else {
            flags
        };
        if items.is_empty() {
            return Err(CliError::new("usage", format!("missing required setting --{key}")));
        }
        self.resolved.insert(key.to_string(), items.join(","));
        Ok(items)
    }

    pub fn finish(self) -> Resolved {
        Resolved { values: self.resolved }
    }
}

/// Settings actually used by a command, in key order.
pub struct Resolved {
    pub values: BTreeMap<String, String>,
}

impl Resolved {
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `dir/manifest.txt` for directory outputs, `<file>.manifest.txt` otherwise.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("manifest.txt")
    } else {
        let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".manifest.txt");
        out.with_file_name(name)
    }
}

pub fn write_manifest(
    path: &Path,
    command: &str,
    args: &[String],
    seed: u64,
    settings: &Resolved,
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let mut s = format!(
        "command {command}\nseed {seed}\nconfig_hash {}\nflags {}\n",
        settings.hash(),
        args.join(" ")
    );
    s.push_str("[settings]\n");
    s.push_str(&settings.canonical());
    s.push_str("[outputs]\n");
    for o in outputs {
        let bytes = std::fs::read(o).map_err(|e| CliError::new("io", format!("{}: {e}", o.display())))?;
        s.push_str(&format!("{} sha256={}\n", o.display(), hex(&Sha256::digest(&bytes))));
    }
    std::fs::write(path, s).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}
