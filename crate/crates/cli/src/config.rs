//! Flat `key = value` config files. Flags given on the command line override
//! file values; keys a command does not read are rejected.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// key -> (value, line number)
    entries: BTreeMap<String, (String, usize)>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl ConfigFile {
    /// Lines are `key = value`; blank lines and lines starting with `#` are
    /// skipped. Values may be wrapped in double quotes.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::validation(format!("config line {line_no}: expected 'key = value'"))
            })?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(CliError::validation(format!("config line {line_no}: empty key")));
            }
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value)
                .to_string();
            if entries.insert(key.clone(), (value, line_no)).is_some() {
                return Err(CliError::validation(format!(
                    "config line {line_no}: duplicate key '{key}'"
                )));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(ConfigFile::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::validation(format!("cannot read config {}: {e}", p.display()))
                })?;
                Self::parse(&text)
            }
        }
    }

    /// Removes and parses `key`.
    pub fn take<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                CliError::validation(format!("config key '{key}' (line {line}): cannot parse '{v}'"))
            }),
        }
    }

    /// Flag value if given, otherwise the file value. The file entry is
    /// consumed either way.
    pub fn pick<T: FromStr>(&mut self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        let file = self.take(key)?;
        Ok(flag.or(file))
    }

    /// For boolean switches: set if either the flag or the file says so.
    pub fn pick_switch(&mut self, flag: bool, key: &str) -> CliResult<bool> {
        let file: Option<bool> = self.take(key)?;
        Ok(flag || file.unwrap_or(false))
    }

    /// Fails on the first key no command option consumed.
    pub fn finish(self) -> CliResult<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (_, line))) => {
                Err(CliError::validation(format!("unknown config key '{key}' (line {line})")))
            }
        }
    }
}

/// Comma-separated list, each item parsed with `parse`.
pub fn parse_list<T>(
    text: &str,
    what: &str,
    parse: impl Fn(&str) -> Result<T, pplasso::Error>,
) -> CliResult<Vec<T>> {
    let items: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).map_err(|e| CliError::validation(format!("{what}: {e}"))))
        .collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(CliError::validation(format!("{what}: empty list")));
    }
    Ok(items)
}
