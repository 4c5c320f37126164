//! Line-oriented `key = value` text with `#` comments.
//!
//! Used for run configuration files and for the configuration section
//! embedded in checkpoints.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    /// 1-based source line, 0 for entries not read from text.
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got `{}`", i + 1, raw.trim()))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::Config(format!(
                "line {}: key `{key}` already set on line {}",
                i + 1,
                prev.line
            )));
        }
        out.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

pub fn render<'a>(entries: impl IntoIterator<Item = (&'a str, String)>) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

/// A configuration struct that can be set key by key.
pub trait KeyValue {
    /// Applies one key; `Ok(false)` when the key belongs to someone else.
    fn set(&mut self, key: &str, value: &str) -> Result<bool>;

    /// Every key with its current value, in a fixed order.
    fn entries(&self) -> Vec<(&'static str, String)>;
}

pub fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{value}`")))
}

pub fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("key `{key}`: expected a boolean, got `{value}`"))),
    }
}

/// Applies every entry to the first target that claims it; any key no
/// target recognizes is an error.
pub fn apply(entries: &[Entry], targets: &mut [&mut dyn KeyValue]) -> Result<()> {
    'entries: for e in entries {
        for t in targets.iter_mut() {
            let claimed = t.set(&e.key, &e.value).map_err(|err| match err {
                Error::Config(m) if e.line > 0 => Error::Config(format!("line {}: {m}", e.line)),
                other => other,
            })?;
            if claimed {
                continue 'entries;
            }
        }
        let at = if e.line > 0 {
            format!("line {}: ", e.line)
        } else {
            String::new()
        };
        return Err(Error::Config(format!("{at}unknown key `{}`", e.key)));
    }
    Ok(())
}
