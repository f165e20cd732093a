//! Layered configuration: a JSON file, overridden key by key by flags.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub const SEED_ENV: &str = "USABLE_INFO_SEED";

/// Bad invocation: maps to exit code 2 and prints the subcommand usage.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub struct Layered {
    value: Value,
}

impl Layered {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let value = match path {
            None => Value::Object(Map::new()),
            Some(p) => {
                let file = File::open(p).with_context(|| format!("opening config {}", p.display()))?;
                serde_json::from_reader(BufReader::new(file))
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
        };
        if !value.is_object() {
            return Err(usage("config file must hold a JSON object"));
        }
        Ok(Self { value })
    }

    /// Sets a dotted key (`pac.delta`) when `v` is present.
    pub fn set<T: Serialize>(&mut self, key: &str, v: Option<T>) {
        if let Some(v) = v {
            let v = serde_json::to_value(v).expect("flag values serialize");
            self.set_value(key, v);
        }
    }

    pub fn set_value(&mut self, key: &str, v: Value) {
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().expect("non-empty key");
        let mut node = &mut self.value;
        for p in parts {
            let obj = node.as_object_mut().expect("objects along config paths");
            node = obj.entry(p).or_insert_with(|| Value::Object(Map::new()));
            if !node.is_object() {
                *node = Value::Object(Map::new());
            }
        }
        node.as_object_mut().expect("object").insert(last.to_string(), v);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        key.split('.').try_fold(&self.value, |v, p| v.get(p)).filter(|v| !v.is_null())
    }

    pub fn get_mut(&mut self, key: &str) -> Option<&mut Value> {
        key.split('.').try_fold(&mut self.value, |v, p| v.get_mut(p))
    }

    pub fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn default_value<T: Serialize>(&mut self, key: &str, v: T) {
        if !self.has(key) {
            self.set(key, Some(v));
        }
    }

    /// Flag, then config file, then `USABLE_INFO_SEED`.
    pub fn resolve_seed(&mut self, key: &str, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = flag {
            self.set(key, Some(s));
            return Ok(s);
        }
        if let Some(v) = self.get(key) {
            return v
                .as_u64()
                .ok_or_else(|| usage(format!("config key {key:?} must be a non-negative integer")));
        }
        match std::env::var(SEED_ENV) {
            Ok(s) => {
                let seed: u64 = s
                    .trim()
                    .parse()
                    .map_err(|_| usage(format!("{SEED_ENV}={s:?} is not a non-negative integer")))?;
                self.set(key, Some(seed));
                Ok(seed)
            }
            Err(_) => Err(usage(format!("missing seed: pass --seed, set {key:?} in the config or set {SEED_ENV}"))),
        }
    }

    /// Replaces a string at `key` by the serialized form of its parsed value,
    /// so config files may use short names (`"linear_gaussian"`).
    pub fn expand<T, E>(&mut self, key: &str) -> Result<()>
    where
        T: std::str::FromStr<Err = E> + Serialize,
        E: fmt::Display,
    {
        if let Some(v) = self.get_mut(key) {
            expand_value::<T, E>(v)?;
        }
        Ok(())
    }

    /// Like [`Layered::expand`] for every element of an array.
    pub fn expand_each<T, E>(&mut self, key: &str) -> Result<()>
    where
        T: std::str::FromStr<Err = E> + Serialize,
        E: fmt::Display,
    {
        if let Some(Value::Array(items)) = self.get_mut(key) {
            for v in items {
                expand_value::<T, E>(v)?;
            }
        }
        Ok(())
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.value.clone()).map_err(|e| usage(format!("invalid configuration: {e}")))
    }

    pub fn parse_key<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self.get(key).cloned().unwrap_or(Value::Null);
        serde_json::from_value(v).map_err(|e| usage(format!("invalid {key:?}: {e}")))
    }

    pub fn into_value(self) -> Value {
        self.value
    }
}

fn expand_value<T, E>(v: &mut Value) -> Result<()>
where
    T: std::str::FromStr<Err = E> + Serialize,
    E: fmt::Display,
{
    if let Value::String(s) = v {
        let parsed: T = s.parse().map_err(|e: E| usage(e.to_string()))?;
        *v = serde_json::to_value(parsed)?;
    }
    Ok(())
}

/// Envelope for every JSON result file.
#[derive(Serialize)]
pub struct RunRecord<R: Serialize> {
    pub command: &'static str,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub duration_secs: f64,
    pub version: &'static str,
    pub results: R,
}

impl<R: Serialize> RunRecord<R> {
    pub fn new(command: &'static str, config: Value, seeds: Vec<u64>, started: Instant, results: R) -> Self {
        Self {
            command,
            config,
            seeds,
            duration_secs: started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION"),
            results,
        }
    }

    /// Pretty JSON to `path`, or stdout.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => {
                let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                let mut w = BufWriter::new(file);
                serde_json::to_writer_pretty(&mut w, self)?;
                writeln!(w)?;
                w.flush()?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut w = stdout.lock();
                serde_json::to_writer_pretty(&mut w, self)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// `<path>.<suffix>`, keeping the original extension.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
