//! Versioned JSON files: construction specs, configurations, certificates
//! and limit-set clouds.
//!
//! Every document is an object with a top-level `"version"` key. Keys are
//! written in sorted order so files are byte-for-byte reproducible, and
//! floats round-trip exactly.

use crate::construction::{Configuration, ConstructionCertificate, ConstructionSpec};
use crate::error::IoError;
use crate::kleinian::LimitSetCloud;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A document type with a fixed schema version.
pub trait Document: Serialize + DeserializeOwned {
    const KIND: &'static str;
    const VERSION: u32;
    /// Indented output; large point clouds are written compactly.
    const PRETTY: bool = true;

    /// Semantic checks run after a successful parse.
    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

impl Document for ConstructionSpec {
    const KIND: &'static str = "spec";
    const VERSION: u32 = 1;
    fn check(&self) -> Result<(), String> {
        self.validate().map_err(|e| e.to_string())
    }
}

impl Document for Configuration {
    const KIND: &'static str = "configuration";
    const VERSION: u32 = 1;
    fn check(&self) -> Result<(), String> {
        self.spec.validate().map_err(|e| e.to_string())?;
        if self.layout.n != self.spec.n {
            return Err(format!("layout has {} bands but spec has n = {}", self.layout.n, self.spec.n));
        }
        if self.stations.is_empty() {
            return Err("no stations".into());
        }
        Ok(())
    }
}

impl Document for ConstructionCertificate {
    const KIND: &'static str = "certificate";
    const VERSION: u32 = 1;
}

impl Document for LimitSetCloud {
    const KIND: &'static str = "cloud";
    const VERSION: u32 = 1;
    const PRETTY: bool = false;
    fn check(&self) -> Result<(), String> {
        if !(self.prune_tol > 0.0) {
            return Err(format!("prune_tol must be positive, got {}", self.prune_tol));
        }
        if let Some(i) = self.points.iter().position(|p| !((p.norm() - 1.0).abs() < 1e-6)) {
            return Err(format!("point {i} is not on the unit sphere"));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Deserialize)]
struct VersionOnly {
    version: Option<u32>,
}

fn malformed(e: serde_json::Error) -> IoError {
    IoError::Malformed { line: e.line(), column: e.column(), msg: e.to_string() }
}

/// Serialize with sorted keys and a trailing newline.
pub fn to_string<T: Document>(doc: &T) -> Result<String, IoError> {
    let v = serde_json::to_value(Envelope { version: T::VERSION, body: doc })
        .map_err(|e| IoError::Invalid { kind: T::KIND.into(), msg: e.to_string() })?;
    // serde_json's default Map is a BTreeMap, so keys come out sorted.
    let mut s = if T::PRETTY { serde_json::to_string_pretty(&v) } else { serde_json::to_string(&v) }
        .expect("a Value always serializes");
    s.push('\n');
    Ok(s)
}

pub fn from_str<T: Document>(s: &str) -> Result<T, IoError> {
    let head: VersionOnly = serde_json::from_str(s).map_err(malformed)?;
    match head.version {
        Some(v) if v == T::VERSION => {}
        Some(v) => return Err(IoError::Version { kind: T::KIND.into(), found: v, expected: T::VERSION }),
        None => return Err(IoError::Invalid { kind: T::KIND.into(), msg: "missing \"version\" field".into() }),
    }
    // Parse again from text (not from a Value) so field errors keep their location.
    let env: Envelope<T> = serde_json::from_str(s).map_err(malformed)?;
    env.body.check().map_err(|msg| IoError::Invalid { kind: T::KIND.into(), msg })?;
    Ok(env.body)
}

pub fn write<T: Document>(path: impl AsRef<Path>, doc: &T) -> Result<(), IoError> {
    std::fs::write(path, to_string(doc)?)?;
    Ok(())
}

pub fn read<T: Document>(path: impl AsRef<Path>) -> Result<T, IoError> {
    from_str(&std::fs::read_to_string(path)?)
}

pub fn read_spec(path: impl AsRef<Path>) -> Result<ConstructionSpec, IoError> {
    read(path)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<Configuration, IoError> {
    read(path)
}

pub fn read_certificate(path: impl AsRef<Path>) -> Result<ConstructionCertificate, IoError> {
    read(path)
}

pub fn read_cloud(path: impl AsRef<Path>) -> Result<LimitSetCloud, IoError> {
    read(path)
}
