//! Output writers: CSV and a compact little-endian binary dump for path
//! ensembles, JSON envelopes for everything else. All floating-point text
//! uses 17 significant digits so values round-trip exactly.

use std::io::Write;
use std::path::Path;

use affine2f::sampler::{PathEnsemble, Scheme};
use affine2f::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// 17-significant-digit rendering (round-trip exact for f64).
pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV schema: comment line with the config hash, then
/// `t,path_0_y,path_0_x,...`, one row per grid time.
pub fn ensemble_csv(ensemble: &PathEnsemble, config_hash: &str) -> String {
    let times = ensemble.grid.times();
    let n_paths = ensemble.n_paths();
    let mut out = String::new();
    out.push_str(&format!("# config_hash={config_hash}\n"));
    out.push('t');
    for k in 0..n_paths {
        out.push_str(&format!(",path_{k}_y,path_{k}_x"));
    }
    out.push('\n');
    for (row, t) in times.iter().enumerate() {
        out.push_str(&g17(*t));
        for k in 0..n_paths {
            out.push(',');
            out.push_str(&g17(ensemble.y[k][row]));
            out.push(',');
            out.push_str(&g17(ensemble.x[k][row]));
        }
        out.push('\n');
    }
    out
}

/// Binary dump: magic `A2FB`, u32 schema version, 8-byte config-hash prefix,
/// u64 n_paths, u64 n_steps, f64 t_end, u64 seed, u8 scheme (0 = exact,
/// 1 = euler), params (a, b, m, theta, alpha) as f64, then the `y` matrix
/// and the `x` matrix row-major (paths x (n_steps+1)), all little-endian.
pub fn ensemble_binary(ensemble: &PathEnsemble, config_hash: &str) -> Vec<u8> {
    let n_paths = ensemble.n_paths() as u64;
    let n_steps = ensemble.grid.n_steps() as u64;
    let mut out = Vec::with_capacity(64 + 16 * (n_paths * (n_steps + 1)) as usize);
    out.extend_from_slice(b"A2FB");
    out.extend_from_slice(&SCHEMA_VERSION.to_le_bytes());
    let mut hash_bytes = [0u8; 8];
    for (i, chunk) in config_hash.as_bytes().chunks(2).take(8).enumerate() {
        hash_bytes[i] =
            u8::from_str_radix(std::str::from_utf8(chunk).unwrap_or("00"), 16).unwrap_or(0);
    }
    out.extend_from_slice(&hash_bytes);
    out.extend_from_slice(&n_paths.to_le_bytes());
    out.extend_from_slice(&n_steps.to_le_bytes());
    out.extend_from_slice(&ensemble.grid.t_end().to_le_bytes());
    out.extend_from_slice(&ensemble.master_seed.to_le_bytes());
    out.push(match ensemble.scheme {
        Scheme::Exact => 0,
        Scheme::Euler => 1,
    });
    for v in [
        ensemble.params.a(),
        ensemble.params.b(),
        ensemble.params.m(),
        ensemble.params.theta(),
        ensemble.params.alpha(),
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for matrix in [&ensemble.y, &ensemble.x] {
        for row in matrix.iter() {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// Wraps a JSON payload in the standard envelope.
pub fn json_envelope(
    command: &str,
    config_hash: &str,
    params: &affine2f::ModelParams,
    result: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config_hash": config_hash,
        "params": params,
        "result": result,
    })
}

/// Writes `bytes` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<Option<String>> {
    match path {
        Some(p) => {
            std::fs::write(p, bytes)
                .map_err(|e| Error::invalid(format!("cannot write {}: {e}", p.display())))?;
            Ok(Some(p.display().to_string()))
        }
        None => {
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Error::invalid(format!("cannot write stdout: {e}")))?;
            Ok(None)
        }
    }
}
