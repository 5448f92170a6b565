//! Plain-text sweep configuration: `key = value` lines with `#` comments.
//!
//! Parsing is strict: unknown keys are rejected, values are range-checked,
//! and the parser never panics on malformed input (it is a fuzz target).
//!
//! Keys:
//!   protocol      = 1 | 2                      (required)
//!   scheme        = non-pauli | pauli | both   (required)
//!   distance      = 2 | 3 | 4                  (required)
//!   target        = A | coeff:re,im,re,im      (default A)
//!   tolerance     = infidelity threshold       (default 1e-6)
//!   restart_limit = attempts per until-accepted run (default 1000)
//!   p_s           = comma list in [0, 0.5]     (default 1e-3, 3e-3, 1e-2)
//!   shots         = trials per point           (default by distance:
//!                   2e5 / 5e4 / 1e4 for d = 2 / 3 / 4)
//!   seed          = master seed                (default 1)
//!   workers       = thread count, 0 = auto     (default 0)
//!   out           = output CSV path            (default: stdout)
//!   noise.split   = symmetric | a:b:c          (default symmetric)
//!   noise.p_t     = two-qubit hook probability (default 0)
//!   noise.p_r     = reset hook probability     (default 0)

use num_complex::Complex64;

use crate::algebra::target_a_amplitudes;
use crate::error::ConfigError;
use crate::noise::SplitSpec;
use crate::protocols::{ProtocolKind, Scheme};

/// Which logical state the initialization aims for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetSpec {
    /// `(|0>_L + e^{i pi/4} |1>_L)/sqrt(2)`.
    MagicA,
    /// Explicit normalized amplitude pair.
    Coeff(Complex64, Complex64),
}

impl TargetSpec {
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        match self {
            TargetSpec::MagicA => target_a_amplitudes(),
            TargetSpec::Coeff(a, b) => (*a, *b),
        }
    }
}

/// Fully validated sweep configuration.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub protocol: ProtocolKind,
    pub schemes: Vec<Scheme>,
    pub distance: usize,
    pub target: TargetSpec,
    pub tolerance: f64,
    pub restart_limit: u32,
    pub split: SplitSpec,
    pub p_t: f64,
    pub p_r: f64,
    pub p_s_values: Vec<f64>,
    pub shots: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub output_path: Option<String>,
}

/// Paper shot counts: smaller codes use fewer gates, so more shots are needed
/// for the same precision.
pub fn default_shots(distance: usize) -> u64 {
    match distance {
        2 => 200_000,
        3 => 50_000,
        _ => 10_000,
    }
}

/// Parse `A` or `coeff:re,im,re,im` into a normalized target.
pub fn parse_target_spec(value: &str) -> Result<TargetSpec, String> {
    let value = value.trim();
    if value == "A" || value == "a" {
        return Ok(TargetSpec::MagicA);
    }
    let Some(rest) = value.strip_prefix("coeff:") else {
        return Err("expected `A` or `coeff:re,im,re,im`".to_string());
    };
    let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 comma-separated numbers, got {}", parts.len()));
    }
    let mut nums = [0.0f64; 4];
    for (i, p) in parts.iter().enumerate() {
        nums[i] = p
            .parse::<f64>()
            .map_err(|e| format!("bad number `{p}`: {e}"))?;
        if !nums[i].is_finite() {
            return Err(format!("non-finite component `{p}`"));
        }
    }
    let alpha = Complex64::new(nums[0], nums[1]);
    let beta = Complex64::new(nums[2], nums[3]);
    let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    if norm < 1e-12 {
        return Err("target amplitudes are all zero".to_string());
    }
    Ok(TargetSpec::Coeff(alpha / norm, beta / norm))
}

/// Parse `symmetric` or `a:b:c` branch weights.
pub fn parse_split_spec(value: &str) -> Result<SplitSpec, String> {
    let value = value.trim();
    if value == "symmetric" {
        return Ok(SplitSpec::Symmetric);
    }
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected `symmetric` or `a:b:c`".to_string());
    }
    let mut w = [0.0f64; 3];
    for (i, p) in parts.iter().enumerate() {
        w[i] = p
            .parse::<f64>()
            .map_err(|e| format!("bad weight `{p}`: {e}"))?;
        if !w[i].is_finite() || w[i] < 0.0 {
            return Err(format!("weight `{p}` must be finite and nonnegative"));
        }
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err("weights must not all be zero".to_string());
    }
    Ok(SplitSpec::Ratios(w[0], w[1], w[2]))
}

fn parse_p_s_list(value: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err("empty entry in p_s list".to_string());
        }
        let p = part
            .parse::<f64>()
            .map_err(|e| format!("bad probability `{part}`: {e}"))?;
        if !(0.0..=0.5).contains(&p) {
            return Err(format!("p_s entry {p} outside [0, 0.5]"));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err("p_s list is empty".to_string());
    }
    Ok(out)
}

/// Parse a full config text into a validated spec.
pub fn parse_config_str(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut protocol = None;
    let mut schemes = None;
    let mut distance = None;
    let mut target = TargetSpec::MagicA;
    let mut tolerance = 1e-6;
    let mut restart_limit = 1000u32;
    let mut split = SplitSpec::Symmetric;
    let mut p_t = 0.0;
    let mut p_r = 0.0;
    let mut p_s_values = vec![1e-3, 3e-3, 1e-2];
    let mut shots = None;
    let mut master_seed = 1u64;
    let mut workers = 0usize;
    let mut output_path = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: stripped.to_string(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let invalid = |reason: String| ConfigError::InvalidValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason,
        };
        match key {
            "protocol" => {
                protocol = Some(match value {
                    "1" => ProtocolKind::PostSelection,
                    "2" => ProtocolKind::Transversal,
                    _ => return Err(invalid("expected 1 or 2".to_string())),
                });
            }
            "scheme" => {
                schemes = Some(match value {
                    "non-pauli" => vec![Scheme::NonPauli],
                    "pauli" => vec![Scheme::PauliBaseline],
                    "both" => vec![Scheme::NonPauli, Scheme::PauliBaseline],
                    _ => return Err(invalid("expected non-pauli, pauli, or both".to_string())),
                });
            }
            "distance" => {
                let d = value
                    .parse::<usize>()
                    .map_err(|e| invalid(e.to_string()))?;
                if !(2..=4).contains(&d) {
                    return Err(invalid("distance must be 2, 3, or 4".to_string()));
                }
                distance = Some(d);
            }
            "target" => target = parse_target_spec(value).map_err(invalid)?,
            "tolerance" => {
                let t = value.parse::<f64>().map_err(|e| invalid(e.to_string()))?;
                if !(t > 0.0 && t < 1.0) {
                    return Err(invalid("tolerance must lie in (0, 1)".to_string()));
                }
                tolerance = t;
            }
            "restart_limit" => {
                let r = value.parse::<u32>().map_err(|e| invalid(e.to_string()))?;
                if r == 0 {
                    return Err(invalid("restart_limit must be at least 1".to_string()));
                }
                restart_limit = r;
            }
            "p_s" => p_s_values = parse_p_s_list(value).map_err(invalid)?,
            "shots" => {
                let s = value.parse::<u64>().map_err(|e| invalid(e.to_string()))?;
                if s == 0 {
                    return Err(invalid("shots must be at least 1".to_string()));
                }
                shots = Some(s);
            }
            "seed" => master_seed = value.parse::<u64>().map_err(|e| invalid(e.to_string()))?,
            "workers" => workers = value.parse::<usize>().map_err(|e| invalid(e.to_string()))?,
            "out" => {
                if value.is_empty() {
                    return Err(invalid("empty output path".to_string()));
                }
                output_path = Some(value.to_string());
            }
            "noise.split" => split = parse_split_spec(value).map_err(invalid)?,
            "noise.p_t" => {
                let p = value.parse::<f64>().map_err(|e| invalid(e.to_string()))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid("noise.p_t must lie in [0, 1]".to_string()));
                }
                p_t = p;
            }
            "noise.p_r" => {
                let p = value.parse::<f64>().map_err(|e| invalid(e.to_string()))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid("noise.p_r must lie in [0, 1]".to_string()));
                }
                p_r = p;
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }

    let protocol = protocol.ok_or(ConfigError::MissingKey {
        key: "protocol".to_string(),
    })?;
    let schemes = schemes.ok_or(ConfigError::MissingKey {
        key: "scheme".to_string(),
    })?;
    let distance = distance.ok_or(ConfigError::MissingKey {
        key: "distance".to_string(),
    })?;
    Ok(SweepSpec {
        protocol,
        schemes,
        distance,
        target,
        tolerance,
        restart_limit,
        split,
        p_t,
        p_r,
        p_s_values,
        shots: shots.unwrap_or_else(|| default_shots(distance)),
        master_seed,
        workers,
        output_path,
    })
}

/// Read and parse a config file.
pub fn parse_config_file(path: &std::path::Path) -> Result<SweepSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}
