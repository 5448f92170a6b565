//! Parallel Monte Carlo sweeps over error rates, with deterministic CSV output.
//!
//! Each (scheme, p_s) point runs `shots` independent trials; the random
//! stream of trial `t` at point `k` is a pure function of
//! `(master_seed, k, t)`, so aggregate counts are identical for any worker
//! count or scheduling order. Rates follow the attempt-counting convention:
//! `ler_total = failures / shots` (every attempt in the denominator),
//! `ler_accepted = failures / accepted`, and a Wilson 95% half-width
//! accompanies the headline rate so near-zero failure counts stay honest.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::algebra::{solve_params_for_target, Su2Params};
use crate::config::SweepSpec;
use crate::error::SweepError;
use crate::noise::{BasisMode, NoiseChannel};
use crate::protocols::{
    run_trial, ProtocolConfig, ProtocolContext, ProtocolKind, Scheme, TrialStatus,
};
use crate::statevector::RngStream;

const WILSON_Z: f64 = 1.959963984540054;

/// Aggregated statistics of one sweep point.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub protocol: u8,
    pub scheme: Scheme,
    pub distance: usize,
    pub p_s: f64,
    pub shots: u64,
    pub accepted: u64,
    pub failures: u64,
    pub discards: u64,
    pub restarts_total: u64,
    pub exhausted: u64,
    pub ler_total: f64,
    pub ler_accepted: f64,
    pub acceptance_rate: f64,
    pub wilson95: f64,
    pub master_seed: u64,
}

/// Wilson 95% half-width for `k` successes in `n` trials.
pub fn wilson_halfwidth(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let z = WILSON_Z;
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom
}

/// Wilson 95% interval (lo, hi) for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = WILSON_Z;
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    accepted: u64,
    failures: u64,
    discards: u64,
    restarts: u64,
}

impl Counts {
    fn merge(self, other: Counts) -> Counts {
        Counts {
            accepted: self.accepted + other.accepted,
            failures: self.failures + other.failures,
            discards: self.discards + other.discards,
            restarts: self.restarts + other.restarts,
        }
    }
}

/// Solve the basis parameters a sweep point needs: protocol 1 inverts the
/// d-th-power chain map, protocol 2 targets the physical coefficients
/// directly.
pub fn params_for(spec: &SweepSpec) -> Su2Params {
    let chain_len = match spec.protocol {
        ProtocolKind::PostSelection => spec.distance,
        ProtocolKind::Transversal => 1,
    };
    let (alpha, beta) = spec.target.amplitudes();
    solve_params_for_target(alpha, beta, chain_len)
        .expect("validated target")
        .params
}

fn protocol_config(spec: &SweepSpec, scheme: Scheme, p_s: f64) -> ProtocolConfig {
    let mode = match scheme {
        Scheme::NonPauli => BasisMode::NonPauli,
        Scheme::PauliBaseline => BasisMode::Pauli,
    };
    let noise = NoiseChannel::new(mode, p_s, spec.split)
        .with_two_qubit(spec.p_t)
        .with_reset(spec.p_r);
    let mut config = ProtocolConfig::new(spec.protocol, scheme, spec.distance, params_for(spec), noise);
    config.tolerance = spec.tolerance;
    config.restart_limit = spec.restart_limit;
    config
}

/// Run every (scheme, p_s) point of the sweep. Records come back sorted by
/// (protocol, scheme, distance, p_s).
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .expect("thread pool");
    let mut records = Vec::new();
    let mut point_index = 0u64;
    for &scheme in &spec.schemes {
        for &p_s in &spec.p_s_values {
            let ctx = ProtocolContext::new(protocol_config(spec, scheme, p_s))?;
            let master_seed = spec.master_seed;
            let counts = pool.install(|| {
                (0..spec.shots)
                    .into_par_iter()
                    .map(|trial| {
                        let mut rng = RngStream::for_trial(master_seed, point_index, trial);
                        let result = run_trial(&ctx, &mut rng).expect("trial within capacity");
                        let mut c = Counts {
                            restarts: u64::from(result.restarts),
                            ..Counts::default()
                        };
                        match result.status {
                            TrialStatus::AcceptedCorrect => c.accepted = 1,
                            TrialStatus::AcceptedFailed => {
                                c.accepted = 1;
                                c.failures = 1;
                            }
                            TrialStatus::DiscardedRestart => c.discards = 1,
                        }
                        c
                    })
                    .reduce(Counts::default, Counts::merge)
            });
            records.push(SweepRecord {
                protocol: spec.protocol.number(),
                scheme,
                distance: spec.distance,
                p_s,
                shots: spec.shots,
                accepted: counts.accepted,
                failures: counts.failures,
                discards: counts.discards,
                restarts_total: counts.restarts,
                exhausted: 0,
                ler_total: counts.failures as f64 / spec.shots as f64,
                ler_accepted: if counts.accepted == 0 {
                    0.0
                } else {
                    counts.failures as f64 / counts.accepted as f64
                },
                acceptance_rate: counts.accepted as f64 / spec.shots as f64,
                wilson95: wilson_halfwidth(counts.failures, spec.shots),
                master_seed: spec.master_seed,
            });
            point_index += 1;
        }
    }
    sort_records(&mut records);
    Ok(records)
}

fn sort_records(records: &mut [SweepRecord]) {
    records.sort_by(|a, b| {
        (a.protocol, a.scheme.label(), a.distance)
            .cmp(&(b.protocol, b.scheme.label(), b.distance))
            .then(a.p_s.partial_cmp(&b.p_s).expect("finite p_s"))
    });
}

/// Format a float with 10 significant digits, deterministically.
fn sig10(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.9e}")
    }
}

pub const CSV_HEADER: &str = "protocol,scheme,distance,p_s,shots,accepted,failures,discards,\
restarts_total,exhausted,ler_total,ler_accepted,acceptance_rate,wilson95,seed";

/// Render records as CSV (header + one sorted row per record).
pub fn render_csv(records: &[SweepRecord]) -> String {
    let mut sorted: Vec<SweepRecord> = records.to_vec();
    sort_records(&mut sorted);
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.protocol,
            r.scheme.label(),
            r.distance,
            sig10(r.p_s),
            r.shots,
            r.accepted,
            r.failures,
            r.discards,
            r.restarts_total,
            r.exhausted,
            sig10(r.ler_total),
            sig10(r.ler_accepted),
            sig10(r.acceptance_rate),
            sig10(r.wilson95),
            r.master_seed,
        ));
    }
    out
}

/// Write the CSV to `path`.
pub fn emit_csv(records: &[SweepRecord], path: &Path) -> Result<(), SweepError> {
    if records.is_empty() {
        return Err(SweepError::NoRecords);
    }
    let rendered = render_csv(records);
    let mut file = std::fs::File::create(path).map_err(|source| SweepError::Output {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(rendered.as_bytes())
        .map_err(|source| SweepError::Output {
            path: path.display().to_string(),
            source,
        })
}

/// Weighted least-squares slope of `log10(ler)` against `log10(p_s)`,
/// using only points with at least one failure (weights are failure counts).
pub fn loglog_slope(points: &[(f64, u64, u64)]) -> Option<f64> {
    let data: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|(_, failures, _)| *failures > 0)
        .map(|(p_s, failures, shots)| {
            (
                p_s.log10(),
                (*failures as f64 / *shots as f64).log10(),
                *failures as f64,
            )
        })
        .collect();
    if data.len() < 2 {
        return None;
    }
    let w_sum: f64 = data.iter().map(|d| d.2).sum();
    let x_mean = data.iter().map(|d| d.0 * d.2).sum::<f64>() / w_sum;
    let y_mean = data.iter().map(|d| d.1 * d.2).sum::<f64>() / w_sum;
    let sxx: f64 = data.iter().map(|d| d.2 * (d.0 - x_mean).powi(2)).sum();
    let sxy: f64 = data
        .iter()
        .map(|d| d.2 * (d.0 - x_mean) * (d.1 - y_mean))
        .sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config_str, TargetSpec};

    fn small_spec() -> SweepSpec {
        let mut spec = parse_config_str(
            "protocol = 1\nscheme = both\ndistance = 2\np_s = 0, 0.01\nshots = 400\nseed = 99\n",
        )
        .unwrap();
        spec.workers = 2;
        spec
    }

    #[test]
    fn zero_noise_has_zero_failures() {
        let spec = small_spec();
        let records = run_sweep(&spec).unwrap();
        assert_eq!(records.len(), 4);
        for r in records.iter().filter(|r| r.p_s == 0.0) {
            assert_eq!(r.failures, 0);
            assert_eq!(r.ler_total, 0.0);
            assert!(r.accepted + r.discards == r.shots);
        }
    }

    #[test]
    fn csv_is_deterministic_across_worker_counts() {
        let mut spec_a = small_spec();
        spec_a.workers = 1;
        let mut spec_b = small_spec();
        spec_b.workers = 4;
        let a = render_csv(&run_sweep(&spec_a).unwrap());
        let b = render_csv(&run_sweep(&spec_b).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
    }

    #[test]
    fn csv_rows_are_sorted_regardless_of_input_order() {
        let spec = small_spec();
        let mut records = run_sweep(&spec).unwrap();
        records.reverse();
        let rendered = render_csv(&records);
        let lines: Vec<&str> = rendered.lines().skip(1).collect();
        assert_eq!(lines.len(), 4);
        // non-pauli rows sort before pauli
        assert!(lines[0].starts_with("1,non-pauli"));
        assert!(lines[3].starts_with("1,pauli"));
    }

    #[test]
    fn wilson_reference_values() {
        // frozen against the closed-form Wilson expressions
        let (lo, hi) = wilson_interval(0, 100);
        assert!(lo.abs() < 1e-15);
        assert!((hi - 0.03699349820698568).abs() < 1e-12);
        let h = wilson_halfwidth(5, 100);
        assert!((h - 0.045103395038775584).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        // ler = C p^2 exactly
        let points: Vec<(f64, u64, u64)> = [1e-3, 3e-3, 1e-2]
            .iter()
            .map(|&p| (p, (1e9 * p * p) as u64, 1_000_000_000))
            .collect();
        let slope = loglog_slope(&points).unwrap();
        assert!((slope - 2.0).abs() < 0.01, "{slope}");
    }

    #[test]
    fn target_spec_amplitudes() {
        let (a, b) = TargetSpec::MagicA.amplitudes();
        assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((b.arg() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }
}
