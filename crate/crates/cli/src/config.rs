//! Experiment configuration: defaults, JSON file, `--set` overrides and the config hash.

use std::path::Path;

use parex_core::inequality::Family;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::outcome::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the subcommand on the command line.
    pub subcommand: Option<String>,
    pub seed: u64,
    pub grid: GridConfig,
    pub alpert: AlpertConfig,
    pub extend: ExtendConfig,
    pub qr: QrConfig,
    pub trilinear: TrilinearConfig,
    pub annular: AnnularConfig,
    pub convolve: ConvolveConfig,
    pub rescale: RescaleConfig,
    pub bg: BgConfig,
    pub sqfn: SqfnConfig,
    pub eps: EpsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            subcommand: None,
            seed: 1,
            grid: GridConfig::default(),
            alpert: AlpertConfig::default(),
            extend: ExtendConfig::default(),
            qr: QrConfig::default(),
            trilinear: TrilinearConfig::default(),
            annular: AnnularConfig::default(),
            convolve: ConvolveConfig::default(),
            rescale: RescaleConfig::default(),
            bg: BgConfig::default(),
            sqfn: SqfnConfig::default(),
            eps: EpsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Side of the base domain `[−side/2, side/2)²`.
    pub side: f64,
    pub level: u32,
    pub nu: f64,
    /// Level at which ν-disjoint triples are enumerated.
    pub triple_level: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { side: 1.0, level: 3, nu: 0.125, triple_level: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlpertConfig {
    pub kappas: Vec<usize>,
    pub gram_tol: f64,
    pub moment_tol: f64,
    pub construction_seconds: f64,
    pub smooth_kappas: Vec<usize>,
    pub etas: Vec<f64>,
    pub smooth_moment_tol: f64,
    pub smooth_seconds: f64,
    pub frame_kappa: usize,
    pub frame_eta: f64,
    pub frame_s_max: u32,
    pub reconstruction_tol: f64,
    pub condition_max: f64,
}

impl Default for AlpertConfig {
    fn default() -> Self {
        Self {
            kappas: vec![1, 2, 3, 4],
            gram_tol: 1e-12,
            moment_tol: 1e-12,
            construction_seconds: 5.0,
            smooth_kappas: vec![1, 2, 3],
            etas: vec![0.1, 0.05],
            smooth_moment_tol: 1e-9,
            smooth_seconds: 10.0,
            frame_kappa: 2,
            frame_eta: 0.05,
            frame_s_max: 3,
            reconstruction_tol: 1e-6,
            condition_max: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtendConfig {
    pub radius: f64,
    pub points: usize,
    /// Grid level and Gauss order of the test function.
    pub level: u32,
    pub order: usize,
    pub bound_tol: f64,
    pub halving_tol: f64,
    pub symmetry_tol: f64,
    pub seconds: f64,
    pub modulation_instances: usize,
    pub modulation_radius: f64,
    pub modulation_points: usize,
    pub modulation_tol: f64,
    /// Points written to `field.csv` (0 disables the dump).
    pub field_points: usize,
    pub budget: f64,
    /// Largest phase change per quadrature cell.
    pub phase_per_cell: f64,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        Self {
            radius: 64.0,
            points: 10_000,
            level: 2,
            order: 6,
            bound_tol: 1e-9,
            halving_tol: 1e-6,
            symmetry_tol: 1e-10,
            seconds: 60.0,
            modulation_instances: 10,
            modulation_radius: 32.0,
            modulation_points: 64,
            modulation_tol: 1e-6,
            field_points: 1000,
            budget: 4e10,
            phase_per_cell: std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QrConfig {
    pub q: f64,
    /// `R = 2^k`.
    pub ks: Vec<u32>,
    pub per_shell: usize,
    pub family: Family,
    pub order: usize,
}

impl Default for QrConfig {
    fn default() -> Self {
        Self { q: 4.0, ks: vec![3, 4, 5, 6, 7], per_shell: 64, family: Family::RandomSigns { level: 3, count: 4 }, order: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrilinearConfig {
    pub instances: usize,
    pub holder_points: usize,
    pub holder_radius: f64,
    pub holder_tol: f64,
    pub q: f64,
    pub nu: f64,
    /// Level of the triple squares and of the random signs.
    pub square_level: u32,
    pub sign_level: u32,
    pub ks: Vec<u32>,
    pub per_shell: usize,
    pub order: usize,
}

impl Default for TrilinearConfig {
    fn default() -> Self {
        Self {
            instances: 50,
            holder_points: 64,
            holder_radius: 16.0,
            holder_tol: 1e-12,
            q: 4.0,
            nu: 0.25,
            square_level: 2,
            sign_level: 4,
            ks: vec![3, 4, 5, 6],
            per_shell: 48,
            order: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnularConfig {
    pub eta: f64,
    pub q: f64,
    pub delta: f64,
    // κ-moment decay
    pub r: i32,
    pub kappas: Vec<usize>,
    pub u_level: u32,
    pub u_index: [i64; 2],
    pub scales: Vec<u32>,
    pub sign_level: u32,
    pub points: usize,
    /// Pass when the fitted slope is at most `−κ + slope_margin`.
    pub slope_margin: f64,
    pub decay_seconds: f64,
    // low-scale sweep
    pub low_r: i32,
    pub low_kappa: usize,
    pub low_s1: u32,
    pub low_s3: u32,
    pub low_s2: Vec<u32>,
    pub low_nu: f64,
    pub low_level: u32,
    pub low_indices: [[i64; 2]; 3],
    pub low_sign_level: u32,
    pub low_points: usize,
}

impl Default for AnnularConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            q: 4.0,
            delta: 0.5,
            r: 6,
            kappas: vec![2, 3],
            u_level: 5,
            u_index: [16, 16],
            scales: vec![7, 8, 9, 10],
            sign_level: 12,
            points: 256,
            slope_margin: 1.0,
            decay_seconds: 300.0,
            low_r: 7,
            low_kappa: 2,
            low_s1: 3,
            low_s3: 7,
            low_s2: vec![5, 4, 3],
            low_nu: 0.125,
            low_level: 3,
            low_indices: [[2, 4], [5, 4], [4, 1]],
            low_sign_level: 9,
            low_points: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvolveConfig {
    pub nu: f64,
    pub level: u32,
    pub u1_index: [i64; 2],
    pub u2_index: [i64; 2],
    pub order: usize,
    /// Density grid points per axis; the halving check also runs at half this.
    pub counts: usize,
    pub oracle_points: usize,
    pub xi_radius: f64,
    pub oracle_tol: f64,
    pub mass_tol: f64,
    pub seconds: f64,
    pub write_density: bool,
}

impl Default for ConvolveConfig {
    fn default() -> Self {
        Self {
            nu: 0.125,
            level: 3,
            u1_index: [6, 4],
            u2_index: [1, 3],
            order: 6,
            counts: 64,
            oracle_points: 20,
            xi_radius: 32.0,
            oracle_tol: 1e-2,
            mass_tol: 1e-3,
            seconds: 180.0,
            write_density: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RescaleConfig {
    pub rhos: Vec<f64>,
    pub qs: Vec<f64>,
    pub ybar: [f64; 2],
    pub radius: f64,
    pub points: usize,
    pub level: u32,
    pub order: usize,
    pub tol: f64,
    pub seconds: f64,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self {
            rhos: vec![0.5, 0.25],
            qs: vec![3.5, 4.0, 6.0],
            ybar: [0.125, -0.125],
            radius: 32.0,
            points: 512,
            level: 3,
            order: 6,
            tol: 1e-3,
            seconds: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BgConfig {
    pub nu_q: f64,
    pub nu_expected: f64,
    pub lambda_q: f64,
    pub lambda_expected: u32,
    pub zeta_sigma: f64,
    pub zeta_lambdas: Vec<u32>,
    pub zeta_radius: f64,
    pub zeta_points: usize,
    pub zeta_cap: f64,
    /// Classifier demo: level λ of the tiling and number of lattice centers examined.
    pub lambda: u32,
    pub lambda_prime: u32,
    pub separation_prefactor: f64,
    pub centers: usize,
    pub samples: usize,
    pub bumps: usize,
}

impl Default for BgConfig {
    fn default() -> Self {
        Self {
            nu_q: 4.0,
            nu_expected: 0.25,
            lambda_q: 6.0,
            lambda_expected: 6,
            zeta_sigma: parex_core::inequality::zeta::DEFAULT_SIGMA,
            zeta_lambdas: vec![2, 3, 4],
            zeta_radius: 64.0,
            zeta_points: 100,
            zeta_cap: 10.0,
            lambda: 2,
            lambda_prime: 1,
            separation_prefactor: 1.0,
            centers: 4,
            samples: 256,
            bumps: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqfnConfig {
    pub kappa: usize,
    pub eta: f64,
    pub s: u32,
    pub sign_level: u32,
    pub radius: f64,
    pub points: usize,
    pub draws: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Default for SqfnConfig {
    fn default() -> Self {
        Self { kappa: 2, eta: 0.05, s: 2, sign_level: 4, radius: 8.0, points: 64, draws: 256, lower: 1.0 / 3.0, upper: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsConfig {
    pub q: f64,
    pub kappa: usize,
    pub eta: f64,
    pub scales: Vec<u32>,
    pub draws: usize,
    pub ball_points: usize,
    pub u_level: u32,
    pub u_index: [i64; 2],
}

impl Default for EpsConfig {
    fn default() -> Self {
        Self { q: 4.0, kappa: 2, eta: 0.05, scales: vec![3, 4, 5, 6], draws: 128, ball_points: 512, u_level: 2, u_index: [1, 1] }
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Apply `key.path=value`; the value is parsed as JSON when possible, else taken as a string.
pub fn apply_set(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Schema(format!("--set expects key=value, got `{assignment}`")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Schema(format!("`{key}`: `{}` is not a section", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), value);
            return Ok(());
        }
        node = obj.entry(p.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Err(CliError::Schema(format!("empty key in `{assignment}`")))
}

/// A validated configuration with its canonical JSON and SHA-256.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub canonical: Value,
    pub hash: String,
}

pub fn resolve(file: Option<&str>, sets: &[String]) -> Result<Resolved, CliError> {
    let mut v = serde_json::to_value(ExperimentConfig::default()).expect("default config serializes");
    if let Some(text) = file {
        let user: Value = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("config is not valid JSON: {e}")))?;
        if !user.is_object() {
            return Err(CliError::Schema("config must be a JSON object".into()));
        }
        merge(&mut v, user);
    }
    for s in sets {
        apply_set(&mut v, s)?;
    }
    let config: ExperimentConfig = serde_json::from_value(v).map_err(|e| CliError::Schema(e.to_string()))?;
    // round trip so the canonical form has every field and sorted keys
    let canonical = serde_json::to_value(&config).expect("config serializes");
    let hash = config_hash(&canonical);
    Ok(Resolved { config, canonical, hash })
}

pub fn resolve_path(path: Option<&Path>, sets: &[String]) -> Result<Resolved, CliError> {
    let text = match path {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::Schema(format!("cannot read {}: {e}", p.display())))?),
        None => None,
    };
    resolve(text.as_deref(), sets)
}

pub fn config_hash(canonical: &Value) -> String {
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_hash_is_stable() {
        let a = resolve(None, &[]).unwrap();
        let b = resolve(Some("{}"), &[]).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_eq!(a.hash.len(), 64);
        assert_eq!(a.config, ExperimentConfig::default());
    }

    #[test]
    fn sets_override_file() {
        let r = resolve(Some(r#"{"rescale": {"tol": 0.5}}"#), &["rescale.tol=0.25".into(), "seed=9".into()]).unwrap();
        assert_eq!(r.config.rescale.tol, 0.25);
        assert_eq!(r.config.seed, 9);
        assert_eq!(r.config.rescale.qs, RescaleConfig::default().qs);
        let s = resolve(None, &["qr.family={\"family\":\"bumps\",\"count\":2}".into()]).unwrap();
        assert_eq!(s.config.qr.family, Family::Bumps { count: 2 });
    }

    #[test]
    fn schema_violations() {
        for (file, sets) in [
            (Some("[1]"), vec![]),
            (Some("{\"rescale\": {\"tolerance\": 1}}"), vec![]),
            (None, vec!["nosuch=1".to_string()]),
            (None, vec!["seed=abc".to_string()]),
            (None, vec!["seed".to_string()]),
            (Some("{oops"), vec![]),
        ] {
            assert!(matches!(resolve(file, &sets), Err(CliError::Schema(_))), "{file:?} {sets:?}");
        }
    }
}
