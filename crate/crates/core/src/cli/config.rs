//! Experiment configuration: flat `key = value` text with `[section]` headers.
//!
//! Keys are addressed as `section.key`. Settings are layered defaults, then
//! file, then command line, later layers winning.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::geom::HessianMode;
use crate::moments::QuadratureConfig;
use crate::predictions::Kind;
use crate::spectra::log_sweep;

const DEFAULTS: &[(&str, &str)] = &[
    ("manifold.id", "paraboloid(1,2)"),
    ("manifold.hessian", "analytic"),
    ("domain.kind", "sph"),
    ("domain.eps", ""),
    ("domain.eps_max", "0.3"),
    ("domain.eps_min", "0.02"),
    ("domain.eps_count", "12"),
    ("quadrature.radial_nodes", "24"),
    ("quadrature.angular_nodes", "64"),
    ("quadrature.target_rel_error", "1e-10"),
    ("pointcloud.enabled", "false"),
    ("pointcloud.n_points", "100000"),
    ("pointcloud.seed", "0"),
    ("pointcloud.noise", "0"),
    ("assert.volume_slope", ""),
    ("assert.barycenter_slope", ""),
    ("assert.tangent_slope", ""),
    ("assert.normal_slope", ""),
    ("assert.descriptor_slope", ""),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

/// Raw settings keyed by `section.key`; empty values mean unset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn defaults() -> Self {
        Settings(DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError(format!("line {}: unterminated section header", i + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim();
            let full = if section.is_empty() || key.contains('.') {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            map.insert(full, value.trim().to_string());
        }
        Ok(Settings(map))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Settings::parse(&text)
    }

    /// Parses one `section.key=value` override.
    pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("override `{s}` is not key=value")))?;
        Ok((k.trim().to_string(), v.trim().to_string()))
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.0.insert(key.into(), value.into());
    }

    /// Layers `other` over `self`.
    pub fn merge(mut self, other: &Settings) -> Self {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| ConfigError(format!("{key} = {v}: {e}"))))
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?.ok_or_else(|| ConfigError(format!("{key} is not set")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudOptions {
    pub enabled: bool,
    pub n_points: usize,
    pub seed: u64,
    pub noise: f64,
}

/// Minimum log-log slopes a sweep must reach; unset entries are reported only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlopeAssertions {
    pub volume: Option<f64>,
    pub barycenter: Option<f64>,
    pub tangent: Option<f64>,
    pub normal: Option<f64>,
    pub descriptor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifold: String,
    pub hessian: HessianMode,
    pub kind: Kind,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub quadrature: QuadratureConfig,
    pub pointcloud: PointCloudOptions,
    pub assertions: SlopeAssertions,
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, ConfigError> {
        if let Some(unknown) = s.0.keys().find(|k| !DEFAULTS.iter().any(|(d, _)| d == k)) {
            return Err(ConfigError(format!("unknown key {unknown}")));
        }
        let hessian = match s.get("manifold.hessian").unwrap_or("analytic") {
            "analytic" => HessianMode::Analytic,
            "fd" => HessianMode::FiniteDifference {
                step: crate::geom::default_hessian_step(),
            },
            other => return Err(ConfigError(format!("manifold.hessian = {other}: expected analytic or fd"))),
        };
        let kind = match s.get("domain.kind").unwrap_or("sph") {
            "sph" | "spherical" => Kind::Spherical,
            "cyl" | "cylindrical" => Kind::Cylindrical,
            other => return Err(ConfigError(format!("domain.kind = {other}: expected sph or cyl"))),
        };
        let eps = match s.get("domain.eps") {
            Some(list) => list
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| ConfigError(format!("domain.eps entry {t}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let hi: f64 = s.required("domain.eps_max")?;
                let lo: f64 = s.required("domain.eps_min")?;
                let count: usize = s.required("domain.eps_count")?;
                if count == 0 || !(hi > 0.0 && lo > 0.0) || (count > 1 && !(hi > lo)) {
                    return Err(ConfigError(format!("eps schedule {hi}..{lo} with {count} points")));
                }
                log_sweep(hi, lo, count)
            }
        };
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(ConfigError("eps values must be positive".into()));
        }
        if eps.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(ConfigError("eps schedule must be strictly decreasing".into()));
        }
        let quadrature = QuadratureConfig {
            radial_nodes: s.required("quadrature.radial_nodes")?,
            angular_nodes: s.required("quadrature.angular_nodes")?,
            target_rel_error: s.required("quadrature.target_rel_error")?,
        };
        quadrature.validate().map_err(|e| ConfigError(e.to_string()))?;
        let pointcloud = PointCloudOptions {
            enabled: s.required("pointcloud.enabled")?,
            n_points: s.required("pointcloud.n_points")?,
            seed: s.required("pointcloud.seed")?,
            noise: s.required("pointcloud.noise")?,
        };
        let assertions = SlopeAssertions {
            volume: s.parsed("assert.volume_slope")?,
            barycenter: s.parsed("assert.barycenter_slope")?,
            tangent: s.parsed("assert.tangent_slope")?,
            normal: s.parsed("assert.normal_slope")?,
            descriptor: s.parsed("assert.descriptor_slope")?,
        };
        Ok(ExperimentConfig {
            manifold: s.required("manifold.id")?,
            hessian,
            kind,
            eps,
            quadrature,
            pointcloud,
            assertions,
        })
    }

    /// Resolves defaults, then an optional file, then command-line overrides.
    pub fn resolve(file: Option<&PathBuf>, overrides: &Settings) -> Result<Self, ConfigError> {
        let mut s = Settings::defaults();
        if let Some(path) = file {
            s = s.merge(&Settings::from_file(path)?);
        }
        ExperimentConfig::from_settings(&s.merge(overrides))
    }

    /// Canonical `key=value` lines of the resolved configuration.
    pub fn canonical(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let eps: Vec<String> = self.eps.iter().map(|e| e.to_string()).collect();
        let hessian = match self.hessian {
            HessianMode::Analytic => "analytic",
            HessianMode::FiniteDifference { .. } => "fd",
        };
        vec![
            format!("manifold.id={}", self.manifold),
            format!("manifold.hessian={hessian}"),
            format!("domain.kind={}", self.kind.tag()),
            format!("domain.eps={}", eps.join(",")),
            format!("quadrature.radial_nodes={}", self.quadrature.radial_nodes),
            format!("quadrature.angular_nodes={}", self.quadrature.angular_nodes),
            format!("quadrature.target_rel_error={}", self.quadrature.target_rel_error),
            format!("pointcloud.enabled={}", self.pointcloud.enabled),
            format!("pointcloud.n_points={}", self.pointcloud.n_points),
            format!("pointcloud.seed={}", self.pointcloud.seed),
            format!("pointcloud.noise={}", self.pointcloud.noise),
            format!("assert.volume_slope={}", opt(self.assertions.volume)),
            format!("assert.barycenter_slope={}", opt(self.assertions.barycenter)),
            format!("assert.tangent_slope={}", opt(self.assertions.tangent)),
            format!("assert.normal_slope={}", opt(self.assertions.normal)),
            format!("assert.descriptor_slope={}", opt(self.assertions.descriptor)),
        ]
    }

    /// First 16 hex digits of the SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for line in self.canonical() {
            h.update(line.as_bytes());
            h.update(b"\n");
        }
        let digest = h.finalize();
        let mut out = String::new();
        for b in &digest[..8] {
            write!(out, "{b:02x}").expect("writing to a string");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_precedence() {
        let file = Settings::parse(
            "# sweep\n[manifold]\nid = sphere\n[domain]\nkind = cyl ; trailing\neps = 0.2, 0.1\n",
        )
        .unwrap();
        let mut cli = Settings::default();
        cli.set("domain.kind", "sph");
        let cfg = ExperimentConfig::from_settings(&Settings::defaults().merge(&file).merge(&cli)).unwrap();
        assert_eq!(cfg.manifold, "sphere");
        assert_eq!(cfg.kind, Kind::Spherical);
        assert_eq!(cfg.eps, vec![0.2, 0.1]);
        assert_eq!(cfg.quadrature, QuadratureConfig::default());
    }

    #[test]
    fn default_schedule() {
        let cfg = ExperimentConfig::from_settings(&Settings::defaults()).unwrap();
        assert_eq!(cfg.eps.len(), 12);
        assert!((cfg.eps[0] - 0.3).abs() < 1e-15 && (cfg.eps[11] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |text: &str| ExperimentConfig::from_settings(&Settings::defaults().merge(&Settings::parse(text).unwrap()));
        assert!(bad("[domain]\neps = 0.1, 0.2").is_err());
        assert!(bad("[domain]\nkind = cube").is_err());
        assert!(bad("[domain]\nradius = 1").is_err());
        assert!(bad("[quadrature]\nradial_nodes = many").is_err());
        assert!(Settings::parse("[manifold\nid = plane").is_err());
        assert!(Settings::parse("just words").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_settings(&Settings::defaults()).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.eps[0] = 0.29;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
