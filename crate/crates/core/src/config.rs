//! Run configuration (TOML, key-value).
//!
//! One file fully describes a run: the density, the space (builder or
//! import), σ, Poincaré parameters, grids, tolerances, sample counts and
//! the seed. The CLI copies the file into the output directory so every
//! report is reproducible from its own artifacts.

use crate::density::{DensityFamily, DensityFn};
use crate::error::{Error, Result};
use crate::grid::GeoGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub density: DensityConfig,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub sphericalize: SphericalizeConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub poincare: PoincareConfig,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub family: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub knots: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_domain_floor")]
    pub domain_floor: f64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
}

fn default_domain_floor() -> f64 {
    crate::density::DEFAULT_DOMAIN_FLOOR
}

fn default_quad_tol() -> f64 {
    crate::density::DEFAULT_QUAD_TOL
}

fn default_safety() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// "halfplane" or "import"
    #[serde(default = "default_builder")]
    pub builder: String,
    #[serde(default = "default_mesh_rel")]
    pub mesh_rel: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default)]
    pub import_path: Option<String>,
}

fn default_builder() -> String {
    "halfplane".into()
}

fn default_mesh_rel() -> f64 {
    0.05
}

fn default_r_max() -> f64 {
    1000.0
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            builder: default_builder(),
            mesh_rel: default_mesh_rel(),
            r_max: default_r_max(),
            import_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalizeConfig {
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    2.0
}

impl Default for SphericalizeConfig {
    fn default() -> Self {
        Self { sigma: default_sigma() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_r_lo")]
    pub r_lo: f64,
    #[serde(default = "default_r_hi")]
    pub r_hi: f64,
    #[serde(default = "default_per_decade")]
    pub points_per_decade: u32,
}

fn default_r_lo() -> f64 {
    1e-3
}

fn default_r_hi() -> f64 {
    1e6
}

fn default_per_decade() -> u32 {
    16
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { r_lo: default_r_lo(), r_hi: default_r_hi(), points_per_decade: default_per_decade() }
    }
}

impl GridConfig {
    pub fn to_grid(&self) -> GeoGrid {
        GeoGrid::new(self.r_lo, self.r_hi, self.points_per_decade)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareConfig {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_lambdas")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_suite_version")]
    pub suite_version: u32,
    #[serde(default = "default_ball_count")]
    pub balls: usize,
}

fn default_p() -> f64 {
    1.0
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

fn default_suite_version() -> u32 {
    1
}

fn default_ball_count() -> usize {
    120
}

impl Default for PoincareConfig {
    fn default() -> Self {
        Self {
            p: default_p(),
            lambda: default_lambdas(),
            suite_version: default_suite_version(),
            balls: default_ball_count(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_seed() -> u64 {
    42
}

fn default_samples() -> usize {
    1000
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: default_seed(), samples: default_samples() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config parse: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn density_fn(&self) -> Result<DensityFn> {
        let d = &self.density;
        let family = match d.family.as_str() {
            "powlog" => DensityFamily::PowLog {
                alpha: d.alpha.ok_or_else(|| missing("alpha"))?,
                beta: d.beta.unwrap_or(0.0),
            },
            "exponential" => DensityFamily::Exponential {
                rate: d.rate.ok_or_else(|| missing("rate"))?,
            },
            "tabulated" => DensityFamily::Tabulated {
                knots: d
                    .knots
                    .as_ref()
                    .ok_or_else(|| missing("knots"))?
                    .iter()
                    .map(|k| (k[0], k[1]))
                    .collect(),
            },
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown density family '{other}' (powlog | exponential | tabulated)"
                )))
            }
        };
        DensityFn::new(family, d.domain_floor)
    }
}

fn missing(field: &str) -> Error {
    Error::InvalidInput(format!("density config missing '{field}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = RunConfig::from_toml(
            r#"
[density]
family = "powlog"
alpha = -2.0
beta = 0.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.space.builder, "halfplane");
        assert_eq!(cfg.sphericalize.sigma, 2.0);
        assert_eq!(cfg.run.seed, 42);
        let f = cfg.density_fn().unwrap();
        assert!((f.eval(1.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys_and_families() {
        assert!(RunConfig::from_toml("[density]\nfamily = \"powlog\"\nalpa = 1.0\n").is_err());
        let cfg = RunConfig::from_toml("[density]\nfamily = \"gauss\"\n").unwrap();
        assert!(cfg.density_fn().is_err());
    }

    #[test]
    fn roundtrips_through_toml() {
        let cfg = RunConfig::from_toml(
            "[density]\nfamily = \"exponential\"\nrate = 1.0\n[run]\nseed = 7\n",
        )
        .unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back.run.seed, 7);
        assert_eq!(back.density.rate, Some(1.0));
    }
}
