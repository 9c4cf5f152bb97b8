//! JSON run configuration: a single strict document, unknown keys rejected.

use lefgpd::geometry::{TorusGeometry, TorusMap};
use lefgpd::lefschetz::{LadderSpec, Tolerances, VerificationConfig};
use lefgpd::linalg::IntMatrix;
use lefgpd::superalgebra::Zeta;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub map: MapConfig,
    #[serde(default = "default_complex")]
    pub complex: String,
    #[serde(default = "default_half_order")]
    pub half_order: u32,
    pub ladder: LadderConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    /// Seed-free determinism is always on; the field exists so configs can
    /// state it, and `false` is rejected.
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default)]
    pub verbosity: u8,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dimension: usize,
    pub grid_size: usize,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum MapConfig {
    #[serde(rename = "affine")]
    Affine {
        matrix: Vec<Vec<i64>>,
        shift: Vec<f64>,
    },
    #[serde(rename = "circle_fourier")]
    CircleFourier {
        degree: i64,
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        terms: Vec<FourierTerm>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub frequency: u32,
    pub amplitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub t_max: f64,
    pub ratio: f64,
    pub rungs: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_spectral_tol")]
    pub spectral: f64,
    #[serde(default = "default_geometric_tol")]
    pub geometric: f64,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        Self {
            spectral: default_spectral_tol(),
            geometric: default_geometric_tol(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default)]
    pub path: Option<String>,
}

fn default_complex() -> String {
    "de_rham".into()
}

fn default_half_order() -> u32 {
    1
}

fn default_true() -> bool {
    true
}

fn default_spectral_tol() -> f64 {
    1e-10
}

fn default_geometric_tol() -> f64 {
    1e-4
}

fn default_format() -> String {
    "json".into()
}

impl RunConfig {
    /// Parse and schema-check a config document.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| format!("config schema violation: {e}"))?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), String> {
        if self.complex != "de_rham" {
            return Err(format!(
                "config field `complex`: only \"de_rham\" is supported, got \"{}\"",
                self.complex
            ));
        }
        if !self.deterministic {
            return Err(
                "config field `deterministic`: must be true (runs are always seed-free)".into(),
            );
        }
        if self.ladder.rungs < 4 {
            return Err(format!(
                "config field `ladder.rungs`: must be >= 4, got {}",
                self.ladder.rungs
            ));
        }
        if let Some(output) = &self.output {
            if output.format != "json" && output.format != "csv" {
                return Err(format!(
                    "config field `output.format`: expected \"json\" or \"csv\", got \"{}\"",
                    output.format
                ));
            }
        }
        Ok(())
    }

    /// Build the library-level verification config.
    pub fn to_verification(&self) -> Result<VerificationConfig<f64>, String> {
        let geom = TorusGeometry::new(self.geometry.dimension, self.geometry.grid_size)
            .map_err(|e| e.to_string())?;
        let map = match &self.map {
            MapConfig::Affine { matrix, shift } => {
                let n = matrix.len();
                if matrix.iter().any(|row| row.len() != n) {
                    return Err("config field `map.matrix`: must be square".into());
                }
                TorusMap::affine(IntMatrix::from_rows(matrix), shift.clone())
                    .map_err(|e| e.to_string())?
            }
            MapConfig::CircleFourier {
                degree,
                constant,
                terms,
            } => TorusMap::circle_fourier(
                *degree,
                *constant,
                terms.iter().map(|t| (t.frequency, t.amplitude)).collect(),
            )
            .map_err(|e| e.to_string())?,
        };
        let config = VerificationConfig {
            geom,
            map,
            zeta: Zeta::DeRham,
            half_order: self.half_order,
            ladder: LadderSpec {
                t_max: self.ladder.t_max,
                ratio: self.ladder.ratio,
                rungs: self.ladder.rungs,
            },
            tolerances: Tolerances {
                spectral: self.tolerances.spectral,
                geometric: self.tolerances.geometric,
            },
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}
