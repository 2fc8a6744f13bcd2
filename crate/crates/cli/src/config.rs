//! Run configuration: a TOML file merged with command-line overrides.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wkblab::limits::Family;
use wkblab::{Complex64, Poly, Rect};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// Real coefficients in ascending powers.
    pub coefficients: Option<Vec<f64>>,
    /// Real roots, used with `leading`.
    pub roots: Option<Vec<f64>>,
    pub leading: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub radius: Option<f64>,
    pub max_length: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub lambda_max: Option<f64>,
    /// `double` or `double_double`.
    pub precision: Option<String>,
    pub cutoff: Option<f64>,
    pub match_point: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZerosSection {
    /// Eigenvalue index; defaults to the largest below `lambda_max`.
    pub n: Option<usize>,
    pub region: Option<[f64; 4]>,
    pub family: Option<String>,
    pub kappa: Option<f64>,
    pub arc_mass: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub delta: Option<f64>,
    pub count: Option<usize>,
    /// `leading` (transition-matrix roots) or `computed` (shooting).
    pub source: Option<String>,
    /// Calibrate the potential to this `α₁/α₂` before measuring.
    pub ratio: Option<f64>,
    pub free_root: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub target: Option<f64>,
    pub free_root: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub trace_tol: Option<f64>,
    pub newton_tol: Option<f64>,
    pub pitch_factor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub potential: PotentialSpec,
    pub out: Option<String>,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub zeros: ZerosSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub calibrate: CalibrateSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text)
            .map_err(|e| bad(format!("config: {}", e.message())).with_span(text, e.span()))
    }

    /// Hex sha256 of the canonical JSON form, with the output directory left out.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_string(&RunConfig {
            out: None,
            ..self.clone()
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn poly(&self) -> Result<Poly, ConfigError> {
        let p = &self.potential;
        match (&p.coefficients, &p.roots) {
            (Some(_), Some(_)) => Err(bad(
                "potential: give either coefficients or roots, not both",
            )),
            (None, None) => Err(bad("potential: missing coefficients or roots")),
            (Some(c), None) => {
                if p.leading.is_some() {
                    return Err(bad("potential.leading is only used with potential.roots"));
                }
                Poly::from_real(c).map_err(|e| bad(format!("potential.coefficients: {e}")))
            }
            (None, Some(r)) => {
                let lead = p.leading.unwrap_or(1.0);
                Poly::from_real_roots(r, lead).map_err(|e| bad(format!("potential.roots: {e}")))
            }
        }
    }

    pub fn region(&self) -> Result<Option<Rect>, ConfigError> {
        match self.zeros.region {
            None => Ok(None),
            Some([x0, x1, y0, y1]) => Rect::new(x0, x1, y0, y1)
                .map(Some)
                .map_err(|e| bad(format!("zeros.region: {e}"))),
        }
    }

    pub fn family(&self) -> Result<Option<Family>, ConfigError> {
        match &self.zeros.family {
            None => Ok(None),
            Some(name) => match Family::from_name(name) {
                Ok(f) => Ok(Some(f)),
                Err(_) => Ok(None),
            },
        }
    }

    /// Checks every numeric knob for positivity and range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(bad(format!("{name} must be positive, got {x}")))
            }
            _ => Ok(()),
        };
        positive("graph.radius", self.graph.radius)?;
        positive("graph.max_length", self.graph.max_length)?;
        positive("spectrum.lambda_max", self.spectrum.lambda_max)?;
        positive("spectrum.cutoff", self.spectrum.cutoff)?;
        positive("zeros.kappa", self.zeros.kappa)?;
        positive("zeros.arc_mass", self.zeros.arc_mass)?;
        positive("density.ratio", self.density.ratio)?;
        positive("calibrate.target", self.calibrate.target)?;
        positive("tolerances.trace_tol", self.tolerances.trace_tol)?;
        positive("tolerances.newton_tol", self.tolerances.newton_tol)?;
        positive("tolerances.pitch_factor", self.tolerances.pitch_factor)?;
        if let Some(d) = self.density.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(bad(format!("density.delta must lie in (0,1), got {d}")));
            }
        }
        if let Some(c) = self.density.count {
            if c < 100 {
                return Err(bad(format!("density.count must be at least 100, got {c}")));
            }
        }
        if let Some(s) = &self.density.source {
            if s != "leading" && s != "computed" {
                return Err(bad(format!(
                    "density.source must be leading or computed, got {s}"
                )));
            }
        }
        if let Some(s) = &self.spectrum.precision {
            if s != "double" && s != "double_double" {
                return Err(bad(format!(
                    "spectrum.precision must be double or double_double, got {s}"
                )));
            }
        }
        for (name, v) in [
            ("density.free_root", self.density.free_root),
            ("calibrate.free_root", self.calibrate.free_root),
        ] {
            if let Some(i) = v {
                if i > 3 {
                    return Err(bad(format!("{name} must be 0..=3, got {i}")));
                }
            }
        }
        self.region()?;
        Ok(())
    }
}

impl ConfigError {
    fn with_span(self, text: &str, span: Option<std::ops::Range<usize>>) -> ConfigError {
        match span {
            Some(s) => {
                let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                ConfigError(format!("{} (line {line})", self.0))
            }
            None => self,
        }
    }
}

/// Parses `x0,x1,y0,y1`.
pub fn parse_region(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("region component {t:?}: {e}"))
        })
        .collect::<Result<_, _>>()?;
    <[f64; 4]>::try_from(v).map_err(|v| format!("region needs 4 numbers, got {}", v.len()))
}

/// Parses a comma-separated list of reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_digest() {
        let a = RunConfig::from_toml("[potential]\ncoefficients = [-1.0, 0.0, 1.0]\n").unwrap();
        let b = RunConfig::from_toml("[potential]\ncoefficients = [-1, 0, 1]\n").unwrap();
        assert_eq!(a.poly().unwrap(), b.poly().unwrap());
        assert_eq!(a.digest(), a.clone().digest());
        assert_eq!(a.digest().len(), 64);
        let moved = RunConfig {
            out: Some("elsewhere".into()),
            ..a.clone()
        };
        assert_eq!(a.digest(), moved.digest());
        assert_eq!(a.poly().unwrap().degree(), 2);
    }

    #[test]
    fn unknown_field_is_named() {
        let e = RunConfig::from_toml("[potential]\ncoeffs = [1.0]\n").unwrap_err();
        assert!(e.0.contains("coeffs"), "{}", e.0);
    }

    #[test]
    fn region_parsing() {
        assert_eq!(parse_region("-1,1,0,2").unwrap(), [-1.0, 1.0, 0.0, 2.0]);
        assert!(parse_region("1,2").is_err());
    }
}
