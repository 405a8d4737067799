//! Run configuration read from a TOML file.
//!
//! Only `alpha` is required; every other key has a default. Unknown keys are
//! rejected.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use catgate::analysis::{BlochGridSpec, BlochMeasure, CurveModel, WignerGridSpec};
use catgate::detectors::{DetectorSpec, HomodyneWindow, DEFAULT_P_DARK};
use catgate::gate::{GateParams, Resource, DEFAULT_CUTOFFS, DEFAULT_NBAR, DEFAULT_SQUEEZING};
use catgate::states::{CsqSpec, ResourceSpec};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    #[serde(default = "d_transmittance")]
    pub transmittance: f64,
    #[serde(default = "d_input_tap")]
    pub input_tap: f64,
    #[serde(default = "d_resource_tap")]
    pub resource_tap: f64,
    #[serde(default = "d_cutoffs")]
    pub cutoffs: [usize; 4],
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub resource: ResourceConfig,
    #[serde(default)]
    pub detectors: DetectorConfig,
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub curve: CurveConfig,
    #[serde(default)]
    pub wigner: WignerConfig,
    #[serde(default)]
    pub tomography: TomographyConfig,
}

fn d_transmittance() -> f64 {
    0.25
}
fn d_input_tap() -> f64 {
    0.015
}
fn d_resource_tap() -> f64 {
    0.075
}
fn d_cutoffs() -> [usize; 4] {
    DEFAULT_CUTOFFS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceKind {
    SqueezedThermal,
    EvenCat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    #[serde(default = "d_resource_kind")]
    pub kind: ResourceKind,
    #[serde(default = "d_s")]
    pub s: f64,
    #[serde(default = "d_nbar")]
    pub nbar: f64,
    /// Amplitude of an even-cat resource; defaults to `alpha`.
    pub cat_alpha: Option<f64>,
}

fn d_resource_kind() -> ResourceKind {
    ResourceKind::SqueezedThermal
}
fn d_s() -> f64 {
    DEFAULT_SQUEEZING
}
fn d_nbar() -> f64 {
    DEFAULT_NBAR
}

impl Default for ResourceConfig {
    fn default() -> Self {
        Self {
            kind: d_resource_kind(),
            s: d_s(),
            nbar: d_nbar(),
            cat_alpha: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default = "d_eta_apd")]
    pub eta_apd: f64,
    #[serde(default = "d_p_dark")]
    pub p_dark: f64,
    #[serde(default = "d_eta_hd")]
    pub eta_hd: f64,
    #[serde(default = "d_x0")]
    pub x0: f64,
    #[serde(default = "d_delta")]
    pub delta: f64,
    /// Replace `x0` by the point balancing the two basis-state success
    /// probabilities.
    #[serde(default)]
    pub balance: bool,
}

fn d_eta_apd() -> f64 {
    0.25
}
fn d_p_dark() -> f64 {
    DEFAULT_P_DARK
}
fn d_eta_hd() -> f64 {
    0.77
}
fn d_x0() -> f64 {
    0.4
}
fn d_delta() -> f64 {
    0.02
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            eta_apd: d_eta_apd(),
            p_dark: d_p_dark(),
            eta_hd: d_eta_hd(),
            x0: d_x0(),
            delta: d_delta(),
            balance: false,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "d_grid")]
    pub n_theta: usize,
    #[serde(default = "d_grid")]
    pub n_phi: usize,
}

fn d_grid() -> usize {
    33
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_theta: d_grid(),
            n_phi: d_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveModelKind {
    Limit,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Average,
    Worst,
    Basis,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default = "d_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "d_model")]
    pub model: CurveModelKind,
    #[serde(default = "d_measure")]
    pub measure: MeasureKind,
}

fn d_alphas() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 10.0).collect()
}
fn d_model() -> CurveModelKind {
    CurveModelKind::Limit
}
fn d_measure() -> MeasureKind {
    MeasureKind::Average
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            alphas: d_alphas(),
            model: d_model(),
            measure: d_measure(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    #[serde(default = "d_wmin")]
    pub min: f64,
    #[serde(default = "d_wmax")]
    pub max: f64,
    #[serde(default = "d_wpoints")]
    pub points: usize,
}

fn d_wmin() -> f64 {
    -4.0
}
fn d_wmax() -> f64 {
    4.0
}
fn d_wpoints() -> usize {
    161
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            min: d_wmin(),
            max: d_wmax(),
            points: d_wpoints(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TomoSource {
    OddCat,
    EvenCat,
    /// Simulated gate output for `[input]`.
    Gate,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default = "d_source")]
    pub source: TomoSource,
    #[serde(default = "d_source_alpha")]
    pub source_alpha: f64,
    #[serde(default = "d_tomo_cutoff")]
    pub cutoff: usize,
    #[serde(default = "d_phases")]
    pub phases: usize,
    /// Total number of samples, split evenly over the phases.
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_eta_hd")]
    pub eta: f64,
    /// Efficiency folded into the reconstruction; 1 disables the correction.
    #[serde(default = "d_eta_hd")]
    pub correction: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default = "d_tol")]
    pub tol: f64,
}

fn d_source() -> TomoSource {
    TomoSource::OddCat
}
fn d_source_alpha() -> f64 {
    0.75
}
fn d_tomo_cutoff() -> usize {
    10
}
fn d_phases() -> usize {
    12
}
fn d_samples() -> usize {
    200_000
}
fn d_max_iter() -> usize {
    2000
}
fn d_tol() -> f64 {
    1e-6
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            source: d_source(),
            source_alpha: d_source_alpha(),
            cutoff: d_tomo_cutoff(),
            phases: d_phases(),
            samples: d_samples(),
            eta: d_eta_hd(),
            correction: d_eta_hd(),
            max_iter: d_max_iter(),
            tol: d_tol(),
        }
    }
}

impl RunConfig {
    pub fn default_with_alpha(alpha: f64) -> Self {
        toml::from_str(&format!("alpha = {alpha:?}")).expect("defaults deserialize")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.gate_params()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(0.0..=FRAC_PI_2).contains(&self.input.theta) || !self.input.phi.is_finite() {
            return bad(format!(
                "input.theta {} outside [0, π/2] or phi not finite",
                self.input.theta
            ));
        }
        if self.sweep.n_theta == 0 || self.sweep.n_phi == 0 {
            return bad("sweep grid must be nonempty".into());
        }
        if self.curve.alphas.is_empty() || self.curve.alphas.iter().any(|&a| !(a > 0.0 && a <= 2.0))
        {
            return bad("curve.alphas must be a nonempty list in (0, 2]".into());
        }
        if self.wigner.points == 0 || !(self.wigner.max >= self.wigner.min) {
            return bad("wigner grid needs points >= 1 and max >= min".into());
        }
        let t = &self.tomography;
        if t.cutoff < 2 || t.phases < catgate::tomography::MIN_PHASES || t.samples == 0 {
            return bad(format!(
                "tomography needs cutoff >= 2, phases >= {}, samples >= 1",
                catgate::tomography::MIN_PHASES
            ));
        }
        if !(0.0..=1.0).contains(&t.eta) || !(t.correction > 0.0 && t.correction <= 1.0) {
            return bad("tomography.eta must lie in [0, 1] and correction in (0, 1]".into());
        }
        if !(t.source_alpha > 0.0) || !(t.tol > 0.0) {
            return bad("tomography.source_alpha and tol must be positive".into());
        }
        Ok(())
    }

    pub fn gate_params(&self) -> GateParams {
        let resource = match self.resource.kind {
            ResourceKind::SqueezedThermal => Resource::SqueezedThermal(ResourceSpec {
                s: self.resource.s,
                nbar: self.resource.nbar,
            }),
            ResourceKind::EvenCat => {
                Resource::EvenCat(self.resource.cat_alpha.unwrap_or(self.alpha))
            }
        };
        let d = &self.detectors;
        GateParams {
            alpha: self.alpha,
            transmittance: self.transmittance,
            input_tap: self.input_tap,
            resource_tap: self.resource_tap,
            resource,
            detectors: DetectorSpec {
                eta_apd: d.eta_apd,
                p_dark: d.p_dark,
                eta_hd: d.eta_hd,
                window: HomodyneWindow {
                    x0: d.x0,
                    delta: d.delta,
                },
            },
            cutoffs: self.cutoffs,
        }
    }

    pub fn input_spec(&self) -> CsqSpec {
        CsqSpec {
            alpha: self.alpha,
            theta: self.input.theta,
            phi: self.input.phi,
        }
    }

    pub fn bloch_grid(&self) -> BlochGridSpec {
        BlochGridSpec {
            n_theta: self.sweep.n_theta,
            n_phi: self.sweep.n_phi,
        }
    }

    pub fn curve_model(&self) -> CurveModel {
        match self.curve.model {
            CurveModelKind::Limit => CurveModel::Limit,
            CurveModelKind::Finite => CurveModel::Finite {
                transmittance: self.transmittance,
            },
        }
    }

    pub fn curve_measure(&self) -> BlochMeasure {
        match self.curve.measure {
            MeasureKind::Average => BlochMeasure::Average,
            MeasureKind::Worst => BlochMeasure::Worst,
            MeasureKind::Basis => BlochMeasure::Basis,
        }
    }

    pub fn wigner_grid(&self) -> WignerGridSpec {
        WignerGridSpec {
            min: self.wigner.min,
            max: self.wigner.max,
            points: self.wigner.points,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse("alpha = 0.8\n").unwrap();
        assert_eq!(cfg.gate_params(), GateParams::default());
        assert_eq!(cfg.sweep.n_theta, 33);
    }

    #[test]
    fn missing_alpha_is_named() {
        let err = RunConfig::parse("transmittance = 0.25\n").unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("alpha = 0.8\nbogus = 1\n").is_err());
        assert!(RunConfig::parse("alpha = 0.8\n[detectors]\nefficiency = 1\n").is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        assert!(RunConfig::parse("alpha = 0.8\ninput_tap = 1.5\n").is_err());
        assert!(RunConfig::parse("alpha = -1\n").is_err());
        assert!(RunConfig::parse("alpha = 0.8\n[curve]\nalphas = [0.5, 3.0]\n").is_err());
    }
}
