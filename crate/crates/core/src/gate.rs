//! The heralded Hadamard gate: analytic output states for an ideal cat or a
//! squeezed-vacuum resource, and the realistic four-mode conditioned
//! simulation with lossy detectors.
//!
//! Mode layout of the realistic circuit (0-based):
//! 0 displaced input, 1 input tap, 2 resource tap routed to the APD,
//! 3 resource and output. The input tap and resource tap are mixed on a
//! beam splitter of transmittance `t_bs²`; the APD watches mode 2 and the
//! homodyne detector mode 0.

use std::f64::consts::SQRT_2;

use num_complex::Complex64 as C64;

use crate::detectors::{apd_click_povm, homodyne_window_povm, DetectorSpec, HomodyneWindow};
use crate::error::{Error, Result};
use crate::fock::{
    apply_unitary, partial_trace, DensityOperator, FockKet, ModeOperator, TensorProduct,
};
use crate::numerics::{bisect, maximize};
use crate::optics::{beam_splitter, BeamSplitterSpec};
use crate::states::{
    cat, cat_norm, coherent, hadamard_image, squeezed_thermal, squeezed_vacuum, CatParity, CsqSpec,
    ResourceSpec,
};

/// Squeezing of the default resource (2.6 dB, anti-squeezed along `x̂`).
pub const DEFAULT_SQUEEZING: f64 = -0.2993;

/// Thermal occupation of the default resource.
pub const DEFAULT_NBAR: f64 = 0.02;

/// Eigen-components of the resource below this weight are dropped.
const COMPONENT_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub enum Resource {
    SqueezedThermal(ResourceSpec),
    /// Ideal even cat of the given amplitude.
    EvenCat(f64),
}

impl Resource {
    pub fn density(&self, d: usize) -> Result<DensityOperator> {
        match self {
            Resource::SqueezedThermal(spec) => squeezed_thermal(spec, d),
            Resource::EvenCat(alpha) => Ok(cat(*alpha, CatParity::Even, d)?.to_density()),
        }
    }
}

/// Per-mode cutoffs `[input, input tap, resource tap, resource]`.
pub type Cutoffs = [usize; 4];

pub const DEFAULT_CUTOFFS: Cutoffs = [16, 4, 4, 16];

#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub alpha: f64,
    /// Intensity transmittance of the beam splitter mixing the two taps.
    pub transmittance: f64,
    /// Fraction of the input reflected towards the APD.
    pub input_tap: f64,
    /// Fraction of the resource reflected towards the APD.
    pub resource_tap: f64,
    pub resource: Resource,
    pub detectors: DetectorSpec,
    pub cutoffs: Cutoffs,
}

impl Default for GateParams {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            transmittance: 0.25,
            input_tap: 0.015,
            resource_tap: 0.075,
            resource: Resource::SqueezedThermal(ResourceSpec {
                s: DEFAULT_SQUEEZING,
                nbar: DEFAULT_NBAR,
            }),
            detectors: DetectorSpec::default(),
            cutoffs: DEFAULT_CUTOFFS,
        }
    }
}

impl GateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Argument(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        for (name, v) in [
            ("transmittance", self.transmittance),
            ("input_tap", self.input_tap),
            ("resource_tap", self.resource_tap),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Argument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        match &self.resource {
            Resource::SqueezedThermal(r) => r.validate()?,
            Resource::EvenCat(a) if !(*a > 0.0) => {
                return Err(Error::Argument(format!(
                    "cat resource amplitude must be > 0, got {a}"
                )))
            }
            Resource::EvenCat(_) => {}
        }
        if self.cutoffs.iter().any(|&d| d < 2) {
            return Err(Error::Argument(format!(
                "every cutoff must be >= 2, got {:?}",
                self.cutoffs
            )));
        }
        self.detectors.validate()
    }

    pub fn with_window(&self, window: HomodyneWindow) -> Self {
        let mut p = self.clone();
        p.detectors.window = window;
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateResult {
    /// Conditioned output, trace one.
    pub rho_out: DensityOperator,
    pub p_success: f64,
    /// Fidelity with the Hadamard image of the input at the nominal amplitude.
    pub fidelity_vs_ideal: f64,
    /// Target amplitude maximizing the fidelity.
    pub target_alpha_opt: f64,
    pub fidelity_at_opt: f64,
}

/// `Y₁ = (t/2r)√(N₋/N₊)`.
pub fn y1(t: f64, r: f64, alpha: f64) -> Result<f64> {
    if r == 0.0 {
        return Err(Error::Argument("reflectance r must be nonzero".into()));
    }
    Ok(t / (2.0 * r) * (cat_norm(alpha, CatParity::Odd) / cat_norm(alpha, CatParity::Even)).sqrt())
}

/// `Y₂ = −t sinh(s)/(2rα)`.
pub fn y2(t: f64, r: f64, s: f64, alpha: f64) -> Result<f64> {
    if r == 0.0 || alpha == 0.0 {
        return Err(Error::Argument("Y₂ needs r ≠ 0 and α ≠ 0".into()));
    }
    Ok(-t * s.sinh() / (2.0 * r * alpha))
}

/// `Z = ⟨x|0⟩/⟨x|2α⟩ = exp(4α² − 2√2 α x)`.
pub fn z_factor(alpha: f64, x: f64) -> Result<f64> {
    let z = (4.0 * alpha * alpha - 2.0 * SQRT_2 * alpha * x).exp();
    if !z.is_finite() || z == 0.0 {
        return Err(Error::Numerical(format!("Z overflows at α={alpha}, x={x}")));
    }
    Ok(z)
}

/// `u·cat₊ + Y₁(u + vZ)·cat₋`, normalized.
pub fn ideal_output(spec: &CsqSpec, t: f64, r: f64, x: f64, d: usize) -> Result<FockKet> {
    spec.validate()?;
    let y = y1(t, r, spec.alpha)?;
    let z = z_factor(spec.alpha, x)?;
    let (u, v) = (spec.u(), spec.v());
    let even = cat(spec.alpha, CatParity::Even, d)?;
    let odd = cat(spec.alpha, CatParity::Odd, d)?;
    even.scaled(u)
        .add_scaled(&odd, (u + v * z) * y)?
        .normalized()
}

/// `Ŝ(s)|1⟩ = (â† cosh s + â sinh s) Ŝ(s)|0⟩`.
pub fn squeezed_single_photon(s: f64, d: usize) -> Result<FockKet> {
    let sv = squeezed_vacuum(s, d + 2)?;
    let c = sv.amplitudes();
    let (ch, sh) = (s.cosh(), s.sinh());
    let amps: Vec<C64> = (0..d)
        .map(|n| {
            let up = if n > 0 {
                c[n - 1] * (n as f64).sqrt() * ch
            } else {
                C64::from(0.0)
            };
            up + c[n + 1] * ((n + 1) as f64).sqrt() * sh
        })
        .collect();
    let ket = FockKet::from_amplitudes(amps)?;
    let leak = 1.0 - ket.norm_sqr();
    if leak >= crate::fock::LEAKAGE_THRESHOLD {
        return Err(Error::Truncation {
            leakage: leak,
            threshold: crate::fock::LEAKAGE_THRESHOLD,
            cutoff: d,
        });
    }
    ket.normalized()
}

/// `u·Ŝ(s)|0⟩ + Y₂(u + vZ)·Ŝ(s)|1⟩`, normalized.
pub fn squeezed_resource_output(
    spec: &CsqSpec,
    t: f64,
    r: f64,
    s: f64,
    x: f64,
    d: usize,
) -> Result<FockKet> {
    spec.validate()?;
    let y = y2(t, r, s, spec.alpha)?;
    let z = z_factor(spec.alpha, x)?;
    let (u, v) = (spec.u(), spec.v());
    let s0 = squeezed_vacuum(s, d)?;
    let s1 = squeezed_single_photon(s, d)?;
    s0.scaled(u).add_scaled(&s1, (u + v * z) * y)?.normalized()
}

/// Heralding quadrature solving `|Z(x) Y₂| = 1`.
pub fn optimal_heralding_x(t: f64, r: f64, s: f64, alpha: f64) -> Result<f64> {
    let y = y2(t, r, s, alpha)?.abs();
    if y == 0.0 {
        return Err(Error::Argument("Y₂ = 0: no photon-subtraction path".into()));
    }
    if y > 1.0 {
        return Err(Error::Infeasible(format!(
            "|Y₂| = {y:.4} > 1 leaves no heralding point with Z > 1"
        )));
    }
    Ok((4.0 * alpha * alpha + y.ln()) / (2.0 * SQRT_2 * alpha))
}

/// Input after the displacement `D̂(α)`: `(u|2α⟩ + v|0⟩)/√N`.
pub fn displaced_input(spec: &CsqSpec, d: usize) -> Result<FockKet> {
    spec.validate()?;
    let far = coherent(C64::from(2.0 * spec.alpha), d)?;
    let vac = FockKet::basis(0, d)?;
    far.scaled(spec.u())
        .add_scaled(&vac, spec.v())?
        .normalized()
}

/// Reusable conditioned evolution for a fixed parameter set.
#[derive(Debug, Clone)]
pub struct GateEngine {
    params: GateParams,
    components: Vec<(f64, FockKet)>,
    hd: ModeOperator,
    click: ModeOperator,
    splitters: [BeamSplitterSpec; 3],
}

impl GateEngine {
    pub fn new(params: &GateParams) -> Result<Self> {
        params.validate()?;
        let [d0, _, d2, d3] = params.cutoffs;
        let rho_a = params.resource.density(d3)?;
        let components = rho_a.pure_components(COMPONENT_FLOOR);
        let hd = homodyne_window_povm(&params.detectors, d0)?;
        let click = apd_click_povm(&params.detectors, d2)?.click;
        let splitters = [
            BeamSplitterSpec::from_reflectance(params.input_tap, (0, 1))?,
            BeamSplitterSpec::from_reflectance(params.resource_tap, (3, 2))?,
            BeamSplitterSpec::from_transmittance(params.transmittance, (1, 2))?,
        ];
        Ok(Self {
            params: params.clone(),
            components,
            hd,
            click,
            splitters,
        })
    }

    pub fn params(&self) -> &GateParams {
        &self.params
    }

    /// Unnormalized conditioned state of the leading modes of `input` and the
    /// output mode. The last mode of `input` enters the gate; any earlier
    /// modes are carried along untouched.
    pub fn condition(&self, input: &FockKet) -> Result<DensityOperator> {
        let [d0, d1, d2, _] = self.params.cutoffs;
        let extra = input.dims().len() - 1;
        if input.dims()[extra] != d0 {
            return Err(Error::Dimension(format!(
                "gate input has cutoff {} but the circuit expects {d0}",
                input.dims()[extra]
            )));
        }
        let taps = FockKet::vacuum(&[d1, d2])?;
        let head = input.tensor(&taps)?;
        let mut acc: Option<DensityOperator> = None;
        for (w, phi) in &self.components {
            let mut ket = head.tensor(phi)?;
            for spec in &self.splitters {
                let shifted = BeamSplitterSpec {
                    modes: (spec.modes.0 + extra, spec.modes.1 + extra),
                    ..*spec
                };
                ket = beam_splitter(&shifted, ket.dims())?.apply(&ket)?;
            }
            let mut keep: Vec<usize> = (0..extra).collect();
            keep.push(extra + 3);
            let part =
                ket.reduce_with_povm(&[(extra, &self.hd), (extra + 2, &self.click)], &keep)?;
            acc = Some(match acc {
                None => part.scaled(*w),
                Some(a) => a.add_weighted(&part, *w)?,
            });
        }
        acc.ok_or_else(|| Error::Numerical("resource has no components".into()))
    }

    /// Success probability and normalized output for a single-mode input
    /// already displaced by `D̂(α)`.
    pub fn run(&self, displaced: &FockKet) -> Result<(DensityOperator, f64)> {
        let raw = self.condition(displaced)?;
        let p = raw.trace_re();
        if !(p >= 1e-300) {
            return Err(Error::DegenerateConditioning(p));
        }
        Ok((raw.scaled(1.0 / p), p))
    }

    pub fn simulate(&self, spec: &CsqSpec) -> Result<GateResult> {
        let d3 = self.params.cutoffs[3];
        let (rho_out, p_success) = self.run(&displaced_input(spec, self.params.cutoffs[0])?)?;
        let nominal = spec.with_alpha(self.params.alpha);
        let fidelity_vs_ideal =
            crate::analysis::fidelity(&rho_out, &hadamard_image(&nominal, d3)?)?;
        let (target_alpha_opt, fidelity_at_opt) = maximize(
            |a| {
                hadamard_image(&spec.with_alpha(a), d3)
                    .and_then(|k| crate::analysis::fidelity(&rho_out, &k))
                    .unwrap_or(0.0)
            },
            0.2,
            1.4,
            25,
            1e-3,
        );
        Ok(GateResult {
            rho_out,
            p_success,
            fidelity_vs_ideal,
            target_alpha_opt,
            fidelity_at_opt,
        })
    }

    /// Probability of an APD click alone, without the homodyne window.
    pub fn click_probability(&self, spec: &CsqSpec) -> Result<f64> {
        let mut open = self.params.clone();
        open.detectors.window = HomodyneWindow {
            x0: 0.0,
            delta: 1e6,
        };
        open.detectors.eta_hd = 1.0;
        let engine = GateEngine::new(&open)?;
        Ok(engine
            .condition(&displaced_input(spec, self.params.cutoffs[0])?)?
            .trace_re())
    }
}

pub fn simulate_gate(params: &GateParams, spec: &CsqSpec) -> Result<GateResult> {
    GateEngine::new(params)?.simulate(spec)
}

/// The same conditioned evolution built from dense density operators:
/// `Tr₀₁₂[Û ρ_in Û† (Π_HD ⊗ I ⊗ Π_click ⊗ I)]`. Returns the unnormalized
/// output; its trace is the success probability. Intended for small cutoffs.
pub fn simulate_gate_dense(params: &GateParams, spec: &CsqSpec) -> Result<DensityOperator> {
    params.validate()?;
    let [d0, d1, d2, d3] = params.cutoffs;
    let input = displaced_input(spec, d0)?.to_density();
    let vac1 = FockKet::basis(0, d1)?.to_density();
    let vac2 = FockKet::basis(0, d2)?.to_density();
    let rho_a = params.resource.density(d3)?;
    let mut rho = input.tensor(&vac1)?.tensor(&vac2)?.tensor(&rho_a)?;
    let dims = params.cutoffs.to_vec();
    for spec in [
        BeamSplitterSpec::from_reflectance(params.input_tap, (0, 1))?,
        BeamSplitterSpec::from_reflectance(params.resource_tap, (3, 2))?,
        BeamSplitterSpec::from_transmittance(params.transmittance, (1, 2))?,
    ] {
        rho = apply_unitary(&beam_splitter(&spec, &dims)?, &rho)?;
    }
    let hd = homodyne_window_povm(&params.detectors, d0)?;
    let click = apd_click_povm(&params.detectors, d2)?.click;
    let rho = rho.left_mul_on(&hd, &[0])?.left_mul_on(&click, &[2])?;
    partial_trace(&rho, &[3])
}

/// Finds the homodyne window centre (width fixed) at which `|α⟩` and `|−α⟩`
/// succeed equally often.
pub fn balance_window(params: &GateParams) -> Result<HomodyneWindow> {
    balance_window_between(
        params,
        &CsqSpec::plus_alpha(params.alpha),
        &CsqSpec::minus_alpha(params.alpha),
    )
}

/// Window centre balancing the success probabilities of two inputs. Returns
/// `x₀ = 0` when they already agree within 5% there; otherwise scans `[0, 3]`
/// for a crossing and bisects.
pub fn balance_window_between(
    params: &GateParams,
    a: &CsqSpec,
    b: &CsqSpec,
) -> Result<HomodyneWindow> {
    let delta = params.detectors.window.delta;
    let d0 = params.cutoffs[0];
    let plus = displaced_input(a, d0)?;
    let minus = displaced_input(b, d0)?;
    let log_ratio = |x: f64| -> Result<f64> {
        let engine = GateEngine::new(&params.with_window(HomodyneWindow { x0: x, delta }))?;
        let pp = engine.condition(&plus)?.trace_re();
        let pm = engine.condition(&minus)?.trace_re();
        if !(pp > 0.0 && pm > 0.0) {
            return Err(Error::DegenerateConditioning(pp.min(pm)));
        }
        Ok((pp / pm).ln())
    };
    let at_zero = log_ratio(0.0)?;
    if at_zero.abs() <= 1.05f64.ln() {
        return Ok(HomodyneWindow { x0: 0.0, delta });
    }
    let mut prev = (0.0, at_zero);
    for k in 1..=30 {
        let x = 0.1 * k as f64;
        let f = log_ratio(x)?;
        if (f < 0.0) != (prev.1 < 0.0) {
            let mut err = None;
            let x0 = bisect(
                |x| match log_ratio(x) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                prev.0,
                x,
                1e-5,
            );
            if let Some(e) = err {
                return Err(e);
            }
            return Ok(HomodyneWindow { x0, delta });
        }
        prev = (x, f);
    }
    Err(Error::Infeasible(
        "success probabilities never cross for x₀ in [0, 3]".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    const T: f64 = 0.5;

    fn r() -> f64 {
        0.75f64.sqrt()
    }

    #[test]
    fn y2_at_nominal_squeezing() {
        let y = y2(T, r(), 0.2993, 0.8).unwrap();
        assert!((y + 0.5 * 0.2993f64.sinh() / (2.0 * r() * 0.8)).abs() < 1e-15);
        assert!((y + 0.1099).abs() < 5e-4);
    }

    #[test]
    fn unsqueezed_resource_outputs_vacuum() {
        for theta in [0.0, 0.4, FRAC_PI_2] {
            let spec = CsqSpec::new(0.8, theta, 0.3).unwrap();
            let out = squeezed_resource_output(&spec, T, r(), 0.0, 0.2, 12).unwrap();
            assert!(out.fidelity(&FockKet::basis(0, 12).unwrap()).unwrap() > 1.0 - 1e-15);
        }
    }

    #[test]
    fn squeezed_output_on_plus_alpha() {
        let s = -0.2993;
        let y = y2(T, r(), s, 0.8).unwrap();
        let x = optimal_heralding_x(T, r(), s, 0.8).unwrap();
        let out = squeezed_resource_output(&CsqSpec::plus_alpha(0.8), T, r(), s, x, 30).unwrap();
        let s0 = squeezed_vacuum(s, 30).unwrap();
        let s1 = squeezed_single_photon(s, 30).unwrap();
        let expected = s0
            .add_scaled(&s1, C64::from(y))
            .unwrap()
            .normalized()
            .unwrap();
        assert!(out.fidelity(&expected).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn squeezed_single_photon_matches_operator_route() {
        let s = 0.35;
        let d = 30;
        let direct = crate::optics::squeeze(s, 40)
            .unwrap()
            .apply(&FockKet::basis(1, 40).unwrap())
            .unwrap();
        let closed = squeezed_single_photon(s, d).unwrap();
        let direct = direct.resized(d).unwrap().normalized().unwrap();
        assert!(closed.fidelity(&direct).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn heralding_x_closed_form() {
        let alpha = 0.8;
        let y = 0.1099f64;
        let x = (4.0 * alpha * alpha - (1.0 / y).ln()) / (2.0 * SQRT_2 * alpha);
        assert!((x - 0.1555).abs() < 1e-3);
        let s = y2_inverse(y, alpha);
        let got = optimal_heralding_x(T, r(), s, alpha).unwrap();
        assert!((got - x).abs() < 1e-12);
        let z = z_factor(alpha, got).unwrap();
        assert!((z * y - 1.0).abs() < 1e-12);
    }

    fn y2_inverse(y: f64, alpha: f64) -> f64 {
        -(y * 2.0 * r() * alpha / T).asinh()
    }

    #[test]
    fn unit_y2_gives_z_one() {
        let alpha = 0.8;
        let s = y2_inverse(1.0, alpha);
        let x = optimal_heralding_x(T, r(), s, alpha).unwrap();
        assert!((x - SQRT_2 * alpha).abs() < 1e-12);
    }

    #[test]
    fn heralding_x_grows_with_squeezing() {
        let xs: Vec<f64> = [0.1, 0.2, 0.3, 0.5, 0.8]
            .iter()
            .map(|&s| optimal_heralding_x(T, r(), -s, 0.8).unwrap())
            .collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn heralding_x_infeasible_for_large_y2() {
        let s = y2_inverse(1.5, 0.8);
        assert!(matches!(
            optimal_heralding_x(T, r(), s, 0.8),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn ideal_output_without_subtraction_path() {
        let spec = CsqSpec::new(0.8, 0.6, 1.0).unwrap();
        let out = ideal_output(&spec, 0.0, 1.0, 0.3, 16).unwrap();
        let even = cat(0.8, CatParity::Even, 16).unwrap();
        assert!(out.fidelity(&even).unwrap() > 1.0 - 1e-14);
    }

    #[test]
    fn ideal_output_approaches_odd_cat() {
        // Z Y₁ = 1 with t → 0 pushes Z → ∞.
        let spec = CsqSpec::minus_alpha(0.8);
        let odd = cat(0.8, CatParity::Odd, 16).unwrap();
        let mut last = 0.0;
        for t in [0.3f64, 0.1, 0.01] {
            let r = (1.0 - t * t).sqrt();
            let y = y1(t, r, 0.8).unwrap();
            let x = (4.0 * 0.64 + y.ln()) / (2.0 * SQRT_2 * 0.8);
            let f = ideal_output(&spec, t, r, x, 16)
                .unwrap()
                .fidelity(&odd)
                .unwrap();
            assert!(f >= last);
            last = f;
        }
        assert!(last > 1.0 - 1e-12);
    }

    #[test]
    fn ideal_output_on_plus_alpha_at_balance() {
        let spec = CsqSpec::plus_alpha(0.8);
        let y = y1(T, r(), 0.8).unwrap();
        let x = (4.0 * 0.64 + y.ln()) / (2.0 * SQRT_2 * 0.8);
        let out = ideal_output(&spec, T, r(), x, 16).unwrap();
        let even = cat(0.8, CatParity::Even, 16).unwrap();
        let odd = cat(0.8, CatParity::Odd, 16).unwrap();
        let expected = even
            .add_scaled(&odd, C64::from(y))
            .unwrap()
            .normalized()
            .unwrap();
        assert!(out.fidelity(&expected).unwrap() > 1.0 - 1e-13);
        let f = out.fidelity(&hadamard_image(&spec, 16).unwrap()).unwrap();
        assert!((f - 1.0 / (1.0 + y * y)).abs() < 1e-13);
    }

    #[test]
    fn displaced_basis_inputs() {
        let plus = displaced_input(&CsqSpec::plus_alpha(0.8), 16).unwrap();
        assert!(
            plus.fidelity(&coherent(C64::from(1.6), 16).unwrap())
                .unwrap()
                > 1.0 - 1e-14
        );
        let minus = displaced_input(&CsqSpec::minus_alpha(0.8), 16).unwrap();
        assert!(minus.fidelity(&FockKet::basis(0, 16).unwrap()).unwrap() > 1.0 - 1e-14);
    }

    #[test]
    fn displaced_input_matches_displacement_operator() {
        let spec = CsqSpec::new(0.8, 0.7, 2.1).unwrap();
        let d = crate::optics::displacement_with_padding(C64::from(0.8), 24, 24).unwrap();
        let via_op = d.apply(&crate::states::csq(&spec, 24).unwrap()).unwrap();
        let direct = displaced_input(&spec, 24).unwrap();
        assert!(via_op.fidelity(&direct).unwrap() > 1.0 - 1e-9);
    }

    fn small() -> GateParams {
        GateParams {
            cutoffs: [10, 3, 3, 10],
            alpha: 0.4,
            resource: Resource::SqueezedThermal(ResourceSpec {
                s: -0.15,
                nbar: 0.02,
            }),
            ..GateParams::default()
        }
    }

    #[test]
    fn engine_agrees_with_dense_route() {
        let params = small();
        for spec in [
            CsqSpec::plus_alpha(0.4),
            CsqSpec::minus_alpha(0.4),
            CsqSpec::new(0.4, 0.5, 1.2).unwrap(),
        ] {
            let dense = simulate_gate_dense(&params, &spec).unwrap();
            let fast = GateEngine::new(&params)
                .unwrap()
                .condition(&displaced_input(&spec, 10).unwrap())
                .unwrap();
            assert!((dense.trace_re() - fast.trace_re()).abs() < 1e-12);
            assert!(crate::fock::max_abs(&(dense.matrix() - fast.matrix())) < 1e-12);
        }
    }

    #[test]
    fn no_taps_and_no_dark_counts_never_herald() {
        let params = GateParams {
            input_tap: 0.0,
            resource_tap: 0.0,
            detectors: DetectorSpec {
                p_dark: 0.0,
                ..DetectorSpec::default()
            },
            ..small()
        };
        let spec = CsqSpec::plus_alpha(0.4);
        let p = GateEngine::new(&params)
            .unwrap()
            .condition(&displaced_input(&spec, 10).unwrap())
            .unwrap();
        assert!(p.trace_re().abs() < 1e-18);
        assert!(matches!(
            simulate_gate(&params, &spec),
            Err(Error::DegenerateConditioning(_))
        ));
    }

    #[test]
    fn no_taps_leaves_dark_count_heralding() {
        let params = GateParams {
            input_tap: 0.0,
            resource_tap: 0.0,
            ..small()
        };
        let spec = CsqSpec::plus_alpha(0.4);
        let engine = GateEngine::new(&params).unwrap();
        let p = engine
            .condition(&displaced_input(&spec, 10).unwrap())
            .unwrap()
            .trace_re();
        let hd = homodyne_window_povm(&params.detectors, 10).unwrap();
        let vac_window = (displaced_input(&spec, 10).unwrap().to_density().matrix() * hd.matrix())
            .trace()
            .re;
        assert!((p - params.detectors.p_dark * vac_window).abs() < 1e-15);
    }

    #[test]
    fn symmetric_setup_balances_at_origin() {
        let spec = CsqSpec::new(0.4, 0.3, 0.0).unwrap();
        let w = balance_window_between(&small(), &spec, &spec).unwrap();
        assert!(w.x0.abs() < 1e-12);
    }
}
