//! Measurement models: pure-loss channels, on/off photodetection with dark
//! counts, and windowed homodyne detection behind a loss channel.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, ModeOperator, OperatorKind};
use crate::numerics::gauss_legendre;

/// Dark-count probability per heralding slot: 20 counts/s at an 815 kHz
/// pulse rate.
pub const DEFAULT_P_DARK: f64 = 20.0 / 815_000.0;

/// Gauss–Legendre nodes per panel of a window integral.
pub const WINDOW_NODES: usize = 8;

/// Agreement required between the 8- and 16-node panel rules.
pub const WINDOW_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneWindow {
    /// Centre of the accepted quadrature interval.
    pub x0: f64,
    /// Full width of the interval.
    pub delta: f64,
}

impl HomodyneWindow {
    pub fn new(x0: f64, delta: f64) -> Result<Self> {
        let w = Self { x0, delta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_finite() {
            return Err(Error::Argument(format!(
                "window centre {} is not finite",
                self.x0
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Argument(format!(
                "window width {} must be positive",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.x0 - 0.5 * self.delta, self.x0 + 0.5 * self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub eta_apd: f64,
    pub p_dark: f64,
    pub eta_hd: f64,
    pub window: HomodyneWindow,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self {
            eta_apd: 0.25,
            p_dark: DEFAULT_P_DARK,
            eta_hd: 0.77,
            window: HomodyneWindow {
                x0: 0.4,
                delta: 0.02,
            },
        }
    }
}

impl DetectorSpec {
    /// Unit efficiencies and no dark counts.
    pub fn ideal(window: HomodyneWindow) -> Self {
        Self {
            eta_apd: 1.0,
            p_dark: 0.0,
            eta_hd: 1.0,
            window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_apd", self.eta_apd),
            ("p_dark", self.p_dark),
            ("eta_hd", self.eta_hd),
        ] {
            check_probability(name, v)?;
        }
        self.window.validate()
    }
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Argument(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let lf = |m: usize| (1..=m).map(|j| (j as f64).ln()).sum::<f64>();
    lf(n) - lf(k) - lf(n - k)
}

/// Kraus operators `K_k = Σ_n √C(n,k) η^{(n−k)/2} (1−η)^{k/2} |n−k⟩⟨n|` of a
/// beam splitter with transmittance `η` and a vacuum ancilla.
pub fn loss_kraus(eta: f64, d: usize) -> Result<Vec<ModeOperator>> {
    check_probability("eta", eta)?;
    if d == 0 {
        return Err(Error::Argument("cutoff must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let mut m = DMatrix::<C64>::zeros(d, d);
        for n in k..d {
            let c = if eta == 1.0 || eta == 0.0 {
                let lost = if eta == 1.0 { 0 } else { n };
                if k == lost {
                    1.0
                } else {
                    0.0
                }
            } else {
                (0.5 * (ln_binomial(n, k)
                    + (n - k) as f64 * eta.ln()
                    + k as f64 * (1.0 - eta).ln()))
                .exp()
            };
            m[(n - k, n)] = C64::from(c);
        }
        out.push(ModeOperator::single(m, OperatorKind::Generic)?);
    }
    Ok(out)
}

/// Pure loss with transmittance `eta` on one mode of `rho`.
pub fn loss_channel(rho: &DensityOperator, eta: f64, mode: usize) -> Result<DensityOperator> {
    let d = *rho.dims().get(mode).ok_or_else(|| {
        Error::Dimension(format!("mode {mode} of a {}-mode state", rho.dims().len()))
    })?;
    let kraus = loss_kraus(eta, d)?;
    let mut acc: Option<DensityOperator> = None;
    for k in &kraus {
        let term = rho.sandwich_on(k, &[mode])?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add_weighted(&term, 1.0)?,
        });
    }
    Ok(acc
        .expect("at least one Kraus operator")
        .with_trace_deficit(rho.trace_deficit()))
}

/// Heisenberg-picture loss `Σ_k K_k† Π K_k` on a single-mode operator.
pub fn loss_adjoint(op: &ModeOperator, eta: f64) -> Result<ModeOperator> {
    if op.dims().len() != 1 {
        return Err(Error::Dimension(format!(
            "loss adjoint needs a single mode, got {:?}",
            op.dims()
        )));
    }
    let d = op.dim();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for k in loss_kraus(eta, d)? {
        out += k.matrix().adjoint() * op.matrix() * k.matrix();
    }
    ModeOperator::single(out, op.kind())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApdPovm {
    pub click: ModeOperator,
    pub no_click: ModeOperator,
}

/// On/off detector: `Π_click = I − (1−p_dark)(1−η)^n̂`.
pub fn apd_click_povm(spec: &DetectorSpec, d: usize) -> Result<ApdPovm> {
    check_probability("eta_apd", spec.eta_apd)?;
    check_probability("p_dark", spec.p_dark)?;
    if d == 0 {
        return Err(Error::Argument("cutoff must be >= 1".into()));
    }
    let none: Vec<f64> = (0..d)
        .map(|n| (1.0 - spec.p_dark) * (1.0 - spec.eta_apd).powi(n as i32))
        .collect();
    let click: Vec<f64> = none.iter().map(|q| 1.0 - q).collect();
    Ok(ApdPovm {
        click: ModeOperator::diagonal(&click, OperatorKind::Povm)?,
        no_click: ModeOperator::diagonal(&none, OperatorKind::Povm)?,
    })
}

/// Position-basis Fock wavefunctions `ψ_0(x) … ψ_{d−1}(x)`.
pub fn hermite_functions(x: f64, d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(d);
    if d == 0 {
        return out;
    }
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if d > 1 {
        out.push(2f64.sqrt() * x * out[0]);
    }
    for n in 1..d.saturating_sub(1) {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// `⟨x|n⟩`.
pub fn quadrature_wavefunction(n: usize, x: f64) -> f64 {
    hermite_functions(x, n + 1)[n]
}

/// Density of outcome `x` when measuring `x̂_θ = (â e^{−iθ} + â† e^{iθ})/√2`
/// on a single-mode state.
pub fn quadrature_density(rho: &DensityOperator, theta: f64, x: f64) -> Result<f64> {
    if rho.dims().len() != 1 {
        return Err(Error::Dimension(format!(
            "quadrature density needs one mode, got {:?}",
            rho.dims()
        )));
    }
    let d = rho.dim();
    let psi = hermite_functions(x, d);
    let amp: Vec<C64> = (0..d)
        .map(|n| C64::from_polar(psi[n], theta * n as f64))
        .collect();
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..d {
        for n in 0..d {
            acc += amp[m].conj() * rho.element(m, n) * amp[n];
        }
    }
    Ok(acc.re)
}

fn window_integral(a: f64, b: f64, d: usize, nodes: usize) -> DMatrix<f64> {
    let scale = 0.5 * PI / ((2 * d + 1) as f64).sqrt();
    let panels = ((b - a) / scale).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let (xs, ws) = gauss_legendre(nodes);
    let mut m = DMatrix::<f64>::zeros(d, d);
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (x, w) in xs.iter().zip(&ws) {
            let psi = hermite_functions(mid + 0.5 * h * x, d);
            let w = 0.5 * h * w;
            for i in 0..d {
                for j in 0..=i {
                    m[(i, j)] += w * psi[i] * psi[j];
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

/// Ideal projector `∫_a^b |x_θ⟩⟨x_θ| dx` with `|x_θ⟩ = e^{iθn̂}|x⟩`.
/// Fails if the panel rule has not converged to [`WINDOW_TOLERANCE`].
pub fn window_projector(a: f64, b: f64, theta: f64, d: usize) -> Result<ModeOperator> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Argument(format!("invalid window [{a}, {b}]")));
    }
    if d == 0 {
        return Err(Error::Argument("cutoff must be >= 1".into()));
    }
    let coarse = window_integral(a, b, d, WINDOW_NODES);
    let fine = window_integral(a, b, d, 2 * WINDOW_NODES);
    let err = (&coarse - &fine).amax();
    if err > WINDOW_TOLERANCE {
        return Err(Error::Numerical(format!(
            "window quadrature did not converge on [{a}, {b}] at cutoff {d} (error {err:.2e})"
        )));
    }
    let m = DMatrix::from_fn(d, d, |i, j| {
        C64::from_polar(fine[(i, j)], theta * (i as f64 - j as f64))
    });
    ModeOperator::single(m, OperatorKind::Povm)
}

/// Half-width beyond which every retained Fock wavefunction is negligible.
pub fn quadrature_extent(d: usize) -> f64 {
    ((2 * d + 1) as f64).sqrt() + 10.0
}

/// Windowed homodyne POVM at the LO phase `θ = 0`, behind loss `eta_hd`.
/// Windows wider than the support of the retained wavefunctions are clipped.
pub fn homodyne_window_povm(spec: &DetectorSpec, d: usize) -> Result<ModeOperator> {
    homodyne_window_povm_at(spec, 0.0, d)
}

pub fn homodyne_window_povm_at(spec: &DetectorSpec, theta: f64, d: usize) -> Result<ModeOperator> {
    check_probability("eta_hd", spec.eta_hd)?;
    spec.window.validate()?;
    let ext = quadrature_extent(d);
    let (a, b) = spec.window.bounds();
    let (a, b) = (a.max(-ext), b.min(ext));
    let ideal = if b > a {
        window_projector(a, b, theta, d)?
    } else {
        ModeOperator::single(DMatrix::zeros(d, d), OperatorKind::Povm)?
    };
    Ok(loss_adjoint(&ideal, spec.eta_hd)?.with_kind(OperatorKind::Povm))
}
