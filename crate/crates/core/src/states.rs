//! Constructors for the states used by the gate: coherent states,
//! coherent-state qubits, even/odd cats, squeezed vacuum and the squeezed
//! thermal resource.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockKet, LEAKAGE_THRESHOLD};
use crate::optics;

/// Coherent-state qubit `(u|α⟩ + v|−α⟩)/√N` with `u = cos θ`, `v = sin θ e^{iφ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsqSpec {
    pub alpha: f64,
    pub theta: f64,
    pub phi: f64,
}

impl CsqSpec {
    pub fn new(alpha: f64, theta: f64, phi: f64) -> Result<Self> {
        let spec = Self { alpha, theta, phi };
        spec.validate()?;
        Ok(spec)
    }

    /// `|α⟩`, the north pole.
    pub fn plus_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            theta: 0.0,
            phi: 0.0,
        }
    }

    /// `|−α⟩`, the south pole.
    pub fn minus_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            theta: FRAC_PI_2,
            phi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Argument(format!(
                "CSQ amplitude must be > 0, got {}",
                self.alpha
            )));
        }
        if !(0.0..=FRAC_PI_2 + 1e-12).contains(&self.theta) {
            return Err(Error::Argument(format!(
                "theta {} outside [0, π/2]",
                self.theta
            )));
        }
        if !self.phi.is_finite() {
            return Err(Error::Argument("phi must be finite".into()));
        }
        Ok(())
    }

    pub fn u(&self) -> C64 {
        C64::from(self.theta.cos())
    }

    pub fn v(&self) -> C64 {
        C64::from_polar(self.theta.sin(), self.phi)
    }

    /// `N = |u|² + |v|² + 2 Re(u* v) e^{−2α²}`.
    pub fn norm(&self) -> f64 {
        let (u, v) = (self.u(), self.v());
        u.norm_sqr()
            + v.norm_sqr()
            + 2.0 * (u.conj() * v).re * (-2.0 * self.alpha * self.alpha).exp()
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }
}

/// Squeezed thermal resource `Ŝ(s) ρ_th(n̄) Ŝ†(s)`.
///
/// `s` follows the `Ŝ(s) = exp[s(â² − â†²)/2]` convention: positive `s`
/// squeezes `x̂` to variance `e^{−2s}/2`, negative `s` squeezes `p̂` and
/// stretches `x̂`, which is the orientation that approximates an even cat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceSpec {
    pub s: f64,
    pub nbar: f64,
}

impl ResourceSpec {
    pub fn new(s: f64, nbar: f64) -> Result<Self> {
        let r = Self { s, nbar };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(Error::Argument("squeezing parameter must be finite".into()));
        }
        if !(self.nbar >= 0.0) || !self.nbar.is_finite() {
            return Err(Error::Argument(format!(
                "thermal occupation must be >= 0, got {}",
                self.nbar
            )));
        }
        Ok(())
    }

    /// Variance ratio of `x̂` relative to vacuum, `V = e^{−2s}`.
    pub fn variance_ratio(&self) -> f64 {
        (-2.0 * self.s).exp()
    }

    /// Squeezing of the squeezed quadrature in dB (positive number).
    pub fn squeezing_db(&self) -> f64 {
        s_to_db(self.s.abs())
    }
}

/// `dB = −10 log₁₀ V` with `V = e^{−2s}`.
pub fn s_to_db(s: f64) -> f64 {
    -10.0 * (-2.0 * s).exp().log10()
}

/// Inverse of [`s_to_db`].
pub fn db_to_s(db: f64) -> f64 {
    db * 10f64.ln() / 20.0
}

/// Parity of a cat state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatParity {
    Even,
    Odd,
}

impl CatParity {
    pub fn sign(self) -> f64 {
        match self {
            CatParity::Even => 1.0,
            CatParity::Odd => -1.0,
        }
    }
}

/// `N± = 2(1 ± e^{−2α²})`.
pub fn cat_norm(alpha: f64, parity: CatParity) -> f64 {
    let x = -2.0 * alpha * alpha;
    match parity {
        CatParity::Even => 2.0 * (1.0 + x.exp()),
        CatParity::Odd => -2.0 * x.exp_m1(),
    }
}

fn leakage_error(leakage: f64, cutoff: usize) -> Error {
    Error::Truncation {
        leakage,
        threshold: LEAKAGE_THRESHOLD,
        cutoff,
    }
}

/// Unnormalized coherent amplitudes over `d` levels and the untruncated
/// probability carried by levels `≥ d − 2`.
fn coherent_amplitudes(alpha: C64, d: usize) -> (Vec<C64>, f64) {
    let mut amps = Vec::with_capacity(d);
    let mut c = C64::from((-0.5 * alpha.norm_sqr()).exp());
    for n in 0..d {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps.push(c);
    }
    let low: f64 = amps
        .iter()
        .take(d.saturating_sub(2))
        .map(|a| a.norm_sqr())
        .sum();
    (amps, (1.0 - low).max(0.0))
}

/// `|α⟩` truncated at `d` levels and renormalized.
pub fn coherent(alpha: C64, d: usize) -> Result<FockKet> {
    if d == 0 {
        return Err(Error::Argument("cutoff must be >= 1".into()));
    }
    let (amps, leak) = coherent_amplitudes(alpha, d);
    if leak >= LEAKAGE_THRESHOLD {
        return Err(leakage_error(leak, d));
    }
    FockKet::from_amplitudes(amps)?.normalized()
}

/// Normalized coherent-state qubit.
pub fn csq(spec: &CsqSpec, d: usize) -> Result<FockKet> {
    spec.validate()?;
    let (amps, leak) = coherent_amplitudes(C64::from(spec.alpha), d);
    if leak >= LEAKAGE_THRESHOLD {
        return Err(leakage_error(leak, d));
    }
    let (u, v) = (spec.u(), spec.v());
    let amps = amps
        .iter()
        .enumerate()
        .map(|(n, &c)| c * if n % 2 == 0 { u + v } else { u - v })
        .collect();
    FockKet::from_amplitudes(amps)?.normalized()
}

/// Even (`+`) or odd (`−`) cat `(|α⟩ ± |−α⟩)/√N±`.
///
/// Built by parity filtering, so the forbidden parity is exactly zero and the
/// small-α limit stays accurate.
pub fn cat(alpha: f64, parity: CatParity, d: usize) -> Result<FockKet> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Argument(format!(
            "cat amplitude must be > 0, got {alpha}"
        )));
    }
    let (amps, leak) = coherent_amplitudes(C64::from(alpha), d);
    if leak >= LEAKAGE_THRESHOLD {
        return Err(leakage_error(leak, d));
    }
    let keep = match parity {
        CatParity::Even => 0,
        CatParity::Odd => 1,
    };
    if keep >= d {
        return Err(Error::Argument(format!(
            "cutoff {d} cannot hold an odd cat"
        )));
    }
    let amps = amps
        .iter()
        .enumerate()
        .map(|(n, &c)| if n % 2 == keep { c } else { C64::from(0.0) })
        .collect();
    FockKet::from_amplitudes(amps)?.normalized()
}

/// Squeezed vacuum `Ŝ(s)|0⟩`:
/// `c₂ₘ = (−tanh s)^m √((2m)!)/(2^m m!) / √cosh s`.
pub fn squeezed_vacuum(s: f64, d: usize) -> Result<FockKet> {
    if d == 0 {
        return Err(Error::Argument("cutoff must be >= 1".into()));
    }
    let t = -s.tanh();
    let mut amps = vec![C64::from(0.0); d];
    let mut c = 1.0 / s.cosh().sqrt();
    let mut n = 0;
    while n < d {
        amps[n] = C64::from(c);
        let m = (n / 2) as f64;
        c *= t * ((2.0 * m + 1.0) / (2.0 * m + 2.0)).sqrt();
        n += 2;
    }
    let low: f64 = amps
        .iter()
        .take(d.saturating_sub(2))
        .map(|a| a.norm_sqr())
        .sum();
    let leak = (1.0 - low).max(0.0);
    if leak >= LEAKAGE_THRESHOLD {
        return Err(leakage_error(leak, d));
    }
    FockKet::from_amplitudes(amps)?.normalized()
}

/// Thermal state with populations `n̄ⁿ/(1+n̄)^{n+1}`, renormalized over `d` levels.
pub fn thermal(nbar: f64, d: usize) -> Result<DensityOperator> {
    if !(nbar >= 0.0) {
        return Err(Error::Argument(format!(
            "thermal occupation must be >= 0, got {nbar}"
        )));
    }
    let q = nbar / (1.0 + nbar);
    let pops: Vec<f64> = (0..d).map(|n| q.powi(n as i32) / (1.0 + nbar)).collect();
    let total: f64 = pops.iter().sum();
    let top: f64 = pops[d.saturating_sub(2)..].iter().sum::<f64>() + (1.0 - total).max(0.0);
    if top >= LEAKAGE_THRESHOLD {
        return Err(leakage_error(top, d));
    }
    let pops: Vec<f64> = pops.iter().map(|p| p / total).collect();
    Ok(DensityOperator::diagonal(&pops)?.with_trace_deficit((1.0 - total).max(0.0)))
}

/// Squeezed thermal state `Ŝ(s) ρ_th(n̄) Ŝ†(s)` at cutoff `d`.
///
/// Built in a padded space (`2d + 16` levels) and cropped; the cropped weight
/// is recorded as trace deficit and the state renormalized.
pub fn squeezed_thermal(spec: &ResourceSpec, d: usize) -> Result<DensityOperator> {
    spec.validate()?;
    let padded = 2 * d + 16;
    let q = spec.nbar / (1.0 + spec.nbar);
    let pops: Vec<f64> = (0..padded)
        .map(|n| q.powi(n as i32) / (1.0 + spec.nbar))
        .collect();
    let s_op = optics::squeeze_with_padding(spec.s, padded, 8)?;
    let sm = s_op.matrix();
    let mut full = DMatrix::<C64>::zeros(padded, padded);
    for (n, &p) in pops.iter().enumerate() {
        if p < 1e-300 {
            continue;
        }
        let col = sm.column(n);
        full += (col * col.adjoint()) * C64::from(p);
    }
    let total = full.trace().re;
    let cropped = full.view((0, 0), (d, d)).into_owned();
    let kept = cropped.trace().re;
    let top: f64 = (d.saturating_sub(2)..d)
        .map(|n| cropped[(n, n)].re)
        .sum::<f64>()
        + (total - kept);
    if top >= LEAKAGE_THRESHOLD {
        return Err(leakage_error(top, d));
    }
    let mut rho = DensityOperator::single(cropped)?.normalized()?;
    rho = rho.with_trace_deficit((1.0 - kept).max(0.0));
    Ok(rho)
}

/// Number state `|n⟩`.
pub fn fock(n: usize, d: usize) -> Result<FockKet> {
    FockKet::basis(n, d)
}

/// Ideal Hadamard image `u·cat₊ + v·cat₋` of the CSQ `spec`, normalized.
pub fn hadamard_image(spec: &CsqSpec, d: usize) -> Result<FockKet> {
    let even = cat(spec.alpha, CatParity::Even, d)?;
    let odd = cat(spec.alpha, CatParity::Odd, d)?;
    even.scaled(spec.u())
        .add_scaled(&odd, spec.v())?
        .normalized()
}

/// Quadrature variance `⟨x̂²⟩ − ⟨x̂⟩²` of a single-mode ket along phase `theta`.
pub fn quadrature_variance(ket: &FockKet, theta: f64) -> Result<f64> {
    if ket.dims().len() != 1 {
        return Err(Error::Dimension(
            "quadrature variance needs a single-mode ket".into(),
        ));
    }
    let d = ket.cutoff();
    let mut xm = DMatrix::<C64>::zeros(d, d);
    let e = C64::from_polar(1.0, theta);
    for n in 1..d {
        let a = (n as f64 / 2.0).sqrt();
        xm[(n - 1, n)] = e.conj() * a;
        xm[(n, n - 1)] = e * a;
    }
    let psi: &DVector<C64> = ket.amplitudes();
    let norm = ket.norm_sqr();
    let mean = psi.dotc(&(&xm * psi)).re / norm;
    let sq = psi.dotc(&(&xm * (&xm * psi))).re / norm;
    Ok(sq - mean * mean)
}

/// Wraps an angle to `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    phi.rem_euclid(2.0 * PI)
}
