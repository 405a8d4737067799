//! Figures of merit: fidelities, Wigner functions, the gate-fidelity curve
//! against the cat amplitude, Bloch-sphere maps and the entangled-input
//! process fidelity.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockKet};
use crate::gate::{self, GateEngine, GateParams};
use crate::numerics::{gauss_legendre_on, maximize};
use crate::states::{cat, coherent, squeezed_vacuum, CatParity, CsqSpec};

/// `⟨ψ|ρ|ψ⟩` for a normalized target, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityOperator, target: &FockKet) -> Result<f64> {
    if rho.dims() != target.dims() {
        return Err(Error::Dimension(format!(
            "state on {:?} compared with target on {:?}",
            rho.dims(),
            target.dims()
        )));
    }
    let psi = target.amplitudes();
    let f = psi.dotc(&(rho.matrix() * psi)).re / (target.norm_sqr() * rho.trace_re());
    Ok(f.clamp(0.0, 1.0))
}

/// Cat amplitude in `range` maximizing the fidelity of `rho` with the cat of
/// the given parity. Returns `(α*, F*)`.
pub fn best_target_alpha(
    rho: &DensityOperator,
    parity: CatParity,
    range: (f64, f64),
) -> Result<(f64, f64)> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Argument(format!(
            "invalid amplitude range [{lo}, {hi}]"
        )));
    }
    let d = rho.dim();
    if rho.dims().len() != 1 {
        return Err(Error::Dimension(
            "best_target_alpha needs a single-mode state".into(),
        ));
    }
    let mut first_err = None;
    let best = maximize(
        |a| match cat(a, parity, d).and_then(|k| fidelity(rho, &k)) {
            Ok(f) => f,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        41,
        1e-4,
    );
    match first_err {
        Some(e) if !best.1.is_finite() => Err(e),
        _ => Ok(best),
    }
}

/// Generalized Laguerre values `L_j^{(k)}(y)` for `j < n`.
fn laguerre(n: usize, k: usize, y: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(1.0);
    if n > 1 {
        out.push(1.0 + k as f64 - y);
    }
    for j in 1..n.saturating_sub(1) {
        let jf = j as f64;
        let next =
            ((2.0 * jf + 1.0 + k as f64 - y) * out[j] - (jf + k as f64) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// `W(x, p) = (1/π) tr[ρ D̂(2β) (−1)^n̂]` with `β = (x + ip)/√2`, normalized to
/// unit integral over `dx dp`.
pub fn wigner(rho: &DensityOperator, x: f64, p: f64) -> Result<f64> {
    if rho.dims().len() != 1 {
        return Err(Error::Dimension(
            "Wigner function needs a single-mode state".into(),
        ));
    }
    let d = rho.dim();
    let beta = C64::new(x, p) / SQRT_2;
    let y = 4.0 * beta.norm_sqr();
    let gauss = (-2.0 * beta.norm_sqr()).exp();
    let two_beta = beta * 2.0;
    let mut acc = C64::new(0.0, 0.0);
    // ⟨n|D̂(2β)(−1)^n̂|m⟩ for n ≥ m is (−1)^m √(m!/n!) (2β)^{n−m} e^{−2|β|²} L_m^{(n−m)}(4|β|²).
    for k in 0..d {
        let lag = laguerre(d - k, k, y);
        let mut pow = C64::new(1.0, 0.0);
        for _ in 0..k {
            pow *= two_beta;
        }
        let mut ratio = 1.0;
        for j in 1..=k {
            ratio /= j as f64;
        }
        // ratio tracks m!/n! with n = m + k.
        for m in 0..d - k {
            if m > 0 {
                ratio *= m as f64 / (m + k) as f64;
            }
            let n = m + k;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let a_nm = pow * (sign * ratio.sqrt() * gauss * lag[m]);
            acc += rho.element(m, n) * a_nm;
            if k > 0 {
                acc += rho.element(n, m) * a_nm.conj();
            }
        }
    }
    Ok(acc.re / PI)
}

/// Square sampling grid for Wigner maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerGridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for WignerGridSpec {
    fn default() -> Self {
        Self {
            min: -4.0,
            max: 4.0,
            points: 161,
        }
    }
}

impl WignerGridSpec {
    pub fn axis(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| self.min + step * k as f64)
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points.max(2) - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `values[(i, j)] = W(xs[i], ps[j])`.
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    /// Riemann-sum integral over the grid.
    pub fn integral(&self) -> f64 {
        let dx = if self.xs.len() > 1 {
            self.xs[1] - self.xs[0]
        } else {
            0.0
        };
        let dp = if self.ps.len() > 1 {
            self.ps[1] - self.ps[0]
        } else {
            0.0
        };
        self.values.sum() * dx * dp
    }
}

pub fn wigner_grid(rho: &DensityOperator, spec: &WignerGridSpec) -> Result<WignerGrid> {
    if spec.points == 0 || !(spec.max >= spec.min) {
        return Err(Error::Argument(format!("invalid Wigner grid {spec:?}")));
    }
    let xs = spec.axis();
    let ps = xs.clone();
    let cols: Vec<Vec<f64>> = ps
        .par_iter()
        .map(|&p| {
            xs.iter()
                .map(|&x| wigner(rho, x, p))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let values = DMatrix::from_fn(xs.len(), ps.len(), |i, j| cols[j][i]);
    Ok(WignerGrid { xs, ps, values })
}

/// How the heralding is idealized when computing the gate-fidelity curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveModel {
    /// Weak mixing limit `t → 0` with `|Z Y| = 1`: the output is
    /// `u·R₀ + sgn(Y)·v·R₁` for resource branches `R₀`, `R₁`.
    Limit,
    /// Finite mixing with intensity transmittance `t²`, heralded at `|Z Y| = 1`.
    Finite { transmittance: f64 },
}

/// How fidelities over the input Bloch sphere are summarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlochMeasure {
    /// Uniform average over the Bloch sphere.
    Average,
    /// Minimum over the Bloch sphere.
    Worst,
    /// Mean of the two basis inputs `|α⟩`, `|−α⟩`.
    Basis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub alpha: f64,
    pub f_ideal: f64,
    pub f_squeezed: f64,
    /// Optimal squeezing parameter under the `Ŝ(s) = exp[s(â² − â†²)/2]` convention.
    pub s_opt: f64,
    /// Optimal squeezing in dB.
    pub db_opt: f64,
}

/// Resource branches as overlaps: the output is `(u R₀ + w R₁)/√(|u|² + |w|²)`
/// and the target `u cat₊ + v cat₋`, with `a = ⟨cat₊|R₀⟩`, `b = ⟨cat₋|R₁⟩`.
#[derive(Debug, Clone, Copy)]
struct Branches {
    a: f64,
    b: f64,
}

fn csq_fidelity(br: Branches, u: C64, v: C64, w: C64) -> f64 {
    let num = u.norm_sqr() * br.a + v.conj() * w * br.b;
    let den = u.norm_sqr() + w.norm_sqr();
    if den == 0.0 {
        return 0.0;
    }
    num.norm_sqr() / den
}

const CURVE_CUTOFF: usize = 100;
const CURVE_S_RANGE: (f64, f64) = (-1.2, 1.2);

fn squeezed_branches(alpha: f64, s: f64) -> Result<Branches> {
    let even = cat(alpha, CatParity::Even, CURVE_CUTOFF)?;
    let odd = cat(alpha, CatParity::Odd, CURVE_CUTOFF)?;
    let r0 = squeezed_vacuum(s, CURVE_CUTOFF)?;
    let r1 = gate::squeezed_single_photon(s, CURVE_CUTOFF)?;
    Ok(Branches {
        a: even.inner(&r0)?.re,
        b: odd.inner(&r1)?.re,
    })
}

/// Odd-branch coefficient `w(u, v)` of the heralded output.
fn branch_weight(model: CurveModel, y: f64) -> Result<impl Fn(C64, C64) -> C64> {
    let (scale, z) = match model {
        CurveModel::Limit => (if y < 0.0 { -1.0 } else { 1.0 }, None),
        CurveModel::Finite { .. } => {
            if y == 0.0 || y.abs() > 1.0 {
                return Err(Error::Infeasible(format!(
                    "|Y| = {} admits no |ZY| = 1 heralding",
                    y.abs()
                )));
            }
            let z = 1.0 / y.abs();
            (y, Some(z))
        }
    };
    Ok(move |u: C64, v: C64| match z {
        None => v * scale,
        Some(z) => (u + v * z) * scale,
    })
}

fn summarize<F: Fn(C64, C64) -> f64>(f: F, measure: BlochMeasure) -> f64 {
    match measure {
        BlochMeasure::Basis => {
            0.5 * (f(C64::from(1.0), C64::from(0.0)) + f(C64::from(0.0), C64::from(1.0)))
        }
        BlochMeasure::Average => {
            // z = cos 2θ is uniform over the sphere, so c = cos²θ is uniform on [0, 1].
            let rule = gauss_legendre_on(24, 0.0, 1.0);
            let nphi = 24;
            let mut acc = 0.0;
            for (c, w) in &rule {
                for k in 0..nphi {
                    let phi = 2.0 * PI * k as f64 / nphi as f64;
                    acc += w * f(C64::from(c.sqrt()), C64::from_polar((1.0 - c).sqrt(), phi))
                        / nphi as f64;
                }
            }
            acc
        }
        BlochMeasure::Worst => {
            let mut worst = f64::INFINITY;
            for i in 0..=64 {
                let c = i as f64 / 64.0;
                for k in 0..24 {
                    let phi = 2.0 * PI * k as f64 / 24.0;
                    worst = worst.min(f(
                        C64::from(c.sqrt()),
                        C64::from_polar((1.0 - c).sqrt(), phi),
                    ));
                }
            }
            worst
        }
    }
}

fn mixing(model: CurveModel) -> (f64, f64) {
    match model {
        CurveModel::Limit => (0.5, 0.75f64.sqrt()),
        CurveModel::Finite { transmittance } => {
            (transmittance.sqrt(), (1.0 - transmittance).sqrt())
        }
    }
}

/// Gate fidelity with an ideal even-cat resource.
pub fn ideal_resource_fidelity(
    alpha: f64,
    model: CurveModel,
    measure: BlochMeasure,
) -> Result<f64> {
    let (t, r) = mixing(model);
    let y = gate::y1(t, r, alpha)?;
    let w = branch_weight(model, y)?;
    let br = Branches { a: 1.0, b: 1.0 };
    Ok(summarize(|u, v| csq_fidelity(br, u, v, w(u, v)), measure))
}

/// Gate fidelity with a pure squeezed-vacuum resource `Ŝ(s)|0⟩`.
pub fn squeezed_resource_fidelity(
    alpha: f64,
    s: f64,
    model: CurveModel,
    measure: BlochMeasure,
) -> Result<f64> {
    let (t, r) = mixing(model);
    let y = match model {
        CurveModel::Limit => {
            if s > 0.0 {
                -1.0
            } else {
                1.0
            }
        }
        CurveModel::Finite { .. } => gate::y2(t, r, s, alpha)?,
    };
    let w = branch_weight(model, y)?;
    let br = squeezed_branches(alpha, s)?;
    Ok(summarize(|u, v| csq_fidelity(br, u, v, w(u, v)), measure))
}

/// Squeezed-resource fidelity maximized over `s`. Returns `(s*, F*)`.
pub fn optimize_squeezing(
    alpha: f64,
    model: CurveModel,
    measure: BlochMeasure,
) -> Result<(f64, f64)> {
    let (lo, hi) = CURVE_S_RANGE;
    let mut first_err = None;
    let best = maximize(
        |s| match squeezed_resource_fidelity(alpha, s, model, measure) {
            Ok(f) => f,
            Err(Error::Infeasible(_)) => 0.0,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        49,
        1e-6,
    );
    match first_err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

/// Gate fidelity against the cat amplitude for the ideal and the optimally
/// squeezed resource.
pub fn fidelity_curve(
    alphas: &[f64],
    model: CurveModel,
    measure: BlochMeasure,
) -> Result<Vec<CurveRow>> {
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a <= 2.0)) {
        return Err(Error::Argument(format!("amplitude {a} outside (0, 2]")));
    }
    alphas
        .par_iter()
        .map(|&alpha| {
            let f_ideal = ideal_resource_fidelity(alpha, model, measure)?;
            let (s_opt, f_squeezed) = optimize_squeezing(alpha, model, measure)?;
            Ok(CurveRow {
                alpha,
                f_ideal,
                f_squeezed,
                s_opt,
                db_opt: crate::states::s_to_db(s_opt.abs()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochGridSpec {
    /// Samples of `θ` spanning `[0, π/2]` inclusive.
    pub n_theta: usize,
    /// Samples of `φ` spanning `[0, 2π)`.
    pub n_phi: usize,
}

impl Default for BlochGridSpec {
    fn default() -> Self {
        Self {
            n_theta: 33,
            n_phi: 33,
        }
    }
}

impl BlochGridSpec {
    pub fn thetas(&self) -> Vec<f64> {
        if self.n_theta == 1 {
            return vec![0.0];
        }
        (0..self.n_theta)
            .map(|k| FRAC_PI_2 * k as f64 / (self.n_theta - 1) as f64)
            .collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_phi)
            .map(|k| 2.0 * PI * k as f64 / self.n_phi as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlochCell {
    pub theta: f64,
    pub phi: f64,
    /// `None` when conditioning failed for this input.
    pub fidelity: Option<f64>,
    pub p_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlochGrid {
    pub spec: BlochGridSpec,
    /// Row-major in `(θ, φ)`.
    pub cells: Vec<BlochCell>,
}

impl BlochGrid {
    fn valid(&self) -> impl Iterator<Item = (&BlochCell, f64, f64)> {
        self.cells
            .iter()
            .filter_map(|c| Some((c, c.fidelity?, c.p_success?)))
    }

    /// Plain mean of the fidelity over the grid cells.
    pub fn mean_fidelity(&self) -> f64 {
        let v: Vec<f64> = self.valid().map(|(_, f, _)| f).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    pub fn mean_p_success(&self) -> f64 {
        let v: Vec<f64> = self.valid().map(|(_, _, p)| p).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Fidelity mean weighted by Bloch-sphere area (`sin 2θ`).
    pub fn area_weighted_fidelity(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (c, f, _) in self.valid() {
            let w = (2.0 * c.theta).sin();
            num += w * f;
            den += w;
        }
        if den == 0.0 {
            self.mean_fidelity()
        } else {
            num / den
        }
    }

    pub fn fidelity_range(&self) -> (f64, f64) {
        self.valid()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, f, _)| {
                (lo.min(f), hi.max(f))
            })
    }

    pub fn degenerate_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.fidelity.is_none()).count()
    }

    pub fn cell(&self, i_theta: usize, i_phi: usize) -> &BlochCell {
        &self.cells[i_theta * self.spec.n_phi + i_phi]
    }
}

/// Runs the realistic gate on every input of the grid, comparing each output
/// with the Hadamard image of that input at the nominal amplitude.
pub fn bloch_sweep(params: &GateParams, grid: &BlochGridSpec) -> Result<BlochGrid> {
    if grid.n_theta == 0 || grid.n_phi == 0 {
        return Err(Error::Argument("Bloch grid must be nonempty".into()));
    }
    let engine = GateEngine::new(params)?;
    let points: Vec<(f64, f64)> = grid
        .thetas()
        .iter()
        .flat_map(|&t| grid.phis().into_iter().map(move |p| (t, p)))
        .collect();
    let cells = points
        .par_iter()
        .map(|&(theta, phi)| {
            let spec = CsqSpec {
                alpha: params.alpha,
                theta,
                phi,
            };
            match engine.simulate(&spec) {
                Ok(r) => Ok(BlochCell {
                    theta,
                    phi,
                    fidelity: Some(r.fidelity_vs_ideal),
                    p_success: Some(r.p_success),
                }),
                Err(Error::DegenerateConditioning(_)) => Ok(BlochCell {
                    theta,
                    phi,
                    fidelity: None,
                    p_success: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlochGrid { spec: *grid, cells })
}

/// Gate applied to one half of `(|α,α⟩ + |−α,−α⟩)/√N`, compared with
/// `|α⟩cat₊ + |−α⟩cat₋` normalized.
pub fn process_fidelity(params: &GateParams) -> Result<f64> {
    let engine = GateEngine::new(params)?;
    let [d0, _, _, d3] = params.cutoffs;
    let alpha = params.alpha;
    let dr = d0;
    let ref_plus = coherent(C64::from(alpha), dr)?;
    let ref_minus = coherent(C64::from(-alpha), dr)?;
    let far = coherent(C64::from(2.0 * alpha), d0)?;
    let vac = FockKet::basis(0, d0)?;
    let input = ref_plus
        .tensor(&far)?
        .add_scaled(&ref_minus.tensor(&vac)?, C64::from(1.0))?
        .normalized()?;
    let raw = engine.condition(&input)?;
    let p = raw.trace_re();
    if !(p >= 1e-300) {
        return Err(Error::DegenerateConditioning(p));
    }
    let rho = raw.scaled(1.0 / p);
    let even = cat(alpha, CatParity::Even, d3)?;
    let odd = cat(alpha, CatParity::Odd, d3)?;
    let target = ref_plus
        .tensor(&even)?
        .add_scaled(&ref_minus.tensor(&odd)?, C64::from(1.0))?
        .normalized()?;
    fidelity(&rho, &target)
}
