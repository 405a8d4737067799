//! Synthetic homodyne data and iterative maximum-likelihood reconstruction.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detectors::{loss_adjoint, loss_channel, quadrature_density, window_projector};
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, ModeOperator};

/// Half-range of tabulated and binned quadratures.
pub const QUADRATURE_RANGE: f64 = 6.0;
/// Step of the inverse-CDF tabulation.
pub const SAMPLING_STEP: f64 = 0.01;
/// Width of the reconstruction bins.
pub const BIN_WIDTH: f64 = 0.1;
/// Lower bound applied to bin probabilities during reconstruction.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Minimum number of distinct LO phases needed for a reconstruction.
pub const MIN_PHASES: usize = 8;

const HEADER_PREFIX: &str = "# catgate-quadrature v1";

/// `n` LO phases evenly spaced over `[0, π)`.
pub fn default_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDataset {
    /// `(θ_LO, x)` pairs.
    pub records: Vec<(f64, f64)>,
    /// Detection efficiency the data were taken with.
    pub eta: f64,
    pub seed: u64,
}

impl QuadratureDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn distinct_phases(&self) -> usize {
        let mut p: Vec<u64> = self.records.iter().map(|(t, _)| t.to_bits()).collect();
        p.sort_unstable();
        p.dedup();
        p.len()
    }

    /// Header line followed by one `theta<TAB>x` record per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER_PREFIX}, eta={}, seed={}\n", self.eta, self.seed);
        for (t, x) in &self.records {
            let _ = writeln!(out, "{t:.11e}\t{x:.11e}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty dataset".into(),
        })?;
        let (eta, seed) = parse_header(header)?;
        let mut records = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected `theta<TAB>x`".into(),
                });
            };
            let num = |s: &str, what: &str| -> Result<f64> {
                let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("{what} `{s}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("{what} is not finite"),
                    });
                }
                Ok(v)
            };
            let theta = num(a, "theta")?;
            if !(0.0..2.0 * PI).contains(&theta) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("theta {theta} outside [0, 2π)"),
                });
            }
            records.push((theta, num(b, "x")?));
        }
        if records.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "dataset has no records".into(),
            });
        }
        Ok(Self { records, eta, seed })
    }
}

fn parse_header(line: &str) -> Result<(f64, u64)> {
    let bad = |m: &str| Error::Parse {
        line: 1,
        message: m.to_string(),
    };
    let rest = line
        .strip_prefix(HEADER_PREFIX)
        .ok_or_else(|| bad("missing `# catgate-quadrature v1` header"))?;
    let (mut eta, mut seed) = (None, None);
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('=') {
            Some(("eta", v)) => {
                eta = Some(v.parse::<f64>().map_err(|_| bad("eta is not a number"))?)
            }
            Some(("seed", v)) => {
                seed = Some(
                    v.parse::<u64>()
                        .map_err(|_| bad("seed is not an integer"))?,
                )
            }
            _ => return Err(bad(&format!("unexpected header field `{part}`"))),
        }
    }
    let eta = eta.ok_or_else(|| bad("header lacks eta"))?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(bad("eta outside [0, 1]"));
    }
    Ok((eta, seed.ok_or_else(|| bad("header lacks seed"))?))
}

/// Draws `n_per_phase` quadratures at each phase from `ρ` seen through loss
/// `eta`, by inverse-CDF sampling of the density tabulated on `±6` with step
/// 0.01.
pub fn sample_homodyne(
    rho: &DensityOperator,
    phases: &[f64],
    n_per_phase: usize,
    eta: f64,
    seed: u64,
) -> Result<QuadratureDataset> {
    if rho.dims().len() != 1 {
        return Err(Error::Dimension(
            "homodyne sampling needs a single-mode state".into(),
        ));
    }
    if n_per_phase == 0 || phases.is_empty() {
        return Err(Error::Argument(
            "need at least one phase and one sample".into(),
        ));
    }
    rho.validate()?;
    let lossy = loss_channel(&rho.normalized()?, eta, 0)?;
    let n_grid = (2.0 * QUADRATURE_RANGE / SAMPLING_STEP).round() as usize + 1;
    let grid: Vec<f64> = (0..n_grid)
        .map(|k| -QUADRATURE_RANGE + SAMPLING_STEP * k as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(phases.len() * n_per_phase);
    for &theta in phases {
        let theta = theta.rem_euclid(2.0 * PI);
        let mut density = Vec::with_capacity(n_grid);
        for &x in &grid {
            let p = quadrature_density(&lossy, theta, x)?;
            if p < -1e-12 {
                return Err(Error::Numerical(format!(
                    "negative quadrature density {p:.3e} at x={x}"
                )));
            }
            density.push(p.max(0.0));
        }
        let mut cdf = vec![0.0; n_grid];
        for k in 1..n_grid {
            cdf[k] = cdf[k - 1] + 0.5 * SAMPLING_STEP * (density[k] + density[k - 1]);
        }
        let total = cdf[n_grid - 1];
        if !(total > 0.0) {
            return Err(Error::Numerical(
                "quadrature distribution has no mass on ±6".into(),
            ));
        }
        for _ in 0..n_per_phase {
            let target = rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= target).clamp(1, n_grid - 1);
            let (c0, c1) = (cdf[k - 1], cdf[k]);
            let frac = if c1 > c0 {
                (target - c0) / (c1 - c0)
            } else {
                0.5
            };
            records.push((theta, grid[k - 1] + frac * SAMPLING_STEP));
        }
    }
    Ok(QuadratureDataset { records, eta, seed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub rho_hat: DensityOperator,
    /// Log-likelihood of the data after each iteration, starting with the
    /// initial maximally mixed state.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Iterations that fell back to a diluted step to keep the likelihood
    /// nondecreasing.
    pub diluted_steps: usize,
    /// Occupied bins whose probability hit the floor at least once.
    pub floored_bins: usize,
    /// Samples outside the binned range.
    pub dropped_samples: usize,
}

struct Bins {
    povms: Vec<DMatrix<C64>>,
    counts: Vec<f64>,
    total: f64,
}

fn build_bins(data: &QuadratureDataset, d: usize, eta_correction: f64) -> Result<(Bins, usize)> {
    let n_bins = (2.0 * QUADRATURE_RANGE / BIN_WIDTH).round() as usize;
    let mut per_phase: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut dropped = 0;
    for &(theta, x) in &data.records {
        let k = ((x + QUADRATURE_RANGE) / BIN_WIDTH).floor();
        if k < 0.0 || k >= n_bins as f64 {
            dropped += 1;
            continue;
        }
        per_phase
            .entry(theta.to_bits())
            .or_insert_with(|| vec![0.0; n_bins])[k as usize] += 1.0;
    }
    let mut base: Vec<Option<DMatrix<C64>>> = vec![None; n_bins];
    let mut bins = Bins {
        povms: Vec::new(),
        counts: Vec::new(),
        total: 0.0,
    };
    for (bits, counts) in per_phase {
        let theta = f64::from_bits(bits);
        for (k, &n) in counts.iter().enumerate() {
            if n == 0.0 {
                continue;
            }
            if base[k].is_none() {
                let a = -QUADRATURE_RANGE + BIN_WIDTH * k as f64;
                let ideal = window_projector(a, a + BIN_WIDTH, 0.0, d)?;
                base[k] = Some(loss_adjoint(&ideal, eta_correction)?.into_matrix());
            }
            let b = base[k].as_ref().expect("filled above");
            let rotated = DMatrix::from_fn(d, d, |i, j| {
                b[(i, j)] * C64::from_polar(1.0, theta * (i as f64 - j as f64))
            });
            bins.povms.push(rotated);
            bins.counts.push(n);
            bins.total += n;
        }
    }
    Ok((bins, dropped))
}

fn probabilities(rho: &DMatrix<C64>, bins: &Bins) -> Vec<f64> {
    bins.povms
        .iter()
        .map(|p| {
            rho.iter()
                .zip(p.transpose().iter())
                .map(|(a, b)| a * b)
                .sum::<C64>()
                .re
        })
        .collect()
}

fn log_likelihood(probs: &[f64], bins: &Bins) -> f64 {
    probs
        .iter()
        .zip(&bins.counts)
        .map(|(p, n)| n * p.max(PROBABILITY_FLOOR).ln())
        .sum()
}

fn hermitian_normalized(m: DMatrix<C64>) -> DMatrix<C64> {
    let h = (&m + m.adjoint()) * C64::from(0.5);
    let tr = h.trace().re;
    h / C64::from(tr)
}

/// Maximum-likelihood state on `d` levels from binned homodyne data, with
/// detector loss `eta_correction` folded into each bin's POVM element (1 for
/// no correction). Iterates `ρ ← N[R ρ R]`, `R = Σᵢ (nᵢ/N) Πᵢ/pᵢ`, until the
/// log-likelihood gain drops below `tol` or `max_iter` is reached. When a
/// plain step would lower the likelihood, the step is diluted,
/// `R → (I + εR)/(1 + ε)` with `ε` halved until it does not.
pub fn maxlik_reconstruct(
    data: &QuadratureDataset,
    d: usize,
    eta_correction: f64,
    max_iter: usize,
    tol: f64,
) -> Result<ReconstructionReport> {
    if data.is_empty() {
        return Err(Error::Argument("dataset is empty".into()));
    }
    if !(eta_correction > 0.0 && eta_correction <= 1.0) {
        return Err(Error::Argument(format!(
            "eta_correction {eta_correction} outside (0, 1]"
        )));
    }
    if d == 0 {
        return Err(Error::Argument("cutoff must be >= 1".into()));
    }
    let phases = data.distinct_phases();
    if phases < MIN_PHASES {
        return Err(Error::Argument(format!(
            "{phases} distinct LO phases; need at least {MIN_PHASES}"
        )));
    }
    let (bins, dropped) = build_bins(data, d, eta_correction)?;
    if bins.total == 0.0 {
        return Err(Error::Argument(
            "no samples fall inside the binned range".into(),
        ));
    }
    let eye = DMatrix::<C64>::identity(d, d);
    let mut rho = eye.clone() / C64::from(d as f64);
    let mut probs = probabilities(&rho, &bins);
    let mut floored = vec![false; probs.len()];
    let mut ll = log_likelihood(&probs, &bins);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut diluted_steps = 0;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut r = DMatrix::<C64>::zeros(d, d);
        for (i, (p, n)) in probs.iter().zip(&bins.counts).enumerate() {
            if *p < PROBABILITY_FLOOR {
                floored[i] = true;
            }
            r += &bins.povms[i] * C64::from(n / (bins.total * p.max(PROBABILITY_FLOOR)));
        }
        let mut eps = f64::INFINITY;
        let (next, next_probs, next_ll) = loop {
            let step = if eps.is_infinite() {
                r.clone()
            } else {
                (&eye + &r * C64::from(eps)) / C64::from(1.0 + eps)
            };
            let cand = hermitian_normalized(&step * &rho * &step);
            let cp = probabilities(&cand, &bins);
            let cl = log_likelihood(&cp, &bins);
            if cl >= ll - 1e-12 * ll.abs().max(1.0) || eps < 1e-12 {
                break (cand, cp, cl);
            }
            eps = if eps.is_infinite() { 1.0 } else { 0.5 * eps };
        };
        if eps.is_finite() {
            diluted_steps += 1;
        }
        let gain = next_ll - ll;
        rho = next;
        probs = next_probs;
        ll = next_ll;
        trace.push(ll);
        if gain.abs() < tol {
            converged = true;
            break;
        }
    }
    let rho_hat = DensityOperator::single(rho)?;
    Ok(ReconstructionReport {
        rho_hat,
        log_likelihood: trace,
        converged,
        iterations,
        diluted_steps,
        floored_bins: floored.iter().filter(|&&f| f).count(),
        dropped_samples: dropped,
    })
}

/// `½ Σ |λ(ρ − σ)|`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(Error::Dimension(format!(
            "{:?} vs {:?}",
            rho.dims(),
            sigma.dims()
        )));
    }
    let diff = rho.matrix() - sigma.matrix();
    let h = (&diff + diff.adjoint()) * C64::from(0.5);
    Ok(0.5
        * h.symmetric_eigenvalues()
            .iter()
            .map(|l| l.abs())
            .sum::<f64>())
}

/// Single-mode POVM element for one reconstruction bin, exposed for checks.
pub fn bin_povm(a: f64, theta: f64, d: usize, eta_correction: f64) -> Result<ModeOperator> {
    let ideal = window_projector(a, a + BIN_WIDTH, theta, d)?;
    loss_adjoint(&ideal, eta_correction)
}
