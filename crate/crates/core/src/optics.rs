//! Mode operators and two-mode couplings.
//!
//! Beam-splitter convention on the pair `(a, b)` = `(first, second)` mode:
//! `â† → t â† + r b̂†`, `b̂† → t b̂† − r â†`, so `|1,0⟩ → t|1,0⟩ + r|0,1⟩`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{EmbeddedOperator, ModeOperator, OperatorKind};

/// Padding added to the generator before exponentiation.
pub const EXP_PADDING: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterSpec {
    /// Amplitude transmittance.
    pub t: f64,
    /// Amplitude reflectance, `t² + r² = 1`.
    pub r: f64,
    pub modes: (usize, usize),
}

impl BeamSplitterSpec {
    pub fn new(t: f64, r: f64, modes: (usize, usize)) -> Result<Self> {
        let spec = Self { t, r, modes };
        spec.validate()?;
        Ok(spec)
    }

    /// From the intensity transmittance `t²`.
    pub fn from_transmittance(t2: f64, modes: (usize, usize)) -> Result<Self> {
        if !(0.0..=1.0).contains(&t2) {
            return Err(Error::Argument(format!(
                "transmittance {t2} outside [0, 1]"
            )));
        }
        Self::new(t2.sqrt(), (1.0 - t2).sqrt(), modes)
    }

    /// From the intensity reflectance `r²`.
    pub fn from_reflectance(r2: f64, modes: (usize, usize)) -> Result<Self> {
        if !(0.0..=1.0).contains(&r2) {
            return Err(Error::Argument(format!("reflectance {r2} outside [0, 1]")));
        }
        Self::new((1.0 - r2).sqrt(), r2.sqrt(), modes)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t) || !(0.0..=1.0).contains(&self.r) {
            return Err(Error::Argument(format!(
                "t={} r={} must lie in [0, 1]",
                self.t, self.r
            )));
        }
        if (self.t * self.t + self.r * self.r - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!(
                "t² + r² = {} ≠ 1",
                self.t * self.t + self.r * self.r
            )));
        }
        if self.modes.0 == self.modes.1 {
            return Err(Error::Argument(
                "beam splitter needs two distinct modes".into(),
            ));
        }
        Ok(())
    }
}

fn generator_exp(g: DMatrix<C64>, d: usize) -> Result<ModeOperator> {
    let u = g.exp();
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    ModeOperator::single(u.view((0, 0), (d, d)).into_owned(), OperatorKind::Unitary)
}

fn ladder(p: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(p, p);
    for n in 1..p {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    a
}

/// `D̂(α) = exp(α â† − α* â)` with `pad` extra levels during exponentiation.
pub fn displacement_with_padding(alpha: C64, d: usize, pad: usize) -> Result<ModeOperator> {
    if d == 0 {
        return Err(Error::Argument("cutoff must be >= 1".into()));
    }
    let a = ladder(d + pad);
    let g = a.adjoint() * alpha - &a * alpha.conj();
    generator_exp(g, d)
}

pub fn displacement(alpha: C64, d: usize) -> Result<ModeOperator> {
    displacement_with_padding(alpha, d, EXP_PADDING)
}

/// `Ŝ(s) = exp[s(â² − â†²)/2]` with `pad` extra levels during exponentiation.
pub fn squeeze_with_padding(s: f64, d: usize, pad: usize) -> Result<ModeOperator> {
    if d == 0 {
        return Err(Error::Argument("cutoff must be >= 1".into()));
    }
    let a = ladder(d + pad);
    let a2 = &a * &a;
    let g = (&a2 - a2.adjoint()) * C64::from(0.5 * s);
    generator_exp(g, d)
}

pub fn squeeze(s: f64, d: usize) -> Result<ModeOperator> {
    squeeze_with_padding(s, d, EXP_PADDING)
}

/// `exp(iθ n̂)`.
pub fn phase_rotation(theta: f64, d: usize) -> Result<ModeOperator> {
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |n, _| {
        C64::from_polar(1.0, theta * n as f64)
    }));
    ModeOperator::single(m, OperatorKind::Unitary)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial_sqrt_ratio(num: (usize, usize), den: (usize, usize)) -> f64 {
    let lf = |n: usize| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
    (0.5 * (lf(num.0) + lf(num.1) - lf(den.0) - lf(den.1))).exp()
}

/// Two-mode beam-splitter matrix on cutoffs `(da, db)`, exact within each
/// photon-number block and projected onto the truncated space.
pub fn beam_splitter_matrix(t: f64, r: f64, da: usize, db: usize) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::zeros(da * db, da * db);
    for p in 0..da {
        for q in 0..db {
            // (t a† + r b†)^p (t b† − r a†)^q |0,0⟩ / √(p! q!)
            for k in 0..=p {
                for l in 0..=q {
                    let na = k + (q - l);
                    let nb = (p - k) + l;
                    if na >= da || nb >= db {
                        continue;
                    }
                    let coeff = binomial(p, k)
                        * t.powi(k as i32)
                        * r.powi((p - k) as i32)
                        * binomial(q, l)
                        * t.powi(l as i32)
                        * (-r).powi((q - l) as i32);
                    if coeff == 0.0 {
                        continue;
                    }
                    let norm = factorial_sqrt_ratio((na, nb), (p, q));
                    u[(na * db + nb, p * db + q)] += C64::from(coeff * norm);
                }
            }
        }
    }
    u
}

/// Beam splitter on `spec.modes` of a system with per-mode cutoffs `mode_dims`.
pub fn beam_splitter(spec: &BeamSplitterSpec, mode_dims: &[usize]) -> Result<EmbeddedOperator> {
    spec.validate()?;
    let (i, j) = spec.modes;
    if i >= mode_dims.len() || j >= mode_dims.len() {
        return Err(Error::Dimension(format!(
            "beam splitter on modes ({i}, {j}) of a {}-mode system",
            mode_dims.len()
        )));
    }
    let (da, db) = (mode_dims[i], mode_dims[j]);
    let m = beam_splitter_matrix(spec.t, spec.r, da, db);
    let op = ModeOperator::new(m, vec![da, db], OperatorKind::Unitary)?;
    EmbeddedOperator::new(op, vec![i, j], mode_dims.to_vec())
}

/// Non-unitary `r â_a + t b̂_b` on modes `(a, b)`.
pub fn subtraction_operator(
    t: f64,
    r: f64,
    modes: (usize, usize),
    mode_dims: &[usize],
) -> Result<EmbeddedOperator> {
    if (t * t + r * r - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!("t² + r² = {} ≠ 1", t * t + r * r)));
    }
    let (i, j) = modes;
    if i >= mode_dims.len() || j >= mode_dims.len() || i == j {
        return Err(Error::Dimension(format!("invalid mode pair ({i}, {j})")));
    }
    let (da, db) = (mode_dims[i], mode_dims[j]);
    let a = ladder(da).kronecker(&DMatrix::identity(db, db));
    let b = DMatrix::<C64>::identity(da, da).kronecker(&ladder(db));
    let m = a * C64::from(r) + b * C64::from(t);
    let op = ModeOperator::new(m, vec![da, db], OperatorKind::Generic)?;
    EmbeddedOperator::new(op, vec![i, j], mode_dims.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_unitary, expect, max_abs, FockKet};
    use crate::states::{coherent, squeezed_vacuum};
    use nalgebra::DVector;

    fn two_mode(amps: &[(usize, usize, f64)], d: usize) -> FockKet {
        let mut v = DVector::zeros(d * d);
        for &(a, b, c) in amps {
            v[a * d + b] = C64::from(c);
        }
        FockKet::new(v, vec![d, d]).unwrap()
    }

    #[test]
    fn zero_displacement_is_identity() {
        let d = displacement(C64::from(0.0), 10).unwrap();
        assert!(max_abs(&(d.matrix() - DMatrix::<C64>::identity(10, 10))) < 1e-15);
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let d = displacement(C64::from(0.8), 24).unwrap();
        let out = d.apply(&FockKet::basis(0, 24).unwrap()).unwrap();
        let coh = coherent(C64::from(0.8), 24).unwrap();
        assert!(out.fidelity(&coh).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn displacement_inverse() {
        let dp = displacement(C64::new(0.5, 0.2), 32).unwrap();
        let dm = displacement(C64::new(-0.5, -0.2), 32).unwrap();
        let prod = dp.compose(&dm).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((prod.matrix()[(i, j)] - C64::from(target)).norm() < 1e-8);
            }
        }
        assert!(dp.unitarity_error() < 1e-8);
    }

    #[test]
    fn zero_squeeze_is_identity() {
        let s = squeeze(0.0, 10).unwrap();
        assert!(max_abs(&(s.matrix() - DMatrix::<C64>::identity(10, 10))) < 1e-15);
    }

    #[test]
    fn squeeze_matches_closed_form_vacuum() {
        let s = squeeze(0.3, 16).unwrap();
        let out = s.apply(&FockKet::basis(0, 16).unwrap()).unwrap();
        let sv = squeezed_vacuum(0.3, 16).unwrap();
        assert!(out.fidelity(&sv).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn squeeze_inverse() {
        let prod = squeeze(0.4, 48)
            .unwrap()
            .compose(&squeeze(-0.4, 48).unwrap())
            .unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((prod.matrix()[(i, j)] - C64::from(target)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn transparent_beam_splitter_is_identity() {
        let bs = beam_splitter(&BeamSplitterSpec::new(1.0, 0.0, (0, 1)).unwrap(), &[4, 5]).unwrap();
        let m = bs.operator().matrix();
        assert!(max_abs(&(m - DMatrix::<C64>::identity(20, 20))) < 1e-15);
    }

    #[test]
    fn single_photon_split() {
        let (t, r) = (0.6, 0.8);
        let bs = beam_splitter(&BeamSplitterSpec::new(t, r, (0, 1)).unwrap(), &[3, 3]).unwrap();
        let out = bs.apply(&two_mode(&[(1, 0, 1.0)], 3)).unwrap();
        let expected = two_mode(&[(1, 0, t), (0, 1, r)], 3);
        assert!((out.amplitudes() - expected.amplitudes()).norm() < 1e-15);
        let out = bs.apply(&two_mode(&[(0, 1, 1.0)], 3)).unwrap();
        let expected = two_mode(&[(0, 1, t), (1, 0, -r)], 3);
        assert!((out.amplitudes() - expected.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn hong_ou_mandel() {
        let s = 0.5f64.sqrt();
        let bs = beam_splitter(&BeamSplitterSpec::new(s, s, (0, 1)).unwrap(), &[3, 3]).unwrap();
        let out = bs.apply(&two_mode(&[(1, 1, 1.0)], 3)).unwrap();
        // (t a† + r b†)(t b† − r a†)|00⟩ = (|0,2⟩ − |2,0⟩)/√2
        let expected = two_mode(&[(2, 0, -s), (0, 2, s)], 3);
        assert!((out.amplitudes() - expected.amplitudes()).norm() < 1e-15);
        assert!(out.amplitude(4).norm() < 1e-15);
    }

    #[test]
    fn beam_splitter_conserves_photon_number() {
        let dims = [4, 4];
        let bs = beam_splitter(
            &BeamSplitterSpec::from_transmittance(0.3, (0, 1)).unwrap(),
            &dims,
        )
        .unwrap();
        let rho = two_mode(&[(1, 0, 1.0)], 4).to_density();
        let out = apply_unitary(&bs, &rho).unwrap();
        let n = ModeOperator::number(4).unwrap();
        let total = |r| {
            expect(
                r,
                &EmbeddedOperator::new(n.clone(), vec![0], dims.to_vec()).unwrap(),
            )
            .unwrap()
                + expect(
                    r,
                    &EmbeddedOperator::new(n.clone(), vec![1], dims.to_vec()).unwrap(),
                )
                .unwrap()
        };
        assert!((total(&out) - C64::from(1.0)).norm() < 1e-12);
        let back = apply_unitary(&bs.adjoint(), &out).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn beam_splitter_unitary_on_low_block() {
        let bs = beam_splitter(
            &BeamSplitterSpec::from_transmittance(0.25, (0, 1)).unwrap(),
            &[16, 4],
        )
        .unwrap();
        assert!(bs.operator().unitarity_error() < 1e-12);
    }

    #[test]
    fn disjoint_beam_splitters_commute() {
        let dims = [3, 3, 3, 3];
        let u12 = beam_splitter(
            &BeamSplitterSpec::from_transmittance(0.7, (0, 1)).unwrap(),
            &dims,
        )
        .unwrap();
        let u34 = beam_splitter(
            &BeamSplitterSpec::from_transmittance(0.2, (2, 3)).unwrap(),
            &dims,
        )
        .unwrap();
        let a = u12
            .to_dense()
            .unwrap()
            .compose(&u34.to_dense().unwrap())
            .unwrap();
        let b = u34
            .to_dense()
            .unwrap()
            .compose(&u12.to_dense().unwrap())
            .unwrap();
        assert!(max_abs(&(a.matrix() - b.matrix())) == 0.0);
    }

    #[test]
    fn subtraction_operator_actions() {
        let (t, r) = (0.6, 0.8);
        let op = subtraction_operator(t, r, (0, 1), &[3, 3]).unwrap();
        let out = op.apply(&two_mode(&[(0, 0, 1.0)], 3)).unwrap();
        assert!(out.norm_sqr() == 0.0);
        let out = op.apply(&two_mode(&[(1, 0, 1.0)], 3)).unwrap();
        assert!((out.amplitudes() - two_mode(&[(0, 0, r)], 3).amplitudes()).norm() < 1e-15);
        let s = 0.5f64.sqrt();
        let op = subtraction_operator(s, s, (0, 1), &[3, 3]).unwrap();
        let out = op
            .apply(&two_mode(&[(1, 1, 1.0)], 3))
            .unwrap()
            .normalized()
            .unwrap();
        let expected = two_mode(&[(0, 1, s), (1, 0, s)], 3);
        assert!(out.fidelity(&expected).unwrap() > 1.0 - 1e-15);
    }

    #[test]
    fn phase_rotation_is_unitary() {
        let p = phase_rotation(0.7, 8).unwrap();
        assert!(p.unitarity_error() < 1e-15);
    }
}
