//! Dense linear algebra over truncated single- and multi-mode Fock spaces.
//!
//! Multi-mode indices are little-endian over the mode list: the first mode
//! varies slowest, so the joint basis state `|n₁ n₂ … n_k⟩` sits at flat index
//! `((n₁·D₂ + n₂)·D₃ + n₃)…`. Every constructor and every operation in the
//! crate follows this ordering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default ceiling on the number of complex entries a dense operator may hold.
pub const DEFAULT_MAX_ELEMENTS: usize = 1 << 25;

/// Population allowed in the top two Fock levels of any mode before a state is
/// flagged as truncation-affected.
pub const LEAKAGE_THRESHOLD: f64 = 1e-6;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Argument("mode list must be nonempty".into()));
    }
    if dims.contains(&0) {
        return Err(Error::Argument(format!(
            "every cutoff must be >= 1, got {dims:?}"
        )));
    }
    Ok(())
}

/// Row-major strides for a little-endian mode list.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets of every joint index over `modes`, in little-endian order of
/// the listed modes.
fn offsets(dims: &[usize], modes: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &m in modes {
        let mut next = Vec::with_capacity(out.len() * dims[m]);
        for &o in &out {
            for n in 0..dims[m] {
                next.push(o + n * st[m]);
            }
        }
        out = next;
    }
    out
}

fn complement(k: usize, modes: &[usize]) -> Vec<usize> {
    (0..k).filter(|m| !modes.contains(m)).collect()
}

fn check_modes(dims: &[usize], modes: &[usize]) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= dims.len() {
            return Err(Error::Dimension(format!(
                "mode index {m} out of range for {} modes",
                dims.len()
            )));
        }
        if modes[..i].contains(&m) {
            return Err(Error::Argument(format!("mode {m} listed twice")));
        }
    }
    Ok(())
}

/// Sparse view of a small dense matrix, used by the local-application kernel.
struct Triplets {
    entries: Vec<(usize, usize, C64)>,
}

impl Triplets {
    fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != ZERO {
                    entries.push((r, c, v));
                }
            }
        }
        Self { entries }
    }
}

/// Applies `op` (acting on the joint space of `modes`) to every slice of a flat
/// buffer laid out over `dims`.
fn apply_local(buf: &mut [C64], dims: &[usize], op: &DMatrix<C64>, modes: &[usize]) {
    let local = offsets(dims, modes);
    let bases = offsets(dims, &complement(dims.len(), modes));
    let sparse = Triplets::from_dense(op);
    let n = local.len();
    let mut gathered = vec![ZERO; n];
    let mut out = vec![ZERO; n];
    for &b in &bases {
        for (g, &o) in gathered.iter_mut().zip(&local) {
            *g = buf[b + o];
        }
        out.iter_mut().for_each(|v| *v = ZERO);
        for &(r, c, v) in &sparse.entries {
            out[r] += v * gathered[c];
        }
        for (v, &o) in out.iter().zip(&local) {
            buf[b + o] = *v;
        }
    }
}

/// What a [`ModeOperator`] is meant to represent; checked by the validators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Unitary,
    Annihilation,
    Povm,
    Generic,
}

/// Dense operator over one or more truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    matrix: DMatrix<C64>,
    dims: Vec<usize>,
    kind: OperatorKind,
}

impl ModeOperator {
    pub fn new(matrix: DMatrix<C64>, dims: Vec<usize>, kind: OperatorKind) -> Result<Self> {
        check_dims(&dims)?;
        let n = product(&dims);
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Dimension(format!(
                "operator is {}x{} but mode dims {dims:?} need {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, dims, kind })
    }

    pub fn single(matrix: DMatrix<C64>, kind: OperatorKind) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d], kind)
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let n = product(dims);
        Self::new(
            DMatrix::identity(n, n),
            dims.to_vec(),
            OperatorKind::Unitary,
        )
    }

    /// Truncated annihilation operator `â` with `â|n⟩ = √n |n−1⟩`.
    pub fn annihilation(d: usize) -> Result<Self> {
        check_dims(&[d])?;
        let mut m = DMatrix::zeros(d, d);
        for n in 1..d {
            m[(n - 1, n)] = C64::from((n as f64).sqrt());
        }
        Self::single(m, OperatorKind::Annihilation)
    }

    pub fn number(d: usize) -> Result<Self> {
        check_dims(&[d])?;
        let diag = DVector::from_iterator(d, (0..d).map(|n| C64::from(n as f64)));
        Self::single(DMatrix::from_diagonal(&diag), OperatorKind::Generic)
    }

    pub fn diagonal(values: &[f64], kind: OperatorKind) -> Result<Self> {
        let diag = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::from(v)));
        Self::single(DMatrix::from_diagonal(&diag), kind)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: OperatorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn adjoint(&self) -> Self {
        let kind = match self.kind {
            OperatorKind::Annihilation => OperatorKind::Generic,
            k => k,
        };
        Self {
            matrix: self.matrix.adjoint(),
            dims: self.dims.clone(),
            kind,
        }
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(Error::Dimension(format!(
                "cannot compose operators on {:?} and {:?}",
                self.dims, rhs.dims
            )));
        }
        let kind = if self.kind == rhs.kind && self.kind != OperatorKind::Annihilation {
            self.kind
        } else {
            OperatorKind::Generic
        };
        Ok(Self {
            matrix: &self.matrix * &rhs.matrix,
            dims: self.dims.clone(),
            kind,
        })
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Largest entry of `|U†U − I|` restricted to basis states with total
    /// photon number below `⌈min D/2⌉`, where truncation does not reach.
    pub fn unitarity_error(&self) -> f64 {
        let low = self.dims.iter().min().map_or(0, |d| d.div_ceil(2));
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&i| {
                let mut rem = i;
                let mut total = 0;
                for &d in self.dims.iter().rev() {
                    total += rem % d;
                    rem /= d;
                }
                total < low
            })
            .collect();
        let g = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for &i in &keep {
            for &j in &keep {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Smallest and largest eigenvalue of the Hermitian part.
    pub fn eigenvalue_bounds(&self) -> (f64, f64) {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        let ev = h.symmetric_eigenvalues();
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Checks the invariant associated with this operator's kind.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            OperatorKind::Unitary => {
                let e = self.unitarity_error();
                if e > 1e-8 {
                    return Err(Error::Numerical(format!("unitarity error {e:.3e}")));
                }
            }
            OperatorKind::Povm => {
                let h = self.hermiticity_error();
                if h > 1e-10 {
                    return Err(Error::Numerical(format!(
                        "POVM element not Hermitian ({h:.3e})"
                    )));
                }
                let (lo, hi) = self.eigenvalue_bounds();
                if lo < -1e-10 || hi > 1.0 + 1e-10 {
                    return Err(Error::Numerical(format!(
                        "POVM eigenvalues outside [0,1]: [{lo:.3e}, {hi:.3e}]"
                    )));
                }
            }
            OperatorKind::Annihilation | OperatorKind::Generic => {}
        }
        Ok(())
    }

    pub fn apply(&self, ket: &FockKet) -> Result<FockKet> {
        if ket.dims != self.dims {
            return Err(Error::Dimension(format!(
                "operator on {:?} applied to ket on {:?}",
                self.dims, ket.dims
            )));
        }
        Ok(FockKet {
            amps: &self.matrix * &ket.amps,
            dims: ket.dims.clone(),
        })
    }
}

/// Tensor product of two objects of the same kind.
pub trait TensorProduct: Sized {
    fn tensor_with_budget(&self, other: &Self, max_elements: usize) -> Result<Self>;

    fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_budget(other, DEFAULT_MAX_ELEMENTS)
    }
}

fn kron_checked(a: &DMatrix<C64>, b: &DMatrix<C64>, budget: usize) -> Result<DMatrix<C64>> {
    let rows = a.nrows() * b.nrows();
    let cols = a.ncols() * b.ncols();
    let requested = rows.saturating_mul(cols);
    if requested > budget {
        return Err(Error::Capacity { requested, budget });
    }
    Ok(a.kronecker(b))
}

impl TensorProduct for ModeOperator {
    fn tensor_with_budget(&self, other: &Self, max_elements: usize) -> Result<Self> {
        let matrix = kron_checked(&self.matrix, &other.matrix, max_elements)?;
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let kind = if self.kind == other.kind && self.kind != OperatorKind::Annihilation {
            self.kind
        } else {
            OperatorKind::Generic
        };
        Ok(Self { matrix, dims, kind })
    }
}

/// A [`ModeOperator`] placed on selected modes of a larger system.
#[derive(Debug, Clone)]
pub struct EmbeddedOperator {
    op: ModeOperator,
    modes: Vec<usize>,
    system_dims: Vec<usize>,
}

impl EmbeddedOperator {
    pub fn new(op: ModeOperator, modes: Vec<usize>, system_dims: Vec<usize>) -> Result<Self> {
        check_dims(&system_dims)?;
        check_modes(&system_dims, &modes)?;
        let local: Vec<usize> = modes.iter().map(|&m| system_dims[m]).collect();
        if local != op.dims {
            return Err(Error::Dimension(format!(
                "operator dims {:?} do not match modes {modes:?} of system {system_dims:?}",
                op.dims
            )));
        }
        Ok(Self {
            op,
            modes,
            system_dims,
        })
    }

    /// Treats `op` as acting on its whole mode list.
    pub fn whole(op: ModeOperator) -> Self {
        let modes = (0..op.dims.len()).collect();
        let system_dims = op.dims.clone();
        Self {
            op,
            modes,
            system_dims,
        }
    }

    pub fn operator(&self) -> &ModeOperator {
        &self.op
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn system_dims(&self) -> &[usize] {
        &self.system_dims
    }

    pub fn kind(&self) -> OperatorKind {
        self.op.kind
    }

    pub fn adjoint(&self) -> Self {
        Self {
            op: self.op.adjoint(),
            modes: self.modes.clone(),
            system_dims: self.system_dims.clone(),
        }
    }

    /// Expands to a dense operator on the full system.
    pub fn to_dense(&self) -> Result<ModeOperator> {
        let n = product(&self.system_dims);
        let requested = n.saturating_mul(n);
        if requested > DEFAULT_MAX_ELEMENTS {
            return Err(Error::Capacity {
                requested,
                budget: DEFAULT_MAX_ELEMENTS,
            });
        }
        let mut m = DMatrix::<C64>::zeros(n, n);
        let mut col = vec![ZERO; n];
        for c in 0..n {
            col.iter_mut().for_each(|v| *v = ZERO);
            col[c] = ONE;
            apply_local(&mut col, &self.system_dims, self.op.matrix(), &self.modes);
            for (r, v) in col.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        ModeOperator::new(m, self.system_dims.clone(), self.op.kind)
    }

    pub fn apply(&self, ket: &FockKet) -> Result<FockKet> {
        ket.apply_on(&self.op, &self.modes)
    }
}

/// Pure state over one or more truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockKet {
    amps: DVector<C64>,
    dims: Vec<usize>,
}

impl FockKet {
    pub fn new(amps: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        if amps.len() != product(&dims) {
            return Err(Error::Dimension(format!(
                "{} amplitudes for mode dims {dims:?}",
                amps.len()
            )));
        }
        Ok(Self { amps, dims })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let d = amps.len();
        Self::new(DVector::from_vec(amps), vec![d])
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amps.iter().map(|&a| C64::from(a)).collect())
    }

    /// Number state `|n⟩` at cutoff `d`.
    pub fn basis(n: usize, d: usize) -> Result<Self> {
        if n >= d {
            return Err(Error::Argument(format!(
                "level {n} not representable at cutoff {d}"
            )));
        }
        let mut amps = DVector::zeros(d);
        amps[n] = ONE;
        Self::new(amps, vec![d])
    }

    pub fn vacuum(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let mut amps = DVector::zeros(product(dims));
        amps[0] = ONE;
        Self::new(amps, dims.to_vec())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Cutoff of a single-mode ket (the first mode's cutoff otherwise).
    pub fn cutoff(&self) -> usize {
        self.dims[0]
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numerical(format!(
                "cannot normalize ket with norm² {n}"
            )));
        }
        self.amps /= C64::from(n.sqrt());
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            amps: &self.amps * c,
            dims: self.dims.clone(),
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, other: &Self, c: C64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            amps: &self.amps + &other.amps * c,
            dims: self.dims.clone(),
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|² / (‖self‖²‖other‖²)`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let ov = self.inner(other)?;
        Ok(ov.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    /// Copies the amplitudes into a ket with a different single-mode cutoff,
    /// dropping or zero-padding the top levels.
    pub fn resized(&self, d: usize) -> Result<Self> {
        if self.dims.len() != 1 {
            return Err(Error::Dimension("resizing needs a single-mode ket".into()));
        }
        let amps = DVector::from_fn(d, |i, _| {
            if i < self.amps.len() {
                self.amps[i]
            } else {
                ZERO
            }
        });
        Self::new(amps, vec![d])
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let amps = self.amps.kronecker(&other.amps);
        Self::new(amps, dims)
    }

    /// Applies `op` to the listed modes (first listed varies slowest in `op`).
    pub fn apply_on(&self, op: &ModeOperator, modes: &[usize]) -> Result<Self> {
        check_modes(&self.dims, modes)?;
        let local: Vec<usize> = modes.iter().map(|&m| self.dims[m]).collect();
        if local != op.dims {
            return Err(Error::Dimension(format!(
                "operator on {:?} applied to modes {modes:?} with dims {local:?}",
                op.dims
            )));
        }
        let mut out = self.clone();
        apply_local(out.amps.as_mut_slice(), &self.dims, op.matrix(), modes);
        Ok(out)
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            matrix: &self.amps * self.amps.adjoint(),
            dims: self.dims.clone(),
            trace_deficit: 0.0,
        }
    }

    /// Population of the top `levels` Fock levels of `mode`.
    pub fn top_population(&self, mode: usize, levels: usize) -> f64 {
        let d = self.dims[mode];
        let st = strides(&self.dims);
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / st[mode]) % d + levels >= d)
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            / self.norm_sqr()
    }

    /// Largest top-two-level population over all modes.
    pub fn leakage(&self) -> f64 {
        (0..self.dims.len())
            .map(|m| self.top_population(m, 2))
            .fold(0.0, f64::max)
    }

    /// Unnormalized reduced state `Tr_{¬keep}[ |ψ⟩⟨ψ| (⊗ Π_j) ]` with one POVM
    /// element per measured mode; modes neither measured nor kept are traced.
    pub fn reduce_with_povm(
        &self,
        measured: &[(usize, &ModeOperator)],
        keep: &[usize],
    ) -> Result<DensityOperator> {
        let measured_modes: Vec<usize> = measured.iter().map(|(m, _)| *m).collect();
        let mut all = measured_modes.clone();
        all.extend_from_slice(keep);
        check_modes(&self.dims, &all)?;
        if keep.is_empty() {
            return Err(Error::Argument("keep set must be nonempty".into()));
        }
        let mut povm: Option<DMatrix<C64>> = None;
        for (m, op) in measured {
            if op.dims != [self.dims[*m]] {
                return Err(Error::Dimension(format!(
                    "POVM on {:?} for mode {m} with cutoff {}",
                    op.dims, self.dims[*m]
                )));
            }
            povm = Some(match povm {
                None => op.matrix.clone(),
                Some(p) => p.kronecker(&op.matrix),
            });
        }
        let povm = povm.unwrap_or_else(|| DMatrix::identity(1, 1));
        let traced = complement(self.dims.len(), &all);
        let om = offsets(&self.dims, &measured_modes);
        let ot = offsets(&self.dims, &traced);
        let ok = offsets(&self.dims, keep);
        let povm_t = povm.transpose();
        let mut out = DMatrix::<C64>::zeros(ok.len(), ok.len());
        let mut a = DMatrix::<C64>::zeros(om.len(), ok.len());
        for &t in &ot {
            for (j, &k) in ok.iter().enumerate() {
                for (i, &m) in om.iter().enumerate() {
                    a[(i, j)] = self.amps[t + m + k];
                }
            }
            let b = &povm_t * a.map(|z| z.conj());
            out += a.transpose() * b;
        }
        let dims = keep.iter().map(|&m| self.dims[m]).collect();
        Ok(DensityOperator {
            matrix: out,
            dims,
            trace_deficit: 0.0,
        })
    }
}

/// Density operator over one or more truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
    dims: Vec<usize>,
    trace_deficit: f64,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let n = product(&dims);
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Dimension(format!(
                "density matrix is {}x{} but mode dims {dims:?} need {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            dims,
            trace_deficit: 0.0,
        })
    }

    pub fn single(matrix: DMatrix<C64>) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d])
    }

    pub fn pure(ket: &FockKet) -> Self {
        ket.to_density()
    }

    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let diag =
            DVector::from_iterator(populations.len(), populations.iter().map(|&p| C64::from(p)));
        Self::single(DMatrix::from_diagonal(&diag))
    }

    pub fn with_trace_deficit(mut self, deficit: f64) -> Self {
        self.trace_deficit = deficit.max(0.0);
        self
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn trace_re(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn element(&self, r: usize, c: usize) -> C64 {
        self.matrix[(r, c)]
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().cloned().unwrap_or(0.0)
    }

    /// Spectral decomposition `Σ λ_k |φ_k⟩⟨φ_k|`, keeping weights above `floor`,
    /// largest weight first.
    pub fn pure_components(&self, floor: f64) -> Vec<(f64, FockKet)> {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        let eig = h.symmetric_eigen();
        let mut parts: Vec<(f64, FockKet)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > floor)
            .map(|(k, &l)| {
                let v = eig.eigenvectors.column(k).into_owned();
                (
                    l,
                    FockKet {
                        amps: v,
                        dims: self.dims.clone(),
                    },
                )
            })
            .collect();
        parts.sort_by(|a, b| b.0.total_cmp(&a.0));
        parts
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Hermitian within 1e−10, eigenvalues ≥ −1e−8 and trace in (0, 1 + 1e−10].
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > 1e-10 {
            return Err(Error::Numerical(format!(
                "density operator not Hermitian ({h:.3e})"
            )));
        }
        let tr = self.trace_re();
        if !(tr > 0.0 && tr <= 1.0 + 1e-10) {
            return Err(Error::Numerical(format!("trace {tr} outside (0, 1]")));
        }
        let lo = self.min_eigenvalue();
        if lo < -1e-8 {
            return Err(Error::Numerical(format!("negative eigenvalue {lo:.3e}")));
        }
        Ok(())
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace_re();
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::Numerical(format!("cannot normalize trace {tr}")));
        }
        Ok(Self {
            matrix: &self.matrix / C64::from(tr),
            dims: self.dims.clone(),
            trace_deficit: self.trace_deficit,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::from(c),
            dims: self.dims.clone(),
            trace_deficit: self.trace_deficit,
        }
    }

    /// `self + w·other` for operators on the same modes.
    pub fn add_weighted(&self, other: &Self, w: f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            matrix: &self.matrix + &other.matrix * C64::from(w),
            dims: self.dims.clone(),
            trace_deficit: self.trace_deficit.max(other.trace_deficit),
        })
    }

    /// Populations of the Fock levels of one mode.
    pub fn mode_populations(&self, mode: usize) -> Result<Vec<f64>> {
        let reduced = partial_trace(self, &[mode])?;
        Ok((0..reduced.dim())
            .map(|n| reduced.matrix[(n, n)].re)
            .collect())
    }

    /// Largest top-two-level population over all modes, relative to the trace.
    pub fn leakage(&self) -> f64 {
        let tr = self.trace_re();
        (0..self.dims.len())
            .filter_map(|m| self.mode_populations(m).ok())
            .map(|p| {
                let d = p.len();
                p[d.saturating_sub(2)..].iter().sum::<f64>() / tr
            })
            .fold(0.0, f64::max)
    }

    /// True when any mode holds at least [`LEAKAGE_THRESHOLD`] in its top two
    /// levels.
    pub fn truncation_warning(&self) -> bool {
        self.leakage() >= LEAKAGE_THRESHOLD
    }

    fn doubled_dims(&self) -> Vec<usize> {
        let mut d = self.dims.clone();
        d.extend_from_slice(&self.dims);
        d
    }

    fn check_local(&self, op: &ModeOperator, modes: &[usize]) -> Result<()> {
        check_modes(&self.dims, modes)?;
        let local: Vec<usize> = modes.iter().map(|&m| self.dims[m]).collect();
        if local != op.dims {
            return Err(Error::Dimension(format!(
                "operator on {:?} applied to modes {modes:?} with dims {local:?}",
                op.dims
            )));
        }
        Ok(())
    }

    // Column-major storage puts the column index slowest, so the flat buffer is
    // a ket over (column modes, row modes).
    fn row_modes(&self, modes: &[usize]) -> Vec<usize> {
        modes.iter().map(|m| m + self.dims.len()).collect()
    }

    /// `O ρ` with `O` acting on `modes`.
    pub fn left_mul_on(&self, op: &ModeOperator, modes: &[usize]) -> Result<Self> {
        self.check_local(op, modes)?;
        let mut out = self.clone();
        let dd = self.doubled_dims();
        apply_local(
            out.matrix.as_mut_slice(),
            &dd,
            op.matrix(),
            &self.row_modes(modes),
        );
        Ok(out)
    }

    /// `ρ O` with `O` acting on `modes`.
    pub fn right_mul_on(&self, op: &ModeOperator, modes: &[usize]) -> Result<Self> {
        self.check_local(op, modes)?;
        let mut out = self.clone();
        let dd = self.doubled_dims();
        apply_local(
            out.matrix.as_mut_slice(),
            &dd,
            &op.matrix().transpose(),
            modes,
        );
        Ok(out)
    }

    /// `K ρ K†` with `K` acting on `modes`; no trace bookkeeping.
    pub fn sandwich_on(&self, op: &ModeOperator, modes: &[usize]) -> Result<Self> {
        self.check_local(op, modes)?;
        let mut out = self.clone();
        let dd = self.doubled_dims();
        let buf = out.matrix.as_mut_slice();
        apply_local(buf, &dd, op.matrix(), &self.row_modes(modes));
        apply_local(buf, &dd, &op.matrix().map(|z| z.conj()), modes);
        Ok(out)
    }
}

impl TensorProduct for DensityOperator {
    fn tensor_with_budget(&self, other: &Self, max_elements: usize) -> Result<Self> {
        let matrix = kron_checked(&self.matrix, &other.matrix, max_elements)?;
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let (a, b) = (self.trace_deficit, other.trace_deficit);
        Ok(Self {
            matrix,
            dims,
            trace_deficit: a + b - a * b,
        })
    }
}

/// `a ⊗ b`; the result lists `a`'s modes first.
pub fn tensor<T: TensorProduct>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Traces out every mode not in `keep`; the result's modes follow the order of
/// `keep`.
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(Error::Argument(
            "partial trace needs a nonempty keep set".into(),
        ));
    }
    check_modes(&rho.dims, keep)?;
    let ok = offsets(&rho.dims, keep);
    let ot = offsets(&rho.dims, &complement(rho.dims.len(), keep));
    let mut out = DMatrix::<C64>::zeros(ok.len(), ok.len());
    for (j, &cj) in ok.iter().enumerate() {
        for (i, &ci) in ok.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &ot {
                acc += rho.matrix[(ci + t, cj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityOperator {
        matrix: out,
        dims: keep.iter().map(|&m| rho.dims[m]).collect(),
        trace_deficit: rho.trace_deficit,
    })
}

/// `U ρ U†`. Probability pushed past the cutoffs is added to the trace deficit.
pub fn apply_unitary(u: &EmbeddedOperator, rho: &DensityOperator) -> Result<DensityOperator> {
    if u.system_dims != rho.dims {
        return Err(Error::Dimension(format!(
            "unitary on system {:?} applied to state on {:?}",
            u.system_dims, rho.dims
        )));
    }
    let before = rho.trace_re();
    let mut out = rho.sandwich_on(&u.op, &u.modes)?;
    let lost = before - out.trace_re();
    if lost > 1e-10 {
        out.trace_deficit += lost;
    }
    Ok(out)
}

/// `tr(ρ O)`.
pub fn expect(rho: &DensityOperator, op: &EmbeddedOperator) -> Result<C64> {
    if op.system_dims != rho.dims {
        return Err(Error::Dimension(format!(
            "observable on system {:?} for state on {:?}",
            op.system_dims, rho.dims
        )));
    }
    Ok(rho.left_mul_on(&op.op, &op.modes)?.trace())
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
