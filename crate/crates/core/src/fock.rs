//! Truncated Fock-space representation of multimode bosonic states, with the
//! linear-optics and measurement primitives the teleportation pipeline needs:
//! coherent/cat/NZE constructors, tensor products, a 50:50 beam splitter,
//! photon-class projective measurement, and fidelities.
//!
//! States are dense complex tensors indexed by per-mode photon numbers and
//! are immutable in spirit: every operation returns a new state (the few
//! `&mut self` methods exist for cheap in-place relabeling or phases).

use ndarray::{ArrayD, Axis, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default bound on the neglected Poisson tail of any coherent amplitude.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-12;

/// Probabilities below this are treated as "outcome did not occur" and the
/// collapsed state is not renormalized.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// Largest tensor (total complex amplitudes) a single state may hold.
const MAX_TENSOR_LEN: usize = 1 << 26;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Fock-support parity of a cat state: even cats live on even photon
/// numbers, odd cats on odd ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn matches(self, n: usize) -> bool {
        match self {
            Parity::Even => n % 2 == 0,
            Parity::Odd => n % 2 == 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Three-way photon-count classification used by both detectors: vacuum,
/// nonzero-even, or odd photon number. The three classes partition the Fock
/// basis, so the corresponding projectors resolve the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhotonClass {
    /// Exactly zero photons.
    Zero,
    /// Nonzero even photon number (2, 4, 6, ...).
    Nze,
    /// Odd photon number (1, 3, 5, ...).
    Odd,
}

impl PhotonClass {
    pub const ALL: [PhotonClass; 3] = [PhotonClass::Zero, PhotonClass::Nze, PhotonClass::Odd];

    pub fn contains(self, n: usize) -> bool {
        match self {
            PhotonClass::Zero => n == 0,
            PhotonClass::Nze => n >= 2 && n % 2 == 0,
            PhotonClass::Odd => n % 2 == 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhotonClass::Zero => "zero",
            PhotonClass::Nze => "nze",
            PhotonClass::Odd => "odd",
        }
    }
}

/// Probability that a Poisson(`mu`) variable is ≥ `dim`, i.e. the weight a
/// coherent state with mean photon number `mu` carries beyond a cutoff that
/// keeps levels `0..dim`. Summed upward from `dim` so tiny tails do not lose
/// precision to cancellation.
pub fn poisson_tail(mu: f64, dim: usize) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    let mut ln_fact = 0.0;
    for k in 1..=dim {
        ln_fact += (k as f64).ln();
    }
    let mut term = (-mu + dim as f64 * mu.ln() - ln_fact).exp();
    let mut total = 0.0;
    let mut n = dim as f64;
    loop {
        total += term;
        n += 1.0;
        term *= mu / n;
        if term < total * 1e-18 + 1e-300 {
            return total;
        }
    }
}

/// Per-mode cutoff policy. `dim` is chosen as
/// `ceil(mu + 12*sqrt(mu + 1) + 20)` for the largest mean photon number `mu`
/// among live modes, then raised further if the Poisson tail still reaches
/// `tail_bound`. The rule keeps the neglected probability below 1e-12 for
/// `mu ≤ 50` with a wide margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    max_mean_photon: f64,
    dim: usize,
    tail_bound: f64,
}

impl TruncationPolicy {
    pub fn new(max_mean_photon: f64, tail_bound: f64) -> Result<Self> {
        if !max_mean_photon.is_finite() || max_mean_photon < 0.0 {
            return Err(Error::InvalidInput(format!(
                "max mean photon number must be finite and ≥ 0, got {max_mean_photon}"
            )));
        }
        if max_mean_photon > 400.0 {
            return Err(Error::InvalidInput(format!(
                "max mean photon number {max_mean_photon} is beyond the supported range (≤ 400)"
            )));
        }
        if !(tail_bound > 0.0 && tail_bound <= 1e-6) {
            return Err(Error::InvalidInput(format!(
                "tail bound must lie in (0, 1e-6], got {tail_bound}"
            )));
        }
        let mu = max_mean_photon;
        let mut dim = (mu + 12.0 * (mu + 1.0).sqrt() + 20.0).ceil() as usize;
        dim = dim.max(2);
        while poisson_tail(mu, dim) >= tail_bound {
            dim += 1;
        }
        Ok(Self {
            max_mean_photon,
            dim,
            tail_bound,
        })
    }

    /// Policy with the default 1e-12 tail bound.
    pub fn default_for(max_mean_photon: f64) -> Result<Self> {
        Self::new(max_mean_photon, DEFAULT_TAIL_BOUND)
    }

    pub fn max_mean_photon(&self) -> f64 {
        self.max_mean_photon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// The neglected-tail weight this policy leaves for a coherent state of
    /// the given amplitude.
    pub fn truncation_residual(&self, amplitude: C64) -> f64 {
        poisson_tail(amplitude.norm_sqr(), self.dim)
    }

    /// Error unless the policy's cutoff covers `amplitude` within the bound.
    pub fn check_amplitude(&self, amplitude: C64) -> Result<()> {
        let mean_photon = amplitude.norm_sqr();
        let tail = poisson_tail(mean_photon, self.dim);
        if tail >= self.tail_bound {
            return Err(Error::CutoffTooSmall {
                mean_photon,
                dim: self.dim,
                tail,
                bound: self.tail_bound,
            });
        }
        Ok(())
    }
}

/// Raw truncated coherent amplitudes e^{−|α|²/2} αⁿ/√(n!) for n < dim,
/// built iteratively so individual factors never overflow. Not renormalized;
/// the missing norm is exactly the Poisson tail.
pub fn coherent_amplitudes(amplitude: C64, dim: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::new((-amplitude.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(c);
    for n in 1..dim {
        c *= amplitude / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

/// Pure multimode state vector over truncated Fock spaces. Mode labels name
/// the optical wires ("0" through "10" in the protocol, plus atom modes).
#[derive(Debug, Clone)]
pub struct MultiModeFockState {
    labels: Vec<String>,
    amps: ArrayD<C64>,
}

impl MultiModeFockState {
    /// Single-mode state from explicit Fock amplitudes (not renormalized).
    pub fn from_amplitudes(label: &str, amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidInput("mode needs at least one Fock level".into()));
        }
        let dim = amps.len();
        let amps = ArrayD::from_shape_vec(IxDyn(&[dim]), amps)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Self {
            labels: vec![label.to_string()],
            amps,
        })
    }

    pub fn vacuum(label: &str, dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidInput("vacuum needs dim ≥ 1".into()));
        }
        let mut amps = vec![ZERO; dim];
        amps[0] = C64::new(1.0, 0.0);
        Self::from_amplitudes(label, amps)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> Vec<usize> {
        self.amps.shape().to_vec()
    }

    pub fn mode_count(&self) -> usize {
        self.labels.len()
    }

    pub fn amps(&self) -> &ArrayD<C64> {
        &self.amps
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.amps.shape()[self.mode_index(label)?])
    }

    pub(crate) fn flat(&self) -> &[C64] {
        self.amps
            .as_slice()
            .expect("state tensors are kept in standard layout")
    }

    pub fn norm_sqr(&self) -> f64 {
        self.flat().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if n2 < PROBABILITY_FLOOR * PROBABILITY_FLOOR {
            return Err(Error::Degenerate(
                "cannot normalize a (numerically) zero state".into(),
            ));
        }
        let inv = 1.0 / n2.sqrt();
        self.amps.mapv_inplace(|c| c * inv);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, c: C64) {
        self.amps.mapv_inplace(|a| a * c);
    }

    /// ⟨self|other⟩. Requires identical mode labels in identical order and
    /// identical dims.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.labels != other.labels {
            return Err(Error::InvalidInput(format!(
                "inner product needs matching modes: {:?} vs {:?}",
                self.labels, other.labels
            )));
        }
        if self.amps.shape() != other.amps.shape() {
            return Err(Error::DimensionMismatch(self.amps.len(), other.amps.len()));
        }
        Ok(self
            .flat()
            .iter()
            .zip(other.flat())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Kronecker product; mode labels must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for l in &other.labels {
            if self.labels.contains(l) {
                return Err(Error::DuplicateMode(l.clone()));
            }
        }
        let mut shape = self.dims();
        shape.extend(other.dims());
        let len = self.amps.len() * other.amps.len();
        if len > MAX_TENSOR_LEN {
            return Err(Error::InvalidInput(format!(
                "tensor of {len} amplitudes exceeds the supported size"
            )));
        }
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let a = self.flat();
        let b = other.flat();
        let mut out = Vec::with_capacity(len);
        for &x in a {
            for &y in b {
                out.push(x * y);
            }
        }
        let amps = ArrayD::from_shape_vec(IxDyn(&shape), out)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Self { labels, amps })
    }

    pub fn rename_mode(&mut self, from: &str, to: &str) -> Result<()> {
        let idx = self.mode_index(from)?;
        if from != to && self.labels.iter().any(|l| l == to) {
            return Err(Error::DuplicateMode(to.to_string()));
        }
        self.labels[idx] = to.to_string();
        Ok(())
    }

    /// Exchange the contents of two equal-dimension modes (labels stay put).
    pub fn swap_modes(&self, a: &str, b: &str) -> Result<Self> {
        let ia = self.mode_index(a)?;
        let ib = self.mode_index(b)?;
        let shape = self.amps.shape();
        if shape[ia] != shape[ib] {
            return Err(Error::DimensionMismatch(shape[ia], shape[ib]));
        }
        let mut perm: Vec<usize> = (0..self.labels.len()).collect();
        perm.swap(ia, ib);
        let amps = self
            .amps
            .clone()
            .permuted_axes(IxDyn(&perm))
            .as_standard_layout()
            .into_owned();
        Ok(Self {
            labels: self.labels.clone(),
            amps,
        })
    }

    /// Multiply level `n` of one mode by e^{i n θ} (optical phase shifter;
    /// θ = π is the protocol's conditional a → −a map).
    pub fn phase_shift(&self, label: &str, theta: f64) -> Result<Self> {
        let ax = self.mode_index(label)?;
        let dim = self.amps.shape()[ax];
        let mut amps = self.amps.clone();
        for n in 1..dim {
            let ph = C64::from_polar(1.0, theta * n as f64);
            amps.index_axis_mut(Axis(ax), n).mapv_inplace(|c| c * ph);
        }
        Ok(Self {
            labels: self.labels.clone(),
            amps,
        })
    }

    /// Marginal photon-number distribution of one mode.
    pub fn number_distribution(&self, label: &str) -> Result<Vec<f64>> {
        let ax = self.mode_index(label)?;
        let dim = self.amps.shape()[ax];
        Ok((0..dim)
            .map(|n| {
                self.amps
                    .index_axis(Axis(ax), n)
                    .iter()
                    .map(|c| c.norm_sqr())
                    .sum()
            })
            .collect())
    }

    pub fn mean_photon(&self, label: &str) -> Result<f64> {
        Ok(self
            .number_distribution(label)?
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum())
    }

    /// Probability weight sitting on the last retained Fock level of a mode.
    pub fn top_level_weight(&self, label: &str) -> Result<f64> {
        let ax = self.mode_index(label)?;
        let dim = self.amps.shape()[ax];
        Ok(self
            .amps
            .index_axis(Axis(ax), dim - 1)
            .iter()
            .map(|c| c.norm_sqr())
            .sum())
    }

    /// Projective photon-class measurement {zero, nze, odd} on one mode.
    /// Probability is ‖P|ψ⟩‖²; the collapsed state keeps the mode and is
    /// renormalized, or is `None` when the outcome probability is below the
    /// renormalization floor.
    pub fn project_class(&self, label: &str, class: PhotonClass) -> Result<ClassOutcome> {
        let ax = self.mode_index(label)?;
        let dim = self.amps.shape()[ax];
        let mut amps = self.amps.clone();
        let mut probability = 0.0;
        for n in 0..dim {
            let mut slice = amps.index_axis_mut(Axis(ax), n);
            if class.contains(n) {
                probability += slice.iter().map(|c| c.norm_sqr()).sum::<f64>();
            } else {
                slice.fill(ZERO);
            }
        }
        let collapsed = if probability < PROBABILITY_FLOOR {
            None
        } else {
            let inv = 1.0 / probability.sqrt();
            amps.mapv_inplace(|c| c * inv);
            Some(Self {
                labels: self.labels.clone(),
                amps,
            })
        };
        Ok(ClassOutcome {
            probability,
            collapsed,
        })
    }

    /// Projective photon-number measurement with result `n`; the measured
    /// mode is removed from the state. The state must keep ≥ 1 mode.
    pub fn project_level(&self, label: &str, n: usize) -> Result<LevelOutcome> {
        let ax = self.mode_index(label)?;
        if self.labels.len() == 1 {
            return Err(Error::InvalidInput(
                "level projection would leave a zero-mode state".into(),
            ));
        }
        let dim = self.amps.shape()[ax];
        if n >= dim {
            return Err(Error::InvalidInput(format!(
                "level {n} outside mode `{label}` (dim {dim})"
            )));
        }
        let slice = self
            .amps
            .index_axis(Axis(ax), n)
            .as_standard_layout()
            .into_owned();
        let probability: f64 = slice.iter().map(|c| c.norm_sqr()).sum();
        let remaining = if probability < PROBABILITY_FLOOR {
            None
        } else {
            let inv = 1.0 / probability.sqrt();
            let mut labels = self.labels.clone();
            labels.remove(ax);
            let mut amps = slice;
            amps.mapv_inplace(|c| c * inv);
            Some(Self { labels, amps })
        };
        Ok(LevelOutcome {
            probability,
            remaining,
        })
    }

    pub(crate) fn from_parts(labels: Vec<String>, amps: ArrayD<C64>) -> Self {
        Self { labels, amps }
    }
}

/// Result of a photon-class measurement.
#[derive(Debug, Clone)]
pub struct ClassOutcome {
    pub probability: f64,
    pub collapsed: Option<MultiModeFockState>,
}

/// Result of a sharp photon-number measurement (mode removed).
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub probability: f64,
    pub remaining: Option<MultiModeFockState>,
}

/// |⟨a|b⟩|² with both inputs normalized first.
pub fn fidelity(a: &MultiModeFockState, b: &MultiModeFockState) -> Result<f64> {
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if na < PROBABILITY_FLOOR || nb < PROBABILITY_FLOOR {
        return Err(Error::Degenerate("fidelity of a zero state".into()));
    }
    Ok(a.inner(b)?.norm_sqr() / (na * nb))
}

/// Kronecker product of a list of states.
pub fn tensor_all(states: &[MultiModeFockState]) -> Result<MultiModeFockState> {
    let (first, rest) = states
        .split_first()
        .ok_or_else(|| Error::InvalidInput("tensor of an empty list".into()))?;
    let mut acc = first.clone();
    for s in rest {
        acc = acc.tensor(s)?;
    }
    Ok(acc)
}

/// Truncated coherent state |amplitude⟩, renormalized to unit norm after the
/// cutoff; the policy guarantees the discarded tail is below its bound.
pub fn coherent_state(
    label: &str,
    amplitude: C64,
    policy: &TruncationPolicy,
) -> Result<MultiModeFockState> {
    policy.check_amplitude(amplitude)?;
    MultiModeFockState::from_amplitudes(label, coherent_amplitudes(amplitude, policy.dim()))?
        .normalized()
}

/// Normalized cat state (|α⟩ ± |−α⟩); even cats keep only even Fock levels,
/// odd cats only odd levels. The odd cat degenerates (0/0 normalization) as
/// α → 0.
pub fn cat_state(
    label: &str,
    amplitude: C64,
    parity: Parity,
    policy: &TruncationPolicy,
) -> Result<MultiModeFockState> {
    policy.check_amplitude(amplitude)?;
    let mut amps = coherent_amplitudes(amplitude, policy.dim());
    for (n, a) in amps.iter_mut().enumerate() {
        if !parity.matches(n) {
            *a = ZERO;
        }
    }
    MultiModeFockState::from_amplitudes(label, amps)?
        .normalized()
        .map_err(|_| {
            Error::Degenerate(format!(
                "{} cat state vanishes at amplitude {amplitude}",
                parity.name()
            ))
        })
}

/// Normalized "nonzero even" state: the even-cat component with the vacuum
/// projected out, so ⟨0|NZE⟩ = 0 exactly and only levels 2, 4, 6, … appear.
pub fn nze_state(
    label: &str,
    amplitude: C64,
    policy: &TruncationPolicy,
) -> Result<MultiModeFockState> {
    policy.check_amplitude(amplitude)?;
    let mut amps = coherent_amplitudes(amplitude, policy.dim());
    for (n, a) in amps.iter_mut().enumerate() {
        if n == 0 || n % 2 == 1 {
            *a = ZERO;
        }
    }
    MultiModeFockState::from_amplitudes(label, amps)?
        .normalized()
        .map_err(|_| {
            Error::Degenerate(format!("NZE state vanishes at amplitude {amplitude}"))
        })
}

/// Two-level atom with ground |l⟩ (level 0) and excited |u⟩ (level 1)
/// amplitudes; becomes a dim-2 mode when tensored with field modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomState {
    pub amp_l: C64,
    pub amp_u: C64,
}

impl AtomState {
    pub fn new(amp_l: C64, amp_u: C64) -> Result<Self> {
        let norm = amp_l.norm_sqr() + amp_u.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "atom preparation must be normalized; |amp_l|²+|amp_u|² = {norm}"
            )));
        }
        Ok(Self { amp_l, amp_u })
    }

    pub fn ground() -> Self {
        Self {
            amp_l: C64::new(1.0, 0.0),
            amp_u: ZERO,
        }
    }

    pub fn excited() -> Self {
        Self {
            amp_l: ZERO,
            amp_u: C64::new(1.0, 0.0),
        }
    }

    pub fn to_mode(&self, label: &str) -> MultiModeFockState {
        MultiModeFockState::from_amplitudes(label, vec![self.amp_l, self.amp_u])
            .expect("two fixed levels")
    }
}

/// Move axes `i` and `j` of a standard-layout tensor to the front and hand
/// back the flattened data plus the bookkeeping needed to restore the
/// original axis order. Shared by the beam splitter and the cavity rotation.
pub(crate) fn reorder_two_front(
    amps: &ArrayD<C64>,
    i: usize,
    j: usize,
) -> (Vec<C64>, Vec<usize>, Vec<usize>) {
    let n_axes = amps.ndim();
    let mut perm = vec![i, j];
    perm.extend((0..n_axes).filter(|&k| k != i && k != j));
    let moved = amps.view().permuted_axes(IxDyn(&perm));
    let shape = moved.shape().to_vec();
    let flat: Vec<C64> = moved.iter().cloned().collect();
    (flat, perm, shape)
}

/// Inverse of [`reorder_two_front`]: rebuild the tensor in the original axis
/// order from the (front-ordered) flat data.
pub(crate) fn restore_axis_order(
    flat: Vec<C64>,
    permuted_shape: &[usize],
    perm: &[usize],
) -> ArrayD<C64> {
    let arr = ArrayD::from_shape_vec(IxDyn(permuted_shape), flat)
        .expect("shape bookkeeping is internal");
    let mut inv = vec![0usize; perm.len()];
    for (pos, &orig) in perm.iter().enumerate() {
        inv[orig] = pos;
    }
    arr.permuted_axes(IxDyn(&inv)).as_standard_layout().into_owned()
}

/// 50:50 beam splitter with the coherent-label action
/// (α, β) → ((α+β)/√2, (α−β)/√2) and no extra phase. Exact Fock-space
/// unitary, block-diagonal in total photon number; both modes must share one
/// dimension.
///
/// Each total-photon block exponentiates the antisymmetric mixing generator:
/// conjugating by diag(i^k) turns it into a real symmetric tridiagonal
/// matrix, whose eigendecomposition gives the block unitary; a final
/// (−1)^{n_b} output phase fixes the label convention above.
pub fn beamsplitter(
    state: &MultiModeFockState,
    mode_a: &str,
    mode_b: &str,
) -> Result<MultiModeFockState> {
    let ia = state.mode_index(mode_a)?;
    let ib = state.mode_index(mode_b)?;
    if ia == ib {
        return Err(Error::InvalidInput(
            "beam splitter needs two distinct modes".into(),
        ));
    }
    let shape = state.amps().shape();
    let d = shape[ia];
    if shape[ib] != d {
        return Err(Error::DimensionMismatch(d, shape[ib]));
    }

    let blocks = beamsplitter_blocks(d);
    let (flat, perm, pshape) = reorder_two_front(state.amps(), ia, ib);
    let rest: usize = pshape[2..].iter().product::<usize>().max(1);
    let mut out = vec![ZERO; flat.len()];
    let idx = |na: usize, nb: usize, r: usize| (na * d + nb) * rest + r;

    let mut y = vec![ZERO; d + 1];
    for (n_tot, blk) in blocks.iter().enumerate() {
        let lo = n_tot.saturating_sub(d - 1);
        let hi = n_tot.min(d - 1);
        let m = hi - lo + 1;
        for r in 0..rest {
            for (p, yp) in y.iter_mut().take(m).enumerate() {
                *yp = flat[idx(lo + p, n_tot - (lo + p), r)];
            }
            for p in 0..m {
                let mut acc = ZERO;
                for q in 0..m {
                    acc += blk[p * m + q] * y[q];
                }
                out[idx(lo + p, n_tot - (lo + p), r)] = acc;
            }
        }
    }

    let amps = restore_axis_order(out, &pshape, &perm);
    Ok(MultiModeFockState::from_parts(state.labels().to_vec(), amps))
}

/// Per-total-photon-number blocks of the beam splitter unitary, row-major.
fn beamsplitter_blocks(d: usize) -> Vec<Vec<C64>> {
    use nalgebra::DMatrix;

    let theta = std::f64::consts::FRAC_PI_4;
    let i_pow = |k: i64| -> C64 {
        match k.rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    };

    (0..=(2 * d - 2))
        .map(|n_tot| {
            let lo = n_tot.saturating_sub(d - 1);
            let hi = n_tot.min(d - 1);
            let m = hi - lo + 1;
            // Off-diagonal of the similarity-transformed generator: couples
            // photon splits (na, nb) and (na+1, nb−1) with √((na+1)·nb).
            let beta: Vec<f64> = (0..m.saturating_sub(1))
                .map(|p| {
                    let na = lo + p;
                    let nb = n_tot - na;
                    (((na + 1) * nb) as f64).sqrt()
                })
                .collect();
            let tri = DMatrix::<f64>::from_fn(m, m, |r, c| {
                if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = tri.symmetric_eigen();
            let v = &eig.eigenvectors;
            let phases: Vec<C64> = eig
                .eigenvalues
                .iter()
                .map(|&l| C64::from_polar(1.0, -theta * l))
                .collect();
            let mut blk = vec![ZERO; m * m];
            for p in 0..m {
                let nb_out = n_tot - (lo + p);
                let out_sign = if nb_out % 2 == 1 { -1.0 } else { 1.0 };
                for q in 0..m {
                    let mut acc = ZERO;
                    for (k, ph) in phases.iter().enumerate() {
                        acc += v[(p, k)] * v[(q, k)] * ph;
                    }
                    blk[p * m + q] = acc * i_pow(p as i64 - q as i64) * out_sign;
                }
            }
            blk
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Deterministic pseudo-random amplitudes for property-style checks.
    fn pseudo_random_state(label: &str, dim: usize, seed: u64) -> MultiModeFockState {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let amps: Vec<C64> = (0..dim).map(|_| c(next(), next())).collect();
        MultiModeFockState::from_amplitudes(label, amps)
            .unwrap()
            .normalized()
            .unwrap()
    }

    #[test]
    fn poisson_tail_matches_brute_force() {
        for &(mu, dim) in &[(4.0, 10usize), (1.0, 6), (9.0, 25), (0.3, 4)] {
            let mut pmf = (-mu_f(mu)).exp();
            let mut cdf = 0.0;
            for n in 0..dim {
                cdf += pmf;
                pmf *= mu / (n as f64 + 1.0);
            }
            let brute = 1.0 - cdf;
            assert_relative_eq!(poisson_tail(mu, dim), brute, max_relative = 1e-9);
        }

        fn mu_f(mu: f64) -> f64 {
            mu
        }
    }

    #[test]
    fn policy_dim_keeps_tail_below_bound() {
        for &mu in &[0.0, 0.5, 4.0, 8.0, 20.0, 50.0] {
            let policy = TruncationPolicy::default_for(mu).unwrap();
            assert!(policy.dim() >= 2, "dim ≥ 2 required");
            assert!(
                poisson_tail(mu, policy.dim()) < policy.tail_bound(),
                "tail bound violated at mu = {mu}"
            );
        }
        assert!(TruncationPolicy::new(4.0, 0.0).is_err(), "zero tail bound rejected");
        assert!(TruncationPolicy::new(-1.0, 1e-12).is_err(), "negative mean rejected");
    }

    #[test]
    fn zero_amplitude_coherent_state_is_vacuum() {
        let policy = TruncationPolicy::default_for(1.0).unwrap();
        let s = coherent_state("0", c(0.0, 0.0), &policy).unwrap();
        let v = MultiModeFockState::vacuum("0", policy.dim()).unwrap();
        assert_relative_eq!(fidelity(&s, &v).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn coherent_prenormalization_norm_is_tail_accurate() {
        let policy = TruncationPolicy::default_for(4.0).unwrap();
        let raw = coherent_amplitudes(c(2.0, 0.0), policy.dim());
        let norm2: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
        assert_abs_diff_eq!(norm2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_overlap_exponential_law() {
        // |⟨α|β⟩|² = exp(−|α−β|²); at α = 1, β = −1 this is e^{−4}.
        let policy = TruncationPolicy::default_for(2.0).unwrap();
        let a = coherent_state("m", c(1.0, 0.0), &policy).unwrap();
        let b = coherent_state("m", c(-1.0, 0.0), &policy).unwrap();
        assert_relative_eq!(
            fidelity(&a, &b).unwrap(),
            (-4.0f64).exp(),
            max_relative = 1e-10
        );

        // Complex pair with the full phase: ⟨α|β⟩ = exp(−|α|²/2−|β|²/2+α*β).
        let al = c(0.8, -0.3);
        let be = c(-0.2, 0.9);
        let sa = coherent_state("m", al, &policy).unwrap();
        let sb = coherent_state("m", be, &policy).unwrap();
        let expect = (al.conj() * be - (al.norm_sqr() + be.norm_sqr()) / 2.0).exp();
        let got = sa.inner(&sb).unwrap();
        assert_abs_diff_eq!(got.re, expect.re, epsilon = 1e-12);
        assert_abs_diff_eq!(got.im, expect.im, epsilon = 1e-12);
    }

    #[test]
    fn coherent_mean_photon_matches_amplitude() {
        let policy = TruncationPolicy::default_for(5.0).unwrap();
        let s = coherent_state("m", c(1.5, -1.0), &policy).unwrap();
        assert_relative_eq!(s.mean_photon("m").unwrap(), 3.25, max_relative = 1e-10);
    }

    #[test]
    fn cat_state_limits_and_orthogonality() {
        let policy = TruncationPolicy::default_for(3.0).unwrap();

        let even0 = cat_state("m", c(0.0, 0.0), Parity::Even, &policy).unwrap();
        let vac = MultiModeFockState::vacuum("m", policy.dim()).unwrap();
        assert_relative_eq!(fidelity(&even0, &vac).unwrap(), 1.0, epsilon = 1e-14);

        assert!(matches!(
            cat_state("m", c(0.0, 0.0), Parity::Odd, &policy),
            Err(Error::Degenerate(_))
        ));

        let even = cat_state("m", c(1.5, 0.0), Parity::Even, &policy).unwrap();
        let odd = cat_state("m", c(1.5, 0.0), Parity::Odd, &policy).unwrap();
        assert_abs_diff_eq!(even.inner(&odd).unwrap().norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(even.norm_sqr(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(odd.norm_sqr(), 1.0, epsilon = 1e-12);

        // Overlap with the equal-amplitude coherent state:
        // ⟨EVEN,α|α⟩ = √((1+x²)/2), ⟨ODD,α|α⟩ = √((1−x²)/2), x = e^{−|α|²}.
        let coh = coherent_state("m", c(1.5, 0.0), &policy).unwrap();
        let x = (-2.25f64).exp();
        assert_relative_eq!(
            even.inner(&coh).unwrap().re,
            ((1.0 + x * x) / 2.0).sqrt(),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            odd.inner(&coh).unwrap().re,
            ((1.0 - x * x) / 2.0).sqrt(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn nze_state_detection_basis_is_orthonormal() {
        // {|0⟩, |NZE,√2α⟩, |ODD,√2α⟩} at |α|² = 4 → Gram matrix = identity.
        let amp = c(8.0f64.sqrt(), 0.0);
        let policy = TruncationPolicy::default_for(8.0).unwrap();
        let nze = nze_state("m", amp, &policy).unwrap();
        let odd = cat_state("m", amp, Parity::Odd, &policy).unwrap();
        let vac = MultiModeFockState::vacuum("m", policy.dim()).unwrap();

        let states = [&vac, &nze, &odd];
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let g = a.inner(b).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g.re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-12);
            }
        }

        // ⟨NZE,α|α⟩ = (1−x)/√2 with x = e^{−|α|²}: vacuum-free even overlap.
        let coh = coherent_state("m", amp, &policy).unwrap();
        let x = (-8.0f64).exp();
        assert_relative_eq!(
            nze.inner(&coh).unwrap().re,
            (1.0 - x) / 2.0f64.sqrt(),
            max_relative = 1e-10
        );

        assert!(matches!(
            nze_state("m", c(0.0, 0.0), &policy),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn tensor_basics() {
        let v0 = MultiModeFockState::vacuum("0", 4).unwrap();
        let v1 = MultiModeFockState::vacuum("1", 4).unwrap();
        let vv = v0.tensor(&v1).unwrap();
        assert_eq!(vv.dims(), vec![4, 4]);
        assert_relative_eq!(vv.norm_sqr(), 1.0, epsilon = 1e-15);
        assert_eq!(vv.amps()[[0, 0]], c(1.0, 0.0));

        // Norm is multiplicative on arbitrary states.
        let mut a = pseudo_random_state("a", 6, 7);
        a.scale(c(0.7, 0.1));
        let b = pseudo_random_state("b", 5, 11);
        let ab = a.tensor(&b).unwrap();
        assert_relative_eq!(ab.norm_sqr(), a.norm_sqr() * b.norm_sqr(), max_relative = 1e-12);

        // Coherent ⊗ coherent = two-mode coherent, elementwise.
        let policy = TruncationPolicy::default_for(2.0).unwrap();
        let ca = coherent_state("a", c(1.1, 0.2), &policy).unwrap();
        let cb = coherent_state("b", c(-0.4, 0.8), &policy).unwrap();
        let prod = ca.tensor(&cb).unwrap();
        for (pa, &va) in ca.amps().iter().enumerate() {
            for (pb, &vb) in cb.amps().iter().enumerate() {
                let got = prod.amps()[[pa, pb]];
                assert_abs_diff_eq!((got - va * vb).norm(), 0.0, epsilon = 1e-12);
            }
        }

        // Label clash is an error.
        assert!(matches!(
            v0.tensor(&MultiModeFockState::vacuum("0", 4).unwrap()),
            Err(Error::DuplicateMode(_))
        ));
    }

    #[test]
    fn beamsplitter_coherent_label_rule() {
        // |α, α⟩ → |√2 α, 0⟩.
        let al = c(1.2, -0.4);
        let policy = TruncationPolicy::new(2.0 * al.norm_sqr(), 1e-12).unwrap();
        let a = coherent_state("a", al, &policy).unwrap();
        let b = coherent_state("b", al, &policy).unwrap();
        let mixed = beamsplitter(&a.tensor(&b).unwrap(), "a", "b").unwrap();
        let target = coherent_state("a", al * 2.0f64.sqrt(), &policy)
            .unwrap()
            .tensor(&MultiModeFockState::vacuum("b", policy.dim()).unwrap())
            .unwrap();
        assert!(fidelity(&mixed, &target).unwrap() >= 1.0 - 1e-10);

        // General pair, including the inner-product phase (not just fidelity):
        // the label map carries no extra phase, so ⟨target|mixed⟩ = 1.
        let be = c(-0.3, 0.5);
        let s = coherent_state("a", al, &policy)
            .unwrap()
            .tensor(&coherent_state("b", be, &policy).unwrap())
            .unwrap();
        let mixed = beamsplitter(&s, "a", "b").unwrap();
        let r = 2.0f64.sqrt();
        let target = coherent_state("a", (al + be) / r, &policy)
            .unwrap()
            .tensor(&coherent_state("b", (al - be) / r, &policy).unwrap())
            .unwrap();
        let ov = target.inner(&mixed).unwrap();
        assert_abs_diff_eq!(ov.re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn beamsplitter_is_unitary_and_conserves_photon_number() {
        let a = pseudo_random_state("a", 18, 3);
        let b = pseudo_random_state("b", 18, 5);
        let s = a.tensor(&b).unwrap();
        let mixed = beamsplitter(&s, "a", "b").unwrap();
        assert_relative_eq!(mixed.norm_sqr(), s.norm_sqr(), epsilon = 1e-12);

        let n_before = s.mean_photon("a").unwrap() + s.mean_photon("b").unwrap();
        let n_after = mixed.mean_photon("a").unwrap() + mixed.mean_photon("b").unwrap();
        assert_abs_diff_eq!(n_before, n_after, epsilon = 1e-10);

        // Two-mode vacuum is invariant.
        let vv = MultiModeFockState::vacuum("a", 6)
            .unwrap()
            .tensor(&MultiModeFockState::vacuum("b", 6).unwrap())
            .unwrap();
        let out = beamsplitter(&vv, "a", "b").unwrap();
        assert!(fidelity(&out, &vv).unwrap() >= 1.0 - 1e-12);

        // The square of the splitter is the identity (label map composes to
        // the identity and carries no phase).
        let twice = beamsplitter(&mixed, "a", "b").unwrap();
        let ov = s.inner(&twice).unwrap();
        assert_abs_diff_eq!(ov.re, 1.0, epsilon = 1e-11);
        assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn beamsplitter_rejects_mismatched_dims() {
        let a = MultiModeFockState::vacuum("a", 4).unwrap();
        let b = MultiModeFockState::vacuum("b", 5).unwrap();
        let s = a.tensor(&b).unwrap();
        assert!(matches!(
            beamsplitter(&s, "a", "b"),
            Err(Error::DimensionMismatch(4, 5))
        ));
    }

    #[test]
    fn photon_class_measurement_agrees_with_poisson_weights() {
        let al = c(1.3, 0.7);
        let mu = al.norm_sqr();
        let policy = TruncationPolicy::default_for(mu).unwrap();
        let s = coherent_state("m", al, &policy).unwrap().tensor(
            &MultiModeFockState::vacuum("w", 2).unwrap(),
        ).unwrap();

        let zero = s.project_class("m", PhotonClass::Zero).unwrap();
        assert_relative_eq!(zero.probability, (-mu).exp(), max_relative = 1e-10);

        let total: f64 = PhotonClass::ALL
            .iter()
            .map(|&cl| s.project_class("m", cl).unwrap().probability)
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);

        // Odd cat: all weight in the odd class.
        let odd = cat_state("m", c(1.1, 0.0), Parity::Odd, &policy)
            .unwrap()
            .tensor(&MultiModeFockState::vacuum("w", 2).unwrap())
            .unwrap();
        assert_relative_eq!(
            odd.project_class("m", PhotonClass::Odd).unwrap().probability,
            1.0,
            epsilon = 1e-12
        );
        let o = odd.project_class("m", PhotonClass::Zero).unwrap();
        assert!(o.probability < 1e-14 && o.collapsed.is_none(), "zero-probability marker");
    }

    #[test]
    fn class_completeness_on_pseudo_random_states() {
        for seed in 0..6u64 {
            let s = pseudo_random_state("m", 17, seed)
                .tensor(&pseudo_random_state("w", 5, seed + 100))
                .unwrap();
            let total: f64 = PhotonClass::ALL
                .iter()
                .map(|&cl| s.project_class("m", cl).unwrap().probability)
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);

            // Collapsed states from distinct classes are orthogonal.
            let parts: Vec<_> = PhotonClass::ALL
                .iter()
                .filter_map(|&cl| s.project_class("m", cl).unwrap().collapsed)
                .collect();
            for i in 0..parts.len() {
                for j in (i + 1)..parts.len() {
                    assert_abs_diff_eq!(
                        parts[i].inner(&parts[j]).unwrap().norm(),
                        0.0,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn fidelity_reference_values() {
        let policy = TruncationPolicy::default_for(3.0).unwrap();
        let s = pseudo_random_state("m", 9, 42);
        assert_relative_eq!(fidelity(&s, &s).unwrap(), 1.0, epsilon = 1e-12);

        let ket0 = MultiModeFockState::vacuum("m", 4).unwrap();
        let ket1 = MultiModeFockState::from_amplitudes(
            "m",
            vec![ZERO, c(1.0, 0.0), ZERO, ZERO],
        )
        .unwrap();
        assert_abs_diff_eq!(fidelity(&ket0, &ket1).unwrap(), 0.0, epsilon = 1e-15);

        // fidelity(|α⟩, |−α⟩) = e^{−4|α|²}.
        let al = c(1.1, 0.3);
        let a = coherent_state("m", al, &policy).unwrap();
        let b = coherent_state("m", -al, &policy).unwrap();
        assert_relative_eq!(
            fidelity(&a, &b).unwrap(),
            (-4.0 * al.norm_sqr()).exp(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn phase_shift_pi_flips_coherent_amplitude() {
        let policy = TruncationPolicy::default_for(2.0).unwrap();
        let al = c(0.9, -0.5);
        let s = coherent_state("m", al, &policy).unwrap();
        let flipped = s.phase_shift("m", std::f64::consts::PI).unwrap();
        let target = coherent_state("m", -al, &policy).unwrap();
        assert!(fidelity(&flipped, &target).unwrap() >= 1.0 - 1e-12);

        // Applying the π shift twice restores the state exactly (involution).
        let back = flipped.phase_shift("m", std::f64::consts::PI).unwrap();
        let ov = s.inner(&back).unwrap();
        assert_abs_diff_eq!((ov - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn level_projection_removes_the_mode() {
        let policy = TruncationPolicy::default_for(1.0).unwrap();
        let a = coherent_state("a", c(0.8, 0.0), &policy).unwrap();
        let b = pseudo_random_state("b", 7, 9);
        let s = a.tensor(&b).unwrap();
        let out = s.project_level("a", 0).unwrap();
        assert_relative_eq!(out.probability, (-0.64f64).exp(), max_relative = 1e-10);
        let rem = out.remaining.unwrap();
        assert_eq!(rem.labels(), ["b".to_string()]);
        assert!(fidelity(&rem, &b).unwrap() >= 1.0 - 1e-12);

        let sum: f64 = (0..s.dim_of("a").unwrap())
            .map(|n| s.project_level("a", n).unwrap().probability)
            .sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cutoff_consistency_across_tail_bounds() {
        // Coherent states built at tails 1e-10 and 1e-14 agree elementwise.
        let al = c(1.7, 0.6);
        let loose = TruncationPolicy::new(al.norm_sqr(), 1e-10).unwrap();
        let tight = TruncationPolicy::new(al.norm_sqr(), 1e-14).unwrap();
        let a = coherent_state("m", al, &loose).unwrap();
        let b = coherent_state("m", al, &tight).unwrap();
        for n in 0..loose.dim().min(tight.dim()) {
            let da = a.amps()[[n]];
            let db = b.amps()[[n]];
            assert!((da - db).norm() < 1e-9, "level {n} drifts across cutoffs");
        }
    }

    #[test]
    fn cutoff_too_small_is_reported() {
        let policy = TruncationPolicy::default_for(0.5).unwrap();
        let err = coherent_state("m", c(6.0, 0.0), &policy);
        assert!(matches!(err, Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn atom_state_basics() {
        let g = AtomState::ground().to_mode("atom");
        assert_eq!(g.dims(), vec![2]);
        assert_eq!(g.amps()[[0]], c(1.0, 0.0));
        let u = AtomState::excited().to_mode("atom");
        assert_eq!(u.amps()[[1]], c(1.0, 0.0));
        assert!(AtomState::new(c(0.6, 0.0), c(0.8, 0.0)).is_ok());
        assert!(AtomState::new(c(0.6, 0.0), c(0.9, 0.0)).is_err());
    }

    #[test]
    fn swap_modes_exchanges_contents() {
        let ab = pseudo_random_state("a", 5, 1)
            .tensor(&pseudo_random_state("b", 5, 2))
            .unwrap();
        let swapped = ab.swap_modes("a", "b").unwrap();
        // Reference: seed-2 content on wire "a", seed-1 content on wire "b".
        let reference = pseudo_random_state("a", 5, 2)
            .tensor(&pseudo_random_state("b", 5, 1))
            .unwrap();
        let ov = swapped.inner(&reference).unwrap();
        assert_abs_diff_eq!((ov - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }
}
