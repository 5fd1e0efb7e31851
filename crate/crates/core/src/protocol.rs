//! The optical half of the protocol: the information state, the
//! unequal-amplitude entangled channel, the sender's beam-splitter/photon-class
//! measurement, and the receiver's corrective phase shift plus cat-state
//! remixing. Everything here runs in the exact coherent-superposition algebra;
//! the Fock route is used only by tests and by the cavity stage downstream.
//!
//! Mode labels through the pipeline:
//! "0" information, "1"/"2" channel (the "1" arm carries amplitude α and is
//! mixed with the information mode; "2" carries α/√2 and stays with the
//! receiver). After the first splitter the detector ports are renamed
//! "3" (sum port) and "4" (difference port). The receiver mode is renamed
//! "5" for the corrective phase, mixed with an ancilla cat "6", and the
//! outputs are renamed "7" (kept) and "8" (cavity-bound).

use num_complex::Complex64;

use crate::coherent::{
    cat_superposition, coherent_overlap, vacuum_superposition, CoherentSuperposition,
    nze_superposition,
};
use crate::error::{Error, Result};
use crate::fock::{MultiModeFockState, Parity, PhotonClass, TruncationPolicy, C64};

const ONE: C64 = Complex64::new(1.0, 0.0);

/// Mode labels used by the staged pipeline.
pub const MODE_INFO: &str = "0";
pub const MODE_CH_SENDER: &str = "1";
pub const MODE_CH_RECEIVER: &str = "2";
pub const MODE_DET_SUM: &str = "3";
pub const MODE_DET_DIFF: &str = "4";
pub const MODE_RECEIVER_CPS: &str = "5";
pub const MODE_ANCILLA: &str = "6";
pub const MODE_OUT_KEEP: &str = "7";
pub const MODE_OUT_CAVITY: &str = "8";

/// The qubit encoded on cat states: A₊|even cat⟩ + A₋|odd cat⟩ with
/// A₊ = e^{iφ} sin(θ/2), A₋ = cos(θ/2), stored in the coherent basis as
/// ε₊|α⟩ + ε₋|−α⟩ (normalized including the ⟨α|−α⟩ = x² cross term,
/// x = e^{−|α|²}).
#[derive(Debug, Clone, Copy)]
pub struct InformationSpec {
    alpha: C64,
    eps_plus: C64,
    eps_minus: C64,
    x: f64,
    bloch: Option<(f64, f64)>,
}

impl InformationSpec {
    /// Build from Bloch angles θ (cat-basis polar) and φ (relative phase).
    pub fn from_bloch(alpha: C64, theta: f64, phi: f64) -> Result<Self> {
        if !alpha.is_finite() || !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidInput(
                "information state needs finite α, θ, φ".into(),
            ));
        }
        let a = alpha.norm_sqr();
        if a < 1e-12 {
            return Err(Error::Degenerate(
                "information state needs α ≠ 0 (the odd cat vanishes at α = 0)".into(),
            ));
        }
        let x = (-a).exp();
        let x2 = x * x;
        let a_plus = C64::from_polar(1.0, phi) * (theta / 2.0).sin();
        let a_minus = C64::new((theta / 2.0).cos(), 0.0);
        let even_coeff = a_plus / (2.0 * (1.0 + x2)).sqrt();
        let odd_coeff = a_minus / (2.0 * (1.0 - x2)).sqrt();
        Ok(Self {
            alpha,
            eps_plus: even_coeff + odd_coeff,
            eps_minus: even_coeff - odd_coeff,
            x,
            bloch: Some((theta, phi)),
        })
    }

    /// Build from coherent-basis coefficients; the pair is renormalized so
    /// that |ε₊|² + |ε₋|² + 2x² Re(ε₊* ε₋) = 1.
    pub fn from_eps(alpha: C64, eps_plus: C64, eps_minus: C64) -> Result<Self> {
        if !alpha.is_finite() || !eps_plus.is_finite() || !eps_minus.is_finite() {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        let a = alpha.norm_sqr();
        if a < 1e-12 {
            return Err(Error::Degenerate("information state needs α ≠ 0".into()));
        }
        let x = (-a).exp();
        let n2 = eps_plus.norm_sqr()
            + eps_minus.norm_sqr()
            + 2.0 * x * x * (eps_plus.conj() * eps_minus).re;
        if n2 < 1e-28 {
            return Err(Error::Degenerate(
                "coherent-basis coefficients give a zero-norm state".into(),
            ));
        }
        let s = 1.0 / n2.sqrt();
        Ok(Self {
            alpha,
            eps_plus: eps_plus * s,
            eps_minus: eps_minus * s,
            x,
            bloch: None,
        })
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    /// Mean-photon-number scale |α|².
    pub fn alpha_sq(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// x = e^{−|α|²}, the recurring overlap scale (⟨α|−α⟩ = x²).
    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn eps_plus(&self) -> C64 {
        self.eps_plus
    }

    pub fn eps_minus(&self) -> C64 {
        self.eps_minus
    }

    /// Bloch angles (θ, φ) when the state was built from them.
    pub fn bloch(&self) -> Option<(f64, f64)> {
        self.bloch
    }

    /// u = ε₊ + ε₋ (even-sector combination).
    pub fn u(&self) -> C64 {
        self.eps_plus + self.eps_minus
    }

    /// v = ε₊ − ε₋ (odd-sector combination).
    pub fn v(&self) -> C64 {
        self.eps_plus - self.eps_minus
    }

    /// Amplitude on the normalized even cat: A₊ = √((1+x²)/2)(ε₊+ε₋).
    pub fn a_plus(&self) -> C64 {
        C64::new(((1.0 + self.x * self.x) / 2.0).sqrt(), 0.0) * self.u()
    }

    /// Amplitude on the normalized odd cat: A₋ = √((1−x²)/2)(ε₊−ε₋).
    pub fn a_minus(&self) -> C64 {
        C64::new(((1.0 - self.x * self.x) / 2.0).sqrt(), 0.0) * self.v()
    }

    /// Canonical Bloch angles recovered from the cat-basis amplitudes:
    /// θ ∈ [0, π] from the weights, φ from the relative phase (both defined
    /// up to an unobservable global phase; φ = 0 when A₊ vanishes).
    pub fn bloch_angles(&self) -> (f64, f64) {
        let ap = self.a_plus();
        let am = self.a_minus();
        let theta = 2.0 * ap.norm().atan2(am.norm());
        let phi = if ap.norm() < 1e-15 {
            0.0
        } else {
            (ap.arg() - am.arg()).rem_euclid(2.0 * std::f64::consts::PI)
        };
        (theta, phi)
    }

    /// Vacuum weight P₀ = |⟨0|I⟩|² = x·|ε₊+ε₋|².
    pub fn p_i0(&self) -> f64 {
        self.x * self.u().norm_sqr()
    }

    /// Number-basis coefficients ⟨n|I⟩ = √x (ε₊ + (−1)ⁿ ε₋) αⁿ/√(n!)
    /// for n = 0..nmax.
    pub fn fock_coefficients(&self, nmax: usize) -> Vec<C64> {
        let sqrt_x = C64::new(self.x.sqrt(), 0.0);
        let mut out = Vec::with_capacity(nmax);
        let mut pow = ONE; // αⁿ/√(n!)
        for n in 0..nmax {
            if n > 0 {
                pow *= self.alpha / C64::new((n as f64).sqrt(), 0.0);
            }
            let sign = if n % 2 == 0 { ONE } else { -ONE };
            out.push(sqrt_x * (self.eps_plus + sign * self.eps_minus) * pow);
        }
        out
    }

    /// The state as an exact two-term superposition ε₊|α⟩ + ε₋|−α⟩.
    pub fn to_superposition(&self, label: &str) -> CoherentSuperposition {
        CoherentSuperposition::single_mode(
            label,
            &[(self.eps_plus, self.alpha), (self.eps_minus, -self.alpha)],
        )
    }

    /// Truncated number-basis representation, renormalized.
    pub fn to_fock(&self, label: &str, policy: &TruncationPolicy) -> Result<MultiModeFockState> {
        self.to_superposition(label).to_fock(policy)?.normalized()
    }
}

/// Prenormalization of the channel: ‖ |α,α/√2⟩ − |−α,−α/√2⟩ ‖² = 2(1−x³).
pub fn channel_prenorm_sqr(x: f64) -> f64 {
    2.0 * (1.0 - x.powi(3))
}

/// The entangled channel N(|α⟩_a |α/√2⟩_b − |−α⟩_a |−α/√2⟩_b),
/// N = 1/√(2(1−x³)); the first mode carries the full amplitude α.
pub fn build_channel(alpha: C64, mode_a: &str, mode_b: &str) -> Result<CoherentSuperposition> {
    let a = alpha.norm_sqr();
    if !alpha.is_finite() || a < 1e-12 {
        return Err(Error::Degenerate("channel needs α ≠ 0".into()));
    }
    let beta = alpha / C64::new(std::f64::consts::SQRT_2, 0.0);
    let n = C64::new(1.0 / channel_prenorm_sqr((-a).exp()).sqrt(), 0.0);
    CoherentSuperposition::new(
        vec![mode_a.to_string(), mode_b.to_string()],
        vec![
            crate::coherent::Term {
                coeff: n,
                amps: vec![alpha, beta],
            },
            crate::coherent::Term {
                coeff: -n,
                amps: vec![-alpha, -beta],
            },
        ],
    )
}

/// The five heralded detector outcomes with nonzero probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// Both detectors silent.
    I,
    /// Nonzero-even count on the sum port, silence on the difference port.
    II,
    /// Silence on the sum port, nonzero-even count on the difference port.
    III,
    /// Odd count on the sum port, silence on the difference port.
    IV,
    /// Silence on the sum port, odd count on the difference port.
    V,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 5] = [
        CaseLabel::I,
        CaseLabel::II,
        CaseLabel::III,
        CaseLabel::IV,
        CaseLabel::V,
    ];

    /// (sum-port class, difference-port class).
    pub fn detector_classes(self) -> (PhotonClass, PhotonClass) {
        match self {
            CaseLabel::I => (PhotonClass::Zero, PhotonClass::Zero),
            CaseLabel::II => (PhotonClass::Nze, PhotonClass::Zero),
            CaseLabel::III => (PhotonClass::Zero, PhotonClass::Nze),
            CaseLabel::IV => (PhotonClass::Odd, PhotonClass::Zero),
            CaseLabel::V => (PhotonClass::Zero, PhotonClass::Odd),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::I => "i",
            CaseLabel::II => "ii",
            CaseLabel::III => "iii",
            CaseLabel::IV => "iv",
            CaseLabel::V => "v",
        }
    }
}

/// Corrective phase the receiver applies before remixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectivePhase {
    Identity,
    Pi,
}

/// Which two-output family the remix produces.
/// `Minus` (from nonzero-even heralds, odd-cat ancilla) yields
/// (|I,0⟩ − |0,I⟩)/√(2(1−P₀)); `Plus` (odd heralds, even-cat ancilla)
/// yields (|I,0⟩ + |0,I⟩)/√(2(1+P₀)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilySign {
    Minus,
    Plus,
}

impl FamilySign {
    pub fn sign(self) -> f64 {
        match self {
            FamilySign::Minus => -1.0,
            FamilySign::Plus => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilySign::Minus => "minus",
            FamilySign::Plus => "plus",
        }
    }
}

/// Fixed recovery actions per heralded case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryPlan {
    pub phase: CorrectivePhase,
    /// Parity of the ancilla cat mixed in at the second splitter.
    pub mixing: Parity,
}

impl RecoveryPlan {
    pub fn for_case(case: CaseLabel) -> Option<Self> {
        match case {
            CaseLabel::I => None,
            CaseLabel::II => Some(Self {
                phase: CorrectivePhase::Identity,
                mixing: Parity::Odd,
            }),
            CaseLabel::III => Some(Self {
                phase: CorrectivePhase::Pi,
                mixing: Parity::Odd,
            }),
            CaseLabel::IV => Some(Self {
                phase: CorrectivePhase::Identity,
                mixing: Parity::Even,
            }),
            CaseLabel::V => Some(Self {
                phase: CorrectivePhase::Pi,
                mixing: Parity::Even,
            }),
        }
    }

    pub fn family(&self) -> FamilySign {
        match self.mixing {
            Parity::Odd => FamilySign::Minus,
            Parity::Even => FamilySign::Plus,
        }
    }
}

/// One heralded measurement outcome at the sender's station.
#[derive(Debug, Clone)]
pub struct BranchRecord {
    pub case: CaseLabel,
    pub probability: f64,
    /// Receiver-mode ("3") state conditioned on the herald, normalized,
    /// including its physical global phase.
    pub receiver_state: CoherentSuperposition,
    pub recovery: Option<RecoveryPlan>,
}

/// All five heralded branches plus the total weight of the four
/// detector pairs that cannot fire (both detectors counting).
#[derive(Debug, Clone)]
pub struct SenderOutcome {
    pub branches: Vec<BranchRecord>,
    pub dark_weight: f64,
}

impl SenderOutcome {
    pub fn branch(&self, case: CaseLabel) -> &BranchRecord {
        self.branches
            .iter()
            .find(|b| b.case == case)
            .expect("all five cases present")
    }
}

/// Reference detector states used to factor the heralded joint state:
/// the sum/difference ports collapse onto vacuum, the nonzero-even state at
/// √2α, or the odd cat at √2α.
fn detector_reference(case: CaseLabel, alpha: C64) -> Result<CoherentSuperposition> {
    let root2 = C64::new(std::f64::consts::SQRT_2, 0.0);
    let amp = alpha * root2;
    let port = |label: &str, class: PhotonClass| -> Result<CoherentSuperposition> {
        match class {
            PhotonClass::Zero => Ok(vacuum_superposition(label)),
            PhotonClass::Nze => nze_superposition(label, amp),
            PhotonClass::Odd => cat_superposition(label, amp, Parity::Odd),
        }
    };
    let (sum_class, diff_class) = case.detector_classes();
    port(MODE_DET_SUM, sum_class)?.tensor(&port(MODE_DET_DIFF, diff_class)?)
}

/// The direction each heralded receiver state points in, up to global phase:
/// the continuous limit used when a herald's weight vanishes exactly.
fn heralded_direction(case: CaseLabel, info: &InformationSpec) -> Result<CoherentSuperposition> {
    let beta = info.alpha() / C64::new(std::f64::consts::SQRT_2, 0.0);
    let (ep, em) = (info.eps_plus(), info.eps_minus());
    let one = C64::new(1.0, 0.0);
    let terms: [(C64, C64); 2] = match case {
        CaseLabel::I => [(one, beta), (-one, -beta)],
        CaseLabel::II => [(ep, beta), (-em, -beta)],
        CaseLabel::III => [(em, beta), (-ep, -beta)],
        CaseLabel::IV => [(ep, beta), (em, -beta)],
        CaseLabel::V => [(em, beta), (ep, -beta)],
    };
    CoherentSuperposition::single_mode(MODE_CH_RECEIVER, &terms).normalized()
}

/// Mix the information mode with the sender's channel arm, classify both
/// detector ports into {zero, nonzero-even, odd}, and factor out the detector
/// states. The five heralded cases exhaust the probability; the four
/// "both detectors fire" pairs are returned as `dark_weight` (≈ 0).
pub fn sender_stage(info: &InformationSpec) -> Result<SenderOutcome> {
    let channel = build_channel(info.alpha(), MODE_CH_SENDER, MODE_CH_RECEIVER)?;
    sender_stage_with_channel(info, &channel)
}

/// As [`sender_stage`], but with an explicitly supplied channel, which must
/// be a two-term ECS on modes "1","2" whose sender arm matches the
/// information amplitude (the first splitter only cancels exactly then).
pub fn sender_stage_with_channel(
    info: &InformationSpec,
    channel: &CoherentSuperposition,
) -> Result<SenderOutcome> {
    let alpha = info.alpha();
    if channel.labels() != [MODE_CH_SENDER.to_string(), MODE_CH_RECEIVER.to_string()] {
        return Err(Error::InvalidInput(format!(
            "channel must live on modes {MODE_CH_SENDER},{MODE_CH_RECEIVER}; got {:?}",
            channel.labels()
        )));
    }
    let matches_alpha = channel
        .terms()
        .iter()
        .all(|t| (t.amps[0] - alpha).norm() < 1e-12 || (t.amps[0] + alpha).norm() < 1e-12);
    if channel.terms().len() != 2 || !matches_alpha {
        return Err(Error::InvalidInput(
            "channel's sender arm must carry ±α matching the information state".into(),
        ));
    }
    let joint = info.to_superposition(MODE_INFO).tensor(channel)?;
    let mut mixed = joint.apply_beamsplitter(MODE_INFO, MODE_CH_SENDER)?;
    mixed.rename_mode(MODE_INFO, MODE_DET_SUM)?;
    mixed.rename_mode(MODE_CH_SENDER, MODE_DET_DIFF)?;

    let mut branches = Vec::with_capacity(5);
    let mut heralded_total = 0.0;
    for case in CaseLabel::ALL {
        let (sum_class, diff_class) = case.detector_classes();
        let projected = mixed
            .project_class(MODE_DET_SUM, sum_class)?
            .project_class(MODE_DET_DIFF, diff_class)?;
        let probability = projected.norm_sqr();
        heralded_total += probability;

        let reference = detector_reference(case, alpha)?;
        let receiver_raw = projected.partial_inner(&reference)?.merge_exact();
        // The herald must factor exactly: ⟨ref|ψ⟩ carries all of ψ's weight.
        let kept = receiver_raw.norm_sqr();
        if (kept - probability).abs() > 1e-12 * probability.max(1.0) {
            return Err(Error::Invariant(format!(
                "heralded state does not factor against its detector reference \
                 (case {}, kept {kept:.3e} of {probability:.3e})",
                case.name()
            )));
        }
        // A herald can carry exactly zero weight (the both-silent case when
        // ε₊ + ε₋ = 0). The conditional state direction has a continuous
        // limit there, so fall back to it rather than normalizing nothing.
        let receiver_state = match receiver_raw.normalized() {
            Ok(state) => state,
            Err(_) => heralded_direction(case, info)?,
        };
        branches.push(BranchRecord {
            case,
            probability,
            receiver_state,
            recovery: RecoveryPlan::for_case(case),
        });
    }

    // Everything not heralded sits in the four impossible detector pairs.
    let dark_weight = (1.0 - heralded_total).max(0.0);
    Ok(SenderOutcome {
        branches,
        dark_weight,
    })
}

/// Fidelity of the unrecoverable both-silent branch against the original
/// information state: |⟨I(α) | receiver⟩|².
pub fn case_i_fidelity(info: &InformationSpec, branch: &BranchRecord) -> Result<f64> {
    if branch.case != CaseLabel::I {
        return Err(Error::InvalidInput(
            "case-i fidelity is defined for the both-silent branch".into(),
        ));
    }
    let mut target = info.to_superposition(MODE_CH_RECEIVER);
    target.rename_mode(MODE_CH_RECEIVER, branch.receiver_state.labels()[0].as_str())?;
    Ok(target.overlap(&branch.receiver_state)?.norm_sqr())
}

/// The receiver's output after the corrective phase and the cat remix:
/// a two-mode state on "7" (kept) and "8" (sent into the cavity chain).
#[derive(Debug, Clone)]
pub struct ReceiverOutcome {
    pub family: FamilySign,
    pub state: CoherentSuperposition,
}

/// Apply the heralded recovery: optional π phase on the receiver mode, then
/// mix with the prescribed cat ancilla at a 50:50 splitter. The output is
/// (|I,0⟩ ∓ |0,I⟩)/√(2(1∓P₀)) on modes "7","8" with |I⟩ back at amplitude α.
pub fn receiver_stage(info: &InformationSpec, branch: &BranchRecord) -> Result<ReceiverOutcome> {
    let plan = branch.recovery.ok_or_else(|| {
        Error::InvalidInput("the both-silent branch has no recovery action".into())
    })?;
    let beta = info.alpha() / C64::new(std::f64::consts::SQRT_2, 0.0);
    let mut state = branch.receiver_state.clone();
    state.rename_mode(MODE_CH_RECEIVER, MODE_RECEIVER_CPS)?;
    if plan.phase == CorrectivePhase::Pi {
        state = state.apply_phase(MODE_RECEIVER_CPS, std::f64::consts::PI)?;
    }
    let ancilla = cat_superposition(MODE_ANCILLA, beta, plan.mixing)?;
    let mut out = state
        .tensor(&ancilla)?
        .apply_beamsplitter(MODE_RECEIVER_CPS, MODE_ANCILLA)?;
    out.rename_mode(MODE_RECEIVER_CPS, MODE_OUT_KEEP)?;
    out.rename_mode(MODE_ANCILLA, MODE_OUT_CAVITY)?;
    Ok(ReceiverOutcome {
        family: plan.family(),
        state: out.merge_exact(),
    })
}

/// The analytic form of the remixed output,
/// (|I⟩₇|0⟩₈ ∓ |0⟩₇|I⟩₈)/√(2(1∓P₀)), for cross-checks.
pub fn split_information_reference(
    info: &InformationSpec,
    family: FamilySign,
) -> Result<CoherentSuperposition> {
    let i7 = info
        .to_superposition(MODE_OUT_KEEP)
        .tensor(&vacuum_superposition(MODE_OUT_CAVITY))?;
    let i8 = vacuum_superposition(MODE_OUT_KEEP).tensor(&info.to_superposition(MODE_OUT_CAVITY))?;
    let s = C64::new(family.sign(), 0.0);
    i7.add(&i8.scaled(s))?.normalized()
}

/// |⟨a|b⟩|² between coherent labels — convenience for closed-form tests.
pub fn label_overlap_sqr(a: C64, b: C64) -> f64 {
    coherent_overlap(a, b).norm_sqr()
}
