//! End-to-end evaluation of the protocol at a single parameter point:
//! the exact simulation track (coherent algebra for the heralding, truncated
//! Fock dynamics for the cavity chain), the closed-form track, and the
//! deviations between the two.

use crate::cavity::{run_recovery, JcParams, RecoveryOutcome, Situation};
use crate::coherent::{ecs_concurrence, EcsPair};
use crate::error::Result;
use crate::fock::{TruncationPolicy, C64, DEFAULT_TAIL_BOUND, PROBABILITY_FLOOR};
use crate::formulas::{
    approx_sums, avg_fidelity_closed_form, avg_fidelity_scalar, case_i_fidelity_closed_form,
    case_i_probability, concurrence_closed_form, exact_sums, nze_branch_probability,
    odd_branch_probability, ApproxSums, AvgFidelityTerms, ClosedFormAverages,
};
use crate::protocol::{
    build_channel, case_i_fidelity, receiver_stage, sender_stage_with_channel,
    split_information_reference, CaseLabel, FamilySign, InformationSpec, SenderOutcome,
    MODE_CH_RECEIVER, MODE_CH_SENDER,
};

/// One parameter point of the protocol: the payload's Bloch angles, the
/// channel amplitude (as a mean photon number), and the numerical tail bound.
#[derive(Debug, Clone, Copy)]
pub struct EvalParams {
    pub alpha_sq: f64,
    pub theta: f64,
    pub phi: f64,
    pub tail_bound: f64,
}

impl EvalParams {
    pub fn new(alpha_sq: f64, theta: f64, phi: f64) -> Self {
        Self {
            alpha_sq,
            theta,
            phi,
            tail_bound: DEFAULT_TAIL_BOUND,
        }
    }

    pub fn with_tail(mut self, tail_bound: f64) -> Self {
        self.tail_bound = tail_bound;
        self
    }

    /// The payload this point describes (real positive amplitude).
    pub fn information(&self) -> Result<InformationSpec> {
        InformationSpec::from_bloch(
            C64::new(self.alpha_sq.sqrt(), 0.0),
            self.theta,
            self.phi,
        )
    }

    /// Truncation policy covering every amplitude the recovery chain sees.
    pub fn policy(&self) -> Result<TruncationPolicy> {
        TruncationPolicy::new(self.alpha_sq, self.tail_bound)
    }
}

/// Simulated recovery for one branch family, with its herald weight and the
/// match against the analytic post-remix reference state.
#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub family: FamilySign,
    /// Herald probability of each of the two branches in this family.
    pub branch_probability: f64,
    /// Terminal situations with probabilities conditional on the branch.
    pub recovery: RecoveryOutcome,
    /// |1 − |⟨reference|remixed⟩|²| for the analytic split-payload state.
    pub remix_reference_dev: f64,
}

impl FamilyReport {
    /// Σ p·f over the terminal situations (the family's conditional payoff).
    pub fn conditional_fidelity(&self) -> f64 {
        self.recovery
            .situations
            .iter()
            .map(|r| r.probability * r.fidelity)
            .sum()
    }

    /// Conditional probability/fidelity of one situation, with the
    /// photon-counted situations aggregated over n.
    pub fn aggregate(&self, situation: SituationKind) -> (f64, f64) {
        let mut p = 0.0;
        let mut pf = 0.0;
        for r in &self.recovery.situations {
            if SituationKind::of(r.situation) == situation {
                p += r.probability;
                pf += r.probability * r.fidelity;
            }
        }
        if p > PROBABILITY_FLOOR {
            (p, pf / p)
        } else {
            (p, 0.0)
        }
    }
}

/// The four situation families, with the photon-counted outcomes collapsed
/// into a single kind for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SituationKind {
    A,
    B,
    CLower,
    CUpper,
}

impl SituationKind {
    pub const ALL: [SituationKind; 4] = [
        SituationKind::A,
        SituationKind::B,
        SituationKind::CLower,
        SituationKind::CUpper,
    ];

    fn of(s: Situation) -> Self {
        match s {
            Situation::A => SituationKind::A,
            Situation::B { .. } => SituationKind::B,
            Situation::CLower => SituationKind::CLower,
            Situation::CUpper => SituationKind::CUpper,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SituationKind::A => "A",
            SituationKind::B => "B",
            SituationKind::CLower => "C_lower",
            SituationKind::CUpper => "C_upper",
        }
    }
}

/// Everything computed at one parameter point.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub params: EvalParams,
    pub info: InformationSpec,
    pub x: f64,
    pub p_i0: f64,

    /// Channel concurrence from the simulated two-mode state and from the
    /// closed form.
    pub concurrence_sim: f64,
    pub concurrence_closed: f64,

    /// Simulated herald probabilities in case order (both-silent, the two
    /// nonzero-even heralds, the two odd heralds).
    pub branch_probs_sim: [f64; 5],
    /// Closed-form counterparts in the same order.
    pub branch_probs_closed: [f64; 5],
    /// Weight of the detector pairs that cannot fire.
    pub dark_weight: f64,

    pub case_i_fidelity_sim: f64,
    pub case_i_fidelity_closed: f64,

    pub minus: FamilyReport,
    pub plus: FamilyReport,

    pub sums: AvgFidelityTerms,
    /// Average fidelity from the simulation tree (simulated heralds ×
    /// simulated conditional payoffs).
    pub f_avg_sim: f64,
    /// Average fidelity from the closed-form tree.
    pub f_avg_scalar: f64,
    pub closed: ClosedFormAverages,
    pub approx: ApproxSums,

    /// |Σ heralds + dark − 1|.
    pub branch_completeness_dev: f64,
    /// max |simulated − closed| over the five heralds.
    pub branch_formula_dev: f64,
    /// max herald-probability gap between the two branches of a family.
    pub case_degeneracy_dev: f64,
    /// |f_avg_sim − f_avg_scalar|.
    pub f_avg_cross_dev: f64,
}

impl PointEvaluation {
    pub fn family(&self, family: FamilySign) -> &FamilyReport {
        match family {
            FamilySign::Minus => &self.minus,
            FamilySign::Plus => &self.plus,
        }
    }
}

fn evaluate_family(
    info: &InformationSpec,
    sender: &SenderOutcome,
    case: CaseLabel,
    jc: &JcParams,
    policy: &TruncationPolicy,
) -> Result<FamilyReport> {
    let branch = sender.branch(case);
    let receiver = receiver_stage(info, branch)?;
    let reference = split_information_reference(info, receiver.family)?;
    let remix_reference_dev = (1.0 - reference.overlap(&receiver.state)?.norm_sqr()).abs();
    let recovery = run_recovery(&receiver, info, jc, policy)?;
    Ok(FamilyReport {
        family: receiver.family,
        branch_probability: branch.probability,
        recovery,
        remix_reference_dev,
    })
}

/// Run the full protocol at one point: heralding in exact coherent algebra,
/// recovery in truncated Fock space, closed forms alongside.
pub fn evaluate_point(params: &EvalParams) -> Result<PointEvaluation> {
    let info = params.information()?;
    let policy = params.policy()?;
    let jc = JcParams::resonant_half_pi(info.alpha())?;

    let channel = build_channel(info.alpha(), MODE_CH_SENDER, MODE_CH_RECEIVER)?;
    let concurrence_sim = ecs_concurrence(&EcsPair::from_superposition(&channel)?)?;
    let concurrence_closed = concurrence_closed_form(info.x());

    let sender = sender_stage_with_channel(&info, &channel)?;
    let mut branch_probs_sim = [0.0; 5];
    for (slot, case) in branch_probs_sim.iter_mut().zip(CaseLabel::ALL) {
        *slot = sender.branch(case).probability;
    }
    let p_nze = nze_branch_probability(&info);
    let p_odd = odd_branch_probability(&info);
    let branch_probs_closed = [case_i_probability(&info), p_nze, p_nze, p_odd, p_odd];

    let case_i_fidelity_sim = case_i_fidelity(&info, sender.branch(CaseLabel::I))?;
    let case_i_fidelity_closed = case_i_fidelity_closed_form(&info);

    let minus = evaluate_family(&info, &sender, CaseLabel::II, &jc, &policy)?;
    let plus = evaluate_family(&info, &sender, CaseLabel::IV, &jc, &policy)?;

    let sums = exact_sums(&info, &jc);
    let f_avg_sim = branch_probs_sim[0] * case_i_fidelity_sim
        + (branch_probs_sim[1] + branch_probs_sim[2]) * minus.conditional_fidelity()
        + (branch_probs_sim[3] + branch_probs_sim[4]) * plus.conditional_fidelity();
    let f_avg_scalar = avg_fidelity_scalar(&info, &sums);
    let closed = avg_fidelity_closed_form(&info, &sums)?;
    let approx = approx_sums(&info);

    let branch_completeness_dev =
        (branch_probs_sim.iter().sum::<f64>() + sender.dark_weight - 1.0).abs();
    let branch_formula_dev = branch_probs_sim
        .iter()
        .zip(branch_probs_closed)
        .map(|(s, c)| (s - c).abs())
        .fold(0.0, f64::max);
    let case_degeneracy_dev = (branch_probs_sim[1] - branch_probs_sim[2])
        .abs()
        .max((branch_probs_sim[3] - branch_probs_sim[4]).abs());
    let f_avg_cross_dev = (f_avg_sim - f_avg_scalar).abs();

    Ok(PointEvaluation {
        params: *params,
        info,
        x: info.x(),
        p_i0: info.p_i0(),
        concurrence_sim,
        concurrence_closed,
        branch_probs_sim,
        branch_probs_closed,
        dark_weight: sender.dark_weight,
        case_i_fidelity_sim,
        case_i_fidelity_closed,
        minus,
        plus,
        sums,
        f_avg_sim,
        f_avg_scalar,
        closed,
        approx,
        branch_completeness_dev,
        branch_formula_dev,
        case_degeneracy_dev,
        f_avg_cross_dev,
    })
}
