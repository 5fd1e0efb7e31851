//! Two-cavity resonant recovery chain. The cavity-bound output mode is fed
//! into cavity C where a ground-state two-level atom interacts on resonance
//! (Jaynes–Cummings, rotating-wave). Reading the atom out splits the branch
//! into: the kept mode already holding the payload (situation A), the payload
//! lost to a counted photon (situations Bₙ), or a single quantum carried by
//! the atom into a second cavity C′ where an inverted atom re-emits it
//! (situations C with the atom ending lower/upper).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{
    fidelity, reorder_two_front, restore_axis_order, AtomState, MultiModeFockState,
    TruncationPolicy, C64, PROBABILITY_FLOOR,
};
use crate::protocol::{InformationSpec, ReceiverOutcome, MODE_OUT_CAVITY, MODE_OUT_KEEP};

pub const MODE_CAVITY_C: &str = "9";
pub const MODE_CAVITY_CPRIME: &str = "10";
pub const MODE_ATOM_C: &str = "atomC";
pub const MODE_ATOM_CPRIME: &str = "atomC'";

/// Resonant Jaynes–Cummings interaction strength, stored as the product
/// g·t of coupling and interaction time. The n-quantum sector rotates by
/// φₙ = g·t·√n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams {
    gt: f64,
}

impl JcParams {
    pub fn new(gt: f64) -> Result<Self> {
        if !gt.is_finite() || gt <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "Jaynes–Cummings pulse area must be finite and positive, got {gt}"
            )));
        }
        Ok(Self { gt })
    }

    /// The protocol's pulse choice g·t = π/(2|α|), which makes the
    /// mean-photon sector (n = |α|²) rotate by exactly π/2.
    pub fn resonant_half_pi(alpha: C64) -> Result<Self> {
        let mag = alpha.norm();
        if !mag.is_finite() || mag < 1e-9 {
            return Err(Error::InvalidInput(
                "pulse calibration needs α ≠ 0".into(),
            ));
        }
        Self::new(std::f64::consts::FRAC_PI_2 / mag)
    }

    pub fn gt(&self) -> f64 {
        self.gt
    }

    /// Sector rotation angle φₙ = g·t·√n.
    pub fn phase(&self, n: usize) -> f64 {
        self.gt * (n as f64).sqrt()
    }
}

/// Resonant Jaynes–Cummings evolution: in each excitation sector,
/// |n, lower⟩ and |n−1, upper⟩ rotate into each other,
///   |n, l⟩ → cos φₙ |n, l⟩ − i sin φₙ |n−1, u⟩,
///   |n−1, u⟩ → −i sin φₙ |n, l⟩ + cos φₙ |n−1, u⟩.
/// The top pair (dim−1, u) ↔ (dim, l) falls outside the truncation; the
/// evolution refuses to run if that component carries more than `tail_bound`
/// weight, and leaves it untouched otherwise (so the map stays exactly
/// norm-preserving).
pub fn jc_evolve(
    state: &MultiModeFockState,
    field_label: &str,
    atom_label: &str,
    params: &JcParams,
    tail_bound: f64,
) -> Result<MultiModeFockState> {
    let f_ax = state.mode_index(field_label)?;
    let a_ax = state.mode_index(atom_label)?;
    if f_ax == a_ax {
        return Err(Error::InvalidInput(
            "field and atom must be distinct modes".into(),
        ));
    }
    let dims = state.dims();
    let d_field = dims[f_ax];
    if dims[a_ax] != 2 {
        return Err(Error::DimensionMismatch(dims[a_ax], 2));
    }

    let (mut flat, perm, pshape) = reorder_two_front(state.amps(), f_ax, a_ax);
    let rest: usize = flat.len() / (d_field * 2);
    let idx = |n: usize, a: usize, r: usize| (n * 2 + a) * rest + r;

    // The (d−1, upper) component would rotate with the truncated (d, lower).
    let mut leak = 0.0;
    for r in 0..rest {
        leak += flat[idx(d_field - 1, 1, r)].norm_sqr();
    }
    if leak > tail_bound {
        return Err(Error::CutoffLeak {
            mode: field_label.to_string(),
            weight: leak,
            bound: tail_bound,
        });
    }

    for n in 1..d_field {
        let phi = params.phase(n);
        let (c, s) = (phi.cos(), phi.sin());
        let is = Complex64::new(0.0, s);
        for r in 0..rest {
            let i_low = idx(n, 0, r);
            let i_up = idx(n - 1, 1, r);
            let (a, b) = (flat[i_low], flat[i_up]);
            flat[i_low] = c * a - is * b;
            flat[i_up] = -is * a + c * b;
        }
    }

    Ok(MultiModeFockState::from_parts(
        state.labels().to_vec(),
        restore_axis_order(flat, &pshape, &perm),
    ))
}

/// Where a recovery branch can end up after the cavity chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Situation {
    /// First atom stays lower, cavity C empty: the kept mode carries the
    /// payload unmeasured.
    A,
    /// First atom stays lower but cavity C counts n ≥ 1 photons: the payload
    /// collapsed to vacuum.
    B { n: usize },
    /// First atom excited; second atom re-emits and ends lower: C′ holds the
    /// reconstructed payload.
    CLower,
    /// First atom excited; second atom stays upper: C′ holds a shifted copy.
    CUpper,
}

impl Situation {
    pub fn name(&self) -> String {
        match self {
            Situation::A => "A".into(),
            Situation::B { n } => format!("B{n}"),
            Situation::CLower => "C_lower".into(),
            Situation::CUpper => "C_upper".into(),
        }
    }
}

/// One terminal situation: probability conditional on the heralded branch,
/// and fidelity of the surviving mode against the original payload.
#[derive(Debug, Clone, Copy)]
pub struct SituationReport {
    pub situation: Situation,
    pub probability: f64,
    pub fidelity: f64,
}

/// All terminal situations of one recovery branch.
#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    pub situations: Vec<SituationReport>,
    /// Probability that the first atom stays in the lower state.
    pub p_atom_lower: f64,
    /// Probability that the first atom absorbs a quantum.
    pub p_atom_upper: f64,
    /// Sum of all situation probabilities, including entries too small to
    /// report individually; 1 up to truncation error.
    pub completeness: f64,
}

impl RecoveryOutcome {
    pub fn situation(&self, s: Situation) -> Option<&SituationReport> {
        self.situations.iter().find(|r| r.situation == s)
    }

    /// Combined weight of the photon-counted situations Σₙ P(Bₙ).
    pub fn b_total(&self) -> f64 {
        self.situations
            .iter()
            .filter(|r| matches!(r.situation, Situation::B { .. }))
            .map(|r| r.probability)
            .sum()
    }
}

/// Outcome of cavity C: situations A and Bₙ (probabilities conditional on
/// the heralded branch) plus the conditioned field that proceeds to C′ when
/// the atom is found excited.
#[derive(Debug, Clone)]
pub struct CavityCOutcome {
    pub situations: Vec<SituationReport>,
    /// Probability that the atom stays lower.
    pub p_atom_lower: f64,
    /// Probability that the atom absorbs a quantum (the C′ path).
    pub p_atom_upper: f64,
    /// Mode-"9" field conditioned on the excited atom, normalized.
    pub upper_field: Option<MultiModeFockState>,
    /// Probability mass too small to carry an individual report.
    pub skipped_weight: f64,
}

/// First cavity: couple the cavity-bound mode (relabeled "9") to a
/// ground-state atom, measure the atom, and photon-count the cavity when the
/// atom stays lower. n = 0 leaves the kept mode as situation A; n ≥ 1 is
/// situation Bₙ. An excited atom heralds the C′ path; the kept mode is then
/// verified to be vacuum and the cavity field handed onward.
pub fn stage_cavity_c(
    receiver: &ReceiverOutcome,
    info: &InformationSpec,
    params: &JcParams,
    policy: &TruncationPolicy,
) -> Result<CavityCOutcome> {
    let mut fock = receiver.state.to_fock(policy)?.normalized()?;
    fock = fock.tensor(&AtomState::ground().to_mode(MODE_ATOM_C))?;
    fock.rename_mode(MODE_OUT_CAVITY, MODE_CAVITY_C)?;
    let evolved = jc_evolve(&fock, MODE_CAVITY_C, MODE_ATOM_C, params, policy.tail_bound())?;

    let lower = evolved.project_level(MODE_ATOM_C, 0)?;
    let upper = evolved.project_level(MODE_ATOM_C, 1)?;

    let mut situations = Vec::new();
    let mut skipped = 0.0;

    if let Some(rem) = &lower.remaining {
        let target_kept = info.to_fock(MODE_OUT_KEEP, policy)?;
        let d_c = rem.dim_of(MODE_CAVITY_C)?;
        for n in 0..d_c {
            let count = rem.project_level(MODE_CAVITY_C, n)?;
            let p = lower.probability * count.probability;
            let Some(kept) = &count.remaining else {
                skipped += p;
                continue;
            };
            if p < PROBABILITY_FLOOR {
                skipped += p;
                continue;
            }
            let situation = if n == 0 {
                Situation::A
            } else {
                Situation::B { n }
            };
            situations.push(SituationReport {
                situation,
                probability: p,
                fidelity: fidelity(kept, &target_kept)?,
            });
        }
    } else {
        skipped += lower.probability;
    }

    let upper_field = if let Some(rem) = &upper.remaining {
        // The quantum came out of the superposed payload, so the kept mode
        // must be exactly empty before the second cavity runs.
        let kept_vacuum = rem.project_level(MODE_OUT_KEEP, 0)?;
        if kept_vacuum.probability < 1.0 - 1e-9 {
            return Err(Error::Invariant(format!(
                "kept mode should be vacuum once the first atom is excited \
                 (weight {:.12})",
                kept_vacuum.probability
            )));
        }
        Some(
            kept_vacuum
                .remaining
                .ok_or_else(|| Error::Degenerate("second-cavity field vanished".into()))?,
        )
    } else {
        skipped += upper.probability;
        None
    };

    Ok(CavityCOutcome {
        situations,
        p_atom_lower: lower.probability,
        p_atom_upper: upper.probability,
        upper_field,
        skipped_weight: skipped,
    })
}

/// Second cavity: the handed-over field (single mode "9", relabeled "10")
/// meets an excited atom for the same pulse area. Reading the atom lower
/// heralds re-emission (situation C, atom lower); upper leaves the shifted
/// copy (situation C, atom upper). Probabilities are conditional on having
/// entered C′; the caller scales them by the C′ entry probability.
pub fn stage_cavity_cprime(
    field: &MultiModeFockState,
    info: &InformationSpec,
    params: &JcParams,
    policy: &TruncationPolicy,
) -> Result<(Vec<SituationReport>, f64)> {
    let mut cp = field.tensor(&AtomState::excited().to_mode(MODE_ATOM_CPRIME))?;
    cp.rename_mode(MODE_CAVITY_C, MODE_CAVITY_CPRIME)?;
    let evolved = jc_evolve(
        &cp,
        MODE_CAVITY_CPRIME,
        MODE_ATOM_CPRIME,
        params,
        policy.tail_bound(),
    )?;
    let target = info.to_fock(MODE_CAVITY_CPRIME, policy)?;
    let mut situations = Vec::new();
    let mut skipped = 0.0;
    for (level, situation) in [(0usize, Situation::CLower), (1usize, Situation::CUpper)] {
        let out = evolved.project_level(MODE_ATOM_CPRIME, level)?;
        let Some(state) = &out.remaining else {
            skipped += out.probability;
            continue;
        };
        if out.probability < PROBABILITY_FLOOR {
            skipped += out.probability;
            continue;
        }
        situations.push(SituationReport {
            situation,
            probability: out.probability,
            fidelity: fidelity(state, &target)?,
        });
    }
    Ok((situations, skipped))
}

/// Run the full cavity chain on a remixed receiver state and tabulate the
/// terminal situations. Probabilities are conditional on the heralded branch.
pub fn run_recovery(
    receiver: &ReceiverOutcome,
    info: &InformationSpec,
    params: &JcParams,
    policy: &TruncationPolicy,
) -> Result<RecoveryOutcome> {
    let cavity_c = stage_cavity_c(receiver, info, params, policy)?;
    let mut situations = cavity_c.situations.clone();
    let mut completeness: f64 =
        situations.iter().map(|r| r.probability).sum::<f64>() + cavity_c.skipped_weight;

    if let Some(field) = &cavity_c.upper_field {
        let (mut reports, skipped) = stage_cavity_cprime(field, info, params, policy)?;
        for report in &mut reports {
            report.probability *= cavity_c.p_atom_upper;
            completeness += report.probability;
        }
        completeness += cavity_c.p_atom_upper * skipped;
        situations.extend(reports);
    }

    Ok(RecoveryOutcome {
        situations,
        p_atom_lower: cavity_c.p_atom_lower,
        p_atom_upper: cavity_c.p_atom_upper,
        completeness,
    })
}
