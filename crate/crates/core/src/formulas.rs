//! Closed-form probabilities, fidelities, scalar sums, and large-amplitude
//! expansions for the protocol, as pure functions of the information state.
//! The simulation modules are the oracle; everything here exists to be
//! compared against them. Expressions known to be misprinted in their source
//! are kept as printed and exposed under `*_printed` names so the comparison
//! harness can adjudicate them.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cavity::JcParams;
use crate::error::{Error, Result};
use crate::fock::C64;
use crate::protocol::{FamilySign, InformationSpec};

/// Channel concurrence C(x) = (1+x)√(1+x²)/(1+x+x²), x = e^{−|α|²}.
pub fn concurrence_closed_form(x: f64) -> f64 {
    (1.0 + x) * (1.0 + x * x).sqrt() / (1.0 + x + x * x)
}

/// Probability of the both-silent herald: x·P₀/(1+x+x²).
pub fn case_i_probability(info: &InformationSpec) -> f64 {
    let x = info.x();
    x * info.p_i0() / (1.0 + x + x * x)
}

/// Closed-form both-silent fidelity
/// x^{3/2−√2}(1−x^{√2})²|ε₊−ε₋|²/(2(1−x)).
pub fn case_i_fidelity_closed_form(info: &InformationSpec) -> f64 {
    let x = info.x();
    let r2 = std::f64::consts::SQRT_2;
    x.powf(1.5 - r2) * (1.0 - x.powf(r2)).powi(2) * info.v().norm_sqr() / (2.0 * (1.0 - x))
}

/// Per-branch probability of each nonzero-even herald (two such branches):
/// (1+x)²(1−P₀)/(4(1+x+x²)).
pub fn nze_branch_probability(info: &InformationSpec) -> f64 {
    let x = info.x();
    (1.0 + x).powi(2) * (1.0 - info.p_i0()) / (4.0 * (1.0 + x + x * x))
}

/// Per-branch probability of each odd herald (two such branches):
/// (1+x²)(1+P₀)/(4(1+x+x²)).
pub fn odd_branch_probability(info: &InformationSpec) -> f64 {
    let x = info.x();
    (1.0 + x * x) * (1.0 + info.p_i0()) / (4.0 * (1.0 + x + x * x))
}

/// The scalar sums the per-situation formulas are built from, with the
/// invariant combinations that drive the large-amplitude expansions:
///   S1 = Σ_{n≥1} P_n cos²φₙ, S2 = Σ sin²φₙ, S4 = Σ sin⁴φₙ,
///   S22 = Σ sin²φₙcos²φₙ, S3 = Σ p*_{n−1} p_n sinφₙ cosφₙ,
///   X = 2x²(|ε₊+ε₋|²−1)/(1−x²), k1 = |ε₊|²−|ε₋|², k2 = x²(ε₊*ε₋ − ε₊ε₋*).
#[derive(Debug, Clone, Copy)]
pub struct AvgFidelityTerms {
    pub x: f64,
    pub p_i0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s4: f64,
    pub s22: f64,
    pub s3: C64,
    pub x_big: f64,
    pub k1: f64,
    pub k2: C64,
    /// Number-basis weight beyond the summation cutoff.
    pub tail_weight: f64,
    pub nmax: usize,
}

/// Default summation cutoff: comfortably past the Poisson bulk.
pub fn default_sum_cutoff(alpha_sq: f64) -> usize {
    (alpha_sq + 12.0 * (alpha_sq + 1.0).sqrt() + 40.0).ceil() as usize
}

/// Direct summation of the scalar sums at the pulse area in `params`.
pub fn exact_sums(info: &InformationSpec, params: &JcParams) -> AvgFidelityTerms {
    exact_sums_with_cutoff(info, params, default_sum_cutoff(info.alpha_sq()))
}

/// As [`exact_sums`] with an explicit cutoff (sums run over n ≤ nmax).
pub fn exact_sums_with_cutoff(
    info: &InformationSpec,
    params: &JcParams,
    nmax: usize,
) -> AvgFidelityTerms {
    let p = info.fock_coefficients(nmax + 1);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    let mut s22 = 0.0;
    let mut s3 = C64::new(0.0, 0.0);
    let mut total = p[0].norm_sqr();
    for n in 1..=nmax {
        let w = p[n].norm_sqr();
        total += w;
        let phi = params.phase(n);
        let (s, c) = phi.sin_cos();
        s1 += w * c * c;
        s2 += w * s * s;
        s4 += w * s.powi(4);
        s22 += w * (s * c).powi(2);
        s3 += p[n - 1].conj() * p[n] * s * c;
    }
    let (x, ep, em) = (info.x(), info.eps_plus(), info.eps_minus());
    let x2 = x * x;
    AvgFidelityTerms {
        x,
        p_i0: info.p_i0(),
        s1,
        s2,
        s4,
        s22,
        s3,
        x_big: 2.0 * x2 * (info.u().norm_sqr() - 1.0) / (1.0 - x2),
        k1: ep.norm_sqr() - em.norm_sqr(),
        k2: x2 * (ep.conj() * em - ep * em.conj()),
        tail_weight: (1.0 - total).max(0.0),
        nmax,
    }
}

fn family_norm(sums: &AvgFidelityTerms, family: FamilySign) -> f64 {
    2.0 * (1.0 + family.sign() * sums.p_i0)
}

/// Probability that the first atom stays lower, conditional on the branch:
/// [2(1∓P₀)]⁻¹ (Σ_{n≥0} Pₙcos²φₙ + 1 ∓ 2P₀) — the bracket-inside reading
/// that makes the family state's norm work out.
pub fn atom_lower_probability(sums: &AvgFidelityTerms, family: FamilySign) -> f64 {
    let p0 = sums.p_i0;
    // Σ_{n≥0} Pₙ cos²φₙ = P₀ + S1 (the n = 0 rotation angle is zero).
    (p0 + sums.s1 + 1.0 + 2.0 * family.sign() * p0) / family_norm(sums, family)
}

/// The same expression with the trailing terms left outside the bracket, as
/// printed in its source; disagrees with the simulation and can exceed 1.
pub fn atom_lower_probability_printed(sums: &AvgFidelityTerms, family: FamilySign) -> f64 {
    let p0 = sums.p_i0;
    (p0 + sums.s1) / family_norm(sums, family) + 1.0 + 2.0 * family.sign() * p0
}

/// Probability that the first atom absorbs a quantum:
/// Σ_{n≥1} Pₙ sin²φₙ / (2(1∓P₀)).
pub fn atom_upper_probability(sums: &AvgFidelityTerms, family: FamilySign) -> f64 {
    sums.s2 / family_norm(sums, family)
}

/// Closed-form conditional probability and fidelity for every terminal
/// situation of one family.
#[derive(Debug, Clone, Copy)]
pub struct SituationFormulas {
    pub p_a: f64,
    pub f_a: f64,
    /// Combined Σₙ P(Bₙ); the fidelity is n-independent.
    pub p_b: f64,
    pub f_b: f64,
    pub p_c_lower: f64,
    pub f_c_lower: f64,
    pub p_c_upper: f64,
    pub f_c_upper: f64,
}

impl SituationFormulas {
    pub fn total_probability(&self) -> f64 {
        self.p_a + self.p_b + self.p_c_lower + self.p_c_upper
    }

    pub fn weighted_fidelity(&self) -> f64 {
        self.p_a * self.f_a
            + self.p_b * self.f_b
            + self.p_c_lower * self.f_c_lower
            + self.p_c_upper * self.f_c_upper
    }
}

/// All per-situation closed forms for one family:
///   P(∓|A) = (1 ∓ P₀)·(…)/2(1∓P₀) → 1/2 (minus) or (1+3P₀)/(2(1+P₀)) (plus),
///   F^(∓,A) = 1−P₀ or (1+P₀)²/(1+3P₀),
///   P(Bₙ) summed = S1/(2(1∓P₀)), F^(B) = P₀,
///   P(C_l) = S4/(2(1∓P₀)), F^(C_l) = S2²/S4,
///   P(C_u) = S22/(2(1∓P₀)), F^(C_u) = |S3|²/S22.
pub fn family_conditionals(sums: &AvgFidelityTerms, family: FamilySign) -> SituationFormulas {
    let p0 = sums.p_i0;
    let den = family_norm(sums, family);
    let (p_a, f_a) = match family {
        FamilySign::Minus => (0.5, 1.0 - p0),
        FamilySign::Plus => (
            (1.0 + 3.0 * p0) / (2.0 * (1.0 + p0)),
            (1.0 + p0).powi(2) / (1.0 + 3.0 * p0),
        ),
    };
    SituationFormulas {
        p_a,
        f_a,
        p_b: sums.s1 / den,
        f_b: p0,
        p_c_lower: sums.s4 / den,
        f_c_lower: if sums.s4 > 1e-300 {
            sums.s2 * sums.s2 / sums.s4
        } else {
            0.0
        },
        p_c_upper: sums.s22 / den,
        f_c_upper: if sums.s22 > 1e-300 {
            sums.s3.norm_sqr() / sums.s22
        } else {
            0.0
        },
    }
}

/// Average fidelity as the probability-weighted sum over every terminal leaf
/// (both-silent case + 2 × each family's situations), all in closed form.
pub fn avg_fidelity_scalar(info: &InformationSpec, sums: &AvgFidelityTerms) -> f64 {
    let minus = family_conditionals(sums, FamilySign::Minus);
    let plus = family_conditionals(sums, FamilySign::Plus);
    case_i_probability(info) * case_i_fidelity_closed_form(info)
        + 2.0 * nze_branch_probability(info) * minus.weighted_fidelity()
        + 2.0 * odd_branch_probability(info) * plus.weighted_fidelity()
}

/// Algebraic reduction of [`avg_fidelity_scalar`] (family denominators
/// cancel): P_i F_i + P_nze(1−P₀) + P_odd(1+P₀) + (P₀S1 + S2² + |S3|²)/2.
pub fn avg_fidelity_reduced(info: &InformationSpec, sums: &AvgFidelityTerms) -> f64 {
    case_i_probability(info) * case_i_fidelity_closed_form(info)
        + nze_branch_probability(info) * (1.0 - sums.p_i0)
        + odd_branch_probability(info) * (1.0 + sums.p_i0)
        + (sums.p_i0 * sums.s1 + sums.s2 * sums.s2 + sums.s3.norm_sqr()) / 2.0
}

/// The semi-closed average with its two defects repaired: the leading
/// exponent must be 7/2 − √2 (the herald weight contributes x, the vacuum
/// overlap x|u|² another), and the −x(1−x)P₀ piece belongs outside the
/// shared 1/2 so its true coefficient is 1/(1−x³). Equal to
/// [`avg_fidelity_reduced`] identically.
pub fn avg_fidelity_semi_closed_corrected(info: &InformationSpec, sums: &AvgFidelityTerms) -> f64 {
    let x = info.x();
    let r2 = std::f64::consts::SQRT_2;
    let (ep, em) = (info.eps_plus(), info.eps_minus());
    let p0 = sums.p_i0;
    x.powf(3.5 - r2) * (1.0 - x.powf(r2)).powi(2) * (ep * ep - em * em).norm_sqr()
        / (2.0 * (1.0 - x.powi(3)))
        - x * (1.0 - x) * p0 / (1.0 - x.powi(3))
        + 0.5 * (1.0 + p0 * p0 + p0 * sums.s1 + sums.s2 * sums.s2 + sums.s3.norm_sqr())
}

/// Large-amplitude asymptotic average fidelity:
/// 1 − π²/(16A) + π²(π²+8)/(256A²), A = |α|².
pub fn avg_fidelity_asymptotic(alpha_sq: f64) -> f64 {
    1.0 - PI * PI / (16.0 * alpha_sq) + PI * PI * (PI * PI + 8.0) / (256.0 * alpha_sq * alpha_sq)
}

/// The two semi-closed average-fidelity expressions, as printed.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormAverages {
    /// Exact sums substituted into the printed semi-closed expression
    /// (first term carries the printed exponent x^{2−3/2−√2}).
    pub semi_closed_printed: f64,
    /// Fully expanded printed form in X, k1, k2.
    pub expanded_printed: f64,
    /// The asymptotic two-term law.
    pub asymptotic: f64,
}

/// Evaluate the printed closed forms for comparison against the simulation.
/// Both printed expressions blow up as x → 1; the information state already
/// excludes α = 0.
pub fn avg_fidelity_closed_form(
    info: &InformationSpec,
    sums: &AvgFidelityTerms,
) -> Result<ClosedFormAverages> {
    let a = info.alpha_sq();
    let x = info.x();
    if 1.0 - x * x < 1e-12 {
        return Err(Error::Degenerate(
            "printed closed forms are singular at α = 0".into(),
        ));
    }
    let r2 = std::f64::consts::SQRT_2;
    let (ep, em) = (info.eps_plus(), info.eps_minus());
    let p0 = info.p_i0();

    // Shared leading term with the printed exponent 2 − 3/2 − √2.
    let t_bs = (x.powf(2.0 - 1.5 - r2) * (1.0 - x.powf(r2)).powi(2) * (ep * ep - em * em).norm_sqr()
        - x * (1.0 - x) * p0)
        / (2.0 * (1.0 - x.powi(3)));

    let semi_closed_printed = t_bs
        + 0.5 * (1.0 + p0 * p0 + p0 * sums.s1 + sums.s2 * sums.s2 + sums.s3.norm_sqr());

    let xb = sums.x_big;
    let k1 = sums.k1;
    let k2 = sums.k2;
    let pi2 = PI * PI;
    let half = 0.5
        * (p0 * p0
            + (p0 * pi2 / 32.0) * (2.0 / a - 1.0 / (a * a) + (8.0 - 5.0 / a + 1.0 / (a * a)) * xb)
            - p0
            - pi2 / (8.0 * a)
            + pi2 * (pi2 + 8.0) / (128.0 * a * a)
            - (pi2 / 2.0) * (1.0 - (10.0 + pi2) / (16.0 * a) - (16.0 + 9.0 * pi2) / (16.0 * a * a))
                * xb
            + pi2 * (2.0 - 1.0 / (4.0 * a) + 41.0 / (32.0 * a * a)) * xb * xb);
    let kterms = x * x * pi2 * k1 * k1 / (256.0 * a * a)
        - x * x * pi2 * k2.norm_sqr() / (144.0 * a)
            * ((pi2 + 3.0).powi(2) - 2.0 * (pi2 * pi2 + 10.0 * pi2 + 21.0) / a
                + (pi2 * pi2 + 9.0 * pi2 + 18.0) / (4.0 * a * a))
        + x * x * pi2 * (2.0 * k1 * k2.conj()).re / (192.0 * a)
            * ((pi2 + 3.0) - (pi2 * pi2 + 15.0 * pi2 + 60.0) / (6.0 * a));
    let expanded_printed = 1.0 + t_bs + half + kterms;

    Ok(ClosedFormAverages {
        semi_closed_printed,
        expanded_printed,
        asymptotic: avg_fidelity_asymptotic(a),
    })
}

/// Large-amplitude expansions of the scalar sums, as printed.
#[derive(Debug, Clone, Copy)]
pub struct ApproxSums {
    pub s1: f64,
    pub s2: f64,
    pub s3: C64,
    /// The expansions are only claimed for |α|² ≥ 5.
    pub in_expansion_regime: bool,
}

/// The printed closed forms of S1, S2, S3 in powers of 1/|α|²:
///   T₁ = π²/32 (2/A − 1/A² + (8 − 5/A + 1/A²)X),
///   S1 ≈ T₁ − P₀, S2 ≈ 1 − (T₁ + P₀),
///   S3 ≈ (α/|α|)[πk1/(16A)(−1 + (π²+6)/(6A))
///        − πk2/12((π²+3) − 3(π²+7)/(4A) + (π²+6)/(8A²))].
pub fn approx_sums(info: &InformationSpec) -> ApproxSums {
    let a = info.alpha_sq();
    let x = info.x();
    let x2 = x * x;
    let xb = 2.0 * x2 * (info.u().norm_sqr() - 1.0) / (1.0 - x2);
    let p0 = info.p_i0();
    let (ep, em) = (info.eps_plus(), info.eps_minus());
    let k1 = ep.norm_sqr() - em.norm_sqr();
    let k2 = x2 * (ep.conj() * em - ep * em.conj());
    let pi2 = PI * PI;

    let t1 = (pi2 / 32.0) * (2.0 / a - 1.0 / (a * a) + (8.0 - 5.0 / a + 1.0 / (a * a)) * xb);
    let unit = info.alpha() / Complex64::new(info.alpha().norm(), 0.0);
    let s3 = unit
        * (Complex64::new(PI * k1 / (16.0 * a) * (-1.0 + (pi2 + 6.0) / (6.0 * a)), 0.0)
            - k2 * (PI / 12.0)
                * ((pi2 + 3.0) - 3.0 * (pi2 + 7.0) / (4.0 * a) + (pi2 + 6.0) / (8.0 * a * a)));
    ApproxSums {
        s1: t1 - p0,
        s2: 1.0 - (t1 + p0),
        s3,
        in_expansion_regime: a >= 5.0,
    }
}

/// One checked identity: a computed moment against its expected closed form.
#[derive(Debug, Clone)]
pub struct MomentCheck {
    pub label: String,
    pub computed: f64,
    pub expected: f64,
}

impl MomentCheck {
    /// Deviation scaled against max(1, |expected|).
    pub fn scaled_deviation(&self) -> f64 {
        (self.computed - self.expected).abs() / self.expected.abs().max(1.0)
    }
}

/// Report over the factorial-moment and shifted-moment identities.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub checks: Vec<MomentCheck>,
    pub max_scaled_deviation: f64,
}

/// Verify the number-operator moment identities of the information state:
/// ⟨a†ᵐaᵐ⟩ = |α|²ᵐ for even m and |α|²ᵐ(1−X) for odd m (m = 1..6), and the
/// first three moments of y = (n−A)/A: E[y] = −X, E[y²] = 1/A + (2−1/A)X,
/// E[y³] = 1/A² + (−4 + 3/A − 1/A²)X.
pub fn moment_identities_check(info: &InformationSpec) -> MomentReport {
    let a = info.alpha_sq();
    let nmax = default_sum_cutoff(a) + 6;
    let p = info.fock_coefficients(nmax + 1);
    let weights: Vec<f64> = p.iter().map(|c| c.norm_sqr()).collect();
    let x2 = info.x() * info.x();
    let xb = 2.0 * x2 * (info.u().norm_sqr() - 1.0) / (1.0 - x2);

    let mut checks = Vec::new();
    for m in 1..=6usize {
        let mut computed = 0.0;
        for (n, &w) in weights.iter().enumerate() {
            if n >= m {
                let mut fall = 1.0;
                for k in 0..m {
                    fall *= (n - k) as f64;
                }
                computed += w * fall;
            }
        }
        let expected = if m % 2 == 0 {
            a.powi(m as i32)
        } else {
            a.powi(m as i32) * (1.0 - xb)
        };
        checks.push(MomentCheck {
            label: format!("falling-moment m={m}"),
            computed,
            expected,
        });
    }

    let y_moment = |k: u32| -> f64 {
        weights
            .iter()
            .enumerate()
            .map(|(n, &w)| w * ((n as f64 - a) / a).powi(k as i32))
            .sum()
    };
    checks.push(MomentCheck {
        label: "E[y]".into(),
        computed: y_moment(1),
        expected: -xb,
    });
    checks.push(MomentCheck {
        label: "E[y²]".into(),
        computed: y_moment(2),
        expected: 1.0 / a + (2.0 - 1.0 / a) * xb,
    });
    checks.push(MomentCheck {
        label: "E[y³]".into(),
        computed: y_moment(3),
        expected: 1.0 / (a * a) + (-4.0 + 3.0 / a - 1.0 / (a * a)) * xb,
    });

    let max_scaled_deviation = checks
        .iter()
        .map(MomentCheck::scaled_deviation)
        .fold(0.0, f64::max);
    MomentReport {
        checks,
        max_scaled_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn info(alpha_sq: f64, theta: f64, phi: f64) -> InformationSpec {
        InformationSpec::from_bloch(c(alpha_sq.sqrt(), 0.0), theta, phi).unwrap()
    }

    fn sums_for(i: &InformationSpec) -> AvgFidelityTerms {
        let params = JcParams::resonant_half_pi(i.alpha()).unwrap();
        exact_sums(i, &params)
    }

    #[test]
    fn concurrence_reference_values() {
        assert_relative_eq!(
            concurrence_closed_form(0.9),
            0.943243014370482,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            concurrence_closed_form(0.5),
            0.95831484749991,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            concurrence_closed_form(0.1),
            0.995933620111079,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            concurrence_closed_form(0.01),
            0.999950993701181,
            max_relative = 1e-14
        );
        // Equal-amplitude limit x → 1 tends to 2√2/3 < 1.
        assert_relative_eq!(
            concurrence_closed_form(1.0),
            2.0 * 2.0f64.sqrt() / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            concurrence_closed_form((-3.0f64).exp()),
            0.998880058223031,
            max_relative = 1e-12
        );
    }

    #[test]
    fn branch_probability_reference_values() {
        let i = info(4.0, 0.9, 0.7);
        assert_relative_eq!(case_i_probability(&i), 0.000124569782841957, max_relative = 1e-12);
        assert_relative_eq!(nze_branch_probability(&i), 0.252731896475372, max_relative = 1e-12);
        assert_relative_eq!(odd_branch_probability(&i), 0.247205818633207, max_relative = 1e-12);
        let total =
            case_i_probability(&i) + 2.0 * nze_branch_probability(&i) + 2.0 * odd_branch_probability(&i);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);

        assert_relative_eq!(
            case_i_fidelity_closed_form(&i),
            0.582135690326382,
            max_relative = 1e-12
        );
        let i10 = info(10.0, std::f64::consts::FRAC_PI_2, 0.0);
        assert_relative_eq!(
            case_i_fidelity_closed_form(&i10),
            0.212042702752481,
            max_relative = 1e-12
        );
    }

    #[test]
    fn exact_sums_reference_values() {
        let i = info(4.0, 0.9, 0.7);
        let s = sums_for(&i);
        assert_relative_eq!(s.p_i0, 0.00692813105120229, max_relative = 1e-11);
        assert_relative_eq!(s.s1, 0.139252742986515, max_relative = 1e-11);
        assert_relative_eq!(s.s2, 0.853819125962283, max_relative = 1e-11);
        assert_relative_eq!(s.s4, 0.763113553851458, max_relative = 1e-11);
        assert_relative_eq!(s.s22, 0.0907055721108249, max_relative = 1e-11);
        assert_abs_diff_eq!(s.s3.re, -0.0291223159688083, epsilon = 1e-13);
        assert_abs_diff_eq!(s.s3.im, -0.000656315725169563, epsilon = 1e-13);
        assert!(s.tail_weight < 1e-12);
        assert_abs_diff_eq!(s.s1 + s.s2, 1.0 - s.p_i0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.s4 + s.s22, s.s2, epsilon = 1e-12);

        assert_relative_eq!(s.x_big, -0.000417278944280945, max_relative = 1e-10);
        assert_relative_eq!(s.k1, 0.599121500629406, max_relative = 1e-11);
        assert_abs_diff_eq!(s.k2.re, 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(s.k2.im, 0.000169285538628656, epsilon = 1e-13);

        let i10 = info(10.0, std::f64::consts::FRAC_PI_2, 0.0);
        let s10 = sums_for(&i10);
        assert_relative_eq!(s10.s1, 0.0605284635198226, max_relative = 1e-11);
        assert_relative_eq!(s10.s2, 0.93942613655051, max_relative = 1e-11);
        assert_abs_diff_eq!(s10.s3.re, -0.01963253133123, epsilon = 1e-13);
        assert_abs_diff_eq!(s10.s3.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn family_conditionals_reference_values() {
        let i = info(4.0, 0.9, 0.7);
        let s = sums_for(&i);

        let minus = family_conditionals(&s, FamilySign::Minus);
        assert_abs_diff_eq!(minus.p_a, 0.5, epsilon = 1e-15);
        assert_relative_eq!(minus.f_a, 0.993071868948798, max_relative = 1e-11);
        assert_relative_eq!(minus.p_b, 0.0701121174310974, max_relative = 1e-11);
        assert_relative_eq!(minus.p_c_lower, 0.384218694392804, max_relative = 1e-11);
        assert_relative_eq!(minus.f_c_lower, 0.955306187630497, max_relative = 1e-11);
        assert_relative_eq!(minus.p_c_upper, 0.0456691881760985, max_relative = 1e-11);
        assert_relative_eq!(minus.f_c_upper, 0.00935488325547917, max_relative = 1e-10);
        assert_abs_diff_eq!(minus.total_probability(), 1.0, epsilon = 1e-12);

        let plus = family_conditionals(&s, FamilySign::Plus);
        assert_relative_eq!(plus.p_a, 0.506880462306649, max_relative = 1e-11);
        assert_relative_eq!(plus.f_a, 0.993259955679687, max_relative = 1e-11);
        assert_relative_eq!(plus.p_b, 0.0691473098686494, max_relative = 1e-11);
        assert_relative_eq!(plus.p_c_lower, 0.378931489904245, max_relative = 1e-11);
        assert_relative_eq!(plus.p_c_upper, 0.0450407379204567, max_relative = 1e-11);
        assert_abs_diff_eq!(plus.total_probability(), 1.0, epsilon = 1e-12);

        // Atom-readout split: P(l) = P(A) + P(B), P(u) = P(C_l) + P(C_u).
        for family in [FamilySign::Minus, FamilySign::Plus] {
            let f = family_conditionals(&s, family);
            assert_abs_diff_eq!(
                atom_lower_probability(&s, family),
                f.p_a + f.p_b,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                atom_upper_probability(&s, family),
                f.p_c_lower + f.p_c_upper,
                epsilon = 1e-12
            );
            // The as-printed bracket misplacement is wildly off (> 1 even).
            assert!(
                atom_lower_probability_printed(&s, family) > 0.9,
                "printed form should visibly disagree"
            );
        }
    }

    #[test]
    fn average_fidelity_reference_values() {
        let cases = [
            (4.0, std::f64::consts::FRAC_PI_2, 0.0, 0.865925077137874),
            (5.0, std::f64::consts::FRAC_PI_2, 0.0, 0.889293339948582),
            (10.0, std::f64::consts::FRAC_PI_2, 0.0, 0.941454824560888),
            (15.0, std::f64::consts::FRAC_PI_2, 0.0, 0.96028099844997),
            (20.0, std::f64::consts::FRAC_PI_2, 0.0, 0.969950068825539),
            (25.0, std::f64::consts::FRAC_PI_2, 0.0, 0.975834250382395),
            (30.0, std::f64::consts::FRAC_PI_2, 0.0, 0.979791748945784),
            (4.0, 0.9, 0.7, 0.8653821468083),
            (1.0, std::f64::consts::FRAC_PI_4, 0.6, 0.813837486986357),
        ];
        for (a, theta, phi, expected) in cases {
            let i = info(a, theta, phi);
            let s = sums_for(&i);
            let scalar = avg_fidelity_scalar(&i, &s);
            assert_relative_eq!(scalar, expected, max_relative = 1e-11);
            assert_abs_diff_eq!(
                scalar,
                avg_fidelity_reduced(&i, &s),
                epsilon = 1e-12,
            );
            assert_abs_diff_eq!(
                scalar,
                avg_fidelity_semi_closed_corrected(&i, &s),
                epsilon = 1e-11,
            );
        }
    }

    #[test]
    fn printed_closed_forms_reference_values() {
        let cases = [
            (1.0, 1.46033834343558, 1.13216435482494),
            (3.0, 8.37460037322577, 8.39383589557909),
            (10.0, 4671.28074171244, 4671.28446978405),
        ];
        for (a, semi, expanded) in cases {
            let i = info(a, std::f64::consts::FRAC_PI_2, 0.0);
            let s = sums_for(&i);
            let forms = avg_fidelity_closed_form(&i, &s).unwrap();
            assert_relative_eq!(forms.semi_closed_printed, semi, max_relative = 1e-10);
            assert_relative_eq!(forms.expanded_printed, expanded, max_relative = 1e-10);
        }
        let i = info(4.0, 0.9, 0.7);
        let s = sums_for(&i);
        let forms = avg_fidelity_closed_form(&i, &s).unwrap();
        assert_relative_eq!(forms.semi_closed_printed, 12.6677824372136, max_relative = 1e-10);
        assert_relative_eq!(forms.expanded_printed, 12.6885084508975, max_relative = 1e-10);
    }

    #[test]
    fn asymptotic_law_reference_values() {
        assert_relative_eq!(avg_fidelity_asymptotic(10.0), 0.945204266487048, max_relative = 1e-13);
        assert_relative_eq!(avg_fidelity_asymptotic(20.0), 0.97087980974506, max_relative = 1e-13);
        assert_relative_eq!(avg_fidelity_asymptotic(30.0), 0.980203801274826, max_relative = 1e-13);
        // Residuals against the exact average shrink roughly like 1/A².
        let residuals = [
            (10.0, 0.941454824560888),
            (30.0, 0.979791748945784),
        ]
        .map(|(a, exact): (f64, f64)| (avg_fidelity_asymptotic(a) - exact).abs());
        assert_abs_diff_eq!(residuals[0], 0.00374944192615967, epsilon = 1e-12);
        assert_abs_diff_eq!(residuals[1], 0.000412052329041512, epsilon = 1e-12);
    }

    #[test]
    fn approximate_sums_reference_values() {
        let i10 = info(10.0, std::f64::consts::FRAC_PI_2, 0.0);
        let a10 = approx_sums(&i10);
        assert!(a10.in_expansion_regime);
        assert_relative_eq!(a10.s1, 0.0585553762017991, max_relative = 1e-11);
        assert_relative_eq!(a10.s2, 0.941353823938863, max_relative = 1e-11);
        assert_abs_diff_eq!(a10.s3.re, -0.0144416381889114, epsilon = 1e-13);
        assert_abs_diff_eq!(a10.s3.im, 0.0, epsilon = 1e-16);

        let i4 = info(4.0, 0.9, 0.7);
        let a4 = approx_sums(&i4);
        assert!(!a4.in_expansion_regime);
        assert_relative_eq!(a4.s1, 0.127131102531191, max_relative = 1e-11);
        assert_relative_eq!(a4.s2, 0.859012635366405, max_relative = 1e-11);
        assert_abs_diff_eq!(a4.s3.re, -0.00996288780996018, epsilon = 1e-13);
        assert_abs_diff_eq!(a4.s3.im, -0.00043567800359057, epsilon = 1e-13);

        // The expansions converge on the exact sums as |α|² grows.
        let s10 = sums_for(&i10);
        assert!((a10.s1 - s10.s1).abs() / s10.s1 < 0.05);
        assert!((a10.s2 - s10.s2).abs() / s10.s2 < 0.01);
    }

    #[test]
    fn moment_identities_hold() {
        for (a, theta, phi) in [(1.0, std::f64::consts::FRAC_PI_4, 0.6), (4.0, 0.9, 0.7)] {
            let report = moment_identities_check(&info(a, theta, phi));
            assert!(
                report.max_scaled_deviation < 1e-10,
                "moment identities deviate by {} at |α|² = {a}",
                report.max_scaled_deviation
            );
            assert_eq!(report.checks.len(), 9);
        }
    }
}
