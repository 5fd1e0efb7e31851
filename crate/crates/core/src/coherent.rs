//! Exact (untruncated) algebra of finite superpositions of multimode
//! coherent states. Inner products come from the Gram matrix of coherent
//! overlaps, beam splitters act exactly on the coherent labels, and the
//! photon-class projectors have closed-form action on coherent kets. This is
//! the reference route; [`CoherentSuperposition::to_fock`] bridges to the
//! truncated Fock engine for the stages that need photon-number resolution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{
    coherent_amplitudes, MultiModeFockState, Parity, PhotonClass, TruncationPolicy, C64,
};

const ZERO: C64 = Complex64::new(0.0, 0.0);
const ONE: C64 = Complex64::new(1.0, 0.0);

/// ⟨a|b⟩ = exp(−|a|²/2 − |b|²/2 + a* b): the full complex coherent overlap.
/// Its squared modulus is exp(−|a−b|²).
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (a.conj() * b - C64::new((a.norm_sqr() + b.norm_sqr()) / 2.0, 0.0)).exp()
}

/// One term of a superposition: a complex coefficient times a product of
/// coherent states, one label per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub amps: Vec<C64>,
}

/// Finite superposition Σᵢ cᵢ |γᵢ₁⟩|γᵢ₂⟩⋯ over a fixed ordered set of modes.
/// A zero-mode superposition is a scalar (used by partial contractions).
#[derive(Debug, Clone)]
pub struct CoherentSuperposition {
    labels: Vec<String>,
    terms: Vec<Term>,
}

impl CoherentSuperposition {
    pub fn new(labels: Vec<String>, terms: Vec<Term>) -> Result<Self> {
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateMode(l.clone()));
            }
        }
        for t in &terms {
            if t.amps.len() != labels.len() {
                return Err(Error::DimensionMismatch(t.amps.len(), labels.len()));
            }
        }
        Ok(Self { labels, terms })
    }

    /// Single-mode superposition Σ cᵢ|γᵢ⟩.
    pub fn single_mode(label: &str, terms: &[(C64, C64)]) -> Self {
        Self {
            labels: vec![label.to_string()],
            terms: terms
                .iter()
                .map(|&(coeff, amp)| Term {
                    coeff,
                    amps: vec![amp],
                })
                .collect(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    /// ⟨self|other⟩ via the Gram expansion.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.labels != other.labels {
            return Err(Error::InvalidInput(format!(
                "overlap needs matching modes: {:?} vs {:?}",
                self.labels, other.labels
            )));
        }
        let mut acc = ZERO;
        for a in &self.terms {
            for b in &other.terms {
                let mut g = a.coeff.conj() * b.coeff;
                for (&x, &y) in a.amps.iter().zip(&b.amps) {
                    g *= coherent_overlap(x, y);
                }
                acc += g;
            }
        }
        Ok(acc)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.overlap(self).expect("same labels").re
    }

    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 < 1e-28 {
            return Err(Error::Degenerate(
                "cannot normalize a (numerically) zero superposition".into(),
            ));
        }
        Ok(self.scaled(C64::new(1.0 / n2.sqrt(), 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            labels: self.labels.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    amps: t.amps.clone(),
                })
                .collect(),
        }
    }

    /// Term-list sum; modes must match.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.labels != other.labels {
            return Err(Error::InvalidInput("sum needs matching modes".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            labels: self.labels.clone(),
            terms,
        })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for l in &other.labels {
            if self.labels.contains(l) {
                return Err(Error::DuplicateMode(l.clone()));
            }
        }
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut amps = a.amps.clone();
                amps.extend(b.amps.iter().copied());
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    amps,
                });
            }
        }
        Ok(Self { labels, terms })
    }

    pub fn rename_mode(&mut self, from: &str, to: &str) -> Result<()> {
        let idx = self.mode_index(from)?;
        if from != to && self.labels.iter().any(|l| l == to) {
            return Err(Error::DuplicateMode(to.to_string()));
        }
        self.labels[idx] = to.to_string();
        Ok(())
    }

    /// 50:50 splitter on the coherent labels:
    /// (a, b) → ((a+b)/√2, (a−b)/√2); coefficients unchanged. Exact isometry.
    pub fn apply_beamsplitter(&self, mode_a: &str, mode_b: &str) -> Result<Self> {
        let ia = self.mode_index(mode_a)?;
        let ib = self.mode_index(mode_b)?;
        if ia == ib {
            return Err(Error::InvalidInput(
                "beam splitter needs two distinct modes".into(),
            ));
        }
        let r = std::f64::consts::SQRT_2;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut amps = t.amps.clone();
                let (a, b) = (amps[ia], amps[ib]);
                amps[ia] = (a + b) / r;
                amps[ib] = (a - b) / r;
                Term {
                    coeff: t.coeff,
                    amps,
                }
            })
            .collect();
        Ok(Self {
            labels: self.labels.clone(),
            terms,
        })
    }

    /// Phase shifter on one mode: label γ → e^{iθ}γ (θ = π gives a → −a).
    pub fn apply_phase(&self, label: &str, theta: f64) -> Result<Self> {
        let idx = self.mode_index(label)?;
        let ph = C64::from_polar(1.0, theta);
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut amps = t.amps.clone();
                amps[idx] = if theta == std::f64::consts::PI {
                    -amps[idx] // exact sign flip, keeps labels bit-identical
                } else {
                    amps[idx] * ph
                };
                Term {
                    coeff: t.coeff,
                    amps,
                }
            })
            .collect();
        Ok(Self {
            labels: self.labels.clone(),
            terms,
        })
    }

    /// Photon-class projector on one mode, exactly, using
    /// P₀|γ⟩ = e^{−|γ|²/2}|0⟩, P_even|γ⟩ = (|γ⟩+|−γ⟩)/2,
    /// P_odd|γ⟩ = (|γ⟩−|−γ⟩)/2, P_nze = P_even − P₀.
    /// The result is left unnormalized (‖·‖² is the outcome probability for
    /// a normalized input).
    pub fn project_class(&self, label: &str, class: PhotonClass) -> Result<Self> {
        let idx = self.mode_index(label)?;
        let half = C64::new(0.5, 0.0);
        let mut terms = Vec::new();
        for t in &self.terms {
            let g = t.amps[idx];
            let vac_coeff = C64::new((-g.norm_sqr() / 2.0).exp(), 0.0);
            let with = |coeff: C64, amp: C64| {
                let mut amps = t.amps.clone();
                amps[idx] = amp;
                Term { coeff, amps }
            };
            match class {
                PhotonClass::Zero => terms.push(with(t.coeff * vac_coeff, ZERO)),
                PhotonClass::Odd => {
                    terms.push(with(t.coeff * half, g));
                    terms.push(with(-t.coeff * half, -g));
                }
                PhotonClass::Nze => {
                    terms.push(with(t.coeff * half, g));
                    terms.push(with(t.coeff * half, -g));
                    terms.push(with(-t.coeff * vac_coeff, ZERO));
                }
            }
        }
        Ok(Self {
            labels: self.labels.clone(),
            terms,
        })
    }

    /// Contract a subset of modes against a reference superposition:
    /// (⟨reference| ⊗ I)|self⟩. The result lives on the remaining modes in
    /// their original order (possibly zero modes = scalar).
    pub fn partial_inner(&self, reference: &Self) -> Result<Self> {
        let contracted: Vec<usize> = reference
            .labels
            .iter()
            .map(|l| self.mode_index(l))
            .collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..self.labels.len())
            .filter(|i| !contracted.contains(i))
            .collect();
        let labels: Vec<String> = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let mut terms = Vec::new();
        for t in &self.terms {
            let mut acc = ZERO;
            for r in &reference.terms {
                let mut g = r.coeff.conj();
                for (&ri, &idx) in r.amps.iter().zip(&contracted) {
                    g *= coherent_overlap(ri, t.amps[idx]);
                }
                acc += g;
            }
            terms.push(Term {
                coeff: t.coeff * acc,
                amps: keep.iter().map(|&i| t.amps[i]).collect(),
            });
        }
        Ok(Self { labels, terms })
    }

    /// Permute the mode order (labels and per-term amplitudes together).
    /// `order` must list every current mode exactly once.
    pub fn reorder_modes(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.labels.len() {
            return Err(Error::DimensionMismatch(order.len(), self.labels.len()));
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|l| self.mode_index(l))
            .collect::<Result<_>>()?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if seen[p] {
                return Err(Error::DuplicateMode(self.labels[p].clone()));
            }
            seen[p] = true;
        }
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff,
                amps: perm.iter().map(|&p| t.amps[p]).collect(),
            })
            .collect();
        Ok(Self { labels, terms })
    }

    /// Merge terms whose label tuples are bit-identical and drop terms with
    /// exactly zero coefficient. Never merges merely-close labels.
    pub fn merge_exact(&self) -> Self {
        let mut terms: Vec<Term> = Vec::new();
        for t in &self.terms {
            if let Some(existing) = terms.iter_mut().find(|e| e.amps == t.amps) {
                existing.coeff += t.coeff;
            } else {
                terms.push(t.clone());
            }
        }
        terms.retain(|t| t.coeff.norm_sqr() > 0.0);
        Self {
            labels: self.labels.clone(),
            terms,
        }
    }

    /// Expand into the truncated Fock representation. The result is not
    /// renormalized; its norm agrees with the Gram norm up to the policy's
    /// tail bound.
    pub fn to_fock(&self, policy: &TruncationPolicy) -> Result<MultiModeFockState> {
        if self.labels.is_empty() {
            return Err(Error::InvalidInput(
                "cannot export a zero-mode scalar to Fock form".into(),
            ));
        }
        let dim = policy.dim();
        for t in &self.terms {
            for &a in &t.amps {
                policy.check_amplitude(a)?;
            }
        }
        let modes = self.labels.len();
        let total: usize = dim
            .checked_pow(modes as u32)
            .ok_or_else(|| Error::InvalidInput("tensor too large".into()))?;
        let mut acc = vec![ZERO; total];
        for t in &self.terms {
            let mut cur = vec![t.coeff];
            for &a in &t.amps {
                let v = coherent_amplitudes(a, dim);
                let mut next = vec![ZERO; cur.len() * dim];
                for (i, &ci) in cur.iter().enumerate() {
                    if ci == ZERO {
                        continue;
                    }
                    for (n, &vn) in v.iter().enumerate() {
                        next[i * dim + n] = ci * vn;
                    }
                }
                cur = next;
            }
            for (slot, val) in acc.iter_mut().zip(&cur) {
                *slot += val;
            }
        }
        let shape = vec![dim; modes];
        let amps = ndarray::ArrayD::from_shape_vec(ndarray::IxDyn(&shape), acc)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(MultiModeFockState::from_parts(self.labels.clone(), amps))
    }
}

/// Single-mode vacuum as a (trivial) coherent superposition.
pub fn vacuum_superposition(label: &str) -> CoherentSuperposition {
    CoherentSuperposition::single_mode(label, &[(ONE, ZERO)])
}

/// Normalized cat state (|a⟩ ± |−a⟩)/√(2(1±x²)), x = e^{−|a|²}.
pub fn cat_superposition(label: &str, amplitude: C64, parity: Parity) -> Result<CoherentSuperposition> {
    let sign = match parity {
        Parity::Even => ONE,
        Parity::Odd => -ONE,
    };
    CoherentSuperposition::single_mode(label, &[(ONE, amplitude), (sign, -amplitude)])
        .normalized()
        .map_err(|_| {
            Error::Degenerate(format!(
                "{} cat state vanishes at amplitude {amplitude}",
                parity.name()
            ))
        })
}

/// Normalized nonzero-even state (|a⟩ + |−a⟩ − 2ξ|0⟩)/√(2(1−ξ²)), ξ = e^{−|a|²/2}:
/// the even cat with its vacuum component projected out.
pub fn nze_superposition(label: &str, amplitude: C64) -> Result<CoherentSuperposition> {
    let xi = C64::new((-amplitude.norm_sqr() / 2.0).exp(), 0.0);
    CoherentSuperposition::single_mode(
        label,
        &[
            (ONE, amplitude),
            (ONE, -amplitude),
            (-2.0 * xi, ZERO),
        ],
    )
    .normalized()
    .map_err(|_| Error::Degenerate(format!("NZE state vanishes at amplitude {amplitude}")))
}

/// A two-term, two-mode entangled coherent state
/// c₁|β₁⟩|γ₁⟩ + c₂|β₂⟩|γ₂⟩ (the protocol channel has c₁ = −c₂ up to
/// normalization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcsPair {
    pub c1: C64,
    pub c2: C64,
    pub beta1: C64,
    pub gamma1: C64,
    pub beta2: C64,
    pub gamma2: C64,
}

impl EcsPair {
    pub fn from_superposition(s: &CoherentSuperposition) -> Result<Self> {
        if s.labels().len() != 2 || s.terms().len() != 2 {
            return Err(Error::InvalidInput(
                "ECS pair needs exactly 2 modes and 2 terms".into(),
            ));
        }
        let (t1, t2) = (&s.terms()[0], &s.terms()[1]);
        Ok(Self {
            c1: t1.coeff,
            c2: t2.coeff,
            beta1: t1.amps[0],
            gamma1: t1.amps[1],
            beta2: t2.amps[0],
            gamma2: t2.amps[1],
        })
    }
}

/// Concurrence of a two-term ECS viewed as an effective two-qubit pure state
/// (each mode's two coherent components span a qubit):
/// C = 2|c₁c₂| √((1−|⟨β₁|β₂⟩|²)(1−|⟨γ₁|γ₂⟩|²)) / N²,
/// N² = |c₁|² + |c₂|² + 2 Re(c₁* c₂ ⟨β₁|β₂⟩⟨γ₁|γ₂⟩).
pub fn ecs_concurrence(pair: &EcsPair) -> Result<f64> {
    let o_beta = coherent_overlap(pair.beta1, pair.beta2);
    let o_gamma = coherent_overlap(pair.gamma1, pair.gamma2);
    let n2 = pair.c1.norm_sqr()
        + pair.c2.norm_sqr()
        + 2.0 * (pair.c1.conj() * pair.c2 * o_beta * o_gamma).re;
    if n2 < 1e-28 {
        return Err(Error::Degenerate("ECS pair has zero norm".into()));
    }
    let numer = 2.0
        * (pair.c1 * pair.c2).norm()
        * ((1.0 - o_beta.norm_sqr()).max(0.0) * (1.0 - o_gamma.norm_sqr()).max(0.0)).sqrt();
    Ok((numer / n2).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, beamsplitter, fidelity};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Deterministic 2-term single-mode superposition for cross-checks.
    fn sample_superposition(label: &str, seed: u64) -> CoherentSuperposition {
        let f = (seed as f64 + 1.0) * 0.37;
        CoherentSuperposition::single_mode(
            label,
            &[
                (c(0.8, 0.1 * f), c(0.9 * f.cos(), 0.7 * f.sin())),
                (c(-0.3, 0.55), c(-1.1 * f.sin(), 0.4)),
            ],
        )
        .normalized()
        .unwrap()
    }

    #[test]
    fn overlap_closed_form_values() {
        let s = CoherentSuperposition::single_mode("m", &[(ONE, c(0.7, -0.2))]);
        assert_abs_diff_eq!((s.overlap(&s).unwrap() - ONE).norm(), 0.0, epsilon = 1e-15);

        // |⟨α|−α⟩|² at |α|² = 3 is e^{−12} ≈ 6.14e−6 (exp(−|α−β|²) with β=−α).
        let a = 3.0f64.sqrt();
        let ov = coherent_overlap(c(a, 0.0), c(-a, 0.0));
        assert_relative_eq!(ov.norm_sqr(), (-12.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn overlap_agrees_with_fock_inner_product() {
        let policy = TruncationPolicy::default_for(10.0).unwrap();
        for seed in 0..5 {
            let a = sample_superposition("m", seed);
            let b = sample_superposition("m", seed + 17);
            let exact = a.overlap(&b).unwrap();
            let fa = a.to_fock(&policy).unwrap();
            let fb = b.to_fock(&policy).unwrap();
            let numeric = fa.inner(&fb).unwrap();
            assert_abs_diff_eq!((exact - numeric).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn beamsplitter_label_map_and_isometry() {
        let al = c(0.9, 0.4);
        let s = CoherentSuperposition::single_mode("a", &[(ONE, al)])
            .tensor(&CoherentSuperposition::single_mode("b", &[(ONE, al)]))
            .unwrap();
        let mixed = s.apply_beamsplitter("a", "b").unwrap();
        assert_eq!(mixed.terms()[0].amps[1], ZERO, "|α,α⟩ → |√2α, 0⟩");
        assert_abs_diff_eq!(
            (mixed.terms()[0].amps[0] - al * 2.0f64.sqrt()).norm(),
            0.0,
            epsilon = 1e-15
        );

        for seed in 0..4 {
            let s = sample_superposition("a", seed)
                .tensor(&sample_superposition("b", seed + 3))
                .unwrap();
            let mixed = s.apply_beamsplitter("a", "b").unwrap();
            assert_relative_eq!(mixed.norm_sqr(), s.norm_sqr(), epsilon = 1e-12);
        }
    }

    #[test]
    fn representation_commutes_with_fock_beamsplitter() {
        // to_fock ∘ apply_beamsplitter == beamsplitter ∘ to_fock.
        let policy = TruncationPolicy::default_for(8.0).unwrap();
        let s = sample_superposition("a", 2)
            .tensor(&sample_superposition("b", 9))
            .unwrap();
        let via_labels = s.apply_beamsplitter("a", "b").unwrap().to_fock(&policy).unwrap();
        let via_fock = beamsplitter(&s.to_fock(&policy).unwrap(), "a", "b").unwrap();
        assert!(fidelity(&via_labels, &via_fock).unwrap() >= 1.0 - 1e-9);
        let ov = via_labels.inner(&via_fock).unwrap();
        assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-9);
        assert!(ov.re > 0.0, "no stray global phase between the two routes");
    }

    #[test]
    fn class_projectors_match_fock_route() {
        let policy = TruncationPolicy::default_for(6.0).unwrap();
        for seed in 0..3 {
            let s = sample_superposition("m", seed)
                .tensor(&sample_superposition("w", seed + 40))
                .unwrap();
            let fs = s.to_fock(&policy).unwrap();
            let mut total = 0.0;
            for class in PhotonClass::ALL {
                let proj = s.project_class("m", class).unwrap();
                let p_exact = proj.norm_sqr();
                let out = fs.project_class("m", class).unwrap();
                assert_abs_diff_eq!(p_exact, out.probability, epsilon = 1e-10);
                total += p_exact;
                if let Some(collapsed) = out.collapsed {
                    let exact_fock = proj.to_fock(&policy).unwrap();
                    assert!(
                        fidelity(&exact_fock, &collapsed).unwrap() >= 1.0 - 1e-9,
                        "collapsed state mismatch for {class:?}"
                    );
                }
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn constructors_match_fock_constructors() {
        let policy = TruncationPolicy::default_for(5.0).unwrap();
        let amp = c(1.4, -0.3);

        let even = cat_superposition("m", amp, Parity::Even).unwrap();
        let even_fock = fock::cat_state("m", amp, Parity::Even, &policy).unwrap();
        assert!(fidelity(&even.to_fock(&policy).unwrap(), &even_fock).unwrap() >= 1.0 - 1e-10);

        let odd = cat_superposition("m", amp, Parity::Odd).unwrap();
        let odd_fock = fock::cat_state("m", amp, Parity::Odd, &policy).unwrap();
        assert!(fidelity(&odd.to_fock(&policy).unwrap(), &odd_fock).unwrap() >= 1.0 - 1e-10);

        let nze = nze_superposition("m", amp).unwrap();
        let nze_fock = fock::nze_state("m", amp, &policy).unwrap();
        assert!(fidelity(&nze.to_fock(&policy).unwrap(), &nze_fock).unwrap() >= 1.0 - 1e-10);

        // Closed-form normalizers: ⟨even cat|α⟩ = √((1+x²)/2) etc.
        let x = (-amp.norm_sqr()).exp();
        let coh = CoherentSuperposition::single_mode("m", &[(ONE, amp)]);
        assert_relative_eq!(
            even.overlap(&coh).unwrap().norm(),
            ((1.0 + x * x) / 2.0).sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            nze.overlap(&coh).unwrap().norm(),
            (1.0 - x) / 2.0f64.sqrt(),
            max_relative = 1e-12
        );

        assert!(cat_superposition("m", ZERO, Parity::Odd).is_err());
        assert!(nze_superposition("m", ZERO).is_err());
    }

    #[test]
    fn partial_inner_consistency() {
        let s = sample_superposition("a", 5)
            .tensor(&sample_superposition("b", 6))
            .unwrap();
        // Contracting over all modes reproduces the full overlap.
        let r = sample_superposition("a", 7)
            .tensor(&sample_superposition("b", 8))
            .unwrap();
        let scalar = s.partial_inner(&r).unwrap();
        assert_eq!(scalar.labels().len(), 0);
        let direct = r.overlap(&s).unwrap();
        let total: C64 = scalar.terms().iter().map(|t| t.coeff).sum();
        assert_abs_diff_eq!((total - direct).norm(), 0.0, epsilon = 1e-12);

        // Contracting a product state over one factor returns the other.
        let a = sample_superposition("a", 5);
        let b = sample_superposition("b", 6);
        let back = s.partial_inner(&a).unwrap();
        let ov = b.overlap(&back).unwrap();
        assert_abs_diff_eq!((ov - ONE).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_involution_is_exact() {
        let s = sample_superposition("m", 12);
        let twice = s
            .apply_phase("m", std::f64::consts::PI)
            .unwrap()
            .apply_phase("m", std::f64::consts::PI)
            .unwrap();
        for (t0, t1) in s.terms().iter().zip(twice.terms()) {
            assert_eq!(t0.amps, t1.amps, "labels restored bit-exactly");
            assert_eq!(t0.coeff, t1.coeff);
        }
    }

    #[test]
    fn merge_exact_collapses_identical_labels() {
        let s = CoherentSuperposition::single_mode(
            "m",
            &[(c(0.5, 0.0), c(1.0, 0.0)), (c(0.25, 0.0), c(1.0, 0.0)), (c(-0.75, 0.0), c(1.0, 0.0))],
        );
        let merged = s.merge_exact();
        assert!(merged.terms().is_empty(), "coefficients cancel exactly");
    }

    #[test]
    fn ecs_concurrence_limits() {
        // Orthogonal components with equal weights → maximally entangled.
        let far = 6.0;
        let pair = EcsPair {
            c1: c(0.5f64.sqrt(), 0.0),
            c2: c(-(0.5f64.sqrt()), 0.0),
            beta1: c(far, 0.0),
            gamma1: c(0.0, far),
            beta2: c(-far, 0.0),
            gamma2: c(0.0, -far),
        };
        assert_relative_eq!(ecs_concurrence(&pair).unwrap(), 1.0, epsilon = 1e-9);

        // Product state (both terms share the first-mode label) → 0.
        let product = EcsPair {
            c1: c(0.7, 0.0),
            c2: c(0.3, 0.2),
            beta1: c(1.0, 0.0),
            gamma1: c(0.5, 0.0),
            beta2: c(1.0, 0.0),
            gamma2: c(0.5, 0.0),
        };
        assert_abs_diff_eq!(ecs_concurrence(&product).unwrap(), 0.0, epsilon = 1e-12);
    }
}
