//! State-vector simulation of the interlaced 1-D cluster chain that merges
//! `k` phase-randomized qubits into one.
//!
//! Each step entangles the current qubit with the next input using
//! `CZ (H ⊗ I)` and measures the current qubit in the X basis, so no more
//! than two qubits are ever alive. The surviving qubit is `|+_θ⟩` with
//!
//! ```text
//! θ = Σ_l (-1)^{t_l} σ_l,   t_l = (s_l + s_{l+1} + ... + s_{k-1}) mod 2,   t_k = 0
//! ```
//!
//! which follows from the per-step law `θ' = σ_next + (-1)^s θ`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// A multiple of π/4, stored modulo 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Phase(u8);

impl Phase {
    pub const ZERO: Phase = Phase(0);

    pub fn from_eighths(k: i64) -> Self {
        Phase(k.rem_euclid(8) as u8)
    }

    /// Multiple of π/4 in `0..8`.
    pub fn eighths(self) -> u8 {
        self.0
    }

    pub fn radians(self) -> f64 {
        f64::from(self.0) * std::f64::consts::FRAC_PI_4
    }

    pub fn all() -> impl Iterator<Item = Phase> {
        (0..8).map(Phase)
    }
}

impl std::ops::Add for Phase {
    type Output = Phase;
    fn add(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 8)
    }
}

impl std::ops::Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase((8 - self.0) % 8)
    }
}

impl std::ops::Sub for Phase {
    type Output = Phase;
    fn sub(self, rhs: Phase) -> Phase {
        self + (-rhs)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}π/4", self.0)
    }
}

/// Amplitudes of a pure state; qubit 0 is the most significant index bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(Error::Domain(format!("{} amplitudes is not a power of two", amplitudes.len())));
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn qubits(&self) -> u32 {
        self.amplitudes.len().trailing_zeros()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let amplitudes = self.amplitudes.iter().flat_map(|a| other.amplitudes.iter().map(move |b| a * b)).collect();
        PureState { amplitudes }
    }
}

/// `(|0⟩ + e^{iσ}|1⟩) / √2`.
pub fn prepare_plus(sigma: Phase) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState { amplitudes: vec![Complex64::new(h, 0.0), Complex64::from_polar(h, sigma.radians())] }
}

/// Result of one coupling-and-measurement step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub outcome: bool,
    /// Remaining single qubit, renormalized.
    pub state: PureState,
    pub probability: f64,
}

/// Applies `CZ (H ⊗ I)` to a two-qubit state and projects qubit 0 onto
/// `|+⟩` (`outcome = false`) or `|−⟩` (`outcome = true`).
pub fn i1dc_step(state: &PureState, outcome: bool) -> Result<StepOutcome> {
    if state.qubits() != 2 {
        return Err(Error::Domain(format!("step expects 2 qubits, got {}", state.qubits())));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let a = &state.amplitudes;
    // H on qubit 0, then CZ flips the sign of |11⟩.
    let mut b = [(a[0] + a[2]) * h, (a[1] + a[3]) * h, (a[0] - a[2]) * h, (a[1] - a[3]) * h];
    b[3] = -b[3];
    let sign = if outcome { -1.0 } else { 1.0 };
    let post = [(b[0] + b[2] * sign) * h, (b[1] + b[3] * sign) * h];
    let probability = post[0].norm_sqr() + post[1].norm_sqr();
    if probability <= 1e-300 {
        return Err(Error::ZeroProbabilityBranch(u8::from(outcome)));
    }
    let scale = 1.0 / probability.sqrt();
    Ok(StepOutcome { outcome, state: PureState { amplitudes: vec![post[0] * scale, post[1] * scale] }, probability })
}

/// Where measurement outcomes come from.
#[derive(Debug, Clone, Copy)]
pub enum OutcomeSource<'a> {
    /// Take the given outcomes in order.
    Forced(&'a [bool]),
    /// Sample outcomes from the Born rule with a seeded generator.
    Seeded(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct I1dcTranscript {
    pub inputs: Vec<Phase>,
    pub outcomes: Vec<bool>,
    pub output_state: PureState,
    /// Probability of the observed outcome string.
    pub probability: f64,
    /// Largest deviation of any single step probability from 1/2.
    pub max_step_bias: f64,
    pub theta: Phase,
}

/// Runs the chain over `phases`.
pub fn i1dc_run(phases: &[Phase], source: OutcomeSource<'_>) -> Result<I1dcTranscript> {
    let (first, rest) =
        phases.split_first().ok_or_else(|| Error::Domain("at least one input qubit required".into()))?;
    if let OutcomeSource::Forced(bits) = source {
        if bits.len() != rest.len() {
            return Err(Error::LengthMismatch { expected: rest.len(), got: bits.len() });
        }
    }
    let mut rng = match source {
        OutcomeSource::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        OutcomeSource::Forced(_) => None,
    };
    let mut state = prepare_plus(*first);
    let mut outcomes = Vec::with_capacity(rest.len());
    let mut probability = 1.0;
    let mut max_step_bias: f64 = 0.0;
    for (i, &sigma) in rest.iter().enumerate() {
        let pair = state.tensor(&prepare_plus(sigma));
        let step = match (&source, rng.as_mut()) {
            (OutcomeSource::Forced(bits), _) => i1dc_step(&pair, bits[i])?,
            (_, Some(rng)) => {
                let plus = i1dc_step(&pair, false)?;
                if rng.random::<f64>() < plus.probability {
                    plus
                } else {
                    i1dc_step(&pair, true)?
                }
            }
            _ => unreachable!(),
        };
        probability *= step.probability;
        max_step_bias = max_step_bias.max((step.probability - 0.5).abs());
        outcomes.push(step.outcome);
        state = step.state;
    }
    let theta = theta_from_outcomes(phases, &outcomes)?;
    Ok(I1dcTranscript { inputs: phases.to_vec(), outcomes, output_state: state, probability, max_step_bias, theta })
}

/// Output phase computed by the client from its phases and the reported
/// outcomes.
pub fn theta_from_outcomes(phases: &[Phase], outcomes: &[bool]) -> Result<Phase> {
    let expected = phases.len().saturating_sub(1);
    if phases.is_empty() || outcomes.len() != expected {
        return Err(Error::LengthMismatch { expected, got: outcomes.len() });
    }
    Ok(suffix_parity_rule(phases, outcomes))
}

/// Signature of a rule mapping phases and outcomes to `θ`.
pub type ThetaRule = fn(&[Phase], &[bool]) -> Phase;

/// `t_l` is the parity of `s_l ... s_{k-1}`.
pub fn suffix_parity_rule(phases: &[Phase], outcomes: &[bool]) -> Phase {
    let mut theta = Phase::ZERO;
    let mut parity = false;
    for (l, &sigma) in phases.iter().enumerate().rev() {
        if l < outcomes.len() {
            parity ^= outcomes[l];
        }
        theta = theta + if parity { -sigma } else { sigma };
    }
    theta
}

/// A deliberately wrong rule (`t_l = s_{l-1}`, `t_1 = 0`) for mutation
/// checks of the verifier.
pub fn adjacent_outcome_rule(phases: &[Phase], outcomes: &[bool]) -> Phase {
    phases.iter().enumerate().fold(Phase::ZERO, |theta, (l, &sigma)| {
        let flip = l > 0 && outcomes.get(l - 1).copied().unwrap_or(false);
        theta + if flip { -sigma } else { sigma }
    })
}

/// Which phase tuples the verifier visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseSelection {
    /// All `8^k` tuples (only for `k <= MAX_EXHAUSTIVE_K`).
    Exhaustive,
    /// `trials` tuples drawn uniformly with a seeded generator.
    Random { trials: usize, seed: u64 },
}

pub const MAX_K: usize = 14;
pub const MAX_EXHAUSTIVE_K: usize = 5;
/// Minimum fidelity accepted between the simulated and predicted states.
pub const FIDELITY_TOLERANCE: f64 = 1e-10;
/// Allowed deviation of any step probability from 1/2.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyFailure {
    pub phases: Vec<u8>,
    pub outcomes: Vec<bool>,
    pub predicted_theta: u8,
    pub fidelity: f64,
    pub max_step_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub k: usize,
    pub phase_tuples: usize,
    /// Phase tuples times outcome strings.
    pub cases: usize,
    pub min_fidelity: f64,
    pub max_step_bias: f64,
    pub failures: Vec<VerifyFailure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `rule` against the simulator over every outcome branch of the
/// selected phase tuples.
pub fn verify_i1dc(k: usize, selection: PhaseSelection, rule: ThetaRule) -> Result<VerifyReport> {
    if !(1..=MAX_K).contains(&k) {
        return Err(Error::Domain(format!("k = {k} outside 1..={MAX_K}")));
    }
    let tuples: Vec<Vec<Phase>> = match selection {
        PhaseSelection::Exhaustive => {
            if k > MAX_EXHAUSTIVE_K {
                return Err(Error::Domain(format!("exhaustive phases need k <= {MAX_EXHAUSTIVE_K}")));
            }
            (0..8usize.pow(k as u32))
                .map(|mut code| {
                    (0..k)
                        .map(|_| {
                            let p = Phase::from_eighths((code % 8) as i64);
                            code /= 8;
                            p
                        })
                        .collect()
                })
                .collect()
        }
        PhaseSelection::Random { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..trials).map(|_| (0..k).map(|_| Phase::from_eighths(rng.random_range(0..8))).collect()).collect()
        }
    };
    let branches = 1usize << (k - 1);
    let per_tuple: Vec<Result<(f64, f64, Vec<VerifyFailure>)>> = tuples
        .par_iter()
        .map(|phases| {
            let mut min_fid: f64 = 1.0;
            let mut max_bias: f64 = 0.0;
            let mut failures = Vec::new();
            for code in 0..branches {
                let outcomes: Vec<bool> = (0..k - 1).map(|j| code >> j & 1 == 1).collect();
                let run = i1dc_run(phases, OutcomeSource::Forced(&outcomes))?;
                let predicted = rule(phases, &outcomes);
                let fidelity = prepare_plus(predicted).fidelity(&run.output_state);
                min_fid = min_fid.min(fidelity);
                max_bias = max_bias.max(run.max_step_bias);
                if fidelity < 1.0 - FIDELITY_TOLERANCE || run.max_step_bias > PROBABILITY_TOLERANCE {
                    failures.push(VerifyFailure {
                        phases: phases.iter().map(|p| p.eighths()).collect(),
                        outcomes,
                        predicted_theta: predicted.eighths(),
                        fidelity,
                        max_step_bias: run.max_step_bias,
                    });
                }
            }
            Ok((min_fid, max_bias, failures))
        })
        .collect();
    let mut report = VerifyReport {
        k,
        phase_tuples: tuples.len(),
        cases: tuples.len() * branches,
        min_fidelity: 1.0,
        max_step_bias: 0.0,
        failures: Vec::new(),
    };
    for item in per_tuple {
        let (fid, bias, failures) = item?;
        report.min_fidelity = report.min_fidelity.min(fid);
        report.max_step_bias = report.max_step_bias.max(bias);
        report.failures.extend(failures);
    }
    Ok(report)
}
