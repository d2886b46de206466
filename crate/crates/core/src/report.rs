//! End-to-end pipelines from a parity-check code and a received word to a
//! verified fractional solution, and the gap report that records whether the
//! hierarchy's value undercuts the injected error weight.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cosets::{select_lasserre_predicates, CosetError};
use crate::csp::{build_nearest_codeword, collapse_local, collapse_moment, stretch, brute_force_optimum, CspError, CspInstance};
use crate::ensembles::{EnsembleError, ParityCheckGraph};
use crate::lashier::{
    build_lasserre_solution, place_cosets, table_cosets, verify_lasserre, LasserreError, LasserreReport, LasserreSolution,
};
use crate::local::{LocalDistributionFamily, MomentMatrix};
use crate::pidist::{select_sa_predicates, PiError};
use crate::rational::{self, Rational};
use crate::rng::DetRng;
use crate::sahier::{
    build_sa_solution, lp_decode, sa_to_feldman, verify_family, DecodeResult, FamilyReport, FeldmanPoint, SaError,
    SaPredicateTable, SaSolution,
};

/// Placement attempts tried before a Lasserre construction gives up.
pub const PLACEMENT_ATTEMPTS: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Predicates(#[from] PiError),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error(transparent)]
    Sa(#[from] SaError),
    #[error(transparent)]
    Lasserre(#[from] LasserreError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl PipelineError {
    /// Errors caused by a size or budget cap rather than bad input or a
    /// failed construction.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            PipelineError::Csp(CspError::TooLarge(_))
                | PipelineError::Sa(SaError::TooLarge(_) | SaError::Budget { .. })
                | PipelineError::Lasserre(LasserreError::TooLarge(_) | LasserreError::TooManyEquations(_))
                | PipelineError::Ensemble(EnsembleError::TooManySubsets(_))
                | PipelineError::Predicates(PiError::TooManyAtoms(_))
        )
    }

    /// Errors caused by parameters outside the supported families.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            PipelineError::Ensemble(EnsembleError::Divisibility(..) | EnsembleError::Parameter(_))
                | PipelineError::Coset(CosetError::BadDegree(_) | CosetError::NotPowerOfTwo(_) | CosetError::NotPrimePower(_))
                | PipelineError::Predicates(PiError::Parameter(_) | PiError::Uncovered { .. })
                | PipelineError::Invalid(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hierarchy {
    #[serde(rename = "SA")]
    Sa,
    Lasserre,
    #[serde(rename = "FeldmanLP")]
    FeldmanLp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub n: usize,
    pub d_v: usize,
    pub d_c: usize,
    pub code_seed: Option<u64>,
    pub error_seed: Option<u64>,
}

impl InstanceDescriptor {
    pub fn of(g: &ParityCheckGraph) -> Self {
        InstanceDescriptor {
            n: g.n,
            d_v: g.d_v,
            d_c: g.d_c,
            code_seed: g.seed,
            error_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub instance: InstanceDescriptor,
    pub hierarchy: Hierarchy,
    pub rounds: usize,
    #[serde(with = "rational::serde_str")]
    pub value_normalized: Rational,
    #[serde(with = "rational::serde_str")]
    pub value_absolute: Rational,
    pub integral_optimum: Option<usize>,
    /// Weight of the injected error pattern.
    pub errors: usize,
    pub verified: bool,
    /// The transmitted word scores `errors`; a relaxation scoring less cannot
    /// single it out.
    pub decoder_fails: bool,
    pub version: String,
}

impl GapReport {
    pub fn new(
        instance: InstanceDescriptor,
        hierarchy: Hierarchy,
        rounds: usize,
        value_absolute: Rational,
        errors: usize,
        verified: bool,
    ) -> Self {
        let n = Rational::from_integer(instance.n.into());
        let value_normalized = if instance.n == 0 { Rational::zero() } else { &value_absolute / &n };
        let mut r = GapReport {
            instance,
            hierarchy,
            rounds,
            value_normalized,
            value_absolute,
            integral_optimum: None,
            errors,
            verified,
            decoder_fails: false,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        r.decoder_fails = r.expected_verdict();
        r
    }

    pub fn expected_verdict(&self) -> bool {
        self.value_absolute < Rational::from_integer(self.errors.into())
    }

    /// The stored verdict agrees with the stored value, error count and `n`.
    pub fn consistent(&self) -> bool {
        let n = Rational::from_integer(self.instance.n.into());
        self.decoder_fails == self.expected_verdict() && (self.instance.n == 0 || &self.value_normalized * &n == self.value_absolute)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Invalid(e.to_string()))
    }
}

/// A uniformly random error pattern of the given weight.
pub fn inject_errors(n: usize, weight: usize, seed: u64) -> Result<Vec<u8>, PipelineError> {
    if weight > n {
        return Err(PipelineError::Invalid(format!("error weight {weight} exceeds length {n}")));
    }
    let mut word = vec![0u8; n];
    for i in DetRng::new(seed).substream("errors").sample_subset(n, weight) {
        word[i] = 1;
    }
    Ok(word)
}

fn weight(word: &[u8]) -> usize {
    word.iter().filter(|&&b| b != 0).count()
}

#[derive(Debug, Clone)]
pub struct SaConstruction {
    pub instance: CspInstance,
    pub stretched: CspInstance,
    pub solution: SaSolution,
    pub report: FamilyReport,
    pub collapsed: LocalDistributionFamily,
    pub collapsed_report: FamilyReport,
    pub feldman: FeldmanPoint,
    pub gap: GapReport,
}

impl SaConstruction {
    pub fn ok(&self) -> bool {
        self.report.ok() && self.collapsed_report.ok() && self.feldman.violation.is_none()
    }
}

/// Nearest Codeword for `received` against the all-zero transmission,
/// stretched, solved at `t` rounds, verified, collapsed and mapped to the
/// Feldman LP.
pub fn construct_sa(g: &ParityCheckGraph, received: &[u8], t: usize, budget: usize) -> Result<SaConstruction, PipelineError> {
    let preds = select_sa_predicates(g.d_c)?;
    let table = SaPredicateTable::from_sa(&preds);
    let instance = build_nearest_codeword(g, received)?;
    let (stretched, phi) = stretch(&instance, preds.q)?;
    let solution = build_sa_solution(&stretched, &table, t, budget)?;
    let report = verify_family(&solution.family, &stretched);
    let collapsed = collapse_local(&solution.family, &phi)?;
    let collapsed_report = verify_family(&collapsed, &instance);
    let feldman = sa_to_feldman(&collapsed, g, received)?;
    let verified = report.ok() && collapsed_report.ok() && feldman.violation.is_none();
    let gap = GapReport::new(
        InstanceDescriptor::of(g),
        Hierarchy::Sa,
        t,
        collapsed_report.value.clone(),
        weight(received),
        verified,
    );
    Ok(SaConstruction {
        instance,
        stretched,
        solution,
        report,
        collapsed,
        collapsed_report,
        feldman,
        gap,
    })
}

#[derive(Debug, Clone)]
pub struct LasserreConstruction {
    pub instance: CspInstance,
    pub coset_instance: CspInstance,
    pub placement_attempt: usize,
    pub solution: LasserreSolution,
    pub report: LasserreReport,
    pub collapsed: MomentMatrix,
    pub collapsed_report: LasserreReport,
    pub gap: GapReport,
}

impl LasserreConstruction {
    pub fn ok(&self) -> bool {
        self.report.ok() && self.collapsed_report.ok()
    }
}

pub fn construct_lasserre(g: &ParityCheckGraph, received: &[u8], t: usize, seed: u64) -> Result<LasserreConstruction, PipelineError> {
    let preds = select_lasserre_predicates(g.d_c)?;
    let instance = build_nearest_codeword(g, received)?;
    let (stretched, phi) = stretch(&instance, preds.q)?;
    let placement = place_cosets(&stretched, &table_cosets(&preds), t, seed, PLACEMENT_ATTEMPTS)?;
    let solution = build_lasserre_solution(&placement.instance, t)?;
    let report = verify_lasserre(&solution.moment, &placement.instance);
    let collapsed = collapse_moment(&solution.moment, &phi)?;
    let collapsed_report = verify_lasserre(&collapsed, &instance);
    let gap = GapReport::new(
        InstanceDescriptor::of(g),
        Hierarchy::Lasserre,
        t,
        collapsed_report.value.clone(),
        weight(received),
        report.ok() && collapsed_report.ok(),
    );
    Ok(LasserreConstruction {
        instance,
        coset_instance: placement.instance,
        placement_attempt: placement.attempt,
        solution,
        report,
        collapsed,
        collapsed_report,
        gap,
    })
}

/// Exact LP decoding as a gap report; `decoder_fails` is the LP verdict's
/// counterpart (the value undercuts the error weight).
pub fn decode_report(g: &ParityCheckGraph, received: &[u8]) -> Result<(DecodeResult, GapReport), PipelineError> {
    let d = lp_decode(g, received)?;
    let n = Rational::from_integer(g.n.into());
    let gap = GapReport::new(InstanceDescriptor::of(g), Hierarchy::FeldmanLp, 0, &d.value * n, weight(received), true);
    Ok((d, gap))
}

/// Attaches the brute-force optimum of the binary instance when it is small
/// enough to search.
pub fn with_integral_optimum(mut gap: GapReport, instance: &CspInstance) -> GapReport {
    if let Ok(Some(opt)) = brute_force_optimum(instance) {
        gap.integral_optimum = Some(opt.ones);
    }
    gap
}
