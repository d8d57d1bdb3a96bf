//! The inductive construction: profiles, rigidity-set policies and stages.
//!
//! Stage `n` picks `S_n = S_{n-1} ∪ F_{n-1} ∪ B_{n-1}`, a level modulus whose
//! kernel avoids `S_n^{3 M_n}`, the staircase tables `φ_n`, `ψ_n`, and finally
//! the rigidity set `F_n ⊂ H_n ∖ {e}` used by the next stage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind, GroupSpec};
use crate::quotient::{
    element_order_in_quotient, injectivity_radius_check, kernel_search, separate, separation_bound_certificate,
    smallest_multiple_exceeding, FiniteQuotient, QuotientElement, SeparationCertificate,
};
use crate::rational::{self, format_rational, Rational};
use crate::staircase::{self, phi_table_and_spheres, psi_from_phi, StageParams, StaircaseTable};
use crate::topology::{self, Syndeticity, ZeroWindows};

/// How `M_n` grows with the stage index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepRule {
    /// `M_n = 10^(n-1)`.
    Paper,
    /// `M_n = 3^(n-1)`.
    Desk,
    /// Explicit `M_1, M_2, ...`.
    Custom(Vec<u64>),
}

impl StepRule {
    pub fn steps(&self, n: usize) -> Result<u64> {
        if n == 0 {
            return Err(Error::Config("stages are numbered from 1".into()));
        }
        let pow = |base: u64| {
            base.checked_pow(n as u32 - 1).ok_or_else(|| Error::Config(format!("M_{n} does not fit in 64 bits")))
        };
        match self {
            StepRule::Paper => pow(10),
            StepRule::Desk => pow(3),
            StepRule::Custom(v) => v
                .get(n - 1)
                .copied()
                .ok_or_else(|| Error::Config(format!("custom profile lists {} values, M_{n} is needed", v.len()))),
        }
    }

    /// Custom lists must be strictly increasing with `Σ 1/(M_n + 1) < 1`.
    pub fn validate(&self) -> Result<()> {
        if let StepRule::Custom(v) = self {
            if v.is_empty() || v[0] == 0 {
                return Err(Error::Config("custom profile needs positive values".into()));
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("custom profile must be strictly increasing".into()));
            }
            let sum: Rational = v.iter().map(|&m| rational::step(m)).sum();
            if sum >= rational::one() {
                return Err(Error::Config(format!("custom profile has Σ 1/(M+1) = {} >= 1", format_rational(&sum))));
            }
        }
        Ok(())
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::Paper => write!(f, "paper"),
            StepRule::Desk => write!(f, "desk"),
            StepRule::Custom(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

impl std::str::FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(StepRule::Paper),
            "desk" => Ok(StepRule::Desk),
            _ => {
                let list = s.strip_prefix("custom:").ok_or_else(|| Error::Config(format!("unknown profile {s:?}")))?;
                let v = list
                    .split(',')
                    .map(|x| x.trim().parse::<u64>().map_err(|_| Error::Config(format!("bad value {x:?} in profile"))))
                    .collect::<Result<Vec<_>>>()?;
                let rule = StepRule::Custom(v);
                rule.validate()?;
                Ok(rule)
            }
        }
    }
}

/// Step rule plus resource limits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    #[serde(with = "rule_text")]
    pub rule: StepRule,
    /// Largest BFS ball stored for a staircase table.
    pub node_cap: u64,
    /// Largest generator ball scanned when looking for kernel elements.
    pub kernel_search_cap: u64,
    /// Target size of a default rigidity set.
    pub kernel_count: usize,
    pub allow_empty_f: bool,
    /// When a predicate is never met, fall back to the default policy.
    pub predicate_fallback: bool,
    /// Tables with more entries are stored as a digest only.
    pub table_inline_cap: u64,
    /// Largest quotient enumerated for the syndeticity radius.
    pub syndeticity_cap: u64,
    /// Generator-ball budget when looking for zero-window translates.
    pub lift_search_cap: u64,
    /// Number of zero-window cosets kept as witnesses.
    pub zero_window_witnesses: usize,
}

mod rule_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::StepRule;

    pub fn serialize<S: Serializer>(r: &StepRule, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<StepRule, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

impl Profile {
    pub fn new(rule: StepRule) -> Self {
        Profile {
            rule,
            node_cap: DEFAULT_NODE_CAP,
            kernel_search_cap: 2_000_000,
            kernel_count: 2,
            allow_empty_f: false,
            predicate_fallback: false,
            table_inline_cap: 250_000,
            syndeticity_cap: 2_000_000,
            lift_search_cap: 1_000_000,
            zero_window_witnesses: 8,
        }
    }

    pub fn paper() -> Self {
        Self::new(StepRule::Paper)
    }

    pub fn desk() -> Self {
        Self::new(StepRule::Desk)
    }

    pub fn with_node_cap(mut self, cap: u64) -> Self {
        self.node_cap = cap;
        self
    }

    pub fn steps(&self, n: usize) -> Result<u64> {
        self.rule.steps(n)
    }

    /// `1 / (M_n + 1)`.
    pub fn step_height(&self, n: usize) -> Result<Rational> {
        Ok(rational::step(self.steps(n)?))
    }
}

/// A decidable condition on group elements, standing in for a target
/// region that rigidity sets should keep meeting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementPredicate {
    /// The first nonzero entry of the payload relative to the identity is
    /// positive. For integers this is `g > 0`, for free words a leading
    /// positive letter, for matrices the first nonzero entry of `g - I` in
    /// row-major order.
    Positive,
    Negative,
    /// Free words starting with the given reduced prefix.
    StartsWith(Vec<i8>),
}

fn leading_sign(g: &GroupElement) -> i64 {
    let lead = |v: &[i64]| v.iter().copied().find(|&x| x != 0).map_or(0, i64::signum);
    match g {
        GroupElement::Int(t) => t.signum(),
        GroupElement::Word(w) => w.first().map_or(0, |l| *l as i64).signum(),
        GroupElement::Heis([x, y, z]) => lead(&[*x, *z, *y]),
        GroupElement::Mat2([a, b, c, d]) => lead(&[a - 1, *b, *c, d - 1]),
    }
}

impl ElementPredicate {
    pub fn matches(&self, g: &GroupElement) -> bool {
        match self {
            ElementPredicate::Positive => leading_sign(g) > 0,
            ElementPredicate::Negative => leading_sign(g) < 0,
            ElementPredicate::StartsWith(prefix) => match g {
                GroupElement::Word(w) => w.starts_with(prefix),
                _ => false,
            },
        }
    }
}

impl fmt::Display for ElementPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementPredicate::Positive => write!(f, "positive"),
            ElementPredicate::Negative => write!(f, "negative"),
            ElementPredicate::StartsWith(p) => write!(f, "starts-with:{}", GroupElement::Word(p.clone())),
        }
    }
}

impl std::str::FromStr for ElementPredicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "positive" => Ok(ElementPredicate::Positive),
            "negative" => Ok(ElementPredicate::Negative),
            other => match other.strip_prefix("starts-with:") {
                Some(w) => match GroupElement::word(w)? {
                    GroupElement::Word(letters) if !letters.is_empty() => Ok(ElementPredicate::StartsWith(letters)),
                    _ => Err(Error::Config(format!("empty prefix in {other:?}"))),
                },
                None => Err(Error::Config(format!("unknown predicate {other:?}"))),
            },
        }
    }
}

/// Parses predicates, one per line; blank lines and `#` comments are skipped.
pub fn parse_predicate_list(text: &str) -> Result<Vec<ElementPredicate>> {
    let preds = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if preds.is_empty() {
        return Err(Error::Config("predicate list is empty".into()));
    }
    Ok(preds)
}

/// Parses an element in its certificate text form: a decimal integer, a
/// free word, or a JSON row-major matrix.
pub fn parse_element(spec: &GroupSpec, text: &str) -> Result<GroupElement> {
    let text = text.trim();
    let g = if text.starts_with('[') {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad element {text:?}: {e}")))?
    } else {
        serde_json::from_value(serde_json::Value::String(text.to_string()))
            .map_err(|e| Error::Config(format!("bad element {text:?}: {e}")))?
    };
    if !spec.contains(&g) {
        return Err(Error::Config(format!("{text} is not an element of {}", spec.label())));
    }
    Ok(g)
}

/// How `F_n` is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// Smallest kernel elements of the generator ball.
    Default { count: usize },
    /// The powers `g0^{k_n}` with `k_n` the order of `g0` in the quotient.
    Power(GroupElement),
    /// Kernel elements meeting predicate `n mod len`, round robin.
    Predicates(Vec<ElementPredicate>),
}

impl Policy {
    pub fn describe(&self) -> String {
        match self {
            Policy::Default { count } => format!("default:{count}"),
            Policy::Power(g) => format!("power:{g}"),
            Policy::Predicates(p) => {
                let parts: Vec<String> = p.iter().map(ToString::to_string).collect();
                format!("predicates:{}", parts.join(","))
            }
        }
    }

    /// Inverse of [`Policy::describe`]. Predicate lists are comma separated.
    pub fn parse(spec: &GroupSpec, text: &str) -> Result<Self> {
        if text == "default" {
            return Ok(Policy::Default { count: 2 });
        }
        if let Some(c) = text.strip_prefix("default:") {
            let count = c.parse().map_err(|_| Error::Config(format!("bad count in {text:?}")))?;
            return Ok(Policy::Default { count });
        }
        if let Some(e) = text.strip_prefix("power:") {
            return Ok(Policy::Power(parse_element(spec, e)?));
        }
        if let Some(list) = text.strip_prefix("predicates:") {
            return Ok(Policy::Predicates(parse_predicate_list(&list.replace(',', "\n"))?));
        }
        Err(Error::Config(format!("unknown policy {text:?}")))
    }
}

/// Where the elements of a rigidity set came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum FSource {
    /// Found in the generator ball.
    KernelSearch,
    /// Nothing in the searched ball; powers of `base` instead.
    GeneratorPower {
        base: GroupElement,
    },
    Power {
        exponent: u64,
    },
    Predicate {
        index: usize,
        predicate: String,
        hit: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FSelection {
    pub elements: Vec<GroupElement>,
    pub source: FSource,
}

/// `{g^k, g^-k}` with `k` the order of `g` in `q`.
pub(crate) fn power_pair(q: &FiniteQuotient, g: &GroupElement) -> Result<(u64, Vec<GroupElement>)> {
    let spec = q.spec();
    let k = element_order_in_quotient(q, g)?;
    let k_signed = i64::try_from(k).map_err(|_| Error::Overflow("power exponent"))?;
    let p = spec.pow(g, k_signed)?;
    if spec.is_identity(&p) {
        return Err(Error::Precondition(format!("{g} has finite order dividing {k}")));
    }
    Ok((k, spec.symmetrize(&[p])?))
}

/// Candidates whose quotient-order powers replace an unsuccessful kernel
/// search: central generators and generator commutators first, then the
/// remaining generators. A central rigidity set adds a single commuting
/// direction to the next stage's Cayley balls.
fn fallback_candidates(spec: &GroupSpec) -> Result<Vec<GroupElement>> {
    let gens = spec.generators();
    let mut candidates = gens.to_vec();
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            let ab = spec.compose(a, b)?;
            let ba = spec.compose(b, a)?;
            candidates.push(spec.compose(&ab, &spec.inverse(&ba)?)?);
        }
    }
    candidates.retain(|c| !spec.is_identity(c));
    let mut central = Vec::new();
    let mut other = Vec::new();
    for c in candidates {
        let mut commutes = true;
        for g in gens {
            if spec.compose(&c, g)? != spec.compose(g, &c)? {
                commutes = false;
                break;
            }
        }
        if commutes {
            central.push(c);
        } else if gens.contains(&c) {
            other.push(c);
        }
    }
    central.extend(other);
    Ok(central)
}

/// `{c^k, c^-k}` for the first fallback candidate `c` of infinite order.
fn fallback_selection(q: &FiniteQuotient) -> Result<FSelection> {
    for base in fallback_candidates(q.spec())? {
        match power_pair(q, &base) {
            Ok((_, elements)) => return Ok(FSelection { elements, source: FSource::GeneratorPower { base } }),
            Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Stage { stage: q.level(), reason: "no fallback element of infinite order".into() })
}

/// Chooses `F_n` inside `ker π_n ∖ {e}` for the stage with quotient `q`.
pub fn policy_select_f(q: &FiniteQuotient, n: usize, policy: &Policy, profile: &Profile) -> Result<FSelection> {
    let spec = q.spec();
    let default = |count: usize| -> Result<FSelection> {
        let found = kernel_search(q, u32::MAX, count, profile.kernel_search_cap, |_| true)?;
        if !found.is_empty() {
            return Ok(FSelection { elements: found, source: FSource::KernelSearch });
        }
        fallback_selection(q)
    };
    let selection = match policy {
        Policy::Default { count } => default(*count)?,
        Policy::Power(g0) => {
            if spec.is_identity(g0) {
                return Err(Error::Precondition("power policy needs g0 != e".into()));
            }
            let (exponent, elements) = power_pair(q, g0)?;
            FSelection { elements, source: FSource::Power { exponent } }
        }
        Policy::Predicates(preds) => {
            let index = n % preds.len();
            let pred = &preds[index];
            let hits = kernel_search(q, u32::MAX, 1, profile.kernel_search_cap, |g| pred.matches(g))?;
            if !hits.is_empty() {
                FSelection {
                    elements: hits,
                    source: FSource::Predicate { index, predicate: pred.to_string(), hit: true },
                }
            } else if profile.predicate_fallback {
                let mut sel = default(profile.kernel_count)?;
                sel.source = FSource::Predicate { index, predicate: pred.to_string(), hit: false };
                sel
            } else {
                return Err(Error::Stage {
                    stage: n,
                    reason: format!("no kernel element satisfies {pred} within the search cap"),
                });
            }
        }
    };
    if selection.elements.is_empty() && !profile.allow_empty_f {
        return Err(Error::Stage { stage: n, reason: "empty rigidity set".into() });
    }
    Ok(selection)
}

/// One verified relation, with the exact values compared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: String,
    pub relation: String,
    pub bound: String,
    pub passed: bool,
    /// Informational checks do not affect the conclusions.
    pub gating: bool,
}

impl Check {
    fn rational(name: String, value: Rational, relation: &str, bound: Rational, gating: bool) -> Self {
        let passed = match relation {
            "<" => value < bound,
            "<=" => value <= bound,
            "==" => value == bound,
            ">=" => value >= bound,
            _ => false,
        };
        Check {
            name,
            value: format_rational(&value),
            relation: relation.into(),
            bound: format_rational(&bound),
            passed,
            gating,
        }
    }

    fn holds(name: impl Into<String>, value: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            value: value.into(),
            relation: "holds".into(),
            bound: "true".into(),
            passed,
            gating: true,
        }
    }
}

/// Everything recorded for one stage.
#[derive(Debug, Clone)]
pub struct StageCertificate {
    pub params: StageParams,
    pub phi: StaircaseTable,
    pub psi: StaircaseTable,
    pub separation: SeparationCertificate,
    pub spheres: Vec<bool>,
    pub zero_windows: ZeroWindows,
    pub syndeticity: Syndeticity,
    /// `F_n`, chosen in this stage's kernel for the next stage.
    pub f_next: Vec<GroupElement>,
    pub f_source: FSource,
    pub checks: Vec<Check>,
}

impl StageCertificate {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn quotient(&self) -> &FiniteQuotient {
        &self.params.quotient
    }

    pub fn all_gating_passed(&self) -> bool {
        self.checks.iter().filter(|c| c.gating).all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `S_n` from the previous stage (or `{e} ∪ generators` at stage one).
pub fn stage_set(spec: &GroupSpec, previous: Option<&StageCertificate>, cap: u64) -> Result<Vec<GroupElement>> {
    let mut set = vec![spec.identity()];
    match previous {
        None => set.extend_from_slice(spec.generators()),
        Some(prev) => {
            set.extend_from_slice(&prev.params.set);
            set.extend_from_slice(&prev.f_next);
            set.extend(spec.generator_ball(prev.n() as u32, cap)?.into_elements());
        }
    }
    spec.symmetrize(&set)
}

/// Modulus for stage `n`: the separating modulus of `S_n`, enlarged to the
/// smallest multiple of the parent that certifies `S_n^{3 M_n} ∩ H_n = {e}`.
pub fn stage_modulus(
    spec: &GroupSpec,
    set: &[GroupElement],
    steps: u64,
    parent: u64,
    n: usize,
) -> Result<(u64, SeparationCertificate)> {
    let exponent = 3 * steps;
    let first = separate(spec, set, parent, n)?.quotient.modulus();
    let cert = separation_bound_certificate(spec, set, exponent, first)?;
    if cert.holds {
        return Ok((first, cert));
    }
    let bound = cert.entry_bound.ok_or_else(|| {
        Error::resource(
            format!("modulus for stage {n} (the entry bound of S_{n}^{exponent} exceeds 128 bits)"),
            crate::quotient::MAX_MODULUS,
        )
    })?;
    let twice = bound.checked_mul(2).ok_or(Error::Overflow("separation bound"))?;
    let m = smallest_multiple_exceeding(parent, twice).map_err(|_| {
        Error::resource(format!("modulus for stage {n} (needs more than {twice})"), crate::quotient::MAX_MODULUS)
    })?;
    let cert = separation_bound_certificate(spec, set, exponent, m)?;
    debug_assert!(cert.holds);
    Ok((m, cert))
}

/// Runs one inductive step on top of `previous`.
pub fn build_stage(
    spec: &GroupSpec,
    previous: &[StageCertificate],
    profile: &Profile,
    policy: &Policy,
) -> Result<StageCertificate> {
    let n = previous.len() + 1;
    let prev = previous.last();
    let steps = profile.steps(n)?;
    let parent = prev.map_or(1, |p| p.quotient().modulus());
    let set = stage_set(spec, prev, profile.node_cap)?;
    let (modulus, separation) = stage_modulus(spec, &set, steps, parent, n)?;
    let quotient = FiniteQuotient::new(spec, modulus, n, parent)?;
    let params = StageParams { n, steps, set, quotient, f_prev: prev.map(|p| p.f_next.clone()).unwrap_or_default() };
    let (phi, spheres) = phi_table_and_spheres(&params, profile.node_cap)?;
    let psi = psi_from_phi(&phi, prev.map(|p| &p.psi))?;
    let zero_windows = topology::zero_window_cosets(spec, &params, &psi, n as u32 - 1, profile)?;
    let syndeticity = topology::syndeticity_for_stage(&params, &psi, &zero_windows, profile)?;
    let selection = policy_select_f(&params.quotient, n, policy, profile)?;

    let mut stage = StageCertificate {
        params,
        phi,
        psi,
        separation,
        spheres,
        zero_windows,
        syndeticity,
        f_next: selection.elements,
        f_source: selection.source,
        checks: Vec::new(),
    };
    stage.checks = stage_checks(spec, &stage, previous, profile, &staircase::lipschitz_defect)?;
    Ok(stage)
}

/// Signature of a Lipschitz-defect evaluator.
pub type DefectFn<'a> = &'a dyn Fn(&StaircaseTable, &GroupElement) -> Result<Rational>;

/// Recomputes every recorded relation of a stage from its tables and the
/// rigidity sets of earlier stages.
pub fn stage_checks(
    spec: &GroupSpec,
    stage: &StageCertificate,
    previous: &[StageCertificate],
    profile: &Profile,
    defect: DefectFn<'_>,
) -> Result<Vec<Check>> {
    let p = &stage.params;
    let n = p.n;
    let q = &p.quotient;
    let mut checks = Vec::new();

    checks.push(Check {
        name: "nesting".into(),
        value: q.modulus().to_string(),
        relation: "divisible-by".into(),
        bound: q.parent_modulus().to_string(),
        passed: q.modulus().is_multiple_of(q.parent_modulus()),
        gating: true,
    });
    let sep = separation_bound_certificate(spec, &p.set, 3 * p.steps, q.modulus())?;
    checks.push(Check {
        name: "separation".into(),
        value: sep.entry_bound.map_or("overflow".into(), |e| (2 * e).to_string()),
        relation: "<".into(),
        bound: q.modulus().to_string(),
        passed: sep.holds,
        gating: true,
    });
    let inj = injectivity_radius_check(q, &p.set, p.steps as u32, 0)?;
    checks.push(Check::holds(
        "injectivity-radius",
        if inj.by_certificate { "by-certificate" } else { "enumerated" },
        inj.injective,
    ));
    let nonempty = stage.spheres.iter().filter(|b| **b).count();
    checks.push(Check::holds(
        "sphere-nonempty",
        format!("{nonempty}/{}", stage.spheres.len()),
        nonempty == stage.spheres.len(),
    ));
    checks.push(Check::rational("psi-at-identity".into(), stage.psi.value(&q.identity()), "==", rational::one(), true));

    if let Some(prev) = previous.last() {
        let monotone = stage.psi.support().all(|(k, v)| *v <= prev.psi.value(&q.reduce_to(k, q.parent_modulus())));
        checks.push(Check::holds("monotone-chain", if monotone { "psi_n <= psi_{n-1}" } else { "violated" }, monotone));
        let height = profile.step_height(n)?;
        let strict = Rational::new(1, p.steps as i64);
        for s in &p.set {
            if spec.is_identity(s) {
                continue;
            }
            let d = defect(&stage.phi, s)?;
            checks.push(Check::rational(format!("phi-defect[{s}]"), d, "<=", height, true));
            checks.push(Check::rational(format!("phi-defect-strict[{s}]"), d, "<", strict, true));
        }
    }

    for (idx, earlier) in previous.iter().enumerate() {
        let i = idx + 1;
        let derived = profile.step_height(i + 1)?;
        // Two readings of the telescoped bound: Σ_{j=i}^{n} 1/M_{j+1} and
        // Σ_{j=i+1}^{n} 1/M_j.
        let mut sum_a = rational::zero();
        for j in i..=n {
            sum_a += Rational::new(1, profile.steps(j + 1)? as i64);
        }
        let mut sum_b = rational::zero();
        for j in (i + 1)..=n {
            sum_b += Rational::new(1, profile.steps(j)? as i64);
        }
        for s in &earlier.f_next {
            if !p.set.contains(s) {
                return Err(Error::Stage { stage: n, reason: format!("{s} from F_{i} is missing from S_{n}") });
            }
            let d = defect(&stage.psi, s)?;
            checks.push(Check::rational(format!("rigidity-defect[F{i}:{s}]"), d, "<=", derived, true));
            checks.push(Check::rational(format!("telescoped-a[F{i}:{s}]"), d, "<", sum_a, false));
            checks.push(Check::rational(format!("telescoped-b[F{i}:{s}]"), d, "<", sum_b, false));
        }
    }

    let zw = &stage.zero_windows;
    checks.push(Check {
        name: "zero-windows".into(),
        value: zw.witnesses.len().to_string(),
        relation: ">=".into(),
        bound: "1".into(),
        passed: !zw.witnesses.is_empty(),
        gating: true,
    });

    let id = q.identity();
    let in_kernel = stage.f_next.iter().all(|g| !spec.is_identity(g) && q.project(g).is_ok_and(|r| r == id));
    checks.push(Check::holds("f-in-kernel", format!("{} elements", stage.f_next.len()), in_kernel));
    let symmetric = stage.f_next.iter().all(|g| spec.inverse(g).is_ok_and(|h| stage.f_next.contains(&h)));
    checks.push(Check::holds("f-symmetric", symmetric.to_string(), symmetric));
    if let FSource::Predicate { hit, predicate, .. } = &stage.f_source {
        checks.push(Check::holds(format!("predicate-hit[{predicate}]"), hit.to_string(), *hit));
    }
    Ok(checks)
}

/// A group, a profile, a policy and the stages built so far.
#[derive(Debug, Clone)]
pub struct Construction {
    pub group: GroupSpec,
    pub profile: Profile,
    pub policy: Policy,
    pub stages: Vec<StageCertificate>,
}

impl Construction {
    pub fn new(group: GroupSpec, profile: Profile, policy: Policy) -> Result<Self> {
        profile.rule.validate()?;
        if profile.node_cap == 0 {
            return Err(Error::Config("node cap must be positive".into()));
        }
        if let Policy::Power(g) = &policy {
            if !group.contains(g) {
                return Err(Error::Config(format!("{g} is not an element of {}", group.label())));
            }
        }
        Ok(Construction { group, profile, policy, stages: Vec::new() })
    }

    /// Builds `count` stages from scratch.
    pub fn build(group: GroupSpec, profile: Profile, policy: Policy, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("at least one stage is required".into()));
        }
        // The last stage's error bound uses M_{n+1}.
        profile.steps(count + 1)?;
        let mut c = Self::new(group, profile, policy)?;
        for _ in 0..count {
            c.push_stage()?;
        }
        Ok(c)
    }

    pub fn push_stage(&mut self) -> Result<&StageCertificate> {
        let stage = build_stage(&self.group, &self.stages, &self.profile, &self.policy)?;
        self.stages.push(stage);
        Ok(self.stages.last().expect("just pushed"))
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn deepest(&self) -> Option<&StageCertificate> {
        self.stages.last()
    }

    /// `ε_n = 1/(M_{n+1} + 1)` for the deepest stage `n`.
    pub fn error_bound(&self) -> Result<Rational> {
        self.profile.step_height(self.depth() + 1)
    }

    /// Stage index `i` with `s ∈ F_i`.
    pub fn rigidity_index(&self, s: &GroupElement) -> Option<usize> {
        self.stages.iter().position(|st| st.f_next.contains(s)).map(|i| i + 1)
    }

    /// Value of `ψ_n` at `g` for stage `n` (1-based).
    pub fn psi_value(&self, n: usize, g: &GroupElement) -> Result<Rational> {
        self.stages[n - 1].psi.value_of(g)
    }

    pub fn quotient_residue(&self, n: usize, g: &GroupElement) -> Result<QuotientElement> {
        self.stages[n - 1].quotient().project(g)
    }
}

/// Kind-specific note for summaries.
pub fn group_description(spec: &GroupSpec) -> &'static str {
    match spec.kind() {
        GroupKind::IntegerLine => "integers",
        GroupKind::Free { .. } => "free group (Sanov embedding)",
        GroupKind::Heisenberg3 => "integral Heisenberg group",
        GroupKind::Sl2z => "SL(2, Z)",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_rules() {
        assert_eq!(StepRule::Paper.steps(3).unwrap(), 100);
        assert_eq!(StepRule::Desk.steps(4).unwrap(), 27);
        assert!(StepRule::Desk.steps(0).is_err());
        assert!(StepRule::Paper.steps(21).is_err());
        let custom: StepRule = "custom:2, 5,9".parse().unwrap();
        assert_eq!(custom.steps(2).unwrap(), 5);
        assert!(custom.steps(4).is_err());
        for text in ["paper", "desk", "custom:2,5,9"] {
            assert_eq!(text.parse::<StepRule>().unwrap().to_string(), text);
        }
        // 1/2 + 1/3 + 1/4 > 1.
        assert!("custom:1,2,3".parse::<StepRule>().is_err());
        assert!("custom:0,4".parse::<StepRule>().is_err());
        assert!("custom:4,x".parse::<StepRule>().is_err());
        assert!("tall".parse::<StepRule>().is_err());
    }

    #[test]
    fn profile_serde_keeps_rule_text() {
        let p = Profile::new("custom:2,5,9".parse().unwrap()).with_node_cap(123);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["rule"], "custom:2,5,9");
        assert_eq!(serde_json::from_value::<Profile>(v).unwrap(), p);
        assert_eq!(Profile::paper().step_height(2).unwrap(), Rational::new(1, 11));
    }

    #[test]
    fn policy_text_round_trip() {
        let spec = GroupSpec::sl2z();
        for text in ["default:3", "power:[1,1,0,1]", "predicates:positive,starts-with:ab"] {
            assert_eq!(Policy::parse(&spec, text).unwrap().describe(), text);
        }
        assert_eq!(Policy::parse(&spec, "default").unwrap(), Policy::Default { count: 2 });
        assert!(Policy::parse(&spec, "default:many").is_err());
        assert!(Policy::parse(&spec, "power:[2,0,0,1]").is_err());
    }

    #[test]
    fn central_candidates_come_first() {
        let heis = GroupSpec::heisenberg3();
        let c = fallback_candidates(&heis).unwrap();
        let central = |g: &GroupElement| matches!(g, GroupElement::Heis([0, 0, z]) if *z != 0);
        assert!(central(&c[0]));
        let first_other = c.iter().position(|g| !central(g)).unwrap();
        assert!(c[first_other..].iter().all(|g| !central(g) && heis.generators().contains(g)));
        let line = fallback_candidates(&GroupSpec::integer_line()).unwrap();
        assert_eq!(line, [GroupElement::Int(1), GroupElement::Int(-1)]);
    }

    #[test]
    fn power_pair_rejects_torsion() {
        let spec = GroupSpec::sl2z();
        let q = FiniteQuotient::new(&spec, 5, 1, 1).unwrap();
        let (k, pair) = power_pair(&q, &GroupElement::mat2(1, 1, 0, 1)).unwrap();
        assert_eq!(k, 5);
        assert_eq!(pair, [GroupElement::mat2(1, -5, 0, 1), GroupElement::mat2(1, 5, 0, 1)]);
        let s = GroupElement::mat2(0, -1, 1, 0);
        assert!(matches!(power_pair(&q, &s), Err(Error::Precondition(_))));
        // The fallback skips the torsion generator.
        let f = fallback_selection(&q).unwrap();
        assert!(!matches!(f.source, FSource::GeneratorPower { ref base } if *base == s));
    }

    #[test]
    fn predicate_matching() {
        assert!(ElementPredicate::Positive.matches(&GroupElement::Int(3)));
        assert!(!ElementPredicate::Positive.matches(&GroupElement::Int(0)));
        assert!(ElementPredicate::Negative.matches(&GroupElement::word("Ab").unwrap()));
        let p: ElementPredicate = "starts-with:ab".parse().unwrap();
        assert_eq!(p.to_string(), "starts-with:ab");
    }
}
