//! Certificates for the topology generated by the limit configuration.
//!
//! Rigidity: each `s ∈ F_i` moves every point of the orbit closure by at
//! most `1/(M_{i+1} + 1)`. Non-precompactness: translates of `ξ` approach
//! the zero configuration while `ξ(e) = 1`. Hausdorff: every nontrivial
//! element of a test ball is separated from the identity by some stage.

use serde::{Deserialize, Serialize};

use crate::construction::{power_pair, Construction, StageCertificate};
use crate::dynamics::{metric_distance, translate_window, TruncatedConfiguration};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec, SphereWalk};
use crate::quotient::{FiniteQuotient, QuotientElement};
use crate::rational::{self, serde_text, Rational};
use crate::staircase::{lipschitz_defect, StageParams, StaircaseTable};

/// `sup_g |ψ_n(g s) - ψ_n(g)|` for `s ∈ S_n`.
pub fn rigidity_defect_global(stage: &StageCertificate, s: &GroupElement) -> Result<Rational> {
    if !stage.params.set.contains(s) {
        return Err(Error::Precondition(format!("{s} is not in S_{}", stage.n())));
    }
    lipschitz_defect(&stage.psi, s)
}

/// One bound `sup_x d(σ_s x, x) <= bound` for `s ∈ F_stage`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplacementBound {
    pub stage: usize,
    pub element: GroupElement,
    /// `1 / (M_{stage+1} + 1)`.
    #[serde(with = "serde_text")]
    pub derived_bound: Rational,
    /// Defect of `ψ_N` at the deepest stage, when `s ∈ S_N`.
    #[serde(with = "opt_rational")]
    pub deepest_defect: Option<Rational>,
    #[serde(with = "serde_text")]
    pub bound: Rational,
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rational::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?.map(|t| parse_rational(&t).map_err(serde::de::Error::custom)).transpose()
    }
}

/// Bound on `sup_u |ξ(u s) - ξ(u)|`, which dominates `d(σ_s x, x)` on the
/// orbit closure.
///
/// Later staircases move by at most `1/(M_m + 1)` under `s ∈ S_m`, and the
/// infimum of the chain is 1-Lipschitz in the sup norm. So the bound is the
/// smaller of `1/(M_{i+1} + 1)` and, at the deepest stage `N`, the exact
/// defect of `ψ_N` plus `2/(M_{N+1} + 1)`.
pub fn uniform_displacement_bound(c: &Construction, s: &GroupElement) -> Result<DisplacementBound> {
    let i = c.rigidity_index(s).ok_or_else(|| Error::Precondition(format!("{s} is not in any rigidity set")))?;
    let derived = c.profile.step_height(i + 1)?;
    let deepest = c.deepest().expect("a rigidity set implies a stage");
    let (deepest_defect, bound) = if deepest.params.set.contains(s) {
        let d = rigidity_defect_global(deepest, s)?;
        let eps = c.error_bound()?;
        (Some(d), derived.min(d + eps + eps))
    } else {
        (None, derived)
    };
    Ok(DisplacementBound { stage: i, element: s.clone(), derived_bound: derived, deepest_defect, bound })
}

/// A coset `t H_n` whose window `π(B_r) t` misses the support of `ψ_n`,
/// with a lift of `t` to the group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroWitness {
    pub coset: Vec<u64>,
    pub lift: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroWindows {
    pub radius: u32,
    pub witnesses: Vec<ZeroWitness>,
    /// Number of zero-window cosets in the whole quotient, when it could be
    /// enumerated.
    pub total: Option<u64>,
}

fn window_residues(spec: &GroupSpec, q: &FiniteQuotient, radius: u32, cap: u64) -> Result<Vec<QuotientElement>> {
    let mut v =
        spec.generator_ball(radius, cap)?.elements().iter().map(|b| q.project(b)).collect::<Result<Vec<_>>>()?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn is_zero_window(psi: &StaircaseTable, window: &[QuotientElement], t: &QuotientElement) -> bool {
    let q = psi.quotient();
    window.iter().all(|b| !psi.in_support(&q.multiply(b, t)))
}

fn projected_generators(q: &FiniteQuotient) -> Result<Vec<QuotientElement>> {
    let spec = q.spec();
    spec.symmetrize(spec.generators())?.iter().map(|g| q.project(g)).collect()
}

/// All zero-window cosets of a quotient, or `None` above `cap`.
fn all_zero_windows(
    psi: &StaircaseTable,
    window: &[QuotientElement],
    cap: u64,
) -> Result<Option<Vec<QuotientElement>>> {
    let q = psi.quotient();
    if q.order().is_some_and(|o| o > cap as u128) {
        return Ok(None);
    }
    let Some(all) = q.enumerate(&projected_generators(q)?, cap) else {
        return Ok(None);
    };
    Ok(Some(all.order().iter().filter(|t| is_zero_window(psi, window, t)).copied().collect()))
}

/// Cosets `t H_n` with `ψ_n` vanishing on `π(B_radius) t`, found by walking
/// the generator ball so that each comes with a lift.
pub fn zero_window_cosets(
    spec: &GroupSpec,
    params: &StageParams,
    psi: &StaircaseTable,
    radius: u32,
    profile: &crate::construction::Profile,
) -> Result<ZeroWindows> {
    if radius as usize + 1 > params.n {
        return Err(Error::Precondition(format!("window radius {radius} exceeds n - 1 = {}", params.n - 1)));
    }
    let q = &params.quotient;
    let window = window_residues(spec, q, radius, profile.node_cap)?;
    let mut witnesses = Vec::new();
    let mut seen = rustc_hash::FxHashSet::default();
    let mut walk = SphereWalk::new(spec, spec.generators())?;
    let mut visited = 1u64;
    'walk: loop {
        for g in walk.current() {
            let t = q.project(g)?;
            if seen.insert(t) && is_zero_window(psi, &window, &t) {
                witnesses.push(ZeroWitness { coset: q.encode(&t), lift: g.clone() });
                if witnesses.len() >= profile.zero_window_witnesses {
                    break 'walk;
                }
            }
        }
        match walk.advance(profile.lift_search_cap.saturating_sub(visited)) {
            Ok(true) => visited += walk.current().len() as u64,
            Ok(false) => break,
            Err(e) if e.is_resource() => break,
            Err(e) => return Err(e),
        }
        if visited > profile.lift_search_cap {
            break;
        }
    }
    let total = all_zero_windows(psi, &window, profile.syndeticity_cap)?.map(|z| z.len() as u64);
    Ok(ZeroWindows { radius, witnesses, total })
}

/// Least `R` with `Z · π(B_R)` covering the quotient, by multi-source BFS.
/// `None` when the quotient has more than `cap` elements.
pub fn syndeticity_radius(q: &FiniteQuotient, zero_set: &[QuotientElement], cap: u64) -> Result<Option<u32>> {
    if zero_set.is_empty() {
        return Err(Error::Precondition("syndeticity needs a nonempty set".into()));
    }
    if q.order().is_some_and(|o| o > cap as u128) {
        return Ok(None);
    }
    let gens = projected_generators(q)?;
    Ok(q.multi_source_distances(&gens, zero_set, cap).map(|d| d.values().copied().max().unwrap_or(0)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Syndeticity {
    Radius { radius: u32, zero_cosets: u64 },
    Skipped { reason: String },
}

/// Syndeticity radius of the full zero-window set of a stage.
pub fn syndeticity_for_stage(
    params: &StageParams,
    psi: &StaircaseTable,
    zero_windows: &ZeroWindows,
    profile: &crate::construction::Profile,
) -> Result<Syndeticity> {
    let q = &params.quotient;
    let window = window_residues(q.spec(), q, zero_windows.radius, profile.node_cap)?;
    let Some(zero_set) = all_zero_windows(psi, &window, profile.syndeticity_cap)? else {
        return Ok(Syndeticity::Skipped { reason: format!("quotient exceeds {} elements", profile.syndeticity_cap) });
    };
    if zero_set.is_empty() {
        return Ok(Syndeticity::Skipped { reason: "no zero window".into() });
    }
    match syndeticity_radius(q, &zero_set, profile.syndeticity_cap)? {
        Some(radius) => Ok(Syndeticity::Radius { radius, zero_cosets: zero_set.len() as u64 }),
        None => Ok(Syndeticity::Skipped { reason: format!("quotient exceeds {} elements", profile.syndeticity_cap) }),
    }
}

/// `d(σ_{t_n} ξ, 0) <= 2^{-(r_n + 1)}` with `r_n = n - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroMembership {
    pub stage: usize,
    pub radius: u32,
    pub translate: GroupElement,
    #[serde(with = "serde_text")]
    pub distance_bound: Rational,
    /// The window of `σ_{t_n} ξ` was recomputed and found identically zero.
    pub verified: bool,
}

/// Translates `t_n` approaching the zero configuration, one per stage.
///
/// `ψ_n` vanishing on `B_r t_n` forces `ξ` to vanish there, since later
/// tables only decrease.
pub fn zero_membership_certificate(c: &Construction) -> Result<Vec<ZeroMembership>> {
    let mut out = Vec::new();
    for stage in &c.stages {
        let r = stage.zero_windows.radius;
        let Some(w) = stage.zero_windows.witnesses.first() else {
            return Err(Error::Stage { stage: stage.n(), reason: "no zero window found".into() });
        };
        let window = stage_translate_window(c, stage, &w.lift, r)?;
        let zero = TruncatedConfiguration::zero(&c.group, r, c.profile.node_cap)?;
        let (_, hi) = metric_distance(&window, &zero, &c.group)?;
        let bound = rational::pow2_inv(r + 1);
        let verified = window.all_exact() && window.values.iter().all(|v| *v == rational::zero()) && hi <= bound;
        out.push(ZeroMembership {
            stage: stage.n(),
            radius: r,
            translate: w.lift.clone(),
            distance_bound: bound,
            verified,
        });
    }
    Ok(out)
}

fn stage_translate_window(
    c: &Construction,
    stage: &StageCertificate,
    t: &GroupElement,
    r: u32,
) -> Result<TruncatedConfiguration> {
    if stage.n() == c.depth() {
        return translate_window(c, t, r);
    }
    // Zeros of an earlier ψ are zeros of ξ; other entries are left inexact.
    let spec = &c.group;
    let window = spec.generator_ball(r, c.profile.node_cap)?.into_elements();
    let mut values = Vec::new();
    let mut exact = Vec::new();
    for b in &window {
        let v = stage.psi.value_of(&spec.compose(b, t)?)?;
        exact.push(v == rational::zero());
        values.push(v);
    }
    Ok(TruncatedConfiguration {
        stage: stage.n(),
        radius: Some(r),
        window,
        values,
        exact,
        error_bound: rational::one(),
    })
}

/// `ξ(e) = 1` together with translates converging to zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonPrecompact {
    #[serde(with = "serde_text")]
    pub xi_identity: Rational,
    pub zero_membership: Vec<ZeroMembership>,
    pub chain: Vec<String>,
}

pub fn nonprecompact_certificate(c: &Construction) -> Result<NonPrecompact> {
    let id = c.group.identity();
    let xi_identity = c
        .stages
        .iter()
        .map(|s| s.psi.value_of(&id))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .ok_or_else(|| Error::Precondition("no stages built".into()))?;
    let zero_membership = zero_membership_certificate(c)?;
    let chain = vec![
        "the zero configuration lies in the orbit closure of xi".to_string(),
        "it is a fixed point, so xi is not minimal".to_string(),
        "xi(e) = 1 while its translates approach 0, so the orbit is not uniformly recurrent".to_string(),
        "hence the shift-induced group topology is not precompact".to_string(),
    ];
    Ok(NonPrecompact { xi_identity, zero_membership, chain })
}

/// First stage `n >= 2` that moves `g` off the kernel, with the resulting
/// gap `ξ(e) - ξ(g) >= 1 - ψ_n(g) >= 1/(M_n + 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HausdorffWitness {
    pub element: GroupElement,
    pub stage: Option<usize>,
    #[serde(with = "opt_rational")]
    pub separation: Option<Rational>,
    #[serde(with = "opt_rational")]
    pub bound: Option<Rational>,
}

impl HausdorffWitness {
    pub fn separated(&self) -> bool {
        matches!((self.separation, self.bound), (Some(s), Some(b)) if s >= b)
    }
}

pub fn hausdorff_certificate(c: &Construction, test_radius: u32) -> Result<Vec<HausdorffWitness>> {
    if c.depth() < 2 {
        return Err(Error::Precondition("separation needs at least two stages".into()));
    }
    let ball = c.group.generator_ball(test_radius, c.profile.node_cap)?;
    let mut out = Vec::new();
    for g in ball.elements() {
        if c.group.is_identity(g) {
            continue;
        }
        let mut w = HausdorffWitness { element: g.clone(), stage: None, separation: None, bound: None };
        for stage in &c.stages[1..] {
            let q = stage.quotient();
            if q.project(g)? != q.identity() {
                w.stage = Some(stage.n());
                w.separation = Some(rational::one() - stage.psi.value_of(g)?);
                w.bound = Some(rational::step(stage.params.steps));
                break;
            }
        }
        out.push(w);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerEntry {
    pub stage: usize,
    pub exponent: u64,
    pub element: GroupElement,
}

/// `g0^{k_n}` with `k_n` the order of `g0` in each stage quotient. These lie
/// in `H_n`, so they converge to the identity in any topology built on the
/// construction whose rigidity sets contain them.
pub fn power_rigidity_sequence(c: &Construction, g0: &GroupElement) -> Result<Vec<PowerEntry>> {
    if c.group.is_identity(g0) {
        return Err(Error::Precondition("power sequence needs g0 != e".into()));
    }
    c.stages
        .iter()
        .map(|stage| {
            let (exponent, pair) = power_pair(stage.quotient(), g0)?;
            let element = c.group.pow(g0, exponent as i64)?;
            debug_assert!(pair.contains(&element));
            Ok(PowerEntry { stage: stage.n(), exponent, element })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyFlags {
    pub hausdorff: bool,
    pub non_discrete: bool,
    pub non_precompact: bool,
}

/// Conclusions about the topology with their supporting data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyCertificate {
    pub depth: usize,
    pub test_radius: u32,
    pub displacement: Vec<DisplacementBound>,
    pub hausdorff_witnesses: Vec<HausdorffWitness>,
    pub non_precompact: NonPrecompact,
    pub flags: TopologyFlags,
}

/// Largest displacement bound recorded for each stage's rigidity set.
pub fn stage_displacements(bounds: &[DisplacementBound]) -> Vec<(usize, Rational)> {
    let mut out: Vec<(usize, Rational)> = Vec::new();
    for b in bounds {
        match out.iter_mut().find(|(i, _)| *i == b.stage) {
            Some((_, v)) => *v = (*v).max(b.bound),
            None => out.push((b.stage, b.bound)),
        }
    }
    out.sort_by_key(|(i, _)| *i);
    out
}

pub fn certify(c: &Construction, test_radius: u32) -> Result<TopologyCertificate> {
    let depth = c.depth();
    let mut displacement = Vec::new();
    for stage in &c.stages {
        for s in &stage.f_next {
            displacement.push(uniform_displacement_bound(c, s)?);
        }
    }
    let hausdorff_witnesses = if depth >= 2 { hausdorff_certificate(c, test_radius)? } else { Vec::new() };
    let non_precompact = nonprecompact_certificate(c)?;

    let per_stage = stage_displacements(&displacement);
    let every_stage_has_f = c.stages.iter().all(|s| !s.f_next.is_empty());
    let decreasing = per_stage.windows(2).all(|w| w[1].1 < w[0].1);
    let gating = c.stages.iter().all(StageCertificate::all_gating_passed);
    let flags = TopologyFlags {
        hausdorff: depth >= 2 && gating && hausdorff_witnesses.iter().all(HausdorffWitness::separated),
        non_discrete: depth >= 2 && gating && every_stage_has_f && per_stage.len() == depth && decreasing,
        non_precompact: gating
            && non_precompact.xi_identity == rational::one()
            && non_precompact.zero_membership.iter().all(|z| z.verified),
    };
    Ok(TopologyCertificate { depth, test_radius, displacement, hausdorff_witnesses, non_precompact, flags })
}
