//! Finite congruence quotients and the residual-finiteness oracle.
//!
//! Level `n` of the tower is the kernel of entrywise reduction modulo `m_n`
//! of the integer-matrix picture of the group. Kernels of homomorphisms to
//! finite groups are normal of finite index, and `m_{n-1} | m_n` makes the
//! kernels nested.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, VecDeque};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{AbsMatrix, GroupElement, GroupKind, GroupSpec, SphereWalk};

/// Moduli stay below this so residue products fit in `u128`.
pub const MAX_MODULUS: u64 = 1 << 62;

/// A residue class of the group modulo a level's kernel.
///
/// Layout by kind: integers use `[r, 0, 0, 0]`, the Heisenberg group
/// `[x, y, z, 0]`, and matrix kinds (free groups via their embedding)
/// `[a, b, c, d]`. Entries lie in `[0, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuotientElement(pub [u64; 4]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Layout {
    Int,
    Heis,
    Mat2,
}

impl Layout {
    fn of(kind: GroupKind) -> Self {
        match kind {
            GroupKind::IntegerLine => Layout::Int,
            GroupKind::Heisenberg3 => Layout::Heis,
            GroupKind::Free { .. } | GroupKind::Sl2z => Layout::Mat2,
        }
    }
}

/// Descriptor of one level of the tower, as written into certificates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientDescriptor {
    pub kind: String,
    pub modulus: u64,
    pub parent_modulus: u64,
    pub level: usize,
}

/// `G / ker(reduction mod modulus)`, one level of the tower.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteQuotient {
    spec: GroupSpec,
    modulus: u64,
    level: usize,
    parent_modulus: u64,
    layout: Layout,
}

impl FiniteQuotient {
    pub fn new(spec: &GroupSpec, modulus: u64, level: usize, parent_modulus: u64) -> Result<Self> {
        if !(2..MAX_MODULUS).contains(&modulus) {
            return Err(Error::Config(format!("modulus {modulus} outside [2, 2^62)")));
        }
        if parent_modulus == 0 || !modulus.is_multiple_of(parent_modulus) {
            return Err(Error::Config(format!("parent modulus {parent_modulus} does not divide {modulus}")));
        }
        Ok(FiniteQuotient { spec: spec.clone(), modulus, level, parent_modulus, layout: Layout::of(spec.kind()) })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parent_modulus(&self) -> u64 {
        self.parent_modulus
    }

    pub fn descriptor(&self) -> QuotientDescriptor {
        QuotientDescriptor {
            kind: self.spec.label().to_string(),
            modulus: self.modulus,
            parent_modulus: self.parent_modulus,
            level: self.level,
        }
    }

    pub fn identity(&self) -> QuotientElement {
        match self.layout {
            Layout::Int | Layout::Heis => QuotientElement([0; 4]),
            Layout::Mat2 => QuotientElement([1, 0, 0, 1]),
        }
    }

    fn residue(&self, v: i64) -> u64 {
        v.rem_euclid(self.modulus as i64) as u64
    }

    fn mulmod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    fn addmod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.modulus as u128) as u64
    }

    fn negmod(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    /// The projection `G -> G / H`. A homomorphism.
    pub fn project(&self, g: &GroupElement) -> Result<QuotientElement> {
        if !self.spec.contains(g) {
            return Err(Error::SpecMismatch(format!("{g} is not an element of {}", self.spec.label())));
        }
        Ok(match g {
            GroupElement::Int(t) => QuotientElement([self.residue(*t), 0, 0, 0]),
            GroupElement::Heis([x, y, z]) => QuotientElement([self.residue(*x), self.residue(*y), self.residue(*z), 0]),
            GroupElement::Mat2(m) => QuotientElement(m.map(|e| self.residue(e))),
            GroupElement::Word(letters) => {
                let mut images: FxHashMap<i8, QuotientElement> = FxHashMap::default();
                let mut acc = self.identity();
                for &l in letters {
                    let img = match images.get(&l) {
                        Some(q) => *q,
                        None => {
                            let m = self.spec.matrix_entries(&GroupElement::Word(vec![l]))?;
                            let q = QuotientElement([
                                self.residue(m[0]),
                                self.residue(m[1]),
                                self.residue(m[2]),
                                self.residue(m[3]),
                            ]);
                            images.insert(l, q);
                            q
                        }
                    };
                    acc = self.multiply(&acc, &img);
                }
                acc
            }
        })
    }

    pub fn multiply(&self, a: &QuotientElement, b: &QuotientElement) -> QuotientElement {
        let (p, q) = (a.0, b.0);
        match self.layout {
            Layout::Int => QuotientElement([self.addmod(p[0], q[0]), 0, 0, 0]),
            Layout::Heis => QuotientElement([
                self.addmod(p[0], q[0]),
                self.addmod(p[1], q[1]),
                self.addmod(self.addmod(p[2], q[2]), self.mulmod(p[0], q[1])),
                0,
            ]),
            Layout::Mat2 => QuotientElement([
                self.addmod(self.mulmod(p[0], q[0]), self.mulmod(p[1], q[2])),
                self.addmod(self.mulmod(p[0], q[1]), self.mulmod(p[1], q[3])),
                self.addmod(self.mulmod(p[2], q[0]), self.mulmod(p[3], q[2])),
                self.addmod(self.mulmod(p[2], q[1]), self.mulmod(p[3], q[3])),
            ]),
        }
    }

    pub fn inverse(&self, a: &QuotientElement) -> QuotientElement {
        let p = a.0;
        match self.layout {
            Layout::Int => QuotientElement([self.negmod(p[0]), 0, 0, 0]),
            Layout::Heis => QuotientElement([
                self.negmod(p[0]),
                self.negmod(p[1]),
                self.addmod(self.negmod(p[2]), self.mulmod(p[0], p[1])),
                0,
            ]),
            Layout::Mat2 => QuotientElement([p[3], self.negmod(p[1]), self.negmod(p[2]), p[0]]),
        }
    }

    pub fn pow(&self, a: &QuotientElement, mut k: u64) -> QuotientElement {
        let mut base = *a;
        let mut acc = self.identity();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.multiply(&acc, &base);
            }
            base = self.multiply(&base, &base);
            k >>= 1;
        }
        acc
    }

    /// Image of a residue in the quotient modulo `divisor` (a divisor of the
    /// modulus). Reduction commutes with the group law, so this is the
    /// projection to a coarser level.
    pub fn reduce_to(&self, a: &QuotientElement, divisor: u64) -> QuotientElement {
        let mut out = a.0.map(|e| e % divisor);
        if self.layout == Layout::Mat2 && divisor == 1 {
            out = [1, 0, 0, 1];
        }
        QuotientElement(out)
    }

    /// Row-major integer encoding used in certificates.
    pub fn encode(&self, a: &QuotientElement) -> Vec<u64> {
        let p = a.0;
        match self.layout {
            Layout::Int => vec![p[0]],
            Layout::Heis => vec![1, p[0], p[2], 0, 1, p[1], 0, 0, 1],
            Layout::Mat2 => p.to_vec(),
        }
    }

    pub fn decode(&self, v: &[u64]) -> Result<QuotientElement> {
        let bad = || Error::Config(format!("malformed residue {v:?} for {}", self.spec.label()));
        if v.iter().any(|&e| e >= self.modulus) {
            return Err(bad());
        }
        match (self.layout, v.len()) {
            (Layout::Int, 1) => Ok(QuotientElement([v[0], 0, 0, 0])),
            (Layout::Heis, 9)
                if [v[0], v[3], v[4], v[6], v[7], v[8]]
                    == [1 % self.modulus, 0, 1 % self.modulus, 0, 0, 1 % self.modulus] =>
            {
                Ok(QuotientElement([v[1], v[5], v[2], 0]))
            }
            (Layout::Mat2, 4) => Ok(QuotientElement([v[0], v[1], v[2], v[3]])),
            _ => Err(bad()),
        }
    }

    /// Exact size of the quotient when it has a closed form (`Z/m`, the
    /// Heisenberg group over `Z/m`, `SL(2, Z/m)`). Free groups map onto an
    /// unknown subgroup of `SL(2, Z/m)`, so `None`.
    pub fn order(&self) -> Option<u128> {
        let m = self.modulus as u128;
        match self.spec.kind() {
            GroupKind::IntegerLine => Some(m),
            GroupKind::Heisenberg3 => m.checked_mul(m)?.checked_mul(m),
            GroupKind::Sl2z => {
                let mut order = m.checked_mul(m)?.checked_mul(m)?;
                for p in prime_factors(self.modulus) {
                    let p = p as u128;
                    order = order / (p * p) * (p * p - 1);
                }
                Some(order)
            }
            GroupKind::Free { .. } => None,
        }
    }

    /// BFS in the Cayley graph of the quotient for `gens`, truncated at
    /// `depth`. Fails once more than `cap` vertices are stored.
    pub fn bfs(&self, gens: &[QuotientElement], depth: u32, cap: u64) -> Result<QuotientBall> {
        let mut gens: Vec<QuotientElement> = gens.to_vec();
        let id = self.identity();
        gens.retain(|g| *g != id);
        gens.sort_unstable();
        gens.dedup();
        let mut dist: FxHashMap<QuotientElement, u32> = FxHashMap::default();
        dist.insert(id, 0);
        let mut order = vec![id];
        let mut sphere_starts = vec![0usize];
        let mut frontier_start = 0;
        for d in 1..=depth {
            let frontier_end = order.len();
            let mut next = Vec::new();
            for q in &order[frontier_start..frontier_end] {
                for s in &gens {
                    let r = self.multiply(q, s);
                    if let Entry::Vacant(v) = dist.entry(r) {
                        v.insert(d);
                        next.push(r);
                    }
                }
                if dist.len() as u64 > cap {
                    return Err(Error::resource(
                        format!("quotient ball of radius {depth} for {} mod {}", self.spec.label(), self.modulus),
                        cap,
                    ));
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_unstable();
            sphere_starts.push(order.len());
            order.extend(next);
            frontier_start = frontier_end;
        }
        Ok(QuotientBall { order, sphere_starts, dist })
    }

    /// Every element of the quotient generated by `gens`, or `None` when the
    /// closure exceeds `cap`.
    pub fn enumerate(&self, gens: &[QuotientElement], cap: u64) -> Option<QuotientBall> {
        self.bfs(gens, u32::MAX, cap).ok()
    }

    /// Cayley distance from the set `sources` to every vertex, by multi-source
    /// BFS over the full quotient. `None` when the quotient exceeds `cap`.
    pub fn multi_source_distances(
        &self,
        gens: &[QuotientElement],
        sources: &[QuotientElement],
        cap: u64,
    ) -> Option<FxHashMap<QuotientElement, u32>> {
        let mut dist: FxHashMap<QuotientElement, u32> = FxHashMap::default();
        let mut queue = VecDeque::new();
        for s in sources {
            if dist.insert(*s, 0).is_none() {
                queue.push_back(*s);
            }
        }
        while let Some(q) = queue.pop_front() {
            let d = dist[&q];
            for g in gens {
                let r = self.multiply(&q, g);
                if let Entry::Vacant(e) = dist.entry(r) {
                    e.insert(d + 1);
                    queue.push_back(r);
                    if dist.len() as u64 > cap {
                        return None;
                    }
                }
            }
        }
        Some(dist)
    }
}

/// A truncated BFS ball in a quotient.
#[derive(Debug, Clone)]
pub struct QuotientBall {
    order: Vec<QuotientElement>,
    sphere_starts: Vec<usize>,
    dist: FxHashMap<QuotientElement, u32>,
}

impl QuotientBall {
    pub fn order(&self) -> &[QuotientElement] {
        &self.order
    }

    pub fn distance(&self, q: &QuotientElement) -> Option<u32> {
        self.dist.get(q).copied()
    }

    pub fn distances(&self) -> &FxHashMap<QuotientElement, u32> {
        &self.dist
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Number of spheres beyond the centre that were reached.
    pub fn depth(&self) -> u32 {
        self.sphere_starts.len() as u32 - 1
    }

    pub fn sphere_len(&self, k: u32) -> usize {
        let k = k as usize;
        if k >= self.sphere_starts.len() {
            return 0;
        }
        let end = self.sphere_starts.get(k + 1).copied().unwrap_or(self.order.len());
        end - self.sphere_starts[k]
    }
}

fn prime_factors(n: u64) -> Vec<u64> {
    num_prime::nt_funcs::factorize64(n).into_keys().collect()
}

/// Smallest multiple of `parent` strictly greater than `bound`.
pub fn smallest_multiple_exceeding(parent: u64, bound: u128) -> Result<u64> {
    let parent128 = parent as u128;
    let m = (bound / parent128 + 1)
        .checked_mul(parent128)
        .filter(|m| *m < MAX_MODULUS as u128)
        .ok_or_else(|| Error::resource(format!("modulus exceeding {bound}"), MAX_MODULUS))?;
    Ok(m as u64)
}

/// Result of [`separate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Separation {
    pub quotient: FiniteQuotient,
    /// Set when `T` had nothing besides the identity.
    pub degenerate: bool,
}

/// Picks the level modulus separating `targets` from the identity: the
/// smallest multiple of `parent_modulus` exceeding twice the largest absolute
/// matrix entry among the non-identity targets. Every entry of `t - I` then
/// has absolute value below the modulus, so `t` survives the reduction.
pub fn separate(spec: &GroupSpec, targets: &[GroupElement], parent_modulus: u64, level: usize) -> Result<Separation> {
    let mut max_entry: Option<u64> = None;
    for t in targets {
        if spec.is_identity(t) {
            continue;
        }
        let e = spec.max_abs_entry(t)?;
        max_entry = Some(max_entry.map_or(e, |m| m.max(e)));
    }
    match max_entry {
        None => Ok(Separation {
            quotient: FiniteQuotient::new(spec, parent_modulus.max(2), level, parent_modulus)?,
            degenerate: true,
        }),
        Some(e) => {
            let m = smallest_multiple_exceeding(parent_modulus, 2 * e as u128)?;
            Ok(Separation { quotient: FiniteQuotient::new(spec, m, level, parent_modulus)?, degenerate: false })
        }
    }
}

/// Upper bound on the largest absolute matrix entry of any product of at
/// most `exponent` elements of `set`: with `A` the entrywise maximum of the
/// absolute matrices (and the identity), every such product is bounded
/// entrywise by `A^exponent`. `None` when the bound overflows `u128`.
pub fn entry_growth_bound(spec: &GroupSpec, set: &[GroupElement], exponent: u64) -> Result<Option<u128>> {
    if spec.kind() == GroupKind::IntegerLine {
        // The padded matrix [[1, t], [0, 1]] gives the same answer; this is the
        // closed form.
        let mut max = 0u128;
        for s in set {
            max = max.max(spec.max_abs_entry(s)? as u128);
        }
        return Ok(max.checked_mul(exponent as u128));
    }
    let mut a = AbsMatrix::identity(spec.matrix_dim());
    for s in set {
        a.entrywise_max(&spec.abs_matrix(s)?);
    }
    let mut acc = AbsMatrix::identity(a.dim);
    let mut base = a;
    let mut e = exponent;
    while e > 0 {
        if e & 1 == 1 {
            acc = match acc.checked_mul(&base) {
                Some(m) => m,
                None => return Ok(None),
            };
        }
        e >>= 1;
        if e > 0 {
            base = match base.checked_mul(&base) {
                Some(m) => m,
                None => return Ok(None),
            };
        }
    }
    Ok(Some(acc.max_entry()))
}

/// Arithmetic certificate that `S^exponent` meets the kernel of reduction
/// mod `modulus` only in the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub exponent: u64,
    pub modulus: u64,
    /// `E(exponent)`; `None` when it does not fit in 128 bits.
    pub entry_bound: Option<u128>,
    pub holds: bool,
}

/// Certifies `S^exponent ∩ ker π = {e}` without enumerating the ball.
///
/// If every entry of `g` is at most `E` in absolute value and `2E < m`, then
/// `g ≡ I (mod m)` forces every entry of `g - I` to vanish.
pub fn separation_bound_certificate(
    spec: &GroupSpec,
    set: &[GroupElement],
    exponent: u64,
    modulus: u64,
) -> Result<SeparationCertificate> {
    let entry_bound = entry_growth_bound(spec, set, exponent)?;
    let holds = match entry_bound {
        Some(e) => e.checked_mul(2).is_some_and(|twice| twice < modulus as u128),
        None => false,
    };
    Ok(SeparationCertificate { exponent, modulus, entry_bound, holds })
}

/// Nontrivial kernel elements from the generator ball, closed under
/// inverses.
///
/// Spheres are scanned in BFS order up to `search_radius`; the scan stops at
/// the end of the first sphere that brings the collection to `count`.
/// `cap` bounds the number of elements visited. An empty result is a valid
/// answer.
pub fn kernel_ball_elements(
    q: &FiniteQuotient,
    search_radius: u32,
    count: usize,
    cap: u64,
) -> Result<Vec<GroupElement>> {
    kernel_search(q, search_radius, count, cap, |_| true)
}

/// Like [`kernel_ball_elements`], keeping only elements accepted by `filter`.
pub fn kernel_search(
    q: &FiniteQuotient,
    search_radius: u32,
    count: usize,
    cap: u64,
    filter: impl Fn(&GroupElement) -> bool,
) -> Result<Vec<GroupElement>> {
    let spec = q.spec();
    let id = q.identity();
    let mut walk = SphereWalk::new(spec, spec.generators())?;
    let mut found: Vec<GroupElement> = Vec::new();
    let mut visited = 1u64;
    while walk.radius() < search_radius {
        match walk.advance(cap.saturating_sub(visited)) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) if e.is_resource() => break,
            Err(e) => return Err(e),
        }
        visited += walk.current().len() as u64;
        if visited > cap {
            break;
        }
        for g in walk.current() {
            if q.project(g)? == id && filter(g) && !found.contains(g) {
                let inv = spec.inverse(g)?;
                found.push(g.clone());
                if !found.contains(&inv) {
                    found.push(inv);
                }
            }
        }
        if found.len() >= count {
            break;
        }
    }
    found.sort();
    Ok(found)
}

/// Least `k >= 1` with `π(g)^k` the identity, so `g^k` lies in the kernel.
///
/// The order divides the order of the ambient finite group (`Z/m`, the
/// Heisenberg group mod `m`, or `SL(2, Z/m)`, which also contains the image
/// of a free group), so it is found by stripping prime factors from a known
/// multiple.
pub fn element_order_in_quotient(q: &FiniteQuotient, g: &GroupElement) -> Result<u64> {
    let x = q.project(g)?;
    if let GroupKind::IntegerLine = q.spec().kind() {
        return Ok(q.modulus() / num_integer::gcd(x.0[0], q.modulus()));
    }
    let id = q.identity();
    let multiple = ambient_order_factors(q);
    let mut order = 1u64;
    for (&p, &e) in &multiple {
        let mut y = x;
        for (&r, &f) in &multiple {
            if r != p {
                for _ in 0..f {
                    y = q.pow(&y, r);
                }
            }
        }
        let mut used = 0;
        while y != id {
            if used == e {
                return Err(Error::Precondition(format!("order of {g} does not divide the group order")));
            }
            y = q.pow(&y, p);
            used += 1;
            order = order.checked_mul(p).ok_or(Error::Overflow("element order"))?;
        }
    }
    Ok(order)
}

/// Prime factorization of the order of the ambient finite group.
fn ambient_order_factors(q: &FiniteQuotient) -> BTreeMap<u64, u32> {
    let mut out: BTreeMap<u64, u32> = BTreeMap::new();
    let m = num_prime::nt_funcs::factorize64(q.modulus());
    match q.spec().kind() {
        GroupKind::IntegerLine => {
            for (p, e) in m {
                out.insert(p, e as u32);
            }
        }
        GroupKind::Heisenberg3 => {
            for (p, e) in m {
                out.insert(p, 3 * e as u32);
            }
        }
        GroupKind::Sl2z | GroupKind::Free { .. } => {
            // |SL(2, Z/m)| = m^3 ∏_{p | m} (1 - p^-2).
            for (&p, &e) in &m {
                *out.entry(p).or_default() += 3 * e as u32 - 2;
                for side in [p - 1, p + 1] {
                    for (r, f) in num_prime::nt_funcs::factorize64(side) {
                        *out.entry(r).or_default() += f as u32;
                    }
                }
            }
        }
    }
    out
}

/// Outcome of [`injectivity_radius_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injectivity {
    pub injective: bool,
    /// True when the answer rests on the separation certificate rather than
    /// on enumeration.
    pub by_certificate: bool,
}

/// Whether the projection is injective on `ball(S, r)`.
///
/// The ball is enumerated and compared directly when it has at most
/// `enumeration_cap` elements. Otherwise the answer comes from a separation
/// certificate for exponent `2r` (`x ≡ y` with `x, y ∈ S^r` puts `x y^-1` in
/// `S^{2r} ∩ H = {e}`); if that certificate also fails, the precondition is
/// violated.
pub fn injectivity_radius_check(
    q: &FiniteQuotient,
    set: &[GroupElement],
    r: u32,
    enumeration_cap: u64,
) -> Result<Injectivity> {
    let spec = q.spec();
    match spec.ball(set, r, enumeration_cap) {
        Ok(ball) => {
            let mut seen = rustc_hash::FxHashSet::default();
            let mut injective = true;
            for g in ball.elements() {
                if !seen.insert(q.project(g)?) {
                    injective = false;
                    break;
                }
            }
            Ok(Injectivity { injective, by_certificate: false })
        }
        Err(e) if e.is_resource() => {
            let cert = separation_bound_certificate(spec, set, 2 * r as u64, q.modulus())?;
            if cert.holds {
                Ok(Injectivity { injective: true, by_certificate: true })
            } else {
                Err(Error::Precondition(format!(
                    "radius {r} is beyond the certified separation for modulus {} and the ball exceeds {enumeration_cap}",
                    q.modulus()
                )))
            }
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAP: u64 = 1_000_000;

    fn ints(v: &[i64]) -> Vec<GroupElement> {
        v.iter().map(|&x| GroupElement::Int(x)).collect()
    }

    #[test]
    fn separate_integer_line() {
        let z = GroupSpec::integer_line();
        let s = separate(&z, &ints(&[1, -1, 2, -2, 3, -3]), 1, 1).unwrap();
        assert_eq!(s.quotient.modulus(), 7);
        assert!(!s.degenerate);
        for t in 1..=3 {
            assert_ne!(s.quotient.project(&GroupElement::Int(t)).unwrap(), s.quotient.identity());
            assert_ne!(s.quotient.project(&GroupElement::Int(-t)).unwrap(), s.quotient.identity());
        }
    }

    #[test]
    fn separate_degenerate() {
        let z = GroupSpec::integer_line();
        let s = separate(&z, &ints(&[0]), 1, 1).unwrap();
        assert_eq!(s.quotient.modulus(), 2);
        assert!(s.degenerate);
    }

    #[test]
    fn separate_sl2z_ball() {
        let g = GroupSpec::sl2z();
        let ball = g.generator_ball(2, CAP).unwrap();
        let targets: Vec<_> = ball.elements()[1..].to_vec();
        let s = separate(&g, &targets, 1, 1).unwrap();
        let max = targets.iter().map(|t| g.max_abs_entry(t).unwrap()).max().unwrap();
        assert_eq!(s.quotient.modulus(), 2 * max + 1);
        for t in &targets {
            assert_ne!(s.quotient.project(t).unwrap(), s.quotient.identity(), "{t}");
        }
    }

    #[test]
    fn separation_certificates() {
        let z = GroupSpec::integer_line();
        let s = ints(&[0, 1, -1]);
        let c = separation_bound_certificate(&z, &s, 30, 100).unwrap();
        assert_eq!(c.entry_bound, Some(30));
        assert!(c.holds);
        assert!(!separation_bound_certificate(&z, &s, 30, 50).unwrap().holds);

        let g = GroupSpec::sl2z();
        let t = [GroupElement::mat2(1, 1, 0, 1), GroupElement::mat2(1, -1, 0, 1)];
        let c = separation_bound_certificate(&g, &t, 5, 11).unwrap();
        assert_eq!(c.entry_bound, Some(5));
        assert!(c.holds);
    }

    #[test]
    fn heisenberg_growth_matches_closed_form() {
        let h = GroupSpec::heisenberg3();
        let set = vec![GroupElement::heis(7, 0, 0), GroupElement::heis(0, 2, 1)];
        // A = [[1,7,1],[0,1,2],[0,0,1]]; A^k has corner k*1 + k(k-1)/2 * 7 * 2.
        let e = entry_growth_bound(&h, &set, 9).unwrap().unwrap();
        assert_eq!(e, 9 + 36 * 14);
    }

    #[test]
    fn projection_examples() {
        let z = GroupSpec::integer_line();
        let q = FiniteQuotient::new(&z, 7, 1, 1).unwrap();
        assert_eq!(q.project(&GroupElement::Int(10)).unwrap(), QuotientElement([3, 0, 0, 0]));
        assert_eq!(q.project(&GroupElement::Int(0)).unwrap(), q.identity());

        let f = GroupSpec::free(2).unwrap();
        let q = FiniteQuotient::new(&f, 5, 1, 1).unwrap();
        assert_eq!(q.project(&GroupElement::word("a").unwrap()).unwrap(), QuotientElement([1, 2, 0, 1]));
        assert_eq!(q.project(&f.identity()).unwrap(), q.identity());
    }

    #[test]
    fn kernel_search_examples() {
        let z = GroupSpec::integer_line();
        let q = FiniteQuotient::new(&z, 7, 1, 1).unwrap();
        assert_eq!(kernel_ball_elements(&q, 10, 2, CAP).unwrap(), ints(&[-7, 7]));
        assert!(kernel_ball_elements(&q, 5, 2, CAP).unwrap().is_empty());

        let g = GroupSpec::sl2z();
        let q = FiniteQuotient::new(&g, 5, 1, 1).unwrap();
        let found = kernel_ball_elements(&q, 5, 1000, CAP).unwrap();
        assert!(found.contains(&GroupElement::mat2(1, 5, 0, 1)));
        assert!(found.contains(&GroupElement::mat2(1, -5, 0, 1)));
        for k in &found {
            assert_eq!(q.project(k).unwrap(), q.identity());
            assert!(!g.is_identity(k));
        }
    }

    #[test]
    fn orders() {
        let z = GroupSpec::integer_line();
        let q = FiniteQuotient::new(&z, 7, 1, 1).unwrap();
        assert_eq!(element_order_in_quotient(&q, &GroupElement::Int(1)).unwrap(), 7);
        assert_eq!(element_order_in_quotient(&q, &GroupElement::Int(0)).unwrap(), 1);
        let g = GroupSpec::sl2z();
        let q = FiniteQuotient::new(&g, 6, 1, 1).unwrap();
        assert_eq!(element_order_in_quotient(&q, &GroupElement::mat2(1, 1, 0, 1)).unwrap(), 6);
        assert_eq!(element_order_in_quotient(&q, &g.identity()).unwrap(), 1);
    }

    #[test]
    fn injectivity_examples() {
        let z = GroupSpec::integer_line();
        let s = ints(&[0, 1, -1]);
        let q = FiniteQuotient::new(&z, 101, 1, 1).unwrap();
        assert_eq!(
            injectivity_radius_check(&q, &s, 50, CAP).unwrap(),
            Injectivity { injective: true, by_certificate: false }
        );
        let q = FiniteQuotient::new(&z, 7, 1, 1).unwrap();
        assert!(!injectivity_radius_check(&q, &s, 4, CAP).unwrap().injective);
        // Beyond the enumeration cap and the certificate: precondition error.
        assert!(matches!(injectivity_radius_check(&q, &s, 4, 3), Err(Error::Precondition(_))));
        let q = FiniteQuotient::new(&z, 1001, 1, 1).unwrap();
        assert_eq!(
            injectivity_radius_check(&q, &s, 200, 10).unwrap(),
            Injectivity { injective: true, by_certificate: true }
        );
    }

    #[test]
    fn injectivity_free2_stage_one() {
        let f = GroupSpec::free(2).unwrap();
        let mut s = vec![f.identity()];
        s.extend_from_slice(f.generators());
        let cert_m = {
            let e = entry_growth_bound(&f, &s, 3).unwrap().unwrap();
            smallest_multiple_exceeding(1, 2 * e).unwrap()
        };
        let q = FiniteQuotient::new(&f, cert_m, 1, 1).unwrap();
        assert_eq!(
            injectivity_radius_check(&q, &s, 1, CAP).unwrap(),
            Injectivity { injective: true, by_certificate: false }
        );
    }

    #[test]
    fn sl2_quotient_order() {
        let g = GroupSpec::sl2z();
        let q = FiniteQuotient::new(&g, 6, 1, 1).unwrap();
        assert_eq!(q.order(), Some(144));
        let gens: Vec<_> = g.generators().iter().map(|s| q.project(s).unwrap()).collect();
        assert_eq!(q.enumerate(&gens, CAP).unwrap().len(), 144);
    }
}
