//! Exact arithmetic in the supported groups and Cayley-ball enumeration.
//!
//! The catalog is deliberately small: the integers, free groups of finite
//! rank, the integral Heisenberg group, and `SL(2, Z)`. Every kind has a
//! canonical element form, so equality of elements decides the word problem,
//! and a faithful integer-matrix picture, which is what the congruence
//! quotients in [`crate::quotient`] reduce.

use std::fmt;

use num_rational::Ratio;
use rustc_hash::FxHashSet;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest free word [`GroupSpec::pow`] is willing to materialize.
pub const MAX_WORD_LEN: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKind {
    IntegerLine,
    Free { rank: u8 },
    Heisenberg3,
    Sl2z,
}

impl GroupKind {
    pub fn label(&self) -> String {
        match self {
            GroupKind::IntegerLine => "z".to_string(),
            GroupKind::Free { rank } => format!("free{rank}"),
            GroupKind::Heisenberg3 => "heis".to_string(),
            GroupKind::Sl2z => "sl2z".to_string(),
        }
    }
}

/// An element in canonical form.
///
/// * `Int(n)` for the integer line.
/// * `Word(letters)` for free groups: letter `i + 1` is the `i`-th generator,
///   `-(i + 1)` its inverse; always freely reduced.
/// * `Heis([x, y, z])` for the matrix `[[1, x, z], [0, 1, y], [0, 0, 1]]`.
/// * `Mat2([a, b, c, d])` for `[[a, b], [c, d]]` with `ad - bc = 1`.
///
/// The derived order (numeric lexicographic on the payload) is the tie-break
/// used everywhere an ordering is needed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Int(i64),
    Word(Vec<i8>),
    Heis([i64; 3]),
    Mat2([i64; 4]),
}

impl GroupElement {
    /// Parses a free word such as `"aB"`; capitals are inverses. The result is
    /// freely reduced.
    pub fn word(s: &str) -> Result<Self> {
        let mut letters = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let code = match ch {
                'a'..='z' => (ch as u8 - b'a' + 1) as i8,
                'A'..='Z' => -((ch as u8 - b'A' + 1) as i8),
                _ => return Err(Error::Config(format!("invalid letter {ch:?} in word {s:?}"))),
            };
            letters.push(code);
        }
        Ok(GroupElement::Word(reduce_word(&letters)))
    }

    pub fn heis(x: i64, y: i64, z: i64) -> Self {
        GroupElement::Heis([x, y, z])
    }

    pub fn mat2(a: i64, b: i64, c: i64, d: i64) -> Self {
        GroupElement::Mat2([a, b, c, d])
    }

    fn kind_name(&self) -> &'static str {
        match self {
            GroupElement::Int(_) => "integer",
            GroupElement::Word(_) => "free word",
            GroupElement::Heis(_) => "heisenberg matrix",
            GroupElement::Mat2(_) => "2x2 matrix",
        }
    }
}

/// Free reduction of a letter sequence.
pub fn reduce_word(letters: &[i8]) -> Vec<i8> {
    let mut out: Vec<i8> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

fn word_string(letters: &[i8]) -> String {
    letters
        .iter()
        .map(|&l| if l > 0 { (b'a' + (l as u8 - 1)) as char } else { (b'A' + ((-l) as u8 - 1)) as char })
        .collect()
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Int(n) => write!(f, "{n}"),
            GroupElement::Word(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Word(w) => write!(f, "{}", word_string(w)),
            GroupElement::Heis([x, y, z]) => write!(f, "[1,{x},{z},0,1,{y},0,0,1]"),
            GroupElement::Mat2([a, b, c, d]) => write!(f, "[{a},{b},{c},{d}]"),
        }
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GroupElement::Int(n) => s.serialize_str(&n.to_string()),
            GroupElement::Word(w) => s.serialize_str(&word_string(w)),
            GroupElement::Heis([x, y, z]) => [1, *x, *z, 0, 1, *y, 0, 0, 1].serialize(s),
            GroupElement::Mat2(m) => m.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Entries(Vec<i64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => {
                let numeric =
                    !t.is_empty() && t.strip_prefix('-').unwrap_or(&t).chars().all(|c| c.is_ascii_digit()) && t != "-";
                if numeric {
                    t.parse().map(GroupElement::Int).map_err(de::Error::custom)
                } else {
                    let w = GroupElement::word(&t).map_err(de::Error::custom)?;
                    if w.to_string() != t && !t.is_empty() {
                        return Err(de::Error::custom(format!("word {t:?} is not freely reduced")));
                    }
                    Ok(w)
                }
            }
            Raw::Entries(v) if v.len() == 4 => Ok(GroupElement::Mat2([v[0], v[1], v[2], v[3]])),
            Raw::Entries(v) if v.len() == 9 => {
                if [v[0], v[3], v[4], v[6], v[7], v[8]] != [1, 0, 1, 0, 0, 1] {
                    return Err(de::Error::custom("not an upper unitriangular matrix"));
                }
                Ok(GroupElement::Heis([v[1], v[5], v[2]]))
            }
            Raw::Entries(v) => Err(de::Error::custom(format!("matrix with {} entries", v.len()))),
        }
    }
}

/// Square matrix of nonnegative entry bounds, used by the growth estimates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsMatrix {
    pub dim: usize,
    pub entries: Vec<u128>,
}

impl AbsMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        AbsMatrix { dim, entries }
    }

    pub fn entrywise_max(&mut self, other: &AbsMatrix) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a = (*a).max(*b);
        }
    }

    /// Product, or `None` on overflow.
    pub fn checked_mul(&self, other: &AbsMatrix) -> Option<AbsMatrix> {
        let n = self.dim;
        let mut entries = vec![0u128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0u128;
                for k in 0..n {
                    acc = acc.checked_add(self.entries[i * n + k].checked_mul(other.entries[k * n + j])?)?;
                }
                entries[i * n + j] = acc;
            }
        }
        Some(AbsMatrix { dim: n, entries })
    }

    pub fn max_entry(&self) -> u128 {
        self.entries.iter().copied().max().unwrap_or(0)
    }
}

/// A group from the catalog together with its symmetric generating set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    kind: GroupKind,
    generators: Vec<GroupElement>,
    label: String,
}

const SANOV_A: [i64; 4] = [1, 2, 0, 1];
const SANOV_B: [i64; 4] = [1, 0, 2, 1];

impl GroupSpec {
    pub fn integer_line() -> Self {
        GroupSpec {
            kind: GroupKind::IntegerLine,
            generators: vec![GroupElement::Int(1), GroupElement::Int(-1)],
            label: "z".into(),
        }
    }

    pub fn free(rank: u8) -> Result<Self> {
        if !(2..=26).contains(&rank) {
            return Err(Error::Config(format!("free group rank must be in 2..=26, got {rank}")));
        }
        let generators =
            (1..=rank as i8).flat_map(|i| [GroupElement::Word(vec![i]), GroupElement::Word(vec![-i])]).collect();
        Ok(GroupSpec { kind: GroupKind::Free { rank }, generators, label: format!("free{rank}") })
    }

    pub fn heisenberg3() -> Self {
        GroupSpec {
            kind: GroupKind::Heisenberg3,
            generators: vec![
                GroupElement::heis(1, 0, 0),
                GroupElement::heis(-1, 0, 0),
                GroupElement::heis(0, 1, 0),
                GroupElement::heis(0, -1, 0),
            ],
            label: "heis".into(),
        }
    }

    /// `SL(2, Z)` generated by `S = [[0,-1],[1,0]]` and `T = [[1,1],[0,1]]`.
    pub fn sl2z() -> Self {
        GroupSpec {
            kind: GroupKind::Sl2z,
            generators: vec![
                GroupElement::mat2(0, -1, 1, 0),
                GroupElement::mat2(0, 1, -1, 0),
                GroupElement::mat2(1, 1, 0, 1),
                GroupElement::mat2(1, -1, 0, 1),
            ],
            label: "sl2z".into(),
        }
    }

    /// Accepts `z`, `free2`, `free<r>`, `heis`, `sl2z`.
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "z" => Ok(Self::integer_line()),
            "heis" => Ok(Self::heisenberg3()),
            "sl2z" => Ok(Self::sl2z()),
            _ => match label.strip_prefix("free").map(str::parse::<u8>) {
                Some(Ok(rank)) => Self::free(rank),
                _ => Err(Error::Config(format!("unknown group {label:?}"))),
            },
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn identity(&self) -> GroupElement {
        match self.kind {
            GroupKind::IntegerLine => GroupElement::Int(0),
            GroupKind::Free { .. } => GroupElement::Word(Vec::new()),
            GroupKind::Heisenberg3 => GroupElement::Heis([0; 3]),
            GroupKind::Sl2z => GroupElement::Mat2([1, 0, 0, 1]),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    /// Whether `g` is a canonical element of this group.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self.kind, g) {
            (GroupKind::IntegerLine, GroupElement::Int(_)) => true,
            (GroupKind::Free { rank }, GroupElement::Word(w)) => {
                w.iter().all(|&l| l != 0 && l.unsigned_abs() <= rank) && reduce_word(w) == *w
            }
            (GroupKind::Heisenberg3, GroupElement::Heis(_)) => true,
            (GroupKind::Sl2z, GroupElement::Mat2([a, b, c, d])) => {
                (*a as i128) * (*d as i128) - (*b as i128) * (*c as i128) == 1
            }
            _ => false,
        }
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::SpecMismatch(format!("{} {g} is not an element of {}", g.kind_name(), self.label)))
        }
    }

    pub fn compose(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        use GroupElement::*;
        match (self.kind, a, b) {
            (GroupKind::IntegerLine, Int(x), Int(y)) => {
                x.checked_add(*y).map(Int).ok_or(Error::Overflow("integer sum"))
            }
            (GroupKind::Free { .. }, Word(u), Word(v)) => {
                self.check(a)?;
                self.check(b)?;
                let mut out = u.clone();
                for &l in v {
                    if out.last() == Some(&-l) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                Ok(Word(out))
            }
            (GroupKind::Heisenberg3, Heis([x1, y1, z1]), Heis([x2, y2, z2])) => {
                let z = *z1 as i128 + *z2 as i128 + (*x1 as i128) * (*y2 as i128);
                Ok(Heis([
                    x1.checked_add(*x2).ok_or(Error::Overflow("heisenberg product"))?,
                    y1.checked_add(*y2).ok_or(Error::Overflow("heisenberg product"))?,
                    narrow(z, "heisenberg product")?,
                ]))
            }
            (GroupKind::Sl2z, Mat2(p), Mat2(q)) => mat2_mul(p, q).map(Mat2),
            _ => Err(Error::SpecMismatch(format!(
                "cannot compose {} with {} in {}",
                a.kind_name(),
                b.kind_name(),
                self.label
            ))),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        use GroupElement::*;
        self.check(a)?;
        match a {
            Int(x) => x.checked_neg().map(Int).ok_or(Error::Overflow("integer negation")),
            Word(w) => Ok(Word(w.iter().rev().map(|l| -l).collect())),
            Heis([x, y, z]) => {
                let nz = -(*z as i128) + (*x as i128) * (*y as i128);
                Ok(Heis([-x, -y, narrow(nz, "heisenberg inverse")?]))
            }
            Mat2([a, b, c, d]) => Ok(Mat2([*d, -b, -c, *a])),
        }
    }

    /// `a^k` by repeated squaring; negative `k` inverts.
    pub fn pow(&self, a: &GroupElement, k: i64) -> Result<GroupElement> {
        if let GroupElement::Word(w) = a {
            if (w.len() as u128) * (k.unsigned_abs() as u128) > MAX_WORD_LEN as u128 {
                return Err(Error::resource(format!("word power of length {}*{}", w.len(), k), MAX_WORD_LEN as u64));
            }
        }
        let mut base = if k < 0 { self.inverse(a)? } else { self.check(a).map(|_| a.clone())? };
        let mut e = k.unsigned_abs();
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.compose(&acc, &base)?;
            }
            e >>= 1;
            if e > 0 {
                base = self.compose(&base, &base)?;
            }
        }
        Ok(acc)
    }

    /// Integer matrix image of `g` (free words go through the fixed embedding).
    pub fn matrix_entries(&self, g: &GroupElement) -> Result<Vec<i64>> {
        self.check(g)?;
        Ok(match g {
            GroupElement::Int(t) => vec![1, *t, 0, 1],
            GroupElement::Word(_) => match free_matrix_embed(self.free_rank(), g)? {
                GroupElement::Mat2(m) => m.to_vec(),
                _ => unreachable!(),
            },
            GroupElement::Heis([x, y, z]) => vec![1, *x, *z, 0, 1, *y, 0, 0, 1],
            GroupElement::Mat2(m) => m.to_vec(),
        })
    }

    /// Largest absolute entry of the matrix picture of `g`.
    ///
    /// For the integer line this is `|t|` rather than the padded matrix maximum.
    pub fn max_abs_entry(&self, g: &GroupElement) -> Result<u64> {
        if let GroupElement::Int(t) = g {
            return Ok(t.unsigned_abs());
        }
        Ok(self.matrix_entries(g)?.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0))
    }

    /// Entrywise absolute value of the matrix picture of `g`.
    pub fn abs_matrix(&self, g: &GroupElement) -> Result<AbsMatrix> {
        let entries: Vec<u128> = self.matrix_entries(g)?.iter().map(|e| e.unsigned_abs() as u128).collect();
        let dim = if entries.len() == 9 { 3 } else { 2 };
        Ok(AbsMatrix { dim, entries })
    }

    pub fn matrix_dim(&self) -> usize {
        if self.kind == GroupKind::Heisenberg3 {
            3
        } else {
            2
        }
    }

    fn free_rank(&self) -> u8 {
        match self.kind {
            GroupKind::Free { rank } => rank,
            _ => 0,
        }
    }

    /// Closes `gens` under inverses, drops duplicates, sorts.
    pub fn symmetrize(&self, gens: &[GroupElement]) -> Result<Vec<GroupElement>> {
        let mut out = Vec::with_capacity(gens.len() * 2);
        for g in gens {
            out.push(g.clone());
            out.push(self.inverse(g)?);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// The Cayley ball of `radius` around the identity for the generating set
    /// `gens`, in BFS order with sorted spheres.
    pub fn ball(&self, gens: &[GroupElement], radius: u32, cap: u64) -> Result<Ball> {
        let mut walk = SphereWalk::new(self, gens)?;
        let mut elements = walk.current().to_vec();
        let mut sphere_starts = vec![0];
        while walk.radius() < radius {
            let remaining = cap.saturating_sub(elements.len() as u64);
            if !walk.advance(remaining)? {
                break;
            }
            if elements.len() as u64 + walk.current().len() as u64 > cap {
                return Err(Error::resource(format!("ball of radius {radius} in {}", self.label), cap));
            }
            sphere_starts.push(elements.len());
            elements.extend_from_slice(walk.current());
        }
        Ok(Ball { elements, sphere_starts })
    }

    /// `B_n`: the ball of radius `n` for the standard generators.
    pub fn generator_ball(&self, radius: u32, cap: u64) -> Result<Ball> {
        self.ball(&self.generators, radius, cap)
    }

    /// Word length for the standard generators.
    pub fn word_length(&self, g: &GroupElement, cap: u64) -> Result<u32> {
        self.check(g)?;
        match g {
            GroupElement::Int(t) => return Ok(t.unsigned_abs() as u32),
            GroupElement::Word(w) => return Ok(w.len() as u32),
            _ => {}
        }
        let mut walk = SphereWalk::new(self, &self.generators)?;
        let mut seen = 1u64;
        loop {
            if walk.current().binary_search(g).is_ok() {
                return Ok(walk.radius());
            }
            if !walk.advance(cap.saturating_sub(seen))? {
                return Err(Error::Precondition(format!("{g} is not reachable from the generators")));
            }
            seen += walk.current().len() as u64;
            if seen > cap {
                return Err(Error::resource(format!("word length of {g}"), cap));
            }
        }
    }

    /// `2^-n(g)` where `n(g)` is the least `n` with `g` in `B_n`.
    pub fn enumeration_weight(&self, g: &GroupElement, cap: u64) -> Result<Ratio<i64>> {
        let n = self.word_length(g, cap)?;
        if n > 62 {
            return Err(Error::Overflow("enumeration weight"));
        }
        Ok(Ratio::new(1, 1i64 << n))
    }
}

fn narrow(v: i128, what: &'static str) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow(what))
}

fn mat2_mul(p: &[i64; 4], q: &[i64; 4]) -> Result<[i64; 4]> {
    let m = |a: i64, b: i64, c: i64, d: i64| narrow(a as i128 * b as i128 + c as i128 * d as i128, "matrix product");
    Ok([m(p[0], q[0], p[1], q[2])?, m(p[0], q[1], p[1], q[3])?, m(p[2], q[0], p[3], q[2])?, m(p[2], q[1], p[3], q[3])?])
}

/// `B^-(i-1) A B^(i-1)` for letter index `i >= 1`; `B^k = [[1,0],[2k,1]]`.
fn conjugate_image(i: i64) -> Result<[i64; 4]> {
    let k = i - 1;
    let left = mat2_mul(&[1, 0, -2 * k, 1], &SANOV_A)?;
    mat2_mul(&left, &[1, 0, 2 * k, 1])
}

fn invert2(m: [i64; 4]) -> [i64; 4] {
    [m[3], -m[1], -m[2], m[0]]
}

/// The injective homomorphism `free(r) -> SL(2, Z)`.
///
/// For rank 2 the letters go to `A = [[1,2],[0,1]]` and `B = [[1,0],[2,1]]`.
/// For higher rank, letter `i` goes to `B^-(i-1) A B^(i-1)`; these conjugates
/// freely generate a free subgroup of `<A, B>`. Unreduced input is reduced
/// first.
pub fn free_matrix_embed(rank: u8, w: &GroupElement) -> Result<GroupElement> {
    let GroupElement::Word(letters) = w else {
        return Err(Error::SpecMismatch(format!("{} is not a free word", w.kind_name())));
    };
    let letters = reduce_word(letters);
    if let Some(bad) = letters.iter().find(|l| l.unsigned_abs() > rank) {
        return Err(Error::SpecMismatch(format!("letter {bad} exceeds rank {rank}")));
    }
    let mut images = Vec::with_capacity(rank as usize);
    for i in 1..=rank as i64 {
        images.push(match (rank, i) {
            (2, 1) => SANOV_A,
            (2, 2) => SANOV_B,
            _ => conjugate_image(i)?,
        });
    }
    let mut acc = [1, 0, 0, 1];
    for &l in &letters {
        let g = images[l.unsigned_abs() as usize - 1];
        acc = mat2_mul(&acc, &if l > 0 { g } else { invert2(g) })?;
    }
    Ok(GroupElement::Mat2(acc))
}

/// Layered BFS over a Cayley graph, keeping only the last two spheres.
///
/// With a symmetric generating set every neighbour of sphere `k` lies in
/// sphere `k - 1`, `k` or `k + 1`, so the two previous spheres suffice to
/// deduplicate.
pub struct SphereWalk<'a> {
    spec: &'a GroupSpec,
    gens: Vec<GroupElement>,
    previous: Vec<GroupElement>,
    current: Vec<GroupElement>,
    radius: u32,
}

impl<'a> SphereWalk<'a> {
    pub fn new(spec: &'a GroupSpec, gens: &[GroupElement]) -> Result<Self> {
        let id = spec.identity();
        let mut g: Vec<GroupElement> = Vec::with_capacity(gens.len());
        for s in gens {
            spec.check(s)?;
            if *s != id {
                g.push(s.clone());
            }
        }
        let sym = spec.symmetrize(&g)?;
        if sym.len() != g.iter().collect::<FxHashSet<_>>().len() {
            return Err(Error::Precondition("generating set is not symmetric".into()));
        }
        Ok(SphereWalk { spec, gens: sym, previous: Vec::new(), current: vec![id], radius: 0 })
    }

    pub fn current(&self) -> &[GroupElement] {
        &self.current
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Moves to the next sphere. Returns `false` when the group is exhausted.
    pub fn advance(&mut self, cap: u64) -> Result<bool> {
        let back: FxHashSet<&GroupElement> = self.previous.iter().chain(self.current.iter()).collect();
        let mut next: FxHashSet<GroupElement> = FxHashSet::default();
        for g in &self.current {
            for s in &self.gens {
                let h = self.spec.compose(g, s)?;
                if !back.contains(&h) {
                    next.insert(h);
                }
            }
            if next.len() as u64 > cap {
                return Err(Error::resource(
                    format!("sphere of radius {} in {}", self.radius + 1, self.spec.label),
                    cap,
                ));
            }
        }
        drop(back);
        if next.is_empty() {
            return Ok(false);
        }
        let mut next: Vec<GroupElement> = next.into_iter().collect();
        next.sort_unstable();
        self.previous = std::mem::replace(&mut self.current, next);
        self.radius += 1;
        Ok(true)
    }
}

/// A Cayley ball stored in BFS order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    elements: Vec<GroupElement>,
    sphere_starts: Vec<usize>,
}

impl Ball {
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<GroupElement> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn radius(&self) -> u32 {
        self.sphere_starts.len() as u32 - 1
    }

    pub fn sphere(&self, k: u32) -> &[GroupElement] {
        let k = k as usize;
        if k >= self.sphere_starts.len() {
            return &[];
        }
        let end = self.sphere_starts.get(k + 1).copied().unwrap_or(self.elements.len());
        &self.elements[self.sphere_starts[k]..end]
    }
}
