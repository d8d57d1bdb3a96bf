//! Staircase functions on finite quotients.
//!
//! `φ_n` is `1` on the kernel `H_n` and drops by `1/(M_n + 1)` per step of
//! Cayley distance for the generating set `π_n(S_n)`, reaching `0` outside
//! `S_n^{M_n} H_n`. Stage one is the indicator of `S_1 H_1`. `ψ_n` is the
//! running minimum `min(ψ_{n-1}, φ_n)`. Both are constant on `H_n`-cosets,
//! so a table indexed by quotient elements is the whole function on `G`.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::quotient::{FiniteQuotient, QuotientBall, QuotientElement};
use crate::rational::{self, Rational};

/// Inputs of one inductive stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageParams {
    /// Stage index, starting at 1.
    pub n: usize,
    /// Number of steps `M_n` of the staircase.
    pub steps: u64,
    /// `S_n`, symmetric, containing the identity.
    pub set: Vec<GroupElement>,
    pub quotient: FiniteQuotient,
    /// `F_{n-1}`; empty at stage one.
    pub f_prev: Vec<GroupElement>,
}

impl StageParams {
    pub fn projected_set(&self) -> Result<Vec<QuotientElement>> {
        self.set.iter().map(|s| self.quotient.project(s)).collect()
    }

    /// Depth of the BFS that carries the support.
    fn depth(&self) -> u32 {
        if self.n == 1 {
            1
        } else {
            self.steps as u32
        }
    }

    fn value_at_distance(&self, d: u32) -> Rational {
        if self.n == 1 {
            if d <= 1 {
                rational::one()
            } else {
                rational::zero()
            }
        } else if (d as u64) <= self.steps {
            Rational::new(self.steps as i64 + 1 - d as i64, self.steps as i64 + 1)
        } else {
            rational::zero()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Phi,
    Psi,
}

/// Exact values of `φ_n` or `ψ_n`, storing only the nonzero ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaircaseTable {
    pub stage: usize,
    pub steps: u64,
    pub kind: TableKind,
    quotient: FiniteQuotient,
    entries: FxHashMap<QuotientElement, Rational>,
}

impl StaircaseTable {
    pub fn from_entries(
        stage: usize,
        steps: u64,
        kind: TableKind,
        quotient: FiniteQuotient,
        entries: impl IntoIterator<Item = (QuotientElement, Rational)>,
    ) -> Self {
        let entries = entries.into_iter().filter(|(_, v)| *v != rational::zero()).collect();
        StaircaseTable { stage, steps, kind, quotient, entries }
    }

    pub fn quotient(&self) -> &FiniteQuotient {
        &self.quotient
    }

    /// Value at a quotient element; zero off the support.
    pub fn value(&self, q: &QuotientElement) -> Rational {
        self.entries.get(q).copied().unwrap_or_else(rational::zero)
    }

    pub fn value_of(&self, g: &GroupElement) -> Result<Rational> {
        Ok(self.value(&self.quotient.project(g)?))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn in_support(&self, q: &QuotientElement) -> bool {
        self.entries.contains_key(q)
    }

    pub fn support(&self) -> impl Iterator<Item = (&QuotientElement, &Rational)> {
        self.entries.iter()
    }

    /// Entries sorted by quotient element.
    pub fn sorted_entries(&self) -> Vec<(QuotientElement, Rational)> {
        let mut v: Vec<_> = self.entries.iter().map(|(q, r)| (*q, *r)).collect();
        v.sort_unstable_by_key(|a| a.0);
        v
    }

    pub fn set_value(&mut self, q: QuotientElement, v: Rational) {
        if v == rational::zero() {
            self.entries.remove(&q);
        } else {
            self.entries.insert(q, v);
        }
    }
}

fn staircase_ball(p: &StageParams, cap: u64) -> Result<QuotientBall> {
    let gens = p.projected_set()?;
    p.quotient.bfs(&gens, p.depth(), cap).map_err(|e| match e {
        Error::Resource { limit, .. } => Error::resource(format!("phi table of stage {}", p.n), limit),
        other => other,
    })
}

fn phi_from_ball(p: &StageParams, ball: &QuotientBall) -> StaircaseTable {
    let entries = ball.order().iter().map(|q| (*q, p.value_at_distance(ball.distance(q).unwrap_or(u32::MAX))));
    StaircaseTable::from_entries(p.n, p.steps, TableKind::Phi, p.quotient.clone(), entries)
}

fn spheres_from_ball(p: &StageParams, ball: &QuotientBall) -> Vec<bool> {
    (1..=p.steps as u32).map(|k| ball.sphere_len(k) > 0).collect()
}

/// `φ_n` on its support, from a BFS in the quotient truncated at `M_n`.
pub fn phi_table(p: &StageParams, cap: u64) -> Result<StaircaseTable> {
    Ok(phi_from_ball(p, &staircase_ball(p, cap)?))
}

/// `φ_n` together with the sphere occupancy of its BFS.
pub fn phi_table_and_spheres(p: &StageParams, cap: u64) -> Result<(StaircaseTable, Vec<bool>)> {
    let ball = staircase_ball(p, cap)?;
    Ok((phi_from_ball(p, &ball), spheres_from_ball(p, &ball)))
}

/// Entry `k` is true iff the sphere at distance `k + 1` is nonempty.
pub fn sphere_nonempty_check(p: &StageParams, cap: u64) -> Result<Vec<bool>> {
    let ball = p.quotient.bfs(&p.projected_set()?, p.steps as u32, cap)?;
    Ok(spheres_from_ball(p, &ball))
}

/// `ψ_n = min(ψ_{n-1} ∘ reduction, φ_n)`; `ψ_1 = φ_1`.
pub fn psi_from_phi(phi: &StaircaseTable, prev: Option<&StaircaseTable>) -> Result<StaircaseTable> {
    let q = phi.quotient();
    let entries: Vec<(QuotientElement, Rational)> = match prev {
        None => {
            if phi.stage != 1 {
                return Err(Error::Stage { stage: phi.stage, reason: "psi needs the previous psi table".into() });
            }
            phi.support().map(|(k, v)| (*k, *v)).collect()
        }
        Some(prev) => {
            if prev.stage + 1 != phi.stage || prev.kind != TableKind::Psi {
                return Err(Error::Stage {
                    stage: phi.stage,
                    reason: format!("previous table is {:?} of stage {}", prev.kind, prev.stage),
                });
            }
            if prev.quotient().modulus() != q.parent_modulus() {
                return Err(Error::Stage {
                    stage: phi.stage,
                    reason: "previous table is not on the parent level".into(),
                });
            }
            phi.support()
                .map(|(k, v)| {
                    let pulled = prev.value(&q.reduce_to(k, q.parent_modulus()));
                    (*k, pulled.min(*v))
                })
                .collect()
        }
    };
    Ok(StaircaseTable::from_entries(phi.stage, phi.steps, TableKind::Psi, q.clone(), entries))
}

pub fn psi_table(p: &StageParams, prev: Option<&StaircaseTable>, cap: u64) -> Result<StaircaseTable> {
    if let Some(prev) = prev {
        if prev.stage + 1 != p.n {
            return Err(Error::Stage { stage: p.n, reason: format!("previous table belongs to stage {}", prev.stage) });
        }
    }
    psi_from_phi(&phi_table(p, cap)?, prev)
}

/// `sup_g |t(g s) - t(g)|`, exact.
///
/// Both terms vanish unless `g` or `g s` lies in the support, so sweeping
/// the support and its right translate by `π(s)^-1` covers the supremum.
pub fn lipschitz_defect(t: &StaircaseTable, s: &GroupElement) -> Result<Rational> {
    let q = t.quotient();
    let ps = q.project(s)?;
    Ok(defect_by_residue(t, &ps))
}

pub(crate) fn defect_by_residue(t: &StaircaseTable, ps: &QuotientElement) -> Rational {
    let q = t.quotient();
    let ps_inv = q.inverse(ps);
    let mut worst = Gap::default();
    for (g, v) in t.support() {
        let right = t.value(&q.multiply(g, ps));
        if right != *v {
            worst.observe(v, &right);
        }
        let left = q.multiply(g, &ps_inv);
        if !t.in_support(&left) {
            // t(left) = 0 and t(left * s) = v.
            worst.observe(v, &rational::zero());
        }
    }
    worst.value()
}

/// Running maximum of `|a - b|`, kept as an unreduced fraction so the sweep
/// avoids a gcd per comparison.
#[derive(Default)]
struct Gap {
    num: i128,
    den: i128,
}

impl Gap {
    fn observe(&mut self, a: &Rational, b: &Rational) {
        let (an, ad) = (*a.numer() as i128, *a.denom() as i128);
        let (bn, bd) = (*b.numer() as i128, *b.denom() as i128);
        let num = (an * bd - bn * ad).abs();
        let den = ad * bd;
        if self.den == 0 || num * self.den > self.num * den {
            self.num = num;
            self.den = den;
        }
    }

    fn value(&self) -> Rational {
        if self.den == 0 {
            return rational::zero();
        }
        let g = num_integer::gcd(self.num, self.den);
        Rational::new((self.num / g) as i64, (self.den / g) as i64)
    }
}
