//! Brute-force reference for the integer line.
//!
//! Sets `S^k` are built as integer sumsets and a residue lies in `S^k H` when
//! some element of `S^k` reduces to it. Nothing here touches the quotient BFS.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rigidtop::certificate::ReplayBackend;
use rigidtop::group::GroupElement;
use rigidtop::rational::Rational;
use rigidtop::staircase::{StageParams, StaircaseTable, TableKind};
use rigidtop::Result;

fn ints(set: &[GroupElement]) -> Vec<i64> {
    set.iter()
        .map(|g| match g {
            GroupElement::Int(t) => *t,
            other => panic!("not an integer: {other}"),
        })
        .collect()
}

/// `layers[k]` is the set of residues of `S^k`.
pub fn sumset_layers(set: &[i64], modulus: u64, depth: u64) -> Vec<BTreeSet<u64>> {
    let m = modulus as i64;
    let mut current: BTreeSet<i64> = [0].into_iter().collect();
    let mut layers = vec![current.iter().map(|x| x.rem_euclid(m) as u64).collect::<BTreeSet<_>>()];
    for _ in 0..depth {
        let mut next = current.clone();
        for x in &current {
            for s in set {
                next.insert(x + s);
            }
        }
        current = next;
        layers.push(current.iter().map(|x| x.rem_euclid(m) as u64).collect());
    }
    layers
}

/// `φ_n(q)` by the case definition: 1 on `H`, `(M + 1 - k)/(M + 1)` on
/// `S^k H ∖ S^{k-1} H`, 0 outside `S^M H`; stage one is the indicator of
/// `S H`.
pub fn phi_values(n: usize, set: &[i64], steps: u64, modulus: u64) -> Vec<Rational> {
    let mut out = vec![Rational::from_integer(0); modulus as usize];
    if n == 1 {
        for q in &sumset_layers(set, modulus, 1)[1] {
            out[*q as usize] = Rational::from_integer(1);
        }
        return out;
    }
    let layers = sumset_layers(set, modulus, steps);
    for q in 0..modulus {
        if let Some(k) = layers.iter().position(|l| l.contains(&q)) {
            out[q as usize] = Rational::new(steps as i64 + 1 - k as i64, steps as i64 + 1);
        }
    }
    out
}

/// `ψ_n(q) = min(ψ_{n-1}(q mod m_{n-1}), φ_n(q))`.
pub fn psi_values(phi: &[Rational], prev: Option<&[Rational]>) -> Vec<Rational> {
    match prev {
        None => phi.to_vec(),
        Some(prev) => {
            let parent = prev.len();
            phi.iter().enumerate().map(|(q, v)| (*v).min(prev[q % parent])).collect()
        }
    }
}

/// `max_q |t(q + s) - t(q)|` over every residue.
pub fn defect(values: &[Rational], s: i64) -> Rational {
    let m = values.len() as i64;
    (0..m)
        .map(|q| {
            let a = values[q as usize];
            let b = values[(q + s).rem_euclid(m) as usize];
            if a > b {
                a - b
            } else {
                b - a
            }
        })
        .max()
        .unwrap()
}

pub fn table_values(t: &StaircaseTable) -> Vec<Rational> {
    let m = t.quotient().modulus();
    (0..m).map(|q| t.value_of(&GroupElement::Int(q as i64)).unwrap()).collect()
}

fn to_table(p: &StageParams, kind: TableKind, values: &[Rational]) -> StaircaseTable {
    let q = &p.quotient;
    let entries = values.iter().enumerate().map(|(r, v)| (q.project(&GroupElement::Int(r as i64)).unwrap(), *v));
    StaircaseTable::from_entries(p.n, p.steps, kind, q.clone(), entries)
}

/// Replay back end computing every table and defect by enumeration.
pub struct BruteForceLine;

impl ReplayBackend for BruteForceLine {
    fn name(&self) -> &str {
        "brute-force integer line"
    }

    fn phi_table(&self, p: &StageParams, _cap: u64) -> Result<(StaircaseTable, Vec<bool>)> {
        let set = ints(&p.set);
        let m = p.quotient.modulus();
        let values = phi_values(p.n, &set, p.steps, m);
        let layers = sumset_layers(&set, m, p.steps);
        let spheres = (1..=p.steps as usize).map(|k| layers[k].len() > layers[k - 1].len()).collect();
        Ok((to_table(p, TableKind::Phi, &values), spheres))
    }

    fn psi_table(&self, phi: &StaircaseTable, prev: Option<&StaircaseTable>) -> Result<StaircaseTable> {
        let phi_v = table_values(phi);
        let prev_v = prev.map(table_values);
        let values = psi_values(&phi_v, prev_v.as_deref());
        let q = phi.quotient();
        let entries = values.iter().enumerate().map(|(r, v)| (q.project(&GroupElement::Int(r as i64)).unwrap(), *v));
        Ok(StaircaseTable::from_entries(phi.stage, phi.steps, TableKind::Psi, q.clone(), entries))
    }

    fn defect(&self, t: &StaircaseTable, s: &GroupElement) -> Result<Rational> {
        let s = ints(std::slice::from_ref(s))[0];
        Ok(defect(&table_values(t), s))
    }
}
