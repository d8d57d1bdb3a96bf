//! Finite windows of the limit configuration `ξ = inf_n ψ_n` and the
//! shift-space metric.

use num_traits::Signed;
use rustc_hash::FxHashSet;

use crate::construction::Construction;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::rational::{self, Rational};

/// Values of a configuration on a finite window.
///
/// Entries flagged exact are the true values. The others may exceed the
/// true value by at most `error_bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedConfiguration {
    /// Stage whose table produced the values.
    pub stage: usize,
    /// `Some(r)` when the window is the generator ball `B_r` in BFS order.
    pub radius: Option<u32>,
    pub window: Vec<GroupElement>,
    pub values: Vec<Rational>,
    pub exact: Vec<bool>,
    pub error_bound: Rational,
}

impl TruncatedConfiguration {
    /// The zero configuration on `B_r`.
    pub fn zero(spec: &GroupSpec, radius: u32, cap: u64) -> Result<Self> {
        let window = spec.generator_ball(radius, cap)?.into_elements();
        let len = window.len();
        Ok(TruncatedConfiguration {
            stage: 0,
            radius: Some(radius),
            window,
            values: vec![rational::zero(); len],
            exact: vec![true; len],
            error_bound: rational::zero(),
        })
    }

    pub fn get(&self, g: &GroupElement) -> Option<(Rational, bool)> {
        self.window.iter().position(|w| w == g).map(|i| (self.values[i], self.exact[i]))
    }

    pub fn all_exact(&self) -> bool {
        self.exact.iter().all(|e| *e)
    }

    fn slack(&self, i: usize) -> Rational {
        if self.exact[i] {
            rational::zero()
        } else {
            self.error_bound
        }
    }
}

/// `ξ` on `B_radius`, read off the deepest stage `n`.
///
/// For `g ∈ B_n ⊆ S_m` (`m > n`) every later `φ_m(g)` is at least
/// `1 - 1/(M_{n+1} + 1)`, so `ψ_n(g)` overestimates `ξ(g)` by at most that
/// step, and not at all when `ψ_n(g)` is already below it.
pub fn xi_window(c: &Construction, radius: u32) -> Result<TruncatedConfiguration> {
    let n = c.depth();
    if n == 0 {
        return Err(Error::Precondition("no stages built".into()));
    }
    if radius as usize > n {
        return Err(Error::Precondition(format!("window radius {radius} exceeds the stage count {n}")));
    }
    translate_window(c, &c.group.identity(), radius)
}

/// `σ_t ξ` on `B_radius`, i.e. `b ↦ ξ(b t)`.
///
/// Entries whose argument leaves `B_n` and is not settled exactly make the
/// error bound trivial.
pub fn translate_window(c: &Construction, t: &GroupElement, radius: u32) -> Result<TruncatedConfiguration> {
    let stage = c.deepest().ok_or_else(|| Error::Precondition("no stages built".into()))?;
    let spec = &c.group;
    let n = c.depth();
    let eps = c.error_bound()?;
    let window = spec.generator_ball(radius, c.profile.node_cap)?.into_elements();
    let mut values = Vec::with_capacity(window.len());
    let mut exact = Vec::with_capacity(window.len());
    let mut error_bound = rational::zero();
    let inner: FxHashSet<GroupElement> =
        spec.generator_ball(n as u32, c.profile.node_cap)?.into_elements().into_iter().collect();
    for b in &window {
        let g = spec.compose(b, t)?;
        let v = stage.psi.value_of(&g)?;
        let settled = spec.is_identity(&g) || v <= rational::one() - eps;
        if !settled {
            let guaranteed = inner.contains(&g);
            error_bound = error_bound.max(if guaranteed { eps } else { rational::one() });
        }
        values.push(v);
        exact.push(settled);
    }
    Ok(TruncatedConfiguration { stage: n, radius: Some(radius), window, values, exact, error_bound })
}

/// `σ_h`: the value at `w` moves to `w h^-1`, since `(σ_h x)(g) = x(g h)`.
pub fn shift_window(c: &TruncatedConfiguration, h: &GroupElement, spec: &GroupSpec) -> Result<TruncatedConfiguration> {
    let h_inv = spec.inverse(h)?;
    let window = c.window.iter().map(|w| spec.compose(w, &h_inv)).collect::<Result<Vec<_>>>()?;
    Ok(TruncatedConfiguration { radius: None, window, ..c.clone() })
}

/// Bracket `[lo, hi]` for `d(x, y) = sup_g 2^{-|g|} |x(g) - y(g)|` from two
/// windows on the same ball `B_r`.
///
/// Outside the ball the weight is at most `2^{-(r+1)}` and values lie in
/// `[0, 1]`, which is where the tail term of `hi` comes from.
pub fn metric_distance(
    a: &TruncatedConfiguration,
    b: &TruncatedConfiguration,
    spec: &GroupSpec,
) -> Result<(Rational, Rational)> {
    let r = match (a.radius, b.radius) {
        (Some(r), Some(s)) if r == s && a.window == b.window => r,
        _ => return Err(Error::Precondition("metric needs two windows on the same generator ball".into())),
    };
    let mut lo = rational::zero();
    let mut hi = rational::pow2_inv(r + 1);
    for (i, g) in a.window.iter().enumerate() {
        let len = spec.word_length(g, u64::MAX)?;
        let w = rational::pow2_inv(len);
        let diff = (a.values[i] - b.values[i]).abs();
        let slack = a.slack(i) + b.slack(i);
        lo = lo.max(w * (diff - slack).max(rational::zero()));
        hi = hi.max(w * (diff + slack));
    }
    Ok((lo, hi.min(rational::one())))
}
