//! Local nets on the 1+1 integer Minkowski lattice.
//!
//! Generator sets are attached to double cones, and the two net axioms are
//! checked numerically: isotony as span containment, Einstein causality as
//! the premonoidal interchange law between spacelike regions.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutant::{GeneratorSet, HomSubspace};
use crate::error::{Error, Result};
use crate::hilb::{interchange_residuals, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub t: i64,
    pub x: i64,
}

impl Event {
    pub fn new(t: i64, x: i64) -> Self {
        Event { t, x }
    }
}

/// `p ≼ q` iff `q.t − p.t ≥ |q.x − p.x|`.
pub fn causal_leq(p: Event, q: Event) -> bool {
    q.t - p.t >= (q.x - p.x).abs()
}

pub fn comparable(p: Event, q: Event) -> bool {
    causal_leq(p, q) || causal_leq(q, p)
}

/// A closed rectangle of lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub t_min: i64,
    pub t_max: i64,
    pub x_min: i64,
    pub x_max: i64,
}

impl Bounds {
    pub fn new(t_min: i64, t_max: i64, x_min: i64, x_max: i64) -> Result<Self> {
        if t_min > t_max || x_min > x_max {
            return Err(Error::InvalidCone(format!(
                "empty lattice bounds t∈[{t_min},{t_max}], x∈[{x_min},{x_max}]"
            )));
        }
        Ok(Bounds { t_min, t_max, x_min, x_max })
    }

    pub fn contains(&self, e: Event) -> bool {
        (self.t_min..=self.t_max).contains(&e.t) && (self.x_min..=self.x_max).contains(&e.x)
    }

    pub fn events(&self) -> Vec<Event> {
        (self.t_min..=self.t_max)
            .flat_map(|t| (self.x_min..=self.x_max).map(move |x| Event::new(t, x)))
            .collect()
    }
}

/// The causal interval `[lo, hi] = {e : lo ≼ e ≼ hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleCone {
    lo: Event,
    hi: Event,
}

impl DoubleCone {
    pub fn new(lo: Event, hi: Event) -> Result<Self> {
        if !causal_leq(lo, hi) {
            return Err(Error::InvalidCone(format!(
                "({}, {}) does not precede ({}, {})",
                lo.t, lo.x, hi.t, hi.x
            )));
        }
        Ok(DoubleCone { lo, hi })
    }

    pub fn point(e: Event) -> Self {
        DoubleCone { lo: e, hi: e }
    }

    pub fn lo(&self) -> Event {
        self.lo
    }

    pub fn hi(&self) -> Event {
        self.hi
    }

    /// Lattice points of the cone in `(t, x)` order.
    pub fn events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        for t in self.lo.t..=self.hi.t {
            let reach = (t - self.lo.t).min(self.hi.t - t);
            for x in self.lo.x - reach..=self.lo.x + reach {
                let e = Event::new(t, x);
                if causal_leq(self.lo, e) && causal_leq(e, self.hi) {
                    out.push(e);
                }
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &DoubleCone) -> bool {
        let outer: BTreeSet<Event> = other.events().into_iter().collect();
        self.events().iter().all(|e| outer.contains(e))
    }
}

/// No event of `a` is causally comparable with an event of `b`.
pub fn spacelike(a: &DoubleCone, b: &DoubleCone) -> bool {
    let eb = b.events();
    a.events().iter().all(|&p| eb.iter().all(|&q| !comparable(p, q)))
}

/// A named cone with its local generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub cone: DoubleCone,
    pub gens: GeneratorSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalNet {
    bounds: Bounds,
    ctx: Context,
    regions: Vec<Region>,
}

impl CausalNet {
    /// Every cone must lie inside `bounds`, every generator set must share
    /// `ctx` and be closed under dagger.
    pub fn new(bounds: Bounds, ctx: Context, regions: Vec<Region>) -> Result<Self> {
        for (i, r) in regions.iter().enumerate() {
            if regions[..i].iter().any(|s| s.name == r.name) {
                return Err(Error::InvalidCone(format!("duplicate region name `{}`", r.name)));
            }
            if !bounds.contains(r.cone.lo) || !bounds.contains(r.cone.hi) {
                return Err(Error::InvalidCone(format!("region `{}` leaves the lattice", r.name)));
            }
            if r.gens.ctx() != ctx {
                return Err(Error::ContextMismatch { left: ctx.hdim(), right: r.gens.ctx().hdim() });
            }
            r.gens.check_dagger_closed(1e-9)?;
        }
        Ok(CausalNet { bounds, ctx, regions })
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn ctx(&self) -> Context {
        self.ctx
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotonyViolation {
    pub inner: String,
    pub outer: String,
    pub dom: String,
    pub cod: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotonyReport {
    pub holds: bool,
    pub nested_pairs: usize,
    pub violations: Vec<IsotonyViolation>,
}

/// For every ordered pair of distinct regions with nested event sets, the
/// inner span must lie in the outer span on each hom-pair.
pub fn check_isotony(net: &CausalNet, tol: f64) -> IsotonyReport {
    let mut nested_pairs = 0;
    let mut violations = Vec::new();
    for (i, inner) in net.regions.iter().enumerate() {
        for (j, outer) in net.regions.iter().enumerate() {
            if i == j || !inner.cone.is_subset_of(&outer.cone) {
                continue;
            }
            nested_pairs += 1;
            for ((dom, cod), span) in inner.gens.spans(tol) {
                let outer_span = HomSubspace::span(&dom, &cod, net.ctx, outer.gens.arrows(), tol);
                let residual = span
                    .basis()
                    .iter()
                    .map(|f| outer_span.residual(f.mat()))
                    .fold(0.0, f64::max);
                if residual > tol {
                    violations.push(IsotonyViolation {
                        inner: inner.name.clone(),
                        outer: outer.name.clone(),
                        dom: dom.name().to_string(),
                        cod: cod.name().to_string(),
                        residual,
                    });
                }
            }
        }
    }
    IsotonyReport { holds: violations.is_empty(), nested_pairs, violations }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstPair {
    pub region_a: String,
    pub region_b: String,
    pub generator_a: usize,
    pub generator_b: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalityReport {
    pub holds: bool,
    pub spacelike_pairs: usize,
    pub generator_pairs: usize,
    pub worst: Option<WorstPair>,
}

/// Both interchange residuals between generators of every spacelike pair
/// of regions must be at most `tol`.
pub fn check_causality(net: &CausalNet, tol: f64) -> CausalityReport {
    let n = net.regions.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| spacelike(&net.regions[i].cone, &net.regions[j].cone))
        .collect();
    let results: Vec<(usize, Option<WorstPair>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&net.regions[i], &net.regions[j]);
            let mut worst: Option<WorstPair> = None;
            let mut count = 0;
            for (p, f) in a.gens.arrows().iter().enumerate() {
                for (q, g) in b.gens.arrows().iter().enumerate() {
                    count += 1;
                    let (r1, r2) = interchange_residuals(f, g).expect("shared context");
                    let r = r1.max(r2);
                    if worst.as_ref().is_none_or(|w| r > w.residual) {
                        worst = Some(WorstPair {
                            region_a: a.name.clone(),
                            region_b: b.name.clone(),
                            generator_a: p,
                            generator_b: q,
                            residual: r,
                        });
                    }
                }
            }
            (count, worst)
        })
        .collect();
    let generator_pairs = results.iter().map(|r| r.0).sum();
    let mut worst: Option<WorstPair> = None;
    for (_, w) in results {
        if let Some(w) = w {
            if worst.as_ref().is_none_or(|v| w.residual > v.residual) {
                worst = Some(w);
            }
        }
    }
    let holds = worst.as_ref().is_none_or(|w| w.residual <= tol);
    CausalityReport { holds, spacelike_pairs: pairs.len(), generator_pairs, worst }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilb::{t_ab, Arrow, Obj};
    use crate::linalg::CMatrix;

    fn cone(t0: i64, x0: i64, t1: i64, x1: i64) -> DoubleCone {
        DoubleCone::new(Event::new(t0, x0), Event::new(t1, x1)).unwrap()
    }

    #[test]
    fn causal_order_examples() {
        let o = Event::new(0, 0);
        assert!(causal_leq(o, o));
        assert!(causal_leq(o, Event::new(2, 1)));
        assert!(!causal_leq(o, Event::new(1, 2)));
    }

    #[test]
    fn cone_events() {
        assert_eq!(cone(0, 0, 0, 0).events(), vec![Event::new(0, 0)]);
        let diamond = cone(0, 0, 2, 0).events();
        assert_eq!(diamond.len(), 5);
        assert!(diamond.contains(&Event::new(1, -1)));
        assert_eq!(cone(0, 0, 1, 0).events(), vec![Event::new(0, 0), Event::new(1, 0)]);
        assert!(DoubleCone::new(Event::new(0, 0), Event::new(1, 2)).is_err());
    }

    #[test]
    fn spacelike_examples() {
        let c = cone(0, 0, 2, 0);
        assert!(!spacelike(&c, &c));
        assert!(spacelike(&cone(0, 0, 0, 0), &cone(0, 5, 0, 5)));
        assert!(!spacelike(&cone(0, 0, 1, 0), &cone(0, 1, 1, 1)));
    }

    fn region(name: &str, c: DoubleCone, arrows: Vec<Arrow>) -> Region {
        let ctx = Context::new(2).unwrap();
        Region { name: name.into(), cone: c, gens: GeneratorSet::new(ctx, arrows).unwrap() }
    }

    fn central(m: &[f64]) -> Arrow {
        let ctx = Context::new(2).unwrap();
        let hat = CMatrix::from_real(1, 1, m).unwrap();
        Arrow::central(&hat, &Obj::unit(), &Obj::unit(), ctx).unwrap()
    }

    #[test]
    fn isotony_cases() {
        let ctx = Context::new(2).unwrap();
        let b = Bounds::new(0, 4, -4, 4).unwrap();
        let t = t_ab(0, 1, ctx).unwrap();
        let single = CausalNet::new(b, ctx, vec![region("a", cone(0, 0, 2, 0), vec![t.clone()])]).unwrap();
        assert!(check_isotony(&single, 1e-9).holds);

        let nested = CausalNet::new(
            b,
            ctx,
            vec![
                region("inner", cone(1, 0, 2, 0), vec![t.clone()]),
                region("outer", cone(0, 0, 3, 0), vec![t.clone()]),
            ],
        )
        .unwrap();
        let rep = check_isotony(&nested, 1e-9);
        assert!(rep.holds && rep.nested_pairs == 1);

        let broken = CausalNet::new(
            b,
            ctx,
            vec![
                region("inner", cone(1, 0, 2, 0), vec![t]),
                region("outer", cone(0, 0, 3, 0), vec![central(&[1.0])]),
            ],
        )
        .unwrap();
        let rep = check_isotony(&broken, 1e-9);
        assert!(!rep.holds);
        assert_eq!(rep.violations[0].inner, "inner");
        assert_eq!(rep.violations[0].outer, "outer");
    }

    #[test]
    fn causality_cases() {
        let ctx = Context::new(2).unwrap();
        let b = Bounds::new(0, 4, -4, 4).unwrap();
        let t = t_ab(0, 1, ctx).unwrap();
        let left = cone(0, -3, 0, -3);
        let right = cone(0, 3, 0, 3);
        let ok = CausalNet::new(
            b,
            ctx,
            vec![region("l", left, vec![central(&[2.0])]), region("r", right, vec![t.clone()])],
        )
        .unwrap();
        assert!(check_causality(&ok, 1e-8).holds);

        let bad = CausalNet::new(b, ctx, vec![region("l", left, vec![t.clone()]), region("r", right, vec![t.clone()])])
            .unwrap();
        let rep = check_causality(&bad, 1e-8);
        assert!(!rep.holds);
        assert!((rep.worst.unwrap().residual - 1.0).abs() < 1e-12);

        let timelike = CausalNet::new(
            b,
            ctx,
            vec![region("l", cone(0, 0, 0, 0), vec![t.clone()]), region("r", cone(2, 0, 2, 0), vec![t])],
        )
        .unwrap();
        let rep = check_causality(&timelike, 1e-8);
        assert!(rep.holds && rep.spacelike_pairs == 0);
    }

    #[test]
    fn net_validation() {
        let ctx = Context::new(2).unwrap();
        let b = Bounds::new(0, 1, 0, 1).unwrap();
        let far = region("far", cone(0, 5, 0, 5), vec![]);
        assert!(CausalNet::new(b, ctx, vec![far]).is_err());
        let n = Arrow::new(
            Obj::unit(),
            Obj::unit(),
            ctx,
            CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap(),
        )
        .unwrap();
        let open = region("n", cone(0, 0, 0, 0), vec![n]);
        assert!(matches!(CausalNet::new(b, ctx, vec![open]), Err(Error::NotDaggerClosed { .. })));
    }
}
