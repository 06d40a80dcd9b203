//! Concrete cartesian comonads (internal diagrams over a finite category,
//! gluing along a cartesian functor), limits and colimits in coalgebra
//! categories, slice comonads and pushforwards of coalgebras.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cat::{Category, Hom, Obj};
use crate::engine::{CoalgCat, CoalgMap, Coalgebra, Comonad, ExeFunctor, ExeNat, Flags, LawReport, Provenance};
use crate::error::{Error, Result};
use crate::finset::{self, budget, FinFn, FinSet, Side, Value};
use crate::polynomial::Polynomial;
use crate::slice::{
    pi_along, pi_counit_from, pi_map_between, pi_unit, pullback_along, pullback_map_between,
    sections, Family, SliceCat, SliceMap,
};

fn validation(law: &str, witness: impl std::fmt::Display) -> Error {
    Error::Validation {
        law: law.to_string(),
        witness: witness.to_string(),
    }
}

/// A finite category. Composites are stored as `(g, f) ↦ g ∘ f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinCat {
    pub objects: FinSet,
    pub arrows: FinSet,
    pub dom: FinFn,
    pub cod: FinFn,
    pub identity: FinFn,
    compose: BTreeMap<(Value, Value), Value>,
}

impl FinCat {
    /// Builds and validates a finite category from arrows `(name, dom, cod)`,
    /// identities `(object, arrow)` and composites `(g, f, g ∘ f)`.
    pub fn new(
        objects: FinSet,
        arrows: Vec<(Value, Value, Value)>,
        identities: Vec<(Value, Value)>,
        composites: Vec<(Value, Value, Value)>,
    ) -> Result<FinCat> {
        let names = FinSet::new(arrows.iter().map(|a| a.0.clone()).collect());
        if names.len() != arrows.len() {
            return Err(validation("arrow names are distinct", "duplicate arrow name"));
        }
        for (k, d, c) in &arrows {
            for end in [d, c] {
                if !objects.contains(end) {
                    return Err(validation("arrow endpoints are objects", format!("{k}: {end}")));
                }
            }
        }
        let dom = FinFn::from_pairs(names.clone(), objects.clone(), arrows.iter().map(|a| (a.0.clone(), a.1.clone())))?;
        let cod = FinFn::from_pairs(names.clone(), objects.clone(), arrows.iter().map(|a| (a.0.clone(), a.2.clone())))?;
        for (o, k) in &identities {
            if !names.contains(k) {
                return Err(validation("identities are arrows", format!("{o}: {k}")));
            }
        }
        let identity = FinFn::from_pairs(objects.clone(), names.clone(), identities.clone())
            .map_err(|e| validation("every object has one identity", e))?;
        let mut compose = BTreeMap::new();
        for (g, f, gf) in composites {
            for k in [&g, &f, &gf] {
                if !names.contains(k) {
                    return Err(validation("composites are arrows", format!("({g}, {f}) = {gf}")));
                }
            }
            if dom.apply(&g) != cod.apply(&f) {
                return Err(validation("composition only on composable pairs", format!("({g}, {f})")));
            }
            if let Some(prev) = compose.insert((g.clone(), f.clone()), gf.clone()) {
                if prev != gf {
                    return Err(validation("composition is a function", format!("({g}, {f}) = {prev} and {gf}")));
                }
            }
        }
        let cat = FinCat { objects, arrows: names, dom, cod, identity, compose };
        cat.check_laws()?;
        Ok(cat)
    }

    fn check_laws(&self) -> Result<()> {
        for o in self.objects.iter() {
            let id = self.identity.apply(o);
            if self.dom.apply(id) != o || self.cod.apply(id) != o {
                return Err(validation("identity typed", format!("{o}: {id}")));
            }
        }
        for g in self.arrows.iter() {
            for f in self.arrows.iter() {
                if self.dom.apply(g) != self.cod.apply(f) {
                    continue;
                }
                let Some(gf) = self.compose.get(&(g.clone(), f.clone())) else {
                    return Err(validation("composition defined on composable pairs", format!("({g}, {f})")));
                };
                if self.dom.apply(gf) != self.dom.apply(f) || self.cod.apply(gf) != self.cod.apply(g) {
                    return Err(validation("composite typed", format!("({g}, {f}) = {gf}")));
                }
            }
        }
        for f in self.arrows.iter() {
            let left = self.identity.apply(self.cod.apply(f));
            let right = self.identity.apply(self.dom.apply(f));
            if self.comp(left, f) != f {
                return Err(validation("left unit", format!("({left}, {f})")));
            }
            if self.comp(f, right) != f {
                return Err(validation("right unit", format!("({f}, {right})")));
            }
        }
        for h in self.arrows.iter() {
            for g in self.arrows.iter().filter(|g| self.cod.apply(g) == self.dom.apply(h)) {
                for f in self.arrows.iter().filter(|f| self.cod.apply(f) == self.dom.apply(g)) {
                    if self.comp(h, self.comp(g, f)) != self.comp(self.comp(h, g), f) {
                        return Err(validation("associativity", format!("({h}, {g}, {f})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `g ∘ f` for a composable pair.
    pub fn comp(&self, g: &Value, f: &Value) -> &Value {
        &self.compose[&(g.clone(), f.clone())]
    }

    pub fn composites(&self) -> impl Iterator<Item = (&Value, &Value, &Value)> {
        self.compose.iter().map(|((g, f), gf)| (g, f, gf))
    }

    pub fn id(&self, o: &Value) -> &Value {
        self.identity.apply(o)
    }

    pub fn discrete(objects: &FinSet) -> FinCat {
        let arrows = objects.iter().map(|o| (Value::pair(Value::atom("id"), o.clone()), o.clone(), o.clone())).collect::<Vec<_>>();
        let ids = arrows.iter().map(|a| (a.1.clone(), a.0.clone())).collect();
        let comps = arrows.iter().map(|a| (a.0.clone(), a.0.clone(), a.0.clone())).collect();
        FinCat::new(objects.clone(), arrows, ids, comps).expect("discrete category")
    }

    /// `0 -u-> 1`.
    pub fn interval() -> FinCat {
        let a = Value::atom;
        FinCat::new(
            FinSet::atoms(["0", "1"]),
            vec![(a("id0"), a("0"), a("0")), (a("id1"), a("1"), a("1")), (a("u"), a("0"), a("1"))],
            vec![(a("0"), a("id0")), (a("1"), a("id1"))],
            vec![
                (a("id0"), a("id0"), a("id0")),
                (a("id1"), a("id1"), a("id1")),
                (a("u"), a("id0"), a("u")),
                (a("id1"), a("u"), a("u")),
            ],
        )
        .expect("interval category")
    }

    /// The polynomial `C₀ <-cod- C₁ -dom-> C₀ = C₀` of the diagram comonad.
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::new(self.cod.clone(), self.dom.clone(), FinFn::identity(&self.objects)).expect("typed")
    }
}

/// `X ↦ Π_dom cod* X` on `E/C₀`. An element over `c` is `Pair(c, {k ↦ x})`
/// with one `x` over `cod k` for each arrow `k` out of `c`; a coalgebra is a
/// covariant diagram `C -> E`.
pub fn internal_diagram_comonad(c: &FinCat) -> Comonad {
    let poly = c.polynomial();
    let functor = poly.functor().renamed(format!("diagrams over {}", c.objects));
    let cat = c.clone();
    let counit = ExeNat::new("eps", functor.clone(), crate::engine::identity_functor(&functor.src), move |x: &Family, gx: &Family, _| {
        FinFn::new(gx.total().clone(), x.total().clone(), |v| {
            v.snd().lookup(cat.id(v.fst())).expect("identity is an out-arrow").clone()
        })
    });
    let cat = c.clone();
    let comult = ExeNat::new("delta", functor.clone(), crate::engine::compose(&functor, &functor), move |_x: &Family, gx: &Family, ggx: &Family| {
        FinFn::new(gx.total().clone(), ggx.total().clone(), |v| {
            let t = v.snd();
            Value::pair(
                v.fst().clone(),
                Value::table_sorted(
                    t.entries()
                        .iter()
                        .map(|(k, _)| {
                            let d = cat.cod.apply(k);
                            let inner = Value::table_sorted(
                                cat.arrows
                                    .iter()
                                    .filter(|l| cat.dom.apply(l) == d)
                                    .map(|l| (l.clone(), t.lookup(cat.comp(l, k)).expect("composite out of c").clone()))
                                    .collect(),
                            );
                            (k.clone(), Value::pair(d.clone(), inner))
                        })
                        .collect(),
                ),
            )
        })
    });
    Comonad { name: format!("diagrams over {}", c.objects), functor, counit, comult }
}

/// A diagram `C -> E` as a family over `C₀` with an action: `x · k` for `x`
/// over `dom k`.
pub fn diagram_coalgebra(
    comonad: &Arc<Comonad>,
    c: &FinCat,
    carrier: Family,
    act: impl Fn(&Value, &Value) -> Option<Value>,
) -> Result<Coalgebra> {
    let gx = comonad.apply(&carrier)?;
    let mut table = Vec::with_capacity(carrier.len());
    for x in carrier.total().iter() {
        let o = carrier.over(x);
        let mut entries = Vec::new();
        for k in c.arrows.iter().filter(|k| c.dom.apply(k) == o) {
            let y = if k == c.id(o) {
                act(x, k).unwrap_or_else(|| x.clone())
            } else {
                act(x, k).ok_or_else(|| validation("action is total", format!("{x} . {k}")))?
            };
            entries.push((k.clone(), y));
        }
        table.push(Value::pair(o.clone(), Value::table(entries)));
    }
    let structure = FinFn::from_table(carrier.total().clone(), gx.total().clone(), table)
        .map_err(|e| validation("action lands over the codomain", e))?;
    let coalg = Coalgebra { comonad: comonad.clone(), carrier, gcarrier: gx, structure };
    Hom::new(coalg.carrier.clone(), coalg.gcarrier.clone(), coalg.structure.clone())
        .map_err(|e| validation("action lands over the codomain", e))?;
    if let Some(v) = coalg.check_laws().violations.into_iter().next() {
        return Err(validation(&v.law, v.witness));
    }
    Ok(coalg)
}

/// The action `x · k` recorded in a diagram coalgebra.
pub fn diagram_action(a: &Coalgebra, x: &Value, k: &Value) -> Option<Value> {
    a.structure.get(x)?.snd().lookup(k).cloned()
}

/// A cartesian functor `E -> E` from a closed catalog.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Glue {
    Identity,
    Power(usize),
    ExpFrom(Vec<String>),
    ConstantTerminal,
}

impl Glue {
    fn exponent(&self) -> Option<FinSet> {
        match self {
            Glue::Power(k) => Some(FinSet::atoms((0..*k).map(|i| i.to_string()))),
            Glue::ExpFrom(ks) => Some(FinSet::atoms(ks)),
            _ => None,
        }
    }

    /// `H(X)` as a sorted list.
    pub fn apply(&self, xs: &[Value]) -> Result<Vec<Value>> {
        Ok(match self {
            Glue::Identity => xs.to_vec(),
            Glue::ConstantTerminal => vec![Value::Unit],
            _ => {
                let keys = self.exponent().expect("exponential entry");
                budget::check(budget::power(xs.len(), keys.len()))?;
                let choices = vec![xs; keys.len()];
                sections(keys.as_slice(), &choices)
            }
        })
    }

    /// `H(m)` on one element.
    pub fn map_value(&self, m: &dyn Fn(&Value) -> Value, v: &Value) -> Value {
        match self {
            Glue::Identity => m(v),
            Glue::ConstantTerminal => Value::Unit,
            _ => Value::table_sorted(v.entries().iter().map(|(k, x)| (k.clone(), m(x))).collect()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Glue::Identity => "identity".into(),
            Glue::Power(k) => format!("power({k})"),
            Glue::ExpFrom(ks) => format!("exp_from({})", ks.join(",")),
            Glue::ConstantTerminal => "constant_terminal".into(),
        }
    }

    /// The comonad polynomial on `{1, 2}`: `(X₁, X₂) ↦ (X₁, H X₁ × X₂)`.
    pub fn polynomial(&self) -> Polynomial {
        let (one, two) = (Value::atom("1"), Value::atom("2"));
        let idx = glue_index();
        let mut positions = vec![(Value::atom("first"), Value::atom("b1"), one.clone()), (Value::atom("second"), Value::atom("b2"), two.clone())];
        let (shapes, keys): (Vec<Value>, Vec<Value>) = match self {
            Glue::Identity => (vec![Value::atom("b1"), Value::atom("b2")], vec![Value::atom("h")]),
            Glue::ConstantTerminal => (vec![Value::atom("b1"), Value::atom("b2")], vec![]),
            _ => (vec![Value::atom("b1"), Value::atom("b2")], self.exponent().unwrap().iter().cloned().collect()),
        };
        for k in keys {
            positions.push((Value::pair(Value::atom("h"), k), Value::atom("b2"), one.clone()));
        }
        let a = FinSet::new(positions.iter().map(|p| p.0.clone()).collect());
        let b = FinSet::new(shapes);
        Polynomial::new(
            FinFn::from_pairs(a.clone(), idx.clone(), positions.iter().map(|p| (p.0.clone(), p.2.clone()))).unwrap(),
            FinFn::from_pairs(a, b.clone(), positions.iter().map(|p| (p.0.clone(), p.1.clone()))).unwrap(),
            FinFn::from_pairs(b, idx, [(Value::atom("b1"), one), (Value::atom("b2"), two)]).unwrap(),
        )
        .unwrap()
    }
}

/// The index `{1, 2}` of the product world `E × E`.
pub fn glue_index() -> FinSet {
    FinSet::atoms(["1", "2"])
}

/// `(X₁, X₂) ↦ (X₁, H X₁ × X₂)` on `E × E`, presented as families over
/// `{1, 2}`. Elements are `Tag(Left, x₁)` over 1 and
/// `Tag(Right, Pair(h, x₂))` over 2.
pub fn gluing_comonad(h: &Glue) -> Comonad {
    let cat = SliceCat::new(glue_index());
    let (one, two) = (Value::atom("1"), Value::atom("2"));
    let (h1, h2, h3) = (h.clone(), h.clone(), h.clone());
    let (o1, t1) = (one.clone(), two.clone());
    let functor = ExeFunctor::new(
        format!("gluing along {}", h.name()),
        cat.clone(),
        cat.clone(),
        Flags::ALL,
        Provenance::Polynomial,
        move |x: &Family| {
            let x1 = x.fiber(&o1);
            let x2 = x.fiber(&t1);
            let hx = h1.apply(&x1)?;
            budget::check(x1.len().saturating_add(hx.len().saturating_mul(x2.len())))?;
            let first = x1.iter().map(|v| Value::inl(v.clone())).collect();
            let second = hx.iter().flat_map(|hv| x2.iter().map(move |v| Value::inr(Value::pair(hv.clone(), v.clone())))).collect();
            Family::from_fibers(&glue_index(), [(o1.clone(), first), (t1.clone(), second)])
        },
        move |m: &SliceMap, gx: &Family, gy: &Family| {
            let f = |v: &Value| m.apply(v).clone();
            FinFn::new(gx.total().clone(), gy.total().clone(), |v| match v.as_tag() {
                Some((Side::Left, x)) => Value::inl(m.apply(x).clone()),
                Some((_, p)) => Value::inr(Value::pair(h2.map_value(&f, p.fst()), m.apply(p.snd()).clone())),
                None => unreachable!("tagged"),
            })
        },
    );
    let id = crate::engine::identity_functor(&cat);
    let counit = ExeNat::new("eps", functor.clone(), id, |x: &Family, gx: &Family, _| {
        FinFn::new(gx.total().clone(), x.total().clone(), |v| match v.as_tag() {
            Some((Side::Left, x)) => x.clone(),
            Some((_, p)) => p.snd().clone(),
            None => unreachable!("tagged"),
        })
    });
    let comult = ExeNat::new("delta", functor.clone(), crate::engine::compose(&functor, &functor), move |_x: &Family, gx: &Family, ggx: &Family| {
        let inl = |v: &Value| Value::inl(v.clone());
        FinFn::new(gx.total().clone(), ggx.total().clone(), |v| match v.as_tag() {
            Some((Side::Left, _)) => Value::inl(v.clone()),
            Some((_, p)) => Value::inr(Value::pair(h3.map_value(&inl, p.fst()), v.clone())),
            None => unreachable!("tagged"),
        })
    });
    Comonad { name: format!("gluing along {}", h.name()), functor, counit, comult }
}

/// A coalgebra for the gluing comonad from its comma presentation: sets
/// `X₁`, `X₂` and `a : X₂ -> H X₁` (given on elements).
pub fn glued_coalgebra(
    comonad: &Arc<Comonad>,
    first: &[Value],
    second: &[Value],
    arrow: impl Fn(&Value) -> Value,
) -> Result<Coalgebra> {
    let (one, two) = (Value::atom("1"), Value::atom("2"));
    let carrier = Family::from_fibers(&glue_index(), [(one, first.to_vec()), (two.clone(), second.to_vec())])?;
    let gx = comonad.apply(&carrier)?;
    let structure = FinFn::new(carrier.total().clone(), gx.total().clone(), |v| {
        if carrier.over(v) == &two {
            Value::inr(Value::pair(arrow(v), v.clone()))
        } else {
            Value::inl(v.clone())
        }
    })
    .map_err(|e| validation("arrow lands in H X1", e))?;
    let c = Coalgebra { comonad: comonad.clone(), carrier, gcarrier: gx, structure };
    if let Some(v) = c.check_laws().violations.into_iter().next() {
        return Err(validation(&v.law, v.witness));
    }
    Ok(c)
}

/// The map `X₂ -> H X₁` of a gluing coalgebra.
pub fn glued_arrow(a: &Coalgebra) -> BTreeMap<Value, Value> {
    a.structure
        .pairs()
        .filter_map(|(x, t)| match t.as_tag() {
            Some((Side::Right, p)) => Some((x.clone(), p.fst().clone())),
            _ => None,
        })
        .collect()
}

/// Finds elements of a set by their images under several maps at once. This
/// is how created limits are computed: `G` preserves the limit, so each
/// compatible tuple of images has exactly one preimage.
pub(crate) struct ConeIndex {
    by_key: HashMap<Vec<Value>, Value>,
}

impl ConeIndex {
    pub fn new(dom: &FinSet, legs: &[&FinFn]) -> ConeIndex {
        let by_key = dom
            .iter()
            .map(|t| (legs.iter().map(|l| l.apply(t).clone()).collect(), t.clone()))
            .collect();
        ConeIndex { by_key }
    }

    pub fn find(&self, key: &[Value]) -> Option<&Value> {
        self.by_key.get(key)
    }
}

fn not_preserved(what: &str, at: &Value) -> Error {
    Error::HypothesisViolated(format!("the comonad does not preserve this {what}: no lift at {at}"))
}

/// Pullback of coalgebra morphisms with a common codomain, computed
/// downstairs with the induced structure.
pub fn coalg_pullback(f: &CoalgMap, g: &CoalgMap) -> Result<(Coalgebra, CoalgMap, CoalgMap)> {
    if !f.dst.same(&g.dst) {
        return Err(Error::CodMismatch("coalgebra maps into different coalgebras".into()));
    }
    let comonad = &f.src.comonad;
    let pb = finset::pullback(&f.map, &g.map)?;
    let (x, y) = (&f.src, &g.src);
    let carrier = Family::new(FinFn::new(pb.obj.clone(), x.carrier.index().clone(), |p| x.carrier.over(p.fst()).clone())?);
    let gp = comonad.apply(&carrier)?;
    let p1 = Hom::raw(carrier.clone(), x.carrier.clone(), pb.p1.clone());
    let p2 = Hom::raw(carrier.clone(), y.carrier.clone(), pb.p2.clone());
    let gp1 = comonad.map_between(&p1, &gp, &x.gcarrier)?;
    let gp2 = comonad.map_between(&p2, &gp, &y.gcarrier)?;
    let index = ConeIndex::new(gp.total(), &[&gp1, &gp2]);
    let table = pb
        .obj
        .iter()
        .map(|p| {
            index
                .find(&[x.structure.apply(p.fst()).clone(), y.structure.apply(p.snd()).clone()])
                .cloned()
                .ok_or_else(|| not_preserved("pullback", p))
        })
        .collect::<Result<Vec<_>>>()?;
    let structure = FinFn::from_table(pb.obj.clone(), gp.total().clone(), table)?;
    let apex = Coalgebra { comonad: comonad.clone(), carrier, gcarrier: gp, structure };
    let l1 = Hom::raw(apex.clone(), x.clone(), pb.p1);
    let l2 = Hom::raw(apex.clone(), y.clone(), pb.p2);
    Ok((apex, l1, l2))
}

/// The unique map to the terminal coalgebra.
pub fn to_terminal(cat: &CoalgCat, a: &Coalgebra) -> Result<CoalgMap> {
    let one = cat.terminal()?;
    let map = FinFn::new(a.carrier.total().clone(), one.carrier.total().clone(), |v| a.carrier.over(v).clone())?;
    Ok(Hom::raw(a.clone(), one, map))
}

pub fn coalg_product(a: &Coalgebra, b: &Coalgebra) -> Result<(Coalgebra, CoalgMap, CoalgMap)> {
    let cat = CoalgCat::new(a.comonad.clone());
    coalg_pullback(&to_terminal(&cat, a)?, &to_terminal(&cat, b)?)
}

/// The equalizer of two parallel coalgebra morphisms, as an inclusion.
pub fn coalg_equalizer(f: &CoalgMap, g: &CoalgMap) -> Result<CoalgMap> {
    if f.map.dom() != g.map.dom() || f.map.cod() != g.map.cod() {
        return Err(Error::NotParallel("maps have different endpoints".into()));
    }
    let eq = finset::equalizer(&f.map, &g.map)?;
    let cat = CoalgCat::new(f.src.comonad.clone());
    let subset = eq.incl.image();
    cat.sub_object(&f.src, &subset)?
        .ok_or_else(|| Error::HypothesisViolated("the comonad does not preserve this equalizer".into()))
}

/// Binary coproduct, with elements `Tag(Left, a)` and `Tag(Right, b)`.
pub fn coalg_coproduct(a: &Coalgebra, b: &Coalgebra) -> Result<(Coalgebra, CoalgMap, CoalgMap)> {
    let comonad = &a.comonad;
    let carrier = crate::polynomial::sum_family(&a.carrier, &b.carrier)?;
    let carrier = Family::new(FinFn::new(carrier.total().clone(), a.carrier.index().clone(), |v| match v.as_tag() {
        Some((Side::Left, x)) => a.carrier.over(x).clone(),
        Some((_, y)) => b.carrier.over(y).clone(),
        None => unreachable!("tagged"),
    })?);
    let gs = comonad.apply(&carrier)?;
    let inl = FinFn::new(a.carrier.total().clone(), carrier.total().clone(), |x| Value::inl(x.clone()))?;
    let inr = FinFn::new(b.carrier.total().clone(), carrier.total().clone(), |y| Value::inr(y.clone()))?;
    let ginl = comonad.map_between(&Hom::raw(a.carrier.clone(), carrier.clone(), inl.clone()), &a.gcarrier, &gs)?;
    let ginr = comonad.map_between(&Hom::raw(b.carrier.clone(), carrier.clone(), inr.clone()), &b.gcarrier, &gs)?;
    let structure = FinFn::new(carrier.total().clone(), gs.total().clone(), |v| match v.as_tag() {
        Some((Side::Left, x)) => ginl.apply(a.structure.apply(x)).clone(),
        Some((_, y)) => ginr.apply(b.structure.apply(y)).clone(),
        None => unreachable!("tagged"),
    })?;
    let sum = Coalgebra { comonad: comonad.clone(), carrier, gcarrier: gs, structure };
    Ok((sum.clone(), Hom::raw(a.clone(), sum.clone(), inl), Hom::raw(b.clone(), sum, inr)))
}

/// `1 + 1` is disjoint: both injections are coalgebra morphisms and monic,
/// and their pullback is the initial coalgebra.
pub fn check_disjoint_coproduct(cat: &CoalgCat) -> Result<LawReport> {
    let mut report = LawReport::default();
    let one = cat.terminal()?;
    let (sum, inl, inr) = coalg_coproduct(&one, &one)?;
    report.merge(sum.check_laws());
    for (name, inj) in [("inl", &inl), ("inr", &inr)] {
        let typed = inj.src.check_map(&inj.dst, &inj.map);
        report.record("injection is a coalgebra morphism", typed.is_ok(), || format!("{name}: {typed:?}"));
        report.record("injection is monic", inj.is_mono(), || name.to_string());
    }
    let (apex, _, _) = coalg_pullback(&inl, &inr)?;
    report.record("inl and inr are disjoint", apex.carrier.is_empty(), || format!("{:?}", apex.carrier.total()));
    Ok(report)
}

/// `|Hom_E(UA, X)|` and `|Hom_{E_G}(A, (GX, δ))|`.
pub fn cofree_adjunction_counts(a: &Coalgebra, x: &Family) -> Result<(usize, usize)> {
    let cat = CoalgCat::new(a.comonad.clone());
    let down = SliceCat::new(x.index().clone()).homs(&a.carrier, x)?.len();
    let up = cat.homs(a, &cat.cofree(x)?)?.len();
    Ok((down, up))
}

/// `G_α` on `E/A` for a coalgebra `(A, α)`: `Y` goes to the pullback of
/// `G(Y -> A)` along `α`, elements `Pair(a, t)`.
#[derive(Clone, Debug)]
pub struct SliceComonad {
    pub base: Arc<Comonad>,
    pub over: Coalgebra,
    pub comonad: Arc<Comonad>,
}

/// `Y` over `A` viewed over the base index.
fn base_family(over: &Coalgebra, y: &Family) -> Result<Family> {
    y.reindex(over.carrier.proj())
}

pub fn slice_comonad(a: &Coalgebra) -> Result<SliceComonad> {
    let g = a.comonad.clone();
    let cat = SliceCat::new(a.carrier.total().clone());
    let alpha_inv: Arc<HashMap<Value, Value>> = Arc::new(a.structure.pairs().map(|(x, t)| (t.clone(), x.clone())).collect());
    if alpha_inv.len() != a.carrier.len() {
        return Err(Error::law("eps . alpha = id", "structure map is not injective"));
    }
    let (g1, a1, inv1) = (g.clone(), a.clone(), alpha_inv.clone());
    let (g2, a2) = (g.clone(), a.clone());
    let functor = ExeFunctor::new(
        format!("{}/alpha", g.name),
        cat.clone(),
        cat.clone(),
        g.functor.flags,
        Provenance::Comonad,
        move |y: &Family| {
            let base = base_family(&a1, y)?;
            let gbase = g1.apply(&base)?;
            let gp = g1.map_between(&Hom::raw(base.clone(), a1.carrier.clone(), y.proj().clone()), &gbase, &a1.gcarrier)?;
            let mut elems = Vec::new();
            let mut over = Vec::new();
            for (t, image) in gp.pairs() {
                if let Some(x) = inv1.get(image) {
                    elems.push(Value::pair(x.clone(), t.clone()));
                    over.push((Value::pair(x.clone(), t.clone()), x.clone()));
                }
            }
            Ok(Family::new(FinFn::from_pairs(FinSet::new(elems), y.index().clone(), over)?))
        },
        move |m: &SliceMap, gy: &Family, gz: &Family| {
            let bs = base_family(&a2, &m.src)?;
            let bd = base_family(&a2, &m.dst)?;
            let gm = g2.functor.fmap(&Hom::raw(bs, bd, m.map.clone()))?;
            FinFn::new(gy.total().clone(), gz.total().clone(), |v| Value::pair(v.fst().clone(), gm.apply(v.snd()).clone()))
        },
    );
    let (g3, a3) = (g.clone(), a.clone());
    let counit = ExeNat::new("eps_alpha", functor.clone(), crate::engine::identity_functor(&cat), move |y: &Family, gy: &Family, _| {
        let base = base_family(&a3, y)?;
        let gbase = g3.apply(&base)?;
        let eps = g3.counit_at(&base, &gbase)?;
        FinFn::new(gy.total().clone(), y.total().clone(), |v| eps.apply(v.snd()).clone())
    });
    let (g4, a4) = (g.clone(), a.clone());
    let comult = ExeNat::new("delta_alpha", functor.clone(), crate::engine::compose(&functor, &functor), move |y: &Family, gy: &Family, ggy: &Family| {
        let base = base_family(&a4, y)?;
        let gbase = g4.apply(&base)?;
        let ggbase = g4.apply(&gbase)?;
        let delta = g4.comult_at(&base, &gbase, &ggbase)?;
        // G(π₂) : G(base G_α Y) -> G G(base Y), π₂(Pair(a, t)) = t
        let zbase = base_family(&a4, gy)?;
        let gz = g4.apply(&zbase)?;
        let pi2 = FinFn::new(zbase.total().clone(), gbase.total().clone(), |v| v.snd().clone())?;
        let gpi2 = g4.map_between(&Hom::raw(zbase.clone(), gbase.clone(), pi2), &gz, &ggbase)?;
        let mut index = HashMap::new();
        for w in ggy.total().iter() {
            index.insert((w.fst().clone(), gpi2.apply(w.snd()).clone()), w.clone());
        }
        FinFn::try_new(gy.total().clone(), ggy.total().clone(), |v| {
            index
                .get(&(v.fst().clone(), delta.apply(v.snd()).clone()))
                .cloned()
                .ok_or_else(|| not_preserved("pullback", v))
        })
    });
    let comonad = Arc::new(Comonad { name: format!("{}/alpha", g.name), functor, counit, comult });
    Ok(SliceComonad { base: g, over: a.clone(), comonad })
}

impl SliceComonad {
    /// A `G_α`-coalgebra `(Y, γ)` as a `G`-coalgebra over `(A, α)`:
    /// `(Y, π₂ ∘ γ)` with the map `Y -> A`.
    pub fn to_over(&self, c: &Coalgebra) -> Result<CoalgMap> {
        let base = base_family(&self.over, &c.carrier)?;
        let gbase = self.base.apply(&base)?;
        let structure = FinFn::new(c.carrier.total().clone(), gbase.total().clone(), |y| c.structure.apply(y).snd().clone())?;
        let z = Coalgebra { comonad: self.base.clone(), carrier: base, gcarrier: gbase, structure };
        Ok(Hom::raw(z, self.over.clone(), c.carrier.proj().clone()))
    }

    /// A `G`-coalgebra morphism `p : Z -> (A, α)` as a `G_α`-coalgebra:
    /// `z ↦ Pair(p(z), ζ(z))`.
    pub fn from_over(&self, p: &CoalgMap) -> Result<Coalgebra> {
        if !p.dst.same(&self.over) {
            return Err(Error::TypingMismatch("map does not land in the slicing coalgebra".into()));
        }
        p.src.check_map(&p.dst, &p.map)?;
        let carrier = Family::new(p.map.clone());
        let gy = self.comonad.apply(&carrier)?;
        let structure = FinFn::new(carrier.total().clone(), gy.total().clone(), |z| {
            Value::pair(p.apply(z).clone(), p.src.structure.apply(z).clone())
        })?;
        Ok(Coalgebra { comonad: self.comonad.clone(), carrier, gcarrier: gy, structure })
    }
}

/// Everything built while computing `Π_f` of a coalgebra: the coreflexive
/// pair `φ₁, φ₂ : G_β Π_f X ⇉ G_β Π_f G_α X`, its retraction and equalizer.
#[derive(Clone, Debug)]
pub struct PushforwardData {
    /// `Π_f X` downstairs.
    pub pi_x: Family,
    /// `(G_β Π_f X, δ)`.
    pub cofree0: Coalgebra,
    /// `(G_β Π_f G_α X, δ)`.
    pub cofree1: Coalgebra,
    /// `G_β σ_X ∘ δ`.
    pub phi1: FinFn,
    /// `G_β Π_f ξ`.
    pub phi2: FinFn,
    /// `G_β Π_f ε`.
    pub retraction: FinFn,
    /// The equalizer, a `G_β`-coalgebra.
    pub result: Coalgebra,
    /// Its inclusion into `cofree0`.
    pub incl: FinFn,
}

impl PushforwardData {
    /// `r ∘ φ₁ = r ∘ φ₂ = id`.
    pub fn check_coreflexive(&self) -> LawReport {
        let mut report = LawReport::default();
        let id = FinFn::identity(self.cofree0.carrier.total());
        for (law, phi) in [("r . phi1 = id", &self.phi1), ("r . phi2 = id", &self.phi2)] {
            match self.retraction.after(phi) {
                Ok(c) => report.equal(law, &c, &id),
                Err(e) => report.fail(law, e),
            }
        }
        report
    }
}

/// `Π_f` along a coalgebra morphism `f : (A, α) -> (B, β)`, from
/// `G_α`-coalgebras to `G_β`-coalgebras, with `f*` going back.
#[derive(Clone, Debug)]
pub struct Pushforward {
    pub along: CoalgMap,
    pub src: SliceComonad,
    pub dst: SliceComonad,
}

impl Pushforward {
    pub fn new(f: &CoalgMap) -> Result<Pushforward> {
        f.src.check_map(&f.dst, &f.map)?;
        Ok(Pushforward { along: f.clone(), src: slice_comonad(&f.src)?, dst: slice_comonad(&f.dst)? })
    }

    fn f(&self) -> &FinFn {
        &self.along.map
    }

    /// `κ : f* G_β Z -> G_α f* Z` for `Z` over `B`, the inverse of
    /// `Pair(a, t) ↦ Pair(a, Pair(f a, G(π₂) t))`.
    pub fn kappa(&self, z: &Family) -> Result<SliceMap> {
        let g = &self.src.base;
        let fz = pullback_along(self.f(), z)?;
        let gfz = self.src.comonad.apply(&fz)?;
        let gbz = self.dst.comonad.apply(z)?;
        let fgbz = pullback_along(self.f(), &gbz)?;
        let base_fz = base_family(&self.src.over, &fz)?;
        let base_z = base_family(&self.dst.over, z)?;
        let pi2 = FinFn::new(base_fz.total().clone(), base_z.total().clone(), |p| p.snd().clone())?;
        let gpi2 = g.functor.fmap(&Hom::raw(base_fz, base_z, pi2))?;
        let c = FinFn::new(gfz.total().clone(), fgbz.total().clone(), |v| {
            Value::pair(v.fst().clone(), Value::pair(self.f().apply(v.fst()).clone(), gpi2.apply(v.snd()).clone()))
        })?;
        let inv = c.inverse().map_err(|_| Error::HypothesisViolated("f* G_beta and G_alpha f* differ; the comonad is not cartesian".into()))?;
        Ok(Hom::raw(fgbz, gfz, inv))
    }

    /// `f*` on `G_β`-coalgebras.
    pub fn pull(&self, z: &Coalgebra) -> Result<Coalgebra> {
        let kappa = self.kappa(&z.carrier)?;
        let fz = kappa.dst.clone();
        let carrier = pullback_along(self.f(), &z.carrier)?;
        let structure = FinFn::new(carrier.total().clone(), fz.total().clone(), |p| {
            kappa.apply(&Value::pair(p.fst().clone(), z.structure.apply(p.snd()).clone())).clone()
        })?;
        Ok(Coalgebra { comonad: self.src.comonad.clone(), carrier, gcarrier: fz, structure })
    }

    pub fn pull_map(&self, m: &CoalgMap, src: &Coalgebra, dst: &Coalgebra) -> Result<CoalgMap> {
        let under = Hom::raw(m.src.carrier.clone(), m.dst.carrier.clone(), m.map.clone());
        let map = pullback_map_between(&under, &src.carrier, &dst.carrier)?;
        Ok(Hom::raw(src.clone(), dst.clone(), map))
    }

    /// The mate `σ_X : G_β Π_f X -> Π_f G_α X`, assembled from the unit and
    /// counit of `f* ⊣ Π_f` and `κ`.
    pub fn sigma(&self, x: &Family, pi_x: &Family, gpi_x: &Family, pi_gx: &Family, gx: &Family) -> Result<FinFn> {
        let f = self.f();
        let eta = pi_unit(f, gpi_x)?;
        let kappa = self.kappa(pi_x)?;
        let eps = pi_counit_from(f, pi_x, x)?;
        let g_eps = self.src.comonad.map_between(&eps, &kappa.dst, gx)?;
        let inner = Hom::raw(kappa.src.clone(), gx.clone(), g_eps.after(&kappa.map)?);
        let pi_inner = pi_map_between(&inner, &eta.dst, pi_gx)?;
        pi_inner.after(&eta.map)
    }

    /// `Π_f (X, ξ)` as the equalizer of the coreflexive pair.
    pub fn push(&self, x: &Coalgebra) -> Result<PushforwardData> {
        let (f, gb) = (self.f(), &self.dst.comonad);
        let pi_x = pi_along(f, &x.carrier)?;
        let cofree0 = Coalgebra::cofree(gb, &pi_x)?;
        let pi_gx = pi_along(f, &x.gcarrier)?;
        let cofree1 = Coalgebra::cofree(gb, &pi_gx)?;
        let sigma = self.sigma(&x.carrier, &pi_x, &cofree0.carrier, &pi_gx, &x.gcarrier)?;
        let g_sigma = gb.map_between(&Hom::raw(cofree0.carrier.clone(), pi_gx.clone(), sigma), &cofree0.gcarrier, &cofree1.carrier)?;
        let phi1 = g_sigma.after(&cofree0.structure)?;
        let pi_xi = pi_map_between(&x.structure_map(), &pi_x, &pi_gx)?;
        let phi2 = gb.map_between(&Hom::raw(pi_x.clone(), pi_gx.clone(), pi_xi), &cofree0.carrier, &cofree1.carrier)?;
        let eps = Hom::raw(x.gcarrier.clone(), x.carrier.clone(), self.src.comonad.counit_at(&x.carrier, &x.gcarrier)?);
        let pi_eps = pi_map_between(&eps, &pi_gx, &pi_x)?;
        let retraction = gb.map_between(&Hom::raw(pi_gx.clone(), pi_x.clone(), pi_eps), &cofree1.carrier, &cofree0.carrier)?;
        let subset = cofree0.carrier.total().filter(|w| phi1.apply(w) == phi2.apply(w));
        let cat = CoalgCat::new(gb.clone());
        let incl = cat
            .sub_object(&cofree0, &subset)?
            .ok_or_else(|| Error::HypothesisViolated("equalizer of the coreflexive pair is not a subcoalgebra".into()))?;
        Ok(PushforwardData { pi_x, cofree0, cofree1, phi1, phi2, retraction, result: incl.src, incl: incl.map })
    }

    /// `Π_f m` between already computed pushforwards.
    pub fn push_map(&self, m: &CoalgMap, src: &PushforwardData, dst: &PushforwardData) -> Result<FinFn> {
        let under = Hom::raw(m.src.carrier.clone(), m.dst.carrier.clone(), m.map.clone());
        let pi_m = pi_map_between(&under, &src.pi_x, &dst.pi_x)?;
        let g_pi_m = self.dst.comonad.map_between(&Hom::raw(src.pi_x.clone(), dst.pi_x.clone(), pi_m), &src.cofree0.carrier, &dst.cofree0.carrier)?;
        g_pi_m.restrict(src.result.carrier.total())?.corestrict(dst.result.carrier.total())
    }

    /// `|Hom(f* Z, X)|` and `|Hom(Z, Π_f X)|` in the two coalgebra categories.
    pub fn adjunction_counts(&self, z: &Coalgebra, x: &Coalgebra) -> Result<(usize, usize)> {
        let left = CoalgCat::new(self.src.comonad.clone()).homs(&self.pull(z)?, x)?.len();
        let right = CoalgCat::new(self.dst.comonad.clone()).homs(z, &self.push(x)?.result)?.len();
        Ok((left, right))
    }
}
