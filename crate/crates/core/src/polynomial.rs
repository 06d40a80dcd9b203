//! Polynomials `I <-h- A -g-> B -f-> J` and the functors `Σ_f Π_g h*` they
//! represent: evaluation, composition, slicing, and two-argument functors with
//! their staged initial algebras.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cat::{Category, Hom};
use crate::engine::{
    self, check_naturality, compose, initial_algebra, Algebra, ExeFunctor, ExeNat, Flags,
    InitialAlgebra, LawReport, Provenance,
};
use crate::error::{Error, Result};
use crate::finset::{budget, FinFn, FinSet, Side, Value};
use crate::slice::{map_section, sections, Family, SliceCat, SliceMap};

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polynomial {
    pub h: FinFn,
    pub g: FinFn,
    pub f: FinFn,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial(h: {:?}, g: {:?}, f: {:?})", self.h, self.g, self.f)
    }
}

impl Polynomial {
    pub fn new(h: FinFn, g: FinFn, f: FinFn) -> Result<Polynomial> {
        if h.dom() != g.dom() {
            return Err(Error::TypingMismatch("h and g have different domains".into()));
        }
        if g.cod() != f.dom() {
            return Err(Error::TypingMismatch("codomain of g is not the domain of f".into()));
        }
        Ok(Polynomial { h, g, f })
    }

    pub fn identity(index: &FinSet) -> Polynomial {
        let id = FinFn::identity(index);
        Polynomial {
            h: id.clone(),
            g: id.clone(),
            f: id,
        }
    }

    pub fn src_index(&self) -> &FinSet {
        self.h.cod()
    }

    pub fn dst_index(&self) -> &FinSet {
        self.f.cod()
    }

    pub fn positions(&self) -> &FinSet {
        self.g.dom()
    }

    pub fn shapes(&self) -> &FinSet {
        self.g.cod()
    }

    pub fn is_endo(&self) -> bool {
        self.src_index() == self.dst_index()
    }

    /// `|P(X)_j| = Σ_{f(b)=j} Π_{g(a)=b} |X_{h(a)}|`, saturating.
    pub fn fiber_sizes_at(&self, x: &Family) -> Vec<usize> {
        let xf = x.proj().fibers();
        let mut sizes = vec![0usize; self.dst_index().len()];
        for (b, keys) in self.g.fibers() {
            let n = keys
                .iter()
                .fold(1usize, |acc, a| acc.saturating_mul(xf[self.h.apply(a)].len()));
            let j = self.dst_index().index_of(self.f.apply(&b)).expect("f is total");
            sizes[j] = sizes[j].saturating_add(n);
        }
        sizes
    }

    /// `P(X)`: elements `Pair(b, {a ↦ x})` with `x` over `h(a)` for every `a`
    /// over `b`, lying over `f(b)`.
    pub fn eval(&self, x: &Family) -> Result<Family> {
        if x.index() != self.src_index() {
            return Err(Error::TypingMismatch(format!(
                "polynomial from {} applied to a family over {}",
                self.src_index(),
                x.index()
            )));
        }
        let size = self
            .fiber_sizes_at(x)
            .iter()
            .fold(0usize, |acc, n| acc.saturating_add(*n));
        budget::check(size)?;
        let xf = x.proj().fibers();
        let mut total = Vec::with_capacity(size);
        let mut proj = Vec::with_capacity(size);
        for (b, keys) in self.g.fibers() {
            let choices: Vec<&[Value]> =
                keys.iter().map(|a| xf[self.h.apply(a)].as_slice()).collect();
            let j = self.f.apply(&b);
            for s in sections(&keys, &choices) {
                total.push(Value::pair(b.clone(), s));
                proj.push(j.clone());
            }
        }
        Ok(Family::new(FinFn::from_table(
            FinSet::from_sorted(total),
            self.dst_index().clone(),
            proj,
        )?))
    }

    /// `P(m)` given `P(src)` and `P(dst)`.
    pub fn eval_map_between(&self, m: &SliceMap, px: &Family, py: &Family) -> Result<FinFn> {
        FinFn::new(px.total().clone(), py.total().clone(), |p| {
            Value::pair(p.fst().clone(), map_section(&m.map, p.snd()))
        })
    }

    pub fn functor(&self) -> ExeFunctor<SliceCat> {
        let (p1, p2) = (self.clone(), self.clone());
        ExeFunctor::new(
            "P",
            SliceCat::new(self.src_index().clone()),
            SliceCat::new(self.dst_index().clone()),
            Flags::ALL,
            Provenance::Polynomial,
            move |x: &Family| p1.eval(x),
            move |m: &SliceMap, px: &Family, py: &Family| p2.eval_map_between(m, px, py),
        )
    }

    /// The polynomial `1 <- 1 -> 2 -> 1` whose functor is `X ↦ 1 + X`.
    pub fn nno() -> Polynomial {
        let one = FinSet::atoms(["*"]);
        let a = FinSet::atoms(["pred"]);
        let b = FinSet::atoms(["succ", "zero"]);
        Polynomial {
            h: FinFn::constant(&a, &one, Value::atom("*")).unwrap(),
            g: FinFn::constant(&a, &b, Value::atom("succ")).unwrap(),
            f: FinFn::constant(&b, &one, Value::atom("*")).unwrap(),
        }
    }

    /// A polynomial on `{0, 1}`: leaves `l0`, `l1` over 0, and one binary node
    /// over 1 whose two children lie over 0. Its initial algebra has 2
    /// elements over 0 and 4 over 1.
    pub fn stratified_tree() -> Polynomial {
        let i = FinSet::atoms(["0", "1"]);
        let a = FinSet::atoms(["left", "right"]);
        let b = FinSet::atoms(["l0", "l1", "node"]);
        let zero = Value::atom("0");
        Polynomial {
            h: FinFn::constant(&a, &i, zero.clone()).unwrap(),
            g: FinFn::constant(&a, &b, Value::atom("node")).unwrap(),
            f: FinFn::from_pairs(
                b.clone(),
                i.clone(),
                [
                    (Value::atom("l0"), zero.clone()),
                    (Value::atom("l1"), zero),
                    (Value::atom("node"), Value::atom("1")),
                ],
            )
            .unwrap(),
        }
    }
}

/// A composite polynomial with the comparison `Q(P X) ≅ (QP)(X)`.
#[derive(Clone, Debug)]
pub struct ComposedPolynomial {
    pub outer: Polynomial,
    pub inner: Polynomial,
    pub poly: Polynomial,
}

/// The polynomial of `Q ∘ P`. Its shapes are `Q` applied to the shapes of `P`,
/// i.e. `Pair(d, {c ↦ b})`; its positions are `Pair(shape, Pair(c, a))` with
/// `a` a position of `b`.
pub fn compose_poly(q: &Polynomial, p: &Polynomial) -> Result<ComposedPolynomial> {
    if q.src_index() != p.dst_index() {
        return Err(Error::TypingMismatch(format!(
            "cannot compose: inner lands in {}, outer starts at {}",
            p.dst_index(),
            q.src_index()
        )));
    }
    let shapes = q.eval(&Family::new(p.f.clone()))?;
    let g_fibers = p.g.fibers();
    let mut positions = Vec::new();
    for beta in shapes.total().iter() {
        for (c, b) in beta.snd().entries() {
            for a in &g_fibers[b] {
                positions.push(Value::pair(beta.clone(), Value::pair(c.clone(), a.clone())));
                budget::check(positions.len())?;
            }
        }
    }
    let a2 = FinSet::new(positions);
    let h2 = FinFn::new(a2.clone(), p.src_index().clone(), |x| p.h.apply(x.snd().snd()).clone())?;
    let g2 = FinFn::new(a2, shapes.total().clone(), |x| x.fst().clone())?;
    let poly = Polynomial::new(h2, g2, shapes.proj().clone())?;
    Ok(ComposedPolynomial {
        outer: q.clone(),
        inner: p.clone(),
        poly,
    })
}

impl ComposedPolynomial {
    /// `Q(P X) -> (QP)(X)`:
    /// `Pair(d, {c ↦ Pair(b, {a ↦ x})}) ↦ Pair(Pair(d, {c ↦ b}), {Pair(β, Pair(c, a)) ↦ x})`.
    pub fn iso_between(&self, qpx: &Family, rx: &Family) -> Result<FinFn> {
        FinFn::new(qpx.total().clone(), rx.total().clone(), |v| {
            let d = v.fst();
            let outer = v.snd().entries();
            let beta = Value::pair(
                d.clone(),
                Value::table_sorted(
                    outer.iter().map(|(c, pb)| (c.clone(), pb.fst().clone())).collect(),
                ),
            );
            let section = Value::table(outer.iter().flat_map(|(c, pb)| {
                let beta = beta.clone();
                pb.snd().entries().iter().map(move |(a, x)| {
                    (
                        Value::pair(beta.clone(), Value::pair(c.clone(), a.clone())),
                        x.clone(),
                    )
                })
            }));
            Value::pair(beta, section)
        })
    }

    pub fn iso(&self) -> ExeNat<SliceCat> {
        let me = self.clone();
        ExeNat::new(
            "QP ≅ R",
            compose(&self.outer.functor(), &self.inner.functor()),
            self.poly.functor(),
            move |_x: &Family, qpx: &Family, rx: &Family| me.iso_between(qpx, rx),
        )
    }

    /// Every component on `objects` is a bijection over the index, and the
    /// comparison is natural on `maps`.
    pub fn check(&self, objects: &[Family], maps: &[SliceMap]) -> LawReport {
        check_iso_components(&self.iso(), objects, maps)
    }
}

fn check_iso_components(
    nat: &ExeNat<SliceCat>,
    objects: &[Family],
    maps: &[SliceMap],
) -> LawReport {
    let mut report = LawReport::default();
    let law = format!("{} is an isomorphism", nat.name);
    for x in objects {
        match nat.at(x) {
            Ok(c) => {
                let typed = Hom::new(c.src.clone(), c.dst.clone(), c.map.clone());
                report.record(&law, typed.is_ok() && c.is_iso(), || match typed {
                    Err(e) => format!("at {x:?}: {e}"),
                    Ok(_) => format!("at {x:?}: component is not bijective"),
                });
            }
            Err(e) => report.fail(&law, e),
        }
    }
    report.merge(check_naturality(nat, maps));
    report
}

/// The polynomial representing `P/K : E/K -> E/PK`, with the pieces it is
/// built from.
#[derive(Clone, Debug)]
pub struct SlicedPolynomial {
    pub base: Polynomial,
    pub k: Family,
    pub pk: Family,
    /// `h*K` over the positions.
    pub pulled: Family,
    /// `Π_g h*K` over the shapes.
    pub sections: Family,
    /// Counit `g* Π_g h*K -> h*K`.
    pub counit: FinFn,
    /// `Π_g h*K ≅ P(K)`.
    pub eta: FinFn,
    pub poly: Polynomial,
}

pub fn slice_poly(p: &Polynomial, k: &Family) -> Result<SlicedPolynomial> {
    let pulled = crate::slice::pullback_along(&p.h, k)?;
    let sections = crate::slice::pi_along(&p.g, &pulled)?;
    let pb = crate::finset::pullback(&p.g, sections.proj())?;
    let a2 = pb.p1.dom().clone();
    let g2 = pb.p2.clone();
    let counit = FinFn::new(a2.clone(), pulled.total().clone(), |v| {
        v.snd().snd().lookup(v.fst()).expect("section defined on the fiber").clone()
    })?;
    let h_prime = FinFn::new(pulled.total().clone(), k.total().clone(), |v| v.snd().clone())?;
    let pk = p.eval(k)?;
    let eta = FinFn::new(sections.total().clone(), pk.total().clone(), |s| {
        Value::pair(
            s.fst().clone(),
            Value::table_sorted(
                s.snd().entries().iter().map(|(a, ak)| (a.clone(), ak.snd().clone())).collect(),
            ),
        )
    })?;
    if !eta.is_iso() {
        return Err(Error::NotIso("sections of h*K do not match P(K)".into()));
    }
    let poly = Polynomial::new(h_prime.after(&counit)?, g2, eta.clone())?;
    Ok(SlicedPolynomial {
        base: p.clone(),
        k: k.clone(),
        pk,
        pulled,
        sections,
        counit,
        eta,
        poly,
    })
}

impl SlicedPolynomial {
    /// `P/K` computed directly: `Z` over `K` goes to `P(Σ Z)` over `P(K)` via
    /// `P(Z -> K)`.
    pub fn sliced_functor(&self) -> ExeFunctor<SliceCat> {
        let (p1, k1, pk1) = (self.base.clone(), self.k.clone(), self.pk.clone());
        ExeFunctor::new(
            "P/K",
            SliceCat::new(self.k.total().clone()),
            SliceCat::new(self.pk.total().clone()),
            Flags::ALL,
            Provenance::Polynomial,
            move |z: &Family| {
                let sz = z.reindex(k1.proj())?;
                let psz = p1.eval(&sz)?;
                let over = FinFn::new(psz.total().clone(), pk1.total().clone(), |v| {
                    Value::pair(v.fst().clone(), map_section(z.proj(), v.snd()))
                })?;
                Ok(Family::new(over))
            },
            move |m: &SliceMap, src: &Family, dst: &Family| {
                FinFn::new(src.total().clone(), dst.total().clone(), |v| {
                    Value::pair(v.fst().clone(), map_section(&m.map, v.snd()))
                })
            },
        )
    }

    /// `(P/K)(Z) -> eval(sliced)(Z)`:
    /// `Pair(b, {a ↦ z}) ↦ Pair(s, {Pair(a, s) ↦ z})` where `s` is the section
    /// of `h*K` determined by the images of the `z`s.
    pub fn iso_between(&self, direct: &Family, rep: &Family) -> Result<FinFn> {
        let eta_inv = self.eta.inverse()?;
        FinFn::new(direct.total().clone(), rep.total().clone(), |v| {
            let over = direct.over(v);
            let s = eta_inv.apply(over).clone();
            Value::pair(
                s.clone(),
                Value::table(
                    v.snd()
                        .entries()
                        .iter()
                        .map(|(a, z)| (Value::pair(a.clone(), s.clone()), z.clone())),
                ),
            )
        })
    }

    pub fn iso(&self) -> ExeNat<SliceCat> {
        let me = self.clone();
        ExeNat::new(
            "P/K ≅ sliced polynomial",
            self.sliced_functor(),
            self.poly.functor(),
            move |_z: &Family, direct: &Family, rep: &Family| me.iso_between(direct, rep),
        )
    }

    pub fn check(&self, objects: &[Family], maps: &[SliceMap]) -> LawReport {
        check_iso_components(&self.iso(), objects, maps)
    }
}

/// `I₁ + I₂` with elements `Tag(Left, i₁)` and `Tag(Right, i₂)`.
pub fn sum_index(i1: &FinSet, i2: &FinSet) -> FinSet {
    FinSet::new(
        i1.iter()
            .map(|i| Value::inl(i.clone()))
            .chain(i2.iter().map(|i| Value::inr(i.clone())))
            .collect(),
    )
}

/// `X₁ + X₂` over `I₁ + I₂`, elements tagged by side.
pub fn sum_family(x1: &Family, x2: &Family) -> Result<Family> {
    let index = sum_index(x1.index(), x2.index());
    let total = FinSet::new(
        x1.total()
            .iter()
            .map(|x| Value::inl(x.clone()))
            .chain(x2.total().iter().map(|x| Value::inr(x.clone())))
            .collect(),
    );
    Ok(Family::new(FinFn::new(total, index, |v| match v.as_tag() {
        Some((Side::Left, x)) => Value::inl(x1.over(x).clone()),
        Some((_, x)) => Value::inr(x2.over(x).clone()),
        None => unreachable!("elements are tagged"),
    })?))
}

pub fn sum_map(m1: &FinFn, m2: &FinFn, src: &Family, dst: &Family) -> Result<FinFn> {
    FinFn::new(src.total().clone(), dst.total().clone(), |v| match v.as_tag() {
        Some((Side::Left, x)) => Value::inl(m1.apply(x).clone()),
        Some((_, x)) => Value::inr(m2.apply(x).clone()),
        None => unreachable!("elements are tagged"),
    })
}

/// Splits a family over `I₁ + I₂` into its two parts. Elements are kept as
/// they are.
pub fn split(x: &Family, i1: &FinSet, i2: &FinSet) -> Result<(Family, Family)> {
    let part = |side: Side, index: &FinSet| -> Result<Family> {
        let elems = x.total().filter(|v| matches!(x.over(v).as_tag(), Some((s, _)) if s == side));
        Ok(Family::new(FinFn::new(elems, index.clone(), |v| {
            x.over(v).as_tag().expect("tagged index").1.clone()
        })?))
    };
    Ok((part(Side::Left, i1)?, part(Side::Right, i2)?))
}

type ApplyFn = Arc<dyn Fn(&Family, &Family) -> Result<Family> + Send + Sync>;
type PairMapFn =
    Arc<dyn Fn(&SliceMap, &SliceMap, &Family, &Family) -> Result<FinFn> + Send + Sync>;

/// A functor `E/I₁ × E/I₂ -> E/I₂`.
#[derive(Clone)]
pub struct TwoArgFunctor {
    pub name: String,
    pub first: FinSet,
    pub second: FinSet,
    pub provenance: Provenance,
    apply: ApplyFn,
    on_pair: PairMapFn,
}

impl fmt::Debug for TwoArgFunctor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TwoArgFunctor({})", self.name)
    }
}

impl TwoArgFunctor {
    pub fn new(
        name: impl Into<String>,
        first: FinSet,
        second: FinSet,
        provenance: Provenance,
        apply: impl Fn(&Family, &Family) -> Result<Family> + Send + Sync + 'static,
        on_pair: impl Fn(&SliceMap, &SliceMap, &Family, &Family) -> Result<FinFn>
            + Send
            + Sync
            + 'static,
    ) -> TwoArgFunctor {
        TwoArgFunctor {
            name: name.into(),
            first,
            second,
            provenance,
            apply: Arc::new(apply),
            on_pair: Arc::new(on_pair),
        }
    }

    /// `(K, X) ↦ P(K + X)` for a polynomial from `I₁ + I₂` to `I₂`.
    pub fn from_polynomial(p: &Polynomial, first: &FinSet, second: &FinSet) -> Result<TwoArgFunctor> {
        if p.src_index() != &sum_index(first, second) || p.dst_index() != second {
            return Err(Error::TypingMismatch(
                "polynomial must go from I1 + I2 to I2".into(),
            ));
        }
        let (p1, p2) = (p.clone(), p.clone());
        Ok(TwoArgFunctor::new(
            "P(K + -)",
            first.clone(),
            second.clone(),
            Provenance::Polynomial,
            move |k: &Family, x: &Family| p1.eval(&sum_family(k, x)?),
            move |mk: &SliceMap, mx: &SliceMap, src: &Family, dst: &Family| {
                let s = sum_family(&mk.src, &mx.src)?;
                let d = sum_family(&mk.dst, &mx.dst)?;
                let m = Hom::raw(s.clone(), d.clone(), sum_map(&mk.map, &mx.map, &s, &d)?);
                p2.eval_map_between(&m, src, dst)
            },
        ))
    }

    pub fn apply(&self, k: &Family, x: &Family) -> Result<Family> {
        (self.apply)(k, x)
    }

    pub fn map_between(
        &self,
        mk: &SliceMap,
        mx: &SliceMap,
        src: &Family,
        dst: &Family,
    ) -> Result<FinFn> {
        (self.on_pair)(mk, mx, src, dst)
    }

    /// `F(K, -)`.
    pub fn fix(&self, k: &Family) -> ExeFunctor<SliceCat> {
        let (a, b) = (self.clone(), self.clone());
        let (k1, k2) = (k.clone(), k.clone());
        let cat = SliceCat::new(self.second.clone());
        ExeFunctor::new(
            format!("{}(K, -)", self.name),
            cat.clone(),
            cat,
            Flags::ALL,
            self.provenance,
            move |x: &Family| a.apply(&k1, x),
            move |m: &SliceMap, fx: &Family, fy: &Family| {
                b.map_between(&Hom::identity(&k2), m, fx, fy)
            },
        )
    }
}

/// `(X₁, X₂) ↦ (F₁ X₁, F₂(X₁, X₂))` as one endofunctor on `E/(I₁ + I₂)`.
pub fn semidirect_functor(f1: &ExeFunctor<SliceCat>, f2: &TwoArgFunctor) -> ExeFunctor<SliceCat> {
    let cat = SliceCat::new(sum_index(&f2.first, &f2.second));
    let (a1, a2) = (f1.clone(), f2.clone());
    let (b1, b2) = (f1.clone(), f2.clone());
    ExeFunctor::new(
        format!("{} x| {}", f1.name, f2.name),
        cat.clone(),
        cat,
        f1.flags,
        Provenance::Semidirect,
        move |x: &Family| {
            let (x1, x2) = split(x, &a2.first, &a2.second)?;
            sum_family(&a1.obj(&x1)?, &a2.apply(&x1, &x2)?)
        },
        move |m: &SliceMap, fx: &Family, fy: &Family| {
            let (x1, x2) = split(&m.src, &b2.first, &b2.second)?;
            let (y1, y2) = split(&m.dst, &b2.first, &b2.second)?;
            let m1 = Hom::raw(x1.clone(), y1.clone(), m.map.restrict(x1.total())?.corestrict(y1.total())?);
            let m2 = Hom::raw(x2.clone(), y2.clone(), m.map.restrict(x2.total())?.corestrict(y2.total())?);
            let f1x = b1.obj(&x1)?;
            let f1y = b1.obj(&y1)?;
            let f2x = b2.apply(&x1, &x2)?;
            let f2y = b2.apply(&y1, &y2)?;
            let first = b1.fmap_between(&m1, &f1x, &f1y)?.map;
            let second = b2.map_between(&m1, &m2, &f2x, &f2y)?;
            sum_map(&first, &second, fx, fy)
        },
    )
}

/// Target of a pair morphism: an `F₁`-algebra `(Y₁, t₁)` and
/// `t₂ : F₂(Y₁, Y₂) -> Y₂`.
#[derive(Clone, Debug)]
pub struct PairAlgebra {
    pub first: Algebra<SliceCat>,
    pub carrier: Family,
    pub fcarrier: Family,
    pub structure: FinFn,
}

impl PairAlgebra {
    pub fn new(
        f2: &TwoArgFunctor,
        first: Algebra<SliceCat>,
        carrier: Family,
        structure: FinFn,
    ) -> Result<PairAlgebra> {
        let fcarrier = f2.apply(&first.carrier, &carrier)?;
        Hom::new(fcarrier.clone(), carrier.clone(), structure.clone())?;
        Ok(PairAlgebra {
            first,
            carrier,
            fcarrier,
            structure,
        })
    }
}

/// `W₁ = μF₁` and `W₂ = μF₂(W₁, -)`.
#[derive(Clone)]
pub struct StagedAlgebra {
    pub f2: TwoArgFunctor,
    pub first: InitialAlgebra<SliceCat>,
    pub second: InitialAlgebra<SliceCat>,
}

pub fn staged_initial_algebra(
    f1: &ExeFunctor<SliceCat>,
    f2: &TwoArgFunctor,
    max_steps: usize,
) -> Result<StagedAlgebra> {
    if f2.provenance != Provenance::Polynomial {
        return Err(Error::HypothesisViolated(format!(
            "{} is not polynomial in its second argument",
            f2.name
        )));
    }
    let first = initial_algebra(f1, max_steps)?.into_result(max_steps)?;
    let fixed = f2.fix(first.carrier());
    let second = initial_algebra(&fixed, max_steps)?.into_result(max_steps)?;
    Ok(StagedAlgebra {
        f2: f2.clone(),
        first,
        second,
    })
}

impl StagedAlgebra {
    /// The pair morphism into `target`: `h₁` folds into `(Y₁, t₁)`, then `h₂`
    /// folds into `(Y₂, t₂ ∘ F₂(h₁, Y₂))`.
    pub fn fold(&self, target: &PairAlgebra) -> Result<(SliceMap, SliceMap)> {
        let h1 = engine::fold(&self.first, &target.first)?;
        let y2 = &target.carrier;
        let f2wy = self.f2.apply(self.first.carrier(), y2)?;
        let f2h1 = self.f2.map_between(&h1, &Hom::identity(y2), &f2wy, &target.fcarrier)?;
        let reindexed = Algebra::raw(
            &self.second.algebra.functor,
            y2.clone(),
            f2wy,
            target.structure.after(&f2h1)?,
        );
        let h2 = engine::fold(&self.second, &reindexed)?;
        Ok((h1, h2))
    }

    /// Every pair morphism into `target`, by enumeration.
    pub fn pair_morphisms(&self, target: &PairAlgebra) -> Result<Vec<(SliceMap, SliceMap)>> {
        let w1 = &self.first.algebra;
        let w2 = &self.second.algebra;
        let cat2 = SliceCat::new(self.f2.second.clone());
        let mut out = Vec::new();
        for h1 in w1.morphisms_to(&target.first)? {
            for h2 in cat2.homs(&w2.carrier, &target.carrier)? {
                let f = self.f2.map_between(&h1, &h2, &w2.fcarrier, &target.fcarrier)?;
                if h2.map.after(&w2.structure)? == target.structure.after(&f)? {
                    out.push((h1.clone(), h2));
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{check_functor_laws, ChainResult};
    use crate::sample;

    fn one() -> FinSet {
        FinSet::atoms(["*"])
    }

    fn over_one(n: usize) -> Family {
        Family::from_fibers(&one(), [(Value::atom("*"), (0..n).map(|j| Value::atom(format!("x{j}"))).collect())]).unwrap()
    }

    #[test]
    fn identity_polynomial_is_identity() {
        let idx = sample::atoms("i", 2);
        let p = Polynomial::identity(&idx);
        let mut rng = sample::rng(1);
        for _ in 0..5 {
            let x = sample::family(&mut rng, &idx, 3, "x");
            let px = p.eval(&x).unwrap();
            assert_eq!(px.fiber_sizes(), x.fiber_sizes());
            let strip = FinFn::new(px.total().clone(), x.total().clone(), |v| {
                v.snd().entries()[0].1.clone()
            })
            .unwrap();
            assert!(Hom::new(px.clone(), x.clone(), strip.clone()).unwrap().is_iso());
        }
    }

    #[test]
    fn nno_polynomial_cardinality() {
        let p = Polynomial::nno();
        for n in 0..5 {
            assert_eq!(p.eval(&over_one(n)).unwrap().len(), 1 + n);
        }
    }

    #[test]
    fn random_polynomials_match_counting_formula() {
        let mut rng = sample::rng(2);
        for _ in 0..30 {
            let i = sample::atoms("i", 2);
            let j = sample::atoms("j", 2);
            let p = sample::polynomial(&mut rng, &i, &j, 3, 3);
            let x = sample::family(&mut rng, &i, 3, "x");
            let px = p.eval(&x).unwrap();
            let expected: Vec<usize> = j
                .iter()
                .map(|jj| {
                    p.shapes()
                        .iter()
                        .filter(|b| p.f.apply(b) == jj)
                        .map(|b| {
                            p.positions()
                                .iter()
                                .filter(|a| p.g.apply(a) == b)
                                .map(|a| x.fiber(p.h.apply(a)).len())
                                .product::<usize>()
                        })
                        .sum()
                })
                .collect();
            assert_eq!(px.fiber_sizes(), expected);
            for v in px.total().iter() {
                for (a, y) in v.snd().entries() {
                    assert_eq!(x.over(y), p.h.apply(a));
                }
            }
        }
    }

    #[test]
    fn eval_is_functorial() {
        let mut rng = sample::rng(3);
        let i = sample::atoms("i", 2);
        for _ in 0..10 {
            let p = sample::polynomial(&mut rng, &i, &i, 3, 2);
            let x = sample::family(&mut rng, &i, 2, "x");
            let y = sample::family(&mut rng, &i, 2, "y");
            let z = sample::family(&mut rng, &i, 2, "z");
            let (Some(f), Some(g)) = (sample::slice_map(&mut rng, &x, &y), sample::slice_map(&mut rng, &y, &z)) else {
                continue;
            };
            let report = check_functor_laws(&p.functor(), &[x, y, z], &[(f, g)]);
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn composition_with_identity() {
        let mut rng = sample::rng(4);
        let i = sample::atoms("i", 2);
        let p = sample::polynomial(&mut rng, &i, &i, 3, 2);
        let c = compose_poly(&Polynomial::identity(&i), &p).unwrap();
        let x = sample::family(&mut rng, &i, 3, "x");
        assert_eq!(c.poly.eval(&x).unwrap().fiber_sizes(), p.eval(&x).unwrap().fiber_sizes());
        assert!(c.check(&[x], &[]).passed());
    }

    #[test]
    fn maybe_after_maybe() {
        let p = Polynomial::nno();
        let c = compose_poly(&p, &p).unwrap();
        for n in 0..4 {
            assert_eq!(c.poly.eval(&over_one(n)).unwrap().len(), 2 + n);
        }
        assert!(c.check(&[over_one(0), over_one(3)], &[]).passed());
    }

    #[test]
    fn random_composites_are_naturally_isomorphic() {
        let mut rng = sample::rng(5);
        let (i, j, k) = (sample::atoms("i", 2), sample::atoms("j", 2), sample::atoms("k", 2));
        for _ in 0..20 {
            let p = sample::polynomial(&mut rng, &i, &j, 3, 2);
            let q = sample::polynomial(&mut rng, &j, &k, 3, 2);
            let c = compose_poly(&q, &p).unwrap();
            let objs: Vec<Family> = (0..3).map(|n| sample::family(&mut rng, &i, 3, &format!("x{n}_"))).collect();
            let maps: Vec<SliceMap> = (0..3)
                .filter_map(|n| sample::slice_map(&mut rng, &objs[n], &objs[(n + 1) % 3]))
                .collect();
            let report = c.check(&objs, &maps);
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn slicing_at_terminal_family() {
        let mut rng = sample::rng(6);
        let i = sample::atoms("i", 2);
        let p = sample::polynomial(&mut rng, &i, &i, 3, 2);
        let k = Family::terminal(&i);
        let s = slice_poly(&p, &k).unwrap();
        for _ in 0..5 {
            // a family over K.total = I is an object of E/I
            let z = sample::family(&mut rng, &i, 3, "z");
            let rep = s.poly.eval(&z).unwrap().reindex(s.pk.proj()).unwrap();
            assert_eq!(rep.fiber_sizes(), p.eval(&z).unwrap().fiber_sizes());
        }
        // (P/K)(id_K) ≅ id_{PK}
        let top = Family::terminal(k.total());
        let at_top = s.poly.eval(&top).unwrap();
        assert_eq!(at_top.fiber_sizes(), vec![1; s.pk.len()]);
    }

    #[test]
    fn random_slices_match_direct_slicing() {
        let mut rng = sample::rng(7);
        let i = sample::atoms("i", 2);
        let j = sample::atoms("j", 2);
        for _ in 0..8 {
            let p = sample::polynomial(&mut rng, &i, &j, 3, 2);
            let k = sample::family(&mut rng, &i, 3, "k");
            let s = slice_poly(&p, &k).unwrap();
            let objs: Vec<Family> = (0..10)
                .map(|n| sample::family(&mut rng, k.total(), 2, &format!("z{n}_")))
                .collect();
            let maps: Vec<SliceMap> = (0..10)
                .filter_map(|n| sample::slice_map(&mut rng, &objs[n], &objs[(n + 1) % 10]))
                .collect();
            let report = s.check(&objs, &maps);
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn stratified_tree_initial_algebra() {
        let p = Polynomial::stratified_tree();
        match initial_algebra(&p.functor(), 8).unwrap() {
            ChainResult::Stabilized(w) => {
                assert_eq!(w.carrier().fiber_sizes(), vec![2, 4]);
                assert_eq!(w.steps, 2);
            }
            ChainResult::Exceeded { .. } => panic!("stratified polynomial must stabilize"),
        }
    }

    #[test]
    fn nno_polynomial_does_not_stabilize() {
        match initial_algebra(&Polynomial::nno().functor(), 5).unwrap() {
            ChainResult::Exceeded { stages } => assert_eq!(stages, vec![0, 1, 2, 3, 4, 5]),
            ChainResult::Stabilized(_) => panic!(),
        }
    }

    /// Leaves `l0, l1` over the single first index.
    fn leaf_only_first() -> Polynomial {
        let b = FinSet::atoms(["l0", "l1"]);
        Polynomial::new(
            FinFn::from_empty(&one()),
            FinFn::from_empty(&b),
            FinFn::constant(&b, &one(), Value::atom("*")).unwrap(),
        )
        .unwrap()
    }

    /// Over `1 + 1 -> 1`: a leaf labelled by an element of K, and a node with
    /// one K-label and one child.
    fn second_stage(with_node: bool) -> Polynomial {
        let idx = sum_index(&one(), &one());
        let (k, x) = (Value::inl(Value::atom("*")), Value::inr(Value::atom("*")));
        let mut shapes = vec![Value::atom("leaf")];
        let mut positions = vec![(Value::atom("label"), Value::atom("leaf"), k.clone())];
        if with_node {
            shapes.push(Value::atom("node"));
            positions.push((Value::atom("nlabel"), Value::atom("node"), k));
            positions.push((Value::atom("child"), Value::atom("node"), x));
        }
        let b = FinSet::new(shapes);
        let a = FinSet::new(positions.iter().map(|p| p.0.clone()).collect());
        Polynomial::new(
            FinFn::from_pairs(a.clone(), idx, positions.iter().map(|p| (p.0.clone(), p.2.clone()))).unwrap(),
            FinFn::from_pairs(a, b.clone(), positions.iter().map(|p| (p.0.clone(), p.1.clone()))).unwrap(),
            FinFn::constant(&b, &one(), Value::atom("*")).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn staged_identity_functors() {
        let cat = SliceCat::new(one());
        let id = engine::identity_functor(&cat);
        let f2 = TwoArgFunctor::new(
            "second projection",
            one(),
            one(),
            Provenance::Polynomial,
            |_k: &Family, x: &Family| Ok(x.clone()),
            |_mk: &SliceMap, mx: &SliceMap, _, _| Ok(mx.map.clone()),
        );
        let staged = staged_initial_algebra(&id, &f2, 4).unwrap();
        assert!(staged.first.carrier().is_empty());
        assert!(staged.second.carrier().is_empty());
    }

    #[test]
    fn staged_leaf_only() {
        let f1 = leaf_only_first().functor();
        let f2 = TwoArgFunctor::from_polynomial(&second_stage(false), &one(), &one()).unwrap();
        let staged = staged_initial_algebra(&f1, &f2, 8).unwrap();
        assert_eq!(staged.first.carrier().len(), 2);
        assert_eq!(staged.second.carrier().len(), 2);
    }

    #[test]
    fn staged_pair_morphisms_are_unique() {
        let f1 = leaf_only_first().functor();
        let p2 = second_stage(false);
        let f2 = TwoArgFunctor::from_polynomial(&p2, &one(), &one()).unwrap();
        let staged = staged_initial_algebra(&f1, &f2, 8).unwrap();
        let mut rng = sample::rng(8);
        let mut checked = 0;
        while checked < 5 {
            let y1 = over_one(rng_size(&mut rng));
            let y2 = sample::family(&mut rng, &one(), 3, "y");
            let f1y = f1.obj(&y1).unwrap();
            let Some(t1) = sample::map(&mut rng, f1y.total(), y1.total()) else {
                continue;
            };
            let first = Algebra::new(&f1, y1.clone(), t1).unwrap();
            let f2y = f2.apply(&y1, &y2).unwrap();
            let Some(t2) = sample::map(&mut rng, f2y.total(), y2.total()) else {
                continue;
            };
            let target = PairAlgebra::new(&f2, first, y2, t2).unwrap();
            let all = staged.pair_morphisms(&target).unwrap();
            assert_eq!(all.len(), 1);
            let (h1, h2) = staged.fold(&target).unwrap();
            assert_eq!(all[0].0.map, h1.map);
            assert_eq!(all[0].1.map, h2.map);
            checked += 1;
        }
    }

    fn rng_size(rng: &mut sample::SampleRng) -> usize {
        use rand::Rng;
        rng.gen_range(1..=3)
    }

    #[test]
    fn semidirect_chain_agrees_with_staging() {
        let f1 = leaf_only_first().functor();
        let f2 = TwoArgFunctor::from_polynomial(&second_stage(true), &one(), &one()).unwrap();
        let staged = staged_initial_algebra(&f1, &f2, 8);
        // the node makes the second stage unbounded
        assert!(matches!(staged, Err(Error::Exceeded { .. })));
        let whole = semidirect_functor(&f1, &f2);
        let direct = initial_algebra(&whole, 6).unwrap();
        assert!(direct.stabilized().is_none());

        let f2 = TwoArgFunctor::from_polynomial(&second_stage(false), &one(), &one()).unwrap();
        let staged = staged_initial_algebra(&f1, &f2, 8).unwrap();
        let whole = semidirect_functor(&f1, &f2);
        let direct = initial_algebra(&whole, 8).unwrap().into_result(8).unwrap();
        assert_eq!(
            direct.carrier().fiber_sizes(),
            vec![staged.first.carrier().len(), staged.second.carrier().len()]
        );
    }
}
