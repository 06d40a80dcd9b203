//! W-types in coalgebra categories. An endopolynomial `h, g, f` of coalgebra
//! morphisms over `(I, ι)` is presented as the equalizer of a coreflexive
//! pair `φ, ψ : P₀ ⇉ P₁` whose members are liftings of downstairs functors
//! `Q₀, Q₁`. The initial algebras of `Q₀, Q₁` are lifted and the W-type is
//! extracted as the equalizer of the two folds `u, v : W₀ -> W₁`.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::cat::{Category, Hom, Obj};
use crate::coalg::{coalg_equalizer, diagram_coalgebra, internal_diagram_comonad, slice_comonad, FinCat, PushforwardData, Pushforward};
use crate::engine::{
    fold, initial_algebra, initial_algebra_traced, is_fixed_point, is_well_founded, lift_initial_algebra, oplax_from_lift, Algebra,
    ChainResult, CoalgCat, CoalgMap, Coalgebra, Comonad, ExeFunctor, Flags, InitialAlgebra, LawReport, Provenance,
};
use crate::error::{Error, Result};
use crate::finset::{self, FinFn, FinSet, Value};
use crate::polynomial::Polynomial;
use crate::slice::{pi_along, pi_map_between, pullback_along, pullback_map_between, Family, SliceCat, SliceMap};

/// `I <-h- C -g-> D -f-> I` in a coalgebra category.
#[derive(Clone, Debug)]
pub struct EndoPoly {
    pub base: Coalgebra,
    pub h: CoalgMap,
    pub g: CoalgMap,
    pub f: CoalgMap,
}

impl EndoPoly {
    pub fn new(h: CoalgMap, g: CoalgMap, f: CoalgMap) -> Result<EndoPoly> {
        let mismatch = |what: &str| Err(Error::TypingMismatch(what.to_string()));
        if !h.dst.same(&f.dst) {
            return mismatch("h and f must land in the same coalgebra");
        }
        if !h.src.same(&g.src) {
            return mismatch("h and g must share their domain");
        }
        if !g.dst.same(&f.src) {
            return mismatch("g must land in the domain of f");
        }
        for (name, m) in [("h", &h), ("g", &g), ("f", &f)] {
            m.src
                .check_map(&m.dst, &m.map)
                .map_err(|e| Error::TypingMismatch(format!("{name}: {e}")))?;
        }
        Ok(EndoPoly { base: h.dst.clone(), h, g, f })
    }

    /// The same polynomial between the underlying families.
    pub fn underlying(&self) -> Polynomial {
        Polynomial::new(self.h.map.clone(), self.g.map.clone(), self.f.map.clone()).expect("typed coalgebra maps")
    }
}

struct Core {
    poly: EndoPoly,
    world: Arc<Comonad>,
    along_h: Pushforward,
    along_g: Pushforward,
}

/// One application of the pipeline functors to a coalgebra `X`.
#[derive(Clone, Debug)]
pub struct Level {
    /// `h* X`.
    pub pulled: Coalgebra,
    pub data: PushforwardData,
    pub p0: Coalgebra,
    pub p1: Coalgebra,
    pub p: Coalgebra,
}

impl Core {
    fn delta(&self) -> &Arc<Comonad> {
        &self.along_g.dst.comonad
    }

    fn gamma(&self) -> &Arc<Comonad> {
        &self.along_g.src.comonad
    }

    /// `f_!` on families over `D`.
    fn relabel_family(&self, y: &Family) -> Result<Family> {
        Ok(Family::new(self.poly.f.map.after(y.proj())?))
    }

    /// `f_!` on `G_δ`-coalgebras: `Pair(d, t) ↦ Pair(f d, t)`.
    fn relabel(&self, y: &Coalgebra) -> Result<Coalgebra> {
        let carrier = self.relabel_family(&y.carrier)?;
        let gcarrier = self.world.apply(&carrier)?;
        let f = &self.poly.f.map;
        let structure = FinFn::new(carrier.total().clone(), gcarrier.total().clone(), |x| {
            let t = y.structure.apply(x);
            Value::pair(f.apply(t.fst()).clone(), t.snd().clone())
        })?;
        Ok(Coalgebra { comonad: self.world.clone(), carrier, gcarrier, structure })
    }

    fn level(&self, x: &Coalgebra) -> Result<Level> {
        let pulled = self.along_h.pull(x)?;
        let data = self.along_g.push(&pulled)?;
        Ok(Level {
            p0: self.relabel(&data.cofree0)?,
            p1: self.relabel(&data.cofree1)?,
            p: self.relabel(&data.result)?,
            pulled,
            data,
        })
    }

    fn pulled(&self, x: &Family) -> Result<Family> {
        pullback_along(&self.poly.h.map, x)
    }

    fn q0_obj(&self, x: &Family) -> Result<Family> {
        let pi = pi_along(&self.poly.g.map, &self.pulled(x)?)?;
        self.relabel_family(&self.delta().apply(&pi)?)
    }

    fn q1_obj(&self, x: &Family) -> Result<Family> {
        let g = self.gamma().apply(&self.pulled(x)?)?;
        let pi = pi_along(&self.poly.g.map, &g)?;
        self.relabel_family(&self.delta().apply(&pi)?)
    }

    fn q_map(&self, m: &SliceMap, q0x: &Family, q0y: &Family, with_gamma: bool) -> Result<FinFn> {
        let (hx, hy) = (self.pulled(&m.src)?, self.pulled(&m.dst)?);
        let mut inner = Hom::raw(hx.clone(), hy.clone(), pullback_map_between(m, &hx, &hy)?);
        if with_gamma {
            let (gx, gy) = (self.gamma().apply(&hx)?, self.gamma().apply(&hy)?);
            inner = Hom::raw(gx.clone(), gy.clone(), self.gamma().map_between(&inner, &gx, &gy)?);
        }
        let g = &self.poly.g.map;
        let (px, py) = (pi_along(g, &inner.src)?, pi_along(g, &inner.dst)?);
        let pm = Hom::raw(px.clone(), py.clone(), pi_map_between(&inner, &px, &py)?);
        let (gpx, gpy) = (self.delta().apply(&px)?, self.delta().apply(&py)?);
        let out = self.delta().map_between(&pm, &gpx, &gpy)?;
        FinFn::from_table(q0x.total().clone(), q0y.total().clone(), out.images().to_vec())
    }

    fn cofree_level(&self, x: &Coalgebra, with_gamma: bool) -> Result<Coalgebra> {
        let mut pulled = self.pulled(&x.carrier)?;
        if with_gamma {
            pulled = self.gamma().apply(&pulled)?;
        }
        let pi = pi_along(&self.poly.g.map, &pulled)?;
        self.relabel(&Coalgebra::cofree(self.delta(), &pi)?)
    }
}

/// The coreflexive presentation `P = eq(φ, ψ : P₀ ⇉ P₁)` of an endopolynomial
/// in a coalgebra category, with the downstairs functors `Q₀, Q₁` satisfying
/// `U P₀ = Q₀ U` and `U P₁ = Q₁ U`.
#[derive(Clone)]
pub struct Coreflexive {
    core: Arc<Core>,
    /// `G_ι` on families over `I`.
    pub world: Arc<Comonad>,
    pub cat: CoalgCat,
    pub q0: ExeFunctor<SliceCat>,
    pub q1: ExeFunctor<SliceCat>,
    pub p0: ExeFunctor<CoalgCat>,
    pub p1: ExeFunctor<CoalgCat>,
    pub p: ExeFunctor<CoalgCat>,
}

impl std::fmt::Debug for Coreflexive {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Coreflexive({:?})", self.core.poly.base)
    }
}

pub fn build_coreflexive(poly: &EndoPoly) -> Result<Coreflexive> {
    let along_h = Pushforward::new(&poly.h)?;
    let along_g = Pushforward::new(&poly.g)?;
    let world = along_h.dst.comonad.clone();
    let core = Arc::new(Core { poly: poly.clone(), world: world.clone(), along_h, along_g });
    let down = SliceCat::new(poly.base.carrier.total().clone());
    let cat = CoalgCat::new(world.clone());
    let q = |name: &str, with_gamma: bool| {
        let (a, b) = (core.clone(), core.clone());
        ExeFunctor::new(
            name,
            down.clone(),
            down.clone(),
            Flags::ALL,
            Provenance::Polynomial,
            move |x: &Family| if with_gamma { a.q1_obj(x) } else { a.q0_obj(x) },
            move |m: &SliceMap, fx: &Family, fy: &Family| b.q_map(m, fx, fy, with_gamma),
        )
    };
    let lifted = |name: &str, with_gamma: bool| {
        let (a, b) = (core.clone(), core.clone());
        ExeFunctor::new(
            name,
            cat.clone(),
            cat.clone(),
            Flags::ALL,
            Provenance::Polynomial,
            move |x: &Coalgebra| a.cofree_level(x, with_gamma),
            move |m: &CoalgMap, fx: &Coalgebra, fy: &Coalgebra| {
                let under = Hom::raw(m.src.carrier.clone(), m.dst.carrier.clone(), m.map.clone());
                b.q_map(&under, &fx.carrier, &fy.carrier, with_gamma)
            },
        )
    };
    let (a, b) = (core.clone(), core.clone());
    let p = ExeFunctor::new(
        "P",
        cat.clone(),
        cat.clone(),
        Flags::ALL,
        Provenance::Polynomial,
        move |x: &Coalgebra| Ok(a.level(x)?.p),
        move |m: &CoalgMap, fx: &Coalgebra, fy: &Coalgebra| {
            let (lx, ly) = (b.level(&m.src)?, b.level(&m.dst)?);
            let pm = b.along_h.pull_map(m, &lx.pulled, &ly.pulled)?;
            let out = b.along_g.push_map(&pm, &lx.data, &ly.data)?;
            FinFn::from_table(fx.carrier.total().clone(), fy.carrier.total().clone(), out.images().to_vec())
        },
    );
    Ok(Coreflexive {
        q0: q("Q0", false),
        q1: q("Q1", true),
        p0: lifted("P0", false),
        p1: lifted("P1", true),
        p,
        world,
        cat,
        core,
    })
}

/// Cardinalities of every chain the pipeline iterates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChainTraces {
    pub q0: Vec<usize>,
    pub q1: Vec<usize>,
    pub p0_lifted: Vec<usize>,
    pub p1_lifted: Vec<usize>,
}

impl ChainTraces {
    /// Downstairs and lifted chains agree stage by stage.
    pub fn created(&self) -> bool {
        self.q0 == self.p0_lifted && self.q1 == self.p1_lifted
    }
}

/// Result of the equalizer construction.
#[derive(Clone, Debug)]
pub struct WType {
    pub w0: InitialAlgebra<SliceCat>,
    pub w1: InitialAlgebra<SliceCat>,
    pub w0_coalgebra: Coalgebra,
    pub w1_coalgebra: Coalgebra,
    pub u: CoalgMap,
    pub v: CoalgMap,
    pub e: CoalgMap,
    /// `i : W -> W₀`.
    pub incl: CoalgMap,
    /// `(W, s : PW -> W)`.
    pub algebra: Algebra<CoalgCat>,
    pub report: WReport,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct WReport {
    pub fixed_point: bool,
    pub well_founded: bool,
    pub traces: ChainTraces,
    /// `u, v, e` equations, `eu = ev = id`, `εφ = εψ = id`.
    pub equations: LawReport,
    /// Equivalence of the four factoring conditions for points of `P₀W₀`.
    pub conditions: LawReport,
    pub fiber_sizes: Vec<usize>,
}

impl WReport {
    pub fn passed(&self) -> bool {
        self.fixed_point && self.well_founded && self.traces.created() && self.equations.passed() && self.conditions.passed()
    }
}

impl Coreflexive {
    pub fn poly(&self) -> &EndoPoly {
        &self.core.poly
    }

    pub fn level(&self, x: &Coalgebra) -> Result<Level> {
        self.core.level(x)
    }

    /// `U P₀ = Q₀ U`, `U P₁ = Q₁ U` and `P ⊆ P₀`, compared Value for Value.
    pub fn check_intertwining(&self, samples: &[Coalgebra]) -> LawReport {
        let mut report = LawReport::default();
        for x in samples {
            let run = || -> Result<Vec<(&'static str, bool, String)>> {
                let l = self.level(x)?;
                let q0 = self.q0.obj(&x.carrier)?;
                let q1 = self.q1.obj(&x.carrier)?;
                let p0 = self.p0.obj(x)?;
                let p1 = self.p1.obj(x)?;
                Ok(vec![
                    ("U P0 = Q0 U", l.p0.carrier == q0 && p0.carrier == q0, format!("{:?}", x.carrier)),
                    ("U P1 = Q1 U", l.p1.carrier == q1 && p1.carrier == q1, format!("{:?}", x.carrier)),
                    ("P0 lifts Q0", p0.structure == l.p0.structure, format!("{:?}", x.carrier)),
                    ("P is a subobject of P0", l.p.carrier.total().is_subset(q0.total()), format!("{:?}", x.carrier)),
                ])
            };
            match run() {
                Ok(checks) => {
                    for (law, ok, w) in checks {
                        report.record(law, ok, || w);
                    }
                }
                Err(e) => report.fail("intertwining", e),
            }
        }
        report
    }

    /// `εφ = εψ = id` at `x`.
    pub fn check_coreflexive(&self, x: &Coalgebra) -> Result<LawReport> {
        Ok(self.level(x)?.data.check_coreflexive())
    }

    /// `y ∈ P₀ X` as the shape `d` and its labelled positions `(c, x)`.
    pub fn decode(&self, level: &Level, y: &Value) -> Result<(Value, Vec<(Value, Value)>)> {
        let d = &level.data;
        let eps = self.core.delta().counit_at(&d.pi_x, &d.cofree0.carrier)?;
        let section = eps.get(y).ok_or_else(|| Error::InvalidMap(format!("{y} is not in P0 X")))?;
        Ok((
            section.fst().clone(),
            section.snd().entries().iter().map(|(c, p)| (c.clone(), p.snd().clone())).collect(),
        ))
    }

    /// A `P`-algebra on a given coalgebra, with structure read off from the
    /// decoded form of each element of `P V`.
    pub fn algebra_from_decoder(
        &self,
        v: &Coalgebra,
        step: impl Fn(&Level, &Value, &Value, &[(Value, Value)]) -> Result<Value>,
    ) -> Result<Algebra<CoalgCat>> {
        let level = self.level(v)?;
        let structure = FinFn::try_new(level.p.carrier.total().clone(), v.carrier.total().clone(), |y| {
            let (d, children) = self.decode(&level, y)?;
            step(&level, y, &d, &children)
        })?;
        level.p.check_map(v, &structure)?;
        Ok(Algebra::raw(&self.p, v.clone(), level.p, structure))
    }

    /// Downstairs and lifted chains of `Q₀, Q₁` up to `max_steps`.
    pub fn traces(&self, max_steps: usize) -> Result<ChainTraces> {
        let mut t = ChainTraces::default();
        initial_algebra_traced(&self.q0, max_steps, &mut t.q0)?;
        initial_algebra_traced(&self.q1, max_steps, &mut t.q1)?;
        initial_algebra_traced(&self.p0, max_steps, &mut t.p0_lifted)?;
        initial_algebra_traced(&self.p1, max_steps, &mut t.p1_lifted)?;
        Ok(t)
    }

    fn lift(&self, lifted: &ExeFunctor<CoalgCat>, down: &ExeFunctor<SliceCat>, w: &InitialAlgebra<SliceCat>) -> Result<Coalgebra> {
        let oplax = oplax_from_lift(lifted, down, &self.world, &self.world);
        let l = lift_initial_algebra(&oplax, w)?;
        // the lift must agree with applying the lifted functor directly
        let direct = lifted.obj(&l.coalgebra)?;
        if direct.structure != l.algebra.fcarrier.structure {
            return Err(Error::law("lifted structure = P0 applied to the lift", lifted.name.clone()));
        }
        Ok(l.coalgebra)
    }

    /// The well-founded fixed point `(W, s)` of `P`.
    pub fn equalizer_wfp(&self, max_steps: usize) -> Result<WType> {
        if !self.p0.flags.preserves_pullbacks || !self.p1.flags.preserves_monos {
            return Err(Error::FlagMissing("preserves_pullbacks"));
        }
        let traces = self.traces(max_steps)?;
        let chain = |q: &ExeFunctor<SliceCat>| -> Result<InitialAlgebra<SliceCat>> {
            match initial_algebra(q, max_steps)? {
                ChainResult::Stabilized(w) => Ok(w),
                ChainResult::Exceeded { stages } => Err(Error::Exceeded { steps: max_steps, stages }),
            }
        };
        let w0 = chain(&self.q0)?;
        let w1 = chain(&self.q1)?;
        let c0 = self.lift(&self.p0, &self.q0, &w0)?;
        let c1 = self.lift(&self.p1, &self.q1, &w1)?;
        let (l0, l1) = (self.level(&c0)?, self.level(&c1)?);
        let (s0, s1) = (&w0.algebra.structure, &w1.algebra.structure);
        if w0.algebra.fcarrier != l0.p0.carrier || w1.algebra.fcarrier != l1.p1.carrier {
            return Err(Error::TypingMismatch("chain carriers differ from the pipeline functors".into()));
        }
        let d0 = &l0.data;
        let d1 = &l1.data;

        let into_w1 = |phi: &FinFn| -> Result<FinFn> { s1.after(phi) };
        let target_u = Algebra::raw(&self.q0, w1.algebra.carrier.clone(), l1.p0.carrier.clone(), into_w1(&d1.phi1)?);
        let target_v = Algebra::raw(&self.q0, w1.algebra.carrier.clone(), l1.p0.carrier.clone(), into_w1(&d1.phi2)?);
        let target_e = Algebra::raw(&self.q1, w0.algebra.carrier.clone(), l0.p1.carrier.clone(), s0.after(&d0.retraction)?);
        let u = Hom::new(c0.clone(), c1.clone(), fold(&w0, &target_u)?.map)?;
        let v = Hom::new(c0.clone(), c1.clone(), fold(&w0, &target_v)?.map)?;
        let e = Hom::new(c1.clone(), c0.clone(), fold(&w1, &target_e)?.map)?;

        let id0 = FinFn::identity(c0.carrier.total());
        let mut equations = LawReport::default();
        for (law, lhs) in [("e u = id", e.map.after(&u.map)?), ("e v = id", e.map.after(&v.map)?)] {
            if let Some((x, a, b)) = lhs.disagreement(&id0) {
                return Err(Error::HypothesisViolated(format!("{law} fails at {x}: {a} vs {b}")));
            }
            equations.record(law, true, String::new);
        }
        let down = |m: &CoalgMap| Hom::raw(m.src.carrier.clone(), m.dst.carrier.clone(), m.map.clone());
        let p0u = self.q0.fmap_between(&down(&u), &l0.p0.carrier, &l1.p0.carrier)?.map;
        let p0v = self.q0.fmap_between(&down(&v), &l0.p0.carrier, &l1.p0.carrier)?.map;
        let p1u = self.q1.fmap_between(&down(&u), &l0.p1.carrier, &l1.p1.carrier)?.map;
        let p1v = self.q1.fmap_between(&down(&v), &l0.p1.carrier, &l1.p1.carrier)?.map;
        let p1e = self.q1.fmap_between(&down(&e), &l1.p1.carrier, &l0.p1.carrier)?.map;
        equations.equal("u s0 = s1 phi P0u", &u.map.after(s0)?, &s1.after(&d1.phi1)?.after(&p0u)?);
        equations.equal("v s0 = s1 psi P0v", &v.map.after(s0)?, &s1.after(&d1.phi2)?.after(&p0v)?);
        equations.equal("e s1 = s0 eps P1e", &e.map.after(s1)?, &s0.after(&d0.retraction)?.after(&p1e)?);
        equations.merge(d0.check_coreflexive());
        equations.merge(d1.check_coreflexive());

        let incl = coalg_equalizer(&u, &v)?;
        let w = incl.src.clone();
        let lw = self.level(&w)?;
        equations.merge(lw.data.check_coreflexive());
        let p0i = self.q0.fmap_between(&down(&incl), &lw.p0.carrier, &l0.p0.carrier)?.map;
        let into_w0 = s0.after(&p0i)?.after(&lw.data.incl)?;
        let s = into_w0
            .corestrict(w.carrier.total())
            .map_err(|_| Error::HypothesisViolated("P W -> W0 does not factor through W".into()))?;
        lw.p.check_map(&w, &s)?;
        let algebra = Algebra::raw(&self.p, w.clone(), lw.p.clone(), s);

        // the four factoring conditions, pointwise on P0 W0
        let pw_image = p0i.after(&lw.data.incl)?.image();
        let mut conditions = LawReport::default();
        for y in l0.p0.carrier.total().iter() {
            let (fy, gy) = (d0.phi1.apply(y), d0.phi2.apply(y));
            let c8 = pw_image.contains(y);
            let c9 = fy == gy && p0u.apply(y) == p0v.apply(y);
            let c10 = p1u.apply(fy) == p1v.apply(gy);
            let c11 = d1.phi1.apply(p0u.apply(y)) == d1.phi2.apply(p0v.apply(y));
            conditions.record("(8) iff (9)", c8 == c9, || format!("at {y}"));
            conditions.record("(9) iff (10)", c9 == c10, || format!("at {y}"));
            conditions.record("(10) iff (11)", c10 == c11, || format!("at {y}"));
        }

        let report = WReport {
            fixed_point: is_fixed_point(&algebra),
            well_founded: is_well_founded(&algebra)?,
            traces,
            equations,
            conditions,
            fiber_sizes: w.carrier.fiber_sizes(),
        };
        Ok(WType { w0, w1, w0_coalgebra: c0, w1_coalgebra: c1, u, v, e, incl, algebra, report })
    }
}

/// The full pipeline. The comonad's functor must carry polynomial
/// provenance.
pub fn w_type(poly: &EndoPoly, max_steps: usize) -> Result<WType> {
    let g = &poly.base.comonad;
    if g.functor.provenance != Provenance::Polynomial {
        return Err(Error::HypothesisViolated(format!("{} is not a polynomial comonad", g.name)));
    }
    if !g.is_cartesian() {
        return Err(Error::HypothesisViolated(format!("{} is not cartesian", g.name)));
    }
    let wt = build_coreflexive(poly)?.equalizer_wfp(max_steps)?;
    if !wt.report.fixed_point || !wt.report.well_founded {
        return Err(Error::law("W is a well-founded fixed point", format!("{:?}", wt.report)));
    }
    Ok(wt)
}

/// The W-type computed by iterating `P` directly in the coalgebra category.
pub fn direct_chain(data: &Coreflexive, max_steps: usize) -> Result<ChainResult<CoalgCat>> {
    initial_algebra(&data.p, max_steps)
}

/// Outcome of comparing two algebras for the same functor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Comparison {
    /// Number of algebra morphisms `a -> b` found by enumeration, when within
    /// budget.
    pub morphisms: Option<usize>,
    pub iso: bool,
    pub witness: Option<String>,
}

/// `a` is initial (a chain result); checks that its fold into `b` is an
/// algebra isomorphism and counts all algebra morphisms when affordable.
pub fn compare_with_initial<C: Category>(a: &InitialAlgebra<C>, b: &Algebra<C>) -> Result<Comparison> {
    let m = fold(a, b)?;
    let is_morph = a.algebra.is_morphism_to(b, &m)?;
    let iso = is_morph && m.is_iso();
    let morphisms = match a.algebra.morphisms_to(b) {
        Ok(ms) => Some(ms.len()),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let witness = (!iso).then(|| if is_morph { "fold is not bijective".to_string() } else { "fold is not an algebra morphism".to_string() });
    Ok(Comparison { morphisms, iso, witness })
}

/// Cross-check of the pipeline against the direct chain in the coalgebra
/// category.
pub fn cross_check(data: &Coreflexive, wt: &WType, max_steps: usize) -> Result<Comparison> {
    let direct = direct_chain(data, max_steps)?.into_result(max_steps)?;
    compare_with_initial(&direct, &wt.algebra)
}

/// The part of a plain algebra over a subset of the index closed under the
/// polynomial: shapes over `keep` whose positions all lie over `keep`.
pub fn restrict_algebra(data: &Coreflexive, wt: &WType, keep: &FinSet) -> Result<(Polynomial, Algebra<SliceCat>)> {
    let p = data.poly().underlying();
    let shapes = p.shapes().filter(|b| keep.contains(p.f.apply(b)));
    let positions = p.positions().filter(|a| shapes.contains(p.g.apply(a)));
    if positions.iter().any(|a| !keep.contains(p.h.apply(a))) {
        return Err(Error::HypothesisViolated("the index subset is not closed under the polynomial".into()));
    }
    let restricted = Polynomial::new(
        p.h.restrict(&positions)?.corestrict(keep)?,
        p.g.restrict(&positions)?.corestrict(&shapes)?,
        p.f.restrict(&shapes)?.corestrict(keep)?,
    )?;
    let w = &wt.algebra.carrier;
    let part = w.carrier.total().filter(|x| keep.contains(w.carrier.over(x)));
    let carrier = Family::new(w.carrier.proj().restrict(&part)?.corestrict(keep)?);
    let level = data.level(w)?;
    let mut by_tree = HashMap::new();
    for y in level.p.carrier.total().iter() {
        let (d, children) = data.decode(&level, y)?;
        if shapes.contains(&d) {
            by_tree.insert(Value::pair(d, Value::table(children)), wt.algebra.structure.apply(y).clone());
        }
    }
    let functor = restricted.functor();
    let pw = functor.obj(&carrier)?;
    let structure = FinFn::try_new(pw.total().clone(), part, |t| {
        by_tree
            .get(t)
            .cloned()
            .ok_or_else(|| Error::HypothesisViolated(format!("{t} has no counterpart in P W")))
    })?;
    Ok((restricted, Algebra::new(&functor, carrier, structure)?))
}

/// `Δ X`: the constant diagram on `xs`, elements `Pair(c, x)` over `c`.
pub fn constant_diagram(g: &Arc<Comonad>, c: &FinCat, xs: &FinSet) -> Result<Coalgebra> {
    let fibers = c
        .objects
        .iter()
        .map(|o| (o.clone(), xs.iter().map(|x| Value::pair(o.clone(), x.clone())).collect()));
    let carrier = Family::from_fibers(&c.objects, fibers)?;
    diagram_coalgebra(g, c, carrier, |x, k| Some(Value::pair(c.cod.apply(k).clone(), x.snd().clone())))
}

/// `Δ m : Δ A -> Δ B`.
pub fn constant_map(a: &Coalgebra, b: &Coalgebra, m: &FinFn) -> Result<CoalgMap> {
    let map = FinFn::new(a.carrier.total().clone(), b.carrier.total().clone(), |x| {
        Value::pair(x.fst().clone(), m.apply(x.snd()).clone())
    })?;
    Hom::new(a.clone(), b.clone(), map)
}

/// `Δ` of a plain polynomial, as an endopolynomial of diagrams over `c`.
pub fn delta_poly(c: &FinCat, p: &Polynomial) -> Result<EndoPoly> {
    if !p.is_endo() {
        return Err(Error::TypingMismatch("not an endopolynomial".into()));
    }
    let g = Arc::new(internal_diagram_comonad(c));
    let i = constant_diagram(&g, c, p.src_index())?;
    let cc = constant_diagram(&g, c, p.positions())?;
    let d = constant_diagram(&g, c, p.shapes())?;
    EndoPoly::new(constant_map(&cc, &i, &p.h)?, constant_map(&cc, &d, &p.g)?, constant_map(&d, &i, &p.f)?)
}

/// Comparison of a functor applied to a W-type with the W-type computed in
/// the target world.
#[derive(Clone, Debug, Serialize)]
pub struct PreservationReport {
    pub functor: String,
    pub source_sizes: Vec<usize>,
    pub target_sizes: Vec<usize>,
    pub comparison: Comparison,
}

impl PreservationReport {
    pub fn passed(&self) -> bool {
        self.comparison.iso && self.comparison.morphisms.is_none_or(|n| n == 1)
    }
}

/// `Δ (W p)` against `W (Δ p)` for diagrams over `c`.
pub fn check_preservation_delta(c: &FinCat, p: &Polynomial, max_steps: usize) -> Result<PreservationReport> {
    let w = initial_algebra(&p.functor(), max_steps)?.into_result(max_steps)?;
    let poly = delta_poly(c, p)?;
    let data = build_coreflexive(&poly)?;
    let direct = direct_chain(&data, max_steps)?.into_result(max_steps)?;
    let g = &poly.base.comonad;
    let dw = constant_diagram(g, c, w.carrier().total())?;
    let over = FinFn::new(dw.carrier.total().clone(), poly.base.carrier.total().clone(), |x| {
        Value::pair(x.fst().clone(), w.carrier().over(x.snd()).clone())
    })?;
    let sc = slice_comonad(&poly.base)?;
    let dw = sc.from_over(&Hom::new(dw, poly.base.clone(), over)?)?;
    let s = &w.algebra.structure;
    let alg = data.algebra_from_decoder(&dw, |_, _, d, children| {
        let tree = Value::table(children.iter().map(|(a, x)| (a.snd().clone(), x.snd().clone())));
        Ok(Value::pair(d.fst().clone(), s.apply(&Value::pair(d.snd().clone(), tree)).clone()))
    })?;
    Ok(PreservationReport {
        functor: "diagonal".into(),
        source_sizes: w.carrier().fiber_sizes(),
        target_sizes: direct.carrier().carrier.fiber_sizes(),
        comparison: compare_with_initial(&direct, &alg)?,
    })
}

/// The part of a W-type over the index elements in `keep` against the plain
/// W-type of the restricted polynomial. For the gluing world with `keep` the
/// elements over the first component this is preservation by `π₁`.
pub fn check_preservation_restrict(
    data: &Coreflexive,
    wt: &WType,
    keep: &FinSet,
    name: &str,
    max_steps: usize,
) -> Result<PreservationReport> {
    let (p, alg) = restrict_algebra(data, wt, keep)?;
    let w = initial_algebra(&p.functor(), max_steps)?.into_result(max_steps)?;
    Ok(PreservationReport {
        functor: name.to_string(),
        source_sizes: wt.report.fiber_sizes.clone(),
        target_sizes: w.carrier().fiber_sizes(),
        comparison: compare_with_initial(&w, &alg)?,
    })
}

/// Checks the lemma on equalizers: given `qu = fp`, `qv = gp`, `X = eq(u, v)`
/// and `A = eq(f, g)`, the induced `X -> A` is the pullback of `p` along
/// `A -> B`. Returns whether the comparison map into the pullback is an iso.
pub fn check_equalizer_mono_lemma(u: &FinFn, v: &FinFn, f: &FinFn, g: &FinFn, p: &FinFn, q: &FinFn) -> Result<LawReport> {
    let mut report = LawReport::default();
    report.equal("q u = f p", &q.after(u)?, &f.after(p)?);
    report.equal("q v = g p", &q.after(v)?, &g.after(p)?);
    if !report.passed() {
        return Ok(report);
    }
    let x = finset::equalizer(u, v)?;
    let a = finset::equalizer(f, g)?;
    let pb = finset::pullback(&a.incl, p)?;
    let comparison = FinFn::try_new(x.obj.clone(), pb.obj.clone(), |y| {
        let b = p.apply(y);
        a.obj
            .contains(b)
            .then(|| Value::pair(b.clone(), y.clone()))
            .ok_or_else(|| Error::InvalidMap(format!("p({y}) = {b} is not in A")))
    });
    match comparison {
        Ok(c) => report.record("X -> A x_B Y is an iso", c.is_iso(), || {
            let missing = pb.obj.filter(|z| !c.image().contains(z));
            format!("pullback elements not reached: {missing}")
        }),
        Err(e) => report.fail("X -> A exists", e),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalg::{glued_coalgebra, gluing_comonad, Glue};

    fn delta(c: &FinCat, p: &Polynomial) -> EndoPoly {
        delta_poly(c, p).unwrap()
    }
    use crate::sample;
    use rand::Rng;

    #[test]
    fn identity_comonad_world_matches_plain_w() {
        let c = FinCat::discrete(&FinSet::atoms(["*"]));
        let p = Polynomial::stratified_tree();
        let poly = delta(&c, &p);
        let data = build_coreflexive(&poly).unwrap();
        let wt = data.equalizer_wfp(8).unwrap();
        assert!(wt.report.passed(), "{:?}", wt.report);
        assert_eq!(wt.report.fiber_sizes, vec![2, 4]);
        assert!(cross_check(&data, &wt, 8).unwrap().iso);
    }

    #[test]
    fn interval_constant_stratified() {
        let c = FinCat::interval();
        let p = Polynomial::stratified_tree();
        let poly = delta(&c, &p);
        let data = build_coreflexive(&poly).unwrap();
        let wt = w_type(&poly, 8).unwrap();
        assert!(wt.report.passed(), "{:?}", wt.report);
        assert_eq!(wt.algebra.carrier.carrier.len(), 12);
        let cmp = cross_check(&data, &wt, 8).unwrap();
        assert!(cmp.iso, "{cmp:?}");
        // the object 1 has no outgoing arrows, so W there is the plain W
        let w = &wt.algebra.carrier.carrier;
        let over_one = w.total().filter(|x| w.over(x).fst() == &Value::atom("1"));
        assert_eq!(over_one.len(), 6);
    }

    pub(crate) fn diagram(g: &Arc<Comonad>, c: &FinCat, fibers: &[(&str, &[&str])], along_u: &[(&str, &str)]) -> Coalgebra {
        let carrier = Family::from_fibers(&c.objects, fibers.iter().map(|(o, xs)| (Value::atom(o), xs.iter().map(Value::atom).collect()))).unwrap();
        let act: HashMap<Value, Value> = along_u.iter().map(|(x, y)| (Value::atom(x), Value::atom(y))).collect();
        diagram_coalgebra(g, c, carrier, |x, k| if k == &Value::atom("u") { act.get(x).cloned() } else { None }).unwrap()
    }

    fn coalg_map(a: &Coalgebra, b: &Coalgebra, pairs: &[(&str, &str)]) -> CoalgMap {
        let map = FinFn::from_pairs(a.carrier.total().clone(), b.carrier.total().clone(), pairs.iter().map(|(x, y)| (Value::atom(x), Value::atom(y)))).unwrap();
        Hom::new(a.clone(), b.clone(), map).unwrap()
    }

    /// Leaves everywhere, binary nodes only at the object `1`.
    pub(crate) fn interval_nodes_late() -> EndoPoly {
        let c = FinCat::interval();
        let g = Arc::new(internal_diagram_comonad(&c));
        let i = diagram(&g, &c, &[("0", &["z0"]), ("1", &["z1", "o1"])], &[("z0", "z1")]);
        let d = diagram(&g, &c, &[("0", &["leaf0"]), ("1", &["leaf1", "node1"])], &[("leaf0", "leaf1")]);
        let cc = diagram(&g, &c, &[("0", &[]), ("1", &["l1", "r1"])], &[]);
        EndoPoly::new(
            coalg_map(&cc, &i, &[("l1", "z1"), ("r1", "z1")]),
            coalg_map(&cc, &d, &[("l1", "node1"), ("r1", "node1")]),
            coalg_map(&d, &i, &[("leaf0", "z0"), ("leaf1", "z1"), ("node1", "o1")]),
        )
        .unwrap()
    }

    #[test]
    fn interval_nodes_only_late() {
        let poly = interval_nodes_late();
        let data = build_coreflexive(&poly).unwrap();
        let wt = w_type(&poly, 8).unwrap();
        assert!(wt.report.passed(), "{:?}", wt.report);
        // one leaf over z0 and z1, one node over o1
        assert_eq!(wt.report.fiber_sizes, vec![1, 1, 1]);
        assert!(cross_check(&data, &wt, 8).unwrap().iso);
    }

    #[test]
    fn nno_does_not_stabilize() {
        let c = FinCat::discrete(&FinSet::atoms(["*"]));
        let data = build_coreflexive(&delta(&c, &Polynomial::nno())).unwrap();
        let t = data.traces(5).unwrap();
        assert_eq!(t.q0, vec![0, 1, 2, 3, 4, 5]);
        assert!(t.created());
        assert!(matches!(data.equalizer_wfp(5), Err(Error::Exceeded { .. })));
    }

    #[test]
    fn intertwining_on_random_coalgebras() {
        let c = FinCat::interval();
        let poly = delta(&c, &Polynomial::stratified_tree());
        let data = build_coreflexive(&poly).unwrap();
        let g = poly.base.comonad.clone();
        let cat = CoalgCat::new(g.clone());
        let sc = crate::coalg::slice_comonad(&poly.base).unwrap();
        let mut rng = sample::rng(21);
        let mut samples = Vec::new();
        while samples.len() < 10 {
            let x = sample::family(&mut rng, &c.objects, 2, &format!("z{}_", samples.len()));
            let structs = Coalgebra::all_structures(&g, &x).unwrap();
            if structs.is_empty() {
                continue;
            }
            let z = structs[rng.gen_range(0..structs.len())].clone();
            let maps = cat.homs(&z, &poly.base).unwrap();
            if maps.is_empty() {
                continue;
            }
            samples.push(sc.from_over(&maps[rng.gen_range(0..maps.len())]).unwrap());
        }
        let report = data.check_intertwining(&samples);
        assert!(report.passed(), "{report:?}");
        for x in &samples {
            assert!(data.check_coreflexive(x).unwrap().passed());
        }
    }

    #[test]
    fn gluing_first_component_is_plain_w() {
        let g = Arc::new(gluing_comonad(&Glue::Identity));
        let v = Value::atom;
        let arrow = |pairs: &'static [(&'static str, &'static str)]| move |x: &Value| v(pairs.iter().find(|p| v(p.0) == *x).unwrap().1);
        let i = glued_coalgebra(&g, &[v("z1"), v("o1")], &[v("z2"), v("o2")], arrow(&[("z2", "z1"), ("o2", "o1")])).unwrap();
        let d = glued_coalgebra(&g, &[v("leaf1"), v("node1")], &[v("leaf2"), v("node2")], arrow(&[("leaf2", "leaf1"), ("node2", "node1")])).unwrap();
        let cc = glued_coalgebra(&g, &[v("l1"), v("r1")], &[v("l2")], arrow(&[("l2", "l1")])).unwrap();
        let m = |a: &Coalgebra, b: &Coalgebra, pairs: &[(&str, &str)]| {
            Hom::new(a.clone(), b.clone(), FinFn::from_pairs(a.carrier.total().clone(), b.carrier.total().clone(), pairs.iter().map(|(x, y)| (Value::atom(*x), Value::atom(*y)))).unwrap()).unwrap()
        };
        let poly = EndoPoly::new(
            m(&cc, &i, &[("l1", "z1"), ("r1", "z1"), ("l2", "z2")]),
            m(&cc, &d, &[("l1", "node1"), ("r1", "node1"), ("l2", "node2")]),
            m(&d, &i, &[("leaf1", "z1"), ("node1", "o1"), ("leaf2", "z2"), ("node2", "o2")]),
        )
        .unwrap();
        let data = build_coreflexive(&poly).unwrap();
        let wt = w_type(&poly, 8).unwrap();
        assert!(wt.report.passed(), "{:?}", wt.report);
        assert!(cross_check(&data, &wt, 8).unwrap().iso);
        let keep = FinSet::new(vec![v("z1"), v("o1")]);
        let report = check_preservation_restrict(&data, &wt, &keep, "first component", 8).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.target_sizes, vec![1, 1]);
    }

    #[test]
    fn diagonal_preserves_w_types() {
        for c in [FinCat::interval(), FinCat::discrete(&FinSet::atoms(["a", "b"]))] {
            let report = check_preservation_delta(&c, &Polynomial::stratified_tree(), 8).unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn equalizer_lemma_trivial_and_random() {
        let s = FinSet::atoms(["a", "b"]);
        let id = FinFn::identity(&s);
        assert!(check_equalizer_mono_lemma(&id, &id, &id, &id, &id, &id).unwrap().passed());
        let mut rng = sample::rng(22);
        for n in 0..50 {
            let y = sample::atoms(&format!("y{n}_"), rng.gen_range(0..=4));
            let b = sample::atoms(&format!("b{n}_"), rng.gen_range(1..=4));
            let cset = sample::atoms(&format!("c{n}_"), rng.gen_range(1..=4));
            let p = sample::map(&mut rng, &y, &b).unwrap();
            let f = sample::map(&mut rng, &b, &cset).unwrap();
            let g = sample::map(&mut rng, &b, &cset).unwrap();
            let z = f.after(&p).unwrap().image().union(&g.after(&p).unwrap().image());
            let q = FinFn::inclusion(&z, &cset).unwrap();
            let u = f.after(&p).unwrap().corestrict(&z).unwrap();
            let v = g.after(&p).unwrap().corestrict(&z).unwrap();
            let report = check_equalizer_mono_lemma(&u, &v, &f, &g, &p, &q).unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }
}
