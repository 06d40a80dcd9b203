//! Executable functors and natural transformations, comonads and their
//! coalgebras, algebras, initial chains and folds, well-foundedness, and the
//! lifting constructions for algebras and coalgebras.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::cat::{family_maps, Category, Hom, Obj};
use crate::error::{Error, Result};
use crate::finset::{FinFn, FinSet, Value};
use crate::slice::{Family, SliceCat, SliceMap};

pub const DEFAULT_MAX_STEPS: usize = 32;

/// Where a functor came from. Stands in for membership in a class of
/// polynomial functors: constructors set it, nothing infers it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Polynomial,
    Composite,
    Comonad,
    Semidirect,
    Other,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    pub preserves_pullbacks: bool,
    pub preserves_monos: bool,
}

impl Flags {
    pub const ALL: Flags = Flags {
        preserves_pullbacks: true,
        preserves_monos: true,
    };
    pub const NONE: Flags = Flags {
        preserves_pullbacks: false,
        preserves_monos: false,
    };

    pub fn and(self, other: Flags) -> Flags {
        Flags {
            preserves_pullbacks: self.preserves_pullbacks && other.preserves_pullbacks,
            preserves_monos: self.preserves_monos && other.preserves_monos,
        }
    }
}

type ObjFn<C, D> =
    Arc<dyn Fn(&<C as Category>::Ob) -> Result<<D as Category>::Ob> + Send + Sync>;
type MapFn<C, D> = Arc<
    dyn Fn(&Hom<<C as Category>::Ob>, &<D as Category>::Ob, &<D as Category>::Ob) -> Result<FinFn>
        + Send
        + Sync,
>;
type CompFn<C, D> = Arc<
    dyn Fn(&<C as Category>::Ob, &<D as Category>::Ob, &<D as Category>::Ob) -> Result<FinFn>
        + Send
        + Sync,
>;

/// A functor given by an object action and a morphism action. The morphism
/// action receives the images of the domain and codomain so that callers can
/// reuse objects they already built.
pub struct ExeFunctor<C: Category, D: Category = C> {
    pub name: String,
    pub src: C,
    pub dst: D,
    pub flags: Flags,
    pub provenance: Provenance,
    on_obj: ObjFn<C, D>,
    on_map: MapFn<C, D>,
}

impl<C: Category, D: Category> Clone for ExeFunctor<C, D> {
    fn clone(&self) -> Self {
        ExeFunctor {
            name: self.name.clone(),
            src: self.src.clone(),
            dst: self.dst.clone(),
            flags: self.flags,
            provenance: self.provenance,
            on_obj: self.on_obj.clone(),
            on_map: self.on_map.clone(),
        }
    }
}

impl<C: Category, D: Category> fmt::Debug for ExeFunctor<C, D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExeFunctor({})", self.name)
    }
}

impl<C: Category, D: Category> ExeFunctor<C, D> {
    pub fn new(
        name: impl Into<String>,
        src: C,
        dst: D,
        flags: Flags,
        provenance: Provenance,
        on_obj: impl Fn(&C::Ob) -> Result<D::Ob> + Send + Sync + 'static,
        on_map: impl Fn(&Hom<C::Ob>, &D::Ob, &D::Ob) -> Result<FinFn> + Send + Sync + 'static,
    ) -> Self {
        ExeFunctor {
            name: name.into(),
            src,
            dst,
            flags,
            provenance,
            on_obj: Arc::new(on_obj),
            on_map: Arc::new(on_map),
        }
    }

    pub fn obj(&self, x: &C::Ob) -> Result<D::Ob> {
        (self.on_obj)(x)
    }

    pub fn fmap(&self, f: &Hom<C::Ob>) -> Result<Hom<D::Ob>> {
        let fx = self.obj(&f.src)?;
        let fy = self.obj(&f.dst)?;
        self.fmap_between(f, &fx, &fy)
    }

    /// The image of `f`, given the images of its endpoints.
    pub fn fmap_between(&self, f: &Hom<C::Ob>, fx: &D::Ob, fy: &D::Ob) -> Result<Hom<D::Ob>> {
        let map = (self.on_map)(f, fx, fy)?;
        Ok(Hom::raw(fx.clone(), fy.clone(), map))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

pub fn identity_functor<C: Category>(c: &C) -> ExeFunctor<C> {
    ExeFunctor::new(
        "Id",
        c.clone(),
        c.clone(),
        Flags::ALL,
        Provenance::Other,
        |x: &C::Ob| Ok(x.clone()),
        |f: &Hom<C::Ob>, _, _| Ok(f.map.clone()),
    )
}

/// `g ∘ f`. Flags are kept only when both factors carry them.
pub fn compose<C: Category, D: Category, E: Category>(
    g: &ExeFunctor<D, E>,
    f: &ExeFunctor<C, D>,
) -> ExeFunctor<C, E> {
    let (f1, g1) = (f.clone(), g.clone());
    let (f2, g2) = (f.clone(), g.clone());
    ExeFunctor::new(
        format!("{} . {}", g.name, f.name),
        f.src.clone(),
        g.dst.clone(),
        f.flags.and(g.flags),
        Provenance::Composite,
        move |x: &C::Ob| g1.obj(&f1.obj(x)?),
        move |h: &Hom<C::Ob>, gfx: &E::Ob, gfy: &E::Ob| {
            let fh = f2.fmap(h)?;
            Ok(g2.fmap_between(&fh, gfx, gfy)?.map)
        },
    )
}

/// A natural transformation between functors `C -> D`.
pub struct ExeNat<C: Category, D: Category = C> {
    pub name: String,
    pub src: ExeFunctor<C, D>,
    pub dst: ExeFunctor<C, D>,
    component: CompFn<C, D>,
}

impl<C: Category, D: Category> Clone for ExeNat<C, D> {
    fn clone(&self) -> Self {
        ExeNat {
            name: self.name.clone(),
            src: self.src.clone(),
            dst: self.dst.clone(),
            component: self.component.clone(),
        }
    }
}

impl<C: Category, D: Category> fmt::Debug for ExeNat<C, D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExeNat({}: {} => {})", self.name, self.src.name, self.dst.name)
    }
}

impl<C: Category, D: Category> ExeNat<C, D> {
    pub fn new(
        name: impl Into<String>,
        src: ExeFunctor<C, D>,
        dst: ExeFunctor<C, D>,
        component: impl Fn(&C::Ob, &D::Ob, &D::Ob) -> Result<FinFn> + Send + Sync + 'static,
    ) -> Self {
        ExeNat {
            name: name.into(),
            src,
            dst,
            component: Arc::new(component),
        }
    }

    pub fn at(&self, x: &C::Ob) -> Result<Hom<D::Ob>> {
        let fx = self.src.obj(x)?;
        let gx = self.dst.obj(x)?;
        self.at_between(x, &fx, &gx)
    }

    pub fn at_between(&self, x: &C::Ob, fx: &D::Ob, gx: &D::Ob) -> Result<Hom<D::Ob>> {
        let map = (self.component)(x, fx, gx)?;
        Ok(Hom::raw(fx.clone(), gx.clone(), map))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub law: String,
    pub witness: String,
}

/// Outcome of a law check: how many equations were checked and which failed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LawReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn record(&mut self, law: &str, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(Violation {
                law: law.to_string(),
                witness: witness(),
            });
        }
    }

    /// Records `lhs = rhs`, witnessing the first element where they differ.
    pub fn equal(&mut self, law: &str, lhs: &FinFn, rhs: &FinFn) {
        self.checked += 1;
        if lhs.dom() != rhs.dom() || lhs.cod() != rhs.cod() {
            self.violations.push(Violation {
                law: law.to_string(),
                witness: format!("sides are typed differently: {} -> {} vs {} -> {}",
                    lhs.dom().len(), lhs.cod().len(), rhs.dom().len(), rhs.cod().len()),
            });
        } else if let Some((x, a, b)) = lhs.disagreement(rhs) {
            self.violations.push(Violation {
                law: law.to_string(),
                witness: format!("at {x}: {a} vs {b}"),
            });
        }
    }

    pub fn fail(&mut self, law: &str, witness: impl fmt::Display) {
        self.checked += 1;
        self.violations.push(Violation {
            law: law.to_string(),
            witness: witness.to_string(),
        });
    }

    pub fn merge(&mut self, other: LawReport) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::LawViolation {
                law: v.law,
                witness: v.witness,
            }),
        }
    }
}

fn composite(g: &FinFn, f: &FinFn) -> Result<FinFn> {
    g.after(f)
}

/// Identity and composition laws of `F` on the given objects and composable
/// pairs `(f, g)` (meaning `g ∘ f`), plus well-typedness of every image.
pub fn check_functor_laws<C: Category, D: Category>(
    functor: &ExeFunctor<C, D>,
    objects: &[C::Ob],
    composable: &[(Hom<C::Ob>, Hom<C::Ob>)],
) -> LawReport {
    let mut report = LawReport::default();
    for x in objects {
        match functor.fmap(&Hom::identity(x)) {
            Ok(fid) => report.equal("F(id) = id", &fid.map, &FinFn::identity(fid.src.family().total())),
            Err(e) => report.fail("F(id) = id", e),
        }
    }
    for (f, g) in composable {
        let check = || -> Result<(FinFn, FinFn, Result<()>)> {
            let gf = g.after(f)?;
            let ff = functor.fmap(f)?;
            let fg = functor.fmap(g)?;
            let typed = ff.src.check_map(&ff.dst, &ff.map);
            Ok((functor.fmap(&gf)?.map, composite(&fg.map, &ff.map)?, typed))
        };
        match check() {
            Ok((lhs, rhs, typed)) => {
                report.equal("F(g . f) = F(g) . F(f)", &lhs, &rhs);
                report.record("F(f) is a morphism", typed.is_ok(), || {
                    typed.err().map(|e| e.to_string()).unwrap_or_default()
                });
            }
            Err(e) => report.fail("F(g . f) = F(g) . F(f)", e),
        }
    }
    report
}

/// Naturality squares `τ_Y ∘ F f = G f ∘ τ_X` on the given morphisms.
pub fn check_naturality<C: Category, D: Category>(
    nat: &ExeNat<C, D>,
    maps: &[Hom<C::Ob>],
) -> LawReport {
    let mut report = LawReport::default();
    let law = format!("naturality of {}", nat.name);
    for f in maps {
        let check = || -> Result<(FinFn, FinFn)> {
            let tx = nat.at(&f.src)?;
            let ty = nat.at(&f.dst)?;
            let ff = nat.src.fmap_between(f, &tx.src, &ty.src)?;
            let gf = nat.dst.fmap_between(f, &tx.dst, &ty.dst)?;
            Ok((ty.map.after(&ff.map)?, gf.map.after(&tx.map)?))
        };
        match check() {
            Ok((lhs, rhs)) => report.equal(&law, &lhs, &rhs),
            Err(e) => report.fail(&law, e),
        }
    }
    report
}

/// A comonad on a slice category.
#[derive(Clone, Debug)]
pub struct Comonad {
    pub name: String,
    pub functor: ExeFunctor<SliceCat>,
    /// `G ⇒ Id`
    pub counit: ExeNat<SliceCat>,
    /// `G ⇒ GG`
    pub comult: ExeNat<SliceCat>,
}

impl Comonad {
    pub fn index(&self) -> &FinSet {
        &self.functor.src.index
    }

    pub fn is_cartesian(&self) -> bool {
        self.functor.flags.preserves_pullbacks
    }

    pub fn apply(&self, x: &Family) -> Result<Family> {
        self.functor.obj(x)
    }

    pub fn map_between(&self, m: &SliceMap, gx: &Family, gy: &Family) -> Result<FinFn> {
        Ok(self.functor.fmap_between(m, gx, gy)?.map)
    }

    pub fn counit_at(&self, x: &Family, gx: &Family) -> Result<FinFn> {
        Ok(self.counit.at_between(x, gx, x)?.map)
    }

    pub fn comult_at(&self, x: &Family, gx: &Family, ggx: &Family) -> Result<FinFn> {
        Ok(self.comult.at_between(x, gx, ggx)?.map)
    }

    /// The identity comonad on `E/I`.
    pub fn identity(index: &FinSet) -> Comonad {
        let cat = SliceCat::new(index.clone());
        let id = identity_functor(&cat).with_provenance(Provenance::Comonad);
        let counit = ExeNat::new("eps", id.clone(), id.clone(), |x: &Family, _, _| {
            Ok(FinFn::identity(x.total()))
        });
        let comult = ExeNat::new("delta", id.clone(), id.clone(), |x: &Family, _, _| {
            Ok(FinFn::identity(x.total()))
        });
        Comonad {
            name: "Id".into(),
            functor: id,
            counit,
            comult,
        }
    }
}

/// Counit, coassociativity, naturality and functoriality of `G` on samples.
pub fn check_comonad_laws(g: &Comonad, objects: &[Family], maps: &[SliceMap]) -> LawReport {
    let mut report = LawReport::default();
    for x in objects {
        let check = || -> Result<[(&'static str, FinFn, FinFn); 3]> {
            let gx = g.apply(x)?;
            let ggx = g.apply(&gx)?;
            let gggx = g.apply(&ggx)?;
            let delta = g.comult_at(x, &gx, &ggx)?;
            let eps_g = g.counit_at(&gx, &ggx)?;
            let eps = Hom::raw(gx.clone(), x.clone(), g.counit_at(x, &gx)?);
            let g_eps = g.map_between(&eps, &ggx, &gx)?;
            let delta_g = g.comult_at(&gx, &ggx, &gggx)?;
            let delta_hom = Hom::raw(gx.clone(), ggx.clone(), delta.clone());
            let g_delta = g.map_between(&delta_hom, &ggx, &gggx)?;
            let id = FinFn::identity(gx.total());
            Ok([
                ("eps_G . delta = id", eps_g.after(&delta)?, id.clone()),
                ("G eps . delta = id", g_eps.after(&delta)?, id),
                (
                    "delta_G . delta = G delta . delta",
                    delta_g.after(&delta)?,
                    g_delta.after(&delta)?,
                ),
            ])
        };
        match check() {
            Ok(eqs) => {
                for (law, lhs, rhs) in eqs {
                    report.equal(law, &lhs, &rhs);
                }
            }
            Err(e) => report.fail("comonad laws", e),
        }
    }
    report.merge(check_naturality(&g.counit, maps));
    report.merge(check_naturality(&g.comult, maps));
    let pairs: Vec<_> = maps
        .iter()
        .map(|m| (m.clone(), Hom::identity(&m.dst)))
        .collect();
    report.merge(check_functor_laws(&g.functor, objects, &pairs));
    report
}

/// A coalgebra `α : A -> GA` for a comonad on a slice category.
#[derive(Clone)]
pub struct Coalgebra {
    pub comonad: Arc<Comonad>,
    pub carrier: Family,
    /// `G(carrier)`, kept so that the structure map can be typed.
    pub gcarrier: Family,
    pub structure: FinFn,
}

impl fmt::Debug for Coalgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coalgebra({:?}, {:?})", self.carrier, self.structure)
    }
}

impl Coalgebra {
    /// Validates typing and the counit and coassociativity laws.
    pub fn new(comonad: &Arc<Comonad>, carrier: Family, structure: FinFn) -> Result<Coalgebra> {
        let gcarrier = comonad.apply(&carrier)?;
        let c = Coalgebra::raw(comonad, carrier, gcarrier, structure);
        Hom::new(c.carrier.clone(), c.gcarrier.clone(), c.structure.clone())?;
        c.check_laws().into_result()?;
        Ok(c)
    }

    pub(crate) fn raw(
        comonad: &Arc<Comonad>,
        carrier: Family,
        gcarrier: Family,
        structure: FinFn,
    ) -> Coalgebra {
        Coalgebra {
            comonad: comonad.clone(),
            carrier,
            gcarrier,
            structure,
        }
    }

    pub fn structure_map(&self) -> SliceMap {
        Hom::raw(self.carrier.clone(), self.gcarrier.clone(), self.structure.clone())
    }

    pub fn check_laws(&self) -> LawReport {
        let mut report = LawReport::default();
        let g = &self.comonad;
        let check = || -> Result<(FinFn, FinFn, FinFn)> {
            let eps = g.counit_at(&self.carrier, &self.gcarrier)?;
            let ggx = g.apply(&self.gcarrier)?;
            let delta = g.comult_at(&self.carrier, &self.gcarrier, &ggx)?;
            let g_alpha = g.map_between(&self.structure_map(), &self.gcarrier, &ggx)?;
            Ok((
                eps.after(&self.structure)?,
                delta.after(&self.structure)?,
                g_alpha.after(&self.structure)?,
            ))
        };
        match check() {
            Ok((counit, lhs, rhs)) => {
                report.equal("eps . alpha = id", &counit, &FinFn::identity(self.carrier.total()));
                report.equal("delta . alpha = G alpha . alpha", &lhs, &rhs);
            }
            Err(e) => report.fail("coalgebra laws", e),
        }
        report
    }

    /// The cofree coalgebra `(GX, δ_X)`.
    pub fn cofree(comonad: &Arc<Comonad>, x: &Family) -> Result<Coalgebra> {
        let gx = comonad.apply(x)?;
        let ggx = comonad.apply(&gx)?;
        let delta = comonad.comult_at(x, &gx, &ggx)?;
        Ok(Coalgebra::raw(comonad, gx, ggx, delta))
    }

    /// Every coalgebra structure on `carrier`, by brute force.
    pub fn all_structures(comonad: &Arc<Comonad>, carrier: &Family) -> Result<Vec<Coalgebra>> {
        let gcarrier = comonad.apply(carrier)?;
        Ok(family_maps(carrier, &gcarrier)?
            .into_iter()
            .map(|m| Coalgebra::raw(comonad, carrier.clone(), gcarrier.clone(), m))
            .filter(|c| c.check_laws().passed())
            .collect())
    }

    /// The coalgebra square for a map of carriers.
    pub(crate) fn commutes(&self, dst: &Coalgebra, map: &FinFn) -> Result<Option<Value>> {
        let m = Hom::raw(self.carrier.clone(), dst.carrier.clone(), map.clone());
        let gm = self.comonad.map_between(&m, &self.gcarrier, &dst.gcarrier)?;
        let lhs = gm.after(&self.structure)?;
        let rhs = dst.structure.after(map)?;
        Ok(lhs.disagreement(&rhs).map(|(x, _, _)| x))
    }
}

impl Obj for Coalgebra {
    fn family(&self) -> &Family {
        &self.carrier
    }

    fn check_map(&self, dst: &Coalgebra, map: &FinFn) -> Result<()> {
        self.carrier.check_map(&dst.carrier, map)?;
        match self.commutes(dst, map)? {
            None => Ok(()),
            Some(x) => Err(Error::NotCoalgMorphism(format!(
                "G(m) . alpha and beta . m differ at {x}"
            ))),
        }
    }

    fn same(&self, other: &Coalgebra) -> bool {
        self.carrier == other.carrier && self.structure == other.structure
    }
}

pub type CoalgMap = Hom<Coalgebra>;

/// The category of coalgebras for a comonad on a slice category.
#[derive(Clone, Debug)]
pub struct CoalgCat {
    pub comonad: Arc<Comonad>,
}

impl CoalgCat {
    pub fn new(comonad: Arc<Comonad>) -> CoalgCat {
        CoalgCat { comonad }
    }

    pub fn cofree(&self, x: &Family) -> Result<Coalgebra> {
        Coalgebra::cofree(&self.comonad, x)
    }
}

/// Finds, for each element of `targets`, its unique preimage under the
/// injective map `m`; `None` if some target is not in the image.
pub(crate) fn preimages(m: &FinFn, targets: &[Value]) -> Option<Vec<Value>> {
    let inv: HashMap<&Value, &Value> = m.pairs().map(|(x, y)| (y, x)).collect();
    targets.iter().map(|t| inv.get(t).map(|x| (*x).clone())).collect()
}

impl Category for CoalgCat {
    type Ob = Coalgebra;

    fn name(&self) -> String {
        format!("coalgebras of {}", self.comonad.name)
    }

    fn index(&self) -> &FinSet {
        self.comonad.index()
    }

    fn initial(&self) -> Result<Coalgebra> {
        let zero = Family::initial(self.index());
        let gzero = self.comonad.apply(&zero)?;
        Ok(Coalgebra::raw(
            &self.comonad,
            zero,
            gzero.clone(),
            FinFn::from_empty(gzero.total()),
        ))
    }

    fn terminal(&self) -> Result<Coalgebra> {
        let one = Family::terminal(self.index());
        let gone = self.comonad.apply(&one)?;
        let fibers = gone.proj().fibers();
        let table = one
            .total()
            .iter()
            .map(|i| match fibers[i].as_slice() {
                [t] => Ok(t.clone()),
                other => Err(Error::HypothesisViolated(format!(
                    "G(1) has {} elements over {i}; the comonad is not cartesian",
                    other.len()
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let structure = FinFn::from_table(one.total().clone(), gone.total().clone(), table)?;
        Ok(Coalgebra::raw(&self.comonad, one, gone, structure))
    }

    fn check_object(&self, ob: &Coalgebra) -> Result<()> {
        Hom::new(ob.carrier.clone(), ob.gcarrier.clone(), ob.structure.clone())?;
        ob.check_laws().into_result()
    }

    fn homs(&self, src: &Coalgebra, dst: &Coalgebra) -> Result<Vec<CoalgMap>> {
        let mut out = Vec::new();
        for m in family_maps(&src.carrier, &dst.carrier)? {
            if src.commutes(dst, &m)?.is_none() {
                out.push(Hom::raw(src.clone(), dst.clone(), m));
            }
        }
        Ok(out)
    }

    fn sub_object(&self, ob: &Coalgebra, subset: &FinSet) -> Result<Option<CoalgMap>> {
        let sub = ob.carrier.restrict(subset)?;
        let gsub = self.comonad.apply(&sub)?;
        let incl = FinFn::inclusion(subset, ob.carrier.total())?;
        let gincl = self.comonad.map_between(
            &Hom::raw(sub.clone(), ob.carrier.clone(), incl.clone()),
            &gsub,
            &ob.gcarrier,
        )?;
        let targets: Vec<Value> = subset.iter().map(|s| ob.structure.apply(s).clone()).collect();
        let Some(table) = preimages(&gincl, &targets) else {
            return Ok(None);
        };
        let structure = FinFn::from_table(subset.clone(), gsub.total().clone(), table)?;
        let sub = Coalgebra::raw(&self.comonad, sub, gsub, structure);
        Ok(Some(Hom::raw(sub, ob.clone(), incl)))
    }
}

/// An algebra `s : F X -> X`.
pub struct Algebra<C: Category> {
    pub functor: ExeFunctor<C>,
    pub carrier: C::Ob,
    /// `F(carrier)`.
    pub fcarrier: C::Ob,
    pub structure: FinFn,
}

impl<C: Category> Clone for Algebra<C> {
    fn clone(&self) -> Self {
        Algebra {
            functor: self.functor.clone(),
            carrier: self.carrier.clone(),
            fcarrier: self.fcarrier.clone(),
            structure: self.structure.clone(),
        }
    }
}

impl<C: Category> fmt::Debug for Algebra<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Algebra({}, {:?}, {:?})", self.functor.name, self.carrier, self.structure)
    }
}

impl<C: Category> Algebra<C> {
    pub fn new(functor: &ExeFunctor<C>, carrier: C::Ob, structure: FinFn) -> Result<Algebra<C>> {
        let fcarrier = functor.obj(&carrier)?;
        fcarrier.check_map(&carrier, &structure)?;
        Ok(Algebra {
            functor: functor.clone(),
            carrier,
            fcarrier,
            structure,
        })
    }

    pub(crate) fn raw(
        functor: &ExeFunctor<C>,
        carrier: C::Ob,
        fcarrier: C::Ob,
        structure: FinFn,
    ) -> Algebra<C> {
        Algebra {
            functor: functor.clone(),
            carrier,
            fcarrier,
            structure,
        }
    }

    pub fn structure_hom(&self) -> Hom<C::Ob> {
        Hom::raw(self.fcarrier.clone(), self.carrier.clone(), self.structure.clone())
    }

    /// Whether `h : self.carrier -> target.carrier` satisfies `h ∘ s = t ∘ F h`.
    pub fn is_morphism_to(&self, target: &Algebra<C>, h: &Hom<C::Ob>) -> Result<bool> {
        let fh = self.functor.fmap_between(h, &self.fcarrier, &target.fcarrier)?;
        Ok(h.map.after(&self.structure)? == target.structure.after(&fh.map)?)
    }

    /// All algebra morphisms to `target`, by enumerating the hom-set.
    pub fn morphisms_to(&self, target: &Algebra<C>) -> Result<Vec<Hom<C::Ob>>> {
        let cat = &self.functor.src;
        let mut out = Vec::new();
        for h in cat.homs(&self.carrier, &target.carrier)? {
            if self.is_morphism_to(target, &h)? {
                out.push(h);
            }
        }
        Ok(out)
    }
}

/// The initial algebra found by a stabilized chain `0 -> P0 -> P²0 -> ...`.
pub struct InitialAlgebra<C: Category> {
    pub algebra: Algebra<C>,
    /// Index `n` of the first connecting map `Pⁿ0 -> Pⁿ⁺¹0` that is an iso.
    pub steps: usize,
    /// `P⁰0, ..., Pⁿ⁺¹0`.
    pub chain: Vec<C::Ob>,
    /// Connecting maps `Pᵏ0 -> Pᵏ⁺¹0` for `k = 0..=n`.
    pub links: Vec<Hom<C::Ob>>,
}

impl<C: Category> Clone for InitialAlgebra<C> {
    fn clone(&self) -> Self {
        InitialAlgebra {
            algebra: self.algebra.clone(),
            steps: self.steps,
            chain: self.chain.clone(),
            links: self.links.clone(),
        }
    }
}

impl<C: Category> fmt::Debug for InitialAlgebra<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InitialAlgebra(steps {}, {:?})", self.steps, self.algebra)
    }
}

impl<C: Category> InitialAlgebra<C> {
    pub fn carrier(&self) -> &C::Ob {
        &self.algebra.carrier
    }

    pub fn stages(&self) -> Vec<usize> {
        self.chain.iter().map(|x| x.family().len()).collect()
    }
}

pub enum ChainResult<C: Category> {
    Stabilized(InitialAlgebra<C>),
    Exceeded { stages: Vec<usize> },
}

impl<C: Category> ChainResult<C> {
    pub fn stages(&self) -> Vec<usize> {
        match self {
            ChainResult::Stabilized(w) => w.stages(),
            ChainResult::Exceeded { stages } => stages.clone(),
        }
    }

    pub fn stabilized(&self) -> Option<&InitialAlgebra<C>> {
        match self {
            ChainResult::Stabilized(w) => Some(w),
            ChainResult::Exceeded { .. } => None,
        }
    }

    /// The initial algebra, or [`Error::Exceeded`].
    pub fn into_result(self, max_steps: usize) -> Result<InitialAlgebra<C>> {
        match self {
            ChainResult::Stabilized(w) => Ok(w),
            ChainResult::Exceeded { stages } => Err(Error::Exceeded {
                steps: max_steps,
                stages,
            }),
        }
    }
}

/// Iterates `P` from the initial object until a connecting map is an
/// isomorphism or `max_steps` applications have been made.
pub fn initial_algebra<C: Category>(p: &ExeFunctor<C>, max_steps: usize) -> Result<ChainResult<C>> {
    initial_algebra_traced(p, max_steps, &mut Vec::new())
}

/// [`initial_algebra`], recording stage cardinalities in `trace` as they are
/// computed, so the trace survives a budget error.
pub fn initial_algebra_traced<C: Category>(
    p: &ExeFunctor<C>,
    max_steps: usize,
    trace: &mut Vec<usize>,
) -> Result<ChainResult<C>> {
    trace.clear();
    let cat = &p.src;
    let x0 = cat.initial()?;
    trace.push(x0.family().len());
    if max_steps == 0 {
        return Ok(ChainResult::Exceeded { stages: trace.clone() });
    }
    let x1 = p.obj(&x0)?;
    trace.push(x1.family().len());
    let mut link = cat.initial_map(&x1)?;
    let mut chain = vec![x0, x1];
    let mut links = Vec::new();
    for k in 0..max_steps {
        links.push(link.clone());
        if link.is_iso() {
            let s = link.inverse()?;
            let algebra = Algebra::raw(p, chain[k].clone(), chain[k + 1].clone(), s.map);
            return Ok(ChainResult::Stabilized(InitialAlgebra {
                algebra,
                steps: k,
                chain,
                links,
            }));
        }
        if k + 1 == max_steps {
            break;
        }
        let next = p.obj(&chain[k + 1])?;
        trace.push(next.family().len());
        link = p.fmap_between(&link, &chain[k + 1], &next)?;
        chain.push(next);
    }
    Ok(ChainResult::Exceeded { stages: trace.clone() })
}

/// The unique algebra morphism out of an initial algebra, built stage by stage
/// along its chain: `h₀` out of the initial object, `hₖ₊₁ = t ∘ P hₖ`.
pub fn fold<C: Category>(w: &InitialAlgebra<C>, target: &Algebra<C>) -> Result<Hom<C::Ob>> {
    let p = &w.algebra.functor;
    let cat = &p.src;
    let mut h = cat.initial_map(&target.carrier)?;
    for k in 0..w.steps {
        let ph = p.fmap_between(&h, &w.chain[k + 1], &target.fcarrier)?;
        h = Hom::raw(
            w.chain[k + 1].clone(),
            target.carrier.clone(),
            target.structure.after(&ph.map)?,
        );
    }
    Ok(h)
}

/// The least subalgebra of `alg`, as the inclusion of its carrier, computed as
/// the closure `S₀ = ∅`, `Sₖ₊₁ = Sₖ ∪ s(P Sₖ)`.
pub fn least_subalgebra<C: Category>(alg: &Algebra<C>) -> Result<Hom<C::Ob>> {
    if !alg.functor.flags.preserves_monos {
        return Err(Error::FlagMissing("preserves_monos"));
    }
    let cat = &alg.functor.src;
    let mut current = FinSet::empty();
    loop {
        let incl = cat
            .sub_object(&alg.carrier, &current)?
            .ok_or_else(|| Error::InvalidMap(format!("{current} carries no subobject")))?;
        let ps = alg.functor.obj(&incl.src)?;
        let pincl = alg.functor.fmap_between(&incl, &ps, &alg.fcarrier)?;
        let image = alg.structure.after(&pincl.map)?.image();
        let next = current.union(&image);
        if next == current {
            return Ok(incl);
        }
        current = next;
    }
}

pub fn is_well_founded<C: Category>(alg: &Algebra<C>) -> Result<bool> {
    Ok(least_subalgebra(alg)?.src.family().len() == alg.carrier.family().len())
}

pub fn is_fixed_point<C: Category>(alg: &Algebra<C>) -> bool {
    alg.structure.is_iso()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CharacterizationReport {
    pub fixed_point: bool,
    pub well_founded: bool,
    /// Number of algebra morphisms into each sample target.
    pub morphism_counts: Vec<usize>,
    /// Exactly one morphism into every sample target.
    pub initial_on_samples: bool,
    pub agree: bool,
}

/// Compares "fixed point and well-founded" with initiality evidence gathered
/// by counting morphisms into the sample targets. Initiality can only be
/// corroborated on samples, never decided.
pub fn check_characterization<C: Category>(
    alg: &Algebra<C>,
    targets: &[Algebra<C>],
) -> Result<CharacterizationReport> {
    if !matches!(
        alg.functor.provenance,
        Provenance::Polynomial | Provenance::Semidirect
    ) {
        return Err(Error::HypothesisViolated(format!(
            "{} is not a polynomial functor",
            alg.functor.name
        )));
    }
    let fixed_point = is_fixed_point(alg);
    let well_founded = is_well_founded(alg)?;
    let morphism_counts = targets
        .iter()
        .map(|t| alg.morphisms_to(t).map(|m| m.len()))
        .collect::<Result<Vec<_>>>()?;
    let initial_on_samples = morphism_counts.iter().all(|&n| n == 1);
    Ok(CharacterizationReport {
        fixed_point,
        well_founded,
        initial_on_samples,
        agree: (fixed_point && well_founded) == initial_on_samples,
        morphism_counts,
    })
}

/// A lax morphism `(H, σ) : P -> Q`, with `σ : Q H ⇒ H P`.
pub struct LaxMorphism<C: Category, D: Category> {
    pub functor: ExeFunctor<C, D>,
    pub source: ExeFunctor<C>,
    pub target: ExeFunctor<D>,
    pub sigma: ExeNat<C, D>,
}

/// `H̃(X, s) = (HX, Hs ∘ σ_X)`.
pub fn lift_algebra_functor<C: Category, D: Category>(
    lax: &LaxMorphism<C, D>,
    alg: &Algebra<C>,
) -> Result<Algebra<D>> {
    let h = &lax.functor;
    let hx = h.obj(&alg.carrier)?;
    let qhx = lax.target.obj(&hx)?;
    let hpx = h.obj(&alg.fcarrier)?;
    let sigma = lax.sigma.at_between(&alg.carrier, &qhx, &hpx)?;
    let hs = h.fmap_between(&alg.structure_hom(), &hpx, &hx)?;
    Ok(Algebra::raw(&lax.target, hx, qhx, hs.map.after(&sigma.map)?))
}

/// An adjunction `L ⊣ R` with its unit `Id ⇒ RL` and counit `LR ⇒ Id`.
pub struct Adjunction<C: Category, D: Category> {
    pub left: ExeFunctor<C, D>,
    pub right: ExeFunctor<D, C>,
    pub unit: ExeNat<C, C>,
    pub counit: ExeNat<D, D>,
}

impl<C: Category, D: Category> Adjunction<C, D> {
    /// Both triangle identities on the samples.
    pub fn check_triangles(&self, left_samples: &[C::Ob], right_samples: &[D::Ob]) -> LawReport {
        let mut report = LawReport::default();
        for x in left_samples {
            let check = || -> Result<(FinFn, FinFn)> {
                let eta = self.unit.at(x)?;
                let lx = self.left.obj(x)?;
                let lrlx = self.left.obj(&eta.dst)?;
                let l_eta = self.left.fmap_between(&eta, &lx, &lrlx)?;
                let eps = self.counit.at_between(&lx, &lrlx, &lx)?;
                Ok((eps.map.after(&l_eta.map)?, FinFn::identity(lx.family().total())))
            };
            match check() {
                Ok((l, r)) => report.equal("eps_L . L eta = id", &l, &r),
                Err(e) => report.fail("eps_L . L eta = id", e),
            }
        }
        for y in right_samples {
            let check = || -> Result<(FinFn, FinFn)> {
                let ry = self.right.obj(y)?;
                let eta = self.unit.at(&ry)?;
                let eps = self.counit.at(y)?;
                let r_eps = self.right.fmap_between(&eps, &eta.dst, &ry)?;
                Ok((r_eps.map.after(&eta.map)?, FinFn::identity(ry.family().total())))
            };
            match check() {
                Ok((l, r)) => report.equal("R eps . eta_R = id", &l, &r),
                Err(e) => report.fail("R eps . eta_R = id", e),
            }
        }
        report
    }
}

/// The right adjoint of `H̃` for a strong lax morphism and an adjunction
/// `H ⊣ R`: `(Y, t)` goes to `RY` with structure
/// `R t ∘ R Q ε_Y ∘ R σ⁻¹_{RY} ∘ η_{P R Y}`.
pub fn adjoint_lift_right<C: Category, D: Category>(
    lax: &LaxMorphism<C, D>,
    adj: &Adjunction<C, D>,
    alg: &Algebra<D>,
) -> Result<Algebra<C>> {
    let (h, r, q, p) = (&lax.functor, &adj.right, &lax.target, &lax.source);
    let ry = r.obj(&alg.carrier)?;
    let pry = p.obj(&ry)?;
    let hry = h.obj(&ry)?;
    let qhry = q.obj(&hry)?;
    let hpry = h.obj(&pry)?;
    let sigma = lax.sigma.at_between(&ry, &qhry, &hpry)?;
    if !sigma.is_iso() {
        return Err(Error::NotStrong(format!(
            "component of {} at {:?} is not invertible",
            lax.sigma.name, ry
        )));
    }
    let sigma_inv = sigma.inverse()?;
    let eta = adj.unit.at(&pry)?;
    let r_sigma_inv = r.fmap(&sigma_inv)?;
    let eps = adj.counit.at_between(&alg.carrier, &hry, &alg.carrier)?;
    let q_eps = q.fmap_between(&eps, &qhry, &alg.fcarrier)?;
    let rq_eps = r.fmap(&q_eps)?;
    let rt = r.fmap(&alg.structure_hom())?;
    let structure = rt
        .map
        .after(&rq_eps.map)?
        .after(&r_sigma_inv.map)?
        .after(&eta.map)?;
    Algebra::new(p, ry, structure)
}

/// An oplax morphism of comonads `(S, σ) : G -> H` with `σ : S G ⇒ H S`.
#[derive(Clone, Debug)]
pub struct Oplax {
    pub functor: ExeFunctor<SliceCat>,
    pub source: Arc<Comonad>,
    pub target: Arc<Comonad>,
    pub sigma: ExeNat<SliceCat>,
}

impl Oplax {
    /// `ε^H_S ∘ σ = S ε^G` and `δ^H_S ∘ σ = Hσ ∘ σ_G ∘ S δ^G` on samples.
    pub fn check_laws(&self, samples: &[Family]) -> LawReport {
        let mut report = LawReport::default();
        let (s, g, h) = (&self.functor, &self.source, &self.target);
        for x in samples {
            let check = || -> Result<[(&'static str, FinFn, FinFn); 2]> {
                let gx = g.apply(x)?;
                let ggx = g.apply(&gx)?;
                let sx = s.obj(x)?;
                let sgx = s.obj(&gx)?;
                let sggx = s.obj(&ggx)?;
                let hsx = h.apply(&sx)?;
                let hsgx = h.apply(&sgx)?;
                let hhsx = h.apply(&hsx)?;
                let sigma = self.sigma.at_between(x, &sgx, &hsx)?;
                let sigma_g = self.sigma.at_between(&gx, &sggx, &hsgx)?;
                let eps_h = h.counit_at(&sx, &hsx)?;
                let eps_g = Hom::raw(gx.clone(), x.clone(), g.counit_at(x, &gx)?);
                let s_eps = s.fmap_between(&eps_g, &sgx, &sx)?;
                let delta_h = h.comult_at(&sx, &hsx, &hhsx)?;
                let delta_g = Hom::raw(gx.clone(), ggx.clone(), g.comult_at(x, &gx, &ggx)?);
                let s_delta = s.fmap_between(&delta_g, &sgx, &sggx)?;
                let h_sigma = h.map_between(&sigma, &hsgx, &hhsx)?;
                Ok([
                    ("eps_H S . sigma = S eps_G", eps_h.after(&sigma.map)?, s_eps.map),
                    (
                        "delta_H S . sigma = H sigma . sigma_G . S delta_G",
                        delta_h.after(&sigma.map)?,
                        h_sigma.after(&sigma_g.map)?.after(&s_delta.map)?,
                    ),
                ])
            };
            match check() {
                Ok(eqs) => {
                    for (law, l, r) in eqs {
                        report.equal(law, &l, &r);
                    }
                }
                Err(e) => report.fail("oplax laws", e),
            }
        }
        report
    }

    /// `T(A, α) = (SA, σ_A ∘ Sα)`, without checking the laws.
    pub fn lift(&self, a: &Coalgebra) -> Result<Coalgebra> {
        let sa = self.functor.obj(&a.carrier)?;
        let sga = self.functor.obj(&a.gcarrier)?;
        let hsa = self.target.apply(&sa)?;
        let s_alpha = self.functor.fmap_between(&a.structure_map(), &sa, &sga)?;
        let sigma = self.sigma.at_between(&a.carrier, &sga, &hsa)?;
        Ok(Coalgebra::raw(&self.target, sa, hsa, sigma.map.after(&s_alpha.map)?))
    }
}

/// The functor between coalgebra categories induced by an oplax morphism.
/// The oplax laws are checked on `samples` first.
pub fn lift_functor_along_oplax(
    oplax: &Oplax,
    samples: &[Family],
) -> Result<ExeFunctor<CoalgCat>> {
    let report = oplax.check_laws(samples);
    if let Some(v) = report.violations.first() {
        return Err(Error::OplaxLawViolation(format!("{} at {}", v.law, v.witness)));
    }
    Ok(lift_unchecked(oplax))
}

pub(crate) fn lift_unchecked(oplax: &Oplax) -> ExeFunctor<CoalgCat> {
    let (o1, o2) = (oplax.clone(), oplax.clone());
    ExeFunctor::new(
        format!("lift({})", oplax.functor.name),
        CoalgCat::new(oplax.source.clone()),
        CoalgCat::new(oplax.target.clone()),
        oplax.functor.flags,
        oplax.functor.provenance,
        move |a: &Coalgebra| o1.lift(a),
        move |m: &CoalgMap, ta: &Coalgebra, tb: &Coalgebra| {
            let under = Hom::raw(m.src.carrier.clone(), m.dst.carrier.clone(), m.map.clone());
            Ok(o2.functor.fmap_between(&under, &ta.carrier, &tb.carrier)?.map)
        },
    )
}

/// Recovers `σ` from a lifting `T` of `S`: `σ_X = H(S ε_X) ∘ γ` where `γ` is
/// the structure of `T` applied to the cofree coalgebra on `X`.
pub fn oplax_from_lift(
    lift: &ExeFunctor<CoalgCat>,
    functor: &ExeFunctor<SliceCat>,
    source: &Arc<Comonad>,
    target: &Arc<Comonad>,
) -> Oplax {
    let sg = compose(functor, &source.functor);
    let hs = compose(&target.functor, functor);
    let (t, s, g, h) = (lift.clone(), functor.clone(), source.clone(), target.clone());
    let sigma = ExeNat::new(
        format!("sigma({})", lift.name),
        sg,
        hs,
        move |x: &Family, sgx: &Family, hsx: &Family| {
            let cofree = Coalgebra::cofree(&g, x)?;
            let tc = t.obj(&cofree)?;
            if &tc.carrier != sgx {
                return Err(Error::TypingMismatch(
                    "lift does not sit over the underlying functor".into(),
                ));
            }
            let sx = s.obj(x)?;
            let eps = Hom::raw(cofree.carrier.clone(), x.clone(), g.counit_at(x, &cofree.carrier)?);
            let s_eps = s.fmap_between(&eps, sgx, &sx)?;
            let h_s_eps = h.map_between(&s_eps, &tc.gcarrier, hsx)?;
            h_s_eps.after(&tc.structure)
        },
    );
    Oplax {
        functor: functor.clone(),
        source: source.clone(),
        target: target.clone(),
        sigma,
    }
}

/// Checks that `(A, α, s)` is both a coalgebra and an algebra for the lifted
/// functor: `α` satisfies the coalgebra laws and `α ∘ s = G s ∘ σ_A ∘ P α`.
pub fn algebra_of_coalgebra(
    oplax: &Oplax,
    carrier: &Family,
    alpha: &FinFn,
    s: &FinFn,
) -> Result<LawReport> {
    let (p, g) = (&oplax.functor, &oplax.source);
    let ga = g.apply(carrier)?;
    let coalg = Coalgebra::raw(g, carrier.clone(), ga.clone(), alpha.clone());
    let mut report = coalg.check_laws();
    let pa = p.obj(carrier)?;
    let pga = p.obj(&ga)?;
    let gpa = g.apply(&pa)?;
    let p_alpha = p.fmap_between(&coalg.structure_map(), &pa, &pga)?;
    let sigma = oplax.sigma.at_between(carrier, &pga, &gpa)?;
    let gs = g.map_between(&Hom::raw(pa.clone(), carrier.clone(), s.clone()), &gpa, &ga)?;
    report.equal(
        "alpha . s = G s . sigma . P alpha",
        &alpha.after(s)?,
        &gs.after(&sigma.map)?.after(&p_alpha.map)?,
    );
    Ok(report)
}

/// An initial algebra lifted to the coalgebra category.
pub struct LiftedAlgebra {
    pub coalgebra: Coalgebra,
    pub algebra: Algebra<CoalgCat>,
}

/// Lifts the initial `P`-algebra `(W, s)` along `(P, σ) : G -> G`: the
/// coalgebra structure on `W` is the fold into `(GW, Gs ∘ σ_W)`.
pub fn lift_initial_algebra(oplax: &Oplax, w: &InitialAlgebra<SliceCat>) -> Result<LiftedAlgebra> {
    let (p, g) = (&oplax.functor, &oplax.source);
    let wa = &w.algebra;
    let gw = g.apply(&wa.carrier)?;
    let pgw = p.obj(&gw)?;
    let gpw = g.apply(&wa.fcarrier)?;
    let sigma = oplax.sigma.at_between(&wa.carrier, &pgw, &gpw)?;
    let gs = g.map_between(&wa.structure_hom(), &gpw, &gw)?;
    let target = Algebra::raw(p, gw.clone(), pgw, gs.after(&sigma.map)?);
    let alpha = fold(w, &target)?;
    let coalgebra = Coalgebra::raw(g, wa.carrier.clone(), gw, alpha.map);
    coalgebra.check_laws().into_result()?;
    let lifted = lift_unchecked(oplax);
    let tw = lifted.obj(&coalgebra)?;
    if tw.carrier != wa.fcarrier {
        return Err(Error::TypingMismatch("lifted functor changes the carrier".into()));
    }
    if let Some(x) = tw.commutes(&coalgebra, &wa.structure)? {
        return Err(Error::law("alpha . s = G s . sigma . P alpha", x));
    }
    let algebra = Algebra::raw(&lifted, coalgebra.clone(), tw, wa.structure.clone());
    Ok(LiftedAlgebra { coalgebra, algebra })
}

/// Subsets of a small set, in binary counting order.
pub fn subsets(s: &FinSet) -> Result<Vec<FinSet>> {
    crate::finset::budget::check(crate::finset::budget::power(2, s.len()))?;
    Ok((0u64..(1u64 << s.len()))
        .map(|bits| {
            FinSet::from_sorted(
                s.iter()
                    .enumerate()
                    .filter(|(k, _)| bits >> k & 1 == 1)
                    .map(|(_, v)| v.clone())
                    .collect(),
            )
        })
        .collect())
}

/// Carriers of all subalgebras of `alg`, by enumerating every subset.
pub fn enumerate_subalgebras<C: Category>(alg: &Algebra<C>) -> Result<Vec<FinSet>> {
    let cat = &alg.functor.src;
    let mut out = Vec::new();
    for s in subsets(alg.carrier.family().total())? {
        let Some(incl) = cat.sub_object(&alg.carrier, &s)? else {
            continue;
        };
        let ps = alg.functor.obj(&incl.src)?;
        let pincl = alg.functor.fmap_between(&incl, &ps, &alg.fcarrier)?;
        if alg.structure.after(&pincl.map)?.image().is_subset(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slice::tests::{family, index, random_family};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one() -> FinSet {
        FinSet::atoms(["*"])
    }

    fn over_one(n: usize) -> Family {
        Family::from_fibers(&one(), [(Value::atom("*"), (0..n).map(|j| Value::atom(format!("x{j}"))).collect())]).unwrap()
    }

    /// `X ↦ 1 + X` on `E/1`, written directly (not via polynomials).
    fn maybe() -> ExeFunctor<SliceCat> {
        let cat = SliceCat::new(one());
        ExeFunctor::new(
            "1 + X",
            cat.clone(),
            cat,
            Flags::ALL,
            Provenance::Polynomial,
            |x: &Family| {
                let star = Value::atom("*");
                let mut elems = vec![(Value::inl(Value::Unit), star.clone())];
                elems.extend(x.total().iter().map(|v| (Value::inr(v.clone()), star.clone())));
                crate::finset::budget::check(elems.len())?;
                Ok(Family::from_fibers(&one(), [(star, elems.into_iter().map(|e| e.0).collect())])?)
            },
            |f: &SliceMap, fx: &Family, fy: &Family| {
                FinFn::new(fx.total().clone(), fy.total().clone(), |v| match v.as_tag() {
                    Some((crate::finset::Side::Right, x)) => Value::inr(f.apply(x).clone()),
                    _ => v.clone(),
                })
            },
        )
    }

    /// `X ↦ 2` (constant) on `E/1`: initial algebra has two elements.
    fn two_leaves() -> ExeFunctor<SliceCat> {
        let cat = SliceCat::new(one());
        ExeFunctor::new(
            "2",
            cat.clone(),
            cat,
            Flags::ALL,
            Provenance::Polynomial,
            |_x: &Family| Family::from_fibers(&one(), [(Value::atom("*"), vec![Value::atom("l0"), Value::atom("l1")])]),
            |_f: &SliceMap, fx: &Family, _| Ok(FinFn::identity(fx.total())),
        )
    }

    #[test]
    fn identity_functor_laws_and_chain() {
        let cat = SliceCat::new(index(2));
        let id = identity_functor(&cat);
        let x = family(&[1, 2]);
        let f = Hom::identity(&x);
        assert!(check_functor_laws(&id, &[x.clone()], &[(f.clone(), f)]).passed());
        match initial_algebra(&id, DEFAULT_MAX_STEPS).unwrap() {
            ChainResult::Stabilized(w) => {
                assert_eq!(w.steps, 0);
                assert!(w.carrier().is_empty());
            }
            ChainResult::Exceeded { .. } => panic!("identity chain must stabilize"),
        }
    }

    #[test]
    fn nno_chain_is_reported_as_exceeded() {
        match initial_algebra(&maybe(), 6).unwrap() {
            ChainResult::Exceeded { stages } => assert_eq!(stages, vec![0, 1, 2, 3, 4, 5, 6]),
            ChainResult::Stabilized(_) => panic!("1 + X has no finite initial algebra"),
        }
        let mut trace = Vec::new();
        let r = crate::finset::budget::with_limit(3, || initial_algebra_traced(&maybe(), 10, &mut trace));
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
        assert_eq!(trace, vec![0, 1, 2, 3]);
    }

    #[test]
    fn fold_from_constant_functor() {
        let w = initial_algebra(&two_leaves(), 8).unwrap().into_result(8).unwrap();
        assert_eq!(w.carrier().len(), 2);
        let fid = fold(&w, &w.algebra).unwrap();
        assert_eq!(fid.map, FinFn::identity(w.carrier().total()));
        assert!(is_fixed_point(&w.algebra));
        assert!(is_well_founded(&w.algebra).unwrap());
    }

    #[test]
    fn least_subalgebra_of_identity_algebra_is_empty() {
        let cat = SliceCat::new(one());
        let id = identity_functor(&cat);
        let x = over_one(3);
        let alg = Algebra::new(&id, x.clone(), FinFn::identity(x.total())).unwrap();
        assert!(least_subalgebra(&alg).unwrap().src.is_empty());
        assert!(!is_well_founded(&alg).unwrap());
        assert!(is_fixed_point(&alg));
    }

    #[test]
    fn least_subalgebra_needs_the_flag() {
        let cat = SliceCat::new(one());
        let mut id = identity_functor(&cat);
        id.flags = Flags::NONE;
        let x = over_one(1);
        let alg = Algebra::new(&id, x.clone(), FinFn::identity(x.total())).unwrap();
        assert_eq!(least_subalgebra(&alg).unwrap_err(), Error::FlagMissing("preserves_monos"));
    }

    #[test]
    fn fixed_point_detection() {
        let w = initial_algebra(&two_leaves(), 8).unwrap().into_result(8).unwrap();
        let small = over_one(1);
        let to_small = FinFn::constant(w.algebra.fcarrier.total(), small.total(), small.total().as_slice()[0].clone()).unwrap();
        let alg = Algebra::new(&two_leaves(), small, to_small).unwrap();
        assert!(!is_fixed_point(&alg));
    }

    #[test]
    fn identity_comonad_laws_and_mutant() {
        let g = Comonad::identity(&index(2));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let objs: Vec<Family> = (0..5).map(|_| random_family(&mut rng, &index(2), 3)).collect();
        assert!(check_comonad_laws(&g, &objs, &[]).passed());

        let mut bad = g.clone();
        let id = bad.functor.clone();
        // δ swaps the first two elements of every nonempty carrier
        bad.comult = ExeNat::new("bad delta", id.clone(), id, |x: &Family, _, _| {
            let elems = x.total().as_slice();
            FinFn::new(x.total().clone(), x.total().clone(), |v| {
                if elems.len() >= 2 && v == &elems[0] {
                    elems[1].clone()
                } else if elems.len() >= 2 && v == &elems[1] {
                    elems[0].clone()
                } else {
                    v.clone()
                }
            })
        });
        let report = check_comonad_laws(&bad, &[family(&[2, 0])], &[]);
        assert!(!report.passed());
        assert!(report.violations.iter().any(|v| v.witness.contains("x0_0")));
    }

    #[test]
    fn identity_oplax_lifts_identically() {
        let g = Arc::new(Comonad::identity(&index(2)));
        let cat = SliceCat::new(index(2));
        let id = identity_functor(&cat);
        let sigma = ExeNat::new("id", id.clone(), id.clone(), |x: &Family, _, _| {
            Ok(FinFn::identity(x.total()))
        });
        let oplax = Oplax {
            functor: id.clone(),
            source: g.clone(),
            target: g.clone(),
            sigma,
        };
        let x = family(&[1, 2]);
        let t = lift_functor_along_oplax(&oplax, &[x.clone()]).unwrap();
        let a = Coalgebra::new(&g, x.clone(), FinFn::identity(x.total())).unwrap();
        let ta = t.obj(&a).unwrap();
        assert!(ta.same(&a));
        let back = oplax_from_lift(&t, &id, &g, &g);
        assert_eq!(back.sigma.at(&x).unwrap().map, FinFn::identity(x.total()));
        let report = algebra_of_coalgebra(&oplax, &x, &FinFn::identity(x.total()), &FinFn::identity(x.total())).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn lift_along_identity_comonad_keeps_structure() {
        let g = Arc::new(Comonad::identity(&one()));
        let p = two_leaves();
        let sigma = ExeNat::new("id", compose(&p, &g.functor), compose(&g.functor, &p), |x: &Family, px: &Family, _| {
            let _ = x;
            Ok(FinFn::identity(px.total()))
        });
        let oplax = Oplax { functor: p.clone(), source: g.clone(), target: g, sigma };
        let w = initial_algebra(&p, 8).unwrap().into_result(8).unwrap();
        let lifted = lift_initial_algebra(&oplax, &w).unwrap();
        assert_eq!(lifted.coalgebra.structure, FinFn::identity(w.carrier().total()));
        assert_eq!(lifted.algebra.structure, w.algebra.structure);
        assert_eq!(lifted.coalgebra.carrier, w.algebra.carrier);
    }

    #[test]
    fn lifting_along_identity_lax_morphism() {
        let cat = SliceCat::new(one());
        let p = two_leaves();
        let id = identity_functor(&cat);
        let sigma = ExeNat::new("id", compose(&p, &id), compose(&id, &p), |_: &Family, px: &Family, _| {
            Ok(FinFn::identity(px.total()))
        });
        let lax = LaxMorphism { functor: id.clone(), source: p.clone(), target: p.clone(), sigma };
        let w = initial_algebra(&p, 8).unwrap().into_result(8).unwrap();
        let lifted = lift_algebra_functor(&lax, &w.algebra).unwrap();
        assert_eq!(lifted.structure, w.algebra.structure);

        let unit = ExeNat::new("eta", identity_functor(&cat), compose(&id, &id), |x: &Family, _, _| Ok(FinFn::identity(x.total())));
        let counit = ExeNat::new("eps", compose(&id, &id), identity_functor(&cat), |x: &Family, _, _| Ok(FinFn::identity(x.total())));
        let adj = Adjunction { left: id.clone(), right: id, unit, counit };
        assert!(adj.check_triangles(&[over_one(2)], &[over_one(1)]).passed());
        let back = adjoint_lift_right(&lax, &adj, &lifted).unwrap();
        assert_eq!(back.structure, w.algebra.structure);
        assert_eq!(back.carrier, w.algebra.carrier);
    }

    #[test]
    fn characterization_for_identity_functor() {
        let cat = SliceCat::new(one());
        let id = identity_functor(&cat).with_provenance(Provenance::Polynomial);
        let x = over_one(2);
        let alg = Algebra::new(&id, x.clone(), FinFn::identity(x.total())).unwrap();
        let empty = Family::initial(&one());
        let target = Algebra::new(&id, empty.clone(), FinFn::identity(empty.total())).unwrap();
        let r = check_characterization(&alg, &[target, alg.clone()]).unwrap();
        assert!(r.fixed_point);
        assert!(!r.well_founded);
        assert!(!r.initial_on_samples);
        assert!(r.agree);
    }

    #[test]
    fn closure_matches_subalgebra_enumeration() {
        let p = maybe();
        let x = over_one(3);
        let px = p.obj(&x).unwrap();
        let e = x.total().as_slice().to_vec();
        // x2 is a loop unreachable from the base point
        let s = FinFn::new(px.total().clone(), x.total().clone(), |v| match v.as_tag() {
            Some((crate::finset::Side::Right, y)) if y == &e[0] => e[1].clone(),
            Some((crate::finset::Side::Right, y)) if y == &e[1] => e[0].clone(),
            Some((crate::finset::Side::Right, y)) => y.clone(),
            _ => e[0].clone(),
        })
        .unwrap();
        let alg = Algebra::new(&p, x, s).unwrap();
        let least = least_subalgebra(&alg).unwrap().src.total().clone();
        assert_eq!(least, FinSet::new(vec![e[0].clone(), e[1].clone()]));
        let subs = enumerate_subalgebras(&alg).unwrap();
        assert_eq!(subs.len(), 2);
        assert!(subs.iter().all(|s| least.is_subset(s)));
        assert!(!is_well_founded(&alg).unwrap());
    }
}
