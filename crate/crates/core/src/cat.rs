//! Objects, morphisms and the small amount of category structure the generic
//! engine needs: enumeration of hom-sets, initial/terminal objects and
//! subobjects given by subsets of the underlying total set.

use std::fmt;

use crate::error::{Error, Result};
use crate::finset::{FinFn, FinSet, Value};
use crate::slice::Family;

/// Something with an underlying family over a base index.
pub trait Obj: Clone + fmt::Debug + Send + Sync + 'static {
    fn family(&self) -> &Family;

    /// Checks that `map` underlies a morphism `self -> dst`.
    fn check_map(&self, dst: &Self, map: &FinFn) -> Result<()>;

    /// Structural equality, including any extra structure.
    fn same(&self, other: &Self) -> bool;
}

/// A morphism between objects of some category, carried by a finite function
/// between the underlying total sets.
#[derive(Clone)]
pub struct Hom<O> {
    pub src: O,
    pub dst: O,
    pub map: FinFn,
}

impl<O: Obj> Hom<O> {
    pub fn new(src: O, dst: O, map: FinFn) -> Result<Self> {
        src.check_map(&dst, &map)?;
        Ok(Hom { src, dst, map })
    }

    /// Skips validation. Used where the map is correct by construction.
    pub(crate) fn raw(src: O, dst: O, map: FinFn) -> Self {
        Hom { src, dst, map }
    }

    pub fn identity(o: &O) -> Self {
        Hom {
            src: o.clone(),
            dst: o.clone(),
            map: FinFn::identity(o.family().total()),
        }
    }

    /// `self ∘ f`.
    pub fn after(&self, f: &Hom<O>) -> Result<Hom<O>> {
        Ok(Hom {
            src: f.src.clone(),
            dst: self.dst.clone(),
            map: self.map.after(&f.map)?,
        })
    }

    pub fn apply(&self, x: &Value) -> &Value {
        self.map.apply(x)
    }

    pub fn is_mono(&self) -> bool {
        self.map.is_mono()
    }

    pub fn is_iso(&self) -> bool {
        self.map.is_iso()
    }

    /// Inverse of a bijective morphism. In every category used here a bijective
    /// morphism is an isomorphism.
    pub fn inverse(&self) -> Result<Hom<O>> {
        Ok(Hom {
            src: self.dst.clone(),
            dst: self.src.clone(),
            map: self.map.inverse()?,
        })
    }

    pub fn same(&self, other: &Hom<O>) -> bool {
        self.map == other.map && self.src.same(&other.src) && self.dst.same(&other.dst)
    }
}

impl<O> fmt::Debug for Hom<O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hom{:?}", self.map)
    }
}

pub trait Category: Clone + Send + Sync + 'static {
    type Ob: Obj;

    fn name(&self) -> String;

    /// Index of the families underlying every object.
    fn index(&self) -> &FinSet;

    fn initial(&self) -> Result<Self::Ob>;

    fn terminal(&self) -> Result<Self::Ob>;

    fn check_object(&self, ob: &Self::Ob) -> Result<()>;

    /// Every morphism `src -> dst`, in canonical order.
    fn homs(&self, src: &Self::Ob, dst: &Self::Ob) -> Result<Vec<Hom<Self::Ob>>>;

    /// The subobject of `ob` carried by `subset`, with its inclusion, or `None`
    /// if `subset` does not carry one.
    fn sub_object(&self, ob: &Self::Ob, subset: &FinSet) -> Result<Option<Hom<Self::Ob>>>;

    fn initial_map(&self, x: &Self::Ob) -> Result<Hom<Self::Ob>> {
        let zero = self.initial()?;
        if !zero.family().total().is_empty() {
            return Err(Error::InvalidMap("initial object is not empty".into()));
        }
        Ok(Hom::raw(zero, x.clone(), FinFn::from_empty(x.family().total())))
    }
}

/// Enumerates the maps of families `src -> dst` over a common index: one
/// choice in the matching fiber per source element.
pub(crate) fn family_maps(src: &Family, dst: &Family) -> Result<Vec<FinFn>> {
    let fibers = dst.proj().fibers();
    let choices: Vec<&[Value]> = src
        .proj()
        .images()
        .iter()
        .map(|i| fibers.get(i).map(Vec::as_slice).unwrap_or(&[]))
        .collect();
    let count = choices
        .iter()
        .fold(1usize, |acc, c| acc.saturating_mul(c.len()));
    crate::finset::budget::check(count)?;
    let mut out = Vec::with_capacity(count);
    if choices.iter().any(|c| c.is_empty()) {
        return Ok(out);
    }
    let mut idx = vec![0usize; choices.len()];
    loop {
        let table = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
        out.push(FinFn::from_table(src.total().clone(), dst.total().clone(), table)?);
        let mut pos = choices.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}
