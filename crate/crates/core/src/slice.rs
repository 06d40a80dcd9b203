//! Slice categories `E/I` of finite sets with pullback, dependent sum and
//! dependent product, plus the units and counits of `Σ ⊣ u* ⊣ Π`.
//!
//! Encodings:
//! - `pullback_along(u, X)` has elements `(i', x)` with `u(i') = proj(x)`;
//! - `sigma_along(u, X)` keeps the elements of `X`;
//! - `pi_along(u, X)` has elements `(b, {a -> x, ...})`, one table entry per
//!   `a` in `u⁻¹(b)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cat::{family_maps, Category, Hom, Obj};
use crate::error::{Error, Result};
use crate::finset::{budget, pullback, FinFn, FinSet, Value};

/// An object of `E/I`: a finite set with a map to the index.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Family {
    proj: FinFn,
}

impl Family {
    pub fn new(proj: FinFn) -> Family {
        Family { proj }
    }

    /// Builds a family from `(index element, fiber elements)` pairs. Index
    /// elements not mentioned get empty fibers.
    pub fn from_fibers(
        index: &FinSet,
        fibers: impl IntoIterator<Item = (Value, Vec<Value>)>,
    ) -> Result<Family> {
        let mut pairs = BTreeMap::new();
        for (i, xs) in fibers {
            if !index.contains(&i) {
                return Err(Error::InvalidMap(format!("{i} is not in the index {index}")));
            }
            for x in xs {
                if let Some(prev) = pairs.insert(x.clone(), i.clone()) {
                    return Err(Error::InvalidMap(format!(
                        "{x} lies over both {prev} and {i}"
                    )));
                }
            }
        }
        let total = FinSet::new(pairs.keys().cloned().collect());
        Ok(Family::new(FinFn::from_pairs(total, index.clone(), pairs)?))
    }

    /// The identity family: the terminal object of `E/I`.
    pub fn terminal(index: &FinSet) -> Family {
        Family::new(FinFn::identity(index))
    }

    pub fn initial(index: &FinSet) -> Family {
        Family::new(FinFn::from_empty(index))
    }

    pub fn total(&self) -> &FinSet {
        self.proj.dom()
    }

    pub fn index(&self) -> &FinSet {
        self.proj.cod()
    }

    pub fn proj(&self) -> &FinFn {
        &self.proj
    }

    pub fn over(&self, x: &Value) -> &Value {
        self.proj.apply(x)
    }

    pub fn fiber(&self, i: &Value) -> Vec<Value> {
        self.proj.preimage(i)
    }

    /// Fiber cardinalities in index order.
    pub fn fiber_sizes(&self) -> Vec<usize> {
        self.proj.fibers().values().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.total().len()
    }

    pub fn is_empty(&self) -> bool {
        self.total().is_empty()
    }

    /// The subfamily on a subset of the total set.
    pub fn restrict(&self, sub: &FinSet) -> Result<Family> {
        Ok(Family::new(self.proj.restrict(sub)?))
    }

    /// The same total set over a new index, via `u : I -> J`.
    pub fn reindex(&self, u: &FinFn) -> Result<Family> {
        Ok(Family::new(u.after(&self.proj)?))
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Family{:?}", self.proj)
    }
}

impl Obj for Family {
    fn family(&self) -> &Family {
        self
    }

    fn check_map(&self, dst: &Family, map: &FinFn) -> Result<()> {
        if map.dom() != self.total() || map.cod() != dst.total() {
            return Err(Error::TypingMismatch(
                "map does not go between the total sets".into(),
            ));
        }
        if self.index() != dst.index() {
            return Err(Error::TypingMismatch("families over different indices".into()));
        }
        for (x, y) in map.pairs() {
            if self.over(x) != dst.over(y) {
                return Err(Error::InvalidMap(format!(
                    "{x} over {} is sent to {y} over {}",
                    self.over(x),
                    dst.over(y)
                )));
            }
        }
        Ok(())
    }

    fn same(&self, other: &Family) -> bool {
        self == other
    }
}

pub type SliceMap = Hom<Family>;

/// The slice category `E/I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceCat {
    pub index: FinSet,
}

impl SliceCat {
    pub fn new(index: FinSet) -> SliceCat {
        SliceCat { index }
    }
}

impl Category for SliceCat {
    type Ob = Family;

    fn name(&self) -> String {
        format!("E/{}", self.index)
    }

    fn index(&self) -> &FinSet {
        &self.index
    }

    fn initial(&self) -> Result<Family> {
        Ok(Family::initial(&self.index))
    }

    fn terminal(&self) -> Result<Family> {
        Ok(Family::terminal(&self.index))
    }

    fn check_object(&self, ob: &Family) -> Result<()> {
        if ob.index() != &self.index {
            return Err(Error::TypingMismatch(format!(
                "family over {} in {}",
                ob.index(),
                self.name()
            )));
        }
        Ok(())
    }

    fn homs(&self, src: &Family, dst: &Family) -> Result<Vec<SliceMap>> {
        Ok(family_maps(src, dst)?
            .into_iter()
            .map(|m| Hom::raw(src.clone(), dst.clone(), m))
            .collect())
    }

    fn sub_object(&self, ob: &Family, subset: &FinSet) -> Result<Option<SliceMap>> {
        let sub = ob.restrict(subset)?;
        let incl = FinFn::inclusion(subset, ob.total())?;
        Ok(Some(Hom::raw(sub, ob.clone(), incl)))
    }
}

fn expect_index(x: &Family, index: &FinSet, what: &str) -> Result<()> {
    if x.index() != index {
        return Err(Error::TypingMismatch(format!(
            "{what}: family over {} where {} was expected",
            x.index(),
            index
        )));
    }
    Ok(())
}

/// `u* X` for `u : I' -> I` and `X` over `I`.
pub fn pullback_along(u: &FinFn, x: &Family) -> Result<Family> {
    expect_index(x, u.cod(), "pullback_along")?;
    let pb = pullback(u, x.proj())?;
    Ok(Family::new(pb.p1))
}

/// `u* m`, given the already computed `u* src` and `u* dst`.
pub fn pullback_map_between(m: &SliceMap, src: &Family, dst: &Family) -> Result<FinFn> {
    FinFn::new(src.total().clone(), dst.total().clone(), |p| {
        Value::pair(p.fst().clone(), m.apply(p.snd()).clone())
    })
}

pub fn pullback_map(u: &FinFn, m: &SliceMap) -> Result<SliceMap> {
    let src = pullback_along(u, &m.src)?;
    let dst = pullback_along(u, &m.dst)?;
    let map = pullback_map_between(m, &src, &dst)?;
    Ok(Hom::raw(src, dst, map))
}

/// `Σ_u X` for `u : I' -> I` and `X` over `I'`.
pub fn sigma_along(u: &FinFn, x: &Family) -> Result<Family> {
    expect_index(x, u.dom(), "sigma_along")?;
    x.reindex(u)
}

pub fn sigma_map(u: &FinFn, m: &SliceMap) -> Result<SliceMap> {
    Ok(Hom::raw(
        sigma_along(u, &m.src)?,
        sigma_along(u, &m.dst)?,
        m.map.clone(),
    ))
}

/// All sections of the fibers listed in `choices`, as sorted tables keyed by
/// `keys` (which must be sorted). Enumerated in canonical order.
pub(crate) fn sections(keys: &[Value], choices: &[&[Value]]) -> Vec<Value> {
    let mut out = Vec::new();
    if choices.iter().any(|c| c.is_empty()) {
        return out;
    }
    let mut idx = vec![0usize; keys.len()];
    loop {
        out.push(Value::table_sorted(
            keys.iter()
                .zip(&idx)
                .zip(choices)
                .map(|((k, &i), c)| (k.clone(), c[i].clone()))
                .collect(),
        ));
        let mut pos = keys.len();
        loop {
            if pos == 0 {
                return out;
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

/// `Π_u X` for `u : A -> B` and `X` over `A`.
pub fn pi_along(u: &FinFn, x: &Family) -> Result<Family> {
    expect_index(x, u.dom(), "pi_along")?;
    let x_fibers = x.proj().fibers();
    let u_fibers = u.fibers();
    let mut size = 0usize;
    for keys in u_fibers.values() {
        let n = keys
            .iter()
            .fold(1usize, |acc, a| acc.saturating_mul(x_fibers[a].len()));
        size = size.saturating_add(n);
        budget::check(size)?;
    }
    let mut total = Vec::with_capacity(size);
    let mut proj = Vec::with_capacity(size);
    for (b, keys) in &u_fibers {
        let choices: Vec<&[Value]> = keys.iter().map(|a| x_fibers[a].as_slice()).collect();
        for s in sections(keys, &choices) {
            total.push(Value::pair(b.clone(), s));
            proj.push(b.clone());
        }
    }
    Ok(Family::new(FinFn::from_table(
        FinSet::from_sorted(total),
        u.cod().clone(),
        proj,
    )?))
}

/// Postcomposes every section with `m`.
pub(crate) fn map_section(m: &FinFn, s: &Value) -> Value {
    Value::table_sorted(
        s.entries()
            .iter()
            .map(|(k, v)| (k.clone(), m.apply(v).clone()))
            .collect(),
    )
}

pub fn pi_map_between(m: &SliceMap, src: &Family, dst: &Family) -> Result<FinFn> {
    FinFn::new(src.total().clone(), dst.total().clone(), |p| {
        Value::pair(p.fst().clone(), map_section(&m.map, p.snd()))
    })
}

pub fn pi_map(u: &FinFn, m: &SliceMap) -> Result<SliceMap> {
    let src = pi_along(u, &m.src)?;
    let dst = pi_along(u, &m.dst)?;
    let map = pi_map_between(m, &src, &dst)?;
    Ok(Hom::raw(src, dst, map))
}

/// Unit of `Σ_u ⊣ u*` at `X` (over the domain of `u`): `x ↦ (proj x, x)`.
pub fn sigma_unit(u: &FinFn, x: &Family) -> Result<SliceMap> {
    let dst = pullback_along(u, &sigma_along(u, x)?)?;
    let map = FinFn::new(x.total().clone(), dst.total().clone(), |v| {
        Value::pair(x.over(v).clone(), v.clone())
    })?;
    Ok(Hom::raw(x.clone(), dst, map))
}

/// Counit of `Σ_u ⊣ u*` at `Y` (over the codomain of `u`): `(i', y) ↦ y`.
pub fn sigma_counit(u: &FinFn, y: &Family) -> Result<SliceMap> {
    let src = sigma_along(u, &pullback_along(u, y)?)?;
    let map = FinFn::new(src.total().clone(), y.total().clone(), |p| p.snd().clone())?;
    Ok(Hom::raw(src, y.clone(), map))
}

/// Unit of `u* ⊣ Π_u` at `Z` (over the codomain of `u`):
/// `z ↦ (b, {a ↦ (a, z)})`.
pub fn pi_unit(u: &FinFn, z: &Family) -> Result<SliceMap> {
    let dst = pi_along(u, &pullback_along(u, z)?)?;
    let u_fibers = u.fibers();
    let map = FinFn::new(z.total().clone(), dst.total().clone(), |v| {
        let b = z.over(v);
        Value::pair(
            b.clone(),
            Value::table_sorted(
                u_fibers[b]
                    .iter()
                    .map(|a| (a.clone(), Value::pair(a.clone(), v.clone())))
                    .collect(),
            ),
        )
    })?;
    Ok(Hom::raw(z.clone(), dst, map))
}

/// Counit of `u* ⊣ Π_u` at `X` (over the domain of `u`):
/// `(a, (b, s)) ↦ s(a)`.
pub fn pi_counit(u: &FinFn, x: &Family) -> Result<SliceMap> {
    pi_counit_from(u, &pi_along(u, x)?, x)
}

/// [`pi_counit`] with `Π_u X` supplied.
pub fn pi_counit_from(u: &FinFn, pi_x: &Family, x: &Family) -> Result<SliceMap> {
    let src = pullback_along(u, pi_x)?;
    let map = FinFn::new(src.total().clone(), x.total().clone(), |p| {
        p.snd().snd().lookup(p.fst()).expect("section defined on fiber").clone()
    })?;
    Ok(Hom::raw(src, x.clone(), map))
}

/// Transpose of `φ : u*Z -> X` to `Z -> Π_u X`.
pub fn transpose_pi(u: &FinFn, z: &Family, x: &Family, phi: &SliceMap) -> Result<SliceMap> {
    let uz = pullback_along(u, z)?;
    if phi.src != uz || &phi.dst != x {
        return Err(Error::TypingMismatch(
            "transpose_pi expects a map u*Z -> X".into(),
        ));
    }
    let pi_x = pi_along(u, x)?;
    let u_fibers = u.fibers();
    let map = FinFn::new(z.total().clone(), pi_x.total().clone(), |v| {
        let b = z.over(v);
        Value::pair(
            b.clone(),
            Value::table_sorted(
                u_fibers[b]
                    .iter()
                    .map(|a| {
                        let y = phi.apply(&Value::pair(a.clone(), v.clone())).clone();
                        (a.clone(), y)
                    })
                    .collect(),
            ),
        )
    })?;
    Ok(Hom::raw(z.clone(), pi_x, map))
}

/// Inverse of [`transpose_pi`]: `ψ : Z -> Π_u X` to `u*Z -> X`.
pub fn untranspose_pi(u: &FinFn, z: &Family, x: &Family, psi: &SliceMap) -> Result<SliceMap> {
    let pi_x = pi_along(u, x)?;
    if &psi.src != z || psi.dst != pi_x {
        return Err(Error::TypingMismatch(
            "untranspose_pi expects a map Z -> Π_u X".into(),
        ));
    }
    let uz = pullback_along(u, z)?;
    let map = FinFn::new(uz.total().clone(), x.total().clone(), |p| {
        psi.apply(p.snd()).snd().lookup(p.fst()).expect("section defined").clone()
    })?;
    Ok(Hom::raw(uz, x.clone(), map))
}

/// Transpose of `φ : Σ_u X -> Y` to `X -> u*Y`.
pub fn transpose_sigma(u: &FinFn, x: &Family, y: &Family, phi: &SliceMap) -> Result<SliceMap> {
    if phi.src != sigma_along(u, x)? || &phi.dst != y {
        return Err(Error::TypingMismatch(
            "transpose_sigma expects a map Σ_u X -> Y".into(),
        ));
    }
    let uy = pullback_along(u, y)?;
    let map = FinFn::new(x.total().clone(), uy.total().clone(), |v| {
        Value::pair(x.over(v).clone(), phi.apply(v).clone())
    })?;
    Ok(Hom::raw(x.clone(), uy, map))
}

/// Inverse of [`transpose_sigma`].
pub fn untranspose_sigma(
    u: &FinFn,
    x: &Family,
    y: &Family,
    psi: &SliceMap,
) -> Result<SliceMap> {
    if &psi.src != x || psi.dst != pullback_along(u, y)? {
        return Err(Error::TypingMismatch(
            "untranspose_sigma expects a map X -> u*Y".into(),
        ));
    }
    let sx = sigma_along(u, x)?;
    let map = FinFn::new(sx.total().clone(), y.total().clone(), |v| {
        psi.apply(v).snd().clone()
    })?;
    Ok(Hom::raw(sx, y.clone(), map))
}

/// The identification `(E/I)/K ≅ E/K` for `K` over `I`.
///
/// An object of `(E/I)/K` is a slice map `m : Y -> K`; it corresponds to the
/// family `Y` over the total set of `K` with projection `m`. Morphisms are the
/// same finite functions on both sides.
#[derive(Clone, Debug)]
pub struct SliceOfSlice {
    pub base: Family,
}

impl SliceOfSlice {
    pub fn new(base: Family) -> SliceOfSlice {
        SliceOfSlice { base }
    }

    pub fn flatten(&self, m: &SliceMap) -> Result<Family> {
        if m.dst != self.base {
            return Err(Error::TypingMismatch("object does not lie over K".into()));
        }
        Ok(Family::new(m.map.clone()))
    }

    pub fn unflatten(&self, z: &Family) -> Result<SliceMap> {
        expect_index(z, self.base.total(), "slice_of_slice")?;
        let over_i = z.reindex(self.base.proj())?;
        Ok(Hom::raw(over_i, self.base.clone(), z.proj().clone()))
    }

    /// A morphism `a -> b` of `(E/I)/K` as a morphism of `E/K`.
    pub fn flatten_map(&self, a: &SliceMap, b: &SliceMap, map: &FinFn) -> Result<SliceMap> {
        Hom::new(self.flatten(a)?, self.flatten(b)?, map.clone())
    }

    /// A morphism of `E/K` as a morphism of `(E/I)/K`; the returned map is a
    /// slice map between the domains that commutes with the structure maps.
    pub fn unflatten_map(&self, m: &SliceMap) -> Result<(SliceMap, SliceMap, SliceMap)> {
        let a = self.unflatten(&m.src)?;
        let b = self.unflatten(&m.dst)?;
        let over = Hom::new(a.src.clone(), b.src.clone(), m.map.clone())?;
        if b.map.after(&over.map)? != a.map {
            return Err(Error::InvalidMap("map does not commute over K".into()));
        }
        Ok((a, b, over))
    }
}

pub fn slice_of_slice(k: &Family) -> SliceOfSlice {
    SliceOfSlice::new(k.clone())
}
