//! Finite sets and total functions between them.
//!
//! Elements are [`Value`]s: a small, totally ordered term language. Every set
//! keeps its elements sorted in that order, so enumeration, equality and the
//! output of every constructor are deterministic. Constructed elements stay
//! structured (pairs, tags, function tables) so that a law violation can always
//! be traced back to the data it came from.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element budget shared by every constructor that can blow up combinatorially.
pub mod budget {
    use std::cell::Cell;

    use crate::error::{Error, Result};

    pub const DEFAULT_LIMIT: usize = 100_000;

    thread_local! {
        static LIMIT: Cell<usize> = const { Cell::new(DEFAULT_LIMIT) };
    }

    /// The limit in force on the current thread.
    pub fn limit() -> usize {
        LIMIT.with(Cell::get)
    }

    pub fn check(size: usize) -> Result<()> {
        let budget = limit();
        if size > budget {
            Err(Error::BudgetExceeded { size, budget })
        } else {
            Ok(())
        }
    }

    /// Runs `f` with `limit` as the element budget, restoring the previous
    /// limit afterwards (also on unwind).
    pub fn with_limit<T>(limit: usize, f: impl FnOnce() -> T) -> T {
        struct Restore(usize);
        impl Drop for Restore {
            fn drop(&mut self) {
                LIMIT.with(|l| l.set(self.0));
            }
        }
        let _restore = Restore(LIMIT.with(|l| l.replace(limit)));
        f()
    }

    /// `base^exp`, saturating at `usize::MAX`.
    pub fn power(base: usize, exp: usize) -> usize {
        let mut acc: usize = 1;
        for _ in 0..exp {
            acc = acc.saturating_mul(base);
            if acc == 0 || acc == usize::MAX {
                break;
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// A canonical element.
///
/// The derived order (variant first, then fields) is the global order used for
/// all enumeration. Function tables are always strictly sorted by key.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawValue")]
pub enum Value {
    Atom(Arc<str>),
    Unit,
    Pair(Arc<(Value, Value)>),
    Tag(Side, Arc<Value>),
    FnTable(Arc<[(Value, Value)]>),
}

#[derive(Deserialize)]
enum RawValue {
    Atom(String),
    Unit,
    Pair(Box<(Value, Value)>),
    Tag(Side, Box<Value>),
    FnTable(Vec<(Value, Value)>),
}

impl TryFrom<RawValue> for Value {
    type Error = String;

    fn try_from(raw: RawValue) -> std::result::Result<Self, String> {
        Ok(match raw {
            RawValue::Atom(s) => Value::atom(s),
            RawValue::Unit => Value::Unit,
            RawValue::Pair(p) => Value::Pair(Arc::new(*p)),
            RawValue::Tag(side, v) => Value::Tag(side, Arc::new(*v)),
            RawValue::FnTable(entries) => {
                if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err("function table keys must be strictly increasing".into());
                }
                Value::FnTable(entries.into())
            }
        })
    }
}

impl Value {
    pub fn atom(name: impl AsRef<str>) -> Value {
        Value::Atom(Arc::from(name.as_ref()))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Arc::new((a, b)))
    }

    pub fn inl(v: Value) -> Value {
        Value::Tag(Side::Left, Arc::new(v))
    }

    pub fn inr(v: Value) -> Value {
        Value::Tag(Side::Right, Arc::new(v))
    }

    /// Builds a function table, sorting by key. Duplicate keys keep the last entry.
    pub fn table(entries: impl IntoIterator<Item = (Value, Value)>) -> Value {
        let map: BTreeMap<Value, Value> = entries.into_iter().collect();
        Value::FnTable(map.into_iter().collect::<Vec<_>>().into())
    }

    /// Builds a function table from entries already strictly sorted by key.
    pub(crate) fn table_sorted(entries: Vec<(Value, Value)>) -> Value {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Value::FnTable(entries.into())
    }

    pub fn fst(&self) -> &Value {
        match self {
            Value::Pair(p) => &p.0,
            other => panic!("fst of non-pair {other}"),
        }
    }

    pub fn snd(&self) -> &Value {
        match self {
            Value::Pair(p) => &p.1,
            other => panic!("snd of non-pair {other}"),
        }
    }

    pub fn as_pair(&self) -> Option<(&Value, &Value)> {
        match self {
            Value::Pair(p) => Some((&p.0, &p.1)),
            _ => None,
        }
    }

    pub fn as_tag(&self) -> Option<(Side, &Value)> {
        match self {
            Value::Tag(side, v) => Some((*side, v)),
            _ => None,
        }
    }

    pub fn entries(&self) -> &[(Value, Value)] {
        match self {
            Value::FnTable(t) => t,
            other => panic!("entries of non-table {other}"),
        }
    }

    /// Looks up `key` in a function table.
    pub fn lookup(&self, key: &Value) -> Option<&Value> {
        let entries = match self {
            Value::FnTable(t) => t,
            _ => return None,
        };
        entries
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| &entries[i].1)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(s) => write!(f, "{s}"),
            Value::Unit => write!(f, "()"),
            Value::Pair(p) => write!(f, "({}, {})", p.0, p.1),
            Value::Tag(Side::Left, v) => write!(f, "inl({v})"),
            Value::Tag(Side::Right, v) => write!(f, "inr({v})"),
            Value::FnTable(t) => {
                write!(f, "{{")?;
                for (i, (k, v)) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k} -> {v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite set: sorted, duplicate-free.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Value>", into = "Vec<Value>")]
pub struct FinSet(Arc<[Value]>);

impl From<Vec<Value>> for FinSet {
    fn from(v: Vec<Value>) -> Self {
        FinSet::new(v)
    }
}

impl From<FinSet> for Vec<Value> {
    fn from(s: FinSet) -> Self {
        s.0.to_vec()
    }
}

impl FromIterator<Value> for FinSet {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        FinSet::new(iter.into_iter().collect())
    }
}

impl FinSet {
    pub fn new(mut elems: Vec<Value>) -> FinSet {
        elems.sort();
        elems.dedup();
        FinSet(elems.into())
    }

    /// Wraps an already sorted, duplicate-free vector.
    pub(crate) fn from_sorted(elems: Vec<Value>) -> FinSet {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
        FinSet(elems.into())
    }

    pub fn empty() -> FinSet {
        FinSet::default()
    }

    pub fn singleton(v: Value) -> FinSet {
        FinSet(vec![v].into())
    }

    pub fn atoms<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> FinSet {
        names.into_iter().map(Value::atom).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, v: &Value) -> Option<usize> {
        self.0.binary_search(v).ok()
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.index_of(v).is_some()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.0
    }

    pub fn is_subset(&self, other: &FinSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn filter(&self, mut keep: impl FnMut(&Value) -> bool) -> FinSet {
        FinSet(self.iter().filter(|v| keep(v)).cloned().collect::<Vec<_>>().into())
    }

    pub fn union(&self, other: &FinSet) -> FinSet {
        FinSet::new(self.iter().chain(other.iter()).cloned().collect())
    }
}

impl<'a> IntoIterator for &'a FinSet {
    type Item = &'a Value;
    type IntoIter = std::slice::Iter<'a, Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A total function between finite sets, stored as the image of each domain
/// element in domain order.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinFn {
    dom: FinSet,
    cod: FinSet,
    table: Arc<[Value]>,
}

impl FinFn {
    /// Tabulates `f` on `dom`, checking every image lies in `cod`.
    pub fn new(dom: FinSet, cod: FinSet, f: impl FnMut(&Value) -> Value) -> Result<FinFn> {
        let table: Vec<Value> = dom.iter().map(f).collect();
        FinFn::from_table(dom, cod, table)
    }

    pub fn try_new(
        dom: FinSet,
        cod: FinSet,
        mut f: impl FnMut(&Value) -> Result<Value>,
    ) -> Result<FinFn> {
        let table = dom.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        FinFn::from_table(dom, cod, table)
    }

    /// `table[i]` is the image of the `i`-th element of `dom`.
    pub fn from_table(dom: FinSet, cod: FinSet, table: Vec<Value>) -> Result<FinFn> {
        if table.len() != dom.len() {
            return Err(Error::InvalidMap(format!(
                "table has {} entries for a domain of {}",
                table.len(),
                dom.len()
            )));
        }
        if let Some((x, y)) = dom.iter().zip(&table).find(|(_, y)| !cod.contains(y)) {
            return Err(Error::InvalidMap(format!("{x} maps to {y}, outside the codomain")));
        }
        Ok(FinFn {
            dom,
            cod,
            table: table.into(),
        })
    }

    pub fn from_pairs(
        dom: FinSet,
        cod: FinSet,
        pairs: impl IntoIterator<Item = (Value, Value)>,
    ) -> Result<FinFn> {
        let map: BTreeMap<Value, Value> = pairs.into_iter().collect();
        let table = dom
            .iter()
            .map(|x| {
                map.get(x)
                    .cloned()
                    .ok_or_else(|| Error::InvalidMap(format!("no image given for {x}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(k) = map.keys().find(|k| !dom.contains(k)) {
            return Err(Error::InvalidMap(format!("{k} is not in the domain")));
        }
        FinFn::from_table(dom, cod, table)
    }

    pub fn identity(a: &FinSet) -> FinFn {
        FinFn {
            dom: a.clone(),
            cod: a.clone(),
            table: a.0.clone(),
        }
    }

    /// The inclusion of `sub` into `sup`.
    pub fn inclusion(sub: &FinSet, sup: &FinSet) -> Result<FinFn> {
        FinFn::from_table(sub.clone(), sup.clone(), sub.0.to_vec())
    }

    pub fn constant(dom: &FinSet, cod: &FinSet, v: Value) -> Result<FinFn> {
        FinFn::from_table(dom.clone(), cod.clone(), vec![v; dom.len()])
    }

    /// The unique map out of the empty set.
    pub fn from_empty(cod: &FinSet) -> FinFn {
        FinFn {
            dom: FinSet::empty(),
            cod: cod.clone(),
            table: Vec::new().into(),
        }
    }

    pub fn dom(&self) -> &FinSet {
        &self.dom
    }

    pub fn cod(&self) -> &FinSet {
        &self.cod
    }

    pub fn images(&self) -> &[Value] {
        &self.table
    }

    pub fn get(&self, x: &Value) -> Option<&Value> {
        self.dom.index_of(x).map(|i| &self.table[i])
    }

    /// Image of `x`.
    ///
    /// # Panics
    /// If `x` is not in the domain; callers inside the crate only apply maps to
    /// elements of their domain, so this indicates a construction bug.
    pub fn apply(&self, x: &Value) -> &Value {
        match self.get(x) {
            Some(y) => y,
            None => panic!("{x} is not in the domain {}", self.dom),
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Value, &Value)> {
        self.dom.iter().zip(self.table.iter())
    }

    /// `self ∘ f`.
    pub fn after(&self, f: &FinFn) -> Result<FinFn> {
        if f.cod != self.dom {
            return Err(Error::TypingMismatch(format!(
                "cannot compose: codomain {} differs from domain {}",
                f.cod, self.dom
            )));
        }
        let table = f.table.iter().map(|y| self.apply(y).clone()).collect();
        Ok(FinFn {
            dom: f.dom.clone(),
            cod: self.cod.clone(),
            table,
        })
    }

    /// `g ∘ self`.
    pub fn then(&self, g: &FinFn) -> Result<FinFn> {
        g.after(self)
    }

    pub fn image(&self) -> FinSet {
        FinSet::new(self.table.to_vec())
    }

    pub fn preimage(&self, y: &Value) -> Vec<Value> {
        self.pairs().filter(|(_, v)| *v == y).map(|(x, _)| x.clone()).collect()
    }

    /// Elements of the codomain grouped with their (sorted) preimages.
    pub fn fibers(&self) -> BTreeMap<Value, Vec<Value>> {
        let mut out: BTreeMap<Value, Vec<Value>> =
            self.cod.iter().map(|c| (c.clone(), Vec::new())).collect();
        for (x, y) in self.pairs() {
            out.get_mut(y).expect("image in codomain").push(x.clone());
        }
        out
    }

    pub fn is_mono(&self) -> bool {
        let mut seen: Vec<&Value> = self.table.iter().collect();
        seen.sort();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    pub fn is_epi(&self) -> bool {
        self.image().len() == self.cod.len()
    }

    pub fn is_iso(&self) -> bool {
        self.dom.len() == self.cod.len() && self.is_mono()
    }

    pub fn inverse(&self) -> Result<FinFn> {
        if !self.is_iso() {
            return Err(Error::NotIso(format!(
                "map {} -> {} is not a bijection",
                self.dom, self.cod
            )));
        }
        FinFn::from_pairs(
            self.cod.clone(),
            self.dom.clone(),
            self.pairs().map(|(x, y)| (y.clone(), x.clone())),
        )
    }

    /// Restriction to a subset of the domain.
    pub fn restrict(&self, sub: &FinSet) -> Result<FinFn> {
        let table = sub
            .iter()
            .map(|x| {
                self.get(x)
                    .cloned()
                    .ok_or_else(|| Error::InvalidMap(format!("{x} is not in the domain")))
            })
            .collect::<Result<Vec<_>>>()?;
        FinFn::from_table(sub.clone(), self.cod.clone(), table)
    }

    /// Same graph, new codomain (which must contain the image).
    pub fn corestrict(&self, cod: &FinSet) -> Result<FinFn> {
        FinFn::from_table(self.dom.clone(), cod.clone(), self.table.to_vec())
    }

    /// First domain element on which `self` and `other` disagree.
    pub fn disagreement(&self, other: &FinFn) -> Option<(Value, Value, Value)> {
        if self.dom != other.dom {
            return self.dom.iter().next().map(|x| (x.clone(), Value::Unit, Value::Unit));
        }
        self.pairs()
            .zip(other.table.iter())
            .find(|((_, a), b)| a != b)
            .map(|((x, a), b)| (x.clone(), a.clone(), b.clone()))
    }
}

impl fmt::Display for FinFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (x, y)) in self.pairs().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x} -> {y}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for FinFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn terminal() -> FinSet {
    FinSet::singleton(Value::Unit)
}

pub fn initial() -> FinSet {
    FinSet::empty()
}

#[derive(Debug, Clone)]
pub struct Product {
    pub obj: FinSet,
    pub proj1: FinFn,
    pub proj2: FinFn,
}

impl Product {
    /// The pairing `⟨f, g⟩ : C → A × B`.
    pub fn pairing(&self, f: &FinFn, g: &FinFn) -> Result<FinFn> {
        if f.dom() != g.dom() {
            return Err(Error::NotParallel("pairing of maps with different domains".into()));
        }
        FinFn::new(f.dom().clone(), self.obj.clone(), |x| {
            Value::pair(f.apply(x).clone(), g.apply(x).clone())
        })
    }
}

pub fn product(a: &FinSet, b: &FinSet) -> Result<Product> {
    budget::check(a.len().saturating_mul(b.len()))?;
    // Pairs come out already sorted since both factors are.
    let elems: Vec<Value> = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| Value::pair(x.clone(), y.clone())))
        .collect();
    let obj = FinSet::from_sorted(elems);
    let proj1 = FinFn::new(obj.clone(), a.clone(), |p| p.fst().clone())?;
    let proj2 = FinFn::new(obj.clone(), b.clone(), |p| p.snd().clone())?;
    Ok(Product { obj, proj1, proj2 })
}

#[derive(Debug, Clone)]
pub struct Equalizer {
    pub obj: FinSet,
    pub incl: FinFn,
}

pub fn equalizer(f: &FinFn, g: &FinFn) -> Result<Equalizer> {
    if f.dom() != g.dom() || f.cod() != g.cod() {
        return Err(Error::NotParallel(format!(
            "{} -> {} vs {} -> {}",
            f.dom(),
            f.cod(),
            g.dom(),
            g.cod()
        )));
    }
    let obj = f.dom().filter(|x| f.apply(x) == g.apply(x));
    let incl = FinFn::inclusion(&obj, f.dom())?;
    Ok(Equalizer { obj, incl })
}

#[derive(Debug, Clone)]
pub struct Pullback {
    pub obj: FinSet,
    pub p1: FinFn,
    pub p2: FinFn,
}

pub fn pullback(f: &FinFn, g: &FinFn) -> Result<Pullback> {
    if f.cod() != g.cod() {
        return Err(Error::CodMismatch(format!("{} vs {}", f.cod(), g.cod())));
    }
    let g_fibers = g.fibers();
    let size: usize = f.images().iter().map(|c| g_fibers[c].len()).sum();
    budget::check(size)?;
    let mut elems = Vec::with_capacity(size);
    for (a, c) in f.pairs() {
        for b in &g_fibers[c] {
            elems.push(Value::pair(a.clone(), b.clone()));
        }
    }
    let obj = FinSet::from_sorted(elems);
    let p1 = FinFn::new(obj.clone(), f.dom().clone(), |p| p.fst().clone())?;
    let p2 = FinFn::new(obj.clone(), g.dom().clone(), |p| p.snd().clone())?;
    Ok(Pullback { obj, p1, p2 })
}

#[derive(Debug, Clone)]
pub struct Coproduct {
    pub obj: FinSet,
    pub inl: FinFn,
    pub inr: FinFn,
}

impl Coproduct {
    /// The copairing `[f, g] : A + B → C`.
    pub fn copairing(&self, f: &FinFn, g: &FinFn) -> Result<FinFn> {
        if f.cod() != g.cod() {
            return Err(Error::CodMismatch("copairing of maps with different codomains".into()));
        }
        FinFn::new(self.obj.clone(), f.cod().clone(), |v| match v.as_tag() {
            Some((Side::Left, x)) => f.apply(x).clone(),
            Some((Side::Right, y)) => g.apply(y).clone(),
            None => unreachable!("coproduct elements are tagged"),
        })
    }
}

pub fn coproduct(a: &FinSet, b: &FinSet) -> Coproduct {
    let elems: Vec<Value> = a
        .iter()
        .cloned()
        .map(Value::inl)
        .chain(b.iter().cloned().map(Value::inr))
        .collect();
    let obj = FinSet::from_sorted(elems);
    let inl = FinFn::new(a.clone(), obj.clone(), |x| Value::inl(x.clone())).expect("inl");
    let inr = FinFn::new(b.clone(), obj.clone(), |x| Value::inr(x.clone())).expect("inr");
    Coproduct { obj, inl, inr }
}

/// Both injections monic and their pullback empty.
pub fn check_disjoint(s: &FinSet, inl: &FinFn, inr: &FinFn) -> bool {
    if inl.cod() != s || inr.cod() != s {
        return false;
    }
    inl.is_mono()
        && inr.is_mono()
        && pullback(inl, inr).map(|p| p.obj.is_empty()).unwrap_or(false)
}

#[derive(Debug, Clone)]
pub struct Exponential {
    pub obj: FinSet,
    /// `B^A × A → B`.
    pub eval: FinFn,
    pub base: FinSet,
}

impl Exponential {
    /// Transposes `f : C × A → B` (domain given as the product `ca`) to `C → B^A`.
    pub fn curry(&self, ca: &Product, f: &FinFn) -> Result<FinFn> {
        let a = ca.proj2.cod();
        FinFn::new(ca.proj1.cod().clone(), self.obj.clone(), |c| {
            Value::table_sorted(
                a.iter()
                    .map(|x| (x.clone(), f.apply(&Value::pair(c.clone(), x.clone())).clone()))
                    .collect(),
            )
        })
    }

    /// Inverse of [`Exponential::curry`].
    pub fn uncurry(&self, ca: &Product, g: &FinFn) -> Result<FinFn> {
        FinFn::new(ca.obj.clone(), self.base.clone(), |p| {
            g.apply(p.fst()).lookup(p.snd()).expect("total table").clone()
        })
    }
}

/// Tables enumerating all total maps `A → B`, in canonical order.
pub fn all_tables(a: &FinSet, b: &FinSet) -> Result<Vec<Vec<Value>>> {
    let count = budget::power(b.len(), a.len());
    budget::check(count)?;
    let n = a.len();
    let mut out = Vec::with_capacity(count);
    if n > 0 && b.is_empty() {
        return Ok(out);
    }
    let mut idx = vec![0usize; n];
    loop {
        out.push(idx.iter().map(|&i| b.as_slice()[i].clone()).collect());
        // odometer, last position fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < b.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

pub fn exponential(a: &FinSet, b: &FinSet) -> Result<Exponential> {
    let tables = all_tables(a, b)?;
    let obj = FinSet::new(
        tables
            .into_iter()
            .map(|t| Value::table_sorted(a.iter().cloned().zip(t).collect()))
            .collect(),
    );
    let ea = product(&obj, a)?;
    let eval = FinFn::new(ea.obj.clone(), b.clone(), |p| {
        p.fst().lookup(p.snd()).expect("total table").clone()
    })?;
    Ok(Exponential {
        obj,
        eval,
        base: b.clone(),
    })
}

/// All maps `A → B` in canonical order.
pub fn hom(a: &FinSet, b: &FinSet) -> Result<Vec<FinFn>> {
    all_tables(a, b)?
        .into_iter()
        .map(|t| FinFn::from_table(a.clone(), b.clone(), t))
        .collect()
}

pub fn is_mono(f: &FinFn) -> bool {
    f.is_mono()
}

pub fn is_iso(f: &FinFn) -> bool {
    f.is_iso()
}

pub fn inverse(f: &FinFn) -> Result<FinFn> {
    f.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(n: usize) -> FinSet {
        FinSet::atoms((0..n).map(|i| format!("e{i}")))
    }

    fn random_fn(rng: &mut ChaCha8Rng, a: &FinSet, b: &FinSet) -> FinFn {
        FinFn::new(a.clone(), b.clone(), |_| {
            b.as_slice()[rng.gen_range(0..b.len())].clone()
        })
        .unwrap()
    }

    #[test]
    fn product_cardinality() {
        let p = product(&FinSet::atoms(["a", "b"]), &FinSet::atoms(["x", "y", "z"])).unwrap();
        assert_eq!(p.obj.len(), 6);
        assert!(product(&FinSet::empty(), &set(3)).unwrap().obj.is_empty());
    }

    #[test]
    fn product_universal_property_by_cone_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (a, b, c) = (
                set(rng.gen_range(0..=3)),
                set(rng.gen_range(0..=3)),
                set(rng.gen_range(0..=2)),
            );
            let p = product(&a, &b).unwrap();
            for f in hom(&c, &a).unwrap() {
                for g in hom(&c, &b).unwrap() {
                    let mediating: Vec<_> = hom(&c, &p.obj)
                        .unwrap()
                        .into_iter()
                        .filter(|m| {
                            p.proj1.after(m).unwrap() == f && p.proj2.after(m).unwrap() == g
                        })
                        .collect();
                    assert_eq!(mediating.len(), 1);
                    assert_eq!(mediating[0], p.pairing(&f, &g).unwrap());
                }
            }
        }
    }

    #[test]
    fn equalizer_cases() {
        let two = FinSet::atoms(["0", "1"]);
        let id = FinFn::identity(&two);
        let e = equalizer(&id, &id).unwrap();
        assert_eq!(e.obj, two);
        assert!(e.incl.is_iso());

        let zero = FinFn::constant(&two, &two, Value::atom("0")).unwrap();
        let e = equalizer(&id, &zero).unwrap();
        assert_eq!(e.obj, FinSet::atoms(["0"]));
        assert!(e.incl.is_mono());

        let other = FinFn::identity(&set(3));
        assert!(matches!(equalizer(&id, &other), Err(Error::NotParallel(_))));
    }

    #[test]
    fn equalizer_matches_subset_filter_and_is_universal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let a = set(rng.gen_range(0..=3));
            let b = set(rng.gen_range(1..=3));
            let (f, g) = (random_fn(&mut rng, &a, &b), random_fn(&mut rng, &a, &b));
            let e = equalizer(&f, &g).unwrap();
            let oracle: Vec<Value> = a
                .iter()
                .filter(|x| f.get(x) == g.get(x))
                .cloned()
                .collect();
            assert_eq!(e.obj.as_slice(), &oracle[..]);
            let c = set(rng.gen_range(0..=2));
            for k in hom(&c, &a).unwrap() {
                let equalizes = f.after(&k).unwrap() == g.after(&k).unwrap();
                let factorizations = hom(&c, &e.obj)
                    .unwrap()
                    .into_iter()
                    .filter(|m| e.incl.after(m).unwrap() == k)
                    .count();
                assert_eq!(factorizations, usize::from(equalizes));
            }
        }
    }

    #[test]
    fn pullback_cases() {
        let two = FinSet::atoms(["0", "1"]);
        let f = FinFn::new(set(3), two.clone(), |_| Value::atom("1")).unwrap();
        let pb = pullback(&f, &FinFn::identity(&two)).unwrap();
        assert!(pb.p1.is_iso());

        let one = FinSet::atoms(["*"]);
        let i0 = FinFn::constant(&one, &two, Value::atom("0")).unwrap();
        let i1 = FinFn::constant(&one, &two, Value::atom("1")).unwrap();
        assert!(pullback(&i0, &i1).unwrap().obj.is_empty());
        assert!(matches!(
            pullback(&i0, &FinFn::identity(&one)),
            Err(Error::CodMismatch(_))
        ));
    }

    #[test]
    fn pullback_cardinality_and_universality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let (a, b, c) = (
                set(rng.gen_range(0..=3)),
                set(rng.gen_range(0..=3)),
                set(rng.gen_range(1..=3)),
            );
            let f = random_fn(&mut rng, &a, &c);
            let g = random_fn(&mut rng, &b, &c);
            let pb = pullback(&f, &g).unwrap();
            let expected: usize = c
                .iter()
                .map(|z| f.preimage(z).len() * g.preimage(z).len())
                .sum();
            assert_eq!(pb.obj.len(), expected);
            let d = set(rng.gen_range(0..=2));
            for x in hom(&d, &a).unwrap() {
                for y in hom(&d, &b).unwrap() {
                    let commutes = f.after(&x).unwrap() == g.after(&y).unwrap();
                    let mediating = hom(&d, &pb.obj)
                        .unwrap()
                        .into_iter()
                        .filter(|m| pb.p1.after(m).unwrap() == x && pb.p2.after(m).unwrap() == y)
                        .count();
                    assert_eq!(mediating, usize::from(commutes));
                }
            }
        }
    }

    #[test]
    fn coproduct_is_disjoint_and_copairing_unique() {
        let one = terminal();
        let s = coproduct(&one, &one);
        assert!(check_disjoint(&s.obj, &s.inl, &s.inr));

        let a = set(2);
        let s = coproduct(&a, &FinSet::empty());
        assert!(s.inl.is_iso());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (a, b, c) = (
                set(rng.gen_range(0..=2)),
                set(rng.gen_range(0..=2)),
                set(rng.gen_range(0..=2)),
            );
            let s = coproduct(&a, &b);
            for f in hom(&a, &c).unwrap() {
                for g in hom(&b, &c).unwrap() {
                    let matching = hom(&s.obj, &c)
                        .unwrap()
                        .into_iter()
                        .filter(|m| m.after(&s.inl).unwrap() == f && m.after(&s.inr).unwrap() == g)
                        .collect::<Vec<_>>();
                    assert_eq!(matching.len(), 1);
                    assert_eq!(matching[0], s.copairing(&f, &g).unwrap());
                }
            }
        }
    }

    #[test]
    fn coproducts_disjoint_up_to_four() {
        for n in 0..=4 {
            for m in 0..=4 {
                let s = coproduct(&set(n), &set(m));
                assert!(check_disjoint(&s.obj, &s.inl, &s.inr), "{n} + {m}");
            }
        }
    }

    #[test]
    fn exponential_cardinality_and_currying() {
        assert_eq!(exponential(&set(2), &set(3)).unwrap().obj.len(), 9);
        assert_eq!(exponential(&FinSet::empty(), &set(3)).unwrap().obj.len(), 1);
        for (na, nb, nc) in [(0, 2, 2), (2, 2, 1), (1, 3, 2), (2, 2, 2), (3, 1, 2)] {
            let (a, b, c) = (set(na), set(nb), set(nc));
            let e = exponential(&a, &b).unwrap();
            let ca = product(&c, &a).unwrap();
            let left = hom(&ca.obj, &b).unwrap();
            let right = hom(&c, &e.obj).unwrap();
            assert_eq!(left.len(), right.len());
            for f in &left {
                let g = e.curry(&ca, f).unwrap();
                assert_eq!(&e.uncurry(&ca, &g).unwrap(), f);
            }
        }
    }

    #[test]
    fn hom_and_iso_predicates() {
        assert_eq!(hom(&FinSet::empty(), &set(3)).unwrap().len(), 1);
        assert_eq!(hom(&set(2), &FinSet::empty()).unwrap().len(), 0);
        assert_eq!(hom(&set(3), &set(2)).unwrap().len(), 8);
        let id = FinFn::identity(&set(3));
        assert!(id.is_iso());
        assert_eq!(id.inverse().unwrap(), id);
        let c = FinFn::constant(&set(2), &set(2), Value::atom("e0")).unwrap();
        assert!(matches!(c.inverse(), Err(Error::NotIso(_))));
    }

    #[test]
    fn hom_is_canonically_ordered() {
        let maps = hom(&set(2), &set(2)).unwrap();
        let tables: Vec<Vec<Value>> = maps.iter().map(|m| m.images().to_vec()).collect();
        let mut sorted = tables.clone();
        sorted.sort();
        assert_eq!(tables, sorted);
    }

    #[test]
    fn budget_guards_exponentials() {
        budget::with_limit(50, || {
            assert!(matches!(
                exponential(&set(4), &set(3)),
                Err(Error::BudgetExceeded { size: 81, budget: 50 })
            ));
        });
        assert_eq!(budget::limit(), budget::DEFAULT_LIMIT);
    }

    #[test]
    fn value_json_round_trip_rejects_unsorted_tables() {
        let v = Value::table([
            (Value::atom("b"), Value::Unit),
            (Value::atom("a"), Value::inl(Value::pair(Value::Unit, Value::atom("x")))),
        ]);
        let json = serde_json::to_string(&v).unwrap();
        let back: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        let bad = r#"{"FnTable":[[{"Atom":"b"},"Unit"],[{"Atom":"a"},"Unit"]]}"#;
        assert!(serde_json::from_str::<Value>(bad).is_err());
    }

    fn arb_fn(max: usize) -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
        (0..=max, 1..=max).prop_flat_map(|(n, m)| {
            (Just(n), Just(m), proptest::collection::vec(0..m, n))
        })
    }

    fn build((n, m, t): (usize, usize, Vec<usize>)) -> FinFn {
        let (a, b) = (set(n), set(m));
        FinFn::from_table(a, b.clone(), t.iter().map(|&i| b.as_slice()[i].clone()).collect())
            .unwrap()
    }

    proptest! {
        #[test]
        fn composition_is_associative_and_unital(
            f in arb_fn(3), g_imgs in proptest::collection::vec(0usize..3, 3),
            h_imgs in proptest::collection::vec(0usize..3, 3)
        ) {
            let f = build(f);
            let b = f.cod().clone();
            let c = set(3);
            let g = FinFn::from_table(b.clone(), c.clone(),
                b.iter().enumerate().map(|(i, _)| c.as_slice()[g_imgs[i % 3]].clone()).collect()).unwrap();
            let h = FinFn::from_table(c.clone(), c.clone(),
                (0..3).map(|i| c.as_slice()[h_imgs[i]].clone()).collect()).unwrap();
            let left = h.after(&g.after(&f).unwrap()).unwrap();
            let right = h.after(&g).unwrap().after(&f).unwrap();
            prop_assert_eq!(left, right);
            prop_assert_eq!(FinFn::identity(f.cod()).after(&f).unwrap(), f.clone());
            prop_assert_eq!(f.after(&FinFn::identity(f.dom())).unwrap(), f);
        }

        #[test]
        fn mono_iff_pairwise_injective(f in arb_fn(4)) {
            let f = build(f);
            let brute = f.dom().iter().all(|x| f.dom().iter().all(|y| x == y || f.apply(x) != f.apply(y)));
            prop_assert_eq!(is_mono(&f), brute);
            prop_assert_eq!(is_iso(&f), brute && f.is_epi());
        }

        #[test]
        fn constructors_are_deterministic(n in 0usize..4, m in 0usize..4) {
            let (a, b) = (set(n), set(m));
            prop_assert_eq!(product(&a, &b).unwrap().obj, product(&a, &b).unwrap().obj);
            prop_assert_eq!(exponential(&a, &b).unwrap().obj, exponential(&a, &b).unwrap().obj);
            prop_assert_eq!(coproduct(&a, &b).obj, coproduct(&a, &b).obj);
        }
    }
}
