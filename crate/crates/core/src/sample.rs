//! Seeded random generators for families, maps and polynomials. Used for
//! sampled law checks; every generator is deterministic in the seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::finset::{FinFn, FinSet, Value};
use crate::polynomial::Polynomial;
use crate::slice::{Family, SliceMap};
use crate::cat::Hom;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Atoms `{prefix}0 .. {prefix}{n-1}`.
pub fn atoms(prefix: &str, n: usize) -> FinSet {
    FinSet::atoms((0..n).map(|k| format!("{prefix}{k}")))
}

/// A family over `index` with fibers of size at most `max_fiber`; elements
/// are atoms named after `prefix`.
pub fn family(rng: &mut SampleRng, index: &FinSet, max_fiber: usize, prefix: &str) -> Family {
    let fibers: Vec<(Value, Vec<Value>)> = index
        .iter()
        .enumerate()
        .map(|(k, i)| {
            let n = rng.gen_range(0..=max_fiber);
            (
                i.clone(),
                (0..n).map(|j| Value::atom(format!("{prefix}{k}_{j}"))).collect(),
            )
        })
        .collect();
    Family::from_fibers(index, fibers).expect("fibers are disjoint by construction")
}

/// A random function, or `None` when `a` is nonempty and `b` empty.
pub fn map(rng: &mut SampleRng, a: &FinSet, b: &FinSet) -> Option<FinFn> {
    if b.is_empty() && !a.is_empty() {
        return None;
    }
    let table = a
        .iter()
        .map(|_| b.as_slice()[rng.gen_range(0..b.len())].clone())
        .collect();
    FinFn::from_table(a.clone(), b.clone(), table).ok()
}

/// A random map of families over a common index, if one exists.
pub fn slice_map(rng: &mut SampleRng, x: &Family, y: &Family) -> Option<SliceMap> {
    let fibers = y.proj().fibers();
    let mut table = Vec::with_capacity(x.len());
    for i in x.proj().images() {
        let fiber = fibers.get(i)?;
        if fiber.is_empty() {
            return None;
        }
        table.push(fiber[rng.gen_range(0..fiber.len())].clone());
    }
    let map = FinFn::from_table(x.total().clone(), y.total().clone(), table).ok()?;
    Some(Hom::raw(x.clone(), y.clone(), map))
}

/// A random polynomial from `src` to `dst` with at most `max_shapes` shapes
/// and at most `max_arity` positions per shape.
pub fn polynomial(
    rng: &mut SampleRng,
    src: &FinSet,
    dst: &FinSet,
    max_shapes: usize,
    max_arity: usize,
) -> Polynomial {
    let nb = if dst.is_empty() { 0 } else { rng.gen_range(0..=max_shapes) };
    let b = atoms("b", nb);
    let mut positions = Vec::new();
    for (k, shape) in b.iter().enumerate() {
        let arity = if src.is_empty() { 0 } else { rng.gen_range(0..=max_arity) };
        for p in 0..arity {
            positions.push((Value::atom(format!("a{k}_{p}")), shape.clone()));
        }
    }
    let a = FinSet::new(positions.iter().map(|(a, _)| a.clone()).collect());
    let g = FinFn::from_pairs(a.clone(), b.clone(), positions).expect("positions lie over shapes");
    let h = map(rng, &a, src).expect("src is nonempty when there are positions");
    let f = map(rng, &b, dst).expect("dst is nonempty when there are shapes");
    Polynomial::new(h, g, f).expect("typed by construction")
}

/// A random subset.
pub fn subset(rng: &mut SampleRng, s: &FinSet) -> FinSet {
    s.filter(|_| rng.gen_bool(0.5))
}
