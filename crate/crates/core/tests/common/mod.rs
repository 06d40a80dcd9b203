//! Staged oracle for W-types in the gluing world with `H = id`.
//!
//! A coalgebra there is a map `a : X₂ -> X₁`, and an endopolynomial is a pair
//! of polynomials linked by the arrows of `C`, `D` and `I`. The W-type is
//! computed in two plain stages: `W₁` from the first component, then `W₂` as
//! the W-type of a second polynomial indexed over
//! `J = { (i₂, w) : w ∈ W₁ over ι(i₂) }`.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use wcoalg::coalg::{glued_arrow, glued_coalgebra, gluing_comonad, slice_comonad, Glue};
use wcoalg::engine::{initial_algebra, Algebra, CoalgCat, Coalgebra, InitialAlgebra};
use wcoalg::polynomial::Polynomial;
use wcoalg::sample::{self, SampleRng};
use wcoalg::wtype::{Coreflexive, EndoPoly};
use wcoalg::{FinFn, FinSet, Hom, Result, SliceCat, Value};

pub fn one() -> Value {
    Value::atom("1")
}

pub fn two() -> Value {
    Value::atom("2")
}

fn coalgebra(g: &Arc<wcoalg::engine::Comonad>, first: &[&str], arrow: &[(&str, &str)]) -> Coalgebra {
    let v = |s: &&str| Value::atom(*s);
    let second: Vec<Value> = arrow.iter().map(|p| v(&p.0)).collect();
    let table: BTreeMap<Value, Value> = arrow.iter().map(|p| (v(&p.0), v(&p.1))).collect();
    glued_coalgebra(g, &first.iter().map(v).collect::<Vec<_>>(), &second, |x| table[x].clone()).unwrap()
}

fn map(a: &Coalgebra, b: &Coalgebra, pairs: &[(&str, &str)]) -> Hom<Coalgebra> {
    let f = FinFn::from_pairs(
        a.carrier.total().clone(),
        b.carrier.total().clone(),
        pairs.iter().map(|(x, y)| (Value::atom(*x), Value::atom(*y))),
    )
    .unwrap();
    Hom::new(a.clone(), b.clone(), f).unwrap()
}

/// Binary trees in both components; the second component has one kind of
/// node, with one child.
pub fn gluing_small() -> EndoPoly {
    let g = Arc::new(gluing_comonad(&Glue::Identity));
    let i = coalgebra(&g, &["z1", "o1"], &[("z2", "z1"), ("o2", "o1")]);
    let d = coalgebra(&g, &["leaf1", "node1"], &[("leaf2", "leaf1"), ("node2", "node1")]);
    let c = coalgebra(&g, &["l1", "r1"], &[("l2", "l1")]);
    EndoPoly::new(
        map(&c, &i, &[("l1", "z1"), ("r1", "z1"), ("l2", "z2")]),
        map(&c, &d, &[("l1", "node1"), ("r1", "node1"), ("l2", "node2")]),
        map(&d, &i, &[("leaf1", "z1"), ("node1", "o1"), ("leaf2", "z2"), ("node2", "o2")]),
    )
    .unwrap()
}

/// Two leaf kinds and a binary node in the second component.
pub fn gluing_wide() -> EndoPoly {
    let g = Arc::new(gluing_comonad(&Glue::Identity));
    let i = coalgebra(&g, &["z1", "o1"], &[("z2", "z1"), ("o2", "o1")]);
    let d = coalgebra(
        &g,
        &["leaf1", "node1"],
        &[("leafa2", "leaf1"), ("leafb2", "leaf1"), ("node2", "node1")],
    );
    let c = coalgebra(&g, &["l1", "r1"], &[("l2", "l1"), ("r2", "r1")]);
    EndoPoly::new(
        map(&c, &i, &[("l1", "z1"), ("r1", "z1"), ("l2", "z2"), ("r2", "z2")]),
        map(&c, &d, &[("l1", "node1"), ("r1", "node1"), ("l2", "node2"), ("r2", "node2")]),
        map(
            &d,
            &i,
            &[("leaf1", "z1"), ("node1", "o1"), ("leafa2", "z2"), ("leafb2", "z2"), ("node2", "o2")],
        ),
    )
    .unwrap()
}

/// A gluing-world endopolynomial read as its two components and arrows.
pub struct Components {
    pub first: Polynomial,
    pub i2: FinSet,
    /// `ι : I₂ -> I₁`, `δ : D₂ -> D₁`, `γ : C₂ -> C₁`.
    pub iota: BTreeMap<Value, Value>,
    pub delta: BTreeMap<Value, Value>,
    pub gamma: BTreeMap<Value, Value>,
    pub c2: Vec<Value>,
    pub d2: Vec<Value>,
    pub h: FinFn,
    pub g: FinFn,
    pub f: FinFn,
}

fn part(c: &Coalgebra, side: &Value) -> FinSet {
    FinSet::new(c.carrier.fiber(side))
}

pub fn components(p: &EndoPoly) -> Components {
    let (c, d, i) = (&p.h.src, &p.f.src, &p.base);
    let (c1, d1, i1) = (part(c, &one()), part(d, &one()), part(i, &one()));
    let first = Polynomial::new(
        p.h.map.restrict(&c1).unwrap().corestrict(&i1).unwrap(),
        p.g.map.restrict(&c1).unwrap().corestrict(&d1).unwrap(),
        p.f.map.restrict(&d1).unwrap().corestrict(&i1).unwrap(),
    )
    .unwrap();
    Components {
        first,
        i2: part(i, &two()),
        iota: glued_arrow(i),
        delta: glued_arrow(d),
        gamma: glued_arrow(c),
        c2: c.carrier.fiber(&two()),
        d2: d.carrier.fiber(&two()),
        h: p.h.map.clone(),
        g: p.g.map.clone(),
        f: p.f.map.clone(),
    }
}

impl Components {
    /// `J` for a first-stage carrier `Y₁ -> I₁`.
    pub fn second_index(&self, y1: &wcoalg::Family) -> FinSet {
        FinSet::new(
            self.i2
                .iter()
                .flat_map(|i2| {
                    y1.fiber(&self.iota[i2]).into_iter().map(move |y| Value::pair(i2.clone(), y))
                })
                .collect(),
        )
    }

    /// The second-stage polynomial over `J` for a first-stage algebra
    /// `(Y₁, t₁)`. Shapes are `(d, σ₁)` with `(δd, σ₁) ∈ P₁Y₁`; positions
    /// are `((d, σ₁), c)` for `c` over `d`.
    pub fn second_stage(&self, t1: &Algebra<SliceCat>) -> Polynomial {
        let j = self.second_index(&t1.carrier);
        let py1 = &t1.fcarrier;
        let mut shapes = Vec::new();
        let mut f_pairs = Vec::new();
        let mut positions = Vec::new();
        for d in &self.d2 {
            for e in py1.total().iter().filter(|e| e.fst() == &self.delta[d]) {
                let shape = Value::pair(d.clone(), e.snd().clone());
                let top = Value::pair(self.f.apply(d).clone(), t1.structure.apply(e).clone());
                f_pairs.push((shape.clone(), top));
                for c in self.c2.iter().filter(|c| self.g.apply(c) == d) {
                    let child = e.snd().lookup(&self.gamma[c]).expect("γc lies over δd").clone();
                    positions.push((Value::pair(shape.clone(), c.clone()), shape.clone(), Value::pair(self.h.apply(c).clone(), child)));
                }
                shapes.push(shape);
            }
        }
        let b = FinSet::new(shapes);
        let a = FinSet::new(positions.iter().map(|p| p.0.clone()).collect());
        Polynomial::new(
            FinFn::from_pairs(a.clone(), j.clone(), positions.iter().map(|p| (p.0.clone(), p.2.clone()))).unwrap(),
            FinFn::from_pairs(a, b.clone(), positions.iter().map(|p| (p.0.clone(), p.1.clone()))).unwrap(),
            FinFn::from_pairs(b, j, f_pairs).unwrap(),
        )
        .unwrap()
    }
}

pub struct Staged {
    pub parts: Components,
    pub w1: InitialAlgebra<SliceCat>,
    pub second: Polynomial,
    pub w2: InitialAlgebra<SliceCat>,
}

pub fn staged(p: &EndoPoly, max_steps: usize) -> Result<Staged> {
    let parts = components(p);
    let w1 = initial_algebra(&parts.first.functor(), max_steps)?.into_result(max_steps)?;
    let second = parts.second_stage(&w1.algebra);
    let w2 = initial_algebra(&second.functor(), max_steps)?.into_result(max_steps)?;
    Ok(Staged { parts, w1, second, w2 })
}

/// A target pair: a first-stage algebra and a second-stage algebra over its
/// `J`.
pub struct PairTarget {
    pub first: Algebra<SliceCat>,
    pub second_poly: Polynomial,
    pub second: Algebra<SliceCat>,
}

pub fn random_pair_target(parts: &Components, rng: &mut SampleRng, tag: &str) -> Option<PairTarget> {
    let p1 = parts.first.functor();
    let y1 = sample::family(rng, parts.first.src_index(), 2, &format!("{tag}a"));
    let py1 = p1.obj(&y1).ok()?;
    let t1 = sample::slice_map(rng, &py1, &y1)?;
    let first = Algebra::new(&p1, y1, t1.map).ok()?;
    let second_poly = parts.second_stage(&first);
    let y2 = sample::family(rng, second_poly.src_index(), 2, &format!("{tag}b"));
    let f2 = second_poly.functor();
    let py2 = f2.obj(&y2).ok()?;
    let t2 = sample::slice_map(rng, &py2, &y2)?;
    let second = Algebra::new(&f2, y2, t2.map).ok()?;
    Some(PairTarget { first, second_poly, second })
}

/// Every pair `(h₁, h₂)` of maps commuting with the two stages, by
/// enumeration: `h₁` over all first-stage algebra morphisms, `h₂` over all
/// maps `W₂ -> Y₂` lying over `J(h₁)`.
pub fn pair_morphisms(s: &Staged, target: &PairTarget) -> Result<Vec<(FinFn, FinFn)>> {
    let w2 = s.w2.carrier();
    let y2 = &target.second.carrier;
    let mut out = Vec::new();
    for h1 in s.w1.algebra.morphisms_to(&target.first)? {
        let over = |w: &Value| {
            let j = w2.over(w);
            Value::pair(j.fst().clone(), h1.apply(j.snd()).clone())
        };
        let choices: Vec<Vec<Value>> = w2.total().iter().map(|w| y2.fiber(&over(w))).collect();
        for h2 in product(&choices) {
            let h2 = FinFn::from_table(w2.total().clone(), y2.total().clone(), h2)?;
            let commutes = s.w2.algebra.fcarrier.total().iter().all(|e| {
                let (shape, children) = (e.fst(), e.snd());
                let image_shape = Value::pair(
                    shape.fst().clone(),
                    Value::table(shape.snd().entries().iter().map(|(c, w)| (c.clone(), h1.apply(w).clone()))),
                );
                let image_children = Value::table(children.entries().iter().map(|(pos, w)| {
                    (Value::pair(image_shape.clone(), pos.snd().clone()), h2.apply(w).clone())
                }));
                let lhs = h2.apply(s.w2.algebra.structure.apply(e));
                let rhs = target.second.structure.apply(&Value::pair(image_shape, image_children));
                lhs == rhs
            });
            if commutes {
                out.push((h1.map.clone(), h2));
            }
        }
    }
    Ok(out)
}

fn product(choices: &[Vec<Value>]) -> Vec<Vec<Value>> {
    choices.iter().fold(vec![Vec::new()], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(o.clone());
                    next
                })
            })
            .collect()
    })
}

/// The staged pair as an algebra for the lifted polynomial on coalgebras
/// over the base.
pub fn staged_algebra(data: &Coreflexive, s: &Staged) -> Result<Algebra<CoalgCat>> {
    let poly = data.poly();
    let g = poly.base.comonad.clone();
    let (w1, w2) = (s.w1.carrier(), s.w2.carrier());
    let v = glued_coalgebra(&g, w1.total().as_slice(), w2.total().as_slice(), |x| w2.over(x).snd().clone())?;
    let to_base = FinFn::new(v.carrier.total().clone(), poly.base.carrier.total().clone(), |x| {
        if w1.total().contains(x) {
            w1.over(x).clone()
        } else {
            w2.over(x).fst().clone()
        }
    })?;
    let sc = slice_comonad(&poly.base)?;
    let v = sc.from_over(&Hom::new(v, poly.base.clone(), to_base)?)?;
    let d_side = poly.f.src.carrier.clone();
    let (s1, s2) = (&s.w1.algebra.structure, &s.w2.algebra.structure);
    data.algebra_from_decoder(&v, |level, y, d, children| {
        let tree = |cs: &[(Value, Value)]| Value::table(cs.iter().cloned());
        if d_side.over(d) == &one() {
            return Ok(s1.apply(&Value::pair(d.clone(), tree(children))).clone());
        }
        let arrow = glued_arrow(&sc.to_over(&level.p)?.src);
        let (_, first) = data.decode(level, &arrow[y])?;
        let shape = Value::pair(d.clone(), tree(&first));
        let positions: Vec<_> = children.iter().map(|(c, x)| (Value::pair(shape.clone(), c.clone()), x.clone())).collect();
        Ok(s2.apply(&Value::pair(shape, Value::table(positions))).clone())
    })
}

pub fn random_targets(parts: &Components, seed: u64, n: usize) -> Vec<PairTarget> {
    let mut rng = sample::rng(seed);
    let mut out = Vec::new();
    let mut k = 0;
    while out.len() < n {
        k += 1;
        assert!(k < 10_000, "no targets found");
        out.extend(random_pair_target(parts, &mut rng, &format!("t{k}_")));
    }
    out
}
