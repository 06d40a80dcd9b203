//! Scenario files and the batch runner behind the `wcoalg` binary.
//!
//! A scenario is a JSON document (schema `wcoalg.scenario/1`) naming a world,
//! a few coalgebras, an endopolynomial between them and a list of commands.
//! Running it yields a [`Report`] (schema `wcoalg.report/1`) that is
//! byte-identical across runs with the same inputs, unless timings are
//! requested.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::cat::{Category, Hom};
use crate::coalg::{
    check_disjoint_coproduct, diagram_coalgebra, glued_coalgebra, gluing_comonad,
    internal_diagram_comonad, slice_comonad, FinCat, Glue,
};
use crate::engine::{
    check_characterization, check_comonad_laws, enumerate_subalgebras, least_subalgebra, Algebra, CoalgCat,
    Coalgebra, Comonad, LawReport, DEFAULT_MAX_STEPS,
};
use crate::error::{Error, Result};
use crate::finset::{budget, FinFn, FinSet, Value};
use crate::polynomial::Polynomial;
use crate::sample;
use crate::slice::Family;
use crate::wtype::{
    build_coreflexive, check_equalizer_mono_lemma, check_preservation_delta, check_preservation_restrict,
    cross_check, direct_chain, Coreflexive, EndoPoly, WType,
};

pub const SCENARIO_SCHEMA: &str = "wcoalg.scenario/1";
pub const REPORT_SCHEMA: &str = "wcoalg.report/1";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema: String,
    #[serde(default)]
    name: String,
    world: WorldDef,
    #[serde(default)]
    objects: BTreeMap<String, ObjectDef>,
    #[serde(default)]
    polynomial: Option<PolyDef>,
    #[serde(default)]
    downstairs: Option<PlainPolyDef>,
    #[serde(default)]
    commands: Vec<Command>,
    #[serde(default)]
    budgets: Budgets,
    #[serde(default)]
    expected_depth: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum WorldDef {
    Finset,
    Diagrams { category: CategoryDef },
    Gluing { h: Glue },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryDef {
    objects: Vec<String>,
    arrows: Vec<(String, String, String)>,
    identities: Vec<(String, String)>,
    composites: Vec<(String, String, String)>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDef {
    fibers: BTreeMap<String, Vec<String>>,
    /// Diagrams: `[x, arrow, y]`. Gluing: `[x, "h", value]` for `x` over `2`.
    #[serde(default)]
    action: Vec<(String, String, Json)>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDef {
    from: String,
    to: String,
    pairs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDef {
    h: MapDef,
    g: MapDef,
    f: MapDef,
}

/// A plain polynomial: shapes lie over an index element, positions lie over
/// a shape and an index element.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlainPolyDef {
    index: Vec<String>,
    shapes: BTreeMap<String, String>,
    positions: BTreeMap<String, (String, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Wtype,
    CrossCheck,
    Characterize,
    Preservation,
    LemmaChecks,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Wtype => "wtype",
            Command::CrossCheck => "cross-check",
            Command::Characterize => "characterize",
            Command::Preservation => "preservation",
            Command::LemmaChecks => "lemma-checks",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    pub max_steps: usize,
    pub element_budget: usize,
    pub sample_seed: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { max_steps: DEFAULT_MAX_STEPS, element_budget: budget::DEFAULT_LIMIT, sample_seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub enum World {
    Finset,
    Diagrams(FinCat),
    Gluing(Glue),
}

impl World {
    pub fn name(&self) -> &'static str {
        match self {
            World::Finset => "finset",
            World::Diagrams(_) => "diagrams",
            World::Gluing(_) => "gluing",
        }
    }
}

/// A loaded and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub world: World,
    pub comonad: Arc<Comonad>,
    pub objects: BTreeMap<String, Coalgebra>,
    pub polynomial: Option<EndoPoly>,
    pub downstairs: Option<Polynomial>,
    pub commands: Vec<Command>,
    pub budgets: Budgets,
    pub expected_depth: Option<usize>,
}

fn invalid(law: &str, witness: impl std::fmt::Display) -> Error {
    Error::Validation { law: law.to_string(), witness: witness.to_string() }
}

fn atom_value(j: &Json) -> Result<Value> {
    match j {
        Json::Null => Ok(Value::Unit),
        Json::String(s) => Ok(Value::atom(s)),
        Json::Object(m) => m
            .iter()
            .map(|(k, v)| Ok((Value::atom(k), atom_value(v)?)))
            .collect::<Result<Vec<_>>>()
            .map(Value::table),
        other => Err(invalid("action values are atoms, tables or null", other)),
    }
}

fn fibers(index: &FinSet, def: &ObjectDef, name: &str) -> Result<Family> {
    for key in def.fibers.keys() {
        if !index.contains(&Value::atom(key)) {
            return Err(invalid("fibers lie over the world index", format!("{name}: {key}")));
        }
    }
    let all: Vec<&String> = def.fibers.values().flatten().collect();
    if FinSet::atoms(&all).len() != all.len() {
        return Err(invalid("elements are distinct", name));
    }
    Family::from_fibers(
        index,
        def.fibers.iter().map(|(i, xs)| (Value::atom(i), xs.iter().map(Value::atom).collect())),
    )
}

fn build_object(world: &World, g: &Arc<Comonad>, name: &str, def: &ObjectDef) -> Result<Coalgebra> {
    let carrier = fibers(g.index(), def, name)?;
    let wrap = |e: Error| match e {
        Error::Validation { law, witness } => invalid(&law, format!("{name}: {witness}")),
        other => invalid("coalgebra", format!("{name}: {other}")),
    };
    match world {
        World::Finset => {
            if !def.action.is_empty() {
                return Err(invalid("finite sets carry no action", name));
            }
            diagram_coalgebra(g, &FinCat::discrete(&FinSet::atoms(["*"])), carrier, |_, _| None).map_err(wrap)
        }
        World::Diagrams(c) => {
            let mut act = HashMap::new();
            for (x, k, y) in &def.action {
                act.insert((Value::atom(x), Value::atom(k)), atom_value(y)?);
            }
            diagram_coalgebra(g, c, carrier, |x, k| act.get(&(x.clone(), k.clone())).cloned()).map_err(wrap)
        }
        World::Gluing(_) => {
            let mut arrow = HashMap::new();
            for (x, _, y) in &def.action {
                arrow.insert(Value::atom(x), atom_value(y)?);
            }
            let second = carrier.fiber(&Value::atom("2"));
            if let Some(x) = second.iter().find(|x| !arrow.contains_key(*x)) {
                return Err(invalid("the glued arrow is total", format!("{name}: {x}")));
            }
            glued_coalgebra(g, &carrier.fiber(&Value::atom("1")), &second, |x| arrow[x].clone()).map_err(wrap)
        }
    }
}

fn build_map(objects: &BTreeMap<String, Coalgebra>, label: &str, def: &MapDef) -> Result<Hom<Coalgebra>> {
    let get = |n: &String| {
        objects.get(n).ok_or_else(|| invalid("referenced objects exist", format!("{label}: {n}")))
    };
    let (a, b) = (get(&def.from)?, get(&def.to)?);
    let map = FinFn::from_pairs(
        a.carrier.total().clone(),
        b.carrier.total().clone(),
        def.pairs.iter().map(|(x, y)| (Value::atom(x), Value::atom(y))),
    )
    .map_err(|e| invalid("maps are total functions", format!("{label}: {e}")))?;
    Hom::new(a.clone(), b.clone(), map).map_err(|e| invalid("maps are coalgebra morphisms", format!("{label}: {e}")))
}

fn build_plain(def: &PlainPolyDef) -> Result<Polynomial> {
    let index = FinSet::atoms(&def.index);
    let shapes = FinSet::atoms(def.shapes.keys());
    let positions = FinSet::atoms(def.positions.keys());
    let at = |s: &String| Value::atom(s);
    let f = FinFn::from_pairs(shapes.clone(), index.clone(), def.shapes.iter().map(|(b, i)| (at(b), at(i))));
    let g = FinFn::from_pairs(positions.clone(), shapes, def.positions.iter().map(|(a, (b, _))| (at(a), at(b))));
    let h = FinFn::from_pairs(positions, index, def.positions.iter().map(|(a, (_, i))| (at(a), at(i))));
    let typed = |r: Result<FinFn>| r.map_err(|e| invalid("downstairs polynomial is typed", e));
    Polynomial::new(typed(h)?, typed(g)?, typed(f)?)
}

/// Parses and validates a scenario document.
pub fn parse(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.schema != SCENARIO_SCHEMA {
        return Err(invalid("schema version", format!("expected {SCENARIO_SCHEMA}, found {}", file.schema)));
    }
    let (world, comonad) = match &file.world {
        WorldDef::Finset => (World::Finset, internal_diagram_comonad(&FinCat::discrete(&FinSet::atoms(["*"])))),
        WorldDef::Diagrams { category } => {
            let at = |s: &String| Value::atom(s);
            let c = FinCat::new(
                FinSet::atoms(&category.objects),
                category.arrows.iter().map(|(k, d, c)| (at(k), at(d), at(c))).collect(),
                category.identities.iter().map(|(o, k)| (at(o), at(k))).collect(),
                category.composites.iter().map(|(g, f, gf)| (at(g), at(f), at(gf))).collect(),
            )?;
            let g = internal_diagram_comonad(&c);
            (World::Diagrams(c), g)
        }
        WorldDef::Gluing { h } => (World::Gluing(h.clone()), gluing_comonad(h)),
    };
    let comonad = Arc::new(comonad);
    let mut objects = BTreeMap::new();
    for (name, def) in &file.objects {
        objects.insert(name.clone(), build_object(&world, &comonad, name, def)?);
    }
    let polynomial = match &file.polynomial {
        None => None,
        Some(p) => {
            let h = build_map(&objects, "h", &p.h)?;
            let g = build_map(&objects, "g", &p.g)?;
            let f = build_map(&objects, "f", &p.f)?;
            Some(EndoPoly::new(h, g, f).map_err(|e| invalid("h, g, f form an endopolynomial", e))?)
        }
    };
    let downstairs = file.downstairs.as_ref().map(build_plain).transpose()?;
    Ok(Scenario {
        name: file.name,
        world,
        comonad,
        objects,
        polynomial,
        downstairs,
        commands: file.commands,
        budgets: file.budgets,
        expected_depth: file.expected_depth,
    })
}

pub fn load(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse { line: 0, column: 0, message: format!("{}: {e}", path.display()) })?;
    parse(&text)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckLevel {
    /// Laws are checked on the objects the computation touches.
    #[default]
    Touched,
    /// Also on seeded random samples.
    #[serde(rename = "touched+sampled")]
    TouchedSampled,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub check_level: CheckLevel,
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { check_level: CheckLevel::Touched, timings: false }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub command: String,
    pub check: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Json::is_null")]
    pub details: Json,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: String,
    pub scenario: String,
    pub world: String,
    pub budgets: Budgets,
    pub check_level: CheckLevel,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name = if self.scenario.is_empty() { "<unnamed>" } else { &self.scenario };
        let _ = writeln!(out, "scenario {name} ({} world)", self.world);
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let _ = write!(out, "{mark} {}/{}", c.command, c.check);
            if !c.details.is_null() {
                let _ = write!(out, " {}", c.details);
            }
            if let Some(w) = &c.witness {
                let _ = write!(out, " -- {w}");
            }
            if let Some(ms) = c.millis {
                let _ = write!(out, " [{ms} ms]");
            }
            out.push('\n');
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "{passed}/{} checks passed", self.checks.len());
        out
    }
}

fn law_result(command: Command, check: &str, report: &LawReport) -> CheckResult {
    CheckResult {
        command: command.name().into(),
        check: check.into(),
        passed: report.passed(),
        witness: report.violations.first().map(|v| format!("{}: {}", v.law, v.witness)),
        details: json!({ "checked": report.checked }),
        millis: None,
    }
}

fn simple(command: Command, check: &str, passed: bool, details: Json, witness: Option<String>) -> CheckResult {
    CheckResult { command: command.name().into(), check: check.into(), passed, witness, details, millis: None }
}

fn error_result(command: Command, check: &str, e: &Error) -> CheckResult {
    let details = match e {
        Error::Exceeded { steps, stages } => json!({ "outcome": "exceeded", "steps": steps, "stages": stages }),
        _ => Json::Null,
    };
    simple(command, check, false, details, Some(e.to_string()))
}

struct Runner<'a> {
    scenario: &'a Scenario,
    options: &'a RunOptions,
    pipeline: Option<(Coreflexive, WType)>,
}

impl Runner<'_> {
    fn sampled(&self) -> bool {
        self.options.check_level == CheckLevel::TouchedSampled
    }

    fn poly(&self) -> Result<&EndoPoly> {
        self.scenario
            .polynomial
            .as_ref()
            .ok_or_else(|| Error::HypothesisViolated("the scenario declares no polynomial".into()))
    }

    fn ensure_pipeline(&mut self) -> Result<&(Coreflexive, WType)> {
        if self.pipeline.is_none() {
            let data = build_coreflexive(self.poly()?)?;
            let wt = data.equalizer_wfp(self.scenario.budgets.max_steps)?;
            self.pipeline = Some((data, wt));
        }
        Ok(self.pipeline.as_ref().expect("just computed"))
    }

    fn random_families(&self, n: usize) -> Vec<Family> {
        let mut rng = sample::rng(self.scenario.budgets.sample_seed);
        (0..n).map(|k| sample::family(&mut rng, self.scenario.comonad.index(), 2, &format!("s{k}_"))).collect()
    }

    fn validate(&mut self) -> Vec<CheckResult> {
        let cmd = Command::Validate;
        let s = self.scenario;
        let mut out = Vec::new();
        let world = match &s.world {
            World::Diagrams(c) => json!({ "objects": c.objects.len(), "arrows": c.arrows.len() }),
            World::Gluing(h) => json!({ "h": h.name() }),
            World::Finset => Json::Null,
        };
        out.push(simple(cmd, "world", true, world, None));
        let sizes: BTreeMap<&String, usize> = s.objects.iter().map(|(k, v)| (k, v.carrier.len())).collect();
        out.push(simple(cmd, "coalgebra-laws", true, json!({ "objects": sizes }), None));
        let mut carriers: Vec<Family> = s.objects.values().map(|o| o.carrier.clone()).collect();
        if self.sampled() {
            carriers.extend(self.random_families(10));
        }
        out.push(law_result(cmd, "comonad-laws", &check_comonad_laws(&s.comonad, &carriers, &[])));
        out.push(simple(
            cmd,
            "cartesian",
            s.comonad.is_cartesian(),
            json!({ "provenance": s.comonad.functor.provenance }),
            (!s.comonad.is_cartesian()).then(|| "the comonad lacks the pullback flags".to_string()),
        ));
        match check_disjoint_coproduct(&CoalgCat::new(s.comonad.clone())) {
            Ok(r) => out.push(law_result(cmd, "disjoint-coproduct", &r)),
            Err(e) => out.push(error_result(cmd, "disjoint-coproduct", &e)),
        }
        if s.polynomial.is_some() {
            out.push(simple(cmd, "endopolynomial", true, Json::Null, None));
            match self.intertwining() {
                Ok(r) => out.push(law_result(cmd, "intertwining", &r)),
                Err(e) => out.push(error_result(cmd, "intertwining", &e)),
            }
        }
        out
    }

    /// `U P₀ = Q₀ U` on the base and, when sampling, on random coalgebras
    /// over it.
    fn intertwining(&self) -> Result<LawReport> {
        let poly = self.poly()?;
        let data = build_coreflexive(poly)?;
        let sc = slice_comonad(&poly.base)?;
        let cat = CoalgCat::new(self.scenario.comonad.clone());
        let mut samples = vec![sc.from_over(&Hom::identity(&poly.base))?];
        if self.sampled() {
            let mut rng = sample::rng(self.scenario.budgets.sample_seed);
            for x in self.random_families(10) {
                let structs = Coalgebra::all_structures(&self.scenario.comonad, &x)?;
                if structs.is_empty() {
                    continue;
                }
                let z = &structs[rng.gen_range(0..structs.len())];
                let maps = cat.homs(z, &poly.base)?;
                if !maps.is_empty() {
                    samples.push(sc.from_over(&maps[rng.gen_range(0..maps.len())])?);
                }
            }
        }
        let mut report = data.check_intertwining(&samples);
        for x in &samples {
            report.merge(data.check_coreflexive(x)?);
        }
        Ok(report)
    }

    fn wtype(&mut self) -> Vec<CheckResult> {
        let cmd = Command::Wtype;
        let max_steps = self.scenario.budgets.max_steps;
        match self.ensure_pipeline() {
            Ok((_, wt)) => {
                let r = &wt.report;
                vec![
                    simple(
                        cmd,
                        "stabilized",
                        true,
                        json!({ "fiber_sizes": r.fiber_sizes, "w0_steps": wt.w0.steps, "w1_steps": wt.w1.steps }),
                        None,
                    ),
                    simple(cmd, "fixed-point", r.fixed_point, Json::Null, (!r.fixed_point).then(|| "s is not invertible".into())),
                    simple(cmd, "well-founded", r.well_founded, Json::Null, (!r.well_founded).then(|| "closure is a proper subset".into())),
                    simple(
                        cmd,
                        "creation",
                        r.traces.created(),
                        serde_json::to_value(&r.traces).expect("traces serialize"),
                        (!r.traces.created()).then(|| "downstairs and lifted chains differ".into()),
                    ),
                    law_result(cmd, "proof-equations", &r.equations),
                    law_result(cmd, "factoring-conditions", &r.conditions),
                ]
            }
            Err(e) => {
                let mut out = vec![error_result(cmd, "stabilized", &e)];
                if let Error::Exceeded { .. } = e {
                    let traces = self.poly().and_then(build_coreflexive).and_then(|d| d.traces(max_steps));
                    match traces {
                        Ok(t) => out.push(simple(
                            cmd,
                            "creation",
                            t.created(),
                            serde_json::to_value(&t).expect("traces serialize"),
                            (!t.created()).then(|| "downstairs and lifted chains differ".into()),
                        )),
                        Err(e) => out.push(error_result(cmd, "creation", &e)),
                    }
                }
                out
            }
        }
    }

    fn cross_check(&mut self) -> Vec<CheckResult> {
        let cmd = Command::CrossCheck;
        let max_steps = self.scenario.budgets.max_steps;
        let expected = self.scenario.expected_depth;
        let run = |this: &mut Self| -> Result<Vec<CheckResult>> {
            let (data, wt) = this.ensure_pipeline()?;
            let direct = direct_chain(data, max_steps)?.into_result(max_steps)?;
            let cmp = cross_check(data, wt, max_steps)?;
            let mut out = vec![simple(
                cmd,
                "direct-chain-iso",
                cmp.iso,
                json!({ "direct_steps": direct.steps, "direct_stages": direct.stages(), "morphisms": cmp.morphisms }),
                cmp.witness.clone(),
            )];
            if let Some(d) = expected {
                out.push(simple(
                    cmd,
                    "expected-depth",
                    direct.steps == d,
                    json!({ "expected": d, "found": direct.steps }),
                    (direct.steps != d).then(|| format!("stabilized after {} steps", direct.steps)),
                ));
            }
            Ok(out)
        };
        run(self).unwrap_or_else(|e| vec![error_result(cmd, "direct-chain-iso", &e)])
    }

    /// Sample targets: small coalgebras over the base with every algebra
    /// structure on them, seeded.
    fn sample_targets(&self, data: &Coreflexive, n: usize) -> Result<Vec<Algebra<CoalgCat>>> {
        let poly = self.poly()?;
        let sc = slice_comonad(&poly.base)?;
        let cat = CoalgCat::new(self.scenario.comonad.clone());
        let mut rng = sample::rng(self.scenario.budgets.sample_seed);
        let mut out = Vec::new();
        for attempt in 0..20 * n {
            if out.len() == n {
                break;
            }
            let x = sample::family(&mut rng, self.scenario.comonad.index(), 2, &format!("t{attempt}_"));
            let Ok(structs) = Coalgebra::all_structures(&self.scenario.comonad, &x) else { continue };
            if structs.is_empty() {
                continue;
            }
            let z = &structs[rng.gen_range(0..structs.len())];
            let Ok(maps) = cat.homs(z, &poly.base) else { continue };
            if maps.is_empty() {
                continue;
            }
            let y = sc.from_over(&maps[rng.gen_range(0..maps.len())])?;
            let py = data.p.obj(&y)?;
            let Ok(structures) = data.cat.homs(&py, &y) else { continue };
            if structures.is_empty() {
                continue;
            }
            let t = &structures[rng.gen_range(0..structures.len())];
            out.push(Algebra::new(&data.p, y, t.map.clone())?);
        }
        Ok(out)
    }

    fn characterize(&mut self) -> Vec<CheckResult> {
        let cmd = Command::Characterize;
        let run = |this: &mut Self| -> Result<CheckResult> {
            let (data, wt) = this.ensure_pipeline()?.clone();
            let targets = this.sample_targets(&data, 5)?;
            let r = check_characterization(&wt.algebra, &targets)?;
            let ok = r.agree && r.fixed_point && r.well_founded;
            Ok(simple(
                cmd,
                "initial-on-samples",
                ok,
                serde_json::to_value(&r).expect("report serializes"),
                (!ok).then(|| format!("morphism counts {:?}", r.morphism_counts)),
            ))
        };
        vec![run(self).unwrap_or_else(|e| error_result(cmd, "initial-on-samples", &e))]
    }

    fn preservation(&mut self) -> Vec<CheckResult> {
        let cmd = Command::Preservation;
        let max_steps = self.scenario.budgets.max_steps;
        let run = |this: &mut Self| -> Result<CheckResult> {
            let report = match &this.scenario.world {
                World::Diagrams(c) => {
                    let p = this.scenario.downstairs.as_ref().ok_or_else(|| {
                        Error::HypothesisViolated("the diagonal check needs a downstairs polynomial".into())
                    })?;
                    check_preservation_delta(c, p, max_steps)?
                }
                World::Gluing(_) => {
                    let (data, wt) = this.ensure_pipeline()?;
                    let base = &data.poly().base;
                    let keep = base.carrier.total().filter(|i| base.carrier.over(i) == &Value::atom("1"));
                    check_preservation_restrict(data, wt, &keep, "first projection", max_steps)?
                }
                World::Finset => {
                    let (data, wt) = this.ensure_pipeline()?;
                    let all = data.poly().base.carrier.total().clone();
                    check_preservation_restrict(data, wt, &all, "identity", max_steps)?
                }
            };
            Ok(simple(
                cmd,
                &report.functor,
                report.passed(),
                json!({
                    "source_sizes": report.source_sizes,
                    "target_sizes": report.target_sizes,
                    "morphisms": report.comparison.morphisms,
                }),
                report.comparison.witness.clone(),
            ))
        };
        vec![run(self).unwrap_or_else(|e| error_result(cmd, "comparison", &e))]
    }

    fn lemma_checks(&mut self) -> Vec<CheckResult> {
        let cmd = Command::LemmaChecks;
        let mut out = Vec::new();
        let sampled = self.sampled();
        let seed = self.scenario.budgets.sample_seed;
        let touched = |this: &mut Self| -> Result<Vec<CheckResult>> {
            let (data, wt) = this.ensure_pipeline()?.clone();
            let mut res = Vec::new();
            // the top square of the proof: PW ⊂ P0 W ⇉ P1 W over P0 W0 ⇉ P1 W0
            let w = &wt.algebra.carrier;
            let (lw, l0) = (data.level(w)?, data.level(&wt.w0_coalgebra)?);
            let under = Hom::new(w.carrier.clone(), wt.w0_coalgebra.carrier.clone(), wt.incl.map.clone())?;
            let p0i = data.q0.fmap_between(&under, &lw.p0.carrier, &l0.p0.carrier)?.map;
            let p1i = data.q1.fmap_between(&under, &lw.p1.carrier, &l0.p1.carrier)?.map;
            let lemma = check_equalizer_mono_lemma(&lw.data.phi1, &lw.data.phi2, &l0.data.phi1, &l0.data.phi2, &p0i, &p1i)?;
            res.push(law_result(cmd, "equalizer-pullback", &lemma));
            let least = least_subalgebra(&wt.algebra)?;
            let closure = least.src.carrier.total().clone();
            match enumerate_subalgebras(&wt.algebra) {
                Ok(subs) => {
                    let minimum = subs.iter().min_by_key(|s| s.len()).cloned().unwrap_or_default();
                    let ok = subs.iter().all(|s| closure.is_subset(s)) && minimum == closure;
                    res.push(simple(
                        cmd,
                        "least-subalgebra",
                        ok,
                        json!({ "subalgebras": subs.len(), "closure": closure.len() }),
                        (!ok).then(|| format!("closure {closure} vs minimum {minimum}")),
                    ));
                }
                Err(Error::BudgetExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
            Ok(res)
        };
        if self.poly().is_ok() {
            match touched(self) {
                Ok(rs) => out.extend(rs),
                Err(e) => out.push(error_result(cmd, "equalizer-pullback", &e)),
            }
        }
        if sampled || self.poly().is_err() {
            out.push(law_result(cmd, "equalizer-pullback-random", &random_lemma_diagrams(seed, 50)));
        }
        out
    }
}

/// The equalizer lemma on random diagrams satisfying its hypotheses, with
/// sets of at most four elements.
pub fn random_lemma_diagrams(seed: u64, n: usize) -> LawReport {
    let mut rng = sample::rng(seed);
    let mut report = LawReport::default();
    for k in 0..n {
        let y = sample::atoms(&format!("y{k}_"), rng.gen_range(0..=4));
        let b = sample::atoms(&format!("b{k}_"), rng.gen_range(1..=4));
        let c = sample::atoms(&format!("c{k}_"), rng.gen_range(1..=4));
        let p = sample::map(&mut rng, &y, &b).expect("b is nonempty");
        let f = sample::map(&mut rng, &b, &c).expect("c is nonempty");
        let g = sample::map(&mut rng, &b, &c).expect("c is nonempty");
        let widen = rng.gen_bool(0.5);
        let run = || -> Result<LawReport> {
            let (fp, gp) = (f.after(&p)?, g.after(&p)?);
            // Z is the image of fp and gp, plus up to one extra point
            let mut z = fp.image().union(&gp.image());
            if let Some(extra) = c.iter().find(|x| !z.contains(x)) {
                if widen {
                    z = z.union(&FinSet::singleton(extra.clone()));
                }
            }
            let q = FinFn::inclusion(&z, &c)?;
            check_equalizer_mono_lemma(&fp.corestrict(&z)?, &gp.corestrict(&z)?, &f, &g, &p, &q)
        };
        match run() {
            Ok(r) => report.merge(r),
            Err(e) => report.fail("lemma diagram", e),
        }
    }
    report
}

/// Runs every command of the scenario in order under its element budget.
/// Command failures are recorded in the report; later commands still run.
pub fn run(scenario: &Scenario, options: &RunOptions) -> Report {
    budget::with_limit(scenario.budgets.element_budget, || {
        let mut runner = Runner { scenario, options, pipeline: None };
        let mut checks = Vec::new();
        for &command in &scenario.commands {
            let start = Instant::now();
            let mut results = match command {
                Command::Validate => runner.validate(),
                Command::Wtype => runner.wtype(),
                Command::CrossCheck => runner.cross_check(),
                Command::Characterize => runner.characterize(),
                Command::Preservation => runner.preservation(),
                Command::LemmaChecks => runner.lemma_checks(),
            };
            if options.timings {
                let ms = start.elapsed().as_millis() as u64;
                for r in &mut results {
                    r.millis = Some(ms);
                }
            }
            checks.extend(results);
        }
        Report {
            schema: REPORT_SCHEMA.into(),
            scenario: scenario.name.clone(),
            world: scenario.world.name().into(),
            budgets: scenario.budgets,
            check_level: options.check_level,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    })
}
