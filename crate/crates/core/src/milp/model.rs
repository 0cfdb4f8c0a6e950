//! Solver-agnostic MILP container.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Variable families, declared in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum VarClass {
    Routing,
    Acceptance,
    Arrival,
    Slack,
    ArrivalSum,
    ViolationSum,
    AgentDuration,
    MissionDuration,
    PassengerLoad,
    EquipmentLoad,
    Soc,
    ChargeTime,
    SegmentDone,
    /// Variables of hand-built models not tied to the routing formulation.
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Domain {
    Continuous,
    Integer,
    Binary,
}

impl Domain {
    pub fn is_integral(self) -> bool {
        !matches!(self, Domain::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub class: VarClass,
    pub index: Vec<usize>,
    pub lower: f64,
    pub upper: f64,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// Constraint family. Numeric tags 2 to 42 number the families of the base
/// formulation in order; the named ones belong to the model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Eq(u8),
    FixY,
    Hub,
    Omega,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Eq(n) => write!(f, "{n}"),
            Tag::FixY => f.write_str("fix-y"),
            Tag::Hub => f.write_str("hub"),
            Tag::Omega => f.write_str("omega"),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Tag {
    pub fn is_known(&self) -> bool {
        match self {
            Tag::Eq(n) => (2..=42).contains(n),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub tag: Tag,
    pub index: Vec<usize>,
    /// Sorted by variable, no duplicates.
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(tag: Tag, index: Vec<usize>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { tag, index, terms: normalize(terms), sense, rhs }
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

fn normalize(mut terms: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    for (v, a) in terms {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += a,
            _ => out.push((v, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FamilyStats {
    /// Distinct index tuples, i.e. instances of the quantified constraint.
    pub groups: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelStats {
    pub variables: usize,
    pub binaries: usize,
    pub integers: usize,
    pub x_count: usize,
    pub constraints: usize,
    pub families: BTreeMap<String, FamilyStats>,
}

impl ModelStats {
    pub fn groups(&self, tag: Tag) -> usize {
        self.families.get(&tag.to_string()).map_or(0, |f| f.groups)
    }
}

/// A minimization MILP: variables with bounds and domains, linear rows, and a
/// linear objective with a constant offset.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarId, f64)>,
    objective_constant: f64,
    pub warnings: Vec<String>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        class: VarClass,
        index: Vec<usize>,
        lower: f64,
        upper: f64,
        domain: Domain,
    ) -> VarId {
        let name = name.into();
        let id = VarId(self.variables.len());
        let prev = self.by_name.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate variable name {name}");
        self.variables.push(Variable { name, class, index, lower, upper, domain });
        id
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        debug_assert!(c.terms.iter().all(|t| t.0 .0 < self.variables.len()));
        self.constraints.push(c);
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>, constant: f64) {
        self.objective = normalize(terms);
        self.objective_constant = constant;
    }

    /// Orders rows by tag, keeping emission order inside a family.
    pub fn sort_constraints(&mut self) {
        self.constraints.sort_by_key(|c| c.tag);
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(v, a)| a * values[v.0]).sum::<f64>()
    }

    pub fn stats(&self) -> ModelStats {
        let mut families: BTreeMap<Tag, (std::collections::BTreeSet<&[usize]>, usize)> = BTreeMap::new();
        for c in &self.constraints {
            let e = families.entry(c.tag).or_default();
            e.0.insert(&c.index);
            e.1 += 1;
        }
        ModelStats {
            variables: self.variables.len(),
            binaries: self.variables.iter().filter(|v| v.domain == Domain::Binary).count(),
            integers: self.variables.iter().filter(|v| v.domain == Domain::Integer).count(),
            x_count: self.variables.iter().filter(|v| v.class == VarClass::Routing).count(),
            constraints: self.constraints.len(),
            families: families
                .into_iter()
                .map(|(t, (g, rows))| (t.to_string(), FamilyStats { groups: g.len(), rows }))
                .collect(),
        }
    }

    /// Rows violated by more than `tol`, with their violation.
    pub fn violated_rows(&self, values: &[f64], tol: f64) -> Vec<(usize, f64)> {
        self.constraints
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let v = c.violation(values);
                (v > tol).then_some((i, v))
            })
            .collect()
    }

    /// Variables whose bounds or integrality `values` violate by more than `tol`.
    pub fn violated_bounds(&self, values: &[f64], tol: f64) -> Vec<VarId> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(i, v)| {
                let x = values[*i];
                x < v.lower - tol || x > v.upper + tol || (v.domain.is_integral() && (x - x.round()).abs() > tol)
            })
            .map(|(i, _)| VarId(i))
            .collect()
    }
}
