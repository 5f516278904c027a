//! Data model: schemas, instances, data examples, conjunctive queries and
//! labeled example collections.
//!
//! A conjunctive query is stored as its canonical example: the body atoms
//! are facts over variable-values and the head is the distinguished tuple.
//! Every structural operation on queries is therefore an operation on data
//! examples, and the homomorphism engine treats both uniformly.

mod construct;
pub mod json;
mod parse;
mod serialize;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use construct::{
    canonical_cq, canonical_example, conjunction, direct_product, maximally_constrained,
    minimally_constrained_set, normalize_head, product_all, quotient, HeadNormalization,
};
pub(crate) use construct::conjoin_examples;
pub use parse::{parse_cq, parse_cq_with_schema, parse_example, parse_instance, parse_labeled};
pub use serialize::{serialize_cq, serialize_example, serialize_instance, serialize_labeled};

/// Interned relation, value and variable names.
pub type Name = Arc<str>;

/// A relational signature: relation names with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Schema {
    relations: BTreeMap<Name, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a relation, rejecting arity 0 and conflicting redeclarations.
    pub fn insert(&mut self, name: &str, arity: usize) -> Result<()> {
        if arity == 0 {
            return Err(Error::NullaryRelation(name.to_string()));
        }
        match self.relations.get(name) {
            Some(&a) if a != arity => Err(Error::ArityMismatch(format!(
                "relation `{name}` used with arity {arity} and {a}"
            ))),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(Name::from(name), arity);
                Ok(())
            }
        }
    }

    pub fn with(mut self, name: &str, arity: usize) -> Result<Self> {
        self.insert(name, arity)?;
        Ok(self)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, usize)> + '_ {
        self.relations.iter().map(|(n, a)| (n, *a))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn max_arity(&self) -> usize {
        self.relations.values().copied().max().unwrap_or(0)
    }

    pub fn merge(&self, other: &Schema) -> Result<Schema> {
        let mut out = self.clone();
        for (name, arity) in other.iter() {
            out.insert(name, arity)?;
        }
        Ok(out)
    }

    /// Parses `R/2, P/1` (commas, whitespace or newlines as separators).
    pub fn parse(text: &str) -> Result<Schema> {
        let mut schema = Schema::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = strip_comment(line);
            for token in line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
            {
                let (name, arity) = token.split_once('/').ok_or_else(|| {
                    Error::syntax(lineno + 1, format!("expected `Name/arity`, got `{token}`"))
                })?;
                if !parse::is_identifier(name) {
                    return Err(Error::syntax(lineno + 1, format!("bad relation name `{name}`")));
                }
                let arity: usize = arity
                    .parse()
                    .map_err(|_| Error::syntax(lineno + 1, format!("bad arity in `{token}`")))?;
                schema.insert(name, arity)?;
            }
        }
        Ok(schema)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(n, a)| format!("{n}/{a}")).collect();
        f.write_str(&parts.join(", "))
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find(['#', '%']) {
        Some(i) => &line[..i],
        None => line,
    }
}

/// A fact `R(v1,…,vn)` over value indices of the owning instance.
///
/// The same type doubles as a query atom, with variables as values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub relation: Name,
    pub args: Vec<u32>,
}

pub type Atom = Fact;

/// A finite set of facts. Values are identified by index into a name table.
///
/// The table may hold values that occur in no fact; this happens for
/// distinguished values of products and quotients and is what makes a
/// product-derived query unsafe.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    values: Vec<Name>,
    facts: Vec<Fact>,
}

impl Instance {
    pub fn builder() -> InstanceBuilder {
        InstanceBuilder::default()
    }

    /// Builds an instance from raw parts; facts are sorted and deduplicated.
    pub(crate) fn from_parts(values: Vec<Name>, mut facts: Vec<Fact>) -> Instance {
        debug_assert!(facts
            .iter()
            .all(|f| f.args.iter().all(|&a| (a as usize) < values.len())));
        facts.sort();
        facts.dedup();
        Instance { values, facts }
    }

    pub fn values(&self) -> &[Name] {
        &self.values
    }

    pub fn value_name(&self, v: u32) -> &str {
        &self.values[v as usize]
    }

    pub fn num_values(&self) -> usize {
        self.values.len()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn value_index(&self, name: &str) -> Option<u32> {
        self.values.iter().position(|v| &**v == name).map(|i| i as u32)
    }

    /// Values occurring in at least one fact.
    pub fn adom(&self) -> BTreeSet<u32> {
        self.facts.iter().flat_map(|f| f.args.iter().copied()).collect()
    }

    pub fn contains_fact(&self, fact: &Fact) -> bool {
        self.facts.binary_search(fact).is_ok()
    }

    pub fn schema(&self) -> Schema {
        let mut s = Schema::new();
        for f in &self.facts {
            // arity consistency is enforced on construction
            let _ = s.insert(&f.relation, f.args.len());
        }
        s
    }
}

/// Incremental construction of an [`Instance`] by value names.
#[derive(Debug, Default)]
pub struct InstanceBuilder {
    values: Vec<Name>,
    index: HashMap<Name, u32>,
    facts: Vec<Fact>,
    schema: Schema,
}

impl InstanceBuilder {
    pub fn value(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.values.len() as u32;
        let name = Name::from(name);
        self.values.push(name.clone());
        self.index.insert(name, i);
        i
    }

    pub fn fact(&mut self, relation: &str, args: &[&str]) -> Result<&mut Self> {
        self.schema.insert(relation, args.len())?;
        let args = args.iter().map(|a| self.value(a)).collect();
        self.facts.push(Fact {
            relation: Name::from(relation),
            args,
        });
        Ok(self)
    }

    pub fn build(self) -> Instance {
        Instance::from_parts(self.values, self.facts)
    }
}

/// An instance with a distinguished tuple of values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DataExample {
    instance: Instance,
    tuple: Vec<u32>,
}

impl DataExample {
    pub fn new(instance: Instance, tuple: Vec<u32>) -> DataExample {
        assert!(tuple.iter().all(|&v| (v as usize) < instance.num_values()));
        DataExample { instance, tuple }
    }

    /// Builds an example whose tuple is given by value names. Every tuple
    /// value must occur in a fact.
    pub fn with_tuple(instance: Instance, tuple: &[&str]) -> Result<DataExample> {
        let mut ids = Vec::with_capacity(tuple.len());
        let adom = instance.adom();
        for name in tuple {
            match instance.value_index(name) {
                Some(i) if adom.contains(&i) => ids.push(i),
                _ => {
                    return Err(Error::SchemaMismatch(format!(
                        "distinguished value `{name}` does not occur in the instance"
                    )))
                }
            }
        }
        Ok(DataExample::new(instance, ids))
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn tuple(&self) -> &[u32] {
        &self.tuple
    }

    pub fn arity(&self) -> usize {
        self.tuple.len()
    }

    pub fn facts(&self) -> &[Fact] {
        self.instance.facts()
    }

    pub fn num_values(&self) -> usize {
        self.instance.num_values()
    }

    pub fn value_name(&self, v: u32) -> &str {
        self.instance.value_name(v)
    }

    pub fn tuple_names(&self) -> Vec<&str> {
        self.tuple.iter().map(|&v| self.value_name(v)).collect()
    }

    /// True iff every distinguished value occurs in some fact.
    pub fn is_safe(&self) -> bool {
        let adom = self.instance.adom();
        self.tuple.iter().all(|v| adom.contains(v))
    }

    /// Drops values that occur neither in facts nor in the tuple.
    pub fn compact(&self) -> DataExample {
        let mut keep: BTreeSet<u32> = self.instance.adom();
        keep.extend(self.tuple.iter().copied());
        if keep.len() == self.num_values() {
            return self.clone();
        }
        let mut remap = vec![u32::MAX; self.num_values()];
        let mut values = Vec::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            remap[old as usize] = new as u32;
            values.push(self.instance.values[old as usize].clone());
        }
        self.relabel(&remap, values)
    }

    /// Applies a value map (old index → new index) and a new name table.
    pub(crate) fn relabel(&self, map: &[u32], values: Vec<Name>) -> DataExample {
        let facts = self
            .facts()
            .iter()
            .map(|f| Fact {
                relation: f.relation.clone(),
                args: f.args.iter().map(|&a| map[a as usize]).collect(),
            })
            .collect();
        DataExample {
            instance: Instance::from_parts(values, facts),
            tuple: self.tuple.iter().map(|&a| map[a as usize]).collect(),
        }
    }

    /// The image of this example under a value map into itself: the
    /// subinstance of facts hit by the map, with the same tuple.
    pub(crate) fn image_under(&self, map: &[u32]) -> DataExample {
        let facts = self
            .facts()
            .iter()
            .map(|f| Fact {
                relation: f.relation.clone(),
                args: f.args.iter().map(|&a| map[a as usize]).collect(),
            })
            .collect();
        DataExample {
            instance: Instance::from_parts(self.instance.values.clone(), facts),
            tuple: self.tuple.clone(),
        }
        .compact()
    }

    pub fn schema(&self) -> Schema {
        self.instance.schema()
    }
}

/// A conjunctive query without constants, stored as its canonical example.
///
/// Invariants: the body is a set of atoms and every answer variable occurs
/// in it. The only query with an empty body is the Boolean query `q() :- .`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cq {
    body: DataExample,
}

impl Cq {
    /// Wraps a data example as a query, checking safety.
    pub fn from_example(example: DataExample) -> Result<Cq> {
        let example = example.compact();
        let adom = example.instance.adom();
        if let Some(&v) = example.tuple.iter().find(|v| !adom.contains(v)) {
            return Err(Error::SafetyViolation(example.value_name(v).to_string()));
        }
        Ok(Cq { body: example })
    }

    pub fn parse(text: &str) -> Result<Cq> {
        parse_cq(text)
    }

    /// The Boolean query with an empty body, true on every example.
    pub fn empty_boolean() -> Cq {
        Cq {
            body: DataExample::default(),
        }
    }

    pub fn canonical_example(&self) -> &DataExample {
        &self.body
    }

    pub fn into_example(self) -> DataExample {
        self.body
    }

    pub fn head(&self) -> &[u32] {
        self.body.tuple()
    }

    pub fn atoms(&self) -> &[Atom] {
        self.body.facts()
    }

    /// Number of distinct body atoms.
    pub fn size(&self) -> usize {
        self.body.facts().len()
    }

    pub fn arity(&self) -> usize {
        self.body.arity()
    }

    pub fn num_vars(&self) -> usize {
        self.body.num_values()
    }

    pub fn var_name(&self, v: u32) -> &str {
        self.body.value_name(v)
    }

    pub fn is_boolean(&self) -> bool {
        self.arity() == 0
    }

    pub fn has_repeated_head(&self) -> bool {
        let set: BTreeSet<u32> = self.head().iter().copied().collect();
        set.len() != self.head().len()
    }

    pub fn schema(&self) -> Schema {
        self.body.schema()
    }
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_cq(self))
    }
}

impl fmt::Display for DataExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_example(self))
    }
}

/// Positive and negative data examples of one common arity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledExampleSet {
    positives: Vec<DataExample>,
    negatives: Vec<DataExample>,
}

impl LabeledExampleSet {
    pub fn new(positives: Vec<DataExample>, negatives: Vec<DataExample>) -> Result<Self> {
        let set = LabeledExampleSet {
            positives,
            negatives,
        };
        let mut arity = None;
        for e in set.iter() {
            match arity {
                None => arity = Some(e.arity()),
                Some(a) if a != e.arity() => {
                    return Err(Error::ArityMismatch(format!(
                        "examples of arity {a} and {} in one collection",
                        e.arity()
                    )))
                }
                _ => {}
            }
        }
        set.schema()?;
        Ok(set)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn positives(&self) -> &[DataExample] {
        &self.positives
    }

    pub fn negatives(&self) -> &[DataExample] {
        &self.negatives
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }

    /// All examples, positives first.
    pub fn iter(&self) -> impl Iterator<Item = &DataExample> + '_ {
        self.positives.iter().chain(self.negatives.iter())
    }

    pub fn arity(&self) -> Option<usize> {
        self.iter().next().map(DataExample::arity)
    }

    pub fn schema(&self) -> Result<Schema> {
        let mut s = Schema::new();
        for e in self.iter() {
            s = s.merge(&e.schema())?;
        }
        Ok(s)
    }

    pub fn with_positive(&self, e: DataExample) -> Self {
        let mut out = self.clone();
        out.positives.push(e);
        out
    }

    pub fn only_positives(&self) -> Self {
        LabeledExampleSet {
            positives: self.positives.clone(),
            negatives: Vec::new(),
        }
    }

    pub fn only_negatives(&self) -> Self {
        LabeledExampleSet {
            positives: Vec::new(),
            negatives: self.negatives.clone(),
        }
    }

    pub(crate) fn check_arity(&self, k: usize) -> Result<()> {
        match self.arity() {
            Some(a) if a != k => Err(Error::ArityMismatch(format!(
                "query of arity {k} against examples of arity {a}"
            ))),
            _ => Ok(()),
        }
    }
}

/// A value-to-value map, indexed by source value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarMapping {
    entries: Vec<u32>,
}

impl VarMapping {
    pub fn new(entries: Vec<u32>) -> Self {
        VarMapping { entries }
    }

    pub fn get(&self, v: u32) -> u32 {
        self.entries[v as usize]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &VarMapping) -> VarMapping {
        VarMapping::new(self.entries.iter().map(|&v| next.get(v)).collect())
    }

    pub fn is_injective(&self) -> bool {
        let set: BTreeSet<u32> = self.entries.iter().copied().collect();
        set.len() == self.entries.len()
    }
}

/// Canonical variable names: `x, y, z, u, v, w`, then `x6, x7, …`.
pub fn var_name(i: usize) -> String {
    const BASE: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
    if i < BASE.len() {
        BASE[i].to_string()
    } else {
        format!("x{i}")
    }
}
