use std::fmt;
use std::sync::Arc;

use crate::kernel::KernelError;
use crate::Scalar;

/// Index of a variable within a [`Schema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Ordered, duplicate-free list of state variable names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    names: Vec<String>,
}

impl Schema {
    pub fn new<I, N>(names: I) -> Result<Self, KernelError>
    where
        I: IntoIterator<Item = N>,
        N: Into<String>,
    {
        let mut out: Vec<String> = Vec::new();
        for name in names {
            let name = name.into();
            if out.contains(&name) {
                return Err(KernelError::DuplicateVariable(name));
            }
            out.push(name);
        }
        Ok(Self { names: out })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.names[id.0]
    }

    pub fn id(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(VarId)
    }

    /// Like [`Schema::id`] but reports the valid names when `name` is unknown.
    pub fn require(&self, name: &str) -> Result<VarId, KernelError> {
        self.id(name).ok_or_else(|| KernelError::UnknownVariable {
            name: name.to_string(),
            valid: self.names.clone(),
        })
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.names.len()).map(VarId)
    }
}

/// State of a model at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<S> {
    t: u64,
    schema: Arc<Schema>,
    values: Vec<S>,
}

impl<S: Scalar> SimState<S> {
    pub fn new(schema: Arc<Schema>, t: u64, values: Vec<S>) -> Result<Self, KernelError> {
        if values.len() != schema.len() {
            return Err(KernelError::WidthMismatch {
                expected: schema.len(),
                actual: values.len(),
            });
        }
        Ok(Self { t, schema, values })
    }

    /// Builds a state with its own schema from `(name, value)` pairs, in order.
    pub fn from_pairs<'a, I>(t: u64, pairs: I) -> Result<Self, KernelError>
    where
        I: IntoIterator<Item = (&'a str, S)>,
    {
        let (names, values): (Vec<&str>, Vec<S>) = pairs.into_iter().unzip();
        let schema = Arc::new(Schema::new(names)?);
        Ok(Self { t, schema, values })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn value(&self, id: VarId) -> S {
        self.values[id.0]
    }

    pub fn get(&self, name: &str) -> Option<S> {
        self.schema.id(name).map(|id| self.values[id.0])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, S)> + '_ {
        self.schema
            .names()
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }

    /// Reorders this state onto `target`. Every target variable must be
    /// present and no extra variable may be.
    pub fn conform(&self, target: &Arc<Schema>) -> Result<Self, KernelError> {
        if Arc::ptr_eq(&self.schema, target) || *self.schema == **target {
            return Ok(Self {
                t: self.t,
                schema: Arc::clone(target),
                values: self.values.clone(),
            });
        }
        if let Some(extra) = self.schema.names().iter().find(|n| target.id(n).is_none()) {
            return Err(KernelError::UnexpectedVariable(extra.clone()));
        }
        let values = target
            .names()
            .iter()
            .map(|n| {
                self.get(n)
                    .ok_or_else(|| KernelError::MissingVariable(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            t: self.t,
            schema: Arc::clone(target),
            values,
        })
    }
}

impl<S: Scalar> fmt::Display for SimState<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={}", self.t)?;
        for (name, v) in self.iter() {
            write!(f, " {name}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        assert_eq!(
            Schema::new(["A", "U", "A"]),
            Err(KernelError::DuplicateVariable("A".into()))
        );
    }

    #[test]
    fn conform_reorders_and_reports_missing() {
        let target = Arc::new(Schema::new(["A", "U"]).unwrap());
        let s = SimState::from_pairs(3, [("U", 2.0), ("A", 1.0)]).unwrap();
        let c = s.conform(&target).unwrap();
        assert_eq!(c.values(), &[1.0, 2.0]);
        assert_eq!(c.t(), 3);

        let partial = SimState::from_pairs(0, [("A", 1.0)]).unwrap();
        assert_eq!(
            partial.conform(&target),
            Err(KernelError::MissingVariable("U".into()))
        );
        let extra = SimState::from_pairs(0, [("A", 1.0), ("U", 1.0), ("X", 0.0)]).unwrap();
        assert_eq!(
            extra.conform(&target),
            Err(KernelError::UnexpectedVariable("X".into()))
        );
    }

    #[test]
    fn unknown_variable_lists_valid_names() {
        let schema = Schema::new(["A", "U"]).unwrap();
        let err = schema.require("Q").unwrap_err();
        assert_eq!(err.to_string(), "unknown variable `Q`; valid names: A, U");
    }
}
