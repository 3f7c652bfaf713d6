//! Name-keyed registries of interchangeable strategies.
//!
//! Restoration components (regularizers, data-term estimators, whole-channel
//! reconstructors) are trait objects looked up by the names that appear in
//! configuration files and on the command line.

use std::fmt;

use crate::error::{Error, Result};

type Factory<T> = Box<dyn Fn() -> Box<T> + Send + Sync>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(String, Factory<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: Vec::new(),
        }
    }

    /// Register a factory; a later registration under the same name wins.
    pub fn register<F>(&mut self, name: impl Into<String>, factory: F) -> &mut Self
    where
        F: Fn() -> Box<T> + Send + Sync + 'static,
    {
        let name = name.into();
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, Box::new(factory)));
        self
    }

    pub fn create(&self, name: &str) -> Result<Box<T>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }
}

impl<T: ?Sized> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.names())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Fixed(&'static str);

    impl Greeter for Fixed {
        fn greet(&self) -> String {
            self.0.to_string()
        }
    }

    #[test]
    fn lookup_and_override() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("a", || Box::new(Fixed("one")));
        reg.register("b", || Box::new(Fixed("two")));
        assert_eq!(reg.create("b").unwrap().greet(), "two");
        reg.register("b", || Box::new(Fixed("three")));
        assert_eq!(reg.create("b").unwrap().greet(), "three");
        assert_eq!(reg.names(), vec!["a", "b"]);
        match reg.create("c") {
            Err(Error::UnknownStrategy { kind, name }) => {
                assert_eq!(kind, "greeter");
                assert_eq!(name, "c");
            }
            _ => panic!("expected unknown strategy"),
        }
    }
}
