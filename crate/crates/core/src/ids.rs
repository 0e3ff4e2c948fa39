//! Identifier newtypes.
//!
//! Ids order "naturally": `T2` sorts before `T10`. Every "lowest id first"
//! tie-break in the engine goes through this ordering.

use std::cmp::Ordering;
use std::fmt;

fn split_numeric_suffix(s: &str) -> (&str, Option<u64>) {
    let digits = s.bytes().rev().take_while(u8::is_ascii_digit).count();
    if digits == 0 || digits > 18 {
        return (s, None);
    }
    let (head, tail) = s.split_at(s.len() - digits);
    (head, tail.parse().ok())
}

pub(crate) fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (ha, na) = split_numeric_suffix(a);
    let (hb, nb) = split_numeric_suffix(b);
    ha.cmp(hb).then(na.cmp(&nb)).then_with(|| a.cmp(b))
}

macro_rules! natural_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl Ord for $name {
            fn cmp(&self, other: &Self) -> Ordering {
                natural_cmp(&self.0, &other.0)
            }
        }

        impl PartialOrd for $name {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

natural_id!(
    /// Identifier of a task.
    TaskId
);
natural_id!(
    /// Identifier of an agent.
    AgentId
);
natural_id!(
    /// Label of a coalition structure, e.g. `E3`.
    StructureId
);
