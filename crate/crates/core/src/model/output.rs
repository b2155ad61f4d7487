use std::fmt;

use serde::{Deserialize, Serialize};

/// An output value: a natural number or a tuple of output values.
///
/// Serialized as a JSON number or a JSON array.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Output {
    Int(u64),
    Tuple(Vec<Output>),
}

impl Output {
    pub fn pair(a: impl Into<Output>, b: impl Into<Output>) -> Self {
        Output::Tuple(vec![a.into(), b.into()])
    }

    pub fn as_int(&self) -> Option<u64> {
        match self {
            Output::Int(v) => Some(*v),
            Output::Tuple(_) => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Output]> {
        match self {
            Output::Int(_) => None,
            Output::Tuple(items) => Some(items),
        }
    }

    /// Flattens `depth` levels of left nesting: `((a, b), c)` with depth 2
    /// becomes `(a, b, c)`. Elements that are themselves tuples are kept.
    pub fn flatten_left(&self, depth: usize) -> Output {
        if depth == 0 {
            return self.clone();
        }
        Output::Tuple(self.flatten_into(depth))
    }

    fn flatten_into(&self, depth: usize) -> Vec<Output> {
        match self {
            Output::Tuple(items) if depth > 0 && items.len() == 2 => {
                let mut head = items[0].flatten_into(depth - 1);
                head.push(items[1].clone());
                head
            }
            other => vec![other.clone()],
        }
    }
}

impl From<u64> for Output {
    fn from(v: u64) -> Self {
        Output::Int(v)
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Int(v) => write!(f, "{v}"),
            Output::Tuple(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}
