//! Letters, words and the alphabets they are drawn from.
//!
//! Letter names are either a single character (`a`, `B`) or a parenthesized
//! token such as `(ab)`, which stands for one letter of the alphabet.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a letter inside an [`Alphabet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter(pub u16);

impl Letter {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type Word = Vec<Letter>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    names: Vec<String>,
    lookup: HashMap<String, Letter>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Alphabet {
            names: Vec::new(),
            lookup: HashMap::new(),
        };
        for name in names {
            let name = name.into();
            if out.lookup.contains_key(&name) {
                return Err(Error::DuplicateLetter(name));
            }
            if !is_valid_name(&name) {
                return Err(Error::InvalidArgument(format!("bad letter name {name:?}")));
            }
            out.lookup.insert(name.clone(), Letter(out.names.len() as u16));
            out.names.push(name);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.names.len()).map(|i| Letter(i as u16))
    }

    pub fn name(&self, letter: Letter) -> &str {
        &self.names[letter.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn letter(&self, name: &str) -> Result<Letter> {
        self.lookup
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownLetter(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup.contains_key(name)
    }

    /// Splits `text` into letter tokens and resolves them.
    pub fn parse(&self, text: &str) -> Result<Word> {
        tokenize(text)?.iter().map(|t| self.letter(t)).collect()
    }

    pub fn format(&self, word: &[Letter]) -> String {
        word.iter().map(|&l| self.name(l)).collect()
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Alphabet::new(names)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.names
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names.join(","))
    }
}

fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        None => false,
        Some('(') => name.len() > 2 && name.ends_with(')') && !name[1..name.len() - 1].contains(['(', ')']),
        Some(c) => chars.next().is_none() && c != ')' && !c.is_whitespace(),
    }
}

/// Splits a word string into letter names: `(ab)` is one token, anything else
/// is one character per token. Whitespace is ignored.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if c == '(' {
            let mut token = String::from("(");
            loop {
                match chars.next() {
                    Some(')') => {
                        token.push(')');
                        break;
                    }
                    Some(d) => token.push(d),
                    None => return Err(Error::UnknownLetter(token)),
                }
            }
            out.push(token);
        } else {
            out.push(c.to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_compound_letters() {
        let a = Alphabet::new(["a", "A", "b", "B", "(ab)", "(BA)"]).unwrap();
        let w = a.parse("a(ab)B(BA)").unwrap();
        assert_eq!(w, vec![Letter(0), Letter(4), Letter(3), Letter(5)]);
        assert_eq!(a.format(&w), "a(ab)B(BA)");
        assert!(a.parse("c").is_err());
        assert!(a.parse("(ab").is_err());
    }

    #[test]
    fn rejects_duplicates() {
        assert!(matches!(Alphabet::new(["a", "a"]), Err(Error::DuplicateLetter(_))));
    }

    #[test]
    fn serde_as_list() {
        let a = Alphabet::new(["s", "t", "T"]).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"["s","t","T"]"#);
        let back: Alphabet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
