//! Group presentations and word algebra.
//!
//! Words are strings over a symmetric alphabet; an inverse letter is written
//! as the uppercase of its generator (`A` is the inverse of `a`). Relator
//! families carry explicit finite parameter lists.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A single letter: a generator symbol together with an inverse marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gen {
    pub sym: char,
    pub inv: bool,
}

impl Gen {
    pub fn new(sym: char, inv: bool) -> Gen {
        Gen { sym, inv }
    }

    pub fn inverse(self) -> Gen {
        Gen {
            sym: self.sym,
            inv: !self.inv,
        }
    }

    pub fn from_char(c: char) -> Result<Gen> {
        if c.is_ascii_lowercase() {
            Ok(Gen::new(c, false))
        } else if c.is_ascii_uppercase() {
            Ok(Gen::new(c.to_ascii_lowercase(), true))
        } else {
            Err(Error::Parse(format!("not a generator letter: '{c}'")))
        }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inv {
            write!(f, "{}", self.sym.to_ascii_uppercase())
        } else {
            write!(f, "{}", self.sym)
        }
    }
}

/// A word over the symmetric alphabet. Not automatically reduced; call
/// [`Word::free_reduce`] or [`Word::cyclic_reduce`] as needed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<Gen>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parse a plain letter string such as `abAB`.
    pub fn parse(s: &str) -> Result<Word> {
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            letters.push(Gen::from_char(c)?);
        }
        Ok(Word(letters))
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|g| g.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, g: Gen) {
        self.0.push(g);
    }

    /// The unique freely reduced form: no adjacent cancelling pair remains.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<Gen> = Vec::with_capacity(self.0.len());
        for &g in &self.0 {
            if let Some(&last) = out.last() {
                if last == g.inverse() {
                    out.pop();
                    continue;
                }
            }
            out.push(g);
        }
        Word(out)
    }

    /// Freely reduce, then strip mutually inverse first/last letters.
    pub fn cyclic_reduce(&self) -> Word {
        let mut w = self.free_reduce().0;
        while w.len() >= 2 && w[0] == w[w.len() - 1].inverse() {
            w.pop();
            w.remove(0);
        }
        Word(w)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        let r = self.free_reduce();
        if r.0.len() != self.0.len() {
            return false;
        }
        match (r.0.first(), r.0.last()) {
            (Some(&f), Some(&l)) => f != l.inverse(),
            _ => true,
        }
    }

    /// Rotation by `k`: letters `k..` followed by `..k`.
    pub fn rotate(&self, k: usize) -> Word {
        let n = self.0.len();
        if n == 0 {
            return Word::empty();
        }
        let k = k % n;
        let mut v = self.0[k..].to_vec();
        v.extend_from_slice(&self.0[..k]);
        Word(v)
    }

    pub fn pow(&self, e: i64) -> Word {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut v = Vec::with_capacity(self.0.len() * e.unsigned_abs() as usize);
        for _ in 0..e.unsigned_abs() {
            v.extend_from_slice(&base.0);
        }
        Word(v)
    }

    pub fn uses_only(&self, alphabet: &[char]) -> bool {
        self.0.iter().all(|g| alphabet.contains(&g.sym))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for g in &self.0 {
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// A parametric relator template, e.g. `(a^nb^n)^7 for n in {4,16,256}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatorFamily {
    pub template: String,
    pub param: char,
    pub params: Vec<i64>,
}

impl RelatorFamily {
    pub fn expand(&self, alphabet: &[char]) -> Result<Vec<Word>> {
        self.params
            .iter()
            .map(|&n| {
                parse_word_expr(&self.template, alphabet, Some((self.param, n)))
                    .map(|w| w.cyclic_reduce())
            })
            .collect()
    }
}

/// A finite presentation: an ordered alphabet, explicit relators (stored
/// cyclically reduced) and parametric relator families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: Vec<char>,
    pub relators: Vec<Word>,
    pub families: Vec<RelatorFamily>,
}

impl Presentation {
    pub fn free(generators: &[char]) -> Presentation {
        Presentation {
            generators: generators.to_vec(),
            relators: Vec::new(),
            families: Vec::new(),
        }
    }

    /// Explicit relators plus every expanded family member.
    pub fn all_relators(&self) -> Result<Vec<Word>> {
        let mut out = self.relators.clone();
        for fam in &self.families {
            out.extend(fam.expand(&self.generators)?);
        }
        Ok(out)
    }

    /// Render in the line-oriented text format accepted by [`parse_presentation`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("generators:");
        for g in &self.generators {
            s.push(' ');
            s.push(*g);
        }
        s.push('\n');
        if !self.relators.is_empty() {
            s.push_str("relators:");
            for r in &self.relators {
                s.push(' ');
                s.push_str(&r.to_string());
            }
            s.push('\n');
        }
        for fam in &self.families {
            s.push_str(&format!(
                "family: {} for {} in {{{}}}\n",
                fam.template,
                fam.param,
                fam.params
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }
        s
    }
}

/// Parse the line-oriented presentation format:
///
/// ```text
/// generators: a b
/// relators: abAB
/// family: (a^nb^n)^7 for n in {4,16,256}
/// ```
pub fn parse_presentation(text: &str) -> Result<Presentation> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty presentation".into()))?;
    let gens_part = first
        .strip_prefix("generators:")
        .ok_or_else(|| Error::Parse("first line must start with 'generators:'".into()))?;
    let mut generators = Vec::new();
    for tok in gens_part.split_whitespace() {
        let mut chars = tok.chars();
        let c = chars.next().unwrap();
        if chars.next().is_some() || !c.is_ascii_lowercase() {
            return Err(Error::Parse(format!(
                "generator must be a single lowercase letter, got '{tok}'"
            )));
        }
        if generators.contains(&c) {
            return Err(Error::Parse(format!("duplicate generator '{c}'")));
        }
        generators.push(c);
    }
    if generators.is_empty() {
        return Err(Error::Parse("empty generator list".into()));
    }

    let mut relators = Vec::new();
    let mut families = Vec::new();
    for line in lines {
        if let Some(rest) = line.strip_prefix("relators:") {
            for tok in rest.split_whitespace() {
                let w = parse_word_expr(tok, &generators, None)?;
                relators.push(w.cyclic_reduce());
            }
        } else if let Some(rest) = line.strip_prefix("family:") {
            families.push(parse_family(rest, &generators)?);
        } else {
            return Err(Error::Parse(format!("unrecognized line: '{line}'")));
        }
    }

    Ok(Presentation {
        generators,
        relators,
        families,
    })
}

fn parse_family(rest: &str, alphabet: &[char]) -> Result<RelatorFamily> {
    // "<template> for <p> in {n1,n2,...}"
    let (template, tail) = rest
        .trim()
        .split_once(" for ")
        .ok_or_else(|| Error::Parse("family line missing ' for '".into()))?;
    let (pname, set) = tail
        .trim()
        .split_once(" in ")
        .ok_or_else(|| Error::Parse("family line missing ' in '".into()))?;
    let pname = pname.trim();
    if pname.len() != 1 {
        return Err(Error::Parse(format!(
            "family parameter must be a single letter, got '{pname}'"
        )));
    }
    let param = pname.chars().next().unwrap();
    if alphabet.contains(&param) {
        return Err(Error::Parse(format!(
            "family parameter '{param}' collides with a generator"
        )));
    }
    let set = set.trim();
    let inner = set
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::Parse("parameter set must be {n1,n2,...}".into()))?;
    let mut params = Vec::new();
    for tok in inner.split(',') {
        let n: i64 = tok
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("malformed exponent '{}'", tok.trim())))?;
        params.push(n);
    }
    if params.is_empty() {
        return Err(Error::Parse("empty parameter set".into()));
    }
    let fam = RelatorFamily {
        template: template.trim().to_string(),
        param,
        params,
    };
    // Validate the template now against every declared parameter.
    fam.expand(alphabet)?;
    Ok(fam)
}

/// Parse a word expression: letters, `^` exponents (possibly negative or the
/// family parameter), parentheses and the commutator shorthand `[x,y]` which
/// expands to `x y x^-1 y^-1`. The whole input must be consumed.
pub fn parse_word_expr(s: &str, alphabet: &[char], param: Option<(char, i64)>) -> Result<Word> {
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0usize;
    let w = parse_seq(&chars, &mut pos, alphabet, param)?;
    if pos != chars.len() {
        return Err(Error::Parse(format!(
            "trailing garbage at position {pos} in '{s}'"
        )));
    }
    Ok(w.free_reduce())
}

fn parse_seq(
    chars: &[char],
    pos: &mut usize,
    alphabet: &[char],
    param: Option<(char, i64)>,
) -> Result<Word> {
    let mut out = Word::empty();
    while *pos < chars.len() {
        let c = chars[*pos];
        if c == ')' || c == ']' || c == ',' {
            break;
        }
        let atom = parse_atom(chars, pos, alphabet, param)?;
        let exp = parse_exponent(chars, pos, param)?;
        out = out.concat(&atom.pow(exp));
    }
    Ok(out)
}

fn parse_atom(
    chars: &[char],
    pos: &mut usize,
    alphabet: &[char],
    param: Option<(char, i64)>,
) -> Result<Word> {
    let c = chars[*pos];
    if c == '(' {
        *pos += 1;
        let inner = parse_seq(chars, pos, alphabet, param)?;
        if *pos >= chars.len() || chars[*pos] != ')' {
            return Err(Error::Parse("unbalanced '('".into()));
        }
        *pos += 1;
        Ok(inner)
    } else if c == '[' {
        *pos += 1;
        let x = parse_seq(chars, pos, alphabet, param)?;
        if *pos >= chars.len() || chars[*pos] != ',' {
            return Err(Error::Parse("commutator needs ','".into()));
        }
        *pos += 1;
        let y = parse_seq(chars, pos, alphabet, param)?;
        if *pos >= chars.len() || chars[*pos] != ']' {
            return Err(Error::Parse("unbalanced '['".into()));
        }
        *pos += 1;
        Ok(x.concat(&y).concat(&x.inverse()).concat(&y.inverse()))
    } else {
        let g = Gen::from_char(c)?;
        if !alphabet.contains(&g.sym) {
            return Err(Error::UndeclaredGenerator(g.sym));
        }
        *pos += 1;
        Ok(Word(vec![g]))
    }
}

fn parse_exponent(chars: &[char], pos: &mut usize, param: Option<(char, i64)>) -> Result<i64> {
    if *pos >= chars.len() || chars[*pos] != '^' {
        return Ok(1);
    }
    *pos += 1;
    if *pos >= chars.len() {
        return Err(Error::Parse("dangling '^'".into()));
    }
    if let Some((p, v)) = param {
        if chars[*pos] == p {
            *pos += 1;
            return Ok(v);
        }
    }
    let neg = if chars[*pos] == '-' {
        *pos += 1;
        true
    } else {
        false
    };
    let start = *pos;
    while *pos < chars.len() && chars[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse("malformed exponent".into()));
    }
    let digits: String = chars[start..*pos].iter().collect();
    let n: i64 = digits
        .parse()
        .map_err(|_| Error::Parse(format!("malformed exponent '{digits}'")))?;
    Ok(if neg { -n } else { n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn free_reduce_cases() {
        assert_eq!(w("aA").free_reduce(), Word::empty());
        assert_eq!(w("abBa").free_reduce(), w("aa"));
        assert_eq!(w("abA").free_reduce(), w("abA"));
    }

    #[test]
    fn cyclic_reduce_cases() {
        assert_eq!(w("abA").cyclic_reduce(), w("b"));
        assert_eq!(w("baBA").cyclic_reduce(), w("baBA"));
        assert_eq!(Word::empty().cyclic_reduce(), Word::empty());
    }

    #[test]
    fn parse_free_group() {
        let p = parse_presentation("generators: a b\nrelators:").unwrap();
        assert_eq!(p.generators, vec!['a', 'b']);
        assert!(p.all_relators().unwrap().is_empty());
    }

    #[test]
    fn parse_commutator() {
        let p = parse_presentation("generators: a b\nrelators: [a,b]").unwrap();
        assert_eq!(p.relators, vec![w("abAB")]);
    }

    #[test]
    fn parse_family_lengths() {
        let p =
            parse_presentation("generators: a b\nfamily: (a^nb^n)^7 for n in {4,16,256}").unwrap();
        let rels = p.all_relators().unwrap();
        let lens: Vec<usize> = rels.iter().map(Word::len).collect();
        assert_eq!(lens, vec![56, 224, 3584]);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_presentation("generators: a\nrelators: abc").is_err());
        assert!(parse_presentation("generators:\nrelators:").is_err());
        assert!(parse_word_expr("a^", &['a'], None).is_err());
        assert!(parse_word_expr("a)b", &['a', 'b'], None).is_err());
    }

    #[test]
    fn round_trip() {
        let src = "generators: a b\nrelators: abAB\nfamily: (a^nb^n)^7 for n in {4,16}\n";
        let p = parse_presentation(src).unwrap();
        let p2 = parse_presentation(&p.to_text()).unwrap();
        assert_eq!(p, p2);
    }
}
