//! Reduced words in a free group of finite rank and endomorphisms acting on them.
//!
//! A letter is a nonzero signed generator index: generator `i` (0-based) is `i + 1`
//! and its inverse is `-(i + 1)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Letter = i32;

/// Generator index (0-based) of a letter.
#[inline]
pub fn gen_index(l: Letter) -> usize {
    (l.unsigned_abs() - 1) as usize
}

/// Total order on letters used for shortlex and canonical forms: `a < a^-1 < b < b^-1 < ...`.
#[inline]
pub fn letter_key(l: Letter) -> u32 {
    2 * (l.unsigned_abs() - 1) + u32::from(l < 0)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidAlphabet("rank must be at least 1".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(char::is_whitespace) || n.contains('^') {
                return Err(Error::InvalidAlphabet(format!("bad generator name `{n}`")));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidAlphabet(format!("duplicate generator `{n}`")));
            }
        }
        Ok(Alphabet { names })
    }

    /// Names `a, b, c, ...` for rank ≤ 26, otherwise `x1, x2, ...`.
    pub fn standard(rank: usize) -> Self {
        assert!(rank >= 1, "rank must be at least 1");
        let names = if rank <= 26 {
            (0..rank).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
        } else {
            (1..=rank).map(|i| format!("x{i}")).collect()
        };
        Alphabet { names }
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn letter(&self, name: &str) -> Result<Letter> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as Letter + 1)
            .ok_or_else(|| Error::UnknownLetter(name.to_string()))
    }

    /// Parses whitespace-separated tokens `x` or `x^-1` (also `x⁻¹`) into raw letters.
    pub fn parse_letters(&self, s: &str) -> Result<Vec<Letter>> {
        s.split_whitespace()
            .map(|tok| {
                if let Some(base) = tok.strip_suffix("^-1").or_else(|| tok.strip_suffix("⁻¹")) {
                    self.letter(base).map(|l| -l)
                } else {
                    self.letter(tok)
                }
            })
            .collect()
    }

    /// Parses and freely reduces.
    pub fn parse(&self, s: &str) -> Result<Word> {
        Ok(Word::reduce(&self.parse_letters(s)?))
    }

    pub fn format_letter(&self, l: Letter) -> String {
        let name = &self.names[gen_index(l)];
        if l > 0 {
            name.clone()
        } else {
            format!("{name}^-1")
        }
    }

    pub fn format(&self, w: &Word) -> String {
        w.letters()
            .iter()
            .map(|&l| self.format_letter(l))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Every letter of `w` names a generator of this alphabet.
    pub fn contains(&self, w: &Word) -> bool {
        w.letters().iter().all(|&l| gen_index(l) < self.rank())
    }
}

/// A freely reduced word. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<Letter>);

/// Free reduction of `letters`; zero letters are dropped.
pub fn reduce(letters: &[Letter]) -> Word {
    Word::reduce(letters)
}

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn reduce(letters: &[Letter]) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
        for &x in letters {
            if x == 0 {
                continue;
            }
            if out.last() == Some(&-x) {
                out.pop();
            } else {
                out.push(x);
            }
        }
        Word(out)
    }

    pub fn generator(i: usize) -> Self {
        Word(vec![i as Letter + 1])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|x| -x).collect())
    }

    pub fn mul(&self, other: &Word) -> Self {
        let mut out = self.0.clone();
        let mut j = 0;
        while j < other.0.len() && out.last() == Some(&-other.0[j]) {
            out.pop();
            j += 1;
        }
        out.extend_from_slice(&other.0[j..]);
        Word(out)
    }

    pub fn pow(&self, n: i64) -> Self {
        if n < 0 {
            return self.inverse().pow(-n);
        }
        let mut acc = Word::identity();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// `c · self · c⁻¹`.
    pub fn conjugate_by(&self, c: &Word) -> Self {
        c.mul(self).mul(&c.inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.0.len() < 2 || self.0[0] != -self.0[self.0.len() - 1]
    }

    /// Returns `(core, conjugator)` with `self = conjugator · core · conjugator⁻¹`
    /// and `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let n = self.0.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.0[k] == -self.0[n - 1 - k] {
            k += 1;
        }
        (Word(self.0[k..n - k].to_vec()), Word(self.0[..k].to_vec()))
    }

    /// Length of a cyclically reduced conjugate, `||g||`.
    pub fn cyclic_length(&self) -> usize {
        self.cyclic_reduce().0.len()
    }

    /// Rotation starting at position `i`; meaningful for cyclically reduced words.
    pub fn rotate(&self, i: usize) -> Self {
        if self.0.is_empty() {
            return Word::identity();
        }
        let i = i % self.0.len();
        let mut v = self.0[i..].to_vec();
        v.extend_from_slice(&self.0[..i]);
        Word(v)
    }

    /// Shortest `r` with `self = r^k`; `self` must be cyclically reduced.
    pub fn root(&self) -> (Word, usize) {
        let n = self.0.len();
        for p in 1..=n {
            if n.is_multiple_of(p) && (p..n).all(|i| self.0[i] == self.0[i - p]) {
                return (Word(self.0[..p].to_vec()), n / p);
            }
        }
        (Word::identity(), 0)
    }

    pub fn shortlex_cmp(&self, other: &Word) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.lex_cmp(other))
    }

    pub fn lex_cmp(&self, other: &Word) -> Ordering {
        let a = self.0.iter().map(|&l| letter_key(l));
        let b = other.0.iter().map(|&l| letter_key(l));
        a.cmp(b)
    }

    /// Lexicographically least cyclic rotation of the cyclic reduction.
    pub fn min_rotation(&self) -> Word {
        let (core, _) = self.cyclic_reduce();
        (0..core.len().max(1))
            .map(|i| core.rotate(i))
            .min_by(|x, y| x.lex_cmp(y))
            .unwrap_or_default()
    }

    /// Canonical representative of the conjugacy class of `self` or `self⁻¹`.
    pub fn canonical_cyclic(&self) -> Word {
        let a = self.min_rotation();
        let b = self.inverse().min_rotation();
        if b.lex_cmp(&a) == Ordering::Less {
            b
        } else {
            a
        }
    }

    /// Whether `self` and `other` are conjugate.
    pub fn is_conjugate(&self, other: &Word) -> bool {
        let (a, _) = self.cyclic_reduce();
        let (b, _) = other.cyclic_reduce();
        a.len() == b.len() && (a.is_empty() || (0..a.len()).any(|i| a.rotate(i) == b))
    }

    /// Subword `[i, j)`.
    pub fn slice(&self, i: usize, j: usize) -> Word {
        Word(self.0[i..j].to_vec())
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Word::reduce(&v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rank = self.0.iter().map(|&l| gen_index(l) + 1).max().unwrap_or(1);
        write!(f, "{}", Alphabet::standard(rank.max(1)).format(self))
    }
}

/// Finds `c` with `c · us[i] · c⁻¹ = vs[i]` for every `i`, preferring short solutions.
pub fn common_conjugator(us: &[Word], vs: &[Word]) -> Option<Word> {
    if us.len() != vs.len() {
        return None;
    }
    let pivot = us.iter().position(|u| !u.is_empty());
    let Some(p) = pivot else {
        return vs.iter().all(Word::is_empty).then(Word::identity);
    };
    let (uc, pu) = us[p].cyclic_reduce();
    let (vc, qv) = vs[p].cyclic_reduce();
    if uc.len() != vc.len() {
        return None;
    }
    // uc = x·y and vc = y·x gives x⁻¹·uc·x = vc.
    let i = (0..uc.len()).find(|&i| uc.rotate(i) == vc)?;
    let x = uc.slice(0, i);
    let d = x.inverse();
    let c0 = qv.mul(&d).mul(&pu.inverse());
    let (r, _) = uc.root();
    let z = r.conjugate_by(&pu);
    let bound = us.iter().chain(vs).map(Word::len).sum::<usize>() + c0.len() + 2 * r.len() + 2;
    let kmax = (bound / r.len().max(1)) as i64 + 2;
    let check = |c: &Word| us.iter().zip(vs).all(|(u, v)| &u.conjugate_by(c) == v);
    let mut best: Option<Word> = None;
    for k in 0..=kmax {
        for s in [k, -k] {
            let c = c0.mul(&z.pow(s));
            if check(&c) {
                let better = match &best {
                    None => true,
                    Some(b) => c.shortlex_cmp(b) == Ordering::Less,
                };
                if better {
                    best = Some(c);
                }
            }
            if k == 0 {
                break;
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endomorphism {
    alphabet: Alphabet,
    images: Vec<Word>,
}

impl Endomorphism {
    pub fn new(alphabet: Alphabet, images: Vec<Word>) -> Result<Self> {
        if images.len() != alphabet.rank() {
            return Err(Error::InvalidAlphabet(format!(
                "expected {} images, got {}",
                alphabet.rank(),
                images.len()
            )));
        }
        if let Some(w) = images.iter().find(|w| !alphabet.contains(w)) {
            return Err(Error::UnknownLetter(format!("{w:?}")));
        }
        let images = images.into_iter().map(|w| Word::reduce(w.letters())).collect();
        Ok(Endomorphism { alphabet, images })
    }

    /// Builds from image strings with a standard alphabet, e.g. `["b", "a b"]`.
    pub fn parse(images: &[&str]) -> Result<Self> {
        let alphabet = Alphabet::standard(images.len());
        let ws = images.iter().map(|s| alphabet.parse(s)).collect::<Result<Vec<_>>>()?;
        Endomorphism::new(alphabet, ws)
    }

    pub fn identity(alphabet: Alphabet) -> Self {
        let images = (0..alphabet.rank()).map(Word::generator).collect();
        Endomorphism { alphabet, images }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rank(&self) -> usize {
        self.alphabet.rank()
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image_of_letter(&self, l: Letter) -> Word {
        let w = &self.images[gen_index(l)];
        if l > 0 {
            w.clone()
        } else {
            w.inverse()
        }
    }

    pub fn apply(&self, w: &Word) -> Word {
        let mut raw = Vec::new();
        for &l in w.letters() {
            let img = &self.images[gen_index(l)];
            if l > 0 {
                raw.extend_from_slice(img.letters());
            } else {
                raw.extend(img.letters().iter().rev().map(|x| -x));
            }
        }
        Word::reduce(&raw)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Endomorphism) -> Endomorphism {
        Endomorphism {
            alphabet: self.alphabet.clone(),
            images: other.images.iter().map(|w| self.apply(w)).collect(),
        }
    }

    pub fn power(&self, n: u32) -> Endomorphism {
        let mut acc = Endomorphism::identity(self.alphabet.clone());
        for _ in 0..n {
            acc = self.compose(&acc);
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, w)| *w == Word::generator(i))
    }

    /// Shortlex-least nontrivial word of length ≤ `radius` in the kernel, if any.
    pub fn is_injective_on_ball(&self, radius: usize) -> Option<Word> {
        let letters = all_letters(self.rank());
        for len in 1..=radius {
            let mut stack = Vec::with_capacity(len);
            if let Some(w) = kernel_search(self, &letters, len, &mut stack) {
                return Some(w);
            }
        }
        None
    }

    pub fn format(&self) -> String {
        self.images
            .iter()
            .enumerate()
            .map(|(i, w)| format!("{} -> {}", self.alphabet.names()[i], self.alphabet.format(w)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Letters in the order `a, a^-1, b, b^-1, ...`.
pub fn all_letters(rank: usize) -> Vec<Letter> {
    (1..=rank as Letter).flat_map(|i| [i, -i]).collect()
}

fn kernel_search(
    phi: &Endomorphism,
    letters: &[Letter],
    len: usize,
    stack: &mut Vec<Letter>,
) -> Option<Word> {
    if stack.len() == len {
        let w = Word(stack.clone());
        return phi.apply(&w).is_empty().then_some(w);
    }
    for &l in letters {
        if stack.last() == Some(&-l) {
            continue;
        }
        stack.push(l);
        let found = kernel_search(phi, letters, len, stack);
        stack.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// All reduced words of exact length `len` in shortlex order.
pub fn reduced_words(rank: usize, len: usize) -> Vec<Word> {
    let letters = all_letters(rank);
    let mut out = vec![Word::identity()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * (2 * rank).saturating_sub(1).max(1));
        for w in &out {
            for &l in &letters {
                if w.0.last() != Some(&-l) {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
        }
        out = next;
    }
    out
}

/// Canonical cyclic representatives (up to rotation and inversion) of all
/// nontrivial cyclically reduced words of length exactly `len`, sorted lexicographically.
pub fn cyclic_classes(rank: usize, len: usize) -> Vec<Word> {
    let mut v: Vec<Word> = reduced_words(rank, len)
        .into_iter()
        .filter(|w| w.is_cyclically_reduced())
        .filter(|w| w.canonical_cyclic() == *w)
        .collect();
    v.sort_by(|a, b| a.lex_cmp(b));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::standard(2)
    }

    #[test]
    fn reduce_examples() {
        let a = ab();
        assert_eq!(a.parse("a a^-1 b").unwrap(), a.parse("b").unwrap());
        assert_eq!(a.parse("").unwrap(), Word::identity());
        assert_eq!(a.format(&a.parse("a b b⁻¹ a").unwrap()), "a a");
        assert_eq!(a.parse("c"), Err(Error::UnknownLetter("c".into())));
    }

    #[test]
    fn cyclic_reduce_examples() {
        let a = ab();
        let (core, c) = a.parse("a b a^-1").unwrap().cyclic_reduce();
        assert_eq!((a.format(&core), a.format(&c)), ("b".into(), "a".into()));
        let (core, c) = a.parse("a b").unwrap().cyclic_reduce();
        assert_eq!((a.format(&core), a.format(&c)), ("a b".into(), "".into()));
        let w = a.parse("a^-1 b a a").unwrap();
        let (core, c) = w.cyclic_reduce();
        assert_eq!(core.len(), 2);
        assert_eq!(a.format(&c), "a^-1");
        assert_eq!(core.conjugate_by(&c), w);
    }

    #[test]
    fn apply_examples() {
        let fib = Endomorphism::parse(&["b", "a b"]).unwrap();
        let a = ab();
        assert_eq!(a.format(&fib.apply(&a.parse("a b").unwrap())), "b a b");
        let dbl = Endomorphism::parse(&["a a"]).unwrap();
        assert_eq!(dbl.apply(&Word::generator(0)).len(), 2);
    }

    #[test]
    fn injectivity_ball() {
        let phi = Endomorphism::parse(&["a b", "a b"]).unwrap();
        let w = phi.is_injective_on_ball(2).unwrap();
        assert_eq!(ab().format(&w), "a b^-1");
        let fib = Endomorphism::parse(&["b", "a b"]).unwrap();
        assert_eq!(fib.is_injective_on_ball(6), None);
        let id = Endomorphism::identity(ab());
        assert_eq!(id.is_injective_on_ball(10), None);
    }

    #[test]
    fn conjugator_solver() {
        let a = ab();
        let u = a.parse("a b").unwrap();
        let v = a.parse("b a").unwrap();
        let c = common_conjugator(&[u.clone()], &[v.clone()]).unwrap();
        assert_eq!(u.conjugate_by(&c), v);
        let us = vec![a.parse("a").unwrap(), a.parse("b").unwrap()];
        let g = a.parse("a b a").unwrap();
        let vs: Vec<Word> = us.iter().map(|u| u.conjugate_by(&g)).collect();
        assert_eq!(common_conjugator(&us, &vs), Some(g));
        assert_eq!(common_conjugator(&[a.parse("a").unwrap()], &[a.parse("b").unwrap()]), None);
    }

    #[test]
    fn canonical_forms() {
        let a = ab();
        let w = a.parse("b a^-1 b^-1 a").unwrap();
        assert_eq!(a.format(&w.canonical_cyclic()), "a b a^-1 b^-1");
        assert_eq!(reduced_words(2, 2).len(), 12);
        assert!(cyclic_classes(2, 4).contains(&a.parse("a b a^-1 b^-1").unwrap()));
    }
}
