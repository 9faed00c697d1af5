#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use traintrack::gates::GateStructure;
use traintrack::graphs::{Dir, EdgePath, MarkedGraph, Turn};
use traintrack::moves::{train_track_algorithm, TrainTrack};
use traintrack::words::reduced_words;
use traintrack::{Endomorphism, Word};

pub struct SuiteMap {
    pub name: &'static str,
    pub phi: Endomorphism,
    pub automorphism: bool,
    pub tt: TrainTrack,
}

/// Six automorphisms and six injective non-surjective endomorphisms of ranks 2 to 4.
pub const SUITE: &[(&str, bool, &[&str])] = &[
    ("fibonacci", true, &["b", "a b"]),
    ("fibonacci-swapped", true, &["a b", "a"]),
    ("rank3-plastic", true, &["b", "c", "a b"]),
    ("rank3-twisted", true, &["b", "c", "a c^-1"]),
    ("rank4-cycle", true, &["b", "c", "d", "a b"]),
    ("rank4-twisted", true, &["b", "c", "d", "a d^-1"]),
    ("sapir", false, &["a b", "b a"]),
    ("rank2-long", false, &["a b a b b", "b a b"]),
    ("rank3-raising", false, &["a^-1 b^-1", "b^-1 a c b^-1 a", "b a^-1 c"]),
    ("rank3-mixed", false, &["a^-1 c b a^-1", "c c a", "b^-1 c a^-1 a^-1"]),
    ("rank3-inverse", false, &["b c^-1 b", "c^-1 c^-1 a^-1", "a c^-1 c^-1 a a"]),
    ("rank4-shift", false, &["a b", "b c", "c d", "d a"]),
];

pub fn suite() -> Vec<SuiteMap> {
    SUITE
        .iter()
        .map(|&(name, automorphism, images)| {
            let phi = Endomorphism::parse(images).unwrap();
            let tt = train_track_algorithm(&phi, 2000).unwrap_or_else(|e| panic!("{name}: {e}"));
            SuiteMap { name, phi, automorphism, tt }
        })
        .collect()
}

/// Random tight path with `len` edges leaving `v`, never starting along `avoid`.
pub fn random_tight_from(g: &MarkedGraph, rng: &mut impl Rng, v: usize, avoid: Option<Dir>, len: usize) -> EdgePath {
    let mut dirs: Vec<Dir> = Vec::with_capacity(len);
    let mut at = v;
    while dirs.len() < len {
        let options: Vec<Dir> = g
            .dirs_at(at)
            .into_iter()
            .filter(|&d| match dirs.last() {
                Some(&l) => d != -l,
                None => Some(d) != avoid,
            })
            .collect();
        let Some(&d) = options.choose(rng) else { break };
        dirs.push(d);
        at = g.terminus(d);
    }
    EdgePath::new(v, dirs)
}

/// Random legal path beginning with `first`, extended until its length reaches `min_length`.
pub fn random_legal_from(g: &MarkedGraph, gates: &GateStructure, rng: &mut impl Rng, first: Dir, min_length: f64) -> Vec<Dir> {
    let mut dirs = vec![first];
    while g.dirs_length(&dirs) < min_length {
        let last = *dirs.last().unwrap();
        let options: Vec<Dir> = g
            .dirs_at(g.terminus(last))
            .into_iter()
            .filter(|&d| d != -last && gates.is_legal_turn(Turn(-last, d)))
            .collect();
        // Train track vertices have at least two gates, so a legal continuation exists.
        dirs.push(*options.choose(rng).expect("legal continuation"));
    }
    dirs
}

/// Number of direction pairs cancelled when `a` is followed by `b`, both tight.
pub fn junction_cancellation(a: &[Dir], b: &[Dir]) -> usize {
    a.iter().rev().zip(b).take_while(|(x, y)| **x == -**y).count()
}

/// First `(len, k, d)` with `φ^k(g)` a rotation of `g^d`, over all cyclically reduced words.
pub fn brute_atoroidal(phi: &Endomorphism, k_max: u32, d_max: u32, len_max: usize) -> Option<(usize, u32, u32)> {
    for len in 1..=len_max {
        let words: Vec<Word> = reduced_words(phi.rank(), len).into_iter().filter(|w| w.is_cyclically_reduced()).collect();
        for k in 1..=k_max {
            let pk = phi.power(k);
            for d in 1..=d_max {
                let hit = words.iter().any(|w| {
                    let img = pk.apply(w).cyclic_reduce().0;
                    let target = w.pow(d as i64);
                    img.len() == target.len() && (0..img.len().max(1)).any(|i| img.rotate(i) == target)
                });
                if hit {
                    return Some((len, k, d));
                }
            }
        }
    }
    None
}
