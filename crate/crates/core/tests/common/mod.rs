#![allow(dead_code)]

use std::ops::RangeInclusive;

use rand::rngs::StdRng;
use rand::Rng;

use wordsimt::{Boundaries, Schedule, Token, TokenizedSentence};

/// Random word boundaries over `n` tokens; `n` is always word-final.
pub fn boundaries(rng: &mut StdRng, n: usize) -> Boundaries {
    let p = rng.gen_range(0.2..0.9);
    let ends: Vec<usize> = (1..=n).filter(|&j| j == n || rng.gen_bool(p)).collect();
    Boundaries::new(ends, n).unwrap()
}

/// Random non-decreasing read counts in `1..=n`.
pub fn schedule(rng: &mut StdRng, n: usize, m: usize) -> Schedule {
    let mut reads: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=n)).collect();
    reads.sort_unstable();
    Schedule::new(reads, n).unwrap()
}

pub fn words(rng: &mut StdRng, count: RangeInclusive<usize>) -> Vec<String> {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let count = rng.gen_range(count);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=7);
            (0..len)
                .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
                .collect()
        })
        .collect()
}

/// Split each word at random character positions.
pub fn segment(rng: &mut StdRng, words: &[String]) -> TokenizedSentence {
    let mut tokens = Vec::new();
    for word in words {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for cut in 1..=chars.len() {
            if cut == chars.len() || rng.gen_bool(0.35) {
                let text: String = chars[start..cut].iter().collect();
                tokens.push(Token::new(text, cut == chars.len()).unwrap());
                start = cut;
            }
        }
    }
    TokenizedSentence::from_tokens(tokens).unwrap()
}

pub fn sentence(rng: &mut StdRng, max_words: usize) -> TokenizedSentence {
    let w = words(rng, 1..=max_words);
    segment(rng, &w)
}
