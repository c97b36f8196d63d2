//! Seeded synthetic newspaper corpus for demos and tests.
//!
//! Articles mix capitalized names and places (which the stub tagger masks)
//! with random lowercase vocabulary, so masked texts stay distinct.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Article;

const FIRST: &[&str] = &[
    "John", "Mary", "William", "George", "James", "Charles", "Frank", "Alice", "Henry", "Edward",
];
const LAST: &[&str] = &[
    "Smith", "Johnson", "Brown", "Wills", "Poage", "Taylor", "Moore", "Clark", "Hall", "Young",
];
const PLACES: &[&str] = &[
    "Paris", "London", "Chicago", "Boston", "Alabama", "Ohio", "Texas", "Washington", "Berlin",
    "Denver",
];
const ORGS: &[&str] = &[
    "Senate", "Congress", "Union Pacific Railroad", "National Bank", "Farmers Association",
];
const SOURCES: &[&str] = &[
    "ottumwa-daily-courier",
    "titusville-herald",
    "daily-globe",
    "morning-herald",
    "circleville-herald",
];
const WORDS: &[&str] = &[
    "butter", "cream", "price", "board", "order", "wheat", "harvest", "storm", "river", "bridge",
    "strike", "miners", "wages", "election", "ballot", "tariff", "railway", "fire", "school",
    "teachers", "flood", "drought", "cattle", "market", "bank", "loan", "court", "trial", "jury",
    "verdict", "war", "peace", "treaty", "soldiers", "navy", "ship", "cargo", "coal", "steel",
    "factory", "workers", "union", "rally", "parade", "festival", "church", "mayor", "council",
    "budget", "taxes", "road", "automobile", "accident", "hospital", "doctors", "fever", "vaccine",
    "radio", "telephone", "airplane",
];

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| *WORDS.choose(rng).expect("nonempty"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let first = FIRST.choose(rng).expect("nonempty");
    let last = LAST.choose(rng).expect("nonempty");
    let place = PLACES.choose(rng).expect("nonempty");
    let org = ORGS.choose(rng).expect("nonempty");
    match rng.random_range(0..3) {
        0 => format!(
            "{first} {last} of {place} said the {} was {}.",
            words(rng, 3),
            words(rng, 2)
        ),
        1 => format!(
            "The {} in {place} met with the {org} over {}.",
            words(rng, 2),
            words(rng, 3)
        ),
        _ => format!(
            "Reports from {place} say {first} {last} and the {} {}.",
            words(rng, 2),
            words(rng, 3)
        ),
    }
}

/// Generates `n` articles with distinct ids and distinct lowercase content.
pub fn generate(n: usize, seed: u64) -> Vec<Article> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let sentences: Vec<String> = (0..rng.random_range(2..=4)).map(|_| sentence(&mut rng)).collect();
        let text = sentences.join(" ");
        // Uniqueness is judged on the lowercase words only: names get masked.
        let skeleton: String = text
            .split_whitespace()
            .filter(|w| w.chars().next().is_some_and(char::is_lowercase))
            .collect::<Vec<_>>()
            .join(" ");
        if !seen.insert(skeleton) {
            continue;
        }
        let i = out.len();
        let year = rng.random_range(1880..=1963);
        let month = rng.random_range(1..=12);
        let day = rng.random_range(1..=28);
        out.push(Article {
            id: format!("toy-{i:05}"),
            source: SOURCES.choose(&mut rng).expect("nonempty").to_string(),
            date: format!("{year:04}-{month:02}-{day:02}"),
            headline: Some(words(&mut rng, 4)),
            text,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_distinct() {
        let a = generate(40, 3);
        assert_eq!(a, generate(40, 3));
        assert_ne!(a, generate(40, 4));
        let ids: HashSet<_> = a.iter().map(|x| &x.id).collect();
        assert_eq!(ids.len(), 40);
        for art in &a {
            assert!(art.year().is_some());
        }
    }
}
