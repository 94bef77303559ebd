//! Verb, property and category vocabulary shared by every component that
//! reads or writes constrained English.
//!
//! The lexicon is data (`data/lexicon.json`), so synonyms can be added
//! without touching code.

use crate::world::{Category, Property, Verb};
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use thiserror::Error;

const BUILTIN: &str = include_str!("../data/lexicon.json");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("lexicon io: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon entry `{0}`: {1}")]
    Invalid(String, String),
}

/// What a verb phrase means to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbMeaning {
    Primitive(Verb),
    /// Approach/go-to; handled implicitly below the primitive level.
    Locomotion,
}

#[derive(Debug, Deserialize)]
struct RawVerb {
    phrase: String,
    primitive: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawProperty {
    phrase: String,
    property: String,
}

#[derive(Debug, Deserialize)]
struct RawCategory {
    name: String,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(default)]
    receptacle: bool,
    preposition: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawLexicon {
    schema_version: u32,
    verbs: Vec<RawVerb>,
    containment: Vec<String>,
    properties: Vec<RawProperty>,
    categories: Vec<RawCategory>,
}

#[derive(Debug, Clone)]
pub struct CategoryEntry {
    pub receptacle: bool,
    pub preposition: String,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    /// (tokens, meaning), longest phrases first.
    verbs: Vec<(Vec<String>, VerbMeaning)>,
    containment: BTreeSet<String>,
    properties: Vec<(Vec<String>, Property)>,
    categories: BTreeMap<Category, CategoryEntry>,
    aliases: HashMap<String, Category>,
}

fn tokens(phrase: &str) -> Vec<String> {
    phrase.split_whitespace().map(str::to_lowercase).collect()
}

impl Lexicon {
    pub fn builtin() -> Lexicon {
        Lexicon::from_json(BUILTIN).expect("builtin lexicon is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
        Lexicon::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Lexicon, LexiconError> {
        let raw: RawLexicon = serde_json::from_str(text)?;
        if raw.schema_version != 1 {
            return Err(LexiconError::Invalid(
                "schema_version".into(),
                format!("unsupported version {}", raw.schema_version),
            ));
        }
        let mut verbs = Vec::new();
        for v in raw.verbs {
            let meaning = match v.primitive.as_deref() {
                None => VerbMeaning::Locomotion,
                Some(sym) => VerbMeaning::Primitive(
                    Verb::from_symbol(sym)
                        .ok_or_else(|| LexiconError::Invalid(v.phrase.clone(), format!("unknown primitive `{sym}`")))?,
                ),
            };
            verbs.push((tokens(&v.phrase), meaning));
        }
        verbs.sort_by_key(|v| std::cmp::Reverse(v.0.len()));
        let mut properties = Vec::new();
        for p in raw.properties {
            let prop = Property::from_symbol(&p.property)
                .ok_or_else(|| LexiconError::Invalid(p.phrase.clone(), format!("unknown property `{}`", p.property)))?;
            properties.push((tokens(&p.phrase), prop));
        }
        properties.sort_by_key(|p| std::cmp::Reverse(p.0.len()));
        let mut categories = BTreeMap::new();
        let mut aliases = HashMap::new();
        for c in raw.categories {
            if c.name.contains(char::is_whitespace) || c.name.to_lowercase() != c.name {
                return Err(LexiconError::Invalid(
                    c.name.clone(),
                    "category names are hyphenated lowercase".into(),
                ));
            }
            let cat = Category::new(c.name.clone());
            for alias in &c.aliases {
                aliases.insert(tokens(alias).join(" "), cat.clone());
            }
            categories.insert(
                cat,
                CategoryEntry {
                    receptacle: c.receptacle,
                    preposition: c.preposition.unwrap_or_else(|| "in".to_string()),
                },
            );
        }
        Ok(Lexicon {
            verbs,
            containment: raw.containment.into_iter().map(|s| s.to_lowercase()).collect(),
            properties,
            categories,
            aliases,
        })
    }

    /// Longest verb phrase at the start of `words`, with the number of
    /// words it consumed.
    pub fn match_verb(&self, words: &[String]) -> Option<(VerbMeaning, usize)> {
        self.verbs.iter().find_map(|(phrase, meaning)| {
            (words.len() >= phrase.len() && words[..phrase.len()] == phrase[..]).then_some((*meaning, phrase.len()))
        })
    }

    /// Lowercased first words of every verb phrase; the "known words" for
    /// first-word filtering during action retrieval.
    pub fn known_verbs(&self) -> BTreeSet<String> {
        self.verbs.iter().map(|(p, _)| p[0].clone()).collect()
    }

    pub fn is_containment_word(&self, word: &str) -> bool {
        self.containment.contains(word)
    }

    /// Property named by exactly these words.
    pub fn property_for(&self, words: &[String]) -> Option<Property> {
        self.properties
            .iter()
            .find(|(phrase, _)| phrase[..] == words[..])
            .map(|(_, p)| *p)
    }

    /// Canonical phrase used when rendering `property`.
    pub fn property_phrase(&self, property: Property) -> String {
        self.properties
            .iter()
            .filter(|(_, p)| *p == property)
            .min_by_key(|(phrase, _)| phrase.len())
            .map(|(phrase, _)| phrase.join(" "))
            .unwrap_or_else(|| property.symbol().replace('_', " "))
    }

    /// Resolves a noun phrase (articles already dropped) to a category.
    pub fn category_for(&self, words: &[String]) -> Option<Category> {
        if words.is_empty() {
            return None;
        }
        let joined = words.join("-");
        let cat = Category::new(joined);
        if self.categories.contains_key(&cat) {
            return Some(cat);
        }
        self.aliases.get(&words.join(" ")).cloned()
    }

    pub fn knows_category(&self, category: &Category) -> bool {
        self.categories.contains_key(category)
    }

    pub fn is_receptacle(&self, category: &Category) -> bool {
        self.categories.get(category).is_some_and(|c| c.receptacle)
    }

    /// "on" for surfaces, "in" otherwise.
    pub fn preposition(&self, category: &Category) -> &str {
        self.categories
            .get(category)
            .map(|c| c.preposition.as_str())
            .unwrap_or("in")
    }

    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.categories.keys()
    }
}

/// Indefinite article for a category name.
pub fn article(category: &Category) -> &'static str {
    match category.as_str().chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}
