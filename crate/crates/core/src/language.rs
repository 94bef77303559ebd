//! The constrained English grammar spoken by the instructor, the LLM
//! prompts, and the agent.
//!
//! Goals:
//!
//! ```text
//! [If the object is a <category> then] the goal is that <conjunct> (and <conjunct>)*
//! conjunct := the <subject> is <containment-word> the <container>
//!           | the <subject> is <property>
//! ```
//!
//! Actions are imperatives: `<verb phrase> [the] <object> [from <place>]`
//! with `in/into/onto <destination>` for put-down.

use crate::lexicon::{article, Lexicon, VerbMeaning};
use crate::world::{Category, ObjectId, PrimitiveAction, Property, Verb, WorldState};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// A predicate argument: the bound object variable or a category reference.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Object,
    Category(Category),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalPredicate {
    In { subject: Term, container: Category },
    Property { subject: Term, property: Property },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSource {
    Instructor,
    Llm,
    Builtin,
}

/// "If category(X) = C then P1 and P2 ..."
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConditionalGoal {
    pub condition_category: Category,
    pub predicates: Vec<GoalPredicate>,
    pub source: GoalSource,
}

impl ConditionalGoal {
    /// Same category and predicates, whatever the source.
    pub fn same_content(&self, other: &ConditionalGoal) -> bool {
        self.condition_category == other.condition_category && self.predicates == other.predicates
    }

    /// Categories referenced by the predicates (containers and subjects).
    pub fn referenced_categories(&self) -> BTreeSet<&Category> {
        let mut out = BTreeSet::new();
        for p in &self.predicates {
            match p {
                GoalPredicate::In { subject, container } => {
                    out.insert(container);
                    if let Term::Category(c) = subject {
                        out.insert(c);
                    }
                }
                GoalPredicate::Property {
                    subject: Term::Category(c),
                    ..
                } => {
                    out.insert(c);
                }
                GoalPredicate::Property { .. } => {}
            }
        }
        out
    }
}

impl fmt::Display for ConditionalGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_goal_with(self, &Lexicon::builtin()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LanguageError {
    #[error("cannot interpret `{text}`: {reason}")]
    Uninterpretable { text: String, reason: String },
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("cannot ground `{0}` in the current state")]
    UngroundableNounPhrase(String),
    #[error("put-down needs a destination")]
    MissingDestination,
    /// A known locomotion verb; approach moves are implicit.
    #[error("`{0}` is locomotion, not a primitive action")]
    Locomotion(String),
}

fn uninterpretable(text: &str, reason: impl Into<String>) -> LanguageError {
    LanguageError::Uninterpretable {
        text: text.to_string(),
        reason: reason.into(),
    }
}

const DELIMITERS: [&str; 2] = ["(end result)", "(end task)"];

/// Lowercased words with surrounding punctuation and template delimiters removed.
pub(crate) fn words(text: &str) -> Vec<String> {
    let mut t = text.trim().to_lowercase();
    for d in DELIMITERS {
        if let Some(pos) = t.find(d) {
            t.truncate(pos);
        }
    }
    t.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| matches!(c, '.' | ',' | '?' | '!' | '\'' | '"' | '`' | ';' | ':'))
                .to_string()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn strip_articles(words: &[String]) -> &[String] {
    match words.first().map(String::as_str) {
        Some("the" | "a" | "an") => &words[1..],
        _ => words,
    }
}

/// Parses a goal statement. Bare goals (no "If the object is ..." prefix)
/// are conditioned on `context`, the category of the object being queried.
pub fn parse_goal(
    text: &str,
    context: Option<&Category>,
    source: GoalSource,
    lexicon: &Lexicon,
) -> Result<ConditionalGoal, LanguageError> {
    let w = words(text);
    let mut rest: &[String] = &w;

    let condition = if rest.len() >= 4 && rest[..4] == ["if", "the", "object", "is"] {
        rest = &rest[4..];
        let then = rest
            .iter()
            .position(|t| t == "then")
            .ok_or_else(|| uninterpretable(text, "conditional goal lacks `then`"))?;
        let cat_words = strip_articles(&rest[..then]);
        let cat = lexicon
            .category_for(cat_words)
            .ok_or_else(|| uninterpretable(text, format!("unknown category `{}`", cat_words.join(" "))))?;
        rest = &rest[then + 1..];
        cat
    } else {
        context
            .cloned()
            .ok_or_else(|| uninterpretable(text, "bare goal without an object context"))?
    };
    if !lexicon.knows_category(&condition) {
        return Err(uninterpretable(
            text,
            format!("category `{condition}` is not in the vocabulary"),
        ));
    }

    if rest.len() < 4 || rest[..4] != ["the", "goal", "is", "that"] {
        return Err(uninterpretable(text, "expected `the goal is that`"));
    }
    rest = &rest[4..];

    let mut predicates = Vec::new();
    for conjunct in rest.split(|t| t == "and") {
        predicates.push(parse_conjunct(text, conjunct, &condition, lexicon)?);
    }
    if predicates.is_empty() {
        return Err(uninterpretable(text, "goal has no predicates"));
    }
    Ok(ConditionalGoal {
        condition_category: condition,
        predicates,
        source,
    })
}

fn parse_conjunct(
    text: &str,
    conjunct: &[String],
    condition: &Category,
    lexicon: &Lexicon,
) -> Result<GoalPredicate, LanguageError> {
    let is = conjunct
        .iter()
        .position(|t| t == "is" || t == "are")
        .ok_or_else(|| uninterpretable(text, format!("no verb in `{}`", conjunct.join(" "))))?;
    let subject_words = strip_articles(&conjunct[..is]);
    let subject = if subject_words == ["object"] {
        Term::Object
    } else {
        match lexicon.category_for(subject_words) {
            Some(c) if &c == condition => Term::Object,
            Some(c) => Term::Category(c),
            None => {
                return Err(uninterpretable(
                    text,
                    format!("unknown subject `{}`", subject_words.join(" ")),
                ))
            }
        }
    };
    let predicate = &conjunct[is + 1..];
    if let Some(first) = predicate.first() {
        if lexicon.is_containment_word(first) {
            let container_words = strip_articles(&predicate[1..]);
            let container = lexicon
                .category_for(container_words)
                .ok_or_else(|| uninterpretable(text, format!("unknown container `{}`", container_words.join(" "))))?;
            if !lexicon.is_receptacle(&container) {
                return Err(uninterpretable(text, format!("`{container}` is not a receptacle")));
            }
            return Ok(GoalPredicate::In { subject, container });
        }
    }
    let property = lexicon.property_for(predicate).ok_or_else(|| {
        uninterpretable(
            text,
            format!("`{}` is outside the property vocabulary", predicate.join(" ")),
        )
    })?;
    Ok(GoalPredicate::Property { subject, property })
}

/// Canonical text for a goal, without trailing punctuation.
pub fn render_goal(goal: &ConditionalGoal) -> String {
    render_goal_with(goal, &Lexicon::builtin())
}

pub fn render_goal_with(goal: &ConditionalGoal, lexicon: &Lexicon) -> String {
    let term = |t: &Term| match t {
        Term::Object => "the object".to_string(),
        Term::Category(c) => format!("the {c}"),
    };
    let conjuncts: Vec<String> = goal
        .predicates
        .iter()
        .map(|p| match p {
            GoalPredicate::In { subject, container } => format!("{} is in the {container}", term(subject)),
            GoalPredicate::Property { subject, property } => {
                format!("{} is {}", term(subject), lexicon.property_phrase(*property))
            }
        })
        .collect();
    format!(
        "If the object is {} {} then the goal is that {}",
        article(&goal.condition_category),
        goal.condition_category,
        conjuncts.join(" and ")
    )
}

/// True iff every predicate holds with the object variable bound to `obj`
/// and each category reference bound to some object of that category
/// (one object per category, shared across predicates).
pub fn satisfied(goal: &ConditionalGoal, obj: &ObjectId, state: &WorldState) -> bool {
    goal_binding(goal, obj, state).is_some()
}

/// The first satisfying category binding in id order, if any.
pub fn goal_binding(
    goal: &ConditionalGoal,
    obj: &ObjectId,
    state: &WorldState,
) -> Option<BTreeMap<Category, ObjectId>> {
    if state.category(obj) != Some(&goal.condition_category) {
        return None;
    }
    let cats: Vec<&Category> = goal.referenced_categories().into_iter().collect();
    let candidates: Vec<Vec<&ObjectId>> = cats.iter().map(|c| state.objects_of_category(c).collect()).collect();
    if candidates.iter().any(Vec::is_empty) {
        return None;
    }
    let mut choice = vec![0usize; cats.len()];
    loop {
        let bound = |c: &Category| -> &ObjectId {
            let k = cats.iter().position(|x| *x == c).expect("category collected above");
            candidates[k][choice[k]]
        };
        let bind = |t: &Term| match t {
            Term::Object => obj,
            Term::Category(c) => bound(c),
        };
        let ok = goal.predicates.iter().all(|p| match p {
            GoalPredicate::In { subject, container } => state.is_in(bind(subject), bound(container)),
            GoalPredicate::Property { subject, property } => state.has_property(bind(subject), *property),
        });
        if ok {
            return Some(
                cats.iter()
                    .enumerate()
                    .map(|(k, c)| ((*c).clone(), candidates[k][choice[k]].clone()))
                    .collect(),
            );
        }
        // odometer over the candidate product
        let mut k = 0;
        loop {
            if k == choice.len() {
                return None;
            }
            choice[k] += 1;
            if choice[k] < candidates[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Ungrounded imperative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionStep {
    pub verb: VerbMeaning,
    pub verb_phrase: String,
    pub object_phrase: Vec<String>,
    pub source_phrase: Option<Vec<String>>,
    pub destination_phrase: Option<Vec<String>>,
}

pub fn parse_action_step(text: &str, lexicon: &Lexicon) -> Result<ActionStep, LanguageError> {
    let w = words(text);
    let (verb, used) = lexicon
        .match_verb(&w)
        .ok_or_else(|| LanguageError::UnknownVerb(w.first().cloned().unwrap_or_default()))?;
    let verb_phrase = w[..used].join(" ");
    let rest = &w[used..];
    let (mut head, destination) = match verb {
        VerbMeaning::Primitive(Verb::PutDown) => match rest.iter().position(|t| lexicon.is_containment_word(t)) {
            Some(i) => (&rest[..i], Some(strip_articles(&rest[i + 1..]).to_vec())),
            None => (rest, None),
        },
        _ => (rest, None),
    };
    // "put the plate down in the sink"
    if head.last().map(String::as_str) == Some("down") {
        head = &head[..head.len() - 1];
    }
    let (object, source) = match head.iter().position(|t| t == "from") {
        Some(i) => (&head[..i], Some(strip_articles(&head[i + 1..]).to_vec())),
        None => (head, None),
    };
    Ok(ActionStep {
        verb,
        verb_phrase,
        object_phrase: strip_articles(object).to_vec(),
        source_phrase: source,
        destination_phrase: destination,
    })
}

fn ground(
    phrase: &[String],
    near: Option<&[String]>,
    state: &WorldState,
    lexicon: &Lexicon,
    focus: Option<&ObjectId>,
) -> Result<ObjectId, LanguageError> {
    let missing = || LanguageError::UngroundableNounPhrase(phrase.join(" "));
    let cat = lexicon.category_for(phrase).ok_or_else(missing)?;
    let mut candidates: Vec<&ObjectId> = state.objects_of_category(&cat).collect();
    if let Some(place) = near.and_then(|p| lexicon.category_for(p)) {
        let filtered: Vec<&ObjectId> = candidates
            .iter()
            .copied()
            .filter(|id| state.container_of(id).and_then(|c| state.category(c)) == Some(&place))
            .collect();
        if !filtered.is_empty() {
            candidates = filtered;
        }
    }
    if let Some(f) = focus {
        if candidates.contains(&f) {
            return Ok(f.clone());
        }
    }
    candidates.first().map(|id| (*id).clone()).ok_or_else(missing)
}

/// Parses and grounds an imperative against `state`. Same-category
/// ambiguity resolves to `focus` when it matches, else the lowest id.
pub fn parse_action(
    text: &str,
    state: &WorldState,
    lexicon: &Lexicon,
    focus: Option<&ObjectId>,
) -> Result<PrimitiveAction, LanguageError> {
    let step = parse_action_step(text, lexicon)?;
    let verb = match step.verb {
        VerbMeaning::Locomotion => return Err(LanguageError::Locomotion(step.verb_phrase)),
        VerbMeaning::Primitive(v) => v,
    };
    let object = ground(
        &step.object_phrase,
        step.source_phrase.as_deref(),
        state,
        lexicon,
        focus,
    )?;
    Ok(match verb {
        Verb::Open => PrimitiveAction::Open(object),
        Verb::Close => PrimitiveAction::Close(object),
        Verb::PickUp => PrimitiveAction::PickUp(object),
        Verb::PutDown => {
            let dest = step.destination_phrase.ok_or(LanguageError::MissingDestination)?;
            let dest = ground(&dest, None, state, lexicon, None)?;
            PrimitiveAction::PutDown(object, dest)
        }
    })
}

/// Imperative text for an action, in the style of the prompt examples
/// ("Open closet", "Put package into closet").
pub fn render_action(action: &PrimitiveAction, state: &WorldState) -> String {
    let cat = |id: &ObjectId| {
        state
            .category(id)
            .map(|c| c.to_string())
            .unwrap_or_else(|| id.to_string())
    };
    match action {
        PrimitiveAction::Open(o) => format!("Open {}", cat(o)),
        PrimitiveAction::Close(o) => format!("Close {}", cat(o)),
        PrimitiveAction::PickUp(o) => format!("Pick up {}", cat(o)),
        PrimitiveAction::PutDown(o, d) => format!("Put {} into {}", cat(o), cat(d)),
    }
}

/// A subtask named during task introduction, e.g. "Clear the table."
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subtask {
    pub name: String,
    pub location: Category,
}

/// "Tidy the kitchen." -> "tidy kitchen"
pub fn parse_task_name(text: &str) -> Option<String> {
    let w: Vec<String> = words(text)
        .into_iter()
        .filter(|t| !matches!(t.as_str(), "the" | "a" | "an"))
        .collect();
    (!w.is_empty()).then(|| w.join(" "))
}

/// True for utterances that close the subtask list.
pub fn is_done_utterance(text: &str) -> bool {
    matches!(
        words(text).join(" ").as_str(),
        "done" | "finished" | "that's all" | "that is all" | "you are done" | "no more"
    )
}

/// "Clear the objects on the table." -> clear @ table. The first word names
/// the subtask; the last resolvable category phrase is its location.
pub fn parse_subtask(text: &str, lexicon: &Lexicon) -> Option<Subtask> {
    let w = words(text);
    let (name, rest) = w.split_first()?;
    for start in 0..rest.len() {
        let tail = strip_articles(&rest[start..]);
        if let Some(cat) = lexicon.category_for(tail) {
            return Some(Subtask {
                name: name.clone(),
                location: cat,
            });
        }
    }
    None
}

/// Whitespace token count; punctuation stays attached to its word.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}
