//! The learning loop.
//!
//! For each object in a subtask's location the agent recalls or elicits a
//! goal, then repeatedly takes the next step from the first source that
//! has one: learned policy rules, bounded search, the language model
//! (confirmed by the instructor), and finally the instructor's own
//! instruction. Every solved object is generalized into rules.

mod transcript;

pub use transcript::{ActionSource, Counters, Event, Transcript, TRANSCRIPT_VERSION};

use crate::instructor::{Instructor, InstructorError, Question, Topic};
use crate::knowledge::{Episode, KnowledgeStore, TaskStructure};
use crate::language::{
    is_done_utterance, parse_action, parse_goal, parse_subtask, parse_task_name, render_action, render_goal_with,
    satisfied, word_count, ConditionalGoal, GoalPredicate, GoalSource, LanguageError, Subtask, Term,
};
use crate::lexicon::{article, Lexicon};
use crate::llm::{
    fingerprint, rank, retrieve_actions, retrieve_potential_goals, CallLog, ClientError, GatewayError, LlmClient,
    LlmResponse, PromptContext, QueryKind,
};
use crate::planner::plan_with_stats;
use crate::world::{
    applicable, apply, Affordance, Category, ObjectId, PrimitiveAction, Property, WorldFixture, WorldState,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_STEP_CEILING: usize = 20;
const MAX_SUBTASKS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "instruction")]
    Instruction,
    #[serde(rename = "instruction+search")]
    InstructionSearch,
    #[serde(rename = "search+llm")]
    SearchLlm,
    #[serde(rename = "instruction+llm")]
    InstructionLlm,
    #[serde(rename = "instruction+search2+llm")]
    InstructionSearch2Llm,
    #[serde(rename = "instruction+search4+llm")]
    InstructionSearch4Llm,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::Instruction,
        Condition::InstructionSearch,
        Condition::SearchLlm,
        Condition::InstructionLlm,
        Condition::InstructionSearch2Llm,
        Condition::InstructionSearch4Llm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Instruction => "instruction",
            Condition::InstructionSearch => "instruction+search",
            Condition::SearchLlm => "search+llm",
            Condition::InstructionLlm => "instruction+llm",
            Condition::InstructionSearch2Llm => "instruction+search2+llm",
            Condition::InstructionSearch4Llm => "instruction+search4+llm",
        }
    }

    pub fn search_depth(self) -> usize {
        match self {
            Condition::Instruction | Condition::InstructionLlm => 0,
            Condition::InstructionSearch2Llm => 2,
            Condition::InstructionSearch | Condition::SearchLlm | Condition::InstructionSearch4Llm => 4,
        }
    }

    pub fn llm_enabled(self) -> bool {
        !matches!(self, Condition::Instruction | Condition::InstructionSearch)
    }

    /// False only for search+llm, where the instructor just names the task.
    pub fn instructor_enabled(self) -> bool {
        self != Condition::SearchLlm
    }

    /// File-name friendly form, e.g. `instruction-search2-llm`.
    pub fn slug(self) -> String {
        self.name().replace('+', "-")
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name() == s || c.slug() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Condition::ALL.iter().map(|c| c.name()).collect();
                format!("unknown condition `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionConfig {
    pub condition: Option<Condition>,
    pub search_depth: usize,
    pub llm_enabled: bool,
    pub instructor_enabled: bool,
    pub step_ceiling: usize,
}

impl SessionConfig {
    pub fn for_condition(condition: Condition) -> SessionConfig {
        SessionConfig {
            condition: Some(condition),
            search_depth: condition.search_depth(),
            llm_enabled: condition.llm_enabled(),
            instructor_enabled: condition.instructor_enabled(),
            step_ceiling: DEFAULT_STEP_CEILING,
        }
    }

    /// No outside help at all: only recalled goals and learned rules.
    pub fn knowledge_only() -> SessionConfig {
        SessionConfig {
            condition: None,
            search_depth: 0,
            llm_enabled: false,
            instructor_enabled: false,
            step_ceiling: DEFAULT_STEP_CEILING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Instructor(#[from] InstructorError),
    #[error("language model: {0}")]
    Llm(ClientError),
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("task introduction: {0}")]
    Intro(String),
    #[error("task `{0}` has not been learned")]
    UnknownTask(String),
}

impl From<GatewayError> for SessionError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Client { source, .. } => SessionError::Llm(source),
            other => SessionError::Prompt(other.to_string()),
        }
    }
}

/// What the agent knows about the object it is working on.
struct Focus {
    task: String,
    object: ObjectId,
    category: Category,
    /// e.g. "on table", fixed when the object is first considered.
    place: Option<(String, Category)>,
}

/// Why an object's goal could not be pursued.
enum GoalOutcome {
    Goal(ConditionalGoal),
    Failed(String),
}

pub struct Agent<'a> {
    config: SessionConfig,
    lexicon: Lexicon,
    known_verbs: BTreeSet<String>,
    world: WorldState,
    pub knowledge: KnowledgeStore,
    instructor: &'a mut dyn Instructor,
    llm: CallLog<&'a mut dyn LlmClient>,
    events: Vec<Event>,
    task: String,
}

impl<'a> Agent<'a> {
    pub fn new(
        config: SessionConfig,
        world: WorldState,
        knowledge: KnowledgeStore,
        instructor: &'a mut dyn Instructor,
        llm: &'a mut dyn LlmClient,
    ) -> Agent<'a> {
        let lexicon = Lexicon::builtin();
        Agent {
            config,
            known_verbs: lexicon.known_verbs(),
            lexicon,
            world,
            knowledge,
            instructor,
            llm: CallLog::new(llm),
            events: Vec::new(),
            task: String::new(),
        }
    }

    pub fn with_lexicon(mut self, lexicon: Lexicon) -> Self {
        self.known_verbs = lexicon.known_verbs();
        self.lexicon = lexicon;
        self
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn set_task(&mut self, task: impl Into<String>) {
        self.task = task.into();
    }

    /// Takes the events logged so far, leaving the log empty.
    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    /// Introduction, every subtask, then the goal assessment.
    pub fn learn_task(&mut self, fixture: &WorldFixture) -> Result<Transcript, SessionError> {
        let structure = self.introduce_task()?;
        for subtask in &structure.subtasks {
            self.run_subtask(subtask)?;
        }
        self.assess(fixture);
        Ok(self.transcript(&fixture.name))
    }

    /// Runs a learned task from stored knowledge alone.
    pub fn perform_known_task(&mut self, fixture: &WorldFixture, task: &str) -> Result<Transcript, SessionError> {
        let structure = self
            .knowledge
            .tasks
            .get(task)
            .cloned()
            .ok_or_else(|| SessionError::UnknownTask(task.to_string()))?;
        self.task = structure.name.clone();
        for subtask in &structure.subtasks {
            self.run_subtask(subtask)?;
        }
        self.assess(fixture);
        Ok(self.transcript(&fixture.name))
    }

    pub fn transcript(&self, fixture: &str) -> Transcript {
        Transcript {
            condition: self.config.condition,
            fixture: fixture.to_string(),
            events: self.events.clone(),
        }
    }

    /// One goal_outcome event per answer-key assertion.
    pub fn assess(&mut self, fixture: &WorldFixture) {
        for a in &fixture.assertions {
            self.events.push(Event::GoalOutcome {
                assertion: a.clone(),
                achieved: a.holds(&self.world),
            });
        }
    }

    fn open(&mut self, q: &Question) -> Result<String, SessionError> {
        let text = self.instructor.ask_open(q, &self.world)?;
        self.events.push(Event::InstructorUtterance {
            topic: q.topic,
            question: q.text.clone(),
            word_count: word_count(&text),
            text: text.clone(),
        });
        Ok(text)
    }

    fn yesno(&mut self, q: &Question) -> Result<bool, SessionError> {
        let answer = self.instructor.ask_yesno(q, &self.world)?;
        self.events.push(Event::InstructorYesno {
            topic: q.topic,
            question: q.text.clone(),
            llm_tag: q.llm_tag,
            answer,
        });
        Ok(answer)
    }

    pub fn introduce_task(&mut self) -> Result<TaskStructure, SessionError> {
        let text = self.open(&Question::open(Topic::TaskName, "What task should I learn?"))?;
        let name = parse_task_name(&text).ok_or_else(|| SessionError::Intro(format!("no task in `{text}`")))?;
        self.task = name.clone();
        let mut subtasks = Vec::new();
        loop {
            if subtasks.len() == MAX_SUBTASKS {
                return Err(SessionError::Intro(format!("more than {MAX_SUBTASKS} subtasks")));
            }
            let q = Question::open(Topic::Subtask, format!("What is the next subtask of {name}?"));
            let text = self.open(&q)?;
            if is_done_utterance(&text) {
                break;
            }
            let sub = parse_subtask(&text, &self.lexicon)
                .ok_or_else(|| SessionError::Intro(format!("no subtask location in `{text}`")))?;
            subtasks.push(sub);
        }
        let structure = TaskStructure {
            name: name.clone(),
            subtasks,
        };
        self.knowledge.tasks.insert(name, structure.clone());
        Ok(structure)
    }

    /// Every grabbable object in the subtask's location, in fixture order.
    pub fn run_subtask(&mut self, subtask: &Subtask) -> Result<(), SessionError> {
        let Some(place) = self.world.objects_of_category(&subtask.location).next().cloned() else {
            return Ok(());
        };
        let objects: Vec<ObjectId> = self
            .world
            .contents(&place)
            .into_iter()
            .filter(|o| self.world.has_affordance(o, Affordance::Grabbable))
            .collect();
        for obj in objects {
            self.process_object(&subtask.name, &obj)?;
        }
        Ok(())
    }

    /// Goal, then actions until the goal holds, then generalization.
    pub fn process_object(&mut self, task: &str, obj: &ObjectId) -> Result<(), SessionError> {
        let Some(category) = self.world.category(obj).cloned() else {
            return Ok(());
        };
        let place = self
            .world
            .container_of(obj)
            .and_then(|c| self.world.category(c))
            .map(|c| (self.lexicon.preposition(c).to_string(), c.clone()));
        let focus = Focus {
            task: task.to_string(),
            object: obj.clone(),
            category: category.clone(),
            place,
        };
        self.events.push(Event::ObjectStarted {
            task: task.to_string(),
            object: obj.clone(),
            category: category.clone(),
        });
        let goal = match self.knowledge.lookup_goal(task, &category).cloned() {
            Some(g) => {
                self.events.push(Event::GoalRecalled {
                    task: task.to_string(),
                    category: category.clone(),
                    goal: render_goal_with(&g, &self.lexicon),
                });
                g
            }
            None => match self.obtain_goal(&focus)? {
                GoalOutcome::Goal(g) => {
                    self.events.push(Event::GoalLearned {
                        task: task.to_string(),
                        category: category.clone(),
                        goal: render_goal_with(&g, &self.lexicon),
                        source: g.source,
                    });
                    self.knowledge.store_goal(task, &category, g.clone());
                    g
                }
                GoalOutcome::Failed(reason) => {
                    self.events.push(Event::ObjectFailed {
                        object: obj.clone(),
                        reason,
                    });
                    return Ok(());
                }
            },
        };
        self.pursue(&focus, &goal)
    }

    fn prompt_context(&self, focus: &Focus, prior_steps: Vec<String>) -> PromptContext {
        let room = self
            .world
            .category(self.world.robot_location())
            .map(|c| c.to_string())
            .unwrap_or_default();
        let object_location = match &focus.place {
            Some((prep, c)) => format!("{prep} {c}"),
            None => "here".into(),
        };
        PromptContext {
            task: self.task.clone(),
            agent_location: room,
            object_description: focus.category.to_string(),
            object_location,
            goal_text: None,
            prior_steps,
            partial_word: None,
        }
    }

    /// Logs every client call made since the last flush.
    fn flush_llm(&mut self, kind: QueryKind) {
        for call in self.llm.drain() {
            let (text, mean_logprob) = match &call.result {
                Ok(r) => (r.text.clone(), r.mean_logprob),
                Err(e) => (format!("<error: {e}>"), 0.0),
            };
            self.events.push(Event::LlmQuery {
                kind,
                temperature: call.query.temperature,
                max_tokens: call.query.max_tokens,
                top_alternatives: call.query.want_top_alternatives,
                prompt_sha256: fingerprint(&call.query),
                text,
                mean_logprob,
            });
        }
    }

    fn show(&mut self, kind: QueryKind, ranked: &[LlmResponse]) {
        let topic = match kind {
            QueryKind::Goal => Topic::Goal,
            QueryKind::Action => Topic::Action,
        };
        if self.config.instructor_enabled {
            let items: Vec<(String, f64)> = ranked.iter().map(|r| (r.text.clone(), r.probability())).collect();
            self.instructor.show_candidates(topic, &items);
        }
        for (i, r) in ranked.iter().enumerate() {
            self.events.push(Event::LlmCandidateShown {
                kind,
                rank: i + 1,
                text: r.text.clone(),
                probability: r.probability(),
            });
        }
    }

    fn question(&self, topic: Topic, text: String, focus: &Focus, step: Option<usize>) -> Question {
        let mut q = Question::open(topic, text);
        q.task = Some(focus.task.clone());
        q.category = Some(focus.category.clone());
        q.object = Some(focus.object.clone());
        q.step = step;
        q
    }

    fn goal_question_text(&self, focus: &Focus, candidate: &str) -> String {
        let place = match &focus.place {
            Some((prep, c)) => format!(" {prep} the {c}"),
            None => String::new(),
        };
        let mut chars = candidate.chars();
        let lowered = match chars.next() {
            Some(c) => c.to_lowercase().chain(chars).collect::<String>(),
            None => String::new(),
        };
        format!(
            "[LM] For {} {}{place} is {lowered}?",
            article(&focus.category),
            focus.category
        )
    }

    fn parse_goal_text(&self, text: &str, focus: &Focus, source: GoalSource) -> Result<ConditionalGoal, LanguageError> {
        parse_goal(text, Some(&focus.category), source, &self.lexicon)
    }

    fn obtain_goal(&mut self, focus: &Focus) -> Result<GoalOutcome, SessionError> {
        if self.config.llm_enabled {
            let ctx = self.prompt_context(focus, Vec::new());
            let result = retrieve_potential_goals(&ctx, &mut self.llm);
            self.flush_llm(QueryKind::Goal);
            let ranked = rank(result?);
            self.show(QueryKind::Goal, &ranked);
            if !self.config.instructor_enabled {
                let Some(top) = ranked.first() else {
                    return Ok(GoalOutcome::Failed("language model returned no goal".into()));
                };
                return Ok(match self.parse_goal_text(&top.text, focus, GoalSource::Llm) {
                    Ok(g) => GoalOutcome::Goal(g),
                    Err(e) => GoalOutcome::Failed(format!("uninterpretable goal: {e}")),
                });
            }
            for r in &ranked {
                let mut q = self.question(Topic::Goal, self.goal_question_text(focus, &r.text), focus, None);
                q.llm_tag = true;
                q.candidate = Some(r.text.clone());
                q.probability = Some(r.probability());
                if self.yesno(&q)? {
                    if let Ok(g) = self.parse_goal_text(&r.text, focus, GoalSource::Llm) {
                        return Ok(GoalOutcome::Goal(g));
                    }
                }
            }
        }
        if !self.config.instructor_enabled {
            return Ok(GoalOutcome::Failed("no goal source available".into()));
        }
        let q = self.question(
            Topic::Goal,
            format!("What is the next goal or subtask of {}?", focus.task),
            focus,
            None,
        );
        let text = self.open(&q)?;
        Ok(match self.parse_goal_text(&text, focus, GoalSource::Instructor) {
            Ok(g) => GoalOutcome::Goal(g),
            Err(e) => GoalOutcome::Failed(format!("uninterpretable instruction: {e}")),
        })
    }

    /// Why `goal` can never hold here, if that is evident from affordances.
    fn unachievable(&self, goal: &ConditionalGoal) -> Option<String> {
        for p in &goal.predicates {
            match p {
                GoalPredicate::Property {
                    subject: Term::Category(c),
                    property,
                } => {
                    let needed = match property {
                        Property::Open | Property::Closed => Some(Affordance::Openable),
                        _ => None,
                    };
                    let mut objs = self.world.objects_of_category(c).peekable();
                    if objs.peek().is_none() {
                        return Some(format!("there is no {c}"));
                    }
                    if let Some(aff) = needed {
                        if objs.all(|o| !self.world.has_affordance(o, aff) && !self.world.has_property(o, *property)) {
                            return Some(format!("a {c} cannot be {property}"));
                        }
                    }
                }
                GoalPredicate::In { container, .. } => {
                    if self.world.objects_of_category(container).next().is_none() {
                        return Some(format!("there is no {container}"));
                    }
                }
                GoalPredicate::Property { .. } => {}
            }
        }
        None
    }

    fn pursue(&mut self, focus: &Focus, goal: &ConditionalGoal) -> Result<(), SessionError> {
        let obj = &focus.object;
        let start_state = self.world.clone();
        let goal_text = render_goal_with(goal, &self.lexicon);
        let mut trace: Vec<PrimitiveAction> = Vec::new();
        let mut prior_steps: Vec<String> = Vec::new();
        let mut queue: VecDeque<(PrimitiveAction, String, ActionSource)> = VecDeque::new();
        let mut rounds = 0;

        while !satisfied(goal, obj, &self.world) {
            if rounds == self.config.step_ceiling {
                self.events.push(Event::ObjectFailed {
                    object: obj.clone(),
                    reason: format!("step ceiling of {} reached", self.config.step_ceiling),
                });
                return Ok(());
            }
            rounds += 1;

            if let Some(a) = self
                .knowledge
                .match_rules(&self.world, &focus.task, goal, obj)
                .into_iter()
                .next()
            {
                let text = render_action(&a, &self.world);
                queue.push_back((a, text, ActionSource::Policy));
            }
            if queue.is_empty() && self.config.search_depth > 0 {
                let (result, stats) = plan_with_stats(&self.world, goal, obj, self.config.search_depth);
                self.events.push(Event::Search {
                    object: obj.clone(),
                    max_depth: self.config.search_depth,
                    found: result.is_ok(),
                    plan_length: result.as_ref().ok().map(|p| p.steps.len()),
                    expanded: stats.expanded,
                });
                match result {
                    Ok(plan) => {
                        let mut s = self.world.clone();
                        for a in plan.steps {
                            let text = render_action(&a, &s);
                            s = apply(&s, &a).expect("planner returns applicable steps");
                            queue.push_back((a, text, ActionSource::Search));
                        }
                    }
                    Err(_) if !self.config.instructor_enabled => {
                        let reason = match self.unachievable(goal) {
                            Some(why) => format!("unachievable goal: {why}"),
                            None => format!("no plan within depth {}", self.config.search_depth),
                        };
                        self.events.push(Event::ObjectFailed {
                            object: obj.clone(),
                            reason,
                        });
                        return Ok(());
                    }
                    Err(_) => {}
                }
            }
            if queue.is_empty() {
                if !self.config.instructor_enabled {
                    self.events.push(Event::ObjectFailed {
                        object: obj.clone(),
                        reason: "no action source available".into(),
                    });
                    return Ok(());
                }
                let step = trace.len() + 1;
                match self.elicit_action(focus, &goal_text, &prior_steps, step)? {
                    Elicited::Action(a, text, source) => queue.push_back((a, text, source)),
                    Elicited::Locomotion(text, source) => {
                        self.events.push(Event::ActionFailed {
                            text: text.clone(),
                            source,
                            reason: "locomotion is implicit".into(),
                        });
                        prior_steps.push(text);
                    }
                    Elicited::Nothing(text, reason) => self.events.push(Event::ActionFailed {
                        text,
                        source: ActionSource::Instructor,
                        reason,
                    }),
                }
            }
            self.execute_actions(&mut queue, &mut trace, &mut prior_steps);
        }

        self.events.push(Event::ObjectCompleted { object: obj.clone() });
        let episode = Episode {
            task: focus.task.clone(),
            object: obj.clone(),
            goal: goal.clone(),
            goal_id: KnowledgeStore::goal_id(&focus.task, &focus.category),
            start_state,
            trace,
        };
        // a trace that replays cleanly always generalizes
        if let Ok(new_rules) = self.knowledge.learn_from(&episode) {
            self.events.push(Event::RulesLearned {
                object: obj.clone(),
                new_rules,
                total_rules: self.knowledge.rules.len(),
            });
        }
        Ok(())
    }

    /// Applies queued actions in order; stops at the first inapplicable one
    /// and drops the rest of the queue.
    fn execute_actions(
        &mut self,
        queue: &mut VecDeque<(PrimitiveAction, String, ActionSource)>,
        trace: &mut Vec<PrimitiveAction>,
        prior_steps: &mut Vec<String>,
    ) {
        while let Some((action, text, source)) = queue.pop_front() {
            match apply(&self.world, &action) {
                Ok(next) => {
                    self.world = next;
                    self.events.push(Event::ActionExecuted {
                        action: action.clone(),
                        text: text.clone(),
                        source,
                    });
                    trace.push(action);
                    prior_steps.push(text);
                }
                Err(e) => {
                    self.events.push(Event::ActionFailed {
                        text,
                        source,
                        reason: e.to_string(),
                    });
                    queue.clear();
                }
            }
        }
    }

    fn elicit_action(
        &mut self,
        focus: &Focus,
        goal_text: &str,
        prior_steps: &[String],
        step: usize,
    ) -> Result<Elicited, SessionError> {
        if self.config.llm_enabled {
            let ctx = self.prompt_context(focus, prior_steps.to_vec());
            let result = retrieve_actions(goal_text, &ctx, &self.known_verbs, &mut self.llm);
            self.flush_llm(QueryKind::Action);
            let ranked = match result {
                Ok(r) => {
                    self.events.push(Event::LlmFirstWords { words: r.first_words });
                    rank(r.responses)
                }
                Err(GatewayError::EmptyAfterFiltering { first_words }) => {
                    self.events.push(Event::LlmFirstWords { words: first_words });
                    Vec::new()
                }
                Err(e) => return Err(e.into()),
            };
            self.show(QueryKind::Action, &ranked);
            for r in &ranked {
                let text = format!("[LM] For the {} should I `{}'?", focus.category, r.text);
                let mut q = self.question(Topic::Action, text, focus, Some(step));
                q.llm_tag = true;
                q.candidate = Some(r.text.clone());
                q.probability = Some(r.probability());
                if !self.yesno(&q)? {
                    continue;
                }
                match parse_action(&r.text, &self.world, &self.lexicon, Some(&focus.object)) {
                    Ok(a) if applicable(&self.world, &a) => {
                        return Ok(Elicited::Action(a, r.text.clone(), ActionSource::Llm))
                    }
                    Ok(_) => self.events.push(Event::ActionFailed {
                        text: r.text.clone(),
                        source: ActionSource::Llm,
                        reason: "not applicable in the current state".into(),
                    }),
                    Err(LanguageError::Locomotion(_)) => {
                        return Ok(Elicited::Locomotion(r.text.clone(), ActionSource::Llm))
                    }
                    Err(e) => self.events.push(Event::ActionFailed {
                        text: r.text.clone(),
                        source: ActionSource::Llm,
                        reason: e.to_string(),
                    }),
                }
            }
        }
        let q = self.question(
            Topic::Action,
            format!("What do I do next for {}?", focus.task),
            focus,
            Some(step),
        );
        let text = self.open(&q)?;
        Ok(
            match parse_action(&text, &self.world, &self.lexicon, Some(&focus.object)) {
                Ok(a) if applicable(&self.world, &a) => {
                    let rendered = render_action(&a, &self.world);
                    Elicited::Action(a, rendered, ActionSource::Instructor)
                }
                Ok(_) => Elicited::Nothing(text, "not applicable in the current state".into()),
                Err(LanguageError::Locomotion(_)) => Elicited::Locomotion(text, ActionSource::Instructor),
                Err(e) => Elicited::Nothing(text, e.to_string()),
            },
        )
    }
}

enum Elicited {
    Action(PrimitiveAction, String, ActionSource),
    Locomotion(String, ActionSource),
    Nothing(String, String),
}
