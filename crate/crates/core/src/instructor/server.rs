//! Live session server for the instructor console.
//!
//! The console connects to `GET /session` with a WebSocket. Every frame
//! is one JSON text message tagged by `type`; see [`ServerMessage`] and
//! [`ClientMessage`]. The protocol number in `hello` is [`PROTOCOL_VERSION`].
//!
//! Server to console:
//!
//! ```json
//! {"type":"hello","protocol":1,"session":"plate"}
//! {"type":"world","objects":[{"id":"table-1","category":"table", ...}]}
//! {"type":"turn","turn":{"direction":"agent_to_instructor","kind":"yesno_question","text":"[LM] ...","llm_tag":true}}
//! {"type":"candidates","topic":"goal","items":[{"text":"...","probability":"0.915"}]}
//! {"type":"question","id":4,"answer":"yesno","text":"[LM] ...","llm_tag":true}
//! {"type":"error","message":"duplicate answer for question 4"}
//! {"type":"finished","summary":{...}}
//! ```
//!
//! Console to server:
//!
//! ```json
//! {"type":"answer","id":4,"yes":false}
//! {"type":"answer","id":5,"text":"If the object is a ceramic-plate then ..."}
//! {"type":"control","action":"resume"}
//! {"type":"control","action":"quit"}
//! ```
//!
//! One console drives a session at a time; a second connection is refused.
//! On reconnect the server replays the dialogue so far and the pending
//! question. A repeated answer to an already answered question gets an
//! `error` reply; malformed frames, answers to unknown questions and answers
//! of the wrong kind close the connection and end the session.

use super::{yesno_text, DialogueTurn, Instructor, InstructorError, Question, Topic, TurnKind};
use crate::llm::format_probability;
use crate::world::{WorldObject, WorldState};
use axum::extract::ws::{close_code, CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};
use tokio::sync::broadcast;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Yesno,
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateView {
    pub text: String,
    /// Fixed three-decimal rendering.
    pub probability: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        protocol: u32,
        session: String,
    },
    World {
        objects: Vec<WorldObject>,
    },
    Turn {
        turn: DialogueTurn,
    },
    Candidates {
        topic: Topic,
        items: Vec<CandidateView>,
    },
    Question {
        id: u64,
        answer: AnswerKind,
        text: String,
        llm_tag: bool,
    },
    Error {
        message: String,
    },
    Finished {
        summary: serde_json::Value,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    Resume,
    Quit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Answer {
        id: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        yes: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    Control {
        action: ControlAction,
    },
}

#[derive(Debug, Clone)]
enum Answer {
    Yes(bool),
    Text(String),
}

struct Pending {
    id: u64,
    kind: AnswerKind,
    message: ServerMessage,
}

#[derive(Default)]
struct HubState {
    history: Vec<ServerMessage>,
    world: Option<ServerMessage>,
    pending: Option<Pending>,
    answer: Option<(u64, Answer)>,
    answered: BTreeSet<u64>,
    next_id: u64,
    console: bool,
    closed: Option<String>,
    finished: Option<ServerMessage>,
}

/// What the connection task should do after an inbound frame.
enum Reply {
    Nothing,
    Send(Vec<ServerMessage>),
    Close(String),
}

/// Shared state between the blocking agent side and the console socket.
pub struct Hub {
    session: String,
    state: Mutex<HubState>,
    answered: Condvar,
    outbound: broadcast::Sender<ServerMessage>,
}

impl Hub {
    pub fn new(session: impl Into<String>) -> Arc<Hub> {
        let (outbound, _) = broadcast::channel(1024);
        Arc::new(Hub {
            session: session.into(),
            state: Mutex::new(HubState::default()),
            answered: Condvar::new(),
            outbound,
        })
    }

    fn lock(&self) -> MutexGuard<'_, HubState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn publish(&self, st: &mut HubState, msg: ServerMessage) {
        match &msg {
            ServerMessage::World { .. } => st.world = Some(msg.clone()),
            ServerMessage::Finished { .. } => st.finished = Some(msg.clone()),
            ServerMessage::Question { .. } | ServerMessage::Error { .. } | ServerMessage::Hello { .. } => {}
            _ => st.history.push(msg.clone()),
        }
        // no subscriber just means no console is attached right now
        let _ = self.outbound.send(msg);
    }

    fn replay(&self, st: &HubState) -> Vec<ServerMessage> {
        let mut out = vec![ServerMessage::Hello {
            protocol: PROTOCOL_VERSION,
            session: self.session.clone(),
        }];
        out.extend(st.history.iter().cloned());
        out.extend(st.world.iter().cloned());
        out.extend(st.pending.as_ref().map(|p| p.message.clone()));
        out.extend(st.finished.iter().cloned());
        out
    }

    fn attach(&self) -> Result<(Vec<ServerMessage>, broadcast::Receiver<ServerMessage>), String> {
        let mut st = self.lock();
        if st.console {
            return Err("session already has a console".into());
        }
        if let Some(reason) = &st.closed {
            return Err(format!("session closed: {reason}"));
        }
        st.console = true;
        Ok((self.replay(&st), self.outbound.subscribe()))
    }

    fn detach(&self) {
        self.lock().console = false;
    }

    /// Ends the session; a blocked question returns [`InstructorError::Closed`].
    pub fn close(&self, reason: impl Into<String>) {
        let mut st = self.lock();
        st.closed.get_or_insert_with(|| reason.into());
        self.answered.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed.is_some()
    }

    pub fn console_attached(&self) -> bool {
        self.lock().console
    }

    /// Publishes the session summary to the console.
    pub fn finish(&self, summary: serde_json::Value) {
        let mut st = self.lock();
        self.publish(&mut st, ServerMessage::Finished { summary });
    }

    pub fn instructor(self: &Arc<Self>, timeout: Duration) -> ChannelInstructor {
        ChannelInstructor {
            hub: Arc::clone(self),
            timeout,
        }
    }

    fn violation(&self, st: &mut HubState, reason: String) -> Reply {
        st.closed.get_or_insert_with(|| format!("protocol violation: {reason}"));
        self.answered.notify_all();
        Reply::Close(reason)
    }

    fn binary_frame(&self) -> String {
        let reason = "binary frames are not part of the protocol".to_string();
        let mut st = self.lock();
        self.violation(&mut st, reason.clone());
        reason
    }

    fn handle(&self, text: &str) -> Reply {
        let mut st = self.lock();
        let msg: ClientMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => return self.violation(&mut st, format!("malformed message: {e}")),
        };
        match msg {
            ClientMessage::Control {
                action: ControlAction::Resume,
            } => Reply::Send(self.replay(&st)),
            ClientMessage::Control {
                action: ControlAction::Quit,
            } => {
                st.closed.get_or_insert_with(|| "instructor quit".into());
                self.answered.notify_all();
                Reply::Close("instructor quit".into())
            }
            ClientMessage::Answer { id, yes, text } => {
                if st.answered.contains(&id) {
                    return Reply::Send(vec![ServerMessage::Error {
                        message: format!("duplicate answer for question {id}"),
                    }]);
                }
                let Some(pending) = st.pending.as_ref().filter(|p| p.id == id) else {
                    return self.violation(&mut st, format!("answer to unknown question {id}"));
                };
                let answer = match (pending.kind, yes, text) {
                    (AnswerKind::Yesno, Some(y), None) => Answer::Yes(y),
                    (AnswerKind::Open, None, Some(t)) if !t.trim().is_empty() => Answer::Text(t),
                    _ => return self.violation(&mut st, format!("wrong answer kind for question {id}")),
                };
                st.pending = None;
                st.answered.insert(id);
                st.answer = Some((id, answer));
                self.answered.notify_all();
                Reply::Nothing
            }
        }
    }
}

/// An [`Instructor`] whose answers come from the attached console.
pub struct ChannelInstructor {
    hub: Arc<Hub>,
    timeout: Duration,
}

impl ChannelInstructor {
    fn ask(&mut self, q: &Question, kind: AnswerKind, world: &WorldState) -> Result<Answer, InstructorError> {
        let hub = &self.hub;
        let mut st = hub.lock();
        if let Some(reason) = &st.closed {
            return Err(InstructorError::Closed(reason.clone()));
        }
        st.next_id += 1;
        let id = st.next_id;
        hub.publish(
            &mut st,
            ServerMessage::World {
                objects: world.objects().collect(),
            },
        );
        let turn_kind = match kind {
            AnswerKind::Yesno => TurnKind::YesnoQuestion,
            AnswerKind::Open => TurnKind::OpenQuestion,
        };
        hub.publish(
            &mut st,
            ServerMessage::Turn {
                turn: DialogueTurn::agent(turn_kind, q.text.clone(), q.llm_tag),
            },
        );
        let message = ServerMessage::Question {
            id,
            answer: kind,
            text: q.text.clone(),
            llm_tag: q.llm_tag,
        };
        st.pending = Some(Pending {
            id,
            kind,
            message: message.clone(),
        });
        hub.publish(&mut st, message);

        let deadline = Instant::now() + self.timeout;
        loop {
            if let Some((aid, answer)) = st.answer.take() {
                if aid == id {
                    let text = match &answer {
                        Answer::Yes(y) => yesno_text(*y).to_string(),
                        Answer::Text(t) => t.clone(),
                    };
                    let reply_kind = if kind == AnswerKind::Yesno {
                        TurnKind::Answer
                    } else {
                        TurnKind::Utterance
                    };
                    hub.publish(
                        &mut st,
                        ServerMessage::Turn {
                            turn: DialogueTurn::instructor(reply_kind, text),
                        },
                    );
                    return Ok(answer);
                }
            }
            if let Some(reason) = &st.closed {
                return Err(InstructorError::Closed(reason.clone()));
            }
            let now = Instant::now();
            if now >= deadline {
                st.pending = None;
                return Err(InstructorError::Timeout(self.timeout.as_secs()));
            }
            st = hub
                .answered
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
    }
}

impl Instructor for ChannelInstructor {
    fn ask_yesno(&mut self, q: &Question, world: &WorldState) -> Result<bool, InstructorError> {
        match self.ask(q, AnswerKind::Yesno, world)? {
            Answer::Yes(y) => Ok(y),
            Answer::Text(_) => unreachable!("hub checks answer kinds"),
        }
    }

    fn ask_open(&mut self, q: &Question, world: &WorldState) -> Result<String, InstructorError> {
        match self.ask(q, AnswerKind::Open, world)? {
            Answer::Text(t) => Ok(t),
            Answer::Yes(_) => unreachable!("hub checks answer kinds"),
        }
    }

    fn show_candidates(&mut self, topic: Topic, candidates: &[(String, f64)]) {
        let items = candidates
            .iter()
            .map(|(text, p)| CandidateView {
                text: text.clone(),
                probability: format_probability(*p),
            })
            .collect();
        let mut st = self.hub.lock();
        self.hub.publish(&mut st, ServerMessage::Candidates { topic, items });
    }
}

pub fn router(hub: Arc<Hub>) -> Router {
    Router::new().route("/session", get(upgrade)).with_state(hub)
}

/// Serves the console endpoint until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, hub: Arc<Hub>) -> std::io::Result<()> {
    axum::serve(listener, router(hub)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(hub): State<Arc<Hub>>) -> Response {
    ws.on_upgrade(move |socket| console(socket, hub))
}

fn frame(msg: &ServerMessage) -> Message {
    Message::Text(serde_json::to_string(msg).expect("server messages serialize").into())
}

async fn close_with(socket: &mut WebSocket, code: u16, reason: String) {
    let _ = socket
        .send(frame(&ServerMessage::Error {
            message: reason.clone(),
        }))
        .await;
    let _ = socket
        .send(Message::Close(Some(CloseFrame {
            code,
            reason: reason.into(),
        })))
        .await;
}

async fn console(mut socket: WebSocket, hub: Arc<Hub>) {
    let (replay, mut rx) = match hub.attach() {
        Ok(x) => x,
        Err(reason) => return close_with(&mut socket, close_code::POLICY, reason).await,
    };
    let mut alive = true;
    for msg in &replay {
        if socket.send(frame(msg)).await.is_err() {
            alive = false;
            break;
        }
    }
    while alive {
        tokio::select! {
            out = rx.recv() => match out {
                Ok(msg) => alive = socket.send(frame(&msg)).await.is_ok(),
                Err(broadcast::error::RecvError::Lagged(_)) => {
                    close_with(&mut socket, close_code::AGAIN, "console fell behind; reconnect to resume".into()).await;
                    alive = false;
                }
                Err(broadcast::error::RecvError::Closed) => alive = false,
            },
            inbound = socket.recv() => match inbound {
                Some(Ok(Message::Text(text))) => match hub.handle(text.as_str()) {
                    Reply::Nothing => {}
                    Reply::Send(msgs) => {
                        for m in &msgs {
                            if socket.send(frame(m)).await.is_err() {
                                alive = false;
                                break;
                            }
                        }
                    }
                    Reply::Close(reason) => {
                        close_with(&mut socket, close_code::POLICY, reason).await;
                        alive = false;
                    }
                },
                Some(Ok(Message::Binary(_))) => {
                    let reason = hub.binary_frame();
                    close_with(&mut socket, close_code::POLICY, reason).await;
                    alive = false;
                }
                Some(Ok(Message::Ping(_) | Message::Pong(_))) => {}
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => alive = false,
            },
        }
    }
    hub.detach();
}
