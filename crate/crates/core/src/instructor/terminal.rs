use super::{Instructor, InstructorError, Question, Topic};
use crate::llm::format_probability;
use crate::world::WorldState;
use std::io::{BufRead, Write};

/// Plain line-oriented dialogue for headless interactive use.
pub struct TerminalInstructor<R, W> {
    input: R,
    output: W,
}

impl TerminalInstructor<std::io::StdinLock<'static>, std::io::Stdout> {
    pub fn stdio() -> Self {
        TerminalInstructor::new(std::io::stdin().lock(), std::io::stdout())
    }
}

impl<R: BufRead, W: Write> TerminalInstructor<R, W> {
    pub fn new(input: R, output: W) -> Self {
        TerminalInstructor { input, output }
    }

    fn io(e: std::io::Error) -> InstructorError {
        InstructorError::Io(e.to_string())
    }

    fn prompt(&mut self, text: &str) -> Result<String, InstructorError> {
        writeln!(self.output, "Agent: {text}").map_err(Self::io)?;
        write!(self.output, "> ").map_err(Self::io)?;
        self.output.flush().map_err(Self::io)?;
        let mut line = String::new();
        if self.input.read_line(&mut line).map_err(Self::io)? == 0 {
            return Err(InstructorError::Closed("end of input".into()));
        }
        Ok(line.trim().to_string())
    }
}

impl<R: BufRead, W: Write> Instructor for TerminalInstructor<R, W> {
    fn ask_yesno(&mut self, q: &Question, _world: &WorldState) -> Result<bool, InstructorError> {
        let mut text = q.text.clone();
        loop {
            match self.prompt(&text)?.to_lowercase().trim_end_matches('.') {
                "y" | "yes" => return Ok(true),
                "n" | "no" => return Ok(false),
                _ => text = "Please answer yes or no.".into(),
            }
        }
    }

    fn ask_open(&mut self, q: &Question, _world: &WorldState) -> Result<String, InstructorError> {
        loop {
            let answer = self.prompt(&q.text)?;
            if !answer.is_empty() {
                return Ok(answer);
            }
        }
    }

    fn show_candidates(&mut self, topic: Topic, candidates: &[(String, f64)]) {
        let label = if topic == Topic::Goal { "goals" } else { "actions" };
        let _ = writeln!(self.output, "[LM] candidate {label}:");
        for (text, p) in candidates {
            let _ = writeln!(self.output, "  {} {text}", format_probability(*p));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_world;

    #[test]
    fn reprompts_until_yes_or_no() {
        let w = load_world(r#"{"schema_version":1,"room":{"id":"k","category":"kitchen"},"objects":[]}"#).unwrap();
        let mut out = Vec::new();
        let mut t = TerminalInstructor::new("maybe\nYes.\nPick up the plate.\n".as_bytes(), &mut out);
        let q = Question::open(Topic::Action, "What do I do next for clear?");
        assert!(t.ask_yesno(&q, &w).unwrap());
        assert_eq!(t.ask_open(&q, &w).unwrap(), "Pick up the plate.");
        assert!(matches!(t.ask_open(&q, &w), Err(InstructorError::Closed(_))));
        let shown = String::from_utf8(out).unwrap();
        assert!(shown.contains("Please answer yes or no."));
    }
}
