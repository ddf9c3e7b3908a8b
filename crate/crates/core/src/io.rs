//! Plain-text model format.
//!
//! ```text
//! # comment
//! ctmdp
//! states <N>
//! initial <id>
//! goal <id> [<id> ...]
//! transition <s> <label> <s'> <rate>
//! ```
//!
//! `ctmdp` comes first; the three headers follow in any order, each exactly
//! once, before the first transition.

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::model::{CtmdpModel, ModelDraft, Violation};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in content.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token {
                    text: &content[s..i],
                    column: content[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &content[s..],
            column: content[..s].chars().count() + 1,
        });
    }
    out
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

fn parse_id(tok: &Token<'_>, line: usize, what: &str) -> Result<usize, ParseError> {
    if !tok.text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err(line, tok.column, format!("expected {what} id, found {:?}", tok.text)));
    }
    tok.text
        .parse()
        .map_err(|_| err(line, tok.column, format!("{what} id {:?} too large", tok.text)))
}

fn expect_arity(toks: &[Token<'_>], n: usize, line: usize, usage: &str) -> Result<(), ParseError> {
    if toks.len() != n {
        let col = toks.get(n).or(toks.last()).map_or(1, |t| t.column);
        return Err(err(line, col, format!("expected `{usage}`")));
    }
    Ok(())
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<CtmdpModel, ParseError> {
    let mut seen_magic = false;
    let mut states: Option<usize> = None;
    let mut initial: Option<(usize, usize, usize)> = None;
    let mut goals: Option<Vec<(usize, usize, usize)>> = None;
    let mut draft = ModelDraft::default();
    let mut positions: Vec<(usize, usize)> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let toks = tokens(raw);
        let Some(head) = toks.first() else { continue };
        if !seen_magic {
            if head.text != "ctmdp" || toks.len() != 1 {
                return Err(err(line, head.column, "document must start with `ctmdp`"));
            }
            seen_magic = true;
            continue;
        }
        match head.text {
            "states" => {
                if states.is_some() {
                    return Err(err(line, head.column, "duplicate `states` header"));
                }
                expect_arity(&toks, 2, line, "states <N>")?;
                states = Some(parse_id(&toks[1], line, "state count")?);
            }
            "initial" => {
                if initial.is_some() {
                    return Err(err(line, head.column, "duplicate `initial` header"));
                }
                expect_arity(&toks, 2, line, "initial <id>")?;
                initial = Some((parse_id(&toks[1], line, "state")?, line, toks[1].column));
            }
            "goal" => {
                if goals.is_some() {
                    return Err(err(line, head.column, "duplicate `goal` header"));
                }
                let ids = toks[1..]
                    .iter()
                    .map(|t| parse_id(t, line, "state").map(|id| (id, line, t.column)))
                    .collect::<Result<Vec<_>, _>>()?;
                goals = Some(ids);
            }
            "transition" => {
                for (name, present) in [
                    ("states", states.is_some()),
                    ("initial", initial.is_some()),
                    ("goal", goals.is_some()),
                ] {
                    if !present {
                        return Err(err(
                            line,
                            head.column,
                            format!("missing `{name}` header before transitions"),
                        ));
                    }
                }
                expect_arity(&toks, 5, line, "transition <s> <label> <s'> <rate>")?;
                let source = parse_id(&toks[1], line, "source")?;
                let target = parse_id(&toks[3], line, "target")?;
                let rate: f64 = toks[4].text.parse().map_err(|_| {
                    err(line, toks[4].column, format!("invalid rate {:?}", toks[4].text))
                })?;
                draft.transition(source, toks[2].text, target, rate);
                positions.push((line, head.column));
            }
            other => {
                return Err(err(line, head.column, format!("unknown record `{other}`")));
            }
        }
    }

    let eof = last_line.max(1);
    if !seen_magic {
        return Err(err(eof, 1, "document must start with `ctmdp`"));
    }
    let n = states.ok_or_else(|| err(eof, 1, "missing `states` header"))?;
    let (init, init_line, init_col) = initial.ok_or_else(|| err(eof, 1, "missing `initial` header"))?;
    let goals = goals.ok_or_else(|| err(eof, 1, "missing `goal` header"))?;
    draft.num_states = n;
    draft.initial = init;
    draft.goals = goals.iter().map(|g| g.0).collect();

    if let Err(violations) = crate::model::validate(&draft) {
        let v = &violations[0];
        let (line, column) = locate(v, &draft, &positions, (init_line, init_col), &goals, eof);
        return Err(err(line, column, v.to_string()));
    }
    Ok(CtmdpModel::from_draft(&draft).expect("validated draft builds"))
}

fn locate(
    v: &Violation,
    draft: &ModelDraft,
    positions: &[(usize, usize)],
    initial: (usize, usize),
    goals: &[(usize, usize, usize)],
    eof: usize,
) -> (usize, usize) {
    let find = |pred: &dyn Fn(&crate::model::TransitionRecord) -> bool| {
        // The last matching record is the offending one for duplicates.
        draft
            .transitions
            .iter()
            .zip(positions)
            .filter(|(t, _)| pred(t))
            .map(|(_, p)| *p)
            .last()
    };
    let pos = match v {
        Violation::InitialOutOfRange { .. } => Some(initial),
        Violation::GoalOutOfRange { goal } => goals
            .iter()
            .find(|g| g.0 == *goal)
            .map(|g| (g.1, g.2)),
        Violation::StateOutOfRange { source, target } => {
            find(&|t| t.source == *source && t.target == *target)
        }
        Violation::InvalidLabel { state, label } => {
            find(&|t| t.source == *state && t.label == *label)
        }
        Violation::NonPositiveRate {
            source,
            label,
            target,
            ..
        }
        | Violation::DuplicateTransition {
            source,
            label,
            target,
        } => find(&|t| t.source == *source && t.label == *label && t.target == *target),
        Violation::NoStates | Violation::NoEnabledAction { .. } => None,
    };
    pos.unwrap_or((eof, 1))
}

/// Canonical text: headers in fixed order, transitions sorted by
/// (source, label, target), rates in shortest round-trip notation.
pub fn serialize_model(model: &CtmdpModel) -> String {
    let mut out = String::new();
    out.push_str("ctmdp\n");
    let _ = writeln!(out, "states {}", model.num_states());
    let _ = writeln!(out, "initial {}", model.initial());
    out.push_str("goal");
    for g in model.goal_states() {
        let _ = write!(out, " {g}");
    }
    out.push('\n');
    for s in model.states() {
        for a in model.actions(s) {
            for t in a.transitions() {
                let _ = writeln!(out, "transition {s} {} {} {}", a.label(), t.target, t.rate);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateId;

    const MINIMAL: &str = "ctmdp\nstates 1\ninitial 0\ngoal 0\ntransition 0 x 0 1\n";

    #[test]
    fn minimal_document() {
        let m = parse_model(MINIMAL).unwrap();
        assert_eq!(m.num_states(), 1);
        assert!(m.is_goal(StateId(0)));
        assert_eq!(serialize_model(&m), MINIMAL);
    }

    #[test]
    fn comments_blank_lines_and_header_order() {
        let text = "# a model\n\nctmdp # magic\ngoal\ninitial 1\nstates 2\n\
                    transition 1 b 0 2.5e-1\ntransition 0 a 1 3\ntransition 1 a 0 1\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.goal_states().count(), 0);
        assert_eq!(m.exit_rate(StateId(1), "b").unwrap(), 0.25);
        let canon = serialize_model(&m);
        assert_eq!(
            canon,
            "ctmdp\nstates 2\ninitial 1\ngoal\ntransition 0 a 1 3\n\
             transition 1 a 0 1\ntransition 1 b 0 0.25\n"
        );
        assert_eq!(serialize_model(&parse_model(&canon).unwrap()), canon);
    }

    #[test]
    fn missing_initial_is_named() {
        let e = parse_model("ctmdp\nstates 1\ngoal 0\n").unwrap_err();
        assert!(e.message.contains("initial"), "{e}");
        let e = parse_model("ctmdp\nstates 1\ngoal 0\ntransition 0 x 0 1\n").unwrap_err();
        assert!(e.message.contains("initial"), "{e}");
        assert_eq!((e.line, e.column), (4, 1));
    }

    #[test]
    fn magic_must_come_first() {
        let e = parse_model("states 1\nctmdp\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_model("").is_err());
        assert!(parse_model("# only comments\n").is_err());
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse_model("ctmdp\nstates 2\ninitial 0\ngoal 1\ntransition 0 a 1 fast\n").unwrap_err();
        assert_eq!((e.line, e.column), (5, 18));
        let e = parse_model("ctmdp\nstates x\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 8));
        let e = parse_model("ctmdp\nstates 2\nstates 2\n").unwrap_err();
        assert!(e.message.contains("duplicate"));
        let e = parse_model("ctmdp\nfoo\n").unwrap_err();
        assert!(e.message.contains("unknown record"));
        let e = parse_model("ctmdp\nstates 1\ninitial 0\ngoal\ntransition 0 a 0\n").unwrap_err();
        assert_eq!(e.line, 5);
    }

    #[test]
    fn semantic_errors_point_at_records() {
        let dup = "ctmdp\nstates 2\ninitial 0\ngoal 1\ntransition 0 a 1 1\n\
                   transition 1 a 1 1\ntransition 0 a 1 2\n";
        let e = parse_model(dup).unwrap_err();
        assert_eq!(e.line, 7);
        assert!(e.message.contains("duplicate"));

        let range = "ctmdp\nstates 2\ninitial 0\ngoal 1\ntransition 0 a 5 1\ntransition 1 a 1 1\n";
        assert_eq!(parse_model(range).unwrap_err().line, 5);

        let no_action = "ctmdp\nstates 3\ninitial 0\ngoal 1\ntransition 0 a 1 1\ntransition 1 a 1 1\n";
        let e = parse_model(no_action).unwrap_err();
        assert_eq!(e.message, "state 2 has no enabled action");

        let zero = "ctmdp\nstates 1\ninitial 0\ngoal\ntransition 0 a 0 0\n";
        let e = parse_model(zero).unwrap_err();
        assert!(e.message.contains("non-positive rate"));
        assert_eq!(e.line, 5);

        let bad_goal = "ctmdp\nstates 1\ninitial 0\ngoal 0 4\ntransition 0 a 0 1\n";
        assert_eq!(parse_model(bad_goal).unwrap_err().column, 8);
    }
}
