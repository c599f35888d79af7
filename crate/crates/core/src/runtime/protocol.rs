//! Line protocol of the `run-shield` command.
//!
//! Inbound lines are `IN <label> @ <time>`, `OUT <label> @ <time>` and
//! `TICK @ <time>`, with times written as integers, fractions (`7/2`) or
//! decimals (`3.5`). Blank lines and lines starting with `#` are skipped.

use crate::error::{Error, Result};
use crate::Time;

use super::{Event, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Event(Event),
    Tick(Time),
}

fn bad(line: &str, message: impl Into<String>) -> Error {
    Error::Parse { path: format!("line `{line}`"), message: message.into() }
}

pub fn parse_time(s: &str) -> Option<Time> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        return (d > 0).then(|| Time::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        let den = 10i64.checked_pow(frac.len() as u32)?;
        let f = Time::new(frac.parse().ok()?, den);
        return Some(if neg { Time::from_integer(whole) - f } else { Time::from_integer(whole) + f });
    }
    s.parse().ok().map(Time::from_integer)
}

/// Parses one inbound line; `Ok(None)` for blank and comment lines.
pub fn parse_command(line: &str) -> Result<Option<Command>> {
    let t = line.trim();
    if t.is_empty() || t.starts_with('#') {
        return Ok(None);
    }
    let (head, time) = t.split_once('@').ok_or_else(|| bad(line, "missing `@ <time>`"))?;
    let time = parse_time(time).ok_or_else(|| bad(line, "invalid time"))?;
    if time < Time::from_integer(0) {
        return Err(bad(line, "negative time"));
    }
    let words: Vec<&str> = head.split_whitespace().collect();
    match words.as_slice() {
        ["TICK"] => Ok(Some(Command::Tick(time))),
        ["IN", l] => Ok(Some(Command::Event(Event::input(*l, time)))),
        ["OUT", l] => Ok(Some(Command::Event(Event::output(*l, time)))),
        _ => Err(bad(line, "expected `IN`, `OUT` or `TICK`")),
    }
}

pub fn format_verdict(v: &Verdict) -> String {
    match v {
        Verdict::Pass(_) => "PASS".to_string(),
        Verdict::Correct(l) => format!("CORRECT {l}"),
        Verdict::Suppress => "SUPPRESS".to_string(),
        Verdict::Emit(l, t) => format!("EMIT {l} @ {t}"),
        Verdict::Act(a) => {
            let labels: Vec<&str> = a.actions.iter().map(String::as_str).collect();
            let until = a.valid_until.map_or_else(|| "inf".to_string(), |t| t.to_string());
            format!("ACT {{{}}} delay={} until={until}", labels.join(","), u8::from(a.delay_allowed))
        }
    }
}
