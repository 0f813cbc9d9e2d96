//! `events; period; initialState` trigger conditions.

use crate::diag::{codes, Diagnostic};
use std::fmt;

/// One element of a trigger's event list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventPattern {
    Type(String),
    Before(String),
    After(String),
}

impl EventPattern {
    pub fn is_interception(&self) -> bool {
        !matches!(self, Self::Type(_))
    }

    pub fn operation(&self) -> Option<&str> {
        match self {
            Self::Before(op) | Self::After(op) => Some(op),
            Self::Type(_) => None,
        }
    }
}

impl fmt::Display for EventPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Type(t) => f.write_str(t),
            Self::Before(op) => write!(f, "Before[{op}]"),
            Self::After(op) => write!(f, "After[{op}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerSpec {
    pub events: Vec<EventPattern>,
    /// Minimum gap between the end of one run and the start of the next.
    pub period_micros: Option<u64>,
    pub initial_state: String,
}

impl TriggerSpec {
    pub fn period_seconds(&self) -> f64 {
        self.period_micros.map_or(0.0, micros_to_seconds)
    }

    /// No events listed: the trigger fires whenever the period gate opens.
    pub fn is_periodic(&self) -> bool {
        self.events.is_empty()
    }

    pub fn has_interception(&self) -> bool {
        self.events.iter().any(EventPattern::is_interception)
    }
}

pub fn micros_to_seconds(micros: u64) -> f64 {
    micros as f64 / 1e6
}

/// Formats a duration in microseconds as `10s`, `500ms` or `0.0005s`.
pub fn format_period(micros: u64) -> String {
    if micros % 1_000_000 == 0 {
        format!("{}s", micros / 1_000_000)
    } else if micros % 1000 == 0 {
        format!("{}ms", micros / 1000)
    } else {
        let text = format!("{}.{:06}", micros / 1_000_000, micros % 1_000_000);
        format!("{}s", text.trim_end_matches('0'))
    }
}

/// Parses `10s`, `0.5s`, `250ms`; returns microseconds.
pub fn parse_duration(text: &str) -> Result<u64, Diagnostic> {
    let text = text.trim();
    let digits_end = text
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(digits_end);
    if number.is_empty() {
        return Err(Diagnostic::error(
            codes::TRIG_SYNTAX,
            "",
            format!("malformed period `{text}`"),
        ));
    }
    let scale: u64 = match unit {
        "s" => 1_000_000,
        "ms" => 1000,
        "" => {
            return Err(Diagnostic::error(
                codes::TRIG_UNIT,
                "",
                format!("period `{text}` lacks a unit (s or ms)"),
            ))
        }
        other => {
            return Err(Diagnostic::error(
                codes::TRIG_UNIT,
                "",
                format!("unknown period unit `{other}`"),
            ))
        }
    };
    let (int, frac) = number.split_once('.').unwrap_or((number, ""));
    let bad = || Diagnostic::error(codes::TRIG_SYNTAX, "", format!("malformed period `{text}`"));
    if int.is_empty() || frac.contains('.') || (number.contains('.') && frac.is_empty()) {
        return Err(bad());
    }
    let int: u64 = int.parse().map_err(|_| bad())?;
    let mut frac_micros = 0u64;
    let mut unit_scale = scale;
    for c in frac.chars() {
        unit_scale /= 10;
        let digit = u64::from(c.to_digit(10).ok_or_else(bad)?);
        if unit_scale == 0 {
            if digit != 0 {
                return Err(Diagnostic::error(
                    codes::TRIG_SYNTAX,
                    "",
                    format!("period `{text}` is finer than a microsecond"),
                ));
            }
            continue;
        }
        frac_micros += digit * unit_scale;
    }
    int.checked_mul(scale)
        .and_then(|v| v.checked_add(frac_micros))
        .ok_or_else(bad)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn parse_pattern(item: &str) -> Result<EventPattern, Diagnostic> {
    let syntax = || {
        Diagnostic::error(
            codes::TRIG_SYNTAX,
            "",
            format!("malformed event pattern `{item}`"),
        )
    };
    for (prefix, make) in [
        ("Before[", EventPattern::Before as fn(String) -> EventPattern),
        ("After[", EventPattern::After),
    ] {
        if let Some(rest) = item.strip_prefix(prefix) {
            let op = rest.strip_suffix(']').map(str::trim).ok_or_else(syntax)?;
            return if is_ident(op) {
                Ok(make(op.to_string()))
            } else {
                Err(syntax())
            };
        }
    }
    if is_ident(item) {
        Ok(EventPattern::Type(item.to_string()))
    } else {
        Err(syntax())
    }
}

pub fn parse_trigger(text: &str) -> Result<TriggerSpec, Diagnostic> {
    let mut parts: Vec<&str> = text.split(';').map(str::trim).collect();
    if parts.len() == 4 && parts[3].is_empty() {
        parts.pop();
    }
    if parts.len() != 3 {
        return Err(Diagnostic::error(
            codes::TRIG_SYNTAX,
            "",
            format!("expected `events; period; initialState`, got `{text}`"),
        ));
    }
    let events = if parts[0].is_empty() {
        Vec::new()
    } else {
        parts[0]
            .split(',')
            .map(|e| parse_pattern(e.trim()))
            .collect::<Result<Vec<_>, _>>()?
    };
    let period_micros = if parts[1].is_empty() {
        None
    } else {
        Some(parse_duration(parts[1])?)
    };
    if events.is_empty() && period_micros.is_none() {
        return Err(Diagnostic::error(
            codes::TRIG_EMPTY,
            "",
            "a trigger needs events, a period, or both",
        ));
    }
    let initial_state = parts[2];
    if !is_ident(initial_state) {
        return Err(Diagnostic::error(
            codes::TRIG_SYNTAX,
            "",
            format!("invalid initial state `{initial_state}`"),
        ));
    }
    Ok(TriggerSpec {
        events,
        period_micros,
        initial_state: initial_state.to_string(),
    })
}

impl fmt::Display for TriggerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let events: Vec<String> = self.events.iter().map(ToString::to_string).collect();
        let period = self.period_micros.map(format_period).unwrap_or_default();
        write!(f, "{}; {}; {};", events.join(", "), period, self.initial_state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_period_and_state_trigger() {
        let spec = parse_trigger("RtException; 10s; Monitor;").unwrap();
        assert_eq!(spec.events, vec![EventPattern::Type("RtException".into())]);
        assert_eq!(spec.period_micros, Some(10_000_000));
        assert_eq!(spec.initial_state, "Monitor");
        assert_eq!(spec.to_string(), "RtException; 10s; Monitor;");
    }

    #[test]
    fn trailing_semicolon_is_optional() {
        let spec = parse_trigger("LoadIncrease; 60s; Monitor").unwrap();
        assert_eq!(spec.period_seconds(), 60.0);
        assert_eq!(spec, parse_trigger("LoadIncrease; 60s; Monitor;").unwrap());
    }

    #[test]
    fn empty_trigger_rejected() {
        assert_eq!(parse_trigger("; ; Monitor").unwrap_err().code, codes::TRIG_EMPTY);
    }

    #[test]
    fn units() {
        assert_eq!(parse_trigger("; 10h; Monitor").unwrap_err().code, codes::TRIG_UNIT);
        assert_eq!(parse_trigger("; 10; Monitor").unwrap_err().code, codes::TRIG_UNIT);
        assert_eq!(parse_duration("0.5s").unwrap(), 500_000);
        assert_eq!(parse_duration("250ms").unwrap(), 250_000);
        assert_eq!(parse_duration("1.5ms").unwrap(), 1500);
        assert_eq!(parse_duration("0s").unwrap(), 0);
        assert!(parse_duration("1.s").is_err());
        assert!(parse_duration("1.0000001s").is_err());
    }

    #[test]
    fn interception_patterns() {
        let spec = parse_trigger("After[DeepCheck]; ; CheckStrategies").unwrap();
        assert_eq!(spec.events, vec![EventPattern::After("DeepCheck".into())]);
        assert!(spec.period_micros.is_none());
        assert_eq!(spec.to_string(), "After[DeepCheck]; ; CheckStrategies;");
        assert_eq!(parse_trigger(&spec.to_string()).unwrap(), spec);
        assert!(parse_trigger("After[; ; X").is_err());
    }

    #[test]
    fn period_formatting_round_trips() {
        for micros in [0, 1, 500, 15_000, 500_000, 1_250_000, 10_000_000] {
            assert_eq!(parse_duration(&format_period(micros)).unwrap(), micros);
        }
        assert_eq!(format_period(500_000), "500ms");
        assert_eq!(format_period(1_250_000), "1250ms");
        assert_eq!(format_period(1_250_500), "1.2505s");
    }
}
