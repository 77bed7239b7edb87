//! Parsers for the compact inputs of the `predict` and `recommend` commands.

use chasepi_core::ingest::HomeAway;
use chasepi_core::pi::{ChaseContext, InningsState, BALLS_PER_OVER};
use chasepi_core::strategy::{MatchState, VenueClass};

/// Parses `1.3,1.4,1.5` into PI values.
pub fn parse_pi_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| match p.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
            Ok(v) => Err(format!("PI value {v} must be finite and non-negative")),
            Err(e) => Err(format!("bad PI value '{p}': {e}")),
        })
        .collect()
}

/// Parses a state such as
/// `t=12;pi=1.3,1.4,1.5;venue=home;target=170;runs=95;wkts=3`.
///
/// `t` defaults to the number of PI values. `runs` and `wkts` together
/// describe the innings after `t` full overs, with the first `wkts`
/// batting positions out; without them the run-rate hint is omitted.
pub fn parse_state(s: &str) -> Result<MatchState, String> {
    let mut t = None;
    let mut pi = None;
    let mut venue = HomeAway::Home;
    let mut target = None;
    let mut total_balls = 120;
    let mut runs = None;
    let mut wkts = None;
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{part}'"))?;
        let value = value.trim();
        let num = |what: &str| value.parse::<u32>().map_err(|e| format!("bad {what} '{value}': {e}"));
        match key.trim() {
            "t" | "over" => t = Some(num("over")?),
            "pi" => pi = Some(parse_pi_list(value)?),
            "venue" => venue = value.parse()?,
            "target" => target = Some(num("target")?),
            "balls" | "total_balls" => total_balls = num("total balls")?,
            "runs" => runs = Some(num("runs")?),
            "wkts" | "wickets" => wkts = Some(num("wickets")?),
            other => return Err(format!("unknown state key '{other}'")),
        }
    }
    let history = pi.ok_or("state needs pi=...")?;
    let target = target.ok_or("state needs target=...")?;
    let context = ChaseContext::new(target, total_balls).map_err(|e| e.to_string())?;
    let over = t.unwrap_or(history.len() as u32);
    let innings = match (runs, wkts) {
        (Some(r), w) => {
            let w = w.unwrap_or(0);
            if w > 10 {
                return Err(format!("{w} wickets"));
            }
            Some(InningsState::new(r, over * BALLS_PER_OVER, (1..=w as u8).collect()))
        }
        (None, Some(_)) => return Err("wkts given without runs".into()),
        (None, None) => None,
    };
    if let Some(st) = &innings {
        st.validate(&context).map_err(|e| e.to_string())?;
    }
    Ok(MatchState {
        context,
        venue: VenueClass::from(venue),
        over,
        history,
        innings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_state() {
        let s = parse_state("t=12;pi=1.3,1.4,1.5;venue=neutral;target=170;runs=95;wkts=3").unwrap();
        assert_eq!(s.over, 12);
        assert_eq!(s.history, vec![1.3, 1.4, 1.5]);
        assert_eq!(s.venue, VenueClass::Away);
        assert_eq!(s.context.target(), 170);
        let inn = s.innings.unwrap();
        assert_eq!((inn.runs_scored, inn.balls_faced), (95, 72));
        assert_eq!(inn.dismissed_positions, vec![1, 2, 3]);
    }

    #[test]
    fn over_defaults_to_history_length() {
        let s = parse_state("pi=1,1.1;target=150").unwrap();
        assert_eq!(s.over, 2);
        assert!(s.innings.is_none());
        assert_eq!(s.venue, VenueClass::Home);
    }

    #[test]
    fn rejects_bad_states() {
        assert!(parse_state("t=3;target=150").is_err());
        assert!(parse_state("pi=1;target=150;colour=red").is_err());
        assert!(parse_state("pi=1;target=150;wkts=2").is_err());
        assert!(parse_state("pi=-1;target=150").is_err());
        assert!(parse_state("t=21;pi=1;target=150;runs=10").is_err());
    }
}
