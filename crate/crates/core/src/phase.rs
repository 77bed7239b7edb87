//! Innings phases: powerplay, middle overs and death overs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Powerplay,
    #[serde(alias = "middle")]
    MiddleOvers,
    #[serde(alias = "death")]
    DeathOvers,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Powerplay, Phase::MiddleOvers, Phase::DeathOvers];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Powerplay => "powerplay",
            Phase::MiddleOvers => "middle",
            Phase::DeathOvers => "death",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Phase::Powerplay => "Powerplay",
            Phase::MiddleOvers => "Middle Overs",
            Phase::DeathOvers => "Death Overs",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "powerplay" | "pp" => Ok(Phase::Powerplay),
            "middle" | "middleovers" | "mo" => Ok(Phase::MiddleOvers),
            "death" | "deathovers" | "do" => Ok(Phase::DeathOvers),
            other => Err(format!("unknown phase '{other}'")),
        }
    }
}

/// Over ranges (1-based, inclusive) for each phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseScheme {
    pub powerplay: (u32, u32),
    pub middle: (u32, u32),
    pub death: (u32, u32),
}

impl Default for PhaseScheme {
    fn default() -> Self {
        Self {
            powerplay: (1, 6),
            middle: (7, 16),
            death: (17, 20),
        }
    }
}

impl PhaseScheme {
    pub fn new(powerplay: (u32, u32), middle: (u32, u32), death: (u32, u32)) -> Result<Self, String> {
        let s = Self {
            powerplay,
            middle,
            death,
        };
        let ok = powerplay.0 == 1
            && powerplay.0 <= powerplay.1
            && middle.0 == powerplay.1 + 1
            && middle.0 <= middle.1
            && death.0 == middle.1 + 1
            && death.0 <= death.1;
        if ok {
            Ok(s)
        } else {
            Err("phase ranges must be contiguous, ordered and start at over 1".into())
        }
    }

    pub fn range(&self, phase: Phase) -> (u32, u32) {
        match phase {
            Phase::Powerplay => self.powerplay,
            Phase::MiddleOvers => self.middle,
            Phase::DeathOvers => self.death,
        }
    }

    /// Phase containing a 1-based over number. Overs past the death range
    /// stay in the death phase; over 0 (before the first ball) is powerplay.
    pub fn phase_of(&self, over: u32) -> Phase {
        if over <= self.powerplay.1 {
            Phase::Powerplay
        } else if over <= self.middle.1 {
            Phase::MiddleOvers
        } else {
            Phase::DeathOvers
        }
    }

    pub fn contains(&self, phase: Phase, over: u32) -> bool {
        let (lo, hi) = self.range(phase);
        (lo..=hi).contains(&over) || (phase == Phase::DeathOvers && over > hi)
    }
}
