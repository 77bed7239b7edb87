use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StrategyError;
use crate::ingest::HomeAway;
use crate::interval::Interval;
use crate::phase::Phase;

/// Recommendation class, most favourable first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Target,
    Acceptable,
    Risky,
    Avoid,
}

impl Zone {
    pub const ALL: [Zone; 4] = [Zone::Target, Zone::Acceptable, Zone::Risky, Zone::Avoid];

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Target => "target",
            Zone::Acceptable => "acceptable",
            Zone::Risky => "risky",
            Zone::Avoid => "avoid",
        }
    }
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Zone {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_suffix(" zone").unwrap_or(&s);
        match s {
            "target" => Ok(Zone::Target),
            "acceptable" => Ok(Zone::Acceptable),
            "risky" => Ok(Zone::Risky),
            "avoid" => Ok(Zone::Avoid),
            other => Err(format!("unknown zone '{other}'")),
        }
    }
}

/// Venue class of the chasing side as the zone table sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VenueClass {
    Home,
    Away,
}

impl VenueClass {
    pub const ALL: [VenueClass; 2] = [VenueClass::Home, VenueClass::Away];

    pub fn as_str(self) -> &'static str {
        match self {
            VenueClass::Home => "home",
            VenueClass::Away => "away",
        }
    }
}

impl From<HomeAway> for VenueClass {
    /// Neutral venues read the away rows.
    fn from(h: HomeAway) -> Self {
        match h {
            HomeAway::Home => VenueClass::Home,
            HomeAway::Away | HomeAway::Neutral => VenueClass::Away,
        }
    }
}

impl std::str::FromStr for VenueClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<HomeAway>().map(VenueClass::from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneRow {
    pub phase: Phase,
    pub venue_class: VenueClass,
    pub interval: Interval,
    /// Historical win rate in percent.
    pub win_rate: f64,
    pub zone: Zone,
}

/// Phase and venue specific PI thresholds with their recommendation class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTable {
    rows: Vec<ZoneRow>,
}

const fn row(phase: Phase, venue_class: VenueClass, interval: Interval, win_rate: f64, zone: Zone) -> ZoneRow {
    ZoneRow {
        phase,
        venue_class,
        interval,
        win_rate,
        zone,
    }
}

/// The published thresholds: win rates of home and away chasers by phase.
pub fn default_zone_table() -> ZoneTable {
    use Phase::*;
    use VenueClass::*;
    use Zone::*;
    let bins = [
        Interval::new(0.0, 0.5),
        Interval::new(0.5, 1.0),
        Interval::new(1.0, 1.5),
        Interval::new(1.5, 2.5),
        Interval::from(2.5),
    ];
    let published: [(Phase, [(f64, Zone, f64, Zone); 5]); 3] = [
        (
            Powerplay,
            [
                (100.0, Target, 100.0, Target),
                (73.7, Acceptable, 62.2, Acceptable),
                (42.7, Risky, 36.6, Avoid),
                (13.9, Avoid, 10.5, Avoid),
                (0.0, Avoid, 0.0, Avoid),
            ],
        ),
        (
            MiddleOvers,
            [
                (100.0, Target, 100.0, Target),
                (100.0, Target, 98.4, Target),
                (75.7, Acceptable, 70.7, Acceptable),
                (43.6, Risky, 35.9, Avoid),
                (6.9, Avoid, 3.7, Avoid),
            ],
        ),
        (
            DeathOvers,
            [
                (100.0, Target, 100.0, Target),
                (100.0, Target, 96.8, Target),
                (87.3, Acceptable, 70.2, Acceptable),
                (75.9, Acceptable, 68.2, Acceptable),
                (11.2, Avoid, 8.1, Avoid),
            ],
        ),
    ];
    let mut rows = Vec::with_capacity(30);
    for (phase, cells) in published {
        for venue in [Home, Away] {
            for (bin, &(hw, hz, aw, az)) in bins.iter().zip(cells.iter()) {
                let (w, z) = if venue == Home { (hw, hz) } else { (aw, az) };
                rows.push(row(phase, venue, *bin, w, z));
            }
        }
    }
    ZoneTable::new(rows).expect("published table is well formed")
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    phase: String,
    venue_class: String,
    lo: f64,
    hi: String,
    win_rate: f64,
    zone: String,
}

impl ZoneTable {
    /// Checks that every (phase, venue) section tiles `[0, inf)` with
    /// contiguous intervals whose zones never improve as PI rises.
    pub fn new(mut rows: Vec<ZoneRow>) -> Result<Self, StrategyError> {
        rows.sort_by(|a, b| {
            (a.phase, a.venue_class)
                .cmp(&(b.phase, b.venue_class))
                .then(a.interval.lo.total_cmp(&b.interval.lo))
        });
        for phase in Phase::ALL {
            for venue in VenueClass::ALL {
                let section: Vec<_> = rows
                    .iter()
                    .filter(|r| r.phase == phase && r.venue_class == venue)
                    .collect();
                let err = |m: String| StrategyError::Table(format!("{phase}/{}: {m}", venue.as_str()));
                if section.is_empty() {
                    return Err(err("no rows".into()));
                }
                let mut edge = 0.0;
                let mut worst = Zone::Target;
                for r in &section {
                    if r.interval.lo != edge {
                        return Err(err(format!("gap or overlap at {}", r.interval.lo)));
                    }
                    if r.interval.hi.is_some_and(|h| h <= r.interval.lo) {
                        return Err(err(format!("empty interval {}", r.interval)));
                    }
                    if r.zone < worst {
                        return Err(err(format!("zone improves at {}", r.interval)));
                    }
                    worst = r.zone;
                    edge = r.interval.upper();
                }
                if edge.is_finite() {
                    return Err(err("last interval must be unbounded".into()));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ZoneRow] {
        &self.rows
    }

    pub fn section(&self, phase: Phase, venue: VenueClass) -> impl Iterator<Item = &ZoneRow> {
        self.rows
            .iter()
            .filter(move |r| r.phase == phase && r.venue_class == venue)
    }

    pub fn lookup(&self, phase: Phase, venue: VenueClass, pi: f64) -> &ZoneRow {
        let pi = pi.max(0.0);
        self.section(phase, venue)
            .find(|r| r.interval.contains(pi))
            .expect("sections cover [0, inf)")
    }

    pub fn classify(&self, phase: Phase, venue: VenueClass, pi: f64) -> Zone {
        self.lookup(phase, venue, pi).zone
    }

    /// The union of the Target and Acceptable intervals, which is always
    /// an interval starting at 0.
    pub fn target_band(&self, phase: Phase, venue: VenueClass) -> Interval {
        let mut band = Interval::new(0.0, 0.0);
        for r in self.section(phase, venue) {
            if r.zone <= Zone::Acceptable {
                band.hi = r.interval.hi;
            }
        }
        band
    }

    pub fn from_csv(r: impl Read) -> Result<Self, StrategyError> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<CsvRow>() {
            let rec = rec?;
            let lo = rec.lo;
            let hi = Interval::parse_upper(&rec.hi).map_err(StrategyError::Table)?;
            rows.push(ZoneRow {
                phase: rec.phase.parse().map_err(StrategyError::Table)?,
                venue_class: rec.venue_class.parse().map_err(StrategyError::Table)?,
                interval: Interval { lo, hi },
                win_rate: rec.win_rate,
                zone: rec.zone.parse().map_err(StrategyError::Table)?,
            });
        }
        Self::new(rows)
    }

    pub fn to_csv(&self, w: impl Write) -> Result<(), StrategyError> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(CsvRow {
                phase: r.phase.as_str().into(),
                venue_class: r.venue_class.as_str().into(),
                lo: r.interval.lo,
                hi: r.interval.format_upper(),
                win_rate: r.win_rate,
                zone: r.zone.as_str().into(),
            })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StrategyError> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StrategyError> {
        self.to_csv(std::fs::File::create(path)?)
    }
}
