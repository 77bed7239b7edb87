use serde::{Deserialize, Serialize};

use crate::ingest::{HomeAway, PiSequence};
use crate::interval::Interval;
use crate::phase::{Phase, PhaseScheme};

/// How overs are grouped into table sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum Grouping {
    Phase { scheme: PhaseScheme },
    Overs { overs: Vec<u32> },
}

/// Which over-end values of a section decide a match's bins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipRule {
    /// Every bin that any over-end PI of the section falls in.
    #[default]
    AnyOver,
    /// Only the bin of the last over-end PI the match reached in the section.
    LastOver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateRow {
    pub group: String,
    pub bin: Interval,
    pub home_n: usize,
    pub home_wins: usize,
    pub away_n: usize,
    pub away_wins: usize,
    pub home_win_pct: f64,
    pub away_win_pct: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateTable {
    pub rule: MembershipRule,
    pub excluded_neutral: usize,
    pub rows: Vec<WinRateRow>,
}

impl WinRateTable {
    pub fn rows_for<'a>(&'a self, group: &'a str) -> impl Iterator<Item = &'a WinRateRow> + 'a {
        self.rows.iter().filter(move |r| r.group == group)
    }

    pub fn cell(&self, group: &str, lo: f64) -> Option<&WinRateRow> {
        self.rows.iter().find(|r| r.group == group && r.bin.lo == lo)
    }
}

/// Half-unit bins from 0 to 5 with an open top bin.
pub fn default_bins() -> Vec<Interval> {
    Interval::grid(0.5, 5.0)
}

fn sections(grouping: &Grouping) -> Vec<(String, u32, u32)> {
    match grouping {
        Grouping::Phase { scheme } => Phase::ALL
            .iter()
            .map(|&p| {
                let (a, b) = scheme.range(p);
                (p.as_str().to_string(), a, b)
            })
            .collect(),
        Grouping::Overs { overs } => overs.iter().map(|&o| (format!("over {o}"), o, o)).collect(),
    }
}

fn pct(wins: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * wins as f64 / n as f64
    }
}

/// Home and away win rates of chasing teams, per section and PI bin.
/// Neutral-venue matches are left out.
pub fn win_rate_by_threshold(
    seqs: &[PiSequence],
    grouping: &Grouping,
    bins: &[Interval],
    rule: MembershipRule,
) -> WinRateTable {
    let excluded_neutral = seqs.iter().filter(|s| s.home_away == HomeAway::Neutral).count();
    let mut rows = Vec::new();
    for (name, first, last) in sections(grouping) {
        let mut cells = vec![[0usize; 4]; bins.len()];
        for s in seqs.iter().filter(|s| s.home_away != HomeAway::Neutral) {
            let values: Vec<f64> = s
                .overs()
                .filter(|&(o, _)| o >= first && o <= last)
                .map(|(_, v)| v)
                .collect();
            let considered: &[f64] = match rule {
                MembershipRule::AnyOver => &values,
                MembershipRule::LastOver => values.last().map(std::slice::from_ref).unwrap_or(&[]),
            };
            let base = if s.home_away == HomeAway::Home { 0 } else { 2 };
            for (b, bin) in bins.iter().enumerate() {
                if considered.iter().any(|&v| bin.contains(v)) {
                    cells[b][base] += 1;
                    cells[b][base + 1] += usize::from(s.won);
                }
            }
        }
        for (bin, c) in bins.iter().zip(cells) {
            let home_win_pct = pct(c[1], c[0]);
            let away_win_pct = pct(c[3], c[2]);
            rows.push(WinRateRow {
                group: name.clone(),
                bin: *bin,
                home_n: c[0],
                home_wins: c[1],
                away_n: c[2],
                away_wins: c[3],
                home_win_pct,
                away_win_pct,
                delta: home_win_pct - away_win_pct,
            });
        }
    }
    WinRateTable {
        rule,
        excluded_neutral,
        rows,
    }
}
