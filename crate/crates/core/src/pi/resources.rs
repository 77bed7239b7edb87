use std::io::Read;
use std::path::Path;

use thiserror::Error;

const BUNDLED_CSV: &str = include_str!("../../data/resource_t20.csv");

#[derive(Debug, Error)]
pub enum ResourceTableError {
    #[error("reading resource table: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing resource table: {0}")]
    Csv(#[from] csv::Error),
    #[error("resource table row {row}: {msg}")]
    Invalid { row: usize, msg: String },
    #[error("resource table is not monotone: {0}")]
    NotMonotone(String),
}

#[derive(Debug, serde::Deserialize)]
struct Row {
    balls_remaining: u32,
    wickets_lost: u8,
    resource_pct: f64,
}

/// Percentage of batting resources remaining as a function of balls left and
/// wickets lost.
///
/// Rows may be given at any ball granularity (the bundled table is per over);
/// values in between are linearly interpolated. `resource(0, w) = 0` and
/// `resource(b, 10) = 0` hold regardless of the file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceTable {
    /// `grid[w][b]` for `w` in 0..10 and `b` in 0..=max_balls.
    grid: Vec<Vec<f64>>,
}

impl ResourceTable {
    /// Standard-edition table restricted to twenty overs and rescaled so that
    /// twenty overs with ten wickets in hand is 100%.
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED_CSV.as_bytes()).expect("bundled resource table is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ResourceTableError> {
        let f = std::fs::File::open(path)?;
        Self::from_reader(f)
    }

    pub fn from_reader(rdr: impl Read) -> Result<Self, ResourceTableError> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rdr);
        let mut points: Vec<Vec<(u32, f64)>> = vec![Vec::new(); 10];
        for (i, rec) in csv.deserialize::<Row>().enumerate() {
            let row = rec?;
            if row.wickets_lost > 10 {
                return Err(ResourceTableError::Invalid {
                    row: i + 1,
                    msg: format!("wickets_lost {} > 10", row.wickets_lost),
                });
            }
            if !(0.0..=100.0).contains(&row.resource_pct) {
                return Err(ResourceTableError::Invalid {
                    row: i + 1,
                    msg: format!("resource_pct {} outside [0, 100]", row.resource_pct),
                });
            }
            if row.wickets_lost == 10 {
                continue;
            }
            points[row.wickets_lost as usize].push((row.balls_remaining, row.resource_pct));
        }
        let max_balls = points
            .iter()
            .flat_map(|p| p.iter().map(|(b, _)| *b))
            .max()
            .unwrap_or(0);
        if max_balls == 0 {
            return Err(ResourceTableError::Invalid {
                row: 0,
                msg: "table has no rows with balls remaining".into(),
            });
        }
        let mut grid = Vec::with_capacity(10);
        for (w, pts) in points.iter_mut().enumerate() {
            pts.push((0, 0.0));
            pts.sort_by_key(|(b, _)| *b);
            pts.dedup_by_key(|(b, _)| *b);
            if pts.last().map(|(b, _)| *b) != Some(max_balls) {
                return Err(ResourceTableError::Invalid {
                    row: 0,
                    msg: format!("wickets_lost {w} has no row at {max_balls} balls remaining"),
                });
            }
            let mut col = vec![0.0; max_balls as usize + 1];
            for pair in pts.windows(2) {
                let (b0, v0) = pair[0];
                let (b1, v1) = pair[1];
                for b in b0..=b1 {
                    let t = f64::from(b - b0) / f64::from(b1 - b0);
                    col[b as usize] = v0 + t * (v1 - v0);
                }
            }
            col[0] = 0.0;
            grid.push(col);
        }
        let table = Self { grid };
        table.check_monotone()?;
        Ok(table)
    }

    fn check_monotone(&self) -> Result<(), ResourceTableError> {
        let max = self.max_balls() as usize;
        for b in 0..=max {
            for w in 1..10 {
                if self.grid[w][b] > self.grid[w - 1][b] + 1e-9 {
                    return Err(ResourceTableError::NotMonotone(format!(
                        "resource increases from {} to {} wickets at {b} balls",
                        w - 1,
                        w
                    )));
                }
            }
        }
        for w in 0..10 {
            for b in 1..=max {
                if self.grid[w][b] + 1e-9 < self.grid[w][b - 1] {
                    return Err(ResourceTableError::NotMonotone(format!(
                        "resource decreases with more balls remaining at {w} wickets, {b} balls"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn max_balls(&self) -> u32 {
        (self.grid[0].len() - 1) as u32
    }

    /// Raw table value; balls beyond the table are clamped to its edge.
    pub fn remaining_pct(&self, balls_remaining: u32, wickets_lost: usize) -> f64 {
        if wickets_lost >= 10 {
            return 0.0;
        }
        let b = balls_remaining.min(self.max_balls()) as usize;
        self.grid[wickets_lost][b]
    }

    /// Resources used, in percent, for a match of `total_balls` balls.
    /// Remaining resource is normalised so that the start of the innings is
    /// 100%, which keeps shortened matches on the same scale.
    pub fn used_pct(&self, total_balls: u32, balls_remaining: u32, wickets_lost: usize) -> f64 {
        let full = self.remaining_pct(total_balls, 0);
        if full <= 0.0 {
            return 100.0;
        }
        let rem = self.remaining_pct(balls_remaining, wickets_lost) / full * 100.0;
        (100.0 - rem).clamp(0.0, 100.0)
    }

    /// Rows as `(balls_remaining, wickets_lost, resource_pct)` at every ball.
    pub fn rows(&self) -> impl Iterator<Item = (u32, u8, f64)> + '_ {
        (0..=self.max_balls()).flat_map(move |b| {
            (0..=10u8).map(move |w| (b, w, self.remaining_pct(b, w as usize)))
        })
    }
}
