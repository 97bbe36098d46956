//! Reported-case ingestion and the 5-day trailing mean.
//!
//! Input files are CSV with the header `date,confirmed_daily`, ISO-8601
//! dates, one row per calendar day with no gaps.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Daily reported counts together with their 5-day trailing means.
///
/// `smoothed[k]` is the mean of days `k-4..=k`; the first four entries
/// average whatever history is available.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSeries {
    dates: Vec<NaiveDate>,
    daily: Vec<f64>,
    smoothed: Vec<f64>,
}

impl CaseSeries {
    pub fn new(dates: Vec<NaiveDate>, daily: Vec<f64>) -> Result<Self> {
        if dates.is_empty() {
            return Err(Error::DataParse {
                line: 1,
                message: "no data rows".into(),
            });
        }
        if dates.len() != daily.len() {
            return Err(Error::DataParse {
                line: 1,
                message: format!(
                    "{} dates but {} counts",
                    dates.len(),
                    daily.len()
                ),
            });
        }
        for (i, window) in dates.windows(2).enumerate() {
            let expected = window[0].succ_opt().expect("date overflow");
            if window[1] != expected {
                if window[1] > expected {
                    return Err(Error::DataGap { missing: expected });
                }
                return Err(Error::DataParse {
                    line: i + 3, // 1-based, after the header and the first row
                    message: format!("dates not strictly increasing: {} then {}", window[0], window[1]),
                });
            }
        }
        for (i, &value) in daily.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::DataParse {
                    line: i + 2,
                    message: format!("non-finite count {value}"),
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeCount {
                    line: i + 2,
                    value,
                });
            }
        }
        let smoothed = trailing_mean(&daily);
        Ok(CaseSeries {
            dates,
            daily,
            smoothed,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn daily(&self) -> &[f64] {
        &self.daily
    }

    pub fn smoothed(&self) -> &[f64] {
        &self.smoothed
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    /// Smoothed values for the inclusive date window, one per day.
    pub fn smoothed_window(&self, start: NaiveDate, end: NaiveDate) -> Result<&[f64]> {
        if end < start {
            return Err(Error::InvalidWindow(format!(
                "window end {end} precedes start {start}"
            )));
        }
        if start < self.first_date() || end > self.last_date() {
            return Err(Error::InvalidWindow(format!(
                "window {start}..{end} not covered by data {}..{}",
                self.first_date(),
                self.last_date()
            )));
        }
        let offset = (start - self.first_date()).num_days() as usize;
        let len = (end - start).num_days() as usize + 1;
        Ok(&self.smoothed[offset..offset + len])
    }
}

fn trailing_mean(daily: &[f64]) -> Vec<f64> {
    daily
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let lo = k.saturating_sub(4);
            let window = &daily[lo..=k];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

/// Parses `date,confirmed_daily` CSV from a reader.
pub fn parse_case_data<R: BufRead>(reader: R) -> Result<CaseSeries> {
    let mut dates = Vec::new();
    let mut daily = Vec::new();
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(e))) => {
            return Err(Error::DataParse {
                line: 1,
                message: e.to_string(),
            })
        }
        None => {
            return Err(Error::DataParse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let header = header.trim_start_matches('\u{feff}').trim();
    if header != "date,confirmed_daily" {
        return Err(Error::DataParse {
            line: 1,
            message: format!("expected header `date,confirmed_daily`, got `{header}`"),
        });
    }

    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::DataParse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split(',');
        let (date_str, count_str) = match (fields.next(), fields.next(), fields.next()) {
            (Some(d), Some(c), None) => (d.trim(), c.trim()),
            _ => {
                return Err(Error::DataParse {
                    line: line_no,
                    message: "expected exactly two fields".into(),
                })
            }
        };
        let date = date_str.parse::<NaiveDate>().map_err(|e| Error::DataParse {
            line: line_no,
            message: format!("bad date `{date_str}`: {e}"),
        })?;
        let count = count_str.parse::<f64>().map_err(|e| Error::DataParse {
            line: line_no,
            message: format!("bad count `{count_str}`: {e}"),
        })?;
        if count < 0.0 {
            return Err(Error::NegativeCount {
                line: line_no,
                value: count,
            });
        }
        dates.push(date);
        daily.push(count);
    }

    CaseSeries::new(dates, daily)
}

/// Loads and validates a case-data CSV file.
pub fn load_case_data(path: &Path) -> Result<CaseSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_case_data(BufReader::new(file))
}
