//! Value lists on the command line: `x`, `x,y,z` or `start:stop:step`.

use std::str::FromStr;

use astar_core::trial::StrategyKind;

/// One or more numbers parsed from a single flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct Values(pub Vec<f64>);

impl Values {
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.0.iter().map(|&x| f(x)).collect()
    }
}

impl FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, step] = parts[..] else {
                return Err(format!("range '{s}' must be start:stop:step"));
            };
            return range(number(a)?, number(b)?, number(step)?).map(Values);
        }
        let v = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        Ok(Values(v))
    }
}

fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("'{s}' is not a finite number")),
    }
}

/// Inclusive arithmetic range; `stop` is kept when it lies on the grid up to
/// rounding.
pub fn range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if step <= 0.0 {
        return Err(format!("step must be positive, got {step}"));
    }
    if stop < start {
        return Err(format!("empty range {start}:{stop}"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// `n` equal steps from `start` to `stop`, both ends included.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| start + (stop - start) * k as f64 / n as f64).collect()
}

/// Comma-separated strategies, or `all`.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategies(pub Vec<StrategyKind>);

impl FromStr for Strategies {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "all" {
            return Ok(Strategies(StrategyKind::ALL.to_vec()));
        }
        s.split(',')
            .map(|p| p.trim().parse::<StrategyKind>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()
            .map(Strategies)
    }
}
