//! Samples-per-class grids.

use crate::error::{Error, Result};

pub const PRESET_GRIDS: [(&str, &[usize]); 3] = [
    ("paper-a", &[50, 300, 550, 800, 1050, 1300, 1550, 1800]),
    ("paper-b", &[5, 10, 15, 20, 25, 30, 35, 40, 45, 50]),
    ("mini", &[5, 10, 25, 50, 100]),
];

/// Expand `start:end:step` (inclusive of `start`, stepping while `<= end`)
/// or a preset name.
pub fn expand_grid(spec: &str) -> Result<Vec<usize>> {
    if let Some((_, g)) = PRESET_GRIDS.iter().find(|(name, _)| *name == spec) {
        return Ok(g.to_vec());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, step] = parts[..] else {
        return Err(Error::invalid(format!("grid {spec:?}: expected start:end:step or a preset name")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<i64>()
            .map_err(|_| Error::invalid(format!("grid {spec:?}: {s:?} is not an integer")))
    };
    let (start, end, step) = (num(start)?, num(end)?, num(step)?);
    if step <= 0 {
        return Err(Error::invalid(format!("grid {spec:?}: step must be positive")));
    }
    if end < start {
        return Err(Error::invalid(format!("grid {spec:?}: end before start")));
    }
    if start < 1 {
        return Err(Error::invalid(format!("grid {spec:?}: sample counts start at 1")));
    }
    Ok((start..=end).step_by(step as usize).map(|v| v as usize).collect())
}

pub fn validate_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("grid {grid:?} must be non-empty, positive and strictly increasing")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(expand_grid("7:7:1").unwrap(), vec![7]);
        assert_eq!(expand_grid("50:1800:250").unwrap(), expand_grid("paper-a").unwrap());
        assert_eq!(expand_grid("5:50:5").unwrap(), expand_grid("paper-b").unwrap());
        assert_eq!(expand_grid("1:10:4").unwrap(), vec![1, 5, 9]);
        assert!(expand_grid("5:1:1").is_err());
        assert!(expand_grid("1:5:0").is_err());
        assert!(expand_grid("1:5:-1").is_err());
        assert!(expand_grid("nope").is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(validate_grid(&[5, 10]).is_ok());
        assert!(validate_grid(&[5, 5]).is_err());
        assert!(validate_grid(&[]).is_err());
    }
}
