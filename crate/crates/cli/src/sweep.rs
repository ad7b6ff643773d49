//! Parameter sweep over the (l0/l, l*eta) plane: for every grid cell, run
//! the three criteria (with l normalized to 1) and emit one CSV row stating
//! which of them pass. Rows are ordered by grid index, so the output is
//! deterministic for identical inputs.

use newton_cert::{compare_criteria, CriterionKind, Error, LipschitzPair, Result};

/// Inclusive `a:b:step` grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!(
            "grid must have the form a:b:step, got {text:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad grid number {p:?}")))
        })
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidInput(format!(
            "grid step must be positive, got {step}"
        )));
    }
    if !(start > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grid values must be positive, got start {start}"
        )));
    }
    if end < start {
        return Err(Error::InvalidInput(format!(
            "empty grid: end {end} below start {start}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// One sweep cell: which criteria pass at (ratio, l eta), with l = 1.
#[derive(Debug, Clone, Copy)]
pub struct SweepCell {
    pub ratio: f64,
    pub l_eta: f64,
    pub kantorovich: bool,
    pub new_condition: bool,
    pub argyros: bool,
    pub new_weaker_than_kantorovich: bool,
}

pub fn evaluate_cell(ratio: f64, l_eta: f64) -> Result<SweepCell> {
    // Normalize l = 1: then l0 = ratio and eta = l_eta.
    let pair = LipschitzPair::new(ratio, 1.0)?;
    let eta = l_eta;
    // Generous radius so only the thresholds decide, never the ball.
    let radius = (1.0 / ratio).max(2.0 * eta) + eta;
    let comparison = compare_criteria(&pair, eta, radius)?;
    let passed = |kind: CriterionKind| {
        comparison
            .certificates
            .iter()
            .find(|c| c.criterion == kind)
            .map(|c| c.passed)
            .unwrap_or(false)
    };
    Ok(SweepCell {
        ratio,
        l_eta,
        kantorovich: passed(CriterionKind::Kantorovich),
        new_condition: passed(CriterionKind::NewCondition),
        argyros: passed(CriterionKind::Argyros),
        new_weaker_than_kantorovich: comparison.verdict.new_weaker_than_kantorovich,
    })
}

pub const SWEEP_HEADER: &str =
    "ratio,l_eta,kantorovich,new_condition,argyros,new_weaker_than_kantorovich";

/// Runs the full sweep, `l_eta` outer and `ratio` inner, and renders the CSV
/// (LF line endings).
pub fn run_sweep(ratio_grid: &[f64], l_eta_grid: &[f64]) -> Result<String> {
    for &ratio in ratio_grid {
        if ratio > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "ratio l0/l must lie in (0, 1], got {ratio}"
            )));
        }
    }
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for &l_eta in l_eta_grid {
        for &ratio in ratio_grid {
            let cell = evaluate_cell(ratio, l_eta)?;
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{},{},{}\n",
                cell.ratio,
                cell.l_eta,
                cell.kantorovich,
                cell.new_condition,
                cell.argyros,
                cell.new_weaker_than_kantorovich
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let grid = parse_grid("0.1:0.5:0.1").unwrap();
        assert_eq!(grid.len(), 5);
        assert!((grid[4] - 0.5).abs() < 1e-12);
        assert!(parse_grid("0.5:0.1:0.1").is_err());
        assert!(parse_grid("0.1:0.5:0").is_err());
        assert!(parse_grid("0.1:0.5").is_err());
        assert!(parse_grid("a:b:c").is_err());
        assert!(parse_grid("-0.1:0.5:0.1").is_err());
    }

    #[test]
    fn single_cell_all_pass() {
        // ratio 1, l eta = 0.1: Kantorovich (0.1 <= 0.5), new condition
        // (0.1 <= 0.1716) and Argyros (0.1 <= 0.1, boundary inclusive).
        let cell = evaluate_cell(1.0, 0.1).unwrap();
        assert!(cell.kantorovich);
        assert!(cell.new_condition);
        assert!(cell.argyros);
        assert!(!cell.new_weaker_than_kantorovich);
    }

    #[test]
    fn new_condition_boundary_in_ratio() {
        // At l eta = 0.5 the new condition passes iff ratio <= (3-2sqrt2)/0.5.
        let threshold = (3.0 - 2.0 * std::f64::consts::SQRT_2) / 0.5;
        let below = evaluate_cell(threshold - 1e-6, 0.5).unwrap();
        let above = evaluate_cell(threshold + 1e-6, 0.5).unwrap();
        assert!(below.new_condition && below.kantorovich);
        assert!(!above.new_condition && above.kantorovich);
    }
}
