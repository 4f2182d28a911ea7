//! Inputs shared by the benchmarks in `benches/`.

use lhh_core::{GridFunction, LogGrid};

/// Deterministic oscillating step function with `n` cells on `[1, 10⁴]`.
pub fn sample_function(n: usize) -> GridFunction {
    let grid = LogGrid::new(1.0, 1e4, n).expect("valid grid");
    let values = (0..n).map(|i| 1.0 + ((i * 7919) % 97) as f64 / 97.0 - (i as f64 / n as f64)).collect();
    GridFunction::new(grid, values).expect("matching lengths")
}

#[cfg(test)]
mod tests {
    #[test]
    fn sample_function_is_deterministic() {
        let (a, b) = (super::sample_function(64), super::sample_function(64));
        assert_eq!(a, b);
        assert_eq!(a.values().len(), 64);
    }
}
