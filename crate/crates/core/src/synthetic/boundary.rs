use alloc::vec::Vec;

/// One cell of a prediction grid over `[-1, 1]^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub x1: f64,
    pub x2: f64,
    pub label: usize,
}

/// Cell centers of a `res`-by-`res` partition of `[-1, 1]`.
pub fn grid_centers(res: usize) -> Vec<f64> {
    let w = 2.0 / res as f64;
    (0..res).map(|i| -1.0 + (i as f64 + 0.5) * w).collect()
}

/// Evaluates `predict` on the grid, row by row in `x2` with `x1` varying
/// fastest.
pub fn decision_boundary_grid<F: FnMut([f64; 2]) -> usize>(mut predict: F, res: usize) -> Vec<GridCell> {
    let c = grid_centers(res);
    let mut out = Vec::with_capacity(res * res);
    for &x2 in &c {
        for &x1 in &c {
            out.push(GridCell { x1, x2, label: predict([x1, x2]) });
        }
    }
    out
}
