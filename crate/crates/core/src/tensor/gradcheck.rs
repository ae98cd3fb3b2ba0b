use super::array::Tensor;
use super::graph::{Graph, Var};
use crate::error::{Error, Result};

/// Largest coordinate-wise relative error between the reverse-mode gradient of
/// `f` at `points` and central finite differences with the given `step`.
///
/// The relative error of each coordinate divides by
/// `max(1, |analytic|, |numeric|)`.
pub fn check_gradients<F>(f: F, points: &[Tensor], step: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut g = Graph::new();
    let vars: Vec<Var> = points.iter().map(|p| g.leaf(p.clone())).collect();
    let out = f(&mut g, &vars)?;
    let grads = g.grad(out, &vars, false)?;
    let analytic: Vec<Tensor> = grads.iter().map(|v| g.value(*v).clone()).collect();

    let eval = |pts: &[Tensor]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = pts.iter().map(|p| g.leaf(p.clone())).collect();
        let out = f(&mut g, &vars)?;
        if g.shape(out) != (1, 1) {
            return Err(Error::NonScalarOutput(g.shape(out)));
        }
        Ok(g.value(out).item())
    };

    let mut worst: f64 = 0.0;
    let mut work: Vec<Tensor> = points.to_vec();
    for (k, point) in points.iter().enumerate() {
        for idx in 0..point.len() {
            let x = point.data()[idx];
            work[k].data_mut()[idx] = x + step;
            let up = eval(&work)?;
            work[k].data_mut()[idx] = x - step;
            let down = eval(&work)?;
            work[k].data_mut()[idx] = x;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[k].data()[idx];
            let denom = 1f64.max(a.abs()).max(numeric.abs());
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

/// Single-input form of [`check_gradients`].
pub fn check_gradient<F>(f: F, point: &Tensor, step: f64) -> Result<f64>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    check_gradients(|g, vars| f(g, vars[0]), std::slice::from_ref(point), step)
}
