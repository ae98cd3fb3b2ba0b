//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! Every primitive appends a node holding its value. [`Graph::grad`] walks the
//! nodes backwards and expresses each vector-Jacobian product with the same
//! primitives, so the gradients it returns are ordinary nodes. With
//! `create_graph = true` those nodes stay connected to their inputs and a
//! second call can differentiate through them.

use std::rc::Rc;

use super::array::Tensor;
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Reduction axis. `Rows` collapses the row dimension (`r x c -> 1 x c`),
/// `Cols` collapses the column dimension (`r x c -> r x 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
    All,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MatMul(Var, Var),
    Transpose(Var),
    Relu(Var),
    Sigmoid(Var),
    Exp(Var),
    Ln(Var),
    Recip(Var),
    Clamp(Var, f64, f64),
    SumTo(Var),
    BroadcastTo(Var),
    Concat(Rc<[Var]>),
    SliceCols(Var, usize),
    PadCols(Var, usize),
    GatherRows(Var, Rc<[usize]>),
    ScatterRows(Var, Rc<[usize]>),
    SoftmaxRows(Var),
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        use Op::*;
        match self {
            Leaf => Vec::new(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | MatMul(a, b) => vec![*a, *b],
            Scale(a, _)
            | Transpose(a)
            | Relu(a)
            | Sigmoid(a)
            | Exp(a)
            | Ln(a)
            | Recip(a)
            | Clamp(a, _, _)
            | SumTo(a)
            | BroadcastTo(a)
            | SliceCols(a, _)
            | PadCols(a, _)
            | GatherRows(a, _)
            | ScatterRows(a, _)
            | SoftmaxRows(a) => vec![*a],
            Concat(parts) => parts.to_vec(),
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Computation graph confined to one thread. Build a fresh one per forward pass.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn broadcast_shape(op: &'static str, a: (usize, usize), b: (usize, usize)) -> Result<(usize, usize)> {
    let dim = |x: usize, y: usize| {
        if x == y || y == 1 {
            Some(x)
        } else if x == 1 {
            Some(y)
        } else {
            None
        }
    };
    match (dim(a.0, b.0), dim(a.1, b.1)) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(Error::Shape { op, lhs: a, rhs: b }),
    }
}

fn zip_broadcast(a: &Tensor, b: &Tensor, shape: (usize, usize), f: impl Fn(f64, f64) -> f64) -> Tensor {
    let (r, c) = shape;
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        let ai = if ar == 1 { 0 } else { i };
        let bi = if br == 1 { 0 } else { i };
        for j in 0..c {
            let aj = if ac == 1 { 0 } else { j };
            let bj = if bc == 1 { 0 } else { j };
            out.push(f(a.get(ai, aj), b.get(bi, bj)));
        }
    }
    Tensor::new(r, c, out).expect("broadcast shape is positive")
}

fn sum_to_shape(t: &Tensor, shape: (usize, usize)) -> Tensor {
    let (r, c) = t.shape();
    let mut out = Tensor::zeros(shape.0, shape.1);
    for i in 0..r {
        let oi = if shape.0 == 1 { 0 } else { i };
        for j in 0..c {
            let oj = if shape.1 == 1 { 0 } else { j };
            let v = out.get(oi, oj) + t.get(i, j);
            out.set(oi, oj, v);
        }
    }
    out
}

fn broadcast_to_shape(t: &Tensor, shape: (usize, usize)) -> Tensor {
    zip_broadcast(t, t, shape, |a, _| a)
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Leaf node: a parameter, an input, or a constant.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        assert!(value.is_finite(), "leaf values must be finite");
        self.nodes.push(Node { value, op: Op::Leaf });
        Var(self.nodes.len() - 1)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.leaf(Tensor::scalar(value))
    }

    /// Copy of `v` with no history; gradients do not flow through it.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.leaf(value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("add", self.shape(a), self.shape(b))?;
        let value = zip_broadcast(self.value(a), self.value(b), shape, |x, y| x + y);
        self.push(value, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("sub", self.shape(a), self.shape(b))?;
        let value = zip_broadcast(self.value(a), self.value(b), shape, |x, y| x - y);
        self.push(value, Op::Sub(a, b), "sub")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("mul", self.shape(a), self.shape(b))?;
        let value = zip_broadcast(self.value(a), self.value(b), shape, |x, y| x * y);
        self.push(value, Op::Mul(a, b), "mul")
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let value = self.value(a).map(|x| x * c);
        self.push(value, Op::Scale(a, c), "scale")
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        self.scale(a, -1.0)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        self.push(value, Op::MatMul(a, b), "matmul")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).transpose();
        self.push(value, Op::Transpose(a), "transpose")
    }

    /// Rectified linear unit; the subgradient at 0 is taken as 0.
    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|x| x.max(0.0));
        self.push(value, Op::Relu(a), "relu")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|x| {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        });
        self.push(value, Op::Sigmoid(a), "sigmoid")
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(f64::exp);
        self.push(value, Op::Exp(a), "exp")
    }

    pub fn ln(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(f64::ln);
        self.push(value, Op::Ln(a), "ln")
    }

    pub fn recip(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|x| 1.0 / x);
        self.push(value, Op::Recip(a), "recip")
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        let value = self.value(a).map(|x| x.clamp(lo, hi));
        self.push(value, Op::Clamp(a, lo, hi), "clamp")
    }

    /// Sums `a` down to `shape`; each target dimension must equal the source
    /// dimension or be 1.
    pub fn sum_to(&mut self, a: Var, shape: (usize, usize)) -> Result<Var> {
        let src = self.shape(a);
        if src == shape {
            return Ok(a);
        }
        let ok = |s: usize, t: usize| t == s || t == 1;
        if !ok(src.0, shape.0) || !ok(src.1, shape.1) {
            return Err(Error::Shape { op: "sum_to", lhs: src, rhs: shape });
        }
        let value = sum_to_shape(self.value(a), shape);
        self.push(value, Op::SumTo(a), "sum_to")
    }

    pub fn broadcast_to(&mut self, a: Var, shape: (usize, usize)) -> Result<Var> {
        let src = self.shape(a);
        if src == shape {
            return Ok(a);
        }
        let ok = |s: usize, t: usize| s == t || s == 1;
        if shape.0 == 0 || shape.1 == 0 || !ok(src.0, shape.0) || !ok(src.1, shape.1) {
            return Err(Error::Shape { op: "broadcast_to", lhs: src, rhs: shape });
        }
        let value = broadcast_to_shape(self.value(a), shape);
        self.push(value, Op::BroadcastTo(a), "broadcast_to")
    }

    pub fn reduce_sum(&mut self, a: Var, axis: Axis) -> Result<Var> {
        let (r, c) = self.shape(a);
        let shape = match axis {
            Axis::Rows => (1, c),
            Axis::Cols => (r, 1),
            Axis::All => (1, 1),
        };
        if shape == (r, c) {
            // Reducing a length-1 axis is the identity, but keep a distinct node
            // so callers always get a fresh handle.
            let value = self.value(a).clone();
            return self.push(value, Op::SumTo(a), "reduce_sum");
        }
        self.sum_to(a, shape)
    }

    pub fn reduce_mean(&mut self, a: Var, axis: Axis) -> Result<Var> {
        let (r, c) = self.shape(a);
        let n = match axis {
            Axis::Rows => r,
            Axis::Cols => c,
            Axis::All => r * c,
        };
        let s = self.reduce_sum(a, axis)?;
        self.scale(s, 1.0 / n as f64)
    }

    /// Concatenation along the last axis. All parts share the row count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::Graph("concat of zero tensors".into()))?;
        let rows = self.shape(first).0;
        let mut cols = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.0 != rows {
                return Err(Error::Shape { op: "concat", lhs: self.shape(first), rhs: s });
            }
            cols += s.1;
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let value = Tensor::new(rows, cols, data)?;
        self.push(value, Op::Concat(parts.into()), "concat")
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if len == 0 || start + len > c {
            return Err(Error::Shape { op: "slice_cols", lhs: (r, c), rhs: (start, len) });
        }
        let src = self.value(a);
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&src.row_slice(i)[start..start + len]);
        }
        let value = Tensor::new(r, len, data)?;
        self.push(value, Op::SliceCols(a, start), "slice_cols")
    }

    /// Places `a` at column offset `start` inside a zero matrix `total` wide.
    pub fn pad_cols(&mut self, a: Var, start: usize, total: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if start + c > total {
            return Err(Error::Shape { op: "pad_cols", lhs: (r, c), rhs: (start, total) });
        }
        let mut value = Tensor::zeros(r, total);
        let src = self.value(a);
        for i in 0..r {
            for j in 0..c {
                value.set(i, start + j, src.get(i, j));
            }
        }
        self.push(value, Op::PadCols(a, start), "pad_cols")
    }

    pub fn gather_rows(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let (v, d) = self.shape(table);
        if indices.is_empty() {
            return Err(Error::Graph("gather_rows with no indices".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= v) {
            return Err(Error::Lookup { index: bad, size: v });
        }
        let src = self.value(table);
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(src.row_slice(i));
        }
        let value = Tensor::new(indices.len(), d, data)?;
        self.push(value, Op::GatherRows(table, indices.into()), "gather_rows")
    }

    /// Adjoint of [`Graph::gather_rows`]: row `k` of `a` is added into row
    /// `indices[k]` of a zero matrix with `rows` rows.
    pub fn scatter_rows(&mut self, a: Var, indices: &[usize], rows: usize) -> Result<Var> {
        let (n, d) = self.shape(a);
        if n != indices.len() {
            return Err(Error::Shape { op: "scatter_rows", lhs: (n, d), rhs: (indices.len(), d) });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(Error::Lookup { index: bad, size: rows });
        }
        let mut value = Tensor::zeros(rows, d);
        let src = self.value(a);
        for (k, &i) in indices.iter().enumerate() {
            for j in 0..d {
                let v = value.get(i, j) + src.get(k, j);
                value.set(i, j, v);
            }
        }
        self.push(value, Op::ScatterRows(a, indices.into()), "scatter_rows")
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let src = self.value(a);
        let (r, c) = src.shape();
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            let row = src.row_slice(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            data.extend(exps.into_iter().map(|e| e / total));
        }
        let value = Tensor::new(r, c, data)?;
        self.push(value, Op::SoftmaxRows(a), "softmax_rows")
    }

    fn accumulate(&mut self, grads: &mut [Option<Var>], target: Var, contribution: Var) -> Result<()> {
        grads[target.0] = Some(match grads[target.0] {
            None => contribution,
            Some(prev) => self.add(prev, contribution)?,
        });
        Ok(())
    }

    /// Gradients of the scalar `output` with respect to each node in `wrt`.
    ///
    /// Nodes that `output` does not depend on receive zeros. With
    /// `create_graph` the returned gradients stay differentiable; otherwise
    /// the intermediate nodes are discarded and detached leaves returned.
    pub fn grad(&mut self, output: Var, wrt: &[Var], create_graph: bool) -> Result<Vec<Var>> {
        let out_shape = self.shape(output);
        if out_shape != (1, 1) {
            return Err(Error::NonScalarOutput(out_shape));
        }
        let mark = self.nodes.len();
        let n = output.0 + 1;

        let mut needs = vec![false; n];
        for w in wrt {
            if w.0 < n {
                needs[w.0] = true;
            }
        }
        for i in 0..n {
            if !needs[i] && self.nodes[i].op.inputs().iter().any(|v| needs[v.0]) {
                needs[i] = true;
            }
        }

        let mut grads: Vec<Option<Var>> = vec![None; n];
        if needs[output.0] {
            grads[output.0] = Some(self.scalar(1.0));
        }

        for i in (0..n).rev() {
            let Some(g) = grads[i] else { continue };
            if !needs[i] {
                continue;
            }
            let op = self.nodes[i].op.clone();
            let out = Var(i);
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    if needs[a.0] {
                        let ga = self.sum_to(g, self.shape(a))?;
                        self.accumulate(&mut grads, a, ga)?;
                    }
                    if needs[b.0] {
                        let gb = self.sum_to(g, self.shape(b))?;
                        self.accumulate(&mut grads, b, gb)?;
                    }
                }
                Op::Sub(a, b) => {
                    if needs[a.0] {
                        let ga = self.sum_to(g, self.shape(a))?;
                        self.accumulate(&mut grads, a, ga)?;
                    }
                    if needs[b.0] {
                        let neg = self.neg(g)?;
                        let gb = self.sum_to(neg, self.shape(b))?;
                        self.accumulate(&mut grads, b, gb)?;
                    }
                }
                Op::Mul(a, b) => {
                    if needs[a.0] {
                        let t = self.mul(g, b)?;
                        let ga = self.sum_to(t, self.shape(a))?;
                        self.accumulate(&mut grads, a, ga)?;
                    }
                    if needs[b.0] {
                        let t = self.mul(g, a)?;
                        let gb = self.sum_to(t, self.shape(b))?;
                        self.accumulate(&mut grads, b, gb)?;
                    }
                }
                Op::Scale(a, c) => {
                    let ga = self.scale(g, c)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::MatMul(a, b) => {
                    if needs[a.0] {
                        let bt = self.transpose(b)?;
                        let ga = self.matmul(g, bt)?;
                        self.accumulate(&mut grads, a, ga)?;
                    }
                    if needs[b.0] {
                        let at = self.transpose(a)?;
                        let gb = self.matmul(at, g)?;
                        self.accumulate(&mut grads, b, gb)?;
                    }
                }
                Op::Transpose(a) => {
                    let ga = self.transpose(g)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::Relu(a) => {
                    let mask = self.value(a).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
                    let mask = self.leaf(mask);
                    let ga = self.mul(g, mask)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::Sigmoid(a) => {
                    let one = self.scalar(1.0);
                    let comp = self.sub(one, out)?;
                    let slope = self.mul(out, comp)?;
                    let ga = self.mul(g, slope)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::Exp(a) => {
                    let ga = self.mul(g, out)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::Ln(a) => {
                    let r = self.recip(a)?;
                    let ga = self.mul(g, r)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::Recip(a) => {
                    let sq = self.mul(out, out)?;
                    let t = self.mul(g, sq)?;
                    let ga = self.neg(t)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::Clamp(a, lo, hi) => {
                    let mask = self.value(a).map(|x| if x >= lo && x <= hi { 1.0 } else { 0.0 });
                    let mask = self.leaf(mask);
                    let ga = self.mul(g, mask)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::SumTo(a) => {
                    let ga = self.broadcast_to(g, self.shape(a))?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::BroadcastTo(a) => {
                    let ga = self.sum_to(g, self.shape(a))?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts.iter() {
                        let width = self.shape(p).1;
                        if needs[p.0] {
                            let gp = self.slice_cols(g, offset, width)?;
                            self.accumulate(&mut grads, p, gp)?;
                        }
                        offset += width;
                    }
                }
                Op::SliceCols(a, start) => {
                    let total = self.shape(a).1;
                    let ga = self.pad_cols(g, start, total)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::PadCols(a, start) => {
                    let width = self.shape(a).1;
                    let ga = self.slice_cols(g, start, width)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::GatherRows(a, indices) => {
                    let rows = self.shape(a).0;
                    let ga = self.scatter_rows(g, &indices, rows)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::ScatterRows(a, indices) => {
                    let ga = self.gather_rows(g, &indices)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
                Op::SoftmaxRows(a) => {
                    let rows = self.shape(out).0;
                    let gy = self.mul(g, out)?;
                    let dot = self.sum_to(gy, (rows, 1))?;
                    let centered = self.sub(g, dot)?;
                    let ga = self.mul(out, centered)?;
                    self.accumulate(&mut grads, a, ga)?;
                }
            }
        }

        let mut results = Vec::with_capacity(wrt.len());
        if create_graph {
            for w in wrt {
                let g = match grads.get(w.0).copied().flatten() {
                    Some(g) => g,
                    None => {
                        let (r, c) = self.shape(*w);
                        self.leaf(Tensor::zeros(r, c))
                    }
                };
                results.push(g);
            }
        } else {
            let values: Vec<Tensor> = wrt
                .iter()
                .map(|w| match grads.get(w.0).copied().flatten() {
                    Some(g) => self.value(g).clone(),
                    None => {
                        let (r, c) = self.shape(*w);
                        Tensor::zeros(r, c)
                    }
                })
                .collect();
            self.nodes.truncate(mark);
            for v in values {
                results.push(self.leaf(v));
            }
        }
        Ok(results)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_derivative() {
        let mut g = Graph::new();
        let x = g.scalar(3.0);
        let y = g.mul(x, x).unwrap();
        let dx = g.grad(y, &[x], false).unwrap();
        assert_eq!(g.value(dx[0]).item(), 6.0);
    }

    #[test]
    fn second_derivative_of_cube() {
        let mut g = Graph::new();
        let x = g.scalar(2.0);
        let x2 = g.mul(x, x).unwrap();
        let y = g.mul(x2, x).unwrap();
        let dx = g.grad(y, &[x], true).unwrap()[0];
        assert_eq!(g.value(dx).item(), 12.0);
        let ddx = g.grad(dx, &[x], false).unwrap()[0];
        assert_eq!(g.value(ddx).item(), 12.0);
    }

    #[test]
    fn unreachable_node_gets_zero() {
        let mut g = Graph::new();
        let x = g.scalar(1.0);
        let z = g.leaf(Tensor::zeros(2, 3));
        let y = g.mul(x, x).unwrap();
        let grads = g.grad(y, &[z], false).unwrap();
        assert_eq!(g.value(grads[0]), &Tensor::zeros(2, 3));
    }

    #[test]
    fn non_scalar_output_is_rejected() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(2, 1));
        assert!(matches!(g.grad(x, &[x], false), Err(Error::NonScalarOutput((2, 1)))));
    }

    #[test]
    fn detached_branch_blocks_gradient() {
        let mut g = Graph::new();
        let x = g.scalar(3.0);
        let d = g.detach(x);
        let y = g.mul(x, d).unwrap();
        let dx = g.grad(y, &[x], false).unwrap();
        assert_eq!(g.value(dx[0]).item(), 3.0);
    }

    #[test]
    fn non_finite_results_are_errors() {
        let mut g = Graph::new();
        let x = g.scalar(0.0);
        assert!(matches!(g.ln(x), Err(Error::NonFinite("ln"))));
    }

    #[test]
    fn broadcast_shapes() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::zeros(3, 4));
        let row = g.leaf(Tensor::filled(1, 4, 1.0));
        let col = g.leaf(Tensor::filled(3, 1, 2.0));
        assert_eq!(g.add(a, row).map(|v| g.shape(v)).unwrap(), (3, 4));
        let s = g.add(a, col).unwrap();
        assert_eq!(g.value(s).get(2, 3), 2.0);
        let bad = g.leaf(Tensor::zeros(2, 4));
        assert!(g.add(a, bad).is_err());
    }
}
