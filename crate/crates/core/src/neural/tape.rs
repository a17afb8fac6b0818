//! Computation tape: forward values plus recorded backward steps.
//!
//! A graph is built per example and discarded after the update. Nodes
//! are appended topologically, so during the backward sweep the
//! gradient buffer can be split at the output index: every input of a
//! step lives strictly below its output.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::neural::ParameterStore;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRef(usize);

/// Gradients keyed by parameter path, as produced by [`Tape::backward`].
pub type GradMap = BTreeMap<String, Vec<f64>>;

type BackFn = Box<dyn Fn(&[Vec<f64>], &mut [Vec<f64>], &[f64])>;

pub struct Tape {
    vals: Vec<Vec<f64>>,
    shapes: Vec<Vec<usize>>,
    steps: Vec<(usize, BackFn)>,
    params: Vec<(usize, String)>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { vals: Vec::new(), shapes: Vec::new(), steps: Vec::new(), params: Vec::new() }
    }

    pub fn value(&self, node: NodeRef) -> &[f64] {
        &self.vals[node.0]
    }

    pub fn shape(&self, node: NodeRef) -> &[usize] {
        &self.shapes[node.0]
    }

    pub fn n_nodes(&self) -> usize {
        self.vals.len()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>) -> NodeRef {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.vals.push(data);
        self.shapes.push(shape);
        NodeRef(self.vals.len() - 1)
    }

    fn record(&mut self, out: NodeRef, back: BackFn) {
        self.steps.push((out.0, back));
    }

    /// Constant leaf vector (no gradient flows into it).
    pub fn input(&mut self, data: &[f64]) -> NodeRef {
        self.push(vec![data.len()], data.to_vec())
    }

    /// Constant leaf with an explicit shape.
    pub fn input_shaped(&mut self, shape: &[usize], data: &[f64]) -> Result<NodeRef> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {} values, got {}",
                shape.iter().product::<usize>(),
                data.len()
            )));
        }
        Ok(self.push(shape.to_vec(), data.to_vec()))
    }

    /// Bind the parameter at `path` as a leaf whose gradient is
    /// collected by [`Tape::backward`].
    pub fn param(&mut self, store: &ParameterStore, path: &str) -> Result<NodeRef> {
        let tensor = store.get(path)?;
        let node = self.push(tensor.shape().to_vec(), tensor.data().to_vec());
        self.params.push((node.0, path.to_owned()));
        Ok(node)
    }

    fn check_vector(&self, node: NodeRef, what: &str) -> Result<usize> {
        match self.shapes[node.0].as_slice() {
            [n] => Ok(*n),
            other => Err(Error::Shape(format!("{what} must be a vector, got {other:?}"))),
        }
    }

    /// Matrix-vector product `W x`.
    pub fn matvec(&mut self, w: NodeRef, x: NodeRef) -> Result<NodeRef> {
        let (rows, cols) = match self.shapes[w.0].as_slice() {
            [r, c] => (*r, *c),
            other => {
                return Err(Error::Shape(format!("matvec weight must be 2-D, got {other:?}")));
            }
        };
        let n = self.check_vector(x, "matvec input")?;
        if n != cols {
            return Err(Error::Shape(format!(
                "matvec: weight is {rows}x{cols} but input has length {n}"
            )));
        }
        let mut out = vec![0.0; rows];
        {
            let wv = &self.vals[w.0];
            let xv = &self.vals[x.0];
            for i in 0..rows {
                let row = &wv[i * cols..(i + 1) * cols];
                out[i] = row.iter().zip(xv).map(|(a, b)| a * b).sum();
            }
        }
        let node = self.push(vec![rows], out);
        let (wi, xi) = (w.0, x.0);
        self.record(
            node,
            Box::new(move |vals, below, go| {
                let xv = vals[xi].clone();
                let wv = vals[wi].clone();
                for i in 0..rows {
                    let g = go[i];
                    if g == 0.0 {
                        continue;
                    }
                    let gw = &mut below[wi][i * cols..(i + 1) * cols];
                    for j in 0..cols {
                        gw[j] += g * xv[j];
                    }
                }
                let gx = &mut below[xi];
                for j in 0..cols {
                    let mut acc = 0.0;
                    for i in 0..rows {
                        acc += go[i] * wv[i * cols + j];
                    }
                    gx[j] += acc;
                }
            }),
        );
        Ok(node)
    }

    fn same_shape(&self, a: NodeRef, b: NodeRef, what: &str) -> Result<()> {
        if self.shapes[a.0] != self.shapes[b.0] {
            return Err(Error::Shape(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.shapes[a.0], self.shapes[b.0]
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef> {
        self.same_shape(a, b, "add")?;
        let out: Vec<f64> =
            self.vals[a.0].iter().zip(&self.vals[b.0]).map(|(x, y)| x + y).collect();
        let node = self.push(self.shapes[a.0].clone(), out);
        let (ai, bi) = (a.0, b.0);
        self.record(
            node,
            Box::new(move |_, below, go| {
                for (g, v) in go.iter().zip(below[ai].iter_mut()) {
                    *v += g;
                }
                for (g, v) in go.iter().zip(below[bi].iter_mut()) {
                    *v += g;
                }
            }),
        );
        Ok(node)
    }

    pub fn sub(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef> {
        self.same_shape(a, b, "sub")?;
        let out: Vec<f64> =
            self.vals[a.0].iter().zip(&self.vals[b.0]).map(|(x, y)| x - y).collect();
        let node = self.push(self.shapes[a.0].clone(), out);
        let (ai, bi) = (a.0, b.0);
        self.record(
            node,
            Box::new(move |_, below, go| {
                for (g, v) in go.iter().zip(below[ai].iter_mut()) {
                    *v += g;
                }
                for (g, v) in go.iter().zip(below[bi].iter_mut()) {
                    *v -= g;
                }
            }),
        );
        Ok(node)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef> {
        self.same_shape(a, b, "mul")?;
        let out: Vec<f64> =
            self.vals[a.0].iter().zip(&self.vals[b.0]).map(|(x, y)| x * y).collect();
        let node = self.push(self.shapes[a.0].clone(), out);
        let (ai, bi) = (a.0, b.0);
        self.record(
            node,
            Box::new(move |vals, below, go| {
                let av = vals[ai].clone();
                let bv = vals[bi].clone();
                for (k, g) in go.iter().enumerate() {
                    below[ai][k] += g * bv[k];
                    below[bi][k] += g * av[k];
                }
            }),
        );
        Ok(node)
    }

    fn unary(
        &mut self,
        a: NodeRef,
        f: impl Fn(f64) -> f64,
        // dy/dx expressed in terms of (x, y).
        dfdx: impl Fn(f64, f64) -> f64 + 'static,
    ) -> NodeRef {
        let out: Vec<f64> = self.vals[a.0].iter().map(|&x| f(x)).collect();
        let node = self.push(self.shapes[a.0].clone(), out);
        let (ai, oi) = (a.0, node.0);
        self.record(
            node,
            Box::new(move |vals, below, go| {
                let xv = &vals[ai];
                let yv = &vals[oi];
                for (k, g) in go.iter().enumerate() {
                    below[ai][k] += g * dfdx(xv[k], yv[k]);
                }
            }),
        );
        node
    }

    pub fn sigmoid(&mut self, a: NodeRef) -> NodeRef {
        self.unary(a, |x| 1.0 / (1.0 + (-x).exp()), |_, y| y * (1.0 - y))
    }

    pub fn tanh(&mut self, a: NodeRef) -> NodeRef {
        self.unary(a, f64::tanh, |_, y| 1.0 - y * y)
    }

    pub fn relu(&mut self, a: NodeRef) -> NodeRef {
        self.unary(a, |x| x.max(0.0), |x, _| if x > 0.0 { 1.0 } else { 0.0 })
    }

    /// Concatenate vectors.
    pub fn concat(&mut self, parts: &[NodeRef]) -> Result<NodeRef> {
        if parts.is_empty() {
            return Err(Error::Arity("concat needs at least one part".into()));
        }
        let mut lens = Vec::with_capacity(parts.len());
        let mut out = Vec::new();
        for &p in parts {
            lens.push(self.check_vector(p, "concat part")?);
            out.extend_from_slice(&self.vals[p.0]);
        }
        let node = self.push(vec![out.len()], out);
        let idxs: Vec<usize> = parts.iter().map(|p| p.0).collect();
        self.record(
            node,
            Box::new(move |_, below, go| {
                let mut offset = 0;
                for (&pi, &len) in idxs.iter().zip(&lens) {
                    for k in 0..len {
                        below[pi][k] += go[offset + k];
                    }
                    offset += len;
                }
            }),
        );
        Ok(node)
    }

    /// Gather rows of a matrix into an `(L, cols)` matrix; row `i` of
    /// the output is row `rows[i]` of the table. Backward scatters.
    pub fn gather_rows(&mut self, table: NodeRef, rows: &[usize]) -> Result<NodeRef> {
        let (n_rows, cols) = match self.shapes[table.0].as_slice() {
            [r, c] => (*r, *c),
            other => {
                return Err(Error::Shape(format!("gather_rows table must be 2-D, got {other:?}")));
            }
        };
        if rows.is_empty() {
            return Err(Error::Arity("gather_rows needs at least one row".into()));
        }
        for &r in rows {
            if r >= n_rows {
                return Err(Error::IndexOutOfRange { index: r, len: n_rows });
            }
        }
        let mut out = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            out.extend_from_slice(&self.vals[table.0][r * cols..(r + 1) * cols]);
        }
        let node = self.push(vec![rows.len(), cols], out);
        let ti = table.0;
        let rows = rows.to_vec();
        self.record(
            node,
            Box::new(move |_, below, go| {
                for (i, &r) in rows.iter().enumerate() {
                    let dst = &mut below[ti][r * cols..(r + 1) * cols];
                    let src = &go[i * cols..(i + 1) * cols];
                    for k in 0..cols {
                        dst[k] += src[k];
                    }
                }
            }),
        );
        Ok(node)
    }

    /// Width-3, stride-1, zero-padded 1-D convolution over the rows of
    /// an `(L, c)` matrix. `kernel` has shape `(c_out, c, 3)` with the
    /// width axis ordered (previous, current, next); `bias` length
    /// `c_out`. Output is `(L, c_out)`.
    pub fn conv1d_same(&mut self, x: NodeRef, kernel: NodeRef, bias: NodeRef) -> Result<NodeRef> {
        let (len, c_in) = match self.shapes[x.0].as_slice() {
            [l, c] => (*l, *c),
            other => {
                return Err(Error::Shape(format!("conv1d input must be 2-D, got {other:?}")));
            }
        };
        let (c_out, kc_in, width) = match self.shapes[kernel.0].as_slice() {
            [o, i, w] => (*o, *i, *w),
            other => {
                return Err(Error::Shape(format!("conv1d kernel must be 3-D, got {other:?}")));
            }
        };
        if kc_in != c_in || width != 3 {
            return Err(Error::Shape(format!(
                "conv1d kernel must be (out, {c_in}, 3), got ({c_out}, {kc_in}, {width})"
            )));
        }
        if self.check_vector(bias, "conv1d bias")? != c_out {
            return Err(Error::Shape("conv1d bias length must match output channels".into()));
        }

        let mut out = vec![0.0; len * c_out];
        {
            let xv = &self.vals[x.0];
            let kv = &self.vals[kernel.0];
            let bv = &self.vals[bias.0];
            for p in 0..len {
                for o in 0..c_out {
                    let mut acc = bv[o];
                    for (k, dp) in [-1isize, 0, 1].into_iter().enumerate() {
                        let q = p as isize + dp;
                        if q < 0 || q >= len as isize {
                            continue;
                        }
                        let xrow = &xv[q as usize * c_in..(q as usize + 1) * c_in];
                        for i in 0..c_in {
                            acc += xrow[i] * kv[(o * c_in + i) * 3 + k];
                        }
                    }
                    out[p * c_out + o] = acc;
                }
            }
        }
        let node = self.push(vec![len, c_out], out);
        let (xi, ki, bi) = (x.0, kernel.0, bias.0);
        self.record(
            node,
            Box::new(move |vals, below, go| {
                let xv = vals[xi].clone();
                let kv = vals[ki].clone();
                for p in 0..len {
                    for o in 0..c_out {
                        let g = go[p * c_out + o];
                        if g == 0.0 {
                            continue;
                        }
                        below[bi][o] += g;
                        for (k, dp) in [-1isize, 0, 1].into_iter().enumerate() {
                            let q = p as isize + dp;
                            if q < 0 || q >= len as isize {
                                continue;
                            }
                            let q = q as usize;
                            for i in 0..c_in {
                                below[ki][(o * c_in + i) * 3 + k] += g * xv[q * c_in + i];
                                below[xi][q * c_in + i] += g * kv[(o * c_in + i) * 3 + k];
                            }
                        }
                    }
                }
            }),
        );
        Ok(node)
    }

    /// Column-wise max over the rows of an `(L, c)` matrix, yielding a
    /// length-`c` vector. Gradient flows to the first maximal row.
    pub fn max_over_rows(&mut self, x: NodeRef) -> Result<NodeRef> {
        let (len, cols) = match self.shapes[x.0].as_slice() {
            [l, c] => (*l, *c),
            other => {
                return Err(Error::Shape(format!(
                    "max_over_rows input must be 2-D, got {other:?}"
                )));
            }
        };
        let xv = &self.vals[x.0];
        let mut out = vec![f64::NEG_INFINITY; cols];
        let mut argmax = vec![0usize; cols];
        for p in 0..len {
            for c in 0..cols {
                let v = xv[p * cols + c];
                if v > out[c] {
                    out[c] = v;
                    argmax[c] = p;
                }
            }
        }
        let node = self.push(vec![cols], out);
        let xi = x.0;
        self.record(
            node,
            Box::new(move |_, below, go| {
                for c in 0..cols {
                    below[xi][argmax[c] * cols + c] += go[c];
                }
            }),
        );
        Ok(node)
    }

    /// Mean of scalar nodes.
    pub fn mean_scalars(&mut self, xs: &[NodeRef]) -> Result<NodeRef> {
        if xs.is_empty() {
            return Err(Error::Arity("mean_scalars needs at least one term".into()));
        }
        for &x in xs {
            if self.vals[x.0].len() != 1 {
                return Err(Error::Shape("mean_scalars terms must be scalars".into()));
            }
        }
        let n = xs.len() as f64;
        let mean = xs.iter().map(|x| self.vals[x.0][0]).sum::<f64>() / n;
        let node = self.push(vec![1], vec![mean]);
        let idxs: Vec<usize> = xs.iter().map(|x| x.0).collect();
        self.record(
            node,
            Box::new(move |_, below, go| {
                let g = go[0] / n;
                for &i in &idxs {
                    below[i][0] += g;
                }
            }),
        );
        Ok(node)
    }

    /// Softmax cross-entropy against a gold index, as a scalar node.
    /// Numerically stable via max-subtraction.
    pub fn softmax_xent(&mut self, logits: NodeRef, gold: usize) -> Result<NodeRef> {
        let n = self.check_vector(logits, "softmax_xent logits")?;
        if gold >= n {
            return Err(Error::IndexOutOfRange { index: gold, len: n });
        }
        let (loss, probs) = super::layers::softmax_xent_forward(&self.vals[logits.0], gold);
        let node = self.push(vec![1], vec![loss]);
        let li = logits.0;
        self.record(
            node,
            Box::new(move |_, below, go| {
                let g = go[0];
                for (k, p) in probs.iter().enumerate() {
                    let indicator = if k == gold { 1.0 } else { 0.0 };
                    below[li][k] += g * (p - indicator);
                }
            }),
        );
        Ok(node)
    }

    /// Run the backward sweep from a scalar `loss` node and return the
    /// accumulated gradients of every bound parameter, keyed by path.
    pub fn backward(&self, loss: NodeRef) -> Result<GradMap> {
        if self.vals[loss.0].len() != 1 {
            return Err(Error::Shape("backward requires a scalar loss node".into()));
        }
        let mut grads: Vec<Vec<f64>> =
            self.vals.iter().map(|v| vec![0.0; v.len()]).collect();
        grads[loss.0][0] = 1.0;
        for (out, back) in self.steps.iter().rev() {
            let (below, rest) = grads.split_at_mut(*out);
            back(&self.vals, below, &rest[0]);
        }
        let mut map = GradMap::new();
        for (idx, path) in &self.params {
            let entry = map.entry(path.clone()).or_insert_with(|| vec![0.0; grads[*idx].len()]);
            for (e, g) in entry.iter_mut().zip(&grads[*idx]) {
                *e += g;
            }
        }
        Ok(map)
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_forward_and_backward() {
        let mut store = ParameterStore::new(0);
        store
            .insert("w", crate::neural::Tensor::matrix(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap())
            .unwrap();
        let mut tape = Tape::new();
        let w = tape.param(&store, "w").unwrap();
        let x = tape.input(&[1.0, 0.5, -1.0]);
        let y = tape.matvec(w, x).unwrap();
        assert_eq!(tape.value(y), &[1.0 + 1.0 - 3.0, 4.0 + 2.5 - 6.0]);

        // Loss = sum of outputs, via mean * 2... use a direct scalar:
        let gold = 0;
        let loss = tape.softmax_xent(y, gold).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert!(grads.contains_key("w"));
        assert_eq!(grads["w"].len(), 6);
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        let mut tape = Tape::new();
        let x = tape.input(&[0.0, -1.0, 2.0]);
        let y = tape.relu(x);
        assert_eq!(tape.value(y), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn concat_splits_gradient() {
        let mut store = ParameterStore::new(0);
        store.insert("a", crate::neural::Tensor::vector(vec![1.0, 2.0])).unwrap();
        store.insert("b", crate::neural::Tensor::vector(vec![3.0])).unwrap();
        let mut tape = Tape::new();
        let a = tape.param(&store, "a").unwrap();
        let b = tape.param(&store, "b").unwrap();
        let c = tape.concat(&[a, b]).unwrap();
        assert_eq!(tape.value(c), &[1.0, 2.0, 3.0]);
        let loss = tape.softmax_xent(c, 1).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads["a"].len(), 2);
        assert_eq!(grads["b"].len(), 1);
        // Softmax gradient components over the concatenation sum to 0.
        let total: f64 = grads["a"].iter().chain(grads["b"].iter()).sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn backward_requires_scalar() {
        let mut tape = Tape::new();
        let x = tape.input(&[1.0, 2.0]);
        assert!(tape.backward(x).is_err());
    }

    #[test]
    fn gather_rows_bounds_check() {
        let mut tape = Tape::new();
        let t = tape.input_shaped(&[2, 2], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(tape.gather_rows(t, &[2]).is_err());
        let g = tape.gather_rows(t, &[1, 0, 1]).unwrap();
        assert_eq!(tape.value(g), &[3.0, 4.0, 1.0, 2.0, 3.0, 4.0]);
    }
}
