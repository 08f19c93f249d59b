//! Recurrent policy/value network: one GRU layer feeding a softmax policy head
//! and a scalar value head.
//!
//! All weights live in one flat buffer so the optimizer can treat the network
//! as a single vector; typed views are carved out on demand. Gate blocks are
//! stacked in `[reset, update, candidate]` order. Gradients use the same
//! [`PolicyParams`] layout.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis, Zip};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::util::{read_named_arrays, take_array, write_named_arrays, NamedArray};
use std::path::Path;

/// Layer sizes of a [`PolicyParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    pub input: usize,
    pub hidden: usize,
    pub actions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    w_ih: usize,
    w_hh: usize,
    b_ih: usize,
    b_hh: usize,
    w_pi: usize,
    b_pi: usize,
    w_v: usize,
    b_v: usize,
    len: usize,
}

impl NetShape {
    fn offsets(&self) -> Offsets {
        let (d, h, j) = (self.input, self.hidden, self.actions);
        let w_ih = 0;
        let w_hh = w_ih + 3 * h * d;
        let b_ih = w_hh + 3 * h * h;
        let b_hh = b_ih + 3 * h;
        let w_pi = b_hh + 3 * h;
        let b_pi = w_pi + j * h;
        let w_v = b_pi + j;
        let b_v = w_v + h;
        Offsets {
            w_ih,
            w_hh,
            b_ih,
            b_hh,
            w_pi,
            b_pi,
            w_v,
            b_v,
            len: b_v + 1,
        }
    }

    /// Total number of scalar weights.
    pub fn param_count(&self) -> usize {
        self.offsets().len
    }

    /// Named arrays as `(name, rows, cols)`, in storage order.
    pub fn layout(&self) -> [(&'static str, usize, usize); 8] {
        let (d, h, j) = (self.input, self.hidden, self.actions);
        [
            ("w_ih", 3 * h, d),
            ("w_hh", 3 * h, h),
            ("b_ih", 3 * h, 1),
            ("b_hh", 3 * h, 1),
            ("w_pi", j, h),
            ("b_pi", j, 1),
            ("w_v", 1, h),
            ("b_v", 1, 1),
        ]
    }
}

/// Weights of the GRU policy/value network.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    shape: NetShape,
    data: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(shape: NetShape) -> Self {
        PolicyParams {
            shape,
            data: vec![0.0; shape.param_count()],
        }
    }

    /// Recurrent weights uniform in ±1/√H; the policy head is scaled down so the
    /// initial policy is close to uniform.
    pub fn init(shape: NetShape, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(shape);
        let o = shape.offsets();
        let bound = 1.0 / (shape.hidden as f64).sqrt();
        for x in &mut p.data[o.w_ih..o.w_pi] {
            *x = rng.random_range(-bound..bound);
        }
        for x in &mut p.data[o.w_pi..o.b_pi] {
            *x = 0.01 * rng.random_range(-bound..bound);
        }
        for x in &mut p.data[o.w_v..o.b_v] {
            *x = rng.random_range(-bound..bound);
        }
        p
    }

    pub fn from_flat(shape: NetShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.param_count() {
            return Err(Error::Shape(format!(
                "policy expects {} weights, got {}",
                shape.param_count(),
                data.len()
            )));
        }
        Ok(PolicyParams { shape, data })
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn mat(&self, off: usize, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((rows, cols), &self.data[off..off + rows * cols]).unwrap()
    }

    fn mat_mut(&mut self, off: usize, rows: usize, cols: usize) -> ArrayViewMut2<'_, f64> {
        ArrayViewMut2::from_shape((rows, cols), &mut self.data[off..off + rows * cols]).unwrap()
    }

    fn vec(&self, off: usize, len: usize) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.data[off..off + len])
    }

    fn vec_mut(&mut self, off: usize, len: usize) -> ArrayViewMut1<'_, f64> {
        ArrayViewMut1::from(&mut self.data[off..off + len])
    }

    pub fn w_ih(&self) -> ArrayView2<'_, f64> {
        let (o, sh) = (self.shape.offsets(), self.shape);
        self.mat(o.w_ih, 3 * sh.hidden, sh.input)
    }

    pub fn w_hh(&self) -> ArrayView2<'_, f64> {
        let (o, sh) = (self.shape.offsets(), self.shape);
        self.mat(o.w_hh, 3 * sh.hidden, sh.hidden)
    }

    pub fn b_ih(&self) -> ArrayView1<'_, f64> {
        let (o, sh) = (self.shape.offsets(), self.shape);
        self.vec(o.b_ih, 3 * sh.hidden)
    }

    pub fn b_hh(&self) -> ArrayView1<'_, f64> {
        let (o, sh) = (self.shape.offsets(), self.shape);
        self.vec(o.b_hh, 3 * sh.hidden)
    }

    pub fn w_pi(&self) -> ArrayView2<'_, f64> {
        let (o, sh) = (self.shape.offsets(), self.shape);
        self.mat(o.w_pi, sh.actions, sh.hidden)
    }

    pub fn b_pi(&self) -> ArrayView1<'_, f64> {
        let (o, sh) = (self.shape.offsets(), self.shape);
        self.vec(o.b_pi, sh.actions)
    }

    pub fn w_v(&self) -> ArrayView1<'_, f64> {
        let (o, sh) = (self.shape.offsets(), self.shape);
        self.vec(o.w_v, sh.hidden)
    }

    pub fn b_v(&self) -> f64 {
        self.data[self.shape.offsets().b_v]
    }

    /// Contiguous slice holding the array called `name` in [`NetShape::layout`].
    pub fn named(&self, name: &str) -> Option<&[f64]> {
        let range = self.named_range(name)?;
        Some(&self.data[range])
    }

    fn named_range(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let mut start = 0;
        for (n, r, c) in self.shape.layout() {
            if n == name {
                return Some(start..start + r * c);
            }
            start += r * c;
        }
        None
    }

    /// Stable fingerprint of the weights, bit-exact.
    pub fn fingerprint(&self) -> String {
        crate::util::fingerprint_f64(&self.data)
    }

    /// Single-step forward for one observation.
    pub fn step(&self, obs: &[f64], hidden: &[f64]) -> Result<StepOutput> {
        let sh = self.shape;
        if obs.len() != sh.input {
            return Err(Error::Shape(format!(
                "observation has {} entries, network expects {}",
                obs.len(),
                sh.input
            )));
        }
        if hidden.len() != sh.hidden {
            return Err(Error::Shape(format!(
                "hidden state has {} entries, network expects {}",
                hidden.len(),
                sh.hidden
            )));
        }
        let x = Array2::from_shape_vec((1, sh.input), obs.to_vec()).unwrap();
        let h = Array2::from_shape_vec((1, sh.hidden), hidden.to_vec()).unwrap();
        let cell = self.cell_forward(&x, &h);
        let logits = self.policy_logits(&cell.h);
        let value = self.value(&cell.h)[0];
        let probs = softmax(logits.row(0));
        Ok(StepOutput {
            probs,
            value,
            hidden: cell.h.into_raw_vec_and_offset().0,
        })
    }

    fn cell_forward(&self, x: &Array2<f64>, h_prev: &Array2<f64>) -> CellCache {
        let hs = self.shape.hidden;
        let gi = x.dot(&self.w_ih().t()) + &self.b_ih();
        let gh = h_prev.dot(&self.w_hh().t()) + &self.b_hh();
        let mut r = &gi.slice(s![.., 0..hs]) + &gh.slice(s![.., 0..hs]);
        r.mapv_inplace(sigmoid);
        let mut z = &gi.slice(s![.., hs..2 * hs]) + &gh.slice(s![.., hs..2 * hs]);
        z.mapv_inplace(sigmoid);
        let ghn = gh.slice(s![.., 2 * hs..]).to_owned();
        let mut n = gi.slice(s![.., 2 * hs..]).to_owned();
        Zip::from(&mut n)
            .and(&r)
            .and(&ghn)
            .for_each(|n, &r, &g| *n = (*n + r * g).tanh());
        let mut h = Array2::zeros(n.raw_dim());
        Zip::from(&mut h)
            .and(&n)
            .and(&z)
            .and(h_prev)
            .for_each(|h, &n, &z, &hp| *h = (1.0 - z) * n + z * hp);
        CellCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            r,
            z,
            n,
            ghn,
            h,
        }
    }

    fn policy_logits(&self, h: &Array2<f64>) -> Array2<f64> {
        h.dot(&self.w_pi().t()) + &self.b_pi()
    }

    fn value(&self, h: &Array2<f64>) -> Array1<f64> {
        h.dot(&self.w_v()) + self.b_v()
    }

    /// Forward pass over `B` parallel sequences of equal length.
    ///
    /// `xs[t]` is `B × input`; `resets[t][b]` zeroes row `b`'s hidden state
    /// before step `t` (an episode starts there).
    pub fn forward_seq(
        &self,
        xs: &[Array2<f64>],
        h0: Array2<f64>,
        resets: &[Vec<bool>],
    ) -> SeqForward {
        let mut h = h0;
        let mut cells = Vec::with_capacity(xs.len());
        let mut logits = Vec::with_capacity(xs.len());
        let mut values = Vec::with_capacity(xs.len());
        for (x, reset) in xs.iter().zip(resets) {
            for (b, &r) in reset.iter().enumerate() {
                if r {
                    h.row_mut(b).fill(0.0);
                }
            }
            let cell = self.cell_forward(x, &h);
            logits.push(self.policy_logits(&cell.h));
            values.push(self.value(&cell.h));
            h = cell.h.clone();
            cells.push(cell);
        }
        SeqForward {
            cells,
            logits,
            values,
            resets: resets.to_vec(),
        }
    }

    /// Backpropagation through time for [`forward_seq`](Self::forward_seq),
    /// given loss gradients w.r.t. every step's logits and value. Gradient into
    /// the initial hidden state is dropped (truncated BPTT).
    pub fn backward_seq(
        &self,
        fwd: &SeqForward,
        dlogits: &[Array2<f64>],
        dvalues: &[Array1<f64>],
    ) -> PolicyParams {
        let sh = self.shape;
        let hs = sh.hidden;
        let o = sh.offsets();
        let mut grad = PolicyParams::zeros(sh);
        let Some(first) = fwd.cells.first() else {
            return grad;
        };
        let batch = first.h.nrows();
        let mut dh_next: Array2<f64> = Array2::zeros((batch, hs));
        let mut dgi = Array2::zeros((batch, 3 * hs));
        let mut dgh = Array2::zeros((batch, 3 * hs));

        for t in (0..fwd.cells.len()).rev() {
            let cell = &fwd.cells[t];
            let dl = &dlogits[t];
            let dv = &dvalues[t];

            // heads
            grad.mat_mut(o.w_pi, sh.actions, hs)
                .scaled_add(1.0, &dl.t().dot(&cell.h));
            grad.vec_mut(o.b_pi, sh.actions)
                .scaled_add(1.0, &dl.sum_axis(Axis(0)));
            grad.vec_mut(o.w_v, hs).scaled_add(1.0, &cell.h.t().dot(dv));
            grad.data[o.b_v] += dv.sum();

            let mut dh = dl.dot(&self.w_pi()) + &dh_next;
            for (mut row, &d) in dh.rows_mut().into_iter().zip(dv.iter()) {
                row.scaled_add(d, &self.w_v());
            }

            // gates
            let mut dh_prev = Array2::zeros((batch, hs));
            for b in 0..batch {
                for k in 0..hs {
                    let (r, z, n) = (cell.r[[b, k]], cell.z[[b, k]], cell.n[[b, k]]);
                    let hp = cell.h_prev[[b, k]];
                    let d = dh[[b, k]];
                    let dn = d * (1.0 - z);
                    let dz = d * (hp - n);
                    let dan = dn * (1.0 - n * n);
                    let dr = dan * cell.ghn[[b, k]];
                    let dar = dr * r * (1.0 - r);
                    let daz = dz * z * (1.0 - z);
                    dgi[[b, k]] = dar;
                    dgi[[b, hs + k]] = daz;
                    dgi[[b, 2 * hs + k]] = dan;
                    dgh[[b, k]] = dar;
                    dgh[[b, hs + k]] = daz;
                    dgh[[b, 2 * hs + k]] = dan * r;
                    dh_prev[[b, k]] = d * z;
                }
            }
            grad.mat_mut(o.w_ih, 3 * hs, sh.input)
                .scaled_add(1.0, &dgi.t().dot(&cell.x));
            grad.vec_mut(o.b_ih, 3 * hs)
                .scaled_add(1.0, &dgi.sum_axis(Axis(0)));
            grad.mat_mut(o.w_hh, 3 * hs, hs)
                .scaled_add(1.0, &dgh.t().dot(&cell.h_prev));
            grad.vec_mut(o.b_hh, 3 * hs)
                .scaled_add(1.0, &dgh.sum_axis(Axis(0)));
            dh_prev += &dgh.dot(&self.w_hh());

            for (b, &r) in fwd.resets[t].iter().enumerate() {
                if r {
                    dh_prev.row_mut(b).fill(0.0);
                }
            }
            dh_next = dh_prev;
            dh.fill(0.0);
        }
        grad
    }
}

impl PolicyParams {
    /// Weights as named arrays in storage order.
    pub fn to_named_arrays(&self) -> Vec<NamedArray> {
        let mut pos = 0;
        self.shape
            .layout()
            .iter()
            .map(|&(name, rows, cols)| {
                let values = self.data[pos..pos + rows * cols].to_vec();
                pos += rows * cols;
                NamedArray {
                    name: name.to_string(),
                    rows,
                    cols,
                    values,
                }
            })
            .collect()
    }

    /// Rebuilds weights, inferring the network shape from the arrays.
    pub fn from_named_arrays(arrays: &[NamedArray]) -> Result<Self> {
        let dims = |name: &str| {
            arrays
                .iter()
                .find(|a| a.name == name)
                .map(|a| (a.rows, a.cols))
                .ok_or_else(|| Error::Shape(format!("checkpoint has no array `{name}`")))
        };
        let (gates, input) = dims("w_ih")?;
        let (actions, hidden) = dims("w_pi")?;
        if gates != 3 * hidden {
            return Err(Error::Shape(format!(
                "w_ih has {gates} rows, expected {}",
                3 * hidden
            )));
        }
        let shape = NetShape {
            input,
            hidden,
            actions,
        };
        let mut data = Vec::with_capacity(shape.param_count());
        for (name, rows, cols) in shape.layout() {
            data.extend(take_array(arrays, name, rows, cols)?);
        }
        Self::from_flat(shape, data)
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        write_named_arrays(path, &self.to_named_arrays())
    }

    pub fn read_checkpoint(path: &Path) -> Result<Self> {
        Self::from_named_arrays(&read_named_arrays(path)?)
    }
}

/// Output of a single forward step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub probs: Vec<f64>,
    pub value: f64,
    pub hidden: Vec<f64>,
}

#[derive(Debug, Clone)]
struct CellCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    r: Array2<f64>,
    z: Array2<f64>,
    n: Array2<f64>,
    ghn: Array2<f64>,
    h: Array2<f64>,
}

/// Cached activations of a batched sequence forward pass.
#[derive(Debug, Clone)]
pub struct SeqForward {
    cells: Vec<CellCache>,
    /// Per-step `B × actions` logits.
    pub logits: Vec<Array2<f64>>,
    /// Per-step `B` value estimates.
    pub values: Vec<Array1<f64>>,
    resets: Vec<Vec<bool>>,
}

fn sigmoid(x: f64) -> f64 {
    crate::model::recall::sigmoid(x)
}

/// Numerically stable softmax.
pub fn softmax(logits: ArrayView1<'_, f64>) -> Vec<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Log-softmax, stable for large logits.
pub fn log_softmax(logits: ArrayView1<'_, f64>) -> Vec<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let lse = max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&x| x - lse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn tiny() -> NetShape {
        NetShape {
            input: 4,
            hidden: 8,
            actions: 3,
        }
    }

    #[test]
    fn zero_weights_give_uniform_policy() {
        let p = PolicyParams::zeros(tiny());
        let out = p.step(&[0.3, -1.0, 2.0, 0.5], &[0.0; 8]).unwrap();
        for q in &out.probs {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn step_is_pure_and_normalized() {
        let p = PolicyParams::init(tiny(), &mut substream(1, "policy-init"));
        let h = vec![0.1; 8];
        let a = p.step(&[1.0, 0.0, -0.5, 0.2], &h).unwrap();
        let b = p.step(&[1.0, 0.0, -0.5, 0.2], &h).unwrap();
        assert_eq!(a.probs, b.probs);
        assert_eq!(a.hidden, b.hidden);
        assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = PolicyParams::zeros(tiny());
        assert!(matches!(p.step(&[0.0; 3], &[0.0; 8]), Err(Error::Shape(_))));
        assert!(matches!(p.step(&[0.0; 4], &[0.0; 7]), Err(Error::Shape(_))));
    }

    #[test]
    fn batched_sequence_matches_single_steps() {
        let sh = tiny();
        let p = PolicyParams::init(sh, &mut substream(2, "policy-init"));
        let mut rng = substream(2, "x");
        let steps = 5;
        let xs: Vec<Array2<f64>> = (0..steps)
            .map(|_| Array2::from_shape_fn((2, sh.input), |_| rng.random_range(-1.0..1.0)))
            .collect();
        let resets: Vec<Vec<bool>> = (0..steps).map(|t| vec![t == 0, t == 3]).collect();
        let fwd = p.forward_seq(&xs, Array2::zeros((2, sh.hidden)), &resets);
        for b in 0..2 {
            let mut h = vec![0.0; sh.hidden];
            for t in 0..steps {
                if resets[t][b] {
                    h.fill(0.0);
                }
                let out = p.step(xs[t].row(b).as_slice().unwrap(), &h).unwrap();
                let probs = softmax(fwd.logits[t].row(b));
                for (x, y) in out.probs.iter().zip(&probs) {
                    assert!((x - y).abs() < 1e-12);
                }
                assert!((out.value - fwd.values[t][b]).abs() < 1e-12);
                h = out.hidden;
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        // loss = Σ_t Σ_b (c_tb · logits_tb + v_tb · w_tb)
        let sh = tiny();
        let p = PolicyParams::init(sh, &mut substream(3, "policy-init"));
        let mut rng = substream(3, "x");
        let steps = 4;
        let batch = 2;
        let xs: Vec<Array2<f64>> = (0..steps)
            .map(|_| Array2::from_shape_fn((batch, sh.input), |_| rng.random_range(-1.0..1.0)))
            .collect();
        let h0 = Array2::from_shape_fn((batch, sh.hidden), |_| rng.random_range(-0.5..0.5));
        let resets: Vec<Vec<bool>> = (0..steps).map(|t| vec![false, t == 2]).collect();
        let cl: Vec<Array2<f64>> = (0..steps)
            .map(|_| Array2::from_shape_fn((batch, sh.actions), |_| rng.random_range(-1.0..1.0)))
            .collect();
        let cv: Vec<Array1<f64>> = (0..steps)
            .map(|_| Array1::from_shape_fn(batch, |_| rng.random_range(-1.0..1.0)))
            .collect();
        let loss = |q: &PolicyParams| {
            let f = q.forward_seq(&xs, h0.clone(), &resets);
            (0..steps)
                .map(|t| (&f.logits[t] * &cl[t]).sum() + (&f.values[t] * &cv[t]).sum())
                .sum::<f64>()
        };
        let fwd = p.forward_seq(&xs, h0.clone(), &resets);
        let grad = p.backward_seq(&fwd, &cl, &cv);
        let eps = 1e-6;
        for i in 0..p.data.len() {
            let mut plus = p.clone();
            plus.data[i] += eps;
            let mut minus = p.clone();
            minus.data[i] -= eps;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * eps);
            let an = grad.data[i];
            let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-7);
            assert!(err < 1e-5, "weight {i}: analytic {an}, fd {fd}");
        }
    }
}
