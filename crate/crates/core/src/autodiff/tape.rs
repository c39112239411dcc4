use crate::autodiff::tensor::{kernels, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Constant,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, T),
    SubScalar(usize, usize),
    MatMul(usize, usize),
    MatMulT(usize, usize),
    Transpose(usize),
    AddBias(usize, usize),
    Elu(usize),
    EluPrime(usize),
    Log(usize),
    Square(usize),
    ClampMin(usize, T),
    Sum(usize),
    Mean(usize),
    Variance(usize),
    Det(usize),
    TileRows(usize, usize),
    BatchGram(usize, usize),
    SymEigvals(usize),
    Reshape(usize),
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Append-only record of tensor operations for reverse-mode differentiation.
///
/// Nodes are stored in creation order, so every node's inputs precede it and
/// [`Tape::backward`] is a single reverse sweep.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
    backward_done: bool,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable input; receives a gradient on backward.
    pub fn leaf(&mut self, value: Tensor<T>) -> Result<Var> {
        self.push(value, Op::Leaf, true, "leaf")
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Result<Var> {
        self.push(value, Op::Constant, false, "constant")
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Accumulated gradient of the last backward pass, if any reached `v`.
    pub fn grad(&self, v: Var) -> Option<Tensor<T>> {
        self.grads[v.0].as_ref().map(|g| {
            Tensor::new(self.nodes[v.0].value.shape().to_vec(), g.clone()).expect("gradient shape matches value")
        })
    }

    /// Clears all gradients so `backward` may run again.
    pub fn reset_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = None);
        self.backward_done = false;
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        Ok(())
    }

    fn matrix_dims(&self, op: &'static str, a: Var) -> Result<(usize, usize)> {
        match self.shape(a) {
            [r, c] => Ok((*r, *c)),
            s => Err(Error::shape(op, format!("expected matrix, got {s:?}"))),
        }
    }

    fn zip_with(&mut self, op: &'static str, a: Var, b: Var, kind: Op<T>, f: impl Fn(T, T) -> T) -> Result<Var> {
        self.same_shape(op, a, b)?;
        let va = self.value(a);
        let vb = self.value(b);
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        let value = Tensor::new(va.shape().to_vec(), data)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(value, kind, rg, op)
    }

    fn unary(&mut self, op: &'static str, a: Var, kind: Op<T>, f: impl Fn(T) -> T) -> Result<Var> {
        let value = self.value(a).map(f);
        let rg = self.rg(a);
        self.push(value, kind, rg, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("add", a, b, Op::Add(a.0, b.0), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("sub", a, b, Op::Sub(a.0, b.0), |x, y| x - y)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("mul", a, b, Op::Mul(a.0, b.0), |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var> {
        self.unary("scale", a, Op::Scale(a.0, c), |x| x * c)
    }

    /// `a - s` with a one-element `s` broadcast over `a`.
    pub fn sub_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(Error::shape(
                "sub_scalar",
                format!("subtrahend shape {:?}", self.shape(s)),
            ));
        }
        let sv = self.value(s).item();
        let value = self.value(a).map(|x| x - sv);
        let rg = self.rg(a) || self.rg(s);
        self.push(value, Op::SubScalar(a.0, s.0), rg, "sub_scalar")
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (p, q) = self.matrix_dims("matmul", a)?;
        let (q2, r) = self.matrix_dims("matmul", b)?;
        if q != q2 {
            return Err(Error::shape("matmul", format!("[{p}x{q}] x [{q2}x{r}]")));
        }
        let mut out = vec![T::zero(); p * r];
        kernels::gemm_nn(self.value(a).data(), self.value(b).data(), &mut out, p, q, r);
        let value = Tensor::matrix(p, r, out)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::MatMul(a.0, b.0), rg, "matmul")
    }

    /// `a · bᵗ`, the affine-layer product `x · Wᵗ` without materializing the transpose.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let (p, q) = self.matrix_dims("matmul_t", a)?;
        let (r, q2) = self.matrix_dims("matmul_t", b)?;
        if q != q2 {
            return Err(Error::shape("matmul_t", format!("[{p}x{q}] x [{r}x{q2}]^T")));
        }
        let mut out = vec![T::zero(); p * r];
        kernels::gemm_nt(self.value(a).data(), self.value(b).data(), &mut out, p, q, r);
        let value = Tensor::matrix(p, r, out)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::MatMulT(a.0, b.0), rg, "matmul_t")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.matrix_dims("transpose", a)?;
        let value = self.value(a).transpose();
        let rg = self.rg(a);
        self.push(value, Op::Transpose(a.0), rg, "transpose")
    }

    /// Adds a bias vector of length `cols` to every row of a matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (r, c) = self.matrix_dims("add_bias", a)?;
        if self.value(bias).len() != c {
            return Err(Error::shape(
                "add_bias",
                format!("bias {:?} for {c} columns", self.shape(bias)),
            ));
        }
        let bv = self.value(bias).data();
        let mut data = self.value(a).data().to_vec();
        for i in 0..r {
            for (x, &b) in data[i * c..(i + 1) * c].iter_mut().zip(bv) {
                *x = *x + b;
            }
        }
        let value = Tensor::matrix(r, c, data)?;
        let rg = self.rg(a) || self.rg(bias);
        self.push(value, Op::AddBias(a.0, bias.0), rg, "add_bias")
    }

    pub fn elu(&mut self, a: Var) -> Result<Var> {
        self.unary("elu", a, Op::Elu(a.0), elu)
    }

    /// Derivative of ELU as a differentiable op (right limit at 0).
    pub fn elu_prime(&mut self, a: Var) -> Result<Var> {
        self.unary("elu_prime", a, Op::EluPrime(a.0), elu_prime)
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.unary("log", a, Op::Log(a.0), T::ln)
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.unary("square", a, Op::Square(a.0), |x| x * x)
    }

    /// `max(a, floor)`; the gradient is zero where the floor is active.
    pub fn clamp_min(&mut self, a: Var, floor: T) -> Result<Var> {
        self.unary("clamp_min", a, Op::ClampMin(a.0, floor), |x| x.max(floor))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().fold(T::zero(), |acc, &x| acc + x);
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Sum(a.0), rg, "sum")
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        if v.is_empty() {
            return Err(Error::shape("mean", "empty tensor"));
        }
        let s = v.data().iter().fold(T::zero(), |acc, &x| acc + x) / T::lit(v.len() as f64);
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Mean(a.0), rg, "mean")
    }

    /// Population variance (divides by the count) over all entries.
    pub fn variance(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        if v.is_empty() {
            return Err(Error::shape("variance", "empty tensor"));
        }
        let value = population_variance(v.data());
        let rg = self.rg(a);
        self.push(Tensor::scalar(value), Op::Variance(a.0), rg, "variance")
    }

    /// Determinant of an `l×l` matrix, or of each matrix in a `[b, l, l]` stack.
    ///
    /// Closed forms for `l <= 3`; larger matrices go through [`det_lu`], which
    /// is not differentiable.
    pub fn det(&mut self, a: Var) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let (batch, l, out_shape) = match shape.as_slice() {
            [r, c] if r == c => (1, *r, Vec::new()),
            [b, r, c] if r == c => (*b, *r, vec![*b]),
            s => return Err(Error::shape("det", format!("expected [l,l] or [b,l,l], got {s:?}"))),
        };
        if !(1..=3).contains(&l) {
            return Err(Error::LatentDim(l));
        }
        let src = self.value(a).data();
        let data = (0..batch)
            .map(|p| det_closed(&src[p * l * l..(p + 1) * l * l], l))
            .collect();
        let value = Tensor::new(out_shape, data)?;
        let rg = self.rg(a);
        self.push(value, Op::Det(a.0), rg, "det")
    }

    /// Stacks `times` copies of a matrix vertically.
    pub fn tile_rows(&mut self, a: Var, times: usize) -> Result<Var> {
        let (r, c) = self.matrix_dims("tile_rows", a)?;
        let src = self.value(a).data();
        let mut data = Vec::with_capacity(times * r * c);
        for _ in 0..times {
            data.extend_from_slice(src);
        }
        let value = Tensor::matrix(times * r, c, data)?;
        let rg = self.rg(a);
        self.push(value, Op::TileRows(a.0, times), rg, "tile_rows")
    }

    /// Per-point Gram matrices from stacked tangent rows.
    ///
    /// Input rows are ordered `(direction j, point p)` as row `j·b + p`, each
    /// holding the image of the `j`-th basis vector at point `p`. Output is
    /// `[b, l, l]` with `G[p,i,j] = <row(i·b+p), row(j·b+p)>`.
    pub fn batch_gram(&mut self, tangents: Var, l: usize) -> Result<Var> {
        let (rows, n) = self.matrix_dims("batch_gram", tangents)?;
        if l == 0 || rows % l != 0 {
            return Err(Error::shape(
                "batch_gram",
                format!("{rows} rows not divisible by l={l}"),
            ));
        }
        let b = rows / l;
        let t = self.value(tangents).data();
        let mut g = vec![T::zero(); b * l * l];
        for p in 0..b {
            for i in 0..l {
                let ri = &t[(i * b + p) * n..(i * b + p + 1) * n];
                for j in i..l {
                    let rj = &t[(j * b + p) * n..(j * b + p + 1) * n];
                    let s = ri.iter().zip(rj).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
                    g[p * l * l + i * l + j] = s;
                    g[p * l * l + j * l + i] = s;
                }
            }
        }
        let value = Tensor::new(vec![b, l, l], g)?;
        let rg = self.rg(tangents);
        self.push(value, Op::BatchGram(tangents.0, l), rg, "batch_gram")
    }

    /// Eigenvalues of a stack of symmetric `1×1` or `2×2` matrices, `[b,l,l] -> [b,l]`,
    /// largest first.
    pub fn sym_eigvals(&mut self, a: Var) -> Result<Var> {
        let (b, l) = match self.shape(a) {
            [b, r, c] if r == c => (*b, *r),
            s => return Err(Error::shape("sym_eigvals", format!("expected [b,l,l], got {s:?}"))),
        };
        if !(1..=2).contains(&l) {
            return Err(Error::LatentDim(l));
        }
        let src = self.value(a).data();
        let mut data = Vec::with_capacity(b * l);
        for p in 0..b {
            let m = &src[p * l * l..(p + 1) * l * l];
            if l == 1 {
                data.push(m[0]);
            } else {
                let (hi, lo) = sym2_eigvals(m[0], m[1], m[2], m[3]);
                data.push(hi);
                data.push(lo);
            }
        }
        let value = Tensor::matrix(b, l, data)?;
        let rg = self.rg(a);
        self.push(value, Op::SymEigvals(a.0), rg, "sym_eigvals")
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let value = self.value(a).clone().reshape(shape)?;
        let rg = self.rg(a);
        self.push(value, Op::Reshape(a.0), rg, "reshape")
    }

    /// Reverse sweep from a scalar loss. Gradients accumulate on every node
    /// that depends on a leaf; fan-out contributions are summed.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        if self.value(loss).len() != 1 {
            return Err(Error::NotScalar(self.shape(loss).to_vec()));
        }
        self.backward_done = true;
        self.grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let (lower, upper) = self.grads.split_at_mut(i);
            let Some(g) = upper[0].as_ref() else { continue };
            let nodes = &self.nodes;
            let needs = |j: usize| nodes[j].requires_grad;
            let val = |j: usize| &nodes[j].value;

            match nodes[i].op {
                Op::Leaf | Op::Constant => {}
                Op::Add(a, b) => {
                    if needs(a) {
                        axpy(acc(lower, a, g.len()), T::one(), g);
                    }
                    if needs(b) {
                        axpy(acc(lower, b, g.len()), T::one(), g);
                    }
                }
                Op::Sub(a, b) => {
                    if needs(a) {
                        axpy(acc(lower, a, g.len()), T::one(), g);
                    }
                    if needs(b) {
                        axpy(acc(lower, b, g.len()), -T::one(), g);
                    }
                }
                Op::Mul(a, b) => {
                    if needs(a) {
                        let vb = val(b).data();
                        let ga = acc(lower, a, g.len());
                        for ((o, &gi), &y) in ga.iter_mut().zip(g).zip(vb) {
                            *o = *o + gi * y;
                        }
                    }
                    if needs(b) {
                        let va = val(a).data();
                        let gb = acc(lower, b, g.len());
                        for ((o, &gi), &x) in gb.iter_mut().zip(g).zip(va) {
                            *o = *o + gi * x;
                        }
                    }
                }
                Op::Scale(a, c) => {
                    if needs(a) {
                        axpy(acc(lower, a, g.len()), c, g);
                    }
                }
                Op::SubScalar(a, s) => {
                    if needs(a) {
                        axpy(acc(lower, a, g.len()), T::one(), g);
                    }
                    if needs(s) {
                        let total = g.iter().fold(T::zero(), |acc, &x| acc + x);
                        let gs = acc(lower, s, 1);
                        gs[0] = gs[0] - total;
                    }
                }
                Op::MatMul(a, b) => {
                    let (p, q) = (val(a).rows(), val(a).cols());
                    let r = val(b).cols();
                    if needs(a) {
                        // dA = G · Bᵗ
                        let vb = val(b).data();
                        kernels::gemm_nt(g, vb, acc(lower, a, p * q), p, r, q);
                    }
                    if needs(b) {
                        // dB = Aᵗ · G
                        let va = val(a).data();
                        kernels::gemm_tn(va, g, acc(lower, b, q * r), q, p, r);
                    }
                }
                Op::MatMulT(a, b) => {
                    let (p, q) = (val(a).rows(), val(a).cols());
                    let r = val(b).rows();
                    if needs(a) {
                        // C = A·Bᵗ, dA = G · B
                        let vb = val(b).data();
                        kernels::gemm_nn(g, vb, acc(lower, a, p * q), p, r, q);
                    }
                    if needs(b) {
                        // dB = Gᵗ · A
                        let va = val(a).data();
                        kernels::gemm_tn(g, va, acc(lower, b, r * q), r, p, q);
                    }
                }
                Op::Transpose(a) => {
                    if needs(a) {
                        let (r, c) = (val(a).rows(), val(a).cols());
                        let ga = acc(lower, a, r * c);
                        for x in 0..r {
                            for y in 0..c {
                                ga[x * c + y] = ga[x * c + y] + g[y * r + x];
                            }
                        }
                    }
                }
                Op::AddBias(a, bias) => {
                    let (r, c) = (val(a).rows(), val(a).cols());
                    if needs(a) {
                        axpy(acc(lower, a, r * c), T::one(), g);
                    }
                    if needs(bias) {
                        let gb = acc(lower, bias, c);
                        for row in g.chunks_exact(c) {
                            for (o, &x) in gb.iter_mut().zip(row) {
                                *o = *o + x;
                            }
                        }
                    }
                }
                Op::Elu(a) => {
                    if needs(a) {
                        let va = val(a).data();
                        let ga = acc(lower, a, g.len());
                        for ((o, &gi), &x) in ga.iter_mut().zip(g).zip(va) {
                            *o = *o + gi * elu_prime(x);
                        }
                    }
                }
                Op::EluPrime(a) => {
                    if needs(a) {
                        let va = val(a).data();
                        let ga = acc(lower, a, g.len());
                        for ((o, &gi), &x) in ga.iter_mut().zip(g).zip(va) {
                            *o = *o + gi * elu_second(x);
                        }
                    }
                }
                Op::Log(a) => {
                    if needs(a) {
                        let va = val(a).data();
                        let ga = acc(lower, a, g.len());
                        for ((o, &gi), &x) in ga.iter_mut().zip(g).zip(va) {
                            *o = *o + gi / x;
                        }
                    }
                }
                Op::Square(a) => {
                    if needs(a) {
                        let va = val(a).data();
                        let two = T::lit(2.0);
                        let ga = acc(lower, a, g.len());
                        for ((o, &gi), &x) in ga.iter_mut().zip(g).zip(va) {
                            *o = *o + two * gi * x;
                        }
                    }
                }
                Op::ClampMin(a, floor) => {
                    if needs(a) {
                        let va = val(a).data();
                        let ga = acc(lower, a, g.len());
                        for ((o, &gi), &x) in ga.iter_mut().zip(g).zip(va) {
                            if x >= floor {
                                *o = *o + gi;
                            }
                        }
                    }
                }
                Op::Sum(a) => {
                    if needs(a) {
                        let n = val(a).len();
                        let g0 = g[0];
                        acc(lower, a, n).iter_mut().for_each(|o| *o = *o + g0);
                    }
                }
                Op::Mean(a) => {
                    if needs(a) {
                        let n = val(a).len();
                        let g0 = g[0] / T::lit(n as f64);
                        acc(lower, a, n).iter_mut().for_each(|o| *o = *o + g0);
                    }
                }
                Op::Variance(a) => {
                    if needs(a) {
                        let va = val(a).data();
                        let n = T::lit(va.len() as f64);
                        let m = va.iter().fold(T::zero(), |s, &x| s + x) / n;
                        let k = T::lit(2.0) * g[0] / n;
                        let ga = acc(lower, a, va.len());
                        for (o, &x) in ga.iter_mut().zip(va) {
                            *o = *o + k * (x - m);
                        }
                    }
                }
                Op::Det(a) => {
                    if needs(a) {
                        let va = val(a).data();
                        let l = *val(a).shape().last().expect("det input has rank >= 2");
                        let ga = acc(lower, a, va.len());
                        let mut cof = [T::zero(); 9];
                        for (p, &gp) in g.iter().enumerate() {
                            let m = &va[p * l * l..(p + 1) * l * l];
                            cofactors(m, l, &mut cof);
                            for (o, &c) in ga[p * l * l..(p + 1) * l * l].iter_mut().zip(&cof[..l * l]) {
                                *o = *o + gp * c;
                            }
                        }
                    }
                }
                Op::TileRows(a, times) => {
                    if needs(a) {
                        let n = val(a).len();
                        let ga = acc(lower, a, n);
                        for chunk in g.chunks_exact(n).take(times) {
                            axpy(ga, T::one(), chunk);
                        }
                    }
                }
                Op::BatchGram(t, l) => {
                    if needs(t) {
                        let vt = val(t);
                        let (rows, n) = (vt.rows(), vt.cols());
                        let b = rows / l;
                        let td = vt.data();
                        let gt = acc(lower, t, rows * n);
                        for p in 0..b {
                            let gp = &g[p * l * l..(p + 1) * l * l];
                            for i in 0..l {
                                for j in 0..l {
                                    let w = gp[i * l + j] + gp[j * l + i];
                                    if w == T::zero() {
                                        continue;
                                    }
                                    let src = (j * b + p) * n;
                                    let dst = (i * b + p) * n;
                                    for c in 0..n {
                                        gt[dst + c] = gt[dst + c] + w * td[src + c];
                                    }
                                }
                            }
                        }
                    }
                }
                Op::SymEigvals(a) => {
                    if needs(a) {
                        let va = val(a).data();
                        let l = *val(a).shape().last().expect("rank-3 input");
                        let ga = acc(lower, a, va.len());
                        let b = va.len() / (l * l);
                        for p in 0..b {
                            if l == 1 {
                                ga[p] = ga[p] + g[p];
                                continue;
                            }
                            let m = &va[p * 4..(p + 1) * 4];
                            let d = sym2_eig_grads(m[0], m[1], m[2], m[3]);
                            let (g_hi, g_lo) = (g[p * 2], g[p * 2 + 1]);
                            for k in 0..4 {
                                ga[p * 4 + k] = ga[p * 4 + k] + g_hi * d[0][k] + g_lo * d[1][k];
                            }
                        }
                    }
                }
                Op::Reshape(a) => {
                    if needs(a) {
                        axpy(acc(lower, a, g.len()), T::one(), g);
                    }
                }
            }
        }
        Ok(())
    }
}

fn acc<T: Scalar>(lower: &mut [Option<Vec<T>>], idx: usize, len: usize) -> &mut Vec<T> {
    lower[idx].get_or_insert_with(|| vec![T::zero(); len])
}

fn axpy<T: Scalar>(out: &mut [T], a: T, x: &[T]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = *o + a * v;
    }
}

#[inline]
pub fn elu<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        x
    } else {
        x.exp_m1()
    }
}

#[inline]
pub fn elu_prime<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        x.exp()
    }
}

#[inline]
fn elu_second<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::zero()
    } else {
        x.exp()
    }
}

pub(crate) fn population_variance<T: Scalar>(xs: &[T]) -> T {
    let n = T::lit(xs.len() as f64);
    let m = xs.iter().fold(T::zero(), |s, &x| s + x) / n;
    xs.iter().fold(T::zero(), |s, &x| s + (x - m) * (x - m)) / n
}

/// Closed-form determinant of a row-major `l×l` block, `l <= 3`.
pub(crate) fn det_closed<T: Scalar>(m: &[T], l: usize) -> T {
    match l {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => unreachable!("closed-form determinant only for l <= 3"),
    }
}

/// Cofactor matrix, i.e. d det / dM, written row-major into `out`.
fn cofactors<T: Scalar>(m: &[T], l: usize, out: &mut [T; 9]) {
    match l {
        1 => out[0] = T::one(),
        2 => {
            out[0] = m[3];
            out[1] = -m[2];
            out[2] = -m[1];
            out[3] = m[0];
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                    let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                    // cyclic index order absorbs the (-1)^(i+j) sign
                    out[i * 3 + j] = m[r0 * 3 + c0] * m[r1 * 3 + c1] - m[r0 * 3 + c1] * m[r1 * 3 + c0];
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Eigenvalues `(largest, smallest)` of the symmetric matrix `[[a, b], [c, d]]`
/// with the off-diagonal taken as `(b + c) / 2`.
pub(crate) fn sym2_eigvals<T: Scalar>(a: T, b: T, c: T, d: T) -> (T, T) {
    let two = T::lit(2.0);
    let off = (b + c) / two;
    let half_tr = (a + d) / two;
    let half_diff = (a - d) / two;
    let s = half_diff.hypot(off);
    // the smaller root via the product avoids cancellation when both are positive
    let hi = half_tr + s;
    let det = a * d - off * off;
    let lo = if hi > T::zero() && half_tr > T::zero() {
        det / hi
    } else {
        half_tr - s
    };
    (hi, lo)
}

/// Gradients of `(largest, smallest)` eigenvalue with respect to `[a, b, c, d]`.
fn sym2_eig_grads<T: Scalar>(a: T, b: T, c: T, d: T) -> [[T; 4]; 2] {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let off = (b + c) / two;
    let half_diff = (a - d) / two;
    let s = half_diff.hypot(off);
    // At a repeated eigenvalue the split term is not differentiable; its
    // symmetric subgradient is zero.
    let (ds_da, ds_doff) = if s > T::zero() {
        (half_diff / (two * s), off / s)
    } else {
        (T::zero(), T::zero())
    };
    let ds_dd = -ds_da;
    let ds_db = ds_doff * half;
    [
        [half + ds_da, ds_db, ds_db, half + ds_dd],
        [half - ds_da, -ds_db, -ds_db, half - ds_dd],
    ]
}

/// Determinant by LU decomposition with partial pivoting. Not recorded on a tape.
pub fn det_lu<T: Scalar>(m: &Tensor<T>) -> Result<T> {
    let n = match m.shape() {
        [r, c] if r == c => *r,
        s => return Err(Error::shape("det_lu", format!("expected square matrix, got {s:?}"))),
    };
    let mut a = m.data().to_vec();
    let mut det = T::one();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().partial_cmp(&a[j * n + k].abs()).expect("finite"))
            .expect("non-empty range");
        if a[piv * n + k] == T::zero() {
            return Ok(T::zero());
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let pivot = a[k * n + k];
        det = det * pivot;
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            for j in k..n {
                a[i * n + j] = a[i * n + j] - f * a[k * n + j];
            }
        }
    }
    Ok(det)
}
