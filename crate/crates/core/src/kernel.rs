//! Per-window evaluation of weighted sums of posterior products,
//! `Σ_s w_s Π_m p(x_m)[i_{s,m}]`, and their gradients with respect to the
//! classifier weights. Every cost and the saddle objective reduce to this.

use crate::model::LinearClassifier;
use crate::synthdata::{SequenceDataset, Window};

/// A weighted list of N-tuples, ids flattened `len x order`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TupleWeights<'a> {
    pub order: usize,
    pub ids: &'a [usize],
    pub weights: &'a [f64],
}

impl TupleWeights<'_> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn tuple(&self, s: usize) -> &[usize] {
        &self.ids[s * self.order..(s + 1) * self.order]
    }
}

/// Posteriors of every position of a dataset under one model.
pub(crate) struct PosteriorCache {
    classes: usize,
    per_seq: Vec<Vec<f64>>,
}

impl PosteriorCache {
    pub fn new(model: &LinearClassifier, dataset: &SequenceDataset) -> Self {
        let per_seq = dataset.features().iter().map(|f| model.sequence_posteriors(f)).collect();
        Self { classes: model.classes(), per_seq }
    }

    pub fn at(&self, seq: usize, t: usize) -> &[f64] {
        &self.per_seq[seq][t * self.classes..(t + 1) * self.classes]
    }

    /// Posteriors of the `order` positions of `w`, oldest first.
    pub fn window<'a>(&'a self, w: Window, order: usize, out: &mut Vec<&'a [f64]>) {
        out.clear();
        let (n, s) = (w.seq as usize, w.start as usize);
        out.extend((s..s + order).map(|t| self.at(n, t)));
    }
}

/// Scratch space for [`WindowKernel::eval`].
pub(crate) struct WindowKernel {
    order: usize,
    classes: usize,
    upstream: Vec<f64>,
    prefix: Vec<f64>,
}

impl WindowKernel {
    pub fn new(order: usize, classes: usize) -> Self {
        Self {
            order,
            classes,
            upstream: vec![0.0; order * classes],
            prefix: vec![0.0; order + 1],
        }
    }

    /// Returns `Σ_s w_s Π_m p_m[i_{s,m}]`.
    ///
    /// When `products` is given, `scale · Π_m p_m[i_{s,m}]` is added to
    /// `products[s]`. When `grad` is given, `scale · ∇_W` of the returned
    /// sum is added to it; `xs` must then hold the window's inputs.
    #[allow(clippy::too_many_arguments)]
    pub fn eval(
        &mut self,
        model: &LinearClassifier,
        xs: &[&[f64]],
        ps: &[&[f64]],
        tuples: TupleWeights<'_>,
        scale: f64,
        grad: Option<&mut [f64]>,
        products: Option<&mut [f64]>,
    ) -> f64 {
        let n = self.order;
        let c = self.classes;
        debug_assert_eq!(ps.len(), n);
        let want_grad = grad.is_some();
        if want_grad {
            self.upstream.iter_mut().for_each(|v| *v = 0.0);
        }
        let value = match n {
            1 => self.eval_order1(ps, tuples, scale, want_grad, products),
            2 => self.eval_order2(ps, tuples, scale, want_grad, products),
            3 => self.eval_order3(ps, tuples, scale, want_grad, products),
            _ => self.eval_generic(ps, tuples, scale, want_grad, products),
        };
        if let Some(grad) = grad {
            for m in 0..n {
                model.backprop_posterior(xs[m], ps[m], &self.upstream[m * c..(m + 1) * c], scale, grad);
            }
        }
        value
    }

    fn eval_order1(
        &mut self,
        ps: &[&[f64]],
        tuples: TupleWeights<'_>,
        scale: f64,
        want_grad: bool,
        mut products: Option<&mut [f64]>,
    ) -> f64 {
        let p0 = ps[0];
        let mut value = 0.0;
        for (s, (&i, &w)) in tuples.ids.iter().zip(tuples.weights).enumerate() {
            let prod = p0[i];
            value += w * prod;
            if let Some(out) = products.as_deref_mut() {
                out[s] += scale * prod;
            }
            if want_grad {
                self.upstream[i] += w;
            }
        }
        value
    }

    fn eval_order2(
        &mut self,
        ps: &[&[f64]],
        tuples: TupleWeights<'_>,
        scale: f64,
        want_grad: bool,
        products: Option<&mut [f64]>,
    ) -> f64 {
        let c = self.classes;
        let (p0, p1) = (ps[0], ps[1]);
        let pairs = tuples.ids.chunks_exact(2).zip(tuples.weights);
        let mut value = 0.0;
        match (products, want_grad) {
            (None, false) => {
                for (ids, &w) in pairs {
                    value += w * p0[ids[0]] * p1[ids[1]];
                }
            }
            (Some(out), false) => {
                for ((ids, &w), o) in pairs.zip(out.iter_mut()) {
                    let prod = p0[ids[0]] * p1[ids[1]];
                    value += w * prod;
                    *o += scale * prod;
                }
            }
            (products, true) => {
                let (up0, up1) = self.upstream.split_at_mut(c);
                let mut out = products;
                for (s, (ids, &w)) in pairs.enumerate() {
                    let (a, b) = (p0[ids[0]], p1[ids[1]]);
                    value += w * a * b;
                    if let Some(o) = out.as_deref_mut() {
                        o[s] += scale * a * b;
                    }
                    up0[ids[0]] += w * b;
                    up1[ids[1]] += w * a;
                }
            }
        }
        value
    }

    fn eval_order3(
        &mut self,
        ps: &[&[f64]],
        tuples: TupleWeights<'_>,
        scale: f64,
        want_grad: bool,
        mut products: Option<&mut [f64]>,
    ) -> f64 {
        let c = self.classes;
        let (p0, p1, p2) = (ps[0], ps[1], ps[2]);
        let (up0, rest) = self.upstream.split_at_mut(c);
        let (up1, up2) = rest.split_at_mut(c);
        let mut value = 0.0;
        for (s, (ids, &w)) in tuples.ids.chunks_exact(3).zip(tuples.weights).enumerate() {
            let (a, b, d) = (p0[ids[0]], p1[ids[1]], p2[ids[2]]);
            let ab = a * b;
            value += w * ab * d;
            if let Some(o) = products.as_deref_mut() {
                o[s] += scale * ab * d;
            }
            if want_grad {
                up0[ids[0]] += w * b * d;
                up1[ids[1]] += w * a * d;
                up2[ids[2]] += w * ab;
            }
        }
        value
    }

    fn eval_generic(
        &mut self,
        ps: &[&[f64]],
        tuples: TupleWeights<'_>,
        scale: f64,
        want_grad: bool,
        mut products: Option<&mut [f64]>,
    ) -> f64 {
        let n = self.order;
        let c = self.classes;
        let mut value = 0.0;
        for s in 0..tuples.len() {
            let ids = tuples.tuple(s);
            let w = tuples.weights[s];
            self.prefix[0] = 1.0;
            for m in 0..n {
                self.prefix[m + 1] = self.prefix[m] * ps[m][ids[m]];
            }
            let prod = self.prefix[n];
            value += w * prod;
            if let Some(out) = products.as_deref_mut() {
                out[s] += scale * prod;
            }
            if want_grad && w != 0.0 {
                // Product of all factors except position m, via a running suffix.
                let mut suffix = 1.0;
                for m in (0..n).rev() {
                    self.upstream[m * c + ids[m]] += w * self.prefix[m] * suffix;
                    suffix *= ps[m][ids[m]];
                }
            }
        }
        value
    }
}

/// Inputs of the `order` positions of `w`, oldest first.
pub(crate) fn window_inputs<'a>(
    dataset: &'a SequenceDataset,
    w: Window,
    order: usize,
    out: &mut Vec<&'a [f64]>,
) {
    out.clear();
    let (n, s) = (w.seq as usize, w.start as usize);
    out.extend((s..s + order).map(|t| dataset.x(n, t)));
}

/// Averages `Σ_s w_s Π` over the given windows; optionally accumulates the
/// averaged gradient and per-tuple averaged products.
pub(crate) fn average_over_windows(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    cache: &PosteriorCache,
    windows: &[Window],
    tuples: TupleWeights<'_>,
    mut grad: Option<&mut [f64]>,
    mut products: Option<&mut [f64]>,
) -> f64 {
    let order = tuples.order;
    let mut kernel = WindowKernel::new(order, model.classes());
    let scale = 1.0 / windows.len() as f64;
    let mut xs = Vec::with_capacity(order);
    let mut ps = Vec::with_capacity(order);
    let mut total = 0.0;
    for &w in windows {
        cache.window(w, order, &mut ps);
        if grad.is_some() {
            window_inputs(dataset, w, order, &mut xs);
        }
        total += kernel.eval(
            model,
            &xs,
            &ps,
            tuples,
            scale,
            grad.as_deref_mut(),
            products.as_deref_mut(),
        );
    }
    total * scale
}
