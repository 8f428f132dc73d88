//! Truncated power series, used to push jets through a change of parameter
//! without resampling.

/// `a·b` up to degree `d`.
pub(crate) fn mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d + 1];
    for (i, x) in a.iter().enumerate().take(d + 1) {
        for (j, y) in b.iter().enumerate().take(d + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a^p` for `a₀ > 0`.
pub(crate) fn powf(a: &[f64], p: f64, d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d + 1];
    c[0] = a[0].powf(p);
    for n in 1..=d {
        let mut acc = 0.0;
        for k in 1..=n.min(a.len() - 1) {
            acc += ((p + 1.0) * k as f64 - n as f64) * a[k] * c[n - k];
        }
        c[n] = acc / (n as f64 * a[0]);
    }
    c
}

/// `g(δ(s))` for `δ(0) = 0`, by Horner's rule.
pub(crate) fn compose(g: &[f64], delta: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d + 1];
    for gi in g.iter().take(d + 1).rev() {
        out = mul(&out, delta, d);
        out[0] += gi;
    }
    out
}

/// Taylor coefficients from derivatives: `c_k = f^{(k)} / k!`.
pub(crate) fn from_derivs(derivs: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut fact = 1.0;
    derivs
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            if k > 0 {
                fact *= k as f64;
            }
            v / fact
        })
        .collect()
}

/// Series of `δ(s) = t(s) − t(0)` solving `dt/ds = g(t)`, with `g` given as
/// a series in `t − t(0)`.
pub(crate) fn solve_autonomous(g: &[f64], d: usize) -> Vec<f64> {
    let mut delta = vec![0.0; d + 1];
    for k in 0..d {
        // coefficient k of g∘δ depends only on δ₁..δ_k
        let gd = compose(g, &delta, k);
        delta[k + 1] = gd[k] / (k + 1) as f64;
    }
    delta
}

fn derivative(a: &[f64]) -> Vec<f64> {
    a.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Jet of order `order` in the parameter `s` with `dt/ds = B^{-1/3}`, where
/// `B = [γ′, γ″]` for planar curves and `B = [γ, γ′, γ″]` for space curves.
/// `raw[k]` holds `γ^{(k)}(t₀)` for `k = 0..=order+1`.
pub(crate) fn equiaffine_jet(raw: &[Vec<f64>], order: usize) -> Vec<Vec<f64>> {
    let dim = raw[0].len();
    let coords: Vec<Vec<f64>> = (0..dim).map(|c| from_derivs(raw.iter().map(|d| d[c]))).collect();
    if order == 0 {
        return vec![coords.iter().map(|c| c[0]).collect()];
    }
    let d1: Vec<Vec<f64>> = coords.iter().map(|c| derivative(c)).collect();
    let d2: Vec<Vec<f64>> = d1.iter().map(|c| derivative(c)).collect();
    let m = order - 1;
    let cross = |a: &[Vec<f64>], b: &[Vec<f64>], i: usize, j: usize| sub(&mul(&a[i], &b[j], m), &mul(&a[j], &b[i], m));
    let b = if dim == 2 {
        cross(&d1, &d2, 0, 1)
    } else {
        let mut acc = vec![0.0; m + 1];
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let term = mul(&coords[i], &cross(&d1, &d2, j, k), m);
            acc.iter_mut().zip(term).for_each(|(x, y)| *x += y);
        }
        acc
    };
    let delta = solve_autonomous(&powf(&b, -1.0 / 3.0, m), order);
    let composed: Vec<Vec<f64>> = coords.iter().map(|c| compose(c, &delta, order)).collect();
    let mut fact = 1.0;
    (0..=order)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            composed.iter().map(|c| c[k] * fact).collect()
        })
        .collect()
}
