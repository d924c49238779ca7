//! Classical fixed-step fourth-order Runge–Kutta.

/// One RK4 step of `y' = f(t, y)` from `t` to `t + h`.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(a, b)| a + s * b).collect()
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    y.iter()
        .enumerate()
        .map(|(i, yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates over `times` (increasing), taking `substeps` equal RK4 steps between
/// consecutive output times. Returns the state at every output time.
pub fn rk4_dense<F>(f: &F, times: &[f64], y0: &[f64], substeps: usize) -> Vec<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let substeps = substeps.max(1);
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.to_vec();
    out.push(y.clone());
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            y = rk4_step(f, w[0] + s as f64 * h, &y, h);
        }
        out.push(y.clone());
    }
    out
}
