//! Fixed-step explicit Runge-Kutta steppers over small state arrays.

/// One classical fourth-order Runge-Kutta step of `y' = f(y)`.
pub fn rk4<const N: usize, E>(
    y: &[f64; N],
    dt: f64,
    mut f: impl FnMut(&[f64; N]) -> Result<[f64; N], E>,
) -> Result<[f64; N], E> {
    let axpy = |a: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        let mut out = *a;
        for (o, d) in out.iter_mut().zip(k) {
            *o += h * d;
        }
        out
    };
    let k1 = f(y)?;
    let k2 = f(&axpy(y, &k1, 0.5 * dt))?;
    let k3 = f(&axpy(y, &k2, 0.5 * dt))?;
    let k4 = f(&axpy(y, &k3, dt))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// One explicit midpoint (second-order Runge-Kutta) step of `y' = f(y)`.
pub fn rk2_midpoint<const N: usize, E>(
    y: &[f64; N],
    dt: f64,
    mut f: impl FnMut(&[f64; N]) -> Result<[f64; N], E>,
) -> Result<[f64; N], E> {
    let k1 = f(y)?;
    let mut mid = *y;
    for (m, k) in mid.iter_mut().zip(&k1) {
        *m += 0.5 * dt * k;
    }
    let k2 = f(&mid)?;
    let mut out = *y;
    for (o, k) in out.iter_mut().zip(&k2) {
        *o += dt * k;
    }
    Ok(out)
}

/// Observed convergence order from errors at step sizes `h` and `h/2`.
pub fn observed_order(err_h: f64, err_half: f64) -> f64 {
    (err_h / err_half).log2()
}
