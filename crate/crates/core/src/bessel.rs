//! Bessel functions of the first kind for integer order.
//!
//! All orders `J_0 ..= J_nmax` are produced together by Miller's backward
//! recurrence, normalised with `J_0 + 2 Σ J_2k = 1`. The recurrence is stable
//! in the downward direction for every order, so the same routine serves the
//! renormalised tunnelling (`J_1`) and the first-order Floquet sums that need
//! a few dozen orders.

const RESCALE_ABOVE: f64 = 1e250;

/// Values `J_0(x), J_1(x), …, J_nmax(x)`.
pub fn bessel_j_orders(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let scale = (nmax as f64).max(ax);
    let mut start = nmax.max(ax.ceil() as usize) + 20 + (40.0 * scale).sqrt().ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }

    let two_over_x = 2.0 / ax;
    let mut above = 0.0_f64;
    let mut current = 1.0_f64;
    let mut norm = 0.0_f64;
    // `current` holds the unnormalised J_k while k walks down from `start`.
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = current;
        }
        if k % 2 == 0 {
            norm += 2.0 * current;
        }
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        if current.abs() > RESCALE_ABOVE {
            current /= RESCALE_ABOVE;
            above /= RESCALE_ABOVE;
            norm /= RESCALE_ABOVE;
            for v in out.iter_mut() {
                *v /= RESCALE_ABOVE;
            }
        }
    }
    out[0] = current;
    norm += current;

    for (k, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && k % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

pub fn bessel_j(order: usize, x: f64) -> f64 {
    bessel_j_orders(order, x)[order]
}

/// `J_1`, the only order the effective tunnelling needs.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(1, x)
}

/// Derivatives `J_n'(x)` for `n = 0 ..= nmax`, from `J_n' = (J_{n-1} - J_{n+1}) / 2`.
pub fn bessel_j_derivatives(nmax: usize, x: f64) -> Vec<f64> {
    let j = bessel_j_orders(nmax + 1, x);
    (0..=nmax)
        .map(|n| {
            if n == 0 {
                -j[1]
            } else {
                0.5 * (j[n - 1] - j[n + 1])
            }
        })
        .collect()
}
