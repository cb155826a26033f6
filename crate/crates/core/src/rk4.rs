//! Fixed-step classical Runge-Kutta for two-component systems.

pub type Vec2 = [f64; 2];

/// One RK4 step of size `h` (negative for backward integration).
///
/// `f(frac, y)` evaluates the right-hand side at the fraction `frac` of the
/// step, which is always one of 0, 0.5 or 1. Callers use it to place
/// time-dependent inputs (node controls, forcing) at the stage times.
#[inline]
pub fn step<F>(y: Vec2, h: f64, mut f: F) -> Vec2
where
    F: FnMut(f64, Vec2) -> Vec2,
{
    let k1 = f(0.0, y);
    let k2 = f(0.5, axpy(y, 0.5 * h, k1));
    let k3 = f(0.5, axpy(y, 0.5 * h, k2));
    let k4 = f(1.0, axpy(y, h, k3));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

#[inline]
fn axpy(y: Vec2, a: f64, k: Vec2) -> Vec2 {
    [y[0] + a * k[0], y[1] + a * k[1]]
}
