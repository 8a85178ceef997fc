//! Dormand-Prince 5(4) tableau and step-size controller constants, shared
//! by the scalar reaction flow and the vector reference integrator.

pub const STAGES: usize = 7;

pub const C: [f64; STAGES] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

pub const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order solution weights (FSAL: the seventh stage has weight zero
/// and equals the derivative at the new point).
pub const B: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Error weights, difference of the embedded fourth-order solution.
pub const E: [f64; STAGES] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// PI step-size controller (order-5 pair).
pub const SAFETY: f64 = 0.9;
pub const FAC_MIN: f64 = 0.2;
pub const FAC_MAX: f64 = 10.0;
pub const BETA: f64 = 0.04;
pub const EXPO1: f64 = 0.2 - BETA * 0.75;

/// New step scale factor from the current and previous error norms
/// (the step is divided by this; PI stabilisation through `err_old`).
pub fn step_factor(err: f64, err_old: f64) -> f64 {
    let fac11 = err.powf(EXPO1);
    let fac = fac11 / err_old.powf(BETA);
    (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN)
}

/// Shrink factor after a rejected step (always >= 1).
pub fn reject_factor(err: f64) -> f64 {
    (err.powf(EXPO1) / SAFETY).min(1.0 / FAC_MIN).max(1.0)
}
