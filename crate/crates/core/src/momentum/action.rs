use core::f64::consts::PI;

use num_traits::Float;

use super::MomentumError;

/// A Hamiltonian `h(q, p)` on the plane with its gradient `(dh/dq, dh/dp)`.
pub trait PlanarHamiltonian {
    fn value(&self, q: f64, p: f64) -> f64;

    /// Central differences unless overridden.
    fn gradient(&self, q: f64, p: f64) -> [f64; 2] {
        let hq = 1e-6 * (1.0 + Float::abs(q));
        let hp = 1e-6 * (1.0 + Float::abs(p));
        [
            (self.value(q + hq, p) - self.value(q - hq, p)) / (2.0 * hq),
            (self.value(q, p + hp) - self.value(q, p - hp)) / (2.0 * hp),
        ]
    }
}

/// `(p^2 + q^2) / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Oscillator;

impl PlanarHamiltonian for Oscillator {
    fn value(&self, q: f64, p: f64) -> f64 {
        0.5 * (p * p + q * q)
    }
    fn gradient(&self, q: f64, p: f64) -> [f64; 2] {
        [q, p]
    }
}

/// `(p^2 + q^4) / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuarticWell;

impl PlanarHamiltonian for QuarticWell {
    fn value(&self, q: f64, p: f64) -> f64 {
        0.5 * (p * p + q * q * q * q)
    }
    fn gradient(&self, q: f64, p: f64) -> [f64; 2] {
        [2.0 * q * q * q, p]
    }
}

/// A closure `h(q, p)`; the gradient is taken by central differences.
pub struct FnHamiltonian<F>(pub F);

impl<F: Fn(f64, f64) -> f64> PlanarHamiltonian for FnHamiltonian<F> {
    fn value(&self, q: f64, p: f64) -> f64 {
        (self.0)(q, p)
    }
}

/// Levels of `hamiltonian` with energy in `energy_range` are closed curves
/// winding once around `center = (q, p)`.
pub struct ActionIntegralProblem<H> {
    pub hamiltonian: H,
    pub center: [f64; 2],
    pub energy_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ActionSettings {
    /// Local error tolerance of each Dormand-Prince step.
    pub tol: f64,
    pub initial_step: f64,
    pub max_arc_length: f64,
    /// Levels where `|grad h|` drops below this are not regular.
    pub min_gradient: f64,
}

impl Default for ActionSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            initial_step: 1e-2,
            max_arc_length: 1e4,
            min_gradient: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActionValue {
    pub energy: f64,
    /// `oint p dq` over the level, oriented by the Hamiltonian flow.
    pub value: f64,
    pub error_estimate: f64,
    /// `oint ds / |grad h|`, the period of the flow and `dF/dE`.
    pub period: f64,
    pub arc_length: f64,
    pub steps: usize,
    pub closure_gap: f64,
}

type State = [f64; 4];

/// Unit tangent along the Hamiltonian flow, `p dq/ds` and `dt/ds`.
fn rhs<H: PlanarHamiltonian>(h: &H, y: &State) -> Result<State, f64> {
    let [hq, hp] = h.gradient(y[0], y[1]);
    let n = Float::sqrt(hq * hq + hp * hp);
    if !(n > 0.0) || !n.is_finite() {
        return Err(n);
    }
    let dq = hp / n;
    Ok([dq, -hq / n, y[1] * dq, 1.0 / n])
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
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
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand-Prince 5(4) step of the autonomous system; returns the fifth-order state and the
/// componentwise difference to the embedded fourth-order one.
fn dopri_step<H: PlanarHamiltonian>(h: &H, y: &State, s: f64) -> Result<(State, State), f64> {
    let mut k = [[0.0; 4]; 7];
    for i in 0..7 {
        let mut yi = *y;
        for (j, kj) in k.iter().enumerate().take(i) {
            for c in 0..4 {
                yi[c] += s * A[i][j] * kj[c];
            }
        }
        k[i] = rhs(h, &yi)?;
    }
    let mut y5 = *y;
    let mut err = [0.0; 4];
    for c in 0..4 {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for i in 0..7 {
            d5 += B5[i] * k[i][c];
            d4 += B4[i] * k[i][c];
        }
        y5[c] += s * d5;
        err[c] = s * (d5 - d4);
    }
    Ok((y5, err))
}

/// Newton projection of `(q, p)` back onto `h = energy`.
fn project<H: PlanarHamiltonian>(h: &H, y: &mut State, energy: f64) {
    for _ in 0..3 {
        let r = h.value(y[0], y[1]) - energy;
        let [hq, hp] = h.gradient(y[0], y[1]);
        let n2 = hq * hq + hp * hp;
        if !(n2 > 0.0) {
            return;
        }
        y[0] -= r * hq / n2;
        y[1] -= r * hp / n2;
    }
}

fn angle(center: [f64; 2], y: &State) -> f64 {
    Float::atan2(y[1] - center[1], y[0] - center[0])
}

fn wrap(a: f64) -> f64 {
    a - 2.0 * PI * Float::round(a / (2.0 * PI))
}

/// Where the ray from the center along `+q` meets the level.
fn start_point<H: PlanarHamiltonian>(prob: &ActionIntegralProblem<H>, energy: f64) -> Option<f64> {
    let [qc, pc] = prob.center;
    let f = |s: f64| prob.hamiltonian.value(qc + s, pc) - energy;
    let mut hi = 1e-3;
    let mut n = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 200 || !hi.is_finite() {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `oint_{h = E} p dq`, computed by following the level curve with adaptive
/// Dormand-Prince steps along the unit Hamiltonian vector field and Newton
/// projection back onto the level after every accepted step.
pub fn action_integral<H: PlanarHamiltonian>(
    prob: &ActionIntegralProblem<H>,
    energy: f64,
    settings: &ActionSettings,
) -> Result<ActionValue, MomentumError> {
    let (lo, hi) = prob.energy_range;
    if !(energy >= lo && energy <= hi) {
        return Err(MomentumError::EnergyOutOfRange { energy });
    }
    let h = &prob.hamiltonian;
    let center = prob.center;
    let e0 = h.value(center[0], center[1]);
    if energy < e0 {
        return Err(MomentumError::EnergyOutOfRange { energy });
    }
    let degenerate = ActionValue {
        energy,
        value: 0.0,
        error_estimate: 0.0,
        period: 0.0,
        arc_length: 0.0,
        steps: 0,
        closure_gap: 0.0,
    };
    if energy - e0 <= 1e-15 * (1.0 + Float::abs(e0)) {
        return Ok(degenerate);
    }
    let not_closed = |arc_length| MomentumError::LevelNotClosed { energy, arc_length };
    let r0 = start_point(prob, energy).ok_or(not_closed(0.0))?;
    if r0 == 0.0 {
        return Ok(degenerate);
    }
    let start: State = [center[0] + r0, center[1], 0.0, 0.0];
    let mut y = start;
    let mut turned = 0.0;
    let mut length = 0.0;
    let mut step = settings.initial_step.min(0.1 * r0).max(1e-12);
    let mut err_sum = 0.0;
    let mut steps = 0;
    let check = |y: &State, length: f64| -> Result<(), MomentumError> {
        let [hq, hp] = h.gradient(y[0], y[1]);
        if Float::sqrt(hq * hq + hp * hp) < settings.min_gradient {
            Err(not_closed(length))
        } else {
            Ok(())
        }
    };
    check(&y, 0.0)?;
    loop {
        let (y5, err) = dopri_step(h, &y, step).map_err(|_| not_closed(length))?;
        let e = err.iter().fold(0.0f64, |m, v| m.max(Float::abs(*v)));
        if e > settings.tol && step > 1e-14 {
            step *= (0.9 * Float::powf(settings.tol / e, 0.2)).clamp(0.1, 0.9);
            continue;
        }
        let dphi = wrap(angle(center, &y5) - angle(center, &y));
        if Float::abs(turned + dphi) >= 2.0 * PI {
            // Bisect for the fraction of the step that lands on the start ray.
            let target = 2.0 * PI * Float::signum(turned + dphi);
            let (mut a, mut b) = (0.0, step);
            let mut end = y5;
            let mut end_err = err;
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let (ym, em) = dopri_step(h, &y, m).map_err(|_| not_closed(length))?;
                let total = turned + wrap(angle(center, &ym) - angle(center, &y));
                if Float::abs(total) >= Float::abs(target) {
                    b = m;
                    end = ym;
                    end_err = em;
                } else {
                    a = m;
                }
                if b - a <= 1e-15 * (1.0 + b) {
                    break;
                }
            }
            length += b;
            steps += 1;
            err_sum += Float::abs(end_err[2]);
            project(h, &mut end, energy);
            let gap = Float::sqrt(
                (end[0] - start[0]) * (end[0] - start[0])
                    + (end[1] - start[1]) * (end[1] - start[1]),
            );
            let value = end[2];
            return Ok(ActionValue {
                energy,
                value,
                error_estimate: err_sum + gap * (Float::abs(end[1]) + Float::abs(start[1]) + gap),
                period: end[3],
                arc_length: length,
                steps,
                closure_gap: gap,
            });
        }
        let prev = rhs(h, &y).map_err(|_| not_closed(length))?;
        y = y5;
        project(h, &mut y, energy);
        check(&y, length)?;
        turned += dphi;
        length += step;
        steps += 1;
        err_sum += Float::abs(err[2]);
        if length > settings.max_arc_length {
            return Err(not_closed(length));
        }
        let next = rhs(h, &y).map_err(|_| not_closed(length))?;
        // Curvature cap: keep the tangent turn per step below 0.1 rad.
        let turn = Float::sqrt(
            (next[0] - prev[0]) * (next[0] - prev[0]) + (next[1] - prev[1]) * (next[1] - prev[1]),
        );
        let grow = if e > 0.0 {
            (0.9 * Float::powf(settings.tol / e, 0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        let old = step;
        step = (old * grow).min(2.0 * r0);
        if turn > 0.0 {
            step = step.min(0.1 * old / turn);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator() -> ActionIntegralProblem<Oscillator> {
        ActionIntegralProblem {
            hamiltonian: Oscillator,
            center: [0.0, 0.0],
            energy_range: (0.0, 10.0),
        }
    }

    #[test]
    fn oscillator_action_is_two_pi_e() {
        for e in [0.1, 0.5, 1.0, 3.0] {
            let v = action_integral(&oscillator(), e, &ActionSettings::default()).unwrap();
            assert!((v.value - 2.0 * PI * e).abs() < 1e-8, "{e}: {v:?}");
            assert!((v.period - 2.0 * PI).abs() < 1e-8);
            assert!(v.closure_gap < 1e-9);
        }
    }

    #[test]
    fn zero_energy_is_degenerate() {
        let v = action_integral(&oscillator(), 0.0, &ActionSettings::default()).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn out_of_range_and_open_levels() {
        assert!(matches!(
            action_integral(&oscillator(), 11.0, &ActionSettings::default()),
            Err(MomentumError::EnergyOutOfRange { .. })
        ));
        // h = p^2 / 2 - q has no closed levels.
        let open = ActionIntegralProblem {
            hamiltonian: FnHamiltonian(|q: f64, p: f64| 0.5 * p * p - q),
            center: [0.0, 0.0],
            energy_range: (-1.0, 1.0),
        };
        assert!(matches!(
            action_integral(
                &open,
                0.5,
                &ActionSettings {
                    max_arc_length: 100.0,
                    ..Default::default()
                }
            ),
            Err(MomentumError::LevelNotClosed { .. } | MomentumError::EnergyOutOfRange { .. })
        ));
    }

    #[test]
    fn shifted_center_and_finite_differences() {
        let prob = ActionIntegralProblem {
            hamiltonian: FnHamiltonian(|q: f64, p: f64| {
                0.5 * ((q - 1.0) * (q - 1.0) + 4.0 * (p + 0.5) * (p + 0.5))
            }),
            center: [1.0, -0.5],
            energy_range: (0.0, 5.0),
        };
        // Ellipse with semi-axes sqrt(2E) and sqrt(2E)/2.
        let v = action_integral(&prob, 1.0, &ActionSettings::default()).unwrap();
        assert!((v.value - PI).abs() < 1e-7, "{v:?}");
    }
}
