use serde::{Deserialize, Serialize};

/// Armature-controlled DC motor driving an inertial load.
/// State `[theta, omega, current]`, input voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcMotorParams {
    /// Rotor inertia.
    pub j: f64,
    /// Viscous friction.
    pub b: f64,
    /// Torque and back-EMF constant.
    pub k: f64,
    /// Armature resistance.
    pub r: f64,
    /// Armature inductance.
    pub l: f64,
}

impl Default for DcMotorParams {
    fn default() -> Self {
        Self {
            j: 0.01,
            b: 0.1,
            k: 0.05,
            r: 1.0,
            l: 0.5,
        }
    }
}

impl DcMotorParams {
    pub(super) fn derivative(&self, x: &[f64], u: &[f64], dx: &mut [f64]) {
        let (omega, i) = (x[1], x[2]);
        dx[0] = omega;
        dx[1] = (self.k * i - self.b * omega) / self.j;
        dx[2] = (-self.k * omega - self.r * i + u[0]) / self.l;
    }

    pub(super) fn validate(&self) -> Result<(), String> {
        let all = [self.j, self.b, self.k, self.r, self.l];
        if all.iter().any(|v| !v.is_finite()) || self.j <= 0.0 || self.l <= 0.0 {
            return Err("dc_motor parameters must be finite with j > 0 and l > 0".into());
        }
        Ok(())
    }
}

/// Kinematic bicycle. State `[x, y, heading, speed]`, inputs `[steer, accel]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BicycleParams {
    /// Distance from the center of mass to the front axle.
    pub lf: f64,
    /// Distance from the center of mass to the rear axle.
    pub lr: f64,
}

impl Default for BicycleParams {
    fn default() -> Self {
        Self { lf: 0.5, lr: 0.5 }
    }
}

impl BicycleParams {
    pub(super) fn derivative(&self, x: &[f64], u: &[f64], dx: &mut [f64]) {
        let (psi, v) = (x[2], x[3]);
        let beta = (self.lr / (self.lf + self.lr) * u[0].tan()).atan();
        dx[0] = v * (psi + beta).cos();
        dx[1] = v * (psi + beta).sin();
        dx[2] = v / self.lr * beta.sin();
        dx[3] = u[1];
    }

    pub(super) fn validate(&self) -> Result<(), String> {
        if !(self.lf > 0.0 && self.lr > 0.0 && self.lf.is_finite() && self.lr.is_finite()) {
            return Err("bicycle axle distances must be positive".into());
        }
        Ok(())
    }
}

/// Rigid-body attitude with Rodrigues parameters.
/// State `[w1, w2, w3, p1, p2, p3]`, inputs `[u1, u2, u3]`.
pub(super) fn attitude_derivative(x: &[f64], u: &[f64], dx: &mut [f64]) {
    let (w1, w2, w3) = (x[0], x[1], x[2]);
    let (p1, p2, p3) = (x[3], x[4], x[5]);
    dx[0] = 0.25 * (u[0] + w2 * w3);
    dx[1] = 0.5 * (u[1] - 3.0 * w1 * w3);
    dx[2] = u[2] + 2.0 * w1 * w2;
    // 0.5 * (I + p p^T + [p]x) w
    let pw = p1 * w1 + p2 * w2 + p3 * w3;
    dx[3] = 0.5 * (w1 + p1 * pw + (p2 * w3 - p3 * w2));
    dx[4] = 0.5 * (w2 + p2 * pw + (p3 * w1 - p1 * w3));
    dx[5] = 0.5 * (w3 + p3 * pw + (p1 * w2 - p2 * w1));
}

/// Scratch buffers for one integration step.
#[derive(Debug, Clone)]
pub(super) struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    pub(super) fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    pub(super) fn euler<F>(&mut self, f: F, x: &mut [f64], h: f64)
    where
        F: Fn(&[f64], &mut [f64]),
    {
        f(x, &mut self.k1);
        for (xi, ki) in x.iter_mut().zip(&self.k1) {
            *xi += h * ki;
        }
    }

    pub(super) fn rk4<F>(&mut self, f: F, x: &mut [f64], h: f64)
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let n = x.len();
        f(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f(&self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}
