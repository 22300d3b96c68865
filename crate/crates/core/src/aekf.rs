//! Adaptive extended Kalman filter over the joint fire/UAV/weather state
//! `[qx, qy, px, py, pz, R, U, θ]`.
//!
//! The UAV pose enters the transition as a control input: `predict` replaces
//! `p` with the commanded pose, so the pose rows of `F` are zero and the pose
//! uncertainty after a prediction is exactly the process-noise block.

use nalgebra::{Cholesky, DMatrix, SMatrix, SVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fire::{self, wrap_angle, EllipseParams, WindFuel};
use crate::geometry::Point;

pub const STATE_DIM: usize = 8;
pub const OBS_DIM: usize = 5;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type ObsVector = SVector<f64, OBS_DIM>;
pub type ObsMatrix = SMatrix<f64, OBS_DIM, OBS_DIM>;
pub type ObsJacobian = SMatrix<f64, OBS_DIM, STATE_DIM>;
pub type GainMatrix = SMatrix<f64, STATE_DIM, OBS_DIM>;

/// Component indices into [`StateVector`].
pub mod idx {
    pub const QX: usize = 0;
    pub const QY: usize = 1;
    pub const PX: usize = 2;
    pub const PY: usize = 3;
    pub const PZ: usize = 4;
    pub const R: usize = 5;
    pub const U: usize = 6;
    pub const THETA: usize = 7;
}

/// Threshold on the residual covariance condition number.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub qx: f64,
    pub qy: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub spread_rate: f64,
    pub wind_speed: f64,
    pub azimuth: f64,
}

impl FullState {
    pub fn to_vector(&self) -> StateVector {
        StateVector::from([
            self.qx,
            self.qy,
            self.px,
            self.py,
            self.pz,
            self.spread_rate,
            self.wind_speed,
            self.azimuth,
        ])
    }

    pub fn from_vector(v: &StateVector) -> Self {
        FullState {
            qx: v[idx::QX],
            qy: v[idx::QY],
            px: v[idx::PX],
            py: v[idx::PY],
            pz: v[idx::PZ],
            spread_rate: v[idx::R],
            wind_speed: v[idx::U],
            azimuth: v[idx::THETA],
        }
    }

    pub fn fire_position(&self) -> Point {
        Point::new(self.qx, self.qy)
    }

    pub fn uav_pose(&self) -> Vector3<f64> {
        Vector3::new(self.px, self.py, self.pz)
    }

    pub fn with_uav_pose(mut self, pose: Vector3<f64>) -> Self {
        self.px = pose.x;
        self.py = pose.y;
        self.pz = pose.z;
        self
    }

    pub fn wind_fuel(&self) -> WindFuel {
        WindFuel {
            spread_rate: self.spread_rate,
            wind_speed: self.wind_speed,
            azimuth: self.azimuth,
        }
    }
}

/// Look angles to the fire plus the directly sensed weather/fuel values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationVector {
    pub phi_x: f64,
    pub phi_y: f64,
    pub spread_rate: f64,
    pub wind_speed: f64,
    pub azimuth: f64,
}

impl ObservationVector {
    pub fn to_vector(&self) -> ObsVector {
        ObsVector::from([
            self.phi_x,
            self.phi_y,
            self.spread_rate,
            self.wind_speed,
            self.azimuth,
        ])
    }

    pub fn from_vector(v: &ObsVector) -> Self {
        ObservationVector {
            phi_x: v[0],
            phi_y: v[1],
            spread_rate: v[2],
            wind_speed: v[3],
            azimuth: v[4],
        }
    }

    /// Ground point seen along the look angles from `uav`.
    pub fn ground_point(&self, uav: &Vector3<f64>) -> Point {
        Point::new(uav.x + uav.z * self.phi_x.tan(), uav.y + uav.z * self.phi_y.tan())
    }
}

/// Transition with an explicit UAV pose control: the fire moves by
/// `front_velocity * dt`, the pose is set to `control`, weather is constant.
pub fn transition_with_control(
    s: &FullState,
    control: &Vector3<f64>,
    dt: f64,
    params: &EllipseParams,
) -> Result<FullState> {
    let v = fire::front_velocity(&s.wind_fuel(), params)?;
    Ok(FullState {
        qx: s.qx + v.x * dt,
        qy: s.qy + v.y * dt,
        ..*s
    }
    .with_uav_pose(*control))
}

/// State transition holding the UAV at its current pose. No noise is added.
pub fn state_transition(s: &FullState, dt: f64, params: &EllipseParams) -> Result<FullState> {
    transition_with_control(s, &s.uav_pose(), dt, params)
}

/// Jacobian of the transition with respect to the state (control held fixed).
pub fn transition_jacobian(s: &FullState, dt: f64, params: &EllipseParams) -> Result<StateMatrix> {
    let factor = fire::spread_factor(s.wind_speed, params)?;
    let slope = if s.spread_rate == 0.0 {
        0.0
    } else {
        s.spread_rate * fire::spread_factor_slope(s.wind_speed, params)?
    };
    let c = s.spread_rate * factor;
    let (sin, cos) = s.azimuth.sin_cos();

    let mut f = StateMatrix::zeros();
    f[(idx::QX, idx::QX)] = 1.0;
    f[(idx::QY, idx::QY)] = 1.0;
    f[(idx::QX, idx::R)] = factor * sin * dt;
    f[(idx::QY, idx::R)] = factor * cos * dt;
    f[(idx::QX, idx::U)] = slope * sin * dt;
    f[(idx::QY, idx::U)] = slope * cos * dt;
    f[(idx::QX, idx::THETA)] = c * cos * dt;
    f[(idx::QY, idx::THETA)] = -c * sin * dt;
    f[(idx::R, idx::R)] = 1.0;
    f[(idx::U, idx::U)] = 1.0;
    f[(idx::THETA, idx::THETA)] = 1.0;
    Ok(f)
}

fn require_airborne(s: &FullState) -> Result<()> {
    if s.pz > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "UAV altitude must be positive, got {}",
            s.pz
        )))
    }
}

pub fn observe(s: &FullState) -> Result<ObservationVector> {
    require_airborne(s)?;
    Ok(ObservationVector {
        phi_x: ((s.qx - s.px) / s.pz).atan(),
        phi_y: ((s.qy - s.py) / s.pz).atan(),
        spread_rate: s.spread_rate,
        wind_speed: s.wind_speed,
        azimuth: s.azimuth,
    })
}

pub fn observation_jacobian(s: &FullState) -> Result<ObsJacobian> {
    require_airborne(s)?;
    let mut h = ObsJacobian::zeros();
    for (row, q, p, qi, pi) in [
        (0, s.qx, s.px, idx::QX, idx::PX),
        (1, s.qy, s.py, idx::QY, idx::PY),
    ] {
        let u = (q - p) / s.pz;
        let scale = 1.0 / (1.0 + u * u);
        h[(row, qi)] = scale / s.pz;
        h[(row, pi)] = -scale / s.pz;
        h[(row, idx::PZ)] = -scale * (q - p) / (s.pz * s.pz);
    }
    h[(2, idx::R)] = 1.0;
    h[(3, idx::U)] = 1.0;
    h[(4, idx::THETA)] = 1.0;
    Ok(h)
}

/// Which residual drives the process-noise adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseResidual {
    /// `z - h(ŝ_{t|t})`.
    #[default]
    PostFit,
    /// The innovation `z - h(ŝ_{t|t-1})`.
    Innovation,
}

/// Filter tuning. Covariances are given as diagonals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// Forgetting factor of the Q/R adaptation, in `[0, 1]`; 1 disables it.
    pub alpha_forget: f64,
    pub dt: f64,
    pub noise_residual: NoiseResidual,
    pub initial_cov: [f64; STATE_DIM],
    pub process_cov: [f64; STATE_DIM],
    pub observation_cov: [f64; OBS_DIM],
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            alpha_forget: 0.95,
            dt: 1.0,
            noise_residual: NoiseResidual::PostFit,
            initial_cov: [25.0, 25.0, 0.25, 0.25, 0.25, 1e-2, 0.25, 1e-2],
            process_cov: [2.5e-3, 2.5e-3, 0.25, 0.25, 0.25, 1e-6, 1e-4, 1e-6],
            observation_cov: [2.5e-5, 2.5e-5, 4e-4, 4e-2, 4e-4],
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha_forget) {
            return Err(Error::config("filter.alpha_forget", "must lie in [0, 1]"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("filter.dt", "must be positive"));
        }
        let diag_ok = |d: &[f64]| d.iter().all(|v| v.is_finite() && *v >= 0.0);
        if !diag_ok(&self.initial_cov) {
            return Err(Error::config(
                "filter.initial_cov",
                "entries must be finite and >= 0",
            ));
        }
        if !diag_ok(&self.process_cov) {
            return Err(Error::config(
                "filter.process_cov",
                "entries must be finite and >= 0",
            ));
        }
        if !self.observation_cov.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::config(
                "filter.observation_cov",
                "entries must be finite and > 0",
            ));
        }
        Ok(())
    }
}

/// Per-fire filter state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackEstimate {
    pub mean: FullState,
    /// State covariance `P`; holds `P_{t|t-1}` between `predict` and `update`.
    pub cov: StateMatrix,
    /// Adaptive process-noise covariance `Q`.
    pub process_cov: StateMatrix,
    /// Adaptive observation-noise covariance `R_obs`.
    pub observation_cov: ObsMatrix,
    /// Residual covariance `S` from the last update.
    pub residual_cov: ObsMatrix,
    /// Transition Jacobian `F_t` from the last prediction.
    pub transition: StateMatrix,
    /// Step of the last measurement update.
    pub last_update: u64,
}

impl TrackEstimate {
    pub fn new(mean: FullState, config: &FilterConfig) -> Self {
        let observation_cov = ObsMatrix::from_diagonal(&ObsVector::from(config.observation_cov));
        TrackEstimate {
            mean,
            cov: StateMatrix::from_diagonal(&StateVector::from(config.initial_cov)),
            process_cov: StateMatrix::from_diagonal(&StateVector::from(config.process_cov)),
            observation_cov,
            residual_cov: observation_cov,
            transition: StateMatrix::identity(),
            last_update: 0,
        }
    }

    /// `H P Hᵀ + R_obs` at the current mean; right after `predict` this is `S_{t|t-1}`.
    pub fn current_residual_cov(&self) -> Result<ObsMatrix> {
        let h = observation_jacobian(&self.mean)?;
        Ok(h * self.cov * h.transpose() + self.observation_cov)
    }
}

/// Quantities produced by a measurement update and consumed by the noise adaptation.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub innovation: ObsVector,
    pub gain: GainMatrix,
    pub jacobian: ObsJacobian,
    pub prior_cov: StateMatrix,
    pub residual_cov: ObsMatrix,
}

/// Symmetrizes `m` and, if it is not positive definite, floors its
/// eigenvalues at zero.
pub fn symmetrize_psd<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let sym = (m + m.transpose()) * 0.5;
    if Cholesky::new(sym).is_some() {
        return sym;
    }
    let eig = SymmetricEigen::new(DMatrix::from_column_slice(N, N, sym.as_slice()));
    let floored = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0)));
    let out = &eig.eigenvectors * floored * eig.eigenvectors.transpose();
    let out = SMatrix::<f64, N, N>::from_column_slice(out.as_slice());
    (out + out.transpose()) * 0.5
}

/// `m^k` by repeated squaring.
pub fn matrix_power<const N: usize>(m: &SMatrix<f64, N, N>, mut k: u64) -> SMatrix<f64, N, N> {
    let mut result = SMatrix::<f64, N, N>::identity();
    let mut base = *m;
    while k > 0 {
        if k & 1 == 1 {
            result *= base;
        }
        base = base * base;
        k >>= 1;
    }
    result
}

/// Residual covariance `r` steps ahead with frozen linearisation:
/// `S_{t+r|t} = H F^{r-1} P (H F^{r-1})ᵀ + R`.
pub fn multi_step_residual<const N: usize, const M: usize>(
    transition: &SMatrix<f64, N, N>,
    jacobian: &SMatrix<f64, M, N>,
    prior_cov: &SMatrix<f64, N, N>,
    observation_cov: &SMatrix<f64, M, M>,
    steps: u64,
) -> SMatrix<f64, M, M> {
    assert!(steps >= 1, "horizon must be at least one step");
    let hf = jacobian * matrix_power(transition, steps - 1);
    hf * prior_cov * hf.transpose() + observation_cov
}

/// Convex-combination noise adaptation:
/// `Q ← αQ + (1-α) K d dᵀ Kᵀ` and `R ← αR + (1-α)(ỹỹᵀ + H P⁻ Hᵀ)`.
#[allow(clippy::too_many_arguments)]
pub fn adapt_covariances<const N: usize, const M: usize>(
    process_cov: &SMatrix<f64, N, N>,
    observation_cov: &SMatrix<f64, M, M>,
    alpha: f64,
    innovation: &SVector<f64, M>,
    residual: &SVector<f64, M>,
    gain: &SMatrix<f64, N, M>,
    jacobian: &SMatrix<f64, M, N>,
    prior_cov: &SMatrix<f64, N, N>,
) -> (SMatrix<f64, N, N>, SMatrix<f64, M, M>) {
    let kd = gain * residual;
    let q = process_cov * alpha + (kd * kd.transpose()) * (1.0 - alpha);
    let r = observation_cov * alpha
        + (innovation * innovation.transpose() + jacobian * prior_cov * jacobian.transpose()) * (1.0 - alpha);
    (symmetrize_psd(&q), symmetrize_psd(&r))
}

/// `F P Fᵀ + Q`, symmetrized.
pub fn propagate_covariance<const N: usize>(
    transition: &SMatrix<f64, N, N>,
    cov: &SMatrix<f64, N, N>,
    process_cov: &SMatrix<f64, N, N>,
) -> SMatrix<f64, N, N> {
    symmetrize_psd(&(transition * cov * transition.transpose() + process_cov))
}

/// Solves `K = P Hᵀ S⁻¹` after checking the conditioning of `S`.
pub fn kalman_gain<const N: usize, const M: usize>(
    prior_cov: &SMatrix<f64, N, N>,
    jacobian: &SMatrix<f64, M, N>,
    residual_cov: &SMatrix<f64, M, M>,
) -> Result<SMatrix<f64, N, M>> {
    let eigenvalues = DMatrix::from_column_slice(M, M, residual_cov.as_slice()).symmetric_eigenvalues();
    let max = eigenvalues.max();
    let min = eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularResidual { condition });
    }
    let hp = jacobian * prior_cov;
    let kt = match Cholesky::new(*residual_cov) {
        Some(chol) => chol.solve(&hp),
        None => {
            let solved = DMatrix::from_column_slice(M, M, residual_cov.as_slice())
                .lu()
                .solve(&DMatrix::from_column_slice(M, N, hp.as_slice()))
                .ok_or(Error::SingularResidual { condition })?;
            SMatrix::<f64, M, N>::from_column_slice(solved.as_slice())
        }
    };
    Ok(kt.transpose())
}

/// Posterior covariance `(I - K H) P`, symmetrized.
pub fn posterior_covariance<const N: usize, const M: usize>(
    gain: &SMatrix<f64, N, M>,
    jacobian: &SMatrix<f64, M, N>,
    prior_cov: &SMatrix<f64, N, N>,
) -> SMatrix<f64, N, N> {
    symmetrize_psd(&((SMatrix::<f64, N, N>::identity() - gain * jacobian) * prior_cov))
}

fn wrap_pi(a: f64) -> f64 {
    let w = wrap_angle(a);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

fn residual(z: &ObservationVector, predicted: &ObservationVector) -> ObsVector {
    let mut r = z.to_vector() - predicted.to_vector();
    r[4] = wrap_pi(r[4]);
    r
}

/// The filter: tuning plus the fire model it linearises.
#[derive(Debug, Clone, PartialEq)]
pub struct Aekf {
    pub config: FilterConfig,
    pub params: EllipseParams,
}

impl Aekf {
    pub fn new(config: FilterConfig, params: EllipseParams) -> Self {
        Aekf { config, params }
    }

    /// Fresh track for a fire first seen with observation `z` from `uav`.
    pub fn initiate(&self, z: &ObservationVector, uav: &Vector3<f64>) -> TrackEstimate {
        let q = z.ground_point(uav);
        let mean = FullState {
            qx: q.x,
            qy: q.y,
            px: uav.x,
            py: uav.y,
            pz: uav.z,
            spread_rate: z.spread_rate.max(0.0),
            wind_speed: z.wind_speed.max(0.0),
            azimuth: wrap_angle(z.azimuth),
        };
        TrackEstimate::new(mean, &self.config)
    }

    /// Prediction: `ŝ ← f(ŝ, u)`, `P ← F P Fᵀ + Q`.
    ///
    /// `control` is the UAV pose for this step; `None` holds the current one.
    pub fn predict(
        &self,
        track: &TrackEstimate,
        dt: f64,
        control: Option<Vector3<f64>>,
    ) -> Result<TrackEstimate> {
        let control = control.unwrap_or_else(|| track.mean.uav_pose());
        let f = transition_jacobian(&track.mean, dt, &self.params)?;
        let mean = transition_with_control(&track.mean, &control, dt, &self.params)?;
        let cov = propagate_covariance(&f, &track.cov, &track.process_cov);
        Ok(TrackEstimate {
            mean,
            cov,
            transition: f,
            ..track.clone()
        })
    }

    /// Measurement update. Returns the posterior and the update by-products.
    pub fn update(
        &self,
        track: &TrackEstimate,
        z: &ObservationVector,
    ) -> Result<(TrackEstimate, UpdateOutcome)> {
        let h = observation_jacobian(&track.mean)?;
        let innovation = residual(z, &observe(&track.mean)?);
        let s = symmetrize_psd(&(h * track.cov * h.transpose() + track.observation_cov));
        let gain = kalman_gain(&track.cov, &h, &s)?;

        let mut v = track.mean.to_vector() + gain * innovation;
        v[idx::R] = v[idx::R].max(0.0);
        v[idx::U] = v[idx::U].max(0.0);
        v[idx::THETA] = wrap_angle(v[idx::THETA]);
        v[idx::PZ] = v[idx::PZ].max(1e-3);
        let cov = posterior_covariance(&gain, &h, &track.cov);

        let posterior = TrackEstimate {
            mean: FullState::from_vector(&v),
            cov,
            residual_cov: s,
            ..track.clone()
        };
        let outcome = UpdateOutcome {
            innovation,
            gain,
            jacobian: h,
            prior_cov: track.cov,
            residual_cov: s,
        };
        Ok((posterior, outcome))
    }

    /// Adapts `Q` and `R_obs` after an update with observation `z`.
    pub fn adapt_noise(
        &self,
        track: &TrackEstimate,
        z: &ObservationVector,
        outcome: &UpdateOutcome,
    ) -> Result<TrackEstimate> {
        let d = match self.config.noise_residual {
            NoiseResidual::PostFit => residual(z, &observe(&track.mean)?),
            NoiseResidual::Innovation => outcome.innovation,
        };
        let (process_cov, observation_cov) = adapt_covariances(
            &track.process_cov,
            &track.observation_cov,
            self.config.alpha_forget,
            &outcome.innovation,
            &d,
            &outcome.gain,
            &outcome.jacobian,
            &outcome.prior_cov,
        );
        Ok(TrackEstimate {
            process_cov,
            observation_cov,
            ..track.clone()
        })
    }

    /// Update followed by noise adaptation, stamping `last_update`.
    pub fn correct(
        &self,
        track: &TrackEstimate,
        z: &ObservationVector,
        step: u64,
    ) -> Result<(TrackEstimate, UpdateOutcome)> {
        let (posterior, outcome) = self.update(track, z)?;
        let mut adapted = self.adapt_noise(&posterior, z, &outcome)?;
        adapted.last_update = step;
        Ok((adapted, outcome))
    }
}

/// `r`-step prediction from the frozen time-t linearisation held in `track`
/// (which must be fresh from `predict`): returns `F^{r-1} ŝ_{t|t-1}` and
/// `S_{t+r|t}`.
pub fn multi_step_predict(track: &TrackEstimate, steps: u64) -> Result<(StateVector, ObsMatrix)> {
    assert!(steps >= 1, "horizon must be at least one step");
    let h = observation_jacobian(&track.mean)?;
    let power = matrix_power(&track.transition, steps - 1);
    let state = power * track.mean.to_vector();
    let s = multi_step_residual(&track.transition, &h, &track.cov, &track.observation_cov, steps);
    Ok((state, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fire::{front_velocity, propagate_front, spread_rate_for_speed, FireFront};
    use crate::rng::substream;
    use nalgebra::{Matrix1, SMatrix};
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn params() -> EllipseParams {
        EllipseParams::default()
    }

    fn random_state<R: Rng>(rng: &mut R) -> FullState {
        FullState {
            qx: rng.random_range(-500.0..500.0),
            qy: rng.random_range(-500.0..500.0),
            px: rng.random_range(-500.0..500.0),
            py: rng.random_range(-500.0..500.0),
            pz: rng.random_range(10.0..200.0),
            spread_rate: rng.random_range(0.0..3.0),
            wind_speed: rng.random_range(0.5..15.0),
            azimuth: rng.random_range(0.0..std::f64::consts::TAU),
        }
    }

    fn rel_err(analytic: f64, numeric: f64) -> f64 {
        (analytic - numeric).abs() / numeric.abs().max(1e-3)
    }

    #[test]
    fn calm_wind_leaves_fire_in_place() {
        let s = FullState {
            qx: 3.0,
            qy: 4.0,
            px: 0.0,
            py: 0.0,
            pz: 50.0,
            spread_rate: 2.0,
            wind_speed: 0.0,
            azimuth: 1.0,
        };
        let next = state_transition(&s, 5.0, &params()).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn northward_unit_spread() {
        let r = spread_rate_for_speed(1.0, 5.0, &params()).unwrap();
        let s = FullState {
            qx: 0.0,
            qy: 0.0,
            px: 0.0,
            py: 0.0,
            pz: 50.0,
            spread_rate: r,
            wind_speed: 5.0,
            azimuth: 0.0,
        };
        let next = state_transition(&s, 1.0, &params()).unwrap();
        assert!((next.qy - 1.0).abs() < 1e-12);
        assert_eq!(next.qx, 0.0);
    }

    #[test]
    fn transition_agrees_with_fire_dynamics() {
        let s = FullState {
            qx: 12.0,
            qy: -7.0,
            px: 0.0,
            py: 0.0,
            pz: 40.0,
            spread_rate: 2.0,
            wind_speed: 5.0,
            azimuth: FRAC_PI_3,
        };
        let velocity = front_velocity(&s.wind_fuel(), &params()).unwrap();
        let front = FireFront {
            id: 0,
            position: s.fire_position(),
            velocity,
            born_at: 0,
        };
        let mut rng = substream(0, &[]);
        let moved = propagate_front(&front, &s.wind_fuel(), &params(), 0.5, 0.0, &mut rng).unwrap();
        let next = state_transition(&s, 0.5, &params()).unwrap();
        assert!((next.fire_position() - moved.position).norm() < 1e-12);
    }

    #[test]
    fn transition_jacobian_matches_central_differences() {
        let mut rng = substream(2024, &[]);
        let h = 1e-6;
        for _ in 0..100 {
            let s = random_state(&mut rng);
            let control = s.uav_pose();
            let f = transition_jacobian(&s, 1.0, &params()).unwrap();
            for j in 0..STATE_DIM {
                let mut plus = s.to_vector();
                let mut minus = s.to_vector();
                plus[j] += h;
                minus[j] -= h;
                let fp = transition_with_control(&FullState::from_vector(&plus), &control, 1.0, &params())
                    .unwrap()
                    .to_vector();
                let fm = transition_with_control(&FullState::from_vector(&minus), &control, 1.0, &params())
                    .unwrap()
                    .to_vector();
                let column = (fp - fm) / (2.0 * h);
                for i in 0..STATE_DIM {
                    let e = rel_err(f[(i, j)], column[i]);
                    assert!(
                        e < 1e-4,
                        "F[{i},{j}] analytic {} numeric {} at {s:?}",
                        f[(i, j)],
                        column[i]
                    );
                }
            }
        }
    }

    #[test]
    fn azimuth_derivative_at_north() {
        let s = FullState {
            qx: 0.0,
            qy: 0.0,
            px: 0.0,
            py: 0.0,
            pz: 30.0,
            spread_rate: 2.0,
            wind_speed: 5.0,
            azimuth: 0.0,
        };
        let c = fire::spread_coefficient(2.0, 5.0, &params()).unwrap();
        let f = transition_jacobian(&s, 0.7, &params()).unwrap();
        assert!((f[(idx::QX, idx::THETA)] - c * 0.7).abs() < 1e-15);
    }

    #[test]
    fn zero_step_jacobian_is_identity_off_the_pose_block() {
        let mut rng = substream(5, &[]);
        let s = random_state(&mut rng);
        let f = transition_jacobian(&s, 0.0, &params()).unwrap();
        let keep = [idx::QX, idx::QY, idx::R, idx::U, idx::THETA];
        for &i in &keep {
            for &j in &keep {
                assert_eq!(f[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
        for i in [idx::PX, idx::PY, idx::PZ] {
            assert!(f.row(i).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn look_angles() {
        let mut s = FullState {
            qx: 5.0,
            qy: -3.0,
            px: 5.0,
            py: -3.0,
            pz: 20.0,
            spread_rate: 1.0,
            wind_speed: 2.0,
            azimuth: 0.3,
        };
        let z = observe(&s).unwrap();
        assert_eq!((z.phi_x, z.phi_y), (0.0, 0.0));
        assert_eq!((z.spread_rate, z.wind_speed, z.azimuth), (1.0, 2.0, 0.3));
        s.qx = s.px + s.pz;
        assert!((observe(&s).unwrap().phi_x - FRAC_PI_4).abs() < 1e-15);
        s.pz = 0.0;
        assert!(matches!(observe(&s), Err(Error::Domain(_))));
        assert!(observation_jacobian(&s).is_err());
    }

    #[test]
    fn look_angles_invert_to_ground_point() {
        let mut rng = substream(77, &[]);
        for _ in 0..100 {
            let mut s = random_state(&mut rng);
            // keep the fire inside a plausible field of view
            s.qx = s.px + rng.random_range(-2.0..2.0) * s.pz;
            s.qy = s.py + rng.random_range(-2.0..2.0) * s.pz;
            let z = observe(&s).unwrap();
            let q = z.ground_point(&s.uav_pose());
            assert!((q - s.fire_position()).norm() < 1e-12 * s.pz.max(1.0) * 10.0);
        }
    }

    #[test]
    fn observation_jacobian_matches_central_differences() {
        let mut rng = substream(99, &[]);
        let h = 1e-6;
        for _ in 0..100 {
            let s = random_state(&mut rng);
            let jac = observation_jacobian(&s).unwrap();
            for j in 0..STATE_DIM {
                let mut plus = s.to_vector();
                let mut minus = s.to_vector();
                plus[j] += h;
                minus[j] -= h;
                let zp = observe(&FullState::from_vector(&plus)).unwrap().to_vector();
                let zm = observe(&FullState::from_vector(&minus)).unwrap().to_vector();
                let column = (zp - zm) / (2.0 * h);
                for i in 0..OBS_DIM {
                    assert!(rel_err(jac[(i, j)], column[i]) < 1e-4, "H[{i},{j}]");
                }
            }
        }
    }

    #[test]
    fn observation_jacobian_structure() {
        let mut rng = substream(3, &[]);
        let mut s = random_state(&mut rng);
        let h = observation_jacobian(&s).unwrap();
        assert_eq!(h[(0, idx::PX)] + h[(0, idx::QX)], 0.0);
        assert_eq!(h[(1, idx::PY)] + h[(1, idx::QY)], 0.0);
        s.qx = s.px;
        let h = observation_jacobian(&s).unwrap();
        assert!((h[(0, idx::QX)] - 1.0 / s.pz).abs() < 1e-15);
        assert_eq!(h[(0, idx::PZ)], 0.0);
    }

    fn config() -> FilterConfig {
        FilterConfig::default()
    }

    fn sample_track() -> TrackEstimate {
        let mean = FullState {
            qx: 10.0,
            qy: 20.0,
            px: 12.0,
            py: 15.0,
            pz: 50.0,
            spread_rate: 1.0,
            wind_speed: 5.0,
            azimuth: 0.8,
        };
        TrackEstimate::new(mean, &config())
    }

    #[test]
    fn predict_with_zero_noise_and_zero_step_keeps_covariance() {
        let filter = Aekf::new(config(), params());
        let mut track = sample_track();
        track.process_cov = StateMatrix::zeros();
        // pose block carries no uncertainty, so zero pose rows change nothing
        for i in [idx::PX, idx::PY, idx::PZ] {
            track.cov[(i, i)] = 0.0;
        }
        let next = filter.predict(&track, 0.0, None).unwrap();
        assert!((next.cov - track.cov).abs().max() < 1e-15);
        assert_eq!(next.mean, track.mean);
    }

    #[test]
    fn scalar_covariance_propagation() {
        let p = propagate_covariance(&Matrix1::new(2.0), &Matrix1::new(1.0), &Matrix1::new(1.0));
        assert_eq!(p[(0, 0)], 5.0);
    }

    #[test]
    fn orthogonal_transition_never_shrinks_trace() {
        let mut rng = substream(8, &[]);
        for _ in 0..50 {
            let a = SMatrix::<f64, 8, 8>::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let orth = a.qr().q();
            let b = SMatrix::<f64, 8, 8>::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let p = b * b.transpose();
            let c = SMatrix::<f64, 8, 8>::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let q = c * c.transpose() * 0.1;
            let next = propagate_covariance(&orth, &p, &q);
            assert!(next.trace() >= p.trace() - 1e-9);
        }
    }

    #[test]
    fn predict_control_sets_pose_and_pose_variance() {
        let filter = Aekf::new(config(), params());
        let track = sample_track();
        let pose = Vector3::new(1.0, 2.0, 60.0);
        let next = filter.predict(&track, 1.0, Some(pose)).unwrap();
        assert_eq!(next.mean.uav_pose(), pose);
        for i in [idx::PX, idx::PY, idx::PZ] {
            assert!((next.cov[(i, i)] - track.process_cov[(i, i)]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_observation_leaves_mean_unchanged() {
        let filter = Aekf::new(config(), params());
        let track = filter.predict(&sample_track(), 1.0, None).unwrap();
        let z = observe(&track.mean).unwrap();
        let (post, outcome) = filter.update(&track, &z).unwrap();
        assert_eq!(outcome.innovation, ObsVector::zeros());
        assert!((post.mean.to_vector() - track.mean.to_vector()).abs().max() < 1e-12);
    }

    #[test]
    fn scalar_kalman_update() {
        let p = Matrix1::new(1.0);
        let h = Matrix1::new(1.0);
        let s = h * p * h.transpose() + Matrix1::new(1.0);
        let k = kalman_gain(&p, &h, &s).unwrap();
        assert!((k[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((posterior_covariance(&k, &h, &p)[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_residual_is_reported() {
        let p = SMatrix::<f64, 2, 2>::identity();
        let h = SMatrix::<f64, 2, 2>::new(1.0, 0.0, 1.0, 0.0);
        let s = h * p * h.transpose();
        assert!(matches!(
            kalman_gain(&p, &h, &s),
            Err(Error::SingularResidual { .. })
        ));
    }

    #[test]
    fn update_shrinks_covariance_in_loewner_order() {
        let filter = Aekf::new(config(), params());
        let mut rng = substream(12, &[]);
        for _ in 0..50 {
            let mut track = sample_track();
            let b = StateMatrix::from_fn(|_, _| rng.random_range(-1.0..1.0));
            track.cov = b * b.transpose() + StateMatrix::identity() * 0.1;
            let mut z = observe(&track.mean).unwrap();
            z.phi_x += rng.random_range(-0.01..0.01);
            z.wind_speed += rng.random_range(-0.3..0.3);
            let (post, _) = filter.update(&track, &z).unwrap();
            let diff = symmetrize_psd(&(track.cov - post.cov));
            let eig = SymmetricEigen::new((track.cov - post.cov + (track.cov - post.cov).transpose()) * 0.5);
            assert!(eig.eigenvalues.min() >= -1e-9, "{:?}", eig.eigenvalues);
            assert!(diff.trace() >= 0.0);
        }
    }

    #[test]
    fn one_step_residual_equals_current() {
        let filter = Aekf::new(config(), params());
        let track = filter.predict(&sample_track(), 1.0, None).unwrap();
        let (state, s) = multi_step_predict(&track, 1).unwrap();
        assert_eq!(state, track.mean.to_vector());
        assert!((s - track.current_residual_cov().unwrap()).abs().max() < 1e-15);
    }

    #[test]
    fn scalar_multi_step_residuals() {
        let one = Matrix1::new(1.0);
        for r in 1..6 {
            let s = multi_step_residual(&one, &one, &Matrix1::new(0.7), &Matrix1::new(0.2), r);
            assert!((s[(0, 0)] - 0.9).abs() < 1e-15);
        }
        let s = multi_step_residual(&Matrix1::new(2.0), &one, &one, &one, 3);
        assert_eq!(s[(0, 0)], 17.0);
    }

    #[test]
    fn matrix_power_matches_iteration() {
        let filter = Aekf::new(config(), params());
        let track = filter.predict(&sample_track(), 1.0, None).unwrap();
        for r in [1u64, 2, 5, 17, 64] {
            let (state, _) = multi_step_predict(&track, r).unwrap();
            let mut iterated = track.mean.to_vector();
            for _ in 0..r - 1 {
                iterated = track.transition * iterated;
            }
            let scale = iterated.abs().max().max(1.0);
            assert!((state - iterated).abs().max() / scale < 1e-10);
        }
    }

    #[test]
    fn forgetting_factor_extremes() {
        let filter = Aekf::new(config(), params());
        let track = filter.predict(&sample_track(), 1.0, None).unwrap();
        let mut z = observe(&track.mean).unwrap();
        z.phi_x += 0.01;
        z.wind_speed -= 0.2;
        let (post, outcome) = filter.update(&track, &z).unwrap();

        let keep = Aekf::new(
            FilterConfig {
                alpha_forget: 1.0,
                ..config()
            },
            params(),
        );
        let adapted = keep.adapt_noise(&post, &z, &outcome).unwrap();
        assert_eq!(adapted.process_cov, post.process_cov);
        assert_eq!(adapted.observation_cov, post.observation_cov);

        let forget = Aekf::new(
            FilterConfig {
                alpha_forget: 0.0,
                ..config()
            },
            params(),
        );
        let adapted = forget.adapt_noise(&post, &z, &outcome).unwrap();
        let d = residual(&z, &observe(&post.mean).unwrap());
        let kd = outcome.gain * d;
        assert!((adapted.process_cov - kd * kd.transpose()).abs().max() < 1e-15);
    }

    #[test]
    fn covariances_stay_symmetric_psd() {
        let filter = Aekf::new(config(), params());
        let mut track = sample_track();
        let mut rng = substream(31, &[]);
        for step in 1..200 {
            track = filter.predict(&track, 1.0, None).unwrap();
            if step % 3 != 0 {
                let mut z = observe(&track.mean).unwrap();
                z.phi_x += rng.random_range(-0.005..0.005);
                z.phi_y += rng.random_range(-0.005..0.005);
                track = filter.correct(&track, &z, step).unwrap().0;
            }
            for m in [track.cov, track.process_cov] {
                assert_eq!(m, m.transpose());
                assert!(SymmetricEigen::new(m).eigenvalues.min() >= -1e-9);
            }
            assert_eq!(track.observation_cov, track.observation_cov.transpose());
        }
    }
}
