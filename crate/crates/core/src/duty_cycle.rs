//! Wake/sleep duty cycling: the activation random walk, the two-state
//! sleep/wake chain and the layer timing formulas.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationMode {
    /// Deterministic `+1, -1, +1, ...` increments: every node toggles each step.
    #[default]
    Alternating,
    /// Sleeping nodes wake with probability `p`, awake nodes sleep with probability `q`.
    Stochastic,
}

impl fmt::Display for ActivationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationMode::Alternating => "alternating",
            ActivationMode::Stochastic => "stochastic",
        })
    }
}

impl FromStr for ActivationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alternating" => Ok(ActivationMode::Alternating),
            "stochastic" => Ok(ActivationMode::Stochastic),
            _ => Err(Error::InvalidParameter(format!("unknown activation mode `{s}`"))),
        }
    }
}

/// Timing constants and transition probabilities of the duty cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyCycleParams<T> {
    /// Mean one-hop delay.
    pub d_mean: T,
    /// One-hop delay variance.
    pub d_var: T,
    /// Time to receive neighbor states and compute the average.
    pub t_c: T,
    /// Sleep → wake probability.
    pub p: T,
    /// Wake → sleep probability.
    pub q: T,
    pub mode: ActivationMode,
}

impl<T: Real> Default for DutyCycleParams<T> {
    fn default() -> Self {
        DutyCycleParams {
            d_mean: T::zero(),
            d_var: T::zero(),
            t_c: T::one(),
            p: T::one(),
            q: T::one(),
            mode: ActivationMode::Alternating,
        }
    }
}

impl<T: Real> DutyCycleParams<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !unit(self.p) || !unit(self.q) {
            return Err(Error::InvalidParameter(format!(
                "transition probabilities p={} q={} must lie in [0, 1]",
                self.p, self.q
            )));
        }
        if self.mode == ActivationMode::Stochastic && self.p + self.q <= T::zero() {
            return Err(Error::InvalidParameter("stochastic mode needs p + q > 0".into()));
        }
        if !(self.t_c > T::zero()) {
            return Err(Error::InvalidParameter(format!("t_c must be positive, got {}", self.t_c)));
        }
        if !(self.d_var >= T::zero()) || !(self.d_mean >= T::zero()) {
            return Err(Error::InvalidParameter("delay mean and variance must be non-negative".into()));
        }
        Ok(())
    }

    /// Checks `p · t_W = t_C · q` within 1e-9 for a given sleep duration.
    pub fn check_balance(&self, t_w: T) -> Result<()> {
        let gap = (self.p * t_w - self.t_c * self.q).abs();
        if gap.as_f64() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "balance p*t_W = t_C*q violated by {gap} (p={}, q={}, t_W={t_w}, t_C={})",
                self.p, self.q, self.t_c
            )));
        }
        Ok(())
    }

    /// Wake → sleep probability that balances `p` for sleep duration `t_w`.
    pub fn balanced_q(&self, t_w: T) -> T {
        self.p * t_w / self.t_c
    }

    /// Samples a one-hop delay from `Normal(d_mean, d_var)` truncated at zero.
    pub fn sample_hop_delay<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let sd = self.d_var.as_f64().sqrt();
        if sd == 0.0 {
            return self.d_mean;
        }
        let normal = Normal::new(self.d_mean.as_f64(), sd).expect("finite standard deviation");
        T::of(normal.sample(rng).max(0.0))
    }
}

/// Sleep duration of a layer-`m` node after it updates: `(L - m)(d + t_C)`.
pub fn wake_time<T: Real>(m: usize, layer_count: usize, d: T, t_c: T) -> Result<T> {
    if m == 0 || m > layer_count {
        return Err(Error::InvalidParameter(format!("layer {m} outside 1..={layer_count}")));
    }
    Ok(T::of_usize(layer_count - m) * (d + t_c))
}

/// Beacon period `L (d + t_C) σ²_d`, exactly as tabulated.
///
/// Zero variance gives a zero period, so schedulers should use
/// [`effective_beacon_period`].
pub fn beacon_period<T: Real>(layer_count: usize, d: T, t_c: T, d_var: T) -> T {
    T::of_usize(layer_count) * (d + t_c) * d_var
}

/// Beacon period never shorter than one full layer sweep `L (d + t_C)`.
pub fn effective_beacon_period<T: Real>(layer_count: usize, d: T, t_c: T, d_var: T) -> T {
    let literal = beacon_period(layer_count, d, t_c, d_var);
    let sweep = T::of_usize(layer_count) * (d + t_c);
    if literal < sweep {
        sweep
    } else {
        literal
    }
}

/// Long-run fraction of time a node is awake: `p / (p + q)`.
pub fn stationary_active_fraction<T: Real>(params: &DutyCycleParams<T>) -> Result<T> {
    let total = params.p + params.q;
    if !(total > T::zero()) {
        return Err(Error::InvalidParameter("p = q = 0 has no stationary behavior".into()));
    }
    Ok(params.p / total)
}

/// Activation bits `φ_i(k)` plus the per-node step counter driving the
/// alternating increments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationState {
    phi: Vec<bool>,
    step_parity: Vec<u64>,
}

impl ActivationState {
    pub fn asleep(n: usize) -> Self {
        ActivationState { phi: vec![false; n], step_parity: vec![0; n] }
    }

    pub fn from_bits(phi: Vec<bool>) -> Self {
        let n = phi.len();
        ActivationState { phi, step_parity: vec![0; n] }
    }

    pub fn phi(&self) -> &[bool] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.phi.iter().filter(|&&b| b).count()
    }
}

/// Advances every node's activation bit by one step.
///
/// Stochastic mode draws one uniform per node per step regardless of the
/// node's state so that the random stream does not depend on the outcome.
pub fn step_activation<T: Real, R: Rng + ?Sized>(
    state: &ActivationState,
    params: &DutyCycleParams<T>,
    rng: &mut R,
) -> ActivationState {
    let mut next = state.clone();
    match params.mode {
        ActivationMode::Alternating => {
            for (phi, parity) in next.phi.iter_mut().zip(next.step_parity.iter_mut()) {
                // z = +1 from 0, -1 from 1: the walk never leaves {0, 1}
                *phi = !*phi;
                *parity += 1;
            }
        }
        ActivationMode::Stochastic => {
            let (p, q) = (params.p.as_f64(), params.q.as_f64());
            for (phi, parity) in next.phi.iter_mut().zip(next.step_parity.iter_mut()) {
                let u: f64 = rng.random();
                *phi = if *phi { u >= q } else { u < p };
                *parity += 1;
            }
        }
    }
    next
}

/// Increments `Z_k = φ(k) - φ(k-1)`, each in `{-1, 0, 1}`.
pub fn increments(prev: &[bool], next: &[bool]) -> Vec<i8> {
    prev.iter().zip(next).map(|(&a, &b)| i8::from(b) - i8::from(a)).collect()
}

/// `k` successive activation vectors starting from an all-asleep network.
pub fn activation_sequence<T: Real, R: Rng + ?Sized>(
    params: &DutyCycleParams<T>,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Vec<Vec<bool>> {
    let mut state = ActivationState::asleep(n);
    (0..k)
        .map(|_| {
            state = step_activation(&state, params, rng);
            state.phi.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stochastic(p: f64, q: f64) -> DutyCycleParams<f64> {
        DutyCycleParams { p, q, mode: ActivationMode::Stochastic, ..Default::default() }
    }

    #[test]
    fn wake_times() {
        assert_eq!(wake_time(4, 4, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(wake_time(2, 4, 1.0, 2.0).unwrap(), 6.0);
        assert_eq!(wake_time(1, 3, 0.5, 1.5).unwrap(), 4.0);
        assert!(wake_time(0, 3, 0.5, 1.5).is_err());
        assert!(wake_time(4, 3, 0.5_f32, 1.5).is_err());
    }

    #[test]
    fn beacon_periods() {
        assert_eq!(beacon_period(4, 1.0, 2.0, 1.0), 12.0);
        assert_eq!(beacon_period(1, 0.0, 1.0, 1.0), 1.0);
        assert_eq!(beacon_period(3, 1.0, 1.0, 0.0), 0.0);
        assert_eq!(effective_beacon_period(3, 1.0, 1.0, 0.0), 6.0);
        assert_eq!(effective_beacon_period(4, 1.0, 2.0, 2.0), 24.0);
    }

    #[test]
    fn alternating_toggles_with_period_two() {
        let params = DutyCycleParams::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s0 = ActivationState::asleep(2);
        let s1 = step_activation(&s0, &params, &mut rng);
        let s2 = step_activation(&s1, &params, &mut rng);
        assert_eq!(s1.phi(), &[true, true]);
        assert_eq!(s2.phi(), &[false, false]);
        assert_eq!(increments(s0.phi(), s1.phi()), vec![1, 1]);
        assert_eq!(increments(s1.phi(), s2.phi()), vec![-1, -1]);
    }

    #[test]
    fn frozen_chain_never_moves() {
        let params = DutyCycleParams { mode: ActivationMode::Stochastic, p: 0.0, q: 0.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = ActivationState::from_bits(vec![true, false, true]);
        for _ in 0..1000 {
            s = step_activation(&s, &params, &mut rng);
        }
        assert_eq!(s.phi(), &[true, false, true]);
    }

    #[test]
    fn stationary_fractions() {
        assert_eq!(stationary_active_fraction(&stochastic(0.5, 0.5)).unwrap(), 0.5);
        assert!((stationary_active_fraction(&stochastic(0.2, 0.1)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(stationary_active_fraction(&stochastic(1.0, 1.0)).unwrap(), 0.5);
        assert!(stationary_active_fraction(&stochastic(0.0, 0.0)).is_err());
    }

    #[test]
    fn validation() {
        assert!(stochastic(0.2, 0.1).validate().is_ok());
        assert!(stochastic(0.0, 0.0).validate().is_err());
        assert!(stochastic(1.2, 0.1).validate().is_err());
        let bad_tc = DutyCycleParams { t_c: 0.0, ..DutyCycleParams::<f64>::default() };
        assert!(bad_tc.validate().is_err());
    }

    #[test]
    fn balance_relation() {
        let mut params = stochastic(0.2, 0.0);
        params.t_c = 2.0;
        let t_w = wake_time(1, 3, 1.0, 2.0).unwrap();
        params.q = params.balanced_q(t_w);
        assert!(params.check_balance(t_w).is_ok());
        params.q += 0.01;
        assert!(params.check_balance(t_w).is_err());
    }

    #[test]
    fn hop_delay_is_never_negative() {
        let params = DutyCycleParams { d_mean: 0.0, d_var: 4.0, ..DutyCycleParams::<f64>::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!((0..1000).all(|_| params.sample_hop_delay(&mut rng) >= 0.0));
        let fixed = DutyCycleParams { d_mean: 0.25, ..DutyCycleParams::<f64>::default() };
        assert_eq!(fixed.sample_hop_delay(&mut rng), 0.25);
    }
}
