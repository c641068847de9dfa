//! Gas states, thermodynamics and the eigenstructure of the steady Euler system.

use num_traits::Float;

use crate::{Error, Result};

/// Polytropic gas constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GasParams {
    pub gamma: f64,
    pub kappa: f64,
    pub c_v: f64,
}

impl GasParams {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma > 1.0, "gamma must exceed 1");
        Self { gamma, kappa: 1.0, c_v: 1.0 }
    }
}

impl Default for GasParams {
    fn default() -> Self {
        Self::new(1.4)
    }
}

/// Primitive state `(u, v, p, rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GasState {
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub rho: f64,
}

impl GasState {
    pub const fn new(u: f64, v: f64, p: f64, rho: f64) -> Self {
        Self { u, v, p, rho }
    }

    /// Gas at rest.
    pub const fn at_rest(p: f64, rho: f64) -> Self {
        Self::new(0.0, 0.0, p, rho)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.u, self.v, self.p, self.rho]
    }

    pub fn is_valid(&self) -> bool {
        self.p > 0.0 && self.rho > 0.0 && self.u.is_finite() && self.v.is_finite()
    }

    pub fn sound_speed_sq(&self, g: &GasParams) -> f64 {
        g.gamma * self.p / self.rho
    }

    pub fn sound_speed(&self, g: &GasParams) -> f64 {
        self.sound_speed_sq(g).sqrt()
    }

    /// Flow speed `q`.
    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v)
    }

    /// Flow angle `theta = atan(v/u)`.
    pub fn flow_angle(&self) -> f64 {
        self.v.atan2(self.u)
    }

    /// Bernoulli quantity `B = q^2 + 2c^2/(gamma-1)`.
    pub fn bernoulli(&self, g: &GasParams) -> f64 {
        self.u * self.u + self.v * self.v + 2.0 * self.sound_speed_sq(g) / (g.gamma - 1.0)
    }

    /// Entropy function `A = p rho^-gamma`.
    pub fn entropy(&self, g: &GasParams) -> f64 {
        self.p * self.rho.powf(-g.gamma)
    }

    /// Physical specific entropy `c_v ln(A/kappa)`.
    pub fn physical_entropy(&self, g: &GasParams) -> f64 {
        g.c_v * (self.entropy(g) / g.kappa).ln()
    }

    pub fn mach(&self, g: &GasParams) -> f64 {
        self.speed() / self.sound_speed(g)
    }

    /// Streamwise Mach number `u/c`.
    pub fn mach1(&self, g: &GasParams) -> f64 {
        self.u / self.sound_speed(g)
    }

    pub fn mach_angle(&self, g: &GasParams) -> f64 {
        (self.sound_speed(g) / self.speed()).asin()
    }

    /// Total energy per unit mass.
    pub fn total_energy(&self, g: &GasParams) -> f64 {
        0.5 * (self.u * self.u + self.v * self.v) + self.p / ((g.gamma - 1.0) * self.rho)
    }

    /// Flux differentiated in `x`.
    pub fn flux_w(&self, g: &GasParams) -> [f64; 4] {
        let m = self.rho * self.u;
        let h = self.total_energy(g) + self.p / self.rho;
        [m, m * self.u + self.p, m * self.v, m * h]
    }

    /// Flux differentiated in `y`.
    pub fn flux_h(&self, g: &GasParams) -> [f64; 4] {
        let m = self.rho * self.v;
        let h = self.total_energy(g) + self.p / self.rho;
        [m, m * self.u, m * self.v + self.p, m * h]
    }

    /// `u > c > 0`, the condition for the system to be hyperbolic in `x`.
    pub fn is_supersonic(&self, g: &GasParams) -> bool {
        self.is_valid() && self.u > self.sound_speed(g)
    }

    pub fn distance(&self, other: &GasState) -> f64 {
        let d = [
            self.u - other.u,
            self.v - other.v,
            self.p - other.p,
            self.rho - other.rho,
        ];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]).sqrt()
    }

    pub(crate) fn require_supersonic(&self, g: &GasParams) -> Result<()> {
        if self.is_supersonic(g) {
            Ok(())
        } else {
            Err(Error::SubsonicState { u: self.u, c: self.sound_speed(g) })
        }
    }
}

pub fn sonic_speed(u: &GasState, g: &GasParams) -> f64 {
    u.sound_speed(g)
}

/// The two genuinely nonlinear families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Nonlinear {
    First,
    Third,
}

impl Nonlinear {
    /// `-1` for the first family, `+1` for the third.
    pub fn sign(self) -> f64 {
        match self {
            Nonlinear::First => -1.0,
            Nonlinear::Third => 1.0,
        }
    }
}

/// Characteristic slopes `(lambda1, lambda2, lambda3)`.
pub fn eigenvalues(u: &GasState, g: &GasParams) -> Result<[f64; 3]> {
    u.require_supersonic(g)?;
    let c2 = u.sound_speed_sq(g);
    let c = c2.sqrt();
    let q2 = u.u * u.u + u.v * u.v;
    let root = (q2 - c2).sqrt();
    let den = u.u * u.u - c2;
    Ok([
        (u.u * u.v - c * root) / den,
        u.v / u.u,
        (u.u * u.v + c * root) / den,
    ])
}

pub fn lambda(u: &GasState, family: Nonlinear, g: &GasParams) -> Result<f64> {
    let l = eigenvalues(u, g)?;
    Ok(match family {
        Nonlinear::First => l[0],
        Nonlinear::Third => l[2],
    })
}

/// Slopes and normalized right eigenvectors at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenStructure {
    pub lambda: [f64; 3],
    pub r1: [f64; 4],
    pub r3: [f64; 4],
    pub r21: [f64; 4],
    pub r22: [f64; 4],
    pub k1: f64,
    pub k3: f64,
}

impl EigenStructure {
    pub fn r(&self, family: Nonlinear) -> [f64; 4] {
        match family {
            Nonlinear::First => self.r1,
            Nonlinear::Third => self.r3,
        }
    }
}

pub fn eigenvectors(u: &GasState, g: &GasParams) -> Result<EigenStructure> {
    let lambda = eigenvalues(u, g)?;
    let c2 = u.sound_speed_sq(g);
    let c = c2.sqrt();
    let q2 = u.u * u.u + u.v * u.v;
    let root = (q2 - c2).sqrt();
    let cos_minus = (u.v * c + u.u * root) / q2;
    let cos_plus = (u.u * root - u.v * c) / q2;
    let k1 = 2.0 * root * cos_minus.powi(3) / (g.gamma + 1.0);
    let k3 = 2.0 * root * cos_plus.powi(3) / (g.gamma + 1.0);
    let r = |l: f64, k: f64| {
        let m = u.rho * (l * u.u - u.v);
        [-k * l, k, k * m, k * m / c2]
    };
    Ok(EigenStructure {
        lambda,
        r1: r(lambda[0], k1),
        r3: r(lambda[2], k3),
        r21: [u.u, u.v, 0.0, 0.0],
        r22: [0.0, 0.0, 0.0, u.rho],
        k1,
        k3,
    })
}

/// Sonic speed for Bernoulli constant `b`, the lower limit of [`pm_integral`].
pub fn sonic_limit(b: f64, gamma: f64) -> f64 {
    ((gamma - 1.0) * b / (gamma + 1.0)).sqrt()
}

/// Prandtl-Meyer type integral `I(q, B)`, zero at the sonic speed.
pub fn pm_integral(q: f64, b: f64, gamma: f64) -> Result<f64> {
    let lo = sonic_limit(b, gamma);
    let hi = b.sqrt();
    if !(q >= lo * (1.0 - 1e-13)) || !(q < hi) {
        return Err(Error::OutOfRange { q, lo, hi });
    }
    let num = ((gamma + 1.0) * q * q - (gamma - 1.0) * b).max(0.0);
    let s = (num / ((gamma - 1.0) * (b - q * q))).sqrt();
    let r = ((gamma + 1.0) / (gamma - 1.0)).sqrt();
    Ok(r * (s / r).atan() - s.atan())
}

/// `(I + theta, B, A)`, constant along 3-rarefaction curves.
pub fn riemann_invariants(u: &GasState, g: &GasParams) -> Result<[f64; 3]> {
    let b = u.bernoulli(g);
    let i = pm_integral(u.speed(), b, g.gamma)?;
    Ok([i + u.flow_angle(), b, u.entropy(g)])
}

/// Invariants of the given family: `(I -+ theta, B, A)`.
pub fn family_invariants(u: &GasState, family: Nonlinear, g: &GasParams) -> Result<[f64; 3]> {
    let b = u.bernoulli(g);
    let i = pm_integral(u.speed(), b, g.gamma)?;
    Ok([i + family.sign() * u.flow_angle(), b, u.entropy(g)])
}

/// Rebuilds the state with invariants `(j, b, a)` of `family` at pressure `p`.
pub fn state_from_invariants(
    family: Nonlinear,
    inv: [f64; 3],
    p: f64,
    g: &GasParams,
) -> Result<GasState> {
    let [j, b, a] = inv;
    let rho = (p / a).powf(1.0 / g.gamma);
    let c2 = g.gamma * p / rho;
    let q2 = b - 2.0 * c2 / (g.gamma - 1.0);
    if !(q2 > 0.0) {
        return Err(Error::OutOfRange { q: 0.0, lo: sonic_limit(b, g.gamma), hi: b.sqrt() });
    }
    let q = q2.sqrt();
    let i = pm_integral(q, b, g.gamma)?;
    let theta = family.sign() * (j - i);
    Ok(GasState::new(q * theta.cos(), q * theta.sin(), p, rho))
}

/// Membership in the neighbourhood `D(U+, delta0)` of the 3-rarefaction curve through `U+`.
pub fn in_invariant_region(
    u: &GasState,
    u_plus: &GasState,
    delta0: f64,
    p_bar: f64,
    g: &GasParams,
) -> bool {
    match riemann_invariant_deviation(u, u_plus, g) {
        Ok(d) => {
            d.iter().all(|x| x.abs() < delta0)
                && p_bar - delta0 < u.p
                && u.p < u_plus.p + delta0
        }
        Err(_) => false,
    }
}

/// Differences of `(I + theta, B, A)` between `u` and `u_ref`.
pub fn riemann_invariant_deviation(
    u: &GasState,
    u_ref: &GasState,
    g: &GasParams,
) -> Result<[f64; 3]> {
    let a = riemann_invariants(u, g)?;
    let b = riemann_invariants(u_ref, g)?;
    Ok([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}
