//! Problem instances, exact rate/power/EE evaluation and their gradients.
//!
//! Gradients are taken with respect to the Hermitian block `Q_k` and satisfy
//! `df = inner(G, dQ)` for Hermitian perturbations `dQ`.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, cplx, herm, re_inner, CMat};
use crate::scalar::Real;

/// Rate-dependent processing power `g_k(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatePowerModel<T> {
    Zero,
    Linear { q: T },
    /// `q·r^exponent`, with `exponent ≥ 1` so that `g` is differentiable at 0.
    PowerLaw { q: T, exponent: T },
}

impl<T: Real> RatePowerModel<T> {
    pub fn eval(&self, r: T) -> T {
        match *self {
            RatePowerModel::Zero => T::zero(),
            RatePowerModel::Linear { q } => q * r,
            RatePowerModel::PowerLaw { q, exponent } => q * r.max(T::zero()).powf(exponent),
        }
    }

    pub fn deriv(&self, r: T) -> T {
        match *self {
            RatePowerModel::Zero => T::zero(),
            RatePowerModel::Linear { q } => q,
            RatePowerModel::PowerLaw { q, exponent } => {
                if exponent == T::one() {
                    q
                } else {
                    q * exponent * r.max(T::zero()).powf(exponent - T::one())
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            RatePowerModel::Zero => true,
            RatePowerModel::Linear { q } | RatePowerModel::PowerLaw { q, .. } => q == T::zero(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RatePowerModel::Zero => Ok(()),
            RatePowerModel::Linear { q } if q >= T::zero() => Ok(()),
            RatePowerModel::PowerLaw { q, exponent } if q >= T::zero() && exponent >= T::one() => Ok(()),
            _ => Err(Error::Config("rate-power model needs q >= 0 and exponent >= 1".into())),
        }
    }
}

/// Per-link parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Link<T> {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub sigma2: T,
    pub p_max: T,
    pub p0: T,
    pub rho: T,
    pub g: RatePowerModel<T>,
    /// Minimum rate in nats per channel use.
    pub r_min: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    links: Vec<Link<T>>,
    /// `h[k][j]` maps transmitter `j` to receiver `k` (`N_k × M_j`).
    h: Vec<Vec<CMat<T>>>,
}

impl<T: Real> Scenario<T> {
    pub fn new(links: Vec<Link<T>>, h: Vec<Vec<CMat<T>>>) -> Result<Self> {
        let k = links.len();
        if k == 0 {
            return Err(Error::Config("scenario needs at least one link".into()));
        }
        for (i, l) in links.iter().enumerate() {
            if l.tx_antennas == 0 || l.rx_antennas == 0 {
                return Err(Error::Config(format!("link {i}: antenna counts must be positive")));
            }
            if !(l.rho >= T::one() && l.p_max > T::zero() && l.p0 > T::zero() && l.sigma2 > T::zero()) {
                return Err(Error::Config(format!("link {i}: need rho >= 1 and positive P, P0, sigma2")));
            }
            if !(l.r_min >= T::zero()) {
                return Err(Error::Config(format!("link {i}: rate target must be nonnegative")));
            }
            l.g.validate()?;
        }
        if h.len() != k || h.iter().any(|row| row.len() != k) {
            return Err(Error::Shape(format!("channel table must be {k}x{k}")));
        }
        for (r, row) in h.iter().enumerate() {
            for (t, m) in row.iter().enumerate() {
                if m.shape() != (links[r].rx_antennas, links[t].tx_antennas) {
                    return Err(Error::Shape(format!("H[{r}][{t}] has shape {:?}", m.shape())));
                }
            }
        }
        Ok(Scenario { links, h })
    }

    #[inline]
    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    #[inline]
    pub fn link(&self, k: usize) -> &Link<T> {
        &self.links[k]
    }

    pub fn links(&self) -> &[Link<T>] {
        &self.links
    }

    #[inline]
    pub fn channel(&self, rx: usize, tx: usize) -> &CMat<T> {
        &self.h[rx][tx]
    }

    pub fn with_rate_targets(mut self, targets: &[T]) -> Result<Self> {
        if targets.len() != self.links.len() {
            return Err(Error::Shape(format!("{} rate targets for {} links", targets.len(), self.links.len())));
        }
        for (l, &r) in self.links.iter_mut().zip(targets) {
            if !(r >= T::zero()) {
                return Err(Error::Config("rate target must be nonnegative".into()));
            }
            l.r_min = r;
        }
        Ok(self)
    }

    pub fn has_rate_power(&self) -> bool {
        self.links.iter().any(|l| !l.g.is_zero())
    }

    pub fn has_qos(&self) -> bool {
        self.links.iter().any(|l| l.r_min > T::zero())
    }

    /// `Y_k(Q) = Σ_j H_kj Q_j H_kjᴴ`.
    pub fn aux_cov(&self, q: &Blocks<T>, k: usize) -> CMat<T> {
        let n = self.links[k].rx_antennas;
        let mut y = linalg::zeros(n, n);
        for j in 0..self.num_links() {
            y += sandwich(&self.h[k][j], &q[j]);
        }
        herm(&y)
    }

    pub fn aux_covs(&self, q: &Blocks<T>) -> Blocks<T> {
        Blocks((0..self.num_links()).map(|k| self.aux_cov(q, k)).collect())
    }
}

/// `H Q Hᴴ`.
#[inline]
pub fn sandwich<T: Real>(h: &CMat<T>, q: &CMat<T>) -> CMat<T> {
    h * q * h.adjoint()
}

/// `Hᴴ X H`, hermitianized.
#[inline]
pub fn back_sandwich<T: Real>(h: &CMat<T>, x: &CMat<T>) -> CMat<T> {
    herm(&(h.adjoint() * x * h))
}

/// One matrix per link, e.g. the covariances `Q_k` or the auxiliary `Y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks<T: Real>(pub Vec<CMat<T>>);

pub type CovarianceSet<T> = Blocks<T>;
pub type AuxCovariances<T> = Blocks<T>;

impl<T: Real> std::ops::Index<usize> for Blocks<T> {
    type Output = CMat<T>;
    fn index(&self, k: usize) -> &CMat<T> {
        &self.0[k]
    }
}

impl<T: Real> std::ops::IndexMut<usize> for Blocks<T> {
    fn index_mut(&mut self, k: usize) -> &mut CMat<T> {
        &mut self.0[k]
    }
}

impl<T: Real> Blocks<T> {
    pub fn zeros(sc: &Scenario<T>) -> Self {
        Blocks(sc.links.iter().map(|l| linalg::zeros(l.tx_antennas, l.tx_antennas)).collect())
    }

    /// `Q_k = (P_k / M_k) I`.
    pub fn uniform_full_power(sc: &Scenario<T>) -> Self {
        Blocks(
            sc.links
                .iter()
                .map(|l| linalg::scaled_eye(l.tx_antennas, l.p_max / T::from_usize(l.tx_antennas).unwrap()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CMat<T>> {
        self.0.iter()
    }

    /// `self + a·(other − self)`.
    pub fn lerp(&self, other: &Self, a: T) -> Self {
        Blocks(self.0.iter().zip(&other.0).map(|(x, y)| herm(&(x + (y - x) * cplx(a)))).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Blocks(self.0.iter().zip(&other.0).map(|(x, y)| x - y).collect())
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).fold(T::zero(), |acc, (x, y)| acc + re_inner(x, y))
    }

    pub fn norm(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, x| acc + linalg::fro_norm2(x)).sqrt()
    }

    pub fn dist(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).fold(T::zero(), |acc, (x, y)| acc + linalg::fro_norm2(&(x - y))).sqrt()
    }

    /// Checks PSD-ness and the trace budgets with relative slack `tol`.
    pub fn check_power_feasible(&self, sc: &Scenario<T>, tol: T) -> Result<()> {
        if self.0.len() != sc.num_links() {
            return Err(Error::Shape(format!("{} blocks for {} links", self.0.len(), sc.num_links())));
        }
        for (k, (q, l)) in self.0.iter().zip(&sc.links).enumerate() {
            if q.shape() != (l.tx_antennas, l.tx_antennas) {
                return Err(Error::Shape(format!("Q[{k}] has shape {:?}", q.shape())));
            }
            let scale = l.p_max.max(T::one());
            if linalg::lambda_min(q) < -tol * scale {
                return Err(Error::Precondition(format!("Q[{k}] is not positive semidefinite")));
            }
            if linalg::trace_re(q) > l.p_max * (T::one() + tol) {
                return Err(Error::Precondition(format!("Q[{k}] exceeds its power budget")));
            }
        }
        Ok(())
    }
}

/// Rates, powers and the inverses needed by every gradient, cached at one point `Q`.
#[derive(Debug, Clone)]
pub struct Evaluation<'a, T: Real> {
    pub sc: &'a Scenario<T>,
    pub q: Blocks<T>,
    /// Noise-plus-interference covariance `R_k`.
    pub r_cov: Vec<CMat<T>>,
    pub r_inv: Vec<CMat<T>>,
    /// `S_k = R_k + H_kk Q_k H_kkᴴ`.
    pub s_inv: Vec<CMat<T>>,
    pub logdet_r: Vec<T>,
    pub rates: Vec<T>,
    pub powers: Vec<T>,
}

impl<'a, T: Real> Evaluation<'a, T> {
    pub fn new(sc: &'a Scenario<T>, q: Blocks<T>) -> Result<Self> {
        let kk = sc.num_links();
        if q.len() != kk {
            return Err(Error::Shape(format!("{} blocks for {kk} links", q.len())));
        }
        let mut r_cov = Vec::with_capacity(kk);
        let mut r_inv = Vec::with_capacity(kk);
        let mut s_inv = Vec::with_capacity(kk);
        let mut logdet_r = Vec::with_capacity(kk);
        let mut rates = Vec::with_capacity(kk);
        let mut powers = Vec::with_capacity(kk);
        for k in 0..kk {
            let r = interference_cov_impl(sc, &q, k);
            let s = herm(&(&r + sandwich(&sc.h[k][k], &q[k])));
            let ldr = linalg::logdet_hpd(&r)?;
            let lds = linalg::logdet_hpd(&s)?;
            let rate = (lds - ldr).max(T::zero());
            let l = &sc.links[k];
            powers.push(l.p0 + l.rho * linalg::trace_re(&q[k]) + l.g.eval(rate));
            rates.push(rate);
            logdet_r.push(ldr);
            r_inv.push(linalg::inv_hpd(&r)?);
            s_inv.push(linalg::inv_hpd(&s)?);
            r_cov.push(r);
        }
        Ok(Evaluation { sc, q, r_cov, r_inv, s_inv, logdet_r, rates, powers })
    }

    pub fn num_links(&self) -> usize {
        self.sc.num_links()
    }

    pub fn sum_rate(&self) -> T {
        self.rates.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn total_power(&self) -> T {
        self.powers.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn gee(&self) -> T {
        self.sum_rate() / self.total_power()
    }

    pub fn see(&self) -> T {
        self.rates.iter().zip(&self.powers).fold(T::zero(), |a, (&r, &p)| a + r / p)
    }

    /// Gradient of `r_j` with respect to `Q_k`.
    pub fn grad_rate(&self, k: usize, j: usize) -> CMat<T> {
        let sc = self.sc;
        if j == k {
            back_sandwich(&sc.h[k][k], &self.s_inv[k])
        } else {
            back_sandwich(&sc.h[j][k], &(&self.s_inv[j] - &self.r_inv[j]))
        }
    }

    /// Gradient of `p_j` with respect to `Q_k`.
    pub fn grad_power(&self, k: usize, j: usize) -> CMat<T> {
        let l = &self.sc.links[j];
        let m = self.sc.links[k].tx_antennas;
        let gp = l.g.deriv(self.rates[j]);
        let mut g = if gp == T::zero() { linalg::zeros(m, m) } else { self.grad_rate(k, j) * cplx(gp) };
        if j == k {
            g += linalg::scaled_eye(m, self.sc.links[k].rho);
        }
        g
    }

    /// All `∇_k r_j`, indexed `[k][j]`.
    pub fn rate_grads(&self) -> Vec<Vec<CMat<T>>> {
        let kk = self.num_links();
        (0..kk).map(|k| (0..kk).map(|j| self.grad_rate(k, j)).collect()).collect()
    }

    pub fn g_derivs(&self) -> Vec<T> {
        self.sc.links.iter().zip(&self.rates).map(|(l, &r)| l.g.deriv(r)).collect()
    }

    pub fn grad_gee(&self) -> Blocks<T> {
        let kk = self.num_links();
        let rt = self.sum_rate();
        let pt = self.total_power();
        let rg = self.rate_grads();
        let gd = self.g_derivs();
        Blocks(
            (0..kk)
                .map(|k| {
                    let m = self.sc.links[k].tx_antennas;
                    let mut sum_r = linalg::zeros(m, m);
                    let mut sum_p = linalg::scaled_eye(m, self.sc.links[k].rho);
                    for j in 0..kk {
                        sum_r += &rg[k][j];
                        if gd[j] != T::zero() {
                            sum_p += &rg[k][j] * cplx(gd[j]);
                        }
                    }
                    herm(&(sum_r * cplx(T::one() / pt) - sum_p * cplx(rt / (pt * pt))))
                })
                .collect(),
        )
    }

    /// Gradient of `r_j / p_j` with respect to `Q_k`.
    pub fn grad_ratio(&self, k: usize, j: usize) -> CMat<T> {
        let p = self.powers[j];
        herm(&(self.grad_rate(k, j) * cplx(T::one() / p) - self.grad_power(k, j) * cplx(self.rates[j] / (p * p))))
    }

    pub fn grad_see(&self) -> Blocks<T> {
        let kk = self.num_links();
        Blocks(
            (0..kk)
                .map(|k| {
                    let m = self.sc.links[k].tx_antennas;
                    (0..kk).fold(linalg::zeros(m, m), |acc, j| acc + self.grad_ratio(k, j))
                })
                .collect(),
        )
    }
}

/// The two energy-efficiency objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Gee,
    See,
}

impl Objective {
    pub fn value<T: Real>(self, ev: &Evaluation<'_, T>) -> T {
        match self {
            Objective::Gee => ev.gee(),
            Objective::See => ev.see(),
        }
    }

    pub fn gradient<T: Real>(self, ev: &Evaluation<'_, T>) -> Blocks<T> {
        match self {
            Objective::Gee => ev.grad_gee(),
            Objective::See => ev.grad_see(),
        }
    }
}

fn interference_cov_impl<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, k: usize) -> CMat<T> {
    let l = &sc.links[k];
    let mut r = linalg::scaled_eye(l.rx_antennas, l.sigma2);
    for j in 0..sc.num_links() {
        if j != k {
            r += sandwich(&sc.h[k][j], &q[j]);
        }
    }
    herm(&r)
}

/// `R_k = σ_k² I + Σ_{j≠k} H_kj Q_j H_kjᴴ`.
pub fn interference_cov<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, k: usize) -> CMat<T> {
    interference_cov_impl(sc, q, k)
}

pub fn rate<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, k: usize) -> Result<T> {
    let r = interference_cov_impl(sc, q, k);
    let s = herm(&(&r + sandwich(&sc.h[k][k], &q[k])));
    Ok((linalg::logdet_hpd(&s)? - linalg::logdet_hpd(&r)?).max(T::zero()))
}

pub fn power<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, k: usize) -> Result<T> {
    let l = &sc.links[k];
    Ok(l.p0 + l.rho * linalg::trace_re(&q[k]) + l.g.eval(rate(sc, q, k)?))
}

pub fn gee<T: Real>(sc: &Scenario<T>, q: &Blocks<T>) -> Result<T> {
    Ok(Evaluation::new(sc, q.clone())?.gee())
}

pub fn see<T: Real>(sc: &Scenario<T>, q: &Blocks<T>) -> Result<T> {
    Ok(Evaluation::new(sc, q.clone())?.see())
}

pub fn grad_rate<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, k: usize, j: usize) -> Result<CMat<T>> {
    Ok(Evaluation::new(sc, q.clone())?.grad_rate(k, j))
}

pub fn grad_power<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, k: usize, j: usize) -> Result<CMat<T>> {
    Ok(Evaluation::new(sc, q.clone())?.grad_power(k, j))
}

/// `r_k⁺(Y_k) = log det(σ_k² I + Y_k)`.
pub fn rate_plus<T: Real>(sc: &Scenario<T>, y_k: &CMat<T>, k: usize) -> Result<T> {
    let l = &sc.links[k];
    linalg::logdet_hpd(&(y_k + linalg::scaled_eye(l.rx_antennas, l.sigma2)))
}

/// `r_k⁻(Q) = log det R_k(Q)`.
pub fn rate_minus<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, k: usize) -> Result<T> {
    linalg::logdet_hpd(&interference_cov_impl(sc, q, k))
}

/// Gradient of `r_k⁻` with respect to `Q_j` (`j ≠ k`): `H_kjᴴ R_k⁻¹ H_kj`.
pub fn grad_rate_minus<T: Real>(sc: &Scenario<T>, r_inv_k: &CMat<T>, k: usize, j: usize) -> CMat<T> {
    back_sandwich(&sc.h[k][j], r_inv_k)
}

/// First-order upper bound of `r_k⁻` around `q_ref`.
pub fn rate_minus_bar<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, q_ref: &Blocks<T>, k: usize) -> Result<T> {
    let r_ref = interference_cov_impl(sc, q_ref, k);
    let r_inv = linalg::inv_hpd(&r_ref)?;
    let mut v = linalg::logdet_hpd(&r_ref)?;
    for j in 0..sc.num_links() {
        if j != k {
            v += re_inner(&(&q[j] - &q_ref[j]), &grad_rate_minus(sc, &r_inv, k, j));
        }
    }
    Ok(v)
}

/// Placement of transmitters and receivers in the plane.
#[derive(Debug, Clone, PartialEq)]
pub enum CellGeometry {
    /// Transmitters evenly spaced on a circle, each receiver at a fixed
    /// distance from its own transmitter in a random direction.
    Ring { radius: f64, user_distance: f64 },
    /// Explicit `(x, y)` coordinates.
    Explicit { transmitters: Vec<[f64; 2]>, receivers: Vec<[f64; 2]> },
}

impl CellGeometry {
    fn positions(&self, k: usize, rng: &mut ChaCha20Rng) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
        match self {
            CellGeometry::Ring { radius, user_distance } => {
                if !(*radius > 0.0 && *user_distance > 0.0) {
                    return Err(Error::Config("ring geometry needs positive radius and user distance".into()));
                }
                let tx: Vec<[f64; 2]> = if k == 1 {
                    vec![[0.0, 0.0]]
                } else {
                    (0..k)
                        .map(|i| {
                            let a = std::f64::consts::TAU * i as f64 / k as f64;
                            [radius * a.cos(), radius * a.sin()]
                        })
                        .collect()
                };
                let rx = tx
                    .iter()
                    .map(|p| {
                        let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                        [p[0] + user_distance * a.cos(), p[1] + user_distance * a.sin()]
                    })
                    .collect();
                Ok((tx, rx))
            }
            CellGeometry::Explicit { transmitters, receivers } => {
                if transmitters.len() != k || receivers.len() != k {
                    return Err(Error::Config(format!("explicit geometry needs {k} transmitters and receivers")));
                }
                Ok((transmitters.clone(), receivers.clone()))
            }
        }
    }
}

/// How QoS targets are set when generating a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum RateTargets {
    None,
    /// The same target for every link, in nats.
    Uniform(f64),
    /// Per-link targets in nats.
    PerLink(Vec<f64>),
    /// Fraction of each link's interference-free rate with `Q_k = (P_k/M_k) I`.
    FractionOfSingleUser(f64),
    /// Fraction of each link's rate at `Q = (P_k/M_k) I` for all links,
    /// interference included. Any fraction ≤ 1 keeps that point feasible.
    FractionOfUniformPower(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub links: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub p0_db: f64,
    pub p_per_antenna_db: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub antenna_gain_db: f64,
    pub pathloss_exponent: f64,
    pub geometry: CellGeometry,
    pub g: RatePowerModel<f64>,
    pub targets: RateTargets,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            links: 7,
            tx_antennas: 8,
            rx_antennas: 4,
            p0_db: 10.0,
            p_per_antenna_db: 10.0,
            rho: 2.6,
            sigma2: 1.0,
            antenna_gain_db: 16.0,
            pathloss_exponent: 2.0,
            geometry: CellGeometry::Ring { radius: 1.0, user_distance: 0.3 },
            g: RatePowerModel::Zero,
            targets: RateTargets::None,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `n × m` matrix of i.i.d. circularly-symmetric complex Gaussians with unit variance.
pub fn complex_gaussian<T: Real>(rng: &mut impl Rng, n: usize, m: usize) -> CMat<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = linalg::zeros(n, m);
    for r in 0..n {
        for c in 0..m {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            out[(r, c)] = Complex::new(T::lit(re * s), T::lit(im * s));
        }
    }
    out
}

/// Draws a scenario from a ChaCha20 stream seeded with `seed`.
///
/// Draw order: receiver angles (ring geometry only), then `H_kj` for
/// `k = 0..K`, `j = 0..K`, each row-major with real part before imaginary.
pub fn generate_scenario<T: Real>(cfg: &GeneratorConfig, seed: u64) -> Result<Scenario<T>> {
    if cfg.links == 0 || cfg.tx_antennas == 0 || cfg.rx_antennas == 0 {
        return Err(Error::Config("link and antenna counts must be positive".into()));
    }
    if !(cfg.pathloss_exponent >= 0.0 && cfg.sigma2 > 0.0 && cfg.rho >= 1.0) {
        return Err(Error::Config("need pathloss exponent >= 0, sigma2 > 0, rho >= 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (tx, rx) = cfg.geometry.positions(cfg.links, &mut rng)?;
    let gain = db_to_linear(cfg.antenna_gain_db);
    let mut h = Vec::with_capacity(cfg.links);
    for r in &rx {
        let mut row = Vec::with_capacity(cfg.links);
        for t in &tx {
            let d = ((r[0] - t[0]).powi(2) + (r[1] - t[1]).powi(2)).sqrt();
            if !(d > 0.0) {
                return Err(Error::Config("a receiver coincides with a transmitter".into()));
            }
            let amp = T::lit((gain * d.powf(-cfg.pathloss_exponent)).sqrt());
            row.push(complex_gaussian::<T>(&mut rng, cfg.rx_antennas, cfg.tx_antennas) * cplx(amp));
        }
        h.push(row);
    }
    let g = match cfg.g {
        RatePowerModel::Zero => RatePowerModel::Zero,
        RatePowerModel::Linear { q } => RatePowerModel::Linear { q: T::lit(q) },
        RatePowerModel::PowerLaw { q, exponent } => RatePowerModel::PowerLaw { q: T::lit(q), exponent: T::lit(exponent) },
    };
    let link = Link {
        tx_antennas: cfg.tx_antennas,
        rx_antennas: cfg.rx_antennas,
        sigma2: T::lit(cfg.sigma2),
        p_max: T::lit(db_to_linear(cfg.p_per_antenna_db) * cfg.tx_antennas as f64),
        p0: T::lit(db_to_linear(cfg.p0_db)),
        rho: T::lit(cfg.rho),
        g,
        r_min: T::zero(),
    };
    let sc = Scenario::new(vec![link; cfg.links], h)?;
    let targets: Vec<T> = match &cfg.targets {
        RateTargets::None => return Ok(sc),
        RateTargets::Uniform(r) => vec![T::lit(*r); cfg.links],
        RateTargets::PerLink(v) => v.iter().map(|&r| T::lit(r)).collect(),
        RateTargets::FractionOfSingleUser(f) => {
            let q = Blocks::uniform_full_power(&sc);
            (0..cfg.links)
                .map(|k| {
                    let l = sc.link(k);
                    let s = herm(&(linalg::scaled_eye(l.rx_antennas, l.sigma2) + sandwich(sc.channel(k, k), &q[k])));
                    Ok(T::lit(*f) * (linalg::logdet_hpd(&s)? - T::lit(cfg.sigma2.ln() * cfg.rx_antennas as f64)))
                })
                .collect::<Result<_>>()?
        }
        RateTargets::FractionOfUniformPower(f) => {
            let ev = Evaluation::new(&sc, Blocks::uniform_full_power(&sc))?;
            ev.rates.iter().map(|&r| T::lit(*f) * r).collect()
        }
    };
    sc.with_rate_targets(&targets)
}
