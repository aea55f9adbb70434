//! CV-QKD key-rate accounting.
//!
//! Uses the trusted-receiver Gaussian model: all variances are in shot-noise
//! units (vacuum = 1), `V_A` and `ξ` are referred to the channel input and
//! `ν_el` to the receiver. With `V = V_A + 1`,
//!
//! ```text
//! χ_line = 1/T − 1 + ξ
//! χ_hom  = ((1 − η) + ν_el) / η
//! χ_het  = (1 + (1 − η) + 2ν_el) / η
//! χ_tot  = χ_line + χ_det / T
//! ```
//!
//! Eve's information is the Holevo bound for an entangling-cloner attack
//! under reverse reconciliation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Symplectic eigenvalues below `1 - PHYSICALITY_TOL` are rejected.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    Homodyne,
    Heterodyne,
}

impl Detection {
    /// Quadratures measured per pulse: 1 for homodyne, 2 for heterodyne.
    pub fn mu(self) -> u32 {
        match self {
            Detection::Homodyne => 1,
            Detection::Heterodyne => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QkdSystemParams {
    pub distance_km: f64,
    pub loss_db_per_km: f64,
    /// Detector quantum efficiency η.
    pub eta: f64,
    /// Electronic noise ν_el (SNU).
    pub nu_el: f64,
    /// Excess noise ξ (SNU, channel-input referred).
    pub xi: f64,
    /// Modulation variance V_A (SNU).
    pub v_a: f64,
    pub detection: Detection,
    pub n_privacy: f64,
    pub eps_bar: f64,
    pub eps_pa: f64,
    /// Pulse rate in Hz, only used to convert bits/pulse to bits/s.
    pub f_rep: Option<f64>,
}

impl Default for QkdSystemParams {
    /// 80 km at 0.2 dB/km, η = 0.4, ν_el = 0.01, ξ = 0.001, heterodyne,
    /// `N_privacy = 10^8`, ε = 10^-10. `V_A` is a placeholder to be set
    /// from the target mutual information.
    fn default() -> Self {
        Self {
            distance_km: 80.0,
            loss_db_per_km: 0.2,
            eta: 0.4,
            nu_el: 0.01,
            xi: 0.001,
            v_a: 1.0,
            detection: Detection::Heterodyne,
            n_privacy: 1e8,
            eps_bar: 1e-10,
            eps_pa: 1e-10,
            f_rep: None,
        }
    }
}

impl QkdSystemParams {
    /// `T = 10^(−α d / 10)`.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.loss_db_per_km * self.distance_km / 10.0)
    }

    pub fn with_v_a(self, v_a: f64) -> Self {
        Self { v_a, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.transmittance();
        let checks = [
            (t > 0.0 && t <= 1.0, format!("transmittance {t} outside (0, 1]")),
            (
                self.eta > 0.0 && self.eta <= 1.0,
                format!("eta {} outside (0, 1]", self.eta),
            ),
            (self.nu_el >= 0.0, format!("nu_el {} is negative", self.nu_el)),
            (self.xi >= 0.0, format!("xi {} is negative", self.xi)),
            (self.v_a > 0.0, format!("v_a {} must be positive", self.v_a)),
            (
                self.n_privacy >= 1.0,
                format!("n_privacy {} must be at least 1", self.n_privacy),
            ),
            (
                self.eps_bar > 0.0 && self.eps_bar < 1.0 && self.eps_pa > 0.0 && self.eps_pa < 1.0,
                "security epsilons must lie in (0, 1)".to_string(),
            ),
        ];
        match checks.into_iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Domain(msg)),
            None => Ok(()),
        }
    }

    pub fn chi_line(&self) -> f64 {
        1.0 / self.transmittance() - 1.0 + self.xi
    }

    pub fn chi_det(&self) -> f64 {
        match self.detection {
            Detection::Homodyne => ((1.0 - self.eta) + self.nu_el) / self.eta,
            Detection::Heterodyne => (1.0 + (1.0 - self.eta) + 2.0 * self.nu_el) / self.eta,
        }
    }

    /// Total input-referred noise `χ_line + χ_det / T`.
    pub fn chi_tot(&self) -> f64 {
        self.chi_line() + self.chi_det() / self.transmittance()
    }
}

/// Alice–Bob mutual information in bits/pulse:
/// `(μ/2) log2((V + χ_tot) / (1 + χ_tot))`.
pub fn mutual_information(p: &QkdSystemParams) -> f64 {
    let chi = p.chi_tot();
    let v = p.v_a + 1.0;
    0.5 * p.detection.mu() as f64 * ((v + chi) / (1.0 + chi)).log2()
}

/// The modulation variance at which [`mutual_information`] equals
/// `target_iab`, by closed-form inversion.
pub fn solve_va_for_iab(target_iab: f64, p: &QkdSystemParams) -> Result<f64> {
    if !(target_iab > 0.0) {
        return Err(Error::Domain(format!(
            "target mutual information must be positive, got {target_iab}"
        )));
    }
    let chi = p.chi_tot();
    let exponent = 2.0 * target_iab / p.detection.mu() as f64;
    // V_A = (2^exponent − 1)(1 + χ_tot)
    let v_a = (exponent * std::f64::consts::LN_2).exp_m1() * (1.0 + chi);
    if !v_a.is_finite() {
        return Err(Error::NoSolution(target_iab));
    }
    Ok(v_a)
}

/// Von Neumann entropy of a thermal mode with symplectic eigenvalue `x`:
/// `((x+1)/2) log2((x+1)/2) − ((x−1)/2) log2((x−1)/2)`, with `g(1) = 0`.
pub fn g(x: f64) -> f64 {
    let a = 0.5 * (x + 1.0);
    let b = 0.5 * (x - 1.0);
    let bterm = if b > 0.0 { b * b.log2() } else { 0.0 };
    a * a.log2() - bterm
}

/// Positive roots `√(½(a ± √(a² − 4b)))`.
///
/// `a² − 4b` carries a rounding error of order `ε a²`, whose square root
/// would split a degenerate pair by ~1e-8; residuals below that level are
/// taken as zero. The smaller root comes from the product `ν1 ν2 = √b`.
fn eigen_pair(a: f64, b: f64) -> (f64, f64) {
    let d2 = a * a - 4.0 * b;
    let disc = if d2 > 16.0 * f64::EPSILON * a * a {
        d2.sqrt()
    } else {
        0.0
    };
    let big = (0.5 * (a + disc)).sqrt();
    if big == 0.0 {
        return (0.0, 0.0);
    }
    (big, b.max(0.0).sqrt() / big)
}

/// Symplectic eigenvalues `[ν1, ν2, ν3, ν4]` of Eve's state before and
/// after conditioning on Bob's measurement.
pub fn symplectic_eigenvalues(p: &QkdSystemParams) -> Result<[f64; 4]> {
    p.validate()?;
    let t = p.transmittance();
    let v = p.v_a + 1.0;
    let chi_line = p.chi_line();
    let chi_det = p.chi_det();
    let chi_tot = p.chi_tot();

    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line).powi(2);
    let b = t * t * (v * chi_line + 1.0).powi(2);
    let sqrt_b = b.sqrt();
    let (nu1, nu2) = eigen_pair(a, b);

    let norm = t * (v + chi_tot);
    let (a_cond, b_cond) = match p.detection {
        Detection::Homodyne => (
            (a * chi_det + v * sqrt_b + t * (v + chi_line)) / norm,
            sqrt_b * (v + sqrt_b * chi_det) / norm,
        ),
        Detection::Heterodyne => (
            (a * chi_det * chi_det
                + b
                + 1.0
                + 2.0 * chi_det * (v * sqrt_b + t * (v + chi_line))
                + 2.0 * t * (v * v - 1.0))
                / (norm * norm),
            ((v + sqrt_b * chi_det) / norm).powi(2),
        ),
    };
    let (nu3, nu4) = eigen_pair(a_cond, b_cond);

    let nus = [nu1, nu2, nu3, nu4];
    if let Some(bad) = nus.iter().find(|&&x| !(x >= 1.0 - PHYSICALITY_TOL)) {
        return Err(Error::Unphysical(format!(
            "symplectic eigenvalue {bad} below 1"
        )));
    }
    Ok(nus)
}

/// Holevo bound on Eve's information in bits/pulse,
/// `g(ν1) + g(ν2) − g(ν3) − g(ν4)`.
pub fn holevo_bound(p: &QkdSystemParams) -> Result<f64> {
    // Eigenvalues within tolerance below 1 are treated as exactly 1.
    let [n1, n2, n3, n4] = symplectic_eigenvalues(p)?.map(|x| x.max(1.0));
    Ok(g(n1) + g(n2) - g(n3) - g(n4))
}

/// Finite-size penalty
/// `Δ_n = 7 √(log2(2/ε̄) / n) + (2/n) log2(1/ε_PA)`.
pub fn finite_size_penalty(p: &QkdSystemParams) -> f64 {
    let n = p.n_privacy;
    7.0 * ((2.0 / p.eps_bar).log2() / n).sqrt() + 2.0 / n * (1.0 / p.eps_pa).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkrBreakdown {
    pub i_ab: f64,
    pub chi_be: f64,
    pub delta_n: f64,
    pub fer: f64,
    pub beta: f64,
    /// `(1 − FER)(β I_AB − χ_BE − Δ_n)` in bits/pulse; may be negative.
    pub skr: f64,
    /// Decoder throughput `K` in bits per iteration latency, when known.
    pub k_throughput: Option<f64>,
    /// Decoded key throughput in bits per iteration latency, when known.
    pub skr_dec: Option<f64>,
}

impl SkrBreakdown {
    pub fn from_components(i_ab: f64, chi_be: f64, delta_n: f64, beta: f64, fer: f64) -> Self {
        Self {
            i_ab,
            chi_be,
            delta_n,
            fer,
            beta,
            // `+ 0.0` turns a -0 from FER = 1 into 0.
            skr: (1.0 - fer) * key_margin(beta, i_ab, chi_be, delta_n) + 0.0,
            k_throughput: None,
            skr_dec: None,
        }
    }

    /// `β I_AB − χ_BE − Δ_n`, the key per successfully reconciled pulse.
    pub fn margin(&self) -> f64 {
        key_margin(self.beta, self.i_ab, self.chi_be, self.delta_n)
    }

    /// Set when the margin is negative: no key can be extracted.
    pub fn is_negative(&self) -> bool {
        self.margin() < 0.0
    }

    /// Key rate in bits/s, if a pulse rate is known.
    pub fn bits_per_second(&self, f_rep: Option<f64>) -> Option<f64> {
        f_rep.map(|f| f * self.skr)
    }
}

fn key_margin(beta: f64, i_ab: f64, chi_be: f64, delta_n: f64) -> f64 {
    beta * i_ab - chi_be - delta_n
}

fn check_fer_beta(beta: f64, fer: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fer) {
        return Err(Error::Domain(format!("FER {fer} outside [0, 1]")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("beta {beta} outside (0, 1]")));
    }
    Ok(())
}

/// Secret key rate in bits/pulse for the parameters in `p`.
pub fn skr(p: &QkdSystemParams, beta: f64, fer: f64) -> Result<SkrBreakdown> {
    check_fer_beta(beta, fer)?;
    Ok(SkrBreakdown::from_components(
        mutual_information(p),
        holevo_bound(p)?,
        finite_size_penalty(p),
        beta,
        fer,
    ))
}

/// Decoder throughput `K = (N / D̄) R (1 − FER)` in bits per iteration
/// latency.
pub fn decoder_throughput(n: f64, d_bar: f64, rate: f64, fer: f64) -> f64 {
    n / d_bar * rate * (1.0 - fer) + 0.0
}

/// `(N / (D̄ μ)) (1 − FER) · margin`.
pub fn skr_dec_from_margin(n: f64, d_bar: f64, mu: u32, fer: f64, margin: f64) -> f64 {
    n / (d_bar * mu as f64) * (1.0 - fer) * margin + 0.0
}

/// Decoded secret-key throughput in bits per iteration latency.
pub fn skr_dec(p: &QkdSystemParams, beta: f64, fer: f64, n: f64, d_bar: f64) -> Result<f64> {
    if !(d_bar >= 1.0) {
        return Err(Error::Domain(format!("mean iterations {d_bar} below 1")));
    }
    let breakdown = skr(p, beta, fer)?;
    Ok(skr_dec_from_margin(
        n,
        d_bar,
        p.detection.mu(),
        fer,
        breakdown.margin(),
    ))
}

/// One point of a β sweep for one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPoint {
    pub beta: f64,
    pub skr: f64,
    pub skr_dec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaOptimum {
    pub beta_skr: f64,
    pub beta_skr_dec: f64,
}

/// Grid argmax of SKR and of SKR_dec; ties go to the lower β.
pub fn optimize_beta(points: &[BetaPoint]) -> Result<BetaOptimum> {
    fn argmax(points: &[BetaPoint], key: impl Fn(&BetaPoint) -> f64) -> f64 {
        let mut best = points[0];
        for p in &points[1..] {
            let (k, kb) = (key(p), key(&best));
            if k > kb || (k == kb && p.beta < best.beta) {
                best = *p;
            }
        }
        best.beta
    }
    if points.is_empty() {
        return Err(Error::Empty("no sweep points to optimise over"));
    }
    Ok(BetaOptimum {
        beta_skr: argmax(points, |p| p.skr),
        beta_skr_dec: argmax(points, |p| p.skr_dec),
    })
}
