//! Kernel calculus for the finite-horizon nonlocal gradient.
//!
//! The operator `D^s_δ` is built from a radial interaction weight
//! `w_δ(x) = w̄_δ(|x|)`: a smooth cutoff that is 1 on a plateau `[0, b0·δ]`
//! and 0 outside the horizon `[δ, ∞)`. Three derived kernels matter:
//!
//! * `d^s_δ(x) = −c_{n,s} · x · w_δ(x) / |x|^{n+s+1}` — the antisymmetric
//!   two-point kernel whose principal-value convolution realizes `D^s_δ`;
//! * `Q^s_δ(|x|) = c_{n,s} ∫_{|x|}^δ w̄_δ(t) t^{−(n+s)} dt` — the radial
//!   potential with `D^s_δ φ = Q^s_δ ∗ ∇φ`, so `D^s_δ` acts in Fourier as
//!   the classical gradient damped by `Q̂^s_δ(|ξ|)`;
//! * `∇R^s_δ(x) = c_{n,s} (1 − w_δ(x)) x / |x|^{n+s+1}` — the smooth
//!   correction linking `D^s_δ` to the unbounded-horizon fractional
//!   gradient (zero on the plateau, algebraic tail beyond the horizon).
//!
//! The scaling constant `c_{n,s}` is chosen so that `Q̂^s_δ(ξ)` approaches
//! the fractional symbol `|2πξ|^{−(1−s)}` at high frequency; as `s → 1` the
//! kernel mass `‖Q^s_δ‖_{L¹}` tends to 1 and `D^s_δ` localizes to the
//! classical gradient. `s = 1` is the classical sentinel throughout:
//! `c_{n,1} = 0`, all pointwise kernels vanish, and `Q̂ ≡ 1` by convention.

use crate::quad;
use crate::special::{bessel_j1, ln_gamma};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const PI: f64 = std::f64::consts::PI;
const LN_2: f64 = std::f64::consts::LN_2;

/// Volume of the unit ball in `dim` dimensions.
pub fn unit_ball_volume(dim: usize) -> f64 {
    (0.5 * dim as f64 * PI.ln() - ln_gamma(0.5 * dim as f64 + 1.0)).exp()
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "dim must be 1 or 2, got {dim}"
        )))
    }
}

/// Scaling constant `c_{n,s} = Γ((n+s+1)/2) / (π^{n/2} 2^{−s} Γ((1−s)/2))`.
///
/// Evaluated through the pole-free product `c_{n,s} = (1−s) ·
/// Γ((n+s+1)/2) 2^s / (2 π^{n/2} Γ((3−s)/2))` (using `Γ(x+1) = xΓ(x)` on the
/// denominator), which is exact on all of `s ∈ [0, 1]` and returns 0 at the
/// classical endpoint `s = 1`.
pub fn scaling_constant(dim: usize, s: f64) -> Result<f64> {
    Ok((1.0 - s) * scaling_constant_normalized(dim, s)?)
}

/// The `(1−s)`-normalized scaling constant `c_{n,s}/(1−s)`.
///
/// Finite up to and including `s = 1`, where it equals `1/ω_n` (reciprocal
/// unit-ball volume) — the normalization behind the localization `D^s_δ → ∇`.
pub fn scaling_constant_normalized(dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "s must lie in [0, 1], got {s}"
        )));
    }
    let n = dim as f64;
    Ok(
        (ln_gamma(0.5 * (n + s + 1.0)) + s * LN_2 - 0.5 * n * PI.ln() - LN_2
            - ln_gamma(0.5 * (3.0 - s)))
        .exp(),
    )
}

/// Riesz potential normalization `γ_{n,σ} = π^{n/2} 2^σ Γ(σ/2) / Γ((n−σ)/2)`
/// for `0 < σ < n`, so `I_σ(x) = γ_{n,σ}^{−1} |x|^{−(n−σ)}`.
pub fn riesz_constant(dim: usize, sigma: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dim must be positive".into()));
    }
    if !(sigma > 0.0 && sigma < dim as f64) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0, {dim}), got {sigma}"
        )));
    }
    let n = dim as f64;
    Ok(
        (0.5 * n * PI.ln() + sigma * LN_2 + ln_gamma(0.5 * sigma) - ln_gamma(0.5 * (n - sigma)))
            .exp(),
    )
}

/// Radial cutoff profile `w̄_δ`: identically 1 on the plateau `[0, b0·δ]`,
/// identically 0 on `[δ, ∞)`, and a `C^∞` monotone transition in between
/// built from the standard smooth step `h(t) = exp(−1/t)` glue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    b0: f64,
}

impl CutoffProfile {
    /// Plateau fraction `b0 ∈ (0, 1)`.
    pub fn new(b0: f64) -> Result<Self> {
        if b0 > 0.0 && b0 < 1.0 {
            Ok(CutoffProfile { b0 })
        } else {
            Err(Error::InvalidParameter(format!(
                "plateau fraction b0 must lie in (0, 1), got {b0}"
            )))
        }
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    /// `w̄_δ(r)` for horizon `delta`.
    pub fn eval(&self, delta: f64, r: f64) -> f64 {
        let lo = self.b0 * delta;
        if r <= lo {
            1.0
        } else if r >= delta {
            0.0
        } else {
            let t = (r - lo) / (delta - lo);
            let ha = smooth_h(t);
            let hb = smooth_h(1.0 - t);
            hb / (ha + hb)
        }
    }
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile { b0: 0.5 }
    }
}

fn smooth_h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C^∞ monotone step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, glued with the standard
/// exponential partition of unity. Building block for compactly supported
/// windows and test bumps.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let ha = smooth_h(t);
        let hb = smooth_h(1.0 - t);
        ha / (ha + hb)
    }
}

/// Derivative of [`smooth_step`]; vanishes outside `(0, 1)`.
pub fn smooth_step_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let ha = smooth_h(t);
    let hb = smooth_h(1.0 - t);
    let da = ha / (t * t);
    let db = hb / ((1.0 - t) * (1.0 - t));
    (da * hb + ha * db) / ((ha + hb) * (ha + hb))
}

/// Parameter bundle for one nonlocal gradient: dimension `n ∈ {1, 2}`,
/// fractional order `s ∈ [0, 1]`, horizon `δ > 0`, and the cutoff profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    dim: usize,
    s: f64,
    delta: f64,
    cutoff: CutoffProfile,
}

impl KernelParams {
    pub fn new(dim: usize, s: f64, delta: f64) -> Result<Self> {
        Self::with_cutoff(dim, s, delta, CutoffProfile::default())
    }

    pub fn with_cutoff(dim: usize, s: f64, delta: f64, cutoff: CutoffProfile) -> Result<Self> {
        check_dim(dim)?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "s must lie in [0, 1], got {s}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive and finite, got {delta}"
            )));
        }
        Ok(KernelParams {
            dim,
            s,
            delta,
            cutoff,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cutoff(&self) -> CutoffProfile {
        self.cutoff
    }

    /// `s = 1` is the classical sentinel: `D^1_δ = ∇` exactly.
    pub fn is_classical(&self) -> bool {
        self.s == 1.0
    }

    /// Cutoff value `w̄_δ(r)` at radius `r`.
    pub fn cutoff_eval(&self, r: f64) -> f64 {
        self.cutoff.eval(self.delta, r)
    }

    /// Scaling constant `c_{n,s}` for these parameters.
    pub fn scaling(&self) -> f64 {
        scaling_constant(self.dim, self.s).expect("params validated at construction")
    }

    /// Radial potential `Q^s_δ(r) = c_{n,s} ∫_r^δ w̄_δ(t) t^{−(n+s)} dt` for
    /// `0 < r < δ`; zero for `r ≥ δ`; `+∞` at `r = 0` (the singularity is
    /// integrable). On the plateau portion `[r, b0·δ]` the cutoff is exactly 1
    /// and the primitive of `t^{−(n+s)}` is used in closed form; the smooth
    /// transition `[b0·δ, δ]` is integrated adaptively to 1e−10 relative.
    pub fn q_kernel_eval(&self, r: f64) -> f64 {
        if self.is_classical() {
            return 0.0;
        }
        if r >= self.delta {
            return 0.0;
        }
        if r <= 0.0 {
            return f64::INFINITY;
        }
        self.scaling() * self.q_integral(r)
    }

    /// ∫_r^δ w̄_δ(t) t^{−(n+s)} dt without the scaling constant.
    fn q_integral(&self, r: f64) -> f64 {
        let alpha = self.dim as f64 + self.s;
        let lo = self.cutoff.b0() * self.delta;
        let plateau = if r < lo {
            if (alpha - 1.0).abs() < 1e-14 {
                (lo / r).ln()
            } else {
                (r.powf(1.0 - alpha) - lo.powf(1.0 - alpha)) / (alpha - 1.0)
            }
        } else {
            0.0
        };
        let start = r.max(lo);
        let transition = if start < self.delta {
            quad::adaptive(
                &|t: f64| self.cutoff_eval(t) * t.powf(-alpha),
                start,
                self.delta,
                1e-10,
                0.0,
            )
        } else {
            0.0
        };
        plateau + transition
    }

    /// Antisymmetric two-point kernel `d^s_δ(x) = −c_{n,s} x w_δ(x) / |x|^{n+s+1}`.
    pub fn d_kernel_eval(&self, x: &[f64]) -> Vec<f64> {
        let f = self.d_kernel_radial_factor(norm(x));
        x.iter().map(|&xi| f * xi).collect()
    }

    /// Scalar factor `f(r)` with `d^s_δ(x) = f(|x|) · x`.
    pub fn d_kernel_radial_factor(&self, r: f64) -> f64 {
        if r <= 0.0 || r >= self.delta {
            return 0.0;
        }
        -self.scaling() * self.cutoff_eval(r) * r.powf(-(self.dim as f64 + self.s + 1.0))
    }

    /// Smooth correction kernel `∇R^s_δ(x) = c_{n,s} (1 − w_δ(x)) x / |x|^{n+s+1}`:
    /// identically zero on the plateau `|x| ≤ b0·δ`, algebraically decaying
    /// tail `c_{n,s} x/|x|^{n+s+1}` beyond the horizon.
    pub fn grad_r_kernel_eval(&self, x: &[f64]) -> Vec<f64> {
        let f = self.grad_r_radial_factor(norm(x));
        x.iter().map(|&xi| f * xi).collect()
    }

    /// Scalar factor `g(r)` with `∇R^s_δ(x) = g(|x|) · x`.
    pub fn grad_r_radial_factor(&self, r: f64) -> f64 {
        if r <= self.cutoff.b0() * self.delta {
            return 0.0;
        }
        self.scaling() * (1.0 - self.cutoff_eval(r)) * r.powf(-(self.dim as f64 + self.s + 1.0))
    }

    /// Kernel mass `‖Q^s_δ‖_{L¹} = c_{n,s} ω_n ∫_0^δ w̄_δ(r) r^{−s} dr`,
    /// by adaptive quadrature under the grading `r = δ·τ^{2/(1−s)}` that
    /// bounds the integrand. Returns the limit value 1 at `s = 1`.
    pub fn q_l1_norm(&self) -> f64 {
        if self.is_classical() {
            return 1.0;
        }
        let c = self.scaling() * unit_ball_volume(self.dim);
        c * quad::adaptive_graded_power(&|r: f64| self.cutoff_eval(r), self.delta, self.s, 1e-10)
    }

    /// Two-sided envelope for the kernel mass implied by `b0·δ ≤ w̄⁻¹({1})`:
    /// `c_{n,s} ω_n (b0 δ)^{1−s}/(1−s) ≤ ‖Q‖_{L¹} ≤ c_{n,s} ω_n δ^{1−s}/(1−s)`.
    /// Both bounds are finite up to `s = 1` (where they collapse to 1).
    pub fn q_l1_envelope(&self) -> (f64, f64) {
        let base = scaling_constant_normalized(self.dim, self.s).expect("validated")
            * unit_ball_volume(self.dim);
        let lo = base * (self.cutoff.b0() * self.delta).powf(1.0 - self.s);
        let hi = base * self.delta.powf(1.0 - self.s);
        (lo, hi)
    }

    /// Mass of `Q^s_δ` outside the ball of radius `eps`:
    /// `‖Q‖_{L¹(|x| ≥ eps)} = c_{n,s} ω_n ∫_eps^δ w̄_δ(t)(1 − (eps/t)^n) t^{−s} dt`
    /// (exact rearrangement of the radial double integral). Tends to 0 as
    /// `s → 1` for fixed `eps`, quantifying concentration at the origin.
    pub fn q_l1_tail_mass(&self, eps: f64) -> f64 {
        assert!(eps > 0.0);
        if self.is_classical() || eps >= self.delta {
            return 0.0;
        }
        let n = self.dim as f64;
        let s = self.s;
        let c = self.scaling() * unit_ball_volume(self.dim);
        c * quad::adaptive(
            &|t: f64| self.cutoff_eval(t) * (1.0 - (eps / t).powf(n)) * t.powf(-s),
            eps,
            self.delta,
            1e-10,
            0.0,
        )
    }

    /// Radial Fourier transform `Q̂^s_δ(|ξ|)` of the potential: bounded,
    /// strictly positive, with `Q̂(0) = ‖Q‖_{L¹}` and high-frequency decay
    /// toward the fractional symbol `|2πξ|^{−(1−s)}`.
    ///
    /// The defining radial transforms — `2∫_0^δ Q(r) cos(2πr|ξ|) dr` in 1D,
    /// `2π∫_0^δ Q(r) J0(2πr|ξ|) r dr` in 2D — are evaluated after one exact
    /// integration by parts (`Q(δ) = 0`, `Q' = −c_{n,s} w̄ r^{−(n+s)}`), which
    /// removes the nested kernel integral:
    ///
    /// * 1D: `(c/(π|ξ|)) ∫_0^δ w̄(r) r^{−(1+s)} sin(2πr|ξ|) dr`
    /// * 2D: `(c/|ξ|)  ∫_0^δ w̄(r) r^{−(1+s)} J1(2πr|ξ|) dr`
    ///
    /// and the remaining `r^{−s}`-type singularity is tamed by the usual
    /// grading. Returns 1 identically at the classical sentinel `s = 1`.
    pub fn q_hat_radial(&self, xi: f64) -> f64 {
        if self.is_classical() {
            return 1.0;
        }
        let xi = xi.abs();
        if xi < 1e-12 {
            return self.q_l1_norm();
        }
        let c = self.scaling();
        match self.dim {
            1 => {
                // w̄(r)·sin(2πrξ)/r is bounded (→ 2πξ at r = 0); the residual
                // r^{−s} power is folded into the graded map analytically.
                let integral = quad::adaptive_graded_power(
                    &|r: f64| {
                        if r == 0.0 {
                            return 2.0 * PI * xi;
                        }
                        self.cutoff_eval(r) * (2.0 * PI * r * xi).sin() / r
                    },
                    self.delta,
                    self.s,
                    1e-10,
                );
                c / (PI * xi) * integral
            }
            2 => {
                // w̄(r)·J1(2πrξ)/r is bounded (→ πξ at r = 0).
                let integral = quad::adaptive_graded_power(
                    &|r: f64| {
                        if r == 0.0 {
                            return PI * xi;
                        }
                        self.cutoff_eval(r) * bessel_j1(2.0 * PI * r * xi) / r
                    },
                    self.delta,
                    self.s,
                    1e-10,
                );
                c / xi * integral
            }
            _ => unreachable!("dim validated at construction"),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;
    use approx::assert_relative_eq;

    // 50-digit mpmath references for the closed-form constants.
    const INV_PI: f64 = 0.3183098861837907;
    const TWO_PI: f64 = 6.283185307179586;
    const FOUR_PI: f64 = 12.566370614359172;
    const C_2_05: f64 = 0.11411141979370157; // c_{2, 1/2}

    fn params(dim: usize, s: f64, delta: f64) -> KernelParams {
        KernelParams::new(dim, s, delta).unwrap()
    }

    /// Reference rule: fixed-order Gauss–Legendre over panels geometrically
    /// graded toward the origin, entirely independent of the adaptive driver
    /// and its grading substitution.
    fn geometric_composite<F: Fn(f64) -> f64>(f: F, b: f64, subpanels: usize) -> f64 {
        let gl = GaussLegendre::new(15);
        let ratio = 0.85f64;
        let mut hi = b;
        let mut acc = 0.0;
        while hi > 1e-300 {
            let lo = hi * ratio;
            let w = (hi - lo) / subpanels as f64;
            for k in 0..subpanels {
                acc += gl.integrate(&f, lo + k as f64 * w, lo + (k + 1) as f64 * w);
            }
            hi = lo;
        }
        acc
    }

    #[test]
    fn scaling_constant_closed_forms() {
        assert_relative_eq!(scaling_constant(1, 0.0).unwrap(), INV_PI, max_relative = 1e-13);
        assert_relative_eq!(scaling_constant(2, 0.5).unwrap(), C_2_05, max_relative = 1e-13);
        assert!(scaling_constant(2, 0.95).unwrap() > 0.0);
        assert_eq!(scaling_constant(1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn scaling_constant_localization_limit() {
        // c_{n,s}/(1−s) → 1/ω_n as s → 1, and is exact at s = 1.
        for dim in [1usize, 2] {
            let inv_ball = 1.0 / unit_ball_volume(dim);
            assert_relative_eq!(
                scaling_constant_normalized(dim, 1.0).unwrap(),
                inv_ball,
                max_relative = 1e-13
            );
            assert_relative_eq!(
                scaling_constant_normalized(dim, 0.999).unwrap(),
                inv_ball,
                max_relative = 5e-3
            );
        }
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-13);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-13);
    }

    #[test]
    fn scaling_constant_rejects_bad_domain() {
        assert!(scaling_constant(3, 0.5).is_err());
        assert!(scaling_constant(1, -0.1).is_err());
        assert!(scaling_constant(1, 1.1).is_err());
    }

    #[test]
    fn riesz_constant_closed_forms() {
        assert_relative_eq!(riesz_constant(2, 1.0).unwrap(), TWO_PI, max_relative = 1e-13);
        assert_relative_eq!(riesz_constant(3, 2.0).unwrap(), FOUR_PI, max_relative = 1e-13);
        assert!(riesz_constant(2, 2.0).is_err());
        assert!(riesz_constant(2, 0.0).is_err());
        assert!(riesz_constant(1, 1.5).is_err());
    }

    #[test]
    fn cutoff_plateau_transition_support() {
        let cut = CutoffProfile::default();
        let delta = 2.0;
        assert_eq!(cut.eval(delta, 0.0), 1.0);
        assert_eq!(cut.eval(delta, 1.0), 1.0); // plateau edge b0·δ
        assert_eq!(cut.eval(delta, 2.0), 0.0);
        assert_eq!(cut.eval(delta, 5.0), 0.0);
        // Midpoint of the transition is exactly 1/2 by the symmetric glue.
        assert_relative_eq!(cut.eval(delta, 1.5), 0.5, max_relative = 1e-14);
        // Monotone, range [0, 1].
        let mut prev = 1.0;
        for i in 0..=400 {
            let r = 2.0 * i as f64 / 400.0;
            let v = cut.eval(delta, r);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert!(CutoffProfile::new(0.0).is_err());
        assert!(CutoffProfile::new(1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(KernelParams::new(3, 0.5, 1.0).is_err());
        assert!(KernelParams::new(1, 1.5, 1.0).is_err());
        assert!(KernelParams::new(1, 0.5, 0.0).is_err());
        assert!(KernelParams::new(1, 0.5, f64::INFINITY).is_err());
        assert!(KernelParams::new(2, 1.0, 0.5).is_ok());
    }

    #[test]
    fn q_kernel_against_independent_composite_rule() {
        // Adaptive/closed-form route vs fixed-order geometric composite.
        for &(dim, s) in &[(1usize, 0.0), (1, 0.5), (1, 0.95), (2, 0.25), (2, 0.75)] {
            let p = params(dim, s, 1.0);
            let alpha = dim as f64 + s;
            for &r in &[0.01, 0.1, 0.5, 0.75, 0.99] {
                let want = {
                    let gl = GaussLegendre::new(15);
                    // 10× the resolution the adaptive path needs: 4096 panels.
                    gl.integrate_composite(
                        |t: f64| p.cutoff_eval(t) * t.powf(-alpha),
                        r,
                        1.0,
                        4096,
                    ) * p.scaling()
                };
                let got = p.q_kernel_eval(r);
                assert_relative_eq!(got, want, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn q_kernel_support_and_monotonicity() {
        let p = params(2, 0.5, 0.75);
        assert_eq!(p.q_kernel_eval(0.75), 0.0);
        assert_eq!(p.q_kernel_eval(2.0), 0.0);
        assert!(p.q_kernel_eval(0.0).is_infinite());
        let mut prev = f64::INFINITY;
        for i in 1..=60 {
            let r = 0.75 * i as f64 / 60.0;
            let v = p.q_kernel_eval(r);
            assert!(v >= 0.0);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn d_kernel_antisymmetry_and_support() {
        let p = params(2, 0.5, 1.0);
        let x = [0.3, -0.2];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let dx = p.d_kernel_eval(&x);
        let dn = p.d_kernel_eval(&neg);
        for i in 0..2 {
            assert_eq!(dx[i], -dn[i]);
        }
        // Vanishes outside the horizon.
        assert_eq!(p.d_kernel_eval(&[1.2, 0.0]), vec![0.0, 0.0]);
        // Points opposite to x (kernel factor negative inside support).
        assert!(dx[0] * x[0] < 0.0);
    }

    #[test]
    fn grad_r_kernel_plateau_and_tail() {
        let p = params(1, 0.5, 1.0);
        // Zero on the plateau |x| ≤ b0 δ = 0.5.
        assert_eq!(p.grad_r_kernel_eval(&[0.3]), vec![0.0]);
        assert_eq!(p.grad_r_kernel_eval(&[0.5]), vec![0.0]);
        // Beyond the horizon the cutoff is gone: pure power tail.
        let x = 2.0f64;
        let want = p.scaling() * x / x.powf(1.0 + 0.5 + 1.0);
        assert_relative_eq!(p.grad_r_kernel_eval(&[x])[0], want, max_relative = 1e-14);
        // Odd in x.
        assert_eq!(
            p.grad_r_kernel_eval(&[-0.8])[0],
            -p.grad_r_kernel_eval(&[0.8])[0]
        );
    }

    #[test]
    fn q_l1_norm_against_geometric_composite() {
        for &(dim, s) in &[(1usize, 0.0), (1, 0.5), (2, 0.25), (2, 0.95)] {
            let p = params(dim, s, 1.0);
            let c = p.scaling() * unit_ball_volume(dim);
            let want = c * geometric_composite(|r: f64| p.cutoff_eval(r) * r.powf(-s), 1.0, 1);
            assert_relative_eq!(p.q_l1_norm(), want, max_relative = 1e-9);
        }
    }

    #[test]
    fn q_l1_norm_within_envelope() {
        for &dim in &[1usize, 2] {
            for &s in &[0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999] {
                for &delta in &[0.5, 1.0] {
                    let p = params(dim, s, delta);
                    let (lo, hi) = p.q_l1_envelope();
                    let mass = p.q_l1_norm();
                    assert!(
                        lo <= mass * (1.0 + 1e-9) && mass <= hi * (1.0 + 1e-9),
                        "envelope violated: dim={dim} s={s} delta={delta}: {lo} ≤ {mass} ≤ {hi}"
                    );
                }
            }
        }
    }

    #[test]
    fn q_l1_norm_tends_to_one() {
        for &dim in &[1usize, 2] {
            let p = params(dim, 0.999, 1.0);
            assert_relative_eq!(p.q_l1_norm(), 1.0, max_relative = 5e-3);
            assert_eq!(params(dim, 1.0, 1.0).q_l1_norm(), 1.0);
        }
    }

    #[test]
    fn q_l1_grid_sum_oracle() {
        // Direct midpoint grid sum of Q^0_δ in 1D, δ = 1, with incremental
        // evaluation of the transition integral (anchored to q_kernel_eval at
        // spot radii). Spacing 2e−6 keeps the log-singular cell error below
        // the 1e−6 relative target.
        let p = params(1, 0.0, 1.0);
        let h = 2e-6;
        let m = (1.0 / h) as usize;
        let gl = GaussLegendre::new(15);
        let c = p.scaling();
        // Walk radii downward from δ, accumulating ∫_r^δ w̄/t dt.
        let mut integral = 0.0;
        let mut prev_r = 1.0;
        let mut sum = 0.0;
        let mut anchor_checked = 0;
        for i in (0..m).rev() {
            let r = (i as f64 + 0.5) * h;
            integral += gl.integrate(|t: f64| p.cutoff_eval(t) / t, r, prev_r);
            prev_r = r;
            let q = c * integral;
            sum += 2.0 * q * h; // symmetric pair at ±r
            if anchor_checked < 3 && (i == m / 2 || i == m / 4 || i == (3 * m) / 4) {
                assert_relative_eq!(q, p.q_kernel_eval(r), max_relative = 1e-9);
                anchor_checked += 1;
            }
        }
        assert_eq!(anchor_checked, 3);
        assert_relative_eq!(sum, p.q_l1_norm(), max_relative = 1e-6);
    }

    #[test]
    fn q_tail_mass_shrinks_with_s() {
        let eps = 0.25;
        let mut prev = f64::INFINITY;
        for &s in &[0.5, 0.9, 0.99, 0.999] {
            let p = params(1, s, 1.0);
            let tail = p.q_l1_tail_mass(eps);
            assert!(tail >= 0.0 && tail < prev);
            prev = tail;
        }
        // Consistency: tail(eps) ≤ total mass; tail beyond δ is zero.
        let p = params(2, 0.5, 1.0);
        assert!(p.q_l1_tail_mass(0.3) <= p.q_l1_norm());
        assert_eq!(p.q_l1_tail_mass(1.5), 0.0);
    }

    #[test]
    fn q_hat_zero_frequency_is_l1_norm() {
        for &(dim, s) in &[(1usize, 0.25), (2, 0.6)] {
            let p = params(dim, s, 1.0);
            assert_relative_eq!(p.q_hat_radial(0.0), p.q_l1_norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn q_hat_against_literal_radial_transform() {
        // Independent route: the defining (non-integrated-by-parts) radial
        // transforms — 2∫Q(r)cos(2πrξ)dr in 1D, 2π∫Q(r)J0(2πrξ)r dr in 2D —
        // under a geometric composite rule with oscillation-resolving
        // subpanels. To keep the panel count tractable, Q(r)·r^{n−1} below
        // the plateau edge uses the kernel's own primitive
        //   Q(r) = Q(b0δ) + c (r^{1−α} − (b0δ)^{1−α})/(α−1),  α = n+s,
        // with the r^{n−1} factor folded in before exponentiation so nothing
        // overflows at tiny radii; the identity is anchored to q_kernel_eval
        // at spot radii.
        use crate::special::bessel_j0;
        let cases: [(usize, f64, f64); 6] = [
            (1, 0.5, 0.25),
            (1, 0.5, 3.0),
            (1, 0.0, 8.0),
            (1, 0.95, 2.0),
            (2, 0.25, 1.5),
            (2, 0.75, 6.0),
        ];
        for &(dim, s, xi) in &cases {
            let p = params(dim, s, 1.0);
            let n = dim as f64;
            let alpha = n + s;
            let lo = 0.5; // b0·δ
            let q_at_lo = p.q_kernel_eval(lo);
            let c = p.scaling();
            // Q(r)·r^{n−1}, overflow-safe for r → 0.
            let q_times_pow = |r: f64| -> f64 {
                if r >= lo {
                    p.q_kernel_eval(r) * r.powf(n - 1.0)
                } else if alpha == 1.0 {
                    // n = 1, s = 0: logarithmic primitive.
                    q_at_lo + c * (lo / r).ln()
                } else {
                    q_at_lo * r.powf(n - 1.0)
                        + c * (r.powf(n - alpha) - lo.powf(1.0 - alpha) * r.powf(n - 1.0))
                            / (alpha - 1.0)
                }
            };
            // Anchor the primitive to the public evaluator.
            for &r in &[0.05, 0.3] {
                assert_relative_eq!(
                    q_times_pow(r),
                    p.q_kernel_eval(r) * r.powf(n - 1.0),
                    max_relative = 1e-9
                );
            }
            let sub = (4.0 * xi).ceil().max(2.0) as usize;
            let want = match dim {
                1 => {
                    2.0 * geometric_composite(
                        |r: f64| q_times_pow(r) * (2.0 * PI * r * xi).cos(),
                        1.0,
                        sub,
                    )
                }
                _ => {
                    2.0 * PI
                        * geometric_composite(
                            |r: f64| q_times_pow(r) * bessel_j0(2.0 * PI * r * xi),
                            1.0,
                            sub,
                        )
                }
            };
            let got = p.q_hat_radial(xi);
            assert_relative_eq!(got, want, max_relative = 1e-7);
        }
    }

    #[test]
    fn q_hat_positive_and_bounded() {
        for &dim in &[1usize, 2] {
            for &s in &[0.0, 0.5, 0.95] {
                let p = params(dim, s, 0.5);
                let bound = p.q_l1_norm();
                for i in 0..=64 {
                    let xi = 64.0 * i as f64 / 64.0;
                    let v = p.q_hat_radial(xi);
                    assert!(v > 0.0, "Q̂ must be strictly positive (dim={dim} s={s} xi={xi})");
                    assert!(v <= bound * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn q_hat_high_frequency_decay() {
        // |ξ|·|Q̂(ξ) − |2πξ|^{−(1−s)}| stays bounded on |ξ| ≥ 1.
        for &s in &[0.25, 0.5, 0.75] {
            for &dim in &[1usize, 2] {
                let p = params(dim, s, 1.0);
                for &xi in &[1.0, 2.0, 8.0, 32.0] {
                    let frac = (2.0 * PI * xi).powf(-(1.0 - s));
                    let resid = xi * (p.q_hat_radial(xi) - frac).abs();
                    assert!(
                        resid < 1.0,
                        "decay residual too large: dim={dim} s={s} xi={xi}: {resid}"
                    );
                }
            }
        }
    }

    #[test]
    fn classical_sentinel_conventions() {
        let p = params(1, 1.0, 1.0);
        assert_eq!(p.q_hat_radial(7.3), 1.0);
        assert_eq!(p.q_l1_norm(), 1.0);
        assert_eq!(p.q_kernel_eval(0.2), 0.0);
        assert_eq!(p.d_kernel_eval(&[0.2]), vec![0.0]);
    }
}
