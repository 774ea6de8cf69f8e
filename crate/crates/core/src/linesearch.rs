//! Hager–Zhang line search, Armijo backtracking and the cost-average switch
//! between them.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchParams {
    pub c1: f64,
    pub c2: f64,
    /// Scale of the approximate-Wolfe allowance `ε_k = eps·|f_ref|`.
    pub eps: f64,
    pub alpha_max: f64,
    /// Bisection point inside the U3 update.
    pub theta: f64,
    /// Required bracket shrink per secant² step before bisecting.
    pub gamma_bracket: f64,
    /// Expansion factor while bracketing.
    pub rho: f64,
    pub max_bracket_iters: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            c1: 0.1,
            c2: 0.1,
            eps: 1e-14,
            alpha_max: 200.0,
            theta: 0.5,
            gamma_bracket: 0.66,
            rho: 5.0,
            max_bracket_iters: 50,
        }
    }
}

impl LineSearchParams {
    /// Requires `0 < c1 < 0.5`, `c1 ≤ c2`, `c2 < 1` (`c2 ≤ 1` in approximate mode).
    pub fn validate(&self, mode: WolfeMode) -> Result<()> {
        let c2_ok = match mode {
            WolfeMode::Standard => self.c2 < 1.0,
            WolfeMode::Approx => self.c2 <= 1.0,
        };
        if !(self.c1 > 0.0 && self.c1 < 0.5 && self.c1 <= self.c2 && c2_ok) {
            return Err(Error::InvalidArgument(format!(
                "line-search constants c1 = {}, c2 = {} out of range",
                self.c1, self.c2
            )));
        }
        if !(self.eps >= 0.0 && self.alpha_max > 0.0 && self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidArgument(
                "eps, alpha_max or theta out of range".into(),
            ));
        }
        if !(self.gamma_bracket > 0.0
            && self.gamma_bracket < 1.0
            && self.rho > 1.0
            && self.max_bracket_iters > 0)
        {
            return Err(Error::InvalidArgument(
                "bracketing parameters out of range".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WolfeMode {
    Standard,
    Approx,
}

/// `c₁αφ′(0) ≥ φ(α) − φ(0)` and `φ′(α) ≥ c₂φ′(0)`.
pub fn wolfe_check(
    phi0: f64,
    dphi0: f64,
    alpha: f64,
    phi_a: f64,
    dphi_a: f64,
    params: &LineSearchParams,
) -> Result<bool> {
    if dphi0 >= 0.0 {
        return Err(Error::NonDescent(dphi0));
    }
    Ok(params.c1 * alpha * dphi0 >= phi_a - phi0 && dphi_a >= params.c2 * dphi0)
}

/// `(2c₁ − 1)φ′(0) ≥ φ′(α) ≥ c₂φ′(0)` and `φ(α) ≤ φ(0) + ε_k`.
pub fn approx_wolfe_check(
    dphi0: f64,
    dphi_a: f64,
    phi_a: f64,
    phi0: f64,
    eps_k: f64,
    params: &LineSearchParams,
) -> bool {
    (2.0 * params.c1 - 1.0) * dphi0 >= dphi_a
        && dphi_a >= params.c2 * dphi0
        && phi_a <= phi0 + eps_k
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    /// The returned step satisfies the mode's acceptance predicate.
    Converged,
    /// Bracketing reached `alpha_max` without finding an upper bracket end.
    StepCap,
    /// Iteration budget exhausted; the best point seen is returned.
    MaxIterations,
    /// φ or φ′ evaluated to a non-finite value; step 0 returned.
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOutcome {
    pub alpha: f64,
    pub value: f64,
    pub slope: f64,
    pub evals: usize,
    pub status: SearchStatus,
}

/// Bracket `[a, b]` as recorded after each update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketRecord {
    pub a: f64,
    pub b: f64,
    pub phi_a: f64,
    pub dphi_a: f64,
    pub dphi_b: f64,
}

#[derive(Clone, Copy, Debug)]
struct Pt {
    x: f64,
    f: f64,
    d: f64,
}

enum Stop {
    Accept(Pt),
    NonFinite,
    Budget,
}

struct Search<'a, F: FnMut(f64) -> (f64, f64)> {
    phi: F,
    p: &'a LineSearchParams,
    mode: WolfeMode,
    phi0: f64,
    dphi0: f64,
    eps_k: f64,
    evals: usize,
    max_evals: usize,
    best: Pt,
    record: Option<&'a mut Vec<BracketRecord>>,
}

type Step<T> = std::result::Result<T, Stop>;

impl<F: FnMut(f64) -> (f64, f64)> Search<'_, F> {
    fn eval(&mut self, x: f64) -> Step<Pt> {
        if self.evals >= self.max_evals {
            return Err(Stop::Budget);
        }
        self.evals += 1;
        let (f, d) = (self.phi)(x);
        if !f.is_finite() || !d.is_finite() {
            return Err(Stop::NonFinite);
        }
        let pt = Pt { x, f, d };
        if f < self.best.f {
            self.best = pt;
        }
        if self.accepts(pt) {
            return Err(Stop::Accept(pt));
        }
        Ok(pt)
    }

    fn accepts(&self, c: Pt) -> bool {
        match self.mode {
            WolfeMode::Standard => {
                self.p.c1 * c.x * self.dphi0 >= c.f - self.phi0 && c.d >= self.p.c2 * self.dphi0
            }
            WolfeMode::Approx => {
                approx_wolfe_check(self.dphi0, c.d, c.f, self.phi0, self.eps_k, self.p)
            }
        }
    }

    fn low_ok(&self, c: Pt) -> bool {
        c.d < 0.0 && c.f <= self.phi0 + self.eps_k
    }

    fn note(&mut self, a: Pt, b: Pt) {
        debug_assert!(
            self.low_ok(a) && b.d >= 0.0,
            "opposite-slope bracket violated"
        );
        if let Some(rec) = self.record.as_deref_mut() {
            rec.push(BracketRecord {
                a: a.x,
                b: b.x,
                phi_a: a.f,
                dphi_a: a.d,
                dphi_b: b.d,
            });
        }
    }

    /// U3: bisect `[a, b]` where `b` has negative slope but too high a value.
    fn u3(&mut self, mut a: Pt, mut b: Pt) -> Step<(Pt, Pt)> {
        loop {
            let d = self.eval((1.0 - self.p.theta) * a.x + self.p.theta * b.x)?;
            if d.d >= 0.0 {
                return Ok((a, d));
            }
            if d.f <= self.phi0 + self.eps_k {
                a = d;
            } else {
                b = d;
            }
        }
    }

    fn update(&mut self, a: Pt, b: Pt, c: Pt) -> Step<(Pt, Pt)> {
        if !(c.x > a.x && c.x < b.x) {
            return Ok((a, b));
        }
        if c.d >= 0.0 {
            return Ok((a, c));
        }
        if c.f <= self.phi0 + self.eps_k {
            return Ok((c, b));
        }
        self.u3(a, c)
    }

    fn secant(a: Pt, b: Pt) -> f64 {
        (a.x * b.d - b.x * a.d) / (b.d - a.d)
    }

    fn point_at(&mut self, x: f64, a: Pt, b: Pt) -> Step<Option<Pt>> {
        if x > a.x && x < b.x && x.is_finite() {
            Ok(Some(self.eval(x)?))
        } else {
            Ok(None)
        }
    }

    fn secant2(&mut self, a: Pt, b: Pt) -> Step<(Pt, Pt)> {
        let cx = Self::secant(a, b);
        let Some(c) = self.point_at(cx, a, b)? else {
            return Ok((a, b));
        };
        let (na, nb) = self.update(a, b, c)?;
        let cbar = if c.x == nb.x {
            Some(Self::secant(b, nb))
        } else if c.x == na.x {
            Some(Self::secant(a, na))
        } else {
            None
        };
        match cbar {
            Some(x) => match self.point_at(x, na, nb)? {
                Some(cb) => self.update(na, nb, cb),
                None => Ok((na, nb)),
            },
            None => Ok((na, nb)),
        }
    }

    /// Returns an opposite-slope bracket, or `None` when `alpha_max` is hit.
    fn bracket(&mut self, start: Pt) -> Step<Option<(Pt, Pt)>> {
        let origin = Pt {
            x: 0.0,
            f: self.phi0,
            d: self.dphi0,
        };
        let mut low = origin;
        let mut c = start;
        loop {
            if c.d >= 0.0 {
                return Ok(Some((low, c)));
            }
            if c.f > self.phi0 + self.eps_k {
                return self.u3(origin, c).map(Some);
            }
            low = c;
            if c.x >= self.p.alpha_max {
                return Ok(None);
            }
            let next = (self.p.rho * c.x).min(self.p.alpha_max);
            c = self.eval(next)?;
        }
    }

    fn run(&mut self, c0: f64) -> Step<SearchStatus> {
        let start = self.eval(c0)?;
        let Some((mut a, mut b)) = self.bracket(start)? else {
            return Ok(SearchStatus::StepCap);
        };
        self.note(a, b);
        for _ in 0..self.p.max_bracket_iters {
            let width = b.x - a.x;
            let (mut na, mut nb) = self.secant2(a, b)?;
            self.note(na, nb);
            if nb.x - na.x > self.p.gamma_bracket * width {
                let mid = 0.5 * (na.x + nb.x);
                let c = self.eval(mid)?;
                (na, nb) = self.update(na, nb, c)?;
                self.note(na, nb);
            }
            (a, b) = (na, nb);
        }
        Ok(SearchStatus::MaxIterations)
    }
}

/// Hager–Zhang search along `φ`, which returns `(φ(α), φ′(α))`.
///
/// `c0` is the first trial step (clamped to `(0, alpha_max]`). The returned
/// step satisfies [`wolfe_check`] (Standard) or [`approx_wolfe_check`]
/// (Approx) exactly when the status is [`SearchStatus::Converged`].
pub fn hz_search<F>(
    phi: F,
    phi0: f64,
    dphi0: f64,
    c0: f64,
    params: &LineSearchParams,
    f_ref: f64,
    mode: WolfeMode,
) -> Result<SearchOutcome>
where
    F: FnMut(f64) -> (f64, f64),
{
    hz_search_recorded(phi, phi0, dphi0, c0, params, f_ref, mode, None)
}

/// [`hz_search`] that also appends every intermediate bracket to `record`.
#[allow(clippy::too_many_arguments)]
pub fn hz_search_recorded<F>(
    phi: F,
    phi0: f64,
    dphi0: f64,
    c0: f64,
    params: &LineSearchParams,
    f_ref: f64,
    mode: WolfeMode,
    record: Option<&mut Vec<BracketRecord>>,
) -> Result<SearchOutcome>
where
    F: FnMut(f64) -> (f64, f64),
{
    if !(dphi0 < 0.0) {
        return Err(Error::NonDescent(dphi0));
    }
    if !phi0.is_finite() {
        return Err(Error::InvalidArgument("φ(0) is not finite".into()));
    }
    let origin = Pt {
        x: 0.0,
        f: phi0,
        d: dphi0,
    };
    let c0 = if c0 > 0.0 && c0.is_finite() {
        c0.min(params.alpha_max)
    } else {
        1.0f64.min(params.alpha_max)
    };
    let mut s = Search {
        phi,
        p: params,
        mode,
        phi0,
        dphi0,
        eps_k: params.eps * f_ref.abs(),
        evals: 0,
        max_evals: 20 * params.max_bracket_iters + 50,
        best: origin,
        record,
    };
    let out = |pt: Pt, evals, status| SearchOutcome {
        alpha: pt.x,
        value: pt.f,
        slope: pt.d,
        evals,
        status,
    };
    match s.run(c0) {
        Err(Stop::Accept(pt)) => Ok(out(pt, s.evals, SearchStatus::Converged)),
        Err(Stop::NonFinite) => Ok(out(origin, s.evals, SearchStatus::NonFinite)),
        Err(Stop::Budget) => Ok(out(s.best, s.evals, SearchStatus::MaxIterations)),
        Ok(SearchStatus::StepCap) => {
            let (f, d) = (s.phi)(params.alpha_max);
            Ok(out(
                Pt {
                    x: params.alpha_max,
                    f,
                    d,
                },
                s.evals + 1,
                SearchStatus::StepCap,
            ))
        }
        Ok(status) => Ok(out(s.best, s.evals, status)),
    }
}

/// Global minimizer over `α > 0` of `c₀ + c₁α + … + c₄α⁴`, found among the
/// real roots of the derivative. The flag is set when no positive local
/// minimum exists and the fallback step 1 is returned.
pub fn initial_quartic_step(coeffs: &[f64; 5]) -> Result<(f64, bool)> {
    if coeffs.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidArgument("all-zero polynomial".into()));
    }
    let eval = |x: f64| coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
    let deriv = [coeffs[1], 2.0 * coeffs[2], 3.0 * coeffs[3], 4.0 * coeffs[4]];
    let second = |x: f64| 2.0 * coeffs[2] + 6.0 * coeffs[3] * x + 12.0 * coeffs[4] * x * x;
    let mut best: Option<(f64, f64)> = None;
    for x in real_roots_cubic(&deriv) {
        if x > 0.0 && second(x) >= 0.0 {
            let v = eval(x);
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((x, v));
            }
        }
    }
    Ok(match best {
        Some((x, _)) => (x, false),
        None => (1.0, true),
    })
}

/// Real roots of `c₀ + c₁x + c₂x² + c₃x³`, polished by Newton steps.
fn real_roots_cubic(c: &[f64; 4]) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-14 * scale;
    let raw: Vec<f64> = if c[3].abs() > tiny {
        let comp = Matrix3::new(
            0.0,
            0.0,
            -c[0] / c[3],
            1.0,
            0.0,
            -c[1] / c[3],
            0.0,
            1.0,
            -c[2] / c[3],
        );
        comp.complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect()
    } else if c[2].abs() > tiny {
        let disc = c[1] * c[1] - 4.0 * c[2] * c[0];
        if disc < 0.0 {
            vec![]
        } else {
            let s = disc.sqrt();
            vec![(-c[1] + s) / (2.0 * c[2]), (-c[1] - s) / (2.0 * c[2])]
        }
    } else if c[1].abs() > tiny {
        vec![-c[0] / c[1]]
    } else {
        vec![]
    };
    let p = |x: f64| ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
    let dp = |x: f64| (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1];
    raw.into_iter()
        .map(|mut x| {
            for _ in 0..3 {
                let d = dp(x);
                if d == 0.0 {
                    break;
                }
                let nx = x - p(x) / d;
                if !nx.is_finite() {
                    break;
                }
                x = nx;
            }
            x
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmijoOutcome {
    pub alpha: f64,
    pub value: f64,
    pub halvings: usize,
    pub success: bool,
}

/// Smallest `t < L` with `φ(0) − φ(0.5ᵗα₀) ≥ −c₁·0.5ᵗα₀·φ′(0)`.
pub fn armijo_backtrack<F: FnMut(f64) -> f64>(
    mut phi: F,
    phi0: f64,
    dphi0: f64,
    alpha0: f64,
    c1: f64,
    max_halvings: usize,
) -> ArmijoOutcome {
    let mut alpha = alpha0;
    for t in 0..max_halvings {
        let v = phi(alpha);
        if v.is_finite() && phi0 - v >= -c1 * alpha * dphi0 {
            return ArmijoOutcome {
                alpha,
                value: v,
                halvings: t,
                success: true,
            };
        }
        alpha *= 0.5;
    }
    ArmijoOutcome {
        alpha: 0.0,
        value: phi0,
        halvings: max_halvings,
        success: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LsFlag {
    Armijo,
    Hz,
}

/// Running cost average that decides the permanent switch to HZ steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchState {
    pub c: f64,
    pub q: f64,
    pub flag: LsFlag,
    pub omega: f64,
    pub delta: f64,
}

impl SwitchState {
    pub fn new(omega: f64, delta: f64, flag: LsFlag) -> Self {
        Self {
            c: 0.0,
            q: 0.0,
            flag,
            omega,
            delta,
        }
    }

    /// Folds `f_prev` into `(Q, C)`, then flips to HZ if
    /// `|f_new − f_prev| ≤ ωC` or the Armijo step failed.
    pub fn update(&mut self, f_prev: f64, f_new: f64, armijo_ok: bool) -> bool {
        self.q = 1.0 + self.q * self.delta;
        self.c += (f_prev.abs() - self.c) / self.q;
        let fire = (f_new - f_prev).abs() <= self.omega * self.c || !armijo_ok;
        if fire {
            self.flag = LsFlag::Hz;
        }
        fire
    }
}
