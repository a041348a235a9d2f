//! Conformal-factor representations. A profile is either a list of analytic
//! terms (differentiated in closed form) or a sampled function backed by a
//! piecewise-Chebyshev interpolant. Near the origin, smooth profiles are
//! represented in the variable u = r^2, which enforces w'(0) = 0 structurally.

use crate::cheb::{lobatto_points, ChebSeries};
use crate::error::{QcurvError, Result};
use crate::jet::Jet;

/// Analytic term kinds: c ln(1 + r^2/rho^2), c ln r, c r^p. The basis is
/// closed under the derivatives the toolkit needs and expresses the round
/// sphere, cylinder ends and the w_a family exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    Log1pSq { rho: f64 },
    Log,
    Power { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub kind: TermKind,
}

impl Term {
    /// Derivatives d^k/dr^k for k = 0..=order, exact.
    fn derivs(&self, r: f64, order: usize) -> Vec<f64> {
        let c = self.coeff;
        let mut out = Vec::with_capacity(order + 1);
        match self.kind {
            TermKind::Log1pSq { rho } => {
                out.push(c * (r * r / (rho * rho)).ln_1p());
                // d^k/dr^k ln(rho^2 + r^2) = (-1)^(k-1) (k-1)! 2 Re (r + i rho)^-k.
                let big_r = (r * r + rho * rho).sqrt();
                let phi = rho.atan2(r);
                let mut fact = 1.0;
                for k in 1..=order {
                    if k > 1 {
                        fact *= (k - 1) as f64;
                    }
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    let re = big_r.powi(-(k as i32)) * (k as f64 * phi).cos();
                    out.push(c * sign * fact * 2.0 * re);
                }
            }
            TermKind::Log => {
                out.push(c * r.ln());
                let mut fact = 1.0;
                for k in 1..=order {
                    if k > 1 {
                        fact *= (k - 1) as f64;
                    }
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    out.push(c * sign * fact * r.powi(-(k as i32)));
                }
            }
            TermKind::Power { p } => {
                let mut falling = 1.0;
                for k in 0..=order {
                    if k > 0 {
                        falling *= p - (k - 1) as f64;
                    }
                    if falling == 0.0 {
                        out.push(0.0);
                        continue;
                    }
                    let expo = p - k as f64;
                    let val = if expo == 0.0 {
                        1.0
                    } else if r == 0.0 {
                        if expo > 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        r.powf(expo)
                    };
                    out.push(c * falling * val);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum PanelVar {
    R,
    /// Series in u = r^2; used on the first panel of smooth-at-origin
    /// profiles so that odd derivatives vanish at r = 0 by construction.
    RSquared,
}

#[derive(Debug, Clone)]
struct Panel {
    lo: f64,
    hi: f64,
    var: PanelVar,
    series: ChebSeries,
}

impl Panel {
    fn jet(&self, r: f64, order: usize) -> Jet {
        match self.var {
            PanelVar::R => {
                let d = self.series.derivs(r, order);
                Jet::from_derivs(&d)
            }
            PanelVar::RSquared => {
                let u = r * r;
                let du = self.series.derivs(u, order);
                let outer = Jet::from_derivs(&du);
                // u(r0 + h) - u(r0) = 2 r0 h + h^2.
                let mut inner = Jet::zero(order);
                if order >= 1 {
                    inner.c[1] = 2.0 * r;
                }
                if order >= 2 {
                    inner.c[2] = 1.0;
                }
                outer.compose(&inner)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sampled {
    panels: Vec<Panel>,
    pub r_lo: f64,
    pub r_hi: f64,
    pub max_order: usize,
}

impl Sampled {
    fn panel_for(&self, r: f64) -> Option<&Panel> {
        self.panels
            .iter()
            .find(|p| r >= p.lo && r <= p.hi)
            .or_else(|| self.panels.last().filter(|p| r <= p.hi * (1.0 + 1e-12)))
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Analytic(Vec<Term>),
    Sampled(Sampled),
    /// Weighted sum of sub-profiles; keeps exact jet access for mixed
    /// analytic/sampled combinations without resampling.
    Sum(Vec<(f64, RadialProfile)>),
}

/// A radial conformal factor w(r) with derivative access.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    repr: Repr,
    punctured: bool,
}

impl RadialProfile {
    pub fn analytic(terms: Vec<Term>, punctured: bool) -> Result<RadialProfile> {
        if !punctured {
            for t in &terms {
                match t.kind {
                    TermKind::Log if t.coeff != 0.0 => {
                        return Err(QcurvError::Profile(
                            "log terms require a punctured-at-origin profile".into(),
                        ))
                    }
                    TermKind::Power { p } if p < 0.0 && t.coeff != 0.0 => {
                        return Err(QcurvError::Profile(
                            "negative powers require a punctured-at-origin profile".into(),
                        ))
                    }
                    TermKind::Power { p } if p == 1.0 && t.coeff != 0.0 => {
                        return Err(QcurvError::Profile(
                            "linear terms violate w'(0) = 0 for smooth profiles".into(),
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(RadialProfile {
            repr: Repr::Analytic(terms),
            punctured,
        })
    }

    pub fn zero() -> RadialProfile {
        RadialProfile::analytic(vec![], false).unwrap()
    }

    pub fn constant(c: f64) -> RadialProfile {
        RadialProfile::analytic(
            vec![Term {
                coeff: c,
                kind: TermKind::Power { p: 0.0 },
            }],
            false,
        )
        .unwrap()
    }

    /// w_a(r) = (a/2) ln(1 + r^2); asymptotic exponent a at infinity.
    pub fn w_a(a: f64) -> RadialProfile {
        RadialProfile::analytic(
            vec![Term {
                coeff: a / 2.0,
                kind: TermKind::Log1pSq { rho: 1.0 },
            }],
            false,
        )
        .unwrap()
    }

    /// Stereographic round-sphere factor w = ln 2 - ln(1 + r^2).
    pub fn round_sphere() -> RadialProfile {
        RadialProfile::analytic(
            vec![
                Term {
                    coeff: -1.0,
                    kind: TermKind::Log1pSq { rho: 1.0 },
                },
                Term {
                    coeff: std::f64::consts::LN_2,
                    kind: TermKind::Power { p: 0.0 },
                },
            ],
            false,
        )
        .unwrap()
    }

    /// Cylinder factor w = -ln r on the punctured space.
    pub fn cylinder() -> RadialProfile {
        RadialProfile::analytic(
            vec![Term {
                coeff: -1.0,
                kind: TermKind::Log,
            }],
            true,
        )
        .unwrap()
    }

    pub fn punctured(&self) -> bool {
        self.punctured
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.repr, Repr::Analytic(_))
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match &self.repr {
            Repr::Analytic(t) => Some(t),
            _ => None,
        }
    }

    /// Domain hull [r_lo, r_hi]; analytic profiles are unbounded.
    pub fn hull(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Analytic(_) => {
                if self.punctured {
                    (f64::MIN_POSITIVE, f64::INFINITY)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
            Repr::Sampled(s) => (s.r_lo, s.r_hi),
            Repr::Sum(parts) => {
                let mut lo = if self.punctured { f64::MIN_POSITIVE } else { 0.0 };
                let mut hi = f64::INFINITY;
                for (_, p) in parts {
                    let (a, b) = p.hull();
                    lo = lo.max(a);
                    hi = hi.min(b);
                }
                (lo, hi)
            }
        }
    }

    fn check_point(&self, r: f64) -> Result<()> {
        if r < 0.0 || !r.is_finite() {
            return Err(QcurvError::Domain(format!("radius {r} not in [0, inf)")));
        }
        if self.punctured && r == 0.0 {
            return Err(QcurvError::Domain(
                "profile is punctured at the origin; r must be positive".into(),
            ));
        }
        if let Repr::Sampled(s) = &self.repr {
            if r < s.r_lo * (1.0 - 1e-12) || r > s.r_hi * (1.0 + 1e-12) {
                return Err(QcurvError::Domain(format!(
                    "radius {r} outside sampled hull [{}, {}]",
                    s.r_lo, s.r_hi
                )));
            }
        }
        Ok(())
    }

    pub fn max_order(&self) -> usize {
        match &self.repr {
            Repr::Analytic(_) => 16,
            Repr::Sampled(s) => s.max_order,
            Repr::Sum(parts) => parts.iter().map(|(_, p)| p.max_order()).min().unwrap_or(16),
        }
    }

    /// Taylor jet of w about r, to the requested derivative order.
    pub fn jet(&self, r: f64, order: usize) -> Result<Jet> {
        self.check_point(r)?;
        if order > self.max_order() {
            return Err(QcurvError::Order(format!(
                "order {order} exceeds supported order {}",
                self.max_order()
            )));
        }
        match &self.repr {
            Repr::Analytic(terms) => {
                let mut acc = vec![0.0; order + 1];
                for t in terms {
                    for (k, d) in t.derivs(r, order).into_iter().enumerate() {
                        acc[k] += d;
                    }
                }
                Ok(Jet::from_derivs(&acc))
            }
            Repr::Sampled(s) => {
                let p = s.panel_for(r).ok_or_else(|| {
                    QcurvError::Domain(format!("radius {r} outside sampled hull"))
                })?;
                Ok(p.jet(r, order))
            }
            Repr::Sum(parts) => {
                let mut acc = Jet::zero(order);
                for (c, p) in parts {
                    acc = acc.add(&p.jet(r, order)?.scale(*c));
                }
                Ok(acc)
            }
        }
    }

    /// d^order w / dr^order at r.
    pub fn eval(&self, r: f64, order: usize) -> Result<f64> {
        Ok(self.jet(r, order)?.deriv(order))
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        self.eval(r, 0)
    }

    /// Sum of two profiles: analytic pairs concatenate term lists, other
    /// combinations form an exact weighted-sum representation.
    pub fn add(&self, other: &RadialProfile) -> Result<RadialProfile> {
        match (&self.repr, &other.repr) {
            (Repr::Analytic(a), Repr::Analytic(b)) => {
                let mut terms = a.clone();
                terms.extend(b.iter().cloned());
                Ok(RadialProfile {
                    repr: Repr::Analytic(terms),
                    punctured: self.punctured || other.punctured,
                })
            }
            _ => Ok(RadialProfile {
                repr: Repr::Sum(vec![(1.0, self.clone()), (1.0, other.clone())]),
                punctured: self.punctured || other.punctured,
            }),
        }
    }

    /// Weighted sum of profiles.
    pub fn linear_combination(parts: &[(f64, RadialProfile)]) -> Result<RadialProfile> {
        if parts.is_empty() {
            return Ok(RadialProfile::zero());
        }
        if parts.len() == 1 && parts[0].0 == 1.0 {
            return Ok(parts[0].1.clone());
        }
        let punctured = parts.iter().any(|(_, p)| p.punctured());
        Ok(RadialProfile {
            repr: Repr::Sum(parts.to_vec()),
            punctured,
        })
    }

    pub fn scale(&self, s: f64) -> Result<RadialProfile> {
        match &self.repr {
            Repr::Analytic(terms) => Ok(RadialProfile {
                repr: Repr::Analytic(
                    terms
                        .iter()
                        .map(|t| Term {
                            coeff: t.coeff * s,
                            kind: t.kind.clone(),
                        })
                        .collect(),
                ),
                punctured: self.punctured,
            }),
            Repr::Sampled(sampled) => {
                let mut scaled = sampled.clone();
                for panel in &mut scaled.panels {
                    for c in &mut panel.series.coef {
                        *c *= s;
                    }
                }
                Ok(RadialProfile {
                    repr: Repr::Sampled(scaled),
                    punctured: self.punctured,
                })
            }
            Repr::Sum(parts) => Ok(RadialProfile {
                repr: Repr::Sum(parts.iter().map(|(c, p)| (c * s, p.clone())).collect()),
                punctured: self.punctured,
            }),
        }
    }

    /// Build a sampled profile from a function, on [r_lo, r_hi], resolving
    /// each geometric panel to near machine precision.
    pub fn from_function(
        f: &dyn Fn(f64) -> f64,
        r_lo: f64,
        r_hi: f64,
        max_order: usize,
        punctured: bool,
    ) -> Result<RadialProfile> {
        Self::from_function_with_floor(f, r_lo, r_hi, max_order, punctured, 1e-13)
    }

    /// Same, with an explicit relative noise floor for the panel resolution
    /// test. Values carrying quadrature noise must not be refined below it.
    pub fn from_function_with_floor(
        f: &dyn Fn(f64) -> f64,
        r_lo: f64,
        r_hi: f64,
        max_order: usize,
        punctured: bool,
        noise_floor: f64,
    ) -> Result<RadialProfile> {
        if !(r_hi > r_lo) || r_lo < 0.0 {
            return Err(QcurvError::Domain(format!(
                "invalid sampling range [{r_lo}, {r_hi}]"
            )));
        }
        if punctured && r_lo <= 0.0 {
            return Err(QcurvError::Domain(
                "punctured profiles need r_lo > 0".into(),
            ));
        }
        let mut panels = Vec::new();
        let mut lo;
        if !punctured && r_lo == 0.0 {
            // First panel in u = r^2 reaching to min(1, r_hi/4).
            let h0 = (r_hi / 4.0).min(1.0);
            push_panels_u(f, 0.0, h0, 0, noise_floor, &mut panels)?;
            lo = h0;
        } else {
            lo = r_lo;
        }
        while lo < r_hi * (1.0 - 1e-12) {
            let hi = (lo * 2.0).min(r_hi).max(lo + 1e-6);
            push_panels_r(f, lo, hi, 0, noise_floor, &mut panels)?;
            lo = hi;
        }
        Ok(RadialProfile {
            repr: Repr::Sampled(Sampled {
                panels,
                r_lo,
                r_hi,
                max_order,
            }),
            punctured,
        })
    }

    /// Build a sampled profile from user samples on a strictly increasing
    /// grid. Panels are least-squares Chebyshev fits over sample blocks.
    pub fn from_samples(
        r: &[f64],
        w: &[f64],
        max_order: usize,
        punctured: bool,
    ) -> Result<RadialProfile> {
        if r.len() != w.len() || r.len() < 8 {
            return Err(QcurvError::Profile(
                "sampled profiles need at least 8 matching (r, w) samples".into(),
            ));
        }
        for pair in r.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(QcurvError::Profile(
                    "sample grid must be strictly increasing".into(),
                ));
            }
        }
        if r[0] < 0.0 {
            return Err(QcurvError::Profile("radii must be nonnegative".into()));
        }
        if punctured && r[0] == 0.0 {
            return Err(QcurvError::Profile(
                "punctured profile cannot include r = 0".into(),
            ));
        }
        let mut panels = Vec::new();
        let mut idx = 0usize;
        let n = r.len();
        // Smooth-at-origin leading block fitted in u = r^2.
        if !punctured && r[0] < 1e-8 {
            let mut end = 1;
            while end < n && r[end] <= r[1].max(1e-3) * 8.0 && end < 40 {
                end += 1;
            }
            let xs: Vec<f64> = r[..end].iter().map(|v| v * v).collect();
            let deg = ((end - 1) * 2 / 3).clamp(3, 12);
            let (series, _res) = ChebSeries::fit(&xs, &w[..end], deg, 0.0, xs[end - 1]);
            panels.push(Panel {
                lo: r[0],
                hi: r[end - 1],
                var: PanelVar::RSquared,
                series,
            });
            idx = end - 1;
        }
        while idx + 1 < n {
            let lo = r[idx];
            let mut end = idx + 1;
            while end + 1 < n && (r[end + 1] <= lo.max(1e-6) * 4.0 || end - idx < 12) && end - idx < 40
            {
                end += 1;
            }
            let count = end - idx + 1;
            let deg = (count * 2 / 3).clamp(3, 14);
            let (series, _res) = ChebSeries::fit(&r[idx..=end], &w[idx..=end], deg, lo, r[end]);
            panels.push(Panel {
                lo,
                hi: r[end],
                var: PanelVar::R,
                series,
            });
            idx = end;
        }
        let profile = RadialProfile {
            repr: Repr::Sampled(Sampled {
                panels,
                r_lo: r[0],
                r_hi: r[n - 1],
                max_order,
            }),
            punctured,
        };
        if !punctured && r[0] < 1e-8 {
            // Grids reaching the origin must satisfy w'(0) = 0.
            let wdot = profile.eval(r[0], 1)?;
            let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            if wdot.abs() > 1e-4 * scale {
                return Err(QcurvError::Profile(format!(
                    "profile declared smooth at origin but w'({}) = {wdot:e}",
                    r[0]
                )));
            }
        }
        Ok(profile)
    }
}

// Panels grow in degree before they split: large panels at the lowest
// resolving degree minimize the noise amplification of high-order spectral
// derivatives, which scales like (2 deg^2 / len)^order.
fn resolve_series(
    sample: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    floor: f64,
) -> Option<ChebSeries> {
    for deg in [16usize, 24, 32] {
        let pts = lobatto_points(deg, a, b);
        let vals: Vec<f64> = pts.iter().map(|&x| sample(x)).collect();
        let series = ChebSeries::interpolate(&vals, a, b);
        if series.tail_measure() < floor.max(1e-13) {
            return Some(series);
        }
    }
    None
}

fn push_panels_r(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    depth: usize,
    floor: f64,
    out: &mut Vec<Panel>,
) -> Result<()> {
    match resolve_series(&|x| f(x), lo, hi, floor) {
        Some(series) => {
            out.push(Panel {
                lo,
                hi,
                var: PanelVar::R,
                series,
            });
            Ok(())
        }
        None if depth < 4 => {
            let mid = 0.5 * (lo + hi);
            push_panels_r(f, lo, mid, depth + 1, floor, out)?;
            push_panels_r(f, mid, hi, depth + 1, floor, out)
        }
        None => {
            let pts = lobatto_points(32, lo, hi);
            let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
            out.push(Panel {
                lo,
                hi,
                var: PanelVar::R,
                series: ChebSeries::interpolate(&vals, lo, hi),
            });
            Ok(())
        }
    }
}

fn push_panels_u(
    f: &dyn Fn(f64) -> f64,
    r_lo: f64,
    r_hi: f64,
    depth: usize,
    floor: f64,
    out: &mut Vec<Panel>,
) -> Result<()> {
    let u_lo = r_lo * r_lo;
    let u_hi = r_hi * r_hi;
    let sample = |u: f64| f(u.max(0.0).sqrt());
    match resolve_series(&sample, u_lo, u_hi, floor) {
        Some(series) => {
            out.push(Panel {
                lo: r_lo,
                hi: r_hi,
                var: PanelVar::RSquared,
                series,
            });
            Ok(())
        }
        None if depth < 4 => {
            let mid = 0.5 * (r_lo + r_hi);
            push_panels_u(f, r_lo, mid, depth + 1, floor, out)?;
            push_panels_r(f, mid, r_hi, depth + 1, floor, out)
        }
        None => {
            let pts = lobatto_points(32, u_lo, u_hi);
            let vals: Vec<f64> = pts.iter().map(|&u| sample(u)).collect();
            out.push(Panel {
                lo: r_lo,
                hi: r_hi,
                var: PanelVar::RSquared,
                series: ChebSeries::interpolate(&vals, u_lo, u_hi),
            });
            Ok(())
        }
    }
}

/// Geometric sample grid recommended for sampled profiles: a dense block near
/// the origin followed by geometric spacing out to r_max.
pub fn recommended_grid(r_max: f64, points: usize) -> Vec<f64> {
    let points = points.max(32);
    let mut grid = Vec::with_capacity(points);
    grid.push(0.0);
    let r_min = 1e-3 * r_max.min(1.0);
    let ratio = (r_max / r_min).powf(1.0 / (points - 2) as f64);
    let mut r = r_min;
    for _ in 0..points - 1 {
        grid.push(r);
        r *= ratio;
    }
    let last = grid.len() - 1;
    grid[last] = r_max;
    grid
}
