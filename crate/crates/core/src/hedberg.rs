//! Pointwise Hedberg bound for the product fractional integral.
//!
//! The convolution at a point is split at radii `(r1, r2)` into four
//! regions. Each region integral is bounded by an explicit constant times a
//! power of the radii and one of `M f`, `||M1 f(x, .)||_p`,
//! `||M2 f(., y)||_p` or `||f||_p`. Choosing the radii to balance the bounds
//! collapses everything to `(M f)^(p/q) ||f||^(1-p/q)` or, when the mixed
//! function `G f` is the larger one, `(G f)^(p/q) ||f||^(1-2p/q)`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convolution::{RegionBounds, SplitTable};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridPoint};
use crate::kernel::{riesz_kernel, unit_sphere_area, ExponentViolation, Exponents, BALANCE_TOLERANCE};
use crate::maximal::{strong_maximal, MixedNorms, WindowFamily};

pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;

/// Relative tolerance of the radius-balancing postconditions.
pub const BALANCE_IDENTITY_TOLERANCE: f64 = 1e-12;

/// Relative tolerance of the region partition identity.
pub const PARTITION_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    R11,
    R12,
    R21,
    R22,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::R11 => "11",
            Region::R12 => "12",
            Region::R21 => "21",
            Region::R22 => "22",
        };
        f.write_str(s)
    }
}

/// Outcome of the three admissibility checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `|1/p - 1/q - alpha/m|` and `|alpha/m - beta/n|`, the larger of the two.
    pub balance_gap: f64,
    pub balanced: bool,
    /// `|1/q - (1/p - (alpha+beta)/(m+n))|`.
    pub joint_gap: f64,
    pub joint_identity: bool,
    /// `m - alpha p`, positive iff the x-tail of the kernel is in `L^p'`.
    pub tail_margin_x: f64,
    /// `n - beta p`.
    pub tail_margin_y: f64,
    pub violation: Option<ExponentViolation>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.violation.is_none()
    }

    pub fn require(&self) -> Result<()> {
        match &self.violation {
            None => Ok(()),
            Some(v) => Err(v.clone().into()),
        }
    }
}

pub fn check_exponents(exps: &Exponents) -> AdmissibilityReport {
    let (m, n) = (exps.m() as f64, exps.n() as f64);
    let (a, b, p, q) = (exps.alpha(), exps.beta(), exps.p(), exps.q());
    let gap = exps.gap();
    let balance_gap = (gap - a / m).abs().max((a / m - b / n).abs());
    let balanced = balance_gap <= BALANCE_TOLERANCE;
    let joint_gap = (1.0 / q - (1.0 / p - (a + b) / (m + n))).abs();
    let joint_identity = joint_gap <= BALANCE_TOLERANCE;
    // (d - a) p' > d  <=>  d - a p > 0
    let tail_margin_x = m - a * p;
    let tail_margin_y = n - b * p;
    let violation = if !balanced {
        Some(ExponentViolation::Unbalanced {
            gap,
            alpha_over_m: a / m,
            beta_over_n: b / n,
        })
    } else if tail_margin_x <= 0.0 {
        Some(ExponentViolation::TailX {
            margin: tail_margin_x,
        })
    } else if tail_margin_y <= 0.0 {
        Some(ExponentViolation::TailY {
            margin: tail_margin_y,
        })
    } else {
        None
    };
    AdmissibilityReport {
        balance_gap,
        balanced,
        joint_gap,
        joint_identity,
        tail_margin_x,
        tail_margin_y,
        violation,
    }
}

/// `int_{|u| <= 1} |u|^(a-d) du = sigma_d / a`.
pub fn inner_constant(dim: usize, exponent: f64) -> f64 {
    unit_sphere_area(dim) / exponent
}

/// `(int_{|u| > 1} |u|^((a-d) p') du)^(1/p')`, finite iff `d - a p > 0`.
pub fn tail_constant(dim: usize, exponent: f64, p: f64) -> f64 {
    let dual = p / (p - 1.0);
    let decay = (dim as f64 - exponent) * dual;
    (unit_sphere_area(dim) / (decay - dim as f64)).powf(1.0 / dual)
}

fn require_tails(exps: &Exponents, x: bool, y: bool) -> Result<()> {
    let rep = check_exponents(exps);
    if x && rep.tail_margin_x <= 0.0 {
        return Err(ExponentViolation::TailX {
            margin: rep.tail_margin_x,
        }
        .into());
    }
    if y && rep.tail_margin_y <= 0.0 {
        return Err(ExponentViolation::TailY {
            margin: rep.tail_margin_y,
        }
        .into());
    }
    Ok(())
}

/// The constants `c11, c12, c21, c22` of the four region bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionConstants {
    pub c11: f64,
    pub c12: f64,
    pub c21: f64,
    pub c22: f64,
}

impl RegionConstants {
    pub fn new(exps: &Exponents) -> Self {
        let ix = inner_constant(exps.m(), exps.alpha());
        let iy = inner_constant(exps.n(), exps.beta());
        let tx = tail_constant(exps.m(), exps.alpha(), exps.p());
        let ty = tail_constant(exps.n(), exps.beta(), exps.p());
        Self {
            c11: ix * iy,
            c12: ix * ty,
            c21: tx * iy,
            c22: tx * ty,
        }
    }
}

fn x_tail_power(exps: &Exponents) -> f64 {
    exps.alpha() - exps.m() as f64 / exps.p()
}

fn y_tail_power(exps: &Exponents) -> f64 {
    exps.beta() - exps.n() as f64 / exps.p()
}

/// `c11 M f r1^alpha r2^beta`.
pub fn bound_region11(mf_at_point: f64, r1: f64, r2: f64, exps: &Exponents) -> f64 {
    RegionConstants::new(exps).c11 * mf_at_point * r1.powf(exps.alpha()) * r2.powf(exps.beta())
}

/// `c12 ||M1 f(x, .)||_p r1^alpha r2^(beta - n/p)`.
pub fn bound_region12(n1_at_x: f64, r1: f64, r2: f64, exps: &Exponents) -> Result<f64> {
    require_tails(exps, false, true)?;
    Ok(RegionConstants::new(exps).c12 * n1_at_x * r1.powf(exps.alpha()) * r2.powf(y_tail_power(exps)))
}

/// `c21 ||M2 f(., y)||_p r1^(alpha - m/p) r2^beta`.
pub fn bound_region21(n2_at_y: f64, r1: f64, r2: f64, exps: &Exponents) -> Result<f64> {
    require_tails(exps, true, false)?;
    Ok(RegionConstants::new(exps).c21 * n2_at_y * r1.powf(x_tail_power(exps)) * r2.powf(exps.beta()))
}

/// `c22 ||f||_p r1^(alpha - m/p) r2^(beta - n/p)`.
pub fn bound_region22(f_norm: f64, r1: f64, r2: f64, exps: &Exponents) -> Result<f64> {
    require_tails(exps, true, true)?;
    Ok(RegionConstants::new(exps).c22 * f_norm * r1.powf(x_tail_power(exps)) * r2.powf(y_tail_power(exps)))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Degenerate(format!("{name} must be positive and finite, got {v}")))
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn check_identity(what: &str, lhs: f64, rhs: f64, tol: f64) -> Result<()> {
    let d = rel_diff(lhs, rhs);
    if d <= tol {
        Ok(())
    } else {
        Err(Error::Postcondition(format!(
            "{what}: {lhs} vs {rhs} (relative {d:e})"
        )))
    }
}

/// Solves `r1^(-m/p) r2^(-n/p) = level` and `r1^(-m/p) / r2^(-n/p) = n1/n2`.
fn balance_radii(level: f64, n1: f64, n2: f64, exps: &Exponents) -> Result<(f64, f64)> {
    let p = exps.p();
    let (m, n) = (exps.m() as f64, exps.n() as f64);
    let r1 = (level * (n1 / n2)).powf(-p / (2.0 * m));
    let r2 = (level * (n2 / n1)).powf(-p / (2.0 * n));
    positive("r1", r1)?;
    positive("r2", r2)?;
    let a = r1.powf(-m / p);
    let b = r2.powf(-n / p);
    check_identity("r1^(-m/p) r2^(-n/p)", a * b, level, BALANCE_IDENTITY_TOLERANCE)?;
    check_identity("r1^(-m/p) / r2^(-n/p)", a / b, n1 / n2, BALANCE_IDENTITY_TOLERANCE)?;
    Ok((r1, r2))
}

/// Radii balancing regions 11 and 22 against each other when `M f` dominates.
pub fn select_radii_case1(m_value: f64, n1: f64, n2: f64, f_norm: f64, exps: &Exponents) -> Result<(f64, f64)> {
    for (name, v) in [("m_value", m_value), ("n1", n1), ("n2", n2), ("f_norm", f_norm)] {
        positive(name, v)?;
    }
    balance_radii(m_value / f_norm, n1, n2, exps)
}

/// As case 1 with `M f / ||f||` replaced by `G f / ||f||^2`.
pub fn select_radii_case2(g_value: f64, n1: f64, n2: f64, f_norm: f64, exps: &Exponents) -> Result<(f64, f64)> {
    for (name, v) in [("g_value", g_value), ("n1", n1), ("n2", n2), ("f_norm", f_norm)] {
        positive(name, v)?;
    }
    balance_radii(g_value / (f_norm * f_norm), n1, n2, exps)
}

/// Factors between the discrete region integrals and the analytic bounds.
///
/// An inner group costs the dyadic rounding of the window radius, `2^d`,
/// times the layer-cake envelope `2^(d-a)`. A tail group costs the
/// midpoint error of the first lattice shell, at most 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub inner_x: f64,
    pub inner_y: f64,
    pub tail_x: f64,
    pub tail_y: f64,
}

impl Slack {
    pub fn new(exps: &Exponents) -> Self {
        let inner = |d: usize, a: f64| 2f64.powi(d as i32) * 2f64.powf(d as f64 - a);
        Self {
            inner_x: inner(exps.m(), exps.alpha()),
            inner_y: inner(exps.n(), exps.beta()),
            tail_x: 2.0,
            tail_y: 2.0,
        }
    }

    pub fn region(&self, region: Region) -> f64 {
        match region {
            Region::R11 => self.inner_x * self.inner_y,
            Region::R12 => self.inner_x * self.tail_y,
            Region::R21 => self.tail_x * self.inner_y,
            Region::R22 => self.tail_x * self.tail_y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBounds {
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
}

impl AnalyticBounds {
    pub fn get(&self, region: Region) -> f64 {
        match region {
            Region::R11 => self.b11,
            Region::R12 => self.b12,
            Region::R21 => self.b21,
            Region::R22 => self.b22,
        }
    }
}

fn region_value(rb: &RegionBounds, region: Region) -> f64 {
    match region {
        Region::R11 => rb.t11,
        Region::R12 => rb.t12,
        Region::R21 => rb.t21,
        Region::R22 => rb.t22,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HedbergCertificate {
    pub point: GridPoint,
    /// 1 when `G f <= M f ||f||_p`, else 2; 0 for `f = 0`.
    pub case_id: u8,
    pub r1: f64,
    pub r2: f64,
    pub region_bounds: RegionBounds,
    pub analytic_bounds: AnalyticBounds,
    pub slack: Slack,
    pub m_value: f64,
    pub g_value: f64,
    pub n1: f64,
    pub n2: f64,
    pub f_norm: f64,
    pub final_bound: f64,
    /// `(f * Omega)(point)`.
    pub lhs: f64,
    /// `lhs / final_bound`, zero when both vanish.
    pub ratio: f64,
}

impl HedbergCertificate {
    fn zero(point: GridPoint, slack: Slack) -> Self {
        let rb = RegionBounds {
            t11: 0.0,
            t12: 0.0,
            t21: 0.0,
            t22: 0.0,
            r1: 0.0,
            r2: 0.0,
        };
        Self {
            point,
            case_id: 0,
            r1: 0.0,
            r2: 0.0,
            region_bounds: rb,
            analytic_bounds: AnalyticBounds {
                b11: 0.0,
                b12: 0.0,
                b21: 0.0,
                b22: 0.0,
            },
            slack,
            m_value: 0.0,
            g_value: 0.0,
            n1: 0.0,
            n2: 0.0,
            f_norm: 0.0,
            final_bound: 0.0,
            lhs: 0.0,
            ratio: 0.0,
        }
    }
}

/// Everything shared by the certificates of one function: `M f`, the slice
/// norms, `||f||_p` and the kernel tables.
pub struct HedbergContext<'a> {
    f: &'a GridFunction,
    exps: Exponents,
    mf: GridFunction,
    mixed: MixedNorms,
    f_norm: f64,
    table: SplitTable,
    kernel: GridFunction,
    constants: RegionConstants,
    slack: Slack,
}

impl<'a> HedbergContext<'a> {
    pub fn new(f: &'a GridFunction, exps: &Exponents) -> Result<Self> {
        check_exponents(exps).require()?;
        let grid = f.grid();
        let w = WindowFamily::dyadic(grid);
        let table = SplitTable::new(grid, exps)?;
        Ok(Self {
            f,
            exps: *exps,
            mf: strong_maximal(f, &w),
            mixed: MixedNorms::compute(f, exps.p(), &w)?,
            f_norm: f.lp_norm(exps.p())?,
            table,
            kernel: riesz_kernel(grid, exps)?,
            constants: RegionConstants::new(exps),
            slack: Slack::new(exps),
        })
    }

    pub fn exponents(&self) -> &Exponents {
        &self.exps
    }

    pub fn f_norm(&self) -> f64 {
        self.f_norm
    }

    pub fn constants(&self) -> RegionConstants {
        self.constants
    }

    pub fn slack(&self) -> Slack {
        self.slack
    }

    pub fn certify(&self, point: GridPoint) -> Result<HedbergCertificate> {
        let grid = self.f.grid();
        grid.check_point(point)?;
        if self.f_norm == 0.0 {
            return Ok(HedbergCertificate::zero(point, self.slack));
        }
        let e = &self.exps;
        let (p, q) = (e.p(), e.q());
        let m_value = self.mf.get(point);
        let n1 = self.mixed.n1[point.x];
        let n2 = self.mixed.n2[point.y];
        let g_value = n1 * n2;
        let f_norm = self.f_norm;
        let lhs = crate::convolution::convolve_at(self.f, &self.kernel, point)?;

        let (case_id, r1, r2, final_bound) = if g_value <= m_value * f_norm {
            let (r1, r2) = select_radii_case1(m_value, n1, n2, f_norm, e)?;
            (1, r1, r2, m_value.powf(p / q) * f_norm.powf(1.0 - p / q))
        } else {
            let (r1, r2) = select_radii_case2(g_value, n1, n2, f_norm, e)?;
            (2, r1, r2, g_value.powf(p / q) * f_norm.powf(1.0 - 2.0 * p / q))
        };

        let region_bounds = self.table.split(self.f, point, r1, r2)?;
        let c = &self.constants;
        let (xt, yt) = (x_tail_power(e), y_tail_power(e));
        let (a, b) = (e.alpha(), e.beta());
        let analytic_bounds = AnalyticBounds {
            b11: c.c11 * m_value * r1.powf(a) * r2.powf(b),
            b12: c.c12 * n1 * r1.powf(a) * r2.powf(yt),
            b21: c.c21 * n2 * r1.powf(xt) * r2.powf(b),
            b22: c.c22 * f_norm * r1.powf(xt) * r2.powf(yt),
        };
        let ratio = if final_bound > 0.0 { lhs / final_bound } else { f64::INFINITY };
        let cert = HedbergCertificate {
            point,
            case_id,
            r1,
            r2,
            region_bounds,
            analytic_bounds,
            slack: self.slack,
            m_value,
            g_value,
            n1,
            n2,
            f_norm,
            final_bound,
            lhs,
            ratio,
        };

        for region in [Region::R11, Region::R12, Region::R21, Region::R22] {
            let allowed = analytic_bounds.get(region) * self.slack.region(region);
            if region_value(&region_bounds, region) > allowed {
                return Err(Error::BoundViolation {
                    region,
                    certificate: Box::new(cert),
                });
            }
        }
        check_identity("region partition", region_bounds.total(), lhs, PARTITION_TOLERANCE)?;

        // balanced radii equate the 11 and 22 power laws
        let (w11, w22) = match case_id {
            1 => (m_value, f_norm),
            _ => (g_value / f_norm, f_norm),
        };
        let common = w11 * r1.powf(a) * r2.powf(b);
        check_identity(
            "inner/tail balance",
            common,
            w22 * r1.powf(xt) * r2.powf(yt),
            BALANCE_IDENTITY_TOLERANCE,
        )?;
        check_identity("exponent collapse", common, final_bound, BALANCE_IDENTITY_TOLERANCE)?;
        if case_id == 1 {
            let mixed = n1 * r1.powf(a) * r2.powf(yt);
            let chain = (m_value / f_norm).powf(p / q) * (g_value / (m_value * f_norm)).sqrt() * f_norm;
            check_identity("mixed-region collapse", mixed, chain, BALANCE_IDENTITY_TOLERANCE)?;
            if mixed > final_bound * (1.0 + BALANCE_IDENTITY_TOLERANCE) {
                return Err(Error::Postcondition(format!(
                    "mixed-region term {mixed} exceeds the case-1 bound {final_bound}"
                )));
            }
        }
        Ok(cert)
    }

    /// Certificates for many points, in input order.
    pub fn certify_all(&self, points: &[GridPoint]) -> Result<Vec<HedbergCertificate>> {
        points.par_iter().map(|p| self.certify(*p)).collect()
    }
}

/// One-shot certificate; prefer [`HedbergContext`] for many points.
pub fn certify_point(f: &GridFunction, exps: &Exponents, point: GridPoint) -> Result<HedbergCertificate> {
    HedbergContext::new(f, exps)?.certify(point)
}

/// Versioned container for serialized certificates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema_version: u32,
    pub exponents: Exponents,
    pub constants: RegionConstants,
    pub slack: Slack,
    pub certificates: Vec<HedbergCertificate>,
}

impl CertificateFile {
    pub fn new(exps: &Exponents, certificates: Vec<HedbergCertificate>) -> Self {
        Self {
            schema_version: CERTIFICATE_SCHEMA_VERSION,
            exponents: *exps,
            constants: RegionConstants::new(exps),
            slack: Slack::new(exps),
            certificates,
        }
    }
}
