//! Parameter admissibility: the critical exponents alpha_{N,+-}, the critical
//! integrability index n_N(alpha), the exponent class M_set, and a classifier
//! that evaluates every theorem hypothesis for a parameter tuple.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::integer::Integer;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exact rational number kept in lowest terms with a positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numerator: i64, denominator: i64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(ExactRational(BigRational::new(
            BigInt::from(numerator),
            BigInt::from(denominator),
        )))
    }

    pub fn from_integer(n: i64) -> Self {
        ExactRational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Accepts `a`, `a/b` and finite decimals such as `1.25` (read exactly).
impl FromStr for ExactRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid("rational", format!("cannot parse '{s}'"));
        if let Some((a, b)) = s.split_once('/') {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(Error::Domain("zero denominator".into()));
            }
            return Ok(ExactRational(BigRational::new(a, b)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            let digits = format!(
                "{}{}",
                if int_digits.is_empty() {
                    "0"
                } else {
                    int_digits
                },
                frac
            );
            let mut num: BigInt = digits.parse().map_err(|_| bad())?;
            if negative {
                num = -num;
            }
            let den = num::pow(BigInt::from(10), frac.len());
            return Ok(ExactRational(BigRational::new(num, den)));
        }
        let a: BigInt = s.parse().map_err(|_| bad())?;
        Ok(ExactRational(BigRational::from_integer(a)))
    }
}

impl Serialize for ExactRational {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactRational {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_dimension(n_dim: u32) -> Result<()> {
    if n_dim == 2 || n_dim == 3 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "dimension must be 2 or 3, got {n_dim}"
        )))
    }
}

fn check_index(n: f64) -> Result<()> {
    if n > 1.0 && !n.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("index n must exceed 1, got {n}")))
    }
}

/// Lower critical exponent alpha_{N,-}(n).
///
/// The closed forms are rearranged so that no cancellation occurs as n -> 1:
/// alpha_{2,-}(n) = n / (n + sqrt(2n-1)) and
/// alpha_{3,-}(n) = 1 - 2(2n-1) / (S + 6n - 3) with S = sqrt(4n(4n^2-n-1)+1).
pub fn alpha_minus(n_dim: u32, n: f64) -> Result<f64> {
    check_dimension(n_dim)?;
    check_index(n)?;
    if n.is_infinite() {
        return Ok(1.0);
    }
    Ok(if n_dim == 2 {
        n / (n + (2.0 * n - 1.0).sqrt())
    } else {
        let s = s3(n);
        1.0 - 2.0 * (2.0 * n - 1.0) / (s + 6.0 * n - 3.0)
    })
}

/// Upper critical exponent alpha_{N,+}(n).
pub fn alpha_plus(n_dim: u32, n: f64) -> Result<f64> {
    check_dimension(n_dim)?;
    check_index(n)?;
    if n.is_infinite() {
        return Ok(1.0);
    }
    let d = (n - 1.0) * (n - 1.0);
    Ok(if n_dim == 2 {
        let s = (2.0 * n - 1.0).sqrt();
        1.0 + s * (n + s) / d
    } else {
        1.0 + (s3(n) + 6.0 * n - 3.0) / (4.0 * d)
    })
}

fn s3(n: f64) -> f64 {
    (4.0 * n * (4.0 * n * n - n - 1.0) + 1.0).sqrt()
}

/// Lower end of the admissible alpha range for n_critical.
pub fn alpha_floor(n_dim: u32) -> f64 {
    if n_dim == 2 {
        0.5
    } else {
        2.0 / 3.0
    }
}

/// Critical integrability index n_N(alpha): the inverse of alpha_{N,-} for
/// alpha < 1, +infinity at alpha = 1, the inverse of alpha_{N,+} for alpha > 1.
///
/// Bisection runs in log(n - 1) starting from [1 + 1e-12, 1e9]; the upper end
/// is widened by decades when alpha is so close to 1 that the root lies
/// beyond 1e9.
pub fn n_critical(n_dim: u32, alpha: f64) -> Result<f64> {
    check_dimension(n_dim)?;
    if !(alpha > alpha_floor(n_dim)) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "alpha must exceed {} for N={n_dim}, got {alpha}",
            alpha_floor(n_dim)
        )));
    }
    if alpha == 1.0 {
        return Ok(f64::INFINITY);
    }
    let below = alpha < 1.0;
    // g(n) > 0 once n is past the root.
    let g = |n: f64| -> f64 {
        if below {
            alpha_minus(n_dim, n).unwrap() - alpha
        } else {
            alpha - alpha_plus(n_dim, n).unwrap()
        }
    };
    let lo_n = 1.0 + 1e-12;
    if g(lo_n) >= 0.0 {
        return Ok(lo_n);
    }
    let mut hi_n = 1e9;
    while g(hi_n) < 0.0 {
        hi_n *= 10.0;
        if hi_n > 1e300 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = (lo_n - 1.0).ln();
    let mut hi = (hi_n - 1.0).ln();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(1.0 + mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let (a, b) = (1.0 + lo.exp(), 1.0 + hi.exp());
        if b - a <= 1e-15 * b {
            break;
        }
    }
    // Pick whichever endpoint has the smaller residual.
    let (a, b) = (1.0 + lo.exp(), 1.0 + hi.exp());
    Ok(if g(a).abs() <= g(b).abs() { a } else { b })
}

/// Membership in M_set = {1 + s/(2k+1) : s >= 1, k >= 0}.
pub fn in_m_set(q: &ExactRational) -> bool {
    let one = BigRational::one();
    if q.0 <= one {
        return false;
    }
    let reduced = &q.0 - &one;
    reduced.denom().is_odd()
}

/// Admissible interval for the artificial-viscosity exponent delta.
///
/// N = 2: alpha_{2,-}(p) < delta < 1 - 1/(2p). N = 3 with p >= 1.55:
/// alpha_{3,-}(p) < delta < 1 - 1/(2p). For N = 3 and p < 1.55 the value is
/// fixed at 0.677 and the interval degenerates to that point.
pub fn delta_interval(n_dim: u32, p: f64) -> Result<(f64, f64)> {
    check_dimension(n_dim)?;
    check_index(p)?;
    if n_dim == 3 && p < 1.55 {
        return Ok((0.677, 0.677));
    }
    let lo = alpha_minus(n_dim, p)?;
    let hi = 1.0 - 1.0 / (2.0 * p);
    if lo >= hi {
        return Err(Error::Domain(format!(
            "empty delta interval for N={n_dim}, p={p}"
        )));
    }
    Ok((lo, hi))
}

/// Default delta: midpoint of the admissible interval (0.677 for N = 3, p < 1.55).
pub fn select_delta(n_dim: u32, p: f64) -> Result<f64> {
    let (lo, hi) = delta_interval(n_dim, p)?;
    Ok(0.5 * (lo + hi))
}

/// Whether delta is admissible for (N, p).
pub fn delta_admissible(n_dim: u32, p: f64, delta: f64) -> Result<bool> {
    let (lo, hi) = delta_interval(n_dim, p)?;
    Ok(if lo == hi {
        delta == lo
    } else {
        lo < delta && delta < hi
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "in")]
    Member,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
            Relation::Eq => "=",
            Relation::Member => "in",
        }
    }

    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Member => false,
        }
    }
}

/// One evaluated hypothesis: `lhs relation rhs` with both sides as numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub lhs_expr: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs_expr: String,
    pub rhs: f64,
    pub holds: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} {} {} = {}",
            self.lhs_expr,
            fmt_num(self.lhs),
            self.relation.symbol(),
            self.rhs_expr,
            fmt_num(self.rhs)
        )
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x.is_nan() {
        "n/a".into()
    } else {
        format!("{x:.6}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Global classical solutions, alpha < 1.
    Thm1,
    /// Uniform-in-time bounds and decay, alpha < 1.
    Thm2,
    /// Saint-Venant endpoint alpha = 1 in two dimensions.
    SvTwoD,
    /// Weak solutions with vacuum, N = 2.
    Thm3,
    /// Weak solutions with vacuum, N = 3.
    Thm4,
    /// Finite-time vanishing of vacuum.
    Thm5,
    /// Weak solutions with possible vacuum at the origin, alpha = 1.
    T2,
}

impl Theorem {
    pub const ALL: [Theorem; 7] = [
        Theorem::Thm1,
        Theorem::Thm2,
        Theorem::SvTwoD,
        Theorem::Thm3,
        Theorem::Thm4,
        Theorem::Thm5,
        Theorem::T2,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Theorem::Thm1 => "Thm 1 (classical, alpha<1)",
            Theorem::Thm2 => "Thm 2 (uniform bounds, decay)",
            Theorem::SvTwoD => "Thm SV 2d (alpha=1, N=2)",
            Theorem::Thm3 => "Thm 3 (weak, N=2)",
            Theorem::Thm4 => "Thm 4 (weak, N=3)",
            Theorem::Thm5 => "Thm 5 (vacuum vanishing)",
            Theorem::T2 => "Thm T2 (vacuum at origin)",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem: Theorem,
    pub satisfied: bool,
    pub checks: Vec<Check>,
}

impl TheoremVerdict {
    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.holds).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub dimension: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub p: Option<f64>,
    pub q: Option<ExactRational>,
    pub verdicts: Vec<TheoremVerdict>,
}

impl RegimeReport {
    pub fn verdict(&self, theorem: Theorem) -> &TheoremVerdict {
        self.verdicts
            .iter()
            .find(|v| v.theorem == theorem)
            .expect("every theorem is classified")
    }

    pub fn satisfied(&self, theorem: Theorem) -> bool {
        self.verdict(theorem).satisfied
    }

    /// Human-readable table, one theorem per block.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "N={} alpha={} gamma={} p={} q={}\n",
            self.dimension,
            self.alpha,
            self.gamma,
            self.p.map_or("-".to_string(), |p| p.to_string()),
            self.q.as_ref().map_or("-".to_string(), |q| q.to_string())
        ));
        for v in &self.verdicts {
            out.push_str(&format!(
                "{:<32} {}\n",
                v.theorem.label(),
                if v.satisfied { "satisfied" } else { "violated" }
            ));
            for c in &v.checks {
                out.push_str(&format!(
                    "    [{}] {}\n",
                    if c.holds { "ok" } else { "FAIL" },
                    c
                ));
            }
        }
        out
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn cmp(&mut self, lhs_expr: &str, lhs: f64, relation: Relation, rhs_expr: &str, rhs: f64) {
        let holds = relation.holds(lhs, rhs);
        self.0.push(Check {
            lhs_expr: lhs_expr.into(),
            lhs,
            relation,
            rhs_expr: rhs_expr.into(),
            rhs,
            holds,
        });
    }

    fn dimension(&mut self, n_dim: u32, want: u32) {
        self.cmp("N", n_dim as f64, Relation::Eq, "required N", want as f64);
    }

    fn p_given(&mut self, p: Option<f64>) -> Option<f64> {
        if p.is_none() {
            self.missing("p");
        }
        p
    }

    fn q_given(&mut self, q: Option<&ExactRational>) -> Option<f64> {
        match q {
            Some(q) => {
                let qf = q.to_f64();
                self.0.push(Check {
                    lhs_expr: format!("q ({q})"),
                    lhs: qf,
                    relation: Relation::Member,
                    rhs_expr: "M_set".into(),
                    rhs: f64::NAN,
                    holds: in_m_set(q),
                });
                Some(qf)
            }
            None => {
                self.missing("q");
                None
            }
        }
    }

    fn missing(&mut self, name: &str) {
        self.0.push(Check {
            lhs_expr: format!("{name} (not provided)"),
            lhs: f64::NAN,
            relation: Relation::Eq,
            rhs_expr: "required".into(),
            rhs: f64::NAN,
            holds: false,
        });
    }

    fn finish(self, theorem: Theorem) -> TheoremVerdict {
        let satisfied = self.0.iter().all(|c| c.holds);
        TheoremVerdict {
            theorem,
            satisfied,
            checks: self.0,
        }
    }
}

fn n_crit_or_nan(n_dim: u32, alpha: f64) -> f64 {
    n_critical(n_dim, alpha).unwrap_or(f64::NAN)
}

/// Evaluates every theorem's hypotheses for (N, alpha, gamma, p, q).
///
/// Strict and non-strict inequalities follow the theorem statements with no
/// tolerance. Parameters that a theorem needs but that are absent produce a
/// failing "not provided" check. Theorem 2 in three dimensions is judged on
/// its own hypothesis set only; it is not merged with Theorem 1's.
pub fn classify_regime(
    n_dim: u32,
    alpha: f64,
    gamma: f64,
    p: Option<f64>,
    q: Option<&ExactRational>,
) -> RegimeReport {
    use Relation::*;
    let mut verdicts = Vec::new();

    // Theorem 1.
    let mut c = Checks(Vec::new());
    if n_dim == 2 {
        c.cmp("alpha", alpha, Gt, "0.5", 0.5);
        c.cmp("alpha", alpha, Lt, "1", 1.0);
        c.cmp("gamma", gamma, Gt, "1", 1.0);
    } else {
        c.cmp("alpha", alpha, Gt, "0.686", 0.686);
        c.cmp("alpha", alpha, Lt, "1", 1.0);
        c.cmp("gamma", gamma, Gt, "1", 1.0);
        let n3 = n_crit_or_nan(3, alpha);
        let bound = 6.0 * alpha - 3.0 + (3.0 - 5.0 * alpha) / (2.0 * n3);
        c.cmp("gamma", gamma, Lt, "6a-3+(3-5a)/(2 n_3(a))", bound);
    }
    verdicts.push(c.finish(Theorem::Thm1));

    // Theorem 2.
    let mut c = Checks(Vec::new());
    if n_dim == 2 {
        c.cmp("alpha", alpha, Gt, "0.54", 0.54);
        c.cmp("alpha", alpha, Lt, "1", 1.0);
        c.cmp("gamma", gamma, Gt, "1", 1.0);
    } else {
        c.cmp("alpha", alpha, Gt, "0.689", 0.689);
        c.cmp("alpha", alpha, Lt, "1", 1.0);
        c.cmp("gamma", gamma, Gt, "1", 1.0);
        c.cmp("gamma", gamma, Lt, "3a-1", 3.0 * alpha - 1.0);
    }
    verdicts.push(c.finish(Theorem::Thm2));

    // Saint-Venant endpoint.
    let mut c = Checks(Vec::new());
    c.dimension(n_dim, 2);
    c.cmp("alpha", alpha, Eq, "1", 1.0);
    c.cmp("gamma", gamma, Ge, "3/2", 1.5);
    verdicts.push(c.finish(Theorem::SvTwoD));

    // Theorem 3.
    let mut c = Checks(Vec::new());
    c.dimension(n_dim, 2);
    c.cmp("alpha", alpha, Ge, "1", 1.0);
    c.cmp(
        "gamma",
        gamma,
        Gt,
        "max{1, a-1/2}",
        f64::max(1.0, alpha - 0.5),
    );
    let pv = c.p_given(p);
    let qv = c.q_given(q);
    if let (Some(pv), Some(qv)) = (pv, qv) {
        c.cmp("q", qv, Gt, "1", 1.0);
        c.cmp("p", pv, Gt, "q", qv);
        c.cmp(
            "p",
            pv,
            Lt,
            "n_2(a)",
            if alpha > 0.5 {
                n_crit_or_nan(2, alpha)
            } else {
                f64::NAN
            },
        );
        let bound = f64::max((1.0 - 1.0 / (2.0 * pv)) * alpha, alpha - 1.0 + qv / pv);
        c.cmp("gamma", gamma, Ge, "max{(1-1/(2p))a, a-1+q/p}", bound);
    }
    verdicts.push(c.finish(Theorem::Thm3));

    // Theorem 4.
    let mut c = Checks(Vec::new());
    c.dimension(n_dim, 3);
    c.cmp("alpha", alpha, Ge, "1", 1.0);
    c.cmp("alpha", alpha, Lt, "11.7", 11.7);
    c.cmp(
        "gamma",
        gamma,
        Gt,
        "max{1, a-1/2}",
        f64::max(1.0, alpha - 0.5),
    );
    let pv = c.p_given(p);
    let qv = c.q_given(q);
    if let (Some(pv), Some(qv)) = (pv, qv) {
        c.cmp("q", qv, Gt, "1.5", 1.5);
        c.cmp("p", pv, Gt, "q", qv);
        let n3 = if alpha > 2.0 / 3.0 {
            n_crit_or_nan(3, alpha)
        } else {
            f64::NAN
        };
        c.cmp("p", pv, Lt, "n_3(a)", n3);
        c.cmp("gamma", gamma, Ge, "2a-1", 2.0 * alpha - 1.0);
        let upper = 3.0 * alpha - 1.0
            + (alpha - 1.0) / (2.0 * pv)
            + f64::min(2.0 * alpha - 1.0, (3.0 * alpha - 2.0) * (1.0 - 1.0 / qv));
        c.cmp(
            "gamma",
            gamma,
            Lt,
            "3a-1+(a-1)/(2p)+min{2a-1,(3a-2)(1-1/q)}",
            upper,
        );
    }
    verdicts.push(c.finish(Theorem::Thm4));

    // Theorem 5.
    let mut c = Checks(Vec::new());
    c.cmp("alpha", alpha, Ge, "1", 1.0);
    if n_dim == 2 {
        c.cmp("alpha", alpha, Lt, "7.46", 7.46);
        c.cmp("gamma", gamma, Gt, "1", 1.0);
        c.cmp("gamma", gamma, Ge, "2a-1", 2.0 * alpha - 1.0);
    } else {
        c.cmp("alpha", alpha, Lt, "5.81", 5.81);
        c.cmp("gamma", gamma, Gt, "1", 1.0);
        c.cmp("gamma", gamma, Ge, "2a-1", 2.0 * alpha - 1.0);
        c.cmp("gamma", gamma, Lt, "3a-1", 3.0 * alpha - 1.0);
    }
    let pv = c.p_given(p);
    let qv = c.q_given(q);
    if let Some(pv) = pv {
        c.cmp("p", pv, Eq, "2", 2.0);
    }
    if let Some(qv) = qv {
        c.cmp("q", qv, Gt, "N/2", n_dim as f64 / 2.0);
        c.cmp("q", qv, Lt, "2", 2.0);
    }
    verdicts.push(c.finish(Theorem::Thm5));

    // Theorem T2.
    let mut c = Checks(Vec::new());
    c.cmp("alpha", alpha, Eq, "1", 1.0);
    c.cmp("gamma", gamma, Gt, "1", 1.0);
    let pv = c.p_given(p);
    let qv = c.q_given(q);
    if let (Some(pv), Some(qv)) = (pv, qv) {
        c.cmp("q", qv, Gt, "N/2", n_dim as f64 / 2.0);
        c.cmp("p", pv, Gt, "q", qv);
        c.cmp("p", pv, Lt, "inf", f64::INFINITY);
        c.cmp("gamma", gamma, Ge, "1+1/p", 1.0 + 1.0 / pv);
        if n_dim == 3 {
            c.cmp("gamma", gamma, Lt, "3-1/q", 3.0 - 1.0 / qv);
        }
    }
    verdicts.push(c.finish(Theorem::T2));

    RegimeReport {
        dimension: n_dim,
        alpha,
        gamma,
        p,
        q: q.cloned(),
        verdicts,
    }
}
