use std::collections::BTreeMap;
use std::fmt;

use super::fit::{fit_points, RateFit, XAxis};
use super::sweep::SweepRecord;

/// Which rows a check looks at. Rows sharing `(ε, δ)` are reduced over time:
/// the value at `time` when given, otherwise the supremum over samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selector {
    pub quantity: String,
    pub norm: String,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Keep rows with `δ = ε^m`.
    pub coupled: Option<f64>,
    pub time: Option<f64>,
}

impl Selector {
    pub fn new(quantity: &str, norm: &str) -> Self {
        Self { quantity: quantity.into(), norm: norm.into(), ..Self::default() }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
    }

    fn matches(&self, r: &SweepRecord) -> bool {
        r.is_ok()
            && r.quantity == self.quantity
            && r.norm == self.norm
            && self.epsilon.map_or(true, |e| Self::close(e, r.epsilon))
            && self.delta.map_or(true, |d| Self::close(d, r.delta))
            && self.coupled.map_or(true, |m| Self::close(r.delta.ln(), m * r.epsilon.ln()))
            && self.time.map_or(true, |t| Self::close(t, r.t) || t == r.t)
    }

    /// `(ε, δ, value)` in ascending `(ε, δ)` order.
    pub fn points(&self, records: &[SweepRecord]) -> Vec<(f64, f64, f64)> {
        let mut reduced: BTreeMap<(u64, u64), (f64, f64, f64)> = BTreeMap::new();
        for r in records.iter().filter(|r| self.matches(r)) {
            let e = reduced.entry((r.epsilon.to_bits(), r.delta.to_bits())).or_insert((r.epsilon, r.delta, r.value));
            e.2 = e.2.max(r.value);
        }
        let mut pts: Vec<_> = reduced.into_values().collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts
    }

    fn label(&self) -> String {
        let mut s = format!("{}/{}", self.quantity, self.norm);
        if let Some(e) = self.epsilon {
            s += &format!(" eps={e:e}");
        }
        if let Some(d) = self.delta {
            s += &format!(" delta={d}");
        }
        if let Some(m) = self.coupled {
            s += &format!(" delta=eps^{m}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// Fitted log-log slope within `target ± tol`.
    Slope { select: Selector, x_axis: XAxis, target: f64, tol: f64, min_r_squared: Option<f64> },
    /// Every selected value lies in `[min, max]`.
    Range { select: Selector, min: f64, max: f64 },
    /// Ordered along `x_axis`, some interior value sits strictly below both ends.
    UShape { select: Selector, x_axis: XAxis },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: String,
    pub title: String,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Pass,
    Incomplete,
    Fail,
}

impl Outcome {
    pub fn tag(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Incomplete => "INCOMPLETE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub label: String,
    pub outcome: Outcome,
    pub detail: String,
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: String,
    pub title: String,
    pub outcome: Outcome,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceReport {
    pub verdicts: Vec<Verdict>,
}

impl AcceptanceReport {
    /// Any failure fails the report; otherwise a missing criterion leaves it incomplete.
    pub fn overall(&self) -> Outcome {
        if self.verdicts.is_empty() {
            return Outcome::Incomplete;
        }
        self.verdicts.iter().map(|v| v.outcome).max().unwrap()
    }

    pub fn exit_code(&self) -> i32 {
        match self.overall() {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Incomplete => 2,
        }
    }

    pub fn verdict(&self, id: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.id == id)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.verdicts.iter().filter(|v| v.outcome == Outcome::Fail).map(|v| v.id.as_str()).collect()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "criterion {} {}: {}", self.id, self.outcome.tag(), self.title)?;
        for c in &self.checks {
            write!(f, "\n  [{}] {} {}", c.outcome.tag(), c.label, c.detail)?;
        }
        Ok(())
    }
}

impl fmt::Display for AcceptanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.verdicts {
            writeln!(f, "{v}")?;
        }
        write!(f, "overall {}", self.overall().tag())?;
        let failed = self.failed();
        if !failed.is_empty() {
            write!(f, " (failed: {})", failed.join(", "))?;
        }
        Ok(())
    }
}

fn evaluate(check: &Check, records: &[SweepRecord]) -> CheckResult {
    let incomplete = |label: String, detail: String| CheckResult { label, outcome: Outcome::Incomplete, detail, fit: None };
    let judge = |ok: bool| if ok { Outcome::Pass } else { Outcome::Fail };
    match check {
        Check::Slope { select, x_axis, target, tol, min_r_squared } => {
            let label = format!("{} slope vs {x_axis:?}", select.label());
            let pts = select.points(records);
            let xs: Vec<f64> = pts.iter().map(|p| axis(*x_axis, p)).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.2).collect();
            match fit_points(&xs, &ys) {
                Err(e) => incomplete(label, e.to_string()),
                Ok(fit) => {
                    let r2_ok = min_r_squared.map_or(true, |m| fit.r_squared >= m);
                    let ok = (fit.slope - target).abs() <= *tol && r2_ok;
                    let r2_req = min_r_squared.map_or(String::new(), |m| format!(" (>= {m})"));
                    CheckResult {
                        label,
                        outcome: judge(ok),
                        detail: format!(
                            "slope {:.4} target {target} ± {tol}, r2 {:.6}{r2_req}, C {:.4e}, n {}",
                            fit.slope,
                            fit.r_squared,
                            fit.constant(),
                            fit.n_points
                        ),
                        fit: Some(fit),
                    }
                }
            }
        }
        Check::Range { select, min, max } => {
            let label = select.label();
            let values: Vec<f64> = records.iter().filter(|r| select.matches(r)).map(|r| r.value).collect();
            if values.is_empty() {
                return incomplete(label, "no rows".into());
            }
            let ok = values.iter().all(|v| v >= min && v <= max);
            let shown: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
            CheckResult {
                label,
                outcome: judge(ok),
                detail: format!("values [{}] in [{min:e}, {max:e}]", shown.join(", ")),
                fit: None,
            }
        }
        Check::UShape { select, x_axis } => {
            let label = format!("{} shape vs {x_axis:?}", select.label());
            let mut pts: Vec<(f64, f64)> = select.points(records).iter().map(|p| (axis(*x_axis, p), p.2)).collect();
            if pts.len() < 3 {
                return incomplete(label, format!("needs 3 points, got {}", pts.len()));
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (first, last) = (pts[0].1, pts[pts.len() - 1].1);
            let interior_min = pts[1..pts.len() - 1].iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let ok = interior_min < first && interior_min < last;
            let shown: Vec<String> = pts.iter().map(|(x, y)| format!("{x}:{y:.4e}")).collect();
            CheckResult { label, outcome: judge(ok), detail: format!("points [{}]", shown.join(", ")), fit: None }
        }
    }
}

fn axis(x: XAxis, p: &(f64, f64, f64)) -> f64 {
    match x {
        XAxis::Epsilon => p.0,
        XAxis::Delta => p.1,
        XAxis::EpsilonOverDelta => p.0 / p.1,
    }
}

/// Evaluates every criterion against the pooled records. A criterion passes
/// when all its checks pass, fails when any check fails, and is incomplete
/// when rows are missing.
pub fn acceptance_report(records: &[SweepRecord], criteria: &[Criterion]) -> AcceptanceReport {
    let verdicts = criteria
        .iter()
        .map(|c| {
            let checks: Vec<CheckResult> = c.checks.iter().map(|k| evaluate(k, records)).collect();
            let outcome = checks.iter().map(|k| k.outcome).max().unwrap_or(Outcome::Incomplete);
            Verdict { id: c.id.clone(), title: c.title.clone(), outcome, checks }
        })
        .collect();
    AcceptanceReport { verdicts }
}

fn range(quantity: &str, norm: &str, min: f64, max: f64) -> Check {
    Check::Range { select: Selector::new(quantity, norm), min, max }
}

fn slope(select: Selector, x_axis: XAxis, target: f64, tol: f64, min_r_squared: Option<f64>) -> Check {
    Check::Slope { select, x_axis, target, tol, min_r_squared }
}

/// The acceptance table. Operator criteria read rows produced by
/// [`super::verify_ops`]; rate criteria read sweep rows.
pub fn default_criteria() -> Vec<Criterion> {
    let crit = |id: &str, title: &str, checks: Vec<Check>| Criterion { id: id.into(), title: title.into(), checks };
    let at_one = |q: &str, n: &str| Selector { time: Some(1.0), ..Selector::new(q, n) };
    vec![
        crit(
            "1",
            "acoustic energy conserved in H^0..H^3 over [0, 10]",
            (0..=3).map(|s| range("acoustic_energy_drift", &format!("H{s}"), 0.0, 1e-12)).collect(),
        ),
        crit(
            "2",
            "expansion defect is second order in delta",
            vec![
                slope(at_one("expansion_defect", "Linf"), XAxis::Delta, 2.0, 0.1, Some(0.999)),
                slope(at_one("expansion_defect", "L2"), XAxis::Delta, 2.0, 0.1, Some(0.999)),
            ],
        ),
        crit(
            "3",
            "Euler minus acoustic is second order in delta in H^2",
            vec![slope(at_one("linearization_defect", "H2"), XAxis::Delta, 2.0, 0.15, None)],
        ),
        crit(
            "4",
            "collision operator properties",
            vec![
                range("q_refinement_ratio", "Linf", 3.0, f64::INFINITY),
                range("l_asymmetry", "rel", 0.0, 1e-6),
                range("null_dim", "count", 5.0, 5.0),
                range("c0", "min", f64::MIN_POSITIVE, f64::INFINITY),
                range("c0_spread", "rel", 0.0, 0.2),
            ],
        ),
        crit(
            "5",
            "K^m norm scales like m^(3+gamma)",
            vec![range("k_exponent", "gamma1", 3.7, 4.3), range("k_exponent", "gamma0", 2.7, 3.3)],
        ),
        crit(
            "6",
            "|F^eps - mu^delta| is first order in eps",
            vec![slope(Selector { delta: Some(0.1), ..at_one("euler_defect", "L2") }, XAxis::Epsilon, 1.0, 0.15, None)],
        ),
        crit(
            "7a",
            "sup_t |G^eps - G| scales like eps^(1/2) when delta = eps^(1/2)",
            vec![slope(Selector { coupled: Some(0.5), ..Selector::new("acoustic_defect", "L2") }, XAxis::Epsilon, 0.5, 0.1, None)],
        ),
        crit(
            "7b",
            "sup_t |G^eps - G| at fixed eps turns up again at small delta",
            vec![Check::UShape {
                select: Selector { epsilon: Some(1e-3), ..Selector::new("acoustic_defect", "L2") },
                x_axis: XAxis::Delta,
            }],
        ),
        crit(
            "8",
            "Hilbert solvability separates Euler from non-Euler fields",
            vec![
                range("compat_residual", "euler", 0.0, 5e-3),
                range("compat_residual", "static", 0.1, f64::INFINITY),
            ],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate_rows(q: &str, norm: &str, slope: f64) -> Vec<SweepRecord> {
        [0.2, 0.1, 0.05, 0.025].iter().map(|&d| SweepRecord::ok(1e-2, d, 1.0, q, norm, 0.3 * f64::powf(d, slope))).collect()
    }

    fn one(id: &str) -> Vec<Criterion> {
        default_criteria().into_iter().filter(|c| c.id == id).collect()
    }

    #[test]
    fn passing_slopes_exit_zero() {
        let mut rows = rate_rows("expansion_defect", "Linf", 2.03);
        rows.extend(rate_rows("expansion_defect", "L2", 1.97));
        let rep = acceptance_report(&rows, &one("2"));
        assert_eq!(rep.overall(), Outcome::Pass);
        assert_eq!(rep.exit_code(), 0);
        let fit = rep.verdicts[0].checks[0].fit.unwrap();
        assert!((fit.constant() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn one_slope_outside_fails_and_is_named() {
        let mut rows = rate_rows("expansion_defect", "Linf", 2.0);
        rows.extend(rate_rows("expansion_defect", "L2", 1.8));
        rows.extend(rate_rows("linearization_defect", "H2", 2.0));
        let crits: Vec<Criterion> = default_criteria().into_iter().filter(|c| c.id == "2" || c.id == "3").collect();
        let rep = acceptance_report(&rows, &crits);
        assert_eq!(rep.exit_code(), 1);
        assert_eq!(rep.failed(), vec!["2"]);
        assert!(rep.to_string().contains("(failed: 2)"));
    }

    #[test]
    fn empty_input_is_incomplete() {
        let rep = acceptance_report(&[], &default_criteria());
        assert_eq!(rep.overall(), Outcome::Incomplete);
        assert_eq!(rep.exit_code(), 2);
        assert!(rep.verdicts.iter().all(|v| v.outcome == Outcome::Incomplete));
        assert_eq!(acceptance_report(&[], &[]).exit_code(), 2);
    }

    #[test]
    fn idempotent() {
        let rows = rate_rows("linearization_defect", "H2", 2.0);
        assert_eq!(acceptance_report(&rows, &default_criteria()), acceptance_report(&rows, &default_criteria()));
    }

    #[test]
    fn sup_over_time_and_coupling_filter() {
        let mut rows = Vec::new();
        for &eps in &[1e-2, 2.5e-3, 6.25e-4] {
            let d = f64::sqrt(eps);
            for &t in &[0.5, 1.0] {
                rows.push(SweepRecord::ok(eps, d, t, "acoustic_defect", "L2", d * t));
            }
            // a fixed-δ row that must not enter the coupled fit
            rows.push(SweepRecord::ok(eps, 0.4, 1.0, "acoustic_defect", "L2", 9.0));
        }
        let rep = acceptance_report(&rows, &one("7a"));
        let fit = rep.verdicts[0].checks[0].fit.unwrap();
        assert_eq!(fit.n_points, 3);
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert_eq!(rep.overall(), Outcome::Pass);
    }

    #[test]
    fn u_shape_detection() {
        let mk = |vals: [f64; 4]| -> Vec<SweepRecord> {
            [0.4, 0.2, 0.1, 0.05]
                .iter()
                .zip(vals)
                .map(|(&d, v)| SweepRecord::ok(1e-3, d, 1.0, "acoustic_defect", "L2", v))
                .collect()
        };
        assert_eq!(acceptance_report(&mk([0.2, 0.1, 0.05, 0.08]), &one("7b")).overall(), Outcome::Pass);
        assert_eq!(acceptance_report(&mk([0.2, 0.1, 0.05, 0.025]), &one("7b")).overall(), Outcome::Fail);
    }

    #[test]
    fn range_checks() {
        let rows = vec![
            SweepRecord::ok(0.0, 0.0, 0.0, "compat_residual", "euler", 3e-6),
            SweepRecord::ok(0.0, 0.0, 0.0, "compat_residual", "static", 0.05),
        ];
        let rep = acceptance_report(&rows, &one("8"));
        assert_eq!(rep.overall(), Outcome::Fail);
        assert_eq!(rep.verdicts[0].checks[0].outcome, Outcome::Pass);
    }
}
