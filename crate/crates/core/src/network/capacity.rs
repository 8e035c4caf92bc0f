//! Integer predicates deciding whether a width-`m` two-layer network can be
//! expected to interpolate `n` generic points in dimension `d`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::Activation;
use crate::combinat::multiset_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityReason {
    /// `md >= 2n`, `m` even, and the polynomial degree condition when it applies.
    #[serde(rename = "thm61_satisfied")]
    WidthSufficient,
    /// `m(d + 2) < n`: every parameter is a critical point.
    SardParamCount,
    /// Polynomial `psi` with `sum_{k>=1} 1{c_k != 0} C(k+d-1, k) < n - 2m`.
    SardPolyRank,
    /// Polynomial `psi` whose support is too thin for a rank-`n` Jacobian.
    DegreeConditionFailed,
    MOdd,
    /// Neither the sufficient nor a necessary condition decides: `md < 2n`
    /// with enough parameters.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityVerdict {
    pub surjective_predicted: bool,
    pub reason: CapacityReason,
    /// `None` unless `psi` is a polynomial.
    pub degree_condition_holds: Option<bool>,
    pub bound_values: BTreeMap<String, i128>,
}

impl CapacityVerdict {
    pub fn summary(&self) -> String {
        let b = |k: &str| self.bound_values.get(k).copied().unwrap_or_default();
        match self.reason {
            CapacityReason::WidthSufficient => {
                format!("surjective predicted: md = {} >= 2n = {} and m is even", b("md"), b("2n"))
            }
            CapacityReason::SardParamCount => {
                format!("image has measure zero: m(d+2) = {} < n = {}", b("m(d+2)"), b("n"))
            }
            CapacityReason::SardPolyRank => format!(
                "image has measure zero: polynomial support count {} < n - 2m = {}",
                b("poly_support_count"),
                b("n-2m")
            ),
            CapacityReason::DegreeConditionFailed => format!(
                "degree condition fails: polynomial support count {} < n = {}",
                b("poly_support_count"),
                b("n")
            ),
            CapacityReason::MOdd => format!("width m = {} is odd; the paired construction needs m even", b("m")),
            CapacityReason::Inconclusive => {
                format!("inconclusive: md = {} < 2n = {} but m(d+2) = {} >= n", b("md"), b("2n"), b("m(d+2)"))
            }
        }
    }
}

impl fmt::Display for CapacityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary())
    }
}

/// `sum_{k=1}^K 1{c_k != 0} C(k+d-1, k)` over the polynomial's coefficients.
pub fn polynomial_support_count(act: &Activation, d: usize) -> Option<u128> {
    let coeffs = act.as_polynomial()?;
    Some(coeffs.active_degrees().filter(|&k| k >= 1).map(|k| multiset_count(d, k)).fold(0u128, u128::saturating_add))
}

pub fn capacity_verdict(m: usize, n: usize, d: usize, act: &Activation) -> CapacityVerdict {
    let (mi, ni, di) = (m as i128, n as i128, d as i128);
    let mut bounds = BTreeMap::new();
    bounds.insert("m".to_string(), mi);
    bounds.insert("n".to_string(), ni);
    bounds.insert("d".to_string(), di);
    bounds.insert("md".to_string(), mi * di);
    bounds.insert("2n".to_string(), 2 * ni);
    bounds.insert("m(d+2)".to_string(), mi * (di + 2));

    let support = polynomial_support_count(act, d);
    let degree_ok = support.map(|s| s >= n as u128);
    if let Some(s) = support {
        bounds.insert("poly_support_count".to_string(), i128::try_from(s).unwrap_or(i128::MAX));
        bounds.insert("n-2m".to_string(), ni - 2 * mi);
    }

    let reason = if mi * (di + 2) < ni {
        CapacityReason::SardParamCount
    } else if support.is_some_and(|s| (s as i128) < ni - 2 * mi) {
        CapacityReason::SardPolyRank
    } else if m % 2 == 1 {
        CapacityReason::MOdd
    } else if mi * di < 2 * ni {
        CapacityReason::Inconclusive
    } else if degree_ok == Some(false) {
        CapacityReason::DegreeConditionFailed
    } else {
        CapacityReason::WidthSufficient
    };
    CapacityVerdict {
        surjective_predicted: reason == CapacityReason::WidthSufficient,
        reason,
        degree_condition_holds: degree_ok,
        bound_values: bounds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_scale_examples() {
        let v = capacity_verdict(6, 10, 4, &Activation::Tanh);
        assert!(v.surjective_predicted);
        assert_eq!(v.reason, CapacityReason::WidthSufficient);
        assert_eq!(v.bound_values["md"], 24);

        let v = capacity_verdict(2, 9, 2, &Activation::Tanh);
        assert!(!v.surjective_predicted);
        assert_eq!(v.reason, CapacityReason::SardParamCount);
        assert_eq!(v.bound_values["m(d+2)"], 8);

        assert_eq!(capacity_verdict(5, 10, 4, &Activation::Tanh).reason, CapacityReason::MOdd);
        assert_eq!(capacity_verdict(4, 10, 4, &Activation::Tanh).reason, CapacityReason::Inconclusive);
    }

    #[test]
    fn cubic_examples() {
        let cubic = Activation::cubic();
        let v = capacity_verdict(1000, 100_000, 100, &cubic);
        assert_eq!(v.degree_condition_holds, Some(true));
        assert_eq!(v.bound_values["poly_support_count"], 171_700);

        let v = capacity_verdict(3, 12, 2, &cubic);
        assert_eq!(v.reason, CapacityReason::SardPolyRank);
        assert_eq!(v.bound_values["poly_support_count"], 4);

        // md >= 2n, m even, but x^3 in d = 2 only reaches 4 < 5
        let v = capacity_verdict(6, 5, 2, &cubic);
        assert_eq!(v.reason, CapacityReason::DegreeConditionFailed);
        assert_eq!(v.degree_condition_holds, Some(false));
    }

    #[test]
    fn verdict_serializes_with_snake_case_reason() {
        let v = capacity_verdict(2, 9, 2, &Activation::Tanh);
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["reason"], "sard_param_count");
        assert!(j["degree_condition_holds"].is_null());
        assert!(v.summary().contains("8 < n = 9"));
    }
}
