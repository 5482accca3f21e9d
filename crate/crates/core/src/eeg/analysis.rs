use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Group;
use crate::corpus::Condition;
use crate::error::{Error, Result};
use crate::stats::{cohens_d, spearman, t_test, Correlation, TTestKind};

/// Two-group comparison reported as HC minus MDD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub d: Option<f64>,
    pub degenerate: bool,
}

pub fn group_compare(mdd: &[f64], hc: &[f64], kind: TTestKind) -> Result<GroupComparison> {
    let r = t_test(kind, hc, mdd)?;
    let d = cohens_d(hc, mdd)?;
    Ok(GroupComparison { t: r.statistic, df: r.df, p: r.p_two_tailed, d, degenerate: r.degenerate })
}

/// Uncorrected pointwise comparisons along a time axis (`values[participant][time]`).
pub fn pointwise_group_trace(mdd: &[Vec<f64>], hc: &[Vec<f64>], kind: TTestKind) -> Result<Vec<GroupComparison>> {
    let len = mdd.first().or(hc.first()).map_or(0, Vec::len);
    if mdd.iter().chain(hc).any(|v| v.len() != len) {
        return Err(Error::Shape("traces differ in length".into()));
    }
    (0..len)
        .map(|t| {
            let a: Vec<f64> = mdd.iter().map(|v| v[t]).collect();
            let b: Vec<f64> = hc.iter().map(|v| v[t]).collect();
            group_compare(&a, &b, kind)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaLogits {
    pub positive: f64,
    pub negative: f64,
}

/// Positive-minus-neutral and negative-minus-neutral contrasts per participant.
pub fn delta_logits(
    logits: &BTreeMap<String, BTreeMap<Condition, f64>>,
) -> Result<BTreeMap<String, DeltaLogits>> {
    logits
        .iter()
        .map(|(id, by_cond)| {
            let get = |c: Condition| {
                by_cond.get(&c).copied().ok_or_else(|| Error::Data(format!("participant `{id}` has no {c} logit")))
            };
            let neutral = get(Condition::Neutral)?;
            Ok((
                id.clone(),
                DeltaLogits { positive: get(Condition::Positive)? - neutral, negative: get(Condition::Negative)? - neutral },
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationScope {
    All,
    Mdd,
    Hc,
}

impl CorrelationScope {
    fn admits(self, g: Group) -> bool {
        match self {
            CorrelationScope::All => true,
            CorrelationScope::Mdd => g == Group::Mdd,
            CorrelationScope::Hc => g == Group::Hc,
        }
    }
}

/// One participant's paired observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticipantValue {
    pub group: Group,
    pub power: f64,
    pub logit: f64,
}

/// Spearman correlation between band power and logits within `scope`.
pub fn correlate_power_logits(values: &[ParticipantValue], scope: CorrelationScope) -> Result<Correlation> {
    let (power, logit): (Vec<f64>, Vec<f64>) =
        values.iter().filter(|v| scope.admits(v.group)).map(|v| (v.power, v.logit)).unzip();
    if power.len() < 5 {
        return Err(Error::InsufficientData { needed: 5, got: power.len() });
    }
    spearman(&power, &logit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups() {
        let g = [1.0, 2.0, 3.0, 4.0];
        let r = group_compare(&g, &g, TTestKind::Pooled).unwrap();
        assert_eq!((r.t, r.p, r.d), (0.0, 1.0, Some(0.0)));
    }

    #[test]
    fn sign_is_hc_minus_mdd_and_df() {
        let mdd: Vec<f64> = (0..13).map(|i| i as f64 * 0.1).collect();
        let hc: Vec<f64> = (0..20).map(|i| 2.0 + i as f64 * 0.1).collect();
        let r = group_compare(&mdd, &hc, TTestKind::Pooled).unwrap();
        assert_eq!(r.df, 31.0);
        assert!(r.t > 0.0 && r.d.unwrap() > 0.0);
    }

    #[test]
    fn deltas() {
        let mut m = BTreeMap::new();
        m.insert(
            "a".to_string(),
            [(Condition::Positive, 0.8), (Condition::Neutral, 0.5), (Condition::Negative, 0.9)].into(),
        );
        m.insert("b".to_string(), [(Condition::Positive, 0.3), (Condition::Neutral, 0.3), (Condition::Negative, 0.3)].into());
        let d = delta_logits(&m).unwrap();
        assert!((d["a"].positive - 0.3).abs() < 1e-12 && (d["a"].negative - 0.4).abs() < 1e-12);
        assert_eq!(d["b"], DeltaLogits { positive: 0.0, negative: 0.0 });
        m.get_mut("b").unwrap().remove(&Condition::Neutral);
        assert!(matches!(delta_logits(&m), Err(Error::Data(ref s)) if s.contains('b')));
    }

    #[test]
    fn correlation_scopes() {
        let pv = |g, p, l| ParticipantValue { group: g, power: p, logit: l };
        let vals: Vec<ParticipantValue> = (0..6)
            .map(|i| pv(Group::Mdd, i as f64, i as f64))
            .chain((0..4).map(|i| pv(Group::Hc, i as f64, -(i as f64))))
            .collect();
        assert_eq!(correlate_power_logits(&vals, CorrelationScope::Mdd).unwrap().rho, Some(1.0));
        assert!(matches!(
            correlate_power_logits(&vals, CorrelationScope::Hc),
            Err(Error::InsufficientData { needed: 5, got: 4 })
        ));
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 1.0, 4.0, 3.0, 5.0];
        let pairs: Vec<_> = a.iter().zip(&b).map(|(&p, &l)| pv(Group::Hc, p, l)).collect();
        let rho = correlate_power_logits(&pairs, CorrelationScope::All).unwrap().rho.unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
    }
}
