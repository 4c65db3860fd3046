//! Stage arithmetic of the inductive limit `A_i = M_{m_i}(C([0,1]^{N_i}))`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::VilladsenError;
use crate::exact::{abs_q, q_serde, Rational, Q};

/// `m_0, n_0` and the prefixes `n_1, n_2, …` and `l_1, l_2, …`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VilladsenParams {
    pub m0: u64,
    pub n0: u64,
    pub n_seq: Vec<u64>,
    pub l_seq: Vec<u64>,
    #[serde(with = "q_serde")]
    pub target_r: Q,
}

impl VilladsenParams {
    pub fn validate_shape(&self) -> Result<(), VilladsenError> {
        if self.m0 == 0 || self.n0 == 0 || self.n_seq.contains(&0) {
            return Err(VilladsenError::NonPositive);
        }
        if self.n_seq.len() != self.l_seq.len() {
            return Err(VilladsenError::LengthMismatch {
                n: self.n_seq.len(),
                l: self.l_seq.len(),
            });
        }
        if !self.target_r.is_positive() {
            return Err(VilladsenError::NonPositive);
        }
        Ok(())
    }

    /// Largest stage index covered by the prefix.
    pub fn last_stage(&self) -> usize {
        self.n_seq.len()
    }

    /// `n_i = (2^i + 1)·i`, `l_i = i` with `m_0 = 1`:
    /// `N_i/(2m_i) = (n_0/2)(1 + 2^{−i})/2`, and `i! | m_i`.
    fn telescoping(n0: u64, stages: usize, target_r: Q) -> Self {
        assert!(stages <= 62, "prefix too long for u64 entries");
        let n_seq = (1..=stages as u64).map(|i| ((1u64 << i) + 1) * i).collect();
        let l_seq = (1..=stages as u64).collect();
        Self {
            m0: 1,
            n0,
            n_seq,
            l_seq,
            target_r,
        }
    }

    /// A family with `rc → 1/2`.
    pub fn half_family(stages: usize) -> Self {
        Self::telescoping(2, stages, Q::new(1.into(), 2.into()))
    }

    /// A family with `rc → 1`.
    pub fn unit_family(stages: usize) -> Self {
        Self::telescoping(4, stages, Q::one())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageInvariants {
    pub i: usize,
    #[serde(serialize_with = "ser_int")]
    pub m_i: BigInt,
    #[serde(serialize_with = "ser_int")]
    pub big_n_i: BigInt,
    /// `(N_i − 1)/(2 m_i)`.
    #[serde(with = "q_serde")]
    pub rc_i: Q,
    /// `N_i/(2 m_i) = (n_0/(2m_0))·Π n_j/(n_j + l_j)`.
    #[serde(with = "q_serde")]
    pub ratio_i: Q,
}

fn ser_int<S: serde::Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl StageInvariants {
    fn from_parts(i: usize, m: BigInt, big_n: BigInt) -> Self {
        let two_m: BigInt = &m * 2;
        let rc_i = Q::new(&big_n - BigInt::one(), two_m.clone());
        let ratio_i = Q::new(big_n.clone(), two_m);
        Self {
            i,
            m_i: m,
            big_n_i: big_n,
            rc_i,
            ratio_i,
        }
    }
}

/// Rows `0..=up_to` computed incrementally.
pub fn stage_table(p: &VilladsenParams, up_to: usize) -> Result<Vec<StageInvariants>, VilladsenError> {
    p.validate_shape()?;
    if up_to > p.last_stage() {
        return Err(VilladsenError::IndexOutOfRange {
            index: up_to,
            last: p.last_stage(),
        });
    }
    let mut m = BigInt::from(p.m0);
    let mut big_n = BigInt::from(p.n0);
    let mut rows = Vec::with_capacity(up_to + 1);
    rows.push(StageInvariants::from_parts(0, m.clone(), big_n.clone()));
    for i in 1..=up_to {
        let (n, l) = (p.n_seq[i - 1], p.l_seq[i - 1]);
        m *= BigInt::from(n) + BigInt::from(l);
        big_n *= BigInt::from(n);
        rows.push(StageInvariants::from_parts(i, m.clone(), big_n.clone()));
    }
    Ok(rows)
}

pub fn stage_invariants(p: &VilladsenParams, i: usize) -> Result<StageInvariants, VilladsenError> {
    Ok(stage_table(p, i)?.pop().expect("nonempty table"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionVerdict {
    pub holds: bool,
    /// `"prefix-verified"` or `"failed"`; asymptotic conditions are only ever
    /// checked on the supplied prefix.
    pub label: &'static str,
}

impl ConditionVerdict {
    fn of(holds: bool) -> Self {
        Self {
            holds,
            label: if holds { "prefix-verified" } else { "failed" },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub i_max: usize,
    /// `n_i` nondecreasing on the prefix and `n_{i_max} > n_1`.
    pub growth: ConditionVerdict,
    /// `|ratio_i − r|` nonincreasing on the prefix.
    pub convergence: ConditionVerdict,
    pub running_ratio: Vec<Rational>,
    pub final_gap: Rational,
    /// Some `l_i ≠ 0` on the prefix.
    pub nonzero_l: ConditionVerdict,
    pub divisibility: K0Report,
    pub passed: bool,
}

pub fn validate_params(p: &VilladsenParams, i_max: usize, q_max: u64) -> Result<ValidationReport, VilladsenError> {
    let rows = stage_table(p, i_max)?;
    let prefix = &p.n_seq[..i_max];
    let growth = prefix.windows(2).all(|w| w[0] <= w[1]) && prefix.len() >= 2 && prefix[prefix.len() - 1] > prefix[0];
    let gaps: Vec<Q> = rows.iter().map(|r| abs_q(&(&r.ratio_i - &p.target_r))).collect();
    let convergence = gaps.windows(2).all(|w| w[1] <= w[0]);
    let nonzero_l = p.l_seq[..i_max].iter().any(|&l| l != 0);
    let divisibility = divisibility_of(&rows, q_max);
    let growth = ConditionVerdict::of(growth);
    let convergence = ConditionVerdict::of(convergence);
    let nonzero_l = ConditionVerdict::of(nonzero_l);
    let passed = growth.holds && convergence.holds && nonzero_l.holds && divisibility.all_witnessed;
    Ok(ValidationReport {
        i_max,
        growth,
        convergence,
        running_ratio: rows.iter().map(|r| Rational(r.ratio_i.clone())).collect(),
        final_gap: Rational(gaps.last().expect("nonempty").clone()),
        nonzero_l,
        divisibility,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct K0Report {
    /// For each `q ≤ q_max`, the least `i` with `q | m_i`.
    pub witnesses: BTreeMap<u64, Option<usize>>,
    pub all_witnessed: bool,
}

fn divisibility_of(rows: &[StageInvariants], q_max: u64) -> K0Report {
    let witnesses: BTreeMap<u64, Option<usize>> = (1..=q_max)
        .map(|q| {
            let q_big = BigInt::from(q);
            (q, rows.iter().position(|r| r.m_i.is_multiple_of(&q_big)))
        })
        .collect();
    let all_witnessed = witnesses.values().all(Option::is_some);
    K0Report {
        witnesses,
        all_witnessed,
    }
}

/// Divisibility witnesses over the whole prefix.
pub fn k0_divisibility(p: &VilladsenParams, q_max: u64) -> Result<K0Report, VilladsenError> {
    let rows = stage_table(p, p.last_stage())?;
    Ok(divisibility_of(&rows, q_max))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChernReport {
    pub holds: bool,
    /// `N_j = n_0 n_1 ⋯ n_j`.
    #[serde(with = "q_serde")]
    pub lhs: Q,
    /// `(N_i − rank a)·m_j/m_i`.
    #[serde(with = "q_serde")]
    pub rhs: Q,
    /// `Π_{t=i+1}^{j} (n_t + l_t)/n_t · (1 − m_i η/(2N_i))`, present when
    /// `rank a > (η/2)·m_i`.
    pub refined: Option<Rational>,
    pub refined_below_one: Option<bool>,
    /// Why the refined form was not evaluated.
    pub precondition_violation: Option<String>,
}

pub fn chern_obstruction_holds(
    p: &VilladsenParams,
    i: usize,
    j: usize,
    rank_a: u64,
    eta: &Q,
) -> Result<ChernReport, VilladsenError> {
    if i >= j {
        return Err(VilladsenError::Precondition(format!("need i < j, got i = {i}, j = {j}")));
    }
    if !(eta.is_positive() && *eta < Q::one()) {
        return Err(VilladsenError::Precondition("eta must lie in (0,1)".into()));
    }
    let rows = stage_table(p, j)?;
    let (si, sj) = (&rows[i], &rows[j]);
    if rank_a == 0 || BigInt::from(rank_a) > &si.big_n_i * &si.m_i {
        return Err(VilladsenError::Precondition(format!(
            "rank_a must lie in [1, N_i·m_i], got {rank_a}"
        )));
    }
    let lhs = Q::from(sj.big_n_i.clone());
    let rhs = Q::new((&si.big_n_i - BigInt::from(rank_a)) * &sj.m_i, si.m_i.clone());
    let holds = lhs > rhs;

    let m_i = Q::from(si.m_i.clone());
    let threshold = eta / Q::from(BigInt::from(2)) * &m_i;
    let (refined, refined_below_one, precondition_violation) = if Q::from(BigInt::from(rank_a)) > threshold {
        let growth: Q = (i + 1..=j)
            .map(|t| {
                let (n, l) = (p.n_seq[t - 1], p.l_seq[t - 1]);
                Q::new(BigInt::from(n + l), BigInt::from(n))
            })
            .product();
        let factor = Q::one() - &m_i * eta / (Q::from(BigInt::from(2)) * Q::from(si.big_n_i.clone()));
        let value = growth * factor;
        let below = value < Q::one();
        (Some(Rational(value)), Some(below), None)
    } else {
        (
            None,
            None,
            Some(format!(
                "rank a = {rank_a} is not above (eta/2)·m_i = {}",
                crate::exact::format_q(&threshold)
            )),
        )
    };
    Ok(ChernReport {
        holds,
        lhs,
        rhs,
        refined,
        refined_below_one,
        precondition_violation,
    })
}

/// `rank a / m_i > η/2`, with the chain `2r·(η/(4r)) = η/2` checked for the
/// target `r`.
pub fn rank_bound_check(p: &VilladsenParams, i: usize, rank_a: u64, eta: &Q) -> Result<bool, VilladsenError> {
    let row = stage_invariants(p, i)?;
    let two = Q::from(BigInt::from(2));
    let r = &p.target_r;
    let chain = &two * r * (eta / (Q::from(BigInt::from(4)) * r));
    if chain != eta / &two {
        return Err(VilladsenError::Precondition("chain identity failed".into()));
    }
    Ok(Q::new(BigInt::from(rank_a), row.m_i) > chain)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MoritaResult {
    pub compatible: bool,
    /// Least `(n, m)` with `r/n = s/m`.
    pub witness: Option<(u64, u64)>,
}

/// `r/n = s/m` means `m/n = s/r`; the least solution is the reduced form of
/// `s/r`, reported when both entries are at most `bound`.
pub fn morita_rationality_check(r: &Q, s: &Q, bound: u64) -> Result<MoritaResult, VilladsenError> {
    if !(r.is_positive() && s.is_positive()) {
        return Err(VilladsenError::NonPositive);
    }
    let ratio = s / r;
    let (m, n) = (ratio.numer().clone(), ratio.denom().clone());
    let fits = |x: &BigInt| *x <= BigInt::from(bound);
    let witness = if fits(&n) && fits(&m) {
        Some((
            u64::try_from(n).expect("bounded"),
            u64::try_from(m).expect("bounded"),
        ))
    } else {
        None
    };
    Ok(MoritaResult {
        compatible: witness.is_some(),
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use crate::rsh::{rc_upper_bound, RshDecomposition};
    use crate::space::SampledSpace;
    use std::sync::Arc;

    fn simple(n_seq: Vec<u64>, l_seq: Vec<u64>) -> VilladsenParams {
        VilladsenParams {
            m0: 1,
            n0: 2,
            n_seq,
            l_seq,
            target_r: q(1, 2),
        }
    }

    #[test]
    fn recurrences() {
        let p = simple(vec![3, 5], vec![1, 2]);
        let rows = stage_table(&p, 2).unwrap();
        let m: Vec<i64> = vec![1, 4, 28];
        let n: Vec<i64> = vec![2, 6, 30];
        for (r, (m, n)) in rows.iter().zip(m.into_iter().zip(n)) {
            assert_eq!(r.m_i, BigInt::from(m));
            assert_eq!(r.big_n_i, BigInt::from(n));
            assert_eq!(r.rc_i, q(n - 1, 2 * m));
        }
        assert!(matches!(stage_table(&p, 3), Err(VilladsenError::IndexOutOfRange { index: 3, last: 2 })));
    }

    #[test]
    fn rc_agrees_with_decomposition_bound() {
        let p = VilladsenParams::half_family(3);
        for row in stage_table(&p, 3).unwrap() {
            let dim = u64::try_from(row.big_n_i.clone()).unwrap();
            let size = u64::try_from(row.m_i.clone()).unwrap();
            let space = Arc::new(SampledSpace::discrete("cube", dim, ["o"]).unwrap());
            let d = RshDecomposition::homogeneous("A_i", space, size).unwrap();
            assert_eq!(rc_upper_bound(&d), row.rc_i);
        }
    }

    #[test]
    fn half_family_converges() {
        let p = VilladsenParams::half_family(24);
        let rows = stage_table(&p, 24).unwrap();
        for r in &rows {
            let pow = Q::from(BigInt::from(2).pow(r.i as u32));
            assert_eq!(r.ratio_i, (Q::one() + Q::one() / pow) / Q::from(BigInt::from(2)));
        }
        let first = rows
            .iter()
            .position(|r| crate::exact::q_to_f64(&abs_q(&(&r.rc_i - q(1, 2)))) < 1e-6)
            .unwrap();
        assert!(first <= 21, "{first}");
        let report = validate_params(&p, 24, 10).unwrap();
        assert!(report.passed);
        assert_eq!(report.growth.label, "prefix-verified");
    }

    #[test]
    fn zero_l_fails_and_is_constant() {
        let p = simple(vec![2, 3, 4, 5], vec![0; 4]);
        let report = validate_params(&p, 4, 3).unwrap();
        assert!(report.running_ratio.iter().all(|r| r.0 == Q::one()));
        assert!(!report.nonzero_l.holds);
        assert_eq!(report.nonzero_l.label, "failed");
        assert!(!report.passed);
    }

    #[test]
    fn unit_family_monotone() {
        let p = VilladsenParams::unit_family(12);
        let report = validate_params(&p, 12, 6).unwrap();
        assert!(report.convergence.holds);
        assert!(report.running_ratio.windows(2).all(|w| w[1].0 < w[0].0));
        assert!(report.running_ratio.iter().all(|r| r.0 > Q::one()));
    }

    #[test]
    fn divisibility_witnesses() {
        let p = simple(vec![2, 2, 2], vec![2, 2, 6]);
        // m = 1, 4, 16, 128
        let k = k0_divisibility(&p, 8).unwrap();
        assert_eq!(k.witnesses[&1], Some(0));
        assert_eq!(k.witnesses[&2], Some(1));
        assert_eq!(k.witnesses[&4], Some(1));
        assert_eq!(k.witnesses[&8], Some(2));
        assert_eq!(k.witnesses[&3], None);
        assert!(!k.all_witnessed);
    }

    #[test]
    fn shape_errors() {
        assert_eq!(stage_table(&simple(vec![1], vec![]), 0), Err(VilladsenError::LengthMismatch { n: 1, l: 0 }));
        assert_eq!(stage_table(&simple(vec![0], vec![1]), 0), Err(VilladsenError::NonPositive));
    }

    #[test]
    fn chern_examples() {
        let p = simple(vec![3, 5], vec![1, 2]);
        // N = 2, 6, 30 and m = 1, 4, 28
        let r = chern_obstruction_holds(&p, 1, 2, 1, &q(1, 2)).unwrap();
        assert_eq!(r.lhs, q(30, 1));
        assert_eq!(r.rhs, q(35, 1));
        assert!(!r.holds);
        let r = chern_obstruction_holds(&p, 1, 2, 2, &q(1, 2)).unwrap();
        assert_eq!(r.rhs, q(28, 1));
        assert!(r.holds);
        // growth 7/5 times 1 − 4·(1/2)/12
        assert_eq!(r.refined.unwrap().0, q(7, 6));
        assert_eq!(r.refined_below_one, Some(false));
        let low = chern_obstruction_holds(&p, 1, 2, 1, &q(3, 4)).unwrap();
        assert!(low.refined.is_none());
        assert!(low.precondition_violation.is_some());
        assert!(chern_obstruction_holds(&p, 2, 1, 1, &q(1, 2)).is_err());
        assert!(chern_obstruction_holds(&p, 1, 2, 25, &q(1, 2)).is_err());
        assert!(chern_obstruction_holds(&p, 1, 2, 1, &q(1, 1)).is_err());
    }

    #[test]
    fn chern_monotone_in_rank() {
        let p = simple(vec![3, 5], vec![1, 2]);
        let mut seen_true = false;
        for rank in 1..=24 {
            let h = chern_obstruction_holds(&p, 1, 2, rank, &q(1, 2)).unwrap().holds;
            assert!(!seen_true || h);
            seen_true |= h;
        }
    }

    #[test]
    fn rank_bound_threshold() {
        let p = simple(vec![3, 5], vec![1, 2]);
        // m_2 = 28, η/2 · m_2 = 7
        assert!(!rank_bound_check(&p, 2, 7, &q(1, 2)).unwrap());
        assert!(rank_bound_check(&p, 2, 8, &q(1, 2)).unwrap());
    }

    #[test]
    fn morita() {
        let r = morita_rationality_check(&q(1, 2), &q(3, 4), 10).unwrap();
        assert_eq!(r.witness, Some((2, 3)));
        assert_eq!(q(1, 2) / q(2, 1), q(3, 4) / q(3, 1));
        let far = morita_rationality_check(&q(1, 1), &q(101, 100), 50).unwrap();
        assert!(!far.compatible);
    }
}
