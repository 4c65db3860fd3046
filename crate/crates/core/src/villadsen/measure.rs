//! Probability measures on cubes `[0,1]^N` in the form the trace-simplex
//! maps need: finite mixtures of product measures with finitely supported
//! coordinate marginals, plus finitely many atoms. Marginals, block
//! averages and coordinate permutations stay inside this class.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::VilladsenError;
use crate::exact::{q_serde, Rational, Q};

/// Largest number of atoms [`MarginalMeasure::expand`] will produce.
pub const MAX_EXPANSION: usize = 1 << 20;

/// Finitely supported measure on `[0,1]`: position → mass.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Discrete1D(pub BTreeMap<Q, Q>);

impl Serialize for Discrete1D {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let view: BTreeMap<Rational, Rational> = self
            .0
            .iter()
            .map(|(k, v)| (Rational(k.clone()), Rational(v.clone())))
            .collect();
        view.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Discrete1D {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let view = BTreeMap::<Rational, Rational>::deserialize(d)?;
        Ok(Discrete1D(view.into_iter().map(|(k, v)| (k.0, v.0)).collect()))
    }
}

impl Discrete1D {
    pub fn point(x: Q) -> Self {
        Discrete1D([(x, Q::one())].into())
    }

    pub fn mass(&self) -> Q {
        self.0.values().sum()
    }
}

/// `weight · (ν_1 ⊗ ⋯ ⊗ ν_N)` with each `ν_k` a probability measure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductComponent {
    #[serde(with = "q_serde")]
    pub weight: Q,
    pub marginals: Vec<Discrete1D>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(with = "q_serde")]
    pub weight: Q,
    #[serde(with = "point_serde")]
    pub point: Vec<Q>,
}

mod point_serde {
    use super::{Q, Rational};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> Result<S::Ok, S::Error> {
        x.iter().cloned().map(Rational).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        Ok(Vec::<Rational>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalMeasure {
    pub dim: usize,
    pub components: Vec<ProductComponent>,
    pub atoms: Vec<Atom>,
}

fn in_unit(x: &Q) -> bool {
    !x.is_negative() && *x <= Q::one()
}

impl MarginalMeasure {
    /// Checks shapes, positivity, unit-interval support and total mass 1.
    pub fn new(dim: usize, components: Vec<ProductComponent>, atoms: Vec<Atom>) -> Result<Self, VilladsenError> {
        let m = Self { dim, components, atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), VilladsenError> {
        let bad = |msg: &str| Err(VilladsenError::BadMeasure(msg.to_string()));
        for c in &self.components {
            if c.marginals.len() != self.dim {
                return bad("component dimension differs from the cube dimension");
            }
            if c.weight.is_negative() {
                return bad("negative component weight");
            }
            for nu in &c.marginals {
                if !nu.mass().is_one() {
                    return bad("coordinate marginal is not a probability measure");
                }
                if nu.0.iter().any(|(x, w)| !in_unit(x) || w.is_negative()) {
                    return bad("coordinate marginal outside [0,1] or negative");
                }
            }
        }
        for a in &self.atoms {
            if a.point.len() != self.dim {
                return bad("atom dimension differs from the cube dimension");
            }
            if a.weight.is_negative() || !a.point.iter().all(in_unit) {
                return bad("atom outside the cube or with negative weight");
            }
        }
        if !self.total_mass().is_one() {
            return bad("total mass is not 1");
        }
        Ok(())
    }

    pub fn product(marginals: Vec<Discrete1D>) -> Self {
        Self {
            dim: marginals.len(),
            components: vec![ProductComponent {
                weight: Q::one(),
                marginals,
            }],
            atoms: Vec::new(),
        }
    }

    pub fn point_mass(point: Vec<Q>) -> Self {
        Self {
            dim: point.len(),
            components: Vec::new(),
            atoms: vec![Atom {
                weight: Q::one(),
                point,
            }],
        }
    }

    pub fn total_mass(&self) -> Q {
        self.components.iter().map(|c| &c.weight).chain(self.atoms.iter().map(|a| &a.weight)).sum()
    }

    /// Image under `x ↦ (x_{c_1}, …, x_{c_k})`.
    pub fn marginal(&self, coords: &[usize]) -> Result<Self, VilladsenError> {
        if let Some(&c) = coords.iter().find(|&&c| c >= self.dim) {
            return Err(VilladsenError::DimensionMismatch {
                expected: self.dim,
                got: c + 1,
            });
        }
        Ok(Self {
            dim: coords.len(),
            components: self
                .components
                .iter()
                .map(|c| ProductComponent {
                    weight: c.weight.clone(),
                    marginals: coords.iter().map(|&k| c.marginals[k].clone()).collect(),
                })
                .collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    weight: a.weight.clone(),
                    point: coords.iter().map(|&k| a.point[k].clone()).collect(),
                })
                .collect(),
        })
    }

    fn scaled(mut self, factor: &Q) -> Self {
        for c in &mut self.components {
            c.weight *= factor;
        }
        for a in &mut self.atoms {
            a.weight *= factor;
        }
        self
    }

    /// `Σ_k w_k μ_k` for measures of equal dimension.
    pub fn mixture(dim: usize, parts: Vec<(Q, MarginalMeasure)>) -> Result<Self, VilladsenError> {
        let mut out = Self {
            dim,
            components: Vec::new(),
            atoms: Vec::new(),
        };
        for (w, m) in parts {
            if m.dim != dim {
                return Err(VilladsenError::DimensionMismatch { expected: dim, got: m.dim });
            }
            let m = m.scaled(&w);
            out.components.extend(m.components);
            out.atoms.extend(m.atoms);
        }
        Ok(out)
    }

    /// The measure as a finite sum of point masses.
    pub fn expand(&self) -> Result<BTreeMap<Vec<Q>, Q>, VilladsenError> {
        let mut out: BTreeMap<Vec<Q>, Q> = BTreeMap::new();
        for c in &self.components {
            if c.weight.is_zero() {
                continue;
            }
            let size = c.marginals.iter().try_fold(1usize, |acc, nu| acc.checked_mul(nu.0.len().max(1)));
            if size.is_none_or(|s| s > MAX_EXPANSION) {
                return Err(VilladsenError::TooLarge);
            }
            let mut partial: Vec<(Vec<Q>, Q)> = vec![(Vec::with_capacity(self.dim), c.weight.clone())];
            for nu in &c.marginals {
                partial = partial
                    .into_iter()
                    .flat_map(|(pt, w)| {
                        nu.0.iter().map(move |(x, m)| {
                            let mut p = pt.clone();
                            p.push(x.clone());
                            (p, &w * m)
                        })
                    })
                    .collect();
            }
            for (p, w) in partial {
                *out.entry(p).or_insert_with(Q::zero) += w;
            }
        }
        for a in &self.atoms {
            *out.entry(a.point.clone()).or_insert_with(Q::zero) += &a.weight;
        }
        out.retain(|_, w| !w.is_zero());
        Ok(out)
    }
}

/// `‖μ − ν‖ = Σ_x |μ(x) − ν(x)|`, exact.
pub fn total_variation(mu: &MarginalMeasure, nu: &MarginalMeasure) -> Result<Q, VilladsenError> {
    if mu.dim != nu.dim {
        return Err(VilladsenError::DimensionMismatch {
            expected: mu.dim,
            got: nu.dim,
        });
    }
    let mut diff = mu.expand()?;
    for (p, w) in nu.expand()? {
        *diff.entry(p).or_insert_with(Q::zero) -= w;
    }
    Ok(diff.values().map(|d| d.abs()).sum())
}

/// Average of the marginals on the consecutive blocks of `block` coordinates
/// starting at the given offsets.
fn block_average(mu: &MarginalMeasure, block: usize, starts: &[usize]) -> Result<MarginalMeasure, VilladsenError> {
    let w = Q::new(1.into(), (starts.len() as u64).into());
    let parts = starts
        .iter()
        .map(|&s| {
            let coords: Vec<usize> = (s..s + block).collect();
            Ok((w.clone(), mu.marginal(&coords)?))
        })
        .collect::<Result<Vec<_>, VilladsenError>>()?;
    MarginalMeasure::mixture(block, parts)
}

/// `φ^♯(μ) = n/(n+l)·(1/n)Σ_t μ_{block t} + l/(n+l)·λ` for `μ` on
/// `[0,1]^{nN}`, where `λ` is the atom list (a convex combination).
/// With `exact = false` the atom term is dropped and the block average gets
/// full mass.
pub fn pushforward(
    mu: &MarginalMeasure,
    n: u64,
    l: u64,
    atoms: &[Atom],
    exact: bool,
) -> Result<MarginalMeasure, VilladsenError> {
    if n == 0 || mu.dim % n as usize != 0 {
        return Err(VilladsenError::DimensionMismatch {
            expected: mu.dim,
            got: n as usize,
        });
    }
    let block = mu.dim / n as usize;
    let starts: Vec<usize> = (0..n as usize).map(|t| t * block).collect();
    let average = block_average(mu, block, &starts)?;
    if !exact || l == 0 {
        return Ok(average);
    }
    if atoms.is_empty() {
        return Err(VilladsenError::MissingAtoms);
    }
    let lambda = MarginalMeasure {
        dim: block,
        components: Vec::new(),
        atoms: atoms.to_vec(),
    };
    if lambda.atoms.iter().any(|a| a.point.len() != block) {
        return Err(VilladsenError::DimensionMismatch {
            expected: block,
            got: lambda.atoms.iter().map(|a| a.point.len()).find(|&d| d != block).unwrap_or(0),
        });
    }
    if !lambda.total_mass().is_one() {
        return Err(VilladsenError::BadMeasure("atom weights must sum to 1".into()));
    }
    let total = Q::from(num_bigint::BigInt::from(n + l));
    MarginalMeasure::mixture(
        block,
        vec![
            (Q::from(num_bigint::BigInt::from(n)) / &total, average),
            (Q::from(num_bigint::BigInt::from(l)) / &total, lambda),
        ],
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntertwineDefect {
    /// Number of `D_t` contained in some `B_k`, `k ≤ ⌊N2/M1⌋`.
    #[serde(rename = "L")]
    pub l: u64,
    /// `2(N2 − N1·L)/N2`.
    #[serde(with = "q_serde")]
    pub bound: Q,
}

fn check_order(n1: u64, m1: u64, n2: u64) -> Result<(), VilladsenError> {
    if n1 == 0 || n1 > m1 || m1 > n2 {
        return Err(VilladsenError::Ordering { n1, m1, n2 });
    }
    Ok(())
}

/// With `D_t = {(t−1)N1+1, …, tN1}` and `B_k = {(k−1)M1+1, …, kM1}`.
pub fn intertwine_defect(n1: u64, m1: u64, n2: u64) -> Result<IntertwineDefect, VilladsenError> {
    check_order(n1, m1, n2)?;
    let l: u64 = (0..n2 / m1).map(|k| contained_blocks(n1, m1, k).len() as u64).sum();
    let bound = Q::new((2 * (n2 as i128 - (n1 * l) as i128)).into(), n2.into());
    Ok(IntertwineDefect { l, bound })
}

/// Zero-based indices `t` with `D_t ⊆ B_k` (`k` zero-based), in order.
fn contained_blocks(n1: u64, m1: u64, k: u64) -> Vec<u64> {
    let (lo, hi) = (k * m1, (k + 1) * m1);
    let first = lo.div_ceil(n1);
    (first..).take_while(|t| (t + 1) * n1 <= hi).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `P([0,1]^{M1}) → P([0,1]^{N1})`.
    Gamma,
    /// `P([0,1]^{N2}) → P([0,1]^{M1})`.
    Delta,
}

/// `γ(μ) = (1/⌊M1/N1⌋) Σ_{s ≤ ⌊M1/N1⌋} μ_{{(s−1)N1+1, …, sN1}}` and
/// `δ(μ) = (1/⌊N2/M1⌋) Σ_k σ_k^*(μ_{B_k})`, where `σ_k` rotates `B_k` so it
/// starts at its first contained `D_t`.
pub fn intertwine_apply(
    mu: &MarginalMeasure,
    direction: Direction,
    n1: u64,
    m1: u64,
    n2: u64,
) -> Result<MarginalMeasure, VilladsenError> {
    check_order(n1, m1, n2)?;
    let (n1u, m1u) = (n1 as usize, m1 as usize);
    match direction {
        Direction::Gamma => {
            if mu.dim != m1u {
                return Err(VilladsenError::DimensionMismatch {
                    expected: m1u,
                    got: mu.dim,
                });
            }
            let starts: Vec<usize> = (0..m1u / n1u).map(|s| s * n1u).collect();
            block_average(mu, n1u, &starts)
        }
        Direction::Delta => {
            if mu.dim != n2 as usize {
                return Err(VilladsenError::DimensionMismatch {
                    expected: n2 as usize,
                    got: mu.dim,
                });
            }
            let count = n2 / m1;
            let w = Q::new(1.into(), count.into());
            let parts = (0..count)
                .map(|k| {
                    let base = (k * m1) as usize;
                    let shift = contained_blocks(n1, m1, k)
                        .first()
                        .map_or(0, |&t| t as usize * n1u - base);
                    let coords: Vec<usize> = (0..m1u).map(|r| base + (r + shift) % m1u).collect();
                    Ok((w.clone(), mu.marginal(&coords)?))
                })
                .collect::<Result<Vec<_>, VilladsenError>>()?;
            MarginalMeasure::mixture(m1u, parts)
        }
    }
}

/// `‖(γ∘δ)(μ) − φ^♯(μ)‖` with `φ^♯` the simplified pushforward by
/// `n = N2/N1`, for `μ` on `[0,1]^{N2}`.
pub fn composed_defect(mu: &MarginalMeasure, n1: u64, m1: u64, n2: u64) -> Result<Q, VilladsenError> {
    check_order(n1, m1, n2)?;
    if n2 % n1 != 0 {
        return Err(VilladsenError::Precondition(format!("N1 = {n1} does not divide N2 = {n2}")));
    }
    let via = intertwine_apply(&intertwine_apply(mu, Direction::Delta, n1, m1, n2)?, Direction::Gamma, n1, m1, n2)?;
    let direct = pushforward(mu, n2 / n1, 0, &[], false)?;
    total_variation(&via, &direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn coin(p: Q) -> Discrete1D {
        Discrete1D([(q(0, 1), Q::one() - &p), (q(1, 1), p)].into())
    }

    #[test]
    fn defect_example() {
        let d = intertwine_defect(2, 5, 20).unwrap();
        assert_eq!(d.l, 8);
        assert_eq!(d.bound, q(2, 5));
        // enumerate directly
        let mut count = 0;
        for t in 1..=10u64 {
            let dt = ((t - 1) * 2 + 1, t * 2);
            for k in 1..=4u64 {
                let bk = ((k - 1) * 5 + 1, k * 5);
                if bk.0 <= dt.0 && dt.1 <= bk.1 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 8);
    }

    #[test]
    fn perfect_nesting() {
        let d = intertwine_defect(2, 6, 24).unwrap();
        assert_eq!(d.l, 12);
        assert!(d.bound.is_zero());
        assert!(matches!(intertwine_defect(3, 2, 10), Err(VilladsenError::Ordering { .. })));
    }

    #[test]
    fn point_mass_pushforward() {
        let x: Vec<Q> = vec![q(0, 1), q(1, 2), q(1, 1), q(1, 4)];
        let out = pushforward(&MarginalMeasure::point_mass(x), 2, 0, &[], true).unwrap();
        let expanded = out.expand().unwrap();
        let expect: BTreeMap<Vec<Q>, Q> = [(vec![q(0, 1), q(1, 2)], q(1, 2)), (vec![q(1, 1), q(1, 4)], q(1, 2))].into();
        assert_eq!(expanded, expect);
    }

    #[test]
    fn identical_marginals_are_fixed() {
        let nu = coin(q(1, 3));
        let mu = MarginalMeasure::product(vec![nu.clone(); 6]);
        let out = pushforward(&mu, 3, 0, &[], true).unwrap();
        assert_eq!(total_variation(&out, &MarginalMeasure::product(vec![nu; 2])).unwrap(), q(0, 1));
        assert!(out.total_mass().is_one());
    }

    #[test]
    fn exact_mode_mixes_atoms() {
        let mu = MarginalMeasure::product(vec![coin(q(1, 2)); 4]);
        let atom = Atom {
            weight: Q::one(),
            point: vec![q(1, 3), q(1, 3)],
        };
        assert_eq!(pushforward(&mu, 2, 1, &[], true).unwrap_err(), VilladsenError::MissingAtoms);
        let exact = pushforward(&mu, 2, 1, &[atom], true).unwrap();
        assert!(exact.total_mass().is_one());
        let simple = pushforward(&mu, 2, 1, &[], false).unwrap();
        // the atom sits off the support of the product part
        assert_eq!(total_variation(&exact, &simple).unwrap(), q(2, 3));
    }

    #[test]
    fn gamma_of_identical_product() {
        let nu = coin(q(2, 5));
        let mu = MarginalMeasure::product(vec![nu.clone(); 5]);
        let out = intertwine_apply(&mu, Direction::Gamma, 2, 5, 20).unwrap();
        assert!(out.total_mass().is_one());
        assert_eq!(total_variation(&out, &MarginalMeasure::product(vec![nu; 2])).unwrap(), q(0, 1));
    }

    #[test]
    fn delta_rotates_to_contained_blocks() {
        // coordinate c carries a point mass at c/20
        let x: Vec<Q> = (0..20).map(|c| q(c, 20)).collect();
        let out = intertwine_apply(&MarginalMeasure::point_mass(x), Direction::Delta, 2, 5, 20).unwrap();
        let atoms = out.expand().unwrap();
        let quarter = q(1, 4);
        let row = |cs: [i64; 5]| cs.iter().map(|&c| q(c, 20)).collect::<Vec<_>>();
        // B_2 = coordinates 5..10 starts at D containing 6 (zero-based)
        let expect: BTreeMap<Vec<Q>, Q> = [
            (row([0, 1, 2, 3, 4]), quarter.clone()),
            (row([6, 7, 8, 9, 5]), quarter.clone()),
            (row([10, 11, 12, 13, 14]), quarter.clone()),
            (row([16, 17, 18, 19, 15]), quarter),
        ]
        .into();
        assert_eq!(atoms, expect);
    }

    #[test]
    fn composed_defect_within_bound() {
        let marginals: Vec<Discrete1D> = (0..20).map(|c| coin(q(c % 7, 7))).collect();
        let mu = MarginalMeasure::product(marginals);
        let defect = composed_defect(&mu, 2, 5, 20).unwrap();
        assert!(defect <= q(2, 5), "{defect}");
        assert!(defect.is_positive());
    }

    #[test]
    fn validation() {
        let bad = MarginalMeasure::new(1, vec![], vec![Atom { weight: q(1, 2), point: vec![q(0, 1)] }]);
        assert!(matches!(bad, Err(VilladsenError::BadMeasure(_))));
        let outside = MarginalMeasure::new(1, vec![], vec![Atom { weight: q(1, 1), point: vec![q(3, 2)] }]);
        assert!(matches!(outside, Err(VilladsenError::BadMeasure(_))));
    }
}
