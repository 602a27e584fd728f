//! Energy functions of the similarity graphs and the Gibbs log-density.

use alloc::vec::Vec;

use super::features::DistanceSpec;
use crate::error::{ensure_dim, Error, Result};

/// `U = Σ_i Σ_k α_{ik} dist_k(x, s_i)` with `α` indexed `i·K + k`.
pub fn energy_pairwise<T>(x: &T, samples: &[T], alpha: &[f64], specs: &[DistanceSpec<T>]) -> Result<f64> {
    ensure_dim(samples.len() * specs.len(), alpha.len())?;
    let mut u = 0.0;
    for (i, s) in samples.iter().enumerate() {
        for (k, spec) in specs.iter().enumerate() {
            u += alpha[i * specs.len() + k] * spec.distance(x, s)?;
        }
    }
    Ok(u)
}

/// Class-graph energy
/// `Σ_j Σ_i Σ_k α_{ijk} (dist_k(x,s_i) + dist_k(x,r_j) + dist_k(s_i,r_j))`,
/// with `α` indexed `(i·|R| + j)·K + k`.
pub fn energy_class<T>(x: &T, samples: &[T], reps: &[T], alpha: &[f64], specs: &[DistanceSpec<T>]) -> Result<f64> {
    let kk = specs.len();
    ensure_dim(samples.len() * reps.len() * kk, alpha.len())?;
    let mut u = 0.0;
    for (i, s) in samples.iter().enumerate() {
        for (j, r) in reps.iter().enumerate() {
            for (k, spec) in specs.iter().enumerate() {
                let a = alpha[(i * reps.len() + j) * kk + k];
                u += a * (spec.distance(x, s)? + spec.distance(x, r)? + spec.distance(s, r)?);
            }
        }
    }
    Ok(u)
}

/// A clique of agents with its hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Clique<A> {
    pub members: Vec<A>,
    pub alpha: f64,
}

/// Multi-agent energy: for each clique `c`,
/// `α_c (Σ_j dist(tuple, c_j) + Σ_{j<l} dist(c_j, c_l))`.
pub fn energy_multiagent<X, A>(
    tuple: &X,
    cliques: &[Clique<A>],
    tuple_dist: impl Fn(&X, &A) -> Result<f64>,
    member_dist: impl Fn(&A, &A) -> Result<f64>,
) -> Result<f64> {
    if cliques.is_empty() {
        return Err(Error::Empty("clique set"));
    }
    let mut u = 0.0;
    for (index, c) in cliques.iter().enumerate() {
        if c.members.is_empty() {
            return Err(Error::MalformedClique {
                index,
                reason: "clique has no members",
            });
        }
        if !c.alpha.is_finite() {
            return Err(Error::MalformedClique {
                index,
                reason: "non-finite hyperparameter",
            });
        }
        let mut inner = 0.0;
        for (j, a) in c.members.iter().enumerate() {
            inner += tuple_dist(tuple, a)?;
            for b in &c.members[j + 1..] {
                inner += member_dist(a, b)?;
            }
        }
        u += c.alpha * inner;
    }
    Ok(u)
}

/// `ln p = -U - ln Z`.
pub fn gibbs_logdensity(energy: f64, log_z: f64) -> f64 {
    -energy - log_z
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lookup(table: &'static [(f64, f64, f64)]) -> DistanceSpec<f64> {
        DistanceSpec::new("table", move |a: &f64, b: &f64| {
            table
                .iter()
                .find(|(p, q, _)| (p == a && q == b) || (p == b && q == a))
                .map(|t| t.2)
                .ok_or(Error::Empty("table entry"))
        })
    }

    #[test]
    fn pairwise_examples() {
        let spec = lookup(&[(0.0, 1.0, 3.0), (0.0, 2.0, 5.0)]);
        let specs = vec![spec];
        assert_eq!(energy_pairwise(&0.0, &[1.0, 2.0], &[1.0, 1.0], &specs).unwrap(), 8.0);
        assert_eq!(energy_pairwise(&0.0, &[1.0, 2.0], &[0.0, 0.0], &specs).unwrap(), 0.0);
        assert_eq!(energy_pairwise(&0.0, &[1.0, 2.0], &[2.0, 2.0], &specs).unwrap(), 16.0);
        assert!(energy_pairwise(&0.0, &[1.0, 2.0], &[1.0], &specs).is_err());
    }

    #[test]
    fn class_example() {
        // x=0, s=1, r=2 with dist(x,s)=1, dist(x,r)=2, dist(s,r)=3
        let specs = vec![lookup(&[(0.0, 1.0, 1.0), (0.0, 2.0, 2.0), (1.0, 2.0, 3.0)])];
        assert_eq!(energy_class(&0.0, &[1.0], &[2.0], &[1.0], &specs).unwrap(), 6.0);
        assert_eq!(energy_class(&0.0, &[1.0], &[2.0], &[0.0], &specs).unwrap(), 0.0);
        assert!(energy_class(&0.0, &[1.0], &[2.0], &[1.0, 1.0], &specs).is_err());
    }

    #[test]
    fn multiagent_examples() {
        let one = |_: &(), _: &u8| Ok(1.0);
        let one_m = |_: &u8, _: &u8| Ok(1.0);
        let c = vec![Clique {
            members: vec![0u8, 1],
            alpha: 2.5,
        }];
        assert_eq!(energy_multiagent(&(), &c, one, one_m).unwrap(), 7.5);
        let z = vec![Clique {
            members: vec![0u8, 1],
            alpha: 0.0,
        }];
        assert_eq!(energy_multiagent(&(), &z, one, one_m).unwrap(), 0.0);
        let none: Vec<Clique<u8>> = vec![];
        assert!(energy_multiagent(&(), &none, one, one_m).is_err());
        let empty = vec![Clique::<u8> {
            members: vec![],
            alpha: 1.0,
        }];
        assert!(matches!(
            energy_multiagent(&(), &empty, one, one_m),
            Err(Error::MalformedClique { index: 0, .. })
        ));
    }

    #[test]
    fn gibbs_examples() {
        assert_eq!(gibbs_logdensity(0.0, 0.0), 0.0);
        assert!(gibbs_logdensity(2.0, 1.3) < gibbs_logdensity(1.0, 1.3));
        assert_eq!(gibbs_logdensity(3.0, 9.1) - gibbs_logdensity(1.0, 9.1), -2.0);
    }
}
