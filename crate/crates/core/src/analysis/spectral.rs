//! Spectral certification of consensus and average-consensus conditions.
//!
//! A weight matrix `A` drives estimates to a consensus when it is row
//! stochastic and its second eigenvalue modulus is below one; the consensus
//! value is the initial average when it is also column stochastic and
//! `ρ(A - J) < 1` with `J = 11ᵀ/N`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rule::{RuleKind, UpdateRule};
use crate::scalar::Real;
use crate::weights::{expected_pairwise_matrix, single_update_matrix};

/// Tolerance on row/column sums, and the gap below one required of a
/// certified eigenvalue modulus.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Eigenvalues whose moduli differ by less than this form one cluster.
const CLUSTER_TOL: f64 = 1e-9;

const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport<T> {
    pub spectral_radius: T,
    pub second_eigenvalue_modulus: T,
    pub row_stochastic: bool,
    pub column_stochastic: bool,
    pub rho_minus_j: T,
    pub certified_consensus: bool,
    pub certified_average: bool,
}

impl<T: Real> SpectralReport<T> {
    pub const CSV_HEADER: &'static str = "spectral_radius,second_eigenvalue_modulus,row_stochastic,\
column_stochastic,rho_minus_j,certified_consensus,certified_average";

    /// Flat `key=value` block, one pair per line.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "spectral_radius={}", self.spectral_radius);
        let _ = writeln!(s, "second_eigenvalue_modulus={}", self.second_eigenvalue_modulus);
        let _ = writeln!(s, "row_stochastic={}", self.row_stochastic);
        let _ = writeln!(s, "column_stochastic={}", self.column_stochastic);
        let _ = writeln!(s, "rho_minus_j={}", self.rho_minus_j);
        let _ = writeln!(s, "certified_consensus={}", self.certified_consensus);
        let _ = writeln!(s, "certified_average={}", self.certified_average);
        s
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.spectral_radius,
            self.second_eigenvalue_modulus,
            self.row_stochastic,
            self.column_stochastic,
            self.rho_minus_j,
            self.certified_consensus,
            self.certified_average
        )
    }
}

fn ensure_square<T: Real>(m: &DMatrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
    }
    Ok(())
}

/// Eigenvalue moduli in descending order. Symmetric input goes through the
/// symmetric solver, everything else through a real Schur decomposition.
pub fn eigenvalue_moduli<T: Real>(m: &DMatrix<T>) -> Result<Vec<T>> {
    ensure_square(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut moduli: Vec<T> = if *m == m.transpose() {
        SymmetricEigen::new(m.clone()).eigenvalues.iter().map(|v| v.abs()).collect()
    } else {
        // repeated eigenvalues of projection products can stall deflation at
        // machine epsilon; loosen the threshold before giving up
        let schur = [1.0, 1e2, 1e4]
            .iter()
            .find_map(|&f| Schur::try_new(m.clone(), T::default_epsilon() * T::of(f), SCHUR_MAX_ITER))
            .ok_or(Error::Eigensolver)?;
        schur.complex_eigenvalues().iter().map(|c| c.re.hypot(c.im)).collect()
    };
    if moduli.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver);
    }
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(moduli)
}

/// `ρ(M) = max_i |λ_i|`.
pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(eigenvalue_moduli(m)?.first().copied().unwrap_or_else(T::zero))
}

/// Second-largest eigenvalue modulus; a value clustered with the largest
/// one counts as equal to it.
pub fn second_eigenvalue_modulus<T: Real>(m: &DMatrix<T>) -> Result<T> {
    let moduli = eigenvalue_moduli(m)?;
    Ok(second_from_sorted(&moduli))
}

fn second_from_sorted<T: Real>(moduli: &[T]) -> T {
    match moduli {
        [] | [_] => T::zero(),
        [first, second, ..] => {
            if (*first - *second).abs() <= T::of(CLUSTER_TOL) {
                *first
            } else {
                *second
            }
        }
    }
}

fn max_sum_deviation<T: Real>(sums: impl Iterator<Item = T>) -> T {
    sums.map(|s| (s - T::one()).abs()).fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Evaluates the four consensus conditions for an effective weight matrix.
pub fn check_consensus_conditions<T: Real>(a: &DMatrix<T>) -> Result<SpectralReport<T>> {
    ensure_square(a)?;
    let n = a.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter("consensus conditions need N >= 2".into()));
    }
    // widen for single precision; f64 stays at STOCHASTIC_TOL
    let tol = T::of(STOCHASTIC_TOL).max(T::default_epsilon() * T::of_usize(4 * n));
    let row_stochastic = max_sum_deviation(a.row_iter().map(|r| r.sum())) <= tol;
    let column_stochastic = max_sum_deviation(a.column_iter().map(|c| c.sum())) <= tol;

    let moduli = eigenvalue_moduli(a)?;
    let spectral_radius = moduli[0];
    let second = second_from_sorted(&moduli);

    let j = DMatrix::from_element(n, n, T::one() / T::of_usize(n));
    let rho_minus_j = self::spectral_radius(&(a - j))?;

    let below_one = |v: T| v < T::one() - tol;
    let certified_consensus = row_stochastic && below_one(second);
    let certified_average = certified_consensus && column_stochastic && below_one(rho_minus_j);

    Ok(SpectralReport {
        spectral_radius,
        second_eigenvalue_modulus: second,
        row_stochastic,
        column_stochastic,
        rho_minus_j,
        certified_consensus,
        certified_average,
    })
}

/// Expected effective matrix when one uniformly chosen node updates per
/// iteration, by exact enumeration over all single-node activations.
/// `pairwise_baseline` returns the expected pairwise gossip matrix.
pub fn expected_weight_matrix<T: Real>(g: &Graph, rule: &UpdateRule<T>) -> Result<DMatrix<T>> {
    if rule.kind == RuleKind::PairwiseBaseline {
        return Ok(expected_pairwise_matrix(g, rule.alpha));
    }
    let n = g.node_count();
    let mut acc = DMatrix::zeros(n, n);
    for i in 0..n {
        acc += single_update_matrix(g, rule, i)?;
    }
    Ok(acc / T::of_usize(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_topology, TopologyKind, TopologyParams};
    use crate::weights::{pairwise_matrix, step_matrix, StepSemantics};

    fn topo(kind: TopologyKind, n: usize) -> Graph {
        build_topology(kind, n, &TopologyParams::default(), 5).unwrap()
    }

    #[test]
    fn radius_examples() {
        assert!((spectral_radius(&DMatrix::<f64>::identity(3, 3)).unwrap() - 1.0).abs() < 1e-12);
        let flip = DMatrix::<f64>::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((spectral_radius(&flip).unwrap() - 1.0).abs() < 1e-12);
        let half = DMatrix::<f64>::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!((spectral_radius(&half).unwrap() - 1.0).abs() < 1e-12);
        assert!(second_eigenvalue_modulus(&half).unwrap().abs() < 1e-12);
    }

    #[test]
    fn non_square_rejected() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(spectral_radius(&m).is_err());
        assert!(check_consensus_conditions(&m).is_err());
    }

    #[test]
    fn non_symmetric_radius() {
        // upper triangular: eigenvalues on the diagonal
        let m = DMatrix::<f64>::from_row_slice(3, 3, &[0.2, 5.0, 1.0, 0.0, -0.7, 2.0, 0.0, 0.0, 0.4]);
        assert!((spectral_radius(&m).unwrap() - 0.7).abs() < 1e-12);
        // rotation by 90 degrees: eigenvalues ±i
        let r = DMatrix::<f64>::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((spectral_radius(&r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_j_certifies_everything() {
        let n = 4;
        let j = DMatrix::from_element(n, n, 0.25_f64);
        let r = check_consensus_conditions(&j).unwrap();
        assert!(r.row_stochastic && r.column_stochastic);
        assert!(r.rho_minus_j.abs() < 1e-12);
        assert!(r.certified_consensus && r.certified_average);
    }

    #[test]
    fn two_node_pairwise_is_j() {
        let w = pairwise_matrix::<f64>(2, 0, 1, 0.5);
        let r = check_consensus_conditions(&w).unwrap();
        assert!(r.row_stochastic && r.column_stochastic);
        assert!(r.rho_minus_j.abs() < 1e-12);
        assert!(r.certified_average);
    }

    #[test]
    fn single_active_hold_matrix_is_not_column_stochastic() {
        let g = topo(TopologyKind::Chain, 3);
        let rule = UpdateRule::new(RuleKind::PureNeighbor);
        let w = step_matrix::<f64>(&g, &rule, &[false, true, false], StepSemantics::Hold).unwrap();
        let r = check_consensus_conditions(&w).unwrap();
        assert!(r.row_stochastic);
        assert!(!r.column_stochastic);
        // hold semantics leaves N-1 unit eigenvalues
        assert!(!r.certified_consensus);
        assert!((r.second_eigenvalue_modulus - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expected_matrix_examples() {
        let g = topo(TopologyKind::Chain, 2);
        let e = expected_weight_matrix::<f64>(&g, &UpdateRule::new(RuleKind::PureNeighbor)).unwrap();
        assert!(e.iter().all(|&v| (v - 0.5).abs() < 1e-15));

        let k3 = topo(TopologyKind::Complete, 3);
        let e = expected_weight_matrix::<f64>(&k3, &UpdateRule::new(RuleKind::NeighborhoodSet)).unwrap();
        assert_eq!(e, e.transpose());
        // enumerate by hand: each single-node projection on K3 is J, so E = J
        assert!(e.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn expected_matrix_rows_sum_to_one() {
        for kind in TopologyKind::ALL {
            let g = topo(kind, 30);
            for rk in [RuleKind::NeighborhoodSet, RuleKind::PureNeighbor, RuleKind::PairwiseBaseline] {
                let e = expected_weight_matrix::<f64>(&g, &UpdateRule::new(rk)).unwrap();
                let dev = e.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
                assert!(dev < 1e-12, "{kind} {rk}: {dev}");
            }
        }
    }

    #[test]
    fn expected_off_diagonal_pattern_for_pure_neighbor() {
        // E[A]_ij = (1/N) * 1/|n_i| for j in n_i, i != j
        let g = topo(TopologyKind::RandomGeometric, 15);
        let e = expected_weight_matrix::<f64>(&g, &UpdateRule::new(RuleKind::PureNeighbor)).unwrap();
        let n = 15.0;
        for i in 0..15 {
            let nb = g.in_neighbors(i);
            for j in 0..15 {
                if i == j {
                    continue;
                }
                let expected = if nb.contains(&j) { 1.0 / (n * nb.len() as f64) } else { 0.0 };
                assert!((e[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn report_serializations() {
        let r = check_consensus_conditions(&DMatrix::from_element(2, 2, 0.5_f64)).unwrap();
        let kv = r.to_key_value();
        assert!(kv.contains("certified_average=true\n"));
        assert_eq!(kv.lines().count(), 7);
        assert_eq!(r.to_csv_row().split(',').count(), SpectralReport::<f64>::CSV_HEADER.split(',').count());
    }

    #[test]
    fn works_in_single_precision() {
        let j = DMatrix::from_element(3, 3, 1.0_f32 / 3.0);
        let r = check_consensus_conditions(&j).unwrap();
        assert!(r.certified_average);
        assert!((r.spectral_radius - 1.0).abs() < 1e-6);
    }
}
