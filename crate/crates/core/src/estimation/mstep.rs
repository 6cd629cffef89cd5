//! The constrained parameter update: completed-data means and scatters,
//! weight estimation, and the eigenvalue-ratio projection.

use nalgebra::{DMatrix, DVector};

use crate::constraints::{truncate_eigenvalues, EigenSystem};
use crate::data::{ClusterParams, DataSet, FitConfig};
use crate::error::{Error, Result};
use crate::gaussian::{reliable_cells, ClusterDensity};

/// Membership mass below which a cluster is declared collapsed.
const MASS_FLOOR: f64 = 1e-10;

/// One pass of the parameter update.
///
/// For every cluster, each unit's unreliable cells are replaced by their
/// conditional expectations under the previous parameters, and the
/// conditional covariance of those cells is added back into the scatter so
/// imputation does not deflate it. Means and scatters are weighted by
/// memberships raised to the fuzziness exponent; weights are the
/// normalized masses (or stay uniform under `equal_weights`); finally all
/// covariances are projected onto the eigenvalue-ratio constraint.
pub fn m_step(
    data: &DataSet,
    w: &DMatrix<bool>,
    u: &DMatrix<f64>,
    previous: &ClusterParams,
    config: &FitConfig,
) -> Result<ClusterParams> {
    let n = data.n_units();
    let j_vars = data.n_vars();
    let k = previous.k();
    let m = config.m;

    let mut masses = vec![0.0_f64; k];
    let mut means: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut scatters: Vec<DMatrix<f64>> = Vec::with_capacity(k);

    for c in 0..k {
        let mut density = ClusterDensity::new(&previous.means[c], &previous.covariances[c]);

        // Per-unit weights, completed rows, and imputation corrections.
        let mut weights = vec![0.0_f64; n];
        let mut completed: Vec<DVector<f64>> = Vec::with_capacity(n);
        let mut corrections: Vec<(Vec<usize>, DMatrix<f64>)> = Vec::with_capacity(n);
        for i in 0..n {
            let u_ic = u[(i, c)];
            weights[i] = if m == 1.0 { u_ic } else { u_ic.powf(m) };
            let x = data.unit(i);
            let reliable = reliable_cells(w, i);
            let unreliable: Vec<usize> = (0..j_vars).filter(|&j| !w[(i, j)]).collect();
            let (cond_mean, cond_cov) = density
                .vector_moments(&x, &reliable, &unreliable)
                .map_err(|e| e.with_cluster(c))?;
            let mut row = x.clone();
            for (pos, &j) in unreliable.iter().enumerate() {
                row[j] = cond_mean[pos];
            }
            completed.push(row);
            corrections.push((unreliable, cond_cov));
        }

        let mass: f64 = weights.iter().sum();
        if mass < MASS_FLOOR {
            return Err(Error::DegenerateCluster { cluster: c });
        }
        masses[c] = mass;

        let mut mean = DVector::zeros(j_vars);
        for i in 0..n {
            if weights[i] > 0.0 {
                mean += weights[i] * &completed[i];
            }
        }
        mean /= mass;

        let mut scatter = DMatrix::zeros(j_vars, j_vars);
        for i in 0..n {
            if weights[i] == 0.0 {
                continue;
            }
            let centered = &completed[i] - &mean;
            scatter.ger(weights[i], &centered, &centered, 1.0);
            let (cells, cond_cov) = &corrections[i];
            for (r_pos, &r) in cells.iter().enumerate() {
                for (c_pos, &cc) in cells.iter().enumerate() {
                    scatter[(r, cc)] += weights[i] * cond_cov[(r_pos, c_pos)];
                }
            }
        }
        scatter /= mass;

        means.push(mean);
        scatters.push(scatter);
    }

    let systems: Vec<EigenSystem> = scatters
        .iter()
        .zip(&masses)
        .enumerate()
        .map(|(c, (s, &mass))| {
            EigenSystem::from_covariance(s, mass).map_err(|e| e.with_cluster(c))
        })
        .collect::<Result<_>>()?;
    let covariances = truncate_eigenvalues(&systems, config.c)?;

    let total_mass: f64 = masses.iter().sum();
    let weights = if config.equal_weights {
        DVector::from_element(k, 1.0 / k as f64)
    } else {
        DVector::from_fn(k, |c, _| masses[c] / total_mass)
    };

    Ok(ClusterParams { weights, means, covariances })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_params(k: usize, j: usize) -> ClusterParams {
        ClusterParams {
            weights: DVector::from_element(k, 1.0 / k as f64),
            means: (0..k).map(|_| DVector::zeros(j)).collect(),
            covariances: (0..k).map(|_| DMatrix::identity(j, j)).collect(),
        }
    }

    #[test]
    fn m_step_recovers_sample_moments_on_clean_data() {
        // Fully reliable data, one cluster, unit memberships: the update is
        // the sample mean and the population covariance.
        let values = DMatrix::from_row_slice(4, 2, &[
            1.0, 2.0, //
            3.0, 0.0, //
            -1.0, 4.0, //
            5.0, -1.0,
        ]);
        let data = DataSet::from_complete(values.clone(), None).unwrap();
        let w = DMatrix::from_element(4, 2, true);
        let u = DMatrix::from_element(4, 1, 1.0);
        let config = FitConfig::new(1);
        let got = m_step(&data, &w, &u, &simple_params(1, 2), &config).unwrap();

        assert!((got.means[0][0] - 2.0).abs() < 1e-12);
        assert!((got.means[0][1] - 1.25).abs() < 1e-12);
        // Population covariance of the four rows about (2, 1.25).
        let mut expect = DMatrix::zeros(2, 2);
        for i in 0..4 {
            let d = DVector::from_column_slice(&[values[(i, 0)] - 2.0, values[(i, 1)] - 1.25]);
            expect += &d * d.transpose();
        }
        expect /= 4.0;
        assert!((got.covariances[0].clone() - expect).norm() < 1e-9);
        assert_eq!(got.weights[0], 1.0);
    }

    #[test]
    fn m_step_imputes_and_corrects_scatter() {
        // Unit 0 has an unreliable second cell. Under the previous
        // parameters (correlation 0.9) it is imputed as 0.9 and the
        // conditional variance 0.19 is added to the scatter.
        let values = DMatrix::from_row_slice(2, 2, &[1.0, 99.0, -1.0, -0.9]);
        let data = DataSet::from_complete(values, None).unwrap();
        let mut w = DMatrix::from_element(2, 2, true);
        w[(0, 1)] = false;
        let u = DMatrix::from_element(2, 1, 1.0);
        let previous = ClusterParams {
            weights: DVector::from_column_slice(&[1.0]),
            means: vec![DVector::zeros(2)],
            covariances: vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0])],
        };
        let config = FitConfig::new(1);
        let got = m_step(&data, &w, &u, &previous, &config).unwrap();

        // Completed rows (1, 0.9) and (-1, -0.9): mean is (0, 0).
        assert!(got.means[0].norm() < 1e-12);
        // Scatter = avg of outer products + correction 0.19 on cell (1,1)
        // for unit 0: [[1, 0.9], [0.9, 0.905]].
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 0.905]);
        assert!((got.covariances[0].clone() - expect).norm() < 1e-9);
    }

    #[test]
    fn m_step_weights_follow_masses() {
        let values = DMatrix::from_row_slice(4, 1, &[0.0, 0.1, 10.0, 10.1]);
        let data = DataSet::from_complete(values, None).unwrap();
        let w = DMatrix::from_element(4, 1, true);
        let u = DMatrix::from_row_slice(4, 2, &[
            1.0, 0.0, //
            1.0, 0.0, //
            1.0, 0.0, //
            0.0, 1.0,
        ]);
        let config = FitConfig::new(2);
        let got = m_step(&data, &w, &u, &simple_params(2, 1), &config).unwrap();
        assert!((got.weights[0] - 0.75).abs() < 1e-12);
        assert!((got.weights[1] - 0.25).abs() < 1e-12);

        let eq = m_step(
            &data,
            &w,
            &u,
            &simple_params(2, 1),
            &FitConfig::new(2).equal_weights(true),
        )
        .unwrap();
        assert_eq!(eq.weights[0], 0.5);
        assert_eq!(eq.weights[1], 0.5);
    }

    #[test]
    fn m_step_applies_fuzziness_exponent() {
        // Memberships 0.5 with m = 2 weigh every unit equally (0.25), so
        // both cluster means equal the overall mean.
        let values = DMatrix::from_row_slice(2, 1, &[0.0, 4.0]);
        let data = DataSet::from_complete(values, None).unwrap();
        let w = DMatrix::from_element(2, 1, true);
        let u = DMatrix::from_element(2, 2, 0.5);
        let config = FitConfig::new(2).fuzzifier(2.0);
        let got = m_step(&data, &w, &u, &simple_params(2, 1), &config).unwrap();
        assert!((got.means[0][0] - 2.0).abs() < 1e-12);
        assert!((got.means[1][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn m_step_rejects_collapsed_cluster() {
        let values = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let data = DataSet::from_complete(values, None).unwrap();
        let w = DMatrix::from_element(2, 1, true);
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let config = FitConfig::new(2);
        match m_step(&data, &w, &u, &simple_params(2, 1), &config) {
            Err(Error::DegenerateCluster { cluster }) => assert_eq!(cluster, 1),
            other => panic!("expected DegenerateCluster, got {other:?}"),
        }
    }

    #[test]
    fn m_step_enforces_eigenvalue_bound() {
        // Two very different variances with c = 1 must pool to their
        // mass-weighted mean.
        let values = DMatrix::from_row_slice(4, 2, &[
            -3.0, -0.1, //
            3.0, 0.1, //
            -3.0, 0.1, //
            3.0, -0.1,
        ]);
        let data = DataSet::from_complete(values, None).unwrap();
        let w = DMatrix::from_element(4, 2, true);
        let u = DMatrix::from_element(4, 1, 1.0);
        let config = FitConfig::new(1).eigenvalue_ratio(1.0);
        let got = m_step(&data, &w, &u, &simple_params(1, 2), &config).unwrap();
        // Sample variances are 9 and 0.01; the pooled level is 4.505.
        assert!((got.covariances[0][(0, 0)] - 4.505).abs() < 1e-9);
        assert!((got.covariances[0][(1, 1)] - 4.505).abs() < 1e-9);
    }
}
