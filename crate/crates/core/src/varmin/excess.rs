use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldlab::{jacobian_fd, Field};
use crate::nfunc::NFunction;

/// Smallness of the shifted excess on balls around grid centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessMap {
    /// Ball radii in physical units, one per entry of `radii_cells`.
    pub radii: Vec<f64>,
    /// Ball radii in multiples of the smallest grid spacing.
    pub radii_cells: Vec<f64>,
    /// Flat grid indices of the ball centers.
    pub centers: Vec<usize>,
    /// `mean_gradients[c][r]` is the ball average of the gradient.
    pub mean_gradients: Vec<Vec<Vec<f64>>>,
    /// `excess[c][r]` is the averaged shifted energy of the deviation.
    pub excess: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub m_tilde: f64,
    /// A center is regular when some radius meets both smallness conditions.
    pub regular_mask: Vec<bool>,
    pub irregular_fraction: f64,
}

/// [`excess_of`] applied to the discrete Jacobian of `u`.
pub fn excess_map(u: &Field, phi: &NFunction, m_tilde: f64, radii_cells: &[f64], epsilon: f64) -> Result<ExcessMap> {
    excess_of(&jacobian_fd(u), phi, m_tilde, radii_cells, epsilon)
}

/// Excess map of a gradient-like field `z`.
///
/// Radii are given in multiples of the smallest grid spacing and must be at
/// least 2. Centers are the nodes whose largest ball stays inside the grid;
/// on periodic grids every node is a center and balls wrap around.
pub fn excess_of(z: &Field, phi: &NFunction, m_tilde: f64, radii_cells: &[f64], epsilon: f64) -> Result<ExcessMap> {
    let grid = z.grid();
    let h = grid.min_spacing();
    if radii_cells.is_empty() {
        return Err(Error::Domain("excess map needs at least one radius".into()));
    }
    if let Some(&r) = radii_cells.iter().find(|&&r| !(r >= 2.0)) {
        return Err(Error::RadiusBelowResolution { radius: r * h, min: 2.0 * h });
    }
    if !(m_tilde >= 0.0) || !(epsilon >= 0.0) {
        return Err(Error::Domain("M~ and epsilon must be non-negative".into()));
    }
    let n = grid.n();
    let dim = z.dim();
    let radii: Vec<f64> = radii_cells.iter().map(|r| r * h).collect();
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let reach: Vec<usize> = (0..n).map(|a| (r_max / grid.h(a)).floor() as usize).collect();
    let periodic = grid.is_periodic();

    let centers: Vec<usize> = (0..grid.len())
        .filter(|&idx| {
            periodic || {
                let k = grid.multi_index(idx);
                (0..n).all(|a| k[a] >= reach[a] && k[a] + reach[a] < grid.counts()[a])
            }
        })
        .collect();
    if centers.is_empty() {
        return Err(Error::RadiusBelowResolution { radius: r_max, min: 2.0 * h });
    }

    // Offsets of the largest ball with their distances.
    let sizes: Vec<usize> = reach.iter().map(|r| 2 * r + 1).collect();
    let offsets: Vec<(Vec<isize>, f64)> = (0..sizes.iter().product::<usize>())
        .filter_map(|mut t| {
            let o: Vec<isize> = (0..n)
                .map(|a| {
                    let digit = t % sizes[a];
                    t /= sizes[a];
                    digit as isize - reach[a] as isize
                })
                .collect();
            let d = (0..n).map(|a| (o[a] as f64 * grid.h(a)).powi(2)).sum::<f64>().sqrt();
            (d <= r_max * (1.0 + 1e-12)).then_some((o, d))
        })
        .collect();
    let shifted = phi.shift(1.0 + m_tilde)?;

    let rows: Vec<(Vec<Vec<f64>>, Vec<f64>)> = centers
        .par_iter()
        .map(|&c| {
            let kc = grid.multi_index(c);
            let mut means = Vec::with_capacity(radii.len());
            let mut exc = Vec::with_capacity(radii.len());
            for &r in &radii {
                let members: Vec<usize> = offsets
                    .iter()
                    .filter(|(_, d)| *d <= r * (1.0 + 1e-12))
                    .map(|(o, _)| {
                        let kk: Vec<usize> = (0..n)
                            .map(|a| {
                                let m = grid.counts()[a] as isize;
                                (kc[a] as isize + o[a]).rem_euclid(m) as usize
                            })
                            .collect();
                        grid.flat_index(&kk)
                    })
                    .collect();
                let cnt = members.len() as f64;
                let mut mean = vec![0.0; dim];
                for &m in &members {
                    mean.iter_mut().zip(z.at(m)).for_each(|(a, b)| *a += b / cnt);
                }
                let e = members
                    .iter()
                    .map(|&m| {
                        let d = z.at(m).iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                        shifted.value(d)
                    })
                    .sum::<f64>()
                    / cnt;
                means.push(mean);
                exc.push(e);
            }
            (means, exc)
        })
        .collect();

    let (mean_gradients, excess): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let regular_mask: Vec<bool> = mean_gradients
        .iter()
        .zip(&excess)
        .map(|(ms, es)| {
            ms.iter().zip(es).any(|(m, &e)| e <= epsilon && m.iter().map(|x| x * x).sum::<f64>().sqrt() <= m_tilde)
        })
        .collect();
    let irregular = regular_mask.iter().filter(|r| !**r).count();
    Ok(ExcessMap {
        radii,
        radii_cells: radii_cells.to_vec(),
        irregular_fraction: irregular as f64 / centers.len() as f64,
        centers,
        mean_gradients,
        excess,
        epsilon,
        m_tilde,
        regular_mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::{Boundary, Grid};

    #[test]
    fn affine_is_regular() {
        let g = Grid::unit(2, 16, Boundary::DirichletLayer { width: 1 }).unwrap();
        let u = Field::from_fn(g, 2, |x, o| {
            o[0] = x[0] - 0.5 * x[1];
            o[1] = 0.25 * x[0];
        });
        let m = excess_map(&u, &NFunction::power(2.0), 2.0, &[2.0, 3.0], 1e-10).unwrap();
        assert!(m.excess.iter().flatten().all(|&e| e.abs() < 1e-20));
        assert_eq!(m.irregular_fraction, 0.0);
        assert_eq!(m.centers.len(), 11 * 11);
    }

    #[test]
    fn ball_sizes() {
        let g = Grid::unit(2, 32, Boundary::Periodic).unwrap();
        let u = Field::zeros(g, 1);
        let m = excess_map(&u, &NFunction::power(2.0), 1.0, &[2.0], 0.1).unwrap();
        assert_eq!(m.centers.len(), 32 * 32);
        assert!(m.regular_mask.iter().all(|&r| r));
    }

    #[test]
    fn radius_below_resolution() {
        let g = Grid::unit(2, 8, Boundary::Periodic).unwrap();
        let u = Field::zeros(g, 1);
        assert!(matches!(
            excess_map(&u, &NFunction::power(2.0), 1.0, &[1.5], 0.1),
            Err(Error::RadiusBelowResolution { .. })
        ));
    }

    #[test]
    fn jump_is_irregular() {
        let g = Grid::unit(2, 32, Boundary::Periodic).unwrap();
        let u = Field::from_fn(g, 1, |x, o| o[0] = if x[1] < 0.5 { 0.0 } else { 1.0 });
        let m = excess_map(&u, &NFunction::power(2.0), 1.0, &[2.0], 0.1).unwrap();
        assert!(m.irregular_fraction > 0.1 && m.irregular_fraction < 0.5, "{}", m.irregular_fraction);
    }
}
