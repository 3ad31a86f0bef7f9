use crate::dilation::{kraus_from_exchange_block, HPParams};
use crate::error::{Error, Result};
use crate::generator::{assemble_from_hp, FormGenerator};
use crate::linalg::{self, c, hermitian_part, kron, lstsq, unvec, vec, CMat, CVec};
use crate::superop::SuperOperator;

const RCOND: f64 = 1e-12;

/// Recovered coefficients together with the round-trip report.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub params: HPParams,
    /// Largest block difference between the input and the reassembled generator.
    pub residual: f64,
    /// Kraus rank carried by the exchange block.
    pub exchange_rank: usize,
    /// Additional Kraus operators needed by the scalar block alone.
    pub scalar_rank: usize,
}

/// Recovers Hudson–Parthasarathy coefficients from a conditionally
/// completely positive generator.
///
/// 1. Kraus operators `L^i_n` of the exchange block.
/// 2. Minimal-norm least squares for `L^i` and `K_m` from
///    `lambda^m(X) = sum_i L^i_m^dagger X L^i - K_m^dagger X`.
/// 3. Traceless Kraus operators for the part of `lambda` not carried by the
///    `L^i`, taken from the Choi matrix of the remainder projected off the
///    identity direction.
/// 4. `K + K^dagger = sum_i L^i^dagger L^i - lambda(I)`.
/// 5. Traceless Hermitian `H` from the commutator part of the remainder.
/// 6. Reassembly, failing with [`Error::ResidualTooLarge`] when the block
///    residual exceeds `tol * max(1, max |block entry|)`.
///
/// `tol` is also the relative Choi cutoff of steps 1 and 3.
pub fn extract_hp_params(gen: &FormGenerator, tol: f64) -> Result<Extraction> {
    let (n, d) = (gen.n(), gen.d());
    let exchange = kraus_from_exchange_block(gen, tol)?;
    let r0 = exchange.r;
    let units = linalg::matrix_units(n);
    let nn = n * n;

    // step 2: unknowns [vec L^0 .. vec L^{r0-1}, vec Q_0 .. vec Q_{d-1}], Q_m = K_m^dagger
    let cols = (r0 + d) * nn;
    let mut a = CMat::zeros(d * nn * nn, cols);
    let mut b = CVec::zeros(d * nn * nn);
    for m in 0..d {
        for (u, e) in units.iter().enumerate() {
            let row0 = (m * nn + u) * nn;
            b.rows_mut(row0, nn).copy_from(&vec(&gen.up(m).apply(e)));
            for i in 0..r0 {
                let left = exchange.kraus_lmat[i][m].adjoint() * e;
                let blk = kron(&linalg::identity(n), &left);
                linalg::set_block(&mut a, row0, i * nn, &blk);
            }
            let blk = -kron(&e.transpose(), &linalg::identity(n));
            linalg::set_block(&mut a, row0, (r0 + m) * nn, &blk);
        }
    }
    let sol = if cols > 0 { lstsq(&a, &b, RCOND)? } else { CVec::zeros(0) };
    let mut kraus_l: Vec<CMat> = (0..r0)
        .map(|i| unvec(&sol.rows(i * nn, nn).into_owned(), n, n))
        .collect();
    let k_row: Vec<CMat> = (0..d)
        .map(|m| unvec(&sol.rows((r0 + m) * nn, nn).into_owned(), n, n).adjoint())
        .collect();
    let mut kraus_lmat = exchange.kraus_lmat.clone();

    // step 3: remainder rho(X) = lambda(X) - sum_i L^i^dagger X L^i
    let carried = kraus_l.iter().try_fold(SuperOperator::zero(n, n), |acc, l| {
        acc.add(&SuperOperator::sandwich(&l.adjoint(), l)?)
    })?;
    let rho = gen.scalar().sub(&carried)?;
    let omega = vec(&linalg::identity(n));
    let proj = linalg::identity(nn) - (&omega * omega.adjoint()).unscale(n as f64);
    let projected = hermitian_part(&(&proj * rho.choi() * &proj));
    let (values, vectors) = linalg::hermitian_eigen(&projected);
    let exchange_top = exchange.choi_eigenvalues.last().copied().unwrap_or(0.0);
    let scale = exchange_top.max(gen.scalar().choi().norm());
    let mut scalar_rank = 0;
    for (k, &mu) in values.iter().enumerate().rev() {
        if mu <= tol * scale || mu <= 0.0 {
            break;
        }
        // Choi vector of X -> M^dagger X M: v[p * n + s] = conj(M[p, s])
        let v = vectors.column(k) * c(mu.sqrt(), 0.0);
        kraus_l.push(CMat::from_fn(n, n, |p, s| v[p * n + s].conj()));
        kraus_lmat.push(vec![CMat::zeros(n, n); d]);
        scalar_rank += 1;
    }
    if kraus_l.is_empty() {
        kraus_l.push(CMat::zeros(n, n));
        kraus_lmat.push(vec![CMat::zeros(n, n); d]);
    }

    // step 4: Hermitian part of K
    let phi_id = kraus_l.iter().fold(CMat::zeros(n, n), |acc, l| acc + l.adjoint() * l);
    let k_herm = hermitian_part(&(phi_id - gen.corner()).scale(0.5));

    // step 5: i[H, X] = lambda(X) - phi(X) + K_h X + X K_h over the basis
    let mut ha = CMat::zeros(nn * nn, nn);
    let mut hb = CVec::zeros(nn * nn);
    let id = linalg::identity(n);
    for (u, e) in units.iter().enumerate() {
        let phi_e = kraus_l.iter().fold(CMat::zeros(n, n), |acc, l| acc + l.adjoint() * e * l);
        let target = gen.scalar().apply(e) - phi_e + &k_herm * e + e * &k_herm;
        hb.rows_mut(u * nn, nn).copy_from(&vec(&target));
        let blk = (kron(&e.transpose(), &id) - kron(&id, e)).map(|z| z * c(0.0, 1.0));
        linalg::set_block(&mut ha, u * nn, 0, &blk);
    }
    let h = hermitian_part(&unvec(&lstsq(&ha, &hb, RCOND)?, n, n));
    let h = &h - id.map(|z| z * linalg::trace(&h) / n as f64);
    let k = &k_herm + h.map(|z| z * c(0.0, 1.0));

    let params = HPParams::new(k, k_row, h, kraus_l, kraus_lmat)?;
    let rebuilt = assemble_from_hp(&params)?;
    let residual = rebuilt.block_residual(gen);
    let limit = tol * gen.blocks().max_abs().max(1.0);
    if residual.is_nan() || residual > limit {
        return Err(Error::ResidualTooLarge {
            what: "generator round trip",
            residual,
            tol: limit,
            at: None,
        });
    }
    Ok(Extraction {
        params,
        residual,
        exchange_rank: r0,
        scalar_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::models;
    use crate::random::{random_hp_params, seeded, Normalization};

    #[test]
    fn amplitude_damping_round_trip() {
        let gen = assemble_from_hp(&models::amplitude_damping()).unwrap();
        let ex = extract_hp_params(&gen, 1e-9).unwrap();
        assert!(ex.residual <= 1e-9, "{}", ex.residual);
    }

    #[test]
    fn trivial_exchange_extracts_zero_coefficients() {
        let gen = assemble_from_hp(&models::trivial_exchange(2)).unwrap();
        let ex = extract_hp_params(&gen, 1e-9).unwrap();
        assert!(ex.residual < 1e-14);
        assert!(max_abs(ex.params.k()) < 1e-14);
        assert!(max_abs(&ex.params.k_row()[0]) < 1e-14);
        assert!(max_abs(&ex.params.kraus_l()[0]) < 1e-14);
    }

    #[test]
    fn transpose_block_fails_in_the_kraus_step() {
        assert!(matches!(
            extract_hp_params(&models::transpose_block(2), 1e-9),
            Err(Error::NotCompletelyPositive { .. })
        ));
    }

    #[test]
    fn scalar_only_dissipation_needs_extra_kraus_operators() {
        // exchange block zero, dissipation carried by the scalar block only
        let base = assemble_from_hp(&models::amplitude_damping()).unwrap();
        let gen = base.with_exchange(0, 0, SuperOperator::zero(2, 2)).unwrap();
        let mut blocks = gen.into_blocks();
        blocks.up[0] = SuperOperator::zero(2, 2);
        blocks.down[0] = SuperOperator::zero(2, 2);
        let gen = FormGenerator::new(blocks).unwrap();
        let ex = extract_hp_params(&gen, 1e-9).unwrap();
        assert_eq!(ex.exchange_rank, 0);
        assert_eq!(ex.scalar_rank, 1);
        assert!(ex.residual <= 1e-12);
    }

    #[test]
    fn random_round_trips() {
        for seed in 0..20 {
            let mut rng = seeded(100 + seed);
            let n = 2 + (seed % 2) as usize;
            let d = 1 + (seed % 3) as usize % 2;
            let r = 1 + seed as usize % (n * d);
            let norm = if seed % 2 == 0 {
                Normalization::Martingale
            } else {
                Normalization::Submartingale(0.3)
            };
            let p = random_hp_params(&mut rng, n, d, r, 0.6, norm).unwrap();
            let gen = assemble_from_hp(&p).unwrap();
            let ex = extract_hp_params(&gen, 1e-8).unwrap();
            assert!(ex.residual <= 1e-9, "seed {seed}: {}", ex.residual);
        }
    }
}
