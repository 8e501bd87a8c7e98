//! Numerical identity suite behind the `validate` subcommand.
//!
//! Every check reports a measured value and the tolerance it is held to.

use faer::{Col, Mat};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::channel::{element_distance_exact, element_distance_fresnel, ArrayGeometry, ChannelRealization, Direction, MuProfile, SteeringMode};
use crate::config::{child_rng, field_boundaries, subcarrier_grid, SystemConfig};
use crate::dictionary::{dft2_matrix, dft_matrix, modified_dict, theta_full, theta_rep, AggregationMap, FrequencyMap, UnifiedDictionary};
use crate::error::Result;
use crate::linalg::{complex_normal, kron, matmul, max_abs_diff, rel_err, scale_rows, transposed_khatri_rao, unitarity_defect, vec_of};
use crate::measurement::{gen_pilots, noiseless_observations, sensing_matrix, synthesize_observations, ObservationSet};

/// Largest array for which `Theta_p` (`N x N^2`) is materialized.
pub const MAX_MATERIALIZED_N: usize = 64;

/// Sanity bound on [`fresnel_phase_error`]: the expansion stays within one
/// carrier cycle of the exact distance.
pub const FRESNEL_PHASE_BOUND: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

fn conj(m: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj())
}

fn random_dir<R: Rng>(rng: &mut R) -> Direction {
    let h = std::f64::consts::FRAC_PI_2;
    Direction::from_angles(rng.random_range(-h..h), rng.random_range(-h..h))
}

/// Max error over the steps of the Khatri-Rao factorization of
/// `H_p = diag(h^H) G` for a random `h` and `G`, relative to `||H_p||`.
fn khatri_rao_chain<R: Rng>(geom: &ArrayGeometry, mu: &MuProfile, k: f64, rng: &mut R) -> Result<(f64, f64)> {
    let (n, nt) = (geom.n_ris(), geom.n_t);
    let h = Col::from_fn(n, |_| complex_normal(rng));
    let g = Mat::from_fn(n, nt, |_, _| complex_normal(rng));
    let u = dft2_matrix(geom.n_y, geom.n_z);
    let v = dft_matrix(nt);
    let d_p = modified_dict(geom, mu, k);
    // h = D beta, G = U Lambda V^H
    let beta = crate::linalg::matvec(d_p.adjoint(), h.as_ref());
    let lambda = matmul(matmul(u.adjoint(), g.as_ref()).as_ref(), v.as_ref());
    let beta_c = Mat::from_fn(n, 1, |i, _| beta[i].conj());
    let h_c = Mat::from_fn(n, 1, |i, _| h[i].conj());

    let target = Mat::from_fn(n, nt, |i, t| h[i].conj() * g[(i, t)]);
    let scale = target.norm_l2();
    let mut worst = 0.0f64;
    let mut check = |m: &Mat<c64>| worst = worst.max((m - &target).norm_l2() / scale);

    // (a) h^* • G
    check(&transposed_khatri_rao(h_c.as_ref(), g.as_ref())?);
    // (b) (D^* beta^*) • (U Lambda V^H)
    let db = matmul(conj(&d_p).as_ref(), beta_c.as_ref());
    let ulv = matmul(matmul(u.as_ref(), lambda.as_ref()).as_ref(), v.adjoint());
    check(&transposed_khatri_rao(db.as_ref(), ulv.as_ref())?);
    // (c) (D^* • U)(beta^* ⊗ (Lambda V^H))
    let dku = transposed_khatri_rao(conj(&d_p).as_ref(), u.as_ref())?;
    let lv = matmul(lambda.as_ref(), v.adjoint());
    check(&matmul(dku.as_ref(), kron(beta_c.as_ref(), lv.as_ref()).as_ref()));
    // (d) ((diag(d^*) U^*) • U)(beta^* ⊗ Lambda) V^H
    let phi = kron(beta_c.as_ref(), lambda.as_ref());
    let dvec = mu.quadratic_vector(k, geom.spacing);
    let dconj = Col::from_fn(n, |i| dvec[i].conj());
    let du = scale_rows(dconj.as_ref(), conj(&u).as_ref());
    let step_d = transposed_khatri_rao(du.as_ref(), u.as_ref())?;
    check(&matmul(matmul(step_d.as_ref(), phi.as_ref()).as_ref(), v.adjoint()));
    // (e) diag(d^*)(U^* • U)(beta^* ⊗ Lambda) V^H, (f) Theta_p Phi_p V^H
    let uku = transposed_khatri_rao(conj(&u).as_ref(), u.as_ref())?;
    let step_e = scale_rows(dconj.as_ref(), uku.as_ref());
    check(&matmul(matmul(step_e.as_ref(), phi.as_ref()).as_ref(), v.adjoint()));
    let theta = theta_full(geom, mu, k);
    check(&matmul(matmul(theta.as_ref(), phi.as_ref()).as_ref(), v.adjoint()));

    // vec(H_p) = (V^* ⊗ Theta_N) (I ⊗ P) vec(beta^* ⊗ Lambda)
    let agg = AggregationMap::new(geom.n_y, geom.n_z);
    let phi_n = agg.aggregate_rows(phi.as_ref())?;
    let x = vec_of(phi_n.as_ref());
    let basis = kron(conj(&v).as_ref(), theta_rep(geom, mu, k).as_ref());
    let vec_h = crate::linalg::matvec(basis.as_ref(), x.as_ref());
    let vec_err = rel_err(vec_h.as_mat(), vec_of(target.as_ref()).as_mat());
    Ok((worst, vec_err))
}

/// Largest `k |r_exact - r_fresnel|` over every element, a 21 x 21 grid of
/// direction cosines (step 0.1, inside the unit disk) and the ranges
/// `lo`, `sqrt(lo hi)` and `hi`. Deterministic.
pub fn fresnel_phase_error(geom: &ArrayGeometry, k: f64, [lo, hi]: [f64; 2]) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in [lo, (lo * hi).sqrt(), hi] {
        for ia in 0..=20 {
            for ie in 0..=20 {
                let dir = Direction {
                    psi_a: -1.0 + 0.1 * ia as f64,
                    psi_e: -1.0 + 0.1 * ie as f64,
                };
                if dir.psi_a * dir.psi_a + dir.psi_e * dir.psi_e > 1.0 {
                    continue;
                }
                for i in 0..geom.n_ris() {
                    let (ny, nz) = geom.element(i);
                    let e = element_distance_exact(r, dir, ny, nz, geom.spacing)?;
                    let f = element_distance_fresnel(r, dir, ny, nz, geom.spacing)?;
                    worst = worst.max(k * (e - f).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Runs every identity on `cfg` with `instances` random draws per family.
pub fn identity_suite(cfg: &SystemConfig, seed: u64, instances: usize) -> Result<Vec<Check>> {
    cfg.validate()?;
    let grid = subcarrier_grid(cfg)?;
    let geom = ArrayGeometry::from_config(cfg);
    let dict = UnifiedDictionary::for_config(cfg)?;
    let n = geom.n_ris();
    let sqrt_n = (n as f64).sqrt();
    let mut rng = child_rng(seed, "validate", 0);
    let [r_lo, r_hi] = cfg.ue_range();
    let mut out = Vec::new();

    out.push(Check::at_most("e_mu_unitarity", unitarity_defect(dict.e_mu.as_ref()), 1e-10));

    let (mut d_defect, mut theta_defect, mut agg_err) = (0.0f64, 0.0f64, 0.0f64);
    let agg = (n <= MAX_MATERIALIZED_N).then(|| AggregationMap::new(geom.n_y, geom.n_z).materialize());
    for p in 0..grid.len() {
        let k = grid.wavenumbers[p];
        let mu = MuProfile::from_range(&geom, rng.random_range(r_lo..r_hi), random_dir(&mut rng))?;
        d_defect = d_defect.max(unitarity_defect(modified_dict(&geom, &mu, k).as_ref()));
        let rep = theta_rep(&geom, &mu, k);
        let scaled = Mat::from_fn(n, n, |i, j| rep[(i, j)] * sqrt_n);
        theta_defect = theta_defect.max(unitarity_defect(scaled.as_ref()));
        if let Some(pm) = &agg {
            let full = theta_full(&geom, &mu, k);
            agg_err = agg_err.max(max_abs_diff(full.as_ref(), matmul(rep.as_ref(), pm.as_ref()).as_ref()));
            agg_err = agg_err.max(max_abs_diff(full.as_ref().subcols(0, n), rep.as_ref()));
        }
    }
    out.push(Check::at_most("d_p_unitarity", d_defect, 1e-12));
    out.push(Check::at_most("theta_rep_unitarity", theta_defect, 1e-12));
    if agg.is_some() {
        out.push(Check::at_most("theta_aggregation", agg_err, 1e-12));
    }

    if n <= MAX_MATERIALIZED_N {
        let (mut chain, mut vect) = (0.0f64, 0.0f64);
        for _ in 0..instances {
            let p = rng.random_range(0..grid.len());
            let mu = MuProfile::from_range(&geom, rng.random_range(r_lo..r_hi), random_dir(&mut rng))?;
            let (c, v) = khatri_rao_chain(&geom, &mu, grid.wavenumbers[p], &mut rng)?;
            chain = chain.max(c);
            vect = vect.max(v);
        }
        out.push(Check::at_most("khatri_rao_chain", chain, 1e-10));
        out.push(Check::at_most("vectorization", vect, 1e-10));
    }

    let kc = grid.carrier_wavenumber();
    let (mut map_err, mut mu_err) = (0.0f64, 0.0f64);
    for _ in 0..instances.max(1) * 5 {
        let p = rng.random_range(0..grid.len());
        let map = FrequencyMap::for_subcarrier(&grid, p)?;
        let kp = grid.wavenumbers[p];
        let dir = random_dir(&mut rng);
        let mu = MuProfile::from_range(&geom, rng.random_range(r_lo..r_hi), dir)?;
        let b = max_abs_diff(geom.ris_far_field(dir, kp).as_mat(), geom.ris_far_field(map.direction(dir), kc).as_mat());
        let dd = max_abs_diff(
            mu.quadratic_vector(kp, geom.spacing).as_mat(),
            map.mu(&mu).quadratic_vector(kc, geom.spacing).as_mat(),
        );
        let s = rng.random_range(-1.0..1.0);
        let a = max_abs_diff(geom.bs_steering_sin(s, kp).as_mat(), geom.bs_steering_sin(map.sin_aod(s), kc).as_mat());
        map_err = map_err.max(b).max(dd).max(a);
        let mapped = map.mu(&mu);
        for i in 0..n {
            if mu.inv_mu[i] > 0.0 {
                let want = mu.mu(i) / map.eta;
                mu_err = mu_err.max((mapped.mu(i) - want).abs() / want);
            }
        }
    }
    out.push(Check::at_most("frequency_map", map_err, 1e-12));
    out.push(Check::at_most("mu_map_relative", mu_err, 1e-14));

    let mut decomp = 0.0f64;
    for _ in 0..instances {
        let dir = random_dir(&mut rng);
        let r = rng.random_range(r_lo..r_hi);
        let c = geom.nf_steering(dir, kc, r, SteeringMode::Fresnel)?;
        let b = geom.ris_far_field(dir, kc);
        let d = MuProfile::from_range(&geom, r, dir)?.quadratic_vector(kc, geom.spacing);
        let bd = Col::from_fn(n, |i| b[i] * d[i]);
        decomp = decomp.max(max_abs_diff(c.as_mat(), bd.as_mat()));
    }
    let phase = fresnel_phase_error(&geom, kc, [r_lo, r_hi])?;
    out.push(Check::at_most("fresnel_decomposition", decomp, 1e-12));
    out.push(Check::at_most("fresnel_phase_error_rad", phase, FRESNEL_PHASE_BOUND));

    // |e^{j phi} - 1| <= |phi|, and the largest quadratic phase at range r is
    // k D^2 / (2 r), i.e. pi / 20 at ten Rayleigh distances.
    let rayleigh = field_boundaries(cfg).rayleigh_m;
    let (mut ff, mut rate) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let dir = random_dir(&mut rng);
        let b = geom.ris_far_field(dir, kc);
        let near = geom.nf_steering(dir, kc, 10.0 * rayleigh, SteeringMode::Fresnel)?;
        let far = geom.nf_steering(dir, kc, 100.0 * rayleigh, SteeringMode::Fresnel)?;
        let (e10, e100) = (rel_err(near.as_mat(), b.as_mat()), rel_err(far.as_mat(), b.as_mat()));
        ff = ff.max(e10);
        if e100 > 0.0 {
            rate = rate.max((e10 / e100 / 10.0 - 1.0).abs());
        }
    }
    let aperture = cfg.aperture();
    out.push(Check::at_most("far_field_limit", ff, kc * aperture * aperture / (20.0 * rayleigh)));
    out.push(Check::at_most("far_field_rate_deviation", rate, 0.05));

    let (mut obs_err, mut snr_dev) = (0.0f64, 0.0f64);
    for i in 0..instances.min(5) {
        let ch = ChannelRealization::synthesize(cfg, &grid, &mut child_rng(seed, "validate-channel", i as u64))?;
        let t = cfg.cascaded_dim() / 2;
        let pilots = gen_pilots(&geom, t, &mut child_rng(seed, "validate-pilots", i as u64))?;
        let clean = ObservationSet::new(ch.cascaded.as_ref(), &pilots, &dict, f64::INFINITY, &mut rng)?;
        let x = dict.analyze(ch.cascaded.as_ref())?.x_tilde;
        obs_err = obs_err.max(rel_err(matmul(clean.omega.as_ref(), x.as_ref()).as_ref(), clean.y.as_ref()));

        let long = sensing_matrix(&gen_pilots(&geom, 500, &mut child_rng(seed, "validate-pilots", i as u64))?);
        let y0 = noiseless_observations(ch.cascaded.as_ref(), long.as_ref())?;
        let (y, _) = synthesize_observations(ch.cascaded.as_ref(), long.as_ref(), 10.0, &mut child_rng(seed, "validate-noise", i as u64))?;
        let realized = 10.0 * (y0.squared_norm_l2() / (&y - &y0).squared_norm_l2()).log10();
        snr_dev = snr_dev.max((realized - 10.0).abs());
    }
    out.push(Check::at_most("observation_pathways", obs_err, 1e-10));
    out.push(Check::at_most("realized_snr_deviation_db", snr_dev, 0.5));
    Ok(out)
}
