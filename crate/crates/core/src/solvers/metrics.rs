use faer::MatRef;

use crate::c64;
use crate::error::{ensure_dim, Error, Result};

/// Reported in place of `-inf` for an exact reconstruction.
pub const NMSE_FLOOR_DB: f64 = -300.0;

/// `||H_hat - H||_F^2 / ||H||_F^2`.
pub fn nmse_ratio(h_hat: MatRef<'_, c64>, h: MatRef<'_, c64>) -> Result<f64> {
    ensure_dim("estimate rows", h.nrows(), h_hat.nrows())?;
    ensure_dim("estimate columns", h.ncols(), h_hat.ncols())?;
    let base = h.squared_norm_l2();
    if base == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok((h_hat - h).squared_norm_l2() / base)
}

/// Linear ratio to dB, clamped at [`NMSE_FLOOR_DB`].
pub fn ratio_to_db(ratio: f64) -> f64 {
    if ratio > 0.0 {
        (10.0 * ratio.log10()).max(NMSE_FLOOR_DB)
    } else {
        NMSE_FLOOR_DB
    }
}

pub fn nmse_db(h_hat: MatRef<'_, c64>, h: MatRef<'_, c64>) -> Result<f64> {
    nmse_ratio(h_hat, h).map(ratio_to_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn reference_values() {
        let h = Mat::from_fn(4, 3, |i, j| c64::new(i as f64 + 1.0, j as f64));
        assert_eq!(nmse_db(h.as_ref(), h.as_ref()).unwrap(), NMSE_FLOOR_DB);
        let zero = Mat::<c64>::zeros(4, 3);
        assert!(nmse_db(zero.as_ref(), h.as_ref()).unwrap().abs() < 1e-12);
        let half = &h * faer::Scale(c64::new(0.5, 0.0));
        let v = nmse_db(half.as_ref(), h.as_ref()).unwrap();
        assert!((v - 10.0 * 0.25f64.log10()).abs() < 1e-12);
        assert!((v + 6.0206).abs() < 1e-4);
        assert!(matches!(nmse_db(h.as_ref(), zero.as_ref()), Err(Error::ZeroChannel)));
        assert!(nmse_db(h.as_ref().subrows(0, 2), h.as_ref()).is_err());
    }
}
