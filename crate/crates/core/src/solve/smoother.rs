//! Richardson and symmetric Gauss-Seidel smoothers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WgError};
use crate::sparse::{dot, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmootherKind {
    Richardson,
    Sgs,
}

impl std::str::FromStr for SmootherKind {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "richardson" => Ok(Self::Richardson),
            "sgs" => Ok(Self::Sgs),
            other => Err(WgError::InvalidArgument(format!(
                "unknown smoother '{other}' (expected sgs or richardson)"
            ))),
        }
    }
}

impl std::fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Richardson => "richardson",
            Self::Sgs => "sgs",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmootherSpec {
    pub kind: SmootherKind,
    /// Number of sweeps (Richardson steps or forward/backward pairs).
    pub sweeps: usize,
    /// Seed of the power iteration estimating `lambda_max` for Richardson.
    pub seed: u64,
}

impl SmootherSpec {
    pub fn sgs(sweeps: usize) -> Self {
        Self {
            kind: SmootherKind::Sgs,
            sweeps,
            seed: 0,
        }
    }

    pub fn richardson(sweeps: usize) -> Self {
        Self {
            kind: SmootherKind::Richardson,
            sweeps,
            seed: 0,
        }
    }
}

pub const POWER_STEPS: usize = 30;
pub const SAFETY_FACTOR: f64 = 1.05;

/// Power-iteration estimate of `lambda_max(A)` from a seeded random start.
pub fn power_lambda_max(a: &CsrMatrix, steps: usize, seed: u64) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut lambda = 0.0;
    for _ in 0..steps {
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.mul_vec(&x);
        lambda = dot(&x, &y);
        x = y;
    }
    lambda
}

/// A smoother bound to the matrix it was prepared for.
#[derive(Clone, Debug)]
pub struct Smoother {
    pub spec: SmootherSpec,
    /// Richardson step length `1 / (1.05 lambda_hat)`; unused for SGS.
    pub damping: f64,
    inv_diag: Vec<f64>,
}

impl Smoother {
    pub fn new(spec: SmootherSpec, a: &CsrMatrix) -> Result<Self> {
        if spec.sweeps == 0 {
            return Err(WgError::InvalidMatrix(
                "smoother needs at least one sweep".into(),
            ));
        }
        let diag = a.diagonal();
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(WgError::InvalidMatrix(format!(
                "zero diagonal entry in row {i}"
            )));
        }
        let damping = match spec.kind {
            SmootherKind::Richardson => {
                1.0 / (SAFETY_FACTOR * power_lambda_max(a, POWER_STEPS, spec.seed))
            }
            SmootherKind::Sgs => 0.0,
        };
        Ok(Self {
            spec,
            damping,
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
        })
    }

    /// `z = R r`, starting from `z = 0`.
    pub fn apply(&self, a: &CsrMatrix, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.smooth(a, r, &mut z);
        z
    }

    /// Applies the sweeps to `A z = r` in place, starting from the given `z`.
    pub fn smooth(&self, a: &CsrMatrix, r: &[f64], z: &mut [f64]) {
        match self.spec.kind {
            SmootherKind::Sgs => {
                for _ in 0..self.spec.sweeps {
                    self.forward(a, r, z);
                    self.backward(a, r, z);
                }
            }
            SmootherKind::Richardson => {
                let mut az = vec![0.0; r.len()];
                for _ in 0..self.spec.sweeps {
                    a.mul_vec_into(z, &mut az);
                    for i in 0..r.len() {
                        z[i] += self.damping * (r[i] - az[i]);
                    }
                }
            }
        }
    }

    fn relax(&self, a: &CsrMatrix, r: &[f64], z: &mut [f64], i: usize) {
        let (cols, vals) = a.row(i);
        let mut s = r[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                s -= v * z[j];
            }
        }
        z[i] = s * self.inv_diag[i];
    }

    fn forward(&self, a: &CsrMatrix, r: &[f64], z: &mut [f64]) {
        for i in 0..r.len() {
            self.relax(a, r, z, i);
        }
    }

    fn backward(&self, a: &CsrMatrix, r: &[f64], z: &mut [f64]) {
        for i in (0..r.len()).rev() {
            self.relax(a, r, z, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn identity_and_diagonal() {
        let r = [1.0, -2.0, 3.5];
        let id = CsrMatrix::identity(3);
        let s = Smoother::new(SmootherSpec::sgs(1), &id).unwrap();
        assert_eq!(s.apply(&id, &r), r.to_vec());
        let d = CsrMatrix::from_diagonal(&[2.0, 4.0, 0.5]);
        let s = Smoother::new(SmootherSpec::sgs(1), &d).unwrap();
        assert_eq!(s.apply(&d, &r), vec![0.5, -0.5, 7.0]);
    }

    #[test]
    fn two_by_two_sgs_pair() {
        // hand computation: forward (1/2, -1/4), backward z1 = (1 + 1/4)/2
        let a = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        let s = Smoother::new(SmootherSpec::sgs(1), &a).unwrap();
        let z = s.apply(&a, &[1.0, 0.0]);
        assert_eq!(z, vec![0.625, -0.25]);
    }

    #[test]
    fn sgs_matches_closed_form() {
        // z = (U+D)^{-1} (r - L (L+D)^{-1} r) composed from the splitting A = L + D + U
        let dense = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, -1.0, 1.0, 3.0, 0.5, -1.0, 0.5, 5.0]);
        let a = CsrMatrix::from_dense(&dense);
        let lower = dense.lower_triangle();
        let upper = dense.upper_triangle();
        let l = &lower - DMatrix::from_diagonal(&dense.diagonal());
        let r = DVector::from_vec(vec![1.0, 2.0, -0.5]);
        let x1 = lower.clone().lu().solve(&r).unwrap();
        let x2 = upper.lu().solve(&(&r - &l * &x1)).unwrap();
        let z = Smoother::new(SmootherSpec::sgs(1), &a)
            .unwrap()
            .apply(&a, r.as_slice());
        for i in 0..3 {
            assert!((z[i] - x2[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_diagonal_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(
            Smoother::new(SmootherSpec::sgs(1), &a),
            Err(WgError::InvalidMatrix(_))
        ));
    }

    #[test]
    fn richardson_damping_bounds_spectrum() {
        let d = CsrMatrix::from_diagonal(&[1.0, 2.0, 8.0, 3.0]);
        let s = Smoother::new(SmootherSpec::richardson(1), &d).unwrap();
        assert!(s.damping * 8.0 <= 1.0 + 1e-12 && s.damping * 8.0 > 0.9);
    }

    #[test]
    fn richardson_symmetrization_identity() {
        // I - Rbar A = (I - R A)^2 with Rbar = 2R - R A R for R = w I
        let dense =
            DMatrix::from_row_slice(3, 3, &[3.0, -1.0, 0.0, -1.0, 3.0, -1.0, 0.0, -1.0, 3.0]);
        let a = CsrMatrix::from_dense(&dense);
        let s = Smoother::new(SmootherSpec::richardson(2), &a).unwrap();
        let w = s.damping;
        let id = DMatrix::<f64>::identity(3, 3);
        let r = &id * w;
        let rbar = &r * 2.0 - &r * &dense * &r;
        let lhs = &id - &rbar * &dense;
        let e = &id - &r * &dense;
        assert!((lhs - &e * &e).amax() < 1e-14);
        // two Richardson steps from zero realize Rbar
        let mut applied = DMatrix::zeros(3, 3);
        for j in 0..3 {
            let mut ej = vec![0.0; 3];
            ej[j] = 1.0;
            applied.set_column(j, &DVector::from_vec(s.apply(&a, &ej)));
        }
        assert!((applied - rbar).amax() < 1e-14);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("SGS".parse::<SmootherKind>().unwrap(), SmootherKind::Sgs);
        assert_eq!(
            "richardson".parse::<SmootherKind>().unwrap().to_string(),
            "richardson"
        );
        assert!("jacobi".parse::<SmootherKind>().is_err());
    }
}
