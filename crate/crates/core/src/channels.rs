//! Quantum channels as Kraus sets or Choi matrices.
//!
//! Choi matrices use the *normalized* convention
//! `J = (I ⊗ N)(|Φ⟩⟨Φ|)` with `|Φ⟩ = d^{-1/2} Σ_i |i⟩|i⟩`, so `tr J = 1` and
//! `tr_B J = I/d_in` for a trace-preserving map. The fidelity objective carries
//! the matching prefactor `d_in · d_out`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, ComplexMatrix, LinalgError, SystemShape};

/// Tolerance for the CPTP checks.
pub const CPTP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid channel: {0}")]
    Domain(String),
    #[error("channel is not trace preserving (deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },
    #[error("Choi matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How a channel is given.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelRepr {
    /// Kraus operators, each `d_out × d_in`.
    Kraus(Vec<ComplexMatrix>),
    /// Normalized Choi matrix on `input ⊗ output`.
    Choi(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub name: String,
    pub d_in: usize,
    pub d_out: usize,
    pub repr: ChannelRepr,
}

/// Normalized Choi matrix on `A ⊗ B` with `d_a` the input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub matrix: ComplexMatrix,
    pub d_a: usize,
    pub d_b: usize,
}

/// Result of [`validate_cptp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport {
    /// Smallest eigenvalue of the Choi matrix.
    pub min_eigenvalue: f64,
    /// `max(0, -min_eigenvalue)`.
    pub psd_deviation: f64,
    /// Trace norm of `tr_B J − I/d_A`.
    pub tp_deviation: f64,
    pub passes: bool,
}

/// Built-in channel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinChannel {
    Identity,
    /// `ρ ↦ (1-p)ρ + p·tr(ρ)·I/d`.
    Depolarizing,
    /// Kraus `{√(1-p)·I, √p·Z}` with `Z` the clock operator.
    Dephasing,
    /// Qubit amplitude damping with decay probability `γ`.
    AmplitudeDamping,
    /// Qubit into a qutrit: with probability `p` the state is replaced by the flag `|2⟩`.
    ErasureLikeQubit,
}

impl BuiltinChannel {
    pub const ALL: [BuiltinChannel; 5] = [
        BuiltinChannel::Identity,
        BuiltinChannel::Depolarizing,
        BuiltinChannel::Dephasing,
        BuiltinChannel::AmplitudeDamping,
        BuiltinChannel::ErasureLikeQubit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinChannel::Identity => "identity",
            BuiltinChannel::Depolarizing => "depolarizing",
            BuiltinChannel::Dephasing => "dephasing",
            BuiltinChannel::AmplitudeDamping => "amplitude_damping",
            BuiltinChannel::ErasureLikeQubit => "erasure_like_qubit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Kraus representation at parameter `p` and (input) dimension `d`.
    ///
    /// `d` is ignored by the qubit-only families.
    pub fn spec(self, p: f64, d: usize) -> Result<ChannelSpec, ChannelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ChannelError::Domain(format!(
                "parameter {p} outside [0, 1]"
            )));
        }
        if d == 0 {
            return Err(ChannelError::Domain(
                "dimension must be at least 1".to_string(),
            ));
        }
        let re = |x: f64| Complex64::new(x, 0.0);
        let (d_in, d_out, kraus) = match self {
            BuiltinChannel::Identity => (d, d, vec![ComplexMatrix::identity(d)]),
            BuiltinChannel::Depolarizing => {
                let dd = (d * d) as f64;
                let mut kraus = Vec::with_capacity(d * d);
                for a in 0..d {
                    for b in 0..d {
                        let w = if a == 0 && b == 0 {
                            1.0 - p + p / dd
                        } else {
                            p / dd
                        };
                        if w > 0.0 {
                            kraus.push(weyl(d, a, b).scale(re(crate::math::sqrt(w))));
                        }
                    }
                }
                (d, d, kraus)
            }
            BuiltinChannel::Dephasing => {
                let kraus = vec![
                    ComplexMatrix::identity(d).scale(re(crate::math::sqrt(1.0 - p))),
                    weyl(d, 0, 1).scale(re(crate::math::sqrt(p))),
                ];
                (d, d, kraus)
            }
            BuiltinChannel::AmplitudeDamping => {
                let k0 = ComplexMatrix::from_real_rows(&[
                    &[1.0, 0.0],
                    &[0.0, crate::math::sqrt(1.0 - p)],
                ]);
                let k1 =
                    ComplexMatrix::from_real_rows(&[&[0.0, crate::math::sqrt(p)], &[0.0, 0.0]]);
                (2, 2, vec![k0, k1])
            }
            BuiltinChannel::ErasureLikeQubit => {
                let s = crate::math::sqrt(1.0 - p);
                let t = crate::math::sqrt(p);
                let k0 = ComplexMatrix::from_real_rows(&[&[s, 0.0], &[0.0, s], &[0.0, 0.0]]);
                let k1 = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 0.0], &[t, 0.0]]);
                let k2 = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, t]]);
                (2, 3, vec![k0, k1, k2])
            }
        };
        Ok(ChannelSpec {
            name: self.name().to_string(),
            d_in,
            d_out,
            repr: ChannelRepr::Kraus(kraus),
        })
    }
}

/// Looks up a built-in family by name; see [`BuiltinChannel::spec`].
pub fn builtin_channel(name: &str, p: f64, d: usize) -> Result<ChannelSpec, ChannelError> {
    BuiltinChannel::from_name(name)
        .ok_or_else(|| ChannelError::Domain(format!("unknown channel `{name}`")))?
        .spec(p, d)
}

/// Weyl operator `X^a Z^b` in dimension `d`.
fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        let phase = 2.0 * core::f64::consts::PI * ((b * k) % d) as f64 / d as f64;
        m[((k + a) % d, k)] = Complex64::new(crate::math::cos(phase), crate::math::sin(phase));
    }
    m
}

/// `|Φ⟩⟨Φ|` with `|Φ⟩ = d^{-1/2} Σ_i |i⟩|i⟩`.
pub fn maximally_entangled(d: usize) -> Result<ComplexMatrix, ChannelError> {
    if d == 0 {
        return Err(ChannelError::Domain(
            "dimension must be at least 1".to_string(),
        ));
    }
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    let v = Complex64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = v;
        }
    }
    Ok(m)
}

impl ChannelSpec {
    fn check_shapes(&self) -> Result<(), ChannelError> {
        if self.d_in == 0 || self.d_out == 0 {
            return Err(ChannelError::Domain(
                "dimensions must be at least 1".to_string(),
            ));
        }
        match &self.repr {
            ChannelRepr::Kraus(ks) => {
                if ks.is_empty() {
                    return Err(ChannelError::Domain("empty Kraus set".to_string()));
                }
                for k in ks {
                    if k.rows() != self.d_out || k.cols() != self.d_in {
                        return Err(ChannelError::Domain(format!(
                            "Kraus operator is {}x{}, expected {}x{}",
                            k.rows(),
                            k.cols(),
                            self.d_out,
                            self.d_in
                        )));
                    }
                }
            }
            ChannelRepr::Choi(c) => {
                let n = self.d_in * self.d_out;
                if c.rows() != n || c.cols() != n {
                    return Err(ChannelError::Domain(format!(
                        "Choi matrix is {}x{}, expected {n}x{n}",
                        c.rows(),
                        c.cols()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Choi matrix without any CPTP checks (shapes are still checked).
    pub fn raw_choi(&self) -> Result<ChoiMatrix, ChannelError> {
        self.check_shapes()?;
        let (da, db) = (self.d_in, self.d_out);
        let matrix = match &self.repr {
            ChannelRepr::Choi(c) => c.clone(),
            ChannelRepr::Kraus(ks) => {
                let inv = 1.0 / da as f64;
                let mut j = ComplexMatrix::zeros(da * db, da * db);
                for k in ks {
                    // J[(i,b),(i',b')] = Σ_k K[b,i]·conj(K[b',i']) / d
                    for i in 0..da {
                        for b in 0..db {
                            let kbi = k[(b, i)] * inv;
                            if kbi == Complex64::new(0.0, 0.0) {
                                continue;
                            }
                            for i2 in 0..da {
                                for b2 in 0..db {
                                    j[(i * db + b, i2 * db + b2)] += kbi * k[(b2, i2)].conj();
                                }
                            }
                        }
                    }
                }
                j
            }
        };
        Ok(ChoiMatrix {
            matrix,
            d_a: da,
            d_b: db,
        })
    }

    /// Validated normalized Choi matrix.
    pub fn choi(&self) -> Result<ChoiMatrix, ChannelError> {
        choi_from_kraus(self)
    }
}

/// Normalized Choi matrix of a channel, rejecting maps that are not CPTP.
///
/// Accepts either representation; Kraus sets are checked for completeness
/// and Choi inputs for positivity and trace preservation.
pub fn choi_from_kraus(spec: &ChannelSpec) -> Result<ChoiMatrix, ChannelError> {
    if let ChannelRepr::Kraus(ks) = &spec.repr {
        spec.check_shapes()?;
        let mut sum = ComplexMatrix::zeros(spec.d_in, spec.d_in);
        for k in ks {
            sum = sum.add(&k.adjoint().matmul(k)?)?;
        }
        let deviation = sum.sub(&ComplexMatrix::identity(spec.d_in))?.max_abs();
        if deviation > CPTP_TOL {
            return Err(ChannelError::NotTracePreserving { deviation });
        }
    }
    let report = validate_cptp(spec)?;
    if report.tp_deviation > CPTP_TOL {
        return Err(ChannelError::NotTracePreserving {
            deviation: report.tp_deviation,
        });
    }
    if report.psd_deviation > CPTP_TOL {
        return Err(ChannelError::NotPositive {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    spec.raw_choi()
}

/// Reports how far a channel is from being CPTP. Only malformed shapes or a
/// non-Hermitian Choi input produce an error.
pub fn validate_cptp(spec: &ChannelSpec) -> Result<CptpReport, ChannelError> {
    spec.raw_choi()?.report()
}

impl ChoiMatrix {
    /// Positivity and trace-preservation report for this Choi matrix.
    pub fn report(&self) -> Result<CptpReport, ChannelError> {
        let choi = self;
        let min_eigenvalue = linalg::min_eigenvalue(&choi.matrix)?;
        let shape = SystemShape::new(vec![choi.d_a, choi.d_b])?;
        let marginal = linalg::partial_trace(&choi.matrix, &shape, &[1])?;
        let target =
            ComplexMatrix::identity(choi.d_a).scale(Complex64::new(1.0 / choi.d_a as f64, 0.0));
        let tp_deviation = linalg::trace_norm_hermitian(&marginal.sub(&target)?)?;
        let psd_deviation = (-min_eigenvalue).max(0.0);
        Ok(CptpReport {
            min_eigenvalue,
            psd_deviation,
            tp_deviation,
            passes: psd_deviation <= CPTP_TOL && tp_deviation <= CPTP_TOL,
        })
    }

    /// True when every entry is real within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.matrix.is_real(tol)
    }
}
