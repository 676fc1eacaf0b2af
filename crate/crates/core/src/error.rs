use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("covariance is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("singular fronthaul channel (condition number {0:e})")]
    SingularChannel(f64),

    #[error(
        "ill-conditioned Gramian estimate (condition number {0:e}); \
         enable `ls_pinv_fallback` to detect with the pseudo-inverse"
    )]
    IllConditioned(f64),

    #[error("orthogonal pilots need tau_p >= {needed}, got {tau_p}")]
    PilotLength { tau_p: usize, needed: usize },

    #[error("all power reports are zero; scaling factor undefined")]
    ZeroPower,

    #[error("exhaustive search over {0} candidates exceeds the 2^20 limit")]
    SearchTooLarge(u128),
}

pub type Result<T> = std::result::Result<T, Error>;
