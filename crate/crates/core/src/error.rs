use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spectrum error: z = {} lies on the spectral rays [0,inf)+i{{-1,+1}}", fmt_c(.0))]
    Spectrum(Complex64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("singular error: {0}")]
    Singular(String),
    #[error("zero coupling error: alpha must be nonzero")]
    ZeroCoupling,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("eigenvalue lost at eps = {eps} (search box {search_box})")]
    EigenvalueLost { eps: f64, search_box: String },
    #[error("io error: {0}")]
    Io(String),
}

fn fmt_c(z: &Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Spectrum(_) => "spectrum",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Singular(_) => "singular",
            Error::ZeroCoupling => "zero_coupling",
            Error::NoConvergence(_) => "no_convergence",
            Error::EigenvalueLost { .. } => "eigenvalue_lost",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
