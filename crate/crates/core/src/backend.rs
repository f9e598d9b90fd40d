/// How randomized subroutines are emulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Backend {
    /// Statistical emulation: sampled trace estimates, noisy ground energies
    /// with real failure branches, median boosting.
    #[default]
    Sampling,
    /// Every subroutine succeeds: exact traces, noiseless ground energies,
    /// overlap promises assumed, a single run where boosting would repeat.
    Deterministic,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Sampling => "sampling",
            Backend::Deterministic => "deterministic",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sampling" => Ok(Backend::Sampling),
            "deterministic" => Ok(Backend::Deterministic),
            other => Err(format!("unknown backend `{other}` (expected sampling or deterministic)")),
        }
    }
}
