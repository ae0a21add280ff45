use std::fmt;

/// A command failure and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Config(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Config(_) => 3,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Failure {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn data<E: Into<anyhow::Error>>(e: E) -> Failure {
        Failure::Data(e.into())
    }

    pub fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
        Failure::Config(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Config(e) => e,
        };
        if f.alternate() {
            write!(f, "{e:#}")
        } else {
            write!(f, "{e}")
        }
    }
}

/// Attaches context and a failure class to a fallible result.
pub trait Classify<T> {
    fn data_ctx(self, ctx: impl fmt::Display) -> Result<T, Failure>;
    fn config_ctx(self, ctx: impl fmt::Display) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn data_ctx(self, ctx: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into().context(ctx.to_string())))
    }

    fn config_ctx(self, ctx: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into().context(ctx.to_string())))
    }
}
