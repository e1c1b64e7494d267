//! Argument grammar and the validated run configuration.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug, Clone)]
#[command(name = "orthocusp", version, about = "Exact computations for orthogonal modular varieties of signature (2, n)")]
pub struct Cli {
    /// Numeric backend for commands that have both (map-point).
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Tolerance for float mode.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Discriminant, signature and local invariants of a lattice.
    Invariants {
        #[arg(long)]
        gram: PathBuf,
        /// Primes at which to report Hasse invariants (default: the bad primes).
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u64>>,
    },
    /// Convert a point between the projective, tube and bounded models.
    MapPoint {
        #[arg(long)]
        point: PathBuf,
        /// Source model; defaults to the model recorded in the point file.
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: String,
        /// Search height for an isotropic split when the frame gives none.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        height: u32,
    },
    /// Boundary data of a rank-1 or rank-2 cusp.
    Cusp {
        #[arg(long)]
        gram: PathBuf,
        #[arg(long, value_parser = ["rank1", "rank2"])]
        flag: String,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        height: u32,
    },
    /// Rational polyhedral fans.
    Fan {
        #[command(subcommand)]
        op: FanOp,
    },
    /// Windowed core decomposition of a self-adjoint cone.
    CoreDecompose {
        #[arg(long)]
        gram: PathBuf,
        #[arg(long, value_parser = ["central", "central_dual", "perfect"])]
        variant: String,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        height: u64,
        /// JSON file {"gens": [matrices]} of cone automorphisms to check.
        #[arg(long)]
        gens: Option<PathBuf>,
    },
    /// Characteristic-class tables.
    Chern {
        #[command(subcommand)]
        op: ChernOp,
    },
    /// χ(Q, K^ℓ) for a smooth quadric of dimension n, as a polynomial in ℓ.
    HilbertPoly {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        dim: u32,
    },
    /// Local density α_p(L, L) by congruence counting.
    LocalDensity {
        #[arg(long)]
        gram: PathBuf,
        #[arg(long)]
        prime: u64,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
        kmax: u32,
    },
    /// Hirzebruch–Mumford volume of O(L).
    HmVolume {
        #[command(flatten)]
        lattice: VolumeArgs,
    },
    /// Leading term of dim S_ℓ.
    DimLeading {
        #[command(flatten)]
        lattice: VolumeArgs,
        #[arg(long)]
        ell: i64,
    },
    /// Fixed loci and ramification classes of bounded isometries.
    Ramify {
        #[arg(long)]
        gram: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        bound: u32,
    },
}

#[derive(Args, Debug, Clone)]
pub struct VolumeArgs {
    #[arg(long)]
    pub gram: PathBuf,
    /// α_∞ given directly (a rational).
    #[arg(long, conflicts_with_all = ["densities", "spn"])]
    pub alpha_inf: Option<String>,
    /// File of local densities: [{"p": .., "alpha_p": ..}] or {"densities": [...]}.
    #[arg(long, required_unless_present = "alpha_inf")]
    pub densities: Option<PathBuf>,
    /// Number of spinor genera in the genus.
    #[arg(long, requires = "densities")]
    pub spn: Option<u64>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum FanOp {
    /// Fan axioms, completeness and regularity.
    Validate {
        #[arg(long)]
        fan: PathBuf,
    },
    /// Barycentric subdivision of the non-regular cones (or of all).
    Subdivide {
        #[arg(long)]
        fan: PathBuf,
        #[arg(long)]
        all: bool,
    },
    /// Whether the support is all of ℝⁿ.
    Complete {
        #[arg(long)]
        fan: PathBuf,
    },
    /// Regularity, with a regular refinement on request.
    Regular {
        #[arg(long)]
        fan: PathBuf,
        #[arg(long)]
        resolve: bool,
        #[arg(long, default_value_t = 64)]
        max_rounds: usize,
    },
    /// Toric chart presentations of the maximal cones.
    Chart {
        #[arg(long)]
        fan: PathBuf,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum ChernOp {
    /// td(T) through the given degree, in the Chern classes of T.
    Td {
        #[arg(long)]
        degree: u32,
    },
    /// The universal polynomial in c(E) and c(Ω) computing χ(E).
    QPoly {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        rank: u32,
    },
}

/// A parsed and validated invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub mode: Mode,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_TOL: f64 = 1e-9;

/// Parse argv; every failure is a usage error (exit code 2).
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let tol = cli.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(clap::Error::raw(clap::error::ErrorKind::ValueValidation, "--tol must be a positive number\n"));
    }
    Ok(RunConfig { command: cli.command, mode: cli.mode, tol, out: cli.out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let c = parse_config(["orthocusp", "invariants", "--gram", "g.json", "--primes", "2,3,5"]).unwrap();
        match c.command {
            Command::Invariants { primes, .. } => assert_eq!(primes, Some(vec![2, 3, 5])),
            _ => panic!(),
        }
        let e = parse_config(["orthocusp", "invariants"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let c = parse_config(["orthocusp", "--mode", "float", "--tol", "1e-9", "hilbert-poly", "--dim", "2"]).unwrap();
        assert_eq!((c.mode, c.tol), (Mode::Float, 1e-9));
        assert!(parse_config(["orthocusp", "hilbert-poly", "--dim", "2", "--bogus"]).is_err());
        assert!(parse_config(["orthocusp", "--tol", "-1", "hilbert-poly", "--dim", "2"]).is_err());
        assert!(parse_config(["orthocusp", "ramify", "--gram", "g", "--bound", "0"]).is_err());
        assert!(parse_config(["orthocusp", "hm-volume", "--gram", "g"]).is_err());
        assert!(parse_config(["orthocusp", "hm-volume", "--gram", "g", "--alpha-inf", "1", "--spn", "2"]).is_err());
    }
}
