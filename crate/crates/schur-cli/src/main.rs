//! `schur`: numerical verification of generalized almost-Schur inequalities
//! on sampled closed manifolds.

mod config;
mod runner;
mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use schur_core::verify::{theorem_catalog, KConvention, KMode};

use crate::config::OutputFormat;

#[derive(Parser)]
#[command(
    name = "schur",
    version,
    about = "Numerical verification of generalized almost-Schur inequalities",
    long_about = "Builds closed geometries (periodic grids and triangle meshes), measures \
                  curvature, spectra, and the integrals both sides of each inequality need, \
                  and reports the LHS/RHS ratio with equality and hypothesis flags.\n\n\
                  Exit codes: 0 all inequalities hold, 1 a ratio exceeds 1 + eps_disc, \
                  2 config rejected, 3 a hypothesis failed (reports still written), \
                  4 a solver broke down."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in identity and analytic-oracle suite
    Selftest {
        /// Only run checks whose group or name contains this string
        #[arg(long, value_name = "NAME")]
        filter: Option<String>,
    },
    /// Execute a JSON run config and write inequality reports
    Verify {
        /// Path to the config file (JSON, schema version 1; relative mesh
        /// and tensor paths resolve against its directory; eps_disc
        /// defaults to 0.05)
        config: PathBuf,
        /// Report directory [default: the config's out_dir, else ./schur-reports]
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Report formats to write [default: the config's format, else both]
        #[arg(long, value_enum, value_name = "FORMAT")]
        format: Option<OutputFormat>,
        /// Worker threads [default: all cores]
        #[arg(long, env = "SCHUR_JOBS", value_name = "N")]
        jobs: Option<usize>,
    },
    /// Print geometry generators, theorems with equation tags, and K conventions
    List,
}

fn cmd_verify(
    path: &Path,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    jobs: Option<usize>,
) -> u8 {
    if let Some(jobs) = jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 2;
        }
        // Only fails if a pool already exists, in which case that one is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: reading {}: {e}", path.display());
            return 2;
        }
    };
    let config_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let config = match config::parse_config(&text, config_dir) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    runner::run_verify(&config, out, format).code()
}

fn list_text() -> String {
    let mut out = String::new();
    out.push_str("theorems\n");
    for info in theorem_catalog() {
        let k_note = match info.k_mode {
            KMode::Measured => "K measured",
            KMode::ForcedZero => "K forced to 0, needs Ric >= 0",
        };
        out.push_str(&format!(
            "  {} ({})  [{}; {}]\n      requires {}\n",
            info.id,
            info.equations.join(", "),
            info.convention.token(),
            k_note,
            info.requires,
        ));
    }
    out.push_str(
        "\ngeometry generators\n\
         \x20 periodic grids (resolution = points per axis, at least 8)\n\
         \x20   flat(n, L)                     flat torus T^n with side L\n\
         \x20   conformal(n, L, phi, eps)      e^(2 eps phi) scaling of flat T^n; phi in {sin-x, sin-cos, triple}\n\
         \x20   product(L, eps, eps_axis...)   warped product, deliberately not conformally flat\n\
         \x20   torus3(R1, r), requires R1 > r          torus of revolution in R^3\n\
         \x20   spun_torus4(R1, r, d), requires d > r and R1 > r   hypersurface in R^4\n\
         \x20 triangle meshes (resolution = subdivision depth, at most 7)\n\
         \x20   icosphere(rho)                 geodesic sphere of radius rho\n\
         \x20   ellipsoid(a, b, c)             triaxial ellipsoid\n\
         \x20   perturbed_sphere(rho, eps, l)  sphere with a degree-l radial bump\n\
         \x20   mesh-file(path)                OFF or OBJ triangle mesh from disk\n",
    );
    out.push_str(
        "\ntensor choices (general statement)\n\
         \x20   metric             T = g, equality everywhere\n\
         \x20   ricci              T = Ric, c = 1/2 by the contracted Bianchi identity\n\
         \x20   shape              T = A on embedded geometries, c = 1\n\
         \x20   newton-shape(r)    T = P_r of the shape operator, div-free\n\
         \x20   newton-schouten(k) T = T_k of the Schouten tensor, conformally flat grids only\n\
         \x20   custom-from-file   packed symmetric samples from CSV, grids only\n",
    );
    out.push_str(&format!(
        "\nK conventions\n\
         \x20   {}        \"{}\"  (general tensor statements)\n\
         \x20   {}  \"{}\"       (hypersurface and k-scalar statements)\n",
        KConvention::TensorThm.token(),
        KConvention::TensorThm.hypothesis(),
        KConvention::HypersurfaceThm.token(),
        KConvention::HypersurfaceThm.hypothesis(),
    ));
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Selftest { filter } => selftest::run_selftest(filter.as_deref()),
        Command::Verify { config, out, format, jobs } => cmd_verify(&config, out, format, jobs),
        Command::List => {
            print!("{}", list_text());
            0
        }
    };
    ExitCode::from(code)
}
