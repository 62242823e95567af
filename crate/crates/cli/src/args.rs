use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gravfact", version, about = "Wiener-Hopf factorisation solver for stationary axisymmetric gravity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factorise a monodromy family on a grid or at one point.
    Factorize(CommonArgs),
    /// Residual checks for a reference solution or a factorisation.
    Verify(CommonArgs),
    /// Trace the Kerr ergosurface.
    Ergosurface(ErgoArgs),
    /// Build a product solution from catalog pairs and generators.
    Generate(CommonArgs),
    /// List families, reference solutions, catalog pairs and contour shapes.
    Catalog,
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// JSON job configuration; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Monodromy family name.
    #[arg(long)]
    pub model: Option<String>,
    /// Reference solution name (verify).
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub exponent: Option<f64>,
    /// Extra parameter `key=value`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub param: Vec<String>,
    /// `circle`, `bump:<c>` or `fold:<c>,<e>,<a>`.
    #[arg(long, allow_hyphen_values = true)]
    pub contour: Option<String>,
    /// Contour node count.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// `rho_min,rho_max,n_rho,v_min,v_max,n_v`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Single point `rho,v`.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
    /// Pipeline entry (generate): catalog name or `gen:<omegas>:<exponents>:<plus|minus>`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub pair: Vec<String>,
    #[arg(long)]
    pub jump_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Perturb the field before checking (negative control for verify).
    #[arg(long, hide = true)]
    pub inject_corruption: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ErgoArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub m: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
