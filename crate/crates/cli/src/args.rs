use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cosm_core::{parse_scalar, Rational};

#[derive(Parser, Debug)]
#[command(name = "cosm", version, about = "Compositional simplicity on finite combinational systems")]
pub struct Cli {
    /// Worker threads for the engines (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Ignore the on-disk simplicity cache (COSM_CACHE_DIR).
    #[arg(long, global = true)]
    pub no_cache: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load and check a system document.
    Validate(ValidateArgs),
    /// Simplicity of an entity, an expression, or every entity.
    Simplicity(SimplicityArgs),
    /// Joint simplicity of a multiset of entities.
    Multiset(MultisetArgs),
    /// Pareto bundle of cost vectors for one entity.
    Bundle(BundleArgs),
    /// Pattern records or the multipattern frontier of a target.
    Pattern(PatternArgs),
    /// Subpattern graph and order diagnostics.
    Hierarchy(HierarchyArgs),
    /// Intensional/extensional and transport metric tables.
    Metrics(MetricsArgs),
    /// LMI distance and coherence degree, optionally iterated.
    Coherence(CoherenceArgs),
    /// Cross-check engines against exhaustive enumeration.
    OracleCheck(OracleArgs),
    /// Emit a builtin system document, or regenerate the fixture directory.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Free,
    Literal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SolverArg {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DenominatorArg {
    PerMeasure,
    Base,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Positions {
    Left,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RelationArg {
    Subpattern,
    Submultipattern,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Construction {
    Tanimoto,
    Hutchinson,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TableArg {
    Intensional,
    Extensional,
    Composite,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PolarityArg {
    Similarity,
    Distance,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum ContextScope {
    Identity,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    StringConcat,
    PerturbedConcat,
    GammaSystem,
    Toy1,
    Toy2,
    Str1,
    Filtration,
    SingleReaction,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_scalar(s, false).ok_or_else(|| format!("`{s}` is not a rational p/q"))
}

fn nonnegative(s: &str) -> Result<Rational, String> {
    parse_scalar(s, true).ok_or_else(|| format!("`{s}` is not a nonnegative rational"))
}

fn positive(s: &str) -> Result<Rational, String> {
    let v = nonnegative(s)?;
    if v == Rational::from_integer(0.into()) {
        return Err("must be positive".into());
    }
    Ok(v)
}

fn unit(s: &str) -> Result<Rational, String> {
    let v = rational(s)?;
    if v < Rational::from_integer(0.into()) || v > Rational::from_integer(1.into()) {
        return Err(format!("`{s}` lies outside [0,1]"));
    }
    Ok(v)
}

#[derive(Args, Debug)]
pub struct SystemArg {
    /// System document (JSON).
    #[arg(long)]
    pub system: PathBuf,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub system: SystemArg,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("subject").required(true).args(["entity", "expr", "all"]))]
pub struct SimplicityArgs {
    #[command(flatten)]
    pub system: SystemArg,
    /// Measure id or 1-based index.
    #[arg(long, default_value = "1")]
    pub measure: String,
    #[arg(long)]
    pub entity: Option<String>,
    /// Prefix expression, e.g. `cat(a,cat(b,a))#1`.
    #[arg(long)]
    pub expr: Option<String>,
    /// Every entity.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub context: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Free)]
    pub mode: Mode,
}

#[derive(Args, Debug)]
pub struct MultisetArgs {
    #[command(flatten)]
    pub system: SystemArg,
    /// Comma-separated `entity:count` list.
    #[arg(long)]
    pub elements: String,
    #[arg(long, default_value = "1")]
    pub measure: String,
    #[arg(long, value_enum, default_value_t = SolverArg::Exact)]
    pub solver: SolverArg,
    /// Entity cap for the exact solver.
    #[arg(long, default_value_t = cosm_core::multiset::DEFAULT_EXACT_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug)]
pub struct BundleArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub entity: String,
    #[arg(long)]
    pub context: Option<String>,
    #[arg(long, default_value_t = cosm_core::cosmos::DEFAULT_LABEL_CAP)]
    pub cap: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub output: Format,
}

#[derive(Args, Debug)]
pub struct PatternArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub context: Option<String>,
    /// Only nondominated records.
    #[arg(long)]
    pub frontier: bool,
    #[arg(long, value_enum, default_value_t = DenominatorArg::PerMeasure)]
    pub denominator: DenominatorArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub output: Format,
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    #[arg(long)]
    pub context: Option<String>,
    #[arg(long, value_enum, default_value_t = Positions::Left)]
    pub positions: Positions,
    #[arg(long, value_enum, default_value_t = RelationArg::Subpattern)]
    pub relation: RelationArg,
    /// Denominator for the submultipattern relation.
    #[arg(long, value_enum, default_value_t = DenominatorArg::PerMeasure)]
    pub denominator: DenominatorArg,
}

#[derive(Args, Debug)]
pub struct HierarchyArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Add order, associativity and gamma diagnostics.
    #[arg(long)]
    pub diagnose: bool,
    /// Sample this many chains instead of scanning all of them.
    #[arg(long, requires = "seed")]
    pub chain_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub output: Format,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_parser = unit, default_value = "1/2")]
    pub alpha: Rational,
    #[arg(long, value_enum, default_value_t = Construction::Tanimoto)]
    pub construction: Construction,
    /// Table written in CSV mode.
    #[arg(long, value_enum, default_value_t = TableArg::Composite)]
    pub table: TableArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub output: Format,
}

#[derive(Args, Debug)]
pub struct CoherenceArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_parser = positive, default_value = "1")]
    pub k: Rational,
    #[arg(long, value_parser = unit, default_value = "1/2")]
    pub alpha: Rational,
    /// Fixed-point iterations; a single step when absent.
    #[arg(long)]
    pub iterate: Option<usize>,
    #[arg(long, value_parser = nonnegative, default_value = "0")]
    pub tol: Rational,
    /// Snap each iterate to multiples of this quantum.
    #[arg(long, value_parser = positive)]
    pub round_to: Option<Rational>,
    #[arg(long, value_enum, default_value_t = PolarityArg::Similarity)]
    pub polarity: PolarityArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub output: Format,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("scope").required(true).args(["entity", "all"]))]
pub struct OracleArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub entity: Option<String>,
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value_t = ContextScope::Identity)]
    pub contexts: ContextScope,
    #[arg(long, default_value_t = cosm_core::oracle::DEFAULT_ORACLE_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("what").required(true).args(["family", "fixtures"]))]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Write every shipped fixture into this directory.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Write the document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub alphabet: Option<String>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long, value_parser = nonnegative)]
    pub amplitude: Option<Rational>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub depth: Option<usize>,
}
