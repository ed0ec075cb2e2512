use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use epl_core::runner::{self, Format, RunOptions, ScenarioSpec};

#[derive(Parser)]
#[command(name = "epl", version, about = "Numerical checks for rated extremal principles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Text => Format::Text,
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
    /// Omit wall-clock timings so reports are byte-stable.
    #[arg(long)]
    normalize_timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a builtin scenario by name.
    Run {
        scenario: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List the builtin scenarios.
    Builtins,
    /// Project a point onto a set.
    Project {
        /// Set oracle as JSON.
        #[arg(long)]
        set: String,
        #[arg(long)]
        point: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// ε-normal residual of a dual vector, or the sampled limiting cone.
    Normal {
        #[arg(long)]
        set: String,
        #[arg(long)]
        point: String,
        /// Dual vector whose ε-normal residual is estimated.
        #[arg(long, conflicts_with = "cone")]
        xstar: Option<String>,
        /// Sample the limiting normal cone instead.
        #[arg(long)]
        cone: bool,
        /// With --cone: vector tested for membership.
        #[arg(long, requires = "cone")]
        contains: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Rated extremality of a finite system along a translation schedule.
    Extremal {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Constructive extremal principle, or a certificate search over cones.
    Principle {
        #[command(flatten)]
        system: Option<SystemArgs>,
        /// Sampled cone generators as JSON, one list per set.
        #[arg(long, conflicts_with_all = ["sets", "base", "schedule"])]
        cones: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Rated normal check on an indexed family.
    Rnormal {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        xstar: String,
        /// Radii as a JSON list, strictly decreasing.
        #[arg(long)]
        radii: String,
        /// Rate `R(r) = gamma r^{alpha-1}`.
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Selection rule as JSON; all listed sets per radius when absent.
        #[arg(long)]
        selection: Option<String>,
        /// Also check the Fréchet consistency of the verdict.
        #[arg(long)]
        consistency: bool,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Search and revalidate a fuzzy intersection certificate.
    Fuzzy {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        xstar: String,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Approximate qualification condition on an ε ladder.
    Aqc {
        #[command(flatten)]
        family: FamilyArgs,
        /// ε ladder as a JSON list, strictly decreasing.
        #[arg(long)]
        eps: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Optimality conditions of a semi-infinite program.
    Sip {
        /// Objective oracle as JSON.
        #[arg(long)]
        objective: String,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        eps: String,
        /// Check the lower-subdifferential condition instead of the upper one.
        #[arg(long)]
        lower: bool,
        #[command(flatten)]
        flags: RunFlags,
    },
}

#[derive(Args, Clone)]
#[group(required = false, multiple = true)]
struct SystemArgs {
    /// Sets as a JSON list of set oracles.
    #[arg(long)]
    sets: Option<String>,
    #[arg(long)]
    base: Option<String>,
    /// Schedule as JSON, e.g. {"kind":"geometric","directions":[[0,1],[0,-1]],"base":4,"rungs":10}.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Admit alpha = 1.
    #[arg(long)]
    rank_one: bool,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// Indexed family as JSON.
    #[arg(long, conflicts_with = "km")]
    family: Option<String>,
    /// Shorthand for the family of epigraphs of k^m x^2 (x >= 0) with this m.
    #[arg(long)]
    km: Option<f64>,
}

fn parse_json(flag: &str, text: &str) -> anyhow::Result<Value> {
    serde_json::from_str(text).with_context(|| format!("--{flag} is not valid JSON"))
}

impl FamilyArgs {
    fn value(&self) -> anyhow::Result<Value> {
        match (&self.family, self.km) {
            (Some(f), _) => parse_json("family", f),
            (None, Some(m)) => Ok(json!({ "kind": { "kind": "km_parabola_epigraphs", "m": m }, "base": [0.0, 0.0] })),
            (None, None) => bail!("either --family or --km is required"),
        }
    }
}

impl SystemArgs {
    fn fields(&self) -> anyhow::Result<Map<String, Value>> {
        let (Some(sets), Some(base), Some(schedule)) = (&self.sets, &self.base, &self.schedule) else {
            bail!("--sets, --base and --schedule are required");
        };
        let mut m = Map::new();
        m.insert("sets".into(), parse_json("sets", sets)?);
        m.insert("base".into(), parse_json("base", base)?);
        m.insert("schedule".into(), parse_json("schedule", schedule)?);
        m.insert("query".into(), json!({ "alpha": self.alpha, "gamma": self.gamma, "rank_one": self.rank_one }));
        Ok(m)
    }
}

fn single_check(name: &str, check: &str, mut fields: Map<String, Value>, seed: Option<u64>) -> anyhow::Result<ScenarioSpec> {
    fields.insert("check".into(), Value::String(check.into()));
    let doc = json!({
        "version": runner::SCHEMA_VERSION,
        "name": name,
        "seed": seed.unwrap_or(0),
        "checks": [{ "spec": Value::Object(fields) }],
    });
    Ok(runner::scenario_from_value(&doc)?)
}

fn load_scenario(arg: &str) -> anyhow::Result<ScenarioSpec> {
    let path = PathBuf::from(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        return Ok(runner::parse_scenario(&text)?);
    }
    runner::builtin(arg).with_context(|| format!("{arg} is neither a scenario file nor a builtin name"))
}

fn execute(spec: &ScenarioSpec, flags: &RunFlags) -> anyhow::Result<i32> {
    let opts = RunOptions { workers: flags.workers, normalize_timings: flags.normalize_timings, seed: flags.seed };
    let report = runner::run_scenario(spec, &opts)?;
    let out = flags.out.clone().or_else(|| spec.output.as_ref().and_then(|o| o.dir.clone()).map(PathBuf::from));
    let format = flags.format.map(Format::from).or_else(|| spec.output.as_ref().and_then(|o| o.format)).unwrap_or(Format::Text);
    match (&out, format) {
        (Some(dir), f) => {
            for p in runner::emit_report(&report, f, dir)? {
                eprintln!("wrote {}", p.display());
            }
            if f != Format::Json {
                print!("{}", runner::render_text(&report));
            }
        }
        (None, Format::Json) => print!("{}", runner::render_json(&report)),
        (None, Format::Csv) => print!("{}", runner::render_csv_summary(&report)),
        (None, Format::Text) => print!("{}", runner::render_text(&report)),
    }
    Ok(report.exit_code())
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    let (spec, flags) = match cli.command {
        Command::Builtins => {
            for b in runner::list_builtins() {
                println!("{:<24} {}", b.name, b.description);
            }
            return Ok(0);
        }
        Command::Run { scenario, flags } => (load_scenario(&scenario)?, flags),
        Command::Project { set, point, flags } => {
            let mut m = Map::new();
            m.insert("set".into(), parse_json("set", &set)?);
            m.insert("point".into(), parse_json("point", &point)?);
            (single_check("project", "projection", m, flags.seed)?, flags)
        }
        Command::Normal { set, point, xstar, cone, contains, flags } => {
            let mut m = Map::new();
            m.insert("set".into(), parse_json("set", &set)?);
            m.insert("point".into(), parse_json("point", &point)?);
            let check = if cone {
                if let Some(c) = contains {
                    m.insert("contains".into(), parse_json("contains", &c)?);
                }
                "limiting_cone"
            } else {
                let Some(x) = xstar else { bail!("either --xstar or --cone is required") };
                m.insert("xstar".into(), parse_json("xstar", &x)?);
                "eps_normal"
            };
            (single_check("normal", check, m, flags.seed)?, flags)
        }
        Command::Extremal { system, flags } => (single_check("extremal", "rated_extremality", system.fields()?, flags.seed)?, flags),
        Command::Principle { system, cones, flags } => match (cones, system) {
            (Some(c), _) => {
                let mut m = Map::new();
                m.insert("cones".into(), parse_json("cones", &c)?);
                (single_check("principle", "principle_search", m, flags.seed)?, flags)
            }
            (None, Some(s)) => (single_check("principle", "exact_principle", s.fields()?, flags.seed)?, flags),
            (None, None) => bail!("either --cones or --sets, --base and --schedule are required"),
        },
        Command::Rnormal { family, xstar, radii, alpha, gamma, selection, consistency, flags } => {
            let fam = family.value()?;
            let radii_v = parse_json("radii", &radii)?;
            let selection = match selection {
                Some(s) => parse_json("selection", &s)?,
                None => {
                    let n = fam.pointer("/kind/sets").and_then(Value::as_array).map(Vec::len).unwrap_or(0);
                    let count = radii_v.as_array().map(Vec::len).unwrap_or(0);
                    if n == 0 {
                        bail!("--selection is required for infinite families");
                    }
                    json!({ "rule": "prefix", "counts": vec![n; count] })
                }
            };
            let mut m = Map::new();
            m.insert("family".into(), fam);
            m.insert("xstar".into(), parse_json("xstar", &xstar)?);
            m.insert("rate".into(), json!({ "law": { "law": "power", "gamma": gamma, "exponent": 1.0 - alpha }, "bound": gamma }));
            m.insert("radii".into(), radii_v);
            m.insert("selection".into(), selection);
            let check = if consistency { "r_normal_consistency" } else { "r_normal" };
            (single_check("rnormal", check, m, flags.seed)?, flags)
        }
        Command::Fuzzy { family, xstar, eps, flags } => {
            let mut m = Map::new();
            m.insert("family".into(), family.value()?);
            m.insert("xstar".into(), parse_json("xstar", &xstar)?);
            m.insert("eps".into(), json!(eps));
            (single_check("fuzzy", "fuzzy_search", m, flags.seed)?, flags)
        }
        Command::Aqc { family, eps, flags } => {
            let mut m = Map::new();
            m.insert("family".into(), family.value()?);
            m.insert("eps".into(), parse_json("eps", &eps)?);
            (single_check("aqc", "aqc", m, flags.seed)?, flags)
        }
        Command::Sip { objective, family, eps, lower, flags } => {
            let mut m = Map::new();
            m.insert("problem".into(), json!({ "objective": parse_json("objective", &objective)?, "constraints": family.value()?, "aqc_assumed": true }));
            m.insert("eps".into(), parse_json("eps", &eps)?);
            let check = if lower { "sip_lower" } else { "sip_upper" };
            (single_check("sip", check, m, flags.seed)?, flags)
        }
    };
    execute(&spec, &flags)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
