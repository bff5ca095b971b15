use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use num_traits::Signed;

use halo_core::bounds::{iterated_upper_bounds, lower_bound_constants, lower_bound_points, upper_bound_point};
use halo_core::config::ExperimentConfig;
use halo_core::geometry::{disconnect_certificate, ordinary_degree};
use halo_core::newton::{lies_above, NewtonPolygon};
use halo_core::rational::{fmt, parse, Q};
use halo_core::rep_theory::{chain_poset_count, mackey_bruteforce, slope_budget, weyl_dim};
use halo_core::up_operator::{assemble_up, char_series, AssembleOptions, CharSeries};
use halo_core::weight_space::{is_simple, roche_subgroup, t_coordinates};
use halo_core::{CycloContext, HaloError, Result, Valuation, WeightCharacter};

#[derive(Parser)]
#[command(name = "halo", version, about = "p-adic slope experiments for U_p on locally analytic forms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// JSON experiment config; command-line flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write JSON here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write two-column "x y" data for plotting
    #[arg(long = "plot-data", global = true)]
    plot_data: Option<PathBuf>,
    /// Let np use uncertified coefficient floors
    #[arg(long = "allow-floors", global = true)]
    allow_floors: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Valuations of the weight-space coordinates T_i
    WeightCoords(Opts),
    /// Roche data c_ij, j(χ) and the simplicity predicate
    Roche(Opts),
    /// Dimension d_t of the algebraic representation
    Dims(Opts),
    /// Slope budget l^a(t)
    Budget(Opts),
    /// Brute-force Mackey irreducibility test
    Mackey(Opts),
    /// Characteristic series coefficients with certification flags
    Charpoly(Opts),
    /// Newton polygon and the lower-bound verdict
    Np(Opts),
    /// Lower-bound point table
    LowerBound(Opts),
    /// Upper-bound point
    UpperBound(Opts),
    /// Iterated upper-bound points
    IterateUbd(Opts),
    /// Slope-lattice certificate
    Disconnect(Opts),
    /// Degree of the ordinary part
    Ordinary(Opts),
}

#[derive(Args, Clone, Default)]
#[command(allow_negative_numbers = true)]
struct Opts {
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    h: Option<usize>,
    /// Algebraic weight t_1,…,t_n
    #[arg(long, value_delimiter = ',')]
    weight: Option<Vec<i64>>,
    /// Alias of --weight
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',')]
    conductors: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    tame: Option<Vec<u64>>,
    /// Hecke exponent vector a (default n−1,…,1,0)
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<i64>>,
    /// m_1,…,m_n for the slope budget
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<i64>>,
    /// v(ψ_i(p)) values for the slope budget
    #[arg(long, value_delimiter = ',')]
    psi: Option<Vec<String>>,
    /// Gluing data JSON
    #[arg(long = "global-data")]
    global_data: Option<String>,
    #[arg(long = "degree-cap")]
    degree_cap: Option<u32>,
    /// p-adic digits carried by matrix entries
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long = "Nmax")]
    n_max: Option<usize>,
    #[arg(long = "vTa")]
    v_ta: Option<String>,
    #[arg(long = "Mmax")]
    m_max: Option<u64>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long = "A1")]
    a1: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Coefficient valuations v(c_0), v(c_1), … ("inf" allowed)
    #[arg(long, value_delimiter = ',')]
    vals: Option<Vec<String>>,
    /// Also run the brute-force cross-checks
    #[arg(long)]
    verify: bool,
}

struct Ctx {
    cfg: ExperimentConfig,
    opts: Opts,
    plot: Option<PathBuf>,
    allow_floors: bool,
}

impl Opts {
    fn as_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            command: None,
            p: self.p,
            n: self.n,
            h: self.h,
            weight: self.weight.clone().or_else(|| self.t.clone()),
            conductors: self.conductors.clone(),
            tame: self.tame.clone(),
            a: self.a.clone(),
            global_data: self.global_data.clone(),
            degree_cap: self.degree_cap,
            precision: self.precision,
            n_max: self.n_max,
            out: None,
        }
    }
}

fn need<T: Clone>(x: &Option<T>, name: &str) -> Result<T> {
    x.clone().ok_or_else(|| HaloError::Config(format!("missing --{name}")))
}

fn rat(s: &Option<String>, name: &str) -> Result<Q> {
    parse(&need(s, name)?)
}

fn num(x: &num_bigint::BigInt) -> Value {
    match u64::try_from(x) {
        Ok(v) => json!(v),
        Err(_) => json!(x.to_string()),
    }
}

fn vals_json(v: &[Valuation]) -> Value {
    Value::Array(v.iter().map(|x| json!(x.to_wire())).collect())
}

impl Ctx {
    fn weight(&self) -> Result<WeightCharacter> {
        self.cfg.weight_character()
    }

    fn default_a(&self, n: usize) -> Vec<i64> {
        self.cfg.a.clone().unwrap_or_else(|| (0..n as i64).rev().collect())
    }

    fn v_ta(&self, w: &WeightCharacter) -> Result<Valuation> {
        let ctx = CycloContext::new(w.p, w.wild_level(), 1)?;
        Ok(t_coordinates(w, &ctx)?.v_ta())
    }

    fn series(&self) -> Result<(WeightCharacter, usize, CharSeries)> {
        let w = self.weight()?;
        let g = self.cfg.global_data()?;
        if let Some(h) = self.cfg.h {
            if h != g.h {
                return Err(HaloError::Config(format!("--h {h} disagrees with the gluing data (h = {})", g.h)));
            }
        }
        let a = self.default_a(w.n());
        let opts = AssembleOptions {
            degree: self.cfg.degree_cap.unwrap_or(10),
            digits: self.cfg.precision.unwrap_or(30),
            radius: None,
        };
        let m = assemble_up(&w, &g, &a, &opts)?;
        let cs = char_series(&m, self.cfg.n_max.unwrap_or(10))?;
        Ok((w, g.h, cs))
    }

    fn plot(&self, rows: &[(Q, Q)]) -> Result<()> {
        if let Some(path) = &self.plot {
            let mut s = String::new();
            for (x, y) in rows {
                s.push_str(&format!("{} {}\n", halo_core::rational::to_f64(x), halo_core::rational::to_f64(y)));
            }
            std::fs::write(path, s).map_err(|e| HaloError::Config(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn polygon_points(np: &NewtonPolygon) -> Vec<(Q, Q)> {
    np.vertices.iter().map(|(x, y)| (Q::from_integer((*x).into()), y.clone())).collect()
}

fn lower_verdict(np: &NewtonPolygon, n: usize, p: u64, h: usize, v: &Valuation) -> Value {
    let Valuation::Finite(vt) = v else {
        return json!({"checked": false, "reason": "v(T_a) is infinite"});
    };
    let m_max = np.extent() / h as u64 + 1;
    match lower_bound_points(n, p, h as u64, vt, m_max) {
        Err(e) => json!({"checked": false, "reason": e.to_string()}),
        Ok(pts) => {
            let b: Vec<(Q, Q)> = pts.into_iter().map(|b| (b.x, b.y)).collect();
            let r = lies_above(np, &b);
            json!({
                "checked": true,
                "lies_above": r.holds,
                "witness": r.witness.as_ref().map(fmt),
                "unchecked_points": r.unchecked,
            })
        }
    }
}

fn run(cmd: &Cmd, c: &Ctx) -> Result<Value> {
    let o = &c.opts;
    match cmd {
        Cmd::WeightCoords(_) => {
            let w = c.weight()?;
            let ctx = CycloContext::new(w.p, w.wild_level(), 1)?;
            let tc = t_coordinates(&w, &ctx)?;
            Ok(json!({"v_T": vals_json(&tc.vals), "v_Ta": tc.v_ta().to_wire(), "conductors": w.conductors()}))
        }
        Cmd::Roche(_) => {
            let w = c.weight()?;
            let r = roche_subgroup(&w)?;
            let s = is_simple(&w);
            let mut out = json!({
                "c_matrix": r.c_matrix,
                "j_index": r.j_index,
                "j_displayed": r.j_displayed,
                "simple": s.simple,
                "simple_failures": s.failures,
            });
            if o.verify {
                let idx = halo_core::rep_theory::iwahori_index_bruteforce(&w)?;
                out["index_bruteforce"] = json!(idx);
            }
            Ok(out)
        }
        Cmd::Dims(_) => {
            let t = need(&c.cfg.weight, "t")?;
            let mut out = json!({"d_t": num(&weyl_dim(&t)?)});
            if o.verify {
                out["chain_count"] = num(&chain_poset_count(&t)?);
            }
            Ok(out)
        }
        Cmd::Budget(_) => {
            let m = match (&o.m, &c.cfg.weight) {
                (Some(m), _) => m.clone(),
                (None, Some(_)) => c.weight()?.m(),
                _ => return Err(HaloError::Config("missing --m".into())),
            };
            let a = c.default_a(m.len());
            let psi: Option<Vec<Q>> = match &o.psi {
                Some(v) => Some(v.iter().map(|s| parse(s)).collect::<Result<_>>()?),
                None => None,
            };
            let b = slope_budget(&a, &m, psi.as_deref())?;
            Ok(json!({
                "a": b.a,
                "m": m,
                "value": fmt(&b.value),
                "per_w": b.per_w.iter().map(|(w, v)| json!({"w": w, "v": fmt(v)})).collect::<Vec<_>>(),
                "per_w_sum": fmt(&b.per_w_sum),
                "closed_form": fmt(&b.closed_form),
                "alt_convention": fmt(&b.alt_convention),
                "closed_form_mismatch": b.closed_form_mismatch(),
            }))
        }
        Cmd::Mackey(_) => {
            let w = c.weight()?;
            let r = mackey_bruteforce(&w)?;
            let s = is_simple(&w);
            Ok(json!({
                "irreducible": r.irreducible,
                "intertwiner_dim": r.intertwiner_dim,
                "induced_dim": r.induced_dim,
                "group_order": r.group_order,
                "double_cosets": r.double_cosets,
                "simple_prediction": s.simple,
                "agree": s.simple == r.irreducible,
            }))
        }
        Cmd::Charpoly(_) => {
            let (_, _, cs) = c.series()?;
            Ok(json!({"coefficients": cs.to_json(), "all_certified": cs.all_certified()}))
        }
        Cmd::Np(_) => {
            let (w, h, cs) = c.series()?;
            let n_max = cs.coeffs.len() as u64;
            let (np, last) = cs.certified_polygon()?;
            let floors_used = last < n_max;
            let np = if floors_used {
                if !c.allow_floors {
                    return Err(HaloError::Certification(format!(
                        "polygon certified only through x = {last} of {n_max}; raise --degree-cap or --precision, or pass --allow-floors"
                    )));
                }
                cs.floor_polygon()?
            } else {
                np
            };
            let vt = c.v_ta(&w)?;
            c.plot(&polygon_points(&np))?;
            Ok(json!({
                "polygon": np.to_json(),
                "certified_through": last,
                "floors_used": floors_used,
                "coefficients": cs.to_json(),
                "v_Ta": vt.to_wire(),
                "lower_bound": lower_verdict(&np, w.n(), w.p, h, &vt),
            }))
        }
        Cmd::LowerBound(_) => {
            let n = need(&c.cfg.n, "n")?;
            let p = need(&c.cfg.p, "p")?;
            let h = c.cfg.h.unwrap_or(1) as u64;
            let v = rat(&o.v_ta, "vTa")?;
            let pts = lower_bound_points(n, p, h, &v, o.m_max.unwrap_or(10))?;
            let lc = lower_bound_constants(n, p, h)?;
            c.plot(&pts.iter().map(|b| (b.x.clone(), b.y.clone())).collect::<Vec<_>>())?;
            Ok(json!({
                "points": pts.iter().map(|b| b.to_json()).collect::<Vec<_>>(),
                "A_1": fmt(&lc.a1),
                "C": fmt(&lc.c),
                "exponent": format!("{}/{}", lc.exponent.0, lc.exponent.1),
            }))
        }
        Cmd::UpperBound(_) => {
            let w = c.weight()?;
            let eps = match &o.eps {
                Some(s) => Some(parse(s)?),
                None => None,
            };
            let u = upper_bound_point(&w, c.cfg.h.unwrap_or(1) as u64, eps.as_ref())?;
            c.plot(&[(u.point.x.clone(), u.point.y.clone())])?;
            Ok(json!({
                "point": u.point.to_json(),
                "j_index": u.j_index,
                "d_t": num(&u.d_t),
                "l_t": fmt(&u.l_t),
                // both are irrational in general; their n(n−1)-th powers are exact
                "exact_power": u.exact_power,
                "t_product_pow": u.t_product_pow.as_ref().map(fmt),
                "A_2_pow": u.a2_pow.as_ref().map(fmt),
                "A_2_sign": u.a2_pow.as_ref().map(|_| if u.point.y.is_negative() { -1 } else { 1 }),
            }))
        }
        Cmd::IterateUbd(_) => {
            let w = c.weight()?;
            let h = c.cfg.h.unwrap_or(1) as u64;
            let a1 = match &o.a1 {
                Some(s) => parse(s)?,
                None => lower_bound_constants(w.n(), w.p, h)?.a1,
            };
            let it = iterated_upper_bounds(&w, h, o.k.unwrap_or(2), &a1)?;
            c.plot(&it.points.iter().map(|b| (b.x.clone(), b.y.clone())).collect::<Vec<_>>())?;
            Ok(json!({
                "A_1": fmt(&a1),
                "points": it.points.iter().map(|b| b.to_json()).collect::<Vec<_>>(),
                "weights": it.weights,
                "halted": it.halted,
            }))
        }
        Cmd::Disconnect(_) => {
            let alpha = rat(&o.alpha, "alpha")?;
            let n = need(&c.cfg.n, "n")?;
            let a1 = match &o.a1 {
                Some(s) => parse(s)?,
                None => {
                    let p = need(&c.cfg.p, "p")?;
                    lower_bound_constants(n, p, c.cfg.h.unwrap_or(1) as u64)?.a1
                }
            };
            Ok(disconnect_certificate(&alpha, n, &a1)?.to_json())
        }
        Cmd::Ordinary(_) => {
            let pts: Vec<(u64, Valuation)> = match &o.vals {
                Some(v) => v
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let val = if s.trim() == "inf" { Valuation::Infinity } else { Valuation::Finite(parse(s)?) };
                        Ok((i as u64, val))
                    })
                    .collect::<Result<_>>()?,
                None => {
                    let (_, _, cs) = c.series()?;
                    let (np, last) = cs.certified_polygon()?;
                    // the slope-0 run must end inside the certified range
                    let zero_run = np.slopes.first().filter(|(s, _)| *s == Q::from_integer(0.into()));
                    let ends_inside = np.slopes.len() > 1 || zero_run.is_none();
                    if !ends_inside && last < cs.coeffs.len() as u64 && !c.allow_floors {
                        return Err(HaloError::Certification(
                            "slope-0 part not certified to end; raise --degree-cap or --precision".into(),
                        ));
                    }
                    cs.points().into_iter().filter(|(x, _)| *x <= last).collect()
                }
            };
            Ok(json!({"ordinary_degree": ordinary_degree(&pts)?}))
        }
    }
}

fn opts_of(cmd: &Cmd) -> &Opts {
    match cmd {
        Cmd::WeightCoords(o)
        | Cmd::Roche(o)
        | Cmd::Dims(o)
        | Cmd::Budget(o)
        | Cmd::Mackey(o)
        | Cmd::Charpoly(o)
        | Cmd::Np(o)
        | Cmd::LowerBound(o)
        | Cmd::UpperBound(o)
        | Cmd::IterateUbd(o)
        | Cmd::Disconnect(o)
        | Cmd::Ordinary(o) => o,
    }
}

fn exit_code(e: &HaloError) -> u8 {
    match e {
        HaloError::Precondition(_) | HaloError::Budget(_) => 2,
        HaloError::Certification(_) => 3,
        HaloError::Config(_) => 65,
    }
}

fn emit(v: &Value, out: Option<&Path>) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    match out {
        Some(p) => std::fs::write(p, s),
        None => std::io::stdout().write_all(s.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => ExitCode::from(64),
                _ => ExitCode::from(64),
            };
        }
    };
    let opts = opts_of(&cli.cmd).clone();
    let file_cfg = match &cli.config {
        Some(p) => match ExperimentConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(65);
            }
        },
        None => ExperimentConfig::default(),
    };
    let cfg = file_cfg.merged(&opts.as_config());
    let out = cli.out.clone().or_else(|| cfg.out.clone().map(PathBuf::from));
    let ctx = Ctx { cfg, opts, plot: cli.plot_data.clone(), allow_floors: cli.allow_floors };
    let result = halo_core::up_operator::with_pool(|| run(&cli.cmd, &ctx));
    match result {
        Ok(v) => match emit(&v, out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(65)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
