mod config;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biasedpoint::airy::{airy_eval, wronskian_sweep};
use biasedpoint::limits::{delta_transmission, single_layer_limit};
use biasedpoint::potential::{invnm2_to_ev, realize, LayerSpec, StructureSpec};
use biasedpoint::resonance::{
    find_resonances_deltaprime_2layer, find_resonances_transistor_deltaprime,
    resonances_delta_barrier_well, resonances_transistor_delta, EquationId, ResonanceSet,
};
use biasedpoint::scattering::{scatter, ScatteringError};
use biasedpoint::sweep::{run_sweep, write_csv, write_json};
use biasedpoint::transfer::{structure_matrix, TransferMatrix};
use clap::{Parser, Subcommand};
use config::{ConfigError, DeviceConfig};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "biasedpoint",
    version,
    about = "Scattering through squeezed biased layered structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Airy Wronskian over z in [-20, 8].
    AiryCheck {
        /// Per-regime deviation table.
        #[arg(long)]
        verbose: bool,
        /// Perturb Ai by one part in 1e6 (test hook).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Transfer matrix, amplitudes and probabilities as JSON.
    Scatter {
        config: PathBuf,
        /// Energy in the config's units; overrides the config value.
        #[arg(long)]
        energy: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
    /// Resonance set as CSV.
    Resonances {
        config: PathBuf,
        /// EQ69, EQ73, EQ76 or EQ83.
        #[arg(long)]
        equation: String,
        /// Range of the tuned value (-b1 or V_EB) in config units, as `lo,hi`.
        #[arg(long, value_parser = parse_pair)]
        interval: Option<(f64, f64)>,
    },
    /// Squeezing sweep; writes `<out>.csv` and `<out>.json`.
    Sweep {
        config: PathBuf,
        /// Comma-separated, strictly descending.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Delta-limit convergence and resonant-wall tables.
    LimitCheck {
        /// Use the first layer and energy of this config instead of the built-in example.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

enum Failure {
    Check(String),
    Config(String),
    Physics(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::AiryCheck {
            verbose,
            inject_fault,
        } => airy_check(verbose, inject_fault),
        Command::Scatter {
            config,
            energy,
            epsilon,
        } => cmd_scatter(&config, energy, epsilon),
        Command::Resonances {
            config,
            equation,
            interval,
        } => cmd_resonances(&config, &equation, interval),
        Command::Sweep {
            config,
            epsilons,
            out,
        } => cmd_sweep(&config, epsilons, &out),
        Command::LimitCheck { config } => limit_check(config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Physics(m)) => {
            eprintln!("physics error: {m}");
            ExitCode::from(3)
        }
    }
}

const WRONSKIAN_TOL: f64 = 1e-10;

fn airy_check(verbose: bool, inject_fault: bool) -> Result<(), Failure> {
    let (lo, hi, n) = (-20.0, 8.0, 2000);
    let report = wronskian_sweep(lo, hi, n).map_err(|e| Failure::Physics(e.to_string()))?;
    let mut max_dev = report.max_deviation;
    if inject_fault {
        max_dev = 0.0;
        for i in 0..n {
            let z = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let q = airy_eval(z).map_err(|e| Failure::Physics(e.to_string()))?;
            let w = (1.0 + 1e-6) * q.ai * q.bi_prime - q.ai_prime * q.bi;
            max_dev = max_dev.max((w - 1.0 / PI).abs());
        }
    }
    println!("max |W - 1/pi| = {max_dev:.3e} over {n} points in [{lo}, {hi}]");
    if verbose {
        println!("{:<22} {:>12} {:>8}", "regime", "max dev", "points");
        for (label, dev, count) in &report.by_regime {
            println!("{label:<22} {dev:>12.3e} {count:>8}");
        }
    }
    if max_dev < WRONSKIAN_TOL {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "deviation {max_dev:.3e} exceeds {WRONSKIAN_TOL:e}"
        )))
    }
}

fn total_matrix(
    spec: &StructureSpec,
    epsilon: f64,
    energy: f64,
) -> Result<TransferMatrix, Failure> {
    let layers = realize(spec, epsilon).map_err(|e| Failure::Config(e.to_string()))?;
    if layers.is_empty() {
        return Ok(TransferMatrix::IDENTITY);
    }
    structure_matrix(&layers, energy).map_err(|e| Failure::Physics(e.to_string()))
}

fn cmd_scatter(path: &Path, energy: Option<f64>, epsilon: f64) -> Result<(), Failure> {
    let cfg = DeviceConfig::load(path)?;
    let e = cfg.units.to_internal(energy.unwrap_or(cfg.energy));
    let spec = cfg.structure();
    let m = total_matrix(&spec, epsilon, e)?;
    let r = scatter(&m, spec.v_left, spec.v_right(), e).map_err(|err| match err {
        ScatteringError::EvanescentLead { .. } => Failure::Physics(err.to_string()),
        ScatteringError::NonFinite => Failure::Physics(err.to_string()),
    })?;
    let doc = json!({
        "energy_invnm2": e,
        "epsilon": epsilon,
        "matrix": m.to_array(),
        "r_left": [r.r_left.re, r.r_left.im],
        "t_left": [r.t_left.re, r.t_left.im],
        "r_right": [r.r_right.re, r.r_right.im],
        "t_right": [r.t_right.re, r.t_right.im],
        "R": r.refl_prob,
        "T": r.trans_prob,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    Ok(())
}

fn cmd_resonances(
    path: &Path,
    equation: &str,
    interval: Option<(f64, f64)>,
) -> Result<(), Failure> {
    let cfg = DeviceConfig::load(path)?;
    let id = EquationId::parse(equation)
        .ok_or_else(|| Failure::Config(format!("unknown equation `{equation}`")))?;
    let u = cfg.units;
    // tuned-value window in internal units: -b1 or V_EB
    let window = interval
        .map(|(a, b)| (u.to_internal(a), u.to_internal(b)))
        .or_else(|| {
            cfg.sweep
                .as_ref()
                .map(|s| (u.to_internal(s.lo), u.to_internal(s.hi)))
        });
    let energy = Some(cfg.energy());
    let mismatch = |needs: &str| {
        Failure::Config(format!(
            "{equation} needs the {needs} scenario, config has {:?}",
            cfg.scenario()
        ))
    };
    let two_layer = matches!(
        id,
        EquationId::EQ73_DELTA_BARRIER_WELL | EquationId::EQ69_DELTAPRIME_2LAYER
    );
    let mut set: ResonanceSet = match id {
        EquationId::EQ73_DELTA_BARRIER_WELL | EquationId::EQ69_DELTAPRIME_2LAYER => {
            let p = cfg
                .barrier_well()
                .ok_or_else(|| mismatch("fig3_barrier_well"))?;
            let (lo, hi) = window.unwrap_or((0.0, p.a1));
            let b1_range = (-hi, -lo);
            if id == EquationId::EQ73_DELTA_BARRIER_WELL {
                resonances_delta_barrier_well(&p, b1_range, energy)
            } else {
                find_resonances_deltaprime_2layer(&p, b1_range, energy)
            }
        }
        EquationId::EQ76_TRANSISTOR_DELTA | EquationId::EQ83_TRANSISTOR_DELTAPRIME => {
            let t = cfg
                .transistor()
                .ok_or_else(|| mismatch("fig5_transistor"))?;
            let (lo, hi) = window.unwrap_or((0.0, t.a3));
            if id == EquationId::EQ76_TRANSISTOR_DELTA {
                let mut s = resonances_transistor_delta(&t, hi, energy);
                s.roots.retain(|r| r.value >= lo);
                s
            } else {
                find_resonances_transistor_deltaprime(&t, (lo, hi), energy)
            }
        }
    };

    // report in the same coordinate as --interval
    if two_layer {
        for r in &mut set.roots {
            r.value = -r.value;
        }
        set.roots.reverse();
    }

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut rows = || -> csv::Result<()> {
        w.write_record([
            "n",
            "value_eV",
            "value_invnm2",
            "theta",
            "alpha",
            "T_n",
            "admissible",
        ])?;
        for r in &set.roots {
            w.write_record([
                r.n.to_string(),
                invnm2_to_ev(r.value).to_string(),
                r.value.to_string(),
                opt(r.theta),
                r.alpha.to_string(),
                opt(r.trans_prob),
                r.admissible.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    rows().map_err(|e| Failure::Config(e.to_string()))
}

fn cmd_sweep(path: &Path, epsilons: Option<Vec<f64>>, out: &Path) -> Result<(), Failure> {
    let cfg = DeviceConfig::load(path)?;
    let req = cfg.sweep_request(epsilons)?;
    req.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let res = run_sweep(&req).map_err(|e| Failure::Config(e.to_string()))?;

    let csv_path = out.with_extension("csv");
    let json_path = out.with_extension("json");
    write_csv(&res, BufWriter::new(File::create(&csv_path)?))
        .map_err(|e| Failure::Config(e.to_string()))?;
    let mut jw = BufWriter::new(File::create(&json_path)?);
    write_json(&res, &mut jw).map_err(|e| Failure::Config(e.to_string()))?;
    jw.flush()?;

    let u = cfg.units;
    let unit = match u {
        config::Units::Ev => "eV",
        config::Units::InvNm2 => "nm^-2",
    };
    let mut o = io::stdout().lock();
    for (c, ps) in res.curves.iter().zip(&res.peaks) {
        let list: Vec<String> = ps
            .iter()
            .map(|p| format!("{:.6}", u.to_config(*p)))
            .collect();
        writeln!(
            o,
            "eps {}: {} peaks [{}] {unit}",
            c.epsilon,
            ps.len(),
            list.join(", ")
        )?;
    }
    if let Some(set) = &res.reference {
        writeln!(o, "reference {:?}:", set.equation_id)?;
        for root in &set.roots {
            let errs: Vec<String> = res
                .convergence
                .iter()
                .filter(|e| e.n == root.n)
                .map(|e| match e.error {
                    Some(x) => format!("{}: {:.6}", e.epsilon, u.to_config(x)),
                    None => format!("{}: none", e.epsilon),
                })
                .collect();
            writeln!(
                o,
                "  n = {} at {:.6} {unit}; |peak - root| by eps {{{}}}",
                root.n,
                u.to_config(root.value),
                errs.join(", ")
            )?;
        }
    }
    for f in &res.flags {
        eprintln!("note: {f}");
    }
    writeln!(
        o,
        "wrote {} and {}",
        csv_path.display(),
        json_path.display()
    )?;
    Ok(())
}

fn transmission(spec: &StructureSpec, eps: f64, e: f64) -> Result<f64, Failure> {
    let m = total_matrix(spec, eps, e)?;
    scatter(&m, spec.v_left, spec.v_right(), e)
        .map(|r| r.trans_prob)
        .map_err(|err| Failure::Physics(err.to_string()))
}

fn limit_check(config: Option<&Path>) -> Result<(), Failure> {
    let (layer, e) = match config {
        Some(p) => {
            let cfg = DeviceConfig::load(p)?;
            let s = cfg.structure();
            let first = *s
                .layers
                .first()
                .ok_or_else(|| Failure::Config("config has no layers".into()))?;
            (
                LayerSpec {
                    mu: 1.0,
                    nu: 1.0,
                    ..first
                },
                cfg.energy(),
            )
        }
        None => (
            LayerSpec {
                a: 1.31232,
                b: -0.524928,
                d: 2.0,
                mu: 1.0,
                nu: 1.0,
            },
            0.25,
        ),
    };
    let limit =
        single_layer_limit(&layer, e, &[]).map_err(|err| Failure::Physics(err.to_string()))?;
    let alpha = (layer.a + layer.b / 2.0) * layer.d;
    if !(e > 0.0 && e > layer.b) {
        return Err(Failure::Physics("energy below a lead potential".into()));
    }
    let t_lim = delta_transmission(alpha, e.sqrt(), (e - layer.b).sqrt());
    let spec = StructureSpec::new(vec![layer]);
    let mut o = io::stdout().lock();
    writeln!(
        o,
        "delta limit: a = {}, b = {}, d = {}, E = {e} (nm^-2) -> {} with alpha = {alpha:.6}, T = {t_lim:.6}",
        layer.a,
        layer.b,
        layer.d,
        limit.classification.label()
    )?;
    writeln!(o, "{:>8} {:>12} {:>12}", "eps", "T(eps)", "|T - T_lim|")?;
    for eps in [0.5, 0.25, 0.1, 0.05, 0.02, 0.01] {
        let t = transmission(&spec, eps, e)?;
        writeln!(o, "{eps:>8} {t:>12.6} {:>12.3e}", (t - t_lim).abs())?;
    }

    let d = 10.0;
    let s1 = -(PI / d).powi(2);
    let mid = -0.5 * ((PI / d).powi(2) + (2.0 * PI / d).powi(2));
    writeln!(o, "resonant wall: mu = 2, nu = 1, d = {d}, E = {e}")?;
    writeln!(o, "{:>8} {:>14} {:>14}", "eps", "T(sigma_1)", "T(midway)")?;
    for eps in [0.1, 0.05, 0.02, 0.01] {
        let at = |a: f64| {
            let spec = StructureSpec::new(vec![LayerSpec {
                a,
                b: 0.0,
                d,
                mu: 2.0,
                nu: 1.0,
            }]);
            transmission(&spec, eps, e)
        };
        writeln!(o, "{eps:>8} {:>14.6} {:>14.3e}", at(s1)?, at(mid)?)?;
    }
    Ok(())
}
