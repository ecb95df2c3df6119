use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use nonlocal_core::complexity::{
    cond_mutual_info_est, estimate_k, estimate_k_given, mutual_info_est, Estimator,
};
use nonlocal_core::experiments::{
    run_locality_suite, run_magic_square, run_theorem1, run_theorem2, run_theorem3, ExperimentReport,
    StrategyChoice,
};
use nonlocal_core::games::{
    locality_verdict, ns_report, play, read_quadruple, satisfaction_fraction, write_quadruple, GameSpec, Quadruple,
};
use nonlocal_core::oracles::{
    fine_membership, game_value_exact, marginal_extremes, ratio, Distribution, MarginalLp, PrConstraint,
};
use nonlocal_core::strings::{
    gen_computable, gen_promise_inputs, gen_seeded_random, ComputableKind, SymbolString,
};

use crate::config::{
    CommandConfig, EstimateParams, ExpName, ExpParams, GameName, GenKind, GenParams, LocalityParams, NosigParams,
    OracleParams, PlayParams, RunConfig, StrategyKind,
};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn execute(cfg: &RunConfig) -> Result<()> {
    log::info!("running `{}`", cfg.command.name());
    match &cfg.command {
        CommandConfig::Gen(p) => gen(cfg, p),
        CommandConfig::Play(p) => play_cmd(cfg, p),
        CommandConfig::Estimate(p) => estimate(cfg, p),
        CommandConfig::Nosig(p) => nosig(cfg, p),
        CommandConfig::Locality(p) => locality(cfg, p),
        CommandConfig::Oracle(p) => oracle(cfg, p),
        CommandConfig::Exp(p) => exp(cfg, p),
    }
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

fn write_to(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Writes `value` with the effective config echoed under `"config"`.
fn emit_json(cfg: &RunConfig, mut value: Value) -> Result<()> {
    if let Value::Object(map) = &mut value {
        map.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    }
    let mut text = serde_json::to_string_pretty(&value).expect("json serializes");
    text.push('\n');
    write_to(cfg.out.as_deref(), text.as_bytes())
}

fn read_syms(path: &Path) -> Result<SymbolString> {
    SymbolString::read_syms(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn estimator(cfg: &RunConfig) -> Result<Estimator> {
    Ok(cfg.estimators.resolve(&cfg.estimator)?)
}

fn game_spec(game: GameName, m: Option<u32>) -> Result<GameSpec> {
    match game {
        GameName::Pr => Ok(GameSpec::Pr),
        GameName::Magic => Ok(GameSpec::MagicSquare),
        GameName::Chained => Ok(GameSpec::chained(*required(&m, "m")?)?),
    }
}

fn gen(cfg: &RunConfig, p: &GenParams) -> Result<()> {
    let kind = *required(&p.kind, "kind")?;
    let s = match kind {
        GenKind::Zeros => gen_computable(ComputableKind::Zeros, p.n),
        GenKind::Alternating => gen_computable(ComputableKind::Alternating, p.n),
        GenKind::ThueMorse => gen_computable(ComputableKind::ThueMorse, p.n),
        GenKind::Counter => gen_computable(ComputableKind::Counter, p.n),
        GenKind::Random => gen_seeded_random(p.n, p.q, &cfg.seeds.inputs)?,
        GenKind::Promise => {
            let out_b = required(&p.out_b, "out-b")?;
            let (a, b) = gen_promise_inputs(p.m, p.n, &cfg.seeds.inputs)?;
            write_to(Some(out_b), &b.to_syms_bytes())?;
            a
        }
    };
    write_to(cfg.out.as_deref(), &s.to_syms_bytes())
}

fn generated_inputs(cfg: &RunConfig, game: &GameSpec, n: usize) -> Result<(SymbolString, SymbolString)> {
    let seed = &cfg.seeds.inputs;
    Ok(match game {
        GameSpec::Pr => (gen_seeded_random(n, 2, &seed.derive("a"))?, gen_seeded_random(n, 2, &seed.derive("b"))?),
        GameSpec::MagicSquare => {
            (gen_seeded_random(n, 3, &seed.derive("a"))?, gen_seeded_random(n, 3, &seed.derive("b"))?)
        }
        GameSpec::ChainedBell { m } => gen_promise_inputs(*m, n, seed)?,
    })
}

fn strategy_choice(kind: StrategyKind, epsilon: f64, fa: &[u32], fb: &[u32]) -> StrategyChoice {
    match kind {
        StrategyKind::Nosig => StrategyChoice::NoSignaling { epsilon },
        StrategyKind::Local => StrategyChoice::Local { fa: fa.to_vec(), fb: fb.to_vec() },
        StrategyKind::Signaling => StrategyChoice::Signaling,
    }
}

fn play_cmd(cfg: &RunConfig, p: &PlayParams) -> Result<()> {
    let game = game_spec(p.game, p.m)?;
    let dir = required(&p.dir, "dir")?;
    let (a, b) = match (&p.a, &p.b) {
        (Some(a), Some(b)) => (read_syms(a)?, read_syms(b)?),
        (None, None) => generated_inputs(cfg, &game, p.n)?,
        _ => return Err(CliError::Usage("--a and --b must be given together".into())),
    };
    let strategy = strategy_choice(p.strategy, p.epsilon, &p.fa, &p.fb).build(&cfg.seeds);
    let (x, y) = play(&strategy, &game, &a, &b, &cfg.seeds.noise)?;
    let quad = Quadruple::new(game, a, b, x, y)?;
    let seeds: BTreeMap<String, _> = [
        ("inputs".to_string(), cfg.seeds.inputs),
        ("sampler".to_string(), cfg.seeds.sampler),
        ("noise".to_string(), cfg.seeds.noise),
    ]
    .into();
    let epsilon = matches!(p.strategy, StrategyKind::Nosig).then_some(p.epsilon);
    let manifest = write_quadruple(dir, &quad, &strategy.label(), epsilon, seeds)?;
    emit_json(
        cfg,
        json!({
            "manifest": manifest,
            "n": quad.len(),
            "strategy": strategy.label(),
            "wins": quad.wins(),
            "satisfaction": ratio::to_string(&satisfaction_fraction(&quad)?),
        }),
    )
}

fn estimate(cfg: &RunConfig, p: &EstimateParams) -> Result<()> {
    let est = estimator(cfg)?;
    let x = read_syms(required(&p.input, "in")?)?;
    let given = p.given.iter().map(|g| read_syms(g)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&SymbolString> = given.iter().collect();
    let e = if refs.is_empty() { estimate_k(&x, &est)? } else { estimate_k_given(&x, &refs, &est)? };
    let class = cfg.thresholds.rate().classify(e.rate)?;
    let mut out = json!({
        "estimator": e.estimator,
        "n": e.n,
        "q": e.q,
        "bits": e.bits,
        "rate": e.rate,
        "class": class,
        "given": p.given,
    });
    if let Some(path) = &p.mi {
        let y = read_syms(path)?;
        out["mutual_info"] = json!({
            "with": path,
            "symmetric": p.symmetric,
            "bits": mutual_info_est(&x, &y, &est, p.symmetric)?,
        });
    }
    if let (Some(bp), Some(cp)) = (&p.cmi_b, &p.cmi_c) {
        let (b, c) = (read_syms(bp)?, read_syms(cp)?);
        out["cond_mutual_info"] = json!({ "b": bp, "c": cp, "bits": cond_mutual_info_est(&x, &b, &c, &est)? });
    }
    emit_json(cfg, out)
}

fn load_quadruple(manifest: &Option<PathBuf>) -> Result<Quadruple> {
    Ok(read_quadruple(required(manifest, "manifest")?)?.1)
}

fn nosig(cfg: &RunConfig, p: &NosigParams) -> Result<()> {
    let quad = load_quadruple(&p.manifest)?;
    let report = ns_report(&quad, &estimator(cfg)?, cfg.thresholds.ns)?;
    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["passes"] = report.passes().into();
    emit_json(cfg, v)
}

fn locality(cfg: &RunConfig, p: &LocalityParams) -> Result<()> {
    let quad = load_quadruple(&p.manifest)?;
    let lambda = match &p.lambda {
        Some(path) => read_syms(path)?,
        None => SymbolString::empty(2)?,
    };
    let verdict = locality_verdict(&quad, &lambda, &estimator(cfg)?, cfg.thresholds.locality)?;
    emit_json(cfg, serde_json::to_value(&verdict).expect("verdict serializes"))
}

fn oracle(cfg: &RunConfig, p: &OracleParams) -> Result<()> {
    if let Some(game) = p.game {
        let spec = game_spec(game, p.m)?;
        let result = game_value_exact(&spec, p.reps, cfg.jobs.max(1))?;
        return emit_json(cfg, serde_json::to_value(&result).expect("result serializes"));
    }
    if let Some(path) = &p.fine {
        let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let dist = Distribution::from_json(&text)?;
        let membership = fine_membership(&dist)?;
        return emit_json(cfg, serde_json::to_value(&membership).expect("membership serializes"));
    }
    if p.marginals {
        let pr = match &p.relax {
            Some(s) => PrConstraint::AtLeast(ratio::parse(s).map_err(CliError::Data)?),
            None => PrConstraint::Exact,
        };
        let (min, max) = marginal_extremes(&MarginalLp { pr, no_signaling: !p.no_ns })?;
        return emit_json(
            cfg,
            json!({
                "quantity": "P(x=0|a=0,b=0)",
                "relax": p.relax,
                "no_signaling": !p.no_ns,
                "min": ratio::to_string(&min),
                "max": ratio::to_string(&max),
            }),
        );
    }
    Err(CliError::Usage("oracle needs one of --game, --fine or --marginals".into()))
}

fn exp(cfg: &RunConfig, p: &ExpParams) -> Result<()> {
    let est = estimator(cfg)?;
    let (seeds, th) = (&cfg.seeds, &cfg.thresholds);
    let choice = strategy_choice(p.strategy, p.epsilon.unwrap_or(0.0), &p.fa, &p.fb);
    let mut report: ExperimentReport = match *required(&p.experiment, "experiment")? {
        ExpName::Theorem1 => run_theorem1(p.n, &est, seeds, &choice, th)?,
        ExpName::Theorem2 => run_theorem2(p.n, &est, seeds, &choice, th)?,
        ExpName::Theorem3 => run_theorem3(p.m, p.n, p.epsilon, &est, seeds, th)?,
        ExpName::Magic => run_magic_square(p.n, &est, seeds, th)?,
        ExpName::Locality => run_locality_suite(p.n, &est, seeds, th)?,
    };
    report.config = Some(serde_json::to_value(cfg).expect("config serializes"));
    log::info!("{} verdict: passed = {}", report.experiment, report.verdict.passed);
    write_to(cfg.out.as_deref(), report.to_jsonl().as_bytes())?;
    if let Some(path) = &p.csv {
        let file = fs::File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        report.write_csv(file, true)?;
    }
    Ok(())
}
