use std::fs::File;
use std::io::{self, BufWriter, Write};

use cocycle_core::dilation::{build_pre_hilbert, build_pseudo_dilation, extract_hp_params};
use cocycle_core::generator::{check_conditionally_cp, sample_conditional_positivity, CcpVerdict, GeneratorBlocks};
use cocycle_core::io::{self as fileio, complex_to_json, matrix_to_json, GeneratorFile};
use cocycle_core::ito::verify_ito_table_with;
use cocycle_core::linalg::{self, max_abs_diff, CMat};
use cocycle_core::random::{random_complex, seeded};
use cocycle_core::sim::{
    coherent_form_expm, coherent_form_ode, coherent_form_propagator, cocycle_residual_with_offset, gram_positivity_check,
    martingale_check, picard_solve, random_gram_config, simulate_transfer, CoherentFunction, MatrixElementTrace,
    NormalizationClass, TimeGrid, ToyFockModel,
};
use cocycle_core::{assemble_from_hp, Error, FormGenerator, HPParams, Result};
use serde_json::{json, Value};

use crate::{AssembleArgs, CheckCommand, DilateArgs, Reference, SimulateArgs, Solver, Source, ValidateArgs};

const PASS: u8 = 0;
const REJECT: u8 = 1;
const COCYCLE_TOL: f64 = 1e-13;
const DILATION_CCP_TOL: f64 = 1e-10;
const DILATION_IDENTITY_TOL: f64 = 1e-10;
const MARTINGALE_HORIZON: f64 = 1.0;
const MARTINGALE_STEPS: usize = 32;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotCompletelyPositive { .. } => 1,
        Error::ResidualTooLarge { .. } | Error::Numerical(_) => 3,
        Error::NonContraction { .. } => 4,
        _ => 2,
    }
}

fn finish(result: Result<u8>) -> u8 {
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn verdict_code(pass: bool) -> u8 {
    if pass {
        PASS
    } else {
        REJECT
    }
}

pub fn validate(args: &ValidateArgs) -> u8 {
    finish(run_validate(args))
}

fn run_validate(args: &ValidateArgs) -> Result<u8> {
    let file: GeneratorFile = fileio::read_json(&args.path)?;
    let blocks: GeneratorBlocks = file.to_blocks()?;
    let symmetry_residual = blocks.symmetry_residual();
    let (n, d) = (blocks.n, blocks.d);
    let gen = match FormGenerator::new(blocks) {
        Ok(g) => g,
        Err(e @ Error::FlatSymmetry { .. }) => {
            print_json(&json!({
                "n": n,
                "d": d,
                "symmetry_residual": symmetry_residual,
                "verdict": "rejected",
                "reason": e.to_string(),
            }))?;
            return Ok(REJECT);
        }
        Err(e) => return Err(e),
    };
    let verdict = check_conditionally_cp(&gen, args.tol)?;
    let normalization = martingale_check(&gen, MARTINGALE_HORIZON, MARTINGALE_STEPS)?;
    let sampled = if args.trials > 0 {
        Some(sample_conditional_positivity(&gen, args.trials, args.seed)?.min_value)
    } else {
        None
    };
    let (min_eig, max_abs_eig) = match &verdict {
        CcpVerdict::Accepted { min_eig, max_abs_eig } | CcpVerdict::Rejected { min_eig, max_abs_eig, .. } => {
            (*min_eig, *max_abs_eig)
        }
    };
    print_json(&json!({
        "n": n,
        "d": d,
        "symmetry_residual": symmetry_residual,
        "min_eig": min_eig,
        "max_abs_eig": max_abs_eig,
        "tol": args.tol,
        "verdict": if verdict.accepted() { "accepted" } else { "rejected" },
        "normalization": normalization.class.as_str(),
        "normalization_deviation": normalization.deviation,
        "sampled_min": sampled,
    }))?;
    if let CcpVerdict::Rejected { witness, .. } = &verdict {
        let family: Vec<Value> = witness
            .iter()
            .map(|w| {
                json!({
                    "x": matrix_to_json(&w.x),
                    "eta": w.eta.iter().copied().map(complex_to_json).collect::<Vec<_>>(),
                })
            })
            .collect();
        eprintln!("{}", serde_json::to_string(&json!({ "min_eig": min_eig, "witness": family }))?);
    }
    Ok(verdict_code(verdict.accepted()))
}

pub fn dilate(args: &DilateArgs) -> u8 {
    finish(run_dilate(args))
}

fn run_dilate(args: &DilateArgs) -> Result<u8> {
    let gen = fileio::load_generator(&args.path)?;
    let verdict = check_conditionally_cp(&gen, DILATION_CCP_TOL)?;
    if !verdict.accepted() {
        eprintln!("error: generator is not conditionally completely positive (min eig {:.6e})", verdict.min_eig());
        return Ok(REJECT);
    }
    let ex = extract_hp_params(&gen, args.tol)?;
    let pre = build_pre_hilbert(&ex.params, gen.corner())?;
    let scale = gen.blocks().max_abs().max(1.0);
    let pre_report = pre.ensure_valid(DILATION_IDENTITY_TOL * scale)?;
    let pseudo = build_pseudo_dilation(&pre, &gen)?;
    let pseudo_report = pseudo.report();
    fileio::save_params(&args.output, &ex.params)?;
    print_json(&json!({
        "n": gen.n(),
        "d": gen.d(),
        "r": ex.params.r(),
        "exchange_rank": ex.exchange_rank,
        "scalar_rank": ex.scalar_rank,
        "roundtrip_residual": ex.residual,
        "pre_hilbert": {
            "representation": pre_report.representation,
            "derivation": pre_report.derivation,
            "second_order": pre_report.second_order,
            "adjoint": pre_report.adjoint,
        },
        "pseudo_hilbert": {
            "multiplicativity": pseudo_report.multiplicativity,
            "lflat": pseudo_report.lflat,
            "generator": pseudo_report.generator,
        },
    }))?;
    Ok(PASS)
}

pub fn assemble(args: &AssembleArgs) -> u8 {
    finish(run_assemble(args))
}

fn run_assemble(args: &AssembleArgs) -> Result<u8> {
    let params = fileio::load_params(&args.path)?;
    let gen = assemble_from_hp(&params)?;
    fileio::save_generator(&args.output, &gen)?;
    Ok(PASS)
}

pub fn simulate(args: &SimulateArgs) -> u8 {
    finish(run_simulate(args))
}

fn coherent_or_vacuum(path: Option<&std::path::Path>, grid: TimeGrid, d: usize) -> Result<CoherentFunction> {
    match path {
        Some(p) => {
            let f = fileio::load_coherent(p, grid)?;
            f.ensure_compatible(&grid, d)?;
            Ok(f)
        }
        None => Ok(CoherentFunction::vacuum(grid, d)),
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<u8> {
    let params = fileio::load_params(&args.params)?;
    let (n, d) = (params.n(), params.d());
    let x = match &args.observable {
        Some(p) => fileio::load_observable(p, n)?,
        None => linalg::identity(n),
    };
    let grid = TimeGrid::new(args.horizon, args.steps)?;
    let f = coherent_or_vacuum(args.f.as_deref(), grid, d)?;
    let h = coherent_or_vacuum(args.h.as_deref(), grid, d)?;
    let (trace, errors) = if args.horizon == 0.0 {
        let single = MatrixElementTrace {
            times: vec![0.0],
            values: vec![x.clone()],
        };
        let errors = args.reference.map(|_| vec![0.0]);
        (single, errors)
    } else {
        let trace = solve(args.solver, &params, &x, &f, &h, args.iters)?;
        let errors = match args.reference {
            Some(Reference::Expm) => {
                let gen = assemble_from_hp(&params)?;
                let reference = coherent_form_expm(&gen, &x, &f, &h)?;
                Some(trace.values.iter().zip(&reference.values).map(|(a, b)| max_abs_diff(a, b)).collect())
            }
            None => None,
        };
        (trace, errors)
    };
    match &args.output {
        Some(path) => fileio::write_trace(BufWriter::new(File::create(path)?), &trace, errors.as_deref())?,
        None => fileio::write_trace(io::stdout().lock(), &trace, errors.as_deref())?,
    }
    Ok(PASS)
}

fn solve(
    solver: Solver,
    params: &HPParams,
    x: &CMat,
    f: &CoherentFunction,
    h: &CoherentFunction,
    iters: usize,
) -> Result<MatrixElementTrace> {
    match solver {
        Solver::Transfer => simulate_transfer(&ToyFockModel::new(params.clone(), *f.grid())?, x, f, h),
        Solver::Ode => coherent_form_ode(&assemble_from_hp(params)?, x, f, h),
        Solver::Picard => Ok(picard_solve(params, x, f, h, iters)?.trace),
        Solver::Expm => coherent_form_expm(&assemble_from_hp(params)?, x, f, h),
    }
}

pub fn check(cmd: &CheckCommand) -> u8 {
    finish(run_check(cmd))
}

enum Loaded {
    Params(HPParams),
    Generator(FormGenerator),
}

/// Final-time propagator: toy Fock transfer for coefficients, RK4 for a generator.
enum Propagator {
    Transfer(ToyFockModel),
    Ode(FormGenerator),
}

impl Propagator {
    fn dims(&self) -> (usize, usize) {
        match self {
            Self::Transfer(m) => (m.params().n(), m.params().d()),
            Self::Ode(g) => (g.n(), g.d()),
        }
    }

    fn apply(&self, f: &CoherentFunction, h: &CoherentFunction) -> Result<CMat> {
        match self {
            Self::Transfer(m) => m.transfer_product(f, h, 0, m.grid().steps()),
            Self::Ode(g) => coherent_form_propagator(g, f, h),
        }
    }
}

fn load_source(source: &Source) -> Result<Loaded> {
    match (&source.params, &source.generator) {
        (Some(p), None) => Ok(Loaded::Params(fileio::load_params(p)?)),
        (None, Some(g)) => Ok(Loaded::Generator(fileio::load_generator(g)?)),
        _ => Err(Error::InvalidArgument("give exactly one of --params or --generator".into())),
    }
}

fn run_check(cmd: &CheckCommand) -> Result<u8> {
    match cmd {
        CheckCommand::ItoTable { d, fault } => {
            let corrupt = fault.then_some((0, 1, 1, 1));
            let rep = verify_ito_table_with(*d, corrupt)?;
            print_json(&json!({
                "check": "ito-table",
                "d": rep.d,
                "checked": rep.checked,
                "violations": rep.violations,
                "pass": rep.passed(),
            }))?;
            Ok(verdict_code(rep.passed()))
        }
        CheckCommand::Cocycle {
            params,
            horizon,
            steps,
            seed,
            amplitude,
            fault,
        } => {
            if *steps < 2 || steps % 2 != 0 {
                return Err(Error::InvalidArgument(format!("cocycle check needs an even step count >= 2, got {steps}")));
            }
            let params = fileio::load_params(params)?;
            let d = params.d();
            let grid = TimeGrid::new(*horizon, *steps)?;
            let mut rng = seeded(*seed);
            let mut draw = || -> Result<CoherentFunction> {
                let values = (0..*steps)
                    .map(|_| (0..d).map(|_| random_complex(&mut rng).scale(*amplitude)).collect())
                    .collect();
                CoherentFunction::new(grid, d, values)
            };
            let f = draw()?;
            let h = draw()?;
            let model = ToyFockModel::new(params, grid)?;
            let half = steps / 2;
            let residual = cocycle_residual_with_offset(&model, &f, &h, half, half, usize::from(*fault))?;
            let pass = residual <= COCYCLE_TOL;
            print_json(&json!({
                "check": "cocycle",
                "s": half,
                "r": half,
                "residual": residual,
                "tol": COCYCLE_TOL,
                "fault": fault,
                "pass": pass,
            }))?;
            Ok(verdict_code(pass))
        }
        CheckCommand::Martingale { source, horizon, steps } => {
            let gen = match load_source(source)? {
                Loaded::Params(p) => assemble_from_hp(&p)?,
                Loaded::Generator(g) => g,
            };
            let rep = martingale_check(&gen, *horizon, *steps)?;
            let pass = rep.class != NormalizationClass::Neither;
            print_json(&json!({
                "check": "martingale",
                "class": rep.class.as_str(),
                "deviation": rep.deviation,
                "corner_max_eig": rep.corner_max_eig,
                "final_eigenvalues": rep.eigenvalues.last(),
                "pass": pass,
            }))?;
            Ok(verdict_code(pass))
        }
        CheckCommand::Gram {
            source,
            horizon,
            steps,
            configs,
            seed,
            blocks,
            functions,
            rank,
            amplitude,
            tol,
        } => {
            if *configs == 0 {
                return Err(Error::InvalidArgument("gram check needs at least one configuration".into()));
            }
            let grid = TimeGrid::new(*horizon, *steps)?;
            let prop = match load_source(source)? {
                Loaded::Params(p) => Propagator::Transfer(ToyFockModel::new(p, grid)?),
                Loaded::Generator(g) => Propagator::Ode(g),
            };
            let (n, d) = prop.dims();
            let mut worst = (f64::INFINITY, *seed);
            for k in 0..*configs as u64 {
                let mut rng = seeded(seed + k);
                let config = random_gram_config(&mut rng, n, d, grid, *blocks, *functions, *rank, *amplitude)?;
                let rep = gram_positivity_check(&config, |a, b| prop.apply(a, b))?;
                if rep.min_eig < worst.0 {
                    worst = (rep.min_eig, seed + k);
                }
            }
            let pass = worst.0 >= -tol;
            print_json(&json!({
                "check": "gram",
                "configs": configs,
                "min_eig": worst.0,
                "worst_seed": worst.1,
                "tol": tol,
                "pass": pass,
            }))?;
            Ok(verdict_code(pass))
        }
    }
}
