use std::path::Path;

use anyhow::{Context, Result, bail};
use rach_core::design::{self, BlockDesign, ExtensionBudget};
use rach_core::search::{self, SearchOptions};
use rach_core::sim::Source;
use rach_core::verify::{self, Verdict};
use rach_core::{Codebook, Optimality};

use crate::artifact::{Provenance, write_atomic};
use crate::report::{Curve, sim_csv};
use crate::{
    CodeInput, Command, Construct, DesignCmd, Mode, SearchArgs, SimInput, SimulateArgs, Status, TableArgs, VerifyArgs,
    figure,
};

pub fn run(command: Command) -> Result<Status> {
    let prov = Provenance::from_env();
    match command {
        Command::Construct(c) => construct(c, &prov),
        Command::Design(d) => design_cmd(d, &prov),
        Command::Verify(v) => verify_cmd(v),
        Command::Simulate(s) => simulate(s, &prov),
        Command::Search(s) => search_cmd(s, &prov),
        Command::Table(t) => table(t, &prov),
        Command::Figure(f) => figure::run(f.name, f.trials, f.seed, f.points, &f.out_dir, &prov),
    }
}

fn load_code(path: &Path) -> Result<Codebook> {
    Codebook::load(path).with_context(|| format!("--code {}", path.display()))
}

fn load_design_code(path: &Path) -> Result<Codebook> {
    let d = design::load_block_design(path).with_context(|| format!("--design {}", path.display()))?;
    Ok(design::design_to_codebook(&d)?)
}

fn input_code(code: &Option<std::path::PathBuf>, design: &Option<std::path::PathBuf>) -> Result<Codebook> {
    match (code, design) {
        (Some(p), _) => load_code(p),
        (None, Some(p)) => load_design_code(p),
        (None, None) => bail!("one of --code or --design is required"),
    }
}

fn write_code(path: &Path, code: &Codebook, prov: &Provenance, extra: &[String]) -> Result<()> {
    let mut header = prov.lines();
    header.extend_from_slice(extra);
    write_atomic(path, &code.to_text(&header))
}

fn write_design(path: &Path, d: &BlockDesign, prov: &Provenance) -> Result<()> {
    write_atomic(path, &(prov.comment_block(&[]) + &d.to_text()))
}

fn construct(c: Construct, prov: &Provenance) -> Result<Status> {
    match c {
        Construct::Cw { n, k, cap, out } => {
            let code = design::enumerate_constant_weight(n, k, cap)?;
            write_code(&out, &code, prov, &[])?;
            println!("constant-weight n={n} k={k}: {} patterns", code.size());
        }
        Construct::Sts { n, codebook, out } => {
            let d = design::steiner_triple(n)?;
            if codebook {
                write_code(&out, &design::design_to_codebook(&d)?, prov, &[])?;
            } else {
                write_design(&out, &d, prov)?;
            }
            println!("S(2,3,{n}): {} blocks", d.blocks().len());
        }
        Construct::Busschbach { input, budget, out } => {
            let code = load_code(&input)?;
            let ext =
                design::busschbach_extend(&code, ExtensionBudget { max_candidates: budget, ..Default::default() })?;
            let bound = 3 * (code.size() + 1) + 1;
            let extra = vec![
                format!("lifted from n={} N={}", code.n(), code.size()),
                format!("extra 111a patterns: {}", ext.extra),
                format!("bound 3(N+1)+1 = {bound}"),
            ];
            write_code(&out, &ext.code, prov, &extra)?;
            println!("n={} N={} (extra patterns t={}, bound {bound})", ext.code.n(), ext.code.size(), ext.extra);
        }
    }
    Ok(Status::Ok)
}

fn design_cmd(d: DesignCmd, prov: &Provenance) -> Result<Status> {
    match d {
        DesignCmd::Verify { file } => {
            let design = design::load_block_design(&file).with_context(|| file.display().to_string())?;
            let report = design::verify_steiner(&design);
            let expected = design.steiner_block_count();
            println!("{design}; a Steiner system needs {expected}");
            match report.violation {
                None => {
                    println!("Steiner property holds");
                    Ok(Status::Ok)
                }
                Some((subset, count)) => {
                    println!("Steiner property fails: {subset:?} lies in {count} blocks");
                    Ok(Status::Fails)
                }
            }
        }
        DesignCmd::Codebook { file, out } => {
            let code = load_design_code(&file)?;
            write_code(&out, &code, prov, &[])?;
            println!("n={} N={}", code.n(), code.size());
            Ok(Status::Ok)
        }
        DesignCmd::Bundled { name, out } => {
            let d = design::bundled::by_name(&name)
                .with_context(|| format!("available: {}", design::bundled::NAMES.join(", ")))?;
            write_design(&out, &d, prov)?;
            println!("{d}");
            Ok(Status::Ok)
        }
    }
}

fn verdict_status(v: Verdict) -> Status {
    match v {
        Verdict::Holds => Status::Ok,
        Verdict::Fails => Status::Fails,
        Verdict::Indeterminate => Status::Indeterminate,
    }
}

fn show_witness(code: &Codebook, w: &[usize]) -> String {
    let pats: Vec<String> = w.iter().map(|&i| code.patterns()[i].to_string()).collect();
    format!("{w:?} = {{{}}}", pats.join(", "))
}

fn verify_cmd(v: VerifyArgs) -> Result<Status> {
    let CodeInput { code, design } = &v.input;
    let code = input_code(code, design)?;
    let m = v.m;
    let (name, verdict, witness, subsets) = match v.mode {
        Mode::Ic => {
            let r = verify::is_m_ic(&code, m, v.budget)?;
            (format!("{m}-IC"), r.verdict, r.witness, r.subsets)
        }
        Mode::Superimposed => {
            let r = verify::is_superimposed(&code, m, v.budget)?;
            (format!("{m}-superimposed"), r.verdict, r.witness, r.subsets)
        }
        Mode::Coverfree => {
            let r = verify::is_covering_free(&code, m, v.budget)?;
            (format!("{m}-cover-free"), r.verdict, r.witness, r.subsets)
        }
        Mode::Rc => {
            let r = verify::rc_condition(&code);
            println!("max pairwise intersection: {}", r.max_intersection);
            println!(
                "capacity C(n,2) = {}; N = {} {} capacity{}",
                r.capacity,
                code.size(),
                if r.below_capacity { "<" } else { ">=" },
                if r.bound_applies { "" } else { " (bound needs column weights >= 2)" }
            );
            println!("RC condition {}", if r.holds { "holds" } else { "fails" });
            return Ok(if r.holds { Status::Ok } else { Status::Fails });
        }
        Mode::Prop1 => {
            match verify::prop1_order(&code)? {
                Some(order) => println!("guaranteed superimposed order: {order}"),
                None => println!("guaranteed superimposed order: inapplicable (disjoint supports)"),
            }
            return Ok(Status::Ok);
        }
    };
    match verdict {
        Verdict::Holds => println!("{name}: holds ({subsets} subsets checked)"),
        Verdict::Fails => {
            println!("{name}: fails");
            if let Some(w) = &witness {
                println!("witness: {}", show_witness(&code, w));
            }
        }
        Verdict::Indeterminate => {
            println!("{name}: indeterminate ({subsets} subsets needed, budget {})", v.budget)
        }
    }
    Ok(verdict_status(verdict))
}

fn simulate(s: SimulateArgs, prov: &Provenance) -> Result<Status> {
    let SimInput { code, design, random } = &s.input;
    let source = match random {
        Some((n, k)) => {
            if *k == 0 || k > n {
                bail!("--random: need 1 <= k <= n, found n={n} k={k}");
            }
            Source::Random { n: *n, k: *k }
        }
        None => Source::Deterministic(input_code(code, design)?),
    };
    let curve = Curve::run(&source, &s.lambda, s.trials, s.seed)?;
    write_atomic(&s.out, &sim_csv(&prov.with_seed(s.seed), &[curve]))?;
    Ok(Status::Ok)
}

fn search_cmd(s: SearchArgs, prov: &Provenance) -> Result<Status> {
    let opts = SearchOptions { budget_nodes: s.budget_nodes, symmetry: !s.no_symmetry, record_history: false };
    let out = search::search_max_3ic(s.n, &opts)?;
    let check = verify::is_m_ic(&out.code, 3, verify::DEFAULT_BUDGET)?;
    if !check.is_m_ic() {
        bail!("internal error: search result is not 3-IC");
    }
    let extra = vec![
        out.optimality.as_str().to_string(),
        format!("nodes: {}", out.nodes),
        format!("symmetry: {}", if s.no_symmetry { "off" } else { "on" }),
    ];
    write_code(&s.out, &out.code, prov, &extra)?;
    println!("n={} N={} {} nodes={}", s.n, out.code.size(), out.optimality.as_str(), out.nodes);
    eprintln!("wall time: {:.3}s", out.elapsed.as_secs_f64());
    Ok(match out.optimality {
        Optimality::Proven => Status::Ok,
        Optimality::LowerBound => Status::Indeterminate,
    })
}

fn table(t: TableArgs, prov: &Provenance) -> Result<Status> {
    let opts = SearchOptions { budget_nodes: t.budget_nodes, ..SearchOptions::default() };
    let rows = search::table_bounds(t.n_max, &opts)?;
    let mut csv = prov.comment_block(&[]);
    csv.push_str("n,found,status,nodes,published,construction_bound,lifted\n");
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut all_proven = true;
    for r in &rows {
        all_proven &= r.optimality == Optimality::Proven;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.found,
            r.optimality.as_str(),
            r.nodes,
            r.published.map(|p| p.to_string()).unwrap_or_default(),
            opt(r.construction_bound),
            opt(r.lifted),
        ));
        println!(
            "n={:>2} N={:>3} {:<11} published {}",
            r.n,
            r.found,
            r.optimality.as_str(),
            r.published.map(|p| p.to_string()).unwrap_or_else(|| "-".into())
        );
    }
    write_atomic(&t.out, &csv)?;
    Ok(if all_proven { Status::Ok } else { Status::Indeterminate })
}
