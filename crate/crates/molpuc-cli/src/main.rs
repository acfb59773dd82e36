//! Command-line front end: builds the CMV pipeline for a measure given as a
//! JSON config (or one of the bundled names) and runs the verification
//! suites, emitting machine-readable residual reports.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use molpuc::cmv::{Side, build_moment_matrix, required_moment_order};
use molpuc::factor::{block_lu, quasi_definiteness_scan};
use molpuc::families::{FamilyTag, families_from_factorizations, szego_from_families, verblunsky_extract};
use molpuc::flows::{FlowAxis, flow_integrate};
use molpuc::laurent::MatrixLaurentPoly;
use molpuc::measure::MatrixMeasure;
use molpuc::report::{CSV_HEADER, Report};
use molpuc::verify::{SUITES, SuiteOutcome, VerifyConfig, run_suite};

#[derive(Parser)]
#[command(name = "molpuc", about = "Matrix orthogonal Laurent polynomials on the unit circle: construction and identity verification", version)]
struct Cli {
    /// Measure: a bundled name (lebesgue, bernstein_szego, herm2, nonherm2)
    /// or a path to a measure JSON file
    #[arg(long, global = true, default_value = "herm2")]
    measure: String,
    /// Truncation size in blocks
    #[arg(long, global = true, default_value_t = 12)]
    blocks: usize,
    /// Tolerance override for every check (diagnostics; defaults are pinned)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for the sample-point generator
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Directory for report files (stdout summary otherwise)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print the trigonometric moments c_{-n}..c_n
    Moments {
        #[arg(long, default_value_t = 8)]
        n_max: i64,
    },
    /// Factorize both moment matrices and report reconstruction residuals
    Factorize,
    /// Export the four Laurent families and the Szegő polynomials; verify
    /// the bordered Schur-complement routes
    Polys,
    /// Export the Verblunsky table and verify the quasi-norm couplings
    Verblunsky,
    /// Run one verification suite
    Verify {
        #[arg(long)]
        suite: String,
    },
    /// Integrate a total lattice flow and compare with refactorization
    Flow {
        /// total:1 or total:2 (trajectories); partial axes like L1:0 run
        /// the t = 0 tangent check against the refactorization oracle
        #[arg(long, default_value = "total:1")]
        axis: String,
        #[arg(long, default_value_t = 0.3)]
        t_end: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = true)]
        compare_oracle: bool,
        /// JSON flow config overriding the flags:
        /// {"axis": {"side": "L|R", "j": 1|2, "a": int|"total"}, "t_end": f, "steps": n}
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Two-contour bilinear identities at coincident and offset times
    Bilinear,
    /// Discrete Darboux-type steps: transfer factors, discrete Lax, factor flips
    Darboux,
    /// Miwa shifts: kernel identities and scalar-shift relations
    Miwa,
    /// Rebuild the families from shifted/unshifted quasi-norm products
    Elteorema,
    /// Every applicable check for the measure
    All,
}

fn load_measure(spec: &str) -> Result<MatrixMeasure, String> {
    if let Some(mu) = molpuc::bundled::by_name(spec) {
        return Ok(mu);
    }
    let path = PathBuf::from(spec);
    if path.exists() {
        let text = std::fs::read_to_string(&path).map_err(|e| format!("reading {spec}: {e}"))?;
        return MatrixMeasure::from_json(&text).map_err(|e| format!("parsing {spec}: {e}"));
    }
    Err(format!(
        "measure '{spec}' is neither a bundled name ({}) nor an existing file",
        molpuc::bundled::BUNDLED_NAMES.join(", ")
    ))
}

fn parse_axis(axis: &str) -> Result<FlowAxis, String> {
    match axis {
        "total:1" | "total:H1" => return Ok(FlowAxis::Total { j: 1 }),
        "total:2" | "total:H2" => return Ok(FlowAxis::Total { j: 2 }),
        _ => {}
    }
    // partial axes: L1:0, R2:1, ...
    let bytes = axis.as_bytes();
    if bytes.len() >= 4 && (bytes[0] == b'L' || bytes[0] == b'R') && bytes[2] == b':' {
        let side = if bytes[0] == b'L' { Side::Left } else { Side::Right };
        let j: u8 = axis[1..2].parse().map_err(|_| format!("bad axis '{axis}'"))?;
        let a: usize = axis[3..].parse().map_err(|_| format!("bad axis '{axis}'"))?;
        return Ok(FlowAxis::Partial { side, j, a });
    }
    Err(format!("bad axis '{axis}'; expected total:1, total:2, or e.g. L1:0"))
}

#[derive(serde::Deserialize)]
struct FlowAxisFile {
    side: String,
    j: u8,
    a: serde_json::Value,
}

#[derive(serde::Deserialize)]
struct FlowConfigFile {
    axis: FlowAxisFile,
    t_end: f64,
    steps: usize,
}

impl FlowConfigFile {
    fn parse_axis(&self) -> Result<FlowAxis, String> {
        if self.axis.a == serde_json::json!("total") {
            return Ok(FlowAxis::Total { j: self.axis.j });
        }
        let a = self
            .axis
            .a
            .as_u64()
            .ok_or_else(|| "axis.a must be an integer or \"total\"".to_string())?;
        let side = match self.axis.side.as_str() {
            "L" => Side::Left,
            "R" => Side::Right,
            other => return Err(format!("axis.side must be L or R, got '{other}'")),
        };
        Ok(FlowAxis::Partial { side, j: self.axis.j, a: a as usize })
    }
}

fn emit_reports(cli: &Cli, reports: &[Report]) -> Result<(), String> {
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
        match cli.format {
            Format::Json => {
                for r in reports {
                    let path = dir.join(format!("{}-{}.json", r.check, r.measure));
                    std::fs::write(&path, r.to_json())
                        .map_err(|e| format!("writing {}: {e}", path.display()))?;
                }
            }
            Format::Csv => {
                for r in reports {
                    let path = dir.join(format!("{}-{}.csv", r.check, r.measure));
                    let mut text = String::from(CSV_HEADER);
                    text.push_str(&r.to_csv_rows());
                    std::fs::write(&path, text)
                        .map_err(|e| format!("writing {}: {e}", path.display()))?;
                }
            }
        }
    }
    for r in reports {
        let verdict = if r.pass { "pass" } else { "FAIL" };
        println!(
            "[{verdict}] {:<34} max_residual {:>10.3e}  tol {:>8.1e}  ({} items)",
            r.check,
            r.max_residual,
            r.tol,
            r.items.len()
        );
        if !r.pass {
            if let Some(item) = r.first_failure() {
                println!(
                    "        first failing identity: {} {:?} residual {:.3e}",
                    item.id, item.indices, item.residual
                );
            }
        }
    }
    Ok(())
}

fn matrix_json(m: &molpuc::CMat) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    serde_json::json!(rows)
}

fn poly_json(tag: &str, l: usize, p: &MatrixLaurentPoly) -> serde_json::Value {
    let coeffs: serde_json::Map<String, serde_json::Value> =
        p.coeffs().iter().map(|(k, c)| (k.to_string(), matrix_json(c))).collect();
    serde_json::json!({"family": tag, "l": l, "coeffs": coeffs})
}

fn run(cli: &Cli) -> Result<bool, String> {
    let measure = load_measure(&cli.measure)?;
    let cfg = VerifyConfig { blocks: cli.blocks, seed: cli.seed, tol: cli.tol };
    let started = Instant::now();
    let all_pass = std::cell::Cell::new(true);
    let run_named = |name: &str| -> Result<(), String> {
        let SuiteOutcome { reports, skipped } =
            run_suite(&measure, name, &cfg).map_err(|e| e.to_string())?;
        for s in skipped {
            println!("[skip] {name}: {s}");
        }
        all_pass.set(all_pass.get() && reports.iter().all(|r| r.pass));
        emit_reports(cli, &reports)
    };
    match &cli.command {
        Command::Moments { n_max } => {
            let ms = measure.moments(*n_max).map_err(|e| e.to_string())?;
            let mut obj = serde_json::Map::new();
            for n in -n_max..=*n_max {
                obj.insert(n.to_string(), matrix_json(ms.get(n).map_err(|e| e.to_string())?));
            }
            println!("{}", serde_json::to_string_pretty(&obj).unwrap());
        }
        Command::Factorize => {
            run_named("factorize")?;
            let ms = measure
                .moments(required_moment_order(cli.blocks))
                .map_err(|e| e.to_string())?;
            let gl = build_moment_matrix(&ms, Side::Left, cli.blocks).map_err(|e| e.to_string())?;
            let fl = block_lu(&gl, Side::Left).map_err(|e| e.to_string())?;
            for (v, cond) in quasi_definiteness_scan(&gl).iter().zip(fl.diag_conditions()) {
                println!(
                    "level {:>2}: |det| {:>12.5e}  sigma_min {:>12.5e}  cond(D) {:>9.3e}  {}",
                    v.level,
                    v.abs_det,
                    v.sigma_min,
                    cond,
                    if v.pass { "ok" } else { "DEGENERATE" }
                );
            }
        }
        Command::Polys => {
            run_named("polys")?;
            if let Some(dir) = &cli.out {
                let ms = measure
                    .moments(required_moment_order(cli.blocks))
                    .map_err(|e| e.to_string())?;
                let gl =
                    build_moment_matrix(&ms, Side::Left, cli.blocks).map_err(|e| e.to_string())?;
                let gr =
                    build_moment_matrix(&ms, Side::Right, cli.blocks).map_err(|e| e.to_string())?;
                let fl = block_lu(&gl, Side::Left).map_err(|e| e.to_string())?;
                let fr = block_lu(&gr, Side::Right).map_err(|e| e.to_string())?;
                let fam = families_from_factorizations(&fl, &fr).map_err(|e| e.to_string())?;
                let szego = szego_from_families(&fam, &fl, &fr).map_err(|e| e.to_string())?;
                let mut entries = Vec::new();
                for tag in [FamilyTag::Phi1L, FamilyTag::Phi2L, FamilyTag::Phi1R, FamilyTag::Phi2R] {
                    for (l, p) in fam.family(tag).iter().enumerate() {
                        entries.push(poly_json(&tag.to_string(), l, p));
                    }
                }
                for (tag, list) in
                    [("P1L", &szego.p1l), ("P2L", &szego.p2l), ("P1R", &szego.p1r), ("P2R", &szego.p2r)]
                {
                    for (l, p) in list.iter().enumerate() {
                        entries.push(poly_json(tag, l, p));
                    }
                }
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                let path = dir.join(format!("polys-{}.json", measure.fingerprint()));
                std::fs::write(&path, serde_json::to_string_pretty(&entries).unwrap())
                    .map_err(|e| e.to_string())?;
                println!("wrote {}", path.display());
            }
        }
        Command::Verblunsky => {
            run_named("verblunsky")?;
            let ms = measure
                .moments(required_moment_order(cli.blocks))
                .map_err(|e| e.to_string())?;
            let gl = build_moment_matrix(&ms, Side::Left, cli.blocks).map_err(|e| e.to_string())?;
            let gr = build_moment_matrix(&ms, Side::Right, cli.blocks).map_err(|e| e.to_string())?;
            let fl = block_lu(&gl, Side::Left).map_err(|e| e.to_string())?;
            let fr = block_lu(&gr, Side::Right).map_err(|e| e.to_string())?;
            let table = verblunsky_extract(&fl, &fr).map_err(|e| e.to_string())?;
            let mut entries = Vec::new();
            for k in 0..table.len() {
                entries.push(serde_json::json!({
                    "l": k,
                    "alpha1L": matrix_json(&table.a1l[k]),
                    "alpha1R": matrix_json(&table.a1r[k]),
                    "alpha2L_dagger": matrix_json(&table.a2l_dag[k]),
                    "alpha2R_dagger": matrix_json(&table.a2r_dag[k]),
                    "hL": matrix_json(&table.hl[k]),
                    "hR": matrix_json(&table.hr[k]),
                }));
            }
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                let path = dir.join(format!("verblunsky-{}.json", measure.fingerprint()));
                std::fs::write(&path, serde_json::to_string_pretty(&entries).unwrap())
                    .map_err(|e| e.to_string())?;
                println!("wrote {}", path.display());
            } else {
                println!("{}", serde_json::to_string_pretty(&entries).unwrap());
            }
        }
        Command::Verify { suite } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(format!("unknown suite '{suite}'; available: {}", SUITES.join(", ")));
            }
            run_named(suite)?;
        }
        Command::Flow { axis, t_end, steps, compare_oracle, config } => {
            let (parsed, t_end, steps) = if let Some(path) = config {
                let text =
                    std::fs::read_to_string(path).map_err(|e| format!("reading flow config: {e}"))?;
                let cfg: FlowConfigFile =
                    serde_json::from_str(&text).map_err(|e| format!("bad flow config: {e}"))?;
                (cfg.parse_axis()?, cfg.t_end, cfg.steps)
            } else {
                (parse_axis(axis)?, *t_end, *steps)
            };
            let parsed = match parsed {
                FlowAxis::Total { .. } => parsed,
                FlowAxis::Partial { .. } => {
                    // partial flows do not close on the lattice variables;
                    // score the t = 0 tangent against the oracle instead
                    use molpuc::flows::{fd_tangent, refactorized_table, tangent_gap, toeplitz_rhs};
                    let nb = cli.blocks.min(10);
                    let table = refactorized_table(
                        &measure,
                        &molpuc::flows::FlowTimes::zero(measure.block_size()),
                        nb,
                    )
                    .map_err(|e| e.to_string())?;
                    let rhs = toeplitz_rhs(&table, parsed).map_err(|e| e.to_string())?;
                    let fd = fd_tangent(&measure, parsed, 1e-4, nb).map_err(|e| e.to_string())?;
                    let gap = tangent_gap(&rhs, &fd, 1);
                    println!("partial axis tangent |lattice - FD(oracle)| = {gap:.3e}");
                    all_pass.set(all_pass.get() && gap < 5e-7);
                    run_named("flow")?;
                    return Ok(all_pass.get());
                }
            };
            let traj =
                flow_integrate(&measure, parsed, t_end, steps, cli.blocks.min(8), *compare_oracle)
                    .map_err(|e| e.to_string())?;
            if let Some(gap) = traj.oracle_gap {
                println!("endpoint oracle gap: {gap:.3e}");
                all_pass.set(all_pass.get() && gap < 1e-7);
            }
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                let mut csv = String::from("t,l,family,row,col,re,im\n");
                for (t, table) in traj.times.iter().zip(&traj.tables) {
                    for k in 0..table.len() {
                        for (fam, mat) in [
                            ("alpha1L", &table.a1l[k]),
                            ("alpha1R", &table.a1r[k]),
                            ("alpha2L_dagger", &table.a2l_dag[k]),
                            ("alpha2R_dagger", &table.a2r_dag[k]),
                            ("hL", &table.hl[k]),
                            ("hR", &table.hr[k]),
                        ] {
                            for i in 0..mat.rows() {
                                for j in 0..mat.cols() {
                                    csv.push_str(&format!(
                                        "{t},{k},{fam},{i},{j},{:e},{:e}\n",
                                        mat[(i, j)].re,
                                        mat[(i, j)].im
                                    ));
                                }
                            }
                        }
                    }
                }
                let path = dir.join(format!("trajectory-{}.csv", measure.fingerprint()));
                std::fs::write(&path, csv).map_err(|e| e.to_string())?;
                println!("wrote {}", path.display());
            }
            run_named("flow")?;
        }
        Command::Bilinear => run_named("bilinear")?,
        Command::Darboux => run_named("darboux")?,
        Command::Miwa => run_named("miwa")?,
        Command::Elteorema => run_named("elteorema")?,
        Command::All => {
            for name in SUITES {
                run_named(name)?;
            }
            for name in
                ["factorize", "polys", "verblunsky", "flow", "bilinear", "darboux", "miwa", "elteorema"]
            {
                run_named(name)?;
            }
            println!("total wall time: {:.1} s", started.elapsed().as_secs_f64());
        }
    }
    Ok(all_pass.get())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
