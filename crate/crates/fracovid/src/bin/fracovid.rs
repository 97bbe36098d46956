//! Command-line front-end: simulate, fit, sensitivity, control, report.
//!
//! Every command reads one TOML config (see `configs/` in the repository)
//! and writes CSV plus structured text files into the output directory.
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error,
//! 3 data or IO error. Set `RUST_LOG=debug` for iteration logs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracovid::config::RunConfig;
use fracovid::data::load_case_data;
use fracovid::error::{Error, Result};
use fracovid::fit::{fit, predicted_observable, simulate_window};
use fracovid::focp::{
    forward_backward_sweep, ControlSchedule, Scenario, SweepResult, ADJOINT_NAMES, N_ADJOINTS,
};
use fracovid::model::{
    basic_reproduction_number, COMPARTMENT_NAMES, N_COMPARTMENTS,
};
use fracovid::report::EffectivenessReport;
use fracovid::solver::{pece_solve, FractionalOrder, TimeGrid, Trajectory};

#[derive(Parser)]
#[command(
    name = "fracovid",
    about = "Fractional-order SEIPAHRF epidemic toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Derivative orders, overriding `simulation.alphas`.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the uncontrolled model and write the trajectory.
    Simulate(CommonArgs),
    /// Fit the derivative order and reporting scale to case data.
    Fit(CommonArgs),
    /// Sweep the sensitivity indices of R0 over the derivative order.
    Sensitivity {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write a matplotlib script for the emitted CSVs.
        #[arg(long)]
        emit_plot_script: bool,
    },
    /// Solve the optimal control problem by forward-backward sweep.
    Control {
        #[command(flatten)]
        common: CommonArgs,
        /// Vaccination only: force m = 0.
        #[arg(long, conflicts_with = "only_m")]
        only_v: bool,
        /// Preventive measures only: force v = 0.
        #[arg(long)]
        only_m: bool,
    },
    /// Summarize cost-effectiveness from prior `control` outputs.
    Report(CommonArgs),
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(common) => cmd_simulate(common),
        Command::Fit(common) => cmd_fit(common),
        Command::Sensitivity {
            common,
            emit_plot_script,
        } => cmd_sensitivity(common, *emit_plot_script),
        Command::Control {
            common,
            only_v,
            only_m,
        } => cmd_control(common, scenario_for(*only_v, *only_m)),
        Command::Report(common) => cmd_report(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn scenario_for(only_v: bool, only_m: bool) -> Scenario {
    match (only_v, only_m) {
        (true, _) => Scenario::OnlyVaccination,
        (_, true) => Scenario::OnlyPreventive,
        _ => Scenario::BothControls,
    }
}

fn load(common: &CommonArgs) -> Result<(RunConfig, Vec<f64>)> {
    let config = RunConfig::load(&common.config)?;
    let alphas = match &common.alpha {
        Some(list) if !list.is_empty() => {
            for &alpha in list {
                FractionalOrder::new(alpha).map_err(|e| Error::Config(e.to_string()))?;
            }
            list.clone()
        }
        _ => config.simulation.alphas.clone(),
    };
    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    Ok((config, alphas))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn alpha_tag(alpha: f64) -> String {
    format!("{alpha}").replace('.', "_")
}

// ---------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------

fn cmd_simulate(common: &CommonArgs) -> Result<()> {
    let (config, alphas) = load(common)?;
    let grid = config.grid()?;
    let schedule = config.contact_schedule()?;
    let initial = config.initial_state()?;
    let y0 = initial.to_array();
    let initial_total: f64 = y0.iter().sum();

    let summary_path = common.out.join("simulate_summary.txt");
    let mut summary = create(&summary_path)?;
    writeln!(summary, "command: simulate").map_err(|e| Error::io(&summary_path, e))?;

    for &alpha in &alphas {
        let order = FractionalOrder::new(alpha)?;
        let rates = config.model.effective_rates(order, config.simulation.variant);
        let trajectory = pece_solve(
            |t, y, dydt| rates.rhs_uncontrolled(y, schedule.level_at(t), dydt),
            &y0,
            order,
            grid,
        )?;

        let csv_path = common.out.join(format!("trajectory_alpha_{}.csv", alpha_tag(alpha)));
        let mut csv = create(&csv_path)?;
        trajectory
            .write_csv(&COMPARTMENT_NAMES, &mut csv)
            .map_err(|e| Error::io(&csv_path, e))?;

        let max_deviation = (0..trajectory.n_nodes())
            .map(|j| (trajectory.row(j).iter().sum::<f64>() - initial_total).abs())
            .fold(0.0f64, f64::max);
        let r0 = basic_reproduction_number(&config.model, order);
        writeln!(
            summary,
            "alpha = {alpha}: R0 = {r0:.6}, max |sum - sum(0)| = {max_deviation:.6e} ({:.3e} of population), file = {}",
            max_deviation / config.model.population,
            csv_path.display()
        )
        .map_err(|e| Error::io(&summary_path, e))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------

fn cmd_fit(common: &CommonArgs) -> Result<()> {
    let (config, _) = load(common)?;
    let (ctx, settings, data_path) = config.fit_context()?;
    let data = load_case_data(&data_path)?;

    let classical = fit(&data, &ctx, &settings, Some(1.0))?;
    let fractional = fit(&data, &ctx, &settings, None)?;

    let observed = data.smoothed_window(ctx.window.start, ctx.window.end)?;
    let data_norm: f64 = observed.iter().map(|o| o * o).sum::<f64>().sqrt();

    let report_path = common.out.join("fit_report.txt");
    let mut report = create(&report_path)?;
    let io_err = |e: std::io::Error| Error::io(&report_path, e);
    writeln!(report, "fit window: {} .. {}", ctx.window.start, ctx.window.end).map_err(io_err)?;
    writeln!(report, "smoothed data l2 norm: {data_norm:.6}").map_err(io_err)?;
    writeln!(report, "alpha,s,absolute_error,relative_error_percent,converged").map_err(io_err)?;
    for row in [&classical, &fractional] {
        writeln!(
            report,
            "{:.6},{:.6},{:.4},{:.4},{}",
            row.alpha,
            row.s,
            row.absolute_error,
            100.0 * row.relative_error,
            row.converged
        )
        .map_err(io_err)?;
    }

    // Overlay CSV at the overall best fit.
    let trajectory = simulate_window(fractional.alpha, &ctx)?;
    let model = predicted_observable(&trajectory, fractional.s);
    let overlay_path = common.out.join("fit_overlay.csv");
    let mut overlay = create(&overlay_path)?;
    let io_err = |e: std::io::Error| Error::io(&overlay_path, e);
    writeln!(overlay, "date,data,smoothed,model").map_err(io_err)?;
    let window_offset = (ctx.window.start - data.first_date()).num_days() as usize;
    for (day, model_value) in model.iter().enumerate() {
        let idx = window_offset + day;
        writeln!(
            overlay,
            "{},{},{},{}",
            data.dates()[idx],
            data.daily()[idx],
            data.smoothed()[idx],
            model_value
        )
        .map_err(io_err)?;
    }

    log::info!(
        "fit: classical rel {:.4}%, fractional alpha {:.4} rel {:.4}%",
        100.0 * classical.relative_error,
        fractional.alpha,
        100.0 * fractional.relative_error
    );
    Ok(())
}

// ---------------------------------------------------------------------
// sensitivity
// ---------------------------------------------------------------------

fn cmd_sensitivity(common: &CommonArgs, emit_plot_script: bool) -> Result<()> {
    let (config, alpha_override) = load(common)?;
    let section = config.sensitivity_section()?;
    let grid = match &common.alpha {
        Some(_) => alpha_override,
        None => section.alpha_grid.clone(),
    };

    let mut written = Vec::new();
    for name in &section.parameters {
        let param: fracovid::model::ParamName = name.parse()?;
        let report = fracovid::sensitivity::sensitivity_vs_alpha(param, &config.model, &grid)?;
        let path = common.out.join(format!("sensitivity_{name}.csv"));
        let mut w = create(&path)?;
        report.write_csv(&mut w).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    // Elasticity with respect to the derivative order itself.
    let path = common.out.join("sensitivity_alpha_order.csv");
    let mut w = create(&path)?;
    let io_err = |e: std::io::Error| Error::io(&path, e);
    writeln!(w, "alpha,index").map_err(io_err)?;
    for &alpha in &grid {
        let order = FractionalOrder::new(alpha)?;
        let ups = fracovid::sensitivity::r0_alpha_sensitivity(&config.model, order)?;
        writeln!(w, "{alpha},{ups}").map_err(io_err)?;
    }
    written.push(path);

    if emit_plot_script {
        let path = common.out.join("plot_sensitivity.py");
        let mut w = create(&path)?;
        let io_err = |e: std::io::Error| Error::io(&path, e);
        writeln!(w, "#!/usr/bin/env python3").map_err(io_err)?;
        writeln!(w, "import matplotlib.pyplot as plt").map_err(io_err)?;
        writeln!(w, "import csv, pathlib").map_err(io_err)?;
        writeln!(w, "here = pathlib.Path(__file__).parent").map_err(io_err)?;
        writeln!(w, "for f in sorted(here.glob('sensitivity_*.csv')):").map_err(io_err)?;
        writeln!(w, "    rows = list(csv.DictReader(open(f)))").map_err(io_err)?;
        writeln!(
            w,
            "    plt.plot([float(r['alpha']) for r in rows], [float(r['index']) for r in rows], label=f.stem)"
        )
        .map_err(io_err)?;
        writeln!(w, "plt.xlabel('alpha'); plt.ylabel('sensitivity index')").map_err(io_err)?;
        writeln!(w, "plt.legend(); plt.savefig(here / 'sensitivity.png', dpi=150)").map_err(io_err)?;
    }

    log::info!("sensitivity: wrote {} files", written.len());
    Ok(())
}

// ---------------------------------------------------------------------
// control
// ---------------------------------------------------------------------

fn sweep_suffix(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::BothControls => "",
        Scenario::OnlyVaccination => "_only_v",
        Scenario::OnlyPreventive => "_only_m",
    }
}

fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = create(path)?;
    let io_err = |e: std::io::Error| Error::io(path, e);
    let mut header = String::from("t");
    for name in COMPARTMENT_NAMES {
        header.push(',');
        header.push_str(name);
    }
    for name in ADJOINT_NAMES {
        header.push(',');
        header.push_str(name);
    }
    header.push_str(",v,m");
    writeln!(w, "{header}").map_err(io_err)?;
    let grid = result.states.grid();
    for j in 0..result.states.n_nodes() {
        write!(w, "{}", grid.node(j)).map_err(io_err)?;
        for value in result.states.row(j) {
            write!(w, ",{value}").map_err(io_err)?;
        }
        for value in result.adjoints.row(j) {
            write!(w, ",{value}").map_err(io_err)?;
        }
        writeln!(w, ",{},{}", result.controls.v[j], result.controls.m[j]).map_err(io_err)?;
    }
    Ok(())
}

fn cmd_control(common: &CommonArgs, scenario: Scenario) -> Result<()> {
    let (config, alphas) = load(common)?;
    let section = config.control_section()?;
    let sweep_config = config.sweep_config(section);
    let grid = config.grid()?;
    let initial = config.initial_state()?;
    let suffix = sweep_suffix(scenario);

    let mut failures = Vec::new();
    for &alpha in &alphas {
        let order = FractionalOrder::new(alpha)?;
        let result = forward_backward_sweep(
            &config.model,
            order,
            &initial,
            grid,
            &sweep_config,
            None,
            scenario,
        )?;

        let tag = alpha_tag(alpha);
        write_sweep_csv(
            &common.out.join(format!("control_alpha_{tag}{suffix}.csv")),
            &result,
        )?;

        // Zero-control baseline for the same order, for comparisons.
        let rates = config.model.alpha_rates(order);
        let uncontrolled = pece_solve(
            |_t, y, dydt| rates.rhs_uncontrolled(y, 0.0, dydt),
            &initial.to_array(),
            order,
            grid,
        )?;
        let baseline_path = common.out.join(format!("uncontrolled_alpha_{tag}.csv"));
        let mut w = create(&baseline_path)?;
        uncontrolled
            .write_csv(&COMPARTMENT_NAMES, &mut w)
            .map_err(|e| Error::io(&baseline_path, e))?;

        let summary_path = common
            .out
            .join(format!("control_summary_alpha_{tag}{suffix}.txt"));
        let mut summary = create(&summary_path)?;
        let io_err = |e: std::io::Error| Error::io(&summary_path, e);
        writeln!(summary, "alpha: {alpha}").map_err(io_err)?;
        writeln!(summary, "scenario: {scenario:?}").map_err(io_err)?;
        writeln!(summary, "J: {}", result.cost).map_err(io_err)?;
        writeln!(summary, "iterations: {}", result.iterations).map_err(io_err)?;
        writeln!(summary, "converged: {}", result.converged).map_err(io_err)?;
        writeln!(summary, "final_relative_change: {:.6e}", result.final_change)
            .map_err(io_err)?;

        if !result.converged {
            failures.push((alpha, result.final_change));
        }
    }

    if let Some(&(alpha, residual)) = failures.first() {
        eprintln!("sweep at alpha = {alpha} stopped at residual {residual:.3e}");
        return Err(Error::NotConverged {
            context: "forward-backward sweep",
            iterations: sweep_config.max_iterations,
            residual,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------
// report
// ---------------------------------------------------------------------

struct SweepArtifact {
    states: Trajectory,
    controls: ControlSchedule,
}

fn read_sweep_csv(path: &Path) -> Result<SweepArtifact> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(Ok(line)) => line,
        _ => {
            return Err(Error::DataParse {
                line: 1,
                message: format!("{}: missing header", path.display()),
            })
        }
    };
    let expected_cols = 1 + N_COMPARTMENTS + N_ADJOINTS + 2;
    if header.split(',').count() != expected_cols {
        return Err(Error::DataParse {
            line: 1,
            message: format!("{}: expected {expected_cols} columns", path.display()),
        });
    }

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut v = Vec::new();
    let mut m = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::DataParse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::DataParse {
                line: line_no,
                message: e.to_string(),
            })?;
        if fields.len() != expected_cols {
            return Err(Error::DataParse {
                line: line_no,
                message: format!("expected {expected_cols} columns, got {}", fields.len()),
            });
        }
        times.push(fields[0]);
        states.extend_from_slice(&fields[1..1 + N_COMPARTMENTS]);
        v.push(fields[expected_cols - 2]);
        m.push(fields[expected_cols - 1]);
    }
    if times.len() < 2 {
        return Err(Error::DataParse {
            line: 2,
            message: "need at least two rows".into(),
        });
    }

    // Rebuild the uniform grid and insist the rows actually sit on it.
    let h = times[1] - times[0];
    let grid = TimeGrid::new(times[0], times[times.len() - 1], h)
        .map_err(|e| Error::GridMismatch(format!("{}: {e}", path.display())))?;
    if grid.n_nodes() != times.len() {
        return Err(Error::GridMismatch(format!(
            "{}: rows do not form a uniform grid",
            path.display()
        )));
    }
    for (j, &t) in times.iter().enumerate() {
        if (t - grid.node(j)).abs() > 1e-9 * grid.span().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "{}: row {j} at t = {t} is off the uniform grid",
                path.display()
            )));
        }
    }

    let states = Trajectory::from_rows(grid, N_COMPARTMENTS, states)?;
    let controls = ControlSchedule::new(grid, v, m)?;
    Ok(SweepArtifact { states, controls })
}

fn cmd_report(common: &CommonArgs) -> Result<()> {
    let (config, alphas) = load(common)?;
    let section = config.report_section();

    let csv_path = common.out.join("cost_effectiveness.csv");
    let mut csv = create(&csv_path)?;
    writeln!(csv, "alpha,AV,TC,ACER,F_bar").map_err(|e| Error::io(&csv_path, e))?;

    let text_path = common.out.join("cost_effectiveness.txt");
    let mut text = create(&text_path)?;
    let io_err = |e: std::io::Error| Error::io(&text_path, e);
    writeln!(
        text,
        "cost-effectiveness summary (C1 = {}, C2 = {}; AV and TC divided by scale = {}; raw units individual-days)",
        section.c1, section.c2, section.scale
    )
    .map_err(io_err)?;
    writeln!(
        text,
        "alpha | AV(scaled) | TC(scaled) | ACER | F_bar | AV(raw) | TC(raw) | note"
    )
    .map_err(io_err)?;

    for &alpha in &alphas {
        let tag = alpha_tag(alpha);
        let artifact_path = common.out.join(format!("control_alpha_{tag}.csv"));
        let artifact = read_sweep_csv(&artifact_path)?;
        let report = EffectivenessReport::build(
            alpha,
            &artifact.states,
            &artifact.controls,
            section.c1,
            section.c2,
            section.scale,
        )?;
        report
            .write_csv_row(&mut csv)
            .map_err(|e| Error::io(&csv_path, e))?;

        let efficacy_path = common.out.join(format!("efficacy_alpha_{tag}.csv"));
        let mut w = create(&efficacy_path)?;
        writeln!(w, "t,efficacy").map_err(|e| Error::io(&efficacy_path, e))?;
        for (t, e_f) in &report.efficacy_curve {
            writeln!(w, "{t},{e_f}").map_err(|e| Error::io(&efficacy_path, e))?;
        }

        let note = if report.acer.is_none() {
            "ACER undefined: no cases averted"
        } else {
            ""
        };
        writeln!(
            text,
            "{} | {:.6} | {:.6} | {} | {:.6} | {:.6} | {:.6} | {}",
            alpha,
            report.averted_scaled(),
            report.total_cost_scaled(),
            report
                .acer
                .map(|a| format!("{a:.6}"))
                .unwrap_or_else(|| "n/a".into()),
            report.effectiveness,
            report.averted,
            report.total_cost,
            note
        )
        .map_err(io_err)?;
    }
    Ok(())
}
