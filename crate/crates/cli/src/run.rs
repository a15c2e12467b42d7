//! One driver per subcommand: materialize config, call the library, export.

use std::path::Path;

use serde_json::json;

use purcell_filters::dynamics::fit_exponential_decay;
use purcell_filters::dynamics::time_evolve;
use purcell_filters::ldos::ldos_all;
use purcell_filters::network::CoupledModeNetwork;
use purcell_filters::prototype::coupling_rates;
use purcell_filters::purcell::{bare_purcell_t1, combine_intrinsic, fit_power_law, t1_sweep};
use purcell_filters::scattering::s_parameters;
use purcell_filters::tline::{abcd_sparams, realize};

use crate::config::{ChainParts, DesignConfig, ModelChoice, ScalingConfig, TAU};
use crate::error::{compute, CliError};
use crate::output::{write_table, write_table_with_summary, write_touchstone, Cell, Format, Metadata, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Source {
    CoupledMode,
    Tline,
}

/// Smallest |S| exported on a dB scale; exact nulls would be -inf dB.
const DB_FLOOR: f64 = 1e-15;

fn db(x: f64) -> f64 {
    20.0 * x.max(DB_FLOOR).log10()
}

fn hz(w: f64) -> f64 {
    w / TAU
}

pub fn cmd_synth(cfg: &DesignConfig, out: &Path, format: Format) -> Result<(), CliError> {
    let spec = cfg.filter_spec()?;
    let proto = cfg.prototype()?;
    let rates = coupling_rates(&proto, spec.bandwidth).map_err(compute)?;
    let g = proto.g_values();
    let products = proto.products();
    let n = proto.order();

    println!(
        "prototype: N = {}, IL = {} dB, center {} GHz, bandwidth {} MHz",
        n,
        cfg.filter.insertion_loss_db,
        cfg.filter.center_frequency_hz / 1e9,
        cfg.filter.bandwidth_hz / 1e6
    );
    println!("g values: {}", g.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "));
    let mut table = Table::new(vec![
        "index".into(),
        "g_value".into(),
        "adjacent_product".into(),
        "coupling_rate_hz".into(),
    ]);
    for k in 0..=n {
        let rate = if k == 0 {
            rates.kappa_in
        } else if k == n {
            rates.kappa_out
        } else {
            rates.couplings[k - 1]
        };
        let label = if k == 0 {
            "kappa_in".to_string()
        } else if k == n {
            "kappa_out".to_string()
        } else {
            format!("c_{},{}", k, k + 1)
        };
        println!(
            "  k={k}  g_k*g_k+1 = {:10.4}   {label} = {:.4} MHz",
            products[k],
            hz(rate) / 1e6
        );
        table.push(vec![
            Cell::Int(k as i64),
            Cell::Num(g[k]),
            Cell::Num(products[k]),
            Cell::Num(hz(rate)),
        ]);
    }
    let meta = Metadata::new("synth", cfg)?;
    let summary = json!({
        "g_values": g,
        "adjacent_products": products,
        "kappa_in_hz": hz(rates.kappa_in),
        "couplings_hz": rates.couplings.iter().map(|&c| hz(c)).collect::<Vec<_>>(),
        "kappa_out_hz": hz(rates.kappa_out),
    });
    let path = write_table_with_summary(out, "synth", format, &meta, &table, summary)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_sparams(
    cfg: &DesignConfig,
    out: &Path,
    format: Format,
    source: Source,
) -> Result<(), CliError> {
    let grid = cfg.frequency_grid()?;
    // all four S entries, for the touchstone exporter
    let points: Vec<(f64, [(f64, f64); 4])> = match source {
        Source::CoupledMode => {
            let net = cfg.filter_network()?;
            let spectra = s_parameters(&net, &grid).map_err(compute)?;
            grid.iter()
                .zip(spectra.values())
                .map(|(&w, m)| {
                    (
                        hz(w),
                        [
                            (m[(0, 0)].re, m[(0, 0)].im),
                            (m[(1, 0)].re, m[(1, 0)].im),
                            (m[(0, 1)].re, m[(0, 1)].im),
                            (m[(1, 1)].re, m[(1, 1)].im),
                        ],
                    )
                })
                .collect()
        }
        Source::Tline => {
            let spec = cfg.filter_spec()?;
            let real = realize(&cfg.prototype()?, spec.center, spec.bandwidth, cfg.z0_ohm())
                .map_err(compute)?;
            let spectra = abcd_sparams(&real, &grid).map_err(compute)?;
            grid.iter()
                .zip(spectra.values())
                .map(|(&w, p)| {
                    (
                        hz(w),
                        [
                            (p.s11.re, p.s11.im),
                            (p.s21.re, p.s21.im),
                            (p.s12.re, p.s12.im),
                            (p.s22.re, p.s22.im),
                        ],
                    )
                })
                .collect()
        }
    };

    let meta = Metadata::new("sparams", cfg)?;
    let path = if format == Format::Touchstone {
        write_touchstone(out, "sparams", &meta, cfg.z0_ohm(), &points)?
    } else {
        let mut table = Table::new(vec![
            "frequency_hz".into(),
            "s21_db".into(),
            "s21_phase_rad".into(),
            "s11_db".into(),
        ]);
        for (f, [s11, s21, _, _]) in &points {
            let s21_mag = (s21.0 * s21.0 + s21.1 * s21.1).sqrt();
            let s11_mag = (s11.0 * s11.0 + s11.1 * s11.1).sqrt();
            table.push(vec![
                Cell::Num(*f),
                Cell::Num(db(s21_mag)),
                Cell::Num(s21.1.atan2(s21.0)),
                Cell::Num(db(s11_mag)),
            ]);
        }
        write_table(out, "sparams", format, &meta, &table)?
    };
    println!(
        "sparams ({} source): {} points",
        match source {
            Source::CoupledMode => "coupled-mode",
            Source::Tline => "tline",
        },
        points.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_ldos(cfg: &DesignConfig, out: &Path, format: Format) -> Result<(), CliError> {
    let net = cfg.filter_network()?;
    let grid = cfg.frequency_grid()?;
    let n = net.num_modes();
    let spectra = ldos_all(&net, &grid).map_err(compute)?;

    let mut columns = vec!["frequency_hz".to_string()];
    columns.extend((1..=n).map(|j| format!("ldos_stage_{j}_per_hz")));
    let mut table = Table::new(columns);
    for (&w, rho) in grid.iter().zip(spectra.values()) {
        let mut row = vec![Cell::Num(hz(w))];
        // density per Hz: rho(w) dw = rho_hz(f) df with w = 2 pi f
        row.extend(rho.iter().map(|&r| Cell::Num(TAU * r)));
        table.push(row);
    }
    let meta = Metadata::new("ldos", cfg)?;
    let path = write_table(out, "ldos", format, &meta, &table)?;
    println!("ldos: {} stages, {} points", n, grid.len());
    println!("wrote {}", path.display());
    Ok(())
}

fn stability_scale(net: &CoupledModeNetwork) -> f64 {
    let w_ref = net.mode_frequencies()[0];
    let mut s = 0.0f64;
    for (&w, &k) in net.mode_frequencies().iter().zip(net.external_decay()) {
        s = s.max((w - w_ref).abs()).max(k / 2.0);
    }
    for c in net.coupling().iter() {
        s = s.max(c.abs());
    }
    s
}

const MAX_INTERNAL_SAMPLES: usize = 5_000_000;

pub fn cmd_decay(cfg: &DesignConfig, out: &Path, format: Format) -> Result<(), CliError> {
    let parts = ChainParts::build(cfg, None)?;
    let net = parts.resonator_network()?;
    let res = net.num_modes() - 1;
    let stages = res;
    // sample spacing the integrator accepts (the fastest port sets it)
    let dt_stable = 0.09 / stability_scale(&net);

    let (stop, points_out) = match &cfg.sweeps.time {
        Some(t) => {
            if !(t.stop_s > 0.0) || !t.stop_s.is_finite() {
                return Err(CliError::Config("time sweep stop_s must be positive".into()));
            }
            if t.points < 2 || t.points > 100_000 {
                return Err(CliError::Config("time sweep needs 2..=100000 points".into()));
            }
            (t.stop_s, t.points)
        }
        None => {
            // golden-rule estimate sets the horizon; the stability bound
            // keeps the sample count in check for stopband placements
            let horizon = (8.0 / parts.kappa_r)
                .clamp(1_000.0 * dt_stable, 200_000.0 * dt_stable);
            (horizon, 2001)
        }
    };
    let dt_out = stop / (points_out - 1) as f64;
    let refine = (dt_out / dt_stable).ceil().max(1.0) as usize;
    if (points_out - 1) * refine + 1 > MAX_INTERNAL_SAMPLES {
        return Err(CliError::Config(format!(
            "time sweep needs {} internal samples (stability limit dt = {dt_stable:.3e} s); \
             reduce stop_s or points",
            (points_out - 1) * refine + 1
        )));
    }
    let dt_int = dt_out / refine as f64;
    let rec = time_evolve(&net, res, stop, dt_int).map_err(compute)?;

    let mut columns = vec!["time_s".to_string()];
    columns.extend((1..=stages).map(|j| format!("energy_stage_{j}")));
    columns.push("energy_resonator".into());
    columns.push("emitted_input".into());
    columns.push("emitted_output".into());
    columns.push("energy_total".into());
    let mut table = Table::new(columns);
    let em_in = rec.emission_for_label("input").unwrap_or(&[]);
    let em_out = rec.emission_for_label("output").unwrap_or(&[]);
    for k in (0..rec.times.len()).step_by(refine) {
        let mut row = vec![Cell::Num(rec.times[k])];
        row.extend((0..=stages).map(|j| Cell::Num(rec.energies[j][k])));
        row.push(Cell::Num(em_in[k]));
        row.push(Cell::Num(em_out[k]));
        row.push(Cell::Num(rec.total_energy(k) + rec.total_emitted(k)));
        table.push(row);
    }

    println!(
        "decay: resonator on stage {} ({} samples recorded, {} exported)",
        parts.stage + 1,
        rec.times.len(),
        table.rows.len()
    );
    let mut summary = json!({
        "golden_rule_rate_per_s": parts.kappa_r,
        "resonator_coupling_hz": hz(parts.coupling),
    });
    match fit_exponential_decay(&rec, res) {
        Ok(fit) => {
            println!(
                "fitted decay rate {:.6e} 1/s; golden-rule prediction {:.6e} 1/s (ratio {:.4})",
                fit.rate,
                parts.kappa_r,
                fit.rate / parts.kappa_r
            );
            summary["fitted_rate_per_s"] = json!(fit.rate);
            summary["fit_residual"] = json!(fit.residual);
        }
        Err(e) => println!("decay-rate fit unavailable: {e}"),
    }
    let meta = Metadata::new("decay", cfg)?;
    let path = write_table_with_summary(out, "decay", format, &meta, &table, summary)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_t1(
    cfg: &DesignConfig,
    out: &Path,
    format: Format,
    model: Option<ModelChoice>,
) -> Result<(), CliError> {
    let parts = ChainParts::build(cfg, model)?;
    let chain = parts.readout_chain()?;
    let (_, cqr) = parts.qubit.expect("readout_chain checked the qubit");
    let detunings = cfg.detuning_grid()?;
    let wq: Vec<f64> = detunings.iter().map(|d| parts.resonator_frequency + d).collect();
    if wq.iter().any(|&w| !(w > 0.0)) {
        return Err(CliError::Config(
            "detuning sweep pushes the qubit frequency to or below zero".into(),
        ));
    }
    let sweep = t1_sweep(&chain, &wq).map_err(compute)?;

    let mut columns = vec![
        "detuning_hz".to_string(),
        "qubit_frequency_hz".to_string(),
        "t1_s".to_string(),
        "t1_bare_s".to_string(),
    ];
    if parts.intrinsic_t1_s.is_some() {
        columns.push("t1_combined_s".into());
    }
    let mut table = Table::new(columns);
    let mut gaps = 0usize;
    for p in &sweep {
        let bare = bare_purcell_t1(p.detuning, parts.kappa_r, cqr)
            .map(Cell::Num)
            .unwrap_or(Cell::Empty);
        let t1 = match p.t1 {
            Some(v) => Cell::Num(v),
            None => {
                gaps += 1;
                Cell::Empty
            }
        };
        let mut row = vec![
            Cell::Num(hz(p.detuning)),
            Cell::Num(hz(p.qubit_frequency)),
            t1,
            bare,
        ];
        if let Some(t1i) = parts.intrinsic_t1_s {
            row.push(match p.t1 {
                Some(v) => Cell::Num(combine_intrinsic(v, t1i)),
                None => Cell::Empty,
            });
        }
        table.push(row);
    }

    println!(
        "t1: {} points, {} hybridization gaps, model {:?}",
        sweep.len(),
        gaps,
        parts.model
    );
    let mut summary = json!({
        "resonator_stage": parts.stage + 1,
        "effective_kappa_r_per_s": parts.kappa_r,
        "hybridization_gaps": gaps,
    });
    if let Some(sc) = &cfg.scaling {
        let [lo, hi] = sc.window_ghz.unwrap_or([0.4, 1.0]);
        let window = (TAU * lo * 1e9, TAU * hi * 1e9);
        let pts: Vec<(f64, f64)> = sweep
            .iter()
            .filter_map(|p| p.t1.map(|t| (p.detuning, t)))
            .collect();
        let fit = fit_power_law(&pts, window).map_err(compute)?;
        println!(
            "power-law fit over |detuning| in [{lo}, {hi}] GHz: exponent {:.3}, residual {:.3e}",
            fit.exponent, fit.residual
        );
        summary["fit_exponent"] = json!(fit.exponent);
        summary["fit_prefactor_si"] = json!(fit.prefactor);
        summary["fit_residual"] = json!(fit.residual);
    }
    let meta = Metadata::new("t1", cfg)?;
    let path = write_table_with_summary(out, "t1", format, &meta, &table, summary)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_scaling(
    cfg: &DesignConfig,
    out: &Path,
    format: Format,
    model: Option<ModelChoice>,
) -> Result<(), CliError> {
    let sc = cfg.scaling.clone().unwrap_or(ScalingConfig {
        orders: None,
        insertion_loss_db: None,
        window_ghz: None,
    });
    let orders = sc.orders.unwrap_or_else(|| vec![cfg.filter.order]);
    let ils = sc
        .insertion_loss_db
        .unwrap_or_else(|| vec![cfg.filter.insertion_loss_db]);
    let [lo, hi] = sc.window_ghz.unwrap_or([0.4, 1.0]);
    if !(lo > 0.0) || !(hi > lo) {
        return Err(CliError::Config("window_ghz must satisfy 0 < low < high".into()));
    }
    let window = (TAU * lo * 1e9, TAU * hi * 1e9);
    let detunings = cfg.detuning_grid()?;

    let mut table = Table::new(vec![
        "insertion_loss_db".into(),
        "order".into(),
        "exponent".into(),
        "t1_at_1ghz_detuning_s".into(),
        "fit_residual".into(),
        "points_used".into(),
    ]);
    for &il in &ils {
        for &order in &orders {
            let parts = ChainParts::build_for(cfg, order, il, model)?;
            let chain = parts.readout_chain()?;
            let wq: Vec<f64> = detunings
                .iter()
                .map(|d| parts.resonator_frequency + d)
                .collect();
            let sweep = t1_sweep(&chain, &wq).map_err(compute)?;
            let pts: Vec<(f64, f64)> = sweep
                .iter()
                .filter_map(|p| p.t1.map(|t| (p.detuning, t)))
                .collect();
            let fit = fit_power_law(&pts, window).map_err(compute)?;
            let t1_1ghz = fit.prefactor * (TAU * 1e9).powf(fit.exponent);
            println!(
                "IL {il:>5} dB  N={order}: exponent {:.3}, T1(|detuning| = 1 GHz) = {:.4e} s, \
                 residual {:.3e}",
                fit.exponent, t1_1ghz, fit.residual
            );
            table.push(vec![
                Cell::Num(il),
                Cell::Int(order as i64),
                Cell::Num(fit.exponent),
                Cell::Num(t1_1ghz),
                Cell::Num(fit.residual),
                Cell::Int(pts.len() as i64),
            ]);
        }
    }
    let meta = Metadata::new("scaling", cfg)?;
    let path = write_table(out, "scaling", format, &meta, &table)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_tline(cfg: &DesignConfig, out: &Path, format: Format) -> Result<(), CliError> {
    let spec = cfg.filter_spec()?;
    let real = realize(&cfg.prototype()?, spec.center, spec.bandwidth, cfg.z0_ohm())
        .map_err(compute)?;
    let n = real.order();

    println!(
        "tline realization: N = {n}, z0 = {} ohm, center {} GHz",
        real.z0,
        cfg.filter.center_frequency_hz / 1e9
    );
    let mut round_trip = 0.0f64;
    let mut table = Table::new(vec![
        "index".into(),
        "inverter_z0j".into(),
        "stub_angle_rad".into(),
        "line_angle_rad".into(),
    ]);
    for i in 0..=n {
        let line = real.section_lengths.get(i).copied();
        println!(
            "  n={:<2} Z0*J = {:.6}  stub phi = {:.6} rad{}",
            i + 1,
            real.inverter_values[i],
            real.stub_lengths[i],
            line.map(|t| format!("  line theta = {t:.6} rad")).unwrap_or_default()
        );
        if let Some(theta) = line {
            let round = theta
                + real.inverter_values[i].atan()
                + real.inverter_values[i + 1].atan();
            round_trip = round_trip.max((round - std::f64::consts::PI).abs());
        }
        table.push(vec![
            Cell::Int((i + 1) as i64),
            Cell::Num(real.inverter_values[i]),
            Cell::Num(real.stub_lengths[i]),
            line.map(Cell::Num).unwrap_or(Cell::Empty),
        ]);
    }
    println!("round-trip identity |theta_n + atan(J_n) + atan(J_n+1) - pi| <= {round_trip:.2e}");

    let meta = Metadata::new("tline", cfg)?;
    let summary = json!({
        "z0_ohm": real.z0,
        "round_trip_error_rad": round_trip,
    });
    let path = write_table_with_summary(out, "tline", format, &meta, &table, summary)?;
    println!("wrote {}", path.display());

    if cfg.sweeps.frequency.is_some() {
        let grid = cfg.frequency_grid()?;
        let spectra = abcd_sparams(&real, &grid).map_err(compute)?;
        let mut sweep = Table::new(vec![
            "frequency_hz".into(),
            "s21_db".into(),
            "s21_phase_rad".into(),
            "s11_db".into(),
        ]);
        for (&w, p) in grid.iter().zip(spectra.values()) {
            sweep.push(vec![
                Cell::Num(hz(w)),
                Cell::Num(db(p.s21.norm())),
                Cell::Num(p.s21.im.atan2(p.s21.re)),
                Cell::Num(db(p.s11.norm())),
            ]);
        }
        let path = write_table(out, "tline_sparams", format, &meta, &sweep)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
