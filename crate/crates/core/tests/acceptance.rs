//! Acceptance table: one PASS/FAIL line per criterion, detail rows indented below.
//!
//! Runs as a plain binary (`harness = false`) and exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use renormgb::domains::{make_builtin, DomainKind, DomainParams};
use renormgb::invariants::{gauss_bonnet_report, InvariantReport, ReportConfig, Tolerances};
use renormgb::verify::{
    ball, ball_normal_row, d_pi_row, determinism_row, ellipsoid, fefferman_suite, gauge_row,
    identities_suite, index_suite, mobius_ball, report_rows, tube_suite, CheckRow, VerifyConfig,
};
use renormgb::Result;

const BALL_N1_RESOLUTION: usize = 48;
const BALL_N2_RESOLUTION: usize = 32;
const BALL_N1_BUDGET: Duration = Duration::from_secs(120);
const BALL_N2_BUDGET: Duration = Duration::from_secs(15 * 60);

struct Table {
    failures: usize,
}

impl Table {
    fn record(&mut self, number: usize, title: &str, rows: Result<Vec<CheckRow>>) {
        let (pass, detail) = match rows {
            Ok(rows) => {
                let pass = !rows.is_empty() && rows.iter().all(|r| r.pass);
                (
                    pass,
                    rows.iter().map(|r| format!("    {r}")).collect::<Vec<_>>(),
                )
            }
            Err(err) => (false, vec![format!("    error: {err}")]),
        };
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {number:>2} {} {title}",
            if pass { "PASS" } else { "FAIL" }
        );
        for line in detail {
            println!("{line}");
        }
    }
}

fn timed_report(
    n: usize,
    resolution: usize,
    tol: &Tolerances,
) -> Result<(InvariantReport, Duration)> {
    let config = ReportConfig {
        resolution,
        tolerances: tol.clone(),
        ..ReportConfig::default()
    };
    let start = Instant::now();
    let report = gauss_bonnet_report(&ball(n)?, &config)?;
    Ok((report, start.elapsed()))
}

fn closure_rows(
    report: &InvariantReport,
    elapsed: Duration,
    budget: Duration,
    tol: &Tolerances,
) -> Vec<CheckRow> {
    let mut rows: Vec<CheckRow> = report_rows(report, tol)
        .into_iter()
        .filter(|r| {
            r.name.ends_with("transgression integral")
                || r.name.contains("interior c_")
                || r.name.ends_with("residue index")
        })
        .collect();
    rows.push(CheckRow::at_least(
        format!("{} seconds under budget", report.domain_id),
        budget.as_secs_f64() - elapsed.as_secs_f64(),
        0.0,
        0.0,
    ));
    rows
}

fn main() -> ExitCode {
    let config = VerifyConfig {
        resolution_n1: BALL_N1_RESOLUTION,
        resolution_n2: BALL_N2_RESOLUTION,
        ..VerifyConfig::default()
    };
    let tol = config.tolerances.clone();
    let mut table = Table { failures: 0 };
    let mut two_route: Vec<CheckRow> = Vec::new();
    let mut einstein: Vec<CheckRow> = Vec::new();
    let collect =
        |report: &InvariantReport, two_route: &mut Vec<CheckRow>, einstein: &mut Vec<CheckRow>| {
            for row in report_rows(report, &tol) {
                if row.name.ends_with("two-route discrepancy") {
                    two_route.push(row);
                } else if row.name.ends_with("relation") {
                    einstein.push(row);
                }
            }
        };

    let ball1 = timed_report(1, BALL_N1_RESOLUTION, &tol);
    if let Ok((report, _)) = &ball1 {
        collect(report, &mut two_route, &mut einstein);
    }
    table.record(
        1,
        "ball closure n=1 at resolution 48",
        ball1.map(|(r, t)| closure_rows(&r, t, BALL_N1_BUDGET, &tol)),
    );

    let ball2 = timed_report(2, BALL_N2_RESOLUTION, &tol);
    if let Ok((report, _)) = &ball2 {
        collect(report, &mut two_route, &mut einstein);
    }
    table.record(
        2,
        "ball closure n=2 at resolution 32",
        ball2.map(|(r, t)| closure_rows(&r, t, BALL_N2_BUDGET, &tol)),
    );

    let mobius = (|| -> Result<Vec<CheckRow>> {
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for a in &config.mobius_centers {
            let report = gauss_bonnet_report(
                &mobius_ball(1, a)?,
                &ReportConfig {
                    resolution: BALL_N1_RESOLUTION,
                    tolerances: tol.clone(),
                    euler_side: false,
                    ..ReportConfig::default()
                },
            )?;
            collect(&report, &mut two_route, &mut einstein);
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            rows.push(CheckRow::at_least(
                format!("{} |a| <= 0.4", report.domain_id),
                0.4 - norm,
                0.0,
                0.0,
            ));
            rows.push(CheckRow::near(
                format!("{} integral", report.domain_id),
                report.integral_transgression,
                -1.0,
                tol.invariance,
            ));
            values.push(report.integral_transgression);
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(CheckRow::residual(
            "pairwise spread",
            max - min,
            tol.invariance,
        ));
        Ok(rows)
    })();
    table.record(
        3,
        "pseudo-Einstein invariance on three Möbius balls",
        mobius,
    );

    let ellipsoids = (|| -> Result<()> {
        for n in [1, 2] {
            for &t in &config.ellipsoid_t {
                let resolution = if n == 1 {
                    config.ellipsoid_resolution_n1
                } else {
                    config.ellipsoid_resolution_n2
                };
                let report = gauss_bonnet_report(
                    &ellipsoid(n, t)?,
                    &ReportConfig {
                        resolution,
                        tolerances: tol.clone(),
                        ..ReportConfig::default()
                    },
                )?;
                collect(&report, &mut two_route, &mut einstein);
            }
        }
        Ok(())
    })();
    table.record(
        4,
        "two-route agreement on balls, Möbius balls and ellipsoids at stage n+2",
        ellipsoids.map(|_| two_route.clone()),
    );

    let d_pi = (|| -> Result<Vec<CheckRow>> {
        let tube = make_builtin(DomainKind::TubeDisc, 1, DomainParams::default())?;
        let mut rows = vec![d_pi_row(&tube, &config)?];
        for n in [1, 2] {
            let center: Vec<f64> = config.mobius_centers[0]
                .iter()
                .copied()
                .chain(vec![0.0; 2 * (n - 1)])
                .collect();
            rows.push(d_pi_row(&ball(n)?, &config)?);
            rows.push(d_pi_row(&mobius_ball(n, &center)?, &config)?);
            rows.push(d_pi_row(&ellipsoid(n, config.ellipsoid_t[0])?, &config)?);
        }
        Ok(rows)
    })();
    table.record(
        5,
        "transgression exactness over 100 collar points per built-in",
        d_pi,
    );

    let slopes = fefferman_suite(&VerifyConfig {
        ellipsoid_resolution_n1: 8,
        ellipsoid_resolution_n2: 8,
        ..config.clone()
    })
    .map(|rows| {
        rows.into_iter()
            .filter(|r| r.name.contains("slope"))
            .collect()
    });
    table.record(
        6,
        "Fefferman vanishing order on the ellipsoid family",
        slopes,
    );

    let relations = (|| -> Result<Vec<CheckRow>> {
        let mut rows = einstein.clone();
        rows.push(ball_normal_row(1, &config)?);
        rows.push(ball_normal_row(2, &config)?);
        rows.extend(
            tube_suite(&config)?
                .into_iter()
                .filter(|r| r.name == "tube Einstein relations"),
        );
        Ok(rows)
    })();
    table.record(7, "boundary Einstein relations", relations);

    let identities = (|| -> Result<Vec<CheckRow>> {
        let mut rows = identities_suite(&config)?;
        rows.extend(
            tube_suite(&config)?
                .into_iter()
                .filter(|r| r.name.starts_with("tube J") || r.name == "tube |A|"),
        );
        Ok(rows)
    })();
    table.record(
        8,
        "Kähler-Einstein identities and the tube model",
        identities,
    );

    table.record(
        9,
        "index integrals with trivial and metric connections",
        index_suite(&config),
    );

    let gauge = (|| -> Result<Vec<CheckRow>> {
        let t = config.ellipsoid_t[0];
        Ok(vec![
            gauge_row(&ellipsoid(1, t)?, 10, &config)?,
            gauge_row(&ellipsoid(2, t)?, 5, &config)?,
            gauge_row(&mobius_ball(1, &config.mobius_centers[0])?, 10, &config)?,
            determinism_row(&ellipsoid(1, t)?, 16, &config)?,
            determinism_row(&ellipsoid(2, t)?, 8, &config)?,
        ])
    })();
    table.record(
        10,
        "frame gauge invariance and worker-count determinism",
        gauge,
    );

    if table.failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria fail", table.failures);
        ExitCode::FAILURE
    }
}
