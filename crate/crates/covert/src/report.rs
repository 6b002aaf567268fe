//! Simulation and surface outputs: CSV for sweeps, JSON for full reports.
//!
//! CSV uses `.` decimals, no thousands separators and LF line endings;
//! reals are printed in Rust's shortest round-trip form, so identical
//! inputs give identical bytes.

use std::io::Write;

use covert_core::capacity::SurfacePoint;
use covert_core::sim::{RateFlags, SimReport};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SIM_COLUMNS: [&str; 10] = [
    "n",
    "realized_R",
    "realized_RK",
    "realized_Rprime",
    "p_err",
    "p_err_halfwidth",
    "kl_nats",
    "tv",
    "detection_bound",
    "exactness_flag",
];

pub const SURFACE_COLUMNS: [&str; 3] = ["A_nats", "B", "rate_bits"];

pub fn exactness_flag(r: &SimReport) -> &'static str {
    if r.exact {
        "EXACT"
    } else {
        "ESTIMATE"
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(format!("CSV output: {e}"))
}

pub fn write_sim_csv<W: Write>(reports: &[SimReport], w: W) -> CliResult<()> {
    let mut out = writer(w);
    out.write_record(SIM_COLUMNS).map_err(csv_err)?;
    for r in reports {
        out.write_record([
            r.n.to_string(),
            r.realized.rate.to_string(),
            r.realized.key_rate.to_string(),
            r.realized.rate_prime.to_string(),
            opt(r.p_err),
            opt(r.p_err_halfwidth),
            r.kl_nats.to_string(),
            r.tv.to_string(),
            r.detection_bound.to_string(),
            exactness_flag(r).to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

pub fn sim_csv_string(reports: &[SimReport]) -> CliResult<String> {
    let mut buf = Vec::new();
    write_sim_csv(reports, &mut buf)?;
    String::from_utf8(buf).map_err(csv_err)
}

pub fn write_surface_csv<W: Write>(points: &[SurfacePoint], w: W) -> CliResult<()> {
    let mut out = writer(w);
    out.write_record(SURFACE_COLUMNS).map_err(csv_err)?;
    for p in points {
        out.write_record([p.a_nats.to_string(), p.b.to_string(), p.value_bits.to_string()]).map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

#[derive(Debug, Serialize)]
pub struct CodebookDoc {
    pub draw: u64,
    pub kl_nats: f64,
    pub tv: f64,
    pub detection_bound: f64,
    pub optimal_test_sum: f64,
    pub marginal_kl_sum_nats: f64,
    pub errors: u64,
    pub trials: u64,
    pub encoder_atypical: u64,
}

#[derive(Debug, Serialize)]
pub struct RealizedDoc {
    pub keys: usize,
    pub messages: usize,
    pub bins: usize,
    pub rate: f64,
    pub key_rate: f64,
    pub rate_prime: f64,
}

#[derive(Debug, Serialize)]
pub struct RateFlagsDoc {
    /// Causal: `R + R_K > I(V;Z)`; multicoding: `R + R_K + R' > I(U;Z)`.
    pub soft_covering: bool,
    /// Causal: `R < I(V;Y)`; multicoding: `R + R' < I(U;Y)`.
    pub reliability: bool,
    /// Multicoding only: `R' > I(U;S)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multicoding: Option<bool>,
}

impl From<&RateFlags> for RateFlagsDoc {
    fn from(f: &RateFlags) -> Self {
        match *f {
            RateFlags::Causal { soft_covering, reliability } => Self { soft_covering, reliability, multicoding: None },
            RateFlags::Noncausal { multicoding, soft_covering, reliability } => {
                Self { soft_covering, reliability, multicoding: Some(multicoding) }
            }
        }
    }
}

/// One blocklength of a sweep. Averages are over codebook draws.
#[derive(Debug, Serialize)]
pub struct SimReportDoc {
    pub n: usize,
    pub realized: RealizedDoc,
    pub p_err: Option<f64>,
    pub p_err_halfwidth: Option<f64>,
    /// `D(P̂_{Z^n}‖Q0^n)`, nats; `null` if infinite.
    pub kl_exact_nats: Option<f64>,
    pub tv: f64,
    pub detection_bound: f64,
    pub optimal_test_sum: f64,
    pub exactness_flag: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_warning: Option<&'static str>,
    pub rate_condition_flags: RateFlagsDoc,
    pub codebooks: Vec<CodebookDoc>,
}

impl From<&SimReport> for SimReportDoc {
    fn from(r: &SimReport) -> Self {
        Self {
            n: r.n,
            realized: RealizedDoc {
                keys: r.realized.keys,
                messages: r.realized.messages,
                bins: r.realized.bins,
                rate: r.realized.rate,
                key_rate: r.realized.key_rate,
                rate_prime: r.realized.rate_prime,
            },
            p_err: r.p_err,
            p_err_halfwidth: r.p_err_halfwidth,
            kl_exact_nats: r.kl_nats.is_finite().then_some(r.kl_nats),
            tv: r.tv,
            detection_bound: r.detection_bound,
            optimal_test_sum: r.optimal_test_sum,
            exactness_flag: exactness_flag(r),
            estimate_warning: (!r.exact).then_some(
                "plug-in Monte Carlo estimate of the warden divergence; biased upward at small sample sizes",
            ),
            rate_condition_flags: (&r.flags).into(),
            codebooks: r
                .codebooks
                .iter()
                .map(|c| CodebookDoc {
                    draw: c.draw,
                    kl_nats: c.kl_nats,
                    tv: c.tv,
                    detection_bound: c.detection_bound,
                    optimal_test_sum: c.optimal_test_sum,
                    marginal_kl_sum_nats: c.marginal_kl_sum_nats,
                    errors: c.errors,
                    trials: c.trials,
                    encoder_atypical: c.encoder_atypical,
                })
                .collect(),
        }
    }
}

/// The JSON report for a whole sweep.
#[derive(Debug, Serialize)]
pub struct SweepDoc {
    pub mode: &'static str,
    /// Decoding rule used for the error-rate trials.
    pub decoder: &'static str,
    pub reports: Vec<SimReportDoc>,
}

pub const DECODER_NOTE: &str =
    "maximum-likelihood over (m, l) given the key; replaces joint-typicality decoding at these blocklengths";
