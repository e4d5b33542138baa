use serde::{Deserialize, Serialize};

use super::{pdp_proxy, LatencyBreakdown};

/// Both SI-SNR improvement gates require strictly more than this.
pub const MIN_SI_SNRI_DB: f64 = 3.0;
/// Real-time gate on end-to-end latency.
pub const MAX_TOTAL_LATENCY_S: f64 = 0.040;

/// Column order of the CSV export.
pub const CSV_HEADER: [&str; 13] = [
    "network",
    "si_snr_db",
    "si_snri_data_db",
    "si_snri_encdec_db",
    "dnsmos_ovrl",
    "dnsmos_sig",
    "dnsmos_bak",
    "latency_encdec_ms",
    "latency_total_ms",
    "power_proxy_mops_s",
    "pdp_proxy_mops",
    "param_count_k",
    "model_size_kb",
];

/// Externally computed perceptual scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dnsmos {
    pub ovrl: f64,
    pub sig: f64,
    pub bak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub index: usize,
    pub si_snr_db: f64,
    pub noisy_si_snr_db: f64,
    pub encdec_si_snr_db: f64,
    pub network_latency_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub network: String,
    pub si_snr_db: f64,
    pub si_snri_data_db: f64,
    pub si_snri_encdec_db: f64,
    pub latency: LatencyBreakdown,
    pub power_proxy_mops_s: f64,
    pub pdp_proxy_mops: f64,
    pub param_count: u64,
    pub model_size_bytes: u64,
    pub dnsmos: Option<Dnsmos>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub utterances: Vec<UtteranceScore>,
}

impl EvalReport {
    /// Assembles a report; the PDP field is derived from power and latency.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        network: impl Into<String>,
        si_snr_db: f64,
        si_snri_data_db: f64,
        si_snri_encdec_db: f64,
        latency: LatencyBreakdown,
        power_proxy_mops_s: f64,
        param_count: u64,
        model_size_bytes: u64,
    ) -> Self {
        Self {
            network: network.into(),
            si_snr_db,
            si_snri_data_db,
            si_snri_encdec_db,
            latency,
            power_proxy_mops_s,
            pdp_proxy_mops: pdp_proxy(power_proxy_mops_s, &latency),
            param_count,
            model_size_bytes,
            dnsmos: None,
            utterances: Vec::new(),
        }
    }

    /// True when the stored PDP equals power x total latency (1e-9 relative).
    pub fn is_consistent(&self) -> bool {
        let expect = pdp_proxy(self.power_proxy_mops_s, &self.latency);
        let sum = self.latency.buffer_s + self.latency.encdec_s + self.latency.network_s;
        (self.pdp_proxy_mops - expect).abs() <= 1e-9 * expect.abs().max(f64::MIN_POSITIVE)
            && (self.latency.total_s - sum).abs() <= 1e-12 * sum.abs().max(1.0)
    }

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
        vec![
            self.network.clone(),
            format!("{:.2}", self.si_snr_db),
            format!("{:.2}", self.si_snri_data_db),
            format!("{:.2}", self.si_snri_encdec_db),
            opt(self.dnsmos.map(|d| d.ovrl)),
            opt(self.dnsmos.map(|d| d.sig)),
            opt(self.dnsmos.map(|d| d.bak)),
            format!("{:.3}", self.latency.encdec_s * 1e3),
            format!("{:.3}", self.latency.total_s * 1e3),
            format!("{:.2}", self.power_proxy_mops_s),
            format!("{:.2}", self.pdp_proxy_mops),
            format!("{:.0}", self.param_count as f64 / 1e3),
            format!("{:.0}", self.model_size_bytes as f64 / 1e3),
        ]
    }

    /// Header plus one data row.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        w.write_record(self.csv_record())?;
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Aligned human-readable table.
    pub fn to_table(&self) -> String {
        let header: Vec<&str> = CSV_HEADER.to_vec();
        let row = self.csv_record();
        let widths: Vec<usize> = header.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
        let fmt = |cells: Vec<String>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        format!(
            "{}\n{}\n",
            fmt(header.into_iter().map(String::from).collect()),
            fmt(row)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateFailure {
    DataImprovement { si_snri_db: f64 },
    EncdecImprovement { si_snri_db: f64 },
    Latency { total_s: f64 },
}

impl std::fmt::Display for GateFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateFailure::DataImprovement { si_snri_db } => write!(
                f,
                "SI-SNR improvement over noisy data {si_snri_db:.2} dB is not above {MIN_SI_SNRI_DB} dB"
            ),
            GateFailure::EncdecImprovement { si_snri_db } => write!(
                f,
                "SI-SNR improvement over encode/decode {si_snri_db:.2} dB is not above {MIN_SI_SNRI_DB} dB"
            ),
            GateFailure::Latency { total_s } => write!(
                f,
                "total latency {:.3} ms exceeds {:.0} ms",
                total_s * 1e3,
                MAX_TOTAL_LATENCY_S * 1e3
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qualification {
    pub passed: bool,
    pub failures: Vec<GateFailure>,
}

/// Checks both improvement gates and the latency gate, listing every violation.
pub fn qualification(report: &EvalReport) -> Qualification {
    let mut failures = Vec::new();
    if !(report.si_snri_data_db > MIN_SI_SNRI_DB) {
        failures.push(GateFailure::DataImprovement {
            si_snri_db: report.si_snri_data_db,
        });
    }
    if !(report.si_snri_encdec_db > MIN_SI_SNRI_DB) {
        failures.push(GateFailure::EncdecImprovement {
            si_snri_db: report.si_snri_encdec_db,
        });
    }
    // tolerate float noise in the stored sum
    if report.latency.total_s > MAX_TOTAL_LATENCY_S * (1.0 + 1e-12) {
        failures.push(GateFailure::Latency {
            total_s: report.latency.total_s,
        });
    }
    Qualification {
        passed: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sdnn_row() -> EvalReport {
        EvalReport::new(
            "SDNN baseline",
            12.50,
            4.88,
            4.88,
            LatencyBreakdown::new(0.032, 0.000036, 0.0),
            14.54,
            525_000,
            465_000,
        )
    }

    #[test]
    fn baseline_row_qualifies() {
        let q = qualification(&sdnn_row());
        assert!(q.passed, "{:?}", q.failures);
    }

    #[test]
    fn data_gate() {
        let mut r = sdnn_row();
        r.si_snri_data_db = 2.9;
        let q = qualification(&r);
        assert!(!q.passed);
        assert_eq!(q.failures, vec![GateFailure::DataImprovement { si_snri_db: 2.9 }]);
    }

    #[test]
    fn latency_gate() {
        let r = EvalReport::new("x", 12.0, 4.0, 4.0, LatencyBreakdown::new(0.041, 0.0, 0.0), 1.0, 0, 0);
        let q = qualification(&r);
        assert!(matches!(q.failures.as_slice(), [GateFailure::Latency { .. }]));
        let ok = EvalReport::new("x", 12.0, 4.0, 4.0, LatencyBreakdown::new(0.032, 0.008, 0.0), 1.0, 0, 0);
        assert!(qualification(&ok).passed);
    }

    #[test]
    fn all_failures_listed() {
        let r = EvalReport::new("x", 1.0, 0.0, 0.0, LatencyBreakdown::new(0.05, 0.0, 0.0), 1.0, 0, 0);
        assert_eq!(qualification(&r).failures.len(), 3);
    }

    #[test]
    fn csv_header_order_and_row() {
        let csv = sdnn_row().to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "SDNN baseline,12.50,4.88,4.88,,,,0.036,32.036,14.54,0.47,525,465"
        );
    }

    #[test]
    fn json_round_trip_keeps_consistency() {
        let r = sdnn_row();
        assert!(r.is_consistent());
        let back: EvalReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert!(back.is_consistent());
        let mut bad = r;
        bad.pdp_proxy_mops = 0.44;
        assert!(!bad.is_consistent());
    }

    proptest! {
        #[test]
        fn qualification_is_monotone(
            data in 0.0f64..8.0, encdec in 0.0f64..8.0, lat in 0.0f64..0.06,
            bump_data in 0.0f64..2.0, bump_encdec in 0.0f64..2.0, cut_lat in 0.0f64..0.02,
        ) {
            let r = EvalReport::new("x", 0.0, data, encdec, LatencyBreakdown::new(lat, 0.0, 0.0), 1.0, 0, 0);
            let better = EvalReport::new(
                "x", 0.0, data + bump_data, encdec + bump_encdec,
                LatencyBreakdown::new((lat - cut_lat).max(0.0), 0.0, 0.0), 1.0, 0, 0,
            );
            if qualification(&r).passed {
                prop_assert!(qualification(&better).passed);
            }
        }
    }
}
