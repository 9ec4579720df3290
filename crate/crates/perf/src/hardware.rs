use std::path::Path;

use archspec::{ConfigError, KvDoc};
use opgraph::{Convention, OpKind};
use serde::{Deserialize, Serialize};

/// Edge accelerator parameters. Defaults describe the reference edge ASIC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    pub mac_units: u64,
    pub simd_lanes: u64,
    pub clock_hz: f64,
    pub sram_bytes: u64,
    pub dram_bw_bytes_per_s: f64,
    pub e_mem_pj_per_bit: f64,
    pub e_op_pj: f64,
    pub weight_bits: u32,
    pub act_bits: u32,
    pub state_bits: u32,
}

pub const HW_KEYS: [&str; 10] = [
    "mac_units",
    "simd_lanes",
    "clock_hz",
    "sram_bytes",
    "dram_bw_bytes_per_s",
    "e_mem_pj_per_bit",
    "e_op_pj",
    "weight_bits",
    "act_bits",
    "state_bits",
];

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            mac_units: 1024,
            simd_lanes: 32,
            clock_hz: 250e6,
            sram_bytes: 2 << 20,
            dram_bw_bytes_per_s: 34e9,
            e_mem_pj_per_bit: 15.0,
            e_op_pj: 2.0,
            weight_bits: 16,
            act_bits: 16,
            state_bits: 16,
        }
    }
}

impl HardwareConfig {
    /// Validating constructor; every field must be strictly positive.
    pub fn new(cfg: HardwareConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let ints = [
            ("mac_units", self.mac_units),
            ("simd_lanes", self.simd_lanes),
            ("sram_bytes", self.sram_bytes),
            ("weight_bits", self.weight_bits as u64),
            ("act_bits", self.act_bits as u64),
            ("state_bits", self.state_bits as u64),
        ];
        for (field, v) in ints {
            if v == 0 {
                return Err(ConfigError::Invalid {
                    field,
                    reason: "must be strictly positive".into(),
                });
            }
        }
        let reals = [
            ("clock_hz", self.clock_hz),
            ("dram_bw_bytes_per_s", self.dram_bw_bytes_per_s),
            ("e_mem_pj_per_bit", self.e_mem_pj_per_bit),
            ("e_op_pj", self.e_op_pj),
        ];
        for (field, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid {
                    field,
                    reason: "must be strictly positive".into(),
                });
            }
        }
        Ok(())
    }

    /// MAC array peak, one MAC counted as two ops.
    pub fn matmul_peak(&self) -> f64 {
        self.mac_units as f64 * 2.0 * self.clock_hz
    }

    /// SIMD peak at one op per lane-cycle.
    pub fn simd_peak(&self) -> f64 {
        self.simd_lanes as f64 * self.clock_hz
    }

    /// Ops per byte where MAC-array compute time equals memory time.
    pub fn ridge_point(&self) -> f64 {
        self.matmul_peak() / self.dram_bw_bytes_per_s
    }

    pub fn convention(&self) -> Convention {
        Convention {
            weight_bits: self.weight_bits,
            act_bits: self.act_bits,
            state_bits: self.state_bits,
            ..Convention::default()
        }
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let doc = KvDoc::parse(text)?;
        doc.check_keys(&HW_KEYS)?;
        let d = Self::default();
        let cfg = Self {
            mac_units: doc.get_or("mac_units", d.mac_units)?,
            simd_lanes: doc.get_or("simd_lanes", d.simd_lanes)?,
            clock_hz: doc.get_or("clock_hz", d.clock_hz)?,
            sram_bytes: doc.get_or("sram_bytes", d.sram_bytes)?,
            dram_bw_bytes_per_s: doc.get_or("dram_bw_bytes_per_s", d.dram_bw_bytes_per_s)?,
            e_mem_pj_per_bit: doc.get_or("e_mem_pj_per_bit", d.e_mem_pj_per_bit)?,
            e_op_pj: doc.get_or("e_op_pj", d.e_op_pj)?,
            weight_bits: doc.get_or("weight_bits", d.weight_bits)?,
            act_bits: doc.get_or("act_bits", d.act_bits)?,
            state_bits: doc.get_or("state_bits", d.state_bits)?,
        };
        Self::new(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_kv_str(&text)
    }

    pub fn to_kv_string(&self) -> String {
        format!(
            "mac_units = {}\nsimd_lanes = {}\nclock_hz = {}\nsram_bytes = {}\n\
             dram_bw_bytes_per_s = {}\ne_mem_pj_per_bit = {}\ne_op_pj = {}\n\
             weight_bits = {}\nact_bits = {}\nstate_bits = {}\n",
            self.mac_units,
            self.simd_lanes,
            self.clock_hz,
            self.sram_bytes,
            self.dram_bw_bytes_per_s,
            self.e_mem_pj_per_bit,
            self.e_op_pj,
            self.weight_bits,
            self.act_bits,
            self.state_bits
        )
    }
}

/// Peak of the array that natively executes `kind`.
pub fn peak_compute(hw: &HardwareConfig, kind: OpKind) -> f64 {
    match kind {
        OpKind::MatMul | OpKind::Conv => hw.matmul_peak(),
        OpKind::Elementwise | OpKind::Nonlinearity | OpKind::ScanCombine => hw.simd_peak(),
    }
}
