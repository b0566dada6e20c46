//! Experiment configuration.
//!
//! The on-disk format is flat `key = value` text; `#` starts a comment. Rates
//! carry explicit units, either inline (`rates = 1.2:1.8:0.1 bits`) or through
//! a separate `rate_unit` key. Example:
//!
//! ```text
//! preset   = fig5_omega_sweep
//! rates    = 1.6 bits
//! bases    = 2x32, 6x32, 8x32
//! trials   = 200
//! seed     = 7
//! ```
//!
//! Base matrices are listed in `bases` as `<omega>x<lambda>`, `flat` (1×1),
//! `row:<cols>` (1×cols, uncoupled) or `csv:<path>`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use scsparc_core::{convert_rate, Backend, BaseMatrix, CodeParams, RateUnit};

use crate::basefile;
use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig3Wave,
    Fig4SerVsRate,
    Fig5OmegaSweep,
    Custom,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig3Wave => "fig3_wave",
            Preset::Fig4SerVsRate => "fig4_ser_vs_rate",
            Preset::Fig5OmegaSweep => "fig5_omega_sweep",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        match s.trim() {
            "fig3_wave" | "fig3" => Ok(Preset::Fig3Wave),
            "fig4_ser_vs_rate" | "fig4" => Ok(Preset::Fig4SerVsRate),
            "fig5_omega_sweep" | "fig5" => Ok(Preset::Fig5OmegaSweep),
            "custom" => Ok(Preset::Custom),
            other => Err(SimError::config(format!("unknown preset `{other}`"))),
        }
    }
}

/// How to build one base matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseSpec {
    /// Band matrix with coupling width ω and Λ columns.
    Band { omega: usize, lambda: usize },
    /// 1×1: a standard (non-coupled) SPARC.
    Flat,
    /// 1×`cols`: uncoupled, but NMSE is tracked per column block.
    Row(usize),
    /// Variance matrix read from a headerless CSV file.
    Csv(PathBuf),
}

impl BaseSpec {
    pub fn build(&self, power: f64) -> SimResult<BaseMatrix> {
        let base = match self {
            BaseSpec::Band { omega, lambda } => BaseMatrix::omega_lambda(*omega, *lambda, power)?,
            BaseSpec::Flat => BaseMatrix::flat(power)?,
            BaseSpec::Row(cols) => BaseMatrix::new(1, *cols, vec![power; *cols])?,
            BaseSpec::Csv(path) => {
                let base = basefile::read_base_matrix(path)?;
                if !base.validate_power(power, 1e-9) {
                    return Err(SimError::config(format!(
                        "{}: mean entry {} does not match power {power}",
                        path.display(),
                        base.mean_power()
                    )));
                }
                base
            }
        };
        Ok(base)
    }

    pub fn band(&self) -> Option<(usize, usize)> {
        match *self {
            BaseSpec::Band { omega, lambda } => Some((omega, lambda)),
            _ => None,
        }
    }

    fn parse(token: &str, base_dir: &Path) -> SimResult<Self> {
        let token = token.trim();
        if token == "flat" || token == "1x1" {
            return Ok(BaseSpec::Flat);
        }
        if let Some(cols) = token.strip_prefix("row:") {
            return Ok(BaseSpec::Row(parse_num(cols, "row columns")?));
        }
        if let Some(path) = token.strip_prefix("csv:") {
            return Ok(BaseSpec::Csv(base_dir.join(path.trim())));
        }
        if let Some((w, l)) = token.split_once('x') {
            return Ok(BaseSpec::Band { omega: parse_num(w, "omega")?, lambda: parse_num(l, "lambda")? });
        }
        Err(SimError::config(format!("unrecognised base matrix `{token}`")))
    }
}

impl fmt::Display for BaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseSpec::Band { omega, lambda } => write!(f, "{omega}x{lambda}"),
            BaseSpec::Flat => f.write_str("flat"),
            BaseSpec::Row(cols) => write!(f, "row:{cols}"),
            BaseSpec::Csv(path) => write!(f, "csv:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// L
    pub sections: usize,
    /// M
    pub section_size: usize,
    /// Rates, expressed in `rate_unit`.
    pub rates: Vec<f64>,
    pub rate_unit: RateUnit,
    pub power: f64,
    pub noise_var: f64,
    /// One experiment series per base matrix.
    pub bases: Vec<BaseSpec>,
    pub backend: Backend,
    pub trials: usize,
    pub seed: u64,
    /// `None` uses the decoder default for each base matrix.
    pub max_iter: Option<usize>,
    pub stop_tol: f64,
    /// Reuse one operator for every trial of a rate point.
    pub fixed_operator: bool,
    /// Worker threads; `None` lets the pool decide.
    pub workers: Option<usize>,
    /// Run the Monte Carlo state evolution alongside the trials.
    pub exact_se: bool,
    pub se_samples: usize,
    /// Output directory.
    pub out: Option<PathBuf>,
}

const SWEEP_RATES: [f64; 7] = [1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8];

impl ExperimentConfig {
    /// Defaults for `preset`. `full` selects the trial counts of the
    /// full-scale experiments instead of the desk-scale ones.
    pub fn from_preset(preset: Preset, full: bool) -> Self {
        let band = |omega| BaseSpec::Band { omega, lambda: 32 };
        let (sections, rates, bases, trials, full_trials) = match preset {
            Preset::Fig3Wave => (2048, vec![1.5], vec![band(6)], 20, 100),
            Preset::Fig4SerVsRate => (1024, SWEEP_RATES.to_vec(), vec![band(6), BaseSpec::Flat], 200, 10_000),
            Preset::Fig5OmegaSweep => {
                (1024, SWEEP_RATES.to_vec(), vec![band(2), band(4), band(6), band(8)], 200, 10_000)
            }
            Preset::Custom => (1024, Vec::new(), vec![BaseSpec::Flat], 200, 10_000),
        };
        Self {
            preset,
            sections,
            section_size: 512,
            rates,
            rate_unit: RateUnit::Bits,
            power: 15.0,
            noise_var: 1.0,
            bases,
            backend: Backend::Hadamard,
            trials: if full { full_trials } else { trials },
            seed: 1,
            max_iter: None,
            stop_tol: 1e-8,
            fixed_operator: false,
            workers: None,
            exact_se: true,
            se_samples: 10_000,
            out: None,
        }
    }

    /// Build from ordered `key = value` pairs: the last `preset` pair picks
    /// the defaults, then every other pair is applied in order. Relative
    /// paths resolve against `base_dir`. The result is validated.
    pub fn from_pairs(pairs: &[(String, String)], full: bool, base_dir: &Path) -> SimResult<Self> {
        let preset = match pairs.iter().rev().find(|(k, _)| k == "preset") {
            Some((_, v)) => v.parse()?,
            None => Preset::Custom,
        };
        let mut cfg = Self::from_preset(preset, full);
        let (mut omegas, mut lambda) = (None, None);
        for (key, value) in pairs {
            match key.as_str() {
                "preset" => {}
                "omega" => omegas = Some(parse_list::<usize>(value, "omega")?),
                "lambda" => lambda = Some(parse_num::<usize>(value, "lambda")?),
                _ => cfg.apply(key, value, base_dir)?,
            }
        }
        if omegas.is_some() || lambda.is_some() {
            // the custom preset's 1×1 default is a placeholder, not a baseline
            if preset == Preset::Custom && !pairs.iter().any(|(k, _)| k == "bases" || k == "base") {
                cfg.bases.clear();
            }
            cfg.set_bands(omegas, lambda);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse configuration text; see the module docs for the format.
    pub fn parse(text: &str, full: bool, base_dir: &Path) -> SimResult<Self> {
        Self::from_pairs(&parse_pairs(text)?, full, base_dir)
    }

    pub fn load(path: &Path, full: bool) -> SimResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text, full, path.parent().unwrap_or(Path::new(".")))
    }

    /// Set a single key. Unknown keys are an error.
    pub fn apply(&mut self, key: &str, value: &str, base_dir: &Path) -> SimResult<()> {
        let value = value.trim();
        match key {
            "sections" | "L" => self.sections = parse_num(value, key)?,
            "section_size" | "M" => self.section_size = parse_num(value, key)?,
            "rates" | "rate" => {
                let (rates, unit) = parse_rates(value)?;
                self.rates = rates;
                if let Some(unit) = unit {
                    self.rate_unit = unit;
                }
            }
            "rate_unit" => self.rate_unit = value.parse().map_err(|_| SimError::config("rate_unit must be bits or nats"))?,
            "snr" => {
                self.power = parse_num(value, key)?;
                self.noise_var = 1.0;
            }
            "power" | "P" => self.power = parse_num(value, key)?,
            "noise_var" | "sigma2" => self.noise_var = parse_num(value, key)?,
            "bases" | "base" => {
                self.bases = value.split(',').map(|t| BaseSpec::parse(t, base_dir)).collect::<SimResult<_>>()?
            }
            "backend" => self.backend = value.parse().map_err(|_| SimError::config("backend must be gaussian or hadamard"))?,
            "trials" => self.trials = parse_num(value, key)?,
            "seed" => self.seed = parse_num(value, key)?,
            "max_iter" => self.max_iter = Some(parse_num(value, key)?),
            "stop_tol" => self.stop_tol = parse_num(value, key)?,
            "fixed_operator" => self.fixed_operator = parse_bool(value, key)?,
            "workers" => self.workers = Some(parse_num(value, key)?),
            "exact_se" => self.exact_se = parse_bool(value, key)?,
            "se_samples" => self.se_samples = parse_num(value, key)?,
            "out" => self.out = Some(base_dir.join(value)),
            _ => return Err(SimError::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Replace the band entries of `bases`, keeping any non-band baselines.
    fn set_bands(&mut self, omegas: Option<Vec<usize>>, lambda: Option<usize>) {
        let current: Vec<(usize, usize)> = self.bases.iter().filter_map(BaseSpec::band).collect();
        let lambda = lambda.or(current.first().map(|b| b.1)).unwrap_or(32);
        let omegas = omegas.unwrap_or_else(|| current.iter().map(|b| b.0).collect());
        let others: Vec<BaseSpec> = self.bases.iter().filter(|b| b.band().is_none()).cloned().collect();
        self.bases = omegas.into_iter().map(|omega| BaseSpec::Band { omega, lambda }).chain(others).collect();
    }

    pub fn validate(&self) -> SimResult<()> {
        let fail = |msg: &str| Err(SimError::config(msg));
        if self.rates.is_empty() {
            return fail("rate list is empty");
        }
        if self.rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return fail("rates must be positive");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.bases.is_empty() {
            return fail("no base matrix given");
        }
        if self.sections == 0 || self.section_size < 2 {
            return fail("need L >= 1 and M >= 2");
        }
        if !(self.power > 0.0 && self.power.is_finite()) || !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return fail("power and noise variance must be positive");
        }
        if !(self.stop_tol >= 0.0) {
            return fail("stop_tol must be nonnegative");
        }
        if self.se_samples == 0 || self.workers == Some(0) {
            return fail("se_samples and workers must be at least 1");
        }
        for spec in &self.bases {
            if let BaseSpec::Csv(path) = spec {
                if !path.is_file() {
                    return Err(SimError::config(format!("base matrix file {} not found", path.display())));
                }
            }
            let base = spec.build(self.power).map_err(as_config)?;
            for &rate in &self.rates_nats() {
                self.code_params(&base, rate)
                    .map_err(|e| SimError::config(format!("base {spec}, rate {rate} nats: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn rates_nats(&self) -> Vec<f64> {
        self.rates.iter().map(|&r| convert_rate(r, self.rate_unit, RateUnit::Nats)).collect()
    }

    pub fn snr(&self) -> f64 {
        self.power / self.noise_var
    }

    /// Code parameters for one series and rate point.
    pub fn code_params(&self, base: &BaseMatrix, rate_nats: f64) -> SimResult<CodeParams> {
        Ok(CodeParams::derive(self.sections, self.section_size, rate_nats, base.rows(), base.cols())?
            .with_channel(self.power, self.noise_var)?)
    }
}

fn as_config(e: SimError) -> SimError {
    match e {
        SimError::Core(e) => SimError::config(e.to_string()),
        other => other,
    }
}

/// Split configuration text into ordered key/value pairs.
pub fn parse_pairs(text: &str) -> SimResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SimError::config(format!("line {}: expected key = value", lineno + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> SimResult<T> {
    s.trim().parse().map_err(|_| SimError::config(format!("invalid {what}: `{}`", s.trim())))
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> SimResult<Vec<T>> {
    s.split(',').map(|t| parse_num(t, what)).collect()
}

fn parse_bool(s: &str, what: &str) -> SimResult<bool> {
    match s.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(SimError::config(format!("invalid {what}: `{other}`"))),
    }
}

/// Parse `a,b,c` or `start:stop:step` (inclusive), optionally followed by a
/// unit word.
pub fn parse_rates(s: &str) -> SimResult<(Vec<f64>, Option<RateUnit>)> {
    let mut s = s.trim();
    let mut unit = None;
    for (suffix, u) in [("bits", RateUnit::Bits), ("nats", RateUnit::Nats)] {
        if let Some(rest) = s.strip_suffix(suffix) {
            s = rest.trim();
            unit = Some(u);
        }
    }
    let parts: Vec<&str> = s.split(':').collect();
    let rates = match parts.as_slice() {
        [list] => parse_list(list, "rate")?,
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) =
                (parse_num(start, "rate")?, parse_num(stop, "rate")?, parse_num(step, "rate step")?);
            if !(step > 0.0) || stop < start {
                return Err(SimError::config("rate range needs start <= stop and step > 0"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // round away accumulated binary noise, e.g. 1.7000000000000002
            (0..count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect()
        }
        _ => return Err(SimError::config(format!("invalid rate list `{s}`"))),
    };
    Ok((rates, unit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn here() -> &'static Path {
        Path::new(".")
    }

    #[test]
    fn preset_defaults() {
        let c = ExperimentConfig::from_preset(Preset::Fig3Wave, false);
        assert_eq!((c.sections, c.section_size, c.trials), (2048, 512, 20));
        assert_eq!(c.bases, vec![BaseSpec::Band { omega: 6, lambda: 32 }]);
        assert_eq!(ExperimentConfig::from_preset(Preset::Fig3Wave, true).trials, 100);
        assert_eq!(ExperimentConfig::from_preset(Preset::Fig5OmegaSweep, true).trials, 10_000);
        c.validate().unwrap();
    }

    #[test]
    fn rate_lists_and_ranges() {
        assert_eq!(parse_rates("1.5").unwrap(), (vec![1.5], None));
        assert_eq!(parse_rates("0.5, 0.7 nats").unwrap(), (vec![0.5, 0.7], Some(RateUnit::Nats)));
        let (r, u) = parse_rates("1.2:1.8:0.1 bits").unwrap();
        assert_eq!(r, SWEEP_RATES.to_vec());
        assert_eq!(u, Some(RateUnit::Bits));
        assert!(parse_rates("1.8:1.2:0.1").is_err());
        assert!(parse_rates("x").is_err());
    }

    #[test]
    fn parses_text() {
        let text = "# sweep\npreset = fig5\nrates = 1.6 bits\nomega = 2,6\nlambda = 16\ntrials = 3 # few\nbackend = gaussian\n";
        let c = ExperimentConfig::parse(text, false, here()).unwrap();
        assert_eq!(c.preset, Preset::Fig5OmegaSweep);
        assert_eq!(c.rates, vec![1.6]);
        assert_eq!(c.bases, vec![BaseSpec::Band { omega: 2, lambda: 16 }, BaseSpec::Band { omega: 6, lambda: 16 }]);
        assert_eq!(c.trials, 3);
        assert_eq!(c.backend, Backend::Gaussian);
    }

    #[test]
    fn omega_override_keeps_baseline() {
        let pairs = vec![("preset".into(), "fig4".into()), ("omega".into(), "4".into())];
        let c = ExperimentConfig::from_pairs(&pairs, false, here()).unwrap();
        assert_eq!(c.bases, vec![BaseSpec::Band { omega: 4, lambda: 32 }, BaseSpec::Flat]);
        let c = ExperimentConfig::parse("rates = 1 bits\nomega = 3\nlambda = 8", false, here()).unwrap();
        assert_eq!(c.bases, vec![BaseSpec::Band { omega: 3, lambda: 8 }]);
        let c = ExperimentConfig::parse("rates = 1 bits\nbases = flat\nomega = 3\nlambda = 8", false, here()).unwrap();
        assert_eq!(c.bases, vec![BaseSpec::Band { omega: 3, lambda: 8 }, BaseSpec::Flat]);
    }

    #[test]
    fn invalid_configs() {
        let bad = |text: &str| ExperimentConfig::parse(text, false, here()).unwrap_err();
        assert!(bad("preset = custom").is_config()); // empty rate list
        assert!(bad("rates = 1\ntrials = 0").is_config());
        assert!(bad("rates = 1\nbogus = 3").is_config());
        assert!(bad("rates = 1\nbases = csv:/nonexistent/w.csv").is_config());
        assert!(bad("rates = 1\nbases = 6x8").is_config()); // Λ < 2ω−1
        assert!(bad("rates = 1\nbases = 2x3\nsections = 10").is_config()); // L % Λ
        assert!(bad("rates = 1 bits\nsnr = -1").is_config());
        assert!(bad("just words").is_config());
    }

    #[test]
    fn csv_base_is_loaded() {
        let dir = tempfile::tempdir().unwrap();
        let w = BaseMatrix::omega_lambda(2, 4, 15.0).unwrap();
        basefile::write_base_matrix(&dir.path().join("w.csv"), &w).unwrap();
        let c = ExperimentConfig::parse("rates = 1 bits\nbases = csv:w.csv\nsections = 64", false, dir.path()).unwrap();
        assert_eq!(c.bases[0].build(c.power).unwrap().entries(), w.entries());
        let off = ExperimentConfig::parse("rates = 1 bits\nbases = csv:w.csv\nsnr = 7\nsections = 64", false, dir.path());
        assert!(off.unwrap_err().is_config());
    }
}
