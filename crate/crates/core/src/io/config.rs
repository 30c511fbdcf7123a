//! Plain key-value configuration for the fit pipeline. Lines are
//! `key = value` (the `=` is optional); `#` starts a comment. Every schedule
//! parameter and hyperparameter is overridable.

use thiserror::Error;

use crate::math::{vec3, Aabb, Vec3};
use crate::optimize::{Schedule, B_MIN};

#[derive(Error, Debug, Clone, PartialEq)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub convexes: usize,
    pub planes: usize,
    pub steps: usize,
    pub seed: u64,
    pub views: usize,
    pub densify_events: usize,
    pub purge_every: usize,
    pub volume_threshold_rel: f64,
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub lr_translation: f64,
    pub lr_planes: f64,
    pub b_min: f64,
    pub tolerance: f64,
    pub region_min: Vec3,
    pub region_max: Vec3,
}

impl Default for FitConfig {
    fn default() -> FitConfig {
        FitConfig {
            convexes: 32,
            planes: 16,
            steps: 20000,
            seed: 0,
            views: 16,
            densify_events: 10,
            purge_every: 250,
            volume_threshold_rel: 1e-5,
            sigma_start: 1.0,
            sigma_end: 0.0625,
            lr_translation: 1e-2,
            lr_planes: 1e-3,
            b_min: B_MIN,
            tolerance: crate::hull::DEFAULT_TOLERANCE,
            region_min: vec3(-1.0, -1.0, -1.0),
            region_max: vec3(1.0, 1.0, 1.0),
        }
    }
}

impl FitConfig {
    pub fn region(&self) -> Aabb {
        Aabb::new(self.region_min, self.region_max)
    }

    /// Densify/spawn events spread evenly over the first 80% of steps.
    pub fn schedule(&self) -> Schedule {
        let mut s = Schedule::for_steps(self.steps);
        s.densify_steps = (1..=self.densify_events)
            .map(|i| {
                ((i as f64 / self.densify_events.max(1) as f64) * 0.8 * self.steps as f64).round()
                    as usize
            })
            .filter(|&step| step >= 1 && step < self.steps)
            .collect();
        s.purge_every = self.purge_every;
        s.volume_threshold_rel = self.volume_threshold_rel;
        s.sigma_start = self.sigma_start;
        s.sigma_end = self.sigma_end;
        s.lr_translation = self.lr_translation;
        s.lr_planes = self.lr_planes;
        s.b_min = self.b_min;
        s.tolerance = self.tolerance;
        s
    }
}

/// Parses overrides on top of the defaults.
pub fn parse_config(text: &str) -> Result<FitConfig, ConfigError> {
    let mut cfg = FitConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |message: String| ConfigError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let cleaned = content.replace('=', " ");
        let mut tokens = cleaned.split_whitespace();
        let key = tokens.next().unwrap();
        let values: Vec<&str> = tokens.collect();
        let one = || -> Result<&str, ConfigError> {
            if values.len() == 1 {
                Ok(values[0])
            } else {
                Err(err(format!("'{key}' expects one value")))
            }
        };
        let as_f64 = |tok: &str| -> Result<f64, ConfigError> {
            tok.parse().map_err(|_| err(format!("bad number '{tok}'")))
        };
        let as_usize = |tok: &str| -> Result<usize, ConfigError> {
            tok.parse().map_err(|_| err(format!("bad count '{tok}'")))
        };
        match key {
            "convexes" => cfg.convexes = as_usize(one()?)?,
            "planes" => cfg.planes = as_usize(one()?)?,
            "steps" => cfg.steps = as_usize(one()?)?,
            "seed" => {
                cfg.seed = one()?
                    .parse()
                    .map_err(|_| err("bad seed".into()))?
            }
            "views" => cfg.views = as_usize(one()?)?,
            "densify_events" => cfg.densify_events = as_usize(one()?)?,
            "purge_every" => cfg.purge_every = as_usize(one()?)?,
            "volume_threshold_rel" => cfg.volume_threshold_rel = as_f64(one()?)?,
            "sigma_start" => cfg.sigma_start = as_f64(one()?)?,
            "sigma_end" => cfg.sigma_end = as_f64(one()?)?,
            "lr_translation" => cfg.lr_translation = as_f64(one()?)?,
            "lr_planes" => cfg.lr_planes = as_f64(one()?)?,
            "b_min" => cfg.b_min = as_f64(one()?)?,
            "tolerance" => cfg.tolerance = as_f64(one()?)?,
            "region" => {
                if values.len() != 6 {
                    return Err(err("'region' expects 6 numbers (min xyz, max xyz)".into()));
                }
                let mut v = [0.0f64; 6];
                for (slot, tok) in v.iter_mut().zip(&values) {
                    *slot = as_f64(tok)?;
                }
                cfg.region_min = vec3(v[0], v[1], v[2]);
                cfg.region_max = vec3(v[3], v[4], v[5]);
            }
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }
    Ok(cfg)
}
