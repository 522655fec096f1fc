//! Named closed-form formulas for the `oracle` subcommand.

use hbt_core::model::constants::{HELIUM3_MASS, HELIUM4_MASS};
use hbt_core::oracles::{
    blurred_length, contrast_reduction, correlation_length_atoms, correlation_length_light,
    einstein_variance, phase_cell_count, shot_noise_fraction, source_angular_size_from_width,
    two_particle_probability, AmplitudePair,
};
use hbt_core::Statistics;
use num_complex::Complex64;

use crate::error::{LabError, Result};

pub struct Formula {
    pub name: &'static str,
    pub args: &'static str,
    pub formula: &'static str,
}

pub const FORMULAS: &[Formula] = &[
    Formula { name: "einstein-variance", args: "<mean> <g> <boson|fermion|poisson>", formula: "<N> + s <N>^2/g" },
    Formula { name: "phase-cell-count", args: "<dx> <dp>", formula: "(dx dp / h)^3" },
    Formula { name: "shot-noise", args: "<mean>", formula: "1/sqrt(<N>)" },
    Formula {
        name: "two-particle-probability",
        args: "<boson|fermion|distinguishable> <a1> <a2> <b1> <b2> (complex as re,im)",
        formula: "|a1 b2 + s a2 b1|^2",
    },
    Formula { name: "g2-zero", args: "<statistics>", formula: "1 + s" },
    Formula { name: "analytic-g2", args: "<statistics> <|g1|>", formula: "1 + s |g1|^2" },
    Formula { name: "corr-length-light", args: "<lambda> <L> <s>", formula: "lambda L / (2 pi s)" },
    Formula { name: "corr-length-atoms", args: "<m> <t> <s>", formula: "h t / (2 pi m s)" },
    Formula { name: "source-angular-size", args: "<lambda> <width>", formula: "lambda / (2 pi width)" },
    Formula {
        name: "contrast-reduction",
        args: "<lx> <ly> <lz> <dx> <dy> <dz>",
        formula: "prod l / sqrt(l^2 + 4 d^2)",
    },
    Formula { name: "measured-length", args: "<l> <d>", formula: "sqrt(l^2 + 4 d^2)" },
];

fn usage(msg: impl Into<String>) -> LabError {
    LabError::Usage(msg.into())
}

fn real(s: &str) -> Result<f64> {
    match s.to_ascii_lowercase().as_str() {
        "helium4" | "he4" => return Ok(HELIUM4_MASS),
        "helium3" | "he3" => return Ok(HELIUM3_MASS),
        _ => {}
    }
    s.parse::<f64>().map_err(|_| usage(format!("not a number: `{s}`")))
}

fn complex(s: &str) -> Result<Complex64> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    Ok(Complex64::new(real(re)?, real(im)?))
}

fn statistics(s: &str) -> Result<Statistics> {
    if s.eq_ignore_ascii_case("poisson") {
        return Ok(Statistics::Coherent);
    }
    s.parse::<Statistics>().map_err(|e| usage(e.to_string()))
}

pub fn list() -> String {
    FORMULAS.iter().map(|f| format!("  {} {}\n", f.name, f.args)).collect()
}

/// Evaluates a formula; returns the printed `name=… value=… formula=…` line.
pub fn evaluate(name: &str, args: &[String]) -> Result<String> {
    let f = FORMULAS
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| usage(format!("unknown formula `{name}`; available:\n{}", list())))?;
    let want = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(usage(format!("{} expects {} ({n} arguments), got {}", f.name, f.args, args.len())))
        }
    };
    let r = |i: usize| real(&args[i]);
    let value = match name {
        "einstein-variance" => {
            want(3)?;
            einstein_variance(r(0)?, r(1)?, statistics(&args[2])?)?
        }
        "phase-cell-count" => {
            want(2)?;
            phase_cell_count(r(0)?, r(1)?)?
        }
        "shot-noise" => {
            want(1)?;
            shot_noise_fraction(r(0)?)
        }
        "two-particle-probability" => {
            want(5)?;
            let amps =
                AmplitudePair::new(complex(&args[1])?, complex(&args[2])?, complex(&args[3])?, complex(&args[4])?);
            two_particle_probability(&amps, statistics(&args[0])?)
        }
        "g2-zero" => {
            want(1)?;
            1.0 + statistics(&args[0])?.exchange_sign() as f64
        }
        "analytic-g2" => {
            want(2)?;
            let g1 = r(1)?;
            1.0 + statistics(&args[0])?.exchange_sign() as f64 * g1 * g1
        }
        "corr-length-light" => {
            want(3)?;
            correlation_length_light(r(0)?, r(1)?, r(2)?)
        }
        "corr-length-atoms" => {
            want(3)?;
            correlation_length_atoms(r(0)?, r(1)?, r(2)?)
        }
        "source-angular-size" => {
            want(2)?;
            source_angular_size_from_width(r(0)?, r(1)?)
        }
        "contrast-reduction" => {
            want(6)?;
            contrast_reduction([r(0)?, r(1)?, r(2)?], [r(3)?, r(4)?, r(5)?])
        }
        "measured-length" => {
            want(2)?;
            blurred_length(r(0)?, r(1)?)
        }
        _ => unreachable!("listed formula without evaluator"),
    };
    Ok(format!("name={} value={value:e} formula={}", f.name, f.formula))
}
