use std::fmt::Write as _;
use std::path::PathBuf;

use srl_core::ClosedForm;

use crate::error::CliError;
use crate::load_config;

pub struct OracleArgs<'a> {
    pub what: &'a String,
    pub config: Option<&'a PathBuf>,
    pub x: &'a String,
    pub q: &'a String,
    pub z: &'a String,
    pub points: usize,
    pub out: Option<&'a PathBuf>,
}

fn number(s: &str, flag: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("--{flag}: '{s}' is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{flag}: '{s}' is not finite")))
    }
}

/// `lo..hi` expands to `points` evenly spaced values; otherwise a comma list.
pub fn parse_grid(text: &str, points: usize, flag: &str) -> Result<Vec<f64>, CliError> {
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (number(lo, flag)?, number(hi, flag)?);
        if hi < lo {
            return Err(CliError::Usage(format!("--{flag}: empty range {text}")));
        }
        return match points {
            0 => Err(CliError::Usage("--points must be positive".into())),
            1 => Ok(vec![lo]),
            n => Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    let v = text.split(',').map(|s| number(s, flag)).collect::<Result<Vec<_>, _>>()?;
    Ok(v)
}

fn levels(text: &str, points: usize) -> Result<Vec<f64>, CliError> {
    let z = parse_grid(text, points, "z")?;
    match z.iter().find(|&&z| !(z > 0.0 && z < 1.0)) {
        Some(bad) => Err(CliError::Usage(format!("--z: level {bad} outside (0, 1)"))),
        None => Ok(z),
    }
}

pub fn render(args: &OracleArgs) -> Result<String, CliError> {
    let cfg = load_config(args.config)?;
    let cf = ClosedForm::new(cfg.params).map_err(CliError::Config)?;
    let mut s = String::new();
    match args.what.as_str() {
        "boundary" => {
            let k = cf.constants();
            let _ = writeln!(s, "x_hat = {:?}", k.x_hat);
            let _ = writeln!(s, "b = {:?}", k.b);
            let _ = writeln!(s, "l = {:?}", k.l);
            let _ = writeln!(s, "c_a = {:?}", k.c_a);
            let _ = writeln!(s, "c_b = {:?}", k.c_b);
            let _ = writeln!(s, "phi_x_hat = {:?}", cf.phi_at_boundary());
        }
        "phi" | "psi" | "gamma" => {
            let xs = parse_grid(args.x, args.points, "x")?;
            let q = number(args.q, "q")?;
            if q < 0.0 {
                return Err(CliError::Usage(format!("--q must be nonnegative, got {q}")));
            }
            s.push_str("x,value\n");
            for x in xs {
                let v = match args.what.as_str() {
                    "phi" => cf.phi(x),
                    "psi" => cf.psi(x, q),
                    _ => cf.gamma(x),
                };
                let _ = writeln!(s, "{x:?},{v:?}");
            }
        }
        "v" => {
            let xs = parse_grid(args.x, args.points, "x")?;
            let zs = levels(args.z, args.points)?;
            s.push_str("x,z,value\n");
            for &x in &xs {
                for &z in &zs {
                    let v = cf.outer_value_v(x, z)?;
                    let _ = writeln!(s, "{x:?},{z:?},{v:?}");
                }
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown oracle '{other}' (expected phi, psi, gamma, v or boundary)"
            )))
        }
    }
    Ok(s)
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let text = render(args)?;
    match args.out {
        Some(p) => std::fs::write(p, text).map_err(CliError::write(p)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
