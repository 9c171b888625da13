//! Step schedules. Stepsizes are realized as integer step counts
//! `n = round(T / h)` so every run lands exactly on `t_end`; the realized
//! `h = T / n` is what gets reported.

use fimex_core::Error;

/// Logarithmically spaced step counts covering `h in [h_min, h_max]` for a
/// horizon `t_end` (duplicates collapsed, ascending in `n`).
pub fn log_step_schedule(h_max: f64, h_min: f64, count: usize, t_end: f64) -> Vec<usize> {
    assert!(h_max > h_min && h_min > 0.0 && count >= 2);
    let mut steps = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        let h = h_max * (h_min / h_max).powf(t);
        let n = (t_end / h).round().max(1.0) as usize;
        steps.push(n);
    }
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// Parse a `--steps` argument: either an explicit comma list (`200,400,800`)
/// or a log-spaced range `n_lo:n_hi:count`.
pub fn parse_steps_arg(arg: &str) -> Result<Vec<usize>, Error> {
    if arg.contains(':') {
        let parts: Vec<&str> = arg.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "expected lo:hi:count, got '{arg}'"
            )));
        }
        let lo: usize = parts[0]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad step count '{}'", parts[0])))?;
        let hi: usize = parts[1]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad step count '{}'", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad count '{}'", parts[2])))?;
        if lo == 0 || hi <= lo || count < 2 {
            return Err(Error::InvalidInput(format!("degenerate range '{arg}'")));
        }
        let mut steps = Vec::with_capacity(count);
        for i in 0..count {
            let t = i as f64 / (count - 1) as f64;
            let n = (lo as f64 * (hi as f64 / lo as f64).powf(t)).round() as usize;
            steps.push(n.max(1));
        }
        steps.sort_unstable();
        steps.dedup();
        Ok(steps)
    } else {
        let mut steps = Vec::new();
        for tok in arg.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            steps.push(
                tok.parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("bad step count '{tok}'")))?,
            );
        }
        if steps.is_empty() {
            return Err(Error::InvalidInput("empty step schedule".into()));
        }
        Ok(steps)
    }
}
