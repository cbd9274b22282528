//! Parsing of the `--points` argument: either a comma-separated list of
//! levels or `logrange(a,b,k)` for `k` log-spaced points from `a` to `b`
//! inclusive.

pub fn parse_points(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if let Some(body) = spec.strip_prefix("logrange(").and_then(|s| s.strip_suffix(')')) {
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err("logrange takes exactly (start, stop, count)".into());
        }
        let a: f64 = parts[0].parse().map_err(|_| format!("bad logrange start '{}'", parts[0]))?;
        let b: f64 = parts[1].parse().map_err(|_| format!("bad logrange stop '{}'", parts[1]))?;
        let k: usize = parts[2].parse().map_err(|_| format!("bad logrange count '{}'", parts[2]))?;
        if !(a > 0.0 && b > a && a.is_finite() && b.is_finite()) {
            return Err("logrange needs 0 < start < stop, both finite".into());
        }
        if k < 2 {
            return Err("logrange needs at least 2 points".into());
        }
        let (la, lb) = (a.log10(), b.log10());
        return Ok((0..k)
            .map(|i| 10f64.powf(la + (lb - la) * i as f64 / (k - 1) as f64))
            .collect());
    }
    let mut out = Vec::new();
    for tok in spec.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let x: f64 = tok.parse().map_err(|_| format!("bad level '{}'", tok))?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(format!("level {} must be finite and positive", x));
        }
        out.push(x);
    }
    if out.is_empty() {
        return Err("no levels given".into());
    }
    Ok(out)
}
