//! Step-size lists: `0.1`, `0.1,0.05`, `2^-4`, `2^-4..2^-12`.

/// Longest list a single range may expand to.
pub const MAX_RANGE_LEN: usize = 1024;

fn scalar(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty entry".into());
    }
    let v = match s.split_once('^') {
        Some((b, k)) => {
            let (base, exp) = power(b, k)?;
            base.powi(exp)
        }
        None => s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("`{s}` must be positive and finite"));
    }
    Ok(v)
}

fn power(b: &str, k: &str) -> Result<(f64, i32), String> {
    let base: f64 = b.trim().parse().map_err(|_| format!("bad base `{}`", b.trim()))?;
    if !(base.is_finite() && base > 0.0 && base != 1.0) {
        return Err(format!("base `{}` must be positive and not 1", b.trim()));
    }
    let exp: i32 = k.trim().parse().map_err(|_| format!("bad exponent `{}`", k.trim()))?;
    if exp.unsigned_abs() > 1074 {
        return Err(format!("exponent {exp} out of range"));
    }
    Ok((base, exp))
}

fn range(a: &str, b: &str) -> Result<Vec<f64>, String> {
    let (pa, pb) = match (a.split_once('^'), b.split_once('^')) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(format!("range `{a}..{b}` needs powers on both ends, like 2^-4..2^-12")),
    };
    let (base, lo) = power(pa.0, pa.1)?;
    let (base2, hi) = power(pb.0, pb.1)?;
    if base != base2 {
        return Err(format!("range `{a}..{b}` mixes bases {base} and {base2}"));
    }
    let len = (hi - lo).unsigned_abs() as usize + 1;
    if len > MAX_RANGE_LEN {
        return Err(format!(
            "range `{a}..{b}` expands to {len} values (limit {MAX_RANGE_LEN})"
        ));
    }
    let step = if hi >= lo { 1 } else { -1 };
    let mut out = Vec::with_capacity(len);
    let mut k = lo;
    loop {
        let v = base.powi(k);
        if !(v.is_finite() && v > 0.0) {
            return Err(format!("{base}^{k} is not a positive finite number"));
        }
        out.push(v);
        if k == hi {
            break;
        }
        k += step;
    }
    Ok(out)
}

/// Parses a comma-separated list of scalars and inclusive power ranges.
/// Order is preserved and duplicates are kept.
pub fn parse_h_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        match item.split_once("..") {
            Some((a, b)) => out.extend(range(a.trim(), b.trim())?),
            None => out.push(scalar(item)?),
        }
        if out.len() > MAX_RANGE_LEN {
            return Err(format!("list longer than {MAX_RANGE_LEN} values"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forms() {
        assert_eq!(parse_h_list("0.1").unwrap(), vec![0.1]);
        assert_eq!(parse_h_list("0.1, 0.05").unwrap(), vec![0.1, 0.05]);
        assert_eq!(parse_h_list("2^-3").unwrap(), vec![0.125]);
        let r = parse_h_list("2^-4..2^-12").unwrap();
        assert_eq!(r.len(), 9);
        assert_eq!(r[0], 0.0625);
        assert_eq!(r[8], 2f64.powi(-12));
        assert_eq!(parse_h_list("2^-2..2^-1,0.01").unwrap(), vec![0.25, 0.5, 0.01]);
    }

    #[test]
    fn rejects() {
        for bad in [
            "",
            "0",
            "-1",
            "nan",
            "inf",
            "2^-4..3^-5",
            "0.1..0.2",
            "1^3",
            "2^x",
            "2^-4..2^-2000",
            ",",
            "2^-1..2^-1100",
        ] {
            assert!(parse_h_list(bad).is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn range_length_and_ratio(a in -40i32..0, b in -40i32..0) {
            let v = parse_h_list(&format!("2^{a}..2^{b}")).unwrap();
            prop_assert_eq!(v.len(), (a - b).unsigned_abs() as usize + 1);
            for w in v.windows(2) {
                let r = w[1] / w[0];
                prop_assert!(r == 2.0 || r == 0.5);
            }
        }

        #[test]
        fn never_panics(s in ".{0,40}") {
            let _ = parse_h_list(&s);
        }
    }
}
