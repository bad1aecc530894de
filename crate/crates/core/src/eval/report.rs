use std::fmt::Write as _;

use super::EvalReport;

/// Side-by-side table of several reports (typically exact and partial).
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut types: Vec<&String> = reports.iter().flat_map(|r| r.per_type.keys()).collect();
    types.sort();
    types.dedup();
    let width = types.iter().map(|t| t.len()).max().unwrap_or(0).max(5);

    let mut out = String::new();
    write!(out, "{:width$}", "type").unwrap();
    for r in reports {
        let m = r.mode.to_string();
        write!(out, "  {:>7} {:>5} {:>5} {:>5}", format!("{m}:P"), "R", "F1", "TP").unwrap();
    }
    out.push('\n');
    let row = |out: &mut String, name: &str, pick: &dyn Fn(&EvalReport) -> Option<super::Scores>| {
        write!(out, "{name:width$}").unwrap();
        for r in reports {
            let s = pick(r).unwrap_or_default();
            write!(out, "  {:>7.3} {:>5.3} {:>5.3} {:>5}", s.precision, s.recall, s.f1, s.tp).unwrap();
        }
        out.push('\n');
    };
    for t in &types {
        row(&mut out, t, &|r| r.per_type.get(*t).copied());
    }
    row(&mut out, "micro", &|r| Some(r.micro));
    out
}

/// `mode.scope.field=value` lines, one per number.
pub fn render_key_values(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let scopes = r
            .per_type
            .iter()
            .map(|(k, v)| (k.as_str(), v))
            .chain(std::iter::once(("micro", &r.micro)));
        for (scope, s) in scopes {
            let m = r.mode;
            writeln!(out, "{m}.{scope}.tp={}", s.tp).unwrap();
            writeln!(out, "{m}.{scope}.fp={}", s.fp).unwrap();
            writeln!(out, "{m}.{scope}.fn={}", s.fn_).unwrap();
            writeln!(out, "{m}.{scope}.precision={:.6}", s.precision).unwrap();
            writeln!(out, "{m}.{scope}.recall={:.6}", s.recall).unwrap();
            writeln!(out, "{m}.{scope}.f1={:.6}", s.f1).unwrap();
        }
    }
    out
}
