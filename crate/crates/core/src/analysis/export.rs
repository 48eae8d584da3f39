//! CSV exports of the analyses.

use std::io::Write;

use super::informativeness::{Informativeness, PassProportions};
use super::split::{OutputQuantiles, PairDensity, QUANTILE_LEVELS};
use crate::error::Result;

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => String::new(),
    }
}

/// Generic labelled matrix; missing or non-finite entries are left blank.
pub fn write_matrix_csv<W: Write>(
    w: W,
    corner: &str,
    rows: &[String],
    cols: &[String],
    values: &[Vec<Option<f64>>],
) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec![corner.to_string()];
    header.extend(cols.iter().cloned());
    wr.write_record(&header)?;
    for (name, row) in rows.iter().zip(values) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|&v| cell(v)));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Long table `sample,input,resolution`.
pub fn write_variance_resolution_csv<W: Write>(w: W, input_names: &[String], sets: &[(String, Vec<f64>)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["sample", "input", "resolution"])?;
    for (label, vals) in sets {
        for (name, v) in input_names.iter().zip(vals) {
            wr.write_record([label.as_str(), name.as_str(), &cell(Some(*v))])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_informativeness_csv<W: Write>(w: W, input_names: &[String], inf: &Informativeness) -> Result<()> {
    let mut rows: Vec<String> = input_names.to_vec();
    let mut values: Vec<Vec<Option<f64>>> = inf.values.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect();
    rows.push("passing_runs".into());
    values.push(inf.passing.iter().map(|&p| Some(p as f64)).collect());
    rows.push("low_confidence".into());
    values.push(inf.low_confidence.iter().map(|&b| Some(if b { 1.0 } else { 0.0 })).collect());
    write_matrix_csv(w, "input", &rows, &inf.outputs, &values)
}

pub fn write_pass_proportions_csv<W: Write>(w: W, pp: &PassProportions) -> Result<()> {
    let rows: Vec<String> = pp.waves.iter().map(|k| k.to_string()).collect();
    let values: Vec<Vec<Option<f64>>> = pp.values.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect();
    write_matrix_csv(w, "wave", &rows, &pp.outputs, &values)
}

/// Long table of 2-d histogram cells with the group's HDR count levels.
pub fn write_pairs_density_csv<W: Write>(w: W, input_names: &[String], densities: &[PairDensity]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "group", "input_a", "input_b", "a_lo", "a_hi", "b_lo", "b_hi", "count", "hdr50_level", "hdr90_level",
    ])?;
    for d in densities {
        let wa = (d.range_a.1 - d.range_a.0) / d.bins as f64;
        let wb = (d.range_b.1 - d.range_b.0) / d.bins as f64;
        for i in 0..d.bins {
            for j in 0..d.bins {
                let c = d.counts[i * d.bins + j];
                wr.write_record([
                    d.group.clone(),
                    input_names[d.a].clone(),
                    input_names[d.b].clone(),
                    (d.range_a.0 + wa * i as f64).to_string(),
                    (d.range_a.0 + wa * (i + 1) as f64).to_string(),
                    (d.range_b.0 + wb * j as f64).to_string(),
                    (d.range_b.0 + wb * (j + 1) as f64).to_string(),
                    c.to_string(),
                    d.hdr_levels[0].to_string(),
                    d.hdr_levels[1].to_string(),
                ])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_quantiles_csv<W: Write>(w: W, output_names: &[String], qs: &[OutputQuantiles]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["group".to_string(), "output".to_string()];
    header.extend(QUANTILE_LEVELS.iter().map(|p| format!("q{}", (p * 100.0).round())));
    wr.write_record(&header)?;
    for q in qs {
        let mut rec = vec![q.group.clone(), output_names[q.output].clone()];
        rec.extend(q.quantiles.iter().map(|&v| cell(Some(v))));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}
