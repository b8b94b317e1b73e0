//! CSV formats. Numbers are written with 6 significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{FlightTrace, MarkovFit, SweepTable};
use crate::scene::{Building, ItuParams, UrbanScene};

pub const SCENE_HEADER: [&str; 4] = ["center_x_m", "center_y_m", "half_side_m", "height_m"];
pub const TRACE_HEADER: [&str; 4] = ["step", "x_m", "y_m", "state"];
pub const MARKOV_HEADER: [&str; 9] = [
    "tx_h_m",
    "rx_h_m",
    "p01",
    "p10",
    "mu_per_m",
    "lambda_per_m",
    "mean_dlos_m",
    "mean_dnlos_m",
    "ks_los",
];
pub const SWEEP_HEADER: [&str; 12] = [
    "tx_h_m",
    "rx_h_m",
    "plos_mc",
    "plos_ci95",
    "plos_closed",
    "plos_numeric_poly",
    "plos_numeric_gauss",
    "mu_per_m",
    "lambda_per_m",
    "mean_dlos_m",
    "mean_dnlos_m",
    "ks_los",
];

/// Formats with 6 significant digits, trimming trailing zeros.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp).max(0) as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(e: std::io::Error) -> Error {
    Error::Csv(csv::Error::from(e))
}

fn write_rows<W: Write, I>(w: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

pub fn write_scene<W: Write>(scene: &UrbanScene, mut w: W) -> Result<()> {
    let p = scene.params();
    writeln!(
        w,
        "# patch_side_m={} alpha={} beta_per_km2={} gamma_m={} seed={}",
        fmt_num(p.patch_side_m),
        fmt_num(p.alpha),
        fmt_num(p.beta_per_km2),
        fmt_num(p.gamma_m),
        scene.seed()
    )
    .map_err(io_err)?;
    let rows = scene.buildings().iter().map(|b| {
        vec![
            fmt_num(b.center_x),
            fmt_num(b.center_y),
            fmt_num(b.half_side),
            fmt_num(b.height),
        ]
    });
    write_rows(w, &SCENE_HEADER, rows)
}

fn meta_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Format {
            what: "scene",
            reason: format!("comment line lacks `{key}=`"),
        })
}

fn num<T: std::str::FromStr>(what: &'static str, field: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Format {
        what,
        reason: format!("bad number `{field}`"),
    })
}

/// Reads a scene written by [`write_scene`]. The street correction is not
/// stored and takes its default.
pub fn read_scene<R: Read>(r: R) -> Result<UrbanScene> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first).map_err(io_err)?;
    let first = first.trim();
    if !first.starts_with('#') {
        return Err(Error::Format {
            what: "scene",
            reason: "missing `# patch_side_m=…` comment line".into(),
        });
    }
    let params = ItuParams::new(
        num("scene", meta_value(first, "alpha")?)?,
        num("scene", meta_value(first, "beta_per_km2")?)?,
        num("scene", meta_value(first, "gamma_m")?)?,
        ItuParams::DEFAULT_D_CORRECTION,
        num("scene", meta_value(first, "patch_side_m")?)?,
    )?;
    let seed: u64 = num("scene", meta_value(first, "seed")?)?;
    let (header, rows) = read_numeric(r)?;
    if header != SCENE_HEADER {
        return Err(Error::Format {
            what: "scene",
            reason: format!("unexpected header {header:?}"),
        });
    }
    let buildings = rows
        .into_iter()
        .map(|v| Building {
            center_x: v[0],
            center_y: v[1],
            half_side: v[2],
            height: v[3],
        })
        .collect();
    UrbanScene::from_buildings(params, seed, buildings)
}

/// Reads any all-numeric CSV emitted by this crate, skipping `#` lines.
pub fn read_numeric<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|f| num("csv", f)).collect::<Result<Vec<f64>>>()?);
    }
    Ok((header, rows))
}

pub fn write_trace<W: Write>(trace: &FlightTrace, w: W) -> Result<()> {
    let rows = trace
        .points
        .iter()
        .zip(trace.trace.states())
        .enumerate()
        .map(|(i, (&(x, y), &s))| vec![i.to_string(), fmt_num(x), fmt_num(y), (s as u8).to_string()]);
    write_rows(w, &TRACE_HEADER, rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), fmt_num)
}

pub fn write_markov_summary<'a, W: Write>(fits: impl IntoIterator<Item = &'a MarkovFit>, w: W) -> Result<()> {
    let rows = fits.into_iter().map(|r| {
        vec![
            fmt_num(r.tx_h),
            fmt_num(r.rx_h),
            opt(r.transitions.p01()),
            opt(r.transitions.p10()),
            fmt_num(r.mu),
            fmt_num(r.lambda),
            fmt_num(r.mean_dlos),
            fmt_num(r.mean_dnlos),
            fmt_num(r.ks_los),
        ]
    });
    write_rows(w, &MARKOV_HEADER, rows)
}

/// Writes an all-numeric table with the given header.
pub fn write_numeric<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    write_rows(w, header, rows.into_iter().map(|r| r.into_iter().map(fmt_num).collect()))
}

pub fn write_sweep<W: Write>(table: &SweepTable, w: W) -> Result<()> {
    let rows = table.rows.iter().map(|r| {
        [
            r.tx_h,
            r.rx_h,
            r.plos_mc,
            r.plos_ci95,
            r.plos_closed,
            r.plos_numeric_poly,
            r.plos_numeric_gauss,
            r.markov.mu,
            r.markov.lambda,
            r.markov.mean_dlos,
            r.markov.mean_dnlos,
            r.markov.ks_los,
        ]
        .iter()
        .map(|&v| fmt_num(v))
        .collect()
    });
    write_rows(w, &SWEEP_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::generate_scene;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(0.739_512_34), "0.739512");
        assert_eq!(fmt_num(775.0), "775");
        assert_eq!(fmt_num(13.3), "13.3");
        assert_eq!(fmt_num(123_456.7), "123457");
        assert_eq!(fmt_num(-0.052_680_3), "-0.0526803");
        assert_eq!(fmt_num(1.234_567e-9), "1.23457e-9");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        for s in ["nan", "inf", "1.23457e-9"] {
            assert!(s.parse::<f64>().is_ok());
        }
    }

    #[test]
    fn scene_round_trip_is_stable() {
        let scene = generate_scene(crate::ItuParams::urban_default(), 17).unwrap();
        let mut first = Vec::new();
        write_scene(&scene, &mut first).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert!(text.starts_with("# patch_side_m=775 alpha=0.37 beta_per_km2=188 gamma_m=13.3 seed=17\n"));
        assert!(text.lines().nth(1) == Some("center_x_m,center_y_m,half_side_m,height_m"));
        let back = read_scene(first.as_slice()).unwrap();
        assert_eq!(back.buildings().len(), scene.buildings().len());
        for (a, b) in back.buildings().iter().zip(scene.buildings()) {
            assert!((a.height - b.height).abs() <= 1e-5 * b.height.max(1.0));
        }
        let mut second = Vec::new();
        write_scene(&back, &mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn malformed_scene() {
        assert!(read_scene("center_x_m,center_y_m,half_side_m,height_m\n".as_bytes()).is_err());
        let bad = "# patch_side_m=775 alpha=0.37 beta_per_km2=188 gamma_m=13.3 seed=1\na,b\n1,2\n";
        assert!(read_scene(bad.as_bytes()).is_err());
    }
}
