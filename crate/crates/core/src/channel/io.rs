//! CSV profiles: `y, rho, v_y, theta, sigma_yy, q_y`, then raw moments.

use std::io::{Read, Write};

use super::{ChannelSolution, Fields};
use crate::error::{Error, Result};

/// Parsed profile: macroscopic columns plus any extra named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub y: Vec<f64>,
    pub fields: Fields,
    pub extra_names: Vec<String>,
    pub extra: Vec<Vec<f64>>,
}

const HEADER: [&str; 6] = ["y", "rho", "v_y", "theta", "sigma_yy", "q_y"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_solution_csv<W: Write>(sol: &ChannelSolution, out: W) -> Result<()> {
    let table = ProfileTable {
        y: sol.y.clone(),
        fields: sol.fields.clone(),
        extra_names: if sol.alpha.is_empty() {
            Vec::new()
        } else {
            sol.labels.clone()
        },
        extra: sol.alpha.clone(),
    };
    write_profile_csv(&table, out)
}

pub fn write_profile_csv<W: Write>(t: &ProfileTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = HEADER.to_vec();
    header.extend(t.extra_names.iter().map(String::as_str));
    w.write_record(&header)?;
    let cols = t.fields.columns();
    for i in 0..t.y.len() {
        let mut rec = vec![num(t.y[i])];
        rec.extend(cols.iter().map(|c| num(c[i])));
        if let Some(row) = t.extra.get(i) {
            rec.extend(row.iter().map(|v| num(*v)));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile_csv<R: Read>(input: R) -> Result<ProfileTable> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < HEADER.len() || header.iter().zip(HEADER).any(|(a, b)| a != b) {
        return Err(Error::Parse(format!(
            "profile header must start with {}",
            HEADER.join(",")
        )));
    }
    let extra_names: Vec<String> = header.iter().skip(HEADER.len()).map(str::to_string).collect();
    let mut t = ProfileTable {
        y: Vec::new(),
        fields: Fields::default(),
        extra_names,
        extra: Vec::new(),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {} has {} columns, expected {}",
                line + 1,
                rec.len(),
                header.len()
            )));
        }
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {s:?}: {e}", line + 1)))
            })
            .collect::<Result<_>>()?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("row {} contains a non-finite value", line + 1)));
        }
        t.y.push(vals[0]);
        for (c, col) in t.fields.columns_mut().into_iter().enumerate() {
            col.push(vals[1 + c]);
        }
        if !t.extra_names.is_empty() {
            t.extra.push(vals[HEADER.len()..].to_vec());
        }
    }
    if t.y.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parse("y column must be strictly increasing".into()));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ProfileTable {
        ProfileTable {
            y: vec![-0.5, 0.0, 0.5],
            fields: Fields {
                rho: vec![0.1, -0.2, 0.1],
                v_y: vec![0.0, 1e-300, 0.0],
                theta: vec![1.0 / 3.0, std::f64::consts::PI, 1.0 / 3.0],
                sigma_yy: vec![-1e-17, 2.5, 7.0],
                q_y: vec![-0.05, 0.0, 0.05],
            },
            extra_names: vec!["a0".into(), "a1".into()],
            extra: vec![vec![1.0, 2.0], vec![0.1, 0.2], vec![f64::MIN_POSITIVE, -3.0]],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = sample();
        let mut buf = Vec::new();
        write_profile_csv(&t, &mut buf).unwrap();
        let back = read_profile_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_profile_csv("x,rho\n1,2\n".as_bytes()).is_err());
        assert!(read_profile_csv("y,rho,v_y,theta,sigma_yy,q_y\n0,1,2,3,4\n".as_bytes()).is_err());
        assert!(read_profile_csv("y,rho,v_y,theta,sigma_yy,q_y\n0,1,2,3,4,NaN\n".as_bytes()).is_err());
        assert!(read_profile_csv("y,rho,v_y,theta,sigma_yy,q_y\n1,0,0,0,0,0\n0,0,0,0,0,0\n".as_bytes()).is_err());
    }
}
