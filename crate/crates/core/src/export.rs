//! CSV and binary serialization of paths, spectra and sampled signals.
//!
//! Floats are written with 17 significant digits so that every value
//! round-trips exactly.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::sim::{CarrierPath, SampledSignal};
use crate::spectra::{Estimator, SpectrumEstimate};

const SIGNAL_MAGIC: &[u8; 8] = b"TNSIG001";

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("i/o: {e}"))
}

/// Streams switching segments as
/// `realization,carrier,kind,start,duration`.
pub struct EventCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> EventCsvWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner
            .write_record(["realization", "carrier", "kind", "start", "duration"])
            .map_err(io_err)?;
        Ok(Self { inner })
    }

    pub fn write_realization(&mut self, realization: usize, paths: &[CarrierPath]) -> Result<()> {
        let r = realization.to_string();
        for (c, path) in paths.iter().enumerate() {
            let c = c.to_string();
            let mut clock = crate::numeric::NeumaierSum::new();
            for seg in path.segments() {
                let start = clock.value();
                clock.add(seg.duration);
                self.inner
                    .write_record([
                        r.as_str(),
                        c.as_str(),
                        seg.kind.as_str(),
                        &fmt_f64(start),
                        &fmt_f64(seg.duration),
                    ])
                    .map_err(io_err)?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(io_err)?;
        self.inner.into_inner().map_err(io_err)
    }
}

/// `frequency,psd,realizations,estimator,horizon`.
pub fn write_spectrum_csv<W: Write>(w: W, est: &SpectrumEstimate) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["frequency", "psd", "realizations", "estimator", "horizon"])
        .map_err(io_err)?;
    let r = est.realizations.to_string();
    let h = fmt_f64(est.horizon);
    for (&f, &s) in est.freqs.iter().zip(&est.values) {
        out.write_record([fmt_f64(f).as_str(), &fmt_f64(s), &r, est.estimator.as_str(), &h])
            .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_spectrum_csv<R: Read>(r: R) -> Result<SpectrumEstimate> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    let mut meta: Option<(usize, Estimator, f64)> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(io_err)?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::InvalidParameter(format!("missing column {i}")));
        let num = |i: usize| -> Result<f64> {
            field(i)?.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(e.to_string()))
        };
        freqs.push(num(0)?);
        values.push(num(1)?);
        if meta.is_none() {
            let reals = field(2)?.trim().parse().map_err(|_| Error::InvalidParameter("bad realizations".into()))?;
            let estimator = match field(3)?.trim() {
                "event_exact" => Estimator::EventExact,
                "sampled_fft" => Estimator::SampledFft,
                other => return Err(Error::InvalidParameter(format!("unknown estimator {other}"))),
            };
            meta = Some((reals, estimator, num(4)?));
        }
    }
    let (realizations, estimator, horizon) = meta.ok_or(Error::Empty("spectrum file has no rows"))?;
    Ok(SpectrumEstimate {
        freqs,
        values,
        realizations,
        estimator,
        horizon,
        config: None,
    })
}

/// Columns of equal length under a header row.
pub fn write_table_csv<W: Write>(w: W, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    if headers.len() != columns.len() {
        return Err(Error::InvalidParameter("header and column counts differ".into()));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::InvalidParameter("columns differ in length".into()));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(headers).map_err(io_err)?;
    for i in 0..rows {
        out.write_record(columns.iter().map(|c| fmt_f64(c[i]))).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Sampled signal as `t,count,current` preceded by `#` metadata lines.
pub fn write_sampled_csv<W: Write>(mut w: W, signal: &SampledSignal, seed: u64) -> Result<()> {
    writeln!(
        w,
        "# dt={} carriers={} amplitude={} seed={seed}",
        fmt_f64(signal.dt),
        signal.carriers,
        fmt_f64(signal.amplitude)
    )
    .map_err(io_err)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "count", "current"]).map_err(io_err)?;
    for (k, &n) in signal.counts.iter().enumerate() {
        out.write_record([fmt_f64(k as f64 * signal.dt), n.to_string(), fmt_f64(signal.value(k))])
            .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Little-endian: magic, dt, carriers, amplitude, seed, length, counts (u32).
pub fn write_sampled_binary<W: Write>(mut w: W, signal: &SampledSignal, seed: u64) -> Result<()> {
    w.write_all(SIGNAL_MAGIC).map_err(io_err)?;
    w.write_all(&signal.dt.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(signal.carriers as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&signal.amplitude.to_le_bytes()).map_err(io_err)?;
    w.write_all(&seed.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(signal.counts.len() as u64).to_le_bytes()).map_err(io_err)?;
    for &c in &signal.counts {
        w.write_all(&c.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Inverse of [`write_sampled_binary`]; returns the signal and its seed.
pub fn read_sampled_binary<R: BufRead>(mut r: R) -> Result<(SampledSignal, u64)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != SIGNAL_MAGIC {
        return Err(Error::InvalidParameter("not a sampled-signal file".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word).map_err(io_err)?;
        Ok(word)
    };
    let dt = f64::from_le_bytes(next(&mut r)?);
    let carriers = u64::from_le_bytes(next(&mut r)?) as usize;
    let amplitude = f64::from_le_bytes(next(&mut r)?);
    let seed = u64::from_le_bytes(next(&mut r)?);
    let len = u64::from_le_bytes(next(&mut r)?) as usize;
    let mut counts = Vec::with_capacity(len);
    let mut buf = [0u8; 4];
    for _ in 0..len {
        r.read_exact(&mut buf).map_err(io_err)?;
        counts.push(u32::from_le_bytes(buf));
    }
    Ok((
        SampledSignal {
            dt,
            counts,
            carriers,
            amplitude,
        },
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::CarrierState;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -2.5] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn spectrum_round_trip() {
        let est = SpectrumEstimate {
            freqs: vec![0.1, 0.2, 0.30000000000000004],
            values: vec![1.0 / 7.0, 2e-300, 3.5],
            realizations: 12,
            estimator: Estimator::SampledFft,
            horizon: 10.0,
            config: None,
        };
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &est).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frequency,psd,realizations,estimator,horizon\n"));
        assert_eq!(read_spectrum_csv(&buf[..]).unwrap(), est);
        assert!(read_spectrum_csv(&b"frequency,psd,realizations,estimator,horizon\n"[..]).is_err());
    }

    #[test]
    fn events_csv_layout() {
        let p = CarrierPath::from_durations(CarrierState::Trapped, vec![1.0, 0.5, 2.0], 4.0).unwrap();
        let mut w = EventCsvWriter::new(Vec::new()).unwrap();
        w.write_realization(3, std::slice::from_ref(&p)).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("3,0,gap,0.0000000000000000e0,1.0000000000000000e0"));
        assert!(lines[2].starts_with("3,0,pulse,1.0000000000000000e0,5.0000000000000000e-1"));
    }

    #[test]
    fn binary_round_trip() {
        let s = SampledSignal {
            dt: 1e-4,
            counts: vec![0, 3, 999, u32::MAX],
            carriers: 1000,
            amplitude: 0.25,
        };
        let mut buf = Vec::new();
        write_sampled_binary(&mut buf, &s, 42).unwrap();
        assert_eq!(buf.len(), 48 + 16);
        let (back, seed) = read_sampled_binary(&buf[..]).unwrap();
        assert_eq!(back, s);
        assert_eq!(seed, 42);
        buf[0] = b'X';
        assert!(read_sampled_binary(&buf[..]).is_err());
    }

    #[test]
    fn table_shape_checked() {
        let a = [1.0, 2.0];
        let b = [3.0];
        assert!(write_table_csv(Vec::new(), &["a", "b"], &[&a, &b]).is_err());
        assert!(write_table_csv(Vec::new(), &["a"], &[&a, &a]).is_err());
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &["a", "b"], &[&a, &a]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
