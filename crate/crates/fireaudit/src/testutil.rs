//! Shared fixtures for unit tests.

use chrono::NaiveDate;

use crate::records::{Confidence, DayNight, FireDetection};

pub(crate) fn mk_record(lat: f64, lon: f64, bright: f64) -> FireDetection {
    FireDetection {
        latitude: lat,
        longitude: lon,
        bright_ti4: bright,
        bright_ti5: None,
        scan: 0.4,
        track: 0.4,
        acq_date: NaiveDate::from_ymd_opt(2023, 6, 1).unwrap(),
        acq_time: 30,
        acq_time_raw: "0030".into(),
        satellite: "N".into(),
        instrument: "VIIRS".into(),
        confidence: Confidence::Nominal,
        version: "2.0NRT".into(),
        frp: 5.0,
        daynight: DayNight::Day,
    }
}

pub(crate) fn mk_classified(dn: DayNight, conf: Confidence) -> FireDetection {
    let mut r = mk_record(1.0, 2.0, 300.0);
    r.daynight = dn;
    r.confidence = conf;
    r
}

/// A corpus with a known composition: counts per (daynight, confidence).
pub(crate) fn corpus(spec: &[(DayNight, Confidence, usize)]) -> Vec<FireDetection> {
    let mut out = Vec::new();
    for &(dn, conf, n) in spec {
        for i in 0..n {
            let mut r = mk_classified(dn, conf);
            r.latitude = (i % 180) as f64 - 89.5;
            r.longitude = (i % 360) as f64 - 179.5;
            r.bright_ti4 = 295.0 + (i % 60) as f64;
            out.push(r);
        }
    }
    out
}
