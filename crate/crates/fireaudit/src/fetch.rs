//! Optional network helper: download a FIRMS area CSV extract.
//!
//! The map key comes from the `FIRMS_MAP_KEY` environment variable (the key
//! is rate limited; keep it out of argv and config files). Network access is
//! never exercised by the test suites.

use thiserror::Error;

/// Environment variable holding the FIRMS map key.
pub const MAP_KEY_ENV: &str = "FIRMS_MAP_KEY";

const BASE_URL: &str = "https://firms.modaps.eosdis.nasa.gov";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("environment variable {MAP_KEY_ENV} is not set")]
    MissingKey,
    #[error("day range must be 1..=10, got {0}")]
    BadDayRange(u32),
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
}

/// Build the area-CSV request URL.
/// `area` is `west,south,east,north` in degrees; `source` is a FIRMS product
/// name such as `VIIRS_SNPP_NRT`; `date` (YYYY-MM-DD) selects the range end.
pub fn area_csv_url(map_key: &str, source: &str, area: &str, days: u32, date: Option<&str>) -> String {
    let mut url = format!("{BASE_URL}/api/area/csv/{map_key}/{source}/{area}/{days}");
    if let Some(d) = date {
        url.push('/');
        url.push_str(d);
    }
    url
}

/// Fetch an area CSV, returning the raw body.
pub fn fetch_area_csv(
    source: &str,
    area: &str,
    days: u32,
    date: Option<&str>,
) -> Result<String, FetchError> {
    if !(1..=10).contains(&days) {
        return Err(FetchError::BadDayRange(days));
    }
    let key = std::env::var(MAP_KEY_ENV).map_err(|_| FetchError::MissingKey)?;
    let url = area_csv_url(&key, source, area, days, date);
    let body = reqwest::blocking::get(url)?.error_for_status()?.text()?;
    Ok(body)
}
