//! Spatial grid aggregation, monthly aggregation and latitude-band
//! consistency checks for the nighttime low-confidence pattern.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{derive_fields, divides_180, Confidence, FireDetection};

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum SpaceTimeError {
    #[error("invalid cell size {0}: must divide 180 degrees evenly")]
    InvalidCellSize(f64),
    #[error("invalid band width {0}: must divide 180 degrees evenly")]
    InvalidBandWidth(f64),
}

/// Per-cell totals and nighttime low-confidence counts over a lat/lon grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major per-cell total detections.
    pub totals: Vec<u64>,
    /// Row-major per-cell nighttime low-confidence detections.
    pub night_low: Vec<u64>,
    /// Cells with a nonzero nighttime low-confidence count.
    pub nonzero_cells: usize,
    /// Cells holding any detections at all.
    pub occupied_cells: usize,
}

impl GridResult {
    fn cell(&self, row: usize, col: usize) -> (u64, u64) {
        let idx = row * self.n_cols + col;
        (self.totals[idx], self.night_low[idx])
    }

    /// CSV matrices (totals then night-low), one grid row per line, southern
    /// edge first.
    pub fn to_csv_matrix(&self) -> String {
        let mut out = String::new();
        for (name, data) in [("totals", &self.totals), ("night_low", &self.night_low)] {
            out.push_str(&format!("# {name} ({} rows x {} cols)\n", self.n_rows, self.n_cols));
            for row in 0..self.n_rows {
                let cells: Vec<String> = (0..self.n_cols)
                    .map(|col| data[row * self.n_cols + col].to_string())
                    .collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        out
    }

    /// GeoJSON-style FeatureCollection of the occupied cells, each a polygon
    /// with total and night-low counts as properties.
    pub fn to_geojson_cells(&self) -> serde_json::Value {
        let mut features = Vec::new();
        for row in 0..self.n_rows {
            for col in 0..self.n_cols {
                let (total, night_low) = self.cell(row, col);
                if total == 0 {
                    continue;
                }
                let lat0 = -90.0 + row as f64 * self.cell_size;
                let lon0 = -180.0 + col as f64 * self.cell_size;
                let (lat1, lon1) = (lat0 + self.cell_size, lon0 + self.cell_size);
                features.push(serde_json::json!({
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [[
                            [lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]
                        ]]
                    },
                    "properties": {
                        "row": row,
                        "col": col,
                        "total": total,
                        "night_low": night_low
                    }
                }));
            }
        }
        serde_json::json!({ "type": "FeatureCollection", "features": features })
    }
}

#[derive(Debug, Clone)]
pub struct GridAccumulator {
    cell_size: f64,
    n_rows: usize,
    n_cols: usize,
    totals: Vec<u64>,
    night_low: Vec<u64>,
}

impl GridAccumulator {
    pub fn new(cell_size: f64) -> Result<Self, SpaceTimeError> {
        if !divides_180(cell_size) {
            return Err(SpaceTimeError::InvalidCellSize(cell_size));
        }
        let n_rows = (180.0 / cell_size).round() as usize;
        let n_cols = (360.0 / cell_size).round() as usize;
        Ok(GridAccumulator {
            cell_size,
            n_rows,
            n_cols,
            totals: vec![0; n_rows * n_cols],
            night_low: vec![0; n_rows * n_cols],
        })
    }

    pub fn observe(&mut self, rec: &FireDetection) {
        let d = derive_fields(rec, self.cell_size, self.cell_size);
        let idx = d.grid_cell.0 * self.n_cols + d.grid_cell.1;
        self.totals[idx] += 1;
        if d.is_night && rec.confidence == Confidence::Low {
            self.night_low[idx] += 1;
        }
    }

    pub fn merge(&mut self, other: &GridAccumulator) {
        assert_eq!(self.cell_size, other.cell_size);
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        for (a, b) in self.night_low.iter_mut().zip(&other.night_low) {
            *a += b;
        }
    }

    pub fn finish(&self) -> GridResult {
        GridResult {
            cell_size: self.cell_size,
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            totals: self.totals.clone(),
            night_low: self.night_low.clone(),
            nonzero_cells: self.night_low.iter().filter(|&&c| c > 0).count(),
            occupied_cells: self.totals.iter().filter(|&&c| c > 0).count(),
        }
    }
}

/// Grid counts over a record stream.
pub fn grid_counts<'a>(
    records: impl IntoIterator<Item = &'a FireDetection>,
    cell_size: f64,
) -> Result<GridResult, SpaceTimeError> {
    let mut acc = GridAccumulator::new(cell_size)?;
    for rec in records {
        acc.observe(rec);
    }
    Ok(acc.finish())
}

/// One calendar month's totals and whether the nighttime low-confidence
/// count stayed at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthlyRow {
    pub month: u32,
    pub total_fires: u64,
    pub night_fires: u64,
    pub night_low_conf: u64,
    pub pattern_holds: bool,
}

#[derive(Debug, Clone, Default)]
pub struct MonthlyAccumulator {
    total: [u64; 12],
    night: [u64; 12],
    night_low: [u64; 12],
}

impl MonthlyAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, rec: &FireDetection) {
        let m = (chrono::Datelike::month(&rec.acq_date) - 1) as usize;
        self.total[m] += 1;
        if rec.is_night() {
            self.night[m] += 1;
            if rec.confidence == Confidence::Low {
                self.night_low[m] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &MonthlyAccumulator) {
        for i in 0..12 {
            self.total[i] += other.total[i];
            self.night[i] += other.night[i];
            self.night_low[i] += other.night_low[i];
        }
    }

    /// Rows for all 12 calendar months, zero-filled when absent.
    pub fn finish(&self) -> Vec<MonthlyRow> {
        (0..12)
            .map(|i| MonthlyRow {
                month: i as u32 + 1,
                total_fires: self.total[i],
                night_fires: self.night[i],
                night_low_conf: self.night_low[i],
                pattern_holds: self.night_low[i] == 0,
            })
            .collect()
    }
}

/// Monthly aggregation over a record stream.
pub fn monthly_table<'a>(records: impl IntoIterator<Item = &'a FireDetection>) -> Vec<MonthlyRow> {
    let mut acc = MonthlyAccumulator::new();
    for rec in records {
        acc.observe(rec);
    }
    acc.finish()
}

/// One latitude band's totals. A band qualifies for the consistency summary
/// when its total exceeds `min_count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub band: usize,
    pub lat_min: f64,
    pub lat_max: f64,
    pub total_fires: u64,
    pub night_low_conf: u64,
    pub qualifies: bool,
    pub pattern_holds: bool,
}

/// All latitude bands plus the qualifying-band summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub band_width: f64,
    pub min_count: u64,
    pub bands: Vec<BandRow>,
    /// Qualifying bands (total > min_count).
    pub qualifying: usize,
    /// Qualifying bands where the pattern holds (night low-confidence = 0).
    pub holding: usize,
}

#[derive(Debug, Clone)]
pub struct BandAccumulator {
    band_width: f64,
    min_count: u64,
    total: Vec<u64>,
    night_low: Vec<u64>,
}

impl BandAccumulator {
    pub fn new(band_width: f64, min_count: u64) -> Result<Self, SpaceTimeError> {
        if !divides_180(band_width) {
            return Err(SpaceTimeError::InvalidBandWidth(band_width));
        }
        let n = (180.0 / band_width).round() as usize;
        Ok(BandAccumulator { band_width, min_count, total: vec![0; n], night_low: vec![0; n] })
    }

    pub fn observe(&mut self, rec: &FireDetection) {
        let d = derive_fields(rec, self.band_width, self.band_width);
        self.total[d.lat_band] += 1;
        if d.is_night && rec.confidence == Confidence::Low {
            self.night_low[d.lat_band] += 1;
        }
    }

    pub fn merge(&mut self, other: &BandAccumulator) {
        assert_eq!(self.band_width, other.band_width);
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
        for (a, b) in self.night_low.iter_mut().zip(&other.night_low) {
            *a += b;
        }
    }

    pub fn finish(&self) -> BandReport {
        let bands: Vec<BandRow> = self
            .total
            .iter()
            .enumerate()
            .map(|(i, &total)| BandRow {
                band: i,
                lat_min: -90.0 + i as f64 * self.band_width,
                lat_max: -90.0 + (i + 1) as f64 * self.band_width,
                total_fires: total,
                night_low_conf: self.night_low[i],
                qualifies: total > self.min_count,
                pattern_holds: self.night_low[i] == 0,
            })
            .collect();
        let qualifying = bands.iter().filter(|b| b.qualifies).count();
        let holding = bands.iter().filter(|b| b.qualifies && b.pattern_holds).count();
        BandReport { band_width: self.band_width, min_count: self.min_count, bands, qualifying, holding }
    }
}

/// Latitude-band aggregation over a record stream.
pub fn latitude_bands<'a>(
    records: impl IntoIterator<Item = &'a FireDetection>,
    band_width: f64,
    min_count: u64,
) -> Result<BandReport, SpaceTimeError> {
    let mut acc = BandAccumulator::new(band_width, min_count)?;
    for rec in records {
        acc.observe(rec);
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::DayNight;
    use crate::testutil::mk_classified;

    fn rec_at(lat: f64, lon: f64) -> FireDetection {
        let mut r = mk_classified(DayNight::Day, Confidence::Nominal);
        r.latitude = lat;
        r.longitude = lon;
        r
    }

    #[test]
    fn two_cells_with_expected_counts() {
        let rows = vec![rec_at(5.0, 5.0), rec_at(5.0, 5.0), rec_at(-5.0, 5.0)];
        let g = grid_counts(rows.iter(), 10.0).unwrap();
        assert_eq!((g.n_rows, g.n_cols), (18, 36));
        let cell = |row: usize, col: usize| g.totals[row * g.n_cols + col];
        assert_eq!(cell(9, 18), 2); // lat 5 → row 9, lon 5 → col 18
        assert_eq!(cell(8, 18), 1);
        assert_eq!(g.totals.iter().sum::<u64>(), 3);
        assert_eq!(g.occupied_cells, 2);
        assert_eq!(g.nonzero_cells, 0);
    }

    #[test]
    fn bad_cell_size_is_rejected() {
        assert!(matches!(
            grid_counts(std::iter::empty(), 7.0),
            Err(SpaceTimeError::InvalidCellSize(_))
        ));
        assert!(matches!(
            latitude_bands(std::iter::empty(), 11.0, 100),
            Err(SpaceTimeError::InvalidBandWidth(_))
        ));
    }

    #[test]
    fn night_low_rows_are_tracked_per_cell() {
        let mut nl = mk_classified(DayNight::Night, Confidence::Low);
        nl.latitude = 45.0;
        nl.longitude = 0.0;
        let rows = vec![nl, rec_at(45.0, 0.0)];
        let g = grid_counts(rows.iter(), 10.0).unwrap();
        assert_eq!(g.nonzero_cells, 1);
        assert_eq!(g.night_low.iter().sum::<u64>(), 1);
    }

    #[test]
    fn monthly_rows_cover_all_twelve_months() {
        let mut r = rec_at(0.0, 0.0);
        r.acq_date = chrono::NaiveDate::from_ymd_opt(2023, 3, 10).unwrap();
        let rows = vec![r.clone(), r.clone(), r];
        let table = monthly_table(rows.iter());
        assert_eq!(table.len(), 12);
        assert_eq!(table[2].month, 3);
        assert_eq!(table[2].total_fires, 3);
        assert!(table.iter().enumerate().all(|(i, m)| m.month == i as u32 + 1));
        assert!(table.iter().filter(|m| m.month != 3).all(|m| m.total_fires == 0));
        assert!(table.iter().all(|m| m.pattern_holds));
    }

    #[test]
    fn monthly_counts_nest_correctly() {
        let mut night_nominal = mk_classified(DayNight::Night, Confidence::Nominal);
        night_nominal.acq_date = chrono::NaiveDate::from_ymd_opt(2023, 7, 1).unwrap();
        let mut night_low = mk_classified(DayNight::Night, Confidence::Low);
        night_low.acq_date = chrono::NaiveDate::from_ymd_opt(2023, 7, 2).unwrap();
        let mut day = rec_at(0.0, 0.0);
        day.acq_date = chrono::NaiveDate::from_ymd_opt(2023, 7, 3).unwrap();
        let table = monthly_table([&night_nominal, &night_low, &day]);
        let july = table[6];
        assert_eq!((july.total_fires, july.night_fires, july.night_low_conf), (3, 2, 1));
        assert!(!july.pattern_holds);
        assert!(july.night_low_conf <= july.night_fires && july.night_fires <= july.total_fires);
    }

    #[test]
    fn under_threshold_band_does_not_qualify() {
        let rows: Vec<_> = (0..50).map(|_| rec_at(12.0, 3.0)).collect();
        let report = latitude_bands(rows.iter(), 10.0, 100).unwrap();
        assert_eq!(report.qualifying, 0);
        assert_eq!(report.holding, 0);
        assert_eq!(report.bands.len(), 18);
    }

    #[test]
    fn boundary_latitude_clamps_into_the_last_band() {
        let rows = vec![rec_at(90.0, 0.0)];
        let report = latitude_bands(rows.iter(), 10.0, 0).unwrap();
        assert_eq!(report.bands[17].total_fires, 1);
    }

    #[test]
    fn grid_exports_cover_occupied_cells() {
        let rows = vec![rec_at(5.0, 5.0), rec_at(5.0, 5.0), rec_at(-5.0, 5.0)];
        let g = grid_counts(rows.iter(), 10.0).unwrap();
        let csv = g.to_csv_matrix();
        assert!(csv.lines().filter(|l| !l.starts_with('#')).count() == 36);
        let geojson = g.to_geojson_cells();
        assert_eq!(geojson["features"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn conservation_across_aggregations() {
        let rows: Vec<_> = (0..500)
            .map(|i| {
                let mut r = rec_at((i % 170) as f64 - 85.0, (i % 350) as f64 - 175.0);
                r.acq_date =
                    chrono::NaiveDate::from_ymd_opt(2023, (i % 12) as u32 + 1, 5).unwrap();
                r
            })
            .collect();
        let g = grid_counts(rows.iter(), 10.0).unwrap();
        let m = monthly_table(rows.iter());
        let b = latitude_bands(rows.iter(), 10.0, 100).unwrap();
        assert_eq!(g.totals.iter().sum::<u64>(), 500);
        assert_eq!(m.iter().map(|r| r.total_fires).sum::<u64>(), 500);
        assert_eq!(b.bands.iter().map(|r| r.total_fires).sum::<u64>(), 500);
    }

    #[test]
    fn partitioned_scans_merge_to_the_same_result() {
        let rows: Vec<_> = (0..300)
            .map(|i| {
                let mut r = rec_at((i % 150) as f64 - 70.0, (i % 300) as f64 - 150.0);
                r.acq_date =
                    chrono::NaiveDate::from_ymd_opt(2023, (i % 12) as u32 + 1, 3).unwrap();
                if i % 11 == 0 {
                    r.daynight = DayNight::Night;
                }
                r
            })
            .collect();
        let whole = grid_counts(rows.iter(), 10.0).unwrap();
        let mut left = GridAccumulator::new(10.0).unwrap();
        rows[..111].iter().for_each(|r| left.observe(r));
        let mut right = GridAccumulator::new(10.0).unwrap();
        rows[111..].iter().for_each(|r| right.observe(r));
        left.merge(&right);
        assert_eq!(left.finish(), whole);

        let whole_bands = latitude_bands(rows.iter(), 10.0, 10).unwrap();
        let mut lb = BandAccumulator::new(10.0, 10).unwrap();
        rows[..47].iter().for_each(|r| lb.observe(r));
        let mut rb = BandAccumulator::new(10.0, 10).unwrap();
        rows[47..].iter().for_each(|r| rb.observe(r));
        lb.merge(&rb);
        assert_eq!(lb.finish(), whole_bands);

        let whole_monthly = monthly_table(rows.iter());
        let mut lm = MonthlyAccumulator::new();
        rows[..200].iter().for_each(|r| lm.observe(r));
        let mut rm = MonthlyAccumulator::new();
        rows[200..].iter().for_each(|r| rm.observe(r));
        lm.merge(&rm);
        assert_eq!(lm.finish(), whole_monthly);
    }
}
