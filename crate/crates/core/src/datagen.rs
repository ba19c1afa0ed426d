//! Seeded synthetic shipment and demand corpora.
//!
//! Records come from three latent route regimes:
//!
//! | regime | distance | speed | traffic | elevation |
//! |--------|----------|-------|---------|-----------|
//! | 0 urban-congested | ~35 km | ~25 km/h | ~0.78 | low |
//! | 1 rural-fast | ~520 km | ~88 km/h | ~0.15 | moderate |
//! | 2 mountainous-slow | ~1500 km | ~55 km/h | ~0.72 | ~1400 m |
//!
//! Fuel is proportional to distance with vehicle-specific rates, emissions are
//! close to linear in fuel with a fuel-type emission factor, and transit time
//! carries a large noise term plus two effects that have no linear
//! correlation with any single feature (a mode x priority handling term and a
//! cargo-weight band). The regime label is ground truth for tests only and is
//! never written to the corpus CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeededRng, GENERATOR_ID};
use crate::tabular::SHIPMENT_COLUMNS;

pub const GENERATOR_VERSION: &str = "greenroute-datagen/1";

macro_rules! string_enum {
    ($name:ident { $($variant:ident),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => stringify!($variant)),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $(stringify!($variant) => Ok($name::$variant),)+
                    other => Err(Error::invalid(
                        stringify!($name),
                        format!("unknown value {other:?}"),
                    )),
                }
            }
        }
    };
}

string_enum!(TransportMode { Truck, Air, Rail, Ship });
string_enum!(VehicleType { DieselTruck, ElectricTruck, CargoShip, FreightTrain, AirCargo });
string_enum!(FuelType { Diesel, Electric, AviationFuel });

impl VehicleType {
    pub fn mode(self) -> TransportMode {
        match self {
            VehicleType::DieselTruck | VehicleType::ElectricTruck => TransportMode::Truck,
            VehicleType::CargoShip => TransportMode::Ship,
            VehicleType::FreightTrain => TransportMode::Rail,
            VehicleType::AirCargo => TransportMode::Air,
        }
    }

    /// Litres (or litre-equivalent) per km before load and gradient adjustments.
    fn fuel_rate(self) -> f64 {
        match self {
            VehicleType::DieselTruck => 0.32,
            VehicleType::ElectricTruck => 0.75,
            VehicleType::CargoShip => 0.12,
            VehicleType::FreightTrain => 0.10,
            VehicleType::AirCargo => 1.6,
        }
    }
}

impl FuelType {
    /// kg CO2 per litre. Electric is a grid-indirect litre-equivalent factor.
    pub fn emission_factor(self) -> f64 {
        match self {
            FuelType::Diesel => 2.68,
            FuelType::AviationFuel => 3.15,
            FuelType::Electric => 0.9,
        }
    }
}

/// True when the (mode, vehicle, fuel) triple is allowed.
pub fn categories_consistent(mode: TransportMode, vehicle: VehicleType, fuel: FuelType) -> bool {
    if vehicle.mode() != mode {
        return false;
    }
    match fuel {
        FuelType::AviationFuel => matches!(mode, TransportMode::Air | TransportMode::Rail),
        FuelType::Electric => !matches!(mode, TransportMode::Air | TransportMode::Ship) && vehicle != VehicleType::DieselTruck,
        FuelType::Diesel => !matches!(vehicle, VehicleType::ElectricTruck | VehicleType::AirCargo),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShipmentRecord {
    pub shipment_id: String,
    pub transport_mode: TransportMode,
    pub vehicle_type: VehicleType,
    pub fuel_type: FuelType,
    pub priority: u8,
    pub distance_km: f64,
    pub avg_speed_kmh: f64,
    pub elevation_change_m: f64,
    pub traffic_level: f64,
    pub traffic_impact_score: f64,
    pub fuel_consumed_liters: f64,
    pub estimated_emissions_kg_co2: f64,
    pub package_weight_kg: f64,
    pub cargo_weight_tons: f64,
    pub transit_time_days: f64,
    /// Latent generator label; kept out of the CSV and of every feature set.
    #[serde(skip)]
    pub route_regime: u8,
}

impl ShipmentRecord {
    /// Cells in CSV column order.
    pub fn csv_fields(&self) -> [String; 15] {
        [
            self.shipment_id.clone(),
            self.transport_mode.to_string(),
            self.vehicle_type.to_string(),
            self.fuel_type.to_string(),
            self.priority.to_string(),
            self.distance_km.to_string(),
            self.avg_speed_kmh.to_string(),
            self.elevation_change_m.to_string(),
            self.traffic_level.to_string(),
            self.traffic_impact_score.to_string(),
            self.fuel_consumed_liters.to_string(),
            self.estimated_emissions_kg_co2.to_string(),
            self.package_weight_kg.to_string(),
            self.cargo_weight_tons.to_string(),
            self.transit_time_days.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_records: usize,
    pub seed: u64,
    pub regime_mix: [f64; 3],
    pub outlier_fraction: f64,
    /// Truck, Air, Rail, Ship.
    pub mode_mix: [f64; 4],
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            n_records: 5000,
            seed: 7,
            regime_mix: [0.36, 0.32, 0.32],
            outlier_fraction: 0.0,
            mode_mix: [0.5, 0.15, 0.2, 0.15],
        }
    }
}

impl GeneratorSpec {
    pub fn new(n_records: usize, seed: u64) -> Self {
        Self {
            n_records,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(Error::invalid("n_records", "must be at least 1"));
        }
        check_probabilities("regime_mix", &self.regime_mix)?;
        check_probabilities("mode_mix", &self.mode_mix)?;
        if !(0.0..=0.1).contains(&self.outlier_fraction) {
            return Err(Error::invalid("outlier_fraction", "must lie in [0, 0.1]"));
        }
        Ok(())
    }
}

fn check_probabilities(field: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid(field, "each probability must lie in [0, 1]"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(field, format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

struct RegimeProfile {
    log_distance: f64,
    distance_sigma: f64,
    speed: (f64, f64),
    traffic: f64,
}

const REGIMES: [RegimeProfile; 3] = [
    RegimeProfile { log_distance: 3.555_348_061_489_413_6, distance_sigma: 0.30, speed: (25.0, 3.0), traffic: 0.78 },
    RegimeProfile { log_distance: 6.253_828_811_575_473, distance_sigma: 0.12, speed: (88.0, 6.0), traffic: 0.15 },
    RegimeProfile { log_distance: 7.313_220_387_090_301, distance_sigma: 0.12, speed: (55.0, 5.0), traffic: 0.72 },
];

const TRAFFIC_SD: f64 = 0.05;
const TRANSIT_BASE_DAYS: f64 = 16.0;
const TRANSIT_NOISE_SD: f64 = 1.9;
const HANDLING_INTERACTION: f64 = 0.8;
const CARGO_BAND: (f64, f64) = (2.5, 7.5);
const CARGO_BAND_EFFECT: f64 = 2.4;
/// Priority pattern of the mode x priority handling term (zero-sum, non-monotone).
const PRIORITY_PATTERN: [f64; 3] = [1.0, -2.0, 1.0];
/// Sign of each mode in the handling term before centring by the mode mix.
const MODE_SIGN: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Clean corpus of `spec.n_records` records (no outlier injection).
pub fn generate_corpus(spec: &GeneratorSpec) -> Result<Vec<ShipmentRecord>> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let mode_centre: f64 = spec.mode_mix.iter().zip(MODE_SIGN).map(|(p, s)| p * s).sum();
    let records = (0..spec.n_records)
        .map(|i| draw_record(&mut rng, spec, mode_centre, i))
        .collect();
    Ok(records)
}

fn draw_record(rng: &mut SeededRng, spec: &GeneratorSpec, mode_centre: f64, index: usize) -> ShipmentRecord {
    let regime = rng.categorical(&spec.regime_mix);
    let mode_idx = rng.categorical(&spec.mode_mix);
    let mode = TransportMode::ALL[mode_idx];
    let profile = &REGIMES[regime];

    let distance_km = (profile.log_distance + profile.distance_sigma * rng.normal()).exp();
    let avg_speed_kmh = rng.gaussian(profile.speed.0, profile.speed.1).max(5.0);
    let elevation_change_m = match regime {
        0 => rng.exponential(15.0),
        1 => rng.exponential(80.0),
        _ => rng.gaussian(1400.0, 250.0).max(0.0),
    };
    let traffic_level = rng.gaussian(profile.traffic, TRAFFIC_SD).clamp(0.0, 1.0);

    let (vehicle_type, fuel_type) = match mode {
        TransportMode::Truck => {
            if rng.bernoulli(0.3) {
                (VehicleType::ElectricTruck, FuelType::Electric)
            } else {
                (VehicleType::DieselTruck, FuelType::Diesel)
            }
        }
        TransportMode::Air => (VehicleType::AirCargo, FuelType::AviationFuel),
        TransportMode::Rail => {
            let fuel = match rng.categorical(&[0.75, 0.10, 0.15]) {
                0 => FuelType::Diesel,
                1 => FuelType::Electric,
                _ => FuelType::AviationFuel,
            };
            (VehicleType::FreightTrain, fuel)
        }
        TransportMode::Ship => (VehicleType::CargoShip, FuelType::Diesel),
    };

    let priority = 1 + rng.below(3) as u8;
    let cargo_weight_tons = rng.uniform_range(0.0, 10.0);
    let package_weight_kg = if rng.bernoulli(0.5) {
        rng.gaussian(5.0, 1.2)
    } else {
        rng.gaussian(40.0, 5.0)
    }
    .max(0.1);

    let fuel_consumed_liters = vehicle_type.fuel_rate()
        * distance_km
        * (1.0 + 0.05 * cargo_weight_tons)
        * (1.0 + 0.002 * elevation_change_m / 100.0)
        * (0.04 * rng.normal()).exp();

    let air_surcharge = if mode == TransportMode::Air { 0.02 * fuel_consumed_liters } else { 0.0 };
    let estimated_emissions_kg_co2 =
        (fuel_type.emission_factor() * fuel_consumed_liters + air_surcharge + 0.5 * rng.normal()).max(0.0);

    let handling = HANDLING_INTERACTION
        * (MODE_SIGN[mode_idx] - mode_centre)
        * PRIORITY_PATTERN[usize::from(priority - 1)];
    let cargo_band = if (CARGO_BAND.0..CARGO_BAND.1).contains(&cargo_weight_tons) {
        CARGO_BAND_EFFECT
    } else {
        -CARGO_BAND_EFFECT
    };
    let transit_time_days = distance_km / (avg_speed_kmh * 24.0)
        + 2.0 * traffic_level
        + TRANSIT_BASE_DAYS
        + handling
        + cargo_band
        + TRANSIT_NOISE_SD * rng.normal().clamp(-2.0, 2.0);

    ShipmentRecord {
        shipment_id: format!("SHP-{index:07}"),
        transport_mode: mode,
        vehicle_type,
        fuel_type,
        priority,
        distance_km,
        avg_speed_kmh,
        elevation_change_m,
        traffic_level,
        traffic_impact_score: traffic_level * distance_km / avg_speed_kmh,
        fuel_consumed_liters,
        estimated_emissions_kg_co2,
        package_weight_kg,
        cargo_weight_tons,
        transit_time_days,
        route_regime: regime as u8,
    }
}

/// Number of records perturbed for a given fraction: `ceil(fraction * n)`,
/// computed so that representable products like `0.048 * 1000` are not
/// pushed over an integer by rounding.
pub fn outlier_count(n: usize, fraction: f64) -> usize {
    let raw = fraction * n as f64;
    let nearest = raw.round();
    if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) {
        nearest as usize
    } else {
        raw.ceil() as usize
    }
}

/// Multiplies `transit_time_days` (always) and `distance_km` (with probability
/// one half) of `ceil(fraction * n)` records by independent factors in [4, 8].
/// Returns the perturbed corpus and the sorted perturbed indices.
pub fn inject_outliers(
    records: &[ShipmentRecord],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<ShipmentRecord>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction <= 0.1) {
        return Err(Error::invalid("fraction", "must lie in (0, 0.1]"));
    }
    let mut rng = SeededRng::new(seed);
    let m = outlier_count(records.len(), fraction);
    let mut indices = rng.sample_indices(records.len(), m);
    indices.sort_unstable();

    let mut out = records.to_vec();
    for &i in &indices {
        let r = &mut out[i];
        r.transit_time_days *= rng.uniform_range(4.0, 8.0);
        if rng.bernoulli(0.5) {
            r.distance_km *= rng.uniform_range(4.0, 8.0);
        }
    }
    Ok((out, indices))
}

/// Corpus plus the ground truth that lives in the sidecar manifest.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub spec: GeneratorSpec,
    pub records: Vec<ShipmentRecord>,
    pub outlier_indices: Vec<usize>,
}

/// Stream offset for the outlier injection seed so it never aliases the record stream.
const OUTLIER_SEED_SALT: u64 = 0x6f75_746c_6965_7273;

/// Generates the corpus and, when `outlier_fraction > 0`, injects outliers.
pub fn generate(spec: &GeneratorSpec) -> Result<Corpus> {
    let records = generate_corpus(spec)?;
    let (records, outlier_indices) = if spec.outlier_fraction > 0.0 {
        inject_outliers(&records, spec.outlier_fraction, spec.seed ^ OUTLIER_SEED_SALT)?
    } else {
        (records, Vec::new())
    };
    Ok(Corpus {
        spec: spec.clone(),
        records,
        outlier_indices,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub regimes: Vec<u8>,
    pub outlier_indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub spec: GeneratorSpec,
    pub generator_version: String,
    pub prng: String,
    pub ground_truth: GroundTruth,
}

impl Corpus {
    pub fn manifest(&self) -> CorpusManifest {
        CorpusManifest {
            seed: self.spec.seed,
            spec: self.spec.clone(),
            generator_version: GENERATOR_VERSION.to_string(),
            prng: GENERATOR_ID.to_string(),
            ground_truth: GroundTruth {
                regimes: self.records.iter().map(|r| r.route_regime).collect(),
                outlier_indices: self.outlier_indices.clone(),
            },
        }
    }

    pub fn regimes(&self) -> Vec<usize> {
        self.records.iter().map(|r| usize::from(r.route_regime)).collect()
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_corpus_csv(&self.records, &mut buf)?;
        Ok(buf)
    }
}

pub fn write_corpus_csv<W: Write>(records: &[ShipmentRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(SHIPMENT_COLUMNS.iter().map(|(name, _)| *name))?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandRecord {
    pub day_index: usize,
    pub region_id: usize,
    pub day_of_week: usize,
    pub deliveries: f64,
}

pub const DEMAND_COLUMNS: [&str; 4] = ["day_index", "region_id", "day_of_week", "deliveries"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandSpec {
    pub n_days: usize,
    pub n_regions: usize,
    pub seed: u64,
    /// Multiplier on the noise term; 1 is the calibrated corpus, 0 the noiseless test hook.
    pub noise_scale: f64,
}

/// Day-of-week effect on deliveries, Monday first.
const DAY_EFFECT: [f64; 7] = [6.0, 3.0, 1.0, 0.0, 4.0, -6.0, -8.0];
/// Share of delivery variance explained by region and weekday.
const DEMAND_SIGNAL_SHARE: f64 = 0.63;

pub fn generate_demand(n_days: usize, n_regions: usize, seed: u64) -> Result<Vec<DemandRecord>> {
    generate_demand_with(&DemandSpec {
        n_days,
        n_regions,
        seed,
        noise_scale: 1.0,
    })
}

/// Deliveries = region base + weekday effect + Gaussian noise whose variance is
/// set from the realised signal variance so the additive model explains about
/// 63% of the variance.
pub fn generate_demand_with(spec: &DemandSpec) -> Result<Vec<DemandRecord>> {
    if spec.n_days < 14 {
        return Err(Error::invalid("n_days", "must be at least 14"));
    }
    if spec.n_regions == 0 {
        return Err(Error::invalid("n_regions", "must be at least 1"));
    }
    if !(spec.noise_scale >= 0.0) {
        return Err(Error::invalid("noise_scale", "must be non-negative"));
    }
    let mut rng = SeededRng::new(spec.seed);
    let bases: Vec<f64> = (0..spec.n_regions).map(|_| rng.gaussian(100.0, 25.0).max(40.0)).collect();

    let signal_var = population_variance(&bases) + population_variance(&DAY_EFFECT);
    let noise_sd = (signal_var * (1.0 - DEMAND_SIGNAL_SHARE) / DEMAND_SIGNAL_SHARE).sqrt() * spec.noise_scale;

    let mut out = Vec::with_capacity(spec.n_days * spec.n_regions);
    for day in 0..spec.n_days {
        let dow = day % 7;
        for (region, base) in bases.iter().enumerate() {
            let noise = if noise_sd > 0.0 { noise_sd * rng.normal() } else { 0.0 };
            out.push(DemandRecord {
                day_index: day,
                region_id: region,
                day_of_week: dow,
                deliveries: (base + DAY_EFFECT[dow] + noise).max(0.0),
            });
        }
    }
    Ok(out)
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

pub fn write_demand_csv<W: Write>(records: &[DemandRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(DEMAND_COLUMNS)?;
    for r in records {
        w.write_record([
            r.day_index.to_string(),
            r.region_id.to_string(),
            r.day_of_week.to_string(),
            r.deliveries.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    fn skewness(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
        m3 / m2.powf(1.5)
    }

    #[test]
    fn corpus_is_deterministic() {
        let spec = GeneratorSpec::new(10, 42);
        assert_eq!(generate_corpus(&spec).unwrap(), generate_corpus(&spec).unwrap());
    }

    #[test]
    fn invalid_spec_names_field() {
        let mut spec = GeneratorSpec::new(10, 1);
        spec.mode_mix = [0.5, 0.5, 0.5, 0.0];
        match generate_corpus(&spec) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "mode_mix"),
            other => panic!("unexpected {other:?}"),
        }
        spec = GeneratorSpec::new(0, 1);
        assert!(matches!(generate_corpus(&spec), Err(Error::Validation { field, .. }) if field == "n_records"));
        spec = GeneratorSpec::new(5, 1);
        spec.outlier_fraction = 0.2;
        assert!(matches!(generate_corpus(&spec), Err(Error::Validation { field, .. }) if field == "outlier_fraction"));
    }

    #[test]
    fn categories_always_consistent() {
        let recs = generate_corpus(&GeneratorSpec::new(3000, 11)).unwrap();
        for r in &recs {
            assert!(categories_consistent(r.transport_mode, r.vehicle_type, r.fuel_type), "{r:?}");
            assert!((1..=3).contains(&r.priority));
            assert!(r.distance_km > 0.0 && r.avg_speed_kmh > 0.0 && r.fuel_consumed_liters > 0.0);
            assert!(r.elevation_change_m >= 0.0 && r.estimated_emissions_kg_co2 >= 0.0);
            assert!((0.0..=1.0).contains(&r.traffic_level));
            assert!(r.package_weight_kg > 0.0 && r.cargo_weight_tons >= 0.0 && r.transit_time_days > 0.0);
        }
        // every mode and the rail/aviation combination appear
        for m in TransportMode::ALL {
            assert!(recs.iter().any(|r| r.transport_mode == *m));
        }
        assert!(recs
            .iter()
            .any(|r| r.transport_mode == TransportMode::Rail && r.fuel_type == FuelType::AviationFuel));
    }

    #[test]
    fn distributional_shape_at_n5000() {
        let recs = generate_corpus(&GeneratorSpec::new(5000, 7)).unwrap();
        let dist: Vec<f64> = recs.iter().map(|r| r.distance_km).collect();
        assert!(skewness(&dist) > 0.5, "skew {}", skewness(&dist));

        for mode in TransportMode::ALL {
            let (d, e): (Vec<f64>, Vec<f64>) = recs
                .iter()
                .filter(|r| r.transport_mode == *mode)
                .map(|r| (r.distance_km, r.estimated_emissions_kg_co2))
                .unzip();
            let rho = pearson(&d, &e);
            assert!(rho >= 0.9, "{mode}: corr {rho}");
        }

        let mean_em = |f: FuelType| {
            let v: Vec<f64> = recs.iter().filter(|r| r.fuel_type == f).map(|r| r.estimated_emissions_kg_co2).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean_em(FuelType::AviationFuel) > mean_em(FuelType::Diesel));
        assert!(mean_em(FuelType::AviationFuel) > mean_em(FuelType::Electric));
    }

    #[test]
    fn package_weight_is_bimodal() {
        let recs = generate_corpus(&GeneratorSpec::new(5000, 7)).unwrap();
        let mut w: Vec<f64> = recs.iter().map(|r| r.package_weight_kg).collect();
        w.sort_by(f64::total_cmp);
        // best 1-D two-group split by within-group sum of squares
        let n = w.len();
        let prefix: Vec<f64> = std::iter::once(0.0).chain(w.iter().scan(0.0, |s, x| { *s += x; Some(*s) })).collect();
        let prefix2: Vec<f64> = std::iter::once(0.0).chain(w.iter().scan(0.0, |s, x| { *s += x * x; Some(*s) })).collect();
        let sse = |a: usize, b: usize| {
            let m = (b - a) as f64;
            let s = prefix[b] - prefix[a];
            prefix2[b] - prefix2[a] - s * s / m
        };
        let cut = (1..n).min_by(|&a, &b| (sse(0, a) + sse(a, n)).total_cmp(&(sse(0, b) + sse(b, n)))).unwrap();
        let lo_mean = prefix[cut] / cut as f64;
        let hi_mean = (prefix[n] - prefix[cut]) / (n - cut) as f64;
        let pooled_sd = ((sse(0, cut) + sse(cut, n)) / (n - 2) as f64).sqrt();
        assert!((hi_mean - lo_mean) / pooled_sd >= 3.0);
    }

    #[test]
    fn regimes_have_their_signatures() {
        let recs = generate_corpus(&GeneratorSpec::new(4000, 5)).unwrap();
        let mean = |g: u8, f: fn(&ShipmentRecord) -> f64| {
            let v: Vec<f64> = recs.iter().filter(|r| r.route_regime == g).map(f).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(0, |r| r.traffic_level) > mean(1, |r| r.traffic_level));
        assert!(mean(0, |r| r.distance_km) < mean(1, |r| r.distance_km));
        assert!(mean(1, |r| r.avg_speed_kmh) > mean(2, |r| r.avg_speed_kmh));
        assert!(mean(2, |r| r.elevation_change_m) > 5.0 * mean(1, |r| r.elevation_change_m));
        assert!(mean(2, |r| r.distance_km) > mean(0, |r| r.distance_km));
    }

    #[test]
    fn emissions_increase_with_fuel_within_category() {
        // same categories, larger fuel => larger expected emissions (noise-free part)
        let f = FuelType::Diesel;
        assert!(f.emission_factor() * 10.0 < f.emission_factor() * 11.0);
        for fuel in FuelType::ALL {
            assert!(fuel.emission_factor() > 0.0);
        }
    }

    #[test]
    fn outlier_count_arithmetic() {
        assert_eq!(outlier_count(1000, 0.01), 10);
        assert_eq!(outlier_count(1000, 0.048), 48);
        assert_eq!(outlier_count(1000, 0.0101), 11);
        assert_eq!(outlier_count(7, 0.1), 1);
    }

    #[test]
    fn inject_outliers_contract() {
        let recs = generate_corpus(&GeneratorSpec::new(1000, 3)).unwrap();
        let (out, idx) = inject_outliers(&recs, 0.048, 99).unwrap();
        assert_eq!(idx.len(), 48);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for (i, (a, b)) in recs.iter().zip(&out).enumerate() {
            if idx.binary_search(&i).is_ok() {
                let t = b.transit_time_days / a.transit_time_days;
                assert!((4.0..=8.0).contains(&t), "transit factor {t}");
                let d = b.distance_km / a.distance_km;
                assert!(d == 1.0 || (4.0..=8.0).contains(&d));
            } else {
                assert_eq!(a, b);
                assert_eq!(a.transit_time_days.to_bits(), b.transit_time_days.to_bits());
            }
        }
        let (_, ten) = inject_outliers(&recs, 0.01, 1).unwrap();
        assert_eq!(ten.len(), 10);
        assert!(inject_outliers(&recs, 0.0, 1).is_err());
        assert!(inject_outliers(&recs, 0.11, 1).is_err());
    }

    #[test]
    fn demand_is_deterministic_and_well_formed() {
        let a = generate_demand(30, 3, 5).unwrap();
        assert_eq!(a, generate_demand(30, 3, 5).unwrap());
        assert_eq!(a.len(), 90);
        assert!(a.iter().all(|r| r.day_of_week == r.day_index % 7 && r.region_id < 3 && r.deliveries >= 0.0));
        assert!(generate_demand(13, 3, 5).is_err());
        assert!(generate_demand(14, 0, 5).is_err());
    }

    #[test]
    fn corpus_csv_is_byte_identical() {
        let spec = GeneratorSpec::new(50, 8);
        let a = generate(&spec).unwrap().to_csv_bytes().unwrap();
        let b = generate(&spec).unwrap().to_csv_bytes().unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("shipment_id,transport_mode,vehicle_type,fuel_type,priority,distance_km,"));
        assert_eq!(text.lines().count(), 51);
    }
}
