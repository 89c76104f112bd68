//! Synthetic interview records with the same schema and statistical
//! texture as the real field-interview data: seasonal daily volume,
//! geography-linked race composition, appearance proxies, and free-text
//! labels with spelling variants.
//!
//! `link_strength` in [0, 1] scales every proxy-race dependence. At 0 the
//! proxies carry no information about race; at 1 race is a deterministic
//! function of district.

use chrono::{Datelike, Days, Months, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::InterviewRecord;
use crate::error::{Error, Result};
use crate::rng::derive_rng;

const DISTRICTS: [&str; 6] = ["A1", "B2", "C6", "D4", "E5", "G7"];
const CITIES: [&str; 8] = [
    "Boston",
    "Charlestown",
    "Dorchester",
    "East Boston",
    "Hyde Park",
    "Mattapan",
    "Roxbury",
    "South Boston",
];
/// Home city per district (records stay there with probability 0.7).
const DISTRICT_CITY: [usize; 6] = [0, 6, 7, 2, 4, 5];

pub const RACES: [&str; 4] = ["A", "B", "H", "W"];
const RACE_BASE: [f64; 4] = [0.10, 0.35, 0.20, 0.35];
/// Dominant race per district under a full-strength link.
const DISTRICT_RACE: [usize; 6] = [3, 1, 3, 1, 2, 0];

const COMPLEXIONS: [&str; 3] = ["dark", "light", "medium"];
const RACE_COMPLEXION: [usize; 4] = [2, 0, 2, 1];

/// Each inner list is one clothing family: canonical spelling first,
/// then variants that consolidate onto it.
const CLOTHING: [&[&str]; 10] = [
    &["black hoodie", "black hoody", "blak hoodie"],
    &["blue jeans", "blu jeans", "blue jeens"],
    &["red jacket", "red jaket"],
    &["white tshirt", "white tshert", "whyte tshirt"],
    &["gray sweatpants", "grey sweatpants"],
    &["green coat", "green cote"],
    &["brown boots", "broun boots"],
    &["denim vest", "denem vest"],
    &["plaid shirt", "plad shirt"],
    &["leather jacket", "lether jacket"],
];
const RACE_CLOTHING: [usize; 4] = [3, 0, 8, 1];

const REASONS: [&[&str]; 6] = [
    &["Investigate Person", "Investagate Person", "Investigate Persen"],
    &["Motor Vehicle Stop", "Motor Vehical Stop", "Moter Vehicle Stop"],
    &["Drug Activity", "Drug Activty", "Drugs Activity"],
    &["Trespassing", "Tresspassing", "Trespasing"],
    &["Disturbance", "Disturbence", "Distrubance"],
    &["Warrant Service", "Warrent Service", "Warrant Servise"],
];
const RACE_REASON: [usize; 4] = [5, 0, 2, 1];
const DISTRICT_REASON: [usize; 6] = [0, 1, 2, 3, 4, 5];
const QUARTER_REASON: [usize; 4] = [4, 3, 3, 5];

const STREET_NAMES: [&str; 24] = [
    "Adams", "Beacon", "Blue Hill", "Bowdoin", "Centre", "Columbia", "Dudley", "Geneva",
    "Harvard", "Hancock", "Huntington", "Hyde Park", "Maple", "Milton", "Norfolk", "Park",
    "Quincy", "River", "Seaver", "Talbot", "Tremont", "Walnut", "Warren", "Washington",
];

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n: usize,
    pub seed: u64,
    /// Proxy-race dependence in [0, 1].
    pub link_strength: f64,
    pub start: NaiveDate,
    pub years: u32,
}

impl SynthSpec {
    pub fn new(seed: u64) -> SynthSpec {
        SynthSpec {
            n: 20_000,
            seed,
            link_strength: 0.9,
            start: NaiveDate::from_ymd_opt(2009, 1, 1).expect("fixed date"),
            years: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.link_strength) {
            return Err(Error::config(format!(
                "link_strength must lie in [0, 1], got {}",
                self.link_strength
            )));
        }
        if self.years == 0 {
            return Err(Error::config("years must be at least 1"));
        }
        Ok(())
    }

    pub fn end(&self) -> NaiveDate {
        self.start + Months::new(self.years * 12) - Days::new(1)
    }
}

/// Weighted categorical draw; weights need not be normalized.
fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Canonical spelling with probability 0.7, otherwise one of the variants.
fn variant(rng: &mut ChaCha8Rng, family: &[&str]) -> String {
    if family.len() == 1 || rng.random_range(0.0..1.0) < 0.7 {
        return family[0].to_string();
    }
    let i = 1 + rng.random_range(0..family.len() - 1);
    family[i].to_string()
}

/// Number of records on each day: a summer-peaked annual cycle times a
/// per-day noise factor, allocated by largest remainder so the counts sum
/// to exactly n.
fn daily_counts(spec: &SynthSpec, dates: &[NaiveDate]) -> Vec<usize> {
    let mut rng = derive_rng(spec.seed, &["synth", "intensity"]);
    let weights: Vec<f64> = dates
        .iter()
        .map(|d| {
            let t = (d.ordinal() as f64 - 196.0) / 365.25;
            let seasonal = 1.0 + 0.4 * (std::f64::consts::TAU * t).cos();
            seasonal * (0.8 + 0.4 * rng.random_range(0.0..1.0))
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let targets: Vec<f64> = weights.iter().map(|w| w / total * spec.n as f64).collect();
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..dates.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &day in by_remainder.iter().take(spec.n - assigned) {
        counts[day] += 1;
    }
    counts
}

pub fn generate(spec: &SynthSpec) -> Result<Vec<InterviewRecord>> {
    spec.validate()?;
    let n_days = (spec.end() - spec.start).num_days() as usize + 1;
    let dates: Vec<NaiveDate> = (0..n_days).map(|i| spec.start + Days::new(i as u64)).collect();
    let counts = daily_counts(spec, &dates);

    let lambda = spec.link_strength;
    let mut rng = derive_rng(spec.seed, &["synth", "records"]);
    let priors_dist = Poisson::new(1.2).expect("valid rate");
    let mut records = Vec::with_capacity(spec.n);
    for (day, &c) in counts.iter().enumerate() {
        let date = dates[day];
        let quarter = (date.month() as usize + 2) / 3;
        for _ in 0..c {
            let district = rng.random_range(0..DISTRICTS.len());
            let city = if rng.random_range(0.0..1.0) < 0.7 {
                DISTRICT_CITY[district]
            } else {
                rng.random_range(0..CITIES.len())
            };
            let race = if rng.random_range(0.0..1.0) < lambda {
                DISTRICT_RACE[district]
            } else {
                pick(&mut rng, &RACE_BASE)
            };
            let complexion = if rng.random_range(0.0..1.0) < 0.85 * lambda {
                RACE_COMPLEXION[race]
            } else {
                rng.random_range(0..COMPLEXIONS.len())
            };
            let clothing_family = if rng.random_range(0.0..1.0) < 0.6 * lambda {
                RACE_CLOTHING[race]
            } else {
                rng.random_range(0..CLOTHING.len())
            };
            let mut reason_weights = [1.0f64; 6];
            reason_weights[RACE_REASON[race]] += 1.2;
            reason_weights[DISTRICT_REASON[district]] += 0.5;
            reason_weights[QUARTER_REASON[quarter - 1]] += 0.4;
            let reason_family = pick(&mut rng, &reason_weights);

            let sex = if rng.random_range(0.0..1.0) < 0.72 { "M" } else { "F" };
            let street = format!(
                "{} {} St",
                1 + rng.random_range(0..199),
                STREET_NAMES[rng.random_range(0..STREET_NAMES.len())]
            );
            records.push(InterviewRecord {
                sex: sex.into(),
                street,
                district: DISTRICTS[district].into(),
                city: CITIES[city].into(),
                date,
                priors: priors_dist.sample(&mut rng),
                race: RACES[race].into(),
                skin_complexion: COMPLEXIONS[complexion].into(),
                clothing: variant(&mut rng, CLOTHING[clothing_family]),
                incident_reason: variant(&mut rng, REASONS[reason_family]),
            });
        }
    }
    Ok(records)
}
