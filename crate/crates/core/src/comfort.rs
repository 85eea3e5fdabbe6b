//! Thermal comfort: Fanger's predicted mean vote and the skin-temperature
//! driven predictive thermal state (PTS) classifier.

use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::nnmodel::{self, Head, MlpParams, NormStats, TrainConfig};
use crate::{rng, Error, Result};

/// Km²/W per clo.
pub const CLO_TO_SI: f64 = 0.155;
/// W/m² per met.
pub const MET_TO_SI: f64 = 58.2;

/// Skin temperature below which the synthetic occupant feels cool, °C.
pub const COOL_BELOW: f64 = 32.5;
/// Skin temperature above which the synthetic occupant feels warm, °C.
pub const WARM_ABOVE: f64 = 34.5;

const PMV_TOL: f64 = 1e-5;
const PMV_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occupant {
    /// m
    pub height: f64,
    /// kg
    pub weight: f64,
    pub gender: Gender,
    /// Clothing insulation in clo.
    pub clo: f64,
    /// Metabolic rate in met.
    pub met: f64,
}

impl Occupant {
    pub fn new(height: f64, weight: f64, gender: Gender, clo: f64, met: f64) -> Result<Self> {
        let o = Occupant { height, weight, gender, clo, met };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        check_body(self.height, self.weight)?;
        if !(self.clo >= 0.0 && self.clo.is_finite()) {
            return Err(Error::Domain(format!("clothing insulation must be >= 0 clo, got {}", self.clo)));
        }
        if !(self.met > 0.0 && self.met.is_finite()) {
            return Err(Error::Domain(format!("metabolic rate must be > 0 met, got {}", self.met)));
        }
        Ok(())
    }

    /// Clothing insulation in Km²/W.
    pub fn i_cl(&self) -> f64 {
        self.clo * CLO_TO_SI
    }

    /// Metabolic rate in W/m².
    pub fn metabolic_rate(&self) -> f64 {
        self.met * MET_TO_SI
    }
}

fn check_body(height: f64, weight: f64) -> Result<()> {
    if !(height > 0.5 && height < 2.5) {
        return Err(Error::Domain(format!("height {height} m outside (0.5, 2.5)")));
    }
    if !(weight > 20.0 && weight < 250.0) {
        return Err(Error::Domain(format!("weight {weight} kg outside (20, 250)")));
    }
    Ok(())
}

/// DuBois body surface area in m².
pub fn dubois_area(height: f64, weight: f64) -> Result<f64> {
    check_body(height, weight)?;
    Ok(0.203 * height.powf(0.725) * weight.powf(0.425))
}

/// Clothing-corrected area `(1 - I_cl) * A_du` used to normalize skin features.
pub fn effective_area(occ: &Occupant) -> Result<f64> {
    occ.validate()?;
    let factor = 1.0 - occ.i_cl();
    if factor <= 0.0 {
        return Err(Error::Domain(format!(
            "clothing insulation {} Km²/W leaves no effective area",
            occ.i_cl()
        )));
    }
    Ok(factor * dubois_area(occ.height, occ.weight)?)
}

/// Time-ordered skin temperatures from a wearable sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinTrace {
    samples: Vec<f64>,
    sampling_period: f64,
}

impl SkinTrace {
    /// `sampling_period` is in minutes.
    pub fn new(samples: Vec<f64>, sampling_period: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::EmptyInput("skin trace needs at least two samples"));
        }
        if !(sampling_period > 0.0 && sampling_period.is_finite()) {
            return Err(Error::Domain(format!("sampling period must be > 0, got {sampling_period}")));
        }
        if let Some(t) = samples.iter().find(|t| !(**t > 20.0 && **t < 45.0)) {
            return Err(Error::Domain(format!("skin temperature {t} °C outside (20, 45)")));
        }
        Ok(SkinTrace { samples, sampling_period })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sampling_period(&self) -> f64 {
        self.sampling_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtsFeatures {
    pub t_s: f64,
    pub t_s_grad: f64,
    pub t_s_norm: f64,
    pub t_s_grad_norm: f64,
}

impl PtsFeatures {
    pub fn new(t_s: f64, t_s_grad: f64, area: f64) -> Self {
        PtsFeatures { t_s, t_s_grad, t_s_norm: t_s / area, t_s_grad_norm: t_s_grad / area }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.t_s, self.t_s_grad, self.t_s_norm, self.t_s_grad_norm]
    }
}

/// Features per sample: backward difference gradient, forward difference at
/// the first sample, both normalized by the occupant's effective area.
pub fn pts_features(trace: &SkinTrace, occ: &Occupant) -> Result<Vec<PtsFeatures>> {
    let area = effective_area(occ)?;
    let s = &trace.samples;
    let dt = trace.sampling_period;
    Ok((0..s.len())
        .map(|k| {
            let grad = if k == 0 { (s[1] - s[0]) / dt } else { (s[k] - s[k - 1]) / dt };
            PtsFeatures::new(s[k], grad, area)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum PtsLabel {
    Cool,
    Neutral,
    Warm,
}

impl PtsLabel {
    /// Output-unit order of the classifier.
    pub const ALL: [PtsLabel; 3] = [PtsLabel::Cool, PtsLabel::Neutral, PtsLabel::Warm];

    pub fn value(self) -> i8 {
        match self {
            PtsLabel::Cool => -1,
            PtsLabel::Neutral => 0,
            PtsLabel::Warm => 1,
        }
    }

    /// |PTS| as used by the objective.
    pub fn magnitude(self) -> f64 {
        f64::from(self.value().abs())
    }

    fn index(self) -> usize {
        (self.value() + 1) as usize
    }

    fn one_hot(self) -> Vec<f64> {
        let mut v = vec![0.0; 3];
        v[self.index()] = 1.0;
        v
    }

    /// Label implied by a skin temperature under the synthetic thresholds.
    pub fn from_skin_temperature(t_s: f64) -> Self {
        if t_s < COOL_BELOW {
            PtsLabel::Cool
        } else if t_s > WARM_ABOVE {
            PtsLabel::Warm
        } else {
            PtsLabel::Neutral
        }
    }
}

impl From<PtsLabel> for i8 {
    fn from(l: PtsLabel) -> i8 {
        l.value()
    }
}

impl TryFrom<i8> for PtsLabel {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(PtsLabel::Cool),
            0 => Ok(PtsLabel::Neutral),
            1 => Ok(PtsLabel::Warm),
            other => Err(Error::Domain(format!("PTS label {other} not in {{-1, 0, 1}}"))),
        }
    }
}

/// Argmax over outputs ordered (cool, neutral, warm); any tie at the maximum
/// resolves to neutral.
pub fn label_from_outputs(outputs: &[f64]) -> Result<PtsLabel> {
    if outputs.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: outputs.len() });
    }
    let max = outputs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = (0..3).filter(|&i| outputs[i] == max).collect();
    Ok(match winners.as_slice() {
        [i] => PtsLabel::ALL[*i],
        _ => PtsLabel::Neutral,
    })
}

pub fn pts_predict(model: &MlpParams, stats: &NormStats, f: &PtsFeatures) -> Result<PtsLabel> {
    if model.input_dim != 4 || model.output_dim != 3 {
        return Err(Error::DimensionMismatch { expected: 4, got: model.input_dim });
    }
    let out = model.forward(&stats.standardize(&f.to_vec())?)?;
    label_from_outputs(&out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtsClassifier {
    pub model: MlpParams,
    pub stats: NormStats,
}

pub fn default_pts_train_config() -> TrainConfig {
    TrainConfig { learning_rate: 2.0, epochs: 3000, seed: 0xC0FFEE, init_scale: 0.5 }
}

/// Trains a 4-input, 3-output sigmoid classifier on standardized features.
pub fn pts_train(dataset: &[(PtsFeatures, PtsLabel)], cfg: &TrainConfig) -> Result<PtsClassifier> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("PTS training set"));
    }
    for label in PtsLabel::ALL {
        if !dataset.iter().any(|(_, l)| *l == label) {
            return Err(Error::MissingClass(label.value()));
        }
    }
    let rows: Vec<Vec<f64>> = dataset.iter().map(|(f, _)| f.to_vec()).collect();
    let stats = NormStats::fit(&rows)?;
    let data = rows
        .iter()
        .zip(dataset)
        .map(|(x, (_, l))| Ok((stats.standardize(x)?, l.one_hot())))
        .collect::<Result<Vec<_>>>()?;
    let model = nnmodel::fit_network(4, nnmodel::DEFAULT_HIDDEN, 3, Head::Classifier, &data, cfg)?;
    Ok(PtsClassifier { model, stats })
}

impl PtsClassifier {
    pub fn predict(&self, f: &PtsFeatures) -> Result<PtsLabel> {
        pts_predict(&self.model, &self.stats, f)
    }

    pub fn accuracy(&self, dataset: &[(PtsFeatures, PtsLabel)]) -> Result<f64> {
        if dataset.is_empty() {
            return Err(Error::EmptyInput("evaluation set"));
        }
        let mut hits = 0usize;
        for (f, l) in dataset {
            if self.predict(f)? == *l {
                hits += 1;
            }
        }
        Ok(hits as f64 / dataset.len() as f64)
    }
}

/// Fanger's predicted mean vote (ASHRAE 55 / ISO 7730 heat balance, no
/// external work). Temperatures in °C, velocity in m/s, humidity in %.
pub fn pmv(t_air: f64, t_mrt: f64, v_air: f64, humidity: f64, occ: &Occupant) -> Result<f64> {
    if !(t_air > 10.0 && t_air < 40.0) {
        return Err(Error::Domain(format!("air temperature {t_air} °C outside (10, 40)")));
    }
    if !t_mrt.is_finite() {
        return Err(Error::Domain("mean radiant temperature not finite".into()));
    }
    if !(v_air >= 0.0 && v_air.is_finite()) {
        return Err(Error::Domain(format!("air velocity must be >= 0, got {v_air}")));
    }
    if !(0.0..=100.0).contains(&humidity) {
        return Err(Error::Domain(format!("humidity {humidity} % outside [0, 100]")));
    }
    occ.validate()?;

    // water vapour partial pressure, Pa
    let pa = humidity * 10.0 * (16.6536 - 4030.183 / (t_air + 235.0)).exp();
    let icl = occ.i_cl();
    let m = occ.metabolic_rate();
    let mw = m;
    let fcl = if icl <= 0.078 { 1.0 + 1.29 * icl } else { 1.05 + 0.645 * icl };
    let hcf = 12.1 * v_air.sqrt();
    let taa = t_air + 273.0;
    let tra = t_mrt + 273.0;

    // clothing surface temperature, solved in units of 100 K
    let p1 = icl * fcl;
    let p2 = p1 * 3.96;
    let p3 = p1 * 100.0;
    let p4 = p1 * taa;
    let p5 = 308.7 - 0.028 * mw + p2 * (tra / 100.0).powi(4);
    let tcla = taa + (35.5 - t_air) / (3.5 * icl + 0.1);
    let mut xn = tcla / 100.0;
    let mut xf = tcla / 50.0;
    let mut hc = hcf;
    let mut iterations = 0;
    while (xn - xf).abs() * 100.0 > PMV_TOL {
        if iterations == PMV_MAX_ITER {
            return Err(Error::NonConvergence { iterations });
        }
        xf = (xf + xn) / 2.0;
        let hcn = 2.38 * (100.0 * xf - taa).abs().powf(0.25);
        hc = hcf.max(hcn);
        xn = (p5 + p4 * hc - p2 * xf.powi(4)) / (100.0 + p3 * hc);
        iterations += 1;
    }
    if !xn.is_finite() {
        return Err(Error::NonConvergence { iterations });
    }
    let tcl = 100.0 * xn - 273.0;

    let hl1 = 3.05e-3 * (5733.0 - 6.99 * mw - pa);
    let hl2 = if mw > 58.15 { 0.42 * (mw - 58.15) } else { 0.0 };
    let hl3 = 1.7e-5 * m * (5867.0 - pa);
    let hl4 = 0.0014 * m * (34.0 - t_air);
    let hl5 = 3.96 * fcl * (xn.powi(4) - (tra / 100.0).powi(4));
    let hl6 = fcl * hc * (tcl - t_air);
    let ts = 0.303 * (-0.036 * m).exp() + 0.028;
    Ok(ts * (mw - hl1 - hl2 - hl3 - hl4 - hl5 - hl6))
}

/// Declared steady-state skin temperature response of the synthetic occupant:
/// `T_s = base + slope * (T_air - reference) + met_gain * (met - 1) + clo_gain * (clo - 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkinResponse {
    pub base: f64,
    pub slope: f64,
    pub reference_air_temp: f64,
    pub met_gain: f64,
    pub clo_gain: f64,
    /// Standard deviation of additive sensor noise, °C.
    pub noise_std: f64,
    /// Minutes between wearable samples.
    pub sampling_period: f64,
}

impl Default for SkinResponse {
    fn default() -> Self {
        SkinResponse {
            base: 33.5,
            slope: 0.5,
            reference_air_temp: 22.0,
            met_gain: 2.0,
            clo_gain: 1.5,
            noise_std: 0.1,
            sampling_period: 5.0,
        }
    }
}

impl SkinResponse {
    pub fn skin_temperature(&self, t_air: f64, occ: &Occupant) -> f64 {
        self.base
            + self.slope * (t_air - self.reference_air_temp)
            + self.met_gain * (occ.met - 1.0)
            + self.clo_gain * (occ.clo - 0.5)
    }

    /// Air temperature at which the noiseless skin temperature sits midway
    /// between the cool and warm thresholds.
    pub fn neutral_air_temperature(&self, occ: &Occupant) -> f64 {
        let mid = 0.5 * (COOL_BELOW + WARM_ABOVE);
        self.reference_air_temp
            + (mid - self.base - self.met_gain * (occ.met - 1.0) - self.clo_gain * (occ.clo - 0.5))
                / self.slope
    }

    /// Features of a steady skin temperature held over two samples.
    pub fn steady_features(&self, t_air: f64, occ: &Occupant) -> Result<PtsFeatures> {
        let t = self.skin_temperature(t_air, occ);
        let trace = SkinTrace::new(vec![t, t], self.sampling_period)?;
        Ok(pts_features(&trace, occ)?[0])
    }
}

/// Labeled synthetic wearable trace: air temperatures drawn uniformly from
/// `temp_range`, skin response plus Gaussian noise, thresholds applied to the
/// noisy skin temperature.
pub fn synthetic_skin_dataset(
    temp_range: (f64, f64),
    occ: &Occupant,
    n: usize,
    seed: u64,
    response: &SkinResponse,
) -> Result<Vec<(PtsFeatures, PtsLabel)>> {
    if n < 30 {
        return Err(Error::Domain(format!("synthetic skin dataset needs n >= 30, got {n}")));
    }
    let (lo, hi) = temp_range;
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty temperature range ({lo}, {hi})")));
    }
    if !(response.noise_std >= 0.0) {
        return Err(Error::Config(format!("skin noise_std must be >= 0, got {}", response.noise_std)));
    }
    let mut r = rng::seeded(seed);
    let noise = Normal::new(0.0, response.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let skin: Vec<f64> = (0..n)
        .map(|_| {
            let t_air = r.random_range(lo..=hi);
            response.skin_temperature(t_air, occ) + noise.sample(&mut r)
        })
        .collect();
    let trace = SkinTrace::new(skin, response.sampling_period)?;
    let feats = pts_features(&trace, occ)?;
    Ok(feats
        .into_iter()
        .map(|f| {
            let label = PtsLabel::from_skin_temperature(f.t_s);
            (f, label)
        })
        .collect())
}

pub fn write_skin_csv<W: Write>(out: W, rows: &[(PtsFeatures, PtsLabel)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "t_s_grad", "t_s_norm", "t_s_grad_norm", "label"])?;
    for (f, l) in rows {
        w.write_record([
            f.t_s.to_string(),
            f.t_s_grad.to_string(),
            f.t_s_norm.to_string(),
            f.t_s_grad_norm.to_string(),
            l.value().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn occupant(clo: f64, met: f64) -> Occupant {
        Occupant::new(1.7, 70.0, Gender::Male, clo, met).unwrap()
    }

    #[test]
    fn dubois_reference_and_scaling() {
        // 0.203 * 1.7^0.725 * 70^0.425 evaluated at higher precision
        let a = dubois_area(1.7, 70.0).unwrap();
        assert!((a - 1.814_421_456).abs() < 1e-8, "{a}");
        let h2 = dubois_area(2.0, 70.0).unwrap() / dubois_area(1.0, 70.0).unwrap();
        assert!((h2 - 2f64.powf(0.725)).abs() < 1e-12);
        let w2 = dubois_area(1.7, 140.0).unwrap() / dubois_area(1.7, 70.0).unwrap();
        assert!((w2 - 2f64.powf(0.425)).abs() < 1e-12);
        assert!(dubois_area(0.4, 70.0).is_err());
        assert!(dubois_area(1.7, 300.0).is_err());
    }

    #[test]
    fn effective_area_cases() {
        assert_eq!(effective_area(&occupant(0.0, 1.0)).unwrap(), dubois_area(1.7, 70.0).unwrap());
        let a = effective_area(&occupant(0.5, 1.0)).unwrap();
        assert!((a - 0.9225 * dubois_area(1.7, 70.0).unwrap()).abs() < 1e-12);
        assert!((a - 1.673_803_793).abs() < 1e-8, "{a}");
        let singular = Occupant { clo: 1.0 / CLO_TO_SI, ..occupant(0.5, 1.0) };
        assert!(matches!(effective_area(&singular), Err(Error::Domain(_))));
    }

    #[test]
    fn feature_gradients() {
        let occ = occupant(0.5, 1.0);
        let flat = pts_features(&SkinTrace::new(vec![33.0; 4], 5.0).unwrap(), &occ).unwrap();
        assert!(flat.iter().all(|f| f.t_s_grad == 0.0 && f.t_s_grad_norm == 0.0));

        let two = pts_features(&SkinTrace::new(vec![33.0, 33.5], 5.0).unwrap(), &occ).unwrap();
        assert!((two[1].t_s_grad - 0.1).abs() < 1e-12);
        assert!((two[0].t_s_grad - 0.1).abs() < 1e-12);

        let samples = vec![33.0, 33.4, 32.9, 34.1];
        let a = pts_features(&SkinTrace::new(samples.clone(), 5.0).unwrap(), &occ).unwrap();
        let b = pts_features(&SkinTrace::new(samples, 10.0).unwrap(), &occ).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            assert!((fa.t_s_grad - 2.0 * fb.t_s_grad).abs() < 1e-12);
        }
        let area = effective_area(&occ).unwrap();
        assert!((a[2].t_s_norm - 32.9 / area).abs() < 1e-12);
    }

    #[test]
    fn trace_validation() {
        assert!(SkinTrace::new(vec![33.0], 5.0).is_err());
        assert!(SkinTrace::new(vec![33.0, 33.0], 0.0).is_err());
        assert!(SkinTrace::new(vec![33.0, 50.0], 5.0).is_err());
    }

    #[test]
    fn argmax_and_tie_rule() {
        assert_eq!(label_from_outputs(&[0.9, 0.1, 0.2]).unwrap(), PtsLabel::Cool);
        assert_eq!(label_from_outputs(&[0.4, 0.4, 0.1]).unwrap(), PtsLabel::Neutral);
        assert_eq!(label_from_outputs(&[0.1, 0.2, 0.7]).unwrap(), PtsLabel::Warm);
        assert!(label_from_outputs(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn label_values_and_serde() {
        assert_eq!(PtsLabel::Cool.value(), -1);
        assert_eq!(PtsLabel::Warm.magnitude(), 1.0);
        assert_eq!(PtsLabel::Neutral.magnitude(), 0.0);
        assert_eq!(serde_json::to_string(&PtsLabel::Cool).unwrap(), "-1");
        assert!(serde_json::from_str::<PtsLabel>("2").is_err());
    }

    /// Fanger's comfort equation with the clothing temperature found by
    /// bisection on the heat-balance residual.
    fn pmv_bisection(ta: f64, tr: f64, v: f64, rh: f64, met: f64, clo: f64) -> f64 {
        let pa = rh * 10.0 * (16.6536 - 4030.183 / (ta + 235.0)).exp();
        let icl = 0.155 * clo;
        let m = met * 58.2;
        let fcl = if icl <= 0.078 { 1.0 + 1.29 * icl } else { 1.05 + 0.645 * icl };
        let hc_of = |tcl: f64| (2.38 * (tcl - ta).abs().powf(0.25)).max(12.1 * v.sqrt());
        let residual = |tcl: f64| {
            let rad = 3.96e-8 * fcl * ((tcl + 273.0).powi(4) - (tr + 273.0).powi(4));
            35.7 - 0.028 * m - icl * (rad + fcl * hc_of(tcl) * (tcl - ta)) - tcl
        };
        let (mut lo, mut hi) = (-20.0, 60.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tcl = 0.5 * (lo + hi);
        let hc = hc_of(tcl);
        let load = m
            - 3.05e-3 * (5733.0 - 6.99 * m - pa)
            - if m > 58.15 { 0.42 * (m - 58.15) } else { 0.0 }
            - 1.7e-5 * m * (5867.0 - pa)
            - 0.0014 * m * (34.0 - ta)
            - 3.96e-8 * fcl * ((tcl + 273.0).powi(4) - (tr + 273.0).powi(4))
            - fcl * hc * (tcl - ta);
        (0.303 * (-0.036 * m).exp() + 0.028) * load
    }

    #[test]
    fn pmv_matches_bisection_oracle() {
        for &(ta, tr, v, rh, met, clo) in &[
            (30.0, 30.0, 0.1, 60.0, 1.2, 0.5),
            (18.0, 18.0, 0.1, 60.0, 1.2, 0.5),
            (22.0, 24.0, 0.3, 40.0, 1.0, 1.0),
            (26.0, 26.0, 0.05, 70.0, 1.4, 0.9),
            (20.0, 20.0, 0.0, 50.0, 2.0, 0.0),
        ] {
            let occ = occupant(clo, met);
            let got = pmv(ta, tr, v, rh, &occ).unwrap();
            let want = pmv_bisection(ta, tr, v, rh, met, clo);
            assert!((got - want).abs() < 1e-3, "{ta} {v} {met} {clo}: {got} vs {want}");
        }
    }

    #[test]
    fn pmv_iso7730_reference_rows() {
        // (t_air, t_mrt, v, rh, met, clo) -> tabulated PMV
        let rows = [
            ((22.0, 22.0, 0.1, 60.0, 1.2, 0.5), -0.75),
            ((27.0, 27.0, 0.1, 60.0, 1.2, 0.5), 0.77),
            ((27.0, 27.0, 0.3, 60.0, 1.2, 0.5), 0.44),
            ((23.5, 25.5, 0.1, 60.0, 1.2, 0.5), -0.01),
            ((19.0, 19.0, 0.1, 40.0, 1.2, 1.0), -0.60),
        ];
        for ((ta, tr, v, rh, met, clo), want) in rows {
            let got = pmv(ta, tr, v, rh, &occupant(clo, met)).unwrap();
            assert!((got - want).abs() < 0.02, "{ta}/{tr}: {got} vs {want}");
        }
    }

    #[test]
    fn pmv_signs_and_monotonicity() {
        let occ = occupant(0.5, 1.2);
        assert!(pmv(30.0, 30.0, 0.1, 60.0, &occ).unwrap() > 0.5);
        assert!(pmv(18.0, 18.0, 0.1, 60.0, &occ).unwrap() < -0.5);
        assert!(pmv(26.0, 26.0, 0.1, 60.0, &occ).unwrap() > pmv(22.0, 22.0, 0.1, 60.0, &occ).unwrap());
        for v in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let mut prev = f64::NEG_INFINITY;
            for t in 18..=30 {
                let p = pmv(t as f64, t as f64, v, 60.0, &occ).unwrap();
                assert!(p > prev);
                prev = p;
            }
        }
        for t in 18..=30 {
            let mut prev = f64::INFINITY;
            for v in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
                let p = pmv(t as f64, t as f64, v, 60.0, &occ).unwrap();
                // free convection dominates at low speed, so PMV can plateau
                assert!(p <= prev + 1e-12, "t={t} v={v}");
                prev = p;
            }
        }
    }

    #[test]
    fn pmv_rejects_bad_inputs() {
        let occ = occupant(0.5, 1.2);
        assert!(pmv(45.0, 30.0, 0.1, 60.0, &occ).is_err());
        assert!(pmv(25.0, 25.0, -0.1, 60.0, &occ).is_err());
        assert!(pmv(25.0, 25.0, 0.1, 101.0, &occ).is_err());
    }

    #[test]
    fn synthetic_dataset_properties() {
        let occ = occupant(0.5, 1.0);
        let noiseless = SkinResponse { noise_std: 0.0, ..Default::default() };
        let rows = synthetic_skin_dataset((16.0, 28.0), &occ, 300, 3, &noiseless).unwrap();
        for (f, l) in &rows {
            assert_eq!(*l, PtsLabel::from_skin_temperature(f.t_s));
        }
        let a = synthetic_skin_dataset((16.0, 28.0), &occ, 100, 9, &SkinResponse::default()).unwrap();
        let b = synthetic_skin_dataset((16.0, 28.0), &occ, 100, 9, &SkinResponse::default()).unwrap();
        assert_eq!(a, b);

        let big = synthetic_skin_dataset((16.0, 28.0), &occ, 1000, 1, &SkinResponse::default()).unwrap();
        for label in PtsLabel::ALL {
            let count = big.iter().filter(|(_, l)| *l == label).count();
            assert!(count >= 100, "{label:?}: {count}");
        }
        assert!(synthetic_skin_dataset((16.0, 28.0), &occ, 29, 1, &SkinResponse::default()).is_err());
    }

    #[test]
    fn neutral_temperature_hits_band_center() {
        let r = SkinResponse::default();
        for occ in [occupant(0.5, 1.0), occupant(0.9, 1.4)] {
            let t = r.neutral_air_temperature(&occ);
            assert!((r.skin_temperature(t, &occ) - 33.5).abs() < 1e-12);
        }
    }

    #[test]
    fn pts_train_requires_all_classes() {
        let occ = occupant(0.5, 1.0);
        let rows: Vec<_> = synthetic_skin_dataset((16.0, 28.0), &occ, 200, 2, &SkinResponse::default())
            .unwrap()
            .into_iter()
            .filter(|(_, l)| *l != PtsLabel::Warm)
            .collect();
        assert!(matches!(pts_train(&rows, &default_pts_train_config()), Err(Error::MissingClass(1))));
    }

    #[test]
    fn pts_memorizes_three_points() {
        let occ = occupant(0.5, 1.0);
        let area = effective_area(&occ).unwrap();
        let rows = vec![
            (PtsFeatures::new(31.0, -0.1, area), PtsLabel::Cool),
            (PtsFeatures::new(33.5, 0.0, area), PtsLabel::Neutral),
            (PtsFeatures::new(35.5, 0.1, area), PtsLabel::Warm),
        ];
        let cfg = TrainConfig { learning_rate: 2.0, epochs: 5000, seed: 1, init_scale: 0.5 };
        let clf = pts_train(&rows, &cfg).unwrap();
        assert_eq!(clf.accuracy(&rows).unwrap(), 1.0);
    }

    #[test]
    fn skin_csv_header() {
        let occ = occupant(0.5, 1.0);
        let rows = synthetic_skin_dataset((16.0, 28.0), &occ, 30, 2, &SkinResponse::default()).unwrap();
        let mut buf = Vec::new();
        write_skin_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_s,t_s_grad,t_s_norm,t_s_grad_norm,label\n"));
    }

    proptest! {
        #[test]
        fn dubois_increasing(h in 0.6f64..2.3, w in 25.0f64..240.0, dh in 0.01f64..0.1, dw in 0.1f64..5.0) {
            let a = dubois_area(h, w).unwrap();
            prop_assert!(dubois_area(h + dh, w).unwrap() > a);
            prop_assert!(dubois_area(h, w + dw).unwrap() > a);
        }

        #[test]
        fn area_scaling_divides_normalized_features(t in 25.0f64..40.0, g in -1.0f64..1.0, a in 1.0f64..2.5, k in 0i32..4) {
            let c = 2f64.powi(k);
            let base = PtsFeatures::new(t, g, a);
            let scaled = PtsFeatures::new(t, g, a * c);
            prop_assert_eq!(scaled.t_s_norm, base.t_s_norm / c);
            prop_assert_eq!(scaled.t_s_grad_norm, base.t_s_grad_norm / c);
        }

        #[test]
        fn prediction_invariant_to_monotone_rescaling(o in proptest::array::uniform3(0.0f64..1.0), s in 0.1f64..10.0, b in -5.0f64..5.0) {
            let base = label_from_outputs(&o).unwrap();
            let mapped: Vec<f64> = o.iter().map(|v| (s * v + b).exp()).collect();
            prop_assert_eq!(label_from_outputs(&mapped).unwrap(), base);
        }
    }
}
