//! Dataset I/O, Kaplan–Meier estimation, survival tables, model comparison
//! reports and plot-ready curve grids.

use std::io::{Read, Write};
use std::path::Path;

use serde::ser::Serialize;
use serde::Serialize as SerializeDerive;

use crate::baseline::Baseline;
use crate::data::{Observation, Status, SurvivalDataset};
use crate::error::{Result, ZacrError};
use crate::inference::{fit_mle, rank_by_aic, FitConfig, FitResult};
use crate::model::{ZacrModel, ZacrVariant};

/// Parse `time,status` CSV. Line numbers in errors are 1-based and count the header.
pub fn read_dataset<R: Read>(reader: R) -> Result<SurvivalDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| ZacrError::data_at(1, format!("unreadable header: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["time", "status"] {
        return Err(ZacrError::data_at(
            1,
            format!("expected header `time,status`, found `{}`", names.join(",")),
        ));
    }
    let mut obs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            ZacrError::data_at(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 2 {
            return Err(ZacrError::data_at(
                line,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        let time: f64 = rec[0]
            .parse()
            .map_err(|_| ZacrError::data_at(line, format!("time `{}` is not a number", &rec[0])))?;
        if time.is_nan() || time < 0.0 {
            return Err(ZacrError::data_at(
                line,
                format!("time must be nonnegative, got {time}"),
            ));
        }
        let status = match &rec[1] {
            "1" => Status::Event,
            "0" => Status::Censored,
            other => {
                return Err(ZacrError::data_at(
                    line,
                    format!("status must be 0 or 1, got `{other}`"),
                ))
            }
        };
        if time == 0.0 && status == Status::Censored {
            return Err(ZacrError::data_at(
                line,
                "zero-time observation cannot be censored",
            ));
        }
        if time == f64::INFINITY && status == Status::Event {
            return Err(ZacrError::data_at(
                line,
                "an event cannot occur at infinite time",
            ));
        }
        obs.push(Observation { time, status });
    }
    if obs.is_empty() {
        return Err(ZacrError::data("dataset has no rows"));
    }
    SurvivalDataset::new(obs)
}

pub fn load_dataset(path: &Path) -> Result<SurvivalDataset> {
    let f =
        std::fs::File::open(path).map_err(|e| ZacrError::Io(format!("{}: {e}", path.display())))?;
    read_dataset(std::io::BufReader::new(f))
}

/// Write `time,status` CSV with shortest round-trip decimal times.
pub fn write_dataset<W: Write>(d: &SurvivalDataset, mut w: W) -> Result<()> {
    writeln!(w, "time,status")?;
    for o in d.iter() {
        writeln!(w, "{},{}", fmt_time(o.time), o.status.indicator())?;
    }
    Ok(())
}

fn fmt_time(t: f64) -> String {
    if t == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{t}")
    }
}

/// One step of the product-limit estimate.
#[derive(Debug, Clone, Copy, PartialEq, SerializeDerive)]
pub struct KmStep {
    pub time: f64,
    /// Survival just after `time`.
    pub survival: f64,
    pub at_risk: usize,
    pub events: usize,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive)]
pub struct KaplanMeierCurve {
    pub steps: Vec<KmStep>,
}

impl KaplanMeierCurve {
    /// Right-continuous step function value at `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.time <= t);
        if idx == 0 {
            1.0
        } else {
            self.steps[idx - 1].survival
        }
    }
}

/// Product-limit estimator. Ties are grouped; at a shared time events are
/// counted before censorings, so censored subjects remain at risk.
pub fn kaplan_meier(d: &SurvivalDataset) -> KaplanMeierCurve {
    let mut obs: Vec<Observation> = d.observations().to_vec();
    obs.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut steps = Vec::new();
    let mut at_risk = obs.len();
    let mut surv = 1.0;
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].time;
        let mut events = 0;
        let mut censored = 0;
        while i < obs.len() && obs[i].time == t {
            if obs[i].is_event() {
                events += 1;
            } else {
                censored += 1;
            }
            i += 1;
        }
        if events > 0 {
            surv *= 1.0 - events as f64 / at_risk as f64;
        }
        steps.push(KmStep {
            time: t,
            survival: surv,
            at_risk,
            events,
            censored,
        });
        at_risk -= events + censored;
    }
    KaplanMeierCurve { steps }
}

pub fn write_km_csv<W: Write>(km: &KaplanMeierCurve, mut w: W) -> Result<()> {
    writeln!(w, "time,survival,at_risk,events,censored")?;
    for s in &km.steps {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_time(s.time),
            sig17(s.survival),
            s.at_risk,
            s.events,
            s.censored
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, SerializeDerive)]
pub struct SurvivalRow {
    pub time: f64,
    pub survival: f64,
}

/// `(t, S_zp(t))` rows; `times` must be nonnegative and nondecreasing.
pub fn survival_table<B: Baseline>(m: &ZacrModel<B>, times: &[f64]) -> Result<Vec<SurvivalRow>> {
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(ZacrError::domain(
            "survival-table times must be nondecreasing",
        ));
    }
    times
        .iter()
        .map(|&t| {
            Ok(SurvivalRow {
                time: t,
                survival: m.population_survival(t)?,
            })
        })
        .collect()
}

/// Percentages to two decimals, e.g. `95.46%`.
pub fn format_survival_table(rows: &[SurvivalRow]) -> String {
    let mut out = String::from("time\tsurvival\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{:.2}%\n",
            fmt_time(r.time),
            100.0 * r.survival
        ));
    }
    out
}

#[derive(Debug, Clone, SerializeDerive)]
pub struct VariantTable {
    pub variant: String,
    pub rows: Vec<SurvivalRow>,
}

#[derive(Debug, Clone, SerializeDerive)]
pub struct CurveGrid {
    pub times: Vec<f64>,
    pub kaplan_meier: Vec<f64>,
    /// One fitted survival column per entry of `ReportBundle::fits`.
    pub fitted: Vec<Vec<f64>>,
}

/// Fits of all compared variants with their AIC ordering.
#[derive(Debug, Clone, SerializeDerive)]
pub struct ReportBundle {
    pub fits: Vec<FitResult>,
    /// Variant labels by ascending AIC.
    pub aic_ranking: Vec<String>,
    pub survival_table: Vec<VariantTable>,
    pub curves: CurveGrid,
}

/// The four variants compared by default: mixture, promotion, NB with `nb_eta`, geometric.
pub fn comparison_variants(nb_eta: f64) -> Result<Vec<ZacrVariant>> {
    Ok(vec![
        ZacrVariant::StandardMixture,
        ZacrVariant::Promotion,
        ZacrVariant::negative_binomial(nb_eta)?,
        ZacrVariant::Geometric,
    ])
}

/// Evenly spaced grid on `[0, t_max]` with `n` points.
pub fn time_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max > 0.0) || n < 2 {
        return Err(ZacrError::domain(
            "curve grid needs a positive finite end and at least two points",
        ));
    }
    Ok((0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect())
}

/// KM and fitted population survival on a shared time grid.
pub fn curve_grid(d: &SurvivalDataset, fits: &[FitResult], times: &[f64]) -> Result<CurveGrid> {
    let km = kaplan_meier(d);
    let fitted = fits
        .iter()
        .map(|f| {
            let m = f.model()?;
            times
                .iter()
                .map(|&t| m.population_survival(t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveGrid {
        times: times.to_vec(),
        kaplan_meier: times.iter().map(|&t| km.survival_at(t)).collect(),
        fitted,
    })
}

pub fn write_curves_csv<W: Write>(grid: &CurveGrid, labels: &[String], mut w: W) -> Result<()> {
    write!(w, "time,km")?;
    for l in labels {
        write!(w, ",{l}")?;
    }
    writeln!(w)?;
    for (i, t) in grid.times.iter().enumerate() {
        write!(w, "{},{}", sig17(*t), sig17(grid.kaplan_meier[i]))?;
        for col in &grid.fitted {
            write!(w, ",{}", sig17(col[i]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Fit every variant and assemble the comparison report.
pub fn compare(
    d: &SurvivalDataset,
    variants: &[ZacrVariant],
    cfg: &FitConfig,
    table_times: &[f64],
    grid: &[f64],
) -> Result<ReportBundle> {
    let fits = variants
        .iter()
        .map(|&v| fit_mle(v, d, cfg))
        .collect::<Result<Vec<_>>>()?;
    let aic_ranking = rank_by_aic(&fits)
        .into_iter()
        .map(|i| fits[i].variant.label().to_string())
        .collect();
    let survival_table = fits
        .iter()
        .map(|f| {
            Ok(VariantTable {
                variant: f.variant.label().to_string(),
                rows: survival_table(&f.model()?, table_times)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let curves = curve_grid(d, &fits, grid)?;
    Ok(ReportBundle {
        fits,
        aic_ranking,
        survival_table,
        curves,
    })
}

/// Estimates with standard deviations side by side, one column pair per variant.
pub fn format_fit_table(fits: &[FitResult]) -> String {
    let mut out = String::new();
    for f in fits {
        out.push_str(&format!("{:>22}", format!("{}", f.variant)));
    }
    out.push('\n');
    let rows = fits.iter().map(|f| f.k()).max().unwrap_or(0);
    for i in 0..rows {
        for f in fits {
            if i < f.k() {
                out.push_str(&format!(
                    "{:>7} {:>8.4} {:>6}",
                    f.param_names[i],
                    f.estimates[i],
                    fmt_se(f.std_errors[i])
                ));
            } else {
                out.push_str(&format!("{:>22}", ""));
            }
        }
        out.push('\n');
    }
    for f in fits {
        out.push_str(&format!("{:>7} {:>14.2}", "AIC", f.aic));
    }
    out.push('\n');
    out
}

fn fmt_se(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "NA".into()
    }
}

/// Seventeen significant digits in scientific notation.
pub fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON formatter writing every float with 17 significant digits.
struct Sig17Formatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format!("{value:.16e}").as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-significant-digit floats; non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Sig17Formatter(serde_json::ser::PrettyFormatter::new()),
    );
    value
        .serialize(&mut ser)
        .map_err(|e| ZacrError::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| ZacrError::Io(e.to_string()))
}
