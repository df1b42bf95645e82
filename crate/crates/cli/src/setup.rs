//! Parsing of prior, side-information and grid arguments into library types.

use std::fs::File;
use std::path::PathBuf;

use rad_core::domain::{
    empirical_prior, read_column, AuxMap, ColumnSelector, ContinuousPrior, DiscretePrior, DiscreteUniverse,
    ErrorModel, ThreatModel,
};
use rad_core::{Error, Result};

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| bad(format!("{what}: '{s}' is not a number")))
}

/// `start:stop:step`, generated by integer stepping.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(bad(format!("grid '{s}' must look like start:stop:step")));
    };
    let (start, stop, step) = (parse_f64(start, "grid")?, parse_f64(stop, "grid")?, parse_f64(step, "grid")?);
    if !(step > 0.0) || stop < start {
        return Err(bad(format!("grid '{s}' needs step > 0 and stop ≥ start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(bad(format!("grid '{s}' has too many points")));
    }
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// A discrete universe, prior and threat model built from CLI arguments.
pub struct Discrete {
    pub universe: DiscreteUniverse,
    pub prior: DiscretePrior,
    pub threat: ThreatModel,
    pub prior_label: String,
}

impl Discrete {
    pub fn m(&self) -> usize {
        self.prior.len()
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct PriorArgs {
    /// Universe size for `uniform` and `skewed:P` priors.
    #[arg(long)]
    pub m: Option<usize>,
    /// uniform | skewed:P | weights:w1,w2,.. | counts:c1,c2,.. | csv:PATH
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    /// Column of a csv prior (name or 0-based index).
    #[arg(long, default_value = "0")]
    pub column: String,
    /// The csv prior has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// Side information: none | full | attr:FIELD[,FIELD..] (attr needs a csv prior).
    #[arg(long, default_value = "none")]
    pub aux: String,
    /// Success threshold on |z − z'|; 0 means exact match.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
}

fn csv_path(spec: &str) -> Option<PathBuf> {
    spec.strip_prefix("csv:").map(PathBuf::from)
}

impl PriorArgs {
    /// Checks referenced files exist before any work starts.
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = csv_path(&self.prior) {
            if !p.is_file() {
                return Err(bad(format!("prior file '{}' does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Discrete> {
        self.validate()?;
        if let Some(fields) = self.aux.strip_prefix("attr:") {
            return self.build_records(fields);
        }
        let (universe, prior) = self.build_prior()?;
        let m = universe.len();
        let aux = match self.aux.as_str() {
            "none" => AuxMap::none(m),
            "full" => AuxMap::full(m),
            other => return Err(bad(format!("unknown side-information mode '{other}'"))),
        };
        let threat = ThreatModel::new(&universe, self.error()?, aux)?;
        Ok(Discrete { universe, prior, threat, prior_label: self.prior.clone() })
    }

    fn error(&self) -> Result<ErrorModel> {
        if !(self.eta >= 0.0) {
            return Err(bad(format!("threshold {} must be nonnegative", self.eta)));
        }
        Ok(if self.eta == 0.0 { ErrorModel::exact() } else { ErrorModel::absolute(self.eta) })
    }

    fn need_m(&self) -> Result<usize> {
        self.m.ok_or_else(|| bad(format!("prior '{}' needs --m", self.prior)))
    }

    fn build_prior(&self) -> Result<(DiscreteUniverse, DiscretePrior)> {
        let spec = self.prior.as_str();
        if let Some(path) = csv_path(spec) {
            let file = File::open(&path).map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
            let values = read_column(file, &ColumnSelector::parse(&self.column), !self.no_header)?;
            let mut labels = values.clone();
            labels.sort();
            labels.dedup();
            let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
            let universe = match numeric {
                Some(mut nums) => {
                    let mut order: Vec<usize> = (0..labels.len()).collect();
                    order.sort_by(|&a, &b| nums[a].total_cmp(&nums[b]));
                    labels = order.iter().map(|&i| labels[i].clone()).collect();
                    nums = order.iter().map(|&i| nums[i]).collect();
                    DiscreteUniverse::new(labels)?.with_embedding(nums)?
                }
                None => DiscreteUniverse::new(labels)?,
            };
            let prior = empirical_prior(&values, &universe)?;
            if let Some(m) = self.m {
                if m != universe.len() {
                    return Err(bad(format!("--m {m} disagrees with the {} distinct values in the file", universe.len())));
                }
            }
            return Ok((universe, prior));
        }
        let prior = if spec == "uniform" {
            DiscretePrior::uniform(self.need_m()?)?
        } else if let Some(p) = spec.strip_prefix("skewed:") {
            DiscretePrior::two_point(self.need_m()?, parse_f64(p, "skewed prior")?)?
        } else if let Some(w) = spec.strip_prefix("weights:") {
            let w: Result<Vec<f64>> = w.split(',').map(|x| parse_f64(x, "prior weight")).collect();
            DiscretePrior::from_weights(w?)?
        } else if let Some(c) = spec.strip_prefix("counts:") {
            let c: Result<Vec<u64>> =
                c.split(',').map(|x| x.trim().parse().map_err(|_| bad(format!("count '{x}' is not an integer")))).collect();
            DiscretePrior::from_counts(c?)?
        } else {
            return Err(bad(format!("unknown prior '{spec}'")));
        };
        if let Some(m) = self.m {
            if m != prior.len() {
                return Err(bad(format!("--m {m} disagrees with a prior over {} records", prior.len())));
            }
        }
        Ok((DiscreteUniverse::indexed(prior.len())?, prior))
    }

    /// Records are the distinct rows of a headed csv; side information is the
    /// listed fields.
    fn build_records(&self, fields: &str) -> Result<Discrete> {
        let Some(path) = csv_path(&self.prior) else {
            return Err(bad("attribute side information needs a csv:PATH prior with named columns"));
        };
        if self.eta != 0.0 {
            return Err(bad("attribute side information is only supported with exact match"));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .from_path(&path)
            .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
        let header: Vec<String> =
            rdr.headers().map_err(|e| Error::Ingestion(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows: Vec<Vec<String>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Ingestion(e.to_string()))?;
            rows.push(rec.iter().map(|v| v.trim().to_string()).collect());
        }
        let mut distinct = rows.clone();
        distinct.sort();
        distinct.dedup();
        let universe = DiscreteUniverse::from_records(header, distinct)?;
        let keys: Vec<String> = rows.iter().map(|r| r.join("|")).collect();
        let prior = empirical_prior(&keys, &universe)?;
        let public: Vec<&str> = fields.split(',').map(str::trim).collect();
        let aux = AuxMap::attribute(&universe, &public)?;
        let threat = ThreatModel::new(&universe, ErrorModel::exact(), aux)?;
        Ok(Discrete { universe, prior, threat, prior_label: self.prior.clone() })
    }
}

/// `uniform` (on [0,1]), `uniform:LO,HI` or `beta:A,B`.
pub fn parse_continuous_prior(s: &str) -> Result<ContinuousPrior> {
    if s == "uniform" {
        return ContinuousPrior::uniform(0.0, 1.0);
    }
    let two = |rest: &str| -> Result<(f64, f64)> {
        let v: Vec<&str> = rest.split(',').collect();
        let [a, b] = v[..] else {
            return Err(bad(format!("prior '{s}' needs two comma-separated parameters")));
        };
        Ok((parse_f64(a, "prior parameter")?, parse_f64(b, "prior parameter")?))
    };
    if let Some(rest) = s.strip_prefix("uniform:") {
        let (lo, hi) = two(rest)?;
        return ContinuousPrior::uniform(lo, hi);
    }
    if let Some(rest) = s.strip_prefix("beta:") {
        let (a, b) = two(rest)?;
        return ContinuousPrior::beta(a, b);
    }
    Err(bad(format!("unknown continuous prior '{s}'")))
}
