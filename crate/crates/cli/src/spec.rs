//! Run description: parsed from a flat key-value config file and/or command
//! line flags, emitted back in the same format. Numbers stay as decimal
//! strings until a precision context exists to parse them at full width.

use fdm_core::{BasePolicy, Mesh, PolynomialPotential, PrecisionContext, ProblemConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSpec {
    Uniform(usize),
    Points(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseSpec {
    Average,
    Zero,
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    Paper,
    Oracle,
    None,
}

/// Everything a run needs, in serializable form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSpec {
    pub a: String,
    pub b: String,
    /// `c_0..c_r`.
    pub coeffs: Vec<String>,
    pub mesh: MeshSpec,
    pub base: BaseSpec,
    /// Inclusive index range.
    pub n_lo: usize,
    pub n_hi: usize,
    pub rank: usize,
    pub digits: u32,
    pub format: OutputFormat,
    pub reference: ReferenceMode,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            a: "0".into(),
            b: "1".into(),
            coeffs: vec!["0".into()],
            mesh: MeshSpec::Uniform(1),
            base: BaseSpec::Average,
            n_lo: 1,
            n_hi: 1,
            rank: 5,
            digits: 60,
            format: OutputFormat::Table,
            reference: ReferenceMode::None,
        }
    }
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_mesh(value: &str) -> Result<MeshSpec, CliError> {
    if let Some(rest) = value.strip_prefix("uniform:") {
        let n: usize = rest
            .trim()
            .parse()
            .map_err(|_| CliError::Spec(format!("bad subinterval count in mesh '{value}'")))?;
        if n == 0 {
            return Err(CliError::Spec("mesh needs at least one subinterval".into()));
        }
        Ok(MeshSpec::Uniform(n))
    } else if let Some(rest) = value.strip_prefix("points:") {
        let pts = parse_list(rest);
        if pts.is_empty() {
            return Err(CliError::Spec("mesh points list is empty".into()));
        }
        Ok(MeshSpec::Points(pts))
    } else {
        Err(CliError::Spec(format!(
            "mesh must be 'uniform:N' or 'points:x1,x2,...', got '{value}'"
        )))
    }
}

fn parse_base(value: &str) -> Result<BaseSpec, CliError> {
    match value.trim() {
        "average" => Ok(BaseSpec::Average),
        "zero" => Ok(BaseSpec::Zero),
        other => {
            if let Some(rest) = other.strip_prefix("explicit:") {
                Ok(BaseSpec::Explicit(parse_list(rest)))
            } else {
                Err(CliError::Spec(format!(
                    "base must be 'average', 'zero' or 'explicit:v1,...', got '{other}'"
                )))
            }
        }
    }
}

fn parse_indices(value: &str) -> Result<(usize, usize), CliError> {
    let bad = |v: &str| CliError::Spec(format!("n must be an index or inclusive range a..b, got '{v}'"));
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad(value))?;
        let hi: usize = hi.trim().parse().map_err(|_| bad(value))?;
        if lo == 0 || hi < lo {
            return Err(bad(value));
        }
        Ok((lo, hi))
    } else {
        let n: usize = value.trim().parse().map_err(|_| bad(value))?;
        if n == 0 {
            return Err(bad(value));
        }
        Ok((n, n))
    }
}

fn parse_format(value: &str) -> Result<OutputFormat, CliError> {
    match value.trim() {
        "table" => Ok(OutputFormat::Table),
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(CliError::Spec(format!(
            "format must be table, csv or json, got '{other}'"
        ))),
    }
}

fn parse_reference(value: &str) -> Result<ReferenceMode, CliError> {
    match value.trim() {
        "paper" => Ok(ReferenceMode::Paper),
        "oracle" => Ok(ReferenceMode::Oracle),
        "none" => Ok(ReferenceMode::None),
        other => Err(CliError::Spec(format!(
            "reference must be paper, oracle or none, got '{other}'"
        ))),
    }
}

impl RunSpec {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "A" => self.a = value.trim().to_string(),
            "B" => self.b = value.trim().to_string(),
            "coeffs" => {
                self.coeffs = parse_list(value);
                if self.coeffs.is_empty() {
                    return Err(CliError::Spec("coeffs list is empty".into()));
                }
            }
            "mesh" => self.mesh = parse_mesh(value.trim())?,
            "base" => self.base = parse_base(value)?,
            "n" => {
                let (lo, hi) = parse_indices(value)?;
                self.n_lo = lo;
                self.n_hi = hi;
            }
            "rank" => {
                self.rank = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Spec(format!("bad rank '{value}'")))?;
            }
            "digits" => {
                self.digits = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Spec(format!("bad digits '{value}'")))?;
            }
            "format" => self.format = parse_format(value)?,
            "reference" => self.reference = parse_reference(value)?,
            other => {
                return Err(CliError::Spec(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// Parse a flat key-value config file (`#` comments).
    pub fn apply_config(&mut self, text: &str) -> Result<(), CliError> {
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Spec(format!("line {}: expected 'key = value'", line_no + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Emit in the config-file format; `apply_config` on the output
    /// reconstructs an identical spec.
    pub fn to_config_string(&self) -> String {
        let mesh = match &self.mesh {
            MeshSpec::Uniform(n) => format!("uniform:{n}"),
            MeshSpec::Points(pts) => format!("points:{}", pts.join(",")),
        };
        let base = match &self.base {
            BaseSpec::Average => "average".to_string(),
            BaseSpec::Zero => "zero".to_string(),
            BaseSpec::Explicit(vs) => format!("explicit:{}", vs.join(",")),
        };
        let n = if self.n_lo == self.n_hi {
            format!("{}", self.n_lo)
        } else {
            format!("{}..{}", self.n_lo, self.n_hi)
        };
        let format = match self.format {
            OutputFormat::Table => "table",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let reference = match self.reference {
            ReferenceMode::Paper => "paper",
            ReferenceMode::Oracle => "oracle",
            ReferenceMode::None => "none",
        };
        format!(
            "A = {}\nB = {}\ncoeffs = {}\nmesh = {}\nbase = {}\nn = {}\nrank = {}\ndigits = {}\nformat = {}\nreference = {}\n",
            self.a,
            self.b,
            self.coeffs.join(","),
            mesh,
            base,
            n,
            self.rank,
            self.digits,
            format,
            reference,
        )
    }

    /// Precision context sized for this spec.
    pub fn context(&self) -> Result<PrecisionContext, CliError> {
        let degree = self.coeffs.len().saturating_sub(1);
        Ok(PrecisionContext::for_run(self.digits, degree, self.rank)?)
    }

    /// Materialize the solver configuration for one index.
    pub fn problem(&self, n: usize, ctx: &PrecisionContext) -> Result<ProblemConfig, CliError> {
        let a = ctx.float_from_str(&self.a)?;
        let b = ctx.float_from_str(&self.b)?;
        let coeff_refs: Vec<&str> = self.coeffs.iter().map(|s| s.as_str()).collect();
        let potential = PolynomialPotential::from_strs(&coeff_refs, ctx)?;
        let mesh = match &self.mesh {
            MeshSpec::Uniform(count) => Mesh::uniform(&a, &b, *count, ctx)?,
            MeshSpec::Points(pts) => {
                let mut points = Vec::with_capacity(pts.len() + 2);
                points.push(a.clone());
                for p in pts {
                    points.push(ctx.float_from_str(p)?);
                }
                points.push(b.clone());
                Mesh::from_points(points)?
            }
        };
        let policy = match &self.base {
            BaseSpec::Average => BasePolicy::EndpointAverage,
            BaseSpec::Zero => BasePolicy::Zero,
            BaseSpec::Explicit(vs) => {
                let values = vs
                    .iter()
                    .map(|v| ctx.float_from_str(v))
                    .collect::<Result<Vec<_>, _>>()?;
                BasePolicy::Explicit(values)
            }
        };
        Ok(ProblemConfig {
            potential,
            mesh,
            policy,
            index: n,
            rank: self.rank,
            ctx: ctx.clone(),
        })
    }
}
