use std::fmt;
use std::str::FromStr;

use super::HarnessError;
use crate::handshake::{CredentialKind, TransportKind};
use crate::registry::ChannelMode;

pub const DEFAULT_REPETITIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Unilateral,
    Mutual,
}

impl FromStr for Flow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unilateral" => Ok(Flow::Unilateral),
            "mutual" => Ok(Flow::Mutual),
            other => Err(format!("unknown flow `{other}`")),
        }
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flow::Unilateral => "unilateral",
            Flow::Mutual => "mutual",
        })
    }
}

pub fn parse_kind(s: &str) -> Result<CredentialKind, String> {
    match s {
        "vc" => Ok(CredentialKind::Vc),
        "x509" => Ok(CredentialKind::X509),
        "rpk" => Ok(CredentialKind::RawPublicKey),
        other => Err(format!("unknown credential kind `{other}`")),
    }
}

pub fn kind_name(k: CredentialKind) -> &'static str {
    match k {
        CredentialKind::Vc => "vc",
        CredentialKind::X509 => "x509",
        CredentialKind::RawPublicKey => "rpk",
    }
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on|off, got `{other}`")),
    }
}

fn switch(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// One benchmark configuration.
///
/// Written as one line of space-separated `key=value` pairs:
///
/// ```text
/// name=vc-mutual flow=mutual client=vc server=vc resolver=plain pinning=off repetitions=100
/// ```
///
/// `client` is required for mutual flows and rejected otherwise.
/// `legacy_server=on` makes the server ignore certificate-type negotiation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub name: String,
    pub flow: Flow,
    pub client_cred: Option<CredentialKind>,
    pub server_cred: CredentialKind,
    pub resolver: ChannelMode,
    pub pinning: bool,
    pub repetitions: usize,
    pub transport: TransportKind,
    pub legacy_server: bool,
}

impl ScenarioSpec {
    pub fn new(flow: Flow, client_cred: Option<CredentialKind>, server_cred: CredentialKind) -> Self {
        let mut s = Self {
            name: String::new(),
            flow,
            client_cred,
            server_cred,
            resolver: ChannelMode::Plain,
            pinning: false,
            repetitions: DEFAULT_REPETITIONS,
            transport: TransportKind::Memory,
            legacy_server: false,
        };
        s.name = s.default_name();
        s
    }

    fn default_name(&self) -> String {
        let mut name = format!("{}-{}", self.flow, kind_name(self.server_cred));
        if let Some(c) = self.client_cred {
            name = format!("{}-{}", name, kind_name(c));
        }
        if self.legacy_server {
            name.push_str("-legacy");
        }
        name
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.repetitions == 0 {
            return Err("repetitions must be at least 1".into());
        }
        match (self.flow, self.client_cred) {
            (Flow::Mutual, None) => return Err("mutual flows need client=<kind>".into()),
            (Flow::Unilateral, Some(_)) => {
                return Err("unilateral flows do not authenticate the client".into())
            }
            _ => {}
        }
        if self.legacy_server
            && (self.server_cred != CredentialKind::X509
                || self.client_cred.is_some_and(|c| c != CredentialKind::X509))
        {
            return Err("a legacy server only handles X.509 credentials".into());
        }
        Ok(())
    }

    /// Expected `(client, server)` resolve counts per handshake.
    pub fn expected_resolves(&self) -> (u64, u64) {
        let per_vc = if self.pinning { 1 } else { 2 };
        let client = if self.server_cred == CredentialKind::Vc { per_vc } else { 0 };
        let server = if self.client_cred == Some(CredentialKind::Vc) { per_vc } else { 0 };
        (client, server)
    }

    pub fn parse_line(line: &str) -> Result<Self, String> {
        let mut name = None;
        let mut flow = None;
        let mut client = None;
        let mut server = None;
        let mut resolver = ChannelMode::Plain;
        let mut pinning = false;
        let mut repetitions = DEFAULT_REPETITIONS;
        let mut transport = TransportKind::Memory;
        let mut legacy_server = false;
        let mut seen = Vec::new();
        for pair in line.split_whitespace() {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{pair}`"))?;
            if seen.contains(&k) {
                return Err(format!("duplicate key `{k}`"));
            }
            seen.push(k);
            match k {
                "name" => name = Some(v.to_string()),
                "flow" => flow = Some(v.parse()?),
                "client" => client = Some(parse_kind(v)?),
                "server" => server = Some(parse_kind(v)?),
                "resolver" => resolver = v.parse()?,
                "pinning" => pinning = parse_switch(v)?,
                "repetitions" => {
                    repetitions = v
                        .parse()
                        .map_err(|_| format!("repetitions must be an integer, got `{v}`"))?
                }
                "transport" => transport = v.parse()?,
                "legacy_server" => legacy_server = parse_switch(v)?,
                other => return Err(format!("unknown key `{other}`")),
            }
        }
        let mut spec = Self {
            name: String::new(),
            flow: flow.ok_or("missing flow=")?,
            client_cred: client,
            server_cred: server.ok_or("missing server=")?,
            resolver,
            pinning,
            repetitions,
            transport,
            legacy_server,
        };
        spec.validate()?;
        spec.name = name.unwrap_or_else(|| spec.default_name());
        Ok(spec)
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "name={} flow={}", self.name, self.flow)?;
        if let Some(c) = self.client_cred {
            write!(f, " client={}", kind_name(c))?;
        }
        write!(
            f,
            " server={} resolver={} pinning={} repetitions={} transport={} legacy_server={}",
            kind_name(self.server_cred),
            self.resolver,
            switch(self.pinning),
            self.repetitions,
            self.transport,
            switch(self.legacy_server)
        )
    }
}

/// Parses a scenario file; `#` starts a comment.
pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioSpec>, HarnessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let spec = ScenarioSpec::parse_line(line).map_err(|reason| HarnessError::Scenario {
            line: i + 1,
            reason,
        })?;
        out.push(spec);
    }
    if out.is_empty() {
        return Err(HarnessError::Scenario {
            line: 0,
            reason: "no scenarios".into(),
        });
    }
    Ok(out)
}

/// The scenarios behind the reproduced tables.
pub fn table_scenarios(repetitions: usize) -> Vec<ScenarioSpec> {
    use CredentialKind::{Vc, X509};
    let mut out = vec![
        ScenarioSpec::new(Flow::Unilateral, None, X509),
        ScenarioSpec::new(Flow::Unilateral, None, Vc),
        ScenarioSpec::new(Flow::Mutual, Some(X509), X509),
        ScenarioSpec::new(Flow::Mutual, Some(Vc), Vc),
        ScenarioSpec::new(Flow::Mutual, Some(X509), Vc),
        ScenarioSpec::new(Flow::Mutual, Some(Vc), X509),
    ];
    let mut pinned = ScenarioSpec::new(Flow::Unilateral, None, Vc);
    pinned.pinning = true;
    pinned.name.push_str("-pinned");
    out.push(pinned);
    let mut pinned = ScenarioSpec::new(Flow::Mutual, Some(Vc), Vc);
    pinned.pinning = true;
    pinned.name.push_str("-pinned");
    out.push(pinned);
    let mut legacy = ScenarioSpec::new(Flow::Unilateral, None, X509);
    legacy.legacy_server = true;
    legacy.name = legacy.default_name();
    out.push(legacy);
    for s in &mut out {
        s.repetitions = repetitions;
    }
    out
}
