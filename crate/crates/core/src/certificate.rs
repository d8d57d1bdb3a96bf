//! Certificate files: canonical JSON, checksums and replay.
//!
//! A file records the parameters of every stage together with the values
//! derived from them. [`verify_replay`] recomputes the derived values from
//! the parameters and reports each comparison separately, so a single edited
//! field shows up as a single disagreement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::construction::{
    stage_checks, stage_modulus, stage_set, Check, Construction, FSource, Policy, Profile, StageCertificate,
};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::quotient::{FiniteQuotient, QuotientDescriptor, SeparationCertificate};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::staircase::{self, StageParams, StaircaseTable, TableKind};
use crate::topology::{self, Syndeticity, TopologyCertificate, ZeroWindows};

pub const FORMAT_VERSION: u64 = 1;

/// Conventional file extension.
pub const EXTENSION: &str = ".rigidcert.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub label: String,
    pub generators: Vec<GroupElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRecord {
    #[serde(flatten)]
    pub settings: Profile,
    pub policy: String,
}

/// A staircase table. Small tables are stored in full; every table carries
/// its support size and a digest of its sorted entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRecord {
    pub support_size: u64,
    pub digest: String,
    /// Quotient coordinates joined by commas, mapped to `"p/q"` values.
    pub entries: Option<BTreeMap<String, String>>,
}

impl TableRecord {
    pub fn from_table(t: &StaircaseTable, inline_cap: u64) -> Self {
        let sorted = t.sorted_entries();
        let mut hasher = Sha256::new();
        let mut entries = BTreeMap::new();
        for (q, v) in &sorted {
            let key = coset_key(&t.quotient().encode(q));
            let value = format_rational(v);
            hasher.update(key.as_bytes());
            hasher.update(b":");
            hasher.update(value.as_bytes());
            hasher.update(b"\n");
            if sorted.len() as u64 <= inline_cap {
                entries.insert(key, value);
            }
        }
        TableRecord {
            support_size: sorted.len() as u64,
            digest: hex::encode(hasher.finalize()),
            entries: (sorted.len() as u64 <= inline_cap).then_some(entries),
        }
    }

    /// Checks that every stored value parses, so a bad rational surfaces at
    /// load time.
    fn validate(&self) -> Result<()> {
        if let Some(entries) = &self.entries {
            for v in entries.values() {
                parse_rational(v).map_err(|_| Error::MalformedRational(v.clone()))?;
            }
        }
        Ok(())
    }

    /// Coordinates whose stored value differs from `other`.
    fn differing_keys(&self, other: &TableRecord) -> Vec<String> {
        match (&self.entries, &other.entries) {
            (Some(a), Some(b)) => {
                let mut keys: Vec<String> = a
                    .iter()
                    .filter(|(k, v)| b.get(*k) != Some(*v))
                    .map(|(k, _)| k.clone())
                    .chain(b.keys().filter(|k| !a.contains_key(*k)).cloned())
                    .collect();
                keys.sort();
                keys
            }
            _ => Vec::new(),
        }
    }
}

fn coset_key(coords: &[u64]) -> String {
    coords.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: usize,
    pub steps: u64,
    pub set: Vec<GroupElement>,
    pub quotient: QuotientDescriptor,
    pub f_prev: Vec<GroupElement>,
    pub separation: SeparationCertificate,
    pub spheres: Vec<bool>,
    pub phi: TableRecord,
    pub psi: TableRecord,
    pub zero_windows: ZeroWindows,
    pub syndeticity: Syndeticity,
    pub f_next: Vec<GroupElement>,
    pub f_source: FSource,
    pub checks: Vec<Check>,
}

impl StageRecord {
    pub fn from_stage(s: &StageCertificate, inline_cap: u64) -> Self {
        StageRecord {
            n: s.n(),
            steps: s.params.steps,
            set: s.params.set.clone(),
            quotient: s.quotient().descriptor(),
            f_prev: s.params.f_prev.clone(),
            separation: s.separation.clone(),
            spheres: s.spheres.clone(),
            phi: TableRecord::from_table(&s.phi, inline_cap),
            psi: TableRecord::from_table(&s.psi, inline_cap),
            zero_windows: s.zero_windows.clone(),
            syndeticity: s.syndeticity.clone(),
            f_next: s.f_next.clone(),
            f_source: s.f_source.clone(),
            checks: s.checks.clone(),
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// On-disk form of a construction and its conclusions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format_version: u64,
    pub group: GroupRecord,
    pub profile: ProfileRecord,
    pub stages: Vec<StageRecord>,
    pub topology: TopologyCertificate,
    pub checksum: String,
}

impl CertificateFile {
    pub fn new(c: &Construction, topology: TopologyCertificate) -> Result<Self> {
        let inline = c.profile.table_inline_cap;
        let mut file = CertificateFile {
            format_version: FORMAT_VERSION,
            group: GroupRecord { label: c.group.label().to_string(), generators: c.group.generators().to_vec() },
            profile: ProfileRecord { settings: c.profile.clone(), policy: c.policy.describe() },
            stages: c.stages.iter().map(|s| StageRecord::from_stage(s, inline)).collect(),
            topology,
            checksum: String::new(),
        };
        file.seal()?;
        Ok(file)
    }

    /// Recomputes the checksum after an edit.
    pub fn seal(&mut self) -> Result<()> {
        self.checksum = content_checksum(&to_value(self)?);
        Ok(())
    }

    pub fn group_spec(&self) -> Result<GroupSpec> {
        let spec = GroupSpec::from_label(&self.group.label).map_err(|e| Error::Corrupt(e.to_string()))?;
        if spec.generators() != self.group.generators.as_slice() {
            return Err(Error::Corrupt(format!("generators do not match group {}", self.group.label)));
        }
        Ok(spec)
    }

    pub fn policy(&self) -> Result<Policy> {
        Policy::parse(&self.group_spec()?, &self.profile.policy).map_err(|e| Error::Corrupt(e.to_string()))
    }
}

fn to_value(file: &CertificateFile) -> Result<Value> {
    serde_json::to_value(file).map_err(|e| Error::Corrupt(e.to_string()))
}

/// SHA-256 over the compact canonical serialization without the checksum
/// field.
pub fn content_checksum(value: &Value) -> String {
    let mut v = value.clone();
    if let Value::Object(map) = &mut v {
        map.remove("checksum");
    }
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

/// Canonical bytes: keys sorted at every level, two-space indentation and a
/// trailing newline.
pub fn save(file: &CertificateFile) -> Result<Vec<u8>> {
    // Going through `Value` sorts object keys.
    let mut bytes = serde_json::to_vec_pretty(&to_value(file)?).map_err(|e| Error::Corrupt(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn load(bytes: &[u8]) -> Result<CertificateFile> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| Error::Corrupt(e.to_string()))?;
    let found = value
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Corrupt("missing format_version".into()))?;
    if found != FORMAT_VERSION {
        return Err(Error::Version { found, expected: FORMAT_VERSION });
    }
    let recorded = value
        .get("checksum")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Corrupt("missing checksum".into()))?
        .to_string();
    let computed = content_checksum(&value);
    if recorded != computed {
        return Err(Error::Checksum { recorded, computed });
    }
    let file: CertificateFile = serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        if msg.contains("malformed rational") {
            Error::MalformedRational(msg)
        } else {
            Error::Corrupt(msg)
        }
    })?;
    for s in &file.stages {
        s.phi.validate()?;
        s.psi.validate()?;
    }
    Ok(file)
}

pub fn save_to_path(file: &CertificateFile, path: &std::path::Path) -> std::io::Result<()> {
    let bytes = save(file).map_err(std::io::Error::other)?;
    std::fs::write(path, bytes)
}

/// Source of staircase tables and defects for replay.
pub trait ReplayBackend {
    fn name(&self) -> &str;

    fn phi_table(&self, params: &StageParams, cap: u64) -> Result<(StaircaseTable, Vec<bool>)>;

    fn psi_table(&self, phi: &StaircaseTable, prev: Option<&StaircaseTable>) -> Result<StaircaseTable>;

    fn defect(&self, table: &StaircaseTable, s: &GroupElement) -> Result<Rational>;
}

/// The library's own BFS tables and support sweeps.
pub struct BfsBackend;

impl ReplayBackend for BfsBackend {
    fn name(&self) -> &str {
        "bfs"
    }

    fn phi_table(&self, params: &StageParams, cap: u64) -> Result<(StaircaseTable, Vec<bool>)> {
        staircase::phi_table_and_spheres(params, cap)
    }

    fn psi_table(&self, phi: &StaircaseTable, prev: Option<&StaircaseTable>) -> Result<StaircaseTable> {
        staircase::psi_from_phi(phi, prev)
    }

    fn defect(&self, table: &StaircaseTable, s: &GroupElement) -> Result<Rational> {
        staircase::lipschitz_defect(table, s)
    }
}

/// One comparison between a recorded and a recomputed value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayItem {
    pub field: String,
    pub recorded: String,
    pub recomputed: String,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub backend: String,
    pub items: Vec<ReplayItem>,
}

impl ReplayReport {
    pub fn clean(&self) -> bool {
        self.items.iter().all(|i| i.agrees)
    }

    pub fn mismatches(&self) -> Vec<&ReplayItem> {
        self.items.iter().filter(|i| !i.agrees).collect()
    }

    fn compare<T: Serialize + PartialEq>(&mut self, field: String, recorded: &T, recomputed: &T) {
        let text = |v: &T| serde_json::to_string(v).unwrap_or_else(|e| format!("<{e}>"));
        self.items.push(ReplayItem {
            field,
            recorded: text(recorded),
            recomputed: text(recomputed),
            agrees: recorded == recomputed,
        });
    }

    fn fail(&mut self, field: String, reason: String) {
        self.items.push(ReplayItem { field, recorded: String::new(), recomputed: reason, agrees: false });
    }
}

pub fn verify_replay(file: &CertificateFile) -> Result<ReplayReport> {
    verify_replay_with(file, &BfsBackend)
}

/// Replays a certificate through `backend`. Recorded parameters (sets,
/// moduli, rigidity sets) feed later stages, so an edited derived value is
/// reported once rather than cascading.
pub fn verify_replay_with(file: &CertificateFile, backend: &dyn ReplayBackend) -> Result<ReplayReport> {
    let spec = file.group_spec()?;
    let policy = file.policy()?;
    let profile = file.profile.settings.clone();
    let mut report = ReplayReport { backend: backend.name().to_string(), items: Vec::new() };
    let mut stages: Vec<StageCertificate> = Vec::new();
    for rec in &file.stages {
        let tag = format!("stage{}", rec.n);
        match replay_stage(&spec, &policy, &profile, rec, &stages, backend, &mut report) {
            Ok(stage) => stages.push(stage),
            Err(e) => {
                report.fail(tag, e.to_string());
                return Ok(report);
            }
        }
    }
    let construction = Construction { group: spec, profile, policy, stages };
    match topology::certify(&construction, file.topology.test_radius) {
        Ok(t) => {
            let r = &file.topology;
            report.compare("topology.depth".into(), &r.depth, &t.depth);
            report.compare("topology.displacement".into(), &r.displacement, &t.displacement);
            report.compare("topology.hausdorff_witnesses".into(), &r.hausdorff_witnesses, &t.hausdorff_witnesses);
            report.compare("topology.non_precompact".into(), &r.non_precompact, &t.non_precompact);
            report.compare("topology.flags".into(), &r.flags, &t.flags);
        }
        Err(e) => report.fail("topology".into(), e.to_string()),
    }
    Ok(report)
}

fn replay_stage(
    spec: &GroupSpec,
    policy: &Policy,
    profile: &Profile,
    rec: &StageRecord,
    previous: &[StageCertificate],
    backend: &dyn ReplayBackend,
    report: &mut ReplayReport,
) -> Result<StageCertificate> {
    let n = rec.n;
    let tag = format!("stage{n}");
    if n != previous.len() + 1 {
        return Err(Error::Corrupt(format!("stage {n} recorded at position {}", previous.len() + 1)));
    }
    let prev = previous.last();
    report.compare(format!("{tag}.steps"), &rec.steps, &profile.steps(n)?);
    report.compare(format!("{tag}.set"), &rec.set, &stage_set(spec, prev, profile.node_cap)?);
    let f_prev = prev.map(|p| p.f_next.clone()).unwrap_or_default();
    report.compare(format!("{tag}.f_prev"), &rec.f_prev, &f_prev);

    let parent = prev.map_or(1, |p| p.quotient().modulus());
    let (modulus, separation) = stage_modulus(spec, &rec.set, rec.steps, parent, n)?;
    report.compare(
        format!("{tag}.quotient"),
        &rec.quotient,
        &QuotientDescriptor { kind: spec.kind().label(), modulus, parent_modulus: parent, level: n },
    );
    report.compare(format!("{tag}.separation"), &rec.separation, &separation);

    let quotient = FiniteQuotient::new(spec, rec.quotient.modulus, n, rec.quotient.parent_modulus)
        .map_err(|e| Error::Corrupt(e.to_string()))?;
    let params = StageParams { n, steps: rec.steps, set: rec.set.clone(), quotient, f_prev: rec.f_prev.clone() };
    let (phi, spheres) = backend.phi_table(&params, profile.node_cap)?;
    let psi = backend.psi_table(&phi, prev.map(|p| &p.psi))?;
    debug_assert_eq!((phi.kind, psi.kind), (TableKind::Phi, TableKind::Psi));
    report.compare(format!("{tag}.spheres"), &rec.spheres, &spheres);
    compare_table(report, format!("{tag}.phi"), &rec.phi, &TableRecord::from_table(&phi, profile.table_inline_cap));
    compare_table(report, format!("{tag}.psi"), &rec.psi, &TableRecord::from_table(&psi, profile.table_inline_cap));

    let zero_windows = topology::zero_window_cosets(spec, &params, &psi, n as u32 - 1, profile)?;
    report.compare(format!("{tag}.zero_windows"), &rec.zero_windows, &zero_windows);
    let syndeticity = topology::syndeticity_for_stage(&params, &psi, &zero_windows, profile)?;
    report.compare(format!("{tag}.syndeticity"), &rec.syndeticity, &syndeticity);

    let selection = crate::construction::policy_select_f(&params.quotient, n, policy, profile)?;
    report.compare(format!("{tag}.f_next"), &rec.f_next, &selection.elements);
    report.compare(format!("{tag}.f_source"), &rec.f_source, &selection.source);

    let mut stage = StageCertificate {
        params,
        phi,
        psi,
        separation,
        spheres,
        zero_windows: rec.zero_windows.clone(),
        syndeticity: rec.syndeticity.clone(),
        f_next: rec.f_next.clone(),
        f_source: rec.f_source.clone(),
        checks: Vec::new(),
    };
    let defect = |t: &StaircaseTable, s: &GroupElement| backend.defect(t, s);
    let checks = stage_checks(spec, &stage, previous, profile, &defect)?;
    for c in &checks {
        match rec.check(&c.name) {
            Some(r) => report.compare(format!("{tag}.check.{}", c.name), r, c),
            None => report.fail(format!("{tag}.check.{}", c.name), "missing from the certificate".into()),
        }
    }
    for r in &rec.checks {
        if !checks.iter().any(|c| c.name == r.name) {
            report.fail(format!("{tag}.check.{}", r.name), "not produced by replay".into());
        }
    }
    stage.checks = checks;
    Ok(stage)
}

fn compare_table(report: &mut ReplayReport, field: String, recorded: &TableRecord, recomputed: &TableRecord) {
    let differing = recorded.differing_keys(recomputed);
    let agrees = recorded == recomputed;
    let summary =
        |t: &TableRecord| format!("{} entries, digest {}", t.support_size, &t.digest[..16.min(t.digest.len())]);
    let mut recomputed_text = summary(recomputed);
    if !differing.is_empty() {
        let shown: Vec<&str> = differing.iter().take(5).map(String::as_str).collect();
        recomputed_text.push_str(&format!("; differs at [{}]", shown.join("; ")));
    }
    report.items.push(ReplayItem { field, recorded: summary(recorded), recomputed: recomputed_text, agrees });
}

/// Reads the recorded `"p/q"` value of a check.
pub fn check_value(check: &Check) -> Result<Rational> {
    parse_rational(&check.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{Construction, Policy, Profile};
    use crate::topology::certify;

    fn stage_one() -> (Construction, CertificateFile) {
        let c =
            Construction::build(GroupSpec::integer_line(), Profile::paper(), Policy::Default { count: 2 }, 1).unwrap();
        let t = certify(&c, 1).unwrap();
        let f = CertificateFile::new(&c, t).unwrap();
        (c, f)
    }

    #[test]
    fn digest_only_tables() {
        let (c, _) = stage_one();
        let full = TableRecord::from_table(&c.stages[0].phi, 100);
        let digest = TableRecord::from_table(&c.stages[0].phi, 2);
        assert_eq!(full.support_size, 3);
        assert_eq!(full.digest, digest.digest);
        assert_eq!(digest.entries, None);
        assert_eq!(full.entries.as_ref().unwrap().get("1").map(String::as_str), Some("1/1"));
        assert!(full.differing_keys(&digest).is_empty());
    }

    #[test]
    fn differing_keys_cover_both_sides() {
        let (c, _) = stage_one();
        let a = TableRecord::from_table(&c.stages[0].phi, 100);
        let mut b = a.clone();
        let map = b.entries.as_mut().unwrap();
        map.remove("6");
        map.insert("3".into(), "1".into());
        assert_eq!(a.differing_keys(&b), ["3", "6"]);
    }

    #[test]
    fn checksum_ignores_its_own_field() {
        let (_, mut f) = stage_one();
        let sealed = f.checksum.clone();
        f.checksum = "x".into();
        f.seal().unwrap();
        assert_eq!(f.checksum, sealed);
        assert_eq!(sealed.len(), 64);
    }

    #[test]
    fn garbage_is_corrupt() {
        assert!(load(b"not json").unwrap_err().is_corrupt());
        assert!(load(b"{\"format_version\": 1}").unwrap_err().is_corrupt());
    }
}
