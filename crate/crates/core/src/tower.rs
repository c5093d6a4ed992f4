//! Breadth-first enumeration of arithmetically maximal subgroups.

use crate::error::{Error, Result};
use crate::group::{reduce_elements, transporter};
use crate::invariants::{invariants, CurveInvariants};
use crate::maximal::{maximal_subgroups_finite_filtered, working_exponent};
use crate::residue::{MatRing, ResidueMatrix};
use crate::subgroup::{has_exact_trace0_detm1, OpenSubgroup, SubgroupJson, SubgroupPredicates};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::PathBuf;

/// How condition (iii), a trace-0 determinant −1 element, is tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TraceTest {
    /// Search the reduction mod the level.
    #[default]
    Residue,
    /// Require an element of the open subgroup with trace exactly 0 and
    /// determinant exactly −1.
    Exact,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TowerConfig {
    pub refined_cc: bool,
    pub trace_test: TraceTest,
    /// Children above this level exponent are ignored (None: no cap).
    pub max_level_exp: Option<u32>,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: usize,
    /// Stop after this many queue pops (None: run to completion).
    pub pop_limit: Option<usize>,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig {
            refined_cc: false,
            trace_test: TraceTest::Residue,
            max_level_exp: None,
            checkpoint: None,
            checkpoint_every: 50,
            pop_limit: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeStatus {
    Queued,
    Listed,
    PrunedGenus,
    PrunedContained,
}

#[derive(Clone, Debug)]
pub struct TowerNode {
    pub id: usize,
    pub subgroup: OpenSubgroup,
    pub invariants: CurveInvariants,
    pub status: NodeStatus,
    /// For pruned-contained nodes: id of a genus ≥ 2 node containing a conjugate.
    pub container: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub degree: u64,
}

/// Counts at each pipeline stage.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub expanded: usize,
    pub maximal_found: usize,
    pub passed_filters: usize,
    pub recorded_with_root: usize,
    pub recorded_without_root: usize,
    pub recorded_genus_le1: usize,
    pub pruned_contained: usize,
    pub listed_with_root: usize,
    pub listed_without_root: usize,
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct TowerLattice {
    pub nodes: Vec<TowerNode>,
    /// Edges among listed nodes: parent expanded, child a maximal subgroup.
    pub edges: Vec<Edge>,
    pub stages: StageCounts,
}

struct Work {
    subs: Vec<OpenSubgroup>,
    invs: Vec<CurveInvariants>,
    by_key: HashMap<(u32, usize, u64), Vec<usize>>,
    queue: VecDeque<usize>,
    edges: Vec<(usize, usize, u64)>,
    stages: StageCounts,
    pops: usize,
}

impl Work {
    fn record(&mut self, m: OpenSubgroup) -> Result<(usize, bool)> {
        let key = m.conj_key();
        let key = (key.level_exp, key.order, key.histogram);
        if let Some(list) = self.by_key.get(&key) {
            for &i in list {
                if self.subs[i].is_conjugate(&m).is_some() {
                    return Ok((i, false));
                }
            }
        }
        let inv = invariants(&m)?;
        let id = self.subs.len();
        self.subs.push(m);
        self.invs.push(inv);
        self.by_key.entry(key).or_default().push(id);
        Ok((id, true))
    }
}

fn passes(cfg: &TowerConfig, m: &OpenSubgroup, p: &SubgroupPredicates) -> bool {
    let t = match cfg.trace_test {
        TraceTest::Residue => p.has_trace0_detm1,
        TraceTest::Exact => has_exact_trace0_detm1(m.group()),
    };
    t && (!cfg.refined_cc || p.has_refined_cc_element)
}

/// Cheap level-independent filters on an element set mod 2^n:
/// determinant surjective and −I present.
fn cheap_filter(r: MatRing) -> impl Fn(&[u32]) -> bool {
    move |elems: &[u32]| {
        let m = r.modulus();
        let mi = r.minus_identity();
        if elems.binary_search(&mi).is_err() {
            return false;
        }
        let mut seen = vec![false; m as usize];
        let mut n = 0;
        for &x in elems {
            let d = r.det(x) as usize;
            if !seen[d] {
                seen[d] = true;
                n += 1;
                if n == m / 2 {
                    return true;
                }
            }
        }
        false
    }
}

pub fn enumerate_tower(cfg: &TowerConfig) -> Result<TowerLattice> {
    let mut w = match cfg.checkpoint.as_ref().filter(|p| p.exists()) {
        Some(p) => load_checkpoint(p)?,
        None => {
            let mut w = Work {
                subs: Vec::new(),
                invs: Vec::new(),
                by_key: HashMap::new(),
                queue: VecDeque::new(),
                edges: Vec::new(),
                stages: StageCounts::default(),
                pops: 0,
            };
            let (root, _) = w.record(OpenSubgroup::full())?;
            w.queue.push_back(root);
            w
        }
    };
    while let Some(&hi) = w.queue.front() {
        if cfg.pop_limit.is_some_and(|l| w.pops >= l) {
            break;
        }
        w.queue.pop_front();
        w.pops += 1;
        w.stages.expanded += 1;
        let h = w.subs[hi].clone();
        let l = working_exponent(h.level_exp());
        let q = h.reduce(l);
        let filt = cheap_filter(q.ring);
        let kids = maximal_subgroups_finite_filtered(&q, &filt);
        for (m, _) in kids {
            w.stages.maximal_found += 1;
            let m = OpenSubgroup::from_group(m);
            if cfg.max_level_exp.is_some_and(|c| m.level_exp() > c) {
                continue;
            }
            if !passes(cfg, &m, &m.predicates()) {
                continue;
            }
            w.stages.passed_filters += 1;
            let degree = m.index() / h.index();
            let (id, fresh) = w.record(m)?;
            if !w.edges.contains(&(hi, id, degree)) {
                w.edges.push((hi, id, degree));
            }
            if fresh && w.invs[id].genus <= 1 {
                w.queue.push_back(id);
            }
        }
        if let Some(p) = &cfg.checkpoint {
            if w.pops % cfg.checkpoint_every.max(1) == 0 {
                save_checkpoint(&w, p)?;
            }
        }
    }
    let complete = w.queue.is_empty();
    if let Some(p) = &cfg.checkpoint {
        save_checkpoint(&w, p)?;
    }
    Ok(finish(w, complete))
}

/// Reductions of a subgroup's element set to each level, for containment tests.
struct Reductions {
    sets: Vec<Vec<u32>>,
}

impl Reductions {
    fn new(h: &OpenSubgroup) -> Self {
        let r = h.ring();
        let sets = (0..=h.level_exp())
            .map(|j| reduce_elements(&r, h.elements(), &MatRing::pow2(j)))
            .collect();
        Reductions { sets }
    }
}

/// Some g with g·M·g⁻¹ ⊆ K, using precomputed reductions of M.
fn contained_in(m: &OpenSubgroup, mred: &Reductions, k: &OpenSubgroup) -> Option<u32> {
    if k.level_exp() > m.level_exp() || m.index() % k.index() != 0 || m.index() == k.index() {
        return None;
    }
    let j = k.level_exp() as usize;
    let sub = &mred.sets[j];
    if k.order() % sub.len() != 0 {
        return None;
    }
    let r = k.ring();
    let gens = crate::group::generators_of(&r, sub, &[]);
    transporter(&gens, k.ladder(), false).first().copied()
}

fn finish(w: Work, complete: bool) -> TowerLattice {
    let n = w.subs.len();
    let queued: Vec<bool> = {
        let mut q = vec![false; n];
        for &i in &w.queue {
            q[i] = true;
        }
        q
    };
    // prune genus >= 2 nodes contained in another genus >= 2 node
    let high: Vec<usize> = (0..n).filter(|&i| w.invs[i].genus >= 2).collect();
    let mut container = vec![None; n];
    for &mi in &high {
        let m = &w.subs[mi];
        let red = Reductions::new(m);
        let mut cands: Vec<usize> = high
            .iter()
            .copied()
            .filter(|&ki| ki != mi && w.subs[ki].index() < m.index() && m.index() % w.subs[ki].index() == 0)
            .collect();
        cands.sort_by_key(|&ki| std::cmp::Reverse(w.subs[ki].index()));
        for ki in cands {
            if contained_in(m, &red, &w.subs[ki]).is_some() {
                container[mi] = Some(ki);
                break;
            }
        }
    }
    // deterministic ids: (index, level, fingerprint)
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (w.subs[i].index(), w.subs[i].level(), w.subs[i].fingerprint()));
    let mut new_id = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        new_id[i] = pos;
    }
    let status = |i: usize| {
        if container[i].is_some() {
            NodeStatus::PrunedContained
        } else if queued[i] {
            NodeStatus::Queued
        } else {
            NodeStatus::Listed
        }
    };
    let nodes: Vec<TowerNode> = order
        .iter()
        .map(|&i| TowerNode {
            id: new_id[i],
            subgroup: w.subs[i].clone(),
            invariants: w.invs[i],
            status: status(i),
            container: container[i].map(|c| new_id[c]),
        })
        .collect();
    let mut edges: Vec<Edge> = w
        .edges
        .iter()
        .filter(|&&(a, b, _)| container[a].is_none() && container[b].is_none())
        .map(|&(a, b, d)| Edge { from: new_id[a], to: new_id[b], degree: d })
        .collect();
    edges.sort();
    edges.dedup();
    let mut stages = w.stages;
    stages.recorded_with_root = n;
    stages.recorded_without_root = n - 1;
    stages.recorded_genus_le1 = w.invs.iter().filter(|i| i.genus <= 1).count();
    stages.pruned_contained = container.iter().filter(|c| c.is_some()).count();
    stages.listed_with_root = nodes.iter().filter(|x| x.status == NodeStatus::Listed).count();
    stages.listed_without_root = stages.listed_with_root.saturating_sub(1);
    stages.complete = complete;
    TowerLattice { nodes, edges, stages }
}

impl TowerLattice {
    pub fn listed(&self) -> impl Iterator<Item = &TowerNode> {
        self.nodes.iter().filter(|n| n.status == NodeStatus::Listed)
    }

    pub fn node(&self, id: usize) -> &TowerNode {
        &self.nodes[id]
    }

    /// For every listed non-root node, the incoming edge of minimal degree
    /// (ties broken by smallest parent id).
    pub fn covering_tree(&self) -> Vec<Edge> {
        let mut best: BTreeMap<usize, Edge> = BTreeMap::new();
        for e in &self.edges {
            let cur = best.entry(e.to).or_insert(*e);
            if (e.degree, e.from) < (cur.degree, cur.from) {
                *cur = *e;
            }
        }
        best.into_values().collect()
    }

    /// Id of the listed node conjugate to `h`, if any.
    pub fn find(&self, h: &OpenSubgroup) -> Option<usize> {
        self.nodes.iter().find(|n| n.subgroup.is_conjugate(h).is_some()).map(|n| n.id)
    }
}

pub fn genus_histogram(lat: &TowerLattice) -> BTreeMap<u64, usize> {
    let mut h = BTreeMap::new();
    for n in lat.listed() {
        *h.entry(n.invariants.genus).or_insert(0) += 1;
    }
    h
}

/// Flag file entry: which genus-0 nodes have rational points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointFlag {
    pub fingerprint: String,
    pub has_rational_point: bool,
}

pub fn parse_flag_file(s: &str) -> Result<Vec<PointFlag>> {
    let v: Vec<PointFlag> = serde_json::from_str(s)?;
    for f in &v {
        u64::from_str_radix(f.fingerprint.trim_start_matches("0x"), 16)
            .map_err(|_| Error::Parse(format!("bad fingerprint {:?}", f.fingerprint)))?;
    }
    Ok(v)
}

pub fn fingerprint_hex(fp: u64) -> String {
    format!("{fp:016x}")
}

/// Flags derived from real points: a genus-0 curve of 2-power level has
/// local points at every odd prime, so by reciprocity it has a rational point
/// iff it has a real point, i.e. iff the group contains an element of trace
/// exactly 0 and determinant exactly −1 (complex conjugation). Curves of
/// higher genus are flagged false; their rational points are not decided here.
pub fn derive_point_flags(lat: &TowerLattice) -> Vec<PointFlag> {
    lat.listed()
        .map(|n| PointFlag {
            fingerprint: fingerprint_hex(n.subgroup.fingerprint()),
            has_rational_point: n.invariants.genus == 0 && has_exact_trace0_detm1(n.subgroup.group()),
        })
        .collect()
}

/// For flagged genus-0 listed nodes, the −I-free index-2 subgroups up to
/// conjugacy, returned with the id of their source node.
pub fn minus_identity_free_layer(lat: &TowerLattice, flags: &[PointFlag]) -> Vec<(usize, OpenSubgroup)> {
    let marked: std::collections::HashSet<String> = flags
        .iter()
        .filter(|f| f.has_rational_point)
        .map(|f| f.fingerprint.trim_start_matches("0x").to_lowercase())
        .collect();
    let mut out = Vec::new();
    for n in lat.listed() {
        if n.invariants.genus != 0 || !marked.contains(&fingerprint_hex(n.subgroup.fingerprint())) {
            continue;
        }
        for k in crate::maximal::minus_identity_free_index2_subgroups(&n.subgroup) {
            out.push((n.id, k));
        }
    }
    out
}

// ---- JSON / DOT export ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: usize,
    pub level: u32,
    pub generators: Vec<[u32; 4]>,
    pub index: u64,
    pub genus: u64,
    pub cusps: u64,
    pub e2: u64,
    pub e3: u64,
    pub flags: SubgroupPredicates,
    pub status: NodeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psl2_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    pub nodes: Vec<NodeJson>,
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<StageCounts>,
}

pub fn to_json(lat: &TowerLattice) -> LatticeJson {
    LatticeJson {
        schema_version: Some(crate::DATA_SCHEMA_VERSION.to_string()),
        nodes: lat
            .nodes
            .iter()
            .map(|n| {
                let sj = n.subgroup.to_json();
                NodeJson {
                    id: n.id,
                    level: sj.level,
                    generators: sj.generators,
                    index: n.subgroup.index(),
                    genus: n.invariants.genus,
                    cusps: n.invariants.cusps,
                    e2: n.invariants.e2,
                    e3: n.invariants.e3,
                    flags: n.invariants.flags,
                    status: n.status,
                    psl2_index: Some(n.invariants.psl2_index),
                    container: n.container,
                    fingerprint: Some(fingerprint_hex(n.subgroup.fingerprint())),
                }
            })
            .collect(),
        edges: lat.edges.clone(),
        stages: Some(lat.stages.clone()),
    }
}

pub fn export_json(lat: &TowerLattice) -> String {
    serde_json::to_string_pretty(&to_json(lat)).expect("serializable")
}

/// Rebuild a lattice from its JSON form; subgroups are re-closed and the
/// stored invariants are checked against recomputation.
pub fn import_json(s: &str) -> Result<TowerLattice> {
    let j: LatticeJson = serde_json::from_str(s)?;
    let mut nodes = Vec::with_capacity(j.nodes.len());
    for (pos, n) in j.nodes.iter().enumerate() {
        if n.id != pos {
            return Err(Error::Parse(format!("node ids must be 0..n in order, got {} at {pos}", n.id)));
        }
        let h = SubgroupJson { level: n.level, generators: n.generators.clone() }.to_subgroup()?;
        if h.level() != n.level || h.index() != n.index {
            return Err(Error::Parse(format!("node {} does not match its level/index", n.id)));
        }
        let inv = CurveInvariants {
            psl2_index: n.psl2_index.unwrap_or(0),
            cusps: n.cusps,
            e2: n.e2,
            e3: n.e3,
            genus: n.genus,
            flags: n.flags,
        };
        nodes.push(TowerNode { id: n.id, subgroup: h, invariants: inv, status: n.status, container: n.container });
    }
    for e in &j.edges {
        if e.from >= nodes.len() || e.to >= nodes.len() {
            return Err(Error::Parse(format!("edge {e:?} out of range")));
        }
    }
    if let Some(c) = j.nodes.iter().filter_map(|n| n.container).find(|&c| c >= nodes.len()) {
        return Err(Error::Parse(format!("container {c} out of range")));
    }
    Ok(TowerLattice { nodes, edges: j.edges, stages: j.stages.unwrap_or_default() })
}

pub fn export_dot(lat: &TowerLattice) -> String {
    let mut s = String::from("digraph tower {\n  rankdir=TB;\n");
    for n in lat.listed() {
        s.push_str(&format!(
            "  n{} [label=\"{}:{}:{}\"];\n",
            n.id,
            n.id,
            n.invariants.genus,
            n.subgroup.index()
        ));
    }
    for e in &lat.edges {
        let attr = if e.degree == 2 { String::new() } else { format!(" [label=\"{}\"]", e.degree) };
        s.push_str(&format!("  n{} -> n{}{};\n", e.from, e.to, attr));
    }
    s.push_str("}\n");
    s
}

// ---- checkpointing ----

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    subgroups: Vec<SubgroupJson>,
    queue: Vec<usize>,
    edges: Vec<(usize, usize, u64)>,
    stages: StageCounts,
    pops: usize,
}

fn save_checkpoint(w: &Work, path: &std::path::Path) -> Result<()> {
    let c = Checkpoint {
        subgroups: w.subs.iter().map(|s| s.to_json()).collect(),
        queue: w.queue.iter().copied().collect(),
        edges: w.edges.clone(),
        stages: w.stages.clone(),
        pops: w.pops,
    };
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec(&c)?)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

fn load_checkpoint(path: &std::path::Path) -> Result<Work> {
    let c: Checkpoint = serde_json::from_slice(&std::fs::read(path)?)?;
    let mut w = Work {
        subs: Vec::new(),
        invs: Vec::new(),
        by_key: HashMap::new(),
        queue: c.queue.into_iter().collect(),
        edges: c.edges,
        stages: c.stages,
        pops: c.pops,
    };
    for sj in c.subgroups {
        let h = sj.to_subgroup()?;
        let inv = invariants(&h)?;
        let key = h.conj_key();
        w.by_key.entry((key.level_exp, key.order, key.histogram)).or_default().push(w.subs.len());
        w.subs.push(h);
        w.invs.push(inv);
    }
    Ok(w)
}

/// Conjugate a lattice node into a named subgroup's frame, for lookups.
pub fn conjugator_between(a: &OpenSubgroup, b: &OpenSubgroup) -> Option<ResidueMatrix> {
    a.is_conjugate(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_run_to_level_4() {
        let cfg = TowerConfig { max_level_exp: Some(2), ..Default::default() };
        let lat = enumerate_tower(&cfg).unwrap();
        assert_eq!(lat.nodes[0].subgroup.index(), 1);
        assert_eq!(lat.nodes[0].invariants.genus, 0);
        assert!(lat.edges.iter().all(|e| e.to != 0));
        assert!(lat.nodes.iter().all(|n| n.subgroup.level() <= 4));
        let back = import_json(&export_json(&lat)).unwrap();
        assert_eq!(export_json(&back), export_json(&lat));
        let dot = export_dot(&lat);
        assert!(dot.starts_with("digraph"));
    }
}
