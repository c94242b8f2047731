use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::optim::nnls;

/// One spin pair's share of a delay segment.
///
/// `target` is the wanted logical coupling angle, `offset` phase already
/// accrued (e.g. during shaped pulses) and `weight` its importance in the
/// least-squares objective. Weight 0 marks pairs whose phase is absorbed
/// elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    pub j_hz: f64,
    pub target: f64,
    pub offset: f64,
    pub weight: f64,
}

impl PairTerm {
    pub fn new(i: usize, j: usize, j_hz: f64, target: f64) -> Self {
        Self { i, j, j_hz, target, offset: 0.0, weight: 1.0 }
    }

    fn matters(&self) -> bool {
        self.weight > 0.0 && self.j_hz != 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefocusOptions {
    /// Most 180° pulses allowed in one segment.
    pub max_pulses: Option<usize>,
    /// Couplings weaker than this are left unrefocused.
    pub ignore_below_hz: f64,
    /// Pulse limit for the exhaustive fallback search.
    pub exhaustive_max_pulses: usize,
}

impl Default for RefocusOptions {
    fn default() -> Self {
        Self { max_pulses: None, ignore_below_hz: 0.0, exhaustive_max_pulses: 3 }
    }
}

/// Per-spin sign patterns over the intervals of a segment.
///
/// `signs[s][k]` is `±1` for spin `s` in interval `k`; a 180° pulse sits at
/// boundary `k` (just before interval `k`) wherever a spin's sign differs
/// from its previous value, starting from the carried sign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefocusPlan {
    pub signs: Vec<Vec<i8>>,
    pub pulses: Vec<(usize, usize)>,
    pub diagnostic: Option<String>,
}

impl RefocusPlan {
    pub fn from_signs(signs: Vec<Vec<i8>>, carried: &[i8]) -> Self {
        let mut pulses = Vec::new();
        let k = signs.first().map_or(0, Vec::len);
        for b in 0..k {
            for (s, row) in signs.iter().enumerate() {
                let prev = if b == 0 { carried[s] } else { row[b - 1] };
                if row[b] != prev {
                    pulses.push((b, s));
                }
            }
        }
        Self { signs, pulses, diagnostic: None }
    }

    pub fn intervals(&self) -> usize {
        self.signs.first().map_or(0, Vec::len)
    }

    pub fn pulse_count(&self) -> usize {
        self.pulses.len()
    }

    /// Signs after the segment.
    pub fn final_signs(&self) -> Vec<i8> {
        self.signs.iter().map(|r| *r.last().unwrap_or(&1)).collect()
    }

    /// Coefficient of interval `k` in pair `(i, j)`'s coupling phase.
    pub fn coefficient(&self, p: &PairTerm, k: usize) -> f64 {
        PI * p.j_hz * (self.signs[p.i][k] * self.signs[p.j][k]) as f64
    }
}

/// Walsh functions of length `k` (a power of two) in sequency order.
pub fn walsh_rows(k: usize) -> Vec<Vec<i8>> {
    assert!(k.is_power_of_two());
    let mut rows: Vec<Vec<i8>> = (0..k)
        .map(|r| (0..k).map(|c| if (r & c).count_ones() % 2 == 0 { 1 } else { -1 }).collect())
        .collect();
    rows.sort_by_key(|row| row.windows(2).filter(|w| w[0] != w[1]).count());
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelaySolution {
    pub delays: Vec<f64>,
    /// Achieved logical phase per input pair, offsets included.
    pub achieved: Vec<f64>,
    /// `Σ w (achieved − target)²` over weighted pairs.
    pub residual: f64,
    pub exact: bool,
}

/// Interval durations `Δt ≥ min_delay` minimizing the weighted squared
/// phase error, as a nonnegative least-squares problem.
pub fn optimize_delays(plan: &RefocusPlan, pairs: &[PairTerm], min_delay: f64) -> DelaySolution {
    let k = plan.intervals();
    let rows: Vec<&PairTerm> = pairs.iter().filter(|p| p.matters()).collect();
    let a: Vec<Vec<f64>> = rows.iter().map(|p| (0..k).map(|c| p.weight.sqrt() * plan.coefficient(p, c)).collect()).collect();
    let b: Vec<f64> = rows
        .iter()
        .zip(&a)
        .map(|(p, row)| p.weight.sqrt() * (p.target - p.offset) - min_delay * row.iter().sum::<f64>())
        .collect();
    let u = nnls(&a, &b, k);
    let delays: Vec<f64> = u.iter().map(|x| x + min_delay).collect();
    let achieved: Vec<f64> = pairs
        .iter()
        .map(|p| p.offset + if p.j_hz == 0.0 { 0.0 } else { (0..k).map(|c| plan.coefficient(p, c) * delays[c]).sum::<f64>() })
        .collect();
    let residual: f64 = pairs
        .iter()
        .zip(&achieved)
        .filter(|(p, _)| p.weight > 0.0)
        .map(|(p, a)| p.weight * (a - p.target).powi(2))
        .sum();
    DelaySolution { delays, achieved, residual, exact: residual < 1e-9 }
}

/// `Π |cos(δθ/2)|` over paired achieved/target phases.
pub fn estimate_retention(achieved: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(achieved.len(), targets.len());
    achieved.iter().zip(targets).map(|(a, t)| ((a - t) / 2.0).cos().abs()).product()
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
}

/// Build a sign plan for one segment from the Walsh library, falling back to
/// an exhaustive search over few-pulse plans when the library plan cannot
/// meet every target.
pub fn insert_refocusing(n: usize, pairs: &[PairTerm], carried: &[i8], opts: &RefocusOptions) -> RefocusPlan {
    let relevant: Vec<&PairTerm> = pairs.iter().filter(|p| p.matters()).collect();
    let mut involved = vec![false; n];
    for p in &relevant {
        involved[p.i] = true;
        involved[p.j] = true;
    }
    let mut notes = Vec::new();

    // spins joined by wanted couplings share a Walsh row, up to a relative sign
    let mut dsu = Dsu((0..n).collect());
    let mut wanted: BTreeMap<usize, Vec<(usize, i8)>> = BTreeMap::new();
    for p in relevant.iter().filter(|p| p.target - p.offset != 0.0) {
        let a = dsu.find(p.i);
        let b = dsu.find(p.j);
        dsu.0[a] = b;
        let rel: i8 = if (p.target - p.offset) * p.j_hz > 0.0 { 1 } else { -1 };
        wanted.entry(p.i).or_default().push((p.j, rel));
        wanted.entry(p.j).or_default().push((p.i, rel));
    }
    let mut sigma = vec![0i8; n];
    for s in 0..n {
        if !involved[s] || sigma[s] != 0 {
            continue;
        }
        sigma[s] = carried[s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(v, rel) in wanted.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
                let want = sigma[u] * rel;
                if sigma[v] == 0 {
                    sigma[v] = want;
                    stack.push(v);
                } else if sigma[v] != want {
                    notes.push(format!("inconsistent coupling signs around spins {u},{v}"));
                }
            }
        }
    }
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_index: BTreeMap<usize, usize> = BTreeMap::new();
    for s in (0..n).filter(|&s| involved[s]) {
        let r = dsu.find(s);
        let c = *root_index.entry(r).or_insert_with(|| {
            comps.push(Vec::new());
            comps.len() - 1
        });
        comps[c].push(s);
        comp_of[s] = c;
    }
    // couplings that must average out between components
    let nc = comps.len();
    let mut conflict = vec![vec![0.0f64; nc]; nc];
    for p in relevant.iter().filter(|p| p.target - p.offset == 0.0 && p.j_hz.abs() >= opts.ignore_below_hz) {
        let (a, b) = (comp_of[p.i], comp_of[p.j]);
        if a == b {
            notes.push(format!("J{}{} cannot be refocused inside a coupled group", p.i, p.j));
        } else {
            conflict[a][b] += p.j_hz.abs();
            conflict[b][a] += p.j_hz.abs();
        }
    }

    let build = |palette: usize| -> RefocusPlan {
        let mut order: Vec<usize> = (0..nc).collect();
        order.sort_by(|&a, &b| {
            let wa: f64 = conflict[a].iter().sum();
            let wb: f64 = conflict[b].iter().sum();
            wb.total_cmp(&wa).then(comps[a][0].cmp(&comps[b][0]))
        });
        let mut color = vec![usize::MAX; nc];
        for &c in &order {
            let clash = |col: usize| -> f64 { (0..nc).filter(|&d| color[d] == col).map(|d| conflict[c][d]).sum() };
            color[c] = (0..palette).min_by(|&x, &y| clash(x).total_cmp(&clash(y)).then(x.cmp(&y))).unwrap_or(0);
        }
        let used = color.iter().copied().max().map_or(1, |m| m + 1);
        let k = used.next_power_of_two();
        let rows = walsh_rows(k);
        let mut signs: Vec<Vec<i8>> = (0..n).map(|s| vec![carried[s]; k]).collect();
        for (c, members) in comps.iter().enumerate() {
            let row = &rows[color[c]];
            // pick the overall sign that needs fewer pulses at the start
            let mismatches = |flip: i8| members.iter().filter(|&&s| sigma[s] * row[0] * flip != carried[s]).count();
            let flip = if mismatches(-1) < mismatches(1) { -1 } else { 1 };
            for &s in members {
                signs[s] = row.iter().map(|&r| r * sigma[s] * flip).collect();
            }
        }
        RefocusPlan::from_signs(signs, carried)
    };

    let mut palette = nc.max(1);
    let mut plan = build(palette);
    if let Some(budget) = opts.max_pulses {
        while plan.pulse_count() > budget && palette > 1 {
            palette = (palette.next_power_of_two() / 2).max(1);
            plan = build(palette);
        }
        if plan.pulse_count() > budget {
            plan = RefocusPlan::from_signs((0..n).map(|s| vec![carried[s]]).collect(), carried);
            notes.push("pulse budget forces an unrefocused segment".into());
        }
    }
    let budget = opts.max_pulses.unwrap_or(usize::MAX);
    let mut best = optimize_delays(&plan, pairs, 0.0).residual;
    let n_involved = involved.iter().filter(|&&x| x).count();
    if best > 1e-9 && n_involved <= 5 {
        let limit = opts.exhaustive_max_pulses.min(budget);
        if let Some(alt) = exhaustive_plan(n, pairs, carried, &involved, limit) {
            let r = optimize_delays(&alt, pairs, 0.0).residual;
            if r < best - 1e-12 {
                best = r;
                plan = alt;
            }
        }
    }
    if best > 1e-9 {
        notes.push(format!("targets not met exactly; residual {best:.3e}"));
    }
    if !notes.is_empty() {
        notes.dedup();
        plan.diagnostic = Some(notes.join("; "));
    }
    plan
}

/// Best plan with at most four intervals and `limit` pulses on `involved`
/// spins, by residual then pulse count.
pub fn exhaustive_plan(n: usize, pairs: &[PairTerm], carried: &[i8], involved: &[bool], limit: usize) -> Option<RefocusPlan> {
    let spins: Vec<usize> = (0..n).filter(|&s| involved[s]).collect();
    let mut best: Option<(f64, usize, RefocusPlan)> = None;
    for k in 1..=4usize {
        let slots: Vec<(usize, usize)> = (0..k).flat_map(|b| spins.iter().map(move |&s| (b, s))).collect();
        let mut chosen: Vec<usize> = Vec::new();
        enumerate_subsets(slots.len(), limit, 0, &mut chosen, &mut |set| {
            let mut signs: Vec<Vec<i8>> = (0..n).map(|s| vec![carried[s]; k]).collect();
            for &idx in set {
                let (b, s) = slots[idx];
                for v in signs[s][b..].iter_mut() {
                    *v = -*v;
                }
            }
            let plan = RefocusPlan::from_signs(signs, carried);
            let r = optimize_delays(&plan, pairs, 0.0).residual;
            let better = match &best {
                None => true,
                Some((br, bp, _)) => r < br - 1e-12 || ((r - br).abs() <= 1e-12 && plan.pulse_count() < *bp),
            };
            if better {
                best = Some((r, plan.pulse_count(), plan));
            }
        });
    }
    best.map(|(_, _, p)| p)
}

fn enumerate_subsets(m: usize, limit: usize, start: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    visit(chosen);
    if chosen.len() == limit {
        return;
    }
    for x in start..m {
        chosen.push(x);
        enumerate_subsets(m, limit, x + 1, chosen, visit);
        chosen.pop();
    }
}
