//! Exact depth-first branch-and-bound with dynamic decomposition.
//!
//! At every node the free variables are split into connected components of the
//! residual conflict and link graph, and each component is solved on its own.
//! Within a component the search branches on the middle of a pseudo-diameter
//! when the component is sparse and long, otherwise on the variable with most
//! free neighbours, trying 1 before 0. Selecting a variable forces its conflict
//! neighbours to 0.
//!
//! The bound of a subproblem is a weighted clique cover of its free variables:
//! optimistic gains are split across greedily grown cliques and each clique
//! contributes its share once. Optimistic gains count positive link terms whose partner is still free and
//! every link term whose partner is already selected. Equal-valued optima are
//! broken toward selecting the lowest differing variable.

use std::time::{Duration, Instant};

use super::{decompose, IlpModel, Link, Solution, SolveStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Search budget per component.
    pub time_budget: Duration,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_budget: Duration::from_secs(60),
        }
    }
}

/// Solves the whole program component by component, largest first.
pub fn solve(model: &IlpModel, opts: &SolveOptions) -> Solution {
    let start = Instant::now();
    let comps = decompose(model);
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&a, &b| {
        comps[b]
            .vars
            .len()
            .cmp(&comps[a].vars.len())
            .then(a.cmp(&b))
    });

    let mut assignment = vec![false; model.num_vars()];
    let mut optimal = true;
    let mut nodes = 0;
    for idx in order {
        let comp = &comps[idx];
        let sol = solve_component(&comp.model, opts);
        optimal &= sol.optimal;
        nodes += sol.stats.nodes;
        for (local, &global) in comp.vars.iter().enumerate() {
            assignment[global] = sol.assignment[local];
        }
    }
    Solution {
        objective_value: model.objective(&assignment),
        assignment,
        optimal,
        stats: SolveStats {
            nodes,
            components: comps.len(),
            wall_time: start.elapsed(),
        },
    }
}

const FREE: i8 = -1;

struct Prepared {
    coeff: Vec<f64>,
    primary: Vec<usize>,
    conflicts: Vec<Vec<usize>>,
    /// Position in descending-coefficient order.
    rank: Vec<usize>,
    /// Conflict lists in rank order.
    ranked_conflicts: Vec<Vec<usize>>,
    /// (partner, link coefficient) for each primary variable.
    inter: Vec<Vec<(usize, f64)>>,
    links: Vec<Link>,
}

impl Prepared {
    fn new(model: &IlpModel) -> Self {
        let n = model.num_vars();
        let coeff: Vec<f64> = model.vars().iter().map(|v| v.coeff).collect();

        let mut conflicts = vec![Vec::new(); n];
        for &[a, b] in model.pairwise() {
            conflicts[a].push(b);
            conflicts[b].push(a);
        }
        for g in model.groups() {
            for (i, &a) in g.iter().enumerate() {
                for &b in &g[i + 1..] {
                    conflicts[a].push(b);
                    conflicts[b].push(a);
                }
            }
        }
        for adj in &mut conflicts {
            adj.sort_unstable();
            adj.dedup();
        }

        let mut inter = vec![Vec::new(); n];
        for l in model.links() {
            let q = coeff[l.aux];
            inter[l.a].push((l.b, q));
            inter[l.b].push((l.a, q));
        }

        let primary: Vec<usize> = (0..n).filter(|&v| !model.is_aux(v)).collect();
        let mut by_coeff: Vec<usize> = (0..n).collect();
        by_coeff.sort_by(|&a, &b| coeff[b].total_cmp(&coeff[a]).then(a.cmp(&b)));
        let mut rank = vec![0; n];
        for (i, &v) in by_coeff.iter().enumerate() {
            rank[v] = i;
        }
        let ranked_conflicts = conflicts
            .iter()
            .map(|adj| {
                let mut adj = adj.clone();
                adj.sort_unstable_by_key(|&u| rank[u]);
                adj
            })
            .collect();

        Prepared {
            coeff,
            primary,
            conflicts,
            rank,
            ranked_conflicts,
            inter,
            links: model.links().to_vec(),
        }
    }
}

/// Optimum of a subproblem: its value and the selected variables, ascending.
struct Sub {
    value: f64,
    selected: Vec<usize>,
}

/// True if `a` selects the lowest variable on which two selections over the
/// same variable set differ.
fn prefer_selection(a: &[usize], b: &[usize]) -> bool {
    match a.iter().zip(b).find(|(x, y)| x != y) {
        Some((x, y)) => x < y,
        None => a.len() > b.len(),
    }
}

fn tolerance(floor: f64) -> f64 {
    1e-9 * floor.abs().max(1.0)
}

struct Search<'a> {
    p: &'a Prepared,
    val: Vec<i8>,
    trail: Vec<usize>,
    residual: Vec<f64>,
    seen: Vec<u32>,
    queued: Vec<bool>,
    epoch: u32,
    parent: Vec<usize>,
    nodes: u64,
    deadline: Instant,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn assign(&mut self, v: usize, x: i8) {
        self.trail.push(v);
        self.val[v] = x;
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("trail entry");
            self.val[v] = FREE;
        }
    }

    /// Gain of selecting `v` given the variables selected so far.
    fn gain(&self, v: usize) -> f64 {
        let mut g = self.p.coeff[v];
        for &(u, q) in &self.p.inter[v] {
            if self.val[u] == 1 {
                g += q;
            }
        }
        g
    }

    fn optimistic_gain(&self, v: usize) -> f64 {
        let mut g = self.p.coeff[v];
        for &(u, q) in &self.p.inter[v] {
            match self.val[u] {
                1 => g += q,
                FREE if q > 0.0 => g += q,
                _ => {}
            }
        }
        g
    }

    /// Upper bound over free `vars` by weighted clique cover: residual
    /// optimistic gains are peeled off greedily built cliques of free
    /// variables, and each clique contributes the amount peeled.
    fn upper_bound(&mut self, vars: &[usize]) -> f64 {
        let mut order: Vec<usize> = Vec::with_capacity(vars.len());
        for &v in vars {
            let g = self.optimistic_gain(v);
            self.residual[v] = g.max(0.0);
            if g > 0.0 {
                order.push(v);
            }
        }
        order.sort_unstable_by_key(|&v| self.p.rank[v]);
        let mut total = 0.0;
        let mut clique = Vec::new();
        let mut cands = Vec::new();
        for &v in &order {
            if self.residual[v] <= 0.0 {
                continue;
            }
            cands.clear();
            cands.extend(
                self.p.ranked_conflicts[v]
                    .iter()
                    .copied()
                    .filter(|&u| self.val[u] == FREE && self.residual[u] > 0.0),
            );
            while self.residual[v] > 0.0 {
                clique.clear();
                clique.push(v);
                for &u in &cands {
                    if self.residual[u] > 0.0
                        && clique[1..]
                            .iter()
                            .all(|w| self.p.conflicts[u].binary_search(w).is_ok())
                    {
                        clique.push(u);
                    }
                }
                let delta = clique
                    .iter()
                    .map(|&u| self.residual[u])
                    .fold(f64::INFINITY, f64::min);
                total += delta;
                for &u in &clique {
                    self.residual[u] = (self.residual[u] - delta).max(0.0);
                }
            }
        }
        total
    }

    fn free_neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.p.conflicts[v]
            .iter()
            .copied()
            .chain(self.p.inter[v].iter().map(|&(u, _)| u))
            .filter(|&u| self.val[u] == FREE)
    }

    /// Connected components of the free variables, ordered by smallest member.
    fn components(&mut self, vars: &[usize]) -> Vec<Vec<usize>> {
        self.next_epoch();
        let mut out = Vec::new();
        for &start in vars {
            if self.seen[start] == self.epoch {
                continue;
            }
            self.seen[start] = self.epoch;
            let mut comp = vec![start];
            let p = self.p;
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                let near = p.conflicts[v]
                    .iter()
                    .copied()
                    .chain(p.inter[v].iter().map(|&(u, _)| u));
                for u in near {
                    if self.val[u] == FREE && self.seen[u] != self.epoch {
                        self.seen[u] = self.epoch;
                        comp.push(u);
                    }
                }
            }
            if comp.len() == vars.len() {
                return vec![vars.to_vec()];
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Breadth-first distances from `start` over free variables; returns the
    /// farthest variable (smallest id on ties) and the parent map.
    fn sweep(&mut self, start: usize, parent: &mut [usize]) -> (usize, usize) {
        self.next_epoch();
        self.seen[start] = self.epoch;
        parent[start] = start;
        let mut frontier = vec![start];
        let mut depth = 0;
        let mut far = start;
        loop {
            let mut next = Vec::new();
            for &v in &frontier {
                let adj: Vec<usize> = self.free_neighbours(v).collect();
                for u in adj {
                    if self.seen[u] != self.epoch {
                        self.seen[u] = self.epoch;
                        parent[u] = v;
                        next.push(u);
                    }
                }
            }
            if next.is_empty() {
                return (far, depth);
            }
            depth += 1;
            far = *next.iter().min().expect("non-empty");
            frontier = next;
        }
    }

    /// Sparse, long components are split at the middle of a pseudo-diameter;
    /// otherwise the variable with most free neighbours is chosen.
    fn branch_var(&mut self, vars: &[usize]) -> usize {
        let degrees: Vec<usize> = vars
            .iter()
            .map(|&v| self.free_neighbours(v).count())
            .collect();
        if degrees.iter().sum::<usize>() <= 3 * vars.len() {
            let mut parent = std::mem::take(&mut self.parent);
            let (a, _) = self.sweep(vars[0], &mut parent);
            let (b, diameter) = self.sweep(a, &mut parent);
            let mut v = b;
            for _ in 0..diameter / 2 {
                v = parent[v];
            }
            self.parent = parent;
            if diameter >= 4 {
                return v;
            }
        }
        let mut best = 0;
        for i in 1..vars.len() {
            let (x, y) = (vars[i], vars[best]);
            let ord = degrees[i]
                .cmp(&degrees[best])
                .then(self.p.coeff[x].total_cmp(&self.p.coeff[y]))
                .then(y.cmp(&x));
            if ord.is_gt() {
                best = i;
            }
        }
        vars[best]
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    fn has_free_link(&self, v: usize) -> bool {
        self.p.inter[v].iter().any(|&(u, _)| self.val[u] == FREE)
    }

    /// Forces `v` to 0 when a conflicting neighbour `u` has a subset closed
    /// neighbourhood and beats it: any solution with `v` can swap it for `u`
    /// without losing value, and the swap wins the tie-break.
    fn dominated(&self, v: usize) -> bool {
        if self.val[v] != FREE || self.has_free_link(v) {
            return false;
        }
        let gv = self.gain(v);
        self.p.conflicts[v].iter().any(|&u| {
            if self.val[u] != FREE || self.has_free_link(u) {
                return false;
            }
            let gu = self.gain(u);
            if !(gu > gv || (gu == gv && u < v)) {
                return false;
            }
            self.p.conflicts[u].iter().all(|&w| {
                w == v || self.val[w] != FREE || self.p.conflicts[v].binary_search(&w).is_ok()
            })
        })
    }

    /// Queues the free variables whose domination status may change when `w`
    /// is fixed: those within two conflict or link steps.
    fn queue_around(&mut self, w: usize, queue: &mut Vec<usize>) {
        let p = self.p;
        let near = p.conflicts[w]
            .iter()
            .copied()
            .chain(p.inter[w].iter().map(|&(u, _)| u));
        for u in near {
            for x in std::iter::once(u).chain(p.conflicts[u].iter().copied()) {
                if self.val[x] == FREE && !self.queued[x] {
                    self.queued[x] = true;
                    queue.push(x);
                }
            }
        }
    }

    /// Fixes dominated variables to 0 until none is left. Only variables near
    /// those fixed since trail position `since` are examined, or all of `vars`
    /// when there is no such position.
    fn reduce(&mut self, vars: &[usize], since: Option<usize>) {
        let mut queue = Vec::new();
        match since {
            None => {
                for &v in vars.iter().rev() {
                    self.queued[v] = true;
                    queue.push(v);
                }
            }
            Some(mark) => {
                for i in mark..self.trail.len() {
                    let w = self.trail[i];
                    self.queue_around(w, &mut queue);
                }
                queue.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        while let Some(v) = queue.pop() {
            self.queued[v] = false;
            if self.dominated(v) {
                self.assign(v, 0);
                self.queue_around(v, &mut queue);
            }
        }
    }

    /// Starting incumbent for the whole component: a ratio greedy followed by
    /// improving moves that insert one variable and evict its conflicting
    /// neighbours, or drop a variable with negative marginal gain.
    fn heuristic(&self, vars: &[usize]) -> Sub {
        let p = self.p;
        let n = p.coeff.len();
        let pos = |v: usize| p.coeff[v].max(0.0);
        let ratio = |v: usize| {
            let around: f64 = p.conflicts[v].iter().map(|&u| pos(u)).sum();
            let w = pos(v);
            if w > 0.0 {
                w / (w + around)
            } else {
                0.0
            }
        };
        let mut order: Vec<(f64, usize)> = vars.iter().map(|&v| (ratio(v), v)).collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut sel = vec![false; n];
        let linked = |sel: &[bool], v: usize, skip: &[usize]| -> f64 {
            p.inter[v]
                .iter()
                .filter(|&&(u, _)| sel[u] && !skip.contains(&u))
                .map(|&(_, q)| q)
                .sum()
        };
        for &(_, v) in &order {
            if p.conflicts[v].iter().any(|&u| sel[u]) {
                continue;
            }
            if p.coeff[v] + linked(&sel, v, &[]) >= 0.0 {
                sel[v] = true;
            }
        }

        let mut evict = Vec::new();
        for _ in 0..100 {
            let mut improved = false;
            for &v in vars {
                if sel[v] {
                    if p.coeff[v] + linked(&sel, v, &[]) < -1e-12 {
                        sel[v] = false;
                        improved = true;
                    }
                    continue;
                }
                evict.clear();
                evict.extend(p.conflicts[v].iter().copied().filter(|&u| sel[u]));
                let mut delta = p.coeff[v] + linked(&sel, v, &evict);
                for (i, &u) in evict.iter().enumerate() {
                    delta -= p.coeff[u] + linked(&sel, u, &evict);
                    delta -= p.inter[u]
                        .iter()
                        .filter(|&&(x, _)| evict[i + 1..].contains(&x))
                        .map(|&(_, q)| q)
                        .sum::<f64>();
                }
                if delta > 1e-12 {
                    for &u in &evict {
                        sel[u] = false;
                    }
                    sel[v] = true;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }

        let selected: Vec<usize> = vars.iter().copied().filter(|&v| sel[v]).collect();
        let mut value = 0.0;
        for &v in &selected {
            value += p.coeff[v];
            for &(u, q) in &p.inter[v] {
                if u < v && sel[u] {
                    value += q;
                }
            }
        }
        Sub { value, selected }
    }

    /// Feasible completion used once the budget is spent.
    fn greedy(&mut self, vars: &[usize]) -> Sub {
        let mark = self.trail.len();
        let mut order = vars.to_vec();
        order.sort_by(|&a, &b| self.p.coeff[b].total_cmp(&self.p.coeff[a]).then(a.cmp(&b)));
        let mut value = 0.0;
        let mut selected = Vec::new();
        for v in order {
            if self.val[v] != FREE {
                continue;
            }
            let g = self.gain(v);
            if g >= 0.0 {
                value += g;
                selected.push(v);
                self.assign(v, 1);
                for i in 0..self.p.conflicts[v].len() {
                    let u = self.p.conflicts[v][i];
                    if self.val[u] == FREE {
                        self.assign(u, 0);
                    }
                }
            } else {
                self.assign(v, 0);
            }
        }
        self.undo(mark);
        selected.sort_unstable();
        Sub { value, selected }
    }

    /// Exact optimum over the free `vars`, or `None` once it is proven to fall
    /// below `floor`. `vars` must be closed under free adjacency.
    fn solve(&mut self, vars: &[usize], floor: f64, since: Option<usize>) -> Option<Sub> {
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if vars.is_empty() {
            return Some(Sub {
                value: 0.0,
                selected: Vec::new(),
            });
        }
        if self.timed_out {
            return Some(self.greedy(vars));
        }
        if self.upper_bound(vars) < floor - tolerance(floor) {
            return None;
        }

        let mark = self.trail.len();
        self.reduce(vars, since);
        let reduced = self.trail.len();
        let result = if reduced > mark {
            let rest: Vec<usize> = vars
                .iter()
                .copied()
                .filter(|&u| self.val[u] == FREE)
                .collect();
            self.split(&rest, floor, reduced)
        } else {
            self.split(vars, floor, reduced)
        };
        self.undo(mark);
        result
    }

    fn split(&mut self, vars: &[usize], floor: f64, since: usize) -> Option<Sub> {
        if vars.is_empty() {
            return Some(Sub {
                value: 0.0,
                selected: Vec::new(),
            });
        }
        let comps = self.components(vars);
        if comps.len() > 1 {
            let bounds: Vec<f64> = comps.iter().map(|c| self.upper_bound(c)).collect();
            let mut rest: f64 = bounds.iter().sum();
            let mut value = 0.0;
            let mut selected = Vec::new();
            for (comp, ub) in comps.iter().zip(&bounds) {
                rest -= ub;
                let sub = self.solve(comp, floor - value - rest, Some(since))?;
                value += sub.value;
                selected.extend(sub.selected);
            }
            selected.sort_unstable();
            return Some(Sub { value, selected });
        }

        if let [v] = vars {
            let g = self.gain(*v);
            return Some(if g >= 0.0 {
                Sub {
                    value: g,
                    selected: vec![*v],
                }
            } else {
                Sub {
                    value: 0.0,
                    selected: Vec::new(),
                }
            });
        }

        let v = self.branch_var(vars);

        let mark = self.trail.len();
        let g = self.gain(v);
        self.assign(v, 1);
        for i in 0..self.p.conflicts[v].len() {
            let u = self.p.conflicts[v][i];
            if self.val[u] == FREE {
                self.assign(u, 0);
            }
        }
        let rest: Vec<usize> = vars
            .iter()
            .copied()
            .filter(|&u| self.val[u] == FREE)
            .collect();
        let with = self.solve(&rest, floor - g, Some(mark)).map(|mut s| {
            s.value += g;
            let at = s.selected.partition_point(|&u| u < v);
            s.selected.insert(at, v);
            s
        });
        self.undo(mark);
        let mut pruned = with.is_none();

        self.assign(v, 0);
        let rest: Vec<usize> = vars
            .iter()
            .copied()
            .filter(|&u| self.val[u] == FREE)
            .collect();
        let floor0 = with.as_ref().map_or(floor, |s| s.value.max(floor));
        let without = self.solve(&rest, floor0, Some(mark));
        self.undo(mark);
        pruned |= without.is_none();

        let best = match (with, without) {
            (Some(a), Some(b)) => {
                if b.value > a.value
                    || (b.value == a.value && prefer_selection(&b.selected, &a.selected))
                {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (a, b) => a.or(b),
        };
        match best {
            Some(s) if pruned && s.value < floor - tolerance(floor) => None,
            other => other,
        }
    }
}

/// Solves one component exactly, or returns a feasible completion of the
/// search state with `optimal = false` once the budget is spent.
pub fn solve_component(model: &IlpModel, opts: &SolveOptions) -> Solution {
    let start = Instant::now();
    let prepared = Prepared::new(model);
    let n = model.num_vars();
    // Recursion depth is bounded by the number of variables.
    let stack = (n * 4096).clamp(8 << 20, 1 << 30);
    let (selected, nodes, timed_out) = std::thread::scope(|scope| {
        std::thread::Builder::new()
            .stack_size(stack)
            .spawn_scoped(scope, || {
                let mut search = Search {
                    p: &prepared,
                    val: vec![FREE; n],
                    trail: Vec::with_capacity(n),
                    residual: vec![0.0; n],
                    seen: vec![0; n],
                    queued: vec![false; n],
                    epoch: 0,
                    parent: vec![0; n],
                    nodes: 0,
                    deadline: start + opts.time_budget,
                    timed_out: false,
                };
                let all = prepared.primary.clone();
                let start = search.heuristic(&all);
                let best = match search.solve(&all, start.value, None) {
                    Some(sub) if !search.timed_out || sub.value > start.value => sub,
                    _ => start,
                };
                (best.selected, search.nodes, search.timed_out)
            })
            .expect("spawn solver thread")
            .join()
            .expect("solver thread panicked")
    });
    let mut assignment = vec![false; n];
    for v in selected {
        assignment[v] = true;
    }
    for l in &prepared.links {
        assignment[l.aux] = assignment[l.a] && assignment[l.b];
    }
    Solution {
        objective_value: model.objective(&assignment),
        assignment,
        optimal: !timed_out,
        stats: SolveStats {
            nodes,
            components: 1,
            wall_time: start.elapsed(),
        },
    }
}
