use super::IlpModel;

/// A sub-program over a connected set of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Global ids, ascending; local id `i` is `vars[i]`.
    pub vars: Vec<usize>,
    pub model: IlpModel,
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Splits the program into the connected components of its constraint
/// hypergraph, ordered by smallest member id. Unconstrained variables become
/// singleton components.
pub fn decompose(model: &IlpModel) -> Vec<Component> {
    let n = model.num_vars();
    let mut sets = DisjointSets((0..n).collect());
    for [a, b] in model.pairwise() {
        sets.union(*a, *b);
    }
    for g in model.groups() {
        for w in g.windows(2) {
            sets.union(w[0], w[1]);
        }
    }
    for l in model.links() {
        sets.union(l.aux, l.a);
        sets.union(l.aux, l.b);
    }

    let mut comp_of_root = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut local = vec![0usize; n];
    for (v, slot) in local.iter_mut().enumerate() {
        let r = sets.find(v);
        if comp_of_root[r] == usize::MAX {
            comp_of_root[r] = members.len();
            members.push(Vec::new());
        }
        let c = comp_of_root[r];
        *slot = members[c].len();
        members[c].push(v);
    }

    let mut models: Vec<IlpModel> = members
        .iter()
        .map(|vs| {
            let mut m = IlpModel::new();
            for &v in vs {
                let var = &model.vars()[v];
                m.add_var(var.name.clone(), var.coeff);
            }
            m
        })
        .collect();
    let comp = |sets: &mut DisjointSets, v: usize| comp_of_root[sets.find(v)];

    // Links first so that their aux variables are known before other rows.
    for l in model.links() {
        let c = comp(&mut sets, l.aux);
        models[c]
            .add_link(local[l.aux], local[l.a], local[l.b])
            .expect("link copied from a valid model");
    }
    for [a, b] in model.pairwise() {
        let c = comp(&mut sets, *a);
        models[c]
            .add_pairwise(local[*a], local[*b])
            .expect("row copied from a valid model");
    }
    for g in model.groups() {
        let c = comp(&mut sets, g[0]);
        models[c]
            .add_group(g.iter().map(|&v| local[v]).collect())
            .expect("row copied from a valid model");
    }

    members
        .into_iter()
        .zip(models)
        .map(|(vars, model)| Component { vars, model })
        .collect()
}
