//! R-tree over envelopes: least-enlargement insertion with quadratic split,
//! condense-tree deletion, and sort-tile-recursive bulk loading.

use crate::geometry::Envelope;

pub const MAX_ENTRIES: usize = 16;
pub const MIN_ENTRIES: usize = 6;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf(Vec<(Envelope, T)>),
    Internal(Vec<(Envelope, Box<Node<T>>)>),
}

impl<T> Node<T> {
    fn len(&self) -> usize {
        match self {
            Node::Leaf(e) => e.len(),
            Node::Internal(e) => e.len(),
        }
    }

    fn envelope(&self) -> Option<Envelope> {
        match self {
            Node::Leaf(e) => e.iter().map(|(env, _)| *env).reduce(|a, b| a.union(&b)),
            Node::Internal(e) => e.iter().map(|(env, _)| *env).reduce(|a, b| a.union(&b)),
        }
    }

    fn drain_into(self, out: &mut Vec<(Envelope, T)>) {
        match self {
            Node::Leaf(e) => out.extend(e),
            Node::Internal(e) => e.into_iter().for_each(|(_, child)| child.drain_into(out)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RTree<T> {
    root: Node<T>,
    len: usize,
}

impl<T> Default for RTree<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn enlargement(base: &Envelope, add: &Envelope) -> f64 {
    base.union(add).area() - base.area()
}

impl<T> RTree<T> {
    pub fn new() -> Self {
        RTree { root: Node::Leaf(Vec::new()), len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of levels; an empty tree or a lone leaf has height 1.
    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut node = &self.root;
        while let Node::Internal(children) = node {
            h += 1;
            node = &children[0].1;
        }
        h
    }

    /// Sort-tile-recursive packing. Groups are sized evenly so every node
    /// lands between the minimum and maximum fill.
    pub fn bulk_load(items: Vec<(Envelope, T)>) -> Self {
        let len = items.len();
        if len <= MAX_ENTRIES {
            return RTree { root: Node::Leaf(items), len };
        }
        let mut level: Vec<(Envelope, Node<T>)> =
            str_pack(items).into_iter().map(|g| (union_all(&g), Node::Leaf(g))).collect();
        while level.len() > MAX_ENTRIES {
            level = str_pack(level)
                .into_iter()
                .map(|g| {
                    let env = union_all(&g);
                    (env, Node::Internal(g.into_iter().map(|(e, n)| (e, Box::new(n))).collect()))
                })
                .collect();
        }
        let root = Node::Internal(level.into_iter().map(|(e, n)| (e, Box::new(n))).collect());
        RTree { root, len }
    }

    pub fn insert(&mut self, env: Envelope, item: T) {
        self.len += 1;
        if let Some(split) = insert_rec(&mut self.root, env, item) {
            let old = std::mem::replace(&mut self.root, Node::Leaf(Vec::new()));
            let old_env = old.envelope().expect("split node is non-empty");
            self.root = Node::Internal(vec![(old_env, Box::new(old)), split]);
        }
    }

    /// Removes one entry equal to `item` whose envelope is `env`.
    pub fn remove(&mut self, env: &Envelope, item: &T) -> bool
    where
        T: PartialEq,
    {
        let mut orphans = Vec::new();
        if !remove_rec(&mut self.root, env, item, &mut orphans) {
            return false;
        }
        self.len -= 1;
        loop {
            match &mut self.root {
                Node::Internal(children) if children.len() == 1 => {
                    let (_, child) = children.pop().unwrap();
                    self.root = *child;
                }
                Node::Internal(children) if children.is_empty() => self.root = Node::Leaf(Vec::new()),
                _ => break,
            }
        }
        for (e, t) in orphans {
            self.len -= 1;
            self.insert(e, t);
        }
        true
    }

    /// Entries whose envelope intersects `query` (closed boundaries).
    pub fn query(&self, query: &Envelope) -> Vec<&T> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf(entries) => {
                    out.extend(entries.iter().filter(|(e, _)| e.intersects(query)).map(|(_, t)| t))
                }
                Node::Internal(children) => {
                    stack.extend(children.iter().filter(|(e, _)| e.intersects(query)).map(|(_, c)| c.as_ref()))
                }
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Envelope, &T)> {
        let mut stack = vec![&self.root];
        let mut leaves: Vec<&Vec<(Envelope, T)>> = Vec::new();
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf(entries) => leaves.push(entries),
                Node::Internal(children) => stack.extend(children.iter().map(|(_, c)| c.as_ref())),
            }
        }
        leaves.into_iter().flatten().map(|(e, t)| (e, t))
    }

    /// Walks the whole tree checking fill bounds, envelope containment,
    /// uniform leaf depth and the entry count.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut leaf_depth = None;
        let count = check_node(&self.root, 0, true, &mut leaf_depth)?;
        if count != self.len {
            return Err(format!("tree holds {count} entries but len is {}", self.len));
        }
        Ok(())
    }
}

fn check_node<T>(node: &Node<T>, depth: usize, is_root: bool, leaf_depth: &mut Option<usize>) -> Result<usize, String> {
    let n = node.len();
    if n > MAX_ENTRIES || (!is_root && n < MIN_ENTRIES) {
        return Err(format!("node at depth {depth} has {n} entries"));
    }
    match node {
        Node::Leaf(entries) => {
            match *leaf_depth {
                None => *leaf_depth = Some(depth),
                Some(d) if d != depth => return Err(format!("leaves at depths {d} and {depth}")),
                _ => {}
            }
            Ok(entries.len())
        }
        Node::Internal(children) => {
            if is_root && n < 2 {
                return Err("internal root with a single child".into());
            }
            let mut total = 0;
            for (env, child) in children {
                let actual = child.envelope().ok_or("empty child node")?;
                if !env.contains(&actual) {
                    return Err(format!("entry envelope {env:?} does not contain child {actual:?}"));
                }
                total += check_node(child, depth + 1, false, leaf_depth)?;
            }
            Ok(total)
        }
    }
}

fn union_all<N>(entries: &[(Envelope, N)]) -> Envelope {
    entries.iter().map(|(e, _)| *e).reduce(|a, b| a.union(&b)).expect("non-empty group")
}

/// Splits items into `groups` runs whose sizes differ by at most one.
fn even_groups<X>(items: Vec<X>, groups: usize) -> Vec<Vec<X>> {
    let n = items.len();
    let mut out = Vec::with_capacity(groups);
    let mut iter = items.into_iter();
    for g in 0..groups {
        let size = n / groups + usize::from(g < n % groups);
        out.push(iter.by_ref().take(size).collect());
    }
    out
}

fn str_pack<N>(mut items: Vec<(Envelope, N)>) -> Vec<Vec<(Envelope, N)>> {
    let n = items.len();
    let pages = n.div_ceil(MAX_ENTRIES);
    let slices = (pages as f64).sqrt().ceil() as usize;
    items.sort_by(|a, b| a.0.center().x.total_cmp(&b.0.center().x));
    let mut out = Vec::with_capacity(pages);
    for mut slice in even_groups(items, slices) {
        slice.sort_by(|a, b| a.0.center().y.total_cmp(&b.0.center().y));
        let groups = slice.len().div_ceil(MAX_ENTRIES);
        out.extend(even_groups(slice, groups));
    }
    out
}

fn choose_subtree<T>(children: &[(Envelope, Box<Node<T>>)], env: &Envelope) -> usize {
    let mut best = 0;
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for (i, (e, _)) in children.iter().enumerate() {
        let key = (enlargement(e, env), e.area());
        if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best = i;
            best_key = key;
        }
    }
    best
}

type Split<T> = (Envelope, Box<Node<T>>);

fn insert_rec<T>(node: &mut Node<T>, env: Envelope, item: T) -> Option<Split<T>> {
    match node {
        Node::Leaf(entries) => {
            entries.push((env, item));
            if entries.len() > MAX_ENTRIES {
                let (keep, moved) = quadratic_split(std::mem::take(entries));
                *entries = keep;
                let moved_env = union_all(&moved);
                return Some((moved_env, Box::new(Node::Leaf(moved))));
            }
            None
        }
        Node::Internal(children) => {
            let i = choose_subtree(children, &env);
            let split = insert_rec(&mut children[i].1, env, item);
            children[i].0 = children[i].0.union(&env);
            if let Some((senv, snode)) = split {
                children[i].0 = children[i].1.envelope().expect("non-empty child");
                children.push((senv, snode));
                if children.len() > MAX_ENTRIES {
                    let (keep, moved) = quadratic_split(std::mem::take(children));
                    *children = keep;
                    let moved_env = union_all(&moved);
                    return Some((moved_env, Box::new(Node::Internal(moved))));
                }
            }
            None
        }
    }
}

fn quadratic_split<N>(mut entries: Vec<(Envelope, N)>) -> (Vec<(Envelope, N)>, Vec<(Envelope, N)>) {
    // seeds: the pair wasting the most area when grouped together
    let (mut s1, mut s2, mut worst) = (0, 1, f64::NEG_INFINITY);
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let (a, b) = (&entries[i].0, &entries[j].0);
            let waste = a.union(b).area() - a.area() - b.area();
            if waste > worst {
                (s1, s2, worst) = (i, j, waste);
            }
        }
    }
    let second = entries.swap_remove(s2);
    let first = entries.swap_remove(s1);
    let (mut env1, mut env2) = (first.0, second.0);
    let (mut g1, mut g2) = (vec![first], vec![second]);

    while !entries.is_empty() {
        let remaining = entries.len();
        if g1.len() + remaining == MIN_ENTRIES {
            g1.append(&mut entries);
            break;
        }
        if g2.len() + remaining == MIN_ENTRIES {
            g2.append(&mut entries);
            break;
        }
        let (mut pick, mut best_diff) = (0, f64::NEG_INFINITY);
        for (i, (e, _)) in entries.iter().enumerate() {
            let diff = (enlargement(&env1, e) - enlargement(&env2, e)).abs();
            if diff > best_diff {
                (pick, best_diff) = (i, diff);
            }
        }
        let entry = entries.swap_remove(pick);
        let (d1, d2) = (enlargement(&env1, &entry.0), enlargement(&env2, &entry.0));
        let to_first = if d1 != d2 {
            d1 < d2
        } else if env1.area() != env2.area() {
            env1.area() < env2.area()
        } else {
            g1.len() <= g2.len()
        };
        if to_first {
            env1 = env1.union(&entry.0);
            g1.push(entry);
        } else {
            env2 = env2.union(&entry.0);
            g2.push(entry);
        }
    }
    (g1, g2)
}

/// Returns whether the entry was found; underfull nodes on the way back up are
/// dissolved into `orphans` for reinsertion.
fn remove_rec<T: PartialEq>(
    node: &mut Node<T>,
    env: &Envelope,
    item: &T,
    orphans: &mut Vec<(Envelope, T)>,
) -> bool {
    match node {
        Node::Leaf(entries) => match entries.iter().position(|(e, t)| e == env && t == item) {
            Some(i) => {
                entries.swap_remove(i);
                true
            }
            None => false,
        },
        Node::Internal(children) => {
            for i in 0..children.len() {
                if !children[i].0.contains(env) {
                    continue;
                }
                if remove_rec(&mut children[i].1, env, item, orphans) {
                    if children[i].1.len() < MIN_ENTRIES {
                        let (_, child) = children.swap_remove(i);
                        child.drain_into(orphans);
                    } else {
                        children[i].0 = children[i].1.envelope().expect("non-empty child");
                    }
                    return true;
                }
            }
            false
        }
    }
}
