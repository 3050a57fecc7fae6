use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::topology::NodeId;

#[derive(Debug)]
struct Link {
    hop: NodeId,
    len: u32,
    rest: Option<Arc<Link>>,
}

/// An AS path, ordered from next hop to origin.
///
/// Paths are persistent cons lists: prepending a hop shares the tail, so an
/// advertisement costs one allocation no matter how many peers receive it.
/// Ordering is by length first, then element-wise, which is the decision
/// rule's (length, next hop, lexicographic path) key.
#[derive(Clone)]
pub struct AsPath(Arc<Link>);

impl AsPath {
    pub fn origin(node: NodeId) -> Self {
        Self(Arc::new(Link { hop: node, len: 1, rest: None }))
    }

    pub fn from_hops(hops: &[NodeId]) -> Option<Self> {
        let (&last, init) = hops.split_last()?;
        let mut path = Self::origin(last);
        for &hop in init.iter().rev() {
            path = path.prepend(hop);
        }
        Some(path)
    }

    pub fn prepend(&self, hop: NodeId) -> Self {
        Self(Arc::new(Link { hop, len: self.0.len + 1, rest: Some(self.0.clone()) }))
    }

    pub fn len(&self) -> usize {
        self.0.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn next_hop(&self) -> NodeId {
        self.0.hop
    }

    pub fn dest(&self) -> NodeId {
        self.iter().last().unwrap()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        let mut cur = Some(&*self.0);
        std::iter::from_fn(move || {
            let link = cur?;
            cur = link.rest.as_deref();
            Some(link.hop)
        })
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.iter().any(|h| h == node)
    }

    pub fn to_vec(&self) -> Vec<NodeId> {
        self.iter().collect()
    }

    pub fn is_loop_free(&self) -> bool {
        let hops = self.to_vec();
        let mut sorted = hops.clone();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.len() == hops.len()
    }
}

impl PartialEq for AsPath {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for AsPath {}

impl PartialOrd for AsPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AsPath {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.len.cmp(&other.0.len).then_with(|| self.iter().cmp(other.iter()))
    }
}

impl fmt::Debug for AsPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}
