//! Seeded random game trees with integer leaf values, used as an exactness
//! corpus for the depth-bounded searches.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::*;

/// Shape of one generated tree. Node 0 is the root; the first player moves at
/// even depths.
#[derive(Debug)]
pub struct TreeShape {
    seed: u64,
    children: Vec<Vec<u32>>,
    /// Leaf score at leaves, heuristic hint at interior nodes.
    values: Vec<i32>,
    depths: Vec<u32>,
}

impl TreeShape {
    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn children(&self, node: usize) -> &[u32] {
        &self.children[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    pub fn value(&self, node: usize) -> i32 {
        self.values[node]
    }

    pub fn depth(&self, node: usize) -> u32 {
        self.depths[node]
    }

    pub fn height(&self) -> u32 {
        self.depths.iter().copied().max().unwrap_or(0)
    }
}

/// Parameters of the random tree generator.
#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_branching: usize,
    pub max_depth: u32,
    pub leaf_range: i32,
    /// Probability that a non-root interior node is cut short into a leaf.
    pub early_leaf: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_branching: 5,
            max_depth: 5,
            leaf_range: 100,
            early_leaf: 0.1,
        }
    }
}

/// Position in a [`TreeShape`]. Actions are child indices.
#[derive(Clone)]
pub struct RandomTree {
    shape: Arc<TreeShape>,
    node: u32,
    path: Vec<u32>,
}

impl RandomTree {
    pub fn generate(seed: u64, params: TreeParams) -> RandomTree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let height = rng.random_range(1..=params.max_depth.max(1));
        let mut shape = TreeShape {
            seed,
            children: vec![Vec::new()],
            values: vec![0],
            depths: vec![0],
        };
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            let depth = shape.depths[node];
            let leaf = depth == height || (depth > 0 && rng.random_bool(params.early_leaf));
            let r = params.leaf_range;
            shape.values[node] = rng.random_range(-r..=r);
            if leaf {
                continue;
            }
            let branching = rng.random_range(1..=params.max_branching.max(1));
            for _ in 0..branching {
                let child = shape.children.len();
                shape.children.push(Vec::new());
                shape.values.push(0);
                shape.depths.push(depth + 1);
                shape.children[node].push(child as u32);
                stack.push(child);
            }
        }
        RandomTree {
            shape: Arc::new(shape),
            node: 0,
            path: Vec::new(),
        }
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn node(&self) -> usize {
        self.node as usize
    }

    /// Leaf score at a leaf, heuristic hint elsewhere.
    pub fn node_value(&self) -> i32 {
        self.shape.values[self.node as usize]
    }
}

impl fmt::Debug for RandomTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tree(seed={}, node={})", self.shape.seed, self.node)
    }
}

impl Game for RandomTree {
    fn to_move(&self) -> Player {
        if self.shape.depths[self.node as usize] % 2 == 0 {
            Player::First
        } else {
            Player::Second
        }
    }

    fn legal_actions(&self) -> Vec<Action> {
        (0..self.shape.children[self.node as usize].len())
            .map(|i| Action(i as u16))
            .collect()
    }

    fn apply(&mut self, action: Action) -> Result<(), GameError> {
        let Some(&child) = self.shape.children[self.node as usize].get(action.0 as usize) else {
            return Err(illegal(self, action));
        };
        self.path.push(self.node);
        self.node = child;
        Ok(())
    }

    fn undo(&mut self) -> Result<(), GameError> {
        self.node = self.path.pop().ok_or(GameError::EmptyHistory)?;
        Ok(())
    }

    fn outcome(&self) -> Option<Outcome> {
        self.shape
            .is_leaf(self.node as usize)
            .then(|| Outcome::from_sign(i64::from(self.node_value())))
    }

    fn key(&self) -> u64 {
        mix64(self.shape.seed.rotate_left(32) ^ u64::from(self.node))
    }

    fn ply(&self) -> u32 {
        self.path.len() as u32
    }
}

/// A reproducible collection of random trees.
pub struct TreeCorpus {
    pub trees: Vec<RandomTree>,
}

impl TreeCorpus {
    pub fn generate(seed: u64, count: usize, params: TreeParams) -> TreeCorpus {
        TreeCorpus {
            trees: (0..count)
                .map(|i| RandomTree::generate(mix64(seed ^ i as u64), params))
                .collect(),
        }
    }

    /// The standard corpus: 200 trees, branching at most 5, depth at most 5,
    /// integer leaves in `[-100, 100]`.
    pub fn standard() -> TreeCorpus {
        TreeCorpus::generate(2024, 200, TreeParams::default())
    }
}
