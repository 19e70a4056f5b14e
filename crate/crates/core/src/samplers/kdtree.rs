//! Incremental kd-tree over normalized points with strict radius counting.

#[derive(Debug, Clone)]
struct Node {
    point: Vec<f64>,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(dim: usize) -> Self {
        Self { dim, nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn insert(&mut self, point: Vec<f64>) {
        assert_eq!(point.len(), self.dim, "kd-tree point has wrong dimension");
        let id = self.nodes.len();
        if id == 0 {
            self.nodes.push(Node {
                point,
                axis: 0,
                left: None,
                right: None,
            });
            return;
        }
        let mut at = 0;
        loop {
            let node = &self.nodes[at];
            let go_left = point[node.axis] < node.point[node.axis];
            let child = if go_left { node.left } else { node.right };
            match child {
                Some(c) => at = c,
                None => {
                    let axis = (node.axis + 1) % self.dim.max(1);
                    if go_left {
                        self.nodes[at].left = Some(id);
                    } else {
                        self.nodes[at].right = Some(id);
                    }
                    self.nodes.push(Node {
                        point,
                        axis,
                        left: None,
                        right: None,
                    });
                    return;
                }
            }
        }
    }

    /// Number of stored points at Euclidean distance strictly less than `radius`.
    pub fn count_within(&self, query: &[f64], radius: f64) -> usize {
        if self.nodes.is_empty() || radius.is_nan() || radius <= 0.0 {
            return 0;
        }
        let r2 = radius * radius;
        let mut count = 0;
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            let node = &self.nodes[at];
            let d2: f64 = node.point.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum();
            if d2 < r2 {
                count += 1;
            }
            let diff = query[node.axis] - node.point[node.axis];
            // left holds keys < split, right holds keys >= split
            if let Some(l) = node.left {
                if diff < radius {
                    stack.push(l);
                }
            }
            if let Some(r) = node.right {
                if diff > -radius {
                    stack.push(r);
                }
            }
        }
        count
    }
}
