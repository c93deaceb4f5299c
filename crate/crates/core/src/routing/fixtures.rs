use super::{EdgeSpec, Latency, NetworkSpec, NodeKey, OdSpec, RoutingNetwork};
use crate::{Error, Result};

/// Built-in networks: `(name, description)`.
pub const FIXTURES: [(&str, &str); 3] = [
    ("two_link", "two parallel links with l(w) = w, unit demand"),
    ("pigou", "Pigou network: l1(w) = w, l2(w) = 1, unit demand"),
    ("braess", "4-node Braess network with a nearly free bridge a->b, unit demand"),
];

fn edge(tail: &str, head: &str, poly: Latency) -> EdgeSpec {
    EdgeSpec {
        tail: tail.into(),
        head: head.into(),
        poly,
    }
}

fn build(nodes: &[&str], edges: Vec<EdgeSpec>, routes: Vec<Vec<usize>>) -> RoutingNetwork {
    let spec = NetworkSpec {
        nodes: nodes.iter().map(|n| NodeKey::from(*n)).collect(),
        edges,
        od: vec![OdSpec {
            o: "s".into(),
            d: "t".into(),
            demand: 1.0,
            routes,
        }],
    };
    RoutingNetwork::new(spec).expect("built-in fixture is valid")
}

pub fn two_link() -> RoutingNetwork {
    build(
        &["s", "t"],
        vec![edge("s", "t", Latency::affine(0.0, 1.0)), edge("s", "t", Latency::affine(0.0, 1.0))],
        vec![vec![0], vec![1]],
    )
}

pub fn pigou() -> RoutingNetwork {
    build(
        &["s", "t"],
        vec![edge("s", "t", Latency::affine(0.0, 1.0)), edge("s", "t", Latency::constant(1.0))],
        vec![vec![0], vec![1]],
    )
}

/// Edges `s→a (w)`, `a→t (1)`, `s→b (1)`, `b→t (w)`, `a→b (0.25 + 0.01 w)`;
/// routes `s-a-t`, `s-b-t`, `s-a-b-t`.
pub fn braess() -> RoutingNetwork {
    build(
        &["s", "a", "b", "t"],
        vec![
            edge("s", "a", Latency::affine(0.0, 1.0)),
            edge("a", "t", Latency::constant(1.0)),
            edge("s", "b", Latency::constant(1.0)),
            edge("b", "t", Latency::affine(0.0, 1.0)),
            edge("a", "b", Latency::affine(0.25, 0.01)),
        ],
        vec![vec![0, 1], vec![2, 3], vec![0, 4, 3]],
    )
}

pub fn fixture(name: &str) -> Result<RoutingNetwork> {
    match name {
        "two_link" => Ok(two_link()),
        "pigou" => Ok(pigou()),
        "braess" => Ok(braess()),
        other => Err(Error::invalid_spec(format!(
            "unknown fixture {other:?}; available: two_link, pigou, braess"
        ))),
    }
}
