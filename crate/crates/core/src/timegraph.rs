//! Time-expanded DAG over (airport, step) nodes for one horizon window,
//! plus the sparse selector matrices the assignment MILP is built from.
//!
//! Edge ordering contract (fixes all matrix layouts and makes solution
//! vectors decodable): ground edges first (airport-major, then time), then
//! flight edges (flight order, then delay), then virtual-final edges
//! (airport order).

use std::fmt::Write as _;

use crate::scenario::{ControllerParams, FlightSpec};

/// Node handle: `0..airports*(n_steps+1)` are airport-time nodes
/// (airport-major), the last index is the terminal node.
pub type NodeId = usize;
/// Index into [`TimeExpandedGraph::edges`].
pub type EdgeId = usize;

/// A vertex of the time-expanded graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// Airport `airport` (index into the graph's airport list) at absolute
    /// step `step`.
    AirportTime { airport: usize, step: usize },
    /// Terminal node all paths end in.
    Terminal,
}

/// Edge kind, carrying enough structure to decode paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeKind {
    /// Stay parked at `airport` from `step` to `step + 1` (offsets relative
    /// to the horizon anchor).
    Ground { airport: usize, offset: usize },
    /// Delay copy `delay` of in-horizon flight `flight` (index into
    /// [`TimeExpandedGraph::flights`]), departing at absolute step
    /// `departure`.
    Flight { flight: usize, delay: usize, departure: usize },
    /// Last-step airport node to terminal.
    VirtualFinal { airport: usize },
}

/// A directed edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub tail: NodeId,
    pub head: NodeId,
    pub kind: EdgeKind,
    /// Flight edges whose virtual chain this ground edge belongs to.
    pub chain_of: Vec<EdgeId>,
}

/// Time-expanded graph for one horizon window anchored at `t_anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeExpandedGraph {
    /// Airport ids in scenario order; node/edge indices refer to positions
    /// in this list.
    pub airports: Vec<String>,
    /// Measurement step the horizon is anchored at (t at offset 0).
    pub t_anchor: usize,
    /// Horizon length N; the graph spans steps `t_anchor ..= t_anchor + N`.
    pub n_steps: usize,
    /// Edges in the contract order.
    pub edges: Vec<Edge>,
    /// Flights with at least the scheduled departure inside the window, in
    /// input order; rows of the flight selector matrices.
    pub flights: Vec<FlightSpec>,
    /// Per flight, the ids of its delay-copy edges (ascending delay).
    pub flight_edges: Vec<Vec<EdgeId>>,
    /// Per flight edge id, the ground-edge ids of its virtual chain.
    pub chains: Vec<(EdgeId, Vec<EdgeId>)>,
}

/// Sparse matrix in triplet form; no duplicate (row, col) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, triplets: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.triplets.push((row, col, value));
    }

    /// Dense copy, for tests and small cross-checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.cols]; self.rows];
        for &(r, c, v) in &self.triplets {
            m[r][c] += v;
        }
        m
    }

    /// y = self * x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
        y
    }
}

impl TimeExpandedGraph {
    pub fn num_airports(&self) -> usize {
        self.airports.len()
    }

    /// Number of nodes including the terminal.
    pub fn num_nodes(&self) -> usize {
        self.num_airports() * (self.n_steps + 1) + 1
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_ground_edges(&self) -> usize {
        self.num_airports() * self.n_steps
    }

    pub fn terminal_node(&self) -> NodeId {
        self.num_nodes() - 1
    }

    /// Node id of `airport` at offset `off` (0 ..= n_steps) from the anchor.
    pub fn node_at(&self, airport: usize, off: usize) -> NodeId {
        debug_assert!(off <= self.n_steps);
        airport * (self.n_steps + 1) + off
    }

    pub fn node(&self, id: NodeId) -> Node {
        if id == self.terminal_node() {
            Node::Terminal
        } else {
            let airport = id / (self.n_steps + 1);
            let off = id % (self.n_steps + 1);
            Node::AirportTime { airport, step: self.t_anchor + off }
        }
    }

    /// Ground edge id for `airport` spanning offsets `[off, off + 1]`.
    pub fn ground_edge(&self, airport: usize, off: usize) -> EdgeId {
        debug_assert!(off < self.n_steps);
        airport * self.n_steps + off
    }

    /// Builds the incidence matrix: |V| x |A|, column of edge (i, j) holds
    /// -1 at row i and +1 at row j, so every column sums to zero.
    pub fn incidence_matrix(&self) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.num_nodes(), self.num_edges());
        for (e, edge) in self.edges.iter().enumerate() {
            m.push(edge.tail, e, -1.0);
            m.push(edge.head, e, 1.0);
        }
        m
    }

    /// |A| x |A| virtual-chain membership: entry (a, b) = 1 iff ground edge
    /// `a` belongs to the chain of flight edge `b`.
    pub fn virtual_edge_matrix(&self) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.num_edges(), self.num_edges());
        for (fe, chain) in &self.chains {
            for g in chain {
                m.push(*g, *fe, 1.0);
            }
        }
        m
    }

    /// |A^g| x |A| ground-edge extractor scaled by `big_m`.
    pub fn ground_selector(&self, big_m: f64) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.num_ground_edges(), self.num_edges());
        for g in 0..self.num_ground_edges() {
            m.push(g, g, big_m);
        }
        m
    }

    /// (#in-horizon flights) x |A| selector with 1 on each flight's copies.
    pub fn flight_selector(&self) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.flights.len(), self.num_edges());
        for (f, edges) in self.flight_edges.iter().enumerate() {
            for e in edges {
                m.push(f, *e, 1.0);
            }
        }
        m
    }

    /// Same support as the flight selector but with the estimated flight
    /// energy as the value.
    pub fn flight_energy_matrix(&self) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.flights.len(), self.num_edges());
        for (f, edges) in self.flight_edges.iter().enumerate() {
            for e in edges {
                m.push(f, *e, self.flights[f].est_energy);
            }
        }
        m
    }

    /// N x (|H|*N) operator summing per-ground-edge charge powers over
    /// airports and over all steps up to each step: one lower-triangular
    /// block of ones per airport, airport-major column order.
    ///
    /// (The source material uses the same symbol for the graph and for this
    /// Kronecker-product operator; it is named by what it does here.)
    pub fn cumulative_charge_operator(&self) -> SparseMatrix {
        let n = self.n_steps;
        let mut m = SparseMatrix::new(n, self.num_airports() * n);
        for a in 0..self.num_airports() {
            for col in 0..n {
                for row in col..n {
                    m.push(row, a * n + col, 1.0);
                }
            }
        }
        m
    }

    /// DOT-format rendering of the graph for debugging.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph timegraph {\n  rankdir=LR;\n");
        for id in 0..self.num_nodes() {
            match self.node(id) {
                Node::AirportTime { airport, step } => {
                    let _ = writeln!(out, "  n{id} [label=\"{}@{step}\"];", self.airports[airport]);
                }
                Node::Terminal => {
                    let _ = writeln!(out, "  n{id} [label=\"z\", shape=doublecircle];");
                }
            }
        }
        for edge in &self.edges {
            let style = match &edge.kind {
                EdgeKind::Ground { .. } if edge.chain_of.is_empty() => String::new(),
                EdgeKind::Ground { .. } => " [color=red]".into(),
                EdgeKind::Flight { flight, delay, .. } => {
                    format!(" [label=\"{}+{delay}\", color=blue]", self.flights[*flight].id)
                }
                EdgeKind::VirtualFinal { .. } => " [style=dashed]".into(),
            };
            let _ = writeln!(out, "  n{} -> n{}{};", edge.tail, edge.head, style);
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the time-expanded graph for the horizon `[t_now, t_now + N]`.
///
/// `flights` should be pre-filtered to those that may still depart in the
/// window; delay copies are clipped edge-by-edge to the window, and a
/// flight's virtual chain is truncated at the horizon boundary.
pub fn build_graph(
    t_now: usize,
    airports: &[String],
    params: &ControllerParams,
    flights: &[FlightSpec],
) -> TimeExpandedGraph {
    let n = params.horizon_steps;
    let mut g = TimeExpandedGraph {
        airports: airports.to_vec(),
        t_anchor: t_now,
        n_steps: n,
        edges: Vec::new(),
        flights: Vec::new(),
        flight_edges: Vec::new(),
        chains: Vec::new(),
    };
    let airport_index =
        |id: &str| airports.iter().position(|a| a == id).expect("airport id must resolve");

    // ground edges, airport-major then time
    for a in 0..airports.len() {
        for off in 0..n {
            g.edges.push(Edge {
                tail: g.node_at(a, off),
                head: g.node_at(a, off + 1),
                kind: EdgeKind::Ground { airport: a, offset: off },
                chain_of: Vec::new(),
            });
        }
    }

    // flight edges: flight order, then delay; copies outside the window are
    // dropped individually
    let last = t_now + n;
    for flight in flights {
        let mut copies = Vec::new();
        for delay in 0..=params.max_delay_steps {
            let dep = flight.sched_departure + delay;
            if dep < t_now || dep >= last {
                continue;
            }
            let o = airport_index(&flight.origin);
            let d = airport_index(&flight.destination);
            let id = g.edges.len() + copies.len();
            copies.push((
                id,
                Edge {
                    tail: g.node_at(o, dep - t_now),
                    head: g.node_at(d, dep + 1 - t_now),
                    kind: EdgeKind::Flight {
                        flight: g.flights.len(),
                        delay,
                        departure: dep,
                    },
                    chain_of: Vec::new(),
                },
            ));
        }
        if copies.is_empty() {
            continue;
        }
        g.flight_edges.push(copies.iter().map(|(id, _)| *id).collect());
        g.edges.extend(copies.into_iter().map(|(_, e)| e));
        g.flights.push(flight.clone());
    }

    // virtual-final edges, airport order
    for a in 0..airports.len() {
        g.edges.push(Edge {
            tail: g.node_at(a, n),
            head: g.terminal_node(),
            kind: EdgeKind::VirtualFinal { airport: a },
            chain_of: Vec::new(),
        });
    }

    // virtual chains: ground edges at the destination for the remaining
    // flight time, truncated at the horizon boundary
    for f in 0..g.flights.len() {
        let flight = g.flights[f].clone();
        let d = airport_index(&flight.destination);
        for &fe in &g.flight_edges[f] {
            let EdgeKind::Flight { departure, .. } = g.edges[fe].kind else { unreachable!() };
            let arrival_off = departure + 1 - t_now;
            let mut chain = Vec::new();
            for tau in 1..flight.est_flight_time {
                let off = arrival_off + tau - 1;
                if off >= n {
                    break;
                }
                let ge = g.ground_edge(d, off);
                chain.push(ge);
                g.edges[ge].chain_of.push(fe);
            }
            g.chains.push((fe, chain));
        }
    }

    g
}
