use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{cell_tile, pad_corridor, LayoutError, Packing, Placement, RegionMask};
use crate::blif::{CellId, CellKind, MappedNetlist};
use crate::fabric::{FabricModel, ResourceInstance, Tile};

/// One tile of a route tree and the PIP it claims there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteNode {
    pub tile: Tile,
    pub pip: u32,
    pub parent: Option<u32>,
}

impl RouteNode {
    pub fn resource(&self) -> ResourceInstance {
        ResourceInstance::pip(self.tile.col, self.tile.row, self.pip)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkAttach {
    pub cell: CellId,
    pub pin: usize,
    /// Route node in the sink's tile.
    pub node: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutedNet {
    pub driver: CellId,
    /// Node 0 sits in the driver's tile; parents precede children.
    pub nodes: Vec<RouteNode>,
    pub sinks: Vec<SinkAttach>,
}

impl RoutedNet {
    /// Nodes on the tree path from the root to `node`, inclusive.
    pub fn path_to(&self, node: u32) -> impl Iterator<Item = u32> + '_ {
        std::iter::successors(Some(node), move |&n| self.nodes[n as usize].parent)
    }

    /// Per node: does the subtree below it (inclusive) contain the node?
    pub fn is_ancestor(&self, anc: u32, node: u32) -> bool {
        self.path_to(node).any(|n| n == anc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Routing {
    pub nets: Vec<RoutedNet>,
    /// Tiles outside the mask that routing was allowed to use.
    pub corridor: BTreeSet<Tile>,
}

impl Routing {
    pub fn pip_count(&self) -> usize {
        self.nets.iter().map(|n| n.nodes.len()).sum()
    }
}

/// Routes every non-constant net as a tree, largest fanout first. Each
/// extension is a breadth-first search from the tree to the nearest
/// unreached sink tile; every tile the tree touches claims its first free
/// PIP. With a mask, only masked tiles and the pad corridor are usable.
pub fn route(
    n: &MappedNetlist,
    packing: &Packing,
    placement: &Placement,
    dev: &FabricModel,
    mask: Option<&RegionMask>,
) -> Result<Routing, LayoutError> {
    let rows = dev.spec().rows;
    let cols = dev.total_columns();
    let idx = |t: Tile| (t.col * rows + t.row) as usize;
    let tile_at = |i: usize| Tile {
        col: i as u32 / rows,
        row: i as u32 % rows,
    };
    let count = (cols * rows) as usize;
    let budget = dev.pip_budget();

    let corridor = match mask {
        Some(m) => {
            let pads: Vec<Tile> = placement.pads.iter().map(|p| p.site.tile).collect();
            pad_corridor(dev, m, &pads)
        }
        None => BTreeSet::new(),
    };
    let allowed: Vec<bool> = (0..count)
        .map(|i| match mask {
            None => true,
            Some(m) => {
                let t = tile_at(i);
                m.contains_tile(dev, t) || corridor.contains(&t)
            }
        })
        .collect();

    let fanouts = n.fanouts();
    let mut order: Vec<usize> = (0..n.len())
        .filter(|&d| !fanouts[d].is_empty() && !matches!(n.cells[d].kind, CellKind::Const0 | CellKind::Const1))
        .collect();
    order.sort_by_key(|&d| (std::cmp::Reverse(fanouts[d].len()), d));

    let mut claimed = vec![0u32; count];
    let mut tree_node = vec![u32::MAX; count];
    let mut prev = vec![usize::MAX; count];
    let mut stamp = vec![0u32; count];
    let mut round = 0u32;
    let mut nets = Vec::with_capacity(order.len());

    for d in order {
        let driver = CellId(d);
        let unroutable = || LayoutError::Unroutable(n.cells[d].name.clone());
        let tile_of = |c: CellId| cell_tile(packing, placement, c).expect("placed cell");
        let root = tile_of(driver);
        if claimed[idx(root)] >= budget {
            return Err(unroutable());
        }
        let mut nodes = vec![RouteNode {
            tile: root,
            pip: claimed[idx(root)],
            parent: None,
        }];
        claimed[idx(root)] += 1;
        tree_node[idx(root)] = 0;

        let mut pending: BTreeSet<usize> = fanouts[d].iter().map(|&(s, _)| idx(tile_of(s))).collect();
        pending.remove(&idx(root));
        let mut queue = VecDeque::new();
        while !pending.is_empty() {
            round += 1;
            queue.clear();
            for nd in &nodes {
                let i = idx(nd.tile);
                stamp[i] = round;
                prev[i] = usize::MAX;
                queue.push_back(i);
            }
            let mut found = None;
            'bfs: while let Some(i) = queue.pop_front() {
                let t = tile_at(i);
                let neighbours = [
                    (t.col > 0).then(|| Tile { col: t.col - 1, row: t.row }),
                    (t.col + 1 < cols).then(|| Tile { col: t.col + 1, row: t.row }),
                    (t.row > 0).then(|| Tile { col: t.col, row: t.row - 1 }),
                    (t.row + 1 < rows).then(|| Tile { col: t.col, row: t.row + 1 }),
                ];
                for nb in neighbours.into_iter().flatten() {
                    let j = idx(nb);
                    if stamp[j] == round || !allowed[j] || claimed[j] >= budget {
                        continue;
                    }
                    stamp[j] = round;
                    prev[j] = i;
                    if pending.contains(&j) {
                        found = Some(j);
                        break 'bfs;
                    }
                    queue.push_back(j);
                }
            }
            let Some(end) = found else {
                return Err(unroutable());
            };
            let mut path = vec![end];
            let mut cur = end;
            while prev[cur] != usize::MAX {
                cur = prev[cur];
                path.push(cur);
            }
            // path ends at a tree tile
            let mut parent = tree_node[cur];
            for &i in path.iter().rev().skip(1) {
                let node = nodes.len() as u32;
                nodes.push(RouteNode {
                    tile: tile_at(i),
                    pip: claimed[i],
                    parent: Some(parent),
                });
                claimed[i] += 1;
                tree_node[i] = node;
                pending.remove(&i);
                parent = node;
            }
        }

        let sinks = fanouts[d]
            .iter()
            .map(|&(cell, pin)| SinkAttach {
                cell,
                pin,
                node: tree_node[idx(tile_of(cell))],
            })
            .collect();
        for nd in &nodes {
            tree_node[idx(nd.tile)] = u32::MAX;
        }
        nets.push(RoutedNet { driver, nodes, sinks });
    }
    Ok(Routing { nets, corridor })
}
