use std::io::Write;

use serde::Serialize;

use super::world::{LinkClass, NodeId, NodeKind, World};
use crate::error::Result;

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line<'a> {
    Node {
        tick: u64,
        id: NodeId,
        kind: NodeKind,
        position: &'a [f64; 3],
        queue: usize,
        capacity: usize,
    },
    Link {
        tick: u64,
        a: NodeId,
        b: NodeId,
        class: LinkClass,
        rate: f64,
        active: bool,
    },
}

impl World {
    /// Writes one JSON object per node and per link, newline separated.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        for n in &self.nodes {
            let line = Line::Node {
                tick: self.tick,
                id: n.id,
                kind: n.kind,
                position: &n.position,
                queue: n.queue.len(),
                capacity: n.queue_capacity,
            };
            serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        for l in self.links.values() {
            let line = Line::Link {
                tick: self.tick,
                a: l.endpoints.0,
                b: l.endpoints.1,
                class: l.class,
                rate: l.rate,
                active: l.active,
            };
            serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use crate::sim::config::SimConfig;
    use crate::sim::world::World;

    #[test]
    fn one_line_per_node_and_link() {
        let w = World::new(SimConfig::default(), 1).unwrap();
        let mut buf = Vec::new();
        w.write_snapshot(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), w.nodes.len() + w.links().count());
        for l in lines {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            assert!(v["type"] == "node" || v["type"] == "link");
        }
    }
}
