//! Pointset CSV: `id,x,y,volume,role[,px,py]`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Node, Point, PointCloud, Role};
use crate::error::{Error, Result};

pub fn load_pointcloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut cloud = read_pointcloud(file)?;
    cloud.domain_tag = format!("file[{}]", path.display());
    Ok(cloud)
}

pub fn read_pointcloud<R: Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    let with_params = match names.as_slice() {
        ["id", "x", "y", "volume", "role"] => false,
        ["id", "x", "y", "volume", "role", "px", "py"] => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected header {:?}", names),
            })
        }
    };
    let expected = if with_params { 7 } else { 5 };

    let mut rows: Vec<Node> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| Error::Parse { line, message };
        if record.len() != expected {
            return Err(bad(format!("expected {expected} fields, found {}", record.len())));
        }
        let num = |k: usize| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .map_err(|e| bad(format!("field {} ({:?}): {e}", names[k], &record[k])))
        };
        let id = record[0]
            .parse::<usize>()
            .map_err(|e| bad(format!("id {:?}: {e}", &record[0])))?;
        let role = Role::parse(&record[4]).ok_or_else(|| bad(format!("unknown role {:?}", &record[4])))?;
        let param = if with_params {
            Some(Point::new(num(5)?, num(6)?))
        } else {
            None
        };
        rows.push(Node {
            id,
            position: Point::new(num(1)?, num(2)?),
            volume: num(3)?,
            role,
            param,
        });
    }

    let n = rows.len();
    let mut slots: Vec<Option<Node>> = vec![None; n];
    for node in rows {
        if node.id >= n {
            return Err(Error::Validation(format!(
                "id {} out of range for {n} nodes (ids must be 0..N-1)",
                node.id
            )));
        }
        let id = node.id;
        if slots[id].replace(node).is_some() {
            return Err(Error::Validation(format!("duplicate id {id}")));
        }
    }
    let nodes: Vec<Node> = slots.into_iter().map(|s| s.expect("dense ids")).collect();
    let mut cloud = PointCloud {
        nodes,
        dim: 2,
        h_avg: 0.0,
        domain_tag: "csv".into(),
        lattice: None,
    };
    cloud.validate()?;
    cloud.h_avg = cloud.spacing_from_volumes();
    Ok(cloud)
}

pub fn write_pointcloud<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    let with_params = cloud.has_params();
    if with_params {
        writeln!(out, "id,x,y,volume,role,px,py")?;
    } else {
        writeln!(out, "id,x,y,volume,role")?;
    }
    for n in &cloud.nodes {
        write!(
            out,
            "{},{:e},{:e},{:e},{}",
            n.id,
            n.position.x,
            n.position.y,
            n.volume,
            n.role.as_str()
        )?;
        if let (true, Some(p)) = (with_params, n.param) {
            write!(out, ",{:e},{:e}", p.x, p.y)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
