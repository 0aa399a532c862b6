//! Plain-text file formats: instances, tours, gadget scripts, run traces and
//! TSPLIB.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::engine::RunTrace;
use crate::error::{Error, Result};
use crate::gadgets::{BlockState, Checkpoint, GadgetScript};
use crate::geometry::{Instance, Metric, Point, Tour, TwoChange};

pub const INSTANCE_HEADER: &str = "# twoopt-lab instance v1";
pub const TOUR_HEADER: &str = "# twoopt-lab tour v1";
pub const SCRIPT_HEADER: &str = "# twoopt-lab script v1";
pub const TRACE_HEADER: &str = "# twoopt-lab trace v1";

/// An instance together with the free-form `KEY value` lines of its header.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceFile {
    pub instance: Instance,
    pub meta: BTreeMap<String, String>,
}

/// Numbered, trimmed lines without blanks and `#` comments.
fn content_lines<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines().enumerate().filter_map(|(k, line)| match line {
        Err(e) => Some(Err(Error::Io(e))),
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((k + 1, t.to_string())))
        }
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot read {what} from '{s}'")))
}

fn split_key(s: &str) -> (&str, &str) {
    match s.split_once(char::is_whitespace) {
        Some((k, v)) => (k, v.trim()),
        None => (s, ""),
    }
}

pub fn write_instance<W: Write>(mut w: W, inst: &Instance, meta: &BTreeMap<String, String>) -> Result<()> {
    writeln!(w, "{INSTANCE_HEADER}")?;
    writeln!(w, "NAME {}", inst.name())?;
    writeln!(w, "N {}", inst.n())?;
    writeln!(w, "D {}", inst.dim())?;
    writeln!(w, "METRIC {}", inst.metric())?;
    for (k, v) in meta {
        writeln!(w, "{} {}", k.to_ascii_uppercase(), v)?;
    }
    writeln!(w, "POINTS")?;
    for p in inst.points() {
        let row: Vec<String> = p.coords().iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    writeln!(w, "END")?;
    Ok(())
}

pub fn read_instance<R: BufRead>(r: R) -> Result<InstanceFile> {
    let mut lines = content_lines(r);
    let mut name = String::from("instance");
    let (mut n, mut dim, mut metric) = (None, None, Metric::EUCLIDEAN);
    let mut meta = BTreeMap::new();
    let mut last_line = 0;
    loop {
        let Some(item) = lines.next() else {
            return Err(Error::parse(last_line, "missing POINTS section"));
        };
        let (no, text) = item?;
        last_line = no;
        let (key, value) = split_key(&text);
        match key.to_ascii_uppercase().as_str() {
            "NAME" => name = value.to_string(),
            "N" => n = Some(parse_num::<usize>(no, value, "point count")?),
            "D" => dim = Some(parse_num::<usize>(no, value, "dimension")?),
            "METRIC" => {
                metric = value
                    .parse()
                    .map_err(|e: Error| Error::parse(no, e.to_string()))?
            }
            "POINTS" => break,
            other => {
                meta.insert(other.to_ascii_lowercase(), value.to_string());
            }
        }
    }
    let n = n.ok_or_else(|| Error::parse(last_line, "header lacks N"))?;
    let mut points = Vec::with_capacity(n);
    for item in lines {
        let (no, text) = item?;
        if text.eq_ignore_ascii_case("END") {
            break;
        }
        let coords = text
            .split_whitespace()
            .map(|s| parse_num::<f64>(no, s, "coordinate"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(d) = dim {
            if coords.len() != d {
                return Err(Error::parse(no, format!("expected {d} coordinates, found {}", coords.len())));
            }
        }
        let p = Point::new(coords).map_err(|e| Error::parse(no, e.to_string()))?;
        points.push(p);
        last_line = no;
    }
    if points.len() != n {
        return Err(Error::parse(
            last_line,
            format!("header announces {n} points, found {}", points.len()),
        ));
    }
    Ok(InstanceFile {
        instance: Instance::new(name, metric, points)?,
        meta,
    })
}

pub fn write_tour<W: Write>(mut w: W, tour: &Tour) -> Result<()> {
    writeln!(w, "{TOUR_HEADER}")?;
    writeln!(w, "N {}", tour.len())?;
    for v in tour.order() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_tour<R: BufRead>(r: R) -> Result<Tour> {
    let mut n = None;
    let mut order = Vec::new();
    let mut last_line = 0;
    for item in content_lines(r) {
        let (no, text) = item?;
        last_line = no;
        let (key, value) = split_key(&text);
        if key.eq_ignore_ascii_case("N") {
            n = Some(parse_num::<usize>(no, value, "tour size")?);
            continue;
        }
        for s in text.split_whitespace() {
            order.push(parse_num::<usize>(no, s, "vertex")?);
        }
    }
    if let Some(n) = n {
        if n != order.len() {
            return Err(Error::parse(
                last_line,
                format!("header announces {n} vertices, found {}", order.len()),
            ));
        }
    }
    Tour::new(order).map_err(|e| Error::parse(last_line, e.to_string()))
}

fn state_char(s: BlockState) -> char {
    match s {
        BlockState::Short => 'S',
        BlockState::Long => 'L',
    }
}

pub fn write_script<W: Write>(mut w: W, script: &GadgetScript) -> Result<()> {
    writeln!(w, "{SCRIPT_HEADER}")?;
    writeln!(w, "EXPECTED {}", script.expected_count)?;
    writeln!(w, "MOVES {}", script.moves.len())?;
    for m in &script.moves {
        writeln!(w, "M {} {} {} {}", m.u1, m.u2, m.v1, m.v2)?;
    }
    for c in &script.checkpoints {
        let states: String = c.states.iter().map(|s| state_char(*s)).collect();
        writeln!(w, "C {} {}", c.after_step, states)?;
    }
    Ok(())
}

pub fn read_script<R: BufRead>(r: R) -> Result<GadgetScript> {
    let mut expected = None;
    let mut announced = None;
    let mut moves = Vec::new();
    let mut checkpoints = Vec::new();
    let mut last_line = 0;
    for item in content_lines(r) {
        let (no, text) = item?;
        last_line = no;
        let fields: Vec<&str> = text.split_whitespace().collect();
        match fields[0].to_ascii_uppercase().as_str() {
            "EXPECTED" if fields.len() == 2 => {
                expected = Some(parse_num::<u64>(no, fields[1], "expected count")?)
            }
            "MOVES" if fields.len() == 2 => {
                announced = Some(parse_num::<usize>(no, fields[1], "move count")?)
            }
            "M" if fields.len() == 5 => {
                let v = fields[1..]
                    .iter()
                    .map(|s| parse_num::<usize>(no, s, "vertex"))
                    .collect::<Result<Vec<_>>>()?;
                moves.push(TwoChange::new(v[0], v[1], v[2], v[3]));
            }
            "C" if fields.len() == 3 => {
                let states = fields[2]
                    .chars()
                    .map(|c| match c {
                        'S' => Ok(BlockState::Short),
                        'L' => Ok(BlockState::Long),
                        _ => Err(Error::parse(no, format!("unknown block state '{c}'"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                checkpoints.push(Checkpoint {
                    after_step: parse_num(no, fields[1], "step")?,
                    states,
                });
            }
            _ => return Err(Error::parse(no, format!("unrecognized script line '{text}'"))),
        }
    }
    if let Some(m) = announced {
        if m != moves.len() {
            return Err(Error::parse(
                last_line,
                format!("header announces {m} moves, found {}", moves.len()),
            ));
        }
    }
    let expected_count = expected.unwrap_or(moves.len() as u64);
    Ok(GadgetScript {
        moves,
        expected_count,
        checkpoints,
    })
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &RunTrace) -> Result<()> {
    writeln!(
        w,
        "{TRACE_HEADER} instance={} n={} initial_length={} terminated={}",
        trace.instance_name, trace.n, trace.initial_length, trace.terminated
    )?;
    writeln!(w, "step,u1,u2,v1,v2,delta,length_after")?;
    for s in &trace.steps {
        let c = s.change;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.index, c.u1, c.u2, c.v1, c.v2, s.delta, s.length_after
        )?;
    }
    Ok(())
}

pub fn write_trace_jsonl<W: Write>(mut w: W, trace: &RunTrace) -> Result<()> {
    for s in &trace.steps {
        serde_json::to_writer(&mut w, s).map_err(std::io::Error::from)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_tsplib<W: Write>(mut w: W, inst: &Instance) -> Result<()> {
    let kind = match (inst.dim(), inst.metric()) {
        (2, Metric::Lp(2)) => "EUC_2D",
        (2, Metric::Lp(1)) => "MAN_2D",
        (d, m) => {
            return Err(Error::UnsupportedFormat(format!(
                "TSPLIB output supports planar L1 and L2 only, not d={d} with {m}"
            )))
        }
    };
    writeln!(w, "NAME : {}", inst.name())?;
    writeln!(w, "COMMENT : distances are meant unrounded, unlike TSPLIB's nint convention")?;
    writeln!(w, "TYPE : TSP")?;
    writeln!(w, "DIMENSION : {}", inst.n())?;
    writeln!(w, "EDGE_WEIGHT_TYPE : {kind}")?;
    writeln!(w, "NODE_COORD_SECTION")?;
    for (i, p) in inst.points().iter().enumerate() {
        let c = p.coords();
        writeln!(w, "{} {} {}", i + 1, c[0], c[1])?;
    }
    writeln!(w, "EOF")?;
    Ok(())
}

pub fn read_tsplib<R: BufRead>(r: R) -> Result<Instance> {
    let mut name = String::from("tsplib");
    let mut dimension = None;
    let mut metric = None;
    let mut in_coords = false;
    let mut points: Vec<Option<Point>> = Vec::new();
    let mut last_line = 0;
    for (k, line) in r.lines().enumerate() {
        let no = k + 1;
        let line = line?;
        let text = line.trim();
        last_line = no;
        if text.is_empty() {
            continue;
        }
        if text == "EOF" {
            break;
        }
        if in_coords {
            let fields: Vec<&str> = text.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::parse(no, format!("expected 'index x y', found '{text}'")));
            }
            let id: usize = parse_num(no, fields[0], "node index")?;
            let x: f64 = parse_num(no, fields[1], "x coordinate")?;
            let y: f64 = parse_num(no, fields[2], "y coordinate")?;
            let n = points.len();
            if id == 0 || id > n || points[id - 1].is_some() {
                return Err(Error::parse(no, format!("node index {id} is out of range or repeated")));
            }
            points[id - 1] = Some(Point::new(vec![x, y]).map_err(|e| Error::parse(no, e.to_string()))?);
            continue;
        }
        if text.starts_with("NODE_COORD_SECTION") {
            let n = dimension.ok_or_else(|| Error::parse(no, "NODE_COORD_SECTION before DIMENSION"))?;
            if metric.is_none() {
                return Err(Error::parse(no, "NODE_COORD_SECTION before EDGE_WEIGHT_TYPE"));
            }
            points = vec![None; n];
            in_coords = true;
            continue;
        }
        let Some((key, value)) = text.split_once(':') else {
            return Err(Error::parse(no, format!("expected 'KEY : value', found '{text}'")));
        };
        let value = value.trim();
        match key.trim() {
            "NAME" => name = value.to_string(),
            "DIMENSION" => dimension = Some(parse_num::<usize>(no, value, "dimension")?),
            "EDGE_WEIGHT_TYPE" => {
                metric = Some(match value {
                    "EUC_2D" => Metric::EUCLIDEAN,
                    "MAN_2D" => Metric::MANHATTAN,
                    other => {
                        return Err(Error::UnsupportedFormat(format!(
                            "EDGE_WEIGHT_TYPE {other} (only EUC_2D and MAN_2D are read)"
                        )))
                    }
                })
            }
            "TYPE" if value != "TSP" => {
                return Err(Error::UnsupportedFormat(format!("TYPE {value}")));
            }
            _ => {}
        }
    }
    if !in_coords {
        return Err(Error::parse(last_line, "missing NODE_COORD_SECTION"));
    }
    let points = points
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| Error::parse(last_line, format!("node {} has no coordinates", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    log::warn!("TSPLIB instance '{name}': distances are evaluated unrounded, not with nint");
    Instance::new(name, metric.expect("checked above"), points)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_instance(path: &Path, inst: &Instance, meta: &BTreeMap<String, String>) -> Result<()> {
    let mut w = create(path)?;
    write_instance(&mut w, inst, meta)?;
    Ok(w.flush()?)
}

/// Reads an instance, recognizing TSPLIB files by their extension or their
/// `NODE_COORD_SECTION`.
pub fn load_instance(path: &Path) -> Result<InstanceFile> {
    let text = std::fs::read_to_string(path)?;
    let tsplib = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsp"))
        || (text.contains("NODE_COORD_SECTION") && !text.starts_with(INSTANCE_HEADER));
    if tsplib {
        Ok(InstanceFile {
            instance: read_tsplib(text.as_bytes())?,
            meta: BTreeMap::new(),
        })
    } else {
        read_instance(text.as_bytes())
    }
}

pub fn save_tour(path: &Path, tour: &Tour) -> Result<()> {
    let mut w = create(path)?;
    write_tour(&mut w, tour)?;
    Ok(w.flush()?)
}

pub fn load_tour(path: &Path) -> Result<Tour> {
    read_tour(open(path)?)
}

pub fn save_script(path: &Path, script: &GadgetScript) -> Result<()> {
    let mut w = create(path)?;
    write_script(&mut w, script)?;
    Ok(w.flush()?)
}

pub fn load_script(path: &Path) -> Result<GadgetScript> {
    read_script(open(path)?)
}

pub fn save_tsplib(path: &Path, inst: &Instance) -> Result<()> {
    let mut w = create(path)?;
    write_tsplib(&mut w, inst)?;
    Ok(w.flush()?)
}
