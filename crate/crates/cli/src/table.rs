use std::cmp::Ordering;
use std::io::{self, Write};

/// Sort key cell; floats compare by `total_cmp`.
#[derive(Clone, Debug)]
pub enum Key {
    Text(String),
    Num(f64),
}

impl Key {
    fn cmp(&self, other: &Key) -> Ordering {
        match (self, other) {
            (Key::Text(a), Key::Text(b)) => a.cmp(b),
            (Key::Num(a), Key::Num(b)) => a.total_cmp(b),
            (Key::Text(_), Key::Num(_)) => Ordering::Greater,
            (Key::Num(_), Key::Text(_)) => Ordering::Less,
        }
    }
}

impl From<&str> for Key {
    fn from(s: &str) -> Self {
        Key::Text(s.to_string())
    }
}

impl From<String> for Key {
    fn from(s: String) -> Self {
        Key::Text(s)
    }
}

impl From<f64> for Key {
    fn from(v: f64) -> Self {
        Key::Num(v)
    }
}

impl From<usize> for Key {
    fn from(v: usize) -> Self {
        Key::Num(v as f64)
    }
}

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV table whose rows are emitted in key order.
#[derive(Clone, Debug)]
pub struct Table {
    header: String,
    rows: Vec<(Vec<Key>, String)>,
}

impl Table {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, key: Vec<Key>, cells: &[String]) {
        self.rows.push((key, cells.join(",")));
    }

    pub fn push_line(&mut self, key: Vec<Key>, line: String) {
        self.rows.push((key, line));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by(|&a, &b| {
            let (ka, kb) = (&self.rows[a].0, &self.rows[b].0);
            ka.iter()
                .zip(kb)
                .map(|(x, y)| x.cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(ka.len().cmp(&kb.len()))
        });
        writeln!(out, "{}", self.header)?;
        for i in order {
            writeln!(out, "{}", self.rows[i].1)?;
        }
        Ok(())
    }
}
