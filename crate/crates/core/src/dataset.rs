//! Week-indexed basket data: parsing, category restriction, windowing and
//! per-item proportion features.
//!
//! Items are interned into an [`ItemCatalog`] whose ordering is lexicographic
//! by identifier. Every downstream tie-break (edge ranking, cluster ids, top-R
//! ranking) relies on that ordering, so item ordinals compare the same way the
//! identifiers do.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Ordered set of item identifiers with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ItemCatalog {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl ItemCatalog {
    /// Builds a catalog from arbitrary identifiers; duplicates collapse and the
    /// result is sorted.
    pub fn new<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = items.into_iter().map(Into::into).collect();
        let items: Vec<String> = set.into_iter().collect();
        let index = items
            .iter()
            .enumerate()
            .map(|(i, name)| (name.clone(), i))
            .collect();
        Self { items, index }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Identifier for an ordinal. Panics if the ordinal is out of range.
    pub fn name(&self, ordinal: usize) -> &str {
        &self.items[ordinal]
    }

    pub fn ordinal(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

/// One transaction: a deduplicated set of item ordinals, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basket {
    pub id: String,
    pub week: u32,
    items: Vec<usize>,
}

impl Basket {
    pub fn new(id: impl Into<String>, week: u32, mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        Self {
            id: id.into(),
            week,
            items,
        }
    }

    /// Item ordinals in ascending (catalog) order.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn contains(&self, ordinal: usize) -> bool {
        self.items.binary_search(&ordinal).is_ok()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// A borrowed collection of baskets, e.g. the contents of one window.
pub type BasketSet<'a> = Vec<&'a Basket>;

/// Baskets grouped by week over a fixed catalog.
///
/// Weeks run from 1 to the horizon `T`; a week may hold zero baskets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeeklyDataset {
    catalog: ItemCatalog,
    weeks: Vec<Vec<Basket>>,
}

impl WeeklyDataset {
    /// Assembles a dataset, checking that every basket is non-empty, has a
    /// positive week, and only references catalog ordinals. Baskets keep their
    /// relative order within a week.
    pub fn from_baskets(catalog: ItemCatalog, baskets: Vec<Basket>) -> Result<Self> {
        if baskets.is_empty() {
            return Err(Error::validation("dataset contains no baskets"));
        }
        let mut horizon = 0u32;
        for basket in &baskets {
            if basket.week == 0 {
                return Err(Error::validation(format!(
                    "basket {:?} has week 0; weeks start at 1",
                    basket.id
                )));
            }
            if basket.is_empty() {
                return Err(Error::validation(format!(
                    "basket {:?} is empty",
                    basket.id
                )));
            }
            if let Some(&bad) = basket.items.iter().find(|&&i| i >= catalog.len()) {
                return Err(Error::validation(format!(
                    "basket {:?} references item ordinal {bad} outside the catalog",
                    basket.id
                )));
            }
            horizon = horizon.max(basket.week);
        }
        let mut weeks = vec![Vec::new(); horizon as usize];
        for basket in baskets {
            weeks[basket.week as usize - 1].push(basket);
        }
        Ok(Self { catalog, weeks })
    }

    pub fn catalog(&self) -> &ItemCatalog {
        &self.catalog
    }

    /// The horizon `T`: the largest week index.
    pub fn horizon(&self) -> u32 {
        self.weeks.len() as u32
    }

    /// Baskets of week `t`; empty for weeks outside `[1, T]`.
    pub fn week(&self, t: u32) -> &[Basket] {
        if t == 0 {
            return &[];
        }
        self.weeks.get(t as usize - 1).map_or(&[], Vec::as_slice)
    }

    /// `L_t`, the number of baskets in week `t`.
    pub fn basket_count(&self, t: u32) -> usize {
        self.week(t).len()
    }

    pub fn baskets(&self) -> impl Iterator<Item = &Basket> {
        self.weeks.iter().flatten()
    }

    pub fn total_baskets(&self) -> usize {
        self.weeks.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

#[derive(Deserialize)]
struct JsonBasket {
    week: i64,
    basket_id: String,
    items: Vec<String>,
}

/// Accumulates rows into baskets keyed by `(week, basket_id)`, preserving the
/// order in which baskets first appear.
#[derive(Default)]
struct BasketAccumulator {
    keys: HashMap<(u32, String), usize>,
    baskets: Vec<(u32, String, BTreeSet<String>)>,
    rows: usize,
}

impl BasketAccumulator {
    fn add<I: IntoIterator<Item = String>>(&mut self, week: u32, id: &str, items: I) {
        self.rows += 1;
        let slot = match self.keys.get(&(week, id.to_string())) {
            Some(&slot) => slot,
            None => {
                self.baskets.push((week, id.to_string(), BTreeSet::new()));
                self.keys
                    .insert((week, id.to_string()), self.baskets.len() - 1);
                self.baskets.len() - 1
            }
        };
        self.baskets[slot].2.extend(items);
    }

    fn finish(self) -> Result<WeeklyDataset> {
        if self.rows == 0 {
            return Err(Error::validation("input contains no rows"));
        }
        let catalog = ItemCatalog::new(
            self.baskets
                .iter()
                .flat_map(|(_, _, items)| items.iter().cloned()),
        );
        let baskets = self
            .baskets
            .into_iter()
            .filter(|(_, _, items)| !items.is_empty())
            .map(|(week, id, items)| {
                let ordinals = items
                    .iter()
                    .map(|name| {
                        catalog
                            .ordinal(name)
                            .expect("catalog built from these items")
                    })
                    .collect();
                Basket::new(id, week, ordinals)
            })
            .collect();
        WeeklyDataset::from_baskets(catalog, baskets)
    }
}

fn parse_week(raw: &str, line: u64) -> Result<u32> {
    let week: i64 = raw.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("week {raw:?} is not an integer"),
    })?;
    if week <= 0 {
        return Err(Error::validation(format!(
            "line {line}: week {week} is not a positive integer"
        )));
    }
    u32::try_from(week).map_err(|_| Error::Parse {
        line,
        message: format!("week {week} is too large"),
    })
}

/// Parses basket rows in CSV (`week,basket_id,item`) or JSONL form.
///
/// Rows sharing `(week, basket_id)` merge into one basket and repeated items
/// collapse. The catalog is the sorted set of all items seen.
pub fn parse_baskets<R: Read>(reader: R, format: InputFormat) -> Result<WeeklyDataset> {
    match format {
        InputFormat::Csv => parse_csv(reader),
        InputFormat::Jsonl => parse_jsonl(reader),
    }
}

fn parse_csv<R: Read>(reader: R) -> Result<WeeklyDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.is_empty() {
        return Err(Error::validation("input is empty"));
    }
    if header.iter().collect::<Vec<_>>() != ["week", "basket_id", "item"] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `week,basket_id,item`, found {:?}",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut acc = BasketAccumulator::default();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let item = &record[2];
        if item.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty item identifier".into(),
            });
        }
        if record[1].is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty basket_id".into(),
            });
        }
        let week = parse_week(&record[0], line)?;
        acc.add(week, &record[1], [item.to_string()]);
    }
    acc.finish()
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn parse_jsonl<R: Read>(reader: R) -> Result<WeeklyDataset> {
    let mut acc = BasketAccumulator::default();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonBasket = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if row.week <= 0 {
            return Err(Error::validation(format!(
                "line {line_no}: week {} is not a positive integer",
                row.week
            )));
        }
        let week = u32::try_from(row.week).map_err(|_| Error::Parse {
            line: line_no,
            message: format!("week {} is too large", row.week),
        })?;
        if row.items.iter().any(String::is_empty) {
            return Err(Error::Parse {
                line: line_no,
                message: "empty item identifier".into(),
            });
        }
        acc.add(week, &row.basket_id, row.items);
    }
    acc.finish()
}

/// Writes the dataset back in the CSV input format: weeks ascending, baskets
/// in stored order, items in catalog order.
pub fn write_csv<W: Write>(ds: &WeeklyDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["week", "basket_id", "item"])
        .map_err(csv_error)?;
    for basket in ds.baskets() {
        let week = basket.week.to_string();
        for &item in basket.items() {
            wtr.write_record([week.as_str(), basket.id.as_str(), ds.catalog.name(item)])
                .map_err(csv_error)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Keeps only items in `keep`. Baskets left empty are dropped; the horizon is
/// unchanged.
pub fn restrict_category(ds: &WeeklyDataset, keep: &BTreeSet<String>) -> Result<WeeklyDataset> {
    if keep.is_empty() {
        return Err(Error::validation("category filter is empty"));
    }
    let catalog = ItemCatalog::new(
        ds.catalog
            .items()
            .iter()
            .filter(|name| keep.contains(*name))
            .cloned(),
    );
    if catalog.is_empty() {
        return Err(Error::validation(
            "category filter shares no item with the dataset",
        ));
    }
    // Old ordinal -> new ordinal.
    let remap: Vec<Option<usize>> = ds
        .catalog
        .items()
        .iter()
        .map(|name| catalog.ordinal(name))
        .collect();
    let weeks = ds
        .weeks
        .iter()
        .map(|baskets| {
            baskets
                .iter()
                .filter_map(|b| {
                    let items: Vec<usize> = b.items.iter().filter_map(|&i| remap[i]).collect();
                    (!items.is_empty()).then(|| Basket::new(b.id.clone(), b.week, items))
                })
                .collect()
        })
        .collect();
    Ok(WeeklyDataset { catalog, weeks })
}

/// The baskets of the `delta_t` consecutive weeks ending at `t`, clipped at
/// week 1.
pub fn window(ds: &WeeklyDataset, t: u32, delta_t: u32) -> Result<BasketSet<'_>> {
    if delta_t == 0 {
        return Err(Error::parameter("window length must be at least 1 week"));
    }
    if t == 0 || t > ds.horizon() {
        return Err(Error::OutOfRange {
            week: t,
            horizon: ds.horizon(),
        });
    }
    let start = t.saturating_sub(delta_t - 1).max(1);
    Ok((start..=t).flat_map(|w| ds.week(w)).collect())
}

/// Fraction of baskets containing each catalog item, indexed by ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionVector {
    values: Vec<f64>,
}

impl ProportionVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ordinal: usize) -> f64 {
        self.values[ordinal]
    }
}

pub fn item_proportions(bs: &[&Basket], catalog: &ItemCatalog) -> Result<ProportionVector> {
    if bs.is_empty() {
        return Err(Error::validation(
            "cannot compute proportions of an empty basket set",
        ));
    }
    let mut counts = vec![0usize; catalog.len()];
    for basket in bs {
        for &item in basket.items() {
            counts[item] += 1;
        }
    }
    let total = bs.len() as f64;
    Ok(ProportionVector {
        values: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

/// Writes one row of per-item basket proportions per week, columns in catalog
/// order. Weeks without baskets are written as `NA`.
pub fn write_proportions_csv<W: Write>(ds: &WeeklyDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["week".to_string()];
    header.extend(ds.catalog.items().iter().cloned());
    wtr.write_record(&header).map_err(csv_error)?;
    for t in 1..=ds.horizon() {
        let mut row = vec![t.to_string()];
        let baskets: BasketSet<'_> = ds.week(t).iter().collect();
        if baskets.is_empty() {
            row.extend(std::iter::repeat_n("NA".to_string(), ds.catalog.len()));
        } else {
            let props = item_proportions(&baskets, &ds.catalog)?;
            row.extend(props.values.iter().map(|v| format!("{v:.6}")));
        }
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}
