use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::dataset::{Column, ColumnData, ColumnKind, Dataset, Schema};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    OneHot,
    Label,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    MinMax,
    ZScore,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedFeature {
    pub name: String,
    pub numerator: String,
    pub denominator: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    #[serde(default)]
    pub impute: BTreeMap<String, Imputation>,
    #[serde(default)]
    pub dedupe: bool,
    #[serde(default)]
    pub encoding: BTreeMap<String, Encoding>,
    /// May name columns created by feature engineering.
    #[serde(default)]
    pub scaling: BTreeMap<String, Scaling>,
    #[serde(default = "degree_one")]
    pub poly_degree: u8,
    #[serde(default)]
    pub interactions: bool,
    /// Columns expanded by `poly_degree`/`interactions`; `None` means every
    /// numeric non-target column present when engineering starts.
    #[serde(default)]
    pub poly_columns: Option<Vec<String>>,
    #[serde(default)]
    pub derived: Vec<DerivedFeature>,
}

fn degree_one() -> u8 {
    1
}

impl Default for Recipe {
    fn default() -> Self {
        Self {
            impute: BTreeMap::new(),
            dedupe: false,
            encoding: BTreeMap::new(),
            scaling: BTreeMap::new(),
            poly_degree: 1,
            interactions: false,
            poly_columns: None,
            derived: Vec::new(),
        }
    }
}

/// One fitted, replayable step. Fitted statistics live inside the variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transform {
    ImputeMean { column: String, mean: f64 },
    Dedupe,
    OneHot { column: String, categories: Vec<String> },
    LabelEncode { column: String, categories: Vec<String> },
    Square { column: String },
    Interaction { left: String, right: String },
    Derived { name: String, numerator: String, denominator: String },
    MinMax { column: String, min: f64, max: f64 },
    ZScore { column: String, mean: f64, std: f64 },
}

impl Transform {
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        match self {
            Transform::ImputeMean { column, mean } => {
                let cells = data.numeric_cells(column)?;
                let filled = cells.iter().map(|c| Some(c.unwrap_or(*mean))).collect();
                replace(data, column, vec![Column::numeric_opt(column.clone(), filled)], self)
            }
            Transform::Dedupe => {
                let mut seen = HashSet::new();
                let keep: Vec<usize> = (0..data.n_rows()).filter(|&i| seen.insert(row_key(data, i))).collect();
                let selected = data.select_rows(&keep);
                Ok(selected.derive(selected.columns().to_vec(), self.clone()))
            }
            Transform::OneHot { column, categories } => {
                let cells = data.categorical_cells(column)?;
                let dummies = categories
                    .iter()
                    .map(|cat| {
                        let v = cells
                            .iter()
                            .map(|c| if c.as_deref() == Some(cat.as_str()) { 1.0 } else { 0.0 })
                            .collect();
                        Column::numeric(format!("{column}={cat}"), v)
                    })
                    .collect();
                replace(data, column, dummies, self)
            }
            Transform::LabelEncode { column, categories } => {
                let cells = data.categorical_cells(column)?;
                let codes = cells
                    .iter()
                    .map(|c| match c {
                        None => Ok(None),
                        Some(s) => categories
                            .binary_search(s)
                            .map(|k| Some(k as f64))
                            .map_err(|_| Error::invalid(column.clone(), format!("category {s:?} was not seen when fitting"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                replace(data, column, vec![Column::numeric_opt(column.clone(), codes)], self)
            }
            Transform::Square { column } => {
                let x = data.numeric_column(column)?;
                let col = Column::numeric(format!("{column}^2"), x.iter().map(|v| v * v).collect());
                append(data, col, self)
            }
            Transform::Interaction { left, right } => {
                let a = data.numeric_column(left)?;
                let b = data.numeric_column(right)?;
                let col = Column::numeric(format!("{left}*{right}"), a.iter().zip(&b).map(|(x, y)| x * y).collect());
                append(data, col, self)
            }
            Transform::Derived { name, numerator, denominator } => {
                let num = data.numeric_column(numerator)?;
                let den = data.numeric_column(denominator)?;
                let bad: Vec<usize> = den.iter().enumerate().filter(|(_, d)| !(**d > 0.0)).map(|(i, _)| i).collect();
                if !bad.is_empty() {
                    return Err(Error::NonPositiveDenominator {
                        column: denominator.clone(),
                        rows: bad,
                    });
                }
                let col = Column::numeric(name.clone(), num.iter().zip(&den).map(|(a, b)| a / b).collect());
                append(data, col, self)
            }
            Transform::MinMax { column, min, max } => {
                let cells = data.numeric_cells(column)?;
                let range = max - min;
                let out = cells
                    .iter()
                    .map(|c| c.map(|x| if range > 0.0 { (x - min) / range } else { 0.0 }))
                    .collect();
                replace(data, column, vec![Column::numeric_opt(column.clone(), out)], self)
            }
            Transform::ZScore { column, mean, std } => {
                let cells = data.numeric_cells(column)?;
                let out = cells.iter().map(|c| c.map(|x| (x - mean) / std)).collect();
                replace(data, column, vec![Column::numeric_opt(column.clone(), out)], self)
            }
        }
    }
}

#[derive(Hash, PartialEq, Eq)]
enum CellKey {
    Num(Option<u64>),
    Cat(Option<String>),
}

fn row_key(data: &Dataset, i: usize) -> Vec<CellKey> {
    data.columns()
        .iter()
        .map(|c| match &c.data {
            // +0.0 and -0.0 compare equal
            ColumnData::Numeric(v) => CellKey::Num(v[i].map(|x| if x == 0.0 { 0 } else { x.to_bits() })),
            ColumnData::Categorical(v) => CellKey::Cat(v[i].clone()),
        })
        .collect()
}

fn replace(data: &Dataset, column: &str, new: Vec<Column>, step: &Transform) -> Result<Dataset> {
    let pos = data.position(column).ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
    let mut cols = data.columns().to_vec();
    cols.splice(pos..=pos, new);
    finish(data, cols, step)
}

fn append(data: &Dataset, new: Column, step: &Transform) -> Result<Dataset> {
    let mut cols = data.columns().to_vec();
    cols.push(new);
    finish(data, cols, step)
}

fn finish(data: &Dataset, cols: Vec<Column>, step: &Transform) -> Result<Dataset> {
    let mut names = HashSet::new();
    for c in &cols {
        if !names.insert(c.name.as_str()) {
            return Err(Error::invalid("columns", format!("transform would create duplicate column `{}`", c.name)));
        }
    }
    Ok(data.derive(cols, step.clone()))
}

fn run(data: &Dataset, steps: impl IntoIterator<Item = Transform>) -> Result<Dataset> {
    steps.into_iter().try_fold(data.clone(), |d, t| t.apply(&d))
}

fn present(cells: &[Option<f64>]) -> Vec<f64> {
    cells.iter().flatten().copied().collect()
}

fn complete(data: &Dataset, column: &str) -> Result<Vec<f64>> {
    data.numeric_column(column)
}

/// Mean imputation, deduplication, then categorical encoding.
pub fn preprocess(data: &Dataset, recipe: &Recipe) -> Result<Dataset> {
    for col in recipe.impute.keys() {
        data.numeric_cells(col)?;
    }
    for col in recipe.encoding.keys() {
        data.categorical_cells(col)?;
    }

    let mut d = data.clone();
    for (col, Imputation::Mean) in &recipe.impute {
        let v = present(d.numeric_cells(col)?);
        if v.is_empty() {
            return Err(Error::AllMissing(col.clone()));
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        d = Transform::ImputeMean { column: col.clone(), mean }.apply(&d)?;
    }
    if recipe.dedupe {
        d = Transform::Dedupe.apply(&d)?;
    }
    for (col, enc) in &recipe.encoding {
        let categories: Vec<String> = d
            .categorical_cells(col)?
            .iter()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let step = match enc {
            Encoding::OneHot => Transform::OneHot { column: col.clone(), categories },
            Encoding::Label => Transform::LabelEncode { column: col.clone(), categories },
        };
        d = step.apply(&d)?;
    }
    Ok(d)
}

/// Polynomial squares, pairwise interactions and ratio features.
pub fn engineer_features(data: &Dataset, recipe: &Recipe) -> Result<Dataset> {
    if !(1..=2).contains(&recipe.poly_degree) {
        return Err(Error::invalid("poly_degree", "must be 1 or 2"));
    }
    let mut steps = Vec::new();
    if recipe.poly_degree == 2 || recipe.interactions {
        let cols: Vec<String> = match &recipe.poly_columns {
            Some(c) => {
                for name in c {
                    data.numeric_cells(name)?;
                }
                c.clone()
            }
            None => data
                .columns()
                .iter()
                .filter(|c| c.data.kind() == ColumnKind::Numeric && Some(c.name.as_str()) != data.target())
                .map(|c| c.name.clone())
                .collect(),
        };
        if recipe.poly_degree == 2 {
            steps.extend(cols.iter().map(|c| Transform::Square { column: c.clone() }));
        }
        if recipe.interactions {
            for i in 0..cols.len() {
                for j in i + 1..cols.len() {
                    steps.push(Transform::Interaction {
                        left: cols[i].clone(),
                        right: cols[j].clone(),
                    });
                }
            }
        }
    }
    for f in &recipe.derived {
        data.numeric_cells(&f.numerator)?;
        data.numeric_cells(&f.denominator)?;
        steps.push(Transform::Derived {
            name: f.name.clone(),
            numerator: f.numerator.clone(),
            denominator: f.denominator.clone(),
        });
    }
    run(data, steps)
}

/// Min-max or z-score scaling per column, with population standard deviation.
pub fn scale(data: &Dataset, recipe: &Recipe) -> Result<Dataset> {
    let mut d = data.clone();
    for (col, how) in &recipe.scaling {
        let step = match how {
            Scaling::None => {
                d.numeric_cells(col)?;
                continue;
            }
            Scaling::MinMax => {
                let x = complete(&d, col)?;
                let min = x.iter().copied().fold(f64::INFINITY, f64::min);
                let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Transform::MinMax { column: col.clone(), min, max }
            }
            Scaling::ZScore => {
                let x = complete(&d, col)?;
                let n = x.len() as f64;
                let mean = x.iter().sum::<f64>() / n;
                let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                if !(std > 1e-12 * mean.abs().max(1.0)) {
                    return Err(Error::ZeroVariance(col.clone()));
                }
                Transform::ZScore { column: col.clone(), mean, std }
            }
        };
        d = step.apply(&d)?;
    }
    Ok(d)
}

/// Transforms fitted on one dataset, replayable on any dataset with the same raw schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedRecipe {
    pub raw_schema: Schema,
    pub transforms: Vec<Transform>,
}

/// Fits `recipe` on `data` in the order preprocess, engineer, scale.
/// Engineering precedes scaling so ratio denominators keep their raw sign.
pub fn fit(recipe: &Recipe, data: &Dataset) -> Result<(FittedRecipe, Dataset)> {
    let start = data.transform_log().len();
    let d = preprocess(data, recipe)?;
    let d = engineer_features(&d, recipe)?;
    let d = scale(&d, recipe)?;
    let fitted = FittedRecipe {
        raw_schema: data.schema(),
        transforms: d.transform_log()[start..].to_vec(),
    };
    Ok((fitted, d))
}

/// Applies stored statistics to new data without refitting.
pub fn replay(fitted: &FittedRecipe, data: &Dataset) -> Result<Dataset> {
    let schema = data.schema();
    if schema != fitted.raw_schema {
        return Err(Error::SchemaMismatch(describe_mismatch(&fitted.raw_schema, &schema)));
    }
    run(data, fitted.transforms.iter().cloned())
}

fn describe_mismatch(expected: &Schema, found: &Schema) -> String {
    for (i, e) in expected.iter().enumerate() {
        match found.get(i) {
            None => return format!("missing column `{}` at position {i}", e.0),
            Some(f) if f != e => {
                return format!(
                    "position {i}: expected `{}` ({}), found `{}` ({})",
                    e.0,
                    e.1.as_str(),
                    f.0,
                    f.1.as_str()
                )
            }
            _ => {}
        }
    }
    format!("{} unexpected extra columns", found.len() - expected.len())
}

impl FittedRecipe {
    /// Output column names produced by replay, in order.
    pub fn output_columns(&self) -> Vec<String> {
        let mut names: Vec<String> = self.raw_schema.iter().map(|(n, _)| n.clone()).collect();
        for t in &self.transforms {
            match t {
                Transform::OneHot { column, categories } => {
                    let pos = names.iter().position(|n| n == column).expect("fitted column");
                    names.splice(pos..=pos, categories.iter().map(|c| format!("{column}={c}")));
                }
                Transform::Square { column } => names.push(format!("{column}^2")),
                Transform::Interaction { left, right } => names.push(format!("{left}*{right}")),
                Transform::Derived { name, .. } => names.push(name.clone()),
                _ => {}
            }
        }
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(cols: Vec<Column>) -> Dataset {
        Dataset::new(cols).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn mean_imputation() {
        let d = ds(vec![Column::numeric_opt("x", vec![Some(1.0), None, Some(3.0)])]);
        let r = Recipe {
            impute: [("x".to_string(), Imputation::Mean)].into(),
            ..Recipe::default()
        };
        assert_eq!(preprocess(&d, &r).unwrap().numeric_column("x").unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn all_missing_column_errors() {
        let d = ds(vec![Column::numeric_opt("x", vec![None, None])]);
        let r = Recipe {
            impute: [("x".to_string(), Imputation::Mean)].into(),
            ..Recipe::default()
        };
        assert!(matches!(preprocess(&d, &r), Err(Error::AllMissing(c)) if c == "x"));
    }

    #[test]
    fn one_hot_lexicographic() {
        let d = ds(vec![Column::categorical("mode", ["ship", "air", "ship"])]);
        let r = Recipe {
            encoding: [("mode".to_string(), Encoding::OneHot)].into(),
            ..Recipe::default()
        };
        let out = preprocess(&d, &r).unwrap();
        assert_eq!(out.column_names(), vec!["mode=air", "mode=ship"]);
        assert_eq!(out.numeric_column("mode=air").unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(out.numeric_column("mode=ship").unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn label_encoding_starts_at_zero() {
        let d = ds(vec![Column::categorical("mode", ["ship", "air", "rail"])]);
        let r = Recipe {
            encoding: [("mode".to_string(), Encoding::Label)].into(),
            ..Recipe::default()
        };
        assert_eq!(preprocess(&d, &r).unwrap().numeric_column("mode").unwrap(), vec![2.0, 0.0, 1.0]);
    }

    #[test]
    fn dedupe_keeps_first() {
        let d = ds(vec![
            Column::numeric("x", vec![1.0, 1.0, 2.0]),
            Column::categorical("c", ["a", "a", "a"]),
        ]);
        let r = Recipe { dedupe: true, ..Recipe::default() };
        assert_eq!(preprocess(&d, &r).unwrap().n_rows(), 2);
    }

    #[test]
    fn unknown_column_errors() {
        let d = ds(vec![Column::numeric("x", vec![1.0])]);
        let r = Recipe {
            impute: [("y".to_string(), Imputation::Mean)].into(),
            ..Recipe::default()
        };
        assert!(matches!(preprocess(&d, &r), Err(Error::UnknownColumn(c)) if c == "y"));
    }

    fn scaled(values: Vec<f64>, how: Scaling) -> Result<Vec<f64>> {
        let d = ds(vec![Column::numeric("x", values)]);
        let r = Recipe {
            scaling: [("x".to_string(), how)].into(),
            ..Recipe::default()
        };
        scale(&d, &r)?.numeric_column("x")
    }

    #[test]
    fn min_max_and_z_score() {
        assert_eq!(scaled(vec![2.0, 4.0, 6.0], Scaling::MinMax).unwrap(), vec![0.0, 0.5, 1.0]);
        // population stdev sqrt(8/3)
        let s = (8.0f64 / 3.0).sqrt();
        let z = scaled(vec![2.0, 4.0, 6.0], Scaling::ZScore).unwrap();
        assert!(close(&z, &[-2.0 / s, 0.0, 2.0 / s], 1e-12));
        assert!(close(&z, &[-1.2247, 0.0, 1.2247], 1e-4));
        assert_eq!(scaled(vec![5.0, 5.0, 5.0], Scaling::MinMax).unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(matches!(scaled(vec![5.0, 5.0], Scaling::ZScore), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn scale_rejects_missing_cells() {
        let d = ds(vec![Column::numeric_opt("x", vec![Some(1.0), None])]);
        let r = Recipe {
            scaling: [("x".to_string(), Scaling::MinMax)].into(),
            ..Recipe::default()
        };
        assert!(matches!(scale(&d, &r), Err(Error::MissingCells(_))));
    }

    #[test]
    fn polynomial_and_interactions() {
        let d = ds(vec![Column::numeric("a", vec![2.0]), Column::numeric("b", vec![3.0])]);
        let r = Recipe {
            poly_degree: 2,
            interactions: true,
            ..Recipe::default()
        };
        let out = engineer_features(&d, &r).unwrap();
        assert_eq!(out.column_names(), vec!["a", "b", "a^2", "b^2", "a*b"]);
        assert_eq!(out.to_matrix(&out.column_names()).unwrap().row(0), &[2.0, 3.0, 4.0, 9.0, 6.0]);
    }

    #[test]
    fn identity_recipe_leaves_columns_unchanged() {
        let d = ds(vec![Column::numeric("a", vec![2.0, 5.0])]);
        let out = engineer_features(&d, &Recipe::default()).unwrap();
        assert_eq!(out.columns(), d.columns());
    }

    #[test]
    fn fuel_efficiency_ratio() {
        let d = ds(vec![
            Column::numeric("distance_km", vec![100.0]),
            Column::numeric("fuel_consumed_liters", vec![20.0]),
        ]);
        let r = Recipe {
            derived: vec![DerivedFeature {
                name: "fuel_efficiency".into(),
                numerator: "distance_km".into(),
                denominator: "fuel_consumed_liters".into(),
            }],
            ..Recipe::default()
        };
        assert_eq!(engineer_features(&d, &r).unwrap().numeric_column("fuel_efficiency").unwrap(), vec![5.0]);
    }

    #[test]
    fn non_positive_denominator_lists_rows() {
        let d = ds(vec![Column::numeric("n", vec![1.0, 1.0, 1.0]), Column::numeric("d", vec![1.0, 0.0, -2.0])]);
        let r = Recipe {
            derived: vec![DerivedFeature { name: "q".into(), numerator: "n".into(), denominator: "d".into() }],
            ..Recipe::default()
        };
        match engineer_features(&d, &r) {
            Err(Error::NonPositiveDenominator { column, rows }) => {
                assert_eq!(column, "d");
                assert_eq!(rows, vec![1, 2]);
            }
            other => panic!("{other:?}"),
        }
    }

    fn full_recipe() -> Recipe {
        Recipe {
            impute: [("x".to_string(), Imputation::Mean)].into(),
            dedupe: false,
            encoding: [("mode".to_string(), Encoding::OneHot)].into(),
            scaling: [("x".to_string(), Scaling::MinMax), ("y".to_string(), Scaling::ZScore)].into(),
            poly_degree: 1,
            interactions: false,
            poly_columns: None,
            derived: vec![DerivedFeature { name: "r".into(), numerator: "x".into(), denominator: "y".into() }],
        }
    }

    fn training() -> Dataset {
        ds(vec![
            Column::categorical("mode", ["ship", "air", "ship"]),
            Column::numeric_opt("x", vec![Some(1.0), None, Some(5.0)]),
            Column::numeric("y", vec![1.0, 2.0, 4.0]),
        ])
    }

    #[test]
    fn replay_reproduces_fit_output() {
        let (fitted, out) = fit(&full_recipe(), &training()).unwrap();
        assert_eq!(replay(&fitted, &training()).unwrap(), out);
        assert_eq!(fitted.output_columns(), out.column_names());
        assert_eq!(out.transform_log(), fitted.transforms.as_slice());
    }

    #[test]
    fn replay_unseen_category_and_no_clipping() {
        let (fitted, _) = fit(&full_recipe(), &training()).unwrap();
        let new = ds(vec![
            Column::categorical("mode", ["barge"]),
            Column::numeric("x", vec![9.0]),
            Column::numeric("y", vec![1.0]),
        ]);
        let out = replay(&fitted, &new).unwrap();
        assert_eq!(out.column_names(), vec!["mode=air", "mode=ship", "x", "y", "r"]);
        assert_eq!(out.numeric_column("mode=air").unwrap(), vec![0.0]);
        assert_eq!(out.numeric_column("mode=ship").unwrap(), vec![0.0]);
        assert_eq!(out.numeric_column("x").unwrap(), vec![2.0]);
    }

    #[test]
    fn replay_schema_mismatch() {
        let (fitted, _) = fit(&full_recipe(), &training()).unwrap();
        let new = ds(vec![Column::numeric("x", vec![1.0])]);
        assert!(matches!(replay(&fitted, &new), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn recipe_serde_round_trip() {
        let (fitted, _) = fit(&full_recipe(), &training()).unwrap();
        let json = serde_json::to_string(&fitted).unwrap();
        assert_eq!(serde_json::from_str::<FittedRecipe>(&json).unwrap(), fitted);
    }
}
