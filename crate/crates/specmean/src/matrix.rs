use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{Field, C64};
use crate::tolerances;

/// Dense n×n matrix over a scalar field, the carrier for everything the
/// library manipulates.
///
/// The JSON form is `{"dim": n, "field": "real"|"complex", "rows": [[..], ..]}`
/// with complex entries encoded as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T: Field> {
    inner: DMatrix<T>,
}

impl<T: Field> SquareMatrix<T> {
    pub fn from_inner(inner: DMatrix<T>) -> Result<Self> {
        if inner.nrows() == 0 || inner.nrows() != inner.ncols() {
            return Err(Error::Domain(format!(
                "expected a nonempty square matrix, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        Ok(Self { inner })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("rows do not form a square matrix".into()));
        }
        let inner = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self { inner })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    /// Diagonal matrix with the given real entries.
    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        Self {
            inner: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    T::from_re(entries[i])
                } else {
                    T::zero()
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.inner[(i, j)]
    }

    pub fn inner(&self) -> &DMatrix<T> {
        &self.inner
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.inner
    }

    pub fn determinant(&self) -> T {
        self.inner.determinant()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    /// Max-entry residual of AᴴA − I.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.dim();
        let gram = self.inner.adjoint() * &self.inner;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { T::one() } else { T::zero() };
                worst = worst.max((gram[(i, j)] - expect).modulus());
            }
        }
        worst
    }

    /// |det − 1|, the deviation from the special-linear group.
    pub fn special_linear_deviation(&self) -> f64 {
        (self.determinant().to_c64() - C64::new(1.0, 0.0)).norm()
    }

    pub fn is_special_linear(&self) -> bool {
        self.special_linear_deviation() <= tolerances::DET_TOL
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonality_residual() <= tolerances::ORTHO_TOL
    }

    pub fn require_special_linear(&self) -> Result<()> {
        let deviation = self.special_linear_deviation();
        if deviation <= tolerances::DET_TOL {
            Ok(())
        } else {
            Err(Error::NotSpecialLinear {
                deviation,
                tol: tolerances::DET_TOL,
            })
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl SquareMatrix<f64> {
    /// 2D rotation by `theta`: rows (cos θ, sin θ) and (−sin θ, cos θ).
    pub fn rotation2(theta: f64) -> Self {
        Self {
            inner: DMatrix::from_row_slice(
                2,
                2,
                &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()],
            ),
        }
    }

    /// Lift a real matrix into the complex field.
    pub fn to_complex(&self) -> SquareMatrix<C64> {
        SquareMatrix {
            inner: self.inner.map(|x| C64::new(x, 0.0)),
        }
    }
}

impl<T: Field> Serialize for SquareMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let n = self.dim();
        let rows: Vec<Vec<serde_json::Value>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).entry_to_json()).collect())
            .collect();
        let mut s = serializer.serialize_struct("SquareMatrix", 3)?;
        s.serialize_field("dim", &n)?;
        s.serialize_field("field", T::NAME)?;
        s.serialize_field("rows", &rows)?;
        s.end()
    }
}

#[derive(Deserialize)]
struct MatrixRepr {
    dim: usize,
    field: String,
    rows: Vec<Vec<serde_json::Value>>,
}

fn matrix_from_repr<T: Field>(repr: &MatrixRepr) -> Result<SquareMatrix<T>> {
    if repr.field != T::NAME {
        return Err(Error::Domain(format!(
            "field mismatch: payload says {:?}, expected {:?}",
            repr.field,
            T::NAME
        )));
    }
    if repr.rows.len() != repr.dim || repr.rows.iter().any(|r| r.len() != repr.dim) {
        return Err(Error::Domain(format!(
            "rows do not form a {0}x{0} matrix",
            repr.dim
        )));
    }
    let mut rows = Vec::with_capacity(repr.dim);
    for row in &repr.rows {
        rows.push(
            row.iter()
                .map(T::entry_from_json)
                .collect::<Result<Vec<T>>>()?,
        );
    }
    SquareMatrix::from_rows(&rows)
}

impl<'de, T: Field> Deserialize<'de> for SquareMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        matrix_from_repr(&repr).map_err(D::Error::custom)
    }
}

/// A matrix whose field is only known at run time (CLI inputs).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnyMatrix {
    Real(SquareMatrix<f64>),
    Complex(SquareMatrix<C64>),
}

impl AnyMatrix {
    pub fn dim(&self) -> usize {
        match self {
            AnyMatrix::Real(m) => m.dim(),
            AnyMatrix::Complex(m) => m.dim(),
        }
    }
}

impl<'de> Deserialize<'de> for AnyMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        match repr.field.as_str() {
            "real" => matrix_from_repr::<f64>(&repr)
                .map(AnyMatrix::Real)
                .map_err(D::Error::custom),
            "complex" => matrix_from_repr::<C64>(&repr)
                .map(AnyMatrix::Complex)
                .map_err(D::Error::custom),
            other => Err(D::Error::custom(format!(
                "unknown field tag {other:?} (expected \"real\" or \"complex\")"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_real() {
        let m = SquareMatrix::<f64>::diagonal(&[2.0, 0.5]);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"field\":\"real\""));
        let back: SquareMatrix<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn json_round_trip_complex() {
        let m = SquareMatrix::<C64>::from_rows(&[
            vec![C64::new(0.0, 1.0), C64::new(2.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
        ])
        .unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: SquareMatrix<C64> = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn any_matrix_dispatches_on_field_tag() {
        let real = r#"{"dim":2,"field":"real","rows":[[1.0,0.0],[0.0,1.0]]}"#;
        assert!(matches!(
            serde_json::from_str::<AnyMatrix>(real).unwrap(),
            AnyMatrix::Real(_)
        ));
        let complex = r#"{"dim":1,"field":"complex","rows":[[[0.0,1.0]]]}"#;
        assert!(matches!(
            serde_json::from_str::<AnyMatrix>(complex).unwrap(),
            AnyMatrix::Complex(_)
        ));
        let bad = r#"{"dim":2,"field":"real","rows":[[1.0],[0.0,1.0]]}"#;
        assert!(serde_json::from_str::<AnyMatrix>(bad).is_err());
    }

    #[test]
    fn orthogonality_residual_detects_rotation() {
        let r = SquareMatrix::rotation2(0.7);
        assert!(r.orthogonality_residual() < 1e-15);
        assert!(r.is_special_linear());
        let not = SquareMatrix::<f64>::diagonal(&[2.0, 0.5]);
        assert!(not.orthogonality_residual() > 1.0);
    }

    #[test]
    fn empty_and_ragged_rejected() {
        assert!(SquareMatrix::<f64>::from_rows(&[]).is_err());
        assert!(SquareMatrix::<f64>::from_rows(&[vec![1.0, 2.0]]).is_err());
    }
}
