//! Model file loading: a JSON document with either explicit coefficient
//! matrices or a balanced scalar band that is lifted to block form.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Deserialize;
use toeplitz_spectra::BlockSymbol;

/// On-disk schema. `R`, `V`, `T` are row-major `L*L` arrays of `[re, im]`
/// pairs; `scalar_band` is an odd-length array of `[re, im]` and replaces the
/// matrices entirely.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "L")]
    l: Option<usize>,
    #[serde(rename = "R")]
    r: Option<Vec<[f64; 2]>>,
    #[serde(rename = "V")]
    v: Option<Vec<[f64; 2]>>,
    #[serde(rename = "T")]
    t: Option<Vec<[f64; 2]>>,
    grading: Option<usize>,
    scalar_band: Option<Vec<[f64; 2]>>,
}

pub fn load_model(path: &Path) -> Result<BlockSymbol, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read model file {}: {e}", path.display()))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| format!("invalid model file: {e}"))?;
    let symbol = if let Some(band) = file.scalar_band {
        if file.r.is_some() || file.v.is_some() || file.t.is_some() {
            return Err("scalar_band excludes explicit R/V/T matrices".into());
        }
        if band.len() < 3 || band.len() % 2 == 0 {
            return Err("scalar_band must have odd length >= 3".into());
        }
        let coeffs: Vec<Complex64> = band
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        BlockSymbol::from_scalar_band(&coeffs).map_err(|e| e.to_string())?
    } else {
        let l = file.l.ok_or("field L is required without scalar_band")?;
        let to_matrix = |name: &str, data: Option<Vec<[f64; 2]>>| -> Result<Array2<Complex64>, String> {
            let data = data.ok_or_else(|| format!("field {name} is required"))?;
            if data.len() != l * l {
                return Err(format!(
                    "field {name} must have L*L = {} entries, got {}",
                    l * l,
                    data.len()
                ));
            }
            Ok(Array2::from_shape_vec(
                (l, l),
                data.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            )
            .expect("shape checked"))
        };
        let r = to_matrix("R", file.r)?;
        let v = to_matrix("V", file.v)?;
        let t = to_matrix("T", file.t)?;
        BlockSymbol::new(l, r, v, t).map_err(|e| e.to_string())?
    };
    match file.grading {
        Some(half) => symbol.with_grading(half).map_err(|e| e.to_string()),
        None => Ok(symbol),
    }
}
