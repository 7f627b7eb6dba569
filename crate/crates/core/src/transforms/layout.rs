//! Subband index layout of a decimated 2D wavelet decomposition.
//!
//! Coefficients are stored as one flat vector: the approximation subband
//! first, then for each scale from coarsest (`s`) to finest (`1`) the
//! horizontal, vertical and diagonal details. Each subband is a row-major
//! block of its own.

use std::fmt;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
    Diagonal,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [
        Orientation::Horizontal,
        Orientation::Vertical,
        Orientation::Diagonal,
    ];

    fn tag(self) -> &'static str {
        match self {
            Orientation::Horizontal => "H",
            Orientation::Vertical => "V",
            Orientation::Diagonal => "D",
        }
    }
}

/// Identity of one subband. Scale 1 is the finest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubbandKind {
    Approximation {
        scale: usize,
    },
    Detail {
        scale: usize,
        orientation: Orientation,
    },
}

impl SubbandKind {
    pub fn scale(&self) -> usize {
        match *self {
            SubbandKind::Approximation { scale } | SubbandKind::Detail { scale, .. } => scale,
        }
    }
}

/// Parses the [`fmt::Display`] form: `A<s>`, `H<s>`, `V<s>` or `D<s>`.
impl std::str::FromStr for SubbandKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad =
            || Error::InvalidArgument(format!("subband {s:?} is not of the form A4, H2, V1, D3"));
        let mut chars = s.chars();
        let tag = chars.next().ok_or_else(bad)?;
        let scale: usize = chars.as_str().parse().map_err(|_| bad())?;
        if scale == 0 {
            return Err(bad());
        }
        let orientation = match tag.to_ascii_uppercase() {
            'A' => return Ok(SubbandKind::Approximation { scale }),
            'H' => Orientation::Horizontal,
            'V' => Orientation::Vertical,
            'D' => Orientation::Diagonal,
            _ => return Err(bad()),
        };
        Ok(SubbandKind::Detail { scale, orientation })
    }
}

impl fmt::Display for SubbandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubbandKind::Approximation { scale } => write!(f, "A{scale}"),
            SubbandKind::Detail { scale, orientation } => write!(f, "{}{scale}", orientation.tag()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subband {
    pub kind: SubbandKind,
    pub rows: usize,
    pub cols: usize,
    pub range: Range<usize>,
}

impl Subband {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubbandLayout {
    height: usize,
    width: usize,
    scales: usize,
    bands: Vec<Subband>,
}

impl SubbandLayout {
    /// Errors if either axis is not divisible by `2^scales`.
    pub fn new(height: usize, width: usize, scales: usize) -> Result<Self> {
        if scales == 0 {
            return Err(Error::InvalidArgument("wavelet scales must be >= 1".into()));
        }
        let block = 1usize << scales;
        if height == 0 || !height.is_multiple_of(block) {
            return Err(Error::NotDyadic {
                axis: "height",
                size: height,
                scales,
            });
        }
        if width == 0 || !width.is_multiple_of(block) {
            return Err(Error::NotDyadic {
                axis: "width",
                size: width,
                scales,
            });
        }

        let mut bands = Vec::with_capacity(3 * scales + 1);
        let mut offset = 0;
        let mut push = |kind, rows: usize, cols: usize| {
            bands.push(Subband {
                kind,
                rows,
                cols,
                range: offset..offset + rows * cols,
            });
            offset += rows * cols;
        };
        push(
            SubbandKind::Approximation { scale: scales },
            height >> scales,
            width >> scales,
        );
        for scale in (1..=scales).rev() {
            for orientation in Orientation::ALL {
                push(
                    SubbandKind::Detail { scale, orientation },
                    height >> scale,
                    width >> scale,
                );
            }
        }
        Ok(Self {
            height,
            width,
            scales,
            bands,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    /// Total number of coefficients N.
    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_subbands(&self) -> usize {
        self.bands.len()
    }

    pub fn subbands(&self) -> &[Subband] {
        &self.bands
    }

    pub fn subband(&self, b: usize) -> &Subband {
        &self.bands[b]
    }

    pub fn find(&self, kind: SubbandKind) -> Option<usize> {
        self.bands.iter().position(|band| band.kind == kind)
    }

    /// Index of the subband containing flat coefficient `j`.
    pub fn subband_of(&self, j: usize) -> usize {
        self.bands.partition_point(|band| band.range.end <= j)
    }

    pub(crate) fn detail(&self, scale: usize, orientation: Orientation) -> &Subband {
        let idx = 1
            + 3 * (self.scales - scale)
            + Orientation::ALL
                .iter()
                .position(|&o| o == orientation)
                .unwrap();
        &self.bands[idx]
    }
}

/// One real value per subband, expandable to a piecewise-constant vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandVector {
    layout: SubbandLayout,
    values: Vec<f64>,
}

impl SubbandVector {
    pub fn new(layout: SubbandLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.num_subbands() {
            return Err(Error::LengthMismatch {
                expected: layout.num_subbands(),
                got: values.len(),
            });
        }
        Ok(Self { layout, values })
    }

    pub fn constant(layout: &SubbandLayout, value: f64) -> Self {
        Self {
            values: vec![value; layout.num_subbands()],
            layout: layout.clone(),
        }
    }

    pub fn from_fn(layout: &SubbandLayout, f: impl FnMut(usize) -> f64) -> Self {
        Self {
            values: (0..layout.num_subbands()).map(f).collect(),
            layout: layout.clone(),
        }
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, b: usize) -> f64 {
        self.values[b]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            layout: self.layout.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn expand(&self) -> Vec<f64> {
        subband_expand(self)
    }
}

/// Mean of `vec` over each subband's index set.
pub fn subband_average(vec: &[f64], layout: &SubbandLayout) -> Result<SubbandVector> {
    if vec.len() != layout.len() {
        return Err(Error::LengthMismatch {
            expected: layout.len(),
            got: vec.len(),
        });
    }
    let values = layout
        .subbands()
        .iter()
        .map(|band| vec[band.range.clone()].iter().sum::<f64>() / band.len() as f64)
        .collect();
    Ok(SubbandVector {
        layout: layout.clone(),
        values,
    })
}

pub fn subband_expand(sv: &SubbandVector) -> Vec<f64> {
    let mut out = vec![0.0; sv.layout.len()];
    for (band, &v) in sv.layout.subbands().iter().zip(&sv.values) {
        out[band.range.clone()].fill(v);
    }
    out
}

/// Wavelet coefficients of one image, ordered per [`SubbandLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    layout: SubbandLayout,
    data: Vec<Complex64>,
}

impl WaveletCoeffs {
    pub fn new(layout: SubbandLayout, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != layout.len() {
            return Err(Error::LengthMismatch {
                expected: layout.len(),
                got: data.len(),
            });
        }
        Ok(Self { layout, data })
    }

    pub fn zeros(layout: &SubbandLayout) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); layout.len()],
            layout: layout.clone(),
        }
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn scales(&self) -> usize {
        self.layout.scales()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.layout.shape()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn subband(&self, b: usize) -> &[Complex64] {
        &self.data[self.layout.subband(b).range.clone()]
    }

    pub fn subband_mut(&mut self, b: usize) -> &mut [Complex64] {
        let range = self.layout.subband(b).range.clone();
        &mut self.data[range]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn ensure_compatible(&self, other: &WaveletCoeffs) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn subband_kind_parses_its_display_form() {
        let layout = SubbandLayout::new(64, 64, 3).unwrap();
        for sb in layout.subbands() {
            assert_eq!(sb.kind.to_string().parse::<SubbandKind>().unwrap(), sb.kind);
        }
        assert_eq!(
            "d1".parse::<SubbandKind>().unwrap(),
            SubbandKind::Detail {
                scale: 1,
                orientation: Orientation::Diagonal
            }
        );
        for bad in ["", "D", "X1", "H0", "V-1", "A2x"] {
            assert!(bad.parse::<SubbandKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn subband_sizes_follow_scale() {
        let layout = SubbandLayout::new(64, 32, 3).unwrap();
        assert_eq!(layout.num_subbands(), 10);
        let n = 64 * 32;
        let total: usize = layout.subbands().iter().map(Subband::len).sum();
        assert_eq!(total, n);
        for band in layout.subbands() {
            match band.kind {
                SubbandKind::Approximation { scale } => assert_eq!(band.len(), n >> (2 * scale)),
                SubbandKind::Detail { scale, .. } => assert_eq!(band.len(), n >> (2 * scale)),
            }
        }
        // contiguous and disjoint
        let mut end = 0;
        for band in layout.subbands() {
            assert_eq!(band.range.start, end);
            end = band.range.end;
        }
        assert_eq!(
            layout.subbands()[0].kind,
            SubbandKind::Approximation { scale: 3 }
        );
        assert_eq!(
            layout.subbands()[9].kind,
            SubbandKind::Detail {
                scale: 1,
                orientation: Orientation::Diagonal
            }
        );
    }

    #[test]
    fn non_dyadic_shape_names_axis() {
        match SubbandLayout::new(64, 40, 4) {
            Err(Error::NotDyadic { axis, .. }) => assert_eq!(axis, "width"),
            other => panic!("unexpected {other:?}"),
        }
        match SubbandLayout::new(12, 64, 3) {
            Err(Error::NotDyadic { axis, .. }) => assert_eq!(axis, "height"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subband_of_inverts_ranges() {
        let layout = SubbandLayout::new(16, 16, 2).unwrap();
        for (b, band) in layout.subbands().iter().enumerate() {
            assert_eq!(layout.subband_of(band.range.start), b);
            assert_eq!(layout.subband_of(band.range.end - 1), b);
        }
    }

    #[test]
    fn average_of_ones_and_indicators() {
        let layout = SubbandLayout::new(16, 16, 2).unwrap();
        let avg = subband_average(&vec![1.0; 256], &layout).unwrap();
        assert!(avg.values().iter().all(|&v| v == 1.0));

        for b in 0..layout.num_subbands() {
            let mut ind = vec![0.0; 256];
            ind[layout.subband(b).range.clone()].fill(1.0);
            let avg = subband_average(&ind, &layout).unwrap();
            for (b2, &v) in avg.values().iter().enumerate() {
                assert_eq!(v, if b2 == b { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn average_matches_naive_loop() {
        use rand::Rng;
        let layout = SubbandLayout::new(32, 32, 3).unwrap();
        let mut rng = crate::rng::seeded(9);
        let vec: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
        let avg = subband_average(&vec, &layout).unwrap();
        for b in 0..layout.num_subbands() {
            let mut sum = 0.0;
            let mut count = 0;
            for (j, v) in vec.iter().enumerate() {
                if layout.subband_of(j) == b {
                    sum += v;
                    count += 1;
                }
            }
            assert_eq!(avg.get(b), sum / count as f64);
        }
    }

    #[test]
    fn expand_zero_and_single_band() {
        let layout = SubbandLayout::new(8, 8, 1).unwrap();
        assert!(SubbandVector::constant(&layout, 0.0)
            .expand()
            .iter()
            .all(|&v| v == 0.0));
        let sv = SubbandVector::constant(&layout, 2.5);
        assert!(sv.expand().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn length_mismatch_rejected() {
        let layout = SubbandLayout::new(8, 8, 1).unwrap();
        assert!(subband_average(&[1.0; 10], &layout).is_err());
        assert!(SubbandVector::new(layout, vec![0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn expand_then_average_is_identity(values in proptest::collection::vec(-1e3f64..1e3, 7)) {
            let layout = SubbandLayout::new(32, 16, 2).unwrap();
            let sv = SubbandVector::new(layout.clone(), values).unwrap();
            let back = subband_average(&subband_expand(&sv), &layout).unwrap();
            for (a, b) in back.values().iter().zip(sv.values()) {
                // mean of identical values can round by an ulp
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
