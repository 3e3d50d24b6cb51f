//! contours -> features -> k-means -> classify -> per-slice fit ->
//! compatibility -> loft -> tessellate.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use bspline_core::contours::{
    extract_features, read_contours, write_classification, Classification, ClusterModel, Contour,
    FeatureSelection,
};
use bspline_core::fitting::{write_fit_report, FitReportRow, Parameterization, DEFAULT_SECTION_CONTROLS};
use bspline_core::surface::{loft, make_sections_compatible, twist_metric, SectionFit};
use bspline_core::{ControlPoint, Error};

use crate::{open_input, sibling, write_atomic, CmdResult, Failure};

#[derive(Args)]
pub struct ReconstructArgs {
    /// Contour JSON dataset.
    contours: PathBuf,
    /// Id of a contour known to belong to the region of interest.
    #[arg(long)]
    roi_id: String,
    /// Number of k-means clusters.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Section curve degree.
    #[arg(long, default_value_t = 3)]
    degree: usize,
    /// Control points per section.
    #[arg(long, default_value_t = DEFAULT_SECTION_CONTROLS)]
    num_control: usize,
    #[arg(long, default_value_t = 3)]
    degree_v: usize,
    /// Control points across sections (default: about half the sections).
    #[arg(long)]
    num_control_v: Option<usize>,
    #[arg(long, default_value_t = 64)]
    res_u: usize,
    #[arg(long, default_value_t = 64)]
    res_v: usize,
    /// Distance between consecutive slice indices along z.
    #[arg(long, default_value_t = 1.0)]
    slice_spacing: f64,
    /// Hu invariants (1-based) used as features.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    hu: Vec<usize>,
    /// Leave the centroid out of the feature vector.
    #[arg(long)]
    no_centroid: bool,
    /// Use all seven Hu invariants and the centroid.
    #[arg(long, conflicts_with_all = ["hu", "no_centroid"])]
    all_features: bool,
    #[arg(long)]
    uniform: bool,
    /// Split each quad into two triangles in the OBJ.
    #[arg(long)]
    triangles: bool,
    /// OBJ mesh; `<stem>.classification.csv` and `<stem>.fit.csv` go beside it.
    #[arg(long)]
    out: PathBuf,
}

pub fn selection(no_centroid: bool, hu: &[usize]) -> Result<FeatureSelection, Failure> {
    Ok(FeatureSelection::new(!no_centroid, hu.to_vec())?)
}

/// Counter-clockwise, starting at the vertex closest in angle to the +x
/// direction from the centroid.
fn canonical_ring(c: &Contour, centroid: [f64; 2]) -> Vec<[f64; 2]> {
    let mut pts = c.points.clone();
    let twice_area: f64 = (0..pts.len())
        .map(|i| {
            let [x0, y0] = pts[i];
            let [x1, y1] = pts[(i + 1) % pts.len()];
            x0 * y1 - x1 * y0
        })
        .sum();
    if twice_area < 0.0 {
        pts.reverse();
    }
    let start = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p[1] - centroid[1]).atan2(p[0] - centroid[0]).abs()))
        .fold((0, f64::INFINITY), |best, (i, a)| if a < best.1 { (i, a) } else { best });
    pts.rotate_left(start.0);
    pts
}

pub fn run(args: &ReconstructArgs) -> CmdResult {
    if !(args.slice_spacing > 0.0 && args.slice_spacing.is_finite()) {
        return Err(Failure::new(3, "--slice-spacing must be positive"));
    }
    let selection = if args.all_features {
        FeatureSelection::all()
    } else {
        selection(args.no_centroid, &args.hu)?
    };
    let contours = read_contours(open_input(&args.contours)?)?;
    let exemplar = contours
        .iter()
        .position(|c| c.id == args.roi_id)
        .ok_or_else(|| Failure::new(3, format!("exemplar contour '{}' not found", args.roi_id)))?;
    let features = extract_features(&contours)?;
    let model = ClusterModel::fit(&features, selection, args.k, args.seed, &features[exemplar])?;

    let rows: Vec<Classification> = contours
        .iter()
        .zip(&features)
        .map(|(c, f)| {
            let (is_roi, distance) = model.classify_features(f);
            Classification {
                id: c.id.clone(),
                slice: c.slice_index,
                is_roi,
                distance,
            }
        })
        .collect();
    write_atomic(&sibling(&args.out, "classification.csv"), |w| write_classification(&rows, w))?;

    // one RoI contour per slice: the one nearest the RoI centroid
    let mut per_slice: BTreeMap<i64, usize> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate().filter(|(_, r)| r.is_roi) {
        per_slice
            .entry(r.slice)
            .and_modify(|best| {
                if r.distance < rows[*best].distance {
                    *best = i;
                }
            })
            .or_insert(i);
    }
    let roi_count = rows.iter().filter(|r| r.is_roi).count();
    log::info!("{roi_count} RoI contours on {} slices", per_slice.len());
    if per_slice.len() < args.degree_v + 1 {
        return Err(Error::Insufficient(format!(
            "RoI contours found on {} slices, lofting with degree {} needs at least {}",
            per_slice.len(),
            args.degree_v,
            args.degree_v + 1
        ))
        .into());
    }

    let scheme = if args.uniform {
        Parameterization::Uniform
    } else {
        Parameterization::ChordLength
    };
    let chosen: Vec<usize> = per_slice.values().copied().collect();
    let sections: Vec<SectionFit> = chosen
        .par_iter()
        .map(|&i| {
            let c = &contours[i];
            let z = c.slice_index as f64 * args.slice_spacing;
            let centroid = [features[i].cx, features[i].cy];
            let points: Vec<ControlPoint> = canonical_ring(c, centroid)
                .into_iter()
                .map(|[x, y]| ControlPoint::new(x, y, z))
                .collect();
            SectionFit::fit_closed(c.id.clone(), points, args.degree, args.num_control, scheme)
        })
        .collect::<bspline_core::Result<_>>()?;
    let compatible = make_sections_compatible(&sections)?;
    for (before, after) in sections.iter().zip(&compatible) {
        if after.residual_rms > 2.0 * before.residual_rms && after.residual_rms > 1e-9 {
            log::warn!(
                "section {}: residual grew from {:e} to {:e} on the common knot vector",
                after.id,
                before.residual_rms,
                after.residual_rms
            );
        }
    }
    let report: Vec<FitReportRow> = compatible
        .iter()
        .map(|s| FitReportRow {
            section_id: s.id.clone(),
            num_control: s.num_control,
            residual_rms: s.residual_rms,
        })
        .collect();
    write_atomic(&sibling(&args.out, "fit.csv"), |w| write_fit_report(&report, w))?;

    let curves: Vec<_> = compatible.into_iter().map(|s| s.curve).collect();
    let twist = twist_metric(&curves)?;
    let lofted = loft(&curves, args.degree_v, args.num_control_v)?;
    let mesh = lofted.surface.tessellate(args.res_u, args.res_v)?;
    write_atomic(&args.out, |w| mesh.write_obj(w, args.triangles))?;
    eprintln!("twist_metric {twist:e}");
    eprintln!(
        "wrote {} vertices, {} faces from {} sections",
        mesh.vertices.len(),
        mesh.quads.len() * if args.triangles { 2 } else { 1 },
        curves.len()
    );
    Ok(())
}
