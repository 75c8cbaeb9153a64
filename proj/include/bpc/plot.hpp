#pragma once

#include <string>

#include "bpc/experiment.hpp"

namespace bpc {

/// Metric-vs-epoch curves from a metrics.csv: mean line plus a +-1 standard
/// deviation band across seeds. The plotted numbers are embedded in the SVG
/// as comment lines so figures stay diffable.
void write_curves_svg(const std::string& metrics_csv, const std::string& out_path);

/// 1-d regression uncertainty figure: training scatter, analytic predictive
/// mean with a +-2 SD band, and posterior-sample function draws.
void write_uncertainty_svg(const ModelFile& model, const ExperimentConfig& cfg,
                           const std::string& out_path, int n_draws = 10);

}  // namespace bpc
