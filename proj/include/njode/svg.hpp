#pragma once

#include <string>
#include <vector>

#include "njode/model.hpp"
#include "njode/paths.hpp"

namespace njode {

/// One test sample as an SVG: the input path with observation markers on top,
/// one panel per output coordinate below with the model prediction, the
/// reference trajectory and the true target. When var_mean_col/var_sq_col
/// name the two predicted moments, the mean panel gets a +-1 conditional-std
/// band.
void write_sample_plot_svg(const PathSample& sample, const ForwardTrace& model,
                           const ForwardTrace* reference, const std::vector<std::string>& names,
                           const std::string& file, int var_mean_col = -1, int var_sq_col = -1);

}  // namespace njode
