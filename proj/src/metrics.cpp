#include "njode/metrics.hpp"

#include <cmath>

#include "njode/errors.hpp"

namespace njode {

double evaluation_metric(const std::vector<ForwardTrace>& model,
                         const std::vector<ForwardTrace>& reference) {
    if (model.size() != reference.size() || model.empty())
        throw InvalidInputError("evaluation_metric: trace sets must align and be nonempty");
    double total = 0.0;
    for (std::size_t p = 0; p < model.size(); ++p) {
        const auto& a = model[p].G;
        const auto& b = reference[p].G;
        if (a.rows() != b.rows() || a.cols() != b.cols())
            throw InvalidInputError("evaluation_metric: grid/dimension mismatch at path " +
                                    std::to_string(p));
        total += (a - b).rowwise().squaredNorm().mean();
    }
    return total / static_cast<double>(model.size());
}

double dk_estimate(const std::vector<ForwardTrace>& model,
                   const std::vector<ForwardTrace>& reference, int k) {
    if (k < 1) throw InvalidInputError("dk_estimate: k >= 1 required");
    if (model.size() != reference.size() || model.empty())
        throw InvalidInputError("dk_estimate: trace sets must align and be nonempty");
    int qualifying = 0;
    double acc = 0.0;
    for (std::size_t p = 0; p < model.size(); ++p) {
        const int n = static_cast<int>(model[p].G_post.rows()) - 1;  // observations after t_0
        if (n < k) continue;
        if (reference[p].G_post.rows() != model[p].G_post.rows())
            throw InvalidInputError("dk_estimate: observation structure mismatch at path " +
                                    std::to_string(p));
        ++qualifying;
        acc += (model[p].G_left.row(k) - reference[p].G_left.row(k)).lpNorm<1>() +
               (model[p].G_post.row(k) - reference[p].G_post.row(k)).lpNorm<1>();
    }
    if (qualifying == 0)
        throw NumericalError("dk_estimate: undefined, no path has " + std::to_string(k) +
                             " observations");
    // c_0(k) = (share of paths with n >= k)^{-1} turns the mean over all
    // paths into the conditional mean over qualifying paths
    return acc / static_cast<double>(qualifying);
}

Vec cond_variance(const ForwardTrace& trace, int mean_col, int sq_col) {
    if (mean_col >= trace.G.cols() || sq_col >= trace.G.cols())
        throw InvalidInputError("cond_variance: trace lacks the moment coordinates");
    Vec out(trace.G.rows());
    for (Eigen::Index i = 0; i < trace.G.rows(); ++i) {
        const double m = trace.G(i, mean_col);
        out[i] = std::max(0.0, trace.G(i, sq_col) - m * m);
    }
    return out;
}

ErrorRow summarize_errors(const std::vector<double>& errors, double time, int coordinate,
                          const std::string& name) {
    ErrorRow row;
    row.time = time;
    row.coordinate = coordinate;
    row.name = name;
    const double n = static_cast<double>(errors.size());
    double mean = 0.0;
    for (double e : errors) mean += e;
    mean /= n;
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    var = (errors.size() > 1) ? var / (n - 1.0) : 0.0;
    row.mean_err = mean;
    row.std_err = std::sqrt(var);
    return row;
}

std::vector<ErrorRow> error_distribution(const std::vector<ForwardTrace>& predictions,
                                         const Dataset& ds, const std::vector<double>& eval_times) {
    if (static_cast<int>(predictions.size()) != ds.n())
        throw InvalidInputError("error_distribution: one prediction trace per dataset path required");
    std::vector<ErrorRow> rows;
    for (double t : eval_times) {
        const int idx = ds.grid->index_of(t);
        if (idx < 0) throw InvalidInputError("error_distribution: eval time not on the grid");
        for (int j = 0; j < ds.d_v(); ++j) {
            std::vector<double> errs(predictions.size());
            for (std::size_t p = 0; p < predictions.size(); ++p)
                errs[p] = predictions[p].G(idx, j) - ds.samples[p].v_dense(idx, j);
            rows.push_back(summarize_errors(
                errs, t, j, j < static_cast<int>(ds.output_names.size()) ? ds.output_names[j] : ""));
        }
    }
    return rows;
}

}  // namespace njode
