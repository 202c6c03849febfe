#include "njode/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "njode/errors.hpp"
#include "njode/metrics.hpp"

namespace njode {

namespace {

constexpr double kWidth = 840, kPanelH = 200, kMarginL = 60, kMarginR = 20, kMarginT = 24,
                 kMarginB = 30;

struct Panel {
    double y0;
    double lo, hi;  // value range
    double t_lo, t_hi;

    double px(double t) const {
        return kMarginL + (t - t_lo) / (t_hi - t_lo) * (kWidth - kMarginL - kMarginR);
    }
    double py(double v) const {
        const double h = kPanelH - kMarginT - kMarginB;
        return y0 + kMarginT + (hi - v) / (hi - lo) * h;
    }
};

std::string polyline(const Panel& p, const std::vector<double>& t, const std::vector<double>& v,
                     const char* color, bool dashed = false, double width = 1.5) {
    std::ostringstream ss;
    ss << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"";
    if (dashed) ss << " stroke-dasharray=\"5,4\"";
    ss << " points=\"";
    for (std::size_t i = 0; i < t.size(); ++i) ss << p.px(t[i]) << "," << p.py(v[i]) << " ";
    ss << "\"/>\n";
    return ss.str();
}

void grow_range(double& lo, double& hi, double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
}

}  // namespace

void write_sample_plot_svg(const PathSample& sample, const ForwardTrace& model,
                           const ForwardTrace* reference, const std::vector<std::string>& names,
                           const std::string& file, int var_mean_col, int var_sq_col) {
    const int d_v = sample.d_v();
    const int n_panels = 1 + d_v;
    const auto& t = sample.grid->t;

    Vec stddev;
    if (var_mean_col >= 0 && var_sq_col >= 0)
        stddev = cond_variance(model, var_mean_col, var_sq_col).cwiseSqrt();

    std::ofstream f(file);
    if (!f) throw ConfigError("write_sample_plot_svg: cannot write " + file);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kPanelH * n_panels << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    auto draw_axes = [&](const Panel& p, const std::string& label) {
        f << "<line x1=\"" << kMarginL << "\" y1=\"" << p.py(p.lo) << "\" x2=\"" << kWidth - kMarginR
          << "\" y2=\"" << p.py(p.lo) << "\" stroke=\"#888\"/>\n";
        f << "<line x1=\"" << kMarginL << "\" y1=\"" << p.py(p.lo) << "\" x2=\"" << kMarginL
          << "\" y2=\"" << p.py(p.hi) << "\" stroke=\"#888\"/>\n";
        f << "<text x=\"" << kMarginL - 52 << "\" y=\"" << p.y0 + kMarginT + 10 << "\">"
          << label << "</text>\n";
        f << "<text x=\"" << kMarginL - 52 << "\" y=\"" << p.py(p.hi) + 4 << "\" fill=\"#555\">"
          << p.hi << "</text>\n";
        f << "<text x=\"" << kMarginL - 52 << "\" y=\"" << p.py(p.lo) << "\" fill=\"#555\">" << p.lo
          << "</text>\n";
    };

    // input panel
    {
        Panel p{0.0, 1e300, -1e300, t.front(), t.back()};
        for (int k = 0; k < sample.grid->size(); ++k) grow_range(p.lo, p.hi, sample.u_dense(k, 0));
        if (p.lo == p.hi) {
            p.lo -= 1;
            p.hi += 1;
        }
        draw_axes(p, "input U");
        std::vector<double> v(sample.grid->size());
        for (int k = 0; k < sample.grid->size(); ++k) v[k] = sample.u_dense(k, 0);
        f << polyline(p, t, v, "#444", false, 1.0);
        for (int e = 0; e < sample.pattern.n_obs(); ++e) {
            if (sample.pattern.mask(e, 0) != 1.0) continue;
            const int idx = sample.pattern.obs_indices[e];
            f << "<circle cx=\"" << p.px(t[idx]) << "\" cy=\"" << p.py(sample.u_dense(idx, 0))
              << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
        }
    }

    for (int j = 0; j < d_v; ++j) {
        Panel p{kPanelH * (1.0 + j), 1e300, -1e300, t.front(), t.back()};
        for (int k = 0; k < sample.grid->size(); ++k) {
            grow_range(p.lo, p.hi, sample.v_dense(k, j));
            grow_range(p.lo, p.hi, model.G(k, j));
            if (reference) grow_range(p.lo, p.hi, reference->G(k, j));
            if (j == var_mean_col && stddev.size() > 0) {
                grow_range(p.lo, p.hi, model.G(k, j) + stddev[k]);
                grow_range(p.lo, p.hi, model.G(k, j) - stddev[k]);
            }
        }
        if (p.lo == p.hi) {
            p.lo -= 1;
            p.hi += 1;
        }
        const std::string label = (j < static_cast<int>(names.size())) ? names[j]
                                                                       : "output " + std::to_string(j);
        draw_axes(p, label);

        if (j == var_mean_col && stddev.size() > 0) {
            std::ostringstream band;
            band << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (int k = 0; k < sample.grid->size(); ++k)
                band << p.px(t[k]) << "," << p.py(model.G(k, j) + stddev[k]) << " ";
            for (int k = sample.grid->size() - 1; k >= 0; --k)
                band << p.px(t[k]) << "," << p.py(model.G(k, j) - stddev[k]) << " ";
            band << "\"/>\n";
            f << band.str();
        }

        std::vector<double> truth(sample.grid->size()), pred(sample.grid->size());
        for (int k = 0; k < sample.grid->size(); ++k) {
            truth[k] = sample.v_dense(k, j);
            pred[k] = model.G(k, j);
        }
        f << polyline(p, t, truth, "#999", false, 1.0);
        if (reference) {
            std::vector<double> ref(sample.grid->size());
            for (int k = 0; k < sample.grid->size(); ++k) ref[k] = reference->G(k, j);
            f << polyline(p, t, ref, "#2ca02c", true);
        }
        f << polyline(p, t, pred, "#1f77b4");
        for (int e = 0; e < sample.pattern.n_obs(); ++e) {
            if (sample.pattern.mask(e, sample.d_u() + j) != 1.0) continue;
            const int idx = sample.pattern.obs_indices[e];
            f << "<circle cx=\"" << p.px(t[idx]) << "\" cy=\"" << p.py(sample.v_dense(idx, j))
              << "\" r=\"3\" fill=\"#d62728\"/>\n";
        }
    }
    f << "</svg>\n";
}

}  // namespace njode
