#include "njode/references.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "njode/baselines.hpp"
#include "njode/errors.hpp"
#include "njode/particle.hpp"

namespace njode {

ReferenceKind reference_kind_from_string(const std::string& s) {
    if (s == "analytic") return ReferenceKind::Analytic;
    if (s == "pf") return ReferenceKind::Pf;
    if (s == "kalman") return ReferenceKind::Kalman;
    if (s == "stored") return ReferenceKind::Stored;
    throw ConfigError("unknown reference kind: " + s);
}

std::string to_string(ReferenceKind k) {
    switch (k) {
        case ReferenceKind::Analytic: return "analytic";
        case ReferenceKind::Pf: return "pf";
        case ReferenceKind::Kalman: return "kalman";
        case ReferenceKind::Stored: return "stored";
    }
    return "analytic";
}

void observed_input_series(const PathSample& s, bool exclude_t0, std::vector<double>& times,
                           std::vector<double>& values) {
    times.clear();
    values.clear();
    for (int e = 0; e < s.pattern.n_obs(); ++e) {
        if (exclude_t0 && e == 0) continue;
        if (s.pattern.mask(e, 0) != 1.0) continue;
        const int idx = s.pattern.obs_indices[e];
        times.push_back(s.grid->t[idx]);
        values.push_back(s.u_dense(idx, 0));
    }
}

namespace {

ForwardTrace empty_trace(const PathSample& s, int d_v) {
    ForwardTrace tr;
    tr.times = s.grid->t;
    tr.obs_grid_idx = s.pattern.obs_indices;
    tr.G.setZero(s.grid->size(), d_v);
    tr.G_left.setZero(s.pattern.n_obs(), d_v);
    tr.G_post.setZero(s.pattern.n_obs(), d_v);
    return tr;
}

/// Fills a step-function reference. row_of_prefix(k, t) is the prediction at
/// time t given the first k observation events (k = 0 is the prior).
template <typename RowOf>
void fill_stepwise(ForwardTrace& tr, const PathSample& s, RowOf&& row_of_prefix) {
    const int n_obs = s.pattern.n_obs();
    int e = 0;
    for (int g = 0; g < s.grid->size(); ++g) {
        while (e + 1 < n_obs && s.pattern.obs_indices[e + 1] <= g) ++e;
        tr.G.row(g) = row_of_prefix(e + 1, s.grid->t[g]);
    }
    for (int i = 0; i < n_obs; ++i) {
        tr.G_left.row(i) = row_of_prefix(i, s.grid->t[s.pattern.obs_indices[i]]);
        tr.G_post.row(i) = row_of_prefix(i + 1, s.grid->t[s.pattern.obs_indices[i]]);
    }
    tr.G_left.row(0) = tr.G_post.row(0);
}

/// informative[e] = number of events among {first..e} where input coordinate
/// 0 is visible; maps event-count prefixes to positions in the observed
/// series (events with a masked input carry no new value).
std::vector<int> informative_prefix(const PathSample& s, bool include_t0) {
    std::vector<int> cum(s.pattern.n_obs(), 0);
    int c = 0;
    for (int e = 0; e < s.pattern.n_obs(); ++e) {
        const bool counts = (e > 0 || include_t0) && s.pattern.mask(e, 0) == 1.0;
        if (counts) ++c;
        cum[e] = c;
    }
    return cum;
}

ForwardTrace bm_drift_trace(const PathSample& s, const ModelSpec& spec, bool with_sq, bool kalman) {
    std::vector<double> times, values;
    observed_input_series(s, true, times, values);
    const int d_v = with_sq ? 2 : 1;
    ForwardTrace tr = empty_trace(s, d_v);

    // prefix posteriors: k observation events include t_0, which carries no
    // information (X_0 = x0 deterministically)
    std::vector<Vec> rows(times.size() + 1);
    for (std::size_t k = 0; k <= times.size(); ++k) {
        const std::vector<double> ts(times.begin(), times.begin() + k);
        const std::vector<double> vs(values.begin(), values.begin() + k);
        const PosteriorGaussian post = kalman
                                           ? kalman_posterior(ts, vs, spec.x0, spec.sigma, spec.a, spec.b)
                                           : bm_drift_posterior(ts, vs, spec.x0, spec.sigma, spec.a, spec.b);
        Vec row(d_v);
        row[0] = post.scalar_mean();
        if (with_sq) row[1] = post.second_moment();
        rows[k] = row;
    }
    const std::vector<int> cum = informative_prefix(s, false);
    fill_stepwise(tr, s, [&](int prefix_events, double) -> Vec {
        const int k = prefix_events == 0 ? 0 : cum[prefix_events - 1];
        return rows[k];
    });
    return tr;
}

ForwardTrace bm_filter_trace(const PathSample& s, const ModelSpec& spec) {
    std::vector<double> times, values;
    observed_input_series(s, true, times, values);
    ForwardTrace tr = empty_trace(s, 1);
    std::vector<Vec> rows(times.size() + 1);
    for (std::size_t k = 0; k <= times.size(); ++k) {
        const std::vector<double> ts(times.begin(), times.begin() + k);
        const std::vector<double> vs(values.begin(), values.begin() + k);
        const double q = ts.empty() ? s.grid->T : ts.back();
        rows[k] = Vec::Constant(1, bm_filter_posterior(ts, vs, spec.alpha, q).scalar_mean());
    }
    const std::vector<int> cum = informative_prefix(s, false);
    fill_stepwise(tr, s, [&](int prefix_events, double) -> Vec {
        const int k = prefix_events == 0 ? 0 : cum[prefix_events - 1];
        return rows[k];
    });
    return tr;
}

ForwardTrace bm_class_trace(const PathSample& s, const ModelSpec& spec) {
    std::vector<double> times, values;
    observed_input_series(s, false, times, values);  // W_0 = 0 is informative here
    ForwardTrace tr = empty_trace(s, 1);
    const std::vector<int> cum = informative_prefix(s, true);
    fill_stepwise(tr, s, [&](int prefix_events, double t) -> Vec {
        const int k = prefix_events == 0 ? 0 : cum[prefix_events - 1];
        if (k == 0) return Vec::Constant(1, 0.5);  // vacuous, t_0 is always observed
        return Vec::Constant(1, bm_class_prob(values[k - 1], times[k - 1], t, spec.alpha));
    });
    return tr;
}

ForwardTrace gbm_self_trace(const PathSample& s, const ModelSpec& spec) {
    std::vector<double> times, values;
    observed_input_series(s, false, times, values);
    ForwardTrace tr = empty_trace(s, 1);
    const std::vector<int> cum = informative_prefix(s, true);
    fill_stepwise(tr, s, [&](int prefix_events, double t) -> Vec {
        const int k = prefix_events == 0 ? 0 : cum[prefix_events - 1];
        if (k == 0) return Vec::Constant(1, spec.x0);
        return Vec::Constant(1, values[k - 1] * std::exp(spec.mu * (t - times[k - 1])));
    });
    return tr;
}

ForwardTrace pf_trace(const PathSample& s, const ModelSpec& spec, int n_particles,
                      std::uint64_t seed, int path_idx, int* resets) {
    const bool cir = spec.kind == ModelKind::CIRUncertain;
    const int d_v = cir ? 3 : 2;
    ForwardTrace tr = empty_trace(s, d_v);
    std::vector<double> times, values;
    observed_input_series(s, false, times, values);

    ParticleSet ps = pf_init(spec, n_particles, stream_key(seed, 0xBF, path_idx));
    // estimates[k] = parameter estimate after k correction steps
    std::vector<Vec> estimates{pf_estimate(ps)};
    for (std::size_t i = 1; i < times.size(); ++i) {
        ps = pf_update(ps, spec, values[i - 1], values[i], times[i] - times[i - 1], times[i - 1],
                       par::Exec::Serial);
        estimates.push_back(pf_estimate(ps));
    }
    if (resets) *resets += ps.reset_events;

    auto row_at = [&](int k, double t) -> Vec {
        const Vec& e = estimates[std::min<int>(k, static_cast<int>(estimates.size()) - 1)];
        Vec row(d_v);
        if (cir) {
            row[0] = e[0];
            row[1] = spec.w ? e[1] * (1.0 + std::sin(*spec.w * t) / 2.0) : e[1];
            row[2] = e[2];
        } else {
            row = e;
        }
        return row;
    };
    const std::vector<int> cum = informative_prefix(s, true);
    fill_stepwise(tr, s, [&](int prefix_events, double t) -> Vec {
        // k observed values allow k - 1 correction steps
        const int m = prefix_events == 0 ? 0 : cum[prefix_events - 1];
        return row_at(std::max(0, m - 1), t);
    });
    return tr;
}

}  // namespace

std::vector<ForwardTrace> model_traces(const NjodeParams& params, const Dataset& ds,
                                       par::Exec exec) {
    params.validate();
    std::vector<ForwardTrace> out(ds.n());
    par::for_each_index(ds.n(), exec, [&](int i) { out[i] = forward_path(params, ds.samples[i]); });
    return out;
}

std::vector<ForwardTrace> build_reference_traces(const Dataset& ds, ReferenceKind kind,
                                                 int pf_particles, std::uint64_t seed,
                                                 par::Exec exec, int* pf_reset_events) {
    const bool with_sq = ds.config.include_squared_target;
    std::vector<ForwardTrace> out(ds.n());
    std::vector<int> resets(ds.n(), 0);
    par::for_each_index(ds.n(), exec, [&](int i) {
        const PathSample& s = ds.samples[i];
        switch (kind) {
            case ReferenceKind::Analytic:
                switch (ds.spec.kind) {
                    case ModelKind::BMDrift: out[i] = bm_drift_trace(s, ds.spec, with_sq, false); break;
                    case ModelKind::BMFilter: out[i] = bm_filter_trace(s, ds.spec); break;
                    case ModelKind::BMClass: out[i] = bm_class_trace(s, ds.spec); break;
                    case ModelKind::GBMSelf: out[i] = gbm_self_trace(s, ds.spec); break;
                    default:
                        throw ConfigError(
                            "analytic reference unavailable for this dataset, use 'pf'");
                }
                break;
            case ReferenceKind::Kalman:
                if (ds.spec.kind != ModelKind::BMDrift)
                    throw ConfigError("kalman reference only covers the BMDrift dataset");
                out[i] = bm_drift_trace(s, ds.spec, with_sq, true);
                break;
            case ReferenceKind::Pf:
                if (ds.spec.kind != ModelKind::GBMUncertain && ds.spec.kind != ModelKind::CIRUncertain)
                    throw ConfigError("pf reference covers GBMUncertain and CIRUncertain datasets");
                out[i] = pf_trace(s, ds.spec, pf_particles, seed, i, &resets[i]);
                break;
            case ReferenceKind::Stored:
                throw ConfigError("stored reference is loaded from disk, not built");
        }
    });
    if (pf_reset_events) {
        *pf_reset_events = 0;
        for (int r : resets) *pf_reset_events += r;
    }
    return out;
}

void write_traces_csv(const std::vector<ForwardTrace>& traces,
                      const std::vector<std::string>& names, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("write_traces_csv: cannot write " + path);
    f << "path,time,is_obs";
    for (const auto& n : names) f << "," << n;
    for (const auto& n : names) f << ",left_" << n;
    f << "\n";
    char buf[40];
    for (std::size_t p = 0; p < traces.size(); ++p) {
        const ForwardTrace& tr = traces[p];
        std::map<int, int> obs_of_grid;
        for (std::size_t i = 0; i < tr.obs_grid_idx.size(); ++i) obs_of_grid[tr.obs_grid_idx[i]] = static_cast<int>(i);
        for (std::size_t g = 0; g < tr.times.size(); ++g) {
            const auto it = obs_of_grid.find(static_cast<int>(g));
            const bool is_obs = it != obs_of_grid.end();
            f << p << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", tr.times[g]);
            f << buf << "," << (is_obs ? 1 : 0);
            for (Eigen::Index j = 0; j < tr.G.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", tr.G(static_cast<Eigen::Index>(g), j));
                f << "," << buf;
            }
            for (Eigen::Index j = 0; j < tr.G.cols(); ++j) {
                const double v = is_obs ? tr.G_left(it->second, j)
                                        : tr.G(static_cast<Eigen::Index>(g), j);
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                f << "," << buf;
            }
            f << "\n";
        }
    }
}

std::vector<ForwardTrace> read_traces_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("read_traces_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError("read_traces_csv: empty file " + path);
    int n_cols = 1;
    for (char c : line) n_cols += (c == ',');
    if (n_cols < 5 || (n_cols - 3) % 2 != 0)
        throw ParseError("read_traces_csv: unexpected header in " + path);
    const int d_v = (n_cols - 3) / 2;

    struct Row {
        int path;
        double time;
        int is_obs;
        std::vector<double> g, gl;
    };
    std::vector<Row> rows;
    int line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Row r;
        r.g.resize(d_v);
        r.gl.resize(d_v);
        try {
            std::getline(ss, cell, ',');
            r.path = std::stoi(cell);
            std::getline(ss, cell, ',');
            r.time = std::stod(cell);
            std::getline(ss, cell, ',');
            r.is_obs = std::stoi(cell);
            for (int j = 0; j < d_v; ++j) {
                std::getline(ss, cell, ',');
                r.g[j] = std::stod(cell);
            }
            for (int j = 0; j < d_v; ++j) {
                std::getline(ss, cell, ',');
                r.gl[j] = std::stod(cell);
            }
        } catch (const std::exception&) {
            throw ParseError("read_traces_csv: bad row at line " + std::to_string(line_no));
        }
        rows.push_back(std::move(r));
    }

    std::vector<ForwardTrace> out;
    for (std::size_t i = 0; i < rows.size();) {
        const int p = rows[i].path;
        std::size_t j = i;
        while (j < rows.size() && rows[j].path == p) ++j;
        ForwardTrace tr;
        std::vector<int> obs_idx;
        for (std::size_t g = i; g < j; ++g) {
            tr.times.push_back(rows[g].time);
            if (rows[g].is_obs) obs_idx.push_back(static_cast<int>(g - i));
        }
        tr.obs_grid_idx = obs_idx;
        tr.G.resize(static_cast<Eigen::Index>(j - i), d_v);
        tr.G_left.resize(static_cast<Eigen::Index>(obs_idx.size()), d_v);
        tr.G_post.resize(static_cast<Eigen::Index>(obs_idx.size()), d_v);
        int obs = 0;
        for (std::size_t g = i; g < j; ++g) {
            for (int c = 0; c < d_v; ++c) tr.G(static_cast<Eigen::Index>(g - i), c) = rows[g].g[c];
            if (rows[g].is_obs) {
                for (int c = 0; c < d_v; ++c) {
                    tr.G_left(obs, c) = rows[g].gl[c];
                    tr.G_post(obs, c) = rows[g].g[c];
                }
                ++obs;
            }
        }
        out.push_back(std::move(tr));
        i = j;
    }
    return out;
}

}  // namespace njode
