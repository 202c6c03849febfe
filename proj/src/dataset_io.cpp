#include "njode/dataset_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "njode/errors.hpp"

namespace njode {

namespace {

const char* kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::BMDrift: return "bm_drift";
        case ModelKind::GBMUncertain: return "gbm_uncertain";
        case ModelKind::CIRUncertain: return "cir_uncertain";
        case ModelKind::BMFilter: return "bm_filter";
        case ModelKind::BMClass: return "bm_class";
        case ModelKind::GBMSelf: return "gbm_self";
    }
    return "bm_drift";
}

ModelKind kind_from_name(const std::string& s) {
    if (s == "bm_drift") return ModelKind::BMDrift;
    if (s == "gbm_uncertain") return ModelKind::GBMUncertain;
    if (s == "cir_uncertain") return ModelKind::CIRUncertain;
    if (s == "bm_filter") return ModelKind::BMFilter;
    if (s == "bm_class") return ModelKind::BMClass;
    if (s == "gbm_self") return ModelKind::GBMSelf;
    throw ConfigError("unknown model kind: " + s);
}

struct NumWriter {
    std::string buf;
    void num(double v) {
        char tmp[40];
        std::snprintf(tmp, sizeof(tmp), "%.17g", v);
        buf += tmp;
    }
    void raw(const char* s) { buf += s; }
    void raw(const std::string& s) { buf += s; }
};

void write_vector(NumWriter& w, const double* data, int n) {
    w.raw("[");
    for (int i = 0; i < n; ++i) {
        if (i) w.raw(",");
        w.num(data[i]);
    }
    w.raw("]");
}

void write_matrix(NumWriter& w, const RowMat& m) {
    w.raw("[");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i) w.raw(",");
        write_vector(w, &m(i, 0), static_cast<int>(m.cols()));
    }
    w.raw("]");
}

RowMat matrix_from_json(const Json& j, int cols, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected array of rows");
    RowMat m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& row = j[i];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw ParseError(where + ": row " + std::to_string(i) + " has wrong width");
        for (int c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = row[c].get<double>();
    }
    return m;
}

}  // namespace

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

Json spec_to_json(const ModelSpec& s) {
    Json j;
    j["kind"] = kind_name(s.kind);
    switch (s.kind) {
        case ModelKind::BMDrift:
            j["x0"] = s.x0;
            j["sigma"] = s.sigma;
            j["a"] = s.a;
            j["b"] = s.b;
            break;
        case ModelKind::GBMUncertain:
            j["x0"] = s.x0;
            j["a"] = s.a;
            j["b"] = s.b;
            j["sigma_min"] = s.sigma_min;
            j["sigma_max"] = s.sigma_max;
            break;
        case ModelKind::CIRUncertain:
            j["x0"] = s.x0;
            j["a_min"] = s.a_min;
            j["a_max"] = s.a_max;
            j["b_min"] = s.b_min;
            j["b_max"] = s.b_max;
            j["sigma_min"] = s.sigma_min;
            j["sigma_max"] = s.sigma_max;
            if (s.w) j["w"] = *s.w;
            j["strict_positivity"] = s.cir_strict_positivity;
            break;
        case ModelKind::BMFilter:
        case ModelKind::BMClass:
            j["alpha"] = s.alpha;
            break;
        case ModelKind::GBMSelf:
            j["x0"] = s.x0;
            j["mu"] = s.mu;
            j["sigma"] = s.sigma;
            break;
    }
    return j;
}

ModelSpec spec_from_json(const Json& j) {
    if (!j.contains("kind")) throw ConfigError("model spec: missing 'kind'");
    const ModelKind kind = kind_from_name(j.at("kind").get<std::string>());
    ModelSpec s;
    s.kind = kind;
    switch (kind) {
        case ModelKind::BMDrift:
            check_keys(j, {"kind", "x0", "sigma", "a", "b"}, "bm_drift spec");
            s.x0 = j.at("x0").get<double>();
            s.sigma = j.at("sigma").get<double>();
            s.a = j.at("a").get<double>();
            s.b = j.at("b").get<double>();
            break;
        case ModelKind::GBMUncertain:
            check_keys(j, {"kind", "x0", "a", "b", "sigma_min", "sigma_max"}, "gbm_uncertain spec");
            s.x0 = j.at("x0").get<double>();
            s.a = j.at("a").get<double>();
            s.b = j.at("b").get<double>();
            s.sigma_min = j.at("sigma_min").get<double>();
            s.sigma_max = j.at("sigma_max").get<double>();
            break;
        case ModelKind::CIRUncertain:
            check_keys(j,
                       {"kind", "x0", "a_min", "a_max", "b_min", "b_max", "sigma_min", "sigma_max",
                        "w", "strict_positivity"},
                       "cir_uncertain spec");
            s.x0 = j.at("x0").get<double>();
            s.a_min = j.at("a_min").get<double>();
            s.a_max = j.at("a_max").get<double>();
            s.b_min = j.at("b_min").get<double>();
            s.b_max = j.at("b_max").get<double>();
            s.sigma_min = j.at("sigma_min").get<double>();
            s.sigma_max = j.at("sigma_max").get<double>();
            if (j.contains("w")) s.w = j.at("w").get<double>();
            if (j.contains("strict_positivity"))
                s.cir_strict_positivity = j.at("strict_positivity").get<bool>();
            break;
        case ModelKind::BMFilter:
        case ModelKind::BMClass:
            check_keys(j, {"kind", "alpha"}, "bm spec");
            s.alpha = j.at("alpha").get<double>();
            break;
        case ModelKind::GBMSelf:
            check_keys(j, {"kind", "x0", "mu", "sigma"}, "gbm_self spec");
            s.x0 = j.at("x0").get<double>();
            s.mu = j.at("mu").get<double>();
            s.sigma = j.at("sigma").get<double>();
            break;
    }
    s.validate();
    return s;
}

Json generation_config_to_json(const GenerationConfig& c) {
    Json j;
    j["n_paths"] = c.n_paths;
    j["T"] = c.T;
    j["n_steps"] = c.n_steps;
    j["obs_probability"] = c.obs_probability;
    j["seed"] = c.seed;
    j["train_fraction"] = c.train_fraction;
    j["test_paths"] = c.test_paths;
    j["include_squared_target"] = c.include_squared_target;
    j["noise_std"] = c.noise_std;
    j["mask_mode"] = (c.mask_mode == MaskMode::Full) ? "full" : "per_coordinate";
    j["p_mask"] = c.p_mask;
    return j;
}

GenerationConfig generation_config_from_json(const Json& j) {
    check_keys(j,
               {"n_paths", "T", "n_steps", "obs_probability", "seed", "train_fraction", "test_paths",
                "include_squared_target", "noise_std", "mask_mode", "p_mask"},
               "generation config");
    GenerationConfig c;
    if (j.contains("n_paths")) c.n_paths = j.at("n_paths").get<int>();
    if (j.contains("T")) c.T = j.at("T").get<double>();
    if (j.contains("n_steps")) c.n_steps = j.at("n_steps").get<int>();
    if (j.contains("obs_probability")) c.obs_probability = j.at("obs_probability").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("train_fraction")) c.train_fraction = j.at("train_fraction").get<double>();
    if (j.contains("test_paths")) c.test_paths = j.at("test_paths").get<int>();
    if (j.contains("include_squared_target"))
        c.include_squared_target = j.at("include_squared_target").get<bool>();
    if (j.contains("noise_std")) c.noise_std = j.at("noise_std").get<double>();
    if (j.contains("mask_mode")) {
        const std::string m = j.at("mask_mode").get<std::string>();
        if (m == "full")
            c.mask_mode = MaskMode::Full;
        else if (m == "per_coordinate")
            c.mask_mode = MaskMode::PerCoordinate;
        else
            throw ConfigError("generation config: unknown mask_mode '" + m + "'");
    }
    if (j.contains("p_mask")) c.p_mask = j.at("p_mask").get<double>();
    return c;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    Json meta;
    meta["version"] = 1;
    meta["spec"] = spec_to_json(ds.spec);
    meta["config"] = generation_config_to_json(ds.config);
    meta["role"] = to_string(ds.role);
    meta["n_samples"] = ds.n();
    meta["d_u"] = ds.d_u();
    meta["d_v"] = ds.d_v();
    meta["output_names"] = ds.output_names;
    {
        std::ofstream f(fs::path(dir) / "meta.json");
        f << meta.dump(2) << "\n";
    }

    std::ofstream f(fs::path(dir) / "paths.jsonl");
    for (const PathSample& s : ds.samples) {
        NumWriter w;
        w.raw("{\"grid\":");
        write_vector(w, s.grid->t.data(), s.grid->size());
        w.raw(",\"u\":");
        write_matrix(w, s.u_dense);
        w.raw(",\"v\":");
        write_matrix(w, s.v_dense);
        w.raw(",\"obs_indices\":[");
        for (std::size_t i = 0; i < s.pattern.obs_indices.size(); ++i) {
            if (i) w.raw(",");
            w.raw(std::to_string(s.pattern.obs_indices[i]));
        }
        w.raw("],\"mask\":");
        write_matrix(w, s.pattern.mask);
        w.raw(",\"latent\":{");
        bool first = true;
        for (const auto& [k, v] : s.latent) {
            if (!first) w.raw(",");
            first = false;
            w.raw("\"" + k + "\":");
            w.num(v);
        }
        w.raw("}");
        if (s.v_obs_noisy) {
            w.raw(",\"v_obs_noisy\":");
            write_matrix(w, *s.v_obs_noisy);
        }
        w.raw("}");
        f << w.buf << "\n";
    }
}

Dataset read_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    Json meta;
    {
        std::ifstream f(fs::path(dir) / "meta.json");
        if (!f) throw ParseError("read_dataset: cannot open " + dir + "/meta.json");
        try {
            f >> meta;
        } catch (const std::exception& e) {
            throw ParseError(std::string("read_dataset: meta.json: ") + e.what());
        }
    }
    if (!meta.contains("version")) throw ParseError("read_dataset: meta.json missing 'version'");
    if (meta.at("version").get<int>() != 1)
        throw ConfigError("read_dataset: unsupported dataset version " +
                          meta.at("version").dump());

    Dataset ds;
    ds.spec = spec_from_json(meta.at("spec"));
    ds.config = generation_config_from_json(meta.at("config"));
    const std::string role = meta.at("role").get<std::string>();
    ds.role = role == "train" ? DatasetRole::Train : role == "val" ? DatasetRole::Val : DatasetRole::Test;
    ds.output_names = meta.at("output_names").get<std::vector<std::string>>();
    const int n_samples = meta.at("n_samples").get<int>();
    const int d_u = meta.at("d_u").get<int>();
    const int d_v = meta.at("d_v").get<int>();

    std::ifstream f(fs::path(dir) / "paths.jsonl");
    if (!f) throw ParseError("read_dataset: cannot open " + dir + "/paths.jsonl");
    std::string line;
    int line_no = 0;
    std::shared_ptr<const TimeGrid> grid;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError("read_dataset: paths.jsonl line " + std::to_string(line_no) + ": " +
                             e.what());
        }
        const std::string where = "paths.jsonl line " + std::to_string(line_no);
        PathSample s;
        if (!grid) {
            TimeGrid g;
            g.t = j.at("grid").get<std::vector<double>>();
            g.T = ds.config.T;
            g.dt = ds.config.T / ds.config.n_steps;
            g.validate();
            grid = std::make_shared<const TimeGrid>(std::move(g));
        }
        s.grid = grid;
        s.u_dense = matrix_from_json(j.at("u"), d_u, where + " 'u'");
        s.v_dense = matrix_from_json(j.at("v"), d_v, where + " 'v'");
        s.pattern.obs_indices = j.at("obs_indices").get<std::vector<int>>();
        s.pattern.mask = matrix_from_json(j.at("mask"), d_u + d_v, where + " 'mask'");
        for (const auto& [k, v] : j.at("latent").items()) s.latent[k] = v.get<double>();
        if (j.contains("v_obs_noisy"))
            s.v_obs_noisy = matrix_from_json(j.at("v_obs_noisy"), d_v, where + " 'v_obs_noisy'");
        try {
            s.validate();
        } catch (const std::exception& e) {
            throw ParseError("read_dataset: " + where + ": " + e.what());
        }
        ds.samples.push_back(std::move(s));
        if (static_cast<int>(ds.samples.size()) > n_samples)
            throw ParseError("read_dataset: more records than meta.json n_samples");
    }
    if (static_cast<int>(ds.samples.size()) != n_samples)
        throw ParseError("read_dataset: truncated paths.jsonl, expected " +
                         std::to_string(n_samples) + " records, got " +
                         std::to_string(ds.samples.size()));
    ds.grid = grid;
    return ds;
}

}  // namespace njode
