#include "njode/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "njode/errors.hpp"

namespace njode {

using Json = nlohmann::json;

Json mlp_to_json(const MlpParams& p) {
    Json j;
    j["activation"] = (p.hidden_act == Activation::Relu) ? "relu" : "tanh";
    Json layers = Json::array();
    for (int l = 0; l < p.n_layers(); ++l) {
        Json layer;
        layer["rows"] = p.W[l].rows();
        layer["cols"] = p.W[l].cols();
        layer["W"] = std::vector<double>(p.W[l].data(), p.W[l].data() + p.W[l].size());
        layer["b"] = std::vector<double>(p.b[l].data(), p.b[l].data() + p.b[l].size());
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    return j;
}

MlpParams mlp_from_json(const Json& j) {
    MlpParams p;
    const std::string act = j.at("activation").get<std::string>();
    if (act == "relu")
        p.hidden_act = Activation::Relu;
    else if (act == "tanh")
        p.hidden_act = Activation::Tanh;
    else
        throw ConfigError("checkpoint: unknown activation '" + act + "'");
    for (const auto& layer : j.at("layers")) {
        const Eigen::Index rows = layer.at("rows").get<Eigen::Index>();
        const Eigen::Index cols = layer.at("cols").get<Eigen::Index>();
        const auto wf = layer.at("W").get<std::vector<double>>();
        const auto bf = layer.at("b").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(wf.size()) != rows * cols ||
            static_cast<Eigen::Index>(bf.size()) != rows)
            throw ParseError("checkpoint: layer value array size mismatch");
        RowMat W(rows, cols);
        std::copy(wf.begin(), wf.end(), W.data());
        p.W.push_back(std::move(W));
        p.b.push_back(Eigen::Map<const Vec>(bf.data(), rows));
    }
    p.validate();
    return p;
}

void save_checkpoint(const NjodeParams& p, const std::string& path) {
    Json j;
    j["version"] = 1;
    j["d_h"] = p.d_h;
    j["d_u"] = p.d_u;
    j["d_v"] = p.d_v;
    j["sig_level"] = p.sig_level;
    j["recurrent_encoder"] = p.flags.recurrent_encoder;
    j["encoder_residual"] = p.flags.encoder_residual;
    j["decoder_residual"] = p.flags.decoder_residual;
    j["f_gamma"] = p.f_net.gamma;
    j["rho_gamma"] = p.rho_net.gamma;
    j["f_net"] = mlp_to_json(p.f_net.net);
    j["rho_net"] = mlp_to_json(p.rho_net.net);
    j["g_net"] = mlp_to_json(p.g_net);
    std::ofstream f(path);
    if (!f) throw ConfigError("save_checkpoint: cannot write " + path);
    f << j.dump() << "\n";
}

NjodeParams load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("load_checkpoint: cannot open " + path);
    Json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ParseError(std::string("load_checkpoint: ") + e.what());
    }
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw ConfigError("load_checkpoint: unsupported checkpoint version");
    NjodeParams p;
    p.d_h = j.at("d_h").get<int>();
    p.d_u = j.at("d_u").get<int>();
    p.d_v = j.at("d_v").get<int>();
    p.sig_level = j.at("sig_level").get<int>();
    p.flags.recurrent_encoder = j.at("recurrent_encoder").get<bool>();
    p.flags.encoder_residual = j.at("encoder_residual").get<bool>();
    p.flags.decoder_residual = j.at("decoder_residual").get<bool>();
    p.f_net.gamma = j.at("f_gamma").get<double>();
    p.rho_net.gamma = j.at("rho_gamma").get<double>();
    p.f_net.net = mlp_from_json(j.at("f_net"));
    p.rho_net.net = mlp_from_json(j.at("rho_net"));
    p.g_net = mlp_from_json(j.at("g_net"));
    p.validate();
    return p;
}

}  // namespace njode
