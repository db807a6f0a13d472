#include "rankrobust/net/checkpoint.hpp"

#include <fstream>

namespace rankrobust {

using nlohmann::json;

json checkpoint_to_json(const Mlp& m, const json& extra) {
  json j;
  j["version"] = kCheckpointVersion;
  j["layer_dims"] = m.layer_dims();
  j["activation"] = m.activation().name();
  j["activation_param"] = m.activation().param;
  j["seed"] = m.seed();
  json layers = json::array();
  for (const auto& l : m.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"weight", w}, {"bias", b}});
  }
  j["weights"] = layers;
  j["extra"] = extra;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ConfigError("unsupported checkpoint version");
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const Activation act = Activation::parse(j.at("activation").get<std::string>(),
                                             j.at("activation_param").get<double>());
    const auto& layers = j.at("weights");
    if (dims.size() < 2 || layers.size() + 1 != dims.size())
      throw ConfigError("checkpoint layer count does not match layer_dims");
    std::vector<DenseLayer> out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto w = layers[l].at("weight").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
      const auto cols = static_cast<Eigen::Index>(dims[l]);
      if (w.size() != static_cast<std::size_t>(rows * cols) ||
          b.size() != static_cast<std::size_t>(rows))
        throw ConfigError("checkpoint weight shape mismatch");
      DenseLayer dl{Matrix(rows, cols), Vector(rows)};
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
          dl.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      for (Eigen::Index r = 0; r < rows; ++r) dl.bias[r] = b[static_cast<std::size_t>(r)];
      out.push_back(std::move(dl));
    }
    Checkpoint ck{Mlp(std::move(out), act, j.at("seed").get<std::uint64_t>()),
                  j.value("extra", json::object())};
    return ck;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Mlp& m, const json& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << checkpoint_to_json(m, extra).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("checkpoint not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed checkpoint " + path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace rankrobust
