#include "srlf/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace srlf {

namespace {

nlohmann::json net_to_json(const Mlp& net) {
  const Eigen::VectorXd theta = net.flat();
  return {{"sizes", net.sizes()},
          {"weights", std::vector<double>(theta.data(), theta.data() + theta.size())}};
}

Mlp net_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains("sizes") || !j.contains("weights"))
    throw InvalidInput(std::string("checkpoint: malformed '") + name + "'");
  Mlp net(j.at("sizes").get<std::vector<int>>());
  const auto w = j.at("weights").get<std::vector<double>>();
  if (static_cast<int>(w.size()) != net.num_params())
    throw InvalidInput(std::string("checkpoint: '") + name +
                       "' weight count does not match its shape header");
  net.set_flat(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
  return net;
}

}  // namespace

std::string checkpoint_to_json(const PolicyParams& params) {
  nlohmann::json j = {{"format", "srlf-policy"},
                      {"version", kCheckpointVersion},
                      {"actor", net_to_json(params.actor)},
                      {"critic", net_to_json(params.critic)}};
  return j.dump();
}

PolicyParams checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "srlf-policy")
    throw InvalidInput("checkpoint: not an srlf-policy blob");
  if (j.value("version", 0) != kCheckpointVersion)
    throw InvalidInput("checkpoint: unsupported version");
  PolicyParams p{net_from_json(j.at("actor"), "actor"),
                 net_from_json(j.at("critic"), "critic")};
  const auto& a = p.actor.sizes();
  const auto& c = p.critic.sizes();
  if (a.front() != kObsDim || a.back() != 2 * kActDim || c.front() != kObsDim ||
      c.back() != 1)
    throw InvalidInput("checkpoint: network shapes do not match the task");
  return p;
}

void save_checkpoint(const std::string& path, const PolicyParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("checkpoint: cannot write " + path);
  out << checkpoint_to_json(params);
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("checkpoint: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace srlf
