#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srlf/run.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw srlf::InvalidInput("--seed: not an unsigned integer: '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw srlf::InvalidInput("--seed: empty list");
  return seeds;
}

struct Flags {
  std::string config;
  std::string seeds;
  std::string mode;
  std::string out;
  std::string form;
  int episodes = -1;
  bool quick = false;
  long n = 10000;
};

srlf::RunConfig build_config(const Flags& f) {
  srlf::RunConfig cfg = f.config.empty() ? srlf::RunConfig{} : srlf::load_config(f.config);
  if (!f.seeds.empty()) cfg.seeds = parse_seeds(f.seeds);
  if (!f.mode.empty()) cfg.mode = srlf::mode_from_string(f.mode);
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (!f.form.empty()) cfg.constraint_form = srlf::constraint_form_from_string(f.form);
  if (f.episodes >= 0) cfg.episodes = f.episodes;
  cfg.validate();
  return cfg;
}

void write_json(const std::string& dir, const std::string& name, const nlohmann::json& j) {
  std::filesystem::create_directories(dir);
  std::ofstream(std::filesystem::path(dir) / name) << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust barrier safety filter for multicopter tracking"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--seed", f.seeds, "seed list, comma separated");
    sub->add_option("--mode", f.mode, "off | post_filter | learning_filter");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--constraint-form", f.form, "exact | paper-literal");
    sub->add_option("--episodes", f.episodes, "episode count (train: seed count)");
  };

  CLI::App* rollout = app.add_subcommand("rollout", "run evaluation episodes");
  add_common(rollout);
  CLI::App* train = app.add_subcommand("train", "train a PPO policy");
  add_common(train);
  CLI::App* check = app.add_subcommand("check", "run the invariant suites");
  add_common(check);
  check->add_flag("--quick", f.quick, "reduced sample sizes");
  CLI::App* bench = app.add_subcommand("qp-bench", "time random filter solves");
  add_common(bench);
  bench->add_option("-n,--count", f.n, "number of solves");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rollout->parsed()) {
      const srlf::RolloutResult res = srlf::run_rollout(build_config(f));
      std::cout << res.report["aggregate"].dump(2) << "\n";
      return res.exit_code;
    }
    if (train->parsed()) {
      const srlf::TrainRunResult res = srlf::run_train(build_config(f));
      for (const auto& r : res.runs)
        if (r.diverged) std::cerr << "diverged: " << r.message << "\n";
      for (const auto& a : res.artifacts) std::cout << a << "\n";
      return res.exit_code;
    }
    if (check->parsed()) {
      const auto seeds = f.seeds.empty() ? std::vector<std::uint64_t>{0} : parse_seeds(f.seeds);
      const srlf::CheckResult res = srlf::run_check(seeds.front(), f.quick);
      std::cout << res.report.dump(2) << "\n";
      if (!f.out.empty()) write_json(f.out, "check.json", res.report);
      return res.exit_code;
    }
    if (bench->parsed()) {
      const auto seeds = f.seeds.empty() ? std::vector<std::uint64_t>{0} : parse_seeds(f.seeds);
      const auto form = f.form.empty() ? srlf::ConstraintForm::kExact
                                       : srlf::constraint_form_from_string(f.form);
      const srlf::BenchResult res = srlf::run_qp_bench(f.n, seeds.front(), form);
      nlohmann::json brief = res.report;
      brief.erase("solves");
      std::cout << brief.dump(2) << "\n";
      if (!f.out.empty()) write_json(f.out, "qp_bench.json", res.report);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
