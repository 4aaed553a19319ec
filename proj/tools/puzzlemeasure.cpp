// Batch front-end: puzzlemeasure <classify|ray|puzzle|nest|measure|verify> [flags]

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "puzzlemeasure/pipeline.hpp"

namespace pm = puzzlemeasure;

namespace {

enum Exit { kOk = 0, kInvariant = 1, kConfigError = 2, kNumeric = 3 };

struct Overrides {
  std::string config_path;
  std::optional<double> c_re, c_im, delta_tol;
  std::optional<int> degree, depth;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string format = "json";
};

pm::RunConfig load(const Overrides& o) {
  pm::RunConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw pm::Error(pm::ErrorKind::kConfig, "cannot read config " + o.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw pm::Error(pm::ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
    }
    cfg = pm::config_from_json(j);
  }
  if (o.c_re || o.c_im) {
    cfg.c = pm::Cx(o.c_re.value_or(cfg.c.real()), o.c_im.value_or(cfg.c.imag()));
    cfg.has_c = true;
  }
  if (o.degree) cfg.degree = *o.degree;
  if (o.depth) {
    cfg.max_depth = std::max(cfg.max_depth, *o.depth);
    cfg.partition_depth = *o.depth;
  }
  if (o.delta_tol) cfg.delta_tol = *o.delta_tol;
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  return cfg;
}

const char* table_for(const std::string& cmd) {
  if (cmd == "classify") return "classify_points.csv";
  if (cmd == "ray") return "rays.csv";
  if (cmd == "puzzle") return "pieces.csv";
  if (cmd == "nest") return "nest.csv";
  if (cmd == "measure") return "atoms.csv";
  return "avoidance.csv";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Yoccoz puzzles, principal nests and conformal measures of z^l + c"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--c-re", o.c_re, "real part of c");
  app.add_option("--c-im", o.c_im, "imaginary part of c");
  app.add_option("--degree", o.degree, "even degree l");
  app.add_option("--depth", o.depth, "partition depth");
  app.add_option("--delta-tol", o.delta_tol, "tolerance for the exponent search");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--format", o.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));

  std::string command;
  for (const char* name : {"classify", "ray", "puzzle", "nest", "measure", "verify"}) {
    app.add_subcommand(name)->callback([&command, name] { command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const auto cfg = load(o);
    nlohmann::json report;
    if (command == "classify") report = pm::cmd_classify(cfg);
    else if (command == "ray") report = pm::cmd_ray(cfg);
    else if (command == "puzzle") report = pm::cmd_puzzle(cfg);
    else if (command == "nest") report = pm::cmd_nest(cfg);
    else if (command == "measure") report = pm::cmd_measure(cfg);
    else report = pm::cmd_verify(cfg);

    if (o.format == "csv") {
      std::ifstream table(std::filesystem::path(cfg.output_dir) / table_for(command));
      std::cout << table.rdbuf();
    } else {
      std::cout << report.dump(2) << '\n';
    }
    if (!pm::hard_checks_pass(report)) {
      std::cerr << "puzzlemeasure: hard invariant failed\n";
      return kInvariant;
    }
    return kOk;
  } catch (const pm::Error& e) {
    std::cerr << "puzzlemeasure: " << e.what() << '\n';
    if (e.kind() == pm::ErrorKind::kConfig) {
      if (o.config_path.empty() && !o.c_re && !o.c_im) std::cerr << "usage: puzzlemeasure <command> --config FILE | --c-re X --c-im Y [flags]\n";
      return kConfigError;
    }
    return kNumeric;
  }
}
