// Command-line driver for the darcysurrogate shared library. Parses flags,
// assembles JSON configs and delegates to the C API; on failure prints one
// machine-readable error line to stderr and exits with the status code.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "darcysurrogate.h"

namespace {

int report_failure(dfs_status status) {
  std::string message = dfs_last_error();
  // keep the error line single-line JSON
  for (char& c : message)
    if (c == '\n' || c == '"') c = c == '\n' ? ' ' : '\'';
  std::fprintf(stderr, "{\"error\":{\"code\":\"%s\",\"message\":\"%s\"}}\n",
               dfs_status_name(status), message.c_str());
  return static_cast<int>(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    std::fprintf(stderr,
                 "{\"error\":{\"code\":\"io-error\",\"message\":\"cannot open "
                 "%s\"}}\n",
                 path.c_str());
    std::exit(static_cast<int>(DFS_ERR_IO));
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// minimal JSON string escaping for values we forward into configs
std::string json_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"darcysur - Darcy flow surrogate modeling pipeline"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand(
      "gen-data", "Generate permeability realizations and FVM labels");
  std::string gen_config, gen_out, gen_phase = "single";
  int gen_num = 100, gen_dim = 2;
  std::int64_t gen_seed = 0;
  gen->add_option("--config", gen_config, "generation config JSON file");
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--num", gen_num, "number of samples");
  gen->add_option("--seed", gen_seed, "base seed");
  gen->add_option("--phase", gen_phase, "single|two")
      ->check(CLI::IsMember({"single", "two"}));
  gen->add_option("--dim", gen_dim, "2|3")->check(CLI::IsMember({2, 3}));

  // train
  auto* train = app.add_subcommand("train", "Train a surrogate model");
  std::string train_data, train_model = "aronet", train_feature = "trans";
  std::string train_sampler = "random", train_out, train_config;
  int train_init = 100, train_events = 0, train_per_event = 0,
      train_interval = 0;
  std::int64_t train_seed = 0;
  train->add_option("--data", train_data, "training dataset directory")
      ->required();
  train->add_option("--model", train_model, "aronet|arunet")
      ->check(CLI::IsMember({"aronet", "arunet"}));
  train->add_option("--feature", train_feature, "trans|perm")
      ->check(CLI::IsMember({"trans", "perm"}));
  train->add_option("--sampler", train_sampler, "random|rar|gmm")
      ->check(CLI::IsMember({"random", "rar", "gmm"}));
  train->add_option("--init", train_init, "initial training-set size");
  train->add_option("--events", train_events, "number of sampling events");
  train->add_option("--per-event", train_per_event, "samples per event");
  train->add_option("--interval", train_interval,
                    "iterations between sampling events");
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--out", train_out, "output model directory")->required();
  train->add_option("--config", train_config,
                    "optional JSON file with training/arch parameters");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Evaluate a model on a dataset");
  std::string eval_model, eval_data, eval_report;
  eval->add_option("--model", eval_model, "model directory")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--report", eval_report, "output report JSON")->required();

  // report
  auto* rep = app.add_subcommand("report", "Merge reports into a CSV");
  std::vector<std::string> rep_inputs;
  std::string rep_out;
  rep->add_option("--inputs", rep_inputs, "report JSON files")
      ->required()
      ->expected(-1);
  rep->add_option("--out", rep_out, "output CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    std::string config;
    if (!gen_config.empty()) {
      config = read_file(gen_config);
    } else {
      std::ostringstream ss;
      ss << "{\"phase\":" << json_quote(gen_phase);
      if (gen_dim == 3)
        ss << ",\"grid\":{\"nx\":8,\"ny\":8,\"nz\":4,\"dx\":10.0,"
              "\"dy\":10.0,\"dz\":10.0}";
      ss << "}";
      config = ss.str();
    }
    const dfs_status rc =
        dfs_dataset_generate(config.c_str(), gen_out.c_str(), gen_num,
                             gen_seed);
    return rc == DFS_OK ? 0 : report_failure(rc);
  }

  if (train->parsed()) {
    // config file first, dedicated flags afterwards: duplicate JSON keys
    // resolve to the last occurrence, so flags override the file
    std::ostringstream ss;
    ss << "{";
    if (!train_config.empty()) {
      std::string extra = read_file(train_config);
      const auto open = extra.find('{');
      const auto close = extra.rfind('}');
      if (open != std::string::npos && close != std::string::npos &&
          close > open + 1) {
        const std::string inner = extra.substr(open + 1, close - open - 1);
        if (inner.find_first_not_of(" \t\r\n") != std::string::npos)
          ss << inner << ",";
      }
    }
    ss << "\"model\":" << json_quote(train_model)
       << ",\"feature\":" << json_quote(train_feature)
       << ",\"sampler\":" << json_quote(train_sampler)
       << ",\"init\":" << train_init << ",\"events\":" << train_events
       << ",\"per_event\":" << train_per_event
       << ",\"interval\":" << train_interval << ",\"seed\":" << train_seed
       << "}";
    const dfs_status rc = dfs_train(ss.str().c_str(), train_data.c_str(),
                                    train_out.c_str());
    return rc == DFS_OK ? 0 : report_failure(rc);
  }

  if (eval->parsed()) {
    const dfs_status rc = dfs_evaluate(eval_model.c_str(), eval_data.c_str(),
                                       eval_report.c_str());
    return rc == DFS_OK ? 0 : report_failure(rc);
  }

  if (rep->parsed()) {
    std::vector<const char*> paths;
    paths.reserve(rep_inputs.size());
    for (const std::string& p : rep_inputs) paths.push_back(p.c_str());
    const dfs_status rc =
        dfs_report_merge(paths.data(), paths.size(), rep_out.c_str());
    return rc == DFS_OK ? 0 : report_failure(rc);
  }

  return 0;
}
