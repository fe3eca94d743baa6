// SPDX-License-Identifier: Apache-2.0
//
// touchpass command-line front end.

#include <chrono>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "touchpass/authsvc.hpp"
#include "touchpass/capture.hpp"
#include "touchpass/error.hpp"
#include "touchpass/eval.hpp"
#include "touchpass/parallel.hpp"
#include "touchpass/rnn.hpp"
#include "touchpass/service.hpp"
#include "touchpass/synth.hpp"

// After Eigen: <resolv.h> defines a macro that clashes with Eigen internals.
#include "httplib.h"

namespace tp = touchpass;

namespace {

struct DataArgs {
  std::string root;
  std::size_t dev_users = tp::Dataset::kDefaultDevUsers;
  unsigned threads = tp::DefaultThreads();
};

void AddDataArgs(CLI::App* app, DataArgs& a) {
  app->add_option("--data", a.root, "Corpus root (one directory per user)")
      ->required()
      ->check(CLI::ExistingDirectory);
  app->add_option("--dev-users", a.dev_users,
                  "Users in the development split");
  app->add_option("--threads", a.threads, "Worker threads");
}

tp::Dataset Load(const DataArgs& a) {
  tp::DatasetLoad load = tp::LoadDataset(a.root, {}, a.dev_users);
  for (const std::string& s : load.skipped) std::cerr << "skipped " << s << '\n';
  std::cerr << load.dataset.size() << " samples, " << load.dataset.users().size()
            << " users\n";
  return std::move(load.dataset);
}

nlohmann::json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tp::Error(tp::ErrorCode::kMissingData, "cannot open " + path);
  return nlohmann::json::parse(in);
}

void WriteJson(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw tp::Error(tp::ErrorCode::kStorageFailure, "cannot write " + path);
}

std::vector<int> ParseDigits(const std::string& text) {
  if (text == "all") return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> digits;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const int d = std::stoi(item);
    if (d < 0 || d >= tp::kNumDigits) {
      throw tp::Error(tp::ErrorCode::kInvalidArgument, "bad digit " + item);
    }
    digits.push_back(d);
  }
  return digits;
}

std::unique_ptr<tp::PairScorer> MakeScorer(tp::System system,
                                           const std::string& selection,
                                           const std::string& network) {
  switch (system) {
    case tp::System::kDtwBaseline:
      return std::make_unique<tp::DtwScorer>(tp::FunctionSubset::Baseline());
    case tp::System::kDtwAdapted:
      if (selection.empty()) {
        throw tp::Error(tp::ErrorCode::kScorerUnavailable,
                        "dtw-adapted needs --selection");
      }
      return std::make_unique<tp::DtwScorer>(
          tp::SelectionFromJson(ReadJson(selection)).subsets);
    case tp::System::kBlstm:
      if (network.empty()) {
        throw tp::Error(tp::ErrorCode::kScorerUnavailable,
                        "blstm needs --network");
      }
      return std::make_unique<tp::BlstmScorer>(tp::LoadNetwork(network));
  }
  return nullptr;
}

tp::Dataset::Split ParseSplit(const std::string& s) {
  if (s == "dev" || s == "development") return tp::Dataset::Split::kDevelopment;
  if (s == "eval" || s == "evaluation") return tp::Dataset::Split::kEvaluation;
  if (s == "all") return tp::Dataset::Split::kAll;
  throw tp::Error(tp::ErrorCode::kInvalidArgument, "unknown split " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Handwritten touch-password biometrics"};
  app.require_subcommand(1);

  // synth
  tp::SynthConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
  synth_cmd->add_option("--out", synth_out, "Output root")->required();
  synth_cmd->add_option("--writers", synth.writers);
  synth_cmd->add_option("--dev-writers", synth.dev_writers);
  synth_cmd->add_option("--seed", synth.seed);

  // evaluate
  DataArgs eval_data;
  std::string system_name = "dtw-baseline", selection_file, network_file,
              eval_out, csv_out, digits_text = "all", split_name = "eval";
  int n_enrol = 1;
  auto* eval_cmd = app.add_subcommand("evaluate", "Per-digit EER table");
  AddDataArgs(eval_cmd, eval_data);
  eval_cmd->add_option("--system", system_name,
                       "dtw-baseline | dtw-adapted | blstm");
  eval_cmd->add_option("--enrol", n_enrol, "Enrolment samples (1..4)")
      ->check(CLI::Range(1, 4));
  eval_cmd->add_option("--digits", digits_text, "e.g. all or 0,4,7");
  eval_cmd->add_option("--split", split_name, "dev | eval | all");
  eval_cmd->add_option("--selection", selection_file, "Function selection JSON");
  eval_cmd->add_option("--network", network_file, "BLSTM weights JSON");
  eval_cmd->add_option("--out", eval_out, "Report JSON (default stdout)");
  eval_cmd->add_option("--csv", csv_out, "Digit table CSV");

  // search
  DataArgs search_data;
  std::string search_system = "dtw-adapted", search_selection, search_network,
              search_out, search_csv, search_mode = "auto";
  std::vector<int> lengths{1, 2, 3, 4, 5, 6, 7, 8};
  int search_enrol = 3;
  bool pin_table = false;
  auto* search_cmd = app.add_subcommand("search", "Best password per length");
  AddDataArgs(search_cmd, search_data);
  search_cmd->add_option("--system", search_system);
  search_cmd->add_option("--selection", search_selection);
  search_cmd->add_option("--network", search_network);
  search_cmd->add_option("--enrol", search_enrol)->check(CLI::Range(1, 4));
  search_cmd->add_option("--length", lengths, "Password lengths")
      ->check(CLI::Range(1, tp::kMaxPasswordLength));
  search_cmd->add_option("--mode", search_mode, "auto | exhaustive | sffs");
  search_cmd->add_flag("--pin-table", pin_table,
                       "Also store every 4-digit multiset EER");
  search_cmd->add_option("--out", search_out);
  search_cmd->add_option("--csv", search_csv, "Password table CSV");

  // select-functions
  DataArgs sel_data;
  std::string sel_digits = "all", sel_out;
  int sel_enrol = 1;
  std::size_t sel_max = tp::kNumChannels;
  auto* sel_cmd = app.add_subcommand("select-functions",
                                     "Floating search of time functions");
  AddDataArgs(sel_cmd, sel_data);
  sel_cmd->add_option("--digit", sel_digits, "Digits to select for");
  sel_cmd->add_option("--enrol", sel_enrol)->check(CLI::Range(1, 4));
  sel_cmd->add_option("--max-size", sel_max)->check(CLI::Range(1, 21));
  sel_cmd->add_option("--out", sel_out);

  // train
  DataArgs train_data;
  tp::TrainConfig train;
  std::string train_out, loss_csv;
  auto* train_cmd = app.add_subcommand("train", "Train the BLSTM pair scorer");
  AddDataArgs(train_cmd, train_data);
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--lr", train.learning_rate);
  train_cmd->add_option("--batch", train.batch_size);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--patience", train.patience);
  train_cmd->add_option("--out", train_out)->required();
  train_cmd->add_option("--loss-csv", loss_csv);

  // serve
  std::string config_file;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", config_file, "INI config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      tp::WriteDataset(tp::GenerateSynthetic(synth), synth_out);
      return 0;
    }

    if (*eval_cmd) {
      const auto start = std::chrono::steady_clock::now();
      const tp::Dataset data = Load(eval_data);
      const tp::FeatureCache cache(data, eval_data.threads);
      const tp::System system = tp::ParseSystem(system_name);
      const auto scorer = MakeScorer(system, selection_file, network_file);
      const std::vector<int> digits = ParseDigits(digits_text);
      const tp::EvalReport report =
          tp::RunDigitTable(cache, ParseSplit(split_name), system, *scorer,
                            n_enrol, digits, eval_data.threads);
      WriteJson(tp::ReportToJson(report), eval_out);
      if (!csv_out.empty()) {
        std::ofstream csv(csv_out);
        tp::WriteDigitTableCsv(report, csv);
      }
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      std::cerr << "mean EER " << report.MeanEer() << "% in " << secs << " s\n";
      return 0;
    }

    if (*search_cmd) {
      const tp::Dataset data = Load(search_data);
      const tp::FeatureCache cache(data, search_data.threads);
      const tp::System system = tp::ParseSystem(search_system);
      const auto scorer = MakeScorer(system, search_selection, search_network);
      const auto per_digit =
          tp::ScoreAllDigits(cache, tp::Dataset::Split::kEvaluation, *scorer,
                             search_enrol, search_data.threads);
      const tp::PasswordPools pools(per_digit, search_enrol);
      tp::EvalReport report;
      report.system = system;
      report.n_enrol = search_enrol;
      report.per_digit_eer.fill(std::numeric_limits<double>::quiet_NaN());
      report.per_digit_threshold.fill(std::numeric_limits<double>::quiet_NaN());
      tp::ScoreSet pooled;
      for (const tp::DigitScores& ds : per_digit) {
        const tp::ScoreSet s = ds.Pools(search_enrol);
        const tp::EerResult e = tp::ComputeEer(s);
        report.per_digit_eer[ds.digit()] = e.eer;
        report.per_digit_threshold[ds.digit()] = e.threshold;
        pooled.genuine.insert(pooled.genuine.end(), s.genuine.begin(),
                              s.genuine.end());
        pooled.impostor.insert(pooled.impostor.end(), s.impostor.begin(),
                               s.impostor.end());
      }
      const tp::EerResult pe = tp::ComputeEer(pooled);
      report.pooled_eer = pe.eer;
      report.pooled_threshold = pe.threshold;
      report.det_points = tp::DetCurve(pooled);
      for (int length : lengths) {
        tp::SearchMode mode = length < tp::kExhaustiveLengthLimit
                                  ? tp::SearchMode::kExhaustive
                                  : tp::SearchMode::kSffs;
        if (search_mode == "exhaustive") mode = tp::SearchMode::kExhaustive;
        if (search_mode == "sffs") mode = tp::SearchMode::kSffs;
        const tp::PasswordResult r = tp::SearchPasswords(pools, length, mode);
        std::cerr << "length " << length << ": " << r.eer << "% [";
        for (std::size_t i = 0; i < r.digits.size(); ++i) {
          std::cerr << (i ? "," : "") << r.digits[i];
        }
        std::cerr << "]\n";
        report.password_results.push_back(r);
      }
      if (pin_table) {
        const tp::PinDistribution dist = tp::ComputePinDistribution(pools);
        report.password_eers = dist.multisets;
        std::cerr << "PIN EER quartiles " << dist.q1 << " / " << dist.median
                  << " / " << dist.q3 << "\n";
      }
      WriteJson(tp::ReportToJson(report), search_out);
      if (!search_csv.empty()) {
        std::ofstream csv(search_csv);
        tp::WritePasswordTableCsv(report, csv);
      }
      return 0;
    }

    if (*sel_cmd) {
      const tp::Dataset data = Load(sel_data);
      const tp::FeatureCache cache(data, sel_data.threads);
      tp::FunctionSelection sel;
      for (int d : ParseDigits(sel_digits)) {
        tp::SelectionTrace trace =
            tp::SelectFunctions(cache, d, sel_enrol, sel_data.threads, sel_max);
        sel.subsets[d] = tp::FunctionSubset(trace.best_subset);
        std::cerr << "digit " << d << ": {" << sel.subsets[d].ToString()
                  << "} dev EER " << trace.best_objective << "%\n";
        sel.traces[d] = std::move(trace);
      }
      WriteJson(tp::SelectionToJson(sel), sel_out);
      return 0;
    }

    if (*train_cmd) {
      train.threads = train_data.threads;
      const tp::Dataset data = Load(train_data);
      const tp::PairSet pairs =
          tp::BuildPairs(data, tp::Dataset::Split::kDevelopment, train.seed);
      std::cerr << pairs.pairs.size() << " training pairs\n";
      const tp::TrainResult result =
          tp::Train(tp::InitNetwork(train.seed), pairs, train);
      tp::SaveNetwork(result.params, train_out);
      if (!loss_csv.empty()) {
        std::ofstream csv(loss_csv);
        tp::WriteLossCsv(result, csv);
      }
      return 0;
    }

    if (*serve_cmd) {
      const tp::ServiceConfig config = tp::LoadConfig(config_file);
      tp::AuthService service(config);
      httplib::Server server;
      service.Mount(server);
      std::cerr << "listening on " << config.host << ':' << config.port
                << ", threshold " << service.threshold() << '\n';
      if (!server.listen(config.host, config.port)) {
        std::cerr << "cannot bind " << config.host << ':' << config.port << '\n';
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
