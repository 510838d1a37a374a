#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flowcorr/deepcorr.hpp"
#include "flowcorr/error.hpp"
#include "flowcorr/eval.hpp"
#include "flowcorr/harness.hpp"
#include "flowcorr/ingest.hpp"
#include "flowcorr/nn/checkpoint.hpp"
#include "flowcorr/parallel.hpp"
#include "flowcorr/simnet.hpp"
#include "flowcorr/statcorr.hpp"

namespace fs = std::filesystem;
using namespace flowcorr;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct DataOptions {
  std::string dir;
  std::string use = "all";
  double split = 0.5;
};

void add_data_options(CLI::App* sub, DataOptions& d, bool required = true) {
  auto* opt = sub->add_option("--data", d.dir, "dataset directory (packets.csv + manifest.csv)");
  if (required) opt->required();
  sub->add_option("--use", d.use, "which part of the dataset to use")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();
  sub->add_option("--split", d.split, "train fraction when --use is train or test")
      ->capture_default_str();
}

void require_dataset_dir(const std::string& dir) {
  for (const char* name : {"packets.csv", "manifest.csv"})
    if (!fs::is_regular_file(fs::path(dir) / name))
      throw DataError("dataset '" + dir + "' has no " + name);
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw DataError(std::string(what) + " '" + path + "' not found");
}

void prepare_output(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

Dataset load_dataset(const DataOptions& d, std::uint64_t seed) {
  auto all = read_dataset_dir(d.dir);
  if (d.use == "all") return all;
  auto [train, test] = assemble_dataset(all.flows, all.manifest, d.split, seed);
  return d.use == "train" ? std::move(train) : std::move(test);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

// Replayed with `flowcorr --config <path>`.
void write_run_manifest(const CLI::App* sub, const std::string& path) {
  write_text(path, "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false));
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::vector<statcorr::Channel> parse_channels(const std::vector<std::string>& names) {
  std::vector<statcorr::Channel> out;
  for (const auto& n : names) out.push_back(statcorr::parse_channel(n));
  if (out.empty()) throw ParameterError("--channels needs at least one channel");
  return out;
}

nlohmann::json summary_json(const std::string& scorer, const harness::Summary& s, double eta) {
  nlohmann::json j;
  j["scorer"] = scorer;
  j["entries"] = s.entries;
  j["exits"] = s.exits;
  j["positives"] = s.positives;
  j["negatives"] = s.negatives;
  j["auc"] = s.auc;
  j["raptor_accuracy"] = s.raptor_accuracy;
  j["tp_at_fp"] = nlohmann::json::array();
  for (const auto& [fp, tp] : s.tp_at_fp) j["tp_at_fp"].push_back({{"fp", fp}, {"tp", tp}});
  j["eta"] = eta;
  j["tp_at_eta"] = s.at_eta.tp;
  j["fp_at_eta"] = s.at_eta.fp;
  return j;
}

struct ReportOptions {
  std::string roc;
  std::string summary;
  std::string matrix;
  double eta = 0.5;
  std::string thresholds = "all";
};

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  if (text == "all") return out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ParseError("bad threshold '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("--thresholds is empty");
  return out;
}

void add_report_options(CLI::App* sub, ReportOptions& r) {
  sub->add_option("--roc", r.roc, "ROC curve CSV (eta,tp,fp)")->required();
  sub->add_option("--summary", r.summary, "JSON summary (default: next to the ROC file)");
  sub->add_option("--matrix", r.matrix, "optional full score matrix CSV");
  sub->add_option("--eta", r.eta, "detection threshold reported in the summary")
      ->capture_default_str();
  sub->add_option("--thresholds", r.thresholds,
                  "comma-separated ROC thresholds, or 'all' for every distinct score")
      ->check([](const std::string& text) {
        try {
          parse_thresholds(text);
          return std::string();
        } catch (const ParseError& e) {
          return std::string(e.what());
        }
      })
      ->capture_default_str();
}

void prepare_report(ReportOptions& r) {
  if (r.summary.empty()) r.summary = sibling(r.roc, ".json");
  for (const auto* p : {&r.roc, &r.summary, &r.matrix})
    if (!p->empty()) prepare_output(*p);
}

void write_report(const ReportOptions& r, const std::string& scorer,
                  const eval::ScoreMatrix& m) {
  const auto s = harness::summarize(m, r.eta, parse_thresholds(r.thresholds));
  eval::write_roc_csv(r.roc, s.roc);
  write_text(r.summary, summary_json(scorer, s, r.eta).dump(2) + "\n");
  if (!r.matrix.empty()) eval::write_score_matrix_csv(r.matrix, m);
  std::printf("%s: %zu pairs, AUC %.4f, raptor accuracy %.4f, TP %.4f at FP %.4f (eta %g)\n",
              scorer.c_str(), s.entries, s.auc, s.raptor_accuracy, s.at_eta.tp, s.at_eta.fp,
              r.eta);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow correlation toolkit: simulate, train, evaluate, compare, benchmark"};
  app.require_subcommand(1);
  std::size_t jobs = default_jobs();
  std::uint64_t seed = 0;

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic paired dataset");
  std::size_t sim_pairs = 2000;
  simnet::ChannelModel channel;
  simnet::BaseFlowModel base;
  std::string sim_out;
  sim->add_option("--pairs", sim_pairs, "number of connections")->capture_default_str();
  sim->add_option("--jitter-std", channel.jitter_std, "Laplace jitter standard deviation (s)")
      ->capture_default_str();
  sim->add_option("--drop", channel.drop_rate, "per-packet drop probability")
      ->capture_default_str();
  sim->add_option("--packets", base.packet_count, "packets per ingress flow")
      ->capture_default_str();
  sim->add_option("--mean-ipd", base.mean_ipd, "mean inter-packet delay (s)")
      ->capture_default_str();
  sim->add_option("--out", sim_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "fit a DeepCorr preset and write a checkpoint");
  std::string preset_name = "tor", checkpoint, loss_history, direction = "up";
  DataOptions tr_data;
  auto cfg = deepcorr::tor_preset();
  bool no_resample = false;
  tr->add_option("--preset", preset_name, "architecture preset")
      ->check(CLI::IsMember({"tor", "stepping"}))
      ->capture_default_str();
  tr->add_option("--scale", cfg.scale, "width multiplier for kernels and FC layers")
      ->capture_default_str();
  tr->add_option("--flow-len", cfg.flow_len, "packets per flow fed to the network")
      ->capture_default_str();
  tr->add_option("--neg", cfg.neg, "negative pairs per entry flow")->capture_default_str();
  tr->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
  tr->add_option("--epochs", cfg.epochs, "maximum epochs")->capture_default_str();
  tr->add_option("--batch", cfg.batch, "mini-batch size")->capture_default_str();
  tr->add_option("--patience", cfg.patience, "early-stop patience in epochs (0 disables)")
      ->capture_default_str();
  tr->add_option("--max-steps", cfg.max_steps, "cap on Adam steps (0 = none)")
      ->capture_default_str();
  tr->add_option("--target-loss", cfg.target_loss, "stop once an epoch's mean loss is below this")
      ->capture_default_str();
  tr->add_option("--conv2-height", cfg.conv2_height, "height of the second tor kernel")
      ->check(CLI::IsMember({2, 4}))
      ->capture_default_str();
  tr->add_option("--ipd-scale", cfg.scaling.ipd_scale, "multiplier applied to IPDs (s)")
      ->capture_default_str();
  tr->add_option("--size-scale", cfg.scaling.size_scale, "multiplier applied to sizes (bytes)")
      ->capture_default_str();
  tr->add_option("--direction", direction, "stepping preset direction")
      ->check(CLI::IsMember({"up", "down"}))
      ->capture_default_str();
  tr->add_flag("--no-resample", no_resample, "draw negatives once instead of every epoch");
  tr->add_option("--checkpoint", checkpoint, "checkpoint output path")->required();
  tr->add_option("--loss-history", loss_history, "per-epoch loss CSV (default: next to checkpoint)");
  add_data_options(tr, tr_data);

  // eval
  auto* ev = app.add_subcommand("eval", "score all pairs with a checkpoint");
  std::string ev_checkpoint;
  DataOptions ev_data;
  ReportOptions ev_report;
  ev->add_option("--checkpoint", ev_checkpoint, "trained network")->required();
  add_data_options(ev, ev_data);
  add_report_options(ev, ev_report);

  // baseline
  auto* bl = app.add_subcommand("baseline", "score all pairs with a statistical metric");
  std::string metric_name = "pearson";
  std::vector<std::string> channel_names{"ipd_up", "ipd_down", "size_up", "size_down"};
  std::size_t bl_flow_len = 300, bins = statcorr::kDefaultBins;
  DataOptions bl_data;
  ReportOptions bl_report;
  bl->add_option("--metric", metric_name, "correlation metric")
      ->check(CLI::IsMember({"pearson", "cosine", "spearman", "mi"}))
      ->capture_default_str();
  bl->add_option("--channels", channel_names, "feature channels averaged by the metric")
      ->delimiter(',')
      ->capture_default_str();
  bl->add_option("--flow-len", bl_flow_len, "packets per flow")->capture_default_str();
  bl->add_option("--bins", bins, "histogram bins for mi")->capture_default_str();
  add_data_options(bl, bl_data);
  add_report_options(bl, bl_report);

  // bench
  auto* bn = app.add_subcommand("bench", "time one correlation for DeepCorr and every baseline");
  std::size_t bn_pairs = 100, reps = 3;
  std::string bn_checkpoint, bn_report, bn_preset = "stepping";
  double bn_scale = 0.25;
  DataOptions bn_data;
  bn->add_option("--pairs", bn_pairs, "synthetic pairs when no --data is given")
      ->capture_default_str();
  bn->add_option("--reps", reps, "timed passes over the pairs")->capture_default_str();
  bn->add_option("--checkpoint", bn_checkpoint, "network to time (default: untrained preset)");
  bn->add_option("--preset", bn_preset, "preset built when no checkpoint is given")
      ->check(CLI::IsMember({"tor", "stepping"}))
      ->capture_default_str();
  bn->add_option("--scale", bn_scale, "preset width multiplier")->capture_default_str();
  bn->add_option("--report", bn_report, "JSON report path");
  add_data_options(bn, bn_data, false);

  for (auto* sub : {sim, tr, ev, bl, bn}) {
    sub->add_option("--seed", seed, "master seed")->capture_default_str();
    sub->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    sub->configurable();
  }
  app.set_config("--config", "", "replay a run manifest written by an earlier run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) {
      fs::create_directories(sim_out);
      const auto d = simnet::generate_paired_dataset(sim_pairs, base, channel, seed, jobs);
      write_dataset_dir(sim_out, d);
      write_run_manifest(sim, (fs::path(sim_out) / "run.ini").string());
      std::printf("wrote %zu pairs to %s\n", d.size(), sim_out.c_str());
    } else if (*tr) {
      require_dataset_dir(tr_data.dir);
      if (loss_history.empty()) loss_history = sibling(checkpoint, ".loss.csv");
      prepare_output(checkpoint);
      prepare_output(loss_history);
      auto base_cfg =
          preset_name == "tor" ? deepcorr::tor_preset() : deepcorr::stepping_preset();
      // Architecture widths come from the preset; everything else from flags.
      cfg.preset = base_cfg.preset;
      cfg.k1 = base_cfg.k1;
      cfg.k2 = base_cfg.k2;
      cfg.w1 = base_cfg.w1;
      cfg.w2 = base_cfg.w2;
      cfg.fc_sizes = base_cfg.fc_sizes;
      cfg.seed = seed;
      cfg.resample_negatives = !no_resample;
      cfg.stepping_direction = direction == "up" ? Direction::upstream : Direction::downstream;
      deepcorr::preset_shape_trace(cfg);
      const auto data = load_dataset(tr_data, seed);
      const auto report = deepcorr::train(data, cfg, [&](const deepcorr::EpochStats& s) {
        std::fprintf(stderr, "epoch %zu/%zu loss %.6f steps %zu (%.1f s)\n", s.epoch + 1,
                     cfg.epochs, s.mean_loss, s.steps, s.seconds);
      });
      nn::save_checkpoint(report.network, checkpoint);
      std::ostringstream hist;
      hist << "epoch,loss\n";
      for (std::size_t e = 0; e < report.loss_history.size(); ++e)
        hist << e << ',' << eval::format_double(report.loss_history[e]) << '\n';
      write_text(loss_history, hist.str());
      write_run_manifest(tr, sibling(checkpoint, ".run.ini"));
      std::printf("trained %zu steps on %zu pairs; final loss %s; checkpoint %s\n", report.steps,
                  data.size(),
                  report.loss_history.empty()
                      ? "n/a"
                      : eval::format_double(report.loss_history.back()).c_str(),
                  checkpoint.c_str());
    } else if (*ev) {
      require_file(ev_checkpoint, "checkpoint");
      require_dataset_dir(ev_data.dir);
      prepare_report(ev_report);
      const auto net = nn::load_checkpoint(ev_checkpoint);
      const auto data = load_dataset(ev_data, seed);
      write_report(ev_report, "deepcorr", harness::deepcorr_matrix(net, data, jobs));
      write_run_manifest(ev, sibling(ev_report.roc, ".run.ini"));
    } else if (*bl) {
      require_dataset_dir(bl_data.dir);
      prepare_report(bl_report);
      const auto metric = statcorr::parse_metric(metric_name);
      const auto channels = parse_channels(channel_names);
      const auto data = load_dataset(bl_data, seed);
      write_report(bl_report, metric_name,
                   harness::baseline_matrix(data, metric, channels, bl_flow_len, bins, jobs));
      write_run_manifest(bl, sibling(bl_report.roc, ".run.ini"));
    } else if (*bn) {
      if (!bn_checkpoint.empty()) require_file(bn_checkpoint, "checkpoint");
      if (!bn_data.dir.empty()) require_dataset_dir(bn_data.dir);
      if (!bn_report.empty()) prepare_output(bn_report);
      nn::Network net;
      if (!bn_checkpoint.empty()) {
        net = nn::load_checkpoint(bn_checkpoint);
      } else {
        auto c = bn_preset == "tor" ? deepcorr::tor_preset() : deepcorr::stepping_preset();
        c.scale = bn_scale;
        c.seed = seed;
        net = deepcorr::build_network(c);
      }
      const auto data = bn_data.dir.empty()
                            ? simnet::generate_paired_dataset(bn_pairs, {}, {}, seed, jobs)
                            : load_dataset(bn_data, seed);
      std::vector<FlowFeatures> net_in, net_out, unit_in, unit_out;
      for (std::size_t i = 0; i < data.size(); ++i) {
        net_in.push_back(deepcorr::network_features(net, data.entry(i)));
        net_out.push_back(deepcorr::network_features(net, data.exit(i)));
        unit_in.push_back(compute_features(data.entry(i), 300, ScalingConfig::unit()));
        unit_out.push_back(compute_features(data.exit(i), 300, ScalingConfig::unit()));
      }
      nlohmann::json report;
      report["pairs"] = data.size();
      report["repetitions"] = reps;
      report["parameters"] = net.parameter_count();
      std::printf("%-10s %12s %12s\n", "scorer", "mean_ms", "p95_ms");
      auto record = [&](const std::string& name, const eval::LatencyStats& s) {
        std::printf("%-10s %12.4f %12.4f\n", name.c_str(), s.mean_ms, s.p95_ms);
        report["scorers"][name] = {{"mean_ms", s.mean_ms}, {"p95_ms", s.p95_ms},
                                   {"samples", s.samples}};
      };
      const auto layout = net.info().layout;
      record("deepcorr", eval::benchmark_correlation_time(
                             [&](std::size_t i) {
                               return deepcorr::score_pair(
                                   net, make_pair_matrix(net_in[i], net_out[i], layout));
                             },
                             data.size(), reps));
      for (const auto metric : statcorr::kAllMetrics)
        record(statcorr::to_string(metric),
               eval::benchmark_correlation_time(
                   [&](std::size_t i) {
                     return statcorr::baseline_score(unit_in[i], unit_out[i], metric);
                   },
                   data.size(), reps));
      if (!bn_report.empty()) {
        write_text(bn_report, report.dump(2) + "\n");
        write_run_manifest(bn, sibling(bn_report, ".run.ini"));
      }
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  }
  return kOk;
}
