// rclust: temporal segmentation of feature streams.
//
//   rclust segment --method rcluster in.csv out.seg
//   rclust eval pred.seg gt.seg --tolerance 5
//   rclust sweep --method rcluster --omega1 0:1:0.1 --omega2 0:1:0.1 --synth 20 --out grid
//   rclust synth --segments 5 --dim 16 --seed 7 out.csv out.gt

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rclust/error.hpp"
#include "rclust/evaluation.hpp"

namespace {

using namespace rclust;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitCompute = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Compute: return kExitCompute;
    default: return kExitData;
  }
}

// Numeric module flags, kept as text so `sweep` can accept ranges.
struct ModuleFlags {
  std::map<std::string, std::string> values;
  std::string linkage = "average";
  std::string metric = "cosine";
  std::string statistic = "mean-vector";
  std::size_t max_window = 0;
  bool no_pca = false;

  void add_to(CLI::App& app) {
    struct Flag {
      const char* name;
      const char* fallback;
      const char* help;
    };
    static const Flag flags[] = {
        {"omega1", "1.0", "ADWIN vs AC unary trade-off in [0,1]"},
        {"omega2", "0.5", "pairwise weight in [0,1]"},
        {"radius", "1", "temporal neighbourhood radius"},
        {"cut", "0.3", "dendrogram cut height"},
        {"delta", "0.05", "ADWIN confidence"},
        {"p-norm", "2", "norm order of the ADWIN statistic"},
        {"min-subwindow", "5", "smallest ADWIN subwindow"},
        {"kmeans-k", "5", "k-means cluster count"},
        {"bandwidth", "1.0", "mean-shift bandwidth"},
        {"tolerance", "5", "boundary matching tolerance in frames"},
        {"alpha", "0.5", "signed-root exponent"},
        {"variance", "0.95", "PCA retained variance fraction"},
    };
    for (const auto& f : flags) {
      values[f.name] = f.fallback;
      app.add_option(std::string("--") + f.name, values[f.name], f.help)->capture_default_str();
    }
    app.add_option("--linkage", linkage, "single|centroid|average|weighted|complete|ward|median")
        ->capture_default_str();
    app.add_option("--metric", metric, "cosine|euclidean")->capture_default_str();
    app.add_option("--adwin-statistic", statistic, "mean-vector|norm-mean")->capture_default_str();
    app.add_option("--max-window", max_window, "ADWIN window cap (0 = unbounded)");
    app.add_flag("--no-pca", no_pca, "skip PCA in the unary feature chain");
  }

  // Scalars go into the returned params; multi-valued flags become axes when
  // `axes` is given and are rejected otherwise.
  MethodParams resolve(std::vector<SweepAxis>* axes) const {
    MethodParams p;
    p.ac.linkage = parse_linkage(linkage);
    p.ac.metric = parse_metric(metric);
    if (statistic == "norm-mean") {
      p.adwin.statistic = AdwinStatistic::NormMean;
    } else if (statistic != "mean-vector") {
      throw Error(ErrorKind::Usage, "unknown ADWIN statistic '" + statistic + "'");
    }
    if (max_window > 0) p.adwin.max_window = max_window;
    p.preprocess.pca = !no_pca;
    for (const auto& name : sweep_axis_names()) {
      auto vals = parse_axis_values(values.at(name));
      if (vals.size() == 1) {
        set_param(p, name, vals.front());
      } else if (axes) {
        set_param(p, name, vals.front());
        axes->push_back({name, vals});
      } else {
        throw Error(ErrorKind::Usage, "--" + name + " takes a single value here");
      }
    }
    p.validate();
    return p;
  }
};

struct InputFlags {
  std::string format = "auto";
  bool csv_header = false;
  bool csv_ids = false;

  void add_to(CLI::App& app) {
    app.add_option("--format", format, "feature file format: auto|csv|bin")->capture_default_str();
    app.add_flag("--csv-header", csv_header, "first CSV line is a header");
    app.add_flag("--csv-ids", csv_ids, "first CSV column holds frame ids");
  }

  FeatureStream load(const std::string& path) const {
    FeatureFormat fmt;
    if (format == "auto") {
      fmt = format_from_path(path);
    } else if (format == "csv") {
      fmt = FeatureFormat::Csv;
    } else if (format == "bin") {
      fmt = FeatureFormat::PackedBinary;
    } else {
      throw Error(ErrorKind::Usage, "unknown format '" + format + "'");
    }
    return load_features(path, fmt, CsvOptions{csv_header, csv_ids});
  }
};

std::string boundary_summary(const Segmentation& seg) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(seg.num_segments(), 50);
  for (std::size_t j = 0; j < shown; ++j) {
    if (j) out += ' ';
    out += std::to_string(seg.boundaries()[j]);
  }
  if (shown < seg.num_segments()) out += " ...";
  return out;
}

struct SegmentCmd {
  std::string method = "rcluster";
  std::string input;
  std::string output;
  std::string trace;
  std::string pca_out;
  std::uint64_t seed = 0;
  ModuleFlags flags;
  InputFlags in;

  void add_to(CLI::App& app) {
    app.add_option("--method", method, "adwin|ac|rcluster|kmeans|meanshift")->capture_default_str();
    app.add_option("--seed", seed, "k-means seed")->capture_default_str();
    app.add_option("--trace", trace, "write the energy trace (rcluster only)");
    app.add_option("--pca-out", pca_out, "write the fitted PCA model");
    app.add_option("input", input, "feature file")->required();
    app.add_option("output", output, "segmentation document")->required();
    flags.add_to(app);
    in.add_to(app);
  }

  int run() const {
    auto m = parse_method(method);
    auto params = flags.resolve(nullptr);
    params.baseline.kmeans_seed = seed;
    auto raw = in.load(input);

    auto normalized = signed_root_l2(raw, params.preprocess.alpha);
    PreparedStream data;
    if (params.preprocess.pca && normalized.length() >= 2) {
      auto model = fit_pca(normalized, params.preprocess.variance_fraction);
      if (!pca_out.empty()) write_pca(model, pca_out);
      data.unary = apply_pca(model, normalized);
    } else {
      data.unary = std::move(normalized);
    }
    data.pairwise = minmax_normalize(raw);
    data.raw = std::move(raw);

    Segmentation seg;
    if (m == Method::Rcluster && !trace.empty()) {
      auto ac = ac_segment(data.unary, params.ac);
      auto adw = detect_boundaries(data.unary, params.adwin);
      auto full = rcluster_full(data.unary, data.pairwise, ac, adw, params.gc);
      write_text_file(trace, energy_trace(full, params.gc).dump(2) + "\n");
      seg = full.segmentation;
    } else {
      seg = run_method(m, data, params);
    }

    auto config = to_json(params);
    config["method"] = method;
    config["input"] = input;
    write_segmentation(seg, output, config);
    std::cout << "segments: " << seg.num_segments() << "\n"
              << "boundaries: " << boundary_summary(seg) << "\n";
    return 0;
  }
};

struct EvalCmd {
  std::string pred;
  std::string truth;
  std::size_t tolerance = 5;
  std::string out;

  void add_to(CLI::App& app) {
    app.add_option("prediction", pred, "predicted segmentation")->required();
    app.add_option("ground_truth", truth, "ground-truth segmentation")->required();
    app.add_option("--tolerance", tolerance, "boundary matching tolerance in frames")->capture_default_str();
    app.add_option("--out", out, "write the report here instead of stdout");
  }

  int run() const {
    auto report = evaluate(load_segmentation(pred), load_segmentation(truth), tolerance);
    auto doc = to_json(report);
    doc["config"] = {{"prediction", pred}, {"ground_truth", truth}, {"tolerance", tolerance}};
    auto text = doc.dump(2) + "\n";
    if (out.empty()) {
      std::cout << text;
    } else {
      write_text_file(out, text);
      std::cout << "P=" << report.scores.precision << " R=" << report.scores.recall
                << " FM=" << report.scores.f_measure << "\n";
    }
    return 0;
  }
};

struct SynthFlags {
  SynthSpec spec;
  void add_to(CLI::App& app) {
    app.add_option("--segments", spec.num_segments, "number of segments")->capture_default_str();
    app.add_option("--min-length", spec.min_length, "shortest segment")->capture_default_str();
    app.add_option("--max-length", spec.max_length, "longest segment")->capture_default_str();
    app.add_option("--dim", spec.dim, "feature dimension")->capture_default_str();
    app.add_option("--separation", spec.separation, "consecutive mean distance in sigmas")->capture_default_str();
    app.add_option("--sigma", spec.sigma, "per-dimension noise")->capture_default_str();
    app.add_option("--offset", spec.offset, "common mean level in sigmas")->capture_default_str();
  }
};

nlohmann::ordered_json to_json(const SynthSpec& s) {
  return {{"segments", s.num_segments}, {"min_length", s.min_length}, {"max_length", s.max_length},
          {"dim", s.dim},  {"separation", s.separation}, {"sigma", s.sigma},
          {"offset", s.offset}, {"seed", s.seed}};
}

struct SynthCmd {
  SynthFlags synth;
  std::string features;
  std::string truth;
  std::string format = "auto";

  void add_to(CLI::App& app) {
    synth.add_to(app);
    app.add_option("--seed", synth.spec.seed, "generator seed")->capture_default_str();
    app.add_option("--format", format, "feature file format: auto|csv|bin")->capture_default_str();
    app.add_option("features", features, "output feature file")->required();
    app.add_option("ground_truth", truth, "output ground-truth segmentation")->required();
  }

  int run() const {
    auto data = generate_synthetic(synth.spec);
    bool binary = format == "bin" || (format == "auto" && format_from_path(features) == FeatureFormat::PackedBinary);
    if (format != "auto" && format != "csv" && format != "bin")
      throw Error(ErrorKind::Usage, "unknown format '" + format + "'");
    if (binary) {
      write_features_binary(data.stream, features);
    } else {
      write_features_csv(data.stream, features);
    }
    write_segmentation(data.truth, truth, to_json(synth.spec));
    std::cout << "frames: " << data.stream.length() << "\n"
              << "boundaries: " << boundary_summary(data.truth) << "\n";
    return 0;
  }
};

struct SweepCmd {
  std::string method = "rcluster";
  std::vector<std::string> datasets;
  std::size_t synth_count = 0;
  std::uint64_t synth_seed = 0;
  std::uint64_t seed = 0;
  std::string out;
  SynthFlags synth;
  ModuleFlags flags;
  InputFlags in;

  void add_to(CLI::App& app) {
    app.add_option("--method", method, "adwin|ac|rcluster|kmeans|meanshift")->capture_default_str();
    app.add_option("--dataset", datasets, "FEATURES:GROUND_TRUTH pair (repeatable)");
    app.add_option("--synth", synth_count, "add N synthetic datasets");
    app.add_option("--synth-seed", synth_seed, "seed of the first synthetic dataset")->capture_default_str();
    app.add_option("--seed", seed, "k-means seed")->capture_default_str();
    app.add_option("--out", out, "output prefix: writes PREFIX.json and PREFIX.tsv")->required();
    synth.add_to(app);
    flags.add_to(app);
    in.add_to(app);
  }

  int run() const {
    auto m = parse_method(method);
    std::vector<SweepAxis> axes;
    auto base = flags.resolve(&axes);
    base.baseline.kmeans_seed = seed;

    std::vector<Dataset> data;
    for (const auto& pair : datasets) {
      auto colon = pair.rfind(':');
      if (colon == std::string::npos)
        throw Error(ErrorKind::Usage, "--dataset expects FEATURES:GROUND_TRUTH, got '" + pair + "'");
      auto feat = pair.substr(0, colon);
      data.push_back(make_dataset(feat, in.load(feat), load_segmentation(pair.substr(colon + 1)),
                                  base.preprocess));
    }
    for (std::size_t i = 0; i < synth_count; ++i) {
      auto spec = synth.spec;
      spec.seed = synth_seed + i;
      auto d = generate_synthetic(spec);
      data.push_back(make_dataset("synth-" + std::to_string(spec.seed), std::move(d.stream),
                                  std::move(d.truth), base.preprocess));
    }
    if (data.empty()) throw Error(ErrorKind::Usage, "sweep needs --dataset or --synth");

    auto grid = sweep(data, m, base, axes);
    auto doc = to_json(grid);
    if (synth_count > 0) {
      auto s = to_json(synth.spec);
      s["count"] = synth_count;
      s["seed"] = synth_seed;
      doc["synth"] = std::move(s);
    }
    write_text_file(out + ".json", doc.dump(2) + "\n");
    write_text_file(out + ".tsv", to_table(grid));
    std::cout << "cells: " << grid.cells.size() << "\n";
    if (grid.best) {
      const auto& best = grid.cells[*grid.best];
      std::cout << "best:";
      for (std::size_t a = 0; a < grid.axes.size(); ++a)
        std::cout << ' ' << grid.axes[a].name << '=' << best.point[a];
      std::cout << " fm_mean=" << best.fm_mean << " fm_std=" << best.fm_std << "\n";
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal segmentation of feature streams by ADWIN-regularized clustering"};
  app.require_subcommand(1);

  SegmentCmd segment;
  EvalCmd eval;
  SweepCmd sweep_cmd;
  SynthCmd synth;
  auto* seg_app = app.add_subcommand("segment", "segment a feature stream");
  segment.add_to(*seg_app);
  auto* eval_app = app.add_subcommand("eval", "score a segmentation against ground truth");
  eval.add_to(*eval_app);
  auto* sweep_app = app.add_subcommand("sweep", "grid search of method parameters");
  sweep_cmd.add_to(*sweep_app);
  auto* synth_app = app.add_subcommand("synth", "generate a synthetic benchmark stream");
  synth.add_to(*synth_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (seg_app->parsed()) return segment.run();
    if (eval_app->parsed()) return eval.run();
    if (sweep_app->parsed()) return sweep_cmd.run();
    if (synth_app->parsed()) return synth.run();
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: compute: out of memory\n";
    return kExitCompute;
  } catch (const std::exception& e) {
    std::cerr << "error: compute: " << e.what() << "\n";
    return kExitCompute;
  }
  return kExitUsage;
}
