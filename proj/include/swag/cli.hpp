#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swag/config.hpp"
#include "swag/crossval.hpp"
#include "swag/dataset.hpp"
#include "swag/error.hpp"
#include "swag/io.hpp"
#include "swag/postprocess.hpp"
#include "swag/swag.hpp"

namespace swag::cli {

struct RunFlags {
  unsigned workers = default_worker_count();
  bool quiet = false;
  std::optional<std::string> output_dir;
  bool baseline = false;
};

struct ReportFlags {
  std::optional<double> delta;
  std::optional<DimensionFilter> dims;
  bool json = false;
};

struct EvalFlags {
  bool json = false;
};

/// Machine-readable failure report, one JSON object on one line.
inline void report_error(std::ostream& err, const std::exception& e) {
  ordered_json j;
  j["code"] = "Error";
  if (const auto* se = dynamic_cast<const Error*>(&e)) j["code"] = std::string(to_string(se->code()));
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["field"] = ce->field();
  if (const auto* ce = dynamic_cast<const CellError*>(&e)) {
    j["row"] = ce->row();
    j["column"] = ce->col();
  }
  j["message"] = e.what();
  err << ordered_json{{"error", j}}.dump() << std::endl;
}

inline DimensionFilter parse_dims_flag(const std::string& text) {
  auto f = swag::detail::parse_dimension_range("--dims", text);
  return *f;
}

namespace detail {

inline std::filesystem::path resolve_relative(const std::filesystem::path& base_file, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) p = base_file.parent_path() / p;
  return std::filesystem::weakly_canonical(std::filesystem::absolute(p));
}

inline ordered_json step_summary(const StepResult& step, double seconds) {
  return ordered_json{{"dimension", step.dimension},   {"candidates", step.candidates.size()},
                      {"failed", step.failed.size()},  {"selected", step.selected.size()},
                      {"q_alpha", step.q_alpha},       {"exhaustive", step.exhaustive},
                      {"seconds", seconds}};
}

inline ordered_json final_to_json(const FinalLibrary& f) {
  return ordered_json{{"chosen_dimension", f.chosen_dimension},
                      {"delta", f.delta},
                      {"threshold", f.threshold},
                      {"learners", f.learners.size()}};
}

inline std::string format_range(double lo, double hi) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << '[' << lo << ", " << hi << ']';
  return s.str();
}

/// One-line diversity row: |s_l| range, median Jaccard and Jaccard range.
inline std::string diversity_row(const DiversitySummary& d) {
  std::ostringstream s;
  s << "|s_l| = ";
  if (d.min_dimension == d.max_dimension)
    s << d.min_dimension;
  else
    s << '[' << d.min_dimension << ", " << d.max_dimension << ']';
  if (d.jaccard) {
    s << "  med_J = " << std::fixed << std::setprecision(2) << d.jaccard->median
      << "  range_J = " << format_range(d.jaccard->min, d.jaccard->max);
  } else {
    s << "  med_J = n/a  range_J = n/a";
  }
  s << "  learners = " << d.learners;
  return s.str();
}

}  // namespace detail

/// `run <config>`: trains the library and writes every artifact.
inline int cmd_run(const std::filesystem::path& config_path, const RunFlags& flags,
                   std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const std::string config_text = read_file(config_path);
    std::istringstream config_stream(config_text);
    RunConfig cfg = parse_run_config(config_stream);
    if (flags.output_dir) cfg.output.directory = *flags.output_dir;

    const auto data_path = detail::resolve_relative(config_path, cfg.dataset.path);
    const std::string data_text = read_file(data_path);
    std::istringstream data_stream(data_text);
    const Dataset full = parse_csv(data_stream, cfg.dataset.response_column);
    const auto split = stratified_split(full, cfg.dataset.test_fraction, cfg.dataset.split_seed);
    const Dataset train = full.select_rows(split.train);
    const SwagConfig swag_config = resolve_swag_config(cfg, train);

    std::vector<std::string> warnings;
    std::vector<double> step_seconds;
    RunOptions options;
    options.workers = flags.workers;
    options.on_warning = [&](const std::string& w) {
      warnings.push_back(w);
      if (!flags.quiet) err << ordered_json{{"event", "warning"}, {"message", w}}.dump() << std::endl;
    };
    options.on_step = [&](const StepEvent& e) {
      step_seconds.push_back(e.seconds);
      if (!flags.quiet)
        err << ordered_json{{"event", "step"},          {"dimension", e.dimension},
                            {"candidates", e.candidates}, {"failed", e.failed},
                            {"q_alpha", e.q_alpha},       {"selected", e.selected},
                            {"exhaustive", e.exhaustive}, {"seconds", e.seconds}}
                   .dump()
            << std::endl;
    };

    const auto started = std::chrono::steady_clock::now();
    SwagLibrary library = run_swag(train, swag_config, options);
    const FinalLibrary final_library = median_rule(library, cfg.postprocess.delta, cfg.postprocess.dimension_filter);
    const DiversitySummary diversity = diversity_summary(final_library);
    const AttributeNetwork network = build_network(final_library, train.attribute_names());

    LibraryDocument doc{cfg, {}, library};
    doc.dataset = DatasetRecord{cfg.dataset.response_column,
                                train.n(),
                                train.p(),
                                train.attribute_names(),
                                train.class_names(),
                                data_path.string(),
                                git_blob_hash(data_text),
                                split.train,
                                split.test};

    ordered_json summary;
    summary["format"] = "swag.summary";
    summary["version"] = kSummaryFormatVersion;
    summary["config"] = config_to_json(cfg, true);
    summary["dataset"] = {{"n", full.n()},
                          {"n_train", split.train.size()},
                          {"n_test", split.test.size()},
                          {"p", full.p()},
                          {"attribute_names", full.attribute_names()},
                          {"class_labels", full.class_names()}};
    summary["input_hashes"] = {{"config", git_blob_hash(config_text)}, {"dataset", git_blob_hash(data_text)}};
    summary["steps"] = ordered_json::array();
    for (std::size_t i = 0; i < library.steps.size(); ++i)
      summary["steps"].push_back(detail::step_summary(library.steps[i], i < step_seconds.size() ? step_seconds[i] : 0.0));
    summary["s_star"] = library.s_star;
    summary["learners_trained"] = library.learners_trained();
    summary["learner_bound"] = swag_config.learner_bound(train.p());
    summary["final"] = detail::final_to_json(final_library);
    summary["diversity"] = diversity_to_json(diversity);

    if (flags.baseline) {
      LearnerSpec all(iota_indices(train.p()));
      ordered_json base;
      base["attributes"] = train.p();
      base["cv_error"] = cv_error(train, all, swag_config.mechanism, step_folds(train, swag_config, 1),
                                  swag_config.loss);
      if (!split.test.empty()) {
        const Dataset test = full.select_rows(split.test);
        auto model = fit(swag_config.mechanism, full_view(train));
        base["test_error"] = loss(predict(model, full_view(test)), test.labels(), swag_config.loss);
      }
      summary["baseline"] = base;
    }
    summary["warnings"] = warnings;
    summary["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const std::filesystem::path dir(cfg.output.directory);
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "library.json", library_to_json(doc));
    if (cfg.output.wants("csv"))
      write_file_atomic(dir / "final.csv", final_library_csv(final_library, train.attribute_names()));
    if (cfg.output.wants("json")) write_file_atomic(dir / "network.json", export_network_json(network));
    if (cfg.output.wants("dot")) write_file_atomic(dir / "network.dot", export_network_dot(network));
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

    if (!flags.quiet) out << detail::diversity_row(diversity) << "\n";
    return 0;
  } catch (const std::exception& e) {
    report_error(err, e);
    return 1;
  }
}

/// Median rule and diversity summary recomputed from a library document.
struct ReportResult {
  FinalLibrary final_library;
  DiversitySummary diversity;
};

inline ReportResult compute_report(const LibraryDocument& doc, const ReportFlags& flags) {
  const double delta = flags.delta.value_or(doc.config.postprocess.delta);
  auto filter = flags.dims ? flags.dims : doc.config.postprocess.dimension_filter;
  ReportResult r{median_rule(doc.library, delta, filter), {}};
  r.diversity = diversity_summary(r.final_library);
  return r;
}

/// `report <library.json> [--delta D] [--dims a..b]`.
inline int cmd_report(const std::filesystem::path& library_path, const ReportFlags& flags,
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto doc = parse_library_json(read_file(library_path));
    const auto r = compute_report(doc, flags);
    if (flags.json) {
      out << ordered_json{{"final", detail::final_to_json(r.final_library)},
                          {"diversity", diversity_to_json(r.diversity)}}
                 .dump(2)
          << "\n";
    } else {
      out << detail::diversity_row(r.diversity) << "  threshold = " << swag::detail::format_double(r.final_library.threshold)
          << "  chosen_dimension = " << r.final_library.chosen_dimension << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    report_error(err, e);
    return 1;
  }
}

struct LearnerEvaluation {
  EvaluatedLearner learner;
  double test_error = 0.0;
};

struct EvalResult {
  std::vector<LearnerEvaluation> learners;
  double min_error = 0.0;
  double max_error = 0.0;
  std::size_t rows = 0;
};

/// Refits every final learner on the recorded training partition and scores
/// it on `eval_data`. When `eval_data` is the run's own source file, only its
/// held-out rows are scored (all rows if the run had no test split).
inline EvalResult evaluate_library(const LibraryDocument& doc, const std::string& eval_text) {
  const auto& rec = doc.dataset;
  const std::string train_text = read_file(rec.source_path);
  if (git_blob_hash(train_text) != rec.content_hash)
    throw Error(ErrorCode::FormatError, "training file '" + rec.source_path + "' changed since the run");
  std::istringstream train_stream(train_text);
  const Dataset source = parse_csv(train_stream, rec.response_column);
  const Dataset train = source.select_rows(rec.train_rows);
  if (train.attribute_names() != rec.attribute_names || train.class_names() != rec.class_labels)
    throw Error(ErrorCode::FormatError, "training file no longer matches the library");

  std::istringstream eval_stream(eval_text);
  Dataset eval_data = parse_csv(eval_stream, rec.response_column);
  if (git_blob_hash(eval_text) == rec.content_hash && !rec.test_rows.empty())
    eval_data = eval_data.select_rows(rec.test_rows);

  std::vector<int> truth(eval_data.n());
  for (std::size_t i = 0; i < eval_data.n(); ++i) {
    const auto& name = eval_data.class_names()[static_cast<std::size_t>(eval_data.labels()[i])];
    auto it = std::find(rec.class_labels.begin(), rec.class_labels.end(), name);
    if (it == rec.class_labels.end())
      throw Error(ErrorCode::LabelOutOfRange, "class '" + name + "' does not occur in the training data");
    truth[i] = static_cast<int>(it - rec.class_labels.begin());
  }

  const auto final_library = median_rule(doc.library, doc.config.postprocess.delta, doc.config.postprocess.dimension_filter);
  EvalResult result;
  result.rows = eval_data.n();
  for (const auto& learner : final_library.learners) {
    std::vector<std::size_t> eval_cols;
    for (std::size_t a : learner.spec) {
      const auto& name = rec.attribute_names.at(a);
      auto col = eval_data.attribute_index(name);
      if (col == eval_data.p())
        throw Error(ErrorCode::MissingAttribute, "attribute '" + name + "' is missing from the evaluation data");
      eval_cols.push_back(col);
    }
    auto model = fit(doc.library.config.mechanism, subset_columns(train, learner.spec));
    DatasetView rows(eval_data, iota_indices(eval_data.n()), eval_cols);
    double err = loss(predict(model, rows.matrix()), truth, doc.library.config.loss);
    result.learners.push_back({learner, err});
  }
  result.min_error = result.max_error = result.learners.front().test_error;
  for (const auto& l : result.learners) {
    result.min_error = std::min(result.min_error, l.test_error);
    result.max_error = std::max(result.max_error, l.test_error);
  }
  return result;
}

/// `eval <library.json> <data.csv>`: per-learner held-out errors and their range.
inline int cmd_eval(const std::filesystem::path& library_path, const std::filesystem::path& data_path,
                    const EvalFlags& flags, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto doc = parse_library_json(read_file(library_path));
    const auto result = evaluate_library(doc, read_file(data_path));
    const auto& names = doc.dataset.attribute_names;
    if (flags.json) {
      ordered_json j;
      j["rows"] = result.rows;
      j["learners"] = ordered_json::array();
      for (const auto& l : result.learners) {
        std::vector<std::string> attrs;
        for (std::size_t a : l.learner.spec) attrs.push_back(names[a]);
        j["learners"].push_back({{"attributes", attrs}, {"cv_error", l.learner.error}, {"test_error", l.test_error}});
      }
      j["test_error_range"] = {result.min_error, result.max_error};
      out << j.dump(2) << "\n";
    } else {
      out << "dimension,attributes,cv_error,test_error\n";
      for (const auto& l : result.learners) {
        out << l.learner.spec.size() << ',';
        for (std::size_t i = 0; i < l.learner.spec.size(); ++i) out << (i ? ";" : "") << names[l.learner.spec[i]];
        out << ',' << swag::detail::format_double(l.learner.error) << ','
            << swag::detail::format_double(l.test_error) << '\n';
      }
      out << "# test_error_range " << swag::detail::format_double(result.min_error) << ' '
          << swag::detail::format_double(result.max_error) << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    report_error(err, e);
    return 1;
  }
}

}  // namespace swag::cli
