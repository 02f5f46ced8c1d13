#pragma once

#include <boost/uuid/detail/sha1.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "swag/config.hpp"
#include "swag/error.hpp"
#include "swag/postprocess.hpp"
#include "swag/swag.hpp"

namespace swag {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kLibraryFormatVersion = 1;
inline constexpr int kSummaryFormatVersion = 1;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Writes through a sibling temporary and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::IoError, "cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

/// Git blob object id: SHA-1 of "blob <size>\0<content>".
inline std::string git_blob_hash(const std::string& content) {
  boost::uuids::detail::sha1 sha;
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  sha.process_bytes(header.data(), header.size());
  sha.process_bytes(content.data(), content.size());
  boost::uuids::detail::sha1::digest_type digest;
  sha.get_digest(digest);
  char buf[41];
  for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", digest[i]);
  return std::string(buf, 40);
}

// ---------------------------------------------------------------------------
// Config echo

inline ordered_json mechanism_to_json(const MechanismConfig& mech) {
  ordered_json j;
  j["kind"] = std::string(to_string(mech.kind()));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogisticParams>) {
          j["lambda"] = p.lambda;
          j["max_iters"] = p.max_iters;
          j["tol"] = p.tol;
        } else if constexpr (std::is_same_v<T, LinearSvmParams>) {
          j["lambda"] = p.lambda;
          j["epochs"] = p.epochs;
        } else {
          j["k_neighbors"] = p.k_neighbors;
        }
      },
      mech.params());
  return j;
}

inline MechanismConfig mechanism_from_json(const nlohmann::json& j) {
  switch (parse_mechanism_kind(j.at("kind").get<std::string>())) {
    case MechanismKind::Logistic:
      return MechanismConfig(LogisticParams{j.at("lambda").get<double>(), j.at("max_iters").get<int>(),
                                            j.at("tol").get<double>()});
    case MechanismKind::LinearSvm:
      return MechanismConfig(LinearSvmParams{j.at("lambda").get<double>(), j.at("epochs").get<int>()});
    case MechanismKind::Knn:
      return MechanismConfig(KnnParams{j.at("k_neighbors").get<int>()});
  }
  throw Error(ErrorCode::FormatError, "unknown mechanism");
}

/// Config echo; the output block is included only when asked for, so that
/// library documents do not depend on where they were written.
inline ordered_json config_to_json(const RunConfig& cfg, bool include_output) {
  ordered_json j;
  j["dataset"] = {{"path", cfg.dataset.path},
                  {"response_column", cfg.dataset.response_column},
                  {"test_fraction", cfg.dataset.test_fraction},
                  {"split_seed", cfg.dataset.split_seed}};
  j["swag"] = {{"p_max", cfg.swag.p_max},
               {"m", cfg.swag.m},
               {"alpha", cfg.swag.alpha},
               {"r", cfg.swag.r},
               {"k", cfg.swag.k},
               {"seed", cfg.swag.seed},
               {"max_generation_attempts_factor", cfg.swag.max_generation_attempts_factor}};
  j["mechanism"] = mechanism_to_json(cfg.swag.mechanism);
  ordered_json loss{{"kind", std::string(to_string(cfg.loss.kind))}};
  if (cfg.loss.kind == LossKind::CostMatrix) {
    loss["classes"] = cfg.loss.classes;
    loss["cost"] = cfg.loss.cost;
  }
  j["loss"] = loss;
  ordered_json post{{"delta", cfg.postprocess.delta}};
  if (cfg.postprocess.dimension_filter)
    post["dimension_filter"] = {cfg.postprocess.dimension_filter->min, cfg.postprocess.dimension_filter->max};
  j["postprocess"] = post;
  if (include_output) j["output"] = {{"directory", cfg.output.directory}, {"formats", cfg.output.formats}};
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  const auto& ds = j.at("dataset");
  cfg.dataset = {ds.at("path").get<std::string>(), ds.at("response_column").get<std::string>(),
                 ds.at("test_fraction").get<double>(), ds.at("split_seed").get<std::uint64_t>()};
  const auto& sw = j.at("swag");
  cfg.swag.p_max = sw.at("p_max").get<std::size_t>();
  cfg.swag.m = sw.at("m").get<std::size_t>();
  cfg.swag.alpha = sw.at("alpha").get<double>();
  cfg.swag.r = sw.at("r").get<int>();
  cfg.swag.k = sw.at("k").get<int>();
  cfg.swag.seed = sw.at("seed").get<std::uint64_t>();
  cfg.swag.max_generation_attempts_factor = sw.at("max_generation_attempts_factor").get<std::size_t>();
  cfg.swag.mechanism = mechanism_from_json(j.at("mechanism"));
  const auto& ls = j.at("loss");
  cfg.loss.kind = ls.at("kind") == "cost_matrix" ? LossKind::CostMatrix : LossKind::Misclassification;
  if (cfg.loss.kind == LossKind::CostMatrix) {
    cfg.loss.classes = ls.at("classes").get<std::vector<std::string>>();
    cfg.loss.cost = ls.at("cost").get<std::vector<std::vector<double>>>();
  }
  const auto& pp = j.at("postprocess");
  cfg.postprocess.delta = pp.at("delta").get<double>();
  if (pp.contains("dimension_filter")) {
    auto range = pp.at("dimension_filter").get<std::vector<std::size_t>>();
    if (range.size() != 2) throw Error(ErrorCode::FormatError, "dimension_filter must be [min, max]");
    cfg.postprocess.dimension_filter = DimensionFilter{range[0], range[1]};
  }
  if (j.contains("output")) {
    cfg.output.directory = j.at("output").at("directory").get<std::string>();
    cfg.output.formats = j.at("output").at("formats").get<std::vector<std::string>>();
  }
  cfg.swag.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Library document

/// What a library needs to be re-read without the original run: the dataset
/// shape and names, where it came from and the training partition used.
struct DatasetRecord {
  std::string response_column;
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::string> attribute_names;
  std::vector<std::string> class_labels;
  std::string source_path;   // as resolved at run time
  std::string content_hash;  // git blob id of the source file
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct LibraryDocument {
  RunConfig config;
  DatasetRecord dataset;
  SwagLibrary library;
};

inline ordered_json dataset_record_to_json(const DatasetRecord& d) {
  return ordered_json{{"response_column", d.response_column},
                      {"n", d.n},
                      {"p", d.p},
                      {"attribute_names", d.attribute_names},
                      {"class_labels", d.class_labels},
                      {"source_path", d.source_path},
                      {"content_hash", d.content_hash},
                      {"train_rows", d.train_rows},
                      {"test_rows", d.test_rows}};
}

inline DatasetRecord dataset_record_from_json(const nlohmann::json& j) {
  DatasetRecord d;
  d.response_column = j.at("response_column").get<std::string>();
  d.n = j.at("n").get<std::size_t>();
  d.p = j.at("p").get<std::size_t>();
  d.attribute_names = j.at("attribute_names").get<std::vector<std::string>>();
  d.class_labels = j.at("class_labels").get<std::vector<std::string>>();
  d.source_path = j.at("source_path").get<std::string>();
  d.content_hash = j.at("content_hash").get<std::string>();
  d.train_rows = j.at("train_rows").get<std::vector<std::size_t>>();
  d.test_rows = j.at("test_rows").get<std::vector<std::size_t>>();
  return d;
}

inline ordered_json learner_to_json(const EvaluatedLearner& l) {
  ordered_json j{{"attributes", l.spec.attributes()}, {"error", l.error}};
  if (l.signs) j["signs"] = *l.signs;
  return j;
}

inline EvaluatedLearner learner_from_json(const nlohmann::json& j) {
  EvaluatedLearner l{LearnerSpec(j.at("attributes").get<std::vector<std::size_t>>()), j.at("error").get<double>(),
                     std::nullopt};
  if (j.contains("signs")) l.signs = j.at("signs").get<std::vector<int>>();
  return l;
}

inline std::string library_to_json(const LibraryDocument& doc) {
  ordered_json j;
  j["format"] = "swag.library";
  j["version"] = kLibraryFormatVersion;
  j["config"] = config_to_json(doc.config, false);
  j["dataset"] = dataset_record_to_json(doc.dataset);
  j["s_star"] = doc.library.s_star;
  j["steps"] = ordered_json::array();
  for (const auto& step : doc.library.steps) {
    ordered_json js;
    js["dimension"] = step.dimension;
    js["exhaustive"] = step.exhaustive;
    js["q_alpha"] = step.q_alpha;
    js["candidates"] = ordered_json::array();
    ordered_json selected = ordered_json::array();
    for (std::size_t i = 0; i < step.candidates.size(); ++i) {
      js["candidates"].push_back(learner_to_json(step.candidates[i]));
      if (step.candidates[i].error <= step.q_alpha) selected.push_back(i);
    }
    js["selected"] = selected;
    ordered_json failed = ordered_json::array();
    for (const auto& f : step.failed) failed.push_back(f.attributes());
    js["failed"] = failed;
    j["steps"].push_back(std::move(js));
  }
  return j.dump(1) + "\n";
}

inline LibraryDocument parse_library_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object() || j.value("format", "") != "swag.library")
      throw Error(ErrorCode::FormatError, "not a swag.library document");
    if (j.at("version") != kLibraryFormatVersion)
      throw Error(ErrorCode::UnsupportedVersion, "unsupported library version " + j.at("version").dump());
    LibraryDocument doc;
    doc.config = config_from_json(j.at("config"));
    doc.dataset = dataset_record_from_json(j.at("dataset"));
    doc.library.s_star = j.at("s_star").get<std::vector<std::size_t>>();
    for (const auto& js : j.at("steps")) {
      StepResult step;
      step.dimension = js.at("dimension").get<std::size_t>();
      step.exhaustive = js.at("exhaustive").get<bool>();
      step.q_alpha = js.at("q_alpha").get<double>();
      for (const auto& c : js.at("candidates")) step.candidates.push_back(learner_from_json(c));
      for (const auto& i : js.at("selected")) {
        auto idx = i.get<std::size_t>();
        if (idx >= step.candidates.size()) throw Error(ErrorCode::FormatError, "selected index out of range");
        step.selected.push_back(step.candidates[idx]);
      }
      if (step.selected != select_at_most(step.candidates, step.q_alpha))
        throw Error(ErrorCode::FormatError,
                    "selection of dimension " + std::to_string(step.dimension) + " disagrees with q_alpha");
      for (const auto& f : js.at("failed")) step.failed.emplace_back(f.get<std::vector<std::size_t>>());
      doc.library.steps.push_back(std::move(step));
    }
    // Loss is stored as written; resolve it against the recorded classes.
    doc.library.config = doc.config.swag;
    if (doc.config.loss.kind == LossKind::CostMatrix)
      doc.library.config.loss =
          LossSpec::cost_matrix(doc.config.loss.cost, doc.config.loss.classes, doc.dataset.class_labels);
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed library JSON: ") + e.what());
  }
}

inline ordered_json diversity_to_json(const DiversitySummary& d) {
  ordered_json j{{"learners", d.learners}, {"dimension_range", {d.min_dimension, d.max_dimension}}};
  if (d.jaccard) {
    j["median_jaccard"] = d.jaccard->median;
    j["jaccard_range"] = {d.jaccard->min, d.jaccard->max};
  }
  return j;
}

}  // namespace swag
