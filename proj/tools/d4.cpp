// d4: command-line front end.
//
//   d4 fit        learn a basis of decision directions from a feature matrix
//   d4 transform  remove (part of) a learned basis from a feature matrix
//   d4 probe      refit a probe after removing 0..k directions
//   d4 synth      spurious-correlation benchmark
//   d4 debias     remove learned gender directions from a word embedding
//   d4 eval       embedding bias metrics (neighbours-bias, professions, weat, probe)
//   d4 planted    write the synthetic planted-bias embedding fixture
//
// Exit codes: 0 ok, 1 unexpected, 2 input/config, 3 dimension mismatch,
// 4 numerical/learner failure.

#include <Eigen/Core>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "d4/d4.hpp"
#include "d4/embedkit.hpp"
#include "d4/errors.hpp"
#include "d4/io.hpp"
#include "d4/learners.hpp"
#include "d4/synthbench.hpp"

namespace {

using namespace d4;
using ojson = nlohmann::ordered_json;

bool g_quiet = false;

void progress(const std::string& msg) {
  if (!g_quiet) std::cerr << msg << '\n';
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

void write_json(const std::string& path, const ojson& j) {
  write_file_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, [&](std::ostream& out) { out << text; });
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::pair<std::string, std::string> parse_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == text.size() ||
      text.find(',', comma + 1) != std::string::npos) {
    throw ConfigError("direction pair must look like 'he,she', got '" + text + "'");
  }
  return {text.substr(0, comma), text.substr(comma + 1)};
}

EmbeddingFormat resolve_format(const std::string& flag, const std::string& path) {
  if (!flag.empty()) return embedding_format_from_string(flag);
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".txt" || ext == ".vec" ? EmbeddingFormat::text : EmbeddingFormat::word2vec_binary;
}

EmbeddingSet load_embedding_reporting(const std::string& path, EmbeddingFormat format) {
  LoadReport report;
  EmbeddingSet emb = load_embeddings(path, format, &report);
  if (!report.duplicates.empty()) {
    warn(path + ": skipped " + std::to_string(report.duplicates.size()) + " duplicate word(s)");
  }
  progress("loaded " + std::to_string(emb.size()) + " x " + std::to_string(emb.dim()) +
           " embedding from " + path);
  return emb;
}

ojson string_array(const std::vector<std::string>& words) {
  ojson arr = ojson::array();
  for (const auto& w : words) arr.push_back(w);
  return arr;
}

// --- fit ------------------------------------------------------------------

struct FitArgs {
  std::string features, targets, out;
  std::string learner = "ridge", mode = "projector", stop = "fixed", task = "auto";
  double reg = 1.0;
  int iterations = 1;
  bool no_intercept = false;
  double tau = 0.02;
  int patience = 2;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

D4Config make_config(const FitArgs& a) {
  D4Config c;
  c.learner.kind = learner_from_string(a.learner);
  c.learner.regularization = a.reg;
  c.learner.fit_intercept = !a.no_intercept;
  c.max_iterations = a.iterations;
  c.mode = mode_from_string(a.mode);
  c.stopping = stop_rule_from_string(a.stop);
  c.tau = a.tau;
  c.patience = a.patience;
  c.validation_fraction = a.validation_fraction;
  c.seed = a.seed;
  return c;
}

void add_learner_options(CLI::App* cmd, FitArgs& a) {
  cmd->add_option("--learner", a.learner, "ridge or logistic")->capture_default_str();
  cmd->add_option("--reg", a.reg, "L2 regularization strength")->capture_default_str();
  cmd->add_flag("--no-intercept", a.no_intercept, "fit without an intercept");
}

int run_fit(const FitArgs& a) {
  if (a.iterations < 1) throw ConfigError("at least 1 iteration required");
  const Matrix X = read_matrix(a.features);
  const Vector y = read_targets(a.targets);
  if (y.size() != X.rows()) {
    throw DimensionMismatch(a.targets + " has " + std::to_string(y.size()) + " rows but " +
                            a.features + " has " + std::to_string(X.rows()));
  }
  const Task task = a.task == "auto" ? detect_task(y) : task_from_string(a.task);
  const D4Config config = make_config(a);
  progress("fitting " + std::to_string(config.max_iterations) + " direction(s) on " +
           std::to_string(X.rows()) + " x " + std::to_string(X.cols()) + " (" + to_string(task) + ")");
  const D4Model model = d4_fit(X, y, task, config);

  const char* metric = task == Task::binary ? "accuracy" : "mae";
  std::cout << "iteration  train_" << metric << "  validation_" << metric << '\n';
  for (const auto& d : model.diagnostics) {
    std::cout << d.iteration << "  " << fmt(d.train_metric) << "  "
              << (d.validation_metric ? fmt(*d.validation_metric) : std::string("-")) << '\n';
  }
  std::cout << "status: " << to_string(model.status);
  if (!model.message.empty()) std::cout << " (" << model.message << ")";
  std::cout << '\n';
  write_model(a.out, model, config_to_json(config));
  return 0;
}

// --- transform -------------------------------------------------------------

struct TransformArgs {
  std::string features, model, out_perp, out_par;
  std::optional<long> k;
  bool reduced = false;
};

int run_transform(const TransformArgs& a) {
  const Matrix X = read_matrix(a.features);
  const D4Model model = read_model(a.model);
  if (X.cols() != model.dim()) {
    throw DimensionMismatch(a.features + " has " + std::to_string(X.cols()) +
                            " columns but the model dimension is " + std::to_string(model.dim()));
  }
  const Index k = a.k ? static_cast<Index>(*a.k) : model.size();
  if (k < 0 || k > model.size()) {
    throw ConfigError("--k must lie in [0, " + std::to_string(model.size()) + "]");
  }
  if (a.reduced) {
    if (!a.out_par.empty()) throw ConfigError("--out-par cannot be combined with --reduced");
    if (k == X.cols()) warn("k equals the dimension; the reduced matrix has no columns");
    write_matrix(a.out_perp, d4_reduce(X, model, k, true), matrix_format_for_path(a.out_perp));
    return 0;
  }
  Matrix perp, par;
  if (k == 0) {
    perp = X;
    par = Matrix::Zero(X.rows(), X.cols());
  } else {
    Decomposition parts = d4_transform(X, model, k);
    perp = std::move(parts.perp);
    par = std::move(parts.par);
  }
  write_matrix(a.out_perp, perp, matrix_format_for_path(a.out_perp));
  if (!a.out_par.empty()) write_matrix(a.out_par, par, matrix_format_for_path(a.out_par));
  return 0;
}

// --- probe -----------------------------------------------------------------

struct ProbeArgs {
  FitArgs learner;
  std::string model, heldout_features, heldout_targets, out;
};

int run_probe(const ProbeArgs& a) {
  const Matrix X = read_matrix(a.learner.features);
  const Vector y = read_targets(a.learner.targets);
  if (y.size() != X.rows()) throw DimensionMismatch(a.learner.targets + ": row count differs from features");
  const D4Model model = read_model(a.model);
  if (X.cols() != model.dim()) throw DimensionMismatch(a.learner.features + ": column count differs from model");
  const Task task = a.learner.task == "auto" ? detect_task(y) : task_from_string(a.learner.task);
  const LearnerSpec spec = make_config(a.learner).learner;

  std::optional<Matrix> Xh;
  std::optional<Vector> yh;
  if (a.heldout_features.empty() != a.heldout_targets.empty()) {
    throw ConfigError("--heldout-features and --heldout-targets go together");
  }
  if (!a.heldout_features.empty()) {
    Xh = read_matrix(a.heldout_features);
    yh = read_targets(a.heldout_targets);
    if (Xh->cols() != X.cols() || Xh->rows() != yh->size()) {
      throw DimensionMismatch("held-out data does not match the training shape");
    }
  }
  const auto points = probe_trajectory(X, y, task, model, spec,
                                       Xh ? std::optional<HeldOut>(HeldOut{*Xh, *yh}) : std::nullopt);
  std::ostringstream csv;
  csv << "removed,train_metric,heldout_metric\n";
  std::cout << "removed  train  heldout\n";
  for (const auto& p : points) {
    csv << p.removed << ',' << format_double(p.train_metric) << ','
        << (p.heldout_metric ? format_double(*p.heldout_metric) : std::string()) << '\n';
    std::cout << p.removed << "  " << fmt(p.train_metric) << "  "
              << (p.heldout_metric ? fmt(*p.heldout_metric) : std::string("-")) << '\n';
  }
  if (!a.out.empty()) write_text(a.out, csv.str());
  return 0;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string preset, out;
  std::optional<long> n, p, test_n;
  std::optional<double> corr, test_corr, std1, std2, flip, reg;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  SynthConfig train = table1_train_config(a.seed);
  SynthConfig test = table1_test_config(a.seed);
  LearnerSpec learner = table1_learner();
  if (a.preset == "table1-small") {
    train.n = 20000;
    test.n = 20000;
  } else if (!a.preset.empty() && a.preset != "table1") {
    throw ConfigError("unknown preset '" + a.preset + "' (expected table1 or table1-small)");
  }
  if (a.n) train.n = test.n = static_cast<Index>(*a.n);
  if (a.test_n) test.n = static_cast<Index>(*a.test_n);
  if (a.p) train.p = test.p = static_cast<Index>(*a.p);
  if (a.corr) {
    train.corr = *a.corr;
    test.corr = -*a.corr;
  }
  if (a.test_corr) test.corr = *a.test_corr;
  if (a.std1) train.std1 = test.std1 = *a.std1;
  if (a.std2) train.std2 = test.std2 = *a.std2;
  if (a.flip) train.flip_prob = test.flip_prob = *a.flip;
  if (a.reg) learner.regularization = *a.reg;
  train.validate();
  test.validate();
  learner.validate();

  progress("synth: n=" + std::to_string(train.n) + " p=" + std::to_string(train.p) +
           " corr=" + fmt(train.corr, 2) + "/" + fmt(test.corr, 2));
  const ExperimentTable table = run_experiment(train, test, learner);
  write_pretty(std::cout, table);
  if (!a.out.empty()) {
    write_file_atomic(a.out, [&](std::ostream& out) { write_csv(out, table); });
  }
  return 0;
}

// --- debias ----------------------------------------------------------------

struct DebiasArgs {
  std::string embedding, format, lexicon, out_embedding, out_model, report;
  FitArgs fit;
  bool no_normalize = false;
  int probe_folds = 5;
};

int run_debias(const DebiasArgs& a) {
  if (a.fit.iterations < 1) throw ConfigError("at least 1 iteration required");
  const EmbeddingFormat format = resolve_format(a.format, a.embedding);
  const GenderLexicon lex = load_lexicon(a.lexicon);
  const EmbeddingSet emb = load_embedding_reporting(a.embedding, format);

  DebiasOptions options;
  options.d4 = make_config(a.fit);
  options.normalize = !a.no_normalize;
  options.probe_folds = a.probe_folds;
  const DebiasResult result = debias(emb, lex, options);
  if (!result.missing.empty()) {
    warn(std::to_string(result.missing.size()) + " lexicon word(s) are not in the vocabulary");
  }

  std::cout << "removed  probe_cv_accuracy\n";
  for (std::size_t i = 0; i < result.probe_cv.size(); ++i) {
    std::cout << i << "  " << fmt(result.probe_cv[i]) << '\n';
  }
  std::cout << "status: " << to_string(result.model.status) << '\n';

  ojson report;
  report["tool_version"] = kToolVersion;
  report["embedding"] = a.embedding;
  report["words"] = emb.size();
  report["dim"] = emb.dim();
  report["normalize"] = options.normalize;
  report["config"] = config_to_json(options.d4);
  report["status"] = to_string(result.model.status);
  report["directions"] = result.model.size();
  report["masculine_used"] = result.masculine_used;
  report["feminine_used"] = result.feminine_used;
  report["missing"] = string_array(result.missing);
  ojson iters = ojson::array();
  for (std::size_t i = 0; i < result.probe_cv.size(); ++i) {
    ojson row;
    row["removed"] = i;
    row["probe_cv_accuracy"] = result.probe_cv[i];
    if (i > 0 && i <= result.model.diagnostics.size()) {
      row["train_accuracy"] = result.model.diagnostics[i - 1].train_metric;
    }
    iters.push_back(row);
  }
  report["iterations"] = iters;
  if (!result.probe_cv.empty()) report["final_probe_cv_accuracy"] = result.probe_cv.back();

  save_embeddings(a.out_embedding, result.embedding, format);
  if (!a.out_model.empty()) write_model(a.out_model, result.model, config_to_json(options.d4));
  if (!a.report.empty()) write_json(a.report, report);
  return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string embedding, format, out, report, pair = "he,she";
  bool no_normalize = false;
  std::uint64_t seed = 0;
  // neighbours-bias
  long n_extreme = 500, top_n = 0;
  std::string ranking;
  // professions
  std::string professions;
  long k = 100;
  // weat
  std::string weat;
  // probe
  std::string lexicon, kernel = "rbf";
  std::optional<double> gamma;
  double reg = 1.0;
  int folds = 5;
};

int run_neighbours_bias(const EvalArgs& a) {
  const EmbeddingFormat format = resolve_format(a.format, a.embedding);
  const EmbeddingSet emb = load_embedding_reporting(a.embedding, format);
  std::optional<EmbeddingSet> ranking;
  if (!a.ranking.empty()) ranking = load_embedding_reporting(a.ranking, resolve_format(a.format, a.ranking));
  const EmbeddingSet& dir_source = ranking ? *ranking : emb;
  const Vector direction = gender_direction(dir_source, parse_pair(a.pair), !a.no_normalize);

  BiasByNeighbourOptions options;
  options.n_extreme = a.n_extreme;
  options.top_n = a.top_n;
  options.seed = a.seed;
  options.normalize = !a.no_normalize;
  options.ranking = ranking ? &*ranking : nullptr;
  const BiasByNeighbourResult r = bias_by_neighbour(emb, direction, options);
  std::cout << "neighbours-bias accuracy: " << fmt(r.accuracy) << '\n';

  if (!a.out.empty()) {
    std::ostringstream csv;
    csv << "word,side,dot,cluster\n";
    for (std::size_t i = 0; i < r.selected.size(); ++i) {
      const auto ii = static_cast<Index>(i);
      csv << emb.word(r.selected[i]) << ',' << (r.side[ii] > 0 ? 1 : -1) << ','
          << format_double(r.dots[ii]) << ',' << r.assignment[i] << '\n';
    }
    write_text(a.out, csv.str());
  }
  if (!a.report.empty()) {
    ojson j;
    j["metric"] = "neighbours-bias";
    j["accuracy"] = r.accuracy;
    j["n_extreme"] = a.n_extreme;
    j["direction_pair"] = a.pair;
    j["seed"] = a.seed;
    write_json(a.report, j);
  }
  return 0;
}

int run_professions(const EvalArgs& a) {
  if (a.professions.empty()) throw ConfigError("--professions is required");
  const EmbeddingFormat format = resolve_format(a.format, a.embedding);
  const auto words = load_word_list(a.professions);
  const EmbeddingSet emb = load_embedding_reporting(a.embedding, format);
  const Vector direction = gender_direction(emb, parse_pair(a.pair), !a.no_normalize);
  const ProfessionReport r =
      profession_neighbour_counts(emb, words, direction, static_cast<Index>(a.k), !a.no_normalize);

  std::size_t positive = 0;
  for (const auto& rec : r.records) positive += rec.positive;
  std::cout << "professions: " << r.records.size() << " found, " << r.missing.size()
            << " missing, " << positive << " on the positive side\n";
  if (!a.out.empty()) {
    std::ostringstream csv;
    csv << "word,dot,positive,biased_neighbours\n";
    for (const auto& rec : r.records) {
      csv << rec.word << ',' << format_double(rec.dot) << ',' << (rec.positive ? 1 : 0) << ','
          << rec.biased_neighbours << '\n';
    }
    write_text(a.out, csv.str());
  }
  if (!a.report.empty()) {
    ojson j;
    j["metric"] = "professions";
    j["k"] = a.k;
    j["direction_pair"] = a.pair;
    j["found"] = r.records.size();
    j["positive"] = positive;
    j["missing"] = string_array(r.missing);
    write_json(a.report, j);
  }
  return 0;
}

int run_weat(const EvalArgs& a) {
  if (a.weat.empty()) throw ConfigError("--weat is required");
  const EmbeddingFormat format = resolve_format(a.format, a.embedding);
  const WeatSpec spec = load_weat_spec(a.weat);
  const EmbeddingSet emb = load_embedding_reporting(a.embedding, format);
  const WeatResult r = weat(emb, spec);
  std::cout << "weat effect size: " << fmt(r.effect_size) << '\n';
  if (!a.out.empty()) {
    std::ostringstream csv;
    csv << "word,set,s\n";
    for (const auto& s : r.scores) csv << s.word << ',' << s.set << ',' << format_double(s.s) << '\n';
    write_text(a.out, csv.str());
  }
  if (!a.report.empty()) {
    ojson j;
    j["metric"] = "weat";
    j["name"] = spec.name;
    j["effect_size"] = r.effect_size;
    j["mean_diff"] = r.mean_diff;
    j["missing"] = string_array(r.missing);
    write_json(a.report, j);
  }
  return 0;
}

int run_eval_probe(const EvalArgs& a) {
  if (a.lexicon.empty()) throw ConfigError("--lexicon is required");
  const EmbeddingFormat format = resolve_format(a.format, a.embedding);
  const GenderLexicon lex = load_lexicon(a.lexicon);
  const EmbeddingSet emb = load_embedding_reporting(a.embedding, format);
  ProbeOptions options;
  options.kernel = probe_kernel_from_string(a.kernel);
  options.gamma = a.gamma;
  options.ridge_alpha = a.reg;
  options.folds = a.folds;
  options.seed = a.seed;
  options.normalize = !a.no_normalize;
  const ProbeResult r = recoverability_probe(emb, lex, options);
  std::cout << a.kernel << " probe accuracy: " << fmt(r.accuracy) << '\n';
  if (!a.out.empty()) {
    std::ostringstream csv;
    csv << "fold,accuracy\n";
    for (std::size_t f = 0; f < r.fold_accuracy.size(); ++f) {
      csv << f << ',' << format_double(r.fold_accuracy[f]) << '\n';
    }
    write_text(a.out, csv.str());
  }
  if (!a.report.empty()) {
    ojson j;
    j["metric"] = "probe";
    j["kernel"] = a.kernel;
    j["accuracy"] = r.accuracy;
    j["fold_accuracy"] = r.fold_accuracy;
    j["n_feminine"] = r.n_positive;
    j["n_masculine"] = r.n_negative;
    j["seed"] = a.seed;
    j["missing"] = string_array(r.missing);
    write_json(a.report, j);
  }
  return 0;
}

// --- planted ---------------------------------------------------------------

struct PlantedArgs {
  std::string out_dir, format = "bin";
  PlantedConfig config;
};

int run_planted(const PlantedArgs& a) {
  const EmbeddingFormat format = embedding_format_from_string(a.format);
  const PlantedEmbedding planted = make_planted_embedding(a.config);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create '" + a.out_dir + "': " + ec.message());
  const fs::path dir(a.out_dir);
  const std::string ext = format == EmbeddingFormat::text ? "txt" : "bin";
  save_embeddings((dir / ("embedding." + ext)).string(), planted.embedding, format);
  write_lexicon((dir / "lexicon.txt").string(), planted.lexicon);
  write_weat_spec((dir / "weat.txt").string(), planted.weat);
  write_word_list((dir / "professions.txt").string(), planted.professions);
  Matrix direction = planted.bias_direction.transpose();
  write_matrix((dir / "bias_direction.csv").string(), direction, MatrixFormat::csv);
  std::cout << "wrote " << planted.embedding.size() << " words to " << a.out_dir << '\n';
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DimensionMismatch*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  if (dynamic_cast<const Error*>(&e)) return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("D4_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"Decision-directed decomposition of linear representations"};
  app.set_version_flag("--version", std::string(d4::kToolVersion));
  app.add_flag("--quiet,-q", g_quiet, "suppress progress output");
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "learn a basis of decision directions");
  fit_cmd->add_option("--features", fit.features, "feature matrix (CSV or D4MAT binary)")->required();
  fit_cmd->add_option("--targets", fit.targets, "single-column target file")->required();
  add_learner_options(fit_cmd, fit);
  fit_cmd->add_option("--iterations", fit.iterations, "directions to remove")->capture_default_str();
  fit_cmd->add_option("--mode", fit.mode, "projector or fullrank")->capture_default_str();
  fit_cmd->add_option("--stop", fit.stop, "fixed or converge")->capture_default_str();
  fit_cmd->add_option("--task", fit.task, "auto, binary or regression")->capture_default_str();
  fit_cmd->add_option("--tau", fit.tau, "convergence tolerance")->capture_default_str();
  fit_cmd->add_option("--patience", fit.patience, "convergence patience")->capture_default_str();
  fit_cmd->add_option("--validation-fraction", fit.validation_fraction)->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed)->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "model file (JSON)")->required();

  TransformArgs tr;
  auto* tr_cmd = app.add_subcommand("transform", "remove learned directions from a matrix");
  tr_cmd->add_option("--features", tr.features)->required();
  tr_cmd->add_option("--model", tr.model)->required();
  tr_cmd->add_option("--k", tr.k, "directions to remove (default: all)");
  tr_cmd->add_option("--out-perp", tr.out_perp, "projected matrix")->required();
  tr_cmd->add_option("--out-par", tr.out_par, "removed component");
  tr_cmd->add_flag("--reduced", tr.reduced, "write the n x (p - k) reduced form instead");

  ProbeArgs pr;
  auto* pr_cmd = app.add_subcommand("probe", "refit a probe after removing 0..k directions");
  pr_cmd->add_option("--features", pr.learner.features)->required();
  pr_cmd->add_option("--targets", pr.learner.targets)->required();
  pr_cmd->add_option("--model", pr.model)->required();
  add_learner_options(pr_cmd, pr.learner);
  pr_cmd->add_option("--task", pr.learner.task)->capture_default_str();
  pr_cmd->add_option("--heldout-features", pr.heldout_features);
  pr_cmd->add_option("--heldout-targets", pr.heldout_targets);
  pr_cmd->add_option("--out", pr.out, "trajectory CSV");

  SynthArgs sy;
  auto* sy_cmd = app.add_subcommand("synth", "spurious-correlation benchmark");
  sy_cmd->add_option("--preset", sy.preset, "table1 or table1-small");
  sy_cmd->add_option("--n", sy.n, "instances per split");
  sy_cmd->add_option("--test-n", sy.test_n);
  sy_cmd->add_option("--p", sy.p, "dimension");
  sy_cmd->add_option("--corr", sy.corr, "training correlation (test uses its negation)");
  sy_cmd->add_option("--test-corr", sy.test_corr);
  sy_cmd->add_option("--std1", sy.std1);
  sy_cmd->add_option("--std2", sy.std2);
  sy_cmd->add_option("--flip", sy.flip, "label flip probability");
  sy_cmd->add_option("--reg", sy.reg, "logistic regularization");
  sy_cmd->add_option("--seed", sy.seed)->capture_default_str();
  sy_cmd->add_option("--out", sy.out, "report CSV");

  DebiasArgs db;
  db.fit.iterations = 6;
  db.fit.learner = "logistic";
  auto* db_cmd = app.add_subcommand("debias", "remove learned gender directions from an embedding");
  db_cmd->add_option("--embedding", db.embedding)->required();
  db_cmd->add_option("--format", db.format, "bin or txt (default: by extension)");
  db_cmd->add_option("--lexicon", db.lexicon)->required();
  add_learner_options(db_cmd, db.fit);
  db_cmd->add_option("--iterations", db.fit.iterations)->capture_default_str();
  db_cmd->add_option("--mode", db.fit.mode)->capture_default_str();
  db_cmd->add_option("--seed", db.fit.seed)->capture_default_str();
  db_cmd->add_option("--probe-folds", db.probe_folds)->capture_default_str();
  db_cmd->add_flag("--no-normalize", db.no_normalize, "fit on raw rather than unit vectors");
  db_cmd->add_option("--out-embedding", db.out_embedding)->required();
  db_cmd->add_option("--out-model", db.out_model);
  db_cmd->add_option("--report", db.report, "JSON report");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "embedding bias metrics");
  ev_cmd->require_subcommand(1);
  auto common = [&](CLI::App* c) {
    c->add_option("--embedding", ev.embedding)->required();
    c->add_option("--format", ev.format, "bin or txt (default: by extension)");
    c->add_option("--out", ev.out, "per-word CSV");
    c->add_option("--report", ev.report, "JSON summary");
    c->add_option("--seed", ev.seed)->capture_default_str();
    c->add_flag("--no-normalize", ev.no_normalize);
  };
  auto* nb_cmd = ev_cmd->add_subcommand("neighbours-bias", "two-means recovery of the most biased words");
  common(nb_cmd);
  nb_cmd->add_option("--direction-pair", ev.pair)->capture_default_str();
  nb_cmd->add_option("--n-extreme", ev.n_extreme)->capture_default_str();
  nb_cmd->add_option("--top-n", ev.top_n, "restrict to the first N words (0: all)")->capture_default_str();
  nb_cmd->add_option("--ranking-embedding", ev.ranking, "rank words (and take the direction) here");
  auto* pf_cmd = ev_cmd->add_subcommand("professions", "biased-neighbour counts for professions");
  common(pf_cmd);
  pf_cmd->add_option("--professions", ev.professions)->required();
  pf_cmd->add_option("--direction-pair", ev.pair)->capture_default_str();
  pf_cmd->add_option("--k", ev.k)->capture_default_str();
  auto* we_cmd = ev_cmd->add_subcommand("weat", "association test effect size");
  common(we_cmd);
  we_cmd->add_option("--weat", ev.weat)->required();
  auto* pb_cmd = ev_cmd->add_subcommand("probe", "recoverability of gender from lexicon vectors");
  common(pb_cmd);
  pb_cmd->add_option("--lexicon", ev.lexicon)->required();
  pb_cmd->add_option("--kernel", ev.kernel, "rbf or linear")->capture_default_str();
  pb_cmd->add_option("--gamma", ev.gamma);
  pb_cmd->add_option("--reg", ev.reg)->capture_default_str();
  pb_cmd->add_option("--folds", ev.folds)->capture_default_str();

  PlantedArgs pl;
  auto* pl_cmd = app.add_subcommand("planted", "write the planted-bias embedding fixture");
  pl_cmd->add_option("--out-dir", pl.out_dir)->required();
  pl_cmd->add_option("--format", pl.format)->capture_default_str();
  pl_cmd->add_option("--seed", pl.config.seed)->capture_default_str();
  pl_cmd->add_option("--dim", pl.config.dim)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*tr_cmd) return run_transform(tr);
    if (*pr_cmd) return run_probe(pr);
    if (*sy_cmd) return run_synth(sy);
    if (*db_cmd) return run_debias(db);
    if (*nb_cmd) return run_neighbours_bias(ev);
    if (*pf_cmd) return run_professions(ev);
    if (*we_cmd) return run_weat(ev);
    if (*pb_cmd) return run_eval_probe(ev);
    if (*pl_cmd) return run_planted(pl);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 1;
}
