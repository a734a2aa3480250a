#include "mencode/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "mencode/codelab.hpp"
#include "mencode/data.hpp"
#include "mencode/error.hpp"
#include "mencode/estimators.hpp"
#include "mencode/eval.hpp"
#include "mencode/model.hpp"

namespace mencode::cli {

namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void config_fail(const std::string& what) { throw ConfigError(what); }

// ---------------------------------------------------------------- options

struct RawOptions {
  std::string config;
  std::string dataset;
  std::string schema;
  std::string dataset_id;
  std::vector<std::string> methods;
  int k = 5;
  int repeats = 100;
  std::vector<double> fractions;
  std::vector<std::size_t> sizes;
  std::string ess;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out;
  std::string format;
  std::string dump_model;
  bool table = false;
};

void add_experiment_options(CLI::App* sub, RawOptions& raw, bool with_cv, bool with_fractions) {
  sub->add_option("--config", raw.config, "JSON experiment config; flags override its fields");
  sub->add_option("--dataset", raw.dataset, "CSV data file");
  sub->add_option("--schema", raw.schema, "JSON schema file");
  sub->add_option("--dataset-id", raw.dataset_id, "Name used in reports (default: data file stem)");
  sub->add_option("--method", raw.methods, "MMLWF, MMLP, MMLV or MDL (repeatable)");
  if (with_cv) {
    sub->add_option("--k", raw.k, "Number of folds");
    sub->add_option("--repeats", raw.repeats, "Number of independent fold partitions");
  }
  if (with_fractions) {
    sub->add_option("--s", raw.fractions, "Training fraction of the other n-1 rows (repeatable)");
    sub->add_option("--size", raw.sizes, "Absolute training size (repeatable)");
  }
  sub->add_option("--ess", raw.ess, "Equivalent sample size, a positive real or 'auto'");
  sub->add_option("--seed", raw.seed, "Base seed (fallback: MENCODE_SEED)");
  sub->add_option("--jobs", raw.jobs, "Worker threads; results do not depend on it");
  sub->add_option("--out", raw.out, "Result file (default: stdout)");
  sub->add_option("--format", raw.format, "csv or json");
  sub->add_option("--dump-model", raw.dump_model, "Write full-data parameter tables as JSON");
  sub->add_flag("--table", raw.table, "Print a wide summary table to stderr");
}

std::string absolute(const std::string& path, const fs::path& base) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_relative()) p = base / p;
  return fs::weakly_canonical(p).string();
}

std::optional<double> parse_ess(const std::string& text) {
  if (text == "auto") return std::nullopt;
  double v = 0.0;
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  if (!(is >> v) || !is.eof() || !(v > 0.0) || !std::isfinite(v))
    config_fail("--ess must be a positive real or 'auto', got '" + text + "'");
  return v;
}

void apply_json(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open config file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
    const fs::path base = fs::absolute(fs::path(path)).parent_path();
    if (doc.contains("dataset")) cfg.dataset = absolute(doc["dataset"].get<std::string>(), base);
    if (doc.contains("schema")) cfg.schema = absolute(doc["schema"].get<std::string>(), base);
    if (doc.contains("dataset_id")) cfg.dataset_id = doc["dataset_id"].get<std::string>();
    if (doc.contains("methods")) cfg.methods = doc["methods"].get<std::vector<std::string>>();
    if (doc.contains("k")) cfg.k = doc["k"].get<int>();
    if (doc.contains("repeats")) cfg.repeats = doc["repeats"].get<int>();
    if (doc.contains("fractions")) cfg.fractions = doc["fractions"].get<std::vector<double>>();
    if (doc.contains("sizes")) cfg.sizes = doc["sizes"].get<std::vector<std::size_t>>();
    if (doc.contains("ess")) {
      const auto& e = doc["ess"];
      if (e.is_string()) {
        cfg.ess = parse_ess(e.get<std::string>());
      } else if (e.is_number()) {
        cfg.ess = parse_ess(std::to_string(e.get<double>()));
      } else if (!e.is_null()) {
        config_fail("config field 'ess' must be a number or \"auto\"");
      }
    }
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<unsigned>();
    if (doc.contains("out")) cfg.out = absolute(doc["out"].get<std::string>(), base);
    if (doc.contains("format")) cfg.format = doc["format"].get<std::string>();
    if (doc.contains("dump_model")) cfg.dump_model = absolute(doc["dump_model"].get<std::string>(), base);
  } catch (const nlohmann::json::exception& e) {
    config_fail(path + ": " + e.what());
  }
}

ExperimentConfig resolve(const CLI::App* sub, const RawOptions& raw, const std::string& command) {
  ExperimentConfig cfg;
  cfg.command = command;
  bool seed_set = false;
  if (!raw.config.empty()) {
    apply_json(cfg, raw.config);
    std::ifstream in(raw.config);
    seed_set = nlohmann::json::parse(in, nullptr, false).contains("seed");
  }
  const fs::path cwd = fs::current_path();
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  if (given("--dataset")) cfg.dataset = absolute(raw.dataset, cwd);
  if (given("--schema")) cfg.schema = absolute(raw.schema, cwd);
  if (given("--dataset-id")) cfg.dataset_id = raw.dataset_id;
  if (given("--method")) cfg.methods = raw.methods;
  if (sub->get_option_no_throw("--k") && given("--k")) cfg.k = raw.k;
  if (sub->get_option_no_throw("--repeats") && given("--repeats")) cfg.repeats = raw.repeats;
  if (sub->get_option_no_throw("--s") && given("--s")) cfg.fractions = raw.fractions;
  if (sub->get_option_no_throw("--size") && given("--size")) cfg.sizes = raw.sizes;
  if (given("--ess")) cfg.ess = parse_ess(raw.ess);
  if (given("--seed")) {
    cfg.seed = raw.seed;
    seed_set = true;
  }
  if (!seed_set) {
    if (const char* env = std::getenv("MENCODE_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        cfg.seed = std::stoull(env, &used);
        if (env[used] != '\0') throw std::invalid_argument(env);
      } catch (const std::exception&) {
        config_fail(std::string("MENCODE_SEED is not an unsigned integer: '") + env + "'");
      }
    }
  }
  if (given("--jobs")) cfg.jobs = raw.jobs;
  if (given("--out")) cfg.out = raw.out;
  if (given("--format")) cfg.format = raw.format;
  if (given("--dump-model")) cfg.dump_model = raw.dump_model;
  cfg.table = raw.table;

  if (cfg.dataset.empty()) config_fail("no dataset given (--dataset or config 'dataset')");
  if (cfg.schema.empty()) config_fail("no schema given (--schema or config 'schema')");
  if (!fs::is_regular_file(cfg.dataset)) config_fail("dataset file not found: " + cfg.dataset);
  if (!fs::is_regular_file(cfg.schema)) config_fail("schema file not found: " + cfg.schema);
  if (cfg.methods.empty()) config_fail("no methods selected");
  for (auto& m : cfg.methods) {
    try {
      m = std::string(model::to_string(model::parse_method(m)));
    } catch (const Error& e) {
      config_fail(e.what());
    }
  }
  if (cfg.k < 2) config_fail("--k must be at least 2");
  if (cfg.repeats < 1) config_fail("--repeats must be at least 1");
  for (double f : cfg.fractions)
    if (!(f > 0.0 && f <= 1.0)) config_fail("--s fractions must lie in (0, 1]");
  for (auto s : cfg.sizes)
    if (s < 1) config_fail("--size must be at least 1");
  if (cfg.jobs < 1) config_fail("--jobs must be at least 1");
  if (cfg.format != "csv" && cfg.format != "json") config_fail("--format must be csv or json");
  if (cfg.dataset_id.empty()) cfg.dataset_id = fs::path(cfg.dataset).stem().string();
  return cfg;
}

std::vector<model::Method> methods_of(const ExperimentConfig& cfg) {
  std::vector<model::Method> out;
  for (const auto& m : cfg.methods) out.push_back(model::parse_method(m));
  return out;
}

// ---------------------------------------------------------------- output

/// Writes to --out when given, else to the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) config_fail("cannot write " + path);
    stream_ = file_.get();
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) config_fail("cannot write " + path);
  f << text;
}

std::string companion_path(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  const auto stem = p.stem().string();
  return (p.parent_path() / (stem + suffix)).string();
}

void write_manifest(const ExperimentConfig& cfg, nlohmann::ordered_json extra, std::ostream& err) {
  nlohmann::ordered_json manifest;
  manifest["mencode_version"] = version;
  manifest["command"] = cfg.command;
  const auto fields = cfg.to_json();
  for (const auto& [key, value] : fields.items()) manifest[key] = value;
  for (auto& [key, value] : extra.items()) manifest[key] = value;
  if (cfg.out.empty() || cfg.out == "-") {
    err << "manifest: " << manifest.dump() << '\n';
  } else {
    write_text(companion_path(cfg.out, ".manifest.json"), manifest.dump(2) + "\n");
  }
}

struct Loaded {
  data::Dataset dataset;
  model::NetworkStructure structure;
};

Loaded load(const ExperimentConfig& cfg, std::ostream& err) {
  data::SchemaConfig schema_config;
  try {
    schema_config = data::SchemaConfig::from_file(cfg.schema);
  } catch (const Error& e) {
    config_fail(e.what());
  }
  auto dataset = data::load_csv_file(cfg.dataset, schema_config);
  if (dataset.dropped_rows() > 0)
    err << "warning: dropped " << dataset.dropped_rows() << " rows with missing values\n";
  auto structure = model::naive_bayes_structure(dataset.schema());
  return {std::move(dataset), std::move(structure)};
}

void dump_models(const ExperimentConfig& cfg, const Loaded& loaded, double ess) {
  if (cfg.dump_model.empty()) return;
  nlohmann::ordered_json doc;
  doc["ess"] = ess;
  for (auto m : methods_of(cfg)) {
    const auto p = estimators::fit(m, loaded.dataset, loaded.structure, ess);
    doc[std::string(model::to_string(m))] =
        model::parameters_to_json(p.params, loaded.structure, loaded.dataset.schema());
  }
  write_text(cfg.dump_model, doc.dump(2) + "\n");
}

nlohmann::ordered_json run_facts(const Loaded& loaded, double ess) {
  nlohmann::ordered_json j;
  j["resolved_ess"] = ess;
  j["rows"] = loaded.dataset.rows();
  j["dropped_rows"] = loaded.dataset.dropped_rows();
  return j;
}

// ---------------------------------------------------------------- commands

int cmd_bench(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto loaded = load(cfg, err);
  const auto methods = methods_of(cfg);
  if (loaded.dataset.rows() < static_cast<std::size_t>(cfg.k))
    config_fail(std::to_string(cfg.k) + " folds need at least as many rows, dataset has " +
                std::to_string(loaded.dataset.rows()));
  const double ess = cfg.ess ? *cfg.ess
                             : eval::auto_ess_cv(loaded.dataset, loaded.structure, methods, cfg.k, cfg.repeats, cfg.seed);
  std::vector<eval::ScoreReport> reports;
  for (auto m : methods) {
    eval::CvOptions options{cfg.k, cfg.repeats, ess, cfg.seed, cfg.jobs, cfg.dataset_id};
    reports.push_back(eval::crossvalidate(loaded.dataset, loaded.structure, m, options));
  }
  Sink sink(cfg.out, out);
  if (cfg.format == "json")
    sink.stream() << eval::reports_to_json(reports).dump(2) << '\n';
  else
    eval::write_reports_csv(sink.stream(), reports);
  if (cfg.table) {
    err << "0/1-score (%)  ess=" << eval::format_fixed(ess, 3) << "\n";
    err << "method   min      mean     max\n";
    for (const auto& r : reports)
      err << std::string(model::to_string(r.method)) + std::string(9 - model::to_string(r.method).size(), ' ')
          << eval::format_fixed(r.min, 2) << "    " << eval::format_fixed(r.mean, 2) << "    "
          << eval::format_fixed(r.max, 2) << '\n';
  }
  dump_models(cfg, loaded, ess);
  write_manifest(cfg, run_facts(loaded, ess), err);
  return ok;
}

std::vector<std::size_t> training_sizes(const ExperimentConfig& cfg, std::size_t n, bool include_full) {
  std::vector<std::size_t> sizes;
  for (double f : cfg.fractions) sizes.push_back(eval::training_size(n, f));
  for (auto s : cfg.sizes) {
    if (s > n - 1) config_fail("--size " + std::to_string(s) + " exceeds n-1 = " + std::to_string(n - 1));
    sizes.push_back(s);
  }
  if (include_full) sizes.push_back(n - 1);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

int cmd_loo(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto loaded = load(cfg, err);
  const std::size_t n = loaded.dataset.rows();
  if (n < 2) config_fail("leave-one-out needs at least two rows, dataset has " + std::to_string(n));
  const auto methods = methods_of(cfg);
  const auto sizes = training_sizes(cfg, n, true);
  const double ess = cfg.ess ? *cfg.ess : eval::auto_ess_loo(loaded.dataset, loaded.structure, methods, sizes, cfg.seed);

  std::vector<eval::ScoreReport> reports;
  for (auto s : sizes) {
    for (auto m : methods) {
      eval::ScoreReport r;
      r.dataset = cfg.dataset_id;
      r.method = m;
      r.protocol = "loo";
      r.repeats = 1;
      r.s = s;
      r.ess = ess;
      r.seed = cfg.seed;
      r.per_repeat = {eval::leave_one_out(loaded.dataset, loaded.structure, m, s, ess, cfg.seed, cfg.jobs)};
      eval::summarize(r);
      reports.push_back(std::move(r));
    }
  }
  Sink sink(cfg.out, out);
  if (cfg.format == "json")
    sink.stream() << eval::reports_to_json(reports).dump(2) << '\n';
  else
    eval::write_reports_csv(sink.stream(), reports);
  if (cfg.table) {
    err << "leave-one-out log-score (bits)  ess=" << eval::format_fixed(ess, 3) << "\n";
    err << "dataset";
    for (auto s : sizes)
      for (auto m : methods) err << '\t' << model::to_string(m) << "@s=" << s;
    err << '\n' << cfg.dataset_id;
    for (const auto& r : reports) err << '\t' << eval::format_fixed(r.mean, 2);
    err << '\n';
  }
  dump_models(cfg, loaded, ess);
  write_manifest(cfg, run_facts(loaded, ess), err);
  return ok;
}

int cmd_curve(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto loaded = load(cfg, err);
  const std::size_t n = loaded.dataset.rows();
  if (n < 2) config_fail("learning curves need at least two rows, dataset has " + std::to_string(n));
  const auto methods = methods_of(cfg);
  auto grid_cfg = cfg;
  if (grid_cfg.fractions.empty() && grid_cfg.sizes.empty()) grid_cfg.fractions = {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0};
  const auto sizes = training_sizes(grid_cfg, n, false);
  // The relative score is always taken against MMLWF, so its fits must be feasible too.
  auto scan_methods = methods;
  scan_methods.push_back(model::Method::mmlwf);
  const double ess =
      cfg.ess ? *cfg.ess : eval::auto_ess_loo(loaded.dataset, loaded.structure, scan_methods, sizes, cfg.seed);
  const auto points = eval::learning_curve(loaded.dataset, loaded.structure, methods, sizes, ess, cfg.seed, cfg.jobs);

  Sink sink(cfg.out, out);
  if (cfg.format == "json")
    sink.stream() << eval::curve_to_json(points, cfg.dataset_id).dump(2) << '\n';
  else
    eval::write_curve_csv(sink.stream(), points, cfg.dataset_id);
  if (!cfg.out.empty() && cfg.out != "-") {
    std::ostringstream plot;
    eval::write_curve_plot(plot, points);
    write_text(companion_path(cfg.out, ".plot.csv"), plot.str());
  }
  dump_models(cfg, loaded, ess);
  write_manifest(cfg, run_facts(loaded, ess), err);
  return ok;
}

// ---------------------------------------------------------------- codelab

struct CodelabOptions {
  int n = 5;
  std::vector<int> k;
  std::string prior = "uniform";
  int grid = 9;
  std::vector<double> values;
  int codebook_size = 8;
  std::size_t max_codebook = 3;
  std::string space;
  bool bits = false;
  std::string out;
};

codelab::PriorDensity parse_prior(const std::string& text) {
  if (text == "uniform") return codelab::PriorDensity::uniform();
  if (text.rfind("beta:", 0) == 0) {
    const auto body = text.substr(5);
    const auto comma = body.find(',');
    if (comma == std::string::npos) config_fail("beta prior is written beta:A,B");
    try {
      return codelab::PriorDensity::beta(std::stod(body.substr(0, comma)), std::stod(body.substr(comma + 1)));
    } catch (const std::exception&) {
      config_fail("cannot parse prior '" + text + "'");
    }
  }
  if (text == "jeffreys") return codelab::PriorDensity::beta(0.5, 0.5);
  config_fail("unknown prior '" + text + "' (uniform, jeffreys or beta:A,B)");
}

codelab::OutcomeSpace parse_space(const std::string& text, codelab::OutcomeSpace fallback) {
  if (text.empty()) return fallback;
  if (text == "sufficient") return codelab::OutcomeSpace::sufficient;
  if (text == "sequence") return codelab::OutcomeSpace::sequence;
  config_fail("--space must be sufficient or sequence");
}

std::string cell(double v, int precision = 6) { return eval::format_fixed(v, precision); }

int codelab_estimates(const CodelabOptions& o, std::ostream& out) {
  if (o.n < 1) config_fail("--n must be at least 1");
  const auto prior = parse_prior(o.prior);
  std::vector<int> ks = o.k;
  if (ks.empty())
    for (int k = 0; k <= o.n; ++k) ks.push_back(k);
  out << "k,n,mml_wf,mml_p,mml_v\n";
  for (int k : ks) {
    if (k < 0 || k > o.n) config_fail("--k must lie in [0, n]");
    const codelab::Sample x{o.n, k};
    auto guarded = [&](auto&& estimate) -> std::string {
      try {
        return cell(estimate(x, prior));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoInteriorMaximum) return "none";
        throw;
      }
    };
    out << k << ',' << o.n << ',' << guarded(codelab::mml_wf_estimate) << ',' << guarded(codelab::mml_p_estimate)
        << ',' << guarded(codelab::mml_v_estimate) << '\n';
  }
  return ok;
}

int codelab_lengths(const CodelabOptions& o, std::ostream& out) {
  if (o.n < 1) config_fail("--n must be at least 1");
  if (o.grid < 1) config_fail("--grid must be at least 1");
  if (o.codebook_size < 1) config_fail("--codebook-size must be at least 1");
  const auto prior = parse_prior(o.prior);
  const int k = o.k.empty() ? o.n / 2 : o.k.front();
  if (k < 0 || k > o.n) config_fail("--k must lie in [0, n]");
  const codelab::Sample x{o.n, k};
  const codelab::OneParamModel model(o.n);
  const double unit = o.bits ? std::log(2.0) : 1.0;
  out << "# unit=" << (o.bits ? "bits" : "nats") << " n=" << o.n << " k=" << k << '\n';
  out << "theta,fisher,precision,wf_two_part,wf_expected,uni_h_total\n";
  for (int j = 1; j <= o.grid; ++j) {
    const double theta = static_cast<double>(j) / (o.grid + 1.0);
    const double info = codelab::fisher_information(model, theta);
    const double d = codelab::optimal_precision(model, theta);
    out << cell(theta) << ',' << cell(info) << ',' << cell(d) << ','
        << cell(codelab::wf_two_part_length(theta, d, prior, x) / unit) << ','
        << cell(codelab::wf_expected_length(theta, prior, x) / unit) << ','
        << cell(codelab::uni_h_total_length(theta, o.codebook_size, d, prior, x) / unit) << '\n';
  }
  return ok;
}

int codelab_smml(const CodelabOptions& o, std::ostream& out) {
  if (o.n < 1) config_fail("--n must be at least 1");
  const auto prior = parse_prior(o.prior);
  const auto space = parse_space(o.space, codelab::OutcomeSpace::sufficient);
  if (space == codelab::OutcomeSpace::sequence && o.n > 6)
    fail(ErrorCode::InstanceTooLarge, "sequence space of n=" + std::to_string(o.n) + " exceeds 64 outcomes");
  const codelab::OneParamModel model(o.n, space);
  std::vector<double> grid = o.values;
  if (grid.empty()) {
    if (o.grid < 1) config_fail("--grid must be at least 1");
    for (int j = 1; j <= o.grid; ++j) grid.push_back(static_cast<double>(j) / (o.grid + 1.0));
  }
  const auto result = codelab::smml_search(model, prior, o.max_codebook, grid);
  const double ln2 = std::log(2.0);
  out << "# expected_length_nats=" << cell(result.expected_length)
      << " expected_length_bits=" << cell(result.expected_length / ln2) << '\n';
  out << "outcome,theta_hat,codeword_bits,data_bits\n";
  const auto& outcomes = model.outcomes();
  for (std::size_t x = 0; x < outcomes.size(); ++x) {
    const auto j = result.assignment[x];
    const double theta = result.codebook.values[j];
    out << outcomes[x].label << ',' << cell(theta) << ',' << cell(result.codebook.lengths[j] / ln2) << ','
        << cell(-model.log_likelihood(outcomes[x], theta) / ln2) << '\n';
  }
  return ok;
}

int codelab_normalize(const CodelabOptions& o, std::ostream& out) {
  if (o.n < 1) config_fail("--n must be at least 1");
  if (o.values.empty()) config_fail("--codebook needs at least one value");
  auto values = o.values;
  std::sort(values.begin(), values.end());
  const auto space = parse_space(o.space, codelab::OutcomeSpace::sequence);
  const codelab::OneParamModel model(o.n, space);
  codelab::QuantizedCodebook book;
  try {
    book = codelab::uniform_codebook(values);
  } catch (const Error& e) {
    config_fail(e.what());
  }
  const auto code = codelab::normalized_two_part(model, book);
  const double ln2 = std::log(2.0);
  out << "outcome,theta_hat,normalizer,plain_bits,normalized_bits,reduction_bits\n";
  const auto& outcomes = model.outcomes();
  for (std::size_t x = 0; x < outcomes.size(); ++x) {
    const auto j = code.region[x];
    out << outcomes[x].label << ',' << cell(book.values[j]) << ',' << cell(code.normalizers[j]) << ','
        << cell(code.plain_lengths[x] / ln2) << ',' << cell(code.normalized_lengths[x] / ln2) << ','
        << cell((code.plain_lengths[x] - code.normalized_lengths[x]) / ln2) << '\n';
  }
  return ok;
}

}  // namespace

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["schema"] = schema;
  j["dataset_id"] = dataset_id;
  j["methods"] = methods;
  j["k"] = k;
  j["repeats"] = repeats;
  j["fractions"] = fractions;
  j["sizes"] = sizes;
  if (ess)
    j["ess"] = *ess;
  else
    j["ess"] = "auto";
  j["seed"] = seed;
  j["format"] = format;
  return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimum-encoding predictive inference for discrete Naive Bayes models", "mencode"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);

  RawOptions bench_raw, loo_raw, curve_raw;
  auto* bench = app.add_subcommand("bench", "Repeated k-fold cross-validated 0/1 scores");
  add_experiment_options(bench, bench_raw, true, false);
  auto* loo = app.add_subcommand("loo", "Leave-one-out joint log-scores");
  add_experiment_options(loo, loo_raw, false, true);
  auto* curve = app.add_subcommand("curve", "Leave-one-out log-scores against training size, relative to MMLWF");
  add_experiment_options(curve, curve_raw, false, true);

  CodelabOptions lab;
  auto* codelab_cmd = app.add_subcommand("codelab", "One-parameter codelength demos");
  codelab_cmd->require_subcommand(1);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--n", lab.n, "Number of Bernoulli trials");
    sub->add_option("--prior", lab.prior, "uniform, jeffreys or beta:A,B");
    sub->add_option("--out", lab.out, "Result file (default: stdout)");
  };
  auto* estimates = codelab_cmd->add_subcommand("estimates", "MMLWF, MMLP and MMLV point estimates");
  add_common(estimates);
  estimates->add_option("--k", lab.k, "Success counts (repeatable; default all)");
  auto* lengths = codelab_cmd->add_subcommand("lengths", "Two-part codelengths over a theta grid");
  add_common(lengths);
  lengths->add_option("--k", lab.k, "Success count (default n/2)");
  lengths->add_option("--grid", lab.grid, "Number of interior grid points");
  lengths->add_option("--codebook-size", lab.codebook_size, "N for the uniform-h code");
  lengths->add_flag("--bits", lab.bits, "Report bits instead of nats");
  auto* smml = codelab_cmd->add_subcommand("smml", "Exhaustive strict-MML search");
  add_common(smml);
  smml->add_option("--grid", lab.grid, "Number of evenly spaced candidates j/(G+1)");
  smml->add_option("--values", lab.values, "Explicit candidate values")->delimiter(',');
  smml->add_option("--max-codebook", lab.max_codebook, "Largest codebook searched");
  smml->add_option("--space", lab.space, "sufficient (default) or sequence");
  auto* normalize = codelab_cmd->add_subcommand("normalize", "Normalized two-part code");
  add_common(normalize);
  normalize->add_option("--codebook", lab.values, "Codebook values, comma separated")->delimiter(',');
  normalize->add_option("--space", lab.space, "sequence (default) or sufficient");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::CallForVersion& e) {
    out << version << '\n';
    return ok;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests surface here too.
    if (e.get_exit_code() == 0) {
      for (auto* sub : {bench, loo, curve, codelab_cmd, estimates, lengths, smml, normalize})
        if (sub->parsed()) out << sub->help();
      return ok;
    }
    err << "error: " << e.what() << '\n';
    return config_error;
  }

  try {
    if (bench->parsed()) return cmd_bench(resolve(bench, bench_raw, "bench"), out, err);
    if (loo->parsed()) return cmd_loo(resolve(loo, loo_raw, "loo"), out, err);
    if (curve->parsed()) return cmd_curve(resolve(curve, curve_raw, "curve"), out, err);
    if (codelab_cmd->parsed()) {
      std::ostringstream buffer;
      int code = ok;
      if (estimates->parsed()) code = codelab_estimates(lab, buffer);
      if (lengths->parsed()) code = codelab_lengths(lab, buffer);
      if (smml->parsed()) code = codelab_smml(lab, buffer);
      if (normalize->parsed()) code = codelab_normalize(lab, buffer);
      Sink sink(lab.out, out);
      sink.stream() << buffer.str();
      return code;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  } catch (const NoInteriorMode& e) {
    err << "error: " << e.what() << '\n';
    if (e.ess_hint()) err << "hint: rerun with --ess " << eval::format_fixed(*e.ess_hint(), 1) << " or --ess auto\n";
    return no_interior_mode;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InstanceTooLarge ? instance_too_large : config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  }
  return config_error;
}

}  // namespace mencode::cli
