// Command-line front end: synthetic-experiment runner plus one- and
// two-sample analysis of user CSV data.

#include <chrono>
#include <thread>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sda/baselines.hpp"
#include "sda/csv.hpp"
#include "sda/errors.hpp"
#include "sda/filter.hpp"
#include "sda/simulate.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IniEntry {
  std::string value;
  std::size_t line = 0;
};

using IniSection = std::map<std::string, IniEntry>;

struct IniFile {
  std::map<std::string, IniSection> sections;
  std::string raw;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

IniFile parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  IniFile file;
  std::ostringstream raw;
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    raw << line << '\n';
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']')
        throw ConfigError("unterminated section header (line " + std::to_string(line_no) + ")");
      section = trim(text.substr(1, text.size() - 2));
      if (section != "grid" && section != "run")
        throw ConfigError("unknown section [" + section + "] (line " + std::to_string(line_no) +
                          ")");
      file.sections[section];
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value (line " + std::to_string(line_no) + ")");
    if (section.empty())
      throw ConfigError("key outside of a section (line " + std::to_string(line_no) + ")");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key (line " + std::to_string(line_no) + ")");
    if (file.sections[section].count(key))
      throw ConfigError("duplicate key '" + key + "' (line " + std::to_string(line_no) + ")");
    file.sections[section][key] = {value, line_no};
  }
  file.raw = raw.str();
  return file;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string current;
  for (char c : value) {
    if (c == ',') {
      out.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  out.push_back(trim(current));
  return out;
}

double parse_double_field(const std::string& text, const std::string& field, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw ConfigError("field '" + field + "': not a number '" + text + "' (line " +
                      std::to_string(line) + ")");
  return v;
}

long parse_int_field(const std::string& text, const std::string& field, std::size_t line) {
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0')
    throw ConfigError("field '" + field + "': not an integer '" + text + "' (line " +
                      std::to_string(line) + ")");
  return v;
}

struct SimulateSpec {
  sda::SimulationConfig config;
  std::vector<sda::CovarianceKind::Type> structures;  // parallel to cells
  std::string raw_config;
};

sda::CovarianceKind::Type parse_structure(const std::string& s, std::size_t line) {
  if (s == "ar") return sda::CovarianceKind::Type::AR;
  if (s == "cs") return sda::CovarianceKind::Type::CompoundSymmetry;
  if (s == "sparse_factor") return sda::CovarianceKind::Type::SparseFactor;
  throw ConfigError("field 'structure': unknown value '" + s + "' (line " + std::to_string(line) +
                    ")");
}

sda::ErrorLaw parse_dist(const std::string& s, std::size_t line) {
  if (s == "normal") return sda::ErrorLaw::Normal;
  if (s == "t3") return sda::ErrorLaw::StudentT3;
  if (s == "exp") return sda::ErrorLaw::Exponential2;
  throw ConfigError("field 'dist': unknown value '" + s + "' (line " + std::to_string(line) + ")");
}

sda::Procedure parse_procedure(const std::string& s, std::size_t line) {
  if (s == "sda") return sda::Procedure::SDA;
  if (s == "sda+") return sda::Procedure::SDAPlus;
  if (s == "rsda") return sda::Procedure::RSDA;
  if (s == "bh") return sda::Procedure::BH;
  if (s == "ss") return sda::Procedure::SS;
  throw ConfigError("field 'procedures': unknown value '" + s + "' (line " +
                    std::to_string(line) + ")");
}

SimulateSpec parse_simulate_config(const std::string& path) {
  const IniFile ini = parse_ini(path);
  for (const auto& [name, _] : ini.sections)
    if (name != "grid" && name != "run") throw ConfigError("unknown section [" + name + "]");
  if (!ini.sections.count("grid")) throw ConfigError("missing [grid] section");
  if (!ini.sections.count("run")) throw ConfigError("missing [run] section");
  const IniSection& grid = ini.sections.at("grid");
  const IniSection& run = ini.sections.at("run");

  const std::vector<std::string> grid_keys{"structure", "rho", "dist", "n", "p", "pi1", "mu0"};
  for (const auto& [key, entry] : grid) {
    if (std::find(grid_keys.begin(), grid_keys.end(), key) == grid_keys.end())
      throw ConfigError("unknown key '" + key + "' in [grid] (line " +
                        std::to_string(entry.line) + ")");
  }
  const std::vector<std::string> run_keys{"alpha",     "reps",   "seed", "procedures",
                                          "precision", "rsda_b", "t1",   "cap",
                                          "glasso_lambda", "workers"};
  for (const auto& [key, entry] : run) {
    if (std::find(run_keys.begin(), run_keys.end(), key) == run_keys.end())
      throw ConfigError("unknown key '" + key + "' in [run] (line " +
                        std::to_string(entry.line) + ")");
  }
  auto require = [](const IniSection& section, const std::string& key,
                    const std::string& where) -> const IniEntry& {
    const auto it = section.find(key);
    if (it == section.end()) throw ConfigError("missing key '" + key + "' in [" + where + "]");
    return it->second;
  };

  SimulateSpec out;
  out.raw_config = ini.raw;

  const IniEntry& e_structure = require(grid, "structure", "grid");
  const IniEntry& e_rho = require(grid, "rho", "grid");
  const IniEntry& e_dist = require(grid, "dist", "grid");
  const IniEntry& e_n = require(grid, "n", "grid");
  const IniEntry& e_p = require(grid, "p", "grid");
  const IniEntry& e_pi1 = require(grid, "pi1", "grid");
  const IniEntry& e_mu0 = require(grid, "mu0", "grid");

  std::vector<sda::CovarianceKind::Type> structures;
  for (const std::string& s : split_list(e_structure.value))
    structures.push_back(parse_structure(s, e_structure.line));
  std::vector<double> rhos, pi1s, mu0s;
  for (const std::string& s : split_list(e_rho.value))
    rhos.push_back(parse_double_field(s, "rho", e_rho.line));
  for (const std::string& s : split_list(e_pi1.value))
    pi1s.push_back(parse_double_field(s, "pi1", e_pi1.line));
  for (const std::string& s : split_list(e_mu0.value))
    mu0s.push_back(parse_double_field(s, "mu0", e_mu0.line));
  std::vector<long> ns, ps;
  for (const std::string& s : split_list(e_n.value))
    ns.push_back(parse_int_field(s, "n", e_n.line));
  for (const std::string& s : split_list(e_p.value))
    ps.push_back(parse_int_field(s, "p", e_p.line));
  std::vector<sda::ErrorLaw> dists;
  for (const std::string& s : split_list(e_dist.value)) dists.push_back(parse_dist(s, e_dist.line));

  for (long n : ns)
    if (n < 3) throw ConfigError("field 'n': must be >= 3 (line " + std::to_string(e_n.line) + ")");
  for (long p : ps)
    if (p < 2) throw ConfigError("field 'p': must be >= 2 (line " + std::to_string(e_p.line) + ")");
  for (double pi1 : pi1s)
    if (!(pi1 >= 0.0 && pi1 < 1.0))
      throw ConfigError("field 'pi1': must be in [0,1) (line " + std::to_string(e_pi1.line) + ")");
  for (double mu0 : mu0s)
    if (!(mu0 > 0.0))
      throw ConfigError("field 'mu0': must be positive (line " + std::to_string(e_mu0.line) + ")");

  for (auto structure : structures) {
    for (double rho : rhos) {
      if (structure == sda::CovarianceKind::Type::AR && !(std::abs(rho) < 1.0))
        throw ConfigError("field 'rho': AR needs |rho| < 1 (line " + std::to_string(e_rho.line) +
                          ")");
      if (structure == sda::CovarianceKind::Type::CompoundSymmetry &&
          !(rho >= 0.0 && rho < 1.0))
        throw ConfigError("field 'rho': cs needs rho in [0,1) (line " +
                          std::to_string(e_rho.line) + ")");
      for (sda::ErrorLaw dist : dists)
        for (long n : ns)
          for (long p : ps)
            for (double pi1 : pi1s)
              for (double mu0 : mu0s) {
                sda::SettingCell cell;
                cell.cov = {structure, rho, 0};
                cell.law = dist;
                cell.n = static_cast<std::size_t>(n);
                cell.p = static_cast<std::size_t>(p);
                cell.pi1 = pi1;
                cell.mu0 = mu0;
                out.config.cells.push_back(cell);
                out.structures.push_back(structure);
              }
    }
  }

  const IniEntry& e_alpha = require(run, "alpha", "run");
  out.config.alpha = parse_double_field(e_alpha.value, "alpha", e_alpha.line);
  if (!(out.config.alpha > 0.0 && out.config.alpha < 1.0))
    throw ConfigError("field 'alpha': must be in (0,1) (line " + std::to_string(e_alpha.line) +
                      ")");
  const IniEntry& e_reps = require(run, "reps", "run");
  out.config.reps = static_cast<int>(parse_int_field(e_reps.value, "reps", e_reps.line));
  if (out.config.reps < 1)
    throw ConfigError("field 'reps': must be >= 1 (line " + std::to_string(e_reps.line) + ")");
  if (run.count("seed")) {
    const IniEntry& e = run.at("seed");
    out.config.seed = static_cast<std::uint64_t>(parse_int_field(e.value, "seed", e.line));
  }
  const IniEntry& e_proc = require(run, "procedures", "run");
  out.config.procedures.clear();
  for (const std::string& s : split_list(e_proc.value))
    out.config.procedures.push_back(parse_procedure(s, e_proc.line));
  const IniEntry& e_prec = require(run, "precision", "run");
  if (e_prec.value == "known")
    out.config.precision = sda::PrecisionSpec::Mode::Known;
  else if (e_prec.value == "identity")
    out.config.precision = sda::PrecisionSpec::Mode::IdentityWorking;
  else if (e_prec.value == "glasso")
    out.config.precision = sda::PrecisionSpec::Mode::GraphicalLasso;
  else
    throw ConfigError("field 'precision': unknown value '" + e_prec.value + "' (line " +
                      std::to_string(e_prec.line) + ")");
  if (run.count("rsda_b")) {
    const IniEntry& e = run.at("rsda_b");
    out.config.rsda_b = static_cast<int>(parse_int_field(e.value, "rsda_b", e.line));
    if (out.config.rsda_b < 1)
      throw ConfigError("field 'rsda_b': must be >= 1 (line " + std::to_string(e.line) + ")");
  }
  if (run.count("t1")) {
    const IniEntry& e = run.at("t1");
    if (e.value == "scaled")
      out.config.sda.t1_mode = sda::T1Mode::Scaled;
    else if (e.value == "raw")
      out.config.sda.t1_mode = sda::T1Mode::RawCoefficient;
    else
      throw ConfigError("field 't1': expected scaled|raw (line " + std::to_string(e.line) + ")");
  }
  if (run.count("cap")) {
    const IniEntry& e = run.at("cap");
    const long cap = parse_int_field(e.value, "cap", e.line);
    if (cap < 1)
      throw ConfigError("field 'cap': must be >= 1 (line " + std::to_string(e.line) + ")");
    out.config.sda.cap = static_cast<std::size_t>(cap);
  }
  if (run.count("glasso_lambda")) {
    const IniEntry& e = run.at("glasso_lambda");
    const double lambda = parse_double_field(e.value, "glasso_lambda", e.line);
    if (!(lambda > 0.0))
      throw ConfigError("field 'glasso_lambda': must be positive (line " +
                        std::to_string(e.line) + ")");
    out.config.glasso_penalty = lambda;
  }
  if (run.count("workers")) {
    const IniEntry& e = run.at("workers");
    out.config.workers = static_cast<int>(parse_int_field(e.value, "workers", e.line));
    if (out.config.workers < 1)
      throw ConfigError("field 'workers': must be >= 1 (line " + std::to_string(e.line) + ")");
  } else {
    out.config.workers = 0;  // auto: resolved to the hardware thread count
  }
  return out;
}

std::string structure_name(sda::CovarianceKind::Type t) {
  switch (t) {
    case sda::CovarianceKind::Type::AR: return "ar";
    case sda::CovarianceKind::Type::CompoundSymmetry: return "cs";
    case sda::CovarianceKind::Type::SparseFactor: return "sparse_factor";
  }
  return "?";
}

std::string dist_name(sda::ErrorLaw law) {
  switch (law) {
    case sda::ErrorLaw::Normal: return "normal";
    case sda::ErrorLaw::StudentT3: return "t3";
    case sda::ErrorLaw::Exponential2: return "exp";
  }
  return "?";
}

std::string hash_string(std::uint64_t h) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

void write_meta(const std::string& out_path, const nlohmann::json& meta) {
  std::ostringstream body;
  body << meta.dump(2) << '\n';
  sda::write_text_file(out_path + ".meta.json", body.str());
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<int> workers, std::optional<std::uint64_t> seed) {
  const auto start = std::chrono::steady_clock::now();
  SimulateSpec spec = parse_simulate_config(config_path);
  if (workers) {
    spec.config.workers = std::max(1, *workers);
  } else if (spec.config.workers < 1) {
    const unsigned hw = std::thread::hardware_concurrency();
    spec.config.workers = hw > 0 ? static_cast<int>(hw) : 1;
  }
  if (seed) spec.config.seed = *seed;

  const std::vector<sda::MetricsRecord> records = sda::run_experiment(spec.config);

  const std::uint64_t config_hash = sda::fnv1a(spec.raw_config);
  std::ostringstream csv;
  csv << "# seed=" << spec.config.seed << " config_hash=" << hash_string(config_hash) << "\n";
  csv << "procedure,structure,rho,dist,n,p,pi1,mu0,alpha,reps,fdr,fdr_se,ap,ap_se,dropped\n";
  nlohmann::json unreliable = nlohmann::json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const sda::MetricsRecord& r = records[i];
    csv << sda::procedure_name(r.procedure) << ',' << structure_name(r.cell.cov.type) << ','
        << sda::format_double(r.cell.cov.rho) << ',' << dist_name(r.cell.law) << ',' << r.cell.n
        << ',' << r.cell.p << ',' << sda::format_double(r.cell.pi1) << ','
        << sda::format_double(r.cell.mu0) << ',' << sda::format_double(r.alpha) << ',' << r.reps
        << ',' << sda::format_double(r.fdr) << ',' << sda::format_double(r.fdr_se) << ','
        << sda::format_double(r.ap) << ',' << sda::format_double(r.ap_se) << ',' << r.dropped
        << "\n";
    if (r.unreliable) unreliable.push_back(i);
  }
  sda::write_text_file(out_path, csv.str());

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json meta;
  meta["command"] = "simulate";
  meta["version"] = kVersion;
  meta["seed"] = spec.config.seed;
  meta["config_hash"] = hash_string(config_hash);
  meta["cells"] = spec.config.cells.size();
  meta["reps"] = spec.config.reps;
  meta["workers"] = spec.config.workers;
  meta["unreliable_rows"] = unreliable;
  meta["wall_time_s"] = wall;
  write_meta(out_path, meta);
  return 0;
}

sda::PrecisionSpec resolve_omega(const std::string& omega_arg, std::size_t p) {
  if (omega_arg == "identity") return sda::PrecisionSpec::identity_working();
  if (omega_arg == "glasso" || omega_arg.empty()) return sda::PrecisionSpec::graphical_lasso();
  const sda::SymMatrix omega = sda::read_csv_sym_matrix(omega_arg);
  if (omega.dim() != p)
    throw sda::InvalidInput("--omega matrix is " + std::to_string(omega.dim()) +
                            "x" + std::to_string(omega.dim()) + ", data has p=" +
                            std::to_string(p));
  return sda::PrecisionSpec::known_matrix(omega);
}

nlohmann::json flags_json(const sda::RunFlags& flags) {
  nlohmann::json j;
  j["ridge_fallback"] = flags.ridge_fallback;
  j["empty_selection"] = flags.empty_selection;
  j["lasso_nonconvergence"] = flags.lasso_nonconvergence;
  return j;
}

void write_selection_outputs(const std::string& out_path, const sda::SdaRun& run,
                             const nlohmann::json& base_meta, std::uint64_t seed,
                             std::uint64_t config_hash) {
  const std::size_t p = run.w_full.size();
  std::vector<char> selected(p, 0);
  for (std::size_t j : run.selection.rejected) selected[j] = 1;

  std::ostringstream csv;
  csv << "# seed=" << seed << " config_hash=" << hash_string(config_hash) << "\n";
  csv << "feature_index,w,selected\n";
  for (std::size_t j = 0; j < p; ++j) {
    csv << j << ',';
    if (std::isnan(run.w_full[j]))
      csv << "NA";
    else
      csv << sda::format_double(run.w_full[j]);
    csv << ',' << int(selected[j]) << "\n";
  }
  sda::write_text_file(out_path, csv.str());

  nlohmann::json meta = base_meta;
  meta["version"] = kVersion;
  meta["seed"] = seed;
  meta["config_hash"] = hash_string(config_hash);
  if (std::isinf(run.selection.threshold))
    meta["threshold"] = nullptr;
  else
    meta["threshold"] = run.selection.threshold;
  meta["fdp_hat"] = run.selection.fdp_hat_at_l;
  meta["n_candidates"] = run.selection.n_candidates;
  meta["n_selected"] = run.selection.rejected.size();
  meta["screened_set_size"] = run.selected_set.size();
  meta["flags"] = flags_json(run.selection.flags);
  write_meta(out_path, meta);
}

struct AnalyzeArgs {
  std::string data_path;
  std::string omega = "glasso";
  double alpha = 0.0;
  bool plus = false;
  int rsda_b = 0;
  std::string t1 = "scaled";
  std::uint64_t seed = 1;
  std::string out_path;
};

int cmd_analyze(const AnalyzeArgs& args) {
  const sda::Matrix data = sda::read_csv_matrix(args.data_path);
  if (data.rows() < 3) throw sda::InvalidInput("analyze: need at least 3 samples (rows)");
  const sda::PrecisionSpec spec = resolve_omega(args.omega, data.cols());

  sda::SdaOptions options;
  options.plus = args.plus;
  options.t1_mode = args.t1 == "raw" ? sda::T1Mode::RawCoefficient : sda::T1Mode::Scaled;

  const std::string fingerprint = "analyze|" + args.omega + "|" +
                                  sda::format_double(args.alpha) + "|" +
                                  (args.plus ? "plus" : "base") + "|" + args.t1 + "|rsda=" +
                                  std::to_string(args.rsda_b);
  const std::uint64_t config_hash = sda::fnv1a(fingerprint);

  nlohmann::json meta;
  meta["command"] = "analyze";
  meta["alpha"] = args.alpha;
  meta["omega"] = args.omega;
  meta["plus"] = args.plus;
  meta["t1"] = args.t1;

  sda::Rng rng(args.seed);
  if (args.rsda_b > 0) {
    const sda::AggregationResult agg =
        sda::run_rsda(data, spec, args.alpha, args.rsda_b, options, rng);
    meta["rsda_b"] = args.rsda_b;
    meta["chosen_run"] = agg.chosen_run;
    meta["majority_set_size"] = agg.majority_set.size();
    write_selection_outputs(args.out_path, agg.final(), meta, args.seed, config_hash);
  } else {
    const sda::SdaRun run = sda::run_sda(data, spec, args.alpha, options, rng);
    write_selection_outputs(args.out_path, run, meta, args.seed, config_hash);
  }
  return 0;
}

struct TwoSampleArgs {
  std::string data_a_path;
  std::string data_b_path;
  std::string omega = "glasso";
  double alpha = 0.0;
  bool plus = false;
  int rsda_b = 0;
  std::string t1 = "scaled";
  std::uint64_t seed = 1;
  std::string out_path;
};

int cmd_two_sample(const TwoSampleArgs& args) {
  const sda::Matrix data_a = sda::read_csv_matrix(args.data_a_path);
  const sda::Matrix data_b = sda::read_csv_matrix(args.data_b_path);
  if (data_a.cols() != data_b.cols())
    throw sda::InvalidInput("two-sample: the groups have different p (" +
                            std::to_string(data_a.cols()) + " vs " +
                            std::to_string(data_b.cols()) + ")");
  if (data_a.rows() < 3 || data_b.rows() < 3)
    throw sda::InvalidInput("two-sample: each group needs at least 3 samples");

  const sda::PrecisionSpec one = resolve_omega(args.omega, data_a.cols());
  const sda::TwoSampleSpecs specs{one, one};

  sda::SdaOptions options;
  options.plus = args.plus;
  options.t1_mode = args.t1 == "raw" ? sda::T1Mode::RawCoefficient : sda::T1Mode::Scaled;

  const std::string fingerprint = "two-sample|" + args.omega + "|" +
                                  sda::format_double(args.alpha) + "|" +
                                  (args.plus ? "plus" : "base") + "|" + args.t1 + "|rsda=" +
                                  std::to_string(args.rsda_b);
  const std::uint64_t config_hash = sda::fnv1a(fingerprint);

  nlohmann::json meta;
  meta["command"] = "two-sample";
  meta["alpha"] = args.alpha;
  meta["omega"] = args.omega;
  meta["plus"] = args.plus;
  meta["t1"] = args.t1;

  sda::Rng rng(args.seed);
  if (args.rsda_b > 0) {
    const sda::AggregationResult agg =
        sda::run_rsda_two_sample(data_a, data_b, specs, args.alpha, args.rsda_b, options, rng);
    meta["rsda_b"] = args.rsda_b;
    meta["chosen_run"] = agg.chosen_run;
    meta["majority_set_size"] = agg.majority_set.size();
    write_selection_outputs(args.out_path, agg.final(), meta, args.seed, config_hash);
  } else {
    const sda::SdaRun run =
        sda::run_two_sample(data_a, data_b, specs, args.alpha, options, rng);
    write_selection_outputs(args.out_path, run, meta, args.seed, config_hash);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDA filter: FDR-controlled feature selection under dependence"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a synthetic experiment grid");
  std::string sim_config, sim_out;
  int sim_workers = 0;
  std::int64_t sim_seed = -1;
  simulate->add_option("--config", sim_config, "INI config file")->required();
  simulate->add_option("--out", sim_out, "output CSV path")->required();
  simulate->add_option("--workers", sim_workers, "worker threads (default: hardware)");
  simulate->add_option("--seed", sim_seed, "override the config seed");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "one-sample analysis of a CSV data matrix");
  AnalyzeArgs a;
  analyze->add_option("--data", a.data_path, "n x p CSV data matrix")->required();
  analyze->add_option("--omega", a.omega, "precision source: <csv>|identity|glasso");
  analyze->add_option("--alpha", a.alpha, "target FDR level in (0,1)")->required();
  analyze->add_flag("--plus", a.plus, "use the conservative (+1) threshold");
  analyze->add_option("--rsda", a.rsda_b, "aggregate over B random splits");
  analyze->add_option("--t1", a.t1, "first-split statistic: scaled|raw");
  analyze->add_option("--seed", a.seed, "random seed for the split");
  analyze->add_option("--out", a.out_path, "output CSV path")->required();

  // two-sample
  auto* two = app.add_subcommand("two-sample", "two-group differential analysis");
  TwoSampleArgs t;
  two->add_option("--data-a", t.data_a_path, "group A CSV data matrix")->required();
  two->add_option("--data-b", t.data_b_path, "group B CSV data matrix")->required();
  two->add_option("--omega", t.omega, "precision source: <csv>|identity|glasso");
  two->add_option("--alpha", t.alpha, "target FDR level in (0,1)")->required();
  two->add_flag("--plus", t.plus, "use the conservative (+1) threshold");
  two->add_option("--rsda", t.rsda_b, "aggregate over B random splits");
  two->add_option("--t1", t.t1, "first-split statistic: scaled|raw");
  two->add_option("--seed", t.seed, "random seed for the splits");
  two->add_option("--out", t.out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(sim_config, sim_out,
                          sim_workers > 0 ? std::optional<int>(sim_workers) : std::nullopt,
                          sim_seed >= 0 ? std::optional<std::uint64_t>(sim_seed) : std::nullopt);
    }
    if (analyze->parsed()) {
      if (!(a.alpha > 0.0 && a.alpha < 1.0))
        throw sda::InvalidInput("--alpha must be in (0,1)");
      if (a.rsda_b < 0) throw sda::InvalidInput("--rsda must be >= 1");
      if (a.t1 != "scaled" && a.t1 != "raw")
        throw sda::InvalidInput("--t1 must be scaled or raw");
      return cmd_analyze(a);
    }
    if (two->parsed()) {
      if (!(t.alpha > 0.0 && t.alpha < 1.0))
        throw sda::InvalidInput("--alpha must be in (0,1)");
      if (t.rsda_b < 0) throw sda::InvalidInput("--rsda must be >= 1");
      if (t.t1 != "scaled" && t.t1 != "raw")
        throw sda::InvalidInput("--t1 must be scaled or raw");
      return cmd_two_sample(t);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sda::CsvError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const sda::InvalidInput& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const sda::NotPSD& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
