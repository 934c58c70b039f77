#include "etd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "etd/dataset.hpp"
#include "etd/digest.hpp"
#include "etd/error.hpp"
#include "etd/eval.hpp"
#include "etd/features.hpp"
#include "etd/pipeline.hpp"
#include "etd/random.hpp"

namespace etd {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Options that can also come from a JSON config file. Flags given on the
// command line win over config values.
class OptionTable {
 public:
  explicit OptionTable(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON config file (keys are option names)");
  }

  template <typename T>
  CLI::Option* add(const std::string& key, T& var, const std::string& desc) {
    auto* opt = app_->add_option("--" + key, var, desc);
    bind(key, opt, var);
    return opt;
  }

  CLI::Option* positional(const std::string& key, std::vector<std::string>& var, const std::string& desc) {
    auto* opt = app_->add_option(key, var, desc);
    bind(key, opt, var);
    return opt;
  }

  CLI::Option* flag(const std::string& key, bool& var, const std::string& desc) {
    auto* opt = app_->add_flag("--" + key + ",!--no-" + key, var, desc);
    bind(key, opt, var);
    return opt;
  }

  void apply_config() {
    if (config_path_.empty()) return;
    std::ifstream in(config_path_);
    if (!in) throw UsageError("cannot read config " + config_path_);
    nlohmann::json cfg;
    try {
      cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config " + config_path_ + ": " + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config must be a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      auto e = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& x) { return x.key == it.key(); });
      if (e == entries_.end()) throw UsageError("unknown config key '" + it.key() + "'");
      if (e->option->count() > 0) continue;
      try {
        e->set(it.value());
      } catch (const nlohmann::json::exception&) {
        throw UsageError("config key '" + it.key() + "' has the wrong type");
      }
      e->from_config = true;
    }
  }

  bool given(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.key == key) return e.from_config || e.option->count() > 0;
    return false;
  }

  ojson resolved() const {
    ojson j = ojson::object();
    for (const auto& e : entries_) j[e.key] = e.get();
    return j;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* option;
    std::function<void(const nlohmann::json&)> set;
    std::function<ojson()> get;
    bool from_config = false;
  };

  template <typename T>
  void bind(const std::string& key, CLI::Option* opt, T& var) {
    entries_.push_back({key, opt, [&var](const nlohmann::json& j) { var = j.get<T>(); }, [&var] { return ojson(var); }});
  }

  CLI::App* app_;
  std::string config_path_;
  std::vector<Entry> entries_;
};

ojson file_entry(const fs::path& path, const std::string& name) {
  return {{"path", name}, {"sha256", sha256_file_hex(path)}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << text;
}

ojson manifest_header(const char* command, const OptionTable& table) {
  ojson m;
  m["tool"] = "etd";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["config"] = table.resolved();
  return m;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<Algorithm> parse_algorithms(const std::string& text) {
  std::vector<Algorithm> out;
  if (text == "all" || text == "ALL") return {all_algorithms().begin(), all_algorithms().end()};
  for (const auto& name : split(text, ',')) {
    const auto a = parse_algorithm(name);
    if (!a) throw UsageError("unknown algorithm '" + name + "'");
    out.push_back(*a);
  }
  if (out.empty()) throw UsageError("no algorithm given");
  return out;
}

std::vector<FeatureSetName> parse_sets(const std::string& text) {
  if (text == "all" || text == "ALL") return {numeric_feature_sets().begin(), numeric_feature_sets().end()};
  std::vector<FeatureSetName> out;
  for (const auto& name : split(text, ',')) {
    const auto s = parse_feature_set(name);
    if (!s) throw UsageError("unknown feature set '" + name + "'");
    out.push_back(*s);
  }
  if (out.empty()) throw UsageError("no feature set given");
  return out;
}

// ALGO.key=value, value parsed as JSON when possible.
std::map<Algorithm, nlohmann::json> parse_params(const std::vector<std::string>& params) {
  std::map<Algorithm, nlohmann::json> out;
  for (const auto& p : params) {
    const auto dot = p.find('.');
    const auto eq = p.find('=');
    if (dot == std::string::npos || eq == std::string::npos || eq < dot)
      throw UsageError("--param expects ALGO.key=value, got '" + p + "'");
    const auto a = parse_algorithm(p.substr(0, dot));
    if (!a) throw UsageError("unknown algorithm in --param '" + p + "'");
    const auto key = p.substr(dot + 1, eq - dot - 1);
    const auto raw = p.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    out[*a][key] = value;
  }
  for (const auto& [a, ov] : out) {
    try {
      ModelSpec::make(a, 0, ov);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

std::map<std::string, int> read_label_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read " + path);
  std::map<std::string, int> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("BadCsv", path + ": expected session_id,label");
    const auto id = line.substr(0, comma);
    const auto label = line.substr(comma + 1);
    if (first && (label != "0" && label != "1")) {
      first = false;
      continue;  // header
    }
    first = false;
    if (label != "0" && label != "1") throw Error("BadLabel", path + ": label '" + label + "'");
    out[id] = label == "1" ? 1 : 0;
  }
  return out;
}

struct ExtractArgs {
  std::vector<std::string> pcaps;
  int label = 0;
  std::string source = "unknown";
  std::size_t window = kDefaultWindowSize;
  bool encrypted_only = true;
  std::string out;
  std::string labels;
  std::string sessions;
  std::string logs;
  std::string manifest;
  std::size_t threads = 1;
  double idle_timeout = 300.0;
};

int cmd_extract(const ExtractArgs& a, const OptionTable& table, std::ostream& out, std::ostream& err) {
  if (a.out.empty()) throw UsageError("--out is required");
  ExtractOptions o;
  o.window_size = a.window;
  o.encrypted_only = a.encrypted_only;
  o.label = a.label;
  o.source = a.source;
  o.threads = a.threads;
  o.assembler.idle_timeout_s = a.idle_timeout;
  if (!a.labels.empty()) o.session_labels = read_label_sidecar(a.labels);
  std::vector<fs::path> paths(a.pcaps.begin(), a.pcaps.end());
  const auto result = extract_features(paths, o);

  write_csv_file(a.out, result.dataset);
  ojson outputs = ojson::array();
  outputs.push_back(file_entry(a.out, a.out));
  if (!a.sessions.empty()) {
    std::string text;
    for (const auto& line : result.session_json) text += line + "\n";
    write_text(a.sessions, text);
    outputs.push_back(file_entry(a.sessions, a.sessions));
  }
  if (!a.logs.empty()) {
    fs::create_directories(a.logs);
    const auto write_log = [&](const char* name, auto&& writer) {
      const auto path = fs::path(a.logs) / name;
      std::ofstream f(path, std::ios::binary);
      if (!f) throw Error("IoError", "cannot write " + path.string());
      writer(f);
      f.close();
      outputs.push_back(file_entry(path, path.string()));
    };
    write_log("conn.log", [&](std::ostream& f) { write_conn_log(f, result.conns); });
    write_log("ssl.log", [&](std::ostream& f) { write_ssl_log(f, result.ssls); });
    write_log("x509.log", [&](std::ostream& f) { write_x509_log(f, result.certs); });
  }

  auto m = manifest_header("extract", table);
  m["catalog_version"] = FeatureCatalog::full().version_for_window(a.window);
  m["fots_version"] = "etd-fots-1";
  ojson inputs = ojson::array();
  for (const auto& p : a.pcaps) inputs.push_back(file_entry(p, p));
  if (!a.labels.empty()) inputs.push_back(file_entry(a.labels, a.labels));
  m["inputs"] = inputs;
  ojson captures = ojson::array();
  for (const auto& c : result.captures) {
    ojson cj;
    cj["path"] = c.path;
    cj["frames"] = c.frames;
    cj["kept_packets"] = c.kept_packets;
    cj["dropped"] = c.dropped;
    cj["sessions"] = c.sessions;
    cj["tls_sessions"] = c.tls_sessions;
    cj["malformed_handshakes"] = c.malformed_handshakes;
    cj["truncation_notice"] = c.truncation_notice ? ojson(*c.truncation_notice) : ojson(nullptr);
    captures.push_back(cj);
    if (c.truncation_notice) err << "warning: " << c.path << ": " << *c.truncation_notice << '\n';
  }
  m["captures"] = captures;
  m["rows"] = result.dataset.rows.size();
  m["bad_certificates"] = result.bad_certificates;
  m["outputs"] = outputs;
  write_text(a.manifest.empty() ? a.out + ".manifest.json" : a.manifest, m.dump(2) + "\n");
  err << "extract: " << result.dataset.rows.size() << " rows from " << a.pcaps.size() << " capture(s)\n";
  (void)out;
  return 0;
}

struct ComposeArgs {
  std::string plan;
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  bool dedup = true;
  std::string out;
  std::string manifest;
};

int cmd_compose(const ComposeArgs& a, const OptionTable& table, std::ostream& err) {
  if (a.plan.empty() || a.out.empty()) throw UsageError("--plan and --out are required");
  std::ifstream pin(a.plan);
  if (!pin) throw Error("IoError", "cannot read " + a.plan);
  CompositionPlan plan;
  try {
    plan = CompositionPlan::from_json(nlohmann::json::parse(pin));
  } catch (const nlohmann::json::exception& e) {
    throw Error("BadPlan", a.plan + ": " + e.what());
  }
  plan.seed = a.seed;

  std::vector<std::string> columns;
  std::map<std::string, std::vector<LabeledRow>> sources;
  ojson inputs = ojson::array();
  inputs.push_back(file_entry(a.plan, a.plan));
  for (const auto& spec : a.inputs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--inputs expects SOURCE=features.csv, got '" + spec + "'");
    const auto name = spec.substr(0, eq);
    const auto path = spec.substr(eq + 1);
    auto d = read_csv_file(path);
    if (columns.empty()) {
      columns = d.columns;
    } else if (d.columns != columns) {
      throw Error("CatalogMismatch", path + ": columns differ from the first input");
    }
    auto& rows = sources[name];
    for (auto& r : d.rows) rows.push_back(std::move(r));
    inputs.push_back(file_entry(path, path));
  }
  ojson dedup_info = ojson::object();
  if (a.dedup) {
    for (auto& [name, rows] : sources) {
      auto r = deduplicate(rows);
      dedup_info[name] = {{"removed", r.removed_count}, {"conflicts", r.conflict_count}};
      rows = std::move(r.rows);
    }
  }
  Dataset out{columns, compose(sources, plan)};
  write_csv_file(a.out, out);

  auto m = manifest_header("compose", table);
  m["plan"] = plan.to_json();
  m["inputs"] = inputs;
  m["dedup"] = dedup_info;
  ojson counts = ojson::object();
  for (const auto& r : out.rows) {
    auto& c = counts[r.source_dataset];
    if (c.is_null()) c = {{"malicious", 0}, {"legitimate", 0}};
    c[r.label == 1 ? "malicious" : "legitimate"] = c[r.label == 1 ? "malicious" : "legitimate"].get<std::size_t>() + 1;
  }
  m["rows"] = out.rows.size();
  m["rows_by_source"] = counts;
  m["outputs"] = ojson::array({file_entry(a.out, a.out)});
  write_text(a.manifest.empty() ? a.out + ".manifest.json" : a.manifest, m.dump(2) + "\n");
  err << "compose: " << out.rows.size() << " rows\n";
  return 0;
}

struct PlanArgs {
  double scale = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_plan(const PlanArgs& a, std::ostream& out) {
  if (!(a.scale >= 0.0)) throw UsageError("--scale must be >= 0");
  const auto text = reference_composition_plan(a.scale, a.seed).to_json().dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_text(a.out, text);
  }
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string algo = "all";
  std::string set = "all";
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t threads = 1;
  std::vector<std::string> params;
};

int cmd_eval(const EvalArgs& a, const OptionTable& table, std::ostream& out, std::ostream& err) {
  if (a.data.empty() || a.out.empty()) throw UsageError("--data and --out are required");
  GridOptions g;
  g.algorithms = parse_algorithms(a.algo);
  g.sets = parse_sets(a.set);
  g.k = a.k;
  g.seed = a.seed;
  g.threads = a.threads;
  g.overrides = parse_params(a.params);
  const auto data = read_csv_file(a.data);
  g.dataset_ref = sha256_file_hex(a.data);
  const auto result = experiment_grid(data, g);
  const auto plan = stratified_kfold(data.labels(), a.k, derive_seed(a.seed, "folds"));

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const auto md = result.to_markdown();
  write_text(dir / "reports.json", result.to_json().dump(2) + "\n");
  write_text(dir / "table.md", md);
  write_text(dir / "table.csv", result.to_csv());
  write_text(dir / "folds.json", plan.to_json().dump() + "\n");

  auto m = manifest_header("eval", table);
  m["seeds"] = {{"master", a.seed}, {"folds", plan.seed}};
  m["inputs"] = ojson::array({file_entry(a.data, a.data)});
  m["rows"] = data.rows.size();
  ojson outputs = ojson::array();
  for (const char* name : {"reports.json", "table.md", "table.csv", "folds.json"})
    outputs.push_back(file_entry(dir / name, name));
  m["outputs"] = outputs;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  out << md;
  err << "eval: " << result.reports.size() << " report(s) in " << dir.string() << '\n';
  return 0;
}

struct CrossArgs {
  std::string data;
  std::string algo = "RF";
  std::string set = "FOS";
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> params;
};

int cmd_crossdataset(const CrossArgs& a, const OptionTable& table, std::ostream& out, std::ostream& err) {
  if (a.data.empty()) throw UsageError("--data is required");
  const auto algos = parse_algorithms(a.algo);
  const auto sets = parse_sets(a.set);
  if (algos.size() != 1 || sets.size() != 1) throw UsageError("crossdataset takes one algorithm and one feature set");
  const auto overrides = parse_params(a.params);
  const auto ov = overrides.find(algos[0]);
  const auto spec = ModelSpec::make(algos[0], derive_seed(a.seed, std::string("model/") + to_string(algos[0])),
                                    ov == overrides.end() ? nlohmann::json::object() : ov->second);
  const auto data = read_csv_file(a.data);
  const auto reports = run_cross_dataset(spec, data, sets[0], a.seed);
  const auto md = render_cross_markdown(reports);
  out << md;
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    fs::create_directories(dir);
    ojson j = ojson::array();
    for (const auto& r : reports) j.push_back(r.to_json());
    write_text(dir / "cross.json", j.dump(2) + "\n");
    write_text(dir / "cross.md", md);
    auto m = manifest_header("crossdataset", table);
    m["seeds"] = {{"master", a.seed}, {"model", spec.seed}};
    m["inputs"] = ojson::array({file_entry(a.data, a.data)});
    m["rows"] = data.rows.size();
    m["outputs"] = ojson::array({file_entry(dir / "cross.json", "cross.json"), file_entry(dir / "cross.md", "cross.md")});
    write_text(dir / "manifest.json", m.dump(2) + "\n");
  }
  err << "crossdataset: " << reports.size() << " direction(s)\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Encrypted-traffic feature extraction and detector evaluation", "etd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto* extract = app.add_subcommand("extract", "Captures -> per-session feature CSV");
  ExtractArgs ea;
  OptionTable et(extract);
  et.positional("pcaps", ea.pcaps, "PCAP/PCAPNG inputs")->required();
  et.add("label", ea.label, "Label for every session (0 legitimate, 1 malicious)")->check(CLI::Range(0, 1));
  et.add("source", ea.source, "source_dataset value");
  et.add("window", ea.window, "Packet window size")->check(CLI::PositiveNumber);
  et.flag("encrypted-only", ea.encrypted_only, "Keep only TLS sessions (default on)");
  et.add("out", ea.out, "Feature CSV path");
  et.add("labels", ea.labels, "Per-session label sidecar CSV (session_id,label)");
  et.add("sessions", ea.sessions, "Session summary JSONL path");
  et.add("logs", ea.logs, "Directory for conn/ssl/x509 logs");
  et.add("manifest", ea.manifest, "Manifest path (default <out>.manifest.json)");
  et.add("threads", ea.threads, "Captures processed in parallel");
  et.add("idle-timeout", ea.idle_timeout, "Idle timeout in seconds");

  auto* compose_cmd = app.add_subcommand("compose", "Sample a composed dataset from per-source CSVs");
  ComposeArgs ca;
  OptionTable ct(compose_cmd);
  ct.add("plan", ca.plan, "Composition plan JSON");
  ct.add("inputs", ca.inputs, "SOURCE=features.csv (repeatable)");
  ct.add("seed", ca.seed, "Master seed");
  ct.flag("dedup", ca.dedup, "Deduplicate each source first (default on)");
  ct.add("out", ca.out, "Composed CSV path");
  ct.add("manifest", ca.manifest, "Manifest path (default <out>.manifest.json)");

  auto* plan_cmd = app.add_subcommand("plan", "Write the reference five-source composition plan");
  PlanArgs pa;
  OptionTable pt(plan_cmd);
  pt.add("scale", pa.scale, "Scale factor for every session count");
  pt.add("seed", pa.seed, "Seed stored in the plan");
  pt.add("out", pa.out, "Output path (default stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "Stratified k-fold grid over algorithms and feature sets");
  EvalArgs va;
  OptionTable vt(eval_cmd);
  vt.add("data", va.data, "Composed feature CSV");
  vt.add("algo", va.algo, "Algorithm name, comma list, or all");
  vt.add("set", va.set, "Feature set name, comma list, or all");
  vt.add("k", va.k, "Folds")->check(CLI::Range(2, 1000));
  vt.add("seed", va.seed, "Master seed");
  vt.add("out", va.out, "Report directory");
  vt.add("threads", va.threads, "Grid cells evaluated in parallel");
  vt.add("param", va.params, "Hyperparameter override ALGO.key=value (repeatable)");

  auto* cross_cmd = app.add_subcommand("crossdataset", "Leave-one-source-out validation in both directions");
  CrossArgs xa;
  OptionTable xt(cross_cmd);
  xt.add("data", xa.data, "Composed feature CSV with at least two sources");
  xt.add("algo", xa.algo, "Algorithm name");
  xt.add("set", xa.set, "Feature set name");
  xt.add("seed", xa.seed, "Master seed");
  xt.add("out", xa.out, "Report directory (optional)");
  xt.add("param", xa.params, "Hyperparameter override ALGO.key=value (repeatable)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (extract->parsed()) {
      et.apply_config();
      return cmd_extract(ea, et, out, err);
    }
    if (compose_cmd->parsed()) {
      ct.apply_config();
      return cmd_compose(ca, ct, err);
    }
    if (plan_cmd->parsed()) {
      pt.apply_config();
      return cmd_plan(pa, out);
    }
    if (eval_cmd->parsed()) {
      vt.apply_config();
      return cmd_eval(va, vt, out, err);
    }
    if (cross_cmd->parsed()) {
      xt.apply_config();
      return cmd_crossdataset(xa, xt, out, err);
    }
  } catch (const UsageError& e) {
    err << "etd: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "etd: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "etd: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace etd
