// divaudit: batch front end for voting, auditing, trap mining, toy training,
// jury simulation and reporting.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "divaudit/acpo.hpp"
#include "divaudit/errors.hpp"
#include "divaudit/evalharness.hpp"
#include "divaudit/pipeline.hpp"
#include "divaudit/remote.hpp"
#include "divaudit/theory_sim.hpp"
#include "divaudit/trap_miner.hpp"

namespace fs = std::filesystem;
using namespace divaudit;
using json = nlohmann::ordered_json;

namespace {

enum class Kind { Real, Int, Bool, Text, RealList, IntList };

struct Key {
  const char* name;
  Kind kind;
  json fallback;
  const char* help;
};

// Every recognized config key. Flags of the same name override file values.
const std::vector<Key>& config_keys() {
  static const std::vector<Key> keys{
      {"tau", Kind::Real, 0.82, "cosine threshold for merging a step into an existing node"},
      {"rho_ema", Kind::Real, 0.3, "centroid smoothing factor"},
      {"delta_depth", Kind::Int, 3, "depth below which a divergence counts as early"},
      {"window_k", Kind::Int, 3, "evidence steps per branch in a divergence packet"},
      {"lambda_gate", Kind::Real, 0.7, "commit when the judge signal reaches this value"},
      {"beam_k", Kind::Int, 3, "maximum simultaneous lineages"},
      {"hints", Kind::Bool, true, "show support counts to the judge"},
      {"beta", Kind::Real, 0.1, "preference loss temperature"},
      {"seed", Kind::Int, 0, "root seed for every random draw"},
      {"jobs", Kind::Int, 1, "worker threads over the corpus"},
      {"splitter", Kind::Text, "rule", "step splitter: rule or remote"},
      {"min_fragment", Kind::Int, 12, "shorter fragments merge into a neighbour"},
      {"embedder", Kind::Text, "hashing", "step embedder: hashing or remote"},
      {"embedding_dim", Kind::Int, 256, "embedding dimension"},
      {"judge", Kind::Text, "oracle", "judge backend: oracle or remote"},
      {"oracle_q", Kind::Real, 1.0, "oracle probability of picking a gold-bearing branch"},
      {"oracle_alpha", Kind::Real, 1.0, "decisiveness signal emitted by the oracle"},
      {"rubric_fact", Kind::Bool, true, "judge criterion: factual accuracy"},
      {"rubric_logic", Kind::Bool, true, "judge criterion: logical validity"},
      {"rubric_constraint", Kind::Bool, true, "judge criterion: constraint adherence"},
      {"chat_endpoint", Kind::Text, "http://localhost:8000/v1/chat/completions", "chat completion URL"},
      {"chat_model", Kind::Text, "", "chat model name"},
      {"embedding_endpoint", Kind::Text, "http://localhost:8000/v1/embeddings", "embedding URL"},
      {"embedding_model", Kind::Text, "", "embedding model name"},
      {"temperature", Kind::Real, 0.0, "sampling temperature for remote calls"},
      {"max_retries", Kind::Int, 2, "retries for remote calls"},
      {"timeout_ms", Kind::Int, 60000, "per-request timeout"},
      {"epochs", Kind::Int, 200, "toy trainer epochs"},
      {"lr", Kind::Real, 0.5, "toy trainer learning rate"},
      {"batch_size", Kind::Int, 0, "toy trainer batch size, 0 for full batch"},
      {"sim_p", Kind::Real, 0.7, "per-agent correctness probability"},
      {"sim_rhos", Kind::RealList, json::array({0.0, 0.3, 1.0}), "pairwise correctness correlations"},
      {"sim_ns", Kind::IntList, json::array({10, 100, 1000}), "jury sizes"},
      {"sim_trials", Kind::Int, 100000, "Monte Carlo trials per cell"},
      {"sim_q", Kind::Real, 0.8, "auditor discrimination accuracy in the sweep"},
  };
  return keys;
}

const Key& find_key(const std::string& name) {
  for (const auto& k : config_keys())
    if (name == k.name) return k;
  throw ConfigError("unknown config key '" + name + "'");
}

// Checks a JSON value against the key's type; returns it in canonical form.
json coerce(const Key& k, const json& v) {
  const std::string where = std::string("config key '") + k.name + "'";
  switch (k.kind) {
    case Kind::Real:
      if (!v.is_number()) throw ConfigError(where + " must be a number");
      return v.get<double>();
    case Kind::Int:
      if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
      return v.get<std::int64_t>();
    case Kind::Bool:
      if (!v.is_boolean()) throw ConfigError(where + " must be true or false");
      return v;
    case Kind::Text:
      if (!v.is_string()) throw ConfigError(where + " must be a string");
      return v;
    case Kind::RealList:
    case Kind::IntList:
      if (!v.is_array() || v.empty()) throw ConfigError(where + " must be a non-empty array");
      for (const auto& e : v) {
        if (k.kind == Kind::IntList ? !e.is_number_integer() : !e.is_number())
          throw ConfigError(where + " has a non-numeric element");
      }
      return v;
  }
  return v;
}

// Parses a flag's text into the key's type.
json from_flag(const Key& k, const std::string& text) {
  if (k.kind == Kind::Text) return text;
  json v;
  try {
    v = json::parse(k.kind == Kind::RealList || k.kind == Kind::IntList
                        ? (text.empty() || text.front() != '[' ? "[" + text + "]" : text)
                        : text);
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + k.name + "' has unparseable value '" + text + "'");
  }
  return coerce(k, v);
}

std::string default_text(const Key& k) {
  if (k.kind == Kind::Text) return k.fallback.get<std::string>();
  return k.fallback.dump();
}

class Config {
 public:
  Config() {
    for (const auto& k : config_keys()) values_[k.name] = k.fallback;
  }

  void load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path.string() + " must hold a JSON object");
    for (const auto& [name, v] : j.items()) values_[name] = coerce(find_key(name), v);
  }

  void set_flag(const std::string& name, const std::string& text) { values_[name] = from_flag(find_key(name), text); }

  double real(const char* k) const { return values_.at(k).get<double>(); }
  std::int64_t integer(const char* k) const { return values_.at(k).get<std::int64_t>(); }
  std::size_t count(const char* k) const {
    const auto v = integer(k);
    if (v < 0) throw ConfigError(std::string("config key '") + k + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }
  bool flag(const char* k) const { return values_.at(k).get<bool>(); }
  std::string text(const char* k) const { return values_.at(k).get<std::string>(); }
  const json& raw(const char* k) const { return values_.at(k); }

 private:
  std::map<std::string, json> values_;
};

void check_unit(double v, const char* key) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("config key '") + key + "' must lie in [0, 1]");
}

void check_choice(const std::string& v, const char* key, std::initializer_list<const char*> choices) {
  for (const char* c : choices)
    if (v == c) return;
  throw ConfigError(std::string("config key '") + key + "' has unknown value '" + v + "'");
}

TreeConfig tree_config(const Config& c) {
  TreeConfig t;
  t.tau = c.real("tau");
  t.rho_ema = c.real("rho_ema");
  t.delta_depth = static_cast<int>(c.integer("delta_depth"));
  t.validate();
  return t;
}

PolicyConfig policy_config(const Config& c) {
  PolicyConfig p;
  p.lambda_gate = c.real("lambda_gate");
  p.beam_k = c.count("beam_k");
  p.window_k = c.count("window_k");
  p.delta_depth = static_cast<int>(c.integer("delta_depth"));
  p.hints = c.flag("hints");
  p.seed = static_cast<std::uint64_t>(c.integer("seed"));
  p.validate();
  return p;
}

Rubric rubric_config(const Config& c) {
  Rubric r;
  r.fact = c.flag("rubric_fact");
  r.logic = c.flag("rubric_logic");
  r.constraint = c.flag("rubric_constraint");
  r.validate();
  return r;
}

HttpEndpoint endpoint(const Config& c, const char* url_key, const char* model_key, const std::string& api_key) {
  HttpEndpoint e;
  e.url = c.text(url_key);
  e.model = c.text(model_key);
  e.api_key = api_key;
  e.temperature = c.real("temperature");
  e.max_retries = static_cast<int>(c.count("max_retries"));
  e.timeout = std::chrono::milliseconds(c.count("timeout_ms"));
  if (e.model.empty()) throw ConfigError(std::string("config key '") + model_key + "' is required for remote backends");
  return e;
}

// Backends and setup built from one config. Remote pieces are created only
// when selected, and need the API key before any work starts.
struct Runtime {
  std::unique_ptr<Splitter> splitter;
  std::unique_ptr<StepEmbedder> embedder;
  std::shared_ptr<CompletionBackend> chat;
  std::unique_ptr<EmbeddingBackend> embed_client;
  std::unique_ptr<JudgeBackend> judge;
  AuditSetup setup;
  PolicyConfig policy;
  std::size_t jobs = 1;
};

Runtime make_runtime(const Config& c, const std::vector<AgentSlate>& slates, bool needs_judge) {
  Runtime rt;
  const auto splitter = c.text("splitter");
  const auto embedder = c.text("embedder");
  const auto judge = c.text("judge");
  check_choice(splitter, "splitter", {"rule", "remote"});
  check_choice(embedder, "embedder", {"hashing", "remote"});
  check_choice(judge, "judge", {"oracle", "remote"});
  check_unit(c.real("oracle_q"), "oracle_q");
  check_unit(c.real("oracle_alpha"), "oracle_alpha");
  if (c.count("embedding_dim") == 0) throw ConfigError("config key 'embedding_dim' must be positive");
  rt.jobs = c.count("jobs");
  if (rt.jobs == 0) throw ConfigError("config key 'jobs' must be positive");
  rt.policy = policy_config(c);

  const bool remote_chat = splitter == "remote" || (needs_judge && judge == "remote");
  const bool remote_embed = embedder == "remote";
  std::string key;
  if (remote_chat || remote_embed) key = api_key_from_env();

  if (remote_chat) rt.chat = std::make_shared<HttpChatClient>(endpoint(c, "chat_endpoint", "chat_model", key));
  if (splitter == "remote") {
    rt.splitter = std::make_unique<RemoteSplitter>(*rt.chat, c.count("min_fragment"));
  } else {
    rt.splitter = std::make_unique<RuleSplitter>(c.count("min_fragment"));
  }
  if (remote_embed) {
    rt.embed_client = std::make_unique<HttpEmbeddingClient>(endpoint(c, "embedding_endpoint", "embedding_model", key));
    rt.embedder = std::make_unique<RemoteEmbedder>(*rt.embed_client, c.count("embedding_dim"));
  } else {
    rt.embedder = std::make_unique<HashingEmbedder>(c.count("embedding_dim"));
  }
  if (needs_judge) {
    if (judge == "remote") {
      rt.judge = std::make_unique<RemoteJudge>(rt.chat, static_cast<int>(c.count("max_retries")));
    } else {
      std::map<std::string, NormalizedAnswer> gold;
      for (const auto& s : slates)
        if (auto g = s.gold()) gold.emplace(s.id, *g);
      OracleParams op{c.real("oracle_q"), c.real("oracle_alpha"), static_cast<std::uint64_t>(c.integer("seed"))};
      rt.judge = std::make_unique<ScriptedOracle>(op, std::move(gold));
    }
  }
  rt.setup = AuditSetup{rt.splitter.get(), rt.embedder.get(), tree_config(c), rubric_config(c)};
  return rt;
}

// Writes next to the target and renames, so a failed run leaves no partial file.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw IoError("cannot write " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot write " + path.string() + ": " + ec.message());
  }
}

struct Common {
  std::string config;
  std::map<std::string, std::string> flags;
};

Config resolve(const Common& common, const std::vector<std::pair<std::string, CLI::Option*>>& options) {
  Config c;
  if (!common.config.empty()) c.load_file(common.config);
  for (const auto& [name, opt] : options) {
    if (opt->count() > 0) c.set_flag(name, common.flags.at(name));
  }
  return c;
}

struct Subcommand {
  CLI::App* app;
  Common common{};
  std::vector<std::pair<std::string, CLI::Option*>> options{};
};

void add_config_options(Subcommand& s) {
  s.app->add_option("--config", s.common.config, "flat JSON config file");
  for (const auto& k : config_keys()) {
    std::string& slot = s.common.flags[k.name];
    auto* opt = s.app->add_option(std::string("--") + k.name, slot,
                                  std::string(k.help) + " [default: " + default_text(k) + "]");
    opt->group("Config keys");
    s.options.emplace_back(k.name, opt);
  }
}

std::string records_jsonl(const std::vector<InstanceRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json_line(r) + "\n";
  return out;
}

int run_aggregate(const Config& c, Method method, const std::string& in, const std::string& out,
                  const std::string& records_path) {
  const auto slates = load_slates(in);
  const bool needs_judge = method != Method::MV;
  auto rt = make_runtime(c, slates, needs_judge);
  RunOptions opts;
  opts.methods = {method};
  opts.jobs = rt.jobs;
  const auto runs = run_methods(slates, rt.setup, rt.policy, rt.judge.get(), opts);
  const auto& results = runs.at(0).results;
  for (const auto& r : results) {
    if (!r.error.empty() && needs_judge) throw BackendError(r.instance_id + ": " + r.error);
  }
  const auto records = join_results(results, slates);
  write_atomic(out, report_json(score_records(records)) + "\n");
  if (!records_path.empty()) write_atomic(records_path, records_jsonl(records));
  return 0;
}

int run_mine(const Config& c, const std::string& in, const std::string& out) {
  const auto slates = load_slates(in);
  auto rt = make_runtime(c, slates, false);
  const auto mined = mine_traps(slates, rt.setup, rt.policy.window_k);
  std::string text;
  for (const auto& t : mined.triplets) text += triplet_to_json_line(t) + "\n";
  write_atomic(out, text);
  std::cout << skip_stats_json(mined.skips) << "\n";
  return 0;
}

int run_train(const Config& c, const std::string& traps, const std::string& eval, const std::string& out,
              const std::string& history) {
  TrainOptions opt;
  opt.epochs = c.count("epochs");
  opt.lr = c.real("lr");
  opt.beta = c.real("beta");
  opt.seed = static_cast<std::uint64_t>(c.integer("seed"));
  opt.batch_size = c.count("batch_size");
  if (!(opt.beta > 0.0)) throw ConfigError("config key 'beta' must be positive");
  if (!(opt.lr >= 0.0)) throw ConfigError("config key 'lr' must be non-negative");
  const auto train = load_triplets(traps);
  std::vector<PreferenceTriplet> held;
  if (!eval.empty()) held = load_triplets(eval);
  const auto r = train_toy(train, opt, eval.empty() ? nullptr : &held);
  write_atomic(out, r.model.to_json() + "\n");
  if (!history.empty()) write_atomic(history, history_csv(r.history));
  const auto& last = r.history.back();
  std::printf("epochs %zu, final loss %.6f, accuracy %.4f\n", last.epoch, last.mean_loss, last.accuracy);
  return 0;
}

int run_simulate(const Config& c, const std::string& out) {
  SweepConfig s;
  s.p_correct = c.real("sim_p");
  s.rhos = c.raw("sim_rhos").get<std::vector<double>>();
  s.ns.clear();
  for (const auto& n : c.raw("sim_ns")) {
    if (n.get<std::int64_t>() <= 0) throw ConfigError("config key 'sim_ns' must hold positive sizes");
    s.ns.push_back(n.get<std::size_t>());
  }
  s.trials = c.count("sim_trials");
  s.seed = static_cast<std::uint64_t>(c.integer("seed"));
  s.q = c.real("sim_q");
  s.jobs = c.count("jobs");
  check_unit(s.p_correct, "sim_p");
  check_unit(s.q, "sim_q");
  for (double r : s.rhos) check_unit(r, "sim_rhos");
  if (s.trials < 2) throw ConfigError("config key 'sim_trials' must be at least 2");
  if (s.jobs == 0) throw ConfigError("config key 'jobs' must be positive");
  write_atomic(out, sweep_csv(run_sweep(s)));
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<MethodScore> scores;
  for (const auto& path : inputs) {
    const auto records = load_records(path);
    std::map<Method, std::vector<InstanceRecord>> by_method;
    for (const auto& r : records) by_method[r.method].push_back(r);
    for (const auto& [m, rs] : by_method) scores.push_back(score_records(rs));
  }
  const auto csv = report_csv(scores);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_atomic(out, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"divaudit: audit multi-agent reasoning slates at their divergence points"};
  app.require_subcommand(1);

  std::string in, out, records, eval, history;
  std::vector<std::string> inputs;

  Subcommand vote{app.add_subcommand("vote", "majority vote over each slate")};
  vote.app->add_option("--in", in, "slates, JSON Lines")->required();
  vote.app->add_option("--out", out, "report JSON")->required();
  vote.app->add_option("--records", records, "per-instance records, JSON Lines");
  add_config_options(vote);

  Subcommand audit{app.add_subcommand("audit", "tree auditing with commit/defer beam traversal")};
  audit.app->add_option("--in", in, "slates, JSON Lines")->required();
  audit.app->add_option("--out", out, "report JSON")->required();
  audit.app->add_option("--records", records, "per-instance records, JSON Lines");
  add_config_options(audit);

  Subcommand judge{app.add_subcommand("judge", "one judge call over all full traces")};
  judge.app->add_option("--in", in, "slates, JSON Lines")->required();
  judge.app->add_option("--out", out, "report JSON")->required();
  judge.app->add_option("--records", records, "per-instance records, JSON Lines");
  add_config_options(judge);

  Subcommand mine{app.add_subcommand("mine-traps", "preference triplets from majority-failure slates")};
  mine.app->add_option("--in", in, "slates, JSON Lines")->required();
  mine.app->add_option("--out", out, "triplets, JSON Lines")->required();
  add_config_options(mine);

  Subcommand train{app.add_subcommand("train-toy", "train the linear preference model on mined triplets")};
  train.app->add_option("--traps", in, "training triplets, JSON Lines")->required();
  train.app->add_option("--eval", eval, "held-out triplets, JSON Lines");
  train.app->add_option("--out", out, "model JSON")->required();
  train.app->add_option("--history", history, "per-epoch loss and accuracy CSV");
  add_config_options(train);

  Subcommand simulate{app.add_subcommand("simulate", "Monte Carlo sweep of correlated majority voting")};
  simulate.app->add_option("--out", out, "sweep CSV")->required();
  add_config_options(simulate);

  Subcommand report{app.add_subcommand("report", "accuracy and token table from record files")};
  report.app->add_option("records", inputs, "record files written with --records")->required();
  report.app->add_option("--out", out, "table CSV (stdout when omitted)");
  add_config_options(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (vote.app->parsed()) return run_aggregate(resolve(vote.common, vote.options), Method::MV, in, out, records);
    if (audit.app->parsed())
      return run_aggregate(resolve(audit.common, audit.options), Method::Auditor, in, out, records);
    if (judge.app->parsed()) return run_aggregate(resolve(judge.common, judge.options), Method::Judge, in, out, records);
    if (mine.app->parsed()) return run_mine(resolve(mine.common, mine.options), in, out);
    if (train.app->parsed()) return run_train(resolve(train.common, train.options), in, eval, out, history);
    if (simulate.app->parsed()) return run_simulate(resolve(simulate.common, simulate.options), out);
    if (report.app->parsed()) {
      resolve(report.common, report.options);
      return run_report(inputs, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
